//! Weighted manifolds `(Sigma, h, mu)` with `dmu = rho sqrt|h| d^3x`, their
//! Dirichlet-Laplace operator
//!
//! `Delta f = (rho sqrt|h|)^-1 d_i(rho sqrt|h| h^ij d_j f)`
//!
//! and the conformal rescaling `h -> alpha h`, `mu -> alpha mu`.

use crate::error::{Error, Result};
use crate::field::{ChartBox, SampleGrid, ScalarField, ScalarRule, SymMetricField};
use crate::jet::{Jet2, Scalar};
use crate::linalg::Sym3;

#[derive(Clone, Debug)]
pub struct WeightedManifold {
    pub metric: SymMetricField,
    pub density: ScalarField,
    pub domain: ChartBox,
}

/// Value-only flux data at a point: `mu = rho sqrt|h|` and `C = mu h^-1`.
#[derive(Clone, Copy, Debug)]
pub struct FluxCoefficients {
    pub measure: f64,
    pub flux: Sym3<f64>,
}

impl WeightedManifold {
    pub fn new(metric: SymMetricField, density: ScalarField, domain: ChartBox) -> Self {
        Self { metric, density, domain }
    }

    pub fn flat(domain: ChartBox) -> Self {
        Self::new(SymMetricField::euclidean(), ScalarField::constant(1.0), domain)
    }

    fn checked_parts<T: Scalar>(&self, p: [f64; 3]) -> Result<(Sym3<T>, T, T)> {
        let h: Sym3<T> = self.metric.sample(p)?;
        if !h.values().is_positive_definite() {
            return Err(Error::NotPositiveDefinite { what: "weighted-manifold metric", point: p });
        }
        let rho: T = self.density.sample(p)?;
        if rho.value() <= 0.0 {
            return Err(Error::NonPositive { what: "density", point: p, value: rho.value() });
        }
        let det = h.det();
        Ok((h, det, rho))
    }

    /// Measure density `rho sqrt|h|` with respect to `d^3x`.
    pub fn measure_density(&self, p: [f64; 3]) -> Result<f64> {
        let (_, det, rho) = self.checked_parts::<f64>(p)?;
        Ok(rho * det.sqrt())
    }

    pub fn flux_coefficients(&self, p: [f64; 3]) -> Result<FluxCoefficients> {
        let (h, det, rho) = self.checked_parts::<f64>(p)?;
        let measure = rho * det.sqrt();
        let inv = h.inverse().ok_or(Error::Degenerate { what: "metric", point: p, value: det })?;
        Ok(FluxCoefficients { measure, flux: inv.scale(measure) })
    }

    /// The Laplacian of a function given by its jet at `p`.
    pub fn laplacian_of_jet(&self, u: &Jet2, p: [f64; 3]) -> Result<f64> {
        let (h, det, rho) = self.checked_parts::<Jet2>(p)?;
        let inv = h.inverse().ok_or(Error::Degenerate { what: "metric", point: p, value: det.value })?;
        let mu = rho * det.sqrt();
        let mut principal = 0.0;
        let mut drift = 0.0;
        for j in 0..3 {
            let mut div = 0.0;
            for i in 0..3 {
                let hij = inv.get(i, j);
                principal += hij.value * u.hessian(i, j);
                // d_i (mu h^ij) = mu d_i h^ij + h^ij d_i mu
                div += mu.value * hij.grad[i] + hij.value * mu.grad[i];
            }
            drift += div * u.grad[j];
        }
        Ok(principal + drift / mu.value)
    }

    pub fn apply_weighted_laplacian(&self, f: &ScalarField, p: [f64; 3]) -> Result<f64> {
        self.laplacian_of_jet(&f.jet(p)?, p)
    }

    /// Rescale by a positive function: metric `alpha h`, measure `alpha mu`.
    /// Positivity of `alpha` is checked on a 9^3 sample of the domain.
    pub fn conformal_rescale(&self, alpha: &ScalarField) -> Result<WeightedManifold> {
        let grid = SampleGrid::new(self.domain, [9, 9, 9])?;
        for p in grid.nodes() {
            let a = alpha.value(p)?;
            if !(a > 0.0) {
                return Err(Error::NonPositive { what: "conformal factor", point: p, value: a });
            }
        }
        struct Density {
            metric: SymMetricField,
            density: ScalarField,
            alpha: ScalarField,
        }
        impl ScalarRule for Density {
            fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
                let a: T = self.alpha.sample(p)?;
                let h: Sym3<T> = self.metric.sample(p)?;
                let rho: T = self.density.sample(p)?;
                let det = h.det();
                let det_scaled = h.scale(a).det();
                Ok(a * rho * det.sqrt() / det_scaled.sqrt())
            }
        }
        Ok(WeightedManifold {
            metric: self.metric.conformal(alpha),
            density: ScalarField::from_rule(Density {
                metric: self.metric.clone(),
                density: self.density.clone(),
                alpha: alpha.clone(),
            }),
            domain: self.domain,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box() -> ChartBox {
        ChartBox::new([-1.0; 3], [1.0; 3]).unwrap()
    }

    #[test]
    fn flat_laplacian_of_square() {
        let wm = WeightedManifold::flat(unit_box());
        let f = ScalarField::from_jet_fn(|[x, _, _]| x * x);
        assert_eq!(wm.apply_weighted_laplacian(&f, [0.2, 0.1, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn gaussian_density_adds_drift() {
        let wm = WeightedManifold::new(
            SymMetricField::euclidean(),
            ScalarField::from_jet_fn(|[x, _, _]| (-(x * x)).exp()),
            unit_box(),
        );
        let f = ScalarField::from_jet_fn(|[x, y, z]| x.sin() * y.exp() + z * z * x);
        for p in [[0.3, -0.2, 0.5], [-0.8, 0.4, 0.1]] {
            let [x, y, z] = p;
            // Euclidean Laplacian and d_x of f, by hand.
            let lap = -x.sin() * y.exp() + x.sin() * y.exp() + 2.0 * x;
            let fx = x.cos() * y.exp() + z * z;
            let want = lap - 2.0 * x * fx;
            let got = wm.apply_weighted_laplacian(&f, p).unwrap();
            assert!((got - want).abs() < 1e-13, "{got} {want}");
        }
    }

    #[test]
    fn constant_scaled_metric() {
        let wm = WeightedManifold::new(
            SymMetricField::constant(Sym3::identity().scale(2.5)),
            ScalarField::constant(1.0),
            unit_box(),
        );
        let f = ScalarField::from_jet_fn(|[x, y, z]| x * x + y * y + z * z);
        let got = wm.apply_weighted_laplacian(&f, [0.1, 0.2, 0.3]).unwrap();
        assert!((got - 6.0 / 2.5).abs() < 1e-14);
    }

    #[test]
    fn rescale_by_four() {
        let wm = WeightedManifold::flat(unit_box());
        let r = wm.conformal_rescale(&ScalarField::constant(4.0)).unwrap();
        assert_eq!(r.density.value([0.0; 3]).unwrap(), 0.5);
        let f = ScalarField::from_jet_fn(|[x, _, _]| x * x);
        assert_eq!(r.apply_weighted_laplacian(&f, [0.3, 0.0, 0.0]).unwrap(), 0.5);
        let same = wm.conformal_rescale(&ScalarField::constant(1.0)).unwrap();
        assert_eq!(same.apply_weighted_laplacian(&f, [0.3, 0.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn rescale_rejects_nonpositive_factor() {
        let wm = WeightedManifold::flat(unit_box());
        let err = wm.conformal_rescale(&ScalarField::from_jet_fn(|[x, _, _]| x)).unwrap_err();
        assert!(matches!(err, Error::NonPositive { .. }));
        assert!(err.location().unwrap()[0] <= 0.0);
    }

    proptest! {
        #[test]
        fn conformal_law_and_measure(
            c in proptest::array::uniform6(-0.4f64..0.4),
            a in proptest::array::uniform3(-0.5f64..0.5),
            p in proptest::array::uniform3(-0.9f64..0.9),
        ) {
            let metric = SymMetricField::from_components([
                ScalarField::from_jet_fn(move |[x, _, _]| (x * c[0]).exp()),
                ScalarField::constant(c[1] * 0.3),
                ScalarField::from_jet_fn(move |[_, y, _]| y * c[2] * 0.2),
                ScalarField::from_jet_fn(move |[x, y, _]| (x * y * c[3]).cos() + 0.5),
                ScalarField::constant(c[4] * 0.2),
                ScalarField::from_jet_fn(move |[_, _, z]| z * z * c[5] + 1.0),
            ]);
            let density = ScalarField::from_jet_fn(move |[x, y, z]| (x * a[0] + y * z * a[1]).exp());
            let wm = WeightedManifold::new(metric, density, unit_box());
            let alpha = ScalarField::from_jet_fn(move |[x, y, z]| (x * a[2] + y * 0.3).exp() + z * z);
            let r = wm.conformal_rescale(&alpha).unwrap();
            let f = ScalarField::from_jet_fn(move |[x, y, z]| (x * 1.3 + y).sin() * (z * 0.7).cos() + x * y);
            let base = wm.apply_weighted_laplacian(&f, p).unwrap();
            let scaled = r.apply_weighted_laplacian(&f, p).unwrap();
            let al = alpha.value(p).unwrap();
            let want = base / al;
            prop_assert!((scaled - want).abs() <= 1e-8 * want.abs() + 1e-12);
            let m0 = wm.measure_density(p).unwrap();
            let m1 = r.measure_density(p).unwrap();
            prop_assert!((m1 - al * m0).abs() <= 1e-12 * al * m0);
        }
    }
}
