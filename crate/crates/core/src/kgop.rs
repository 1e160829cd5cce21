//! The spatial Klein-Gordon operator of a stationary metric.
//!
//! For time-independent data the wave equation `(box - m^2) phi = 0` splits
//! as `(d_t^2 + f d_t + w^2) phi = 0` with
//!
//! `w^2 = -N^2 Delta_{mu,h} + V`, `V = N^2 m^2`, `dmu = sqrt|g| d^3x`,
//!
//! equivalently `w^2 = -Delta~ + V` for the rescaled manifold
//! `(N^-2 h, N^-2 mu)`.

use crate::error::{Error, Result};
use crate::field::{SampleGrid, ScalarField};
use crate::jet::{Jet2, Scalar};
use crate::linalg::{inverse4, lu_det4};
use crate::metric::StationaryMetric;
use crate::weighted::WeightedManifold;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorForm {
    /// `-N^2 Delta_{mu,h} + V`.
    Raw,
    /// `-Delta_{mu~,h~} + V` on the conformally rescaled manifold.
    Reduced,
}

#[derive(Clone, Debug)]
pub struct SpatialOperator {
    pub metric: StationaryMetric,
    pub m2: ScalarField,
    pub potential: ScalarField,
    /// `(h, rho)`.
    pub weighted: WeightedManifold,
    /// `(N^-2 h, N^-2 mu)`.
    pub reduced: WeightedManifold,
}

/// Both evaluations of `w^2 u` at a point and their relative difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionCheck {
    pub assembled: f64,
    pub direct: f64,
    pub residual: f64,
}

/// Build `w^2` after checking that the Killing field is timelike at every
/// node of `grid`; the operator's domain is the grid's box.
pub fn assemble_w2(metric: &StationaryMetric, m2: &ScalarField, grid: &SampleGrid) -> Result<SpatialOperator> {
    let report = metric.check_assumption_timelike(grid)?;
    if !report.holds {
        let point = report.first_violation.unwrap_or(report.worst_point);
        return Err(Error::NotTimelike { point, margin: metric.margin(point)? });
    }
    let weighted = WeightedManifold::new(metric.h_field(), metric.rho_field(), grid.bbox);
    let reduced = weighted.conformal_rescale(&metric.inverse_lapse_squared())?;
    let n2 = metric.lapse.mul(&metric.lapse);
    Ok(SpatialOperator {
        metric: metric.clone(),
        m2: m2.clone(),
        potential: n2.mul(m2),
        weighted,
        reduced,
    })
}

impl SpatialOperator {
    pub fn apply_jet(&self, u: &Jet2, p: [f64; 3], form: OperatorForm) -> Result<f64> {
        let v = self.potential.value(p)?;
        match form {
            OperatorForm::Raw => {
                let n = self.metric.lapse.value(p)?;
                Ok(-n * n * self.weighted.laplacian_of_jet(u, p)? + v * u.value)
            }
            OperatorForm::Reduced => Ok(-self.reduced.laplacian_of_jet(u, p)? + v * u.value),
        }
    }

    pub fn apply_w2(&self, u: &ScalarField, p: [f64; 3], form: OperatorForm) -> Result<f64> {
        self.apply_jet(&u.jet(p)?, p, form)
    }

    /// Compare the assembled operator with the spatial part of the 4D wave
    /// operator computed from the inverted spacetime metric.
    pub fn verify_reduction(&self, u: &ScalarField, p: [f64; 3]) -> Result<ReductionCheck> {
        let uj = u.jet(p)?;
        let assembled = self.apply_jet(&uj, p, OperatorForm::Raw)?;
        let direct = direct_w2(&self.metric, &self.m2, &uj, p)?;
        Ok(ReductionCheck { assembled, direct, residual: relative_difference(assembled, direct) })
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

struct Spacetime {
    sqrt_g: Jet2,
    inv: [[Jet2; 4]; 4],
}

fn spacetime_jets(metric: &StationaryMetric, p: [f64; 3]) -> Result<Spacetime> {
    let n: Jet2 = metric.lapse.jet(p)?;
    let s: [Jet2; 3] = metric.shift.sample(p)?;
    let g = metric.spatial.jet(p)?;
    let lower = g.mul_vec(&s);
    let g00 = -(n * n) + lower[0] * s[0] + lower[1] * s[1] + lower[2] * s[2];
    let m = crate::metric::spacetime_matrix(g00, &lower, &g);
    let det = lu_det4(m);
    if det.value.abs() < crate::metric::MIN_DET_H {
        return Err(Error::Degenerate { what: "det g", point: p, value: det.value });
    }
    let inv = inverse4(m).ok_or(Error::Degenerate { what: "spacetime metric", point: p, value: det.value })?;
    Ok(Spacetime { sqrt_g: det.abs().sqrt(), inv })
}

/// `(g^00)^-1 [ |g|^-1/2 d_i(|g|^1/2 g^ij d_j u) - m^2 u ]` with every
/// coefficient taken from the numerically inverted 4x4 metric.
pub fn direct_w2(metric: &StationaryMetric, m2: &ScalarField, u: &Jet2, p: [f64; 3]) -> Result<f64> {
    let st = spacetime_jets(metric, p)?;
    let mut div = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let c = st.sqrt_g * st.inv[i + 1][j + 1];
            div += c.grad[i] * u.grad[j] + c.value * u.hessian(i, j);
        }
    }
    let spatial = div / st.sqrt_g.value;
    Ok((spatial - m2.value(p)? * u.value) / st.inv[0][0].value)
}

/// The two pieces of the first-order time coefficient
/// `f = -(g^00 sqrt|g|)^-1 d_i(sqrt|g| g^00 N^i) - 2 N^i d_i` applied to `u`:
/// `(scalar part * u, -2 N^i d_i u)`.
pub fn first_order_coefficient(metric: &StationaryMetric, p: [f64; 3], u: &ScalarField) -> Result<(f64, f64)> {
    let st = spacetime_jets(metric, p)?;
    let shift: [Jet2; 3] = metric.shift.sample(p)?;
    let uj = u.jet(p)?;
    let w = st.sqrt_g * st.inv[0][0];
    let div: f64 = (0..3).map(|i| (w * shift[i]).grad[i]).sum();
    let scalar = -div / w.value;
    let vector: f64 = (0..3).map(|i| -2.0 * shift[i].value * uj.grad[i]).sum();
    Ok((scalar * uj.value, vector))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ChartBox, SymMetricField, VectorField};
    use crate::testfields::{random_stationary_metric, TestFieldGenerator};

    fn cube() -> ChartBox {
        ChartBox::new([-1.0; 3], [1.0; 3]).unwrap()
    }

    fn grid() -> SampleGrid {
        SampleGrid::new(cube(), [5, 5, 5]).unwrap()
    }

    #[test]
    fn ultra_static_flat() {
        let op = assemble_w2(&StationaryMetric::minkowski(), &ScalarField::constant(0.7), &grid()).unwrap();
        let u = ScalarField::from_jet_fn(|[x, y, z]| x * x * y + z.sin());
        let p = [0.3, -0.4, 0.2];
        let [x, y, z] = p;
        let want = -(2.0 * y - z.sin()) + 0.7 * (x * x * y + z.sin());
        for form in [OperatorForm::Raw, OperatorForm::Reduced] {
            let got = op.apply_w2(&u, p, form).unwrap();
            assert!((got - want).abs() < 1e-14);
        }
        assert_eq!(op.apply_w2(&ScalarField::constant(3.0), p, OperatorForm::Raw).unwrap(), 0.0 + 0.7 * 3.0);
    }

    #[test]
    fn flat_eigenfunction() {
        let op = assemble_w2(&StationaryMetric::minkowski(), &ScalarField::constant(0.0), &grid()).unwrap();
        let pi = std::f64::consts::PI;
        let u = ScalarField::from_jet_fn(move |[x, y, z]| (x * pi).sin() * (y * pi).sin() * (z * pi).sin());
        let p = [0.21, 0.37, -0.66];
        let got = op.apply_w2(&u, p, OperatorForm::Raw).unwrap();
        let want = 3.0 * pi * pi * u.value(p).unwrap();
        assert!((got - want).abs() <= 1e-13 * want.abs());
    }

    #[test]
    fn static_lapse_matches_hand_expansion() {
        // g = delta, N = 1 + x^2 / 2, rho = N: w^2 u = -N^2 (Lap u + N_x u_x / N) + N^2 m^2 u.
        let lapse = ScalarField::from_jet_fn(|[x, _, _]| x * x * 0.5 + 1.0);
        let m = StationaryMetric::static_metric(lapse, SymMetricField::euclidean());
        let op = assemble_w2(&m, &ScalarField::constant(2.0), &grid()).unwrap();
        let u = ScalarField::from_jet_fn(|[x, y, z]| (x + y * 2.0).sin() * z.exp());
        let p = [0.4, 0.1, -0.3];
        let [x, y, z] = p;
        let n = 1.0 + x * x / 2.0;
        let s = (x + 2.0 * y).sin();
        let c = (x + 2.0 * y).cos();
        let lap = (-s - 4.0 * s + s) * z.exp();
        let ux = c * z.exp();
        let want = -n * n * (lap + x * ux / n) + n * n * 2.0 * s * z.exp();
        let got = op.apply_w2(&u, p, OperatorForm::Raw).unwrap();
        assert!((got - want).abs() <= 1e-13 * want.abs(), "{got} {want}");
    }

    #[test]
    fn raw_reduced_and_direct_agree_on_random_metrics() {
        for seed in 0..4 {
            let m = random_stationary_metric(seed);
            let op = assemble_w2(&m, &ScalarField::constant(0.5), &grid()).unwrap();
            let mut gen = TestFieldGenerator::new(100 + seed, cube());
            for _ in 0..10 {
                let b = gen.bump([true; 3]);
                let p = gen.point_in(&b);
                let u = ScalarField::from_rule(b);
                let raw = op.apply_w2(&u, p, OperatorForm::Raw).unwrap();
                let red = op.apply_w2(&u, p, OperatorForm::Reduced).unwrap();
                assert!(relative_difference(raw, red) < 1e-10);
                let chk = op.verify_reduction(&u, p).unwrap();
                assert!(chk.residual < 1e-10, "{chk:?}");
            }
        }
    }

    #[test]
    fn refuses_non_timelike_domain() {
        let m = StationaryMetric::new(
            ScalarField::constant(1.0),
            VectorField([ScalarField::from_jet_fn(|[x, _, _]| x * 2.0), ScalarField::constant(0.0), ScalarField::constant(0.0)]),
            SymMetricField::euclidean(),
        );
        let err = assemble_w2(&m, &ScalarField::constant(0.0), &grid()).unwrap_err();
        match err {
            Error::NotTimelike { point, margin } => {
                assert!(point[0].abs() >= 0.5);
                assert!(margin <= 0.0);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn first_order_coefficient_cases() {
        let u = ScalarField::from_jet_fn(|[x, y, z]| x * y + z.cos());
        let p = [0.2, 0.5, -0.1];
        let (s, v) = first_order_coefficient(&StationaryMetric::minkowski(), p, &u).unwrap();
        assert_eq!((s, v), (0.0, 0.0));
        let m = StationaryMetric::new(
            ScalarField::constant(2.0),
            VectorField([ScalarField::constant(0.3), ScalarField::constant(-0.2), ScalarField::constant(0.1)]),
            SymMetricField::euclidean(),
        );
        let (s, v) = first_order_coefficient(&m, p, &u).unwrap();
        let grad = [p[1], p[0], -p[2].sin()];
        let want = -2.0 * (0.3 * grad[0] - 0.2 * grad[1] + 0.1 * grad[2]);
        assert!(s.abs() < 1e-15);
        assert!((v - want).abs() < 1e-15);
    }
}
