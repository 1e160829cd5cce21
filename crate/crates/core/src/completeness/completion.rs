//! Auxiliary Riemannian metrics built from a stationary metric whose shift
//! is bounded by the lapse, and conformal completion by a proper function.

use crate::error::{Error, Result};
use crate::field::{MetricRule, SampleGrid, ScalarField, ScalarRule, ScalarSource, SymMetricField};
use crate::jet::{Jet2, Scalar};
use crate::linalg::Sym3;
use crate::metric::StationaryMetric;

use super::equivalence::{equivalence_constants, psd_difference, EquivalenceReport, PsdReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Which {
    K,
    KTilde,
    H,
    HTilde,
    HTildeStatement,
}

struct Completion(StationaryMetric, Which);

impl MetricRule for Completion {
    fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<Sym3<T>> {
        let n: T = self.0.lapse.sample(p)?;
        let s: [T; 3] = self.0.shift.sample(p)?;
        let g: Sym3<T> = self.0.spatial.sample(p)?;
        let lower = g.mul_vec(&s);
        let n2 = n * n;
        let inv_n2 = n2.recip();
        let norm = lower[0] * s[0] + lower[1] * s[1] + lower[2] * s[2];
        // ||N||^2 in the unit-lapse metric N^-2 g.
        let q = norm * inv_n2;
        let one = T::constant(1.0);
        Ok(match self.1 {
            Which::K => g.scale(n2).add_outer(&lower, one),
            Which::KTilde => g.add_outer(&lower, inv_n2),
            Which::H => g.add_outer(&lower, inv_n2 / (one - q)),
            Which::HTilde => g.add_outer(&lower, inv_n2 / (one - q)).scale(inv_n2),
            Which::HTildeStatement => g.scale(inv_n2).add_outer(&lower, inv_n2 * inv_n2 / (one - norm * inv_n2)),
        })
    }
}

#[derive(Clone, Debug)]
pub struct CompletionMetrics {
    /// `N^2 g_ij + N_i N_j`.
    pub k: SymMetricField,
    /// `g_ij + N^-2 N_i N_j`.
    pub k_tilde: SymMetricField,
    /// `g_ij + N^-2 (1 - ||N||^2_g~)^-1 N_i N_j`.
    pub h: SymMetricField,
    /// `N^-2 h`.
    pub h_tilde: SymMetricField,
    pub report: CompletionReport,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompletionReport {
    /// Grid maximum of `||N||^2_g~ = N^-2 g_ij N^i N^j`.
    pub max_shift_norm: f64,
    pub lapse_min: f64,
    pub lapse_max: f64,
    /// `h - k~` over the grid.
    pub h_minus_k_tilde: PsdReport,
    /// `k` against `k~`; equals `N^2` pointwise.
    pub k_vs_k_tilde: EquivalenceReport,
    /// Largest relative gap between `h~` and the variant written with
    /// `(1 - N^-2 N_i N^i)^-1 N^-4 N_i N_j`.
    pub h_tilde_form_residual: f64,
    /// Largest relative gap between `h` and the reduced metric of the
    /// stationary decomposition.
    pub h_vs_reduced_residual: f64,
}

/// Build `k, k~, h, h~`, refusing if `||N||^2_g~ >= 1` at a grid node.
pub fn build_completion(metric: &StationaryMetric, grid: &SampleGrid) -> Result<CompletionMetrics> {
    let mk = |w| SymMetricField::from_rule(Completion(metric.clone(), w));
    let (k, k_tilde, h, h_tilde) = (mk(Which::K), mk(Which::KTilde), mk(Which::H), mk(Which::HTilde));
    let statement = mk(Which::HTildeStatement);
    let reduced = metric.h_field();
    let mut max_shift_norm: f64 = 0.0;
    let (mut lapse_min, mut lapse_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut form_res: f64 = 0.0;
    let mut red_res: f64 = 0.0;
    for p in grid.nodes() {
        let q = metric.rescaled_shift_norm(p)?;
        if !(q < 1.0) {
            return Err(Error::ShiftBound { point: p, norm: q });
        }
        max_shift_norm = max_shift_norm.max(q);
        let n = metric.lapse.value(p)?;
        lapse_min = lapse_min.min(n);
        lapse_max = lapse_max.max(n);
        let ht = h_tilde.value(p)?;
        form_res = form_res.max(statement.value(p)?.sub(&ht).max_abs() / ht.max_abs());
        let hv = h.value(p)?;
        red_res = red_res.max(reduced.value(p)?.sub(&hv).max_abs() / hv.max_abs());
    }
    let report = CompletionReport {
        max_shift_norm,
        lapse_min,
        lapse_max,
        h_minus_k_tilde: psd_difference(&h, &k_tilde, grid)?,
        k_vs_k_tilde: equivalence_constants(&k, &k_tilde, grid)?,
        h_tilde_form_residual: form_res,
        h_vs_reduced_residual: red_res,
    };
    Ok(CompletionMetrics { k, k_tilde, h, h_tilde, report })
}

/// `q = g^ij d_i gamma d_j gamma` with a central-difference Hessian.
struct GradNormSq {
    gamma: ScalarField,
    spatial: SymMetricField,
}

impl GradNormSq {
    fn value_grad(&self, p: [f64; 3]) -> Result<(f64, [f64; 3])> {
        let gj = self.gamma.jet(p)?;
        let m = self.spatial.jet(p)?;
        let inv = m.inverse().ok_or(Error::Degenerate { what: "metric", point: p, value: 0.0 })?;
        let mut v = 0.0;
        let mut grad = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                let hij = inv.get(i, j);
                v += hij.value * gj.grad[i] * gj.grad[j];
                for (k, gk) in grad.iter_mut().enumerate() {
                    *gk += hij.grad[k] * gj.grad[i] * gj.grad[j] + 2.0 * hij.value * gj.hessian(i, k) * gj.grad[j];
                }
            }
        }
        Ok((v, grad))
    }
}

impl ScalarSource for GradNormSq {
    fn jet(&self, p: [f64; 3]) -> Result<Jet2> {
        let (value, grad) = self.value_grad(p)?;
        let mut hess = [[0.0; 3]; 3];
        for k in 0..3 {
            let d = 1e-4 * p[k].abs().max(1.0);
            let (mut a, mut b) = (p, p);
            a[k] += d;
            b[k] -= d;
            let (ga, gb) = (self.value_grad(a)?.1, self.value_grad(b)?.1);
            for i in 0..3 {
                hess[k][i] = (ga[i] - gb[i]) / (2.0 * d);
            }
        }
        let mut packed = [0.0; 6];
        let mut n = 0;
        for i in 0..3 {
            for j in i..3 {
                packed[n] = 0.5 * (hess[i][j] + hess[j][i]);
                n += 1;
            }
        }
        Ok(Jet2 { value, grad, hess: packed })
    }

    fn value(&self, p: [f64; 3]) -> Result<f64> {
        Ok(self.value_grad(p)?.0)
    }
}

#[derive(Clone, Debug)]
pub struct GammaCompletion {
    pub gamma: ScalarField,
    /// `||grad gamma||^2_g`.
    pub grad_norm_sq: ScalarField,
    /// `e^{||grad gamma||^2_g}`.
    pub conformal_factor: ScalarField,
    /// `N^-2 e^{||grad gamma||^2_g} g`.
    pub completed_metric: SymMetricField,
    /// `e^{-||grad gamma||^2_g}`.
    pub warped_factor: ScalarField,
    /// `e^{-||grad gamma||^2_g / 2} N`.
    pub warped_lapse: ScalarField,
    /// Properness of `gamma` is an input assertion; it cannot be checked on
    /// a bounded chart.
    pub properness_asserted: bool,
}

pub fn gamma_completion(metric: &StationaryMetric, gamma: &ScalarField) -> GammaCompletion {
    let q = ScalarField::from_source(GradNormSq { gamma: gamma.clone(), spatial: metric.spatial.clone() });
    struct ExpScaled(ScalarField, f64, Option<ScalarField>);
    impl ScalarRule for ExpScaled {
        fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
            let e = (self.0.sample::<T>(p)? * self.1).exp();
            Ok(match &self.2 {
                Some(f) => e * f.sample::<T>(p)?,
                None => e,
            })
        }
    }
    let factor = ScalarField::from_rule(ExpScaled(q.clone(), 1.0, None));
    let n_inv2 = metric.inverse_lapse_squared();
    GammaCompletion {
        gamma: gamma.clone(),
        conformal_factor: factor.clone(),
        completed_metric: metric.spatial.conformal(&factor.mul(&n_inv2)),
        warped_factor: ScalarField::from_rule(ExpScaled(q.clone(), -1.0, None)),
        warped_lapse: ScalarField::from_rule(ExpScaled(q.clone(), -0.5, Some(metric.lapse.clone()))),
        grad_norm_sq: q,
        properness_asserted: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completeness::geodesic::GeodesicTolerances;
    use crate::completeness::probes::inward_shots;
    use crate::completeness::quadrature::integrate;
    use crate::field::{ChartBox, VectorField};
    use crate::testfields::random_stationary_metric;

    fn cube_grid(n: usize) -> SampleGrid {
        SampleGrid::new(ChartBox::new([-1.0; 3], [1.0; 3]).unwrap(), [n, n, n]).unwrap()
    }

    #[test]
    fn zero_shift_collapses() {
        let lapse = ScalarField::from_jet_fn(|[x, _, _]| x * x + 1.0);
        let m = StationaryMetric::static_metric(lapse, random_stationary_metric(4).spatial);
        let c = build_completion(&m, &cube_grid(3)).unwrap();
        let p = [0.3, -0.2, 0.5];
        let n2 = 1.09f64.powi(2);
        let g = m.spatial.value(p).unwrap();
        assert!(c.k.value(p).unwrap().sub(&g.scale(n2)).max_abs() < 1e-15);
        assert_eq!(c.k_tilde.value(p).unwrap(), g);
        assert_eq!(c.h.value(p).unwrap(), g);
        assert!(c.h_tilde.value(p).unwrap().sub(&g.scale(1.0 / n2)).max_abs() < 1e-15);
    }

    #[test]
    fn gradient_shift_scalar_algebra() {
        // N = 1, g = delta, shift = grad(x^2 / 2) = (x, 0, 0) on |x| < 0.9.
        let m = StationaryMetric::new(
            ScalarField::constant(1.0),
            VectorField([ScalarField::from_jet_fn(|[x, _, _]| x), ScalarField::constant(0.0), ScalarField::constant(0.0)]),
            SymMetricField::euclidean(),
        );
        let grid = SampleGrid::new(ChartBox::new([-0.85, -1.0, -1.0], [0.85, 1.0, 1.0]).unwrap(), [9, 2, 2]).unwrap();
        let c = build_completion(&m, &grid).unwrap();
        for x in [-0.85, -0.3, 0.0, 0.6] {
            let p = [x, 0.0, 0.0];
            let d = c.h.value(p).unwrap().sub(&c.k_tilde.value(p).unwrap());
            let want = x * x / (1.0 - x * x) - x * x;
            assert!((d.get(0, 0) - want).abs() < 1e-14);
            assert!(want >= 0.0);
        }
        assert!(c.report.h_minus_k_tilde.psd);
        let wide = SampleGrid::new(ChartBox::new([-1.2, 0.0, 0.0], [1.2, 0.0, 0.0]).unwrap(), [5, 1, 1]).unwrap();
        let err = build_completion(&m, &wide).unwrap_err();
        assert!(matches!(err, Error::ShiftBound { .. }));
        assert_eq!(err.location().unwrap()[0], -1.2);
    }

    #[test]
    fn random_metrics_satisfy_completion_invariants() {
        for seed in 0..5 {
            let m = random_stationary_metric(seed);
            let c = build_completion(&m, &cube_grid(5)).unwrap();
            let r = c.report;
            assert!(r.h_minus_k_tilde.psd);
            assert!(r.h_tilde_form_residual < 1e-14 && r.h_vs_reduced_residual < 1e-13);
            // k = N^2 k~, so the constants are the squared lapse bounds.
            assert!(r.k_vs_k_tilde.lower >= r.lapse_min.powi(2) * (1.0 - 1e-12));
            assert!(r.k_vs_k_tilde.upper <= r.lapse_max.powi(2) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gamma_completion_cases() {
        let m = StationaryMetric::minkowski();
        let c = gamma_completion(&m, &ScalarField::constant(2.0));
        assert_eq!(c.conformal_factor.value([0.3; 3]).unwrap(), 1.0);
        assert_eq!(c.completed_metric.value([0.3; 3]).unwrap(), Sym3::identity());
        assert_eq!(c.warped_factor.value([0.3; 3]).unwrap(), 1.0);

        let lapse = ScalarField::constant(2.0);
        let m = StationaryMetric::static_metric(lapse, SymMetricField::euclidean());
        let r = ScalarField::from_jet_fn(|[x, y, z]| (x * x + y * y + z * z).sqrt());
        let c = gamma_completion(&m, &r);
        let p = [0.3, -1.2, 0.7];
        let e = std::f64::consts::E;
        assert!((c.conformal_factor.value(p).unwrap() - e).abs() < 1e-14);
        let g = c.completed_metric.value(p).unwrap();
        assert!(g.sub(&Sym3::identity().scale(e / 4.0)).max_abs() < 1e-14);
        let j = c.grad_norm_sq.jet(p).unwrap();
        assert!(j.grad.iter().all(|x| x.abs() < 1e-13));
        assert!(j.hess.iter().all(|x| x.abs() < 1e-7));
        assert!((c.warped_lapse.value(p).unwrap() - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn punctured_space_lengths_blow_up_after_completion() {
        // Flat space outside the unit ball; gamma = log(|x| - 1).
        let m = StationaryMetric::minkowski();
        let gamma = ScalarField::from_jet_fn(|[x, y, z]| ((x * x + y * y + z * z).sqrt() - 1.0).ln());
        let c = gamma_completion(&m, &gamma);
        let chart = ChartBox::new([1.0, -1.0, -1.0], [2.5, 1.0, 1.0]).unwrap();
        let eps = [0.5, 0.4, 0.3, 0.25, 0.2];
        let tol = GeodesicTolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let flat = inward_shots(&m.spatial, &chart, 1.0, [2.0, 0.0, 0.0], &eps, 1e3, &tol).unwrap();
        let done = inward_shots(&c.completed_metric, &chart, 1.0, [2.0, 0.0, 0.0], &eps, 1e9, &tol).unwrap();
        let mut prev = 0.0;
        for ((e, f), d) in eps.iter().zip(&flat).zip(&done) {
            assert!((f.distance.unwrap() - (1.0 - e)).abs() < 1e-9);
            // Along the ray the factor is e^{1/d^2}, so the length is int e^{1/(2 d^2)}.
            let oracle = integrate(|d: f64| (0.5 / (d * d)).exp(), *e, 1.0, 0.0, 1e-12, 2000).unwrap().value;
            let got = d.distance.unwrap();
            assert!((got - oracle).abs() < 1e-6 * oracle, "{e}: {got} vs {oracle}");
            assert!(got > prev);
            prev = got;
        }
        assert!(prev > 1e3);
    }
}
