//! Stationary spacetime metrics in lapse/shift form
//!
//! `g = (-N^2 + N_i N^i) dt^2 + 2 N_i dt dx^i + g_ij dx^i dx^j`
//!
//! and the quantities derived from them pointwise: the inverse blocks, the
//! reduced spatial metric `h`, the density `rho = sqrt(|g| / |h|)`, and
//! grid checks of timelikeness and uniform bounds.

use crate::error::{Error, Result};
use crate::field::{MetricRule, SampleGrid, ScalarField, ScalarRule, SymMetricField, VectorField};
use crate::jet::{Jet2, Scalar};
use crate::linalg::{generalized_eigen_range, inverse4, lu_det4, Sym3};

/// Points whose margin `N^2 - N_i N^i` falls below this are degenerate.
pub const DEGENERACY_MARGIN: f64 = 1e-12;
/// Smallest admissible `|det h|`.
pub const MIN_DET_H: f64 = 1e-30;

#[derive(Clone, Debug)]
pub struct StationaryMetric {
    pub lapse: ScalarField,
    pub shift: VectorField,
    pub spatial: SymMetricField,
}

/// Block quantities of a stationary metric at one point.
#[derive(Clone, Copy, Debug)]
pub struct PointBlocks<T = f64> {
    pub lapse: T,
    pub shift: [T; 3],
    /// `N_i = g_ij N^j`, which is also the mixed component `g_0i`.
    pub shift_lower: [T; 3],
    pub spatial: Sym3<T>,
    pub spatial_inv: Sym3<T>,
    /// `N^2 - N_i N^i`; positive exactly where the Killing field is timelike.
    pub margin: T,
    pub g00: T,
    /// Spatial block of the inverse spacetime metric, `g^ij - N^i N^j / N^2`.
    pub h_upper: Sym3<T>,
    /// `g_ij + N_i N_j / (N^2 - N_i N^i)`.
    pub h_lower: Sym3<T>,
    pub det_h3: T,
    pub det_g4: T,
    pub rho: T,
}

impl<T: Scalar> PointBlocks<T> {
    pub fn g0i(&self) -> [T; 3] {
        self.shift_lower
    }

    /// `g^00 = -1 / N^2`.
    pub fn g00_upper(&self) -> T {
        -(self.lapse * self.lapse).recip()
    }

    /// The assembled 4x4 spacetime metric, time first.
    pub fn spacetime(&self) -> [[T; 4]; 4] {
        spacetime_matrix(self.g00, &self.shift_lower, &self.spatial)
    }

    pub fn values(&self) -> PointBlocks<f64> {
        PointBlocks {
            lapse: self.lapse.value(),
            shift: self.shift.map(|x| x.value()),
            shift_lower: self.shift_lower.map(|x| x.value()),
            spatial: self.spatial.values(),
            spatial_inv: self.spatial_inv.values(),
            margin: self.margin.value(),
            g00: self.g00.value(),
            h_upper: self.h_upper.values(),
            h_lower: self.h_lower.values(),
            det_h3: self.det_h3.value(),
            det_g4: self.det_g4.value(),
            rho: self.rho.value(),
        }
    }
}

pub fn spacetime_matrix<T: Scalar>(g00: T, g0i: &[T; 3], spatial: &Sym3<T>) -> [[T; 4]; 4] {
    let mut m = [[g00; 4]; 4];
    for i in 0..3 {
        m[0][i + 1] = g0i[i];
        m[i + 1][0] = g0i[i];
        for j in 0..3 {
            m[i + 1][j + 1] = spatial.get(i, j);
        }
    }
    m
}

/// Outcome of the timelike-Killing check over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimelikeReport {
    pub holds: bool,
    pub min_margin: f64,
    pub worst_point: [f64; 3],
    pub violations: usize,
    pub first_violation: Option<[f64; 3]>,
    /// Whether `g_00 < 0` at every node, evaluated as `-N^2 + g_ij N^i N^j`.
    pub g00_negative_everywhere: bool,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub timelike: TimelikeReport,
    /// Grid minimum of the lapse.
    pub alpha_b: f64,
    /// Grid maximum of the lapse.
    pub alpha_c: f64,
    /// Grid maximum of `g_ij N^i N^j`.
    pub shift_norm_bound: f64,
    /// Extreme generalized eigenvalues of the spatial metric against the
    /// reference metric.
    pub equivalence_a: f64,
    pub equivalence_d: f64,
    pub grid: SampleGrid,
}

/// Residuals of the determinant relations at a set of points.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DeterminantResiduals {
    /// `| |h| - |g00^-1| |g| | / |h|`.
    pub identity: f64,
    /// `| rho^2 |h| - |g| | / |g|`.
    pub rho_consistency: f64,
    /// `| rho - sqrt|g00| | / rho`.
    pub rho_vs_sqrt_g00: f64,
    /// `| rho - sqrt|g00^-1| | / rho`.
    pub rho_vs_sqrt_inv_g00: f64,
    pub points: usize,
}

impl StationaryMetric {
    pub fn new(lapse: ScalarField, shift: VectorField, spatial: SymMetricField) -> Self {
        Self { lapse, shift, spatial }
    }

    pub fn minkowski() -> Self {
        Self::new(ScalarField::constant(1.0), VectorField::zero(), SymMetricField::euclidean())
    }

    pub fn static_metric(lapse: ScalarField, spatial: SymMetricField) -> Self {
        Self::new(lapse, VectorField::zero(), spatial)
    }

    pub fn blocks<T: Scalar>(&self, p: [f64; 3]) -> Result<PointBlocks<T>> {
        let lapse: T = self.lapse.sample(p)?;
        if lapse.value() <= 0.0 {
            return Err(Error::NonPositive { what: "lapse", point: p, value: lapse.value() });
        }
        let shift: [T; 3] = self.shift.sample(p)?;
        let spatial: Sym3<T> = self.spatial.sample(p)?;
        blocks_from_parts(p, lapse, shift, spatial)
    }

    pub fn point_blocks(&self, p: [f64; 3]) -> Result<PointBlocks> {
        self.blocks::<f64>(p)
    }

    pub fn jet_blocks(&self, p: [f64; 3]) -> Result<PointBlocks<Jet2>> {
        self.blocks::<Jet2>(p)
    }

    /// Timelike margin `N^2 - N_i N^i` without the degeneracy checks.
    pub fn margin(&self, p: [f64; 3]) -> Result<f64> {
        let n = self.lapse.value(p)?;
        let s: [f64; 3] = self.shift.sample(p)?;
        let g = self.spatial.value(p)?;
        Ok(n * n - g.quad(&s, &s))
    }

    /// The reduced spatial metric `h_ij` as a field.
    pub fn h_field(&self) -> SymMetricField {
        struct H(StationaryMetric);
        impl MetricRule for H {
            fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<Sym3<T>> {
                Ok(self.0.blocks::<T>(p)?.h_lower)
            }
        }
        SymMetricField::from_rule(H(self.clone()))
    }

    /// The density `rho = sqrt(|g| / |h|)` as a field.
    pub fn rho_field(&self) -> ScalarField {
        struct Rho(StationaryMetric);
        impl ScalarRule for Rho {
            fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
                Ok(self.0.blocks::<T>(p)?.rho)
            }
        }
        ScalarField::from_rule(Rho(self.clone()))
    }

    /// `N^-2` as a field.
    pub fn inverse_lapse_squared(&self) -> ScalarField {
        self.lapse.powf(-2.0)
    }

    /// The unit-lapse rescaling `g~ = N^-2 g` of the spatial metric.
    pub fn rescaled_spatial(&self) -> SymMetricField {
        self.spatial.conformal(&self.inverse_lapse_squared())
    }

    /// `g~_ij N^i N^j = N^-2 g_ij N^i N^j` at a point.
    pub fn rescaled_shift_norm(&self, p: [f64; 3]) -> Result<f64> {
        let n = self.lapse.value(p)?;
        let s: [f64; 3] = self.shift.sample(p)?;
        Ok(self.spatial.value(p)?.quad(&s, &s) / (n * n))
    }

    pub fn check_assumption_timelike(&self, grid: &SampleGrid) -> Result<TimelikeReport> {
        let mut report = TimelikeReport {
            holds: true,
            min_margin: f64::INFINITY,
            worst_point: grid.bbox.center(),
            violations: 0,
            first_violation: None,
            g00_negative_everywhere: true,
            nodes: 0,
        };
        for p in grid.nodes() {
            let n = self.lapse.value(p)?;
            let s: [f64; 3] = self.shift.sample(p)?;
            let g = self.spatial.value(p)?;
            let lower = g.mul_vec(&s);
            let margin = n * n - (lower[0] * s[0] + lower[1] * s[1] + lower[2] * s[2]);
            let g00 = -n * n + g.quad(&s, &s);
            report.nodes += 1;
            if margin < report.min_margin {
                report.min_margin = margin;
                report.worst_point = p;
            }
            if !(margin > 0.0) {
                report.holds = false;
                report.violations += 1;
                report.first_violation.get_or_insert(p);
            }
            if !(g00 < 0.0) {
                report.g00_negative_everywhere = false;
            }
        }
        Ok(report)
    }

    /// Lapse bounds, shift-norm bound and equivalence constants of the
    /// spatial metric against `reference` (itself when `None`).
    pub fn estimate_bounds(
        &self,
        grid: &SampleGrid,
        reference: Option<&SymMetricField>,
    ) -> Result<AssumptionReport> {
        let timelike = self.check_assumption_timelike(grid)?;
        let (mut alpha_b, mut alpha_c) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut b: f64 = 0.0;
        let (mut a_const, mut d_const) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in grid.nodes() {
            let n = self.lapse.value(p)?;
            alpha_b = alpha_b.min(n);
            alpha_c = alpha_c.max(n);
            let g = self.spatial.positive_value(p, "spatial metric")?;
            let s: [f64; 3] = self.shift.sample(p)?;
            b = b.max(g.quad(&s, &s));
            let (lo, hi) = match reference {
                None => (1.0, 1.0),
                Some(r) => {
                    let rv = r.positive_value(p, "reference metric")?;
                    generalized_eigen_range(&g, &rv)
                        .ok_or(Error::NotPositiveDefinite { what: "reference metric", point: p })?
                }
            };
            a_const = a_const.min(lo);
            d_const = d_const.max(hi);
        }
        Ok(AssumptionReport {
            timelike,
            alpha_b,
            alpha_c,
            shift_norm_bound: b,
            equivalence_a: a_const,
            equivalence_d: d_const,
            grid: *grid,
        })
    }

    /// Maximum residuals of the determinant identity `|h| = |g00^-1| |g|`
    /// and of the density relations over `points`.
    pub fn verify_determinant_identity(
        &self,
        points: impl IntoIterator<Item = [f64; 3]>,
    ) -> Result<DeterminantResiduals> {
        let mut out = DeterminantResiduals::default();
        for p in points {
            let b = self.point_blocks(p)?;
            let g00 = b.g00.abs();
            let id = (b.det_h3 - b.det_g4.abs() / g00).abs() / b.det_h3.abs();
            let rc = (b.rho * b.rho * b.det_h3.abs() - b.det_g4.abs()).abs() / b.det_g4.abs();
            out.identity = out.identity.max(id);
            out.rho_consistency = out.rho_consistency.max(rc);
            out.rho_vs_sqrt_g00 = out.rho_vs_sqrt_g00.max((b.rho - g00.sqrt()).abs() / b.rho);
            out.rho_vs_sqrt_inv_g00 =
                out.rho_vs_sqrt_inv_g00.max((b.rho - (1.0 / g00).sqrt()).abs() / b.rho);
            out.points += 1;
        }
        Ok(out)
    }
}

/// Block quantities from sampled lapse, shift and spatial metric.
pub fn blocks_from_parts<T: Scalar>(
    p: [f64; 3],
    lapse: T,
    shift: [T; 3],
    spatial: Sym3<T>,
) -> Result<PointBlocks<T>> {
    if !spatial.values().is_positive_definite() {
        return Err(Error::NotPositiveDefinite { what: "spatial metric", point: p });
    }
    let spatial_inv = spatial
        .inverse()
        .ok_or(Error::Degenerate { what: "spatial metric", point: p, value: 0.0 })?;
    let shift_lower = spatial.mul_vec(&shift);
    let n2 = lapse * lapse;
    let margin = n2 - (shift_lower[0] * shift[0] + shift_lower[1] * shift[1] + shift_lower[2] * shift[2]);
    if margin.value().abs() < DEGENERACY_MARGIN {
        return Err(Error::Degenerate { what: "timelike margin N^2 - N_i N^i", point: p, value: margin.value() });
    }
    let g00 = -margin;
    let h_upper = spatial_inv.add_outer(&shift, -n2.recip());
    let h_lower = spatial.add_outer(&shift_lower, margin.recip());
    let det_h3 = h_lower.det();
    if det_h3.value().abs() < MIN_DET_H {
        return Err(Error::Degenerate { what: "det h", point: p, value: det_h3.value() });
    }
    let det_g4 = lu_det4(spacetime_matrix(g00, &shift_lower, &spatial));
    let rho = (det_g4.abs() / det_h3.abs()).sqrt();
    Ok(PointBlocks {
        lapse,
        shift,
        shift_lower,
        spatial,
        spatial_inv,
        margin,
        g00,
        h_upper,
        h_lower,
        det_h3,
        det_g4,
        rho,
    })
}

/// Residuals of the block formulas against routes that do not use them:
/// `h_upper h_lower - I`, `h_lower` against the numerical inverse of
/// `h_upper`, and `h_upper` against the spatial block of the numerically
/// inverted 4x4 metric.
pub fn block_cross_check(b: &PointBlocks) -> Result<[f64; 3]> {
    let prod = b.h_upper.matmul(&b.h_lower);
    let mut r_id: f64 = 0.0;
    for (i, row) in prod.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            r_id = r_id.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let scale = b.h_lower.max_abs();
    let hl = b.h_upper.inverse().ok_or_else(|| Error::InvalidInput("singular h^ij".into()))?;
    let r_lower = hl.sub(&b.h_lower).max_abs() / scale;
    let inv = inverse4(b.spacetime()).ok_or_else(|| Error::InvalidInput("singular 4-metric".into()))?;
    let up = Sym3::from_fn(|i, j| inv[i + 1][j + 1]);
    let r_upper = up.sub(&b.h_upper).max_abs() / b.h_upper.max_abs();
    Ok([r_id, r_lower, r_upper])
}
