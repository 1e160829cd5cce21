use crate::error::{Error, Result};
use crate::field::{SampleGrid, SymMetricField};
use crate::linalg::generalized_eigen_range;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceReport {
    /// Grid minimum of the smallest generalized eigenvalue of `a` against `b`.
    pub lower: f64,
    /// Grid maximum of the largest one.
    pub upper: f64,
    pub lower_witness: [f64; 3],
    pub upper_witness: [f64; 3],
}

/// Constants `e <= f` with `e b <= a <= f b` at every grid node.
pub fn equivalence_constants(a: &SymMetricField, b: &SymMetricField, grid: &SampleGrid) -> Result<EquivalenceReport> {
    let mut r = EquivalenceReport {
        lower: f64::INFINITY,
        upper: f64::NEG_INFINITY,
        lower_witness: grid.bbox.center(),
        upper_witness: grid.bbox.center(),
    };
    for p in grid.nodes() {
        let av = a.positive_value(p, "compared metric")?;
        let bv = b.positive_value(p, "reference metric")?;
        let (lo, hi) = generalized_eigen_range(&av, &bv).ok_or(Error::NotPositiveDefinite { what: "reference metric", point: p })?;
        if lo < r.lower {
            r.lower = lo;
            r.lower_witness = p;
        }
        if hi > r.upper {
            r.upper = hi;
            r.upper_witness = p;
        }
    }
    Ok(r)
}

/// Eigenvalues of `a - b` above this count as nonnegative.
pub const PSD_TOLERANCE: f64 = -1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
    pub witness: [f64; 3],
}

/// Smallest eigenvalue of `a - b` over the grid.
pub fn psd_difference(a: &SymMetricField, b: &SymMetricField, grid: &SampleGrid) -> Result<PsdReport> {
    let mut r = PsdReport { psd: true, min_eigenvalue: f64::INFINITY, witness: grid.bbox.center() };
    for p in grid.nodes() {
        let d = a.value(p)?.sub(&b.value(p)?);
        let e = d.eigenvalues()[0];
        if e < r.min_eigenvalue {
            r.min_eigenvalue = e;
            r.witness = p;
        }
    }
    r.psd = r.min_eigenvalue >= PSD_TOLERANCE;
    Ok(r)
}
