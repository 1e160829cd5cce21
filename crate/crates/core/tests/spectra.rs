//! Discrete spectra against analytic Dirichlet oracles and the Kerr sector
//! lower bound.

use std::f64::consts::PI;

use stkg_core::kerr::{mode_operator, KerrParams, KerrSpacetime};
use stkg_core::spectral::{discretize, smallest_eigenvalues, SpectralGrid, WeightedSchrodinger};
use stkg_core::{ChartBox, ScalarField, WeightedManifold};

fn flat_box(v: f64) -> WeightedSchrodinger {
    let b = ChartBox::new([0.0; 3], [1.0; 3]).unwrap();
    WeightedSchrodinger { manifold: WeightedManifold::flat(b), potential: ScalarField::constant(v) }
}

#[test]
fn unit_cube_lowest_levels() {
    let op = flat_box(0.0);
    let grid = SpectralGrid::cube(op.manifold.domain, 32).unwrap();
    let dop = discretize(&op, &grid).unwrap();
    let s = smallest_eigenvalues(&dop, 3).unwrap();
    let want = [3.0, 6.0, 6.0].map(|c| c * PI * PI);
    for k in 0..3 {
        assert!((s.values[k] - want[k]).abs() <= 0.02 * want[k], "{:?}", s.values);
        assert!(s.residuals[k] <= 1e-8 * dop.norm(&s.vectors[k]));
    }
    assert!(s.orthogonality <= 1e-8);
}

#[test]
fn kerr_sector_bounded_below() {
    let params = KerrParams::new(1.0, 0.5).unwrap();
    let chart = ChartBox::new([2.0, 0.2, 0.0], [10.0, PI - 0.2, 2.0 * PI]).unwrap();
    let kerr = KerrSpacetime::new(params, chart).unwrap();
    for k in [0, 1, 2, 5] {
        let op = mode_operator(&kerr, k, &ScalarField::constant(0.0));
        for n in [32, 64] {
            let g = SpectralGrid::new(chart, [n, n, 1], [true, true, false]).unwrap();
            let dop = discretize(&op, &g).unwrap();
            let beta = dop.points.iter().map(|&p| op.effective_beta_sq_quarter(p).unwrap()).fold(0.0f64, f64::max);
            let s = smallest_eigenvalues(&dop, 1).unwrap();
            assert!(s.values[0] >= -beta - 1e-6, "k {k} n {n}: {} < -{beta}", s.values[0]);
        }
    }
}
