//! Finite-volume assembly of `-(1/m) d_i(C^ij d_j u) + V u` on a
//! [`SpectralGrid`] with zero Dirichlet data.
//!
//! The matrix is `A = W^-1 K` with `W = diag(m(p) |cell|)` and `K` the
//! Hessian of the discrete quadratic form
//!
//! `Q(u) = sum_edges C^ii (du/h_i)^2 |cell| + sum_plaquettes 2 C^ij g_i g_j |cell| + sum_p w_p V_p u_p^2`,
//!
//! so `K` is symmetric and `A` is self-adjoint in `<u, v>_w = sum w_p u_p v_p`.
//! Diagonal fluxes are taken at edge midpoints, mixed ones at plaquette
//! centres with `g_i` the average of the two parallel edge differences.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{ChartBox, ScalarField};
use crate::jet::Jet2;
use crate::kerr::ModeOperator;
use crate::kgop::{OperatorForm, SpatialOperator};
use crate::linalg::Sym3;
use crate::weighted::WeightedManifold;

use super::csr::CsrMatrix;
use super::grid::SpectralGrid;

/// Measure density `m`, flux tensor `C` and potential `V` at a point.
#[derive(Clone, Copy, Debug)]
pub struct PointCoefficients {
    pub measure: f64,
    pub flux: Sym3<f64>,
    pub potential: f64,
}

/// An operator `-(1/m) d_i(C^ij d_j u) + V u` given pointwise.
pub trait FluxForm {
    fn coefficients(&self, p: [f64; 3]) -> Result<PointCoefficients>;

    /// The continuum operator applied to a jet, for consistency checks.
    fn apply_pointwise(&self, u: &Jet2, p: [f64; 3]) -> Result<f64>;

    fn domain(&self) -> ChartBox;

    /// Axes the operator differentiates along by default.
    fn natural_axes(&self) -> [bool; 3] {
        [true; 3]
    }
}

/// `w^2 = -Delta~ + V` on the rescaled manifold `(N^-2 h, N^-2 mu)`.
impl FluxForm for SpatialOperator {
    fn coefficients(&self, p: [f64; 3]) -> Result<PointCoefficients> {
        let f = self.reduced.flux_coefficients(p)?;
        Ok(PointCoefficients { measure: f.measure, flux: f.flux, potential: self.potential.value(p)? })
    }

    fn apply_pointwise(&self, u: &Jet2, p: [f64; 3]) -> Result<f64> {
        self.apply_jet(u, p, OperatorForm::Reduced)
    }

    fn domain(&self) -> ChartBox {
        self.weighted.domain
    }
}

/// Sector operator in `(r, theta)`: measure `U sin theta / N^2`, flux
/// `N sqrt|g| g^-1`, potential `k^2 (N^2 g^phiphi - (N^phi)^2) + V`.
impl FluxForm for ModeOperator {
    fn coefficients(&self, p: [f64; 3]) -> Result<PointCoefficients> {
        let f = self.weighted.flux_coefficients(p)?;
        Ok(PointCoefficients {
            measure: self.measure_density(p)?,
            flux: f.flux,
            potential: self.sector_potential(p)? + self.potential.value(p)?,
        })
    }

    fn apply_pointwise(&self, u: &Jet2, p: [f64; 3]) -> Result<f64> {
        self.sector_apply(u, p)
    }

    fn domain(&self) -> ChartBox {
        self.kerr.chart
    }

    fn natural_axes(&self) -> [bool; 3] {
        [true, true, false]
    }
}

/// `-Delta_{mu,h} + V` on a weighted manifold.
#[derive(Clone, Debug)]
pub struct WeightedSchrodinger {
    pub manifold: WeightedManifold,
    pub potential: ScalarField,
}

impl FluxForm for WeightedSchrodinger {
    fn coefficients(&self, p: [f64; 3]) -> Result<PointCoefficients> {
        let f = self.manifold.flux_coefficients(p)?;
        Ok(PointCoefficients { measure: f.measure, flux: f.flux, potential: self.potential.value(p)? })
    }

    fn apply_pointwise(&self, u: &Jet2, p: [f64; 3]) -> Result<f64> {
        Ok(-self.manifold.laplacian_of_jet(u, p)? + self.potential.value(p)? * u.value)
    }

    fn domain(&self) -> ChartBox {
        self.manifold.domain
    }
}

/// `A = W^-1 K` over the interior unknowns of a grid.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub grid: SpectralGrid,
    /// `K`, symmetric, potential included.
    pub stiffness: CsrMatrix,
    /// `w_p = m(p) |cell|`.
    pub weights: Vec<f64>,
    pub potential: Vec<f64>,
    pub points: Vec<[f64; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryReport {
    /// `max |<Au, v>_w - <u, Av>_w| / (|u|_w |v|_w)`.
    pub max_residual: f64,
    /// The same difference over `|Au|_w |v|_w + |u|_w |Av|_w`.
    pub max_scaled_residual: f64,
    pub pairs: usize,
}

fn unit(axis: usize) -> [usize; 3] {
    let mut e = [0; 3];
    e[axis] = 1;
    e
}

fn add(a: [usize; 3], b: [usize; 3]) -> [usize; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Node indices with `axis in 0..cells` along `span` axes, interior along
/// the other active axes and 0 along fixed ones.
fn stencil_origins(grid: &SpectralGrid, span: &[usize]) -> Vec<[usize; 3]> {
    let range = |k: usize| -> (usize, usize) {
        if span.contains(&k) {
            (0, grid.cells[k])
        } else if grid.active[k] {
            (1, grid.cells[k])
        } else {
            (0, 1)
        }
    };
    let (r0, r1, r2) = (range(0), range(1), range(2));
    let mut out = Vec::new();
    for i in r0.0..r0.1 {
        for j in r1.0..r1.1 {
            for k in r2.0..r2.1 {
                out.push([i, j, k]);
            }
        }
    }
    out
}

fn shifted_point(grid: &SpectralGrid, idx: [usize; 3], half: &[usize]) -> [f64; 3] {
    let mut p = grid.point(idx);
    for &a in half {
        p[a] += 0.5 * grid.spacing(a);
    }
    p
}

/// Assemble `op` on `grid`. Fails on a non-positive measure at a node or a
/// non-positive diagonal flux at an edge midpoint.
pub fn discretize<F: FluxForm + ?Sized>(op: &F, grid: &SpectralGrid) -> Result<DiscreteOperator> {
    let n = grid.len();
    let vol = grid.cell_volume();
    let active: Vec<usize> = (0..3).filter(|&k| grid.active[k]).collect();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(n * (1 + 2 * active.len() * active.len()));
    let mut push = |a: usize, b: usize, v: f64| triplets.push((a.min(b), a.max(b), v));

    for &a in &active {
        let h = grid.spacing(a);
        for idx in stencil_origins(grid, &[a]) {
            let q_idx = add(idx, unit(a));
            let mid = shifted_point(grid, idx, &[a]);
            let c = op.coefficients(mid)?.flux.get(a, a);
            if !(c > 0.0) {
                return Err(Error::Degenerate { what: "diagonal flux at a cell face", point: mid, value: c });
            }
            let c = c * vol / (h * h);
            let (p, q) = (grid.unknown(idx), grid.unknown(q_idx));
            if let Some(p) = p {
                push(p, p, c);
            }
            if let Some(q) = q {
                push(q, q, c);
            }
            if let (Some(p), Some(q)) = (p, q) {
                push(p, q, -c);
            }
        }
    }

    for (ia, &a) in active.iter().enumerate() {
        for &b in &active[ia + 1..] {
            let (ha, hb) = (grid.spacing(a), grid.spacing(b));
            let ga = [-1.0, 1.0, -1.0, 1.0].map(|x: f64| x / (2.0 * ha));
            let gb = [-1.0, -1.0, 1.0, 1.0].map(|x: f64| x / (2.0 * hb));
            for idx in stencil_origins(grid, &[a, b]) {
                let centre = shifted_point(grid, idx, &[a, b]);
                let c = op.coefficients(centre)?.flux.get(a, b) * vol;
                if c == 0.0 {
                    continue;
                }
                let corners = [idx, add(idx, unit(a)), add(idx, unit(b)), add(add(idx, unit(a)), unit(b))];
                let ids = corners.map(|x| grid.unknown(x));
                for s in 0..4 {
                    let Some(p) = ids[s] else { continue };
                    for t in s..4 {
                        let Some(q) = ids[t] else { continue };
                        let v = c * (ga[s] * gb[t] + gb[s] * ga[t]);
                        // The off-diagonal pair (s, t) appears once here but
                        // twice in the full Hessian.
                        push(p, q, v);
                    }
                }
            }
        }
    }

    let points = grid.points();
    let mut weights = Vec::with_capacity(n);
    let mut potential = Vec::with_capacity(n);
    for (i, &p) in points.iter().enumerate() {
        let c = op.coefficients(p)?;
        if !(c.measure > 0.0) {
            return Err(Error::NonPositive { what: "measure density", point: p, value: c.measure });
        }
        let w = c.measure * vol;
        weights.push(w);
        potential.push(c.potential);
        push(i, i, w * c.potential);
    }
    drop(push);
    Ok(DiscreteOperator {
        grid: *grid,
        stiffness: CsrMatrix::symmetric_from_upper(n, triplets),
        weights,
        potential,
        points,
    })
}

impl DiscreteOperator {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `A u = W^-1 K u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.stiffness.mul_vec(u);
        for (y, w) in y.iter_mut().zip(&self.weights) {
            *y /= w;
        }
        y
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.weights).map(|((a, b), w)| w * a * b).sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Values of a field at the unknowns.
    pub fn sample(&self, f: &ScalarField) -> Result<Vec<f64>> {
        self.points.iter().map(|&p| f.value(p)).collect()
    }

    /// The operator with `V` replaced by `V + c`.
    pub fn shifted(&self, c: f64) -> DiscreteOperator {
        let mut out = self.clone();
        for i in 0..out.len() {
            let k = out.stiffness.row_ptr[i] + out.stiffness.col_idx[out.stiffness.row_ptr[i]..out.stiffness.row_ptr[i + 1]]
                .binary_search(&i)
                .expect("diagonal is stored");
            out.stiffness.values[k] += c * out.weights[i];
            out.potential[i] += c;
        }
        out
    }

    /// w-weighted antisymmetry on `pairs` seeded random vector pairs.
    pub fn symmetry_residual(&self, pairs: usize, seed: u64) -> SymmetryReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = SymmetryReport { max_residual: 0.0, max_scaled_residual: 0.0, pairs };
        for _ in 0..pairs {
            let u: Vec<f64> = (0..self.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..self.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (au, av) = (self.apply(&u), self.apply(&v));
            let d = (self.inner(&au, &v) - self.inner(&u, &av)).abs();
            let (nu, nv) = (self.norm(&u), self.norm(&v));
            report.max_residual = report.max_residual.max(d / (nu * nv));
            report.max_scaled_residual =
                report.max_scaled_residual.max(d / (self.norm(&au) * nv + nu * self.norm(&av)));
        }
        report
    }

    /// `min_p (K_pp - sum_q |K_pq|) / w_p`, a lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let (mut d, mut off) = (0.0, 0.0);
                for (j, v) in self.stiffness.row(i) {
                    if i == j {
                        d = v;
                    } else {
                        off += v.abs();
                    }
                }
                (d - off) / self.weights[i]
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Matrix Market coordinate export of `A = W^-1 K`.
    pub fn write_coo(&self, out: &mut impl Write) -> io::Result<()> {
        let inv: Vec<f64> = self.weights.iter().map(|w| 1.0 / w).collect();
        self.stiffness.write_coo(out, Some(&inv))
    }
}

/// Observed convergence orders `log2(e_k / e_{k+1})` of the discrete
/// operator against the pointwise one under repeated halving.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyStudy {
    pub cells: Vec<[usize; 3]>,
    /// Max error over the comparison nodes at each level.
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub points: usize,
}

/// Compare `A u` with the continuum operator at nodes of the coarsest grid
/// at least two coarse cells from the boundary; those nodes are shared by
/// every refinement and their stencils never touch Dirichlet data.
pub fn consistency_study<F: FluxForm + ?Sized>(
    op: &F,
    coarse: &SpectralGrid,
    levels: usize,
    u: &ScalarField,
) -> Result<ConsistencyStudy> {
    if levels < 2 {
        return Err(Error::InvalidInput("consistency study needs at least two levels".into()));
    }
    if (0..3).any(|k| coarse.active[k] && coarse.cells[k] < 5) {
        return Err(Error::InvalidInput("coarse grid needs at least 5 cells per active axis".into()));
    }
    let mut probe = Vec::new();
    for n in 0..coarse.len() {
        let idx = coarse.node_index(n);
        if (0..3).all(|k| !coarse.active[k] || (idx[k] >= 2 && idx[k] + 2 <= coarse.cells[k])) {
            probe.push(idx);
        }
    }
    let mut exact = Vec::with_capacity(probe.len());
    for idx in &probe {
        let p = coarse.point(*idx);
        exact.push(op.apply_pointwise(&u.jet(p)?, p)?);
    }
    let mut grid = *coarse;
    let mut cells = Vec::new();
    let mut errors = Vec::new();
    for level in 0..levels {
        let dop = discretize(op, &grid)?;
        let au = dop.apply(&dop.sample(u)?);
        let factor = 1usize << level;
        let mut e: f64 = 0.0;
        for (idx, want) in probe.iter().zip(&exact) {
            let fine = [0, 1, 2].map(|k| if grid.active[k] { idx[k] * factor } else { 0 });
            let n = grid.unknown(fine).expect("probe nodes are interior");
            e = e.max((au[n] - want).abs());
        }
        cells.push(grid.cells);
        errors.push(e);
        grid = grid.refined();
    }
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ConsistencyStudy { cells, errors, orders, points: probe.len() })
}
