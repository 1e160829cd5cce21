//! Lowest eigenpairs of `A = W^-1 K` by shift-invert Lanczos in the
//! w-inner product.
//!
//! Each run builds a w-orthonormal Krylov basis of `(K - sigma W)^-1 W`
//! (inner solves by Jacobi-preconditioned CG, full reorthogonalization),
//! then extracts Ritz pairs of `K` itself on that basis so the inner-solve
//! error only slows convergence. Converged pairs are locked and later runs
//! stay w-orthogonal to them, which also recovers repeated eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::discretize::DiscreteOperator;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    pub count: usize,
    /// Krylov vectors per run.
    pub basis: usize,
    /// Acceptance: `|A v - lambda v|_w <= tol |v|_w`.
    pub tol: f64,
    pub max_restarts: usize,
    pub cg_tol: f64,
    pub seed: u64,
}

impl EigenOptions {
    pub fn new(count: usize) -> Self {
        Self { count, basis: 50, tol: 1e-8, max_restarts: 40, cg_tol: 1e-12, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub values: Vec<f64>,
    /// w-normalized eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    /// `|A v - lambda v|_w` per pair.
    pub residuals: Vec<f64>,
    pub shift: f64,
    pub runs: usize,
    pub inner_iterations: usize,
    /// `max_{i != j} |<v_i, v_j>_w|`.
    pub orthogonality: f64,
}

pub fn smallest_eigenvalues(dop: &DiscreteOperator, count: usize) -> Result<Spectrum> {
    smallest_eigenvalues_with(dop, &EigenOptions::new(count))
}

struct Shifted<'a> {
    dop: &'a DiscreteOperator,
    sigma: f64,
    precond: Vec<f64>,
}

impl Shifted<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.dop.stiffness.mul_vec_into(x, y);
        for ((y, x), w) in y.iter_mut().zip(x).zip(&self.dop.weights) {
            *y -= self.sigma * w * x;
        }
    }

    /// Solve `(K - sigma W) x = b`.
    fn solve(&self, b: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
        let n = b.len();
        let bnorm = dot(b, b).sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok((x, 0));
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.precond).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut q = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let cap = n.max(1000) * 2;
        for it in 1..=cap {
            self.apply(&p, &mut q);
            let alpha = rz / dot(&p, &q);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            let rn = dot(&r, &r).sqrt();
            if rn <= tol * bnorm {
                return Ok((x, it));
            }
            for i in 0..n {
                z[i] = r[i] / self.precond[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let mut res = vec![0.0; n];
        self.apply(&x, &mut res);
        let rn = res.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        Err(Error::NoConvergence { what: "shifted CG solve", iterations: cap, residual: rn / bnorm })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Remove w-components along `basis` (twice) and return the remaining norm.
fn orthogonalize(dop: &DiscreteOperator, v: &mut [f64], basis: &[&[f64]]) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let c = dop.inner(v, q);
            for (x, y) in v.iter_mut().zip(q.iter()) {
                *x -= c * y;
            }
        }
    }
    dop.norm(v)
}

struct RitzPair {
    value: f64,
    vector: Vec<f64>,
    residual: f64,
}

pub fn smallest_eigenvalues_with(dop: &DiscreteOperator, opts: &EigenOptions) -> Result<Spectrum> {
    let n = dop.len();
    if opts.count == 0 || opts.count > n {
        return Err(Error::InvalidInput(format!("requested {} eigenvalues of a {n}-dimensional operator", opts.count)));
    }
    let g = dop.gershgorin_lower();
    let diag_scale = dop.stiffness.diagonal().iter().zip(&dop.weights).map(|(d, w)| d / w).fold(0.0f64, f64::max);
    let sigma = g - 1e-2 * g.abs().max(1e-3 * diag_scale).max(1e-12);
    let precond: Vec<f64> = dop.stiffness.diagonal().iter().zip(&dop.weights).map(|(d, w)| d - sigma * w).collect();
    let shifted = Shifted { dop, sigma, precond };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<RitzPair> = Vec::new();
    let mut inner_iterations = 0;
    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut worst = f64::INFINITY;

    for run in 1..=opts.max_restarts {
        let locked_refs: Vec<&[f64]> = locked.iter().map(|p| p.vector.as_slice()).collect();
        let room = n - locked.len();
        if room == 0 {
            break;
        }
        let m = opts.basis.min(room);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let nrm = orthogonalize(dop, &mut start, &locked_refs);
        if !(nrm > 0.0) {
            return Err(Error::NoConvergence { what: "Lanczos start vector", iterations: run, residual: f64::NAN });
        }
        basis.push(start.iter().map(|x| x / nrm).collect());
        while basis.len() < m {
            let last = basis.last().expect("non-empty basis");
            let rhs: Vec<f64> = last.iter().zip(&dop.weights).map(|(x, w)| x * w).collect();
            let (mut x, its) = shifted.solve(&rhs, opts.cg_tol)?;
            inner_iterations += its;
            let before = dop.norm(&x);
            let refs: Vec<&[f64]> = locked_refs.iter().copied().chain(basis.iter().map(|v| v.as_slice())).collect();
            let after = orthogonalize(dop, &mut x, &refs);
            if after <= 1e-10 * before {
                break;
            }
            basis.push(x.iter().map(|v| v / after).collect());
        }

        let dim = basis.len();
        let k_basis: Vec<Vec<f64>> = basis.iter().map(|q| dop.stiffness.mul_vec(q)).collect();
        let h = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (dot(&basis[i], &k_basis[j]) + dot(&basis[j], &k_basis[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let wanted = (opts.count + 3).min(dim);
        let mut candidates = Vec::with_capacity(wanted);
        for &c in order.iter().take(wanted) {
            let lambda = eig.eigenvalues[c];
            let mut y = vec![0.0; n];
            let mut ky = vec![0.0; n];
            for i in 0..dim {
                let z = eig.eigenvectors[(i, c)];
                for t in 0..n {
                    y[t] += z * basis[i][t];
                    ky[t] += z * k_basis[i][t];
                }
            }
            let ny = dop.norm(&y);
            let r: Vec<f64> = (0..n).map(|t| ky[t] / dop.weights[t] - lambda * y[t]).collect();
            let residual = dop.norm(&r) / ny;
            y.iter_mut().for_each(|v| *v /= ny);
            candidates.push(RitzPair { value: lambda, vector: y, residual });
        }

        let kth_before = if locked.len() >= opts.count {
            let mut v: Vec<f64> = locked.iter().map(|p| p.value).collect();
            v.sort_by(f64::total_cmp);
            Some(v[opts.count - 1])
        } else {
            None
        };
        let mut fresh_below = false;
        let mut next_start = None;
        for pair in candidates {
            if pair.residual <= opts.tol {
                if let Some(kth) = kth_before {
                    let gap = 1e-9 * kth.abs().max(1.0);
                    if pair.value < kth - gap {
                        fresh_below = true;
                    }
                }
                locked.push(pair);
            } else {
                worst = worst.min(pair.residual);
                if next_start.is_none() {
                    next_start = Some(pair.vector);
                }
            }
        }
        let done = match kth_before {
            Some(_) => !fresh_below,
            None => false,
        } || (locked.len() >= opts.count && locked.len() == n);
        if done {
            locked.sort_by(|a, b| a.value.total_cmp(&b.value));
            locked.truncate(opts.count);
            let values = locked.iter().map(|p| p.value).collect();
            let residuals = locked.iter().map(|p| p.residual).collect();
            let vectors: Vec<Vec<f64>> = locked.into_iter().map(|p| p.vector).collect();
            let mut orthogonality: f64 = 0.0;
            for i in 0..vectors.len() {
                for j in 0..i {
                    orthogonality = orthogonality.max(dop.inner(&vectors[i], &vectors[j]).abs());
                }
            }
            return Ok(Spectrum { values, vectors, residuals, shift: sigma, runs: run, inner_iterations, orthogonality });
        }
        let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        start = match next_start {
            Some(v) => {
                let s = 0.1 / dop.norm(&noise).max(f64::MIN_POSITIVE);
                v.iter().zip(&noise).map(|(a, b)| a + s * b).collect()
            }
            None => noise,
        };
    }
    Err(Error::NoConvergence { what: "shift-invert Lanczos", iterations: opts.max_restarts, residual: worst })
}
