//! `spectrum`: discretize `w^2` (the azimuthal sector for Kerr), check
//! the discrete operator and compute its lowest eigenvalues.

use stkg_core::kerr::mode_operator;
use stkg_core::kgop::assemble_w2;
use stkg_core::spectral::{discretize, smallest_eigenvalues_with, DiscreteOperator, EigenOptions, FluxForm, SpectralGrid};

use super::{failure, internal, worst, Context};
use crate::report::{Outcome, Record, Table};
use crate::CliError;

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-8;
pub const LOWER_BOUND_SLACK: f64 = stkg_core::spectral::certificate::LOWER_BOUND_SLACK;

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let m = ctx.model;
    let cells = ctx.cfg.grid.cells;
    // Lower bound for the spectrum of the continuum operator on the grid.
    let (dop, bound, anchor) = if let Some(kerr) = &m.kerr {
        let mode = mode_operator(kerr, ctx.cfg.operator.k, &m.m2);
        let dop = match build(&mode, cells, &mut out)? {
            Some(d) => d,
            None => return Ok(out),
        };
        let (mut beta, mut v_neg) = (0.0f64, 0.0f64);
        for p in &dop.points {
            beta = beta.max(mode.effective_beta_sq_quarter(*p).map_err(internal)?);
            v_neg = v_neg.max(-mode.potential.value(*p).map_err(internal)?);
        }
        (dop, -beta - v_neg, "w_k^2 >= -max(beta^2/4) - max(V_-) on the grid")
    } else {
        let op = match assemble_w2(&m.metric, &m.m2, &m.sample) {
            Ok(op) => op,
            Err(e) => {
                out.records.push(failure("assemble_w2", "w^2 needs a timelike Killing field", e)?);
                return Ok(out);
            }
        };
        let dop = match build(&op, cells, &mut out)? {
            Some(d) => d,
            None => return Ok(out),
        };
        let vmin = dop.potential.iter().copied().fold(f64::INFINITY, f64::min);
        (dop, vmin, "w^2 = -Delta~ + V >= min V")
    };

    let sym = dop.symmetry_residual(ctx.cfg.spectrum.symmetry_pairs, ctx.cfg.seed);
    out.records.push(
        Record::new("discrete_symmetry", "<A u, v>_w = <u, A v>_w")
            .input("pairs", sym.pairs)
            .input("unknowns", dop.len())
            .residual("max_scaled_residual", sym.max_scaled_residual)
            .at_most("max_residual", sym.max_residual, SYMMETRY_TOL),
    );
    out.records.push(
        Record::new("stiffness_symmetric", "assembled stiffness matrix is exactly symmetric")
            .input("nnz", dop.stiffness.nnz())
            .judged(dop.stiffness.is_symmetric(), Some(0.0)),
    );

    let mut opts = EigenOptions::new(ctx.cfg.spectrum.count.min(dop.len()));
    opts.seed = ctx.cfg.seed;
    let spec = smallest_eigenvalues_with(&dop, &opts).map_err(|e| CliError::Internal(e.to_string()))?;
    let residual = spec.residuals.iter().copied().fold(0.0, worst);
    out.records.push(
        Record::new("eigenpairs", "lowest eigenpairs of A = W^-1 K")
            .input("count", opts.count)
            .input("unknowns", dop.len())
            .output("eigenvalues", &spec.values)
            .output("lanczos_runs", spec.runs)
            .output("inner_iterations", spec.inner_iterations)
            .residual("orthogonality", spec.orthogonality)
            .at_most("max_residual", worst(residual, spec.orthogonality), EIGEN_TOL),
    );
    let lowest = spec.values[0];
    out.records.push(
        Record::new("semi_bounded", anchor)
            .output("smallest", lowest)
            .output("lower_bound", bound)
            .residual("violation", bound - LOWER_BOUND_SLACK - lowest)
            .judged(lowest >= bound - LOWER_BOUND_SLACK, Some(LOWER_BOUND_SLACK)),
    );

    if ctx.cfg.spectrum.shift_check {
        let shifted = dop.shifted(1.0);
        let s2 = smallest_eigenvalues_with(&shifted, &opts).map_err(|e| CliError::Internal(e.to_string()))?;
        let scale = spec.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let gap = spec.values.iter().zip(&s2.values).map(|(a, b)| (b - a - 1.0).abs()).fold(0.0, worst);
        out.records.push(
            Record::new("constant_shift", "adding 1 to V moves every eigenvalue by exactly 1")
                .at_most("max_relative_deviation", gap / scale, EIGEN_TOL),
        );
    }

    let mut table = Table::new("eigenvalues.csv", &["index", "eigenvalue", "residual"]);
    for (i, (v, r)) in spec.values.iter().zip(&spec.residuals).enumerate() {
        table.rows.push(vec![i as f64, *v, *r]);
    }
    out.tables.push(table);
    if ctx.cfg.spectrum.export_matrix {
        let mut mtx = Vec::new();
        dop.write_coo(&mut mtx).map_err(|e| CliError::Internal(e.to_string()))?;
        out.files.push(("matrix.mtx".into(), mtx));
        let mut w = Table::new("weights.csv", &["index", "x0", "x1", "x2", "weight"]);
        for (i, (p, wt)) in dop.points.iter().zip(&dop.weights).enumerate() {
            w.rows.push(vec![i as f64, p[0], p[1], p[2], *wt]);
        }
        out.tables.push(w);
    }
    Ok(out)
}

/// Discretize on `cells`; axes with one cell, or that the operator does
/// not differentiate along, are fixed.
fn build<F: FluxForm>(op: &F, cells: [usize; 3], out: &mut Outcome) -> Result<Option<DiscreteOperator>, CliError> {
    let natural = op.natural_axes();
    let active = [0, 1, 2].map(|k| natural[k] && cells[k] > 1);
    let grid = SpectralGrid::new(op.domain(), cells, active).map_err(|e| CliError::Config(e.to_string()))?;
    match discretize(op, &grid) {
        Ok(d) => {
            out.records.push(
                Record::new("discretize", "finite-volume form with positive measure and flux")
                    .input("cells", grid.cells)
                    .input("active_axes", grid.active)
                    .output("unknowns", d.len())
                    .judged(true, Some(0.0)),
            );
            Ok(Some(d))
        }
        Err(e) => {
            out.records.push(failure("discretize", "finite-volume form with positive measure and flux", e)?);
            Ok(None)
        }
    }
}
