//! `assemble`: build `w^2` and compare it with the spatial part of the 4D
//! wave operator, and check the conformal rescaling law.

use stkg_core::kgop::{assemble_w2, relative_difference, OperatorForm};
use stkg_core::ScalarField;

use super::{failure, internal, worst, Context};
use crate::report::{Outcome, Record};
use crate::CliError;

pub const REDUCTION_TOL: f64 = 1e-8;
pub const CONFORMAL_TOL: f64 = 1e-8;
/// The constant factor of the conformal-law check.
pub const CONSTANT_FACTOR: f64 = 2.5;

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let m = ctx.model;
    let op = match assemble_w2(&m.metric, &m.m2, &m.sample) {
        Ok(op) => op,
        Err(e) => {
            out.records.push(failure("assemble_w2", "w^2 = -N^2 Delta_{mu,h} + N^2 m^2 needs a timelike Killing field", e)?);
            return Ok(out);
        }
    };
    out.records.push(
        Record::new("assemble_w2", "w^2 = -N^2 Delta_{mu,h} + N^2 m^2 needs a timelike Killing field")
            .input("sample", m.sample.counts)
            .judged(true, Some(0.0)),
    );

    let n = ctx.cfg.assemble.points;
    let mut gen = ctx.generator(10);
    let (mut reduction, mut forms) = (0.0, 0.0);
    let (mut constant, mut lapse) = (0.0, 0.0);
    let scaled = op.weighted.conformal_rescale(&ScalarField::constant(CONSTANT_FACTOR)).map_err(internal)?;
    for _ in 0..n {
        let b = gen.bump([true; 3]);
        let p = gen.point_in(&b);
        let u = ScalarField::from_rule(b);
        let uj = u.jet(p).map_err(internal)?;
        let r = op.verify_reduction(&u, p).map_err(internal)?;
        reduction = worst(reduction, r.residual);
        let raw = op.apply_jet(&uj, p, OperatorForm::Raw).map_err(internal)?;
        let red = op.apply_jet(&uj, p, OperatorForm::Reduced).map_err(internal)?;
        forms = worst(forms, relative_difference(raw, red));
        // Rescaling by alpha divides the weighted Laplacian by alpha.
        let base = op.weighted.laplacian_of_jet(&uj, p).map_err(internal)?;
        let c = scaled.laplacian_of_jet(&uj, p).map_err(internal)?;
        constant = worst(constant, relative_difference(c, base / CONSTANT_FACTOR));
        let alpha = op.metric.inverse_lapse_squared().value(p).map_err(internal)?;
        let l = op.reduced.laplacian_of_jet(&uj, p).map_err(internal)?;
        lapse = worst(lapse, relative_difference(l, base / alpha));
    }
    out.records.push(
        Record::new("reduction", "w^2 equals (g^00)^-1 times the spatial part of box - m^2")
            .input("pairs", n)
            .at_most("max_relative_residual", reduction, REDUCTION_TOL),
    );
    out.records.push(
        Record::new("raw_vs_reduced", "-N^2 Delta_{mu,h} + V = -Delta~ + V on (N^-2 h, N^-2 mu)")
            .input("pairs", n)
            .at_most("max_relative_residual", forms, REDUCTION_TOL),
    );
    out.records.push(
        Record::new("conformal_law", "rescaling (h, mu) by alpha gives Delta~ = Delta / alpha")
            .input("pairs", n)
            .input("constant_alpha", CONSTANT_FACTOR)
            .residual("alpha_constant", constant)
            .residual("alpha_inverse_lapse_squared", lapse)
            .at_most("max_relative_residual", worst(constant, lapse), CONFORMAL_TOL),
    );
    Ok(out)
}
