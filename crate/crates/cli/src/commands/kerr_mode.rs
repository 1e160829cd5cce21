//! `kerr-mode`: the azimuthal sector operator of Kerr, its
//! phi-independence and the comparison with the closed-form potential.

use stkg_core::kerr::{mode_operator, ErgoClass};
use stkg_core::kgop::{assemble_w2, relative_difference, OperatorForm};
use stkg_core::ScalarField;

use super::{internal, worst, Context};
use crate::report::{Outcome, Record};
use crate::CliError;

pub const CONJUGATION_TOL: f64 = 1e-10;
pub const ROUTE_TOL: f64 = 1e-10;

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let kerr = ctx.model.kerr()?;
    let k = ctx.cfg.operator.k;
    let mode = mode_operator(kerr, k, &ctx.model.m2);
    let n = ctx.cfg.kerr_mode.points;
    let chart = kerr.chart;

    let mut gen = ctx.generator(20);
    let (mut phi_dep, mut imag, mut sector) = (0.0, 0.0, 0.0);
    let (mut pot_gap, mut op_gap) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let b = gen.bump([true, true, false]);
        let mut p = gen.point_in(&b);
        let u = ScalarField::from_rule(b);
        let c1 = mode.conjugate(&u, p).map_err(internal)?;
        let phi = gen.point()[2];
        let q = [p[0], p[1], phi];
        let c2 = mode.conjugate(&u, q).map_err(internal)?;
        let scale = c1.re.abs().max(c2.re.abs());
        phi_dep = worst(phi_dep, relative_difference(c1.re, c2.re));
        imag = worst(imag, c1.im.abs().max(c2.im.abs()) / scale);
        p[2] = phi;
        let cmp = mode.compare(&u, p).map_err(internal)?;
        sector = worst(sector, relative_difference(cmp.conjugation, cmp.sector_form));
        pot_gap = pot_gap.max((cmp.sector_potential - cmp.closed_form_potential).abs());
        op_gap = op_gap.max(relative_difference(cmp.sector_form, cmp.closed_form));
    }
    out.records.push(
        Record::new("phi_independence", "e^{ik phi} w^2 (e^{-ik phi} u) is independent of phi and real")
            .input("k", k)
            .input("pairs", n)
            .residual("imaginary_part", imag)
            .at_most("max_relative_residual", worst(phi_dep, imag), CONJUGATION_TOL),
    );
    out.records.push(
        Record::new("sector_reduction", "w_k^2 = -N^2 Delta_{mu,g} + k^2 (N^2 g^phiphi - (N^phi)^2) + V")
            .input("k", k)
            .input("pairs", n)
            .at_most("max_relative_residual", sector, CONJUGATION_TOL),
    );
    out.records.push(
        Record::new("closed_form_comparison", "sector potential against -k^2 N^6 / 4")
            .input("k", k)
            .output("max_potential_gap", pot_gap)
            .output("max_operator_relative_gap", op_gap)
            .detail("informational: the closed form is not the conjugated operator"),
    );

    // Outside the ergoregion the h route of w^2 applies as well.
    let classes = kerr.ergo_class_grid(&ctx.model.sample);
    let exterior = classes.iter().all(|(_, c)| *c == ErgoClass::Outside);
    if exterior {
        match assemble_w2(&kerr.metric, &ctx.model.m2, &ctx.model.sample) {
            Ok(op) => {
                let mut gen = ctx.generator(21);
                let mut gap = 0.0;
                for _ in 0..n {
                    let b = gen.bump([true; 3]);
                    let p = gen.point_in(&b);
                    let u = ScalarField::from_rule(b);
                    let a = op.apply_w2(&u, p, OperatorForm::Raw).map_err(internal)?;
                    let g = mode.apply_full(&u.jet(p).map_err(internal)?, p).map_err(internal)?;
                    gap = worst(gap, relative_difference(a, g));
                }
                out.records.push(
                    Record::new("g_route_vs_h_route", "-N^2 Delta_{mu,g} + N^i N^j d_i d_j + V = -N^2 Delta_{mu,h} + V")
                        .input("pairs", n)
                        .at_most("max_relative_residual", gap, ROUTE_TOL),
                );
            }
            Err(e) => out.records.push(super::failure("g_route_vs_h_route", "h route needs a timelike Killing field", e)?),
        }
    } else {
        out.records.push(
            Record::new("g_route_vs_h_route", "h route needs a timelike Killing field")
                .detail("skipped: the sample grid meets the ergoregion"),
        );
    }

    // The sector potential is negative exactly inside the ergoregion.
    let mut mismatches = 0usize;
    let mut first = None;
    let (mut max_eff, mut max_closed) = (0.0f64, 0.0f64);
    for (p, c) in &classes {
        let v = mode.sector_potential(*p).map_err(internal)?;
        let bad = match c {
            ErgoClass::Inside => !(v < 0.0),
            ErgoClass::Outside => k != 0 && !(v > 0.0),
            ErgoClass::OnSurface => false,
        };
        if bad {
            mismatches += 1;
            first.get_or_insert(*p);
        }
        max_eff = max_eff.max(mode.effective_beta_sq_quarter(*p).map_err(internal)?);
        max_closed = max_closed.max(mode.closed_form_beta(*p).map_err(internal)?.powi(2) / 4.0);
    }
    out.records.push(
        Record::new("sector_potential_sign", "k^2 (N^2 g^phiphi - (N^phi)^2) < 0 exactly inside the ergoregion")
            .input("k", k)
            .input("nodes", classes.len())
            .output("mismatches", mismatches)
            .judged(mismatches == 0, Some(0.0))
            .witness(first),
    );
    out.records.push(
        Record::new("beta_comparison", "comparison field beta^2 / 4")
            .input("k", k)
            .output("max_effective_beta_sq_quarter", max_eff)
            .output("max_closed_form_beta_sq_quarter", max_closed)
            .output("chart_lower", chart.lower)
            .output("chart_upper", chart.upper)
            .detail("effective: max(0, -sector potential); closed form: (k N^3)^2 / 4"),
    );
    Ok(out)
}
