//! `check`: timelike Killing field, lapse/shift bounds and the
//! determinant identities at seeded random points.

use stkg_core::kerr::ErgoClass;
use stkg_core::metric::DEGENERACY_MARGIN;

use super::{internal, worst, Context};
use crate::report::{Outcome, Record};
use crate::CliError;

pub const IDENTITY_TOL: f64 = 1e-10;
pub const REASSEMBLY_TOL: f64 = 1e-12;

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let m = ctx.model;
    let metric = &m.metric;

    let t = metric.check_assumption_timelike(&m.sample).map_err(internal)?;
    out.records.push(
        Record::new("timelike_killing", "Killing field timelike on the chart: N^2 - N_i N^i > 0")
            .input("sample", m.sample.counts)
            .output("nodes", t.nodes)
            .output("violations", t.violations)
            .output("min_margin", t.min_margin)
            .output("worst_point", t.worst_point)
            .output("g00_negative_everywhere", t.g00_negative_everywhere)
            .judged(t.holds, Some(0.0))
            .witness(t.first_violation)
            .detail(if t.holds {
                "margin positive at every sample node".to_string()
            } else {
                format!("{} of {} nodes have N^2 - N_i N^i <= 0", t.violations, t.nodes)
            }),
    );

    if let Some(kerr) = &m.kerr {
        let classes = kerr.ergo_class_grid(&m.sample);
        let count = |c: ErgoClass| classes.iter().filter(|(_, k)| *k == c).count();
        let first = classes.iter().find(|(_, k)| *k != ErgoClass::Outside).map(|(p, _)| *p);
        out.records.push(
            Record::new("ergoregion", "Kerr ergoregion r^2 - 2Mr + a^2 cos^2 theta < 0")
                .input("mass", kerr.params.mass)
                .input("spin", kerr.params.spin)
                .output("outside", count(ErgoClass::Outside))
                .output("inside", count(ErgoClass::Inside))
                .output("on_surface", count(ErgoClass::OnSurface))
                .judged(first.is_none(), Some(0.0))
                .witness(first),
        );
    }

    match metric.estimate_bounds(&m.sample, None) {
        Ok(b) => {
            let mut max_rescaled: f64 = 0.0;
            for p in m.sample.nodes() {
                max_rescaled = worst(max_rescaled, metric.rescaled_shift_norm(p).map_err(internal)?);
            }
            let ok = b.alpha_b > 0.0 && b.alpha_c.is_finite() && max_rescaled < 1.0;
            out.records.push(
                Record::new("lapse_shift_bounds", "uniform bounds 0 < alpha_b <= N <= alpha_c and |N|^2_g < N^2")
                    .output("alpha_b", b.alpha_b)
                    .output("alpha_c", b.alpha_c)
                    .output("shift_norm_bound", b.shift_norm_bound)
                    .output("max_rescaled_shift_norm", max_rescaled)
                    .judged(ok, Some(1.0)),
            );
        }
        Err(e) => out.records.push(super::failure("lapse_shift_bounds", "uniform bounds on lapse and shift", e)?),
    }

    // Identities are only meaningful where the decomposition is regular.
    let mut gen = ctx.generator(1);
    let mut points = Vec::with_capacity(ctx.cfg.check.points);
    let mut skipped = 0usize;
    for _ in 0..ctx.cfg.check.points {
        let p = gen.point();
        match metric.margin(p) {
            Ok(q) if q > DEGENERACY_MARGIN => points.push(p),
            Ok(_) => skipped += 1,
            Err(e) => return Err(internal(e)),
        }
    }
    let d = metric.verify_determinant_identity(points.iter().copied()).map_err(internal)?;
    out.records.push(
        Record::new("determinant_identity", "|h| = |g00^-1| |g|")
            .input("points", d.points)
            .input("skipped_non_timelike", skipped)
            .at_most("max_relative_residual", d.identity, IDENTITY_TOL),
    );
    out.records.push(
        Record::new("rho_consistency", "rho^2 |h| = |g| with rho = sqrt(|g| / |h|)")
            .input("points", d.points)
            .residual("rho_vs_sqrt_abs_g00", d.rho_vs_sqrt_g00)
            .residual("rho_vs_sqrt_abs_inv_g00", d.rho_vs_sqrt_inv_g00)
            .at_most("max_relative_residual", d.rho_consistency, IDENTITY_TOL)
            .detail("closed-form candidates sqrt|g00| and sqrt|g00^-1| are reported, not judged"),
    );

    if let Some(kerr) = &m.kerr {
        let (mut as_n, mut as_n2, mut sign, mut closed, mut reassembly) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut gen = ctx.generator(2);
        let n = ctx.cfg.check.points.min(1000);
        for _ in 0..n {
            let p = gen.point();
            let l = kerr.lapse_diagnostics(p).map_err(internal)?;
            as_n = worst(as_n, l.residual_as_n);
            as_n2 = worst(as_n2, l.residual_as_n2);
            let scale = l.g_t_phi.abs().max(f64::MIN_POSITIVE);
            sign = worst(sign, (l.shift_lower_phi - l.g_t_phi).abs() / scale);
            closed = worst(closed, (l.shift_lower_phi + l.closed_form_shift_lower).abs() / scale);
            reassembly = worst(reassembly, kerr.reassembly_residual(p).map_err(internal)?);
        }
        out.records.push(
            Record::new("kerr_reassembly", "Kerr metric rebuilt from lapse, shift and spatial blocks")
                .input("points", n)
                .at_most("max_relative_residual", reassembly, REASSEMBLY_TOL),
        );
        out.records.push(
            Record::new("kerr_lapse_forms", "Kerr lapse against Delta U / sigma^2 read as N and as N^2")
                .input("points", n)
                .residual("lapse_as_n", as_n)
                .residual("lapse_as_n_squared", as_n2)
                .residual("shift_lower_vs_g_t_phi", sign)
                .residual("shift_lower_vs_minus_closed_form", closed)
                .detail("Delta U / sigma^2 matches N^2; N_phi = g_tphi = -2Mar sin^2(theta)/U"),
        );
    }
    Ok(out)
}
