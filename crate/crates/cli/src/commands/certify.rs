//! `certify`: the self-adjointness hypothesis checklist. Kerr input goes
//! through the azimuthal sector route, everything else through the
//! stationary route.

use stkg_core::spectral::certificate::{CompletenessEvidence, Verdict};
use stkg_core::spectral::{sa_certificate, CertificateInput};

use super::Context;
use crate::report::{Outcome, Record, Status, Table};
use crate::CliError;

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    let m = ctx.model;
    let input = match &m.kerr {
        Some(k) => CertificateInput::KerrMode { params: k.params, chart: k.chart, k: ctx.cfg.operator.k, m2: m.m2.clone() },
        None => CertificateInput::Stationary { metric: m.metric.clone(), m2: m.m2.clone(), chart: m.chart },
    };
    let ladder = ctx.cfg.certify.ladder.clone().unwrap_or_else(|| input.default_ladder());
    let cert = sa_certificate(&input, &ladder);

    let mut out = Outcome::default();
    if let Some(t) = &cert.timelike {
        out.records.push(
            Record::new("timelike_evidence", "Killing field timelike on the open chart")
                .output("nodes", t.nodes)
                .output("min_margin", t.min_margin)
                .output("worst_point", t.worst_point)
                .witness(t.witness),
        );
    }
    match &cert.completeness {
        Some(CompletenessEvidence::Shots(shots)) => {
            let lengths: Vec<f64> = shots.iter().map(|s| s.length).collect();
            let ends: Vec<String> = shots.iter().map(|s| format!("{:?}", s.termination)).collect();
            out.records.push(
                Record::new("completeness_evidence", "geodesics of h~ leave the chart without step failure")
                    .output("lengths", lengths)
                    .output("terminations", ends),
            );
        }
        Some(CompletenessEvidence::Kerr { divergence, min_sigma_ratio }) => {
            let slopes: Vec<(f64, f64, f64)> =
                divergence.iter().map(|(th, f)| (*th, f.fit.slope, f.fit.r_squared)).collect();
            out.records.push(
                Record::new("completeness_evidence", "radial g^ length diverges at r+ and sigma^2/U^2 >= 1")
                    .output("theta_slope_r_squared", slopes)
                    .output("min_sigma_ratio", min_sigma_ratio),
            );
        }
        None => {}
    }
    if let Some(p) = &cert.potential {
        out.records.push(
            Record::new("potential_evidence", "V in L^2_loc, measured against mu and mu~")
                .output("nodes", p.nodes)
                .output("min_negative_part", p.min_negative_part)
                .output("max_positive_part", p.max_positive_part)
                .output("positive_l2_mu", p.positive_l2_mu)
                .output("positive_l2_mu_tilde", p.positive_l2_mu_tilde)
                .output("negative_l2_mu", p.negative_l2_mu)
                .output("negative_l2_mu_tilde", p.negative_l2_mu_tilde),
        );
    }
    if let Some(s) = &cert.semi_bounded {
        let mut table = Table::new("ladder.csv", &["level", "unknowns", "smallest_eigenvalue", "residual"]);
        for (i, l) in s.levels.iter().enumerate() {
            table.rows.push(vec![i as f64, l.unknowns as f64, l.smallest, l.residual]);
        }
        out.tables.push(table);
        let smallest: Vec<f64> = s.levels.iter().map(|l| l.smallest).collect();
        out.records.push(
            Record::new("semi_bounded_evidence", "discrete lowest eigenvalue stays above the lower bound")
                .input("ladder", &ladder)
                .output("smallest", smallest)
                .output("lower_bound", s.lower_bound)
                .output("non_increasing", s.non_increasing),
        );
    }

    let mut verdict = Record::new("certificate", "hypotheses for essential self-adjointness of w^2 on C_0^inf")
        .input("route", cert.route)
        .output("verdict", cert.verdict.label());
    verdict = match &cert.verdict {
        Verdict::HypothesesSupported => verdict.judged(true, None),
        Verdict::HypothesisFailed { name, witness, detail } => verdict
            .output("failed_hypothesis", name)
            .judged(false, None)
            .witness(*witness)
            .detail(detail.clone()),
        Verdict::Inconclusive { reason } => verdict.judged(false, None).detail(reason.clone()),
    };
    debug_assert!(verdict.verdict != Status::Info);
    out.records.push(verdict);
    Ok(out)
}
