//! `complete`: completeness evidence. Kerr charts get the horizon length
//! divergence of `g^`, the `sigma^2 / U^2` bound and inward geodesic shots;
//! other spacetimes get the completion metrics, their comparisons and
//! geodesic speed conservation.

use std::f64::consts::FRAC_PI_2;

use stkg_core::completeness::probes::radial_divergence_probe;
use stkg_core::completeness::quadrature::integrate;
use stkg_core::completeness::{build_completion, inward_shots, integrate_geodesic, psd_difference, GeodesicTolerances};
use stkg_core::kerr::{hat_metric, sigma_ratio, KerrSpacetime};
use stkg_core::{ChartBox, SymMetricField};

use super::{failure, internal, worst, Context};
use crate::report::{Outcome, Record, Table};
use crate::CliError;

pub const SLOPE_REL_TOL: f64 = 0.02;
pub const MIN_R_SQUARED: f64 = 0.999;
pub const FLAT_SLOPE_TOL: f64 = 1e-3;
pub const SIGMA_TOL: f64 = 1e-12;
pub const SPEED_TOL: f64 = 1e-8;
pub const QUADRATURE_TOL: f64 = 1e-6;
pub const FORM_TOL: f64 = 1e-12;

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    match &ctx.model.kerr {
        Some(k) => kerr(ctx, k),
        None => stationary(ctx),
    }
}

/// Coefficient of `log(1/eps)` in `int_{r+ + eps} sigma / Delta dr`:
/// `Delta = (r - r+)(r - r-)` and `sigma(r+) = r+^2 + a^2`.
pub fn horizon_log_coefficient(mass: f64, spin: f64) -> f64 {
    let d = (mass * mass - spin * spin).sqrt();
    let (rp, rm) = (mass + d, mass - d);
    (rp * rp + spin * spin) / (rp - rm)
}

fn kerr(ctx: &Context, k: &KerrSpacetime) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let opts = &ctx.cfg.complete;
    let params = k.params;
    let rp = params.r_plus();
    let chart = k.chart;
    let hat = hat_metric(params, false);
    let grr = |r: f64, th: f64| hat.value([r, th, 0.0]).map(|g| g.get(0, 0)).unwrap_or(f64::NAN);
    let r0 = chart.lower[0].max(rp + 2.0 * opts.epsilons.first().copied().unwrap_or(0.01));

    let oracle = horizon_log_coefficient(params.mass, params.spin);
    let mut table = Table::new("divergence.csv", &["theta", "epsilon", "log_inv_epsilon", "length"]);
    let (lo, hi) = (chart.lower[1], chart.upper[1]);
    let mut slope_err: f64 = 0.0;
    let mut min_r2: f64 = 1.0;
    let mut slopes = Vec::new();
    for th in [lo + 0.25 * (hi - lo), 0.5 * (lo + hi), lo + 0.75 * (hi - lo)] {
        let fit = match radial_divergence_probe(|r| grr(r, th), rp, &opts.epsilons, r0) {
            Ok(f) => f,
            Err(e) => return Err(internal(e)),
        };
        for (e, l) in fit.epsilons.iter().zip(&fit.lengths) {
            table.rows.push(vec![th, *e, (1.0 / e).ln(), *l]);
        }
        slope_err = worst(slope_err, (fit.fit.slope - oracle).abs() / oracle);
        min_r2 = min_r2.min(fit.fit.r_squared);
        slopes.push((th, fit.fit.slope));
    }
    out.tables.push(table);
    out.records.push(
        Record::new("horizon_divergence", "radial length int sigma/Delta dr diverges logarithmically at r+")
            .input("epsilons", &opts.epsilons)
            .input("r_outer", r0)
            .output("slopes", &slopes)
            .output("oracle_slope", oracle)
            .output("min_r_squared", min_r2)
            .residual("min_r_squared_deficit", MIN_R_SQUARED - min_r2)
            .at_most("slope_relative_error", slope_err, SLOPE_REL_TOL)
            .judged(slope_err <= SLOPE_REL_TOL && min_r2 >= MIN_R_SQUARED, Some(SLOPE_REL_TOL)),
    );
    let flat = radial_divergence_probe(|_| 1.0, rp, &opts.epsilons, r0).map_err(internal)?;
    out.records.push(
        Record::new("flat_control", "bounded integrand gives no divergence")
            .at_most("slope", flat.fit.slope.abs(), FLAT_SLOPE_TOL),
    );

    let mut min_ratio = f64::INFINITY;
    let mut witness = chart.center();
    for p in ctx.model.sample.nodes() {
        let (r, _) = sigma_ratio(params, p[0], p[1]);
        if r < min_ratio {
            min_ratio = r;
            witness = p;
        }
    }
    let mut gen = ctx.generator(30);
    let mut identity = 0.0;
    let points = ctx.cfg.check.points;
    for _ in 0..points {
        let p = gen.point();
        let (a, b) = sigma_ratio(params, p[0], p[1]);
        identity = worst(identity, (a - b).abs() / a);
    }
    out.records.push(
        Record::new("sigma_ratio_bound", "sigma^2 / U^2 >= 1, so g~ and g^ are equivalent")
            .output("min_ratio", min_ratio)
            .output("argmin", witness)
            .residual("deficit", 1.0 - min_ratio)
            .judged(min_ratio >= 1.0 - SIGMA_TOL, Some(SIGMA_TOL)),
    );
    out.records.push(
        Record::new("sigma_ratio_identity", "sigma^2/U^2 = 1 + a^2 sin^2/U + 2Mra^2 sin^2/U^2")
            .input("points", points)
            .at_most("max_relative_residual", identity, SIGMA_TOL),
    );

    // Radial lines are geodesics of g^ in the equatorial plane.
    let equatorial = lo < FRAC_PI_2 && FRAC_PI_2 < hi;
    let th = if equatorial { FRAC_PI_2 } else { 0.5 * (lo + hi) };
    let r_start = 0.5 * (chart.lower[0] + chart.upper[0]);
    let start = [r_start, th, 0.5 * (chart.lower[2] + chart.upper[2])];
    let shot_chart = ChartBox::new([rp, chart.lower[1], chart.lower[2]], chart.upper).map_err(internal)?;
    let tol = GeodesicTolerances { rtol: 1e-12, atol: 1e-14, ..Default::default() };
    let shots = inward_shots(&hat, &shot_chart, rp, start, &opts.inward_epsilons, 1e6, &tol).map_err(internal)?;
    let mut table = Table::new("inward.csv", &["epsilon", "distance", "quadrature"]);
    let mut monotone = true;
    let mut prev = 0.0;
    let mut quad_err = 0.0;
    let mut missing = Vec::new();
    for s in &shots {
        let q = integrate(|r| grr(r, th).sqrt(), rp + s.epsilon, r_start, 1e-13, 1e-13, 5000).map_err(internal)?.value;
        let d = match s.distance {
            Some(d) => d,
            None => {
                missing.push(s.epsilon);
                f64::NAN
            }
        };
        monotone &= d > prev;
        prev = d;
        quad_err = worst(quad_err, (d - q).abs() / q);
        table.rows.push(vec![s.epsilon, d, q]);
    }
    out.tables.push(table);
    out.records.push(
        Record::new("inward_shots", "affine distance to r+ + eps grows as eps decreases")
            .input("epsilons", &opts.inward_epsilons)
            .input("start", start)
            .output("unreached", &missing)
            .judged(monotone && missing.is_empty(), None),
    );
    let rec = Record::new("inward_vs_quadrature", "radial geodesic distance equals int sigma/Delta dr");
    out.records.push(if equatorial {
        rec.at_most("max_relative_residual", quad_err, QUADRATURE_TOL)
    } else {
        rec.residual("max_relative_residual", quad_err)
            .detail("informational: the chart misses the equator, so radial lines need not be geodesics")
    });
    Ok(out)
}

fn stationary(ctx: &Context) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let m = ctx.model;
    let grid = &m.sample;
    let c = match build_completion(&m.metric, grid) {
        Ok(c) => c,
        Err(e) => {
            out.records.push(failure("completion_metrics", "completion metrics need |N|^2_g~ < 1", e)?);
            return Ok(out);
        }
    };
    let r = c.report;
    out.records.push(
        Record::new("completion_metrics", "completion metrics need |N|^2_g~ < 1")
            .output("max_shift_norm", r.max_shift_norm)
            .output("lapse_min", r.lapse_min)
            .output("lapse_max", r.lapse_max)
            .judged(true, Some(1.0)),
    );
    out.records.push(
        Record::new("h_minus_k_tilde_psd", "h - k~ is positive semidefinite")
            .output("min_eigenvalue", r.h_minus_k_tilde.min_eigenvalue)
            .judged(r.h_minus_k_tilde.psd, Some(stkg_core::completeness::equivalence::PSD_TOLERANCE.abs()))
            .witness((!r.h_minus_k_tilde.psd).then_some(r.h_minus_k_tilde.witness)),
    );
    out.records.push(
        Record::new("k_vs_k_tilde", "k = N^2 k~ with constants from the lapse bounds")
            .output("lower", r.k_vs_k_tilde.lower)
            .output("upper", r.k_vs_k_tilde.upper)
            .output("lapse_min_squared", r.lapse_min * r.lapse_min)
            .output("lapse_max_squared", r.lapse_max * r.lapse_max),
    );
    out.records.push(
        Record::new("h_tilde_form", "h~ = N^-2 h matches its expanded form")
            .at_most("max_relative_residual", r.h_tilde_form_residual, FORM_TOL),
    );
    out.records.push(
        Record::new("h_is_reduced_metric", "h equals g_ij + N_i N_j / (N^2 - N_k N^k)")
            .at_most("max_relative_residual", r.h_vs_reduced_residual, FORM_TOL),
    );

    let g_tilde = m.metric.rescaled_spatial();
    let psd = psd_difference(&c.h_tilde, &g_tilde, grid).map_err(internal)?;
    out.records.push(
        Record::new("h_tilde_minus_g_tilde_psd", "h~ - g~ is positive semidefinite")
            .output("min_eigenvalue", psd.min_eigenvalue)
            .judged(psd.psd, Some(stkg_core::completeness::equivalence::PSD_TOLERANCE.abs()))
            .witness((!psd.psd).then_some(psd.witness)),
    );
    let shrunk = g_tilde.conformal(&stkg_core::ScalarField::constant(0.999));
    let control = psd_difference(&shrunk, &g_tilde, grid).map_err(internal)?;
    out.records.push(
        Record::new("forced_negative_control", "0.999 g~ - g~ must be detected as indefinite")
            .output("min_eigenvalue", control.min_eigenvalue)
            .judged(!control.psd, None),
    );

    out.records.push(speed_record(ctx, &g_tilde, m.chart)?);
    Ok(out)
}

/// Geodesics of `metric` over affine span `span`, started inside the middle
/// half of the chart with speed small enough to stay in it.
fn speed_record(ctx: &Context, metric: &SymMetricField, chart: ChartBox) -> Result<Record, CliError> {
    let opts = &ctx.cfg.complete;
    let mut inner = chart;
    let mut wmin = f64::INFINITY;
    for k in 0..3 {
        let w = chart.width(k);
        inner.lower[k] += 0.25 * w;
        inner.upper[k] -= 0.25 * w;
        wmin = wmin.min(w);
    }
    let mut gen = ctx.generator_on(31, inner);
    let tol = GeodesicTolerances::default();
    let mut drift = 0.0;
    let mut failures = Vec::new();
    for _ in 0..opts.shots {
        let x0 = gen.point();
        let mut v = gen.point();
        let c = inner.center();
        for k in 0..3 {
            v[k] -= c[k];
        }
        let s = metric.value(x0).map_err(internal)?.quad(&v, &v).sqrt();
        if !(s > 0.0) {
            continue;
        }
        let scale = 0.2 * wmin / (opts.span * s);
        let v = v.map(|x| x * scale);
        let run = integrate_geodesic(metric, &chart, x0, v, opts.span, &tol).map_err(internal)?;
        if !matches!(run.termination, stkg_core::completeness::Termination::CompletedSpan) {
            failures.push(x0);
        }
        drift = worst(drift, run.speed_drift);
    }
    Ok(Record::new("speed_conservation", "geodesic speed is constant along g~ geodesics")
        .input("shots", opts.shots)
        .input("span", opts.span)
        .output("incomplete_runs", failures.len())
        .at_most("max_speed_drift", drift, SPEED_TOL)
        .witness(failures.first().copied()))
}
