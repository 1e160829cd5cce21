use crate::error::{Error, Result};
use crate::field::{ChartBox, SymMetricField};

use super::christoffel::christoffel;
use super::rkf78;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicTolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step, relative to `max(1, t)`, before the run is declared a
    /// step failure.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for GeodesicTolerances {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, min_step: 1e-12, max_steps: 200_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    CompletedSpan,
    /// Left the chart through the face `axis` (`upper` or lower) at affine
    /// time `time`, located to within `min_step` relative to `time`.
    LeftChart { axis: usize, upper: bool, time: f64 },
    StepFailure { point: [f64; 3], time: f64 },
}

#[derive(Clone, Debug)]
pub struct GeodesicRun {
    pub x0: [f64; 3],
    pub v0: [f64; 3],
    pub span: f64,
    /// `(t, x)` at every accepted step.
    pub path: Vec<(f64, [f64; 3])>,
    pub termination: Termination,
    pub final_time: f64,
    pub initial_speed: f64,
    /// `max |speed(t) - speed(0)| / speed(0)` over accepted steps.
    pub speed_drift: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl GeodesicRun {
    /// Metric length travelled, `speed * time`.
    pub fn length(&self) -> f64 {
        self.initial_speed * self.final_time
    }
}

fn speed(metric: &SymMetricField, x: [f64; 3], v: [f64; 3]) -> Result<f64> {
    Ok(metric.value(x)?.quad(&v, &v).sqrt())
}

fn exit_face(chart: &ChartBox, x: &[f64; 3]) -> Option<(usize, bool)> {
    (0..3).find_map(|k| {
        if x[k] < chart.lower[k] {
            Some((k, false))
        } else if x[k] > chart.upper[k] {
            Some((k, true))
        } else {
            None
        }
    })
}

/// Integrate `x'' + Gamma(x)(x', x') = 0` from `(x0, v0)` over affine time
/// `span` with adaptive RKF7(8) steps, stopping when the path leaves `chart`.
pub fn integrate_geodesic(
    metric: &SymMetricField,
    chart: &ChartBox,
    x0: [f64; 3],
    v0: [f64; 3],
    span: f64,
    tol: &GeodesicTolerances,
) -> Result<GeodesicRun> {
    if !chart.contains(x0) {
        return Err(Error::InvalidInput(format!("geodesic start {x0:?} is outside the chart")));
    }
    let s0 = speed(metric, x0, v0)?;
    if !(s0 > 0.0) {
        return Err(Error::InvalidInput("geodesic initial velocity must be nonzero".into()));
    }
    let mut rhs = |y: &[f64; 6]| -> Option<[f64; 6]> {
        let x = [y[0], y[1], y[2]];
        let g = christoffel(metric, x).ok()?;
        let mut out = [y[3], y[4], y[5], 0.0, 0.0, 0.0];
        for k in 0..3 {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += g[k][i][j] * y[3 + i] * y[3 + j];
                }
            }
            out[3 + k] = -acc;
        }
        Some(out)
    };
    let mut y = [x0[0], x0[1], x0[2], v0[0], v0[1], v0[2]];
    let mut t = 0.0;
    let scale = chart.lower.iter().zip(&chart.upper).map(|(a, b)| b - a).fold(0.0, f64::max);
    let mut h = (0.01 * scale / s0.max(1e-300)).min(span).max(tol.min_step);
    let mut run = GeodesicRun {
        x0,
        v0,
        span,
        path: vec![(0.0, x0)],
        termination: Termination::CompletedSpan,
        final_time: 0.0,
        initial_speed: s0,
        speed_drift: 0.0,
        steps: 0,
        rejected: 0,
    };
    while t < span {
        // Steps below this no longer move `t` meaningfully.
        let floor = tol.min_step * t.abs().max(1.0);
        if run.steps + run.rejected >= tol.max_steps {
            run.termination = Termination::StepFailure { point: [y[0], y[1], y[2]], time: t };
            break;
        }
        let h_try = h.min(span - t);
        let Some((y_new, err)) = rkf78::step(&mut rhs, &y, h_try) else {
            run.rejected += 1;
            if h_try <= floor {
                run.termination = Termination::StepFailure { point: [y[0], y[1], y[2]], time: t };
                break;
            }
            h = h_try * 0.25;
            continue;
        };
        let xn = [y_new[0], y_new[1], y_new[2]];
        if let Some((axis, upper)) = exit_face(chart, &xn) {
            if h_try <= floor {
                // Finish the last sliver linearly; position may not resolve it.
                let face = if upper { chart.upper[axis] } else { chart.lower[axis] };
                let v = y[3 + axis];
                let dt = if v != 0.0 { ((face - y[axis]) / v).clamp(0.0, h_try) } else { h_try };
                run.termination = Termination::LeftChart { axis, upper, time: t + dt };
                run.final_time = t + dt;
                break;
            }
            h = (h_try * 0.5).max(floor);
            run.rejected += 1;
            continue;
        }
        let mut e: f64 = 0.0;
        for n in 0..6 {
            let sc = tol.atol + tol.rtol * y[n].abs().max(y_new[n].abs());
            e = e.max(err[n].abs() / sc);
        }
        if e <= 1.0 {
            t += h_try;
            y = y_new;
            run.steps += 1;
            run.path.push((t, xn));
            let s = speed(metric, xn, [y[3], y[4], y[5]])?;
            run.speed_drift = run.speed_drift.max((s - s0).abs() / s0);
            let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-1.0 / 8.0)).clamp(0.2, 5.0) };
            h = h_try * fac;
        } else {
            run.rejected += 1;
            if h_try <= floor {
                run.termination = Termination::StepFailure { point: [y[0], y[1], y[2]], time: t };
                break;
            }
            h = (h_try * (0.9 * e.powf(-1.0 / 8.0)).clamp(0.1, 0.9)).max(floor);
        }
    }
    if run.termination == Termination::CompletedSpan {
        run.final_time = t;
    } else if let Termination::StepFailure { time, .. } = run.termination {
        run.final_time = time;
    }
    Ok(run)
}
