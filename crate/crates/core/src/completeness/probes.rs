//! Length probes: does `int sqrt(c(r)) dr` stay bounded as the endpoint
//! approaches a suspected singular radius or infinity?

use crate::error::{Error, Result};
use crate::field::{ChartBox, SymMetricField};

use super::geodesic::{integrate_geodesic, GeodesicRun, GeodesicTolerances, Termination};
use super::quadrature::integrate;

pub const DEFAULT_EPSILONS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
/// Smallest fitted slope that counts as divergence.
pub const MIN_DIVERGENT_SLOPE: f64 = 1e-2;
pub const MIN_R_SQUARED: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept: my - slope * mx, r_squared }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceFit {
    pub epsilons: Vec<f64>,
    pub lengths: Vec<f64>,
    pub fit: LinearFit,
    pub monotone: bool,
    /// Monotone growth, slope at least [`MIN_DIVERGENT_SLOPE`] and
    /// `R^2 >= MIN_R_SQUARED`.
    pub diverges: bool,
}

/// `L(eps) = int_{r1 + eps}^{r0} sqrt(c(r)) dr` for each `eps`, fitted
/// against `log(1/eps)`.
pub fn radial_divergence_probe(
    c: impl Fn(f64) -> f64,
    r1: f64,
    epsilons: &[f64],
    r0: f64,
) -> Result<DivergenceFit> {
    if epsilons.len() < 2 || epsilons.windows(2).any(|w| !(w[1] < w[0])) || epsilons.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidInput("epsilon sequence must be positive and strictly decreasing".into()));
    }
    if r1 + epsilons[0] >= r0 {
        return Err(Error::InvalidInput(format!("outer radius {r0} must exceed r1 + eps = {}", r1 + epsilons[0])));
    }
    let integrand = |r: f64| c(r).sqrt();
    let mut lengths = Vec::with_capacity(epsilons.len());
    for &e in epsilons {
        let q = integrate(integrand, r1 + e, r0, 1e-13, 1e-12, 5000)?;
        lengths.push(q.value);
    }
    let x: Vec<f64> = epsilons.iter().map(|e| (1.0 / e).ln()).collect();
    let fit = linear_fit(&x, &lengths);
    let monotone = lengths.windows(2).all(|w| w[1] > w[0]);
    let diverges = monotone && fit.slope >= MIN_DIVERGENT_SLOPE && fit.r_squared >= MIN_R_SQUARED;
    Ok(DivergenceFit { epsilons: epsilons.to_vec(), lengths, fit, monotone, diverges })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutwardProbe {
    pub radii: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Least-squares slope of `L(R)` against `R`.
    pub fit: LinearFit,
}

/// `L(R) = int_{r_start}^{R} sqrt(c(r)) dr` for increasing `R`.
pub fn outward_length_probe(c: impl Fn(f64) -> f64, r_start: f64, radii: &[f64]) -> Result<OutwardProbe> {
    let mut lengths = Vec::with_capacity(radii.len());
    for &r in radii {
        lengths.push(integrate(|x: f64| c(x).sqrt(), r_start, r, 1e-12, 1e-12, 5000)?.value);
    }
    Ok(OutwardProbe { radii: radii.to_vec(), fit: linear_fit(radii, &lengths), lengths })
}

#[derive(Clone, Debug)]
pub struct InwardShot {
    pub epsilon: f64,
    pub run: GeodesicRun,
    /// Affine time at which the lower radial face `r1 + eps` was crossed.
    pub distance: Option<f64>,
}

/// Unit-speed radial geodesics of `metric` from `start` toward the face
/// `r = r1 + eps` of a chart shrunk to `[r1 + eps, upper]` in `r`.
pub fn inward_shots(
    metric: &SymMetricField,
    chart: &ChartBox,
    r1: f64,
    start: [f64; 3],
    epsilons: &[f64],
    span: f64,
    tol: &GeodesicTolerances,
) -> Result<Vec<InwardShot>> {
    let grr = metric.value(start)?.get(0, 0);
    let v0 = [-1.0 / grr.sqrt(), 0.0, 0.0];
    epsilons
        .iter()
        .map(|&e| {
            let mut lower = chart.lower;
            lower[0] = r1 + e;
            let sub = ChartBox::new(lower, chart.upper)?;
            let run = integrate_geodesic(metric, &sub, start, v0, span, tol)?;
            let distance = match run.termination {
                Termination::LeftChart { axis: 0, upper: false, time } => Some(time),
                _ => None,
            };
            Ok(InwardShot { epsilon: e, run, distance })
        })
        .collect()
}
