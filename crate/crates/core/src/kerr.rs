//! Kerr spacetime in Boyer-Lindquist coordinates `(r, theta, phi)`:
//! lapse/shift extraction, ergoregion classification, azimuthal mode
//! operators and the auxiliary diagonal metrics used in completeness
//! arguments.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{ChartBox, MetricRule, SampleGrid, ScalarField, ScalarRule, SymMetricField, VectorField};
use crate::jet::{Jet2, Scalar};
use crate::linalg::{inverse4, Sym3};
use crate::metric::StationaryMetric;
use crate::weighted::WeightedManifold;

/// Band around zero in which a point counts as on the ergosurface.
pub const ERGO_BAND: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KerrParams {
    pub mass: f64,
    pub spin: f64,
}

/// `U = r^2 + a^2 cos^2 theta`, `Delta = r^2 - 2Mr + a^2`,
/// `sigma^2 = (r^2 + a^2) U + 2 M r a^2 sin^2 theta`.
#[derive(Clone, Copy, Debug)]
pub struct KerrScalars<T> {
    pub u: T,
    pub delta: T,
    pub sigma2: T,
}

/// Covariant Boyer-Lindquist components.
#[derive(Clone, Copy, Debug)]
pub struct KerrComponents<T> {
    pub tt: T,
    pub t_phi: T,
    pub rr: T,
    pub theta_theta: T,
    pub phi_phi: T,
}

impl<T: Scalar> KerrComponents<T> {
    pub fn matrix(&self) -> [[T; 4]; 4] {
        let z = T::constant(0.0);
        [
            [self.tt, z, z, self.t_phi],
            [z, self.rr, z, z],
            [z, z, self.theta_theta, z],
            [self.t_phi, z, z, self.phi_phi],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErgoClass {
    Outside,
    Inside,
    OnSurface,
}

impl KerrParams {
    pub fn new(mass: f64, spin: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(format!("Kerr mass must be positive, got {mass}")));
        }
        if spin * spin > mass * mass {
            return Err(Error::InvalidInput(format!("Kerr spin {spin} exceeds mass {mass}")));
        }
        Ok(Self { mass, spin })
    }

    /// Outer horizon radius `M + sqrt(M^2 - a^2)`.
    pub fn r_plus(&self) -> f64 {
        self.mass + (self.mass * self.mass - self.spin * self.spin).sqrt()
    }

    /// Inner horizon radius `M - sqrt(M^2 - a^2)`.
    pub fn r_minus(&self) -> f64 {
        self.mass - (self.mass * self.mass - self.spin * self.spin).sqrt()
    }

    pub fn scalars<T: Scalar>(&self, r: T, theta: T) -> KerrScalars<T> {
        let (m, a) = (self.mass, self.spin);
        let a2 = a * a;
        let r2 = r * r;
        let s2 = theta.sin().square();
        let u = r2 + theta.cos().square() * a2;
        let delta = r2 - r * (2.0 * m) + a2;
        let sigma2 = (r2 + a2) * u + r * s2 * (2.0 * m * a2);
        KerrScalars { u, delta, sigma2 }
    }

    /// Components obtained by expanding
    /// `-(Delta/U)(dt - a sin^2 dphi)^2 + U(dr^2/Delta + dtheta^2) + (sin^2/U)(a dt - (r^2+a^2) dphi)^2`.
    pub fn components<T: Scalar>(&self, r: T, theta: T) -> KerrComponents<T> {
        let a = self.spin;
        let KerrScalars { u, delta, .. } = self.scalars(r, theta);
        let s2 = theta.sin().square();
        let ra = r * r + a * a;
        let inv_u = u.recip();
        KerrComponents {
            tt: (-delta + s2 * (a * a)) * inv_u,
            t_phi: (delta * (a) * s2 - s2 * ra * a) * inv_u,
            rr: u / delta,
            theta_theta: u,
            phi_phi: (-(delta * s2 * s2) * (a * a) + s2 * ra * ra) * inv_u,
        }
    }

    /// `r^2 - 2 M r + a^2 cos^2 theta`, which equals `-U g_tt`.
    pub fn ergo_polynomial(&self, r: f64, theta: f64) -> f64 {
        r * r - 2.0 * self.mass * r + self.spin * self.spin * theta.cos().powi(2)
    }

    pub fn ergoregion_test(&self, p: [f64; 3]) -> ErgoClass {
        let v = self.ergo_polynomial(p[0], p[1]);
        if v.abs() <= ERGO_BAND {
            ErgoClass::OnSurface
        } else if v < 0.0 {
            ErgoClass::Inside
        } else {
            ErgoClass::Outside
        }
    }

    /// Lapse and azimuthal shift from the inverse of the 4x4 metric:
    /// `N^2 = -1/g^00`, `N^phi = -g^0phi / g^00`.
    pub fn lapse_shift<T: Scalar>(&self, r: T, theta: T) -> Option<(T, T)> {
        let inv = inverse4(self.components(r, theta).matrix())?;
        let n2 = -inv[0][0].recip();
        if n2.value() <= 0.0 {
            return None;
        }
        Some((n2.sqrt(), -inv[0][3] / inv[0][0]))
    }
}

/// A Kerr exterior chart together with its lapse/shift decomposition.
#[derive(Clone, Debug)]
pub struct KerrSpacetime {
    pub params: KerrParams,
    pub chart: ChartBox,
    pub metric: StationaryMetric,
}

struct Lapse(KerrParams);

impl ScalarRule for Lapse {
    fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
        let (n, _) = self
            .0
            .lapse_shift(T::coordinate(p, 0), T::coordinate(p, 1))
            .ok_or(Error::Degenerate { what: "Kerr lapse", point: p, value: 0.0 })?;
        Ok(n)
    }
}

struct ShiftPhi(KerrParams);

impl ScalarRule for ShiftPhi {
    fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
        let (_, s) = self
            .0
            .lapse_shift(T::coordinate(p, 0), T::coordinate(p, 1))
            .ok_or(Error::Degenerate { what: "Kerr shift", point: p, value: 0.0 })?;
        Ok(s)
    }
}

struct Spatial(KerrParams);

impl MetricRule for Spatial {
    fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<Sym3<T>> {
        let c = self.0.components(T::coordinate(p, 0), T::coordinate(p, 1));
        Ok(Sym3::diagonal([c.rr, c.theta_theta, c.phi_phi]))
    }
}

/// Kerr metric on a chart `r_min > r_+`, `0 < theta < pi`.
pub fn kerr_metric(params: KerrParams, chart: ChartBox) -> Result<KerrSpacetime> {
    let r1 = params.r_plus();
    if chart.lower[0] <= r1 + 1e-9 * params.mass {
        return Err(Error::InvalidInput(format!(
            "Kerr chart must stay outside the horizon r_+ = {r1}: r_min = {}",
            chart.lower[0]
        )));
    }
    if chart.lower[1] <= 0.0 || chart.upper[1] >= PI {
        return Err(Error::InvalidInput(format!(
            "Kerr chart must exclude the axis: theta in [{}, {}]",
            chart.lower[1], chart.upper[1]
        )));
    }
    let metric = StationaryMetric::new(
        ScalarField::from_rule(Lapse(params)),
        VectorField([ScalarField::constant(0.0), ScalarField::constant(0.0), ScalarField::from_rule(ShiftPhi(params))]),
        SymMetricField::from_rule(Spatial(params)),
    );
    Ok(KerrSpacetime { params, chart, metric })
}

/// Comparison of the extracted lapse with the closed form `Delta U / sigma^2`
/// read as `N` and as `N^2`, plus the shift sign check `N_phi` vs `g_tphi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LapseDiagnostics {
    pub lapse: f64,
    /// `|N - Delta U / sigma^2| / N`.
    pub residual_as_n: f64,
    /// `|N^2 - Delta U / sigma^2| / N^2`.
    pub residual_as_n2: f64,
    /// `N_phi = g_phiphi N^phi`.
    pub shift_lower_phi: f64,
    pub g_t_phi: f64,
    /// Closed form `2 M a r sin^2 theta / U` for the covector shift.
    pub closed_form_shift_lower: f64,
}

impl KerrSpacetime {
    pub fn new(params: KerrParams, chart: ChartBox) -> Result<Self> {
        kerr_metric(params, chart)
    }

    pub fn lapse_diagnostics(&self, p: [f64; 3]) -> Result<LapseDiagnostics> {
        let (r, th) = (p[0], p[1]);
        let s = self.params.scalars(r, th);
        let c = self.params.components(r, th);
        let closed = s.delta * s.u / s.sigma2;
        let n = self.metric.lapse.value(p)?;
        let nphi = self.metric.shift.0[2].value(p)?;
        Ok(LapseDiagnostics {
            lapse: n,
            residual_as_n: (n - closed).abs() / n,
            residual_as_n2: (n * n - closed).abs() / (n * n),
            shift_lower_phi: c.phi_phi * nphi,
            g_t_phi: c.t_phi,
            closed_form_shift_lower: 2.0 * self.params.mass * self.params.spin * r * th.sin().powi(2) / s.u,
        })
    }

    /// Largest entrywise relative deviation between the reassembled blocks
    /// `(-N^2 + N_i N^i, N_i, g_ij)` and the direct components.
    pub fn reassembly_residual(&self, p: [f64; 3]) -> Result<f64> {
        let b = self.metric.point_blocks(p)?;
        let c = self.params.components(p[0], p[1]).matrix();
        let m = b.spacetime();
        let scale = c.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
        Ok(m.iter().flatten().zip(c.iter().flatten()).fold(0.0f64, |s, (x, y)| s.max((x - y).abs())) / scale)
    }

    /// `sqrt|det g_4| = U sin theta`.
    pub fn volume_density(&self, p: [f64; 3]) -> f64 {
        self.params.scalars(p[0], p[1]).u * p[1].sin()
    }

    pub fn ergo_class_grid(&self, grid: &SampleGrid) -> Vec<([f64; 3], ErgoClass)> {
        grid.nodes().map(|p| (p, self.params.ergoregion_test(p))).collect()
    }

    /// Unit-lapse spatial metric `g~ = N^-2 g`.
    pub fn rescaled_metric(&self) -> SymMetricField {
        self.metric.rescaled_spatial()
    }

    /// `g^ = diag(sigma^2/Delta^2, sigma^2/Delta, sigma^2 sin^2/Delta)`.
    pub fn hat_metric(&self) -> SymMetricField {
        hat_metric(self.params, false)
    }

    /// Warped variant with `r^4` in place of `sigma^2`.
    pub fn hat_metric_warped(&self) -> SymMetricField {
        hat_metric(self.params, true)
    }
}

pub fn hat_metric(params: KerrParams, warped: bool) -> SymMetricField {
    struct Hat(KerrParams, bool);
    impl MetricRule for Hat {
        fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<Sym3<T>> {
            let (r, th) = (T::coordinate(p, 0), T::coordinate(p, 1));
            let s = self.0.scalars(r, th);
            let top = if self.1 { r.powi(4) } else { s.sigma2 };
            let a = top / s.delta;
            Ok(Sym3::diagonal([a / s.delta, a, a * th.sin().square()]))
        }
    }
    SymMetricField::from_rule(Hat(params, warped))
}

/// `sigma^2 / U^2` and its expansion `1 + a^2 sin^2/U + 2 M r a^2 sin^2 / U^2`.
pub fn sigma_ratio(params: KerrParams, r: f64, theta: f64) -> (f64, f64) {
    let s = params.scalars(r, theta);
    let a2s = params.spin * params.spin * theta.sin().powi(2);
    let expanded = 1.0 + a2s / s.u + 2.0 * params.mass * r * a2s / (s.u * s.u);
    (s.sigma2 / (s.u * s.u), expanded)
}

/// The azimuthal-sector operator `w_k^2`, defined by conjugating
/// `w^2 = -N^2 Delta_{mu,g} + N^i N^j d_i d_j + V` with `e^{-ik phi}`.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    pub kerr: KerrSpacetime,
    pub k: i32,
    pub m2: ScalarField,
    pub potential: ScalarField,
    /// `(g, N)`: its measure `N sqrt|g|` is `sqrt|det g_4|`.
    pub weighted: WeightedManifold,
}

/// Real and imaginary parts of `e^{ik phi} w^2 (e^{-ik phi} u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conjugated {
    pub re: f64,
    pub im: f64,
}

/// Pointwise comparison of the sector operator with the closed form
/// `-N^2 Delta_{mu,g} - (k^2 N^6 / 4) + V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeComparison {
    pub conjugation: f64,
    pub sector_form: f64,
    pub closed_form: f64,
    /// `k^2 (N^2 g^phiphi - (N^phi)^2)`.
    pub sector_potential: f64,
    /// `-k^2 N^6 / 4`.
    pub closed_form_potential: f64,
}

pub fn mode_operator(kerr: &KerrSpacetime, k: i32, m2: &ScalarField) -> ModeOperator {
    let n = &kerr.metric.lapse;
    ModeOperator {
        kerr: kerr.clone(),
        k,
        m2: m2.clone(),
        potential: n.mul(n).mul(m2),
        weighted: WeightedManifold::new(kerr.metric.spatial.clone(), n.clone(), kerr.chart),
    }
}

impl ModeOperator {
    /// `w^2 u` for a function of all three chart variables, through the
    /// `(g, N)` route; valid inside the ergoregion as well.
    pub fn apply_full(&self, u: &Jet2, p: [f64; 3]) -> Result<f64> {
        let n = self.kerr.metric.lapse.value(p)?;
        let shift: [f64; 3] = self.kerr.metric.shift.sample(p)?;
        let mut drift = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                drift += shift[i] * shift[j] * u.hessian(i, j);
            }
        }
        Ok(-n * n * self.weighted.laplacian_of_jet(u, p)? + drift + self.potential.value(p)? * u.value)
    }

    /// Conjugation with `e^{-ik phi}` applied to `u`, evaluated at the
    /// azimuth `p[2]`. For axially symmetric `u` the result is independent
    /// of `p[2]` and real.
    pub fn conjugate(&self, u: &ScalarField, p: [f64; 3]) -> Result<Conjugated> {
        let uj = u.jet(p)?;
        let k = self.k as f64;
        let phi = Jet2::variable(p[2], 2);
        let c = (phi * k).cos();
        let s = (phi * k).sin();
        let big_p = self.apply_full(&(c * uj), p)?;
        let big_q = self.apply_full(&(s * uj), p)?;
        let (cv, sv) = (c.value, s.value);
        Ok(Conjugated { re: cv * big_p + sv * big_q, im: sv * big_p - cv * big_q })
    }

    /// `k^2 (N^2 g^phiphi - (N^phi)^2)`, the zeroth-order term the sector
    /// picks up; negative exactly inside the ergoregion.
    pub fn sector_potential(&self, p: [f64; 3]) -> Result<f64> {
        let n = self.kerr.metric.lapse.value(p)?;
        let nphi = self.kerr.metric.shift.0[2].value(p)?;
        let gpp = self.kerr.params.components(p[0], p[1]).phi_phi;
        let k = self.k as f64;
        Ok(k * k * (n * n / gpp - nphi * nphi))
    }

    /// Comparison field `beta^2 / 4 = max(0, -sector_potential)`.
    pub fn effective_beta_sq_quarter(&self, p: [f64; 3]) -> Result<f64> {
        Ok((-self.sector_potential(p)?).max(0.0))
    }

    /// Closed-form `beta = k N^3`.
    pub fn closed_form_beta(&self, p: [f64; 3]) -> Result<f64> {
        Ok(self.k as f64 * self.kerr.metric.lapse.value(p)?.powi(3))
    }

    pub fn sector_apply(&self, u: &Jet2, p: [f64; 3]) -> Result<f64> {
        let n = self.kerr.metric.lapse.value(p)?;
        Ok(-n * n * self.weighted.laplacian_of_jet(u, p)?
            + (self.sector_potential(p)? + self.potential.value(p)?) * u.value)
    }

    pub fn compare(&self, u: &ScalarField, p: [f64; 3]) -> Result<ModeComparison> {
        let uj = u.jet(p)?;
        let n = self.kerr.metric.lapse.value(p)?;
        let lap = self.weighted.laplacian_of_jet(&uj, p)?;
        let v = self.potential.value(p)?;
        let b = self.closed_form_beta(p)?;
        let sector_potential = self.sector_potential(p)?;
        Ok(ModeComparison {
            conjugation: self.conjugate(u, p)?.re,
            sector_form: -n * n * lap + (sector_potential + v) * uj.value,
            closed_form: -n * n * lap + (v - b * b / 4.0) * uj.value,
            sector_potential,
            closed_form_potential: -b * b / 4.0,
        })
    }

    /// Density of the sector's Hilbert-space measure with respect to
    /// `dr dtheta dphi`: `sqrt|det g_4| / N^2 = U sin theta / N^2`.
    pub fn measure_density(&self, p: [f64; 3]) -> Result<f64> {
        let n = self.kerr.metric.lapse.value(p)?;
        Ok(self.kerr.volume_density(p) / (n * n))
    }
}
