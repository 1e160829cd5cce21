//! Seeded generators of smooth test data: compactly supported bump fields
//! and random stationary metrics that are timelike on `[-1, 1]^3`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{ChartBox, ScalarField, ScalarRule, SymMetricField, VectorField};
use crate::jet::Scalar;
use crate::metric::StationaryMetric;

/// `amp * prod_k (1 - s_k^2)^3 cos(freq_k x_k + phase_k)` with
/// `s_k = (x_k - center_k) / half_width_k`, zero outside the support. Masked
/// axes contribute no factor, so the field is constant along them.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub center: [f64; 3],
    pub half_width: [f64; 3],
    pub freq: [f64; 3],
    pub phase: [f64; 3],
    pub amp: f64,
    pub active: [bool; 3],
}

impl ScalarRule for Bump {
    fn eval<T: Scalar>(&self, p: [f64; 3]) -> Result<T> {
        let mut out = T::constant(self.amp);
        for k in 0..3 {
            if !self.active[k] {
                continue;
            }
            let x = T::coordinate(p, k);
            let s = (x - self.center[k]) / self.half_width[k];
            if s.value().abs() >= 1.0 {
                return Ok(T::constant(0.0));
            }
            let w = (T::constant(1.0) - s * s).powi(3);
            out = out * w * (x * self.freq[k] + self.phase[k]).cos();
        }
        Ok(out)
    }
}

pub struct TestFieldGenerator {
    rng: ChaCha8Rng,
    bbox: ChartBox,
}

impl TestFieldGenerator {
    pub fn new(seed: u64, bbox: ChartBox) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), bbox }
    }

    pub fn bump(&mut self, active: [bool; 3]) -> Bump {
        let mut b = Bump {
            center: [0.0; 3],
            half_width: [1.0; 3],
            freq: [0.0; 3],
            phase: [0.0; 3],
            amp: self.rng.random_range(0.5..2.0),
            active,
        };
        for k in 0..3 {
            let (lo, hi) = (self.bbox.lower[k], self.bbox.upper[k]);
            let w = hi - lo;
            b.half_width[k] = w * self.rng.random_range(0.2..0.45);
            b.center[k] = self.rng.random_range(lo + b.half_width[k]..=hi - b.half_width[k]);
            b.freq[k] = self.rng.random_range(0.5..3.0) / w.max(f64::MIN_POSITIVE) * std::f64::consts::PI;
            b.phase[k] = self.rng.random_range(0.0..std::f64::consts::TAU);
        }
        b
    }

    /// A point strictly inside the bump support (`|s| < 0.8` on active axes,
    /// anywhere in the box on masked ones).
    pub fn point_in(&mut self, b: &Bump) -> [f64; 3] {
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = if b.active[k] {
                b.center[k] + b.half_width[k] * self.rng.random_range(-0.8..0.8)
            } else {
                self.rng.random_range(self.bbox.lower[k]..=self.bbox.upper[k])
            };
        }
        p
    }

    pub fn point(&mut self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.rng.random_range(self.bbox.lower[k]..=self.bbox.upper[k]))
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// A smooth stationary metric with nonzero shift whose timelike margin
/// stays positive on `[-1, 1]^3`: lapse in `[0.9, 1.5]`, shift components
/// below 0.3 and spatial eigenvalues in `[0.55, 1.45]`.
pub fn random_stationary_metric(seed: u64) -> StationaryMetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let (l0, l1, l2) = (r(-1.5, 1.5), r(-1.5, 1.5), r(0.0, 3.0));
    let lapse = ScalarField::from_jet_fn(move |[x, y, _]| (x * l0 + y * l1 + l2).sin() * 0.3 + 1.2);
    let mut shift = Vec::new();
    for _ in 0..3 {
        let (c0, c1, c2) = (r(-1.0, 1.0), r(-2.0, 2.0), r(-2.0, 2.0));
        shift.push(ScalarField::from_jet_fn(move |[x, y, z]| {
            ((x * c1 + z * c2).sin() * 0.5 + y * c0 * 0.5) * 0.3
        }));
    }
    let mut comps = Vec::new();
    for n in 0..6 {
        let diag = matches!(n, 0 | 3 | 5);
        let (c0, c1, c2) = (r(-1.0, 1.0), r(-2.0, 2.0), r(-2.0, 2.0));
        comps.push(ScalarField::from_jet_fn(move |[x, y, z]| {
            let p = ((x * c1 - y * c2).cos() * 0.5 + (z * x * c0).sin() * 0.5) * 0.15;
            if diag {
                p + 1.0
            } else {
                p
            }
        }));
    }
    let shift: [ScalarField; 3] = shift.try_into().expect("three shift components");
    let comps: [ScalarField; 6] = comps.try_into().expect("six metric components");
    StationaryMetric::new(lapse, VectorField(shift), SymMetricField::from_components(comps))
}
