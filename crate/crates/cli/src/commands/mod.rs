//! One module per subcommand. Each turns the validated model into report
//! records and CSV tables; hypothesis violations become failing records,
//! everything else that goes wrong is an internal error.

pub mod assemble;
pub mod certify;
pub mod check;
pub mod complete;
pub mod kerr_mode;
pub mod spectrum;

use stkg_core::testfields::TestFieldGenerator;
use stkg_core::{ChartBox, Error};

use crate::config::{Model, RunConfig};
use crate::report::Record;
use crate::CliError;

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub model: &'a Model,
}

impl Context<'_> {
    /// Seeded generator over the chart; `stream` separates the draws of
    /// different checks so adding one does not perturb the others.
    pub fn generator(&self, stream: u64) -> TestFieldGenerator {
        self.generator_on(stream, self.model.chart)
    }

    pub fn generator_on(&self, stream: u64, bbox: ChartBox) -> TestFieldGenerator {
        TestFieldGenerator::new(self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ stream, bbox)
    }
}

pub fn internal(e: Error) -> CliError {
    CliError::Internal(e.to_string())
}

/// Errors that describe the input geometry rather than a failed computation.
pub fn is_hypothesis_error(e: &Error) -> bool {
    matches!(
        e,
        Error::NotTimelike { .. }
            | Error::ShiftBound { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NonPositive { .. }
            | Error::Degenerate { .. }
    )
}

/// A failing record carrying the error's location, or an internal error.
pub fn failure(name: &str, anchor: &str, e: Error) -> Result<Record, CliError> {
    if is_hypothesis_error(&e) {
        Ok(Record::new(name, anchor).judged(false, None).witness(e.location()).detail(e.to_string()))
    } else {
        Err(internal(e))
    }
}

/// Relative maximum over `(got, want)` pairs, scaled by `max(|got|, |want|)`.
pub fn max_relative(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    pairs.into_iter().map(|(a, b)| stkg_core::kgop::relative_difference(a, b)).fold(0.0, worst)
}

/// `max` that keeps NaN, so a NaN residual fails its check.
pub fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
