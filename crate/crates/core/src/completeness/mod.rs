//! Evidence for (in)completeness of Riemannian metrics: geodesic
//! integration, length-divergence probes, metric comparisons and the
//! completion constructions for stationary metrics.
//!
//! Nothing here asserts completeness. Probes report either a witness of
//! finite length or the absence of one up to the tested span.

pub mod christoffel;
pub mod completion;
pub mod equivalence;
pub mod geodesic;
pub mod probes;
pub mod quadrature;
pub mod rkf78;

pub use christoffel::christoffel;
pub use completion::{build_completion, gamma_completion, CompletionMetrics, CompletionReport, GammaCompletion};
pub use equivalence::{equivalence_constants, psd_difference, EquivalenceReport, PsdReport};
pub use geodesic::{integrate_geodesic, GeodesicRun, GeodesicTolerances, Termination};
pub use probes::{inward_shots, outward_length_probe, radial_divergence_probe, DivergenceFit, LinearFit};
