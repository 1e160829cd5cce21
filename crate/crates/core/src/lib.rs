//! Stationary Klein-Gordon toolkit: weighted-manifold reduction of the
//! wave operator on stationary spacetimes, completeness diagnostics and a
//! finite-volume spectral lower bound.

pub mod completeness;
pub mod error;
pub mod expr;
pub mod field;
pub mod jet;
pub mod kerr;
pub mod kgop;
pub mod linalg;
pub mod metric;
pub mod spectral;
pub mod testfields;
pub mod weighted;

pub use error::{Error, Result};
pub use field::{ChartBox, SampleGrid, ScalarField, SymMetricField, VectorField};
pub use jet::{Jet2, Scalar};
pub use linalg::Sym3;
pub use kerr::{KerrParams, KerrSpacetime, ModeOperator};
pub use kgop::{OperatorForm, SpatialOperator};
pub use metric::{PointBlocks, StationaryMetric};
pub use weighted::WeightedManifold;
pub use spectral::{discretize, smallest_eigenvalues, DiscreteOperator, SaCertificate, SpectralGrid};
