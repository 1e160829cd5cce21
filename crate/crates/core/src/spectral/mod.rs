//! Discretization on structured grids, discrete spectra and the
//! hypothesis checklist for self-adjointness.

pub mod certificate;
pub mod csr;
pub mod discretize;
pub mod eigen;
pub mod grid;

pub use certificate::{sa_certificate, CertificateInput, SaCertificate, Verdict};
pub use csr::CsrMatrix;
pub use discretize::{consistency_study, discretize, ConsistencyStudy, DiscreteOperator, FluxForm, PointCoefficients, SymmetryReport, WeightedSchrodinger};
pub use eigen::{smallest_eigenvalues, smallest_eigenvalues_with, EigenOptions, Spectrum};
pub use grid::SpectralGrid;
