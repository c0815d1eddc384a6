//! Exact lattice computations: short vectors, Siegel theta representation
//! numbers, and energy spectra of harmonic maps between flat tori.

pub mod cli;
pub mod config;
pub mod enumeration;
pub mod error;
pub mod exact;
pub mod gram;
pub mod harmonic;
pub mod lattice;
pub mod notation;
pub mod theta;

pub use config::Limits;
pub use enumeration::{cholesky_upper, count_by_norm, short_vectors, CholeskyFactor, ShortVector, ShortVectorTable};
pub use error::{Error, Result};
pub use gram::GramMatrix;
pub use lattice::{direct_sum, dn, dn_plus, integer_lattice, LatticeBasis, LatticeVector};
pub use notation::parse_lattice;
pub use theta::{coefficient_table, compare_theta, representation_number, CoefficientTable, ThetaDifference, ThetaEngine};
