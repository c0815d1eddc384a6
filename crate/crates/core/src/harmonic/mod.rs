//! Harmonic maps between flat tori and their energy spectra.

pub mod milnor;
pub mod scalar;
pub mod source;
pub mod spectrum;

pub use milnor::{milnor_compare, milnor_demo, MilnorReport};
pub use scalar::{parse_rational, TranscendentalScalar};
pub use source::{milnor_source, source_from_basis, source_from_dual_gram, source_from_gram, Provenance, SourceTorus};
pub use spectrum::{
    class_candidates, compare_classes, compare_spectra, energy_class, energy_of_class, energy_spectrum,
    spectrum_of_classes, sufficient_bound, ClassDifference, EnergyClass, SpectrumReport,
};
