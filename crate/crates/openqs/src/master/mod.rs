//! Weak-coupling reductions: Redfield and Davies/GKLS generators, the Pauli
//! rate equation, and thermalization diagnostics (H-theorem, eigensystem
//! analysis of the population and coherence blocks).

mod davies;
mod freq;
mod rates;
mod thermal;

pub use davies::{
    davies_generator, pauli_system, redfield_generator, GeneratorBundle, GeneratorKind,
    PauliSystem,
};
pub use freq::{frequency_decompose, FrequencyDecomposition};
pub use rates::{gamma_analytic, gamma_rates};
pub use thermal::{fdt_check, h_functional, thermalization_analysis, ThermalizationReport};
