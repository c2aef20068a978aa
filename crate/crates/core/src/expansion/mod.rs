//! Bracketed Bloch expansion: planning, coefficients, δ-limit brackets and
//! reconstruction.

mod bracket;
mod coefficients;
mod plan;
mod reconstruct;

pub use bracket::{bracket_integral, bracket_stages, improper_term_integrals, BracketValue, DeltaSchedule, SyntheticPair, TermSource};
pub use coefficients::{coefficients, coefficients_of, Coefficient, LabeledCoefficient};
pub use plan::{plan_expansion, ExpansionPlan, QuadratureRule, SqWindow, WindowKind};
pub use reconstruct::{
    approximation_check, approximation_check_from, paired_window_integral, reconstruct, regular_integral, sq_window_integral, ApproximationCheck, ClusterTerms, Contribution,
    ExpansionOptions, FieldSampler, PairedWindowResult, ReconstructionResult, SqWindowResult, Truncation,
};
