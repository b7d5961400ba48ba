//! Moment problem, biorthogonal families and steering-control synthesis.

mod canonical;
mod control;
mod family;
mod moments;
mod pipeline;
mod series;

pub use canonical::{canonicalize, CanonicalForm, PLACEMENT_COND_LIMIT};
pub use control::{imag_ratio, moment_residual, ControlSignal, SynthesisMethod, IMAG_TOL};
pub use family::{
    biortho_explicit, biortho_multibranch, corrected_family, explicit_dual, multibranch_dual, multibranch_split,
    projection_family, BiorthFamily,
};
pub use moments::{gram_matrix, min_norm_control, moment_targets, MomentProblem, GRAM_CUTOFF, MOMENT_RESIDUAL_TOL};
pub use pipeline::{synthesize, MethodChoice, Synthesis, SynthesisOptions, DEFAULT_TRUNCATION, PERTURBATION_GAIN};
pub use series::{series_control, FAMILY_TOL};
