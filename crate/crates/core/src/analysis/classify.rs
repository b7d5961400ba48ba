use super::rank::{
    completable, pbh_pair_controllable, pbh_pair_controllable_nonzero, pencil_nonsingular, spectral_controllability,
    Completability, RankTest, SpectralCheck,
};
use crate::error::Result;
use crate::model::DelaySystem;
use crate::spectral::{find_eigenvalues, SpectrumReport, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriState {
    Yes,
    No,
    Undetermined,
}

impl TriState {
    pub fn as_str(&self) -> &'static str {
        match self {
            TriState::Yes => "yes",
            TriState::No => "no",
            TriState::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub window: Window,
    pub seed: u64,
    pub spectrum: SpectrumReport,
    /// Rank of `(Δ(λ); b)` is full at every in-window eigenvalue.
    pub spectral: SpectralCheck,
    /// Hautus test on `(A₋₁, b)` at every eigenvalue.
    pub cond_a_minus1_all_mu: RankTest,
    /// Same, excluding `μ = 0`.
    pub cond_a_minus1_nonzero_mu: RankTest,
    /// `det(A₁ + λA₋₁) ≢ 0`.
    pub complete: bool,
    pub completability: Completability,
    pub pair_a1_b: RankTest,
    /// Kernels vanish outside `[α, 0]` with `α > −1`.
    pub support_condition: bool,
    pub exactly_null_controllable: TriState,
    pub completely_stabilizable: TriState,
}

/// Run every rank and pencil test and combine them.
pub fn classify(sys: &DelaySystem, w: &Window, seed: u64) -> Result<ClassificationReport> {
    let spectrum = find_eigenvalues(sys, w)?;
    let spectral = spectral_controllability(sys, &spectrum.points);
    let cond_all = pbh_pair_controllable(sys.a_minus1(), sys.b());
    let cond_nonzero = pbh_pair_controllable_nonzero(sys.a_minus1(), sys.b());
    let complete = pencil_nonsingular(sys.a1(), sys.a_minus1(), seed);
    let completability = completable(sys, seed);
    let pair = pbh_pair_controllable(sys.a1(), sys.b());
    let support_condition = sys.support_left() > -1.0;

    let exactly_null_controllable = if !spectral.holds_in_window {
        TriState::No
    } else if sys.is_retarded() && support_condition && pair.holds {
        TriState::Yes
    } else {
        TriState::Undetermined
    };
    let completely_stabilizable = if spectral.holds_in_window && cond_nonzero.holds { TriState::Yes } else { TriState::No };

    Ok(ClassificationReport {
        window: *w,
        seed,
        spectrum,
        spectral,
        cond_a_minus1_all_mu: cond_all,
        cond_a_minus1_nonzero_mu: cond_nonzero,
        complete,
        completability,
        pair_a1_b: pair,
        support_condition,
        exactly_null_controllable,
        completely_stabilizable,
    })
}
