//! Rank and pencil tests and the classification built from them.

mod classify;
mod rank;

pub use classify::{classify, ClassificationReport, TriState};
pub use rank::{
    completable, pbh_pair_controllable, pbh_pair_controllable_nonzero, pencil_nonsingular, spectral_controllability,
    spectral_rank_tol, Completability, RankTest, SpectralCheck, SpectralWitness, COMPLETABLE_RANDOM_DRAWS, PBH_REL_TOL,
};
