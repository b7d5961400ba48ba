//! Eigenvalue localisation for the characteristic determinant.

mod contour;
mod lambert;
mod roots;
mod seeds;

pub use contour::{count_zeros, winding_circle, winding_rect, Winding, Window};
pub use lambert::lambert_branch;
pub use roots::{
    comparison_branches, find_eigenvalues, find_zeros, require_simple, seeds_for_window, BranchThreshold, EigenPoint,
    SpectrumReport, UnresolvedCell, RESIDUAL_TOL,
};
pub use seeds::{build_seeds, Seed, SeedGrid};
