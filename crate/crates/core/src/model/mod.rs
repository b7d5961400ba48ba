//! System, state and eigenvector types.

mod eigen;
mod kernel;
mod state;
mod system;

pub use eigen::{adjoint_tail, psi_eigenvector, rank_with_b, right_eigenvector, AdjointEigenvector, PsiOptions, KERNEL_REL_TOL};
pub use kernel::{KernelPiece, MatrixKernel};
pub use state::{m2_inner, M2State, M2Vector};
pub use system::DelaySystem;
