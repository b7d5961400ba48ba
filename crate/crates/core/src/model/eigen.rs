use nalgebra::{DMatrix, DVector};

use super::state::M2Vector;
use super::system::DelaySystem;
use crate::error::{Error, Result};
use crate::numeric::{singular_values, smallest_singular, to_complex, C64};

/// Relative tolerance for the numerical kernel of Δ(λ).
pub const KERNEL_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct PsiOptions {
    /// Scale so that `⟨b, y_λ⟩ = 1`.
    pub normalize: bool,
    /// Tail samples cover `[−1, 0]` with this many intervals.
    pub grid_intervals: usize,
}

impl Default for PsiOptions {
    fn default() -> Self {
        Self { normalize: true, grid_intervals: 256 }
    }
}

/// Eigenvector of the adjoint generator for `λ̄`.
#[derive(Debug, Clone)]
pub struct AdjointEigenvector {
    pub lambda: C64,
    pub y_lambda: DVector<C64>,
    pub tail: Vec<DVector<C64>>,
    /// `‖Δ(λ)* ŷ‖` for the unit vector `ŷ = y_λ/‖y_λ‖`.
    pub residual: f64,
}

impl AdjointEigenvector {
    pub fn to_m2(&self) -> M2Vector {
        M2Vector { y: self.y_lambda.clone(), tail: self.tail.clone() }
    }
}

fn kernel_check(lambda: C64, m: &DMatrix<C64>) -> Result<(DVector<C64>, DVector<C64>, usize)> {
    let (smin, left, right, all) = smallest_singular(m);
    let tol = KERNEL_REL_TOL * all[0].max(1.0);
    if smin > tol {
        return Err(Error::KernelEmpty { lambda, sigma_min: smin });
    }
    let dim = all.iter().filter(|&&s| s <= tol).count();
    Ok((left, right, dim))
}

/// Tail of ψ_λ at `τ ∈ [−1, 0]` for a given `y`.
pub fn adjoint_tail(sys: &DelaySystem, lambda: C64, y: &DVector<C64>, tau: f64) -> DVector<C64> {
    let lb = lambda.conj();
    let n = sys.n();
    let mut m = DMatrix::<C64>::identity(n, n) * lb - to_complex(&sys.a0().transpose());
    if sys.has_kernels() {
        // ∫_τ^0 e^{λ̄s}(A₃ + λ̄A₂)(s) ds, transposed
        let j = sys.a3().exp_integral(lb, tau, 0.0) + sys.a2().exp_integral(lb, tau, 0.0) * lb;
        m -= j.transpose();
    }
    let mut out = m * y * (-lb * tau).exp();
    if !sys.a2().is_zero() {
        out -= to_complex(&sys.a2().eval(tau).transpose()) * y;
    }
    out
}

/// Adjoint eigenvector: `y_λ ∈ Ker Δ(λ)*` and its tail on a uniform grid.
pub fn psi_eigenvector(sys: &DelaySystem, lambda: C64, opts: PsiOptions) -> Result<AdjointEigenvector> {
    let delta = sys.eval_delta(lambda);
    let (left, _, dim) = kernel_check(lambda, &delta)?;
    let mut y = left;
    if opts.normalize {
        let b = sys.b().map(|v| C64::new(v, 0.0));
        // ⟨b, y⟩ = b·ȳ; a kernel of dimension ≥ 2 always contains a direction orthogonal to b
        let by = y.dotc(&b);
        if dim > 1 || by.norm() < KERNEL_REL_TOL * b.norm().max(1.0) {
            return Err(Error::NotSpectrallyControllableAt { lambda });
        }
        y /= by.conj();
    }
    let residual = (delta.adjoint() * &y).norm() / y.norm();
    let nint = opts.grid_intervals.max(1);
    let tail = (0..=nint).map(|i| adjoint_tail(sys, lambda, &y, -1.0 + i as f64 / nint as f64)).collect();
    Ok(AdjointEigenvector { lambda, y_lambda: y, tail, residual })
}

/// Right eigenvector `((I − e^{−λ}A₋₁)x, e^{λθ}x)` with `x ∈ Ker Δ(λ)`.
pub fn right_eigenvector(sys: &DelaySystem, lambda: C64, grid_intervals: usize) -> Result<M2Vector> {
    let delta = sys.eval_delta(lambda);
    let (_, x, _) = kernel_check(lambda, &delta)?;
    let n = sys.n();
    let y = (DMatrix::<C64>::identity(n, n) - to_complex(sys.a_minus1()) * (-lambda).exp()) * &x;
    let nint = grid_intervals.max(1);
    let tail = (0..=nint).map(|i| &x * (lambda * (-1.0 + i as f64 / nint as f64)).exp()).collect();
    Ok(M2Vector { y, tail })
}

/// Whether `rank(Δ(λ); b) = n`, i.e. whether `⟨b, y⟩ ≠ 0` for every `y ∈ Ker Δ(λ)*`.
pub fn rank_with_b(sys: &DelaySystem, lambda: C64, rel_tol: f64) -> usize {
    let n = sys.n();
    let d = sys.eval_delta(lambda);
    let mut m = DMatrix::<C64>::zeros(n, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&d);
    for i in 0..n {
        m[(i, n)] = C64::new(sys.b()[i], 0.0);
    }
    let s = singular_values(&m);
    let scale = s[0].max(1.0);
    s.iter().filter(|&&v| v > rel_tol * scale).count()
}
