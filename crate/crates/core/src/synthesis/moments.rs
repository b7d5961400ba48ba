use nalgebra::{DMatrix, DVector};

use super::control::{ControlSignal, SynthesisMethod};
use crate::error::{Error, Result};
use crate::expfn::PiecewiseExp;
use crate::model::{adjoint_tail, psi_eigenvector, DelaySystem, M2State, PsiOptions};
use crate::numeric::{gauss_legendre, phi1, svd_solve, C64};
use crate::spectral::EigenPoint;

/// Relative singular-value cutoff of the Gram solve.
pub const GRAM_CUTOFF: f64 = 1e-12;
/// Moment residual above which a truncated Gram solve is reported as ill-conditioned.
pub const MOMENT_RESIDUAL_TOL: f64 = 1e-6;

/// Exponential moment problem `∫₀ᵀ e^{λ_k τ} v(τ) dτ = s_k`.
#[derive(Debug, Clone)]
pub struct MomentProblem {
    eigs: Vec<C64>,
    targets: Vec<C64>,
    horizon: f64,
    n: usize,
}

fn conj_partner(eigs: &[C64], i: usize) -> Option<usize> {
    let z = eigs[i].conj();
    let tol = 1e-10 * (1.0 + z.norm());
    (0..eigs.len()).find(|&j| (eigs[j] - z).norm() <= tol)
}

impl MomentProblem {
    pub fn new(eigs: Vec<C64>, targets: Vec<C64>, horizon: f64, n: usize) -> Result<Self> {
        if eigs.len() != targets.len() {
            return Err(Error::DimensionMismatch { what: "moment targets", expected: eigs.len(), found: targets.len() });
        }
        if !(horizon > n as f64) {
            return Err(Error::HorizonTooShort { horizon, n });
        }
        for i in 0..eigs.len() {
            for j in i + 1..eigs.len() {
                if (eigs[i] - eigs[j]).norm() < 1e-8 {
                    return Err(Error::InvalidInput(format!("eigenvalues {} and {} are not separated", eigs[i], eigs[j])));
                }
            }
            let Some(p) = conj_partner(&eigs, i) else {
                return Err(Error::InvalidInput(format!("eigenvalue set lacks the conjugate of {}", eigs[i])));
            };
            let scale = 1.0 + targets[i].norm();
            if (targets[p] - targets[i].conj()).norm() > 1e-9 * scale {
                return Err(Error::InvalidInput(format!("targets at {} are not conjugate-symmetric", eigs[i])));
            }
        }
        Ok(Self { eigs, targets, horizon, n })
    }

    pub fn eigs(&self) -> &[C64] {
        &self.eigs
    }
    pub fn targets(&self) -> &[C64] {
        &self.targets
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn n(&self) -> usize {
        self.n
    }
}

/// `⟨x₀, ψ_λ⟩` with the history taken as its piecewise-linear interpolant.
fn pairing(sys: &DelaySystem, x0: &M2State, lambda: C64, y: &DVector<C64>) -> C64 {
    let mut s: C64 = x0.y().iter().zip(y.iter()).map(|(&a, b)| b.conj() * a).sum();
    let (nodes, weights) = gauss_legendre(8);
    let nint = x0.intervals();
    let h = x0.step();
    for c in 0..nint {
        let (za, zb) = (&x0.z0()[c], &x0.z0()[c + 1]);
        if za.iter().chain(zb.iter()).all(|&v| v == 0.0) {
            continue;
        }
        let left = -1.0 + c as f64 * h;
        for (x, w) in nodes.iter().zip(&weights) {
            let f = 0.5 * (x + 1.0);
            let tau = left + f * h;
            let tail = adjoint_tail(sys, lambda, y, tau);
            let z = za * (1.0 - f) + zb * f;
            let dot: C64 = z.iter().zip(tail.iter()).map(|(&a, b)| b.conj() * a).sum();
            s += dot * (0.5 * h * w);
        }
    }
    s
}

/// `s_λ = e^{λT} ⟨x₀, ψ_λ⟩` with `⟨b, y_λ⟩ = 1`, made exactly conjugate-symmetric.
pub fn moment_targets(sys: &DelaySystem, x0: &M2State, horizon: f64, eigs: &[EigenPoint]) -> Result<MomentProblem> {
    if x0.n() != sys.n() {
        return Err(Error::DimensionMismatch { what: "initial state", expected: sys.n(), found: x0.n() });
    }
    if let Some(p) = eigs.iter().find(|p| p.multiplicity > 1) {
        return Err(Error::MultipleEigenvalue { lambda: p.lambda, multiplicity: p.multiplicity });
    }
    let lambdas: Vec<C64> = eigs.iter().map(|p| p.lambda).collect();
    let mut targets = vec![C64::new(0.0, 0.0); lambdas.len()];
    let mut done = vec![false; lambdas.len()];
    let opts = PsiOptions { normalize: true, grid_intervals: 1 };
    for i in 0..lambdas.len() {
        if done[i] {
            continue;
        }
        let lambda = lambdas[i];
        let psi = psi_eigenvector(sys, lambda, opts)?;
        let s =
            if x0.is_zero() { C64::new(0.0, 0.0) } else { (lambda * horizon).exp() * pairing(sys, x0, lambda, &psi.y_lambda) };
        targets[i] = s;
        done[i] = true;
        if let Some(p) = conj_partner(&lambdas, i) {
            if p == i {
                targets[i].im = 0.0;
            } else {
                targets[p] = s.conj();
                done[p] = true;
            }
        }
    }
    MomentProblem::new(lambdas, targets, horizon, sys.n())
}

/// `G_km = ∫₀ᵀ e^{(λ_k + λ̄_m)τ} dτ`.
pub fn gram_matrix(eigs: &[C64], horizon: f64) -> DMatrix<C64> {
    let k = eigs.len();
    DMatrix::from_fn(k, k, |i, j| phi1((eigs[i] + eigs[j].conj()) * horizon) * horizon)
}

/// Minimum-norm `v = Σ c_m e^{λ̄_m τ}` with `G c = s`, solved by truncated SVD.
pub fn min_norm_control(mp: &MomentProblem) -> Result<ControlSignal> {
    let g = gram_matrix(&mp.eigs, mp.horizon);
    let s = DVector::from_column_slice(&mp.targets);
    let (c, rank, cond) = svd_solve(&g, &s, GRAM_CUTOFF);
    let mut v = PiecewiseExp::zero();
    for (m, &lambda) in mp.eigs.iter().enumerate() {
        v.add_assign_scaled(&PiecewiseExp::exp_segment(0.0, mp.horizon, lambda.conj(), C64::new(1.0, 0.0)), c[m]);
    }
    let mut out =
        ControlSignal::build(mp.horizon, v, SynthesisMethod::MinNorm, mp.eigs.clone(), c.iter().copied().collect(), &mp.targets)?;
    out.effective_rank = Some(rank);
    out.condition = Some(cond);
    let smax = mp.targets.iter().map(|s| s.norm()).fold(0.0, f64::max);
    if rank < mp.eigs.len() && out.residual > MOMENT_RESIDUAL_TOL * (1.0 + smax) {
        return Err(Error::IllConditioned { effective_rank: rank, size: mp.eigs.len(), residual: out.residual });
    }
    Ok(out)
}
