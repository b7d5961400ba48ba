use nalgebra::{DMatrix, DVector};

use super::moments::{gram_matrix, GRAM_CUTOFF};
use crate::error::{Error, Result};
use crate::expfn::{ExpTerm, PiecewiseExp};
use crate::numeric::{phi1, singular_values, svd_solve, C64};
use crate::spectral::lambert_branch;

/// Family `{h_k}` with `⟨e^{λ_j t}, h_k⟩ = ∫₀ᵀ e^{λ_j t} conj(h_k(t)) dt = δ_jk`.
///
/// Stored through the conjugates `g_k = conj(h_k)`, whose plain moments are `δ_jk`.
#[derive(Debug, Clone)]
pub struct BiorthFamily {
    eigs: Vec<C64>,
    duals: Vec<PiecewiseExp>,
    horizon: f64,
}

impl BiorthFamily {
    pub fn from_duals(eigs: Vec<C64>, duals: Vec<PiecewiseExp>, horizon: f64) -> Result<Self> {
        if eigs.len() != duals.len() {
            return Err(Error::DimensionMismatch { what: "family members", expected: eigs.len(), found: duals.len() });
        }
        Ok(Self { eigs, duals, horizon })
    }

    pub fn eigs(&self) -> &[C64] {
        &self.eigs
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn len(&self) -> usize {
        self.eigs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.eigs.is_empty()
    }

    /// `g_k = conj(h_k)`.
    pub fn dual(&self, k: usize) -> &PiecewiseExp {
        &self.duals[k]
    }

    /// Family member `h_k`.
    pub fn member(&self, k: usize) -> PiecewiseExp {
        self.duals[k].conj()
    }

    /// `⟨e^{μ_j t}, h_k⟩` for arbitrary exponents `μ_j`.
    pub fn moments_at(&self, mus: &[C64]) -> DMatrix<C64> {
        DMatrix::from_fn(mus.len(), self.len(), |j, k| self.duals[k].moment(mus[j]))
    }

    /// `max_jk |⟨e^{λ_j t}, h_k⟩ − δ_jk|`.
    pub fn max_defect(&self) -> f64 {
        let m = self.moments_at(&self.eigs);
        let mut worst = 0.0f64;
        for j in 0..m.nrows() {
            for k in 0..m.ncols() {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((m[(j, k)] - target).norm());
            }
        }
        worst
    }
}

/// Partner index used by the conjugate-symmetric pairing.
fn partners(s: i64) -> Vec<i64> {
    match s.signum() {
        1 => vec![s + 1],
        -1 => vec![s - 1],
        _ => vec![1, -1],
    }
}

/// Dual of the two-exponential function built from `λ_s` and partner `λ_p` on `[0,1] ∪ [T−1,T]`.
fn pair_dual(ls: C64, lp: C64, horizon: f64, index: i64) -> Result<PiecewiseExp> {
    // moments at λ_j of e^{−λ_s t} − e^{−λ_p t} on [0,1] and of its copy on [T−1,T]
    let f = |lj: C64| phi1(lj - ls) - phi1(lj - lp);
    let shift = |lj: C64| (lj * (horizon - 1.0)).exp();
    let (fs, fp) = (f(ls), f(lp));
    let m = [[fs, shift(ls) * fs], [fp, shift(lp) * fp]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).powi(2);
    if !(det.norm() > 1e-14 * scale) {
        return Err(Error::SingularPairSystem { index });
    }
    let c1 = m[1][1] / det;
    let c2 = -m[1][0] / det;
    let seg = |left: f64, rate: C64, coef: C64| ExpTerm { left, right: left + 1.0, rate, coef, power: 0 };
    Ok(PiecewiseExp::from_terms(vec![
        seg(0.0, -ls, c1),
        seg(0.0, -lp, -c1),
        seg(horizon - 1.0, -ls, c2),
        seg(horizon - 1.0, -lp, -c2),
    ]))
}

/// Dual for zero `s` of `λe^λ = a` on horizon `T`, with symmetric pairing.
pub fn explicit_dual(a: f64, s: i64, horizon: f64) -> Result<PiecewiseExp> {
    if !(horizon > 1.0) {
        return Err(Error::HorizonTooShort { horizon, n: 1 });
    }
    let ls = lambert_branch(a, s)?;
    let ps = partners(s);
    let weight = C64::new(1.0 / ps.len() as f64, 0.0);
    let mut out = PiecewiseExp::zero();
    for p in ps {
        out.add_assign_scaled(&pair_dual(ls, lambert_branch(a, p)?, horizon, s)?, weight);
    }
    Ok(out.simplified())
}

/// Explicit family for the zeros `λ_s`, `s ∈ indices`, of `λe^λ = a` on `[0, T]`.
pub fn biortho_explicit(a: f64, indices: &[i64], horizon: f64) -> Result<BiorthFamily> {
    let mut eigs = Vec::with_capacity(indices.len());
    let mut duals = Vec::with_capacity(indices.len());
    for &s in indices {
        eigs.push(lambert_branch(a, s)?);
        duals.push(explicit_dual(a, s, horizon)?);
    }
    BiorthFamily::from_duals(eigs, duals, horizon)
}

/// Horizon of the single-branch factor and annihilator width for `n` branches on `[0, T]`.
pub fn multibranch_split(n: usize, horizon: f64) -> Result<(f64, f64)> {
    let slack = horizon - n as f64;
    if !(slack > 0.0) {
        return Err(Error::HorizonTooShort { horizon, n });
    }
    Ok((1.0 + slack / n as f64, slack / n as f64))
}

/// Dual for zero `k` of branch `j` that also annihilates every zero of the other branches.
///
/// Each other branch `a_i` is removed by the convolution `g(t−1−δ) − g(t−1) − a_i∫_{t−δ}^t g`,
/// whose transform `(λe^λ − a_i)(e^{λδ} − 1)/λ` vanishes on that branch.
pub fn multibranch_dual(a_list: &[f64], j: usize, k: i64, horizon: f64) -> Result<(C64, PiecewiseExp)> {
    let (t1, delta) = multibranch_split(a_list.len(), horizon)?;
    let lambda = lambert_branch(a_list[j], k)?;
    let mut g = explicit_dual(a_list[j], k, t1)?;
    for (i, &ai) in a_list.iter().enumerate() {
        if i == j {
            continue;
        }
        let q = (lambda * lambda.exp() - ai) * ((lambda * delta).exp() - 1.0) / lambda;
        if !(q.norm() > 1e-12 * (1.0 + ai.abs())) {
            return Err(Error::SingularPairSystem { index: k });
        }
        let mut next = g.shifted(1.0 + delta);
        next.add_assign_scaled(&g.shifted(1.0), C64::new(-1.0, 0.0));
        next.add_assign_scaled(&g.moving_integral(delta), C64::new(-ai, 0.0));
        g = next.scaled(1.0 / q).simplified();
    }
    Ok((lambda, g))
}

/// Family over the zeros `(branch j, index k)` of the comparison factors `λe^λ = a_j`.
pub fn biortho_multibranch(a_list: &[f64], members: &[(usize, i64)], horizon: f64) -> Result<BiorthFamily> {
    let mut eigs = Vec::with_capacity(members.len());
    let mut duals = Vec::with_capacity(members.len());
    for &(j, k) in members {
        let (l, g) = multibranch_dual(a_list, j, k, horizon)?;
        eigs.push(l);
        duals.push(g);
    }
    BiorthFamily::from_duals(eigs, duals, horizon)
}

/// Re-target a family from its own exponents to nearby `actual` ones: `h'_m = Σ_l h_l (M⁻¹)*_{lm}`
/// with `M_{kl} = ⟨e^{μ_k t}, h_l⟩`.
pub fn corrected_family(base: &BiorthFamily, actual: &[C64]) -> Result<(BiorthFamily, f64)> {
    let m = base.moments_at(actual);
    let k = m.nrows();
    if k != base.len() {
        return Err(Error::DimensionMismatch { what: "corrected family", expected: base.len(), found: k });
    }
    let inv = m.clone().try_inverse().ok_or(Error::IllConditioned { effective_rank: 0, size: k, residual: f64::INFINITY })?;
    let sv = singular_values(&m);
    let cond = sv[0] / sv[k - 1];
    if !(cond < 1e12) {
        return Err(Error::IllConditioned { effective_rank: k, size: k, residual: cond });
    }
    let duals = (0..k)
        .map(|col| {
            let mut g = PiecewiseExp::zero();
            for l in 0..k {
                let w = inv[(l, col)];
                if w != C64::new(0.0, 0.0) {
                    g.add_assign_scaled(base.dual(l), w);
                }
            }
            g.simplified()
        })
        .collect();
    Ok((BiorthFamily::from_duals(actual.to_vec(), duals, base.horizon())?, cond))
}

/// Orthogonal projection of each member onto `span{e^{λ̄_m t}}` in `L²[0, T]`.
pub fn projection_family(base: &BiorthFamily) -> BiorthFamily {
    let eigs = base.eigs().to_vec();
    let g = gram_matrix(&eigs, base.horizon());
    let moments = base.moments_at(&eigs);
    let duals = (0..base.len())
        .map(|k| {
            let rhs = DVector::from_iterator(eigs.len(), moments.column(k).iter().copied());
            let (c, _, _) = svd_solve(&g, &rhs, GRAM_CUTOFF);
            let mut d = PiecewiseExp::zero();
            for (m, &l) in eigs.iter().enumerate() {
                d.add_assign_scaled(&PiecewiseExp::exp_segment(0.0, base.horizon(), l.conj(), C64::new(1.0, 0.0)), c[m]);
            }
            d.simplified()
        })
        .collect();
    BiorthFamily { eigs, duals, horizon: base.horizon() }
}
