use super::control::{ControlSignal, SynthesisMethod};
use super::family::BiorthFamily;
use super::moments::MomentProblem;
use crate::error::{Error, Result};
use crate::expfn::PiecewiseExp;
use crate::numeric::C64;

/// Largest biorthogonality defect accepted by [`series_control`].
pub const FAMILY_TOL: f64 = 1e-8;
const DIVERGENCE_WINDOW: usize = 5;
const DIVERGENCE_FACTOR: f64 = 10.0;

/// `v = Σ_k s_k conj(h_k)`, so that `∫₀ᵀ e^{λ_j τ} v(τ) dτ = s_j`.
pub fn series_control(mp: &MomentProblem, family: &BiorthFamily) -> Result<ControlSignal> {
    let k = mp.eigs().len();
    if family.len() != k {
        return Err(Error::DimensionMismatch { what: "family size", expected: k, found: family.len() });
    }
    for (a, b) in mp.eigs().iter().zip(family.eigs()) {
        if (a - b).norm() > 1e-10 * (1.0 + a.norm()) {
            return Err(Error::InvalidInput(format!("family exponent {b} does not match eigenvalue {a}")));
        }
    }
    let defect = family.max_defect();
    if defect > FAMILY_TOL {
        return Err(Error::InvalidInput(format!("family is not biorthogonal: defect {defect:e}")));
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| mp.eigs()[a].im.abs().total_cmp(&mp.eigs()[b].im.abs()));
    let horizon = mp.horizon();
    let grid: Vec<f64> = {
        let m = (horizon * 128.0).ceil() as usize;
        (0..=m).map(|i| horizon * i as f64 / m as f64).collect()
    };
    let mut partial = vec![C64::new(0.0, 0.0); grid.len()];
    let mut norms = Vec::with_capacity(k);
    let mut v = PiecewiseExp::zero();
    for &idx in &order {
        let s = mp.targets()[idx];
        if s == C64::new(0.0, 0.0) {
            norms.push(norms.last().copied().unwrap_or(0.0));
            continue;
        }
        let dual = family.dual(idx);
        v.add_assign_scaled(dual, s);
        for (p, &t) in partial.iter_mut().zip(&grid) {
            *p += dual.eval(t) * s;
        }
        norms.push(partial.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    if norms.len() > DIVERGENCE_WINDOW {
        let tail = &norms[norms.len() - DIVERGENCE_WINDOW - 1..];
        let growing = tail.windows(2).all(|w| w[1] > w[0]);
        let factor = tail[DIVERGENCE_WINDOW] / tail[0].max(f64::MIN_POSITIVE);
        if growing && factor > DIVERGENCE_FACTOR {
            return Err(Error::TruncationDiverging { factor });
        }
    }
    ControlSignal::build(horizon, v, SynthesisMethod::Series, mp.eigs().to_vec(), mp.targets().to_vec(), mp.targets())
}
