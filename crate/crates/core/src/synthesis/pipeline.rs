use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::control::ControlSignal;
use super::family::{biortho_multibranch, corrected_family};
use super::moments::{min_norm_control, moment_targets, MomentProblem};
use super::series::series_control;
use crate::analysis::pbh_pair_controllable;
use crate::error::{Error, Result};
use crate::model::{DelaySystem, M2State};
use crate::numeric::C64;
use crate::spectral::{
    comparison_branches, find_eigenvalues, lambert_branch, require_simple, EigenPoint, SpectrumReport, Window,
};

pub const DEFAULT_TRUNCATION: usize = 21;
/// Magnitude of the optional gain that splits multiple eigenvalues.
pub const PERTURBATION_GAIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    /// Series over the corrected comparison family when one exists, else minimum norm.
    Auto,
    MinNorm,
    Series,
}

#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    pub method: MethodChoice,
    /// Search window; chosen from the truncation when absent.
    pub window: Option<Window>,
    /// Apply a small random feedback when the selected spectrum is not simple.
    pub perturb_multiple: bool,
    pub seed: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { method: MethodChoice::Auto, window: None, perturb_multiple: false, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub control: ControlSignal,
    pub problem: MomentProblem,
    pub spectrum: SpectrumReport,
    /// Eigenvalues kept per branch.
    pub per_branch: usize,
    pub family_defect: Option<f64>,
    pub correction_condition: Option<f64>,
    pub fallback_reason: Option<String>,
}

fn auto_window(sys: &DelaySystem, h: i64, widen: u32) -> Window {
    let extra = widen as f64;
    if let Some(a) = comparison_branches(sys) {
        let mut im_in = 0.0f64;
        let mut im_out = f64::INFINITY;
        let (mut re_lo, mut re_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &aj in &a {
            for k in 0..=h + 1 {
                if let Ok(z) = lambert_branch(aj, k) {
                    if k <= h {
                        im_in = im_in.max(z.im);
                    } else {
                        im_out = im_out.min(z.im);
                    }
                    re_lo = re_lo.min(z.re);
                    re_hi = re_hi.max(z.re);
                }
            }
        }
        let im = if im_out.is_finite() { 0.5 * (im_in + im_out) } else { im_in + PI };
        let pad = 2.0 + sys.a0().norm();
        Window {
            re_min: re_lo - pad - 3.0 * extra,
            re_max: re_hi + pad,
            im_min: -(im + 2.0 * PI * extra),
            im_max: im + 2.0 * PI * extra,
        }
    } else {
        let im = 2.0 * PI * (h as f64 + extra) + 0.5 * PI;
        let bound = 1.0 + sys.a0().norm() + sys.a1().norm() + sys.a3().integral(-1.0, 0.0).norm();
        Window { re_min: -(6.0 + 2.0 * (1.0 + im).ln()) - 3.0 * extra, re_max: bound, im_min: -im, im_max: im }
    }
}

/// The `count` points of smallest `|Im λ|`, keeping conjugate pairs together.
fn select_smallest_imag(points: &[EigenPoint], count: usize) -> Vec<EigenPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.lambda.im.abs().total_cmp(&b.lambda.im.abs()).then(a.lambda.re.total_cmp(&b.lambda.re)));
    let mut out: Vec<EigenPoint> = Vec::new();
    let mut mult = 0;
    for p in sorted {
        if mult >= count {
            let last = out.last().map(|q| q.lambda).unwrap_or_default();
            if (last.conj() - p.lambda).norm() > 1e-10 * (1.0 + last.norm()) {
                break;
            }
        }
        mult += p.multiplicity;
        out.push(p);
    }
    out.sort_by(|a, b| a.lambda.im.total_cmp(&b.lambda.im));
    out
}

fn locate_spectrum(sys: &DelaySystem, count: usize, h: i64, window: Option<Window>) -> Result<(SpectrumReport, Vec<EigenPoint>)> {
    let tries: u32 = if window.is_some() { 1 } else { 4 };
    let mut last_err = None;
    for widen in 0..tries {
        let w = window.unwrap_or_else(|| auto_window(sys, h, widen));
        let mut spectrum = None;
        for nudge in 0..5 {
            let shifted = Window { re_min: w.re_min - 0.0137 * nudge as f64, ..w };
            match find_eigenvalues(sys, &shifted) {
                Ok(s) => {
                    spectrum = Some(s);
                    break;
                }
                Err(e @ Error::BoundaryZero { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        let Some(spectrum) = spectrum else { continue };
        let total: usize = spectrum.points.iter().map(|p| p.multiplicity).sum();
        if total >= count && spectrum.unresolved.is_empty() {
            let chosen = select_smallest_imag(&spectrum.points, count);
            return Ok((spectrum, chosen));
        }
        last_err = Some(if spectrum.unresolved.is_empty() {
            Error::InvalidInput(format!("window holds {total} eigenvalues, {count} requested"))
        } else {
            Error::NonConvergence(format!("{} unresolved cells in the search window", spectrum.unresolved.len()))
        });
    }
    Err(last_err.unwrap_or_else(|| Error::NonConvergence("eigenvalue search failed".into())))
}

/// Match each eigenvalue to a distinct comparison zero `(branch, index)`, nearest first.
fn match_to_seeds(a: &[f64], eigs: &[C64], h: i64) -> Result<Vec<(usize, i64)>> {
    let span = h + 3;
    let mut seeds = Vec::new();
    for (j, &aj) in a.iter().enumerate() {
        for k in -span..=span {
            seeds.push((j, k, lambert_branch(aj, k)?));
        }
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (e, &z) in eigs.iter().enumerate() {
        for (s, seed) in seeds.iter().enumerate() {
            pairs.push(((z - seed.2).norm(), e, s));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut taken_e = vec![false; eigs.len()];
    let mut taken_s = vec![false; seeds.len()];
    let mut out = vec![(0usize, 0i64); eigs.len()];
    let mut left = eigs.len();
    for (_, e, s) in pairs {
        if left == 0 {
            break;
        }
        if !taken_e[e] && !taken_s[s] {
            taken_e[e] = true;
            taken_s[s] = true;
            out[e] = (seeds[s].0, seeds[s].1);
            left -= 1;
        }
    }
    Ok(out)
}

fn series_route(sys: &DelaySystem, mp: &MomentProblem, h: i64) -> Result<(ControlSignal, f64, f64)> {
    let a = comparison_branches(sys)
        .ok_or_else(|| Error::Unsupported("A1 needs distinct positive real eigenvalues for the explicit family".into()))?;
    let members = match_to_seeds(&a, mp.eigs(), h)?;
    let base = biortho_multibranch(&a, &members, mp.horizon())?;
    let (family, cond) = corrected_family(&base, mp.eigs())?;
    let defect = family.max_defect();
    let control = series_control(mp, &family)?;
    Ok((control, defect, cond))
}

/// Steering control for `x₀` over `[0, T]` using `K` eigenvalues per branch.
///
/// `K` is rounded up to an odd count so the selected set is conjugate-closed around the real zero.
pub fn synthesize(
    sys: &DelaySystem,
    x0: &M2State,
    horizon: f64,
    truncation_k: usize,
    opts: &SynthesisOptions,
) -> Result<Synthesis> {
    let n = sys.n();
    if !(horizon > n as f64) {
        return Err(Error::HorizonTooShort { horizon, n });
    }
    if !sys.is_retarded() {
        return Err(Error::Unsupported("control synthesis needs A_minus1 = 0".into()));
    }
    if x0.n() != n {
        return Err(Error::DimensionMismatch { what: "initial state", expected: n, found: x0.n() });
    }
    let pbh = pbh_pair_controllable(sys.a1(), sys.b());
    if !pbh.holds {
        return Err(Error::NotControllablePair { witness: pbh.witness.unwrap_or_default() });
    }
    let h = (truncation_k.max(1) / 2) as i64;
    let per_branch = 2 * h as usize + 1;
    let count = n * per_branch;
    let (spectrum, chosen) = locate_spectrum(sys, count, h, opts.window)?;

    if let Err(e) = require_simple(&chosen) {
        if !opts.perturb_multiple {
            return Err(e);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let p = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let p = p.normalize() * PERTURBATION_GAIN;
        let perturbed = sys.with_feedback(&p);
        let inner = SynthesisOptions { perturb_multiple: false, ..opts.clone() };
        let mut out = synthesize(&perturbed, x0, horizon, truncation_k, &inner)?;
        out.control.feedback_gain = Some(p);
        return Ok(out);
    }

    let mp = moment_targets(sys, x0, horizon, &chosen)?;
    let mut fallback_reason = None;
    let series = match opts.method {
        MethodChoice::MinNorm => None,
        MethodChoice::Series => Some(series_route(sys, &mp, h)?),
        MethodChoice::Auto => match series_route(sys, &mp, h) {
            Ok(r) => Some(r),
            Err(e) => {
                fallback_reason = Some(e.to_string());
                None
            }
        },
    };
    let (control, family_defect, correction_condition) = match series {
        Some((c, d, k)) => (c, Some(d), Some(k)),
        None => (min_norm_control(&mp)?, None, None),
    };
    Ok(Synthesis { control, problem: mp, spectrum, per_branch, family_defect, correction_condition, fallback_reason })
}
