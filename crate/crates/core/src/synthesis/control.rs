use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::expfn::PiecewiseExp;
use crate::numeric::C64;

/// Largest tolerated `max|Im v| / (1 + max|v|)` before the real part is taken.
pub const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisMethod {
    /// Minimum-norm solution of the Gram system.
    MinNorm,
    /// Truncated series over a biorthogonal family.
    Series,
}

impl SynthesisMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SynthesisMethod::MinNorm => "min-norm",
            SynthesisMethod::Series => "series",
        }
    }
}

/// Steering control. The moment function `v` satisfies `∫₀ᵀ e^{λτ} v(τ) dτ = s_λ`;
/// the applied input is `u(t) = −v(T − t)` on `[0, T]`.
#[derive(Debug, Clone)]
pub struct ControlSignal {
    pub horizon: f64,
    pub v: PiecewiseExp,
    pub method: SynthesisMethod,
    pub eigenvalues: Vec<C64>,
    /// Gram coefficients `c_m` (min-norm) or the series weights.
    pub coefficients: Vec<C64>,
    /// Largest moment-equation defect.
    pub residual: f64,
    pub imag_ratio: f64,
    pub effective_rank: Option<usize>,
    pub condition: Option<f64>,
    /// Feedback `u += p₁·z(t−1)` applied on top of the open-loop part.
    pub feedback_gain: Option<DVector<f64>>,
}

/// `max|Im v| / (1 + max|v|)` on a grid with 512 points per unit.
pub fn imag_ratio(v: &PiecewiseExp, horizon: f64) -> f64 {
    let m = (horizon * 512.0).ceil() as usize;
    let (mut im, mut mag) = (0.0f64, 0.0f64);
    for i in 0..=m {
        let z = v.eval(horizon * i as f64 / m as f64);
        im = im.max(z.im.abs());
        mag = mag.max(z.norm());
    }
    im / (1.0 + mag)
}

pub fn moment_residual(v: &PiecewiseExp, eigs: &[C64], targets: &[C64]) -> f64 {
    eigs.iter().zip(targets).map(|(&l, &s)| (v.moment(l) - s).norm()).fold(0.0, f64::max)
}

impl ControlSignal {
    pub(crate) fn build(
        horizon: f64,
        v: PiecewiseExp,
        method: SynthesisMethod,
        eigenvalues: Vec<C64>,
        coefficients: Vec<C64>,
        targets: &[C64],
    ) -> Result<Self> {
        let v = v.simplified();
        let ratio = imag_ratio(&v, horizon);
        if ratio > IMAG_TOL {
            return Err(Error::InvalidInput(format!(
                "control has imaginary part {ratio:e} relative to its size; moment data not conjugate-symmetric"
            )));
        }
        let residual = moment_residual(&v, &eigenvalues, targets);
        Ok(Self {
            horizon,
            v,
            method,
            eigenvalues,
            coefficients,
            residual,
            imag_ratio: ratio,
            effective_rank: None,
            condition: None,
            feedback_gain: None,
        })
    }

    /// Applied input `u(t)`.
    pub fn u(&self, t: f64) -> f64 {
        if !(0.0..=self.horizon).contains(&t) {
            return 0.0;
        }
        -self.v.eval(self.horizon - t).re
    }

    /// `∫_a^b u(t) dt` in closed form.
    pub fn step_integral(&self, a: f64, b: f64) -> f64 {
        -self.v.integral(self.horizon - b, self.horizon - a).re
    }

    /// `u` at `t_i = i/intervals_per_unit` over `[0, T]`.
    pub fn samples(&self, intervals_per_unit: usize) -> Vec<(f64, f64)> {
        let m = (self.horizon * intervals_per_unit as f64).round() as usize;
        (0..=m)
            .map(|i| {
                let t = i as f64 / intervals_per_unit as f64;
                (t, self.u(t))
            })
            .collect()
    }

    pub fn l2_norm(&self) -> f64 {
        self.v.l2_norm()
    }

    /// `‖u₁ − u₂‖` in `L²[0, T]`.
    pub fn l2_distance(&self, other: &ControlSignal) -> f64 {
        let mut d = self.v.clone();
        d.add_assign_scaled(&other.v, C64::new(-1.0, 0.0));
        d.l2_norm()
    }
}
