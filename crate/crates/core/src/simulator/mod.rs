//! Method-of-steps trapezoidal integration of the delay equation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{DelaySystem, M2State, MatrixKernel};
use crate::numeric::gauss_legendre;
use crate::synthesis::ControlSignal;

pub const DEFAULT_STEPS_PER_UNIT: usize = 512;

/// Uniform grid with `1/dt` steps per unit delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    steps_per_unit: usize,
    steps: usize,
}

impl Grid {
    pub fn new(steps_per_unit: usize, horizon: f64) -> Result<Self> {
        if steps_per_unit == 0 {
            return Err(Error::IncompatibleGrid("1/dt must be a positive integer".into()));
        }
        let steps = horizon * steps_per_unit as f64;
        if !(horizon > 0.0) || (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::IncompatibleGrid(format!("horizon {horizon} is not a multiple of dt")));
        }
        Ok(Self { steps_per_unit, steps: steps.round() as usize })
    }

    pub fn from_dt(dt: f64, horizon: f64) -> Result<Self> {
        let inv = 1.0 / dt;
        if !(dt > 0.0) || (inv - inv.round()).abs() > 1e-9 * inv {
            return Err(Error::IncompatibleGrid(format!("1/dt = {inv} is not an integer")));
        }
        Self::new(inv.round() as usize, horizon)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps_per_unit as f64
    }
    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn horizon(&self) -> f64 {
        self.steps as f64 / self.steps_per_unit as f64
    }
}

/// Input applied during simulation.
pub trait ControlInput {
    fn value(&self, t: f64) -> f64;
    /// `∫_a^b u`, when available in closed form.
    fn step_integral(&self, _a: f64, _b: f64) -> Option<f64> {
        None
    }
    /// Additional feedback `p·z(t−1)`.
    fn feedback_gain(&self) -> Option<&DVector<f64>> {
        None
    }
}

pub struct ZeroControl;

impl ControlInput for ZeroControl {
    fn value(&self, _t: f64) -> f64 {
        0.0
    }
    fn step_integral(&self, _a: f64, _b: f64) -> Option<f64> {
        Some(0.0)
    }
}

impl ControlInput for ControlSignal {
    fn value(&self, t: f64) -> f64 {
        self.u(t)
    }
    fn step_integral(&self, a: f64, b: f64) -> Option<f64> {
        Some(ControlSignal::step_integral(self, a, b))
    }
    fn feedback_gain(&self) -> Option<&DVector<f64>> {
        self.feedback_gain.as_ref()
    }
}

/// Uniformly sampled input, linear between samples and zero after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledControl {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl ControlInput for SampledControl {
    fn value(&self, t: f64) -> f64 {
        if t < 0.0 || self.values.is_empty() {
            return 0.0;
        }
        let x = t / self.dt;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return if (x - (self.values.len() - 1) as f64).abs() < 1e-9 { *self.values.last().unwrap() } else { 0.0 };
        }
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// The history is differentiable; required when `A₋₁ ≠ 0`.
    pub smooth_history: bool,
}

/// Solution samples; `z[k]` is the state at `t = −1 + k·dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub z: Vec<DVector<f64>>,
    /// Applied input at `t = i·dt`, `i = 0..=steps`.
    pub u: Vec<f64>,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        -1.0 + k as f64 * self.grid.dt()
    }

    /// State at grid time `t` (nearest grid point).
    pub fn at(&self, t: f64) -> &DVector<f64> {
        let k = ((t + 1.0) * self.grid.steps_per_unit() as f64).round().max(0.0) as usize;
        &self.z[k.min(self.z.len() - 1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullCheck {
    pub is_null: bool,
    pub residual: f64,
}

/// Contributions `Σ_j C_j z(t − j·dt)` of every delayed and distributed term.
fn offset_matrices(sys: &DelaySystem, steps_per_unit: usize) -> Vec<DMatrix<f64>> {
    let n = sys.n();
    let nu = steps_per_unit;
    let dt = 1.0 / nu as f64;
    let mut c = vec![DMatrix::<f64>::zeros(n, n); nu + 1];
    c[0] += sys.a0();
    c[nu] += sys.a1();

    let point = |theta: f64, m: &DMatrix<f64>, c: &mut Vec<DMatrix<f64>>| {
        let x = -theta * nu as f64;
        let j0 = x.floor();
        let f = x - j0;
        let j0 = j0 as usize;
        if f < 1e-12 {
            c[j0] += m;
        } else if f > 1.0 - 1e-12 {
            c[j0 + 1] += m;
        } else {
            c[j0] += m * (1.0 - f);
            c[j0 + 1] += m * f;
        }
    };
    // ∫A₂ż = Σ_pieces [A₂(r−)z(t+r) − A₂(l+)z(t+l)] − ∫A₂'z
    for piece in sys.a2().pieces() {
        let (left, right) = MatrixKernel::piece_end_values(piece, n);
        point(piece.right, &right, &mut c);
        point(piece.left, &(-left), &mut c);
    }
    let d2 = sys.a2().derivative();
    let kernels: [(&MatrixKernel, f64); 2] = [(sys.a3(), 1.0), (&d2, -1.0)];

    let (gx, gw) = gauss_legendre(6);
    for (kernel, sign) in kernels {
        if kernel.is_zero() {
            continue;
        }
        let mut breaks: Vec<f64> = kernel.pieces().iter().flat_map(|p| [p.left, p.right]).collect();
        breaks.sort_by(f64::total_cmp);
        for cell in 0..nu {
            let hi = -(cell as f64) * dt;
            let lo = hi - dt;
            if hi <= kernel.support_left() {
                break;
            }
            let mut cuts = vec![lo];
            cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
            cuts.push(hi);
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                for (x, wt) in gx.iter().zip(&gw) {
                    let theta = a + 0.5 * (b - a) * (x + 1.0);
                    let weight = 0.5 * (b - a) * wt * sign;
                    let k = kernel.eval(theta);
                    let right_share = (theta - lo) / dt;
                    c[cell] += &k * (weight * right_share);
                    c[cell + 1] += &k * (weight * (1.0 - right_share));
                }
            }
        }
    }
    c
}

fn history_on_grid(x0: &M2State, steps_per_unit: usize) -> Result<Vec<DVector<f64>>> {
    let n0 = x0.intervals();
    if !steps_per_unit.is_multiple_of(n0) && !n0.is_multiple_of(steps_per_unit) {
        return Err(Error::IncompatibleGrid(format!(
            "state grid with {n0} intervals and simulation grid with {steps_per_unit} steps per unit are not nested"
        )));
    }
    Ok((0..=steps_per_unit).map(|k| x0.history_at(-1.0 + k as f64 / steps_per_unit as f64)).collect())
}

/// Integrate from `x₀` under input `u` over the grid horizon.
pub fn simulate(sys: &DelaySystem, x0: &M2State, u: &dyn ControlInput, grid: Grid, opts: SimOptions) -> Result<Trajectory> {
    let n = sys.n();
    if x0.n() != n {
        return Err(Error::DimensionMismatch { what: "initial state", expected: n, found: x0.n() });
    }
    let neutral = !sys.is_retarded();
    if neutral && !opts.smooth_history {
        return Err(Error::NonSmoothHistory);
    }
    let sys = match u.feedback_gain() {
        Some(p) => sys.with_feedback(p),
        None => sys.clone(),
    };
    let nu = grid.steps_per_unit();
    let dt = grid.dt();
    let c = offset_matrices(&sys, nu);
    let active: Vec<usize> = (1..=nu).filter(|&j| c[j].iter().any(|&v| v != 0.0)).collect();
    let lhs = DMatrix::<f64>::identity(n, n) - &c[0] * (0.5 * dt);
    let lu = lhs.lu();

    let mut z = history_on_grid(x0, nu)?;
    z.reserve(grid.steps());
    let am1 = sys.a_minus1().clone();
    let mut w = x0.y().clone();
    z[nu] = if neutral { &w + &am1 * &z[0] } else { w.clone() };

    let delayed = |z: &[DVector<f64>], idx: usize| -> DVector<f64> {
        let mut r = DVector::zeros(n);
        for &j in &active {
            r += &c[j] * &z[idx - j];
        }
        r
    };
    let b = sys.b().clone();
    let mut f_prev = &c[0] * &z[nu] + delayed(&z, nu);
    let mut samples = Vec::with_capacity(grid.steps() + 1);
    samples.push(u.value(0.0));
    for i in 0..grid.steps() {
        let (ta, tb) = (i as f64 * dt, (i + 1) as f64 * dt);
        let idx = nu + i + 1;
        let uint = u.step_integral(ta, tb).unwrap_or_else(|| 0.5 * dt * (u.value(ta) + u.value(tb)));
        let rest = delayed(&z, idx);
        let q = if neutral { &am1 * &z[idx - nu] } else { DVector::zeros(n) };
        let mut rhs = &w + (&f_prev + &rest) * (0.5 * dt) + &b * uint;
        if neutral {
            rhs += &c[0] * &q * (0.5 * dt);
        }
        w = lu.solve(&rhs).ok_or_else(|| Error::NonConvergence("implicit step matrix is singular".into()))?;
        let znew = &w + &q;
        f_prev = &c[0] * &znew + rest;
        if znew.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergence(format!("state became non-finite at t = {tb}")));
        }
        z.push(znew);
        samples.push(u.value(tb));
    }
    if let Some(p) = u.feedback_gain() {
        for (i, s) in samples.iter_mut().enumerate() {
            *s += p.dot(&z[i]);
        }
    }
    Ok(Trajectory { grid, z, u: samples })
}

/// `max ‖z(t)‖∞` over grid points of `[T−1, T]`.
pub fn verify_null(traj: &Trajectory, horizon: f64, tol: f64) -> Result<NullCheck> {
    let available = traj.grid.horizon();
    if horizon > available + 1e-12 {
        return Err(Error::HorizonShort { available, required: horizon });
    }
    let nu = traj.grid.steps_per_unit() as f64;
    let lo = (horizon * nu - 1e-9).ceil() as usize;
    let hi = ((horizon + 1.0) * nu + 1e-9).floor() as usize;
    let residual = traj.z[lo..=hi.min(traj.z.len() - 1)].iter().map(|v| v.amax()).fold(0.0, f64::max);
    Ok(NullCheck { is_null: residual <= tol, residual })
}
