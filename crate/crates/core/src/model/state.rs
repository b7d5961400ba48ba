use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numeric::{to_complex_vec, C64};

/// Initial state `(y, z₀)`; `z0[i]` is the history at `θ = −1 + i/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct M2State {
    y: DVector<f64>,
    z0: Vec<DVector<f64>>,
}

impl M2State {
    pub fn new(y: DVector<f64>, z0: Vec<DVector<f64>>) -> Result<Self> {
        if z0.len() < 2 {
            return Err(Error::InvalidInput("history needs at least two samples".into()));
        }
        let n = y.len();
        for v in &z0 {
            if v.len() != n {
                return Err(Error::DimensionMismatch { what: "history sample", expected: n, found: v.len() });
            }
        }
        if y.iter().chain(z0.iter().flat_map(|v| v.iter())).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("state has non-finite entries".into()));
        }
        Ok(Self { y, z0 })
    }

    pub fn from_fn(y: DVector<f64>, intervals: usize, f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        let z0 = (0..=intervals).map(|i| f(-1.0 + i as f64 / intervals as f64)).collect();
        Self::new(y, z0)
    }

    pub fn constant(y: DVector<f64>, history: DVector<f64>, intervals: usize) -> Result<Self> {
        Self::from_fn(y, intervals, |_| history.clone())
    }

    pub fn zero(n: usize, intervals: usize) -> Self {
        Self::constant(DVector::zeros(n), DVector::zeros(n), intervals).expect("zero state is valid")
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
    pub fn z0(&self) -> &[DVector<f64>] {
        &self.z0
    }
    pub fn intervals(&self) -> usize {
        self.z0.len() - 1
    }
    pub fn step(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    /// Piecewise-linear interpolant of the history.
    pub fn history_at(&self, theta: f64) -> DVector<f64> {
        let n = self.intervals();
        let x = ((theta + 1.0) * n as f64).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let f = x - i as f64;
        &self.z0[i] * (1.0 - f) + &self.z0[i + 1] * f
    }

    pub fn is_zero(&self) -> bool {
        self.y.iter().chain(self.z0.iter().flat_map(|v| v.iter())).all(|&v| v == 0.0)
    }

    /// `α·self + β·other` on a shared grid.
    pub fn combine(&self, alpha: f64, other: &M2State, beta: f64) -> Result<Self> {
        if other.z0.len() != self.z0.len() || other.n() != self.n() {
            return Err(Error::IncompatibleGrid("states live on different grids".into()));
        }
        let z0 = self.z0.iter().zip(&other.z0).map(|(a, b)| a * alpha + b * beta).collect();
        Self::new(&self.y * alpha + &other.y * beta, z0)
    }
}

/// Complex element of the product space sampled on a uniform grid over `[−1, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct M2Vector {
    pub y: DVector<C64>,
    pub tail: Vec<DVector<C64>>,
}

impl From<&M2State> for M2Vector {
    fn from(s: &M2State) -> Self {
        Self { y: to_complex_vec(s.y()), tail: s.z0().iter().map(to_complex_vec).collect() }
    }
}

impl M2Vector {
    fn intervals(&self) -> usize {
        self.tail.len().saturating_sub(1)
    }

    fn coarsened(&self, intervals: usize) -> Vec<DVector<C64>> {
        let m = self.intervals() / intervals;
        self.tail.iter().step_by(m).cloned().collect()
    }
}

/// `⟨x₁, x₂⟩ = y₁·ȳ₂ + ∫₋₁⁰ f₁·f̄₂ dτ` by the trapezoidal rule; conjugate-linear in `x₂`.
pub fn m2_inner(x1: &M2Vector, x2: &M2Vector) -> Result<C64> {
    let n = x1.y.len();
    if x2.y.len() != n {
        return Err(Error::DimensionMismatch { what: "M2 vector", expected: n, found: x2.y.len() });
    }
    let (n1, n2) = (x1.intervals(), x2.intervals());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidInput("tail needs at least two samples".into()));
    }
    let (f1, f2) = if n1 == n2 {
        (x1.tail.clone(), x2.tail.clone())
    } else if n1 % n2 == 0 {
        (x1.coarsened(n2), x2.tail.clone())
    } else if n2 % n1 == 0 {
        (x1.tail.clone(), x2.coarsened(n1))
    } else {
        return Err(Error::IncompatibleGrid(format!("grids with {n1} and {n2} intervals are not nested")));
    };
    for v in f1.iter().chain(&f2) {
        if v.len() != n {
            return Err(Error::DimensionMismatch { what: "M2 tail sample", expected: n, found: v.len() });
        }
    }
    let h = 1.0 / (f1.len() - 1) as f64;
    let mut s = x1.y.dotc(&x2.y).conj();
    let last = f1.len() - 1;
    for (i, (a, b)) in f1.iter().zip(&f2).enumerate() {
        let w = if i == 0 || i == last { 0.5 * h } else { h };
        s += a.dotc(b).conj() * w;
    }
    Ok(s)
}
