use nalgebra::{DMatrix, DVector};

use super::kernel::MatrixKernel;
use crate::error::{Error, Result};
use crate::numeric::{to_complex, C64};

/// `ż(t) − A₋₁ż(t−1) = A₁z(t−1) + A₀z(t) + ∫₋₁⁰ [A₂(θ)ż(t+θ) + A₃(θ)z(t+θ)] dθ + b u(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySystem {
    n: usize,
    a_minus1: DMatrix<f64>,
    a1: DMatrix<f64>,
    a0: DMatrix<f64>,
    a2: MatrixKernel,
    a3: MatrixKernel,
    b: DVector<f64>,
}

fn check_square(m: &DMatrix<f64>, n: usize, what: &'static str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { what, expected: n, found: if m.nrows() != n { m.nrows() } else { m.ncols() } });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
    }
    Ok(())
}

impl DelaySystem {
    pub fn new(
        a_minus1: DMatrix<f64>,
        a1: DMatrix<f64>,
        a0: DMatrix<f64>,
        a2: MatrixKernel,
        a3: MatrixKernel,
        b: DVector<f64>,
    ) -> Result<Self> {
        let n = b.len();
        if n == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("b has non-finite entries".into()));
        }
        check_square(&a_minus1, n, "A_minus1")?;
        check_square(&a1, n, "A1")?;
        check_square(&a0, n, "A0")?;
        for (k, what) in [(&a2, "A2"), (&a3, "A3")] {
            if k.n() != n {
                return Err(Error::DimensionMismatch { what, expected: n, found: k.n() });
            }
        }
        Ok(Self { n, a_minus1, a1, a0, a2, a3, b })
    }

    /// Point-delay system `ż(t) = A₁z(t−1) + A₀z(t) + b u(t)`.
    pub fn point_delay(a1: DMatrix<f64>, a0: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = b.len();
        Self::new(DMatrix::zeros(n, n), a1, a0, MatrixKernel::zero(n), MatrixKernel::zero(n), b)
    }

    /// `ż(t) = a z(t−1) + u(t)`.
    pub fn scalar(a: f64) -> Self {
        Self::point_delay(DMatrix::from_element(1, 1, a), DMatrix::zeros(1, 1), DVector::from_element(1, 1.0))
            .expect("scalar system is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn a_minus1(&self) -> &DMatrix<f64> {
        &self.a_minus1
    }
    pub fn a1(&self) -> &DMatrix<f64> {
        &self.a1
    }
    pub fn a0(&self) -> &DMatrix<f64> {
        &self.a0
    }
    pub fn a2(&self) -> &MatrixKernel {
        &self.a2
    }
    pub fn a3(&self) -> &MatrixKernel {
        &self.a3
    }
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn is_retarded(&self) -> bool {
        self.a_minus1.iter().all(|&v| v == 0.0)
    }

    pub fn has_kernels(&self) -> bool {
        !(self.a2.is_zero() && self.a3.is_zero())
    }

    /// Left end of the joint kernel support; always above −1.
    pub fn support_left(&self) -> f64 {
        self.a2.support_left().min(self.a3.support_left())
    }

    /// Same system with `A₁` replaced by `A₁ + b p₁`.
    pub fn with_feedback(&self, p1: &DVector<f64>) -> Self {
        let mut out = self.clone();
        out.a1 += &self.b * p1.transpose();
        out
    }

    /// Characteristic matrix Δ(λ).
    pub fn eval_delta(&self, lambda: C64) -> DMatrix<C64> {
        let e = (-lambda).exp();
        let mut d = DMatrix::<C64>::identity(self.n, self.n) * (-lambda);
        d += to_complex(&self.a_minus1) * (lambda * e);
        d += to_complex(&self.a1) * e;
        d += to_complex(&self.a0);
        if !self.a2.is_zero() {
            d += self.a2.exp_integral(lambda, -1.0, 0.0) * lambda;
        }
        if !self.a3.is_zero() {
            d += self.a3.exp_integral(lambda, -1.0, 0.0);
        }
        d
    }

    /// `det Δ(λ)`.
    pub fn char_det(&self, lambda: C64) -> C64 {
        det(self.eval_delta(lambda))
    }
}

pub(crate) fn det(m: DMatrix<C64>) -> C64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.lu().determinant(),
    }
}
