use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric::{binomial, exp_poly_integral, C64};

/// One polynomial piece on `[left, right)`; `coeffs[p]` multiplies `(θ - left)^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPiece {
    pub left: f64,
    pub right: f64,
    pub coeffs: Vec<DMatrix<f64>>,
}

/// Piecewise-polynomial n×n kernel on `[support_left, 0]`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixKernel {
    n: usize,
    support_left: f64,
    pieces: Vec<KernelPiece>,
}

impl MatrixKernel {
    pub fn new(n: usize, support_left: f64, pieces: Vec<KernelPiece>) -> Result<Self> {
        if !(support_left > -1.0 && support_left <= 0.0) {
            return Err(Error::InvalidInput(format!("kernel support_left {support_left} must lie in (-1, 0]")));
        }
        for piece in &pieces {
            if !(piece.left.is_finite() && piece.right.is_finite() && piece.left < piece.right) {
                return Err(Error::InvalidInput(format!(
                    "kernel piece [{}, {}] is empty or not finite",
                    piece.left, piece.right
                )));
            }
            if piece.left < support_left - 1e-15 || piece.right > 1e-15 {
                return Err(Error::InvalidInput(format!(
                    "kernel piece [{}, {}] leaves the support [{support_left}, 0]",
                    piece.left, piece.right
                )));
            }
            for c in &piece.coeffs {
                if c.nrows() != n || c.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        what: "kernel coefficient",
                        expected: n,
                        found: if c.nrows() != n { c.nrows() } else { c.ncols() },
                    });
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("kernel coefficient is not finite".into()));
                }
            }
        }
        Ok(Self { n, support_left, pieces })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, support_left: 0.0, pieces: Vec::new() }
    }

    /// Constant matrix on `[left, 0]`.
    pub fn constant(value: DMatrix<f64>, left: f64) -> Result<Self> {
        let n = value.nrows();
        Self::new(n, left, vec![KernelPiece { left, right: 0.0, coeffs: vec![value] }])
    }

    /// Piecewise-linear interpolant of samples `values[i]` taken at increasing `thetas[i]`.
    pub fn from_samples(thetas: &[f64], values: &[DMatrix<f64>]) -> Result<Self> {
        if thetas.len() != values.len() || thetas.len() < 2 {
            return Err(Error::InvalidInput("sampled kernel needs at least two matched samples".into()));
        }
        let n = values[0].nrows();
        let pieces = thetas
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| KernelPiece { left: t[0], right: t[1], coeffs: vec![v[0].clone(), (&v[1] - &v[0]) / (t[1] - t[0])] })
            .collect();
        Self::new(n, thetas[0], pieces)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support_left(&self) -> f64 {
        self.support_left
    }

    pub fn pieces(&self) -> &[KernelPiece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.coeffs.iter().all(|c| c.iter().all(|&v| v == 0.0)))
    }

    /// Kernel value; pieces are half-open except at θ = 0.
    pub fn eval(&self, theta: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for piece in &self.pieces {
            let inside = (theta >= piece.left && theta < piece.right) || (theta == 0.0 && piece.right == 0.0);
            if inside {
                let x = theta - piece.left;
                let mut xp = 1.0;
                for c in &piece.coeffs {
                    out += c * xp;
                    xp *= x;
                }
            }
        }
        out
    }

    /// `∫_lo^hi e^{λs} K(s) ds` in closed form.
    pub fn exp_integral(&self, lambda: C64, lo: f64, hi: f64) -> DMatrix<C64> {
        let mut out = DMatrix::<C64>::zeros(self.n, self.n);
        if hi < lo {
            return -self.exp_integral(lambda, hi, lo);
        }
        for piece in &self.pieces {
            let a = piece.left.max(lo);
            let b = piece.right.min(hi);
            if b <= a {
                continue;
            }
            let d = a - piece.left;
            let scale = (lambda * a).exp();
            let deg = piece.coeffs.len();
            for q in 0..deg {
                let weight = scale * exp_poly_integral(q, lambda, b - a);
                for (p, c) in piece.coeffs.iter().enumerate().skip(q) {
                    let f = binomial(p, q) * d.powi((p - q) as i32);
                    if f != 0.0 {
                        out.zip_apply(c, |o, v| *o += weight * (v * f));
                    }
                }
            }
        }
        out
    }

    /// `∫_lo^hi K(s) ds`.
    pub fn integral(&self, lo: f64, hi: f64) -> DMatrix<f64> {
        self.exp_integral(C64::new(0.0, 0.0), lo, hi).map(|v| v.re)
    }

    /// Piecewise derivative (jumps between pieces are not included).
    pub fn derivative(&self) -> MatrixKernel {
        let pieces = self
            .pieces
            .iter()
            .map(|p| KernelPiece {
                left: p.left,
                right: p.right,
                coeffs: p.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect(),
            })
            .collect();
        MatrixKernel { n: self.n, support_left: self.support_left, pieces }
    }

    /// Value of a single piece at its own endpoints `(K(l+), K(r-))`.
    pub fn piece_end_values(piece: &KernelPiece, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let w = piece.right - piece.left;
        let mut right = DMatrix::zeros(n, n);
        let mut xp = 1.0;
        for c in &piece.coeffs {
            right += c * xp;
            xp *= w;
        }
        let left = piece.coeffs.first().cloned().unwrap_or_else(|| DMatrix::zeros(n, n));
        (left, right)
    }
}
