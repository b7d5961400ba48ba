//! Small numerical kernels shared by the other modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// `(e^w - 1) / w`, with the removable singularity at zero filled in.
pub fn phi1(w: C64) -> C64 {
    if w.norm() < 0.1 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for m in 2..18 {
            term *= w / m as f64;
            sum += term;
        }
        sum
    } else {
        (w.exp() - 1.0) / w
    }
}

/// `∫_0^w x^p e^{κx} dx` for `w >= 0`.
pub fn exp_poly_integral(p: usize, kappa: C64, w: f64) -> C64 {
    if w == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let z = kappa * w;
    if z.norm() <= (p as f64 + 1.0).max(2.0) {
        // w^{p+1} Σ z^m / (m! (m+p+1))
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term / (p as f64 + 1.0);
        for m in 1..200 {
            term *= z / m as f64;
            let add = term / (m + p + 1) as f64;
            sum += add;
            if add.norm() <= 1e-17 * sum.norm() && m as f64 > z.norm() {
                break;
            }
        }
        return sum * w.powi(p as i32 + 1);
    }
    let ez = z.exp();
    let mut acc = (ez - 1.0) / kappa;
    for q in 1..=p {
        acc = (ez * w.powi(q as i32) - q as f64 * acc) / kappa;
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

pub fn to_complex_vec(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}

/// Real matrix `[[A, −B], [B, A]]` for `M = A + iB`; every singular value of `M` appears twice.
fn real_embedding(m: &DMatrix<C64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut e = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            e[(i, j)] = z.re;
            e[(i, j + c)] = -z.im;
            e[(i + r, j)] = z.im;
            e[(i + r, j + c)] = z.re;
        }
    }
    e
}

fn unembed(v: DVector<f64>) -> DVector<C64> {
    let n = v.len() / 2;
    DVector::from_fn(n, |i, _| C64::new(v[i], v[i + n]))
}

fn embed(v: &DVector<C64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = real_embedding(m).svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.into_iter().step_by(2).collect()
}

/// Numerical rank with a tolerance relative to the largest singular value.
pub fn rank_rel(m: &DMatrix<C64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular triple of a square matrix: `(σ_min, left u, right v)` with `M v = σ u`.
pub fn smallest_singular(m: &DMatrix<C64>) -> (f64, DVector<C64>, DVector<C64>, Vec<f64>) {
    let svd = real_embedding(m).svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    let s = &svd.singular_values;
    let mut idx = 0;
    for i in 0..s.len() {
        if s[i] < s[idx] {
            idx = i;
        }
    }
    let left = unembed(u.column(idx).into_owned());
    let right = unembed(vt.row(idx).transpose());
    let mut all: Vec<f64> = s.iter().copied().collect();
    all.sort_by(|a, b| b.total_cmp(a));
    let all = all.into_iter().step_by(2).collect();
    (s[idx], left, right, all)
}

/// Solve a square complex system through a truncated SVD; returns the solution, effective rank and
/// condition number of the kept part.
pub fn svd_solve(m: &DMatrix<C64>, rhs: &DVector<C64>, rel_cut: f64) -> (DVector<C64>, usize, f64) {
    let svd = real_embedding(m).svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v requested");
    let s = &svd.singular_values;
    let b = embed(rhs);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let mut x = DVector::<f64>::zeros(2 * m.ncols());
    let mut kept: usize = 0;
    let mut smin_kept = smax;
    for i in 0..s.len() {
        if s[i] > rel_cut * smax && s[i] > 0.0 {
            kept += 1;
            smin_kept = smin_kept.min(s[i]);
            let coef = u.column(i).dot(&b) / s[i];
            x += vt.row(i).transpose() * coef;
        }
    }
    let cond = if smin_kept > 0.0 { smax / smin_kept } else { f64::INFINITY };
    (unembed(x), kept.div_ceil(2), cond)
}
