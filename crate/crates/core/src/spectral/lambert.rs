use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::{C64, I};

const MAX_ITER: usize = 100;

/// The `k`-th zero of `λ e^λ = a` for `a > 0`, ordered by imaginary part; `k = 0` is real.
pub fn lambert_branch(a: f64, k: i64) -> Result<C64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidInput(format!("lambert_branch needs a > 0, got {a}")));
    }
    let z = C64::new(a, 0.0);
    let mut w = if k == 0 {
        let l = (1.0 + a).ln();
        C64::new(l * (1.0 - (1.0 + l).ln() / (2.0 + l)), 0.0)
    } else {
        let l1 = C64::new(a.ln(), 0.0) + 2.0 * PI * k as f64 * I;
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * w.norm().max(1.0) {
            break;
        }
    }
    if k == 0 {
        w.im = 0.0;
    }
    let residual = (w * w.exp() - z).norm();
    if residual > 1e-12 * (1.0 + a) || !w.re.is_finite() {
        return Err(Error::NonConvergence(format!("Lambert branch a={a}, k={k}: residual {residual:e}")));
    }
    Ok(w)
}
