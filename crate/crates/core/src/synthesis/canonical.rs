use nalgebra::{DMatrix, DVector};

use crate::analysis::pbh_pair_controllable;
use crate::error::{Error, Result};
use crate::model::DelaySystem;

pub const PLACEMENT_COND_LIMIT: f64 = 1e12;

/// Feedback `u = v + p₁z(t−1)` and basis `T` with `T⁻¹(A₁ + b p₁)T = diag(a)`, `T⁻¹b = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub gain_p1: DVector<f64>,
    pub basis_t: DMatrix<f64>,
    pub a_values: Vec<f64>,
    pub b_canonical: DVector<f64>,
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = m.clone().svd(false, false).singular_values;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Pole placement to distinct nonzero reals (default `1, …, n`) followed by eigenbasis scaling.
pub fn canonicalize(sys: &DelaySystem, targets: Option<&[f64]>) -> Result<CanonicalForm> {
    if !sys.is_retarded() {
        return Err(Error::Unsupported("canonical form needs A_minus1 = 0".into()));
    }
    let n = sys.n();
    let (a1, b) = (sys.a1(), sys.b());
    let pbh = pbh_pair_controllable(a1, b);
    if !pbh.holds {
        return Err(Error::NotControllablePair { witness: pbh.witness.unwrap_or_default() });
    }
    let mut a_values: Vec<f64> = match targets {
        Some(t) => t.to_vec(),
        None => (1..=n).map(|i| i as f64).collect(),
    };
    if a_values.len() != n {
        return Err(Error::DimensionMismatch { what: "placement targets", expected: n, found: a_values.len() });
    }
    a_values.sort_by(f64::total_cmp);
    if a_values.iter().any(|&a| a == 0.0 || !a.is_finite()) || a_values.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("placement targets must be distinct, finite and nonzero".into()));
    }

    let mut ctrb = DMatrix::<f64>::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        ctrb.set_column(j, &col);
        col = a1 * col;
    }
    let cond = condition_number(&ctrb);
    if cond > PLACEMENT_COND_LIMIT {
        return Err(Error::PlacementIllConditioned { cond });
    }
    let mut phi = DMatrix::<f64>::identity(n, n);
    for &a in &a_values {
        phi = &phi * (a1 - DMatrix::identity(n, n) * a);
    }
    let ctrb_inv = ctrb.try_inverse().ok_or(Error::PlacementIllConditioned { cond: f64::INFINITY })?;
    let last_row = ctrb_inv.row(n - 1).into_owned();
    let gain_p1 = -(last_row * phi).transpose();

    let closed = a1 + b * gain_p1.transpose();
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (j, &a) in a_values.iter().enumerate() {
        let shifted = &closed - DMatrix::identity(n, n) * a;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("v requested");
        let s = &svd.singular_values;
        let mut idx = 0;
        for i in 0..s.len() {
            if s[i] < s[idx] {
                idx = i;
            }
        }
        v.set_column(j, &vt.row(idx).transpose());
    }
    let c = v.clone().lu().solve(b).ok_or(Error::PlacementIllConditioned { cond: f64::INFINITY })?;
    let cmax = c.amax();
    if c.iter().any(|&x| x.abs() <= 1e-12 * cmax.max(1.0)) {
        return Err(Error::PlacementIllConditioned { cond: f64::INFINITY });
    }
    let basis_t = v * DMatrix::from_diagonal(&c);
    Ok(CanonicalForm { gain_p1, basis_t, a_values, b_canonical: DVector::from_element(n, 1.0) })
}
