//! Piecewise exponential-polynomial functions with closed-form moments, shifts,
//! moving integrals and L² norms.

use crate::numeric::{binomial, exp_poly_integral, gauss_legendre, C64};

/// `coef · (t − left)^power · e^{rate (t − left)}` on `[left, right)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub left: f64,
    pub right: f64,
    pub rate: C64,
    pub coef: C64,
    pub power: u32,
}

impl ExpTerm {
    /// Same function restricted to `[a, b] ⊂ [left, right]` and anchored at `a`.
    fn reanchor(&self, a: f64, b: f64) -> Vec<ExpTerm> {
        let d = a - self.left;
        if d == 0.0 {
            return vec![ExpTerm { left: a, right: b, ..*self }];
        }
        let base = self.coef * (self.rate * d).exp();
        let p = self.power as usize;
        (0..=p)
            .map(|q| ExpTerm {
                left: a,
                right: b,
                rate: self.rate,
                coef: base * (binomial(p, q) * d.powi((p - q) as i32)),
                power: q as u32,
            })
            .collect()
    }

    /// `P(t) = ∫_left^t` of this term as terms on `[left, right)`, plus `P(right)`.
    fn primitive(&self) -> (Vec<ExpTerm>, C64) {
        let p = self.power as usize;
        let w = self.right - self.left;
        let end = self.coef * exp_poly_integral(p, self.rate, w);
        let mk =
            |rate: C64, coef: C64, power: usize| ExpTerm { left: self.left, right: self.right, rate, coef, power: power as u32 };
        if self.rate == C64::new(0.0, 0.0) {
            return (vec![mk(self.rate, self.coef / (p as f64 + 1.0), p + 1)], end);
        }
        // I_p = x^p e^{ρx}/ρ − (p/ρ) I_{p−1},  I_0 = (e^{ρx} − 1)/ρ
        let rho = self.rate;
        let mut poly = vec![C64::new(0.0, 0.0); p + 1];
        poly[0] = 1.0 / rho;
        let mut constant = -1.0 / rho;
        for k in 1..=p {
            let f = -(k as f64) / rho;
            for c in poly.iter_mut() {
                *c *= f;
            }
            poly[k] = 1.0 / rho;
            constant *= f;
        }
        let mut terms: Vec<ExpTerm> = poly.iter().enumerate().map(|(q, &c)| mk(rho, self.coef * c, q)).collect();
        terms.push(mk(C64::new(0.0, 0.0), self.coef * constant, 0));
        (terms, end)
    }

    fn value(&self, t: f64) -> C64 {
        let x = t - self.left;
        self.coef * x.powi(self.power as i32) * (self.rate * x).exp()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PiecewiseExp {
    terms: Vec<ExpTerm>,
}

impl PiecewiseExp {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<ExpTerm>) -> Self {
        Self { terms: terms.into_iter().filter(|t| t.right > t.left).collect() }
    }

    /// `coef · e^{rate (t − left)}` on `[left, right)`.
    pub fn exp_segment(left: f64, right: f64, rate: C64, coef: C64) -> Self {
        Self::from_terms(vec![ExpTerm { left, right, rate, coef, power: 0 }])
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == C64::new(0.0, 0.0))
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        let l = self.terms.iter().map(|t| t.left).reduce(f64::min)?;
        let r = self.terms.iter().map(|t| t.right).reduce(f64::max)?;
        Some((l, r))
    }

    pub fn shifted(&self, tau: f64) -> Self {
        Self { terms: self.terms.iter().map(|t| ExpTerm { left: t.left + tau, right: t.right + tau, ..*t }).collect() }
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { terms: self.terms.iter().map(|t| ExpTerm { coef: t.coef * s, ..*t }).collect() }
    }

    pub fn add_assign_scaled(&mut self, other: &PiecewiseExp, s: C64) {
        self.terms.extend(other.terms.iter().map(|t| ExpTerm { coef: t.coef * s, ..*t }));
    }

    pub fn plus(&self, other: &PiecewiseExp) -> Self {
        let mut out = self.clone();
        out.terms.extend_from_slice(&other.terms);
        out
    }

    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|t| ExpTerm { rate: t.rate.conj(), coef: t.coef.conj(), ..*t }).collect() }
    }

    /// Merge terms with identical interval, rate and power.
    pub fn simplified(&self) -> Self {
        let mut terms = self.terms.clone();
        let key = |t: &ExpTerm| (t.left.to_bits(), t.right.to_bits(), t.rate.re.to_bits(), t.rate.im.to_bits(), t.power);
        terms.sort_by_key(key);
        let mut out: Vec<ExpTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if key(last) == key(&t) => last.coef += t.coef,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coef != C64::new(0.0, 0.0));
        Self { terms: out }
    }

    /// Restriction to `[a, b]`.
    pub fn restricted(&self, a: f64, b: f64) -> Self {
        let mut out = Vec::new();
        for t in &self.terms {
            let lo = t.left.max(a);
            let hi = t.right.min(b);
            if hi > lo {
                out.extend(t.reanchor(lo, hi));
            }
        }
        Self { terms: out }
    }

    /// Moving integral `G(t) = ∫_{t−δ}^t F(s) ds`.
    pub fn moving_integral(&self, delta: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        let mut out = Vec::new();
        for term in &self.terms {
            let (l, r) = (term.left, term.right);
            let (prim, end) = term.primitive();
            let shifted: Vec<ExpTerm> =
                prim.iter().map(|q| ExpTerm { left: q.left + delta, right: q.right + delta, coef: -q.coef, ..*q }).collect();
            let mut bps = vec![l, r, l + delta, r + delta];
            bps.sort_by(f64::total_cmp);
            bps.dedup();
            for w in bps.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b - a < 1e-15 {
                    continue;
                }
                let m = 0.5 * (a + b);
                if m < r {
                    for q in &prim {
                        out.extend(q.reanchor(a, b));
                    }
                } else {
                    out.push(ExpTerm { left: a, right: b, rate: zero, coef: end, power: 0 });
                }
                if m - delta > l {
                    if m - delta < r {
                        for q in &shifted {
                            out.extend(q.reanchor(a, b));
                        }
                    } else {
                        out.push(ExpTerm { left: a, right: b, rate: zero, coef: -end, power: 0 });
                    }
                }
            }
        }
        Self { terms: out }.simplified()
    }

    /// Value at `t`; terms are half-open except at the right end of the overall support.
    pub fn eval(&self, t: f64) -> C64 {
        let right_end = self.support().map(|s| s.1);
        self.terms
            .iter()
            .filter(|term| (t >= term.left && t < term.right) || (Some(t) == right_end && t == term.right))
            .map(|term| term.value(t))
            .sum()
    }

    /// `∫ e^{λt} F(t) dt`.
    pub fn moment(&self, lambda: C64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coef * (lambda * t.left).exp() * exp_poly_integral(t.power as usize, lambda + t.rate, t.right - t.left))
            .sum()
    }

    /// `∫_a^b F(t) dt`.
    pub fn integral(&self, a: f64, b: f64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for t in &self.terms {
            let lo = t.left.max(a);
            let hi = t.right.min(b);
            if hi > lo {
                for q in t.reanchor(lo, hi) {
                    s += q.coef * exp_poly_integral(q.power as usize, q.rate, hi - lo);
                }
            }
        }
        s
    }

    /// `∫ |F|²` by composite Gauss-Legendre between breakpoints.
    pub fn l2_norm_sq(&self) -> f64 {
        let f = self.simplified();
        let mut breaks: Vec<f64> = f.terms.iter().flat_map(|t| [t.left, t.right]).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let (gx, gw) = gauss_legendre(16);
        let mut s = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let rate = f.terms.iter().filter(|t| t.left <= mid && mid < t.right).map(|t| t.rate.norm()).fold(1.0, f64::max);
            let panels = ((b - a) * rate / 3.0).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * h;
                for (x, wt) in gx.iter().zip(&gw) {
                    let t = lo + 0.5 * h * (x + 1.0);
                    s += f.eval(t).norm_sqr() * 0.5 * h * wt;
                }
            }
        }
        s
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }
}
