use std::f64::consts::PI;

use super::contour::{density_for, winding_circle, winding_rect, Window};
use super::seeds::{build_seeds, SeedGrid};
use crate::error::{Error, Result};
use crate::model::DelaySystem;
use crate::numeric::C64;

/// Scaled residual bound for accepted zeros.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_MULTIPLICITY: usize = 3;
const JITTER: [f64; 6] = [0.0, 0.0123, -0.0171, 0.0311, -0.0419, 0.0537];

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPoint {
    pub lambda: C64,
    pub multiplicity: usize,
    pub branch_j: Option<usize>,
    pub index_k: Option<i64>,
    /// `|det Δ(λ)| / max(1, max |det Δ| on the enclosing cell boundary)`.
    pub residual: f64,
}

/// A cell the subdivision could not resolve.
#[derive(Debug, Clone, PartialEq)]
pub struct UnresolvedCell {
    pub cell: Window,
    pub count: usize,
    pub reason: String,
}

/// Per branch, the smallest `|k|` from which every in-window seed circle holds exactly one eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchThreshold {
    pub branch_j: usize,
    pub a: f64,
    pub min_abs_k: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub window: Window,
    pub zero_count: usize,
    pub points: Vec<EigenPoint>,
    pub unresolved: Vec<UnresolvedCell>,
    pub r0: Option<f64>,
    pub thresholds: Vec<BranchThreshold>,
}

impl SpectrumReport {
    pub fn multiplicity_sum(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }
}

struct Finder<'a> {
    f: &'a dyn Fn(C64) -> C64,
    density: f64,
    points: Vec<(C64, usize, f64)>,
    unresolved: Vec<UnresolvedCell>,
}

fn split(w: &Window, frac: f64) -> (Window, Window) {
    if w.re_max - w.re_min >= w.im_max - w.im_min {
        let x = w.re_min + frac * (w.re_max - w.re_min);
        (Window { re_max: x, ..*w }, Window { re_min: x, ..*w })
    } else {
        let y = w.im_min + frac * (w.im_max - w.im_min);
        (Window { im_max: y, ..*w }, Window { im_min: y, ..*w })
    }
}

impl Finder<'_> {
    fn derivative(&self, z: C64) -> C64 {
        let h = 1e-7 * (1.0 + z.norm());
        ((self.f)(z + h) - (self.f)(z - h)) / (2.0 * h)
    }

    fn newton(&self, start: C64, m: usize) -> Option<C64> {
        let mut z = start;
        for _ in 0..60 {
            let fz = (self.f)(z);
            if fz == C64::new(0.0, 0.0) {
                return Some(z);
            }
            let d = self.derivative(z);
            if d == C64::new(0.0, 0.0) || !d.re.is_finite() {
                return None;
            }
            let step = fz / d * m as f64;
            z -= step;
            if !z.re.is_finite() || !z.im.is_finite() {
                return None;
            }
            if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                return Some(z);
            }
        }
        Some(z)
    }

    fn accept(&mut self, z: C64, m: usize, boundary_max: f64) -> bool {
        let res = (self.f)(z).norm() / boundary_max.max(1.0);
        if res <= RESIDUAL_TOL {
            self.points.push((z, m, res));
            true
        } else {
            false
        }
    }

    fn inside(cell: &Window, z: C64) -> bool {
        let pad = 1e-9 * (1.0 + z.norm());
        z.re >= cell.re_min - pad && z.re <= cell.re_max + pad && z.im >= cell.im_min - pad && z.im <= cell.im_max + pad
    }

    fn process(&mut self, cell: Window, count: usize, boundary_max: f64, depth: u32) {
        if count == 0 {
            return;
        }
        let c = cell.center();
        let diam = cell.diameter();
        let tiny = diam < 1e-6 * (1.0 + c.norm());
        if count == 1 {
            if let Some(z) = self.newton(c, 1) {
                if Self::inside(&cell, z) && self.accept(z, 1, boundary_max) {
                    return;
                }
            }
        } else if tiny {
            self.cluster(cell, count, boundary_max);
            return;
        }
        if diam < 1e-12 * (1.0 + c.norm()) || depth > 200 {
            self.unresolved.push(UnresolvedCell { cell, count, reason: "subdivision limit".into() });
            return;
        }
        for j in JITTER {
            let (lo, hi) = split(&cell, 0.5 + j);
            let (Ok(wl), Ok(wh)) = (winding_rect(self.f, &lo, self.density), winding_rect(self.f, &hi, self.density)) else {
                continue;
            };
            if wl.count < 0 || wh.count < 0 || (wl.count + wh.count) as usize != count {
                continue;
            }
            self.process(lo, wl.count as usize, wl.boundary_max, depth + 1);
            self.process(hi, wh.count as usize, wh.boundary_max, depth + 1);
            return;
        }
        self.unresolved.push(UnresolvedCell { cell, count, reason: "inconsistent counts after subdivision".into() });
    }

    fn cluster(&mut self, cell: Window, count: usize, boundary_max: f64) {
        let c = cell.center();
        let r = cell.diameter().max(1e-6 * (1.0 + c.norm()));
        let m = match winding_circle(self.f, c, r) {
            Ok(w) if w.count > 0 => w.count as usize,
            _ => count,
        };
        if m > MAX_MULTIPLICITY {
            self.unresolved.push(UnresolvedCell { cell, count, reason: format!("cluster of multiplicity {m}") });
            return;
        }
        let z = match self.newton(c, m) {
            Some(z) if (z - c).norm() <= r => z,
            _ => c,
        };
        if !self.accept(z, m, boundary_max) {
            self.unresolved.push(UnresolvedCell { cell, count, reason: "cluster residual above tolerance".into() });
        }
    }
}

/// Zeros of an analytic `f` inside `w` by argument principle and subdivision.
pub fn find_zeros(
    f: &dyn Fn(C64) -> C64,
    w: &Window,
    density: f64,
    real_symmetric: bool,
) -> Result<(usize, Vec<EigenPoint>, Vec<UnresolvedCell>)> {
    let total = winding_rect(f, w, density)?;
    let count = total.count.max(0) as usize;
    let mut finder = Finder { f, density, points: Vec::new(), unresolved: Vec::new() };
    finder.process(*w, count, total.boundary_max, 0);
    let mut pts: Vec<EigenPoint> = finder
        .points
        .into_iter()
        .map(|(lambda, multiplicity, residual)| EigenPoint { lambda, multiplicity, branch_j: None, index_k: None, residual })
        .collect();
    if real_symmetric {
        snap_conjugates(&mut pts);
    }
    pts.sort_by(|a, b| a.lambda.im.total_cmp(&b.lambda.im).then(a.lambda.re.total_cmp(&b.lambda.re)));
    Ok((count, pts, finder.unresolved))
}

fn snap_conjugates(pts: &mut [EigenPoint]) {
    let n = pts.len();
    let mut paired = vec![false; n];
    for i in 0..n {
        if paired[i] {
            continue;
        }
        let z = pts[i].lambda;
        let tol = 1e-7 * (1.0 + z.norm());
        if z.im.abs() <= tol {
            let mut best: Option<usize> = None;
            for j in 0..n {
                if j != i && !paired[j] && (pts[j].lambda - z).norm() <= tol {
                    best = Some(j);
                }
            }
            if best.is_none() {
                pts[i].lambda.im = 0.0;
                paired[i] = true;
                continue;
            }
        }
        let partner = (0..n)
            .filter(|&j| j != i && !paired[j])
            .map(|j| (j, (pts[j].lambda - z.conj()).norm()))
            .filter(|&(_, d)| d <= 1e-8 * (1.0 + z.norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = partner {
            let avg = 0.5 * (z + pts[j].lambda.conj());
            pts[i].lambda = avg;
            pts[j].lambda = avg.conj();
            let r = pts[i].residual.max(pts[j].residual);
            pts[i].residual = r;
            pts[j].residual = r;
            paired[i] = true;
            paired[j] = true;
        }
    }
}

/// Comparison branches `a_j` (eigenvalues of `A₁`) when they are real, positive and distinct.
pub fn comparison_branches(sys: &DelaySystem) -> Option<Vec<f64>> {
    let n = sys.n();
    let eig = sys.a1().clone().complex_eigenvalues();
    let mut a: Vec<f64> = Vec::with_capacity(n);
    let scale = sys.a1().norm().max(1.0);
    for z in eig.iter() {
        if z.im.abs() > 1e-10 * scale || z.re <= 0.0 {
            return None;
        }
        a.push(z.re);
    }
    a.sort_by(f64::total_cmp);
    if a.windows(2).any(|w| w[1] - w[0] <= 1e-8 * scale) {
        return None;
    }
    Some(a)
}

/// Seed grid covering the imaginary extent of `w`, if comparison branches exist.
pub fn seeds_for_window(sys: &DelaySystem, w: &Window) -> Option<SeedGrid> {
    let a = comparison_branches(sys)?;
    let kmin = (w.im_min / (2.0 * PI)).floor() as i64 - 1;
    let kmax = (w.im_max / (2.0 * PI)).ceil() as i64 + 1;
    build_seeds(&a, kmin..=kmax).ok()
}

/// Eigenvalues of the system inside `w`.
pub fn find_eigenvalues(sys: &DelaySystem, w: &Window) -> Result<SpectrumReport> {
    let f = |z: C64| sys.char_det(z);
    let (zero_count, mut points, unresolved) = find_zeros(&f, w, density_for(sys.n()), w.is_symmetric())?;
    let grid = seeds_for_window(sys, w);
    let mut thresholds = Vec::new();
    if let Some(g) = &grid {
        for p in &mut points {
            if let Some(s) = g.locate(p.lambda) {
                p.branch_j = Some(s.branch);
                p.index_k = Some(s.index);
            }
        }
        let a = comparison_branches(sys).unwrap_or_default();
        for (j, &aj) in a.iter().enumerate() {
            let mut worst: i64 = -1;
            for s in g.seeds.iter().filter(|s| s.branch == j + 1 && w.contains(s.lambda)) {
                let inside: usize = points.iter().filter(|p| (p.lambda - s.lambda).norm() < g.r0).map(|p| p.multiplicity).sum();
                if inside != 1 {
                    worst = worst.max(s.index.abs());
                }
            }
            thresholds.push(BranchThreshold { branch_j: j + 1, a: aj, min_abs_k: worst + 1 });
        }
    }
    Ok(SpectrumReport { window: *w, zero_count, points, unresolved, r0: grid.map(|g| g.r0), thresholds })
}

/// Error unless every point is simple.
pub fn require_simple(points: &[EigenPoint]) -> Result<()> {
    let clusters: Vec<C64> = points.iter().filter(|p| p.multiplicity > 1).map(|p| p.lambda).collect();
    if clusters.is_empty() {
        Ok(())
    } else {
        Err(Error::SimpleSpectrumViolated { clusters })
    }
}
