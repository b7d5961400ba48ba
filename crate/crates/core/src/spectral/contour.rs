use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::model::DelaySystem;
use crate::numeric::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !ok || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidInput(format!(
                "window [{re_min}, {re_max}] x [{im_min}, {im_max}] is empty or not finite"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    /// `[−h, h]²`.
    pub fn square(h: f64) -> Result<Self> {
        Self::new(-h, h, -h, h)
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    pub fn is_symmetric(&self) -> bool {
        self.im_min == -self.im_max
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }
}

/// Winding number of `f` along a closed contour with the largest sampled `|f|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub count: i64,
    pub boundary_max: f64,
}

/// Samples per unit length needed to keep the phase of `e^{−nλ}` below the step bound.
pub(crate) fn density_for(n: usize) -> f64 {
    4.0 * n.max(1) as f64
}

struct Tracker<'a> {
    f: &'a dyn Fn(C64) -> C64,
    boundary_max: f64,
    min_len: f64,
}

impl Tracker<'_> {
    fn value(&mut self, z: C64) -> Result<C64> {
        let v = (self.f)(z);
        if !(v.re.is_finite() && v.im.is_finite()) || v == C64::new(0.0, 0.0) {
            return Err(Error::BoundaryZero { at: z });
        }
        self.boundary_max = self.boundary_max.max(v.norm());
        Ok(v)
    }

    /// Phase change along the straight segment `p → q`.
    fn segment(&mut self, p: C64, fp: C64, q: C64, fq: C64, depth: u32) -> Result<f64> {
        let whole = (fq / fp).arg();
        let m = 0.5 * (p + q);
        let fm = self.value(m)?;
        let a = (fm / fp).arg();
        let b = (fq / fm).arg();
        // near-linear behaviour rules out a hidden full turn between samples
        let floor = fp.norm().min(fq.norm()).min(fm.norm());
        let linear = (fm - 0.5 * (fp + fq)).norm() <= 0.3 * floor;
        if linear && a.abs() < FRAC_PI_2 && b.abs() < FRAC_PI_2 && (a + b - whole).abs() < 1e-6 {
            return Ok(whole);
        }
        if (q - p).norm() < self.min_len || depth > 60 {
            return Err(Error::BoundaryZero { at: m });
        }
        Ok(self.segment(p, fp, m, fm, depth + 1)? + self.segment(m, fm, q, fq, depth + 1)?)
    }
}

fn closed_path_winding(f: &dyn Fn(C64) -> C64, points: &[C64], scale: f64) -> Result<Winding> {
    let mut t = Tracker { f, boundary_max: 0.0, min_len: 1e-13 * scale.max(1.0) };
    let values: Vec<C64> = points.iter().map(|&z| t.value(z)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for i in 0..points.len() {
        let j = (i + 1) % points.len();
        total += t.segment(points[i], values[i], points[j], values[j], 0)?;
    }
    Ok(Winding { count: (total / (2.0 * PI)).round() as i64, boundary_max: t.boundary_max })
}

/// Winding number of `f` around the boundary of `w`, sampled with `density` points per unit length.
pub fn winding_rect(f: &dyn Fn(C64) -> C64, w: &Window, density: f64) -> Result<Winding> {
    let corners = w.corners();
    let mut points = Vec::new();
    for i in 0..4 {
        let (p, q) = (corners[i], corners[(i + 1) % 4]);
        let m = (((q - p).norm() * density).ceil() as usize).max(2);
        for s in 0..m {
            points.push(p + (q - p) * (s as f64 / m as f64));
        }
    }
    closed_path_winding(f, &points, w.center().norm() + w.diameter())
}

/// Winding number of `f` around the circle `|z − c| = r`.
pub fn winding_circle(f: &dyn Fn(C64) -> C64, c: C64, r: f64) -> Result<Winding> {
    let m = 32;
    let points: Vec<C64> = (0..m).map(|s| c + C64::from_polar(r, 2.0 * PI * s as f64 / m as f64)).collect();
    closed_path_winding(f, &points, c.norm() + r)
}

/// Number of zeros of `det Δ` inside `w`, with multiplicity.
pub fn count_zeros(sys: &DelaySystem, w: &Window) -> Result<usize> {
    let f = |z: C64| sys.char_det(z);
    let wn = winding_rect(&f, w, density_for(sys.n()))?;
    Ok(wn.count.max(0) as usize)
}
