use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{rank_with_b, DelaySystem};
use crate::numeric::{rank_rel, C64};
use crate::spectral::EigenPoint;

/// Relative singular-value tolerance of the Hautus rank test.
pub const PBH_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTest {
    pub holds: bool,
    /// Eigenvalue at which the rank drops.
    pub witness: Option<C64>,
}

fn pbh(m: &DMatrix<f64>, b: &DVector<f64>, skip_zero: bool) -> RankTest {
    let n = b.len();
    let eig = m.clone().complex_eigenvalues();
    let scale = m.norm().max(1.0);
    for &mu in eig.iter() {
        if skip_zero && mu.norm() <= 1e-10 * scale {
            continue;
        }
        let mut h = DMatrix::<C64>::zeros(n, n + 1);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = C64::new(m[(i, j)], 0.0);
            }
            h[(i, i)] -= mu;
            h[(i, n)] = C64::new(b[i], 0.0);
        }
        if rank_rel(&h, PBH_REL_TOL) < n {
            return RankTest { holds: false, witness: Some(mu) };
        }
    }
    RankTest { holds: true, witness: None }
}

/// Hautus test `rank(−μI + M; b) = n` at every eigenvalue `μ` of `M`.
pub fn pbh_pair_controllable(m: &DMatrix<f64>, b: &DVector<f64>) -> RankTest {
    pbh(m, b, false)
}

/// Hautus test restricted to the nonzero eigenvalues of `M`.
pub fn pbh_pair_controllable_nonzero(m: &DMatrix<f64>, b: &DVector<f64>) -> RankTest {
    pbh(m, b, true)
}

/// Whether `det(A₁ + λA₋₁)` is not identically zero, sampled at `n + 1` random points.
pub fn pencil_nonsingular(a1: &DMatrix<f64>, a_minus1: &DMatrix<f64>, seed: u64) -> bool {
    let n = a1.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<f64> = Vec::with_capacity(n + 1);
    while pts.len() < n + 1 {
        let x: f64 = rng.random_range(-2.0..2.0);
        if pts.iter().all(|p| (p - x).abs() > 1e-3) {
            pts.push(x);
        }
    }
    pts.iter().any(|&lambda| {
        let p = a1 + a_minus1 * lambda;
        let scale = p.norm().max(f64::MIN_POSITIVE).powi(n as i32);
        p.determinant().abs() > 1e-10 * scale
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Completability {
    /// Gains `(p₁, p₋₁)` making `A₁ + b p₁ + λ(A₋₁ + b p₋₁)` nonsingular.
    Completable { p1: DVector<f64>, p_minus1: DVector<f64> },
    /// `A₋₁ = 0` and `rank[A₁, b] < n`.
    NotCompletable,
    /// Search exhausted without a witness.
    NotFound,
}

impl Completability {
    pub fn is_completable(&self) -> bool {
        matches!(self, Completability::Completable { .. })
    }
}

pub const COMPLETABLE_RANDOM_DRAWS: usize = 200;

pub fn completable(sys: &DelaySystem, seed: u64) -> Completability {
    let n = sys.n();
    let b = sys.b();
    if sys.is_retarded() {
        let mut ab = DMatrix::<f64>::zeros(n, n + 1);
        ab.view_mut((0, 0), (n, n)).copy_from(sys.a1());
        ab.set_column(n, b);
        if rank_rel(&crate::numeric::to_complex(&ab), PBH_REL_TOL) < n {
            return Completability::NotCompletable;
        }
    }
    let works = |p1: &DVector<f64>, pm: &DVector<f64>| {
        pencil_nonsingular(&(sys.a1() + b * p1.transpose()), &(sys.a_minus1() + b * pm.transpose()), seed)
    };
    let mut candidates = vec![DVector::zeros(n)];
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        candidates.push(e);
    }
    for p1 in &candidates {
        for pm in &candidates {
            if works(p1, pm) {
                return Completability::Completable { p1: p1.clone(), p_minus1: pm.clone() };
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..COMPLETABLE_RANDOM_DRAWS {
        let p1 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let pm = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        if works(&p1, &pm) {
            return Completability::Completable { p1, p_minus1: pm };
        }
    }
    Completability::NotFound
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralWitness {
    pub lambda: C64,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCheck {
    /// Holds at every eigenvalue examined (the window only).
    pub holds_in_window: bool,
    pub witness: Option<SpectralWitness>,
}

/// Rank tolerance for `rank(Δ(λ); b)`; multiple roots are located less precisely.
pub fn spectral_rank_tol(multiplicity: usize) -> f64 {
    if multiplicity > 1 {
        1e-6
    } else {
        1e-8
    }
}

/// `rank(Δ(λ); b) = n` at each listed eigenvalue.
pub fn spectral_controllability(sys: &DelaySystem, eigs: &[EigenPoint]) -> SpectralCheck {
    for p in eigs {
        let rank = rank_with_b(sys, p.lambda, spectral_rank_tol(p.multiplicity));
        if rank < sys.n() {
            return SpectralCheck { holds_in_window: false, witness: Some(SpectralWitness { lambda: p.lambda, rank }) };
        }
    }
    SpectralCheck { holds_in_window: true, witness: None }
}
