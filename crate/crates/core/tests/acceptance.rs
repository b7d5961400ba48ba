//! Acceptance criteria, one PASS/FAIL line each.

use std::time::{Duration, Instant};

use delaysteer::analysis::{classify, pbh_pair_controllable, Completability, TriState};
use delaysteer::model::{DelaySystem, M2State};
use delaysteer::numeric::gauss_legendre;
use delaysteer::simulator::{simulate, verify_null, Grid, SimOptions, ZeroControl};
use delaysteer::spectral::{count_zeros, find_eigenvalues, lambert_branch, EigenPoint, Window, RESIDUAL_TOL};
use delaysteer::synthesis::{
    biortho_explicit, explicit_dual, min_norm_control, moment_targets, projection_family, series_control, synthesize,
    BiorthFamily, SynthesisOptions,
};
use delaysteer::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

fn incomplete_pencil() -> DelaySystem {
    let a1 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let a0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    DelaySystem::point_delay(a1, a0, DVector::from_vec(vec![0.0, 1.0])).unwrap()
}

fn identity_delay() -> DelaySystem {
    DelaySystem::point_delay(DMatrix::identity(2, 2), DMatrix::zeros(2, 2), DVector::from_vec(vec![0.0, 1.0])).unwrap()
}

fn diag12() -> DelaySystem {
    DelaySystem::point_delay(diag(&[1.0, 2.0]), DMatrix::zeros(2, 2), DVector::from_element(2, 1.0)).unwrap()
}

fn unit_state(n: usize) -> M2State {
    M2State::constant(DVector::from_element(n, 1.0), DVector::from_element(n, 1.0), 64).unwrap()
}

/// Terminal residual on `[T−1, T]` of the synthesized control, simulated at `dt = 1/512`.
fn steer(sys: &DelaySystem, horizon: f64, truncation: usize) -> Result<f64, String> {
    let x0 = unit_state(sys.n());
    let s = synthesize(sys, &x0, horizon, truncation, &SynthesisOptions::default()).map_err(|e| e.to_string())?;
    let grid = Grid::new(512, horizon).map_err(|e| e.to_string())?;
    let traj = simulate(sys, &x0, &s.control, grid, SimOptions::default()).map_err(|e| e.to_string())?;
    Ok(verify_null(&traj, horizon, 0.0).map_err(|e| e.to_string())?.residual)
}

fn reference_fixtures() -> Outcome {
    let w = Window::new(-3.0, 3.0, -3.0, 3.0).unwrap();
    let start = Instant::now();
    let r1 = classify(&incomplete_pencil(), &w, 0).map_err(|e| e.to_string())?;
    let t1 = within(Duration::from_secs(5), start)?;
    let ok1 = !r1.complete
        && r1.completability == Completability::NotCompletable
        && !r1.completability.is_completable()
        && r1.spectral.holds_in_window
        && !r1.pair_a1_b.holds
        && r1.exactly_null_controllable == TriState::Undetermined;

    let start = Instant::now();
    let r2 = classify(&identity_delay(), &w, 0).map_err(|e| e.to_string())?;
    let t2 = within(Duration::from_secs(5), start)?;
    let w0 = lambert_branch(1.0, 0).unwrap();
    let witness = r2.spectral.witness.ok_or("identity delay has no witness")?;
    let ok2 = r2.complete && !r2.spectral.holds_in_window && (witness.lambda - w0).norm() < 1e-8 && witness.rank == 1;
    check(
        ok1 && ok2,
        format!(
            "incomplete pencil {} in {t1:.2?}, identity delay {} (witness {:.4}, rank {}) in {t2:.2?}",
            ok1, ok2, witness.lambda.re, witness.rank
        ),
    )
}

fn scalar_steering() -> Outcome {
    let start = Instant::now();
    let residual = steer(&DelaySystem::scalar(1.0), 3.0, 21)?;
    let took = within(Duration::from_secs(60), start)?;
    check(residual <= 1e-3, format!("max |z| on [2,3] = {residual:.3e} in {took:.2?}"))
}

fn two_dimensional_steering() -> Outcome {
    let start = Instant::now();
    let residual = steer(&diag12(), 4.0, 21)?;
    let took = within(Duration::from_secs(120), start)?;
    check(residual <= 1e-2, format!("max |z| on [3,4] = {residual:.3e} in {took:.2?}"))
}

/// `∫_a^b f` by composite Gauss-Legendre on panels of width 1/64.
fn quad(f: impl Fn(f64) -> C64, a: f64, b: f64) -> C64 {
    let (x, w) = gauss_legendre(10);
    let panels = ((b - a) * 64.0).round().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut s = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += f(lo + 0.5 * h * (xi + 1.0)) * (0.5 * h * wi);
        }
    }
    s
}

fn biorthogonality() -> Outcome {
    let indices: Vec<i64> = (-10..=10).collect();
    let fam = biortho_explicit(1.0, &indices, 2.0).map_err(|e| e.to_string())?;
    let members: Vec<_> = (0..fam.len()).map(|s| fam.member(s)).collect();
    let mut worst: f64 = 0.0;
    for (k, &lk) in fam.eigs().iter().enumerate() {
        for (s, h) in members.iter().enumerate() {
            let ip = quad(|t| (lk * t).exp() * h.eval(t).conj(), 0.0, 2.0);
            worst = worst.max((ip - if k == s { 1.0 } else { 0.0 }).norm());
        }
    }
    check(worst <= 1e-8, format!("max |<e^(lambda_k t), h_s> - delta_ks| = {worst:.2e} over 21x21 by quadrature"))
}

fn family_growth() -> Outcome {
    let mut ratios = Vec::new();
    for s in (10..=100).step_by(10) {
        let sf = s as f64;
        let norm = explicit_dual(1.0, s, 2.0).map_err(|e| e.to_string())?.l2_norm();
        ratios.push(norm / (sf.powi(3) / sf.ln().sqrt()));
    }
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    check(hi / lo < 10.0, format!("||h_s|| / (s^3 / sqrt(ln s)) within a band of ratio {:.3} for s = 10..100", hi / lo))
}

fn root_finder() -> Outcome {
    let sys = diag12();
    let w = Window::new(-5.0, 2.0, -33.0, 33.0).unwrap();
    let r = find_eigenvalues(&sys, &w).map_err(|e| e.to_string())?;
    let count = count_zeros(&sys, &w).map_err(|e| e.to_string())?;
    let r0 = r.r0.ok_or("no seed radius")?;
    let mut worst_dist: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut tagged = true;
    for p in &r.points {
        let (Some(j), Some(k)) = (p.branch_j, p.index_k) else {
            tagged = false;
            continue;
        };
        let seed = lambert_branch([1.0, 2.0][j - 1], k).map_err(|e| e.to_string())?;
        worst_dist = worst_dist.max((p.lambda - seed).norm());
        worst_res = worst_res.max(p.residual);
        tagged &= k.abs() <= 5;
    }
    let ok = tagged
        && worst_dist < r0
        && worst_res <= RESIDUAL_TOL
        && r.zero_count == count
        && r.multiplicity_sum() == count
        && r.points.len() == 22;
    check(
        ok,
        format!(
            "{} roots, winding count {count}, max seed distance {worst_dist:.1e} < r0 = {r0:.3}, max residual {worst_res:.1e}",
            r.points.len()
        ),
    )
}

fn kalman_controllable(m: &DMatrix<f64>, b: &DVector<f64>) -> bool {
    let n = b.len();
    let mut k = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        k.set_column(j, &col);
        col = m * col;
    }
    let s = k.svd(false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|&&x| x > 1e-9 * smax).count() == n
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    g.qr().q()
}

fn pbh_versus_kalman() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut disagreements = 0;
    let mut uncontrollable = 0;
    for case in 0..200 {
        let n = rng.random_range(2..=5);
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
        let mut b = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        if case >= 100 {
            // block upper-triangular pair with an unreachable lower block, in a rotated basis
            let r = rng.random_range(1..n);
            for i in r..n {
                b[i] = 0.0;
                for j in 0..r {
                    m[(i, j)] = 0.0;
                }
            }
            let q = random_orthogonal(n, &mut rng);
            m = &q * m * q.transpose();
            b = &q * b;
        }
        let kalman = kalman_controllable(&m, &b);
        uncontrollable += usize::from(!kalman);
        if pbh_pair_controllable(&m, &b).holds != kalman {
            disagreements += 1;
        }
    }
    check(
        disagreements == 0 && uncontrollable >= 100,
        format!("{disagreements} disagreements on 200 pairs ({uncontrollable} uncontrollable)"),
    )
}

fn method_cross_check() -> Outcome {
    let sys = DelaySystem::scalar(1.0);
    let eigs: Vec<EigenPoint> = (-10..=10)
        .map(|k| EigenPoint {
            lambda: lambert_branch(1.0, k).unwrap(),
            multiplicity: 1,
            branch_j: Some(1),
            index_k: Some(k),
            residual: 0.0,
        })
        .collect();
    let mp = moment_targets(&sys, &unit_state(1), 3.0, &eigs).map_err(|e| e.to_string())?;
    let indices: Vec<i64> = (-10..=10).collect();
    let base = biortho_explicit(1.0, &indices, 3.0).map_err(|e| e.to_string())?;
    let order: Vec<usize> = mp
        .eigs()
        .iter()
        .map(|l| base.eigs().iter().position(|m| (m - l).norm() < 1e-12).ok_or("eigenvalue missing from family"))
        .collect::<Result<_, _>>()?;
    let base = BiorthFamily::from_duals(
        order.iter().map(|&i| base.eigs()[i]).collect(),
        order.iter().map(|&i| base.dual(i).clone()).collect(),
        3.0,
    )
    .map_err(|e| e.to_string())?;
    let series = series_control(&mp, &projection_family(&base)).map_err(|e| e.to_string())?;
    let min_norm = min_norm_control(&mp).map_err(|e| e.to_string())?;
    let d = series.l2_distance(&min_norm);
    check(d <= 1e-6, format!("||u_series - u_min_norm|| in L2[0,3] = {d:.2e} with 21 eigenvalues"))
}

fn simulator_convergence() -> Outcome {
    // exact solution of z' = z(t-1), history 1, one polynomial per unit interval
    let horizon = 5;
    let mut pieces = vec![vec![1.0]];
    for _ in 0..horizon {
        let prev: &Vec<f64> = pieces.last().unwrap();
        let mut next = vec![prev.iter().sum::<f64>()];
        next.extend(prev.iter().enumerate().map(|(p, c)| c / (p + 1) as f64));
        pieces.push(next);
    }
    let exact = |t: f64| {
        let m = (t.floor() as i64).clamp(-1, horizon as i64 - 1);
        pieces[(m + 1) as usize].iter().rev().fold(0.0, |acc, c| acc * (t - m as f64) + c)
    };
    let sys = DelaySystem::scalar(1.0);
    let x0 = unit_state(1);
    let mut errors = Vec::new();
    for steps in [8, 16, 32, 64] {
        let grid = Grid::new(steps, horizon as f64).map_err(|e| e.to_string())?;
        let traj = simulate(&sys, &x0, &ZeroControl, grid, SimOptions::default()).map_err(|e| e.to_string())?;
        errors.push((0..traj.z.len()).map(|k| (traj.z[k][0] - exact(traj.time(k))).abs()).fold(0.0, f64::max));
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    check(ok, format!("error ratios {:?} for dt = 1/8 .. 1/64", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()))
}

fn monotone_truncation() -> Outcome {
    let sys = DelaySystem::scalar(1.0);
    let residuals: Vec<f64> = [11, 21, 41].iter().map(|&k| steer(&sys, 3.0, k)).collect::<Result<_, _>>()?;
    let ok = residuals.windows(2).all(|w| w[1] <= w[0]);
    check(ok, format!("terminal residuals {:.3e}, {:.3e}, {:.3e} for K = 11, 21, 41", residuals[0], residuals[1], residuals[2]))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("reference fixtures", reference_fixtures),
        ("scalar steering", scalar_steering),
        ("two-dimensional steering", two_dimensional_steering),
        ("biorthogonality", biorthogonality),
        ("family growth", family_growth),
        ("root finder", root_finder),
        ("rank tests", pbh_versus_kalman),
        ("method cross-check", method_cross_check),
        ("simulator convergence", simulator_convergence),
        ("monotone truncation", monotone_truncation),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
