use delaysteer::model::DelaySystem;
use delaysteer::spectral::{
    build_seeds, count_zeros, find_eigenvalues, find_zeros, lambert_branch, EigenPoint, Window, RESIDUAL_TOL,
};
use delaysteer::C64;
use nalgebra::{DMatrix, DVector};

fn diag12() -> DelaySystem {
    DelaySystem::point_delay(
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])),
        DMatrix::zeros(2, 2),
        DVector::from_element(2, 1.0),
    )
    .unwrap()
}

fn identity_delay() -> DelaySystem {
    DelaySystem::point_delay(DMatrix::identity(2, 2), DMatrix::zeros(2, 2), DVector::from_vec(vec![0.0, 1.0])).unwrap()
}

fn assert_conjugate_closed(points: &[EigenPoint]) {
    for p in points {
        assert!(
            points.iter().any(|q| (q.lambda - p.lambda.conj()).norm() <= 1e-10 && q.multiplicity == p.multiplicity),
            "{} has no conjugate partner",
            p.lambda
        );
    }
}

#[test]
fn zero_system_has_root_at_origin() {
    let r = find_eigenvalues(&DelaySystem::scalar(0.0), &Window::square(1.0).unwrap()).unwrap();
    assert_eq!(r.points.len(), 1);
    assert!(r.points[0].lambda.norm() < 1e-12);
    assert_eq!(r.points[0].multiplicity, 1);
}

#[test]
fn scalar_real_root() {
    let r = find_eigenvalues(&DelaySystem::scalar(1.0), &Window::square(2.0).unwrap()).unwrap();
    assert_eq!(r.points.len(), 1);
    let oracle = lambert_branch(1.0, 0).unwrap();
    assert!((r.points[0].lambda - oracle).norm() < 1e-12);
    assert_eq!(r.points[0].lambda.im, 0.0);
}

#[test]
fn diag_fixture_matches_both_branches() {
    let sys = diag12();
    let w = Window::new(-5.0, 2.0, -33.0, 33.0).unwrap();
    let r = find_eigenvalues(&sys, &w).unwrap();
    assert!(r.unresolved.is_empty(), "{:?}", r.unresolved);
    assert_eq!(r.zero_count, count_zeros(&sys, &w).unwrap());
    assert_eq!(r.multiplicity_sum(), r.zero_count);
    assert_eq!(r.points.len(), 22);
    let r0 = r.r0.unwrap();
    for p in &r.points {
        assert!(p.residual <= RESIDUAL_TOL);
        let (j, k) = (p.branch_j.unwrap(), p.index_k.unwrap());
        let seed = lambert_branch([1.0, 2.0][j - 1], k).unwrap();
        assert!((p.lambda - seed).norm() < r0);
        assert!((p.lambda - seed).norm() < 1e-10 * (1.0 + seed.norm()));
    }
    assert_conjugate_closed(&r.points);
    for pair in r.points.windows(2) {
        assert!(pair[0].lambda.im <= pair[1].lambda.im);
    }
}

#[test]
fn identity_delay_roots_are_double() {
    let r = find_eigenvalues(&identity_delay(), &Window::new(-4.0, 2.0, -15.0, 15.0).unwrap()).unwrap();
    assert!(r.unresolved.is_empty(), "{:?}", r.unresolved);
    assert_eq!(r.multiplicity_sum(), r.zero_count);
    assert!(r.points.iter().all(|p| p.multiplicity == 2));
    let w0 = lambert_branch(1.0, 0).unwrap();
    assert!(r.points.iter().any(|p| (p.lambda - w0).norm() < 1e-6));
    assert_conjugate_closed(&r.points);
}

#[test]
fn seed_circles_hold_one_zero_of_comparison_product() {
    let g = build_seeds(&[1.0, 2.0], -5..=5).unwrap();
    let f = |z: C64| (-z + (-z).exp()) * (-z + 2.0 * (-z).exp());
    for s in &g.seeds {
        let w = delaysteer::spectral::winding_circle(&f, s.lambda, g.r0).unwrap();
        assert_eq!(w.count, 1, "seed {:?}", s);
    }
}

#[test]
fn generic_zero_finder_on_polynomial() {
    let f = |z: C64| (z * z + 1.0) * (z - 0.25);
    let (count, pts, bad) = find_zeros(&f, &Window::square(2.0).unwrap(), 4.0, true).unwrap();
    assert_eq!(count, 3);
    assert!(bad.is_empty());
    assert_eq!(pts.len(), 3);
    assert!((pts[0].lambda - C64::new(0.0, -1.0)).norm() < 1e-12);
}
