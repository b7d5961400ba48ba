use delaysteer::model::*;
use delaysteer::spectral::{find_eigenvalues, lambert_branch, Window};
use delaysteer::{Error, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn kernel_system() -> DelaySystem {
    let a2 = MatrixKernel::from_samples(
        &[-0.6, -0.2, 0.0],
        &[
            DMatrix::from_row_slice(2, 2, &[0.1, 0.0, -0.2, 0.3]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.1, 0.0]),
            DMatrix::from_row_slice(2, 2, &[-0.1, 0.1, 0.0, 0.2]),
        ],
    )
    .unwrap();
    let a3 = MatrixKernel::new(
        2,
        -0.8,
        vec![KernelPiece {
            left: -0.8,
            right: -0.1,
            coeffs: vec![
                DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.2, -0.4]),
                DMatrix::zeros(2, 2),
                DMatrix::from_row_slice(2, 2, &[0.3, -0.1, 0.0, 0.6]),
            ],
        }],
    )
    .unwrap();
    DelaySystem::new(
        DMatrix::zeros(2, 2),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]),
        DMatrix::from_row_slice(2, 2, &[-0.5, 0.2, 0.3, 0.1]),
        a2,
        a3,
        v(&[1.0, 1.0]),
    )
    .unwrap()
}

fn neutral_system() -> DelaySystem {
    DelaySystem::new(
        DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, -0.2]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 2.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.4, 0.0]),
        MatrixKernel::zero(2),
        MatrixKernel::constant(DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.0, 0.3]), -0.5).unwrap(),
        v(&[0.0, 1.0]),
    )
    .unwrap()
}

#[test]
fn delta_examples() {
    let zero = DelaySystem::point_delay(DMatrix::zeros(1, 1), DMatrix::zeros(1, 1), v(&[1.0])).unwrap();
    assert_eq!(zero.eval_delta(C64::new(2.0, 0.0))[(0, 0)], C64::new(-2.0, 0.0));
    let scalar = DelaySystem::scalar(1.0);
    let w0 = lambert_branch(1.0, 0).unwrap();
    assert!(scalar.eval_delta(w0)[(0, 0)].norm() <= 1e-6);
    assert_eq!(scalar.char_det(w0), scalar.eval_delta(w0)[(0, 0)]);
    let d = scalar.char_det(C64::new(0.0, 1.0));
    assert!((d - C64::new(1f64.cos(), -(1.0 + 1f64.sin()))).norm() < 1e-14);
    assert!((d - C64::new(0.5403, -1.8415)).norm() < 1e-4);
}

#[test]
fn delta_at_zero_with_kernels() {
    let sys = kernel_system();
    let mut expect = sys.a1() + sys.a0();
    // ∫A₃ over [−0.8, −0.1]: c₀·0.7 + c₂·0.7³/3.
    expect += DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.2, -0.4]) * 0.7;
    expect += DMatrix::from_row_slice(2, 2, &[0.3, -0.1, 0.0, 0.6]) * (0.343 / 3.0);
    let got = sys.eval_delta(C64::new(0.0, 0.0));
    for (g, e) in got.iter().zip(expect.iter()) {
        assert!((g - C64::new(*e, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn m2_inner_examples() {
    let one = M2Vector::from(&M2State::constant(v(&[1.0]), v(&[0.0]), 8).unwrap());
    let hist = M2Vector::from(&M2State::constant(v(&[0.0]), v(&[1.0]), 8).unwrap());
    assert_eq!(m2_inner(&one, &one).unwrap(), C64::new(1.0, 0.0));
    assert_eq!(m2_inner(&one, &hist).unwrap(), C64::new(0.0, 0.0));
    assert!((m2_inner(&hist, &hist).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn psi_scalar_examples() {
    let sys = DelaySystem::scalar(1.0);
    for k in [0, 1, -3] {
        let lambda = lambert_branch(1.0, k).unwrap();
        let psi = psi_eigenvector(&sys, lambda, PsiOptions { normalize: true, grid_intervals: 64 }).unwrap();
        assert!((psi.y_lambda[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        for (i, tail) in psi.tail.iter().enumerate() {
            let tau = -1.0 + i as f64 / 64.0;
            let expect = lambda.conj() * (-lambda.conj() * tau).exp();
            assert!((tail[0] - expect).norm() < 1e-12 * (1.0 + expect.norm()));
        }
    }
}

#[test]
fn psi_errors() {
    let sys = DelaySystem::scalar(1.0);
    assert!(matches!(psi_eigenvector(&sys, C64::new(3.0, 0.0), PsiOptions::default()), Err(Error::KernelEmpty { .. })));
    let identity_delay = DelaySystem::point_delay(DMatrix::identity(2, 2), DMatrix::zeros(2, 2), v(&[0.0, 1.0])).unwrap();
    let w0 = lambert_branch(1.0, 0).unwrap();
    assert!(matches!(
        psi_eigenvector(&identity_delay, w0, PsiOptions::default()),
        Err(Error::NotSpectrallyControllableAt { .. })
    ));
}

fn check_cross_orthogonality(sys: &DelaySystem, w: &Window, grid: usize, tol: f64) {
    let report = find_eigenvalues(sys, w).unwrap();
    let eigs: Vec<C64> = report.points.iter().filter(|p| p.multiplicity == 1).map(|p| p.lambda).collect();
    assert!(eigs.len() >= 3);
    let opts = PsiOptions { normalize: false, grid_intervals: grid };
    let psis: Vec<_> = eigs.iter().map(|&l| psi_eigenvector(sys, l, opts).unwrap()).collect();
    let phis: Vec<_> = eigs.iter().map(|&l| right_eigenvector(sys, l, grid).unwrap()).collect();
    for (i, phi) in phis.iter().enumerate() {
        let scale = m2_inner(phi, &psis[i].to_m2()).unwrap().norm();
        assert!(scale > 1e-3, "pairing vanishes at {}", eigs[i]);
        for (j, psi) in psis.iter().enumerate() {
            if i != j {
                let ip = m2_inner(phi, &psi.to_m2()).unwrap().norm();
                assert!(ip <= tol * scale, "|<phi_{i}, psi_{j}>| = {ip} vs {scale}");
            }
        }
    }
}

#[test]
fn cross_orthogonality_scalar() {
    let sys = DelaySystem::scalar(1.0);
    let l0 = lambert_branch(1.0, 0).unwrap();
    let l1 = lambert_branch(1.0, 1).unwrap();
    let opts = PsiOptions { normalize: true, grid_intervals: 2048 };
    let phi0 = right_eigenvector(&sys, l0, 2048).unwrap();
    let ip = m2_inner(&phi0, &psi_eigenvector(&sys, l1, opts).unwrap().to_m2()).unwrap();
    assert!(ip.norm() <= 1e-6, "{ip}");
    check_cross_orthogonality(&sys, &Window::new(-4.0, 2.0, -20.0, 20.0).unwrap(), 2048, 1e-5);
}

#[test]
fn cross_orthogonality_with_kernels_and_a0() {
    check_cross_orthogonality(&kernel_system(), &Window::new(-4.0, 2.0, -15.0, 15.0).unwrap(), 4096, 1e-5);
}

#[test]
fn cross_orthogonality_neutral() {
    check_cross_orthogonality(&neutral_system(), &Window::new(-4.0, 2.0, -15.0, 15.0).unwrap(), 4096, 1e-5);
}

#[test]
fn adjoint_residual_at_found_eigenvalues() {
    for sys in [kernel_system(), neutral_system()] {
        let report = find_eigenvalues(&sys, &Window::new(-4.0, 2.0, -15.0, 15.0).unwrap()).unwrap();
        for p in report.points.iter().filter(|p| p.multiplicity == 1) {
            let psi = psi_eigenvector(&sys, p.lambda, PsiOptions::default()).unwrap();
            let delta = sys.eval_delta(p.lambda);
            let r = delta.adjoint() * &psi.y_lambda;
            assert!(r.norm() <= 1e-8 * delta.norm() * psi.y_lambda.norm(), "at {}", p.lambda);
        }
    }
}

#[test]
fn state_validation() {
    assert!(M2State::new(v(&[1.0]), vec![v(&[1.0])]).is_err());
    assert!(M2State::new(v(&[1.0]), vec![v(&[1.0]), v(&[f64::NAN])]).is_err());
    assert!(M2State::new(v(&[1.0]), vec![v(&[1.0, 2.0]), v(&[1.0, 2.0])]).is_err());
    let k = MatrixKernel::constant(DMatrix::identity(1, 1), -0.5).unwrap();
    assert!(DelaySystem::new(
        DMatrix::zeros(2, 2),
        DMatrix::zeros(2, 2),
        DMatrix::zeros(2, 2),
        k,
        MatrixKernel::zero(2),
        v(&[1.0, 0.0])
    )
    .is_err());
}

fn mat(n: usize, xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_iterator(n, n, xs.iter().copied())
}

proptest! {
    #[test]
    fn conjugate_symmetry(coefs in prop::collection::vec(-2.0f64..2.0, 16), re in -5.0f64..5.0, im in -30.0f64..30.0) {
        let a3 = MatrixKernel::from_samples(&[-0.9, -0.3, 0.0], &[mat(2, &coefs[0..4]), mat(2, &coefs[4..8]), mat(2, &coefs[8..12])]).unwrap();
        let sys = DelaySystem::new(mat(2, &coefs[12..16]) * 0.3, mat(2, &coefs[0..4]), mat(2, &coefs[4..8]),
            MatrixKernel::constant(mat(2, &coefs[8..12]), -0.4).unwrap(), a3, v(&coefs[0..2])).unwrap();
        let l = C64::new(re, im);
        let d = sys.eval_delta(l);
        let dc = sys.eval_delta(l.conj());
        for (x, y) in d.iter().zip(dc.iter()) {
            prop_assert!((x.conj() - y).norm() <= 1e-12 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn delta_at_zero_is_exact(coefs in prop::collection::vec(-2.0f64..2.0, 12), left in -0.95f64..-0.05) {
        let c0 = mat(2, &coefs[0..4]);
        let c1 = mat(2, &coefs[4..8]);
        let a3 = MatrixKernel::new(2, left, vec![KernelPiece { left, right: 0.0, coeffs: vec![c0.clone(), c1.clone()] }]).unwrap();
        let a2 = MatrixKernel::constant(mat(2, &coefs[8..12]), left).unwrap();
        let a1 = mat(2, &coefs[8..12]);
        let a0 = mat(2, &coefs[0..4]) * 0.5;
        let sys = DelaySystem::new(DMatrix::zeros(2, 2), a1.clone(), a0.clone(), a2, a3, v(&[1.0, 0.0])).unwrap();
        let w = -left;
        let expect = &a1 + &a0 + &c0 * w + &c1 * (w * w / 2.0);
        let got = sys.eval_delta(C64::new(0.0, 0.0));
        for (g, e) in got.iter().zip(expect.iter()) {
            prop_assert!((g - C64::new(*e, 0.0)).norm() <= 1e-14 * (1.0 + expect.amax()));
        }
    }
}
