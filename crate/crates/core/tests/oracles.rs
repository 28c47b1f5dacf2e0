//! Cross-module checks against independent reference computations.

use nalgebra::{DMatrix, DVector, Matrix3};
use saddlebound::bounds::{self, EquivalenceConstants, InexactCase};
use saddlebound::containment::verify_containment;
use saddlebound::cubic;
use saddlebound::krylov::{self, IdentityPreconditioner};
use saddlebound::linalg;
use saddlebound::precond::{self, BlockStrategy};
use saddlebound::problems;
use saddlebound::spectral::{self, SpectralConfig};
use saddlebound::{DoubleSaddleSystem, Layout};

fn close_mat(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) -> bool {
    (a - b).amax() <= rel * b.amax().max(1.0)
}

fn dense_spectrum(s: &DoubleSaddleSystem) -> Vec<f64> {
    spectral::full_spectrum(&s.assemble(Layout::Standard).unwrap().to_dense(), &SpectralConfig::default()).unwrap()
}

#[test]
fn corollary_matrix_roots_match_companion_eigenvalues() {
    let s = DoubleSaddleSystem::new(
        DMatrix::from_element(1, 1, 2.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::zeros(1, 1),
        DMatrix::zeros(1, 1),
    )
    .unwrap();
    let ev = dense_spectrum(&s);
    // λ³ - 2λ² - 2λ + 2
    let companion = Matrix3::new(2.0, 2.0, -2.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let mut oracle: Vec<f64> = companion.complex_eigenvalues().iter().map(|z| z.re).collect();
    oracle.sort_by(f64::total_cmp);
    let roots = cubic::solve_classified(&cubic::cubic_from_params(2.0, 1.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
    for ((a, b), c) in ev.iter().zip(&oracle).zip(roots.as_array()) {
        assert!((a - b).abs() < 1e-12 && (b - c).abs() < 1e-12, "{a} {b} {c}");
    }
}

#[test]
fn distributed_control_layouts() {
    let dc = problems::poisson_distributed(0.125, 1e-3).unwrap();
    let (m, k) = (&dc.fem.mass, &dc.fem.stiffness);
    let n = m.nrows();
    let standard = dc.unflipped().unwrap().assemble(Layout::Standard).unwrap().to_dense();
    assert_eq!(standard.view((0, 0), (n, n)), *m);
    assert_eq!(standard.view((n, 0), (n, n)), *k);
    assert_eq!(standard.view((2 * n, n), (n, n)), -m);
    assert_eq!(standard.view((2 * n, 2 * n), (n, n)), m * 1e-3);
    assert!(standard.view((n, n), (n, n)).iter().all(|v| *v == 0.0));
    assert!(standard.view((2 * n, 0), (n, n)).iter().all(|v| *v == 0.0));

    // reversing the unknowns of the original ordering gives the flipped roles
    let flipped = dc.unflipped().unwrap().assemble(Layout::Flipped).unwrap().to_dense();
    let roles = dc.system.assemble(Layout::Standard).unwrap().to_dense();
    assert_eq!(flipped, roles);
    assert_eq!(flipped.view((0, 0), (n, n)), m * 1e-3);
    assert_eq!(flipped.view((n, 0), (n, n)), -m);
    assert_eq!(flipped.view((2 * n, n), (n, n)), *k);
}

#[test]
fn exact_blocks_of_the_control_problems() {
    let beta = 1e-3;
    let dc = problems::poisson_distributed(0.125, beta).unwrap();
    let (m, k) = (&dc.fem.mass, &dc.fem.stiffness);
    let m_inv = m.clone().try_inverse().unwrap();
    let [a, s1, s2] = precond::exact_blocks(&dc.system).unwrap();
    assert!(close_mat(&a, &(m * beta), 1e-12));
    assert!(close_mat(&s1, &(m / beta), 1e-10));
    assert!(close_mat(&s2, &(m + k * &m_inv * k * beta), 1e-10));

    let (bs, fem) = problems::poisson_boundary(0.125, beta).unwrap();
    let (mm, kk) = (fem.state_mass(), fem.state_stiffness());
    let [a, s1, s2] = precond::exact_blocks(&bs).unwrap();
    let kmk = &kk * mm.clone().try_inverse().unwrap() * &kk;
    assert!(close_mat(&a, &mm, 1e-12));
    assert!(close_mat(&s1, &kmk, 1e-10));
    let eb = &fem.coupling_boundary;
    let expected = &fem.mass_boundary * beta + eb.transpose() * kmk.try_inverse().unwrap() * eb;
    assert!(close_mat(&s2, &expected, 1e-9));
}

#[test]
fn approximate_third_blocks() {
    let beta = 1e-3;
    let dc = problems::poisson_distributed(0.0625, beta).unwrap();
    let (m, k) = (&dc.fem.mass, &dc.fem.stiffness);
    let op = precond::build_approx(
        &dc.system,
        [BlockStrategy::Exact, BlockStrategy::Exact, BlockStrategy::PearsonWathen],
    )
    .unwrap();
    let f = m + k * beta.sqrt();
    let expected = &f * m.clone().try_inverse().unwrap() * &f;
    assert!(close_mat(&op.blocks[2].matrix, &expected, 1e-10));
    let eq = op.equivalence[2];
    assert!(eq.raw_min >= 0.5 - 1e-6 && eq.raw_max <= 1.0 + 1e-6, "{eq:?}");
    assert!(eq.declared && eq.alpha == 0.5 && eq.beta == 1.0);

    let (bs, fem) = problems::poisson_boundary(0.125, beta).unwrap();
    let op = precond::build_approx(&bs, [BlockStrategy::Exact, BlockStrategy::Exact, BlockStrategy::DropTerm]).unwrap();
    let scaled = &fem.mass_boundary * (beta * op.equivalence[2].scale);
    assert!(close_mat(&op.blocks[2].matrix, &scaled, 1e-12));
}

#[test]
fn lower_positive_bound_for_half_equivalent_third_block() {
    let consts = EquivalenceConstants::from_pairs([(1.0, 1.0), (1.0, 1.0), (0.5, 1.0)]);
    let case = InexactCase {
        d_zero: true,
        e_zero: false,
    };
    let b = bounds::bounds_precond_inexact(&consts, 0.0, 0.0, case).unwrap();
    assert!((b.positive.lo - (1.0 - 0.5_f64.sqrt())).abs() < 1e-12, "{}", b.positive.lo);
    assert!((b.positive.hi - 2.0).abs() < 1e-12);
}

#[test]
fn singular_values_match_full_svd() {
    let x = problems::random_extremes(11, false, false);
    let s = problems::random_system(9, 7, 4, 11, &x).unwrap();
    for m in [s.b(), s.c()] {
        let (lo, hi) = spectral::extremal_svals(m).unwrap();
        let sv = m.clone().svd(false, false).singular_values;
        assert!((lo - sv.min()).abs() < 1e-10 * sv.max());
        assert!((hi - sv.max()).abs() < 1e-10 * sv.max());
    }
    assert!((x.sigma_min_b - spectral::extremal_svals(s.b()).unwrap().0).abs() < 1e-10);
}

#[test]
fn tightness_fixtures_attain_endpoints() {
    let neg = problems::tightness_upper_negative([1.0; 5]).unwrap();
    let ev = dense_spectrum(&neg);
    let golden = (1.0 - 5f64.sqrt()) / 2.0;
    assert!(ev.iter().any(|v| (v - golden).abs() < 1e-12), "{ev:?}");

    let pos = problems::tightness_lower_positive([1.0; 5]).unwrap();
    let ev = dense_spectrum(&pos);
    let roots = cubic::solve_classified(&cubic::cubic_from_params(1.0, 1.0, 1.0, 1.0, 0.0).unwrap()).unwrap();
    for r in roots.as_array() {
        assert!(ev.iter().any(|v| (v - r).abs() < 1e-12), "{r} not in {ev:?}");
    }
}

#[test]
fn random_twelve_by_twelve_is_contained() {
    for (seed, d0, e0) in [(1, false, false), (2, true, true), (3, true, false)] {
        let x = problems::random_extremes(seed, d0, e0);
        let s = problems::random_system(6, 4, 2, seed, &x).unwrap();
        assert_eq!(s.dims().total(), 12);
        let xm = spectral::block_extremes(&s).unwrap();
        let b = if d0 && e0 {
            bounds::bounds_k0(&xm).unwrap()
        } else {
            bounds::bounds_unpreconditioned(&xm).unwrap()
        };
        assert!(verify_containment(&dense_spectrum(&s), &b, 1e-9).pass);
    }
}

#[test]
fn residual_rows() {
    let k = DMatrix::<f64>::identity(4, 4);
    let b = DVector::from_element(4, 1.0);
    let r = krylov::minres(&k, &IdentityPreconditioner, &b, 1e-12, 10).unwrap();
    assert_eq!(krylov::residual_report(&r).len(), 2);

    let k = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 3.0, -4.0, 5.0, 6.0]));
    let b = DVector::from_element(6, 1.0);
    let r = krylov::minres(&k, &IdentityPreconditioner, &b, 1e-14, 3).unwrap();
    assert!(!r.converged);
    assert_eq!(krylov::residual_report(&r).len(), 4);
}

#[test]
fn exact_preconditioner_inverts_its_action() {
    let x = problems::random_extremes(5, false, false);
    let s = problems::random_system(8, 5, 3, 5, &x).unwrap();
    let op = precond::build_exact(&s).unwrap();
    let w = DVector::from_fn(16, |i, _| (i as f64 * 0.7).sin());
    let back = op.apply_inverse(&op.apply(&w));
    assert!((back - &w).norm() <= 1e-10 * w.norm());
    let dense = op.to_dense();
    assert!(linalg::is_symmetric(&dense, 1e-14));
}
