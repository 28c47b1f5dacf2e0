use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use saddlebound::bounds;
use saddlebound::cubic;
use saddlebound::krylov;
use saddlebound::linalg;
use saddlebound::precond;
use saddlebound::problems;
use saddlebound::spectral::{self, SpectralConfig};
use saddlebound::system::{validate, Tolerances};
use saddlebound::{BlockExtremes, DoubleSaddleSystem, Layout};

fn cfg() -> SpectralConfig {
    SpectralConfig::default()
}

fn positive() -> impl Strategy<Value = f64> {
    (-2.0f64..2.0).prop_map(|t| 10f64.powf(t))
}

fn semidefinite() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 3 => positive()]
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=12).prop_flat_map(|n| (Just(n), 1..=n)).prop_flat_map(|(n, m)| (Just(n), Just(m), 1..=m))
}

fn system() -> impl Strategy<Value = DoubleSaddleSystem> {
    (dims(), any::<u64>(), any::<bool>(), any::<bool>()).prop_map(|((n, m, p), seed, dz, ez)| {
        let x = problems::random_extremes(seed, dz, ez);
        problems::random_system(n, m, p, seed, &x).unwrap()
    })
}

fn symmetric(k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = problems::haar_orthogonal(k, &mut rng);
    let g = problems::haar_orthogonal(k, &mut rng);
    let m = &q * DMatrix::from_fn(k, k, |i, j| g[(i, j)] * 3.0) * q.transpose();
    linalg::symmetrize(&m)
}

fn widen(x: &BlockExtremes, t: f64) -> BlockExtremes {
    BlockExtremes {
        mu_max_a: x.mu_max_a * (1.0 + t),
        mu_min_a: x.mu_min_a / (1.0 + t),
        sigma_max_b: x.sigma_max_b * (1.0 + t),
        sigma_min_b: x.sigma_min_b / (1.0 + t),
        sigma_max_c: x.sigma_max_c * (1.0 + t),
        sigma_min_c: x.sigma_min_c / (1.0 + t),
        mu_max_d: x.mu_max_d * (1.0 + t),
        mu_min_d: x.mu_min_d / (1.0 + t),
        mu_max_e: x.mu_max_e * (1.0 + t),
        mu_min_e: x.mu_min_e / (1.0 + t),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cubic_roots_have_the_sign_pattern(a in positive(), b in positive(), c in positive(), d in semidefinite(), e in semidefinite()) {
        let poly = cubic::cubic_from_params(a, b, c, d, e).unwrap();
        let r = cubic::solve_classified(&poly).unwrap();
        prop_assert!(r.neg < 0.0 && r.pos_min > 0.0 && r.pos_max >= r.pos_min);
        for x in r.as_array() {
            prop_assert!(poly.eval(x).abs() <= 1e-10 * (1.0 + x.abs().powi(3)));
        }
    }

    #[test]
    fn widening_extremes_never_shrinks_bounds(seed in any::<u64>(), dz in any::<bool>(), ez in any::<bool>(), t in 0.0f64..0.5) {
        let x = problems::random_extremes(seed, dz, ez);
        let narrow = bounds::bounds_unpreconditioned(&x).unwrap();
        let wide = bounds::bounds_unpreconditioned(&widen(&x, t)).unwrap();
        prop_assert!(wide.negative.inflated(1e-12).encloses(&narrow.negative));
        prop_assert!(wide.positive.inflated(1e-12).encloses(&narrow.positive));
    }

    #[test]
    fn congruence_preserves_inertia(k in 1usize..=50, seed in any::<u64>()) {
        let m = symmetric(k, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let q = problems::haar_orthogonal(k, &mut rng);
        let scale = DMatrix::from_fn(k, k, |i, j| if i == j { 0.5 + (i % 4) as f64 * 0.5 } else { 0.0 });
        let p = q * scale;
        let moved = linalg::symmetrize(&(p.transpose() * &m * &p));
        prop_assert_eq!(spectral::inertia(&moved, &cfg()).unwrap(), spectral::inertia(&m, &cfg()).unwrap());
    }

    #[test]
    fn assembled_spectrum_has_m_negative_values(s in system()) {
        let ev = spectral::full_spectrum(&s.assemble(Layout::Standard).unwrap().to_dense(), &cfg()).unwrap();
        prop_assert_eq!(ev.iter().filter(|v| **v < 0.0).count(), s.dims().m);
        let inertia = spectral::inertia(&s.assemble(Layout::Standard).unwrap().to_dense(), &cfg()).unwrap();
        prop_assert_eq!((inertia.n_plus, inertia.n_minus, inertia.n_zero), (s.dims().n + s.dims().p, s.dims().m, 0));
    }

    #[test]
    fn flipped_and_standard_spectra_agree(k in 1usize..=8, seed in any::<u64>()) {
        let x = problems::random_extremes(seed, false, false);
        let s = problems::random_system(k, k, k, seed, &x).unwrap();
        let a = spectral::full_spectrum(&s.assemble(Layout::Standard).unwrap().to_dense(), &cfg()).unwrap();
        let b = spectral::full_spectrum(&s.assemble(Layout::Flipped).unwrap().to_dense(), &cfg()).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-12 * a[0].abs().max(*a.last().unwrap()));
        }
    }

    #[test]
    fn eta_scales_linearly(s in system(), t in positive()) {
        let tol = Tolerances::default().rank_tol;
        let base = spectral::schur_complements(&s, tol).unwrap();
        let scaled = s.with_d(s.d() * t).unwrap().with_e(s.e() * t).unwrap();
        let after = spectral::schur_complements(&scaled, tol).unwrap();
        prop_assert!(base.eta_d >= 0.0 && base.eta_e >= 0.0);
        prop_assert!((after.eta_d - t * base.eta_d).abs() <= 1e-8 * (t * base.eta_d).max(1e-300));
        // S1 changes with D, so η_E is homogeneous only when D = 0
        if s.d_is_zero() {
            prop_assert!((after.eta_e - t * base.eta_e).abs() <= 1e-8 * (t * base.eta_e).max(1e-300));
        }
    }

    #[test]
    fn squared_singular_values_are_gram_eigenvalues(s in system()) {
        let (lo, hi) = spectral::extremal_svals(s.b()).unwrap();
        let gram = linalg::symmetrize(&(s.b() * s.b().transpose()));
        let (glo, ghi) = spectral::extremal_eigs_dense(&gram).unwrap();
        prop_assert!((lo * lo - glo).abs() <= 1e-12 * ghi);
        prop_assert!((hi * hi - ghi).abs() <= 1e-12 * ghi);
    }

    #[test]
    fn inverse_of_sum_times_term_has_unit_spectrum(k in 1usize..=15, seed in any::<u64>(), rank in 0usize..=15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = problems::haar_orthogonal(k, &mut rng);
        let h = problems::haar_orthogonal(k, &mut rng);
        let r = rank.min(k);
        let low = g.columns(0, r).into_owned();
        let m = &low * low.transpose();
        let n = &h * DMatrix::from_diagonal(&DVector::from_fn(k, |i, _| 0.1 + i as f64)) * h.transpose();
        let ev = linalg::generalized_eigenvalues(&linalg::symmetrize(&m), &linalg::symmetrize(&(&m + &n)), "M + N").unwrap();
        for v in ev {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{v}");
        }
    }

    #[test]
    fn split_matrix_keeps_inertia(s in system(), jacobi in any::<bool>()) {
        let op = if jacobi {
            precond::build_approx(&s, [precond::BlockStrategy::Jacobi, precond::BlockStrategy::Jacobi, precond::BlockStrategy::Jacobi]).unwrap()
        } else {
            precond::build_exact(&s).unwrap()
        };
        let split = precond::split_preconditioned_matrix(&s, &op, &cfg()).unwrap();
        let k = s.assemble(Layout::Standard).unwrap().to_dense();
        prop_assert_eq!(spectral::inertia(&split.matrix, &cfg()).unwrap(), spectral::inertia(&k, &cfg()).unwrap());
    }

    #[test]
    fn generated_systems_validate(s in system()) {
        let v = validate(&s, &Tolerances::default());
        prop_assert!(v.is_valid());
        prop_assert_eq!(v.schur_definite, [true, true]);
    }

    #[test]
    fn converged_solves_have_small_true_residual(s in system()) {
        let k = s.assemble(Layout::Standard).unwrap();
        let op = precond::build_exact(&s).unwrap();
        let b = DVector::from_fn(k.dim(), |i, _| 1.0 + (i % 3) as f64);
        let rtol = 1e-10;
        let r = krylov::minres(&k.data, &op, &b, rtol, krylov::default_maxit(k.dim())).unwrap();
        prop_assert!(r.converged);
        let res = &b - k.to_dense() * &r.solution;
        // the stopping test is in the preconditioner norm; allow its conditioning
        let m = op.to_dense();
        let (lo, hi) = spectral::extremal_eigs_dense(&m).unwrap();
        prop_assert!(res.norm() / b.norm() <= 10.0 * rtol * (hi / lo).sqrt());
    }
}
