//! Test systems: the small fixtures on which the bounds are attained, seeded
//! random systems with prescribed block extremes, and Poisson control
//! problems.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fem::{self, FemDiscretization};
use crate::spectral::BlockExtremes;
use crate::system::DoubleSaddleSystem;

pub const DEFAULT_BETA: f64 = 1e-3;

fn positive_params(params: &[f64; 5]) -> Result<()> {
    if let Some(v) = params.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Parameter(format!("fixture parameters must be positive, got {v}")));
    }
    Ok(())
}

/// The `n = m = 2`, `p = 1` fixture whose spectrum contains the upper
/// negative endpoint. `params = (μ_max^A, σ_min^B, μ^D, σ^C, μ^E)`.
pub fn tightness_upper_negative(params: [f64; 5]) -> Result<DoubleSaddleSystem> {
    positive_params(&params)?;
    let [mu_a, sigma_b, mu_d, sigma_c, mu_e] = params;
    DoubleSaddleSystem::new(
        DMatrix::identity(2, 2) * mu_a,
        DMatrix::identity(2, 2) * sigma_b,
        DMatrix::from_row_slice(1, 2, &[0.0, sigma_c]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, mu_d])),
        DMatrix::from_element(1, 1, mu_e),
    )
}

/// The `n = m = p = 2` fixture whose spectrum contains the lower positive
/// endpoint. `params = (μ_min^A, σ_max^B, μ_max^D, σ_min^C, μ^E)`.
pub fn tightness_lower_positive(params: [f64; 5]) -> Result<DoubleSaddleSystem> {
    positive_params(&params)?;
    let [mu_a, sigma_b, mu_d, sigma_c, mu_e] = params;
    DoubleSaddleSystem::new(
        DMatrix::identity(2, 2) * mu_a,
        DMatrix::identity(2, 2) * sigma_b,
        DMatrix::identity(2, 2) * sigma_c,
        DMatrix::identity(2, 2) * mu_d,
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, mu_e])),
    )
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn haar_orthogonal(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `k` values in `[lo, hi]` including both ends, spaced log-uniformly at
/// random when `lo > 0` and uniformly otherwise. A single value is `hi`.
fn spread(k: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let mut v = Vec::with_capacity(k);
            v.push(lo);
            for _ in 1..k - 1 {
                let t: f64 = rng.random();
                v.push(if lo > 0.0 {
                    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + t * (hi - lo)
                });
            }
            v.push(hi);
            v
        }
    }
}

fn symmetric_with_spectrum(k: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    if hi == 0.0 {
        return DMatrix::zeros(k, k);
    }
    let q = haar_orthogonal(k, rng);
    let lam = DVector::from_vec(spread(k, lo, hi, rng));
    let m = &q * DMatrix::from_diagonal(&lam) * q.transpose();
    crate::linalg::symmetrize(&m)
}

/// `r × c` matrix (`r ≤ c`) of rank `rank` whose nonzero singular values
/// are spread over `[lo, hi]`.
fn rectangular_with_svals(r: usize, c: usize, rank: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let u = haar_orthogonal(r, rng);
    let v = haar_orthogonal(c, rng);
    let mut s = spread(rank, lo, hi, rng);
    s.sort_by(|a, b| b.total_cmp(a));
    let mut sigma = DMatrix::zeros(r, c);
    for (i, x) in s.iter().enumerate() {
        sigma[(i, i)] = *x;
    }
    u * sigma * v.transpose()
}

/// Random system whose blocks have exactly the requested extremes.
/// Deterministic for a given seed.
pub fn random_system(n: usize, m: usize, p: usize, seed: u64, x: &BlockExtremes) -> Result<DoubleSaddleSystem> {
    random_system_rank_deficient_c(n, m, p, 0, seed, x)
}

/// As [`random_system`], but `C` has rank `p - k`, so `C^T` has nullity `k`.
/// `σ_min^C` then refers to the smallest nonzero singular value.
pub fn random_system_rank_deficient_c(
    n: usize,
    m: usize,
    p: usize,
    k: usize,
    seed: u64,
    x: &BlockExtremes,
) -> Result<DoubleSaddleSystem> {
    if !(n >= m && m >= p && p >= 1) {
        return Err(Error::DimensionOrder { n, m, p });
    }
    if k > p {
        return Err(Error::Parameter(format!("nullity k = {k} exceeds p = {p}")));
    }
    x.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = symmetric_with_spectrum(n, x.mu_min_a, x.mu_max_a, &mut rng);
    let b = rectangular_with_svals(m, n, m, x.sigma_min_b, x.sigma_max_b, &mut rng);
    let c = rectangular_with_svals(p, m, p - k, x.sigma_min_c, x.sigma_max_c, &mut rng);
    let d = symmetric_with_spectrum(m, x.mu_min_d, x.mu_max_d, &mut rng);
    let e = symmetric_with_spectrum(p, x.mu_min_e, x.mu_max_e, &mut rng);
    DoubleSaddleSystem::new(a, b, c, d, e)
}

/// Random but well-conditioned extremes: every range inside `[0.1, 10]`,
/// `D` and `E` switched off on request.
pub fn random_extremes(seed: u64, d_zero: bool, e_zero: bool) -> BlockExtremes {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let pair = |rng: &mut ChaCha8Rng| {
        let a = (rng.random::<f64>() * 2.0 - 1.0) * 10f64.ln();
        let b = (rng.random::<f64>() * 2.0 - 1.0) * 10f64.ln();
        (a.min(b).exp(), a.max(b).exp())
    };
    let (a_lo, a_hi) = pair(&mut rng);
    let (b_lo, b_hi) = pair(&mut rng);
    let (c_lo, c_hi) = pair(&mut rng);
    let (d_lo, d_hi) = pair(&mut rng);
    let (e_lo, e_hi) = pair(&mut rng);
    BlockExtremes {
        mu_max_a: a_hi,
        mu_min_a: a_lo,
        sigma_max_b: b_hi,
        sigma_min_b: b_lo,
        sigma_max_c: c_hi,
        sigma_min_c: c_lo,
        mu_max_d: if d_zero { 0.0 } else { d_hi },
        // semidefinite: half the time the bottom of the spectrum is zero
        mu_min_d: if d_zero || rng.random::<bool>() { 0.0 } else { d_lo },
        mu_max_e: if e_zero { 0.0 } else { e_hi },
        mu_min_e: if e_zero || rng.random::<bool>() { 0.0 } else { e_lo },
    }
}

/// Distributed Poisson control in the flipped roles `A = βM`, `B = -M`,
/// `C = K`, `D = 0`, `E = M`.
#[derive(Debug, Clone)]
pub struct DistributedControl {
    pub system: DoubleSaddleSystem,
    pub fem: FemDiscretization,
    pub beta: f64,
}

impl DistributedControl {
    /// The original ordering `A = M`, `B = K`, `C = -M`, `D = 0`, `E = βM`.
    pub fn unflipped(&self) -> Result<DoubleSaddleSystem> {
        let (m, k) = (&self.fem.mass, &self.fem.stiffness);
        let n = m.nrows();
        DoubleSaddleSystem::new(m.clone(), k.clone(), -m, DMatrix::zeros(n, n), m * self.beta)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta = {beta} must be positive")));
    }
    Ok(())
}

pub fn poisson_distributed(h: f64, beta: f64) -> Result<DistributedControl> {
    check_beta(beta)?;
    let fem = fem::q1_discretize(h)?;
    let (m, k) = (&fem.mass, &fem.stiffness);
    let n = m.nrows();
    let system = DoubleSaddleSystem::new(m * beta, -m, k.clone(), DMatrix::zeros(n, n), m.clone())?;
    Ok(DistributedControl { system, fem, beta })
}

/// Boundary Poisson control: `A = M`, `B = K`, `C = -E_b^T`, `D = 0`,
/// `E = β M_b`, with a Dirichlet condition on the bottom edge and the
/// control acting on the other three.
pub fn poisson_boundary(h: f64, beta: f64) -> Result<(DoubleSaddleSystem, FemDiscretization)> {
    check_beta(beta)?;
    let fem = fem::q1_discretize(h)?;
    let m = fem.state_mass();
    let k = fem.state_stiffness();
    let n = m.nrows();
    let system = DoubleSaddleSystem::new(
        m,
        k,
        -fem.coupling_boundary.transpose(),
        DMatrix::zeros(n, n),
        &fem.mass_boundary * beta,
    )?;
    Ok((system, fem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral;

    #[test]
    fn random_extremes_are_hit() {
        let x = random_extremes(3, false, false);
        let s = random_system(9, 6, 4, 11, &x).unwrap();
        let got = spectral::block_extremes(&s).unwrap();
        let pairs = [
            (got.mu_min_a, x.mu_min_a),
            (got.mu_max_a, x.mu_max_a),
            (got.sigma_min_b, x.sigma_min_b),
            (got.sigma_max_b, x.sigma_max_b),
            (got.sigma_min_c, x.sigma_min_c),
            (got.sigma_max_c, x.sigma_max_c),
            (got.mu_min_d, x.mu_min_d),
            (got.mu_max_d, x.mu_max_d),
            (got.mu_min_e, x.mu_min_e),
            (got.mu_max_e, x.mu_max_e),
        ];
        for (g, w) in pairs {
            assert!((g - w).abs() <= 1e-10 * w.abs().max(1.0), "{g} vs {w}");
        }
    }

    #[test]
    fn same_seed_same_system() {
        let x = random_extremes(1, false, true);
        let a = random_system(5, 4, 2, 7, &x).unwrap();
        let b = random_system(5, 4, 2, 7, &x).unwrap();
        assert_eq!(a, b);
        let c = random_system(5, 4, 2, 8, &x).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn nullity_of_c_transpose() {
        let x = random_extremes(2, true, false);
        let x = BlockExtremes {
            mu_min_e: 0.5,
            mu_max_e: 2.0,
            ..x
        };
        let s = random_system_rank_deficient_c(6, 5, 4, 2, 3, &x).unwrap();
        let v = crate::system::validate(&s, &Default::default());
        assert_eq!(v.c_nullity_k, 2);
        assert!(v.is_valid());
    }

    #[test]
    fn fixtures_reject_nonpositive() {
        assert!(tightness_upper_negative([1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(tightness_lower_positive([1.0, 1.0, 1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn distributed_shapes() {
        let d = poisson_distributed(0.25, DEFAULT_BETA).unwrap();
        assert_eq!(d.system.dims().n, 9);
        assert_eq!(d.system.dims().p, 9);
        let u = d.unflipped().unwrap();
        let a = u.assemble(crate::system::Layout::Flipped).unwrap().to_dense();
        let b = d.system.assemble(crate::system::Layout::Standard).unwrap().to_dense();
        assert!((a - b).amax() < 1e-15);
    }

    #[test]
    fn boundary_shapes() {
        let (s, fem) = poisson_boundary(0.25, DEFAULT_BETA).unwrap();
        let dims = s.dims();
        assert_eq!((dims.n, dims.m, dims.p), (20, 20, 11));
        assert_eq!(fem.control_nodes.len(), 11);
        assert!(crate::system::validate(&s, &Default::default()).is_valid());
    }
}
