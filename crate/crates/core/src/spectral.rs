//! Eigenvalue and singular-value kernels: extremal and full spectra,
//! inertia, Schur complements and the `η_D`, `η_E` constants.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lanczos;
use crate::ldlt;
use crate::linalg;
use crate::system::{DoubleSaddleSystem, MatrixData};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    /// Largest dimension handled by a dense decomposition.
    pub dense_cutoff: usize,
    /// Largest dimension for which a full spectrum is computed.
    pub oracle_cutoff: usize,
    pub eig_tol: f64,
    pub zero_tol: f64,
    pub lanczos_max_iter: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            dense_cutoff: 4096,
            oracle_cutoff: 4096,
            eig_tol: 1e-10,
            zero_tol: 1e-11,
            lanczos_max_iter: 600,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

impl Inertia {
    pub fn new(n_plus: usize, n_minus: usize, n_zero: usize) -> Self {
        Self {
            n_plus,
            n_minus,
            n_zero,
        }
    }

    pub fn total(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }

    /// Sign count of a sorted or unsorted eigenvalue list.
    pub fn from_eigenvalues(ev: &[f64], zero_thresh: f64) -> Self {
        let mut out = Self::default();
        for &v in ev {
            if v.abs() <= zero_thresh {
                out.n_zero += 1;
            } else if v > 0.0 {
                out.n_plus += 1;
            } else {
                out.n_minus += 1;
            }
        }
        out
    }
}

/// Extremal eigenvalues and singular values of the five blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockExtremes {
    pub mu_max_a: f64,
    pub mu_min_a: f64,
    pub sigma_max_b: f64,
    pub sigma_min_b: f64,
    pub sigma_max_c: f64,
    pub sigma_min_c: f64,
    pub mu_max_d: f64,
    pub mu_min_d: f64,
    pub mu_max_e: f64,
    pub mu_min_e: f64,
}

impl BlockExtremes {
    pub fn check(&self) -> Result<()> {
        let all = [
            self.mu_max_a,
            self.mu_min_a,
            self.sigma_max_b,
            self.sigma_min_b,
            self.sigma_max_c,
            self.sigma_min_c,
            self.mu_max_d,
            self.mu_min_d,
            self.mu_max_e,
            self.mu_min_e,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite block extreme".into()));
        }
        if self.mu_min_a <= 0.0 {
            return Err(Error::Parameter(format!("mu_min_a = {} must be > 0", self.mu_min_a)));
        }
        if self.mu_min_d < 0.0 || self.mu_min_e < 0.0 {
            return Err(Error::Parameter("mu_min_d and mu_min_e must be >= 0".into()));
        }
        if self.sigma_min_b < 0.0 || self.sigma_min_c < 0.0 {
            return Err(Error::Parameter("singular values must be >= 0".into()));
        }
        let pairs = [
            ("A", self.mu_min_a, self.mu_max_a),
            ("B", self.sigma_min_b, self.sigma_max_b),
            ("C", self.sigma_min_c, self.sigma_max_c),
            ("D", self.mu_min_d, self.mu_max_d),
            ("E", self.mu_min_e, self.mu_max_e),
        ];
        for (name, lo, hi) in pairs {
            if lo > hi {
                return Err(Error::Parameter(format!("{name}: min {lo} exceeds max {hi}")));
            }
        }
        Ok(())
    }

    /// Same extremes with the `D` and `E` entries zeroed.
    pub fn without_regularization(&self) -> Self {
        Self {
            mu_max_d: 0.0,
            mu_min_d: 0.0,
            mu_max_e: 0.0,
            mu_min_e: 0.0,
            ..*self
        }
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix. Dense storage up to
/// `dense_cutoff` uses a full decomposition; anything else goes through
/// Lanczos.
pub fn extremal_eigs(matrix: &MatrixData, cfg: &SpectralConfig) -> Result<(f64, f64)> {
    match matrix {
        MatrixData::Dense(m) if m.nrows() <= cfg.dense_cutoff => extremal_eigs_dense(m),
        other => {
            let r = lanczos::lanczos_extremes(other, cfg.eig_tol, cfg.lanczos_max_iter)?;
            Ok((r.min, r.max))
        }
    }
}

pub fn extremal_eigs_dense(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    if m.nrows() == 0 || !m.is_square() {
        return Err(Error::Parameter(format!("expected a non-empty square matrix, got {:?}", m.shape())));
    }
    let ev = linalg::sym_eigenvalues(m);
    Ok((ev[0], ev[ev.len() - 1]))
}

/// Extremal singular values of an `r × c` matrix with `r ≤ c`: the largest
/// and the `r`-th largest. Computed from the eigenvalues of the `r × r` Gram
/// matrix; Gram eigenvalues at round-off level are reported as an exact
/// zero singular value.
pub fn extremal_svals(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let (r, c) = m.shape();
    if r > c || r == 0 {
        return Err(Error::Parameter(format!("extremal_svals needs 0 < rows <= cols, got {r}x{c}")));
    }
    let gram = linalg::symmetrize(&(m * m.transpose()));
    let ev = linalg::sym_eigenvalues(&gram);
    let top = ev[r - 1].max(0.0);
    let noise = 8.0 * f64::EPSILON * (r as f64) * top;
    let bottom = if ev[0] <= noise { 0.0 } else { ev[0] };
    Ok((bottom.sqrt(), top.sqrt()))
}

/// Ascending eigenvalues by dense decomposition; refuses anything above
/// the oracle cutoff.
pub fn full_spectrum(m: &DMatrix<f64>, cfg: &SpectralConfig) -> Result<Vec<f64>> {
    if m.nrows() > cfg.oracle_cutoff {
        return Err(Error::OverCutoff {
            dim: m.nrows(),
            cutoff: cfg.oracle_cutoff,
        });
    }
    Ok(linalg::sym_eigenvalues(m))
}

/// Inertia from a Bunch–Kaufman factorization; a pivot below
/// `zero_tol · ‖M‖_∞` falls back to counting eigenvalue signs.
pub fn inertia(m: &DMatrix<f64>, cfg: &SpectralConfig) -> Result<Inertia> {
    let norm = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let thresh = cfg.zero_tol * norm;
    if let Some(inertia) = ldlt::bunch_kaufman_inertia(m, thresh) {
        return Ok(inertia);
    }
    let ev = full_spectrum(m, cfg)?;
    Ok(Inertia::from_eigenvalues(&ev, thresh))
}

/// Extremes of every block, computed densely.
pub fn block_extremes(system: &DoubleSaddleSystem) -> Result<BlockExtremes> {
    let (mu_min_a, mu_max_a) = extremal_eigs_dense(&linalg::symmetrize(system.a()))?;
    let (sigma_min_b, sigma_max_b) = extremal_svals(system.b())?;
    let (sigma_min_c, sigma_max_c) = extremal_svals(system.c())?;
    let (mu_min_d, mu_max_d) = extremal_eigs_dense(&linalg::symmetrize(system.d()))?;
    let (mu_min_e, mu_max_e) = extremal_eigs_dense(&linalg::symmetrize(system.e()))?;
    // semidefinite blocks: round-off below zero is clipped
    let clip = |v: f64, scale: f64| if v < 0.0 && v >= -1e-12 * scale.max(1.0) { 0.0 } else { v };
    Ok(BlockExtremes {
        mu_max_a,
        mu_min_a,
        sigma_max_b,
        sigma_min_b,
        sigma_max_c,
        sigma_min_c,
        mu_max_d: clip(mu_max_d, mu_max_d.abs()),
        mu_min_d: clip(mu_min_d, mu_max_d.abs()),
        mu_max_e: clip(mu_max_e, mu_max_e.abs()),
        mu_min_e: clip(mu_min_e, mu_max_e.abs()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchurPair {
    pub s1: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    /// `λ_max((B A^{-1} B^T)^{-1} D)`; `+∞` when `B` is row-rank deficient and
    /// `D ≠ 0`.
    pub eta_d: f64,
    /// `λ_max((C S1^{-1} C^T)^{-1} E)`; `+∞` when `C` is row-rank deficient
    /// and `E ≠ 0`.
    pub eta_e: f64,
}

/// Largest eigenvalue of `g^{-1} h` for symmetric `h ⪰ 0`, or `+∞` when the
/// Gram-type matrix `g` is singular.
fn eta(h: &DMatrix<f64>, g: &DMatrix<f64>, coupling_full_rank: impl FnOnce() -> bool, name: &str) -> Result<f64> {
    if linalg::max_norm(h) == 0.0 {
        return Ok(0.0);
    }
    if !coupling_full_rank() {
        return Ok(f64::INFINITY);
    }
    match linalg::generalized_eigenvalues(h, g, name) {
        Ok(ev) => Ok(ev.last().copied().unwrap_or(0.0).max(0.0)),
        Err(Error::Definiteness { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// `S1 = D + B A^{-1} B^T`, `S2 = E + C S1^{-1} C^T`, with `η_D` and `η_E`
/// from the symmetric generalized eigenproblems `D v = η (B A^{-1} B^T) v`
/// and `E v = η (C S1^{-1} C^T) v`.
pub fn schur_complements(system: &DoubleSaddleSystem, rank_tol: f64) -> Result<SchurPair> {
    let a = linalg::symmetrize(system.a());
    let d = linalg::symmetrize(system.d());
    let e = linalg::symmetrize(system.e());
    let chol_a = linalg::cholesky(&a, "A")?;
    let w = linalg::lower_solve(&chol_a, &system.b().transpose());
    let bab = linalg::symmetrize(&(w.transpose() * &w));
    let s1 = &d + &bab;
    let chol_s1 = linalg::cholesky(&s1, "S1")?;
    let v = linalg::lower_solve(&chol_s1, &system.c().transpose());
    let csc = linalg::symmetrize(&(v.transpose() * &v));
    let s2 = &e + &csc;

    let dims = system.dims();
    let b_full = || crate::system::numerical_rank(system.b(), rank_tol) == dims.m;
    let c_full = || crate::system::numerical_rank(system.c(), rank_tol) == dims.p;
    Ok(SchurPair {
        eta_d: eta(&d, &bab, b_full, "B A^-1 B^T")?,
        eta_e: eta(&e, &csc, c_full, "C S1^-1 C^T")?,
        s1,
        s2,
    })
}
