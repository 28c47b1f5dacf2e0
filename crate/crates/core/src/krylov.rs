//! Preconditioned MINRES (Paige–Saunders recurrence).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::precond::PreconditionerOperator;

pub const DEFAULT_RTOL: f64 = 1e-8;
const BREAKDOWN_REL: f64 = 1e-14;

/// Action of `M^{-1}` for an SPD preconditioner `M`.
pub trait Preconditioner {
    fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64>;
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        v.clone()
    }
}

impl Preconditioner for PreconditionerOperator {
    fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        PreconditionerOperator::apply_inverse(self, v)
    }
}

impl<F: Fn(&DVector<f64>) -> DVector<f64>> Preconditioner for F {
    fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub solution: DVector<f64>,
    /// `‖r_k‖_{M^{-1}} / ‖b‖_{M^{-1}}` for k = 0, 1, ...
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub breakdown: Option<String>,
}

pub fn default_maxit(dim: usize) -> usize {
    4 * dim
}

pub fn minres(
    k: &dyn LinearOperator,
    m: &dyn Preconditioner,
    b: &DVector<f64>,
    rtol: f64,
    maxit: usize,
) -> Result<SolveResult> {
    let n = k.dim();
    if b.len() != n {
        return Err(Error::Parameter(format!("right-hand side has length {}, expected {n}", b.len())));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("right-hand side is not finite".into()));
    }
    let mut x = DVector::zeros(n);
    let mut r1 = b.clone();
    let mut y = m.apply_inverse(&r1);
    let beta1_sq = r1.dot(&y);
    if beta1_sq < 0.0 {
        return Err(Error::definiteness("preconditioner"));
    }
    let beta1 = beta1_sq.sqrt();
    let mut out = SolveResult {
        solution: x.clone(),
        residual_history: vec![if beta1 == 0.0 { 0.0 } else { 1.0 }],
        iterations: 0,
        converged: beta1 == 0.0,
        breakdown: None,
    };
    if beta1 == 0.0 {
        return Ok(out);
    }

    let breakdown_tol = BREAKDOWN_REL * beta1;
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = DVector::zeros(n);
    let mut w2 = DVector::zeros(n);

    for itn in 1..=maxit {
        let v = &y / beta;
        y = k.apply(&v);
        if itn >= 2 {
            y.axpy(-beta / oldb, &r1, 1.0);
        }
        let alfa = v.dot(&y);
        y.axpy(-alfa / beta, &r2, 1.0);
        r1 = std::mem::replace(&mut r2, y);
        y = m.apply_inverse(&r2);
        oldb = beta;
        let beta_sq = r2.dot(&y);
        if beta_sq < 0.0 {
            return Err(Error::definiteness("preconditioner"));
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, w);
        w = (&v - &w1 * oldeps - &w2 * delta) / gamma;
        x.axpy(phi, &w, 1.0);

        out.iterations = itn;
        out.residual_history.push(phibar / beta1);
        if phibar <= rtol * beta1 {
            out.converged = true;
            break;
        }
        if beta <= breakdown_tol {
            out.breakdown = Some(format!("Lanczos breakdown at iteration {itn} (beta = {beta:e})"));
            break;
        }
    }
    out.solution = x;
    Ok(out)
}

/// `(iteration, relative residual)` rows, one per history entry.
pub fn residual_report(result: &SolveResult) -> Vec<(usize, f64)> {
    result.residual_history.iter().copied().enumerate().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn identity_converges_in_one_step() {
        let k = DMatrix::<f64>::identity(5, 5);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let r = minres(&k, &IdentityPreconditioner, &b, 1e-12, 10).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!((&r.solution - &b).amax() < 1e-14);
        assert_eq!(residual_report(&r).len(), 2);
    }

    #[test]
    fn indefinite_diagonal_system() {
        let d = DVector::from_vec(vec![-3.0, -1.0, 0.5, 2.0, 4.0, 7.0]);
        let k = DMatrix::from_diagonal(&d);
        let b = DVector::from_element(6, 1.0);
        let r = minres(&k, &IdentityPreconditioner, &b, 1e-12, 50).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 6);
        assert!((&k * &r.solution - &b).norm() / b.norm() < 1e-10);
    }

    #[test]
    fn history_is_monotone_and_maxit_respected() {
        let n = 40;
        let k = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0 - if i % 2 == 0 { 3.0 } else { 0.0 },
            1 => -1.0,
            _ => 0.0,
        });
        let b = DVector::from_element(n, 1.0);
        let r = minres(&k, &IdentityPreconditioner, &b, 1e-14, 5).unwrap();
        assert!(!r.converged);
        assert_eq!(r.residual_history.len(), 6);
        for w in r.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn indefinite_preconditioner_detected() {
        let k = DMatrix::<f64>::identity(2, 2);
        let bad = |v: &DVector<f64>| -v;
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(minres(&k, &bad, &b, 1e-10, 10), Err(Error::Definiteness { .. })));
    }

    #[test]
    fn zero_rhs_is_solved_immediately() {
        let k = DMatrix::<f64>::identity(3, 3);
        let r = minres(&k, &IdentityPreconditioner, &DVector::zeros(3), 1e-10, 10).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }
}
