//! Checks a computed spectrum against predicted intervals, discrete values
//! and counted sub-intervals.

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundIntervals, Closure, CountedInterval};
use crate::spectral::BlockExtremes;

/// Default tolerance for matching an eigenvalue to a known discrete value.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Negative,
    Positive,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenVerdict {
    pub value: f64,
    pub region: Region,
    /// Distance to the nearer endpoint of the closest interval; negative
    /// when outside.
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountCheck {
    pub value_or_lo: f64,
    pub hi: Option<f64>,
    pub expected: usize,
    pub found: usize,
}

impl CountCheck {
    pub fn ok(&self) -> bool {
        self.expected == self.found
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub pass: bool,
    pub n_eigenvalues: usize,
    pub n_outside: usize,
    pub n_negative: usize,
    pub n_positive: usize,
    pub min_slack: Option<f64>,
    pub verdicts: Vec<EigenVerdict>,
    pub multiplicities: Vec<CountCheck>,
    pub clusters: Vec<CountCheck>,
    /// Eigenvalues that matched neither a discrete value nor a counted
    /// sub-interval (only meaningful for fully described spectra).
    pub unassigned: usize,
}

fn in_counted(c: &CountedInterval, x: f64, tol: f64) -> bool {
    // closed ends get the tolerance band, open ends are strict
    let iv = c.interval.inflated(tol);
    let lo_ok = match c.closure {
        Closure::OpenLo => x > c.interval.lo,
        _ => x >= iv.lo,
    };
    let hi_ok = match c.closure {
        Closure::OpenHi => x < c.interval.hi,
        _ => x <= iv.hi,
    };
    lo_ok && hi_ok
}

pub fn verify_containment(spectrum: &[f64], bounds: &BoundIntervals, tol: f64) -> ContainmentReport {
    verify_containment_with(spectrum, bounds, tol, CLUSTER_TOL)
}

pub fn verify_containment_with(
    spectrum: &[f64],
    bounds: &BoundIntervals,
    tol: f64,
    cluster_tol: f64,
) -> ContainmentReport {
    let neg = bounds.negative.inflated(tol);
    let pos = bounds.positive.inflated(tol);
    let verdicts: Vec<EigenVerdict> = spectrum
        .iter()
        .map(|&value| {
            let (sn, sp) = (bounds.negative.slack(value), bounds.positive.slack(value));
            let region = if neg.contains(value) {
                Region::Negative
            } else if pos.contains(value) {
                Region::Positive
            } else {
                Region::Outside
            };
            EigenVerdict {
                value,
                region,
                slack: sn.max(sp),
            }
        })
        .collect();
    let n_outside = verdicts.iter().filter(|v| v.region == Region::Outside).count();
    let mut pass = n_outside == 0;

    let mut multiplicities = Vec::new();
    let mut clusters = Vec::new();
    let mut unassigned = 0;
    if let Some(discrete) = &bounds.discrete {
        let mut taken = vec![false; spectrum.len()];
        for d in discrete {
            let mut found = 0;
            for (i, &x) in spectrum.iter().enumerate() {
                if !taken[i] && (x - d.value).abs() <= cluster_tol * d.value.abs().max(1.0) {
                    taken[i] = true;
                    found += 1;
                }
            }
            multiplicities.push(CountCheck {
                value_or_lo: d.value,
                hi: None,
                expected: d.multiplicity,
                found,
            });
        }
        for c in &bounds.clusters {
            let mut found = 0;
            for (i, &x) in spectrum.iter().enumerate() {
                if !taken[i] && in_counted(c, x, tol) {
                    taken[i] = true;
                    found += 1;
                }
            }
            clusters.push(CountCheck {
                value_or_lo: c.interval.lo,
                hi: Some(c.interval.hi),
                expected: c.count,
                found,
            });
        }
        unassigned = taken.iter().filter(|t| !**t).count();
        let counts_ok = multiplicities.iter().chain(&clusters).all(CountCheck::ok);
        let total_ok = bounds.declared_count.is_none_or(|n| n == spectrum.len());
        pass &= counts_ok && unassigned == 0 && total_ok;
    }

    ContainmentReport {
        pass,
        n_eigenvalues: spectrum.len(),
        n_outside,
        n_negative: verdicts.iter().filter(|v| v.region == Region::Negative).count(),
        n_positive: verdicts.iter().filter(|v| v.region == Region::Positive).count(),
        min_slack: verdicts.iter().map(|v| v.slack).min_by(|a, b| a.total_cmp(b)),
        verdicts,
        multiplicities,
        clusters,
        unassigned,
    }
}

/// Compares measured block extremes of a split preconditioned matrix with
/// the ranges implied by the equivalence constants. Returns the list of
/// violated inequalities (empty when all hold).
pub fn verify_block_bounds(measured: &BlockExtremes, implied: &BlockExtremes, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    let mut below = |name: &str, value: f64, bound: f64| {
        if value < bound - tol * bound.abs().max(1.0) {
            out.push(format!("{name} = {value} below {bound}"));
        }
    };
    below("mu_min(Q0)", measured.mu_min_a, implied.mu_min_a);
    below("sigma_min(B)", measured.sigma_min_b, implied.sigma_min_b);
    below("sigma_min(C)", measured.sigma_min_c, implied.sigma_min_c);
    let mut above = |name: &str, value: f64, bound: f64| {
        if value > bound + tol * bound.abs().max(1.0) {
            out.push(format!("{name} = {value} above {bound}"));
        }
    };
    above("mu_max(Q0)", measured.mu_max_a, implied.mu_max_a);
    above("sigma_max(B)", measured.sigma_max_b, implied.sigma_max_b);
    above("sigma_max(C)", measured.sigma_max_c, implied.sigma_max_c);
    above("mu_max(D)", measured.mu_max_d, implied.mu_max_d);
    above("mu_max(E)", measured.mu_max_e, implied.mu_max_e);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{bounds_precond_exact, ExactCase, Interval, Provenance};
    use crate::cubic;
    use crate::system::Dims;

    fn simple() -> BoundIntervals {
        let mut b = bounds_precond_exact(ExactCase::DNonzero, Dims { n: 1, m: 1, p: 1 }).unwrap();
        b.negative = Interval::new(-2.0, -0.5);
        b.positive = Interval::new(0.5, 2.0);
        b.provenance = Provenance::Unpreconditioned;
        b
    }

    #[test]
    fn empty_spectrum_passes() {
        let r = verify_containment(&[], &simple(), 1e-9);
        assert!(r.pass);
        assert_eq!(r.min_slack, None);
    }

    #[test]
    fn inside_with_slack() {
        let r = verify_containment(&[-1.0, 1.0], &simple(), 1e-9);
        assert!(r.pass);
        assert_eq!(r.min_slack, Some(0.5));
        assert_eq!((r.n_negative, r.n_positive), (1, 1));
    }

    #[test]
    fn outside_fails_with_negative_slack() {
        let r = verify_containment(&[0.0, 1.0], &simple(), 1e-9);
        assert!(!r.pass);
        assert_eq!(r.n_outside, 1);
        assert!(r.verdicts[0].slack < 0.0);
    }

    #[test]
    fn tolerance_inflates_endpoints() {
        assert!(verify_containment(&[2.0 + 1e-10], &simple(), 1e-9).pass);
        assert!(!verify_containment(&[2.0 + 1e-8], &simple(), 1e-9).pass);
    }

    #[test]
    fn discrete_multiplicities() {
        let b = bounds_precond_exact(ExactCase::D0E0, Dims { n: 2, m: 1, p: 1 }).unwrap();
        let z = cubic::zeta();
        let good = [z.neg, z.pos_min, 1.0, z.pos_max];
        assert!(verify_containment(&good, &b, 1e-9).pass);
        let bad = [z.neg, z.pos_min, z.pos_min, z.pos_max];
        let r = verify_containment(&bad, &b, 1e-9);
        assert!(!r.pass);
        assert!(r.multiplicities.iter().any(|c| !c.ok()));
    }

    #[test]
    fn counted_intervals() {
        let b = bounds_precond_exact(ExactCase::D0E { k: 0 }, Dims { n: 1, m: 1, p: 1 }).unwrap();
        assert!(verify_containment(&[-1.0, 0.7, 1.7], &b, 1e-9).pass);
        // two values in the middle cluster, none in the upper one
        assert!(!verify_containment(&[-1.0, 0.7, 0.8], &b, 1e-9).pass);
    }
}
