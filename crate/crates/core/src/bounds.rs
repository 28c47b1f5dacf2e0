//! Interval bounds for the spectrum of `K`, of the exactly preconditioned
//! matrix and of the inexactly preconditioned matrix.

use serde::{Deserialize, Serialize};

use crate::cubic::{self, ClassifiedRoots, CubicPoly};
use crate::error::{Error, Result};
use crate::spectral::BlockExtremes;
use crate::system::Dims;

/// Relative threshold below which `σ_min` of `B` or `C` is treated as zero.
pub const DEGENERACY_TOL: f64 = 1e-10;

pub const GOLDEN_PLUS: f64 = 1.618_033_988_749_895;
pub const GOLDEN_MINUS: f64 = -0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Containment after widening each endpoint by `tol · max(1, |endpoint|)`.
    pub fn contains_inflated(&self, x: f64, tol: f64) -> bool {
        self.inflated(tol).contains(x)
    }

    pub fn inflated(&self, tol: f64) -> Self {
        Self {
            lo: self.lo - tol * self.lo.abs().max(1.0),
            hi: self.hi + tol * self.hi.abs().max(1.0),
        }
    }

    /// Distance to the nearer endpoint; negative when outside.
    pub fn slack(&self, x: f64) -> f64 {
        (x - self.lo).min(self.hi - x)
    }

    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Which endpoint set a sub-interval includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    Closed,
    OpenHi,
    OpenLo,
}

/// A sub-interval that must hold an exact number of eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountedInterval {
    pub interval: Interval,
    pub closure: Closure,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEigenvalue {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "case")]
pub enum ExactCase {
    /// `D = 0` and `E = 0`.
    D0E0,
    /// `D = 0`, `E ≠ 0`, with `k` the nullity of `C^T`.
    D0E { k: usize },
    /// `D ≠ 0`, `E` arbitrary.
    DNonzero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Unpreconditioned,
    Unregularized,
    ExactPreconditioner { case: ExactCase },
    InexactPreconditioner { d_zero: bool, e_zero: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCubic {
    pub name: String,
    pub poly: CubicPoly,
    pub roots: ClassifiedRoots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundIntervals {
    pub negative: Interval,
    pub positive: Interval,
    /// Exactly known eigenvalues with multiplicities.
    pub discrete: Option<Vec<DiscreteEigenvalue>>,
    /// Sub-intervals with exact eigenvalue counts.
    pub clusters: Vec<CountedInterval>,
    /// Total of all multiplicities and counts, when the spectrum is fully
    /// described.
    pub declared_count: Option<usize>,
    pub provenance: Provenance,
    /// Set when an interior endpoint collapsed to zero because `B` or `C` is
    /// numerically rank deficient.
    pub degenerate_interior: bool,
    /// Simplified first-order estimate `-α0 α1 / β0` of the upper negative
    /// endpoint (inexact preconditioner only).
    pub auxiliary_negative_upper: Option<f64>,
    pub cubics: Vec<NamedCubic>,
}

impl BoundIntervals {
    fn intervals(negative: Interval, positive: Interval, provenance: Provenance) -> Self {
        Self {
            negative,
            positive,
            discrete: None,
            clusters: Vec::new(),
            declared_count: None,
            provenance,
            degenerate_interior: false,
            auxiliary_negative_upper: None,
            cubics: Vec::new(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.negative.contains(x) || self.positive.contains(x)
    }
}

fn named(name: &'static str, poly: CubicPoly) -> Result<NamedCubic> {
    Ok(NamedCubic {
        name: name.to_string(),
        poly,
        roots: cubic::solve_classified(&poly)?,
    })
}

fn named_params(name: &'static str, a: f64, b: f64, c: f64, d: f64, e: f64) -> Result<NamedCubic> {
    named(name, cubic::cubic_from_params(a, b, c, d, e)?)
}

/// `(μ - sqrt(μ² + 4σ²)) / 2`, the negative eigenvalue of `[[μ, σ], [σ, 0]]`.
pub fn negative_upper(mu: f64, sigma_sq: f64) -> f64 {
    // written to avoid cancellation when σ² ≪ μ²
    let root = (mu * mu + 4.0 * sigma_sq).sqrt();
    if mu > 0.0 {
        -2.0 * sigma_sq / (mu + root)
    } else {
        (mu - root) / 2.0
    }
}

fn degenerate(min: f64, max: f64) -> bool {
    min <= DEGENERACY_TOL * max
}

/// Bounds on the spectrum of `K` from the ten block extremes.
pub fn bounds_unpreconditioned(x: &BlockExtremes) -> Result<BoundIntervals> {
    x.check()?;
    let q = named_params("q", x.mu_max_a, x.sigma_max_b, x.sigma_max_c, x.mu_min_d, x.mu_max_e)?;
    let r = named_params("r", x.mu_min_a, x.sigma_max_b, x.sigma_max_c, x.mu_max_d, x.mu_min_e)?;
    let b_degenerate = degenerate(x.sigma_min_b, x.sigma_max_b);
    let c_degenerate = degenerate(x.sigma_min_c, x.sigma_max_c);
    let mut cubics = vec![q.clone(), r.clone()];
    let pos_lo = if c_degenerate {
        0.0
    } else {
        let p = named_params("p", x.mu_min_a, x.sigma_max_b, x.sigma_min_c, x.mu_max_d, 0.0)?;
        let lo = p.roots.pos_min;
        cubics.insert(0, p);
        lo
    };
    let neg_hi = if b_degenerate {
        0.0
    } else {
        negative_upper(x.mu_max_a, x.sigma_min_b * x.sigma_min_b)
    };
    let mut out = BoundIntervals::intervals(
        Interval::new(r.roots.neg, neg_hi),
        Interval::new(pos_lo, q.roots.pos_max),
        Provenance::Unpreconditioned,
    );
    out.degenerate_interior = b_degenerate || c_degenerate;
    out.cubics = cubics;
    Ok(out)
}

/// Bounds for `D = E = 0`, with the cubics written out directly in their
/// reduced form rather than obtained by zeroing parameters.
pub fn bounds_k0(x: &BlockExtremes) -> Result<BoundIntervals> {
    x.check()?;
    let (sb2, sc2max, sc2min) = (
        x.sigma_max_b * x.sigma_max_b,
        x.sigma_max_c * x.sigma_max_c,
        x.sigma_min_c * x.sigma_min_c,
    );
    if sb2 <= 0.0 || sc2max <= 0.0 {
        return Err(Error::Parameter("B and C must be nonzero when D = E = 0".into()));
    }
    let q = named("q-hat", CubicPoly::new(-x.mu_max_a, -(sb2 + sc2max), x.mu_max_a * sc2max))?;
    let r = named("r-hat", CubicPoly::new(-x.mu_min_a, -(sb2 + sc2max), x.mu_min_a * sc2max))?;
    let b_degenerate = degenerate(x.sigma_min_b, x.sigma_max_b);
    let c_degenerate = degenerate(x.sigma_min_c, x.sigma_max_c);
    let mut cubics = vec![q.clone(), r.clone()];
    let pos_lo = if c_degenerate {
        0.0
    } else {
        let p = named("p-hat", CubicPoly::new(-x.mu_min_a, -(sb2 + sc2min), x.mu_min_a * sc2min))?;
        let lo = p.roots.pos_min;
        cubics.insert(0, p);
        lo
    };
    let neg_hi = if b_degenerate {
        0.0
    } else {
        negative_upper(x.mu_max_a, x.sigma_min_b * x.sigma_min_b)
    };
    let mut out = BoundIntervals::intervals(
        Interval::new(r.roots.neg, neg_hi),
        Interval::new(pos_lo, q.roots.pos_max),
        Provenance::Unregularized,
    );
    out.degenerate_interior = b_degenerate || c_degenerate;
    out.cubics = cubics;
    Ok(out)
}

/// Spectrum of `M^{-1} K` for the exact block-diagonal preconditioner.
pub fn bounds_precond_exact(case: ExactCase, dims: Dims) -> Result<BoundIntervals> {
    let Dims { n, m, p } = dims;
    if !(n >= m && m >= p && p >= 1) {
        return Err(Error::DimensionOrder { n, m, p });
    }
    let z = cubic::zeta();
    let zeta_cubic = named("zeta", CubicPoly::new(-1.0, -2.0, 1.0))?;
    let provenance = Provenance::ExactPreconditioner { case };
    let total = n + m + p;
    let mut out = match case {
        ExactCase::D0E0 => {
            let mut out = BoundIntervals::intervals(
                Interval::new(z.neg, GOLDEN_MINUS),
                Interval::new(z.pos_min, z.pos_max),
                provenance,
            );
            let list = [
                (z.neg, p),
                (GOLDEN_MINUS, m - p),
                (z.pos_min, p),
                (1.0, n - m),
                (GOLDEN_PLUS, m - p),
                (z.pos_max, p),
            ];
            out.discrete = Some(
                list.iter()
                    .filter(|(_, mult)| *mult > 0)
                    .map(|&(value, multiplicity)| DiscreteEigenvalue { value, multiplicity })
                    .collect(),
            );
            out.declared_count = Some(total);
            out
        }
        ExactCase::D0E { k } => {
            if k > p {
                return Err(Error::Parameter(format!("nullity k = {k} exceeds p = {p}")));
            }
            let mut out = BoundIntervals::intervals(
                Interval::new(z.neg, GOLDEN_MINUS),
                Interval::new(z.pos_min, z.pos_max),
                provenance,
            );
            let list = [(GOLDEN_MINUS, m - p + k), (1.0, n - m + k), (GOLDEN_PLUS, m - p + k)];
            out.discrete = Some(
                list.iter()
                    .filter(|(_, mult)| *mult > 0)
                    .map(|&(value, multiplicity)| DiscreteEigenvalue { value, multiplicity })
                    .collect(),
            );
            if p > k {
                let count = p - k;
                out.clusters = vec![
                    CountedInterval {
                        interval: Interval::new(z.neg, GOLDEN_MINUS),
                        closure: Closure::OpenHi,
                        count,
                    },
                    CountedInterval {
                        interval: Interval::new(z.pos_min, 1.0),
                        closure: Closure::OpenHi,
                        count,
                    },
                    CountedInterval {
                        interval: Interval::new(GOLDEN_PLUS, z.pos_max),
                        closure: Closure::OpenLo,
                        count,
                    },
                ];
            }
            out.declared_count = Some(total);
            out
        }
        ExactCase::DNonzero => BoundIntervals::intervals(
            Interval::new(-GOLDEN_PLUS, GOLDEN_MINUS),
            Interval::new(z.pos_min, z.pos_max),
            provenance,
        ),
    };
    out.cubics = vec![zeta_cubic];
    Ok(out)
}

/// Spectral-equivalence constants `Λ(Ã^{-1}A) ⊂ [α0, β0]`,
/// `Λ(S̃1^{-1}S1) ⊂ [α1, β1]`, `Λ(S̃2^{-1}S2) ⊂ [α2, β2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConstants {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

impl EquivalenceConstants {
    pub fn exact() -> Self {
        Self::uniform(1.0, 1.0)
    }

    pub fn uniform(alpha: f64, beta: f64) -> Self {
        Self {
            alpha0: alpha,
            beta0: beta,
            alpha1: alpha,
            beta1: beta,
            alpha2: alpha,
            beta2: beta,
        }
    }

    pub fn from_pairs(pairs: [(f64, f64); 3]) -> Self {
        Self {
            alpha0: pairs[0].0,
            beta0: pairs[0].1,
            alpha1: pairs[1].0,
            beta1: pairs[1].1,
            alpha2: pairs[2].0,
            beta2: pairs[2].1,
        }
    }

    pub fn pairs(&self) -> [(f64, f64); 3] {
        [(self.alpha0, self.beta0), (self.alpha1, self.beta1), (self.alpha2, self.beta2)]
    }

    pub fn check(&self) -> Result<()> {
        for (i, (a, b)) in self.pairs().into_iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::Parameter(format!("alpha{i}/beta{i} must be finite")));
            }
            if a <= 0.0 {
                return Err(Error::Parameter(format!("alpha{i} = {a} must be > 0")));
            }
            if a > 1.0 || b < 1.0 {
                return Err(Error::Parameter(format!(
                    "need alpha{i} <= 1 <= beta{i}, got [{a}, {b}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InexactCase {
    pub d_zero: bool,
    pub e_zero: bool,
}

/// Bounds on the spectrum of `M̃^{-1/2} K M̃^{-1/2}`. A zero `D` or `E`
/// selects the reduced cubics and forces the corresponding `η` to zero.
pub fn bounds_precond_inexact(
    consts: &EquivalenceConstants,
    eta_d: f64,
    eta_e: f64,
    case: InexactCase,
) -> Result<BoundIntervals> {
    consts.check()?;
    for (name, eta) in [("eta_D", eta_d), ("eta_E", eta_e)] {
        if eta.is_nan() || eta < 0.0 {
            return Err(Error::Parameter(format!("{name} = {eta} must be >= 0")));
        }
        if eta.is_infinite() {
            return Err(Error::Parameter(format!(
                "{name} is infinite: B and C must have full row rank"
            )));
        }
    }
    let EquivalenceConstants {
        alpha0: a0,
        beta0: b0,
        alpha1: a1,
        beta1: b1,
        alpha2: a2,
        beta2: b2,
    } = *consts;
    let eta_d = if case.d_zero { 0.0 } else { eta_d };
    let eta_e = if case.e_zero { 0.0 } else { eta_e };
    let c_lo = a1 * a2 / (1.0 + eta_e);

    let (u, v, w) = match (case.d_zero, case.e_zero) {
        (false, false) => (
            named("u", CubicPoly::new(b1 - a0, -(a0 * b1 + c_lo + b0 * b1), a0 * c_lo))?,
            named("v", CubicPoly::new(-(b0 + b2), b0 * b2 - b0 * b1 - b1 * b2, 2.0 * b0 * b1 * b2))?,
            named("w", CubicPoly::new(b1 - a0, -(a0 * b1 + b0 * b1 + b1 * b2), a0 * b1 * b2))?,
        ),
        (true, false) => (
            named("u-bar", CubicPoly::new(-a0, -(c_lo + b0 * b1), a0 * c_lo))?,
            named("v", CubicPoly::new(-(b0 + b2), b0 * b2 - b0 * b1 - b1 * b2, 2.0 * b0 * b1 * b2))?,
            named("w-bar", CubicPoly::new(-a0, -(b0 * b1 + b1 * b2), a0 * b1 * b2))?,
        ),
        (false, true) => (
            named("u-hat", CubicPoly::new(b1 - a0, -(a0 * b1 + a1 * a2 + b0 * b1), a0 * a1 * a2))?,
            named("v-hat", CubicPoly::new(-b0, -(b0 * b1 + b1 * b2), b0 * b1 * b2))?,
            named("w", CubicPoly::new(b1 - a0, -(a0 * b1 + b0 * b1 + b1 * b2), a0 * b1 * b2))?,
        ),
        (true, true) => (
            named("u-hat-bar", CubicPoly::new(-a0, -(a1 * a2 + b0 * b1), a0 * a1 * a2))?,
            named("v-hat", CubicPoly::new(-b0, -(b0 * b1 + b1 * b2), b0 * b1 * b2))?,
            named("w-bar", CubicPoly::new(-a0, -(b0 * b1 + b1 * b2), a0 * b1 * b2))?,
        ),
    };
    let neg_hi = negative_upper(b0, a0 * a1 / (1.0 + eta_d));
    let mut out = BoundIntervals::intervals(
        Interval::new(w.roots.neg, neg_hi),
        Interval::new(u.roots.pos_min, v.roots.pos_max),
        Provenance::InexactPreconditioner {
            d_zero: case.d_zero,
            e_zero: case.e_zero,
        },
    );
    out.auxiliary_negative_upper = Some(-a0 * a1 / b0);
    out.cubics = vec![u, v, w];
    Ok(out)
}

/// Block extremes of the split preconditioned matrix implied by the
/// equivalence constants and `η` values. Feeding these to
/// [`bounds_unpreconditioned`] reproduces [`bounds_precond_inexact`].
pub fn implied_block_extremes(consts: &EquivalenceConstants, eta_d: f64, eta_e: f64, case: InexactCase) -> BlockExtremes {
    let eta_d = if case.d_zero { 0.0 } else { eta_d };
    let eta_e = if case.e_zero { 0.0 } else { eta_e };
    let c = consts;
    BlockExtremes {
        mu_max_a: c.beta0,
        mu_min_a: c.alpha0,
        sigma_max_b: (c.beta0 * c.beta1).sqrt(),
        sigma_min_b: (c.alpha0 * c.alpha1 / (1.0 + eta_d)).sqrt(),
        sigma_max_c: (c.beta1 * c.beta2).sqrt(),
        sigma_min_c: (c.alpha1 * c.alpha2 / (1.0 + eta_e)).sqrt(),
        mu_max_d: if case.d_zero { 0.0 } else { c.beta1 },
        mu_min_d: 0.0,
        mu_max_e: if case.e_zero { 0.0 } else { c.beta2 },
        mu_min_e: 0.0,
    }
}
