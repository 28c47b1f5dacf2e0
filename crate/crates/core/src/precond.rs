//! Block-diagonal Schur-complement preconditioners, exact and approximate,
//! with their spectral-equivalence constants.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::bounds::EquivalenceConstants;
use crate::error::{Error, Result};
use crate::linalg::{self, LinearOperator};
use crate::spectral::{self, SpectralConfig};
use crate::system::{DoubleSaddleSystem, Dims};

/// Eigenvalue floor, relative to `λ_max`, used for inverse square roots.
pub const INV_SQRT_FLOOR: f64 = 1e-14;

/// Relative slack allowed when checking a measured interval against the
/// constants a strategy declares.
pub const DECLARED_SLACK: f64 = 1e-6;

const BLOCK_NAMES: [&str; 3] = ["A", "S1", "S2"];

/// How one diagonal block of the preconditioner is formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy", content = "value")]
pub enum BlockStrategy {
    Exact,
    /// Diagonal of the exact block.
    Jacobi,
    /// Mean diagonal entry of the exact block times the identity.
    IdentityScaled,
    /// The exact block multiplied by a positive factor.
    Scaled(f64),
    /// `(M + √β K) M^{-1} (M + √β K)` for distributed control in flipped
    /// roles (third block only).
    PearsonWathen,
    /// The `E` block alone (third block only).
    DropTerm,
    /// Caller-supplied SPD matrix.
    User(#[serde(skip)] DMatrix<f64>),
}

impl BlockStrategy {
    pub fn name(&self) -> String {
        match self {
            BlockStrategy::Exact => "exact".into(),
            BlockStrategy::Jacobi => "jacobi".into(),
            BlockStrategy::IdentityScaled => "identity-scaled".into(),
            BlockStrategy::Scaled(t) => format!("scaled({t})"),
            BlockStrategy::PearsonWathen => "pearson-wathen".into(),
            BlockStrategy::DropTerm => "drop-term".into(),
            BlockStrategy::User(_) => "user".into(),
        }
    }

    /// Equivalence interval the strategy is known to satisfy, if any.
    pub fn declared_constants(&self) -> Option<(f64, f64)> {
        match self {
            BlockStrategy::Exact => Some((1.0, 1.0)),
            BlockStrategy::PearsonWathen => Some((0.5, 1.0)),
            _ => None,
        }
    }
}

/// Measured spectral equivalence between an exact block and its
/// approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEquivalence {
    /// Extremes of `Λ(approx^{-1} exact)` before rescaling.
    pub raw_min: f64,
    pub raw_max: f64,
    /// Factor applied to the approximation so the interval straddles 1.
    pub scale: f64,
    pub alpha: f64,
    pub beta: f64,
    /// True when `(alpha, beta)` are the strategy's declared constants
    /// rather than the normalized measurement.
    pub declared: bool,
}

/// Extremal generalized eigenvalues of `exact v = λ approx v`, normalized by
/// rescaling `approx` so that `α ≤ 1 ≤ β`.
pub fn equivalence_constants(exact: &DMatrix<f64>, approx: &DMatrix<f64>) -> Result<BlockEquivalence> {
    let ev = linalg::generalized_eigenvalues(exact, approx, "approximate block")?;
    let (raw_min, raw_max) = (ev[0], ev[ev.len() - 1]);
    if raw_min <= 0.0 {
        return Err(Error::definiteness("exact block"));
    }
    let scale = if raw_max < 1.0 {
        raw_max
    } else if raw_min > 1.0 {
        raw_min
    } else {
        1.0
    };
    Ok(BlockEquivalence {
        raw_min,
        raw_max,
        scale,
        alpha: (raw_min / scale).min(1.0),
        beta: (raw_max / scale).max(1.0),
        declared: false,
    })
}

#[derive(Debug, Clone)]
pub struct PrecondBlock {
    pub matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl PrecondBlock {
    fn new(matrix: DMatrix<f64>, name: &str) -> Result<Self> {
        let matrix = linalg::symmetrize(&matrix);
        let chol = linalg::cholesky(&matrix, name)?;
        Ok(Self { matrix, chol })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }
}

/// `diag(Ã, S̃1, S̃2)` in the standard `(x, y, z)` ordering.
#[derive(Debug, Clone)]
pub struct PreconditionerOperator {
    pub blocks: [PrecondBlock; 3],
    pub strategies: [BlockStrategy; 3],
    pub equivalence: [BlockEquivalence; 3],
    pub dims: Dims,
}

impl PreconditionerOperator {
    pub fn is_exact(&self) -> bool {
        self.strategies.iter().all(|s| *s == BlockStrategy::Exact)
    }

    pub fn constants(&self) -> EquivalenceConstants {
        EquivalenceConstants::from_pairs(self.equivalence.map(|e| (e.alpha, e.beta)))
    }

    fn ranges(&self) -> [std::ops::Range<usize>; 3] {
        let Dims { n, m, p } = self.dims;
        [0..n, n..n + m, n + m..n + m + p]
    }

    fn check_len(&self, v: &DVector<f64>) {
        assert_eq!(v.len(), self.dims.total(), "vector length does not match preconditioner");
    }

    /// `M̃^{-1} v` by blockwise Cholesky solves.
    pub fn apply_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        self.check_len(v);
        let mut out = DVector::zeros(v.len());
        for (block, r) in self.blocks.iter().zip(self.ranges()) {
            let part = block.solve(&v.rows(r.start, r.len()).into_owned());
            out.rows_mut(r.start, r.len()).copy_from(&part);
        }
        out
    }

    /// `M̃ v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.check_len(v);
        let mut out = DVector::zeros(v.len());
        for (block, r) in self.blocks.iter().zip(self.ranges()) {
            let part = &block.matrix * v.rows(r.start, r.len());
            out.rows_mut(r.start, r.len()).copy_from(&part);
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let total = self.dims.total();
        let mut out = DMatrix::zeros(total, total);
        for (block, r) in self.blocks.iter().zip(self.ranges()) {
            out.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&block.matrix);
        }
        out
    }
}

/// The exact blocks `A`, `S1 = D + B A^{-1} B^T`, `S2 = E + C S1^{-1} C^T`.
pub fn exact_blocks(system: &DoubleSaddleSystem) -> Result<[DMatrix<f64>; 3]> {
    let schur = spectral::schur_complements(system, crate::system::Tolerances::default().rank_tol)?;
    Ok([linalg::symmetrize(system.a()), schur.s1, schur.s2])
}

pub fn build_exact(system: &DoubleSaddleSystem) -> Result<PreconditionerOperator> {
    build_approx(system, [BlockStrategy::Exact, BlockStrategy::Exact, BlockStrategy::Exact])
}

/// Distributed-control structure in flipped roles: `A = βM`, `B = -M`,
/// `C = K` symmetric, `E = M`. Returns `(M, K, β)`.
fn distributed_structure(system: &DoubleSaddleSystem) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let mismatch = |reason: &str| Error::StrategyMismatch {
        strategy: "pearson-wathen".into(),
        reason: reason.into(),
    };
    let Dims { n, m, p } = system.dims();
    if !(n == m && m == p) {
        return Err(mismatch("blocks are not square"));
    }
    let mass = system.e();
    let scale = linalg::max_norm(mass);
    if scale == 0.0 {
        return Err(mismatch("E is zero"));
    }
    let tol = 1e-12;
    if linalg::max_norm(&(system.b() + mass)) > tol * scale {
        return Err(mismatch("B is not -E"));
    }
    let beta = system.a().trace() / mass.trace();
    if !(beta > 0.0) || linalg::max_norm(&(system.a() - mass * beta)) > tol * linalg::max_norm(system.a()) {
        return Err(mismatch("A is not a positive multiple of E"));
    }
    if !linalg::is_symmetric(system.c(), tol) {
        return Err(mismatch("C is not symmetric"));
    }
    Ok((mass.clone(), system.c().clone(), beta))
}

fn pearson_wathen(system: &DoubleSaddleSystem) -> Result<DMatrix<f64>> {
    let (mass, stiff, beta) = distributed_structure(system)?;
    let chol = linalg::cholesky(&mass, "M")?;
    let f = linalg::lower_solve(&chol, &(&mass + stiff * beta.sqrt()));
    Ok(linalg::symmetrize(&(f.transpose() * f)))
}

fn approximate_block(
    system: &DoubleSaddleSystem,
    index: usize,
    exact: &DMatrix<f64>,
    strategy: &BlockStrategy,
) -> Result<DMatrix<f64>> {
    let third_only = |name: &str| Error::StrategyMismatch {
        strategy: name.into(),
        reason: format!("only applies to S2, not {}", BLOCK_NAMES[index]),
    };
    match strategy {
        BlockStrategy::Exact => Ok(exact.clone()),
        BlockStrategy::Jacobi => Ok(DMatrix::from_diagonal(&exact.diagonal())),
        BlockStrategy::IdentityScaled => {
            let k = exact.nrows();
            Ok(DMatrix::identity(k, k) * (exact.trace() / k as f64))
        }
        BlockStrategy::Scaled(t) => {
            if !(*t > 0.0 && t.is_finite()) {
                return Err(Error::Parameter(format!("scale factor {t} must be positive")));
            }
            Ok(exact * *t)
        }
        BlockStrategy::PearsonWathen => {
            if index != 2 {
                return Err(third_only("pearson-wathen"));
            }
            pearson_wathen(system)
        }
        BlockStrategy::DropTerm => {
            if index != 2 {
                return Err(third_only("drop-term"));
            }
            let e = linalg::symmetrize(system.e());
            linalg::cholesky(&e, "E")?;
            Ok(e)
        }
        BlockStrategy::User(m) => {
            if m.shape() != exact.shape() {
                return Err(Error::Dimension {
                    block: BLOCK_NAMES[index],
                    expected_rows: exact.nrows(),
                    expected_cols: exact.ncols(),
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
            Ok(m.clone())
        }
    }
}

/// Builds `diag(Ã, S̃1, S̃2)` from one strategy per block.
///
/// Each approximation is compared with its exact block. When the strategy
/// declares constants and the measured interval lies inside them, the
/// declared constants are kept and the block is used as built. Otherwise the
/// block is rescaled so the measured interval straddles 1 and the normalized
/// measurement becomes `(α, β)`.
pub fn build_approx(system: &DoubleSaddleSystem, strategies: [BlockStrategy; 3]) -> Result<PreconditionerOperator> {
    let exact = exact_blocks(system)?;
    let mut blocks = Vec::with_capacity(3);
    let mut equivalence = Vec::with_capacity(3);
    for (i, strategy) in strategies.iter().enumerate() {
        let approx = approximate_block(system, i, &exact[i], strategy)?;
        let approx = linalg::symmetrize(&approx);
        linalg::cholesky(&approx, BLOCK_NAMES[i])?;
        let mut eq = if *strategy == BlockStrategy::Exact {
            BlockEquivalence {
                raw_min: 1.0,
                raw_max: 1.0,
                scale: 1.0,
                alpha: 1.0,
                beta: 1.0,
                declared: true,
            }
        } else {
            equivalence_constants(&exact[i], &approx)?
        };
        if let Some((lo, hi)) = strategy.declared_constants() {
            if !eq.declared && eq.raw_min >= lo * (1.0 - DECLARED_SLACK) && eq.raw_max <= hi * (1.0 + DECLARED_SLACK) {
                eq = BlockEquivalence {
                    scale: 1.0,
                    alpha: lo,
                    beta: hi,
                    declared: true,
                    ..eq
                };
            }
        }
        blocks.push(PrecondBlock::new(approx * eq.scale, BLOCK_NAMES[i])?);
        equivalence.push(eq);
    }
    let blocks: [PrecondBlock; 3] = blocks.try_into().expect("three blocks");
    let equivalence: [BlockEquivalence; 3] = equivalence.try_into().expect("three blocks");
    Ok(PreconditionerOperator {
        blocks,
        strategies,
        equivalence,
        dims: system.dims(),
    })
}

impl LinearOperator for PreconditionerOperator {
    fn dim(&self) -> usize {
        self.dims.total()
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        PreconditionerOperator::apply(self, v)
    }
}

/// `M̃^{-1/2} K M̃^{-1/2}`, kept both as the five transformed blocks and as
/// the assembled dense matrix.
#[derive(Debug, Clone)]
pub struct SplitPreconditioned {
    pub blocks: DoubleSaddleSystem,
    pub matrix: DMatrix<f64>,
}

pub fn split_preconditioned_matrix(
    system: &DoubleSaddleSystem,
    op: &PreconditionerOperator,
    cfg: &SpectralConfig,
) -> Result<SplitPreconditioned> {
    let dim = system.dims().total();
    if dim > cfg.oracle_cutoff {
        return Err(Error::OverCutoff {
            dim,
            cutoff: cfg.oracle_cutoff,
        });
    }
    let [ra, rs1, rs2] = [0, 1, 2].map(|i| linalg::inv_sqrt_spd(&op.blocks[i].matrix, INV_SQRT_FLOOR));
    let q0 = linalg::symmetrize(&(&ra * system.a() * &ra));
    let bt = &rs1 * system.b() * &ra;
    let ct = &rs2 * system.c() * &rs1;
    let dt = linalg::symmetrize(&(&rs1 * system.d() * &rs1));
    let et = linalg::symmetrize(&(&rs2 * system.e() * &rs2));
    let blocks = DoubleSaddleSystem::new(q0, bt, ct, dt, et)?;
    let matrix = blocks.assemble(crate::system::Layout::Standard)?.to_dense();
    Ok(SplitPreconditioned { blocks, matrix })
}
