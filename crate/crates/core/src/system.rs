//! Block data model of the double saddle-point matrix
//!
//! ```text
//!     [ A   B^T  0  ]
//! K = [ B   -D   C^T]
//!     [ 0   C    E  ]
//! ```
//!
//! with `A` (n×n) symmetric positive definite, `D` (m×m) and `E` (p×p)
//! symmetric positive semidefinite, `B` (m×n) and `C` (p×m).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix, LinearOperator};

/// Assembled matrices up to this total dimension are kept dense.
pub const DENSE_CUTOFF: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative (max-norm) symmetry and definiteness tolerance.
    pub sym_tol: f64,
    /// Singular values below `rank_tol * σ_max` count as zero.
    pub rank_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym_tol: 1e-12,
            rank_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

impl Dims {
    pub fn total(&self) -> usize {
        self.n + self.m + self.p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSaddleSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    e: DMatrix<f64>,
    dims: Dims,
}

fn check_shape(block: &'static str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Dimension {
            block,
            expected_rows: rows,
            expected_cols: cols,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

impl DoubleSaddleSystem {
    /// Dimensions are read from `A` (n), `B` (m) and `C` (p); every other
    /// block is checked against them.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        e: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.nrows();
        let p = c.nrows();
        check_shape("A", &a, n, n)?;
        check_shape("B", &b, m, n)?;
        check_shape("C", &c, p, m)?;
        check_shape("D", &d, m, m)?;
        check_shape("E", &e, p, p)?;
        if !(n >= m && m >= p && p >= 1) {
            return Err(Error::DimensionOrder { n, m, p });
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            e,
            dims: Dims { n, m, p },
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn d_is_zero(&self) -> bool {
        linalg::max_norm(&self.d) == 0.0
    }

    pub fn e_is_zero(&self) -> bool {
        linalg::max_norm(&self.e) == 0.0
    }

    /// Copy with `D` and `E` replaced by zero blocks.
    pub fn unregularized(&self) -> Self {
        let Dims { m, p, .. } = self.dims;
        Self {
            d: DMatrix::zeros(m, m),
            e: DMatrix::zeros(p, p),
            ..self.clone()
        }
    }

    /// Copy with `D` replaced; shape must match.
    pub fn with_d(&self, d: DMatrix<f64>) -> Result<Self> {
        check_shape("D", &d, self.dims.m, self.dims.m)?;
        Ok(Self { d, ..self.clone() })
    }

    /// Copy with `E` replaced; shape must match.
    pub fn with_e(&self, e: DMatrix<f64>) -> Result<Self> {
        check_shape("E", &e, self.dims.p, self.dims.p)?;
        Ok(Self { e, ..self.clone() })
    }

    pub fn assemble(&self, layout: Layout) -> Result<AssembledMatrix> {
        assemble(self, layout)
    }
}

/// Free-function form of [`DoubleSaddleSystem::unregularized`].
pub fn unregularized(system: &DoubleSaddleSystem) -> DoubleSaddleSystem {
    system.unregularized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Unknowns ordered `(x, y, z)`.
    Standard,
    /// Unknowns ordered `(z, y, x)`; only for square blocks.
    Flipped,
    /// Unknowns ordered `(x, z, y)`: `[[A, 0, B^T], [0, E, C], [B, C^T, -D]]`.
    TwoByTwo,
}

impl Layout {
    pub fn name(&self) -> &'static str {
        match self {
            Layout::Standard => "standard",
            Layout::Flipped => "flipped",
            Layout::TwoByTwo => "two-by-two",
        }
    }
}

/// Starting row of each unknown block in an assembled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOffsets {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl BlockOffsets {
    fn for_layout(dims: Dims, layout: Layout) -> Self {
        let Dims { n, m, p } = dims;
        match layout {
            Layout::Standard => Self { x: 0, y: n, z: n + m },
            Layout::Flipped => Self { z: 0, y: p, x: p + m },
            Layout::TwoByTwo => Self { x: 0, z: n, y: n + p },
        }
    }
}

#[derive(Debug, Clone)]
pub enum MatrixData {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl MatrixData {
    pub fn dim(&self) -> usize {
        match self {
            MatrixData::Dense(m) => m.nrows(),
            MatrixData::Sparse(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            MatrixData::Dense(m) => m.clone(),
            MatrixData::Sparse(m) => m.to_dense(),
        }
    }
}

impl LinearOperator for MatrixData {
    fn dim(&self) -> usize {
        MatrixData::dim(self)
    }

    fn apply(&self, x: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        match self {
            MatrixData::Dense(m) => m * x,
            MatrixData::Sparse(m) => m.mul_vec(x),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssembledMatrix {
    pub data: MatrixData,
    pub layout: Layout,
    pub block_offsets: BlockOffsets,
}

impl AssembledMatrix {
    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.data.to_dense()
    }
}

impl LinearOperator for AssembledMatrix {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn apply(&self, x: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        self.data.apply(x)
    }
}

/// Pushes `(r, c, v)` and its mirror `(c, r, v)`.
fn push_mirrored(out: &mut Vec<(usize, usize, f64)>, r: usize, c: usize, v: f64) {
    if v == 0.0 {
        return;
    }
    out.push((r, c, v));
    if r != c {
        out.push((c, r, v));
    }
}

/// Diagonal block from its lower triangle (symmetric part only).
fn push_symmetric_block(out: &mut Vec<(usize, usize, f64)>, m: &DMatrix<f64>, r0: usize, sign: f64) {
    for j in 0..m.ncols() {
        for i in j..m.nrows() {
            let v = if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) };
            push_mirrored(out, r0 + i, r0 + j, sign * v);
        }
    }
}

fn push_coupling_block(out: &mut Vec<(usize, usize, f64)>, m: &DMatrix<f64>, r0: usize, c0: usize) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            push_mirrored(out, r0 + i, c0 + j, m[(i, j)]);
        }
    }
}

/// Entries of the assembled matrix; symmetric by construction.
fn block_entries(system: &DoubleSaddleSystem, off: BlockOffsets) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    push_symmetric_block(&mut out, &system.a, off.x, 1.0);
    push_symmetric_block(&mut out, &system.d, off.y, -1.0);
    push_symmetric_block(&mut out, &system.e, off.z, 1.0);
    push_coupling_block(&mut out, &system.b, off.y, off.x);
    push_coupling_block(&mut out, &system.c, off.z, off.y);
    out
}

/// Assembles the symmetric matrix in the requested unknown ordering.
pub fn assemble(system: &DoubleSaddleSystem, layout: Layout) -> Result<AssembledMatrix> {
    let dims = system.dims;
    if layout == Layout::Flipped && !(dims.n == dims.m && dims.m == dims.p) {
        return Err(Error::UnsupportedLayout("flipped"));
    }
    let offsets = BlockOffsets::for_layout(dims, layout);
    let total = dims.total();
    let entries = block_entries(system, offsets);
    let data = if total <= DENSE_CUTOFF {
        let mut m = DMatrix::zeros(total, total);
        for (r, c, v) in entries {
            m[(r, c)] = v;
        }
        MatrixData::Dense(m)
    } else {
        MatrixData::Sparse(CsrMatrix::from_triplets(total, total, &entries))
    };
    Ok(AssembledMatrix {
        data,
        layout,
        block_offsets: offsets,
    })
}

/// Per-block flags for the symmetric blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFlags {
    pub a: bool,
    pub d: bool,
    pub e: bool,
}

impl BlockFlags {
    pub fn all(&self) -> bool {
        self.a && self.d && self.e
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub symmetric_ok: BlockFlags,
    /// `A` positive definite, `D` and `E` positive semidefinite.
    pub definiteness_ok: BlockFlags,
    /// Trivial intersections `ker A ∩ ker B`, `ker B^T ∩ ker D ∩ ker C`,
    /// `ker C^T ∩ ker E`.
    pub kernel_conditions: [bool; 3],
    /// Positive definiteness of `S1 = D + B A^{-1} B^T` and
    /// `S2 = E + C S1^{-1} C^T`.
    pub schur_definite: [bool; 2],
    pub b_full_row_rank: bool,
    pub c_full_row_rank: bool,
    /// Nullity of `C^T`, i.e. `p - rank(C)`.
    pub c_nullity_k: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.symmetric_ok.all()
            && self.definiteness_ok.all()
            && self.kernel_conditions.iter().all(|&k| k)
            && self.schur_definite.iter().all(|&s| s)
    }
}

pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>, rank_tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rank_tol * top).count()
}

fn stacked(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts[0].ncols();
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for part in parts {
        out.view_mut((r0, 0), (part.nrows(), cols)).copy_from(*part);
        r0 += part.nrows();
    }
    out
}

fn spectral_norm_sym(ev: &[f64]) -> f64 {
    ev.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn is_positive_definite(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let ev = linalg::sym_eigenvalues(m);
    let norm = spectral_norm_sym(&ev);
    norm > 0.0 && ev[0] > rel_tol * norm
}

fn is_positive_semidefinite(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let ev = linalg::sym_eigenvalues(m);
    ev.first().is_none_or(|&lo| lo >= -rel_tol * spectral_norm_sym(&ev))
}

/// Checks every structural assumption on the blocks.
pub fn validate(system: &DoubleSaddleSystem, tol: &Tolerances) -> ValidationReport {
    let Dims { n: _, m, p } = system.dims;
    let symmetric_ok = BlockFlags {
        a: linalg::is_symmetric(&system.a, tol.sym_tol),
        d: linalg::is_symmetric(&system.d, tol.sym_tol),
        e: linalg::is_symmetric(&system.e, tol.sym_tol),
    };
    let a_sym = linalg::symmetrize(&system.a);
    let d_sym = linalg::symmetrize(&system.d);
    let e_sym = linalg::symmetrize(&system.e);
    let definiteness_ok = BlockFlags {
        a: is_positive_definite(&a_sym, tol.sym_tol),
        d: is_positive_semidefinite(&d_sym, tol.sym_tol),
        e: is_positive_semidefinite(&e_sym, tol.sym_tol),
    };

    let bt = system.b.transpose();
    let ct = system.c.transpose();
    let rank_b = numerical_rank(&system.b, tol.rank_tol);
    let rank_c = numerical_rank(&system.c, tol.rank_tol);

    // A stacked matrix has full column rank as soon as one part does, so
    // the SVD of the stack is only needed when no part settles it.
    let kernel_conditions = [
        definiteness_ok.a && symmetric_ok.a
            || numerical_rank(&stacked(&[&a_sym, &system.b]), tol.rank_tol) == system.dims.n,
        rank_b == m || numerical_rank(&stacked(&[&bt, &d_sym, &system.c]), tol.rank_tol) == m,
        rank_c == p || numerical_rank(&stacked(&[&ct, &e_sym]), tol.rank_tol) == p,
    ];

    let mut schur_definite = [false, false];
    if let Some(chol_a) = a_sym.clone().cholesky() {
        let w = linalg::lower_solve(&chol_a, &bt);
        let s1 = linalg::symmetrize(&(&d_sym + w.transpose() * &w));
        if is_positive_definite(&s1, tol.sym_tol) {
            schur_definite[0] = true;
            if let Some(chol_s1) = s1.cholesky() {
                let v = linalg::lower_solve(&chol_s1, &ct);
                let s2 = linalg::symmetrize(&(&e_sym + v.transpose() * &v));
                schur_definite[1] = is_positive_definite(&s2, tol.sym_tol);
            }
        }
    }

    ValidationReport {
        symmetric_ok,
        definiteness_ok,
        kernel_conditions,
        schur_definite,
        b_full_row_rank: rank_b == m,
        c_full_row_rank: rank_c == p,
        c_nullity_k: p - rank_c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn identity_blocks_pass_every_check() {
        let s = DoubleSaddleSystem::new(
            DMatrix::identity(2, 2),
            mat(1, 2, &[1.0, 0.0]),
            mat(1, 1, &[1.0]),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let r = validate(&s, &Tolerances::default());
        assert!(r.is_valid());
        assert_eq!(r.c_nullity_k, 0);
        assert!(r.b_full_row_rank && r.c_full_row_rank);
    }

    #[test]
    fn zero_coupling_breaks_schur_and_kernel_condition() {
        let s = DoubleSaddleSystem::new(
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let r = validate(&s, &Tolerances::default());
        assert_eq!(r.schur_definite, [false, false]);
        assert!(!r.kernel_conditions[1]);
        assert!(!r.is_valid());
    }

    #[test]
    fn zero_c_forces_s2_equal_e() {
        let s = DoubleSaddleSystem::new(
            DMatrix::from_diagonal_element(2, 2, 2.0),
            DMatrix::identity(2, 2),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 2),
            mat(1, 1, &[1.0]),
        )
        .unwrap();
        let r = validate(&s, &Tolerances::default());
        assert!(!r.c_full_row_rank);
        assert_eq!(r.c_nullity_k, 1);
        assert_eq!(r.schur_definite, [true, true]);
        assert!(r.kernel_conditions.iter().all(|&k| k));
    }

    #[test]
    fn mismatched_block_is_named() {
        let err = DoubleSaddleSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension { block: "D", .. }), "{err}");
    }

    #[test]
    fn scalar_system_assembles_to_three_by_three() {
        let (a, b, c, d, e) = (2.0, 3.0, 5.0, 7.0, 11.0);
        let s = DoubleSaddleSystem::new(
            mat(1, 1, &[a]),
            mat(1, 1, &[b]),
            mat(1, 1, &[c]),
            mat(1, 1, &[d]),
            mat(1, 1, &[e]),
        )
        .unwrap();
        let k = s.assemble(Layout::Standard).unwrap().to_dense();
        assert_eq!(k, mat(3, 3, &[a, b, 0.0, b, -d, c, 0.0, c, e]));
        let f = s.assemble(Layout::Flipped).unwrap().to_dense();
        assert_eq!(f, mat(3, 3, &[e, c, 0.0, c, -d, b, 0.0, b, a]));
        let t = s.assemble(Layout::TwoByTwo).unwrap().to_dense();
        assert_eq!(t, mat(3, 3, &[a, 0.0, b, 0.0, e, c, b, c, -d]));
    }

    #[test]
    fn flipped_needs_square_blocks() {
        let s = DoubleSaddleSystem::new(
            DMatrix::identity(2, 2),
            mat(1, 2, &[1.0, 0.0]),
            mat(1, 1, &[1.0]),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(
            s.assemble(Layout::Flipped),
            Err(Error::UnsupportedLayout(_))
        ));
    }

    #[test]
    fn unregularized_is_idempotent_and_zeroes_diagonal_blocks() {
        let s = DoubleSaddleSystem::new(
            DMatrix::identity(2, 2),
            mat(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            mat(1, 2, &[1.0, 1.0]),
            DMatrix::identity(2, 2),
            mat(1, 1, &[3.0]),
        )
        .unwrap();
        let u = unregularized(&s);
        assert!(u.d_is_zero() && u.e_is_zero());
        assert_eq!(unregularized(&u), u);
        let mut expected = s.assemble(Layout::Standard).unwrap().to_dense();
        for i in 2..5 {
            expected[(i, i)] = 0.0;
        }
        assert_eq!(u.assemble(Layout::Standard).unwrap().to_dense(), expected);
    }
}
