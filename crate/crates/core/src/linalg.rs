//! Dense and compressed-row helpers shared by the spectral, preconditioner
//! and solver modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest absolute entry.
pub fn max_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest absolute entry of `m - m^T`.
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    m.is_square() && symmetry_defect(m) <= rel_tol * max_norm(m)
}

/// `(m + m^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending and eigenvector
/// columns permuted to match.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Cholesky factor, or a definiteness error naming `block`.
pub fn cholesky(m: &DMatrix<f64>, block: &str) -> Result<Cholesky<f64, Dyn>> {
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::definiteness(block))
}

/// `L^{-1} X` for a Cholesky factor `L`.
pub fn lower_solve(chol: &Cholesky<f64, Dyn>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    chol.l_dirty().solve_lower_triangular_mut(&mut out);
    out
}

/// Eigenvalues of the symmetric-definite pencil `a v = λ b v`, ascending.
///
/// `b` is reduced by its Cholesky factor: the returned values are the
/// eigenvalues of `L^{-1} a L^{-T}`.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>, b_name: &str) -> Result<Vec<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::Parameter(format!(
            "pencil shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let chol = cholesky(b, b_name)?;
    let half = lower_solve(&chol, a);
    let reduced = lower_solve(&chol, &half.transpose());
    Ok(sym_eigenvalues(&symmetrize(&reduced)))
}

/// Symmetric inverse square root through an eigendecomposition. Eigenvalues
/// below `floor_rel * λ_max` are raised to that floor.
pub fn inv_sqrt_spd(m: &DMatrix<f64>, floor_rel: f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(m);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let floor = (floor_rel * top).max(f64::MIN_POSITIVE);
    let scaled = DVector::from_iterator(values.len(), values.iter().map(|&v| 1.0 / v.max(floor).sqrt()));
    let mut left = vectors.clone();
    for (j, s) in scaled.iter().enumerate() {
        left.column_mut(j).scale_mut(*s);
    }
    symmetrize(&(left * vectors.transpose()))
}

/// Compressed sparse row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            out[(r, c)] += v;
        }
        out
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols);
        DVector::from_fn(self.nrows, |r, _| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(|k| self.values[k] * x[self.col_idx[k]])
                .sum()
        })
    }

    /// Largest absolute row sum; bounds the spectral norm of a symmetric matrix.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Square operator `x -> A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.mul_vec(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_sums_duplicates_and_round_trips() {
        let csr = CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 1, 0.5)]);
        assert_eq!(csr.nnz(), 2);
        let dense = csr.to_dense();
        assert_eq!(dense[(0, 1)], 1.5);
        assert_eq!(CsrMatrix::from_dense(&dense), csr);
        let y = csr.mul_vec(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert_eq!(y.as_slice(), &[3.0, 6.0]);
    }

    #[test]
    fn generalized_eigenvalues_of_scaled_pencil() {
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let ev = generalized_eigenvalues(&(&b * 3.0), &b, "b").unwrap();
        for v in ev {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_square_root_squares_to_inverse() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let r = inv_sqrt_spd(&m, 1e-14);
        let should_be_identity = &r * &m * &r;
        assert!((should_be_identity - DMatrix::identity(3, 3)).amax() < 1e-12);
    }
}
