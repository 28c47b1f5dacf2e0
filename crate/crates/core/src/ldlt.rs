//! Bunch–Kaufman symmetric-indefinite factorization, used only to read off
//! the inertia of the block-diagonal factor.

use nalgebra::DMatrix;

use crate::spectral::Inertia;

const BK_ALPHA: f64 = 0.640_388_203_202_208_4; // (1 + sqrt(17)) / 8

/// Lower-triangle-only dense workspace.
struct Lower {
    n: usize,
    data: Vec<f64>,
}

impl Lower {
    fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                data[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
            }
        }
        Self { n, data }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        if i >= j {
            i * self.n + j
        } else {
            j * self.n + i
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    fn swap(&mut self, a: (usize, usize), b: (usize, usize)) {
        let (ia, ib) = (self.idx(a.0, a.1), self.idx(b.0, b.1));
        self.data.swap(ia, ib);
    }

    /// Symmetric interchange of indices `r < s` on the trailing block `>= k`.
    fn interchange(&mut self, k: usize, r: usize, s: usize) {
        for t in k..self.n {
            if t != r && t != s {
                self.swap((r, t), (s, t));
            }
        }
        self.swap((r, r), (s, s));
    }
}

/// Inertia from a pivoted `L D L^T` factorization. Returns `None` when a
/// pivot (or a 2×2 pivot eigenvalue) is no larger than `zero_thresh`; the
/// caller then falls back to an eigenvalue count.
pub fn bunch_kaufman_inertia(m: &DMatrix<f64>, zero_thresh: f64) -> Option<Inertia> {
    let n = m.nrows();
    let mut w = Lower::new(m);
    let mut inertia = Inertia::default();
    let mut col = vec![0.0; n];
    let mut col2 = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let absakk = w.get(k, k).abs();
        let (mut imax, mut colmax) = (k, 0.0_f64);
        for i in (k + 1)..n {
            let v = w.get(i, k).abs();
            if v > colmax {
                colmax = v;
                imax = i;
            }
        }
        if absakk.max(colmax) <= zero_thresh {
            return None;
        }
        let (pivot, size) = if absakk >= BK_ALPHA * colmax {
            (k, 1)
        } else {
            let rowmax = (k..n)
                .filter(|&j| j != imax)
                .map(|j| w.get(imax, j).abs())
                .fold(0.0_f64, f64::max);
            if absakk * rowmax >= BK_ALPHA * colmax * colmax {
                (k, 1)
            } else if w.get(imax, imax).abs() >= BK_ALPHA * rowmax {
                (imax, 1)
            } else {
                (imax, 2)
            }
        };
        let kk = k + size - 1;
        if pivot != kk {
            w.interchange(k, kk, pivot);
        }

        if size == 1 {
            let d = w.get(k, k);
            if d.abs() <= zero_thresh {
                return None;
            }
            if d > 0.0 {
                inertia.n_plus += 1;
            } else {
                inertia.n_minus += 1;
            }
            for (j, c) in col.iter_mut().enumerate().skip(k + 1) {
                *c = w.get(j, k);
            }
            for i in (k + 1)..n {
                let l = col[i] / d;
                if l == 0.0 {
                    continue;
                }
                let row = &mut w.data[i * n..i * n + i + 1];
                for j in (k + 1)..=i {
                    row[j] -= l * col[j];
                }
            }
        } else {
            let (d11, d21, d22) = (w.get(k, k), w.get(k + 1, k), w.get(k + 1, k + 1));
            let half_tr = 0.5 * (d11 + d22);
            let rad = (0.25 * (d11 - d22) * (d11 - d22) + d21 * d21).sqrt();
            for ev in [half_tr - rad, half_tr + rad] {
                if ev.abs() <= zero_thresh {
                    return None;
                }
                if ev > 0.0 {
                    inertia.n_plus += 1;
                } else {
                    inertia.n_minus += 1;
                }
            }
            let det = d11 * d22 - d21 * d21;
            for j in (k + 2)..n {
                col[j] = w.get(j, k);
                col2[j] = w.get(j, k + 1);
            }
            for i in (k + 2)..n {
                // [l1 l2] = [a_ik a_ik1] D^{-1}
                let l1 = (col[i] * d22 - col2[i] * d21) / det;
                let l2 = (col2[i] * d11 - col[i] * d21) / det;
                let row = &mut w.data[i * n..i * n + i + 1];
                for j in (k + 2)..=i {
                    row[j] -= l1 * col[j] + l2 * col2[j];
                }
            }
        }
        k += size;
    }
    Some(inertia)
}
