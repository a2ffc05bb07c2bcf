//! Block-CSR kernels, incomplete factorisations and restarted GMRES.

use thiserror::Error;

mod gmres;
mod ilu;
mod jacobi;

pub use gmres::{gmres, GmresConfig, GmresReport};
pub use ilu::Ilu0Factors;
pub use jacobi::{BlockDiagonal, BlockJacobi};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular pivot block at block row {0}")]
    SingularPivot(usize),
    #[error("non-finite value in Krylov iteration")]
    NonFinite,
}

/// Action z = M⁻¹ r of a preconditioner.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Square block-sparse matrix with dense `bs × bs` row-major blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCsrMatrix {
    pub bs: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl BlockCsrMatrix {
    /// Zero matrix with the given block pattern. Column lists are sorted,
    /// deduplicated and the diagonal is always inserted.
    pub fn from_pattern(bs: usize, rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, cols) in rows.iter().enumerate() {
            let mut cols = cols.clone();
            cols.push(i);
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        let vals = vec![0.0; col_idx.len() * bs * bs];
        Self {
            bs,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn identity(n_blocks: usize, bs: usize) -> Self {
        let mut m = Self::from_pattern(bs, &vec![Vec::new(); n_blocks]);
        for i in 0..n_blocks {
            let blk = m.block_mut(i);
            for d in 0..bs {
                blk[d * bs + d] = 1.0;
            }
        }
        m
    }

    /// Builds from a dense row-major matrix, keeping nonzero blocks.
    pub fn from_dense(bs: usize, dense: &[f64], n: usize) -> Self {
        assert_eq!(n % bs, 0);
        let nb = n / bs;
        let rows: Vec<Vec<usize>> = (0..nb)
            .map(|bi| {
                (0..nb)
                    .filter(|&bj| (0..bs).any(|r| (0..bs).any(|c| dense[(bi * bs + r) * n + bj * bs + c] != 0.0)))
                    .collect()
            })
            .collect();
        let mut m = Self::from_pattern(bs, &rows);
        for bi in 0..nb {
            for pos in m.row_ptr[bi]..m.row_ptr[bi + 1] {
                let bj = m.col_idx[pos];
                for r in 0..bs {
                    for c in 0..bs {
                        m.vals[pos * bs * bs + r * bs + c] = dense[(bi * bs + r) * n + bj * bs + c];
                    }
                }
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let bs = self.bs;
        let mut d = vec![0.0; n * n];
        for bi in 0..self.n_blocks() {
            for pos in self.row_ptr[bi]..self.row_ptr[bi + 1] {
                let bj = self.col_idx[pos];
                for r in 0..bs {
                    for c in 0..bs {
                        d[(bi * bs + r) * n + bj * bs + c] = self.vals[pos * bs * bs + r * bs + c];
                    }
                }
            }
        }
        d
    }

    pub fn n_blocks(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.n_blocks() * self.bs
    }

    pub fn nnz_blocks(&self) -> usize {
        self.col_idx.len()
    }

    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        cols.binary_search(&col).ok().map(|k| self.row_ptr[row] + k)
    }

    pub fn block(&self, pos: usize) -> &[f64] {
        let b2 = self.bs * self.bs;
        &self.vals[pos * b2..(pos + 1) * b2]
    }

    pub fn block_at_mut(&mut self, pos: usize) -> &mut [f64] {
        let b2 = self.bs * self.bs;
        &mut self.vals[pos * b2..(pos + 1) * b2]
    }

    /// Diagonal block of block row `i`.
    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let pos = self.find(i, i).expect("diagonal block present");
        self.block_at_mut(pos)
    }

    pub fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn spmv(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError> {
        let n = self.dim();
        if x.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if y.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        self.spmv_unchecked(x, y);
        Ok(())
    }

    pub(crate) fn spmv_unchecked(&self, x: &[f64], y: &mut [f64]) {
        match self.bs {
            3 => self.spmv_fixed::<3>(x, y),
            2 => self.spmv_fixed::<2>(x, y),
            _ => self.spmv_generic(x, y),
        }
    }

    fn spmv_fixed<const B: usize>(&self, x: &[f64], y: &mut [f64]) {
        let b2 = B * B;
        for (bi, yi) in y.chunks_exact_mut(B).enumerate() {
            let mut acc = [0.0; B];
            for pos in self.row_ptr[bi]..self.row_ptr[bi + 1] {
                let c = self.col_idx[pos];
                let xj: &[f64; B] = x[c * B..(c + 1) * B].try_into().unwrap();
                let blk = &self.vals[pos * b2..(pos + 1) * b2];
                for r in 0..B {
                    for k in 0..B {
                        acc[r] += blk[r * B + k] * xj[k];
                    }
                }
            }
            yi.copy_from_slice(&acc);
        }
    }

    fn spmv_generic(&self, x: &[f64], y: &mut [f64]) {
        let bs = self.bs;
        let b2 = bs * bs;
        for bi in 0..self.n_blocks() {
            let yi = &mut y[bi * bs..(bi + 1) * bs];
            yi.iter_mut().for_each(|v| *v = 0.0);
            for pos in self.row_ptr[bi]..self.row_ptr[bi + 1] {
                let xj = &x[self.col_idx[pos] * bs..(self.col_idx[pos] + 1) * bs];
                let blk = &self.vals[pos * b2..(pos + 1) * b2];
                for r in 0..bs {
                    let row = &blk[r * bs..(r + 1) * bs];
                    yi[r] += row.iter().zip(xj).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }

    /// Multiplies every scalar row by `scale[row]`.
    pub fn scale_rows(&mut self, scale: &[f64]) {
        let bs = self.bs;
        let b2 = bs * bs;
        for bi in 0..self.n_blocks() {
            for pos in self.row_ptr[bi]..self.row_ptr[bi + 1] {
                for r in 0..bs {
                    let s = scale[bi * bs + r];
                    for v in &mut self.vals[pos * b2 + r * bs..pos * b2 + (r + 1) * bs] {
                        *v *= s;
                    }
                }
            }
        }
    }

    /// Submatrix on the given sorted block rows/columns, dropping couplings
    /// that leave the set.
    pub fn submatrix(&self, rows: &[usize]) -> BlockCsrMatrix {
        let mut local = vec![usize::MAX; self.n_blocks()];
        for (l, &g) in rows.iter().enumerate() {
            local[g] = l;
        }
        let bs = self.bs;
        let b2 = bs * bs;
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &g in rows {
            let mut entries: Vec<(usize, usize)> = (self.row_ptr[g]..self.row_ptr[g + 1])
                .filter(|&pos| local[self.col_idx[pos]] != usize::MAX)
                .map(|pos| (local[self.col_idx[pos]], pos))
                .collect();
            entries.sort_unstable();
            for (lc, pos) in entries {
                col_idx.push(lc);
                vals.extend_from_slice(&self.vals[pos * b2..(pos + 1) * b2]);
            }
            row_ptr.push(col_idx.len());
        }
        BlockCsrMatrix {
            bs,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

/// Dot product with four independent partial sums, so the loop vectorizes.
/// The summation order is fixed, so results are reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// y -= alpha * x
pub(crate) fn axpy_sub(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= alpha * xi;
    }
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// In-place inverse of a dense `n × n` row-major block by Gauss–Jordan with
/// partial pivoting. Returns false when singular.
pub(crate) fn invert_block(a: &mut [f64], n: usize) -> bool {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return false;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
            .unwrap();
        if a[piv * n + col].abs() <= 1e-14 * scale {
            return false;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let d = 1.0 / a[col * n + col];
        for k in 0..n {
            a[col * n + k] *= d;
            inv[col * n + k] *= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        a[r * n + k] -= f * a[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    a.copy_from_slice(&inv);
    true
}

/// c -= a · b for `n × n` row-major blocks.
pub(crate) fn block_mul_sub(c: &mut [f64], a: &[f64], b: &[f64], n: usize) {
    for r in 0..n {
        for k in 0..n {
            let ark = a[r * n + k];
            if ark != 0.0 {
                for j in 0..n {
                    c[r * n + j] -= ark * b[k * n + j];
                }
            }
        }
    }
}

pub(crate) fn block_mul(a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for r in 0..n {
        for k in 0..n {
            let ark = a[r * n + k];
            for j in 0..n {
                out[r * n + j] += ark * b[k * n + j];
            }
        }
    }
}

/// y -= a · x for an `n × n` block.
pub(crate) fn block_matvec_sub(y: &mut [f64], a: &[f64], x: &[f64], n: usize) {
    for r in 0..n {
        y[r] -= a[r * n..(r + 1) * n].iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    }
}

pub(crate) fn block_matvec(a: &[f64], x: &[f64], y: &mut [f64], n: usize) {
    for r in 0..n {
        y[r] = a[r * n..(r + 1) * n].iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    }
}
