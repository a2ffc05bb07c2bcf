use super::{block_matvec, invert_block, BlockCsrMatrix, Ilu0Factors, LinalgError, Preconditioner};

/// Block Jacobi over a partition of the block rows, with ILU(0) on each
/// diagonal sub-block. Couplings between parts are ignored.
#[derive(Debug, Clone)]
pub struct BlockJacobi {
    bs: usize,
    parts: Vec<(Vec<usize>, Ilu0Factors)>,
}

impl BlockJacobi {
    /// `parts` must cover every block row exactly once.
    pub fn new(a: &BlockCsrMatrix, parts: &[Vec<usize>]) -> Result<Self, LinalgError> {
        let covered: usize = parts.iter().map(Vec::len).sum();
        if covered != a.n_blocks() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.n_blocks(),
                got: covered,
            });
        }
        let parts = parts
            .iter()
            .map(|rows| {
                let mut rows = rows.clone();
                rows.sort_unstable();
                let f = Ilu0Factors::factor(&a.submatrix(&rows))?;
                Ok((rows, f))
            })
            .collect::<Result<Vec<_>, LinalgError>>()?;
        Ok(Self { bs: a.bs, parts })
    }
}

impl Preconditioner for BlockJacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let bs = self.bs;
        for (rows, f) in &self.parts {
            let mut rl = Vec::with_capacity(rows.len() * bs);
            for &g in rows {
                rl.extend_from_slice(&r[g * bs..(g + 1) * bs]);
            }
            let mut zl = vec![0.0; rl.len()];
            f.solve(&rl, &mut zl);
            for (l, &g) in rows.iter().enumerate() {
                z[g * bs..(g + 1) * bs].copy_from_slice(&zl[l * bs..(l + 1) * bs]);
            }
        }
    }
}

/// Point-block Jacobi: inverted diagonal blocks only.
#[derive(Debug, Clone)]
pub struct BlockDiagonal {
    bs: usize,
    inv: Vec<f64>,
}

impl BlockDiagonal {
    pub fn new(a: &BlockCsrMatrix) -> Result<Self, LinalgError> {
        let bs = a.bs;
        let b2 = bs * bs;
        let mut inv = vec![0.0; a.n_blocks() * b2];
        for i in 0..a.n_blocks() {
            let pos = a.find(i, i).ok_or(LinalgError::SingularPivot(i))?;
            let d = &mut inv[i * b2..(i + 1) * b2];
            d.copy_from_slice(a.block(pos));
            if !invert_block(d, bs) {
                return Err(LinalgError::SingularPivot(i));
            }
        }
        Ok(Self { bs, inv })
    }
}

impl Preconditioner for BlockDiagonal {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let bs = self.bs;
        let b2 = bs * bs;
        for i in 0..r.len() / bs {
            block_matvec(&self.inv[i * b2..(i + 1) * b2], &r[i * bs..(i + 1) * bs], &mut z[i * bs..(i + 1) * bs], bs);
        }
    }
}
