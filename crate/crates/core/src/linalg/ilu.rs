use super::{block_matvec, block_matvec_sub, block_mul, block_mul_sub, invert_block, BlockCsrMatrix, LinalgError, Preconditioner};

/// Block ILU(0): L and U share the pattern of A, pivot blocks stored inverted.
#[derive(Debug, Clone)]
pub struct Ilu0Factors {
    lu: BlockCsrMatrix,
    diag_pos: Vec<usize>,
    diag_inv: Vec<f64>,
}

impl Ilu0Factors {
    pub fn factor(a: &BlockCsrMatrix) -> Result<Self, LinalgError> {
        let n = a.n_blocks();
        let bs = a.bs;
        let b2 = bs * bs;
        let mut lu = a.clone();
        let mut diag_pos = Vec::with_capacity(n);
        for i in 0..n {
            diag_pos.push(lu.find(i, i).ok_or(LinalgError::SingularPivot(i))?);
        }
        let mut diag_inv = vec![0.0; n * b2];
        let mut marker = vec![usize::MAX; n];
        let mut lik = vec![0.0; b2];
        let mut ukj = vec![0.0; b2];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for pos in start..end {
                marker[lu.col_idx[pos]] = pos;
            }
            for pos_ik in start..diag_pos[i] {
                let k = lu.col_idx[pos_ik];
                block_mul(&lu.vals[pos_ik * b2..(pos_ik + 1) * b2], &diag_inv[k * b2..(k + 1) * b2], &mut lik, bs);
                lu.vals[pos_ik * b2..(pos_ik + 1) * b2].copy_from_slice(&lik);
                for pos_kj in diag_pos[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.col_idx[pos_kj];
                    let pos_ij = marker[j];
                    if pos_ij != usize::MAX {
                        ukj.copy_from_slice(&lu.vals[pos_kj * b2..(pos_kj + 1) * b2]);
                        block_mul_sub(&mut lu.vals[pos_ij * b2..(pos_ij + 1) * b2], &lik, &ukj, bs);
                    }
                }
            }
            let d = &mut diag_inv[i * b2..(i + 1) * b2];
            d.copy_from_slice(&lu.vals[diag_pos[i] * b2..(diag_pos[i] + 1) * b2]);
            if !invert_block(d, bs) {
                return Err(LinalgError::SingularPivot(i));
            }
            for pos in start..end {
                marker[lu.col_idx[pos]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag_pos, diag_inv })
    }

    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        match self.lu.bs {
            3 => self.solve_fixed::<3>(r, z),
            2 => self.solve_fixed::<2>(r, z),
            _ => self.solve_generic(r, z),
        }
    }

    fn solve_fixed<const B: usize>(&self, r: &[f64], z: &mut [f64]) {
        let b2 = B * B;
        let lu = &self.lu;
        z.copy_from_slice(r);
        for i in 0..lu.n_blocks() {
            let mut acc: [f64; B] = z[i * B..(i + 1) * B].try_into().unwrap();
            for pos in lu.row_ptr[i]..self.diag_pos[i] {
                let k = lu.col_idx[pos];
                let blk = &lu.vals[pos * b2..(pos + 1) * b2];
                for rr in 0..B {
                    for c in 0..B {
                        acc[rr] -= blk[rr * B + c] * z[k * B + c];
                    }
                }
            }
            z[i * B..(i + 1) * B].copy_from_slice(&acc);
        }
        for i in (0..lu.n_blocks()).rev() {
            let mut acc: [f64; B] = z[i * B..(i + 1) * B].try_into().unwrap();
            for pos in self.diag_pos[i] + 1..lu.row_ptr[i + 1] {
                let j = lu.col_idx[pos];
                let blk = &lu.vals[pos * b2..(pos + 1) * b2];
                for rr in 0..B {
                    for c in 0..B {
                        acc[rr] -= blk[rr * B + c] * z[j * B + c];
                    }
                }
            }
            let d = &self.diag_inv[i * b2..(i + 1) * b2];
            for rr in 0..B {
                let mut v = 0.0;
                for c in 0..B {
                    v += d[rr * B + c] * acc[c];
                }
                z[i * B + rr] = v;
            }
        }
    }

    fn solve_generic(&self, r: &[f64], z: &mut [f64]) {
        let bs = self.lu.bs;
        let b2 = bs * bs;
        let n = self.lu.n_blocks();
        let lu = &self.lu;
        z.copy_from_slice(r);
        for i in 0..n {
            let (head, tail) = z.split_at_mut(i * bs);
            let zi = &mut tail[..bs];
            for pos in lu.row_ptr[i]..self.diag_pos[i] {
                let k = lu.col_idx[pos];
                block_matvec_sub(zi, &lu.vals[pos * b2..(pos + 1) * b2], &head[k * bs..(k + 1) * bs], bs);
            }
        }
        let mut tmp = vec![0.0; bs];
        for i in (0..n).rev() {
            let (head, tail) = z.split_at_mut((i + 1) * bs);
            let zi = &mut head[i * bs..];
            for pos in self.diag_pos[i] + 1..lu.row_ptr[i + 1] {
                let j = lu.col_idx[pos] - i - 1;
                block_matvec_sub(zi, &lu.vals[pos * b2..(pos + 1) * b2], &tail[j * bs..(j + 1) * bs], bs);
            }
            block_matvec(&self.diag_inv[i * b2..(i + 1) * b2], zi, &mut tmp, bs);
            zi.copy_from_slice(&tmp);
        }
    }
}

impl Preconditioner for Ilu0Factors {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve(r, z);
    }
}
