use super::{axpy_sub, dot, norm2, BlockCsrMatrix, LinalgError, Preconditioner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub rtol: f64,
    /// Total Arnoldi steps across restarts.
    pub maxit: usize,
    pub restart: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-4,
            maxit: 100,
            restart: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    pub converged: bool,
    /// True residual ‖b − A x‖ at exit.
    pub residual_norm: f64,
    pub rhs_norm: f64,
    /// Least-squares residual estimates per restart cycle, starting with the
    /// cycle's initial residual.
    pub cycle_history: Vec<Vec<f64>>,
}

/// Right-preconditioned restarted GMRES with modified Gram–Schmidt. `x`
/// holds the initial guess on entry and the iterate on exit.
pub fn gmres(
    a: &BlockCsrMatrix,
    b: &[f64],
    pc: &dyn Preconditioner,
    cfg: &GmresConfig,
    x: &mut [f64],
) -> Result<GmresReport, LinalgError> {
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: if b.len() != n { b.len() } else { x.len() },
        });
    }
    let m = cfg.restart.max(1);
    let bnorm = norm2(b);
    let mut report = GmresReport {
        iterations: 0,
        converged: false,
        residual_norm: 0.0,
        rhs_norm: bnorm,
        cycle_history: Vec::new(),
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.converged = true;
        return Ok(report);
    }
    let target = cfg.rtol * bnorm;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    // Basis vectors are allocated once and reused by every cycle.
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];

    loop {
        a.spmv_unchecked(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm2(&r);
        if !beta.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        report.residual_norm = beta;
        if beta <= target {
            report.converged = true;
            return Ok(report);
        }
        if report.iterations >= cfg.maxit {
            return Ok(report);
        }
        if v.is_empty() {
            v.push(vec![0.0; n]);
        }
        for (vi, ri) in v[0].iter_mut().zip(&r) {
            *vi = ri / beta;
        }
        g.iter_mut().for_each(|gi| *gi = 0.0);
        g[0] = beta;
        let mut history = vec![beta];
        let mut k = 0;
        while k < m && report.iterations < cfg.maxit {
            pc.apply(&v[k], &mut z);
            a.spmv_unchecked(&z, &mut w);
            // Modified Gram-Schmidt keeps GMRES backward stable without a
            // reorthogonalisation pass.
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                h[i][k] = hik;
                axpy_sub(&mut w, hik, &v[i]);
            }
            let wnorm = norm2(&w);
            if !wnorm.is_finite() {
                return Err(LinalgError::NonFinite);
            }
            h[k + 1][k] = wnorm;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                // Singular projected system; keep what we have.
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            report.iterations += 1;
            k += 1;
            let est = g[k].abs();
            history.push(est);
            let happy = wnorm <= 1e-14 * beta;
            if est <= target || happy {
                break;
            }
            if v.len() == k {
                v.push(vec![0.0; n]);
            }
            for (vi, wi) in v[k].iter_mut().zip(&w) {
                *vi = wi / wnorm;
            }
        }
        // y = H⁻¹ g on the leading k × k triangle, then x += M⁻¹ V y.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        w.iter_mut().for_each(|wi| *wi = 0.0);
        for (i, yi) in y.iter().enumerate() {
            for (wj, vj) in w.iter_mut().zip(&v[i]) {
                *wj += yi * vj;
            }
        }
        pc.apply(&w, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        report.cycle_history.push(history);
        if k == 0 {
            // No progress possible in this cycle.
            a.spmv_unchecked(x, &mut r);
            report.residual_norm = r.iter().zip(b).map(|(ri, bi)| (bi - ri).powi(2)).sum::<f64>().sqrt();
            return Ok(report);
        }
    }
}
