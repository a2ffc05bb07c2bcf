use super::{NewtonConfig, NonlinearProblem};
use crate::assembly::{assemble, AssembledSystem, AssemblyError, ProblemScope, Reservoir};
use crate::fluid::{saturations_from_state, GAS, NUM_VARS};
use crate::linalg::{BlockCsrMatrix, BlockDiagonal, BlockJacobi, Ilu0Factors, LinalgError, Preconditioner};

#[derive(Debug, Clone, PartialEq)]
pub enum LinearPreconditioner {
    Ilu0,
    /// Block Jacobi with ILU(0) per part; parts hold local cell indices.
    BlockJacobi(Vec<Vec<usize>>),
}

/// One implicit time step of the flow equations on a scope.
pub struct ReservoirProblem<'a> {
    pub res: &'a Reservoir,
    pub scope: &'a ProblemScope,
    pub n_old: Vec<[f64; 2]>,
    pub dt: f64,
    pub precond: LinearPreconditioner,
    scale: Vec<f64>,
}

impl<'a> ReservoirProblem<'a> {
    pub fn new(res: &'a Reservoir, scope: &'a ProblemScope, n_old: Vec<[f64; 2]>, dt: f64, precond: LinearPreconditioner) -> Self {
        let scale = res.row_scale(scope, dt);
        Self {
            res,
            scope,
            n_old,
            dt,
            precond,
            scale,
        }
    }

    /// Unscaled residual with well reports, for post-processing.
    pub fn evaluate(&self, x: &[f64], with_jacobian: bool) -> Result<AssembledSystem, AssemblyError> {
        assemble(self.res, self.scope, x, &self.n_old, self.dt, with_jacobian)
    }

    pub fn row_scale(&self) -> &[f64] {
        &self.scale
    }

    fn gas_saturation(&self, x: &[f64], l: usize) -> Option<f64> {
        let v = &x[l * NUM_VARS..(l + 1) * NUM_VARS];
        saturations_from_state(&self.res.fluid, v[0], [v[1].max(0.0), v[2].max(0.0)])
            .ok()
            .map(|s| s.s[GAS])
    }
}

impl NonlinearProblem for ReservoirProblem<'_> {
    type Error = AssemblyError;

    fn dim(&self) -> usize {
        self.scope.dim()
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        let mut f = self.evaluate(x, false)?.residual;
        for (v, s) in f.iter_mut().zip(&self.scale) {
            *v *= s;
        }
        Ok(f)
    }

    fn linearize(&self, x: &[f64]) -> Result<(Vec<f64>, BlockCsrMatrix), AssemblyError> {
        let sys = self.evaluate(x, true)?;
        let mut f = sys.residual;
        for (v, s) in f.iter_mut().zip(&self.scale) {
            *v *= s;
        }
        let mut j = sys.jacobian.expect("jacobian requested");
        j.scale_rows(&self.scale);
        Ok((f, j))
    }

    fn preconditioner<'b>(&self, jac: &'b BlockCsrMatrix) -> Result<Box<dyn Preconditioner + 'b>, LinalgError> {
        let primary: Result<Box<dyn Preconditioner>, LinalgError> = match &self.precond {
            LinearPreconditioner::Ilu0 => Ilu0Factors::factor(jac).map(|f| Box::new(f) as Box<dyn Preconditioner>),
            LinearPreconditioner::BlockJacobi(parts) => {
                BlockJacobi::new(jac, parts).map(|f| Box::new(f) as Box<dyn Preconditioner>)
            }
        };
        match primary {
            Ok(p) => Ok(p),
            Err(LinalgError::SingularPivot(i)) => {
                log::debug!("ILU(0) pivot {i} singular; falling back to block diagonal");
                Ok(Box::new(BlockDiagonal::new(jac)?))
            }
            Err(e) => Err(e),
        }
    }

    fn max_step(&self, x: &[f64], dx: &[f64], cfg: &NewtonConfig) -> f64 {
        let mut dp: f64 = 0.0;
        let mut ds: f64 = 0.0;
        let mut trial = [0.0; NUM_VARS];
        for l in 0..self.scope.num_cells() {
            dp = dp.max(dx[l * NUM_VARS].abs());
            let Some(s0) = self.gas_saturation(x, l) else { continue };
            for k in 0..NUM_VARS {
                trial[k] = x[l * NUM_VARS + k] + dx[l * NUM_VARS + k];
            }
            if let Some(s1) = self.gas_saturation(&trial, 0) {
                ds = ds.max((s1 - s0).abs());
            }
        }
        let mut alpha: f64 = 1.0;
        if dp > cfg.max_dp {
            alpha = alpha.min(cfg.max_dp / dp);
        }
        if ds > cfg.max_ds {
            alpha = alpha.min(cfg.max_ds / ds);
        }
        alpha
    }

    fn project(&self, x: &mut [f64]) {
        for cell in x.chunks_exact_mut(NUM_VARS) {
            cell[1] = cell[1].max(0.0);
            cell[2] = cell[2].max(0.0);
        }
    }
}
