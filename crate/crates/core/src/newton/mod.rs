//! Damped Newton with Armijo backtracking, shared by the global solve and
//! the region solves.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::linalg::{gmres, norm2, BlockCsrMatrix, GmresConfig, LinalgError, Preconditioner};

mod reservoir;

pub use reservoir::{LinearPreconditioner, ReservoirProblem};

/// A square nonlinear system posed on block-structured unknowns.
pub trait NonlinearProblem {
    type Error: fmt::Display;

    fn dim(&self) -> usize;

    /// Residual used for the convergence test and the line search.
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, Self::Error>;

    /// Residual and Jacobian at `x`.
    fn linearize(&self, x: &[f64]) -> Result<(Vec<f64>, BlockCsrMatrix), Self::Error>;

    fn preconditioner<'a>(&self, jac: &'a BlockCsrMatrix) -> Result<Box<dyn Preconditioner + 'a>, LinalgError>;

    /// Largest step fraction in (0, 1] allowed by the safeguards.
    fn max_step(&self, _x: &[f64], _dx: &[f64], _cfg: &NewtonConfig) -> f64 {
        1.0
    }

    /// Projects an updated iterate back onto the admissible set.
    fn project(&self, _x: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub rtol: f64,
    pub atol: f64,
    pub maxit: usize,
    pub max_backtracks: usize,
    pub backtrack_factor: f64,
    pub armijo: f64,
    /// Largest pressure change per iteration, psi.
    pub max_dp: f64,
    /// Largest saturation change per iteration.
    pub max_ds: f64,
    /// Linear tolerance; `None` uses `rtol`.
    pub linear_rtol: Option<f64>,
    pub linear_maxit: usize,
    pub restart: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-4,
            atol: 1e-12,
            maxit: 100,
            max_backtracks: 8,
            backtrack_factor: 0.5,
            armijo: 1e-4,
            max_dp: 500.0,
            max_ds: 0.2,
            linear_rtol: None,
            linear_maxit: 100,
            restart: 30,
        }
    }
}

impl NewtonConfig {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(format!("newton rtol {} outside (0, 1)", self.rtol));
        }
        if self.maxit == 0 {
            return Err("newton maxit must be at least 1".into());
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(format!("backtrack factor {} outside (0, 1)", self.backtrack_factor));
        }
        Ok(())
    }

    fn gmres(&self) -> GmresConfig {
        GmresConfig {
            rtol: self.linear_rtol.unwrap_or(self.rtol),
            maxit: self.linear_maxit,
            restart: self.restart,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NewtonFailure {
    MaxIterations,
    LineSearch,
    Linear(String),
    Evaluation(String),
}

impl fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MaxIterations => write!(f, "iteration limit reached"),
            Self::LineSearch => write!(f, "line search stalled"),
            Self::Linear(m) => write!(f, "linear solver failed: {m}"),
            Self::Evaluation(m) => write!(f, "residual evaluation failed: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub converged: bool,
    pub iterations: usize,
    pub linear_iterations: usize,
    /// ‖F‖ at the initial guess.
    pub initial_norm: f64,
    pub final_norm: f64,
    /// ‖F‖ after each accepted iterate, starting with the initial guess.
    pub history: Vec<f64>,
    pub failure: Option<NewtonFailure>,
    /// Wall time spent in preconditioner setup and GMRES, seconds.
    pub linear_seconds: f64,
}

/// Solves `F(x) = 0` starting from `x`, which holds the last iterate on
/// return. Convergence means `‖F‖ ≤ max(rtol · reference, atol)`, where the
/// reference defaults to `‖F(x0)‖`.
pub fn newton_solve<P: NonlinearProblem>(
    problem: &P,
    x: &mut [f64],
    cfg: &NewtonConfig,
    reference: Option<f64>,
) -> NewtonReport {
    let mut report = NewtonReport {
        converged: false,
        iterations: 0,
        linear_iterations: 0,
        initial_norm: f64::NAN,
        final_norm: f64::NAN,
        history: Vec::new(),
        failure: None,
        linear_seconds: 0.0,
    };
    let f = match problem.residual(x) {
        Ok(f) => f,
        Err(e) => {
            report.failure = Some(NewtonFailure::Evaluation(e.to_string()));
            return report;
        }
    };
    let mut norm = norm2(&f);
    report.initial_norm = norm;
    report.final_norm = norm;
    report.history.push(norm);
    if !norm.is_finite() {
        report.failure = Some(NewtonFailure::Evaluation("non-finite residual".into()));
        return report;
    }
    let tol = (cfg.rtol * reference.unwrap_or(norm)).max(cfg.atol);
    let lin_cfg = cfg.gmres();
    let n = x.len();
    let mut dx = vec![0.0; n];
    let mut trial = vec![0.0; n];
    loop {
        if norm <= tol {
            report.converged = true;
            return report;
        }
        if report.iterations >= cfg.maxit {
            report.failure = Some(NewtonFailure::MaxIterations);
            return report;
        }
        let (rhs, jac) = match problem.linearize(x) {
            Ok(v) => v,
            Err(e) => {
                report.failure = Some(NewtonFailure::Evaluation(e.to_string()));
                return report;
            }
        };
        let neg: Vec<f64> = rhs.iter().map(|v| -v).collect();
        dx.iter_mut().for_each(|v| *v = 0.0);
        report.iterations += 1;
        let started = Instant::now();
        let lin = problem
            .preconditioner(&jac)
            .and_then(|pc| gmres(&jac, &neg, pc.as_ref(), &lin_cfg, &mut dx));
        report.linear_seconds += started.elapsed().as_secs_f64();
        match lin {
            Ok(r) => report.linear_iterations += r.iterations,
            Err(e) => {
                report.failure = Some(NewtonFailure::Linear(e.to_string()));
                return report;
            }
        }
        let mut alpha = problem.max_step(x, &dx, cfg).clamp(f64::MIN_POSITIVE, 1.0);
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            for ((t, xi), di) in trial.iter_mut().zip(x.iter()).zip(&dx) {
                *t = xi + alpha * di;
            }
            problem.project(&mut trial);
            if let Ok(ft) = problem.residual(&trial) {
                let nt = norm2(&ft);
                if nt.is_finite() && nt <= (1.0 - cfg.armijo * alpha) * norm {
                    accepted = Some(nt);
                    break;
                }
            }
            alpha *= cfg.backtrack_factor;
        }
        match accepted {
            Some(nt) => {
                x.copy_from_slice(&trial);
                norm = nt;
                report.final_norm = norm;
                report.history.push(norm);
            }
            None => {
                report.failure = Some(NewtonFailure::LineSearch);
                return report;
            }
        }
    }
}
