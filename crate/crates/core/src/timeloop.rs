//! Time stepping: coupling pattern, concurrent region solves, assembled
//! initial guess, global solve, step-size control and iteration statistics.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addm::{
    couple_addm01, couple_addm02, couple_addm03_with, default_block_count, saturation_delta, threshold_value,
    AddmError, CouplingPattern, SaturationDelta, ThresholdStrategy,
};
use crate::assembly::{AssemblyError, BoundaryKind, ProblemScope, Reservoir, WellReport};
use crate::fluid::{pore_volume, FluidState, GAS, OIL};
use crate::grid::{subdomain_adjacency, tile_partition, GridError, SubdomainLayout};
use crate::newton::{newton_solve, LinearPreconditioner, NewtonConfig, NewtonReport, NonlinearProblem, ReservoirProblem};
use crate::wells::WellKind;

/// A finished region solve: its report, scope and final unknowns.
type RegionSolve = (RegionReport, ProblemScope, Vec<f64>);

#[derive(Debug, Error)]
pub enum TimeloopError {
    #[error("time step fell below the minimum of {dt_min} days at t = {time} days (last failure: {reason})")]
    StepTooSmall { time: f64, dt_min: f64, reason: String },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Addm(#[from] AddmError),
    #[error("could not start the worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Method {
    #[default]
    #[serde(rename = "FIM")]
    Fim,
    #[serde(rename = "CDDM")]
    Cddm,
    #[serde(rename = "ADDM01")]
    Addm01,
    #[serde(rename = "ADDM02")]
    Addm02,
    #[serde(rename = "ADDM03")]
    Addm03,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Fim, Method::Cddm, Method::Addm01, Method::Addm02, Method::Addm03];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fim => "FIM",
            Method::Cddm => "CDDM",
            Method::Addm01 => "ADDM01",
            Method::Addm02 => "ADDM02",
            Method::Addm03 => "ADDM03",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method `{s}` (expected FIM, CDDM, ADDM01, ADDM02 or ADDM03)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtMode {
    /// Grow after easy steps, cut after failures.
    #[default]
    Adaptive,
    /// Always plan `dt_init`; failures still cut the retried step.
    Fixed,
}

/// Step-size controller, all sizes in days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtController {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub growth: f64,
    pub cut: f64,
    /// Steps needing more global Newton iterations than this do not grow.
    pub target_newton: usize,
    pub mode: DtMode,
}

impl Default for DtController {
    fn default() -> Self {
        Self {
            dt_init: 1.0,
            dt_min: 1e-3,
            dt_max: 32.0,
            growth: 2.0,
            cut: 0.5,
            target_newton: 12,
            mode: DtMode::Adaptive,
        }
    }
}

impl DtController {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        if !(self.growth >= 1.0) {
            return Err(format!("growth factor must be at least 1, got {}", self.growth));
        }
        if !(self.cut > 0.0 && self.cut < 1.0) {
            return Err(format!("cut factor must lie in (0, 1), got {}", self.cut));
        }
        Ok(())
    }

    /// Planned size after an accepted step of `dt` that took `newton`
    /// global iterations.
    pub fn after_success(&self, dt: f64, newton: usize) -> f64 {
        match self.mode {
            DtMode::Fixed => self.dt_init,
            DtMode::Adaptive if newton <= self.target_newton => (dt * self.growth).min(self.dt_max),
            DtMode::Adaptive => dt.clamp(self.dt_min, self.dt_max),
        }
    }

    /// Size of the retry after a rejected step of `dt`; `None` once the
    /// minimum has already been tried.
    pub fn after_failure(&self, dt: f64) -> Option<f64> {
        if dt <= self.dt_min * (1.0 + 1e-12) {
            None
        } else {
            Some((dt * self.cut).max(self.dt_min))
        }
    }
}

/// Shortens `dt` so that a step from `t` does not pass `report`.
pub fn clip_to_report(dt: f64, t: f64, report: f64) -> f64 {
    dt.min(report - t)
}

fn local_config() -> NewtonConfig {
    NewtonConfig::with_rtol(1e-2)
}

fn default_layers() -> usize {
    1
}

fn default_tiles() -> [usize; 2] {
    [4, 4]
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub threshold: ThresholdStrategy,
    /// Replaces the strategy's threshold when set; `inf` disables coupling.
    pub c_s: Option<f64>,
    /// Expansion depth l of the front sets.
    pub layers: usize,
    /// Expansion used by the third strategy's edge test (one layer unless
    /// overridden).
    pub addm03_existence_layers: usize,
    /// Region count K of the third strategy; ⌈N/4⌉ when absent.
    pub blocks: Option<usize>,
    pub boundary: BoundaryKind,
    /// Tile counts along x and y of the base subdomains.
    pub tiles: [usize; 2],
    /// Region solves (ε_local).
    pub local: NewtonConfig,
    /// Global solve (ε_global).
    pub global: NewtonConfig,
    pub dt: DtController,
    /// Threads for the region solves.
    pub workers: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Fim,
            threshold: ThresholdStrategy::A,
            c_s: None,
            layers: default_layers(),
            addm03_existence_layers: 1,
            blocks: None,
            boundary: BoundaryKind::Pressure,
            tiles: default_tiles(),
            local: local_config(),
            global: NewtonConfig::default(),
            dt: DtController::default(),
            workers: default_workers(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n_sub: usize) -> Result<(), String> {
        self.dt.validate()?;
        self.local.validate().map_err(|e| format!("local: {e}"))?;
        self.global.validate().map_err(|e| format!("global: {e}"))?;
        if self.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        if let Some(c) = self.c_s {
            if !(c >= 0.0) {
                return Err(format!("c_s must be non-negative, got {c}"));
            }
        }
        if let Some(k) = self.blocks {
            if k == 0 || k > n_sub {
                return Err(format!("blocks must lie in 1..={n_sub}, got {k}"));
            }
        }
        Ok(())
    }

    /// K actually used by the third strategy.
    pub fn block_count(&self, n_sub: usize) -> usize {
        self.blocks.unwrap_or_else(|| default_block_count(n_sub))
    }
}

/// Outcome of one region solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub subdomains: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    pub linear_iterations: usize,
    pub seconds: f64,
}

/// Everything known about one attempted time step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub dt: f64,
    pub converged: bool,
    pub global: NewtonReport,
    pub regions: Vec<RegionReport>,
    pub pattern: Option<CouplingPattern>,
    pub c_s: Option<f64>,
    /// Rates at the converged state, one entry per well.
    pub wells: Vec<WellReport>,
    /// Slowest region solve, seconds.
    pub local_seconds: f64,
    pub global_seconds: f64,
}

impl StepReport {
    pub fn local_iterations(&self) -> usize {
        self.regions.iter().map(|r| r.iterations).sum()
    }

    pub fn local_linear_iterations(&self) -> usize {
        self.regions.iter().map(|r| r.linear_iterations).sum()
    }
}

/// Cumulative iteration counts. Effective counters cover accepted steps
/// only; the `_w` counters collect iterations of rejected attempts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub nr_iter: usize,
    pub ls_iter: usize,
    pub nr_iter_w: usize,
    pub ls_iter_w: usize,
    pub nr_iter_ddm: usize,
    pub ls_iter_ddm: usize,
    pub nr_iter_w_ddm: usize,
    pub steps: usize,
    pub failed_steps: usize,
    /// Every global Newton iteration attempted, for reconciliation.
    pub attempted_global: usize,
    pub linear_seconds: f64,
    pub local_seconds: f64,
    pub global_seconds: f64,
    pub total_seconds: f64,
}

impl SolverStats {
    pub fn accumulate(&mut self, step: &StepReport) {
        self.attempted_global += step.global.iterations;
        self.linear_seconds += step.global.linear_seconds;
        self.local_seconds += step.local_seconds;
        self.global_seconds += step.global_seconds;
        if step.converged {
            self.steps += 1;
            self.nr_iter += step.global.iterations;
            self.ls_iter += step.global.linear_iterations;
            self.nr_iter_ddm += step.local_iterations();
            self.ls_iter_ddm += step.local_linear_iterations();
        } else {
            self.failed_steps += 1;
            self.nr_iter_w += step.global.iterations;
            self.ls_iter_w += step.global.linear_iterations;
            self.nr_iter_w_ddm += step.local_iterations();
        }
    }

    /// Effective plus wasted iterations account for every attempt.
    pub fn reconciles(&self) -> bool {
        self.nr_iter + self.nr_iter_w == self.attempted_global
    }
}

/// One row of the report series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub time: f64,
    /// Pore-volume weighted average pressure, psi.
    #[serde(rename = "FPR")]
    pub fpr: f64,
    /// Field gas production rate, lb-mol/day.
    #[serde(rename = "FGPR")]
    pub fgpr: f64,
    /// Field oil production rate, lb-mol/day.
    #[serde(rename = "FOPR")]
    pub fopr: f64,
    #[serde(rename = "NRiter")]
    pub nr_iter: usize,
    #[serde(rename = "LSiter")]
    pub ls_iter: usize,
    #[serde(rename = "LS/NR")]
    pub ls_per_nr: f64,
    #[serde(rename = "NRiterW")]
    pub nr_iter_w: usize,
    #[serde(rename = "NRiter_DDM")]
    pub nr_iter_ddm: usize,
    #[serde(rename = "NRiterW_DDM")]
    pub nr_iter_w_ddm: usize,
}

/// Report times and the end of the run, days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub end_time: f64,
    /// Extra report times before `end_time`; the end is always reported.
    #[serde(default)]
    pub report_times: Vec<f64>,
}

impl Schedule {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.end_time > 0.0) {
            return Err(format!("end_time must be positive, got {}", self.end_time));
        }
        if let Some(t) = self.report_times.iter().find(|&&t| !(t > 0.0 && t <= self.end_time)) {
            return Err(format!("report time {t} outside (0, {}]", self.end_time));
        }
        Ok(())
    }

    /// Sorted, de-duplicated report times ending with `end_time`.
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.report_times.clone();
        t.push(self.end_time);
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// What the caller sees at each report time.
pub struct ReportEvent<'a> {
    pub row: &'a ReportRow,
    pub state: &'a FluidState,
    pub pattern: Option<&'a CouplingPattern>,
    pub delta: Option<&'a SaturationDelta>,
}

/// Pore-volume weighted field pressure.
pub fn field_pressure(res: &Reservoir, state: &FluidState) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in res.grid.active_cells() {
        let p = state.p[c];
        let pv = pore_volume(&res.fluid, res.pv_ref[c], p).map(|v| v.0).unwrap_or(res.pv_ref[c]);
        num += pv * p;
        den += pv;
    }
    num / den
}

/// Field production rates (oil, gas) summed over producers.
pub fn field_production(res: &Reservoir, wells: &[WellReport]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for w in wells {
        if res.wells[w.well].kind == WellKind::Producer {
            out[OIL] += w.rate[OIL];
            out[GAS] += w.rate[GAS];
        }
    }
    out
}

/// The reservoir, its subdomains and solver settings; owns the state.
pub struct Simulator {
    pub res: Reservoir,
    pub layout: SubdomainLayout,
    pub config: SolverConfig,
    global_scope: ProblemScope,
    pool: rayon::ThreadPool,
    /// Converged state at the current time.
    pub state: FluidState,
    /// Converged state one step earlier.
    pub previous: FluidState,
    pub time: f64,
    dt_planned: f64,
    dt_last: Option<f64>,
    pub stats: SolverStats,
    last_pattern: Option<CouplingPattern>,
    last_wells: Vec<WellReport>,
}

impl Simulator {
    pub fn new(res: Reservoir, state0: FluidState, config: SolverConfig) -> Result<Self, TimeloopError> {
        let mut layout = tile_partition(&res.grid, config.tiles[0], config.tiles[1])?;
        config.validate(layout.n_sub).map_err(TimeloopError::Config)?;
        if state0.num_cells() != res.grid.num_cells() {
            return Err(TimeloopError::Config(format!(
                "initial state has {} cells, grid has {}",
                state0.num_cells(),
                res.grid.num_cells()
            )));
        }
        for w in &res.wells {
            let owners: Vec<Option<usize>> = w.perforations.iter().map(|p| layout.owner[p.cell]).collect();
            if owners.iter().any(|o| o.is_none() || *o != owners[0]) {
                return Err(TimeloopError::Config(format!("well {} is not inside a single subdomain", w.name)));
            }
        }
        layout.cache_expansions(&res.grid, config.layers.max(config.addm03_existence_layers).max(1));
        let global_scope = ProblemScope::global(&res)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| TimeloopError::Pool(e.to_string()))?;
        Ok(Self {
            res,
            layout,
            dt_planned: config.dt.dt_init,
            config,
            global_scope,
            pool,
            previous: state0.clone(),
            state: state0,
            time: 0.0,
            dt_last: None,
            stats: SolverStats::default(),
            last_pattern: None,
            last_wells: Vec::new(),
        })
    }

    /// Saturation change between the last two converged levels.
    pub fn delta(&self) -> Result<SaturationDelta, TimeloopError> {
        Ok(saturation_delta(&self.res.fluid, &self.res.grid, &self.state, &self.previous)?)
    }

    /// The threshold c_S for a step of size `dt`.
    pub fn threshold(&self, dt: f64) -> Result<f64, TimeloopError> {
        if let Some(c) = self.config.c_s {
            return Ok(c);
        }
        let dt_n = self.dt_last.unwrap_or(dt);
        Ok(threshold_value(self.config.threshold, dt_n, Some(dt), Some(self.config.dt.dt_max))?)
    }

    /// The coupling pattern the configured method would use for a step of
    /// size `dt`, or `None` for FIM.
    pub fn coupling(&self, dt: f64) -> Result<Option<(CouplingPattern, f64)>, TimeloopError> {
        let n = self.layout.n_sub;
        let grid = &self.res.grid;
        let l = self.config.layers;
        let pattern = match self.config.method {
            Method::Fim => return Ok(None),
            Method::Cddm => (CouplingPattern::all_independent(n), f64::INFINITY),
            m => {
                let c_s = self.threshold(dt)?;
                let delta = self.delta()?;
                let p = match m {
                    Method::Addm01 => couple_addm01(&self.layout, grid, &delta, c_s, l),
                    Method::Addm02 => couple_addm02(&self.layout, grid, &delta, c_s),
                    _ => couple_addm03_with(
                        &self.layout,
                        grid,
                        &delta,
                        c_s,
                        l,
                        self.config.addm03_existence_layers,
                        self.config.block_count(n),
                    )?,
                };
                (p, c_s)
            }
        };
        debug_assert!(pattern.0.check(&subdomain_adjacency(&self.layout, grid)).is_ok());
        Ok(Some(pattern))
    }

    /// Attempts one step of size `dt` from the current state with the
    /// configured method. The simulator state is not modified.
    pub fn advance_timestep(&self, dt: f64) -> Result<(StepReport, Option<FluidState>), TimeloopError> {
        self.res_check();
        match self.coupling(dt)? {
            None => self.solve_step(None, dt, None),
            Some((pattern, c_s)) => self.solve_step(Some(pattern), dt, Some(c_s)),
        }
    }

    /// Attempts one step with an explicit coupling pattern.
    pub fn advance_with_pattern(
        &self,
        pattern: CouplingPattern,
        dt: f64,
    ) -> Result<(StepReport, Option<FluidState>), TimeloopError> {
        self.solve_step(Some(pattern), dt, None)
    }

    fn res_check(&self) {
        debug_assert_eq!(self.state.num_cells(), self.res.grid.num_cells());
    }

    fn solve_step(
        &self,
        pattern: Option<CouplingPattern>,
        dt: f64,
        c_s: Option<f64>,
    ) -> Result<(StepReport, Option<FluidState>), TimeloopError> {
        let state_n = &self.state;
        let mut guess = state_n.clone();
        let mut regions = Vec::new();
        let mut local_seconds: f64 = 0.0;
        if let Some(p) = &pattern {
            let solved: Vec<Result<RegionSolve, AssemblyError>> = self.pool.install(|| {
                p.regions
                    .par_iter()
                    .map(|subs| self.solve_region(subs, dt))
                    .collect()
            });
            for r in solved {
                let (report, scope, x) = r?;
                local_seconds = local_seconds.max(report.seconds);
                if report.converged {
                    scope.scatter(&x, &mut guess);
                }
                regions.push(report);
            }
        }
        let started = Instant::now();
        let scope = &self.global_scope;
        let problem = ReservoirProblem::new(
            &self.res,
            scope,
            scope.gather_moles(state_n),
            dt,
            LinearPreconditioner::Ilu0,
        );
        // Tolerances refer to the residual at the old state so that every
        // method stops at the same accuracy whatever its initial guess.
        let reference = problem.residual(&scope.gather(state_n)).map(|f| crate::linalg::norm2(&f)).ok();
        let mut x = scope.gather(&guess);
        let global = newton_solve(&problem, &mut x, &self.config.global, reference);
        let mut wells = Vec::new();
        let mut next = None;
        if global.converged {
            wells = problem.evaluate(&x, false)?.wells;
            let mut s = state_n.clone();
            scope.scatter(&x, &mut s);
            next = Some(s);
        }
        let report = StepReport {
            dt,
            converged: global.converged,
            global,
            regions,
            pattern,
            c_s,
            wells,
            local_seconds,
            global_seconds: started.elapsed().as_secs_f64(),
        };
        Ok((report, next))
    }

    /// Local solve on one region with boundary data frozen at time n. A
    /// failed solve leaves the region's guess at the old state.
    fn solve_region(&self, subs: &[usize], dt: f64) -> Result<RegionSolve, AssemblyError> {
        let started = Instant::now();
        let cells: Vec<usize> = subs.iter().flat_map(|&k| self.layout.members[k].iter().copied()).collect();
        let scope = ProblemScope::region(&self.res, cells, self.config.boundary, &self.state)?;
        let parts: Vec<Vec<usize>> = subs
            .iter()
            .map(|&k| {
                self.layout.members[k]
                    .iter()
                    .map(|&c| scope.local_index(c).expect("member inside its region"))
                    .collect()
            })
            .collect();
        let problem = ReservoirProblem::new(
            &self.res,
            &scope,
            scope.gather_moles(&self.state),
            dt,
            LinearPreconditioner::BlockJacobi(parts),
        );
        let mut x = scope.gather(&self.state);
        let rep = newton_solve(&problem, &mut x, &self.config.local, None);
        let report = RegionReport {
            subdomains: subs.to_vec(),
            converged: rep.converged,
            iterations: rep.iterations,
            linear_iterations: rep.linear_iterations,
            seconds: started.elapsed().as_secs_f64(),
        };
        Ok((report, scope, x))
    }

    /// Accepts a converged step: shifts the time levels and records rates.
    fn accept(&mut self, report: &StepReport, next: FluidState) {
        self.previous = std::mem::replace(&mut self.state, next);
        self.dt_last = Some(report.dt);
        self.last_wells = report.wells.clone();
        self.last_pattern = report.pattern.clone();
    }

    pub fn report_row(&self) -> ReportRow {
        let [fopr, fgpr] = field_production(&self.res, &self.last_wells);
        let s = &self.stats;
        ReportRow {
            time: self.time,
            fpr: field_pressure(&self.res, &self.state),
            fgpr,
            fopr,
            nr_iter: s.nr_iter,
            ls_iter: s.ls_iter,
            ls_per_nr: if s.nr_iter > 0 {
                s.ls_iter as f64 / s.nr_iter as f64
            } else {
                0.0
            },
            nr_iter_w: s.nr_iter_w,
            nr_iter_ddm: s.nr_iter_ddm,
            nr_iter_w_ddm: s.nr_iter_w_ddm,
        }
    }

    /// Runs to the end of the schedule, calling `on_report` at each report
    /// time, and returns the report rows.
    pub fn run<F>(&mut self, schedule: &Schedule, mut on_report: F) -> Result<Vec<ReportRow>, TimeloopError>
    where
        F: FnMut(&ReportEvent<'_>),
    {
        schedule.validate().map_err(TimeloopError::Config)?;
        let started = Instant::now();
        let mut rows = Vec::new();
        for target in schedule.times() {
            while self.time < target {
                let dt = clip_to_report(self.dt_planned, self.time, target);
                let clipped = dt < self.dt_planned;
                self.res.prepare_wells(&self.state)?;
                let (report, next) = self.advance_timestep(dt)?;
                self.stats.accumulate(&report);
                log::debug!(
                    "t={:.4} dt={dt:.4} converged={} newton={} regions={}",
                    self.time,
                    report.converged,
                    report.global.iterations,
                    report.regions.len()
                );
                match next {
                    Some(next) => {
                        self.accept(&report, next);
                        self.time = if clipped { target } else { self.time + dt };
                        // A clipped step says little about the planned size.
                        if !clipped {
                            self.dt_planned = self.config.dt.after_success(dt, report.global.iterations);
                        } else if self.config.dt.mode == DtMode::Fixed {
                            self.dt_planned = self.config.dt.dt_init;
                        }
                    }
                    None => {
                        let reason = report
                            .global
                            .failure
                            .as_ref()
                            .map_or_else(|| "not converged".to_string(), |f| f.to_string());
                        self.dt_planned = self.config.dt.after_failure(dt).ok_or(TimeloopError::StepTooSmall {
                            time: self.time,
                            dt_min: self.config.dt.dt_min,
                            reason,
                        })?;
                    }
                }
            }
            let row = self.report_row();
            let delta = if self.config.method == Method::Fim {
                None
            } else {
                Some(self.delta()?)
            };
            on_report(&ReportEvent {
                row: &row,
                state: &self.state,
                pattern: self.last_pattern.as_ref(),
                delta: delta.as_ref(),
            });
            rows.push(row);
        }
        self.stats.total_seconds += started.elapsed().as_secs_f64();
        debug_assert!(self.stats.reconciles());
        Ok(rows)
    }

    pub fn last_pattern(&self) -> Option<&CouplingPattern> {
        self.last_pattern.as_ref()
    }

    pub fn last_wells(&self) -> &[WellReport] {
        &self.last_wells
    }
}
