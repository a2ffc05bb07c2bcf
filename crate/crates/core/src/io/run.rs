//! Runs a deck end to end and writes its result files.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::output::{write_coupling, write_reports, write_snapshot, OutputError, SnapshotFields, SummaryLine};
use super::{Deck, DeckError};
use crate::timeloop::{ReportRow, Simulator, SolverStats, TimeloopError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Deck(#[from] DeckError),
    #[error(transparent)]
    Timeloop(#[from] TimeloopError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<ReportRow>,
    pub stats: SolverStats,
}

impl RunOutcome {
    pub fn summary(&self, method: &str) -> SummaryLine {
        let s = &self.stats;
        SummaryLine {
            method: method.to_string(),
            nr_iter: s.nr_iter,
            ls_iter: s.ls_iter,
            nr_iter_w: s.nr_iter_w,
            nr_iter_ddm: s.nr_iter_ddm,
            steps: s.steps,
            failed_steps: s.failed_steps,
            runtime_seconds: s.total_seconds,
            linear_seconds: s.linear_seconds,
        }
    }
}

/// Simulates `deck` with its configured method. With an output directory,
/// writes `reports.csv` and, per report time, `coupling_t<time>.csv` (DDM
/// methods, when enabled) and `snapshot_t<time>.vtk` (when enabled).
pub fn simulate(deck: &Deck, out_dir: Option<&Path>) -> Result<RunOutcome, RunError> {
    let res = deck.build_reservoir()?;
    let state0 = deck.initial_state(&res)?;
    let mut sim = Simulator::new(res, state0, deck.solver.clone())?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let mut write_failure: Option<OutputError> = None;
    let fluid = sim.res.fluid.clone();
    let grid = sim.res.grid.clone();
    let layout = sim.layout.clone();
    let rows = sim.run(&deck.schedule, |ev| {
        let Some(dir) = out_dir else { return };
        if write_failure.is_some() {
            return;
        }
        let t = ev.row.time;
        let mut result = Ok(());
        if deck.output.coupling {
            if let Some(p) = ev.pattern {
                result = write_coupling(p, &dir.join(format!("coupling_t{t}.csv")));
            }
        }
        if result.is_ok() && deck.output.snapshots {
            let fields = SnapshotFields::new(&fluid, &layout, ev.state, ev.pattern, ev.delta);
            result = write_snapshot(&grid, &fields, t, &dir.join(format!("snapshot_t{t}.vtk")));
        }
        if let Err(e) = result {
            write_failure = Some(e);
        }
    })?;
    if let Some(e) = write_failure {
        return Err(e.into());
    }
    if let Some(dir) = out_dir {
        write_reports(&rows, &dir.join("reports.csv"))?;
    }
    Ok(RunOutcome {
        rows,
        stats: sim.stats.clone(),
    })
}
