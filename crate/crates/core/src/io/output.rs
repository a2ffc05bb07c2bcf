//! Report series, coupling patterns, VTK snapshots and the summary table.
//!
//! Column and field orders are fixed: `reports.csv` follows
//! [`REPORT_HEADER`], coupling files are `subdomain,region,independent`,
//! and snapshots carry the scalars `pressure`, `S_gas`, `dS_gas`,
//! `subdomain` and `region` in that order. Floats use the shortest
//! representation that reads back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::addm::{CouplingPattern, SaturationDelta};
use crate::fluid::{saturations_from_state, FluidParams, FluidState, GAS};
use crate::grid::{Grid, SubdomainLayout};
use crate::timeloop::ReportRow;

pub const REPORT_HEADER: [&str; 10] = [
    "time",
    "FPR",
    "FGPR",
    "FOPR",
    "NRiter",
    "LSiter",
    "LS/NR",
    "NRiterW",
    "NRiter_DDM",
    "NRiterW_DDM",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: unexpected header {found:?}", path.display())]
    Header { path: PathBuf, found: Vec<String> },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the report series; zero rows give a header-only file.
pub fn write_reports(rows: &[ReportRow], path: &Path) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err(path))?;
    w.write_record(REPORT_HEADER).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_reports(path: &Path) -> Result<Vec<ReportRow>, OutputError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?;
    if !header.iter().eq(REPORT_HEADER) {
        return Err(OutputError::Header {
            path: path.to_path_buf(),
            found: header.iter().map(String::from).collect(),
        });
    }
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// One line per subdomain: its region and whether it is solved alone.
pub fn write_coupling(pattern: &CouplingPattern, path: &Path) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["subdomain", "region", "independent"]).map_err(csv_err(path))?;
    for (k, &r) in pattern.region_of.iter().enumerate() {
        let independent = if pattern.independent[k] { "1" } else { "0" };
        w.write_record([k.to_string().as_str(), r.to_string().as_str(), independent])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Cell fields of one snapshot. Ids are -1 where undefined (inactive
/// cells, or no coupling pattern).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFields {
    pub pressure: Vec<f64>,
    pub s_gas: Vec<f64>,
    pub ds_gas: Vec<f64>,
    pub subdomain: Vec<i64>,
    pub region: Vec<i64>,
}

impl SnapshotFields {
    pub fn new(
        fluid: &FluidParams,
        layout: &SubdomainLayout,
        state: &FluidState,
        pattern: Option<&CouplingPattern>,
        delta: Option<&SaturationDelta>,
    ) -> Self {
        let n = state.num_cells();
        let id = |o: Option<usize>| o.map_or(-1, |v| v as i64);
        Self {
            pressure: state.p.clone(),
            s_gas: (0..n)
                .map(|c| {
                    saturations_from_state(fluid, state.p[c], state.n[c])
                        .map(|s| s.s[GAS])
                        .unwrap_or(0.0)
                })
                .collect(),
            ds_gas: (0..n).map(|c| delta.map_or(0.0, |d| d.ds[c][GAS].abs())).collect(),
            subdomain: layout.owner.iter().map(|&o| id(o)).collect(),
            region: layout
                .owner
                .iter()
                .map(|&o| id(o.and_then(|k| pattern.map(|p| p.region_of[k]))))
                .collect(),
        }
    }
}

/// Legacy VTK structured-points file with one cell per grid cell; the k
/// index runs along +z.
pub fn write_snapshot(grid: &Grid, fields: &SnapshotFields, time: f64, path: &Path) -> Result<(), OutputError> {
    let [nx, ny, nz] = grid.dims;
    let [dx, dy, dz] = grid.cell_size;
    let n = grid.num_cells();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "snapshot t={time}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", nx + 1, ny + 1, nz + 1);
    let _ = writeln!(s, "ORIGIN 0 0 0");
    let _ = writeln!(s, "SPACING {dx} {dy} {dz}");
    let _ = writeln!(s, "CELL_DATA {n}");
    let mut floats = |name: &str, v: &[f64]| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in v {
            let _ = writeln!(s, "{x}");
        }
    };
    floats("pressure", &fields.pressure);
    floats("S_gas", &fields.s_gas);
    floats("dS_gas", &fields.ds_gas);
    for (name, v) in [("subdomain", &fields.subdomain), ("region", &fields.region)] {
        let _ = writeln!(s, "SCALARS {name} int 1\nLOOKUP_TABLE default");
        for x in v.iter() {
            let _ = writeln!(s, "{x}");
        }
    }
    fs::write(path, s).map_err(io_err(path))
}

/// One method's totals for the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub method: String,
    pub nr_iter: usize,
    pub ls_iter: usize,
    pub nr_iter_w: usize,
    pub nr_iter_ddm: usize,
    pub steps: usize,
    pub failed_steps: usize,
    pub runtime_seconds: f64,
    pub linear_seconds: f64,
}

impl SummaryLine {
    pub fn ls_per_nr(&self) -> f64 {
        if self.nr_iter == 0 {
            0.0
        } else {
            self.ls_iter as f64 / self.nr_iter as f64
        }
    }
}

fn reduction(base: usize, x: usize) -> String {
    if base == 0 {
        "-".into()
    } else {
        format!("{:.1}%", 100.0 * (base as f64 - x as f64) / base as f64)
    }
}

/// Text table with iteration reductions relative to the FIM line, if any.
pub fn format_summary(lines: &[SummaryLine]) -> String {
    let fim = lines.iter().find(|l| l.method == "FIM");
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>8} {:>9} {:>7} {:>8} {:>10} {:>6} {:>6} {:>10} {:>9} {:>9} {:>9}",
        "method", "NRiter", "LSiter", "LS/NR", "NRiterW", "NRiter_DDM", "steps", "cuts", "runtime_s", "linear_s", "NR_red", "LS_red"
    );
    for l in lines {
        let (nr_red, ls_red) = match fim {
            Some(f) => (reduction(f.nr_iter, l.nr_iter), reduction(f.ls_iter, l.ls_iter)),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            s,
            "{:<8} {:>8} {:>9} {:>7.2} {:>8} {:>10} {:>6} {:>6} {:>10.2} {:>9.2} {:>9} {:>9}",
            l.method,
            l.nr_iter,
            l.ls_iter,
            l.ls_per_nr(),
            l.nr_iter_w,
            l.nr_iter_ddm,
            l.steps,
            l.failed_steps,
            l.runtime_seconds,
            l.linear_seconds,
            nr_red,
            ls_red
        );
    }
    s
}

pub fn write_summary(lines: &[SummaryLine], path: &Path) -> Result<(), OutputError> {
    fs::write(path, format_summary(lines)).map_err(io_err(path))
}
