//! Input decks, built-in cases and result files.
//!
//! A deck is TOML with the sections `grid`, `fluid`, `wells`, `initial`,
//! `solver`, `schedule` and `output`. Unknown keys are rejected and every
//! default is written back by [`Deck::echo`], so `parse(echo(d)) == d`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::Reservoir;
use crate::fluid::{phase_molar_density, pore_volume, FluidError, FluidParams, FluidState, GAS, OIL};
use crate::grid::{tile_partition, Grid, GridError};
use crate::timeloop::{Method, Schedule, SolverConfig};
use crate::wells::{Control, Well, WellError, WellKind};

mod cases;
mod output;
mod run;

pub use cases::{
    band_layers, banded, gaussian_permeability, generate_case, generate_case1_mini, generate_case2_mini,
    generate_case2_with_stddev, CaseScale, BAND_PERMEABILITY,
};
pub use output::{
    format_summary, read_reports, write_coupling, write_reports, write_snapshot, write_summary, OutputError,
    SnapshotFields, SummaryLine, REPORT_HEADER,
};
pub use run::{simulate, RunError, RunOutcome};

#[derive(Debug, Error)]
pub enum DeckError {
    #[error("deck syntax error: {0}")]
    Syntax(String),
    #[error("invalid deck value at `{path}`: {message}")]
    Semantic { path: String, message: String },
    #[error("well `{name}`: {source}")]
    Well {
        name: String,
        #[source]
        source: WellError,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error("unknown case `{0}` (expected case1-mini:<scale> or case2-mini:<scale>, scale tiny, small or medium)")]
    UnknownCase(String),
}

fn semantic(path: &str, message: impl Into<String>) -> DeckError {
    DeckError::Semantic {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Horizontal permeability model, mD. Vertical permeability is the
/// horizontal value times `kv_ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Permeability {
    Uniform {
        value: f64,
    },
    /// One value per layer, top first.
    Layered {
        values: Vec<f64>,
    },
    /// Per-layer normal samples, truncated below at `floor`.
    Gaussian {
        mean: Vec<f64>,
        /// Standard deviation as a fraction of the layer mean.
        stddev: f64,
        seed: u64,
        #[serde(default = "default_floor")]
        floor: f64,
    },
}

fn default_floor() -> f64 {
    1.0
}

fn default_cell_size() -> [f64; 3] {
    [20.0, 20.0, 10.0]
}

fn default_top_depth() -> f64 {
    8000.0
}

fn default_porosity() -> f64 {
    0.2
}

fn default_kv_ratio() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dims: [usize; 3],
    /// ft.
    #[serde(default = "default_cell_size")]
    pub cell_size: [f64; 3],
    /// Depth of the top face of the first layer, ft.
    #[serde(default = "default_top_depth")]
    pub top_depth: f64,
    #[serde(default = "default_porosity")]
    pub porosity: f64,
    pub permeability: Permeability,
    #[serde(default = "default_kv_ratio")]
    pub kv_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Oil,
    Gas,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Component::Oil => OIL,
            Component::Gas => GAS,
        }
    }
}

fn default_radius() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellSpec {
    pub name: String,
    pub kind: WellKind,
    /// Injected component, or the rate-controlled one for producers.
    pub component: Component,
    /// Perforated cells as zero-based [i, j, k]; one x-y column.
    pub cells: Vec<[usize; 3]>,
    /// ft.
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub skin: f64,
    pub control: Control,
    /// Maximum BHP for injectors, minimum for producers, psi.
    #[serde(default)]
    pub bhp_limit: Option<f64>,
}

fn default_pressure() -> f64 {
    4000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Oil pressure at the datum, psi.
    #[serde(default = "default_pressure")]
    pub pressure: f64,
    /// Datum depth, ft; the top of the grid when absent.
    #[serde(default)]
    pub datum_depth: Option<f64>,
    #[serde(default)]
    pub gas_saturation: f64,
    /// Gravity-equilibrated oil pressure column; uniform pressure otherwise.
    #[serde(default = "default_true")]
    pub hydrostatic: bool,
}

fn default_true() -> bool {
    true
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            pressure: default_pressure(),
            datum_depth: None,
            gas_saturation: 0.0,
            hydrostatic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Write VTK snapshots at report times.
    #[serde(default)]
    pub snapshots: bool,
    /// Write coupling patterns at report times.
    #[serde(default = "default_true")]
    pub coupling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deck {
    pub grid: GridSection,
    #[serde(default)]
    pub fluid: FluidParams,
    #[serde(default)]
    pub wells: Vec<WellSpec>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverConfig,
    pub schedule: Schedule,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parses and validates a deck, filling every default.
pub fn parse_deck(text: &str) -> Result<Deck, DeckError> {
    let mut deck: Deck = toml::from_str(text).map_err(|e| DeckError::Syntax(e.to_string()))?;
    deck.resolve()?;
    Ok(deck)
}

impl Deck {
    /// Canonical text form with all defaults written out.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("decks always serialize")
    }

    /// Validates the deck and records derived defaults.
    pub fn resolve(&mut self) -> Result<(), DeckError> {
        let grid = self.build_grid()?;
        self.fluid.validate()?;
        let layout = tile_partition(&grid, self.solver.tiles[0], self.solver.tiles[1])?;
        self.solver.validate(layout.n_sub).map_err(|m| semantic("solver", m))?;
        if self.solver.method == Method::Addm03 && self.solver.blocks.is_none() {
            self.solver.blocks = Some(self.solver.block_count(layout.n_sub));
        }
        self.schedule.validate().map_err(|m| semantic("schedule", m))?;
        let mut names = std::collections::BTreeSet::new();
        for (w, spec) in self.wells.iter().enumerate() {
            if !names.insert(spec.name.as_str()) {
                return Err(semantic(&format!("wells[{w}].name"), format!("duplicate well name `{}`", spec.name)));
            }
            let well = self.build_well(&grid, spec)?;
            let owners: Vec<Option<usize>> = well.perforations.iter().map(|p| layout.owner[p.cell]).collect();
            if owners.iter().any(|o| o.is_none() || *o != owners[0]) {
                return Err(semantic(
                    &format!("wells[{w}].cells"),
                    format!("well `{}` perforates more than one subdomain", spec.name),
                ));
            }
        }
        if !(0.0..1.0).contains(&self.initial.gas_saturation) {
            return Err(semantic("initial.gas_saturation", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid, DeckError> {
        let g = &self.grid;
        let [nx, ny, nz] = g.dims;
        let n = nx * ny * nz;
        let layer_values = |values: &[f64], path: &str| -> Result<Vec<f64>, DeckError> {
            if values.len() != nz {
                return Err(semantic(path, format!("expected {nz} layer values, got {}", values.len())));
            }
            Ok((0..n).map(|c| values[c / (nx * ny)]).collect())
        };
        let kh: Vec<f64> = match &g.permeability {
            Permeability::Uniform { value } => vec![*value; n],
            Permeability::Layered { values } => layer_values(values, "grid.permeability.values")?,
            Permeability::Gaussian {
                mean,
                stddev,
                seed,
                floor,
            } => {
                layer_values(mean, "grid.permeability.mean")?;
                cases::gaussian_permeability(g.dims, mean, *stddev, *seed, *floor)
                    .map_err(|m| semantic("grid.permeability", m))?
            }
        };
        if !(g.kv_ratio >= 0.0) {
            return Err(semantic("grid.kv_ratio", "must be non-negative"));
        }
        let perm = kh.iter().map(|&k| [k, k, k * g.kv_ratio]).collect();
        Ok(Grid::cartesian(g.dims, g.cell_size, g.top_depth, perm, g.porosity)?)
    }

    fn build_well(&self, grid: &Grid, spec: &WellSpec) -> Result<Well, DeckError> {
        let [nx, ny, nz] = grid.dims;
        let mut cells = Vec::with_capacity(spec.cells.len());
        for &[i, j, k] in &spec.cells {
            if i >= nx || j >= ny || k >= nz {
                return Err(semantic(
                    &format!("wells.{}.cells", spec.name),
                    format!("cell [{i}, {j}, {k}] outside the grid"),
                ));
            }
            cells.push(grid.index(i, j, k));
        }
        Well::new(
            grid,
            &spec.name,
            spec.kind,
            spec.component.index(),
            &cells,
            spec.radius,
            spec.skin,
            spec.control,
            spec.bhp_limit,
        )
        .map_err(|source| DeckError::Well {
            name: spec.name.clone(),
            source,
        })
    }

    /// The reservoir with its wells.
    pub fn build_reservoir(&self) -> Result<Reservoir, DeckError> {
        let grid = self.build_grid()?;
        let wells = self
            .wells
            .iter()
            .map(|s| self.build_well(&grid, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Reservoir::new(grid, self.fluid.clone(), wells))
    }

    /// Initial state: oil pressure in gravity equilibrium with the oil
    /// column (or uniform), uniform gas saturation. Layers are integrated
    /// with the same averaged density as the flux terms, so a gas-free
    /// column starts with zero vertical flux.
    pub fn initial_state(&self, res: &Reservoir) -> Result<FluidState, DeckError> {
        let init = &self.initial;
        let grid = &res.grid;
        let fluid = &res.fluid;
        let [_, _, nz] = grid.dims;
        let datum = init.datum_depth.unwrap_or(self.grid.top_depth);
        let g = if init.hydrostatic { fluid.gravity_constant() } else { 0.0 };
        let rho = |p: f64| phase_molar_density(fluid, OIL, p).map(|(xi, _)| xi * fluid.oil.molar_mass);
        // p = base + ½(ρ(base_p) + ρ(p)) g dz, by fixed point.
        let step = |base_p: f64, base_rho: f64, dz: f64| -> Result<f64, FluidError> {
            let mut p = base_p;
            for _ in 0..100 {
                let next = base_p + 0.5 * (base_rho + rho(p)?) * g * dz;
                let done = (next - p).abs() <= 1e-14 * next.abs();
                p = next;
                if done {
                    break;
                }
            }
            Ok(p)
        };
        let mut layer_p = Vec::with_capacity(nz);
        let z0 = grid.depth[grid.index(0, 0, 0)];
        layer_p.push(step(init.pressure, rho(init.pressure)?, z0 - datum)?);
        for k in 1..nz {
            let dz = grid.depth[grid.index(0, 0, k)] - grid.depth[grid.index(0, 0, k - 1)];
            let prev = layer_p[k - 1];
            layer_p.push(step(prev, rho(prev)?, dz)?);
        }
        let nc = grid.num_cells();
        let mut state = FluidState::uniform(nc, init.pressure, [0.0, 0.0]);
        let sg = init.gas_saturation;
        for c in 0..nc {
            let (_, _, k) = grid.ijk(c);
            let p = layer_p[k];
            let (pv, _) = pore_volume(fluid, res.pv_ref[c], p)?;
            let (xo, _) = phase_molar_density(fluid, OIL, p)?;
            let (xg, _) = phase_molar_density(fluid, GAS, p)?;
            state.p[c] = p;
            state.n[c] = [(1.0 - sg) * pv * xo, sg * pv * xg];
        }
        Ok(state)
    }
}

/// Well rate target helper for case decks.
pub fn rate(target: f64) -> Control {
    Control::Rate { target }
}

#[cfg(test)]
mod tests;
