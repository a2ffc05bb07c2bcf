//! Built-in desk-scale five-spot cases.
//!
//! Both cases use a three-band layered reservoir (500, 50 and 200 mD from
//! the top), four gas injectors in the corner columns perforated in the
//! top band, and one oil producer in the centre column perforated in the
//! bottom half. Band boundaries sit at round(0.2·nz) and round(0.5·nz)
//! layers, so ten layers give 2/3/5, six give 1/2/3 and three give 1/1/1.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Component, Deck, DeckError, GridSection, InitialSection, OutputSection, Permeability, WellSpec};
use crate::fluid::{phase_molar_density, FluidParams, GAS, OIL};
use crate::timeloop::{DtController, DtMode, Schedule, SolverConfig};
use crate::newton::NewtonConfig;
use crate::wells::{Control, WellKind};

/// Band permeabilities, top to bottom, mD.
pub const BAND_PERMEABILITY: [f64; 3] = [500.0, 50.0, 200.0];

/// Reservoir volume injected per day as a fraction of the pore volume.
/// Gas reaches the producer well within the 200-day schedule on every
/// scale.
pub const INJECTION_PV_PER_DAY: f64 = 1e-3;

pub const CASE_END_TIME: f64 = 200.0;
/// Fixed step of the built-in cases, days.
pub const CASE_DT: f64 = 5.0;
pub const CASE_REPORT_INTERVAL: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseScale {
    Tiny,
    Small,
    Medium,
}

impl CaseScale {
    pub fn dims(self) -> [usize; 3] {
        match self {
            CaseScale::Tiny => [24, 24, 3],
            CaseScale::Small => [48, 48, 6],
            CaseScale::Medium => [96, 96, 6],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseScale::Tiny => "tiny",
            CaseScale::Small => "small",
            CaseScale::Medium => "medium",
        }
    }
}

impl fmt::Display for CaseScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tiny" => Ok(CaseScale::Tiny),
            "small" => Ok(CaseScale::Small),
            "medium" => Ok(CaseScale::Medium),
            _ => Err(format!("unknown scale `{s}` (expected tiny, small or medium)")),
        }
    }
}

/// Number of layers in each permeability band.
pub fn band_layers(nz: usize) -> [usize; 3] {
    let top = ((0.2 * nz as f64).round() as usize).max(1).min(nz);
    let mid_end = ((0.5 * nz as f64).round() as usize).max(top).min(nz);
    [top, mid_end - top, nz - mid_end]
}

/// Per-layer value of a three-band property.
pub fn banded(nz: usize, bands: [f64; 3]) -> Vec<f64> {
    let [a, b, _] = band_layers(nz);
    (0..nz)
        .map(|k| {
            if k < a {
                bands[0]
            } else if k < a + b {
                bands[1]
            } else {
                bands[2]
            }
        })
        .collect()
}

/// Horizontal permeability, one normal sample per cell with the layer's
/// mean and a standard deviation of `stddev` times that mean, truncated
/// below at `floor`. Cells are drawn layer by layer in index order from one
/// ChaCha8 stream.
pub fn gaussian_permeability(
    dims: [usize; 3],
    mean: &[f64],
    stddev: f64,
    seed: u64,
    floor: f64,
) -> Result<Vec<f64>, String> {
    let [nx, ny, nz] = dims;
    if mean.len() != nz {
        return Err(format!("expected {nz} layer means, got {}", mean.len()));
    }
    if !(stddev >= 0.0) {
        return Err(format!("stddev must be non-negative, got {stddev}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(nx * ny * nz);
    for &m in mean {
        let dist = Normal::new(m, stddev * m).map_err(|e| format!("layer mean {m}: {e}"))?;
        out.extend((0..nx * ny).map(|_| dist.sample(&mut rng).max(floor)));
    }
    Ok(out)
}

fn five_spot(dims: [usize; 3], permeability: Permeability) -> Deck {
    let [nx, ny, nz] = dims;
    let grid = GridSection {
        dims,
        cell_size: [20.0, 20.0, 10.0],
        top_depth: 8000.0,
        porosity: 0.2,
        permeability,
        kv_ratio: 1.0,
    };
    let fluid = FluidParams::default();
    let initial = InitialSection::default();
    let pore_volume = (nx * ny * nz) as f64 * 20.0 * 20.0 * 10.0 * grid.porosity;
    let reservoir_rate = INJECTION_PV_PER_DAY * pore_volume;
    let xi = |j| phase_molar_density(&fluid, j, initial.pressure).expect("default fluid").0;
    let gas_per_injector = reservoir_rate / 4.0 * xi(GAS);
    let oil_rate = reservoir_rate * xi(OIL);

    let [top, _, _] = band_layers(nz);
    let producer_layers = ((0.5 * nz as f64).round() as usize).max(1);
    let corners = [(0, 0), (nx - 1, 0), (0, ny - 1), (nx - 1, ny - 1)];
    let mut wells: Vec<WellSpec> = corners
        .iter()
        .enumerate()
        .map(|(w, &(i, j))| WellSpec {
            name: format!("INJ{}", w + 1),
            kind: WellKind::Injector,
            component: Component::Gas,
            cells: (0..top).map(|k| [i, j, k]).collect(),
            radius: 0.25,
            skin: 0.0,
            control: Control::Rate {
                target: gas_per_injector,
            },
            bhp_limit: Some(10_000.0),
        })
        .collect();
    wells.push(WellSpec {
        name: "PROD".into(),
        kind: WellKind::Producer,
        component: Component::Oil,
        cells: (nz - producer_layers..nz).map(|k| [nx / 2, ny / 2, k]).collect(),
        radius: 0.25,
        skin: 0.0,
        control: Control::Rate { target: oil_rate },
        bhp_limit: Some(1000.0),
    });

    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        dt: DtController {
            dt_init: CASE_DT,
            mode: DtMode::Fixed,
            ..DtController::default()
        },
        // ILU(0) rarely gets below 1e-2 within 100 iterations here, so a
        // tighter inner tolerance only buys capped solves.
        global: NewtonConfig {
            linear_rtol: Some(1e-2),
            ..defaults.global
        },
        ..defaults
    };
    let report_times = (1..)
        .map(|r| r as f64 * CASE_REPORT_INTERVAL)
        .take_while(|&t| t < CASE_END_TIME)
        .collect();
    Deck {
        grid,
        fluid,
        wells,
        initial,
        solver,
        schedule: Schedule {
            end_time: CASE_END_TIME,
            report_times,
        },
        output: OutputSection {
            snapshots: false,
            coupling: true,
        },
    }
}

fn resolved(mut deck: Deck) -> Deck {
    deck.resolve().expect("built-in cases are valid");
    deck
}

/// Homogeneous-band five-spot.
pub fn generate_case1_mini(scale: CaseScale) -> Deck {
    let dims = scale.dims();
    resolved(five_spot(
        dims,
        Permeability::Layered {
            values: banded(dims[2], BAND_PERMEABILITY),
        },
    ))
}

/// The five-spot with Gaussian permeability in every layer (30% of the
/// band mean, truncated at 1 mD).
pub fn generate_case2_mini(scale: CaseScale, seed: u64) -> Deck {
    generate_case2_with_stddev(scale, seed, 0.3)
}

pub fn generate_case2_with_stddev(scale: CaseScale, seed: u64, stddev: f64) -> Deck {
    let dims = scale.dims();
    resolved(five_spot(
        dims,
        Permeability::Gaussian {
            mean: banded(dims[2], BAND_PERMEABILITY),
            stddev,
            seed,
            floor: 1.0,
        },
    ))
}

/// Looks up `case1-mini:<scale>` or `case2-mini:<scale>`.
pub fn generate_case(spec: &str, seed: u64) -> Result<Deck, DeckError> {
    let unknown = || DeckError::UnknownCase(spec.to_string());
    let (name, scale) = spec.split_once(':').ok_or_else(unknown)?;
    let scale: CaseScale = scale.parse().map_err(|_| unknown())?;
    match name {
        "case1-mini" => Ok(generate_case1_mini(scale)),
        "case2-mini" => Ok(generate_case2_mini(scale, seed)),
        _ => Err(unknown()),
    }
}
