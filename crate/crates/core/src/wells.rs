//! Peaceman wells with rate and bottom-hole-pressure controls.
//!
//! The bottom-hole pressure is an eliminated scalar: it is re-resolved from
//! the current cell states at every residual evaluation, and its sensitivity
//! to the perforated cells is folded into the Jacobian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluid::{CellProps, FluidParams, FluidState, GAS, NUM_VARS, OIL};
use crate::grid::Grid;
use crate::units::DARCY;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WellError {
    #[error("well `{0}`: radius must be positive")]
    BadRadius(String),
    #[error("well `{0}`: equivalent radius {1:.4} ft does not exceed the well radius")]
    EquivalentRadius(String, f64),
    #[error("well `{0}`: perforated cell {1} has non-positive horizontal permeability")]
    ZeroPerm(String, usize),
    #[error("well `{0}`: perforations must share one x-y column")]
    MultiColumn(String),
    #[error("well `{0}`: no perforations")]
    NoPerforations(String),
    #[error("well `{0}`: rate target must be non-negative")]
    NegativeRate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WellKind {
    Injector,
    Producer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Control {
    /// Molar rate target (lb-mol/day) of the well's controlled component.
    Rate { target: f64 },
    /// Bottom-hole pressure target, psi.
    Bhp { target: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveControl {
    Rate,
    Bhp,
    Shut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perforation {
    pub cell: usize,
    /// Connection transmissibility (Darcy constant × Peaceman index).
    pub trans: f64,
    /// Depth below the reference perforation, ft.
    pub dz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Well {
    pub name: String,
    pub kind: WellKind,
    /// Injected component (injector) or rate-controlled component (producer).
    pub component: usize,
    pub perforations: Vec<Perforation>,
    pub control: Control,
    /// Maximum BHP for injectors, minimum for producers.
    pub bhp_limit: Option<f64>,
    /// Wellbore head gradient, psi/ft. Refreshed once per time step.
    pub head_gradient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellState {
    pub p_bh: f64,
    pub mode: ActiveControl,
    /// dP_bh/d(P, N_o, N_g) per perforation.
    pub dpbh: Vec<[f64; NUM_VARS]>,
    pub warning: Option<String>,
}

/// Peaceman well index, mD·ft.
pub fn peaceman_index(dx: f64, dy: f64, dz: f64, kx: f64, ky: f64, r_w: f64, skin: f64) -> Option<f64> {
    let r_eq = peaceman_equivalent_radius(dx, dy, kx, ky);
    if !(r_eq > r_w) {
        return None;
    }
    Some(2.0 * PI * (kx * ky).sqrt() * dz / ((r_eq / r_w).ln() + skin))
}

pub fn peaceman_equivalent_radius(dx: f64, dy: f64, kx: f64, ky: f64) -> f64 {
    let ryx = (ky / kx).sqrt();
    let rxy = (kx / ky).sqrt();
    0.28 * (ryx * dx * dx + rxy * dy * dy).sqrt() / ((ky / kx).powf(0.25) + (kx / ky).powf(0.25))
}

impl Well {
    /// Builds a well from perforated cells in one column, computing Peaceman
    /// connection factors from the grid.
    pub fn new(
        grid: &Grid,
        name: &str,
        kind: WellKind,
        component: usize,
        cells: &[usize],
        radius: f64,
        skin: f64,
        control: Control,
        bhp_limit: Option<f64>,
    ) -> Result<Self, WellError> {
        let name_s = name.to_string();
        if cells.is_empty() {
            return Err(WellError::NoPerforations(name_s));
        }
        if !(radius > 0.0) {
            return Err(WellError::BadRadius(name_s));
        }
        if let Control::Rate { target } = control {
            if !(target >= 0.0) {
                return Err(WellError::NegativeRate(name_s));
            }
        }
        let (i0, j0, _) = grid.ijk(cells[0]);
        if cells.iter().any(|&c| {
            let (i, j, _) = grid.ijk(c);
            (i, j) != (i0, j0)
        }) {
            return Err(WellError::MultiColumn(name_s));
        }
        let mut sorted = cells.to_vec();
        sorted.sort_unstable_by(|a, b| grid.depth[*a].total_cmp(&grid.depth[*b]));
        sorted.dedup();
        let z_ref = grid.depth[sorted[0]];
        let [dx, dy, dz] = grid.cell_size;
        let mut perforations = Vec::with_capacity(sorted.len());
        for &c in &sorted {
            let [kx, ky, _] = grid.perm[c];
            if !(kx > 0.0 && ky > 0.0) {
                return Err(WellError::ZeroPerm(name_s, c));
            }
            let wi = peaceman_index(dx, dy, dz, kx, ky, radius, skin).ok_or_else(|| {
                WellError::EquivalentRadius(name_s.clone(), peaceman_equivalent_radius(dx, dy, kx, ky))
            })?;
            perforations.push(Perforation {
                cell: c,
                trans: DARCY * wi,
                dz: grid.depth[c] - z_ref,
            });
        }
        Ok(Self {
            name: name_s,
            kind,
            component,
            perforations,
            control,
            bhp_limit,
            head_gradient: 0.0,
        })
    }

    /// Freezes the wellbore head gradient from the reference perforation at
    /// the start of a time step.
    pub fn prepare_step(&mut self, params: &FluidParams, state: &FluidState) -> Result<(), crate::fluid::FluidError> {
        let g = params.gravity_constant();
        if g == 0.0 {
            self.head_gradient = 0.0;
            return Ok(());
        }
        let c = self.perforations[0].cell;
        let (p, n) = state.cell(c);
        let rho = match self.kind {
            WellKind::Injector => {
                let (xi, _) = crate::fluid::phase_molar_density(params, self.component, p)?;
                xi * params.phase(self.component).molar_mass
            }
            WellKind::Producer => {
                let sat = crate::fluid::saturations_from_state(params, p, n)?;
                (0..2).map(|j| sat.s[j] * sat.xi[j] * params.phase(j).molar_mass).sum()
            }
        };
        self.head_gradient = rho * g;
        Ok(())
    }

    fn orientation(&self) -> f64 {
        match self.kind {
            WellKind::Producer => 1.0,
            WellKind::Injector => -1.0,
        }
    }

    /// Connection strength of the controlled component at each perforation
    /// and its gradient with respect to the cell unknowns.
    fn strength(&self, props: &CellProps) -> (f64, [f64; NUM_VARS]) {
        match self.kind {
            WellKind::Producer => (props.mob[self.component], props.dmob[self.component]),
            WellKind::Injector => {
                let c = self.component;
                let lt = props.vmob[OIL] + props.vmob[GAS];
                let xi = props.sat.xi[c];
                let mut d = [0.0; NUM_VARS];
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk = (props.dvmob[OIL][k] + props.dvmob[GAS][k]) * xi;
                }
                d[0] += lt * props.sat.dxi_dp[c];
                (lt * xi, d)
            }
        }
    }

    fn datum(&self, perf: &Perforation, props: &CellProps) -> f64 {
        props.pj[OIL] - self.head_gradient * perf.dz
    }
}

/// Resolves the bottom-hole pressure and active control mode for the given
/// perforation cell properties (one entry per perforation, in order).
pub fn resolve_control(well: &Well, props: &[CellProps]) -> WellState {
    let np = well.perforations.len();
    let zero = vec![[0.0; NUM_VARS]; np];
    let target = match well.control {
        Control::Bhp { target } => {
            return WellState {
                p_bh: target,
                mode: ActiveControl::Bhp,
                dpbh: zero,
                warning: None,
            }
        }
        Control::Rate { target } => target,
    };
    let s = well.orientation();
    let mut a = Vec::with_capacity(np);
    let mut da = Vec::with_capacity(np);
    let mut b = Vec::with_capacity(np);
    for (perf, pr) in well.perforations.iter().zip(props) {
        let (st, dst) = well.strength(pr);
        a.push(perf.trans * st);
        da.push(dst.map(|v| perf.trans * v));
        b.push(s * well.datum(perf, pr));
    }
    let sum_a: f64 = a.iter().sum();
    if target == 0.0 || !(sum_a > 0.0) {
        let p_bh = if sum_a > 0.0 {
            s * a.iter().zip(&b).map(|(a, b)| a * b).sum::<f64>() / sum_a
        } else {
            s * b.iter().sum::<f64>() / np as f64
        };
        let warning = (target > 0.0).then(|| format!("well `{}` shut: no mobile fluid at perforations", well.name));
        return WellState {
            p_bh,
            mode: ActiveControl::Shut,
            dpbh: zero,
            warning,
        };
    }
    // flow(y) = Σ a_p max(0, b_p − y) is convex and decreasing; Newton from
    // the all-active root approaches the solution from the left.
    let mut y = (a.iter().zip(&b).map(|(a, b)| a * b).sum::<f64>() - target) / sum_a;
    for _ in 0..(2 * np + 8) {
        let mut f = -target;
        let mut fp = 0.0;
        for p in 0..np {
            if b[p] > y {
                f += a[p] * (b[p] - y);
                fp -= a[p];
            }
        }
        if fp == 0.0 {
            break;
        }
        let step = f / fp;
        y -= step;
        if step.abs() <= 1e-15 * y.abs().max(1.0) {
            break;
        }
    }
    let p_bh = s * y;
    if let Some(limit) = well.bhp_limit {
        let violated = match well.kind {
            WellKind::Producer => p_bh < limit,
            WellKind::Injector => p_bh > limit,
        };
        if violated {
            return WellState {
                p_bh: limit,
                mode: ActiveControl::Bhp,
                dpbh: zero,
                warning: None,
            };
        }
    }
    let active_a: f64 = (0..np).filter(|&p| b[p] > y).map(|p| a[p]).sum();
    let dpbh = (0..np)
        .map(|p| {
            if b[p] > y {
                let mut d = [0.0; NUM_VARS];
                for k in 0..NUM_VARS {
                    d[k] = da[p][k] * (b[p] - y);
                }
                d[0] += a[p] * s;
                d.map(|v| s * v / active_a)
            } else {
                [0.0; NUM_VARS]
            }
        })
        .collect();
    WellState {
        p_bh,
        mode: ActiveControl::Rate,
        dpbh,
        warning: None,
    }
}

/// Per-perforation molar source terms. `q > 0` removes moles from the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PerforationFlow {
    pub q: [f64; 2],
    /// ∂q_i/∂(P, N_o, N_g) of the perforated cell at fixed P_bh.
    pub dq_dx: [[f64; NUM_VARS]; 2],
    pub dq_dpbh: [f64; 2],
    pub crossflow: bool,
}

pub fn well_source_terms(well: &Well, state: &WellState, props: &[CellProps]) -> Vec<PerforationFlow> {
    well.perforations
        .iter()
        .zip(props)
        .map(|(perf, pr)| {
            let mut out = PerforationFlow {
                q: [0.0; 2],
                dq_dx: [[0.0; NUM_VARS]; 2],
                dq_dpbh: [0.0; 2],
                crossflow: false,
            };
            if state.mode == ActiveControl::Shut {
                return out;
            }
            let s = well.orientation();
            let drawdown = s * (well.datum(perf, pr) - state.p_bh);
            if drawdown <= 0.0 {
                out.crossflow = drawdown < 0.0;
                return out;
            }
            match well.kind {
                WellKind::Producer => {
                    for i in 0..2 {
                        out.q[i] = perf.trans * pr.mob[i] * drawdown;
                        for k in 0..NUM_VARS {
                            out.dq_dx[i][k] = perf.trans * pr.dmob[i][k] * drawdown;
                        }
                        out.dq_dx[i][0] += perf.trans * pr.mob[i];
                        out.dq_dpbh[i] = -perf.trans * pr.mob[i];
                    }
                }
                WellKind::Injector => {
                    let c = well.component;
                    let (st, dst) = well.strength(pr);
                    out.q[c] = -perf.trans * st * drawdown;
                    for k in 0..NUM_VARS {
                        out.dq_dx[c][k] = -perf.trans * dst[k] * drawdown;
                    }
                    out.dq_dx[c][0] += perf.trans * st;
                    out.dq_dpbh[c] = -perf.trans * st;
                }
            }
            out
        })
        .collect()
}
