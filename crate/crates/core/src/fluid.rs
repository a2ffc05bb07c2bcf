//! Two-phase (oil, gas), two-component immiscible fluid model.
//!
//! Component `i` lives only in phase `i`, so mole fractions are the identity
//! and the per-cell unknowns are the reference (oil) pressure and the molar
//! amounts of both components. Saturations follow from the phase volumes
//! `N_j / ξ_j(P)`; the volume constraint closes the system.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::GRAVITY;

pub const OIL: usize = 0;
pub const GAS: usize = 1;
pub const NUM_PHASES: usize = 2;
/// Unknowns per cell: P, N_oil, N_gas.
pub const NUM_VARS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("non-positive molar density for phase {phase} at P = {pressure} psi")]
    NonPhysicalDensity { phase: usize, pressure: f64 },
    #[error("non-positive pore volume at P = {0} psi")]
    NonPositivePoreVolume(f64),
    #[error("cell holds no fluid")]
    DegenerateCell,
    #[error("non-finite state value")]
    NonFinite,
    #[error("invalid fluid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseParams {
    /// Reference molar density, lb-mol/ft³.
    pub molar_density: f64,
    /// 1/psi.
    pub compressibility: f64,
    /// cp.
    pub viscosity: f64,
    /// lb/lb-mol.
    pub molar_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreyParams {
    pub n_oil: f64,
    pub n_gas: f64,
    pub kro_max: f64,
    pub krg_max: f64,
    pub s_or: f64,
    pub s_gr: f64,
}

impl Default for CoreyParams {
    fn default() -> Self {
        Self {
            n_oil: 2.0,
            n_gas: 2.0,
            kro_max: 1.0,
            krg_max: 1.0,
            s_or: 0.0,
            s_gr: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidParams {
    pub oil: PhaseParams,
    pub gas: PhaseParams,
    /// Rock compressibility, 1/psi.
    pub rock_compressibility: f64,
    /// Reference pressure, psi.
    pub p_ref: f64,
    pub corey: CoreyParams,
    /// Gas capillary pressure table as (S_gas, P_cg psi) points, sorted by
    /// saturation. Empty means zero capillarity.
    pub capillary: Vec<[f64; 2]>,
    pub gravity: bool,
}

impl Default for FluidParams {
    fn default() -> Self {
        Self {
            oil: PhaseParams {
                molar_density: 0.75,
                compressibility: 1e-5,
                viscosity: 1.0,
                molar_mass: 60.0,
            },
            gas: PhaseParams {
                molar_density: 0.05,
                compressibility: 5e-4,
                viscosity: 0.02,
                molar_mass: 20.0,
            },
            rock_compressibility: 4e-6,
            p_ref: 4000.0,
            corey: CoreyParams::default(),
            capillary: Vec::new(),
            gravity: true,
        }
    }
}

impl FluidParams {
    pub fn phase(&self, j: usize) -> &PhaseParams {
        if j == OIL {
            &self.oil
        } else {
            &self.gas
        }
    }

    pub fn validate(&self) -> Result<(), FluidError> {
        let bad = |m: &str| Err(FluidError::InvalidParams(m.to_string()));
        for (name, ph) in [("oil", &self.oil), ("gas", &self.gas)] {
            if !(ph.molar_density > 0.0) || !(ph.viscosity > 0.0) || !(ph.compressibility >= 0.0) {
                return bad(&format!("{name}: need molar_density > 0, viscosity > 0, compressibility >= 0"));
            }
        }
        let c = &self.corey;
        if !(c.s_or >= 0.0 && c.s_gr >= 0.0 && c.s_or + c.s_gr < 1.0) {
            return bad("residual saturations must satisfy 0 <= s_or + s_gr < 1");
        }
        if !(c.n_oil >= 1.0 && c.n_gas >= 1.0) {
            return bad("Corey exponents must be >= 1");
        }
        if !(self.rock_compressibility >= 0.0) {
            return bad("rock_compressibility must be >= 0");
        }
        if self.capillary.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return bad("capillary table saturations must be strictly increasing");
        }
        Ok(())
    }

    /// Gravity head per unit mass density (psi/ft per lb/ft³), zero when off.
    pub fn gravity_constant(&self) -> f64 {
        if self.gravity {
            GRAVITY
        } else {
            0.0
        }
    }
}

/// Primary unknowns on every grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    /// Reference-phase (oil) pressure, psi.
    pub p: Vec<f64>,
    /// Molar amount per cell of (oil, gas) components, lb-mol.
    pub n: Vec<[f64; 2]>,
}

impl FluidState {
    pub fn uniform(n_cells: usize, p: f64, n: [f64; 2]) -> Self {
        Self {
            p: vec![p; n_cells],
            n: vec![n; n_cells],
        }
    }

    pub fn num_cells(&self) -> usize {
        self.p.len()
    }

    pub fn cell(&self, c: usize) -> (f64, [f64; 2]) {
        (self.p[c], self.n[c])
    }

    pub fn total_moles(&self, cells: impl IntoIterator<Item = usize>) -> [f64; 2] {
        let mut t = [0.0; 2];
        for c in cells {
            t[0] += self.n[c][0];
            t[1] += self.n[c][1];
        }
        t
    }
}

/// ξ_j(P) = ξ_ref (1 + c_j (P − P_ref)) and its pressure derivative.
pub fn phase_molar_density(params: &FluidParams, j: usize, p: f64) -> Result<(f64, f64), FluidError> {
    let ph = params.phase(j);
    let xi = ph.molar_density * (1.0 + ph.compressibility * (p - params.p_ref));
    if !(xi > 0.0) {
        return Err(FluidError::NonPhysicalDensity { phase: j, pressure: p });
    }
    Ok((xi, ph.molar_density * ph.compressibility))
}

/// V_p(P) = V_b φ (1 + c_r (P − P_ref)) with derivative; `pv_ref` is V_b φ.
pub fn pore_volume(params: &FluidParams, pv_ref: f64, p: f64) -> Result<(f64, f64), FluidError> {
    let vp = pv_ref * (1.0 + params.rock_compressibility * (p - params.p_ref));
    if !(vp > 0.0) {
        return Err(FluidError::NonPositivePoreVolume(p));
    }
    Ok((vp, pv_ref * params.rock_compressibility))
}

/// Saturations and fluid volume with derivatives with respect to (P, N_o, N_g).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationEval {
    pub s: [f64; 2],
    pub ds: [[f64; NUM_VARS]; 2],
    pub vf: f64,
    pub dvf: [f64; NUM_VARS],
    pub xi: [f64; 2],
    pub dxi_dp: [f64; 2],
}

pub fn saturations_from_state(params: &FluidParams, p: f64, n: [f64; 2]) -> Result<SaturationEval, FluidError> {
    if !p.is_finite() || !n[0].is_finite() || !n[1].is_finite() {
        return Err(FluidError::NonFinite);
    }
    if n[0] <= 0.0 && n[1] <= 0.0 {
        return Err(FluidError::DegenerateCell);
    }
    let mut xi = [0.0; 2];
    let mut dxi = [0.0; 2];
    let mut v = [0.0; 2];
    let mut dv = [[0.0; NUM_VARS]; 2];
    for j in 0..NUM_PHASES {
        let (x, dx) = phase_molar_density(params, j, p)?;
        xi[j] = x;
        dxi[j] = dx;
        v[j] = n[j] / x;
        dv[j][0] = -n[j] * dx / (x * x);
        dv[j][1 + j] = 1.0 / x;
    }
    let vf = v[0] + v[1];
    let mut dvf = [0.0; NUM_VARS];
    for (k, d) in dvf.iter_mut().enumerate() {
        *d = dv[0][k] + dv[1][k];
    }
    // S_gas from its own volume; S_oil as the complement keeps the sum exact.
    let s_gas = v[1] / vf;
    let s = [1.0 - s_gas, s_gas];
    let mut ds = [[0.0; NUM_VARS]; 2];
    for k in 0..NUM_VARS {
        let d = (dv[1][k] * vf - v[1] * dvf[k]) / (vf * vf);
        ds[GAS][k] = d;
        ds[OIL][k] = -d;
    }
    Ok(SaturationEval {
        s,
        ds,
        vf,
        dvf,
        xi,
        dxi_dp: dxi,
    })
}

fn corey(s: f64, s_r: f64, denom: f64, kmax: f64, expo: f64) -> (f64, f64) {
    let se = (s - s_r) / denom;
    if se <= 0.0 {
        (0.0, if se == 0.0 && expo == 1.0 { kmax / denom } else { 0.0 })
    } else if se >= 1.0 {
        (kmax, if se == 1.0 { kmax * expo / denom } else { 0.0 })
    } else {
        (kmax * se.powf(expo), kmax * expo * se.powf(expo - 1.0) / denom)
    }
}

/// Corey relative permeabilities (k_ro, k_rg) and their derivatives with
/// respect to the phase's own saturation.
pub fn rel_perm(params: &FluidParams, s: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let c = &params.corey;
    let denom = 1.0 - c.s_or - c.s_gr;
    let (kro, dkro) = corey(s[OIL], c.s_or, denom, c.kro_max, c.n_oil);
    let (krg, dkrg) = corey(s[GAS], c.s_gr, denom, c.krg_max, c.n_gas);
    ([kro, krg], [dkro, dkrg])
}

/// Gas capillary pressure P_cg(S_g) and slope; piecewise linear, flat
/// extrapolation.
pub fn capillary_pressure(params: &FluidParams, s_gas: f64) -> (f64, f64) {
    let t = &params.capillary;
    match t.len() {
        0 => (0.0, 0.0),
        1 => (t[0][1], 0.0),
        _ => {
            if s_gas <= t[0][0] {
                return (t[0][1], 0.0);
            }
            if s_gas >= t[t.len() - 1][0] {
                return (t[t.len() - 1][1], 0.0);
            }
            let i = t.partition_point(|pt| pt[0] <= s_gas) - 1;
            let (a, b) = (t[i], t[i + 1]);
            let slope = (b[1] - a[1]) / (b[0] - a[0]);
            (a[1] + slope * (s_gas - a[0]), slope)
        }
    }
}

/// F_v = V_p(P) − V_f(P, N) and its gradient with respect to (P, N_o, N_g).
pub fn volume_residual(
    params: &FluidParams,
    pv_ref: f64,
    p: f64,
    n: [f64; 2],
) -> Result<(f64, [f64; NUM_VARS]), FluidError> {
    let (vp, dvp) = pore_volume(params, pv_ref, p)?;
    let sat = saturations_from_state(params, p, n)?;
    let mut d = [0.0; NUM_VARS];
    for (k, dk) in d.iter_mut().enumerate() {
        *dk = -sat.dvf[k];
    }
    d[0] += dvp;
    Ok((vp - sat.vf, d))
}

/// Everything the flux and well terms need from one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProps {
    pub sat: SaturationEval,
    pub kr: [f64; 2],
    /// Molar mobility k_rj ξ_j / μ_j per phase and its gradient.
    pub mob: [f64; 2],
    pub dmob: [[f64; NUM_VARS]; 2],
    /// Volumetric mobility k_rj / μ_j per phase and its gradient.
    pub vmob: [f64; 2],
    pub dvmob: [[f64; NUM_VARS]; 2],
    /// Mass density ρ_j = ξ_j M_j and dρ_j/dP.
    pub rho: [f64; 2],
    pub drho_dp: [f64; 2],
    /// Phase pressure P_j = P − P_cj and its gradient.
    pub pj: [f64; 2],
    pub dpj: [[f64; NUM_VARS]; 2],
    pub fv: f64,
    pub dfv: [f64; NUM_VARS],
}

pub fn evaluate_cell(params: &FluidParams, pv_ref: f64, p: f64, n: [f64; 2]) -> Result<CellProps, FluidError> {
    let sat = saturations_from_state(params, p, n)?;
    let (vp, dvp) = pore_volume(params, pv_ref, p)?;
    let (kr, dkr) = rel_perm(params, sat.s);
    let mut mob = [0.0; 2];
    let mut dmob = [[0.0; NUM_VARS]; 2];
    let mut vmob = [0.0; 2];
    let mut dvmob = [[0.0; NUM_VARS]; 2];
    let mut rho = [0.0; 2];
    let mut drho = [0.0; 2];
    for j in 0..NUM_PHASES {
        let ph = params.phase(j);
        vmob[j] = kr[j] / ph.viscosity;
        mob[j] = vmob[j] * sat.xi[j];
        for k in 0..NUM_VARS {
            let dkr_k = dkr[j] * sat.ds[j][k];
            dvmob[j][k] = dkr_k / ph.viscosity;
            dmob[j][k] = dkr_k * sat.xi[j] / ph.viscosity;
        }
        dmob[j][0] += kr[j] * sat.dxi_dp[j] / ph.viscosity;
        rho[j] = sat.xi[j] * ph.molar_mass;
        drho[j] = sat.dxi_dp[j] * ph.molar_mass;
    }
    let (pc, dpc) = capillary_pressure(params, sat.s[GAS]);
    let pj = [p, p - pc];
    let mut dpj = [[1.0, 0.0, 0.0]; 2];
    for k in 0..NUM_VARS {
        dpj[GAS][k] -= dpc * sat.ds[GAS][k];
    }
    let mut dfv = [0.0; NUM_VARS];
    for (k, d) in dfv.iter_mut().enumerate() {
        *d = -sat.dvf[k];
    }
    dfv[0] += dvp;
    Ok(CellProps {
        sat,
        kr,
        mob,
        dmob,
        vmob,
        dvmob,
        rho,
        drho_dp: drho,
        pj,
        dpj,
        fv: vp - sat.vf,
        dfv,
    })
}
