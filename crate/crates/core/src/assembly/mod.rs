//! Fully implicit residual and Jacobian for the global problem or any
//! region of it.
//!
//! Rows are cell-major; within a cell the order is the volume constraint
//! followed by the oil and gas conservation equations. Columns follow the
//! unknowns `[P, N_o, N_g]`. Fluxes are positive out of a cell and well terms
//! are positive for production.

use thiserror::Error;

use crate::fluid::{evaluate_cell, CellProps, FluidError, FluidParams, FluidState, NUM_PHASES, NUM_VARS};
use crate::grid::Grid;
use crate::linalg::BlockCsrMatrix;
use crate::units::DARCY;
use crate::wells::{resolve_control, well_source_terms, Well, WellState};

mod scope;

pub use scope::{BoundaryKind, ProblemScope};
use scope::ScopeFace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: FluidError,
    },
    #[error("well `{0}` is split across the problem boundary")]
    SplitWell(String),
    #[error("unknown vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Everything that stays fixed while the unknowns change.
#[derive(Debug, Clone)]
pub struct Reservoir {
    pub grid: Grid,
    pub fluid: FluidParams,
    pub wells: Vec<Well>,
    /// Reference pore volume per cell, ft³.
    pub pv_ref: Vec<f64>,
}

impl Reservoir {
    pub fn new(grid: Grid, fluid: FluidParams, wells: Vec<Well>) -> Self {
        let vb = grid.bulk_volume();
        let pv_ref = grid.poro.iter().map(|phi| vb * phi).collect();
        Self {
            grid,
            fluid,
            wells,
            pv_ref,
        }
    }

    /// Face transmissibility in ft³·cp/(day·psi).
    pub fn face_trans(&self, face: usize) -> f64 {
        DARCY * self.grid.faces[face].gamma
    }

    /// Freezes per-step well data from the state at the start of the step.
    pub fn prepare_wells(&mut self, state: &FluidState) -> Result<(), AssemblyError> {
        for w in &mut self.wells {
            w.prepare_step(&self.fluid, state).map_err(|source| AssemblyError::Cell {
                cell: w.perforations[0].cell,
                source,
            })?;
        }
        Ok(())
    }

    /// Per-unknown row scaling that makes residuals dimensionless:
    /// conservation rows by dt/(V_p ξ_ref), the volume row by 1/V_p.
    pub fn row_scale(&self, scope: &ProblemScope, dt: f64) -> Vec<f64> {
        let mut s = Vec::with_capacity(scope.dim());
        for &c in &scope.cells {
            let pv = self.pv_ref[c];
            s.push(1.0 / pv);
            s.push(dt / (pv * self.fluid.oil.molar_density));
            s.push(dt / (pv * self.fluid.gas.molar_density));
        }
        s
    }
}

/// Component fluxes from cell `a` to cell `b` and their gradients with
/// respect to each cell's unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFlux {
    pub flux: [f64; NUM_PHASES],
    pub da: [[f64; NUM_VARS]; NUM_PHASES],
    pub db: [[f64; NUM_VARS]; NUM_PHASES],
}

/// Two-point flux with phase-potential upwinding. `trans` already carries
/// the Darcy constant; `g` is the gravity head per unit mass density and
/// `z` is depth (positive down).
pub fn component_face_flux(trans: f64, g: f64, a: &CellProps, b: &CellProps, z_a: f64, z_b: f64) -> FaceFlux {
    let mut out = FaceFlux {
        flux: [0.0; NUM_PHASES],
        da: [[0.0; NUM_VARS]; NUM_PHASES],
        db: [[0.0; NUM_VARS]; NUM_PHASES],
    };
    let dz = z_a - z_b;
    for j in 0..NUM_PHASES {
        let rho = 0.5 * (a.rho[j] + b.rho[j]);
        let dphi = a.pj[j] - b.pj[j] - rho * g * dz;
        let mut dphi_a = a.dpj[j];
        let mut dphi_b = b.dpj[j].map(|v| -v);
        dphi_a[0] -= 0.5 * a.drho_dp[j] * g * dz;
        dphi_b[0] -= 0.5 * b.drho_dp[j] * g * dz;
        let a_up = dphi >= 0.0;
        let up = if a_up { a } else { b };
        let mob = up.mob[j];
        out.flux[j] = trans * mob * dphi;
        for k in 0..NUM_VARS {
            out.da[j][k] = trans * mob * dphi_a[k];
            out.db[j][k] = trans * mob * dphi_b[k];
        }
        let dup = if a_up { &mut out.da[j] } else { &mut out.db[j] };
        for k in 0..NUM_VARS {
            dup[k] += trans * up.dmob[j][k] * dphi;
        }
    }
    out
}

/// Result of one well evaluation inside an assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct WellReport {
    /// Index into the reservoir's well list.
    pub well: usize,
    pub state: WellState,
    /// Total component rates, lb-mol/day, positive for production.
    pub rate: [f64; NUM_PHASES],
    pub crossflow: bool,
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub residual: Vec<f64>,
    pub jacobian: Option<BlockCsrMatrix>,
    pub wells: Vec<WellReport>,
}

/// Evaluates the residual (and optionally the Jacobian) of the scope's
/// problem at the unknowns `x`, given the component amounts at time n.
pub fn assemble(
    res: &Reservoir,
    scope: &ProblemScope,
    x: &[f64],
    n_old: &[[f64; 2]],
    dt: f64,
    with_jacobian: bool,
) -> Result<AssembledSystem, AssemblyError> {
    let nc = scope.num_cells();
    if x.len() != nc * NUM_VARS || n_old.len() != nc {
        return Err(AssemblyError::Dimension {
            expected: nc * NUM_VARS,
            got: x.len(),
        });
    }
    let props = scope
        .cells
        .iter()
        .enumerate()
        .map(|(l, &c)| {
            let v = &x[l * NUM_VARS..(l + 1) * NUM_VARS];
            evaluate_cell(&res.fluid, res.pv_ref[c], v[0], [v[1], v[2]])
                .map_err(|source| AssemblyError::Cell { cell: c, source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut f = vec![0.0; nc * NUM_VARS];
    let mut jac = with_jacobian.then(|| scope.pattern().clone());
    let inv_dt = 1.0 / dt;

    for (l, pr) in props.iter().enumerate() {
        let r = &mut f[l * NUM_VARS..(l + 1) * NUM_VARS];
        r[0] = pr.fv;
        for i in 0..NUM_PHASES {
            r[1 + i] = (x[l * NUM_VARS + 1 + i] - n_old[l][i]) * inv_dt;
        }
        if let Some(j) = jac.as_mut() {
            let d = j.block_mut(l);
            d[..NUM_VARS].copy_from_slice(&pr.dfv);
            for i in 0..NUM_PHASES {
                d[(1 + i) * NUM_VARS + 1 + i] = inv_dt;
            }
        }
    }

    let g = res.fluid.gravity_constant();
    let depth = &res.grid.depth;
    for sf in &scope.faces {
        match sf {
            ScopeFace::Interior { face, a, b } => {
                let gf = &res.grid.faces[*face];
                let ff = component_face_flux(res.face_trans(*face), g, &props[*a], &props[*b], depth[gf.a], depth[gf.b]);
                for i in 0..NUM_PHASES {
                    f[a * NUM_VARS + 1 + i] += ff.flux[i];
                    f[b * NUM_VARS + 1 + i] -= ff.flux[i];
                }
                if let Some(j) = jac.as_mut() {
                    add_rows(j, *a, *a, &ff.da, 1.0);
                    add_rows(j, *a, *b, &ff.db, 1.0);
                    add_rows(j, *b, *a, &ff.da, -1.0);
                    add_rows(j, *b, *b, &ff.db, -1.0);
                }
            }
            ScopeFace::Boundary(bf) => {
                let sign = if bf.inner_is_a { 1.0 } else { -1.0 };
                match scope.boundary {
                    BoundaryKind::Flux => {
                        for i in 0..NUM_PHASES {
                            f[bf.inner * NUM_VARS + 1 + i] += bf.cached[i];
                        }
                    }
                    BoundaryKind::Pressure => {
                        let gf = &res.grid.faces[bf.face];
                        let ext = &scope.exterior[&bf.outer];
                        let inner = &props[bf.inner];
                        let (pa, pb) = if bf.inner_is_a { (inner, ext) } else { (ext, inner) };
                        let ff = component_face_flux(res.face_trans(bf.face), g, pa, pb, depth[gf.a], depth[gf.b]);
                        for i in 0..NUM_PHASES {
                            f[bf.inner * NUM_VARS + 1 + i] += sign * ff.flux[i];
                        }
                        if let Some(j) = jac.as_mut() {
                            let d = if bf.inner_is_a { &ff.da } else { &ff.db };
                            add_rows(j, bf.inner, bf.inner, d, sign);
                        }
                    }
                }
            }
        }
    }

    let mut wells = Vec::with_capacity(scope.wells.len());
    for &w in &scope.wells {
        let well = &res.wells[w];
        let locals: Vec<usize> = well
            .perforations
            .iter()
            .map(|p| scope.local_index(p.cell).expect("well inside scope"))
            .collect();
        let wprops: Vec<CellProps> = locals.iter().map(|&l| props[l]).collect();
        let state = resolve_control(well, &wprops);
        let flows = well_source_terms(well, &state, &wprops);
        let mut rate = [0.0; NUM_PHASES];
        let mut crossflow = false;
        for (p, fl) in flows.iter().enumerate() {
            let l = locals[p];
            crossflow |= fl.crossflow;
            for i in 0..NUM_PHASES {
                f[l * NUM_VARS + 1 + i] += fl.q[i];
                rate[i] += fl.q[i];
            }
            if let Some(j) = jac.as_mut() {
                add_rows(j, l, l, &fl.dq_dx, 1.0);
                for (q, &lq) in locals.iter().enumerate() {
                    let mut d = [[0.0; NUM_VARS]; NUM_PHASES];
                    for i in 0..NUM_PHASES {
                        for k in 0..NUM_VARS {
                            d[i][k] = fl.dq_dpbh[i] * state.dpbh[q][k];
                        }
                    }
                    add_rows(j, l, lq, &d, 1.0);
                }
            }
        }
        wells.push(WellReport {
            well: w,
            state,
            rate,
            crossflow,
        });
    }

    Ok(AssembledSystem {
        residual: f,
        jacobian: jac,
        wells,
    })
}

/// Adds `sign · d` to the conservation rows of block (row, col).
fn add_rows(j: &mut BlockCsrMatrix, row: usize, col: usize, d: &[[f64; NUM_VARS]; NUM_PHASES], sign: f64) {
    let pos = j.find(row, col).expect("coupling present in pattern");
    let blk = j.block_at_mut(pos);
    for i in 0..NUM_PHASES {
        for k in 0..NUM_VARS {
            blk[(1 + i) * NUM_VARS + k] += sign * d[i][k];
        }
    }
}
