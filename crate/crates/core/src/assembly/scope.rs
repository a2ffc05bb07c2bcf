use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{component_face_flux, AssemblyError, Reservoir};
use crate::fluid::{evaluate_cell, CellProps, FluidState, NUM_VARS};
use crate::linalg::BlockCsrMatrix;

/// How a region problem sees the cells just outside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Fluxes against the exterior cells frozen at the start of the step.
    #[default]
    Pressure,
    /// Component fluxes evaluated once at the start of the step.
    Flux,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ScopeFace {
    Interior { face: usize, a: usize, b: usize },
    Boundary(BoundaryFace),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BoundaryFace {
    pub face: usize,
    /// Local index of the cell inside the scope.
    pub inner: usize,
    /// Global index of the cell outside.
    pub outer: usize,
    /// True when the inner cell is the face's `a` side.
    pub inner_is_a: bool,
    /// Outflow from the inner cell under [`BoundaryKind::Flux`].
    pub cached: [f64; 2],
}

/// The set of cells a nonlinear problem is posed on, together with the data
/// its boundary conditions need.
#[derive(Debug, Clone)]
pub struct ProblemScope {
    /// Global cell ids, ascending.
    pub cells: Vec<usize>,
    local: Vec<usize>,
    pub(crate) faces: Vec<ScopeFace>,
    pub boundary: BoundaryKind,
    /// Exterior cells frozen at time n, keyed by global id.
    pub(crate) exterior: BTreeMap<usize, CellProps>,
    /// Indices into the reservoir's well list.
    pub wells: Vec<usize>,
    pattern: BlockCsrMatrix,
}

impl ProblemScope {
    /// All active cells; no boundary data.
    pub fn global(res: &Reservoir) -> Result<Self, AssemblyError> {
        let state = FluidState {
            p: Vec::new(),
            n: Vec::new(),
        };
        Self::build(res, res.grid.active_cells(), BoundaryKind::Pressure, &state)
    }

    /// A region of active cells with boundary data snapshotted from
    /// `state_n`.
    pub fn region(
        res: &Reservoir,
        mut cells: Vec<usize>,
        boundary: BoundaryKind,
        state_n: &FluidState,
    ) -> Result<Self, AssemblyError> {
        cells.sort_unstable();
        cells.dedup();
        Self::build(res, cells, boundary, state_n)
    }

    fn build(res: &Reservoir, cells: Vec<usize>, boundary: BoundaryKind, state_n: &FluidState) -> Result<Self, AssemblyError> {
        let grid = &res.grid;
        let mut local = vec![usize::MAX; grid.num_cells()];
        for (l, &c) in cells.iter().enumerate() {
            local[c] = l;
        }
        let mut face_ids: Vec<usize> = cells
            .iter()
            .flat_map(|&c| grid.neighbors(c).iter().map(|&(_, f)| f))
            .collect();
        face_ids.sort_unstable();
        face_ids.dedup();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); cells.len()];
        let mut faces = Vec::with_capacity(face_ids.len());
        for f in face_ids {
            let face = &grid.faces[f];
            let (la, lb) = (local[face.a], local[face.b]);
            if la != usize::MAX && lb != usize::MAX {
                rows[la].push(lb);
                rows[lb].push(la);
                faces.push(ScopeFace::Interior { face: f, a: la, b: lb });
            } else {
                let inner_is_a = la != usize::MAX;
                faces.push(ScopeFace::Boundary(BoundaryFace {
                    face: f,
                    inner: if inner_is_a { la } else { lb },
                    outer: if inner_is_a { face.b } else { face.a },
                    inner_is_a,
                    cached: [0.0; 2],
                }));
            }
        }
        let mut wells = Vec::new();
        for (w, well) in res.wells.iter().enumerate() {
            let inside = well.perforations.iter().filter(|p| local[p.cell] != usize::MAX).count();
            if inside == 0 {
                continue;
            }
            if inside != well.perforations.len() {
                return Err(AssemblyError::SplitWell(well.name.clone()));
            }
            for p in &well.perforations {
                for q in &well.perforations {
                    rows[local[p.cell]].push(local[q.cell]);
                }
            }
            wells.push(w);
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let mut scope = Self {
            cells,
            local,
            faces,
            boundary,
            exterior: BTreeMap::new(),
            wells,
            pattern: BlockCsrMatrix::from_pattern(NUM_VARS, &rows),
        };
        if scope.has_boundary() {
            scope.snapshot_boundary(res, state_n)?;
        }
        Ok(scope)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn dim(&self) -> usize {
        self.cells.len() * NUM_VARS
    }

    /// Local index of a global cell, if it belongs to the scope.
    pub fn local_index(&self, cell: usize) -> Option<usize> {
        self.local.get(cell).copied().filter(|&l| l != usize::MAX)
    }

    pub fn has_boundary(&self) -> bool {
        self.faces.iter().any(|f| matches!(f, ScopeFace::Boundary(_)))
    }

    pub fn boundary_face_count(&self) -> usize {
        self.faces.iter().filter(|f| matches!(f, ScopeFace::Boundary(_))).count()
    }

    /// Zero matrix with the scope's Jacobian pattern.
    pub fn pattern(&self) -> &BlockCsrMatrix {
        &self.pattern
    }

    /// Refreezes the boundary data from the converged state at time n.
    pub fn snapshot_boundary(&mut self, res: &Reservoir, state_n: &FluidState) -> Result<(), AssemblyError> {
        self.exterior.clear();
        let eval = |c: usize| {
            let (p, n) = state_n.cell(c);
            evaluate_cell(&res.fluid, res.pv_ref[c], p, n).map_err(|source| AssemblyError::Cell { cell: c, source })
        };
        let g = res.fluid.gravity_constant();
        for sf in &mut self.faces {
            let ScopeFace::Boundary(bf) = sf else { continue };
            if let std::collections::btree_map::Entry::Vacant(e) = self.exterior.entry(bf.outer) {
                e.insert(eval(bf.outer)?);
            }
            bf.cached = [0.0; 2];
            if self.boundary == BoundaryKind::Flux {
                let face = &res.grid.faces[bf.face];
                let (pa, pb) = (eval(face.a)?, eval(face.b)?);
                let flux = component_face_flux(
                    res.face_trans(bf.face),
                    g,
                    &pa,
                    &pb,
                    res.grid.depth[face.a],
                    res.grid.depth[face.b],
                );
                let sign = if bf.inner_is_a { 1.0 } else { -1.0 };
                bf.cached = flux.flux.map(|f| sign * f);
            }
        }
        Ok(())
    }

    /// Packs the scope's cells of `state` into an unknown vector
    /// `[P, N_o, N_g]` per cell.
    pub fn gather(&self, state: &FluidState) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for &c in &self.cells {
            x.push(state.p[c]);
            x.extend_from_slice(&state.n[c]);
        }
        x
    }

    pub fn gather_moles(&self, state: &FluidState) -> Vec<[f64; 2]> {
        self.cells.iter().map(|&c| state.n[c]).collect()
    }

    /// Writes an unknown vector back into the scope's cells of `state`.
    pub fn scatter(&self, x: &[f64], state: &mut FluidState) {
        for (l, &c) in self.cells.iter().enumerate() {
            state.p[c] = x[l * NUM_VARS];
            state.n[c] = [x[l * NUM_VARS + 1], x[l * NUM_VARS + 2]];
        }
    }
}
