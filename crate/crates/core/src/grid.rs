//! Structured Cartesian grids, two-point geometric transmissibilities and
//! the base subdomain tiling.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimensions must be positive, got {0:?}")]
    BadDims([usize; 3]),
    #[error("cell sizes must be positive, got {0:?}")]
    BadCellSize([f64; 3]),
    #[error("field `{field}` has length {got}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("negative permeability at cell {0}")]
    NegativePerm(usize),
    #[error("porosity must lie in (0, 1], got {0}")]
    BadPorosity(f64),
    #[error("tiling {px}x{py} does not fit grid {nx}x{ny}")]
    TilingTooFine {
        px: usize,
        py: usize,
        nx: usize,
        ny: usize,
    },
    #[error("tile {0} contains no active cells")]
    EmptyTile(usize),
}

/// Coordinate axis of a face normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

/// An interior face between two active cells, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub a: usize,
    pub b: usize,
    pub axis: Axis,
    /// Geometric transmissibility Γ in mD·ft.
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub dims: [usize; 3],
    pub cell_size: [f64; 3],
    /// Cell-centre depth in ft, increasing downwards with the layer index.
    pub depth: Vec<f64>,
    /// Diagonal permeability (kx, ky, kz) in mD.
    pub perm: Vec<[f64; 3]>,
    pub poro: Vec<f64>,
    pub active: Vec<bool>,
    pub faces: Vec<Face>,
    /// Per cell: (neighbour, face index), sorted by neighbour.
    neighbors: Vec<Vec<(usize, usize)>>,
}

impl Grid {
    /// Builds a grid with every cell active.
    pub fn cartesian(
        dims: [usize; 3],
        cell_size: [f64; 3],
        top_depth: f64,
        perm: Vec<[f64; 3]>,
        poro: f64,
    ) -> Result<Self, GridError> {
        let n = dims.iter().product::<usize>();
        Self::cartesian_with_mask(dims, cell_size, top_depth, perm, vec![poro; n], vec![true; n])
    }

    pub fn cartesian_with_mask(
        dims: [usize; 3],
        cell_size: [f64; 3],
        top_depth: f64,
        perm: Vec<[f64; 3]>,
        poro: Vec<f64>,
        active: Vec<bool>,
    ) -> Result<Self, GridError> {
        if dims.contains(&0) {
            return Err(GridError::BadDims(dims));
        }
        if cell_size.iter().any(|&h| !(h > 0.0)) {
            return Err(GridError::BadCellSize(cell_size));
        }
        let n = dims.iter().product::<usize>();
        for (field, got) in [("perm", perm.len()), ("poro", poro.len()), ("active", active.len())] {
            if got != n {
                return Err(GridError::LengthMismatch {
                    field,
                    got,
                    expected: n,
                });
            }
        }
        if let Some(c) = perm.iter().position(|k| k.iter().any(|&v| !(v >= 0.0))) {
            return Err(GridError::NegativePerm(c));
        }
        if let Some(&p) = poro.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(GridError::BadPorosity(p));
        }
        let [nx, ny, nz] = dims;
        let mut depth = Vec::with_capacity(n);
        for k in 0..nz {
            let z = top_depth + (k as f64 + 0.5) * cell_size[2];
            depth.extend(std::iter::repeat_n(z, nx * ny));
        }
        let mut grid = Grid {
            dims,
            cell_size,
            depth,
            perm,
            poro,
            active,
            faces: Vec::new(),
            neighbors: vec![Vec::new(); n],
        };
        grid.build_faces();
        Ok(grid)
    }

    fn build_faces(&mut self) {
        let [nx, ny, nz] = self.dims;
        let mut faces = Vec::new();
        let mut push = |g: &Grid, a: usize, b: usize, axis: Axis| {
            if g.active[a] && g.active[b] {
                let gamma = face_geometric_transmissibility(g, a, b, axis);
                faces.push(Face { a, b, axis, gamma });
            }
        };
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx.saturating_sub(1) {
                    let a = self.index(i, j, k);
                    push(self, a, a + 1, Axis::X);
                }
            }
        }
        for k in 0..nz {
            for j in 0..ny.saturating_sub(1) {
                for i in 0..nx {
                    let a = self.index(i, j, k);
                    push(self, a, a + nx, Axis::Y);
                }
            }
        }
        for k in 0..nz.saturating_sub(1) {
            for j in 0..ny {
                for i in 0..nx {
                    let a = self.index(i, j, k);
                    push(self, a, a + nx * ny, Axis::Z);
                }
            }
        }
        for (f, face) in faces.iter().enumerate() {
            self.neighbors[face.a].push((face.b, f));
            self.neighbors[face.b].push((face.a, f));
        }
        for nb in &mut self.neighbors {
            nb.sort_unstable();
        }
        self.faces = faces;
    }

    pub fn num_cells(&self) -> usize {
        self.depth.len()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn ijk(&self, c: usize) -> (usize, usize, usize) {
        let [nx, ny, _] = self.dims;
        (c % nx, (c / nx) % ny, c / (nx * ny))
    }

    pub fn bulk_volume(&self) -> f64 {
        self.cell_size.iter().product()
    }

    /// Active face neighbours of `c` as (neighbour, face index).
    pub fn neighbors(&self, c: usize) -> &[(usize, usize)] {
        &self.neighbors[c]
    }

    pub fn active_cells(&self) -> Vec<usize> {
        (0..self.num_cells()).filter(|&c| self.active[c]).collect()
    }
}

/// Harmonic two-point transmissibility Γ = 1 / (d_a/(k_a A) + d_b/(k_b A))
/// between axis-adjacent cells `a` and `b`. Sealed faces return 0.
pub fn face_geometric_transmissibility(grid: &Grid, a: usize, b: usize, axis: Axis) -> f64 {
    let ax = axis as usize;
    let area = match axis {
        Axis::X => grid.cell_size[1] * grid.cell_size[2],
        Axis::Y => grid.cell_size[0] * grid.cell_size[2],
        Axis::Z => grid.cell_size[0] * grid.cell_size[1],
    };
    let half = 0.5 * grid.cell_size[ax];
    harmonic_transmissibility(grid.perm[a][ax], half, grid.perm[b][ax], half, area)
}

pub fn harmonic_transmissibility(k_a: f64, d_a: f64, k_b: f64, d_b: f64, area: f64) -> f64 {
    if k_a <= 0.0 || k_b <= 0.0 {
        return 0.0;
    }
    1.0 / (d_a / (k_a * area) + d_b / (k_b * area))
}

/// Fixed base partition of the active cells into `n_sub` subdomains.
#[derive(Debug, Clone)]
pub struct SubdomainLayout {
    pub n_sub: usize,
    /// Owning subdomain per cell; `None` for inactive cells.
    pub owner: Vec<Option<usize>>,
    /// Sorted cell lists per subdomain.
    pub members: Vec<Vec<usize>>,
    /// Tile counts along x and y.
    pub tiles: [usize; 2],
    expansions: Vec<Vec<Vec<usize>>>,
}

impl SubdomainLayout {
    /// Subdomain `k` expanded by `l` layers. Served from the cache when
    /// [`SubdomainLayout::cache_expansions`] covered `l`.
    pub fn expansion(&self, grid: &Grid, k: usize, l: usize) -> Vec<usize> {
        match self.expansions.get(l) {
            Some(per_sub) => per_sub[k].clone(),
            None => expand_subdomain(self, grid, k, l),
        }
    }

    /// Borrowed cached expansion, if precomputed.
    pub fn cached_expansion(&self, k: usize, l: usize) -> Option<&[usize]> {
        self.expansions.get(l).map(|per_sub| per_sub[k].as_slice())
    }

    pub fn cache_expansions(&mut self, grid: &Grid, max_l: usize) {
        self.expansions = (0..=max_l)
            .map(|l| (0..self.n_sub).map(|k| expand_subdomain(self, grid, k, l)).collect())
            .collect();
    }
}

fn balanced_ranges(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / parts;
    let extra = n % parts;
    let mut start = 0;
    (0..parts)
        .map(|p| {
            let len = base + usize::from(p < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Splits the grid into `px × py` x-y tiles spanning all layers.
pub fn tile_partition(grid: &Grid, px: usize, py: usize) -> Result<SubdomainLayout, GridError> {
    let [nx, ny, nz] = grid.dims;
    let err = GridError::TilingTooFine { px, py, nx, ny };
    if px == 0 || py == 0 || px > nx || py > ny {
        return Err(err);
    }
    let active_columns = (0..nx * ny)
        .filter(|&col| (0..nz).any(|k| grid.active[col + nx * ny * k]))
        .count();
    if px * py > active_columns {
        return Err(err);
    }
    let xr = balanced_ranges(nx, px);
    let yr = balanced_ranges(ny, py);
    let mut tile_of_x = vec![0; nx];
    for (t, r) in xr.iter().enumerate() {
        for i in r.clone() {
            tile_of_x[i] = t;
        }
    }
    let mut tile_of_y = vec![0; ny];
    for (t, r) in yr.iter().enumerate() {
        for j in r.clone() {
            tile_of_y[j] = t;
        }
    }
    let n_sub = px * py;
    let mut owner = vec![None; grid.num_cells()];
    let mut members = vec![Vec::new(); n_sub];
    for c in 0..grid.num_cells() {
        if !grid.active[c] {
            continue;
        }
        let (i, j, _) = grid.ijk(c);
        let s = tile_of_x[i] + px * tile_of_y[j];
        owner[c] = Some(s);
        members[s].push(c);
    }
    if let Some(s) = members.iter().position(|m| m.is_empty()) {
        return Err(GridError::EmptyTile(s));
    }
    Ok(SubdomainLayout {
        n_sub,
        owner,
        members,
        tiles: [px, py],
        expansions: Vec::new(),
    })
}

/// Active cells within face-graph distance `l` of subdomain `k`, sorted.
/// Inactive cells act as barriers.
pub fn expand_subdomain(layout: &SubdomainLayout, grid: &Grid, k: usize, l: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; grid.num_cells()];
    let mut queue = VecDeque::new();
    for &c in &layout.members[k] {
        dist[c] = 0;
        queue.push_back(c);
    }
    let mut out = layout.members[k].clone();
    while let Some(c) = queue.pop_front() {
        if dist[c] == l {
            continue;
        }
        for &(nb, _) in grid.neighbors(c) {
            if dist[nb] == usize::MAX {
                dist[nb] = dist[c] + 1;
                out.push(nb);
                queue.push_back(nb);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Edges (i, j), i < j, between subdomains sharing at least one face.
pub fn subdomain_adjacency(layout: &SubdomainLayout, grid: &Grid) -> Vec<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for f in &grid.faces {
        if let (Some(i), Some(j)) = (layout.owner[f.a], layout.owner[f.b]) {
            if i != j {
                edges.insert((i.min(j), i.max(j)));
            }
        }
    }
    edges.into_iter().collect()
}
