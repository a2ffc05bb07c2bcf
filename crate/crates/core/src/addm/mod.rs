//! Adaptive subdomain coupling driven by saturation-change fronts.
//!
//! Each time step the per-cell saturation change between the last two
//! converged levels marks "front" cells. The three strategies turn the front
//! into a coupling graph over the base subdomains; its connected components
//! (or a weighted partition of it) are the regions solved together.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluid::{saturations_from_state, FluidError, FluidParams, FluidState, NUM_PHASES};
use crate::grid::{expand_subdomain, subdomain_adjacency, Grid, SubdomainLayout};

mod graph;

pub use graph::{connected_components, connected_components_into, cut_weight, partition_weighted_graph, WeightedSubdomainGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AddmError {
    #[error("threshold strategy {0:?} needs {1}")]
    MissingTimestep(ThresholdStrategy, &'static str),
    #[error("cannot split {vertices} subdomains into {blocks} blocks")]
    TooManyBlocks { blocks: usize, vertices: usize },
    #[error("saturation evaluation failed at cell {cell}: {source}")]
    Saturation {
        cell: usize,
        #[source]
        source: FluidError,
    },
}

/// |ΔS_j| per cell and phase between two converged time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationDelta {
    pub ds: Vec<[f64; NUM_PHASES]>,
}

impl SaturationDelta {
    pub fn zeros(n_cells: usize) -> Self {
        Self {
            ds: vec![[0.0; NUM_PHASES]; n_cells],
        }
    }

    /// True when any phase change at `cell` strictly exceeds `c_s`.
    pub fn is_front(&self, cell: usize, c_s: f64) -> bool {
        self.ds[cell].iter().any(|&d| d > c_s)
    }

    /// Σ_j |ΔS_j| at `cell`.
    pub fn total(&self, cell: usize) -> f64 {
        self.ds[cell].iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.ds.iter().flatten().fold(0.0, |m: f64, &d| m.max(d))
    }
}

pub fn saturation_delta(
    params: &FluidParams,
    grid: &Grid,
    state_n: &FluidState,
    state_nm1: &FluidState,
) -> Result<SaturationDelta, AddmError> {
    let mut out = SaturationDelta::zeros(grid.num_cells());
    for c in grid.active_cells() {
        let eval = |st: &FluidState| {
            let (p, n) = st.cell(c);
            saturations_from_state(params, p, n).map_err(|source| AddmError::Saturation { cell: c, source })
        };
        let (a, b) = (eval(state_n)?, eval(state_nm1)?);
        for j in 0..NUM_PHASES {
            out.ds[c][j] = (a.s[j] - b.s[j]).abs();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ThresholdStrategy {
    #[default]
    A,
    B,
    C,
    D,
}

/// The saturation-change threshold c_S. `dt_n` is the last accepted step,
/// `dt_next` the step being attempted.
pub fn threshold_value(
    strategy: ThresholdStrategy,
    dt_n: f64,
    dt_next: Option<f64>,
    dt_max: Option<f64>,
) -> Result<f64, AddmError> {
    Ok(match strategy {
        ThresholdStrategy::A => 5e-3,
        ThresholdStrategy::B => 1e-3,
        ThresholdStrategy::C => {
            let m = dt_max.ok_or(AddmError::MissingTimestep(strategy, "a maximum step size"))?;
            1e-3 * dt_n / m
        }
        ThresholdStrategy::D => {
            let m = dt_next.ok_or(AddmError::MissingTimestep(strategy, "the next step size"))?;
            1e-3 * dt_n / m
        }
    })
}

fn expansion<'a>(layout: &'a SubdomainLayout, grid: &Grid, k: usize, l: usize) -> std::borrow::Cow<'a, [usize]> {
    match layout.cached_expansion(k, l) {
        Some(cells) => std::borrow::Cow::Borrowed(cells),
        None => std::borrow::Cow::Owned(expand_subdomain(layout, grid, k, l)),
    }
}

/// M_{k,l}: front cells of the l-layer expansion of subdomain k, ascending.
pub fn front_cells(
    layout: &SubdomainLayout,
    grid: &Grid,
    k: usize,
    l: usize,
    delta: &SaturationDelta,
    c_s: f64,
) -> Vec<usize> {
    expansion(layout, grid, k, l)
        .iter()
        .copied()
        .filter(|&c| delta.is_front(c, c_s))
        .collect()
}

fn intersects(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// The coupled layout at one time step: a partition of the subdomains into
/// regions, each solved as one local problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingPattern {
    /// Region id of every subdomain.
    pub region_of: Vec<usize>,
    /// Subdomains per region, ascending; regions ordered by their smallest
    /// subdomain.
    pub regions: Vec<Vec<usize>>,
    /// Subdomains solved on their own.
    pub independent: Vec<bool>,
}

impl CouplingPattern {
    /// Builds a canonical pattern from arbitrary block labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut first: Vec<(usize, usize)> = Vec::new();
        for (v, &b) in labels.iter().enumerate() {
            if !first.iter().any(|&(lb, _)| lb == b) {
                first.push((b, v));
            }
        }
        let mut region_of = vec![0; labels.len()];
        let mut regions = vec![Vec::new(); first.len()];
        for (v, &b) in labels.iter().enumerate() {
            let r = first.iter().position(|&(lb, _)| lb == b).expect("label seen");
            region_of[v] = r;
            regions[r].push(v);
        }
        let independent = region_of.iter().map(|&r| regions[r].len() == 1).collect();
        Self {
            region_of,
            regions,
            independent,
        }
    }

    /// Every subdomain on its own.
    pub fn all_independent(n_sub: usize) -> Self {
        Self::from_labels(&(0..n_sub).collect::<Vec<_>>())
    }

    /// One region holding every subdomain.
    pub fn fully_coupled(n_sub: usize) -> Self {
        Self::from_labels(&vec![0; n_sub])
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_coupled(&self) -> usize {
        self.independent.iter().filter(|&&i| !i).count()
    }

    /// Checks the partition invariants; multi-subdomain regions must be
    /// connected in `adjacency`.
    pub fn check(&self, adjacency: &[(usize, usize)]) -> Result<(), String> {
        let n = self.region_of.len();
        let mut seen = vec![false; n];
        for (r, members) in self.regions.iter().enumerate() {
            if members.is_empty() {
                return Err(format!("region {r} is empty"));
            }
            for &s in members {
                if s >= n || seen[s] {
                    return Err(format!("subdomain {s} listed twice or out of range"));
                }
                seen[s] = true;
                if self.region_of[s] != r {
                    return Err(format!("subdomain {s} maps to the wrong region"));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("regions do not cover every subdomain".into());
        }
        for (r, members) in self.regions.iter().enumerate() {
            if members.len() < 2 {
                continue;
            }
            let inside: Vec<(usize, usize)> = adjacency
                .iter()
                .copied()
                .filter(|&(a, b)| self.region_of[a] == r && self.region_of[b] == r)
                .collect();
            let labels = connected_components(n, &inside);
            if members.iter().any(|&s| labels[s] != labels[members[0]]) {
                return Err(format!("region {r} is not connected"));
            }
        }
        Ok(())
    }
}

/// Strategy 1: couple adjacent subdomains whose expanded fronts overlap.
pub fn couple_addm01(
    layout: &SubdomainLayout,
    grid: &Grid,
    delta: &SaturationDelta,
    c_s: f64,
    l: usize,
) -> CouplingPattern {
    let fronts: Vec<Vec<usize>> = (0..layout.n_sub).map(|k| front_cells(layout, grid, k, l, delta, c_s)).collect();
    let edges: Vec<(usize, usize)> = subdomain_adjacency(layout, grid)
        .into_iter()
        .filter(|&(i, j)| intersects(&fronts[i], &fronts[j]))
        .collect();
    CouplingPattern::from_labels(&connected_components(layout.n_sub, &edges))
}

/// Strategy 2: every subdomain holding front cells is coupled to all of its
/// neighbours.
pub fn couple_addm02(layout: &SubdomainLayout, grid: &Grid, delta: &SaturationDelta, c_s: f64) -> CouplingPattern {
    let active: Vec<bool> = layout
        .members
        .iter()
        .map(|m| m.iter().any(|&c| delta.is_front(c, c_s)))
        .collect();
    let edges: Vec<(usize, usize)> = subdomain_adjacency(layout, grid)
        .into_iter()
        .filter(|&(i, j)| active[i] || active[j])
        .collect();
    CouplingPattern::from_labels(&connected_components(layout.n_sub, &edges))
}

/// Edge weights for strategy 3 on every adjacency edge. The existence test
/// uses one-layer expansions; the overlap term uses `l` layers.
pub fn addm03_graph(
    layout: &SubdomainLayout,
    grid: &Grid,
    delta: &SaturationDelta,
    c_s: f64,
    l: usize,
) -> WeightedSubdomainGraph {
    addm03_graph_with(layout, grid, delta, c_s, l, 1)
}

/// [`addm03_graph`] with the existence test on `existence_l`-layer
/// expansions instead of one layer.
pub fn addm03_graph_with(
    layout: &SubdomainLayout,
    grid: &Grid,
    delta: &SaturationDelta,
    c_s: f64,
    l: usize,
    existence_l: usize,
) -> WeightedSubdomainGraph {
    let m0: Vec<Vec<usize>> = (0..layout.n_sub).map(|k| front_cells(layout, grid, k, 0, delta, c_s)).collect();
    let m1: Vec<Vec<usize>> = (0..layout.n_sub)
        .map(|k| front_cells(layout, grid, k, existence_l, delta, c_s))
        .collect();
    let ml: Vec<Vec<usize>> = if l == existence_l {
        m1.clone()
    } else {
        (0..layout.n_sub).map(|k| front_cells(layout, grid, k, l, delta, c_s)).collect()
    };
    let sum = |cells: &[usize]| cells.iter().map(|&c| delta.total(c)).sum::<f64>();
    let adjacency = subdomain_adjacency(layout, grid);
    let raw: Vec<f64> = adjacency
        .iter()
        .map(|&(i, j)| {
            if intersects(&m1[i], &m1[j]) {
                sum(&m0[i]) + sum(&m0[j]) + sum(&intersection(&ml[i], &ml[j]))
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = raw.iter().filter(|&&w| w > 0.0).sum();
    let eps = 1e-12 * total.max(1.0);
    WeightedSubdomainGraph {
        n: layout.n_sub,
        edges: adjacency
            .into_iter()
            .zip(raw)
            .map(|((i, j), w)| (i, j, if w > 0.0 { w } else { eps }))
            .collect(),
    }
}

/// Strategy 3: partition the weighted subdomain graph into `k` regions.
pub fn couple_addm03(
    layout: &SubdomainLayout,
    grid: &Grid,
    delta: &SaturationDelta,
    c_s: f64,
    l: usize,
    k: usize,
) -> Result<CouplingPattern, AddmError> {
    couple_addm03_with(layout, grid, delta, c_s, l, 1, k)
}

/// [`couple_addm03`] with a configurable existence-test expansion.
pub fn couple_addm03_with(
    layout: &SubdomainLayout,
    grid: &Grid,
    delta: &SaturationDelta,
    c_s: f64,
    l: usize,
    existence_l: usize,
    k: usize,
) -> Result<CouplingPattern, AddmError> {
    let g = addm03_graph_with(layout, grid, delta, c_s, l, existence_l);
    let labels = partition_weighted_graph(&g, k)?;
    Ok(CouplingPattern::from_labels(&labels))
}

/// Default block count for strategy 3: ⌈N/4⌉, at least one.
pub fn default_block_count(n_sub: usize) -> usize {
    n_sub.div_ceil(4).max(1)
}
