//! Brute-force reference implementations shared by the integration and
//! acceptance tests. They trade speed for obviousness and share no code
//! with the library routines they check.

#![allow(dead_code)]

use addm_core::addm::{connected_components_into, SaturationDelta, WeightedSubdomainGraph};
use addm_core::grid::{tile_partition, Grid, SubdomainLayout};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Graph distance from a cell set, by repeated relaxation over all faces.
pub fn distances(grid: &Grid, sources: &[usize], max_l: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; grid.num_cells()];
    for &c in sources {
        d[c] = 0;
    }
    for _ in 0..max_l {
        let prev = d.clone();
        for f in &grid.faces {
            if prev[f.a] != usize::MAX && prev[f.a] + 1 < d[f.b] {
                d[f.b] = prev[f.a] + 1;
            }
            if prev[f.b] != usize::MAX && prev[f.b] + 1 < d[f.a] {
                d[f.a] = prev[f.b] + 1;
            }
        }
    }
    d
}

pub fn members(layout: &SubdomainLayout, k: usize) -> Vec<usize> {
    (0..layout.owner.len()).filter(|&c| layout.owner[c] == Some(k)).collect()
}

pub fn is_front(delta: &SaturationDelta, c: usize, c_s: f64) -> bool {
    delta.ds[c][0] > c_s || delta.ds[c][1] > c_s
}

pub fn front(grid: &Grid, layout: &SubdomainLayout, k: usize, l: usize, delta: &SaturationDelta, c_s: f64) -> Vec<usize> {
    let d = distances(grid, &members(layout, k), l);
    (0..grid.num_cells()).filter(|&c| d[c] <= l && is_front(delta, c, c_s)).collect()
}

/// Subdomain pairs joined by at least one face.
pub fn adjacency(grid: &Grid, layout: &SubdomainLayout) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..layout.n_sub {
        for j in i + 1..layout.n_sub {
            let joined = grid.faces.iter().any(|f| {
                let (a, b) = (layout.owner[f.a], layout.owner[f.b]);
                (a == Some(i) && b == Some(j)) || (a == Some(j) && b == Some(i))
            });
            if joined {
                out.push((i, j));
            }
        }
    }
    out
}

/// Component labels by breadth-first search; label = smallest member.
pub fn bfs_components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([s]);
        label[s] = s;
        while let Some(v) = queue.pop_front() {
            for &(a, b) in edges {
                let u = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if label[u] == usize::MAX {
                    label[u] = s;
                    queue.push_back(u);
                }
            }
        }
    }
    label
}

pub fn addm01(grid: &Grid, layout: &SubdomainLayout, delta: &SaturationDelta, c_s: f64, l: usize) -> Vec<usize> {
    let fronts: Vec<Vec<usize>> = (0..layout.n_sub).map(|k| front(grid, layout, k, l, delta, c_s)).collect();
    let edges: Vec<(usize, usize)> = adjacency(grid, layout)
        .into_iter()
        .filter(|&(i, j)| fronts[i].iter().any(|c| fronts[j].contains(c)))
        .collect();
    bfs_components(layout.n_sub, &edges)
}

pub fn addm02(grid: &Grid, layout: &SubdomainLayout, delta: &SaturationDelta, c_s: f64) -> Vec<usize> {
    let active: Vec<bool> = (0..layout.n_sub)
        .map(|k| members(layout, k).iter().any(|&c| is_front(delta, c, c_s)))
        .collect();
    let edges: Vec<(usize, usize)> = adjacency(grid, layout)
        .into_iter()
        .filter(|&(i, j)| active[i] || active[j])
        .collect();
    bfs_components(layout.n_sub, &edges)
}

/// Best cut over all partitions into exactly `k` non-empty, connected
/// blocks whose largest block is within `balance` of the mean. Returns
/// `None` when no such partition exists.
pub fn exhaustive_partition(g: &WeightedSubdomainGraph, k: usize, balance: f64) -> Option<(f64, Vec<usize>)> {
    let n = g.n;
    let max_size = (balance * n as f64 / k as f64 + 1e-9).floor() as usize;
    let mut labels = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    // Restricted growth strings enumerate each set partition once.
    #[allow(clippy::too_many_arguments)]
    fn rec(
        v: usize,
        used: usize,
        labels: &mut Vec<usize>,
        sizes: &mut Vec<usize>,
        g: &WeightedSubdomainGraph,
        k: usize,
        max_size: usize,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        let n = g.n;
        if n - v < k - used {
            return;
        }
        if v == n {
            if used != k {
                return;
            }
            for b in 0..k {
                let inside: Vec<(usize, usize)> = g
                    .edges
                    .iter()
                    .filter(|e| labels[e.0] == b && labels[e.1] == b)
                    .map(|e| (e.0, e.1))
                    .collect();
                let comp = bfs_components(n, &inside);
                let mem: Vec<usize> = (0..n).filter(|&x| labels[x] == b).collect();
                if mem.iter().any(|&x| comp[x] != comp[mem[0]]) {
                    return;
                }
            }
            let cut: f64 = g.edges.iter().filter(|e| labels[e.0] != labels[e.1]).map(|e| e.2).sum();
            if best.as_ref().is_none_or(|(c, _)| cut < *c) {
                *best = Some((cut, labels.clone()));
            }
            return;
        }
        for b in 0..=used.min(k - 1) {
            if sizes[b] == max_size {
                continue;
            }
            labels[v] = b;
            sizes[b] += 1;
            rec(v + 1, used.max(b + 1), labels, sizes, g, k, max_size, best);
            sizes[b] -= 1;
        }
    }
    let mut sizes = vec![0; k];
    rec(0, 0, &mut labels, &mut sizes, g, k, max_size, &mut best);
    best
}

/// Random connected graph: a random spanning tree plus extra edges, with
/// weights that are either negligible or "hot".
pub fn random_weighted_graph(rng: &mut impl Rng, n: usize) -> WeightedSubdomainGraph {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let weight = |rng: &mut dyn rand::RngCore| {
        if rng.random_bool(0.5) {
            1e-12
        } else {
            rng.random_range(0.01..1.0)
        }
    };
    if rng.random_bool(0.5) {
        // Tiling-like grid graph.
        let px = (2..=4).rev().find(|p| n.is_multiple_of(*p)).unwrap_or(1);
        let py = n / px;
        for j in 0..py {
            for i in 0..px {
                let v = i + px * j;
                if i + 1 < px {
                    edges.push((v, v + 1, weight(rng)));
                }
                if j + 1 < py {
                    edges.push((v, v + px, weight(rng)));
                }
            }
        }
    } else {
        for v in 1..n {
            let u = rng.random_range(0..v);
            edges.push((u, v, weight(rng)));
        }
        let extra = rng.random_range(0..n);
        for _ in 0..extra {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b && !edges.iter().any(|e| (e.0, e.1) == (a.min(b), a.max(b))) {
                edges.push((a.min(b), a.max(b), weight(rng)));
            }
        }
    }
    WeightedSubdomainGraph { n, edges }
}

/// Two labelings describe the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Component labels through bitmask closure, for the exhaustive sweep.
pub fn mask_components(n: usize, adj: &[u8; 8], out: &mut [usize; 8]) {
    let mut left: u8 = if n == 8 { u8::MAX } else { (1u8 << n) - 1 };
    while left != 0 {
        let root = left.trailing_zeros() as usize;
        let mut reach = 1u8 << root;
        loop {
            let mut next = reach;
            let mut r = reach;
            while r != 0 {
                next |= adj[r.trailing_zeros() as usize];
                r &= r - 1;
            }
            if next == reach {
                break;
            }
            reach = next;
        }
        left &= !reach;
        let mut r = reach;
        while r != 0 {
            out[r.trailing_zeros() as usize] = root;
            r &= r - 1;
        }
    }
}

/// Every labelled graph on up to `max_n` vertices, visited in Gray-code
/// order so that each step toggles one edge.
pub fn sweep_all_graphs(max_n: usize) -> u64 {
    let mut visited = 0;
    let mut expected = [0usize; 8];
    for n in 1..=max_n {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let mut adj = [0u8; 8];
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
        let mut got = Vec::with_capacity(n);
        for step in 0u64..(1u64 << pairs.len()) {
            if step > 0 {
                let (a, b) = pairs[step.trailing_zeros() as usize];
                adj[a] ^= 1 << b;
                adj[b] ^= 1 << a;
                match edges.iter().position(|&e| e == (a, b)) {
                    Some(i) => {
                        edges.swap_remove(i);
                    }
                    None => edges.push((a, b)),
                }
            }
            mask_components(n, &adj, &mut expected);
            connected_components_into(n, &edges, &mut got);
            assert_eq!(got[..], expected[..n], "n={n} edges={edges:?}");
            visited += 1;
        }
    }
    visited
}

pub fn grid(dims: [usize; 3]) -> Grid {
    let n = dims.iter().product();
    Grid::cartesian(dims, [20.0, 20.0, 10.0], 8000.0, vec![[100.0; 3]; n], 0.2).unwrap()
}

/// A random tiling with a sparse, clustered saturation change.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Grid, SubdomainLayout, SaturationDelta, f64, usize) {
    let px = rng.random_range(1..=4);
    let py = rng.random_range(1..=4);
    let nx = px * rng.random_range(1..=4);
    let ny = py * rng.random_range(1..=4);
    let nz = rng.random_range(1..=3);
    let g = grid([nx, ny, nz]);
    let layout = tile_partition(&g, px, py).unwrap();
    let c_s = [1e-3, 5e-3, 2e-2][rng.random_range(0..3)];
    let mut delta = SaturationDelta::zeros(g.num_cells());
    let density = rng.random_range(0.0..0.4);
    for ds in delta.ds.iter_mut() {
        if rng.random_bool(density) {
            let phase = rng.random_range(0..2);
            ds[phase] = rng.random_range(0.0..4.0 * c_s);
            // Exercise the strict comparison.
            if rng.random_bool(0.1) {
                ds[phase] = c_s;
            }
        }
    }
    let l = rng.random_range(0..=2);
    (g, layout, delta, c_s, l)
}
