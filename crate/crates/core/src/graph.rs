//! Lattice discretization of `(Ω, d_ρ)`.
//!
//! Nodes sit on the lattice `hℤ²` (so the lattice at `h/2` contains the one
//! at `h`), restricted to a window and to points with clearance
//! `δ ≥ margin·h`. Each node links to its 16 neighbours (king and knight
//! moves); edge weights are line integrals of the density.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::density::{Density, GRAPH_REL_TOL};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

/// Forward half of the 16-neighbour stencil; the other half is implied by symmetry.
pub const FORWARD_OFFSETS: [(i64, i64); 8] = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)];

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    /// Nodes need `δ ≥ margin·h`.
    pub margin: f64,
    /// Window inflation for the lattice (see [`Domain::graph_window`]).
    pub inflation: f64,
    /// Relative tolerance of edge quadrature.
    pub rel_tol: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { margin: 1.5, inflation: 2.0, rel_tol: GRAPH_REL_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct MetricGraph {
    h: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    lattice: Vec<u32>,
    nodes: Vec<Point>,
    clearance: Vec<f64>,
    offsets: Vec<u32>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl MetricGraph {
    /// Build the graph of `density` on `domain` over `window` at spacing `h`.
    pub fn build<D: Density>(domain: &Domain, window: Rect, h: f64, density: &D, cfg: &GraphConfig) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("resolution must be positive, got {h}")));
        }
        let i0 = (window.min.x / h).ceil() as i64;
        let i1 = (window.max.x / h).floor() as i64;
        let j0 = (window.min.y / h).ceil() as i64;
        let j1 = (window.max.y / h).floor() as i64;
        if i1 < i0 || j1 < j0 {
            return Err(Error::EmptyGraph);
        }
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;
        let pos = |i: usize, j: usize| Point::new((i0 + i as i64) as f64 * h, (j0 + j as i64) as f64 * h);

        let rows: Vec<Vec<(usize, f64)>> = (0..ny)
            .into_par_iter()
            .map(|j| {
                (0..nx)
                    .filter_map(|i| {
                        let z = pos(i, j);
                        if !domain.contains(z) {
                            return None;
                        }
                        let d = domain.delta(z);
                        (d >= cfg.margin * h && density.admits(z)).then_some((i, d))
                    })
                    .collect()
            })
            .collect();
        let mut lattice = vec![NONE; nx * ny];
        let mut nodes = Vec::new();
        let mut clearance = Vec::new();
        for (j, row) in rows.iter().enumerate() {
            for &(i, d) in row {
                lattice[j * nx + i] = nodes.len() as u32;
                nodes.push(pos(i, j));
                clearance.push(d);
            }
        }
        if nodes.is_empty() {
            return Err(Error::EmptyGraph);
        }

        let lookup = |i: i64, j: i64| -> u32 {
            if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
                NONE
            } else {
                lattice[j as usize * nx + i as usize]
            }
        };
        let half_edges: Vec<Vec<(u32, u32, f64)>> = (0..ny)
            .into_par_iter()
            .map(|j| {
                let mut out = Vec::new();
                for i in 0..nx {
                    let u = lattice[j * nx + i];
                    if u == NONE {
                        continue;
                    }
                    for &(di, dj) in &FORWARD_OFFSETS {
                        let v = lookup(i as i64 + di, j as i64 + dj);
                        if v == NONE {
                            continue;
                        }
                        let (a, b) = (nodes[u as usize], nodes[v as usize]);
                        if let Ok(w) = density.segment_length(a, b, cfg.rel_tol) {
                            if w.is_finite() && w > 0.0 {
                                out.push((u, v, w));
                            }
                        }
                    }
                }
                out
            })
            .collect();

        let n = nodes.len();
        let mut degree = vec![0u32; n + 1];
        for &(u, v, _) in half_edges.iter().flatten() {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for k in 0..n {
            offsets[k + 1] = offsets[k] + degree[k];
        }
        let m = offsets[n] as usize;
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; m];
        let mut weights = vec![0.0; m];
        for &(u, v, w) in half_edges.iter().flatten() {
            for (s, t) in [(u, v), (v, u)] {
                let k = fill[s as usize] as usize;
                targets[k] = t;
                weights[k] = w;
                fill[s as usize] += 1;
            }
        }
        Ok(Self { h, i0, j0, nx, ny, lattice, nodes, clearance, offsets, targets, weights })
    }

    pub fn resolution(&self) -> f64 {
        self.h
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn node(&self, k: u32) -> Point {
        self.nodes[k as usize]
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn clearance(&self, k: u32) -> f64 {
        self.clearance[k as usize]
    }

    pub fn neighbors(&self, k: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let (s, e) = (self.offsets[k as usize] as usize, self.offsets[k as usize + 1] as usize);
        self.targets[s..e].iter().copied().zip(self.weights[s..e].iter().copied())
    }

    /// Node at lattice point `(i, j)` in absolute lattice coordinates.
    pub fn node_at(&self, i: i64, j: i64) -> Option<u32> {
        let (li, lj) = (i - self.i0, j - self.j0);
        if li < 0 || lj < 0 || li >= self.nx as i64 || lj >= self.ny as i64 {
            return None;
        }
        let k = self.lattice[lj as usize * self.nx + li as usize];
        (k != NONE).then_some(k)
    }

    /// Straight connectors from `z` to nearby nodes, as `(node, weight)`.
    /// The search radius starts at `2h` and doubles until some connector
    /// is admissible.
    pub fn connectors<D: Density>(&self, density: &D, z: Point) -> Vec<(u32, f64)> {
        let ci = (z.x / self.h).round() as i64;
        let cj = (z.y / self.h).round() as i64;
        let max_r = (self.nx.max(self.ny) as i64) + 2;
        let mut r = 2i64;
        loop {
            let radius = r as f64 * self.h;
            let mut out = Vec::new();
            for j in cj - r..=cj + r {
                for i in ci - r..=ci + r {
                    if let Some(k) = self.node_at(i, j) {
                        let p = self.node(k);
                        if p.dist(z) <= radius {
                            if let Ok(w) = density.segment_length(z, p, GRAPH_REL_TOL) {
                                if w.is_finite() {
                                    out.push((k, w));
                                }
                            }
                        }
                    }
                }
            }
            if !out.is_empty() || r > max_r {
                return out;
            }
            r *= 2;
        }
    }

    /// Multi-source, multi-target Dijkstra. Sources and targets carry the
    /// weight of their connector. Returns the total length and the node
    /// sequence of the best route.
    pub fn shortest_path(&self, sources: &[(u32, f64)], targets: &[(u32, f64)]) -> Option<(f64, Vec<u32>)> {
        let n = self.nodes.len();
        let mut target_cost = vec![f64::INFINITY; n];
        for &(t, w) in targets {
            target_cost[t as usize] = target_cost[t as usize].min(w);
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![NONE; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &(s, w) in sources {
            if w < dist[s as usize] {
                dist[s as usize] = w;
                heap.push(State(w, s));
            }
        }
        let mut best = (f64::INFINITY, NONE);
        while let Some(State(d, u)) = heap.pop() {
            if d >= best.0 {
                break;
            }
            if done[u as usize] {
                continue;
            }
            done[u as usize] = true;
            let tc = target_cost[u as usize];
            if d + tc < best.0 {
                best = (d + tc, u);
            }
            for (v, w) in self.neighbors(u) {
                let nd = d + w;
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    prev[v as usize] = u;
                    heap.push(State(nd, v));
                }
            }
        }
        if best.1 == NONE {
            return None;
        }
        let mut route = vec![best.1];
        while prev[*route.last().expect("non-empty") as usize] != NONE {
            route.push(prev[*route.last().expect("non-empty") as usize]);
        }
        route.reverse();
        Some((best.0, route))
    }
}

#[derive(PartialEq)]
pub(crate) struct State(pub f64, pub u32);

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{QuasihyperbolicDensity, UnitDensity};

    #[test]
    fn unit_density_disk_graph() {
        let d = Domain::unit_disk();
        let g = MetricGraph::build(&d, d.window(), 0.1, &UnitDensity::new(&d), &GraphConfig::default()).unwrap();
        assert!(g.node_count() > 200);
        let k = g.node_at(0, 0).unwrap();
        let right = g.node_at(1, 0).unwrap();
        let w = g.neighbors(k).find(|&(v, _)| v == right).unwrap().1;
        assert!((w - 0.1).abs() < 1e-15);
        // every node reaches every other
        let far = g.node_at(-5, 3).unwrap();
        assert!(g.shortest_path(&[(k, 0.0)], &[(far, 0.0)]).is_some());
    }

    #[test]
    fn qh_weights_positive_and_bounded_below() {
        let d = Domain::unit_disk();
        let g = MetricGraph::build(&d, d.window(), 0.1, &QuasihyperbolicDensity::new(&d), &GraphConfig::default())
            .unwrap();
        for u in 0..g.node_count() as u32 {
            for (v, w) in g.neighbors(u) {
                let (a, b) = (g.node(u), g.node(v));
                let len = a.dist(b);
                let dmax = g.clearance(u).max(g.clearance(v));
                assert!(w.is_finite() && w > 0.0);
                assert!(w >= (1.0 + len / dmax).ln() - 1e-12);
            }
        }
    }

    #[test]
    fn disjoint_window_is_empty() {
        let d = Domain::unit_disk();
        let r = MetricGraph::build(&d, Rect::new(3.0, 3.0, 4.0, 4.0), 0.1, &UnitDensity::new(&d), &GraphConfig::default());
        assert!(matches!(r, Err(Error::EmptyGraph)));
    }

    #[test]
    fn sixteen_neighbours_in_the_interior() {
        let d = Domain::square(1.0);
        let g = MetricGraph::build(&d, d.window(), 0.1, &UnitDensity::new(&d), &GraphConfig::default()).unwrap();
        assert_eq!(g.neighbors(g.node_at(0, 0).unwrap()).count(), 16);
    }
}
