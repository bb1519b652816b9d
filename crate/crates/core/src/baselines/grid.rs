//! Uniform 3D lattice over the operation zone and shortest paths on it.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::channel::Location3D;
use crate::env::{Action, EnvConfig};
use crate::error::{Error, Result};

/// Lattice with spacing `spacing_m` anchored at the zone's minimum corner
/// `(0, 0, z_min)`. Nodes are numbered x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGraph {
    pub origin: Location3D,
    pub spacing_m: f64,
    pub dims: [usize; 3],
}

/// Unit lattice steps in neighbor-visit order. The order fixes which of
/// several equal-cost paths Dijkstra returns.
const STEPS: [[i64; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];

impl GridGraph {
    pub fn new(zone: &EnvConfig, spacing_m: f64) -> Result<Self> {
        if !(spacing_m > 0.0) {
            return Err(Error::Config("grid_resolution_m must be > 0".into()));
        }
        let count = |extent: f64| (extent / spacing_m + 1e-9).floor() as usize + 1;
        Ok(Self {
            origin: Location3D::new(0.0, 0.0, zone.z_min_m),
            spacing_m,
            dims: [count(zone.area_x_m), count(zone.area_y_m), count(zone.z_max_m - zone.z_min_m)],
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn coords(&self, node: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [node % nx, (node / nx) % ny, node / (nx * ny)]
    }

    pub fn node(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub fn location(&self, node: usize) -> Location3D {
        let c = self.coords(node);
        Location3D::new(
            self.origin.x + c[0] as f64 * self.spacing_m,
            self.origin.y + c[1] as f64 * self.spacing_m,
            self.origin.z + c[2] as f64 * self.spacing_m,
        )
    }

    /// Closest node; locations outside the lattice are clamped onto it.
    pub fn nearest_node(&self, loc: &Location3D) -> usize {
        let snap = |v: f64, o: f64, n: usize| (((v - o) / self.spacing_m).round().max(0.0) as usize).min(n - 1);
        self.node([
            snap(loc.x, self.origin.x, self.dims[0]),
            snap(loc.y, self.origin.y, self.dims[1]),
            snap(loc.z, self.origin.z, self.dims[2]),
        ])
    }

    /// In-bounds neighbors with the action that reaches each.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, Action)> + '_ {
        let c = self.coords(node);
        STEPS.iter().filter_map(move |d| {
            let mut n = [0usize; 3];
            for axis in 0..3 {
                let v = c[axis] as i64 + d[axis];
                if v < 0 || v >= self.dims[axis] as i64 {
                    return None;
                }
                n[axis] = v as usize;
            }
            Some((self.node(n), Action::from_direction(*d).expect("unit step")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Min-heap on cost, then on node id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path found by [`dijkstra`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    /// Nodes from source to target inclusive.
    pub nodes: Vec<usize>,
    pub actions: Vec<Action>,
    pub cost_m: f64,
}

/// Dijkstra from `source` to `target` with edge length `spacing_m`,
/// stopping as soon as the target is settled.
pub fn dijkstra(grid: &GridGraph, source: usize, target: usize) -> GridPath {
    let n = grid.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<(usize, Action)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier { cost: 0.0, node: source });
    while let Some(Frontier { cost, node }) = heap.pop() {
        if node == target {
            break;
        }
        if cost > dist[node] {
            continue;
        }
        for (next, action) in grid.neighbors(node) {
            let c = cost + grid.spacing_m;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = Some((node, action));
                heap.push(Frontier { cost: c, node: next });
            }
        }
    }
    let mut nodes = vec![target];
    let mut actions = Vec::new();
    let mut at = target;
    while let Some((p, a)) = prev[at] {
        nodes.push(p);
        actions.push(a);
        at = p;
    }
    nodes.reverse();
    actions.reverse();
    GridPath { nodes, actions, cost_m: dist[target] }
}

/// Hop count by breadth-first search.
pub fn bfs_hops(grid: &GridGraph, source: usize, target: usize) -> Option<usize> {
    let mut hops = vec![usize::MAX; grid.num_nodes()];
    let mut queue = VecDeque::from([source]);
    hops[source] = 0;
    while let Some(node) = queue.pop_front() {
        if node == target {
            return Some(hops[node]);
        }
        for (next, _) in grid.neighbors(node) {
            if hops[next] == usize::MAX {
                hops[next] = hops[node] + 1;
                queue.push_back(next);
            }
        }
    }
    None
}
