//! Dijkstra search over an 8-connected costmap.
//!
//! Edge weights are kept as fixed-point integers (`2^-36` units) so that path
//! costs are sums of exact integers: equal-cost alternatives compare equal and
//! results do not depend on summation order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{PlanError, PlannedPath};
use crate::geometry::Pose2D;
use crate::perception::{Costmap, MAX_COST};

pub const COST_SCALE: f64 = (1u64 << 36) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DijkstraConfig {
    /// Weight of the normalized cell cost relative to distance.
    pub cost_factor: f64,
}

impl Default for DijkstraConfig {
    fn default() -> Self {
        Self { cost_factor: 10.0 }
    }
}

/// Fixed-point weight of entering a cell with `cost` over a step of
/// `step_cells` cell lengths.
pub fn edge_weight(step_cells: f64, cost: u8, cost_factor: f64) -> u64 {
    let w = step_cells * (1.0 + cost_factor * f64::from(cost) / f64::from(MAX_COST));
    (w * COST_SCALE).round() as u64
}

/// The eight neighbour offsets, axis moves first.
pub const NEIGHBORS: [(i64, i64, bool); 8] = [
    (1, 0, false),
    (-1, 0, false),
    (0, 1, false),
    (0, -1, false),
    (1, 1, true),
    (-1, 1, true),
    (1, -1, true),
    (-1, -1, true),
];

/// Neighbours of `idx` reachable in one move, with their fixed-point weights.
///
/// A diagonal move is only allowed when both adjacent axis cells are
/// non-lethal, so paths never squeeze between two diagonal obstacles.
pub fn successors(costmap: &Costmap, idx: usize, cost_factor: f64) -> impl Iterator<Item = (usize, u64)> + '_ {
    let (w, h) = (costmap.width() as i64, costmap.height() as i64);
    let (cx, cy) = costmap.coords(idx);
    let (cx, cy) = (cx as i64, cy as i64);
    let lethal = move |x: i64, y: i64| costmap.is_lethal((y * w + x) as usize);
    NEIGHBORS.iter().filter_map(move |&(dx, dy, diag)| {
        let (nx, ny) = (cx + dx, cy + dy);
        if nx < 0 || ny < 0 || nx >= w || ny >= h || lethal(nx, ny) {
            return None;
        }
        if diag && (lethal(cx + dx, cy) || lethal(cx, cy + dy)) {
            return None;
        }
        let j = (ny * w + nx) as usize;
        let step = if diag { std::f64::consts::SQRT_2 } else { 1.0 };
        Some((j, edge_weight(step, costmap.cost(j), cost_factor)))
    })
}

fn locate(costmap: &Costmap, p: &Pose2D, which: &'static str) -> Result<usize, PlanError> {
    costmap
        .world_to_index(p.x, p.y)
        .ok_or(PlanError::OutOfBounds { which, x: p.x, y: p.y })
}

/// Minimum-cost path between the cells containing `start` and `goal`.
///
/// Ties are broken towards the lower row-major cell index.
pub fn plan_global(
    costmap: &Costmap,
    start: &Pose2D,
    goal: &Pose2D,
    cfg: &DijkstraConfig,
) -> Result<PlannedPath, PlanError> {
    let s = locate(costmap, start, "start")?;
    let g = locate(costmap, goal, "goal")?;
    if costmap.is_lethal(s) {
        return Err(PlanError::StartLethal);
    }
    if costmap.is_lethal(g) {
        return Err(PlanError::NoPathFound);
    }

    let n = costmap.len();
    let mut dist = vec![u64::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0;
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == g {
            break;
        }
        for (v, w) in successors(costmap, u, cfg.cost_factor) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = u;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    if !done[g] {
        return Err(PlanError::NoPathFound);
    }

    let mut cells = vec![g];
    while let Some(&c) = cells.last() {
        if c == s {
            break;
        }
        cells.push(parent[c]);
    }
    cells.reverse();
    Ok(PlannedPath::from_cells(costmap, cells, dist[g], goal.theta))
}
