//! Plugin-based navigation: global planners, local controllers and the
//! navigator that ties them to a goal.

pub mod dijkstra;
pub mod local;
pub mod navigator;
pub mod plugin;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2D;
use crate::perception::Costmap;

pub use dijkstra::{plan_global, DijkstraConfig};
pub use local::{avoid_shift, compute_command, sample_path_target, ControllerPipelineConfig};
pub use navigator::{navigate, NavEnvironment, NavStatus, Navigator, NavigatorConfig};
pub use plugin::{
    ControlInput, ControlOutput, ControllerRegistry, DijkstraPlanner, GlobalPlanner, LocalController,
    PathSamplingController, PluginRole, RecoveryBehavior,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("no path to the goal")]
    NoPathFound,
    #[error("{which} ({x:.3}, {y:.3}) is outside the costmap")]
    OutOfBounds { which: &'static str, x: f64, y: f64 },
    #[error("start cell is lethal")]
    StartLethal,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("path is empty")]
    EmptyPath,
    #[error("no lateral shift clears the obstacles")]
    NoViableShift,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {role} plugin '{name}'")]
pub struct UnknownPlugin {
    pub role: PluginRole,
    pub name: String,
}

/// Ordered world-frame waypoints produced by a global planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    waypoints: Vec<Pose2D>,
    /// Costmap cell of each waypoint, empty for paths not built on a grid.
    cells: Vec<usize>,
    total_cost: f64,
}

impl PlannedPath {
    pub fn new(waypoints: Vec<Pose2D>, total_cost: f64) -> Self {
        Self {
            waypoints,
            cells: Vec::new(),
            total_cost,
        }
    }

    /// Builds a path through cell centres. Each waypoint faces the next one;
    /// the last takes `goal_theta`.
    pub(crate) fn from_cells(costmap: &Costmap, cells: Vec<usize>, fixed_cost: u64, goal_theta: f64) -> Self {
        let centers: Vec<(f64, f64)> = cells
            .iter()
            .map(|&i| {
                let (cx, cy) = costmap.coords(i);
                costmap.cell_center(cx, cy)
            })
            .collect();
        let waypoints = centers
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| {
                let theta = match centers.get(k + 1) {
                    Some(&(nx, ny)) => (ny - y).atan2(nx - x),
                    None => goal_theta,
                };
                Pose2D::new(x, y, theta)
            })
            .collect();
        Self {
            waypoints,
            cells,
            total_cost: fixed_cost as f64 / dijkstra::COST_SCALE,
        }
    }

    pub fn waypoints(&self) -> &[Pose2D] {
        &self.waypoints
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance_to(&w[1])).sum()
    }

    /// Copy whose final waypoint is replaced by `goal`.
    pub fn ending_at(&self, goal: Pose2D) -> Self {
        let mut p = self.clone();
        match p.waypoints.last_mut() {
            Some(last) => *last = goal,
            None => p.waypoints.push(goal),
        }
        p
    }
}
