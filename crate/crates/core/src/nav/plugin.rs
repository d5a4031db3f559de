//! Planner and controller plugin interfaces and the registry that switches
//! between them at tick boundaries.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::dijkstra::{plan_global, DijkstraConfig};
use super::local::{at_goal, avoid_shift, compute_command, sample_path_target_from, ControllerPipelineConfig};
use super::{ControlError, PlanError, PlannedPath, UnknownPlugin};
use crate::geometry::{LaserScan, Pose2D, Twist2D};
use crate::perception::Costmap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PluginRole {
    Planner,
    Controller,
}

impl fmt::Display for PluginRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PluginRole::Planner => "planner",
            PluginRole::Controller => "controller",
        })
    }
}

pub trait GlobalPlanner: Send {
    fn plan(&mut self, costmap: &Costmap, start: &Pose2D, goal: &Pose2D) -> Result<PlannedPath, PlanError>;
}

/// Everything a local controller sees on one tick.
#[derive(Debug, Clone, Copy)]
pub struct ControlInput<'a> {
    pub pose: Pose2D,
    pub velocity: Twist2D,
    /// Path to follow; its last waypoint is the goal.
    pub path: &'a PlannedPath,
    /// Filtered scan in the robot frame.
    pub scan: Option<&'a LaserScan>,
    pub costmap: &'a Costmap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub command: Twist2D,
    /// Point the controller steered towards this tick.
    pub target: Pose2D,
    /// Arc length left along the path.
    pub remaining_m: f64,
    pub at_goal: bool,
}

pub trait LocalController: Send {
    /// Forget per-path state; called whenever the path or the active controller changes.
    fn reset(&mut self);
    fn compute(&mut self, input: &ControlInput<'_>) -> Result<ControlOutput, ControlError>;
}

/// Hook invoked when navigation stalls. Returns `true` if progress can resume.
pub trait RecoveryBehavior: Send {
    fn name(&self) -> &str;
    fn recover(&mut self, pose: &Pose2D, goal: &Pose2D) -> bool;
}

#[derive(Debug, Clone, Default)]
pub struct DijkstraPlanner {
    pub config: DijkstraConfig,
}

impl GlobalPlanner for DijkstraPlanner {
    fn plan(&mut self, costmap: &Costmap, start: &Pose2D, goal: &Pose2D) -> Result<PlannedPath, PlanError> {
        plan_global(costmap, start, goal, &self.config)
    }
}

/// Lookahead sampling on the global path, lateral obstacle shift, then a
/// heading-error steering law.
#[derive(Debug, Clone)]
pub struct PathSamplingController {
    pub config: ControllerPipelineConfig,
    cursor: Option<usize>,
}

impl PathSamplingController {
    pub fn new(config: ControllerPipelineConfig) -> Self {
        Self { config, cursor: None }
    }
}

impl LocalController for PathSamplingController {
    fn reset(&mut self) {
        self.cursor = None;
    }

    fn compute(&mut self, input: &ControlInput<'_>) -> Result<ControlOutput, ControlError> {
        let cfg = &self.config;
        let waypoints = input.path.waypoints();
        let goal = *waypoints.last().ok_or(ControlError::EmptyPath)?;
        let horizon = cfg.lookahead_m + 1.0;
        let sample = sample_path_target_from(waypoints, &input.pose, cfg.lookahead_m, self.cursor, horizon)?;
        self.cursor = Some(
            self.cursor
                .map_or(sample.projection.segment, |c| c.max(sample.projection.segment)),
        );

        if at_goal(&input.pose, &goal, cfg) {
            return Ok(ControlOutput {
                command: Twist2D::ZERO,
                target: goal,
                remaining_m: 0.0,
                at_goal: true,
            });
        }

        let final_goal = sample.target == goal;
        let target = match input.scan {
            // close to the goal only the goal itself is a valid target
            Some(scan) if !(final_goal && input.pose.distance_to(&goal) <= cfg.goal_xy_tol_m) => {
                avoid_shift(&sample.target, &input.pose, scan, Some(input.costmap), cfg)?
            }
            _ => sample.target,
        };
        let final_goal = final_goal && target == goal;
        Ok(ControlOutput {
            command: compute_command(&input.pose, &input.velocity, &target, final_goal, cfg),
            target,
            remaining_m: sample.remaining,
            at_goal: false,
        })
    }
}

/// Named planners and controllers with exactly one active of each.
///
/// Switch requests are validated immediately but only take effect at the next
/// [`begin_tick`](Self::begin_tick).
#[derive(Default)]
pub struct ControllerRegistry {
    planners: BTreeMap<String, Box<dyn GlobalPlanner>>,
    controllers: BTreeMap<String, Box<dyn LocalController>>,
    recoveries: Vec<Box<dyn RecoveryBehavior>>,
    active_planner: String,
    active_controller: String,
    pending_planner: Option<String>,
    pending_controller: Option<String>,
}

impl fmt::Debug for ControllerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControllerRegistry")
            .field("planners", &self.planners.keys().collect::<Vec<_>>())
            .field("controllers", &self.controllers.keys().collect::<Vec<_>>())
            .field("active_planner", &self.active_planner)
            .field("active_controller", &self.active_controller)
            .finish()
    }
}

pub const DIJKSTRA: &str = "dijkstra";
pub const PATH_SAMPLING: &str = "path_sampling";
pub const PATH_SAMPLING_OMNI: &str = "path_sampling_omni";

impl ControllerRegistry {
    /// The shipped plugins: a Dijkstra planner and the path-sampling
    /// controller in forward-and-turn and omnidirectional flavours. No
    /// recovery behaviours are registered.
    pub fn with_defaults(planner: DijkstraConfig, controller: ControllerPipelineConfig) -> Self {
        let mut r = Self::default();
        r.register_planner(DIJKSTRA, Box::new(DijkstraPlanner { config: planner }));
        r.register_controller(PATH_SAMPLING, Box::new(PathSamplingController::new(controller)));
        let omni = ControllerPipelineConfig {
            holonomic: true,
            ..controller
        };
        r.register_controller(PATH_SAMPLING_OMNI, Box::new(PathSamplingController::new(omni)));
        // keep the configured mode as the initial selection
        if controller.holonomic {
            r.active_controller = PATH_SAMPLING_OMNI.into();
        }
        r
    }

    /// Registers a planner; the first one registered becomes active.
    pub fn register_planner(&mut self, name: &str, plugin: Box<dyn GlobalPlanner>) {
        if self.planners.is_empty() {
            self.active_planner = name.to_string();
        }
        self.planners.insert(name.to_string(), plugin);
    }

    pub fn register_controller(&mut self, name: &str, plugin: Box<dyn LocalController>) {
        if self.controllers.is_empty() {
            self.active_controller = name.to_string();
        }
        self.controllers.insert(name.to_string(), plugin);
    }

    pub fn register_recovery(&mut self, plugin: Box<dyn RecoveryBehavior>) {
        self.recoveries.push(plugin);
    }

    pub fn planner_names(&self) -> Vec<&str> {
        self.planners.keys().map(String::as_str).collect()
    }

    pub fn controller_names(&self) -> Vec<&str> {
        self.controllers.keys().map(String::as_str).collect()
    }

    pub fn active_planner(&self) -> &str {
        &self.active_planner
    }

    pub fn active_controller(&self) -> &str {
        &self.active_controller
    }

    /// Queues a switch for the next tick boundary.
    pub fn switch_plugin(&mut self, role: PluginRole, name: &str) -> Result<(), UnknownPlugin> {
        let known = match role {
            PluginRole::Planner => self.planners.contains_key(name),
            PluginRole::Controller => self.controllers.contains_key(name),
        };
        if !known {
            return Err(UnknownPlugin {
                role,
                name: name.to_string(),
            });
        }
        match role {
            PluginRole::Planner => self.pending_planner = Some(name.to_string()),
            PluginRole::Controller => self.pending_controller = Some(name.to_string()),
        }
        Ok(())
    }

    /// Applies queued switches. Returns `true` if the active controller changed.
    pub fn begin_tick(&mut self) -> bool {
        if let Some(p) = self.pending_planner.take() {
            self.active_planner = p;
        }
        match self.pending_controller.take() {
            Some(c) if c != self.active_controller => {
                self.active_controller = c;
                if let Some(ctrl) = self.controllers.get_mut(&self.active_controller) {
                    ctrl.reset();
                }
                true
            }
            _ => false,
        }
    }

    pub fn planner_mut(&mut self) -> &mut dyn GlobalPlanner {
        self.planners
            .get_mut(&self.active_planner)
            .expect("active planner is registered")
            .as_mut()
    }

    pub fn controller_mut(&mut self) -> &mut dyn LocalController {
        self.controllers
            .get_mut(&self.active_controller)
            .expect("active controller is registered")
            .as_mut()
    }

    pub fn recoveries_mut(&mut self) -> &mut [Box<dyn RecoveryBehavior>] {
        &mut self.recoveries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> ControllerRegistry {
        ControllerRegistry::with_defaults(DijkstraConfig::default(), ControllerPipelineConfig::default())
    }

    #[test]
    fn defaults() {
        let r = registry();
        assert_eq!(r.active_planner(), DIJKSTRA);
        assert_eq!(r.active_controller(), PATH_SAMPLING);
        assert_eq!(r.controller_names(), vec![PATH_SAMPLING, PATH_SAMPLING_OMNI]);
        assert!(r.recoveries.is_empty());
    }

    #[test]
    fn switch_applies_at_tick_boundary() {
        let mut r = registry();
        r.switch_plugin(PluginRole::Controller, PATH_SAMPLING_OMNI).unwrap();
        assert_eq!(r.active_controller(), PATH_SAMPLING);
        assert!(r.begin_tick());
        assert_eq!(r.active_controller(), PATH_SAMPLING_OMNI);
        assert!(!r.begin_tick());
    }

    #[test]
    fn unknown_switch_is_rejected() {
        let mut r = registry();
        let err = r.switch_plugin(PluginRole::Planner, "teb").unwrap_err();
        assert_eq!(err.role, PluginRole::Planner);
        assert_eq!(err.to_string(), "unknown planner plugin 'teb'");
        r.begin_tick();
        assert_eq!(r.active_planner(), DIJKSTRA);
    }
}
