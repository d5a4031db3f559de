use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::plugin::{ControlInput, ControllerRegistry};
use super::{ControlError, PlannedPath};
use crate::geometry::{normalize_angle, LaserScan, Pose2D, Twist2D};
use crate::perception::Costmap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavStatus {
    Reached,
    NoPathFound,
    Stuck,
    Cancelled,
}

impl NavStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NavStatus::Reached => "reached",
            NavStatus::NoPathFound => "no_path_found",
            NavStatus::Stuck => "stuck",
            NavStatus::Cancelled => "cancelled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "phase", content = "status")]
pub enum NavPhase {
    Idle,
    Active,
    Done(NavStatus),
}

impl NavPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            NavPhase::Idle => "idle",
            NavPhase::Active => "active",
            NavPhase::Done(s) => s.as_str(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavigatorConfig {
    /// Stuck when the robot moved less than `stuck_progress_m` (and turned less
    /// than `stuck_rotation_rad`) during this window.
    pub stuck_window_s: f64,
    pub stuck_progress_m: f64,
    pub stuck_rotation_rad: f64,
    /// Stuck when no viable shift existed for this long.
    pub no_shift_timeout_s: f64,
}

impl Default for NavigatorConfig {
    fn default() -> Self {
        Self {
            stuck_window_s: 5.0,
            stuck_progress_m: 0.05,
            stuck_rotation_rad: 0.05,
            no_shift_timeout_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavFeedback {
    pub pose: Pose2D,
    pub remaining_m: f64,
    pub planner: String,
    pub controller: String,
    pub target: Option<Pose2D>,
    /// No viable shift was found this tick.
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavTick {
    pub command: Twist2D,
    pub phase: NavPhase,
    pub feedback: NavFeedback,
}

/// Drives one goal at a time through plan → per-tick control → goal check.
///
/// The global path is computed once per goal; obstacles found later are
/// handled by the local controller.
pub struct Navigator {
    registry: ControllerRegistry,
    cfg: NavigatorConfig,
    costmap: Arc<Costmap>,
    goal: Option<Pose2D>,
    path: Option<Arc<PlannedPath>>,
    phase: NavPhase,
    plan_count: usize,
    progress_mark: (Pose2D, f64),
    blocked_since: Option<f64>,
    remaining_m: f64,
}

impl Navigator {
    pub fn new(registry: ControllerRegistry, cfg: NavigatorConfig, costmap: Arc<Costmap>) -> Self {
        Self {
            registry,
            cfg,
            costmap,
            goal: None,
            path: None,
            phase: NavPhase::Idle,
            plan_count: 0,
            progress_mark: (Pose2D::IDENTITY, 0.0),
            blocked_since: None,
            remaining_m: 0.0,
        }
    }

    pub fn registry(&self) -> &ControllerRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut ControllerRegistry {
        &mut self.registry
    }

    pub fn costmap(&self) -> &Arc<Costmap> {
        &self.costmap
    }

    /// Swaps in a new costmap snapshot, used from the next tick on.
    pub fn set_costmap(&mut self, costmap: Arc<Costmap>) {
        self.costmap = costmap;
    }

    pub fn phase(&self) -> NavPhase {
        self.phase
    }

    pub fn goal(&self) -> Option<Pose2D> {
        self.goal
    }

    /// Path being followed; its last waypoint is the exact goal pose.
    pub fn path(&self) -> Option<&Arc<PlannedPath>> {
        self.path.as_ref()
    }

    /// Path length still ahead of the robot as of the last tick.
    pub fn remaining_m(&self) -> f64 {
        self.remaining_m
    }

    /// Number of global planner invocations so far.
    pub fn plan_count(&self) -> usize {
        self.plan_count
    }

    pub fn start(&mut self, goal: Pose2D, pose: Pose2D, now: f64) -> NavPhase {
        self.registry.begin_tick();
        self.goal = Some(goal);
        self.plan_count += 1;
        let planned = self.registry.planner_mut().plan(&self.costmap, &pose, &goal);
        self.blocked_since = None;
        self.progress_mark = (pose, now);
        self.registry.controller_mut().reset();
        match planned {
            Ok(path) => {
                self.remaining_m = path.length();
                self.path = Some(Arc::new(path.ending_at(goal)));
                self.phase = NavPhase::Active;
            }
            Err(_) => {
                self.path = None;
                self.phase = NavPhase::Done(NavStatus::NoPathFound);
            }
        }
        self.phase
    }

    pub fn cancel(&mut self) {
        if self.phase == NavPhase::Active {
            self.phase = NavPhase::Done(NavStatus::Cancelled);
        }
    }

    fn feedback(&self, pose: Pose2D, target: Option<Pose2D>, blocked: bool) -> NavFeedback {
        NavFeedback {
            pose,
            remaining_m: self.remaining_m,
            planner: self.registry.active_planner().to_string(),
            controller: self.registry.active_controller().to_string(),
            target,
            blocked,
        }
    }

    fn stalled(&mut self, pose: &Pose2D) -> bool {
        let goal = self.goal.unwrap_or(*pose);
        for r in self.registry.recoveries_mut() {
            if r.recover(pose, &goal) {
                return false;
            }
        }
        true
    }

    /// One navigation tick. `scan` should already be filtered.
    pub fn tick(&mut self, pose: Pose2D, velocity: Twist2D, scan: Option<&LaserScan>, now: f64) -> NavTick {
        self.registry.begin_tick();
        let (Some(path), NavPhase::Active) = (self.path.clone(), self.phase) else {
            return NavTick {
                command: Twist2D::ZERO,
                phase: self.phase,
                feedback: self.feedback(pose, None, false),
            };
        };

        let input = ControlInput {
            pose,
            velocity,
            path: &path,
            scan,
            costmap: &self.costmap,
        };
        let result = self.registry.controller_mut().compute(&input);
        let (mut command, target, blocked) = match result {
            Ok(out) if out.at_goal => {
                self.phase = NavPhase::Done(NavStatus::Reached);
                self.remaining_m = 0.0;
                (Twist2D::ZERO, Some(out.target), false)
            }
            Ok(out) => {
                self.blocked_since = None;
                self.remaining_m = out.remaining_m;
                (out.command, Some(out.target), false)
            }
            Err(ControlError::NoViableShift) => {
                self.blocked_since.get_or_insert(now);
                (Twist2D::ZERO, None, true)
            }
            Err(ControlError::EmptyPath) => {
                self.phase = NavPhase::Done(NavStatus::NoPathFound);
                (Twist2D::ZERO, None, false)
            }
        };

        if self.phase == NavPhase::Active {
            let (mark, t0) = self.progress_mark;
            let moved = pose.distance_to(&mark) >= self.cfg.stuck_progress_m
                || normalize_angle(pose.theta - mark.theta).abs() >= self.cfg.stuck_rotation_rad;
            if moved {
                self.progress_mark = (pose, now);
            }
            let no_progress = !moved && now - t0 >= self.cfg.stuck_window_s;
            let blocked_too_long = self
                .blocked_since
                .is_some_and(|t| now - t >= self.cfg.no_shift_timeout_s);
            if no_progress || blocked_too_long {
                if self.stalled(&pose) {
                    self.phase = NavPhase::Done(NavStatus::Stuck);
                    command = Twist2D::ZERO;
                } else {
                    self.progress_mark = (pose, now);
                    self.blocked_since = None;
                }
            }
        }

        NavTick {
            command,
            phase: self.phase,
            feedback: self.feedback(pose, target, blocked),
        }
    }
}

/// What [`navigate`] needs from the world it drives.
pub trait NavEnvironment {
    fn now(&self) -> f64;
    fn pose(&self) -> Pose2D;
    fn velocity(&self) -> Twist2D;
    /// Latest filtered scan, if a sensor is present.
    fn scan(&mut self) -> Option<LaserScan>;
    /// Applies `command` for `duration` seconds.
    fn advance(&mut self, command: Twist2D, duration: f64);
}

/// Runs a goal to completion at `tick_s` intervals. Gives up with
/// [`NavStatus::Cancelled`] once `timeout_s` of environment time has passed.
pub fn navigate<E: NavEnvironment>(
    nav: &mut Navigator,
    goal: Pose2D,
    env: &mut E,
    tick_s: f64,
    timeout_s: f64,
) -> NavStatus {
    let t0 = env.now();
    if let NavPhase::Done(s) = nav.start(goal, env.pose(), t0) {
        return s;
    }
    loop {
        let scan = env.scan();
        let tick = nav.tick(env.pose(), env.velocity(), scan.as_ref(), env.now());
        if let NavPhase::Done(s) = tick.phase {
            return s;
        }
        if env.now() - t0 >= timeout_s {
            nav.cancel();
            return NavStatus::Cancelled;
        }
        env.advance(tick.command, tick_s);
    }
}
