//! Fixed-rate executor: the force/control loop at `control_rate_hz` and the
//! navigation loop every `control_rate_hz / nav_rate_hz` ticks, both driven
//! by the simulated clock.

use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scenario::{Action, Mode, PushSide, Scenario, ScenarioError};
use super::telemetry::{TelemetryRecord, TelemetryWriter};
use crate::geometry::{LaserScan, Pose2D, Side, Twist2D, Vec3Force, Wrench};
use crate::intent::{ForceIntent, IntentOutput, IntentVector};
use crate::nav::navigator::{NavPhase, NavStatus};
use crate::nav::{ControllerRegistry, Navigator, PlannedPath, UnknownPlugin};
use crate::perception::{filter_scan, inflate_with, Costmap, OccupancyGrid};
use crate::sim::World;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error(transparent)]
    UnknownPlugin(#[from] UnknownPlugin),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ActivePush {
    side: PushSide,
    force: Vec3Force,
    until_tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalOutcome {
    pub goal: Pose2D,
    pub status: NavStatus,
    pub time_s: f64,
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub ticks: u64,
    pub nav_ticks: u64,
    pub time_s: f64,
    pub final_pose: Pose2D,
    pub goals: Vec<GoalOutcome>,
    pub collisions: usize,
    /// Control ticks that ended with the robot centre on a lethal costmap cell.
    pub lethal_ticks: usize,
    pub plan_count: usize,
    pub success: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.success {
            0
        } else {
            1
        }
    }
}

pub struct Executor {
    scenario: Scenario,
    world: World,
    intent: ForceIntent,
    navigator: Navigator,
    map: OccupancyGrid,
    mode: Mode,
    tick: u64,
    nav_every: u64,
    nav_ticks: u64,
    /// Scripted events as (tick, action), in firing order.
    schedule: Vec<(u64, Action)>,
    next_event: usize,
    pushes: Vec<ActivePush>,
    nav_command: Twist2D,
    tare_pending: bool,
    last_intent: Option<IntentOutput>,
    last_scan: Option<LaserScan>,
    active_goal: Option<Pose2D>,
    goals: Vec<GoalOutcome>,
    lethal_ticks: usize,
    paused: bool,
}

impl Executor {
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let scenario = Scenario::load(path)?;
        let map = scenario.load_map()?;
        Self::new(scenario, map)
    }

    pub fn new(scenario: Scenario, map: OccupancyGrid) -> Result<Self, ScenarioError> {
        scenario.validate().map_err(ScenarioError::Invalid)?;
        let invalid = |e: &dyn std::fmt::Display| ScenarioError::Invalid(e.to_string());
        let map_arc = Arc::new(map.clone());
        let mut world = World::new(scenario.sim_config(), map_arc, scenario.start).map_err(|e| invalid(&e))?;
        if world.footprint_collides(scenario.start.x, scenario.start.y) {
            return Err(ScenarioError::Invalid("start pose collides with the map".into()));
        }
        for b in &scenario.bystanders {
            world.add_bystander(*b);
        }
        let intent = ForceIntent::with_default_frames(scenario.intent_config()).map_err(|e| invalid(&e))?;
        let costmap = Arc::new(inflate_with(&map, &scenario.costmap));
        let registry = ControllerRegistry::with_defaults(scenario.planner, scenario.controller_config());
        let navigator = Navigator::new(registry, scenario.navigator, costmap);

        let rate = f64::from(scenario.control_rate_hz);
        let mut schedule: Vec<(u64, Action)> = scenario
            .events
            .iter()
            .map(|e| ((e.t * rate).round() as u64, e.action.clone()))
            .collect();
        schedule.sort_by_key(|(t, _)| *t);

        Ok(Self {
            nav_every: u64::from(scenario.control_rate_hz / scenario.nav_rate_hz),
            mode: scenario.mode,
            tare_pending: scenario.auto_tare,
            world,
            intent,
            navigator,
            map,
            tick: 0,
            nav_ticks: 0,
            schedule,
            next_event: 0,
            pushes: Vec::new(),
            nav_command: Twist2D::ZERO,
            last_intent: None,
            last_scan: None,
            active_goal: None,
            goals: Vec::new(),
            lethal_ticks: 0,
            paused: false,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn navigator(&self) -> &Navigator {
        &self.navigator
    }

    pub fn intent(&self) -> &ForceIntent {
        &self.intent
    }

    /// The live occupancy map; updated from scans when mapping is enabled.
    pub fn map(&self) -> &OccupancyGrid {
        &self.map
    }

    pub fn costmap(&self) -> &Arc<Costmap> {
        self.navigator.costmap()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn ticks(&self) -> u64 {
        self.tick
    }

    pub fn nav_ticks(&self) -> u64 {
        self.nav_ticks
    }

    pub fn time(&self) -> f64 {
        self.world.time()
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn goals(&self) -> &[GoalOutcome] {
        &self.goals
    }

    pub fn lethal_ticks(&self) -> usize {
        self.lethal_ticks
    }

    pub fn path(&self) -> Option<&Arc<PlannedPath>> {
        self.navigator.path()
    }

    pub fn last_intent(&self) -> Option<&IntentOutput> {
        self.last_intent.as_ref()
    }

    /// Latest filtered scan in the robot frame.
    pub fn last_scan(&self) -> Option<&LaserScan> {
        self.last_scan.as_ref()
    }

    pub fn control_dt(&self) -> f64 {
        1.0 / f64::from(self.scenario.control_rate_hz)
    }

    /// Applies an action now, as if it were scheduled for the current tick.
    pub fn apply(&mut self, action: &Action) -> Result<(), ActionError> {
        match action {
            Action::ApplyPush {
                side,
                force,
                duration_s,
            } => {
                let f = Vec3Force::from(*force);
                if !f.is_finite() || !(duration_s.is_finite() && *duration_s > 0.0) {
                    return Err(ActionError::Invalid(
                        "push needs a finite force and positive duration".into(),
                    ));
                }
                let ticks = (duration_s * f64::from(self.scenario.control_rate_hz)).round() as u64;
                self.pushes.push(ActivePush {
                    side: *side,
                    force: f,
                    until_tick: self.tick + ticks.max(1),
                });
            }
            Action::SetGoal { x, y, theta } => {
                if ![x, y, theta].iter().all(|v| v.is_finite()) {
                    return Err(ActionError::Invalid("goal must be finite".into()));
                }
                self.finish_goal_if_active(NavStatus::Cancelled);
                let goal = Pose2D::new(*x, *y, *theta);
                self.active_goal = Some(goal);
                let phase = self.navigator.start(goal, self.world.pose(), self.world.time());
                self.nav_command = Twist2D::ZERO;
                if let NavPhase::Done(status) = phase {
                    self.record_goal(status);
                }
            }
            Action::CancelGoal => {
                self.navigator.cancel();
                self.finish_goal_if_active(NavStatus::Cancelled);
                self.nav_command = Twist2D::ZERO;
            }
            Action::Tare => self.tare_pending = true,
            Action::SwitchPlugin { role, name } => self.navigator.registry_mut().switch_plugin(*role, name)?,
            Action::SetMode { mode } => self.mode = *mode,
            Action::SpawnObstacle { x, y, radius } => {
                if ![x, y, radius].iter().all(|v| v.is_finite()) || *radius <= 0.0 {
                    return Err(ActionError::Invalid(
                        "obstacle needs a finite centre and positive radius".into(),
                    ));
                }
                self.world.add_obstacle(action.obstacle().expect("obstacle action"));
            }
            Action::Pause => self.paused = true,
            Action::Resume => self.paused = false,
            // snapshot framing is the server's business
            Action::RequestKeyframe => {}
        }
        Ok(())
    }

    fn finish_goal_if_active(&mut self, status: NavStatus) {
        if self.active_goal.is_some() {
            self.navigator.cancel();
            self.record_goal(status);
        }
    }

    fn record_goal(&mut self, status: NavStatus) {
        if let Some(goal) = self.active_goal.take() {
            self.goals.push(GoalOutcome {
                goal,
                status,
                time_s: self.world.time(),
            });
        }
    }

    fn push_forces(&self) -> [Vec3Force; 2] {
        let mut out = [Vec3Force::ZERO; 2];
        for p in &self.pushes {
            for side in Side::BOTH {
                if p.side.applies_to(side) {
                    out[side.index()] += p.force;
                }
            }
        }
        out
    }

    fn fire_due_events(&mut self) {
        while let Some((t, action)) = self.schedule.get(self.next_event).cloned() {
            if t > self.tick {
                break;
            }
            self.next_event += 1;
            // scheduled actions were validated with the scenario
            let _ = self.apply(&action);
        }
    }

    fn nav_step(&mut self) {
        let raw = self.world.raycast_lidar();
        let scan = filter_scan(&raw, &self.scenario.filter);
        let pose = self.world.pose();
        if self.scenario.mapping {
            // the pose lies inside the map because it is collision-free
            let _ = self.map.integrate_scan(&pose, &scan);
        }
        if self.mode != Mode::Guided {
            let was_active = self.navigator.phase() == NavPhase::Active;
            let tick = self
                .navigator
                .tick(pose, self.world.velocity(), Some(&scan), self.world.time());
            self.nav_command = tick.command;
            if let (true, NavPhase::Done(status)) = (was_active, tick.phase) {
                self.record_goal(status);
            }
        }
        self.last_scan = Some(scan);
        self.nav_ticks += 1;
    }

    /// One control tick. Returns `None` while paused.
    pub fn step(&mut self) -> Option<TelemetryRecord> {
        if self.paused {
            return None;
        }
        self.fire_due_events();
        self.pushes.retain(|p| p.until_tick > self.tick);

        let now = self.world.time();
        let [raw_l, raw_r] = self.world.simulate_fts(self.push_forces());
        if self.tare_pending {
            self.intent.tare(Side::Left, raw_l, now);
            self.intent.tare(Side::Right, raw_r, now);
            self.tare_pending = false;
        }
        self.last_intent = self.intent.tick(raw_l, raw_r, now).ok();

        if self.tick.is_multiple_of(self.nav_every) {
            self.nav_step();
        }

        let guided = self.last_intent.map_or(Twist2D::ZERO, |o| o.command);
        let pushing = self
            .last_intent
            .is_some_and(|o| o.record.fused.planar_magnitude() > self.intent.config().dead_zone_n);
        let command = match self.mode {
            Mode::Guided => guided,
            Mode::Autonomous => self.nav_command,
            Mode::Hybrid if pushing => guided,
            Mode::Hybrid => self.nav_command,
        };

        let dt = self.control_dt();
        self.world.step(&command, dt);
        self.tick += 1;
        let pose = self.world.pose();
        let costmap = self.navigator.costmap();
        if costmap
            .world_to_index(pose.x, pose.y)
            .is_none_or(|i| costmap.is_lethal(i))
        {
            self.lethal_ticks += 1;
        }

        let record = self.last_intent.map(|o| o.record);
        let registry = self.navigator.registry();
        Some(TelemetryRecord {
            time_s: now,
            pose,
            command,
            raw: [raw_l, raw_r],
            compensated: record.map_or([Wrench::ZERO; 2], |r| r.compensated),
            fused: record.map_or(Vec3Force::ZERO, |r| r.fused),
            scaled: record.map_or(Twist2D::ZERO, |r| r.scaled),
            smoothed: record.map_or(Twist2D::ZERO, |r| r.smoothed),
            mode: self.mode.as_str().to_string(),
            planner: registry.active_planner().to_string(),
            controller: registry.active_controller().to_string(),
            nav_status: self.navigator.phase().as_str().to_string(),
            collisions: self.world.collisions(),
        })
    }

    /// Unsmoothed intent of the last tick, for display.
    pub fn intent_arrow(&self) -> IntentVector {
        self.last_intent.map_or_else(IntentVector::default, |o| o.intent)
    }

    fn all_events_fired(&self) -> bool {
        self.next_event >= self.schedule.len()
    }

    /// Whether the run may stop before its duration.
    pub fn done_early(&self) -> bool {
        self.scenario.stop_when_done
            && self.all_events_fired()
            && self.pushes.is_empty()
            && !self.goals.is_empty()
            && self.navigator.phase() != NavPhase::Active
    }

    fn total_ticks(&self) -> u64 {
        (self.scenario.duration_s * f64::from(self.scenario.control_rate_hz)).round() as u64
    }

    /// Runs to completion in simulated time, writing one telemetry row per tick.
    pub fn run<W: Write>(&mut self, telemetry: Option<&mut TelemetryWriter<W>>) -> io::Result<RunReport> {
        let mut telemetry = telemetry;
        let total = self.total_ticks();
        while self.tick < total && !self.done_early() {
            let record = self.step().expect("scripted runs never pause");
            if let Some(w) = telemetry.as_deref_mut() {
                w.write(&record)?;
            }
        }
        if self.navigator.phase() == NavPhase::Active {
            self.navigator.cancel();
            self.record_goal(NavStatus::Cancelled);
        }
        Ok(self.report())
    }

    pub fn report(&self) -> RunReport {
        let expected = self
            .scenario
            .expect
            .nav_status
            .or_else(|| self.scenario.goals().next().map(|_| NavStatus::Reached));
        let goals_ok = match expected {
            None => true,
            Some(NavStatus::Reached) => {
                self.goals.len() == self.scenario.goals().count()
                    && self.goals.iter().all(|g| g.status == NavStatus::Reached)
            }
            Some(s) => self.goals.last().is_some_and(|g| g.status == s),
        };
        RunReport {
            ticks: self.tick,
            nav_ticks: self.nav_ticks,
            time_s: self.world.time(),
            final_pose: self.world.pose(),
            goals: self.goals.clone(),
            collisions: self.world.collisions(),
            lethal_ticks: self.lethal_ticks,
            plan_count: self.navigator.plan_count(),
            success: goals_ok && self.world.collisions() == 0,
        }
    }
}

/// Loads and runs a scenario, optionally overriding its seed, and writes
/// telemetry to `telemetry` if given.
pub fn run_scenario(path: &Path, seed: Option<u64>, telemetry: Option<&Path>) -> Result<RunReport, RunError> {
    let mut scenario = Scenario::load(path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let map = scenario.load_map()?;
    let mut exec = Executor::new(scenario, map)?;
    let report = match telemetry {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|source| RunError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let mut w = TelemetryWriter::new(io::BufWriter::new(file)).map_err(|source| RunError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let report = exec.run(Some(&mut w));
            let report = report.and_then(|r| w.finish().map(|_| r));
            report.map_err(|source| RunError::Io {
                path: p.display().to_string(),
                source,
            })?
        }
        None => exec.run::<io::Sink>(None).expect("no telemetry output"),
    };
    Ok(report)
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot write telemetry to {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl From<super::scenario::WorldLoadError> for RunError {
    fn from(e: super::scenario::WorldLoadError) -> Self {
        RunError::Scenario(e.into())
    }
}
