//! Scenario files: a TOML document naming a grid map plus the configuration
//! of every stage and a timeline of scripted events.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose2D, Side, Vec3Force};
use crate::intent::IntentConfig;
use crate::nav::navigator::NavStatus;
use crate::nav::{ControllerPipelineConfig, DijkstraConfig, NavigatorConfig, PluginRole};
use crate::perception::{load_grid, InflationParams, MapError, OccupancyGrid, ScanFilterConfig};
use crate::sim::{Bystander, Disc, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Shoulder pushes drive the base.
    #[default]
    Guided,
    /// The navigator drives the base.
    Autonomous,
    /// The navigator drives unless someone pushes harder than the dead zone.
    Hybrid,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Guided => "guided",
            Mode::Autonomous => "autonomous",
            Mode::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PushSide {
    Left,
    Right,
    /// The same force on each shoulder.
    Both,
}

impl PushSide {
    pub fn applies_to(self, side: Side) -> bool {
        match self {
            PushSide::Both => true,
            PushSide::Left => side == Side::Left,
            PushSide::Right => side == Side::Right,
        }
    }
}

/// Something that changes the running system. Used both for scripted
/// scenario events and for commands arriving over the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    ApplyPush {
        side: PushSide,
        /// Base-frame force in newtons.
        force: [f64; 3],
        duration_s: f64,
    },
    SetGoal {
        x: f64,
        y: f64,
        #[serde(default)]
        theta: f64,
    },
    CancelGoal,
    Tare,
    SwitchPlugin {
        role: PluginRole,
        name: String,
    },
    SetMode {
        mode: Mode,
    },
    SpawnObstacle {
        x: f64,
        y: f64,
        radius: f64,
    },
    Pause,
    Resume,
    /// Send the full map with the next snapshot.
    RequestKeyframe,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::ApplyPush { .. } => "apply_push",
            Action::SetGoal { .. } => "set_goal",
            Action::CancelGoal => "cancel_goal",
            Action::Tare => "tare",
            Action::SwitchPlugin { .. } => "switch_plugin",
            Action::SetMode { .. } => "set_mode",
            Action::SpawnObstacle { .. } => "spawn_obstacle",
            Action::Pause => "pause",
            Action::Resume => "resume",
            Action::RequestKeyframe => "request_keyframe",
        }
    }

    pub fn push_force(&self) -> Option<Vec3Force> {
        match self {
            Action::ApplyPush { force, .. } => Some(Vec3Force::from(*force)),
            _ => None,
        }
    }

    pub fn obstacle(&self) -> Option<Disc> {
        match *self {
            Action::SpawnObstacle { x, y, radius } => Some(Disc { x, y, radius }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Simulated time at which the action fires.
    pub t: f64,
    #[serde(flatten)]
    pub action: Action,
}

/// What a run must achieve to count as a success.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expectation {
    /// Required outcome of the last goal; `reached` when unset and goals exist.
    pub nav_status: Option<NavStatus>,
}

fn default_rate() -> u32 {
    100
}

fn default_nav_rate() -> u32 {
    10
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Grid map, relative to the scenario file.
    pub map: PathBuf,
    #[serde(default)]
    pub mode: Mode,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rate")]
    pub control_rate_hz: u32,
    #[serde(default = "default_nav_rate")]
    pub nav_rate_hz: u32,
    pub start: Pose2D,
    /// Tare both shoulders on the first control tick.
    #[serde(default = "yes")]
    pub auto_tare: bool,
    /// Integrate filtered scans into the live map.
    #[serde(default)]
    pub mapping: bool,
    /// End the run early once navigation is finished and no events remain.
    #[serde(default = "yes")]
    pub stop_when_done: bool,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub intent: IntentConfig,
    #[serde(default)]
    pub controller: ControllerPipelineConfig,
    #[serde(default)]
    pub navigator: NavigatorConfig,
    #[serde(default)]
    pub planner: DijkstraConfig,
    #[serde(default)]
    pub costmap: InflationParams,
    #[serde(default)]
    pub filter: ScanFilterConfig,
    #[serde(default)]
    pub bystanders: Vec<Bystander>,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub expect: Expectation,
    /// Directory the scenario was loaded from; map paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Malformed scenario text. `line` and `column` are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}:{line}:{column}: {message}")]
pub struct ParseError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error)]
#[error("cannot load world map {path}: {source}")]
pub struct WorldLoadError {
    pub path: PathBuf,
    #[source]
    pub source: MapError,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    WorldLoad(#[from] WorldLoadError),
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, col)
}

impl Scenario {
    /// Parses and validates scenario text; `origin` only labels diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            ParseError {
                path: origin.to_string(),
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })?;
        scenario.validate().map_err(ScenarioError::Invalid)?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s = Self::parse(&text, &path.display().to_string())?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn map_path(&self) -> PathBuf {
        self.base_dir.join(&self.map)
    }

    pub fn load_map(&self) -> Result<OccupancyGrid, WorldLoadError> {
        let path = self.map_path();
        load_grid(&path).map_err(|source| WorldLoadError { path, source })
    }

    /// Simulation config with the step length tied to the control rate and
    /// the scenario seed.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: 1.0 / f64::from(self.control_rate_hz),
            seed: self.seed,
            ..self.sim
        }
    }

    pub fn intent_config(&self) -> IntentConfig {
        IntentConfig {
            rate_hz: f64::from(self.control_rate_hz),
            ..self.intent
        }
    }

    pub fn controller_config(&self) -> ControllerPipelineConfig {
        ControllerPipelineConfig {
            control_dt: 1.0 / f64::from(self.nav_rate_hz),
            ..self.controller
        }
    }

    pub fn goals(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| matches!(e.action, Action::SetGoal { .. }))
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err("duration_s must be positive".into());
        }
        if self.control_rate_hz == 0 || self.nav_rate_hz == 0 {
            return Err("rates must be positive".into());
        }
        if !self.control_rate_hz.is_multiple_of(self.nav_rate_hz) {
            return Err(format!(
                "control_rate_hz {} is not a multiple of nav_rate_hz {}",
                self.control_rate_hz, self.nav_rate_hz
            ));
        }
        if !self.start.is_finite() {
            return Err("start pose must be finite".into());
        }
        self.sim_config().validate().map_err(|e| e.to_string())?;
        self.intent_config().validate().map_err(|e| e.to_string())?;
        self.controller_config().validate().map_err(|e| e.to_string())?;
        self.filter.validate().map_err(|e| e.to_string())?;
        let c = &self.costmap;
        if !(c.footprint_radius_m >= 0.0 && c.inflation_radius_m >= c.footprint_radius_m && c.cost_scaling >= 0.0) {
            return Err("costmap needs 0 <= footprint_radius_m <= inflation_radius_m and cost_scaling >= 0".into());
        }
        if !(self.planner.cost_factor.is_finite() && self.planner.cost_factor >= 0.0) {
            return Err("planner.cost_factor must be non-negative".into());
        }
        for b in &self.bystanders {
            let vals = [
                b.x,
                b.y,
                b.radius_m,
                b.attraction_radius_m,
                b.personal_space_m,
                b.speed_mps,
            ];
            if vals.iter().any(|v| !v.is_finite()) || b.radius_m <= 0.0 || b.speed_mps < 0.0 {
                return Err("bystander fields must be finite with positive radius".into());
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            let n = i + 1;
            if !(e.t.is_finite() && (0.0..=self.duration_s).contains(&e.t)) {
                return Err(format!(
                    "event {n} ({}) at t={} lies outside [0, {}]",
                    e.action.name(),
                    e.t,
                    self.duration_s
                ));
            }
            match &e.action {
                Action::ApplyPush { force, duration_s, .. } => {
                    if force.iter().any(|f| !f.is_finite()) || !(duration_s.is_finite() && *duration_s > 0.0) {
                        return Err(format!("event {n}: push needs a finite force and positive duration"));
                    }
                }
                Action::SetGoal { x, y, theta } => {
                    if ![x, y, theta].iter().all(|v| v.is_finite()) {
                        return Err(format!("event {n}: goal must be finite"));
                    }
                }
                Action::SpawnObstacle { x, y, radius } => {
                    if ![x, y, radius].iter().all(|v| v.is_finite()) || *radius <= 0.0 {
                        return Err(format!("event {n}: obstacle needs a finite centre and positive radius"));
                    }
                }
                Action::Pause | Action::Resume | Action::RequestKeyframe => {
                    return Err(format!(
                        "event {n}: '{}' is only available interactively",
                        e.action.name()
                    ));
                }
                Action::CancelGoal | Action::Tare | Action::SwitchPlugin { .. } | Action::SetMode { .. } => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
map = "room.cgrid"
duration_s = 10
start = { x = 1, y = 2, theta = 0 }
"#;

    #[test]
    fn minimal_uses_defaults() {
        let s = Scenario::parse(MINIMAL, "t.toml").unwrap();
        assert_eq!(s.mode, Mode::Guided);
        assert_eq!(s.control_rate_hz, 100);
        assert_eq!(s.nav_rate_hz, 10);
        assert!(s.auto_tare);
        assert_eq!(s.sim_config().dt, 0.01);
        assert_eq!(s.controller_config().control_dt, 0.1);
        assert_eq!(s.start, Pose2D::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn events_parse() {
        let text = format!(
            "{MINIMAL}
[[events]]
t = 1.5
kind = \"apply_push\"
side = \"both\"
force = [60, 0, 0]
duration_s = 2

[[events]]
t = 2
kind = \"switch_plugin\"
role = \"controller\"
name = \"path_sampling_omni\"
"
        );
        let s = Scenario::parse(&text, "t.toml").unwrap();
        assert_eq!(s.events.len(), 2);
        assert_eq!(
            s.events[0].action,
            Action::ApplyPush {
                side: PushSide::Both,
                force: [60.0, 0.0, 0.0],
                duration_s: 2.0
            }
        );
        assert_eq!(s.events[1].t, 2.0);
    }

    #[test]
    fn syntax_error_has_line_and_column() {
        let text = "map = \"a\"\nduration_s = 10\nstart = { x = 1, y = }\n";
        let Err(ScenarioError::Parse(e)) = Scenario::parse(text, "bad.toml") else {
            panic!("expected a parse error");
        };
        assert_eq!(e.line, 3);
        assert!(e.column > 1);
        assert!(e.to_string().starts_with("bad.toml:3:"));
    }

    #[test]
    fn unknown_field_is_reported_on_its_line() {
        let text = format!("{MINIMAL}\n[controller]\nlookahead_m = 1.0\nlook_ahead = 2\n");
        let Err(ScenarioError::Parse(e)) = Scenario::parse(&text, "t.toml") else {
            panic!("expected a parse error");
        };
        assert_eq!(e.line, 8);
        assert!(e.message.contains("look_ahead"), "{}", e.message);
    }

    #[test]
    fn event_after_end_is_invalid() {
        let text = format!("{MINIMAL}\n[[events]]\nt = 11\nkind = \"tare\"\n");
        assert!(matches!(
            Scenario::parse(&text, "t.toml"),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn interactive_actions_are_rejected_in_scripts() {
        let text = format!("{MINIMAL}\n[[events]]\nt = 1\nkind = \"pause\"\n");
        let Err(ScenarioError::Invalid(msg)) = Scenario::parse(&text, "t.toml") else {
            panic!("expected validation failure");
        };
        assert!(msg.contains("pause"));
    }

    #[test]
    fn rates_must_divide() {
        let text = format!("control_rate_hz = 100\nnav_rate_hz = 7\n{MINIMAL}");
        assert!(matches!(
            Scenario::parse(&text, "t.toml"),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn missing_map_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.toml");
        std::fs::write(&p, MINIMAL).unwrap();
        let err = Scenario::load(&p).unwrap().load_map().unwrap_err();
        assert!(err.to_string().contains("room.cgrid"));
    }

    #[test]
    fn broken_map_is_a_world_load_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("room.cgrid"),
            "CGRID 1\nresolution 0.1\norigin 0 0 0\n#.x\n",
        )
        .unwrap();
        let p = dir.path().join("s.toml");
        std::fs::write(&p, MINIMAL).unwrap();
        let s = Scenario::load(&p).unwrap();
        let err = s.load_map().unwrap_err();
        assert!(matches!(err.source, MapError::Parse { line: 4, .. }), "{err}");
    }
}
