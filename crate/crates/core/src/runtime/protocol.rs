//! Wire format for the state-streaming service: each message is a 4-byte
//! big-endian length followed by that many bytes of UTF-8 JSON.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::executor::Executor;
use super::scenario::{Action, Mode};
use crate::geometry::{Pose2D, Twist2D, Vec3Force};
use crate::intent::IntentVector;
use crate::perception::OccupancyGrid;

pub const PROTOCOL_VERSION: &str = "1";
/// Frames above this size are rejected before allocation.
pub const MAX_FRAME_BYTES: u32 = 16 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub version: String,
    #[serde(flatten)]
    pub message: Message,
}

impl Envelope {
    pub fn new(message: Message) -> Self {
        Self {
            version: PROTOCOL_VERSION.to_string(),
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Snapshot(Box<Snapshot>),
    Command { id: u64, command: Action },
    Ack { id: u64, command: String },
    Error { id: Option<u64>, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavSnapshot {
    pub phase: String,
    pub goal: Option<Pose2D>,
    pub remaining_m: f64,
    pub planner: String,
    pub controller: String,
    pub plan_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySummary {
    pub fused_force: Vec3Force,
    pub smoothed_speed_mps: f64,
    pub collisions: usize,
    pub tared: bool,
}

/// Map content carried by a snapshot. Cell values are occupancy
/// probabilities in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridUpdate {
    Keyframe {
        width: usize,
        height: usize,
        resolution: f64,
        origin: Pose2D,
        cells: Vec<u8>,
    },
    /// `(index, value)` for every cell that changed since the last snapshot.
    Delta { cells: Vec<(u32, u8)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub seq: u64,
    pub time_s: f64,
    pub pose: Pose2D,
    pub velocity: Twist2D,
    pub command: Twist2D,
    pub mode: Mode,
    pub paused: bool,
    pub nav: NavSnapshot,
    /// Waypoints of the current global path.
    pub path: Vec<[f64; 2]>,
    pub intent: IntentVector,
    pub telemetry: TelemetrySummary,
    pub grid: GridUpdate,
    /// Round obstacles and bystanders as `[x, y, radius]`.
    pub discs: Vec<[f64; 3]>,
}

fn percent(p: f64) -> u8 {
    (p * 100.0).round().clamp(0.0, 100.0) as u8
}

/// Tracks what the clients have seen of the map so snapshots can carry deltas.
#[derive(Debug, Default)]
pub struct GridStreamer {
    sent: Option<Vec<u8>>,
}

impl GridStreamer {
    pub fn update(&mut self, grid: &OccupancyGrid, keyframe: bool) -> GridUpdate {
        let now: Vec<u8> = (0..grid.len()).map(|i| percent(grid.probability(i))).collect();
        match &self.sent {
            Some(prev) if !keyframe && prev.len() == now.len() => {
                let cells = prev
                    .iter()
                    .zip(&now)
                    .enumerate()
                    .filter(|(_, (a, b))| a != b)
                    .map(|(i, (_, b))| (i as u32, *b))
                    .collect();
                self.sent = Some(now);
                GridUpdate::Delta { cells }
            }
            _ => {
                self.sent = Some(now.clone());
                GridUpdate::Keyframe {
                    width: grid.width(),
                    height: grid.height(),
                    resolution: grid.resolution(),
                    origin: grid.origin(),
                    cells: now,
                }
            }
        }
    }
}

/// Builds the next snapshot of `exec`.
pub fn snapshot(exec: &Executor, seq: u64, command: Twist2D, grid: GridUpdate) -> Snapshot {
    let nav = exec.navigator();
    let world = exec.world();
    let intent = exec.last_intent();
    Snapshot {
        seq,
        time_s: world.time(),
        pose: world.pose(),
        velocity: world.velocity(),
        command,
        mode: exec.mode(),
        paused: exec.is_paused(),
        nav: NavSnapshot {
            phase: nav.phase().as_str().to_string(),
            goal: nav.goal(),
            remaining_m: nav.remaining_m(),
            planner: nav.registry().active_planner().to_string(),
            controller: nav.registry().active_controller().to_string(),
            plan_count: nav.plan_count(),
        },
        path: nav
            .path()
            .map(|p| p.waypoints().iter().map(|w| [w.x, w.y]).collect())
            .unwrap_or_default(),
        intent: exec.intent_arrow(),
        telemetry: TelemetrySummary {
            fused_force: intent.map_or(Vec3Force::ZERO, |o| o.record.fused),
            smoothed_speed_mps: intent.map_or(0.0, |o| o.command.linear_speed()),
            collisions: world.collisions(),
            tared: exec.intent().is_tared(),
        },
        grid,
        discs: world.discs().iter().map(|d| [d.x, d.y, d.radius]).collect(),
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("connection: {0}")]
    Io(#[from] io::Error),
    #[error("frame of {0} bytes exceeds the limit")]
    TooLarge(u32),
    #[error("malformed message: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported protocol version '{0}'")]
    Version(String),
}

pub fn encode(env: &Envelope) -> Vec<u8> {
    let body = serde_json::to_vec(env).expect("protocol messages serialize");
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn write_frame<W: Write>(w: &mut W, env: &Envelope) -> io::Result<()> {
    w.write_all(&encode(env))?;
    w.flush()
}

/// Reads one raw frame body.
pub fn read_frame_bytes<R: Read>(r: &mut R) -> Result<Vec<u8>, ProtocolError> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let n = u32::from_be_bytes(len);
    if n > MAX_FRAME_BYTES {
        return Err(ProtocolError::TooLarge(n));
    }
    let mut body = vec![0u8; n as usize];
    r.read_exact(&mut body)?;
    Ok(body)
}

pub fn decode(body: &[u8]) -> Result<Envelope, ProtocolError> {
    #[derive(Deserialize)]
    struct VersionOnly {
        version: String,
    }
    let v: VersionOnly = serde_json::from_slice(body)?;
    if v.version != PROTOCOL_VERSION {
        return Err(ProtocolError::Version(v.version));
    }
    Ok(serde_json::from_slice(body)?)
}

pub fn read_frame<R: Read>(r: &mut R) -> Result<Envelope, ProtocolError> {
    decode(&read_frame_bytes(r)?)
}
