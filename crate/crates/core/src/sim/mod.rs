//! Kinematic simulator of the omnidirectional base with a 360° lidar and the
//! two shoulder force-torque sensors.

mod fts;
mod lidar;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fts::{simulate_both, simulate_fts, FtsConfig};
pub use lidar::{raycast_disc, raycast_grid, scan as simulate_scan, true_range, Disc, LidarConfig};

use crate::geometry::{LaserScan, Pose2D, ShoulderFrame, Side, Twist2D, Vec3Force, Wrench};
use crate::perception::OccupancyGrid;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid sim config: {0}")]
pub struct SimConfigError(pub &'static str);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub lidar: LidarConfig,
    pub fts: FtsConfig,
    pub footprint_radius_m: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            lidar: LidarConfig::default(),
            fts: FtsConfig::default(),
            footprint_radius_m: 0.35,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimConfigError> {
        let l = &self.lidar;
        let f = &self.fts;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimConfigError("dt must be positive"));
        }
        if !(self.footprint_radius_m.is_finite() && self.footprint_radius_m > 0.0) {
            return Err(SimConfigError("footprint_radius_m must be positive"));
        }
        if l.rays == 0 {
            return Err(SimConfigError("lidar.rays must be at least 1"));
        }
        if !(l.range_max.is_finite() && l.range_max > 0.0) {
            return Err(SimConfigError("lidar.range_max must be positive"));
        }
        if !(l.noise_sigma_m.is_finite() && l.noise_sigma_m >= 0.0) {
            return Err(SimConfigError("lidar.noise_sigma_m must be non-negative"));
        }
        if !(0.0..=1.0).contains(&l.dust_prob) {
            return Err(SimConfigError("lidar.dust_prob must be in [0, 1]"));
        }
        if !(l.dust_range_max_m.is_finite() && l.dust_range_max_m > 0.0) {
            return Err(SimConfigError("lidar.dust_range_max_m must be positive"));
        }
        let non_negative = [
            f.arm_mass_kg,
            f.arm_lever_m,
            f.noise_sigma_n,
            f.torque_noise_sigma_nm,
            f.vibration_gain,
            f.vibration_freq_hz,
        ];
        if non_negative.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SimConfigError("fts parameters must be finite and non-negative"));
        }
        Ok(())
    }
}

/// A curious person that drifts towards the robot when close enough and
/// then stands still at arm's length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bystander {
    pub x: f64,
    pub y: f64,
    pub radius_m: f64,
    pub attraction_radius_m: f64,
    /// Centre-to-centre distance at which the bystander stops.
    pub personal_space_m: f64,
    pub speed_mps: f64,
}

impl Default for Bystander {
    fn default() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            radius_m: 0.25,
            attraction_radius_m: 3.0,
            personal_space_m: 0.9,
            speed_mps: 0.6,
        }
    }
}

impl Bystander {
    pub fn disc(&self) -> Disc {
        Disc {
            x: self.x,
            y: self.y,
            radius: self.radius_m,
        }
    }

    fn advance(&mut self, robot_x: f64, robot_y: f64, dt: f64) {
        let (dx, dy) = (robot_x - self.x, robot_y - self.y);
        let d = dx.hypot(dy);
        if d > self.attraction_radius_m || d <= self.personal_space_m {
            return;
        }
        let step = (self.speed_mps * dt).min(d - self.personal_space_m);
        self.x += dx / d * step;
        self.y += dy / d * step;
    }
}

/// Snapshot of the simulated ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub pose: Pose2D,
    pub velocity: Twist2D,
    pub time: f64,
    pub bystanders: Vec<Bystander>,
}

/// Relative motion of a body moving with a constant twist for `dt`.
pub fn twist_exp(cmd: &Twist2D, dt: f64) -> Pose2D {
    let th = cmd.omega * dt;
    if th.abs() < 1e-12 {
        return Pose2D::new(cmd.vx * dt, cmd.vy * dt, th);
    }
    let (s, c) = th.sin_cos();
    let w = cmd.omega;
    Pose2D::new(
        (cmd.vx * s - cmd.vy * (1.0 - c)) / w,
        (cmd.vx * (1.0 - c) + cmd.vy * s) / w,
        th,
    )
}

pub struct World {
    cfg: SimConfig,
    grid: Arc<OccupancyGrid>,
    frames: [ShoulderFrame; 2],
    state: WorldState,
    obstacles: Vec<Disc>,
    rng: ChaCha8Rng,
    /// Planar base acceleration in the world frame over the last step.
    accel: (f64, f64),
    collisions: usize,
    steps: u64,
}

impl World {
    pub fn new(cfg: SimConfig, grid: Arc<OccupancyGrid>, start: Pose2D) -> Result<Self, SimConfigError> {
        cfg.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            grid,
            frames: [
                ShoulderFrame::default_for(Side::Left),
                ShoulderFrame::default_for(Side::Right),
            ],
            state: WorldState {
                pose: start,
                velocity: Twist2D::ZERO,
                time: 0.0,
                bystanders: Vec::new(),
            },
            obstacles: Vec::new(),
            accel: (0.0, 0.0),
            collisions: 0,
            steps: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Arc<OccupancyGrid> {
        &self.grid
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn pose(&self) -> Pose2D {
        self.state.pose
    }

    pub fn velocity(&self) -> Twist2D {
        self.state.velocity
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn frames(&self) -> &[ShoulderFrame; 2] {
        &self.frames
    }

    pub fn base_accel(&self) -> (f64, f64) {
        self.accel
    }

    /// Number of steps whose motion was rejected because of contact.
    pub fn collisions(&self) -> usize {
        self.collisions
    }

    pub fn obstacles(&self) -> &[Disc] {
        &self.obstacles
    }

    pub fn add_obstacle(&mut self, disc: Disc) {
        self.obstacles.push(disc);
    }

    pub fn add_bystander(&mut self, b: Bystander) {
        self.state.bystanders.push(b);
    }

    /// All round obstacles: spawned objects and bystanders.
    pub fn discs(&self) -> Vec<Disc> {
        self.obstacles
            .iter()
            .copied()
            .chain(self.state.bystanders.iter().map(Bystander::disc))
            .collect()
    }

    /// Whether a footprint disc centred at (x, y) overlaps an occupied cell,
    /// leaves the map, or touches a disc obstacle.
    pub fn footprint_collides(&self, x: f64, y: f64) -> bool {
        let r = self.cfg.footprint_radius_m;
        let g = &self.grid;
        let res = g.resolution();
        let (lx, ly) = g.origin().inverse_transform_point(x, y);
        let (w, h) = (g.width() as f64 * res, g.height() as f64 * res);
        if lx - r < 0.0 || ly - r < 0.0 || lx + r > w || ly + r > h {
            return true;
        }
        let x0 = ((lx - r) / res).floor().max(0.0) as usize;
        let y0 = ((ly - r) / res).floor().max(0.0) as usize;
        let x1 = (((lx + r) / res).floor() as usize).min(g.width() - 1);
        let y1 = (((ly + r) / res).floor() as usize).min(g.height() - 1);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                if !g.is_occupied(g.index(cx, cy)) {
                    continue;
                }
                // nearest point of the cell square
                let nx = lx.clamp(cx as f64 * res, (cx + 1) as f64 * res);
                let ny = ly.clamp(cy as f64 * res, (cy + 1) as f64 * res);
                if (lx - nx).hypot(ly - ny) < r {
                    return true;
                }
            }
        }
        self.discs().iter().any(|d| (x - d.x).hypot(y - d.y) < r + d.radius)
    }

    /// Integrates `cmd` (robot frame) for `dt`. A move whose swept footprint
    /// touches an obstacle is rejected and the base comes to rest.
    pub fn step(&mut self, cmd: &Twist2D, dt: f64) -> &WorldState {
        assert!(cmd.is_finite(), "non-finite command");
        assert!(dt > 0.0, "dt must be positive");
        let start = self.state.pose;
        let speed = cmd.linear_speed();
        let spacing = self.cfg.footprint_radius_m / 4.0;
        let n = ((speed * dt / spacing).ceil() as usize).max(1);
        let blocked = (1..=n).any(|k| {
            let p = start.compose(&twist_exp(cmd, dt * k as f64 / n as f64));
            self.footprint_collides(p.x, p.y)
        });

        let old_v = world_velocity(&start, &self.state.velocity);
        if blocked {
            self.collisions += 1;
            self.state.velocity = Twist2D::ZERO;
        } else {
            self.state.pose = start.compose(&twist_exp(cmd, dt));
            self.state.velocity = *cmd;
        }
        let new_v = world_velocity(&self.state.pose, &self.state.velocity);
        self.accel = ((new_v.0 - old_v.0) / dt, (new_v.1 - old_v.1) / dt);

        let (rx, ry) = (self.state.pose.x, self.state.pose.y);
        for b in &mut self.state.bystanders {
            b.advance(rx, ry, dt);
        }
        self.steps += 1;
        self.state.time = self.steps as f64 * dt;
        &self.state
    }

    /// One merged 360° scan in the robot frame.
    pub fn raycast_lidar(&mut self) -> LaserScan {
        let discs = self.discs();
        lidar::scan(
            &self.cfg.lidar,
            &self.grid,
            &discs,
            &self.state.pose,
            self.state.time,
            &mut self.rng,
        )
    }

    /// Raw shoulder readings, left first, for base-frame pushes on each arm.
    pub fn simulate_fts(&mut self, push: [Vec3Force; 2]) -> [Wrench; 2] {
        fts::simulate_both(
            &self.cfg.fts,
            &self.frames,
            push,
            self.accel,
            self.state.time,
            &mut self.rng,
        )
    }
}

fn world_velocity(pose: &Pose2D, v: &Twist2D) -> (f64, f64) {
    let (s, c) = pose.theta.sin_cos();
    (c * v.vx - s * v.vy, s * v.vx + c * v.vy)
}
