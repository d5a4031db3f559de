use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{LaserScan, Pose2D, Ray};
use crate::perception::OccupancyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub rays: usize,
    pub range_max: f64,
    pub noise_sigma_m: f64,
    /// Chance that a ray is replaced by a spurious near return.
    pub dust_prob: f64,
    pub dust_range_max_m: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            rays: 360,
            range_max: 10.0,
            noise_sigma_m: 0.01,
            dust_prob: 0.0,
            dust_range_max_m: 0.08,
        }
    }
}

/// A circular obstacle: bystander or spawned object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// Distance along a ray to the first occupied cell boundary, or `None`
/// within `max_range`. Uses a cell-walking DDA so the distance is exact for
/// the cell squares.
pub fn raycast_grid(grid: &OccupancyGrid, ox: f64, oy: f64, angle: f64, max_range: f64) -> Option<f64> {
    let res = grid.resolution();
    let origin = grid.origin();
    let (lx, ly) = origin.inverse_transform_point(ox, oy);
    let a = angle - origin.theta;
    let (dx, dy) = (a.cos(), a.sin());
    // work in cell units
    let (px, py) = (lx / res, ly / res);
    let (mut cx, mut cy) = (px.floor() as i64, py.floor() as i64);
    let max_t = max_range / res;

    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let delta_x = if dx != 0.0 { (1.0 / dx).abs() } else { f64::INFINITY };
    let delta_y = if dy != 0.0 { (1.0 / dy).abs() } else { f64::INFINITY };
    let mut next_x = if dx > 0.0 {
        (cx as f64 + 1.0 - px) * delta_x
    } else if dx < 0.0 {
        (px - cx as f64) * delta_x
    } else {
        f64::INFINITY
    };
    let mut next_y = if dy > 0.0 {
        (cy as f64 + 1.0 - py) * delta_y
    } else if dy < 0.0 {
        (py - cy as f64) * delta_y
    } else {
        f64::INFINITY
    };

    let mut t = 0.0;
    loop {
        if let Some(i) = grid.checked_index((cx, cy)) {
            if grid.is_occupied(i) {
                return Some(t * res);
            }
        } else if t > 0.0 {
            // left the map
            return None;
        }
        if next_x < next_y {
            t = next_x;
            next_x += delta_x;
            cx += step_x;
        } else {
            t = next_y;
            next_y += delta_y;
            cy += step_y;
        }
        if t > max_t {
            return None;
        }
    }
}

/// Smallest non-negative ray parameter hitting the disc.
pub fn raycast_disc(ox: f64, oy: f64, angle: f64, disc: &Disc) -> Option<f64> {
    let (dx, dy) = (angle.cos(), angle.sin());
    let (fx, fy) = (ox - disc.x, oy - disc.y);
    let b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - disc.radius * disc.radius;
    let disc_ = b * b - c;
    if disc_ < 0.0 {
        return None;
    }
    let s = disc_.sqrt();
    let t0 = -b - s;
    let t1 = -b + s;
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Exact noiseless range for one ray against the grid and all discs.
pub fn true_range(grid: &OccupancyGrid, discs: &[Disc], ox: f64, oy: f64, angle: f64, max_range: f64) -> Option<f64> {
    let mut best = raycast_grid(grid, ox, oy, angle, max_range);
    for d in discs {
        if let Some(t) = raycast_disc(ox, oy, angle, d) {
            if t <= max_range && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        }
    }
    best
}

/// A full 360° scan from `pose`, starting at -π, with sensor noise and dust.
pub fn scan<R: Rng + ?Sized>(
    cfg: &LidarConfig,
    grid: &OccupancyGrid,
    discs: &[Disc],
    pose: &Pose2D,
    timestamp: f64,
    rng: &mut R,
) -> LaserScan {
    let n = cfg.rays.max(1);
    let inc = 2.0 * PI / n as f64;
    let normal = (cfg.noise_sigma_m > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma_m).expect("finite sigma"));
    let rays = (0..n)
        .map(|i| {
            let rel = -PI + inc * i as f64;
            if cfg.dust_prob > 0.0 && rng.random::<f64>() < cfg.dust_prob {
                let r = rng.random_range(0.0..cfg.dust_range_max_m);
                return Ray { range: r, hit: true };
            }
            match true_range(grid, discs, pose.x, pose.y, pose.theta + rel, cfg.range_max) {
                Some(r) => {
                    let noisy = match &normal {
                        Some(n) => r + n.sample(rng),
                        None => r,
                    };
                    Ray {
                        range: noisy.clamp(0.0, cfg.range_max),
                        hit: true,
                    }
                }
                None => Ray {
                    range: cfg.range_max,
                    hit: false,
                },
            }
        })
        .collect();
    LaserScan::from_rays(-PI, inc, cfg.range_max, timestamp, rays).expect("valid scan")
}
