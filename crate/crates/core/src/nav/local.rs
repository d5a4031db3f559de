//! Building blocks of the path-sampling local controller.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::ControlError;
use crate::geometry::{normalize_angle, LaserScan, Pose2D, Twist2D};
use crate::perception::Costmap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerPipelineConfig {
    pub lookahead_m: f64,
    /// Extra clearance kept between the footprint and any obstacle at the target.
    pub safety_margin_m: f64,
    /// Radius of the disc approximating the robot body.
    pub footprint_radius_m: f64,
    pub max_lin_mps: f64,
    pub max_ang_radps: f64,
    pub max_lin_accel_mps2: f64,
    pub heading_gain: f64,
    pub goal_xy_tol_m: f64,
    pub goal_theta_tol_rad: f64,
    /// Drive sideways towards the target. Off by default: motion stays
    /// forward-and-turn so bystanders can anticipate it.
    pub holonomic: bool,
    pub shift_step_m: f64,
    pub max_shift_m: f64,
    /// Period between controller invocations.
    pub control_dt: f64,
}

impl Default for ControllerPipelineConfig {
    fn default() -> Self {
        Self {
            lookahead_m: 1.0,
            safety_margin_m: 0.15,
            footprint_radius_m: 0.35,
            max_lin_mps: 0.5,
            max_ang_radps: 1.0,
            max_lin_accel_mps2: 0.5,
            heading_gain: 2.0,
            goal_xy_tol_m: 0.1,
            goal_theta_tol_rad: 0.1,
            holonomic: false,
            shift_step_m: 0.02,
            max_shift_m: 1.2,
            control_dt: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid controller config: {0}")]
pub struct ControllerConfigError(pub &'static str);

impl ControllerPipelineConfig {
    pub fn validate(&self) -> Result<(), ControllerConfigError> {
        let positive = [
            self.lookahead_m,
            self.safety_margin_m,
            self.footprint_radius_m,
            self.max_lin_mps,
            self.max_ang_radps,
            self.max_lin_accel_mps2,
            self.heading_gain,
            self.goal_xy_tol_m,
            self.goal_theta_tol_rad,
            self.shift_step_m,
            self.max_shift_m,
            self.control_dt,
        ];
        if positive.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(ControllerConfigError(
                "all distances, limits and gains must be positive",
            ))
        }
    }
}

/// Closest point of a polyline to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProjection {
    pub segment: usize,
    /// Arc length from the path start to the projected point.
    pub arc: f64,
    pub distance: f64,
}

fn cumulative(waypoints: &[Pose2D]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(waypoints.len());
    let mut s = 0.0;
    cum.push(0.0);
    for w in waypoints.windows(2) {
        s += w[0].distance_to(&w[1]);
        cum.push(s);
    }
    cum
}

fn project_segments(waypoints: &[Pose2D], cum: &[f64], x: f64, y: f64, segs: std::ops::Range<usize>) -> PathProjection {
    let mut best = PathProjection {
        segment: segs.start,
        arc: cum[segs.start],
        distance: f64::INFINITY,
    };
    for i in segs {
        let (a, b) = (&waypoints[i], &waypoints[i + 1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((x - a.x) * dx + (y - a.y) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (px, py) = (a.x + t * dx, a.y + t * dy);
        let d = (x - px).hypot(y - py);
        if d < best.distance {
            best = PathProjection {
                segment: i,
                arc: cum[i] + t * len2.sqrt(),
                distance: d,
            };
        }
    }
    best
}

fn point_at_arc(waypoints: &[Pose2D], cum: &[f64], s: f64) -> Pose2D {
    let total = *cum.last().unwrap_or(&0.0);
    if s >= total {
        return *waypoints.last().expect("non-empty path");
    }
    let j = cum
        .partition_point(|&c| c <= s)
        .saturating_sub(1)
        .min(waypoints.len() - 2);
    let (a, b) = (&waypoints[j], &waypoints[j + 1]);
    let len = cum[j + 1] - cum[j];
    let t = if len > 0.0 { (s - cum[j]) / len } else { 0.0 };
    Pose2D::new(
        a.x + t * (b.x - a.x),
        a.y + t * (b.y - a.y),
        (b.y - a.y).atan2(b.x - a.x),
    )
}

/// Point `lookahead_m` further along the path than the robot's closest
/// projection onto it; the final waypoint once less than that remains.
pub fn sample_path_target(waypoints: &[Pose2D], pose: &Pose2D, lookahead_m: f64) -> Result<Pose2D, ControlError> {
    sample_path_target_from(waypoints, pose, lookahead_m, None, f64::INFINITY).map(|s| s.target)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub target: Pose2D,
    pub projection: PathProjection,
    /// Arc length from the projection to the path end.
    pub remaining: f64,
}

/// Like [`sample_path_target`], but only searches segments from `hint`
/// onwards that start within `horizon_m` of it, so progress along paths that
/// double back on themselves stays monotone.
pub fn sample_path_target_from(
    waypoints: &[Pose2D],
    pose: &Pose2D,
    lookahead_m: f64,
    hint: Option<usize>,
    horizon_m: f64,
) -> Result<PathSample, ControlError> {
    let last = waypoints.last().ok_or(ControlError::EmptyPath)?;
    if waypoints.len() == 1 {
        return Ok(PathSample {
            target: *last,
            projection: PathProjection {
                segment: 0,
                arc: 0.0,
                distance: pose.distance_to(last),
            },
            remaining: 0.0,
        });
    }
    let cum = cumulative(waypoints);
    let segments = waypoints.len() - 1;
    let range = match hint {
        None => 0..segments,
        Some(h) => {
            let h = h.min(segments - 1);
            let end = (h..segments)
                .take_while(|&i| cum[i] <= cum[h] + horizon_m)
                .last()
                .unwrap_or(h);
            h..end + 1
        }
    };
    let projection = project_segments(waypoints, &cum, pose.x, pose.y, range);
    let target = point_at_arc(waypoints, &cum, projection.arc + lookahead_m);
    Ok(PathSample {
        target,
        projection,
        remaining: cum[segments] - projection.arc,
    })
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn min_distance(points: &[(f64, f64)], p: (f64, f64)) -> f64 {
    points
        .iter()
        .map(|q| (q.0 - p.0).hypot(q.1 - p.1))
        .fold(f64::INFINITY, f64::min)
}

/// Clearance rule shared by the shift search: the target keeps footprint plus
/// margin from every obstacle point, and the straight drive there keeps
/// footprint plus half the margin (or the robot's current clearance, if that
/// is already smaller). Lethal or off-map target cells are rejected.
pub fn shift_is_clear(
    candidate: (f64, f64),
    robot: (f64, f64),
    points: &[(f64, f64)],
    costmap: Option<&Costmap>,
    cfg: &ControllerPipelineConfig,
) -> bool {
    if let Some(c) = costmap {
        match c.world_to_index(candidate.0, candidate.1) {
            Some(i) if !c.is_lethal(i) => {}
            _ => return false,
        }
    }
    let target_req = cfg.footprint_radius_m + cfg.safety_margin_m;
    if min_distance(points, candidate) < target_req {
        return false;
    }
    let path_req = (cfg.footprint_radius_m + 0.5 * cfg.safety_margin_m).min(min_distance(points, robot));
    points
        .iter()
        .all(|&q| point_segment_distance(q, robot, candidate) >= path_req)
}

/// Shifts `target` perpendicular to its heading by the smallest offset (in
/// `shift_step_m` increments up to `max_shift_m`) that satisfies
/// [`shift_is_clear`]. Offsets of equal size prefer the side with more
/// clearance, then the right-hand side.
pub fn avoid_shift_points(
    target: &Pose2D,
    robot: (f64, f64),
    points: &[(f64, f64)],
    costmap: Option<&Costmap>,
    cfg: &ControllerPipelineConfig,
) -> Result<Pose2D, ControlError> {
    let (nx, ny) = (-target.theta.sin(), target.theta.cos());
    let at = |off: f64| (target.x + off * nx, target.y + off * ny);
    let steps = (cfg.max_shift_m / cfg.shift_step_m).floor() as i64;
    for k in 0..=steps {
        let off = k as f64 * cfg.shift_step_m;
        let offsets: &[f64] = if k == 0 { &[0.0] } else { &[-off, off] };
        let best = offsets
            .iter()
            .filter(|&&o| shift_is_clear(at(o), robot, points, costmap, cfg))
            .map(|&o| (o, min_distance(points, at(o))))
            .fold(None, |acc: Option<(f64, f64)>, cand| match acc {
                Some(a) if a.1 >= cand.1 => Some(a),
                _ => Some(cand),
            });
        if let Some((o, _)) = best {
            let (x, y) = at(o);
            return Ok(Pose2D::new(x, y, target.theta));
        }
    }
    Err(ControlError::NoViableShift)
}

/// [`avoid_shift_points`] with obstacle points taken from a robot-frame scan.
pub fn avoid_shift(
    target: &Pose2D,
    robot: &Pose2D,
    scan: &LaserScan,
    costmap: Option<&Costmap>,
    cfg: &ControllerPipelineConfig,
) -> Result<Pose2D, ControlError> {
    let points = scan.world_points(robot);
    avoid_shift_points(target, (robot.x, robot.y), &points, costmap, cfg)
}

pub fn at_goal(pose: &Pose2D, goal: &Pose2D, cfg: &ControllerPipelineConfig) -> bool {
    pose.distance_to(goal) <= cfg.goal_xy_tol_m
        && normalize_angle(goal.theta - pose.theta).abs() <= cfg.goal_theta_tol_rad
}

/// Steering command towards `target`.
///
/// Forward speed follows the heading error's cosine, is ramp-limited by
/// `max_lin_accel_mps2` and, when `final_goal` is set, capped so the robot can
/// stop at the target. Within `goal_xy_tol_m` of a final goal the robot turns
/// in place to the goal heading, and at the goal the command is zero.
pub fn compute_command(
    pose: &Pose2D,
    vel: &Twist2D,
    target: &Pose2D,
    final_goal: bool,
    cfg: &ControllerPipelineConfig,
) -> Twist2D {
    let clamp_ang = |w: f64| w.clamp(-cfg.max_ang_radps, cfg.max_ang_radps);
    let ramp = |desired: f64, current: f64| {
        let dv = cfg.max_lin_accel_mps2 * cfg.control_dt;
        desired
            .clamp(current - dv, current + dv)
            .clamp(-cfg.max_lin_mps, cfg.max_lin_mps)
    };

    let (dx, dy) = pose.inverse_transform_point(target.x, target.y);
    let dist = dx.hypot(dy);
    if final_goal && dist <= cfg.goal_xy_tol_m {
        let e = normalize_angle(target.theta - pose.theta);
        if e.abs() <= cfg.goal_theta_tol_rad {
            return Twist2D::ZERO;
        }
        return Twist2D::new(0.0, 0.0, clamp_ang(cfg.heading_gain * e));
    }
    let stop_cap = if final_goal {
        (2.0 * cfg.max_lin_accel_mps2 * dist).sqrt()
    } else {
        f64::INFINITY
    };
    let speed = cfg.max_lin_mps.min(stop_cap);

    if cfg.holonomic {
        let (ux, uy) = if dist > 0.0 { (dx / dist, dy / dist) } else { (0.0, 0.0) };
        let mut vx = ramp(speed * ux, vel.vx);
        let mut vy = ramp(speed * uy, vel.vy);
        let n = vx.hypot(vy);
        if n > cfg.max_lin_mps {
            vx *= cfg.max_lin_mps / n;
            vy *= cfg.max_lin_mps / n;
        }
        let e = normalize_angle(target.theta - pose.theta);
        return Twist2D::new(vx, vy, clamp_ang(cfg.heading_gain * e));
    }

    let err = dy.atan2(dx);
    let forward = if err.abs() < FRAC_PI_2 { err.cos() } else { 0.0 };
    let vx = ramp(speed * forward, vel.vx).max(0.0);
    Twist2D::new(vx, 0.0, clamp_ang(cfg.heading_gain * err))
}
