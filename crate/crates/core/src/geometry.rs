//! Shared geometric and sensor types.
//!
//! Frame convention: the robot base frame is right-handed with +x forward,
//! +y left and yaw counterclockwise. World poses use the same orientation.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can land exactly on 2π for tiny negative inputs
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// A 3D force in newtons.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3Force {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3Force {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn magnitude(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Norm of the (x, y) components only.
    pub fn planar_magnitude(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }
}

impl From<[f64; 3]> for Vec3Force {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl Add for Vec3Force {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3Force {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3Force {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3Force {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3Force {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Force (N) and torque (Nm) as reported by a six-axis force-torque sensor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec3Force,
    /// Torque in newton-meters. Carried through transforms, never used for control.
    pub torque: Vec3Force,
}

impl Wrench {
    pub const ZERO: Self = Self {
        force: Vec3Force::ZERO,
        torque: Vec3Force::ZERO,
    };

    pub const fn new(force: Vec3Force, torque: Vec3Force) -> Self {
        Self { force, torque }
    }

    pub fn from_force(force: Vec3Force) -> Self {
        Self {
            force,
            torque: Vec3Force::ZERO,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.force.is_finite() && self.torque.is_finite()
    }
}

impl Add for Wrench {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.force + rhs.force, self.torque + rhs.torque)
    }
}

impl Sub for Wrench {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.force - rhs.force, self.torque - rhs.torque)
    }
}

/// Planar pose in the world frame. `theta` is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub const IDENTITY: Self = Self {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    /// SE(2) composition `self ∘ other`: `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose2D) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    /// Maps a point given in this pose's local frame into the parent frame.
    pub fn transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.x + c * px - s * py, self.y + s * px + c * py)
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn inverse_transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = px - self.x;
        let dy = py - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn distance_to(&self, other: &Pose2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Planar velocity in the robot base frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist2D {
    /// m/s, forward
    pub vx: f64,
    /// m/s, left
    pub vy: f64,
    /// rad/s, counterclockwise
    pub omega: f64,
}

impl Twist2D {
    pub const ZERO: Self = Self {
        vx: 0.0,
        vy: 0.0,
        omega: 0.0,
    };

    pub const fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    pub fn linear_speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0 && self.omega == 0.0
    }
}

/// Row-major 3×3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation3(pub [[f64; 3]; 3]);

impl Rotation3 {
    pub const IDENTITY: Self = Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_yaw(yaw: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        Self([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Z-Y-X (yaw, pitch, roll) Euler angles.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sy, cy) = yaw.sin_cos();
        Self([
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ])
    }

    pub fn apply(&self, v: &Vec3Force) -> Vec3Force {
        let m = &self.0;
        Vec3Force::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[j][i];
            }
        }
        Self(t)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// True when `RᵀR ≈ I` and `det R ≈ +1`.
    pub fn is_proper_rotation(&self, tol: f64) -> bool {
        let m = &self.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() > tol || !dot.is_finite() {
                    return false;
                }
            }
        }
        (self.determinant() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("shoulder frame rotation is not a proper rotation (orthonormal, det +1)")]
pub struct InvalidFrame;

/// Fixed mounting transform of a shoulder force-torque sensor relative to the base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShoulderFrame {
    pub side: Side,
    rotation: Rotation3,
    translation: [f64; 3],
}

impl ShoulderFrame {
    pub fn new(side: Side, rotation: Rotation3, translation: [f64; 3]) -> Result<Self, InvalidFrame> {
        if !rotation.is_proper_rotation(1e-9) || translation.iter().any(|t| !t.is_finite()) {
            return Err(InvalidFrame);
        }
        Ok(Self {
            side,
            rotation,
            translation,
        })
    }

    pub fn identity(side: Side) -> Self {
        Self {
            side,
            rotation: Rotation3::IDENTITY,
            translation: [0.0; 3],
        }
    }

    /// Mounting used by the simulator: sensors sit at shoulder height, each
    /// yawed to face outward from the torso.
    pub fn default_for(side: Side) -> Self {
        let (yaw, y) = match side {
            Side::Left => (PI / 2.0, 0.25),
            Side::Right => (-PI / 2.0, -0.25),
        };
        Self {
            side,
            rotation: Rotation3::from_yaw(yaw),
            translation: [0.0, y, 1.25],
        }
    }

    pub fn rotation(&self) -> &Rotation3 {
        &self.rotation
    }

    pub fn translation(&self) -> [f64; 3] {
        self.translation
    }

    /// Expresses a sensor-frame wrench in the base frame.
    ///
    /// Only the rotation is applied. The torque is rotated so the record stays
    /// consistent, but downstream control never reads it.
    pub fn transform_wrench(&self, w: &Wrench) -> Wrench {
        Wrench::new(self.rotation.apply(&w.force), self.rotation.apply(&w.torque))
    }

    /// Inverse of [`transform_wrench`](Self::transform_wrench).
    pub fn to_sensor(&self, w: &Wrench) -> Wrench {
        let rt = self.rotation.transpose();
        Wrench::new(rt.apply(&w.force), rt.apply(&w.torque))
    }
}

/// One lidar ray. A ray without a return stores `range_max` with `hit == false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub range: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScanError {
    #[error("scan has no rays")]
    Empty,
    #[error("ray {0} has range outside [0, range_max]")]
    RangeOutOfBounds(usize),
    #[error("scan parameters must be finite with range_max > 0")]
    BadParameters,
}

/// A planar 360° range scan in the robot frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub angle_min: f64,
    pub angle_increment: f64,
    pub range_max: f64,
    pub timestamp: f64,
    rays: Vec<Ray>,
}

impl LaserScan {
    /// Builds a scan from raw ranges. Non-finite values and values beyond
    /// `range_max` are stored as no-return rays.
    pub fn from_ranges(
        angle_min: f64,
        angle_increment: f64,
        range_max: f64,
        timestamp: f64,
        ranges: &[f64],
    ) -> Result<Self, ScanError> {
        let rays = ranges
            .iter()
            .map(|&r| {
                if r.is_finite() && r <= range_max {
                    Ray {
                        range: r.max(0.0),
                        hit: true,
                    }
                } else {
                    Ray {
                        range: range_max,
                        hit: false,
                    }
                }
            })
            .collect();
        Self::from_rays(angle_min, angle_increment, range_max, timestamp, rays)
    }

    pub fn from_rays(
        angle_min: f64,
        angle_increment: f64,
        range_max: f64,
        timestamp: f64,
        rays: Vec<Ray>,
    ) -> Result<Self, ScanError> {
        if rays.is_empty() {
            return Err(ScanError::Empty);
        }
        if !(angle_min.is_finite() && angle_increment.is_finite() && range_max.is_finite()) || range_max <= 0.0 {
            return Err(ScanError::BadParameters);
        }
        for (i, ray) in rays.iter().enumerate() {
            if !ray.range.is_finite() || ray.range < 0.0 || ray.range > range_max {
                return Err(ScanError::RangeOutOfBounds(i));
            }
        }
        Ok(Self {
            angle_min,
            angle_increment,
            range_max,
            timestamp,
            rays,
        })
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angle_min + self.angle_increment * i as f64
    }

    pub fn set_no_return(&mut self, i: usize) {
        self.rays[i] = Ray {
            range: self.range_max,
            hit: false,
        };
    }

    pub fn hit_count(&self) -> usize {
        self.rays.iter().filter(|r| r.hit).count()
    }

    /// Hit points in the robot frame.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rays.iter().enumerate().filter(|(_, r)| r.hit).map(|(i, r)| {
            let a = self.angle(i);
            (r.range * a.cos(), r.range * a.sin())
        })
    }

    /// Hit points transformed into the world frame by the sensor pose.
    pub fn world_points(&self, pose: &Pose2D) -> Vec<(f64, f64)> {
        self.points().map(|(x, y)| pose.transform_point(x, y)).collect()
    }

    pub(crate) fn with_rays(&self, rays: Vec<Ray>, angle_increment: f64) -> Self {
        Self {
            angle_min: self.angle_min,
            angle_increment,
            range_max: self.range_max,
            timestamp: self.timestamp,
            rays,
        }
    }
}
