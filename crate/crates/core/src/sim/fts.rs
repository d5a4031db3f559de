use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{ShoulderFrame, Side, Vec3Force, Wrench};

const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FtsConfig {
    /// Mass hanging off each shoulder sensor.
    pub arm_mass_kg: f64,
    /// Horizontal distance from the sensor to the arm's centre of mass.
    pub arm_lever_m: f64,
    pub noise_sigma_n: f64,
    pub torque_noise_sigma_nm: f64,
    /// Spurious force per m/s² of base acceleration, along the push direction.
    pub vibration_gain: f64,
    pub vibration_freq_hz: f64,
}

impl Default for FtsConfig {
    fn default() -> Self {
        Self {
            arm_mass_kg: 3.5,
            arm_lever_m: 0.3,
            noise_sigma_n: 0.5,
            torque_noise_sigma_nm: 0.05,
            vibration_gain: 0.0,
            vibration_freq_hz: 3.0,
        }
    }
}

impl FtsConfig {
    /// Base-frame load of a resting arm whose centre of mass sits
    /// `arm_lever_m` ahead of the sensor.
    pub fn gravity_wrench_base(&self) -> Wrench {
        let force = Vec3Force::new(0.0, 0.0, -self.arm_mass_kg * GRAVITY);
        let lever = Vec3Force::new(self.arm_lever_m, 0.0, 0.0);
        Wrench::new(force, lever.cross(&force))
    }

    /// The resting load as seen in the sensor's own frame.
    pub fn static_gravity_wrench(&self, frame: &ShoulderFrame) -> Wrench {
        frame.to_sensor(&self.gravity_wrench_base())
    }
}

fn noise<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vec3Force {
    if sigma <= 0.0 {
        return Vec3Force::ZERO;
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    Vec3Force::new(n.sample(rng), n.sample(rng), n.sample(rng))
}

/// Raw sensor-frame reading of one shoulder.
///
/// `push` is the base-frame force a person applies to that arm and
/// `base_accel` the planar base acceleration, which shakes the upper body
/// and adds `gain · |a| · sin(2π f t)` along the push direction.
pub fn simulate_fts<R: Rng + ?Sized>(
    cfg: &FtsConfig,
    frame: &ShoulderFrame,
    push: Vec3Force,
    base_accel: (f64, f64),
    t: f64,
    rng: &mut R,
) -> Wrench {
    let mag = push.magnitude();
    let vibration = if mag > 0.0 {
        let a = base_accel.0.hypot(base_accel.1);
        push * (cfg.vibration_gain * a * (2.0 * PI * cfg.vibration_freq_hz * t).sin() / mag)
    } else {
        Vec3Force::ZERO
    };
    let applied = frame.to_sensor(&Wrench::from_force(push + vibration));
    let mut raw = cfg.static_gravity_wrench(frame) + applied;
    raw.force += noise(rng, cfg.noise_sigma_n);
    raw.torque += noise(rng, cfg.torque_noise_sigma_nm);
    raw
}

/// Readings for both shoulders, left first, from one generator.
pub fn simulate_both<R: Rng + ?Sized>(
    cfg: &FtsConfig,
    frames: &[ShoulderFrame; 2],
    push: [Vec3Force; 2],
    base_accel: (f64, f64),
    t: f64,
    rng: &mut R,
) -> [Wrench; 2] {
    let left = simulate_fts(cfg, &frames[Side::Left.index()], push[0], base_accel, t, rng);
    let right = simulate_fts(cfg, &frames[Side::Right.index()], push[1], base_accel, t, rng);
    [left, right]
}
