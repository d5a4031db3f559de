//! Force-sensitive intent recognition.
//!
//! Raw shoulder wrenches are tared, rotated into the base frame, fused, mapped
//! onto a bounded planar speed and finally low-pass filtered:
//!
//! ```text
//! raw ─► compensate ─► transform ─► fuse ─► scale ─► smooth ─► command
//! ```
//!
//! The speed mapping has three regimes: a dead zone that rejects sensor noise,
//! a linear band, and saturation at the maximum speed. Torques are carried in
//! the telemetry but never influence the command.

use serde::{Deserialize, Serialize};

use crate::geometry::{ShoulderFrame, Side, Twist2D, Vec3Force, Wrench};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntentError {
    #[error("{} shoulder sensor has not been tared", .0.as_str())]
    NotTared(Side),
    #[error("invalid intent config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntentConfig {
    /// Forces at or below this planar magnitude produce no motion.
    pub dead_zone_n: f64,
    /// Forces at or above this planar magnitude produce `max_speed_mps`.
    pub saturation_n: f64,
    pub max_speed_mps: f64,
    pub smooth_old: f64,
    pub smooth_new: f64,
    pub rate_hz: f64,
    /// Rescale the linear band so speed rises from zero at the dead-zone edge
    /// instead of jumping. Off by default.
    pub continuous_deadzone: bool,
}

impl Default for IntentConfig {
    fn default() -> Self {
        Self {
            dead_zone_n: 20.0,
            saturation_n: 120.0,
            max_speed_mps: 0.5,
            smooth_old: 0.98,
            smooth_new: 0.02,
            rate_hz: 100.0,
            continuous_deadzone: false,
        }
    }
}

impl IntentConfig {
    pub fn validate(&self) -> Result<(), IntentError> {
        let finite = [
            self.dead_zone_n,
            self.saturation_n,
            self.max_speed_mps,
            self.smooth_old,
            self.smooth_new,
            self.rate_hz,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(IntentError::InvalidConfig("non-finite value"));
        }
        if !(0.0 <= self.dead_zone_n && self.dead_zone_n < self.saturation_n) {
            return Err(IntentError::InvalidConfig("need 0 <= dead_zone_n < saturation_n"));
        }
        if self.max_speed_mps <= 0.0 {
            return Err(IntentError::InvalidConfig("max_speed_mps must be positive"));
        }
        if self.smooth_old < 0.0 || self.smooth_new <= 0.0 {
            return Err(IntentError::InvalidConfig("smoothing weights must be non-negative"));
        }
        if (self.smooth_old + self.smooth_new - 1.0).abs() > 1e-9 {
            return Err(IntentError::InvalidConfig("smooth_old + smooth_new must equal 1"));
        }
        if self.rate_hz <= 0.0 {
            return Err(IntentError::InvalidConfig("rate_hz must be positive"));
        }
        Ok(())
    }

    /// The same config with smoothing switched off (`smooth_new = 1`).
    pub fn unsmoothed(mut self) -> Self {
        self.smooth_old = 0.0;
        self.smooth_new = 1.0;
        self
    }
}

/// Snapshot of a sensor reading taken while the arm was at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TareOffset {
    pub side: Side,
    pub wrench: Wrench,
    pub timestamp: f64,
}

pub fn tare(side: Side, raw: Wrench, timestamp: f64) -> TareOffset {
    TareOffset {
        side,
        wrench: raw,
        timestamp,
    }
}

/// Subtracts the tare snapshot from a raw reading.
pub fn compensate(offset: Option<&TareOffset>, side: Side, raw: &Wrench) -> Result<Wrench, IntentError> {
    match offset {
        Some(o) => Ok(*raw - o.wrench),
        None => Err(IntentError::NotTared(side)),
    }
}

/// Componentwise mean of the two base-frame shoulder forces.
pub fn fuse_shoulders(left: Vec3Force, right: Vec3Force) -> Vec3Force {
    Vec3Force::new(
        0.5 * (left.x + right.x),
        0.5 * (left.y + right.y),
        0.5 * (left.z + right.z),
    )
}

/// Maps a base-frame force onto a planar target speed.
///
/// The vertical component is dropped before the magnitude is taken, so the
/// thresholds act on the planar norm. `omega` is always zero.
pub fn scale_force(f: &Vec3Force, cfg: &IntentConfig) -> Twist2D {
    let mag = f.planar_magnitude();
    if mag.is_nan() || mag <= cfg.dead_zone_n {
        return Twist2D::ZERO;
    }
    let gain = if mag >= cfg.saturation_n {
        cfg.max_speed_mps / mag
    } else if cfg.continuous_deadzone {
        let frac = (mag - cfg.dead_zone_n) / (cfg.saturation_n - cfg.dead_zone_n);
        frac * cfg.max_speed_mps / mag
    } else {
        cfg.max_speed_mps / cfg.saturation_n
    };
    Twist2D::new(f.x * gain, f.y * gain, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntentState {
    pub speed_old: Twist2D,
    pub last_update: Option<f64>,
}

/// One exponential smoothing step, per axis. The result becomes the new `speed_old`.
pub fn smooth(state: &mut IntentState, new: &Twist2D, cfg: &IntentConfig) -> Twist2D {
    let blend = |old: f64, new: f64| cfg.smooth_old * old + cfg.smooth_new * new;
    let out = Twist2D::new(
        blend(state.speed_old.vx, new.vx),
        blend(state.speed_old.vy, new.vy),
        blend(state.speed_old.omega, new.omega),
    );
    state.speed_old = out;
    out
}

/// Unsmoothed direction and speed of the recognised intent, for display.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntentVector {
    /// Unit direction in the base frame, `(0, 0)` when there is no intent.
    pub dir_x: f64,
    pub dir_y: f64,
    pub speed_mps: f64,
}

impl IntentVector {
    pub fn from_speed(s: &Twist2D) -> Self {
        let speed = s.linear_speed();
        if speed == 0.0 {
            return Self::default();
        }
        Self {
            dir_x: s.vx / speed,
            dir_y: s.vy / speed,
            speed_mps: speed,
        }
    }
}

/// Every intermediate value of one pipeline tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentRecord {
    pub raw: [Wrench; 2],
    pub compensated: [Wrench; 2],
    pub fused: Vec3Force,
    pub scaled: Twist2D,
    pub smoothed: Twist2D,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentOutput {
    pub command: Twist2D,
    pub intent: IntentVector,
    pub record: IntentRecord,
}

/// Stateful dual-shoulder pipeline, meant to be ticked at `rate_hz`.
#[derive(Debug, Clone)]
pub struct ForceIntent {
    cfg: IntentConfig,
    frames: [ShoulderFrame; 2],
    tares: [Option<TareOffset>; 2],
    state: IntentState,
}

impl ForceIntent {
    pub fn new(cfg: IntentConfig, left: ShoulderFrame, right: ShoulderFrame) -> Result<Self, IntentError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            frames: [left, right],
            tares: [None, None],
            state: IntentState::default(),
        })
    }

    pub fn with_default_frames(cfg: IntentConfig) -> Result<Self, IntentError> {
        Self::new(
            cfg,
            ShoulderFrame::default_for(Side::Left),
            ShoulderFrame::default_for(Side::Right),
        )
    }

    pub fn config(&self) -> &IntentConfig {
        &self.cfg
    }

    /// Replaces the configuration. Call between ticks only.
    pub fn set_config(&mut self, cfg: IntentConfig) -> Result<(), IntentError> {
        cfg.validate()?;
        self.cfg = cfg;
        Ok(())
    }

    pub fn frame(&self, side: Side) -> &ShoulderFrame {
        &self.frames[side.index()]
    }

    pub fn state(&self) -> &IntentState {
        &self.state
    }

    pub fn tare_offset(&self, side: Side) -> Option<&TareOffset> {
        self.tares[side.index()].as_ref()
    }

    pub fn is_tared(&self) -> bool {
        self.tares.iter().all(Option::is_some)
    }

    pub fn tare(&mut self, side: Side, raw: Wrench, timestamp: f64) -> TareOffset {
        let offset = tare(side, raw, timestamp);
        self.tares[side.index()] = Some(offset);
        offset
    }

    pub fn compensate(&self, side: Side, raw: &Wrench) -> Result<Wrench, IntentError> {
        compensate(self.tare_offset(side), side, raw)
    }

    /// Drops the smoothed speed back to zero.
    pub fn reset(&mut self) {
        self.state = IntentState::default();
    }

    pub fn tick(&mut self, raw_left: Wrench, raw_right: Wrench, timestamp: f64) -> Result<IntentOutput, IntentError> {
        let comp_left = self.compensate(Side::Left, &raw_left)?;
        let comp_right = self.compensate(Side::Right, &raw_right)?;
        let base_left = self.frames[0].transform_wrench(&comp_left);
        let base_right = self.frames[1].transform_wrench(&comp_right);
        let fused = fuse_shoulders(base_left.force, base_right.force);
        let scaled = scale_force(&fused, &self.cfg);
        let smoothed = smooth(&mut self.state, &scaled, &self.cfg);
        self.state.last_update = Some(timestamp);
        Ok(IntentOutput {
            command: smoothed,
            intent: IntentVector::from_speed(&scaled),
            record: IntentRecord {
                raw: [raw_left, raw_right],
                compensated: [comp_left, comp_right],
                fused,
                scaled,
                smoothed,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> IntentConfig {
        IntentConfig::default()
    }

    fn planar(x: f64, y: f64) -> Vec3Force {
        Vec3Force::new(x, y, 0.0)
    }

    #[test]
    fn default_config_is_valid() {
        cfg().validate().unwrap();
        cfg().unsmoothed().validate().unwrap();
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut c = cfg();
        c.dead_zone_n = 130.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.smooth_new = 0.05;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.rate_hz = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.max_speed_mps = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tare_then_compensate_self_is_zero() {
        let raw = Wrench::new(Vec3Force::new(5.0, -3.0, 40.0), Vec3Force::new(1.0, 0.0, 0.0));
        let off = tare(Side::Left, raw, 0.0);
        assert_eq!(compensate(Some(&off), Side::Left, &raw).unwrap(), Wrench::ZERO);
        let pushed = Wrench::new(Vec3Force::new(25.0, -3.0, 40.0), raw.torque);
        let c = compensate(Some(&off), Side::Left, &pushed).unwrap();
        assert_eq!(c.force, Vec3Force::new(20.0, 0.0, 0.0));
        assert_eq!(c.torque, Vec3Force::ZERO);
    }

    #[test]
    fn compensate_before_tare_fails() {
        assert_eq!(
            compensate(None, Side::Right, &Wrench::ZERO),
            Err(IntentError::NotTared(Side::Right))
        );
        let mut p = ForceIntent::with_default_frames(cfg()).unwrap();
        p.tare(Side::Left, Wrench::ZERO, 0.0);
        assert_eq!(
            p.tick(Wrench::ZERO, Wrench::ZERO, 0.0),
            Err(IntentError::NotTared(Side::Right))
        );
    }

    #[test]
    fn fusion_is_the_mean() {
        assert_eq!(fuse_shoulders(planar(60.0, 0.0), planar(60.0, 0.0)), planar(60.0, 0.0));
        assert_eq!(fuse_shoulders(planar(60.0, 0.0), planar(0.0, 0.0)), planar(30.0, 0.0));
        assert_eq!(
            fuse_shoulders(planar(40.0, 20.0), planar(20.0, -20.0)),
            planar(30.0, 0.0)
        );
    }

    #[test]
    fn scale_force_branches() {
        let c = cfg();
        let t = scale_force(&planar(60.0, 0.0), &c);
        assert!((t.vx - 0.25).abs() < 1e-12 && t.vy == 0.0 && t.omega == 0.0);
        let t = scale_force(&planar(240.0, 0.0), &c);
        assert!((t.vx - 0.5).abs() < 1e-12 && t.vy == 0.0);
        assert_eq!(scale_force(&planar(10.0, 10.0), &c), Twist2D::ZERO);
        assert_eq!(scale_force(&planar(0.0, 0.0), &c), Twist2D::ZERO);
        // exactly on the dead-zone edge is still inside it
        assert_eq!(scale_force(&planar(20.0, 0.0), &c), Twist2D::ZERO);
    }

    #[test]
    fn branches_agree_at_saturation_boundary() {
        // evaluate both formulas at |F| = 120 N independently
        let saturated = 120.0 / 120.0 * 0.5;
        let linear = 120.0 / 120.0 * 0.5;
        assert_eq!(saturated, linear);
        let t = scale_force(&planar(120.0, 0.0), &cfg());
        assert!((t.vx - saturated).abs() < 1e-9);
        let just_below = scale_force(&planar(120.0 - 1e-9, 0.0), &cfg());
        assert!((just_below.vx - 0.5).abs() < 1e-9);
    }

    #[test]
    fn vertical_force_is_ignored() {
        let t = scale_force(&Vec3Force::new(15.0, 0.0, 500.0), &cfg());
        assert_eq!(t, Twist2D::ZERO);
        let t = scale_force(&Vec3Force::new(60.0, 0.0, -500.0), &cfg());
        assert!((t.vx - 0.25).abs() < 1e-12);
    }

    #[test]
    fn deadzone_jump_is_kept() {
        let above = scale_force(&planar(20.0 + 1e-9, 0.0), &cfg());
        assert!((above.vx - 0.5 * 20.0 / 120.0).abs() < 1e-9);
    }

    #[test]
    fn continuous_variant_starts_at_zero() {
        let mut c = cfg();
        c.continuous_deadzone = true;
        assert!(scale_force(&planar(20.0 + 1e-9, 0.0), &c).vx < 1e-9);
        assert!((scale_force(&planar(70.0, 0.0), &c).vx - 0.25).abs() < 1e-12);
        assert!((scale_force(&planar(300.0, 0.0), &c).vx - 0.5).abs() < 1e-12);
    }

    #[test]
    fn smooth_examples() {
        let c = cfg();
        let mut s = IntentState::default();
        let out = smooth(&mut s, &Twist2D::new(0.5, 0.0, 0.0), &c);
        assert!((out.vx - 0.01).abs() < 1e-15);
        assert_eq!(s.speed_old, out);

        let v = Twist2D::new(0.3, -0.2, 0.0);
        let mut s = IntentState {
            speed_old: v,
            last_update: None,
        };
        let out = smooth(&mut s, &v, &c);
        assert!((out.vx - v.vx).abs() < 1e-15 && (out.vy - v.vy).abs() < 1e-15);
    }

    #[test]
    fn fifty_ticks_match_geometric_series() {
        let c = cfg();
        let mut s = IntentState::default();
        let target = Twist2D::new(0.5, 0.0, 0.0);
        let mut out = Twist2D::ZERO;
        for _ in 0..50 {
            out = smooth(&mut s, &target, &c);
        }
        let closed_form = 0.5 * (1.0 - 0.98f64.powi(50));
        assert!((out.vx - closed_form).abs() < 1e-6);
        assert!((closed_form - 0.317915).abs() < 1e-6);
    }

    #[test]
    fn pipeline_zero_after_tare_and_push_converges() {
        let mut p = ForceIntent::with_default_frames(cfg()).unwrap();
        let gravity = Wrench::new(Vec3Force::new(0.0, 0.0, -34.335), Vec3Force::new(0.0, 10.3, 0.0));
        p.tare(Side::Left, gravity, 0.0);
        p.tare(Side::Right, gravity, 0.0);
        let out = p.tick(gravity, gravity, 0.01).unwrap();
        assert_eq!(out.command, Twist2D::ZERO);
        assert_eq!(out.intent, IntentVector::default());

        // 60 N forward in the base frame on both shoulders, expressed in each sensor frame
        let push = Wrench::from_force(Vec3Force::new(60.0, 0.0, 0.0));
        let left = gravity + p.frame(Side::Left).to_sensor(&push);
        let right = gravity + p.frame(Side::Right).to_sensor(&push);
        let mut last = Twist2D::ZERO;
        for i in 0..50 {
            last = p.tick(left, right, 0.02 + i as f64 * 0.01).unwrap().command;
        }
        // one time constant of a 0.98 filter at 100 Hz is 50 ticks
        let expect = 0.25 * (1.0 - 0.98f64.powi(50));
        assert!((last.vx - expect).abs() < 1e-9, "{} vs {}", last.vx, expect);
        assert!(last.vy.abs() < 1e-9);
        let out = p.tick(left, right, 1.0).unwrap();
        assert!((out.intent.speed_mps - 0.25).abs() < 1e-9);
        assert!((out.intent.dir_x - 1.0).abs() < 1e-9);

        for i in 0..300 {
            last = p.tick(gravity, gravity, 2.0 + i as f64 * 0.01).unwrap().command;
        }
        assert!(last.vx < 0.005);
    }

    proptest! {
        #[test]
        fn output_magnitude_in_allowed_set(x in -400.0..400.0f64, y in -400.0..400.0f64) {
            let t = scale_force(&planar(x, y), &cfg());
            let s = t.linear_speed();
            prop_assert!(s == 0.0 || (s > 0.5 * 20.0 / 120.0 - 1e-12 && s <= 0.5 + 1e-12));
            prop_assert!(t.vx.abs() <= 0.5 + 1e-12 && t.vy.abs() <= 0.5 + 1e-12);
        }

        #[test]
        fn direction_is_preserved(x in -400.0..400.0f64, y in -400.0..400.0f64, k in 0.01..10.0f64) {
            let f = planar(x, y);
            let t = scale_force(&f, &cfg());
            if f.planar_magnitude() > 20.0 {
                let s = t.linear_speed();
                let m = f.planar_magnitude();
                prop_assert!((t.vx / s - x / m).abs() < 1e-9);
                prop_assert!((t.vy / s - y / m).abs() < 1e-9);
            }
            let scaled = scale_force(&(f * k), &cfg());
            let (a, b) = (IntentVector::from_speed(&t), IntentVector::from_speed(&scaled));
            if a.speed_mps > 0.0 && b.speed_mps > 0.0 {
                prop_assert!((a.dir_x - b.dir_x).abs() < 1e-9 && (a.dir_y - b.dir_y).abs() < 1e-9);
            }
        }

        #[test]
        fn monotone_for_collinear_forces(ax in -1.0..1.0f64, ay in -1.0..1.0f64, m1 in 0.0..300.0f64, m2 in 0.0..300.0f64) {
            let n = ax.hypot(ay);
            prop_assume!(n > 1e-3);
            let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            let s_lo = scale_force(&planar(ax / n * lo, ay / n * lo), &cfg()).linear_speed();
            let s_hi = scale_force(&planar(ax / n * hi, ay / n * hi), &cfg()).linear_speed();
            prop_assert!(s_lo <= s_hi + 1e-12);
        }

        #[test]
        fn smoothing_contracts_toward_target(old in -0.5..0.5f64, target in -0.5..0.5f64) {
            let mut s = IntentState { speed_old: Twist2D::new(old, old, 0.0), last_update: None };
            let out = smooth(&mut s, &Twist2D::new(target, -target, 0.0), &cfg());
            prop_assert!(((out.vx - target).abs() - 0.98 * (old - target).abs()).abs() < 1e-12);
            prop_assert!(((out.vy + target).abs() - 0.98 * (old + target).abs()).abs() < 1e-12);
        }
    }
}
