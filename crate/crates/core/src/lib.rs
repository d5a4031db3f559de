//! Force-guided intent recognition and plugin-based navigation for an
//! omnidirectional mobile base, exercised against a deterministic simulator.

pub mod geometry;
pub mod intent;
pub mod nav;
pub mod perception;
pub mod runtime;
pub mod sim;

pub use geometry::{LaserScan, Pose2D, Ray, ShoulderFrame, Side, Twist2D, Vec3Force, Wrench};
