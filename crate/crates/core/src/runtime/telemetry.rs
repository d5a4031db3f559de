use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2D, Twist2D, Vec3Force, Wrench};

/// One row per control tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub time_s: f64,
    pub pose: Pose2D,
    pub command: Twist2D,
    pub raw: [Wrench; 2],
    pub compensated: [Wrench; 2],
    pub fused: Vec3Force,
    pub scaled: Twist2D,
    pub smoothed: Twist2D,
    pub mode: String,
    pub planner: String,
    pub controller: String,
    pub nav_status: String,
    pub collisions: usize,
}

pub const COLUMNS: &[&str] = &[
    "time_s",
    "x_m",
    "y_m",
    "theta_rad",
    "cmd_vx_mps",
    "cmd_vy_mps",
    "cmd_omega_radps",
    "raw_left_fx_n",
    "raw_left_fy_n",
    "raw_left_fz_n",
    "raw_right_fx_n",
    "raw_right_fy_n",
    "raw_right_fz_n",
    "comp_left_fx_n",
    "comp_left_fy_n",
    "comp_left_fz_n",
    "comp_right_fx_n",
    "comp_right_fy_n",
    "comp_right_fz_n",
    "fused_fx_n",
    "fused_fy_n",
    "fused_fz_n",
    "scaled_vx_mps",
    "scaled_vy_mps",
    "smoothed_vx_mps",
    "smoothed_vy_mps",
    "mode",
    "planner",
    "controller",
    "nav_status",
    "collisions",
];

pub fn header() -> String {
    COLUMNS.join(",")
}

impl TelemetryRecord {
    pub fn to_csv(&self) -> String {
        let mut f: Vec<f64> = vec![
            self.time_s,
            self.pose.x,
            self.pose.y,
            self.pose.theta,
            self.command.vx,
            self.command.vy,
            self.command.omega,
        ];
        for w in self.raw.iter().chain(&self.compensated) {
            f.extend(w.force.to_array());
        }
        f.extend(self.fused.to_array());
        f.extend([self.scaled.vx, self.scaled.vy, self.smoothed.vx, self.smoothed.vy]);
        let mut cells: Vec<String> = f.iter().map(|v| v.to_string()).collect();
        cells.extend([
            self.mode.clone(),
            self.planner.clone(),
            self.controller.clone(),
            self.nav_status.clone(),
            self.collisions.to_string(),
        ]);
        cells.join(",")
    }
}

/// Streams records as CSV after a single header line.
pub struct TelemetryWriter<W: Write> {
    out: W,
    rows: usize,
}

impl<W: Write> TelemetryWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{}", header())?;
        Ok(Self { out, rows: 0 })
    }

    pub fn write(&mut self, r: &TelemetryRecord) -> io::Result<()> {
        self.rows += 1;
        writeln!(self.out, "{}", r.to_csv())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_matches_header_width() {
        let r = TelemetryRecord {
            time_s: 0.01,
            pose: Pose2D::new(1.0, 2.0, 0.5),
            command: Twist2D::new(0.25, 0.0, 0.0),
            raw: [Wrench::ZERO; 2],
            compensated: [Wrench::ZERO; 2],
            fused: Vec3Force::new(60.0, 0.0, 0.0),
            scaled: Twist2D::new(0.25, 0.0, 0.0),
            smoothed: Twist2D::new(0.005, 0.0, 0.0),
            mode: "guided".into(),
            planner: "dijkstra".into(),
            controller: "path_sampling".into(),
            nav_status: "idle".into(),
            collisions: 0,
        };
        let row = r.to_csv();
        assert_eq!(row.split(',').count(), COLUMNS.len());
        assert!(row.starts_with("0.01,1,2,0.5,0.25,0,0,"));

        let mut w = TelemetryWriter::new(Vec::new()).unwrap();
        w.write(&r).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines, vec![header().as_str(), row.as_str()]);
    }
}
