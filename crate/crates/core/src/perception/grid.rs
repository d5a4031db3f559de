use serde::{Deserialize, Serialize};

use crate::geometry::{LaserScan, Pose2D};

/// Cells above this probability count as occupied.
pub const OCCUPIED_PROBABILITY: f64 = 0.65;
/// Cells below this probability count as free.
pub const FREE_PROBABILITY: f64 = 0.35;

const HIT_NUDGE_M: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("position ({x:.3}, {y:.3}) lies outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Log-odds increments applied per observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogOddsParams {
    pub hit: f64,
    pub miss: f64,
    /// Values are clamped to `[-clamp, clamp]`.
    pub clamp: f64,
}

impl Default for LogOddsParams {
    fn default() -> Self {
        Self {
            // p = 0.7 on a hit, p = 0.4 on a pass-through
            hit: (0.7f64 / 0.3).ln(),
            miss: (0.4f64 / 0.6).ln(),
            clamp: 5.0,
        }
    }
}

pub fn logistic(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Integer cell coordinate; may lie outside the grid.
pub type CellCoord = (i64, i64);

/// A 2D log-odds occupancy grid. Cell `(cx, cy)` lives at index `cy * width + cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: f64,
    width: usize,
    height: usize,
    origin: Pose2D,
    cells: Vec<f64>,
    params: LogOddsParams,
}

/// Counters returned by [`OccupancyGrid::integrate_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScanUpdate {
    pub free_updates: usize,
    pub hit_updates: usize,
    /// Rays whose endpoint fell outside the grid and were clipped.
    pub clipped_rays: usize,
}

impl OccupancyGrid {
    /// An all-unknown grid (log-odds 0).
    pub fn new(width: usize, height: usize, resolution: f64, origin: Pose2D) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::InvalidGeometry("width and height must be positive"));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(MapError::InvalidGeometry("resolution must be positive"));
        }
        if !origin.is_finite() {
            return Err(MapError::InvalidGeometry("origin must be finite"));
        }
        Ok(Self {
            resolution,
            width,
            height,
            origin,
            cells: vec![0.0; width * height],
            params: LogOddsParams::default(),
        })
    }

    pub fn with_params(mut self, params: LogOddsParams) -> Self {
        self.params = params;
        self.clamp_all();
        self
    }

    fn clamp_all(&mut self) {
        let c = self.params.clamp;
        for l in &mut self.cells {
            *l = l.clamp(-c, c);
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> Pose2D {
        self.origin
    }

    pub fn params(&self) -> &LogOddsParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index(&self, cx: usize, cy: usize) -> usize {
        debug_assert!(cx < self.width && cy < self.height);
        cy * self.width + cx
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        c.0 >= 0 && c.1 >= 0 && (c.0 as usize) < self.width && (c.1 as usize) < self.height
    }

    pub fn checked_index(&self, c: CellCoord) -> Option<usize> {
        self.contains(c).then(|| self.index(c.0 as usize, c.1 as usize))
    }

    /// Cell containing a world point, possibly outside the grid.
    pub fn world_to_cell(&self, x: f64, y: f64) -> CellCoord {
        let (lx, ly) = self.origin.inverse_transform_point(x, y);
        (
            (lx / self.resolution).floor() as i64,
            (ly / self.resolution).floor() as i64,
        )
    }

    pub fn world_to_index(&self, x: f64, y: f64) -> Option<usize> {
        self.checked_index(self.world_to_cell(x, y))
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> (f64, f64) {
        self.origin
            .transform_point((cx as f64 + 0.5) * self.resolution, (cy as f64 + 0.5) * self.resolution)
    }

    pub fn log_odds(&self, idx: usize) -> f64 {
        self.cells[idx]
    }

    pub fn set_log_odds(&mut self, idx: usize, l: f64) {
        let c = self.params.clamp;
        self.cells[idx] = l.clamp(-c, c);
    }

    pub fn set_probability(&mut self, idx: usize, p: f64) {
        self.set_log_odds(idx, logit(p));
    }

    pub fn probability(&self, idx: usize) -> f64 {
        logistic(self.cells[idx])
    }

    pub fn is_occupied(&self, idx: usize) -> bool {
        self.probability(idx) > OCCUPIED_PROBABILITY
    }

    pub fn is_free(&self, idx: usize) -> bool {
        self.probability(idx) < FREE_PROBABILITY
    }

    pub fn mark_occupied(&mut self, idx: usize) {
        self.cells[idx] = self.params.clamp;
    }

    pub fn mark_free(&mut self, idx: usize) {
        self.cells[idx] = -self.params.clamp;
    }

    pub fn occupied_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_occupied(i)).count()
    }

    pub fn log_odds_slice(&self) -> &[f64] {
        &self.cells
    }

    fn add_log_odds(&mut self, idx: usize, delta: f64) {
        let c = self.params.clamp;
        self.cells[idx] = (self.cells[idx] + delta).clamp(-c, c);
    }

    /// Integrates a scan taken from `pose`.
    ///
    /// Each ray is traced with Bresenham's line: traversed cells receive the
    /// miss increment, the endpoint cell the hit increment. Rays without a
    /// return clear space up to `range_max`. Cells outside the grid are
    /// skipped, so rays leaving the map are clipped rather than rejected.
    pub fn integrate_scan(&mut self, pose: &Pose2D, scan: &LaserScan) -> Result<ScanUpdate, MapError> {
        let start = self.world_to_cell(pose.x, pose.y);
        if !self.contains(start) {
            return Err(MapError::OutOfBounds { x: pose.x, y: pose.y });
        }
        let mut stats = ScanUpdate::default();
        for (i, ray) in scan.rays().iter().enumerate() {
            let a = pose.theta + scan.angle(i);
            // a return lies on the obstacle surface, which is often exactly a
            // cell boundary; step just past it so the hit lands in the obstacle
            let r = if ray.hit { ray.range + HIT_NUDGE_M } else { ray.range };
            let (ex, ey) = (pose.x + r * a.cos(), pose.y + r * a.sin());
            let end = self.world_to_cell(ex, ey);
            let mut clipped = false;
            for cell in bresenham(start, end) {
                if cell == end {
                    break;
                }
                match self.checked_index(cell) {
                    Some(idx) => {
                        self.add_log_odds(idx, self.params.miss);
                        stats.free_updates += 1;
                    }
                    None => clipped = true,
                }
            }
            match self.checked_index(end) {
                Some(idx) if ray.hit => {
                    self.add_log_odds(idx, self.params.hit);
                    stats.hit_updates += 1;
                }
                Some(idx) => {
                    self.add_log_odds(idx, self.params.miss);
                    stats.free_updates += 1;
                }
                None => clipped = true,
            }
            if clipped {
                stats.clipped_rays += 1;
            }
        }
        Ok(stats)
    }
}

/// Integer cells on the line from `a` to `b`, both inclusive.
pub fn bresenham(a: CellCoord, b: CellCoord) -> Vec<CellCoord> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}
