use serde::{Deserialize, Serialize};

use super::grid::{MapError, OccupancyGrid};
use crate::geometry::Pose2D;

/// Marker for cells the robot centre must never occupy.
pub const LETHAL: u8 = 255;
/// Highest cost a non-lethal cell can carry.
pub const MAX_COST: u8 = 254;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflationParams {
    pub inflation_radius_m: f64,
    /// Cells whose centre lies within this distance of an occupied cell centre are lethal.
    pub footprint_radius_m: f64,
    /// Exponential decay rate of the cost outside the footprint, 1/m.
    pub cost_scaling: f64,
}

impl Default for InflationParams {
    fn default() -> Self {
        Self {
            inflation_radius_m: 1.0,
            footprint_radius_m: 0.35,
            cost_scaling: 3.0,
        }
    }
}

impl InflationParams {
    /// Cost of a cell whose nearest occupied cell is `distance_m` away.
    pub fn cost_at(&self, distance_m: f64) -> u8 {
        if distance_m <= self.footprint_radius_m + 1e-9 {
            LETHAL
        } else if distance_m <= self.inflation_radius_m + 1e-9 {
            let c = f64::from(MAX_COST) * (-self.cost_scaling * (distance_m - self.footprint_radius_m)).exp();
            c.round().clamp(0.0, f64::from(MAX_COST)) as u8
        } else {
            0
        }
    }
}

/// Traversal costs over the geometry of an occupancy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Costmap {
    resolution: f64,
    width: usize,
    height: usize,
    origin: Pose2D,
    costs: Vec<u8>,
}

impl Costmap {
    pub fn from_costs(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Pose2D,
        costs: Vec<u8>,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 || costs.len() != width * height {
            return Err(MapError::InvalidGeometry("cost buffer does not match width * height"));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(MapError::InvalidGeometry("resolution must be positive"));
        }
        Ok(Self {
            resolution,
            width,
            height,
            origin,
            costs,
        })
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

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn costs(&self) -> &[u8] {
        &self.costs
    }

    pub fn cost(&self, idx: usize) -> u8 {
        self.costs[idx]
    }

    pub fn is_lethal(&self, idx: usize) -> bool {
        self.costs[idx] == LETHAL
    }

    pub fn set_cost(&mut self, idx: usize, cost: u8) {
        self.costs[idx] = cost;
    }

    pub fn index(&self, cx: usize, cy: usize) -> usize {
        cy * self.width + cx
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> (i64, i64) {
        let (lx, ly) = self.origin.inverse_transform_point(x, y);
        (
            (lx / self.resolution).floor() as i64,
            (ly / self.resolution).floor() as i64,
        )
    }

    pub fn world_to_index(&self, x: f64, y: f64) -> Option<usize> {
        let (cx, cy) = self.world_to_cell(x, y);
        (cx >= 0 && cy >= 0 && (cx as usize) < self.width && (cy as usize) < self.height)
            .then(|| self.index(cx as usize, cy as usize))
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> (f64, f64) {
        self.origin
            .transform_point((cx as f64 + 0.5) * self.resolution, (cy as f64 + 0.5) * self.resolution)
    }

    pub fn lethal_count(&self) -> usize {
        self.costs.iter().filter(|&&c| c == LETHAL).count()
    }
}

/// Inflates the occupied cells of `grid` into a costmap with default decay.
pub fn inflate(grid: &OccupancyGrid, inflation_radius_m: f64, footprint_radius_m: f64) -> Costmap {
    inflate_with(
        grid,
        &InflationParams {
            inflation_radius_m,
            footprint_radius_m,
            ..Default::default()
        },
    )
}

/// Inflates occupied cells by stamping a precomputed distance kernel around
/// each of them. Every cell ends up with the exact distance to its nearest
/// occupied cell whenever that distance is within the kernel radius.
pub fn inflate_with(grid: &OccupancyGrid, params: &InflationParams) -> Costmap {
    let (w, h) = (grid.width(), grid.height());
    let res = grid.resolution();
    let reach_m = params.inflation_radius_m.max(params.footprint_radius_m);
    let reach = (reach_m / res).ceil() as i64 + 1;
    let mut kernel = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let d = (dx as f64).hypot(dy as f64) * res;
            if d <= reach_m + 1e-9 {
                kernel.push((dx, dy, d));
            }
        }
    }

    let mut nearest = vec![f64::INFINITY; w * h];
    for idx in (0..grid.len()).filter(|&i| grid.is_occupied(i)) {
        let (cx, cy) = grid.coords(idx);
        for &(dx, dy, d) in &kernel {
            let (x, y) = (cx as i64 + dx, cy as i64 + dy);
            if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                continue;
            }
            let j = y as usize * w + x as usize;
            if d < nearest[j] {
                nearest[j] = d;
            }
        }
    }

    let costs = nearest.iter().map(|&d| params.cost_at(d)).collect();
    Costmap {
        resolution: res,
        width: w,
        height: h,
        origin: grid.origin(),
        costs,
    }
}
