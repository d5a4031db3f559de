use serde::{Deserialize, Serialize};

use crate::geometry::{LaserScan, Ray};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanFilterConfig {
    /// Returns closer than this are treated as sensor dust.
    pub min_range_m: f64,
    /// Keep every k-th ray.
    pub decimation: usize,
    /// Rays inspected on each side when looking for an isolated return.
    pub outlier_window: usize,
    pub outlier_jump_m: f64,
}

impl Default for ScanFilterConfig {
    fn default() -> Self {
        Self {
            min_range_m: 0.1,
            decimation: 2,
            outlier_window: 2,
            outlier_jump_m: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scan filter config: {0}")]
pub struct FilterConfigError(&'static str);

impl ScanFilterConfig {
    pub fn validate(&self) -> Result<(), FilterConfigError> {
        if !(self.min_range_m >= 0.0 && self.min_range_m.is_finite()) {
            return Err(FilterConfigError("min_range_m must be >= 0"));
        }
        if self.decimation < 1 {
            return Err(FilterConfigError("decimation must be >= 1"));
        }
        if self.outlier_window < 1 {
            return Err(FilterConfigError("outlier_window must be >= 1"));
        }
        if self.outlier_jump_m.is_nan() || self.outlier_jump_m <= 0.0 {
            return Err(FilterConfigError("outlier_jump_m must be positive"));
        }
        Ok(())
    }
}

/// Drops returns below `min_range_m`.
pub fn clip_min_range(rays: &mut [Ray], min_range_m: f64, range_max: f64) {
    for ray in rays.iter_mut().filter(|r| r.hit && r.range < min_range_m) {
        *ray = Ray {
            range: range_max,
            hit: false,
        };
    }
}

/// Drops returns that are isolated from their neighbourhood.
///
/// A return is isolated when every return within `window` rays on its left
/// and every return within `window` rays on its right differs from it by more
/// than `jump`, and both sides hold at least one return. Decisions are made
/// against the unmodified input, so the stage is idempotent.
pub fn remove_outliers(rays: &mut [Ray], window: usize, jump: f64, range_max: f64) {
    let n = rays.len();
    let isolated: Vec<bool> = (0..n)
        .map(|i| {
            if !rays[i].hit {
                return false;
            }
            let r = rays[i].range;
            let side_isolated = |range: std::ops::Range<usize>| {
                let mut seen = false;
                for j in range {
                    if rays[j].hit {
                        seen = true;
                        if (rays[j].range - r).abs() <= jump {
                            return false;
                        }
                    }
                }
                seen
            };
            side_isolated(i.saturating_sub(window)..i) && side_isolated(i + 1..(i + 1 + window).min(n))
        })
        .collect();
    for (ray, iso) in rays.iter_mut().zip(isolated) {
        if iso {
            *ray = Ray {
                range: range_max,
                hit: false,
            };
        }
    }
}

/// Runs min-range clipping, outlier removal and decimation, in that order.
pub fn filter_scan(scan: &LaserScan, cfg: &ScanFilterConfig) -> LaserScan {
    let mut rays = scan.rays().to_vec();
    clip_min_range(&mut rays, cfg.min_range_m, scan.range_max);
    remove_outliers(&mut rays, cfg.outlier_window, cfg.outlier_jump_m, scan.range_max);
    let k = cfg.decimation.max(1);
    let kept: Vec<Ray> = rays.into_iter().step_by(k).collect();
    scan.with_rays(kept, scan.angle_increment * k as f64)
}
