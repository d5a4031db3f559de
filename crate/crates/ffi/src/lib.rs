//! C ABI over the `forcenav` library.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `*_free` function. Every fallible call returns a [`ForcenavStatus`]; on
//! failure [`forcenav_last_error`] describes what went wrong on the calling
//! thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use forcenav::intent::{scale_force, ForceIntent, IntentConfig, IntentError};
use forcenav::nav::{plan_global, DijkstraConfig, PlanError, PlannedPath};
use forcenav::perception::{
    filter_scan, inflate_with, load_grid, Costmap, InflationParams, OccupancyGrid, ScanFilterConfig,
};
use forcenav::{LaserScan, Pose2D, Ray, Side, Vec3Force, Wrench};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcenavStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotTared = 3,
    NoPath = 4,
    OutOfBounds = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcenavSide {
    Left = 0,
    Right = 1,
}

impl From<ForcenavSide> for Side {
    fn from(s: ForcenavSide) -> Self {
        match s {
            ForcenavSide::Left => Side::Left,
            ForcenavSide::Right => Side::Right,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ForcenavVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ForcenavWrench {
    pub force: ForcenavVec3,
    pub torque: ForcenavVec3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ForcenavTwist {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcenavIntentConfig {
    pub dead_zone_n: f64,
    pub saturation_n: f64,
    pub max_speed_mps: f64,
    pub smooth_old: f64,
    pub smooth_new: f64,
    pub rate_hz: f64,
    pub continuous_deadzone: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcenavFilterConfig {
    pub min_range_m: f64,
    pub decimation: usize,
    pub outlier_window: usize,
    pub outlier_jump_m: f64,
}

/// Dual-shoulder force intent pipeline.
pub struct ForcenavIntent(ForceIntent);

/// Inflated costmap ready for planning.
pub struct ForcenavCostmap(Costmap);

/// Waypoints returned by [`forcenav_plan`].
pub struct ForcenavPath(PlannedPath);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: ForcenavStatus, msg: impl Into<String>) -> ForcenavStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into [`ForcenavStatus::Panic`].
fn guard(f: impl FnOnce() -> ForcenavStatus) -> ForcenavStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(ForcenavStatus::Panic, "internal panic"))
}

impl From<ForcenavVec3> for Vec3Force {
    fn from(v: ForcenavVec3) -> Self {
        Vec3Force::new(v.x, v.y, v.z)
    }
}

impl From<&ForcenavWrench> for Wrench {
    fn from(w: &ForcenavWrench) -> Self {
        Wrench::new(w.force.into(), w.torque.into())
    }
}

impl From<ForcenavIntentConfig> for IntentConfig {
    fn from(c: ForcenavIntentConfig) -> Self {
        IntentConfig {
            dead_zone_n: c.dead_zone_n,
            saturation_n: c.saturation_n,
            max_speed_mps: c.max_speed_mps,
            smooth_old: c.smooth_old,
            smooth_new: c.smooth_new,
            rate_hz: c.rate_hz,
            continuous_deadzone: c.continuous_deadzone,
        }
    }
}

fn write_twist(out: *mut ForcenavTwist, t: forcenav::Twist2D) {
    // SAFETY: callers check `out` for null before calling.
    unsafe {
        *out = ForcenavTwist {
            vx: t.vx,
            vy: t.vy,
            omega: t.omega,
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn forcenav_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn forcenav_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn forcenav_intent_config_default(out: *mut ForcenavIntentConfig) -> ForcenavStatus {
    guard(|| {
        if out.is_null() {
            return fail(ForcenavStatus::NullPointer, "out is NULL");
        }
        let c = IntentConfig::default();
        *out = ForcenavIntentConfig {
            dead_zone_n: c.dead_zone_n,
            saturation_n: c.saturation_n,
            max_speed_mps: c.max_speed_mps,
            smooth_old: c.smooth_old,
            smooth_new: c.smooth_new,
            rate_hz: c.rate_hz,
            continuous_deadzone: c.continuous_deadzone,
        };
        ForcenavStatus::Ok
    })
}

/// Creates a pipeline with the default shoulder frames. `cfg` may be NULL
/// for the default configuration.
#[no_mangle]
pub unsafe extern "C" fn forcenav_intent_new(
    cfg: *const ForcenavIntentConfig,
    out: *mut *mut ForcenavIntent,
) -> ForcenavStatus {
    guard(|| {
        if out.is_null() {
            return fail(ForcenavStatus::NullPointer, "out is NULL");
        }
        let cfg = if cfg.is_null() {
            IntentConfig::default()
        } else {
            (*cfg).into()
        };
        match ForceIntent::with_default_frames(cfg) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(ForcenavIntent(p)));
                ForcenavStatus::Ok
            }
            Err(e) => fail(ForcenavStatus::InvalidArgument, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn forcenav_intent_free(handle: *mut ForcenavIntent) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Stores `raw` as the zero reading of one shoulder.
#[no_mangle]
pub unsafe extern "C" fn forcenav_intent_tare(
    handle: *mut ForcenavIntent,
    side: ForcenavSide,
    raw: *const ForcenavWrench,
    timestamp: f64,
) -> ForcenavStatus {
    guard(|| {
        if handle.is_null() || raw.is_null() {
            return fail(ForcenavStatus::NullPointer, "handle or raw is NULL");
        }
        let w = Wrench::from(&*raw);
        if !w.is_finite() {
            return fail(ForcenavStatus::InvalidArgument, "non-finite wrench");
        }
        (*handle).0.tare(side.into(), w, timestamp);
        ForcenavStatus::Ok
    })
}

/// One pipeline tick from raw sensor-frame readings; writes the smoothed
/// base velocity command to `out`.
#[no_mangle]
pub unsafe extern "C" fn forcenav_intent_tick(
    handle: *mut ForcenavIntent,
    left: *const ForcenavWrench,
    right: *const ForcenavWrench,
    timestamp: f64,
    out: *mut ForcenavTwist,
) -> ForcenavStatus {
    guard(|| {
        if handle.is_null() || left.is_null() || right.is_null() || out.is_null() {
            return fail(ForcenavStatus::NullPointer, "NULL argument");
        }
        match (*handle).0.tick(Wrench::from(&*left), Wrench::from(&*right), timestamp) {
            Ok(o) => {
                write_twist(out, o.command);
                ForcenavStatus::Ok
            }
            Err(e @ IntentError::NotTared(_)) => fail(ForcenavStatus::NotTared, e.to_string()),
            Err(e) => fail(ForcenavStatus::InvalidArgument, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn forcenav_intent_reset(handle: *mut ForcenavIntent) -> ForcenavStatus {
    guard(|| {
        if handle.is_null() {
            return fail(ForcenavStatus::NullPointer, "handle is NULL");
        }
        (*handle).0.reset();
        ForcenavStatus::Ok
    })
}

/// Stateless force-to-speed mapping of a base-frame force.
#[no_mangle]
pub unsafe extern "C" fn forcenav_scale_force(
    cfg: *const ForcenavIntentConfig,
    force: ForcenavVec3,
    out: *mut ForcenavTwist,
) -> ForcenavStatus {
    guard(|| {
        if out.is_null() {
            return fail(ForcenavStatus::NullPointer, "out is NULL");
        }
        let cfg: IntentConfig = if cfg.is_null() {
            IntentConfig::default()
        } else {
            (*cfg).into()
        };
        if let Err(e) = cfg.validate() {
            return fail(ForcenavStatus::InvalidArgument, e.to_string());
        }
        write_twist(out, scale_force(&force.into(), &cfg));
        ForcenavStatus::Ok
    })
}

fn inflation(footprint_m: f64, inflation_m: f64) -> Result<InflationParams, ForcenavStatus> {
    if !(footprint_m >= 0.0 && inflation_m >= footprint_m && inflation_m.is_finite()) {
        return Err(fail(
            ForcenavStatus::InvalidArgument,
            "need 0 <= footprint <= inflation radius",
        ));
    }
    Ok(InflationParams {
        footprint_radius_m: footprint_m,
        inflation_radius_m: inflation_m,
        ..Default::default()
    })
}

/// Loads a grid file and inflates it.
#[no_mangle]
pub unsafe extern "C" fn forcenav_costmap_load(
    path: *const c_char,
    footprint_m: f64,
    inflation_m: f64,
    out: *mut *mut ForcenavCostmap,
) -> ForcenavStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(ForcenavStatus::NullPointer, "path or out is NULL");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(ForcenavStatus::InvalidArgument, "path is not UTF-8");
        };
        let params = match inflation(footprint_m, inflation_m) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let p = Path::new(path);
        if !p.is_file() {
            return fail(ForcenavStatus::Io, format!("cannot read {path}"));
        }
        match load_grid(p) {
            Ok(grid) => {
                *out = Box::into_raw(Box::new(ForcenavCostmap(inflate_with(&grid, &params))));
                ForcenavStatus::Ok
            }
            Err(e) => fail(ForcenavStatus::Parse, format!("{path}: {e}")),
        }
    })
}

/// Builds a costmap from a row-major cell array (row 0 at the bottom):
/// 0 free, 1 occupied, anything else unknown.
#[no_mangle]
pub unsafe extern "C" fn forcenav_costmap_from_cells(
    width: usize,
    height: usize,
    resolution: f64,
    origin_x: f64,
    origin_y: f64,
    cells: *const u8,
    footprint_m: f64,
    inflation_m: f64,
    out: *mut *mut ForcenavCostmap,
) -> ForcenavStatus {
    guard(|| {
        if cells.is_null() || out.is_null() {
            return fail(ForcenavStatus::NullPointer, "cells or out is NULL");
        }
        let params = match inflation(footprint_m, inflation_m) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let mut grid = match OccupancyGrid::new(width, height, resolution, Pose2D::new(origin_x, origin_y, 0.0)) {
            Ok(g) => g,
            Err(e) => return fail(ForcenavStatus::InvalidArgument, e.to_string()),
        };
        let cells = std::slice::from_raw_parts(cells, width * height);
        for (i, c) in cells.iter().enumerate() {
            match c {
                0 => grid.mark_free(i),
                1 => grid.mark_occupied(i),
                _ => {}
            }
        }
        *out = Box::into_raw(Box::new(ForcenavCostmap(inflate_with(&grid, &params))));
        ForcenavStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn forcenav_costmap_free(handle: *mut ForcenavCostmap) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Cost (0..=254, 255 lethal) of the cell containing `(x, y)`.
#[no_mangle]
pub unsafe extern "C" fn forcenav_costmap_cost(
    handle: *const ForcenavCostmap,
    x: f64,
    y: f64,
    out: *mut u8,
) -> ForcenavStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            return fail(ForcenavStatus::NullPointer, "handle or out is NULL");
        }
        let c = &(*handle).0;
        match c.world_to_index(x, y) {
            Some(i) => {
                *out = c.cost(i);
                ForcenavStatus::Ok
            }
            None => fail(
                ForcenavStatus::OutOfBounds,
                format!("({x}, {y}) is outside the costmap"),
            ),
        }
    })
}

/// Plans from `(sx, sy)` to `(gx, gy)` with the default Dijkstra settings.
#[no_mangle]
pub unsafe extern "C" fn forcenav_plan(
    handle: *const ForcenavCostmap,
    sx: f64,
    sy: f64,
    gx: f64,
    gy: f64,
    out: *mut *mut ForcenavPath,
) -> ForcenavStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            return fail(ForcenavStatus::NullPointer, "handle or out is NULL");
        }
        let start = Pose2D::new(sx, sy, 0.0);
        let goal = Pose2D::new(gx, gy, 0.0);
        match plan_global(&(*handle).0, &start, &goal, &DijkstraConfig::default()) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(ForcenavPath(p)));
                ForcenavStatus::Ok
            }
            Err(e @ PlanError::OutOfBounds { .. }) => fail(ForcenavStatus::OutOfBounds, e.to_string()),
            Err(e) => fail(ForcenavStatus::NoPath, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn forcenav_path_free(path: *mut ForcenavPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Number of waypoints; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn forcenav_path_len(path: *const ForcenavPath) -> usize {
    if path.is_null() {
        0
    } else {
        (*path).0.waypoints().len()
    }
}

/// Accumulated edge cost in cell units.
#[no_mangle]
pub unsafe extern "C" fn forcenav_path_cost(path: *const ForcenavPath) -> f64 {
    if path.is_null() {
        f64::NAN
    } else {
        (*path).0.total_cost()
    }
}

#[no_mangle]
pub unsafe extern "C" fn forcenav_path_point(
    path: *const ForcenavPath,
    index: usize,
    x: *mut f64,
    y: *mut f64,
) -> ForcenavStatus {
    guard(|| {
        if path.is_null() || x.is_null() || y.is_null() {
            return fail(ForcenavStatus::NullPointer, "NULL argument");
        }
        match (*path).0.waypoints().get(index) {
            Some(w) => {
                *x = w.x;
                *y = w.y;
                ForcenavStatus::Ok
            }
            None => fail(ForcenavStatus::OutOfBounds, format!("waypoint {index} does not exist")),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn forcenav_filter_config_default(out: *mut ForcenavFilterConfig) -> ForcenavStatus {
    guard(|| {
        if out.is_null() {
            return fail(ForcenavStatus::NullPointer, "out is NULL");
        }
        let c = ScanFilterConfig::default();
        *out = ForcenavFilterConfig {
            min_range_m: c.min_range_m,
            decimation: c.decimation,
            outlier_window: c.outlier_window,
            outlier_jump_m: c.outlier_jump_m,
        };
        ForcenavStatus::Ok
    })
}

/// Filters a scan of `n` rays. Rays with `hits[i] == false` are no-returns.
/// Writes up to `capacity` rays to `out_ranges`/`out_hits` and the filtered
/// count to `out_len`; returns `BUFFER_TOO_SMALL` (with `out_len` set) if
/// `capacity` is too small.
#[no_mangle]
pub unsafe extern "C" fn forcenav_filter_scan(
    cfg: *const ForcenavFilterConfig,
    angle_min: f64,
    angle_increment: f64,
    range_max: f64,
    ranges: *const f64,
    hits: *const bool,
    n: usize,
    out_ranges: *mut f64,
    out_hits: *mut bool,
    capacity: usize,
    out_len: *mut usize,
) -> ForcenavStatus {
    guard(|| {
        if ranges.is_null() || hits.is_null() || out_ranges.is_null() || out_hits.is_null() || out_len.is_null() {
            return fail(ForcenavStatus::NullPointer, "NULL argument");
        }
        let cfg = if cfg.is_null() {
            ScanFilterConfig::default()
        } else {
            let c = &*cfg;
            ScanFilterConfig {
                min_range_m: c.min_range_m,
                decimation: c.decimation,
                outlier_window: c.outlier_window,
                outlier_jump_m: c.outlier_jump_m,
            }
        };
        if let Err(e) = cfg.validate() {
            return fail(ForcenavStatus::InvalidArgument, e.to_string());
        }
        let ranges = std::slice::from_raw_parts(ranges, n);
        let hits = std::slice::from_raw_parts(hits, n);
        let rays = ranges
            .iter()
            .zip(hits)
            .map(|(&range, &hit)| Ray { range, hit })
            .collect();
        let scan = match LaserScan::from_rays(angle_min, angle_increment, range_max, 0.0, rays) {
            Ok(s) => s,
            Err(e) => return fail(ForcenavStatus::InvalidArgument, e.to_string()),
        };
        let filtered = filter_scan(&scan, &cfg);
        *out_len = filtered.len();
        if filtered.len() > capacity {
            return fail(
                ForcenavStatus::BufferTooSmall,
                format!("need room for {} rays, got {capacity}", filtered.len()),
            );
        }
        for (i, r) in filtered.rays().iter().enumerate() {
            *out_ranges.add(i) = r.range;
            *out_hits.add(i) = r.hit;
        }
        ForcenavStatus::Ok
    })
}
