use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use forcenav_ffi::*;

fn wrench(fx: f64, fy: f64, fz: f64) -> ForcenavWrench {
    ForcenavWrench {
        force: ForcenavVec3 { x: fx, y: fy, z: fz },
        torque: ForcenavVec3::default(),
    }
}

fn last_error() -> String {
    let p = forcenav_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_intent() -> *mut ForcenavIntent {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { forcenav_intent_new(ptr::null(), &mut h) }, ForcenavStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(forcenav_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn tick_before_tare_is_reported() {
    let h = new_intent();
    let mut out = ForcenavTwist::default();
    let s = unsafe { forcenav_intent_tick(h, &wrench(0.0, 0.0, -30.0), &wrench(0.0, 0.0, -30.0), 0.0, &mut out) };
    assert_eq!(s, ForcenavStatus::NotTared);
    assert!(last_error().contains("tare"), "{}", last_error());
    unsafe { forcenav_intent_free(h) };
}

#[test]
fn tared_push_moves_forward() {
    let h = new_intent();
    let rest = wrench(1.0, -2.0, -34.0);
    unsafe {
        assert_eq!(
            forcenav_intent_tare(h, ForcenavSide::Left, &rest, 0.0),
            ForcenavStatus::Ok
        );
        assert_eq!(
            forcenav_intent_tare(h, ForcenavSide::Right, &rest, 0.0),
            ForcenavStatus::Ok
        );
    }
    let mut out = ForcenavTwist::default();
    let s = unsafe { forcenav_intent_tick(h, &rest, &rest, 0.01, &mut out) };
    assert_eq!(s, ForcenavStatus::Ok);
    assert_eq!(out, ForcenavTwist::default());

    // sensors face outward, so a forward push reads as -y on the left and +y on the right
    let left = wrench(rest.force.x, rest.force.y - 60.0, rest.force.z);
    let right = wrench(rest.force.x, rest.force.y + 60.0, rest.force.z);
    for i in 0..50 {
        let s = unsafe { forcenav_intent_tick(h, &left, &right, 0.02 + 0.01 * i as f64, &mut out) };
        assert_eq!(s, ForcenavStatus::Ok);
    }
    let expected = 0.25 * (1.0 - 0.98f64.powi(50));
    assert!((out.vx - expected).abs() < 1e-9, "{} vs {}", out.vx, expected);
    assert!(out.vy.abs() < 1e-9);
    assert_eq!(out.omega, 0.0);

    unsafe {
        assert_eq!(forcenav_intent_reset(h), ForcenavStatus::Ok);
        forcenav_intent_free(h);
    }
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = ForcenavTwist::default();
    unsafe {
        assert_eq!(
            forcenav_intent_new(ptr::null(), ptr::null_mut()),
            ForcenavStatus::NullPointer
        );
        assert_eq!(
            forcenav_intent_tick(
                ptr::null_mut(),
                &wrench(0.0, 0.0, 0.0),
                &wrench(0.0, 0.0, 0.0),
                0.0,
                &mut out
            ),
            ForcenavStatus::NullPointer
        );
        assert_eq!(forcenav_intent_reset(ptr::null_mut()), ForcenavStatus::NullPointer);
        forcenav_intent_free(ptr::null_mut());
        forcenav_costmap_free(ptr::null_mut());
        forcenav_path_free(ptr::null_mut());
        assert_eq!(forcenav_path_len(ptr::null()), 0);
        assert!(forcenav_path_cost(ptr::null()).is_nan());
    }
}

#[test]
fn invalid_config_is_rejected() {
    let mut cfg = unsafe {
        let mut c = std::mem::zeroed();
        assert_eq!(forcenav_intent_config_default(&mut c), ForcenavStatus::Ok);
        c
    };
    assert_eq!(cfg.dead_zone_n, 20.0);
    assert_eq!(cfg.saturation_n, 120.0);
    cfg.saturation_n = 10.0;
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { forcenav_intent_new(&cfg, &mut h) },
        ForcenavStatus::InvalidArgument
    );
    assert!(h.is_null());
    let mut out = ForcenavTwist::default();
    let f = ForcenavVec3 {
        x: 50.0,
        y: 0.0,
        z: 0.0,
    };
    assert_eq!(
        unsafe { forcenav_scale_force(&cfg, f, &mut out) },
        ForcenavStatus::InvalidArgument
    );
}

#[test]
fn scale_force_follows_thresholds() {
    let mut out = ForcenavTwist::default();
    let cases = [(10.0, 0.0), (60.0, 0.25), (120.0, 0.5), (400.0, 0.5)];
    for (f, v) in cases {
        let s = unsafe { forcenav_scale_force(ptr::null(), ForcenavVec3 { x: 0.0, y: f, z: 999.0 }, &mut out) };
        assert_eq!(s, ForcenavStatus::Ok);
        assert!((out.vy - v).abs() < 1e-12, "{f} N gave {}", out.vy);
        assert_eq!(out.vx, 0.0);
    }
}

/// 10 x 5 cells of 0.5 m with a wall at column 4 open only at the top row.
fn walled_cells() -> Vec<u8> {
    let (w, h) = (10, 5);
    let mut cells = vec![0u8; w * h];
    for row in 0..h - 1 {
        cells[row * w + 4] = 1;
    }
    cells
}

fn costmap(cells: &[u8]) -> *mut ForcenavCostmap {
    let mut cm = ptr::null_mut();
    let s = unsafe { forcenav_costmap_from_cells(10, 5, 0.5, 0.0, 0.0, cells.as_ptr(), 0.2, 0.4, &mut cm) };
    assert_eq!(s, ForcenavStatus::Ok);
    cm
}

#[test]
fn plan_detours_around_wall() {
    let cells = walled_cells();
    let cm = costmap(&cells);
    let mut lethal = 0u8;
    let mut free = 0u8;
    unsafe {
        assert_eq!(forcenav_costmap_cost(cm, 2.25, 0.25, &mut lethal), ForcenavStatus::Ok);
        assert_eq!(forcenav_costmap_cost(cm, 0.25, 0.25, &mut free), ForcenavStatus::Ok);
        assert_eq!(
            forcenav_costmap_cost(cm, 99.0, 0.25, &mut free),
            ForcenavStatus::OutOfBounds
        );
    }
    assert_eq!(lethal, 255);
    assert_eq!(free, 0);

    let mut path = ptr::null_mut();
    let s = unsafe { forcenav_plan(cm, 0.25, 0.25, 4.75, 0.25, &mut path) };
    assert_eq!(s, ForcenavStatus::Ok);
    let n = unsafe { forcenav_path_len(path) };
    assert!(n >= 2);
    let mut ys = Vec::new();
    for i in 0..n {
        let (mut x, mut y) = (0.0, 0.0);
        assert_eq!(
            unsafe { forcenav_path_point(path, i, &mut x, &mut y) },
            ForcenavStatus::Ok
        );
        let mut c = 0u8;
        assert_eq!(unsafe { forcenav_costmap_cost(cm, x, y, &mut c) }, ForcenavStatus::Ok);
        assert_ne!(c, 255, "waypoint ({x}, {y}) is lethal");
        ys.push(y);
    }
    assert!(ys.iter().any(|&y| y > 2.0), "path must pass through the gap: {ys:?}");
    assert!(unsafe { forcenav_path_cost(path) } > 9.0);
    let (mut x, mut y) = (0.0, 0.0);
    assert_eq!(
        unsafe { forcenav_path_point(path, n, &mut x, &mut y) },
        ForcenavStatus::OutOfBounds
    );
    unsafe {
        forcenav_path_free(path);
        forcenav_costmap_free(cm);
    }
}

#[test]
fn sealed_wall_has_no_path() {
    let mut cells = walled_cells();
    cells[4 * 10 + 4] = 1;
    let cm = costmap(&cells);
    let mut path = ptr::null_mut();
    let s = unsafe { forcenav_plan(cm, 0.25, 0.25, 4.75, 0.25, &mut path) };
    assert_eq!(s, ForcenavStatus::NoPath);
    assert!(path.is_null());
    assert!(!last_error().is_empty());
    unsafe { forcenav_costmap_free(cm) };
}

#[test]
fn costmap_load_reports_missing_file_and_loads_map() {
    let mut cm = ptr::null_mut();
    let missing = CString::new("/nonexistent/map.cgrid").unwrap();
    let s = unsafe { forcenav_costmap_load(missing.as_ptr(), 0.3, 1.0, &mut cm) };
    assert_eq!(s, ForcenavStatus::Io);

    let map = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/open_hall.cgrid");
    let path = CString::new(map.to_str().unwrap()).unwrap();
    let s = unsafe { forcenav_costmap_load(path.as_ptr(), 0.3, 1.0, &mut cm) };
    assert_eq!(s, ForcenavStatus::Ok, "{}", last_error());
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { forcenav_costmap_load(path.as_ptr(), 1.0, 0.5, &mut bad) },
        ForcenavStatus::InvalidArgument
    );
    unsafe { forcenav_costmap_free(cm) };
}

#[test]
fn filter_scan_clips_and_decimates() {
    let mut cfg = unsafe {
        let mut c = std::mem::zeroed();
        assert_eq!(forcenav_filter_config_default(&mut c), ForcenavStatus::Ok);
        c
    };
    cfg.decimation = 2;
    let ranges = [1.0, 0.01, 2.0, 2.0, 3.0, 3.0];
    let hits = [true; 6];
    let mut out_r = [0.0; 3];
    let mut out_h = [false; 3];
    let mut n = 0;
    let s = unsafe {
        forcenav_filter_scan(
            &cfg,
            0.0,
            0.1,
            10.0,
            ranges.as_ptr(),
            hits.as_ptr(),
            6,
            out_r.as_mut_ptr(),
            out_h.as_mut_ptr(),
            3,
            &mut n,
        )
    };
    assert_eq!(s, ForcenavStatus::Ok, "{}", last_error());
    assert_eq!(n, 3);
    assert_eq!(out_r, [1.0, 2.0, 3.0]);
    assert_eq!(out_h, [true; 3]);

    cfg.decimation = 1;
    let s = unsafe {
        forcenav_filter_scan(
            &cfg,
            0.0,
            0.1,
            10.0,
            ranges.as_ptr(),
            hits.as_ptr(),
            6,
            out_r.as_mut_ptr(),
            out_h.as_mut_ptr(),
            3,
            &mut n,
        )
    };
    assert_eq!(s, ForcenavStatus::BufferTooSmall);
    assert_eq!(n, 6);
}

fn header() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/forcenav.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).expect("header is generated by the build script");
    for sym in [
        "forcenav_version",
        "forcenav_last_error",
        "forcenav_intent_new",
        "forcenav_intent_tare",
        "forcenav_intent_tick",
        "forcenav_intent_free",
        "forcenav_scale_force",
        "forcenav_costmap_load",
        "forcenav_costmap_from_cells",
        "forcenav_costmap_cost",
        "forcenav_plan",
        "forcenav_path_point",
        "forcenav_filter_scan",
        "typedef struct ForcenavIntent ForcenavIntent",
        "FORCENAV_STATUS_NOT_TARED = 3",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::env::var("CC").or_else(|_| which("cc")) else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "forcenav.h"
int main(void) {
    ForcenavIntent *h = NULL;
    ForcenavStatus s = forcenav_intent_new(NULL, &h);
    ForcenavTwist t;
    ForcenavWrench w = {{0, 0, 0}, {0, 0, 0}};
    s = forcenav_intent_tick(h, &w, &w, 0.0, &t);
    forcenav_intent_free(h);
    return s == FORCENAV_STATUS_OK ? 0 : 1;
}
"#,
    )
    .unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which(name: &str) -> Result<String, ()> {
    let ok = Command::new(name)
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success());
    if ok {
        Ok(name.to_string())
    } else {
        Err(())
    }
}
