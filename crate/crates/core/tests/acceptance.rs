//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p forcenav --test acceptance`.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use forcenav::intent::{scale_force, ForceIntent, IntentConfig};
use forcenav::nav::{plan_global, DijkstraConfig, NavStatus, PlanError};
use forcenav::perception::{filter_scan, Costmap, OccupancyGrid, ScanFilterConfig};
use forcenav::runtime::{Executor, Scenario, TelemetryWriter};
use forcenav::sim::{simulate_fts, FtsConfig};
use forcenav::{LaserScan, Pose2D, Ray, ShoulderFrame, Side, Twist2D, Vec3Force, Wrench};
use rand::Rng;

use common::{brute_filter, oscillation_amplitude, random_costs, random_scan, rng, ucs_cost};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn force_mapping_branches() -> Outcome {
    let t0 = Instant::now();
    let cfg = IntentConfig::default();
    let speed = |fx: f64, fy: f64| scale_force(&Vec3Force::new(fx, fy, 0.0), &cfg);
    let close = |t: Twist2D, vx: f64, vy: f64| (t.vx - vx).abs() < 1e-9 && (t.vy - vy).abs() < 1e-9 && t.omega == 0.0;

    let linear = speed(60.0, 0.0);
    let saturated = speed(240.0, 0.0);
    let dead = speed(10.0, 10.0);
    // the linear formula F·v_max/F_sat and the saturated one v_max·F/|F| at 120 N
    let linear_at_boundary = 120.0 * 0.5 / 120.0;
    let saturated_at_boundary = 0.5 * 120.0 / 120.0;
    let boundary = speed(120.0, 0.0);
    let below = speed(120.0 - 1e-9, 0.0);
    let ok = close(linear, 0.25, 0.0)
        && close(saturated, 0.5, 0.0)
        && close(dead, 0.0, 0.0)
        && close(boundary, linear_at_boundary, 0.0)
        && close(boundary, saturated_at_boundary, 0.0)
        && close(below, 0.5, 0.0);
    let elapsed = t0.elapsed().as_secs_f64();
    check(
        ok && elapsed < 1.0,
        format!(
            "60 N -> {:.12}, 240 N -> {:.12}, (10,10) N -> {:.1}, 120 N -> {:.12}, {:.3} ms",
            linear.vx,
            saturated.vx,
            dead.linear_speed(),
            boundary.vx,
            elapsed * 1e3
        ),
    )
}

/// Raw readings for a base-frame push shared equally by both shoulders.
fn shoulder_readings(push_x: f64) -> [Wrench; 2] {
    let fts = FtsConfig::default();
    [Side::Left, Side::Right].map(|side| {
        let frame = ShoulderFrame::default_for(side);
        fts.static_gravity_wrench(&frame) + frame.to_sensor(&Wrench::from_force(Vec3Force::new(push_x, 0.0, 0.0)))
    })
}

fn smoothing_dynamics() -> Outcome {
    let mut p = ForceIntent::with_default_frames(IntentConfig::default()).map_err(|e| e.to_string())?;
    let [rest_l, rest_r] = shoulder_readings(0.0);
    p.tare(Side::Left, rest_l, 0.0);
    p.tare(Side::Right, rest_r, 0.0);
    let [push_l, push_r] = shoulder_readings(120.0);
    let mut t = 0.0;
    let mut tick = |p: &mut ForceIntent, l, r| {
        t += 0.01;
        p.tick(l, r, t).map(|o| o.command.vx).map_err(|e| e.to_string())
    };

    let mut v = 0.0;
    for _ in 0..50 {
        v = tick(&mut p, push_l, push_r)?;
    }
    let v50 = v;
    let oracle_50 = 0.5 * (1.0 - 0.98f64.powi(50));
    let step_ok = (v50 - oracle_50).abs() < 1e-6;

    for _ in 50..2000 {
        v = tick(&mut p, push_l, push_r)?;
    }
    let released_from = v;
    let mut below_at = None;
    let mut decay_ok = true;
    for k in 1..=300 {
        v = tick(&mut p, rest_l, rest_r)?;
        decay_ok &= (v - released_from * 0.98f64.powi(k)).abs() < 1e-9;
        if below_at.is_none() && v < 0.005 {
            below_at = Some(k);
        }
    }
    let below = below_at.map_or_else(|| "never".to_string(), |k| k.to_string());
    check(
        step_ok && decay_ok && below_at.is_some(),
        format!(
            "after 50 ticks {v50:.9} (oracle {oracle_50:.9}); released at {released_from:.6}, \
             below 0.005 m/s after {below} ticks, {v:.6} after 300, per-tick decay exact: {decay_ok}"
        ),
    )
}

fn taring() -> Outcome {
    let fts = FtsConfig::default();
    let mut r = rng(6);
    let mut p = ForceIntent::with_default_frames(IntentConfig::default()).map_err(|e| e.to_string())?;
    for side in [Side::Left, Side::Right] {
        p.tare(side, fts.static_gravity_wrench(&ShoulderFrame::default_for(side)), 0.0);
    }
    let n = 1000;
    let mut raw_sum = [[0.0; 3]; 2];
    let mut comp_sum = [[0.0; 3]; 2];
    for k in 0..n {
        for side in [Side::Left, Side::Right] {
            let frame = ShoulderFrame::default_for(side);
            let raw = simulate_fts(&fts, &frame, Vec3Force::ZERO, (0.0, 0.0), k as f64 * 0.01, &mut r);
            let comp = p.compensate(side, &raw).map_err(|e| e.to_string())?;
            for (a, (rv, cv)) in raw.force.to_array().iter().zip(comp.force.to_array()).enumerate() {
                raw_sum[side.index()][a] += rv;
                comp_sum[side.index()][a] += cv;
            }
        }
    }
    let bound = 0.1 * fts.noise_sigma_n;
    let worst = comp_sum
        .iter()
        .flatten()
        .map(|s| (s / n as f64).abs())
        .fold(0.0, f64::max);
    let raw_worst = raw_sum
        .iter()
        .flatten()
        .map(|s| (s / n as f64).abs())
        .fold(0.0, f64::max);
    check(
        worst < bound,
        format!("largest compensated axis mean {worst:.4} N (bound {bound:.3} N); raw {raw_worst:.2} N"),
    )
}

/// Forward speed command of a 30 s guided run with a steady 60 N push and
/// vibration coupling.
fn vibration_run(smooth_new: f64) -> Result<Vec<f64>, String> {
    let text = format!(
        r#"
name = "vibration"
map = "unused.cgrid"
mode = "guided"
duration_s = 30
seed = 21
start = {{ x = 1.0, y = 2.0, theta = 0.0 }}

[sim.fts]
vibration_gain = 2.0
vibration_freq_hz = 3.0

[intent]
smooth_old = {old}
smooth_new = {smooth_new}

[[events]]
t = 0.5
kind = "apply_push"
side = "both"
force = [60.0, 0.0, 0.0]
duration_s = 29.5
"#,
        old = 1.0 - smooth_new
    );
    let scenario = Scenario::parse(&text, "vibration").map_err(|e| e.to_string())?;
    let mut grid = OccupancyGrid::new(400, 80, 0.05, Pose2D::IDENTITY).map_err(|e| e.to_string())?;
    for i in 0..grid.len() {
        grid.mark_free(i);
    }
    let mut exec = Executor::new(scenario, grid).map_err(|e| e.to_string())?;
    let mut speeds = Vec::with_capacity(3000);
    while exec.ticks() < 3000 {
        speeds.push(exec.step().ok_or("paused")?.command.vx);
    }
    Ok(speeds)
}

fn anti_feedback() -> Outcome {
    let smoothed = vibration_run(0.02)?;
    let raw = vibration_run(1.0)?;
    // skip the first 5 s of spin-up
    let a_smooth = oscillation_amplitude(&smoothed[500..]);
    let a_raw = oscillation_amplitude(&raw[500..]);
    let early = oscillation_amplitude(&smoothed[500..1500]);
    let late = oscillation_amplitude(&smoothed[2000..]);
    let mean = smoothed[500..].iter().sum::<f64>() / 2500.0;
    check(
        a_smooth * 5.0 <= a_raw && late <= early * 1.1 && (mean - 0.25).abs() < 0.01,
        format!(
            "amplitude smoothed {a_smooth:.5} vs unsmoothed {a_raw:.5} m/s (ratio {:.1}); smoothed 5-15 s {early:.5}, 20-30 s {late:.5}",
            a_raw / a_smooth
        ),
    )
}

fn dijkstra_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(2024);
    let (mut agree, mut reachable) = (0, 0);
    for case in 0..50 {
        let costs = random_costs(&mut r, 20, 20, 0.2);
        let map = Costmap::from_costs(20, 20, 1.0, Pose2D::IDENTITY, costs.clone()).map_err(|e| e.to_string())?;
        let free: Vec<usize> = (0..400).filter(|&i| costs[i] != 255).collect();
        let s = free[r.random_range(0..free.len())];
        let g = free[r.random_range(0..free.len())];
        let at = |i: usize| Pose2D::new((i % 20) as f64 + 0.5, (i / 20) as f64 + 0.5, 0.0);
        let expected = ucs_cost(20, 20, &costs, s, g, 10.0);
        let same = match (plan_global(&map, &at(s), &at(g), &DijkstraConfig::default()), expected) {
            (Ok(p), Some(c)) => {
                reachable += 1;
                p.total_cost() == c as f64 / 2f64.powi(36)
            }
            (Err(PlanError::NoPathFound), None) => true,
            _ => false,
        };
        if !same {
            return Err(format!("grid {case} disagrees with the oracle"));
        }
        agree += 1;
    }
    let elapsed = t0.elapsed().as_secs_f64();
    check(
        elapsed < 10.0,
        format!("{agree}/50 grids agree exactly ({reachable} with a path), {elapsed:.2} s"),
    )
}

fn corridor_navigation() -> Outcome {
    let mut exec = Executor::from_path(&scenario_path("corridor_trolley.toml")).map_err(|e| e.to_string())?;
    let report = exec.run::<Vec<u8>>(None).map_err(|e| e.to_string())?;
    let goal = report.goals.first().ok_or("no goal recorded")?;
    let pose = report.final_pose;
    let dxy = pose.distance_to(&goal.goal);
    let dth = forcenav::geometry::normalize_angle(pose.theta - goal.goal.theta).abs();
    let obstacles = exec.world().obstacles();
    let path = exec.path().ok_or("path dropped")?;
    // the trolley must actually sit across the planned path
    let on_path = obstacles.iter().any(|o| {
        path.waypoints().windows(2).any(|w| {
            common::point_segment_distance((o.x, o.y), (w[0].x, w[0].y), (w[1].x, w[1].y))
                < o.radius + exec.scenario().sim.footprint_radius_m
        })
    });
    check(
        goal.status == NavStatus::Reached
            && dxy <= 0.15
            && dth <= 0.2
            && report.lethal_ticks == 0
            && report.collisions == 0
            && report.plan_count == 1
            && on_path,
        format!(
            "{} at {:.1} s, error {dxy:.3} m / {dth:.3} rad, lethal ticks {}, collisions {}, plans {}, obstacle on path {on_path}",
            goal.status.as_str(),
            goal.time_s,
            report.lethal_ticks,
            report.collisions,
            report.plan_count
        ),
    )
}

/// Narrowest opening between corridor and room, from the map itself.
fn door_width(grid: &OccupancyGrid) -> f64 {
    let mut narrowest = usize::MAX;
    for cy in 0..grid.height() {
        let mut run = 0;
        let mut longest = 0;
        for cx in 0..grid.width() {
            if grid.is_occupied(grid.index(cx, cy)) {
                run = 0;
            } else {
                run += 1;
                longest = longest.max(run);
            }
        }
        if longest > 0 {
            narrowest = narrowest.min(longest);
        }
    }
    narrowest as f64 * grid.resolution()
}

fn narrow_door() -> Outcome {
    let mut exec = Executor::from_path(&scenario_path("narrow_door.toml")).map_err(|e| e.to_string())?;
    let door = door_width(exec.map());
    let body = 2.0 * exec.scenario().sim.footprint_radius_m;
    let report = exec.run::<Vec<u8>>(None).map_err(|e| e.to_string())?;
    let status = report.goals.first().map(|g| g.status);
    check(
        body > door && status == Some(NavStatus::Stuck) && report.collisions == 0,
        format!(
            "footprint {body:.2} m vs door {door:.2} m: {} after {:.1} s, collisions {}",
            status.map_or("none", |s| s.as_str()),
            report.time_s,
            report.collisions
        ),
    )
}

fn filter_suite() -> Outcome {
    let mut r = rng(99);
    let mut dust = 0;
    let mut removed_spikes = 0;
    for case in 0..1000 {
        let n = r.random_range(1..400);
        let cfg = ScanFilterConfig {
            min_range_m: r.random_range(0.0..0.2),
            decimation: r.random_range(1..5),
            outlier_window: r.random_range(1..4),
            outlier_jump_m: r.random_range(0.05..0.6),
        };
        let ranges = random_scan(&mut r, n, 8.0);
        let rays: Vec<Ray> = ranges
            .iter()
            .map(|v| v.map_or(Ray { range: 8.0, hit: false }, |range| Ray { range, hit: true }))
            .collect();
        let scan = LaserScan::from_rays(-std::f64::consts::PI, 0.01, 8.0, 0.0, rays).map_err(|e| e.to_string())?;
        let out = filter_scan(&scan, &cfg);
        let want = brute_filter(
            &ranges,
            cfg.min_range_m,
            cfg.outlier_window,
            cfg.outlier_jump_m,
            cfg.decimation,
        );
        let got: Vec<Option<f64>> = out.rays().iter().map(|r| r.hit.then_some(r.range)).collect();
        if got != want {
            return Err(format!("scan {case} differs from the brute-force filter"));
        }
        if out.len() != n.div_ceil(cfg.decimation) {
            return Err(format!(
                "scan {case}: {} rays kept of {n} at decimation {}",
                out.len(),
                cfg.decimation
            ));
        }
        if out.rays().iter().any(|r| r.hit && r.range < cfg.min_range_m) {
            return Err(format!("scan {case}: dust survived"));
        }
        dust += ranges.iter().filter(|v| v.is_some_and(|x| x < cfg.min_range_m)).count();
        removed_spikes += ranges
            .iter()
            .step_by(cfg.decimation)
            .zip(&got)
            .filter(|(a, b)| a.is_some_and(|x| x >= cfg.min_range_m) && b.is_none())
            .count();
    }
    Ok(format!(
        "1000 scans match the brute-force filter; {dust} dust returns and {removed_spikes} isolated returns dropped"
    ))
}

fn telemetry_bytes(path: &Path) -> Result<Vec<u8>, String> {
    let mut exec = Executor::from_path(path).map_err(|e| e.to_string())?;
    let mut w = TelemetryWriter::new(Vec::new()).map_err(|e| e.to_string())?;
    exec.run(Some(&mut w)).map_err(|e| e.to_string())?;
    w.finish().map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let mut lines = Vec::new();
    for name in ["corridor_trolley.toml", "curious_patients.toml"] {
        let a = telemetry_bytes(&scenario_path(name))?;
        let b = telemetry_bytes(&scenario_path(name))?;
        if a != b {
            return Err(format!("{name}: telemetry differs between runs"));
        }
        lines.push(format!("{name} {} bytes", a.len()));
    }
    Ok(format!("identical telemetry: {}", lines.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("force-to-speed branches", force_mapping_branches),
        ("smoothing step and decay", smoothing_dynamics),
        ("taring", taring),
        ("anti-feedback", anti_feedback),
        ("dijkstra oracle", dijkstra_oracle),
        ("closed-loop corridor", corridor_navigation),
        ("narrow door", narrow_door),
        ("scan filter", filter_suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
