use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use forcenav::nav::{plan_global, DijkstraConfig};
use forcenav::perception::{inflate_with, load_grid, InflationParams};
use forcenav::runtime::{run_scenario, serve, Executor, RunError, Scenario, ScenarioError};
use forcenav::Pose2D;

#[derive(Parser)]
#[command(
    name = "forcenav",
    version,
    about = "Force-guided and autonomous navigation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario in simulated time.
    Run {
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-tick telemetry CSV here.
        #[arg(long)]
        telemetry: Option<PathBuf>,
        /// Accepted for compatibility; runs never open a display.
        #[arg(long)]
        headless: bool,
        /// Print the run report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario in real time and stream its state over TCP.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
    },
    /// Plan once on a grid map and print the path.
    Plan {
        map: PathBuf,
        /// Start as `x,y`.
        start: String,
        /// Goal as `x,y`.
        goal: String,
        #[arg(long, default_value_t = 0.35)]
        footprint: f64,
        #[arg(long, default_value_t = 1.0)]
        inflation: f64,
    },
    /// Check a scenario and its map without running it.
    Validate { scenario: PathBuf },
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y but got '{s}'"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("invalid coordinate '{v}'"));
    Ok((p(x)?, p(y)?))
}

fn report_scenario_error(e: &ScenarioError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        ScenarioError::Parse(_) | ScenarioError::Invalid(_) => ExitCode::from(2),
        ScenarioError::WorldLoad(_) => ExitCode::from(3),
        ScenarioError::Io { .. } => ExitCode::from(4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            telemetry,
            headless: _,
            json,
        } => match run_scenario(&scenario, seed, telemetry.as_deref()) {
            Ok(report) => {
                if json {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                } else {
                    println!("simulated {:.2} s in {} ticks", report.time_s, report.ticks);
                    for g in &report.goals {
                        println!(
                            "goal ({:.2}, {:.2}): {} at {:.2} s",
                            g.goal.x,
                            g.goal.y,
                            g.status.as_str(),
                            g.time_s
                        );
                    }
                    let p = report.final_pose;
                    println!("final pose ({:.3}, {:.3}, {:.3})", p.x, p.y, p.theta);
                    println!(
                        "plans {}, collisions {}, lethal ticks {}",
                        report.plan_count, report.collisions, report.lethal_ticks
                    );
                    println!("{}", if report.success { "success" } else { "failure" });
                }
                ExitCode::from(report.exit_code() as u8)
            }
            Err(RunError::Scenario(e)) => report_scenario_error(&e),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(4)
            }
        },
        Command::Serve { scenario, port } => match Executor::from_path(&scenario) {
            Ok(exec) => match serve(exec, port) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(4)
                }
            },
            Err(e) => report_scenario_error(&e),
        },
        Command::Plan {
            map,
            start,
            goal,
            footprint,
            inflation,
        } => {
            let (s, g) = match (parse_point(&start), parse_point(&goal)) {
                (Ok(s), Ok(g)) => (s, g),
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let grid = match load_grid(&map) {
                Ok(g) => g,
                Err(e) => {
                    eprintln!("error: {}: {e}", map.display());
                    return ExitCode::from(3);
                }
            };
            let params = InflationParams {
                inflation_radius_m: inflation.max(footprint),
                footprint_radius_m: footprint,
                ..Default::default()
            };
            let costmap = inflate_with(&grid, &params);
            let start = Pose2D::new(s.0, s.1, 0.0);
            let goal = Pose2D::new(g.0, g.1, 0.0);
            match plan_global(&costmap, &start, &goal, &DijkstraConfig::default()) {
                Ok(path) => {
                    println!(
                        "# {} waypoints, length {:.3} m, cost {:.4}",
                        path.waypoints().len(),
                        path.length(),
                        path.total_cost()
                    );
                    for w in path.waypoints() {
                        println!("{:.3} {:.3}", w.x, w.y);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Validate { scenario } => {
            let loaded = Scenario::load(&scenario).and_then(|s| s.load_map().map(|m| (s, m)).map_err(Into::into));
            match loaded.and_then(|(s, m)| Executor::new(s, m)) {
                Ok(exec) => {
                    let s = exec.scenario();
                    let m = exec.map();
                    println!(
                        "ok: '{}' ({} mode, {} s, {} events), map {}x{} at {} m",
                        s.name,
                        s.mode,
                        s.duration_s,
                        s.events.len(),
                        m.width(),
                        m.height(),
                        m.resolution()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => report_scenario_error(&e),
            }
        }
    }
}
