//! Batch CLI: run a simulation, plan a scenario from a world file, or
//! summarize a run log.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cotrans::config::SimConfig;
use cotrans::error::Error;
use cotrans::geometry::Point2;
use cotrans::logging::{
    read_log_csv, read_metadata, summarize, write_log_csv, write_metadata, Method,
};
use cotrans::planner;
use cotrans::scenario::Scenario;
use cotrans::sync::run_simulation;
use cotrans::world::World2D;

#[derive(Parser)]
#[command(name = "cotrans", version, about = "Two-robot rigid-rod transport simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write the run CSV plus metadata.
    Run {
        /// Tracking method: png-lf, rrt-lf or slq-mpc.
        #[arg(long)]
        method: String,
        /// Either the literal "benchmark" or a scenario file path.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory for the CSV and metadata sidecar.
        #[arg(long)]
        out: PathBuf,
        /// Optional TOML configuration overriding the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plan rod-end trajectories through a world file and write a
    /// scenario file.
    Plan {
        /// World file (see the documented plain-text format).
        #[arg(long)]
        world: PathBuf,
        /// Rod midpoint start position as "x,y".
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        /// Rod midpoint goal position as "x,y".
        #[arg(long, allow_hyphen_values = true)]
        goal: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output scenario file path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.65)]
        load_length: f64,
        #[arg(long, default_value_t = 0.2)]
        carry_height: f64,
    },
    /// Summarize a run CSV produced by `run`.
    Metrics {
        /// Run CSV path; the metadata sidecar is picked up when present.
        log: PathBuf,
        /// Commanded load length; defaults to the sidecar value.
        #[arg(long)]
        load_length: Option<f64>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 3,
        Error::Parse { .. }
        | Error::InvalidConfig(_)
        | Error::InvalidWorld(_)
        | Error::InvalidScenario(_)
        | Error::InvalidTrajectory(_)
        | Error::InvalidParameter(_) => 4,
        Error::PlanningFailure(_) | Error::NoPath => 5,
        _ => 6,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Io { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::InvalidConfig(_) => "config",
        Error::InvalidWorld(_) => "world",
        Error::InvalidScenario(_) => "scenario",
        Error::InvalidTrajectory(_) => "trajectory",
        Error::InvalidParameter(_) => "parameter",
        Error::PlanningFailure(_) => "planning",
        Error::NoPath => "no-path",
        _ => "runtime",
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<SimConfig, Error> {
    match path {
        Some(p) => SimConfig::load(p),
        None => {
            let mut cfg = SimConfig::default();
            cfg.normalize()?;
            Ok(cfg)
        }
    }
}

fn parse_point(text: &str) -> Result<Point2, Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "expected \"x,y\", got {text:?}"
        )));
    }
    let x: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad coordinate {:?}", parts[0])))?;
    let y: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad coordinate {:?}", parts[1])))?;
    Ok(Point2::new(x, y))
}

fn cmd_run(
    method: &str,
    scenario: &str,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
) -> Result<(), Error> {
    let method: Method = method.parse()?;
    let sim = load_config(config)?;
    let scenario = if scenario == "benchmark" {
        Scenario::benchmark(sim.sim.n_d)?
    } else {
        Scenario::load(&PathBuf::from(scenario))?
    };
    let cfgs = [sim.robot.clone(), sim.robot.clone()];
    let log = run_simulation(&scenario, &cfgs, &sim, method, seed)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let csv_path = out.join(format!("{method}_seed{seed}.csv"));
    write_log_csv(&log, &csv_path)?;
    write_metadata(&log.meta, &csv_path)?;
    let summary = summarize(&log, scenario.load_length);
    println!("wrote {}", csv_path.display());
    println!("{summary}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan(
    world: &Path,
    start: &str,
    goal: &str,
    seed: u64,
    out: &Path,
    config: Option<&PathBuf>,
    load_length: f64,
    carry_height: f64,
) -> Result<(), Error> {
    let sim = load_config(config)?;
    let world = World2D::load(world)?;
    let q_init = parse_point(start)?;
    let q_goal = parse_point(goal)?;
    let outcome = planner::plan(
        &world,
        q_init,
        q_goal,
        &sim.planner,
        seed,
        load_length,
        carry_height,
        sim.sim.n_d,
    )?;

    // Robots start at the first waypoints facing the first segment.
    let start_pose = |traj: &cotrans::geometry::Trajectory3D| {
        let w = traj.waypoints();
        let dir = (w[1].y - w[0].y).atan2(w[1].x - w[0].x);
        cotrans::geometry::Pose2D::new(w[0].x, w[0].y, dir)
    };
    let scenario = Scenario {
        start_poses: [
            start_pose(&outcome.leader_trajectory),
            start_pose(&outcome.follower_trajectory),
        ],
        trajectories: [outcome.leader_trajectory, outcome.follower_trajectory],
        load_length,
        world: Some(world),
    };
    scenario.save(out)?;
    let path_len: f64 = outcome
        .path
        .windows(2)
        .map(|w| w[0].dist(&w[1]))
        .sum();
    println!(
        "wrote {} (path: {} vertices, {:.3} m)",
        out.display(),
        outcome.path.len(),
        path_len
    );
    Ok(())
}

fn cmd_metrics(log_path: &Path, load_length: Option<f64>) -> Result<(), Error> {
    let log = read_log_csv(log_path)?;
    let l = match load_length {
        Some(l) => l,
        None => {
            let meta = read_metadata(log_path).unwrap_or_else(|_| log.meta.clone());
            if meta.load_length > 0.0 {
                meta.load_length
            } else {
                return Err(Error::InvalidParameter(
                    "no metadata sidecar found; pass --load-length".into(),
                ));
            }
        }
    };
    let summary = summarize(&log, l);
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            method,
            scenario,
            seed,
            out,
            config,
        } => cmd_run(method, scenario, *seed, out, config.as_ref()),
        Command::Plan {
            world,
            start,
            goal,
            seed,
            out,
            config,
            load_length,
            carry_height,
        } => cmd_plan(
            world,
            start,
            goal,
            *seed,
            out,
            config.as_ref(),
            *load_length,
            *carry_height,
        ),
        Command::Metrics { log, load_length } => cmd_metrics(log, *load_length),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", error_kind(&e));
            ExitCode::from(exit_code_for(&e))
        }
    }
}
