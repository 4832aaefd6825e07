//! Per-run structured logs, the CSV/metadata output format, and the
//! metric series derived from a log.
//!
//! Floats are written with 17 significant digits so a parse-back
//! reproduces every value bit-exactly.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arm::JointVector;
use crate::diff_drive::VelocityCommand;
use crate::error::Error;
use crate::geometry::{lift_to_trajectory, project_point_to_polyline, Point3, Pose2D, Trajectory3D};

/// Tracking method of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Proportional navigation + stop-and-sync + leader-follower IK.
    PngLf,
    /// Random velocity sampling + stop-and-sync + leader-follower IK.
    RrtLf,
    /// Per-robot SLQ-MPC over the combined base+arm model.
    SlqMpc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PngLf => "png-lf",
            Method::RrtLf => "rrt-lf",
            Method::SlqMpc => "slq-mpc",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "png-lf" => Ok(Method::PngLf),
            "rrt-lf" => Ok(Method::RrtLf),
            "slq-mpc" => Ok(Method::SlqMpc),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?}; expected png-lf, rrt-lf or slq-mpc"
            ))),
        }
    }
}

/// One robot's slice of a timestep record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotRecord {
    pub pose: Pose2D,
    pub cmd: VelocityCommand,
    pub joints: JointVector,
    /// World-frame end-effector position.
    pub ee: Point3,
    pub stop: bool,
    /// Candidate end-effector point the IK tracked this step.
    pub candidate: Point3,
    pub ik_converged: bool,
    /// Load-length violation of this solve (0 for the leader).
    pub ik_violation: f64,
}

/// One timestep of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub robots: [RobotRecord; 2],
    /// Shared target waypoint index (1-based) that governed this step.
    pub target_index: usize,
    /// Measured end-effector distance.
    pub load_length: f64,
    /// Distance of each end-effector to its desired trajectory.
    pub tracking_error: [f64; 2],
}

/// Run-level metadata written to the sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub method: Method,
    pub seed: u64,
    pub config_hash: String,
    pub completed: bool,
    /// Commanded rod length (m).
    pub load_length: f64,
    pub n_d: usize,
    /// Index (0/1) of the leader robot.
    pub leader: usize,
    pub steps: usize,
    /// Fraction of timesteps with a converged follower solve.
    pub follower_converged_fraction: f64,
}

/// Complete record of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog {
    pub records: Vec<LogRecord>,
    pub meta: RunMetadata,
}

impl SimulationLog {
    /// Per-timestep measured end-effector distance.
    pub fn load_length_series(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.robots[0].ee.dist(&r.robots[1].ee))
            .collect()
    }

    /// Per-timestep distance of each end-effector to the nearest point of
    /// its desired trajectory.
    pub fn tracking_error_series(&self, trajectories: &[Trajectory3D; 2]) -> [Vec<f64>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (a, traj) in trajectories.iter().enumerate() {
            let poly = traj.xy_polyline();
            out[a] = self
                .records
                .iter()
                .map(|r| {
                    let ee = r.robots[a].ee;
                    let pr = project_point_to_polyline(ee.xy(), &poly)
                        .expect("trajectory has at least one segment");
                    let nearest = lift_to_trajectory(traj, pr.segment, pr.t)
                        .expect("projection yields a valid segment parameter");
                    ee.dist(&nearest)
                })
                .collect();
        }
        out
    }
}

/// Metric summary of one run, as printed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub max_load_length_deviation: f64,
    pub mean_load_length_deviation: f64,
    pub mean_tracking_error: [f64; 2],
    pub duration: f64,
    pub steps: usize,
    pub completed: bool,
}

/// Summary computed from the logged series against a commanded length.
pub fn summarize(log: &SimulationLog, load_length: f64) -> RunSummary {
    let devs: Vec<f64> = log
        .records
        .iter()
        .map(|r| (r.load_length - load_length).abs())
        .collect();
    let n = devs.len().max(1) as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    RunSummary {
        max_load_length_deviation: devs.iter().cloned().fold(0.0, f64::max),
        mean_load_length_deviation: mean(&devs),
        mean_tracking_error: [
            mean(&log.records.iter().map(|r| r.tracking_error[0]).collect::<Vec<_>>()),
            mean(&log.records.iter().map(|r| r.tracking_error[1]).collect::<Vec<_>>()),
        ],
        duration: log.records.last().map_or(0.0, |r| r.t),
        steps: log.records.len(),
        completed: log.meta.completed,
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max load-length deviation   {:.6} m", self.max_load_length_deviation)?;
        writeln!(f, "mean load-length deviation  {:.6} m", self.mean_load_length_deviation)?;
        writeln!(f, "mean tracking error robot 1 {:.6} m", self.mean_tracking_error[0])?;
        writeln!(f, "mean tracking error robot 2 {:.6} m", self.mean_tracking_error[1])?;
        writeln!(f, "duration                    {:.2} s ({} steps)", self.duration, self.steps)?;
        write!(f, "completed                   {}", self.completed)
    }
}

/// Fixed CSV column order.
pub const CSV_HEADER: &str = "t,x1,y1,th1,v1,w1,b1_1,b1_2,b1_3,b1_4,ee1_x,ee1_y,ee1_z,stop1,\
x2,y2,th2,v2,w2,b2_1,b2_2,b2_3,b2_4,ee2_x,ee2_y,ee2_z,stop2,p,load_len,err1,err2";

fn fmt_f64(x: f64) -> String {
    // 17 significant digits: enough to reproduce any f64 exactly.
    format!("{x:.16e}")
}

/// Serialize a log as CSV. The sidecar metadata goes to
/// `metadata_path_for(path)`.
pub fn write_log_csv(log: &SimulationLog, path: &Path) -> Result<(), Error> {
    let mut text = String::with_capacity(64 + log.records.len() * 640);
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in &log.records {
        let mut fields: Vec<String> = Vec::with_capacity(31);
        fields.push(fmt_f64(r.t));
        for a in 0..2 {
            let rr = &r.robots[a];
            fields.push(fmt_f64(rr.pose.x));
            fields.push(fmt_f64(rr.pose.y));
            fields.push(fmt_f64(rr.pose.theta));
            fields.push(fmt_f64(rr.cmd.v));
            fields.push(fmt_f64(rr.cmd.omega));
            for j in rr.joints {
                fields.push(fmt_f64(j));
            }
            fields.push(fmt_f64(rr.ee.x));
            fields.push(fmt_f64(rr.ee.y));
            fields.push(fmt_f64(rr.ee.z));
            fields.push(if rr.stop { "1".into() } else { "0".into() });
        }
        fields.push(r.target_index.to_string());
        fields.push(fmt_f64(r.load_length));
        fields.push(fmt_f64(r.tracking_error[0]));
        fields.push(fmt_f64(r.tracking_error[1]));
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Sidecar metadata path: `<log>.meta.json` next to the CSV.
pub fn metadata_path_for(csv_path: &Path) -> std::path::PathBuf {
    let mut os = csv_path.as_os_str().to_owned();
    os.push(".meta.json");
    std::path::PathBuf::from(os)
}

pub fn write_metadata(meta: &RunMetadata, csv_path: &Path) -> Result<(), Error> {
    let path = metadata_path_for(csv_path);
    let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn read_metadata(csv_path: &Path) -> Result<RunMetadata, Error> {
    let path = metadata_path_for(csv_path);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.to_string()))
}

/// Parse a CSV produced by [`write_log_csv`]. Fields that are not part of
/// the CSV schema (candidate points, solver flags) come back defaulted;
/// metadata is read from the sidecar when present.
pub fn read_log_csv(path: &Path) -> Result<SimulationLog, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, "empty CSV".to_string()))?;
    if header != CSV_HEADER {
        return Err(Error::parse(path, format!("unexpected CSV header {header:?}")));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 31 {
            return Err(Error::parse(
                path,
                format!("row {} has {} fields, expected 31", lineno + 2, fields.len()),
            ));
        }
        let parse = |idx: usize| -> Result<f64, Error> {
            fields[idx].parse::<f64>().map_err(|_| {
                Error::parse(path, format!("bad float {:?} at row {} col {}", fields[idx], lineno + 2, idx + 1))
            })
        };
        let parse_flag = |idx: usize| -> Result<bool, Error> {
            match fields[idx] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::parse(
                    path,
                    format!("bad flag {other:?} at row {}", lineno + 2),
                )),
            }
        };
        let robot = |base: usize| -> Result<RobotRecord, Error> {
            Ok(RobotRecord {
                pose: Pose2D {
                    x: parse(base)?,
                    y: parse(base + 1)?,
                    theta: parse(base + 2)?,
                },
                cmd: VelocityCommand::new(parse(base + 3)?, parse(base + 4)?),
                joints: [
                    parse(base + 5)?,
                    parse(base + 6)?,
                    parse(base + 7)?,
                    parse(base + 8)?,
                ],
                ee: Point3::new(parse(base + 9)?, parse(base + 10)?, parse(base + 11)?),
                stop: parse_flag(base + 12)?,
                candidate: Point3::new(0.0, 0.0, 0.0),
                ik_converged: true,
                ik_violation: 0.0,
            })
        };
        records.push(LogRecord {
            t: parse(0)?,
            robots: [robot(1)?, robot(14)?],
            target_index: fields[27].parse().map_err(|_| {
                Error::parse(path, format!("bad index {:?} at row {}", fields[27], lineno + 2))
            })?,
            load_length: parse(28)?,
            tracking_error: [parse(29)?, parse(30)?],
        });
    }
    let meta = read_metadata(path).unwrap_or(RunMetadata {
        method: Method::PngLf,
        seed: 0,
        config_hash: String::new(),
        completed: true,
        load_length: 0.0,
        n_d: 0,
        leader: 0,
        steps: records.len(),
        follower_converged_fraction: 1.0,
    });
    Ok(SimulationLog { records, meta })
}
