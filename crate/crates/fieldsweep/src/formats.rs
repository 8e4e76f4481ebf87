//! On-disk formats: scenario JSON in, controller JSON in and out, trace
//! and stats CSV out.
//!
//! Scenario files describe the physical task (paths in meters, speeds in
//! m/s) plus basis sizes and optional program parameters; they expand to a
//! validated task. Controller files carry one reciprocal profile per robot
//! with the solve diagnostics, and round-trip losslessly: every float is
//! written in shortest round-trip form, so reading a written file
//! reconstructs bit-identical profiles and rewriting it reproduces the
//! bytes. CSV layouts are documented on their writers.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::ReciprocalProfile;
use crate::geom::Point2;
use crate::sim::{SweepStats, Trace};
use crate::task::{validate, Footprint, InterestPoint, PathSpec, PersistentTask, RobotModel};
use crate::{Error, Result};

/// A number that may be given once for all slots or per slot.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    pub fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrVec::Vec(v) if v.len() == n => Ok(v.clone()),
            ScalarOrVec::Vec(v) => Err(Error::InvalidInput(format!(
                "{what}: expected {n} values, got {}",
                v.len()
            ))),
        }
    }
}

/// Sensor footprint in scenario form. Polygon vertices ride in the robot
/// body frame (x forward along the path).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FootprintSpec {
    Disk { radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// One robot of a scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobotSpec {
    /// Closed path vertices, meters; the loop closes itself.
    pub path: Vec<[f64; 2]>,
    pub footprint: FootprintSpec,
    /// Basis cells for this robot's speed profile.
    pub cells: usize,
    /// Speed limits in m/s, scalar or one per cell.
    pub speed_min: ScalarOrVec,
    pub speed_max: ScalarOrVec,
    /// Drain rate per point while covering it, scalar or one per point;
    /// omitted means the points' own rates apply (single-robot form).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consumption: Option<ScalarOrVec>,
}

/// One explicitly placed interest point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSpec {
    pub position: [f64; 2],
    pub production: f64,
    #[serde(default)]
    pub consumption: f64,
}

/// A rectangular grid of interest points, row-major with the x index
/// fastest, positioned at cell centers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// [xmin, ymin, xmax, ymax], meters.
    pub bounds: [f64; 4],
    pub production: ScalarOrVec,
    #[serde(default = "one")]
    pub consumption: ScalarOrVec,
}

fn one() -> ScalarOrVec {
    ScalarOrVec::Scalar(1.0)
}

/// Program parameters a scenario may pin.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LpParams {
    /// Strictness surrogate for the positivity rows; defaults to
    /// 1e-6 times the largest production rate.
    pub delta: Option<f64>,
    /// Constraint tightening reserved for sampled speed-bound rows;
    /// unused with the rectangular basis, whose per-cell bounds are exact.
    pub xi: Option<f64>,
    /// Boundary-search sample count for coverage extraction; defaults to
    /// ten per cell.
    pub coverage_samples: Option<usize>,
}

/// A scenario file: the task in physical units plus solver knobs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub robots: Vec<RobotSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub lp: LpParams,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })
    }

    /// Expand the grid, build the task, and validate it.
    pub fn to_task(&self) -> Result<PersistentTask> {
        let mut points: Vec<InterestPoint> = self
            .points
            .iter()
            .map(|p| InterestPoint {
                position: Point2::new(p.position[0], p.position[1]),
                production: p.production,
                consumption: p.consumption,
            })
            .collect();
        if let Some(g) = &self.grid {
            if g.nx == 0 || g.ny == 0 {
                return Err(Error::InvalidInput("grid needs nx, ny >= 1".into()));
            }
            let m = g.nx * g.ny;
            let prod = g.production.expand(m, "grid production")?;
            let cons = g.consumption.expand(m, "grid consumption")?;
            let [x0, y0, x1, y1] = g.bounds;
            for iy in 0..g.ny {
                for ix in 0..g.nx {
                    let i = iy * g.nx + ix;
                    points.push(InterestPoint {
                        position: Point2::new(
                            x0 + (ix as f64 + 0.5) / g.nx as f64 * (x1 - x0),
                            y0 + (iy as f64 + 0.5) / g.ny as f64 * (y1 - y0),
                        ),
                        production: prod[i],
                        consumption: cons[i],
                    });
                }
            }
        }
        let m = points.len();
        let robots: Vec<RobotModel> = self
            .robots
            .iter()
            .enumerate()
            .map(|(r, spec)| {
                let verts: Vec<Point2> = spec
                    .path
                    .iter()
                    .map(|v| Point2::new(v[0], v[1]))
                    .collect();
                let path = PathSpec::closed(&verts).map_err(|e| {
                    Error::InvalidInput(format!("robot {r} path: {e}"))
                })?;
                let footprint = match &spec.footprint {
                    FootprintSpec::Disk { radius } => Footprint::Disk { radius: *radius },
                    FootprintSpec::Polygon { vertices } => Footprint::Polygon {
                        vertices: vertices
                            .iter()
                            .map(|v| Point2::new(v[0], v[1]))
                            .collect(),
                    },
                };
                Ok(RobotModel {
                    path,
                    footprint,
                    n: spec.cells,
                    v_min: spec.speed_min.expand(spec.cells, "speed_min")?,
                    v_max: spec.speed_max.expand(spec.cells, "speed_max")?,
                    consumption: spec
                        .consumption
                        .as_ref()
                        .map(|c| c.expand(m, "robot consumption"))
                        .transpose()?,
                })
            })
            .collect::<Result<_>>()?;
        let task = PersistentTask { robots, points };
        let issues = validate(&task);
        if !issues.is_empty() {
            return Err(Error::InvalidTask(issues));
        }
        Ok(task)
    }
}

/// One robot's profile in controller-file form: `alpha` is in seconds per
/// unit theta when `frequency` is absent, or normalized (summing to one)
/// with the cycle frequency in Hz when present.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControllerRobot {
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    pub cycle_time: f64,
}

/// Solve diagnostics carried alongside the profiles.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Per-point stability slack in profile units (single-robot programs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_slacks: Option<Vec<f64>>,
    /// Per-point margins: `c tau - p T` (single robot, field units per
    /// cycle) or team drain minus production (field units per second).
    pub point_margins: Vec<f64>,
}

/// A controller file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControllerFile {
    pub objective: String,
    /// Optimal program value (margin or peak bound) when one was
    /// optimized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub robots: Vec<ControllerRobot>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl ControllerFile {
    pub fn from_single(res: &crate::synthesis::SynthesisResult, objective: &str) -> ControllerFile {
        ControllerFile {
            objective: objective.to_string(),
            value: res.value,
            robots: vec![ControllerRobot {
                alpha: res.profile.alpha().to_vec(),
                frequency: None,
                cycle_time: res.cycle_time,
            }],
            diagnostics: Diagnostics {
                point_slacks: Some(res.k_slacks.clone()),
                point_margins: res.margins.clone(),
            },
        }
    }

    pub fn from_team(
        res: &crate::synthesis::TeamSynthesisResult,
        objective: &str,
    ) -> ControllerFile {
        ControllerFile {
            objective: objective.to_string(),
            value: res.value,
            robots: res
                .profiles
                .iter()
                .zip(&res.cycle_times)
                .map(|(p, &t)| ControllerRobot {
                    alpha: p.alpha().to_vec(),
                    frequency: p.frequency(),
                    cycle_time: t,
                })
                .collect(),
            diagnostics: Diagnostics {
                point_slacks: None,
                point_margins: res.margins.clone(),
            },
        }
    }

    /// Reconstruct the profiles.
    pub fn profiles(&self) -> Result<Vec<ReciprocalProfile>> {
        self.robots
            .iter()
            .map(|r| match r.frequency {
                None => ReciprocalProfile::direct(r.alpha.clone()),
                Some(f) => ReciprocalProfile::normalized(r.alpha.clone(), f),
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<ControllerFile> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("serializable");
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// Write a trace as CSV: `t,theta_1..theta_N,z_1..z_m`, or with a single
/// `z_max` column instead of per-point values.
pub fn write_trace_csv(path: &Path, trace: &Trace, max_only: bool) -> Result<()> {
    let mut out = Vec::new();
    let nrobots = trace.thetas.first().map_or(0, Vec::len);
    let npoints = trace.fields.first().map_or(0, Vec::len);
    let mut header = String::from("t");
    for r in 1..=nrobots {
        header.push_str(&format!(",theta_{r}"));
    }
    if max_only {
        header.push_str(",z_max");
    } else {
        for i in 1..=npoints {
            header.push_str(&format!(",z_{i}"));
        }
    }
    writeln!(out, "{header}").unwrap();
    for ((t, thetas), fields) in trace
        .times
        .iter()
        .zip(&trace.thetas)
        .zip(&trace.fields)
    {
        let mut row = format!("{t}");
        for th in thetas {
            row.push_str(&format!(",{th}"));
        }
        if max_only {
            let zmax = fields.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.push_str(&format!(",{zmax}"));
        } else {
            for z in fields {
                row.push_str(&format!(",{z}"));
            }
        }
        writeln!(out, "{row}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write sweep statistics as CSV: `value,mean,min,max,stddev,divergent`.
pub fn write_stats_csv(path: &Path, stats: &[SweepStats]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "value,mean,min,max,stddev,divergent").unwrap();
    for s in stats {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.level, s.mean, s.min, s.max, s.stddev, s.divergent
        )
        .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// One row of a steady-state analysis.
#[derive(Clone, Debug)]
pub struct AnalysisRow {
    pub point: usize,
    /// Worst periodic field value and where on the cycle it occurs.
    pub peak: f64,
    pub peak_theta: f64,
    /// `c tau - p T`, field units per cycle.
    pub margin: f64,
    /// Largest uniform production inflation the profile tolerates here.
    pub offset_tolerance: f64,
}

/// Write analysis rows as CSV:
/// `point,peak,peak_theta,margin,offset_tolerance`.
pub fn write_analysis_csv(path: &Path, rows: &[AnalysisRow]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "point,peak,peak_theta,margin,offset_tolerance").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.point, r.peak, r.peak_theta, r.margin, r.offset_tolerance
        )
        .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write steady-state curves in long form: `point,theta,value`, one block
/// of breakpoints per point.
pub fn write_curves_csv(path: &Path, curves: &[(usize, Vec<(f64, f64)>)]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "point,theta,value").unwrap();
    for (point, curve) in curves {
        for (theta, value) in curve {
            writeln!(out, "{point},{theta},{value}").unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}
