//! Trajectory simulation of the monitoring loop.
//!
//! The state is one position per robot and one field value per point. The
//! field grows at its production rate while uncovered and changes at
//! production minus the covering robots' drain rates while covered,
//! clamped at zero. Everything is piecewise constant between events, so
//! the default integrator advances event to event with no discretization
//! error: the next event is the earliest of a robot reaching a cell
//! boundary or coverage endpoint, a field value draining to zero, or a
//! bookkeeping instant (quarter boundary, trace sample). Positions and
//! field zeros are snapped exactly at events, so simulated peaks can be
//! compared to closed-form values at machine precision.
//!
//! A forward-Euler integrator backs the noisy runs: per-step production
//! disturbances require a fixed step. Speed noise (a factor redrawn each
//! cell crossing) works under both integrators.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::controller::ReciprocalProfile;
use crate::coverage::CoverageSet;
use crate::synthesis::{SingleInstance, TeamInstance};
use crate::{Error, Result};

/// One monitored point in simulation form.
#[derive(Clone, Debug)]
pub struct SimPoint {
    pub production: f64,
    /// Drain rate per robot while that robot covers this point.
    pub consumption: Vec<f64>,
}

/// One robot in simulation form.
#[derive(Clone, Debug)]
pub struct SimRobot {
    /// Reciprocal speed per cell, seconds per unit theta.
    pub reciprocal: Vec<f64>,
    /// Coverage set per point.
    pub coverage: Vec<CoverageSet>,
    /// Initial position.
    pub phase: f64,
}

/// A closed simulation problem.
#[derive(Clone, Debug)]
pub struct SimProblem {
    pub robots: Vec<SimRobot>,
    pub points: Vec<SimPoint>,
}

impl SimProblem {
    /// Wire a single-robot instance and its profile into simulation form.
    pub fn single(profile: &ReciprocalProfile, inst: &SingleInstance) -> SimProblem {
        let n = profile.n();
        SimProblem {
            robots: vec![SimRobot {
                reciprocal: (0..n).map(|j| profile.reciprocal_cell(j)).collect(),
                coverage: inst.coverage.clone(),
                phase: 0.0,
            }],
            points: inst
                .points
                .iter()
                .map(|r| SimPoint {
                    production: r.production,
                    consumption: vec![r.consumption],
                })
                .collect(),
        }
    }

    /// Wire a team instance and its profiles into simulation form.
    pub fn team(
        profiles: &[ReciprocalProfile],
        inst: &TeamInstance,
        phases: &[f64],
    ) -> SimProblem {
        assert_eq!(profiles.len(), inst.robots.len());
        assert_eq!(phases.len(), inst.robots.len());
        let robots = profiles
            .iter()
            .zip(&inst.robots)
            .zip(phases)
            .map(|((profile, robot), &phase)| SimRobot {
                reciprocal: (0..profile.n()).map(|j| profile.reciprocal_cell(j)).collect(),
                coverage: robot.coverage.clone(),
                phase,
            })
            .collect();
        let points = (0..inst.production.len())
            .map(|i| SimPoint {
                production: inst.production[i],
                consumption: inst.robots.iter().map(|r| r.consumption[i]).collect(),
            })
            .collect();
        SimProblem { robots, points }
    }

    /// Shortest time any robot needs to cross one cell.
    pub fn min_cell_transit(&self) -> f64 {
        self.robots
            .iter()
            .flat_map(|r| {
                let n = r.reciprocal.len() as f64;
                r.reciprocal.iter().map(move |rc| rc / n)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn check(&self) -> Result<()> {
        if self.robots.is_empty() || self.points.is_empty() {
            return Err(Error::InvalidInput(
                "simulation needs at least one robot and one point".into(),
            ));
        }
        for (r, robot) in self.robots.iter().enumerate() {
            if robot.reciprocal.is_empty() || robot.reciprocal.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "robot {r} needs positive per-cell reciprocal speeds"
                )));
            }
            if robot.coverage.len() != self.points.len() {
                return Err(Error::InvalidInput(format!(
                    "robot {r} has {} coverage sets for {} points",
                    robot.coverage.len(),
                    self.points.len()
                )));
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.consumption.len() != self.robots.len() {
                return Err(Error::InvalidInput(format!(
                    "point {i} has {} drain rates for {} robots",
                    p.consumption.len(),
                    self.robots.len()
                )));
            }
        }
        Ok(())
    }
}

/// Integration scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrator {
    /// Advance event to event; exact for noise-free dynamics and under
    /// speed noise.
    EventExact,
    /// Forward Euler with the given step (`None` picks a tenth of the
    /// shortest cell transit). Required when production noise is on.
    FixedStep { dt: Option<f64> },
}

/// What the result records besides summaries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceSpec {
    Off,
    /// A sample every given number of seconds.
    Sampled(f64),
    /// Every integration event or step.
    Full,
}

/// Simulation configuration.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub integrator: Integrator,
    /// Simulated duration, seconds.
    pub horizon: f64,
    pub seed: u64,
    /// Initial field values; empty means all zero.
    pub initial: Vec<f64>,
    /// Initial robot positions; empty keeps the problem's phases.
    pub initial_thetas: Vec<f64>,
    /// Constant production inflation applied to every point.
    pub production_offset: f64,
    /// Amplitude of the per-step uniform production disturbance.
    pub production_noise: f64,
    /// Relative speed perturbation, redrawn each cell crossing; in [0, 1).
    pub speed_noise: f64,
    pub trace: TraceSpec,
    /// Cap on events or steps before giving up.
    pub max_events: usize,
}

impl SimConfig {
    pub fn event_exact(horizon: f64) -> SimConfig {
        SimConfig {
            integrator: Integrator::EventExact,
            horizon,
            seed: 0,
            initial: Vec::new(),
            initial_thetas: Vec::new(),
            production_offset: 0.0,
            production_noise: 0.0,
            speed_noise: 0.0,
            trace: TraceSpec::Off,
            max_events: 20_000_000,
        }
    }

    pub fn fixed_step(horizon: f64, dt: Option<f64>) -> SimConfig {
        SimConfig {
            integrator: Integrator::FixedStep { dt },
            ..SimConfig::event_exact(horizon)
        }
    }

    fn check(&self, npoints: usize, nrobots: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSimConfig(msg));
        if !(self.horizon > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.production_noise < 0.0 {
            return bad("production noise must be nonnegative".into());
        }
        if self.production_noise > 0.0 && self.integrator == Integrator::EventExact {
            return bad(
                "production noise needs the fixed-step integrator: \
                 per-step disturbances have no event form"
                    .into(),
            );
        }
        if !(0.0..1.0).contains(&self.speed_noise) {
            return bad(format!(
                "speed noise must lie in [0, 1), got {}",
                self.speed_noise
            ));
        }
        if let Integrator::FixedStep { dt: Some(dt) } = self.integrator {
            if !(dt > 0.0) {
                return bad(format!("step must be positive, got {dt}"));
            }
        }
        if !self.initial.is_empty() && self.initial.len() != npoints {
            return bad(format!(
                "{} initial values for {} points",
                self.initial.len(),
                npoints
            ));
        }
        if self.initial.iter().any(|&z| !(z >= 0.0)) {
            return bad("initial field values must be nonnegative".into());
        }
        if !self.initial_thetas.is_empty() && self.initial_thetas.len() != nrobots {
            return bad(format!(
                "{} initial positions for {} robots",
                self.initial_thetas.len(),
                nrobots
            ));
        }
        if self.initial_thetas.iter().any(|t| !t.is_finite()) {
            return bad("initial positions must be finite".into());
        }
        Ok(())
    }
}

/// Boundedness verdict over the simulated horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Divergent,
}

/// Recorded trajectory samples.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub times: Vec<f64>,
    /// Per sample, one position per robot.
    pub thetas: Vec<Vec<f64>>,
    /// Per sample, one field value per point.
    pub fields: Vec<Vec<f64>>,
}

/// Simulation outcome.
#[derive(Clone, Debug)]
pub struct SimResult {
    pub horizon: f64,
    /// Events processed (event-exact) or steps taken (fixed-step).
    pub steps: usize,
    pub final_thetas: Vec<f64>,
    pub final_fields: Vec<f64>,
    /// Per-point maximum over the whole run.
    pub max_fields: Vec<f64>,
    /// Per-point maxima over the last and second-to-last horizon quarter.
    pub peak_last_quarter: Vec<f64>,
    pub peak_prev_quarter: Vec<f64>,
    /// Per-point growth estimate between the two quarters, field units
    /// per second.
    pub growth_rates: Vec<f64>,
    /// Per-point largest spacing between zero touches over the second half
    /// of the run (horizon end counts as a boundary).
    pub max_zero_gap: Vec<f64>,
    pub verdict: Verdict,
    pub divergent_points: Vec<usize>,
    pub trace: Option<Trace>,
}

impl SimResult {
    pub fn is_bounded(&self) -> bool {
        self.verdict == Verdict::Bounded
    }
}

/// A quarter of relative growth between consecutive horizon quarters reads
/// as divergence; anything below is settling or noise.
const GROWTH_FACTOR: f64 = 1.01;

struct Recorder {
    horizon: f64,
    max_fields: Vec<f64>,
    peak_last: Vec<f64>,
    peak_prev: Vec<f64>,
    last_zero: Vec<f64>,
    max_zero_gap: Vec<f64>,
    trace: Option<Trace>,
    sample_every: f64,
    next_sample: f64,
}

impl Recorder {
    fn new(npoints: usize, cfg: &SimConfig) -> Recorder {
        let (trace, sample_every) = match cfg.trace {
            TraceSpec::Off => (None, f64::INFINITY),
            TraceSpec::Sampled(s) => (Some(Trace::default()), s.max(1e-12)),
            TraceSpec::Full => (Some(Trace::default()), 0.0),
        };
        Recorder {
            horizon: cfg.horizon,
            max_fields: vec![f64::NEG_INFINITY; npoints],
            peak_last: vec![f64::NEG_INFINITY; npoints],
            peak_prev: vec![f64::NEG_INFINITY; npoints],
            last_zero: vec![0.0; npoints],
            max_zero_gap: vec![0.0; npoints],
            trace,
            sample_every,
            next_sample: 0.0,
        }
    }

    fn observe(&mut self, t: f64, thetas: &[f64], z: &[f64]) {
        for (i, &v) in z.iter().enumerate() {
            self.max_fields[i] = self.max_fields[i].max(v);
            if t >= 0.75 * self.horizon {
                self.peak_last[i] = self.peak_last[i].max(v);
            } else if t >= 0.5 * self.horizon {
                self.peak_prev[i] = self.peak_prev[i].max(v);
            }
            if v == 0.0 {
                let gap = t - self.last_zero[i];
                if t >= 0.5 * self.horizon {
                    self.max_zero_gap[i] = self.max_zero_gap[i].max(gap);
                }
                self.last_zero[i] = t;
            }
        }
        if let Some(trace) = &mut self.trace {
            if self.sample_every == 0.0 || t >= self.next_sample {
                trace.times.push(t);
                trace.thetas.push(thetas.to_vec());
                trace.fields.push(z.to_vec());
                if self.sample_every > 0.0 {
                    while self.next_sample <= t {
                        self.next_sample += self.sample_every;
                    }
                }
            }
        }
    }

    fn finish(
        mut self,
        steps: usize,
        thetas: Vec<f64>,
        z: Vec<f64>,
        scale: f64,
    ) -> SimResult {
        for i in 0..self.max_zero_gap.len() {
            let tail = self.horizon - self.last_zero[i];
            self.max_zero_gap[i] = self.max_zero_gap[i].max(tail);
        }
        let quarter = 0.25 * self.horizon;
        let tol = 1e-9 * (1.0 + scale);
        let mut divergent_points = Vec::new();
        let mut growth_rates = Vec::with_capacity(z.len());
        for i in 0..z.len() {
            let (prev, last) = (self.peak_prev[i], self.peak_last[i]);
            growth_rates.push((last - prev) / quarter);
            if last > prev * GROWTH_FACTOR + tol {
                divergent_points.push(i);
            }
        }
        let verdict = if divergent_points.is_empty() {
            Verdict::Bounded
        } else {
            Verdict::Divergent
        };
        SimResult {
            horizon: self.horizon,
            steps,
            final_thetas: thetas,
            final_fields: z,
            max_fields: self.max_fields,
            peak_last_quarter: self.peak_last,
            peak_prev_quarter: self.peak_prev,
            growth_rates,
            max_zero_gap: self.max_zero_gap,
            verdict,
            divergent_points,
            trace: self.trace,
        }
    }
}

/// One robot's cycle, cut at every cell boundary and coverage endpoint so
/// speed and coverage are constant inside each piece.
struct Segments {
    start: Vec<f64>,
    end: Vec<f64>,
    cell: Vec<usize>,
    /// covers[seg * npoints + i]
    covers: Vec<bool>,
    npoints: usize,
}

impl Segments {
    fn build(robot: &SimRobot, npoints: usize) -> Segments {
        let n = robot.reciprocal.len();
        let mut cuts: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
        for cov in &robot.coverage {
            for iv in cov.intervals() {
                cuts.push(iv.start.rem_euclid(1.0));
                cuts.push(iv.end.rem_euclid(1.0));
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let m = cuts.len();
        let mut seg = Segments {
            start: Vec::with_capacity(m),
            end: Vec::with_capacity(m),
            cell: Vec::with_capacity(m),
            covers: Vec::with_capacity(m * npoints),
            npoints,
        };
        for (k, &s) in cuts.iter().enumerate() {
            let e = if k + 1 < m { cuts[k + 1] } else { 1.0 };
            if e <= s {
                continue;
            }
            let mid = 0.5 * (s + e);
            seg.start.push(s);
            seg.end.push(e);
            seg.cell.push(((mid * n as f64) as usize).min(n - 1));
            for cov in &robot.coverage {
                seg.covers.push(cov.contains(mid));
            }
        }
        seg
    }

    fn locate(&self, theta: f64) -> usize {
        let t = theta.rem_euclid(1.0);
        self.start.partition_point(|&s| s <= t).saturating_sub(1)
    }

    fn covers(&self, seg: usize, point: usize) -> bool {
        self.covers[seg * self.npoints + point]
    }
}

struct RobotState {
    seg: usize,
    theta: f64,
    /// Speed-noise multiplier on the reciprocal, redrawn per cell.
    factor: f64,
}

/// Run a simulation.
pub fn simulate(problem: &SimProblem, cfg: &SimConfig) -> Result<SimResult> {
    problem.check()?;
    cfg.check(problem.points.len(), problem.robots.len())?;
    match cfg.integrator {
        Integrator::EventExact => run_events(problem, cfg),
        Integrator::FixedStep { dt } => {
            let dt = dt.unwrap_or_else(|| problem.min_cell_transit() / 10.0);
            run_euler(problem, cfg, dt)
        }
    }
}

fn initial_fields(problem: &SimProblem, cfg: &SimConfig) -> Vec<f64> {
    if cfg.initial.is_empty() {
        vec![0.0; problem.points.len()]
    } else {
        cfg.initial.clone()
    }
}

fn phase_of(problem: &SimProblem, cfg: &SimConfig, r: usize) -> f64 {
    let raw = if cfg.initial_thetas.is_empty() {
        problem.robots[r].phase
    } else {
        cfg.initial_thetas[r]
    };
    raw.rem_euclid(1.0)
}

fn draw_factor(rng: &mut ChaCha8Rng, amplitude: f64) -> f64 {
    if amplitude > 0.0 {
        1.0 + rng.random_range(-amplitude..=amplitude)
    } else {
        1.0
    }
}

fn scale_of(problem: &SimProblem) -> f64 {
    problem
        .points
        .iter()
        .map(|p| {
            p.production + p.consumption.iter().copied().fold(0.0f64, f64::max)
        })
        .fold(0.0f64, f64::max)
}

fn run_events(problem: &SimProblem, cfg: &SimConfig) -> Result<SimResult> {
    let npoints = problem.points.len();
    let nrobots = problem.robots.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let segments: Vec<Segments> = problem
        .robots
        .iter()
        .map(|r| Segments::build(r, npoints))
        .collect();
    let mut robots: Vec<RobotState> = segments
        .iter()
        .enumerate()
        .map(|(r, seg)| {
            let theta = phase_of(problem, cfg, r);
            RobotState {
                seg: seg.locate(theta),
                theta,
                factor: draw_factor(&mut rng, cfg.speed_noise),
            }
        })
        .collect();
    let mut z = initial_fields(problem, cfg);
    let mut recorder = Recorder::new(npoints, cfg);
    let mut thetas: Vec<f64> = robots.iter().map(|r| r.theta).collect();
    recorder.observe(0.0, &thetas, &z);

    let quarters = [
        0.25 * cfg.horizon,
        0.5 * cfg.horizon,
        0.75 * cfg.horizon,
        cfg.horizon,
    ];
    let mut next_quarter = 0usize;
    let mut t = 0.0f64;
    let mut steps = 0usize;
    let mut rates = vec![0.0f64; npoints];
    let mut dt_robot = vec![0.0f64; nrobots];

    while t < cfg.horizon {
        steps += 1;
        if steps > cfg.max_events {
            return Err(Error::InvalidSimConfig(format!(
                "event budget of {} exhausted at t = {t:.6}; shorten the \
                 horizon or raise max_events",
                cfg.max_events
            )));
        }
        // Field rates are constant until the next event.
        for (i, p) in problem.points.iter().enumerate() {
            let mut g = p.production + cfg.production_offset;
            for r in 0..nrobots {
                if segments[r].covers(robots[r].seg, i) {
                    g -= p.consumption[r];
                }
            }
            rates[i] = if z[i] > 0.0 { g } else { g.max(0.0) };
        }

        // Earliest event: clock, boundary crossing, or field zero.
        let clock = quarters[next_quarter];
        let mut dt = clock - t;
        for (r, state) in robots.iter().enumerate() {
            let seg = &segments[r];
            let recip = problem.robots[r].reciprocal[seg.cell[state.seg]] * state.factor;
            let d = (seg.end[state.seg] - state.theta) * recip;
            dt_robot[r] = d;
            if d < dt {
                dt = d;
            }
        }
        let mut zero_hit = vec![false; npoints];
        for i in 0..npoints {
            if z[i] > 0.0 && rates[i] < 0.0 {
                let d = z[i] / -rates[i];
                if d <= dt {
                    dt = d;
                    zero_hit[i] = true;
                }
            }
        }
        // A shorter candidate found after a zero-hit invalidates it.
        for i in 0..npoints {
            if zero_hit[i] && z[i] / -rates[i] > dt {
                zero_hit[i] = false;
            }
        }

        let t_new = if dt == clock - t { clock } else { t + dt };

        for i in 0..npoints {
            if zero_hit[i] {
                z[i] = 0.0;
            } else {
                z[i] = (z[i] + rates[i] * dt).max(0.0);
            }
        }
        for (r, state) in robots.iter_mut().enumerate() {
            let seg = &segments[r];
            if dt_robot[r] == dt {
                // Snap to the boundary and enter the next segment.
                let old_cell = seg.cell[state.seg];
                if state.seg + 1 < seg.start.len() {
                    state.seg += 1;
                    state.theta = seg.start[state.seg];
                } else {
                    state.seg = 0;
                    state.theta = 0.0;
                }
                if seg.cell[state.seg] != old_cell {
                    state.factor = draw_factor(&mut rng, cfg.speed_noise);
                }
            } else {
                let recip = problem.robots[r].reciprocal[seg.cell[state.seg]] * state.factor;
                state.theta = (state.theta + dt / recip).min(seg.end[state.seg]);
            }
        }
        if t_new == clock {
            next_quarter = (next_quarter + 1).min(quarters.len() - 1);
        }
        t = t_new;
        for (r, state) in robots.iter().enumerate() {
            thetas[r] = state.theta;
        }
        recorder.observe(t, &thetas, &z);
    }

    Ok(recorder.finish(steps, thetas, z, scale_of(problem)))
}

fn run_euler(problem: &SimProblem, cfg: &SimConfig, dt: f64) -> Result<SimResult> {
    let npoints = problem.points.len();
    let nrobots = problem.robots.len();
    let nsteps = (cfg.horizon / dt).ceil() as usize;
    if nsteps > cfg.max_events {
        return Err(Error::InvalidSimConfig(format!(
            "{nsteps} steps exceed the budget of {}; raise the step or \
             max_events",
            cfg.max_events
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut thetas: Vec<f64> = (0..nrobots).map(|r| phase_of(problem, cfg, r)).collect();
    let mut cells: Vec<usize> = problem
        .robots
        .iter()
        .zip(&thetas)
        .map(|(r, &th)| cell_of(th, r.reciprocal.len()))
        .collect();
    let mut factors: Vec<f64> = (0..nrobots)
        .map(|_| draw_factor(&mut rng, cfg.speed_noise))
        .collect();
    let mut z = initial_fields(problem, cfg);
    let mut recorder = Recorder::new(npoints, cfg);
    recorder.observe(0.0, &thetas, &z);

    for step in 1..=nsteps {
        let t = if step == nsteps {
            cfg.horizon
        } else {
            step as f64 * dt
        };
        let h = if step == nsteps {
            cfg.horizon - (nsteps - 1) as f64 * dt
        } else {
            dt
        };
        for i in 0..npoints {
            let p = &problem.points[i];
            let noise = if cfg.production_noise > 0.0 {
                rng.random_range(-cfg.production_noise..=cfg.production_noise)
            } else {
                0.0
            };
            let mut g = p.production + cfg.production_offset + noise;
            for r in 0..nrobots {
                if problem.robots[r].coverage[i].contains(thetas[r]) {
                    g -= p.consumption[r];
                }
            }
            if z[i] > 0.0 {
                z[i] = (z[i] + g * h).max(0.0);
            } else if g > 0.0 {
                z[i] = g * h;
            }
        }
        for r in 0..nrobots {
            let robot = &problem.robots[r];
            let recip = robot.reciprocal[cells[r]] * factors[r];
            thetas[r] = (thetas[r] + h / recip).rem_euclid(1.0);
            let cell = cell_of(thetas[r], robot.reciprocal.len());
            if cell != cells[r] {
                cells[r] = cell;
                factors[r] = draw_factor(&mut rng, cfg.speed_noise);
            }
        }
        recorder.observe(t, &thetas, &z);
    }

    Ok(recorder.finish(nsteps, thetas, z, scale_of(problem)))
}

fn cell_of(theta: f64, n: usize) -> usize {
    ((theta.rem_euclid(1.0) * n as f64) as usize).min(n - 1)
}

/// Summary of the repeated runs at one noise level.
#[derive(Clone, Debug)]
pub struct SweepStats {
    pub level: f64,
    /// Per trial, the worst field value seen anywhere.
    pub peaks: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub stddev: f64,
    pub divergent: usize,
}

fn split_mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut v = x;
    v = (v ^ (v >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    v = (v ^ (v >> 27)).wrapping_mul(0x94D049BB133111EB);
    v ^ (v >> 31)
}

/// Which knob a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    /// Per-step production disturbance amplitude.
    ProductionNoise,
    /// Constant production inflation.
    ProductionOffset,
    /// Relative speed perturbation amplitude.
    SpeedNoise,
}

/// Repeat the simulation across values of one perturbation knob; each
/// trial reseeds deterministically from the base seed.
pub fn parameter_sweep(
    problem: &SimProblem,
    base: &SimConfig,
    param: SweepParam,
    levels: &[f64],
    trials: usize,
) -> Result<Vec<SweepStats>> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial per level".into()));
    }
    levels
        .iter()
        .enumerate()
        .map(|(li, &level)| {
            let runs: Result<Vec<(f64, bool)>> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut cfg = base.clone();
                    match param {
                        SweepParam::ProductionNoise => cfg.production_noise = level,
                        SweepParam::ProductionOffset => cfg.production_offset = level,
                        SweepParam::SpeedNoise => cfg.speed_noise = level,
                    }
                    cfg.seed = split_mix(
                        base.seed ^ split_mix((li * trials + trial) as u64),
                    );
                    cfg.trace = TraceSpec::Off;
                    let res = simulate(problem, &cfg)?;
                    let peak = res.max_fields.iter().copied().fold(0.0f64, f64::max);
                    Ok((peak, res.verdict == Verdict::Divergent))
                })
                .collect();
            let runs = runs?;
            let peaks: Vec<f64> = runs.iter().map(|&(p, _)| p).collect();
            let divergent = runs.iter().filter(|&&(_, d)| d).count();
            let mean = peaks.iter().sum::<f64>() / peaks.len() as f64;
            let var = peaks.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>()
                / peaks.len() as f64;
            Ok(SweepStats {
                level,
                min: peaks.iter().copied().fold(f64::INFINITY, f64::min),
                max: peaks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                stddev: var.sqrt(),
                mean,
                peaks,
                divergent,
            })
        })
        .collect()
}

/// Sweep the production-noise amplitude.
pub fn noise_sweep(
    problem: &SimProblem,
    base: &SimConfig,
    levels: &[f64],
    trials: usize,
) -> Result<Vec<SweepStats>> {
    parameter_sweep(problem, base, SweepParam::ProductionNoise, levels, trials)
}

/// Largest offset in the grid whose run stays bounded, alongside each
/// grid value's verdict. `None` when every probed offset diverges.
pub fn epsilon_threshold(
    problem: &SimProblem,
    base: &SimConfig,
    grid: &[f64],
) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    let verdicts: Result<Vec<(f64, Verdict)>> = grid
        .par_iter()
        .map(|&eps| {
            let mut cfg = base.clone();
            cfg.production_offset = eps;
            cfg.trace = TraceSpec::Off;
            Ok((eps, simulate(problem, &cfg)?.verdict))
        })
        .collect();
    for (eps, verdict) in verdicts? {
        if verdict == Verdict::Bounded && best.is_none_or(|b| eps > b) {
            best = Some(eps);
        }
    }
    Ok(best)
}
