//! Assembly and solution of the speed-profile synthesis programs.
//!
//! All four programs share one ingredient: per basis cell, how much covered
//! arc a point gains from slowing down there versus how much cycle time the
//! whole loop pays. For a point with rates (p, c) and coverage F,
//!
//! ```text
//! K_j = |cell_j intersect F| - (p / c) * |cell_j|
//! ```
//!
//! so `sum_j alpha_j K_j = tau - (p/c) T`, which is positive exactly when
//! the point is stable under the profile. The programs:
//!
//! * feasibility: find alpha in the speed box with all K-sums positive;
//! * max margin: maximize B with every K-sum >= B (B also yields a
//!   robustness bound against production-rate errors);
//! * min peak: minimize the worst steady-state field peak B, a linear
//!   function of alpha through the growth-minus-drain terms X;
//! * team synthesis: per-robot normalized profiles plus cycle frequencies,
//!   coupling every robot's drain contribution into one stability row per
//!   point.
//!
//! Solutions are re-checked against the generating constraints; an optimum
//! that does not verify is reported as numerical trouble, never returned
//! silently.

use crate::controller::ReciprocalProfile;
use crate::coverage::{arc_overlap, CoverageSet, Decomposition};
use crate::lp::{Cmp, LinearProgram, Sense, SolveStatus};
use crate::task::{PersistentTask, PointRates};
use crate::{Error, Result};

/// Strictness surrogate for strict inequalities, relative to production.
fn delta(productions: impl Iterator<Item = f64>) -> f64 {
    1e-6 * productions.fold(0.0f64, f64::max)
}

/// Lower bound keeping team cycle frequencies strictly positive.
const DELTA_F: f64 = 1e-9;

/// A single-robot synthesis instance: rates, coverage, and reciprocal-speed
/// bounds per cell, all in normalized cycle units.
#[derive(Clone, Debug)]
pub struct SingleInstance {
    pub points: Vec<PointRates>,
    pub coverage: Vec<CoverageSet>,
    /// Per-cell bounds on alpha, seconds per unit theta:
    /// `alpha_lo = L / v_max`, `alpha_hi = L / v_min`.
    pub alpha_lo: Vec<f64>,
    pub alpha_hi: Vec<f64>,
    /// Replaces the default strictness surrogate when set.
    pub delta_override: Option<f64>,
}

impl SingleInstance {
    pub fn n(&self) -> usize {
        self.alpha_lo.len()
    }

    /// Extract the single-robot instance of a task given its coverage map
    /// (one coverage set per point, robot 0).
    pub fn from_task(task: &PersistentTask, coverage: &[CoverageSet]) -> Result<SingleInstance> {
        if task.robots.len() != 1 {
            return Err(Error::InvalidTask(vec![format!(
                "single-robot synthesis on a {}-robot task",
                task.robots.len()
            )]));
        }
        let (alpha_lo, alpha_hi) = task.alpha_bounds(0);
        Ok(SingleInstance {
            points: task.points.iter().map(|p| p.rates()).collect(),
            coverage: coverage.to_vec(),
            alpha_lo,
            alpha_hi,
            delta_override: None,
        })
    }

    fn check(&self) {
        assert_eq!(self.points.len(), self.coverage.len());
        assert_eq!(self.alpha_lo.len(), self.alpha_hi.len());
        assert!(!self.alpha_lo.is_empty());
    }

    fn delta(&self) -> f64 {
        self.delta_override
            .unwrap_or_else(|| delta(self.points.iter().map(|p| p.production)))
    }
}

/// Cell-j stability coefficient of one point (height-1 rectangular basis).
pub fn compute_k(cov: &CoverageSet, rates: &PointRates, j: usize, n: usize) -> f64 {
    cov.cell_overlap(j, n) - (rates.production / rates.consumption) / n as f64
}

/// Cell-j coefficient of the steady-state peak candidate `X[k, b]`: growth
/// accumulated from exit `y[k-b]` all the way to entry `x[k+1]`, minus the
/// drain available in the `b` covered arcs passed on the way. Indices are
/// 0-based and circular; `b` must lie in `0..l`.
pub fn compute_x(
    x: &[f64],
    y: &[f64],
    rates: &PointRates,
    k: usize,
    b: usize,
    j: usize,
    n: usize,
) -> f64 {
    let l = x.len();
    assert_eq!(l, y.len());
    assert!(k < l, "arc index {k} out of range for {l} arcs");
    assert!(b < l, "lookback {b} out of range for {l} arcs");
    let (ca, cb) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
    let grow_from = y[(k + l - b) % l];
    let grow_to = x[(k + 1) % l];
    let mut v = rates.production * arc_overlap(grow_from, grow_to, ca, cb);
    for w in 0..b {
        let idx = (k + l - w) % l;
        v -= rates.consumption * arc_overlap(x[idx], y[idx], ca, cb);
    }
    v
}

/// Feasibility program: any profile with every stability sum positive.
pub fn build_feasibility_lp(inst: &SingleInstance) -> LinearProgram {
    inst.check();
    let n = inst.n();
    let mut lp = LinearProgram::new(Sense::Minimize, n);
    for j in 0..n {
        lp.set_bounds(j, inst.alpha_lo[j], inst.alpha_hi[j]);
        lp.set_name(j, format!("alpha_{}", j + 1));
    }
    let d = inst.delta();
    for (rates, cov) in inst.points.iter().zip(&inst.coverage) {
        let row: Vec<(usize, f64)> = (0..n).map(|j| (j, compute_k(cov, rates, j, n))).collect();
        lp.add_row(Cmp::Ge, d, &row);
    }
    lp
}

/// Max-margin program: maximize B with every stability sum at least B.
pub fn build_margin_lp(inst: &SingleInstance) -> LinearProgram {
    inst.check();
    let n = inst.n();
    let mut lp = LinearProgram::new(Sense::Maximize, n + 1);
    for j in 0..n {
        lp.set_bounds(j, inst.alpha_lo[j], inst.alpha_hi[j]);
        lp.set_name(j, format!("alpha_{}", j + 1));
    }
    lp.set_name(n, "B");
    lp.set_objective(n, 1.0);
    for (rates, cov) in inst.points.iter().zip(&inst.coverage) {
        let mut row: Vec<(usize, f64)> =
            (0..n).map(|j| (j, compute_k(cov, rates, j, n))).collect();
        row.push((n, -1.0));
        lp.add_row(Cmp::Ge, 0.0, &row);
    }
    lp
}

/// Min-peak program: minimize B bounding every steady-state peak candidate,
/// with stability kept strictly positive. Full-circle points pin their
/// steady state at zero, so they contribute only their (trivially
/// satisfiable) stability row; so do never-covered points, whose stability
/// row is unsatisfiable and correctly drives the program infeasible.
pub fn build_minpeak_lp(inst: &SingleInstance) -> LinearProgram {
    inst.check();
    let n = inst.n();
    let mut lp = LinearProgram::new(Sense::Minimize, n + 1);
    for j in 0..n {
        lp.set_bounds(j, inst.alpha_lo[j], inst.alpha_hi[j]);
        lp.set_name(j, format!("alpha_{}", j + 1));
    }
    lp.set_name(n, "B");
    lp.set_objective(n, 1.0);
    let d = inst.delta();
    for (rates, cov) in inst.points.iter().zip(&inst.coverage) {
        let row: Vec<(usize, f64)> = (0..n).map(|j| (j, compute_k(cov, rates, j, n))).collect();
        lp.add_row(Cmp::Ge, d, &row);
        if let Decomposition::Arcs { x, y } = cov.decompose() {
            let l = x.len();
            for k in 0..l {
                for b in 0..l {
                    let mut row: Vec<(usize, f64)> = (0..n)
                        .map(|j| (j, compute_x(&x, &y, rates, k, b, j, n)))
                        .collect();
                    row.push((n, -1.0));
                    lp.add_row(Cmp::Le, 0.0, &row);
                }
            }
        }
    }
    lp
}

/// A solved single-robot program.
#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub profile: ReciprocalProfile,
    /// Optimal objective: margin B or peak B; `None` for feasibility.
    pub value: Option<f64>,
    /// Per-point `sum_j alpha_j K_j = tau - (p/c) T`, seconds.
    pub k_slacks: Vec<f64>,
    /// Per-point absolute margins `c tau - p T`, field units.
    pub margins: Vec<f64>,
    pub cycle_time: f64,
    pub iterations: usize,
}

/// Outcome of a synthesis program.
#[derive(Clone, Debug)]
pub enum Outcome<T> {
    Solved(T),
    Infeasible,
    /// The solver hit its iteration cap or its solution failed
    /// verification.
    NumericalTrouble,
}

impl<T> Outcome<T> {
    pub fn solved(self) -> Option<T> {
        match self {
            Outcome::Solved(t) => Some(t),
            _ => None,
        }
    }

    pub fn expect_solved(self, what: &str) -> T {
        match self {
            Outcome::Solved(t) => t,
            Outcome::Infeasible => panic!("{what}: infeasible"),
            Outcome::NumericalTrouble => panic!("{what}: numerical trouble"),
        }
    }
}

fn single_result(
    inst: &SingleInstance,
    alpha: Vec<f64>,
    value: Option<f64>,
    iterations: usize,
) -> SynthesisResult {
    let profile = ReciprocalProfile::direct(alpha).expect("solver respects positive bounds");
    let cycle_time = profile.cycle_time();
    let k_slacks: Vec<f64> = inst
        .points
        .iter()
        .zip(&inst.coverage)
        .map(|(r, cov)| profile.coverage_time(cov) - (r.production / r.consumption) * cycle_time)
        .collect();
    let margins = inst
        .points
        .iter()
        .zip(&inst.coverage)
        .map(|(r, cov)| {
            r.consumption * profile.coverage_time(cov) - r.production * cycle_time
        })
        .collect();
    SynthesisResult {
        profile,
        value,
        k_slacks,
        margins,
        cycle_time,
        iterations,
    }
}

fn run_single(
    inst: &SingleInstance,
    lp: &LinearProgram,
    keep_value: bool,
) -> Outcome<SynthesisResult> {
    let n = inst.n();
    let sol = lp.solve();
    match sol.status {
        SolveStatus::Optimal => {
            let alpha = sol.x[..n].to_vec();
            let value = keep_value.then_some(sol.objective);
            Outcome::Solved(single_result(inst, alpha, value, sol.iterations))
        }
        SolveStatus::Infeasible => Outcome::Infeasible,
        SolveStatus::Unbounded | SolveStatus::NumericalTrouble => Outcome::NumericalTrouble,
    }
}

/// Find any stabilizing profile within the speed box.
pub fn synthesize_feasibility(inst: &SingleInstance) -> Outcome<SynthesisResult> {
    run_single(inst, &build_feasibility_lp(inst), false)
}

/// Maximize the uniform stability slack B. Always feasible; the task is
/// stabilizable exactly when the returned B is positive.
pub fn synthesize_max_margin(inst: &SingleInstance) -> Outcome<SynthesisResult> {
    run_single(inst, &build_margin_lp(inst), true)
}

/// Minimize the worst steady-state peak over stabilizing profiles.
pub fn synthesize_min_peak(inst: &SingleInstance) -> Outcome<SynthesisResult> {
    run_single(inst, &build_minpeak_lp(inst), true)
}

/// Production-offset robustness from a max-margin solution: the field
/// stays bounded under any production inflation up to `eps[i]` at point i,
/// `eps[i] = B * c_i / T` with `B = min_i k_slack`. The scalar bound is the
/// minimum entry. Errors when the profile is not stabilizing.
pub fn robustness_bounds(res: &SynthesisResult, inst: &SingleInstance) -> Result<(Vec<f64>, f64)> {
    let b = res.k_slacks.iter().copied().fold(f64::INFINITY, f64::min);
    if !(b > 0.0) {
        return Err(Error::NotStabilizing {
            growth_per_cycle: -b,
        });
    }
    let t = res.cycle_time;
    let eps: Vec<f64> = inst
        .points
        .iter()
        .map(|r| b * r.consumption / t)
        .collect();
    let scalar = eps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((eps, scalar))
}

/// One robot of a team-synthesis instance.
#[derive(Clone, Debug)]
pub struct TeamRobot {
    pub coverage: Vec<CoverageSet>,
    /// Drain rate at each point while this robot covers it.
    pub consumption: Vec<f64>,
    /// Per-cell speed limits in theta-units (physical speed over path
    /// length), strictly positive.
    pub vmin_theta: Vec<f64>,
    pub vmax_theta: Vec<f64>,
}

impl TeamRobot {
    pub fn n(&self) -> usize {
        self.vmin_theta.len()
    }
}

/// A team-synthesis instance.
#[derive(Clone, Debug)]
pub struct TeamInstance {
    pub production: Vec<f64>,
    pub robots: Vec<TeamRobot>,
    /// Replaces the default strictness surrogate when set.
    pub delta_override: Option<f64>,
}

impl TeamInstance {
    /// Extract the team instance of a task given its full coverage map
    /// (`coverage[r][i]`). Robots without their own drain-rate tables fall
    /// back to the points' rates.
    pub fn from_task(task: &PersistentTask, coverage: &[Vec<CoverageSet>]) -> TeamInstance {
        let robots = task
            .robots
            .iter()
            .zip(coverage)
            .map(|(robot, cov)| {
                let len = robot.path.length();
                TeamRobot {
                    coverage: cov.clone(),
                    consumption: robot.consumption.clone().unwrap_or_else(|| {
                        task.points.iter().map(|p| p.consumption).collect()
                    }),
                    vmin_theta: robot.v_min.iter().map(|v| v / len).collect(),
                    vmax_theta: robot.v_max.iter().map(|v| v / len).collect(),
                }
            })
            .collect();
        TeamInstance {
            production: task.points.iter().map(|p| p.production).collect(),
            robots,
            delta_override: None,
        }
    }

    fn check(&self) {
        assert!(!self.robots.is_empty());
        for r in &self.robots {
            assert_eq!(r.coverage.len(), self.production.len());
            assert_eq!(r.consumption.len(), self.production.len());
            assert_eq!(r.vmin_theta.len(), r.vmax_theta.len());
            assert!(!r.vmin_theta.is_empty());
        }
    }

    /// Column index of `alpha[r][j]` in the team programs.
    fn alpha_col(&self, r: usize, j: usize) -> usize {
        self.robots[..r].iter().map(TeamRobot::n).sum::<usize>() + j
    }

    fn freq_col(&self, r: usize) -> usize {
        self.robots.iter().map(TeamRobot::n).sum::<usize>() + r
    }
}

/// Drain coefficient of robot `r`'s cell `j` at point `i`, unit-integral
/// basis: `c_r(q_i) * integral of beta_rj over F_r(q_i)`.
pub fn compute_k_team(robot: &TeamRobot, i: usize, j: usize) -> f64 {
    let n = robot.n();
    robot.consumption[i]
        * if robot.coverage[i].is_full_circle() {
            1.0
        } else {
            n as f64 * robot.coverage[i].cell_overlap(j, n)
        }
}

/// Team program. With `margin` the uniform slack over production is
/// maximized (always feasible); without it, any admissible team profile is
/// accepted or the program is infeasible.
pub fn build_team_lp(inst: &TeamInstance, margin: bool) -> LinearProgram {
    inst.check();
    let ncols: usize = inst.robots.iter().map(TeamRobot::n).sum::<usize>()
        + inst.robots.len()
        + usize::from(margin);
    let sense = if margin {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut lp = LinearProgram::new(sense, ncols);
    let bcol = ncols - 1;
    for (r, robot) in inst.robots.iter().enumerate() {
        for j in 0..robot.n() {
            let col = inst.alpha_col(r, j);
            lp.set_bounds(col, 0.0, f64::INFINITY);
            lp.set_name(col, format!("alpha_{}_{}", r + 1, j + 1));
        }
        let fc = inst.freq_col(r);
        lp.set_bounds(fc, DELTA_F, f64::INFINITY);
        lp.set_name(fc, format!("f_{}", r + 1));
    }
    if margin {
        lp.set_name(bcol, "B");
        lp.set_objective(bcol, 1.0);
    }

    let d = inst
        .delta_override
        .unwrap_or_else(|| delta(inst.production.iter().copied()));
    for i in 0..inst.production.len() {
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (r, robot) in inst.robots.iter().enumerate() {
            for j in 0..robot.n() {
                let k = compute_k_team(robot, i, j);
                if k != 0.0 {
                    row.push((inst.alpha_col(r, j), k));
                }
            }
        }
        if margin {
            row.push((bcol, -1.0));
            lp.add_row(Cmp::Ge, inst.production[i], &row);
        } else {
            lp.add_row(Cmp::Ge, inst.production[i] + d, &row);
        }
    }
    for (r, robot) in inst.robots.iter().enumerate() {
        let unit: Vec<(usize, f64)> = (0..robot.n())
            .map(|j| (inst.alpha_col(r, j), 1.0))
            .collect();
        lp.add_row(Cmp::Eq, 1.0, &unit);
        // Speed box through the frequency: on cell j the physical
        // reciprocal speed is alpha_rj * n / f_r, so
        // alpha_rj * n * vmin <= f_r <= alpha_rj * n * vmax.
        let n = robot.n() as f64;
        for j in 0..robot.n() {
            let col = inst.alpha_col(r, j);
            let fc = inst.freq_col(r);
            lp.add_row(
                Cmp::Ge,
                0.0,
                &[(fc, 1.0), (col, -n * robot.vmin_theta[j])],
            );
            lp.add_row(
                Cmp::Le,
                0.0,
                &[(fc, 1.0), (col, -n * robot.vmax_theta[j])],
            );
        }
    }
    lp
}

/// A solved team program.
#[derive(Clone, Debug)]
pub struct TeamSynthesisResult {
    /// Normalized profiles carrying their cycle frequencies.
    pub profiles: Vec<ReciprocalProfile>,
    /// Margin B when the margin variant was solved.
    pub value: Option<f64>,
    /// Per-point team margins, field units per second.
    pub margins: Vec<f64>,
    pub cycle_times: Vec<f64>,
    pub iterations: usize,
}

/// Solve the team program.
pub fn synthesize_team(inst: &TeamInstance, margin: bool) -> Outcome<TeamSynthesisResult> {
    let lp = build_team_lp(inst, margin);
    let sol = lp.solve();
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Outcome::Infeasible,
        _ => return Outcome::NumericalTrouble,
    }
    let mut profiles = Vec::with_capacity(inst.robots.len());
    for (r, robot) in inst.robots.iter().enumerate() {
        let alpha: Vec<f64> = (0..robot.n())
            .map(|j| sol.x[inst.alpha_col(r, j)].max(1e-300))
            .collect();
        let f = sol.x[inst.freq_col(r)];
        match ReciprocalProfile::normalized(alpha, f) {
            Ok(p) => profiles.push(p),
            Err(_) => return Outcome::NumericalTrouble,
        }
    }
    let margins: Vec<f64> = (0..inst.production.len())
        .map(|i| {
            let team: Vec<(&ReciprocalProfile, &CoverageSet, f64)> = profiles
                .iter()
                .zip(&inst.robots)
                .map(|(p, robot)| (p, &robot.coverage[i], robot.consumption[i]))
                .collect();
            crate::controller::team_margin(&team, inst.production[i])
        })
        .collect();
    let cycle_times = profiles.iter().map(ReciprocalProfile::cycle_time).collect();
    Outcome::Solved(TeamSynthesisResult {
        profiles,
        value: margin.then_some(sol.objective),
        margins,
        cycle_times,
        iterations: sol.iterations,
    })
}
