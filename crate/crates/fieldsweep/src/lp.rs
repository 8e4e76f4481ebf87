//! Dense linear-programming support for the synthesis programs.
//!
//! The solver is a two-phase simplex on a dense tableau with bounded
//! variables: box bounds are handled in the ratio test (including bound
//! flips) instead of as extra rows. Pivoting uses the largest reduced cost
//! and switches to Bland's rule after a run of degenerate steps, so it
//! cannot cycle. Every scan is in index order, which makes the solver fully
//! deterministic: the same program always produces the same pivots and the
//! same solution.
//!
//! Solutions are re-verified against the original rows and bounds before
//! they are returned; a solution that fails that check comes back as
//! [`SolveStatus::NumericalTrouble`], never as a silently wrong answer.

use std::fmt::Write as _;

/// Optimization direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row comparison operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// Outcome of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration cap hit or the verification of the final point failed.
    NumericalTrouble,
}

/// A solved program: status, primal point, and objective value.
#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    /// Values of the structural variables; empty unless `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Row {
    cmp: Cmp,
    rhs: f64,
    coeffs: Vec<f64>,
}

/// A linear program over box-bounded variables with dense rows.
pub struct LinearProgram {
    sense: Sense,
    nvars: usize,
    objective: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    rows: Vec<Row>,
    names: Vec<String>,
}

impl LinearProgram {
    pub fn new(sense: Sense, nvars: usize) -> Self {
        LinearProgram {
            sense,
            nvars,
            objective: vec![0.0; nvars],
            lo: vec![f64::NEG_INFINITY; nvars],
            up: vec![f64::INFINITY; nvars],
            rows: Vec::new(),
            names: (0..nvars).map(|j| format!("x{}", j + 1)).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    /// Box bounds for a variable; use infinities for one-sided or free.
    pub fn set_bounds(&mut self, var: usize, lo: f64, up: f64) {
        assert!(lo <= up, "empty bound interval for variable {var}");
        self.lo[var] = lo;
        self.up[var] = up;
    }

    pub fn set_name(&mut self, var: usize, name: impl Into<String>) {
        self.names[var] = name.into();
    }

    /// Add `sum coeffs . x  cmp  rhs` given sparse coefficients.
    pub fn add_row(&mut self, cmp: Cmp, rhs: f64, coeffs: &[(usize, f64)]) {
        let mut dense = vec![0.0; self.nvars];
        for &(j, a) in coeffs {
            dense[j] += a;
        }
        self.rows.push(Row {
            cmp,
            rhs,
            coeffs: dense,
        });
    }

    /// Write the program in LP interchange text format.
    pub fn write_lp_format(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        let mut s = String::new();
        s.push_str(match self.sense {
            Sense::Minimize => "Minimize\n obj:",
            Sense::Maximize => "Maximize\n obj:",
        });
        let mut first = true;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(s, " {} {} {}", sign_word(c, first), c.abs(), self.names[j]);
                first = false;
            }
        }
        if first {
            s.push_str(" 0 x1");
        }
        s.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(s, " c{}:", i + 1);
            let mut first = true;
            for (j, &a) in row.coeffs.iter().enumerate() {
                if a != 0.0 {
                    let _ = write!(s, " {} {} {}", sign_word(a, first), a.abs(), self.names[j]);
                    first = false;
                }
            }
            if first {
                s.push_str(" 0 x1");
            }
            let op = match row.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(s, " {} {}", op, row.rhs);
        }
        s.push_str("Bounds\n");
        for j in 0..self.nvars {
            let (lo, up) = (self.lo[j], self.up[j]);
            if lo.is_infinite() && up.is_infinite() {
                let _ = writeln!(s, " {} free", self.names[j]);
            } else if up.is_infinite() {
                let _ = writeln!(s, " {} <= {}", lo, self.names[j]);
            } else if lo.is_infinite() {
                let _ = writeln!(s, " {} <= {}", self.names[j], up);
            } else {
                let _ = writeln!(s, " {} <= {} <= {}", lo, self.names[j], up);
            }
        }
        s.push_str("End\n");
        out.write_all(s.as_bytes())
    }

    /// Solve with the two-phase bounded-variable simplex.
    pub fn solve(&self) -> Solution {
        let mut t = Tableau::build(self);
        let sol = t.run(self);
        self.verify(sol)
    }

    /// Check a claimed optimal point against rows and bounds; downgrade to
    /// `NumericalTrouble` if anything is violated beyond tolerance.
    fn verify(&self, sol: Solution) -> Solution {
        if sol.status != SolveStatus::Optimal {
            return sol;
        }
        let x = &sol.x;
        for j in 0..self.nvars {
            let tol = 1e-7 * (1.0 + self.lo[j].abs().min(self.up[j].abs()));
            if x[j] < self.lo[j] - tol || x[j] > self.up[j] + tol {
                return Solution {
                    status: SolveStatus::NumericalTrouble,
                    x: Vec::new(),
                    objective: 0.0,
                    iterations: sol.iterations,
                };
            }
        }
        for row in &self.rows {
            let mut lhs = 0.0;
            let mut scale = 1.0 + row.rhs.abs();
            for (j, &a) in row.coeffs.iter().enumerate() {
                lhs += a * x[j];
                scale += (a * x[j]).abs();
            }
            let viol = match row.cmp {
                Cmp::Le => lhs - row.rhs,
                Cmp::Ge => row.rhs - lhs,
                Cmp::Eq => (lhs - row.rhs).abs(),
            };
            if viol > 1e-7 * scale {
                return Solution {
                    status: SolveStatus::NumericalTrouble,
                    x: Vec::new(),
                    objective: 0.0,
                    iterations: sol.iterations,
                };
            }
        }
        sol
    }
}

fn sign_word(c: f64, first: bool) -> &'static str {
    if c < 0.0 {
        "-"
    } else if first {
        ""
    } else {
        "+"
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    FreeZero,
}

const EPS_COST: f64 = 1e-9;
const EPS_PIVOT: f64 = 1e-9;
const EPS_RATIO: f64 = 1e-10;
/// Consecutive degenerate pivots before Bland's rule takes over.
const DEGEN_LIMIT: usize = 64;

struct Tableau {
    m: usize,
    ncols: usize,
    nstruct: usize,
    /// Row-major `B^-1 [A | slacks | artificials]`.
    a: Vec<f64>,
    /// Current values of the basic variables, aligned with `basis`.
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    lo: Vec<f64>,
    up: Vec<f64>,
    /// Reduced costs for the current phase.
    d: Vec<f64>,
    artificials: Vec<usize>,
    bland: bool,
    degen_run: usize,
    iterations: usize,
    feas_tol: f64,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        let n = lp.nvars;
        // Column layout: structural, then one slack per row, then artificials
        // for rows whose slack start violates its own bounds.
        let mut lo = lp.lo.clone();
        let mut up = lp.up.clone();
        let mut state: Vec<VarState> = (0..n)
            .map(|j| {
                if lp.lo[j].is_finite() {
                    VarState::AtLower
                } else if lp.up[j].is_finite() {
                    VarState::AtUpper
                } else {
                    VarState::FreeZero
                }
            })
            .collect();
        for row in &lp.rows {
            let (slo, sup) = match row.cmp {
                Cmp::Le => (0.0, f64::INFINITY),
                Cmp::Ge => (f64::NEG_INFINITY, 0.0),
                Cmp::Eq => (0.0, 0.0),
            };
            lo.push(slo);
            up.push(sup);
            state.push(VarState::Basic); // provisional; fixed up below
        }

        let nonbasic_value = |j: usize, st: VarState, lo: &[f64], up: &[f64]| match st {
            VarState::AtLower => lo[j],
            VarState::AtUpper => up[j],
            VarState::FreeZero => 0.0,
            VarState::Basic => unreachable!(),
        };

        // Residual per row with structural variables at their start values.
        let mut resid = vec![0.0; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let mut r = row.rhs;
            for j in 0..n {
                r -= row.coeffs[j] * nonbasic_value(j, state[j], &lo, &up);
            }
            resid[i] = r;
        }

        let mut basis = vec![0usize; m];
        let mut beta = vec![0.0; m];
        let mut artificials = Vec::new();
        let mut art_sign = vec![0.0f64; m];
        let mut max_rhs = 0.0f64;
        for i in 0..m {
            max_rhs = max_rhs.max(lp.rows[i].rhs.abs());
            let s = n + i;
            if resid[i] >= lo[s] - 1e-12 && resid[i] <= up[s] + 1e-12 {
                // Slack can open the basis for this row.
                basis[i] = s;
                beta[i] = resid[i].clamp(lo[s], up[s]);
            } else {
                // Park the slack at the bound nearest the residual and cover
                // the rest with an artificial.
                let parked = if resid[i] > up[s] { up[s] } else { lo[s] };
                state[s] = if parked == up[s] && up[s].is_finite() {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                let need = resid[i] - parked;
                let sign = if need >= 0.0 { 1.0 } else { -1.0 };
                art_sign[i] = sign;
                let col = n + m + artificials.len();
                artificials.push(col);
                basis[i] = col;
                beta[i] = need.abs();
                lo.push(0.0);
                up.push(f64::INFINITY);
                state.push(VarState::Basic);
            }
        }

        let ncols = n + m + artificials.len();
        let mut a = vec![0.0; m * ncols];
        for i in 0..m {
            let sign = if art_sign[i] != 0.0 { art_sign[i] } else { 1.0 };
            let row = &mut a[i * ncols..(i + 1) * ncols];
            for j in 0..n {
                row[j] = sign * lp.rows[i].coeffs[j];
            }
            row[n + i] = sign;
            if art_sign[i] != 0.0 {
                row[basis[i]] = 1.0;
            }
        }

        Tableau {
            m,
            ncols,
            nstruct: n,
            a,
            beta,
            basis,
            state,
            lo,
            up,
            d: vec![0.0; ncols],
            artificials,
            bland: false,
            degen_run: 0,
            iterations: 0,
            feas_tol: 1e-7 * (1.0 + max_rhs),
        }
    }

    fn run(&mut self, lp: &LinearProgram) -> Solution {
        let fail = |status: SolveStatus, iterations: usize| Solution {
            status,
            x: Vec::new(),
            objective: 0.0,
            iterations,
        };
        let max_iter = 20 * (self.m + self.ncols) + 2000;

        if !self.artificials.is_empty() {
            let mut cost = vec![0.0; self.ncols];
            for &j in &self.artificials {
                cost[j] = 1.0;
            }
            self.reset_costs(&cost);
            match self.iterate(max_iter) {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded => return fail(SolveStatus::NumericalTrouble, self.iterations),
                PhaseEnd::IterationCap => {
                    return fail(SolveStatus::NumericalTrouble, self.iterations)
                }
            }
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.nstruct + self.m)
                .map(|i| self.beta[i].max(0.0))
                .sum();
            if infeas > self.feas_tol {
                return fail(SolveStatus::Infeasible, self.iterations);
            }
            // Pin artificials at zero for phase 2; basic ones stay, degenerate.
            for &j in &self.artificials.clone() {
                self.lo[j] = 0.0;
                self.up[j] = 0.0;
                if self.state[j] != VarState::Basic {
                    self.state[j] = VarState::AtLower;
                }
            }
            for i in 0..self.m {
                if self.basis[i] >= self.nstruct + self.m {
                    self.beta[i] = 0.0;
                }
            }
        }

        let mut cost = vec![0.0; self.ncols];
        let flip = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for j in 0..self.nstruct {
            cost[j] = flip * lp.objective[j];
        }
        self.reset_costs(&cost);
        self.bland = false;
        self.degen_run = 0;
        match self.iterate(max_iter) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => return fail(SolveStatus::Unbounded, self.iterations),
            PhaseEnd::IterationCap => return fail(SolveStatus::NumericalTrouble, self.iterations),
        }

        let x = self.extract();
        let objective: f64 = (0..self.nstruct).map(|j| lp.objective[j] * x[j]).sum();
        Solution {
            status: SolveStatus::Optimal,
            x,
            objective,
            iterations: self.iterations,
        }
    }

    /// Reduced costs `d = c - c_B . B^-1 A` for the given cost vector.
    fn reset_costs(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.ncols..(i + 1) * self.ncols];
                for j in 0..self.ncols {
                    self.d[j] -= cb * row[j];
                }
            }
        }
    }

    fn entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (col, dir, score)
        for j in 0..self.ncols {
            if self.state[j] == VarState::Basic || self.lo[j] >= self.up[j] {
                continue;
            }
            let d = self.d[j];
            let cand = match self.state[j] {
                VarState::AtLower => (d < -EPS_COST).then_some((1.0, -d)),
                VarState::AtUpper => (d > EPS_COST).then_some((-1.0, d)),
                VarState::FreeZero => {
                    if d < -EPS_COST {
                        Some((1.0, -d))
                    } else if d > EPS_COST {
                        Some((-1.0, d))
                    } else {
                        None
                    }
                }
                VarState::Basic => unreachable!(),
            };
            if let Some((dir, score)) = cand {
                if self.bland {
                    return Some((j, dir));
                }
                if best.map_or(true, |(_, _, s)| score > s) {
                    best = Some((j, dir, score));
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn iterate(&mut self, max_iter: usize) -> PhaseEnd {
        loop {
            if self.iterations >= max_iter {
                return PhaseEnd::IterationCap;
            }
            let Some((q, dir)) = self.entering() else {
                return PhaseEnd::Optimal;
            };
            self.iterations += 1;

            // Step limit from the entering variable's own box.
            let own = if self.lo[q].is_finite() && self.up[q].is_finite() {
                self.up[q] - self.lo[q]
            } else {
                f64::INFINITY
            };

            // Ratio test: first basic variable driven to one of its bounds.
            let mut t_row = f64::INFINITY;
            let mut leave: Option<usize> = None;
            let mut leave_piv = 0.0f64;
            for i in 0..self.m {
                let w = self.a[i * self.ncols + q];
                if w.abs() <= EPS_PIVOT {
                    continue;
                }
                let g = dir * w;
                let b = self.basis[i];
                let t = if g > 0.0 {
                    if self.lo[b].is_finite() {
                        ((self.beta[i] - self.lo[b]) / g).max(0.0)
                    } else {
                        continue;
                    }
                } else if self.up[b].is_finite() {
                    ((self.up[b] - self.beta[i]) / -g).max(0.0)
                } else {
                    continue;
                };
                let take = match leave {
                    None => t < t_row,
                    Some(r) => {
                        if t < t_row - EPS_RATIO {
                            true
                        } else if t <= t_row + EPS_RATIO {
                            // Tie: Bland wants the lowest variable index,
                            // otherwise prefer the sturdier pivot element.
                            if self.bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                w.abs() > leave_piv.abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    t_row = t.min(t_row);
                    leave = Some(i);
                    leave_piv = w;
                }
            }

            let step = own.min(t_row);
            if step.is_infinite() {
                return PhaseEnd::Unbounded;
            }
            if step <= EPS_RATIO {
                self.degen_run += 1;
                if self.degen_run > DEGEN_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degen_run = 0;
                self.bland = false;
            }

            match leave {
                // A basic variable blocks before the entering variable's own
                // box does: pivot.
                Some(r) if t_row < own => self.pivot(q, dir, r, t_row),
                // Otherwise the entering variable just crosses its box: flip.
                _ => self.bound_flip(q, dir, own),
            }
        }
    }

    fn bound_flip(&mut self, q: usize, dir: f64, t: f64) {
        for i in 0..self.m {
            let w = self.a[i * self.ncols + q];
            if w != 0.0 {
                self.beta[i] -= dir * t * w;
            }
        }
        self.state[q] = match self.state[q] {
            VarState::AtLower => VarState::AtUpper,
            VarState::AtUpper => VarState::AtLower,
            s => s,
        };
    }

    fn pivot(&mut self, q: usize, dir: f64, r: usize, t: f64) {
        let entering_value = match self.state[q] {
            VarState::AtLower => self.lo[q] + dir * t,
            VarState::AtUpper => self.up[q] + dir * t,
            VarState::FreeZero => dir * t,
            VarState::Basic => unreachable!(),
        };
        for i in 0..self.m {
            if i != r {
                let w = self.a[i * self.ncols + q];
                if w != 0.0 {
                    self.beta[i] -= dir * t * w;
                }
            }
        }
        let leaver = self.basis[r];
        let w_r = self.a[r * self.ncols + q];
        self.state[leaver] = if dir * w_r > 0.0 {
            VarState::AtLower
        } else {
            VarState::AtUpper
        };
        // Free variables cannot block, so the leaver has the bound it hit.

        let piv = self.a[r * self.ncols + q];
        let (head, tail) = self.a.split_at_mut(r * self.ncols);
        let (prow, rest) = tail.split_at_mut(self.ncols);
        let inv = 1.0 / piv;
        for v in prow.iter_mut() {
            *v *= inv;
        }
        for chunk in head
            .chunks_exact_mut(self.ncols)
            .chain(rest.chunks_exact_mut(self.ncols))
        {
            let f = chunk[q];
            if f != 0.0 {
                for (v, &p) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
            }
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for (v, &p) in self.d.iter_mut().zip(prow.iter()) {
                *v -= dq * p;
            }
        }

        self.basis[r] = q;
        self.state[q] = VarState::Basic;
        self.beta[r] = entering_value;
    }

    fn extract(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.nstruct];
        for j in 0..self.nstruct {
            x[j] = match self.state[j] {
                VarState::AtLower => self.lo[j],
                VarState::AtUpper => self.up[j],
                VarState::FreeZero => 0.0,
                VarState::Basic => 0.0,
            };
        }
        for i in 0..self.m {
            if self.basis[i] < self.nstruct {
                x[self.basis[i]] = self.beta[i];
            }
        }
        x
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationCap,
}
