//! Piecewise-constant reciprocal speed profiles and the timing quantities
//! that decide field stability.
//!
//! A profile stores coefficients `alpha` over a rectangular basis of `n`
//! equal cells on the normalized cycle. Two conventions exist:
//!
//! * direct: `v^-1(theta) = alpha_j` on cell j, in seconds per unit theta;
//! * normalized: coefficients sum to 1 over a unit-integral basis (cell
//!   height n) and a cycle frequency `f` scales the result,
//!   `v^-1(theta) = alpha_j * n / f`. Teams of robots are synthesized in
//!   this form so their periods can vary independently.
//!
//! The cycle time is `T = integral of v^-1 over one cycle` and the coverage
//! time of a point is the same integral restricted to its covered arcs. A
//! profile keeps the field at a point bounded exactly when
//! `consumption * coverage_time > production * cycle_time`, and the margin
//! `c*tau - p*T` quantifies how much slack the schedule has.

use crate::coverage::{arc_overlap, CoverageSet};
use crate::{Error, Result};

/// A rectangular basis over the normalized cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Basis {
    n: usize,
    unit_integral: bool,
}

impl Basis {
    /// Height-1 cells; each basis function integrates to 1/n.
    pub fn rectangular(n: usize) -> Basis {
        assert!(n > 0, "basis needs at least one cell");
        Basis {
            n,
            unit_integral: false,
        }
    }

    /// Height-n cells; each basis function integrates to 1.
    pub fn normalized(n: usize) -> Basis {
        assert!(n > 0, "basis needs at least one cell");
        Basis {
            n,
            unit_integral: true,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_normalized(&self) -> bool {
        self.unit_integral
    }

    /// Value of a basis function on its own cell.
    pub fn height(&self) -> f64 {
        if self.unit_integral {
            self.n as f64
        } else {
            1.0
        }
    }

    /// Integral of one basis function over the cycle.
    pub fn function_integral(&self) -> f64 {
        self.height() / self.n as f64
    }

    /// Index of the cell containing `theta` (wrapped).
    pub fn cell_of(&self, theta: f64) -> usize {
        let t = theta.rem_euclid(1.0);
        ((t * self.n as f64) as usize).min(self.n - 1)
    }

    /// Cell boundaries [j/n, (j+1)/n).
    pub fn cell_bounds(&self, j: usize) -> (f64, f64) {
        (j as f64 / self.n as f64, (j + 1) as f64 / self.n as f64)
    }
}

/// A reciprocal speed profile over a rectangular basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ReciprocalProfile {
    basis: Basis,
    alpha: Vec<f64>,
    frequency: Option<f64>,
}

impl ReciprocalProfile {
    /// Direct profile: `alpha_j` is the reciprocal speed on cell j, in
    /// seconds per unit theta.
    pub fn direct(alpha: Vec<f64>) -> Result<ReciprocalProfile> {
        if alpha.is_empty() {
            return Err(Error::BasisMismatch {
                expected: 1,
                got: 0,
            });
        }
        if alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::IncompatibleProfiles(
                "reciprocal coefficients must be positive".into(),
            ));
        }
        Ok(ReciprocalProfile {
            basis: Basis::rectangular(alpha.len()),
            alpha,
            frequency: None,
        })
    }

    /// Constant reciprocal speed on every cell.
    pub fn constant(n: usize, alpha: f64) -> ReciprocalProfile {
        ReciprocalProfile::direct(vec![alpha; n]).expect("positive constant profile")
    }

    /// Normalized profile: coefficients over a unit-integral basis plus a
    /// cycle frequency. Coefficients are expected to sum to about 1.
    pub fn normalized(alpha: Vec<f64>, frequency: f64) -> Result<ReciprocalProfile> {
        if alpha.is_empty() {
            return Err(Error::BasisMismatch {
                expected: 1,
                got: 0,
            });
        }
        if !(frequency > 0.0) {
            return Err(Error::IncompatibleProfiles(
                "cycle frequency must be positive".into(),
            ));
        }
        if alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::IncompatibleProfiles(
                "reciprocal coefficients must be positive".into(),
            ));
        }
        Ok(ReciprocalProfile {
            basis: Basis::normalized(alpha.len()),
            alpha,
            frequency: Some(frequency),
        })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn frequency(&self) -> Option<f64> {
        self.frequency
    }

    /// Reciprocal speed on cell `j`, seconds per unit theta.
    pub fn reciprocal_cell(&self, j: usize) -> f64 {
        let r = self.alpha[j] * self.basis.height();
        match self.frequency {
            Some(f) => r / f,
            None => r,
        }
    }

    /// Reciprocal speed at `theta`.
    pub fn reciprocal_at(&self, theta: f64) -> f64 {
        self.reciprocal_cell(self.basis.cell_of(theta))
    }

    /// Speed at `theta`, unit theta per second.
    pub fn speed_at(&self, theta: f64) -> f64 {
        1.0 / self.reciprocal_at(theta)
    }

    /// Time for one full cycle, seconds.
    pub fn cycle_time(&self) -> f64 {
        let n = self.basis.n as f64;
        (0..self.basis.n)
            .map(|j| self.reciprocal_cell(j) / n)
            .sum()
    }

    /// Time spent traversing the forward arc from `a` to `b`, seconds.
    /// Equal endpoints mean the empty arc; a full cycle is `cycle_time`.
    pub fn traverse_time(&self, a: f64, b: f64) -> f64 {
        (0..self.basis.n)
            .map(|j| {
                let (ca, cb) = self.basis.cell_bounds(j);
                self.reciprocal_cell(j) * arc_overlap(a, b, ca, cb)
            })
            .sum()
    }

    /// Time per cycle spent covering the given arcs, seconds.
    pub fn coverage_time(&self, cov: &CoverageSet) -> f64 {
        if cov.is_full_circle() {
            return self.cycle_time();
        }
        (0..self.basis.n)
            .map(|j| self.reciprocal_cell(j) * cov.cell_overlap(j, self.basis.n))
            .sum()
    }

    /// The same coefficients as a direct profile (identity for direct
    /// profiles); useful before simulation.
    pub fn to_direct(&self) -> ReciprocalProfile {
        match self.frequency {
            None => self.clone(),
            Some(_) => {
                let alpha = (0..self.basis.n).map(|j| self.reciprocal_cell(j)).collect();
                ReciprocalProfile {
                    basis: Basis::rectangular(self.basis.n),
                    alpha,
                    frequency: None,
                }
            }
        }
    }
}

/// Stability margin `c * tau - p * T` of one point under a profile,
/// in field units (positive exactly when the field stays bounded).
pub fn stability_margin(
    profile: &ReciprocalProfile,
    cov: &CoverageSet,
    production: f64,
    consumption: f64,
) -> f64 {
    consumption * profile.coverage_time(cov) - production * profile.cycle_time()
}

/// Is a margin stabilizing? Zero counts as unstable: with no slack the
/// field drifts instead of returning.
pub fn is_stabilizing(margin: f64) -> bool {
    margin > 0.0
}

/// Largest uniform production inflation the profile tolerates at one
/// point while staying stable: `(c tau - p T) / T`. Negative when the
/// point is already unstable.
pub fn offset_tolerance(
    profile: &ReciprocalProfile,
    cov: &CoverageSet,
    production: f64,
    consumption: f64,
) -> f64 {
    stability_margin(profile, cov, production, consumption) / profile.cycle_time()
}

/// Team margin of one point: `sum_r c_r * tau_r / T_r - p`, field units
/// per second. Positive exactly when the team keeps the point bounded.
pub fn team_margin(
    robots: &[(&ReciprocalProfile, &CoverageSet, f64)],
    production: f64,
) -> f64 {
    let drain: f64 = robots
        .iter()
        .map(|(profile, cov, c)| c * profile.coverage_time(cov) / profile.cycle_time())
        .sum();
    drain - production
}

/// Coefficient-wise mean of direct profiles on a shared basis. The result
/// inherits any per-cell speed limits that all inputs satisfy, and its
/// margin at a point is the mean of the inputs' margins.
pub fn average_profiles(profiles: &[&ReciprocalProfile]) -> Result<ReciprocalProfile> {
    let Some(first) = profiles.first() else {
        return Err(Error::IncompatibleProfiles(
            "nothing to average".into(),
        ));
    };
    if profiles.iter().any(|p| p.frequency.is_some()) {
        return Err(Error::IncompatibleProfiles(
            "averaging applies to direct profiles only".into(),
        ));
    }
    let n = first.n();
    if profiles.iter().any(|p| p.n() != n) {
        return Err(Error::IncompatibleProfiles(format!(
            "profiles use different bases: {:?}",
            profiles.iter().map(|p| p.n()).collect::<Vec<_>>()
        )));
    }
    let k = profiles.len() as f64;
    let alpha = (0..n)
        .map(|j| profiles.iter().map(|p| p.alpha[j]).sum::<f64>() / k)
        .collect();
    ReciprocalProfile::direct(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e1_coverage() -> CoverageSet {
        CoverageSet::from_intervals(&[(0.2, 0.3), (0.6, 0.7)])
    }

    #[test]
    fn eval_direct_and_normalized() {
        let p = ReciprocalProfile::direct(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.reciprocal_at(0.6), 3.0); // cell [0.5, 0.75)
        assert_eq!(p.reciprocal_at(1.0), 1.0); // wraps to the first cell
        assert_eq!(p.reciprocal_at(-0.1), 4.0); // wraps backward to the last

        let q = ReciprocalProfile::normalized(vec![0.5, 0.5], 0.1).unwrap();
        assert!((q.reciprocal_at(0.25) - 10.0).abs() < 1e-12);
        assert!((q.speed_at(0.25) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn cycle_time_conventions() {
        let p = ReciprocalProfile::constant(8, 150.0);
        assert!((p.cycle_time() - 150.0).abs() < 1e-12);

        let q = ReciprocalProfile::normalized(vec![0.25; 4], 0.02).unwrap();
        assert!((q.cycle_time() - 50.0).abs() < 1e-12);
        // Round trip through the direct form preserves the trajectory.
        let d = q.to_direct();
        assert!((d.cycle_time() - 50.0).abs() < 1e-12);
        assert!((d.reciprocal_at(0.9) - q.reciprocal_at(0.9)).abs() < 1e-12);
    }

    #[test]
    fn coverage_time_piecewise() {
        let mut alpha = vec![2.0; 5];
        alpha.extend(vec![1.0; 5]);
        let p = ReciprocalProfile::direct(alpha).unwrap();
        let cov = CoverageSet::from_intervals(&[(0.45, 0.65)]);
        // 0.05 of theta at reciprocal 2, 0.15 at reciprocal 1.
        assert!((p.coverage_time(&cov) - 0.25).abs() < 1e-12);

        assert!((p.coverage_time(&CoverageSet::full_circle()) - p.cycle_time()).abs() < 1e-12);
        assert_eq!(p.coverage_time(&CoverageSet::empty()), 0.0);
    }

    #[test]
    fn traverse_time_wraps() {
        let p = ReciprocalProfile::direct(vec![1.0, 3.0]).unwrap();
        // Forward from 0.75 to 0.25: quarter at 3, quarter at 1.
        assert!((p.traverse_time(0.75, 0.25) - 1.0).abs() < 1e-12);
        assert_eq!(p.traverse_time(0.4, 0.4), 0.0);
    }

    /// Midpoint-rule quadrature of the reciprocal over an arc; independent
    /// of the cell-overlap bookkeeping used by the implementation.
    fn quadrature(p: &ReciprocalProfile, a: f64, b: f64) -> f64 {
        let len = crate::coverage::arc_len(a, b);
        let n = 1 << 24;
        let h = len / n as f64;
        (0..n)
            .map(|i| p.reciprocal_at(a + (i as f64 + 0.5) * h) * h)
            .sum()
    }

    #[test]
    fn times_match_quadrature_oracle() {
        let p = ReciprocalProfile::direct(vec![1.7, 0.4, 2.2, 1.1, 0.9, 1.3, 2.0]).unwrap();
        let cov = CoverageSet::from_intervals(&[(0.13, 0.31), (0.55, 0.9)]);
        let tau: f64 = cov
            .intervals()
            .iter()
            .map(|iv| quadrature(&p, iv.start, iv.end))
            .sum();
        assert!((p.coverage_time(&cov) - tau).abs() < 1e-6);

        let t = quadrature(&p, 0.0, 0.999_999_9) + p.reciprocal_at(0.999_999_95) * 1e-7;
        assert!((p.cycle_time() - t).abs() < 1e-6);

        let wrapped = quadrature(&p, 0.83, 0.21);
        assert!((p.traverse_time(0.83, 0.21) - wrapped).abs() < 1e-6);
    }

    #[test]
    fn margin_on_reference_instance() {
        let p = ReciprocalProfile::constant(10, 1.0);
        let m = stability_margin(&p, &e1_coverage(), 1.0, 6.0);
        assert!((m - 0.2).abs() < 1e-12);
        assert!(is_stabilizing(m));

        // Slower drain loses the race.
        let m = stability_margin(&p, &e1_coverage(), 1.0, 4.0);
        assert!((m + 0.2).abs() < 1e-12);
        assert!(!is_stabilizing(m));

        // Exact balance is not stabilizing: the field never returns.
        let m = stability_margin(&p, &e1_coverage(), 1.0, 5.0);
        assert!(m.abs() < 1e-12);
        assert!(!is_stabilizing(m));
    }

    #[test]
    fn team_margin_single_robot_reduction() {
        let p = ReciprocalProfile::direct(vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let cov = CoverageSet::from_intervals(&[(0.1, 0.35)]);
        let single = stability_margin(&p, &cov, 0.4, 3.0);
        let team = team_margin(&[(&p, &cov, 3.0)], 0.4);
        assert!((team - single / p.cycle_time()).abs() < 1e-12);
    }

    #[test]
    fn averaging_profiles() {
        let a = ReciprocalProfile::direct(vec![1.0, 3.0]).unwrap();
        let b = ReciprocalProfile::direct(vec![3.0, 1.0]).unwrap();
        let avg = average_profiles(&[&a, &b]).unwrap();
        assert_eq!(avg.alpha(), &[2.0, 2.0]);

        // Margin of the average is the mean of the margins.
        let cov = CoverageSet::from_intervals(&[(0.0, 0.4)]);
        let (p, c) = (0.5, 2.0);
        let m = stability_margin(&avg, &cov, p, c);
        let m1 = stability_margin(&a, &cov, p, c);
        let m2 = stability_margin(&b, &cov, p, c);
        assert!((m - 0.5 * (m1 + m2)).abs() < 1e-12);

        let n = ReciprocalProfile::normalized(vec![0.5, 0.5], 1.0).unwrap();
        assert!(average_profiles(&[&a, &n]).is_err());
        let short = ReciprocalProfile::direct(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(average_profiles(&[&a, &short]).is_err());
        assert!(average_profiles(&[]).is_err());
    }

    proptest! {
        // Scaling every coefficient by lambda scales T, tau, and the
        // traverse times by lambda; margins scale accordingly.
        #[test]
        fn scaling_homogeneity(
            alpha in proptest::collection::vec(0.1f64..10.0, 1..12),
            lambda in 0.1f64..20.0,
            s in 0.0f64..1.0,
            e in 0.0f64..1.0,
        ) {
            let p = ReciprocalProfile::direct(alpha.clone()).unwrap();
            let scaled =
                ReciprocalProfile::direct(alpha.iter().map(|a| a * lambda).collect()).unwrap();
            let cov = CoverageSet::from_intervals(&[(s, e)]);
            let tol = 1e-9 * (1.0 + lambda) * (1.0 + p.cycle_time());
            prop_assert!((scaled.cycle_time() - lambda * p.cycle_time()).abs() < tol);
            prop_assert!(
                (scaled.coverage_time(&cov) - lambda * p.coverage_time(&cov)).abs() < tol
            );
            let (pr, cr) = (0.7, 2.9);
            let m = stability_margin(&p, &cov, pr, cr);
            let ms = stability_margin(&scaled, &cov, pr, cr);
            prop_assert!((ms - lambda * m).abs() < 10.0 * tol);
        }
    }
}
