//! Closed-form steady state of the field at one point under a stabilizing
//! profile.
//!
//! With coverage arcs entered at x_k and left at y_k (0-based, circular)
//! and a profile with reciprocal speed r = 1/v, the periodic field value at
//! an exit is a maximum of lookback terms
//!
//! ```text
//! N[k, b] = p * time(y[k-b] -> y[k]) - c * sum_{w<b} time(x[k-w] -> y[k-w])
//! Zbar(y[k]) = max_{0 <= b < l} N[k, b]        (N[k, 0] = 0)
//! ```
//!
//! growth since an assumed zero at an earlier exit minus the drain capacity
//! of the arcs in between; the maximum accounts for the zero clamp. The
//! worst field value over the whole cycle occurs at an arc entry and is
//!
//! ```text
//! H = max_{k, b} p * time(y[k-b] -> x[k+1]) - c * sum_{w<b} time(x[k-w] -> y[k-w])
//! ```
//!
//! The full curve is reconstructed by walking one cycle from an exit whose
//! steady-state value is zero (one always exists: a periodic orbit that
//! never touched zero would shrink every cycle), clamping at zero inside
//! covered arcs.

use crate::controller::{stability_margin, ReciprocalProfile};
use crate::coverage::{CoverageSet, Decomposition};
use crate::task::PointRates;
use crate::{Error, Result};

/// Lookback endpoint value `N[k, b]` (see module docs), seconds times
/// field rate. `b = 0` is identically zero.
pub fn compute_n(
    x: &[f64],
    y: &[f64],
    rates: &PointRates,
    profile: &ReciprocalProfile,
    k: usize,
    b: usize,
) -> f64 {
    let l = x.len();
    assert_eq!(l, y.len());
    assert!(k < l, "arc index {k} out of range for {l} arcs");
    assert!(b < l, "lookback {b} out of range for {l} arcs");
    let mut v = rates.production * profile.traverse_time(y[(k + l - b) % l], y[k]);
    for w in 0..b {
        let idx = (k + l - w) % l;
        v -= rates.consumption * profile.traverse_time(x[idx], y[idx]);
    }
    v
}

/// Peak candidate `X[k, b]`: growth from exit `y[k-b]` to entry `x[k+1]`
/// minus the drain capacity passed on the way.
pub fn compute_x_time(
    x: &[f64],
    y: &[f64],
    rates: &PointRates,
    profile: &ReciprocalProfile,
    k: usize,
    b: usize,
) -> f64 {
    let l = x.len();
    assert!(k < l && b < l);
    let mut v = rates.production * profile.traverse_time(y[(k + l - b) % l], x[(k + 1) % l]);
    for w in 0..b {
        let idx = (k + l - w) % l;
        v -= rates.consumption * profile.traverse_time(x[idx], y[idx]);
    }
    v
}

/// Steady state of the field at one point.
#[derive(Clone, Debug)]
pub struct SteadyState {
    /// Arc entries x_k, exits y_k (empty for full-circle coverage).
    pub entries: Vec<f64>,
    pub exits: Vec<f64>,
    /// Periodic field value at each exit.
    pub endpoint_values: Vec<f64>,
    /// Worst field value over the cycle and the arc entry attaining it.
    pub peak: f64,
    pub peak_theta: f64,
    /// Piecewise-linear curve (theta, value), theta ascending over [0, 1]
    /// with both endpoints present; linear between consecutive points.
    pub curve: Vec<(f64, f64)>,
}

/// Compute the steady state; errors when the profile does not stabilize
/// the point (the error carries the per-cycle growth `p T - c tau`).
pub fn steady_state(
    profile: &ReciprocalProfile,
    cov: &CoverageSet,
    rates: &PointRates,
) -> Result<SteadyState> {
    let margin = stability_margin(profile, cov, rates.production, rates.consumption);
    if !(margin > 0.0) {
        return Err(Error::NotStabilizing {
            growth_per_cycle: -margin,
        });
    }
    let (x, y) = match cov.decompose() {
        Decomposition::FullCircle => {
            return Ok(SteadyState {
                entries: vec![],
                exits: vec![],
                endpoint_values: vec![],
                peak: 0.0,
                peak_theta: 0.0,
                curve: vec![(0.0, 0.0), (1.0, 0.0)],
            });
        }
        Decomposition::Empty => unreachable!("empty coverage cannot have positive margin"),
        Decomposition::Arcs { x, y } => (x, y),
    };
    let l = x.len();

    let endpoint_values: Vec<f64> = (0..l)
        .map(|k| {
            (0..l)
                .map(|b| compute_n(&x, &y, rates, profile, k, b))
                .fold(0.0f64, f64::max)
        })
        .collect();

    let mut peak = f64::NEG_INFINITY;
    let mut peak_theta = 0.0;
    for k in 0..l {
        for b in 0..l {
            let v = compute_x_time(&x, &y, rates, profile, k, b);
            if v > peak {
                peak = v;
                peak_theta = x[(k + 1) % l];
            }
        }
    }

    // Anchor the walk at an exit whose periodic value is zero.
    let (anchor_k, anchor_val) = endpoint_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        });
    debug_assert!(
        anchor_val.abs() <= 1e-9 * (1.0 + rates.production * profile.cycle_time()),
        "no zero-valued exit in a stabilizing steady state: {anchor_val}"
    );
    let curve = walk_curve(profile, cov, rates, y[anchor_k]);

    Ok(SteadyState {
        entries: x,
        exits: y,
        endpoint_values,
        peak,
        peak_theta,
        curve,
    })
}

/// Walk one cycle from `anchor` (field value zero there), emitting a point
/// at every cell boundary, arc endpoint, and interior zero crossing, then
/// rotate the result to ascending theta over [0, 1].
fn walk_curve(
    profile: &ReciprocalProfile,
    cov: &CoverageSet,
    rates: &PointRates,
    anchor: f64,
) -> Vec<(f64, f64)> {
    let n = profile.n();
    let mut cuts: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    for iv in cov.intervals() {
        cuts.push(iv.start.rem_euclid(1.0));
        cuts.push(iv.end.rem_euclid(1.0));
    }
    let a = anchor.rem_euclid(1.0);
    // Unwrap every cut into [a, a + 1]: cuts before the anchor shift up by
    // exactly one, so the theta = 0 cell boundary lands at exactly 1.0.
    let mut walk: Vec<f64> = Vec::with_capacity(cuts.len() + 2);
    walk.push(a);
    for &c in &cuts {
        let t = c.rem_euclid(1.0);
        walk.push(if t >= a { t } else { t + 1.0 });
    }
    walk.push(a + 1.0);
    walk.sort_by(|p, q| p.partial_cmp(q).unwrap());
    walk.dedup();

    let mut pts: Vec<(f64, f64)> = vec![(a, 0.0)];
    let mut z = 0.0f64;
    for seg in walk.windows(2) {
        let (t0, t1) = (seg[0], seg[1]);
        if t1 - t0 <= 0.0 {
            continue;
        }
        let mid = (0.5 * (t0 + t1)).rem_euclid(1.0);
        let r = profile.reciprocal_at(mid);
        let dt = (t1 - t0) * r;
        if cov.contains(mid) {
            let drop = (rates.consumption - rates.production) * dt;
            if z > 0.0 && z - drop < 0.0 {
                let t_zero = t0 + z / ((rates.consumption - rates.production) * r);
                pts.push((t_zero, 0.0));
                z = 0.0;
            } else {
                z = (z - drop).max(0.0);
            }
            pts.push((t1, z));
        } else {
            z += rates.production * dt;
            pts.push((t1, z));
        }
    }
    // A valid periodic orbit closes; snap the cumulated rounding away.
    if let Some(last) = pts.last_mut() {
        debug_assert!(last.1.abs() < 1e-9 * (1.0 + rates.production));
        last.1 = 0.0;
    }

    // Rotate to ascending theta over [0, 1]. An anchor at zero is already
    // in order; otherwise split at the exact 1.0 breakpoint.
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len() + 1);
    if pts[0].0 == 0.0 {
        out.extend_from_slice(&pts);
    } else {
        let wrap = pts
            .iter()
            .position(|&(t, _)| t == 1.0)
            .expect("cycle crosses theta = 0 at a breakpoint");
        for &(t, v) in &pts[wrap..] {
            out.push((t - 1.0, v));
        }
        for &(t, v) in &pts[1..=wrap] {
            out.push((t, v));
        }
    }
    out.dedup_by(|p, q| p.0 == q.0 && p.1 == q.1);
    out
}

/// Interpolate a steady-state curve at `theta`.
pub fn curve_value(curve: &[(f64, f64)], theta: f64) -> f64 {
    let t = theta.rem_euclid(1.0);
    let pos = curve.partition_point(|&(u, _)| u <= t);
    if pos == 0 {
        return curve[0].1;
    }
    if pos >= curve.len() {
        return curve[curve.len() - 1].1;
    }
    let (t0, v0) = curve[pos - 1];
    let (t1, v1) = curve[pos];
    if t1 <= t0 {
        return v0;
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_profile(n: usize) -> ReciprocalProfile {
        ReciprocalProfile::constant(n, 1.0)
    }

    fn reference() -> (ReciprocalProfile, CoverageSet, PointRates) {
        (
            unit_profile(10),
            CoverageSet::from_intervals(&[(0.2, 0.3), (0.6, 0.7)]),
            PointRates {
                production: 1.0,
                consumption: 6.0,
            },
        )
    }

    #[test]
    fn lookback_terms_on_reference() {
        let (profile, cov, rates) = reference();
        let (x, y) = match cov.decompose() {
            Decomposition::Arcs { x, y } => (x, y),
            other => panic!("{other:?}"),
        };
        assert_eq!(compute_n(&x, &y, &rates, &profile, 0, 0), 0.0);
        assert_eq!(compute_n(&x, &y, &rates, &profile, 1, 0), 0.0);
        assert!((compute_n(&x, &y, &rates, &profile, 1, 1) - (-0.2)).abs() < 1e-12);
        assert!(compute_n(&x, &y, &rates, &profile, 0, 1).abs() < 1e-12);
    }

    #[test]
    fn steady_state_on_reference() {
        let (profile, cov, rates) = reference();
        let ss = steady_state(&profile, &cov, &rates).unwrap();
        assert_eq!(ss.exits.len(), 2);
        assert!(ss.endpoint_values.iter().all(|v| v.abs() < 1e-12));
        assert!((ss.peak - 0.5).abs() < 1e-12);
        assert!((ss.peak_theta - 0.2).abs() < 1e-12);
        // Walked curve: 0.3 at the wrap, peak at the first entry, zero
        // crossing inside the second covered arc at 0.66.
        assert!((curve_value(&ss.curve, 0.0) - 0.3).abs() < 1e-12);
        assert!((curve_value(&ss.curve, 0.2) - 0.5).abs() < 1e-12);
        assert!(curve_value(&ss.curve, 0.3).abs() < 1e-12);
        assert!((curve_value(&ss.curve, 0.64) - 0.1).abs() < 1e-12);
        assert!(curve_value(&ss.curve, 0.66).abs() < 1e-12);
        assert!(curve_value(&ss.curve, 0.68).abs() < 1e-12);
        let start = ss.curve.first().unwrap();
        let end = ss.curve.last().unwrap();
        assert_eq!(start.0, 0.0);
        assert_eq!(end.0, 1.0);
        assert!((start.1 - end.1).abs() < 1e-12);
    }

    #[test]
    fn curve_consistent_with_closed_forms() {
        // Non-uniform profile, asymmetric arcs: the walked curve must
        // reproduce the lookback values at exits and peak at its entry.
        let profile = ReciprocalProfile::direct(vec![2.0, 1.0, 0.5, 3.0, 1.5, 2.5]).unwrap();
        let cov = CoverageSet::from_intervals(&[(0.05, 0.22), (0.48, 0.71), (0.8, 0.86)]);
        let rates = PointRates {
            production: 0.7,
            consumption: 4.1,
        };
        let ss = steady_state(&profile, &cov, &rates).unwrap();
        for (k, &yk) in ss.exits.iter().enumerate() {
            let got = curve_value(&ss.curve, yk);
            assert!(
                (got - ss.endpoint_values[k]).abs() < 1e-9,
                "exit {k}: walked {got}, closed form {}",
                ss.endpoint_values[k]
            );
        }
        let curve_max = ss
            .curve
            .iter()
            .map(|&(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((curve_max - ss.peak).abs() < 1e-9);
        assert!((curve_value(&ss.curve, ss.peak_theta) - ss.peak).abs() < 1e-9);
        assert!(ss.curve.iter().all(|&(_, v)| v >= -1e-12));
    }

    #[test]
    fn single_arc_peak_identity() {
        // One covered arc: the peak is production times the uncovered
        // travel time.
        let profile = ReciprocalProfile::direct(vec![1.0, 3.0, 0.5, 2.0]).unwrap();
        let cov = CoverageSet::from_intervals(&[(0.3, 0.55)]);
        let rates = PointRates {
            production: 0.9,
            consumption: 7.0,
        };
        let ss = steady_state(&profile, &cov, &rates).unwrap();
        let want = rates.production * (profile.cycle_time() - profile.coverage_time(&cov));
        assert!((ss.peak - want).abs() < 1e-12);
        assert!((ss.peak_theta - 0.3).abs() < 1e-12);
        assert_eq!(ss.endpoint_values, vec![0.0]);
    }

    #[test]
    fn full_circle_is_identically_zero() {
        let profile = unit_profile(4);
        let rates = PointRates {
            production: 1.0,
            consumption: 2.0,
        };
        let ss = steady_state(&profile, &CoverageSet::full_circle(), &rates).unwrap();
        assert_eq!(ss.peak, 0.0);
        assert!(ss.curve.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn rejects_non_stabilizing_profiles() {
        let (profile, cov, _) = reference();
        let rates = PointRates {
            production: 1.0,
            consumption: 4.0,
        };
        match steady_state(&profile, &cov, &rates) {
            Err(Error::NotStabilizing { growth_per_cycle }) => {
                assert!((growth_per_cycle - 0.2).abs() < 1e-12);
            }
            other => panic!("expected growth error, got {other:?}"),
        }
        // Zero margin is not stabilizing either.
        let rates = PointRates {
            production: 1.0,
            consumption: 5.0,
        };
        assert!(steady_state(&profile, &cov, &rates).is_err());
        // Never covered: growth is the full production per cycle.
        let rates = PointRates {
            production: 2.0,
            consumption: 9.0,
        };
        match steady_state(&profile, &CoverageSet::empty(), &rates) {
            Err(Error::NotStabilizing { growth_per_cycle }) => {
                assert!((growth_per_cycle - 2.0).abs() < 1e-12);
            }
            other => panic!("expected growth error, got {other:?}"),
        }
    }

    #[test]
    fn rotation_by_whole_cells_preserves_shape() {
        let alpha = vec![2.0, 1.0, 0.5, 3.0, 1.5, 2.5, 0.8, 1.2];
        let profile = ReciprocalProfile::direct(alpha.clone()).unwrap();
        let cov = CoverageSet::from_intervals(&[(0.05, 0.3), (0.6, 0.7)]);
        let rates = PointRates {
            production: 0.5,
            consumption: 3.0,
        };
        let ss = steady_state(&profile, &cov, &rates).unwrap();

        // Shift everything by 3 cells (3/8 of the cycle).
        let shift = 3.0 / 8.0;
        let mut rotated = alpha.clone();
        rotated.rotate_right(3);
        let profile_r = ReciprocalProfile::direct(rotated).unwrap();
        let cov_r = CoverageSet::from_intervals(&[
            (0.05 + shift, 0.3 + shift),
            (0.6 + shift - 1.0, 0.7 + shift - 1.0),
        ]);
        let ss_r = steady_state(&profile_r, &cov_r, &rates).unwrap();

        assert!((ss.peak - ss_r.peak).abs() < 1e-12);
        let got = (ss_r.peak_theta - ss.peak_theta).rem_euclid(1.0);
        assert!((got - shift).abs() < 1e-12);
        for &(t, v) in &ss.curve {
            let vr = curve_value(&ss_r.curve, t + shift);
            assert!((v - vr).abs() < 1e-9, "theta {t}: {v} vs {vr}");
        }
    }

    #[test]
    fn min_peak_profile_attains_its_bound() {
        use crate::synthesis::{synthesize_min_peak, SingleInstance};
        let inst = SingleInstance {
            points: vec![
                PointRates {
                    production: 1.0,
                    consumption: 6.0,
                },
                PointRates {
                    production: 0.4,
                    consumption: 5.0,
                },
            ],
            coverage: vec![
                CoverageSet::from_intervals(&[(0.2, 0.3), (0.6, 0.7)]),
                CoverageSet::from_intervals(&[(0.35, 0.5)]),
            ],
            alpha_lo: vec![0.4; 10],
            alpha_hi: vec![3.0; 10],
            delta_override: None,
        };
        let res = synthesize_min_peak(&inst).expect_solved("minpeak");
        let b = res.value.unwrap();
        let worst = inst
            .points
            .iter()
            .zip(&inst.coverage)
            .map(|(rates, cov)| steady_state(&res.profile, cov, rates).unwrap().peak)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (worst - b).abs() < 1e-6,
            "program bound {b} vs realized worst peak {worst}"
        );
    }
}
