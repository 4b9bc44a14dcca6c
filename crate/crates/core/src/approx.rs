//! Convergence of the power approximation to the exponential profile.
//!
//! Replacing `e^φ` by `(1 + φ/n)^n` turns the exponential profile equation
//! into a power-type one whose solutions `φ⁽ⁿ⁾` converge to `φ` uniformly on
//! compact radius windows, and whose tail offsets `L⁽ⁿ⁾(α)` converge to
//! `L(α)`. This module measures both convergences and verifies that each
//! shifted profile `ψ⁽ⁿ⁾ = φ⁽ⁿ⁾ + n` is an admissible member of the
//! power-type solution set (positive, with a clean `r^{-2/(n-1)}` tail).

use crate::asymptotics::{estimate_l_integral, estimate_l_tail, AsymptoticsError};
use crate::ode::{solve_profile, IntegratorConfig, OdeError, ProfileStatus, SolvedProfile};
use crate::problem::ProblemParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest approximation order accepted; beyond this the power intermediates
/// add nothing at f64 precision.
pub const MAX_APPROX_ORDER: u32 = 1_000_000;

/// One approximation order in a convergence report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub n: u32,
    /// `sup_{[0, r0]} |φ⁽ⁿ⁾ - φ|` on a shared dense grid.
    pub sup_diff: f64,
    /// Tail offset `L⁽ⁿ⁾(α)` (tail-fit estimate).
    pub l_n: f64,
    /// `|L⁽ⁿ⁾(α) - L(α)|`.
    pub l_n_err: f64,
    /// Gap between the two `L⁽ⁿ⁾` estimators.
    pub estimator_gap: f64,
    pub status: ProfileStatus,
}

/// Measured convergence of the approximating family at one `(N, α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub r0: f64,
    pub entries: Vec<ConvergenceEntry>,
    /// Tail offset of the exponential profile the family approximates.
    pub l_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApproxError {
    /// `n + α` must be positive so ψ(0) > 0; `n ≥ 2` always.
    OrderTooSmall { n: u32, alpha: f64 },
    OrderTooLarge(u32),
    NoEntries,
    MissingEntry { n: u32 },
    Ode(OdeError),
    Asymptotics(AsymptoticsError),
}

impl fmt::Display for ApproxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxError::OrderTooSmall { n, alpha } => {
                write!(f, "order n={n} too small for alpha={alpha} (need n + alpha > 0, n >= 2)")
            }
            ApproxError::OrderTooLarge(n) => {
                write!(f, "order n={n} above cap {MAX_APPROX_ORDER}")
            }
            ApproxError::NoEntries => write!(f, "no approximation orders requested"),
            ApproxError::MissingEntry { n } => write!(f, "report has no entry for n={n}"),
            ApproxError::Ode(e) => write!(f, "{e}"),
            ApproxError::Asymptotics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ApproxError {}

impl From<OdeError> for ApproxError {
    fn from(e: OdeError) -> Self {
        ApproxError::Ode(e)
    }
}

impl From<AsymptoticsError> for ApproxError {
    fn from(e: AsymptoticsError) -> Self {
        ApproxError::Asymptotics(e)
    }
}

/// Solve the exponential profile once and each approximation order, and
/// measure `sup |φ⁽ⁿ⁾ - φ|` on `[0, r0]` together with the tail offsets.
/// Entries are computed in parallel and assembled in input order.
pub fn convergence_report(
    dimension: u32,
    alpha: f64,
    ns: &[u32],
    r0: f64,
    cfg: &IntegratorConfig,
) -> Result<ConvergenceReport, ApproxError> {
    if ns.is_empty() {
        return Err(ApproxError::NoEntries);
    }
    for &n in ns {
        if n < 2 || f64::from(n) + alpha <= 0.0 {
            return Err(ApproxError::OrderTooSmall { n, alpha });
        }
        if n > MAX_APPROX_ORDER {
            return Err(ApproxError::OrderTooLarge(n));
        }
    }

    let exp_params = ProblemParams::exponential(dimension).map_err(OdeError::from)?;
    let exp_solved = solve_profile(&exp_params, alpha, cfg)?;
    let l_limit = estimate_l_tail(&exp_solved)?.l;

    let mut sorted: Vec<u32> = ns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let entries = sorted
        .par_iter()
        .map(|&n| -> Result<ConvergenceEntry, ApproxError> {
            let params =
                ProblemParams::power_approx(dimension, n).map_err(OdeError::from)?;
            let solved = solve_profile(&params, alpha, cfg)?;
            let sup_diff = sup_difference(&exp_solved, &solved, r0);
            let (l_n, estimator_gap) = match (
                estimate_l_tail(&solved),
                estimate_l_integral(&solved),
            ) {
                (Ok(fit), Ok(li)) => (fit.l, (fit.l - li).abs()),
                (Ok(fit), Err(_)) => (fit.l, f64::NAN),
                _ => (f64::NAN, f64::NAN),
            };
            Ok(ConvergenceEntry {
                n,
                sup_diff,
                l_n,
                l_n_err: (l_n - l_limit).abs(),
                estimator_gap,
                status: solved.status,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ConvergenceReport { alpha, r0, entries, l_limit })
}

/// `sup |a - b|` over a dense shared grid on `[0, min(r0, ranges)]`.
fn sup_difference(a: &SolvedProfile, b: &SolvedProfile, r0: f64) -> f64 {
    let hi = r0.min(a.profile.r_max()).min(b.profile.r_max());
    let samples = 2048;
    let mut sup: f64 = 0.0;
    for k in 0..=samples {
        let r = hi * k as f64 / samples as f64;
        let va = a.profile.eval(r).expect("in range");
        let vb = b.profile.eval(r).expect("in range");
        sup = sup.max((va - vb).abs());
    }
    sup
}

/// Whether the order-`n` member of the report belongs to the power-type
/// solution set: `ψ⁽ⁿ⁾ > 0` everywhere, the rescaled tail converges (fit
/// error below `1e-4`), and the limit `L⁽ⁿ⁾ + n` is positive.
pub fn verify_membership(
    dimension: u32,
    alpha: f64,
    n: u32,
    report: &ConvergenceReport,
    cfg: &IntegratorConfig,
) -> Result<bool, ApproxError> {
    let entry =
        report.entries.iter().find(|e| e.n == n).ok_or(ApproxError::MissingEntry { n })?;
    if !entry.status.is_converged() {
        return Ok(false);
    }
    let params = ProblemParams::power_approx(dimension, n).map_err(OdeError::from)?;
    let solved = solve_profile(&params, alpha, cfg)?;
    membership_of_solved(&solved, n)
}

/// Membership test on an already-solved power-approximate profile.
pub fn membership_of_solved(solved: &SolvedProfile, n: u32) -> Result<bool, ApproxError> {
    if !solved.status.is_converged() {
        return Ok(false);
    }
    let positive = solved.profile.value.iter().all(|&v| v + f64::from(n) > 0.0);
    let fit = match estimate_l_tail(solved) {
        Ok(fit) => fit,
        Err(AsymptoticsError::FitDiverged { .. }) => return Ok(false),
        Err(e) => return Err(e.into()),
    };
    Ok(positive && fit.l + f64::from(n) > 0.0)
}

/// CSV serialization: `n,sup_diff,L_n,L_n_err`, 17 significant digits.
pub fn report_to_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("n,sup_diff,L_n,L_n_err\n");
    for e in &report.entries {
        out.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", e.n, e.sup_diff, e.l_n, e.l_n_err));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_converges_at_n3_alpha0() {
        let cfg = IntegratorConfig::default();
        let report = convergence_report(3, 0.0, &[10, 100, 1000], 5.0, &cfg).unwrap();
        assert_eq!(report.entries.len(), 3);
        for w in report.entries.windows(2) {
            assert!(
                w[1].sup_diff < w[0].sup_diff,
                "sup_diff not decreasing: {} -> {}",
                w[0].sup_diff,
                w[1].sup_diff
            );
            assert!(
                w[1].l_n_err < w[0].l_n_err,
                "L_n error not decreasing: {} -> {}",
                w[0].l_n_err,
                w[1].l_n_err
            );
        }
        for e in &report.entries {
            assert!(e.estimator_gap < 1e-5, "estimator gap {} at n={}", e.estimator_gap, e.n);
        }
    }

    #[test]
    fn membership_holds_for_converged_orders() {
        let cfg = IntegratorConfig::default();
        let report = convergence_report(3, 0.0, &[100], 5.0, &cfg).unwrap();
        assert!(verify_membership(3, 0.0, 100, &report, &cfg).unwrap());
        assert!(matches!(
            verify_membership(3, 0.0, 7, &report, &cfg),
            Err(ApproxError::MissingEntry { n: 7 })
        ));
    }

    #[test]
    fn membership_false_for_non_converged_entry() {
        let report = ConvergenceReport {
            alpha: 0.0,
            r0: 5.0,
            entries: vec![ConvergenceEntry {
                n: 10,
                sup_diff: f64::NAN,
                l_n: f64::NAN,
                l_n_err: f64::NAN,
                estimator_gap: f64::NAN,
                status: ProfileStatus::PositivityLost { r_zero: 1.0 },
            }],
            l_limit: 0.0,
        };
        let ok =
            verify_membership(3, 0.0, 10, &report, &IntegratorConfig::default()).unwrap();
        assert!(!ok);
    }

    #[test]
    fn order_validation() {
        let cfg = IntegratorConfig::default();
        assert!(matches!(
            convergence_report(3, -5.0, &[4], 5.0, &cfg),
            Err(ApproxError::OrderTooSmall { .. })
        ));
        assert!(matches!(
            convergence_report(3, 0.0, &[], 5.0, &cfg),
            Err(ApproxError::NoEntries)
        ));
        assert!(matches!(
            convergence_report(3, 0.0, &[2_000_000], 5.0, &cfg),
            Err(ApproxError::OrderTooLarge(_))
        ));
    }

    #[test]
    fn single_entry_report_is_valid() {
        let cfg = IntegratorConfig::default();
        let report = convergence_report(3, 0.0, &[10], 5.0, &cfg).unwrap();
        assert_eq!(report.entries.len(), 1);
        assert!(report.entries[0].sup_diff > 0.0);
        let csv = report_to_csv(&report);
        assert!(csv.starts_with("n,sup_diff,L_n,L_n_err\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
