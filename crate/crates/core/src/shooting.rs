//! Shooting over the initial value: the map `α ↦ L(α)`, its critical points,
//! and the solutions of `L(α) = L` with minimality classification.
//!
//! Every exponential-variant trajectory settles onto a `-2 log r + L` tail,
//! so the scan is total: one record per `α`, failures recorded per record.
//! Multiplicity of the solution set at fixed `L` is read off the sign
//! changes of `dL/dα`; for `3 ≤ N ≤ 9` the scan shows the non-monotone
//! structure that produces non-minimal solutions, while `N = 10` is
//! monotone and every `L` is attained once.

use crate::asymptotics::{estimate_l_integral, estimate_l_tail, AsymptoticsError};
use crate::numeric::refine_root;
use crate::ode::{solve_profile, IntegratorConfig, OdeError, ProfileStatus, SolvedProfile};
use crate::problem::ProblemParams;
use crate::profile::RadialProfile;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Tolerance within which the two `L` estimators must agree for a record to
/// be considered internally consistent.
pub const CONSISTENCY_TOL: f64 = 1e-5;

/// Finite differences of `L(α)` smaller than this are treated as noise when
/// detecting critical points. The tail estimator varies smoothly with α at
/// the 1e-10 level, while the flattest oscillations of `L(α)` that still
/// matter (N = 9 near its first maximum) produce differences of a few 1e-8.
const CRITICAL_NOISE_FLOOR: f64 = 3e-9;

/// One shooting outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingRecord {
    pub alpha: f64,
    pub l_tail: Option<f64>,
    pub fit_error: Option<f64>,
    pub l_integral: Option<f64>,
    pub status: ProfileStatus,
    pub branch_id: Option<u32>,
    /// Tolerance the `|l_tail - l_integral|` consistency was checked at.
    pub consistency_tol: f64,
}

impl ShootingRecord {
    pub fn consistent(&self) -> bool {
        match (self.l_tail, self.l_integral) {
            (Some(a), Some(b)) => (a - b).abs() <= self.consistency_tol,
            _ => true,
        }
    }
}

/// The scanned branch structure of `L(α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagram {
    pub records: Vec<ShootingRecord>,
    /// α values where `dL/dα` changes sign, strictly inside the scan range.
    pub critical_points: Vec<f64>,
    pub params: ProblemParams,
    /// Integrator configuration the records were computed with; root
    /// refinement re-solves under the same configuration.
    pub config: IntegratorConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShootingError {
    InvalidRange { alpha_min: f64, alpha_max: f64 },
    TooFewPoints(usize),
    /// No sign change of `L(α) - L_target` inside the scanned range.
    NoBracket { l_target: f64 },
    /// Profiles handed to minimality classification disagree in `L`.
    MismatchedL { spread: f64, tol: f64 },
    EmptyOverlap,
    Ode(OdeError),
    Asymptotics(AsymptoticsError),
}

impl fmt::Display for ShootingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShootingError::InvalidRange { alpha_min, alpha_max } => {
                write!(f, "invalid scan range [{alpha_min}, {alpha_max}]")
            }
            ShootingError::TooFewPoints(n) => write!(f, "scan needs at least 3 points, got {n}"),
            ShootingError::NoBracket { l_target } => {
                write!(f, "no bracket for L = {l_target} in the scanned range")
            }
            ShootingError::MismatchedL { spread, tol } => {
                write!(f, "profiles span L range {spread} above tolerance {tol}")
            }
            ShootingError::EmptyOverlap => write!(f, "profiles have no overlapping radii"),
            ShootingError::Ode(e) => write!(f, "{e}"),
            ShootingError::Asymptotics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ShootingError {}

impl From<OdeError> for ShootingError {
    fn from(e: OdeError) -> Self {
        ShootingError::Ode(e)
    }
}

impl From<AsymptoticsError> for ShootingError {
    fn from(e: AsymptoticsError) -> Self {
        ShootingError::Asymptotics(e)
    }
}

/// Shoot one `α` and assemble the record (without branch assignment).
pub fn shoot_once(
    params: &ProblemParams,
    alpha: f64,
    cfg: &IntegratorConfig,
) -> Result<ShootingRecord, ShootingError> {
    let solved = solve_profile(params, alpha, cfg)?;
    let (l_tail, fit_error) = match estimate_l_tail(&solved) {
        Ok(fit) => (Some(fit.l), Some(fit.fit_error)),
        Err(AsymptoticsError::FitDiverged { fit_error }) => (None, Some(fit_error)),
        Err(_) => (None, None),
    };
    let l_integral = estimate_l_integral(&solved).ok();
    Ok(ShootingRecord {
        alpha,
        l_tail,
        fit_error,
        l_integral,
        status: solved.status,
        branch_id: None,
        consistency_tol: CONSISTENCY_TOL,
    })
}

/// Scan `α` uniformly over `[alpha_min, alpha_max]`, one record per point,
/// distributed across the thread pool with order-preserving assembly.
pub fn scan_alpha(
    params: &ProblemParams,
    alpha_min: f64,
    alpha_max: f64,
    count: usize,
    cfg: &IntegratorConfig,
) -> Result<BranchDiagram, ShootingError> {
    if !(alpha_min < alpha_max) {
        return Err(ShootingError::InvalidRange { alpha_min, alpha_max });
    }
    if count < 3 {
        return Err(ShootingError::TooFewPoints(count));
    }
    params
        .require_branch_dimension()
        .map_err(|_| ShootingError::Ode(OdeError::InvalidConfig))?;

    let alphas: Vec<f64> = (0..count)
        .map(|i| alpha_min + (alpha_max - alpha_min) * i as f64 / (count - 1) as f64)
        .collect();
    let mut records = alphas
        .par_iter()
        .map(|&alpha| shoot_once(params, alpha, cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let critical_points = detect_critical_points(&records);
    for rec in records.iter_mut() {
        let id = critical_points.iter().filter(|&&c| c < rec.alpha).count() as u32;
        rec.branch_id = Some(id);
    }
    Ok(BranchDiagram { records, critical_points, params: *params, config: *cfg })
}

/// Sign changes of the significant finite differences of `L(α)`. A flat
/// extremum leaves a run of sub-floor differences around the top, so the
/// flip test pairs each significant difference with the previous significant
/// one rather than with its neighbor; the extremum is then located as the
/// extremal record between the flanks, refined by the local parabola.
fn detect_critical_points(records: &[ShootingRecord]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last_sig: Option<(usize, f64)> = None;
    for i in 0..records.len().saturating_sub(1) {
        let (Some(l0), Some(l1)) = (records[i].l_tail, records[i + 1].l_tail) else {
            last_sig = None;
            continue;
        };
        let d = l1 - l0;
        if d.abs() < CRITICAL_NOISE_FLOOR {
            continue;
        }
        if let Some((j, sign)) = last_sig {
            if sign != d.signum() {
                out.push(locate_extremum(records, j, i + 1, sign > 0.0));
            }
        }
        last_sig = Some((i, d.signum()));
    }
    out
}

/// α of the extremal record in `[lo, hi]`, parabola-refined when the
/// neighbors carry estimates.
fn locate_extremum(records: &[ShootingRecord], lo: usize, hi: usize, is_max: bool) -> f64 {
    let mut best = lo;
    let mut best_l = f64::NEG_INFINITY;
    for (k, rec) in records.iter().enumerate().take(hi + 1).skip(lo) {
        if let Some(l) = rec.l_tail {
            let v = if is_max { l } else { -l };
            if v > best_l {
                best_l = v;
                best = k;
            }
        }
    }
    if best > 0 && best + 1 < records.len() {
        if let (Some(l0), Some(l1), Some(l2)) = (
            records[best - 1].l_tail,
            records[best].l_tail,
            records[best + 1].l_tail,
        ) {
            let h = records[best].alpha - records[best - 1].alpha;
            let denom = l0 - 2.0 * l1 + l2;
            if denom != 0.0 {
                let delta = 0.5 * h * (l0 - l2) / denom;
                return records[best].alpha + delta.clamp(-h, h);
            }
        }
    }
    records[best].alpha
}

/// All roots of `L(α) = l_target` inside the scanned range, refined by
/// bisection with secant acceleration to `|L(α) - l_target| ≤ tol`,
/// deduplicated and sorted ascending.
pub fn solve_s_l(
    diagram: &BranchDiagram,
    l_target: f64,
    tol: f64,
) -> Result<Vec<f64>, ShootingError> {
    let params = diagram.params;
    let cfg = diagram.config;
    // NaN rejects a root whose refinement solve failed.
    let eval = |alpha: f64| -> f64 {
        match shoot_once(&params, alpha, &cfg) {
            Ok(rec) => rec.l_tail.map_or(f64::NAN, |l| l - l_target),
            Err(_) => f64::NAN,
        }
    };

    let mut roots: Vec<f64> = Vec::new();
    let recs = &diagram.records;
    let spacing = if recs.len() > 1 { recs[1].alpha - recs[0].alpha } else { 0.0 };
    for w in recs.windows(2) {
        let (Some(l0), Some(l1)) = (w[0].l_tail, w[1].l_tail) else { continue };
        let f0 = l0 - l_target;
        let f1 = l1 - l_target;
        if f0 == 0.0 {
            roots.push(w[0].alpha);
            continue;
        }
        if f0.signum() == f1.signum() {
            continue;
        }
        let (root, fval) = refine_root(w[0].alpha, w[1].alpha, f0, f1, tol, 1e-13, eval);
        if fval.is_finite() && fval.abs() <= tol {
            roots.push(root);
        }
    }
    // Merge near-identical roots from adjacent cells.
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 0.5 * spacing.max(1e-12));
    if roots.is_empty() {
        return Err(ShootingError::NoBracket { l_target });
    }
    Ok(roots)
}

/// Index of the profile smallest at the origin plus whether it lies below
/// every other profile at every shared radius (within slack).
pub fn classify_minimal(
    solutions: &[SolvedProfile],
    l_tol: f64,
) -> Result<(usize, bool), ShootingError> {
    assert!(!solutions.is_empty(), "classify_minimal needs at least one profile");
    let mut ls = Vec::with_capacity(solutions.len());
    for s in solutions {
        ls.push(estimate_l_tail(s)?.l);
    }
    let spread = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ls.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > l_tol {
        return Err(ShootingError::MismatchedL { spread, tol: l_tol });
    }

    let minimal_index = solutions
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.profile.alpha.total_cmp(&b.1.profile.alpha))
        .map(|(i, _)| i)
        .unwrap();

    // Pointwise comparison on the common range only.
    let r_common = solutions.iter().map(|s| s.profile.r_max()).fold(f64::INFINITY, f64::min);
    let minimal = &solutions[minimal_index].profile;
    let samples = 2000;
    let mut ordered = true;
    'outer: for (j, s) in solutions.iter().enumerate() {
        if j == minimal_index {
            continue;
        }
        for k in 0..=samples {
            let r = r_common * k as f64 / samples as f64;
            let a = minimal.eval(r).expect("in range");
            let b = s.profile.eval(r).expect("in range");
            if a > b + 1e-8 {
                ordered = false;
                break 'outer;
            }
        }
    }
    Ok((minimal_index, ordered))
}

/// Number of sign changes of `a - b` over `r_interval`, evaluated on the
/// union of the two grids with interpolation between nodes; exact zeros do
/// not count as changes.
pub fn count_sign_changes(
    a: &RadialProfile,
    b: &RadialProfile,
    r_interval: (f64, f64),
) -> Result<usize, ShootingError> {
    let lo = r_interval.0.max(0.0);
    let hi = r_interval.1.min(a.r_max()).min(b.r_max());
    if !(lo < hi) {
        return Err(ShootingError::EmptyOverlap);
    }
    let mut xs: Vec<f64> =
        a.r.iter().chain(b.r.iter()).copied().filter(|&r| r >= lo && r <= hi).collect();
    xs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    xs.dedup();
    if xs.len() < 2 {
        return Err(ShootingError::EmptyOverlap);
    }

    let mut changes = 0;
    let mut last_sign = 0i8;
    for &x in &xs {
        let d = a.eval(x).expect("in range") - b.eval(x).expect("in range");
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                changes += 1;
            }
            last_sign = sign;
        }
    }
    Ok(changes)
}

/// CSV serialization of a branch diagram: `alpha,L_tail,L_integral,status`,
/// 17 significant digits, empty fields for absent estimates.
pub fn diagram_to_csv(diagram: &BranchDiagram) -> String {
    let mut out = String::from("alpha,L_tail,L_integral,status\n");
    for rec in &diagram.records {
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{:.16e},{},{},{}\n",
            rec.alpha,
            fmt_opt(rec.l_tail),
            fmt_opt(rec.l_integral),
            rec.status.label()
        ));
    }
    out
}
