//! Glued radial super/subsolutions and the quadrature test of the weak
//! stationary inequality.
//!
//! Two exact profiles that cross can be spliced at the crossing radius. If
//! the inner derivative dominates the outer one there, the splice is a weak
//! supersolution of the stationary equation; with the inequality reversed it
//! is a weak subsolution. In the weak form
//!
//! ```text
//! I(η) = ∫ [ φ (η'' + (N-1)/r η' - (r/2) η' - (N/2) η) + (e^φ + 1) η ] r^{N-1} dr
//! ```
//!
//! the splice contributes the kink term `(φ'(R+) - φ'(R-)) η(R) R^{N-1}`,
//! whose sign decides the inequality; everything else cancels because the
//! pieces solve the equation exactly. The checker integrates `I(η)` against
//! a finite family of smooth bumps, concentrated where a wrong-sign kink
//! would show first.

use crate::asymptotics::GridInterp;
use crate::numeric::gauss8_composite;
use crate::problem::ProblemParams;
use crate::profile::RadialProfile;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Which inequality a glued profile is built to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlueKind {
    Supersolution,
    Subsolution,
}

impl GlueKind {
    pub fn label(&self) -> &'static str {
        match self {
            GlueKind::Supersolution => "supersolution",
            GlueKind::Subsolution => "subsolution",
        }
    }
}

/// Absolute matching tolerance for the values of the two pieces at the
/// glue radius; crossings are refined far below this.
pub const MATCH_TOL: f64 = 1e-9;

/// A radial profile spliced from two pieces at `glue_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluedProfile {
    pub inner: RadialProfile,
    pub outer: RadialProfile,
    pub glue_radius: f64,
    pub kind: GlueKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GlueError {
    /// No sign change of the difference on the search interval.
    NoCrossing,
    /// Values of the two pieces differ at the glue radius beyond tolerance.
    MatchingViolated { gap: f64 },
    /// Derivative ordering at the glue radius contradicts the glue kind.
    DerivativeOrderViolated { inner: f64, outer: f64 },
    /// Glue radius outside one of the piece ranges.
    OutOfRange { r: f64 },
    /// Bump support leaves the profile range.
    BumpOutsideRange { hi: f64, r_max: f64 },
}

impl fmt::Display for GlueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlueError::NoCrossing => write!(f, "profiles do not cross on the search interval"),
            GlueError::MatchingViolated { gap } => {
                write!(f, "piece values differ by {gap} at the glue radius")
            }
            GlueError::DerivativeOrderViolated { inner, outer } => {
                write!(f, "derivative ordering violated: inner' = {inner}, outer' = {outer}")
            }
            GlueError::OutOfRange { r } => write!(f, "glue radius {r} outside a piece range"),
            GlueError::BumpOutsideRange { hi, r_max } => {
                write!(f, "bump support reaches {hi}, beyond the profile range {r_max}")
            }
        }
    }
}

impl std::error::Error for GlueError {}

/// First sign-change radius of `moving - fixed` on the search interval,
/// refined by bisection to `1e-12` absolute.
pub fn find_crossing(
    moving: &RadialProfile,
    fixed: &RadialProfile,
    search: (f64, f64),
) -> Result<f64, GlueError> {
    let lo = search.0.max(0.0);
    let hi = search.1.min(moving.r_max()).min(fixed.r_max());
    if !(lo < hi) {
        return Err(GlueError::NoCrossing);
    }
    let diff = |r: f64| moving.eval(r).expect("in range") - fixed.eval(r).expect("in range");

    // Walk a fine grid until the difference changes sign, then bisect.
    let steps = 4096;
    let mut a = lo;
    let mut fa = diff(a);
    let mut bracket = None;
    for k in 1..=steps {
        let b = lo + (hi - lo) * k as f64 / steps as f64;
        let fb = diff(b);
        if fa == 0.0 {
            return Ok(a);
        }
        if fa.signum() != fb.signum() {
            bracket = Some((a, b, fa, fb));
            break;
        }
        a = b;
        fa = fb;
    }
    let (mut a, mut b, mut fa, _) = bracket.ok_or(GlueError::NoCrossing)?;
    while b - a > 1e-12 {
        let mid = 0.5 * (a + b);
        let fm = diff(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Splice `inner` (kept on `[0, r_star]`) with `outer` (beyond), validating
/// the matching value and the derivative ordering required by `kind`.
pub fn glue(
    inner: &RadialProfile,
    outer: &RadialProfile,
    r_star: f64,
    kind: GlueKind,
) -> Result<GluedProfile, GlueError> {
    if r_star <= 0.0 || r_star > inner.r_max() || r_star > outer.r_max() {
        return Err(GlueError::OutOfRange { r: r_star });
    }
    let vi = inner.eval(r_star).expect("in range");
    let vo = outer.eval(r_star).expect("in range");
    let gap = (vi - vo).abs();
    if gap > MATCH_TOL {
        return Err(GlueError::MatchingViolated { gap });
    }
    let di = inner.eval_derivative(r_star).expect("in range");
    let do_ = outer.eval_derivative(r_star).expect("in range");
    let ordered = match kind {
        GlueKind::Supersolution => di >= do_ - 1e-12,
        GlueKind::Subsolution => di <= do_ + 1e-12,
    };
    if !ordered {
        return Err(GlueError::DerivativeOrderViolated { inner: di, outer: do_ });
    }
    Ok(GluedProfile { inner: inner.clone(), outer: outer.clone(), glue_radius: r_star, kind })
}

impl GluedProfile {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.glue_radius {
            self.inner.eval(r).expect("in range")
        } else {
            self.outer.eval(r).expect("in range")
        }
    }

    pub fn r_max(&self) -> f64 {
        self.inner.r_max().min(self.outer.r_max())
    }

    /// Sample onto a fresh profile (the kink is preserved up to the grid).
    pub fn to_profile(&self, count: usize) -> RadialProfile {
        let r_max = self.r_max();
        let n = count.max(16);
        let mut r = Vec::with_capacity(n);
        let mut value = Vec::with_capacity(n);
        let mut derivative = Vec::with_capacity(n);
        for i in 0..n {
            let x = r_max * i as f64 / (n - 1) as f64;
            let piece = if x <= self.glue_radius { &self.inner } else { &self.outer };
            r.push(x);
            value.push(piece.eval(x).expect("in range"));
            derivative.push(if i == 0 {
                0.0
            } else {
                piece.eval_derivative(x).expect("in range")
            });
        }
        RadialProfile::new(self.inner.params, self.inner.alpha, r, value, derivative)
            .expect("sampled glue is a valid profile")
    }

    /// CSV form: metadata row naming the glue, then the standard columns.
    pub fn to_csv(&self, count: usize) -> String {
        let profile = self.to_profile(count);
        let mut out = format!("# kind={} glue_radius={:.16e}\n", self.kind.label(), self.glue_radius);
        out.push_str(&profile.to_csv());
        out
    }
}

/// Smooth compactly supported radial test function. The radial section is
/// the even extension of `exp(-1/(1-u²))` with `u = (r - center)/width`, so
/// it vanishes with all derivatives at the support edges and stays twice
/// continuously differentiable at the origin even when the support covers it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestBump {
    pub center: f64,
    pub width: f64,
}

impl TestBump {
    pub fn new(center: f64, width: f64) -> Self {
        assert!(center >= 0.0 && width > 0.0, "bump needs center >= 0, width > 0");
        TestBump { center, width }
    }

    pub fn support_hi(&self) -> f64 {
        self.center + self.width
    }

    /// Value, first, and second derivative at radius `r >= 0`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let (v1, d1, s1) = bump_piece((r - self.center) / self.width);
        let (v2, d2, s2) = bump_piece((-r - self.center) / self.width);
        let w = self.width;
        (v1 + v2, (d1 - d2) / w, (s1 + s2) / (w * w))
    }
}

/// `g(u) = exp(-1/(1-u²))` on (-1, 1), zero outside, with两 derivatives.
fn bump_piece(u: f64) -> (f64, f64, f64) {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let g = (-1.0 / q).exp();
    let w = -2.0 * u / (q * q); // d/du of (-1/q)
    let dw = -2.0 / (q * q) - 8.0 * u * u / (q * q * q);
    (g, g * w, g * (w * w + dw))
}

/// The standard bump family: centers {0.5, 1, 2, 4, 8}, widths {0.25, 0.5, 1}.
pub fn standard_bumps() -> Vec<TestBump> {
    let mut out = Vec::new();
    for &c in &[0.5, 1.0, 2.0, 4.0, 8.0] {
        for &w in &[0.25, 0.5, 1.0] {
            out.push(TestBump::new(c, w));
        }
    }
    out
}

/// Outcome of the weak inequality test over a bump family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakCheck {
    /// The extreme `I(η)` over the family (max for supersolutions, min for
    /// subsolutions).
    pub worst_value: f64,
    pub pass: bool,
    pub values: Vec<f64>,
}

/// Integrate the weak form against each bump and test the inequality of the
/// glue kind with slack `tol`: supersolutions need `I(η) ≤ tol` for every
/// bump, subsolutions `I(η) ≥ -tol`.
pub fn weak_inequality_check(
    glued: &GluedProfile,
    params: &ProblemParams,
    bumps: &[TestBump],
    tol: f64,
) -> Result<WeakCheck, GlueError> {
    let r_max = glued.r_max();
    for b in bumps {
        if b.support_hi() > r_max {
            return Err(GlueError::BumpOutsideRange { hi: b.support_hi(), r_max });
        }
    }
    let inner_interp = GridInterp::new(&glued.inner);
    let outer_interp = GridInterp::new(&glued.outer);
    let nf = params.dimension_f();

    let values: Vec<f64> = bumps
        .iter()
        .map(|bump| {
            let lo: f64 = (bump.center - bump.width).max(0.0);
            let hi = bump.support_hi();
            let integrand = |r: f64| {
                if r <= 0.0 {
                    return 0.0;
                }
                let phi = if r <= glued.glue_radius {
                    inner_interp.value(r)
                } else {
                    outer_interp.value(r)
                };
                let (eta, eta_d, eta_dd) = bump.eval(r);
                let lstar =
                    eta_dd + (nf - 1.0) / r * eta_d - r / 2.0 * eta_d - nf / 2.0 * eta;
                (phi * lstar + (phi.exp() + 1.0) * eta) * r.powf(nf - 1.0)
            };
            // Split the panels at the kink so the integrand stays smooth
            // per panel; panel width follows the bump's transition layers.
            let mut acc = 0.0;
            let g = glued.glue_radius;
            if g > lo && g < hi {
                acc += gauss8_composite(lo, g, panels(lo, g, bump.width), integrand);
                acc += gauss8_composite(g, hi, panels(g, hi, bump.width), integrand);
            } else {
                acc += gauss8_composite(lo, hi, panels(lo, hi, bump.width), integrand);
            }
            acc
        })
        .collect();

    let (worst_value, pass) = match glued.kind {
        GlueKind::Supersolution => {
            let worst = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (worst, worst <= tol)
        }
        GlueKind::Subsolution => {
            let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
            (worst, worst >= -tol)
        }
    };
    Ok(WeakCheck { worst_value, pass, values })
}

fn panels(lo: f64, hi: f64, bump_width: f64) -> usize {
    let width = (bump_width / 128.0).min(0.01);
    (((hi - lo) / width).ceil() as usize).clamp(8, 20_000)
}

/// A supersolution glued per the crossing construction: shoot `φ(·; α)` with
/// `α` a little below `φ_L(0)`, splice it with `φ_L` at their first
/// crossing. Searches `α` upward toward `φ_L(0)` until the splice stays
/// within `gap` of `φ_L` on the inner piece; returns the glue and the
/// distance `φ_L(0) - α` that worked.
pub fn supersolution_below(
    phi_l: &RadialProfile,
    params: &ProblemParams,
    cfg: &crate::ode::IntegratorConfig,
    gap: f64,
) -> Result<(GluedProfile, f64), GlueError> {
    build_prop8(phi_l, params, cfg, gap, GlueKind::Supersolution)
}

/// The subsolution counterpart: `α` a little above `φ_L(0)`, nonincreasing
/// overall, spliced at the first crossing.
pub fn subsolution_above(
    phi_l: &RadialProfile,
    params: &ProblemParams,
    cfg: &crate::ode::IntegratorConfig,
    gap: f64,
) -> Result<(GluedProfile, f64), GlueError> {
    build_prop8(phi_l, params, cfg, gap, GlueKind::Subsolution)
}

fn build_prop8(
    phi_l: &RadialProfile,
    params: &ProblemParams,
    cfg: &crate::ode::IntegratorConfig,
    gap: f64,
    kind: GlueKind,
) -> Result<(GluedProfile, f64), GlueError> {
    let alpha_star = phi_l.alpha;
    // Half the allowed gap keeps the envelope inequalities strict.
    let mut delta = (0.5 * gap).min(0.5);
    for _ in 0..24 {
        let alpha = match kind {
            GlueKind::Supersolution => alpha_star - delta,
            GlueKind::Subsolution => alpha_star + delta,
        };
        if let Ok(solved) = crate::ode::solve_profile(params, alpha, cfg) {
            if let Ok(r_star) = find_crossing(&solved.profile, phi_l, (1e-3, phi_l.r_max())) {
                if let Ok(glued) = glue(&solved.profile, phi_l, r_star, kind) {
                    // Inner piece must stay within `gap` of φ_L up to the splice.
                    let mut within = true;
                    let samples = 400;
                    for k in 0..=samples {
                        let r = r_star * k as f64 / samples as f64;
                        let d = (glued.inner.eval(r).expect("in range")
                            - phi_l.eval(r).expect("in range"))
                        .abs();
                        if d > gap {
                            within = false;
                            break;
                        }
                    }
                    if within {
                        return Ok((glued, delta));
                    }
                }
            }
        }
        delta *= 0.5;
    }
    Err(GlueError::NoCrossing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{solve_profile, IntegratorConfig};
    use crate::problem::ProblemParams;

    fn line_profile(params: ProblemParams, a: f64, b: f64) -> RadialProfile {
        // f(r) = a + b r on [0, 5]; origin slope pinned to zero as required,
        // which only matters in the first 0.05 segment.
        let r: Vec<f64> = (0..101).map(|i| 0.05 * i as f64).collect();
        let value: Vec<f64> = r.iter().map(|&x| a + b * x).collect();
        let mut deriv = vec![b; 101];
        deriv[0] = 0.0;
        RadialProfile::new(params, a, r, value, deriv).unwrap()
    }

    #[test]
    fn crossing_of_lines() {
        let params = ProblemParams::exponential(3).unwrap();
        let falling = line_profile(params, 1.0, -1.0);
        let zero = line_profile(params, 0.0, 0.0);
        let r = find_crossing(&falling, &zero, (0.1, 5.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-10, "crossing at {r}");

        let shifted = line_profile(params, 1.0, 0.0);
        assert!(matches!(
            find_crossing(&shifted, &zero, (0.1, 5.0)),
            Err(GlueError::NoCrossing)
        ));
    }

    #[test]
    fn self_glue_is_valid_for_both_kinds() {
        let params = ProblemParams::exponential(3).unwrap();
        let solved = solve_profile(&params, 0.0, &IntegratorConfig::default()).unwrap();
        for kind in [GlueKind::Supersolution, GlueKind::Subsolution] {
            let g = glue(&solved.profile, &solved.profile, 2.0, kind).unwrap();
            assert_eq!(g.glue_radius, 2.0);
        }
    }

    #[test]
    fn glue_validation_errors() {
        let params = ProblemParams::exponential(3).unwrap();
        let a = line_profile(params, 1.0, -1.0);
        let b = line_profile(params, 0.0, 0.0);
        // Values differ at r = 2.
        assert!(matches!(glue(&a, &b, 2.0, GlueKind::Supersolution), Err(GlueError::MatchingViolated { .. })));
        // Values match at the crossing r = 1 but inner' = -1 < outer' = 0,
        // wrong order for a supersolution.
        assert!(matches!(
            glue(&a, &b, 1.0, GlueKind::Supersolution),
            Err(GlueError::DerivativeOrderViolated { .. })
        ));
        assert!(glue(&a, &b, 1.0, GlueKind::Subsolution).is_ok());
    }

    #[test]
    fn bump_is_smooth_and_supported() {
        let bump = TestBump::new(2.0, 0.5);
        assert_eq!(bump.eval(1.4), (0.0, 0.0, 0.0));
        assert_eq!(bump.eval(2.6), (0.0, 0.0, 0.0));
        let (v, _, _) = bump.eval(2.0);
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        // Derivatives agree with finite differences of the value.
        let h = 1e-5;
        for &r in &[1.8, 2.0, 2.3] {
            let (v0, d, s) = bump.eval(r);
            let (vp, _, _) = bump.eval(r + h);
            let (vm, _, _) = bump.eval(r - h);
            assert!((d - (vp - vm) / (2.0 * h)).abs() < 1e-6);
            assert!((s - (vp - 2.0 * v0 + vm) / (h * h)).abs() < 1e-4);
        }
        // Origin-covering bump stays even: derivative vanishes at r = 0.
        let wide = TestBump::new(0.5, 1.0);
        let (_, d0, _) = wide.eval(0.0);
        assert!(d0.abs() < 1e-15);
    }

    #[test]
    fn exact_solution_passes_weak_equality() {
        let params = ProblemParams::exponential(3).unwrap();
        let cfg = IntegratorConfig::default();
        let solved = solve_profile(&params, 0.0, &cfg).unwrap();
        let glued = glue(&solved.profile, &solved.profile, 3.0, GlueKind::Supersolution).unwrap();
        let check = weak_inequality_check(&glued, &params, &standard_bumps(), 1e-6).unwrap();
        assert!(check.pass, "worst {}", check.worst_value);
        for v in &check.values {
            assert!(v.abs() < 1e-6, "I(eta) = {v} should vanish for an exact solution");
        }
    }

    #[test]
    fn glued_csv_carries_metadata_row() {
        let params = ProblemParams::exponential(3).unwrap();
        let solved = solve_profile(&params, 0.0, &IntegratorConfig::default()).unwrap();
        let g = glue(&solved.profile, &solved.profile, 2.0, GlueKind::Subsolution).unwrap();
        let csv = g.to_csv(64);
        let mut lines = csv.lines();
        let meta = lines.next().unwrap();
        assert!(meta.starts_with("# kind=subsolution glue_radius=2."), "meta row: {meta}");
        assert_eq!(lines.next().unwrap(), "r,value,derivative");
        let parsed = crate::profile::parse_profile_csv(&csv).unwrap();
        assert_eq!(parsed.0.len(), 64);
    }

    #[test]
    fn bump_outside_range_rejected() {
        let params = ProblemParams::exponential(3).unwrap();
        let cfg = IntegratorConfig::default().with_r_max(6.0);
        let solved = solve_profile(&params, 0.0, &cfg).unwrap();
        let glued = glue(&solved.profile, &solved.profile, 3.0, GlueKind::Supersolution).unwrap();
        let far = [TestBump::new(8.0, 1.0)];
        assert!(matches!(
            weak_inequality_check(&glued, &params, &far, 1e-6),
            Err(GlueError::BumpOutsideRange { .. })
        ));
    }
}
