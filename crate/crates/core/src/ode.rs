//! Adaptive integration of the singular radial profile equations from the
//! origin outward.
//!
//! The `1/r` coefficient makes `r = 0` a regular singular point, so stepping
//! cannot start there. Instead a short series start is used: matching
//! `φ'' + (N-1)/r φ' = -F(α)` with a quadratic ansatz forces
//!
//! ```text
//! φ(r)  ≈ α - F(α) r² / (2N),    φ'(r) ≈ -F(α) r / N,
//! ```
//!
//! with `O(r⁴)` truncation. From the start radius a Dormand–Prince 5(4) pair
//! with dense output integrates the pair `(φ, φ')` to `r_max`, emitting a
//! grid fine enough for downstream quadrature and differentiation. Loss of
//! positivity of the power-type variants is an expected outcome, detected on
//! the fly and reported as a first-class status.

use crate::numeric::poly_derivatives_at;
use crate::problem::{Nonlinearity, ProblemParams};
use crate::profile::{ProfileError, RadialProfile};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Output grid selection for [`solve_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OutputGrid {
    /// Resample onto `count` uniformly spaced radii (including `r = 0`).
    Uniform(usize),
    /// Keep the accepted integration steps, subdivided so consecutive radii
    /// are at most `0.005·max(1, r)` apart.
    Adaptive,
}

/// Integrator tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub r_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub taylor_radius: f64,
    pub max_steps: u64,
    pub output_grid: OutputGrid,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            r_max: 50.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            taylor_radius: 1e-3,
            max_steps: 10_000_000,
            output_grid: OutputGrid::Adaptive,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), OdeError> {
        let ok = self.r_max > 0.0
            && self.taylor_radius > 0.0
            && self.taylor_radius < self.r_max
            && self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(OdeError::InvalidConfig)
        }
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }
}

/// Terminal state of a profile integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProfileStatus {
    /// Reached `r_max`.
    Converged,
    /// `ψ` (power approximation) or `φ` (pure power) reached zero at the
    /// recorded radius.
    PositivityLost { r_zero: f64 },
    /// Value exceeded the overflow guard `10³⁰⁰`.
    RangeExceeded,
    /// Step size underflow or step budget exhausted.
    StepFailure,
}

impl ProfileStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, ProfileStatus::Converged)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProfileStatus::Converged => "Converged",
            ProfileStatus::PositivityLost { .. } => "PositivityLost",
            ProfileStatus::RangeExceeded => "RangeExceeded",
            ProfileStatus::StepFailure => "StepFailure",
        }
    }
}

/// A computed profile together with its integration status.
#[derive(Debug, Clone)]
pub struct SolvedProfile {
    pub profile: RadialProfile,
    pub status: ProfileStatus,
    /// Whether the stored derivative is ≤ 0 (within slack) on the whole grid.
    pub monotone_nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError {
    InvalidConfig,
    Params(crate::problem::ParamError),
    /// Initial value at or below the positivity floor of the variant.
    AlphaBelowFloor { alpha: f64, floor: f64 },
    /// `taylor_start` queried beyond its validity radius.
    BeyondTaylorRadius { r: f64, taylor_radius: f64 },
    /// The positivity floor was hit; carries the crossing radius.
    PositivityLost { r: f64 },
    Profile(ProfileError),
}

impl fmt::Display for OdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OdeError::InvalidConfig => write!(f, "invalid integrator configuration"),
            OdeError::Params(e) => write!(f, "{e}"),
            OdeError::AlphaBelowFloor { alpha, floor } => {
                write!(f, "initial value {alpha} at or below positivity floor {floor}")
            }
            OdeError::BeyondTaylorRadius { r, taylor_radius } => {
                write!(f, "r = {r} beyond series start radius {taylor_radius}")
            }
            OdeError::PositivityLost { r } => write!(f, "positivity lost at r = {r}"),
            OdeError::Profile(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for OdeError {}

impl From<ProfileError> for OdeError {
    fn from(e: ProfileError) -> Self {
        OdeError::Profile(e)
    }
}

impl From<crate::problem::ParamError> for OdeError {
    fn from(e: crate::problem::ParamError) -> Self {
        OdeError::Params(e)
    }
}

/// Second derivative implied by the profile equation at `(r, value, derivative)`.
///
/// Errors with [`OdeError::PositivityLost`] where the power terms are
/// undefined (`φ ≤ -n` for the approximation, `φ < 0` for the pure power)
/// rather than silently evaluating a sign-flipped power.
pub fn rhs(params: &ProblemParams, r: f64, value: f64, derivative: f64) -> Result<f64, OdeError> {
    match params.nonlinearity() {
        Nonlinearity::PowerApprox { n } if value <= -f64::from(n) => {
            return Err(OdeError::PositivityLost { r });
        }
        Nonlinearity::Power { .. } if value < 0.0 => {
            return Err(OdeError::PositivityLost { r });
        }
        _ => {}
    }
    Ok(rhs_clamped(params, r, value, derivative))
}

/// Same as [`rhs`] with the power terms extended continuously by zero past
/// the positivity floor; safe for trial stage evaluations that may overshoot.
#[inline]
fn rhs_clamped(params: &ProblemParams, r: f64, value: f64, derivative: f64) -> f64 {
    let n = params.dimension_f();
    -((n - 1.0) / r + r / 2.0) * derivative - params.forcing(value)
}

/// Series start of the regular solution near the origin; valid for
/// `0 ≤ r ≤ max_radius` with truncation error `O(r⁴)`.
pub fn taylor_start(
    params: &ProblemParams,
    alpha: f64,
    r: f64,
    max_radius: f64,
) -> Result<(f64, f64), OdeError> {
    if r < 0.0 || r.is_nan() || r > max_radius {
        return Err(OdeError::BeyondTaylorRadius { r, taylor_radius: max_radius });
    }
    let f0 = params.forcing(alpha);
    let n = params.dimension_f();
    Ok((alpha - f0 * r * r / (2.0 * n), -f0 * r / n))
}

// Dormand–Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B_HAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
// Quartic dense-output weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const OVERFLOW_GUARD: f64 = 1e300;
/// Emission cap: consecutive output radii at most `0.005·max(1, r)` apart.
const EMIT_CAP: f64 = 5e-3;

type State = [f64; 2];

struct DenseSegment {
    r0: f64,
    h: f64,
    rcont: [[f64; 2]; 5],
}

impl DenseSegment {
    fn new(r0: f64, h: f64, y0: State, y1: State, k1: State, k_end: State, quart: State) -> Self {
        let mut rcont = [[0.0; 2]; 5];
        for c in 0..2 {
            let ydiff = y1[c] - y0[c];
            let bspl = h * k1[c] - ydiff;
            rcont[0][c] = y0[c];
            rcont[1][c] = ydiff;
            rcont[2][c] = bspl;
            rcont[3][c] = ydiff - h * k_end[c] - bspl;
            rcont[4][c] = h * quart[c];
        }
        DenseSegment { r0, h, rcont }
    }

    fn eval(&self, r: f64) -> State {
        let theta = (r - self.r0) / self.h;
        let mt = 1.0 - theta;
        let mut out = [0.0; 2];
        for c in 0..2 {
            out[c] = self.rcont[0][c]
                + theta
                    * (self.rcont[1][c]
                        + mt * (self.rcont[2][c]
                            + theta * (self.rcont[3][c] + mt * self.rcont[4][c])));
        }
        out
    }
}

/// Integrate the profile equation with initial value `φ(0) = α`.
pub fn solve_profile(
    params: &ProblemParams,
    alpha: f64,
    cfg: &IntegratorConfig,
) -> Result<SolvedProfile, OdeError> {
    cfg.validate()?;
    if let Some(floor) = params.positivity_floor() {
        if alpha <= floor {
            return Err(OdeError::AlphaBelowFloor { alpha, floor });
        }
    }

    // Start radius from the quartic series coefficient so the truncated
    // terms stay well below the absolute tolerance even for steep forcing.
    let f0 = params.forcing(alpha);
    let n = params.dimension_f();
    let a4 = f0 * (1.0 + params.forcing_derivative(alpha)) / (8.0 * n * (n + 2.0));
    let r_start = (0.01 * cfg.abs_tol / a4.abs().max(1e-12))
        .powf(0.25)
        .min(cfg.taylor_radius)
        .max(1e-7);

    let mut grid_r: Vec<f64> = vec![0.0];
    let mut grid_v: Vec<f64> = vec![alpha];
    let mut grid_d: Vec<f64> = vec![0.0];

    let (v0, d0) = taylor_start(params, alpha, r_start, cfg.taylor_radius)?;
    let mut r = r_start;
    let mut y: State = [v0, d0];
    grid_r.push(r);
    grid_v.push(y[0]);
    grid_d.push(y[1]);

    let floor = params.positivity_floor();
    let rhs_at = |r: f64, y: &State| -> State { [y[1], rhs_clamped(params, r, y[0], y[1])] };

    let mut h = (r_start / 10.0).min(cfg.r_max - r);
    let mut k1 = rhs_at(r, &y);
    let mut steps: u64 = 0;
    let mut status = ProfileStatus::Converged;

    'outer: while r < cfg.r_max {
        steps += 1;
        if steps > cfg.max_steps {
            status = ProfileStatus::StepFailure;
            break;
        }
        if h < 1e-13 * r.max(1.0) {
            status = ProfileStatus::StepFailure;
            break;
        }
        h = h.min(cfg.r_max - r).min(1.0);

        // Stage evaluations.
        let mut ys: State;

        macro_rules! stage {
            ($c:expr, $($coef:expr, $k:expr),+) => {{
                ys = y;
                $(for c in 0..2 { ys[c] += h * $coef * $k[c]; })+
                rhs_at(r + $c * h, &ys)
            }};
        }

        let k2 = stage!(C[1], A21, k1);
        let k3 = stage!(C[2], A31, k1, A32, k2);
        let k4 = stage!(C[3], A41, k1, A42, k2, A43, k3);
        let k5 = stage!(C[4], A51, k1, A52, k2, A53, k3, A54, k4);
        let k6 = stage!(C[5], A61, k1, A62, k2, A63, k3, A64, k4, A65, k5);

        let ks = [k1, k2, k3, k4, k5, k6];
        let mut y1: State = y;
        for c in 0..2 {
            for (i, k) in ks.iter().enumerate() {
                y1[c] += h * B[i] * k[c];
            }
        }
        let k7 = rhs_at(r + h, &y1);

        if !(y1[0].is_finite() && y1[1].is_finite()) {
            h *= 0.5;
            continue;
        }

        // Embedded error estimate, mixed absolute/relative norm.
        let ks7 = [k1, k2, k3, k4, k5, k6, k7];
        let mut err_sq = 0.0;
        for c in 0..2 {
            let mut e = 0.0;
            for (i, k) in ks7.iter().enumerate() {
                e += (B[i] - B_HAT[i]) * k[c];
            }
            e *= h;
            let scale = cfg.abs_tol + cfg.rel_tol * y[c].abs().max(y1[c].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / 2.0).sqrt();

        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }

        // Accepted. Quartic dense weights need all seven stages.
        let mut quart: State = [0.0; 2];
        for c in 0..2 {
            for (i, k) in ks7.iter().enumerate() {
                quart[c] += D[i] * k[c];
            }
        }
        let seg = DenseSegment::new(r, h, y, y1, k1, k7, quart);

        if y1[0].abs() > OVERFLOW_GUARD || y1[1].abs() > OVERFLOW_GUARD {
            status = ProfileStatus::RangeExceeded;
            break;
        }

        // Positivity event: the value component is decreasing, so checking
        // the step endpoint suffices.
        let crossing = floor.and_then(|fl| {
            if y1[0] - fl <= 0.0 {
                let mut lo = 0.0;
                let mut hi = 1.0;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if seg.eval(r + mid * h)[0] - fl > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(r + hi * h)
            } else {
                None
            }
        });

        let r_end = crossing.unwrap_or(r + h);
        emit(&seg, r, r_end, &mut grid_r, &mut grid_v, &mut grid_d);
        if let Some(r_zero) = crossing {
            status = ProfileStatus::PositivityLost { r_zero };
            break 'outer;
        }
        // Snap the endpoint to the step solution (the emit loop lands there
        // through the interpolant otherwise).
        *grid_v.last_mut().unwrap() = y1[0];
        *grid_d.last_mut().unwrap() = y1[1];

        r += h;
        y = y1;
        k1 = k7;
        h *= (0.9 * err.max(1e-10).powf(-0.2)).min(5.0);
    }

    let mut profile = RadialProfile::new(*params, alpha, grid_r, grid_v, grid_d)?;
    if let OutputGrid::Uniform(count) = cfg.output_grid {
        profile = resample_uniform(&profile, count.max(2))?;
    }
    let monotone_nonincreasing = profile.is_nonincreasing(1e-12);
    Ok(SolvedProfile { profile, status, monotone_nonincreasing })
}

fn emit(
    seg: &DenseSegment,
    r0: f64,
    r_end: f64,
    grid_r: &mut Vec<f64>,
    grid_v: &mut Vec<f64>,
    grid_d: &mut Vec<f64>,
) {
    let cap = EMIT_CAP * r0.max(1.0);
    let span = r_end - r0;
    let pieces = (span / cap).ceil().max(1.0) as usize;
    for j in 1..=pieces {
        let rj = r0 + span * j as f64 / pieces as f64;
        let yj = seg.eval(rj);
        grid_r.push(rj);
        grid_v.push(yj[0]);
        grid_d.push(yj[1]);
    }
}

fn resample_uniform(profile: &RadialProfile, count: usize) -> Result<RadialProfile, ProfileError> {
    let r_max = profile.r_max();
    let mut r = Vec::with_capacity(count);
    let mut v = Vec::with_capacity(count);
    let mut d = Vec::with_capacity(count);
    for i in 0..count {
        let x = r_max * i as f64 / (count - 1) as f64;
        r.push(x);
        v.push(profile.eval(x)?);
        d.push(if i == 0 { 0.0 } else { profile.eval_derivative(x)? });
    }
    RadialProfile::new(profile.params, profile.alpha, r, v, d)
}

/// Maximum absolute residual of the defining equation over interior nodes,
/// with the second derivative recovered by local polynomial differentiation
/// of the stored derivative column.
pub fn residual(profile: &RadialProfile) -> Result<f64, ProfileError> {
    residual_in(profile, 0.0, f64::INFINITY)
}

/// [`residual`] restricted to nodes with `r ∈ [lo, hi]`.
pub fn residual_in(profile: &RadialProfile, lo: f64, hi: f64) -> Result<f64, ProfileError> {
    if profile.len() < 5 {
        return Err(ProfileError::TooFewPoints { needed: 5, got: profile.len() });
    }
    let n = profile.params.dimension_f();
    let mut worst: f64 = 0.0;
    for i in 0..profile.len() {
        let r = profile.r[i];
        if r <= 0.0 || r < lo || r > hi {
            continue;
        }
        let stencil = pick_stencil(&profile.r, i);
        let xs: Vec<f64> = stencil.iter().map(|&j| profile.r[j]).collect();
        let ys: Vec<f64> = stencil.iter().map(|&j| profile.derivative[j]).collect();
        let (second, _) = poly_derivatives_at(&xs, &ys, r);
        let res = second
            + ((n - 1.0) / r + r / 2.0) * profile.derivative[i]
            + profile.params.forcing(profile.value[i]);
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

/// Five node indices around `center`, spaced roughly `max(2e-3, 0.005 r)` so
/// the differentiation stays clear of round-off amplification on dense grids
/// while degrading to adjacent nodes on coarse ones.
fn pick_stencil(r: &[f64], center: usize) -> [usize; 5] {
    let rc = r[center];
    let delta = (2e-3_f64).max(5e-3 * rc);
    let nearest = |target: f64| -> usize {
        match r.binary_search_by(|v| v.partial_cmp(&target).unwrap()) {
            Ok(i) => i,
            Err(i) => {
                if i == 0 {
                    0
                } else if i >= r.len() {
                    r.len() - 1
                } else if target - r[i - 1] <= r[i] - target {
                    i - 1
                } else {
                    i
                }
            }
        }
    };
    let mut idx = [0usize; 5];
    for (k, slot) in idx.iter_mut().enumerate() {
        *slot = nearest(rc + (k as f64 - 2.0) * delta);
    }
    // Enforce strictly increasing indices within bounds.
    for k in 1..5 {
        if idx[k] <= idx[k - 1] {
            idx[k] = idx[k - 1] + 1;
        }
    }
    if idx[4] >= r.len() {
        let shift = idx[4] - (r.len() - 1);
        for slot in idx.iter_mut() {
            *slot -= shift.min(*slot);
        }
        for k in 1..5 {
            if idx[k] <= idx[k - 1] {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::gauss8_composite;
    use crate::problem::ProblemParams;

    fn exp3() -> ProblemParams {
        ProblemParams::exponential(3).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let p = exp3();
        assert!((rhs(&p, 1.0, 0.0, 0.0).unwrap() + 2.0).abs() < 1e-15);

        let pa = ProblemParams::power_approx(3, 2).unwrap();
        assert!((rhs(&pa, 1.0, 0.0, 0.0).unwrap() + 3.0).abs() < 1e-15);

        // Independent hand evaluation of the same formula.
        let p4 = ProblemParams::exponential(4).unwrap();
        let expected = (3.0 / 2.0 + 1.0) * 0.5 - std::f64::consts::E - 1.0;
        assert!((rhs(&p4, 2.0, 1.0, -0.5).unwrap() - expected).abs() < 1e-14);

        // Positivity guards.
        assert!(matches!(
            rhs(&pa, 1.0, -2.0, 0.0),
            Err(OdeError::PositivityLost { .. })
        ));
        let pw = ProblemParams::power(3, 2.5).unwrap();
        assert!(matches!(
            rhs(&pw, 1.0, -0.1, 0.0),
            Err(OdeError::PositivityLost { .. })
        ));
    }

    #[test]
    fn taylor_start_examples() {
        let p = exp3();
        let (v, d) = taylor_start(&p, 0.0, 0.0, 1e-3).unwrap();
        assert_eq!((v, d), (0.0, 0.0));

        let (v, _) = taylor_start(&p, 0.0, 1e-3, 1e-3).unwrap();
        assert!((v - (-2.0 * 1e-6 / 6.0)).abs() < 1e-18, "got {v}");

        let pa = ProblemParams::power_approx(3, 5).unwrap();
        let (v, d) = taylor_start(&pa, 1.0, 0.0, 1e-3).unwrap();
        assert_eq!((v, d), (1.0, 0.0));

        assert!(taylor_start(&p, 0.0, 2e-3, 1e-3).is_err());
    }

    /// The series start must agree with the first Picard iterate of the
    /// integral equation ψ(r) = α - ∫ ρ_N(s)^{-1} ∫ ρ_N(t) F dt ds, evaluated
    /// here by nested quadrature with the forcing frozen at α.
    #[test]
    fn taylor_start_matches_integral_equation() {
        let p = exp3();
        let alpha = 0.7;
        let f0 = p.forcing(alpha);
        let nf = p.dimension_f();
        let rho = |t: f64| t.powf(nf - 1.0) * (t * t / 4.0).exp();
        let r = 8e-4;
        let inner = |s: f64| gauss8_composite(0.0, s, 4, rho) * f0;
        let picard = alpha - gauss8_composite(0.0, r, 8, |s| inner(s) / rho(s));
        let (v, _) = taylor_start(&p, alpha, r, 1e-3).unwrap();
        assert!((v - picard).abs() < 1e-12, "taylor {v} vs picard {picard}");
    }

    #[test]
    fn exponential_profile_residual_small() {
        let cfg = IntegratorConfig::default();
        let solved = solve_profile(&exp3(), 0.0, &cfg).unwrap();
        assert!(solved.status.is_converged());
        assert!(solved.monotone_nonincreasing);
        let res = residual_in(&solved.profile, 0.01, 50.0).unwrap();
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn approx_profile_stays_above_minus_n() {
        let pa = ProblemParams::power_approx(3, 10).unwrap();
        let solved = solve_profile(&pa, 0.0, &IntegratorConfig::default()).unwrap();
        assert!(solved.status.is_converged());
        assert!(solved.profile.value.iter().all(|&v| v > -10.0));
        // ψ strictly decreasing away from the origin.
        assert!(solved.profile.derivative[1..].iter().all(|&d| d < 0.0));
    }

    #[test]
    fn uniform_bound_on_initial_window() {
        // |φ| <= |α| + (e^{|α|} + |α| + 2) r0²/2 on [0, r0].
        let r0 = 2.0;
        for &alpha in &[-1.0, 0.0, 1.5] {
            for &n in &[5u32, 50] {
                let pa = ProblemParams::power_approx(3, n).unwrap();
                let solved = solve_profile(&pa, alpha, &IntegratorConfig::default()).unwrap();
                let bound = alpha.abs()
                    + 0.5 * (alpha.abs().exp() + alpha.abs() + 2.0) * r0 * r0;
                let dbound = (alpha.abs().exp() + alpha.abs() + 2.0) * r0;
                for i in 0..solved.profile.len() {
                    if solved.profile.r[i] > r0 {
                        break;
                    }
                    assert!(solved.profile.value[i].abs() <= bound);
                    assert!(solved.profile.derivative[i].abs() <= dbound);
                }
            }
        }
    }

    #[test]
    fn positivity_lost_for_subcritical_power() {
        // p < p_F(3) = 5/3: positive decaying profiles cannot exist, the
        // trajectory must cross zero.
        let pw = ProblemParams::power(3, 1.5).unwrap();
        let solved = solve_profile(&pw, 1.0, &IntegratorConfig::default()).unwrap();
        match solved.status {
            ProfileStatus::PositivityLost { r_zero } => {
                assert!(r_zero > 0.0 && r_zero < 50.0);
                let last = *solved.profile.value.last().unwrap();
                assert!(last.abs() < 1e-9, "value at crossing {last}");
            }
            other => panic!("expected PositivityLost, got {other:?}"),
        }
    }

    #[test]
    fn refinement_invariant() {
        let cfg = IntegratorConfig::default();
        let coarse = solve_profile(&exp3(), 0.5, &cfg).unwrap();
        let fine_cfg = cfg.with_tolerances(cfg.rel_tol / 2.0, cfg.abs_tol / 2.0);
        let fine = solve_profile(&exp3(), 0.5, &fine_cfg).unwrap();
        let a = *coarse.profile.value.last().unwrap();
        let b = fine.profile.eval(coarse.profile.r_max()).unwrap();
        assert!((a - b).abs() < 5.0 * cfg.rel_tol * a.abs().max(1.0), "drift {}", (a - b).abs());
    }

    #[test]
    fn taylor_start_consistency() {
        // Integration started from taylor_radius/10 agrees with the series
        // on [taylor_radius/2, taylor_radius] within 10·rel_tol (mixed norm).
        let p = exp3();
        let cfg = IntegratorConfig {
            taylor_radius: 1e-4,
            ..IntegratorConfig::default()
        };
        let solved = solve_profile(&p, 1.0, &cfg).unwrap();
        for &frac in &[0.5, 0.75, 1.0] {
            let r = 1e-3 * frac;
            let (v_taylor, _) = taylor_start(&p, 1.0, r, 1e-3).unwrap();
            let v_int = solved.profile.eval(r).unwrap();
            let tol = 10.0 * cfg.rel_tol * (1.0 + v_taylor.abs());
            assert!((v_int - v_taylor).abs() < tol, "gap {} at r={r}", (v_int - v_taylor).abs());
        }
    }

    #[test]
    fn residual_of_synthetic_profiles() {
        let p = exp3();
        // Constant zero profile: residual = |e^0 + 1| = 2 at interior nodes.
        let r: Vec<f64> = (0..11).map(|i| 0.2 * i as f64).collect();
        let constant =
            RadialProfile::new(p, 0.0, r.clone(), vec![0.0; 11], vec![0.0; 11]).unwrap();
        let res = residual(&constant).unwrap();
        assert!((res - 2.0).abs() < 1e-12, "constant residual {res}");

        // Linear profile φ = -r: residual at r=1 is |-(2.5) + e^{-1} + 1|.
        let value: Vec<f64> = r.iter().map(|&x| -x).collect();
        let deriv = vec![-1.0; 11];
        let mut deriv0 = deriv.clone();
        deriv0[0] = 0.0; // origin slope constraint
        let linear = RadialProfile::new(p, 0.0, r.clone(), value, deriv0).unwrap();
        let n = 3.0;
        let expected = (-(((n - 1.0) / 1.0) + 0.5) + (-1.0f64).exp() + 1.0).abs();
        assert!((expected - 1.13212).abs() < 1e-4);
        // The max over the interior occurs where the drift term is largest,
        // so check the node at r = 1 directly.
        let i = r.iter().position(|&x| (x - 1.0).abs() < 1e-12).unwrap();
        let stencil_res = {
            let prof = &linear;
            let xs: Vec<f64> = (3..8).map(|j| prof.r[j]).collect();
            let ys: Vec<f64> = (3..8).map(|j| prof.derivative[j]).collect();
            let (second, _) = crate::numeric::poly_derivatives_at(&xs, &ys, prof.r[i]);
            (second + (2.0 / 1.0 + 0.5) * prof.derivative[i] + prof.params.forcing(prof.value[i]))
                .abs()
        };
        assert!((stencil_res - expected).abs() < 1e-10);

        assert!(residual(
            &RadialProfile::new(p, 0.0, vec![0.0, 1.0], vec![0.0; 2], vec![0.0; 2]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn step_budget_exhaustion_reported() {
        let cfg = IntegratorConfig { max_steps: 5, ..IntegratorConfig::default() };
        let solved = solve_profile(&exp3(), 0.0, &cfg).unwrap();
        assert_eq!(solved.status, ProfileStatus::StepFailure);
        assert!(solved.profile.r_max() < cfg.r_max);
    }

    #[test]
    fn uniform_output_grid() {
        let cfg = IntegratorConfig {
            output_grid: OutputGrid::Uniform(501),
            r_max: 10.0,
            ..IntegratorConfig::default()
        };
        let solved = solve_profile(&exp3(), 0.0, &cfg).unwrap();
        assert_eq!(solved.profile.len(), 501);
        assert!((solved.profile.r[1] - 0.02).abs() < 1e-12);
        assert!(solved.status.is_converged());
    }
}
