//! Asymptotic constants of computed profiles and certified decay bounds.
//!
//! Every converged profile decays like `-2 log r + L` (exponential variant)
//! or `Λ r^{-m}` (power variants, `m` the tail exponent, `Λ = L + n` for the
//! approximation). The offset `L` is extracted two independent ways:
//!
//! 1. a least-squares fit of the tail window against `L + c·r^{-2}`, the
//!    leading correction forced by the equation itself;
//! 2. the integral identity obtained by integrating
//!    `d/dr [r^m φ + 2 r^{m-1} φ']` from 1 to ∞, with the truncated tails
//!    beyond `r_max` restored from the same asymptotic expansion.
//!
//! Their agreement is the working accuracy certificate for `L`.

use crate::numeric::{gauss4, hermite};
use crate::ode::{ProfileStatus, SolvedProfile};
use crate::problem::{pow_one_plus, Nonlinearity};
use crate::profile::RadialProfile;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum AsymptoticsError {
    NonConvergedProfile(ProfileStatus),
    /// Tail fit residual above the `1e-4` threshold: the trajectory is not
    /// settling onto any admissible tail.
    FitDiverged { fit_error: f64 },
    /// Profile does not cover the quadrature interval `[1, r_max]`.
    CoverageTooShort { r_max: f64 },
    /// The boundary term dropped in the limit identity does not match its
    /// asymptotic model; `r_max` is too small for this profile.
    AsymptoteInconsistent { deviation: f64 },
    WrongVariant(&'static str),
    /// ψ must stay positive for energy and decay certificates.
    PositivityViolated { r: f64 },
}

impl fmt::Display for AsymptoticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsymptoticsError::NonConvergedProfile(s) => {
                write!(f, "profile status {} is not Converged", s.label())
            }
            AsymptoticsError::FitDiverged { fit_error } => {
                write!(f, "tail fit diverged, residual {fit_error}")
            }
            AsymptoticsError::CoverageTooShort { r_max } => {
                write!(f, "profile range [0, {r_max}] too short for the integral identity")
            }
            AsymptoticsError::AsymptoteInconsistent { deviation } => {
                write!(f, "dropped boundary term off its asymptotic model by {deviation}")
            }
            AsymptoticsError::WrongVariant(what) => write!(f, "requires a {what} profile"),
            AsymptoticsError::PositivityViolated { r } => {
                write!(f, "shifted value not positive at r = {r}")
            }
        }
    }
}

impl std::error::Error for AsymptoticsError {}

/// Result of the tail-window fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub l: f64,
    /// Root-mean-square residual of the fit over the window.
    pub fit_error: f64,
}

/// Threshold above which a tail fit is reported as diverged.
pub const FIT_DIVERGED_THRESHOLD: f64 = 1e-4;

/// Fit the tail window `[0.6 r_max, r_max]` against `A + B r^{-2} + C r^{-4}`
/// (the first terms of the expansion the equation forces) and read off the
/// offset `L` (the additive constant for the exponential variant, `A - n`
/// for the power approximation, the coefficient `l` for pure power).
pub fn estimate_l_tail(solved: &SolvedProfile) -> Result<TailFit, AsymptoticsError> {
    require_converged(solved)?;
    let profile = &solved.profile;
    let r_max = profile.r_max();
    let lo = 0.6 * r_max;
    let m = profile.params.tail_exponent();
    let shift = profile.shift();

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..profile.len() {
        let r = profile.r[i];
        if r < lo {
            continue;
        }
        let g = match profile.params.nonlinearity() {
            Nonlinearity::Exponential => 2.0 * r.ln() + profile.value[i],
            _ => r.powf(m) * (profile.value[i] + shift),
        };
        xs.push(r);
        ys.push(g);
    }
    if xs.len() < 8 {
        return Err(AsymptoticsError::CoverageTooShort { r_max });
    }

    let (a, fit_error) = fit_offset_inverse_square(&xs, &ys);
    let fit = TailFit { l: a - shift, fit_error };
    if !fit_error.is_finite() || fit_error > FIT_DIVERGED_THRESHOLD {
        return Err(AsymptoticsError::FitDiverged { fit_error });
    }
    Ok(fit)
}

/// Least squares of `y ≈ A + B x^{-2} + C x^{-4}`; returns `(A, rms residual)`.
/// The quadratic in `u = x^{-2}` is solved on a rescaled variable to keep
/// the normal equations well conditioned on narrow windows.
fn fit_offset_inverse_square(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let u_max = 1.0 / (xs[0] * xs[0]);
    let basis = |x: f64| {
        let t = 1.0 / (x * x) / u_max;
        [1.0, t, t * t]
    };
    // Normal equations for the 3-parameter model.
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let b = basis(x);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += b[i] * b[j];
            }
            rhs[i] += b[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting on the 3x3 system.
    let mut aug = [[0.0f64; 4]; 3];
    for i in 0..3 {
        aug[i][..3].copy_from_slice(&m[i]);
        aug[i][3] = rhs[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs())).unwrap();
        aug.swap(col, piv);
        for row in col + 1..3 {
            let f = aug[row][col] / aug[col][col];
            for k in col..4 {
                aug[row][k] -= f * aug[col][k];
            }
        }
    }
    let mut coef = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut v = aug[i][3];
        for k in i + 1..3 {
            v -= aug[i][k] * coef[k];
        }
        coef[i] = v / aug[i][i];
    }
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let b = basis(x);
        let res = y - (coef[0] * b[0] + coef[1] * b[1] + coef[2] * b[2]);
        ss += res * res;
    }
    (coef[0], (ss / xs.len() as f64).sqrt())
}

/// Offset `L` from the integral identity, independent of the tail fit.
pub fn estimate_l_integral(solved: &SolvedProfile) -> Result<f64, AsymptoticsError> {
    require_converged(solved)?;
    let profile = &solved.profile;
    let r_big = profile.r_max();
    if r_big < 2.0 {
        return Err(AsymptoticsError::CoverageTooShort { r_max: r_big });
    }
    let params = &profile.params;
    let nf = params.dimension_f();
    let m = params.tail_exponent();
    let shift = profile.shift();
    let interp = GridInterp::new(profile);

    let phi1 = interp.value(1.0);
    let dphi1 = interp.derivative(1.0);
    let base = phi1 + 2.0 * dphi1;

    // J1 = ∫ t^{m-2} ψ'(t) dt, J2 = ∫ t^{m-1} W(ψ) dt over [1, r_max], with
    // W the nonlinear term; ψ' = φ'.
    let j1 = interp.integrate(1.0, r_big, |t, _v, d| t.powf(m - 2.0) * d);
    let j2 = interp.integrate(1.0, r_big, |t, v, _d| {
        t.powf(m - 1.0) * nonlinear_term(params, v)
    });

    // Tail remainders from the asymptotic expansion, self-consistently in Λ.
    let mut lam = base + 2.0 * (m - nf) * j1 - 2.0 * j2 + shift;
    for _ in 0..4 {
        let (dj1, dj2) = tail_remainders(params, lam, r_big);
        lam = base + 2.0 * (m - nf) * (j1 + dj1) - 2.0 * (j2 + dj2) + shift;
    }

    // The boundary term 2 r^{m-1} ψ'(r_max) dropped in the limit must sit on
    // its asymptotic model, otherwise r_max is too small to resolve L.
    let measured = 2.0 * r_big.powf(m - 1.0) * interp.derivative(r_big);
    let model = match params.nonlinearity() {
        Nonlinearity::Exponential => -4.0 / (r_big * r_big),
        _ => -2.0 * m * lam / (r_big * r_big),
    };
    let deviation = (measured - model).abs();
    if deviation > 1e-5 * lam.abs().max(1.0) {
        return Err(AsymptoticsError::AsymptoteInconsistent { deviation });
    }

    Ok(lam - shift)
}

/// Nonlinear term of the profile equation (without the linear part):
/// `e^φ`, `(1+φ/n)^n`, or `φ^p`. The `+1` of the exponential variant belongs
/// to the linear part of the identity and cancels against `(2 log r)'`.
fn nonlinear_term(params: &crate::problem::ProblemParams, v: f64) -> f64 {
    match params.nonlinearity() {
        Nonlinearity::Exponential => v.exp(),
        Nonlinearity::PowerApprox { n } => pow_one_plus(v, n),
        Nonlinearity::Power { p } => {
            if v > 0.0 {
                v.powf(p)
            } else {
                0.0
            }
        }
    }
}

/// Remainders of J1 and J2 over `(r_max, ∞)` from `ψ ≈ Λ r^{-m}(1 + c̃ r^{-2})`
/// (for the exponential variant `φ ≈ -2 log t + L + c t^{-2}`, `c = e^L+4-2N`).
fn tail_remainders(params: &crate::problem::ProblemParams, lam: f64, r_big: f64) -> (f64, f64) {
    let nf = params.dimension_f();
    let m = params.tail_exponent();
    let r2 = r_big * r_big;
    let r4 = r2 * r2;
    match params.nonlinearity() {
        Nonlinearity::Exponential => {
            let el = lam.exp();
            let c = el + 4.0 - 2.0 * nf;
            let dj1 = -1.0 / r2 - c / (2.0 * r4);
            let dj2 = el * (0.5 / r2 + c / (4.0 * r4));
            (dj1, dj2)
        }
        Nonlinearity::PowerApprox { n } => {
            let w = pow_one_plus(lam - f64::from(n), n);
            let ct = -m * (nf - 2.0 - m) + w / lam;
            let dj1 = -lam * m / (2.0 * r2) - lam * ct * (m + 2.0) / (4.0 * r4);
            let dj2 = w * (0.5 / r2 + f64::from(n) * ct / (4.0 * r4));
            (dj1, dj2)
        }
        Nonlinearity::Power { p } => {
            let w = if lam > 0.0 { lam.powf(p) } else { 0.0 };
            let ct = -m * (nf - 2.0 - m) + if lam != 0.0 { w / lam } else { 0.0 };
            let dj1 = -lam * m / (2.0 * r2) - lam * ct * (m + 2.0) / (4.0 * r4);
            let dj2 = w * (0.5 / r2 + p * ct / (4.0 * r4));
            (dj1, dj2)
        }
    }
}

fn require_converged(solved: &SolvedProfile) -> Result<(), AsymptoticsError> {
    if !solved.status.is_converged() {
        return Err(AsymptoticsError::NonConvergedProfile(solved.status));
    }
    Ok(())
}

/// Interpolation of a profile with the second derivative reconstructed from
/// the equation, so both value and slope are smooth between nodes.
pub(crate) struct GridInterp<'a> {
    profile: &'a RadialProfile,
    second: Vec<f64>,
}

impl<'a> GridInterp<'a> {
    pub(crate) fn new(profile: &'a RadialProfile) -> Self {
        GridInterp { profile, second: profile.second_derivatives() }
    }

    fn segment(&self, x: f64) -> usize {
        let r = &self.profile.r;
        match r.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(r.len() - 2),
            Err(i) => i.saturating_sub(1).min(r.len() - 2),
        }
    }

    /// Quintic two-point interpolation matching value, slope, and the
    /// equation-informed second derivative at both segment ends. The extra
    /// orders matter where the weak-form quadrature multiplies by `r^{N-1}`.
    pub(crate) fn value(&self, x: f64) -> f64 {
        let p = self.profile;
        let i = self.segment(x);
        let h = p.r[i + 1] - p.r[i];
        let t = (x - p.r[i]) / h;
        let (v0, d0, s0) = (p.value[i], p.derivative[i], self.second[i]);
        let (v1, d1, s1) = (p.value[i + 1], p.derivative[i + 1], self.second[i + 1]);
        let big_a = v1 - v0 - d0 * h - 0.5 * s0 * h * h;
        let big_b = (d1 - d0) * h - s0 * h * h;
        let big_c = (s1 - s0) * h * h;
        let c = 6.0 * big_a - 3.0 * big_b + 0.5 * big_c;
        let b = big_b - 3.0 * big_a - 2.0 * c;
        let a = big_a - b - c;
        v0 + d0 * h * t
            + 0.5 * s0 * h * h * t * t
            + t * t * t * (a + t * (b + t * c))
    }

    pub(crate) fn derivative(&self, x: f64) -> f64 {
        let p = self.profile;
        let i = self.segment(x);
        hermite(
            p.r[i],
            p.r[i + 1],
            p.derivative[i],
            p.derivative[i + 1],
            self.second[i],
            self.second[i + 1],
            x,
        )
    }

    /// Composite Gauss quadrature of `f(t, φ(t), φ'(t))` over `[lo, hi]`,
    /// one panel per grid interval.
    pub(crate) fn integrate<F: Fn(f64, f64, f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let r = &self.profile.r;
        let mut acc = 0.0;
        for i in 0..r.len() - 1 {
            let a = r[i].max(lo);
            let b = r[i + 1].min(hi);
            if a >= b {
                continue;
            }
            acc += gauss4(a, b, |t| f(t, self.value(t), self.derivative(t)));
        }
        acc
    }
}

/// Energy along the radial variable for power-approximate profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub r: Vec<f64>,
    pub e: Vec<f64>,
    /// Largest increase between consecutive nodes, clamped at 0.
    pub max_increase: f64,
}

/// `E(r) = ψ'²/2 + ψ²/(2(n-1)) + ψ^{n+1}/(nⁿ(n+1))`, nonincreasing along
/// the profile because of the `((N-1)/r + r/2) ψ'²` dissipation.
pub fn energy_trace(profile: &RadialProfile) -> Result<EnergyTrace, AsymptoticsError> {
    let n = match profile.params.nonlinearity() {
        Nonlinearity::PowerApprox { n } => n,
        _ => return Err(AsymptoticsError::WrongVariant("power-approximate")),
    };
    let nf = f64::from(n);
    let mut e = Vec::with_capacity(profile.len());
    for i in 0..profile.len() {
        let psi = profile.psi(i);
        if psi <= 0.0 {
            return Err(AsymptoticsError::PositivityViolated { r: profile.r[i] });
        }
        let d = profile.derivative[i];
        // ψ^{n+1}/nⁿ = n (ψ/n)^{n+1}, safe against overflow for large n.
        let tail = nf / (nf + 1.0) * ((nf + 1.0) * (psi / nf).ln()).exp();
        e.push(0.5 * d * d + psi * psi / (2.0 * (nf - 1.0)) + tail);
    }
    let mut max_increase: f64 = 0.0;
    for w in e.windows(2) {
        max_increase = max_increase.max(w[1] - w[0]);
    }
    Ok(EnergyTrace { r: profile.r.clone(), e, max_increase: max_increase.max(0.0) })
}

/// Energy at the origin in closed form: ψ(0) = α + n, ψ'(0) = 0.
pub fn energy_at_origin(alpha: f64, n: u32) -> f64 {
    let nf = f64::from(n);
    let psi0 = alpha + nf;
    psi0 * psi0 / (2.0 * (nf - 1.0)) + nf / (nf + 1.0) * ((nf + 1.0) * (psi0 / nf).ln()).exp()
}

/// One certified decay bound: `|quantity| ≤ C (1+r)^{exponent}` pointwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub c_alpha: f64,
    pub exponent_value: f64,
    pub exponent_derivative: f64,
    /// Worst ratio over the grid minus one, clamped at zero; zero exactly
    /// when the claimed bound holds at every node.
    pub max_violation: f64,
}

/// Decay certificates for a profile; which bounds apply depends on variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DecayReport {
    Exponential {
        /// `|φ'| ≤ C (1+r)^{-1}` with the smallest C that works.
        derivative_bound: DecayCertificate,
    },
    PowerApprox {
        /// `|ψ| ≤ C(α,n)(1+r)^{-2/(n-1)}`, `|ψ'| ≤ C(α,n)(1+r)^{-2/(n-1)-1}`
        /// with `C(α,n) = sqrt(2(n-1)E(0))`.
        energy_bound: DecayCertificate,
        /// `(|ψ|/n)^n ≤ C(α)(1+r)^{-2n/(n-1)}` with `C(α) = e^{|α|+e^{|α|}}`,
        /// independent of n. Value bound only; `exponent_derivative` unused.
        n_free: DecayCertificate,
    },
}

impl DecayReport {
    /// Worst violation across all certified bounds in the report.
    pub fn worst_violation(&self) -> f64 {
        match self {
            DecayReport::Exponential { derivative_bound } => derivative_bound.max_violation,
            DecayReport::PowerApprox { energy_bound, n_free } => {
                energy_bound.max_violation.max(n_free.max_violation)
            }
        }
    }
}

/// Check the decay estimates against the profile and report the worst
/// violations; violations are data, not errors.
pub fn certify_decay(solved: &SolvedProfile) -> Result<DecayReport, AsymptoticsError> {
    require_converged(solved)?;
    let profile = &solved.profile;
    match profile.params.nonlinearity() {
        Nonlinearity::Exponential => {
            let mut c: f64 = 0.0;
            for i in 0..profile.len() {
                c = c.max(profile.derivative[i].abs() * (1.0 + profile.r[i]));
            }
            Ok(DecayReport::Exponential {
                derivative_bound: DecayCertificate {
                    c_alpha: c,
                    exponent_value: 0.0,
                    exponent_derivative: -1.0,
                    max_violation: 0.0,
                },
            })
        }
        Nonlinearity::PowerApprox { n } => {
            let nf = f64::from(n);
            let m = profile.params.tail_exponent();
            let c_energy = (2.0 * (nf - 1.0) * energy_at_origin(profile.alpha, n)).sqrt();
            let c_free = (profile.alpha.abs() + profile.alpha.abs().exp()).exp();
            let mut viol_energy: f64 = 0.0;
            let mut viol_free: f64 = 0.0;
            for i in 0..profile.len() {
                let r = profile.r[i];
                let psi = profile.psi(i);
                if psi <= 0.0 {
                    return Err(AsymptoticsError::PositivityViolated { r });
                }
                let decay = (1.0 + r).powf(-m);
                viol_energy = viol_energy
                    .max(psi.abs() / (c_energy * decay) - 1.0)
                    .max(profile.derivative[i].abs() / (c_energy * decay / (1.0 + r)) - 1.0);
                let lhs = pow_one_plus(profile.value[i], n);
                let rhs = c_free * (1.0 + r).powf(-2.0 * nf / (nf - 1.0));
                viol_free = viol_free.max(lhs / rhs - 1.0);
            }
            Ok(DecayReport::PowerApprox {
                energy_bound: DecayCertificate {
                    c_alpha: c_energy,
                    exponent_value: -m,
                    exponent_derivative: -m - 1.0,
                    max_violation: viol_energy.max(0.0),
                },
                n_free: DecayCertificate {
                    c_alpha: c_free,
                    exponent_value: -2.0 * nf / (nf - 1.0),
                    exponent_derivative: 0.0,
                    max_violation: viol_free.max(0.0),
                },
            })
        }
        Nonlinearity::Power { .. } => {
            Err(AsymptoticsError::WrongVariant("exponential or power-approximate"))
        }
    }
}
