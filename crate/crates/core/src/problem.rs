//! Problem setup: equation variants, dimension-dependent critical exponents,
//! and the closed-form singular stationary solutions.
//!
//! The library works with three radial profile equations on `r > 0`:
//!
//! ```text
//! exponential:  φ'' + ((N-1)/r + r/2) φ' + e^φ + 1                          = 0
//! power approx: φ'' + ((N-1)/r + r/2) φ' + (φ+n)/(n-1) + (1 + φ/n)^n        = 0
//! power:        φ'' + ((N-1)/r + r/2) φ' + φ/(p-1) + φ^p                    = 0
//! ```
//!
//! all with `φ'(0) = 0`. The power-approximate variant converges to the
//! exponential one as `n → ∞`; its shifted unknown `ψ = φ + n` stays positive
//! on the branches of interest.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Nonlinearity selector for the radial profile equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Nonlinearity {
    /// `e^φ + 1`.
    Exponential,
    /// `(φ+n)/(n-1) + (1 + φ/n)^n`, the power approximation of the
    /// exponential term; requires `n ≥ 2`.
    PowerApprox { n: u32 },
    /// `φ/(p-1) + φ^p` with real `p > 1`; only meaningful while `φ > 0`.
    Power { p: f64 },
}

/// Dimension plus nonlinearity variant. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    dimension: u32,
    nonlinearity: Nonlinearity,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamError {
    /// Dimension must satisfy `N ≥ 1`.
    InvalidDimension(u32),
    /// Power approximation needs `n ≥ 2` so the `1/(n-1)` coefficient is finite.
    InvalidApproxOrder(u32),
    /// Power nonlinearity needs `p > 1`.
    InvalidPowerExponent(f64),
    /// Singular solutions and branch enumeration need `N ≥ 3`.
    DimensionTooSmall { needed: u32, got: u32 },
    /// `p ≤ N/(N-2)`: the expression under the `1/(p-1)` power is nonpositive.
    PowerBelowSingularRange { p: f64, n: u32 },
    /// Radius must be strictly positive.
    NonPositiveRadius(f64),
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::InvalidDimension(n) => write!(f, "dimension N={n} must be >= 1"),
            ParamError::InvalidApproxOrder(n) => {
                write!(f, "power approximation order n={n} must be >= 2")
            }
            ParamError::InvalidPowerExponent(p) => write!(f, "power exponent p={p} must be > 1"),
            ParamError::DimensionTooSmall { needed, got } => {
                write!(f, "dimension N={got} too small, need N >= {needed}")
            }
            ParamError::PowerBelowSingularRange { p, n } => {
                write!(f, "p={p} must exceed N/(N-2) = {} for N={n}", *n as f64 / (*n as f64 - 2.0))
            }
            ParamError::NonPositiveRadius(r) => write!(f, "radius r={r} must be > 0"),
        }
    }
}

impl std::error::Error for ParamError {}

impl ProblemParams {
    pub fn new(dimension: u32, nonlinearity: Nonlinearity) -> Result<Self, ParamError> {
        if dimension < 1 {
            return Err(ParamError::InvalidDimension(dimension));
        }
        match nonlinearity {
            Nonlinearity::PowerApprox { n } if n < 2 => {
                return Err(ParamError::InvalidApproxOrder(n));
            }
            Nonlinearity::Power { p } if !(p > 1.0) => {
                return Err(ParamError::InvalidPowerExponent(p));
            }
            _ => {}
        }
        Ok(ProblemParams { dimension, nonlinearity })
    }

    pub fn exponential(dimension: u32) -> Result<Self, ParamError> {
        Self::new(dimension, Nonlinearity::Exponential)
    }

    pub fn power_approx(dimension: u32, n: u32) -> Result<Self, ParamError> {
        Self::new(dimension, Nonlinearity::PowerApprox { n })
    }

    pub fn power(dimension: u32, p: f64) -> Result<Self, ParamError> {
        Self::new(dimension, Nonlinearity::Power { p })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn dimension_f(&self) -> f64 {
        f64::from(self.dimension)
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    /// Branch enumeration and the singular solution need `N ≥ 3`.
    pub fn require_branch_dimension(&self) -> Result<(), ParamError> {
        if self.dimension < 3 {
            return Err(ParamError::DimensionTooSmall { needed: 3, got: self.dimension });
        }
        Ok(())
    }

    /// The non-derivative part of the profile equation,
    /// `F(v)` with `φ'' + ((N-1)/r + r/2) φ' + F(φ) = 0`.
    ///
    /// Callers must keep `v` above [`Self::positivity_floor`]; outside that
    /// range the power terms are clamped to zero (their continuous extension),
    /// which keeps trial evaluations of adaptive steps harmless.
    pub fn forcing(&self, v: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Exponential => v.exp() + 1.0,
            Nonlinearity::PowerApprox { n } => {
                let nf = f64::from(n);
                (v + nf) / (nf - 1.0) + pow_one_plus(v, n)
            }
            Nonlinearity::Power { p } => {
                let pw = if v > 0.0 { v.powf(p) } else { 0.0 };
                v / (p - 1.0) + pw
            }
        }
    }

    /// Derivative `F'(v)` of [`Self::forcing`]; used for the quartic term of
    /// the series start at the origin.
    pub fn forcing_derivative(&self, v: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Exponential => v.exp(),
            Nonlinearity::PowerApprox { n } => {
                let nf = f64::from(n);
                1.0 / (nf - 1.0) + pow_one_plus_order(v, n, n - 1)
            }
            Nonlinearity::Power { p } => {
                let pw = if v > 0.0 { p * v.powf(p - 1.0) } else { 0.0 };
                1.0 / (p - 1.0) + pw
            }
        }
    }

    /// Value below which the equation loses meaning: `φ = -n` for the power
    /// approximation (`ψ = φ + n` hits zero) and `φ = 0` for the pure power.
    pub fn positivity_floor(&self) -> Option<f64> {
        match self.nonlinearity {
            Nonlinearity::Exponential => None,
            Nonlinearity::PowerApprox { n } => Some(-f64::from(n)),
            Nonlinearity::Power { .. } => Some(0.0),
        }
    }

    /// Decay exponent `m` of the profile tail: `ψ ~ const · r^{-m}` for the
    /// power variants, `m = 0` marking the logarithmic decay of the
    /// exponential variant.
    pub fn tail_exponent(&self) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Exponential => 0.0,
            Nonlinearity::PowerApprox { n } => 2.0 / (f64::from(n) - 1.0),
            Nonlinearity::Power { p } => 2.0 / (p - 1.0),
        }
    }
}

/// `(1 + v/n)^n`, computed as `exp(n·log1p(v/n))` for large `n` where direct
/// powering loses precision. Requires `1 + v/n > 0`; returns 0 at or below
/// that floor (continuous extension).
pub fn pow_one_plus(v: f64, n: u32) -> f64 {
    pow_one_plus_order(v, n, n)
}

/// `(1 + v/n)^k` with the same guards as [`pow_one_plus`].
fn pow_one_plus_order(v: f64, n: u32, k: u32) -> f64 {
    let nf = f64::from(n);
    let base = 1.0 + v / nf;
    if base <= 0.0 {
        return 0.0;
    }
    if n > 100 {
        (f64::from(k) * (v / nf).ln_1p()).exp()
    } else {
        base.powi(k as i32)
    }
}

/// Fujita exponent `p_F = (N+2)/N`.
pub fn fujita_exponent(dimension: u32) -> Result<f64, ParamError> {
    if dimension < 1 {
        return Err(ParamError::InvalidDimension(dimension));
    }
    let n = f64::from(dimension);
    Ok((n + 2.0) / n)
}

/// Joseph–Lundgren exponent, infinite for `3 ≤ N ≤ 10`.
///
/// A tagged value rather than a float sentinel so that downstream
/// comparisons `p < p_JL` stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JosephLundgren {
    Infinite,
    Finite(f64),
}

impl JosephLundgren {
    /// Whether a given exponent lies strictly below the threshold.
    pub fn exceeds(&self, p: f64) -> bool {
        match self {
            JosephLundgren::Infinite => true,
            JosephLundgren::Finite(v) => p < *v,
        }
    }
}

/// `p_JL = ∞` for `3 ≤ N ≤ 10` and `1 + 4/(N - 4 - 2√(N-1))` for `N ≥ 11`.
pub fn joseph_lundgren_exponent(dimension: u32) -> Result<JosephLundgren, ParamError> {
    if dimension < 3 {
        return Err(ParamError::DimensionTooSmall { needed: 3, got: dimension });
    }
    if dimension <= 10 {
        return Ok(JosephLundgren::Infinite);
    }
    let n = f64::from(dimension);
    Ok(JosephLundgren::Finite(1.0 + 4.0 / (n - 4.0 - 2.0 * (n - 1.0).sqrt())))
}

/// Singular stationary solution of `-Δu = e^u` for `N ≥ 3`:
/// `u*(r) = -2 log r + log(2N - 4)`.
pub fn singular_stationary_value(dimension: u32, r: f64) -> Result<f64, ParamError> {
    if dimension < 3 {
        return Err(ParamError::DimensionTooSmall { needed: 3, got: dimension });
    }
    if !(r > 0.0) {
        return Err(ParamError::NonPositiveRadius(r));
    }
    Ok(-2.0 * r.ln() + (2.0 * f64::from(dimension) - 4.0).ln())
}

/// Coefficient `l*` of the singular stationary solution `l* r^{-2/(p-1)}` of
/// `Δu + u^p = 0`, defined for `N ≥ 3` and `p > N/(N-2)`.
pub fn power_singular_constant(dimension: u32, p: f64) -> Result<f64, ParamError> {
    if dimension < 3 {
        return Err(ParamError::DimensionTooSmall { needed: 3, got: dimension });
    }
    let n = f64::from(dimension);
    if !(p > n / (n - 2.0)) {
        return Err(ParamError::PowerBelowSingularRange { p, n: dimension });
    }
    let m = 2.0 / (p - 1.0);
    Ok((m * (n - 2.0 - m)).powf(1.0 / (p - 1.0)))
}
