//! Sampled radial functions: the common container for computed profiles.

use crate::numeric::{hermite, hermite_derivative};
use crate::problem::ProblemParams;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A radial function sampled on a strictly increasing grid starting at the
/// origin, together with its first derivative and the parameters it was
/// computed under.
///
/// For the power-approximate equation the stored `value` is the shifted
/// variable `φ = ψ - n`; use [`RadialProfile::psi`] for the positive one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
    pub params: ProblemParams,
    /// Value at the origin.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileError {
    EmptyGrid,
    LengthMismatch,
    GridNotIncreasing(usize),
    OriginMissing,
    OriginSlope(f64),
    OutOfRange { r: f64, r_max: f64 },
    TooFewPoints { needed: usize, got: usize },
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileError::EmptyGrid => write!(f, "profile grid is empty"),
            ProfileError::LengthMismatch => write!(f, "r/value/derivative lengths differ"),
            ProfileError::GridNotIncreasing(i) => {
                write!(f, "grid not strictly increasing at index {i}")
            }
            ProfileError::OriginMissing => write!(f, "grid must start at r = 0"),
            ProfileError::OriginSlope(d) => {
                write!(f, "derivative at origin must vanish, got {d}")
            }
            ProfileError::OutOfRange { r, r_max } => {
                write!(f, "r = {r} outside profile range [0, {r_max}]")
            }
            ProfileError::TooFewPoints { needed, got } => {
                write!(f, "profile needs at least {needed} points, got {got}")
            }
        }
    }
}

impl std::error::Error for ProfileError {}

impl RadialProfile {
    pub fn new(
        params: ProblemParams,
        alpha: f64,
        r: Vec<f64>,
        value: Vec<f64>,
        derivative: Vec<f64>,
    ) -> Result<Self, ProfileError> {
        if r.is_empty() {
            return Err(ProfileError::EmptyGrid);
        }
        if r.len() != value.len() || r.len() != derivative.len() {
            return Err(ProfileError::LengthMismatch);
        }
        if r[0] != 0.0 {
            return Err(ProfileError::OriginMissing);
        }
        if derivative[0] != 0.0 {
            return Err(ProfileError::OriginSlope(derivative[0]));
        }
        for i in 1..r.len() {
            if !(r[i] > r[i - 1]) {
                return Err(ProfileError::GridNotIncreasing(i));
            }
        }
        Ok(RadialProfile { r, value, derivative, params, alpha })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Shifted positive variable `ψ = φ + n` at node `i` (equals `value` for
    /// the exponential and pure power variants).
    pub fn psi(&self, i: usize) -> f64 {
        self.value[i] + self.shift()
    }

    /// Additive shift between the stored value and the positive variable.
    pub fn shift(&self) -> f64 {
        match self.params.nonlinearity() {
            crate::problem::Nonlinearity::PowerApprox { n } => f64::from(n),
            _ => 0.0,
        }
    }

    /// Index of the grid segment containing `x` (clamped to valid segments).
    fn segment(&self, x: f64) -> usize {
        match self.r.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.r.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.r.len() - 2),
        }
    }

    /// Cubic Hermite interpolation of the value at `x ∈ [0, r_max]`.
    pub fn eval(&self, x: f64) -> Result<f64, ProfileError> {
        self.check_range(x)?;
        let i = self.segment(x);
        Ok(hermite(
            self.r[i],
            self.r[i + 1],
            self.value[i],
            self.value[i + 1],
            self.derivative[i],
            self.derivative[i + 1],
            x,
        ))
    }

    /// Interpolated first derivative (derivative of the value interpolant).
    pub fn eval_derivative(&self, x: f64) -> Result<f64, ProfileError> {
        self.check_range(x)?;
        let i = self.segment(x);
        Ok(hermite_derivative(
            self.r[i],
            self.r[i + 1],
            self.value[i],
            self.value[i + 1],
            self.derivative[i],
            self.derivative[i + 1],
            x,
        ))
    }

    fn check_range(&self, x: f64) -> Result<(), ProfileError> {
        if !(x >= 0.0 && x <= self.r_max()) {
            return Err(ProfileError::OutOfRange { r: x, r_max: self.r_max() });
        }
        Ok(())
    }

    /// Whether the stored derivative is ≤ slack everywhere (the expected
    /// shape of every profile this crate computes).
    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.derivative.iter().all(|&d| d <= slack)
    }

    /// Self-consistency of the two arrays: along every segment where both
    /// endpoint derivatives are ≤ 0, the value must not increase by more
    /// than `tol`.
    pub fn arrays_consistent(&self, tol: f64) -> bool {
        self.r.windows(2).enumerate().all(|(i, _)| {
            if self.derivative[i] <= 0.0 && self.derivative[i + 1] <= 0.0 {
                self.value[i + 1] <= self.value[i] + tol
            } else {
                true
            }
        })
    }

    /// Second derivative at every node from the profile equation itself
    /// (power terms clamped at the positivity floor). Used to interpolate
    /// the derivative between nodes.
    pub fn second_derivatives(&self) -> Vec<f64> {
        let n = self.params.dimension_f();
        self.r
            .iter()
            .zip(self.value.iter().zip(self.derivative.iter()))
            .map(|(&r, (&v, &d))| {
                if r == 0.0 {
                    // φ''(0) = -F(α)/N by symmetry.
                    -self.params.forcing(v) / n
                } else {
                    -((n - 1.0) / r + r / 2.0) * d - self.params.forcing(v)
                }
            })
            .collect()
    }

    /// CSV serialization: header `r,value,derivative`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 64 + 32);
        out.push_str("r,value,derivative\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.r[i], self.value[i], self.derivative[i]
            ));
        }
        out
    }
}

/// Columns of a profile CSV: radii, values, derivatives.
pub type ProfileColumns = (Vec<f64>, Vec<f64>, Vec<f64>);

/// Parse the three-column CSV produced by [`RadialProfile::to_csv`].
pub fn parse_profile_csv(text: &str) -> Result<ProfileColumns, String> {
    let mut r = Vec::new();
    let mut value = Vec::new();
    let mut derivative = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line == "r,value,derivative" || line.starts_with('#') || line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = || -> Result<f64, String> {
            fields
                .next()
                .ok_or_else(|| format!("line {}: missing field", ln + 1))?
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("line {}: {e}", ln + 1))
        };
        r.push(next()?);
        value.push(next()?);
        derivative.push(next()?);
    }
    Ok((r, value, derivative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ProblemParams;
    use proptest::prelude::*;

    fn quadratic_profile(coef: f64, r_max: f64, n_pts: usize) -> RadialProfile {
        let params = ProblemParams::exponential(3).unwrap();
        let r: Vec<f64> = (0..n_pts).map(|i| r_max * i as f64 / (n_pts - 1) as f64).collect();
        let value: Vec<f64> = r.iter().map(|&x| coef * x * x).collect();
        let derivative: Vec<f64> = r.iter().map(|&x| 2.0 * coef * x).collect();
        RadialProfile::new(params, 0.0, r, value, derivative).unwrap()
    }

    #[test]
    fn construction_validates() {
        let params = ProblemParams::exponential(3).unwrap();
        assert!(RadialProfile::new(params, 0.0, vec![], vec![], vec![]).is_err());
        assert!(
            RadialProfile::new(params, 0.0, vec![0.1, 0.2], vec![0.0; 2], vec![0.0; 2]).is_err()
        );
        assert!(
            RadialProfile::new(params, 0.0, vec![0.0, 0.2], vec![0.0; 2], vec![0.5, 0.0]).is_err()
        );
        assert!(
            RadialProfile::new(params, 0.0, vec![0.0, 0.2, 0.2], vec![0.0; 3], vec![0.0; 3])
                .is_err()
        );
    }

    #[test]
    fn interpolation_exact_on_cubics() {
        let p = quadratic_profile(-0.5, 2.0, 9);
        for &x in &[0.05, 0.33, 1.0, 1.99] {
            assert!((p.eval(x).unwrap() + 0.5 * x * x).abs() < 1e-14);
            assert!((p.eval_derivative(x).unwrap() + x).abs() < 1e-13);
        }
        assert!(p.eval(2.5).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(coef in -2.0f64..2.0, r_max in 0.5f64..20.0) {
            let p = quadratic_profile(coef, r_max, 33);
            let (r, v, d) = parse_profile_csv(&p.to_csv()).unwrap();
            prop_assert_eq!(&r, &p.r);
            prop_assert_eq!(&v, &p.value);
            prop_assert_eq!(&d, &p.derivative);
        }
    }
}
