//! Numerics for radial self-similar profiles of semilinear heat equations
//! with exponential nonlinearity, their power-type approximations, and the
//! blow-up/global-existence dichotomy driven by non-minimal profiles.
//!
//! The crate is organized along the pipeline:
//!
//! - [`problem`]: equation variants, critical exponents, singular solutions;
//! - [`ode`]: adaptive integration of the singular profile ODEs;
//! - [`asymptotics`]: tail offsets `L`, energy traces, decay certificates;
//! - [`shooting`]: branch diagrams over the initial value and roots of
//!   `L(α) = L`;
//! - [`approx`]: convergence of the power approximation to the exponential
//!   profile;
//! - [`sub_super`]: glued weak super/subsolutions and the quadrature test of
//!   the weak inequality;
//! - [`pde`]: method-of-lines simulation of the parabolic flow in physical
//!   and self-similar variables.
//!
//! All public types are plain immutable values; every solver entry point is
//! a pure function of its arguments and safe to call concurrently.

// Index loops in the stencil and band assembly code mirror the math; the
// iterator rewrites clippy suggests obscure it. Negated comparisons are
// deliberate in validation guards: `!(x > 0.0)` rejects NaN, `x <= 0.0`
// does not.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod asymptotics;
pub mod numeric;
pub mod ode;
pub mod pde;
pub mod problem;
pub mod profile;
pub mod shooting;
pub mod sub_super;

pub use ode::{solve_profile, IntegratorConfig, OutputGrid, ProfileStatus, SolvedProfile};
pub use problem::{Nonlinearity, ProblemParams};
pub use profile::RadialProfile;
