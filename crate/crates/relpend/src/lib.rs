//! Numerical laboratory for the periodically forced relativistic pendulum
//!
//! ```text
//! (d/dt) ( x' / sqrt(1 - x'^2) ) - g(x) = f(t)
//! ```
//!
//! with an S-periodic potential term g and a T-periodic forcing f, studied
//! through its Hamiltonian flow on the cylinder. The crate provides:
//!
//! * [`model`] — trigonometric model data (g, f, closed-form primitives G, F),
//!   the Hamiltonian, the Legendre velocity/momentum transform, and the
//!   coordinate charts between the phase-space descriptions.
//! * [`flow`] — adaptive Dormand–Prince 5(4) integration of the three systems
//!   (full, scaled, forcing-shifted) with dense output and first variational
//!   equations, plus the small-parameter expansion of the scaled flow.
//! * [`poincare`] — the period map, its small-time twist factors, and the
//!   map-level diagnostics: lift equivariance, area preservation, exactness
//!   loop integrals, twist derivatives, and small-twist hypothesis reporting.
//! * [`genfun`] — generating functions of the twist factors realized by
//!   boundary-value shooting and action integrals.
//! * [`mather`] — discrete minimal-orbit machinery over the factor
//!   decomposition: periodic action minimization, rotation numbers, and hull
//!   functions.
//! * [`experiments`] — end-to-end demonstrations: bounded-momentum sweeps,
//!   escape under nonzero-mean forcing, subharmonic and quasi-periodic
//!   solution certificates.
//!
//! All types are immutable after construction and all operations are pure
//! functions of their arguments, so everything can be evaluated concurrently.

// Negated float comparisons are NaN-rejecting guards: `!(x > 0.0)` must fail
// on NaN where `x <= 0.0` would pass it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod flow;
pub mod genfun;
pub mod mather;
pub mod model;
pub mod poincare;

mod error;

pub use error::{Error, Result};
