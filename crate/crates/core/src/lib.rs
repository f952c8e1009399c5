//! Order-2 Carleman embedding of the stochastically forced van de Vusse
//! reactor, with conditional-moment propagation, an EKF-prediction
//! baseline and a seeded Monte-Carlo oracle.
//!
//! The reactor state is `(C_A, C_B, F_r)`; the inlet flow rate `F_r` is an
//! Ornstein-Uhlenbeck process driven by a scalar Brownian motion. Embedding
//! the quadratic drift at order two gives a 9-dimensional bilinear Itô SDE
//! whose mean and covariance obey closed linear/quadratic ODEs.
//!
//! Module map:
//!
//! * [`kronecker`] – reduced (symmetric) Kronecker power index maps.
//! * [`model`] – reactor drift, diffusion, Jacobian and the built-in parameter sets.
//! * [`carleman`] – generic order-2 embedding plus the explicit reactor matrices.
//! * [`moments`] – physical and augmented moment ODEs, RK4 integration, cross-checks.
//! * [`ekf`] – continuous-time EKF prediction.
//! * [`montecarlo`] – Euler-Maruyama paths and ensemble statistics.
//! * [`experiments`] – scenarios, comparison reports, CSV and SVG output.
//! * [`validation`] – the end-to-end invariant suite behind `vdv validate`.

pub mod carleman;
pub mod ekf;
mod error;
pub mod experiments;
mod format;
pub mod kronecker;
pub mod model;
pub mod moments;
pub mod montecarlo;
pub mod validation;

pub use error::{Error, Result};
