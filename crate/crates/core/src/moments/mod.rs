//! Conditional-moment propagation along two routes.
//!
//! * The **physical** route integrates the 9 ODEs for the mean of
//!   `(C_A, C_B, F_r)` and its six covariance entries. All reported
//!   variances come from this route.
//! * The **augmented** route integrates the mean and full covariance of the
//!   9-dimensional Carleman state `ξ` under the bilinear SDE. Its mean is the
//!   physical route in different coordinates, which [`crosscheck_mean_paths`]
//!   verifies.

mod augmented;
mod crosscheck;
mod integrate;
mod physical;

pub use augmented::{augmented_rhs, AugmentedMoments};
pub use crosscheck::{covariance_notion_gap, crosscheck_mean_paths, CrosscheckReport};
pub use integrate::{grid_index, grid_steps, integrate, rk4_step, OdeState, Trajectory, GRID_TOL};
pub use physical::{physical_rhs, PhysicalMoments};

use crate::carleman::BilinearSystem;
use crate::model::ReactorParams;
use crate::Result;

/// Integrates the physical moment ODEs.
pub fn integrate_physical(
    p: &ReactorParams,
    y0: PhysicalMoments,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory<PhysicalMoments>> {
    integrate(|m: &PhysicalMoments| physical_rhs(m, p), y0, dt, t_end)
}

/// Integrates the augmented mean/covariance ODEs.
pub fn integrate_augmented(
    sys: &BilinearSystem,
    y0: AugmentedMoments,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory<AugmentedMoments>> {
    integrate(|m: &AugmentedMoments| augmented_rhs(m, sys), y0, dt, t_end)
}
