//! Continuous-time EKF prediction between observations.
//!
//! ```text
//! dm/dt = f(m)
//! dP/dt = F(m) P + P F(m)ᵀ + G Gᵀ,    F = ∂f/∂x
//! ```
//!
//! No measurement update is ever applied.

use nalgebra::{Matrix3, Vector3};

use crate::model::{diffusion, drift, jacobian, ReactorParams};
use crate::moments::{integrate, OdeState, Trajectory};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfState {
    pub mean: Vector3<f64>,
    pub cov: Matrix3<f64>,
}

impl OdeState for EkfState {
    fn axpy(&self, h: f64, d: &Self) -> Self {
        Self {
            mean: self.mean + d.mean * h,
            cov: self.cov + d.cov * h,
        }
    }

    fn symmetrize(&mut self) {
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
    }

    fn is_finite(&self) -> bool {
        self.mean
            .iter()
            .chain(self.cov.iter())
            .all(|x| x.is_finite())
    }
}

pub fn ekf_rhs(s: &EkfState, p: &ReactorParams) -> EkfState {
    let f = jacobian(&s.mean, p);
    let g = diffusion(p);
    let fp = f * s.cov;
    EkfState {
        mean: drift(&s.mean, p),
        cov: fp + fp.transpose() + g * g.transpose(),
    }
}

/// Propagates mean and covariance from `(x0, p0)` on the grid `0, dt, …, t_end`.
pub fn ekf_predict(
    p: &ReactorParams,
    x0: Vector3<f64>,
    p0: Matrix3<f64>,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory<EkfState>> {
    integrate(
        |s: &EkfState| ekf_rhs(s, p),
        EkfState { mean: x0, cov: p0 },
        dt,
        t_end,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SET1_P33, SET1_X0};

    fn set1_state() -> EkfState {
        EkfState {
            mean: Vector3::from(SET1_X0),
            cov: Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, SET1_P33)),
        }
    }

    #[test]
    fn initial_derivative() {
        let p = ReactorParams::SET1;
        let d = ekf_rhs(&set1_state(), &p);
        assert!(
            (d.cov[(0, 0)] - (-0.0630016)).abs() < 1e-12,
            "{}",
            d.cov[(0, 0)]
        );
        let want33 = -2.0 * p.alpha * SET1_P33 + p.beta * p.beta;
        assert!((d.cov[(2, 2)] - want33).abs() < 1e-17);
    }

    #[test]
    fn flow_rate_coordinate_is_exact() {
        let p = ReactorParams::SET1;
        let traj = ekf_predict(&p, Vector3::from(SET1_X0), set1_state().cov, 0.01, 200.0).unwrap();
        let x3 = traj.at(10.0).unwrap().mean[2];
        assert!((x3 - 0.009528 * (-1.0f64).exp()).abs() < 1e-12);
        // Riccati fixed point β²/(2α) of the decoupled coordinate.
        assert!((traj.last().cov[(2, 2)] - 0.00968).abs() < 1e-10);
    }

    #[test]
    fn noiseless_zero_covariance_stays_zero() {
        let p = ReactorParams::SET1.with_beta(0.0);
        let traj = ekf_predict(&p, Vector3::from(SET1_X0), Matrix3::zeros(), 0.01, 50.0).unwrap();
        assert!(traj.states.iter().all(|s| s.cov == Matrix3::zeros()));
    }

    #[test]
    fn zero_horizon() {
        let traj = ekf_predict(
            &ReactorParams::SET2,
            Vector3::from(SET1_X0),
            Matrix3::identity(),
            0.01,
            0.0,
        )
        .unwrap();
        assert_eq!(traj.len(), 1);
    }

    #[test]
    fn covariance_stays_symmetric() {
        let traj = ekf_predict(
            &ReactorParams::SET1,
            Vector3::from(SET1_X0),
            Matrix3::new(1.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.01),
            0.01,
            20.0,
        )
        .unwrap();
        assert!(traj.states.iter().all(|s| s.cov == s.cov.transpose()));
    }
}
