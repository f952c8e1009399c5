//! The isothermal van de Vusse reactor with an Ornstein-Uhlenbeck inlet flow.
//!
//! State `x = (C_A, C_B, F_r)`:
//!
//! ```text
//! dC_A = (-k1 C_A - k3 C_A² + (F_r / V)(C_Af - C_A)) dt
//! dC_B = ( k1 C_A - k2 C_B  - (F_r / V) C_B) dt
//! dF_r = -α F_r dt + β dB
//! ```
//!
//! Concentrations are not clamped; the SDE itself does not keep them positive.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `(C_A, C_B, F_r)` in mol/l, mol/l, l/s.
pub type PhysicalState = Vector3<f64>;

/// Coefficients of the reactor SDE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactorParams {
    /// A → B rate constant (1/s).
    pub k1: f64,
    /// B → C rate constant (1/s).
    pub k2: f64,
    /// 2A → D rate constant (l/(mol·s)).
    pub k3: f64,
    /// Feed concentration of A (mol/l).
    pub caf: f64,
    /// Reactor volume (l).
    pub v: f64,
    /// OU damping of the flow rate (1/s).
    pub alpha: f64,
    /// OU noise coefficient.
    pub beta: f64,
}

impl ReactorParams {
    /// Parameters of the first operating point (α = 0.1).
    pub const SET1: ReactorParams = ReactorParams {
        k1: 0.01388,
        k2: 0.02778,
        k3: 0.002778,
        caf: 0.0027,
        v: 10.0,
        alpha: 0.1,
        beta: 0.044,
    };

    /// Parameters of the second operating point (α = 0.01).
    pub const SET2: ReactorParams = ReactorParams {
        k1: 0.0141,
        k2: 0.0141,
        k3: 0.00187,
        caf: 0.00141,
        v: 10.0,
        alpha: 0.01,
        beta: 0.044,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.k1, self.k2, self.k3, self.caf, self.v, self.alpha, self.beta,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "reactor parameters must be finite".into(),
            ));
        }
        if self.k1 <= 0.0 || self.k2 <= 0.0 || self.k3 <= 0.0 || self.v <= 0.0 {
            return Err(Error::InvalidArgument(
                "k1, k2, k3 and v must be strictly positive".into(),
            ));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidArgument(
                "alpha must be strictly positive".into(),
            ));
        }
        if self.beta < 0.0 {
            return Err(Error::InvalidArgument("beta must be non-negative".into()));
        }
        Ok(())
    }

    /// Stationary variance β²/(2α) of the flow-rate process.
    pub fn ou_stationary_variance(&self) -> f64 {
        self.beta * self.beta / (2.0 * self.alpha)
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }
}

/// Initial state of the first operating point.
pub const SET1_X0: [f64; 3] = [3.0, 1.12, 0.009528];
/// Initial flow-rate variance of the first operating point.
pub const SET1_P33: f64 = 0.01;
/// Initial state of the second operating point.
pub const SET2_X0: [f64; 3] = [1.235, 1.0, 0.0152];
/// Initial flow-rate variance of the second operating point.
pub const SET2_P33: f64 = 0.09;

/// Drift `f(x)` of the reactor SDE.
pub fn drift(x: &PhysicalState, p: &ReactorParams) -> Vector3<f64> {
    let dilution = x[2] / p.v;
    Vector3::new(
        -p.k1 * x[0] - p.k3 * x[0] * x[0] + dilution * (p.caf - x[0]),
        p.k1 * x[0] - p.k2 * x[1] - dilution * x[1],
        -p.alpha * x[2],
    )
}

/// Diffusion column `G = (0, 0, β)`; the noise is additive.
pub fn diffusion(p: &ReactorParams) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, p.beta)
}

/// Jacobian `∂f/∂x` of [`drift`].
pub fn jacobian(x: &PhysicalState, p: &ReactorParams) -> Matrix3<f64> {
    let dilution = x[2] / p.v;
    Matrix3::new(
        -p.k1 - 2.0 * p.k3 * x[0] - dilution,
        0.0,
        (p.caf - x[0]) / p.v,
        p.k1,
        -p.k2 - dilution,
        -x[1] / p.v,
        0.0,
        0.0,
        -p.alpha,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn drift_examples() {
        let p = ReactorParams::SET1;
        assert_eq!(drift(&Vector3::zeros(), &p), Vector3::zeros());
        assert_eq!(
            drift(&Vector3::zeros(), &ReactorParams::SET2),
            Vector3::zeros()
        );

        let f = drift(&Vector3::from(SET1_X0), &p);
        // -0.04164 - 0.025002 + 0.0009528 * (0.0027 - 3)
        assert!(close(f[0], -0.069497828, 1e-9), "{}", f[0]);
        assert!(close(f[1], 0.009459264, 1e-12), "{}", f[1]);
        assert!(close(f[2], -0.0009528, 1e-15));

        let f = drift(&Vector3::new(0.0, 0.0, 1.0), &p);
        assert!(close(f[0], 0.00027, 1e-15));
        assert_eq!(f[1], 0.0);
        assert!(close(f[2], -0.1, 1e-15));
    }

    #[test]
    fn diffusion_is_state_independent() {
        assert_eq!(
            diffusion(&ReactorParams::SET1),
            Vector3::new(0.0, 0.0, 0.044)
        );
        assert_eq!(
            diffusion(&ReactorParams::SET1.with_beta(0.0)),
            Vector3::zeros()
        );
        assert_eq!(
            diffusion(&ReactorParams::SET1.with_beta(1.0)),
            Vector3::new(0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn jacobian_examples() {
        let p = ReactorParams::SET1;
        let j0 = jacobian(&Vector3::zeros(), &p);
        assert_eq!(
            j0,
            Matrix3::new(
                -p.k1,
                0.0,
                p.caf / p.v,
                p.k1,
                -p.k2,
                0.0,
                0.0,
                0.0,
                -p.alpha
            )
        );
        let j = jacobian(&Vector3::from(SET1_X0), &p);
        assert!(close(j[(0, 0)], -0.0315008, 1e-12));
        assert_eq!(
            j.row(2).clone_owned(),
            nalgebra::RowVector3::new(0.0, 0.0, -p.alpha)
        );
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for p in [ReactorParams::SET1, ReactorParams::SET2] {
            for _ in 0..100 {
                let x = Vector3::new(
                    rng.random_range(-1.0..5.0),
                    rng.random_range(-1.0..5.0),
                    rng.random_range(-0.5..0.5),
                );
                let jac = jacobian(&x, &p);
                for col in 0..3 {
                    let mut up = x;
                    let mut dn = x;
                    up[col] += h;
                    dn[col] -= h;
                    let fd = (drift(&up, &p) - drift(&dn, &p)) / (2.0 * h);
                    for row in 0..3 {
                        let exact = jac[(row, col)];
                        let err = (fd[row] - exact).abs();
                        // Relative error, with an absolute floor for entries that vanish.
                        assert!(
                            err <= 1e-6 * exact.abs().max(1e-4),
                            "({row},{col}): fd {} vs {exact}",
                            fd[row]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ReactorParams::SET1.validate().is_ok());
        assert!(ReactorParams::SET2.validate().is_ok());
        assert!(ReactorParams::SET1.with_beta(0.0).validate().is_ok());
        assert!(ReactorParams::SET1.with_beta(-1.0).validate().is_err());
        let bad = ReactorParams {
            alpha: 0.0,
            ..ReactorParams::SET1
        };
        assert!(bad.validate().is_err());
        let bad = ReactorParams {
            v: f64::NAN,
            ..ReactorParams::SET1
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stationary_ou_variance() {
        assert!(close(
            ReactorParams::SET1.ou_stationary_variance(),
            0.00968,
            1e-15
        ));
    }
}
