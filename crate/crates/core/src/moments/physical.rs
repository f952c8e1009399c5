use nalgebra::{Matrix3, Vector3};

use super::OdeState;
use crate::model::ReactorParams;

/// Mean and covariance of `(C_A, C_B, F_r)`.
///
/// The covariance is stored as its six unique entries in the reduced pair
/// order `P11, P12, P13, P22, P23, P33`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalMoments {
    pub mean: Vector3<f64>,
    pub cov: [f64; 6],
}

const SLOT: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

impl PhysicalMoments {
    pub fn new(mean: Vector3<f64>, cov: &Matrix3<f64>) -> Self {
        Self {
            mean,
            cov: [
                cov[(0, 0)],
                0.5 * (cov[(0, 1)] + cov[(1, 0)]),
                0.5 * (cov[(0, 2)] + cov[(2, 0)]),
                cov[(1, 1)],
                0.5 * (cov[(1, 2)] + cov[(2, 1)]),
                cov[(2, 2)],
            ],
        }
    }

    /// Point mean with a diagonal covariance.
    pub fn diagonal(mean: [f64; 3], var: [f64; 3]) -> Self {
        Self {
            mean: Vector3::from(mean),
            cov: [var[0], 0.0, 0.0, var[1], 0.0, var[2]],
        }
    }

    /// Covariance entry `P_ij` (0-based, symmetric).
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.cov[SLOT[i][j]]
    }

    pub fn cov_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.p(i, j))
    }

    /// Second raw moments `E[x_i x_j] = P_ij + m_i m_j` in pair order.
    pub fn second_moments(&self) -> [f64; 6] {
        let m = &self.mean;
        let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        pairs.map(|(i, j)| self.p(i, j) + m[i] * m[j])
    }

    /// Recovers mean and covariance from an augmented mean `(m, E[x ⊗ x])`.
    pub fn from_augmented_mean(xi: &[f64]) -> Self {
        let mean = Vector3::new(xi[0], xi[1], xi[2]);
        let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let mut cov = [0.0; 6];
        for (k, (i, j)) in pairs.into_iter().enumerate() {
            cov[k] = xi[3 + k] - mean[i] * mean[j];
        }
        Self { mean, cov }
    }
}

impl OdeState for PhysicalMoments {
    fn axpy(&self, h: f64, d: &Self) -> Self {
        let mut cov = self.cov;
        for (c, dc) in cov.iter_mut().zip(&d.cov) {
            *c += h * dc;
        }
        Self {
            mean: self.mean + d.mean * h,
            cov,
        }
    }

    fn is_finite(&self) -> bool {
        self.mean.iter().chain(&self.cov).all(|x| x.is_finite())
    }
}

/// Time derivative of the physical mean and covariance.
///
/// The mean equations take `E[x_i x_j] = P_ij + m_i m_j` in the truncated
/// bilinear dynamics. Each covariance equation is
/// `dP_ij = dE[x_i x_j] - m_i dm_j - m_j dm_i`; the cubic mean terms that
/// survive (e.g. `2 k3 m1³` in `P11`) are the truncation residual and are kept.
pub fn physical_rhs(m: &PhysicalMoments, p: &ReactorParams) -> PhysicalMoments {
    let (k1, k2, k3, caf, v, alpha, beta) = (p.k1, p.k2, p.k3, p.caf, p.v, p.alpha, p.beta);
    let [m1, m2, m3] = [m.mean[0], m.mean[1], m.mean[2]];
    let [p11, p12, p13, p22, p23, p33] = m.cov;

    let dm1 = -k1 * m1 + caf / v * m3 - k3 * p11 - k3 * m1 * m1 - p13 / v - m1 * m3 / v;
    let dm2 = k1 * m1 - k2 * m2 - p23 / v - m2 * m3 / v;
    let dm3 = -alpha * m3;

    let dp11 = -2.0 * k1 * p11
        + 2.0 * caf / v * p13
        + 2.0 * k3 * m1 * p11
        + 2.0 * k3 * m1 * m1 * m1
        + 2.0 / v * m1 * p13
        + 2.0 * m1 * m1 * m3 / v;
    let dp22 = 2.0 * k1 * p12 - 2.0 * k2 * p22 + 2.0 / v * m2 * p23 + 2.0 * m2 * m2 * m3 / v;
    let dp33 = beta * beta - 2.0 * alpha * p33;
    let dp12 = k1 * p11 + k3 * m2 * p11 - (k1 + k2) * p12
        + m2 * p13 / v
        + caf / v * p23
        + m1 * p23 / v
        + k3 * m1 * m1 * m2
        + 2.0 * m1 * m2 * m3 / v;
    let dp13 = -(alpha + k1) * p13
        + caf / v * p33
        + k3 * m3 * p11
        + k3 * m1 * m1 * m3
        + m3 * p13 / v
        + m1 * m3 * m3 / v;
    let dp23 = k1 * p13 - (alpha + k2) * p23 + m3 * p23 / v + m2 * m3 * m3 / v;

    PhysicalMoments {
        mean: Vector3::new(dm1, dm2, dm3),
        cov: [dp11, dp12, dp13, dp22, dp23, dp33],
    }
}
