use nalgebra::{DMatrix, DVector};

use super::{OdeState, PhysicalMoments};
use crate::carleman::BilinearSystem;
use crate::kronecker::MonomialIndexMap;

/// Mean and covariance of the augmented Carleman state `ξ = (x, x ⊗ x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl AugmentedMoments {
    /// Initial augmented moments consistent with Gaussian physical moments.
    ///
    /// The second mean block is `E[x_i x_j] = P_ij + m_i m_j`. Covariances
    /// involving product states use the Gaussian (Isserlis) moment identities:
    ///
    /// ```text
    /// Cov(x_k, x_i x_j)       = m_i P_kj + m_j P_ki
    /// Cov(x_i x_j, x_k x_l)   = m_i m_k P_jl + m_i m_l P_jk + m_j m_k P_il + m_j m_l P_ik
    ///                           + P_ik P_jl + P_il P_jk
    /// ```
    pub fn from_physical(m: &PhysicalMoments) -> Self {
        let map = MonomialIndexMap::pairs(3).expect("n = 3 is valid");
        let n = 3;
        let dim = n + map.len();
        let mu = &m.mean;
        let p = |i: usize, j: usize| m.p(i, j);

        let mut mean = DVector::zeros(dim);
        for i in 0..n {
            mean[i] = mu[i];
        }
        for (k, s) in m.second_moments().into_iter().enumerate() {
            mean[n + k] = s;
        }

        let mut cov = DMatrix::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] = p(i, j);
            }
        }
        for (a, t) in map.tuples().enumerate() {
            let (i, j) = (t[0], t[1]);
            for k in 0..n {
                let c = mu[i] * p(k, j) + mu[j] * p(k, i);
                cov[(k, n + a)] = c;
                cov[(n + a, k)] = c;
            }
            for (b, s) in map.tuples().enumerate().skip(a) {
                let (k, l) = (s[0], s[1]);
                let c = mu[i] * mu[k] * p(j, l)
                    + mu[i] * mu[l] * p(j, k)
                    + mu[j] * mu[k] * p(i, l)
                    + mu[j] * mu[l] * p(i, k)
                    + p(i, k) * p(j, l)
                    + p(i, l) * p(j, k);
                cov[(n + a, n + b)] = c;
                cov[(n + b, n + a)] = c;
            }
        }
        Self { mean, cov }
    }

    /// Deterministic point `ξ0` (zero covariance).
    pub fn point(xi: DVector<f64>) -> Self {
        let dim = xi.len();
        Self {
            mean: xi,
            cov: DMatrix::zeros(dim, dim),
        }
    }

    /// Covariance of the physical block, `Cov(x, x)`.
    pub fn physical_cov(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)]
    }

    /// Largest `|P - Pᵀ|` entry.
    pub fn asymmetry(&self) -> f64 {
        (&self.cov - self.cov.transpose()).amax()
    }
}

impl OdeState for AugmentedMoments {
    fn axpy(&self, h: f64, d: &Self) -> Self {
        Self {
            mean: &self.mean + &d.mean * h,
            cov: &self.cov + &d.cov * h,
        }
    }

    fn symmetrize(&mut self) {
        let t = self.cov.transpose();
        self.cov += t;
        self.cov *= 0.5;
    }

    fn is_finite(&self) -> bool {
        self.mean
            .iter()
            .chain(self.cov.iter())
            .all(|x| x.is_finite())
    }
}

/// Time derivative of the augmented mean and covariance under the bilinear SDE:
///
/// ```text
/// dξ̂/dt = A0 + A ξ̂
/// dP/dt  = P Aᵀ + A P + G Gᵀ + (D ξ̂) Gᵀ + G (D ξ̂)ᵀ + D P Dᵀ + (D ξ̂)(D ξ̂)ᵀ
/// ```
///
/// with every noise term scaled by the white-noise intensity `qw`.
pub fn augmented_rhs(m: &AugmentedMoments, sys: &BilinearSystem) -> AugmentedMoments {
    let mean = sys.augmented_drift(&m.mean);
    let ap = &sys.a * &m.cov;
    // Full diffusion column evaluated at the mean: G + D ξ̂.
    let dxi = &sys.d * &m.mean;
    let mut cov = &ap + ap.transpose();
    let noise = &sys.g * sys.g.transpose()
        + &dxi * sys.g.transpose()
        + &sys.g * dxi.transpose()
        + &sys.d * &m.cov * sys.d.transpose()
        + &dxi * dxi.transpose();
    cov += noise * sys.qw;
    AugmentedMoments { mean, cov }
}
