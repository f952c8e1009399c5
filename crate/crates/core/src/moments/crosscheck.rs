use serde::Serialize;

use super::{
    integrate_augmented, integrate_physical, AugmentedMoments, PhysicalMoments, Trajectory,
};
use crate::carleman::BilinearSystem;
use crate::model::ReactorParams;
use crate::{Error, Result};

/// Agreement between the physical and augmented mean routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrosscheckReport {
    /// Largest `|m_phys - ξ̂_x|` over the grid.
    pub max_mean_discrepancy: f64,
    /// Largest `|P_phys - (ξ̂_ij - ξ̂_i ξ̂_j)|` over the grid.
    pub max_cov_discrepancy: f64,
    /// Time at which the larger of the two maxima occurred.
    pub worst_time: f64,
    pub steps: usize,
}

impl CrosscheckReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.max_mean_discrepancy.max(self.max_cov_discrepancy)
    }
}

const CONSISTENCY_TOL: f64 = 1e-12;

/// Runs both moment routes from consistent initial data and compares them on every grid point.
pub fn crosscheck_mean_paths(
    sys: &BilinearSystem,
    p: &ReactorParams,
    physical0: &PhysicalMoments,
    augmented0: &AugmentedMoments,
    dt: f64,
    t_end: f64,
) -> Result<CrosscheckReport> {
    if sys.n() != 3 || augmented0.mean.len() != sys.dim() {
        return Err(Error::Inconsistent(format!(
            "augmented state has dimension {}, system expects {}",
            augmented0.mean.len(),
            sys.dim()
        )));
    }
    for i in 0..3 {
        let gap = (augmented0.mean[i] - physical0.mean[i]).abs();
        if gap > CONSISTENCY_TOL * (1.0 + physical0.mean[i].abs()) {
            return Err(Error::Inconsistent(format!(
                "mean component {i} differs by {gap:e}"
            )));
        }
    }
    for (k, s) in physical0.second_moments().into_iter().enumerate() {
        let gap = (augmented0.mean[3 + k] - s).abs();
        if gap > CONSISTENCY_TOL * (1.0 + s.abs()) {
            return Err(Error::Inconsistent(format!(
                "second-moment slot {k} differs from P + m mᵀ by {gap:e}"
            )));
        }
    }

    // The mean route does not depend on the covariance of ξ.
    let phys = integrate_physical(p, *physical0, dt, t_end)?;
    let aug = integrate_augmented(
        sys,
        AugmentedMoments::point(augmented0.mean.clone()),
        dt,
        t_end,
    )?;

    let mut report = CrosscheckReport {
        max_mean_discrepancy: 0.0,
        max_cov_discrepancy: 0.0,
        worst_time: 0.0,
        steps: phys.len() - 1,
    };
    let mut worst = 0.0f64;
    for (k, (ph, au)) in phys.states.iter().zip(&aug.states).enumerate() {
        let implied = PhysicalMoments::from_augmented_mean(au.mean.as_slice());
        let dm = (ph.mean - implied.mean).amax();
        let dp = ph
            .cov
            .iter()
            .zip(&implied.cov)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.max_mean_discrepancy = report.max_mean_discrepancy.max(dm);
        report.max_cov_discrepancy = report.max_cov_discrepancy.max(dp);
        if dm.max(dp) > worst {
            worst = dm.max(dp);
            report.worst_time = phys.time(k);
        }
    }
    Ok(report)
}

/// Largest gap between the physical covariance and the `Cov(x, x)` block of the
/// propagated augmented covariance.
///
/// The two differ because the product-state slots of the bilinear SDE leave
/// the manifold `ξ_ij = x_i x_j` once noise acts; the gap is a diagnostic.
pub fn covariance_notion_gap(
    physical: &Trajectory<PhysicalMoments>,
    augmented: &Trajectory<AugmentedMoments>,
) -> f64 {
    physical
        .states
        .iter()
        .zip(&augmented.states)
        .map(|(ph, au)| {
            (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| (ph.p(i, j) - au.physical_cov(i, j)).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}
