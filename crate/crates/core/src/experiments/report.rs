use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use super::Scenario;
use crate::carleman::build_vandevusse;
use crate::ekf::ekf_predict;
use crate::moments::{
    covariance_notion_gap, crosscheck_mean_paths, integrate_augmented, integrate_physical,
    AugmentedMoments, CrosscheckReport, PhysicalMoments, Trajectory,
};
use crate::montecarlo::{
    ensemble_moments, simulate_coupled, simulate_path, InitialState, PathConfig, SystemKind,
};
use crate::{Error, Result};

/// Which estimators a run executes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Methods {
    pub carleman: bool,
    pub ekf: bool,
    pub mc: bool,
}

impl Methods {
    pub const ALL: Methods = Methods {
        carleman: true,
        ekf: true,
        mc: true,
    };
    pub const NONE: Methods = Methods {
        carleman: false,
        ekf: false,
        mc: false,
    };

    pub fn is_empty(&self) -> bool {
        *self == Self::NONE
    }
}

impl FromStr for Methods {
    type Err = Error;

    /// Comma-separated subset of `carleman`, `ekf`, `mc`; the empty string selects none.
    fn from_str(s: &str) -> Result<Self> {
        let mut m = Methods::NONE;
        for name in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match name {
                "carleman" => m.carleman = true,
                "ekf" => m.ekf = true,
                "mc" => m.mc = true,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown method `{other}` (expected carleman, ekf or mc)"
                    )))
                }
            }
        }
        Ok(m)
    }
}

impl fmt::Display for Methods {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.carleman, "carleman"),
            (self.ekf, "ekf"),
            (self.mc, "mc"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
        f.write_str(&names.join(","))
    }
}

/// Mean and covariance of one estimator on the grid, with its absolute error
/// against the reference realization.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub mean: Vec<[f64; 3]>,
    /// `P11, P12, P13, P22, P23, P33`.
    pub cov: Vec<[f64; 6]>,
    /// `|x_true - mean|` per state.
    pub abs_error: Vec<[f64; 3]>,
}

impl MomentSeries {
    fn new(mean: Vec<[f64; 3]>, cov: Vec<[f64; 6]>, truth: &[[f64; 3]]) -> Self {
        let abs_error = mean
            .iter()
            .zip(truth)
            .map(|(m, x)| [0, 1, 2].map(|i| (x[i] - m[i]).abs()))
            .collect();
        Self {
            mean,
            cov,
            abs_error,
        }
    }

    /// `P11` and `P22` at grid index `k`.
    pub fn concentration_variances(&self, k: usize) -> (f64, f64) {
        (self.cov[k][0], self.cov[k][3])
    }
}

/// One row of the variance table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub t: f64,
    pub carleman_p11: Option<f64>,
    pub ekf_p11: Option<f64>,
    pub carleman_p22: Option<f64>,
    pub ekf_p22: Option<f64>,
}

/// Sampled moments of the nonlinear SDE at a checkpoint, next to the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McValidationRow {
    pub t: f64,
    /// 0-based state index.
    pub state: usize,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub mc_var: f64,
    pub carleman_mean: Option<f64>,
    pub carleman_var: Option<f64>,
    pub ekf_mean: Option<f64>,
    pub ekf_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub n_paths: u64,
    /// Physical block of the bilinear path driven by the reference noise.
    #[serde(skip)]
    pub bilinear_path: Vec<[f64; 3]>,
    /// Largest `|x1_true - x1_bilinear|` over the horizon.
    pub max_abs_x1_gap: f64,
    pub max_abs_x2_gap: f64,
    pub rows: Vec<McValidationRow>,
    /// Earliest path blow-up that cut the sampled checkpoints short.
    pub explosion: Option<Explosion>,
}

/// A Monte-Carlo path whose state became non-finite at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Explosion {
    pub path: u64,
    pub t: f64,
}

/// Everything a run produces. Serializing gives the run summary; the grid
/// series are written separately as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario: Scenario,
    pub methods: Methods,
    pub steps: usize,
    /// Seed of the reference realization.
    pub seed: u64,
    #[serde(skip)]
    pub truth: Option<Vec<[f64; 3]>>,
    #[serde(skip)]
    pub carleman: Option<MomentSeries>,
    #[serde(skip)]
    pub ekf: Option<MomentSeries>,
    pub checkpoints: Vec<CheckpointRow>,
    pub mc: Option<McSummary>,
    /// Physical vs augmented mean routes.
    pub crosscheck: Option<CrosscheckReport>,
    /// Largest gap between the physical covariance and the `Cov(x, x)` block
    /// of the augmented covariance.
    pub covariance_gap: Option<f64>,
}

impl ComparisonReport {
    pub fn dt(&self) -> f64 {
        self.scenario.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.scenario.dt
    }

    /// Grid index of a checkpoint time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        crate::moments::grid_index(t, self.scenario.dt, self.steps + 1)
    }
}

fn points(traj: &Trajectory<Vec<f64>>) -> Vec<[f64; 3]> {
    traj.states.iter().map(|x| [x[0], x[1], x[2]]).collect()
}

fn run_carleman(s: &Scenario, truth: &[[f64; 3]]) -> Result<(MomentSeries, CrosscheckReport, f64)> {
    let phys0 = PhysicalMoments::diagonal(s.x0, s.p0_diag);
    let phys = integrate_physical(&s.params, phys0, s.dt, s.t_end)?;
    let sys = build_vandevusse(&s.params);
    let aug0 = AugmentedMoments::from_physical(&phys0);
    let aug = integrate_augmented(&sys, aug0.clone(), s.dt, s.t_end)?;
    let cross = crosscheck_mean_paths(&sys, &s.params, &phys0, &aug0, s.dt, s.t_end)?;
    let gap = covariance_notion_gap(&phys, &aug);
    let mean = phys.states.iter().map(|m| m.mean.into()).collect();
    let cov = phys.states.iter().map(|m| m.cov).collect();
    Ok((MomentSeries::new(mean, cov, truth), cross, gap))
}

fn run_ekf(s: &Scenario, truth: &[[f64; 3]]) -> Result<MomentSeries> {
    let p0 = Matrix3::from_diagonal(&Vector3::from(s.p0_diag));
    let traj = ekf_predict(&s.params, Vector3::from(s.x0), p0, s.dt, s.t_end)?;
    let mean = traj.states.iter().map(|e| e.mean.into()).collect();
    let cov = traj
        .states
        .iter()
        .map(|e| PhysicalMoments::new(e.mean, &e.cov).cov)
        .collect();
    Ok(MomentSeries::new(mean, cov, truth))
}

/// Samples the nonlinear SDE from `N(x0, diag(p0_diag))` at the checkpoints.
///
/// Initial draws with negative concentrations can make the quadratic drift
/// explode in finite time, after which sampled moments do not exist. On such
/// a failure the checkpoints at or after the explosion time are dropped and
/// the ensemble is rerun on the rest; the earliest explosion is returned.
fn mc_rows(
    s: &Scenario,
    report: &ComparisonReport,
) -> Result<(Vec<McValidationRow>, Option<Explosion>)> {
    let init = InitialState::Gaussian {
        mean: s.x0,
        var: s.p0_diag,
    };
    let mut times = s.checkpoints.clone();
    let mut explosion = None;
    let stats = loop {
        let Some(&t_end) = times.iter().max_by(|a, b| a.total_cmp(b)) else {
            return Ok((Vec::new(), explosion));
        };
        let cfg = PathConfig {
            dt: s.dt,
            t_end,
            seed: s.seed,
            system: SystemKind::Nonlinear,
        };
        match ensemble_moments(&cfg, &init, &s.params, s.mc_paths, &times) {
            Ok(stats) => break stats,
            Err(Error::PathFailed { path, source }) => {
                let Error::NonFiniteStep { step } = *source else {
                    return Err(Error::PathFailed { path, source });
                };
                let t = step as f64 * s.dt;
                log::warn!(
                    "mc: path {path} exploded at t = {t}; dropping checkpoints from there on"
                );
                explosion = Some(Explosion { path, t });
                times.retain(|&c| c < t);
            }
            Err(e) => return Err(e),
        }
    };
    let mut rows = Vec::with_capacity(3 * times.len());
    for (c, &t) in times.iter().enumerate() {
        let k = report.index_of(t)?;
        for (state, slot) in [0, 3, 5].into_iter().enumerate() {
            let est =
                |m: &Option<MomentSeries>| m.as_ref().map(|m| (m.mean[k][state], m.cov[k][slot]));
            let (carleman_mean, carleman_var) = est(&report.carleman).unzip();
            let (ekf_mean, ekf_var) = est(&report.ekf).unzip();
            rows.push(McValidationRow {
                t,
                state,
                mc_mean: stats.mean[c][state],
                mc_stderr: stats.stderr[c][state],
                mc_var: stats.var[c][state],
                carleman_mean,
                carleman_var,
                ekf_mean,
                ekf_var,
            });
        }
    }
    Ok((rows, explosion))
}

/// Runs the selected methods on the scenario grid.
///
/// The reference ("true") trajectory is one nonlinear realization seeded with
/// `s.seed`. With `mc` selected, the bilinear embedding is driven by the same
/// increments, and an ensemble of `s.mc_paths` nonlinear paths started from
/// `N(x0, diag(p0_diag))` is sampled at the checkpoints.
pub fn run_scenario(s: &Scenario, methods: Methods) -> Result<ComparisonReport> {
    s.validate()?;
    let steps = s.steps()?;
    let mut report = ComparisonReport {
        scenario: s.clone(),
        methods,
        steps,
        seed: s.seed,
        truth: None,
        carleman: None,
        ekf: None,
        checkpoints: Vec::new(),
        mc: None,
        crosscheck: None,
        covariance_gap: None,
    };
    if methods.is_empty() {
        return Ok(report);
    }

    let cfg = PathConfig {
        dt: s.dt,
        t_end: s.t_end,
        seed: s.seed,
        system: SystemKind::Nonlinear,
    };
    let (truth, bilinear) = if methods.mc {
        let (nl, bl) =
            simulate_coupled(&cfg, s.x0, &s.params).map_err(|e| Error::in_method("truth", e))?;
        (points(&nl), Some(points(&bl)))
    } else {
        let nl = simulate_path(&cfg, &InitialState::Point(s.x0), &s.params)
            .map_err(|e| Error::in_method("truth", e))?;
        (points(&nl), None)
    };

    if methods.carleman {
        let (series, cross, gap) =
            run_carleman(s, &truth).map_err(|e| Error::in_method("carleman", e))?;
        log::info!(
            "carleman: mean-route discrepancy {:e}, covariance gap {:e}",
            cross.max_discrepancy(),
            gap
        );
        report.carleman = Some(series);
        report.crosscheck = Some(cross);
        report.covariance_gap = Some(gap);
    }
    if methods.ekf {
        report.ekf = Some(run_ekf(s, &truth).map_err(|e| Error::in_method("ekf", e))?);
    }

    if methods.carleman || methods.ekf {
        for &t in &s.checkpoints {
            let k = report.index_of(t)?;
            let c = report
                .carleman
                .as_ref()
                .map(|m| m.concentration_variances(k));
            let e = report.ekf.as_ref().map(|m| m.concentration_variances(k));
            report.checkpoints.push(CheckpointRow {
                t,
                carleman_p11: c.map(|v| v.0),
                ekf_p11: e.map(|v| v.0),
                carleman_p22: c.map(|v| v.1),
                ekf_p22: e.map(|v| v.1),
            });
        }
    }

    if let Some(bilinear_path) = bilinear {
        let gap = |i: usize| {
            truth
                .iter()
                .zip(&bilinear_path)
                .map(|(a, b)| (a[i] - b[i]).abs())
                .fold(0.0, f64::max)
        };
        let (max_abs_x1_gap, max_abs_x2_gap) = (gap(0), gap(1));
        let (rows, explosion) = mc_rows(s, &report).map_err(|e| Error::in_method("mc", e))?;
        report.mc = Some(McSummary {
            n_paths: s.mc_paths,
            bilinear_path,
            max_abs_x1_gap,
            max_abs_x2_gap,
            rows,
            explosion,
        });
    }
    report.truth = Some(truth);
    Ok(report)
}
