//! Seeded Euler-Maruyama simulation of the reactor SDE and of its bilinear
//! Carleman embedding, with ensemble statistics.
//!
//! Randomness: every path owns a `ChaCha8Rng`. A single path run with
//! `PathConfig::seed` is seeded with that value directly; path `i` of an
//! ensemble is seeded with [`substream_seed`]`(seed, i)`. Standard normal
//! variates come from `rand_distr::StandardNormal` (ziggurat) applied to the
//! path's generator, one variate per step, drawn after any initial-state
//! variates.
//!
//! Ensembles are reduced in fixed chunks of [`CHUNK`] paths, merged in path
//! order, so statistics do not depend on the number of worker threads.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::carleman::{build_vandevusse, BilinearSystem};
use crate::model::{diffusion, drift, ReactorParams};
use crate::moments::{grid_index, grid_steps, Trajectory};
use crate::{Error, Result};

/// Paths per reduction chunk.
pub const CHUNK: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SystemKind {
    /// The reactor SDE itself (3 states).
    Nonlinear,
    /// The order-2 bilinear embedding (9 states), started on `(x0, x0 ⊗ x0)`.
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub system: SystemKind,
}

/// Initial condition of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Point([f64; 3]),
    /// Independent normal components with the given means and variances.
    Gaussian {
        mean: [f64; 3],
        var: [f64; 3],
    },
}

/// Seed of ensemble path `index`: the SplitMix64 finalizer applied to
/// `seed + (index + 1) · 0x9E3779B97F4A7C15` (wrapping).
///
/// For a fixed `seed` the map `index ↦ seed` is a bijection on `u64`, so no
/// two paths of one ensemble share a stream seed.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Stepper<'a> {
    Nonlinear {
        p: &'a ReactorParams,
        g: Vector3<f64>,
    },
    Bilinear {
        sys: &'a BilinearSystem,
        drift: DVector<f64>,
        diff: DVector<f64>,
    },
}

impl<'a> Stepper<'a> {
    fn nonlinear(p: &'a ReactorParams) -> Self {
        Stepper::Nonlinear { p, g: diffusion(p) }
    }

    fn bilinear(sys: &'a BilinearSystem) -> Self {
        let dim = sys.dim();
        Stepper::Bilinear {
            sys,
            drift: DVector::zeros(dim),
            diff: DVector::zeros(dim),
        }
    }

    /// `x ← x + f(x) dt + g(x) √dt z`.
    fn step(&mut self, x: &mut [f64], z: f64, dt: f64, sqrt_dt: f64) {
        match self {
            Stepper::Nonlinear { p, g } => {
                let f = drift(&Vector3::new(x[0], x[1], x[2]), p);
                for i in 0..3 {
                    x[i] = x[i] + f[i] * dt + g[i] * sqrt_dt * z;
                }
            }
            Stepper::Bilinear { sys, drift, diff } => {
                let xi = DVector::from_column_slice(x);
                drift.copy_from(&sys.a0);
                drift.gemv(1.0, &sys.a, &xi, 1.0);
                diff.copy_from(&sys.g);
                diff.gemv(1.0, &sys.d, &xi, 1.0);
                for i in 0..x.len() {
                    x[i] = x[i] + drift[i] * dt + diff[i] * sqrt_dt * z;
                }
            }
        }
    }
}

fn initial_point(init: &InitialState, rng: &mut ChaCha8Rng) -> [f64; 3] {
    match *init {
        InitialState::Point(x) => x,
        InitialState::Gaussian { mean, var } => {
            let mut x = mean;
            for i in 0..3 {
                let z: f64 = StandardNormal.sample(rng);
                x[i] += var[i].sqrt() * z;
            }
            x
        }
    }
}

fn lift3(x: [f64; 3]) -> Vec<f64> {
    let mut xi = x.to_vec();
    xi.extend(crate::kronecker::reduce_square3(&x));
    xi
}

/// Runs one path and hands every grid state to `record`.
fn run_path(
    stepper: &mut Stepper<'_>,
    mut state: Vec<f64>,
    steps: usize,
    dt: f64,
    rng: &mut ChaCha8Rng,
    mut record: impl FnMut(usize, &[f64]),
) -> Result<()> {
    let sqrt_dt = dt.sqrt();
    record(0, &state);
    for k in 0..steps {
        let z: f64 = StandardNormal.sample(rng);
        stepper.step(&mut state, z, dt, sqrt_dt);
        if state.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteStep { step: k + 1 });
        }
        record(k + 1, &state);
    }
    Ok(())
}

fn check_config(cfg: &PathConfig) -> Result<usize> {
    grid_steps(cfg.dt, cfg.t_end)
}

/// Grid states of one simulated path.
pub type PathTrajectory = Trajectory<Vec<f64>>;

/// Simulates one path seeded with `cfg.seed`.
///
/// Nonlinear paths have 3 components, bilinear paths 9 (started from the
/// lifted initial state).
pub fn simulate_path(
    cfg: &PathConfig,
    init: &InitialState,
    p: &ReactorParams,
) -> Result<PathTrajectory> {
    let steps = check_config(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sys;
    let (mut stepper, state) = match cfg.system {
        SystemKind::Nonlinear => (
            Stepper::nonlinear(p),
            initial_point(init, &mut rng).to_vec(),
        ),
        SystemKind::Bilinear => {
            sys = build_vandevusse(p);
            (
                Stepper::bilinear(&sys),
                lift3(initial_point(init, &mut rng)),
            )
        }
    };
    let mut states = Vec::with_capacity(steps + 1);
    run_path(&mut stepper, state, steps, cfg.dt, &mut rng, |_, x| {
        states.push(x.to_vec())
    })?;
    Ok(Trajectory { dt: cfg.dt, states })
}

/// One realization of the nonlinear SDE and of the bilinear SDE driven by the
/// same Brownian increments. `cfg.system` is ignored.
pub fn simulate_coupled(
    cfg: &PathConfig,
    x0: [f64; 3],
    p: &ReactorParams,
) -> Result<(PathTrajectory, PathTrajectory)> {
    let steps = check_config(cfg)?;
    let sys = build_vandevusse(p);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nonlinear = Stepper::nonlinear(p);
    let mut bilinear = Stepper::bilinear(&sys);
    let sqrt_dt = cfg.dt.sqrt();
    let mut x = x0.to_vec();
    let mut xi = lift3(x0);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut xis = Vec::with_capacity(steps + 1);
    xs.push(x.clone());
    xis.push(xi.clone());
    for k in 0..steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        nonlinear.step(&mut x, z, cfg.dt, sqrt_dt);
        bilinear.step(&mut xi, z, cfg.dt, sqrt_dt);
        if x.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStep { step: k + 1 });
        }
        xs.push(x.clone());
        xis.push(xi.clone());
    }
    Ok((
        Trajectory {
            dt: cfg.dt,
            states: xs,
        },
        Trajectory {
            dt: cfg.dt,
            states: xis,
        },
    ))
}

/// Per-time, per-component sample statistics of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub n_paths: u64,
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    /// Unbiased sample variance.
    pub var: Vec<Vec<f64>>,
    /// Standard error of the mean, `sqrt(var / n_paths)`.
    pub stderr: Vec<Vec<f64>>,
}

/// Running count/mean/M2 accumulator for one scalar.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Welford) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n / n;
        self.m2 += other.m2 + delta * delta * self.n * other.n / n;
        self.n = n;
    }
}

/// Sample mean and variance over `n_paths` independent paths, at `sample_times`.
pub fn ensemble_moments(
    cfg: &PathConfig,
    init: &InitialState,
    p: &ReactorParams,
    n_paths: u64,
    sample_times: &[f64],
) -> Result<EnsembleStats> {
    if n_paths < 2 {
        return Err(Error::InvalidArgument(format!(
            "an ensemble needs at least 2 paths, got {n_paths}"
        )));
    }
    let steps = check_config(cfg)?;
    let sample_idx = sample_times
        .iter()
        .map(|&t| grid_index(t, cfg.dt, steps + 1))
        .collect::<Result<Vec<_>>>()?;
    // Slot of each grid index in the output (several times may share one index).
    let mut slot_of = vec![Vec::new(); steps + 1];
    for (s, &k) in sample_idx.iter().enumerate() {
        slot_of[k].push(s);
    }
    let sys = match cfg.system {
        SystemKind::Bilinear => Some(build_vandevusse(p)),
        SystemKind::Nonlinear => None,
    };
    let dim = if sys.is_some() { 9 } else { 3 };

    let n_chunks = n_paths.div_ceil(CHUNK);
    let chunks: Vec<Vec<Welford>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<Welford>> {
            let mut acc = vec![Welford::default(); sample_times.len() * dim];
            let mut stepper = match &sys {
                Some(sys) => Stepper::bilinear(sys),
                None => Stepper::nonlinear(p),
            };
            for path in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(cfg.seed, path));
                let x0 = initial_point(init, &mut rng);
                let state = if sys.is_some() {
                    lift3(x0)
                } else {
                    x0.to_vec()
                };
                run_path(&mut stepper, state, steps, cfg.dt, &mut rng, |k, x| {
                    for &s in &slot_of[k] {
                        for (d, &v) in x.iter().enumerate() {
                            acc[s * dim + d].push(v);
                        }
                    }
                })
                .map_err(|e| Error::PathFailed {
                    path,
                    source: Box::new(e),
                })?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut total = vec![Welford::default(); sample_times.len() * dim];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.merge(c);
        }
    }
    let n = n_paths as f64;
    let rows = |f: &dyn Fn(&Welford) -> f64| -> Vec<Vec<f64>> {
        total
            .chunks(dim)
            .map(|row| row.iter().map(f).collect())
            .collect()
    };
    Ok(EnsembleStats {
        n_paths,
        times: sample_times.to_vec(),
        mean: rows(&|w| w.mean),
        var: rows(&|w| (w.m2 / (n - 1.0)).max(0.0)),
        stderr: rows(&|w| ((w.m2 / (n - 1.0)).max(0.0) / n).sqrt()),
    })
}

/// Exact expectation of the Euler-Maruyama iterates of a bilinear SDE started
/// at `xi0`: `m_{k+1} = m_k + (A0 + A m_k) dt`. Returned at `sample_times`.
///
/// The noise increments have zero mean and are independent of the current
/// state, so this recursion is the mean of the simulated ensemble with no
/// sampling error; its gap to the ODE solution is the scheme's time-step bias.
pub fn bilinear_em_mean(
    sys: &BilinearSystem,
    xi0: &DVector<f64>,
    dt: f64,
    t_end: f64,
    sample_times: &[f64],
) -> Result<Vec<DVector<f64>>> {
    let steps = grid_steps(dt, t_end)?;
    let idx = sample_times
        .iter()
        .map(|&t| grid_index(t, dt, steps + 1))
        .collect::<Result<Vec<_>>>()?;
    let step = DMatrix::identity(sys.dim(), sys.dim()) + &sys.a * dt;
    let shift = &sys.a0 * dt;
    let mut m = xi0.clone();
    let mut out = vec![DVector::zeros(sys.dim()); idx.len()];
    for k in 0..=steps {
        for (s, &i) in idx.iter().enumerate() {
            if i == k {
                out[s] = m.clone();
            }
        }
        m = &step * &m + &shift;
    }
    Ok(out)
}
