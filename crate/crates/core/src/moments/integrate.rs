//! Fixed-step classical Runge-Kutta integration on a uniform grid.

use crate::{Error, Result};

/// A state that can be advanced by the RK4 driver.
pub trait OdeState: Clone {
    /// `self + h · d`.
    fn axpy(&self, h: f64, d: &Self) -> Self;

    /// Restores exact covariance symmetry after a step; no-op by default.
    fn symmetrize(&mut self) {}

    fn is_finite(&self) -> bool;
}

impl OdeState for Vec<f64> {
    fn axpy(&self, h: f64, d: &Self) -> Self {
        self.iter().zip(d).map(|(y, dy)| y + h * dy).collect()
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

/// Tolerance for deciding that a time lies on the grid.
pub const GRID_TOL: f64 = 1e-9;

/// Number of steps of size `dt` that reach `t_end`.
pub fn grid_steps(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {dt}"
        )));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be non-negative, got {t_end}"
        )));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > GRID_TOL {
        return Err(Error::OffGrid { t: t_end, dt });
    }
    Ok(steps as usize)
}

/// Grid index of `t`, or an error if `t` is not within [`GRID_TOL`] of a grid point.
pub fn grid_index(t: f64, dt: f64, len: usize) -> Result<usize> {
    let k = (t / dt).round();
    if !t.is_finite() || k < 0.0 || (k * dt - t).abs() > GRID_TOL || k as usize >= len {
        return Err(Error::OffGrid { t, dt });
    }
    Ok(k as usize)
}

/// States sampled at `t_k = k · dt`, `k = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub dt: f64,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|k| self.time(k))
    }

    /// Exact grid lookup; off-grid times are an error.
    pub fn at(&self, t: f64) -> Result<&S> {
        grid_index(t, self.dt, self.states.len()).map(|k| &self.states[k])
    }

    pub fn last(&self) -> &S {
        self.states
            .last()
            .expect("trajectories hold at least the initial state")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> {
        self.states
            .iter()
            .enumerate()
            .map(|(k, s)| (self.time(k), s))
    }
}

/// One classical RK4 step.
pub fn rk4_step<S, F>(rhs: &mut F, y: &S, dt: f64) -> S
where
    S: OdeState,
    F: FnMut(&S) -> S,
{
    let k1 = rhs(y);
    let k2 = rhs(&y.axpy(0.5 * dt, &k1));
    let k3 = rhs(&y.axpy(0.5 * dt, &k2));
    let k4 = rhs(&y.axpy(dt, &k3));
    let sixth = dt / 6.0;
    let third = dt / 3.0;
    let mut next = y
        .axpy(sixth, &k1)
        .axpy(third, &k2)
        .axpy(third, &k3)
        .axpy(sixth, &k4);
    next.symmetrize();
    next
}

/// Integrates `dy/dt = rhs(y)` from `t = 0` to `t_end` and keeps every grid state.
pub fn integrate<S, F>(mut rhs: F, y0: S, dt: f64, t_end: f64) -> Result<Trajectory<S>>
where
    S: OdeState,
    F: FnMut(&S) -> S,
{
    let steps = grid_steps(dt, t_end)?;
    if !y0.is_finite() {
        return Err(Error::NonFinite { t: 0.0 });
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(y0);
    for k in 0..steps {
        let next = rk4_step(&mut rhs, &states[k], dt);
        if !next.is_finite() {
            return Err(Error::NonFinite {
                t: (k + 1) as f64 * dt,
            });
        }
        states.push(next);
    }
    Ok(Trajectory { dt, states })
}
