//! Experiment drivers: the wave-equation counterexample, decay-rate fits,
//! observability ratios and the stabilize-then-control pipeline.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{energy_of, DampingProfile, Equation, Forcing, State, Stepper};
use crate::error::{Error, Result};
use crate::hum::{ControlSolution, HumProblem, PicardOptions};
use crate::scalar::Real;
use crate::spectral::{Field, TorusGrid};

/// Default share of the run excluded from decay fits as initial transient.
pub const DEFAULT_TRANSIENT: f64 = 0.1;

/// Spatially constant solution of `u'' + u' + u^5 = 0`, `(u, u')(0) = (eps, 0)`.
#[derive(Clone, Debug)]
pub struct CounterexampleResult<T> {
    pub epsilon: T,
    pub horizon: T,
    /// `eps^6 / 6`.
    pub e0: T,
    /// `int_0^T |u'|^2`.
    pub damping_integral: T,
    /// `damping_integral / e0`.
    pub ratio: T,
    pub max_abs_u: T,
    /// `1/2 u'^2 + u^6/6` never increased between steps.
    pub energy_monotone: bool,
}

impl<T: Real> CounterexampleResult<T> {
    /// `max |u| <= eps`.
    pub fn amplitude_bound_holds(&self) -> bool {
        self.max_abs_u <= self.epsilon
    }

    /// `int |u'|^2 <= T eps^10`.
    pub fn damping_bound_holds(&self) -> bool {
        self.damping_integral <= self.horizon * self.epsilon.powi(10)
    }
}

/// Classical RK4 on `(u, u', int u'^2)`.
pub fn run_counterexample<T: Real>(
    epsilon: T,
    horizon: T,
    dt: T,
) -> Result<CounterexampleResult<T>> {
    if !(epsilon > T::zero() && epsilon <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} must lie in (0, 1]"
        )));
    }
    let steps = crate::dynamics::step_count(horizon, dt)?;
    let rhs = |y: [T; 3]| [y[1], -y[1] - y[0].powi(5), y[1] * y[1]];
    let energy = |y: [T; 3]| y[1] * y[1] / T::lit(2.0) + y[0].powi(6) / T::lit(6.0);
    let e0 = epsilon.powi(6) / T::lit(6.0);
    let slack = T::lit(1e-10) * e0;
    let mut y = [epsilon, T::zero(), T::zero()];
    let mut max_abs = epsilon;
    let mut monotone = true;
    let mut e_prev = energy(y);
    let (two, six) = (T::lit(2.0), T::lit(6.0));
    for _ in 0..steps {
        let add = |a: [T; 3], k: [T; 3], c: T| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]];
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, dt / two));
        let k3 = rhs(add(y, k2, dt / two));
        let k4 = rhs(add(y, k3, dt));
        for i in 0..3 {
            y[i] = y[i] + dt / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        max_abs = max_abs.max(y[0].abs());
        let e = energy(y);
        if e > e_prev + slack {
            monotone = false;
        }
        e_prev = e;
    }
    Ok(CounterexampleResult {
        epsilon,
        horizon,
        e0,
        damping_integral: y[2],
        ratio: y[2] / e0,
        max_abs_u: max_abs,
        energy_monotone: monotone,
    })
}

/// Least-squares fit `E(t) ~ C E(0) exp(-gamma t)` on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit<T> {
    pub c: T,
    pub gamma: T,
    pub r_squared: T,
    pub window: (T, T),
    pub samples: usize,
}

/// Fits `log E` against `t` over the samples with
/// `t >= t_first + skip (t_last - t_first)`.
pub fn fit_decay_rate<T: Real>(series: &[(T, T)], skip: T) -> Result<DecayFit<T>> {
    if series.is_empty() {
        return Err(Error::Window("empty energy series".into()));
    }
    if !(skip >= T::zero() && skip < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "transient share {skip} must lie in [0, 1)"
        )));
    }
    let (t_first, e_first) = series[0];
    let t_last = series[series.len() - 1].0;
    let start = t_first + skip * (t_last - t_first);
    let window: Vec<(T, T)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= start)
        .collect();
    if let Some((t, e)) = window.iter().find(|(_, e)| !(*e > T::zero())) {
        return Err(Error::Window(format!(
            "energy {e} at t = {t} is not positive"
        )));
    }
    if window.len() < 3 {
        return Err(Error::Window(format!(
            "{} samples in the fit window, need at least 3",
            window.len()
        )));
    }
    if !(e_first > T::zero()) {
        return Err(Error::Window("initial energy is not positive".into()));
    }
    let m = T::from_usize_lossy(window.len());
    let mean_t = window.iter().map(|p| p.0).sum::<T>() / m;
    let mean_y = window.iter().map(|p| p.1.ln()).sum::<T>() / m;
    let (mut stt, mut sty, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(t, e) in &window {
        let dt = t - mean_t;
        let dy = e.ln() - mean_y;
        stt = stt + dt * dt;
        sty = sty + dt * dy;
        syy = syy + dy * dy;
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        let ss_res = window
            .iter()
            .map(|&(t, e)| {
                let r = e.ln() - (intercept + slope * t);
                r * r
            })
            .sum::<T>();
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };
    Ok(DecayFit {
        c: (intercept - e_first.ln()).exp(),
        gamma: -slope,
        r_squared,
        window: (window[0].0, window[window.len() - 1].0),
        samples: window.len(),
    })
}

/// `D(T) / E(0)` for the damped equation selected by `equation`.
pub fn observability_ratio<T: Real>(
    initial: &State<T>,
    horizon: T,
    dt: T,
    damping: Option<&DampingProfile<T>>,
    equation: Equation,
) -> Result<T> {
    let e0 = energy_of(initial, equation);
    if !(e0 > T::zero()) {
        return Err(Error::Precondition(
            "initial energy must be positive".into(),
        ));
    }
    let stepper = Stepper::new(initial.grid(), equation, damping.cloned())?;
    let steps = crate::dynamics::step_count(horizon, dt)?;
    let traj = stepper.simulate(initial, horizon, dt, steps.max(1), &Forcing::None)?;
    Ok(traj.damping_integral()[traj.len() - 1] / e0)
}

/// Observability ratios of the spatially constant family `(eps, 0)`.
pub fn constant_family_ratios<T: Real>(
    grid: &Arc<TorusGrid<T>>,
    amplitudes: &[T],
    horizon: T,
    dt: T,
    damping: &DampingProfile<T>,
    equation: Equation,
) -> Result<Vec<(T, T)>> {
    amplitudes
        .par_iter()
        .map(|&eps| {
            let s = State::new(Field::constant(grid, eps)?, Field::zeros(grid), T::zero())?;
            Ok((
                eps,
                observability_ratio(&s, horizon, dt, Some(damping), equation)?,
            ))
        })
        .collect()
}

/// Multiple `c (u, v)` with energy `target` under `equation`, by bisection.
pub fn scale_to_energy<T: Real>(
    u: &Field<T>,
    v: &Field<T>,
    target: T,
    equation: Equation,
) -> Result<State<T>> {
    let base = State::new(u.clone(), v.clone(), T::zero())?;
    if !(target > T::zero()) || base.is_zero() {
        return Err(Error::InvalidParameter(
            "need nonzero data and a positive target energy".into(),
        ));
    }
    let e = |c: T| energy_of(&base.scaled(c), equation);
    let mut hi = T::one();
    while e(hi) < target {
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if e(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(base.scaled((lo + hi) / T::lit(2.0)))
}

/// Outcome of damping to small energy and then controlling exactly.
#[derive(Clone, Debug)]
pub struct StabilizeReport<T: Real> {
    pub initial_energy: T,
    pub handoff_time: T,
    pub handoff_energy: T,
    pub handoff_norm: T,
    /// `(t, E)` of the damped phase up to hand-off.
    pub stabilization: Vec<(T, T)>,
    pub control: ControlSolution<T>,
}

/// Damps with `damping` (snapshots every `stride` steps) until the energy
/// norm is at most `opts.delta`, then controls to rest over `control.horizon()`.
pub fn stabilize_then_control<T: Real>(
    initial: &State<T>,
    stab_horizon: T,
    stride: usize,
    damping: &DampingProfile<T>,
    control: &HumProblem<T>,
    opts: PicardOptions<T>,
) -> Result<StabilizeReport<T>> {
    let eq = control.equation();
    let dt = control.dt();
    let stepper = Stepper::new(initial.grid(), eq, Some(damping.clone()))?;
    let total = crate::dynamics::step_count(stab_horizon, dt)?;
    let stride = stride.max(1);
    let initial_energy = energy_of(initial, eq);
    let mut state = State {
        t: T::zero(),
        ..initial.clone()
    };
    let mut history = vec![(T::zero(), initial_energy)];
    let mut done = 0;
    while state.energy_norm() > opts.delta {
        if done >= total {
            return Err(Error::StabilizationTimeout {
                norm: state.energy_norm().as_f64(),
                delta: opts.delta.as_f64(),
                horizon: stab_horizon.as_f64(),
            });
        }
        let chunk = stride.min(total - done);
        let traj = stepper.simulate(
            &state,
            T::from_usize_lossy(chunk) * dt,
            dt,
            chunk,
            &Forcing::None,
        )?;
        done += chunk;
        state = traj.last().clone();
        state.t = T::from_usize_lossy(done) * dt;
        history.push((state.t, energy_of(&state, eq)));
    }
    let solution = control.picard_nonlinear_control(&state, opts)?;
    Ok(StabilizeReport {
        initial_energy,
        handoff_time: state.t,
        handoff_energy: energy_of(&state, eq),
        handoff_norm: state.energy_norm(),
        stabilization: history,
        control: solution,
    })
}
