use std::sync::Arc;

use rustfft::num_complex::Complex;

use crate::dynamics::{DampingProfile, Equation, State, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{dealiased_power, Field, Spectrum, TorusGrid};

/// Below this value of `a^2 h` the damping weight `(1 - exp(-a^2 h)) / a^2`
/// is evaluated by its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

/// Energy-norm growth factor treated as blow-up.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Time-dependent right-hand side `g(t, x)`.
pub enum Forcing<'a, T: Real> {
    None,
    Static(&'a Field<T>),
    Dynamic(&'a (dyn Fn(T) -> Field<T> + Sync)),
}

impl<T: Real> Forcing<'_, T> {
    pub fn at(&self, t: T) -> Option<Field<T>> {
        match self {
            Forcing::None => None,
            Forcing::Static(f) => Some((*f).clone()),
            Forcing::Dynamic(f) => Some(f(t)),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Forcing::None)
    }
}

/// `dt = min(cell / 2, 1e-2)`.
pub fn default_dt<T: Real>(grid: &TorusGrid<T>) -> T {
    (grid.min_cell_width() / T::lit(2.0)).min(T::lit(1e-2))
}

/// Strang splitting for `u_tt - Lap u + u + u^5 + a^2 u_t = g`.
///
/// One step of size `dt` is: half local step with `g(t)`, exact linear
/// Klein-Gordon flow over `dt`, half local step with `g(t + dt)`. The local
/// step freezes `u` and solves `v' = -a^2 v - u^5 + g` exactly. With `a = 0`
/// the step is time-reversible and the forcing enters through the trapezoid
/// rule on Duhamel's formula.
#[derive(Clone, Debug)]
pub struct Stepper<T: Real> {
    grid: Arc<TorusGrid<T>>,
    equation: Equation,
    damping: Option<DampingProfile<T>>,
    omega: Vec<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(
        grid: &Arc<TorusGrid<T>>,
        equation: Equation,
        damping: Option<DampingProfile<T>>,
    ) -> Result<Self> {
        if let Some(d) = &damping {
            if !d.region().matches_grid(grid) || **d.a().grid() != **grid {
                return Err(Error::GridMismatch);
            }
        }
        let damping = damping.filter(|d| !d.is_zero());
        let mass = if equation.mass { T::one() } else { T::zero() };
        let omega = grid
            .laplacian_symbol()
            .iter()
            .map(|&l| (mass + l).sqrt())
            .collect();
        Ok(Stepper {
            grid: grid.clone(),
            equation,
            damping,
            omega,
        })
    }

    pub fn grid(&self) -> &Arc<TorusGrid<T>> {
        &self.grid
    }

    pub fn equation(&self) -> Equation {
        self.equation
    }

    pub fn damping(&self) -> Option<&DampingProfile<T>> {
        self.damping.as_ref()
    }

    /// Per-mode dispersion `omega_k`.
    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    /// Exact flow of the linear, undamped equation over `dt` (any sign).
    pub fn propagate(&self, u: &Field<T>, v: &Field<T>, dt: T) -> (Field<T>, Field<T>) {
        let mut uh = Spectrum::forward(u);
        let mut vh = Spectrum::forward(v);
        for ((cu, cv), &w) in uh
            .coeffs_mut()
            .iter_mut()
            .zip(vh.coeffs_mut().iter_mut())
            .zip(&self.omega)
        {
            let (s, c) = (w * dt).sin_cos();
            let sinc = if w == T::zero() { dt } else { s / w };
            let nu: Complex<T> = *cu * c + *cv * sinc;
            let nv: Complex<T> = *cu * (-w * s) + *cv * c;
            *cu = nu;
            *cv = nv;
        }
        (uh.to_field(), vh.to_field())
    }

    pub fn propagate_state(&self, s: &State<T>, dt: T) -> State<T> {
        let (u, v) = self.propagate(&s.u, &s.v, dt);
        State { u, v, t: s.t + dt }
    }

    /// Dealiased `u^5`, or `None` when the quintic term is off.
    pub fn nonlinear_term(&self, u: &Field<T>) -> Option<Field<T>> {
        self.equation.nonlinear.then(|| dealiased_power(u, 5))
    }

    /// Exact solution over `h` of `v' = -a^2 v + source` with `source` frozen.
    pub fn kick(&self, v: &Field<T>, h: T, source: Option<&Field<T>>) -> Field<T> {
        match (&self.damping, source) {
            (None, None) => v.clone(),
            (None, Some(src)) => v.zip_map(src, |vv, s| vv + h * s),
            (Some(d), src) => {
                let a_sq = d.a_squared().values();
                let threshold = T::lit(SERIES_THRESHOLD);
                let values = v
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, &vv)| {
                        let x = a_sq[i] * h;
                        let decay = (-x).exp();
                        let weight = if x.abs() < threshold {
                            h * (T::one() - x / T::lit(2.0) + x * x / T::lit(6.0))
                        } else {
                            (T::one() - decay) / a_sq[i]
                        };
                        let s = src.map_or(T::zero(), |f| f.values()[i]);
                        decay * vv + weight * s
                    })
                    .collect();
                Field::from_parts(self.grid.clone(), values)
            }
        }
    }

    fn local_source(g: Option<&Field<T>>, n: Option<&Field<T>>) -> Option<Field<T>> {
        match (g, n) {
            (None, None) => None,
            (Some(g), None) => Some(g.clone()),
            (None, Some(n)) => Some(n.scale(-T::one())),
            (Some(g), Some(n)) => Some(g.sub(n)),
        }
    }

    /// One Strang step. `g_start`, `g_end` sample the forcing at `t`, `t + dt`.
    pub fn step(
        &self,
        s: &State<T>,
        dt: T,
        g_start: Option<&Field<T>>,
        g_end: Option<&Field<T>>,
    ) -> State<T> {
        self.step_cached(s, dt, g_start, g_end, None).0
    }

    /// Step reusing `u^5` at the start when the caller has it; returns `u^5`
    /// at the end for the next step.
    pub(crate) fn step_cached(
        &self,
        s: &State<T>,
        dt: T,
        g_start: Option<&Field<T>>,
        g_end: Option<&Field<T>>,
        n_start: Option<Field<T>>,
    ) -> (State<T>, Option<Field<T>>) {
        let half = dt / T::lit(2.0);
        let n0 = n_start.or_else(|| self.nonlinear_term(&s.u));
        let src0 = Self::local_source(g_start, n0.as_ref());
        let v_half = self.kick(&s.v, half, src0.as_ref());
        let (u1, v1) = self.propagate(&s.u, &v_half, dt);
        let n1 = self.nonlinear_term(&u1);
        let src1 = Self::local_source(g_end, n1.as_ref());
        let v1 = self.kick(&v1, half, src1.as_ref());
        (
            State {
                u: u1,
                v: v1,
                t: s.t + dt,
            },
            n1,
        )
    }

    /// `E = 1/2 int (v^2 + m u^2 + |grad u|^2) + 1/6 int u^6`, with the mass
    /// and sextic terms following the equation flags.
    pub fn energy(&self, s: &State<T>) -> T {
        super::energy_of(s, self.equation)
    }

    /// `int a^2 v^2`, the instantaneous dissipation rate.
    pub fn dissipation_rate(&self, s: &State<T>) -> T {
        match &self.damping {
            None => T::zero(),
            Some(d) => {
                let a_sq = d.a_squared().values();
                s.v.values()
                    .iter()
                    .zip(a_sq)
                    .map(|(&v, &a)| a * v * v)
                    .sum::<T>()
                    * self.grid.cell_volume()
            }
        }
    }

    /// Marches from `initial` to `initial.t + duration`, storing every
    /// `stride`-th state (plus the final one). `D(t)` is accumulated every
    /// step with the trapezoid rule.
    pub fn simulate(
        &self,
        initial: &State<T>,
        duration: T,
        dt: T,
        stride: usize,
        forcing: &Forcing<'_, T>,
    ) -> Result<Trajectory<T>> {
        if **initial.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        let steps = step_count(duration, dt)?;
        if stride == 0 {
            return Err(Error::InvalidParameter(
                "snapshot stride must be >= 1".into(),
            ));
        }
        let t0 = initial.t;
        let initial_norm = initial.energy_norm();
        let limit = if initial_norm > T::zero() {
            T::lit(DIVERGENCE_FACTOR) * initial_norm
        } else {
            T::lit(DIVERGENCE_FACTOR)
        };

        let mut traj = Trajectory::start(
            initial.clone(),
            dt,
            stride,
            self.equation,
            !forcing.is_none(),
        );
        let mut state = initial.clone();
        let mut rate = self.dissipation_rate(&state);
        let mut damping_integral = T::zero();
        let mut g_start = forcing.at(t0);
        let mut n_cache = None;
        for j in 0..steps {
            let t_end = t0 + T::from_usize_lossy(j + 1) * dt;
            let g_end = forcing.at(t_end);
            let (mut next, n_end) =
                self.step_cached(&state, dt, g_start.as_ref(), g_end.as_ref(), n_cache.take());
            next.t = t_end;
            if !(next.u.max_abs().is_finite() && next.v.max_abs().is_finite()) {
                return Err(Error::Divergence {
                    t: t_end.as_f64(),
                    norm: f64::INFINITY,
                    limit: limit.as_f64(),
                });
            }
            let next_rate = self.dissipation_rate(&next);
            damping_integral = damping_integral + dt / T::lit(2.0) * (rate + next_rate);
            rate = next_rate;
            if (j + 1) % stride == 0 || j + 1 == steps {
                let norm = next.energy_norm();
                if norm > limit {
                    return Err(Error::Divergence {
                        t: t_end.as_f64(),
                        norm: norm.as_f64(),
                        limit: limit.as_f64(),
                    });
                }
                traj.push(next.clone(), damping_integral);
            }
            state = next;
            g_start = g_end;
            n_cache = n_end;
        }
        Ok(traj)
    }
}

/// Number of steps of size `dt` covering `duration`; errors unless the
/// ratio is integral to rounding.
pub fn step_count<T: Real>(duration: T, dt: T) -> Result<usize> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time step {dt} must be positive"
        )));
    }
    if !(duration >= T::zero() && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "duration {duration} must be >= 0"
        )));
    }
    let ratio = duration / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > T::lit(1e-6) * steps.max(T::one()) {
        return Err(Error::InvalidParameter(format!(
            "duration {duration} is not a whole number of steps of {dt}"
        )));
    }
    Ok(steps.to_usize().expect("step count fits usize"))
}

/// Exact linear Klein-Gordon flow `u_tt - Lap u + u = 0` over `dt`.
pub fn linear_propagate<T: Real>(s: &State<T>, dt: T) -> State<T> {
    let stepper = Stepper::new(s.grid(), Equation::LINEAR_KLEIN_GORDON, None)
        .expect("grid is consistent with itself");
    stepper.propagate_state(s, dt)
}
