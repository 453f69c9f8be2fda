//! Concentrating initial data and diagnostics of energy concentration.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{Equation, Forcing, State, Stepper, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::wrap;
use crate::scalar::Real;
use crate::spectral::{gradient, lp_norm, Field, TorusGrid};

/// Share of the total energy enclosed by the localization radius.
pub const LOCALIZATION_SHARE: f64 = 0.9;

/// Reporting heuristic: an L6 local maximum above this multiple of the median
/// is listed as a concentration event.
pub const EVENT_FACTOR: f64 = 2.0;

/// `u = h^{-1/2} A f((x - x0)/h)`, `v = h^{-3/2} B f((x - x0)/h)` with the
/// bump `f(y) = exp(1 - 1/(1 - |y/r|^2))` on `|y| < r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationSpec<T> {
    pub radius: T,
    pub scale: T,
    pub center: Vec<T>,
    /// `A`, the height of the displacement profile.
    pub amplitude: T,
    /// `B`, the height of the velocity profile (0 gives `g = 0`).
    pub velocity_amplitude: T,
}

impl<T: Real> ConcentrationSpec<T> {
    pub fn new(radius: T, scale: T, center: Vec<T>) -> Self {
        ConcentrationSpec {
            radius,
            scale,
            center,
            amplitude: T::one(),
            velocity_amplitude: T::zero(),
        }
    }
}

/// The reference bump `exp(1 - 1/(1 - s^2))` for `s = |y|/r < 1`, else 0.
pub fn bump<T: Real>(s: T) -> T {
    if s.abs() >= T::one() {
        T::zero()
    } else {
        (T::one() - T::one() / (T::one() - s * s)).exp()
    }
}

pub fn make_concentrating_data<T: Real>(
    spec: &ConcentrationSpec<T>,
    grid: &Arc<TorusGrid<T>>,
) -> Result<State<T>> {
    let dim = grid.dim();
    if spec.center.len() != dim {
        return Err(Error::InvalidParameter(format!(
            "center has {} coordinates on a {dim}-dimensional grid",
            spec.center.len()
        )));
    }
    if !(spec.scale > T::zero() && spec.scale <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "scale h = {} must lie in (0, 1]",
            spec.scale
        )));
    }
    if !(spec.radius > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "profile radius {} must be positive",
            spec.radius
        )));
    }
    let min_len = grid.lengths().iter().copied().fold(T::infinity(), T::min);
    if spec.radius * spec.scale >= min_len / T::lit(2.0) {
        return Err(Error::InvalidParameter(format!(
            "support radius r h = {} does not fit half a period",
            spec.radius * spec.scale
        )));
    }
    if spec.scale <= T::lit(2.0) * grid.min_cell_width() {
        return Err(Error::Resolution(format!(
            "scale h = {} is not above two cells ({})",
            spec.scale,
            grid.min_cell_width()
        )));
    }
    let h = spec.scale;
    let lengths = grid.lengths().to_vec();
    let shape = |x: &[T]| {
        let r2 =
            x.iter()
                .zip(&spec.center)
                .zip(&lengths)
                .fold(T::zero(), |acc, ((&xi, &ci), &l)| {
                    let y = wrap(xi - ci, l) / h;
                    acc + y * y
                });
        bump(r2.sqrt() / spec.radius)
    };
    let u_scale = spec.amplitude / h.sqrt();
    let v_scale = spec.velocity_amplitude / (h * h.sqrt());
    let u = Field::from_fn(grid, |x| u_scale * shape(x))?;
    let v = Field::from_fn(grid, |x| v_scale * shape(x))?;
    State::new(u, v, T::zero())
}

/// `e = 1/2 (v^2 + |grad u|^2) + 1/6 u^6`, plus `1/2 u^2` when `mass`.
pub fn energy_density<T: Real>(s: &State<T>, mass: bool) -> Field<T> {
    let grads = gradient(&s.u);
    let half = T::lit(0.5);
    let values = (0..s.u.values().len())
        .map(|i| {
            let u = s.u.values()[i];
            let v = s.v.values()[i];
            let g2 = grads
                .iter()
                .fold(T::zero(), |acc, g| acc + g.values()[i] * g.values()[i]);
            let u2 = u * u;
            let mut e = half * (v * v + g2) + u2 * u2 * u2 / T::lit(6.0);
            if mass {
                e = e + half * u2;
            }
            e
        })
        .collect();
    Field::new(s.grid().clone(), values).expect("density of a finite state is finite")
}

/// Smallest radius about the circular-mean centroid of `density` enclosing
/// 90% of its integral, clamped to `[cell / 2, diam / 2]`. Densities with no
/// preferred position report `diam / 2`.
pub fn localization_radius<T: Real>(density: &Field<T>) -> T {
    let grid = density.grid();
    let dim = grid.dim();
    let diam_half = grid.diameter() / T::lit(2.0);
    let total: T = density.values().iter().copied().sum();
    if !(total > T::zero()) {
        return diam_half;
    }
    let two_pi = T::TAU();
    let mut center = vec![T::zero(); dim];
    let mut localized = false;
    for (axis, c) in center.iter_mut().enumerate() {
        let l = grid.lengths()[axis];
        let (mut cs, mut sn) = (T::zero(), T::zero());
        for (i, &e) in density.values().iter().enumerate() {
            let theta = two_pi * grid.point(i)[axis] / l;
            cs = cs + e * theta.cos();
            sn = sn + e * theta.sin();
        }
        if (cs * cs + sn * sn).sqrt() > T::lit(1e-10) * total {
            localized = true;
            *c = sn.atan2(cs) / two_pi * l;
        }
    }
    if !localized {
        return diam_half;
    }
    let mut by_distance: Vec<(T, T)> = density
        .values()
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let p = grid.point(i);
            let d2 = (0..dim).fold(T::zero(), |acc, a| {
                let d = wrap(p[a] - center[a], grid.lengths()[a]);
                acc + d * d
            });
            (d2.sqrt(), e)
        })
        .collect();
    by_distance.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("distances are finite"));
    let goal = T::lit(LOCALIZATION_SHARE) * total;
    let mut acc = T::zero();
    let mut radius = diam_half;
    for (d, e) in by_distance {
        acc = acc + e;
        if acc >= goal {
            radius = d;
            break;
        }
    }
    radius
        .max(grid.min_cell_width() / T::lit(2.0))
        .min(diam_half)
}

/// Per-snapshot concentration diagnostics.
#[derive(Clone, Debug)]
pub struct ConcentrationReport<T> {
    pub times: Vec<T>,
    pub l6: Vec<T>,
    pub energy: Vec<T>,
    pub rho90: Vec<T>,
    /// Indices of L6 local maxima above `EVENT_FACTOR` times the median.
    pub events: Vec<usize>,
    /// `|||u_nl - u_lin|||` over the run, when computed.
    pub linearizability_gap: Option<T>,
}

impl<T: Real> ConcentrationReport<T> {
    pub fn event_times(&self) -> Vec<T> {
        self.events.iter().map(|&i| self.times[i]).collect()
    }

    /// CSV `t,L6_norm_u,E,rho90,event`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,L6_norm_u,E,rho90,event")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                self.times[i].as_f64(),
                self.l6[i].as_f64(),
                self.energy[i].as_f64(),
                self.rho90[i].as_f64(),
                u8::from(self.events.contains(&i))
            )?;
        }
        Ok(())
    }
}

pub fn track_concentration<T: Real>(traj: &Trajectory<T>) -> ConcentrationReport<T> {
    let mass = traj.equation().mass;
    let rows: Vec<(T, T, T)> = traj
        .states()
        .par_iter()
        .map(|s| {
            let density = energy_density(s, mass);
            let l6 = lp_norm(&s.u, T::lit(6.0)).expect("p = 6 is admissible");
            (l6, density.integral(), localization_radius(&density))
        })
        .collect();
    let l6: Vec<T> = rows.iter().map(|r| r.0).collect();
    let events = concentration_events(&l6);
    ConcentrationReport {
        times: traj.times(),
        energy: rows.iter().map(|r| r.1).collect(),
        rho90: rows.iter().map(|r| r.2).collect(),
        l6,
        events,
        linearizability_gap: None,
    }
}

/// Local maxima of `series` exceeding `EVENT_FACTOR` times its median.
pub fn concentration_events<T: Real>(series: &[T]) -> Vec<usize> {
    if series.is_empty() {
        return Vec::new();
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite series"));
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) / T::lit(2.0)
    };
    let threshold = T::lit(EVENT_FACTOR) * median;
    (0..m)
        .filter(|&i| {
            let left = i == 0 || series[i] >= series[i - 1];
            let right = i + 1 == m || series[i] >= series[i + 1];
            left && right && series[i] > threshold
        })
        .collect()
}

/// `|||u_nl - u_lin|||` on `[0, T]` for identical undamped, unforced data.
pub fn linearizability_gap<T: Real>(
    initial: &State<T>,
    horizon: T,
    dt: T,
    stride: usize,
) -> Result<T> {
    let grid = initial.grid();
    let nl = Stepper::new(grid, Equation::KLEIN_GORDON, None)?;
    let lin = Stepper::new(grid, Equation::LINEAR_KLEIN_GORDON, None)?;
    let (a, b) = rayon::join(
        || nl.simulate(initial, horizon, dt, stride, &Forcing::None),
        || lin.simulate(initial, horizon, dt, stride, &Forcing::None),
    );
    Ok(a?.difference(&b?)?.triple_norm())
}
