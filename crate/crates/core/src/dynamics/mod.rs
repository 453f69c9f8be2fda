//! Time evolution of the damped, forced Klein-Gordon equation
//! `u_tt - Lap u + u + u^5 + a(x)^2 u_t = g` and its energy functionals.

mod damping;
mod state;
mod stepper;
mod trajectory;

pub use damping::{DampingProfile, DEFAULT_TRANSITION_CELLS, SMOOTHNESS_TAIL};
pub use state::{Equation, State};
pub use stepper::{default_dt, linear_propagate, step_count, Forcing, Stepper, DIVERGENCE_FACTOR};
pub use trajectory::{Trajectory, CSV_HEADER};

use crate::scalar::Real;
use crate::spectral::gradient_norm;

/// `E = 1/2 int (v^2 + u^2 + |grad u|^2) + 1/6 int u^6`.
pub fn energy<T: Real>(s: &State<T>) -> T {
    energy_of(s, Equation::KLEIN_GORDON)
}

/// Energy with the mass and sextic terms selected by `eq`.
pub fn energy_of<T: Real>(s: &State<T>, eq: Equation) -> T {
    let half = T::lit(0.5);
    let grad = gradient_norm(&s.u);
    let dv = s.grid().cell_volume();
    let mut pointwise = T::zero();
    for (&u, &v) in s.u.values().iter().zip(s.v.values()) {
        let u2 = u * u;
        let mut e = half * v * v;
        if eq.mass {
            e = e + half * u2;
        }
        if eq.nonlinear {
            e = e + u2 * u2 * u2 / T::lit(6.0);
        }
        pointwise = pointwise + e;
    }
    pointwise * dv + half * grad * grad
}
