use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{sobolev_norm, Field};

/// Displacement and velocity `(u, du/dt)` at time `t`.
#[derive(Clone, Debug)]
pub struct State<T: Real> {
    pub u: Field<T>,
    pub v: Field<T>,
    pub t: T,
}

impl<T: Real> State<T> {
    pub fn new(u: Field<T>, v: Field<T>, t: T) -> Result<Self> {
        u.check_grid(&v)?;
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time stamp {t} not finite"
            )));
        }
        Ok(State { u, v, t })
    }

    pub fn zero(grid: &std::sync::Arc<crate::spectral::TorusGrid<T>>, t: T) -> Self {
        State {
            u: Field::zeros(grid),
            v: Field::zeros(grid),
            t,
        }
    }

    pub fn grid(&self) -> &std::sync::Arc<crate::spectral::TorusGrid<T>> {
        self.u.grid()
    }

    /// `||(u, v)||_{H^1 x L^2}`.
    pub fn energy_norm(&self) -> T {
        let h1 = sobolev_norm(&self.u, T::one());
        let l2 = sobolev_norm(&self.v, T::zero());
        (h1 * h1 + l2 * l2).sqrt()
    }

    /// The state seen by the time-reversed equation: `(u, -v)` at `about - t`.
    pub fn reversed(&self, about: T) -> Self {
        State {
            u: self.u.clone(),
            v: self.v.scale(-T::one()),
            t: about - self.t,
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        State {
            u: self.u.scale(c),
            v: self.v.scale(c),
            t: self.t,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }
}

/// Which terms of `u_tt - Lap u + m u + n u^5 + a^2 u_t = g` are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Equation {
    /// Klein-Gordon mass term `+u`; off gives the wave equation.
    pub mass: bool,
    /// Defocusing quintic term `+u^5`.
    pub nonlinear: bool,
}

impl Equation {
    pub const KLEIN_GORDON: Equation = Equation {
        mass: true,
        nonlinear: true,
    };
    pub const LINEAR_KLEIN_GORDON: Equation = Equation {
        mass: true,
        nonlinear: false,
    };
    pub const WAVE: Equation = Equation {
        mass: false,
        nonlinear: true,
    };
}

impl Default for Equation {
    fn default() -> Self {
        Equation::KLEIN_GORDON
    }
}
