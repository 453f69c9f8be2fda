use std::io::Write;

use crate::dynamics::{energy_of, Equation, State};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{lp_norm, sobolev_norm};

/// Header of the trajectory CSV.
pub const CSV_HEADER: &str = "t,E,D,H1_norm_u,L2_norm_v,L6_norm_u,L10_norm_u";

/// Stored snapshots of one run together with `D(t) = int_0^t int |a v|^2`.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    states: Vec<State<T>>,
    damping_integral: Vec<T>,
    dt: T,
    stride: usize,
    equation: Equation,
    forced: bool,
}

impl<T: Real> Trajectory<T> {
    pub(crate) fn start(
        initial: State<T>,
        dt: T,
        stride: usize,
        equation: Equation,
        forced: bool,
    ) -> Self {
        Trajectory {
            states: vec![initial],
            damping_integral: vec![T::zero()],
            dt,
            stride,
            equation,
            forced,
        }
    }

    pub(crate) fn push(&mut self, s: State<T>, d: T) {
        self.states.push(s);
        self.damping_integral.push(d);
    }

    /// Builds a trajectory from externally produced snapshots.
    pub fn from_states(
        states: Vec<State<T>>,
        damping_integral: Vec<T>,
        dt: T,
        stride: usize,
        equation: Equation,
        forced: bool,
    ) -> Result<Self> {
        if states.is_empty() || states.len() != damping_integral.len() {
            return Err(Error::InvalidParameter(
                "trajectory needs one damping value per state and at least one state".into(),
            ));
        }
        if states.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidParameter(
                "time stamps must increase strictly".into(),
            ));
        }
        if damping_integral.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "damping integral must be nondecreasing".into(),
            ));
        }
        Ok(Trajectory {
            states,
            damping_integral,
            dt,
            stride,
            equation,
            forced,
        })
    }

    pub fn states(&self) -> &[State<T>] {
        &self.states
    }

    pub fn first(&self) -> &State<T> {
        &self.states[0]
    }

    pub fn last(&self) -> &State<T> {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn damping_integral(&self) -> &[T] {
        &self.damping_integral
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn equation(&self) -> Equation {
        self.equation
    }

    pub fn forced(&self) -> bool {
        self.forced
    }

    pub fn energies(&self) -> Vec<T> {
        self.states
            .iter()
            .map(|s| energy_of(s, self.equation))
            .collect()
    }

    /// `max_t |E(t) + D(t) - E(0)| / max(E(0), 1e-30)`.
    pub fn decay_identity_residual(&self) -> Result<T> {
        if self.forced {
            return Err(Error::Precondition(
                "energy decay identity does not apply to a forced trajectory".into(),
            ));
        }
        let e = self.energies();
        let e0 = e[0];
        let denom = e0.max(T::lit(1e-30));
        Ok(e.iter()
            .zip(&self.damping_integral)
            .map(|(&et, &d)| (et + d - e0).abs() / denom)
            .fold(T::zero(), T::max))
    }

    /// `||u||_{L^inf H^1} + ||v||_{L^inf L^2} + ||u||_{L^5 L^10}` over the
    /// stored snapshots, the last term by the trapezoid rule. The `L^5 L^10`
    /// part is the Strichartz norm only in `d = 3`; elsewhere it is a diagnostic.
    pub fn triple_norm(&self) -> T {
        let mut sup_h1 = T::zero();
        let mut sup_l2 = T::zero();
        let mut fifth: Vec<T> = Vec::with_capacity(self.states.len());
        let ten = T::lit(10.0);
        for s in &self.states {
            sup_h1 = sup_h1.max(sobolev_norm(&s.u, T::one()));
            sup_l2 = sup_l2.max(sobolev_norm(&s.v, T::zero()));
            let l10 = lp_norm(&s.u, ten).expect("p = 10 is admissible");
            fifth.push(l10.powi(5));
        }
        let integral = self
            .states
            .windows(2)
            .zip(fifth.windows(2))
            .map(|(s, f)| (s[1].t - s[0].t) * (f[0] + f[1]) / T::lit(2.0))
            .sum::<T>();
        sup_h1 + sup_l2 + integral.powf(T::lit(0.2))
    }

    /// Snapshot-wise `self - other`; time stamps must agree.
    pub fn difference(&self, other: &Trajectory<T>) -> Result<Trajectory<T>> {
        if self.len() != other.len() {
            return Err(Error::InvalidParameter(format!(
                "trajectories hold {} and {} snapshots",
                self.len(),
                other.len()
            )));
        }
        let tol = T::lit(1e-9) * self.dt.abs().max(T::one());
        let mut states = Vec::with_capacity(self.len());
        for (a, b) in self.states.iter().zip(&other.states) {
            if (a.t - b.t).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "time stamps {} and {} differ",
                    a.t, b.t
                )));
            }
            a.u.check_grid(&b.u)?;
            states.push(State {
                u: a.u.sub(&b.u),
                v: a.v.sub(&b.v),
                t: a.t,
            });
        }
        Ok(Trajectory {
            damping_integral: vec![T::zero(); states.len()],
            states,
            dt: self.dt,
            stride: self.stride,
            equation: self.equation,
            forced: self.forced || other.forced,
        })
    }

    /// Writes one CSV row per snapshot with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for (s, d) in self.states.iter().zip(&self.damping_integral) {
            let row = [
                s.t,
                energy_of(s, self.equation),
                *d,
                sobolev_norm(&s.u, T::one()),
                sobolev_norm(&s.v, T::zero()),
                lp_norm(&s.u, T::lit(6.0))?,
                lp_norm(&s.u, T::lit(10.0))?,
            ];
            let cells: Vec<String> = row.iter().map(|x| format!("{:.16e}", x.as_f64())).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}
