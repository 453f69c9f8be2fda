//! Exact control by the Hilbert Uniqueness Method.
//!
//! For adjoint data `Phi = (Phi0, Phi1)` let `Phi(t)` solve
//! `Phi_tt - Lap Phi + Phi = 0` and let `v` solve
//! `v_tt - Lap v + v = a^2 Phi` with `(v, v_t)(T) = 0`. The Gramian is
//! `S Phi = (-v_t(0), v(0))` and satisfies
//! `b(S Phi, Phi) = int_0^T int |a Phi|^2`. The control `g = a^2 Phi` with
//! `S Phi = (-u1, u0)` steers `(u0, u1)` to rest at time `T`.
//!
//! For the quintic equation the backward solve of
//! `u_tt - Lap u + u + u^5 = a^2 Phi` splits as `L = S + K`, and the control
//! is the fixed point of `Phi -> S^{-1}((-u1, u0) - K Phi)`.
//!
//! Backward solves run the forward stepper on the time-reversed problem
//! `w(s) = v(T - s)`. The undamped stepper is symmetric, so forward
//! verification retraces the backward solve to rounding.

use std::sync::Arc;

use crate::dynamics::{step_count, DampingProfile, Equation, Forcing, State, Stepper};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{sobolev_norm, Field, TorusGrid};

/// CG fails when the relative residual is not halved within this many steps.
pub const STAGNATION_WINDOW: usize = 50;

/// HUM unknown `(Phi0, Phi1)` in `L^2 x H^{-1}`.
#[derive(Clone, Debug)]
pub struct AdjointDatum<T: Real> {
    pub phi0: Field<T>,
    pub phi1: Field<T>,
}

impl<T: Real> AdjointDatum<T> {
    pub fn new(phi0: Field<T>, phi1: Field<T>) -> Result<Self> {
        phi0.check_grid(&phi1)?;
        Ok(AdjointDatum { phi0, phi1 })
    }

    pub fn zeros(grid: &Arc<TorusGrid<T>>) -> Self {
        AdjointDatum {
            phi0: Field::zeros(grid),
            phi1: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid<T>> {
        self.phi0.grid()
    }

    pub fn is_zero(&self) -> bool {
        self.phi0.is_zero() && self.phi1.is_zero()
    }

    /// `sqrt(||Phi0||_{L^2}^2 + ||Phi1||_{H^{-1}}^2)`.
    pub fn norm(&self) -> T {
        let a = sobolev_norm(&self.phi0, T::zero());
        let b = sobolev_norm(&self.phi1, -T::one());
        (a * a + b * b).sqrt()
    }

    pub fn add(&self, o: &Self) -> Self {
        AdjointDatum {
            phi0: self.phi0.add(&o.phi0),
            phi1: self.phi1.add(&o.phi1),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        AdjointDatum {
            phi0: self.phi0.sub(&o.phi0),
            phi1: self.phi1.sub(&o.phi1),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        AdjointDatum {
            phi0: self.phi0.scale(c),
            phi1: self.phi1.scale(c),
        }
    }

    fn axpy(&self, c: T, o: &Self) -> Self {
        AdjointDatum {
            phi0: self.phi0.zip_map(&o.phi0, |x, y| x + c * y),
            phi1: self.phi1.zip_map(&o.phi1, |x, y| x + c * y),
        }
    }

    /// `b(self, o) = int self.0 o.0 + int self.1 o.1`.
    fn dot(&self, o: &Self) -> T {
        self.phi0.inner(&o.phi0) + self.phi1.inner(&o.phi1)
    }

    fn bitwise_eq(&self, o: &Self) -> bool {
        self.phi0.values() == o.phi0.values() && self.phi1.values() == o.phi1.values()
    }
}

/// `b((f, g), (Phi0, Phi1)) = int f Phi0 + int g Phi1`.
pub fn duality_pairing<T: Real>(p: (&Field<T>, &Field<T>), q: &AdjointDatum<T>) -> Result<T> {
    p.0.check_grid(&q.phi0)?;
    p.1.check_grid(&q.phi1)?;
    Ok(p.0.inner(&q.phi0) + p.1.inner(&q.phi1))
}

/// Tolerances for the conjugate-gradient inversion of `S`.
#[derive(Clone, Copy, Debug)]
pub struct CgOptions<T> {
    /// Stop at `||r||_b <= tol ||rhs||_b`.
    pub tol: T,
    pub max_iter: usize,
}

/// Tolerances for the Picard iteration.
#[derive(Clone, Copy, Debug)]
pub struct PicardOptions<T> {
    /// Stop at `||Phi^{n+1} - Phi^n|| <= tol ||Phi^{n+1}||` in `L^2 x H^{-1}`.
    pub tol: T,
    pub max_iter: usize,
    /// Largest admissible `||(u0, u1)||_{H^1 x L^2}`.
    pub delta: T,
    pub cg: CgOptions<T>,
}

/// Outcome of a control solve.
#[derive(Clone, Debug)]
pub struct ControlSolution<T: Real> {
    pub adjoint: AdjointDatum<T>,
    /// `||(u(T), u_t(T))||_{H^1 x L^2}` of the forward run with `g = a^2 Phi`.
    pub residual_norm: T,
    /// Relative CG residual of the last inversion of `S`.
    pub cg_residual: T,
    /// CG iterations summed over all inversions.
    pub cg_iterations: usize,
    pub picard_iterations: usize,
    /// `||Phi^{n+1} - Phi^n||` per Picard iteration.
    pub picard_differences: Vec<T>,
    /// `J(Phi) = 1/2 b(S Phi, Phi) - b(rhs, Phi)` after each CG step of the
    /// last inversion.
    pub cg_objective: Vec<T>,
}

/// The control problem on `[0, T]` with control profile `a`.
#[derive(Clone, Debug)]
pub struct HumProblem<T: Real> {
    grid: Arc<TorusGrid<T>>,
    profile: DampingProfile<T>,
    horizon: T,
    dt: T,
    steps: usize,
    equation: Equation,
    adjoint_flow: Stepper<T>,
    state_flow: Stepper<T>,
}

impl<T: Real> HumProblem<T> {
    /// `equation` selects the controlled dynamics; the adjoint flow is the
    /// linearization with the same mass term.
    pub fn new(profile: DampingProfile<T>, horizon: T, dt: T, equation: Equation) -> Result<Self> {
        if !(horizon > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "control horizon {horizon} must be positive"
            )));
        }
        let steps = step_count(horizon, dt)?;
        let grid = profile.a().grid().clone();
        let linear = Equation {
            mass: equation.mass,
            nonlinear: false,
        };
        Ok(HumProblem {
            adjoint_flow: Stepper::new(&grid, linear, None)?,
            state_flow: Stepper::new(&grid, equation, None)?,
            grid,
            profile,
            horizon,
            dt,
            steps,
            equation,
        })
    }

    pub fn grid(&self) -> &Arc<TorusGrid<T>> {
        &self.grid
    }

    pub fn profile(&self) -> &DampingProfile<T> {
        &self.profile
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn equation(&self) -> Equation {
        self.equation
    }

    fn time(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.dt
    }

    /// `Phi(t)` for the free adjoint flow.
    pub fn adjoint_at(&self, q: &AdjointDatum<T>, t: T) -> Field<T> {
        self.adjoint_flow.propagate(&q.phi0, &q.phi1, t).0
    }

    /// The control `g(t) = a^2 Phi(t)`.
    pub fn control_at(&self, q: &AdjointDatum<T>, t: T) -> Field<T> {
        self.adjoint_at(q, t)
            .zip_map(self.profile.a_squared(), |p, a2| p * a2)
    }

    /// Backward march from rest at `T` under `g = a^2 Phi`. Returns
    /// `(L Phi, K Phi)` with `L` the map of the controlled equation; `K` is
    /// identically zero for linear dynamics.
    fn backward(&self, q: &AdjointDatum<T>) -> Result<(AdjointDatum<T>, AdjointDatum<T>)> {
        let a_sq = self.profile.a_squared();
        let (mut phi, mut phi_t) = self.adjoint_flow.propagate(&q.phi0, &q.phi1, self.horizon);
        let mut w = State::zero(&self.grid, T::zero());
        let mut k = State::zero(&self.grid, T::zero());
        let mut g_start = phi.zip_map(a_sq, |p, a2| p * a2);
        let mut n_start: Option<Field<T>> = None;
        for _ in 0..self.steps {
            let (p, pt) = self.adjoint_flow.propagate(&phi, &phi_t, -self.dt);
            phi = p;
            phi_t = pt;
            let g_end = phi.zip_map(a_sq, |p, a2| p * a2);
            let n0 = n_start
                .take()
                .or_else(|| self.state_flow.nonlinear_term(&w.u));
            let (next, n1) =
                self.state_flow
                    .step_cached(&w, self.dt, Some(&g_start), Some(&g_end), n0.clone());
            if let (Some(n0), Some(n1)) = (&n0, &n1) {
                let m0 = n0.scale(-T::one());
                let m1 = n1.scale(-T::one());
                k = self.adjoint_flow.step(&k, self.dt, Some(&m0), Some(&m1));
            }
            if !(next.u.max_abs().is_finite() && next.v.max_abs().is_finite()) {
                return Err(Error::Divergence {
                    t: (self.horizon - next.t).as_f64(),
                    norm: f64::INFINITY,
                    limit: f64::INFINITY,
                });
            }
            w = next;
            g_start = g_end;
            n_start = n1;
        }
        Ok((
            AdjointDatum {
                phi0: w.v,
                phi1: w.u,
            },
            AdjointDatum {
                phi0: k.v,
                phi1: k.u,
            },
        ))
    }

    /// `S Phi = (-v_t(0), v(0))`.
    pub fn gramian_apply(&self, q: &AdjointDatum<T>) -> Result<(Field<T>, Field<T>)> {
        let s = self.gramian(q)?;
        Ok((s.phi0, s.phi1))
    }

    fn gramian(&self, q: &AdjointDatum<T>) -> Result<AdjointDatum<T>> {
        if **q.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        if q.is_zero() || self.profile.is_zero() {
            return Ok(AdjointDatum::zeros(&self.grid));
        }
        let linear = HumProblem {
            state_flow: self.adjoint_flow.clone(),
            ..self.clone()
        };
        Ok(linear.backward(q)?.0)
    }

    /// `K Phi` for the controlled equation.
    pub fn k_apply(&self, q: &AdjointDatum<T>) -> Result<(Field<T>, Field<T>)> {
        let k = self.backward(q)?.1;
        Ok((k.phi0, k.phi1))
    }

    /// `L Phi = (-u_t(0), u(0))` for the controlled equation.
    pub fn l_apply(&self, q: &AdjointDatum<T>) -> Result<(Field<T>, Field<T>)> {
        let l = self.backward(q)?.0;
        Ok((l.phi0, l.phi1))
    }

    /// Conjugate gradients on `S Phi = rhs` in the pairing `b`.
    fn cg(
        &self,
        rhs: &AdjointDatum<T>,
        start: Option<&AdjointDatum<T>>,
        opts: CgOptions<T>,
    ) -> Result<(AdjointDatum<T>, usize, T, Vec<T>)> {
        let rhs_norm = rhs.dot(rhs).sqrt();
        if rhs_norm == T::zero() {
            return Ok((AdjointDatum::zeros(&self.grid), 0, T::zero(), Vec::new()));
        }
        let mut x = match start {
            Some(s) => s.clone(),
            None => AdjointDatum::zeros(&self.grid),
        };
        let mut r = if x.is_zero() {
            rhs.clone()
        } else {
            rhs.sub(&self.gramian(&x)?)
        };
        let mut rr = r.dot(&r);
        let mut rel = rr.sqrt() / rhs_norm;
        let mut best = (x.clone(), rel);
        let mut reference = rel;
        let mut since = 0;
        let mut objective = Vec::new();
        let mut p = r.clone();
        let mut it = 0;
        while rel > opts.tol {
            if it >= opts.max_iter || since >= STAGNATION_WINDOW {
                return Err(Error::NonConvergence {
                    iterations: it,
                    relative_residual: best.1.as_f64(),
                    best: Some(Box::new((
                        best.0.phi0.values().iter().map(|v| v.as_f64()).collect(),
                        best.0.phi1.values().iter().map(|v| v.as_f64()).collect(),
                    ))),
                });
            }
            let sp = self.gramian(&p)?;
            let psp = p.dot(&sp);
            if !(psp > T::zero()) {
                // S is only semidefinite on the grid; no further descent possible
                since = STAGNATION_WINDOW;
                continue;
            }
            let alpha = rr / psp;
            x = x.axpy(alpha, &p);
            r = r.axpy(-alpha, &sp);
            let rr_new = r.dot(&r);
            rel = rr_new.sqrt() / rhs_norm;
            // J = 1/2 b(Sx, x) - b(rhs, x) with Sx = rhs - r
            objective.push(-(rhs.dot(&x) + r.dot(&x)) / T::lit(2.0));
            it += 1;
            if rel < best.1 {
                best = (x.clone(), rel);
            }
            if rel <= reference / T::lit(2.0) {
                reference = rel;
                since = 0;
            } else {
                since += 1;
            }
            p = r.axpy(rr_new / rr, &p);
            rr = rr_new;
        }
        Ok((x, it, rel, objective))
    }

    fn target_rhs(&self, target: &State<T>) -> Result<AdjointDatum<T>> {
        if **target.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(AdjointDatum {
            phi0: target.v.scale(-T::one()),
            phi1: target.u.clone(),
        })
    }

    /// Forward run from `initial` with `g = a^2 Phi`; returns the final state.
    pub fn forward_verify(&self, initial: &State<T>, q: &AdjointDatum<T>) -> Result<State<T>> {
        let g = |t: T| self.control_at(q, t);
        let start = State {
            t: T::zero(),
            ..initial.clone()
        };
        let traj = self.state_flow.simulate(
            &start,
            self.horizon,
            self.dt,
            self.steps.max(1),
            &Forcing::Dynamic(&g),
        )?;
        Ok(traj.last().clone())
    }

    /// Linear HUM: control steering `target = (u0, u1)` to rest at `T`
    /// under `u_tt - Lap u + u = a^2 Phi`.
    pub fn solve_linear_control(
        &self,
        target: &State<T>,
        opts: CgOptions<T>,
    ) -> Result<ControlSolution<T>> {
        let rhs = self.target_rhs(target)?;
        let (phi, iters, rel, objective) = self.cg(&rhs, None, opts)?;
        let linear = HumProblem {
            state_flow: self.adjoint_flow.clone(),
            ..self.clone()
        };
        let end = linear.forward_verify(target, &phi)?;
        Ok(ControlSolution {
            adjoint: phi,
            residual_norm: end.energy_norm(),
            cg_residual: rel,
            cg_iterations: iters,
            picard_iterations: 0,
            picard_differences: Vec::new(),
            cg_objective: objective,
        })
    }

    /// Picard iteration `Phi^{n+1} = S^{-1}((-u1, u0) - K Phi^n)` from
    /// `Phi^0 = 0`, followed by forward verification with the controlled
    /// equation.
    pub fn picard_nonlinear_control(
        &self,
        data: &State<T>,
        opts: PicardOptions<T>,
    ) -> Result<ControlSolution<T>> {
        let rhs = self.target_rhs(data)?;
        let size = data.energy_norm();
        if size > opts.delta {
            return Err(Error::Precondition(format!(
                "data norm {size} exceeds the smallness threshold {}",
                opts.delta
            )));
        }
        let mut phi = AdjointDatum::zeros(&self.grid);
        let mut last_input: Option<AdjointDatum<T>> = None;
        let mut differences: Vec<T> = Vec::new();
        let mut cg_total = 0;
        let mut cg_rel = T::zero();
        let mut objective = Vec::new();
        let mut iterations = 0;
        loop {
            let k = if phi.is_zero() {
                AdjointDatum::zeros(&self.grid)
            } else {
                self.backward(&phi)?.1
            };
            let input = rhs.sub(&k);
            if last_input.as_ref().is_some_and(|l| l.bitwise_eq(&input)) {
                break;
            }
            if iterations >= opts.max_iter {
                return Err(Error::PicardNonConvergence {
                    iterations,
                    history: differences.iter().map(|d| d.as_f64()).collect(),
                });
            }
            let start = (!phi.is_zero()).then_some(&phi);
            let (next, it, rel, obj) = self.cg(&input, start, opts.cg)?;
            cg_total += it;
            cg_rel = rel;
            objective = obj;
            iterations += 1;
            let diff = next.sub(&phi).norm();
            let norm_next = next.norm();
            let norm_prev = phi.norm();
            differences.push(diff);
            if iterations > 1 && norm_next > T::lit(2.0) * norm_prev {
                return Err(Error::SmallnessViolated {
                    previous: norm_prev.as_f64(),
                    current: norm_next.as_f64(),
                });
            }
            phi = next;
            last_input = Some(input);
            if iterations > 1 && diff <= opts.tol * norm_next {
                break;
            }
        }
        let end = self.forward_verify(data, &phi)?;
        Ok(ControlSolution {
            adjoint: phi,
            residual_norm: end.energy_norm(),
            cg_residual: cg_rel,
            cg_iterations: cg_total,
            picard_iterations: iterations,
            picard_differences: differences,
            cg_objective: objective,
        })
    }

    /// `(t, ||g(t)||_{L^2})` every `stride` steps and at `T`.
    pub fn control_norms(&self, q: &AdjointDatum<T>, stride: usize) -> Vec<(T, T)> {
        let stride = stride.max(1);
        (0..=self.steps)
            .filter(|j| j % stride == 0 || *j == self.steps)
            .map(|j| {
                let t = self.time(j);
                (t, sobolev_norm(&self.control_at(q, t), T::zero()))
            })
            .collect()
    }
}
