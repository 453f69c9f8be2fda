//! Acceptance suite. Each test prints one `criterion N ... PASS|FAIL` line
//! and then asserts it. Run with `cargo test -p kglab --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use kglab::concentration::{make_concentrating_data, ConcentrationSpec};
use kglab::dynamics::{energy, DampingProfile, Equation, Forcing, State, Stepper};
use kglab::experiments::{fit_decay_rate, run_counterexample, scale_to_energy};
use kglab::geometry::{gcc_check, ControlRegion, PeriodicBox};
use kglab::hum::{AdjointDatum, CgOptions, HumProblem, PicardOptions};
use kglab::spectral::{gradient_norm, sobolev_norm, Field, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Decay rate measured for criterion 3, pinned as a regression value.
const GAMMA_REGRESSION: f64 = 0.293;
const GAMMA_REL_TOL: f64 = 0.02;

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let within = elapsed <= budget;
    let verdict = if pass && within { "PASS" } else { "FAIL" };
    println!(
        "criterion {id} [{name}]: {verdict} ({:.2}s of {:.0}s) {detail}",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(within, "criterion {id} exceeded its runtime budget");
}

fn two_mode_data(g: &Arc<TorusGrid<f64>>, amp: f64) -> State<f64> {
    let l = g.lengths()[0];
    let u = Field::from_fn(g, |x| {
        amp * ((2.0 * PI * x[0] / l).sin() + 0.5 * (4.0 * PI * x[0] / l).cos())
    })
    .unwrap();
    State::new(u, Field::zeros(g), 0.0).unwrap()
}

fn gcc_region() -> ControlRegion<f64> {
    ControlRegion::new(
        &[1.0],
        vec![
            PeriodicBox {
                center: vec![0.5],
                half_widths: vec![0.1],
            },
            PeriodicBox {
                center: vec![1.0],
                half_widths: vec![0.1],
            },
        ],
    )
    .unwrap()
}

fn max_energy_drift(dt: f64) -> f64 {
    let g = TorusGrid::new(1, 64, &[1.0]).unwrap();
    let s = two_mode_data(&g, 1.0);
    let st = Stepper::new(&g, Equation::KLEIN_GORDON, None).unwrap();
    let tr = st.simulate(&s, 10.0, dt, 10, &Forcing::None).unwrap();
    let e = tr.energies();
    e.iter()
        .map(|x| (x - e[0]).abs() / e[0])
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_energy_conservation() {
    let clock = Instant::now();
    let coarse = max_energy_drift(1e-3);
    let fine = max_energy_drift(5e-4);
    let ratio = coarse / fine;
    let pass = coarse < 1e-6 && ratio >= 3.0;
    report(
        1,
        "energy conservation",
        pass,
        clock.elapsed(),
        Duration::from_secs(10),
        &format!("drift {coarse:.3e} at dt=1e-3, halving ratio {ratio:.2}"),
    );
}

fn decay_residual(dt: f64) -> f64 {
    let g = TorusGrid::new(1, 64, &[1.0]).unwrap();
    let base = two_mode_data(&g, 1.0);
    let s = scale_to_energy(&base.u, &base.v, 1.0, Equation::KLEIN_GORDON).unwrap();
    let a = DampingProfile::smoothed(&g, &gcc_region(), 1.0, 4.0).unwrap();
    let st = Stepper::new(&g, Equation::KLEIN_GORDON, Some(a)).unwrap();
    let tr = st.simulate(&s, 5.0, dt, 10, &Forcing::None).unwrap();
    tr.decay_identity_residual().unwrap()
}

#[test]
fn criterion_2_decay_identity() {
    let clock = Instant::now();
    let coarse = decay_residual(1e-3);
    let fine = decay_residual(5e-4);
    let ratio = coarse / fine;
    let pass = coarse < 1e-6 && (3.0..=5.0).contains(&ratio);
    report(
        2,
        "decay identity",
        pass,
        clock.elapsed(),
        Duration::from_secs(30),
        &format!("residual {coarse:.3e} at dt=1e-3, halving ratio {ratio:.2}"),
    );
}

#[test]
fn criterion_3_exponential_stabilization() {
    let clock = Instant::now();
    let horizon = 20.0;
    let region = gcc_region();
    let gcc = gcc_check(&region, horizon, 500, 1).unwrap();
    let t0 = gcc.t0_estimate.unwrap_or(f64::INFINITY);

    let g = TorusGrid::new(1, 64, &[1.0]).unwrap();
    let base = two_mode_data(&g, 1.0);
    let s = scale_to_energy(&base.u, &base.v, 1.0, Equation::KLEIN_GORDON).unwrap();
    let a = DampingProfile::smoothed(&g, &region, 2.0, 4.0).unwrap();
    let st = Stepper::new(&g, Equation::KLEIN_GORDON, Some(a)).unwrap();
    let tr = st.simulate(&s, horizon, 1e-3, 100, &Forcing::None).unwrap();
    let series: Vec<(f64, f64)> = tr.times().into_iter().zip(tr.energies()).collect();
    let fit = fit_decay_rate(&series, 0.1).unwrap();
    let regression = ((fit.gamma - GAMMA_REGRESSION) / GAMMA_REGRESSION).abs() <= GAMMA_REL_TOL;
    let pass = t0 < horizon && fit.gamma > 0.0 && fit.r_squared > 0.99 && regression;
    report(
        3,
        "exponential stabilization",
        pass,
        clock.elapsed(),
        Duration::from_secs(60),
        &format!(
            "T0 {t0:.3} < T {horizon}, gamma {:.6} (pinned {GAMMA_REGRESSION}), r^2 {:.5}, C {:.4}",
            fit.gamma, fit.r_squared, fit.c
        ),
    );
}

#[test]
fn criterion_4_counterexample() {
    let clock = Instant::now();
    let horizon = 10.0;
    let eps = [0.1, 0.05, 0.025];
    let runs: Vec<_> = eps
        .iter()
        .map(|&e| run_counterexample(e, horizon, 1e-3).unwrap())
        .collect();
    let bounds = runs
        .iter()
        .all(|r| r.amplitude_bound_holds() && r.damping_bound_holds() && r.energy_monotone);
    let drops: Vec<f64> = runs.windows(2).map(|w| w[0].ratio / w[1].ratio).collect();
    let pass = bounds && drops.iter().all(|&d| d >= 8.0);
    report(
        4,
        "counterexample",
        pass,
        clock.elapsed(),
        Duration::from_secs(5),
        &format!(
            "ratios {:?}, per-halving drops {:?}",
            runs.iter()
                .map(|r| format!("{:.3e}", r.ratio))
                .collect::<Vec<_>>(),
            drops.iter().map(|d| format!("{d:.2}")).collect::<Vec<_>>()
        ),
    );
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Random datum with modes `|k| <= kmax` on the circle of length `2 pi`,
/// as per-mode `(cos, sin)` coefficients of `Phi0` and `Phi1`.
struct BandLimited {
    c0: Vec<(f64, f64)>,
    c1: Vec<(f64, f64)>,
}

impl BandLimited {
    fn random(rng: &mut ChaCha8Rng, kmax: usize) -> Self {
        let mut draw = |k: usize| {
            let c = rng.gen_range(-1.0..1.0);
            let s = if k == 0 {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            };
            (c, s)
        };
        let c0 = (0..=kmax).map(&mut draw).collect();
        let c1 = (0..=kmax).map(&mut draw).collect();
        BandLimited { c0, c1 }
    }

    /// Closed-form `Phi(t, x)` of `Phi_tt - Phi_xx + Phi = 0`.
    fn at(&self, t: f64, x: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.c0.len() {
            let w = (1.0 + (k * k) as f64).sqrt();
            let (cw, sw) = ((w * t).cos(), (w * t).sin() / w);
            let c = self.c0[k].0 * cw + self.c1[k].0 * sw;
            let s = self.c0[k].1 * cw + self.c1[k].1 * sw;
            sum += c * (k as f64 * x).cos() + s * (k as f64 * x).sin();
        }
        sum
    }

    fn datum(&self, g: &Arc<TorusGrid<f64>>) -> AdjointDatum<f64> {
        let eval = |c: &[(f64, f64)], x: f64| {
            c.iter()
                .enumerate()
                .map(|(k, (a, b))| a * (k as f64 * x).cos() + b * (k as f64 * x).sin())
                .sum::<f64>()
        };
        AdjointDatum::new(
            Field::from_fn(g, |x| eval(&self.c0, x[0])).unwrap(),
            Field::from_fn(g, |x| eval(&self.c1, x[0])).unwrap(),
        )
        .unwrap()
    }

    /// `int_0^T int a^2 Phi^2` by composite Gauss-Legendre in time and grid
    /// quadrature in space.
    fn observed_energy(&self, a_sq: &Field<f64>, horizon: f64) -> f64 {
        let g = a_sq.grid();
        let nodes = gauss_legendre(10);
        let panels = 80;
        let h = horizon / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            for &(xi, wi) in &nodes {
                let t = h * (p as f64 + 0.5 * (xi + 1.0));
                let spatial: f64 = (0..g.len())
                    .map(|i| {
                        let phi = self.at(t, g.point(i)[0]);
                        a_sq.values()[i] * phi * phi
                    })
                    .sum::<f64>()
                    * g.cell_volume();
                total += 0.5 * h * wi * spatial;
            }
        }
        total
    }
}

fn pairing(p: &(Field<f64>, Field<f64>), q: &AdjointDatum<f64>) -> f64 {
    kglab::hum::duality_pairing((&p.0, &p.1), q).unwrap()
}

#[test]
fn criterion_5_hum_identity() {
    let clock = Instant::now();
    let l = 2.0 * PI;
    let horizon = 4.0;
    let g = TorusGrid::new(1, 32, &[l]).unwrap();
    let region = ControlRegion::new(
        &[l],
        vec![PeriodicBox {
            center: vec![PI],
            half_widths: vec![1.0],
        }],
    )
    .unwrap();
    let a = DampingProfile::smoothed(&g, &region, 1.0, 4.0).unwrap();
    let a_sq = a.a_squared().clone();
    let problem = HumProblem::new(a, horizon, 1e-3, Equation::LINEAR_KLEIN_GORDON).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let data: Vec<BandLimited> = (0..20).map(|_| BandLimited::random(&mut rng, 4)).collect();
    let mut worst_identity: f64 = 0.0;
    let mut images = Vec::new();
    for d in &data {
        let q = d.datum(&g);
        let s = problem.gramian_apply(&q).unwrap();
        let lhs = pairing(&s, &q);
        let oracle = d.observed_energy(&a_sq, horizon);
        worst_identity = worst_identity.max((lhs - oracle).abs() / oracle);
        images.push((q, s));
    }
    let mut worst_symmetry: f64 = 0.0;
    for w in images.windows(2) {
        let (q, sq) = &w[0];
        let (p, sp) = &w[1];
        let scale = (pairing(sq, q) * pairing(sp, p)).sqrt();
        worst_symmetry = worst_symmetry.max((pairing(sq, p) - pairing(sp, q)).abs() / scale);
    }
    let pass = worst_identity < 1e-6 && worst_symmetry < 1e-9;
    report(
        5,
        "HUM identity",
        pass,
        clock.elapsed(),
        Duration::from_secs(60),
        &format!("identity defect {worst_identity:.3e}, symmetry defect {worst_symmetry:.3e}"),
    );
}

#[test]
fn criterion_6_linear_exact_control() {
    let clock = Instant::now();
    let g = TorusGrid::new(1, 32, &[2.0 * PI]).unwrap();
    let a = DampingProfile::constant(&g, 1.0).unwrap();
    let problem = HumProblem::new(a, 4.0, 1e-3, Equation::LINEAR_KLEIN_GORDON).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let u = Field::from_fn(&g, |x| (k as f64 * x[0]).cos()).unwrap();
        let target = State::new(u, Field::zeros(&g), 0.0).unwrap();
        let sol = problem
            .solve_linear_control(
                &target,
                CgOptions {
                    tol: 1e-10,
                    max_iter: 200,
                },
            )
            .unwrap();
        worst = worst.max(sol.residual_norm / target.energy_norm());
    }
    report(
        6,
        "linear exact control",
        worst < 1e-6,
        clock.elapsed(),
        Duration::from_secs(120),
        &format!("worst relative terminal residual {worst:.3e} over k = 0..3"),
    );
}

#[test]
fn criterion_7_nonlinear_small_data_control() {
    let clock = Instant::now();
    let g = TorusGrid::new(1, 32, &[2.0 * PI]).unwrap();
    let opts = PicardOptions {
        tol: 1e-10,
        max_iter: 30,
        // the default 0.1 is below the norm 0.125 of this datum on a 2 pi circle
        delta: 0.2,
        cg: CgOptions {
            tol: 1e-12,
            max_iter: 200,
        },
    };
    let u = Field::from_fn(&g, |x| 0.05 * x[0].cos()).unwrap();
    let data = State::new(u, Field::zeros(&g), 0.0).unwrap();
    let a = DampingProfile::constant(&g, 1.0).unwrap();
    let nonlinear = HumProblem::new(a.clone(), 4.0, 1e-3, Equation::KLEIN_GORDON).unwrap();
    let sol = nonlinear.picard_nonlinear_control(&data, opts).unwrap();
    let diffs = &sol.picard_differences;
    let decreasing = diffs.len() >= 2 && diffs.windows(2).all(|w| w[1] < w[0]);
    let rel = sol.residual_norm / data.energy_norm();
    let linear = HumProblem::new(a, 4.0, 1e-3, Equation::LINEAR_KLEIN_GORDON).unwrap();
    let lin_sol = linear.picard_nonlinear_control(&data, opts).unwrap();
    let pass = decreasing && rel < 1e-5 && lin_sol.picard_iterations == 1;
    report(
        7,
        "nonlinear small-data control",
        pass,
        clock.elapsed(),
        Duration::from_secs(300),
        &format!(
            "differences {:?}, relative residual {rel:.3e}, linear iterations {}",
            diffs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>(),
            lin_sol.picard_iterations
        ),
    );
}

#[test]
fn criterion_8_gcc_checker() {
    let clock = Instant::now();
    let full = gcc_check(&ControlRegion::<f64>::full(&[1.0, 1.0]), 10.0, 16, 64).unwrap();
    let full_ok = full.t0_estimate == Some(0.0);
    let interval = ControlRegion::new(
        &[1.0],
        vec![PeriodicBox {
            center: vec![0.5],
            half_widths: vec![0.1],
        }],
    )
    .unwrap();
    let one_d = gcc_check(&interval, 10.0, 500, 1).unwrap();
    let t0 = one_d.t0_estimate.unwrap_or(f64::NAN);
    let one_d_ok = one_d.samples.len() == 1000 && (0.79..=0.80).contains(&t0);
    let strip = ControlRegion::<f64>::strip(&[1.0, 1.0], 0, 0.5, 0.1).unwrap();
    let two_d = gcc_check(&strip, 10.0, 16, 64).unwrap();
    let strip_ok = !two_d.controlled()
        && two_d
            .uncontrolled
            .iter()
            .any(|r| r.direction() == [0.0, 1.0]);
    report(
        8,
        "GCC checker",
        full_ok && one_d_ok && strip_ok,
        clock.elapsed(),
        Duration::from_secs(10),
        &format!(
            "full torus T0 {:?}, interval T0 {t0:.4} from {} rays, strip misses (0,1): {strip_ok}",
            full.t0_estimate,
            one_d.samples.len()
        ),
    );
}

#[test]
fn criterion_9_concentrating_norm_law() {
    let clock = Instant::now();
    let g = TorusGrid::new(3, 32, &[1.0, 1.0, 1.0]).unwrap();
    let measure = |h: f64| {
        let spec = ConcentrationSpec::new(1.5, h, vec![0.5, 0.5, 0.5]);
        let s = make_concentrating_data(&spec, &g).unwrap();
        let grad = gradient_norm(&s.u);
        let v = sobolev_norm(&s.v, 0.0);
        ((grad * grad + v * v).sqrt(), sobolev_norm(&s.u, 0.0))
    };
    let (e4, l4) = measure(0.25);
    let (e8, l8) = measure(0.125);
    let energy_spread = (e4 - e8).abs() / e4;
    let l2_tracking = ((l8 / l4) / 0.5 - 1.0).abs();
    let pass = energy_spread < 0.01 && l2_tracking < 0.02;
    report(
        9,
        "concentrating-data norm law",
        pass,
        clock.elapsed(),
        Duration::from_secs(30),
        &format!("energy-norm spread {energy_spread:.3e}, L2/h tracking error {l2_tracking:.3e}"),
    );
}

#[test]
fn criterion_10_excluded() {
    println!(
        "criterion 10 [non-constructive constants]: EXCLUDED (not reproducible at desk scale; covered by criteria 1-9)"
    );
}

#[test]
fn linear_energy_of_concentrated_data_is_finite() {
    // guards the acceptance helpers themselves
    let g = TorusGrid::new(1, 64, &[1.0]).unwrap();
    let s = two_mode_data(&g, 1.0);
    assert!(energy(&s).is_finite() && energy(&s) > 0.0);
}
