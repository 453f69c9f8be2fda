//! Subcommand execution: builds the numerical objects from a config, runs the
//! experiment and writes its artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use kglab::concentration::{
    linearizability_gap, make_concentrating_data, track_concentration, ConcentrationSpec,
};
use kglab::dynamics::{energy_of, DampingProfile, Equation, Forcing, State, Stepper};
use kglab::experiments::{
    constant_family_ratios, fit_decay_rate, observability_ratio, run_counterexample,
    scale_to_energy, stabilize_then_control,
};
use kglab::geometry::{gcc_check, ControlRegion, PeriodicBox};
use kglab::hum::{CgOptions, ControlSolution, HumProblem, PicardOptions};
use kglab::spectral::snapshot::{read_field_on, write_field};
use kglab::spectral::{Field, TorusGrid};

use crate::config::{ExperimentConfig, InitialData};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Stabilize,
    ControlLinear,
    ControlNonlinear,
    Gcc,
    Counterexample,
    Concentrate,
    Observability,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Stabilize => "stabilize",
            Experiment::ControlLinear => "control-linear",
            Experiment::ControlNonlinear => "control-nonlinear",
            Experiment::Gcc => "gcc",
            Experiment::Counterexample => "counterexample",
            Experiment::Concentrate => "concentrate",
            Experiment::Observability => "observability",
        }
    }
}

/// What a run produced.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<String>,
    pub summary: String,
    pub warnings: Vec<String>,
    /// A post-run check that failed; the artifacts are still written.
    pub failure: Option<String>,
}

/// Artifact writer rooted at the output directory.
struct Sink {
    dir: PathBuf,
    files: Vec<String>,
}

impl Sink {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(CliError::io(&path))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn finish(&self, name: &str, mut w: BufWriter<File>) -> Result<(), CliError> {
        w.flush().map_err(CliError::io(self.dir.join(name)))
    }

    fn with<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> kglab::Result<()>,
    {
        let mut w = self.create(name)?;
        f(&mut w)?;
        self.finish(name, w)
    }

    fn csv(&mut self, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
        self.with(name, |w| {
            writeln!(w, "{header}")?;
            for row in rows {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
            Ok(())
        })
    }

    fn field(&mut self, name: &str, f: &Field<f64>) -> Result<(), CliError> {
        self.with(name, |w| write_field(f, w))
    }
}

/// Numerical objects shared by the subcommands.
struct Setup {
    grid: Arc<TorusGrid<f64>>,
    equation: Equation,
    region: Option<ControlRegion<f64>>,
    damping: Option<DampingProfile<f64>>,
    initial: State<f64>,
    dt: f64,
}

fn setup(cfg: &ExperimentConfig, base: &Path) -> Result<Setup, CliError> {
    let lengths = cfg.lengths();
    let grid = TorusGrid::new(cfg.grid.dim, cfg.grid.n, &lengths)?;
    let equation = Equation {
        mass: cfg.equation.mass,
        nonlinear: cfg.equation.nonlinear,
    };
    let (region, damping) = match &cfg.damping {
        None => (None, None),
        Some(d) if d.boxes.is_empty() => (
            Some(ControlRegion::full(&lengths)),
            Some(DampingProfile::constant(&grid, d.amplitude)?),
        ),
        Some(d) => {
            let boxes = d
                .boxes
                .iter()
                .map(|b| PeriodicBox {
                    center: b.center.clone(),
                    half_widths: b.half_widths.clone(),
                })
                .collect();
            let region = ControlRegion::new(&lengths, boxes)?;
            let profile = if d.amplitude > 0.0 {
                DampingProfile::smoothed(&grid, &region, d.amplitude, d.transition_cells)?
            } else {
                DampingProfile::constant(&grid, 0.0)?
            };
            (Some(region), Some(profile))
        }
    };
    let initial = initial_state(cfg, &grid, equation, base)?;
    Ok(Setup {
        grid,
        equation,
        region,
        damping,
        initial,
        dt: cfg.dt(),
    })
}

fn initial_state(
    cfg: &ExperimentConfig,
    grid: &Arc<TorusGrid<f64>>,
    equation: Equation,
    base: &Path,
) -> Result<State<f64>, CliError> {
    let lengths = grid.lengths().to_vec();
    match &cfg.initial {
        InitialData::Zero {} => Ok(State::zero(grid, 0.0)),
        InitialData::Modes { modes, energy } => {
            let phase = |x: &[f64], k: &[i64], p: f64| {
                k.iter()
                    .zip(&lengths)
                    .zip(x)
                    .fold(p, |acc, ((&k, &l), &x)| {
                        acc + 2.0 * std::f64::consts::PI * k as f64 / l * x
                    })
            };
            let u = Field::from_fn(grid, |x| {
                modes
                    .iter()
                    .map(|m| m.u * phase(x, &m.k, m.phase).cos())
                    .sum()
            })?;
            let v = Field::from_fn(grid, |x| {
                modes
                    .iter()
                    .map(|m| m.v * phase(x, &m.k, m.phase).cos())
                    .sum()
            })?;
            match energy {
                Some(e) => Ok(scale_to_energy(&u, &v, *e, equation)?),
                None => Ok(State::new(u, v, 0.0)?),
            }
        }
        InitialData::Bump {
            radius,
            scale,
            center,
            amplitude,
            velocity_amplitude,
        } => {
            let spec = ConcentrationSpec {
                radius: *radius,
                scale: *scale,
                center: center.clone(),
                amplitude: *amplitude,
                velocity_amplitude: *velocity_amplitude,
            };
            Ok(make_concentrating_data(&spec, grid)?)
        }
        InitialData::Snapshot { u, v } => {
            let read = |p: &Path| -> Result<Field<f64>, CliError> {
                let path = base.join(p);
                let f = File::open(&path).map_err(CliError::io(&path))?;
                Ok(read_field_on(std::io::BufReader::new(f), grid)?)
            };
            let u = read(u)?;
            let v = match v {
                Some(p) => read(p)?,
                None => Field::zeros(grid),
            };
            Ok(State::new(u, v, 0.0)?)
        }
    }
}

fn require_damping(s: &Setup, what: Experiment) -> Result<&DampingProfile<f64>, CliError> {
    s.damping
        .as_ref()
        .ok_or_else(|| CliError::Config(vec![format!("damping: required by `{}`", what.name())]))
}

fn cg_options(cfg: &ExperimentConfig) -> CgOptions<f64> {
    CgOptions {
        tol: cfg.solver.cg_tol,
        max_iter: cfg.solver.cg_max_iter,
    }
}

fn picard_options(cfg: &ExperimentConfig) -> PicardOptions<f64> {
    PicardOptions {
        tol: cfg.solver.picard_tol,
        max_iter: cfg.solver.picard_max_iter,
        delta: cfg.solver.delta,
        cg: cg_options(cfg),
    }
}

/// Runs `what` and writes its artifacts into `out`. Relative snapshot paths
/// in the config are resolved against `base`.
pub fn run(
    what: Experiment,
    cfg: &ExperimentConfig,
    base: &Path,
    out: &Path,
) -> Result<Outcome, CliError> {
    let mut sink = Sink {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let mut warnings = Vec::new();
    let mut failure = None;
    let s = setup(cfg, base)?;
    let horizon = cfg.time.horizon;
    let stride = cfg.time.stride;
    let summary = match what {
        Experiment::Simulate => simulate(cfg, &s, &mut sink)?,
        Experiment::Concentrate => {
            let stepper = Stepper::new(&s.grid, s.equation, s.damping.clone())?;
            let traj = stepper.simulate(&s.initial, horizon, s.dt, stride, &Forcing::None)?;
            sink.with("trajectory.csv", |w| traj.write_csv(w))?;
            let mut report = track_concentration(&traj);
            if cfg.experiment.linearizability {
                report.linearizability_gap =
                    Some(linearizability_gap(&s.initial, horizon, s.dt, stride)?);
            }
            sink.with("concentration.csv", |w| report.write_csv(w))?;
            let mut line = format!(
                "concentrate: rho90 {:.6e} -> {:.6e}, {} event(s) at t = {:?}",
                report.rho90[0],
                report.rho90[report.rho90.len() - 1],
                report.events.len(),
                report.event_times()
            );
            if let Some(gap) = report.linearizability_gap {
                line.push_str(&format!(", linearizability gap {gap:.6e}"));
            }
            line
        }
        Experiment::Gcc => {
            let region = s.region.as_ref().ok_or_else(|| {
                CliError::Config(vec![
                    "damping: `gcc` needs damping.boxes to define the control region".into(),
                ])
            })?;
            let report = gcc_check(
                region,
                horizon,
                cfg.experiment.origins_per_axis,
                cfg.experiment.directions,
            )?;
            let dim = s.grid.dim();
            let mut header: Vec<String> = (0..dim).map(|i| format!("origin_{i}")).collect();
            header.extend((0..dim).map(|i| format!("direction_{i}")));
            header.push("hitting_time".into());
            let rows: Vec<Vec<f64>> = report
                .samples
                .iter()
                .map(|r| {
                    let mut row = r.ray.origin().to_vec();
                    row.extend_from_slice(r.ray.direction());
                    row.push(r.hitting_time.unwrap_or(f64::INFINITY));
                    row
                })
                .collect();
            sink.csv("gcc.csv", &header.join(","), &rows)?;
            let t_hum = cfg.experiment.control_horizon;
            match report.t0_estimate {
                Some(t0) if t0 < t_hum => {}
                Some(t0) => warnings.push(format!(
                    "T0 estimate {t0} is not below the control horizon {t_hum}; HUM is not expected to succeed"
                )),
                None => warnings.push(format!(
                    "some rays miss the control region within {horizon}; HUM is not expected to succeed"
                )),
            }
            format!("gcc: {report}")
        }
        Experiment::Counterexample => {
            let mut rows = Vec::new();
            let mut failed = Vec::new();
            for &eps in &cfg.experiment.epsilons {
                let r = run_counterexample(eps, horizon, s.dt)?;
                if !(r.amplitude_bound_holds() && r.damping_bound_holds() && r.energy_monotone) {
                    failed.push(eps);
                }
                rows.push(vec![
                    eps,
                    r.e0,
                    r.damping_integral,
                    r.ratio,
                    r.max_abs_u,
                    f64::from(u8::from(r.amplitude_bound_holds())),
                    f64::from(u8::from(r.damping_bound_holds())),
                    f64::from(u8::from(r.energy_monotone)),
                ]);
            }
            sink.csv(
                "counterexample.csv",
                "epsilon,E0,damping_integral,ratio,max_abs_u,amplitude_bound,damping_bound,energy_monotone",
                &rows,
            )?;
            if !failed.is_empty() {
                failure = Some(format!("counterexample bounds fail for epsilon {failed:?}"));
            }
            let ratios: Vec<String> = rows.iter().map(|r| format!("{:.6e}", r[3])).collect();
            format!(
                "counterexample: bounds hold; D/E0 = [{}]",
                ratios.join(", ")
            )
        }
        Experiment::Observability => {
            let off;
            let damping = match &s.damping {
                Some(d) => d,
                None => {
                    off = DampingProfile::constant(&s.grid, 0.0)?;
                    &off
                }
            };
            let family = constant_family_ratios(
                &s.grid,
                &cfg.experiment.amplitudes,
                horizon,
                s.dt,
                damping,
                s.equation,
            )?;
            let rows: Vec<Vec<f64>> = family.iter().map(|(a, r)| vec![*a, *r]).collect();
            sink.csv("observability.csv", "amplitude,ratio", &rows)?;
            let mut line = format!(
                "observability: constant family D/E0 = [{}]",
                family
                    .iter()
                    .map(|(_, r)| format!("{r:.6e}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            if !s.initial.is_zero() {
                let r =
                    observability_ratio(&s.initial, horizon, s.dt, s.damping.as_ref(), s.equation)?;
                line.push_str(&format!("; initial data D/E0 = {r:.6e}"));
            }
            line
        }
        Experiment::ControlLinear | Experiment::ControlNonlinear => {
            let profile = require_damping(&s, what)?;
            let problem = HumProblem::new(profile.clone(), horizon, s.dt, s.equation)?;
            let target_norm = s.initial.energy_norm();
            let sol = if what == Experiment::ControlLinear {
                problem.solve_linear_control(&s.initial, cg_options(cfg))?
            } else {
                problem.picard_nonlinear_control(&s.initial, picard_options(cfg))?
            };
            write_control(&mut sink, &problem, &sol, cfg.experiment.control_stride)?;
            failure = check_residual(&sol, target_norm, cfg.solver.verify_tol);
            format!(
                "{}: terminal residual {:.6e} (data norm {:.6e}), {} CG and {} Picard iteration(s)",
                what.name(),
                sol.residual_norm,
                target_norm,
                sol.cg_iterations,
                sol.picard_iterations
            )
        }
        Experiment::Stabilize => {
            let profile = require_damping(&s, what)?;
            let problem = HumProblem::new(
                profile.clone(),
                cfg.experiment.control_horizon,
                s.dt,
                s.equation,
            )?;
            let rep = stabilize_then_control(
                &s.initial,
                horizon,
                stride,
                profile,
                &problem,
                picard_options(cfg),
            )?;
            let rows: Vec<Vec<f64>> = rep
                .stabilization
                .iter()
                .map(|(t, e)| vec![*t, *e])
                .collect();
            sink.csv("stabilization.csv", "t,E", &rows)?;
            write_control(
                &mut sink,
                &problem,
                &rep.control,
                cfg.experiment.control_stride,
            )?;
            failure = check_residual(&rep.control, rep.handoff_norm, cfg.solver.verify_tol);
            format!(
                "stabilize: E {:.6e} -> {:.6e} at hand-off t = {}, terminal residual {:.6e}",
                rep.initial_energy, rep.handoff_energy, rep.handoff_time, rep.control.residual_norm
            )
        }
    };
    Ok(Outcome {
        files: sink.files,
        summary,
        warnings,
        failure,
    })
}

fn simulate(cfg: &ExperimentConfig, s: &Setup, sink: &mut Sink) -> Result<String, CliError> {
    let stepper = Stepper::new(&s.grid, s.equation, s.damping.clone())?;
    let traj = stepper.simulate(
        &s.initial,
        cfg.time.horizon,
        s.dt,
        cfg.time.stride,
        &Forcing::None,
    )?;
    sink.with("trajectory.csv", |w| traj.write_csv(w))?;
    sink.field("final_u.kgf", &traj.last().u)?;
    sink.field("final_v.kgf", &traj.last().v)?;
    let e0 = energy_of(traj.first(), s.equation);
    let e1 = energy_of(traj.last(), s.equation);
    let mut line = format!(
        "simulate: {} row(s) to t = {}; E {:.6e} -> {:.6e}; decay identity residual {:.3e}",
        traj.len(),
        traj.last().t,
        e0,
        e1,
        traj.decay_identity_residual()?
    );
    if s.damping.is_some() && e0 > 0.0 {
        let series: Vec<(f64, f64)> = traj.times().into_iter().zip(traj.energies()).collect();
        match fit_decay_rate(&series, cfg.experiment.fit_skip) {
            Ok(fit) => line.push_str(&format!(
                "; fitted gamma {:.6e} (r^2 {:.6})",
                fit.gamma, fit.r_squared
            )),
            Err(kglab::Error::Window(why)) => line.push_str(&format!("; no decay fit ({why})")),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(line)
}

fn write_control(
    sink: &mut Sink,
    problem: &HumProblem<f64>,
    sol: &ControlSolution<f64>,
    stride: usize,
) -> Result<(), CliError> {
    let norms: Vec<Vec<f64>> = problem
        .control_norms(&sol.adjoint, stride)
        .into_iter()
        .map(|(t, g)| vec![t, g])
        .collect();
    sink.csv("control.csv", "t,control_L2", &norms)?;
    let obj: Vec<Vec<f64>> = sol
        .cg_objective
        .iter()
        .enumerate()
        .map(|(i, j)| vec![(i + 1) as f64, *j])
        .collect();
    sink.csv("cg.csv", "iteration,objective", &obj)?;
    if !sol.picard_differences.is_empty() {
        let diffs: Vec<Vec<f64>> = sol
            .picard_differences
            .iter()
            .enumerate()
            .map(|(i, d)| vec![(i + 1) as f64, *d])
            .collect();
        sink.csv("picard.csv", "iteration,difference", &diffs)?;
    }
    sink.field("adjoint_phi0.kgf", &sol.adjoint.phi0)?;
    sink.field("adjoint_phi1.kgf", &sol.adjoint.phi1)
}

fn check_residual(sol: &ControlSolution<f64>, norm: f64, tol: f64) -> Option<String> {
    (sol.residual_norm > tol * norm).then(|| {
        format!(
            "terminal residual {:.6e} exceeds {tol:e} x data norm {norm:.6e}",
            sol.residual_norm
        )
    })
}
