//! Experiment configuration: strict JSON parsing, defaults and validation.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use schemars::JsonSchema;
use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub equation: EquationConfig,
    /// Damping coefficient `a(x)`; absent means no damping. Its boxes also
    /// define the control region for `gcc` and the HUM subcommands.
    #[serde(default)]
    pub damping: Option<DampingConfig>,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub experiment: ExperimentParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Spatial dimension, 1 to 3.
    pub dim: usize,
    /// Points per axis, a power of two >= 8.
    pub n: usize,
    /// Period along each axis; defaults to 1.
    #[serde(default)]
    pub lengths: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    #[serde(default = "yes")]
    pub mass: bool,
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

impl Default for EquationConfig {
    fn default() -> Self {
        EquationConfig {
            mass: true,
            nonlinear: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DampingConfig {
    /// Height of `a` inside the region.
    pub amplitude: f64,
    /// Mollifier width in grid cells.
    #[serde(default = "four")]
    pub transition_cells: f64,
    /// Union of periodic boxes; empty means the whole torus (constant `a`).
    #[serde(default)]
    pub boxes: Vec<BoxConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Run length `T`.
    #[serde(default = "one")]
    pub horizon: f64,
    /// Time step; defaults to `min(cell / 2, 0.01)`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Steps between recorded snapshots.
    #[serde(default = "ten")]
    pub stride: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            horizon: 1.0,
            dt: None,
            stride: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "tight")]
    pub cg_tol: f64,
    #[serde(default = "cg_cap")]
    pub cg_max_iter: usize,
    #[serde(default = "tight")]
    pub picard_tol: f64,
    #[serde(default = "picard_cap")]
    pub picard_max_iter: usize,
    /// Smallness threshold on `||(u0, u1)||_{H^1 x L^2}`.
    #[serde(default = "tenth")]
    pub delta: f64,
    /// Largest accepted terminal residual relative to the data norm.
    #[serde(default = "loose")]
    pub verify_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cg_tol: tight(),
            cg_max_iter: cg_cap(),
            picard_tol: tight(),
            picard_max_iter: picard_cap(),
            delta: tenth(),
            verify_tol: loose(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero {},
    /// Sum of `u cos(k.x + phase)` and `v cos(k.x + phase)` over the modes,
    /// optionally rescaled to the given energy.
    Modes {
        modes: Vec<ModeConfig>,
        #[serde(default)]
        energy: Option<f64>,
    },
    /// Concentrating bump `h^{-1/2} A f((x - x0)/h)`, `h^{-3/2} B f((x - x0)/h)`.
    Bump {
        radius: f64,
        scale: f64,
        center: Vec<f64>,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        velocity_amplitude: f64,
    },
    /// Fields read from binary snapshots; a missing `v` is zero.
    Snapshot {
        u: PathBuf,
        #[serde(default)]
        v: Option<PathBuf>,
    },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Zero {}
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    /// Integer wave vector.
    pub k: Vec<i64>,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParams {
    /// Share of the run skipped before the decay fit.
    #[serde(default = "tenth")]
    pub fit_skip: f64,
    /// GCC origins per axis.
    #[serde(default = "gcc_origins")]
    pub origins_per_axis: usize,
    /// GCC directions.
    #[serde(default = "gcc_dirs")]
    pub directions: usize,
    /// Amplitudes for `counterexample`.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Constant-data amplitudes for `observability`.
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
    /// HUM horizon for `stabilize`, and the reference time for the `gcc` warning.
    #[serde(default = "four")]
    pub control_horizon: f64,
    /// Steps between rows of the control-norm CSV.
    #[serde(default = "ten")]
    pub control_stride: usize,
    /// Also compute the nonlinear-versus-linear gap in `concentrate`.
    #[serde(default)]
    pub linearizability: bool,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            fit_skip: tenth(),
            origins_per_axis: gcc_origins(),
            directions: gcc_dirs(),
            epsilons: default_epsilons(),
            amplitudes: default_amplitudes(),
            control_horizon: four(),
            control_stride: ten(),
            linearizability: false,
        }
    }
}

fn yes() -> bool {
    true
}
fn one() -> f64 {
    1.0
}
fn four() -> f64 {
    4.0
}
fn ten() -> usize {
    10
}
fn tenth() -> f64 {
    0.1
}
fn tight() -> f64 {
    1e-10
}
fn loose() -> f64 {
    1e-5
}
fn cg_cap() -> usize {
    500
}
fn picard_cap() -> usize {
    30
}
fn gcc_origins() -> usize {
    32
}
fn gcc_dirs() -> usize {
    64
}
fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn default_amplitudes() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.4]
}

/// Parses, fills defaults and validates. Unknown and duplicate keys are
/// errors; range violations are reported together.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.deserialize_any(UniqueKeys)
        .and_then(|_| de.end())
        .map_err(|e| CliError::Config(vec![e.to_string()]))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| CliError::Config(vec![e.to_string()]))?;
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(CliError::Config(violations));
    }
    cfg.fill_defaults();
    Ok(cfg)
}

impl ExperimentConfig {
    /// Canonical JSON; parsing it back yields the same config.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn lengths(&self) -> Vec<f64> {
        if self.grid.lengths.is_empty() {
            vec![1.0; self.grid.dim]
        } else {
            self.grid.lengths.clone()
        }
    }

    fn fill_defaults(&mut self) {
        self.grid.lengths = self.lengths();
        if self.time.dt.is_none() {
            let cell = self
                .grid
                .lengths
                .iter()
                .fold(f64::INFINITY, |m, l| m.min(l / self.grid.n as f64));
            self.time.dt = Some((cell / 2.0).min(1e-2));
        }
    }

    pub fn dt(&self) -> f64 {
        self.time.dt.expect("defaults filled")
    }

    /// Every range violation, as `path: message`.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            v.push(format!("grid.dim: {} is not in 1..=3", g.dim));
        }
        if g.n < 8 || !g.n.is_power_of_two() {
            v.push(format!("grid.n: {} is not a power of two >= 8", g.n));
        }
        if !g.lengths.is_empty() && g.lengths.len() != g.dim {
            v.push(format!(
                "grid.lengths: {} entries for dimension {}",
                g.lengths.len(),
                g.dim
            ));
        }
        for (i, l) in g.lengths.iter().enumerate() {
            if !(l.is_finite() && *l > 0.0) {
                v.push(format!("grid.lengths[{i}]: {l} is not positive"));
            }
        }
        let lengths = self.lengths();
        let dim = g.dim;

        if let Some(d) = &self.damping {
            if !(d.amplitude.is_finite() && d.amplitude >= 0.0) {
                v.push(format!("damping.amplitude: {} is negative", d.amplitude));
            }
            if !(d.transition_cells.is_finite() && d.transition_cells > 0.0) {
                v.push(format!(
                    "damping.transition_cells: {} is not positive",
                    d.transition_cells
                ));
            }
            for (i, b) in d.boxes.iter().enumerate() {
                if b.center.len() != dim || b.half_widths.len() != dim {
                    v.push(format!("damping.boxes[{i}]: needs {dim} coordinates"));
                    continue;
                }
                if b.center.iter().any(|c| !c.is_finite()) {
                    v.push(format!("damping.boxes[{i}].center: not finite"));
                }
                for (a, (h, l)) in b.half_widths.iter().zip(&lengths).enumerate() {
                    if !(*h > 0.0 && *h <= l / 2.0) {
                        v.push(format!(
                            "damping.boxes[{i}].half_widths[{a}]: {h} outside (0, {}]",
                            l / 2.0
                        ));
                    }
                }
            }
        }

        let t = &self.time;
        if !(t.horizon.is_finite() && t.horizon >= 0.0) {
            v.push(format!("time.horizon: {} is negative", t.horizon));
        }
        if let Some(dt) = t.dt {
            if !(dt.is_finite() && dt > 0.0) {
                v.push(format!("time.dt: {dt} is not positive"));
            }
        }
        if t.stride == 0 {
            v.push("time.stride: must be at least 1".into());
        }

        let s = &self.solver;
        for (name, x) in [
            ("cg_tol", s.cg_tol),
            ("picard_tol", s.picard_tol),
            ("delta", s.delta),
            ("verify_tol", s.verify_tol),
        ] {
            if !(x.is_finite() && x > 0.0) {
                v.push(format!("solver.{name}: {x} is not positive"));
            }
        }
        if s.cg_max_iter == 0 {
            v.push("solver.cg_max_iter: must be at least 1".into());
        }
        if s.picard_max_iter == 0 {
            v.push("solver.picard_max_iter: must be at least 1".into());
        }

        match &self.initial {
            InitialData::Zero {} | InitialData::Snapshot { .. } => {}
            InitialData::Modes { modes, energy } => {
                for (i, m) in modes.iter().enumerate() {
                    if m.k.len() != dim {
                        v.push(format!("initial.modes[{i}].k: needs {dim} entries"));
                    } else if m.k.iter().any(|k| k.unsigned_abs() as usize >= g.n / 2) {
                        v.push(format!(
                            "initial.modes[{i}].k: |k| must stay below n/2 = {}",
                            g.n / 2
                        ));
                    }
                    if ![m.u, m.v, m.phase].iter().all(|x| x.is_finite()) {
                        v.push(format!("initial.modes[{i}]: coefficients not finite"));
                    }
                }
                if let Some(e) = energy {
                    if !(e.is_finite() && *e > 0.0) {
                        v.push(format!("initial.energy: {e} is not positive"));
                    }
                }
            }
            InitialData::Bump {
                radius,
                scale,
                center,
                amplitude,
                velocity_amplitude,
            } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    v.push(format!("initial.radius: {radius} is not positive"));
                }
                if !(*scale > 0.0 && *scale <= 1.0) {
                    v.push(format!("initial.scale: {scale} outside (0, 1]"));
                }
                if center.len() != dim {
                    v.push(format!("initial.center: needs {dim} entries"));
                }
                if !(amplitude.is_finite() && velocity_amplitude.is_finite()) {
                    v.push("initial: amplitudes not finite".into());
                }
            }
        }

        let e = &self.experiment;
        if !(0.0..1.0).contains(&e.fit_skip) {
            v.push(format!(
                "experiment.fit_skip: {} outside [0, 1)",
                e.fit_skip
            ));
        }
        if e.origins_per_axis == 0 {
            v.push("experiment.origins_per_axis: must be at least 1".into());
        }
        if e.directions == 0 {
            v.push("experiment.directions: must be at least 1".into());
        }
        for (i, x) in e.epsilons.iter().enumerate() {
            if !(*x > 0.0 && *x <= 1.0) {
                v.push(format!("experiment.epsilons[{i}]: {x} outside (0, 1]"));
            }
        }
        for (i, x) in e.amplitudes.iter().enumerate() {
            if !(x.is_finite() && *x > 0.0) {
                v.push(format!("experiment.amplitudes[{i}]: {x} is not positive"));
            }
        }
        if !(e.control_horizon.is_finite() && e.control_horizon > 0.0) {
            v.push(format!(
                "experiment.control_horizon: {} is not positive",
                e.control_horizon
            ));
        }
        if e.control_stride == 0 {
            v.push("experiment.control_stride: must be at least 1".into());
        }
        v
    }
}

/// JSON schema of the configuration document.
pub fn schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(ExperimentConfig))
        .expect("schema serializes")
}

/// Walks a JSON document and fails on the first repeated key in any object.
struct UniqueKeys;

impl<'de> Deserialize<'de> for UniqueKeys {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(UniqueKeys)
    }
}

impl<'de> Visitor<'de> for UniqueKeys {
    type Value = UniqueKeys;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
        let mut seen = HashSet::new();
        while let Some(key) = map.next_key::<String>()? {
            if !seen.insert(key.clone()) {
                return Err(de::Error::custom(format!("duplicate key `{key}`")));
            }
            map.next_value::<UniqueKeys>()?;
        }
        Ok(UniqueKeys)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
        while seq.next_element::<UniqueKeys>()?.is_some() {}
        Ok(UniqueKeys)
    }

    fn visit_bool<E>(self, _: bool) -> Result<Self::Value, E> {
        Ok(UniqueKeys)
    }
    fn visit_i64<E>(self, _: i64) -> Result<Self::Value, E> {
        Ok(UniqueKeys)
    }
    fn visit_u64<E>(self, _: u64) -> Result<Self::Value, E> {
        Ok(UniqueKeys)
    }
    fn visit_f64<E>(self, _: f64) -> Result<Self::Value, E> {
        Ok(UniqueKeys)
    }
    fn visit_str<E>(self, _: &str) -> Result<Self::Value, E> {
        Ok(UniqueKeys)
    }
    fn visit_unit<E>(self) -> Result<Self::Value, E> {
        Ok(UniqueKeys)
    }
}
