//! JSON run configuration.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "mixture": { "masses": [1.0, 2.0], "kernel_l1": [[2, 2], [2, 2]],
//!                "kernel_b": [[0.6667, 0.6667], [0.6667, 0.6667]], "alpha": 0.1 },
//!   "grid": { "n_cells": 128, "length": 1.0, "bc": "periodic" },
//!   "mode": "isothermal",
//!   "temperature": 1.0,
//!   "initial": { "preset": "binary-counterdiffusion", "params": { "amplitude": 0.1 } },
//!   "time": { "final_time": 0.1, "snapshot_interval": 0.05, "cfl": 0.4 },
//!   "sweep": { "rate_tolerance": 1e-6, "max_time": 10.0 },
//!   "output": { "directory": "out", "formats": ["csv"] }
//! }
//! ```
//!
//! Only `schema` and `mixture.masses` are required. Unknown keys are errors.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MixtureSpec, SpecError, SpeciesState, SymTensor, Vec3};
use crate::presets::{preset_state, CounterdiffusionParams, GridShape, Preset, PresetError, StepParams, UniformParams};
use crate::sim::{Boundary, GridField, Mode, SimSettings, SweepSettings, DEFAULT_CFL};

pub const SCHEMA_VERSION: u32 = 1;
/// `||b||_{L1}` and `B` of the constant kernel `b = 1`.
pub const CONSTANT_KERNEL: (f64, f64) = (2.0, 2.0 / 3.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    ParseError { path: String, message: String },
    #[error("{path}: unknown key")]
    UnknownKey { path: String },
    #[error("{path}: {message}")]
    SchemaViolation { path: String, message: String },
}

fn violation(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::SchemaViolation { path: path.into(), message: message.into() }
}

fn join(prefix: &str, inner: &str) -> String {
    match (prefix.is_empty(), inner.is_empty() || inner == ".") {
        (true, _) => inner.to_string(),
        (false, true) => prefix.to_string(),
        (false, false) if inner.starts_with('[') => format!("{prefix}{inner}"),
        (false, false) => format!("{prefix}.{inner}"),
    }
}

/// Deserializes with path tracking; unknown fields become [`ConfigError::UnknownKey`].
fn decode<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = join(prefix, &e.path().to_string());
        let message = e.inner().to_string();
        if message.starts_with("unknown field `") {
            ConfigError::UnknownKey { path }
        } else {
            ConfigError::ParseError { path, message }
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    mixture: RawMixture,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default = "default_mode")]
    mode: ModeKind,
    #[serde(default = "one")]
    temperature: f64,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixture {
    masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel_l1: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel_b: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_alpha")]
    alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default = "default_cells")]
    n_cells: usize,
    #[serde(default = "one")]
    length: f64,
    #[serde(default)]
    bc: Boundary,
}

impl Default for RawGrid {
    fn default() -> Self {
        RawGrid { n_cells: default_cells(), length: 1.0, bc: Boundary::Periodic }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Isothermal,
    NonIsothermal,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<Vec<RawState>>>,
}

/// One species in one cell: `p` is `[p11, p22, p33, p12, p13, p23]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    rho: f64,
    #[serde(default)]
    u: [f64; 3],
    p: [f64; 6],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    #[serde(default = "default_final_time")]
    final_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    snapshot_interval: Option<f64>,
    #[serde(default = "default_cfl")]
    cfl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_steps: Option<usize>,
    #[serde(default = "one_usize")]
    report_every: usize,
}

impl Default for RawTime {
    fn default() -> Self {
        RawTime {
            final_time: default_final_time(),
            snapshot_interval: None,
            cfl: DEFAULT_CFL,
            max_steps: None,
            report_every: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(default = "default_rate")]
    rate_tolerance: f64,
    #[serde(default = "default_sweep_time")]
    max_time: f64,
}

impl Default for RawSweep {
    fn default() -> Self {
        RawSweep { rate_tolerance: default_rate(), max_time: default_sweep_time() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_dir")]
    directory: PathBuf,
    #[serde(default = "default_formats")]
    formats: Vec<String>,
}

impl Default for RawOutput {
    fn default() -> Self {
        RawOutput { directory: default_dir(), formats: default_formats() }
    }
}

fn default_mode() -> ModeKind {
    ModeKind::Isothermal
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_alpha() -> f64 {
    0.1
}
fn default_cells() -> usize {
    128
}
fn default_final_time() -> f64 {
    0.1
}
fn default_cfl() -> f64 {
    DEFAULT_CFL
}
fn default_rate() -> f64 {
    1e-6
}
fn default_sweep_time() -> f64 {
    10.0
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<String> {
    vec!["csv".to_string()]
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Preset(Preset),
    Cells(Vec<Vec<SpeciesState>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<String>,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: MixtureSpec,
    pub grid: GridShape,
    pub mode: ModeKind,
    pub temperature: f64,
    pub initial: InitialCondition,
    pub settings: SimSettings,
    pub sweep: SweepSettings,
    pub output: OutputConfig,
}

fn spec_error_path(e: &SpecError) -> String {
    match e {
        SpecError::NoSpecies => "mixture.masses".into(),
        SpecError::ShapeMismatch { name, .. } => format!("mixture.{name}"),
        SpecError::NonSymmetricKernel { name, i, j, .. } | SpecError::NegativeKernel { name, i, j, .. } => {
            format!("mixture.{name}[{i}][{j}]")
        }
        SpecError::BExceedsL1 { i, j, .. } => format!("mixture.kernel_b[{i}][{j}]"),
        SpecError::NonPositiveMass { i, .. } => format!("mixture.masses[{i}]"),
        SpecError::NonPositiveAlpha(_) => "mixture.alpha".into(),
    }
}

fn build_spec(m: RawMixture) -> Result<MixtureSpec, ConfigError> {
    let s = m.masses.len();
    let (l1, b) = CONSTANT_KERNEL;
    let kl1 = m.kernel_l1.unwrap_or_else(|| vec![vec![l1; s]; s]);
    let kb = m.kernel_b.unwrap_or_else(|| vec![vec![b; s]; s]);
    MixtureSpec::new(m.masses, kl1, kb, m.alpha).map_err(|e| violation(spec_error_path(&e), e.to_string()))
}

fn preset_from(name: &str, params: Option<serde_json::Value>) -> Result<Preset, ConfigError> {
    let params = params.unwrap_or_else(|| serde_json::json!({}));
    let prefix = "initial.params";
    match Preset::with_defaults(name) {
        Ok(Preset::UniformEquilibrium(_)) => Ok(Preset::UniformEquilibrium(decode::<UniformParams>(params, prefix)?)),
        Ok(Preset::BinaryCounterdiffusion(_)) => {
            Ok(Preset::BinaryCounterdiffusion(decode::<CounterdiffusionParams>(params, prefix)?))
        }
        Ok(Preset::ThreeSpeciesStep(_)) => Ok(Preset::ThreeSpeciesStep(decode::<StepParams>(params, prefix)?)),
        Err(e) => Err(violation("initial.preset", e.to_string())),
    }
}

fn preset_params(p: &Preset) -> serde_json::Value {
    match p {
        Preset::UniformEquilibrium(v) => serde_json::to_value(v),
        Preset::BinaryCounterdiffusion(v) => serde_json::to_value(v),
        Preset::ThreeSpeciesStep(v) => serde_json::to_value(v),
    }
    .expect("preset parameters serialize")
}

fn build_cells(cells: Vec<Vec<RawState>>, n_cells: usize, s: usize) -> Result<Vec<Vec<SpeciesState>>, ConfigError> {
    if cells.len() != n_cells {
        return Err(violation("initial.cells", format!("expected {n_cells} cells, got {}", cells.len())));
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(j, cell)| {
            if cell.len() != s {
                return Err(violation(format!("initial.cells[{j}]"), format!("expected {s} species, got {}", cell.len())));
            }
            cell.into_iter()
                .enumerate()
                .map(|(i, st)| {
                    let path = format!("initial.cells[{j}][{i}]");
                    if !(st.rho >= 0.0) || !st.rho.is_finite() {
                        return Err(violation(format!("{path}.rho"), "density must be finite and non-negative"));
                    }
                    let p = SymTensor(st.p);
                    if st.rho > 0.0 && !p.is_positive_definite() {
                        return Err(violation(format!("{path}.p"), "pressure tensor must be positive definite"));
                    }
                    if st.u.iter().chain(st.p.iter()).any(|v| !v.is_finite()) {
                        return Err(violation(path, "values must be finite"));
                    }
                    Ok(SpeciesState::new(st.rho, Vec3::from(st.u), p))
                })
                .collect()
        })
        .collect()
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::ParseError { path: String::new(), message: e.to_string() })?;
    let raw: RawConfig = decode(value, "")?;
    if raw.schema != SCHEMA_VERSION {
        return Err(violation("schema", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", raw.schema)));
    }
    let spec = build_spec(raw.mixture)?;
    let s = spec.species_count();

    if raw.grid.n_cells < crate::sim::MIN_CELLS {
        return Err(violation("grid.n_cells", format!("must be at least {}", crate::sim::MIN_CELLS)));
    }
    if !(raw.grid.length > 0.0) || !raw.grid.length.is_finite() {
        return Err(violation("grid.length", "must be positive"));
    }
    let grid = GridShape { n_cells: raw.grid.n_cells, length: raw.grid.length, bc: raw.grid.bc };
    if !(raw.temperature > 0.0) || !raw.temperature.is_finite() {
        return Err(violation("temperature", "must be positive"));
    }

    let initial = match (raw.initial.preset, raw.initial.cells) {
        (Some(_), Some(_)) => return Err(violation("initial", "give either `preset` or `cells`, not both")),
        (None, Some(cells)) => {
            if raw.initial.params.is_some() {
                return Err(violation("initial.params", "only allowed with a preset"));
            }
            InitialCondition::Cells(build_cells(cells, grid.n_cells, s)?)
        }
        (preset, None) => {
            let name = preset.unwrap_or_else(|| "uniform-equilibrium".to_string());
            InitialCondition::Preset(preset_from(&name, raw.initial.params)?)
        }
    };

    let t = raw.time;
    if !(t.final_time >= 0.0) || !t.final_time.is_finite() {
        return Err(violation("time.final_time", "must be finite and non-negative"));
    }
    if let Some(iv) = t.snapshot_interval {
        if !(iv > 0.0) {
            return Err(violation("time.snapshot_interval", "must be positive"));
        }
    }
    if !(t.cfl > 0.0 && t.cfl <= 1.0) {
        return Err(violation("time.cfl", "must lie in (0, 1]"));
    }
    if t.report_every == 0 {
        return Err(violation("time.report_every", "must be at least 1"));
    }
    if !(raw.sweep.rate_tolerance > 0.0) {
        return Err(violation("sweep.rate_tolerance", "must be positive"));
    }
    if !(raw.sweep.max_time > 0.0) {
        return Err(violation("sweep.max_time", "must be positive"));
    }
    for (k, f) in raw.output.formats.iter().enumerate() {
        if f != "csv" {
            return Err(violation(format!("output.formats[{k}]"), format!("unsupported format `{f}`; only `csv` is available")));
        }
    }
    let mode = match raw.mode {
        ModeKind::Isothermal => Mode::Isothermal { temperature: raw.temperature },
        ModeKind::NonIsothermal => Mode::NonIsothermal,
    };
    Ok(SimConfig {
        spec,
        grid,
        mode: raw.mode,
        temperature: raw.temperature,
        initial,
        settings: SimSettings {
            mode,
            final_time: t.final_time,
            snapshot_interval: t.snapshot_interval,
            cfl: t.cfl,
            max_steps: t.max_steps,
            report_every: t.report_every,
        },
        sweep: SweepSettings {
            temperature: raw.temperature,
            rate_tolerance: raw.sweep.rate_tolerance,
            max_time: raw.sweep.max_time,
            cfl: t.cfl,
        },
        output: OutputConfig { directory: raw.output.directory, formats: raw.output.formats },
    })
}

impl SimConfig {
    /// Canonical JSON form; parsing it gives back an equal configuration.
    pub fn to_json(&self) -> String {
        let initial = match &self.initial {
            InitialCondition::Preset(p) => RawInitial {
                preset: Some(p.name().to_string()),
                params: Some(preset_params(p)),
                cells: None,
            },
            InitialCondition::Cells(cells) => RawInitial {
                preset: None,
                params: None,
                cells: Some(
                    cells
                        .iter()
                        .map(|c| c.iter().map(|s| RawState { rho: s.rho, u: s.u.into(), p: s.p.0 }).collect())
                        .collect(),
                ),
            },
        };
        let raw = RawConfig {
            schema: SCHEMA_VERSION,
            mixture: RawMixture {
                masses: self.spec.masses().to_vec(),
                kernel_l1: Some(self.spec.kernel_l1().to_vec()),
                kernel_b: Some(self.spec.kernel_b().to_vec()),
                alpha: self.spec.alpha(),
            },
            grid: RawGrid { n_cells: self.grid.n_cells, length: self.grid.length, bc: self.grid.bc },
            mode: self.mode,
            temperature: self.temperature,
            initial,
            time: RawTime {
                final_time: self.settings.final_time,
                snapshot_interval: self.settings.snapshot_interval,
                cfl: self.settings.cfl,
                max_steps: self.settings.max_steps,
                report_every: self.settings.report_every,
            },
            sweep: RawSweep { rate_tolerance: self.sweep.rate_tolerance, max_time: self.sweep.max_time },
            output: RawOutput { directory: self.output.directory.clone(), formats: self.output.formats.clone() },
        };
        serde_json::to_string_pretty(&raw).expect("configuration serializes")
    }

    /// Initial grid described by the configuration.
    pub fn initial_grid(&self) -> Result<GridField, PresetError> {
        match &self.initial {
            InitialCondition::Preset(p) => preset_state(p, self.grid, &self.spec, self.temperature),
            InitialCondition::Cells(cells) => {
                Ok(GridField::new(self.grid.length / self.grid.n_cells as f64, self.grid.bc, cells.clone())?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(r#"{"schema": 1, "mixture": {"masses": [2.0]}}"#).unwrap();
        assert_eq!(c.spec.species_count(), 1);
        assert_eq!(c.spec.l1(0, 0), 2.0);
        assert_eq!(c.spec.alpha(), 0.1);
        assert_eq!(c.grid, GridShape { n_cells: 128, length: 1.0, bc: Boundary::Periodic });
        assert_eq!(c.mode, ModeKind::Isothermal);
        assert_eq!(c.settings.cfl, 0.4);
        assert_eq!(c.initial, InitialCondition::Preset(Preset::UniformEquilibrium(Default::default())));
        assert_eq!(c.output.formats, vec!["csv"]);
    }

    #[test]
    fn negative_mass_path() {
        let e = parse_config(r#"{"schema": 1, "mixture": {"masses": [-1.0, 2.0]}}"#).unwrap_err();
        assert!(matches!(&e, ConfigError::SchemaViolation { path, .. } if path == "mixture.masses[0]"), "{e:?}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = parse_config(r#"{"schema": 1, "mixture": {"masses": [1.0], "colour": 1}}"#).unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey { path: "mixture.colour".into() });
        let e = parse_config(
            r#"{"schema": 1, "mixture": {"masses": [1.0, 1.0]},
                "initial": {"preset": "binary-counterdiffusion", "params": {"amp": 0.1}}}"#,
        )
        .unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey { path: "initial.params.amp".into() });
    }

    #[test]
    fn type_errors_have_paths() {
        let e = parse_config(r#"{"schema": 1, "mixture": {"masses": [1.0, "x"]}}"#).unwrap_err();
        assert!(matches!(&e, ConfigError::ParseError { path, .. } if path == "mixture.masses[1]"), "{e:?}");
        assert!(matches!(parse_config("{"), Err(ConfigError::ParseError { .. })));
        assert!(matches!(
            parse_config(r#"{"schema": 2, "mixture": {"masses": [1.0]}}"#),
            Err(ConfigError::SchemaViolation { path, .. }) if path == "schema"
        ));
    }

    #[test]
    fn counterdiffusion_config() {
        let c = parse_config(
            r#"{"schema": 1, "mixture": {"masses": [1.0, 2.0]},
                "initial": {"preset": "binary-counterdiffusion", "params": {"amplitude": 0.1}}}"#,
        )
        .unwrap();
        let g = c.initial_grid().unwrap();
        assert_eq!(g.species_count(), 2);
        let total_p: Vec<f64> = g.cells.iter().map(|c| c.iter().map(|s| s.scalar_pressure()).sum()).collect();
        let min = total_p.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(g.cells[10][0].rho > g.cells[10][1].rho);
        assert!(min > 0.0);
    }

    #[test]
    fn explicit_cells_checked() {
        let cell = r#"[{"rho": 1.0, "p": [1, 1, 1, 0, 0, 0]}]"#;
        let cells = format!("[{cell}, {cell}, {cell}, {cell}]");
        let text = format!(r#"{{"schema": 1, "mixture": {{"masses": [1.0]}}, "grid": {{"n_cells": 4}}, "initial": {{"cells": {cells}}}}}"#);
        let c = parse_config(&text).unwrap();
        assert_eq!(c.initial_grid().unwrap().n_cells(), 4);
        let text = format!(r#"{{"schema": 1, "mixture": {{"masses": [1.0]}}, "grid": {{"n_cells": 5}}, "initial": {{"cells": {cells}}}}}"#);
        assert!(matches!(parse_config(&text), Err(ConfigError::SchemaViolation { path, .. }) if path == "initial.cells"));
    }

    #[test]
    fn json_round_trip() {
        let c = parse_config(
            r#"{"schema": 1, "mixture": {"masses": [1.0, 2.0, 4.0], "alpha": 0.05},
                "grid": {"n_cells": 32, "bc": "zero-flux"}, "mode": "non-isothermal",
                "initial": {"preset": "three-species-step", "params": {"width": 3}},
                "time": {"final_time": 0.5, "snapshot_interval": 0.1, "max_steps": 7}}"#,
        )
        .unwrap();
        let again = parse_config(&c.to_json()).unwrap();
        assert_eq!(c, again);
    }
}
