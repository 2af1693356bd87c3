//! Named initial conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ideal_gas_pressure, MixtureSpec, SpeciesState, SymTensor, Vec3};
use crate::sim::{equilibrium_cell, Boundary, GridField, SimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PresetError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("bad parameter `{param}`: {reason}")]
    BadPresetParams { param: String, reason: String },
    #[error(transparent)]
    Grid(#[from] SimError),
}

fn bad(param: &str, reason: impl Into<String>) -> PresetError {
    PresetError::BadPresetParams { param: param.to_string(), reason: reason.into() }
}

pub const PRESET_NAMES: [&str; 3] = ["uniform-equilibrium", "binary-counterdiffusion", "three-species-step"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformParams {
    /// Per-species densities; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<Vec<f64>>,
    #[serde(default)]
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterdiffusionParams {
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub mean_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepParams {
    /// Densities on the side containing `x = 0`.
    #[serde(default = "default_step_a")]
    pub a: [f64; 3],
    #[serde(default = "default_step_b")]
    pub b: [f64; 3],
    /// Interface thickness in cells.
    #[serde(default = "two")]
    pub width: f64,
}

fn default_amplitude() -> f64 {
    0.1
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_step_a() -> [f64; 3] {
    [0.8, 0.1, 0.1]
}
fn default_step_b() -> [f64; 3] {
    [0.1, 0.1, 0.8]
}

impl Default for UniformParams {
    fn default() -> Self {
        UniformParams { densities: None, velocity: [0.0; 3] }
    }
}
impl Default for CounterdiffusionParams {
    fn default() -> Self {
        CounterdiffusionParams { amplitude: default_amplitude(), mean_density: 1.0 }
    }
}
impl Default for StepParams {
    fn default() -> Self {
        StepParams { a: default_step_a(), b: default_step_b(), width: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    UniformEquilibrium(UniformParams),
    BinaryCounterdiffusion(CounterdiffusionParams),
    ThreeSpeciesStep(StepParams),
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::UniformEquilibrium(_) => PRESET_NAMES[0],
            Preset::BinaryCounterdiffusion(_) => PRESET_NAMES[1],
            Preset::ThreeSpeciesStep(_) => PRESET_NAMES[2],
        }
    }

    pub fn with_defaults(name: &str) -> Result<Preset, PresetError> {
        match name {
            "uniform-equilibrium" => Ok(Preset::UniformEquilibrium(Default::default())),
            "binary-counterdiffusion" => Ok(Preset::BinaryCounterdiffusion(Default::default())),
            "three-species-step" => Ok(Preset::ThreeSpeciesStep(Default::default())),
            other => Err(PresetError::UnknownPreset(other.to_string())),
        }
    }
}

/// Grid geometry shared by all presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub n_cells: usize,
    pub length: f64,
    pub bc: Boundary,
}

fn isotropic_ideal(spec: &MixtureSpec, densities: &[f64], u: Vec3, temperature: f64) -> Result<Vec<SpeciesState>, PresetError> {
    densities
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let p = ideal_gas_pressure(r, temperature, spec.mass(i)).map_err(|e| bad("temperature", e.to_string()))?;
            Ok(SpeciesState::new(r, u, SymTensor::isotropic(p)))
        })
        .collect()
}

fn check_densities(param: &str, d: &[f64]) -> Result<(), PresetError> {
    if d.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(bad(param, "densities must be finite and non-negative"));
    }
    if d.iter().all(|r| *r == 0.0) {
        return Err(bad(param, "at least one density must be positive"));
    }
    Ok(())
}

fn need_species(spec: &MixtureSpec, preset: &str, s: usize) -> Result<(), PresetError> {
    if spec.species_count() != s {
        return Err(bad(
            "preset",
            format!("{preset} needs {s} species, the mixture has {}", spec.species_count()),
        ));
    }
    Ok(())
}

/// Builds the initial grid for `preset` at the common temperature.
pub fn preset_state(preset: &Preset, shape: GridShape, spec: &MixtureSpec, temperature: f64) -> Result<GridField, PresetError> {
    if !(shape.length > 0.0) || shape.n_cells == 0 {
        return Err(bad("grid", "length and cell count must be positive"));
    }
    if !(temperature > 0.0) {
        return Err(bad("temperature", "must be positive"));
    }
    let n = shape.n_cells;
    let dx = shape.length / n as f64;
    let centers = (0..n).map(|j| (j as f64 + 0.5) * dx);
    let s = spec.species_count();
    let cells: Vec<Vec<SpeciesState>> = match preset {
        Preset::UniformEquilibrium(p) => {
            let densities = p.densities.clone().unwrap_or_else(|| vec![1.0; s]);
            if densities.len() != s {
                return Err(bad("densities", format!("expected {s} entries, got {}", densities.len())));
            }
            check_densities("densities", &densities)?;
            let u = Vec3::from(p.velocity);
            if u.iter().any(|v| !v.is_finite()) {
                return Err(bad("velocity", "must be finite"));
            }
            let mut cell = if densities.iter().all(|&r| r > 0.0) {
                equilibrium_cell(spec, &densities, temperature)?
            } else {
                isotropic_ideal(spec, &densities, Vec3::zeros(), temperature)?
            };
            for st in cell.iter_mut() {
                st.u = u;
            }
            vec![cell; n]
        }
        Preset::BinaryCounterdiffusion(p) => {
            need_species(spec, "binary-counterdiffusion", 2)?;
            if !(p.amplitude.abs() < 1.0) {
                return Err(bad("amplitude", "must satisfy |a| < 1"));
            }
            if !(p.mean_density > 0.0) || !p.mean_density.is_finite() {
                return Err(bad("mean_density", "must be positive"));
            }
            let l = shape.length;
            centers
                .map(|x| {
                    let w = p.amplitude * (2.0 * PI * x / l).sin();
                    let d = [p.mean_density * (1.0 + w), p.mean_density * (1.0 - w)];
                    isotropic_ideal(spec, &d, Vec3::zeros(), temperature)
                })
                .collect::<Result<_, _>>()?
        }
        Preset::ThreeSpeciesStep(p) => {
            need_species(spec, "three-species-step", 3)?;
            check_densities("a", &p.a)?;
            check_densities("b", &p.b)?;
            if !(p.width > 0.0) || !p.width.is_finite() {
                return Err(bad("width", "must be positive"));
            }
            let delta = 0.5 * p.width * dx;
            let l = shape.length;
            let weight_b = |x: f64| match shape.bc {
                Boundary::Periodic => 0.5 * (((x - 0.25 * l) / delta).tanh() - ((x - 0.75 * l) / delta).tanh()),
                Boundary::ZeroFlux => 0.5 * (1.0 + ((x - 0.5 * l) / delta).tanh()),
            };
            centers
                .map(|x| {
                    let w = weight_b(x);
                    let d: Vec<f64> = (0..3).map(|i| (1.0 - w) * p.a[i] + w * p.b[i]).collect();
                    isotropic_ideal(spec, &d, Vec3::zeros(), temperature)
                })
                .collect::<Result<_, _>>()?
        }
    };
    Ok(GridField::new(dx, shape.bc, cells)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::compatibility_residual;

    fn shape() -> GridShape {
        GridShape { n_cells: 64, length: 2.0, bc: Boundary::Periodic }
    }

    #[test]
    fn counterdiffusion_profile() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let g = preset_state(&Preset::BinaryCounterdiffusion(Default::default()), shape(), &spec, 1.5).unwrap();
        let x = g.center(5);
        let w = 0.1 * (2.0 * PI * x / 2.0).sin();
        assert!((g.cells[5][0].rho - (1.0 + w)).abs() < 1e-15);
        assert!((g.cells[5][1].rho - (1.0 - w)).abs() < 1e-15);
        for cell in &g.cells {
            let total: f64 = cell.iter().map(|c| c.scalar_pressure()).sum();
            assert!((total - 2.0 * 2.5).abs() < 1e-14);
            let rho: Vec<f64> = cell.iter().map(|c| c.rho).collect();
            let p: Vec<f64> = cell.iter().map(|c| c.scalar_pressure()).collect();
            let r = compatibility_residual(&spec, &rho, &p);
            assert!(r.max_abs() <= 1e-13);
        }
    }

    #[test]
    fn zero_amplitude_is_uniform() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 3.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let p = Preset::BinaryCounterdiffusion(CounterdiffusionParams { amplitude: 0.0, mean_density: 1.0 });
        let g = preset_state(&p, shape(), &spec, 1.0).unwrap();
        let u = preset_state(&Preset::UniformEquilibrium(Default::default()), shape(), &spec, 1.0).unwrap();
        for (a, b) in g.cells.iter().flatten().zip(u.cells.iter().flatten()) {
            assert_eq!(a.rho, b.rho);
            assert!(a.p.sub(&b.p).max_abs() < 1e-15);
        }
    }

    #[test]
    fn step_profile_plateaus() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 2.0, 3.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        let g = preset_state(&Preset::ThreeSpeciesStep(Default::default()), shape(), &spec, 1.0).unwrap();
        assert!((g.cells[0][0].rho - 0.8).abs() < 1e-10);
        assert!((g.cells[32][2].rho - 0.8).abs() < 1e-10);
        let wall = GridShape { bc: Boundary::ZeroFlux, ..shape() };
        let g = preset_state(&Preset::ThreeSpeciesStep(Default::default()), wall, &spec, 1.0).unwrap();
        assert!((g.cells[63][2].rho - 0.8).abs() < 1e-10);
    }

    #[test]
    fn preset_errors() {
        let spec = MixtureSpec::uniform_kernel(vec![1.0], 2.0, 2.0 / 3.0, 0.1).unwrap();
        assert!(matches!(Preset::with_defaults("vortex"), Err(PresetError::UnknownPreset(_))));
        assert!(matches!(
            preset_state(&Preset::BinaryCounterdiffusion(Default::default()), shape(), &spec, 1.0),
            Err(PresetError::BadPresetParams { .. })
        ));
    }
}
