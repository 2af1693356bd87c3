use serde::{Deserialize, Serialize};

use crate::model::MixtureSpec;

use super::{cfl_dt, check_species, step, totals, GridField, Mode, SimError, Totals};

pub const DEFAULT_CFL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub mode: Mode,
    pub final_time: f64,
    /// Snapshot spacing; `None` keeps only the initial and final states.
    pub snapshot_interval: Option<f64>,
    pub cfl: f64,
    /// Stops after this many steps even before `final_time`.
    pub max_steps: Option<usize>,
    /// Report rows are written every this many steps (and at the end).
    pub report_every: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            mode: Mode::NonIsothermal,
            final_time: 0.1,
            snapshot_interval: None,
            cfl: DEFAULT_CFL,
            max_steps: None,
            report_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    pub step: usize,
    pub totals: Totals,
}

/// Time-ordered conservation and residual history.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    pub rows: Vec<ReportRow>,
}

impl SimReport {
    pub fn first(&self) -> &ReportRow {
        &self.rows[0]
    }

    pub fn last(&self) -> &ReportRow {
        self.rows.last().expect("report always holds the initial row")
    }

    /// Largest relative change of each species mass against the first row.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = &self.first().totals.masses;
        self.rows
            .iter()
            .flat_map(|r| r.totals.masses.iter().zip(m0).map(|(m, a)| (m - a).abs() / a.abs().max(f64::MIN_POSITIVE)))
            .fold(0.0, f64::max)
    }

    /// Largest change of mixture momentum, relative to the given scale.
    pub fn max_momentum_drift(&self, scale: f64) -> f64 {
        let p0 = self.first().totals.momentum;
        self.rows.iter().map(|r| (r.totals.momentum - p0).amax() / scale).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.first().totals.energy;
        self.rows.iter().map(|r| (r.totals.energy - e0).abs() / e0.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub grid: GridField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: SimReport,
    pub snapshots: Vec<Snapshot>,
    pub grid: GridField,
    pub t: f64,
    pub steps: usize,
    /// Set when integration stopped early; everything above is retained up
    /// to the last accepted step.
    pub failure: Option<SimError>,
}

fn validate(settings: &SimSettings) -> Result<(), SimError> {
    let bad = |m: &str| Err(SimError::InvalidGrid(m.to_string()));
    if !(settings.final_time >= 0.0) {
        return bad("final time must be non-negative");
    }
    if !(settings.cfl > 0.0 && settings.cfl <= 1.0) {
        return bad("cfl must lie in (0, 1]");
    }
    if let Some(iv) = settings.snapshot_interval {
        if !(iv > 0.0) {
            return bad("snapshot interval must be positive");
        }
    }
    if settings.report_every == 0 {
        return bad("report interval must be at least one step");
    }
    Ok(())
}

/// Integrates `grid` to `settings.final_time`.
pub fn run(grid: GridField, spec: &MixtureSpec, settings: &SimSettings) -> Result<RunOutput, SimError> {
    check_species(&grid, spec)?;
    validate(settings)?;
    let alpha = spec.alpha();
    let final_time = settings.final_time;
    let mut out = RunOutput {
        report: SimReport { rows: vec![ReportRow { t: 0.0, step: 0, totals: totals(&grid, spec) }] },
        snapshots: vec![Snapshot { t: 0.0, grid: grid.clone() }],
        grid,
        t: 0.0,
        steps: 0,
        failure: None,
    };
    let mut next_snap = settings.snapshot_interval.map(|iv| (iv, 1usize));
    let eps = 1e-12 * final_time.max(1.0);

    while final_time - out.t > eps && settings.max_steps.is_none_or(|m| out.steps < m) {
        let advance = cfl_dt(&out.grid, alpha, settings.cfl).and_then(|dt_cfl| {
            let mut target = final_time;
            if let Some((iv, k)) = next_snap {
                target = target.min(iv * k as f64);
            }
            let (dt, t_new) = if out.t + dt_cfl >= target - eps { (target - out.t, target) } else { (dt_cfl, out.t + dt_cfl) };
            step(&out.grid, spec, dt, settings.mode).map(|g| (g, t_new))
        });
        let (g, t_new) = match advance {
            Ok(v) => v,
            Err(e) => {
                out.failure = Some(e);
                break;
            }
        };
        out.grid = g;
        out.t = t_new;
        out.steps += 1;
        if out.steps.is_multiple_of(settings.report_every) {
            out.report.rows.push(ReportRow { t: out.t, step: out.steps, totals: totals(&out.grid, spec) });
        }
        if let Some((iv, k)) = next_snap {
            if out.t >= iv * k as f64 - eps {
                out.snapshots.push(Snapshot { t: out.t, grid: out.grid.clone() });
                next_snap = Some((iv, k + 1));
            }
        }
    }
    if out.report.last().step != out.steps {
        out.report.rows.push(ReportRow { t: out.t, step: out.steps, totals: totals(&out.grid, spec) });
    }
    if out.snapshots.last().is_some_and(|s| s.t != out.t) {
        out.snapshots.push(Snapshot { t: out.t, grid: out.grid.clone() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SpeciesState, SymTensor, Vec3};
    use crate::sim::Boundary;

    fn setup() -> (GridField, MixtureSpec) {
        let spec = MixtureSpec::uniform_kernel(vec![1.0, 2.0], 2.0, 2.0 / 3.0, 0.2).unwrap();
        let n = 16;
        let cells = (0..n)
            .map(|j| {
                let w = 0.1 * (2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64).sin();
                vec![
                    SpeciesState::new(1.0 + w, Vec3::zeros(), SymTensor::isotropic(5.0 / 3.0 * (1.0 + w))),
                    SpeciesState::new(1.0 - w, Vec3::zeros(), SymTensor::isotropic(5.0 / 6.0 * (1.0 - w))),
                ]
            })
            .collect();
        (GridField::new(1.0 / n as f64, Boundary::Periodic, cells).unwrap(), spec)
    }

    #[test]
    fn zero_final_time_keeps_initial_snapshot() {
        let (g, spec) = setup();
        let out = run(g.clone(), &spec, &SimSettings { final_time: 0.0, ..Default::default() }).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.snapshots[0].grid, g);
        assert_eq!(out.report.rows.len(), 1);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn snapshots_land_on_interval_and_runs_repeat() {
        let (g, spec) = setup();
        let settings = SimSettings { final_time: 0.02, snapshot_interval: Some(0.005), ..Default::default() };
        let a = run(g.clone(), &spec, &settings).unwrap();
        let b = run(g, &spec, &settings).unwrap();
        assert_eq!(a, b);
        let times: Vec<f64> = a.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times.len(), 5);
        for (k, t) in times.iter().enumerate() {
            assert!((t - 0.005 * k as f64).abs() < 1e-14);
        }
        assert!(a.failure.is_none());
        assert!(a.report.rows.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn failure_keeps_partial_report() {
        let (mut g, spec) = setup();
        g.cells[3][1].p = SymTensor::diag(1e-3, 1e-3, 1e-3);
        g.cells[3][1].u = Vec3::new(50.0, 0.0, 0.0);
        let out = run(g, &spec, &SimSettings { final_time: 1.0, ..Default::default() }).unwrap();
        if let Some(e) = &out.failure {
            assert!(matches!(e, SimError::PositivityLoss { .. }));
            assert_eq!(out.report.last().step, out.steps);
        }
    }
}
