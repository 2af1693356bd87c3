use serde::{Deserialize, Serialize};

use crate::model::{SpeciesState, Vec3};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Periodic,
    /// Mirror ghost cells with the normal velocity and the `p_12`, `p_13`
    /// shear components reflected.
    ZeroFlux,
}

/// Uniform 1-D grid of mixture states; the transport direction is `x_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub dx: f64,
    pub bc: Boundary,
    pub cells: Vec<Vec<SpeciesState>>,
}

pub const MIN_CELLS: usize = 4;

impl GridField {
    pub fn new(dx: f64, bc: Boundary, cells: Vec<Vec<SpeciesState>>) -> Result<Self, SimError> {
        if cells.len() < MIN_CELLS {
            return Err(SimError::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {}",
                cells.len()
            )));
        }
        if !(dx > 0.0) {
            return Err(SimError::InvalidGrid(format!("dx = {dx} must be positive")));
        }
        let s = cells[0].len();
        if s == 0 || cells.iter().any(|c| c.len() != s) {
            return Err(SimError::InvalidGrid("cells must all hold the same nonzero species count".into()));
        }
        Ok(GridField { dx, bc, cells })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn species_count(&self) -> usize {
        self.cells[0].len()
    }

    pub fn length(&self) -> f64 {
        self.dx * self.n_cells() as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx
    }

    /// State of species `i` at cell index `j`, which may be one past either end.
    pub fn state_at(&self, j: isize, i: usize) -> SpeciesState {
        let n = self.n_cells() as isize;
        if (0..n).contains(&j) {
            return self.cells[j as usize][i];
        }
        match self.bc {
            Boundary::Periodic => self.cells[j.rem_euclid(n) as usize][i],
            Boundary::ZeroFlux => {
                let inner = if j < 0 { (-j - 1) as usize } else { (2 * n - 1 - j) as usize };
                reflect(&self.cells[inner][i])
            }
        }
    }

    /// Scalar field sampled with the same ghost rule (even reflection).
    pub fn scalar_at(&self, values: &[f64], j: isize) -> f64 {
        let n = self.n_cells() as isize;
        let k = if (0..n).contains(&j) {
            j
        } else {
            match self.bc {
                Boundary::Periodic => j.rem_euclid(n),
                Boundary::ZeroFlux if j < 0 => -j - 1,
                Boundary::ZeroFlux => 2 * n - 1 - j,
            }
        };
        values[k as usize]
    }

    /// `sum_cells rho^i dx` per species.
    pub fn species_masses(&self) -> Vec<f64> {
        let s = self.species_count();
        (0..s)
            .map(|i| self.cells.iter().map(|c| c[i].rho).sum::<f64>() * self.dx)
            .collect()
    }
}

pub fn reflect(s: &SpeciesState) -> SpeciesState {
    let mut p = s.p;
    p.0[3] = -p.0[3];
    p.0[4] = -p.0[4];
    SpeciesState {
        rho: s.rho,
        u: Vec3::new(-s.u[0], s.u[1], s.u[2]),
        p,
    }
}
