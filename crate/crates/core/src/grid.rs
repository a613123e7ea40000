use alloc::format;

use crate::error::{Error, Result};

/// Uniform time-space mesh on `[0, T] × [0, 1]`.
///
/// Densities and values live at cell centres `x_{j+1/2} = (j + 1/2) h`,
/// `j = 0..N-1`; controls live at nodes `x_j = j h`, `j = 0..=N`. The ghost
/// cells at `j = -1` and `j = N` are never stored: they are mirrors of the
/// first and last cells and are folded into the operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    cells: usize,
    steps: usize,
    horizon: f64,
    h: f64,
    tau: f64,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(cells: usize, steps: usize, horizon: f64) -> Result<Self> {
        if cells < Self::MIN_CELLS {
            return Err(Error::InvalidGrid(format!("N = {cells}, need N >= {}", Self::MIN_CELLS)));
        }
        if steps < 1 {
            return Err(Error::InvalidGrid(format!("M = {steps}, need M >= 1")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("T = {horizon}, need T > 0")));
        }
        Ok(Grid {
            cells,
            steps,
            horizon,
            h: 1.0 / cells as f64,
            tau: horizon / steps as f64,
        })
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Number of time steps `M`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    /// `x_{j+1/2}`.
    pub fn cell_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }

    /// `x_j`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn cell_centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(|j| self.cell_center(j))
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(|j| self.node(j))
    }

    /// Largest admissible advection speed, `h / (4τ)`.
    pub fn advection_limit(&self) -> f64 {
        self.h / (4.0 * self.tau)
    }

    /// Steps per reporting day, `⌈1/τ⌉`.
    pub fn day_stride(&self) -> usize {
        let stride = libm::ceil(1.0 / self.tau - 1e-9);
        if stride < 1.0 {
            1
        } else {
            stride as usize
        }
    }
}
