use alloc::vec;
use alloc::vec::Vec;

use crate::grid::Grid;
use crate::params::{EpidemicParams, GroupId, PerGroup};

/// Row-major `layers × width` mesh function.
#[derive(Debug, Clone, PartialEq)]
pub struct Layers {
    width: usize,
    data: Vec<f64>,
}

impl Layers {
    pub fn zeros(layers: usize, width: usize) -> Self {
        Layers { width, data: vec![0.0; layers * width] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn layers(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.width..(k + 1) * self.width]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.width..(k + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Discrete `L¹` norm `Σ_j |a_j| h`.
pub fn l1_norm(row: &[f64], h: f64) -> f64 {
    row.iter().map(|v| v.abs()).sum::<f64>() * h
}

/// Discrete `L∞` norm.
pub fn max_norm(row: &[f64]) -> f64 {
    row.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Midpoint-rule integral `Σ_j a_j h`.
pub fn integral(row: &[f64], h: f64) -> f64 {
    row.iter().sum::<f64>() * h
}

/// Densities `m^i_{k, j+1/2}`, `k = 0..=M`, `j = 0..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub groups: PerGroup<Layers>,
}

impl DensityField {
    pub fn zeros(grid: &Grid) -> Self {
        DensityField { groups: PerGroup::splat(Layers::zeros(grid.steps() + 1, grid.cells())) }
    }

    pub fn row(&self, g: GroupId, k: usize) -> &[f64] {
        self.groups[g].row(k)
    }

    pub fn layers(&self) -> usize {
        self.groups[GroupId::S].layers()
    }

    /// `∫ m_g(t_k, x) dx`.
    pub fn mass(&self, g: GroupId, k: usize, h: f64) -> f64 {
        integral(self.row(g, k), h)
    }

    pub fn total_mass(&self, k: usize, h: f64) -> f64 {
        GroupId::ALL.iter().map(|&g| self.mass(g, k, h)).sum()
    }

    /// Flux into the infected group, `∫ (β m_S m_I + εβ m_C m_I) dx`.
    pub fn incidence(&self, k: usize, h: f64, params: &EpidemicParams) -> f64 {
        let s = self.row(GroupId::S, k);
        let i = self.row(GroupId::I, k);
        let c = self.row(GroupId::C, k);
        let sum: f64 = s
            .iter()
            .zip(i)
            .zip(c)
            .map(|((s, i), c)| params.beta * s * i + params.epsilon * params.beta * c * i)
            .sum();
        sum * h
    }

    pub fn min(&self) -> f64 {
        self.groups.0.iter().map(Layers::min).fold(f64::INFINITY, f64::min)
    }
}

/// Adjoint values `v^i_{k, j+1/2}`, same layout as [`DensityField`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub groups: PerGroup<Layers>,
}

impl ValueField {
    pub fn zeros(grid: &Grid) -> Self {
        ValueField { groups: PerGroup::splat(Layers::zeros(grid.steps() + 1, grid.cells())) }
    }

    pub fn row(&self, g: GroupId, k: usize) -> &[f64] {
        self.groups[g].row(k)
    }
}

/// Strategies at integer nodes `α^i_{k, j}`, `k = 0..=M`, `j = 0..=N`.
///
/// `strategy` is the agents' own choice `α̂`; `effective` is the advection
/// that actually moves the density, `α̂ + ρ(α̂)` under corrective control and
/// identical to `strategy` otherwise. Boundary nodes are zero in both.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    pub strategy: PerGroup<Layers>,
    pub effective: PerGroup<Layers>,
}

impl ControlField {
    pub fn zeros(grid: &Grid) -> Self {
        let zero = Layers::zeros(grid.steps() + 1, grid.cells() + 1);
        ControlField { strategy: PerGroup::splat(zero.clone()), effective: PerGroup::splat(zero) }
    }

    pub fn max_abs_effective(&self) -> f64 {
        self.effective.0.iter().map(Layers::max_abs).fold(0.0, f64::max)
    }

    pub fn boundary_is_zero(&self) -> bool {
        [&self.strategy, &self.effective].iter().all(|field| {
            field.0.iter().all(|layers| layers.rows().all(|row| row[0] == 0.0 && row[row.len() - 1] == 0.0))
        })
    }
}
