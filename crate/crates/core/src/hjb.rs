//! Backward adjoint sweep.
//!
//! ```text
//! A v_k = B_{k+1}^T v_{k+1} + z_k,   k = M-1, ..., 0
//! ```
//!
//! with `z = ∂g/∂m + r + Σ_l v^l_{k+1} ∂f^l/∂m^i` evaluated at layer `k`.

use alloc::vec;
use alloc::vec::Vec;

use crate::cost::r_row;
use crate::error::{Error, Result};
use crate::field::{max_norm, ControlField, DensityField, ValueField};
use crate::fpk::{AdvectionCoeffs, DiffusionMatrix};
use crate::grid::Grid;
use crate::params::{EpidemicParams, GroupCosts, GroupId, MfgParams, PerGroup};

/// `jac[l][i] = ∂f^l/∂m^i` at one cell (S, I, R, C order).
pub fn reaction_jacobian(m: [f64; 4], p: &EpidemicParams) -> [[f64; 4]; 4] {
    let [s, i, _, c] = m;
    let (b, e) = (p.beta, p.epsilon);
    [
        [-b * i, -b * s, 0.0, p.mu],
        [b * i, b * s + e * b * c - p.gamma, 0.0, e * b * i],
        [0.0, (1.0 - e) * b * c + p.gamma, -p.delta, (1.0 - e) * b * i],
        [0.0, -b * c, p.delta, -b * i - p.mu],
    ]
}

/// Derivative of [`crate::cost::state_cost`] in `m`.
pub fn dg_dm(group: GroupId, x: f64, m: f64, costs: &GroupCosts) -> f64 {
    match group {
        GroupId::I => costs.c1 * x,
        _ => {
            let d = 1.0 + costs.c2 * m;
            costs.c1 * (1.0 - x) / (d * d)
        }
    }
}

/// `v_M`: zero except for the infected, where `A v_M = m^I_M` when the
/// terminal cost is on.
pub fn terminal_condition(
    m_i_final: &[f64],
    diffusion: &PerGroup<DiffusionMatrix>,
    terminal_cost: bool,
) -> PerGroup<Vec<f64>> {
    let mut out = PerGroup::splat(vec![0.0; m_i_final.len()]);
    if terminal_cost {
        out[GroupId::I].copy_from_slice(m_i_final);
        diffusion[GroupId::I].solve_in_place(&mut out[GroupId::I]);
    }
    out
}

/// Sources `z_k` for all groups at one layer.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_source(
    m: [&[f64]; 4],
    v_next: [&[f64]; 4],
    strategy: [&[f64]; 4],
    params: &EpidemicParams,
    mfg: &MfgParams,
    grid: &Grid,
) -> PerGroup<Vec<f64>> {
    let n = grid.cells();
    let mut z = PerGroup::splat(vec![0.0; n]);
    for g in GroupId::ALL {
        let r = r_row(strategy[g.index()]);
        z[g].copy_from_slice(&r);
    }
    for (j, x) in grid.cell_centers().enumerate() {
        let cell = [m[0][j], m[1][j], m[2][j], m[3][j]];
        let jac = reaction_jacobian(cell, params);
        for g in GroupId::ALL {
            let i = g.index();
            let coupling: f64 = (0..4).map(|l| v_next[l][j] * jac[l][i]).sum();
            z[g][j] += dg_dm(g, x, cell[i], &mfg.groups[g]) + coupling;
        }
    }
    z
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSolution {
    pub value: ValueField,
    /// `‖z_k‖_∞` for `k = 0..M-1`.
    pub source_norm: PerGroup<Vec<f64>>,
}

pub fn backward_sweep(
    density: &DensityField,
    control: &ControlField,
    params: &EpidemicParams,
    mfg: &MfgParams,
    grid: &Grid,
    diffusion: &PerGroup<DiffusionMatrix>,
) -> Result<AdjointSolution> {
    let big_m = grid.steps();
    let mut value = ValueField::zeros(grid);
    let terminal = terminal_condition(density.row(GroupId::I, big_m), diffusion, mfg.terminal_cost);
    for g in GroupId::ALL {
        value.groups[g].row_mut(big_m).copy_from_slice(&terminal[g]);
    }
    let mut source_norm = PerGroup::splat(vec![0.0; big_m]);
    let mut rhs = vec![0.0; grid.cells()];
    for k in (0..big_m).rev() {
        let z = adjoint_source(
            GroupId::ALL.map(|g| density.row(g, k)),
            GroupId::ALL.map(|g| value.row(g, k + 1)),
            GroupId::ALL.map(|g| control.strategy[g].row(k)),
            params,
            mfg,
            grid,
        );
        for g in GroupId::ALL {
            if let Some(j) = z[g].iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { what: "adjoint source", group: Some(g), step: k, cell: j });
            }
            source_norm[g][k] = max_norm(&z[g]);
            let b = AdvectionCoeffs::new(control.effective[g].row(k + 1), grid).matrix();
            b.apply_transpose(value.row(g, k + 1), &mut rhs);
            for (o, s) in rhs.iter_mut().zip(&z[g]) {
                *o += s;
            }
            diffusion[g].solve_in_place(&mut rhs);
            value.groups[g].row_mut(k).copy_from_slice(&rhs);
        }
    }
    Ok(AdjointSolution { value, source_norm })
}
