//! Discrete objective.

use alloc::vec::Vec;

use crate::control::running_cost;
use crate::field::{ControlField, DensityField};
use crate::grid::Grid;
use crate::params::{GroupCosts, GroupId, MfgParams};

/// `r_{j+1/2} = (F(α_j) + F(α_{j+1}))/2` for a node row of strategies.
pub fn r_row(alpha: &[f64]) -> Vec<f64> {
    alpha.windows(2).map(|w| (running_cost(w[0]) + running_cost(w[1])) / 2.0).collect()
}

/// Instantaneous state cost density at `x`.
///
/// Healthy groups pay `c1(1−x)m/(1+c2 m)` for staying out of work; the
/// infected pay `c1·x·m` for being at work.
pub fn state_cost(group: GroupId, x: f64, m: f64, costs: &GroupCosts) -> f64 {
    match group {
        GroupId::I => costs.c1 * m * x,
        _ => costs.c1 * (1.0 - x) * m / (1.0 + costs.c2 * m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub running_control: f64,
    pub running_state: f64,
    pub terminal: f64,
    pub total: f64,
}

/// Sum in a fixed binary-tree order, so the result does not depend on how
/// the terms were produced and the rounding error grows like `log n`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Evaluates the objective for a forward run. Control cost uses the
/// strategies `α̂`; the corrective part of the advection is free.
pub fn evaluate(density: &DensityField, control: &ControlField, mfg: &MfgParams, grid: &Grid) -> CostBreakdown {
    let (tau, h) = (grid.tau(), grid.h());
    let mut control_terms = Vec::with_capacity(4 * grid.steps() * grid.cells());
    let mut state_terms = Vec::with_capacity(control_terms.capacity());
    for g in GroupId::ALL {
        let costs = &mfg.groups[g];
        for k in 0..grid.steps() {
            let m = density.row(g, k);
            let r = r_row(control.strategy[g].row(k));
            for (j, x) in grid.cell_centers().enumerate() {
                control_terms.push(r[j] * m[j] * tau * h);
                state_terms.push(state_cost(g, x, m[j], costs) * tau * h);
            }
        }
    }
    let terminal = if mfg.terminal_cost {
        let last: Vec<f64> = density.row(GroupId::I, grid.steps()).iter().map(|m| h * m * m / 2.0).collect();
        pairwise_sum(&last)
    } else {
        0.0
    };
    let running_control = pairwise_sum(&control_terms);
    let running_state = pairwise_sum(&state_terms);
    CostBreakdown { running_control, running_state, terminal, total: running_control + running_state + terminal }
}
