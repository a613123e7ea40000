//! Forward-backward fixed-point iteration.
//!
//! 1. `α ≡ 0`, forward run, `J⁰`.
//! 2. Backward sweep for `v`, pointwise optimality for the new `α`.
//! 3. Forward run with the new `α`, evaluate `J`; repeat 2-3 until the
//!    relative change of `J` drops below the tolerance.

use alloc::vec::Vec;

use crate::control::update_control;
use crate::cost::{evaluate, CostBreakdown};
use crate::error::{Error, Result};
use crate::field::{l1_norm, max_norm, ControlField, DensityField, ValueField};
use crate::fpk::{diffusion_matrices, run_forward, AdvectionViolation, CflPolicy, ForwardRun};
use crate::grid::Grid;
use crate::hjb::{backward_sweep, AdjointSolution};
use crate::params::{GroupId, PerGroup};
use crate::scenario::Scenario;

/// Admissible set for the pointwise minimisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlBound {
    /// `|α̂| ≤ h/(4τ)`, so every update satisfies the advection CFL bound.
    #[default]
    Cfl,
    /// Unconstrained root of the optimality equation.
    Unbounded,
}

impl ControlBound {
    pub fn name(self) -> &'static str {
        match self {
            ControlBound::Cfl => "cfl",
            ControlBound::Unbounded => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cfl" => Some(ControlBound::Cfl),
            "none" => Some(ControlBound::Unbounded),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop when `|J_n − J_{n−1}| ≤ tol_rel_j · max(1, |J_{n−1}|)`.
    pub tol_rel_j: f64,
    pub max_iters: usize,
    /// Relaxation `ω ∈ (0, 1]` of the strategy update.
    pub relaxation: f64,
    /// Damp movement into areas through `ρ(α̂) = −c3·α̂` for `α̂ > 0`.
    pub external_control: bool,
    pub cfl_policy: CflPolicy,
    pub control_bound: ControlBound,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_rel_j: 1e-6,
            max_iters: 500,
            relaxation: 1.0,
            external_control: false,
            cfl_policy: CflPolicy::Strict,
            control_bound: ControlBound::Cfl,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_rel_j.is_finite() && self.tol_rel_j > 0.0) {
            return Err(Error::param("tol_rel_J", self.tol_rel_j, "must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", 0.0, "must be >= 1"));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::param("relaxation", self.relaxation, "must lie in (0,1]"));
        }
        Ok(())
    }
}

/// Conservation and positivity of one forward run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationAudit {
    pub mass_drift: f64,
    pub min_density: f64,
}

/// `value ≤ bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub bound: f64,
}

impl Bound {
    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

/// A-priori estimates evaluated on the final iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityAudit {
    /// `max_k ‖m_k‖₁ ≤ ‖m_0‖₁ + T max_k ‖f_k‖₁` per group.
    pub density: PerGroup<Bound>,
    /// `max_k ‖v_k‖_∞ ≤ T max_k ‖z_k‖_∞`, plus `‖m^I_M‖_∞` for the infected.
    pub value: PerGroup<Bound>,
    /// Infected only, with the terminal term scaled by `τ`.
    pub value_terminal_sharp: Bound,
}

impl StabilityAudit {
    pub fn holds(&self) -> bool {
        self.density.0.iter().chain(&self.value.0).all(Bound::holds) && self.value_terminal_sharp.holds()
    }

    fn new(grid: &Grid, forward: &ForwardRun, adjoint: &AdjointSolution) -> Self {
        let (h, t) = (grid.h(), grid.horizon());
        let density = PerGroup::from_fn(|g| {
            let layers = &forward.density.groups[g];
            let value = layers.rows().map(|r| l1_norm(r, h)).fold(0.0, f64::max);
            let f_max = forward.reaction_l1[g].iter().copied().fold(0.0, f64::max);
            Bound { value, bound: l1_norm(layers.row(0), h) + t * f_max }
        });
        let terminal = max_norm(forward.density.row(GroupId::I, grid.steps()));
        let value_max = |g: GroupId| adjoint.value.groups[g].rows().map(max_norm).fold(0.0, f64::max);
        let z_max = |g: GroupId| adjoint.source_norm[g].iter().copied().fold(0.0, f64::max);
        let value = PerGroup::from_fn(|g| {
            let extra = if g == GroupId::I { terminal } else { 0.0 };
            Bound { value: value_max(g), bound: extra + t * z_max(g) }
        });
        let value_terminal_sharp =
            Bound { value: value_max(GroupId::I), bound: grid.tau() * terminal + t * z_max(GroupId::I) };
        StabilityAudit { density, value, value_terminal_sharp }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Objective per iteration; entry 0 is the `α ≡ 0` baseline.
    pub costs: Vec<CostBreakdown>,
    /// `max |Δα̂|` per iteration.
    pub control_change: Vec<f64>,
    /// One entry per forward run, baseline included.
    pub audits: Vec<IterationAudit>,
    pub cfl_warning_count: usize,
    pub first_cfl_warning: Option<AdvectionViolation>,
    pub stability: StabilityAudit,
    pub density: DensityField,
    /// Adjoint of the final iterate.
    pub value: ValueField,
    pub control: ControlField,
}

impl SolveReport {
    pub fn final_cost(&self) -> &CostBreakdown {
        self.costs.last().expect("cost history is never empty")
    }

    pub fn max_mass_drift(&self) -> f64 {
        self.audits.iter().map(|a| a.mass_drift).fold(0.0, f64::max)
    }

    pub fn min_density(&self) -> f64 {
        self.audits.iter().map(|a| a.min_density).fold(f64::INFINITY, f64::min)
    }
}

fn max_change(old: &ControlField, new: &ControlField) -> f64 {
    GroupId::ALL
        .iter()
        .flat_map(|&g| old.strategy[g].as_slice().iter().zip(new.strategy[g].as_slice()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn diverging(costs: &[CostBreakdown]) -> Option<f64> {
    let n = costs.len();
    if n < 11 {
        return None;
    }
    let window = &costs[n - 11..];
    let rising = window.windows(2).all(|w| w[1].total > w[0].total);
    let growth = window[10].total.abs() / window[0].total.abs();
    (rising && growth > 10.0).then_some(growth)
}

pub fn solve(scenario: &Scenario, options: &SolverOptions) -> Result<SolveReport> {
    scenario.validate()?;
    options.validate()?;
    let grid = scenario.grid()?;
    let (params, mfg) = (&scenario.epidemic, &scenario.mfg);
    let diffusion = diffusion_matrices(&grid, mfg)?;
    let initial = scenario.initial_rows()?;
    let bound = match options.control_bound {
        ControlBound::Cfl => Some(grid.advection_limit()),
        ControlBound::Unbounded => None,
    };

    let mut control = ControlField::zeros(&grid);
    let mut forward = run_forward(&grid, params, &diffusion, &initial, &control, options.cfl_policy)?;
    let mut costs = alloc::vec![evaluate(&forward.density, &control, mfg, &grid)];
    let mut audits = alloc::vec![IterationAudit { mass_drift: forward.max_mass_drift(), min_density: forward.min() }];
    let mut control_change = Vec::new();
    let mut cfl_warning_count = 0;
    let mut first_cfl_warning = None;
    let mut converged = false;

    for iteration in 1..=options.max_iters {
        let adjoint = backward_sweep(&forward.density, &control, params, mfg, &grid, &diffusion)?;
        let next = update_control(
            &adjoint.value,
            &control,
            &grid,
            mfg,
            options.external_control,
            bound,
            options.relaxation,
        )?;
        control_change.push(max_change(&control, &next));
        control = next;
        forward = run_forward(&grid, params, &diffusion, &initial, &control, options.cfl_policy)?;
        cfl_warning_count += forward.violations.len();
        if first_cfl_warning.is_none() {
            first_cfl_warning = forward.violations.first().copied();
        }
        audits.push(IterationAudit { mass_drift: forward.max_mass_drift(), min_density: forward.min() });
        let cost = evaluate(&forward.density, &control, mfg, &grid);
        if !cost.total.is_finite() {
            return Err(Error::NonFinite { what: "objective", group: None, step: iteration, cell: 0 });
        }
        let previous = costs[costs.len() - 1].total;
        costs.push(cost);
        if (cost.total - previous).abs() <= options.tol_rel_j * previous.abs().max(1.0) {
            converged = true;
            break;
        }
        if let Some(growth) = diverging(&costs) {
            return Err(Error::Diverged { iteration, growth });
        }
    }

    let adjoint = backward_sweep(&forward.density, &control, params, mfg, &grid, &diffusion)?;
    let stability = StabilityAudit::new(&grid, &forward, &adjoint);
    Ok(SolveReport {
        iterations: costs.len() - 1,
        converged,
        costs,
        control_change,
        audits,
        cfl_warning_count,
        first_cfl_warning,
        stability,
        density: forward.density,
        value: adjoint.value,
        control,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{preset_scenario, Period};

    fn small(period: Period) -> Scenario {
        let mut s = preset_scenario(period, None).unwrap();
        s.cells = 20;
        s.steps = 40;
        s
    }

    #[test]
    fn option_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        for bad in [
            SolverOptions { tol_rel_j: 0.0, ..Default::default() },
            SolverOptions { max_iters: 0, ..Default::default() },
            SolverOptions { relaxation: 0.0, ..Default::default() },
            SolverOptions { relaxation: 1.5, ..Default::default() },
        ] {
            assert!(bad.validate().unwrap_err().is_validation());
        }
        assert_eq!(ControlBound::parse(ControlBound::Unbounded.name()), Some(ControlBound::Unbounded));
    }

    #[test]
    fn zero_costs_are_a_fixed_point() {
        let mut s = small(Period::Dec2020);
        for g in GroupId::ALL {
            s.mfg.groups[g].c1 = 0.0;
        }
        s.mfg.terminal_cost = false;
        let r = solve(&s, &SolverOptions::default()).unwrap();
        assert_eq!(r.costs[0].total, 0.0);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert_eq!(r.control.max_abs_effective(), 0.0);
    }

    #[test]
    fn small_presets_converge_with_audits() {
        for period in [Period::May2020, Period::Dec2020] {
            let r = solve(&small(period), &SolverOptions::default()).unwrap();
            assert!(r.converged);
            assert_eq!(r.costs.len(), r.iterations + 1);
            assert_eq!(r.audits.len(), r.iterations + 1);
            assert_eq!(r.control_change.len(), r.iterations);
            assert!(r.max_mass_drift() <= 1e-12);
            assert!(r.min_density() >= -1e-13);
            assert!(r.stability.holds(), "{:?}", r.stability);
            assert!(r.control.boundary_is_zero());
            assert!(r.control.max_abs_effective() > 0.0);
        }
    }

    #[test]
    fn zero_damping_reproduces_plain_run() {
        let mut s = small(Period::Dec2020Case3);
        for g in GroupId::ALL {
            s.mfg.groups[g].c3 = 0.0;
        }
        let plain = solve(&s, &SolverOptions::default()).unwrap();
        let ext = solve(&s, &SolverOptions { external_control: true, ..Default::default() }).unwrap();
        let bits = |r: &SolveReport| r.costs.iter().map(|c| c.total.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&plain), bits(&ext));
    }

    #[test]
    fn unbounded_controls_break_the_cfl_bound() {
        let s = small(Period::Dec2020);
        let strict = SolverOptions { control_bound: ControlBound::Unbounded, ..Default::default() };
        assert!(matches!(solve(&s, &strict), Err(Error::AdvectionCfl { .. })));
    }

    #[test]
    fn diffusion_cfl_is_checked_first() {
        let mut s = small(Period::May2020);
        s.mfg.groups[GroupId::R].sigma2 = 1e-6;
        let err = solve(&s, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DiffusionCfl { group: GroupId::R, .. }));
        assert!(err.is_validation());
    }

    #[test]
    fn divergence_detector() {
        let c = |t| CostBreakdown { total: t, ..Default::default() };
        let rising: Vec<_> = (0..11).map(|k| c(libm::pow(1.3, k as f64))).collect();
        assert!(diverging(&rising).is_some());
        let slow: Vec<_> = (0..11).map(|k| c(2.0 + k as f64)).collect();
        assert!(diverging(&slow).is_none());
        assert!(diverging(&rising[..10]).is_none());
    }
}
