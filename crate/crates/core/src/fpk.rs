//! Forward Fokker-Planck scheme.
//!
//! Each step solves, per group,
//!
//! ```text
//! A m_k = B_k m_{k-1} + f(m_{k-1})
//! ```
//!
//! where `A` carries the time derivative (with `1/8, 3/4, 1/8` weights) and
//! the implicit diffusion, `B_k` the explicit advection by `α_k`, and `f` the
//! SIRC reaction terms. `A` has row and column sums `1/τ`, `B_k` has column
//! sums `1/τ` and the reaction terms cancel across groups, so total mass is
//! preserved exactly. Under `h² ≤ 4τσ²` and `τ|α| ≤ h/4`, `A` is an M-matrix
//! and `B_k` is non-negative, which keeps densities non-negative.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{l1_norm, ControlField, DensityField};
use crate::grid::Grid;
use crate::params::{EpidemicParams, GroupId, MfgParams, PerGroup};
use crate::tridiag::{Tridiagonal, TridiagonalLu};

/// Densities below this abort the run.
pub const NEGATIVE_FLOOR: f64 = -1e-13;

/// Relative slack on `τ|α| ≤ h/4` so that a control projected exactly onto
/// the limit is not rejected for a last-bit rounding difference.
const CFL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CflPolicy {
    /// Refuse to step with an inadmissible control.
    #[default]
    Strict,
    /// Step anyway and record the violation.
    Warn,
}

/// One side of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl CflCheck {
    pub fn passed(&self) -> bool {
        self.lhs <= self.rhs
    }

    /// `rhs - lhs`; negative when violated.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    /// `h² ≤ 4τσ²_i` for each group.
    pub diffusion: PerGroup<CflCheck>,
    /// `τ · alpha_bound ≤ h/4`.
    pub advection: CflCheck,
}

impl CflReport {
    pub fn passed(&self) -> bool {
        self.diffusion.0.iter().all(CflCheck::passed) && self.advection.passed()
    }
}

pub fn check_cfl(grid: &Grid, mfg: &MfgParams, alpha_bound: f64) -> CflReport {
    let h2 = grid.h() * grid.h();
    CflReport {
        diffusion: mfg.groups.map(|_, c| CflCheck { lhs: h2, rhs: 4.0 * grid.tau() * c.sigma2 }),
        advection: CflCheck { lhs: grid.tau() * alpha_bound, rhs: grid.h() / 4.0 },
    }
}

/// Implicit operator `A` of one group with its cached factorisation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    pub matrix: Tridiagonal,
    lu: TridiagonalLu,
}

impl DiffusionMatrix {
    pub fn new(grid: &Grid, sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::param("sigma2", sigma2, "must be finite and >= 0"));
        }
        let n = grid.cells();
        let (tau, h) = (grid.tau(), grid.h());
        let off = 1.0 / (8.0 * tau) - sigma2 / (2.0 * h * h);
        let mut diag = vec![3.0 / (4.0 * tau) + sigma2 / (h * h); n];
        diag[0] = 7.0 / (8.0 * tau) + sigma2 / (2.0 * h * h);
        diag[n - 1] = diag[0];
        let matrix = Tridiagonal::new(vec![off; n - 1], diag, vec![off; n - 1]);
        let lu = matrix.factorize()?;
        Ok(DiffusionMatrix { matrix, lu })
    }

    /// Non-positive off-diagonals; together with the constant row sum `1/τ`
    /// this makes `A` a strictly diagonally dominant M-matrix.
    pub fn is_m_matrix(&self) -> bool {
        self.matrix.lower.iter().all(|&v| v <= 0.0)
    }

    pub fn off_diagonal(&self) -> f64 {
        self.matrix.upper[0]
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        self.lu.solve_in_place(rhs)
    }
}

/// Builds `A` for every group, rejecting a diffusion that breaks the
/// M-matrix property.
pub fn diffusion_matrices(grid: &Grid, mfg: &MfgParams) -> Result<PerGroup<DiffusionMatrix>> {
    let report = check_cfl(grid, mfg, 0.0);
    for (g, check) in report.diffusion.iter() {
        if !check.passed() {
            return Err(Error::DiffusionCfl { group: g, h_squared: check.lhs, bound: check.rhs });
        }
    }
    mfg.groups.try_map(|_, c| DiffusionMatrix::new(grid, c.sigma2))
}

/// Transport weights of each cell for one step, labelled by the cell that
/// gives mass: cell `j+1/2` (nodes `x_j`, `x_{j+1}`) keeps `stay[j]·τ` of its
/// content and sends `to_left[j]·τ`, `to_right[j]·τ` to its neighbours.
///
/// With `c = 1/(8τ)` and `κ = 4τ/h`:
/// `to_right = c(1 + κα_{j+1})`, `stay = c(6 + κα_j − κα_{j+1})`,
/// `to_left = c(1 − κα_j)`, so the three sum to `1/τ` for every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvectionCoeffs {
    pub to_left: Vec<f64>,
    pub stay: Vec<f64>,
    pub to_right: Vec<f64>,
}

impl AdvectionCoeffs {
    /// `alpha` is a node row of length `N+1` with zero end values.
    pub fn new(alpha: &[f64], grid: &Grid) -> Self {
        let n = grid.cells();
        debug_assert_eq!(alpha.len(), n + 1);
        let c = 1.0 / (8.0 * grid.tau());
        let kappa = 4.0 * grid.tau() / grid.h();
        let mut coeffs = AdvectionCoeffs {
            to_left: Vec::with_capacity(n),
            stay: Vec::with_capacity(n),
            to_right: Vec::with_capacity(n),
        };
        for j in 0..n {
            let (left, right) = (kappa * alpha[j], kappa * alpha[j + 1]);
            coeffs.to_left.push(c * (1.0 - left));
            coeffs.stay.push(c * (6.0 + left - right));
            coeffs.to_right.push(c * (1.0 + right));
        }
        coeffs
    }

    /// First cell with a negative weight, if any.
    pub fn first_negative(&self) -> Option<usize> {
        (0..self.stay.len()).find(|&j| self.to_left[j] < 0.0 || self.stay[j] < 0.0 || self.to_right[j] < 0.0)
    }

    /// Explicit operator `B`. Mass sent past either wall is reflected back
    /// into the boundary cell, which is the ghost-mirror condition.
    pub fn matrix(&self) -> Tridiagonal {
        let n = self.stay.len();
        let mut diag = self.stay.clone();
        diag[0] += self.to_left[0];
        diag[n - 1] += self.to_right[n - 1];
        Tridiagonal::new(self.to_right[..n - 1].to_vec(), diag, self.to_left[1..].to_vec())
    }
}

/// Reaction terms at one cell, ordered S, I, R, C.
pub fn reaction(m: [f64; 4], p: &EpidemicParams) -> [f64; 4] {
    let [s, i, r, c] = m;
    let infection = p.beta * s * i;
    let cross = p.beta * c * i;
    [
        -infection + p.mu * c,
        infection + p.epsilon * cross - p.gamma * i,
        (1.0 - p.epsilon) * cross + p.gamma * i - p.delta * r,
        p.delta * r - cross - p.mu * c,
    ]
}

/// Row-wise [`reaction`].
pub fn reaction_terms(rows: [&[f64]; 4], p: &EpidemicParams) -> PerGroup<Vec<f64>> {
    let n = rows[0].len();
    let mut out = PerGroup::splat(vec![0.0; n]);
    for j in 0..n {
        let f = reaction([rows[0][j], rows[1][j], rows[2][j], rows[3][j]], p);
        for g in GroupId::ALL {
            out[g][j] = f[g.index()];
        }
    }
    out
}

/// First node of `alpha` violating `τ|α| ≤ h/4`.
pub fn advection_violation(alpha: &[f64], grid: &Grid) -> Option<(usize, f64)> {
    let limit = grid.advection_limit() * (1.0 + CFL_SLACK);
    alpha.iter().enumerate().find(|(_, a)| a.is_nan() || a.abs() > limit).map(|(j, &a)| (j, a))
}

/// Control that broke `τ|α| ≤ h/4` during a run under [`CflPolicy::Warn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectionViolation {
    pub group: GroupId,
    pub step: usize,
    pub node: usize,
    pub alpha: f64,
}

/// Densities at one layer together with the reaction terms that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub rows: PerGroup<Vec<f64>>,
    pub reaction: PerGroup<Vec<f64>>,
    pub violations: Vec<AdvectionViolation>,
}

/// Advances all groups from layer `k-1` to layer `k` using the effective
/// controls of layer `k`.
#[allow(clippy::too_many_arguments)]
pub fn step(
    prev: [&[f64]; 4],
    alpha: [&[f64]; 4],
    diffusion: &PerGroup<DiffusionMatrix>,
    params: &EpidemicParams,
    grid: &Grid,
    k: usize,
    policy: CflPolicy,
) -> Result<StepOutput> {
    let n = grid.cells();
    let mut violations = Vec::new();
    for g in GroupId::ALL {
        if let Some((node, a)) = advection_violation(alpha[g.index()], grid) {
            let violation = AdvectionViolation { group: g, step: k, node, alpha: a };
            match policy {
                CflPolicy::Strict => {
                    return Err(Error::AdvectionCfl {
                        group: g,
                        step: k,
                        node,
                        alpha: a,
                        limit: grid.advection_limit(),
                    })
                }
                CflPolicy::Warn => violations.push(violation),
            }
        }
    }

    let reaction = reaction_terms(prev, params);
    let mut rows = PerGroup::splat(vec![0.0; n]);
    for g in GroupId::ALL {
        let b = AdvectionCoeffs::new(alpha[g.index()], grid).matrix();
        let out = &mut rows[g];
        b.apply(prev[g.index()], out);
        for (o, f) in out.iter_mut().zip(&reaction[g]) {
            *o += f;
        }
        diffusion[g].solve_in_place(out);
        for (j, &v) in out.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "density", group: Some(g), step: k, cell: j });
            }
            if v < NEGATIVE_FLOOR {
                return Err(Error::NegativeDensity { group: g, step: k, cell: j, value: v });
            }
        }
    }
    Ok(StepOutput { rows, reaction, violations })
}

/// Forward run with its conservation and positivity logs.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRun {
    pub density: DensityField,
    /// Total mass per layer.
    pub total_mass: Vec<f64>,
    /// Smallest density over all groups per layer.
    pub min_density: Vec<f64>,
    /// `‖f^i(t_k)‖_{1,h}` for `k = 0..M-1`.
    pub reaction_l1: PerGroup<Vec<f64>>,
    pub violations: Vec<AdvectionViolation>,
}

impl ForwardRun {
    /// `max_k |mass(k) − mass(0)| / mass(0)` (absolute when the mass is 0).
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.total_mass[0];
        let scale = if m0 > 0.0 { m0 } else { 1.0 };
        self.total_mass.iter().map(|m| (m - m0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.min_density.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Applies [`step`] for `k = 1..=M` starting from `initial`.
pub fn run_forward(
    grid: &Grid,
    params: &EpidemicParams,
    diffusion: &PerGroup<DiffusionMatrix>,
    initial: &PerGroup<Vec<f64>>,
    control: &ControlField,
    policy: CflPolicy,
) -> Result<ForwardRun> {
    let n = grid.cells();
    for row in &initial.0 {
        if row.len() != n {
            return Err(Error::ShapeMismatch { what: "initial density row", expected: n, found: row.len() });
        }
    }
    let mut density = DensityField::zeros(grid);
    for g in GroupId::ALL {
        density.groups[g].row_mut(0).copy_from_slice(&initial[g]);
    }
    let h = grid.h();
    let mut total_mass = Vec::with_capacity(grid.steps() + 1);
    let mut min_density = Vec::with_capacity(grid.steps() + 1);
    let mut reaction_l1 = PerGroup::splat(Vec::with_capacity(grid.steps()));
    let mut violations = Vec::new();
    total_mass.push(density.total_mass(0, h));
    min_density.push(layer_min(&density, 0));

    for k in 1..=grid.steps() {
        let out = {
            let prev = [
                density.row(GroupId::S, k - 1),
                density.row(GroupId::I, k - 1),
                density.row(GroupId::R, k - 1),
                density.row(GroupId::C, k - 1),
            ];
            let alpha = [
                control.effective[GroupId::S].row(k),
                control.effective[GroupId::I].row(k),
                control.effective[GroupId::R].row(k),
                control.effective[GroupId::C].row(k),
            ];
            step(prev, alpha, diffusion, params, grid, k, policy)?
        };
        for g in GroupId::ALL {
            density.groups[g].row_mut(k).copy_from_slice(&out.rows[g]);
            reaction_l1[g].push(l1_norm(&out.reaction[g], h));
        }
        violations.extend(out.violations);
        total_mass.push(density.total_mass(k, h));
        min_density.push(layer_min(&density, k));
    }
    Ok(ForwardRun { density, total_mass, min_density, reaction_l1, violations })
}

fn layer_min(density: &DensityField, k: usize) -> f64 {
    GroupId::ALL
        .iter()
        .flat_map(|&g| density.row(g, k).iter().copied())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::GroupCosts;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    const DEC: EpidemicParams = EpidemicParams { beta: 0.4145, gamma: 0.4257, delta: 0.0889, mu: 0.0267, epsilon: 0.0928 };
    const NONE: EpidemicParams = EpidemicParams { beta: 0.0, gamma: 0.0, delta: 0.0, mu: 0.0, epsilon: 0.0 };

    fn mfg(sigma2: f64) -> MfgParams {
        MfgParams { groups: PerGroup::splat(GroupCosts { sigma2, c1: 6.0, c2: 0.9, c3: 0.7 }), terminal_cost: true }
    }

    #[test]
    fn cfl_examples() {
        let grid = Grid::new(50, 200, 100.0).unwrap();
        let r = check_cfl(&grid, &mfg(0.2), 0.0);
        let d = r.diffusion[GroupId::S];
        assert!((d.lhs - 0.0004).abs() < 1e-15 && (d.rhs - 0.4).abs() < 1e-15 && d.passed());

        let r = check_cfl(&grid, &mfg(0.2), 0.02);
        assert_eq!(r.advection.lhs, 0.01);
        assert_eq!(r.advection.rhs, 0.005);
        assert!(!r.advection.passed());
        assert!(r.advection.margin() < 0.0);
        assert!(!r.passed());

        let r = check_cfl(&grid, &mfg(0.0), 0.0);
        assert!(r.diffusion.0.iter().all(|c| !c.passed()));
    }

    #[test]
    fn zero_advection_weights() {
        let grid = Grid::new(50, 200, 100.0).unwrap();
        let coeffs = AdvectionCoeffs::new(&[0.0; 51], &grid);
        for j in 0..50 {
            assert_eq!(coeffs.to_left[j], 0.25);
            assert_eq!(coeffs.to_right[j], 0.25);
            assert_eq!(coeffs.stay[j], 1.5);
            assert_eq!(coeffs.to_left[j] + coeffs.stay[j] + coeffs.to_right[j], 2.0);
        }
    }

    #[test]
    fn limit_speed_at_one_node() {
        // α_j = h/(4τ) at node j: the cell to its left sends 2/(8τ) across it
        // and the cell to its right sends nothing back.
        let grid = Grid::new(50, 200, 100.0).unwrap();
        let mut alpha = [0.0; 51];
        let j = 20;
        alpha[j] = grid.h() / (4.0 * grid.tau());
        let c = AdvectionCoeffs::new(&alpha, &grid);
        let tau = grid.tau();
        assert!((c.to_right[j - 1] - 2.0 / (8.0 * tau)).abs() < 1e-15);
        assert!(c.to_left[j].abs() < 1e-15);
        assert!(c.first_negative().is_none());
        alpha[j] *= 1.5;
        assert_eq!(AdvectionCoeffs::new(&alpha, &grid).first_negative(), Some(j));
    }

    #[test]
    fn diffusion_matrix_entries() {
        let grid = Grid::new(50, 200, 100.0).unwrap();
        let a = DiffusionMatrix::new(&grid, 0.2).unwrap();
        assert!((a.matrix.diag[10] - 501.5).abs() < 1e-10);
        assert!((a.off_diagonal() + 249.75).abs() < 1e-10);
        assert!((a.matrix.diag[0] - (1.75 + 250.0)).abs() < 1e-10);
        for i in 0..50 {
            assert!((a.matrix.row_sum(i) - 2.0).abs() < 1e-12);
        }
        assert!(a.is_m_matrix());

        let degenerate = DiffusionMatrix::new(&grid, 0.0).unwrap();
        assert!(!degenerate.is_m_matrix());
        assert!(degenerate.off_diagonal() > 0.0);
        assert!(matches!(diffusion_matrices(&grid, &mfg(0.0)), Err(Error::DiffusionCfl { .. })));
    }

    #[test]
    fn reaction_examples() {
        let zero = reaction([0.7, 0.0, 0.0, 0.0], &DEC);
        assert!(zero.iter().all(|&v| v == 0.0));
        let f = reaction([1.0, 1.0, 0.0, 0.0], &DEC);
        assert!((f[0] + 0.4145).abs() < 1e-15);
        assert!((f[1] - (0.4145 - 0.4257)).abs() < 1e-15);
        assert!((f[2] - 0.4257).abs() < 1e-15);
        assert_eq!(f[3], 0.0);
    }

    fn uniform_field(grid: &Grid, rows: PerGroup<Vec<f64>>) -> PerGroup<Vec<f64>> {
        assert!(rows.0.iter().all(|r| r.len() == grid.cells()));
        rows
    }

    #[test]
    fn uniform_state_is_fixed_point_without_reactions() {
        let grid = Grid::new(20, 10, 10.0).unwrap();
        let diffusion = diffusion_matrices(&grid, &mfg(0.2)).unwrap();
        let init = uniform_field(&grid, PerGroup::splat(vec![0.25; 20]));
        let run = run_forward(&grid, &NONE, &diffusion, &init, &ControlField::zeros(&grid), CflPolicy::Strict).unwrap();
        for k in 0..=10 {
            for g in GroupId::ALL {
                for &v in run.density.row(g, k) {
                    assert!((v - 0.25).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_mass_stays_zero() {
        let grid = Grid::new(20, 10, 10.0).unwrap();
        let diffusion = diffusion_matrices(&grid, &mfg(0.2)).unwrap();
        let init = PerGroup::splat(vec![0.0; 20]);
        let run = run_forward(&grid, &DEC, &diffusion, &init, &ControlField::zeros(&grid), CflPolicy::Strict).unwrap();
        assert!(run.density.groups.0.iter().all(|l| l.as_slice().iter().all(|&v| v == 0.0)));
        assert_eq!(run.max_mass_drift(), 0.0);
    }

    #[test]
    fn cosine_mode_decays_like_heat_equation() {
        let sigma2 = 0.2;
        let grid = Grid::new(40, 400, 1.0).unwrap();
        let diffusion = diffusion_matrices(&grid, &mfg(sigma2)).unwrap();
        let row: Vec<f64> = grid.cell_centers().map(|x| 1.0 + libm::cos(PI * x)).collect();
        let init = PerGroup::splat(row);
        let run = run_forward(&grid, &NONE, &diffusion, &init, &ControlField::zeros(&grid), CflPolicy::Strict).unwrap();
        let t = grid.horizon();
        let decay = libm::exp(-sigma2 * PI * PI * t / 2.0);
        let err = grid
            .cell_centers()
            .zip(run.density.row(GroupId::S, grid.steps()))
            .map(|(x, v)| (v - (1.0 + decay * libm::cos(PI * x))).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "max error {err}");
    }

    #[test]
    fn strict_policy_refuses_fast_controls() {
        let grid = Grid::new(20, 10, 10.0).unwrap();
        let diffusion = diffusion_matrices(&grid, &mfg(0.2)).unwrap();
        let init = PerGroup::splat(vec![0.25; 20]);
        let mut control = ControlField::zeros(&grid);
        control.effective[GroupId::R].row_mut(3)[5] = 1.0;
        let err = run_forward(&grid, &NONE, &diffusion, &init, &control, CflPolicy::Strict).unwrap_err();
        assert_eq!(
            err,
            Error::AdvectionCfl { group: GroupId::R, step: 3, node: 5, alpha: 1.0, limit: grid.advection_limit() }
        );
    }

    #[test]
    fn warn_policy_aborts_on_negative_density() {
        let grid = Grid::new(20, 10, 10.0).unwrap();
        let diffusion = diffusion_matrices(&grid, &mfg(0.2)).unwrap();
        let mut row = vec![0.0; 20];
        row[5] = 1.0;
        let init = PerGroup::splat(row);
        let mut control = ControlField::zeros(&grid);
        for k in 1..=10 {
            control.effective[GroupId::S].row_mut(k)[6] = -5.0;
        }
        let err = run_forward(&grid, &NONE, &diffusion, &init, &control, CflPolicy::Warn).unwrap_err();
        assert!(matches!(err, Error::NegativeDensity { group: GroupId::S, .. }), "{err:?}");
    }

    proptest! {
        #[test]
        fn weights_sum_and_b_column_sums(
            raw in proptest::collection::vec(-1.0f64..=1.0, 9),
        ) {
            let grid = Grid::new(10, 20, 10.0).unwrap();
            let limit = grid.advection_limit();
            let mut alpha = vec![0.0; 11];
            for (j, r) in raw.iter().enumerate() {
                alpha[j + 1] = r * limit;
            }
            let c = AdvectionCoeffs::new(&alpha, &grid);
            let inv_tau = 1.0 / grid.tau();
            prop_assert!(c.first_negative().is_none());
            let b = c.matrix();
            for j in 0..10 {
                prop_assert!((c.to_left[j] + c.stay[j] + c.to_right[j] - inv_tau).abs() <= 8.0 * f64::EPSILON * inv_tau);
                prop_assert!((b.column_sum(j) - inv_tau).abs() <= 8.0 * f64::EPSILON * inv_tau);
            }
        }

        #[test]
        fn reaction_terms_cancel(s in 0.0f64..5.0, i in 0.0f64..5.0, r in 0.0f64..5.0, c in 0.0f64..5.0) {
            let f = reaction([s, i, r, c], &DEC);
            let scale = 1.0 + s * i + c * i + r + c + i;
            prop_assert!(f.iter().sum::<f64>().abs() <= 16.0 * f64::EPSILON * scale);
        }
    }
}
