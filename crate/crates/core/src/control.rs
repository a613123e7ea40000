//! Running cost, optimality condition and corrective control.

use crate::error::{Error, Result};
use crate::field::{ControlField, ValueField};
use crate::grid::Grid;
use crate::params::{GroupId, MfgParams};

const DOWN: f64 = 100.0;
const UP: f64 = 20.0;

/// Quartic running cost; leaving an area (α ≤ 0) costs five times more at
/// small speeds than moving in.
pub fn running_cost(alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let k = if alpha <= 0.0 { DOWN } else { UP };
    a2 * (k + a2) / 2.0
}

pub fn marginal_cost(alpha: f64) -> f64 {
    let k = if alpha <= 0.0 { DOWN } else { UP };
    k * alpha + 2.0 * alpha * alpha * alpha
}

/// Root of `marginal_cost(α) = target` by bracketed Newton.
pub fn invert_marginal_cost(target: f64) -> f64 {
    if target == 0.0 || !target.is_finite() {
        return if target.is_nan() { f64::NAN } else if target == 0.0 { 0.0 } else { target.signum() * f64::INFINITY };
    }
    // marginal_cost is at least k·α on the matching half-line, so the root
    // lies between 0 and target/k.
    let k = if target < 0.0 { DOWN } else { UP };
    let (mut lo, mut hi) = if target < 0.0 { (target / k, 0.0) } else { (0.0, target / k) };
    let mut x = (lo + hi) / 2.0;
    for _ in 0..200 {
        let r = marginal_cost(x) - target;
        if r.abs() <= 1e-12 {
            break;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = k + 6.0 * x * x;
        let newton = x - r / slope;
        let next = if newton > lo && newton < hi { newton } else { (lo + hi) / 2.0 };
        if next == x {
            break;
        }
        x = next;
    }
    x
}

/// Corrective control `ρ(α̂)`: only movement into an area (α̂ > 0) is damped.
pub fn rho(alpha_hat: f64, c3: f64) -> f64 {
    if alpha_hat <= 0.0 {
        0.0
    } else {
        -c3 * alpha_hat
    }
}

/// `α̂ + ρ(α̂)`, the advection that actually moves the density, evaluated
/// as `(1 − c3)·α̂` on the positive branch.
pub fn effective(alpha_hat: f64, c3: f64) -> f64 {
    if alpha_hat <= 0.0 {
        alpha_hat
    } else {
        (1.0 - c3) * alpha_hat
    }
}

/// How agents' strategies reach the advection term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlMode {
    /// The strategy is the advection.
    Plain,
    /// The advection is `α̂ + ρ(α̂)` with the given `c3`.
    External(f64),
}

impl ControlMode {
    pub fn new(external: bool, c3: f64) -> Self {
        if external {
            ControlMode::External(c3)
        } else {
            ControlMode::Plain
        }
    }

    pub fn effective(self, alpha_hat: f64) -> f64 {
        match self {
            ControlMode::Plain => alpha_hat,
            ControlMode::External(c3) => effective(alpha_hat, c3),
        }
    }

    /// Slope of the advection in `α̂` on the positive half-line.
    fn positive_slope(self) -> f64 {
        match self {
            ControlMode::Plain => 1.0,
            ControlMode::External(c3) => 1.0 - c3,
        }
    }
}

fn hamiltonian(alpha_hat: f64, z: f64, mode: ControlMode) -> f64 {
    running_cost(alpha_hat) - z * mode.effective(alpha_hat)
}

/// Pointwise minimiser of `F(α̂) − z·(α̂ + ρ(α̂))` over `|α̂| ≤ bound`.
///
/// Each half-line is convex, so its minimiser is the clamped stationary
/// point; the two candidates are then compared (ties go to the non-positive
/// one). Without a bound and with `z` of matching sign this is the root of
/// `F'(α̂) = (1 + ρ'(α̂)) z`.
pub fn minimize_hamiltonian(z: f64, mode: ControlMode, bound: Option<f64>) -> f64 {
    let b = bound.unwrap_or(f64::INFINITY);
    let left = invert_marginal_cost(z.min(0.0)).max(-b);
    let sz = mode.positive_slope() * z;
    let right = if sz > 0.0 { invert_marginal_cost(sz).min(b) } else { 0.0 };
    if right > 0.0 && hamiltonian(right, z, mode) < hamiltonian(left, z, mode) {
        right
    } else {
        left
    }
}

/// Unconstrained optimality solve.
pub fn solve_optimality(z: f64, mode: ControlMode) -> f64 {
    minimize_hamiltonian(z, mode, None)
}

/// Optimality target at interior node `j`: `−(v_{j+1/2} − v_{j−1/2})/h`.
pub fn optimality_target(v: &[f64], j: usize, h: f64) -> f64 {
    -(v[j] - v[j - 1]) / h
}

/// New control from the adjoint values.
///
/// Layers `1..=M`, interior nodes only; layer 0 and the boundary nodes stay
/// zero. The strategy is relaxed, `α̂ ← (1−ω)α̂_old + ω α̂_new`, before the
/// effective advection is formed.
pub fn update_control(
    value: &ValueField,
    previous: &ControlField,
    grid: &Grid,
    mfg: &MfgParams,
    external: bool,
    bound: Option<f64>,
    relaxation: f64,
) -> Result<ControlField> {
    let n = grid.cells();
    let h = grid.h();
    let mut next = ControlField::zeros(grid);
    for g in GroupId::ALL {
        let mode = ControlMode::new(external, mfg.groups[g].c3);
        for k in 1..=grid.steps() {
            let v = value.row(g, k);
            if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { what: "value", group: Some(g), step: k, cell: j });
            }
            let old = previous.strategy[g].row(k);
            let strategy = next.strategy[g].row_mut(k);
            for j in 1..n {
                let solved = minimize_hamiltonian(optimality_target(v, j, h), mode, bound);
                strategy[j] = if relaxation == 1.0 { solved } else { (1.0 - relaxation) * old[j] + relaxation * solved };
            }
            let strategy = next.strategy[g].row(k).to_vec();
            for (e, a) in next.effective[g].row_mut(k).iter_mut().zip(strategy) {
                *e = mode.effective(a);
            }
        }
    }
    Ok(next)
}
