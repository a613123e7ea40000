//! Initial densities: a Gaussian bump plus two quadratic corrections that
//! cancel its slope at `x = 0` and `x = 1`, normalised to a prescribed mass.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Unnormalised initial profile centred at `center` with width `width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    center: f64,
    width: f64,
    right_correction: f64,
    left_correction: f64,
}

impl BumpProfile {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::param("sc", width, "width must be > 0"));
        }
        if !(0.0..=1.0).contains(&center) {
            return Err(Error::param("xc", center, "centre out of [0,1]"));
        }
        let norm = 2.0 * width * width * width * libm::sqrt(2.0 * PI);
        let right = 1.0 - center;
        Ok(BumpProfile {
            center,
            width,
            right_correction: libm::exp(-right * right / (2.0 * width * width)) * right / norm,
            left_correction: libm::exp(-center * center / (2.0 * width * width)) * center / norm,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.center;
        let gauss = libm::exp(-d * d / (2.0 * self.width * self.width)) / (self.width * libm::sqrt(2.0 * PI));
        gauss + self.right_correction * x * x + self.left_correction * (1.0 - x) * (1.0 - x)
    }

    /// Analytic `d/dx` of [`eval`](Self::eval).
    pub fn slope(&self, x: f64) -> f64 {
        let d = x - self.center;
        let w2 = self.width * self.width;
        let gauss = libm::exp(-d * d / (2.0 * w2)) / (self.width * libm::sqrt(2.0 * PI));
        -d / w2 * gauss + 2.0 * self.right_correction * x - 2.0 * self.left_correction * (1.0 - x)
    }
}

/// Initial row with the mass removed by clamping (zero unless the profile
/// dipped below zero).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialRow {
    pub values: Vec<f64>,
    pub clamped_mass: f64,
}

/// Samples the bump at the cell centres and scales it so that the midpoint
/// integral equals `amount`.
pub fn initial_distribution(amount: f64, center: f64, width: f64, grid: &Grid) -> Result<InitialRow> {
    if !(amount.is_finite() && amount >= 0.0) {
        return Err(Error::param("A", amount, "initial fraction must be >= 0"));
    }
    let profile = BumpProfile::new(center, width)?;
    let h = grid.h();
    let mut values: Vec<f64> = grid.cell_centers().map(|x| profile.eval(x)).collect();

    let mut clamped = 0.0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            clamped -= *v * h;
            *v = 0.0;
        }
    }
    let normalisation: f64 = values.iter().sum::<f64>() * h;
    if amount == 0.0 || normalisation == 0.0 {
        values.iter_mut().for_each(|v| *v = 0.0);
        return Ok(InitialRow { values, clamped_mass: clamped * amount });
    }
    let scale = amount / normalisation;
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(InitialRow { values, clamped_mass: clamped * scale })
}

/// Spatially uniform row of the given mass.
pub fn uniform_row(amount: f64, grid: &Grid) -> Vec<f64> {
    alloc::vec![amount; grid.cells()]
}
