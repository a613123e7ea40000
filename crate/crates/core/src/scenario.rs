//! Problem instances and the built-in Novosibirsk-region presets.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::initial::initial_distribution;
use crate::params::{EpidemicParams, GroupCosts, GroupId, MfgParams, PerGroup};
use crate::solver::SolverOptions;

/// Initial bump for one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialShape {
    /// Fraction of the total population, `A_i`.
    pub amount: f64,
    /// Bump centre `x^c_i`.
    pub center: f64,
    /// Bump width `σ^c_i`.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Shaped(PerGroup<InitialShape>),
    /// Rows carried over pointwise, e.g. the final layer of a previous run.
    Rows(PerGroup<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    /// Days at which full field snapshots are written.
    pub snapshot_days: Vec<f64>,
    /// Population size for converting fractions to head counts.
    pub population: Option<f64>,
    /// Write little-endian binary dumps of the density and value fields.
    pub binary_dump: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub epidemic: EpidemicParams,
    pub mfg: MfgParams,
    pub cells: usize,
    pub steps: usize,
    pub horizon: f64,
    pub initial: InitialCondition,
    pub solver: SolverOptions,
    pub output: OutputSpec,
}

impl Scenario {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.cells, self.steps, self.horizon)
    }

    /// Checks every invariant of the scenario's parts.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.epidemic.validate()?;
        self.mfg.validate()?;
        self.solver.validate()?;
        match &self.initial {
            InitialCondition::Shaped(shapes) => {
                let total: f64 = shapes.0.iter().map(|s| s.amount).sum();
                if total > 1.0 + 1e-9 {
                    return Err(Error::param("sum of A_i", total, "initial fractions exceed 1"));
                }
                for (g, s) in shapes.iter() {
                    if !(s.width.is_finite() && s.width > 0.0) {
                        return Err(Error::param(alloc::format!("sc[{g}]"), s.width, "width must be > 0"));
                    }
                    if !(0.0..=1.0).contains(&s.center) {
                        return Err(Error::param(alloc::format!("xc[{g}]"), s.center, "centre out of [0,1]"));
                    }
                    if !(s.amount.is_finite() && s.amount >= 0.0) {
                        return Err(Error::param(alloc::format!("A[{g}]"), s.amount, "initial fraction must be >= 0"));
                    }
                }
            }
            InitialCondition::Rows(rows) => {
                for (g, row) in rows.iter() {
                    if row.len() != grid.cells() {
                        return Err(Error::ShapeMismatch {
                            what: "initial density row",
                            expected: grid.cells(),
                            found: row.len(),
                        });
                    }
                    if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                        return Err(Error::param(alloc::format!("initial m[{g}]"), *v, "density must be finite and >= 0"));
                    }
                }
            }
        }
        if let Some(p) = self.output.population {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::param("population", p, "must be > 0"));
            }
        }
        Ok(())
    }

    /// Initial density rows on this scenario's grid.
    pub fn initial_rows(&self) -> Result<PerGroup<Vec<f64>>> {
        let grid = self.grid()?;
        match &self.initial {
            InitialCondition::Shaped(shapes) => shapes.try_map(|_, s| {
                initial_distribution(s.amount, s.center, s.width, &grid).map(|row| row.values)
            }),
            InitialCondition::Rows(rows) => Ok(rows.clone()),
        }
    }
}

/// Built-in scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    /// 05/01/20 to 06/30/20.
    May2020,
    /// 06/30/20 to 08/08/20, started from the final May2020 state.
    Jul2020,
    /// 12/01/20 to 03/10/21 with the default per-group bumps.
    Dec2020,
    /// Dec2020 with every bump at `x^c = 0.2`, `σ^c = 0.1`.
    Dec2020Case2,
    /// Dec2020 with every bump at `x^c = 0.5`, `σ^c = 0.2`.
    Dec2020Case3,
}

impl Period {
    pub const ALL: [Period; 5] =
        [Period::May2020, Period::Jul2020, Period::Dec2020, Period::Dec2020Case2, Period::Dec2020Case3];

    pub fn name(self) -> &'static str {
        match self {
            Period::May2020 => "May2020",
            Period::Jul2020 => "Jul2020",
            Period::Dec2020 => "Dec2020",
            Period::Dec2020Case2 => "Dec2020_case2",
            Period::Dec2020Case3 => "Dec2020_case3",
        }
    }

    pub fn parse(s: &str) -> Option<Period> {
        Period::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn needs_predecessor(self) -> bool {
        self == Period::Jul2020
    }

    pub fn epidemic(self) -> EpidemicParams {
        match self {
            Period::May2020 => {
                EpidemicParams { beta: 0.2821, gamma: 0.2530, delta: 0.3657, mu: 0.0060, epsilon: 0.0361 }
            }
            Period::Jul2020 => {
                EpidemicParams { beta: 0.3253, gamma: 0.3466, delta: 0.0794, mu: 0.0376, epsilon: 0.1446 }
            }
            Period::Dec2020 | Period::Dec2020Case2 | Period::Dec2020Case3 => {
                EpidemicParams { beta: 0.4145, gamma: 0.4257, delta: 0.0889, mu: 0.0267, epsilon: 0.0928 }
            }
        }
    }

    /// Initial fractions `(A_S, A_I, A_R, A_C)`; `None` for the chained period.
    pub fn initial_fractions(self) -> Option<[f64; 4]> {
        match self {
            Period::May2020 => Some([0.999757, 0.000204, 0.000039, 0.0]),
            Period::Jul2020 => None,
            Period::Dec2020 | Period::Dec2020Case2 | Period::Dec2020Case3 => {
                Some([0.991199, 0.001505, 0.006937, 0.000359])
            }
        }
    }

    /// Bump `(x^c, σ^c)` per group.
    pub fn shapes(self) -> PerGroup<(f64, f64)> {
        match self {
            Period::Dec2020Case2 => PerGroup::splat((0.2, 0.1)),
            Period::Dec2020Case3 => PerGroup::splat((0.5, 0.2)),
            _ => DEFAULT_SHAPES,
        }
    }

    pub fn sigma2(self) -> f64 {
        match self {
            Period::May2020 | Period::Jul2020 => 0.2,
            _ => 0.5,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Default bump centres and widths for S, I, R, C.
pub const DEFAULT_SHAPES: PerGroup<(f64, f64)> = PerGroup([(0.8, 0.1), (0.2, 0.1), (0.7, 0.2), (0.3, 0.2)]);

pub const DEFAULT_HORIZON: f64 = 100.0;
pub const DEFAULT_CELLS: usize = 50;
pub const DEFAULT_STEPS: usize = 200;

/// Cost constants shared by all presets.
pub fn preset_costs(sigma2: f64) -> MfgParams {
    MfgParams {
        groups: PerGroup::from_fn(|g| GroupCosts {
            sigma2,
            c1: if g == GroupId::I { 2.0 } else { 6.0 },
            c2: 0.9,
            c3: 0.7,
        }),
        terminal_cost: true,
    }
}

/// Builds a preset. The chained period needs the final densities of its
/// predecessor, which are carried over pointwise.
pub fn preset_scenario(period: Period, predecessor: Option<PerGroup<Vec<f64>>>) -> Result<Scenario> {
    let initial = match (period.initial_fractions(), predecessor) {
        (Some(_), Some(rows)) => InitialCondition::Rows(rows),
        (Some(fractions), None) => {
            let shapes = period.shapes();
            InitialCondition::Shaped(PerGroup::from_fn(|g| InitialShape {
                amount: fractions[g.index()],
                center: shapes[g].0,
                width: shapes[g].1,
            }))
        }
        (None, Some(rows)) => InitialCondition::Rows(rows),
        (None, None) => return Err(Error::MissingPredecessor),
    };
    Ok(Scenario {
        epidemic: period.epidemic(),
        mfg: preset_costs(period.sigma2()),
        cells: DEFAULT_CELLS,
        steps: DEFAULT_STEPS,
        horizon: DEFAULT_HORIZON,
        initial,
        solver: SolverOptions::default(),
        output: OutputSpec::default(),
    })
}
