//! TOML scenario files.
//!
//! ```toml
//! preset = "Dec2020"            # optional; expanded first, then overridden
//!
//! [epidemic]                    # rates per day
//! beta = 0.4145
//! gamma = 0.4257
//! delta = 0.0889
//! mu = 0.0267
//! epsilon = 0.0928
//!
//! [mfg]                         # shared by all groups unless overridden
//! sigma2 = 0.5
//! c1 = 6.0
//! c2 = 0.9
//! c3 = 0.7
//! terminal_cost = true
//!
//! [mfg.I]
//! c1 = 2.0
//!
//! [grid]
//! N = 50                        # cells on [0, 1]
//! M = 200                       # time steps
//! T = 100.0                     # horizon in days
//!
//! [init.S]                      # bump: fraction A, centre xc, width sc
//! A = 0.991199
//! xc = 0.8
//! sc = 0.1
//! # or: density = [ ... ]       # N cell values
//!
//! [solver]
//! tol_rel_J = 1e-6
//! max_iters = 500
//! relaxation = 1.0
//! external_control = false
//! cfl_policy = "strict"         # or "warn"
//! control_bound = "cfl"         # or "none"
//!
//! [output]
//! snapshot_days = [30.0, 60.0]
//! population = 2800000.0
//! binary_dump = false
//! ```

use serde::{Deserialize, Serialize};

use sirc_mfg_core::fpk::CflPolicy;
use sirc_mfg_core::scenario::{preset_costs, OutputSpec, DEFAULT_CELLS, DEFAULT_HORIZON, DEFAULT_STEPS};
use sirc_mfg_core::solver::ControlBound;
use sirc_mfg_core::{
    EpidemicParams, GroupCosts, GroupId, InitialCondition, InitialShape, MfgParams, PerGroup, Period, Scenario,
    SolverOptions,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epidemic: Option<EpidemicSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mfg: Option<MfgSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicSection {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub mu: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupCostSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfgSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_cost: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(rename = "S", skip_serializing_if = "Option::is_none")]
    pub s: Option<GroupCostSection>,
    #[serde(rename = "I", skip_serializing_if = "Option::is_none")]
    pub i: Option<GroupCostSection>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<GroupCostSection>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<GroupCostSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitGroup {
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub amount: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(rename = "S", skip_serializing_if = "Option::is_none")]
    pub s: Option<InitGroup>,
    #[serde(rename = "I", skip_serializing_if = "Option::is_none")]
    pub i: Option<InitGroup>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<InitGroup>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<InitGroup>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "tol_rel_J", skip_serializing_if = "Option::is_none")]
    pub tol_rel_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external_control: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl_policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_bound: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_days: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary_dump: Option<bool>,
}

impl MfgSection {
    fn shared(&self) -> GroupCostSection {
        GroupCostSection { sigma2: self.sigma2, c1: self.c1, c2: self.c2, c3: self.c3 }
    }

    fn group(&self, g: GroupId) -> Option<&GroupCostSection> {
        match g {
            GroupId::S => self.s.as_ref(),
            GroupId::I => self.i.as_ref(),
            GroupId::R => self.r.as_ref(),
            GroupId::C => self.c.as_ref(),
        }
    }
}

impl InitSection {
    fn group(&self, g: GroupId) -> Option<&InitGroup> {
        match g {
            GroupId::S => self.s.as_ref(),
            GroupId::I => self.i.as_ref(),
            GroupId::R => self.r.as_ref(),
            GroupId::C => self.c.as_ref(),
        }
    }

    fn is_empty(&self) -> bool {
        GroupId::ALL.iter().all(|&g| self.group(g).is_none())
    }
}

pub fn parse_cfl_policy(s: &str) -> Result<CflPolicy> {
    match s {
        "strict" => Ok(CflPolicy::Strict),
        "warn" => Ok(CflPolicy::Warn),
        _ => Err(CliError::Schema(format!("solver.cfl_policy: expected \"strict\" or \"warn\", got {s:?}"))),
    }
}

pub fn cfl_policy_name(p: CflPolicy) -> &'static str {
    match p {
        CflPolicy::Strict => "strict",
        CflPolicy::Warn => "warn",
    }
}

pub fn parse_control_bound(s: &str) -> Result<ControlBound> {
    ControlBound::parse(s)
        .ok_or_else(|| CliError::Schema(format!("solver.control_bound: expected \"cfl\" or \"none\", got {s:?}")))
}

pub fn parse_period(s: &str) -> Result<Period> {
    Period::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Period::ALL.iter().map(|p| p.name()).collect();
        CliError::Schema(format!("unknown preset {s:?}; known presets: {}", names.join(", ")))
    })
}

/// Collects missing keys so that one error can name all of them.
struct Required(Vec<String>);

impl Required {
    fn get<T: Copy + Default>(&mut self, key: impl FnOnce() -> String, values: &[Option<T>]) -> T {
        match values.iter().flatten().next() {
            Some(v) => *v,
            None => {
                self.0.push(key());
                T::default()
            }
        }
    }
}

/// Resolves a parsed file into a validated [`Scenario`]. `predecessor`
/// replaces the initial data (chained runs).
pub fn resolve(file: &ScenarioFile, predecessor: Option<PerGroup<Vec<f64>>>) -> Result<Scenario> {
    let period = file.preset.as_deref().map(parse_period).transpose()?;
    let mut req = Required(Vec::new());

    let ep = file.epidemic.clone().unwrap_or_default();
    let base_ep = period.map(Period::epidemic);
    let epidemic = EpidemicParams {
        beta: req.get(|| "epidemic.beta".into(), &[ep.beta, base_ep.map(|p| p.beta)]),
        gamma: req.get(|| "epidemic.gamma".into(), &[ep.gamma, base_ep.map(|p| p.gamma)]),
        delta: req.get(|| "epidemic.delta".into(), &[ep.delta, base_ep.map(|p| p.delta)]),
        mu: req.get(|| "epidemic.mu".into(), &[ep.mu, base_ep.map(|p| p.mu)]),
        epsilon: req.get(|| "epidemic.epsilon".into(), &[ep.epsilon, base_ep.map(|p| p.epsilon)]),
    };

    let mfg_section = file.mfg.clone().unwrap_or_default();
    let base_mfg = period.map(|p| preset_costs(p.sigma2()));
    let mut cost_gaps = Required(Vec::new());
    let groups = PerGroup::from_fn(|g| {
        let own = mfg_section.group(g).cloned().unwrap_or_default();
        let shared = mfg_section.shared();
        let base = base_mfg.as_ref().map(|m| m.groups[g]);
        let mut get = |k: &str, vals: [Option<f64>; 3]| cost_gaps.get(|| format!("{g}.{k}"), &vals);
        GroupCosts {
            sigma2: get("sigma2", [own.sigma2, shared.sigma2, base.map(|b| b.sigma2)]),
            c1: get("c1", [own.c1, shared.c1, base.map(|b| b.c1)]),
            c2: get("c2", [own.c2, shared.c2, base.map(|b| b.c2)]),
            c3: get("c3", [own.c3, shared.c3, base.map(|b| b.c3)]),
        }
    });
    // A key missing for every group is reported once as the shared key.
    for k in ["sigma2", "c1", "c2", "c3"] {
        let lacking: Vec<GroupId> =
            GroupId::ALL.into_iter().filter(|g| cost_gaps.0.contains(&format!("{g}.{k}"))).collect();
        if lacking.len() == 4 {
            req.0.push(format!("mfg.{k}"));
        } else {
            req.0.extend(lacking.iter().map(|g| format!("mfg.{g}.{k}")));
        }
    }
    let mfg = MfgParams { groups, terminal_cost: mfg_section.terminal_cost.unwrap_or(true) };

    let grid = file.grid.clone().unwrap_or_default();
    let has_preset = period.is_some();
    let cells = req.get(|| "grid.N".into(), &[grid.cells, has_preset.then_some(DEFAULT_CELLS)]);
    let steps = req.get(|| "grid.M".into(), &[grid.steps, has_preset.then_some(DEFAULT_STEPS)]);
    let horizon = req.get(|| "grid.T".into(), &[grid.horizon, has_preset.then_some(DEFAULT_HORIZON)]);

    let initial = resolve_initial(file, period, predecessor, &mut req)?;

    if !req.0.is_empty() {
        return Err(CliError::Schema(format!("missing required keys: {}", req.0.join(", "))));
    }

    let solver = resolve_solver(file.solver.as_ref())?;
    let out = file.output.clone().unwrap_or_default();
    let output = OutputSpec {
        snapshot_days: out.snapshot_days.unwrap_or_default(),
        population: out.population,
        binary_dump: out.binary_dump.unwrap_or(false),
    };
    let scenario = Scenario { epidemic, mfg, cells, steps, horizon, initial: initial.expect("checked above"), solver, output };
    scenario.validate()?;
    Ok(scenario)
}

fn resolve_initial(
    file: &ScenarioFile,
    period: Option<Period>,
    predecessor: Option<PerGroup<Vec<f64>>>,
    req: &mut Required,
) -> Result<Option<InitialCondition>> {
    if let Some(rows) = predecessor {
        return Ok(Some(InitialCondition::Rows(rows)));
    }
    let init = file.init.clone().unwrap_or_default();
    let densities: Vec<bool> = GroupId::ALL
        .iter()
        .map(|&g| init.group(g).is_some_and(|s| s.density.is_some()))
        .collect();
    if densities.iter().any(|&d| d) {
        if !densities.iter().all(|&d| d) {
            return Err(CliError::Schema(
                "init: either every group gives `density` or none does".into(),
            ));
        }
        for g in GroupId::ALL {
            let s = init.group(g).expect("checked above");
            if s.amount.is_some() || s.xc.is_some() || s.sc.is_some() {
                return Err(CliError::Schema(format!("init.{g}: `density` excludes A, xc and sc")));
            }
        }
        return Ok(Some(InitialCondition::Rows(PerGroup::from_fn(|g| {
            init.group(g).and_then(|s| s.density.clone()).expect("checked above")
        }))));
    }
    if init.is_empty() && period == Some(Period::Jul2020) {
        return Err(sirc_mfg_core::Error::MissingPredecessor.into());
    }
    let fractions = period.and_then(Period::initial_fractions);
    let shapes = period.map(Period::shapes);
    let resolved = PerGroup::from_fn(|g| {
        let own = init.group(g).cloned().unwrap_or_default();
        InitialShape {
            amount: req.get(|| format!("init.{g}.A"), &[own.amount, fractions.map(|f| f[g.index()])]),
            center: req.get(|| format!("init.{g}.xc"), &[own.xc, shapes.map(|s| s[g].0)]),
            width: req.get(|| format!("init.{g}.sc"), &[own.sc, shapes.map(|s| s[g].1)]),
        }
    });
    Ok(Some(InitialCondition::Shaped(resolved)))
}

fn resolve_solver(section: Option<&SolverSection>) -> Result<SolverOptions> {
    let d = SolverOptions::default();
    let Some(s) = section else { return Ok(d) };
    Ok(SolverOptions {
        tol_rel_j: s.tol_rel_j.unwrap_or(d.tol_rel_j),
        max_iters: s.max_iters.unwrap_or(d.max_iters),
        relaxation: s.relaxation.unwrap_or(d.relaxation),
        external_control: s.external_control.unwrap_or(d.external_control),
        cfl_policy: s.cfl_policy.as_deref().map(parse_cfl_policy).transpose()?.unwrap_or(d.cfl_policy),
        control_bound: s.control_bound.as_deref().map(parse_control_bound).transpose()?.unwrap_or(d.control_bound),
    })
}

pub fn parse_file(text: &str) -> Result<ScenarioFile> {
    toml::from_str(text).map_err(|e| CliError::Schema(format!("scenario file: {}", e.to_string().trim_end())))
}

/// Parses and resolves scenario text.
pub fn parse_scenario(text: &str, predecessor: Option<PerGroup<Vec<f64>>>) -> Result<Scenario> {
    resolve(&parse_file(text)?, predecessor)
}

/// Fully explicit file for a scenario; no preset reference.
pub fn to_file(s: &Scenario) -> ScenarioFile {
    let cost = |c: &GroupCosts| GroupCostSection { sigma2: Some(c.sigma2), c1: Some(c.c1), c2: Some(c.c2), c3: Some(c.c3) };
    let init_group = |g: GroupId| -> InitGroup {
        match &s.initial {
            InitialCondition::Shaped(shapes) => InitGroup {
                amount: Some(shapes[g].amount),
                xc: Some(shapes[g].center),
                sc: Some(shapes[g].width),
                density: None,
            },
            InitialCondition::Rows(rows) => InitGroup { density: Some(rows[g].clone()), ..Default::default() },
        }
    };
    ScenarioFile {
        preset: None,
        epidemic: Some(EpidemicSection {
            beta: Some(s.epidemic.beta),
            gamma: Some(s.epidemic.gamma),
            delta: Some(s.epidemic.delta),
            mu: Some(s.epidemic.mu),
            epsilon: Some(s.epidemic.epsilon),
        }),
        mfg: Some(MfgSection {
            terminal_cost: Some(s.mfg.terminal_cost),
            sigma2: None,
            c1: None,
            c2: None,
            c3: None,
            s: Some(cost(&s.mfg.groups[GroupId::S])),
            i: Some(cost(&s.mfg.groups[GroupId::I])),
            r: Some(cost(&s.mfg.groups[GroupId::R])),
            c: Some(cost(&s.mfg.groups[GroupId::C])),
        }),
        grid: Some(GridSection { cells: Some(s.cells), steps: Some(s.steps), horizon: Some(s.horizon) }),
        init: Some(InitSection {
            s: Some(init_group(GroupId::S)),
            i: Some(init_group(GroupId::I)),
            r: Some(init_group(GroupId::R)),
            c: Some(init_group(GroupId::C)),
        }),
        solver: Some(SolverSection {
            tol_rel_j: Some(s.solver.tol_rel_j),
            max_iters: Some(s.solver.max_iters),
            relaxation: Some(s.solver.relaxation),
            external_control: Some(s.solver.external_control),
            cfl_policy: Some(cfl_policy_name(s.solver.cfl_policy).into()),
            control_bound: Some(s.solver.control_bound.name().into()),
        }),
        output: Some(OutputSection {
            snapshot_days: Some(s.output.snapshot_days.clone()),
            population: s.output.population,
            binary_dump: Some(s.output.binary_dump),
        }),
    }
}

pub fn to_toml(s: &Scenario) -> String {
    toml::to_string(&to_file(s)).expect("scenario serialises to TOML")
}
