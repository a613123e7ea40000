//! Command-line front end for the SIRC mean-field-game solver: scenario
//! files, presets, run directories and report formats.

pub mod error;
pub mod output;
pub mod schema;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::{json, Value};

use sirc_mfg_core::field::integral;
use sirc_mfg_core::fpk::check_cfl;
use sirc_mfg_core::ode::{integrate_ode, OdeState};
use sirc_mfg_core::scenario::{preset_costs, DEFAULT_CELLS, DEFAULT_HORIZON, DEFAULT_STEPS};
use sirc_mfg_core::{solve, Grid, GroupId, InitialCondition, PerGroup, Period, Scenario};

use crate::error::{CliError, Result};
use crate::schema::{parse_cfl_policy, parse_control_bound, parse_file, parse_period, resolve, ScenarioFile};

#[derive(Debug, Parser)]
#[command(name = "sirc-mfg", version, about = "Mean-field-game SIRC epidemic solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the SIRC ODE baseline with RK4.
    SimulateOde(OdeArgs),
    /// Solve the mean-field game and write a run directory.
    SimulateMfg(MfgArgs),
    /// Check a scenario and its CFL conditions without running it.
    Validate(ScenarioArgs),
    /// List the built-in presets as JSON.
    Presets,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["preset", "scenario"])))]
pub struct ScenarioArgs {
    /// Built-in preset (see `presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML scenario file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Start from the final densities of a previous run (`final_state.json`).
    #[arg(long)]
    pub init_from: Option<PathBuf>,
    /// Number of cells.
    #[arg(long = "N")]
    pub cells: Option<usize>,
    /// Number of time steps.
    #[arg(long = "M")]
    pub steps: Option<usize>,
    /// Horizon in days.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Diffusion sigma^2 for every group.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Damp movement into areas by the corrective control.
    #[arg(long)]
    pub external_control: bool,
    /// Relative tolerance on the objective.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Relaxation factor in (0, 1].
    #[arg(long)]
    pub relaxation: Option<f64>,
    /// `strict` or `warn`.
    #[arg(long)]
    pub cfl_policy: Option<String>,
    /// `cfl` or `none`.
    #[arg(long)]
    pub control_bound: Option<String>,
    /// Population size for head-count columns.
    #[arg(long)]
    pub population: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MfgArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Days at which to write field snapshots, e.g. `10,50,100`.
    #[arg(long, value_delimiter = ',')]
    pub snapshot_days: Vec<f64>,
    /// Write density.bin and value.bin.
    #[arg(long)]
    pub binary_dump: bool,
    /// Run directory.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// RK4 step in days.
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value = "run-ode")]
    pub out: PathBuf,
}

/// A resolved scenario and where it came from.
pub struct Loaded {
    pub scenario: Scenario,
    pub label: String,
    pub inputs_sha256: String,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::read(path, e))
}

pub fn load(args: &ScenarioArgs) -> Result<Loaded> {
    let (predecessor, init_bytes) = match &args.init_from {
        Some(p) => {
            let (rows, bytes) = output::read_final_state(p)?;
            (Some(rows), bytes)
        }
        None => (None, Vec::new()),
    };
    let (file, source_bytes, label) = match (&args.preset, &args.scenario) {
        (Some(name), None) => {
            parse_period(name)?;
            (ScenarioFile { preset: Some(name.clone()), ..Default::default() }, name.as_bytes().to_vec(), name.clone())
        }
        (None, Some(path)) => {
            let bytes = read(path)?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| CliError::Schema(format!("{}: not UTF-8", path.display())))?;
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (parse_file(&text)?, bytes, label)
        }
        _ => return Err(CliError::Usage("give exactly one of --preset and --scenario".into())),
    };
    let mut scenario = resolve(&file, predecessor)?;
    apply_overrides(&mut scenario, args)?;
    scenario.validate()?;
    let canonical = schema::to_toml(&scenario);
    let inputs_sha256 = output::sha256_hex(&[&source_bytes, &init_bytes, canonical.as_bytes()]);
    Ok(Loaded { scenario, label, inputs_sha256 })
}

fn apply_overrides(s: &mut Scenario, a: &ScenarioArgs) -> Result<()> {
    if let Some(n) = a.cells {
        s.cells = n;
    }
    if let Some(m) = a.steps {
        s.steps = m;
    }
    if let Some(t) = a.horizon {
        s.horizon = t;
    }
    if let Some(v) = a.sigma2 {
        for g in GroupId::ALL {
            s.mfg.groups[g].sigma2 = v;
        }
    }
    if a.external_control {
        s.solver.external_control = true;
    }
    if let Some(v) = a.tol {
        s.solver.tol_rel_j = v;
    }
    if let Some(v) = a.max_iters {
        s.solver.max_iters = v;
    }
    if let Some(v) = a.relaxation {
        s.solver.relaxation = v;
    }
    if let Some(v) = &a.cfl_policy {
        s.solver.cfl_policy = parse_cfl_policy(v)?;
    }
    if let Some(v) = &a.control_bound {
        s.solver.control_bound = parse_control_bound(v)?;
    }
    if a.population.is_some() {
        s.output.population = a.population;
    }
    Ok(())
}

fn manifest(command: &str, argv: &[String], loaded: &Loaded, extra: Value) -> Value {
    json!({
        "tool": "sirc-mfg",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": sirc_mfg_core::VERSION,
        "command": command,
        "argv": argv,
        "scenario": loaded.label,
        "inputs_sha256": loaded.inputs_sha256,
        "resolved_scenario": schema::to_toml(&loaded.scenario),
        "options": extra,
    })
}

/// Layer index of a snapshot day.
fn snapshot_layer(day: f64, grid: &Grid) -> Result<usize> {
    let k = (day / grid.tau()).round();
    if !(day.is_finite() && day >= 0.0 && k <= grid.steps() as f64) {
        return Err(CliError::Usage(format!("snapshot day {day} outside [0, {}]", grid.horizon())));
    }
    Ok(k as usize)
}

fn simulate_mfg(args: &MfgArgs, argv: &[String]) -> Result<Value> {
    let mut loaded = load(&args.scenario)?;
    let s = &mut loaded.scenario;
    s.output.snapshot_days.extend(&args.snapshot_days);
    s.output.binary_dump |= args.binary_dump;
    let grid = s.grid()?;
    let snapshots = s
        .output
        .snapshot_days
        .iter()
        .map(|&d| snapshot_layer(d, &grid).map(|k| (d, k)))
        .collect::<Result<Vec<_>>>()?;

    let report = solve(s, &s.solver)?;
    let out = output::create_dir(&args.out)?;
    output::write_aggregates(&out.join("aggregates.csv"), &report.density, &grid, &s.epidemic, s.output.population)?;
    output::write_json(&out.join("report.json"), &output::report_json(&loaded.label, s, &grid, &report))?;
    output::write_json(&out.join("final_state.json"), &output::final_state_json(&report.density, &grid))?;
    for (day, k) in &snapshots {
        output::write_fields(&out.join(format!("fields_day{day}.csv")), &report, &grid, *k)?;
    }
    if s.output.binary_dump {
        output::write_binary(&out.join("density.bin"), &report.density.groups)?;
        output::write_binary(&out.join("value.bin"), &report.value.groups)?;
    }
    let extra = json!({ "snapshot_days": s.output.snapshot_days, "binary_dump": s.output.binary_dump });
    output::write_json(&out.join("manifest.json"), &manifest("simulate-mfg", argv, &loaded, extra))?;

    let s = &loaded.scenario;
    if !report.converged && s.solver.cfl_policy == sirc_mfg_core::fpk::CflPolicy::Strict {
        let n = report.costs.len();
        let (a, b) = (report.costs[n - 2].total, report.costs[n - 1].total);
        return Err(CliError::NotConverged { iterations: report.iterations, last_change: (b - a).abs() / a.abs().max(1.0) });
    }
    Ok(json!({
        "out": out.display().to_string(),
        "converged": report.converged,
        "iterations": report.iterations,
        "J": report.final_cost().total,
    }))
}

/// Initial fractions of each group.
fn initial_fractions(s: &Scenario) -> Result<[f64; 4]> {
    Ok(match &s.initial {
        InitialCondition::Shaped(shapes) => GroupId::ALL.map(|g| shapes[g].amount),
        InitialCondition::Rows(rows) => {
            let h = s.grid()?.h();
            GroupId::ALL.map(|g| integral(&rows[g], h))
        }
    })
}

fn simulate_ode(args: &OdeArgs, argv: &[String]) -> Result<Value> {
    let loaded = load(&args.scenario)?;
    let s = &loaded.scenario;
    let [a_s, a_i, a_r, a_c] = initial_fractions(s)?;
    let traj = integrate_ode(OdeState::new(a_s, a_i, a_r, a_c), &s.epidemic, s.horizon, args.dt)?;
    let out = output::create_dir(&args.out)?;
    output::write_trajectory(&out.join("trajectory.csv"), &traj, &s.epidemic, s.output.population)?;
    output::write_json(&out.join("manifest.json"), &manifest("simulate-ode", argv, &loaded, json!({ "dt": args.dt })))?;
    let last = traj.last().expect("trajectory has the initial state");
    Ok(json!({
        "out": out.display().to_string(),
        "t": last.t,
        "S": last.s, "I": last.i, "R": last.r, "C": last.c,
    }))
}

fn validate(args: &ScenarioArgs) -> Result<Value> {
    let loaded = load(args)?;
    let s = &loaded.scenario;
    let grid = s.grid()?;
    let limit = grid.advection_limit();
    let cfl = check_cfl(&grid, &s.mfg, limit);
    let diffusion = output_per_group(&cfl.diffusion, |c| {
        json!({ "h2": c.lhs, "bound": c.rhs, "margin": c.margin(), "pass": c.passed() })
    });
    let report = json!({
        "scenario": loaded.label,
        "grid": { "N": grid.cells(), "M": grid.steps(), "T": grid.horizon(), "h": grid.h(), "tau": grid.tau() },
        "cfl_diffusion": diffusion,
        "cfl_advection": {
            "max_admissible_alpha": limit,
            "control_bound": s.solver.control_bound.name(),
            "policy": schema::cfl_policy_name(s.solver.cfl_policy),
        },
        "valid": cfl.passed(),
    });
    emit(&report);
    for (g, c) in cfl.diffusion.iter() {
        if !c.passed() {
            return Err(sirc_mfg_core::Error::DiffusionCfl { group: g, h_squared: c.lhs, bound: c.rhs }.into());
        }
    }
    Ok(Value::Null)
}

fn output_per_group<T>(values: &PerGroup<T>, f: impl Fn(&T) -> Value) -> Value {
    Value::Object(values.iter().map(|(g, v)| (g.name().to_string(), f(v))).collect())
}

pub fn presets_json() -> Value {
    let entries: Vec<Value> = Period::ALL
        .iter()
        .map(|&p| {
            let e = p.epidemic();
            let costs = preset_costs(p.sigma2());
            let init = match p.initial_fractions() {
                Some(a) => {
                    let shapes = p.shapes();
                    output_per_group(&PerGroup::from_fn(|g| (a[g.index()], shapes[g])), |(a, (xc, sc))| {
                        json!({ "A": a, "xc": xc, "sc": sc })
                    })
                }
                None => json!("final state of the previous run (--init-from)"),
            };
            json!({
                "name": p.name(),
                "epidemic": { "beta": e.beta, "gamma": e.gamma, "delta": e.delta, "mu": e.mu, "epsilon": e.epsilon },
                "mfg": output_per_group(&costs.groups, |c| json!({ "sigma2": c.sigma2, "c1": c.c1, "c2": c.c2, "c3": c.c3 })),
                "terminal_cost": costs.terminal_cost,
                "grid": { "N": DEFAULT_CELLS, "M": DEFAULT_STEPS, "T": DEFAULT_HORIZON },
                "init": init,
            })
        })
        .collect();
    Value::Array(entries)
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn emit(v: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).expect("JSON values serialise");
    let _ = writeln!(std::io::stdout(), "{text}");
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                use std::io::Write;
                let _ = write!(std::io::stdout(), "{e}");
                return 0;
            }
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match &cli.command {
        Command::SimulateOde(a) => simulate_ode(a, &argv),
        Command::SimulateMfg(a) => simulate_mfg(a, &argv),
        Command::Validate(a) => validate(a),
        Command::Presets => Ok(presets_json()),
    };
    match result {
        Ok(Value::Null) => 0,
        Ok(v) => {
            emit(&v);
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
