//! Run artefacts: CSV tables, JSON reports, binary dumps.
//!
//! Numbers are written with Rust's shortest round-trip decimal form, so the
//! files are lossless and identical inputs give byte-identical output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use sirc_mfg_core::cost::CostBreakdown;
use sirc_mfg_core::field::Layers;
use sirc_mfg_core::ode::{new_infections, OdeState};
use sirc_mfg_core::solver::{Bound, StabilityAudit};
use sirc_mfg_core::{DensityField, EpidemicParams, Grid, GroupId, PerGroup, Scenario, SolveReport};

use crate::error::{CliError, Result};

pub fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::write(path, std::io::Error::other(e)))
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| CliError::write(path, std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialise");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}

fn aggregate_header(population: Option<f64>) -> Vec<String> {
    let mut h: Vec<String> = ["t", "S", "I", "R", "C", "total", "newinf"].iter().map(|s| s.to_string()).collect();
    if population.is_some() {
        h.extend(["S_count", "I_count", "R_count", "C_count", "newinf_count"].iter().map(|s| s.to_string()));
    }
    h
}

fn aggregate_row(t: f64, groups: [f64; 4], newinf: f64, population: Option<f64>) -> Vec<String> {
    let mut row = vec![num(t)];
    row.extend(groups.iter().map(|&v| num(v)));
    row.push(num(groups.iter().sum()));
    row.push(num(newinf));
    if let Some(p) = population {
        row.extend(groups.iter().map(|&v| num(v * p)));
        row.push(num(newinf * p));
    }
    row
}

/// Layers reported once per simulated day.
pub fn day_layers(grid: &Grid) -> Vec<usize> {
    (0..=grid.steps()).step_by(grid.day_stride()).collect()
}

/// `t, S, I, R, C, total, newinf` (+ head counts) once per day.
pub fn write_aggregates(
    path: &Path,
    density: &DensityField,
    grid: &Grid,
    params: &EpidemicParams,
    population: Option<f64>,
) -> Result<()> {
    let h = grid.h();
    let rows = day_layers(grid).into_iter().map(|k| {
        let groups = GroupId::ALL.map(|g| density.mass(g, k, h));
        aggregate_row(grid.time(k), groups, density.incidence(k, h, params), population)
    });
    write_rows(path, &aggregate_header(population), rows)
}

/// ODE trajectory in the aggregates layout.
pub fn write_trajectory(path: &Path, traj: &[OdeState], params: &EpidemicParams, population: Option<f64>) -> Result<()> {
    let rows = traj.iter().map(|s| aggregate_row(s.t, s.as_array(), new_infections(s, params), population));
    write_rows(path, &aggregate_header(population), rows)
}

/// Cell-centred snapshot at layer `k`: densities, adjoint values and the
/// effective control averaged over the two nodes of each cell.
pub fn write_fields(path: &Path, report: &SolveReport, grid: &Grid, k: usize) -> Result<()> {
    let mut header = vec!["x".to_string()];
    for prefix in ["m", "v", "alpha"] {
        header.extend(GroupId::ALL.iter().map(|g| format!("{prefix}_{g}")));
    }
    let rows = grid.cell_centers().enumerate().map(|(j, x)| {
        let mut row = vec![num(x)];
        row.extend(GroupId::ALL.iter().map(|&g| num(report.density.row(g, k)[j])));
        row.extend(GroupId::ALL.iter().map(|&g| num(report.value.row(g, k)[j])));
        row.extend(GroupId::ALL.iter().map(|&g| {
            let a = report.control.effective[g].row(k);
            num((a[j] + a[j + 1]) / 2.0)
        }));
        row
    });
    write_rows(path, &header, rows)
}

/// Raw little-endian `f64`, layer-major then group (S, I, R, C) then cell.
pub fn write_binary(path: &Path, groups: &PerGroup<Layers>) -> Result<()> {
    let layers = groups[GroupId::S].layers();
    let mut bytes = Vec::with_capacity(layers * 4 * groups[GroupId::S].width() * 8);
    for k in 0..layers {
        for g in GroupId::ALL {
            for v in groups[g].row(k) {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::write(path, e))?;
    f.write_all(&bytes).map_err(|e| CliError::write(path, e))
}

fn per_group<T>(values: &PerGroup<T>, f: impl Fn(&T) -> Value) -> Value {
    Value::Object(values.iter().map(|(g, v)| (g.name().to_string(), f(v))).collect())
}

fn bound_json(b: &Bound) -> Value {
    json!({ "value": b.value, "bound": b.bound, "holds": b.holds() })
}

fn stability_json(s: &StabilityAudit) -> Value {
    json!({
        "holds": s.holds(),
        "density_l1": per_group(&s.density, bound_json),
        "value_max": per_group(&s.value, bound_json),
        "value_max_I_sharp": bound_json(&s.value_terminal_sharp),
    })
}

fn cost_json(c: &CostBreakdown) -> Value {
    json!({
        "running_control": c.running_control,
        "running_state": c.running_state,
        "terminal": c.terminal,
        "total": c.total,
    })
}

pub fn report_json(label: &str, scenario: &Scenario, grid: &Grid, report: &SolveReport) -> Value {
    let last = grid.steps();
    let h = grid.h();
    let warning = report.first_cfl_warning.map(|w| {
        json!({ "group": w.group.name(), "step": w.step, "node": w.node, "alpha": w.alpha })
    });
    json!({
        "scenario": label,
        "grid": { "N": grid.cells(), "M": grid.steps(), "T": grid.horizon(), "h": h, "tau": grid.tau() },
        "converged": report.converged,
        "iterations": report.iterations,
        "external_control": scenario.solver.external_control,
        "cost": cost_json(report.final_cost()),
        "cost_history": report.costs.iter().map(cost_json).collect::<Vec<_>>(),
        "max_control_change": report.control_change,
        "audit": {
            "max_mass_drift": report.max_mass_drift(),
            "min_density": report.min_density(),
            "per_iteration": report.audits.iter().map(|a| json!({
                "mass_drift": a.mass_drift,
                "min_density": a.min_density,
            })).collect::<Vec<_>>(),
        },
        "cfl": {
            "advection_limit": grid.advection_limit(),
            "max_abs_effective_alpha": report.control.max_abs_effective(),
            "warnings": report.cfl_warning_count,
            "first_warning": warning,
        },
        "stability": stability_json(&report.stability),
        "final_mass": per_group(&PerGroup::from_fn(|g| report.density.mass(g, last, h)), |v| json!(v)),
    })
}

/// Final densities, readable by `--init-from`.
pub fn final_state_json(density: &DensityField, grid: &Grid) -> Value {
    let k = grid.steps();
    let mut obj = serde_json::Map::new();
    obj.insert("N".into(), json!(grid.cells()));
    obj.insert("t".into(), json!(grid.horizon()));
    for g in GroupId::ALL {
        obj.insert(g.name().into(), json!(density.row(g, k)));
    }
    Value::Object(obj)
}

pub fn read_final_state(path: &Path) -> Result<(PerGroup<Vec<f64>>, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| CliError::read(path, e))?;
    let value: Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Schema(format!("{}: not a JSON state file: {e}", path.display())))?;
    let rows = PerGroup::try_map(&PerGroup::splat(()), |g, _| {
        let row = value.get(g.name()).and_then(Value::as_array).ok_or_else(|| {
            CliError::Schema(format!("{}: missing density row {:?}", path.display(), g.name()))
        })?;
        row.iter()
            .map(|v| v.as_f64())
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::Schema(format!("{}: non-numeric entry in row {}", path.display(), g.name())))
    })?;
    Ok((rows, bytes))
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn create_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).map_err(|e| CliError::write(path, e))?;
    Ok(path.to_path_buf())
}
