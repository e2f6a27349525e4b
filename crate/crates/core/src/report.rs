//! CSV projections of a solved run, and the cross-run summary.
//!
//! Numbers are written with Rust's shortest round-trip float formatting
//! so that recomputing constraint residuals from the files reproduces
//! the solver's feasibility exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::domain::{ComponentKind, LoadError, Sheet, SystemDescription};
use crate::formulation::{AssembledModel, CostCategory};
use crate::lp::Solution;
use crate::metrics::RunMetrics;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Load(#[from] LoadError),
}

/// Identity of one run inside a matrix; rides along in metrics.csv so
/// the summary can be keyed without re-deriving anything.
#[derive(Debug, Clone, PartialEq)]
pub struct RunKey {
    pub run_id: u32,
    pub mode: String,
    pub cost_case: String,
    pub forced_battery_mw: f64,
}

/// System-scope metric names, in the column order summary.csv uses.
pub const SYSTEM_METRICS: [&str; 18] = [
    "objective",
    "cost_invest",
    "cost_fom",
    "cost_vom",
    "cost_nse",
    "nse_mwh",
    "interconnection_gw",
    "interconnection_gw_km",
    "interzonal_gw",
    "interzonal_gw_km",
    "interzonal_new_gw_km",
    "avg_ratio_pv_inverter",
    "avg_ratio_pv_grid",
    "avg_ratio_wind_grid",
    "marginal_value_of_storage",
    "storage_split_pv_pct",
    "storage_split_wind_pct",
    "storage_split_standalone_pct",
];

fn write_file(path: &Path, content: &str) -> Result<(), ReportError> {
    fs::write(path, content).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn capacity_csv(system: &SystemDescription, model: &AssembledModel, sol: &Solution) -> String {
    let mut out = String::from("resource,component,existing,new,retired,total\n");
    for res in &system.colo_resources {
        for kind in ComponentKind::ALL {
            let Some(spec) = res.components.get(&kind) else { continue };
            let caps = model
                .meta
                .capacity_of(&res.id, kind)
                .expect("present component registered in the model");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                res.id,
                kind.label(),
                spec.existing,
                sol.value(caps.build),
                sol.value(caps.retire),
                sol.value(caps.total),
            );
        }
    }
    for th in &system.thermal_resources {
        let new = model.meta.thermal.get(&th.id).map(|v| sol.value(v.build)).unwrap_or(0.0);
        let _ = writeln!(
            out,
            "{},thermal,{},{},0,{}",
            th.id,
            th.existing,
            new,
            th.existing + new
        );
    }
    for line in &system.lines {
        let new = model.meta.lines.get(&line.id()).map(|v| sol.value(v.build)).unwrap_or(0.0);
        let _ = writeln!(
            out,
            "{},line,{},{},0,{}",
            line.id(),
            line.existing,
            new,
            line.existing + new
        );
    }
    out
}

fn dispatch_csv(system: &SystemDescription, model: &AssembledModel, sol: &Solution) -> String {
    let mut out = String::from(
        "resource,t,theta_pv,theta_wind,theta_dc,pi_dc,theta_ac,pi_ac,theta_grid,pi_grid,soc\n",
    );
    let at = |vars: &[crate::lp::VarRef], t: usize| {
        vars.get(t).map(|v| sol.value(*v)).unwrap_or(0.0)
    };
    for res in &system.colo_resources {
        let flows = &model.meta.flows[&res.id];
        for t in 0..model.meta.horizon {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                res.id,
                t,
                at(&flows.theta_pv, t),
                at(&flows.theta_wind, t),
                at(&flows.theta_dc, t),
                at(&flows.pi_dc, t),
                at(&flows.theta_ac, t),
                at(&flows.pi_ac, t),
                at(&flows.theta_grid, t),
                at(&flows.pi_grid, t),
                at(&flows.soc, t),
            );
        }
    }
    out
}

fn push_metric(out: &mut String, key: &RunKey, scope: &str, id: &str, metric: &str, value: f64) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        key.run_id, key.mode, key.cost_case, key.forced_battery_mw, scope, id, metric, value
    );
}

fn metrics_csv(key: &RunKey, metrics: &RunMetrics) -> String {
    let mut out =
        String::from("run_id,mode,cost_case,forced_battery_mw,scope,id,metric,value\n");
    let system_rows: [(&str, Option<f64>); 18] = [
        ("objective", Some(metrics.objective)),
        ("cost_invest", Some(metrics.cost_invest)),
        ("cost_fom", Some(metrics.cost_fom)),
        ("cost_vom", Some(metrics.cost_vom)),
        ("cost_nse", Some(metrics.cost_nse)),
        ("nse_mwh", Some(metrics.nse_mwh)),
        ("interconnection_gw", Some(metrics.interconnection_gw)),
        ("interconnection_gw_km", Some(metrics.interconnection_gw_km)),
        ("interzonal_gw", Some(metrics.interzonal_gw)),
        ("interzonal_gw_km", Some(metrics.interzonal_gw_km)),
        ("interzonal_new_gw_km", Some(metrics.interzonal_new_gw_km)),
        ("avg_ratio_pv_inverter", metrics.averages.pv_inverter),
        ("avg_ratio_pv_grid", metrics.averages.pv_grid),
        ("avg_ratio_wind_grid", metrics.averages.wind_grid),
        ("marginal_value_of_storage", metrics.marginal_value_of_storage),
        ("storage_split_pv_pct", metrics.storage_split_pv_pct),
        ("storage_split_wind_pct", metrics.storage_split_wind_pct),
        ("storage_split_standalone_pct", metrics.storage_split_standalone_pct),
    ];
    for (name, value) in system_rows {
        if let Some(v) = value {
            push_metric(&mut out, key, "system", "", name, v);
        }
    }
    for res in &metrics.resources {
        let rows = [
            ("ratio_pv_inverter", res.ratio_pv_inverter),
            ("ratio_pv_grid", res.ratio_pv_grid),
            ("ratio_wind_grid", res.ratio_wind_grid),
            ("curtailment_pv_mwh", res.curtailment_pv_mwh),
            ("curtailment_pv_pct", res.curtailment_pv_pct),
            ("curtailment_wind_mwh", res.curtailment_wind_mwh),
            ("curtailment_wind_pct", res.curtailment_wind_pct),
        ];
        for (name, value) in rows {
            if let Some(v) = value {
                push_metric(&mut out, key, "resource", &res.id, name, v);
            }
        }
    }
    out
}

fn duals_csv(model: &AssembledModel, sol: &Solution) -> String {
    let mut out = String::from(
        "# dual = d(objective)/d(rhs) of the minimization; \
         marginal_value_of_storage negates the forced-battery dual so benefit reads positive\n",
    );
    out.push_str("row,dual\n");
    for (row, dual) in model.lp.rows().iter().zip(&sol.duals) {
        let _ = writeln!(out, "{},{}", row.id, dual);
    }
    out
}

fn costs_csv(model: &AssembledModel, sol: &Solution) -> String {
    let mut out = String::from("category,dollars_per_year\n");
    let breakdown = model.meta.cost_breakdown(&sol.primal);
    for cat in CostCategory::ALL {
        let _ = writeln!(out, "{},{}", cat.label(), breakdown[cat.index()]);
    }
    let _ = writeln!(out, "objective,{}", sol.objective);
    out
}

/// Writes the five per-run files into `dir` (created if missing):
/// capacity.csv, dispatch.csv, metrics.csv, duals.csv, costs.csv.
pub fn write_run_outputs(
    dir: &Path,
    key: &RunKey,
    system: &SystemDescription,
    model: &AssembledModel,
    sol: &Solution,
    metrics: &RunMetrics,
) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    write_file(&dir.join("capacity.csv"), &capacity_csv(system, model, sol))?;
    write_file(&dir.join("dispatch.csv"), &dispatch_csv(system, model, sol))?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(key, metrics))?;
    write_file(&dir.join("duals.csv"), &duals_csv(model, sol))?;
    write_file(&dir.join("costs.csv"), &costs_csv(model, sol))?;
    Ok(())
}

/// One summary line: the run key plus its system-scope metrics in
/// [`SYSTEM_METRICS`] order (`None` where a metric was not reported).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: RunKey,
    pub values: Vec<Option<f64>>,
}

fn mode_rank(mode: &str) -> usize {
    match mode {
        "fixed" => 0,
        "optimized" => 1,
        "colocated" => 2,
        _ => 3,
    }
}

/// Collects `runs/*/metrics.csv` into summary rows ordered by
/// (mode, cost case, forced level, run id).
pub fn summarize_runs(runs_dir: &Path) -> Result<Vec<SummaryRow>, ReportError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(runs_dir)
        .map_err(|source| ReportError::Io { path: runs_dir.to_path_buf(), source })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.join("metrics.csv").is_file())
        .collect();
    dirs.sort();
    let mut rows = Vec::new();
    for dir in dirs {
        let sheet = Sheet::open(&dir.join("metrics.csv"))?;
        if sheet.records.is_empty() {
            continue; // failed run: error recorded, nothing to summarize
        }
        let c_run = sheet.column("run_id")?;
        let c_mode = sheet.column("mode")?;
        let c_case = sheet.column("cost_case")?;
        let c_forced = sheet.column("forced_battery_mw")?;
        let c_scope = sheet.column("scope")?;
        let c_metric = sheet.column("metric")?;
        let c_value = sheet.column("value")?;
        let (line0, first) = &sheet.records[0];
        let key = RunKey {
            run_id: sheet.req_usize(*line0, first, c_run)? as u32,
            mode: sheet.req_str(*line0, first, c_mode)?,
            cost_case: sheet.req_str(*line0, first, c_case)?,
            forced_battery_mw: sheet.req_f64(*line0, first, c_forced)?,
        };
        let mut values: Vec<Option<f64>> = vec![None; SYSTEM_METRICS.len()];
        for (line, rec) in &sheet.records {
            if sheet.raw(rec, c_scope) != "system" {
                continue;
            }
            let metric = sheet.req_str(*line, rec, c_metric)?;
            if let Some(slot) = SYSTEM_METRICS.iter().position(|m| *m == metric) {
                values[slot] = Some(sheet.req_f64(*line, rec, c_value)?);
            }
        }
        rows.push(SummaryRow { key, values });
    }
    rows.sort_by(|a, b| {
        (mode_rank(&a.key.mode), &a.key.mode, &a.key.cost_case)
            .cmp(&(mode_rank(&b.key.mode), &b.key.mode, &b.key.cost_case))
            .then(a.key.forced_battery_mw.total_cmp(&b.key.forced_battery_mw))
            .then(a.key.run_id.cmp(&b.key.run_id))
    });
    Ok(rows)
}

/// Writes summary.csv: one row per run, keyed and column-ordered.
pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("run_id,mode,cost_case,forced_battery_mw");
    for name in SYSTEM_METRICS {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{}",
            row.key.run_id, row.key.mode, row.key.cost_case, row.key.forced_battery_mw
        );
        for value in &row.values {
            match value {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    write_file(path, &out)
}
