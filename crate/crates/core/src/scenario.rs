//! Scenario matrix execution: interconnection-mode transformations,
//! the run manifest, and parallel solves with per-run isolation.
//!
//! A mode is a data-level rewrite of the resource definitions, so the
//! formulation stays mode-agnostic. Each run is priced, transformed,
//! forced, assembled, solved and reported independently of its peers.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::costs::{apply_costs, AnnualizedCostTable, CostCases};
use crate::domain::{
    validate, ColoResource, ComponentKind, LoadError, Sheet, SystemDescription, FREE_RATIO,
};
use crate::formulation::assemble;
use crate::lp::Status;
use crate::metrics::compute_run_metrics;
use crate::report::{write_run_outputs, RunKey};

/// PV capacity per unit of inverter and grid capacity in fixed mode.
pub const FIXED_ILR_PV: f64 = 1.3;
/// Wind capacity per unit of grid capacity in fixed mode.
pub const FIXED_ILR_WIND: f64 = 1.0;

/// How storage may share an interconnection with VRE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    /// Standalone-only siting with conventional sizing ratios.
    Fixed,
    /// Standalone-only siting, ratios free.
    Optimized,
    /// Storage may stay behind the VRE plant gate, ratios free.
    Colocated,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Fixed, Mode::Optimized, Mode::Colocated];

    pub fn label(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Optimized => "optimized",
            Mode::Colocated => "colocated",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CostCase {
    Low,
    Mid,
}

impl CostCase {
    pub const ALL: [CostCase; 2] = [CostCase::Low, CostCase::Mid];

    pub fn label(self) -> &'static str {
        match self {
            CostCase::Low => "low",
            CostCase::Mid => "mid",
        }
    }

    pub fn parse(s: &str) -> Option<CostCase> {
        CostCase::ALL.into_iter().find(|c| c.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub run_id: u32,
    pub mode: Mode,
    pub cost_case: CostCase,
    pub forced_battery_mw: f64,
}

/// Reads `scenarios.csv` (run_id,mode,cost_case,forced_battery_mw).
/// Run ids and (mode, cost case, forced level) combinations must be
/// unique; forced levels must be nonnegative.
pub fn load_manifest(path: &Path) -> Result<Vec<ScenarioSpec>, LoadError> {
    let sheet = Sheet::open(path)?;
    let c_run = sheet.column("run_id")?;
    let c_mode = sheet.column("mode")?;
    let c_case = sheet.column("cost_case")?;
    let c_forced = sheet.column("forced_battery_mw")?;
    let mut specs = Vec::new();
    let mut run_ids = BTreeSet::new();
    let mut combos = BTreeSet::new();
    for (line, rec) in &sheet.records {
        let run_id = sheet.req_usize(*line, rec, c_run)? as u32;
        let mode_raw = sheet.req_str(*line, rec, c_mode)?;
        let mode = Mode::parse(&mode_raw)
            .ok_or_else(|| sheet.field_err(*line, "mode", format!("unknown mode {mode_raw:?}")))?;
        let case_raw = sheet.req_str(*line, rec, c_case)?;
        let cost_case = CostCase::parse(&case_raw).ok_or_else(|| {
            sheet.field_err(*line, "cost_case", format!("unknown cost case {case_raw:?}"))
        })?;
        let forced = sheet.req_f64(*line, rec, c_forced)?;
        if forced < 0.0 {
            return Err(sheet.field_err(*line, "forced_battery_mw", "level must be nonnegative"));
        }
        if !run_ids.insert(run_id) {
            return Err(sheet.row_err(*line, format!("duplicate run_id {run_id}")));
        }
        if !combos.insert((mode, cost_case, forced.to_bits())) {
            return Err(sheet.row_err(
                *line,
                format!(
                    "duplicate combination ({}, {}, {forced})",
                    mode.label(),
                    cost_case.label()
                ),
            ));
        }
        specs.push(ScenarioSpec { run_id, mode, cost_case, forced_battery_mw: forced });
    }
    Ok(specs)
}

/// The full mode x cost-case x forced-level matrix with run ids 1..n,
/// ordered mode-major to match the published scenario listing.
pub fn full_matrix(forced_levels: &[f64]) -> Vec<ScenarioSpec> {
    let mut specs = Vec::new();
    for mode in Mode::ALL {
        for cost_case in CostCase::ALL {
            for &forced in forced_levels {
                specs.push(ScenarioSpec {
                    run_id: specs.len() as u32 + 1,
                    mode,
                    cost_case,
                    forced_battery_mw: forced,
                });
            }
        }
    }
    specs
}

const STORAGE_KINDS: [ComponentKind; 5] = [
    ComponentKind::StorageEnergy,
    ComponentKind::ChargeDc,
    ComponentKind::DischargeDc,
    ComponentKind::ChargeAc,
    ComponentKind::DischargeAc,
];

/// Moves the storage components of a hybrid site onto a fresh
/// standalone resource at the same location. The companion gets its
/// own plant gate (and inverter when DC-coupled) with no existing iron
/// and no minimum build, priced like the original's.
fn split_storage(res: &mut ColoResource, id: String) -> ColoResource {
    let mut companion = ColoResource {
        id,
        zone: res.zone.clone(),
        components: Default::default(),
        inverter_efficiency: res.inverter_efficiency,
        eff_charge_dc: res.eff_charge_dc,
        eff_discharge_dc: res.eff_discharge_dc,
        eff_charge_ac: res.eff_charge_ac,
        eff_discharge_ac: res.eff_discharge_ac,
        self_discharge: res.self_discharge,
        power_to_energy_dc: res.power_to_energy_dc,
        power_to_energy_ac: res.power_to_energy_ac,
        ilr_pv: FREE_RATIO,
        ilr_wind: FREE_RATIO,
        interconnection_km: res.interconnection_km,
        cf_pv: Vec::new(),
        cf_wind: Vec::new(),
    };
    for kind in STORAGE_KINDS {
        if let Some(spec) = res.components.remove(&kind) {
            companion.components.insert(kind, spec);
        }
    }
    let dc_coupled = companion.has(ComponentKind::ChargeDc)
        || companion.has(ComponentKind::DischargeDc);
    let mut fresh = |kind: ComponentKind| {
        if let Some(original) = res.components.get(&kind) {
            let mut spec = original.clone();
            spec.existing = 0.0;
            spec.min_total = 0.0;
            companion.components.insert(kind, spec);
        }
    };
    fresh(ComponentKind::Grid);
    if dc_coupled {
        fresh(ComponentKind::Inverter);
    }
    // The VRE site only keeps an inverter for PV; a wind site whose
    // inverter served DC storage loses it with the storage.
    if !res.has(ComponentKind::Pv) {
        res.components.remove(&ComponentKind::Inverter);
    }
    companion
}

fn unique_companion_id(base: &str, taken: &BTreeSet<String>) -> String {
    let mut id = format!("{base}_storage");
    while taken.contains(&id) {
        id.push_str("_storage");
    }
    id
}

/// Rewrites resource definitions for one interconnection mode.
///
/// Fixed and optimized modes strip storage off VRE sites into
/// standalone companions; fixed additionally pins the sizing ratios,
/// while optimized and colocated leave them free (sentinel). The
/// rewrite is idempotent per mode.
pub fn apply_mode(system: &SystemDescription, mode: Mode) -> SystemDescription {
    let mut out = system.clone();
    let mut taken: BTreeSet<String> =
        out.colo_resources.iter().map(|r| r.id.clone()).collect();
    let mut companions = Vec::new();
    for res in &mut out.colo_resources {
        match mode {
            Mode::Fixed => {
                if res.has(ComponentKind::Pv) {
                    res.ilr_pv = FIXED_ILR_PV;
                }
                if res.has(ComponentKind::Wind) {
                    res.ilr_wind = FIXED_ILR_WIND;
                }
            }
            Mode::Optimized | Mode::Colocated => {
                res.ilr_pv = FREE_RATIO;
                res.ilr_wind = FREE_RATIO;
            }
        }
        if mode != Mode::Colocated && res.has_vre() && res.has_storage() {
            let id = unique_companion_id(&res.id, &taken);
            taken.insert(id.clone());
            companions.push(split_storage(res, id));
        }
    }
    out.colo_resources.extend(companions);
    out
}

/// Prices, transforms and forces one run's system: cost case first,
/// then the mode rewrite, then the forced-battery level.
pub fn prepare_run(
    system: &SystemDescription,
    table: &AnnualizedCostTable,
    mode: Mode,
    forced_battery_mw: f64,
) -> SystemDescription {
    let mut priced = system.clone();
    apply_costs(&mut priced, table);
    let mut transformed = apply_mode(&priced, mode);
    transformed.forced_battery_mw = Some(forced_battery_mw);
    transformed
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Optimal,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run_id: u32,
    pub status: RunStatus,
    pub objective: Option<f64>,
}

impl RunOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, RunStatus::Optimal)
    }
}

fn table_for(cases: &CostCases, case: CostCase) -> &AnnualizedCostTable {
    match case {
        CostCase::Low => &cases.low,
        CostCase::Mid => &cases.mid,
    }
}

/// Executes one scenario into `runs_dir/<run_id>/`. Any failure is
/// recorded in error.txt (with an empty metrics.csv so aggregation
/// skips the run) and reported in the outcome instead of propagating.
pub fn run_one(
    system: &SystemDescription,
    cases: &CostCases,
    spec: &ScenarioSpec,
    runs_dir: &Path,
) -> RunOutcome {
    let dir = runs_dir.join(spec.run_id.to_string());
    let attempt = || -> Result<f64, String> {
        let sys = prepare_run(system, table_for(cases, spec.cost_case), spec.mode, spec.forced_battery_mw);
        let violations = validate(&sys);
        if let Some(first) = violations.first() {
            return Err(format!("validation failed ({} total): {first}", violations.len()));
        }
        let model = assemble(&sys).map_err(|e| format!("assembly failed: {e}"))?;
        let sol = model.lp.solve().map_err(|e| format!("solve failed: {e}"))?;
        if sol.status != Status::Optimal {
            return Err(format!("solve ended {:?}", sol.status));
        }
        let metrics = compute_run_metrics(&model, &sol, &sys);
        let key = RunKey {
            run_id: spec.run_id,
            mode: spec.mode.label().to_string(),
            cost_case: spec.cost_case.label().to_string(),
            forced_battery_mw: spec.forced_battery_mw,
        };
        write_run_outputs(&dir, &key, &sys, &model, &sol, &metrics)
            .map_err(|e| format!("report failed: {e}"))?;
        Ok(sol.objective)
    };
    match attempt() {
        Ok(objective) => {
            RunOutcome { run_id: spec.run_id, status: RunStatus::Optimal, objective: Some(objective) }
        }
        Err(message) => {
            let _ = fs::create_dir_all(&dir);
            let _ = fs::write(dir.join("error.txt"), format!("{message}\n"));
            let _ = fs::write(
                dir.join("metrics.csv"),
                "run_id,mode,cost_case,forced_battery_mw,scope,id,metric,value\n",
            );
            RunOutcome { run_id: spec.run_id, status: RunStatus::Failed(message), objective: None }
        }
    }
}

/// Runs a whole manifest, one directory per run, in parallel. Outcomes
/// come back in manifest order; failures are isolated per run.
pub fn run_matrix(
    system: &SystemDescription,
    cases: &CostCases,
    manifest: &[ScenarioSpec],
    runs_dir: &Path,
    workers: Option<usize>,
) -> Vec<RunOutcome> {
    let execute = |spec: &ScenarioSpec| run_one(system, cases, spec, runs_dir);
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("worker pool");
            pool.install(|| manifest.par_iter().map(execute).collect())
        }
        None => manifest.par_iter().map(execute).collect(),
    }
}
