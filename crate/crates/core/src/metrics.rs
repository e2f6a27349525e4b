//! Solved-run post-processing: sizing ratios, curtailment, grid
//! footprints, cost splits, and the storage shadow price.

use crate::domain::{ComponentKind, SystemDescription};
use crate::formulation::AssembledModel;
use crate::lp::Solution;

/// Capacity below this many MW counts as "not built" when reporting
/// ratios and classifying storage sites.
pub const CAPACITY_FLOOR_MW: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("model has no forced-battery row")]
    ForcedRowAbsent,
}

/// Per-resource sizing ratios and curtailment. A `None` means the
/// quantity does not apply: missing component, or capacity under the
/// reporting floor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResourceMetrics {
    pub id: String,
    pub ratio_pv_inverter: Option<f64>,
    pub ratio_pv_grid: Option<f64>,
    pub ratio_wind_grid: Option<f64>,
    pub curtailment_pv_mwh: Option<f64>,
    pub curtailment_pv_pct: Option<f64>,
    pub curtailment_wind_mwh: Option<f64>,
    pub curtailment_wind_pct: Option<f64>,
}

/// Capacity-weighted ratio averages across qualifying resources.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioAverages {
    pub pv_inverter: Option<f64>,
    pub pv_grid: Option<f64>,
    pub wind_grid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub resources: Vec<ResourceMetrics>,
    pub averages: RatioAverages,
    /// Interconnection capacity summed over plant gates, GW.
    pub interconnection_gw: f64,
    /// Interconnection capacity times spur distance, GW-km.
    pub interconnection_gw_km: f64,
    /// Inter-zonal line capacity (existing plus new), GW.
    pub interzonal_gw: f64,
    pub interzonal_gw_km: f64,
    /// New line builds only, GW-km.
    pub interzonal_new_gw_km: f64,
    pub objective: f64,
    pub cost_invest: f64,
    pub cost_fom: f64,
    pub cost_vom: f64,
    pub cost_nse: f64,
    pub nse_mwh: f64,
    pub marginal_value_of_storage: Option<f64>,
    pub storage_split_pv_pct: Option<f64>,
    pub storage_split_wind_pct: Option<f64>,
    pub storage_split_standalone_pct: Option<f64>,
}

fn total(model: &AssembledModel, sol: &Solution, resource: &str, kind: ComponentKind) -> Option<f64> {
    model.meta.capacity_of(resource, kind).map(|caps| sol.value(caps.total))
}

fn ratio(
    model: &AssembledModel,
    sol: &Solution,
    resource: &str,
    num: ComponentKind,
    den: ComponentKind,
) -> Option<f64> {
    let n = total(model, sol, resource, num)?;
    let d = total(model, sol, resource, den)?;
    if d > CAPACITY_FLOOR_MW { Some(n / d) } else { None }
}

/// Sizing ratios for every co-located resource plus their
/// capacity-weighted averages. Weights are the built VRE capacity; a
/// ratio joins the average only when its denominator clears the floor.
pub fn compute_ratios(
    model: &AssembledModel,
    sol: &Solution,
    system: &SystemDescription,
) -> (Vec<ResourceMetrics>, RatioAverages) {
    let mut rows = Vec::new();
    let mut acc = [(0.0f64, 0.0f64); 3]; // (sum ratio*w, sum w)
    for res in &system.colo_resources {
        let pv_inv = ratio(model, sol, &res.id, ComponentKind::Pv, ComponentKind::Inverter);
        let pv_grid = ratio(model, sol, &res.id, ComponentKind::Pv, ComponentKind::Grid);
        let wind_grid = ratio(model, sol, &res.id, ComponentKind::Wind, ComponentKind::Grid);
        let pv_built = total(model, sol, &res.id, ComponentKind::Pv).unwrap_or(0.0);
        let wind_built = total(model, sol, &res.id, ComponentKind::Wind).unwrap_or(0.0);
        for (slot, value, weight) in [
            (0, pv_inv, pv_built),
            (1, pv_grid, pv_built),
            (2, wind_grid, wind_built),
        ] {
            if let Some(v) = value {
                if weight > CAPACITY_FLOOR_MW {
                    acc[slot].0 += v * weight;
                    acc[slot].1 += weight;
                }
            }
        }
        rows.push(ResourceMetrics {
            id: res.id.clone(),
            ratio_pv_inverter: pv_inv,
            ratio_pv_grid: pv_grid,
            ratio_wind_grid: wind_grid,
            ..ResourceMetrics::default()
        });
    }
    let avg = |(num, den): (f64, f64)| if den > 0.0 { Some(num / den) } else { None };
    (
        rows,
        RatioAverages {
            pv_inverter: avg(acc[0]),
            pv_grid: avg(acc[1]),
            wind_grid: avg(acc[2]),
        },
    )
}

/// Energy a VRE component could have produced but did not:
/// sum over hours of cf * total capacity - generation.
fn curtailment(
    model: &AssembledModel,
    sol: &Solution,
    resource: &str,
    kind: ComponentKind,
    cf: &[f64],
    theta: &[crate::lp::VarRef],
) -> (Option<f64>, Option<f64>) {
    let Some(cap) = total(model, sol, resource, kind) else {
        return (None, None);
    };
    let mut available = 0.0;
    let mut generated = 0.0;
    for (t, var) in theta.iter().enumerate() {
        available += cf[t] * cap;
        generated += sol.value(*var);
    }
    // Generation limits keep theta under cf*cap; clamp float dust.
    let curtailed = (available - generated).max(0.0);
    let pct = if available > 0.0 {
        Some((100.0 * curtailed / available).clamp(0.0, 100.0))
    } else {
        None
    };
    (Some(curtailed), pct)
}

/// Grid footprints: plant-gate interconnection and inter-zonal lines.
/// Returns (interconnection GW, interconnection GW-km, interzonal GW,
/// interzonal GW-km, new-line GW-km).
pub fn compute_gw_km(
    model: &AssembledModel,
    sol: &Solution,
    system: &SystemDescription,
) -> (f64, f64, f64, f64, f64) {
    let mut gate_gw = 0.0;
    let mut gate_gw_km = 0.0;
    for res in &system.colo_resources {
        if let Some(cap) = total(model, sol, &res.id, ComponentKind::Grid) {
            gate_gw += cap / 1000.0;
            gate_gw_km += cap * res.interconnection_km / 1000.0;
        }
    }
    let mut line_gw = 0.0;
    let mut line_gw_km = 0.0;
    let mut new_gw_km = 0.0;
    for line in &system.lines {
        let built = model
            .meta
            .lines
            .get(&line.id())
            .map(|vars| sol.value(vars.build))
            .unwrap_or(0.0);
        line_gw += (line.existing + built) / 1000.0;
        line_gw_km += (line.existing + built) * line.km / 1000.0;
        new_gw_km += built * line.km / 1000.0;
    }
    (gate_gw, gate_gw_km, line_gw, line_gw_km, new_gw_km)
}

/// Shadow price of the forced-battery requirement, sign-normalized so
/// that a beneficial marginal MW of storage reads positive. The raw
/// dual is d(objective)/d(requirement); benefit is its negation.
pub fn marginal_value_of_storage(
    model: &AssembledModel,
    sol: &Solution,
) -> Result<f64, MetricsError> {
    let row = model.meta.forced_battery_row.ok_or(MetricsError::ForcedRowAbsent)?;
    Ok(-sol.dual(row))
}

/// Where new storage energy landed: shares of sites with built PV,
/// built wind, or neither. `None` when nothing was built.
pub fn storage_colocation_split(
    model: &AssembledModel,
    sol: &Solution,
    system: &SystemDescription,
) -> (Option<f64>, Option<f64>, Option<f64>) {
    let mut buckets = [0.0f64; 3]; // pv, wind, standalone
    let mut built_total = 0.0;
    for res in &system.colo_resources {
        let Some(caps) = model.meta.capacity_of(&res.id, ComponentKind::StorageEnergy) else {
            continue;
        };
        let new = sol.value(caps.build);
        if new <= 0.0 {
            continue;
        }
        let pv = total(model, sol, &res.id, ComponentKind::Pv).unwrap_or(0.0);
        let wind = total(model, sol, &res.id, ComponentKind::Wind).unwrap_or(0.0);
        let bucket = if pv > CAPACITY_FLOOR_MW {
            0
        } else if wind > CAPACITY_FLOOR_MW {
            1
        } else {
            2
        };
        buckets[bucket] += new;
        built_total += new;
    }
    if built_total <= CAPACITY_FLOOR_MW {
        return (None, None, None);
    }
    let pct = |b: f64| Some((100.0 * b / built_total).clamp(0.0, 100.0));
    (pct(buckets[0]), pct(buckets[1]), pct(buckets[2]))
}

/// Everything the reports need from one solved run.
pub fn compute_run_metrics(
    model: &AssembledModel,
    sol: &Solution,
    system: &SystemDescription,
) -> RunMetrics {
    let (mut resources, averages) = compute_ratios(model, sol, system);
    for (row, res) in resources.iter_mut().zip(&system.colo_resources) {
        let flows = &model.meta.flows[&res.id];
        let (mwh, pct) =
            curtailment(model, sol, &res.id, ComponentKind::Pv, &res.cf_pv, &flows.theta_pv);
        row.curtailment_pv_mwh = mwh;
        row.curtailment_pv_pct = pct;
        let (mwh, pct) =
            curtailment(model, sol, &res.id, ComponentKind::Wind, &res.cf_wind, &flows.theta_wind);
        row.curtailment_wind_mwh = mwh;
        row.curtailment_wind_pct = pct;
    }
    let (gate_gw, gate_gw_km, line_gw, line_gw_km, new_line_gw_km) =
        compute_gw_km(model, sol, system);
    let [invest, fom, vom, nse] = model.meta.cost_breakdown(&sol.primal);
    let nse_mwh: f64 = model
        .meta
        .nse
        .values()
        .flat_map(|vars| vars.iter().map(|v| sol.value(*v)))
        .sum();
    let (split_pv, split_wind, split_standalone) = storage_colocation_split(model, sol, system);
    RunMetrics {
        resources,
        averages,
        interconnection_gw: gate_gw,
        interconnection_gw_km: gate_gw_km,
        interzonal_gw: line_gw,
        interzonal_gw_km: line_gw_km,
        interzonal_new_gw_km: new_line_gw_km,
        objective: sol.objective,
        cost_invest: invest,
        cost_fom: fom,
        cost_vom: vom,
        cost_nse: nse,
        nse_mwh,
        marginal_value_of_storage: marginal_value_of_storage(model, sol).ok(),
        storage_split_pv_pct: split_pv,
        storage_split_wind_pct: split_wind,
        storage_split_standalone_pct: split_standalone,
    }
}
