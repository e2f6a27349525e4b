//! Per-resource emission: capacity accounting, sizing ratios, the AC/DC
//! energy balance at the interconnection point, generation and export
//! limits, storage dynamics, and the resource's objective terms.

use crate::domain::{ColoResource, ComponentKind, FREE_RATIO};
use crate::lp::{Sense, VarRef};

use super::{AssembleError, CapacityVars, ColoFlows, CostCategory, Ctx};

/// The six dispatch components and which flow they price with their VOM.
const FLOW_OWNERS: [ComponentKind; 6] = [
    ComponentKind::Pv,
    ComponentKind::Wind,
    ComponentKind::ChargeDc,
    ComponentKind::DischargeDc,
    ComponentKind::ChargeAc,
    ComponentKind::DischargeAc,
];

pub(super) fn emit_resource(
    ctx: &mut Ctx<'_>,
    r: &ColoResource,
    horizon: usize,
) -> Result<(), AssembleError> {
    check_ratio(r, "ilr_pv", r.ilr_pv)?;
    check_ratio(r, "ilr_wind", r.ilr_wind)?;

    register_capacity_vars(ctx, r)?;
    let flows = register_flow_vars(ctx, r, horizon)?;

    emit_capacity_constraints(ctx, r)?;
    emit_ratio_constraints(ctx, r)?;
    emit_energy_balance(ctx, r, &flows, horizon)?;
    emit_export_limits(ctx, r, &flows, horizon)?;
    emit_generation_limits(ctx, r, &flows, horizon)?;
    emit_soc_dynamics(ctx, r, &flows, horizon)?;
    emit_storage_power_limits(ctx, r, &flows, horizon)?;
    emit_objective_terms(ctx, r, &flows, horizon);

    ctx.meta.flows.insert(r.id.clone(), flows);
    Ok(())
}

fn check_ratio(r: &ColoResource, field: &str, value: f64) -> Result<(), AssembleError> {
    if value == FREE_RATIO || value > 0.0 {
        Ok(())
    } else {
        Err(AssembleError::BadRatio {
            resource: r.id.clone(),
            field: field.to_string(),
            value,
        })
    }
}

fn register_capacity_vars(ctx: &mut Ctx<'_>, r: &ColoResource) -> Result<(), AssembleError> {
    for kind in ComponentKind::ALL {
        if !r.has(kind) {
            continue;
        }
        let c = kind.label();
        let vars = CapacityVars {
            build: ctx.lp.add_var(&format!("{}/omega/{c}", r.id), 0.0, f64::INFINITY, 0.0)?,
            retire: ctx.lp.add_var(&format!("{}/retire/{c}", r.id), 0.0, f64::INFINITY, 0.0)?,
            total: ctx.lp.add_var(&format!("{}/cap/{c}", r.id), 0.0, f64::INFINITY, 0.0)?,
        };
        ctx.meta.capacity.insert((r.id.clone(), kind), vars);
    }
    Ok(())
}

fn register_flow_vars(
    ctx: &mut Ctx<'_>,
    r: &ColoResource,
    horizon: usize,
) -> Result<ColoFlows, AssembleError> {
    let mut flows = ColoFlows::default();
    let mut series = |name: &str, present: bool| -> Result<Vec<VarRef>, AssembleError> {
        if !present {
            return Ok(Vec::new());
        }
        (0..horizon)
            .map(|t| {
                ctx.lp
                    .add_var(&format!("{}/{name}/{t}", r.id), 0.0, f64::INFINITY, 0.0)
                    .map_err(AssembleError::from)
            })
            .collect()
    };
    flows.theta_pv = series("theta_pv", r.has(ComponentKind::Pv))?;
    flows.theta_wind = series("theta_wind", r.has(ComponentKind::Wind))?;
    flows.theta_dc = series("theta_dc", r.has(ComponentKind::DischargeDc))?;
    flows.pi_dc = series("pi_dc", r.has(ComponentKind::ChargeDc))?;
    flows.theta_ac = series("theta_ac", r.has(ComponentKind::DischargeAc))?;
    flows.pi_ac = series("pi_ac", r.has(ComponentKind::ChargeAc))?;
    flows.theta_grid = series("theta_grid", r.has(ComponentKind::Grid))?;
    flows.pi_grid = series("pi_grid", r.has(ComponentKind::Grid))?;
    flows.soc = series("soc", r.has(ComponentKind::StorageEnergy))?;
    Ok(flows)
}

/// Capacity accounting per present component: the total-capacity defining
/// equality, the retirement cap, and optional total bounds.
fn emit_capacity_constraints(ctx: &mut Ctx<'_>, r: &ColoResource) -> Result<(), AssembleError> {
    for kind in ComponentKind::ALL {
        let Some(spec) = r.spec(kind) else { continue };
        let cap = ctx.meta.capacity[&(r.id.clone(), kind)];
        let c = kind.label();
        // total = existing + build - retire
        ctx.lp.add_row(
            &format!("{}/cap_def/{c}", r.id),
            Sense::Eq,
            spec.existing,
            &[(cap.total, 1.0), (cap.build, -1.0), (cap.retire, 1.0)],
        )?;
        ctx.lp.add_row(
            &format!("{}/retire_lim/{c}", r.id),
            Sense::Le,
            spec.existing,
            &[(cap.retire, 1.0)],
        )?;
        if spec.max_total.is_finite() {
            ctx.lp.add_row(
                &format!("{}/cap_max/{c}", r.id),
                Sense::Le,
                spec.max_total,
                &[(cap.total, 1.0)],
            )?;
        }
        if spec.min_total > 0.0 {
            ctx.lp.add_row(
                &format!("{}/cap_min/{c}", r.id),
                Sense::Ge,
                spec.min_total,
                &[(cap.total, 1.0)],
            )?;
        }
    }
    Ok(())
}

/// Fixed sizing ratios: PV:inverter and PV:grid when `ilr_pv` is set,
/// wind:grid when `ilr_wind` is set; the -1 sentinel emits nothing.
fn emit_ratio_constraints(ctx: &mut Ctx<'_>, r: &ColoResource) -> Result<(), AssembleError> {
    let total = |kind: ComponentKind| ctx.meta.capacity_of(&r.id, kind).map(|c| c.total);
    if r.ilr_pv != FREE_RATIO {
        if let (Some(pv), Some(inv)) = (total(ComponentKind::Pv), total(ComponentKind::Inverter)) {
            ctx.lp.add_row(
                &format!("{}/ratio_pv_inv", r.id),
                Sense::Eq,
                0.0,
                &[(pv, 1.0), (inv, -r.ilr_pv)],
            )?;
        }
        if let (Some(pv), Some(grid)) = (total(ComponentKind::Pv), total(ComponentKind::Grid)) {
            ctx.lp.add_row(
                &format!("{}/ratio_pv_grid", r.id),
                Sense::Eq,
                0.0,
                &[(pv, 1.0), (grid, -r.ilr_pv)],
            )?;
        }
    }
    if r.ilr_wind != FREE_RATIO {
        if let (Some(wind), Some(grid)) = (total(ComponentKind::Wind), total(ComponentKind::Grid)) {
            ctx.lp.add_row(
                &format!("{}/ratio_wind_grid", r.id),
                Sense::Eq,
                0.0,
                &[(wind, 1.0), (grid, -r.ilr_wind)],
            )?;
        }
    }
    Ok(())
}

/// Hourly balance at the interconnection point: grid exchange equals wind
/// plus AC storage flows plus inverter-converted DC-side net power.
fn emit_energy_balance(
    ctx: &mut Ctx<'_>,
    r: &ColoResource,
    flows: &ColoFlows,
    horizon: usize,
) -> Result<(), AssembleError> {
    let eta = r.inverter_efficiency;
    for t in 0..horizon {
        let mut coeffs: Vec<(VarRef, f64)> = Vec::new();
        if let (Some(&tg), Some(&pg)) = (flows.theta_grid.get(t), flows.pi_grid.get(t)) {
            coeffs.push((tg, 1.0));
            coeffs.push((pg, -1.0));
        }
        if let Some(&v) = flows.theta_wind.get(t) {
            coeffs.push((v, -1.0));
        }
        if let Some(&v) = flows.theta_ac.get(t) {
            coeffs.push((v, -1.0));
        }
        if let Some(&v) = flows.pi_ac.get(t) {
            coeffs.push((v, 1.0));
        }
        if let Some(&v) = flows.theta_pv.get(t) {
            coeffs.push((v, -eta));
        }
        if let Some(&v) = flows.theta_dc.get(t) {
            coeffs.push((v, -eta));
        }
        if let Some(&v) = flows.pi_dc.get(t) {
            coeffs.push((v, 1.0 / eta));
        }
        ctx.lp
            .add_row(&format!("{}/balance/{t}", r.id), Sense::Eq, 0.0, &coeffs)?;
    }
    Ok(())
}

/// Grid exchange capped by interconnection capacity; total inverter
/// throughput capped by inverter capacity.
fn emit_export_limits(
    ctx: &mut Ctx<'_>,
    r: &ColoResource,
    flows: &ColoFlows,
    horizon: usize,
) -> Result<(), AssembleError> {
    let eta = r.inverter_efficiency;
    if let Some(grid) = ctx.meta.capacity_of(&r.id, ComponentKind::Grid).map(|c| c.total) {
        for t in 0..horizon {
            ctx.lp.add_row(
                &format!("{}/grid_lim/{t}", r.id),
                Sense::Le,
                0.0,
                &[
                    (flows.theta_grid[t], 1.0),
                    (flows.pi_grid[t], 1.0),
                    (grid, -1.0),
                ],
            )?;
        }
    }
    if let Some(inv) = ctx.meta.capacity_of(&r.id, ComponentKind::Inverter).map(|c| c.total) {
        for t in 0..horizon {
            let mut coeffs: Vec<(VarRef, f64)> = Vec::new();
            if let Some(&v) = flows.theta_pv.get(t) {
                coeffs.push((v, eta));
            }
            if let Some(&v) = flows.theta_dc.get(t) {
                coeffs.push((v, eta));
            }
            if let Some(&v) = flows.pi_dc.get(t) {
                coeffs.push((v, 1.0 / eta));
            }
            coeffs.push((inv, -1.0));
            ctx.lp
                .add_row(&format!("{}/inverter_lim/{t}", r.id), Sense::Le, 0.0, &coeffs)?;
        }
    }
    Ok(())
}

/// VRE output capped at capacity factor times total installed capacity.
fn emit_generation_limits(
    ctx: &mut Ctx<'_>,
    r: &ColoResource,
    flows: &ColoFlows,
    horizon: usize,
) -> Result<(), AssembleError> {
    let pairs = [
        (ComponentKind::Pv, &flows.theta_pv, &r.cf_pv),
        (ComponentKind::Wind, &flows.theta_wind, &r.cf_wind),
    ];
    for (kind, theta, cf) in pairs {
        let Some(cap) = ctx.meta.capacity_of(&r.id, kind).map(|c| c.total) else {
            continue;
        };
        for t in 0..horizon {
            ctx.lp.add_row(
                &format!("{}/gen_max/{}/{t}", r.id, kind.label()),
                Sense::Le,
                0.0,
                &[(theta[t], 1.0), (cap, -cf[t])],
            )?;
        }
    }
    Ok(())
}

/// State-of-charge recursion with cyclic wrap (hour 0 carries over from the
/// last hour) and the energy-capacity cap.
fn emit_soc_dynamics(
    ctx: &mut Ctx<'_>,
    r: &ColoResource,
    flows: &ColoFlows,
    horizon: usize,
) -> Result<(), AssembleError> {
    if flows.soc.is_empty() {
        return Ok(());
    }
    let carry = 1.0 - r.self_discharge;
    let energy = ctx.meta.capacity[&(r.id.clone(), ComponentKind::StorageEnergy)].total;
    for t in 0..horizon {
        let prev = flows.soc[(t + horizon - 1) % horizon];
        let mut coeffs = vec![(flows.soc[t], 1.0), (prev, -carry)];
        if let Some(&v) = flows.pi_dc.get(t) {
            coeffs.push((v, -r.eff_charge_dc));
        }
        if let Some(&v) = flows.theta_dc.get(t) {
            coeffs.push((v, 1.0 / r.eff_discharge_dc));
        }
        if let Some(&v) = flows.pi_ac.get(t) {
            coeffs.push((v, -r.eff_charge_ac));
        }
        if let Some(&v) = flows.theta_ac.get(t) {
            coeffs.push((v, 1.0 / r.eff_discharge_ac));
        }
        ctx.lp
            .add_row(&format!("{}/soc/{t}", r.id), Sense::Eq, 0.0, &coeffs)?;
        ctx.lp.add_row(
            &format!("{}/soc_max/{t}", r.id),
            Sense::Le,
            0.0,
            &[(flows.soc[t], 1.0), (energy, -1.0)],
        )?;
    }
    Ok(())
}

/// Storage power limits: symmetric sides share one cap tied to energy
/// capacity through the power-to-energy ratio; asymmetric sides cap each
/// flow with its own sized capacity.
fn emit_storage_power_limits(
    ctx: &mut Ctx<'_>,
    r: &ColoResource,
    flows: &ColoFlows,
    horizon: usize,
) -> Result<(), AssembleError> {
    let energy = ctx
        .meta
        .capacity_of(&r.id, ComponentKind::StorageEnergy)
        .map(|c| c.total);
    let sides = [
        (
            "dc",
            r.is_symmetric_dc(),
            r.power_to_energy_dc,
            &flows.theta_dc,
            &flows.pi_dc,
            ComponentKind::DischargeDc,
            ComponentKind::ChargeDc,
        ),
        (
            "ac",
            r.is_symmetric_ac(),
            r.power_to_energy_ac,
            &flows.theta_ac,
            &flows.pi_ac,
            ComponentKind::DischargeAc,
            ComponentKind::ChargeAc,
        ),
    ];
    for (side, symmetric, mu, theta, pi, dis_kind, cha_kind) in sides {
        if symmetric {
            let energy = energy.expect("symmetric storage requires an energy component");
            for t in 0..horizon {
                ctx.lp.add_row(
                    &format!("{}/sym_power/{side}/{t}", r.id),
                    Sense::Le,
                    0.0,
                    &[(theta[t], 1.0), (pi[t], 1.0), (energy, -mu)],
                )?;
            }
            continue;
        }
        for (kind, series) in [(dis_kind, theta), (cha_kind, pi)] {
            let Some(cap) = ctx.meta.capacity_of(&r.id, kind).map(|c| c.total) else {
                continue;
            };
            for t in 0..horizon {
                ctx.lp.add_row(
                    &format!("{}/flow_max/{}/{t}", r.id, kind.label()),
                    Sense::Le,
                    0.0,
                    &[(series[t], 1.0), (cap, -1.0)],
                )?;
            }
        }
    }
    Ok(())
}

/// Investment cost on new builds, fixed O&M on totals, and variable cost on
/// the six dispatch flows. Symmetric charge/discharge components carry no
/// capacity cost of their own (their power is priced through the energy
/// component).
fn emit_objective_terms(ctx: &mut Ctx<'_>, r: &ColoResource, flows: &ColoFlows, horizon: usize) {
    for kind in ComponentKind::ALL {
        let Some(spec) = r.spec(kind) else { continue };
        let symmetric_side = match kind {
            ComponentKind::ChargeDc | ComponentKind::DischargeDc => r.is_symmetric_dc(),
            ComponentKind::ChargeAc | ComponentKind::DischargeAc => r.is_symmetric_ac(),
            _ => false,
        };
        if symmetric_side {
            continue;
        }
        let cap = ctx.meta.capacity[&(r.id.clone(), kind)];
        ctx.cost(cap.build, CostCategory::Invest, spec.invest_cost);
        ctx.cost(cap.total, CostCategory::Fom, spec.fom_cost);
    }
    for kind in FLOW_OWNERS {
        let Some(spec) = r.spec(kind) else { continue };
        let series = match kind {
            ComponentKind::Pv => &flows.theta_pv,
            ComponentKind::Wind => &flows.theta_wind,
            ComponentKind::ChargeDc => &flows.pi_dc,
            ComponentKind::DischargeDc => &flows.theta_dc,
            ComponentKind::ChargeAc => &flows.pi_ac,
            ComponentKind::DischargeAc => &flows.theta_ac,
            _ => unreachable!(),
        };
        for t in 0..horizon {
            ctx.cost(series[t], CostCategory::Vom, spec.vom_cost);
        }
    }
}
