//! System-level emission: thermal dispatch, non-served energy, lossless
//! inter-zonal transport with expansion, the zonal balance, the forced
//! system-wide storage requirement, and the optional renewable share.

use crate::domain::{ComponentKind, SystemDescription};
use crate::lp::{Sense, VarRef};

use super::{AssembleError, CostCategory, Ctx, LineVars, ThermalVars};

pub(super) fn emit_system(
    ctx: &mut Ctx<'_>,
    system: &SystemDescription,
) -> Result<(), AssembleError> {
    let horizon = system.horizon;

    for th in &system.thermal_resources {
        let build = ctx
            .lp
            .add_var(&format!("sys/th_new/{}", th.id), 0.0, th.max_new, 0.0)?;
        ctx.cost(build, CostCategory::Invest, th.invest_cost);
        ctx.cost(build, CostCategory::Fom, th.fom_cost);
        // FOM on capacity already in the ground is a constant.
        ctx.cost_offset(CostCategory::Fom, th.fom_cost * th.existing);
        let mut dispatch = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let v = ctx
                .lp
                .add_var(&format!("sys/th_disp/{}/{t}", th.id), 0.0, f64::INFINITY, 0.0)?;
            ctx.cost(v, CostCategory::Vom, th.vom_cost);
            dispatch.push(v);
        }
        for t in 0..horizon {
            ctx.lp.add_row(
                &format!("sys/thermal/{}/{t}", th.id),
                Sense::Le,
                th.existing,
                &[(dispatch[t], 1.0), (build, -1.0)],
            )?;
        }
        ctx.meta.thermal.insert(th.id.clone(), ThermalVars { build, dispatch });
    }

    for z in &system.zones {
        let mut nse = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let v = ctx
                .lp
                .add_var(&format!("sys/nse/{}/{t}", z.id), 0.0, f64::INFINITY, 0.0)?;
            ctx.cost(v, CostCategory::Nse, system.nse_cost);
            nse.push(v);
        }
        ctx.meta.nse.insert(z.id.clone(), nse);
    }

    for l in &system.lines {
        let id = l.id();
        let build = ctx
            .lp
            .add_var(&format!("sys/line_new/{id}"), 0.0, l.max_new, 0.0)?;
        ctx.cost(build, CostCategory::Invest, l.cost_per_mw_yr);
        let mut fwd = Vec::with_capacity(horizon);
        let mut bwd = Vec::with_capacity(horizon);
        for t in 0..horizon {
            fwd.push(ctx.lp.add_var(&format!("sys/flow_fwd/{id}/{t}"), 0.0, f64::INFINITY, 0.0)?);
            bwd.push(ctx.lp.add_var(&format!("sys/flow_bwd/{id}/{t}"), 0.0, f64::INFINITY, 0.0)?);
        }
        for t in 0..horizon {
            ctx.lp.add_row(
                &format!("sys/line/{id}/{t}"),
                Sense::Le,
                l.existing,
                &[(fwd[t], 1.0), (bwd[t], 1.0), (build, -1.0)],
            )?;
        }
        ctx.meta.lines.insert(id, LineVars { build, fwd, bwd });
    }

    for z in &system.zones {
        let mut rows = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let mut coeffs: Vec<(VarRef, f64)> = Vec::new();
            for th in &system.thermal_resources {
                if th.zone == z.id {
                    coeffs.push((ctx.meta.thermal[&th.id].dispatch[t], 1.0));
                }
            }
            for r in &system.colo_resources {
                if r.zone != z.id {
                    continue;
                }
                let flows = &ctx.meta.flows[&r.id];
                if let Some(&tg) = flows.theta_grid.get(t) {
                    coeffs.push((tg, 1.0));
                    coeffs.push((flows.pi_grid[t], -1.0));
                }
            }
            for l in &system.lines {
                let lv = &ctx.meta.lines[&l.id()];
                if l.to == z.id {
                    coeffs.push((lv.fwd[t], 1.0));
                    coeffs.push((lv.bwd[t], -1.0));
                }
                if l.from == z.id {
                    coeffs.push((lv.fwd[t], -1.0));
                    coeffs.push((lv.bwd[t], 1.0));
                }
            }
            coeffs.push((ctx.meta.nse[&z.id][t], 1.0));
            rows.push(ctx.lp.add_row(
                &format!("sys/balance/{}/{t}", z.id),
                Sense::Eq,
                z.demand[t],
                &coeffs,
            )?);
        }
        ctx.meta.balance_rows.insert(z.id.clone(), rows);
    }

    if let Some(forced) = system.forced_battery_mw {
        ctx.meta.forced_battery_row = Some(emit_forced_battery(ctx, system, forced)?);
    }
    if let Some(share) = system.rps_share {
        ctx.meta.rps_row = Some(emit_rps(ctx, system, share)?);
    }
    Ok(())
}

/// Total NEW storage power, counted as AC-deliverable capacity: symmetric
/// sides contribute through the power-to-energy ratio on new energy builds
/// (DC scaled by inverter efficiency), asymmetric sides through their new
/// discharge capacity.
fn emit_forced_battery(
    ctx: &mut Ctx<'_>,
    system: &SystemDescription,
    forced: f64,
) -> Result<crate::lp::RowRef, AssembleError> {
    let mut coeffs: Vec<(VarRef, f64)> = Vec::new();
    for r in &system.colo_resources {
        let Some(energy) = ctx.meta.capacity_of(&r.id, ComponentKind::StorageEnergy) else {
            continue;
        };
        let energy_build = energy.build;
        if r.is_symmetric_dc() {
            coeffs.push((energy_build, r.inverter_efficiency * r.power_to_energy_dc));
        } else if let Some(dis) = ctx.meta.capacity_of(&r.id, ComponentKind::DischargeDc) {
            coeffs.push((dis.build, r.inverter_efficiency));
        }
        if r.is_symmetric_ac() {
            coeffs.push((energy_build, r.power_to_energy_ac));
        } else if let Some(dis) = ctx.meta.capacity_of(&r.id, ComponentKind::DischargeAc) {
            coeffs.push((dis.build, 1.0));
        }
    }
    Ok(ctx.lp.add_row("sys/forced_battery", Sense::Eq, forced, &coeffs)?)
}

/// Qualifying annual energy (PV at the AC side, wind, flagged thermal) must
/// cover the required share of total demand.
fn emit_rps(
    ctx: &mut Ctx<'_>,
    system: &SystemDescription,
    share: f64,
) -> Result<crate::lp::RowRef, AssembleError> {
    let mut coeffs: Vec<(VarRef, f64)> = Vec::new();
    for r in &system.colo_resources {
        let flows = &ctx.meta.flows[&r.id];
        for &v in &flows.theta_pv {
            coeffs.push((v, r.inverter_efficiency));
        }
        for &v in &flows.theta_wind {
            coeffs.push((v, 1.0));
        }
    }
    for th in &system.thermal_resources {
        if th.qualifies_rps {
            for &v in &ctx.meta.thermal[&th.id].dispatch {
                coeffs.push((v, 1.0));
            }
        }
    }
    let total_demand: f64 = system.zones.iter().map(|z| z.demand.iter().sum::<f64>()).sum();
    Ok(ctx
        .lp
        .add_row("sys/rps", Sense::Ge, share * total_demand, &coeffs)?)
}
