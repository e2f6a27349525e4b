//! Fixture-directory ingestion: defaults, error locations, and the
//! write/load identity.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use gridwork_core::domain::{
    self, ColoResource, ComponentKind, ComponentSpec, SystemDescription, ThermalResource,
    TransportLine, Zone, DEFAULT_NSE_COST, FREE_RATIO,
};
use proptest::prelude::*;
use tempfile::TempDir;

fn write(dir: &Path, name: &str, content: &str) {
    fs::write(dir.join(name), content).unwrap();
}

/// Two zones, one hybrid, one battery, a line, a thermal unit, and policy.
fn full_fixture(dir: &Path) {
    write(dir, "zones.csv", "id\nnorth\nsouth\n");
    write(
        dir,
        "demand.csv",
        "zone,t,mwh\nnorth,0,100\nnorth,1,120\nsouth,0,80\nsouth,1,90\n",
    );
    write(
        dir,
        "lines.csv",
        "from,to,existing_mw,max_new_mw,cost_per_mw_yr,km\nnorth,south,50,,12000,200\n",
    );
    write(
        dir,
        "colo_resources.csv",
        "id,zone,components_present,grid_existing,grid_max,grid_invest,pv_existing,pv_max,pv_invest,pv_vom,\
inverter_invest,storage_energy_invest,charge_dc_invest,discharge_dc_invest,\
inverter_efficiency,eff_charge_dc,eff_discharge_dc,self_discharge,power_to_energy_dc,ilr_pv,interconnection_km\n\
hyb,north,grid;pv;inverter;storage_energy;charge_dc;discharge_dc,10,500,34000,20,,33900,-12.7,5000,42000,17000,17000,0.96,0.95,0.95,0.05,0.25,1.3,150\n\
batt,south,grid;inverter;storage_energy;charge_ac;discharge_ac,0,,34000,,,,,5000,42000,,,0.96,,,0,0,,5\n",
    );
    write(
        dir,
        "colo_capacity_factors.csv",
        "resource,t,cf_pv,cf_wind\nhyb,0,0.5,0\nhyb,1,0.75,0\n",
    );
    write(
        dir,
        "thermal.csv",
        "id,zone,existing_mw,max_new_mw,invest_cost_per_mw_yr,fom_cost_per_mw_yr,vom_plus_fuel_per_mwh,qualifies_rps\n\
gas,south,200,,95000,20000,45,false\n",
    );
    write(dir, "policy.csv", "key,value\nforced_battery_mw,15\nnse_cost,50000\n");
}

#[test]
fn loads_fixture_and_applies_empty_cell_defaults() {
    let dir = TempDir::new().unwrap();
    full_fixture(dir.path());
    let sys = domain::load_system(dir.path()).unwrap();

    assert_eq!(sys.horizon, 2);
    assert_eq!(sys.zones.len(), 2);
    assert_eq!(sys.zones[0].demand, vec![100.0, 120.0]);
    assert_eq!(sys.lines.len(), 1);
    assert!(sys.lines[0].max_new.is_infinite(), "empty max_new means unbounded");

    let hyb = &sys.colo_resources[0];
    assert_eq!(hyb.id, "hyb");
    assert_eq!(hyb.components.len(), 6);
    let grid = hyb.spec(ComponentKind::Grid).unwrap();
    assert_eq!((grid.existing, grid.max_total, grid.invest_cost), (10.0, 500.0, 34000.0));
    let pv = hyb.spec(ComponentKind::Pv).unwrap();
    assert!(pv.max_total.is_infinite(), "empty pv_max means unbounded");
    assert_eq!(pv.vom_cost, -12.7);
    // Columns absent from the file entirely fall back the same way as empty
    // cells: no charge_dc_max column was written.
    let cdc = hyb.spec(ComponentKind::ChargeDc).unwrap();
    assert!(cdc.max_total.is_infinite());
    assert_eq!(cdc.invest_cost, 17000.0);
    assert_eq!(hyb.ilr_pv, 1.3);
    assert_eq!(hyb.ilr_wind, FREE_RATIO, "missing ilr_wind column defaults to the sentinel");
    assert_eq!(hyb.self_discharge, 0.05);
    assert_eq!(hyb.power_to_energy_dc, 0.25);
    assert_eq!(hyb.cf_pv, vec![0.5, 0.75]);

    let batt = &sys.colo_resources[1];
    assert_eq!(batt.eff_charge_ac, 1.0, "empty efficiency defaults to lossless");
    assert_eq!(batt.ilr_pv, FREE_RATIO, "empty ratio cell defaults to the sentinel");
    assert_eq!(batt.cf_pv, vec![0.0, 0.0], "no VRE, so capacity factors default to zero");

    assert_eq!(sys.thermal_resources.len(), 1);
    assert_eq!(sys.forced_battery_mw, Some(15.0));
    assert_eq!(sys.rps_share, None);
    assert_eq!(sys.nse_cost, 50000.0);
    assert!(domain::validate(&sys).is_empty(), "{:?}", domain::validate(&sys));
}

#[test]
fn optional_files_default_to_empty() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "zones.csv", "id\nz\n");
    write(dir.path(), "demand.csv", "zone,t,mwh\nz,0,5\n");
    write(
        dir.path(),
        "colo_resources.csv",
        "id,zone,components_present\nplain,z,grid;wind\n",
    );
    write(dir.path(), "colo_capacity_factors.csv", "resource,t,cf_pv,cf_wind\nplain,0,0,0.4\n");
    let sys = domain::load_system(dir.path()).unwrap();
    assert!(sys.lines.is_empty());
    assert!(sys.thermal_resources.is_empty());
    assert_eq!(sys.forced_battery_mw, None);
    assert_eq!(sys.nse_cost, DEFAULT_NSE_COST);
}

#[test]
fn unknown_zone_in_demand_names_file_and_line() {
    let dir = TempDir::new().unwrap();
    full_fixture(dir.path());
    write(
        dir.path(),
        "demand.csv",
        "zone,t,mwh\nnorth,0,100\nnorth,1,120\nwest,0,80\n",
    );
    let err = domain::load_system(dir.path()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("demand.csv:4"), "want file:line, got {msg}");
    assert!(msg.contains("west"), "{msg}");
}

#[test]
fn bad_number_names_file_line_and_column() {
    let dir = TempDir::new().unwrap();
    full_fixture(dir.path());
    write(
        dir.path(),
        "lines.csv",
        "from,to,existing_mw,max_new_mw,cost_per_mw_yr,km\nnorth,south,fifty,,12000,200\n",
    );
    let msg = domain::load_system(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("lines.csv:2"), "{msg}");
    assert!(msg.contains("existing_mw"), "{msg}");
    assert!(msg.contains("fifty"), "{msg}");
}

#[test]
fn short_capacity_factor_series_names_the_resource() {
    let dir = TempDir::new().unwrap();
    full_fixture(dir.path());
    write(
        dir.path(),
        "colo_capacity_factors.csv",
        "resource,t,cf_pv,cf_wind\nhyb,0,0.5,0\n",
    );
    let msg = domain::load_system(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("hyb"), "{msg}");
    assert!(msg.contains("expected 2"), "{msg}");
}

#[test]
fn missing_required_file_is_reported() {
    let dir = TempDir::new().unwrap();
    full_fixture(dir.path());
    fs::remove_file(dir.path().join("colo_resources.csv")).unwrap();
    let msg = domain::load_system(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("colo_resources.csv"), "{msg}");
}

#[test]
fn unknown_policy_key_and_component_kind_are_rejected() {
    let dir = TempDir::new().unwrap();
    full_fixture(dir.path());
    write(dir.path(), "policy.csv", "key,value\nfrequency_reserves,1\n");
    let msg = domain::load_system(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("frequency_reserves"), "{msg}");

    full_fixture(dir.path());
    write(
        dir.path(),
        "colo_resources.csv",
        "id,zone,components_present\nbad,north,grid;flywheel\n",
    );
    let msg = domain::load_system(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("flywheel"), "{msg}");
    assert!(msg.contains("colo_resources.csv:2"), "{msg}");
}

#[test]
fn unknown_zone_on_resource_is_a_load_error() {
    let dir = TempDir::new().unwrap();
    full_fixture(dir.path());
    write(
        dir.path(),
        "colo_resources.csv",
        "id,zone,components_present\nlost,XX,grid;wind\n",
    );
    let msg = domain::load_system(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("colo_resources.csv:2"), "{msg}");
    assert!(msg.contains("XX"), "{msg}");
}

#[test]
fn missing_hour_is_reported_per_zone() {
    let dir = TempDir::new().unwrap();
    full_fixture(dir.path());
    write(
        dir.path(),
        "demand.csv",
        "zone,t,mwh\nnorth,0,100\nnorth,1,120\nsouth,0,80\n",
    );
    let msg = domain::load_system(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("south"), "{msg}");
    assert!(msg.contains("missing hour 1"), "{msg}");
}

fn arb_spec() -> impl Strategy<Value = ComponentSpec> {
    (
        0.0..200.0f64,
        prop_oneof![Just(f64::INFINITY), 10.0..2000.0f64],
        0.0..5.0f64,
        0.0..60000.0f64,
        0.0..9000.0f64,
        -20.0..40.0f64,
    )
        .prop_map(|(existing, max_total, min_total, invest_cost, fom_cost, vom_cost)| {
            ComponentSpec { existing, max_total, min_total, invest_cost, fom_cost, vom_cost }
        })
}

fn arb_resource(idx: usize, zone: String, horizon: usize) -> impl Strategy<Value = ColoResource> {
    let archetypes = prop_oneof![
        Just(vec![ComponentKind::Grid, ComponentKind::Pv, ComponentKind::Inverter]),
        Just(vec![ComponentKind::Grid, ComponentKind::Wind]),
        Just(vec![
            ComponentKind::Grid,
            ComponentKind::Inverter,
            ComponentKind::StorageEnergy,
            ComponentKind::ChargeDc,
            ComponentKind::DischargeDc,
        ]),
        Just(vec![
            ComponentKind::Grid,
            ComponentKind::StorageEnergy,
            ComponentKind::ChargeAc,
            ComponentKind::DischargeAc,
        ]),
        Just(vec![
            ComponentKind::Grid,
            ComponentKind::Pv,
            ComponentKind::Wind,
            ComponentKind::Inverter,
            ComponentKind::StorageEnergy,
            ComponentKind::ChargeDc,
            ComponentKind::DischargeDc,
            ComponentKind::ChargeAc,
            ComponentKind::DischargeAc,
        ]),
    ];
    (
        archetypes,
        proptest::collection::vec(arb_spec(), 9),
        proptest::collection::vec(0.0..=1.0f64, horizon),
        proptest::collection::vec(0.0..=1.0f64, horizon),
        0.5..1.0f64,
        0.0..0.2f64,
        prop_oneof![Just(0.0), 0.05..1.0f64],
        prop_oneof![Just(FREE_RATIO), 0.5..2.0f64],
        0.0..300.0f64,
    )
        .prop_map(
            move |(kinds, specs, cf_pv, cf_wind, eff, lambda, p2e, ilr, km)| {
                let mut components = BTreeMap::new();
                for (kind, spec) in kinds.iter().zip(specs) {
                    components.insert(*kind, spec);
                }
                let vre = kinds.contains(&ComponentKind::Pv) || kinds.contains(&ComponentKind::Wind);
                ColoResource {
                    id: format!("r{idx}"),
                    zone: zone.clone(),
                    components,
                    inverter_efficiency: eff,
                    eff_charge_dc: eff,
                    eff_discharge_dc: eff,
                    eff_charge_ac: eff,
                    eff_discharge_ac: eff,
                    self_discharge: lambda,
                    power_to_energy_dc: p2e,
                    power_to_energy_ac: p2e,
                    ilr_pv: ilr,
                    ilr_wind: ilr,
                    interconnection_km: km,
                    cf_pv: if vre { cf_pv } else { vec![0.0; horizon] },
                    cf_wind: if vre { cf_wind } else { vec![0.0; horizon] },
                }
            },
        )
}

fn arb_system() -> impl Strategy<Value = SystemDescription> {
    (1usize..=2, 1usize..=4).prop_flat_map(|(nz, horizon)| {
        let zone_ids: Vec<String> = (0..nz).map(|i| format!("z{i}")).collect();
        let zones = proptest::collection::vec(0.0..500.0f64, horizon * nz).prop_map({
            let zone_ids = zone_ids.clone();
            move |flat| {
                zone_ids
                    .iter()
                    .enumerate()
                    .map(|(i, id)| Zone {
                        id: id.clone(),
                        demand: flat[i * horizon..(i + 1) * horizon].to_vec(),
                    })
                    .collect::<Vec<_>>()
            }
        });
        let resources = {
            let zone_ids = zone_ids.clone();
            (0usize..=2).prop_flat_map(move |nr| {
                let strategies: Vec<_> = (0..nr)
                    .map(|i| arb_resource(i, zone_ids[i % zone_ids.len()].clone(), horizon))
                    .collect();
                strategies
            })
        };
        let line = if nz == 2 {
            proptest::option::of((0.0..100.0f64, prop_oneof![Just(f64::INFINITY), 1.0..500.0f64], 0.0..20000.0f64, 1.0..400.0f64))
                .prop_map(|opt| {
                    opt.map(|(existing, max_new, cost, km)| TransportLine {
                        from: "z0".into(),
                        to: "z1".into(),
                        existing,
                        max_new,
                        cost_per_mw_yr: cost,
                        km,
                    })
                    .into_iter()
                    .collect::<Vec<_>>()
                })
                .boxed()
        } else {
            Just(Vec::new()).boxed()
        };
        let thermal = proptest::option::of((0.0..300.0f64, 0.0..100.0f64, any::<bool>())).prop_map({
            let zone = zone_ids[0].clone();
            move |opt| {
                opt.map(|(existing, vom, q)| ThermalResource {
                    id: "th0".into(),
                    zone: zone.clone(),
                    existing,
                    max_new: f64::INFINITY,
                    invest_cost: 90000.0,
                    fom_cost: 11000.0,
                    vom_cost: vom,
                    qualifies_rps: q,
                })
                .into_iter()
                .collect::<Vec<_>>()
            }
        });
        (
            zones,
            line,
            resources,
            thermal,
            proptest::option::of(0.0..50.0f64),
            proptest::option::of(0.0..=1.0f64),
            1000.0..90000.0f64,
        )
            .prop_map(
                move |(zones, lines, colo, thermal, forced, rps, nse)| SystemDescription {
                    zones,
                    lines,
                    colo_resources: colo,
                    thermal_resources: thermal,
                    horizon,
                    forced_battery_mw: forced,
                    rps_share: rps,
                    nse_cost: nse,
                },
            )
    })
}

proptest! {
    // Writing a system out and loading it back is the identity, including
    // unbounded capacities and ratio sentinels.
    #[test]
    fn write_then_load_is_identity(sys in arb_system()) {
        let dir = TempDir::new().unwrap();
        domain::write_system(&sys, dir.path()).unwrap();
        let loaded = domain::load_system(dir.path()).unwrap();
        prop_assert_eq!(loaded, sys);
    }
}
