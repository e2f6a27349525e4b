//! Input data model and CSV ingestion.
//!
//! A planning case is a directory of CSVs: `zones.csv`, `demand.csv`,
//! `colo_resources.csv`, `colo_capacity_factors.csv`, and optionally
//! `lines.csv`, `thermal.csv`, and `policy.csv`. Units are fixed: MW, MWh,
//! hourly steps, $/yr for annualized costs, km for distances. An empty cell
//! in a capacity-limit column means unbounded; an empty ratio cell means the
//! ratio is left free (sentinel -1).
//!
//! Loaders are strict about structure (missing files, unknown zones, series
//! length mismatches) and report the file and line. Value-level rules live in
//! [`validate`], which returns the full list of violations as data.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Ratio sentinel: inverter-loading ratios equal to -1 are left unconstrained.
pub const FREE_RATIO: f64 = -1.0;
/// Default cost of non-served energy, $/MWh.
pub const DEFAULT_NSE_COST: f64 = 50_000.0;

/// The component kinds a co-located resource may own behind its
/// interconnection point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentKind {
    Grid,
    Pv,
    Wind,
    StorageEnergy,
    Inverter,
    ChargeDc,
    DischargeDc,
    ChargeAc,
    DischargeAc,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 9] = [
        ComponentKind::Grid,
        ComponentKind::Pv,
        ComponentKind::Wind,
        ComponentKind::StorageEnergy,
        ComponentKind::Inverter,
        ComponentKind::ChargeDc,
        ComponentKind::DischargeDc,
        ComponentKind::ChargeAc,
        ComponentKind::DischargeAc,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ComponentKind::Grid => "grid",
            ComponentKind::Pv => "pv",
            ComponentKind::Wind => "wind",
            ComponentKind::StorageEnergy => "storage_energy",
            ComponentKind::Inverter => "inverter",
            ComponentKind::ChargeDc => "charge_dc",
            ComponentKind::DischargeDc => "discharge_dc",
            ComponentKind::ChargeAc => "charge_ac",
            ComponentKind::DischargeAc => "discharge_ac",
        }
    }

    pub fn parse(s: &str) -> Option<ComponentKind> {
        ComponentKind::ALL.into_iter().find(|k| k.label() == s)
    }

    /// True for the components whose capacity is an energy (MWh) rather than
    /// a power (MW).
    pub fn is_energy(self) -> bool {
        self == ComponentKind::StorageEnergy
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Per-component capacity limits and cost coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    /// Installed capacity carried into the planning year, MW (MWh for energy).
    pub existing: f64,
    /// Cap on total (existing + new - retired) capacity; infinite = none.
    pub max_total: f64,
    /// Floor on total capacity.
    pub min_total: f64,
    /// Annualized investment cost on new builds, $/MW-yr ($/MWh-yr for energy).
    pub invest_cost: f64,
    /// Fixed O&M on total capacity, $/MW-yr.
    pub fom_cost: f64,
    /// Variable cost on the component's dispatched energy, $/MWh. May be
    /// negative (production credits).
    pub vom_cost: f64,
}

impl Default for ComponentSpec {
    fn default() -> Self {
        ComponentSpec {
            existing: 0.0,
            max_total: f64::INFINITY,
            min_total: 0.0,
            invest_cost: 0.0,
            fom_cost: 0.0,
            vom_cost: 0.0,
        }
    }
}

/// A co-located resource: up to nine components behind one interconnection.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoResource {
    pub id: String,
    pub zone: String,
    /// Present components and their specs; absence means the component (and
    /// its variables) does not exist for this resource.
    pub components: BTreeMap<ComponentKind, ComponentSpec>,
    /// One-way inverter efficiency applied to DC-side flows.
    pub inverter_efficiency: f64,
    pub eff_charge_dc: f64,
    pub eff_discharge_dc: f64,
    pub eff_charge_ac: f64,
    pub eff_discharge_ac: f64,
    /// Hourly self-discharge fraction of state of charge.
    pub self_discharge: f64,
    /// Power-to-energy ratio (1/h) tying DC charge+discharge to energy
    /// capacity; 0 means the DC power capacities are sized independently.
    pub power_to_energy_dc: f64,
    pub power_to_energy_ac: f64,
    /// Fixed PV DC : inverter AC ratio; [`FREE_RATIO`] leaves it optimized.
    pub ilr_pv: f64,
    pub ilr_wind: f64,
    /// Spur-line distance to the point of interconnection, km.
    pub interconnection_km: f64,
    /// Hourly availability per MW of PV (DC) capacity; length T.
    pub cf_pv: Vec<f64>,
    pub cf_wind: Vec<f64>,
}

impl ColoResource {
    pub fn has(&self, kind: ComponentKind) -> bool {
        self.components.contains_key(&kind)
    }

    pub fn spec(&self, kind: ComponentKind) -> Option<&ComponentSpec> {
        self.components.get(&kind)
    }

    /// DC storage power tied to energy capacity through `power_to_energy_dc`.
    pub fn is_symmetric_dc(&self) -> bool {
        self.power_to_energy_dc > 0.0
            && self.has(ComponentKind::ChargeDc)
            && self.has(ComponentKind::DischargeDc)
    }

    pub fn is_symmetric_ac(&self) -> bool {
        self.power_to_energy_ac > 0.0
            && self.has(ComponentKind::ChargeAc)
            && self.has(ComponentKind::DischargeAc)
    }

    pub fn has_vre(&self) -> bool {
        self.has(ComponentKind::Pv) || self.has(ComponentKind::Wind)
    }

    pub fn has_storage(&self) -> bool {
        self.has(ComponentKind::StorageEnergy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: String,
    /// Hourly load, MWh; length T.
    pub demand: Vec<f64>,
}

/// Lossless transport corridor between two zones.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportLine {
    pub from: String,
    pub to: String,
    pub existing: f64,
    /// Cap on added capacity; infinite = none.
    pub max_new: f64,
    /// Annualized expansion cost, $/MW-yr.
    pub cost_per_mw_yr: f64,
    pub km: f64,
}

impl TransportLine {
    pub fn id(&self) -> String {
        format!("{}-{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalResource {
    pub id: String,
    pub zone: String,
    pub existing: f64,
    /// Cap on new builds; infinite = none.
    pub max_new: f64,
    pub invest_cost: f64,
    pub fom_cost: f64,
    /// Variable O&M plus fuel, $/MWh.
    pub vom_cost: f64,
    pub qualifies_rps: bool,
}

/// A complete planning case over one operating year at hourly resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDescription {
    pub zones: Vec<Zone>,
    pub lines: Vec<TransportLine>,
    pub colo_resources: Vec<ColoResource>,
    pub thermal_resources: Vec<ThermalResource>,
    /// Number of hourly steps T.
    pub horizon: usize,
    /// When set, total new AC-deliverable storage power must equal this.
    pub forced_battery_mw: Option<f64>,
    /// When set, qualifying annual generation must cover this demand share.
    pub rps_share: Option<f64>,
    /// Cost of non-served energy, $/MWh.
    pub nse_cost: f64,
}

impl SystemDescription {
    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }
}

/// A value-level rule violation, reported as data so callers can collect and
/// present all of them at once.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub entity: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.entity, self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("missing input file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: missing column {column:?}", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}:{line}: column {column:?}: {message}", path.display())]
    Field {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{}:{line}: {message}", path.display())]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Inconsistent { path: PathBuf, message: String },
}

/// One parsed CSV with header-name field access and line-accurate errors.
pub(crate) struct Sheet {
    pub(crate) path: PathBuf,
    pub(crate) headers: Vec<String>,
    pub(crate) records: Vec<(u64, csv::StringRecord)>,
}

impl Sheet {
    pub(crate) fn open(path: &Path) -> Result<Sheet, LoadError> {
        if !path.exists() {
            return Err(LoadError::MissingFile(path.to_path_buf()));
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| LoadError::Csv { path: path.to_path_buf(), source })?;
        let headers = reader
            .headers()
            .map_err(|source| LoadError::Csv { path: path.to_path_buf(), source })?
            .iter()
            .map(str::to_string)
            .collect();
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|source| LoadError::Csv { path: path.to_path_buf(), source })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            records.push((line, rec));
        }
        Ok(Sheet { path: path.to_path_buf(), headers, records })
    }

    /// Opens the sheet, or yields no rows when the file does not exist.
    pub(crate) fn open_optional(path: &Path) -> Result<Sheet, LoadError> {
        if !path.exists() {
            return Ok(Sheet {
                path: path.to_path_buf(),
                headers: Vec::new(),
                records: Vec::new(),
            });
        }
        Sheet::open(path)
    }

    pub(crate) fn column(&self, name: &str) -> Result<usize, LoadError> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            LoadError::MissingColumn { path: self.path.clone(), column: name.to_string() }
        })
    }

    pub(crate) fn column_opt(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub(crate) fn raw<'a>(&self, rec: &'a csv::StringRecord, col: usize) -> &'a str {
        rec.get(col).unwrap_or("")
    }

    pub(crate) fn field_err(&self, line: u64, column: &str, message: impl Into<String>) -> LoadError {
        LoadError::Field {
            path: self.path.clone(),
            line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn row_err(&self, line: u64, message: impl Into<String>) -> LoadError {
        LoadError::Row { path: self.path.clone(), line, message: message.into() }
    }

    pub(crate) fn req_str(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<String, LoadError> {
        let v = self.raw(rec, col);
        if v.is_empty() {
            return Err(self.field_err(line, &self.headers[col], "value required"));
        }
        Ok(v.to_string())
    }

    pub(crate) fn req_f64(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<f64, LoadError> {
        let v = self.raw(rec, col);
        let parsed: f64 = v
            .parse()
            .map_err(|_| self.field_err(line, &self.headers[col], format!("bad number {v:?}")))?;
        if !parsed.is_finite() {
            return Err(self.field_err(line, &self.headers[col], "number must be finite"));
        }
        Ok(parsed)
    }

    /// Empty cell falls back to `default`; otherwise a finite number.
    pub(crate) fn f64_or(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        col: Option<usize>,
        default: f64,
    ) -> Result<f64, LoadError> {
        let Some(col) = col else { return Ok(default) };
        let v = self.raw(rec, col);
        if v.is_empty() {
            return Ok(default);
        }
        let parsed: f64 = v
            .parse()
            .map_err(|_| self.field_err(line, &self.headers[col], format!("bad number {v:?}")))?;
        if !parsed.is_finite() {
            return Err(self.field_err(line, &self.headers[col], "number must be finite"));
        }
        Ok(parsed)
    }

    pub(crate) fn req_usize(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<usize, LoadError> {
        let v = self.raw(rec, col);
        v.parse().map_err(|_| {
            self.field_err(line, &self.headers[col], format!("bad hour index {v:?}"))
        })
    }
}

/// Reads a full planning case from a fixture directory.
pub fn load_system(dir: &Path) -> Result<SystemDescription, LoadError> {
    let zones_sheet = Sheet::open(&dir.join("zones.csv"))?;
    let id_col = zones_sheet.column("id")?;
    let mut zones: Vec<Zone> = Vec::new();
    for (line, rec) in &zones_sheet.records {
        let id = zones_sheet.req_str(*line, rec, id_col)?;
        if zones.iter().any(|z| z.id == id) {
            return Err(zones_sheet.row_err(*line, format!("duplicate zone id {id:?}")));
        }
        zones.push(Zone { id, demand: Vec::new() });
    }

    // demand.csv fixes the horizon: every zone needs each hour 0..T once.
    let demand_sheet = Sheet::open(&dir.join("demand.csv"))?;
    let (zc, tc, mc) = (
        demand_sheet.column("zone")?,
        demand_sheet.column("t")?,
        demand_sheet.column("mwh")?,
    );
    let mut series: BTreeMap<String, Vec<(u64, usize, f64)>> = BTreeMap::new();
    for (line, rec) in &demand_sheet.records {
        let zone = demand_sheet.req_str(*line, rec, zc)?;
        if !zones.iter().any(|z| z.id == zone) {
            return Err(demand_sheet.row_err(*line, format!("unknown zone {zone:?}")));
        }
        let t = demand_sheet.req_usize(*line, rec, tc)?;
        let mwh = demand_sheet.req_f64(*line, rec, mc)?;
        series.entry(zone).or_default().push((*line, t, mwh));
    }
    let horizon = series.values().map(|v| v.len()).max().unwrap_or(0);
    for zone in zones.iter_mut() {
        let rows = series.remove(&zone.id).unwrap_or_default();
        let mut demand = vec![f64::NAN; horizon];
        for (line, t, mwh) in rows {
            if t >= horizon {
                return Err(demand_sheet.row_err(
                    line,
                    format!("hour {t} out of range for inferred horizon {horizon}"),
                ));
            }
            if !demand[t].is_nan() {
                return Err(demand_sheet
                    .row_err(line, format!("duplicate hour {t} for zone {:?}", zone.id)));
            }
            demand[t] = mwh;
        }
        if let Some(t) = demand.iter().position(|v| v.is_nan()) {
            return Err(LoadError::Inconsistent {
                path: demand_sheet.path.clone(),
                message: format!(
                    "zone {:?} is missing hour {t}: expected {horizon} hourly values",
                    zone.id
                ),
            });
        }
        zone.demand = demand;
    }

    let lines = load_lines(&dir.join("lines.csv"), &zones)?;
    let mut colo_resources = load_colo_resources(&dir.join("colo_resources.csv"), &zones)?;
    load_capacity_factors(
        &dir.join("colo_capacity_factors.csv"),
        &mut colo_resources,
        horizon,
    )?;
    let thermal_resources = load_thermal(&dir.join("thermal.csv"), &zones)?;
    let policy = load_policy(&dir.join("policy.csv"))?;

    Ok(SystemDescription {
        zones,
        lines,
        colo_resources,
        thermal_resources,
        horizon,
        forced_battery_mw: policy.forced_battery_mw,
        rps_share: policy.rps_share,
        nse_cost: policy.nse_cost,
    })
}

fn load_lines(path: &Path, zones: &[Zone]) -> Result<Vec<TransportLine>, LoadError> {
    let sheet = Sheet::open_optional(path)?;
    if sheet.records.is_empty() {
        return Ok(Vec::new());
    }
    let from_c = sheet.column("from")?;
    let to_c = sheet.column("to")?;
    let ex_c = sheet.column("existing_mw")?;
    let new_c = sheet.column("max_new_mw")?;
    let cost_c = sheet.column("cost_per_mw_yr")?;
    let km_c = sheet.column("km")?;
    let mut lines = Vec::new();
    for (line, rec) in &sheet.records {
        let from = sheet.req_str(*line, rec, from_c)?;
        let to = sheet.req_str(*line, rec, to_c)?;
        for z in [&from, &to] {
            if !zones.iter().any(|zone| &zone.id == z) {
                return Err(sheet.row_err(*line, format!("unknown zone {z:?}")));
            }
        }
        let candidate = TransportLine {
            from,
            to,
            existing: sheet.req_f64(*line, rec, ex_c)?,
            max_new: sheet.f64_or(*line, rec, Some(new_c), f64::INFINITY)?,
            cost_per_mw_yr: sheet.req_f64(*line, rec, cost_c)?,
            km: sheet.req_f64(*line, rec, km_c)?,
        };
        if lines.iter().any(|l: &TransportLine| l.id() == candidate.id()) {
            return Err(sheet.row_err(*line, format!("duplicate line {:?}", candidate.id())));
        }
        lines.push(candidate);
    }
    Ok(lines)
}

fn load_colo_resources(path: &Path, zones: &[Zone]) -> Result<Vec<ColoResource>, LoadError> {
    let sheet = Sheet::open(path)?;
    let id_c = sheet.column("id")?;
    let zone_c = sheet.column("zone")?;
    let comps_c = sheet.column("components_present")?;
    let mut out: Vec<ColoResource> = Vec::new();
    for (line, rec) in &sheet.records {
        let id = sheet.req_str(*line, rec, id_c)?;
        if out.iter().any(|r| r.id == id) {
            return Err(sheet.row_err(*line, format!("duplicate resource id {id:?}")));
        }
        let zone = sheet.req_str(*line, rec, zone_c)?;
        if !zones.iter().any(|z| z.id == zone) {
            return Err(sheet.row_err(*line, format!("unknown zone {zone:?}")));
        }
        let comps_raw = sheet.req_str(*line, rec, comps_c)?;
        let mut components = BTreeMap::new();
        for token in comps_raw.split(';').filter(|s| !s.is_empty()) {
            let kind = ComponentKind::parse(token).ok_or_else(|| {
                sheet.row_err(*line, format!("unknown component kind {token:?}"))
            })?;
            let label = kind.label();
            let spec = ComponentSpec {
                existing: sheet.f64_or(*line, rec, sheet.column_opt(&format!("{label}_existing")), 0.0)?,
                max_total: sheet.f64_or(
                    *line,
                    rec,
                    sheet.column_opt(&format!("{label}_max")),
                    f64::INFINITY,
                )?,
                min_total: sheet.f64_or(*line, rec, sheet.column_opt(&format!("{label}_min")), 0.0)?,
                invest_cost: sheet.f64_or(*line, rec, sheet.column_opt(&format!("{label}_invest")), 0.0)?,
                fom_cost: sheet.f64_or(*line, rec, sheet.column_opt(&format!("{label}_fom")), 0.0)?,
                vom_cost: sheet.f64_or(*line, rec, sheet.column_opt(&format!("{label}_vom")), 0.0)?,
            };
            if components.insert(kind, spec).is_some() {
                return Err(sheet.row_err(*line, format!("component {token:?} listed twice")));
            }
        }
        out.push(ColoResource {
            id,
            zone,
            components,
            inverter_efficiency: sheet.f64_or(*line, rec, sheet.column_opt("inverter_efficiency"), 1.0)?,
            eff_charge_dc: sheet.f64_or(*line, rec, sheet.column_opt("eff_charge_dc"), 1.0)?,
            eff_discharge_dc: sheet.f64_or(*line, rec, sheet.column_opt("eff_discharge_dc"), 1.0)?,
            eff_charge_ac: sheet.f64_or(*line, rec, sheet.column_opt("eff_charge_ac"), 1.0)?,
            eff_discharge_ac: sheet.f64_or(*line, rec, sheet.column_opt("eff_discharge_ac"), 1.0)?,
            self_discharge: sheet.f64_or(*line, rec, sheet.column_opt("self_discharge"), 0.0)?,
            power_to_energy_dc: sheet.f64_or(*line, rec, sheet.column_opt("power_to_energy_dc"), 0.0)?,
            power_to_energy_ac: sheet.f64_or(*line, rec, sheet.column_opt("power_to_energy_ac"), 0.0)?,
            ilr_pv: sheet.f64_or(*line, rec, sheet.column_opt("ilr_pv"), FREE_RATIO)?,
            ilr_wind: sheet.f64_or(*line, rec, sheet.column_opt("ilr_wind"), FREE_RATIO)?,
            interconnection_km: sheet.f64_or(*line, rec, sheet.column_opt("interconnection_km"), 0.0)?,
            cf_pv: Vec::new(),
            cf_wind: Vec::new(),
        });
    }
    Ok(out)
}

fn load_capacity_factors(
    path: &Path,
    resources: &mut [ColoResource],
    horizon: usize,
) -> Result<(), LoadError> {
    let sheet = Sheet::open_optional(path)?;
    for r in resources.iter_mut() {
        r.cf_pv = vec![0.0; horizon];
        r.cf_wind = vec![0.0; horizon];
    }
    if sheet.records.is_empty() {
        for r in resources.iter() {
            if r.has_vre() {
                return Err(LoadError::Inconsistent {
                    path: path.to_path_buf(),
                    message: format!(
                        "resource {:?} has VRE components but no capacity factors",
                        r.id
                    ),
                });
            }
        }
        return Ok(());
    }
    let res_c = sheet.column("resource")?;
    let t_c = sheet.column("t")?;
    let pv_c = sheet.column("cf_pv")?;
    let wind_c = sheet.column("cf_wind")?;
    let mut seen: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for (line, rec) in &sheet.records {
        let res_id = sheet.req_str(*line, rec, res_c)?;
        let resource = resources
            .iter_mut()
            .find(|r| r.id == res_id)
            .ok_or_else(|| sheet.row_err(*line, format!("unknown resource {res_id:?}")))?;
        let t = sheet.req_usize(*line, rec, t_c)?;
        if t >= horizon {
            return Err(sheet.row_err(
                *line,
                format!("hour {t} out of range for horizon {horizon} (resource {res_id:?})"),
            ));
        }
        let mask = seen.entry(res_id.clone()).or_insert_with(|| vec![false; horizon]);
        if mask[t] {
            return Err(sheet.row_err(*line, format!("duplicate hour {t} for resource {res_id:?}")));
        }
        mask[t] = true;
        resource.cf_pv[t] = sheet.f64_or(*line, rec, Some(pv_c), 0.0)?;
        resource.cf_wind[t] = sheet.f64_or(*line, rec, Some(wind_c), 0.0)?;
    }
    for r in resources.iter() {
        if !r.has_vre() {
            continue;
        }
        let got = seen.get(&r.id).map(|m| m.iter().filter(|&&b| b).count()).unwrap_or(0);
        if got != horizon {
            return Err(LoadError::Inconsistent {
                path: path.to_path_buf(),
                message: format!(
                    "capacity-factor series for resource {:?} has {got} hours, expected {horizon}",
                    r.id
                ),
            });
        }
    }
    Ok(())
}

fn load_thermal(path: &Path, zones: &[Zone]) -> Result<Vec<ThermalResource>, LoadError> {
    let sheet = Sheet::open_optional(path)?;
    if sheet.records.is_empty() {
        return Ok(Vec::new());
    }
    let id_c = sheet.column("id")?;
    let zone_c = sheet.column("zone")?;
    let ex_c = sheet.column("existing_mw")?;
    let new_c = sheet.column("max_new_mw")?;
    let inv_c = sheet.column("invest_cost_per_mw_yr")?;
    let fom_c = sheet.column("fom_cost_per_mw_yr")?;
    let vom_c = sheet.column("vom_plus_fuel_per_mwh")?;
    let rps_c = sheet.column("qualifies_rps")?;
    let mut out: Vec<ThermalResource> = Vec::new();
    for (line, rec) in &sheet.records {
        let id = sheet.req_str(*line, rec, id_c)?;
        if out.iter().any(|r| r.id == id) {
            return Err(sheet.row_err(*line, format!("duplicate thermal id {id:?}")));
        }
        let zone = sheet.req_str(*line, rec, zone_c)?;
        if !zones.iter().any(|z| z.id == zone) {
            return Err(sheet.row_err(*line, format!("unknown zone {zone:?}")));
        }
        let rps_raw = sheet.raw(rec, rps_c);
        let qualifies_rps = match rps_raw {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" | "" => false,
            other => {
                return Err(sheet.field_err(*line, "qualifies_rps", format!("bad flag {other:?}")))
            }
        };
        out.push(ThermalResource {
            id,
            zone,
            existing: sheet.req_f64(*line, rec, ex_c)?,
            max_new: sheet.f64_or(*line, rec, Some(new_c), f64::INFINITY)?,
            invest_cost: sheet.req_f64(*line, rec, inv_c)?,
            fom_cost: sheet.req_f64(*line, rec, fom_c)?,
            vom_cost: sheet.req_f64(*line, rec, vom_c)?,
            qualifies_rps,
        });
    }
    Ok(out)
}

struct PolicyValues {
    forced_battery_mw: Option<f64>,
    rps_share: Option<f64>,
    nse_cost: f64,
}

fn load_policy(path: &Path) -> Result<PolicyValues, LoadError> {
    let sheet = Sheet::open_optional(path)?;
    let mut out = PolicyValues {
        forced_battery_mw: None,
        rps_share: None,
        nse_cost: DEFAULT_NSE_COST,
    };
    if sheet.records.is_empty() {
        return Ok(out);
    }
    let key_c = sheet.column("key")?;
    let val_c = sheet.column("value")?;
    for (line, rec) in &sheet.records {
        let key = sheet.req_str(*line, rec, key_c)?;
        let raw = sheet.raw(rec, val_c);
        let value = if raw.is_empty() {
            None
        } else {
            let v: f64 = raw.parse().map_err(|_| {
                sheet.field_err(*line, "value", format!("bad number {raw:?}"))
            })?;
            Some(v)
        };
        match key.as_str() {
            "forced_battery_mw" => out.forced_battery_mw = value,
            "rps_share" => out.rps_share = value,
            "nse_cost" => out.nse_cost = value.unwrap_or(DEFAULT_NSE_COST),
            other => return Err(sheet.row_err(*line, format!("unknown policy key {other:?}"))),
        }
    }
    Ok(out)
}

fn fmt_opt_inf(v: f64) -> String {
    if v.is_infinite() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Writes a system back out as a canonical fixture directory; the inverse of
/// [`load_system`] for validated systems.
pub fn write_system(system: &SystemDescription, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut zones = String::from("id\n");
    for z in &system.zones {
        zones.push_str(&format!("{}\n", z.id));
    }
    std::fs::write(dir.join("zones.csv"), zones)?;

    let mut demand = String::from("zone,t,mwh\n");
    for z in &system.zones {
        for (t, v) in z.demand.iter().enumerate() {
            demand.push_str(&format!("{},{t},{v}\n", z.id));
        }
    }
    std::fs::write(dir.join("demand.csv"), demand)?;

    let mut lines = String::from("from,to,existing_mw,max_new_mw,cost_per_mw_yr,km\n");
    for l in &system.lines {
        lines.push_str(&format!(
            "{},{},{},{},{},{}\n",
            l.from,
            l.to,
            l.existing,
            fmt_opt_inf(l.max_new),
            l.cost_per_mw_yr,
            l.km
        ));
    }
    std::fs::write(dir.join("lines.csv"), lines)?;

    let mut header = String::from("id,zone,components_present");
    for kind in ComponentKind::ALL {
        let l = kind.label();
        header.push_str(&format!(
            ",{l}_existing,{l}_max,{l}_min,{l}_invest,{l}_fom,{l}_vom"
        ));
    }
    header.push_str(
        ",inverter_efficiency,eff_charge_dc,eff_discharge_dc,eff_charge_ac,eff_discharge_ac,\
         self_discharge,power_to_energy_dc,power_to_energy_ac,ilr_pv,ilr_wind,interconnection_km\n",
    );
    let mut colo = header;
    for r in &system.colo_resources {
        let comps: Vec<&str> = r.components.keys().map(|k| k.label()).collect();
        colo.push_str(&format!("{},{},{}", r.id, r.zone, comps.join(";")));
        for kind in ComponentKind::ALL {
            match r.components.get(&kind) {
                Some(s) => colo.push_str(&format!(
                    ",{},{},{},{},{},{}",
                    s.existing,
                    fmt_opt_inf(s.max_total),
                    s.min_total,
                    s.invest_cost,
                    s.fom_cost,
                    s.vom_cost
                )),
                None => colo.push_str(",,,,,,"),
            }
        }
        colo.push_str(&format!(
            ",{},{},{},{},{},{},{},{},{},{},{}\n",
            r.inverter_efficiency,
            r.eff_charge_dc,
            r.eff_discharge_dc,
            r.eff_charge_ac,
            r.eff_discharge_ac,
            r.self_discharge,
            r.power_to_energy_dc,
            r.power_to_energy_ac,
            r.ilr_pv,
            r.ilr_wind,
            r.interconnection_km
        ));
    }
    std::fs::write(dir.join("colo_resources.csv"), colo)?;

    let mut cf = String::from("resource,t,cf_pv,cf_wind\n");
    for r in &system.colo_resources {
        if !r.has_vre() {
            continue;
        }
        for t in 0..system.horizon {
            cf.push_str(&format!("{},{t},{},{}\n", r.id, r.cf_pv[t], r.cf_wind[t]));
        }
    }
    std::fs::write(dir.join("colo_capacity_factors.csv"), cf)?;

    let mut thermal = String::from(
        "id,zone,existing_mw,max_new_mw,invest_cost_per_mw_yr,fom_cost_per_mw_yr,\
         vom_plus_fuel_per_mwh,qualifies_rps\n",
    );
    for th in &system.thermal_resources {
        thermal.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            th.id,
            th.zone,
            th.existing,
            fmt_opt_inf(th.max_new),
            th.invest_cost,
            th.fom_cost,
            th.vom_cost,
            th.qualifies_rps
        ));
    }
    std::fs::write(dir.join("thermal.csv"), thermal)?;

    let mut policy = String::from("key,value\n");
    if let Some(v) = system.forced_battery_mw {
        policy.push_str(&format!("forced_battery_mw,{v}\n"));
    }
    if let Some(v) = system.rps_share {
        policy.push_str(&format!("rps_share,{v}\n"));
    }
    policy.push_str(&format!("nse_cost,{}\n", system.nse_cost));
    std::fs::write(dir.join("policy.csv"), policy)
}

/// Checks all value-level rules and returns every violation found.
pub fn validate(system: &SystemDescription) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |entity: &str, field: &str, message: String| {
        out.push(Violation {
            entity: entity.to_string(),
            field: field.to_string(),
            message,
        });
    };

    if system.horizon == 0 {
        push("system", "horizon", "horizon must be at least one hour".into());
    }
    for z in &system.zones {
        for (t, &d) in z.demand.iter().enumerate() {
            if d < 0.0 {
                push(&format!("zone {}", z.id), "demand", format!("negative demand {d} at hour {t}"));
            }
        }
    }
    for l in &system.lines {
        let entity = format!("line {}", l.id());
        if l.from == l.to {
            push(&entity, "from/to", "line endpoints must differ".into());
        }
        for (field, v) in [
            ("existing_mw", l.existing),
            ("cost_per_mw_yr", l.cost_per_mw_yr),
            ("km", l.km),
        ] {
            if v < 0.0 {
                push(&entity, field, format!("must be nonnegative, got {v}"));
            }
        }
        if l.max_new < 0.0 {
            push(&entity, "max_new_mw", format!("must be nonnegative, got {}", l.max_new));
        }
    }
    for th in &system.thermal_resources {
        let entity = format!("thermal {}", th.id);
        if system.zone_index(&th.zone).is_none() {
            push(&entity, "zone", format!("unknown zone {:?}", th.zone));
        }
        for (field, v) in [
            ("existing_mw", th.existing),
            ("max_new_mw", th.max_new),
            ("invest_cost_per_mw_yr", th.invest_cost),
            ("fom_cost_per_mw_yr", th.fom_cost),
            ("vom_plus_fuel_per_mwh", th.vom_cost),
        ] {
            if v < 0.0 {
                push(&entity, field, format!("must be nonnegative, got {v}"));
            }
        }
    }

    for r in &system.colo_resources {
        let entity = format!("resource {}", r.id);
        if system.zone_index(&r.zone).is_none() {
            push(&entity, "zone", format!("unknown zone {:?}", r.zone));
        }
        if r.interconnection_km < 0.0 {
            push(&entity, "interconnection_km", format!("must be nonnegative, got {}", r.interconnection_km));
        }
        for (kind, spec) in &r.components {
            let prefix = kind.label();
            for (suffix, v) in [
                ("existing", spec.existing),
                ("min", spec.min_total),
                ("invest", spec.invest_cost),
                ("fom", spec.fom_cost),
            ] {
                if v < 0.0 {
                    push(&entity, &format!("{prefix}_{suffix}"), format!("must be nonnegative, got {v}"));
                }
            }
            if spec.min_total > spec.max_total {
                push(
                    &entity,
                    &format!("{prefix}_min"),
                    format!("min {} exceeds max {}", spec.min_total, spec.max_total),
                );
            }
        }
        for (field, v) in [
            ("inverter_efficiency", r.inverter_efficiency),
            ("eff_charge_dc", r.eff_charge_dc),
            ("eff_discharge_dc", r.eff_discharge_dc),
            ("eff_charge_ac", r.eff_charge_ac),
            ("eff_discharge_ac", r.eff_discharge_ac),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                push(&entity, field, format!("efficiency must be in (0, 1], got {v}"));
            }
        }
        if !(0.0..1.0).contains(&r.self_discharge) {
            push(&entity, "self_discharge", format!("must be in [0, 1), got {}", r.self_discharge));
        }
        for (field, v) in [
            ("power_to_energy_dc", r.power_to_energy_dc),
            ("power_to_energy_ac", r.power_to_energy_ac),
        ] {
            if v < 0.0 {
                push(&entity, field, format!("must be nonnegative, got {v}"));
            }
        }
        for (field, v, relevant) in [
            ("ilr_pv", r.ilr_pv, r.has(ComponentKind::Pv)),
            ("ilr_wind", r.ilr_wind, r.has(ComponentKind::Wind)),
        ] {
            if relevant && v != FREE_RATIO && v <= 0.0 {
                push(&entity, field, format!("ratio must be positive or the -1 sentinel, got {v}"));
            }
        }

        let has_dc_pair = r.has(ComponentKind::ChargeDc) && r.has(ComponentKind::DischargeDc);
        let has_ac_pair = r.has(ComponentKind::ChargeAc) && r.has(ComponentKind::DischargeAc);
        if r.has_storage() && !has_dc_pair && !has_ac_pair {
            push(
                &entity,
                "components_present",
                "storage_energy requires a complete charge/discharge pair (dc or ac)".into(),
            );
        }
        for (a, b) in [
            (ComponentKind::ChargeDc, ComponentKind::DischargeDc),
            (ComponentKind::DischargeDc, ComponentKind::ChargeDc),
            (ComponentKind::ChargeAc, ComponentKind::DischargeAc),
            (ComponentKind::DischargeAc, ComponentKind::ChargeAc),
        ] {
            if r.has(a) && !r.has(b) {
                push(
                    &entity,
                    "components_present",
                    format!("{} requires {}", a.label(), b.label()),
                );
            }
        }
        let has_flow_comp = [
            ComponentKind::ChargeDc,
            ComponentKind::DischargeDc,
            ComponentKind::ChargeAc,
            ComponentKind::DischargeAc,
        ]
        .iter()
        .any(|&k| r.has(k));
        if has_flow_comp && !r.has_storage() {
            push(
                &entity,
                "components_present",
                "charge/discharge components require storage_energy".into(),
            );
        }
        let needs_inverter = r.has(ComponentKind::Pv)
            || r.has(ComponentKind::ChargeDc)
            || r.has(ComponentKind::DischargeDc);
        if needs_inverter && !r.has(ComponentKind::Inverter) {
            push(
                &entity,
                "components_present",
                "pv and dc-coupled storage require an inverter component".into(),
            );
        }
        for (field, series, relevant) in [
            ("cf_pv", &r.cf_pv, r.has(ComponentKind::Pv)),
            ("cf_wind", &r.cf_wind, r.has(ComponentKind::Wind)),
        ] {
            if !relevant {
                continue;
            }
            if series.len() != system.horizon {
                push(
                    &entity,
                    field,
                    format!("series length {} does not match horizon {}", series.len(), system.horizon),
                );
                continue;
            }
            for (t, &v) in series.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    push(&entity, field, format!("capacity factor {v} at hour {t} outside [0, 1]"));
                    break;
                }
            }
        }
    }

    if let Some(f) = system.forced_battery_mw {
        if f < 0.0 {
            push("policy", "forced_battery_mw", format!("must be nonnegative, got {f}"));
        } else if f > 0.0 && !system.colo_resources.iter().any(|r| r.has_storage()) {
            push(
                "policy",
                "forced_battery_mw",
                "storage power is forced but no resource has a storage_energy component".into(),
            );
        }
    }
    if let Some(s) = system.rps_share {
        if !(0.0..=1.0).contains(&s) {
            push("policy", "rps_share", format!("must be in [0, 1], got {s}"));
        }
    }
    if system.nse_cost < 0.0 {
        push("policy", "nse_cost", format!("must be nonnegative, got {}", system.nse_cost));
    }
    out
}
