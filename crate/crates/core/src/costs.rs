//! Bottom-up cost assembly.
//!
//! Starts from a 2021 AC-coupled cost breakdown of a reference
//! PV-plus-storage plant, splits it into per-unit DC and AC figures,
//! annuitizes overnight capital with per-technology finance terms
//! (capital recovery factor), folds in production and investment tax
//! credits, and emits the low/mid annualized cost tables the solver
//! consumes. Everything here is a pure transformation; file loaders at
//! the bottom bind the same steps to a scenario directory.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use crate::domain::{ComponentKind, LoadError, Sheet, SystemDescription};

/// Documented column totals of the 2021 breakdown, $M: PV, storage, inverter.
pub const BREAKDOWN_TOTALS: [f64; 3] = [83.2, 85.4, 5.5];

/// Production credit on solar generation, $/MWh, annuitized.
pub const SOLAR_PTC_PER_MWH: f64 = 12.7;
/// Production credit on wind generation, $/MWh, annuitized.
pub const WIND_PTC_PER_MWH: f64 = 13.5;
/// Effective investment-credit fraction on storage capital.
pub const STORAGE_ITC_FRACTION: f64 = 0.351;

#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("breakdown column sums [{0:.4}, {1:.4}, {2:.4}] $M do not match the documented totals [83.2, 85.4, 5.5]", .found[0], .found[1], .found[2])]
    BadBreakdownTotals { found: [f64; 3] },
    #[error("{context}: basis capacity must be positive, got {value}")]
    ZeroBasis { context: &'static str, value: f64 },
    #[error("finance parameters rejected: {0}")]
    BadFinance(String),
    #[error("{technology}: production and investment credits cannot both apply")]
    ConflictingCredits { technology: String },
    #[error("{technology}: credit value rejected: {message}")]
    BadCredit { technology: String, message: String },
    #[error("cost case input missing: {0}")]
    MissingInput(String),
}

// ---------------------------------------------------------------------------
// 2021 breakdown and the DC/AC split

/// One row of the 2021 cost breakdown. Values are $M spent on the
/// reference plant: a 100 MW DC PV array, a 60 MW / 240 MWh battery,
/// and their shared 77 MW AC bidirectional inverter.
#[derive(Debug, Clone, PartialEq)]
pub struct LineItem {
    pub name: String,
    pub pv: f64,
    pub storage: f64,
    pub inverter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown2021 {
    pub items: Vec<LineItem>,
    pub pv_basis_mw_dc: f64,
    pub storage_basis_mwh: f64,
    pub inverter_basis_mw_ac: f64,
}

impl CostBreakdown2021 {
    /// The reference 2021 breakdown. Column sums are 83.2, 85.4 and 5.5 $M.
    pub fn baseline() -> CostBreakdown2021 {
        let rows: [(&str, f64, f64, f64); 13] = [
            ("pv_module", 33.4, 0.0, 0.0),
            ("lithium_ion_battery", 0.0, 53.2, 0.0),
            ("bidirectional_inverter", 0.0, 0.0, 4.5),
            ("structural_bos", 12.5, 0.8, 0.0),
            ("electrical_bos", 7.2, 9.2, 0.0),
            ("installation", 11.1, 4.1, 0.0),
            ("epc_overhead", 5.4, 2.6, 0.0),
            ("sales_tax", 3.4, 4.1, 0.3),
            ("permitting", 0.2, 0.2, 0.0),
            ("interconnection_fee", 1.4, 0.8, 0.0),
            ("contingency", 2.1, 2.5, 0.2),
            ("developer_overhead", 2.8, 3.4, 0.2),
            ("epc_developer_profit", 3.7, 4.5, 0.3),
        ];
        CostBreakdown2021 {
            items: rows
                .into_iter()
                .map(|(name, pv, storage, inverter)| LineItem {
                    name: name.to_string(),
                    pv,
                    storage,
                    inverter,
                })
                .collect(),
            pv_basis_mw_dc: 100.0,
            storage_basis_mwh: 240.0,
            inverter_basis_mw_ac: 77.0,
        }
    }

    /// Column sums in $M: PV, storage, inverter.
    pub fn totals(&self) -> [f64; 3] {
        self.items.iter().fold([0.0; 3], |acc, it| {
            [acc[0] + it.pv, acc[1] + it.storage, acc[2] + it.inverter]
        })
    }

    /// Checks the documented column totals.
    pub fn verify(&self) -> Result<(), CostError> {
        let found = self.totals();
        let ok = found
            .iter()
            .zip(BREAKDOWN_TOTALS.iter())
            .all(|(f, e)| (f - e).abs() <= 1e-6);
        if ok { Ok(()) } else { Err(CostError::BadBreakdownTotals { found }) }
    }
}

/// Per-unit 2021 capital figures, $M per MW (or MWh). The AC figures
/// fold the shared inverter into the respective component.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCosts {
    pub pv_dc_per_mw: f64,
    pub storage_per_mwh: f64,
    pub inverter_per_mw_ac: f64,
    pub pv_ac_per_mw: f64,
    pub storage_ac_per_mwh: f64,
    pub pv_dc_ac_ratio: f64,
    pub storage_dc_ac_ratio: f64,
}

/// Splits the AC breakdown into per-unit DC component costs and the
/// isolated inverter cost, and derives the DC:AC cost ratios.
pub fn split_dc_ac(breakdown: &CostBreakdown2021) -> Result<UnitCosts, CostError> {
    breakdown.verify()?;
    let basis = |context: &'static str, value: f64| {
        if value > 0.0 { Ok(value) } else { Err(CostError::ZeroBasis { context, value }) }
    };
    let pv_mw = basis("pv basis", breakdown.pv_basis_mw_dc)?;
    let storage_mwh = basis("storage basis", breakdown.storage_basis_mwh)?;
    let inverter_mw = basis("inverter basis", breakdown.inverter_basis_mw_ac)?;

    let [pv, storage, inverter] = breakdown.totals();
    let pv_dc_per_mw = pv / pv_mw;
    let storage_per_mwh = storage / storage_mwh;
    let inverter_per_mw_ac = inverter / inverter_mw;
    // AC views: whole system (modules plus inverter) per unit of the
    // basis that bounds AC delivery.
    let pv_ac_per_mw = (pv + inverter) / inverter_mw;
    let storage_ac_per_mwh = (storage + inverter) / storage_mwh;
    Ok(UnitCosts {
        pv_dc_per_mw,
        storage_per_mwh,
        inverter_per_mw_ac,
        pv_ac_per_mw,
        storage_ac_per_mwh,
        pv_dc_ac_ratio: pv_dc_per_mw / pv_ac_per_mw,
        storage_dc_ac_ratio: storage_per_mwh / storage_ac_per_mwh,
    })
}

// ---------------------------------------------------------------------------
// Annuitization

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinanceParams {
    /// Weighted average cost of capital, fraction per year.
    pub wacc: f64,
    /// Asset lifespan in years.
    pub lifespan: u32,
    /// Regional cost multiplier, 1.0 when not differentiated.
    pub regional_multiplier: f64,
}

impl FinanceParams {
    pub fn new(wacc: f64, lifespan: u32, regional_multiplier: f64) -> Result<Self, CostError> {
        if !(wacc.is_finite() && wacc > 0.0) {
            return Err(CostError::BadFinance(format!("wacc must be positive, got {wacc}")));
        }
        if lifespan < 1 {
            return Err(CostError::BadFinance("lifespan must be at least one year".into()));
        }
        if !(regional_multiplier.is_finite() && regional_multiplier > 0.0) {
            return Err(CostError::BadFinance(format!(
                "regional multiplier must be positive, got {regional_multiplier}"
            )));
        }
        Ok(FinanceParams { wacc, lifespan, regional_multiplier })
    }

    /// Capital recovery factor: wacc / (1 - (1+wacc)^-lifespan).
    pub fn crf(&self) -> f64 {
        self.wacc / (1.0 - (1.0 + self.wacc).powi(-(self.lifespan as i32)))
    }
}

/// Converts an overnight capital cost into an annual payment:
/// overnight x regional multiplier x capital recovery factor.
pub fn annuitize(overnight: f64, fin: &FinanceParams) -> f64 {
    overnight * fin.regional_multiplier * fin.crf()
}

/// Finance contexts keyed by name. Lifespans and rates differ between a
/// co-located inverter (replaced with the battery) and a standalone
/// storage site's inverter (grid-lifetime asset).
pub fn finance_defaults() -> BTreeMap<String, FinanceParams> {
    let mut map = BTreeMap::new();
    let mut put = |name: &str, wacc: f64, lifespan: u32| {
        map.insert(name.to_string(), FinanceParams { wacc, lifespan, regional_multiplier: 1.0 });
    };
    put("solar", 0.025, 30);
    put("wind", 0.032, 30);
    put("battery", 0.025, 15);
    put("inverter", 0.025, 15);
    put("inverter_standalone", 0.025, 30);
    put("grid", 0.044, 60);
    map
}

// ---------------------------------------------------------------------------
// Cost cases

/// Annualized price of one technology: invest and fom in $/MW-yr
/// ($/MWh-yr for storage energy), vom in $/MWh.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TechCost {
    pub invest: f64,
    pub fom: f64,
    pub vom: f64,
}

/// Overnight 2030 endpoints for one cost case, in the units the source
/// tables quote them: $/kW for capacities, $/kWh for battery energy,
/// $/kW-km for the grid spur.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostCaseInputs {
    pub solar_capital_kw_dc: f64,
    pub solar_fom_kw_dc_yr: f64,
    pub wind_capital_kw: f64,
    pub wind_fom_kw_yr: f64,
    pub battery_capital_kwh: f64,
    pub battery_fom_kwh_yr: f64,
    pub inverter_capital_kw: f64,
    pub inverter_fom_kw_yr: f64,
    pub grid_capital_kw_km: f64,
}

impl CostCaseInputs {
    pub fn low() -> CostCaseInputs {
        CostCaseInputs {
            solar_capital_kw_dc: 710.0,
            solar_fom_kw_dc_yr: 16.2,
            wind_capital_kw: 1138.0,
            wind_fom_kw_yr: 43.0,
            battery_capital_kwh: 261.0,
            battery_fom_kwh_yr: 6.5,
            inverter_capital_kw: 60.0,
            inverter_fom_kw_yr: 2.4,
            grid_capital_kw_km: 2.9,
        }
    }

    pub fn mid() -> CostCaseInputs {
        CostCaseInputs {
            solar_capital_kw_dc: 771.0,
            solar_fom_kw_dc_yr: 17.3,
            wind_capital_kw: 1308.0,
            wind_fom_kw_yr: 46.0,
            battery_capital_kwh: 290.0,
            battery_fom_kwh_yr: 7.3,
            inverter_capital_kw: 83.0,
            inverter_fom_kw_yr: 2.6,
            grid_capital_kw_km: 6.8,
        }
    }
}

/// Model-ready annual costs for one case. Capital has been annuitized;
/// the overnight endpoints that produced it ride along for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualizedCostTable {
    pub case_name: String,
    /// $/MW DC-yr.
    pub pv: TechCost,
    /// $/MW AC-yr.
    pub wind: TechCost,
    /// $/MWh-yr.
    pub storage_energy: TechCost,
    /// $/MW AC-yr, inverter replaced on the battery schedule.
    pub inverter: TechCost,
    /// $/MW AC-yr, inverter on a standalone storage site.
    pub inverter_standalone: TechCost,
    /// $/MW-km-yr for the interconnection spur.
    pub grid_per_mw_km_yr: f64,
    pub overnight: CostCaseInputs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostCases {
    pub low: AnnualizedCostTable,
    pub mid: AnnualizedCostTable,
}

/// Annuitizes one case's overnight endpoints with the given finance
/// contexts. Table 1 kW units scale to the model's $/MW here.
pub fn build_case(
    case_name: &str,
    inputs: &CostCaseInputs,
    finance: &BTreeMap<String, FinanceParams>,
) -> Result<AnnualizedCostTable, CostError> {
    let fin = |key: &str| {
        finance
            .get(key)
            .ok_or_else(|| CostError::MissingInput(format!("finance context {key:?}")))
    };
    let tech = |capital_kw: f64, fom_kw: f64, fin: &FinanceParams| TechCost {
        invest: annuitize(capital_kw * 1000.0, fin),
        fom: fom_kw * 1000.0,
        vom: 0.0,
    };
    let inverter_fin = fin("inverter")?;
    let standalone_fin = fin("inverter_standalone")?;
    Ok(AnnualizedCostTable {
        case_name: case_name.to_string(),
        pv: tech(inputs.solar_capital_kw_dc, inputs.solar_fom_kw_dc_yr, fin("solar")?),
        wind: tech(inputs.wind_capital_kw, inputs.wind_fom_kw_yr, fin("wind")?),
        storage_energy: tech(inputs.battery_capital_kwh, inputs.battery_fom_kwh_yr, fin("battery")?),
        inverter: tech(inputs.inverter_capital_kw, inputs.inverter_fom_kw_yr, inverter_fin),
        inverter_standalone: tech(inputs.inverter_capital_kw, inputs.inverter_fom_kw_yr, standalone_fin),
        grid_per_mw_km_yr: annuitize(inputs.grid_capital_kw_km * 1000.0, fin("grid")?),
        overnight: *inputs,
    })
}

/// The shipped low and mid cost cases, before tax credits.
pub fn build_cost_cases() -> CostCases {
    let finance = finance_defaults();
    CostCases {
        low: build_case("low", &CostCaseInputs::low(), &finance)
            .expect("built-in low case inputs are valid"),
        mid: build_case("mid", &CostCaseInputs::mid(), &finance)
            .expect("built-in mid case inputs are valid"),
    }
}

// ---------------------------------------------------------------------------
// Tax credits

/// Credits applicable to one technology. At most one of the two forms
/// may be set: generators take the production credit, storage takes the
/// investment credit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TechCredit {
    /// Production credit, $/MWh, folded into vom as a negative charge.
    pub ptc_per_mwh: Option<f64>,
    /// Investment credit as a fraction of capital.
    pub itc_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolicyCredits {
    pub solar: TechCredit,
    pub wind: TechCredit,
    pub storage: TechCredit,
}

impl PolicyCredits {
    /// Current-policy credits: solar and wind production credits plus
    /// the effective storage investment credit.
    pub fn defaults() -> PolicyCredits {
        PolicyCredits {
            solar: TechCredit { ptc_per_mwh: Some(SOLAR_PTC_PER_MWH), itc_fraction: None },
            wind: TechCredit { ptc_per_mwh: Some(WIND_PTC_PER_MWH), itc_fraction: None },
            storage: TechCredit { ptc_per_mwh: None, itc_fraction: Some(STORAGE_ITC_FRACTION) },
        }
    }

    /// No credits at all; applying this leaves a table unchanged.
    pub fn none() -> PolicyCredits {
        PolicyCredits::default()
    }
}

fn apply_credit(cost: &mut TechCost, credit: &TechCredit, technology: &str) -> Result<(), CostError> {
    if credit.ptc_per_mwh.is_some() && credit.itc_fraction.is_some() {
        return Err(CostError::ConflictingCredits { technology: technology.to_string() });
    }
    if let Some(ptc) = credit.ptc_per_mwh {
        if !(ptc.is_finite() && ptc >= 0.0) {
            return Err(CostError::BadCredit {
                technology: technology.to_string(),
                message: format!("production credit must be nonnegative, got {ptc}"),
            });
        }
        cost.vom -= ptc;
    }
    if let Some(fraction) = credit.itc_fraction {
        if !(fraction.is_finite() && (0.0..=1.0).contains(&fraction)) {
            return Err(CostError::BadCredit {
                technology: technology.to_string(),
                message: format!("investment credit fraction must lie in [0, 1], got {fraction}"),
            });
        }
        // Invest never drops below zero, whatever the credit stack.
        cost.invest = (cost.invest * (1.0 - fraction)).max(0.0);
    }
    Ok(())
}

/// Applies the configured credits to a cost table. Production credits
/// lower vom, investment credits scale invest down (floored at zero).
pub fn apply_tax_credits(
    table: &AnnualizedCostTable,
    policy: &PolicyCredits,
) -> Result<AnnualizedCostTable, CostError> {
    let mut out = table.clone();
    apply_credit(&mut out.pv, &policy.solar, "solar")?;
    apply_credit(&mut out.wind, &policy.wind, "wind")?;
    apply_credit(&mut out.storage_energy, &policy.storage, "storage")?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Application to a system description

/// Overwrites component prices on every co-located resource with the
/// table's figures. Grid connections price at the per-km rate times the
/// resource's interconnection distance; a storage-only site gets the
/// standalone inverter price. Charge/discharge power components and
/// thermal resources keep whatever the input data says.
pub fn apply_costs(system: &mut SystemDescription, table: &AnnualizedCostTable) {
    for res in &mut system.colo_resources {
        let colocated = res.has_vre();
        let km = res.interconnection_km;
        for (kind, spec) in res.components.iter_mut() {
            let priced = match kind {
                ComponentKind::Pv => Some(table.pv),
                ComponentKind::Wind => Some(table.wind),
                ComponentKind::StorageEnergy => Some(table.storage_energy),
                ComponentKind::Inverter => {
                    Some(if colocated { table.inverter } else { table.inverter_standalone })
                }
                ComponentKind::Grid => Some(TechCost {
                    invest: table.grid_per_mw_km_yr * km,
                    fom: 0.0,
                    vom: 0.0,
                }),
                _ => None,
            };
            if let Some(cost) = priced {
                spec.invest_cost = cost.invest;
                spec.fom_cost = cost.fom;
                spec.vom_cost = cost.vom;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Files

pub const BREAKDOWN_FILE: &str = "cost_breakdown_2021.csv";
pub const FINANCE_FILE: &str = "finance_params.csv";
pub const CREDITS_FILE: &str = "policy_credits.csv";
pub const CASES_FILE: &str = "cost_cases.csv";

/// Output file name for one case's annualized table.
pub fn annualized_file(case: &str) -> String {
    format!("annualized_costs_{case}.csv")
}

/// Reads `cost_breakdown_2021.csv` (item,pv,storage,inverter; $M) and
/// checks the documented column totals.
pub fn load_cost_breakdown(path: &Path) -> Result<CostBreakdown2021, LoadError> {
    let sheet = Sheet::open(path)?;
    let c_item = sheet.column("item")?;
    let c_pv = sheet.column("pv")?;
    let c_storage = sheet.column("storage")?;
    let c_inverter = sheet.column("inverter")?;
    let mut items = Vec::new();
    for (line, rec) in &sheet.records {
        let name = sheet.req_str(*line, rec, c_item)?;
        let cell = |col: usize| -> Result<f64, LoadError> {
            let v = sheet.req_f64(*line, rec, col)?;
            if v < 0.0 {
                return Err(sheet.field_err(*line, &sheet.headers[col], "cost must be nonnegative"));
            }
            Ok(v)
        };
        items.push(LineItem {
            name,
            pv: cell(c_pv)?,
            storage: cell(c_storage)?,
            inverter: cell(c_inverter)?,
        });
    }
    let base = CostBreakdown2021::baseline();
    let breakdown = CostBreakdown2021 { items, ..base };
    breakdown.verify().map_err(|e| LoadError::Inconsistent {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(breakdown)
}

/// Reads `finance_params.csv` (context,wacc,lifespan,regional_multiplier)
/// as overrides on top of the built-in contexts.
pub fn load_finance_params(path: &Path) -> Result<BTreeMap<String, FinanceParams>, LoadError> {
    let sheet = Sheet::open(path)?;
    let c_ctx = sheet.column("context")?;
    let c_wacc = sheet.column("wacc")?;
    let c_life = sheet.column("lifespan")?;
    let c_mult = sheet.column_opt("regional_multiplier");
    let mut map = finance_defaults();
    for (line, rec) in &sheet.records {
        let context = sheet.req_str(*line, rec, c_ctx)?;
        if !map.contains_key(&context) {
            return Err(sheet.row_err(*line, format!("unknown finance context {context:?}")));
        }
        let wacc = sheet.req_f64(*line, rec, c_wacc)?;
        let lifespan = sheet.req_usize(*line, rec, c_life)? as u32;
        let mult = sheet.f64_or(*line, rec, c_mult, 1.0)?;
        let fin = FinanceParams::new(wacc, lifespan, mult)
            .map_err(|e| sheet.row_err(*line, e.to_string()))?;
        map.insert(context, fin);
    }
    Ok(map)
}

/// Reads `policy_credits.csv` (technology,ptc_per_mwh,itc_fraction).
/// A present file fully specifies policy: unlisted technologies carry
/// no credit. Empty cells mean "not granted".
pub fn load_policy_credits(path: &Path) -> Result<PolicyCredits, LoadError> {
    let sheet = Sheet::open(path)?;
    let c_tech = sheet.column("technology")?;
    let c_ptc = sheet.column_opt("ptc_per_mwh");
    let c_itc = sheet.column_opt("itc_fraction");
    let mut policy = PolicyCredits::none();
    for (line, rec) in &sheet.records {
        let tech = sheet.req_str(*line, rec, c_tech)?;
        let opt = |col: Option<usize>| -> Result<Option<f64>, LoadError> {
            match col {
                Some(col) if !sheet.raw(rec, col).is_empty() => {
                    Ok(Some(sheet.req_f64(*line, rec, col)?))
                }
                _ => Ok(None),
            }
        };
        let credit = TechCredit { ptc_per_mwh: opt(c_ptc)?, itc_fraction: opt(c_itc)? };
        match tech.as_str() {
            "solar" => policy.solar = credit,
            "wind" => policy.wind = credit,
            "storage" => policy.storage = credit,
            other => {
                return Err(sheet.row_err(*line, format!("unknown technology {other:?}")));
            }
        }
    }
    Ok(policy)
}

/// Reads `cost_cases.csv` overriding the shipped 2030 endpoints. Every
/// column is required for every listed case; entries not listed fall
/// back to the built-ins.
pub fn load_cost_case_inputs(
    path: &Path,
) -> Result<BTreeMap<String, CostCaseInputs>, LoadError> {
    let sheet = Sheet::open(path)?;
    let c_case = sheet.column("case")?;
    let cols = [
        sheet.column("solar_capital_kw_dc")?,
        sheet.column("solar_fom_kw_dc_yr")?,
        sheet.column("wind_capital_kw")?,
        sheet.column("wind_fom_kw_yr")?,
        sheet.column("battery_capital_kwh")?,
        sheet.column("battery_fom_kwh_yr")?,
        sheet.column("inverter_capital_kw")?,
        sheet.column("inverter_fom_kw_yr")?,
        sheet.column("grid_capital_kw_km")?,
    ];
    let mut map = BTreeMap::new();
    map.insert("low".to_string(), CostCaseInputs::low());
    map.insert("mid".to_string(), CostCaseInputs::mid());
    for (line, rec) in &sheet.records {
        let case = sheet.req_str(*line, rec, c_case)?;
        let mut v = [0.0; 9];
        for (slot, col) in v.iter_mut().zip(cols.iter()) {
            *slot = sheet.req_f64(*line, rec, *col)?;
            if *slot < 0.0 {
                return Err(sheet.field_err(*line, &sheet.headers[*col], "cost must be nonnegative"));
            }
        }
        map.insert(
            case,
            CostCaseInputs {
                solar_capital_kw_dc: v[0],
                solar_fom_kw_dc_yr: v[1],
                wind_capital_kw: v[2],
                wind_fom_kw_yr: v[3],
                battery_capital_kwh: v[4],
                battery_fom_kwh_yr: v[5],
                inverter_capital_kw: v[6],
                inverter_fom_kw_yr: v[7],
                grid_capital_kw_km: v[8],
            },
        );
    }
    Ok(map)
}

const ANNUALIZED_HEADER: &str = "technology,overnight_capital,overnight_fom,invest,fom,vom";

/// Writes one case's table as `annualized_costs_<case>.csv`.
pub fn write_annualized_costs(table: &AnnualizedCostTable, path: &Path) -> std::io::Result<()> {
    let o = &table.overnight;
    let mut out = String::new();
    out.push_str(ANNUALIZED_HEADER);
    out.push('\n');
    let mut row = |tech: &str, capital: f64, fom_kw: f64, cost: &TechCost| {
        out.push_str(&format!(
            "{tech},{capital},{fom_kw},{},{},{}\n",
            cost.invest, cost.fom, cost.vom
        ));
    };
    row("pv", o.solar_capital_kw_dc, o.solar_fom_kw_dc_yr, &table.pv);
    row("wind", o.wind_capital_kw, o.wind_fom_kw_yr, &table.wind);
    row("storage_energy", o.battery_capital_kwh, o.battery_fom_kwh_yr, &table.storage_energy);
    row("inverter", o.inverter_capital_kw, o.inverter_fom_kw_yr, &table.inverter);
    row(
        "inverter_standalone",
        o.inverter_capital_kw,
        o.inverter_fom_kw_yr,
        &table.inverter_standalone,
    );
    let grid = TechCost { invest: table.grid_per_mw_km_yr, fom: 0.0, vom: 0.0 };
    row("grid_per_mw_km", o.grid_capital_kw_km, 0.0, &grid);
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

/// Loads a table written by [`write_annualized_costs`]. All six rows
/// must be present; invest and fom must be nonnegative.
pub fn load_annualized_costs(path: &Path, case_name: &str) -> Result<AnnualizedCostTable, LoadError> {
    let sheet = Sheet::open(path)?;
    let c_tech = sheet.column("technology")?;
    let c_capital = sheet.column("overnight_capital")?;
    let c_ofom = sheet.column("overnight_fom")?;
    let c_invest = sheet.column("invest")?;
    let c_fom = sheet.column("fom")?;
    let c_vom = sheet.column("vom")?;
    let mut rows: BTreeMap<String, (f64, f64, TechCost)> = BTreeMap::new();
    for (line, rec) in &sheet.records {
        let tech = sheet.req_str(*line, rec, c_tech)?;
        let capital = sheet.req_f64(*line, rec, c_capital)?;
        let ofom = sheet.req_f64(*line, rec, c_ofom)?;
        let invest = sheet.req_f64(*line, rec, c_invest)?;
        let fom = sheet.req_f64(*line, rec, c_fom)?;
        let vom = sheet.req_f64(*line, rec, c_vom)?;
        if invest < 0.0 {
            return Err(sheet.field_err(*line, "invest", "invest must be nonnegative"));
        }
        if fom < 0.0 {
            return Err(sheet.field_err(*line, "fom", "fom must be nonnegative"));
        }
        rows.insert(tech, (capital, ofom, TechCost { invest, fom, vom }));
    }
    let mut take = |tech: &str| -> Result<(f64, f64, TechCost), LoadError> {
        rows.remove(tech).ok_or_else(|| LoadError::Inconsistent {
            path: path.to_path_buf(),
            message: format!("missing {tech:?} row"),
        })
    };
    let pv = take("pv")?;
    let wind = take("wind")?;
    let storage = take("storage_energy")?;
    let inverter = take("inverter")?;
    let standalone = take("inverter_standalone")?;
    let grid = take("grid_per_mw_km")?;
    Ok(AnnualizedCostTable {
        case_name: case_name.to_string(),
        pv: pv.2,
        wind: wind.2,
        storage_energy: storage.2,
        inverter: inverter.2,
        inverter_standalone: standalone.2,
        grid_per_mw_km_yr: grid.2.invest,
        overnight: CostCaseInputs {
            solar_capital_kw_dc: pv.0,
            solar_fom_kw_dc_yr: pv.1,
            wind_capital_kw: wind.0,
            wind_fom_kw_yr: wind.1,
            battery_capital_kwh: storage.0,
            battery_fom_kwh_yr: storage.1,
            inverter_capital_kw: inverter.0,
            inverter_fom_kw_yr: inverter.1,
            grid_capital_kw_km: grid.0,
        },
    })
}

fn dir_err(dir: &Path, e: CostError) -> LoadError {
    LoadError::Inconsistent { path: dir.to_path_buf(), message: e.to_string() }
}

/// Assembles both cost cases for a scenario directory: optional
/// override files refine the built-in breakdown, finance contexts,
/// endpoint inputs and credits, and the configured credits are applied.
pub fn assemble_cases(dir: &Path) -> Result<CostCases, LoadError> {
    let breakdown = if dir.join(BREAKDOWN_FILE).exists() {
        load_cost_breakdown(&dir.join(BREAKDOWN_FILE))?
    } else {
        CostBreakdown2021::baseline()
    };
    // The split validates the breakdown's bases and totals even though
    // the shipped endpoints, not the split, feed the tables.
    split_dc_ac(&breakdown).map_err(|e| dir_err(dir, e))?;

    let finance = if dir.join(FINANCE_FILE).exists() {
        load_finance_params(&dir.join(FINANCE_FILE))?
    } else {
        finance_defaults()
    };
    let inputs = if dir.join(CASES_FILE).exists() {
        load_cost_case_inputs(&dir.join(CASES_FILE))?
    } else {
        let mut map = BTreeMap::new();
        map.insert("low".to_string(), CostCaseInputs::low());
        map.insert("mid".to_string(), CostCaseInputs::mid());
        map
    };
    let credits = if dir.join(CREDITS_FILE).exists() {
        load_policy_credits(&dir.join(CREDITS_FILE))?
    } else {
        PolicyCredits::defaults()
    };
    let case = |name: &str| -> Result<AnnualizedCostTable, LoadError> {
        let input = inputs
            .get(name)
            .ok_or_else(|| dir_err(dir, CostError::MissingInput(format!("case {name:?}"))))?;
        let table = build_case(name, input, &finance).map_err(|e| dir_err(dir, e))?;
        apply_tax_credits(&table, &credits).map_err(|e| dir_err(dir, e))
    };
    Ok(CostCases { low: case("low")?, mid: case("mid")? })
}

/// The table to price a run with: a previously written
/// `annualized_costs_<case>.csv` wins over rebuilding from inputs.
pub fn case_table_for(dir: &Path, case_name: &str) -> Result<AnnualizedCostTable, LoadError> {
    let file = dir.join(annualized_file(case_name));
    if file.exists() {
        return load_annualized_costs(&file, case_name);
    }
    let cases = assemble_cases(dir)?;
    match case_name {
        "low" => Ok(cases.low),
        "mid" => Ok(cases.mid),
        other => Err(LoadError::Inconsistent {
            path: dir.to_path_buf(),
            message: format!("unknown cost case {other:?}"),
        }),
    }
}
