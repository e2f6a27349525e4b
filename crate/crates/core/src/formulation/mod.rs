//! Translates a [`SystemDescription`] into a [`LinearProgram`].
//!
//! Row ids follow `<resource>/<family>/<component>/<t>` for co-located
//! resources (segments dropped where not applicable) and `sys/...` for
//! system-level rows, so duals can be looked up by name and goldens stay
//! stable across runs. [`ModelMeta`] carries typed variable handles plus a
//! cost ledger attributing every objective coefficient to a reporting
//! category.

mod colo;
mod system;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{ComponentKind, SystemDescription};
use crate::lp::{LinearProgram, LpError, RowRef, VarRef};

/// Reporting bucket for an objective term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CostCategory {
    Invest,
    Fom,
    Vom,
    Nse,
}

impl CostCategory {
    pub const ALL: [CostCategory; 4] = [
        CostCategory::Invest,
        CostCategory::Fom,
        CostCategory::Vom,
        CostCategory::Nse,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CostCategory::Invest => "invest",
            CostCategory::Fom => "fom",
            CostCategory::Vom => "vom",
            CostCategory::Nse => "nse",
        }
    }

    pub fn index(self) -> usize {
        match self {
            CostCategory::Invest => 0,
            CostCategory::Fom => 1,
            CostCategory::Vom => 2,
            CostCategory::Nse => 3,
        }
    }
}

/// Capacity triple for one (resource, component): new build, retirement, and
/// the explicit total defined by the `cap_def` equality row.
#[derive(Debug, Clone, Copy)]
pub struct CapacityVars {
    pub build: VarRef,
    pub retire: VarRef,
    pub total: VarRef,
}

/// Hourly operational variables of one co-located resource; a vector is
/// empty when the owning component is absent.
#[derive(Debug, Clone, Default)]
pub struct ColoFlows {
    pub theta_pv: Vec<VarRef>,
    pub theta_wind: Vec<VarRef>,
    pub theta_dc: Vec<VarRef>,
    pub pi_dc: Vec<VarRef>,
    pub theta_ac: Vec<VarRef>,
    pub pi_ac: Vec<VarRef>,
    pub theta_grid: Vec<VarRef>,
    pub pi_grid: Vec<VarRef>,
    pub soc: Vec<VarRef>,
}

#[derive(Debug, Clone)]
pub struct ThermalVars {
    pub build: VarRef,
    pub dispatch: Vec<VarRef>,
}

#[derive(Debug, Clone)]
pub struct LineVars {
    pub build: VarRef,
    pub fwd: Vec<VarRef>,
    pub bwd: Vec<VarRef>,
}

/// Typed handles into the assembled LP, plus the cost ledger used to break
/// the objective into reporting categories.
#[derive(Debug, Default)]
pub struct ModelMeta {
    pub horizon: usize,
    pub capacity: BTreeMap<(String, ComponentKind), CapacityVars>,
    pub flows: BTreeMap<String, ColoFlows>,
    pub thermal: BTreeMap<String, ThermalVars>,
    pub lines: BTreeMap<String, LineVars>,
    /// Non-served energy per zone, one variable per hour.
    pub nse: BTreeMap<String, Vec<VarRef>>,
    pub balance_rows: BTreeMap<String, Vec<RowRef>>,
    pub forced_battery_row: Option<RowRef>,
    pub rps_row: Option<RowRef>,
    /// Every objective coefficient with its category; together with
    /// `cost_offsets` this reproduces the objective exactly.
    pub cost_terms: Vec<(VarRef, CostCategory, f64)>,
    /// Constant objective parts per category (e.g. FOM on existing thermal).
    pub cost_offsets: [f64; 4],
}

impl ModelMeta {
    pub fn capacity_of(&self, resource: &str, kind: ComponentKind) -> Option<&CapacityVars> {
        self.capacity.get(&(resource.to_string(), kind))
    }

    /// Splits a solved objective into per-category totals, in
    /// [`CostCategory::ALL`] order.
    pub fn cost_breakdown(&self, primal: &[f64]) -> [f64; 4] {
        let mut out = self.cost_offsets;
        for (var, cat, coef) in &self.cost_terms {
            out[cat.index()] += coef * primal[var.index()];
        }
        out
    }
}

#[derive(Debug)]
pub struct AssembledModel {
    pub lp: LinearProgram,
    pub meta: ModelMeta,
}

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("resource {resource}: {field} must be positive or the -1 sentinel, got {value}")]
    BadRatio {
        resource: String,
        field: String,
        value: f64,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Builder context shared by the emission passes.
struct Ctx<'a> {
    lp: &'a mut LinearProgram,
    meta: &'a mut ModelMeta,
}

impl Ctx<'_> {
    /// Adds an objective coefficient and records it in the cost ledger.
    fn cost(&mut self, var: VarRef, cat: CostCategory, coef: f64) {
        if coef != 0.0 {
            self.lp.add_obj(var, coef);
            self.meta.cost_terms.push((var, cat, coef));
        }
    }

    fn cost_offset(&mut self, cat: CostCategory, value: f64) {
        if value != 0.0 {
            self.lp.add_obj_offset(value);
            self.meta.cost_offsets[cat.index()] += value;
        }
    }
}

/// Builds the complete planning LP for one system.
pub fn assemble(system: &SystemDescription) -> Result<AssembledModel, AssembleError> {
    let mut lp = LinearProgram::new("capacity-expansion");
    let mut meta = ModelMeta {
        horizon: system.horizon,
        ..ModelMeta::default()
    };
    let mut ctx = Ctx { lp: &mut lp, meta: &mut meta };
    for resource in &system.colo_resources {
        colo::emit_resource(&mut ctx, resource, system.horizon)?;
    }
    system::emit_system(&mut ctx, system)?;
    Ok(AssembledModel { lp, meta })
}
