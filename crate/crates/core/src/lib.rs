//! Capacity-expansion planning for portfolios of co-located generation and
//! storage resources that share a single grid interconnection.
//!
//! The crate is organized as a pipeline:
//!
//! * [`domain`] holds the input data model (zones, lines, co-located
//!   resources, thermal fleet, policy) plus CSV loaders and validation.
//! * [`costs`] turns overnight capital costs into model-ready annualized
//!   coefficients (capital recovery, regional multipliers, tax credits).
//! * [`formulation`] emits the planning LP: per-resource capacity and
//!   dispatch constraints plus the zonal system context.
//! * [`lp`] is the embedded solver: a bounded-variable revised simplex with
//!   duals, MPS export/import, and solution round-tripping.
//! * [`scenario`] runs siting-mode / cost-case / forced-storage matrices.
//! * [`metrics`] and [`report`] reduce solutions to published figures.

pub mod costs;
pub mod domain;
pub mod formulation;
pub mod lp;
pub mod metrics;
pub mod report;
pub mod scenario;
