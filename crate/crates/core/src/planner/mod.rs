//! Two-stage planning: fixed stations first, then a mobile fleet scheduled
//! over periods and demand scenarios to fill the remaining gaps.

mod kpi;
mod stage1;
mod stage2;

use alloc::string::String;
use alloc::vec::Vec;

use crate::candgen::{EndpointCatalog, ExistingStation};
use crate::milp::{MilpError, Status};
use crate::netcore::NetworkPoint;

pub use kpi::{kpi_report, KpiReport, ModeCell};
pub use stage1::{build_stage1, solve_stage1, FcsPlan, Stage1Config, Stage1Model};
pub use stage2::{
    build_stage2, solve_stage2, Assignment, McsSchedule, Mode, Relocation, Stage2Config, Stage2Input, Stage2Model,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlannerError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{what} has {got} entries, expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("solver finished as {0:?} without a feasible solution")]
    NoSolution(Status),
    #[error("recomputed objective {recomputed} differs from solver objective {solver}")]
    ObjectiveMismatch { solver: f64, recomputed: f64 },
    #[error(transparent)]
    Milp(#[from] MilpError),
}

/// An addressable location: an existing station or a candidate endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePoint {
    pub label: String,
    pub location: NetworkPoint,
    pub existing: bool,
    /// Catalog index for endpoints.
    pub endpoint: Option<usize>,
}

/// The sets linking the two stages. All point sets index into `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSets {
    /// `N`: existing stations first, then every catalog endpoint.
    pub points: Vec<CandidatePoint>,
    /// `N_f`: existing stations and newly selected endpoints.
    pub fixed: Vec<usize>,
    /// `N_m = N \ N_f`.
    pub mobile: Vec<usize>,
    /// `Q_m`: catalog pair indices left uncovered by stage 1.
    pub mobile_pairs: Vec<usize>,
}

impl StageSets {
    /// Pairs (catalog indices) a station at point `n` would cover.
    pub fn coverage<'a>(&self, catalog: &'a EndpointCatalog, n: usize) -> &'a [usize] {
        match self.points[n].endpoint {
            Some(w) => &catalog.covered_pairs[w],
            None => &[],
        }
    }

    pub fn is_fixed(&self, n: usize) -> bool {
        self.fixed.binary_search(&n).is_ok()
    }
}

/// Builds `N`, `N_f`, `N_m` and `Q_m` from a stage-1 plan.
pub fn derive_sets(plan: &FcsPlan, stations: &[ExistingStation], catalog: &EndpointCatalog) -> StageSets {
    let mut points = Vec::with_capacity(stations.len() + catalog.len());
    for s in stations {
        points.push(CandidatePoint { label: s.id.clone(), location: s.location, existing: true, endpoint: None });
    }
    for ep in &catalog.endpoints {
        points.push(CandidatePoint {
            label: ep.label(),
            location: ep.location,
            existing: false,
            endpoint: Some(ep.id),
        });
    }
    let u = stations.len();
    let mut fixed: Vec<usize> = (0..u).collect();
    fixed.extend(plan.selected.iter().map(|&w| u + w));
    fixed.sort_unstable();
    let mobile = (0..points.len()).filter(|n| fixed.binary_search(n).is_err()).collect();
    let mobile_pairs = (0..catalog.pairs.len()).filter(|q| plan.covered.binary_search(q).is_err()).collect();
    StageSets { points, fixed, mobile, mobile_pairs }
}

#[cfg(test)]
mod tests;
