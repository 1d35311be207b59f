use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::PlannerError;
use crate::candgen::EndpointCatalog;
use crate::milp::{self, Limits, Model, ObjectiveSense, Sense, SolveStats, Status, VarId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage1Config {
    /// `c_f`, cost per station.
    pub cost: f64,
    /// `B_f`.
    pub budget: f64,
}

impl Stage1Config {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.cost.is_finite() && self.cost > 0.0) {
            return Err(PlannerError::InvalidConfig(format!(
                "stage-1 station cost must be positive, got {}",
                self.cost
            )));
        }
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(PlannerError::InvalidConfig(format!(
                "stage-1 budget must be non-negative, got {}",
                self.budget
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Model {
    pub model: Model,
    /// `x_w` per catalog endpoint.
    pub x: Vec<VarId>,
    /// `y_q` per catalog pair.
    pub y: Vec<VarId>,
    /// `(1 + μ_q) f(q)`.
    pub weights: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn build_stage1(
    catalog: &EndpointCatalog,
    mu_q: &[f64],
    config: &Stage1Config,
) -> Result<Stage1Model, PlannerError> {
    config.validate()?;
    if mu_q.len() != catalog.pairs.len() {
        return Err(PlannerError::DimensionMismatch {
            what: "pair weights",
            expected: catalog.pairs.len(),
            got: mu_q.len(),
        });
    }
    let mut warnings = Vec::new();
    if catalog.pairs.is_empty() {
        warnings.push(String::from("no uncovered O-D pairs; stage 1 has nothing to cover"));
    }
    let mut model = Model::new(ObjectiveSense::Maximize);
    let x: Vec<VarId> = catalog.endpoints.iter().map(|e| model.add_binary(format!("x_{}", e.label()))).collect();
    let y: Vec<VarId> = (0..catalog.pairs.len()).map(|q| model.add_binary(format!("y_q{}", q + 1))).collect();
    let weights: Vec<f64> = catalog.pairs.iter().zip(mu_q).map(|(p, mu)| (1.0 + mu) * p.flow).collect();
    model.set_objective(y.iter().zip(&weights).map(|(&v, &c)| (v, c)).collect());
    for (q, &yq) in y.iter().enumerate() {
        let mut terms: Vec<(VarId, f64)> = catalog.column(q).into_iter().map(|w| (x[w], 1.0)).collect();
        terms.push((yq, -1.0));
        model.add_constraint(format!("cover_q{}", q + 1), terms, Sense::Ge, 0.0);
    }
    model.add_constraint("budget", x.iter().map(|&v| (v, config.cost)).collect(), Sense::Le, config.budget);
    Ok(Stage1Model { model, x, y, weights, warnings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcsPlan {
    /// Selected catalog endpoints, ascending.
    pub selected: Vec<usize>,
    /// Catalog pairs covered by the selection, ascending.
    pub covered: Vec<usize>,
    /// `F_1` recomputed from the covered set.
    pub objective: f64,
    pub cost: f64,
    pub status: Status,
    pub stats: SolveStats,
    pub warnings: Vec<String>,
}

impl FcsPlan {
    pub fn empty() -> Self {
        FcsPlan {
            selected: Vec::new(),
            covered: Vec::new(),
            objective: 0.0,
            cost: 0.0,
            status: Status::Optimal,
            stats: SolveStats::default(),
            warnings: Vec::new(),
        }
    }
}

/// Solves stage 1 and re-derives coverage from the chosen sites.
pub fn solve_stage1(
    s1: &Stage1Model,
    catalog: &EndpointCatalog,
    config: &Stage1Config,
    limits: &Limits,
) -> Result<FcsPlan, PlannerError> {
    let sol = milp::solve(&s1.model, limits)?;
    let Some(values) = sol.values.as_ref() else {
        return Err(PlannerError::NoSolution(sol.status));
    };
    let selected: Vec<usize> =
        s1.x.iter().enumerate().filter(|(_, v)| values[v.index()] > 0.5).map(|(w, _)| w).collect();
    let covered: Vec<usize> =
        (0..catalog.pairs.len()).filter(|&q| selected.iter().any(|&w| catalog.covers(w, q))).collect();
    let objective: f64 = covered.iter().map(|&q| s1.weights[q]).sum();
    if sol.status == Status::Optimal {
        let z = sol.objective.unwrap_or(0.0);
        if (objective - z).abs() > 1e-6 * z.abs().max(1.0) {
            return Err(PlannerError::ObjectiveMismatch { solver: z, recomputed: objective });
        }
    }
    Ok(FcsPlan {
        cost: selected.len() as f64 * config.cost,
        selected,
        covered,
        objective,
        status: sol.status,
        stats: sol.stats,
        warnings: s1.warnings.clone(),
    })
}
