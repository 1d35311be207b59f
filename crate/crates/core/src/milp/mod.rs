//! Mixed-integer linear programs with binary and continuous variables.
//!
//! [`Model`] is a plain, solver-agnostic representation. [`solve`] is an exact
//! branch-and-bound over a dense bounded simplex, sized for models of a few
//! thousand columns. [`write_lp`] and [`read_lp`] handle the CPLEX LP dialect
//! for use with external solvers.

mod bnb;
mod lp_format;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

#[cfg(feature = "std")]
pub use bnb::WallClock;
pub use bnb::{check_feasible, solve, solve_from, solve_relaxation, solve_with_clock, Clock, NoClock};
pub use lp_format::{read_lp, write_lp};

/// Primal feasibility tolerance used when verifying solutions.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// A binary within this distance of 0 or 1 counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MilpError {
    #[error("variable index {0} is not declared")]
    UnknownVariable(usize),
    #[error("variable `{name}` has inconsistent bounds [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("simplex iteration limit exceeded ({0} iterations)")]
    Numerical(u64),
    #[error("LP parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: ObjectiveSense,
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

impl Model {
    pub fn new(sense: ObjectiveSense) -> Self {
        Model {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective { sense, terms: Vec::new(), constant: 0.0 },
        }
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_variable(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_variable(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let id = VarId(self.variables.len() as u32);
        self.variables.push(Variable { name: name.into(), kind, lower, upper });
        id
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint { name: name.into(), terms, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective.terms = terms;
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        let n = self.variables.len();
        let mut names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(MilpError::DuplicateName(w[0].into()));
        }
        for v in &self.variables {
            let bad = v.lower.is_nan()
                || v.upper.is_nan()
                || v.lower > v.upper
                || v.lower == f64::INFINITY
                || v.upper == f64::NEG_INFINITY
                || (v.kind == VarKind::Binary && (v.lower > 1.0 || v.upper < 0.0));
            if bad {
                return Err(MilpError::InvalidBounds { name: v.name.clone(), lower: v.lower, upper: v.upper });
            }
        }
        let check = |terms: &[(VarId, f64)], what: &str| -> Result<(), MilpError> {
            for &(v, a) in terms {
                if v.index() >= n {
                    return Err(MilpError::UnknownVariable(v.index()));
                }
                if !a.is_finite() {
                    return Err(MilpError::NonFinite(what.into()));
                }
            }
            Ok(())
        };
        check(&self.objective.terms, "objective")?;
        if !self.objective.constant.is_finite() {
            return Err(MilpError::NonFinite("objective".into()));
        }
        for c in &self.constraints {
            check(&c.terms, &c.name)?;
            if !c.rhs.is_finite() {
                return Err(MilpError::NonFinite(c.name.clone()));
            }
        }
        Ok(())
    }

    /// Objective value of an assignment, including the constant.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective.constant + self.objective.terms.iter().map(|&(v, a)| a * values[v.index()]).sum::<f64>()
    }

    /// Largest bound, row or integrality violation of an assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.kind == VarKind::Binary {
                worst = worst.max((x - libm::round(x)).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * values[v.index()]).sum();
            let viol = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    LimitReached,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Limits {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub elapsed: Duration,
    /// Best proven bound on the objective, in the model's own sense.
    pub best_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Objective of the incumbent; `None` when no feasible point is known.
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn value(&self, v: VarId) -> Option<f64> {
        self.values.as_ref().map(|x| x[v.index()])
    }

    /// Absolute gap between incumbent and bound; zero at optimality.
    pub fn gap(&self) -> Option<f64> {
        match (self.objective, self.stats.best_bound) {
            (Some(z), Some(b)) => Some((b - z).abs()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests;
