//! Equity weights.
//!
//! Factor weights come from the Best-Worst Method (BWM), solved exactly by
//! bisection on the deviation bound. Zone data are min-max normalized, need
//! directions applied, and combined into a zone weight `μ_z`. An O-D pair
//! inherits the larger weight of its two end zones.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::milp::{self, MilpError, Model, ObjectiveSense, Sense, Status, VarId};
use crate::netcore::{Network, OdPair};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EquityError {
    #[error("BWM needs at least two factors")]
    TooFewFactors,
    #[error("BWM vectors must have one entry per factor ({expected}), got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("best and worst factor must differ and be in range")]
    BadBestWorst,
    #[error("rating {value} for `{factor}` is outside [1, 9]")]
    RatingOutOfRange { factor: String, value: f64 },
    #[error("best-to-best and worst-to-worst ratings must be 1")]
    SelfRatingNotOne,
    #[error("best-to-worst rating {best_to_worst} disagrees with others-to-worst entry {worst_from_best}")]
    InconsistentBestWorst { best_to_worst: f64, worst_from_best: f64 },
    #[error("BWM system infeasible at the bracket top; the input cannot be solved")]
    InfeasibleBracket,
    #[error("factor `{0}` has zero spread across zones")]
    ZeroSpread(String),
    #[error("factor table needs at least two zones")]
    TooFewZones,
    #[error("zone `{zone}` has {got} values, expected {expected}")]
    RowLength { zone: String, expected: usize, got: usize },
    #[error("value for `{factor}` in zone `{zone}` is not finite")]
    NonFinite { zone: String, factor: String },
    #[error("network zone `{0}` has no factor data")]
    MissingZone(String),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

/// Pairwise comparisons of one decision maker.
#[derive(Debug, Clone, PartialEq)]
pub struct BwmInput {
    pub factors: Vec<String>,
    pub best: usize,
    pub worst: usize,
    /// `o_bi`: preference of the best factor over factor `i`.
    pub best_to_others: Vec<f64>,
    /// `o_iw`: preference of factor `i` over the worst factor.
    pub others_to_worst: Vec<f64>,
}

impl BwmInput {
    pub fn validate(&self) -> Result<(), EquityError> {
        let n = self.factors.len();
        if n < 2 {
            return Err(EquityError::TooFewFactors);
        }
        for v in [&self.best_to_others, &self.others_to_worst] {
            if v.len() != n {
                return Err(EquityError::LengthMismatch { expected: n, got: v.len() });
            }
        }
        if self.best >= n || self.worst >= n || self.best == self.worst {
            return Err(EquityError::BadBestWorst);
        }
        for (k, name) in self.factors.iter().enumerate() {
            for v in [self.best_to_others[k], self.others_to_worst[k]] {
                if !(1.0..=9.0).contains(&v) {
                    return Err(EquityError::RatingOutOfRange { factor: name.clone(), value: v });
                }
            }
        }
        if self.best_to_others[self.best] != 1.0 || self.others_to_worst[self.worst] != 1.0 {
            return Err(EquityError::SelfRatingNotOne);
        }
        let (bw, wb) = (self.best_to_others[self.worst], self.others_to_worst[self.best]);
        if bw != wb {
            return Err(EquityError::InconsistentBestWorst { best_to_worst: bw, worst_from_best: wb });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BwmResult {
    pub theta: Vec<f64>,
    /// Smallest deviation bound found feasible.
    pub epsilon_star: f64,
    /// Largest deviation bound proven infeasible (0 when `ε* = 0`).
    pub infeasible_below: f64,
}

pub const BWM_BRACKET: (f64, f64) = (0.0, 9.0);
pub const BWM_TOL: f64 = 1e-6;

/// The linearized BWM system at a fixed deviation bound `epsilon`.
pub fn bwm_system(input: &BwmInput, epsilon: f64) -> (Model, Vec<VarId>) {
    let n = input.factors.len();
    let mut m = Model::new(ObjectiveSense::Minimize);
    let theta: Vec<VarId> = (0..n).map(|i| m.add_continuous(format!("theta{}", i + 1), 0.0, 1.0)).collect();
    let (b, w) = (theta[input.best], theta[input.worst]);
    for i in 0..n {
        let t = theta[i];
        if i != input.best {
            let o = input.best_to_others[i];
            m.add_constraint(format!("best_hi{}", i + 1), vec![(b, 1.0), (t, -(o + epsilon))], Sense::Le, 0.0);
            m.add_constraint(format!("best_lo{}", i + 1), vec![(b, -1.0), (t, o - epsilon)], Sense::Le, 0.0);
        }
        if i != input.worst {
            let o = input.others_to_worst[i];
            m.add_constraint(format!("worst_hi{}", i + 1), vec![(t, 1.0), (w, -(o + epsilon))], Sense::Le, 0.0);
            m.add_constraint(format!("worst_lo{}", i + 1), vec![(t, -1.0), (w, o - epsilon)], Sense::Le, 0.0);
        }
    }
    m.add_constraint("simplex", theta.iter().map(|&t| (t, 1.0)).collect(), Sense::Eq, 1.0);
    (m, theta)
}

/// Minimax BWM weights.
///
/// `ε*` is located by bisection on `[0, 9]` to within `tol`. The optimal face
/// at `ε*` is usually a segment rather than a point; the returned weights are
/// the average of the face's per-coordinate extreme points.
pub fn solve_bwm(input: &BwmInput, tol: f64) -> Result<BwmResult, EquityError> {
    input.validate()?;
    let feasible = |eps: f64| -> Result<bool, EquityError> { Ok(milp::check_feasible(&bwm_system(input, eps).0)?) };
    let (mut lo, mut hi) = BWM_BRACKET;
    if !feasible(hi)? {
        return Err(EquityError::InfeasibleBracket);
    }
    if feasible(lo)? {
        hi = lo;
    } else {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if feasible(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    let n = input.factors.len();
    let (mut model, theta) = bwm_system(input, hi);
    let mut sum = vec![0.0; n];
    let mut count = 0.0;
    for i in 0..n {
        for sense in [ObjectiveSense::Minimize, ObjectiveSense::Maximize] {
            model.objective.sense = sense;
            model.set_objective(vec![(theta[i], 1.0)]);
            let s = milp::solve_relaxation(&model)?;
            if s.status != Status::Optimal {
                return Err(EquityError::InfeasibleBracket);
            }
            let x = s.values.expect("optimal solutions carry values");
            for (acc, t) in sum.iter_mut().zip(&theta) {
                *acc += x[t.index()];
            }
            count += 1.0;
        }
    }
    let mut weights: Vec<f64> = sum.iter().map(|s| (s / count).max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    for t in &mut weights {
        *t /= total;
    }
    Ok(BwmResult { theta: weights, epsilon_star: hi, infeasible_below: lo })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Larger raw values mean more need.
    NeedIncreasing,
    /// Larger raw values mean less need; the normalized scale is inverted.
    NeedDecreasing,
}

/// Raw socioeconomic values `δ_i^z`, one row per zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneFactorTable {
    pub zones: Vec<String>,
    pub factors: Vec<String>,
    pub directions: Vec<Direction>,
    pub values: Vec<Vec<f64>>,
}

impl ZoneFactorTable {
    pub fn validate(&self) -> Result<(), EquityError> {
        if self.zones.len() < 2 {
            return Err(EquityError::TooFewZones);
        }
        let k = self.factors.len();
        if self.directions.len() != k {
            return Err(EquityError::LengthMismatch { expected: k, got: self.directions.len() });
        }
        if self.values.len() != self.zones.len() {
            return Err(EquityError::LengthMismatch { expected: self.zones.len(), got: self.values.len() });
        }
        for (z, row) in self.zones.iter().zip(&self.values) {
            if row.len() != k {
                return Err(EquityError::RowLength { zone: z.clone(), expected: k, got: row.len() });
            }
            for (f, v) in self.factors.iter().zip(row) {
                if !v.is_finite() {
                    return Err(EquityError::NonFinite { zone: z.clone(), factor: f.clone() });
                }
            }
        }
        Ok(())
    }
}

/// `G_i^z`, min-max scaled per factor and inverted for need-decreasing ones.
pub fn normalize_factors(table: &ZoneFactorTable) -> Result<Vec<Vec<f64>>, EquityError> {
    table.validate()?;
    let mut g = vec![vec![0.0; table.factors.len()]; table.zones.len()];
    for (i, name) in table.factors.iter().enumerate() {
        let col = table.values.iter().map(|r| r[i]);
        let min = col.clone().fold(f64::INFINITY, f64::min);
        let max = col.fold(f64::NEG_INFINITY, f64::max);
        if max <= min {
            return Err(EquityError::ZeroSpread(name.clone()));
        }
        for (z, row) in table.values.iter().enumerate() {
            let v = (row[i] - min) / (max - min);
            g[z][i] = match table.directions[i] {
                Direction::NeedIncreasing => v,
                Direction::NeedDecreasing => 1.0 - v,
            };
        }
    }
    Ok(g)
}

/// `μ_z = Σ_i θ_i G_i^z`.
pub fn zone_weights(g: &[Vec<f64>], theta: &[f64]) -> Result<Vec<f64>, EquityError> {
    g.iter()
        .map(|row| {
            if row.len() != theta.len() {
                return Err(EquityError::LengthMismatch { expected: theta.len(), got: row.len() });
            }
            Ok(row.iter().zip(theta).map(|(g, t)| g * t).sum())
        })
        .collect()
}

/// Reorders table-ordered zone weights by the network's zone ids.
pub fn network_zone_weights(network: &Network, zones: &[String], mu: &[f64]) -> Result<Vec<f64>, EquityError> {
    network
        .zone_names()
        .iter()
        .map(|name| {
            zones.iter().position(|z| z == name).map(|k| mu[k]).ok_or_else(|| EquityError::MissingZone(name.clone()))
        })
        .collect()
}

/// `μ_q = max(μ_zone(i), μ_zone(j))`, given weights indexed by network zone id.
pub fn od_weights(network: &Network, pairs: &[OdPair], mu_by_zone: &[f64]) -> Vec<f64> {
    pairs
        .iter()
        .map(|q| {
            let a = mu_by_zone[network.zone_of(q.origin).index()];
            let b = mu_by_zone[network.zone_of(q.destination).index()];
            a.max(b)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquityProfile {
    pub normalized: Vec<Vec<f64>>,
    /// In factor-table zone order.
    pub zone_weights: Vec<f64>,
    /// Aligned with the pairs passed in.
    pub pair_weights: Vec<f64>,
}

pub fn equity_profile(
    network: &Network,
    pairs: &[OdPair],
    table: &ZoneFactorTable,
    theta: &[f64],
) -> Result<EquityProfile, EquityError> {
    let normalized = normalize_factors(table)?;
    let zone_weights = zone_weights(&normalized, theta)?;
    let by_zone = network_zone_weights(network, &table.zones, &zone_weights)?;
    let pair_weights = od_weights(network, pairs, &by_zone);
    Ok(EquityProfile { normalized, zone_weights, pair_weights })
}
