use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{PlannerError, StageSets};
use crate::candgen::EndpointCatalog;
use crate::milp::{self, Limits, Model, ObjectiveSense, Sense, SolveStats, Status, VarId};
use crate::netcore::{point_distance, DistanceTable, Network};
use crate::scenario::{expected_flow, FlowTensor, ScenarioSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage2Config {
    /// `ε`, dollars per unit of served flow.
    pub benefit: f64,
    /// `λ`, dollars per relocation mile.
    pub relocation: f64,
    /// `c_m`, cost per activated unit.
    pub cost: f64,
    /// `B_m`.
    pub budget: f64,
    /// `|M|`.
    pub fleet: usize,
    /// Adds `Σ_{w'∈N_f} r_{t,m,w,w'} ≥ k_{t,m,w}` for serving points. Valid for
    /// every integer solution and tightens the relaxation considerably.
    pub recharge_link: bool,
    /// Drops variables that cannot change the optimum: serving points that
    /// cover no gap pair, relocations of zero length and serve-to-serve
    /// relocations (ruled out by the recharge rule).
    pub reduce: bool,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Stage2Config {
            benefit: 10.0,
            relocation: 20.0,
            cost: 1.0,
            budget: 10.0,
            fleet: 10,
            recharge_link: true,
            reduce: true,
        }
    }
}

impl Stage2Config {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !nonneg(self.benefit) || !nonneg(self.relocation) || !nonneg(self.budget) {
            return Err(PlannerError::InvalidConfig(format!(
                "benefit, relocation rate and budget must be non-negative (got {}, {}, {})",
                self.benefit, self.relocation, self.budget
            )));
        }
        if !(self.cost.is_finite() && self.cost > 0.0) {
            return Err(PlannerError::InvalidConfig(format!("unit cost must be positive, got {}", self.cost)));
        }
        if self.fleet == 0 {
            return Err(PlannerError::InvalidConfig(String::from("fleet size must be at least 1")));
        }
        Ok(())
    }
}

/// Everything stage 2 reads besides its own configuration.
#[derive(Debug, Clone, Copy)]
pub struct Stage2Input<'a> {
    pub network: &'a Network,
    pub table: &'a DistanceTable,
    pub sets: &'a StageSets,
    pub catalog: &'a EndpointCatalog,
    /// Flows over the catalog pairs.
    pub tensor: &'a FlowTensor,
    pub scenarios: &'a ScenarioSet,
    /// `μ_q` over the catalog pairs.
    pub mu_q: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Model {
    pub model: Model,
    pub config: Stage2Config,
    pub periods: usize,
    /// Points of `N` that carry `k` variables.
    pub active: Vec<usize>,
    /// Whether each active point is in `N_f`.
    pub charging: Vec<bool>,
    /// Gap pairs served per active point, as positions in `sets.mobile_pairs`.
    pub serves: Vec<Vec<usize>>,
    /// `d(w, w')` between active points.
    pub distance: Vec<Vec<f64>>,
    /// `ε(1 + μ_q) Σ_s P_s f_ts(q)` per period and gap pair.
    pub pair_value: Vec<Vec<f64>>,
    /// `Σ_s P_s`, the weight applied to relocation miles.
    pub probability_mass: f64,
    pub mobile_pairs: Vec<usize>,
    k: Vec<VarId>,
    y: Vec<VarId>,
    phi: Vec<VarId>,
    pub warnings: Vec<String>,
}

impl Stage2Model {
    fn k(&self, t: usize, m: usize, a: usize) -> VarId {
        self.k[(t * self.config.fleet + m) * self.active.len() + a]
    }

    pub fn k_var(&self, t: usize, m: usize, a: usize) -> VarId {
        self.k(t, m, a)
    }

    pub fn y_var(&self, t: usize, j: usize) -> VarId {
        self.y[t * self.mobile_pairs.len() + j]
    }

    pub fn phi_var(&self, m: usize) -> VarId {
        self.phi[m]
    }

    /// Dollar cost of one relocation between active points.
    pub fn relocation_cost(&self, a: usize, b: usize) -> f64 {
        self.config.relocation * self.distance[a][b] * self.probability_mass
    }
}

pub fn build_stage2(input: &Stage2Input<'_>, config: &Stage2Config) -> Result<Stage2Model, PlannerError> {
    config.validate()?;
    let Stage2Input { network, table, sets, catalog, tensor, scenarios, mu_q } = *input;
    let (periods, n_scen, n_pairs) = tensor.dims();
    if periods < 2 {
        return Err(PlannerError::InvalidConfig(format!("stage 2 needs at least two periods, got {periods}")));
    }
    if n_pairs != catalog.pairs.len() {
        return Err(PlannerError::DimensionMismatch {
            what: "flow tensor",
            expected: catalog.pairs.len(),
            got: n_pairs,
        });
    }
    if n_scen != scenarios.scenarios.len() {
        return Err(PlannerError::DimensionMismatch {
            what: "scenario set",
            expected: n_scen,
            got: scenarios.scenarios.len(),
        });
    }
    if mu_q.len() != n_pairs {
        return Err(PlannerError::DimensionMismatch { what: "pair weights", expected: n_pairs, got: mu_q.len() });
    }
    let mut warnings = Vec::new();
    if sets.mobile_pairs.is_empty() {
        warnings.push(String::from("every pair is covered by fixed stations; nothing left for mobile units"));
    }

    let gap_pos = |q: usize| sets.mobile_pairs.binary_search(&q).ok();
    let mut active = Vec::new();
    let mut charging = Vec::new();
    let mut serves = Vec::new();
    for n in 0..sets.points.len() {
        let fixed = sets.is_fixed(n);
        let cover: Vec<usize> =
            if fixed { Vec::new() } else { sets.coverage(catalog, n).iter().filter_map(|&q| gap_pos(q)).collect() };
        if config.reduce && !fixed && cover.is_empty() {
            continue;
        }
        active.push(n);
        charging.push(fixed);
        serves.push(cover);
    }
    let na = active.len();
    let distance: Vec<Vec<f64>> = active
        .iter()
        .map(|&a| {
            active
                .iter()
                .map(|&b| point_distance(network, table, &sets.points[a].location, &sets.points[b].location))
                .collect()
        })
        .collect();
    let probability_mass = scenarios.probability_sum();
    let pair_value: Vec<Vec<f64>> = (0..periods)
        .map(|t| {
            sets.mobile_pairs
                .iter()
                .map(|&q| config.benefit * (1.0 + mu_q[q]) * expected_flow(tensor, scenarios, q, t))
                .collect()
        })
        .collect();

    let fleet = config.fleet;
    let mut model = Model::new(ObjectiveSense::Maximize);
    let label = |a: usize| sets.points[active[a]].label.as_str();
    let mut k = Vec::with_capacity(periods * fleet * na);
    for t in 0..periods {
        for m in 0..fleet {
            for a in 0..na {
                k.push(model.add_binary(format!("k_t{}_m{}_{}", t + 1, m + 1, label(a))));
            }
        }
    }
    let nq = sets.mobile_pairs.len();
    let mut y = Vec::with_capacity(periods * nq);
    for t in 0..periods {
        for &q in &sets.mobile_pairs {
            y.push(model.add_binary(format!("y_t{}_q{}", t + 1, q + 1)));
        }
    }
    let phi: Vec<VarId> = (0..fleet).map(|m| model.add_binary(format!("phi_m{}", m + 1))).collect();
    let kv = |t: usize, m: usize, a: usize| k[(t * fleet + m) * na + a];

    let mut objective: Vec<(VarId, f64)> = Vec::new();
    for t in 0..periods {
        for j in 0..nq {
            objective.push((y[t * nq + j], pair_value[t][j]));
        }
    }

    // relocation indicators, indexed [t][m][a][b]
    let mut r: Vec<Option<VarId>> = vec![None; (periods - 1) * fleet * na * na];
    let ri = |t: usize, m: usize, a: usize, b: usize| ((t * fleet + m) * na + a) * na + b;
    for t in 0..periods - 1 {
        for m in 0..fleet {
            for a in 0..na {
                for b in 0..na {
                    let d = distance[a][b];
                    let linked = config.recharge_link && !charging[a] && charging[b];
                    if config.reduce && ((d <= 0.0 && !linked) || (!charging[a] && !charging[b])) {
                        continue;
                    }
                    let v = model.add_binary(format!("r_t{}_m{}_{}_{}", t + 1, m + 1, label(a), label(b)));
                    let c = config.relocation * d * probability_mass;
                    if c != 0.0 {
                        objective.push((v, -c));
                    }
                    r[ri(t, m, a, b)] = Some(v);
                }
            }
        }
    }
    model.set_objective(objective);

    for t in 0..periods {
        for j in 0..nq {
            let mut terms = Vec::new();
            for m in 0..fleet {
                for a in 0..na {
                    if serves[a].binary_search(&j).is_ok() {
                        terms.push((kv(t, m, a), 1.0));
                    }
                }
            }
            terms.push((y[t * nq + j], -1.0));
            model.add_constraint(format!("serve_t{}_q{}", t + 1, sets.mobile_pairs[j] + 1), terms, Sense::Ge, 0.0);
        }
    }
    for t in 0..periods {
        for m in 0..fleet {
            let terms = (0..na).map(|a| (kv(t, m, a), 1.0)).collect();
            model.add_constraint(format!("one_t{}_m{}", t + 1, m + 1), terms, Sense::Le, 1.0);
        }
    }
    for t in 0..periods - 1 {
        for m in 0..fleet {
            for a in 0..na {
                for b in 0..na {
                    if let Some(v) = r[ri(t, m, a, b)] {
                        let terms = vec![(v, 1.0), (kv(t, m, a), -1.0), (kv(t + 1, m, b), -1.0)];
                        model.add_constraint(
                            format!("move_t{}_m{}_{}_{}", t + 1, m + 1, label(a), label(b)),
                            terms,
                            Sense::Ge,
                            -1.0,
                        );
                    }
                }
            }
        }
    }
    for t in 0..periods - 1 {
        for m in 0..fleet {
            let mut terms: Vec<(VarId, f64)> =
                (0..na).filter(|&b| charging[b]).map(|b| (kv(t + 1, m, b), 1.0)).collect();
            terms.extend((0..na).filter(|&a| !charging[a]).map(|a| (kv(t, m, a), -1.0)));
            model.add_constraint(format!("recharge_t{}_m{}", t + 1, m + 1), terms, Sense::Ge, 0.0);
        }
    }
    if config.recharge_link {
        for t in 0..periods - 1 {
            for m in 0..fleet {
                for a in (0..na).filter(|&a| !charging[a]) {
                    let mut terms: Vec<(VarId, f64)> =
                        (0..na).filter(|&b| charging[b]).filter_map(|b| r[ri(t, m, a, b)]).map(|v| (v, 1.0)).collect();
                    terms.push((kv(t, m, a), -1.0));
                    model.add_constraint(format!("link_t{}_m{}_{}", t + 1, m + 1, label(a)), terms, Sense::Ge, 0.0);
                }
            }
        }
    }
    for m in 0..fleet {
        for t in 0..periods {
            for a in (0..na).filter(|&a| !charging[a]) {
                model.add_constraint(
                    format!("activate_m{}_t{}_{}", m + 1, t + 1, label(a)),
                    vec![(phi[m], 1.0), (kv(t, m, a), -1.0)],
                    Sense::Ge,
                    0.0,
                );
            }
        }
    }
    model.add_constraint("fleet_budget", phi.iter().map(|&v| (v, config.cost)).collect(), Sense::Le, config.budget);

    Ok(Stage2Model {
        model,
        config: *config,
        periods,
        active,
        charging,
        serves,
        distance,
        pair_value,
        probability_mass,
        mobile_pairs: sets.mobile_pairs.clone(),
        k,
        y,
        phi,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Serve,
    Charge,
    Idle,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Serve => "Serve",
            Mode::Charge => "Charge",
            Mode::Idle => "Idle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub period: usize,
    pub mcs: usize,
    /// Index into `StageSets::points`.
    pub point: Option<usize>,
    pub mode: Mode,
}

/// A move between consecutive periods `period` and `period + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relocation {
    pub period: usize,
    pub mcs: usize,
    pub from: usize,
    pub to: usize,
    pub miles: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsSchedule {
    pub periods: usize,
    pub fleet: usize,
    /// Period-major, one entry per `(t, m)`.
    pub assignments: Vec<Assignment>,
    /// Catalog pairs served in each period.
    pub covered: Vec<Vec<usize>>,
    pub relocations: Vec<Relocation>,
    /// Units that serve at least once.
    pub activated: Vec<bool>,
    /// `F_2` recomputed from the schedule.
    pub objective: f64,
    pub benefit: f64,
    pub relocation_cost: f64,
    pub solver_objective: Option<f64>,
    pub status: Status,
    pub stats: SolveStats,
    pub warnings: Vec<String>,
}

impl McsSchedule {
    /// The all-idle schedule.
    pub fn idle(periods: usize, fleet: usize) -> Self {
        let assignments = (0..periods)
            .flat_map(|t| (0..fleet).map(move |m| Assignment { period: t, mcs: m, point: None, mode: Mode::Idle }))
            .collect();
        McsSchedule {
            periods,
            fleet,
            assignments,
            covered: vec![Vec::new(); periods],
            relocations: Vec::new(),
            activated: vec![false; fleet],
            objective: 0.0,
            benefit: 0.0,
            relocation_cost: 0.0,
            solver_objective: Some(0.0),
            status: Status::Optimal,
            stats: SolveStats::default(),
            warnings: Vec::new(),
        }
    }

    pub fn at(&self, t: usize, m: usize) -> &Assignment {
        &self.assignments[t * self.fleet + m]
    }
}

/// Solves stage 2 and reads the schedule off the `k` assignments.
pub fn solve_stage2(s2: &Stage2Model, limits: &Limits) -> Result<McsSchedule, PlannerError> {
    // the all-idle schedule is always feasible
    let idle = vec![0.0; s2.model.variables.len()];
    let sol = milp::solve_from(&s2.model, limits, &idle)?;
    let Some(values) = sol.values.as_ref() else {
        return Err(PlannerError::NoSolution(sol.status));
    };
    let fleet = s2.config.fleet;
    let na = s2.active.len();
    // position of each unit as an active-point index
    let mut loc: Vec<Option<usize>> = vec![None; s2.periods * fleet];
    for t in 0..s2.periods {
        for m in 0..fleet {
            loc[t * fleet + m] = (0..na).find(|&a| values[s2.k(t, m, a).index()] > 0.5);
        }
    }
    let mut assignments = Vec::with_capacity(loc.len());
    let mut activated = vec![false; fleet];
    let mut covered = Vec::with_capacity(s2.periods);
    let mut benefit = 0.0;
    for t in 0..s2.periods {
        let mut served = vec![false; s2.mobile_pairs.len()];
        for m in 0..fleet {
            let here = loc[t * fleet + m];
            let mode = match here {
                None => Mode::Idle,
                Some(a) if s2.charging[a] => Mode::Charge,
                Some(a) => {
                    activated[m] = true;
                    for &j in &s2.serves[a] {
                        served[j] = true;
                    }
                    Mode::Serve
                }
            };
            assignments.push(Assignment { period: t, mcs: m, point: here.map(|a| s2.active[a]), mode });
        }
        let mut pairs = Vec::new();
        for (j, &s) in served.iter().enumerate() {
            if s {
                benefit += s2.pair_value[t][j];
                pairs.push(s2.mobile_pairs[j]);
            }
        }
        covered.push(pairs);
    }
    let mut relocations = Vec::new();
    let mut relocation_cost = 0.0;
    for t in 0..s2.periods - 1 {
        for m in 0..fleet {
            if let (Some(a), Some(b)) = (loc[t * fleet + m], loc[(t + 1) * fleet + m]) {
                if a != b {
                    let cost = s2.relocation_cost(a, b);
                    relocation_cost += cost;
                    relocations.push(Relocation {
                        period: t,
                        mcs: m,
                        from: s2.active[a],
                        to: s2.active[b],
                        miles: s2.distance[a][b],
                        cost,
                    });
                }
            }
        }
    }
    let objective = benefit - relocation_cost;
    if sol.status == Status::Optimal {
        let z = sol.objective.unwrap_or(0.0);
        if (objective - z).abs() > 1e-6 * z.abs().max(1.0) {
            return Err(PlannerError::ObjectiveMismatch { solver: z, recomputed: objective });
        }
    }
    Ok(McsSchedule {
        periods: s2.periods,
        fleet,
        assignments,
        covered,
        relocations,
        activated,
        objective,
        benefit,
        relocation_cost,
        solver_objective: sol.objective,
        status: sol.status,
        stats: sol.stats,
        warnings: s2.warnings.clone(),
    })
}
