use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::time::Duration;

use super::simplex::{LpStatus, Tableau};
use super::{Limits, MilpError, Model, ObjectiveSense, Solution, SolveStats, Status, VarKind};
use super::{FEASIBILITY_TOL, INTEGRALITY_TOL};

/// Time source for solver time limits.
pub trait Clock {
    fn elapsed(&self) -> Duration;
}

/// A clock that never advances; time limits are ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed(&self) -> Duration {
        Duration::ZERO
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct WallClock(std::time::Instant);

#[cfg(feature = "std")]
impl WallClock {
    pub fn start() -> Self {
        WallClock(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for WallClock {
    fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }
}

/// Solves `model` to proven optimality unless a limit intervenes.
pub fn solve(model: &Model, limits: &Limits) -> Result<Solution, MilpError> {
    #[cfg(feature = "std")]
    let clock = WallClock::start();
    #[cfg(not(feature = "std"))]
    let clock = NoClock;
    solve_with_clock(model, limits, &clock)
}

/// Like [`solve`], seeded with a known point. A start that is infeasible,
/// fractional in a binary or of the wrong length is ignored.
pub fn solve_from(model: &Model, limits: &Limits, start: &[f64]) -> Result<Solution, MilpError> {
    #[cfg(feature = "std")]
    let clock = WallClock::start();
    #[cfg(not(feature = "std"))]
    let clock = NoClock;
    branch_and_bound(model, limits, &clock, Some(start))
}

/// Phase-1 feasibility of the constraint system with binaries relaxed to
/// `[0, 1]`. The objective is ignored.
pub fn check_feasible(model: &Model) -> Result<bool, MilpError> {
    model.validate()?;
    let mut t = Tableau::from_model(model, 0.0);
    let cap = iteration_cap(&t);
    let status = t.solve(cap).map_err(|_| MilpError::Numerical(cap))?;
    Ok(status != LpStatus::Infeasible)
}

/// Optimum of the LP relaxation (binaries relaxed to `[0, 1]`).
pub fn solve_relaxation(model: &Model) -> Result<Solution, MilpError> {
    model.validate()?;
    let sign = objective_sign(model);
    let mut t = Tableau::from_model(model, sign);
    let cap = iteration_cap(&t);
    let status = t.solve(cap).map_err(|_| MilpError::Numerical(cap))?;
    let mut stats = SolveStats { nodes: 1, lp_iterations: t.iterations, ..SolveStats::default() };
    Ok(match status {
        LpStatus::Optimal => {
            let values = t.structural_values().to_vec();
            let z = model.evaluate(&values);
            stats.best_bound = Some(z);
            Solution { status: Status::Optimal, objective: Some(z), values: Some(values), stats }
        }
        LpStatus::Infeasible => Solution { status: Status::Infeasible, objective: None, values: None, stats },
        LpStatus::Unbounded => Solution { status: Status::Unbounded, objective: None, values: None, stats },
    })
}

fn objective_sign(model: &Model) -> f64 {
    match model.objective.sense {
        ObjectiveSense::Maximize => -1.0,
        ObjectiveSense::Minimize => 1.0,
    }
}

fn iteration_cap(t: &Tableau) -> u64 {
    let (m, n) = t.size();
    50 * (m + n) as u64 + 1000
}

struct Node {
    bound: f64,
    depth: u32,
    id: u64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.depth.cmp(&other.depth)).then(other.id.cmp(&self.id))
    }
}

struct Search<'a, C: Clock> {
    model: &'a Model,
    limits: &'a Limits,
    clock: &'a C,
    sign: f64,
    binaries: Vec<usize>,
    cap: u64,
    stats: SolveStats,
    incumbent: Option<(f64, Vec<f64>)>,
}

impl<C: Clock> Search<'_, C> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((z, _)) => z - 1e-9 * z.abs().max(1.0),
            None => f64::INFINITY,
        }
    }

    fn limit_hit(&self) -> bool {
        if let Some(n) = self.limits.node_limit {
            if self.stats.nodes >= n {
                return true;
            }
        }
        if let Some(t) = self.limits.time_limit {
            if self.clock.elapsed() >= t {
                return true;
            }
        }
        false
    }

    fn reoptimize(&mut self, t: &mut Tableau) -> Result<LpStatus, MilpError> {
        let before = t.iterations;
        self.stats.nodes += 1;
        let status = t.reoptimize(self.cap).map_err(|_| MilpError::Numerical(self.cap))?;
        self.stats.lp_iterations += t.iterations - before;
        Ok(status)
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best = None;
        let mut best_frac = INTEGRALITY_TOL;
        for &j in &self.binaries {
            let f = x[j] - libm::floor(x[j]);
            let frac = f.min(1.0 - f);
            if frac > best_frac {
                best_frac = frac;
                best = Some(j);
            }
        }
        best
    }

    /// Offers an integral LP point as incumbent.
    fn offer(&mut self, t: &Tableau) -> Result<(), MilpError> {
        let mut cand = t.structural_values().to_vec();
        for &j in &self.binaries {
            cand[j] = libm::round(cand[j]);
        }
        if self.model.max_violation(&cand) > FEASIBILITY_TOL {
            // re-solve the continuous part with binaries pinned
            let mut pinned = t.clone();
            for &j in &self.binaries {
                pinned.fix(j, cand[j]);
            }
            if self.reoptimize(&mut pinned)? != LpStatus::Optimal {
                return Ok(());
            }
            cand = pinned.structural_values().to_vec();
            for &j in &self.binaries {
                cand[j] = libm::round(cand[j]);
            }
            if self.model.max_violation(&cand) > FEASIBILITY_TOL {
                return Ok(());
            }
        }
        let z = self.sign * (self.model.evaluate(&cand) - self.model.objective.constant);
        if self.incumbent.as_ref().is_none_or(|(best, _)| z < *best) {
            self.incumbent = Some((z, cand));
        }
        Ok(())
    }
}

pub fn solve_with_clock<C: Clock>(model: &Model, limits: &Limits, clock: &C) -> Result<Solution, MilpError> {
    branch_and_bound(model, limits, clock, None)
}

fn branch_and_bound<C: Clock>(
    model: &Model,
    limits: &Limits,
    clock: &C,
    start: Option<&[f64]>,
) -> Result<Solution, MilpError> {
    model.validate()?;
    let sign = objective_sign(model);
    let mut root = Tableau::from_model(model, sign);
    let cap = iteration_cap(&root);
    let root_status = root.solve(cap).map_err(|_| MilpError::Numerical(cap))?;

    let mut search = Search {
        model,
        limits,
        clock,
        sign,
        binaries: model
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
            .collect(),
        cap,
        stats: SolveStats { nodes: 1, lp_iterations: root.iterations, ..SolveStats::default() },
        incumbent: None,
    };
    if let Some(x) = start {
        let integral =
            search.binaries.iter().all(|&j| x.get(j).is_some_and(|v| (v - libm::round(*v)).abs() <= INTEGRALITY_TOL));
        if x.len() == model.variables.len() && integral && model.max_violation(x) <= FEASIBILITY_TOL {
            let z = sign * (model.evaluate(x) - model.objective.constant);
            search.incumbent = Some((z, x.to_vec()));
        }
    }
    match root_status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(finish(search, Status::Infeasible, None)),
        LpStatus::Unbounded => return Ok(finish(search, Status::Unbounded, None)),
    }

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut limit_hit = false;
    let mut current = Some((root.clone(), Vec::<(usize, f64)>::new(), 0u32));

    loop {
        let (mut tab, fixings, depth) = match current.take() {
            Some(c) => c,
            None => {
                let Some(node) = heap.pop() else { break };
                if node.bound >= search.cutoff() {
                    continue;
                }
                if search.limit_hit() {
                    heap.push(node);
                    limit_hit = true;
                    break;
                }
                let mut t = root.clone();
                for &(j, v) in &node.fixings {
                    t.fix(j, v);
                }
                if search.reoptimize(&mut t)? != LpStatus::Optimal {
                    continue;
                }
                (t, node.fixings, node.depth)
            }
        };

        let z = tab.objective();
        if z >= search.cutoff() {
            continue;
        }
        let Some(j) = search.most_fractional(tab.structural_values()) else {
            search.offer(&tab)?;
            continue;
        };
        if search.limit_hit() {
            heap.push(Node { bound: z, depth, id: next_id, fixings });
            limit_hit = true;
            break;
        }

        // plunge into the rounding direction, park the sibling
        let up_first = tab.structural_values()[j] >= 0.5;
        let (first, second) = if up_first { (1.0, 0.0) } else { (0.0, 1.0) };
        let mut sibling = fixings.clone();
        sibling.push((j, second));
        heap.push(Node { bound: z, depth: depth + 1, id: next_id, fixings: sibling });
        next_id += 1;

        let mut mine = fixings;
        mine.push((j, first));
        tab.fix(j, first);
        if search.reoptimize(&mut tab)? == LpStatus::Optimal {
            current = Some((tab, mine, depth + 1));
        }
    }

    let status = if limit_hit {
        Status::LimitReached
    } else if search.incumbent.is_some() {
        Status::Optimal
    } else {
        Status::Infeasible
    };
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    Ok(finish(search, status, Some(open_bound)))
}

fn finish<C: Clock>(search: Search<'_, C>, status: Status, open_bound: Option<f64>) -> Solution {
    let Search { model, sign, clock, mut stats, incumbent, .. } = search;
    stats.elapsed = clock.elapsed();
    let to_model = |z: f64| sign * z + model.objective.constant;
    let (objective, values) = match incumbent {
        Some((z, x)) => {
            let bound = match status {
                Status::LimitReached => open_bound.map(|b| b.min(z)).unwrap_or(z),
                _ => z,
            };
            stats.best_bound = Some(to_model(bound));
            (Some(model.evaluate(&x)), Some(x))
        }
        None => {
            if status == Status::LimitReached {
                stats.best_bound = open_bound.filter(|b| b.is_finite()).map(to_model);
            }
            (None, None)
        }
    };
    Solution { status, objective, values, stats }
}
