use super::*;
use crate::candgen::Endpoint;
use crate::milp::Limits;
use crate::netcore::fixtures::path;
use crate::netcore::{build_distance_table, point_distance, DistanceTable, Network, OdPair, VertexId};
use crate::scenario::{expected_flow, generate_flows, FlowTensor, Scenario, ScenarioSet};
use alloc::vec;
use proptest::prelude::*;

fn catalog(at: &[u32], cover: Vec<Vec<usize>>, flows: &[f64]) -> EndpointCatalog {
    let pairs: Vec<OdPair> = flows
        .iter()
        .enumerate()
        .map(|(q, &f)| OdPair { origin: VertexId(0), destination: VertexId(q as u32 + 1), flow: f })
        .collect();
    let endpoints = at
        .iter()
        .enumerate()
        .map(|(id, &v)| Endpoint { id, location: NetworkPoint::Vertex(VertexId(v)), sources: Vec::new() })
        .collect();
    let covered_flow = cover.iter().map(|qs| qs.iter().map(|&q| flows[q]).sum()).collect();
    EndpointCatalog { pairs, endpoints, covered_pairs: cover, covered_flow }
}

fn plan_with(catalog: &EndpointCatalog, selected: Vec<usize>) -> FcsPlan {
    let covered = (0..catalog.pairs.len()).filter(|&q| selected.iter().any(|&w| catalog.covers(w, q))).collect();
    FcsPlan { selected, covered, ..FcsPlan::empty() }
}

fn stage1(catalog: &EndpointCatalog, mu: &[f64], cost: f64, budget: f64) -> FcsPlan {
    let cfg = Stage1Config { cost, budget };
    let m = build_stage1(catalog, mu, &cfg).unwrap();
    solve_stage1(&m, catalog, &cfg, &Limits::default()).unwrap()
}

fn stage1_oracle(catalog: &EndpointCatalog, mu: &[f64], max_sites: usize) -> f64 {
    let n = catalog.len();
    let mut best = 0.0f64;
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize > max_sites {
            continue;
        }
        let v: f64 = (0..catalog.pairs.len())
            .filter(|&q| (0..n).any(|w| mask >> w & 1 == 1 && catalog.covers(w, q)))
            .map(|q| (1.0 + mu[q]) * catalog.pairs[q].flow)
            .sum();
        best = best.max(v);
    }
    best
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn stage1_budget_below_cost_selects_nothing() {
    let c = catalog(&[0, 1], vec![vec![0], vec![1]], &[3.0, 4.0]);
    let p = stage1(&c, &[0.0, 0.0], 2.0, 1.5);
    assert!(p.selected.is_empty());
    assert_eq!(p.objective, 0.0);
    let p = stage1(&c, &[0.0, 0.0], 1.0, 0.0);
    assert!(p.selected.is_empty() && p.covered.is_empty());
}

#[test]
fn stage1_dominant_site() {
    let c = catalog(&[0, 1, 2], vec![vec![0], vec![0, 1, 2], vec![2]], &[3.0, 4.0, 1.0]);
    let mu = [0.5, 0.0, 1.0];
    let p = stage1(&c, &mu, 1.0, 1.0);
    assert_eq!(p.selected, vec![1]);
    assert_eq!(p.covered, vec![0, 1, 2]);
    assert!(close(p.objective, 1.5 * 3.0 + 4.0 + 2.0));
}

#[test]
fn stage1_rejects_bad_config() {
    let c = catalog(&[0], vec![vec![0]], &[1.0]);
    assert!(build_stage1(&c, &[0.0], &Stage1Config { cost: 0.0, budget: 1.0 }).is_err());
    assert!(build_stage1(&c, &[0.0], &Stage1Config { cost: 1.0, budget: -1.0 }).is_err());
    assert!(matches!(
        build_stage1(&c, &[], &Stage1Config { cost: 1.0, budget: 1.0 }),
        Err(PlannerError::DimensionMismatch { .. })
    ));
}

#[test]
fn stage1_without_pairs_warns() {
    let c = catalog(&[0, 1], vec![vec![], vec![]], &[]);
    let cfg = Stage1Config { cost: 1.0, budget: 2.0 };
    let m = build_stage1(&c, &[], &cfg).unwrap();
    assert_eq!(m.warnings.len(), 1);
    let p = solve_stage1(&m, &c, &cfg, &Limits::default()).unwrap();
    assert_eq!(p.objective, 0.0);
}

#[test]
fn derive_sets_partitions() {
    let c = catalog(&[1, 2, 3], vec![vec![0], vec![1], vec![0, 2]], &[1.0, 1.0, 1.0]);
    let stations = vec![ExistingStation { id: "E1".into(), location: NetworkPoint::Vertex(VertexId(0)) }];
    let sets = derive_sets(&plan_with(&c, vec![1]), &stations, &c);
    assert_eq!(sets.points.len(), 4);
    assert_eq!(sets.fixed, vec![0, 2]);
    assert_eq!(sets.mobile, vec![1, 3]);
    assert_eq!(sets.mobile_pairs, vec![0, 2]);
    assert!(sets.points[0].existing && sets.coverage(&c, 0).is_empty());
    assert_eq!(sets.points[3].label, "w3");

    let empty = derive_sets(&FcsPlan::empty(), &[], &c);
    assert!(empty.fixed.is_empty());
    assert_eq!(empty.mobile_pairs, vec![0, 1, 2]);
    let all = derive_sets(&plan_with(&c, vec![0, 1, 2]), &[], &c);
    assert!(all.mobile_pairs.is_empty() && all.mobile.is_empty());
}

/// Stage-2 test instance on a path network.
struct Instance {
    net: Network,
    table: DistanceTable,
    catalog: EndpointCatalog,
    sets: StageSets,
    tensor: FlowTensor,
    scenarios: ScenarioSet,
    mu: Vec<f64>,
}

impl Instance {
    fn new(
        lengths: &[f64],
        stations: &[u32],
        at: &[u32],
        cover: Vec<Vec<usize>>,
        flows: &[f64],
        selected: Vec<usize>,
        scenarios: ScenarioSet,
    ) -> Self {
        let net = path(lengths);
        let table = build_distance_table(&net).unwrap();
        let catalog = catalog(at, cover, flows);
        let stations: Vec<ExistingStation> = stations
            .iter()
            .enumerate()
            .map(|(i, &v)| ExistingStation {
                id: alloc::format!("E{}", i + 1),
                location: NetworkPoint::Vertex(VertexId(v)),
            })
            .collect();
        let sets = derive_sets(&plan_with(&catalog, selected), &stations, &catalog);
        let tensor = generate_flows(&catalog.pairs, &scenarios).unwrap();
        let mu = (0..flows.len()).map(|q| 0.1 * q as f64).collect();
        Instance { net, table, catalog, sets, tensor, scenarios, mu }
    }

    fn input(&self) -> Stage2Input<'_> {
        Stage2Input {
            network: &self.net,
            table: &self.table,
            sets: &self.sets,
            catalog: &self.catalog,
            tensor: &self.tensor,
            scenarios: &self.scenarios,
            mu_q: &self.mu,
        }
    }

    fn solve(&self, cfg: &Stage2Config) -> (Stage2Model, McsSchedule) {
        let m = build_stage2(&self.input(), cfg).unwrap();
        let s = solve_stage2(&m, &Limits::default()).unwrap();
        (m, s)
    }

    /// Exhaustive search over every location sequence, straight from the
    /// schedule semantics rather than the model.
    fn oracle(&self, cfg: &Stage2Config) -> f64 {
        let (periods, _, _) = self.tensor.dims();
        let n = self.sets.points.len();
        let cells = periods * cfg.fleet;
        let options = n + 1;
        let value =
            |t: usize, q: usize| cfg.benefit * (1.0 + self.mu[q]) * expected_flow(&self.tensor, &self.scenarios, q, t);
        let dist = |a: usize, b: usize| {
            point_distance(&self.net, &self.table, &self.sets.points[a].location, &self.sets.points[b].location)
        };
        let cap = libm::floor(cfg.budget / cfg.cost + 1e-9) as usize;
        let mut best = f64::NEG_INFINITY;
        let mut code = vec![0usize; cells];
        loop {
            // code[t * fleet + m] == 0 is idle, otherwise point code - 1
            let at = |t: usize, m: usize| code[t * cfg.fleet + m].checked_sub(1);
            let serving = |p: Option<usize>| p.is_some_and(|p| !self.sets.is_fixed(p));
            let mut ok = true;
            for t in 0..periods - 1 {
                for m in 0..cfg.fleet {
                    if serving(at(t, m)) && !at(t + 1, m).is_some_and(|p| self.sets.is_fixed(p)) {
                        ok = false;
                    }
                }
            }
            let used = (0..cfg.fleet).filter(|&m| (0..periods).any(|t| serving(at(t, m)))).count();
            if ok && used <= cap {
                let mut v = 0.0;
                for t in 0..periods {
                    for &q in &self.sets.mobile_pairs {
                        let hit = (0..cfg.fleet).any(|m| {
                            at(t, m)
                                .is_some_and(|p| serving(Some(p)) && self.sets.coverage(&self.catalog, p).contains(&q))
                        });
                        if hit {
                            v += value(t, q);
                        }
                    }
                }
                for t in 0..periods - 1 {
                    for m in 0..cfg.fleet {
                        if let (Some(a), Some(b)) = (at(t, m), at(t + 1, m)) {
                            v -= cfg.relocation * dist(a, b) * self.scenarios.probability_sum();
                        }
                    }
                }
                best = best.max(v);
            }
            let mut i = 0;
            while i < cells {
                code[i] += 1;
                if code[i] < options {
                    break;
                }
                code[i] = 0;
                i += 1;
            }
            if i == cells {
                return best;
            }
        }
    }
}

fn two_scenarios(periods: usize, seed: u64) -> ScenarioSet {
    ScenarioSet {
        periods,
        modulation: vec![1.0; periods],
        scenarios: vec![
            Scenario { label: "high".into(), probability: 0.4, multiplier: (1.1, 1.4) },
            Scenario { label: "low".into(), probability: 0.6, multiplier: (0.5, 0.9) },
        ],
        seed,
    }
}

fn check_invariants(inst: &Instance, cfg: &Stage2Config, s: &McsSchedule) {
    let sets = &inst.sets;
    // (a) one location per unit and period by construction of the schedule
    assert_eq!(s.assignments.len(), s.periods * s.fleet);
    for t in 0..s.periods {
        for m in 0..s.fleet {
            let a = s.at(t, m);
            assert_eq!((a.period, a.mcs), (t, m));
            // (e) modes agree with the point sets
            match (a.mode, a.point) {
                (Mode::Serve, Some(p)) => assert!(sets.mobile.contains(&p)),
                (Mode::Charge, Some(p)) => assert!(sets.fixed.contains(&p)),
                (Mode::Idle, None) => {}
                other => panic!("inconsistent cell {other:?}"),
            }
            // (b) serving is followed by charging
            if a.mode == Mode::Serve && t + 1 < s.periods {
                assert_eq!(s.at(t + 1, m).mode, Mode::Charge);
            }
        }
        // (c) covered pairs have a covering server
        for &q in &s.covered[t] {
            assert!(sets.mobile_pairs.contains(&q));
            assert!((0..s.fleet).any(|m| {
                let a = s.at(t, m);
                a.mode == Mode::Serve && sets.coverage(&inst.catalog, a.point.unwrap()).contains(&q)
            }));
        }
    }
    // (d) activation budget
    let used = s.activated.iter().filter(|&&x| x).count();
    assert!(used as f64 * cfg.cost <= cfg.budget + 1e-9);
    assert!(close(s.benefit - s.relocation_cost, s.objective));
    assert!(s.objective >= -1e-9);
}

#[test]
fn stage2_nothing_to_serve() {
    let scen = two_scenarios(3, 1);
    let inst = Instance::new(&[2.0, 2.0], &[0], &[1, 2], vec![vec![0], vec![1]], &[3.0, 2.0], vec![0, 1], scen);
    assert!(inst.sets.mobile_pairs.is_empty());
    let cfg = Stage2Config { fleet: 2, ..Stage2Config::default() };
    let (m, s) = inst.solve(&cfg);
    assert_eq!(m.warnings.len(), 1);
    assert_eq!(s.objective, 0.0);
    assert!(s.activated.iter().all(|a| !a));
    assert!(s.relocations.is_empty());
}

#[test]
fn stage2_serve_then_charge_by_hand() {
    // FCS E1 at p0, endpoint w1 at p1 (3 miles away) serves the only pair
    let mut scen = ScenarioSet::standard(2, 5);
    scen.modulation = vec![1.0, 0.0];
    let inst = Instance::new(&[3.0, 1.0], &[0], &[1], vec![vec![0]], &[40.0], vec![], scen);
    let cfg = Stage2Config { fleet: 1, ..Stage2Config::default() };
    let (_, s) = inst.solve(&cfg);
    let benefit = 10.0 * expected_flow(&inst.tensor, &inst.scenarios, 0, 0);
    let expected = benefit - 20.0 * 3.0 * 0.9;
    assert!(expected > 0.0);
    assert!(close(s.objective, expected), "{} vs {expected}", s.objective);
    assert_eq!(s.at(0, 0).mode, Mode::Serve);
    assert_eq!(s.at(1, 0).mode, Mode::Charge);
    assert_eq!(s.at(1, 0).point, Some(0));
    assert_eq!(s.relocations.len(), 1);
    assert!(close(s.relocations[0].miles, 3.0));
}

#[test]
fn stage2_zero_benefit_deploys_nothing() {
    let scen = two_scenarios(3, 2);
    let inst = Instance::new(&[1.0, 2.0, 1.5], &[0], &[1, 3], vec![vec![0], vec![0, 1]], &[5.0, 9.0], vec![], scen);
    let cfg = Stage2Config { fleet: 1, benefit: 0.0, ..Stage2Config::default() };
    let (_, s) = inst.solve(&cfg);
    assert_eq!(s.objective, 0.0);
    assert!(s.activated.iter().all(|a| !a));
}

#[test]
fn stage2_rejects_bad_config() {
    let inst = Instance::new(&[1.0], &[0], &[1], vec![vec![0]], &[1.0], vec![], two_scenarios(2, 0));
    for cfg in [
        Stage2Config { fleet: 0, ..Stage2Config::default() },
        Stage2Config { cost: 0.0, ..Stage2Config::default() },
        Stage2Config { relocation: -1.0, ..Stage2Config::default() },
    ] {
        assert!(matches!(build_stage2(&inst.input(), &cfg), Err(PlannerError::InvalidConfig(_))));
    }
    let bad_mu = Stage2Input { mu_q: &[], ..inst.input() };
    assert!(matches!(build_stage2(&bad_mu, &Stage2Config::default()), Err(PlannerError::DimensionMismatch { .. })));
}

#[test]
fn stage2_faithful_and_reduced_forms_agree() {
    let inst = Instance::new(
        &[2.0, 1.0, 3.0, 1.5],
        &[0],
        &[1, 2, 3, 4],
        vec![vec![0, 1], vec![1], vec![2], vec![]],
        &[4.0, 6.0, 5.0],
        vec![2],
        two_scenarios(3, 9),
    );
    let base = Stage2Config { fleet: 2, relocation: 2.0, ..Stage2Config::default() };
    let mut objectives = Vec::new();
    for (reduce, recharge_link) in [(false, false), (true, false), (false, true), (true, true)] {
        let cfg = Stage2Config { reduce, recharge_link, ..base };
        let (_, s) = inst.solve(&cfg);
        check_invariants(&inst, &cfg, &s);
        objectives.push(s.objective);
    }
    let oracle = inst.oracle(&base);
    for z in objectives {
        assert!(close(z, oracle), "{z} vs {oracle}");
    }
}

#[test]
fn kpi_identity_and_zone_counts() {
    let inst = Instance::new(
        &[2.0, 1.0, 3.0],
        &[0],
        &[1, 2, 3],
        vec![vec![0], vec![1], vec![0, 1]],
        &[8.0, 6.0],
        vec![],
        two_scenarios(3, 4),
    );
    let cfg = Stage2Config { fleet: 2, relocation: 1.0, ..Stage2Config::default() };
    let (_, s) = inst.solve(&cfg);
    let plan = FcsPlan::empty();
    let r = kpi_report(&inst.net, &inst.sets, &plan, &s);
    assert!(close(r.benefit - r.relocation_cost, r.objective));
    let cost: f64 = s.relocations.iter().map(|x| x.cost).sum();
    assert!(close(r.relocation_cost, cost));
    let serves = s.assignments.iter().filter(|a| a.mode == Mode::Serve).count();
    assert_eq!(r.deployments_per_zone.iter().map(|(_, c)| c).sum::<usize>(), serves);
    assert_eq!(r.modes.len(), 2);
    assert!(r.modes.iter().all(|row| row.len() == 3));

    let idle = McsSchedule::idle(3, 2);
    let z = kpi_report(&inst.net, &inst.sets, &plan, &idle);
    assert_eq!((z.objective, z.benefit, z.relocation_cost, z.activated, z.relocations), (0.0, 0.0, 0.0, 0, 0));
}

fn cover_sets(n: usize, pairs: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    proptest::collection::vec(proptest::collection::btree_set(0..pairs, 0..=pairs), n)
        .prop_map(|v| v.into_iter().map(|s| s.into_iter().collect()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stage1_matches_enumeration(
        cover in cover_sets(5, 8),
        flows in proptest::collection::vec(0.0f64..20.0, 8),
        mu in proptest::collection::vec(0.0f64..1.0, 8),
    ) {
        let c = catalog(&[0, 1, 2, 3, 4], cover, &flows);
        let p = stage1(&c, &mu, 3.0, 6.5);
        prop_assert!(p.selected.len() <= 2);
        prop_assert!(close(p.objective, stage1_oracle(&c, &mu, 2)));
        for &q in &p.covered {
            prop_assert!(p.selected.iter().any(|&w| c.covers(w, q)));
        }
    }

    #[test]
    fn stage1_scales_with_flow(
        cover in cover_sets(4, 6),
        flows in proptest::collection::vec(0.0f64..20.0, 6),
    ) {
        let mu = [0.2; 6];
        let c = catalog(&[0, 1, 2, 3], cover.clone(), &flows);
        let doubled: Vec<f64> = flows.iter().map(|f| 2.0 * f).collect();
        let d = catalog(&[0, 1, 2, 3], cover, &doubled);
        let a = stage1(&c, &mu, 1.0, 2.0).objective;
        let b = stage1(&d, &mu, 1.0, 2.0).objective;
        prop_assert!(close(2.0 * a, b));
    }

    #[test]
    fn stage1_equity_monotone(
        cover in cover_sets(4, 6),
        flows in proptest::collection::vec(0.0f64..20.0, 6),
        mu in proptest::collection::vec(0.0f64..1.0, 6),
        bump in 0.0f64..1.0,
    ) {
        let c = catalog(&[0, 1, 2, 3], cover, &flows);
        let p = stage1(&c, &mu, 1.0, 2.0);
        for &q in &p.covered {
            let mut raised = mu.clone();
            raised[q] += bump;
            prop_assert!(stage1(&c, &raised, 1.0, 2.0).objective >= p.objective - 1e-9);
        }
    }

    #[test]
    fn stage2_matches_enumeration(
        lengths in proptest::collection::vec(0.5f64..4.0, 4),
        cover in cover_sets(3, 3),
        flows in proptest::collection::vec(0.0f64..10.0, 3),
        relocation in 0.0f64..6.0,
        budget in 0.0f64..2.5,
        seed in any::<u64>(),
    ) {
        // one existing station and one selected endpoint charge; the rest serve
        let mut cover = cover;
        cover.push(vec![]);
        let inst = Instance::new(&lengths, &[0], &[1, 2, 3, 4], cover, &flows, vec![3], two_scenarios(3, seed));
        let cfg = Stage2Config { fleet: 2, relocation, budget, ..Stage2Config::default() };
        let (_, s) = inst.solve(&cfg);
        check_invariants(&inst, &cfg, &s);
        let oracle = inst.oracle(&cfg);
        prop_assert!(close(s.objective, oracle), "{} vs {}", s.objective, oracle);
    }
}
