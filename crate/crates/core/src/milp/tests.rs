use super::*;
use alloc::vec;
use alloc::vec::Vec;
use proptest::prelude::*;

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

fn unlimited() -> Limits {
    Limits::default()
}

#[test]
fn single_binary_maximised() {
    let mut m = Model::new(ObjectiveSense::Maximize);
    let x = m.add_binary("x");
    m.set_objective(vec![(x, 1.0)]);
    let s = solve(&m, &unlimited()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert_eq!(s.objective, Some(1.0));
    assert_eq!(s.value(x), Some(1.0));
    assert_eq!(s.gap(), Some(0.0));
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut m = Model::new(ObjectiveSense::Maximize);
    let x = m.add_binary("x");
    m.add_constraint("lo", vec![(x, 1.0)], Sense::Ge, 1.0);
    m.add_constraint("hi", vec![(x, 1.0)], Sense::Le, 0.0);
    let s = solve(&m, &unlimited()).unwrap();
    assert_eq!(s.status, Status::Infeasible);
    assert!(s.values.is_none());
}

fn knapsack() -> (Model, Vec<f64>, Vec<f64>, f64) {
    let values = vec![10.0, 13.0, 7.0, 8.0, 4.0, 9.0];
    let weights = vec![5.0, 6.0, 3.0, 4.0, 2.0, 5.0];
    let cap = 10.0;
    let mut m = Model::new(ObjectiveSense::Maximize);
    let xs: Vec<VarId> = (0..6).map(|i| m.add_binary(alloc::format!("x{}", i))).collect();
    m.set_objective(xs.iter().zip(&values).map(|(&x, &v)| (x, v)).collect());
    m.add_constraint("cap", xs.iter().zip(&weights).map(|(&x, &w)| (x, w)).collect(), Sense::Le, cap);
    (m, values, weights, cap)
}

#[test]
fn knapsack_matches_enumeration() {
    let (m, values, weights, cap) = knapsack();
    let mut best = 0.0f64;
    for mask in 0u32..64 {
        let (mut v, mut w) = (0.0, 0.0);
        for i in 0..6 {
            if mask & (1 << i) != 0 {
                v += values[i];
                w += weights[i];
            }
        }
        if w <= cap {
            best = best.max(v);
        }
    }
    let s = solve(&m, &unlimited()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!(rel_close(s.objective.unwrap(), best), "{:?} vs {}", s.objective, best);
    assert!(m.max_violation(s.values.as_ref().unwrap()) <= FEASIBILITY_TOL);
}

#[test]
fn continuous_lp_vertex() {
    // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3  -> (3, 1), 11
    let mut m = Model::new(ObjectiveSense::Maximize);
    let x = m.add_continuous("x", 0.0, 3.0);
    let y = m.add_continuous("y", 0.0, f64::INFINITY);
    m.set_objective(vec![(x, 3.0), (y, 2.0)]);
    m.add_constraint("a", vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
    m.add_constraint("b", vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0);
    let s = solve(&m, &unlimited()).unwrap();
    assert!(rel_close(s.objective.unwrap(), 11.0));
    assert!((s.value(x).unwrap() - 3.0).abs() < 1e-9);
    assert!((s.value(y).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn free_variables_and_equalities() {
    // min |t| style: t free, t = 2 - u, u in [-1, 5]  min t + 0 -> u = 5, t = -3
    let mut m = Model::new(ObjectiveSense::Minimize);
    let t = m.add_continuous("t", f64::NEG_INFINITY, f64::INFINITY);
    let u = m.add_continuous("u", -1.0, 5.0);
    m.set_objective(vec![(t, 1.0)]);
    m.add_constraint("link", vec![(t, 1.0), (u, 1.0)], Sense::Eq, 2.0);
    m.objective.constant = 10.0;
    let s = solve(&m, &unlimited()).unwrap();
    assert!(rel_close(s.objective.unwrap(), 7.0));
    assert!((s.value(u).unwrap() - 5.0).abs() < 1e-9);
}

#[test]
fn unbounded_lp() {
    let mut m = Model::new(ObjectiveSense::Maximize);
    let x = m.add_continuous("x", 0.0, f64::INFINITY);
    let y = m.add_continuous("y", 0.0, f64::INFINITY);
    m.set_objective(vec![(x, 1.0)]);
    m.add_constraint("r", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
    assert_eq!(solve(&m, &unlimited()).unwrap().status, Status::Unbounded);
}

#[test]
fn feasibility_checks() {
    let mut m = Model::new(ObjectiveSense::Minimize);
    let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
    m.add_constraint("a", vec![(x, 1.0)], Sense::Ge, 0.0);
    m.add_constraint("b", vec![(x, 1.0)], Sense::Le, 1.0);
    assert!(check_feasible(&m).unwrap());
    m.constraints[0].rhs = 2.0;
    assert!(!check_feasible(&m).unwrap());
}

#[test]
fn node_limit_reports_incumbent_and_bound() {
    let mut m = Model::new(ObjectiveSense::Maximize);
    let xs: Vec<VarId> = (0..14).map(|i| m.add_binary(alloc::format!("x{}", i))).collect();
    let w: Vec<f64> = (0..14).map(|i| 3.0 + (i * 7 % 11) as f64).collect();
    let v: Vec<f64> = (0..14).map(|i| 5.0 + (i * 5 % 13) as f64).collect();
    m.set_objective(xs.iter().zip(&v).map(|(&x, &c)| (x, c)).collect());
    m.add_constraint("cap", xs.iter().zip(&w).map(|(&x, &c)| (x, c)).collect(), Sense::Le, 40.5);
    let s = solve(&m, &Limits { node_limit: Some(2), time_limit: None }).unwrap();
    assert_eq!(s.status, Status::LimitReached);
    let full = solve(&m, &unlimited()).unwrap();
    assert_eq!(full.status, Status::Optimal);
    if let Some(z) = s.objective {
        assert!(z <= full.objective.unwrap() + 1e-9);
    }
    let bound = s.stats.best_bound.unwrap();
    assert!(bound >= full.objective.unwrap() - 1e-6);
}

#[test]
fn invalid_models_are_rejected() {
    let mut m = Model::new(ObjectiveSense::Minimize);
    m.add_continuous("x", 2.0, 1.0);
    assert!(matches!(solve(&m, &unlimited()), Err(MilpError::InvalidBounds { .. })));

    let mut m = Model::new(ObjectiveSense::Minimize);
    m.add_continuous("x", 0.0, 1.0);
    m.set_objective(vec![(VarId(3), 1.0)]);
    assert_eq!(solve(&m, &unlimited()), Err(MilpError::UnknownVariable(3)));

    let mut m = Model::new(ObjectiveSense::Minimize);
    m.add_binary("x");
    m.add_binary("x");
    assert!(matches!(m.validate(), Err(MilpError::DuplicateName(_))));
}

#[test]
fn empty_objective_is_written_as_constant() {
    let mut m = Model::new(ObjectiveSense::Minimize);
    let x = m.add_continuous("x", 0.0, 1.0);
    m.add_constraint("c", vec![(x, 1.0)], Sense::Ge, 0.5);
    let text = write_lp(&m).unwrap();
    assert!(text.contains("\\ constant objective"));
    assert!(text.contains(" obj: 0\n"));
    let back = read_lp(&text).unwrap();
    assert!(back.objective.terms.is_empty());
    assert_eq!(back.objective.constant, 0.0);
}

#[test]
fn knapsack_round_trip() {
    let (m, ..) = knapsack();
    let text = write_lp(&m).unwrap();
    assert!(text.starts_with("Maximize\n"));
    assert!(text.contains("Subject To\n"));
    assert!(text.contains("Binary\n"));
    assert!(text.ends_with("End\n"));
    let back = read_lp(&text).unwrap();
    assert_equivalent(&m, &back);
}

#[test]
fn bounds_and_wrapping_round_trip() {
    let mut m = Model::new(ObjectiveSense::Minimize);
    let vars: Vec<VarId> = (0..40).map(|i| m.add_continuous(alloc::format!("y_q{}", i), 0.0, f64::INFINITY)).collect();
    let f = m.add_continuous("free var", f64::NEG_INFINITY, f64::INFINITY);
    let neg = m.add_continuous("neg", -2.5, -0.125);
    let fixed = m.add_continuous("fixed", 3.0, 3.0);
    let b = m.add_binary("b");
    m.variables[b.index()].upper = 0.0;
    m.add_continuous("unused", 0.0, f64::INFINITY);
    m.set_objective(vars.iter().map(|&v| (v, 1.0 / 3.0)).chain([(f, -1e-12), (neg, 1e20)]).collect());
    m.objective.constant = -4.0;
    m.add_constraint("long", vars.iter().map(|&v| (v, 2.0)).collect(), Sense::Ge, 1.5);
    m.add_constraint("", vec![(f, 1.0), (neg, 1.0), (fixed, 1.0), (b, 1.0)], Sense::Eq, -7.0);
    let text = write_lp(&m).unwrap();
    assert!(text.lines().all(|l| l.len() <= 80), "{}", text);
    assert!(text.contains("free_var free"));
    let back = read_lp(&text).unwrap();
    assert_eq!(back.variables.len(), m.variables.len());
    assert_equivalent(&m, &back);
}

#[test]
fn reader_rejects_garbage() {
    assert!(matches!(read_lp("Subject To\n x <= 1\nEnd\n"), Err(MilpError::Parse { .. })));
    assert!(matches!(read_lp("Maximize\n obj: x\nSubject To\n c: x <=\nEnd\n"), Err(MilpError::Parse { .. })));
    assert!(matches!(read_lp("Maximize\n obj: x\n"), Err(MilpError::Parse { line: 2, .. })));
}

#[test]
fn reader_accepts_hand_written_lp() {
    let text = "\\ comment\nMAXIMIZE\n value: 2 a + 3 b\n - c\nST\n r1: a + b + c <= 2\n -a + b >= -1\nBOUNDS\n c <= 4\n -1 <= d <= 1\nBINARIES\n a b\nEND\n";
    let m = read_lp(text).unwrap();
    assert_eq!(m.variables.len(), 4);
    assert_eq!(m.num_binaries(), 2);
    assert_eq!(m.constraints[1].name, "c2");
    assert_eq!(m.constraints[1].rhs, -1.0);
    let s = solve(&m, &unlimited()).unwrap();
    assert!(rel_close(s.objective.unwrap(), 5.0));
}

fn assert_equivalent(a: &Model, b: &Model) {
    use alloc::collections::BTreeMap;
    use alloc::string::String;
    let names_a: Vec<String> = a.variables.iter().map(|v| lp_safe(&v.name)).collect();
    let names_b: Vec<String> = b.variables.iter().map(|v| v.name.clone()).collect();
    let by_name: BTreeMap<&str, &Variable> = b.variables.iter().map(|v| (v.name.as_str(), v)).collect();
    for (v, n) in a.variables.iter().zip(&names_a) {
        let w = by_name.get(n.as_str()).unwrap_or_else(|| panic!("missing {}", n));
        assert_eq!((v.kind, v.lower, v.upper), (w.kind, w.lower, w.upper), "{}", n);
    }
    let map = |terms: &[(VarId, f64)], names: &[String]| -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for &(v, c) in terms {
            *out.entry(names[v.index()].clone()).or_insert(0.0) += c;
        }
        out
    };
    assert_eq!(a.objective.sense, b.objective.sense);
    assert_eq!(a.objective.constant, b.objective.constant);
    assert_eq!(map(&a.objective.terms, &names_a), map(&b.objective.terms, &names_b));
    assert_eq!(a.constraints.len(), b.constraints.len());
    for (ca, cb) in a.constraints.iter().zip(&b.constraints) {
        assert_eq!((ca.sense, ca.rhs), (cb.sense, cb.rhs));
        assert_eq!(map(&ca.terms, &names_a), map(&cb.terms, &names_b));
    }
}

fn lp_safe(s: &str) -> alloc::string::String {
    s.replace(' ', "_")
}

/// Random pure-binary model with small integer data.
fn binary_model() -> impl Strategy<Value = Model> {
    (1usize..=10, 1usize..=5, any::<bool>()).prop_flat_map(|(n, m, maximize)| {
        (
            proptest::collection::vec(-10i32..=10, n),
            proptest::collection::vec((proptest::collection::vec(-5i32..=5, n), 0u8..3, -3i32..=10), m),
        )
            .prop_map(move |(obj, rows)| {
                let mut model = Model::new(if maximize { ObjectiveSense::Maximize } else { ObjectiveSense::Minimize });
                let xs: Vec<VarId> = (0..n).map(|i| model.add_binary(alloc::format!("x{}", i))).collect();
                model.set_objective(xs.iter().zip(&obj).map(|(&x, &c)| (x, c as f64)).collect());
                for (k, (coef, sense, rhs)) in rows.into_iter().enumerate() {
                    let sense = [Sense::Le, Sense::Ge, Sense::Eq][sense as usize];
                    let terms = xs.iter().zip(&coef).filter(|(_, &c)| c != 0).map(|(&x, &c)| (x, c as f64)).collect();
                    model.add_constraint(alloc::format!("r{}", k), terms, sense, rhs as f64);
                }
                model
            })
    })
}

fn enumerate_binary(model: &Model) -> Option<f64> {
    let n = model.variables.len();
    let mut best: Option<f64> = None;
    let mut x = vec![0.0; n];
    for mask in 0u32..(1 << n) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = ((mask >> i) & 1) as f64;
        }
        if model.max_violation(&x) > 0.0 {
            continue;
        }
        let z = model.evaluate(&x);
        best = Some(match (best, model.objective.sense) {
            (None, _) => z,
            (Some(b), ObjectiveSense::Maximize) => b.max(z),
            (Some(b), ObjectiveSense::Minimize) => b.min(z),
        });
    }
    best
}

/// Brute-force optimum of a 2-variable box-bounded LP over all pairwise
/// intersections of its boundary lines.
fn enumerate_vertices(rows: &[(f64, f64, f64)], hi: f64, c: (f64, f64)) -> Option<f64> {
    let mut lines: Vec<(f64, f64, f64)> = rows.to_vec();
    lines.extend([(1.0, 0.0, 0.0), (1.0, 0.0, hi), (0.0, 1.0, 0.0), (0.0, 1.0, hi)]);
    let mut best: Option<f64> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (a1, b1, r1) = lines[i];
            let (a2, b2, r2) = lines[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (r1 * b2 - r2 * b1) / det;
            let y = (a1 * r2 - a2 * r1) / det;
            let ok = x >= -1e-9
                && y >= -1e-9
                && x <= hi + 1e-9
                && y <= hi + 1e-9
                && rows.iter().all(|&(a, b, r)| a * x + b * y <= r + 1e-9);
            if ok {
                let z = c.0 * x + c.1 * y;
                best = Some(best.map_or(z, |b: f64| b.max(z)));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_matches_enumeration(model in binary_model()) {
        let s = solve(&model, &unlimited()).unwrap();
        match enumerate_binary(&model) {
            None => prop_assert_eq!(s.status, Status::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, Status::Optimal);
                let z = s.objective.unwrap();
                prop_assert!(rel_close(z, best), "solver {} enumeration {}", z, best);
                prop_assert!(model.max_violation(s.values.as_ref().unwrap()) <= FEASIBILITY_TOL);
                prop_assert!(s.gap().unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn round_trip_preserves_optimum(model in binary_model()) {
        let back = read_lp(&write_lp(&model).unwrap()).unwrap();
        let a = solve(&model, &unlimited()).unwrap();
        let b = solve(&back, &unlimited()).unwrap();
        prop_assert_eq!(a.status, b.status);
        if let (Some(x), Some(y)) = (a.objective, b.objective) {
            prop_assert!(rel_close(x, y));
        }
    }

    #[test]
    fn lp_matches_vertex_enumeration(
        rows in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -2.0f64..8.0), 1..6),
        c in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let hi = 4.0;
        let mut m = Model::new(ObjectiveSense::Maximize);
        let x = m.add_continuous("x", 0.0, hi);
        let y = m.add_continuous("y", 0.0, hi);
        m.set_objective(vec![(x, c.0), (y, c.1)]);
        for (k, &(a, b, r)) in rows.iter().enumerate() {
            m.add_constraint(alloc::format!("r{}", k), vec![(x, a), (y, b)], Sense::Le, r);
        }
        let s = solve(&m, &unlimited()).unwrap();
        match enumerate_vertices(&rows, hi, c) {
            None => prop_assert_eq!(s.status, Status::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, Status::Optimal);
                prop_assert!((s.objective.unwrap() - best).abs() <= 1e-6 * best.abs().max(1.0),
                    "solver {:?} vertices {}", s.objective, best);
            }
        }
    }

    #[test]
    fn relaxation_bounds_integer_optimum(model in binary_model()) {
        let relaxed = solve_relaxation(&model).unwrap();
        if let Some(best) = enumerate_binary(&model) {
            let r = relaxed.objective.unwrap();
            match model.objective.sense {
                ObjectiveSense::Maximize => prop_assert!(r >= best - 1e-6),
                ObjectiveSense::Minimize => prop_assert!(r <= best + 1e-6),
            }
        }
    }
}

#[test]
fn warm_start_survives_limits() {
    let mut m = Model::new(ObjectiveSense::Maximize);
    let xs: Vec<VarId> = (0..14).map(|i| m.add_binary(alloc::format!("x{}", i))).collect();
    let w: Vec<f64> = (0..14).map(|i| 3.0 + (i * 7 % 11) as f64).collect();
    m.set_objective(xs.iter().map(|&x| (x, 1.0)).collect());
    m.add_constraint("cap", xs.iter().zip(&w).map(|(&x, &c)| (x, c)).collect(), Sense::Le, 40.5);
    let zero = alloc::vec![0.0; 14];
    let s = solve_from(&m, &Limits { node_limit: Some(1), time_limit: None }, &zero).unwrap();
    assert!(s.objective.is_some());
    let full = solve(&m, &unlimited()).unwrap();
    let seeded = solve_from(&m, &unlimited(), &zero).unwrap();
    assert_eq!(seeded.status, Status::Optimal);
    assert!((seeded.objective.unwrap() - full.objective.unwrap()).abs() < 1e-9);
}

#[test]
fn bad_warm_starts_are_ignored() {
    let mut m = Model::new(ObjectiveSense::Minimize);
    let x = m.add_binary("x");
    m.set_objective(vec![(x, 1.0)]);
    m.add_constraint("c", vec![(x, 1.0)], Sense::Ge, 1.0);
    for start in [&[0.0][..], &[0.5][..], &[][..]] {
        let s = solve_from(&m, &unlimited(), start).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.objective, Some(1.0));
    }
}
