//! Output artifacts. Money is written as strings with two decimals, flows and
//! distances as strings with six, so files are stable byte for byte.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use evplan_core::milp::{write_lp, Status};
use evplan_core::netcore::{Network, NetworkPoint, OdPair};
use serde_json::{json, Value};

use crate::pipeline::Run;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    fn json(name: impl Into<String>, v: &Value) -> Self {
        let mut contents = serde_json::to_string_pretty(v).expect("values serialize");
        contents.push('\n');
        OutputFile { name: name.into(), contents }
    }
}

pub fn money(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::Infeasible => "infeasible",
        Status::Unbounded => "unbounded",
        Status::LimitReached => "limit_reached",
    }
}

fn location(net: &Network, x: &NetworkPoint) -> Value {
    match *x {
        NetworkPoint::Vertex(v) => json!({ "vertex": net.name(v) }),
        NetworkPoint::OnEdge { edge, offset } => {
            let e = net.edge(edge);
            json!({ "edge": [net.name(e.a), net.name(e.b)], "offset": fixed6(offset) })
        }
    }
}

fn pair(net: &Network, q: &OdPair) -> Value {
    json!([net.name(q.origin), net.name(q.destination)])
}

fn zone_name(net: &Network, x: &NetworkPoint) -> String {
    net.zone_name(net.point_zone(x)).to_string()
}

pub fn catalog_files(run: &Run) -> Vec<OutputFile> {
    let net = &run.inputs.network;
    let cat = &run.candidates.catalog;
    let endpoints: Vec<Value> = cat
        .endpoints
        .iter()
        .map(|ep| {
            json!({
                "id": ep.label(),
                "location": location(net, &ep.location),
                "zone": zone_name(net, &ep.location),
                "covered_pairs": cat.covered_pairs[ep.id],
                "covered_flow": fixed6(cat.covered_flow[ep.id]),
            })
        })
        .collect();
    let matrix: Vec<[usize; 2]> = cat.matrix_entries().map(|(w, q)| [w, q]).collect();
    let pairs: Vec<Value> = cat
        .pairs
        .iter()
        .map(|q| json!({ "i": net.name(q.origin), "j": net.name(q.destination), "flow": fixed6(q.flow) }))
        .collect();
    let catalog = json!({
        "alpha_r": fixed6(run.inputs.range.alpha_r()),
        "pairs": pairs,
        "existing_domain": run.candidates.domain.iter().map(|q| pair(net, q)).collect::<Vec<_>>(),
        "endpoints": endpoints,
        "matrix": matrix,
    });
    let mut per_zone = serde_json::Map::new();
    for z in net.zone_names() {
        per_zone.insert(z.clone(), json!([]));
    }
    for ep in &cat.endpoints {
        if let Some(Value::Array(a)) = per_zone.get_mut(&zone_name(net, &ep.location)) {
            a.push(json!(ep.label()));
        }
    }
    let summary = json!({
        "pairs": run.candidates.all_pairs.len(),
        "covered_by_existing": run.candidates.domain.len(),
        "uncovered": cat.pairs.len(),
        "endpoints": cat.len(),
        "endpoints_per_zone": per_zone,
    });
    vec![OutputFile::json("catalog.json", &catalog), OutputFile::json("candidates_summary.json", &summary)]
}

pub fn weights_files(run: &Run) -> Vec<OutputFile> {
    let net = &run.inputs.network;
    let Some(table) = &run.inputs.zones else {
        return Vec::new();
    };
    run.weights
        .iter()
        .filter_map(|w| {
            let (bwm, profile) = (w.bwm.as_ref()?, w.profile.as_ref()?);
            let mut g = serde_json::Map::new();
            let mut mu = serde_json::Map::new();
            for (z, name) in table.zones.iter().enumerate() {
                g.insert(name.clone(), json!(profile.normalized[z]));
                mu.insert(name.clone(), json!(profile.zone_weights[z]));
            }
            let pairs: Vec<Value> = run
                .candidates
                .catalog
                .pairs
                .iter()
                .zip(&w.mu_q)
                .map(|(q, m)| json!({ "i": net.name(q.origin), "j": net.name(q.destination), "mu": m }))
                .collect();
            let doc = json!({
                "case": w.case,
                "factors": table.factors,
                "theta": bwm.theta,
                "epsilon_star": bwm.epsilon_star,
                "normalized": g,
                "zone_weights": mu,
                "pair_weights": pairs,
            });
            Some(OutputFile::json(format!("weights_{}.json", w.case), &doc))
        })
        .collect()
}

pub fn plan_files(run: &Run) -> Vec<OutputFile> {
    let net = &run.inputs.network;
    let cat = &run.candidates.catalog;
    run.plans
        .iter()
        .map(|p| {
            let selected: Vec<Value> = p
                .plan
                .selected
                .iter()
                .map(|&w| {
                    let ep = &cat.endpoints[w];
                    json!({ "id": ep.label(), "location": location(net, &ep.location), "zone": zone_name(net, &ep.location) })
                })
                .collect();
            let mut per_zone = serde_json::Map::new();
            for z in net.zone_names() {
                per_zone.insert(z.clone(), json!(0));
            }
            for &w in &p.plan.selected {
                let z = zone_name(net, &cat.endpoints[w].location);
                let n = per_zone[&z].as_u64().unwrap_or(0) + 1;
                per_zone.insert(z, json!(n));
            }
            let doc = json!({
                "case": p.case,
                "status": status_name(p.plan.status),
                "objective": fixed6(p.plan.objective),
                "cost": money(p.plan.cost),
                "selected": selected,
                "covered_pairs": p.plan.covered.iter().map(|&q| pair(net, &cat.pairs[q])).collect::<Vec<_>>(),
                "stations_per_zone": per_zone,
                "nodes": p.plan.stats.nodes,
            });
            OutputFile::json(format!("plan_{}.json", p.case), &doc)
        })
        .collect()
}

fn csv_file(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<OutputFile> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let contents = String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?;
    Ok(OutputFile { name: name.into(), contents })
}

pub fn schedule_files(run: &Run) -> Result<Vec<OutputFile>> {
    let net = &run.inputs.network;
    let mut rows = Vec::new();
    for c in &run.schedules {
        for m in 0..c.schedule.fleet {
            for t in 0..c.schedule.periods {
                let a = c.schedule.at(t, m);
                let (point, zone) = match a.point {
                    Some(n) => {
                        let p = &c.sets.points[n];
                        (p.label.clone(), zone_name(net, &p.location))
                    }
                    None => (String::new(), String::new()),
                };
                rows.push(vec![
                    c.case.clone(),
                    format!("m{}", m + 1),
                    (t + 1).to_string(),
                    point,
                    zone,
                    a.mode.as_str().to_string(),
                ]);
            }
        }
    }
    let schedule = csv_file("schedule.csv", &["case", "mcs_id", "period", "point", "zone", "mode"], rows)?;

    let mut kpi_json = serde_json::Map::new();
    let mut kpi_rows = Vec::new();
    for c in &run.schedules {
        let k = &c.kpi;
        let zones =
            |v: &Vec<(String, usize)>| v.iter().map(|(z, n)| (z.clone(), json!(n))).collect::<serde_json::Map<_, _>>();
        let relocations: Vec<Value> = c
            .schedule
            .relocations
            .iter()
            .map(|r| {
                json!({
                    "mcs_id": format!("m{}", r.mcs + 1),
                    "from_period": r.period + 1,
                    "from": c.sets.points[r.from].label,
                    "to": c.sets.points[r.to].label,
                    "miles": fixed6(r.miles),
                    "cost": money(r.cost),
                })
            })
            .collect();
        kpi_json.insert(
            c.case.clone(),
            json!({
                "status": status_name(c.schedule.status),
                "stage1_objective": fixed6(k.stage1_objective),
                "stations": k.stations,
                "objective": money(k.objective),
                "benefit": money(k.benefit),
                "relocation_cost": money(k.relocation_cost),
                "relocation_miles": fixed6(k.relocation_miles),
                "relocations": relocations,
                "activated": k.activated,
                "stations_per_zone": zones(&k.stations_per_zone),
                "deployments_per_zone": zones(&k.deployments_per_zone),
            }),
        );
        kpi_rows.push(vec![
            c.case.clone(),
            status_name(c.schedule.status).to_string(),
            k.stations.to_string(),
            fixed6(k.stage1_objective),
            money(k.objective),
            money(k.benefit),
            money(k.relocation_cost),
            k.activated.to_string(),
            k.relocations.to_string(),
        ]);
    }
    let kpi_csv = csv_file(
        "kpi.csv",
        &[
            "case",
            "status",
            "stations",
            "stage1_objective",
            "objective",
            "benefit",
            "relocation_cost",
            "activated",
            "relocations",
        ],
        kpi_rows,
    )?;

    let mut tensor_rows = Vec::new();
    if let Some(tensor) = &run.tensor {
        let (periods, scenarios, pairs) = tensor.dims();
        for t in 0..periods {
            for s in 0..scenarios {
                for q in 0..pairs {
                    let p = &run.candidates.catalog.pairs[q];
                    tensor_rows.push(vec![
                        (t + 1).to_string(),
                        run.inputs.scenarios.scenarios[s].label.clone(),
                        net.name(p.origin).to_string(),
                        net.name(p.destination).to_string(),
                        fixed6(tensor.get(t, s, q)),
                    ]);
                }
            }
        }
    }
    let tensor = csv_file("tensor.csv", &["t", "s", "i", "j", "flow"], tensor_rows)?;
    Ok(vec![schedule, OutputFile::json("kpi.json", &Value::Object(kpi_json)), kpi_csv, tensor])
}

pub fn lp_files(run: &Run) -> Result<Vec<OutputFile>> {
    let mut out = Vec::new();
    for p in &run.plans {
        out.push(OutputFile { name: format!("stage1_{}.lp", p.case), contents: write_lp(&p.model.model)? });
    }
    for s in &run.schedules {
        out.push(OutputFile { name: format!("stage2_{}.lp", s.case), contents: write_lp(&s.model.model)? });
    }
    Ok(out)
}

pub fn write_all(dir: &Path, files: &[OutputFile]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for f in files {
        let p = dir.join(&f.name);
        fs::write(&p, &f.contents).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}
