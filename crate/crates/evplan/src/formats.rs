//! Input file readers. Every reader validates fully and reports the file and,
//! where the format has lines, the offending line.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use evplan_core::candgen::ExistingStation;
use evplan_core::equity::{BwmInput, Direction, ZoneFactorTable};
use evplan_core::netcore::{Network, NetworkBuilder, NetworkPoint};
use evplan_core::scenario::{Scenario, ScenarioSet};
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// Invalid user input. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub path: PathBuf,
    pub line: Option<u64>,
    pub message: String,
}

impl InputError {
    pub fn new(path: impl Into<PathBuf>, message: impl fmt::Display) -> Self {
        InputError { path: path.into(), line: None, message: message.to_string() }
    }

    pub fn at(path: impl Into<PathBuf>, line: u64, message: impl fmt::Display) -> Self {
        InputError { path: path.into(), line: Some(line), message: message.to_string() }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.path.display(), l, self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for InputError {}

fn read_text(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError::new(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| InputError::at(path, e.line() as u64, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>, InputError> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| InputError::new(path, e))
}

fn csv_line(e: &csv::Error) -> Option<u64> {
    e.position().map(|p| p.line())
}

fn csv_error(path: &Path, e: csv::Error) -> InputError {
    InputError { path: path.into(), line: csv_line(&e), message: e.to_string() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexRec {
    id: String,
    zone: String,
    x: Option<f64>,
    y: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRec {
    a: String,
    b: String,
    length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowRec {
    i: String,
    j: String,
    f: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    vertices: Vec<VertexRec>,
    edges: Vec<EdgeRec>,
    #[serde(default)]
    flows: Vec<FlowRec>,
}

fn coords(x: Option<f64>, y: Option<f64>) -> Option<(f64, f64)> {
    x.zip(y)
}

/// Reads a network from a JSON file, or from a directory holding
/// `vertices.csv`, `edges.csv` and optionally `flows.csv`.
pub fn read_network(path: &Path) -> Result<Network, InputError> {
    if path.is_dir() {
        return read_network_csv(path);
    }
    let doc: NetworkDoc = read_json(path)?;
    let mut b = NetworkBuilder::new();
    for v in &doc.vertices {
        b.vertex(&v.id, &v.zone, coords(v.x, v.y));
    }
    for e in &doc.edges {
        b.edge(&e.a, &e.b, e.length);
    }
    for f in &doc.flows {
        b.flow(&f.i, &f.j, f.f);
    }
    b.build().map_err(|e| InputError::new(path, e))
}

fn read_network_csv(dir: &Path) -> Result<Network, InputError> {
    let mut b = NetworkBuilder::new();
    // one builder error would lose the line, so the CSV rows are checked
    // against the partial builder as they are read
    let vpath = dir.join("vertices.csv");
    let mut names = std::collections::BTreeSet::new();
    let mut rd = csv_reader(&vpath)?;
    for rec in rd.deserialize::<VertexRec>() {
        let v = rec.map_err(|e| csv_error(&vpath, e))?;
        if !names.insert(v.id.clone()) {
            return Err(InputError::new(&vpath, format!("duplicate vertex `{}`", v.id)));
        }
        b.vertex(&v.id, &v.zone, coords(v.x, v.y));
    }
    let epath = dir.join("edges.csv");
    let mut rd = csv_reader(&epath)?;
    for rec in rd.deserialize::<EdgeRec>() {
        let e = rec.map_err(|e| csv_error(&epath, e))?;
        b.edge(&e.a, &e.b, e.length);
    }
    let fpath = dir.join("flows.csv");
    if fpath.exists() {
        let mut rd = csv_reader(&fpath)?;
        for rec in rd.deserialize::<FlowRec>() {
            let f = rec.map_err(|e| csv_error(&fpath, e))?;
            b.flow(&f.i, &f.j, f.f);
        }
    }
    b.build().map_err(|e| InputError::new(dir, e))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationRec {
    id: String,
    vertex: Option<String>,
    edge: Option<[String; 2]>,
    offset: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationsDoc {
    stations: Vec<StationRec>,
}

pub fn read_stations(path: &Path, network: &Network) -> Result<Vec<ExistingStation>, InputError> {
    let doc: StationsDoc = read_json(path)?;
    let mut seen = std::collections::BTreeSet::new();
    doc.stations
        .into_iter()
        .map(|s| {
            if !seen.insert(s.id.clone()) {
                return Err(InputError::new(path, format!("duplicate station `{}`", s.id)));
            }
            let location = match (&s.vertex, &s.edge, s.offset) {
                (Some(v), None, None) => network
                    .vertex_id(v)
                    .map(NetworkPoint::Vertex)
                    .ok_or_else(|| InputError::new(path, format!("station `{}`: unknown vertex `{v}`", s.id)))?,
                (None, Some([a, b]), Some(off)) => network
                    .point_between(a, b, off)
                    .map_err(|e| InputError::new(path, format!("station `{}`: {e}", s.id)))?,
                _ => {
                    return Err(InputError::new(
                        path,
                        format!("station `{}` needs either `vertex` or both `edge` and `offset`", s.id),
                    ))
                }
            };
            Ok(ExistingStation { id: s.id, location })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DirectionRec {
    NeedIncreasing,
    NeedDecreasing,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorRec {
    name: String,
    direction: DirectionRec,
    #[serde(default)]
    ordinal: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorsDoc {
    factors: Vec<FactorRec>,
}

/// Reads `zone, factor_1, ..., factor_I` rows plus the sidecar declaring
/// factor directions and ordinal label values.
pub fn read_zone_factors(zones: &Path, sidecar: &Path) -> Result<ZoneFactorTable, InputError> {
    let doc: FactorsDoc = read_json(sidecar)?;
    let mut rd = csv_reader(zones)?;
    let headers = rd.headers().map_err(|e| csv_error(zones, e))?.clone();
    let expected: Vec<&str> = std::iter::once("zone").chain(doc.factors.iter().map(|f| f.name.as_str())).collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(InputError::at(zones, 1, format!("header must be `{}`", expected.join(", "))));
    }
    let mut table = ZoneFactorTable {
        zones: Vec::new(),
        factors: doc.factors.iter().map(|f| f.name.clone()).collect(),
        directions: doc
            .factors
            .iter()
            .map(|f| match f.direction {
                DirectionRec::NeedIncreasing => Direction::NeedIncreasing,
                DirectionRec::NeedDecreasing => Direction::NeedDecreasing,
            })
            .collect(),
        values: Vec::new(),
    };
    for rec in rd.records() {
        let rec = rec.map_err(|e| csv_error(zones, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let zone = rec[0].to_string();
        if table.zones.contains(&zone) {
            return Err(InputError::at(zones, line, format!("duplicate zone `{zone}`")));
        }
        let mut row = Vec::with_capacity(doc.factors.len());
        for (f, raw) in doc.factors.iter().zip(rec.iter().skip(1)) {
            let v = match f.ordinal.get(raw) {
                Some(&v) => v,
                None => raw.parse::<f64>().map_err(|_| {
                    InputError::at(zones, line, format!("`{raw}` is neither a number nor a level of `{}`", f.name))
                })?,
            };
            if !v.is_finite() {
                return Err(InputError::at(zones, line, format!("value of `{}` is not finite", f.name)));
            }
            row.push(v);
        }
        table.zones.push(zone);
        table.values.push(row);
    }
    table.validate().map_err(|e| InputError::new(zones, e))?;
    Ok(table)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BwmDoc {
    factors: Vec<String>,
    best: String,
    worst: String,
    best_to_others: Vec<f64>,
    others_to_worst: Vec<f64>,
}

pub fn read_bwm(path: &Path) -> Result<BwmInput, InputError> {
    let doc: BwmDoc = read_json(path)?;
    let find = |name: &str| {
        doc.factors
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| InputError::new(path, format!("`{name}` is not among the factors")))
    };
    let input = BwmInput {
        best: find(&doc.best)?,
        worst: find(&doc.worst)?,
        factors: doc.factors.clone(),
        best_to_others: doc.best_to_others,
        others_to_worst: doc.others_to_worst,
    };
    input.validate().map_err(|e| InputError::new(path, e))?;
    Ok(input)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRec {
    label: String,
    p: f64,
    mult: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    periods: usize,
    seed: u64,
    scenarios: Vec<ScenarioRec>,
    modulation: Option<Vec<f64>>,
}

pub fn read_scenarios(path: &Path) -> Result<ScenarioSet, InputError> {
    let doc: ScenarioDoc = read_json(path)?;
    let set = ScenarioSet {
        periods: doc.periods,
        modulation: doc.modulation.unwrap_or_else(|| vec![1.0; doc.periods]),
        scenarios: doc
            .scenarios
            .into_iter()
            .map(|s| Scenario { label: s.label, probability: s.p, multiplier: (s.mult[0], s.mult[1]) })
            .collect(),
        seed: doc.seed,
    };
    set.validate().map_err(|e| InputError::new(path, e))?;
    Ok(set)
}
