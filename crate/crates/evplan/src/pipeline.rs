//! Pipeline configuration and the staged run. Every stage computes in memory;
//! files are written only after all requested stages have succeeded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use evplan_core::candgen::{build_catalog, existing_domain, uncovered_pairs, EndpointCatalog, ExistingStation};
use evplan_core::equity::{equity_profile, solve_bwm, BwmInput, BwmResult, EquityProfile, ZoneFactorTable, BWM_TOL};
use evplan_core::milp::{Limits, Status};
use evplan_core::netcore::{build_distance_table, build_od_pairs, DistanceTable, Network, OdPair, RangeConfig};
use evplan_core::planner::{
    build_stage1, build_stage2, derive_sets, kpi_report, solve_stage1, solve_stage2, FcsPlan, KpiReport, McsSchedule,
    Stage1Config, Stage1Model, Stage2Config, Stage2Input, Stage2Model, StageSets,
};
use evplan_core::scenario::{generate_flows, FlowTensor, ScenarioSet};
use serde::Deserialize;

use crate::formats::{self, InputError};

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSection {
    #[serde(rename = "R", default = "default_range")]
    pub range: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_range() -> f64 {
    10.0
}

fn default_alpha() -> f64 {
    0.5
}

impl Default for RangeSection {
    fn default() -> Self {
        RangeSection { range: default_range(), alpha: default_alpha() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage1Section {
    pub cost: f64,
    pub budget: f64,
}

impl Default for Stage1Section {
    fn default() -> Self {
        Stage1Section { cost: 1.0, budget: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Stage2Section {
    pub benefit: f64,
    pub relocation: f64,
    pub cost: f64,
    pub budget: f64,
    pub fleet: usize,
    pub recharge_link: bool,
    pub reduce: bool,
}

impl Default for Stage2Section {
    fn default() -> Self {
        let d = Stage2Config::default();
        Stage2Section {
            benefit: d.benefit,
            relocation: d.relocation,
            cost: d.cost,
            budget: d.budget,
            fleet: d.fleet,
            recharge_link: d.recharge_link,
            reduce: d.reduce,
        }
    }
}

/// The JSON pipeline configuration. Relative paths resolve against the
/// directory of the configuration file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub network: PathBuf,
    pub stations: Option<PathBuf>,
    pub zones: Option<PathBuf>,
    pub factors: Option<PathBuf>,
    /// BWM input per weighting case, keyed by case label.
    #[serde(default)]
    pub cases: BTreeMap<String, PathBuf>,
    pub scenarios: Option<PathBuf>,
    #[serde(default)]
    pub range: RangeSection,
    #[serde(default)]
    pub stage1: Stage1Section,
    #[serde(default)]
    pub stage2: Stage2Section,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub seed: Option<u64>,
    #[serde(default)]
    pub normalize_probs: bool,
    pub node_limit: Option<u64>,
    pub time_limit_s: Option<f64>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::new(path, e))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| InputError::at(path, e.line() as u64, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.network);
        fix(&mut cfg.out);
        for p in [&mut cfg.stations, &mut cfg.zones, &mut cfg.factors, &mut cfg.scenarios].into_iter().flatten() {
            fix(p);
        }
        for p in cfg.cases.values_mut() {
            fix(p);
        }
        Ok(cfg)
    }

    pub fn limits(&self) -> Limits {
        Limits {
            node_limit: self.node_limit,
            time_limit: self.time_limit_s.filter(|s| *s > 0.0).map(Duration::from_secs_f64),
        }
    }

    pub fn stage1(&self) -> Stage1Config {
        Stage1Config { cost: self.stage1.cost, budget: self.stage1.budget }
    }

    pub fn stage2(&self) -> Stage2Config {
        let s = self.stage2;
        Stage2Config {
            benefit: s.benefit,
            relocation: s.relocation,
            cost: s.cost,
            budget: s.budget,
            fleet: s.fleet,
            recharge_link: s.recharge_link,
            reduce: s.reduce,
        }
    }
}

/// How far a run goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Candidates,
    Weights,
    Plan,
    Schedule,
}

pub struct Inputs {
    pub network: Network,
    pub table: DistanceTable,
    pub range: RangeConfig,
    pub stations: Vec<ExistingStation>,
    pub zones: Option<ZoneFactorTable>,
    pub cases: Vec<(String, BwmInput)>,
    pub scenarios: ScenarioSet,
}

/// Reads and validates every input the requested stages need.
pub fn load_inputs(cfg: &PipelineConfig, upto: Stage) -> Result<Inputs, InputError> {
    cfg.stage1().validate().map_err(|e| InputError::new("config", e))?;
    cfg.stage2().validate().map_err(|e| InputError::new("config", e))?;
    let network = formats::read_network(&cfg.network)?;
    let range = RangeConfig::new(cfg.range.range, cfg.range.alpha).map_err(|e| InputError::new("range", e))?;
    network.check_range(&range).map_err(|e| InputError::new(&cfg.network, e))?;
    let table = build_distance_table(&network).map_err(|e| InputError::new(&cfg.network, e))?;
    let stations = match &cfg.stations {
        Some(p) => formats::read_stations(p, &network)?,
        None => Vec::new(),
    };
    let mut zones = None;
    let mut cases = Vec::new();
    if upto >= Stage::Weights && !cfg.cases.is_empty() {
        let (Some(z), Some(f)) = (&cfg.zones, &cfg.factors) else {
            return Err(InputError::new("config", "weighting cases need both `zones` and `factors`"));
        };
        let t = formats::read_zone_factors(z, f)?;
        for name in network.zone_names() {
            if !t.zones.contains(name) {
                return Err(InputError::new(z, format!("network zone `{name}` has no factor row")));
            }
        }
        evplan_core::equity::normalize_factors(&t).map_err(|e| InputError::new(z, e))?;
        for (label, p) in &cfg.cases {
            let input = formats::read_bwm(p)?;
            if input.factors != t.factors {
                return Err(InputError::new(p, "BWM factors must match the zone table columns"));
            }
            cases.push((label.clone(), input));
        }
        zones = Some(t);
    }
    let mut scenarios = match &cfg.scenarios {
        Some(p) if upto >= Stage::Schedule => formats::read_scenarios(p)?,
        _ => ScenarioSet::standard(4, 0),
    };
    if upto >= Stage::Schedule && cfg.scenarios.is_none() {
        return Err(InputError::new("config", "the schedule stage needs a `scenarios` file"));
    }
    if let Some(seed) = cfg.seed {
        scenarios.seed = seed;
    }
    if cfg.normalize_probs {
        scenarios = scenarios.normalized().map_err(|e| InputError::new("scenarios", e))?;
    }
    Ok(Inputs { network, table, range, stations, zones, cases, scenarios })
}

pub struct Candidates {
    pub all_pairs: Vec<OdPair>,
    pub domain: Vec<OdPair>,
    pub catalog: EndpointCatalog,
}

pub struct CaseWeights {
    pub case: String,
    pub bwm: Option<BwmResult>,
    pub profile: Option<EquityProfile>,
    /// `μ_q` over the catalog pairs.
    pub mu_q: Vec<f64>,
}

pub struct CasePlan {
    pub case: String,
    pub model: Stage1Model,
    pub plan: FcsPlan,
}

pub struct CaseSchedule {
    pub case: String,
    pub sets: StageSets,
    pub model: Stage2Model,
    pub schedule: McsSchedule,
    pub kpi: KpiReport,
}

pub struct Run {
    pub inputs: Inputs,
    pub candidates: Candidates,
    pub weights: Vec<CaseWeights>,
    pub plans: Vec<CasePlan>,
    pub tensor: Option<FlowTensor>,
    pub schedules: Vec<CaseSchedule>,
    pub warnings: Vec<String>,
}

impl Run {
    /// Whether any solve stopped at a node or time limit.
    pub fn limit_reached(&self) -> bool {
        self.plans.iter().any(|p| p.plan.status == Status::LimitReached)
            || self.schedules.iter().any(|s| s.schedule.status == Status::LimitReached)
    }
}

pub fn candidates(inputs: &Inputs) -> Result<Candidates> {
    let all_pairs = build_od_pairs(&inputs.network, &inputs.table, &inputs.range);
    let alpha_r = inputs.range.alpha_r();
    let domain = existing_domain(&inputs.network, &inputs.table, &inputs.stations, &all_pairs, alpha_r);
    let uncovered = uncovered_pairs(&all_pairs, &domain)?;
    let catalog = build_catalog(&inputs.network, &inputs.table, &uncovered, alpha_r);
    Ok(Candidates { all_pairs, domain, catalog })
}

pub fn weights(inputs: &Inputs, cands: &Candidates) -> Result<Vec<CaseWeights>> {
    if inputs.cases.is_empty() {
        return Ok(vec![CaseWeights {
            case: "base".into(),
            bwm: None,
            profile: None,
            mu_q: vec![0.0; cands.catalog.pairs.len()],
        }]);
    }
    let table = inputs.zones.as_ref().expect("zones are loaded with the cases");
    inputs
        .cases
        .iter()
        .map(|(case, input)| {
            let bwm = solve_bwm(input, BWM_TOL).with_context(|| format!("case {case}"))?;
            let profile = equity_profile(&inputs.network, &cands.catalog.pairs, table, &bwm.theta)?;
            Ok(CaseWeights {
                case: case.clone(),
                mu_q: profile.pair_weights.clone(),
                bwm: Some(bwm),
                profile: Some(profile),
            })
        })
        .collect()
}

pub fn run(cfg: &PipelineConfig, upto: Stage) -> Result<Run> {
    let inputs = load_inputs(cfg, upto)?;
    let candidates = candidates(&inputs)?;
    let mut warnings = Vec::new();
    if candidates.all_pairs.is_empty() {
        warnings.push("no O-D pair has positive flow within the round-trip limit; the catalog is empty".to_string());
    }
    let mut out = Run {
        inputs,
        candidates,
        weights: Vec::new(),
        plans: Vec::new(),
        tensor: None,
        schedules: Vec::new(),
        warnings,
    };
    if upto < Stage::Weights {
        return Ok(out);
    }
    out.weights = weights(&out.inputs, &out.candidates)?;
    if upto < Stage::Plan {
        return Ok(out);
    }
    let limits = cfg.limits();
    let s1 = cfg.stage1();
    for w in &out.weights {
        let model = build_stage1(&out.candidates.catalog, &w.mu_q, &s1)?;
        let plan = solve_stage1(&model, &out.candidates.catalog, &s1, &limits)
            .with_context(|| format!("stage 1, case {}", w.case))?;
        out.warnings.extend(plan.warnings.iter().map(|m| format!("case {}: {m}", w.case)));
        out.plans.push(CasePlan { case: w.case.clone(), model, plan });
    }
    if upto < Stage::Schedule {
        return Ok(out);
    }
    let catalog = &out.candidates.catalog;
    let tensor = generate_flows(&catalog.pairs, &out.inputs.scenarios)?;
    let s2 = cfg.stage2();
    for (w, p) in out.weights.iter().zip(&out.plans) {
        let sets = derive_sets(&p.plan, &out.inputs.stations, catalog);
        let input = Stage2Input {
            network: &out.inputs.network,
            table: &out.inputs.table,
            sets: &sets,
            catalog,
            tensor: &tensor,
            scenarios: &out.inputs.scenarios,
            mu_q: &w.mu_q,
        };
        let model = build_stage2(&input, &s2)?;
        let schedule = solve_stage2(&model, &limits).with_context(|| format!("stage 2, case {}", w.case))?;
        out.warnings.extend(schedule.warnings.iter().map(|m| format!("case {}: {m}", w.case)));
        let kpi = kpi_report(&out.inputs.network, &sets, &p.plan, &schedule);
        out.schedules.push(CaseSchedule { case: w.case.clone(), sets, model, schedule, kpi });
    }
    out.tensor = Some(tensor);
    Ok(out)
}
