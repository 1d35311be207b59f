//! File formats, SVG rendering and the batch pipeline behind the `evplan`
//! command-line tool.

pub mod formats;
pub mod pipeline;
pub mod render;
pub mod report;

use std::path::PathBuf;

use anyhow::Result;

use crate::formats::InputError;
use crate::pipeline::{PipelineConfig, Run, Stage};
use crate::render::{render, Layers, MissingCoordinates};
use crate::report::OutputFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Candidates,
    Weights,
    Plan,
    Schedule,
    Pipeline,
    Render,
    ExportLp,
}

#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub limit_reached: bool,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_LIMIT_REACHED: i32 = 3;

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<InputError>().is_some() || err.downcast_ref::<MissingCoordinates>().is_some() {
        EXIT_INVALID_INPUT
    } else {
        EXIT_FAILURE
    }
}

fn svg_files(run: &Run) -> Result<Vec<OutputFile>, MissingCoordinates> {
    let net = &run.inputs.network;
    let mut out = Vec::new();
    let base = Layers { catalog: Some(&run.candidates.catalog), stations: &run.inputs.stations, ..Layers::default() };
    if run.plans.is_empty() {
        out.push(OutputFile { name: "network.svg".into(), contents: render(net, &base)? });
    }
    for p in &run.plans {
        let layers = Layers { plan: Some(&p.plan), ..base };
        out.push(OutputFile { name: format!("network_{}.svg", p.case), contents: render(net, &layers)? });
    }
    for (c, p) in run.schedules.iter().zip(&run.plans) {
        for t in 0..c.schedule.periods {
            let layers = Layers { plan: Some(&p.plan), schedule: Some((&c.sets, &c.schedule, t)), ..base };
            out.push(OutputFile {
                name: format!("schedule_{}_t{}.svg", c.case, t + 1),
                contents: render(net, &layers)?,
            });
        }
    }
    Ok(out)
}

/// Runs one command. Inputs are validated before anything is computed and
/// files are written only once every stage has succeeded.
pub fn execute(cmd: Command, cfg: &PipelineConfig) -> Result<Outcome> {
    let full = if cfg.scenarios.is_some() { Stage::Schedule } else { Stage::Plan };
    let upto = match cmd {
        Command::Candidates => Stage::Candidates,
        Command::Weights => Stage::Weights,
        Command::Plan => Stage::Plan,
        Command::Schedule => Stage::Schedule,
        Command::Pipeline | Command::Render | Command::ExportLp => full,
    };
    if cmd == Command::Render {
        let net = formats::read_network(&cfg.network)?;
        let missing = net.vertices().find(|(_, v)| v.coords.is_none()).map(|(_, v)| v.name.clone());
        if let Some(name) = missing {
            return Err(MissingCoordinates(name).into());
        }
    }
    let run = pipeline::run(cfg, upto)?;
    let mut files = Vec::new();
    let mut warnings = run.warnings.clone();
    match cmd {
        Command::Render => files.extend(svg_files(&run)?),
        Command::ExportLp => files.extend(report::lp_files(&run)?),
        _ => {
            files.extend(report::catalog_files(&run));
            if upto >= Stage::Weights {
                files.extend(report::weights_files(&run));
            }
            if upto >= Stage::Plan {
                files.extend(report::plan_files(&run));
            }
            if upto >= Stage::Schedule {
                files.extend(report::schedule_files(&run)?);
            }
            if cmd == Command::Pipeline {
                match svg_files(&run) {
                    Ok(svgs) => files.extend(svgs),
                    Err(e) => warnings.push(format!("figures skipped: {e}")),
                }
            }
        }
    }
    report::write_all(&cfg.out, &files)?;
    Ok(Outcome {
        files: files.iter().map(|f| cfg.out.join(&f.name)).collect(),
        warnings,
        limit_reached: run.limit_reached(),
    })
}
