use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{FcsPlan, McsSchedule, Mode, StageSets};
use crate::netcore::Network;

/// One cell of the per-unit, per-period mode table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCell {
    pub point: Option<String>,
    pub zone: Option<String>,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiReport {
    pub stage1_objective: f64,
    pub stations: usize,
    pub objective: f64,
    pub benefit: f64,
    pub relocation_cost: f64,
    pub relocation_miles: f64,
    pub relocations: usize,
    pub activated: usize,
    /// New fixed stations per zone, in zone order.
    pub stations_per_zone: Vec<(String, usize)>,
    /// Serve assignments per zone summed over periods and units.
    pub deployments_per_zone: Vec<(String, usize)>,
    /// `[mcs][period]`.
    pub modes: Vec<Vec<ModeCell>>,
}

pub fn kpi_report(network: &Network, sets: &StageSets, plan: &FcsPlan, schedule: &McsSchedule) -> KpiReport {
    let zones = network.zone_names();
    let zone_of = |n: usize| network.point_zone(&sets.points[n].location).index();
    let u = sets.points.iter().take_while(|p| p.existing).count();

    let mut stations = vec![0usize; zones.len()];
    for &w in &plan.selected {
        stations[zone_of(u + w)] += 1;
    }
    let mut deployments = vec![0usize; zones.len()];
    let mut modes = vec![Vec::with_capacity(schedule.periods); schedule.fleet];
    for a in &schedule.assignments {
        if a.mode == Mode::Serve {
            if let Some(n) = a.point {
                deployments[zone_of(n)] += 1;
            }
        }
        modes[a.mcs].push(ModeCell {
            point: a.point.map(|n| sets.points[n].label.clone()),
            zone: a.point.map(|n| zones[zone_of(n)].clone()),
            mode: a.mode,
        });
    }
    let benefit = schedule.benefit;
    let relocation_cost: f64 = schedule.relocations.iter().map(|r| r.cost).sum();
    let objective = benefit - relocation_cost;
    debug_assert!((objective - schedule.objective).abs() <= 1e-6 * objective.abs().max(1.0));
    let pair = |v: Vec<usize>| zones.iter().cloned().zip(v).collect();
    KpiReport {
        stage1_objective: plan.objective,
        stations: plan.selected.len(),
        objective,
        benefit,
        relocation_cost,
        relocation_miles: schedule.relocations.iter().map(|r| r.miles).sum(),
        relocations: schedule.relocations.len(),
        activated: schedule.activated.iter().filter(|&&a| a).count(),
        stations_per_zone: pair(stations),
        deployments_per_zone: pair(deployments),
        modes,
    }
}
