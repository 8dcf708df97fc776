//! Integer-programming layer: model assembly over the battery-time-space
//! network, solve drivers, and the exact battery-swap loop with lazy
//! infeasible-chain cuts.

pub mod backend;
pub mod branch_bound;
pub mod chains;

pub use backend::{Constraint, MilpProblem, Screen, Sense, SolveOptions, SolveStatus};
pub use chains::{extract_chains, Chain};

use crate::btsnet::{ArcId, ArcKind, BtsNetwork};
use crate::fragments;
use crate::instance::DiscreteInstance;
use crate::schedule::{self, RoutePath, ScheduleResult};
use crate::{Error, Time, Variant, EPS};
use std::collections::HashSet;

/// The assembled 0-1 program: one variable per network arc (fragment
/// expansions are the X variables, everything else the Y variables), flow
/// conservation at customer nodes, exact cover per pickup location, and the
/// fleet budget at the origin depot(s).
#[derive(Debug)]
pub struct Model {
    pub problem: MilpProblem,
    pub flow_constraints: usize,
    pub cover_constraints: usize,
    pub fleet_constraints: usize,
}

pub fn assemble_model(net: &BtsNetwork, di: &DiscreteInstance) -> Result<Model, Error> {
    let inst = &di.base;
    let mut problem = MilpProblem {
        objective: net.arcs.iter().map(|a| a.weighted_cost).collect(),
        constraints: Vec::new(),
    };
    let mut flow = 0;
    for (nid, node) in net.nodes.iter().enumerate() {
        if !(inst.is_pickup(node.loc) || inst.is_delivery(node.loc)) {
            continue;
        }
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for &a in &net.in_arcs[nid] {
            terms.push((a, 1.0));
        }
        for &a in &net.out_arcs[nid] {
            terms.push((a, -1.0));
        }
        if terms.is_empty() {
            continue;
        }
        problem.constraints.push(Constraint { terms, sense: Sense::Eq, rhs: 0.0 });
        flow += 1;
    }
    let mut cover = 0;
    for p in inst.pickups() {
        let arcs = &net.cover[p];
        if arcs.is_empty() {
            return Err(Error::Infeasible(format!(
                "pickup location {} is covered by no fragment",
                p
            )));
        }
        problem.constraints.push(Constraint {
            terms: arcs.iter().map(|&a| (a, 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
        cover += 1;
    }
    let mut fleet = 0;
    match &inst.depot_mode {
        crate::instance::DepotMode::Common => {
            let mut terms = Vec::new();
            for &o in &net.o_plus {
                for &a in &net.out_arcs[o] {
                    terms.push((a, 1.0));
                }
            }
            problem.constraints.push(Constraint {
                terms,
                sense: Sense::Le,
                rhs: inst.fleet_size as f64,
            });
            fleet += 1;
        }
        crate::instance::DepotMode::Distinct { .. } => {
            for &o in &net.o_plus {
                problem.constraints.push(Constraint {
                    terms: net.out_arcs[o].iter().map(|&a| (a, 1.0)).collect(),
                    sense: Sense::Eq,
                    rhs: 1.0,
                });
                fleet += 1;
            }
            for &e in &net.o_minus {
                problem.constraints.push(Constraint {
                    terms: net.in_arcs[e].iter().map(|&a| (a, 1.0)).collect(),
                    sense: Sense::Le,
                    rhs: 1.0,
                });
                fleet += 1;
            }
        }
    }
    Ok(Model {
        problem,
        flow_constraints: flow,
        cover_constraints: cover,
        fleet_constraints: fleet,
    })
}

#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub fragment_secs: f64,
    pub net_secs: f64,
    pub cpu_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug)]
pub struct Solution {
    pub variant: Variant,
    pub status: SolveStatus,
    pub selected: Vec<ArcId>,
    pub routes: Vec<RoutePath>,
    pub schedules: Vec<ScheduleResult>,
    pub objective: f64,
    pub lower_bound: f64,
    pub cuts: usize,
    pub nodes_explored: usize,
    pub timings: Timings,
}

impl Solution {
    /// `(OBJ - LB) / OBJ`, 0 for a proven optimum.
    pub fn gap(&self) -> f64 {
        if self.objective.abs() < EPS {
            0.0
        } else {
            ((self.objective - self.lower_bound) / self.objective).max(0.0)
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "variant {}\nstatus {:?}\nobjective {:.6}\nlower_bound {:.6}\ngap {:.6}\ncuts {}\n",
            self.variant, self.status, self.objective, self.lower_bound, self.gap(), self.cuts
        ));
        for (r, (route, sched)) in self.routes.iter().zip(self.schedules.iter()).enumerate() {
            s.push_str(&format!("route {}:", r));
            for (k, &v) in route.locs.iter().enumerate() {
                s.push_str(&format!(" {}@{:.1}/{:.1}", v, sched.times[k], sched.battery[k]));
            }
            s.push('\n');
        }
        s
    }
}

/// Solve an assembled model (no lazy screening) and extract routes.
pub fn solve(
    model: &Model,
    net: &BtsNetwork,
    di: &DiscreteInstance,
    opts: &SolveOptions,
    timings: Timings,
) -> Result<Solution, Error> {
    let backend = backend::create_backend(None)?;
    let mut accept = |_: &[f64], _: f64| Screen::Accept;
    let out = backend.solve(&model.problem, opts, &mut accept)?;
    finish_solution(net, di, out, timings)
}

/// Exact battery-swap solve: every incumbent is screened against the
/// continuous-time constraints; schedule-infeasible routes are cut away and
/// the search continues until an incumbent survives, which is then optimal
/// for the swap variant (up to the battery grid).
pub fn run_bs_exact(
    net: &BtsNetwork,
    di: &DiscreteInstance,
    opts: &SolveOptions,
    timings: Timings,
) -> Result<Solution, Error> {
    let model = assemble_model(net, di)?;
    let inst = &di.base;
    let backend = backend::create_backend(None)?;
    let mut seen_cuts: HashSet<Vec<chains::Elem>> = HashSet::new();
    let opts = SolveOptions { lazy: true, ..opts.clone() };

    let mut screen = |x: &[f64], _obj: f64| -> Screen {
        let mut new_cuts = Vec::new();
        for vp in chains::decompose(net, x) {
            let route = chains::physical_route(net, &vp);
            if route.locs.len() < 3 {
                continue;
            }
            if schedule::feasible_schedule_time_only(&route, inst).is_some() {
                continue;
            }
            let elems = chains::elements(net, &vp);
            let interior = chains::interior_chain(&elems);
            let (key, cut) = match interior {
                Some(ref chain) if !chains::chain_schedulable(net, inst, chain) => {
                    let key: Vec<chains::Elem> = chain
                        .frags
                        .iter()
                        .map(|&f| chains::Elem::Frag(f))
                        .chain(chain.connectors.iter().map(|&c| chains::Elem::Conn(c)))
                        .collect();
                    (key, chains::chain_cut(net, chain))
                }
                _ => (elems.clone(), chains::route_cut(net, &elems)),
            };
            if seen_cuts.insert(key) {
                new_cuts.push(cut);
            }
        }
        if new_cuts.is_empty() {
            Screen::Accept
        } else {
            Screen::Reject(new_cuts)
        }
    };

    let out = backend.solve(&model.problem, &opts, &mut screen)?;
    finish_solution(net, di, out, timings)
}

fn finish_solution(
    net: &BtsNetwork,
    di: &DiscreteInstance,
    out: backend::MilpOutcome,
    mut timings: Timings,
) -> Result<Solution, Error> {
    timings.cpu_secs = out.cpu_secs;
    timings.total_secs = timings.fragment_secs + timings.net_secs + out.cpu_secs;
    match out.status {
        SolveStatus::Infeasible => Err(Error::Infeasible("model has no feasible assignment".to_string())),
        _ => {
            let (x, obj) = out
                .best
                .ok_or_else(|| Error::Backend("time limit reached without an incumbent".to_string()))?;
            let selected: Vec<ArcId> = (0..net.arcs.len()).filter(|&a| x[a] > 0.5).collect();
            let mut routes = Vec::new();
            let mut schedules = Vec::new();
            for vp in chains::decompose(net, &x) {
                let route = chains::physical_route(net, &vp);
                if route.locs.len() < 3 {
                    continue; // depot-to-depot filler of an idle vehicle
                }
                let sched = schedule::min_excess_schedule(&route, &di.base, net.variant)
                    .unwrap_or_else(|| grid_schedule(net, di, &vp));
                routes.push(route);
                schedules.push(sched);
            }
            Ok(Solution {
                variant: net.variant,
                status: out.status,
                selected,
                routes,
                schedules,
                objective: obj,
                lower_bound: out.bound.min(obj),
                cuts: out.cuts_added,
                nodes_explored: out.nodes_explored,
                timings,
            })
        }
    }
}

/// Schedule read off the grid nodes of a vehicle path. Used for reporting in
/// relaxed mode, where routes are bounds and need not admit a continuous
/// schedule.
fn grid_schedule(net: &BtsNetwork, di: &DiscreteInstance, vp: &chains::VehiclePath) -> ScheduleResult {
    let inst = &di.base;
    let mut times: Vec<Time> = Vec::new();
    let mut battery = Vec::new();
    let mut charge = Vec::new();
    if let Some(&first) = vp.arcs.first() {
        let n = net.nodes[net.arcs[first].from];
        times.push(di.time_grid.value(n.t));
        battery.push(di.battery_grid.value(n.b));
        charge.push(0.0);
    }
    for &a in &vp.arcs {
        let arc = &net.arcs[a];
        let from = net.nodes[arc.from];
        let to = net.nodes[arc.to];
        match arc.kind {
            ArcKind::Idle => {
                *times.last_mut().unwrap() = di.time_grid.value(to.t);
            }
            ArcKind::Fragment => {
                let f = &net.fragments[arc.frag.unwrap()];
                let dep = di.time_grid.value(from.t).max(f.depart_window.0);
                let internal =
                    fragments::internal_schedule(inst, &f.path, dep).unwrap_or_else(|| vec![dep; f.path.len()]);
                let mut soc = di.battery_grid.value(from.b);
                for (k, &t) in internal.iter().enumerate().skip(1) {
                    soc -= inst.battery_use(f.path[k - 1], f.path[k]);
                    times.push(t);
                    battery.push(soc);
                    charge.push(0.0);
                }
            }
            ArcKind::NodeArc => {
                times.push(di.time_grid.value(to.t));
                battery.push(di.battery_grid.value(to.b));
                charge.push(0.0);
            }
            ArcKind::Charging => {
                let s = arc.station.unwrap();
                let dep = di.time_grid.value(from.t);
                let soc_in = di.battery_grid.value(from.b) - inst.battery_use(from.loc, s);
                let amount = if net.variant == Variant::BatterySwap {
                    inst.b_max - soc_in
                } else {
                    (di.battery_grid.value(to.b) + inst.battery_use(s, to.loc)) - soc_in
                };
                times.push(dep + inst.travel_time(from.loc, s));
                battery.push(soc_in);
                charge.push(amount.max(0.0));
                times.push(di.time_grid.value(to.t));
                battery.push(di.battery_grid.value(to.b));
                charge.push(0.0);
            }
        }
    }
    let route = chains::physical_route(net, vp);
    let excess = schedule::total_excess(&route, inst, &times);
    ScheduleResult { times, battery, charge, excess_ride_total: excess }
}

impl Model {
    /// Plain-text LP-format export (row/column form) for cross-checking the
    /// model in other solvers.
    pub fn export_lp(&self) -> String {
        let mut s = String::from("Minimize\n obj:");
        for (i, &c) in self.problem.objective.iter().enumerate() {
            if c != 0.0 {
                s.push_str(&format!(" {}{} x{}", if c >= 0.0 { "+" } else { "-" }, c.abs(), i));
            }
        }
        s.push_str("\nSubject To\n");
        for (k, con) in self.problem.constraints.iter().enumerate() {
            s.push_str(&format!(" c{}:", k));
            for &(v, w) in &con.terms {
                s.push_str(&format!(" {}{} x{}", if w >= 0.0 { "+" } else { "-" }, w.abs(), v));
            }
            let op = match con.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            s.push_str(&format!(" {} {}\n", op, con.rhs));
        }
        s.push_str("Binaries\n");
        for i in 0..self.problem.num_vars() {
            s.push_str(&format!(" x{}", i));
            if (i + 1) % 16 == 0 {
                s.push('\n');
            }
        }
        s.push_str("\nEnd\n");
        s
    }
}
