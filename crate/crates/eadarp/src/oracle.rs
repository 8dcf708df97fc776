//! Exhaustive reference solver for tiny instances.
//!
//! Enumerates customer-to-vehicle partitions, every pairing/precedence/
//! capacity-respecting visit order per group, and station insertions at
//! zero-load positions, then prices each candidate route with the
//! excess-minimal schedule. Deliberately has no scalability: it exists to
//! certify the other modules on desk-size cases.

use crate::schedule::{self, RoutePath};
use crate::{Error, Instance, Loc, Variant, EPS};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
pub enum OracleMode {
    Continuous,
    /// Round parameters exactly as the solve pipeline does, then price
    /// schedules continuously over the rounded data.
    Grid { time_unit: f64, battery_unit: f64 },
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub objective: f64,
    pub routes: Vec<RoutePath>,
}

const MAX_N: usize = 5;
const MAX_VEHICLES: usize = 2;
const MAX_STATIONS: usize = 2;
/// Station insertions tried per route; desk-scale instances never need more.
const MAX_INSERTIONS: usize = 2;

/// Global optimum by exhaustive enumeration, `Ok(None)` when the instance is
/// infeasible. Refuses instances beyond its size bounds.
pub fn brute_force_solve(
    inst: &Instance,
    variant: Variant,
    mode: OracleMode,
) -> Result<Option<OracleResult>, Error> {
    if inst.n > MAX_N || inst.fleet_size > MAX_VEHICLES || inst.stations().count() > MAX_STATIONS {
        return Err(Error::Param(format!(
            "oracle bounds exceeded (n <= {}, vehicles <= {}, stations <= {})",
            MAX_N, MAX_VEHICLES, MAX_STATIONS
        )));
    }
    if !matches!(inst.depot_mode, crate::instance::DepotMode::Common) {
        return Err(Error::Param("oracle supports the common depot mode only".to_string()));
    }
    let embedded = inst.embed_service_times();
    let inst = match mode {
        OracleMode::Continuous => embedded,
        OracleMode::Grid { time_unit, battery_unit } => {
            embedded
                .discretize(time_unit, battery_unit, crate::instance::DiscretizeMode::DEadarp)?
                .base
        }
    };

    let customers: Vec<Loc> = inst.pickups().collect();
    let mut group_cache: HashMap<Vec<Loc>, Option<(f64, RoutePath)>> = HashMap::new();
    let mut best: Option<OracleResult> = None;

    // canonical partitions into at most fleet_size unordered groups
    let v = inst.fleet_size.min(MAX_VEHICLES);
    let mut assignment = vec![0usize; customers.len()];
    enumerate_partitions(&mut assignment, 0, 0, v, &mut |assign| {
        let groups_count = assign.iter().copied().max().map(|m| m + 1).unwrap_or(0);
        let mut total = 0.0;
        let mut routes = Vec::new();
        for g in 0..groups_count {
            let group: Vec<Loc> = customers
                .iter()
                .zip(assign.iter())
                .filter(|(_, &a)| a == g)
                .map(|(&c, _)| c)
                .collect();
            let entry = group_cache
                .entry(group.clone())
                .or_insert_with(|| best_route_for_group(&inst, variant, &group));
            match entry {
                Some((cost, route)) => {
                    total += *cost;
                    routes.push(route.clone());
                }
                None => return,
            }
        }
        if best.as_ref().map_or(true, |b| total < b.objective - EPS) {
            best = Some(OracleResult { objective: total, routes });
        }
    });
    Ok(best)
}

fn enumerate_partitions(
    assign: &mut Vec<usize>,
    idx: usize,
    max_used: usize,
    limit: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if idx == assign.len() {
        f(assign);
        return;
    }
    let ceiling = (max_used + 1).min(limit);
    for g in 0..ceiling {
        assign[idx] = g;
        enumerate_partitions(assign, idx + 1, max_used.max(g + 1), limit, f);
    }
}

/// Cheapest feasible route serving exactly this customer group, or None.
fn best_route_for_group(inst: &Instance, variant: Variant, group: &[Loc]) -> Option<(f64, RoutePath)> {
    if group.is_empty() {
        return Some((0.0, RoutePath::new(vec![0, 2 * inst.n + 1])));
    }
    let mut best: Option<(f64, RoutePath)> = None;
    let mut seq: Vec<Loc> = Vec::new();
    order_dfs(inst, group, &mut seq, 0, &mut |order| {
        try_orders_with_stations(inst, variant, order, &mut best);
    });
    best
}

/// All visit orders over the group respecting pairing, precedence and
/// capacity, pruned by greedy earliest arrival against closing windows
/// (a lower bound on any schedule, so the prune is safe).
fn order_dfs(
    inst: &Instance,
    group: &[Loc],
    seq: &mut Vec<Loc>,
    load: i32,
    emit: &mut impl FnMut(&[Loc]),
) {
    if seq.len() == 2 * group.len() {
        emit(seq);
        return;
    }
    let candidates: Vec<Loc> = group
        .iter()
        .copied()
        .filter(|p| !seq.contains(p))
        .chain(
            group
                .iter()
                .map(|&p| inst.delivery_of(p))
                .filter(|d| !seq.contains(d) && seq.contains(&inst.pickup_of(*d))),
        )
        .collect();
    for v in candidates {
        let dl = inst.locations[v].load_delta;
        if load + dl > inst.capacity {
            continue;
        }
        seq.push(v);
        if greedy_reachable(inst, seq) {
            order_dfs(inst, group, seq, load + dl, emit);
        }
        seq.pop();
    }
}

/// Greedy earliest arrivals along the partial sequence (from the depot) must
/// respect every closing time; arrival lower bounds are schedule lower
/// bounds, so failure proves infeasibility.
fn greedy_reachable(inst: &Instance, seq: &[Loc]) -> bool {
    let mut t = inst.t_min + inst.travel_time(0, seq[0]);
    for (k, &v) in seq.iter().enumerate() {
        if k > 0 {
            t += inst.travel_time(seq[k - 1], v);
        }
        let (e, l) = inst.locations[v].window;
        if t > l + EPS {
            return false;
        }
        t = t.max(e);
    }
    true
}

/// Price one visit order: plain first, then with one or two stations spliced
/// into zero-load gaps. Charging detours never lower the weighted cost
/// (waiting is free where a detour would buy time), so the first feasible
/// insertion level wins.
fn try_orders_with_stations(
    inst: &Instance,
    variant: Variant,
    order: &[Loc],
    best: &mut Option<(f64, RoutePath)>,
) {
    let end = 2 * inst.n + 1;
    let mut base = Vec::with_capacity(order.len() + 2);
    base.push(0);
    base.extend_from_slice(order);
    base.push(end);

    if let Some(cost_route) = price(inst, variant, &base) {
        update_best(best, cost_route);
        return;
    }
    // zero-load gap positions in `base` (insert before index k)
    let mut load = 0;
    let mut gaps = Vec::new();
    for (k, &v) in base.iter().enumerate().skip(1) {
        if load == 0 && k > 0 {
            gaps.push(k);
        }
        load += inst.locations[v].load_delta;
    }
    let stations: Vec<Loc> = inst.stations().collect();
    if stations.is_empty() {
        return;
    }
    let mut found = false;
    for &g in &gaps {
        for &s in &stations {
            let mut path = base.clone();
            path.insert(g, s);
            if let Some(cr) = price(inst, variant, &path) {
                update_best(best, cr);
                found = true;
            }
        }
    }
    if found || MAX_INSERTIONS < 2 {
        return;
    }
    for (i, &g1) in gaps.iter().enumerate() {
        for &g2 in gaps.iter().skip(i + 1) {
            for &s1 in &stations {
                for &s2 in &stations {
                    let mut path = base.clone();
                    path.insert(g2, s2);
                    path.insert(g1, s1);
                    if let Some(cr) = price(inst, variant, &path) {
                        update_best(best, cr);
                    }
                }
            }
        }
    }
}

fn price(inst: &Instance, variant: Variant, locs: &[Loc]) -> Option<(f64, RoutePath)> {
    let path = RoutePath::new(locs.to_vec());
    let sched = schedule::min_excess_schedule(&path, inst, variant)?;
    let travel: f64 = locs.windows(2).map(|w| inst.travel_cost(w[0], w[1])).sum();
    Some((inst.lambda * travel + (1.0 - inst.lambda) * sched.excess_ride_total, path))
}

fn update_best(best: &mut Option<(f64, RoutePath)>, cand: (f64, RoutePath)) {
    if best.as_ref().map_or(true, |b| cand.0 < b.0 - EPS) {
        *best = Some(cand);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GenParams};

    #[test]
    fn single_customer_route_formula() {
        let inst = generate_instance(&GenParams { n: 1, vehicles: 1, stations: 0, seed: 4, ..GenParams::default() })
            .unwrap();
        let emb = inst.embed_service_times();
        let res = brute_force_solve(&inst, Variant::DEadarp, OracleMode::Continuous)
            .unwrap()
            .expect("feasible");
        let d = emb.delivery_of(1);
        let expect = emb.lambda
            * (emb.travel_cost(0, 1) + emb.travel_cost(1, d) + emb.travel_cost(d, 2 * emb.n + 1));
        assert!((res.objective - expect).abs() < 1e-6, "{} vs {}", res.objective, expect);
    }

    #[test]
    fn relabeling_symmetry() {
        // swapping the two customers' indices must not change the optimum
        let p = GenParams { n: 2, vehicles: 1, stations: 0, seed: 10, ..GenParams::default() };
        let inst = generate_instance(&p).unwrap();
        let mut swapped = inst.clone();
        swapped.locations.swap(1, 2);
        swapped.locations.swap(3, 4);
        for (i, l) in swapped.locations.iter_mut().enumerate() {
            l.id = i;
        }
        let d = crate::instance::distance_matrix(&swapped.locations);
        swapped.arcs = crate::instance::ArcTable::from_distances(&d, swapped.locations.len());
        swapped.raw_distance = d;
        let a = brute_force_solve(&inst, Variant::DEadarp, OracleMode::Continuous).unwrap();
        let b = brute_force_solve(&swapped, Variant::DEadarp, OracleMode::Continuous).unwrap();
        match (a, b) {
            (Some(x), Some(y)) => assert!((x.objective - y.objective).abs() < 1e-6),
            (None, None) => {}
            other => panic!("asymmetric feasibility {:?}", other.map(|r| r.map(|r| r.objective))),
        }
    }

    #[test]
    fn widening_a_window_never_hurts() {
        let p = GenParams { n: 3, vehicles: 2, stations: 1, seed: 14, ..GenParams::default() };
        let inst = generate_instance(&p).unwrap();
        let base = brute_force_solve(&inst, Variant::DEadarp, OracleMode::Continuous).unwrap();
        let mut wide = inst.clone();
        for c in wide.customers().collect::<Vec<_>>() {
            let (e, _) = wide.locations[c].window;
            wide.locations[c].window = (e, wide.t_max);
        }
        let relaxed = brute_force_solve(&wide, Variant::DEadarp, OracleMode::Continuous).unwrap();
        if let Some(b) = base {
            let r = relaxed.expect("relaxation keeps feasibility");
            assert!(r.objective <= b.objective + 1e-6);
        }
    }

    #[test]
    fn size_bounds_enforced() {
        let p = GenParams { n: 3, vehicles: 3, stations: 0, seed: 1, ..GenParams::default() };
        let inst = generate_instance(&p).unwrap();
        assert!(brute_force_solve(&inst, Variant::DEadarp, OracleMode::Continuous).is_err());
    }

    #[test]
    fn unit_grid_matches_continuous_on_integral_data() {
        let p = GenParams { n: 2, vehicles: 1, stations: 0, seed: 6, ..GenParams::default() };
        let inst = generate_instance(&p).unwrap();
        // make all data integral first
        let snapped = inst
            .embed_service_times()
            .discretize(1.0, 1.0, crate::instance::DiscretizeMode::DEadarp)
            .unwrap()
            .base;
        let cont = brute_force_solve(&snapped, Variant::DEadarp, OracleMode::Continuous).unwrap();
        let grid = brute_force_solve(
            &snapped,
            Variant::DEadarp,
            OracleMode::Grid { time_unit: 1.0, battery_unit: 1.0 },
        )
        .unwrap();
        match (cont, grid) {
            (Some(c), Some(g)) => assert!((c.objective - g.objective).abs() < 1e-6),
            (None, None) => {}
            other => panic!("feasibility mismatch {:?}", other.map(|r| r.map(|r| r.objective))),
        }
    }
}
