//! Expansion of fragments and connector arcs over the time and battery grids
//! into the battery-time-space network.
//!
//! Nodes are `(location, time index, battery index)` triples. Four arc kinds
//! exist: fragment expansions, plain connector arcs (delivery to pickup,
//! depot legs), idle arcs that advance time by one grid step, and charging
//! arcs that route via a station with the recharge (or swap) time folded
//! into the arrival computation.
//!
//! Arithmetic depends on the discretization mode. With pre-rounded
//! parameters everything lands on the grid exactly. In relaxed mode arrival
//! times are rounded down and battery levels up, so every continuous-feasible
//! route is dominated by some network path and the network optimum is a
//! valid lower bound. Rounding the final SoC of a charging arc up can
//! overstate the charge amount by one battery unit, so the relaxed charge
//! time grants that one unit back; without the grace the time-battery
//! coupling would break the domination argument.

use crate::fragments::{earliest_arrival, Fragment};
use crate::instance::{DiscreteInstance, DiscretizeMode};
use crate::{Battery, Error, Instance, Loc, Time, Variant, EPS};
use std::collections::HashMap;

pub type NodeId = usize;
pub type ArcId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BtsNode {
    pub loc: Loc,
    /// Time grid index.
    pub t: usize,
    /// Battery grid index.
    pub b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ArcKind {
    Fragment,
    NodeArc,
    Idle,
    Charging,
}

#[derive(Debug, Clone)]
pub struct BtsArc {
    pub kind: ArcKind,
    pub from: NodeId,
    pub to: NodeId,
    /// Fragment index for fragment arcs.
    pub frag: Option<usize>,
    /// Station for charging arcs.
    pub station: Option<Loc>,
    pub weighted_cost: f64,
}

/// Physical identity of a connector arc: `(from location, station, to
/// location)`. Fragment arcs are identified by their fragment index instead.
pub type ConnectorKey = (Loc, Option<Loc>, Loc);

#[derive(Debug)]
pub struct BtsNetwork {
    pub variant: Variant,
    pub nodes: Vec<BtsNode>,
    pub arcs: Vec<BtsArc>,
    pub o_plus: Vec<NodeId>,
    pub o_minus: Vec<NodeId>,
    pub fragments: Vec<Fragment>,
    pub out_arcs: Vec<Vec<ArcId>>,
    pub in_arcs: Vec<Vec<ArcId>>,
    /// All expansions of each physical fragment.
    pub frag_expansions: Vec<Vec<ArcId>>,
    /// All expansions of each physical connector.
    pub connector_expansions: HashMap<ConnectorKey, Vec<ArcId>>,
    /// Per pickup location: fragment arcs whose fragment serves it (F_i).
    pub cover: Vec<Vec<ArcId>>,
    /// Seconds spent building (reported as "Net").
    pub build_secs: f64,
}

struct Builder<'a> {
    di: &'a DiscreteInstance,
    inst: &'a Instance,
    variant: Variant,
    exact: bool,
    b_top: usize,
    /// Snapped depot-return battery threshold (value, grid index).
    thr: (Battery, usize),
    node_ids: HashMap<BtsNode, NodeId>,
    nodes: Vec<BtsNode>,
    arcs: Vec<BtsArc>,
    o_plus: Vec<NodeId>,
    o_minus: Vec<NodeId>,
}

/// Depot-return SoC threshold by variant: `gamma * b_max` rounded up when
/// parameters are exact, rounded down in relaxed lower-bound mode (a
/// stricter threshold there could cut true solutions), and the trip minimum
/// `b_min` for battery swap.
fn depot_threshold(di: &DiscreteInstance, variant: Variant) -> (Battery, usize) {
    let bg = &di.battery_grid;
    match variant {
        Variant::BatterySwap => (di.base.b_min, 0),
        Variant::DEadarp => {
            let idx = bg.ceil_idx(di.base.gamma * di.base.b_max).expect("threshold within grid");
            (bg.value(idx), idx)
        }
        Variant::EadarpLb => {
            let idx = bg.floor_idx(di.base.gamma * di.base.b_max).expect("threshold within grid");
            (bg.value(idx), idx)
        }
    }
}

impl<'a> Builder<'a> {
    fn node(&mut self, loc: Loc, t: usize, b: usize) -> NodeId {
        let key = BtsNode { loc, t, b };
        if let Some(&id) = self.node_ids.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(key);
        self.node_ids.insert(key, id);
        id
    }

    /// Feasible time index range of a customer location: `floor(e) ..=
    /// floor(l)`. With exact parameters both ends are on the grid.
    fn time_range(&self, loc: Loc) -> (usize, usize) {
        let (e, l) = self.inst.locations[loc].window;
        let tg = &self.di.time_grid;
        (tg.floor_idx(e).unwrap_or(0), tg.floor_idx(l).unwrap_or(0))
    }

    fn floor_t(&self, x: Time) -> usize {
        self.di.time_grid.floor_idx(x).expect("time below horizon start")
    }

    fn ceil_b(&self, x: Battery) -> usize {
        self.di.battery_grid.ceil_idx(x).expect("battery above capacity")
    }

    fn bval(&self, i: usize) -> Battery {
        self.di.battery_grid.value(i)
    }

    fn tval(&self, i: usize) -> Time {
        self.di.time_grid.value(i)
    }

    fn push(&mut self, arc: BtsArc) {
        self.arcs.push(arc);
    }

    fn add_customer_lattice(&mut self) {
        for loc in self.inst.customers() {
            let (lo, hi) = self.time_range(loc);
            for t in lo..=hi {
                for b in 0..=self.b_top {
                    self.node(loc, t, b);
                }
            }
        }
    }

    fn add_depot_nodes(&mut self) {
        let t0 = 0;
        let t_end = self.di.time_grid.len() - 1;
        for o in self.inst.origin_depots() {
            let id = self.node(o, t0, self.b_top);
            self.o_plus.push(id);
        }
        for e in self.inst.dest_depots() {
            let id = self.node(e, t_end, self.thr.1);
            self.o_minus.push(id);
        }
    }

    fn add_fragment_arcs(&mut self, fragments: &[Fragment]) {
        let inst = self.inst;
        for (fi, f) in fragments.iter().enumerate() {
            let first = f.path[0];
            let last = *f.path.last().unwrap();
            let (lo, hi) = f.depart_window;
            let (nlo, nhi) = self.time_range(first);
            let t_lo = self.di.time_grid.floor_idx(lo).unwrap_or(0).max(nlo);
            let t_hi = match self.di.time_grid.floor_idx(hi) {
                Some(t) => t.min(nhi),
                None => continue,
            };
            for ti in t_lo..=t_hi {
                let dep = self.tval(ti).max(lo);
                debug_assert!(!self.exact || (dep - self.tval(ti)).abs() < EPS);
                let arrive = match earliest_arrival(inst, &f.path, dep) {
                    Some(a) => a,
                    None => continue,
                };
                let t2 = self.floor_t(arrive);
                for bi in 0..=self.b_top {
                    let b = self.bval(bi);
                    if b - f.battery_use < inst.b_min - EPS {
                        continue;
                    }
                    let b2 = self.ceil_b(b - f.battery_use);
                    let from = self.node(first, ti, bi);
                    let to = self.node(last, t2, b2);
                    self.push(BtsArc {
                        kind: ArcKind::Fragment,
                        from,
                        to,
                        frag: Some(fi),
                        station: None,
                        weighted_cost: f.weighted_cost,
                    });
                }
            }
        }
    }

    /// Connector from a concrete node to a pickup or destination depot.
    fn connect(&mut self, from_loc: Loc, from_t: usize, from_b: usize, to_loc: Loc) {
        let inst = self.inst;
        let dep = self.tval(from_t);
        let arrive = dep + inst.travel_time(from_loc, to_loc);
        let b2v = self.bval(from_b) - inst.battery_use(from_loc, to_loc);
        let cost = inst.lambda * inst.travel_cost(from_loc, to_loc);
        if inst.is_pickup(to_loc) {
            let (e, l) = inst.locations[to_loc].window;
            if arrive > l + EPS || b2v < inst.b_min - EPS {
                return;
            }
            let t2 = self.floor_t(arrive.max(e));
            let b2 = self.ceil_b(b2v);
            let from = self.node(from_loc, from_t, from_b);
            let to = self.node(to_loc, t2, b2);
            self.push(BtsArc { kind: ArcKind::NodeArc, from, to, frag: None, station: None, weighted_cost: cost });
        } else {
            // destination depot: arrive by t_max with the return threshold met
            if arrive > inst.t_max + EPS || b2v < self.thr.0 - EPS {
                return;
            }
            let from = self.node(from_loc, from_t, from_b);
            let to = self
                .o_minus
                .iter()
                .copied()
                .find(|&id| self.nodes[id].loc == to_loc)
                .expect("destination node exists");
            self.push(BtsArc { kind: ArcKind::NodeArc, from, to, frag: None, station: None, weighted_cost: cost });
        }
    }

    fn add_node_arcs(&mut self) {
        let inst = self.inst;
        // origin depots to pickups (and, with distinct depots, directly to a
        // destination so unused vehicles can satisfy their flow equality)
        for &onode in self.o_plus.clone().iter() {
            let o = self.nodes[onode].loc;
            for p in inst.pickups() {
                self.connect(o, 0, self.b_top, p);
            }
            if matches!(inst.depot_mode, crate::instance::DepotMode::Distinct { .. }) {
                for e in inst.dest_depots() {
                    self.connect(o, 0, self.b_top, e);
                }
            }
        }
        // deliveries to pickups and to destination depots
        for d in inst.deliveries().collect::<Vec<_>>() {
            let (lo, hi) = self.time_range(d);
            for t in lo..=hi {
                for b in 0..=self.b_top {
                    for p in inst.pickups() {
                        if inst.pickup_of(d) == p {
                            continue;
                        }
                        self.connect(d, t, b, p);
                    }
                    for e in inst.dest_depots() {
                        self.connect(d, t, b, e);
                    }
                }
            }
        }
    }

    fn add_idle_arcs(&mut self) {
        for loc in self.inst.customers().collect::<Vec<_>>() {
            let (lo, hi) = self.time_range(loc);
            for t in lo..hi {
                for b in 0..=self.b_top {
                    let from = self.node(loc, t, b);
                    let to = self.node(loc, t + 1, b);
                    self.push(BtsArc {
                        kind: ArcKind::Idle,
                        from,
                        to,
                        frag: None,
                        station: None,
                        weighted_cost: 0.0,
                    });
                }
            }
        }
    }

    /// Candidate charging arcs from one source node to one target location
    /// via one station. Interior targets enumerate reachable final SoCs;
    /// depot targets charge exactly up to the return threshold.
    fn charging_from(&mut self, i: Loc, ti: usize, bi: usize, i2: Loc, s: Loc, sink: &mut Vec<(ArcId, CandKey)>) {
        let inst = self.inst;
        let b = self.bval(bi);
        let cb_in = inst.battery_use(i, s);
        let cb_out = inst.battery_use(s, i2);
        if b - cb_in < inst.b_min - EPS {
            return;
        }
        let is_dest = inst.is_dest_depot(i2);
        if is_dest && self.variant != Variant::BatterySwap && b - cb_in < self.thr.0 - EPS {
            // the return leg must already respect the depot threshold
            return;
        }
        let dep = self.tval(ti);
        let detour_t = inst.travel_time(i, s) + inst.travel_time(s, i2);
        let cost = inst.lambda * (inst.travel_cost(i, s) + inst.travel_cost(s, i2));
        let unit = self.di.battery_unit;
        let rate = inst.charge_rate();

        let mut emit = |me: &mut Self, b2v: Battery, b2: usize, arrive: Time| {
            let (t2, to) = if is_dest {
                if arrive > inst.t_max + EPS {
                    return;
                }
                let to = me
                    .o_minus
                    .iter()
                    .copied()
                    .find(|&id| me.nodes[id].loc == i2)
                    .expect("destination node");
                (me.nodes[to].t, to)
            } else {
                let (e, l) = inst.locations[i2].window;
                if arrive > l + EPS {
                    return;
                }
                let t2 = me.floor_t(arrive.max(e));
                (t2, me.node(i2, t2, b2))
            };
            let from = me.node(i, ti, bi);
            let id = me.arcs.len();
            me.push(BtsArc {
                kind: ArcKind::Charging,
                from,
                to,
                frag: None,
                station: Some(s),
                weighted_cost: cost,
            });
            let sig = CandKey {
                from,
                to,
                cost_bits: cost.to_bits(),
                profile: [
                    inst.travel_time(i, s).to_bits(),
                    inst.travel_time(s, i2).to_bits(),
                    cb_in.to_bits(),
                    cb_out.to_bits(),
                ],
                station: s,
            };
            let _ = (t2, b2v);
            sink.push((id, sig));
        };

        if self.variant == Variant::BatterySwap {
            // swap restores full capacity at the station; swap time is
            // already folded into station-outgoing travel times
            let b2v = inst.b_max - cb_out;
            if b2v < inst.b_min - EPS {
                return;
            }
            let b2 = self.ceil_b(b2v.min(inst.b_max));
            let arrive = dep + detour_t;
            emit(self, b2v, if is_dest { self.thr.1 } else { b2 }, arrive);
            return;
        }

        // partial recharging
        if is_dest {
            // charge exactly to the snapped threshold; more is dominated
            let b2v = self.thr.0;
            let amount = (b2v - b) + cb_in + cb_out;
            if amount < -EPS {
                return; // no charging needed; the plain connector covers it
            }
            if b2v + cb_out > inst.b_max + if self.exact { EPS } else { unit + EPS } {
                return;
            }
            let graced = if self.exact { b2v - b } else { (b2v - b - unit).max(-(cb_in + cb_out)) };
            let arrive = dep + detour_t + ((graced + cb_in + cb_out).max(0.0)) / rate;
            emit(self, b2v, self.thr.1, arrive);
            return;
        }
        // interior: all grid SoCs with a nonnegative charge amount; the
        // lower end (b' slightly below b) covers partial top-ups that only
        // offset the detour consumption
        let min_b2 = self.ceil_b((b - cb_in - cb_out).max(inst.b_min));
        for b2 in min_b2..=self.b_top {
            let b2v = self.bval(b2);
            let cap = if self.exact {
                inst.b_max + EPS
            } else {
                // ceiling b' may overshoot the true final SoC by < unit
                inst.b_max + unit + EPS
            };
            if b2v + cb_out > cap {
                continue;
            }
            let delta = b2v - b;
            let graced = if self.exact { delta } else { (delta - unit).max(-(cb_in + cb_out)) };
            let arrive = dep + detour_t + ((graced + cb_in + cb_out).max(0.0)) / rate;
            emit(self, b2v, b2, arrive);
        }
    }

    fn add_charging_arcs(&mut self) {
        let inst = self.inst;
        let stations: Vec<Loc> = inst.stations().collect();
        if stations.is_empty() {
            return;
        }
        let mut cands: Vec<(ArcId, CandKey)> = Vec::new();
        let sources: Vec<(Loc, usize, usize)> = {
            let mut v = Vec::new();
            for &onode in &self.o_plus {
                let n = self.nodes[onode];
                v.push((n.loc, n.t, n.b));
            }
            for d in inst.deliveries() {
                let (lo, hi) = self.time_range(d);
                for t in lo..=hi {
                    for b in 0..=self.b_top {
                        v.push((d, t, b));
                    }
                }
            }
            v
        };
        let targets: Vec<Loc> = inst.pickups().chain(inst.dest_depots()).collect();
        for &(i, t, b) in &sources {
            for &i2 in &targets {
                if inst.is_delivery(i) && inst.is_pickup(i2) && inst.pickup_of(i) == i2 {
                    continue;
                }
                if inst.is_origin_depot(i)
                    && self.variant != Variant::BatterySwap
                    && inst.is_pickup(i2)
                {
                    // vehicles start full: with partial recharging no net
                    // gain is possible out of the origin depot
                    continue;
                }
                for &s in &stations {
                    self.charging_from(i, t, b, i2, s, &mut cands);
                }
            }
        }
        self.retain_stations(cands);
    }

    /// Station preselection. With exact parameters the SoC endpoints fully
    /// determine feasibility, so only the cheapest battery-feasible station
    /// per (from, to) node pair is kept. In relaxed and callback modes
    /// stations with distinct time/battery/cost profiles must all survive:
    /// a cheaper one may later fail the continuous-time check where a dearer
    /// one passes.
    fn retain_stations(&mut self, cands: Vec<(ArcId, CandKey)>) {
        let mut keep: HashMap<(NodeId, NodeId, [u64; 5]), (f64, Loc, ArcId)> = HashMap::new();
        for (id, key) in cands {
            let cost = f64::from_bits(key.cost_bits);
            let sig = if self.exact {
                [0u64; 5]
            } else {
                [key.profile[0], key.profile[1], key.profile[2], key.profile[3], key.cost_bits]
            };
            let slot = keep.entry((key.from, key.to, sig)).or_insert((cost, key.station, id));
            if (cost, key.station) < (slot.0, slot.1) {
                *slot = (cost, key.station, id);
            }
        }
        let keep_ids: std::collections::HashSet<ArcId> = keep.values().map(|v| v.2).collect();
        let mut idx = 0;
        self.arcs.retain(|a| {
            let this = idx;
            idx += 1;
            a.kind != ArcKind::Charging || keep_ids.contains(&this)
        });
    }
}

#[derive(Clone)]
struct CandKey {
    from: NodeId,
    to: NodeId,
    cost_bits: u64,
    profile: [u64; 4],
    station: Loc,
}

/// Assemble the full network for the given variant, pruning everything not
/// on some depot-to-depot path.
pub fn build_network(
    di: &DiscreteInstance,
    fragments: &[Fragment],
    variant: Variant,
) -> Result<BtsNetwork, Error> {
    let start = std::time::Instant::now();
    let inst = &di.base;
    let exact = di.mode == DiscretizeMode::DEadarp;
    let b_top = di
        .battery_grid
        .floor_idx(inst.b_max)
        .ok_or_else(|| Error::Param("battery grid does not reach b_max".to_string()))?;
    let thr = depot_threshold(di, variant);
    let mut b = Builder {
        di,
        inst,
        variant,
        exact,
        b_top,
        thr,
        node_ids: HashMap::new(),
        nodes: Vec::new(),
        arcs: Vec::new(),
        o_plus: Vec::new(),
        o_minus: Vec::new(),
    };
    b.add_customer_lattice();
    b.add_depot_nodes();
    b.add_fragment_arcs(fragments);
    b.add_node_arcs();
    b.add_charging_arcs();
    b.add_idle_arcs();

    let net = finish(b, fragments, variant, start)?;
    Ok(net)
}

fn finish(
    b: Builder<'_>,
    fragments: &[Fragment],
    variant: Variant,
    start: std::time::Instant,
) -> Result<BtsNetwork, Error> {
    let n_nodes = b.nodes.len();
    // forward/backward reachability over the raw arc set
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let mut inn: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for (i, a) in b.arcs.iter().enumerate() {
        out[a.from].push(i);
        inn[a.to].push(i);
    }
    let mut fwd = vec![false; n_nodes];
    let mut stack: Vec<NodeId> = b.o_plus.clone();
    for &s in &stack {
        fwd[s] = true;
    }
    while let Some(u) = stack.pop() {
        for &ai in &out[u] {
            let v = b.arcs[ai].to;
            if !fwd[v] {
                fwd[v] = true;
                stack.push(v);
            }
        }
    }
    let mut bwd = vec![false; n_nodes];
    let mut stack: Vec<NodeId> = b.o_minus.clone();
    for &s in &stack {
        bwd[s] = true;
    }
    while let Some(u) = stack.pop() {
        for &ai in &inn[u] {
            let v = b.arcs[ai].from;
            if !bwd[v] {
                bwd[v] = true;
                stack.push(v);
            }
        }
    }
    if !b.o_minus.iter().any(|&m| fwd[m]) {
        return Err(Error::Infeasible("no depot-to-depot path in the network".to_string()));
    }

    let mut kept: Vec<BtsArc> = b
        .arcs
        .into_iter()
        .filter(|a| fwd[a.from] && bwd[a.from] && fwd[a.to] && bwd[a.to])
        .collect();
    // deterministic arc order: by kind, then endpoints, then station
    let node_key = |id: NodeId| {
        let n = b.nodes[id];
        (n.loc, n.t, n.b)
    };
    kept.sort_by(|x, y| {
        (x.kind, node_key(x.from), node_key(x.to), x.station, x.frag)
            .partial_cmp(&(y.kind, node_key(y.from), node_key(y.to), y.station, y.frag))
            .unwrap()
    });

    // compact the node set
    let mut used = vec![false; n_nodes];
    for a in &kept {
        used[a.from] = true;
        used[a.to] = true;
    }
    for &m in b.o_plus.iter().chain(b.o_minus.iter()) {
        used[m] = true;
    }
    let mut order: Vec<NodeId> = (0..n_nodes).filter(|&i| used[i]).collect();
    order.sort_by_key(|&i| node_key(i));
    let mut remap = vec![usize::MAX; n_nodes];
    let nodes: Vec<BtsNode> = order
        .iter()
        .enumerate()
        .map(|(new, &old)| {
            remap[old] = new;
            b.nodes[old]
        })
        .collect();
    for a in kept.iter_mut() {
        a.from = remap[a.from];
        a.to = remap[a.to];
    }
    let o_plus: Vec<NodeId> = b.o_plus.iter().map(|&i| remap[i]).collect();
    let o_minus: Vec<NodeId> = b.o_minus.iter().map(|&i| remap[i]).collect();

    let mut out_arcs: Vec<Vec<ArcId>> = vec![Vec::new(); nodes.len()];
    let mut in_arcs: Vec<Vec<ArcId>> = vec![Vec::new(); nodes.len()];
    let mut frag_expansions: Vec<Vec<ArcId>> = vec![Vec::new(); fragments.len()];
    let mut connector_expansions: HashMap<ConnectorKey, Vec<ArcId>> = HashMap::new();
    let mut cover: Vec<Vec<ArcId>> = vec![Vec::new(); b.inst.n + 1];
    for (i, a) in kept.iter().enumerate() {
        out_arcs[a.from].push(i);
        in_arcs[a.to].push(i);
        match a.kind {
            ArcKind::Fragment => {
                let fi = a.frag.unwrap();
                frag_expansions[fi].push(i);
                for &c in &fragments[fi].customers {
                    cover[c].push(i);
                }
            }
            ArcKind::NodeArc | ArcKind::Charging => {
                let key = (nodes[a.from].loc, a.station, nodes[a.to].loc);
                connector_expansions.entry(key).or_default().push(i);
            }
            ArcKind::Idle => {}
        }
    }

    Ok(BtsNetwork {
        variant,
        nodes,
        arcs: kept,
        o_plus,
        o_minus,
        fragments: fragments.to_vec(),
        out_arcs,
        in_arcs,
        frag_expansions,
        connector_expansions,
        cover,
        build_secs: start.elapsed().as_secs_f64(),
    })
}

impl BtsNetwork {
    pub fn count(&self, kind: ArcKind) -> usize {
        self.arcs.iter().filter(|a| a.kind == kind).count()
    }

    /// Delimited-text export: one arc per line,
    /// `kind from_loc from_t from_b to_loc to_t to_b cost station`.
    pub fn export_text(&self, di: &DiscreteInstance) -> String {
        let mut s = String::from("kind from_loc from_t from_b to_loc to_t to_b cost station\n");
        for a in &self.arcs {
            let f = self.nodes[a.from];
            let t = self.nodes[a.to];
            let kind = match a.kind {
                ArcKind::Fragment => "fragment",
                ArcKind::NodeArc => "node",
                ArcKind::Idle => "idle",
                ArcKind::Charging => "charging",
            };
            s.push_str(&format!(
                "{} {} {} {} {} {} {} {:.6} {}\n",
                kind,
                f.loc,
                di.time_grid.value(f.t),
                di.battery_grid.value(f.b),
                t.loc,
                di.time_grid.value(t.t),
                di.battery_grid.value(t.b),
                a.weighted_cost,
                a.station.map(|x| x.to_string()).unwrap_or_else(|| "-".to_string()),
            ));
        }
        s
    }

    /// Audit the relaxation: every arc's grid arrival must not exceed the
    /// true continuous arrival and its grid battery must not undershoot the
    /// true final SoC. Returns violation descriptions (empty = sound).
    pub fn relaxation_audit(&self, di: &DiscreteInstance) -> Vec<String> {
        let inst = &di.base;
        let mut bad = Vec::new();
        for (i, a) in self.arcs.iter().enumerate() {
            let from = self.nodes[a.from];
            let to = self.nodes[a.to];
            let dep = di.time_grid.value(from.t);
            let b0 = di.battery_grid.value(from.b);
            let (true_arrive, true_b2): (Time, Battery) = match a.kind {
                ArcKind::Idle => continue,
                ArcKind::Fragment => {
                    let f = &self.fragments[a.frag.unwrap()];
                    let dep_eff = dep.max(f.depart_window.0);
                    match earliest_arrival(inst, &f.path, dep_eff) {
                        Some(t) => (t, b0 - f.battery_use),
                        None => {
                            bad.push(format!("arc {}: no continuous schedule at departure", i));
                            continue;
                        }
                    }
                }
                ArcKind::NodeArc => {
                    let arrive = dep + inst.travel_time(from.loc, to.loc);
                    let clamped = if inst.is_pickup(to.loc) {
                        arrive.max(inst.locations[to.loc].window.0)
                    } else {
                        arrive
                    };
                    (clamped, b0 - inst.battery_use(from.loc, to.loc))
                }
                ArcKind::Charging => {
                    let s = a.station.unwrap();
                    let cb_in = inst.battery_use(from.loc, s);
                    let cb_out = inst.battery_use(s, to.loc);
                    let b2 = di.battery_grid.value(to.b);
                    let (amount, final_soc) = if self.variant == Variant::BatterySwap {
                        (0.0, inst.b_max - cb_out)
                    } else {
                        ((b2 - b0) + cb_in + cb_out, b2)
                    };
                    let charge_t = if self.variant == Variant::BatterySwap {
                        0.0
                    } else {
                        amount.max(0.0) / inst.charge_rate()
                    };
                    let arrive =
                        dep + inst.travel_time(from.loc, s) + inst.travel_time(s, to.loc) + charge_t;
                    let clamped = if inst.is_pickup(to.loc) {
                        arrive.max(inst.locations[to.loc].window.0)
                    } else {
                        arrive
                    };
                    (clamped, final_soc)
                }
            };
            let grid_arrive = di.time_grid.value(to.t);
            let grid_b2 = di.battery_grid.value(to.b);
            // destination depot nodes carry the horizon end and the snapped
            // threshold; their values are bounds, not arrivals
            let to_is_dest = inst.is_dest_depot(to.loc);
            if !to_is_dest && grid_arrive > true_arrive + EPS {
                bad.push(format!(
                    "arc {}: grid arrival {:.6} exceeds true arrival {:.6}",
                    i, grid_arrive, true_arrive
                ));
            }
            if !to_is_dest && grid_b2 + EPS < true_b2.min(inst.b_max) {
                bad.push(format!(
                    "arc {}: grid battery {:.6} below true final SoC {:.6}",
                    i, grid_b2, true_b2
                ));
            }
        }
        bad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragments::enumerate_fragments;
    use crate::generate::{generate_instance, GenParams};

    fn pipeline(seed: u64, stations: usize, mode: DiscretizeMode, variant: Variant) -> (DiscreteInstance, BtsNetwork) {
        let inst = generate_instance(&GenParams { n: 2, vehicles: 1, stations, seed, ..GenParams::default() })
            .unwrap()
            .embed_service_times();
        let di = inst.discretize(10.0, 10.0, mode).unwrap();
        let frags = enumerate_fragments(&di.base);
        let net = build_network(&di, &frags, variant).unwrap();
        (di, net)
    }

    #[test]
    fn exact_mode_arithmetic_stays_on_grid() {
        let (di, net) = pipeline(3, 1, DiscretizeMode::DEadarp, Variant::DEadarp);
        assert!(net.relaxation_audit(&di).is_empty());
        for a in &net.arcs {
            if a.kind == ArcKind::Fragment {
                let f = &net.fragments[a.frag.unwrap()];
                let dep = di.time_grid.value(net.nodes[a.from].t);
                let arrive = earliest_arrival(&di.base, &f.path, dep).unwrap();
                assert!(di.time_grid.contains_value(arrive), "off-grid arrival {}", arrive);
            }
        }
    }

    #[test]
    fn relaxed_mode_floor_example() {
        // 23.4 elapsed from t=60 on a 10-minute grid floors to 80
        let g = crate::instance::Grid::covering(0.0, 10.0, 200.0);
        let arrive = 60.0 + 23.4;
        assert_eq!(g.value(g.floor_idx(arrive).unwrap()), 80.0);
    }

    #[test]
    fn relaxed_audit_passes() {
        let (di, net) = pipeline(5, 1, DiscretizeMode::Relaxed, Variant::EadarpLb);
        let bad = net.relaxation_audit(&di);
        assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn idle_arcs_form_time_chains() {
        let (_, net) = pipeline(7, 0, DiscretizeMode::Relaxed, Variant::EadarpLb);
        for a in net.arcs.iter().filter(|a| a.kind == ArcKind::Idle) {
            let f = net.nodes[a.from];
            let t = net.nodes[a.to];
            assert_eq!(f.loc, t.loc);
            assert_eq!(f.b, t.b);
            assert_eq!(f.t + 1, t.t);
        }
    }

    #[test]
    fn exact_mode_has_single_charging_arc_per_node_pair() {
        let (_, net) = pipeline(11, 2, DiscretizeMode::DEadarp, Variant::DEadarp);
        let mut seen = std::collections::HashSet::new();
        for a in net.arcs.iter().filter(|a| a.kind == ArcKind::Charging) {
            assert!(seen.insert((a.from, a.to)), "duplicate charging arc {:?}", (a.from, a.to));
        }
    }

    #[test]
    fn charging_formula_with_equal_rates() {
        // alpha = beta: charge time equals the battery delta plus the
        // detour consumption, in minutes
        let inst = generate_instance(&GenParams { n: 1, vehicles: 1, stations: 1, seed: 2, ..GenParams::default() })
            .unwrap();
        assert!((inst.charge_rate() - 1.0).abs() < EPS);
        // 30 driving-minutes gained plus 10 consumed on the detour -> 40
        let delta: f64 = 30.0;
        let detour_cb = 10.0;
        let charge_time = (delta + detour_cb) / inst.charge_rate();
        assert!((charge_time - 40.0).abs() < EPS);
    }
}
