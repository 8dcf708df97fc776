//! Incumbent decomposition into vehicle paths, physical chains, and the
//! infeasible-chain cuts of the lazy callback.
//!
//! A chain is a sequence of fragments joined by connectors, projected down
//! to physical information (locations and stations, no time or battery).
//! When a chain's depot-closed path admits no continuous-time schedule, the
//! cut bounds the number of its expansions a solution may use: `c` fragments
//! plus `c-1` connectors may contribute at most `2c-2` selected arcs, so any
//! route containing the whole chain becomes infeasible while routes reusing
//! parts of it stay legal. Routes whose infeasibility involves a depot-leg
//! charging connector (including single-fragment routes, which Eq-style
//! interior chains cannot reach) get the same cut extended over the full
//! element sequence with right-hand side `len - 1`.

use super::backend::{Constraint, Sense};
use crate::btsnet::{ArcId, ArcKind, BtsNetwork, ConnectorKey};
use crate::schedule::RoutePath;
use crate::stn::Stn;
use crate::{Instance, Loc};

/// Arcs of one vehicle, in travel order from an origin node to a
/// destination node.
#[derive(Debug, Clone)]
pub struct VehiclePath {
    pub arcs: Vec<ArcId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Elem {
    Frag(usize),
    Conn(ConnectorKey),
}

/// A physical chain: fragments plus the connectors between them, `c > 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chain {
    pub frags: Vec<usize>,
    pub connectors: Vec<ConnectorKey>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.frags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frags.is_empty()
    }
}

/// Decompose a 0/1 incumbent into vehicle paths by following flow from the
/// origin nodes. Ambiguities (several selected in/out arcs at one node) are
/// resolved by lowest arc id, which is valid because any pairing of a
/// feasible flow in this acyclic network yields feasible paths.
pub fn decompose(net: &BtsNetwork, x: &[f64]) -> Vec<VehiclePath> {
    let selected = |a: ArcId| x[a] > 0.5;
    let mut used = vec![false; net.arcs.len()];
    let mut paths = Vec::new();
    let dest: std::collections::HashSet<_> = net.o_minus.iter().copied().collect();
    for &start in &net.o_plus {
        loop {
            let first = net.out_arcs[start]
                .iter()
                .copied()
                .find(|&a| selected(a) && !used[a]);
            let Some(mut arc) = first else { break };
            let mut vp = VehiclePath { arcs: Vec::new() };
            loop {
                used[arc] = true;
                vp.arcs.push(arc);
                let node = net.arcs[arc].to;
                if dest.contains(&node) {
                    break;
                }
                match net.out_arcs[node].iter().copied().find(|&a| selected(a) && !used[a]) {
                    Some(next) => arc = next,
                    None => {
                        debug_assert!(false, "flow conservation broken at node {}", node);
                        break;
                    }
                }
            }
            paths.push(vp);
        }
    }
    paths
}

/// Physical element sequence of a vehicle path (idle arcs carry no physical
/// information and are dropped).
pub fn elements(net: &BtsNetwork, vp: &VehiclePath) -> Vec<Elem> {
    vp.arcs
        .iter()
        .filter_map(|&a| {
            let arc = &net.arcs[a];
            match arc.kind {
                ArcKind::Idle => None,
                ArcKind::Fragment => Some(Elem::Frag(arc.frag.unwrap())),
                ArcKind::NodeArc | ArcKind::Charging => Some(Elem::Conn((
                    net.nodes[arc.from].loc,
                    arc.station,
                    net.nodes[arc.to].loc,
                ))),
            }
        })
        .collect()
}

/// Physical location sequence of a vehicle path, stations included.
pub fn physical_route(net: &BtsNetwork, vp: &VehiclePath) -> RoutePath {
    let mut locs: Vec<Loc> = Vec::new();
    if let Some(&first) = vp.arcs.first() {
        locs.push(net.nodes[net.arcs[first].from].loc);
    }
    for &a in &vp.arcs {
        let arc = &net.arcs[a];
        match arc.kind {
            ArcKind::Idle => {}
            ArcKind::Fragment => {
                let f = &net.fragments[arc.frag.unwrap()];
                debug_assert_eq!(*locs.last().unwrap(), f.path[0]);
                locs.extend_from_slice(&f.path[1..]);
            }
            ArcKind::NodeArc => locs.push(net.nodes[arc.to].loc),
            ArcKind::Charging => {
                locs.push(arc.station.unwrap());
                locs.push(net.nodes[arc.to].loc);
            }
        }
    }
    RoutePath::new(locs)
}

/// The maximal interior chain of a vehicle path, if it has more than one
/// fragment.
pub fn interior_chain(elems: &[Elem]) -> Option<Chain> {
    let mut frags = Vec::new();
    let mut connectors = Vec::new();
    for (i, e) in elems.iter().enumerate() {
        match e {
            Elem::Frag(f) => frags.push(*f),
            Elem::Conn(key) => {
                let interior = i > 0
                    && i + 1 < elems.len()
                    && matches!(elems[i - 1], Elem::Frag(_))
                    && matches!(elems[i + 1], Elem::Frag(_));
                if interior {
                    connectors.push(*key);
                }
            }
        }
    }
    if frags.len() > 1 {
        debug_assert_eq!(connectors.len(), frags.len() - 1);
        Some(Chain { frags, connectors })
    } else {
        None
    }
}

/// All maximal chains (fragment count > 1) of an incumbent.
pub fn extract_chains(net: &BtsNetwork, x: &[f64]) -> Vec<Chain> {
    decompose(net, x)
        .iter()
        .filter_map(|vp| interior_chain(&elements(net, vp)))
        .collect()
}

/// Physical location path of a chain closed with direct depot legs. The
/// closure uses the least constraining depots, so infeasibility of this
/// path implies infeasibility in every embedding.
pub fn chain_closed_path(net: &BtsNetwork, chain: &Chain) -> Vec<Loc> {
    let mut locs = Vec::new();
    for (k, &fi) in chain.frags.iter().enumerate() {
        let f = &net.fragments[fi];
        if k > 0 {
            let (_, station, _) = chain.connectors[k - 1];
            if let Some(s) = station {
                locs.push(s);
            }
        }
        locs.extend_from_slice(&f.path);
    }
    locs
}

/// Does the depot-closed chain admit a continuous-time schedule? Checks
/// windows and ride caps only: battery is exact on the swap-variant grid and
/// a direct-closed chain carries no battery state.
pub fn chain_schedulable(net: &BtsNetwork, inst: &Instance, chain: &Chain) -> bool {
    let locs = chain_closed_path(net, chain);
    let reach = inst
        .origin_depots()
        .iter()
        .map(|&o| inst.t_min + inst.travel_time(o, locs[0]))
        .fold(f64::INFINITY, f64::min);
    let back = inst
        .dest_depots()
        .iter()
        .map(|&e| inst.travel_time(*locs.last().unwrap(), e))
        .fold(f64::INFINITY, f64::min);
    let mut stn = Stn::new(locs.len());
    for (k, &v) in locs.iter().enumerate() {
        let (e, l) = if inst.is_pickup(v) || inst.is_delivery(v) {
            inst.locations[v].window
        } else {
            (inst.t_min, inst.t_max)
        };
        stn.add_lower(k, e);
        stn.add_upper(k, l);
        if k + 1 < locs.len() {
            stn.add_diff_ge(k, k + 1, inst.travel_time(v, locs[k + 1]));
        }
    }
    for (a, &v) in locs.iter().enumerate() {
        if inst.is_pickup(v) {
            if let Some(b) = locs.iter().position(|&u| u == inst.delivery_of(v)) {
                stn.add_diff_le(a, b, inst.max_ride(v));
            }
        }
    }
    stn.add_lower(0, reach);
    stn.add_upper(locs.len() - 1, inst.t_max - back);
    stn.solve()
}

/// The infeasible-chain cut: all expansions of the chain's fragments and
/// connectors together may contribute at most `2c - 2`.
pub fn chain_cut(net: &BtsNetwork, chain: &Chain) -> Constraint {
    let mut terms = Vec::new();
    for &fi in &chain.frags {
        for &a in &net.frag_expansions[fi] {
            terms.push((a, 1.0));
        }
    }
    for key in &chain.connectors {
        if let Some(arcs) = net.connector_expansions.get(key) {
            for &a in arcs {
                terms.push((a, 1.0));
            }
        }
    }
    Constraint {
        terms,
        sense: Sense::Le,
        rhs: (2 * chain.len() - 2) as f64,
    }
}

/// Generalized cut over a full element sequence (fragments plus all
/// connectors, depot legs included): at most `len - 1` of the expansions may
/// be selected. Used when the infeasibility needs a depot-leg connector to
/// show, which the interior chain cut cannot express.
pub fn route_cut(net: &BtsNetwork, elems: &[Elem]) -> Constraint {
    let mut terms = Vec::new();
    for e in elems {
        match e {
            Elem::Frag(fi) => {
                for &a in &net.frag_expansions[*fi] {
                    terms.push((a, 1.0));
                }
            }
            Elem::Conn(key) => {
                if let Some(arcs) = net.connector_expansions.get(key) {
                    for &a in arcs {
                        terms.push((a, 1.0));
                    }
                }
            }
        }
    }
    Constraint {
        terms,
        sense: Sense::Le,
        rhs: (elems.len() - 1) as f64,
    }
}
