//! Deterministic pseudo-random instance generation.
//!
//! Same parameters and seed produce a byte-identical native file. Windows
//! are sampled so that every customer admits a direct depot-to-depot trip;
//! when sampling produces an unservable customer the window and ride cap are
//! widened (with a warning) rather than emitting a dead instance.

use crate::instance::{distance_matrix, ArcTable, DepotMode, Instance, Location, LocKind};
use crate::stn::Stn;
use crate::{Error, EPS};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct GenParams {
    pub n: usize,
    pub vehicles: usize,
    pub stations: usize,
    pub seed: u64,
    /// Planning horizon `[0, horizon]` in minutes.
    pub horizon: f64,
    /// Width of each sampled time window.
    pub window_width: f64,
    /// Square side length for coordinates.
    pub area: f64,
    pub capacity: i32,
    pub gamma: f64,
    pub lambda: f64,
    /// Battery capacity in driving-minutes; None picks a generous value from
    /// the sampled geometry.
    pub b_max: Option<f64>,
    /// Charge rate in driving-minutes gained per minute (alpha/beta).
    pub charge_rate: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: 3,
            vehicles: 2,
            stations: 1,
            seed: 1,
            horizon: 480.0,
            window_width: 40.0,
            area: 10.0,
            capacity: 3,
            gamma: 0.1,
            lambda: 0.75,
            b_max: None,
            charge_rate: 1.0,
        }
    }
}

pub fn generate_instance(p: &GenParams) -> Result<Instance, Error> {
    if p.n == 0 || p.vehicles == 0 {
        return Err(Error::Param("n and vehicle count must be positive".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.n;
    let num_locs = 2 * n + 2 + p.stations;
    let mut coord = |rng: &mut ChaCha8Rng| {
        // two decimals keep the native file compact and round-trippable
        (rng.gen_range(0.0..p.area) * 100.0).round() / 100.0
    };

    let mut locations = Vec::with_capacity(num_locs);
    locations.push(Location {
        id: 0,
        kind: LocKind::OriginDepot,
        x: (p.area / 2.0 * 100.0).round() / 100.0,
        y: (p.area / 2.0 * 100.0).round() / 100.0,
        service_time: 0.0,
        load_delta: 0,
        window: (0.0, p.horizon),
        max_ride: None,
    });
    // placeholders; windows filled once distances are known
    for i in 1..=2 * n {
        let kind = if i <= n { LocKind::Pickup } else { LocKind::Delivery };
        locations.push(Location {
            id: i,
            kind,
            x: coord(&mut rng),
            y: coord(&mut rng),
            service_time: rng.gen_range(0..=3) as f64,
            load_delta: if i <= n { 1 } else { -1 },
            window: (0.0, p.horizon),
            max_ride: None,
        });
    }
    locations.push(Location {
        id: 2 * n + 1,
        kind: LocKind::DestDepot,
        x: locations[0].x,
        y: locations[0].y,
        service_time: 0.0,
        load_delta: 0,
        window: (0.0, p.horizon),
        max_ride: None,
    });
    for s in 0..p.stations {
        locations.push(Location {
            id: 2 * n + 2 + s,
            kind: LocKind::Station,
            x: coord(&mut rng),
            y: coord(&mut rng),
            service_time: 0.0,
            load_delta: 0,
            window: (0.0, p.horizon),
            max_ride: None,
        });
    }

    let dist = distance_matrix(&locations);
    let d = |i: usize, j: usize| dist[i * locations.len() + j];

    for c in 1..=n {
        let direct = d(c, c + n);
        let e_p = (rng.gen_range(0.2..0.6) * p.horizon).round();
        let l_p = e_p + p.window_width;
        let e_d = (e_p + direct + rng.gen_range(0.0..10.0)).round();
        let l_d = e_d + p.window_width;
        locations[c].window = (e_p, l_p.min(p.horizon));
        locations[c + n].window = (e_d.min(p.horizon), l_d.min(p.horizon));
        locations[c].max_ride = Some((direct + rng.gen_range(8.0..25.0)).round());
    }

    let b_max = match p.b_max {
        Some(b) => b,
        None => {
            let worst = (1..=n)
                .map(|c| d(0, c) + d(c, c + n) + d(c + n, 2 * n + 1))
                .fold(0.0f64, f64::max);
            ((worst * (n as f64).min(3.0) + 20.0) / 10.0).ceil() * 10.0
        }
    };

    let mut inst = Instance {
        name: format!("gen{}-n{}v{}s{}", p.seed, n, p.vehicles, p.stations),
        n,
        locations,
        arcs: ArcTable::from_distances(&dist, num_locs),
        raw_distance: dist,
        fleet_size: p.vehicles,
        capacity: p.capacity,
        t_min: 0.0,
        t_max: p.horizon,
        b_max,
        b_min: 0.0,
        gamma: p.gamma,
        alpha: p.charge_rate,
        beta: 1.0,
        lambda: p.lambda,
        depot_mode: DepotMode::Common,
        swap_time: 0.0,
        service_embedded: false,
    };
    widen_unservable(&mut inst);
    inst.validated()
}

/// Make the direct trip O+ -> p -> d -> O- schedulable for every customer,
/// widening the late edges and ride cap where sampling was too tight.
fn widen_unservable(inst: &mut Instance) {
    for c in 1..=inst.n {
        let dcn = inst.delivery_of(c);
        for _ in 0..4 {
            if solo_feasible(inst, c) {
                break;
            }
            log::warn!(
                "instance {}: widening windows of customer {} to keep it servable",
                inst.name,
                c
            );
            let (e_p, l_p) = inst.locations[c].window;
            let (e_d, l_d) = inst.locations[dcn].window;
            inst.locations[c].window = (e_p, (l_p + 30.0).min(inst.t_max));
            inst.locations[dcn].window = (e_d, (l_d + 30.0).min(inst.t_max));
            let r = inst.locations[c].max_ride.unwrap();
            inst.locations[c].max_ride = Some(r + 15.0);
        }
    }
}

fn solo_feasible(inst: &Instance, c: usize) -> bool {
    let d = inst.delivery_of(c);
    // visits: pickup 0, delivery 1 (service times not yet embedded, so fold
    // them in explicitly here)
    let mut stn = Stn::new(2);
    let (e_p, l_p) = inst.locations[c].window;
    let (e_d, l_d) = inst.locations[d].window;
    stn.add_lower(0, e_p.max(inst.t_min + inst.travel_time(0, c)));
    stn.add_upper(0, l_p);
    stn.add_lower(1, e_d);
    stn.add_upper(
        1,
        l_d.min(inst.t_max - inst.travel_time(d, 2 * inst.n + 1) - inst.locations[d].service_time),
    );
    let svc_p = inst.locations[c].service_time;
    stn.add_diff_ge(0, 1, inst.travel_time(c, d) + svc_p);
    stn.add_diff_le(0, 1, inst.max_ride(c) + svc_p);
    if !stn.solve() {
        return false;
    }
    // battery for the direct trip, leaving room for the depot threshold
    let use_total = inst.battery_use(0, c) + inst.battery_use(c, d) + inst.battery_use(d, 2 * inst.n + 1);
    inst.b_max - use_total >= inst.gamma * inst.b_max - EPS || inst.stations().count() > 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let p = GenParams { n: 4, vehicles: 2, stations: 1, seed: 42, ..GenParams::default() };
        let a = generate_instance(&p).unwrap().to_native();
        let b = generate_instance(&p).unwrap().to_native();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_differs() {
        let a = generate_instance(&GenParams { seed: 1, ..GenParams::default() })
            .unwrap()
            .to_native();
        let b = generate_instance(&GenParams { seed: 2, ..GenParams::default() })
            .unwrap()
            .to_native();
        assert_ne!(a, b);
    }

    #[test]
    fn customers_stay_servable_under_short_horizon() {
        // tight horizon forces the widening path
        let p = GenParams { n: 3, vehicles: 1, stations: 0, horizon: 60.0, seed: 9, ..GenParams::default() };
        let inst = generate_instance(&p).unwrap();
        for c in 1..=inst.n {
            assert!(solo_feasible(&inst, c), "customer {} unservable", c);
        }
    }
}
