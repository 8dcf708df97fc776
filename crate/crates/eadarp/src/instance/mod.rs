//! Problem instances: locations, arcs, fleet and battery physics, plus the
//! quantized form used by the grid-expanded network.
//!
//! Location indices follow the usual dial-a-ride layout: `0` is the origin
//! depot, `1..=n` pickups, `n+1..=2n` the matching deliveries, `2n+1` the
//! destination depot, stations after that (and, in distinct-depot mode,
//! per-vehicle depot locations at the end).
//!
//! Battery is tracked in driving-minutes throughout: one unit is the energy
//! consumed by one minute of driving. Energy units (kWh) only appear at
//! parse time. Travel times, costs and battery consumptions all derive from
//! Euclidean coordinates at unit speed; the raw distances are kept alongside
//! the (possibly service-embedded, possibly rounded) arc table so the
//! validator can always reconstruct ground truth.

mod discretize;
mod parse;

pub use discretize::{DiscretizeMode, Grid};
pub use parse::{InstanceFormat, SolveConfig};

use crate::{Battery, Cost, Error, Loc, Time, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocKind {
    OriginDepot,
    Pickup,
    Delivery,
    Station,
    DestDepot,
}

#[derive(Debug, Clone)]
pub struct Location {
    pub id: Loc,
    pub kind: LocKind,
    pub x: f64,
    pub y: f64,
    pub service_time: Time,
    pub load_delta: i32,
    /// `(e_i, l_i)`: earliest and latest begin-of-service.
    pub window: (Time, Time),
    /// Maximum ride time; pickups only.
    pub max_ride: Option<Time>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepotMode {
    /// All vehicles share depot locations 0 and 2n+1.
    Common,
    /// Per-vehicle origin depots (one per vehicle) and a pool of candidate
    /// destination depots, stored as extra location ids.
    Distinct { origins: Vec<Loc>, destinations: Vec<Loc> },
}

/// Dense per-arc data over all location pairs.
#[derive(Debug, Clone)]
pub struct ArcTable {
    n_locs: usize,
    pub time: Vec<Time>,
    pub cost: Vec<Cost>,
    pub battery: Vec<Battery>,
}

impl ArcTable {
    pub fn from_distances(dist: &[f64], n_locs: usize) -> Self {
        ArcTable {
            n_locs,
            time: dist.to_vec(),
            cost: dist.to_vec(),
            battery: dist.to_vec(),
        }
    }

    #[inline]
    fn at(&self, i: Loc, j: Loc) -> usize {
        debug_assert!(i < self.n_locs && j < self.n_locs);
        i * self.n_locs + j
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    /// Customer count.
    pub n: usize,
    pub locations: Vec<Location>,
    pub arcs: ArcTable,
    /// Euclidean distances, kept for the continuous validator and oracle.
    pub raw_distance: Vec<f64>,
    pub fleet_size: usize,
    pub capacity: i32,
    pub t_min: Time,
    pub t_max: Time,
    pub b_max: Battery,
    pub b_min: Battery,
    /// Minimum state-of-charge fraction required back at the depot.
    pub gamma: f64,
    /// Charging rate, kWh per minute.
    pub alpha: f64,
    /// Discharging rate, kWh per minute of driving.
    pub beta: f64,
    /// Objective weight between travel cost and total excess ride time.
    pub lambda: f64,
    pub depot_mode: DepotMode,
    /// Battery-swap dwell; only meaningful for the swap variant.
    pub swap_time: Time,
    /// Set once service times have been folded into outgoing travel times
    /// and maximum ride times.
    pub service_embedded: bool,
}

impl Instance {
    /// Validate all structural invariants, consuming the draft unchanged.
    pub fn validated(self) -> Result<Instance, Error> {
        self.check_invariants()?;
        Ok(self)
    }

    pub fn check_invariants(&self) -> Result<(), Error> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Validation("n = 0".to_string()));
        }
        if self.locations.len() < 2 * n + 2 {
            return Err(Error::Validation(format!(
                "expected at least {} locations, found {}",
                2 * n + 2,
                self.locations.len()
            )));
        }
        for (i, loc) in self.locations.iter().enumerate() {
            if loc.id != i {
                return Err(Error::Validation(format!("location {} has id {}", i, loc.id)));
            }
            let expected = self.kind_of(i);
            if loc.kind != expected {
                return Err(Error::Validation(format!(
                    "location {} has kind {:?}, expected {:?} from its id range",
                    i, loc.kind, expected
                )));
            }
        }
        if self.locations[0].load_delta != 0 || self.locations[2 * n + 1].load_delta != 0 {
            return Err(Error::Validation("depot load change must be zero".to_string()));
        }
        for i in self.pickups() {
            let q = self.locations[i].load_delta;
            if q <= 0 {
                return Err(Error::Validation(format!("pickup {} has load change {} <= 0", i, q)));
            }
            if self.locations[i + n].load_delta != -q {
                return Err(Error::Validation(format!(
                    "delivery {} load change does not mirror pickup {}",
                    i + n,
                    i
                )));
            }
            if q > self.capacity {
                return Err(Error::Validation(format!(
                    "pickup {} demand {} exceeds capacity {}",
                    i, q, self.capacity
                )));
            }
            match self.locations[i].max_ride {
                Some(r) if r > 0.0 => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "pickup {} is missing a positive maximum ride time",
                        i
                    )))
                }
            }
        }
        for s in self.stations() {
            if self.locations[s].load_delta != 0 {
                return Err(Error::Validation(format!("station {} has nonzero load change", s)));
            }
        }
        for i in self.customers() {
            let (e, l) = self.locations[i].window;
            if e > l + EPS {
                return Err(Error::Validation(format!(
                    "location {} has inverted window [{}, {}]",
                    i, e, l
                )));
            }
            if e < self.t_min - EPS || l > self.t_max + EPS {
                return Err(Error::Validation(format!(
                    "location {} window [{}, {}] leaves horizon [{}, {}]",
                    i, e, l, self.t_min, self.t_max
                )));
            }
        }
        for &v in self
            .arcs
            .time
            .iter()
            .chain(self.arcs.cost.iter())
            .chain(self.arcs.battery.iter())
        {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!("arc value {} is negative or not finite", v)));
            }
        }
        if self.fleet_size == 0 {
            return Err(Error::Validation("fleet size is zero".to_string()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Param(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Param(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return Err(Error::Param("charge and discharge rates must be positive".to_string()));
        }
        let thresh = self.gamma * self.b_max;
        if self.b_min > thresh + EPS || thresh > self.b_max + EPS {
            return Err(Error::Validation(format!(
                "battery bounds must satisfy b_min <= gamma*b_max <= b_max, got {} <= {} <= {}",
                self.b_min, thresh, self.b_max
            )));
        }
        if let DepotMode::Distinct { origins, destinations } = &self.depot_mode {
            if origins.len() != self.fleet_size {
                return Err(Error::Validation(format!(
                    "distinct depot mode needs one origin per vehicle, got {} for fleet {}",
                    origins.len(),
                    self.fleet_size
                )));
            }
            if destinations.is_empty() {
                return Err(Error::Validation("distinct depot mode needs destinations".to_string()));
            }
        }
        Ok(())
    }

    fn kind_of(&self, i: Loc) -> LocKind {
        let n = self.n;
        if i == 0 {
            LocKind::OriginDepot
        } else if i <= n {
            LocKind::Pickup
        } else if i <= 2 * n {
            LocKind::Delivery
        } else if i == 2 * n + 1 {
            LocKind::DestDepot
        } else {
            // Stations first, then any distinct-depot extras.
            self.locations.get(i).map(|l| l.kind).unwrap_or(LocKind::Station)
        }
    }

    pub fn num_locs(&self) -> usize {
        self.locations.len()
    }

    pub fn pickups(&self) -> std::ops::RangeInclusive<Loc> {
        1..=self.n
    }

    pub fn deliveries(&self) -> std::ops::RangeInclusive<Loc> {
        self.n + 1..=2 * self.n
    }

    pub fn customers(&self) -> std::ops::RangeInclusive<Loc> {
        1..=2 * self.n
    }

    pub fn stations(&self) -> impl Iterator<Item = Loc> + '_ {
        self.locations
            .iter()
            .filter(|l| l.kind == LocKind::Station)
            .map(|l| l.id)
    }

    pub fn is_pickup(&self, i: Loc) -> bool {
        (1..=self.n).contains(&i)
    }

    pub fn is_delivery(&self, i: Loc) -> bool {
        (self.n + 1..=2 * self.n).contains(&i)
    }

    pub fn is_station(&self, i: Loc) -> bool {
        self.locations[i].kind == LocKind::Station
    }

    pub fn is_depot(&self, i: Loc) -> bool {
        matches!(self.locations[i].kind, LocKind::OriginDepot | LocKind::DestDepot)
    }

    pub fn delivery_of(&self, p: Loc) -> Loc {
        debug_assert!(self.is_pickup(p));
        p + self.n
    }

    pub fn pickup_of(&self, d: Loc) -> Loc {
        debug_assert!(self.is_delivery(d));
        d - self.n
    }

    pub fn travel_time(&self, i: Loc, j: Loc) -> Time {
        self.arcs.time[self.arcs.at(i, j)]
    }

    pub fn travel_cost(&self, i: Loc, j: Loc) -> Cost {
        self.arcs.cost[self.arcs.at(i, j)]
    }

    pub fn battery_use(&self, i: Loc, j: Loc) -> Battery {
        self.arcs.battery[self.arcs.at(i, j)]
    }

    /// Driving-minutes of charge gained per minute spent charging.
    pub fn charge_rate(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Origin depot locations (one entry in common mode).
    pub fn origin_depots(&self) -> Vec<Loc> {
        match &self.depot_mode {
            DepotMode::Common => vec![0],
            DepotMode::Distinct { origins, .. } => origins.clone(),
        }
    }

    /// Destination depot locations (one entry in common mode).
    pub fn dest_depots(&self) -> Vec<Loc> {
        match &self.depot_mode {
            DepotMode::Common => vec![2 * self.n + 1],
            DepotMode::Distinct { destinations, .. } => destinations.clone(),
        }
    }

    pub fn is_origin_depot(&self, i: Loc) -> bool {
        self.locations[i].kind == LocKind::OriginDepot
    }

    pub fn is_dest_depot(&self, i: Loc) -> bool {
        self.locations[i].kind == LocKind::DestDepot
    }

    /// Maximum ride time of customer `c` (pickup id), including the pickup's
    /// service time once embedded.
    pub fn max_ride(&self, c: Loc) -> Time {
        self.locations[c].max_ride.expect("pickup max ride")
    }

    /// Fold service times into outgoing travel times and maximum ride times.
    ///
    /// Travel cost and battery consumption stay untouched: they derive from
    /// distance, not elapsed time. Original service fields are retained so
    /// the validator can undo the embedding. Calling this on an already
    /// embedded instance returns it unchanged.
    pub fn embed_service_times(&self) -> Instance {
        if self.service_embedded {
            return self.clone();
        }
        let mut out = self.clone();
        let m = self.num_locs();
        for i in 0..m {
            let s = self.locations[i].service_time;
            if s == 0.0 {
                continue;
            }
            for j in 0..m {
                if i != j {
                    out.arcs.time[i * m + j] += s;
                }
            }
        }
        for p in 1..=self.n {
            let s = self.locations[p].service_time;
            if let Some(r) = out.locations[p].max_ride.as_mut() {
                *r += s;
            }
        }
        out.service_embedded = true;
        out
    }

    /// Direct (embedded) travel time from pickup to delivery, the baseline
    /// against which excess ride time is measured.
    pub fn direct_ride(&self, c: Loc) -> Time {
        self.travel_time(c, self.delivery_of(c))
    }

    /// Battery-swap preprocessing: add the fixed swap duration to every
    /// station-outgoing travel time so schedules need no separate dwell term.
    pub fn fold_swap_time(&self) -> Instance {
        let mut out = self.clone();
        if self.swap_time == 0.0 {
            return out;
        }
        let m = self.num_locs();
        for s in self.stations().collect::<Vec<_>>() {
            for j in 0..m {
                if s != j {
                    out.arcs.time[s * m + j] += self.swap_time;
                }
            }
        }
        out
    }
}

/// Euclidean distance matrix from location coordinates.
pub fn distance_matrix(locations: &[Location]) -> Vec<f64> {
    let m = locations.len();
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let dx = locations[i].x - locations[j].x;
                let dy = locations[i].y - locations[j].y;
                d[i * m + j] = (dx * dx + dy * dy).sqrt();
            }
        }
    }
    d
}

/// An instance quantized onto time and battery grids.
#[derive(Debug, Clone)]
pub struct DiscreteInstance {
    /// Parameters are rounded in `DEadarp` mode and left continuous in
    /// `Relaxed` mode (rounding then happens per expanded arc).
    pub base: Instance,
    pub time_grid: Grid,
    pub battery_grid: Grid,
    pub time_unit: Time,
    pub battery_unit: Battery,
    pub mode: DiscretizeMode,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GenParams};

    fn tiny() -> Instance {
        generate_instance(&GenParams { n: 2, vehicles: 1, stations: 1, seed: 7, ..GenParams::default() })
            .unwrap()
    }

    #[test]
    fn embed_is_identity_without_service() {
        let mut inst = tiny();
        for l in inst.locations.iter_mut() {
            l.service_time = 0.0;
        }
        let emb = inst.embed_service_times();
        assert_eq!(inst.arcs.time, emb.arcs.time);
        assert_eq!(
            inst.locations[1].max_ride.unwrap(),
            emb.locations[1].max_ride.unwrap()
        );
    }

    #[test]
    fn embed_adds_service_to_outgoing_and_ride() {
        let mut inst = tiny();
        inst.locations[1].service_time = 3.0;
        let before = inst.travel_time(1, inst.delivery_of(1));
        let ride_before = inst.max_ride(1);
        let emb = inst.embed_service_times();
        assert!((emb.travel_time(1, inst.delivery_of(1)) - (before + 3.0)).abs() < EPS);
        assert!((emb.max_ride(1) - (ride_before + 3.0)).abs() < EPS);
        // cost and battery untouched
        assert_eq!(inst.arcs.cost, emb.arcs.cost);
        assert_eq!(inst.arcs.battery, emb.arcs.battery);
        // idempotent
        let twice = emb.embed_service_times();
        assert_eq!(emb.arcs.time, twice.arcs.time);
    }

    #[test]
    fn inverted_window_rejected() {
        let mut inst = tiny();
        inst.locations[2].window = (50.0, 40.0);
        let err = inst.check_invariants().unwrap_err();
        assert!(err.to_string().contains("location 2"), "{}", err);
    }

    #[test]
    fn battery_bounds_checked() {
        let mut inst = tiny();
        inst.b_min = inst.b_max; // gamma*b_max < b_min now
        inst.gamma = 0.1;
        assert!(inst.check_invariants().is_err());
    }
}
