//! Instance file readers and the native text format.
//!
//! Benchmark format (type a/r, and type u mapped the same way): a header
//! line `|V| n max_route_duration Q max_ride_time`, then one line per node
//! `id x y service load e l` for ids 0..=2n+1. Any rows after 2n+2 are taken
//! as charging-station coordinates. Battery physics and extra stations come
//! from a companion config file; absent that, per-type defaults apply
//! (type a/r: 270 driving-minutes effective capacity, charge = discharge;
//! type u: 50 driving-minutes, asymmetric rates).
//!
//! The native format is line oriented with `[meta]`, `[nodes]`, `[stations]`,
//! `[battery]` and optional `[fleet]` sections, `#` comments, and
//! whitespace-separated values. `to_native` and `parse_native` round-trip.

use super::{distance_matrix, ArcTable, DepotMode, Instance, Location, LocKind};
use crate::{Error, Loc, Variant};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    /// Cordeau-style type-a / type-r benchmark files.
    BenchmarkAR,
    /// Type-u benchmark files (same row layout, different battery defaults).
    BenchmarkU,
    Native,
}

impl InstanceFormat {
    pub fn parse(s: &str) -> Option<InstanceFormat> {
        match s {
            "benchmark-a-r" | "a" | "r" => Some(InstanceFormat::BenchmarkAR),
            "benchmark-u" | "u" => Some(InstanceFormat::BenchmarkU),
            "native" => Some(InstanceFormat::Native),
            _ => None,
        }
    }

    /// Guess from a file name: `a2-16`/`r5-60` style names map to the
    /// benchmark reader, `u…` to the type-u defaults, everything else native.
    pub fn infer(path: &str) -> InstanceFormat {
        let stem = path.rsplit('/').next().unwrap_or(path);
        match stem.chars().next() {
            Some('a') | Some('r') if stem[1..].starts_with(|c: char| c.is_ascii_digit()) => {
                InstanceFormat::BenchmarkAR
            }
            Some('u') if stem[1..].starts_with(|c: char| c.is_ascii_digit()) => {
                InstanceFormat::BenchmarkU
            }
            _ => InstanceFormat::Native,
        }
    }
}

/// Run configuration: discretization units, objective weight, variant and
/// battery overrides, plus optional station coordinates for benchmark files
/// that lack them.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub time_unit: f64,
    pub battery_unit: f64,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub battery_capacity_scale: f64,
    pub variant: Variant,
    pub swap_time: Option<f64>,
    pub b_max: Option<f64>,
    pub b_min: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub horizon: Option<f64>,
    pub stations: Vec<(f64, f64)>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_unit: 10.0,
            battery_unit: 10.0,
            gamma: None,
            lambda: None,
            battery_capacity_scale: 1.0,
            variant: Variant::DEadarp,
            swap_time: None,
            b_max: None,
            b_min: None,
            alpha: None,
            beta: None,
            horizon: None,
            stations: Vec::new(),
        }
    }
}

impl SolveConfig {
    pub fn parse(text: &str) -> Result<SolveConfig, Error> {
        let mut cfg = SolveConfig::default();
        let mut in_stations = false;
        for (ln, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            if line == "[stations]" {
                in_stations = true;
                continue;
            }
            if in_stations {
                let xy = parse_floats(line, ln + 1)?;
                if xy.len() != 2 {
                    return Err(Error::parse(ln + 1, "station line needs `x y`"));
                }
                cfg.stations.push((xy[0], xy[1]));
                continue;
            }
            let mut it = line.split_whitespace();
            let key = it.next().unwrap();
            let val = it
                .next()
                .ok_or_else(|| Error::parse(ln + 1, format!("missing value for `{}`", key)))?;
            let fval = || -> Result<f64, Error> {
                val.parse::<f64>()
                    .map_err(|_| Error::parse(ln + 1, format!("bad number `{}`", val)))
            };
            match key {
                "time_unit" => cfg.time_unit = fval()?,
                "battery_unit" => cfg.battery_unit = fval()?,
                "gamma" => cfg.gamma = Some(fval()?),
                "lambda" => cfg.lambda = Some(fval()?),
                "battery_capacity_scale" => cfg.battery_capacity_scale = fval()?,
                "swap_time" => cfg.swap_time = Some(fval()?),
                "b_max" => cfg.b_max = Some(fval()?),
                "b_min" => cfg.b_min = Some(fval()?),
                "alpha" => cfg.alpha = Some(fval()?),
                "beta" => cfg.beta = Some(fval()?),
                "horizon" => cfg.horizon = Some(fval()?),
                "variant" => {
                    cfg.variant = Variant::parse(val)
                        .ok_or_else(|| Error::parse(ln + 1, format!("unknown variant `{}`", val)))?
                }
                other => return Err(Error::parse(ln + 1, format!("unknown config key `{}`", other))),
            }
        }
        Ok(cfg)
    }

    /// Apply overrides and extra stations to a parsed instance.
    pub fn apply(&self, inst: Instance) -> Result<Instance, Error> {
        let mut inst = if self.stations.is_empty() {
            inst
        } else {
            inst.with_stations(&self.stations)?
        };
        if let Some(g) = self.gamma {
            inst.gamma = g;
        }
        if let Some(l) = self.lambda {
            inst.lambda = l;
        }
        if let Some(b) = self.b_max {
            inst.b_max = b;
        }
        if let Some(b) = self.b_min {
            inst.b_min = b;
        }
        if let Some(a) = self.alpha {
            inst.alpha = a;
        }
        if let Some(b) = self.beta {
            inst.beta = b;
        }
        if let Some(s) = self.swap_time {
            inst.swap_time = s;
        }
        if let Some(h) = self.horizon {
            inst.t_max = h;
        }
        inst.b_max *= self.battery_capacity_scale;
        inst.validated()
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(p) => line[..p].trim(),
        None => line.trim(),
    }
}

fn parse_floats(line: &str, ln: usize) -> Result<Vec<f64>, Error> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(ln, format!("bad number `{}`", t)))
        })
        .collect()
}

/// Parse an instance from text in the declared format. Benchmark formats use
/// per-type battery defaults; pass the result through [`SolveConfig::apply`]
/// to attach stations and overrides.
pub fn parse_instance(text: &str, format: InstanceFormat) -> Result<Instance, Error> {
    match format {
        InstanceFormat::Native => parse_native(text),
        InstanceFormat::BenchmarkAR => parse_benchmark(text, BatteryDefaults::TYPE_AR),
        InstanceFormat::BenchmarkU => parse_benchmark(text, BatteryDefaults::TYPE_U),
    }
}

struct BatteryDefaults {
    b_max: f64,
    alpha: f64,
    beta: f64,
}

impl BatteryDefaults {
    /// §-a/r fleets: 270 driving-minutes of effective capacity, charge and
    /// discharge both 0.055 kWh/min.
    const TYPE_AR: BatteryDefaults = BatteryDefaults { b_max: 270.0, alpha: 0.055, beta: 0.055 };
    /// Type-u fleets: about 50 driving-minutes, 0.055 / 0.0715 kWh/min.
    const TYPE_U: BatteryDefaults = BatteryDefaults { b_max: 50.0, alpha: 0.055, beta: 0.0715 };
}

fn parse_benchmark(text: &str, defaults: BatteryDefaults) -> Result<Instance, Error> {
    let mut rows = Vec::new();
    let mut header: Option<Vec<f64>> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let vals = parse_floats(line, ln + 1)?;
        if header.is_none() {
            if vals.len() < 5 {
                return Err(Error::parse(ln + 1, "header needs `|V| n duration Q max_ride`"));
            }
            header = Some(vals);
        } else {
            if vals.len() != 7 {
                return Err(Error::parse(ln + 1, "node line needs `id x y service load e l`"));
            }
            rows.push((ln + 1, vals));
        }
    }
    let header = header.ok_or_else(|| Error::parse(1, "empty file"))?;
    let fleet = header[0] as usize;
    let n = header[1] as usize;
    let capacity = header[3] as i32;
    let max_ride = header[4];
    if n == 0 {
        return Err(Error::Validation("n = 0".to_string()));
    }
    if rows.len() < 2 * n + 2 {
        return Err(Error::parse(
            rows.last().map(|r| r.0).unwrap_or(1),
            format!("expected {} node rows, found {}", 2 * n + 2, rows.len()),
        ));
    }

    let mut locations = Vec::with_capacity(rows.len());
    for (idx, (ln, v)) in rows.iter().enumerate() {
        let id = v[0] as usize;
        let is_station = idx >= 2 * n + 2;
        if !is_station && id != idx {
            return Err(Error::parse(*ln, format!("node id {} out of order (expected {})", id, idx)));
        }
        let kind = if is_station {
            LocKind::Station
        } else if idx == 0 {
            LocKind::OriginDepot
        } else if idx <= n {
            LocKind::Pickup
        } else if idx <= 2 * n {
            LocKind::Delivery
        } else {
            LocKind::DestDepot
        };
        locations.push(Location {
            id: idx,
            kind,
            x: v[1],
            y: v[2],
            service_time: v[3],
            load_delta: if is_station { 0 } else { v[4] as i32 },
            window: (v[5], v[6]),
            max_ride: if kind == LocKind::Pickup { Some(max_ride) } else { None },
        });
    }
    // The depot row carries the planning horizon in its window.
    let (t_min, t_max) = locations[0].window;
    let dist = distance_matrix(&locations);
    let arcs = ArcTable::from_distances(&dist, locations.len());
    Instance {
        name: String::new(),
        n,
        locations,
        arcs,
        raw_distance: dist,
        fleet_size: fleet,
        capacity,
        t_min,
        t_max: if t_max > t_min { t_max } else { 1440.0 },
        b_max: defaults.b_max,
        b_min: 0.0,
        gamma: 0.1,
        alpha: defaults.alpha,
        beta: defaults.beta,
        lambda: 0.75,
        depot_mode: DepotMode::Common,
        swap_time: 0.0,
        service_embedded: false,
    }
    .validated()
}

fn parse_native(text: &str) -> Result<Instance, Error> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Meta,
        Nodes,
        Stations,
        Battery,
        Fleet,
    }
    let mut section = Section::None;
    let mut name = String::new();
    let mut horizon = (0.0, 1440.0);
    let mut capacity = 0i32;
    let mut vehicles = 0usize;
    let mut lambda = 0.75;
    let mut swap_time = 0.0;
    let mut nodes: Vec<(usize, Vec<f64>, Option<f64>)> = Vec::new();
    let mut stations: Vec<(f64, f64)> = Vec::new();
    let mut battery = (0.0f64, 0.0f64, 0.1f64, 1.0f64, 1.0f64); // b_max b_min gamma alpha beta
    let mut distinct = false;
    let mut fleet_origins: Vec<(f64, f64)> = Vec::new();
    let mut fleet_dests: Vec<(f64, f64)> = Vec::new();

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        match line {
            "[meta]" => {
                section = Section::Meta;
                continue;
            }
            "[nodes]" => {
                section = Section::Nodes;
                continue;
            }
            "[stations]" => {
                section = Section::Stations;
                continue;
            }
            "[battery]" => {
                section = Section::Battery;
                continue;
            }
            "[fleet]" => {
                section = Section::Fleet;
                continue;
            }
            _ => {}
        }
        match section {
            Section::None => return Err(Error::parse(ln, "expected a [section] header")),
            Section::Meta => {
                let mut it = line.split_whitespace();
                let key = it.next().unwrap();
                let rest: Vec<&str> = it.collect();
                match key {
                    "name" => name = rest.join(" "),
                    "horizon" => {
                        if rest.len() != 2 {
                            return Err(Error::parse(ln, "horizon needs `t_min t_max`"));
                        }
                        horizon = (num(rest[0], ln)?, num(rest[1], ln)?);
                    }
                    "capacity" => capacity = num(rest[0], ln)? as i32,
                    "vehicles" => vehicles = num(rest[0], ln)? as usize,
                    "lambda" => lambda = num(rest[0], ln)?,
                    "swap_time" => swap_time = num(rest[0], ln)?,
                    other => return Err(Error::parse(ln, format!("unknown meta key `{}`", other))),
                }
            }
            Section::Nodes => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 8 {
                    return Err(Error::parse(ln, "node line needs `id x y service load e l maxride`"));
                }
                let vals: Vec<f64> = toks[..7]
                    .iter()
                    .map(|t| num(t, ln))
                    .collect::<Result<_, _>>()?;
                let max_ride = if toks[7] == "-" { None } else { Some(num(toks[7], ln)?) };
                nodes.push((vals[0] as usize, vals[1..].to_vec(), max_ride));
            }
            Section::Stations => {
                let xy = parse_floats(line, ln)?;
                if xy.len() != 2 {
                    return Err(Error::parse(ln, "station line needs `x y`"));
                }
                stations.push((xy[0], xy[1]));
            }
            Section::Battery => {
                let mut it = line.split_whitespace();
                let key = it.next().unwrap();
                let val = num(
                    it.next().ok_or_else(|| Error::parse(ln, "missing battery value"))?,
                    ln,
                )?;
                match key {
                    "b_max" => battery.0 = val,
                    "b_min" => battery.1 = val,
                    "gamma" => battery.2 = val,
                    "alpha" => battery.3 = val,
                    "beta" => battery.4 = val,
                    other => return Err(Error::parse(ln, format!("unknown battery key `{}`", other))),
                }
            }
            Section::Fleet => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                match toks[0] {
                    "distinct" => distinct = true,
                    "origin" => fleet_origins.push((num(toks[1], ln)?, num(toks[2], ln)?)),
                    "dest" => fleet_dests.push((num(toks[1], ln)?, num(toks[2], ln)?)),
                    other => return Err(Error::parse(ln, format!("unknown fleet entry `{}`", other))),
                }
            }
        }
    }

    if nodes.len() < 4 || nodes.len() % 2 != 0 {
        return Err(Error::Validation(if nodes.is_empty() {
            "n = 0".to_string()
        } else {
            format!("node section has {} rows, expected 2n+2", nodes.len())
        }));
    }
    let n = (nodes.len() - 2) / 2;
    let mut locations = Vec::with_capacity(nodes.len() + stations.len());
    for (i, (id, v, max_ride)) in nodes.iter().enumerate() {
        if *id != i {
            return Err(Error::Validation(format!("node id {} out of order", id)));
        }
        let kind = if i == 0 {
            LocKind::OriginDepot
        } else if i <= n {
            LocKind::Pickup
        } else if i <= 2 * n {
            LocKind::Delivery
        } else {
            LocKind::DestDepot
        };
        locations.push(Location {
            id: i,
            kind,
            x: v[0],
            y: v[1],
            service_time: v[2],
            load_delta: v[3] as i32,
            window: (v[4], v[5]),
            max_ride: *max_ride,
        });
    }
    for (x, y) in &stations {
        let id = locations.len();
        locations.push(Location {
            id,
            kind: LocKind::Station,
            x: *x,
            y: *y,
            service_time: 0.0,
            load_delta: 0,
            window: horizon,
            max_ride: None,
        });
    }
    let depot_mode = if distinct {
        let mut origins = Vec::new();
        for (x, y) in &fleet_origins {
            let id = locations.len();
            locations.push(Location {
                id,
                kind: LocKind::OriginDepot,
                x: *x,
                y: *y,
                service_time: 0.0,
                load_delta: 0,
                window: horizon,
                max_ride: None,
            });
            origins.push(id);
        }
        let mut destinations = Vec::new();
        for (x, y) in &fleet_dests {
            let id = locations.len();
            locations.push(Location {
                id,
                kind: LocKind::DestDepot,
                x: *x,
                y: *y,
                service_time: 0.0,
                load_delta: 0,
                window: horizon,
                max_ride: None,
            });
            destinations.push(id);
        }
        DepotMode::Distinct { origins, destinations }
    } else {
        DepotMode::Common
    };

    let dist = distance_matrix(&locations);
    let arcs = ArcTable::from_distances(&dist, locations.len());
    Instance {
        name,
        n,
        locations,
        arcs,
        raw_distance: dist,
        fleet_size: vehicles,
        capacity,
        t_min: horizon.0,
        t_max: horizon.1,
        b_max: battery.0,
        b_min: battery.1,
        gamma: battery.2,
        alpha: battery.3,
        beta: battery.4,
        lambda,
        depot_mode,
        swap_time,
        service_embedded: false,
    }
    .validated()
}

fn num(tok: &str, ln: usize) -> Result<f64, Error> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(ln, format!("bad number `{}`", tok)))
}

impl Instance {
    /// Serialize to the native format; `parse_native` reads it back
    /// identically.
    pub fn to_native(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[meta]");
        let _ = writeln!(s, "name {}", self.name);
        let _ = writeln!(s, "horizon {} {}", self.t_min, self.t_max);
        let _ = writeln!(s, "capacity {}", self.capacity);
        let _ = writeln!(s, "vehicles {}", self.fleet_size);
        let _ = writeln!(s, "lambda {}", self.lambda);
        if self.swap_time != 0.0 {
            let _ = writeln!(s, "swap_time {}", self.swap_time);
        }
        let _ = writeln!(s, "\n[nodes]");
        for i in 0..=2 * self.n + 1 {
            let l = &self.locations[i];
            let ride = match l.max_ride {
                Some(r) => format!("{}", r),
                None => "-".to_string(),
            };
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {} {}",
                l.id, l.x, l.y, l.service_time, l.load_delta, l.window.0, l.window.1, ride
            );
        }
        let stations: Vec<_> = self.stations().collect();
        if !stations.is_empty() {
            let _ = writeln!(s, "\n[stations]");
            for st in stations {
                let l = &self.locations[st];
                let _ = writeln!(s, "{} {}", l.x, l.y);
            }
        }
        let _ = writeln!(s, "\n[battery]");
        let _ = writeln!(s, "b_max {}", self.b_max);
        let _ = writeln!(s, "b_min {}", self.b_min);
        let _ = writeln!(s, "gamma {}", self.gamma);
        let _ = writeln!(s, "alpha {}", self.alpha);
        let _ = writeln!(s, "beta {}", self.beta);
        if let DepotMode::Distinct { origins, destinations } = &self.depot_mode {
            let _ = writeln!(s, "\n[fleet]");
            let _ = writeln!(s, "distinct");
            for &o in origins {
                let l = &self.locations[o];
                let _ = writeln!(s, "origin {} {}", l.x, l.y);
            }
            for &d in destinations {
                let l = &self.locations[d];
                let _ = writeln!(s, "dest {} {}", l.x, l.y);
            }
        }
        s
    }

    /// Append charging stations at the given coordinates, recomputing the
    /// arc table. Must run before service embedding.
    pub fn with_stations(&self, coords: &[(f64, f64)]) -> Result<Instance, Error> {
        if self.service_embedded {
            return Err(Error::Param("stations must be added before service embedding".to_string()));
        }
        if let DepotMode::Distinct { .. } = self.depot_mode {
            return Err(Error::Param("stations must be added before distinct depots".to_string()));
        }
        let mut out = self.clone();
        for (x, y) in coords {
            let id = out.locations.len();
            out.locations.push(Location {
                id,
                kind: LocKind::Station,
                x: *x,
                y: *y,
                service_time: 0.0,
                load_delta: 0,
                window: (self.t_min, self.t_max),
                max_ride: None,
            });
        }
        out.raw_distance = distance_matrix(&out.locations);
        out.arcs = ArcTable::from_distances(&out.raw_distance, out.locations.len());
        out.validated()
    }
}

/// Read an instance file, inferring the format from its name.
pub fn load_instance(path: &std::path::Path) -> Result<Instance, Error> {
    let text = std::fs::read_to_string(path)?;
    let fmt = InstanceFormat::infer(&path.to_string_lossy());
    let mut inst = parse_instance(&text, fmt)?;
    if inst.name.is_empty() {
        inst.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(inst)
}

pub use self::load_instance as load;

#[cfg(test)]
mod tests {
    use super::*;

    const TYPE_A_HEADER: &str = "2 2 480 3 30\n\
        0 0.0 0.0 0 0 0 480\n\
        1 1.0 0.0 2 1 60 120\n\
        2 3.0 0.0 2 1 100 200\n\
        3 2.0 0.0 2 -1 60 200\n\
        4 4.0 0.0 2 -1 100 300\n\
        5 5.0 0.0 0 0 0 480\n";

    #[test]
    fn benchmark_header_parsed() {
        let inst = parse_instance(TYPE_A_HEADER, InstanceFormat::BenchmarkAR).unwrap();
        assert_eq!(inst.fleet_size, 2);
        assert_eq!(inst.n, 2);
        assert_eq!(inst.capacity, 3);
        assert_eq!(inst.max_ride(1), 30.0);
        assert_eq!(inst.b_max, 270.0);
        assert_eq!((inst.t_min, inst.t_max), (0.0, 480.0));
    }

    #[test]
    fn benchmark_extra_rows_become_stations() {
        let text = format!("{}6 2.5 1.0 0 0 0 480\n", TYPE_A_HEADER);
        let inst = parse_instance(&text, InstanceFormat::BenchmarkAR).unwrap();
        assert_eq!(inst.stations().count(), 1);
    }

    #[test]
    fn empty_request_section_rejected() {
        let err = parse_instance("2 0 480 3 30\n", InstanceFormat::BenchmarkAR).unwrap_err();
        assert!(err.to_string().contains("n = 0"));
    }

    #[test]
    fn inverted_window_names_location() {
        let bad = TYPE_A_HEADER.replace("2 3.0 0.0 2 1 100 200", "2 3.0 0.0 2 1 300 200");
        let err = parse_instance(&bad, InstanceFormat::BenchmarkAR).unwrap_err();
        assert!(err.to_string().contains("location 2"), "{}", err);
    }

    #[test]
    fn malformed_row_reports_line() {
        let bad = "2 2 480 3 30\n0 0.0 zero 0 0 0 480\n";
        match parse_instance(bad, InstanceFormat::BenchmarkAR) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn config_roundtrip_applies() {
        let cfg = SolveConfig::parse(
            "time_unit 5\nbattery_unit 5\ngamma 0.4\nvariant bs\nswap_time 4\n[stations]\n2.0 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.variant, Variant::BatterySwap);
        let inst = parse_instance(TYPE_A_HEADER, InstanceFormat::BenchmarkAR).unwrap();
        let inst = cfg.apply(inst).unwrap();
        assert_eq!(inst.gamma, 0.4);
        assert_eq!(inst.swap_time, 4.0);
        assert_eq!(inst.stations().count(), 1);
    }
}
