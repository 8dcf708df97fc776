//! Quantization of instance parameters onto time and battery grids.
//!
//! Two rounding regimes exist. `DEadarp` produces a self-contained discrete
//! instance: arc times and consumptions and window bounds are rounded to the
//! nearest unit multiple, maximum ride times are rounded up (keeping every
//! originally feasible ride feasible). `Relaxed` leaves parameters
//! continuous; the network expansion later rounds each arrival time down and
//! each battery level up, which underestimates consumption and therefore
//! yields a valid lower bound for the continuous problem.

use super::{DiscreteInstance, Instance};
use crate::{Error, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscretizeMode {
    DEadarp,
    Relaxed,
}

/// Uniform grid `origin + k * unit` for `k in 0..len`.
#[derive(Debug, Clone)]
pub struct Grid {
    origin: f64,
    unit: f64,
    len: usize,
}

impl Grid {
    /// Grid starting at `origin` whose last point is the first multiple
    /// covering `end` (extended past `end` when the unit does not divide the
    /// span exactly).
    pub fn covering(origin: f64, unit: f64, end: f64) -> Grid {
        debug_assert!(unit > 0.0 && end >= origin - EPS);
        let steps = ((end - origin) / unit - EPS).ceil().max(0.0) as usize;
        Grid { origin, unit, len: steps + 1 }
    }

    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of unit steps, the index count reported for grid sizes.
    pub fn intervals(&self) -> usize {
        self.len - 1
    }

    pub fn value(&self, k: usize) -> f64 {
        debug_assert!(k < self.len);
        self.origin + k as f64 * self.unit
    }

    pub fn last(&self) -> f64 {
        self.value(self.len - 1)
    }

    /// Largest index whose value is `<= x` (within tolerance), if any.
    pub fn floor_idx(&self, x: f64) -> Option<usize> {
        if x < self.origin - EPS {
            return None;
        }
        let k = ((x - self.origin) / self.unit + EPS).floor() as usize;
        Some(k.min(self.len - 1))
    }

    /// Smallest index whose value is `>= x` (within tolerance), if any.
    pub fn ceil_idx(&self, x: f64) -> Option<usize> {
        let k = (((x - self.origin) / self.unit) - EPS).ceil().max(0.0) as usize;
        if k >= self.len {
            None
        } else {
            Some(k)
        }
    }

    pub fn round_idx(&self, x: f64) -> usize {
        let k = ((x - self.origin) / self.unit).round().max(0.0) as usize;
        k.min(self.len - 1)
    }

    pub fn contains_value(&self, x: f64) -> bool {
        match self.floor_idx(x) {
            Some(k) => (self.value(k) - x).abs() <= EPS,
            None => false,
        }
    }
}

/// Round a duration to the nearest unit multiple.
fn round_mult(x: f64, unit: f64) -> f64 {
    (x / unit).round() * unit
}

/// Round a duration up to a unit multiple.
fn ceil_mult(x: f64, unit: f64) -> f64 {
    (x / unit - EPS).ceil() * unit
}

impl Instance {
    /// Quantize this instance onto time/battery grids.
    ///
    /// In `DEadarp` mode arc parameters and windows are rounded in place; in
    /// `Relaxed` mode they stay continuous and rounding is deferred to
    /// network expansion. A time unit wider than the narrowest window span
    /// only warns: the instance may become infeasible but is still built.
    pub fn discretize(
        &self,
        time_unit: f64,
        battery_unit: f64,
        mode: DiscretizeMode,
    ) -> Result<DiscreteInstance, Error> {
        if time_unit <= 0.0 || battery_unit <= 0.0 {
            return Err(Error::Param("grid units must be positive".to_string()));
        }
        let narrowest = self
            .customers()
            .map(|i| self.locations[i].window.1 - self.locations[i].window.0)
            .fold(f64::INFINITY, f64::min);
        if time_unit > narrowest + EPS {
            log::warn!(
                "time unit {} exceeds the narrowest window span {:.2}; instance may become infeasible",
                time_unit,
                narrowest
            );
        }

        let time_grid = Grid::covering(self.t_min, time_unit, self.t_max);
        let battery_grid = Grid::covering(self.b_min, battery_unit, self.b_max);

        let mut base = self.clone();
        if mode == DiscretizeMode::DEadarp {
            for v in base.arcs.time.iter_mut() {
                *v = round_mult(*v, time_unit);
            }
            for v in base.arcs.battery.iter_mut() {
                *v = round_mult(*v, battery_unit);
            }
            for i in self.customers().collect::<Vec<_>>() {
                let (e, l) = base.locations[i].window;
                base.locations[i].window = (
                    time_grid.value(time_grid.round_idx(e)),
                    time_grid.value(time_grid.round_idx(l)),
                );
            }
            for p in 1..=self.n {
                if let Some(r) = base.locations[p].max_ride.as_mut() {
                    *r = ceil_mult(*r, time_unit);
                }
            }
        }

        Ok(DiscreteInstance {
            base,
            time_grid,
            battery_grid,
            time_unit,
            battery_unit,
            mode,
        })
    }

    /// Battery-swap preparation: battery consumptions are rounded to the
    /// nearest grid multiple (battery arithmetic is exact thereafter) while
    /// times stay continuous and are only floored during network expansion.
    pub fn discretize_battery_swap(
        &self,
        time_unit: f64,
        battery_unit: f64,
    ) -> Result<DiscreteInstance, Error> {
        let mut di = self.discretize(time_unit, battery_unit, DiscretizeMode::Relaxed)?;
        for v in di.base.arcs.battery.iter_mut() {
            *v = round_mult(*v, battery_unit);
        }
        Ok(di)
    }
}

impl DiscreteInstance {
    /// Index counts as reported alongside results.
    pub fn time_index_count(&self) -> usize {
        self.time_grid.intervals()
    }

    pub fn battery_level_count(&self) -> usize {
        self.battery_grid.intervals()
    }

    /// Grid-membership invariants; holds after `DEadarp` discretization when
    /// the units divide the spans exactly.
    pub fn grid_membership_ok(&self) -> bool {
        let b = &self.base;
        let windows_ok = self.mode == DiscretizeMode::Relaxed
            || b
                .customers()
                .all(|i| {
                    self.time_grid.contains_value(b.locations[i].window.0)
                        && self.time_grid.contains_value(b.locations[i].window.1)
                });
        windows_ok
            && self.battery_grid.contains_value(b.b_min)
            && self.battery_grid.contains_value(b.b_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GenParams};

    #[test]
    fn grid_index_math() {
        let g = Grid::covering(0.0, 10.0, 100.0);
        assert_eq!(g.len(), 11);
        assert_eq!(g.intervals(), 10);
        assert_eq!(g.floor_idx(34.9), Some(3));
        assert_eq!(g.floor_idx(40.0 - 1e-9), Some(4));
        assert_eq!(g.ceil_idx(34.9), Some(4));
        assert_eq!(g.ceil_idx(30.0 + 1e-9), Some(3));
        assert_eq!(g.floor_idx(-5.0), None);
        assert!(g.contains_value(70.0));
        assert!(!g.contains_value(71.0));
    }

    #[test]
    fn benchmark_grid_sizes() {
        // 24 h horizon at 10 min and a 270 driving-minute battery at 10.
        let t = Grid::covering(0.0, 10.0, 1440.0);
        let b = Grid::covering(0.0, 10.0, 270.0);
        assert_eq!(t.intervals(), 144);
        assert_eq!(b.intervals(), 27);
        // 200-minute horizon at 2 min, 50 driving-minute battery at 2.
        let t2 = Grid::covering(0.0, 2.0, 200.0);
        let b2 = Grid::covering(0.0, 2.0, 50.0);
        assert_eq!(t2.intervals(), 100);
        assert_eq!(b2.intervals(), 25);
    }

    #[test]
    fn unit_granularity_is_identity_on_integral_data() {
        let inst = generate_instance(&GenParams {
            n: 2,
            vehicles: 1,
            stations: 1,
            seed: 11,
            ..GenParams::default()
        })
        .unwrap();
        // Snap everything to integers first so unit 1 is exact.
        let snapped = inst.discretize(1.0, 1.0, DiscretizeMode::DEadarp).unwrap().base;
        let again = snapped.discretize(1.0, 1.0, DiscretizeMode::DEadarp).unwrap();
        let relaxed = snapped.discretize(1.0, 1.0, DiscretizeMode::Relaxed).unwrap();
        assert_eq!(again.base.arcs.time, relaxed.base.arcs.time);
        assert_eq!(again.base.arcs.battery, relaxed.base.arcs.battery);
        assert!(again.grid_membership_ok());
    }

    #[test]
    fn deadarp_rounding_error_bounds() {
        let inst = generate_instance(&GenParams {
            n: 3,
            vehicles: 2,
            stations: 1,
            seed: 3,
            ..GenParams::default()
        })
        .unwrap();
        let unit = 7.0;
        let di = inst.discretize(unit, unit, DiscretizeMode::DEadarp).unwrap();
        for (r, t) in di.base.arcs.time.iter().zip(inst.arcs.time.iter()) {
            assert!((r - t).abs() <= unit / 2.0 + EPS);
        }
        for p in 1..=inst.n {
            assert!(di.base.max_ride(p) >= inst.max_ride(p) - EPS);
        }
    }

    #[test]
    fn relaxed_mode_leaves_parameters_alone() {
        let inst = generate_instance(&GenParams {
            n: 2,
            vehicles: 1,
            stations: 0,
            seed: 5,
            ..GenParams::default()
        })
        .unwrap();
        let di = inst.discretize(10.0, 10.0, DiscretizeMode::Relaxed).unwrap();
        assert_eq!(di.base.arcs.time, inst.arcs.time);
        assert_eq!(di.base.arcs.battery, inst.arcs.battery);
    }
}
