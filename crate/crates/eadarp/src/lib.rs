//! Exact solvers for the electric autonomous dial-a-ride problem (E-ADARP)
//! built on a fragment formulation over a battery-time-space network.
//!
//! A *fragment* is a partial route in which the vehicle is empty exactly at
//! the first and last stop; pairing, precedence, capacity, time-window and
//! maximum-ride-time constraints are all enforced when fragments are
//! enumerated, so the integer program only has to glue fragments together
//! with connector, idle and charging arcs expanded over discrete time and
//! battery grids.
//!
//! Three solve variants are supported:
//!
//! * `deadarp` — the fully discretized problem (all time and battery
//!   parameters are integer multiples of the chosen units), solved exactly.
//! * `eadarp-lb` — a relaxed network for the continuous problem (arrival
//!   times rounded down, battery consumptions rounded up) whose optimum is a
//!   valid lower bound.
//! * `bs` — the battery-swap variant: discrete battery, continuous time, and
//!   lazy chain cuts that reject incumbents whose physical routes admit no
//!   continuous-time schedule.
//!
//! The `examples/` directory has one runnable example per capability; the
//! `eadarp` binary wraps the same entry points as `solve`, `bound`,
//! `generate`, `validate` and `bench` subcommands.

pub mod btsnet;
pub mod cli;
pub mod error;
pub mod fragments;
pub mod generate;
pub mod instance;
pub mod mip;
pub mod oracle;
pub mod schedule;
pub mod stn;

pub use error::Error;
pub use instance::{DiscreteInstance, Instance, Location};

/// Location index into [`Instance::locations`].
pub type Loc = usize;
/// Times and durations, in minutes.
pub type Time = f64;
/// Travel costs (benchmark instances use Euclidean distance).
pub type Cost = f64;
/// Battery state of charge and consumption, in driving-minutes.
pub type Battery = f64;

/// Comparison tolerance for all continuous time/battery/cost arithmetic.
pub const EPS: f64 = 1e-6;

/// Problem variant selecting charging semantics and depot-return rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Discretized problem, partial recharging, exact grid arithmetic.
    DEadarp,
    /// Lower-bound mode: relaxed network for the continuous problem.
    EadarpLb,
    /// Battery swap: instant reset to full capacity, fixed swap time,
    /// no minimum state-of-charge threshold at the destination depot.
    BatterySwap,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::DEadarp => "deadarp",
            Variant::EadarpLb => "eadarp-lb",
            Variant::BatterySwap => "bs",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "deadarp" => Some(Variant::DEadarp),
            "eadarp-lb" | "lb" => Some(Variant::EadarpLb),
            "bs" | "battery-swap" => Some(Variant::BatterySwap),
            _ => None,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
