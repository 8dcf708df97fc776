//! Simple temporal network over the visits of one route or fragment.
//!
//! All scheduling constraints used here (travel-time precedence, time
//! windows, maximum ride times) are difference constraints `t_j - t_i <= w`,
//! so feasibility and tightest per-visit bounds follow from all-pairs
//! shortest paths on a small dense graph. Variable 0..n are visit service
//! start times; an extra reference node anchors the absolute window bounds.
//!
//! The solution set of a feasible system is a box-projected lattice: the
//! per-variable `[earliest, latest]` bounds are each attainable, and for any
//! fixed departure time of the first visit within its bounds the remaining
//! earliest times are again given by shortest paths.

use crate::{Time, EPS};

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone)]
pub struct Stn {
    n: usize,
    /// Dense weight matrix, row-major over n+1 nodes; node n is the reference.
    d: Vec<f64>,
    solved: bool,
}

impl Stn {
    pub fn new(num_visits: usize) -> Self {
        let m = num_visits + 1;
        let mut d = vec![INF; m * m];
        for i in 0..m {
            d[i * m + i] = 0.0;
        }
        Stn { n: num_visits, d, solved: false }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    fn tighten(&mut self, i: usize, j: usize, w: f64) {
        let k = self.idx(i, j);
        if w < self.d[k] {
            self.d[k] = w;
        }
        self.solved = false;
    }

    /// Require `t_i <= ub`.
    pub fn add_upper(&mut self, i: usize, ub: Time) {
        let r = self.n;
        self.tighten(r, i, ub);
    }

    /// Require `t_i >= lb`.
    pub fn add_lower(&mut self, i: usize, lb: Time) {
        let r = self.n;
        self.tighten(i, r, -lb);
    }

    /// Require `t_j - t_i <= w`.
    pub fn add_diff_le(&mut self, i: usize, j: usize, w: f64) {
        self.tighten(i, j, w);
    }

    /// Require `t_j - t_i >= w` (e.g. travel time from visit i to visit j).
    pub fn add_diff_ge(&mut self, i: usize, j: usize, w: f64) {
        self.tighten(j, i, -w);
    }

    /// Run Floyd-Warshall; returns false when the system is infeasible.
    pub fn solve(&mut self) -> bool {
        let m = self.n + 1;
        for k in 0..m {
            for i in 0..m {
                let dik = self.d[i * m + k];
                if dik == INF {
                    continue;
                }
                for j in 0..m {
                    let v = dik + self.d[k * m + j];
                    if v < self.d[i * m + j] {
                        self.d[i * m + j] = v;
                    }
                }
            }
        }
        self.solved = true;
        (0..m).all(|i| self.d[i * m + i] >= -EPS)
    }

    /// Tightest lower bound on `t_i`; requires a prior successful `solve`.
    pub fn earliest(&self, i: usize) -> Time {
        debug_assert!(self.solved);
        -self.d[self.idx(i, self.n)]
    }

    /// Tightest upper bound on `t_i`.
    pub fn latest(&self, i: usize) -> Time {
        debug_assert!(self.solved);
        self.d[self.idx(self.n, i)]
    }

    /// Earliest feasible schedule (componentwise minimum), or None if
    /// infeasible. The earliest vector of a feasible system is itself a
    /// feasible schedule.
    pub fn earliest_schedule(&mut self) -> Option<Vec<Time>> {
        if !self.solve() {
            return None;
        }
        Some((0..self.n).map(|i| self.earliest(i)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_bounds_roundtrip() {
        let mut stn = Stn::new(2);
        stn.add_lower(0, 100.0);
        stn.add_upper(0, 200.0);
        stn.add_lower(1, 0.0);
        stn.add_upper(1, 1000.0);
        stn.add_diff_ge(0, 1, 30.0);
        assert!(stn.solve());
        assert_eq!(stn.earliest(0), 100.0);
        assert_eq!(stn.latest(0), 200.0);
        assert_eq!(stn.earliest(1), 130.0);
    }

    #[test]
    fn ride_cap_pulls_latest_down() {
        // pickup at 0, delivery at 1, ride cap 40 but travel 30 and the
        // delivery window opens at 200: pickup cannot start before 160.
        let mut stn = Stn::new(2);
        stn.add_lower(0, 0.0);
        stn.add_upper(0, 1000.0);
        stn.add_lower(1, 200.0);
        stn.add_upper(1, 1000.0);
        stn.add_diff_ge(0, 1, 30.0);
        stn.add_diff_le(0, 1, 40.0);
        assert!(stn.solve());
        assert!((stn.earliest(0) - 160.0).abs() < EPS);
    }

    #[test]
    fn infeasible_cycle_detected() {
        let mut stn = Stn::new(2);
        stn.add_diff_ge(0, 1, 50.0);
        stn.add_diff_le(0, 1, 20.0);
        assert!(!stn.solve());
    }
}
