//! LP-based branch-and-bound over binary variables.
//!
//! Best-first search on the LP relaxation bound with deterministic
//! tie-breaking, most-fractional branching, and lazy incumbent screening:
//! when the screen rejects an integral node the returned cuts join a global
//! pool and the node is re-solved. Cuts are globally valid, so bounds of
//! open nodes remain valid lower bounds. The LP relaxations are solved with
//! the `minilp` simplex; everything above it lives here.

use super::backend::{Constraint, MilpBackend, MilpOutcome, MilpProblem, Screen, Sense, SolveOptions, SolveStatus};
use crate::{Error, EPS};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub struct BranchBound;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fix {
    Zero,
    One,
}

struct Node {
    bound: f64,
    id: usize,
    fixes: Vec<(usize, Fix)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap; invert so the lowest bound (then lowest id)
    // pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn solve_lp(problem: &MilpProblem, cuts: &[Constraint], fixes: &[(usize, Fix)]) -> Option<(Vec<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let n = problem.num_vars();
    let mut bounds = vec![(0.0, 1.0); n];
    for &(v, fix) in fixes {
        bounds[v] = match fix {
            Fix::Zero => (0.0, 0.0),
            Fix::One => (1.0, 1.0),
        };
    }
    let vars: Vec<_> = (0..n).map(|i| lp.add_var(problem.objective[i], bounds[i])).collect();
    for c in problem.constraints.iter().chain(cuts.iter()) {
        let terms: Vec<_> = c.terms.iter().map(|&(v, w)| (vars[v], w)).collect();
        let op = match c.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        lp.add_constraint(&terms, op, c.rhs);
    }
    let sol = lp.solve().ok()?;
    let x: Vec<f64> = vars.iter().map(|&v| sol[v]).collect();
    Some((x, sol.objective()))
}

fn most_fractional(x: &[f64]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, &v) in x.iter().enumerate() {
        let frac = (v - v.round()).abs();
        if frac > EPS {
            let score = (v - 0.5).abs();
            match best {
                Some((s, _)) if s <= score => {}
                _ => best = Some((score, i)),
            }
        }
    }
    best.map(|(_, i)| i)
}

impl MilpBackend for BranchBound {
    fn name(&self) -> &'static str {
        "bb"
    }

    fn solve(
        &self,
        problem: &MilpProblem,
        opts: &SolveOptions,
        screen: &mut dyn FnMut(&[f64], f64) -> Screen,
    ) -> Result<MilpOutcome, Error> {
        let started = std::time::Instant::now();
        let mut cuts: Vec<Constraint> = Vec::new();
        let mut heap: BinaryHeap<Node> = BinaryHeap::new();
        let mut next_id = 0usize;
        let mut nodes_explored = 0usize;
        let mut incumbent: Option<(Vec<f64>, f64)> = None;
        let mut timed_out = false;

        heap.push(Node { bound: f64::NEG_INFINITY, id: 0, fixes: Vec::new() });
        next_id += 1;

        while let Some(node) = heap.pop() {
            if let Some(limit) = opts.time_limit {
                if started.elapsed() >= limit {
                    heap.push(node);
                    timed_out = true;
                    break;
                }
            }
            if let Some((_, inc)) = &incumbent {
                if node.bound >= inc - 1e-9 {
                    continue;
                }
            }
            nodes_explored += 1;
            let (x, obj) = match solve_lp(problem, &cuts, &node.fixes) {
                Some(r) => r,
                None => continue,
            };
            if let Some((_, inc)) = &incumbent {
                if obj >= inc - 1e-9 {
                    continue;
                }
            }
            match most_fractional(&x) {
                Some(v) => {
                    for fix in [Fix::Zero, Fix::One] {
                        let mut fixes = node.fixes.clone();
                        fixes.push((v, fix));
                        heap.push(Node { bound: obj, id: next_id, fixes });
                        next_id += 1;
                    }
                }
                None => {
                    // integral: screen before acceptance
                    let decision = if opts.lazy { screen(&x, obj) } else { Screen::Accept };
                    match decision {
                        Screen::Accept => incumbent = Some((x, obj)),
                        Screen::Reject(new_cuts) => {
                            if new_cuts.is_empty() {
                                return Err(Error::Backend(
                                    "incumbent rejected without cuts; would loop forever".to_string(),
                                ));
                            }
                            cuts.extend(new_cuts);
                            if cuts.len() > opts.cut_pool_limit {
                                return Err(Error::Backend(format!(
                                    "lazy cut pool exceeded {} cuts",
                                    opts.cut_pool_limit
                                )));
                            }
                            heap.push(Node { bound: obj, id: next_id, fixes: node.fixes });
                            next_id += 1;
                        }
                    }
                }
            }
        }

        let cpu_secs = started.elapsed().as_secs_f64();
        let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let outcome = match (&incumbent, timed_out) {
            (None, false) => MilpOutcome {
                status: SolveStatus::Infeasible,
                best: None,
                bound: f64::INFINITY,
                nodes_explored,
                cuts_added: cuts.len(),
                cpu_secs,
            },
            (Some((x, obj)), false) => MilpOutcome {
                status: SolveStatus::Optimal,
                best: Some((x.clone(), *obj)),
                bound: *obj,
                nodes_explored,
                cuts_added: cuts.len(),
                cpu_secs,
            },
            (best, true) => {
                let bound = match best {
                    Some((_, obj)) => open_bound.min(*obj),
                    None => open_bound,
                };
                MilpOutcome {
                    status: SolveStatus::Feasible,
                    best: best.clone(),
                    bound,
                    nodes_explored,
                    cuts_added: cuts.len(),
                    cpu_secs,
                }
            }
        };
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(terms: &[(usize, f64)], sense: Sense, rhs: f64) -> Constraint {
        Constraint { terms: terms.to_vec(), sense, rhs }
    }

    fn run(p: &MilpProblem, opts: &SolveOptions) -> MilpOutcome {
        BranchBound
            .solve(p, opts, &mut |_, _| Screen::Accept)
            .unwrap()
    }

    #[test]
    fn knapsack_style_cover() {
        // min x0 + 2 x1 + 3 x2 s.t. x0 + x1 + x2 >= 2
        let p = MilpProblem {
            objective: vec![1.0, 2.0, 3.0],
            constraints: vec![c(&[(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Ge, 2.0)],
        };
        let out = run(&p, &SolveOptions::default());
        assert_eq!(out.status, SolveStatus::Optimal);
        let (x, obj) = out.best.unwrap();
        assert!((obj - 3.0).abs() < 1e-9);
        assert_eq!(x.iter().map(|v| v.round() as i32).collect::<Vec<_>>(), vec![1, 1, 0]);
    }

    #[test]
    fn infeasible_detected() {
        let p = MilpProblem {
            objective: vec![1.0],
            constraints: vec![
                c(&[(0, 1.0)], Sense::Ge, 1.0),
                c(&[(0, 1.0)], Sense::Le, 0.0),
            ],
        };
        let out = run(&p, &SolveOptions::default());
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn fractional_lp_gets_branched() {
        // LP relaxation is fractional (x0 = x1 = x2 = 0.5 on a triangle),
        // integral optimum needs two variables.
        let p = MilpProblem {
            objective: vec![1.0, 1.0, 1.0],
            constraints: vec![
                c(&[(0, 1.0), (1, 1.0)], Sense::Ge, 1.0),
                c(&[(1, 1.0), (2, 1.0)], Sense::Ge, 1.0),
                c(&[(0, 1.0), (2, 1.0)], Sense::Ge, 1.0),
            ],
        };
        let out = run(&p, &SolveOptions::default());
        let (_, obj) = out.best.unwrap();
        assert!((obj - 2.0).abs() < 1e-9);
        assert!(out.nodes_explored > 1);
    }

    #[test]
    fn lazy_rejection_adds_cut_and_recovers() {
        // min x0 + 2 x1, pick at least one; screen vetoes x0 alone.
        let p = MilpProblem {
            objective: vec![1.0, 2.0],
            constraints: vec![c(&[(0, 1.0), (1, 1.0)], Sense::Ge, 1.0)],
        };
        let opts = SolveOptions { lazy: true, ..Default::default() };
        let mut rejected = 0;
        let out = BranchBound
            .solve(&p, &opts, &mut |x, _| {
                if x[0] > 0.5 && x[1] < 0.5 {
                    rejected += 1;
                    Screen::Reject(vec![c(&[(0, 1.0), (1, -1.0)], Sense::Le, 0.0)])
                } else {
                    Screen::Accept
                }
            })
            .unwrap();
        assert!(rejected >= 1);
        let (x, obj) = out.best.unwrap();
        assert!(x[1] > 0.5);
        assert!((obj - 3.0).abs() < 1e-9 || (obj - 2.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_across_runs() {
        let p = MilpProblem {
            objective: vec![3.0, 1.0, 4.0, 1.0, 5.0],
            constraints: vec![
                c(&[(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Ge, 2.0),
                c(&[(2, 1.0), (3, 1.0), (4, 1.0)], Sense::Ge, 2.0),
                c(&[(0, 1.0), (4, 1.0)], Sense::Le, 1.0),
            ],
        };
        let a = run(&p, &SolveOptions::default());
        let b = run(&p, &SolveOptions::default());
        assert_eq!(a.best.as_ref().unwrap().0, b.best.as_ref().unwrap().0);
        assert_eq!(a.nodes_explored, b.nodes_explored);
    }
}
