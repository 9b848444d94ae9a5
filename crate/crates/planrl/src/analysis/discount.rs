//! The discount trap: a discounted-optimal policy can loop forever and
//! never reach the goal even though the goal is reachable, so its true
//! (undiscounted) cost is infinite.

use crate::dp::{Policy, MAX_SWEEPS};
use crate::mdp::{rational_to_f64, ActionId, PlanningProblem, StateId};
use num_rational::Rational64;
use serde::Serialize;

/// Action ids of the six-state chain problem: step toward 0, step
/// toward the goal.
pub const DOWN: ActionId = ActionId(0);
pub const UP: ActionId = ActionId(1);

/// Six-state chain with clamped moves and cost x + 1 per step. The only
/// goal-reaching policy costs 15 from state 0, while looping at state 0
/// costs 1 per step, which discounting can make look cheaper.
pub fn build_discount_trap_problem() -> PlanningProblem {
    let n = 6usize;
    let mut b = PlanningProblem::builder(n).initial(StateId(0));
    for x in 0..n {
        let down = x.saturating_sub(1);
        let up = (x + 1).min(n - 1);
        let cost = Rational64::from_integer(x as i64 + 1);
        b = b.action(StateId(x), DOWN, StateId(down), cost);
        b = b.action(StateId(x), UP, StateId(up), cost);
    }
    b.goal(StateId(n - 1)).build().expect("chain problem is well formed")
}

/// Fixed point of the alpha-discounted backup, with the greedy policy.
pub struct DiscountedSolution {
    pub values: Vec<f64>,
    pub policy: Policy,
}

/// Discounted value iteration: G(x) <- min over u of l(x,u) + alpha G(f(x,u)),
/// iterated to a 1e-12 max-norm fixed point. Goals stay at zero through
/// their termination action.
pub fn discounted_value_iteration(p: &PlanningProblem, alpha: f64) -> DiscountedSolution {
    assert!(p.is_deterministic(), "discounted planning is defined on deterministic problems");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let n = p.num_states();
    let mut values = vec![0.0f64; n];
    for _ in 0..MAX_SWEEPS {
        let mut residual = 0.0f64;
        let prev = values.clone();
        for x in 0..n {
            let mut best = f64::INFINITY;
            for (_, succ, cost) in p.transitions(StateId(x)) {
                let q = rational_to_f64(cost) + alpha * prev[succ.0];
                if q < best {
                    best = q;
                }
            }
            residual = residual.max((best - values[x]).abs());
            values[x] = best;
        }
        if residual < 1e-12 {
            break;
        }
    }
    let actions = (0..n)
        .map(|x| {
            let mut best: Option<(f64, ActionId)> = None;
            for (u, succ, cost) in p.transitions(StateId(x)) {
                let q = rational_to_f64(cost) + alpha * values[succ.0];
                let better = match best {
                    None => true,
                    Some((bq, bu)) => q < bq || (q == bq && u < bu),
                };
                if better {
                    best = Some((q, u));
                }
            }
            best.expect("state has actions").1
        })
        .collect();
    DiscountedSolution { values, policy: Policy::new(actions) }
}

/// A state cycle produced by a stationary policy: first state equals the
/// last, no interior repeats.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cycle {
    pub states: Vec<StateId>,
    pub actions: Vec<ActionId>,
    pub total_cost: Rational64,
    pub contains_goal: bool,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn mean_cost(&self) -> Rational64 {
        self.total_cost / Rational64::from_integer(self.len() as i64)
    }
}

/// Outcome of executing the alpha-discounted optimal policy from the
/// initial state: either it terminates at the goal with a finite true
/// cost, or it falls into a cycle and the true cost is infinite.
#[derive(Clone, Debug, Serialize)]
pub struct DiscountReport {
    pub alpha: f64,
    pub reaches_goal: bool,
    /// Undiscounted cost of the rollout; `None` means infinite.
    pub true_cost: Option<Rational64>,
    pub cycle: Option<Cycle>,
    pub policy: Policy,
}

pub fn discount_trap_report(p: &PlanningProblem, alpha: f64) -> DiscountReport {
    let solution = discounted_value_iteration(p, alpha);
    let pi = solution.policy;
    let mut cur = p.initial();
    let mut seen_at = vec![usize::MAX; p.num_states()];
    let mut trail: Vec<(StateId, ActionId, Rational64)> = Vec::new();
    loop {
        let u = pi.action(cur);
        if u.is_terminate() {
            let total = trail.iter().map(|&(_, _, c)| c).sum();
            return DiscountReport {
                alpha,
                reaches_goal: true,
                true_cost: Some(total),
                cycle: None,
                policy: pi,
            };
        }
        if seen_at[cur.0] != usize::MAX {
            let start = seen_at[cur.0];
            let mut states: Vec<StateId> = trail[start..].iter().map(|&(s, _, _)| s).collect();
            states.push(cur);
            let actions = trail[start..].iter().map(|&(_, u, _)| u).collect();
            let total_cost = trail[start..].iter().map(|&(_, _, c)| c).sum();
            let contains_goal = states.iter().any(|&s| p.is_goal(s));
            return DiscountReport {
                alpha,
                reaches_goal: false,
                true_cost: None,
                cycle: Some(Cycle { states, actions, total_cost, contains_goal }),
                policy: pi,
            };
        }
        seen_at[cur.0] = trail.len();
        let cost = p.step_cost(cur, u).expect("policy action is valid");
        let next = p.successor(cur, u).expect("policy action is valid");
        trail.push((cur, u, cost));
        cur = next;
    }
}

/// Bisects on `reaches_goal` to locate the discount factor at which the
/// optimal policy flips from looping to goal seeking. `lo` must loop and
/// `hi` must reach the goal.
pub fn locate_discount_threshold(p: &PlanningProblem, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    assert!(!discount_trap_report(p, lo).reaches_goal, "lo must sit below the flip");
    assert!(discount_trap_report(p, hi).reaches_goal, "hi must sit above the flip");
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if discount_trap_report(p, mid).reaches_goal {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
