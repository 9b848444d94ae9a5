//! Cost/reward duality: minimizing a stage-additive cost and maximizing
//! its negation pick out the same actions.

use crate::dp::{dijkstra, Value};
use crate::mdp::{ActionId, PlanningProblem, StateId};
use num_rational::Rational64;
use num_traits::Zero;

/// Reward-side value: total reward to go, or unreachable (-infinity).
#[derive(Clone, Copy, Debug, PartialEq)]
enum Reward {
    Finite(Rational64),
    Unreachable,
}

impl Reward {
    fn plus(self, r: Rational64) -> Reward {
        match self {
            Reward::Finite(v) => Reward::Finite(v + r),
            Reward::Unreachable => Reward::Unreachable,
        }
    }

    fn better_than(self, other: Reward) -> bool {
        match (self, other) {
            (Reward::Finite(a), Reward::Finite(b)) => a > b,
            (Reward::Finite(_), Reward::Unreachable) => true,
            _ => false,
        }
    }
}

/// Max-reward value iteration on the negated-cost problem, exact.
fn reward_values(p: &PlanningProblem) -> Vec<Reward> {
    let n = p.num_states();
    let mut values: Vec<Reward> = (0..n)
        .map(|x| {
            if p.is_goal(StateId(x)) {
                Reward::Finite(Rational64::zero())
            } else {
                Reward::Unreachable
            }
        })
        .collect();
    loop {
        let mut changed = false;
        for x in 0..n {
            if p.is_goal(StateId(x)) {
                continue;
            }
            let mut best = Reward::Unreachable;
            for (_, succ, cost) in p.transitions(StateId(x)) {
                let candidate = values[succ.0].plus(-cost);
                if candidate.better_than(best) {
                    best = candidate;
                }
            }
            if best != values[x] {
                values[x] = best;
                changed = true;
            }
        }
        if !changed {
            return values;
        }
    }
}

fn argmin_cost_set(p: &PlanningProblem, x: StateId, g: &[Value]) -> Vec<ActionId> {
    let backups: Vec<(ActionId, Value)> = p
        .transitions(x)
        .map(|(u, succ, cost)| {
            let v = match g[succ.0] {
                Value::Finite(w) => Value::Finite(w + cost),
                Value::Unreachable => Value::Unreachable,
            };
            (u, v)
        })
        .collect();
    let best = backups.iter().map(|&(_, v)| v).min().expect("state has actions");
    backups.into_iter().filter(|&(_, v)| v == best).map(|(u, _)| u).collect()
}

fn argmax_reward_set(p: &PlanningProblem, x: StateId, r: &[Reward]) -> Vec<ActionId> {
    let backups: Vec<(ActionId, Reward)> = p
        .transitions(x)
        .map(|(u, succ, cost)| (u, r[succ.0].plus(-cost)))
        .collect();
    let mut best = backups[0].1;
    for &(_, v) in &backups[1..] {
        if v.better_than(best) {
            best = v;
        }
    }
    backups.into_iter().filter(|&(_, v)| v == best).map(|(u, _)| u).collect()
}

/// Checks the duality on a deterministic problem: the optimal reward
/// table must be the exact negation of the optimal cost table and the
/// argmin/argmax action sets must coincide at every state.
pub fn verify_cost_reward_duality(p: &PlanningProblem) -> bool {
    assert!(p.is_deterministic(), "duality check is defined on deterministic problems");
    let (cost_table, _) = dijkstra(p).expect("deterministic problem");
    let rewards = reward_values(p);
    for x in p.states() {
        let negated = match cost_table.value(x) {
            Value::Finite(v) => Reward::Finite(-v),
            Value::Unreachable => Reward::Unreachable,
        };
        if rewards[x.0] != negated {
            return false;
        }
        let mut min_set = argmin_cost_set(p, x, cost_table.values());
        let mut max_set = argmax_reward_set(p, x, &rewards);
        min_set.sort();
        max_set.sort();
        if min_set != max_set {
            return false;
        }
    }
    true
}
