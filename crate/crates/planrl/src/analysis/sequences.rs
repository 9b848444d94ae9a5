//! Goal-reaching action sequences and the admissible reset-bonus
//! interval: the range of bonuses M under which the unspecified-horizon
//! optimal policy stays optimal for the infinite-horizon average-cost
//! formulation with goal resets.

use super::cycles::goal_free_min_mean_cycle;
use super::AnalysisError;
use crate::dp::{dijkstra, extract_policy, CostToGo, Value};
use crate::mdp::{ActionId, PlanningProblem, StateId};
use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;

/// Guard against runaway sequence enumeration.
pub const MAX_SEQUENCES: usize = 1_000_000;

/// An action sequence applied from a fixed origin, with its realized
/// path and total cost. S is the number of actions (edges).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionSequence {
    pub actions: Vec<ActionId>,
    pub path: Vec<StateId>,
    pub cost: Rational64,
}

impl ActionSequence {
    pub fn origin(&self) -> StateId {
        self.path[0]
    }

    pub fn terminal(&self) -> StateId {
        *self.path.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.actions.len()
    }
}

fn single_goal(p: &PlanningProblem) -> Result<StateId, AnalysisError> {
    match p.goals() {
        [g] => Ok(*g),
        gs => Err(AnalysisError::MultipleGoals { count: gs.len() }),
    }
}

/// All acyclic action sequences from the initial state to the goal with
/// at most `max_len` actions. Sequences revisiting a state are excluded:
/// under strictly positive costs they are dominated and never tighten
/// the bonus bounds.
pub fn enumerate_goal_sequences(
    p: &PlanningProblem,
    max_len: usize,
) -> Result<Vec<ActionSequence>, AnalysisError> {
    assert!(p.is_deterministic(), "sequence enumeration is defined on deterministic problems");
    let goal = single_goal(p)?;
    let mut found = Vec::new();
    let mut on_path = vec![false; p.num_states()];
    let mut actions = Vec::new();
    let mut path = vec![p.initial()];
    dfs_sequences(p, goal, max_len, &mut on_path, &mut actions, &mut path, Rational64::zero(), &mut found)?;
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn dfs_sequences(
    p: &PlanningProblem,
    goal: StateId,
    max_len: usize,
    on_path: &mut [bool],
    actions: &mut Vec<ActionId>,
    path: &mut Vec<StateId>,
    cost: Rational64,
    found: &mut Vec<ActionSequence>,
) -> Result<(), AnalysisError> {
    let cur = *path.last().unwrap();
    if cur == goal {
        if found.len() >= MAX_SEQUENCES {
            return Err(AnalysisError::ExplosionGuard { limit: MAX_SEQUENCES });
        }
        found.push(ActionSequence { actions: actions.clone(), path: path.clone(), cost });
        return Ok(());
    }
    if actions.len() == max_len {
        return Ok(());
    }
    on_path[cur.0] = true;
    for (u, succ, step) in p.transitions(cur) {
        if u.is_terminate() || on_path[succ.0] {
            continue;
        }
        actions.push(u);
        path.push(succ);
        dfs_sequences(p, goal, max_len, on_path, actions, path, cost + step, found)?;
        actions.pop();
        path.pop();
    }
    on_path[cur.0] = false;
    Ok(())
}

/// The constraint value A(u) of a goal sequence relative to the optimal
/// one: (1 - S/S*) (S L* / (S* L) - 1).
pub fn constraint_a(
    u_seq: &ActionSequence,
    u_star: &ActionSequence,
) -> Result<Rational64, AnalysisError> {
    if u_seq.cost.is_zero() || u_star.cost.is_zero() {
        return Err(AnalysisError::ZeroCostSequence);
    }
    let s = Rational64::from_integer(u_seq.steps() as i64);
    let s_star = Rational64::from_integer(u_star.steps() as i64);
    let one = Rational64::from_integer(1);
    Ok((one - s / s_star) * (s * u_star.cost / (s_star * u_seq.cost) - one))
}

/// The bonus value at which the reset cycles of the two sequences have
/// equal average cost: (M + L*)/S* = (M + L)/S solved for M. Defined for
/// S != S*; below it one cycle wins, above it the other.
pub fn reset_bonus_tie_point(u_seq: &ActionSequence, u_star: &ActionSequence) -> Rational64 {
    let s = u_seq.steps() as i64;
    let s_star = u_star.steps() as i64;
    debug_assert_ne!(s, s_star);
    (Rational64::from_integer(s_star) * u_seq.cost - Rational64::from_integer(s) * u_star.cost)
        / Rational64::from_integer(s - s_star)
}

/// Admissible reset-bonus range. The interval is closed; at either end
/// the competing cycles tie.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MInterval {
    /// Greatest lower bound; `None` is minus infinity.
    pub lower: Option<Rational64>,
    /// Least upper bound; `None` is plus infinity.
    pub upper: Option<Rational64>,
    /// Bound contributed by goal sequences shorter than the optimal one.
    pub alpha_bound: Option<Rational64>,
    /// Bound contributed by goal sequences longer than the optimal one.
    pub beta_bound: Option<Rational64>,
    /// Bound S(u*) Lav(C) - L(u*) contributed by the cheapest goal-free
    /// cycle; `None` when no such cycle exists.
    pub cycle_bound: Option<Rational64>,
    /// Steps and cost of the optimal goal sequence the bounds refer to.
    pub s_star: usize,
    pub l_star: Rational64,
    /// Sequence-length cap that was in force during enumeration.
    pub max_len: usize,
}

impl MInterval {
    pub fn is_empty(&self) -> bool {
        match (self.lower, self.upper) {
            (Some(lo), Some(hi)) => lo > hi,
            _ => false,
        }
    }

    /// Closed-interval membership.
    pub fn contains(&self, m: Rational64) -> bool {
        self.lower.map_or(true, |lo| lo <= m) && self.upper.map_or(true, |hi| m <= hi)
    }

    pub fn strictly_inside(&self, m: Rational64) -> bool {
        self.lower.map_or(true, |lo| lo < m) && self.upper.map_or(true, |hi| m < hi)
    }

    pub fn on_boundary(&self, m: Rational64) -> bool {
        self.contains(m) && !self.strictly_inside(m)
    }

    /// Whether some strictly negative bonus is admissible, which is what
    /// the episodic equivalence requires of M.
    pub fn admits_negative_bonus(&self) -> bool {
        !self.is_empty() && self.lower.map_or(true, |lo| lo < Rational64::zero())
    }
}

/// Computes the admissible bonus interval of a deterministic single-goal
/// problem. The optimal sequence comes from rolling out the Dijkstra
/// policy; the bounds compare it pairwise against every other acyclic
/// goal sequence (up to `max_len` actions) and against the cheapest
/// goal-free cycle reachable from the initial state.
pub fn m_interval(p: &PlanningProblem, max_len: usize) -> Result<MInterval, AnalysisError> {
    assert!(p.is_deterministic(), "the bonus interval is defined on deterministic problems");
    let goal = single_goal(p)?;
    let (table, _) = dijkstra(p).expect("deterministic problem");
    if table.value(p.initial()) == Value::Unreachable {
        return Err(AnalysisError::NoGoalSequence);
    }
    let policy = extract_policy(p, &CostToGo::Exact(table));
    let u_star = rollout_sequence(p, &policy, goal);
    let max_len = max_len.max(u_star.steps());

    let sequences = enumerate_goal_sequences(p, max_len)?;
    let mut alpha_bound: Option<Rational64> = None;
    let mut beta_bound: Option<Rational64> = None;
    for seq in &sequences {
        if seq.steps() == u_star.steps() {
            continue;
        }
        let tie = reset_bonus_tie_point(seq, &u_star);
        if seq.steps() < u_star.steps() {
            if alpha_bound.map_or(true, |a| tie > a) {
                alpha_bound = Some(tie);
            }
        } else if beta_bound.map_or(true, |b| tie < b) {
            beta_bound = Some(tie);
        }
    }
    let s_star = Rational64::from_integer(u_star.steps() as i64);
    let cycle_bound = goal_free_min_mean_cycle(p).map(|mean| s_star * mean - u_star.cost);

    let upper = match (beta_bound, cycle_bound) {
        (Some(b), Some(c)) => Some(b.min(c)),
        (Some(b), None) => Some(b),
        (None, Some(c)) => Some(c),
        (None, None) => None,
    };
    Ok(MInterval {
        lower: alpha_bound,
        upper,
        alpha_bound,
        beta_bound,
        cycle_bound,
        s_star: u_star.steps(),
        l_star: u_star.cost,
        max_len,
    })
}

/// Path of the optimal policy from the initial state to the goal.
fn rollout_sequence(p: &PlanningProblem, policy: &crate::dp::Policy, goal: StateId) -> ActionSequence {
    let mut cur = p.initial();
    let mut actions = Vec::new();
    let mut path = vec![cur];
    let mut cost = Rational64::zero();
    while cur != goal {
        let u = policy.action(cur);
        debug_assert!(!u.is_terminate());
        cost += p.step_cost(cur, u).expect("policy action is valid");
        cur = p.successor(cur, u).expect("policy action is valid");
        actions.push(u);
        path.push(cur);
    }
    ActionSequence { actions, path, cost }
}
