//! Model-based planners: Dijkstra, synchronous and asynchronous value
//! iteration (deterministic exact and stochastic expected-cost), policy
//! extraction and evaluation.

mod explore;

pub use explore::{model_free_explore, BlackBoxEnv, ExploreError, Exploration, SimulatedEnv};

use crate::mdp::{rational_to_f64, stochastic_outcomes, ActionId, PlanningProblem, StateId};
use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Sweep cap for value iteration; hitting it signals an improper problem.
pub const MAX_SWEEPS: u64 = 100_000;

/// Default stopping tolerance for stochastic value iteration.
pub const DEFAULT_VI_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("value iteration did not stabilize within {0} sweeps")]
    MaxSweepsExceeded(u64),
    #[error("algorithm requires a deterministic problem (gamma = 1)")]
    StochasticProblem,
}

/// Exact cost to go of one state, or unreachable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Finite(Rational64),
    Unreachable,
}

impl Value {
    pub fn finite(self) -> Option<Rational64> {
        match self {
            Value::Finite(v) => Some(v),
            Value::Unreachable => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Value::Finite(v) => rational_to_f64(v),
            Value::Unreachable => f64::INFINITY,
        }
    }

    fn plus(self, c: Rational64) -> Value {
        match self {
            Value::Finite(v) => Value::Finite(v + c),
            Value::Unreachable => Value::Unreachable,
        }
    }
}

/// Exact cost-to-go table of a deterministic problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    values: Vec<Value>,
}

impl ValueTable {
    pub fn value(&self, x: StateId) -> Value {
        self.values[x.0]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }
}

/// Expected cost-to-go table of a stochastic problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedCosts {
    values: Vec<f64>,
}

impl ExpectedCosts {
    pub fn from_values(values: Vec<f64>) -> ExpectedCosts {
        ExpectedCosts { values }
    }

    pub fn value(&self, x: StateId) -> f64 {
        self.values[x.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Output of a planner run: exact for deterministic problems, expected
/// costs for stochastic ones.
#[derive(Clone, Debug, PartialEq)]
pub enum CostToGo {
    Exact(ValueTable),
    Expected(ExpectedCosts),
}

impl CostToGo {
    pub fn value_f64(&self, x: StateId) -> f64 {
        match self {
            CostToGo::Exact(t) => t.value(x).to_f64(),
            CostToGo::Expected(t) => t.value(x),
        }
    }

    pub fn exact(&self) -> Option<&ValueTable> {
        match self {
            CostToGo::Exact(t) => Some(t),
            CostToGo::Expected(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlannerStats {
    /// Full passes over the state space (0 for Dijkstra).
    pub sweeps: u64,
    /// State-value update computations.
    pub backups: u64,
    /// Per-action backup terms evaluated, the virtual analogue of taking
    /// an action.
    pub simulated_actions: u64,
    /// Max-norm value change of the final sweep.
    pub residual: f64,
}

/// Sweep order of value iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Jacobi sweeps: every backup reads the previous sweep's table.
    Synchronous,
    /// Gauss-Seidel sweeps in ascending state-index order, in place.
    Asynchronous,
}

/// State-to-action map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    actions: Vec<ActionId>,
}

impl Policy {
    pub fn new(actions: Vec<ActionId>) -> Policy {
        Policy { actions }
    }

    pub fn action(&self, x: StateId) -> ActionId {
        self.actions[x.0]
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }
}

/// Bellman fixed point of the problem. Deterministic problems iterate to
/// exact stabilization in rational arithmetic; stochastic problems stop
/// once the max-norm residual drops below `tol`.
pub fn value_iteration(
    p: &PlanningProblem,
    mode: SweepMode,
    tol: f64,
) -> Result<(CostToGo, PlannerStats), PlanError> {
    if p.is_deterministic() {
        let (t, stats) = deterministic_vi(p, mode)?;
        Ok((CostToGo::Exact(t), stats))
    } else {
        assert!(tol > 0.0, "stochastic value iteration needs tol > 0");
        let (t, stats) = stochastic_vi(p, mode, tol)?;
        Ok((CostToGo::Expected(t), stats))
    }
}

fn deterministic_vi(
    p: &PlanningProblem,
    mode: SweepMode,
) -> Result<(ValueTable, PlannerStats), PlanError> {
    let n = p.num_states();
    let mut values = init_deterministic(p);
    let mut stats = PlannerStats::default();
    loop {
        if stats.sweeps >= MAX_SWEEPS {
            return Err(PlanError::MaxSweepsExceeded(MAX_SWEEPS));
        }
        stats.sweeps += 1;
        let mut changed = false;
        let snapshot = match mode {
            SweepMode::Synchronous => Some(values.clone()),
            SweepMode::Asynchronous => None,
        };
        for x in 0..n {
            if p.is_goal(StateId(x)) {
                continue;
            }
            stats.backups += 1;
            let mut best = Value::Unreachable;
            for (_, succ, cost) in p.transitions(StateId(x)) {
                stats.simulated_actions += 1;
                let read = snapshot.as_ref().unwrap_or(&values);
                let candidate = read[succ.0].plus(cost);
                if candidate < best {
                    best = candidate;
                }
            }
            if best != values[x] {
                values[x] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    stats.residual = 0.0;
    Ok((ValueTable { values }, stats))
}

fn init_deterministic(p: &PlanningProblem) -> Vec<Value> {
    (0..p.num_states())
        .map(|x| {
            if p.is_goal(StateId(x)) {
                Value::Finite(Rational64::zero())
            } else {
                Value::Unreachable
            }
        })
        .collect()
}

/// One Gauss-Seidel sweep over a deterministic table, exposed so tests
/// can observe the per-sweep value sequence. Returns true if any value
/// changed.
#[cfg(test)]
pub(crate) fn async_sweep_deterministic(p: &PlanningProblem, values: &mut [Value]) -> bool {
    let mut changed = false;
    for x in 0..p.num_states() {
        if p.is_goal(StateId(x)) {
            continue;
        }
        let mut best = Value::Unreachable;
        for (_, succ, cost) in p.transitions(StateId(x)) {
            let candidate = values[succ.0].plus(cost);
            if candidate < best {
                best = candidate;
            }
        }
        if best != values[x] {
            values[x] = best;
            changed = true;
        }
    }
    changed
}

#[cfg(test)]
pub(crate) fn deterministic_init_for_tests(p: &PlanningProblem) -> Vec<Value> {
    init_deterministic(p)
}

fn stochastic_vi(
    p: &PlanningProblem,
    mode: SweepMode,
    tol: f64,
) -> Result<(ExpectedCosts, PlannerStats), PlanError> {
    let n = p.num_states();
    // start from zero everywhere; costs are positive, so values rise
    // monotonically to the fixed point
    let mut values = vec![0.0f64; n];
    let mut stats = PlannerStats::default();
    loop {
        if stats.sweeps >= MAX_SWEEPS {
            return Err(PlanError::MaxSweepsExceeded(MAX_SWEEPS));
        }
        stats.sweeps += 1;
        let snapshot = match mode {
            SweepMode::Synchronous => Some(values.clone()),
            SweepMode::Asynchronous => None,
        };
        let mut residual = 0.0f64;
        for x in 0..n {
            if p.is_goal(StateId(x)) {
                continue;
            }
            stats.backups += 1;
            let read = |s: StateId| snapshot.as_ref().unwrap_or(&values)[s.0];
            let mut best = f64::INFINITY;
            for (u, _, cost) in p.transitions(StateId(x)) {
                stats.simulated_actions += 1;
                let dist = stochastic_outcomes(p, StateId(x), u).expect("valid pair");
                let q = rational_to_f64(cost) + dist.expectation(read);
                if q < best {
                    best = q;
                }
            }
            residual = residual.max((best - values[x]).abs());
            values[x] = best;
        }
        if residual < tol {
            stats.residual = residual;
            break;
        }
    }
    Ok((ExpectedCosts { values }, stats))
}

/// Dijkstra's algorithm; produces the same exact table as value
/// iteration on any deterministic problem, with fewer backups.
pub fn dijkstra(p: &PlanningProblem) -> Result<(ValueTable, PlannerStats), PlanError> {
    if !p.is_deterministic() {
        return Err(PlanError::StochasticProblem);
    }
    let n = p.num_states();
    // reverse adjacency: settled states relax their predecessors
    let mut incoming: Vec<Vec<(usize, Rational64)>> = vec![Vec::new(); n];
    for x in 0..n {
        for (u, succ, cost) in p.transitions(StateId(x)) {
            if !u.is_terminate() {
                incoming[succ.0].push((x, cost));
            }
        }
    }
    let mut values = init_deterministic(p);
    let mut settled = vec![false; n];
    let mut stats = PlannerStats::default();
    let mut heap: BinaryHeap<Reverse<(Rational64, usize)>> = p
        .goals()
        .iter()
        .map(|g| Reverse((Rational64::zero(), g.0)))
        .collect();
    while let Some(Reverse((d, x))) = heap.pop() {
        if settled[x] {
            continue;
        }
        settled[x] = true;
        stats.backups += 1;
        for &(pred, cost) in &incoming[x] {
            stats.simulated_actions += 1;
            let candidate = Value::Finite(d + cost);
            if candidate < values[pred] {
                values[pred] = candidate;
                if let Value::Finite(v) = candidate {
                    heap.push(Reverse((v, pred)));
                }
            }
        }
    }
    Ok((ValueTable { values }, stats))
}

/// Greedy policy of a cost-to-go table: argmin over U(x) of the one-step
/// backup, ties broken by lowest action id. Goals pick the termination
/// action because it is the unique zero-cost backup there.
pub fn extract_policy(p: &PlanningProblem, g: &CostToGo) -> Policy {
    let actions = p
        .states()
        .map(|x| match g {
            CostToGo::Exact(t) => {
                argmin_exact(p, x, t)
            }
            CostToGo::Expected(t) => {
                argmin_expected(p, x, t)
            }
        })
        .collect();
    Policy { actions }
}

fn argmin_exact(p: &PlanningProblem, x: StateId, t: &ValueTable) -> ActionId {
    let mut best: Option<(Value, ActionId)> = None;
    for (u, succ, cost) in p.transitions(x) {
        let q = t.value(succ).plus(cost);
        let better = match best {
            None => true,
            Some((bq, bu)) => q < bq || (q == bq && u < bu),
        };
        if better {
            best = Some((q, u));
        }
    }
    best.expect("every state has at least one action").1
}

fn argmin_expected(p: &PlanningProblem, x: StateId, t: &ExpectedCosts) -> ActionId {
    let mut best: Option<(f64, ActionId)> = None;
    for (u, succ, cost) in p.transitions(x) {
        let q = if u.is_terminate() {
            rational_to_f64(cost) + t.value(succ)
        } else {
            let dist = stochastic_outcomes(p, x, u).expect("valid pair");
            rational_to_f64(cost) + dist.expectation(|s| t.value(s))
        };
        let better = match best {
            None => true,
            Some((bq, bu)) => q < bq || (q == bq && u < bu),
        };
        if better {
            best = Some((q, u));
        }
    }
    best.expect("every state has at least one action").1
}

/// Cost of rolling a policy out from `x`, or `NonTerminating` if a state
/// repeats before termination (a cycle means infinite true cost).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyCost {
    Finite(Rational64),
    NonTerminating,
}

/// Deterministic rollout of a fixed policy.
pub fn evaluate_policy(
    p: &PlanningProblem,
    pi: &Policy,
    x: StateId,
    max_steps: usize,
) -> PolicyCost {
    let mut visited = vec![false; p.num_states()];
    let mut cur = x;
    let mut total = Rational64::zero();
    for _ in 0..max_steps {
        let u = pi.action(cur);
        if u.is_terminate() {
            return PolicyCost::Finite(total);
        }
        if visited[cur.0] {
            return PolicyCost::NonTerminating;
        }
        visited[cur.0] = true;
        total += p.step_cost(cur, u).expect("policy action in U(x)");
        cur = p.successor(cur, u).expect("policy action in U(x)");
    }
    PolicyCost::NonTerminating
}
