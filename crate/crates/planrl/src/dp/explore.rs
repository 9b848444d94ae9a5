//! Two-phase model-free planning support: physically explore a hidden
//! deterministic problem through a black-box interface, reconstruct the
//! model, then plan on the reconstruction.

use crate::mdp::{ActionId, PlanningProblem, StateId};
use num_rational::Rational64;
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExploreError {
    #[error("exploration stalled: {untried} state-action pairs remain but none is reachable by walking")]
    NotStronglyConnected { untried: usize },
}

/// Black-box view of a hidden deterministic problem. The robot can reset
/// to the initial state, sense which actions exist at its current state,
/// apply one, and observe an opaque token identifying the state it lands
/// in. Jumping moves it to a previously observed state directly.
pub trait BlackBoxEnv {
    type Obs: Clone + Eq + std::hash::Hash;

    /// Places the robot at the initial state.
    fn reset(&mut self) -> Self::Obs;
    /// Action set of the current state.
    fn actions(&self) -> Vec<ActionId>;
    /// Applies an action; returns the observation of the next state and
    /// the incurred cost.
    fn step(&mut self, u: ActionId) -> (Self::Obs, Rational64);
    /// Places the robot at a previously observed state.
    fn jump(&mut self, target: &Self::Obs);
}

/// Black box over an in-memory problem; observations are the true state
/// ids, opaque to the explorer.
pub struct SimulatedEnv<'a> {
    problem: &'a PlanningProblem,
    current: StateId,
}

impl<'a> SimulatedEnv<'a> {
    pub fn new(problem: &'a PlanningProblem) -> SimulatedEnv<'a> {
        assert!(problem.is_deterministic(), "exploration assumes a deterministic problem");
        SimulatedEnv { problem, current: problem.initial() }
    }
}

impl BlackBoxEnv for SimulatedEnv<'_> {
    type Obs = StateId;

    fn reset(&mut self) -> StateId {
        self.current = self.problem.initial();
        self.current
    }

    fn actions(&self) -> Vec<ActionId> {
        self.problem.actions(self.current).to_vec()
    }

    fn step(&mut self, u: ActionId) -> (StateId, Rational64) {
        let cost = self.problem.step_cost(self.current, u).expect("sensed action");
        self.current = self.problem.successor(self.current, u).expect("sensed action");
        (self.current, cost)
    }

    fn jump(&mut self, target: &StateId) {
        self.current = *target;
    }
}

/// Result of an exploration run. States of the reconstructed problem are
/// numbered by discovery order; `observations[i]` is the token the
/// hidden problem produced for reconstructed state `i`.
pub struct Exploration<O> {
    pub problem: PlanningProblem,
    pub observations: Vec<O>,
    /// Environment steps taken, termination probes included.
    pub physical_actions: u64,
    /// Direct placements used (jump mode only).
    pub jumps: u64,
}

struct Known {
    actions: Vec<ActionId>,
    tried: Vec<bool>,
    succ: Vec<usize>,
    cost: Vec<Rational64>,
}

impl Known {
    fn new(actions: Vec<ActionId>) -> Known {
        let n = actions.len();
        Known { actions, tried: vec![false; n], succ: vec![usize::MAX; n], cost: vec![Rational64::default(); n] }
    }

    fn untried(&self) -> Option<usize> {
        self.tried.iter().position(|&t| !t)
    }
}

/// Discovers the entire hidden graph by trying every state-action pair
/// once. With `allow_jump` each pair is probed via direct placement;
/// without it the robot walks along already-known edges to reach untried
/// pairs, and every walked step counts as a physical action.
pub fn model_free_explore<E: BlackBoxEnv>(
    env: &mut E,
    allow_jump: bool,
) -> Result<Exploration<E::Obs>, ExploreError> {
    let mut index: HashMap<E::Obs, usize> = HashMap::new();
    let mut observations: Vec<E::Obs> = Vec::new();
    let mut known: Vec<Known> = Vec::new();
    let mut physical_actions = 0u64;
    let mut jumps = 0u64;

    let start = env.reset();
    index.insert(start.clone(), 0);
    observations.push(start);
    known.push(Known::new(env.actions()));
    let mut current = 0usize;

    loop {
        let remaining: usize = known.iter().map(|s| s.tried.iter().filter(|&&t| !t).count()).sum();
        if remaining == 0 {
            break;
        }
        let x = if known[current].untried().is_some() {
            current
        } else if allow_jump {
            let x = known
                .iter()
                .position(|st| st.untried().is_some())
                .expect("remaining > 0");
            env.jump(&observations[x]);
            jumps += 1;
            x
        } else {
            let (x, path) = walk_to_untried(&known, current)
                .ok_or(ExploreError::NotStronglyConnected { untried: remaining })?;
            for step_k in path {
                env.step(known[current].actions[step_k]);
                physical_actions += 1;
                current = known[current].succ[step_k];
            }
            debug_assert_eq!(current, x);
            x
        };

        let k = known[x].untried().expect("x was chosen with an untried pair");
        let u = known[x].actions[k];
        let (obs, cost) = env.step(u);
        physical_actions += 1;
        let next = match index.get(&obs) {
            Some(&i) => i,
            None => {
                let i = known.len();
                index.insert(obs.clone(), i);
                observations.push(obs);
                known.push(Known::new(env.actions()));
                i
            }
        };
        known[x].tried[k] = true;
        known[x].succ[k] = next;
        known[x].cost[k] = cost;
        current = next;
    }

    let mut b = PlanningProblem::builder(known.len()).initial(StateId(0));
    for (x, st) in known.iter().enumerate() {
        for (k, &u) in st.actions.iter().enumerate() {
            if !u.is_terminate() {
                b = b.action(StateId(x), u, StateId(st.succ[k]), st.cost[k]);
            }
        }
        if st.actions.contains(&ActionId::TERMINATE) {
            b = b.goal(StateId(x));
        }
    }
    let problem = b.build().expect("reconstruction of a valid problem is valid");
    Ok(Exploration { problem, observations, physical_actions, jumps })
}

/// BFS over tried edges from `from` to the nearest state holding an
/// untried pair. Returns that state and the action positions to walk.
fn walk_to_untried(known: &[Known], from: usize) -> Option<(usize, Vec<usize>)> {
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; known.len()];
    let mut seen = vec![false; known.len()];
    let mut queue = VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(x) = queue.pop_front() {
        if known[x].untried().is_some() {
            let mut path = Vec::new();
            let mut cur = x;
            while cur != from {
                let (p, k) = pred[cur].unwrap();
                path.push(k);
                cur = p;
            }
            path.reverse();
            return Some((x, path));
        }
        for (k, &tried) in known[x].tried.iter().enumerate() {
            if tried {
                let next = known[x].succ[k];
                if !seen[next] {
                    seen[next] = true;
                    pred[next] = Some((x, k));
                    queue.push_back(next);
                }
            }
        }
    }
    None
}
