//! Tabular Q-learning over planning problems: the stochastic update, its
//! derandomized rho = 1 form, epsilon-greedy action selection with random
//! or pi-digit exploration plans, and the episodic execution loop.

mod pi4;

pub use pi4::{pi_base4_digit, DIGIT_BUDGET};

use crate::dp::{CostToGo, ExpectedCosts};
use crate::harness::TrialMetrics;
use crate::mdp::{rational_to_f64, sample_transition, ActionId, PlanningProblem, StateId};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// Rollout length cap; reported as-is when the greedy policy never
/// reaches the goal.
pub const PATH_CAP: u64 = 100_002;

#[derive(Debug, Error, PartialEq)]
pub enum QlearnError {
    #[error("state-action pair ({state}, {action}) is not in the table")]
    InvalidPair { state: StateId, action: ActionId },
    #[error("exploration digit {index} exceeds the budget of {budget}")]
    DigitBudgetExceeded { index: usize, budget: usize },
    #[error("invalid learner config: {0}")]
    InvalidConfig(String),
}

/// Learning-rate schedule: a fixed rho, or rho = 1 / n(x,u)^omega.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSchedule {
    Constant(f64),
    Decay(f64),
}

impl RhoSchedule {
    /// Learning rate for the `n`-th visit (the count includes the
    /// current visit, so n >= 1).
    pub fn rate(self, n: u64) -> f64 {
        debug_assert!(n >= 1);
        match self {
            RhoSchedule::Constant(rho) => rho,
            RhoSchedule::Decay(omega) => (n as f64).powf(-omega),
        }
    }
}

pub fn learning_rate(cfg: &LearnerConfig, n: u64) -> f64 {
    cfg.rho.rate(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorationPlan {
    Random,
    PiBase4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub epsilon: f64,
    pub rho: RhoSchedule,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_steps")]
    pub steps_per_episode: usize,
    #[serde(default = "default_plan")]
    pub exploration_plan: ExplorationPlan,
    pub seed: u64,
    #[serde(default)]
    pub q_init: Rational64,
}

fn default_episodes() -> usize {
    1000
}

fn default_steps() -> usize {
    3000
}

fn default_plan() -> ExplorationPlan {
    ExplorationPlan::Random
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), QlearnError> {
        let bad = |m: String| Err(QlearnError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        match self.rho {
            RhoSchedule::Constant(r) if !(r > 0.0 && r <= 1.0) => {
                return bad(format!("rho must lie in (0, 1], got {r}"));
            }
            RhoSchedule::Decay(w) if !(w > 0.0) => {
                return bad(format!("decay exponent must be positive, got {w}"));
            }
            _ => {}
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if self.steps_per_episode == 0 {
            return bad("steps per episode must be at least 1".into());
        }
        Ok(())
    }
}

/// Q-values and visit counts, defined exactly on the problem's
/// state-action pairs and aligned with each U(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    q: Vec<Vec<f64>>,
    n: Vec<Vec<u64>>,
}

impl QTable {
    /// Table initialized to `q_init` on every pair, except the goals'
    /// termination entries which are pinned at 0.
    pub fn new(p: &PlanningProblem, q_init: Rational64) -> QTable {
        let init = rational_to_f64(q_init);
        let q = p
            .states()
            .map(|x| {
                p.actions(x)
                    .iter()
                    .map(|u| if u.is_terminate() { 0.0 } else { init })
                    .collect()
            })
            .collect();
        let n = p.states().map(|x| vec![0u64; p.actions(x).len()]).collect();
        QTable { q, n }
    }

    fn pos(&self, p: &PlanningProblem, x: StateId, u: ActionId) -> Result<usize, QlearnError> {
        p.actions(x)
            .iter()
            .position(|&a| a == u)
            .ok_or(QlearnError::InvalidPair { state: x, action: u })
    }

    pub fn q(&self, p: &PlanningProblem, x: StateId, u: ActionId) -> Result<f64, QlearnError> {
        Ok(self.q[x.0][self.pos(p, x, u)?])
    }

    pub fn visits(&self, p: &PlanningProblem, x: StateId, u: ActionId) -> Result<u64, QlearnError> {
        Ok(self.n[x.0][self.pos(p, x, u)?])
    }

    /// min over U(x) of q(x, u).
    pub fn min_q(&self, x: StateId) -> f64 {
        self.q[x.0].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Greedy action: argmin of q(x, .), ties to the lowest action id.
    /// At a goal this is the termination action.
    pub fn greedy_action(&self, p: &PlanningProblem, x: StateId) -> ActionId {
        if p.is_goal(x) {
            return ActionId::TERMINATE;
        }
        let mut best: Option<(f64, ActionId)> = None;
        for (k, &u) in p.actions(x).iter().enumerate() {
            let q = self.q[x.0][k];
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

    pub fn total_visits(&self) -> u64 {
        self.n.iter().flatten().sum()
    }
}

/// One Q-backup: q(x,u) <- (1-rho) q(x,u) + rho (cost + min q(x',.)).
/// Increments the pair's visit count and returns the new entry value.
/// rho = 1 is the derandomized update.
pub fn q_update(
    qt: &mut QTable,
    p: &PlanningProblem,
    x: StateId,
    u: ActionId,
    cost: Rational64,
    x_next: StateId,
    rho: f64,
) -> Result<f64, QlearnError> {
    let k = qt.pos(p, x, u)?;
    let target = rational_to_f64(cost) + qt.min_q(x_next);
    let updated = if rho == 1.0 {
        target
    } else {
        (1.0 - rho) * qt.q[x.0][k] + rho * target
    };
    qt.q[x.0][k] = updated;
    qt.n[x.0][k] += 1;
    Ok(updated)
}

/// Cursor into the exploration plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PlanState {
    Random,
    PiBase4 { cursor: usize },
}

impl PlanState {
    pub fn new(plan: ExplorationPlan) -> PlanState {
        match plan {
            ExplorationPlan::Random => PlanState::Random,
            ExplorationPlan::PiBase4 => PlanState::PiBase4 { cursor: 0 },
        }
    }
}

/// Epsilon-greedy selection. The epsilon coin and the exploration draw
/// come from two separate streams so that changing epsilon never shifts
/// the environment noise. Greedy selection at a goal returns the
/// termination action.
pub fn select_action(
    p: &PlanningProblem,
    qt: &QTable,
    x: StateId,
    epsilon: f64,
    plan: &mut PlanState,
    coin_rng: &mut impl Rng,
    explore_rng: &mut impl Rng,
) -> Result<ActionId, QlearnError> {
    let explore = coin_rng.gen::<f64>() < epsilon;
    if !explore {
        return Ok(qt.greedy_action(p, x));
    }
    let actions = p.actions(x);
    let k = match plan {
        PlanState::Random => explore_rng.gen_range(0..actions.len()),
        PlanState::PiBase4 { cursor } => {
            let digit = pi_base4_digit(*cursor).ok_or(QlearnError::DigitBudgetExceeded {
                index: *cursor,
                budget: DIGIT_BUDGET,
            })?;
            *cursor += 1;
            digit as usize % actions.len()
        }
    };
    Ok(actions[k])
}

/// What happened in one episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub steps: u32,
    pub goal_reached: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnRunResult {
    pub q_table: QTable,
    pub metrics: TrialMetrics,
    pub episodes: Vec<EpisodeTrace>,
}

/// Runs the episodic learning loop: each episode resets to the initial
/// state and applies select/step/update until the goal is entered (the
/// termination entry stays pinned at zero and the episode ends) or the
/// step cap is hit. Convergence metrics are judged against `oracle` when
/// it is supplied: exactly (1e-9 relative) on deterministic problems,
/// within 10 percent relative on stochastic ones.
pub fn run_qlearning(
    p: &PlanningProblem,
    cfg: &LearnerConfig,
    oracle: Option<&CostToGo>,
) -> Result<LearnRunResult, QlearnError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut qt = QTable::new(p, cfg.q_init);
    let mut plan = PlanState::new(cfg.exploration_plan);
    let mut coin_rng = stream_rng(cfg.seed, 0);
    let mut explore_rng = stream_rng(cfg.seed, 1);
    let mut env_rng = stream_rng(cfg.seed, 2);

    let rel_tol = if p.is_deterministic() { 1e-9 } else { 0.10 };
    let oracle_at = |x: StateId| oracle.map(|o| o.value_f64(x));
    let matches = |v: f64, target: f64| {
        if !target.is_finite() {
            false
        } else if target == 0.0 {
            v == 0.0
        } else {
            (v - target).abs() <= rel_tol * target.abs()
        }
    };

    let x_init = p.initial();
    let init_target = oracle_at(x_init);
    let mut action_count = 0u64;
    let mut discover_goal: Option<u64> = None;
    let mut initial_ctg: Option<u64> = None;
    let mut episodes = Vec::with_capacity(cfg.episodes);

    for _ in 0..cfg.episodes {
        let mut x = x_init;
        let mut steps = 0u32;
        let mut goal_reached = p.is_goal(x);
        while !goal_reached && (steps as usize) < cfg.steps_per_episode {
            let u = select_action(p, &qt, x, cfg.epsilon, &mut plan, &mut coin_rng, &mut explore_rng)?;
            let x_next = sample_transition(p, x, u, &mut env_rng).expect("selected action is valid");
            let cost = p.step_cost(x, u).expect("selected action is valid");
            let n_next = qt.visits(p, x, u)? + 1;
            let rho = cfg.rho.rate(n_next);
            q_update(&mut qt, p, x, u, cost, x_next, rho)?;
            action_count += 1;
            steps += 1;
            if p.is_goal(x_next) {
                goal_reached = true;
                if discover_goal.is_none() {
                    discover_goal = Some(action_count);
                }
            }
            if initial_ctg.is_none() && x == x_init {
                if let Some(target) = init_target {
                    if matches(qt.min_q(x_init), target) {
                        initial_ctg = Some(action_count);
                    }
                }
            }
            x = x_next;
        }
        episodes.push(EpisodeTrace { steps, goal_reached });
    }

    let converged_whole_space = match oracle {
        Some(o) => p.states().all(|x| matches(qt.min_q(x), o.value_f64(x))),
        None => false,
    };

    let mut eval_rng = stream_rng(cfg.seed, 3);
    let path_len = greedy_rollout_length(p, &qt, &mut eval_rng);

    let metrics = TrialMetrics {
        wall_time_s: started.elapsed().as_secs_f64(),
        action_count,
        converged_whole_space,
        initial_ctg_converged: initial_ctg.is_some(),
        discover_goal_action_index: discover_goal,
        initial_ctg_action_index: initial_ctg,
        shortest_path: Some(path_len),
        longest_path: Some(path_len),
    };
    Ok(LearnRunResult { q_table: qt, metrics, episodes })
}

/// Length of the greedy rollout from the initial state, capped at
/// `PATH_CAP`.
pub fn greedy_rollout_length(p: &PlanningProblem, qt: &QTable, rng: &mut impl Rng) -> u64 {
    let mut x = p.initial();
    let mut len = 0u64;
    while len < PATH_CAP {
        if p.is_goal(x) {
            return len;
        }
        let u = qt.greedy_action(p, x);
        x = if p.is_deterministic() {
            p.successor(x, u).expect("greedy action is valid")
        } else {
            sample_transition(p, x, u, rng).expect("greedy action is valid")
        };
        len += 1;
    }
    PATH_CAP
}

/// Collapses a Q-table to state values via G(x) = min over U(x) of q(x,u).
pub fn q_to_value(qt: &QTable, p: &PlanningProblem) -> ExpectedCosts {
    ExpectedCosts::from_values(p.states().map(|x| qt.min_q(x)).collect())
}

/// The three learner streams (epsilon coin, exploration draw,
/// environment noise) and the evaluation stream are independent
/// substreams of the trial seed.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
