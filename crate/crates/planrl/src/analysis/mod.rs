//! Analytical results and their oracles: cost/reward duality, the
//! discount trap, and the episodic reset-bonus equivalence.

mod cycles;
mod discount;
mod duality;
mod reset;
mod sequences;

pub use cycles::{goal_free_min_mean_cycle, goal_free_min_mean_cycle_exhaustive};
pub use discount::{
    build_discount_trap_problem, discount_trap_report, discounted_value_iteration,
    locate_discount_threshold, Cycle, DiscountReport, DiscountedSolution, DOWN, UP,
};
pub use duality::verify_cost_reward_duality;
pub use reset::{
    average_cost_optimal_policy_bruteforce, check_instance_against_oracle, policy_asymptotics,
    reset_average_cost, tiny_instance, tiny_instance_count, BruteForceResult, InstanceCheck,
    MSample, PolicyAsymptotics, ORACLE_MAX_STATES,
};
pub use sequences::{
    constraint_a, enumerate_goal_sequences, m_interval, reset_bonus_tie_point, ActionSequence,
    MInterval, MAX_SEQUENCES,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("goal-sequence enumeration exceeded {limit} sequences")]
    ExplosionGuard { limit: usize },
    #[error("sequence has zero total cost")]
    ZeroCostSequence,
    #[error("no action sequence reaches the goal from the initial state")]
    NoGoalSequence,
    #[error("problem has {states} states, the exhaustive oracle handles at most {max}")]
    TooManyStates { states: usize, max: usize },
    #[error("analysis requires a single goal state, found {count}")]
    MultipleGoals { count: usize },
}
