//! Planning-problem model: states, actions, deterministic and stochastic
//! transition semantics, and trajectory cost functionals.

mod grid;

pub use grid::{parse_grid_map, serialize_grid_map, GridMeta, MapError};

use num_rational::Rational64;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense state index in `[0, num_states)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub usize);

impl std::fmt::Display for StateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Action index. On grids 0-3 are N, E, S, W; `TERMINATE` is a reserved
/// sentinel that sorts after every movement action, so lowest-id tie
/// breaking never prefers it over a move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub u8);

impl ActionId {
    pub const NORTH: ActionId = ActionId(0);
    pub const EAST: ActionId = ActionId(1);
    pub const SOUTH: ActionId = ActionId(2);
    pub const WEST: ActionId = ActionId(3);
    pub const TERMINATE: ActionId = ActionId(u8::MAX);

    pub fn is_terminate(self) -> bool {
        self == ActionId::TERMINATE
    }
}

impl std::fmt::Display for ActionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ActionId::NORTH => write!(f, "N"),
            ActionId::EAST => write!(f, "E"),
            ActionId::SOUTH => write!(f, "S"),
            ActionId::WEST => write!(f, "W"),
            ActionId::TERMINATE => write!(f, "T"),
            ActionId(k) => write!(f, "a{k}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("action {action} is not available in state {state}")]
    InvalidAction { state: StateId, action: ActionId },
    #[error("trajectory is inconsistent with the model: {0}")]
    InconsistentTrajectory(String),
    #[error("trajectory has no actions")]
    EmptyTrajectory,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// A finite shortest-path planning problem: state set, per-state action
/// sets, a successor function, one initial state, goal states carrying a
/// zero-cost self-loop termination action, and strictly positive step
/// costs everywhere else. `gamma` is the predictability factor of the
/// stochastic transition model; `gamma == 1` marks the problem
/// deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningProblem {
    num_states: usize,
    actions: Vec<Vec<ActionId>>,
    successors: Vec<Vec<StateId>>,
    costs: Vec<Vec<Rational64>>,
    initial: StateId,
    goals: Vec<StateId>,
    goal_mask: Vec<bool>,
    gamma: f64,
    grid: Option<GridMeta>,
}

impl PlanningProblem {
    pub fn builder(num_states: usize) -> ProblemBuilder {
        ProblemBuilder {
            num_states,
            actions: vec![Vec::new(); num_states],
            successors: vec![Vec::new(); num_states],
            costs: vec![Vec::new(); num_states],
            initial: None,
            goals: Vec::new(),
            gamma: 1.0,
            grid: None,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states).map(StateId)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn goals(&self) -> &[StateId] {
        &self.goals
    }

    pub fn is_goal(&self, x: StateId) -> bool {
        self.goal_mask[x.0]
    }

    /// Ordered action set U(x).
    pub fn actions(&self, x: StateId) -> &[ActionId] {
        &self.actions[x.0]
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_deterministic(&self) -> bool {
        self.gamma == 1.0
    }

    pub fn grid(&self) -> Option<&GridMeta> {
        self.grid.as_ref()
    }

    /// Total number of state-action pairs, termination actions included.
    pub fn pair_count(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    fn action_pos(&self, x: StateId, u: ActionId) -> Result<usize, ModelError> {
        self.actions[x.0]
            .iter()
            .position(|&a| a == u)
            .ok_or(ModelError::InvalidAction { state: x, action: u })
    }

    pub fn successor(&self, x: StateId, u: ActionId) -> Result<StateId, ModelError> {
        Ok(self.successors[x.0][self.action_pos(x, u)?])
    }

    pub fn step_cost(&self, x: StateId, u: ActionId) -> Result<Rational64, ModelError> {
        Ok(self.costs[x.0][self.action_pos(x, u)?])
    }

    /// Successors and costs indexed in U(x) order, for planners that
    /// iterate the whole action set.
    pub fn transitions(&self, x: StateId) -> impl Iterator<Item = (ActionId, StateId, Rational64)> + '_ {
        let i = x.0;
        self.actions[i]
            .iter()
            .zip(&self.successors[i])
            .zip(&self.costs[i])
            .map(|((&u, &s), &c)| (u, s, c))
    }

    /// Returns a copy of the problem with a different predictability
    /// factor. `gamma == 1` yields the deterministic model.
    pub fn with_predictability(&self, gamma: f64) -> Result<PlanningProblem, ModelError> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(ModelError::InvalidProblem(format!(
                "predictability factor must lie in (0, 1], got {gamma}"
            )));
        }
        let mut p = self.clone();
        p.gamma = gamma;
        Ok(p)
    }
}

pub struct ProblemBuilder {
    num_states: usize,
    actions: Vec<Vec<ActionId>>,
    successors: Vec<Vec<StateId>>,
    costs: Vec<Vec<Rational64>>,
    initial: Option<StateId>,
    goals: Vec<StateId>,
    gamma: f64,
    grid: Option<GridMeta>,
}

impl ProblemBuilder {
    pub fn action(mut self, x: StateId, u: ActionId, succ: StateId, cost: Rational64) -> Self {
        self.actions[x.0].push(u);
        self.successors[x.0].push(succ);
        self.costs[x.0].push(cost);
        self
    }

    pub fn initial(mut self, x: StateId) -> Self {
        self.initial = Some(x);
        self
    }

    /// Marks `g` as a goal and installs its zero-cost termination self-loop.
    pub fn goal(mut self, g: StateId) -> Self {
        self.goals.push(g);
        self.actions[g.0].push(ActionId::TERMINATE);
        self.successors[g.0].push(g);
        self.costs[g.0].push(Rational64::zero());
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub(crate) fn grid(mut self, grid: GridMeta) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn build(self) -> Result<PlanningProblem, ModelError> {
        let err = |m: String| Err(ModelError::InvalidProblem(m));
        if self.num_states == 0 {
            return err("problem has no states".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return err(format!("predictability factor must lie in (0, 1], got {}", self.gamma));
        }
        let initial = match self.initial {
            Some(x) if x.0 < self.num_states => x,
            Some(x) => return err(format!("initial state {x} out of range")),
            None => return err("no initial state".into()),
        };
        if self.goals.is_empty() {
            return err("no goal states".into());
        }
        let mut goal_mask = vec![false; self.num_states];
        for &g in &self.goals {
            if g.0 >= self.num_states {
                return err(format!("goal state {g} out of range"));
            }
            goal_mask[g.0] = true;
        }
        for x in 0..self.num_states {
            let mut seen = Vec::new();
            for (k, &u) in self.actions[x].iter().enumerate() {
                if seen.contains(&u) {
                    return err(format!("duplicate action {u} in state {x}"));
                }
                seen.push(u);
                let succ = self.successors[x][k];
                if succ.0 >= self.num_states {
                    return err(format!("successor {succ} of ({x}, {u}) out of range"));
                }
                let cost = self.costs[x][k];
                if u.is_terminate() {
                    if !goal_mask[x] {
                        return err(format!("termination action in non-goal state {x}"));
                    }
                    if succ.0 != x || !cost.is_zero() {
                        return err(format!("termination at {x} must be a zero-cost self-loop"));
                    }
                } else if cost <= Rational64::zero() {
                    return err(format!("step cost of ({x}, {u}) must be strictly positive"));
                }
            }
            if !goal_mask[x] && self.actions[x].iter().all(|u| u.is_terminate()) {
                return err(format!("non-goal state {x} has no actions"));
            }
        }
        for &g in &self.goals {
            if !self.actions[g.0].contains(&ActionId::TERMINATE) {
                return err(format!("goal state {g} lacks a termination action"));
            }
        }
        Ok(PlanningProblem {
            num_states: self.num_states,
            actions: self.actions,
            successors: self.successors,
            costs: self.costs,
            initial,
            goals: self.goals,
            goal_mask,
            gamma: self.gamma,
            grid: self.grid,
        })
    }
}

/// Successor distribution of one state-action pair, in construction
/// order: intended successor first, then the alternative outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    outcomes: Vec<(StateId, f64)>,
}

impl OutcomeDistribution {
    pub fn outcomes(&self) -> &[(StateId, f64)] {
        &self.outcomes
    }

    pub fn expectation(&self, value: impl Fn(StateId) -> f64) -> f64 {
        self.outcomes.iter().map(|&(s, p)| p * value(s)).sum()
    }
}

/// Successor distribution under predictability factor gamma: the intended
/// successor f(x,u) receives mass gamma; the remaining mass is split over
/// one slot per alternative action in U(x) plus one state-holding slot,
/// merging slots that land on the same state (duplicates merge into the
/// intended successor as well).
pub fn stochastic_outcomes(
    p: &PlanningProblem,
    x: StateId,
    u: ActionId,
) -> Result<OutcomeDistribution, ModelError> {
    if u.is_terminate() {
        return Err(ModelError::InvalidAction { state: x, action: u });
    }
    let intended = p.successor(x, u)?;
    let gamma = p.gamma();
    let mut outcomes = vec![(intended, gamma)];
    if gamma < 1.0 {
        // one slot per action in U(x): the alternatives U(x)\{u} plus the
        // slot where nature holds the state constant
        let m = p.actions(x).len();
        let slot = (1.0 - gamma) / m as f64;
        let mut add = |s: StateId| {
            match outcomes.iter_mut().find(|(t, _)| *t == s) {
                Some((_, mass)) => *mass += slot,
                None => outcomes.push((s, slot)),
            }
        };
        for (a, succ, _) in p.transitions(x) {
            if a != u {
                add(succ);
            }
        }
        add(x);
    }
    Ok(OutcomeDistribution { outcomes })
}

/// Draws a successor by inverse CDF over the outcome list in
/// construction order.
pub fn sample_transition(
    p: &PlanningProblem,
    x: StateId,
    u: ActionId,
    rng: &mut impl Rng,
) -> Result<StateId, ModelError> {
    if p.is_deterministic() {
        if u.is_terminate() {
            return Err(ModelError::InvalidAction { state: x, action: u });
        }
        return p.successor(x, u);
    }
    let dist = stochastic_outcomes(p, x, u)?;
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for &(s, mass) in dist.outcomes() {
        acc += mass;
        if draw < acc {
            return Ok(s);
        }
    }
    Ok(dist.outcomes().last().unwrap().0)
}

/// A state/action/cost sequence consistent with the deterministic model.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    states: Vec<StateId>,
    actions: Vec<ActionId>,
    costs: Vec<Rational64>,
}

impl Trajectory {
    /// Builds the trajectory obtained by applying `actions` in order from
    /// `origin`, filling in states and per-step costs from the model.
    pub fn from_actions(
        p: &PlanningProblem,
        origin: StateId,
        actions: &[ActionId],
    ) -> Result<Trajectory, ModelError> {
        let mut states = vec![origin];
        let mut costs = Vec::with_capacity(actions.len());
        let mut cur = origin;
        for &u in actions {
            costs.push(p.step_cost(cur, u)?);
            cur = p.successor(cur, u)?;
            states.push(cur);
        }
        Ok(Trajectory { states, actions: actions.to_vec(), costs })
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn costs(&self) -> &[Rational64] {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn last_state(&self) -> StateId {
        *self.states.last().unwrap()
    }

    fn check_consistency(&self, p: &PlanningProblem) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InconsistentTrajectory(m));
        if self.states.len() != self.actions.len() + 1 || self.costs.len() != self.actions.len() {
            return bad("length mismatch between states, actions and costs".into());
        }
        for (k, &u) in self.actions.iter().enumerate() {
            let x = self.states[k];
            match p.successor(x, u) {
                Ok(s) if s == self.states[k + 1] => {}
                Ok(s) => return bad(format!("step {k}: expected successor {s}, got {}", self.states[k + 1])),
                Err(e) => return bad(format!("step {k}: {e}")),
            }
            if p.step_cost(x, u).unwrap() != self.costs[k] {
                return bad(format!("step {k}: recorded cost differs from the model"));
            }
        }
        Ok(())
    }
}

/// Stage-additive total cost of a trajectory. Termination steps cost 0,
/// so anything after the first terminate contributes nothing.
pub fn trajectory_cost(p: &PlanningProblem, t: &Trajectory) -> Result<Rational64, ModelError> {
    t.check_consistency(p)?;
    Ok(t.costs.iter().sum())
}

/// Discounted cost sum_{k=0}^{K} alpha^k l(x_k, u_k), truncated to the
/// trajectory length. `horizon` is the inclusive last stage index.
pub fn discounted_cost(
    p: &PlanningProblem,
    t: &Trajectory,
    alpha: f64,
    horizon: usize,
) -> Result<f64, ModelError> {
    t.check_consistency(p)?;
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let mut sum = 0.0;
    let mut weight = 1.0;
    for cost in t.costs.iter().take(horizon + 1) {
        sum += weight * rational_to_f64(*cost);
        weight *= alpha;
    }
    Ok(sum)
}

/// Finite-horizon estimator of the asymptotic average cost: the mean
/// step cost over the trajectory's actions.
pub fn truncated_average_cost(p: &PlanningProblem, t: &Trajectory) -> Result<Rational64, ModelError> {
    t.check_consistency(p)?;
    if t.is_empty() {
        return Err(ModelError::EmptyTrajectory);
    }
    let total: Rational64 = t.costs.iter().sum();
    Ok(total / Rational64::from_integer(t.len() as i64))
}

pub(crate) fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn parse_line_world() {
        let p = parse_grid_map("S.G").unwrap();
        assert_eq!(p.num_states(), 3);
        assert_eq!(p.initial(), StateId(0));
        assert_eq!(p.goals(), &[StateId(2)]);
        assert_eq!(p.actions(StateId(1)), &[ActionId::EAST, ActionId::WEST]);
        assert_eq!(p.actions(StateId(0)), &[ActionId::EAST]);
        assert_eq!(p.actions(StateId(2)), &[ActionId::WEST, ActionId::TERMINATE]);
    }

    #[test]
    fn parse_adjacent_goal() {
        let p = parse_grid_map("SG").unwrap();
        assert_eq!(p.num_states(), 2);
    }

    #[test]
    fn obstacle_is_not_a_state() {
        let p = parse_grid_map("S#G").unwrap();
        assert_eq!(p.num_states(), 2);
        assert_eq!(p.actions(StateId(0)), &[] as &[ActionId; 0] as &[ActionId]);
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert_eq!(
            parse_grid_map("S.G\n..").unwrap_err(),
            MapError::NonRectangular { line: 2, got: 2, expected: 3 }
        );
        assert_eq!(parse_grid_map("..G").unwrap_err(), MapError::NoStart);
        assert_eq!(
            parse_grid_map("S.S\n..G").unwrap_err(),
            MapError::MultipleStart { line: 1, col: 3 }
        );
        assert_eq!(parse_grid_map("S..").unwrap_err(), MapError::NoGoal);
        assert_eq!(
            parse_grid_map("S?G").unwrap_err(),
            MapError::InvalidChar { line: 1, col: 2, ch: '?' }
        );
    }

    #[test]
    fn corpus_round_trips_through_the_serializer() {
        for (name, text) in crate::corpus::MAPS {
            let p = parse_grid_map(text).unwrap();
            assert_eq!(serialize_grid_map(&p).unwrap(), text, "{name}");
        }
    }

    #[test]
    fn deterministic_outcomes_are_a_point_mass() {
        let p = parse_grid_map("S.G").unwrap();
        let d = stochastic_outcomes(&p, StateId(0), ActionId::EAST).unwrap();
        assert_eq!(d.outcomes(), &[(StateId(1), 1.0)]);
    }

    #[test]
    fn interior_cell_spreads_uniformly() {
        // open 3x3 room around an interior cell with all four moves
        let p = parse_grid_map("#####\n#...#\n#S.G#\n#...#\n#####")
            .unwrap()
            .with_predictability(0.7)
            .unwrap();
        let interior = p.grid().unwrap().state_at(2, 2).unwrap();
        assert_eq!(p.actions(interior).len(), 4);
        let d = stochastic_outcomes(&p, interior, ActionId::NORTH).unwrap();
        let north = p.successor(interior, ActionId::NORTH).unwrap();
        assert_eq!(d.outcomes().len(), 5);
        for &(s, mass) in d.outcomes() {
            if s == north {
                assert!((mass - 0.7).abs() < 1e-12);
            } else {
                assert!((mass - 0.075).abs() < 1e-12);
            }
        }
        assert!(d.outcomes().iter().any(|&(s, _)| s == interior));
    }

    #[test]
    fn corner_cell_spreads_over_two_slots() {
        let p = parse_grid_map("S.\n.G").unwrap().with_predictability(0.5).unwrap();
        let corner = p.initial();
        assert_eq!(p.actions(corner), &[ActionId::EAST, ActionId::SOUTH]);
        let d = stochastic_outcomes(&p, corner, ActionId::EAST).unwrap();
        let east = p.successor(corner, ActionId::EAST).unwrap();
        let south = p.successor(corner, ActionId::SOUTH).unwrap();
        let mass_of = |x: StateId| {
            d.outcomes().iter().find(|&&(s, _)| s == x).map(|&(_, m)| m).unwrap()
        };
        assert!((mass_of(east) - 0.5).abs() < 1e-12);
        assert!((mass_of(south) - 0.25).abs() < 1e-12);
        assert!((mass_of(corner) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn outcome_masses_sum_to_one_without_zeros() {
        for gamma in [0.3, 0.5, 0.9, 0.999, 1.0] {
            for (_, base) in crate::corpus::all_problems() {
                let p = base.with_predictability(gamma).unwrap();
                for x in p.states().take(40) {
                    for &u in p.actions(x) {
                        if u.is_terminate() {
                            continue;
                        }
                        let d = stochastic_outcomes(&p, x, u).unwrap();
                        let total: f64 = d.outcomes().iter().map(|&(_, m)| m).sum();
                        assert!((total - 1.0).abs() < 1e-12);
                        assert!(d.outcomes().iter().all(|&(_, m)| m > 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn terminate_is_not_sampleable() {
        let p = parse_grid_map("SG").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_transition(&p, StateId(1), ActionId::TERMINATE, &mut rng).unwrap_err();
        assert_eq!(err, ModelError::InvalidAction { state: StateId(1), action: ActionId::TERMINATE });
    }

    #[test]
    fn sampling_is_deterministic_under_a_fixed_seed() {
        let p = parse_grid_map("#####\n#...#\n#S.G#\n#...#\n#####")
            .unwrap()
            .with_predictability(0.6)
            .unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut x = p.initial();
            let mut seq = Vec::new();
            for _ in 0..50 {
                let u = p.actions(x)[0];
                if u.is_terminate() {
                    break;
                }
                x = sample_transition(&p, x, u, &mut rng).unwrap();
                seq.push(x);
            }
            seq
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sampling_frequency_matches_the_distribution() {
        let p = parse_grid_map("#####\n#...#\n#S.G#\n#...#\n#####")
            .unwrap()
            .with_predictability(0.7)
            .unwrap();
        let interior = p.grid().unwrap().state_at(2, 2).unwrap();
        let north = p.successor(interior, ActionId::NORTH).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut hits = 0;
        for _ in 0..n {
            if sample_transition(&p, interior, ActionId::NORTH, &mut rng).unwrap() == north {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.7).abs() < 0.01, "intended frequency {freq}");
    }

    #[test]
    fn unit_cost_path_costs_its_length() {
        let p = parse_grid_map("S..G").unwrap();
        let t = Trajectory::from_actions(
            &p,
            p.initial(),
            &[ActionId::EAST, ActionId::EAST, ActionId::EAST, ActionId::TERMINATE],
        )
        .unwrap();
        assert_eq!(trajectory_cost(&p, &t).unwrap(), rat(3));
    }

    #[test]
    fn empty_trajectory_costs_nothing() {
        let p = parse_grid_map("S.G").unwrap();
        let t = Trajectory::from_actions(&p, p.initial(), &[]).unwrap();
        assert_eq!(trajectory_cost(&p, &t).unwrap(), rat(0));
        assert_eq!(truncated_average_cost(&p, &t).unwrap_err(), ModelError::EmptyTrajectory);
    }

    #[test]
    fn chain_goal_trajectory_costs_fifteen() {
        let p = crate::analysis::build_discount_trap_problem();
        let up = crate::analysis::UP;
        let t = Trajectory::from_actions(&p, p.initial(), &[up, up, up, up, up]).unwrap();
        assert_eq!(trajectory_cost(&p, &t).unwrap(), rat(15));
    }

    #[test]
    fn discounted_cost_on_the_chain() {
        let p = crate::analysis::build_discount_trap_problem();
        let up = crate::analysis::UP;
        let t = Trajectory::from_actions(&p, p.initial(), &[up, up, up, up, up]).unwrap();
        // sum over i of 0.9^i (i + 1)
        let expected = 1.0 + 0.9 * 2.0 + 0.81 * 3.0 + 0.729 * 4.0 + 0.6561 * 5.0;
        assert!((expected - 11.4265).abs() < 1e-12);
        assert!((discounted_cost(&p, &t, 0.9, 100).unwrap() - expected).abs() < 1e-12);
        assert!((discounted_cost(&p, &t, 0.9, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discounted_constant_costs_approach_the_geometric_limit() {
        // looping at chain state 0 costs 1 per step
        let p = crate::analysis::build_discount_trap_problem();
        let down = crate::analysis::DOWN;
        let actions = vec![down; 400];
        let t = Trajectory::from_actions(&p, p.initial(), &actions).unwrap();
        let v = discounted_cost(&p, &t, 0.9, 399).unwrap();
        assert!((v - 10.0).abs() < 1e-12, "partial sum {v} vs 1/(1-0.9)");
    }

    #[test]
    fn truncated_average_of_constant_costs() {
        let p = crate::analysis::build_discount_trap_problem();
        let down = crate::analysis::DOWN;
        for n in [1usize, 7, 50] {
            let t = Trajectory::from_actions(&p, p.initial(), &vec![down; n]).unwrap();
            assert_eq!(truncated_average_cost(&p, &t).unwrap(), rat(1));
        }
    }

    #[test]
    fn truncated_average_mixes_step_costs() {
        // alternate between states 0 and 1 on the chain: costs 1, 2, 1, 2, ...
        let p = crate::analysis::build_discount_trap_problem();
        let (up, down) = (crate::analysis::UP, crate::analysis::DOWN);
        let t = Trajectory::from_actions(&p, p.initial(), &[up, down]).unwrap();
        assert_eq!(truncated_average_cost(&p, &t).unwrap(), Rational64::new(3, 2));
    }

    #[test]
    fn long_cycle_average_approaches_the_cycle_mean() {
        let p = crate::analysis::build_discount_trap_problem();
        let (up, down) = (crate::analysis::UP, crate::analysis::DOWN);
        let n_cycles = 200usize;
        let mut actions = Vec::new();
        for _ in 0..n_cycles {
            actions.push(up);
            actions.push(down);
        }
        let t = Trajectory::from_actions(&p, p.initial(), &actions).unwrap();
        let avg = truncated_average_cost(&p, &t).unwrap();
        let mean = Rational64::new(3, 2);
        let err = (avg - mean).abs();
        assert!(err <= Rational64::new(1, (2 * n_cycles) as i64), "error {err}");
    }

    #[test]
    fn inconsistent_trajectories_are_rejected() {
        let p = parse_grid_map("S.G").unwrap();
        let t = Trajectory {
            states: vec![StateId(0), StateId(2)],
            actions: vec![ActionId::EAST],
            costs: vec![Rational64::one()],
        };
        assert!(matches!(trajectory_cost(&p, &t), Err(ModelError::InconsistentTrajectory(_))));
    }

    #[test]
    fn builder_rejects_zero_cost_moves_and_misplaced_termination() {
        let err = PlanningProblem::builder(2)
            .initial(StateId(0))
            .action(StateId(0), ActionId(0), StateId(1), rat(0))
            .goal(StateId(1))
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::InvalidProblem(_)));
    }
}
