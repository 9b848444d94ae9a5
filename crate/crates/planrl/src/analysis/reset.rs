//! Ground-truth machinery for the episodic equivalence: exhaustive
//! stationary-policy search on the reset-augmented system, and an
//! enumerable family of tiny problems to sweep it over.

use super::sequences::MInterval;
use super::AnalysisError;
use crate::dp::{dijkstra, extract_policy, CostToGo, Policy, Value};
use crate::mdp::{ActionId, PlanningProblem, StateId};
use num_rational::Rational64;
use serde::Serialize;

/// State cap for exhaustive policy enumeration.
pub const ORACLE_MAX_STATES: usize = 12;

/// Long-run behavior of a stationary policy on the reset-augmented
/// system: it settles into either a cycle through the goal (whose
/// average depends on the bonus M) or a goal-free cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyAsymptotics {
    /// Cycle that enters the goal once and resets: raw cost and step
    /// count of the cycle, bonus excluded.
    GoalCycle { cost: Rational64, steps: usize },
    /// Cycle that never touches the goal.
    PlainCycle { mean: Rational64 },
}

impl PolicyAsymptotics {
    /// Asymptotic average cost per step under reset bonus `m`.
    pub fn average(self, m: Rational64) -> Rational64 {
        match self {
            PolicyAsymptotics::GoalCycle { cost, steps } => {
                (cost + m) / Rational64::from_integer(steps as i64)
            }
            PolicyAsymptotics::PlainCycle { mean } => mean,
        }
    }
}

/// Rolls a policy out from the initial state on the reset-augmented
/// system (entering the goal costs the step plus M and teleports back to
/// the initial state) and classifies its limit cycle.
pub fn policy_asymptotics(
    p: &PlanningProblem,
    pi: &Policy,
    horizon: usize,
) -> PolicyAsymptotics {
    let goal_mask: Vec<bool> = p.states().map(|x| p.is_goal(x)).collect();
    let x_init = p.initial();
    assert!(!goal_mask[x_init.0], "reset dynamics need a non-goal initial state");

    // (state) determines the future, so the first revisited state closes
    // the limit cycle
    let mut seen_at = vec![usize::MAX; p.num_states()];
    let mut steps: Vec<(Rational64, bool)> = Vec::new(); // (cost, entered goal)
    let mut cur = x_init;
    for _ in 0..horizon {
        if seen_at[cur.0] != usize::MAX {
            let start = seen_at[cur.0];
            let cycle = &steps[start..];
            let cost: Rational64 = cycle.iter().map(|&(c, _)| c).sum();
            let goal_entries = cycle.iter().filter(|&&(_, g)| g).count();
            return if goal_entries > 0 {
                debug_assert_eq!(goal_entries, 1);
                PolicyAsymptotics::GoalCycle { cost, steps: cycle.len() }
            } else {
                PolicyAsymptotics::PlainCycle { mean: cost / Rational64::from_integer(cycle.len() as i64) }
            };
        }
        seen_at[cur.0] = steps.len();
        let u = pi.action(cur);
        let cost = p.step_cost(cur, u).expect("policy action is valid");
        let mut next = p.successor(cur, u).expect("policy action is valid");
        let entered_goal = goal_mask[next.0];
        if entered_goal {
            next = x_init;
        }
        steps.push((cost, entered_goal));
        cur = next;
    }
    unreachable!("a deterministic rollout revisits a state within |X|+1 steps");
}

/// Exact asymptotic average cost of one policy under reset bonus `m`.
pub fn reset_average_cost(p: &PlanningProblem, pi: &Policy, m: Rational64, horizon: usize) -> Rational64 {
    policy_asymptotics(p, pi, horizon).average(m)
}

pub struct BruteForceResult {
    pub policy: Policy,
    pub average: Rational64,
}

/// Enumerates every stationary policy (goals pinned to termination),
/// rolls each out on the reset-augmented system, and returns the one
/// with the lowest asymptotic average cost under bonus `m`. Ties go to
/// the earliest policy in lexicographic action order.
pub fn average_cost_optimal_policy_bruteforce(
    p: &PlanningProblem,
    m: Rational64,
    horizon: usize,
) -> Result<BruteForceResult, AnalysisError> {
    if p.num_states() > ORACLE_MAX_STATES {
        return Err(AnalysisError::TooManyStates { states: p.num_states(), max: ORACLE_MAX_STATES });
    }
    let horizon = horizon.max(p.num_states() + 1);
    let mut best: Option<BruteForceResult> = None;
    for_each_policy(p, &mut |pi| {
        let avg = policy_asymptotics(p, pi, horizon).average(m);
        if best.as_ref().map_or(true, |b| avg < b.average) {
            best = Some(BruteForceResult { policy: pi.clone(), average: avg });
        }
    });
    Ok(best.expect("every problem admits at least one policy"))
}

/// Visits all stationary policies in lexicographic order of per-state
/// action positions.
fn for_each_policy(p: &PlanningProblem, f: &mut impl FnMut(&Policy)) {
    let n = p.num_states();
    let choices: Vec<Vec<ActionId>> = p
        .states()
        .map(|x| {
            if p.is_goal(x) {
                vec![ActionId::TERMINATE]
            } else {
                p.actions(x).to_vec()
            }
        })
        .collect();
    let mut picks = vec![0usize; n];
    loop {
        let actions = (0..n).map(|x| choices[x][picks[x]]).collect();
        let pi = Policy::new(actions);
        f(&pi);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            picks[i] += 1;
            if picks[i] < choices[i].len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
    }
}

/// One sampled bonus value of an instance check.
#[derive(Clone, Debug, Serialize)]
pub struct MSample {
    pub m: Rational64,
    pub inside: bool,
    pub optimal_policy_is_average_optimal: bool,
    pub agrees: bool,
}

/// Interval-versus-oracle verdict for one instance.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceCheck {
    pub interval: MInterval,
    pub samples: Vec<MSample>,
    pub all_agree: bool,
}

/// Samples bonuses strictly inside and strictly outside the interval
/// (up to five each, skipping tie boundaries) and checks each against
/// the exhaustive policy oracle.
pub fn check_instance_against_oracle(
    p: &PlanningProblem,
    max_len: usize,
) -> Result<InstanceCheck, AnalysisError> {
    let interval = super::sequences::m_interval(p, max_len)?;
    let (table, _) = dijkstra(p).expect("deterministic problem");
    debug_assert!(table.value(p.initial()) != Value::Unreachable);
    let pi_star = extract_policy(p, &CostToGo::Exact(table));
    let star = policy_asymptotics(p, &pi_star, p.num_states() + 1);

    let mut samples = Vec::new();
    for m in sample_bonuses(&interval) {
        let inside = interval.strictly_inside(m);
        debug_assert!(!interval.on_boundary(m));
        let best = average_cost_optimal_policy_bruteforce(p, m, p.num_states() + 1)?;
        let star_is_optimal = star.average(m) == best.average;
        samples.push(MSample {
            m,
            inside,
            optimal_policy_is_average_optimal: star_is_optimal,
            agrees: star_is_optimal == inside,
        });
    }
    let all_agree = samples.iter().all(|s| s.agrees);
    Ok(InstanceCheck { interval, samples, all_agree })
}

/// Up to five strictly inside and five strictly outside values.
fn sample_bonuses(interval: &MInterval) -> Vec<Rational64> {
    let one = Rational64::from_integer(1);
    let mut ms = Vec::new();
    if !interval.is_empty() {
        match (interval.lower, interval.upper) {
            (Some(lo), Some(hi)) => {
                if lo < hi {
                    let span = hi - lo;
                    for k in 1..=5 {
                        ms.push(lo + span * Rational64::new(k, 6));
                    }
                }
                // lo == hi leaves no strict interior
            }
            (Some(lo), None) => (1..=5).for_each(|k| ms.push(lo + Rational64::from_integer(k))),
            (None, Some(hi)) => (1..=5).for_each(|k| ms.push(hi - Rational64::from_integer(k))),
            (None, None) => (-2..=2).for_each(|k| ms.push(Rational64::from_integer(k))),
        }
    }
    // alternate below-lower and above-upper offsets, up to five total
    let below: Vec<Rational64> = interval
        .lower
        .map(|lo| (1..=5).map(|k| lo - Rational64::from_integer(k) * one).collect())
        .unwrap_or_default();
    let above: Vec<Rational64> = interval
        .upper
        .map(|hi| (1..=5).map(|k| hi + Rational64::from_integer(k) * one).collect())
        .unwrap_or_default();
    let mut outside = Vec::new();
    for k in 0..5 {
        if let Some(&m) = below.get(k) {
            outside.push(m);
        }
        if let Some(&m) = above.get(k) {
            outside.push(m);
        }
    }
    ms.extend(outside.into_iter().take(5));
    ms
}

/// Size of the tiny-instance family on `n` states.
pub fn tiny_instance_count(n: usize) -> u64 {
    let per_state = per_state_option_count(n);
    per_state.pow((n - 1) as u32)
}

fn per_state_option_count(n: usize) -> u64 {
    let singles = 3 * n as u64;
    singles + singles * (singles - 1) / 2
}

/// Decodes one member of the family of connected problems on `n` states
/// (initial state 0, single goal n-1 carrying only the termination
/// action, one or two actions per other state, successors anywhere,
/// costs in {1, 2, 3}). Returns `None` when the decoded candidate is not
/// connected (some state unreachable from the initial state).
pub fn tiny_instance(n: usize, index: u64) -> Option<PlanningProblem> {
    assert!((2..=5).contains(&n), "family is defined for 2 to 5 states");
    let per_state = per_state_option_count(n);
    let singles = 3 * n as u64;
    let mut b = PlanningProblem::builder(n).initial(StateId(0));
    let mut rest = index;
    for x in 0..n - 1 {
        let opt = rest % per_state;
        rest /= per_state;
        let decode = |o: u64| {
            let succ = StateId((o / 3) as usize);
            let cost = Rational64::from_integer((o % 3) as i64 + 1);
            (succ, cost)
        };
        if opt < singles {
            let (succ, cost) = decode(opt);
            b = b.action(StateId(x), ActionId(0), succ, cost);
        } else {
            // canonical ordered pair o1 < o2
            let mut pair = opt - singles;
            let mut o1 = 0u64;
            let mut remaining = singles - 1;
            while pair >= remaining {
                pair -= remaining;
                o1 += 1;
                remaining -= 1;
            }
            let o2 = o1 + 1 + pair;
            let (s1, c1) = decode(o1);
            let (s2, c2) = decode(o2);
            b = b.action(StateId(x), ActionId(0), s1, c1);
            b = b.action(StateId(x), ActionId(1), s2, c2);
        }
    }
    let p = b.goal(StateId(n - 1)).build().expect("decoded instance is structurally valid");
    all_states_reachable(&p).then_some(p)
}

fn all_states_reachable(p: &PlanningProblem) -> bool {
    let mut seen = vec![false; p.num_states()];
    let mut stack = vec![p.initial()];
    seen[p.initial().0] = true;
    while let Some(x) = stack.pop() {
        for (u, succ, _) in p.transitions(x) {
            if !u.is_terminate() && !seen[succ.0] {
                seen[succ.0] = true;
                stack.push(succ);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
