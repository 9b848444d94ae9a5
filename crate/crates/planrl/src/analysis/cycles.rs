//! Minimum mean-weight cycles of the goal-free portion of a problem:
//! Karp's recurrence for graphs of any size, plus an exhaustive simple-
//! cycle enumerator used as an oracle at small scale.

use crate::mdp::{PlanningProblem, StateId};
use num_rational::Rational64;
use std::collections::VecDeque;

/// Edge list of the subgraph induced by the states reachable from the
/// initial state without entering a goal. Returns (node ids, edges as
/// (from, to, cost) over compact indices).
fn goal_free_subgraph(p: &PlanningProblem) -> (Vec<StateId>, Vec<(usize, usize, Rational64)>) {
    let mut compact = vec![usize::MAX; p.num_states()];
    let mut nodes = Vec::new();
    if p.is_goal(p.initial()) {
        return (nodes, Vec::new());
    }
    let mut queue = VecDeque::new();
    compact[p.initial().0] = 0;
    nodes.push(p.initial());
    queue.push_back(p.initial());
    while let Some(x) = queue.pop_front() {
        for (u, succ, _) in p.transitions(x) {
            if u.is_terminate() || p.is_goal(succ) {
                continue;
            }
            if compact[succ.0] == usize::MAX {
                compact[succ.0] = nodes.len();
                nodes.push(succ);
                queue.push_back(succ);
            }
        }
    }
    let mut edges = Vec::new();
    for (i, &x) in nodes.iter().enumerate() {
        for (u, succ, cost) in p.transitions(x) {
            if u.is_terminate() || p.is_goal(succ) {
                continue;
            }
            edges.push((i, compact[succ.0], cost));
        }
    }
    (nodes, edges)
}

/// Minimum mean edge cost over all cycles avoiding the goal and
/// reachable from the initial state, by Karp's recurrence. `None` when
/// that subgraph is acyclic.
pub fn goal_free_min_mean_cycle(p: &PlanningProblem) -> Option<Rational64> {
    let (nodes, edges) = goal_free_subgraph(p);
    let n = nodes.len();
    if n == 0 {
        return None;
    }
    // d[k][v]: minimum cost of a walk with exactly k edges ending at v,
    // from any start (d[0] = 0 everywhere)
    let mut d: Vec<Vec<Option<Rational64>>> = vec![vec![None; n]; n + 1];
    for v in 0..n {
        d[0][v] = Some(Rational64::from_integer(0));
    }
    for k in 1..=n {
        for &(a, b, w) in &edges {
            if let Some(da) = d[k - 1][a] {
                let cand = da + w;
                if d[k][b].map_or(true, |cur| cand < cur) {
                    d[k][b] = Some(cand);
                }
            }
        }
    }
    let mut best: Option<Rational64> = None;
    for v in 0..n {
        let Some(dn) = d[n][v] else { continue };
        let mut worst: Option<Rational64> = None;
        for k in 0..n {
            if let Some(dk) = d[k][v] {
                let mean = (dn - dk) / Rational64::from_integer((n - k) as i64);
                if worst.map_or(true, |w| mean > w) {
                    worst = Some(mean);
                }
            }
        }
        if let Some(w) = worst {
            if best.map_or(true, |b| w < b) {
                best = Some(w);
            }
        }
    }
    best
}

/// Exhaustive version over all simple cycles; oracle-scale graphs only.
pub fn goal_free_min_mean_cycle_exhaustive(p: &PlanningProblem) -> Option<Rational64> {
    let (nodes, edges) = goal_free_subgraph(p);
    let n = nodes.len();
    assert!(n <= 16, "exhaustive cycle search is for tiny graphs");
    let mut adj: Vec<Vec<(usize, Rational64)>> = vec![Vec::new(); n];
    for &(a, b, w) in &edges {
        adj[a].push((b, w));
    }
    // each simple cycle is found once, rooted at its smallest vertex
    fn dfs(
        root: usize,
        v: usize,
        depth: usize,
        cost: Rational64,
        adj: &[Vec<(usize, Rational64)>],
        on_path: &mut [bool],
        best: &mut Option<Rational64>,
    ) {
        on_path[v] = true;
        for &(w, wcost) in &adj[v] {
            if w == root {
                let mean = (cost + wcost) / Rational64::from_integer((depth + 1) as i64);
                if best.map_or(true, |b| mean < b) {
                    *best = Some(mean);
                }
            } else if w > root && !on_path[w] {
                dfs(root, w, depth + 1, cost + wcost, adj, on_path, best);
            }
        }
        on_path[v] = false;
    }
    let mut best = None;
    let mut on_path = vec![false; n];
    for root in 0..n {
        dfs(root, root, 0, Rational64::from_integer(0), &adj, &mut on_path, &mut best);
    }
    best
}
