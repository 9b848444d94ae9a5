//! Seeded multi-trial experiment runner: runs an algorithm `trials`
//! times against one problem, judges convergence against a cached
//! value-iteration oracle, and aggregates appendix-table style metrics.

use crate::analysis::build_discount_trap_problem;
use crate::corpus;
use crate::dp::{
    dijkstra, extract_policy, model_free_explore, value_iteration, CostToGo, ExpectedCosts,
    PlanError, Policy, SimulatedEnv, SweepMode, DEFAULT_VI_TOL,
};
use crate::mdp::{
    parse_grid_map, sample_transition, MapError, ModelError, PlanningProblem, StateId,
};
use crate::qlearn::{run_qlearning, LearnerConfig, QlearnError, PATH_CAP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot load problem: {0}")]
    ProblemLoad(String),
    #[error("oracle failed: {0}")]
    OracleFailure(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Qlearn(#[from] QlearnError),
    #[error("csv: {0}")]
    Csv(String),
}

/// Problem source: a map file on disk or a built-in name (the corpus
/// maps plus the six-state discount chain as "trap").
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemRef {
    Map(String),
    Builtin(String),
}

impl ProblemRef {
    pub fn id(&self) -> String {
        match self {
            ProblemRef::Map(path) => path.clone(),
            ProblemRef::Builtin(name) => name.clone(),
        }
    }

    pub fn load(&self) -> Result<PlanningProblem, HarnessError> {
        match self {
            ProblemRef::Map(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| HarnessError::ProblemLoad(format!("{path}: {e}")))?;
                Ok(parse_grid_map(&text)?)
            }
            ProblemRef::Builtin(name) if name == "trap" => Ok(build_discount_trap_problem()),
            ProblemRef::Builtin(name) => corpus::problem(name)
                .ok_or_else(|| HarnessError::ProblemLoad(format!("unknown builtin '{name}'")))?
                .map_err(HarnessError::from),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Dijkstra,
    ViSync,
    ViAsync,
    ModelFreeDijkstra,
    ModelFreeVi,
    Qlearn(LearnerConfig),
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Dijkstra => "dijkstra",
            AlgorithmSpec::ViSync => "vi-sync",
            AlgorithmSpec::ViAsync => "vi-async",
            AlgorithmSpec::ModelFreeDijkstra => "model-free-dijkstra",
            AlgorithmSpec::ModelFreeVi => "model-free-vi",
            AlgorithmSpec::Qlearn(_) => "qlearn",
        }
    }
}

fn default_gamma() -> f64 {
    1.0
}

fn default_trials() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemRef,
    pub algorithm: AlgorithmSpec,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
}

/// Measurements of one trial. Counts are in actions: physical
/// environment steps for the learning and model-free algorithms, and
/// per-action backup evaluations for the model-based planners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub wall_time_s: f64,
    pub action_count: u64,
    pub converged_whole_space: bool,
    pub initial_ctg_converged: bool,
    pub discover_goal_action_index: Option<u64>,
    pub initial_ctg_action_index: Option<u64>,
    pub shortest_path: Option<u64>,
    pub longest_path: Option<u64>,
}

/// Aggregated experiment result: one row of the appendix-style tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub algorithm: String,
    pub epsilon: Option<f64>,
    pub rho: Option<String>,
    pub gamma: f64,
    pub runtime_mean: f64,
    pub runtime_std: f64,
    pub actions_mean: f64,
    pub actions_std: f64,
    pub convergence_pct: f64,
    pub discover_mean: f64,
    pub discover_std: f64,
    pub init_ctg_time_mean: f64,
    pub init_ctg_time_std: f64,
    pub init_ctg_pct: f64,
    pub shortest: Option<u64>,
    pub longest: Option<u64>,
    pub problem: String,
    pub trials: usize,
}

impl Report {
    /// Equality that treats NaN aggregates as equal to themselves and
    /// ignores nothing else.
    pub fn same_as(&self, other: &Report) -> bool {
        fn feq(a: f64, b: f64) -> bool {
            a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()) || a == b
        }
        fn oeq(a: Option<f64>, b: Option<f64>) -> bool {
            match (a, b) {
                (Some(a), Some(b)) => feq(a, b),
                (None, None) => true,
                _ => false,
            }
        }
        self.algorithm == other.algorithm
            && oeq(self.epsilon, other.epsilon)
            && self.rho == other.rho
            && feq(self.gamma, other.gamma)
            && feq(self.runtime_mean, other.runtime_mean)
            && feq(self.runtime_std, other.runtime_std)
            && feq(self.actions_mean, other.actions_mean)
            && feq(self.actions_std, other.actions_std)
            && feq(self.convergence_pct, other.convergence_pct)
            && feq(self.discover_mean, other.discover_mean)
            && feq(self.discover_std, other.discover_std)
            && feq(self.init_ctg_time_mean, other.init_ctg_time_mean)
            && feq(self.init_ctg_time_std, other.init_ctg_time_std)
            && feq(self.init_ctg_pct, other.init_ctg_pct)
            && self.shortest == other.shortest
            && self.longest == other.longest
            && self.problem == other.problem
            && self.trials == other.trials
    }
}

/// splitmix64 finalizer over `base_seed + (trial + 1) * golden`, so trial
/// seeds are reproducible in any language from the documented formula.
pub fn split_seed(base_seed: u64, trial: u64) -> u64 {
    let mut z = base_seed.wrapping_add((trial + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type OracleKey = (String, u64);

/// Cache of value-iteration oracles keyed by (problem id, gamma bits).
/// Within one sweep, repeated keys share the same table.
#[derive(Default)]
pub struct OracleCache {
    inner: Mutex<HashMap<OracleKey, Arc<CostToGo>>>,
}

impl OracleCache {
    pub fn new() -> OracleCache {
        OracleCache::default()
    }

    pub fn oracle(
        &self,
        id: &str,
        p: &PlanningProblem,
    ) -> Result<Arc<CostToGo>, HarnessError> {
        let key = (id.to_string(), p.gamma().to_bits());
        if let Some(found) = self.inner.lock().unwrap().get(&key) {
            return Ok(found.clone());
        }
        let solved = if p.is_deterministic() {
            let (t, _) = dijkstra(p)?;
            CostToGo::Exact(t)
        } else {
            let (t, _) = value_iteration(p, SweepMode::Asynchronous, DEFAULT_VI_TOL)?;
            t
        };
        let arc = Arc::new(solved);
        let mut guard = self.inner.lock().unwrap();
        Ok(guard.entry(key).or_insert(arc).clone())
    }
}

/// Runs one experiment: `trials` independent seeded trials of the
/// configured algorithm, aggregated with the unbiased (n-1) estimator.
pub fn run_experiment(cfg: &ExperimentConfig, cache: &OracleCache) -> Result<Report, HarnessError> {
    if cfg.trials == 0 {
        return Err(HarnessError::ProblemLoad("trials must be at least 1".into()));
    }
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(HarnessError::ProblemLoad(format!(
            "gamma must lie in (0, 1], got {}",
            cfg.gamma
        )));
    }
    let problem = cfg.problem.load()?.with_predictability(cfg.gamma)?;
    let oracle = cache
        .oracle(&cfg.problem.id(), &problem)
        .map_err(|e| HarnessError::OracleFailure(e.to_string()))?;

    let metrics: Result<Vec<TrialMetrics>, HarnessError> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = split_seed(cfg.base_seed, trial as u64);
            run_trial(&problem, &cfg.algorithm, seed, &oracle)
        })
        .collect();
    let metrics = metrics?;
    Ok(aggregate(cfg, &metrics))
}

fn run_trial(
    p: &PlanningProblem,
    algo: &AlgorithmSpec,
    seed: u64,
    oracle: &CostToGo,
) -> Result<TrialMetrics, HarnessError> {
    match algo {
        AlgorithmSpec::Qlearn(base) => {
            let mut cfg = base.clone();
            cfg.seed = seed;
            Ok(run_qlearning(p, &cfg, Some(oracle))?.metrics)
        }
        AlgorithmSpec::Dijkstra => {
            let started = Instant::now();
            let (table, stats) = dijkstra(p)?;
            let solved = CostToGo::Exact(table);
            let converged = table_matches(p, &solved, oracle);
            Ok(planner_metrics(p, &solved, stats.simulated_actions, converged, seed, started))
        }
        AlgorithmSpec::ViSync | AlgorithmSpec::ViAsync => {
            let mode = if matches!(algo, AlgorithmSpec::ViSync) {
                SweepMode::Synchronous
            } else {
                SweepMode::Asynchronous
            };
            let started = Instant::now();
            let (solved, stats) = value_iteration(p, mode, DEFAULT_VI_TOL)?;
            let converged = table_matches(p, &solved, oracle);
            Ok(planner_metrics(p, &solved, stats.simulated_actions, converged, seed, started))
        }
        AlgorithmSpec::ModelFreeDijkstra | AlgorithmSpec::ModelFreeVi => {
            let started = Instant::now();
            let mut env = SimulatedEnv::new(p);
            let exploration = model_free_explore(&mut env, true)
                .map_err(|e| HarnessError::ProblemLoad(e.to_string()))?;
            let rec = &exploration.problem;
            let rec_solved = match algo {
                AlgorithmSpec::ModelFreeDijkstra => CostToGo::Exact(dijkstra(rec)?.0),
                _ => value_iteration(rec, SweepMode::Synchronous, DEFAULT_VI_TOL)?.0,
            };
            // translate the reconstruction's values back onto true ids
            // before comparing with the oracle
            let mut values = vec![f64::INFINITY; p.num_states()];
            for (i, obs) in exploration.observations.iter().enumerate() {
                values[obs.0] = rec_solved.value_f64(StateId(i));
            }
            let translated = CostToGo::Expected(ExpectedCosts::from_values(values));
            let converged = table_matches(p, &translated, oracle);
            Ok(planner_metrics(rec, &rec_solved, exploration.physical_actions, converged, seed, started))
        }
    }
}

/// Rollout-based metrics shared by the model-based and model-free
/// planner trials.
fn planner_metrics(
    p: &PlanningProblem,
    solved: &CostToGo,
    action_count: u64,
    converged: bool,
    seed: u64,
    started: Instant,
) -> TrialMetrics {
    let policy = extract_policy(p, solved);
    let mut eval_rng = ChaCha8Rng::seed_from_u64(seed);
    eval_rng.set_stream(3);
    let len = rollout_policy_length(p, &policy, &mut eval_rng);
    TrialMetrics {
        wall_time_s: started.elapsed().as_secs_f64(),
        action_count,
        converged_whole_space: converged,
        initial_ctg_converged: converged,
        discover_goal_action_index: None,
        initial_ctg_action_index: None,
        shortest_path: Some(len),
        longest_path: Some(len),
    }
}

fn table_matches(p: &PlanningProblem, got: &CostToGo, oracle: &CostToGo) -> bool {
    let rel_tol = if p.is_deterministic() { 1e-9 } else { 0.10 };
    p.states().all(|x| {
        let target = oracle.value_f64(x);
        let v = got.value_f64(x);
        if target.is_infinite() {
            v.is_infinite()
        } else if target == 0.0 {
            v == 0.0
        } else {
            (v - target).abs() <= rel_tol * target.abs()
        }
    })
}

fn rollout_policy_length(
    p: &PlanningProblem,
    pi: &Policy,
    rng: &mut ChaCha8Rng,
) -> u64 {
    let mut x = p.initial();
    let mut len = 0u64;
    while len < PATH_CAP {
        if p.is_goal(x) {
            return len;
        }
        let u = pi.action(x);
        if u.is_terminate() {
            return len;
        }
        x = if p.is_deterministic() {
            p.successor(x, u).expect("policy action is valid")
        } else {
            sample_transition(p, x, u, rng).expect("policy action is valid")
        };
        len += 1;
    }
    PATH_CAP
}

fn mean_std(samples: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = samples.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = samples.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn aggregate(cfg: &ExperimentConfig, metrics: &[TrialMetrics]) -> Report {
    let n = metrics.len();
    let (runtime_mean, runtime_std) = mean_std(metrics.iter().map(|m| m.wall_time_s));
    let (actions_mean, actions_std) = mean_std(metrics.iter().map(|m| m.action_count as f64));
    let discovered: Vec<f64> = metrics
        .iter()
        .filter_map(|m| m.discover_goal_action_index)
        .map(|v| v as f64)
        .collect();
    let (discover_mean, discover_std) = mean_std(discovered.iter().copied());
    let init_hits: Vec<f64> = metrics
        .iter()
        .filter_map(|m| m.initial_ctg_action_index)
        .map(|v| v as f64)
        .collect();
    let (init_mean, init_std) = mean_std(init_hits.iter().copied());
    let pct = |count: usize| 100.0 * count as f64 / n as f64;
    let (epsilon, rho) = match &cfg.algorithm {
        AlgorithmSpec::Qlearn(c) => (
            Some(c.epsilon),
            Some(match c.rho {
                crate::qlearn::RhoSchedule::Constant(r) => format!("{r}"),
                crate::qlearn::RhoSchedule::Decay(w) => format!("decay({w})"),
            }),
        ),
        _ => (None, None),
    };
    Report {
        algorithm: cfg.algorithm.name().to_string(),
        epsilon,
        rho,
        gamma: cfg.gamma,
        runtime_mean,
        runtime_std,
        actions_mean,
        actions_std,
        convergence_pct: pct(metrics.iter().filter(|m| m.converged_whole_space).count()),
        discover_mean,
        discover_std,
        init_ctg_time_mean: init_mean,
        init_ctg_time_std: init_std,
        init_ctg_pct: pct(metrics.iter().filter(|m| m.initial_ctg_converged).count()),
        shortest: metrics.iter().filter_map(|m| m.shortest_path).min(),
        longest: metrics.iter().filter_map(|m| m.longest_path).max(),
        problem: cfg.problem.id(),
        trials: n,
    }
}

/// Runs a grid of experiments, possibly concurrently, preserving input
/// order in the output and isolating per-config failures.
pub fn run_sweep(
    configs: &[ExperimentConfig],
    threads: Option<usize>,
) -> Vec<Result<Report, HarnessError>> {
    let cache = OracleCache::new();
    let work = || {
        configs
            .par_iter()
            .map(|cfg| run_experiment(cfg, &cache))
            .collect::<Vec<_>>()
    };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

fn parse_f64(s: &str) -> Result<f64, HarnessError> {
    if s == "nan" {
        Ok(f64::NAN)
    } else {
        s.parse().map_err(|e| HarnessError::Csv(format!("bad float '{s}': {e}")))
    }
}

pub const CSV_HEADER: [&str; 18] = [
    "algorithm",
    "epsilon",
    "rho",
    "gamma",
    "runtime_mean",
    "runtime_std",
    "actions_mean",
    "actions_std",
    "convergence_pct",
    "discover_mean",
    "discover_std",
    "init_ctg_time_mean",
    "init_ctg_time_std",
    "init_ctg_pct",
    "shortest",
    "longest",
    "problem",
    "trials",
];

fn csv_record(r: &Report) -> Vec<String> {
    vec![
        r.algorithm.clone(),
        r.epsilon.map(fmt_f64).unwrap_or_default(),
        r.rho.clone().unwrap_or_default(),
        fmt_f64(r.gamma),
        fmt_f64(r.runtime_mean),
        fmt_f64(r.runtime_std),
        fmt_f64(r.actions_mean),
        fmt_f64(r.actions_std),
        fmt_f64(r.convergence_pct),
        fmt_f64(r.discover_mean),
        fmt_f64(r.discover_std),
        fmt_f64(r.init_ctg_time_mean),
        fmt_f64(r.init_ctg_time_std),
        fmt_f64(r.init_ctg_pct),
        r.shortest.map(|v| v.to_string()).unwrap_or_default(),
        r.longest.map(|v| v.to_string()).unwrap_or_default(),
        r.problem.clone(),
        r.trials.to_string(),
    ]
}

/// RFC 4180 CSV with one row per report. Count-style "time" columns
/// (discover, init_ctg) are measured in actions from the start of
/// learning, not wall seconds.
pub fn emit_csv_many(reports: &[Report]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in reports {
        w.write_record(csv_record(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn emit_csv(report: &Report) -> String {
    emit_csv_many(std::slice::from_ref(report))
}

/// Parses CSV produced by `emit_csv`; inverse of it.
pub fn parse_csv(text: &str) -> Result<Vec<Report>, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in rdr.records() {
        let rec = record.map_err(|e| HarnessError::Csv(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("").to_string();
        let opt = |i: usize| {
            let f = field(i);
            if f.is_empty() {
                Ok::<Option<f64>, HarnessError>(None)
            } else {
                Ok(Some(parse_f64(&f)?))
            }
        };
        let opt_u64 = |i: usize| {
            let f = field(i);
            if f.is_empty() {
                Ok::<Option<u64>, HarnessError>(None)
            } else {
                Ok(Some(f.parse().map_err(|e| HarnessError::Csv(format!("bad count '{f}': {e}")))?))
            }
        };
        out.push(Report {
            algorithm: field(0),
            epsilon: opt(1)?,
            rho: { let f = field(2); if f.is_empty() { None } else { Some(f) } },
            gamma: parse_f64(&field(3))?,
            runtime_mean: parse_f64(&field(4))?,
            runtime_std: parse_f64(&field(5))?,
            actions_mean: parse_f64(&field(6))?,
            actions_std: parse_f64(&field(7))?,
            convergence_pct: parse_f64(&field(8))?,
            discover_mean: parse_f64(&field(9))?,
            discover_std: parse_f64(&field(10))?,
            init_ctg_time_mean: parse_f64(&field(11))?,
            init_ctg_time_std: parse_f64(&field(12))?,
            init_ctg_pct: parse_f64(&field(13))?,
            shortest: opt_u64(14)?,
            longest: opt_u64(15)?,
            problem: field(16),
            trials: field(17).parse().map_err(|e| HarnessError::Csv(format!("bad trials: {e}")))?,
        });
    }
    Ok(out)
}

/// Markdown table mirroring the run-time/convergence table layout.
pub fn emit_markdown(reports: &[Report]) -> String {
    let mut out = String::new();
    out.push_str("| Algorithm | #actions (mean ± std) | Convergence | Discover goal #actions (mean ± std) | Optimal Initial Cost-to-Go #actions (mean ± std) | Optimal Initial Cost-to-Go Convergence | Shortest/Longest Path |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for r in reports {
        let label = match (r.epsilon, &r.rho) {
            (Some(e), Some(rho)) => format!("{} (ε={e}, ρ={rho})", r.algorithm),
            _ => r.algorithm.clone(),
        };
        let pm = |m: f64, s: f64| format!("{} ± {}", fmt_f64(m), fmt_f64(s));
        let paths = match (r.shortest, r.longest) {
            (Some(a), Some(b)) => format!("{a}/{b}"),
            _ => "n/a".to_string(),
        };
        out.push_str(&format!(
            "| {} | {} | {:.1} % | {} | {} | {:.1} % | {} |\n",
            label,
            pm(r.actions_mean, r.actions_std),
            r.convergence_pct,
            pm(r.discover_mean, r.discover_std),
            pm(r.init_ctg_time_mean, r.init_ctg_time_std),
            r.init_ctg_pct,
            paths,
        ));
    }
    out
}
