use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::baselines::{brute_force, projected_gradient};
use super::report::{Method, SolutionCounts, SolveOptions};
use super::sweep::{planned_paths, run_critical_points};
use crate::error::Result;
use crate::parallel::with_threads;
use crate::pomdp::{random_policy, random_pomdp_with_discount, DEFAULT_DISCOUNT};

/// Settings of a batch run beyond the instance shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub fiber_sizes: Vec<usize>,
    pub n_trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub discount: f64,
    pub pgd_steps: usize,
    pub pgd_rate: f64,
    pub brute_step: f64,
}

impl BatchConfig {
    pub fn new(n_states: usize, n_actions: usize, fiber_sizes: Vec<usize>, n_trials: usize, seed: u64) -> Self {
        Self {
            n_states,
            n_actions,
            fiber_sizes,
            n_trials,
            seed,
            methods: Method::CRITICAL_POINT.to_vec(),
            discount: DEFAULT_DISCOUNT,
            pgd_steps: 1000,
            pgd_rate: 1.0,
            brute_step: 0.01,
        }
    }

    pub fn partition_label(&self) -> String {
        let parts: Vec<String> = self.fiber_sizes.iter().map(|d| d.to_string()).collect();
        format!("({})", parts.join(","))
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, sd })
    }
}

/// Per-instance record of one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub counts: Option<SolutionCounts>,
    pub best_value: Option<f64>,
    pub error: Option<String>,
}

/// One CSV row: statistics of one method over all trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRow {
    pub partition: String,
    pub method: Method,
    /// Set when the path budget refused the method.
    pub skipped: bool,
    pub complex: Option<Stat>,
    pub real: Option<Stat>,
    pub positive: Option<Stat>,
    /// Largest best-value difference between methods on one instance.
    pub value_agreement_max_gap: Option<f64>,
    pub trials: Vec<TrialOutcome>,
}

impl BatchRow {
    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| t.error.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResult {
    pub config: BatchConfig,
    pub rows: Vec<BatchRow>,
}

pub const CSV_HEADER: [&str; 9] = [
    "partition",
    "method",
    "complex_mean",
    "complex_sd",
    "real_mean",
    "real_sd",
    "positive_mean",
    "positive_sd",
    "value_agreement_max_gap",
];

impl BatchResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            let cell = |x: Option<f64>| match (row.skipped, x) {
                (true, _) => "skipped".to_string(),
                (false, Some(v)) => v.to_string(),
                (false, None) => String::new(),
            };
            let stat = |s: Option<Stat>| [cell(s.map(|s| s.mean)), cell(s.map(|s| s.sd))];
            let [cm, cs] = stat(row.complex);
            let [rm, rs] = stat(row.real);
            let [pm, ps] = stat(row.positive);
            w.write_record([
                row.partition.clone(),
                row.method.to_string(),
                cm,
                cs,
                rm,
                rs,
                pm,
                ps,
                cell(row.value_agreement_max_gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn run_trial(cfg: &BatchConfig, trial: usize, methods: &[Method], opts: &SolveOptions) -> Vec<TrialOutcome> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let instance = random_pomdp_with_discount(cfg.n_states, cfg.n_actions, &cfg.fiber_sizes, seed, cfg.discount);
    methods
        .iter()
        .map(|&m| {
            let mut out = TrialOutcome { trial, seed, counts: None, best_value: None, error: None };
            let pomdp = match &instance {
                Ok(p) => p,
                Err(e) => {
                    out.error = Some(e.to_string());
                    return out;
                }
            };
            match m {
                Method::Kkt | Method::LagrangeAll | Method::LagrangeRelevant => match run_critical_points(pomdp, m, opts) {
                    Ok(run) => {
                        out.counts = Some(run.counts);
                        out.best_value = run.best.map(|b| b.0);
                        if out.best_value.is_none() {
                            out.error = Some("no positive feasible solution".into());
                        }
                    }
                    Err(e) => out.error = Some(e.to_string()),
                },
                Method::ProjectedGradient => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let init = random_policy(pomdp.n_actions, pomdp.n_observations, &mut rng);
                    match projected_gradient(pomdp, &init, cfg.pgd_steps, cfg.pgd_rate) {
                        Ok((_, v)) => out.best_value = Some(v),
                        Err(e) => out.error = Some(e.to_string()),
                    }
                }
                Method::BruteForce => match brute_force(pomdp, cfg.brute_step) {
                    Ok((_, v)) => out.best_value = Some(v),
                    Err(e) => out.error = Some(e.to_string()),
                },
            }
            out
        })
        .collect()
}

/// Runs `n_trials` random instances (seeds `seed`, `seed + 1`, …) through
/// every configured method and summarizes the solution counts. The re-run
/// of the winning system is skipped.
pub fn batch_experiment(cfg: &BatchConfig, options: &SolveOptions) -> Result<BatchResult> {
    options.tracker.validate()?;
    if cfg.n_trials == 0 {
        return Ok(BatchResult { config: cfg.clone(), rows: Vec::new() });
    }
    // the budget check uses the first instance; the path count only depends on the shape
    let mut runnable = Vec::new();
    let mut skipped = Vec::new();
    let probe = random_pomdp_with_discount(cfg.n_states, cfg.n_actions, &cfg.fiber_sizes, cfg.seed, cfg.discount)?;
    for &m in &cfg.methods {
        let over = m.is_algebraic() && planned_paths(&probe, m)? > options.tracker.budget;
        if over {
            skipped.push(m);
        } else {
            runnable.push(m);
        }
    }
    let inner = SolveOptions {
        tracker: crate::homotopy::TrackerOptions { threads: None, ..options.tracker.clone() },
        verify: false,
        ..options.clone()
    };
    let per_trial: Vec<Vec<TrialOutcome>> = with_threads(options.tracker.threads, || {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t, &runnable, &inner))
            .collect()
    })?;

    let mut gap: Option<f64> = None;
    for outcomes in &per_trial {
        let values: Vec<f64> = outcomes.iter().filter_map(|o| o.best_value).collect();
        if values.len() >= 2 {
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            gap = Some(gap.unwrap_or(0.0).max(hi - lo));
        }
    }
    if runnable.len() == 1 {
        gap = Some(0.0);
    }

    let partition = cfg.partition_label();
    let rows = cfg
        .methods
        .iter()
        .map(|&m| {
            if skipped.contains(&m) {
                return BatchRow {
                    partition: partition.clone(),
                    method: m,
                    skipped: true,
                    complex: None,
                    real: None,
                    positive: None,
                    value_agreement_max_gap: None,
                    trials: Vec::new(),
                };
            }
            let k = runnable.iter().position(|&r| r == m).expect("runnable method");
            let trials: Vec<TrialOutcome> = per_trial.iter().map(|o| o[k].clone()).collect();
            let counts: Vec<SolutionCounts> = trials.iter().filter_map(|t| t.counts).collect();
            let stat = |f: fn(&SolutionCounts) -> usize| Stat::of(&counts.iter().map(|c| f(c) as f64).collect::<Vec<_>>());
            BatchRow {
                partition: partition.clone(),
                method: m,
                skipped: false,
                complex: stat(|c| c.complex),
                real: stat(|c| c.real),
                positive: stat(|c| c.positive),
                value_agreement_max_gap: gap,
                trials,
            }
        })
        .collect();
    Ok(BatchResult { config: cfg.clone(), rows })
}
