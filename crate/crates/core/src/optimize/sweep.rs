use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::report::{ComponentReport, Method, SolutionCounts, SolveOptions, SolveReport};
use crate::constraints::Anchors;
use crate::error::{Error, Result};
use crate::geometry::{enumerate_components, enumerate_relevant, BoundaryComponent};
use crate::homotopy::{
    alpha_certify, classify, embed_eta, real_point_near, solve_system, PathStatus, TrackedSolution, TrackerOptions,
};
use crate::parallel::with_threads;
use crate::polysys::{build_kkt_system, build_lagrange_system, component_anchors, PolySystem, Variable};
use crate::pomdp::{check_positivity, recover_policy, validate, Pomdp, StateActionFrequency};

/// Offset applied to the `γ` seed of a verification re-run.
const VERIFY_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;
/// Residual a recovered real point must reach, relative to `1 + ‖x‖_∞`.
const RECOVERY_TOL: f64 = 1e-13;

struct SystemOutcome {
    report: ComponentReport,
    best: Option<(f64, Vec<f64>)>,
}

/// Counts and best point of a critical-point method before it is turned
/// into a [`SolveReport`].
#[derive(Debug, Clone)]
pub struct CriticalPointRun {
    pub method: Method,
    pub per_component: Vec<ComponentReport>,
    pub counts: SolutionCounts,
    /// Best positive objective and its full `η`.
    pub best: Option<(f64, Vec<f64>)>,
    pub verified: bool,
    pub verification_gap: Option<f64>,
}

fn check_instance(pomdp: &Pomdp) -> Result<()> {
    let violations = validate(pomdp);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidInput(list.join("; ")));
    }
    if !check_positivity(pomdp, 64, 0) {
        return Err(Error::InvalidInput("some state has zero frequency under some policy".into()));
    }
    Ok(())
}

fn components_for(pomdp: &Pomdp, method: Method) -> Result<Vec<BoundaryComponent>> {
    let fibers = pomdp.fiber_sizes();
    match method {
        Method::LagrangeAll => enumerate_components(pomdp.n_actions, &fibers),
        Method::LagrangeRelevant => enumerate_relevant(pomdp.n_actions, &fibers),
        other => Err(Error::InvalidInput(format!("{other} is not a boundary sweep"))),
    }
}

/// The systems a critical-point method solves, labelled.
fn systems_for(pomdp: &Pomdp, method: Method) -> Result<Vec<(String, PolySystem)>> {
    match method {
        Method::Kkt => Ok(vec![("kkt".into(), build_kkt_system(pomdp, &Anchors::default_for(pomdp))?)]),
        Method::LagrangeAll | Method::LagrangeRelevant => components_for(pomdp, method)?
            .into_iter()
            .map(|c| Ok((c.label(), build_lagrange_system(pomdp, &c, &component_anchors(pomdp, &c))?)))
            .collect(),
        other => Err(Error::InvalidInput(format!("{other} does not solve polynomial systems"))),
    }
}

/// Total number of homotopy paths a method would track.
pub fn planned_paths(pomdp: &Pomdp, method: Method) -> Result<u128> {
    let mut total: u128 = 0;
    for (_, sys) in systems_for(pomdp, method)? {
        let degrees = sys.degrees();
        let b: u128 = degrees.iter().map(|&d| d as u128).product();
        total = total.saturating_add(b);
    }
    Ok(total)
}

fn solve_one(
    pomdp: &Pomdp,
    label: String,
    system: &PolySystem,
    opts: &SolveOptions,
    tracker: &TrackerOptions,
    kkt: bool,
) -> Result<SystemOutcome> {
    let set = solve_system(system, tracker)?;
    let mut counts = SolutionCounts {
        dual_feasible: kkt.then_some(0),
        certified: opts.certify.then_some(0),
        ..Default::default()
    };
    let kappa: Vec<usize> = system
        .registry
        .iter()
        .enumerate()
        .filter(|(_, v)| matches!(v, Variable::Kappa { .. }))
        .map(|(i, _)| i)
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in set.converged() {
        let mut s = classify(s.clone(), pomdp, system, &opts.classify);
        counts.complex += 1;
        if opts.certify {
            s.certified = alpha_certify(system, &s.point).map(|c| c.certified).unwrap_or(false);
            if s.certified {
                *counts.certified.as_mut().expect("set above") += 1;
            }
        }
        if !s.is_real {
            continue;
        }
        counts.real += 1;
        if !s.is_positive_feasible {
            continue;
        }
        counts.positive += 1;
        if let Some(d) = counts.dual_feasible.as_mut() {
            if kappa.iter().all(|&i| s.point[i].re >= -opts.classify.positive) {
                *d += 1;
            }
        }
        let value = s.objective.expect("real solutions carry an objective");
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, embed_eta(pomdp, system, &s.point)));
        }
    }
    // singular endpoints may sit on a positive-dimensional set of critical
    // points; its real positive part carries the same objective value
    let eta_idx: Vec<usize> = system.registry.eta_map(pomdp.n_states, pomdp.n_actions).into_iter().flatten().collect();
    let mut recovered = 0;
    for s in set.solutions.iter().filter(|s| s.path_status == PathStatus::SingularEndpoint) {
        if !(s.residual < tracker.residual_tol) {
            continue;
        }
        let Some(x) = real_point_near(system, &s.point, &eta_idx, RECOVERY_TOL, opts.classify.positive) else {
            continue;
        };
        let point = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let cand = TrackedSolution::new(point, s.residual, s.condition, PathStatus::SingularEndpoint);
        let cand = classify(cand, pomdp, system, &opts.classify);
        if !cand.is_positive_feasible {
            continue;
        }
        recovered += 1;
        let value = cand.objective.expect("real solutions carry an objective");
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, embed_eta(pomdp, system, &cand.point)));
        }
    }
    let report = ComponentReport {
        component: label,
        n_variables: system.n_vars(),
        bezout_number: set.bezout_number,
        n_complex: counts.complex,
        n_real: counts.real,
        n_positive: counts.positive,
        best_local_objective: best.as_ref().map(|b| b.0),
        n_recovered: recovered,
        counts,
        paths: set.stats,
    };
    Ok(SystemOutcome { report, best })
}

/// Solves every system of a critical-point method and merges the results in
/// system order.
pub fn run_critical_points(pomdp: &Pomdp, method: Method, opts: &SolveOptions) -> Result<CriticalPointRun> {
    check_instance(pomdp)?;
    opts.tracker.validate()?;
    let planned = planned_paths(pomdp, method)?;
    if planned > opts.tracker.budget {
        return Err(Error::BudgetExceeded { count: planned, budget: opts.tracker.budget });
    }
    let systems = systems_for(pomdp, method)?;
    let kkt = method == Method::Kkt;
    let inner = TrackerOptions { threads: None, ..opts.tracker.clone() };
    let outcomes: Vec<Result<SystemOutcome>> = with_threads(opts.tracker.threads, || {
        systems
            .par_iter()
            .map(|(label, sys)| solve_one(pomdp, label.clone(), sys, opts, &inner, kkt))
            .collect()
    })?;
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut counts = SolutionCounts {
        dual_feasible: kkt.then_some(0),
        certified: opts.certify.then_some(0),
        ..Default::default()
    };
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for (k, o) in outcomes.iter().enumerate() {
        counts += o.report.counts;
        if let Some((v, eta)) = &o.best {
            if best.as_ref().is_none_or(|(_, b, _)| v > b) {
                best = Some((k, *v, eta.clone()));
            }
        }
    }

    let (mut verified, mut gap) = (false, None);
    if let (true, Some((k, value, _))) = (opts.verify, best.as_ref()) {
        let fresh = TrackerOptions {
            gamma_seed: opts.tracker.gamma_seed.wrapping_add(VERIFY_SEED_OFFSET),
            ..inner.clone()
        };
        let (label, sys) = &systems[*k];
        let again = with_threads(opts.tracker.threads, || {
            solve_one(pomdp, label.clone(), sys, opts, &fresh, kkt)
        })??;
        match again.best {
            Some((v2, eta2)) => {
                let d = (v2 - value).abs();
                gap = Some(d);
                verified = d <= opts.verify_tol;
                if v2 > *value {
                    best = Some((*k, v2, eta2));
                }
            }
            None => gap = Some(f64::INFINITY),
        }
    }

    Ok(CriticalPointRun {
        method,
        per_component: outcomes.into_iter().map(|o| o.report).collect(),
        counts,
        best: best.map(|(_, v, eta)| (v, eta)),
        verified,
        verification_gap: gap,
    })
}

fn into_report(pomdp: &Pomdp, run: CriticalPointRun, start: Instant) -> Result<SolveReport> {
    let Some((value, eta)) = run.best else {
        return Err(Error::NoFeasibleSolution(format!(
            "{}: {} complex, {} real solutions",
            run.method, run.counts.complex, run.counts.real
        )));
    };
    let best_eta = StateActionFrequency::new(pomdp.n_states, pomdp.n_actions, eta)?;
    let best_policy = recover_policy(&best_eta, &pomdp.g_beta, pomdp.n_observations)?;
    Ok(SolveReport {
        method: run.method,
        per_component: run.per_component,
        counts: run.counts,
        best_eta,
        best_policy,
        best_value: value,
        verified: run.verified,
        verification_gap: run.verification_gap,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Solves the Lagrange system of every (relevant) boundary component and
/// reports the best positive feasible critical point.
pub fn solve_boundary_sweep(pomdp: &Pomdp, relevant_only: bool, options: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let method = if relevant_only { Method::LagrangeRelevant } else { Method::LagrangeAll };
    let run = run_critical_points(pomdp, method, options)?;
    into_report(pomdp, run, start)
}

/// Solves the KKT system without sign conditions and keeps the best
/// solution with `η ≥ 0`.
pub fn solve_kkt(pomdp: &Pomdp, options: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let run = run_critical_points(pomdp, Method::Kkt, options)?;
    into_report(pomdp, run, start)
}
