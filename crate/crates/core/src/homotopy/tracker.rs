use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::compiled::CompiledSystem;
use super::linalg::{equilibrated_condition, norm, to_matrix, Lu};
use super::options::TrackerOptions;
use super::solution::{dedupe, PathStatus, TrackedSolution};
use crate::error::{Error, Result};
use crate::parallel::with_threads;
use crate::polysys::PolySystem;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const TRUST: f64 = 0.1;

/// Total-degree start system `γ (x_i^{d_i} - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StartSystem {
    pub degrees: Vec<u32>,
    pub gamma: Complex64,
}

impl StartSystem {
    pub fn new(degrees: Vec<u32>, gamma_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(gamma_seed);
        let theta: f64 = rng.random::<f64>() * TAU;
        Self { degrees, gamma: Complex64::from_polar(1.0, theta) }
    }

    pub fn n_roots(&self) -> u128 {
        self.degrees.iter().map(|&d| d as u128).product()
    }

    /// Start root number `k` in mixed-radix order (first coordinate fastest).
    pub fn root(&self, mut k: u128) -> Vec<Complex64> {
        self.degrees
            .iter()
            .map(|&d| {
                let j = (k % d as u128) as f64;
                k /= d as u128;
                Complex64::from_polar(1.0, TAU * j / d as f64)
            })
            .collect()
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        x.iter()
            .zip(&self.degrees)
            .map(|(xi, &d)| self.gamma * (xi.powu(d) - 1.0))
            .collect()
    }
}

/// Summary of what happened to the paths of one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PathStats {
    pub paths: usize,
    pub converged: usize,
    pub singular: usize,
    pub diverged: usize,
    pub truncated: usize,
    pub retracked: usize,
}

/// Deduplicated finite endpoints of a solve plus path statistics.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionSet {
    pub solutions: Vec<TrackedSolution>,
    pub stats: PathStats,
    pub bezout_number: u128,
}

impl SolutionSet {
    /// Nonsingular converged solutions.
    pub fn converged(&self) -> impl Iterator<Item = &TrackedSolution> {
        self.solutions.iter().filter(|s| s.path_status == PathStatus::Converged)
    }

    pub fn n_converged(&self) -> usize {
        self.converged().count()
    }
}

struct Workspace {
    n: usize,
    f: Vec<Complex64>,
    jac: Vec<Complex64>,
    rhs: Vec<Complex64>,
    lu: Lu,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            n,
            f: vec![ZERO; n],
            jac: vec![ZERO; n * n],
            rhs: vec![ZERO; n],
            lu: Lu::new(n),
        }
    }
}

struct Homotopy<'a> {
    target: &'a CompiledSystem,
    start: &'a StartSystem,
}

impl Homotopy<'_> {
    /// `H(x, t)` into `ws.f` and `H_x` into `ws.jac`.
    fn eval(&self, x: &[Complex64], t: f64, ws: &mut Workspace) {
        let n = ws.n;
        self.target.eval_into(x, &mut ws.f);
        self.target.jacobian_into(x, &mut ws.jac);
        let s = (1.0 - t) * self.start.gamma;
        for i in 0..n {
            let d = self.start.degrees[i];
            let xd1 = x[i].powu(d - 1);
            ws.f[i] = ws.f[i] * t + s * (xd1 * x[i] - 1.0);
            for v in &mut ws.jac[i * n..(i + 1) * n] {
                *v *= t;
            }
            ws.jac[i * n + i] += s * d as f64 * xd1;
        }
    }

    /// `H_t = F - γ G` into `ws.rhs` (negated, ready as a right-hand side).
    fn neg_dt(&self, x: &[Complex64], ws: &mut Workspace) {
        self.target.eval_into(x, &mut ws.rhs);
        for i in 0..ws.n {
            let g = self.start.gamma * (x[i].powu(self.start.degrees[i]) - 1.0);
            ws.rhs[i] = g - ws.rhs[i];
        }
    }

    /// Newton at fixed `t`; true on convergence with contraction.
    fn correct(&self, x: &mut [Complex64], t: f64, opts: &TrackerOptions, ws: &mut Workspace) -> bool {
        let mut prev = f64::INFINITY;
        let scale = 1.0 + norm(x);
        for _ in 0..opts.max_corrector_iters {
            self.eval(x, t, ws);
            if !ws.lu.factor(&ws.jac) {
                return false;
            }
            for (r, f) in ws.rhs.iter_mut().zip(&ws.f) {
                *r = -f;
            }
            ws.lu.solve(&mut ws.rhs);
            let dn = norm(&ws.rhs);
            // a large correction means the predictor left the basin of this path
            if !dn.is_finite() || dn > 0.5 * prev || dn > TRUST * scale {
                return false;
            }
            for (xi, d) in x.iter_mut().zip(&ws.rhs) {
                *xi += d;
            }
            if dn <= opts.corrector_tol * (1.0 + norm(x)) {
                return true;
            }
            prev = dn;
        }
        false
    }
}

/// Outcome of the final Newton polish at `t = 1`.
struct Polish {
    reached_tol: bool,
    last_step: f64,
}

fn polish(target: &CompiledSystem, x: &mut [Complex64], tol: f64, ws: &mut Workspace) -> Option<Polish> {
    let mut prev = f64::INFINITY;
    let mut stalls = 0;
    let mut last_step = f64::INFINITY;
    for _ in 0..16 {
        target.eval_into(x, &mut ws.f);
        target.jacobian_into(x, &mut ws.jac);
        if !ws.lu.factor(&ws.jac) {
            return None;
        }
        for (r, f) in ws.rhs.iter_mut().zip(&ws.f) {
            *r = -f;
        }
        ws.lu.solve(&mut ws.rhs);
        let dn = norm(&ws.rhs);
        if !dn.is_finite() {
            return None;
        }
        for (xi, d) in x.iter_mut().zip(&ws.rhs) {
            *xi += d;
        }
        last_step = dn;
        if dn <= tol * (1.0 + norm(x)) {
            return Some(Polish { reached_tol: true, last_step });
        }
        // linear convergence signals a singular root
        if dn > 0.25 * prev {
            stalls += 1;
            if stalls >= 2 {
                break;
            }
        }
        prev = dn;
    }
    Some(Polish { reached_tol: false, last_step })
}

fn max_abs(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn residual_of(target: &CompiledSystem, x: &[Complex64], ws: &mut Workspace) -> f64 {
    target.eval_into(x, &mut ws.f);
    max_abs(&ws.f)
}

/// Classifies an endpoint at `t = 1` after polishing it.
fn finish(target: &CompiledSystem, mut x: Vec<Complex64>, opts: &TrackerOptions, ws: &mut Workspace) -> TrackedSolution {
    let polished = polish(target, &mut x, opts.endpoint_tol, ws);
    let residual = residual_of(target, &x, ws);
    if max_abs(&x) > opts.divergence_norm || !residual.is_finite() {
        return TrackedSolution::new(x, residual, f64::INFINITY, PathStatus::Diverged);
    }
    target.jacobian_into(&x, &mut ws.jac);
    let cond = equilibrated_condition(&to_matrix(ws.n, &ws.jac));
    let status = match polished {
        None => PathStatus::SingularEndpoint,
        Some(_) if cond > opts.singular_cond => PathStatus::SingularEndpoint,
        Some(p) => {
            let roundoff = 8.0 * f64::EPSILON * cond * (1.0 + norm(&x));
            let settled = p.reached_tol || p.last_step <= roundoff;
            if residual >= opts.residual_tol {
                PathStatus::Truncated
            } else if settled {
                PathStatus::Converged
            } else {
                PathStatus::SingularEndpoint
            }
        }
    };
    TrackedSolution::new(x, residual, cond, status)
}

fn track_compiled(
    target: &CompiledSystem,
    start: &StartSystem,
    start_point: &[Complex64],
    opts: &TrackerOptions,
) -> TrackedSolution {
    let n = target.n;
    let h = Homotopy { target, start };
    let mut ws = Workspace::new(n);
    let mut x = start_point.to_vec();
    let mut trial = vec![ZERO; n];
    let mut t = 0.0_f64;
    let mut step = opts.initial_step;
    let mut streak = 0;

    for _ in 0..opts.max_path_steps {
        if t >= 1.0 {
            return finish(target, x, opts, &mut ws);
        }
        let remaining = 1.0 - t;
        let mut dt = step.min(remaining);
        if remaining < opts.endgame_zone {
            dt = dt.min(opts.endgame_step);
        }
        // Euler predictor
        h.eval(&x, t, &mut ws);
        let ok = ws.lu.factor(&ws.jac);
        let t_next = if dt >= remaining { 1.0 } else { t + dt };
        let accepted = ok && {
            h.neg_dt(&x, &mut ws);
            ws.lu.solve(&mut ws.rhs);
            for i in 0..n {
                trial[i] = x[i] + ws.rhs[i] * dt;
            }
            h.correct(&mut trial, t_next, opts, &mut ws)
        };
        if accepted {
            x.copy_from_slice(&trial);
            t = t_next;
            if max_abs(&x) > opts.divergence_norm {
                let r = residual_of(target, &x, &mut ws);
                return TrackedSolution::new(x, r, f64::INFINITY, PathStatus::Diverged);
            }
            streak += 1;
            if streak >= 3 {
                step = (2.0 * step).min(opts.max_step);
                streak = 0;
            }
        } else {
            step *= 0.5;
            streak = 0;
            if step < opts.min_step {
                let r = residual_of(target, &x, &mut ws);
                let status = if max_abs(&x) > opts.divergence_norm.sqrt() {
                    PathStatus::Diverged
                } else {
                    PathStatus::Truncated
                };
                return TrackedSolution::new(x, r, f64::INFINITY, status);
            }
        }
    }
    if t >= 1.0 {
        return finish(target, x, opts, &mut ws);
    }
    let r = residual_of(target, &x, &mut ws);
    TrackedSolution::new(x, r, f64::INFINITY, PathStatus::Truncated)
}

/// Tracks one path of `(1 - t) γ G + t F` from a start root at `t = 0`.
pub fn track_path(
    system: &PolySystem,
    start_system: &StartSystem,
    start_point: &[Complex64],
    options: &TrackerOptions,
) -> Result<TrackedSolution> {
    check_tracking_input(system, start_system, start_point)?;
    Ok(track_compiled(&CompiledSystem::new(system), start_system, start_point, options))
}

fn check_tracking_input(system: &PolySystem, start: &StartSystem, point: &[Complex64]) -> Result<()> {
    if !system.is_square() {
        return Err(Error::NotSquare { equations: system.n_equations(), variables: system.n_vars() });
    }
    if start.degrees.len() != system.n_vars() || point.len() != system.n_vars() {
        return Err(Error::DimensionMismatch { expected: system.n_vars(), actual: point.len() });
    }
    let g = start.eval(point);
    if max_abs(&g) > 1e-10 {
        return Err(Error::InvalidInput("start point does not solve the start system".into()));
    }
    Ok(())
}

/// Damped Newton iteration on `F`; stops early when the step falls below
/// machine-level size. Errors when the jacobian is singular.
pub fn newton_refine(system: &PolySystem, point: &[Complex64], iters: usize) -> Result<(Vec<Complex64>, f64)> {
    if point.len() != system.n_vars() {
        return Err(Error::DimensionMismatch { expected: system.n_vars(), actual: point.len() });
    }
    if !system.is_square() {
        return Err(Error::NotSquare { equations: system.n_equations(), variables: system.n_vars() });
    }
    let target = CompiledSystem::new(system);
    let n = target.n;
    let mut ws = Workspace::new(n);
    let mut x = point.to_vec();
    let mut res = residual_of(&target, &x, &mut ws);
    let mut trial = vec![ZERO; n];
    for _ in 0..iters {
        if res == 0.0 {
            break;
        }
        target.eval_into(&x, &mut ws.f);
        target.jacobian_into(&x, &mut ws.jac);
        if !ws.lu.factor(&ws.jac) {
            return Err(Error::Singular("newton refinement"));
        }
        for (r, f) in ws.rhs.iter_mut().zip(&ws.f) {
            *r = -f;
        }
        ws.lu.solve(&mut ws.rhs);
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            for i in 0..n {
                trial[i] = x[i] + ws.rhs[i] * lambda;
            }
            let r = residual_of(&target, &trial, &mut ws);
            if r <= res {
                x.copy_from_slice(&trial);
                res = r;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved || norm(&ws.rhs) <= 4.0 * f64::EPSILON * (1.0 + norm(&x)) {
            break;
        }
    }
    Ok((x, res))
}

fn solve_linear(system: &PolySystem) -> Vec<TrackedSolution> {
    let target = CompiledSystem::new(system);
    let n = target.n;
    let mut ws = Workspace::new(n);
    let zero = vec![ZERO; n];
    target.eval_into(&zero, &mut ws.f);
    target.jacobian_into(&zero, &mut ws.jac);
    if !ws.lu.factor(&ws.jac) {
        return Vec::new();
    }
    let mut x: Vec<Complex64> = ws.f.iter().map(|f| -f).collect();
    ws.lu.solve(&mut x);
    let residual = residual_of(&target, &x, &mut ws);
    target.jacobian_into(&x, &mut ws.jac);
    let cond = equilibrated_condition(&to_matrix(n, &ws.jac));
    vec![TrackedSolution::new(x, residual, cond, PathStatus::Converged)]
}

/// Solves a square system by total-degree homotopy continuation and returns
/// its deduplicated finite endpoints in canonical order.
pub fn solve_system(system: &PolySystem, options: &TrackerOptions) -> Result<SolutionSet> {
    options.validate()?;
    if !system.is_square() {
        return Err(Error::NotSquare { equations: system.n_equations(), variables: system.n_vars() });
    }
    let degrees = system.degrees();
    let bezout: u128 = degrees.iter().map(|&d| d as u128).product();
    if bezout > options.budget {
        return Err(Error::BudgetExceeded { count: bezout, budget: options.budget });
    }
    if bezout == 0 {
        return Ok(SolutionSet { solutions: Vec::new(), stats: PathStats::default(), bezout_number: 0 });
    }
    if degrees.iter().all(|&d| d == 1) {
        let solutions = solve_linear(system);
        let stats = PathStats { paths: 1, converged: solutions.len(), truncated: 1 - solutions.len(), ..Default::default() };
        return Ok(SolutionSet { solutions, stats, bezout_number: 1 });
    }

    let target = CompiledSystem::new(system);
    let start = StartSystem::new(degrees, options.gamma_seed);
    let n_paths = bezout as usize;
    let mut results: Vec<TrackedSolution> = with_threads(options.threads, || {
        (0..n_paths)
            .into_par_iter()
            .map(|k| track_compiled(&target, &start, &start.root(k as u128), options))
            .collect()
    })?;

    let mut retracked = 0;
    if options.retrack_duplicates {
        let dupes = duplicate_paths(&results, options.dedupe_radius);
        if !dupes.is_empty() {
            retracked = dupes.len();
            let careful = TrackerOptions {
                initial_step: options.initial_step / 10.0,
                max_step: options.max_step / 10.0,
                endgame_step: options.endgame_step / 5.0,
                max_path_steps: options.max_path_steps * 10,
                ..options.clone()
            };
            let redone: Vec<TrackedSolution> = with_threads(options.threads, || {
                dupes
                    .par_iter()
                    .map(|&k| track_compiled(&target, &start, &start.root(k as u128), &careful))
                    .collect()
            })?;
            for (&k, sol) in dupes.iter().zip(redone) {
                results[k] = sol;
            }
        }
    }

    let mut stats = PathStats { paths: n_paths, retracked, ..Default::default() };
    for r in &results {
        match r.path_status {
            PathStatus::Converged => stats.converged += 1,
            PathStatus::SingularEndpoint => stats.singular += 1,
            PathStatus::Diverged => stats.diverged += 1,
            PathStatus::Truncated => stats.truncated += 1,
        }
    }
    let finite: Vec<TrackedSolution> = results
        .into_iter()
        .filter(|r| matches!(r.path_status, PathStatus::Converged | PathStatus::SingularEndpoint))
        .collect();
    let (converged, singular): (Vec<_>, Vec<_>) =
        finite.into_iter().partition(|r| r.path_status == PathStatus::Converged);
    let mut solutions = dedupe(converged, options.dedupe_radius);
    solutions.extend(dedupe(singular, options.dedupe_radius));
    Ok(SolutionSet { solutions, stats, bezout_number: bezout })
}

/// Indices of converged paths sharing an endpoint with another path.
fn duplicate_paths(results: &[TrackedSolution], radius: f64) -> Vec<usize> {
    let conv: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.path_status == PathStatus::Converged)
        .map(|(i, _)| i)
        .collect();
    let mut hit = vec![false; results.len()];
    for (a, &i) in conv.iter().enumerate() {
        for &j in &conv[a + 1..] {
            if results[i].distance(&results[j]) < radius {
                hit[i] = true;
                hit[j] = true;
            }
        }
    }
    (0..results.len()).filter(|&i| hit[i]).collect()
}
