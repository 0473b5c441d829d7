use std::cmp::Ordering;

use num_complex::Complex64;
use serde::Serialize;

use super::linalg::singular_extremes;
use crate::constraints::{feasibility_residual, Anchors};
use crate::error::{Error, Result};
use crate::polysys::PolySystem;
use crate::pomdp::{Pomdp, StateActionFrequency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Converged,
    Diverged,
    Truncated,
    SingularEndpoint,
}

/// Endpoint of one tracked path with its classification flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedSolution {
    pub point: Vec<Complex64>,
    /// Max-norm of the target system at `point`.
    pub residual: f64,
    /// Condition number of the row- and column-equilibrated jacobian at `point`.
    pub condition: f64,
    pub path_status: PathStatus,
    pub is_real: bool,
    pub is_positive_feasible: bool,
    pub certified: bool,
    /// `⟨r, Re η⟩`, set for real solutions.
    pub objective: Option<f64>,
}

impl TrackedSolution {
    pub fn new(point: Vec<Complex64>, residual: f64, condition: f64, path_status: PathStatus) -> Self {
        Self {
            point,
            residual,
            condition,
            path_status,
            is_real: false,
            is_positive_feasible: false,
            certified: false,
            objective: None,
        }
    }

    pub fn distance(&self, other: &TrackedSolution) -> f64 {
        if self.point.len() != other.point.len() {
            return f64::INFINITY;
        }
        self.point
            .iter()
            .zip(&other.point)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_imaginary(&self) -> f64 {
        self.point.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

fn rounded(v: f64) -> f64 {
    (v * 1e8).round() / 1e8 + 0.0
}

/// Canonical order: rounded real parts, then rounded imaginary parts, then
/// the raw coordinates.
pub fn canonical_cmp(a: &TrackedSolution, b: &TrackedSolution) -> Ordering {
    let key = |s: &TrackedSolution, f: fn(&Complex64) -> f64, round: bool| -> Vec<f64> {
        s.point.iter().map(|z| if round { rounded(f(z)) } else { f(z) }).collect()
    };
    let cmp = |x: Vec<f64>, y: Vec<f64>| -> Ordering {
        x.iter()
            .zip(&y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| x.len().cmp(&y.len()))
    };
    let re = |z: &Complex64| z.re;
    let im = |z: &Complex64| z.im;
    cmp(key(a, re, true), key(b, re, true))
        .then_with(|| cmp(key(a, im, true), key(b, im, true)))
        .then_with(|| cmp(key(a, re, false), key(b, re, false)))
        .then_with(|| cmp(key(a, im, false), key(b, im, false)))
        .then_with(|| a.residual.total_cmp(&b.residual))
}

/// Clusters endpoints closer than `radius`, keeps the lowest-residual member
/// of each cluster and returns the survivors in canonical order. The result
/// depends only on the multiset of inputs.
pub fn dedupe(mut solutions: Vec<TrackedSolution>, radius: f64) -> Vec<TrackedSolution> {
    solutions.sort_by(canonical_cmp);
    let mut seeds: Vec<TrackedSolution> = Vec::new();
    let mut best: Vec<TrackedSolution> = Vec::new();
    for s in solutions {
        match seeds.iter().position(|c| c.distance(&s) < radius) {
            Some(k) => {
                if s.residual < best[k].residual {
                    best[k] = s;
                }
            }
            None => {
                seeds.push(s.clone());
                best.push(s);
            }
        }
    }
    best.sort_by(canonical_cmp);
    best
}

/// Tolerances used by [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyTolerances {
    pub real: f64,
    pub positive: f64,
    pub feasibility: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self { real: 1e-7, positive: 1e-8, feasibility: 1e-6 }
    }
}

/// Real parts of the `η` block embedded into all `(s, a)` coordinates, with
/// zeros for coordinates the system fixes.
pub fn embed_eta(pomdp: &Pomdp, system: &PolySystem, point: &[Complex64]) -> Vec<f64> {
    system
        .registry
        .eta_map(pomdp.n_states, pomdp.n_actions)
        .iter()
        .map(|idx| idx.map_or(0.0, |i| point[i].re))
        .collect()
}

/// Sets the real / positive-feasible flags and the objective of a solution
/// of `system` (a Lagrange or KKT system of `pomdp`).
pub fn classify(
    mut solution: TrackedSolution,
    pomdp: &Pomdp,
    system: &PolySystem,
    tol: &ClassifyTolerances,
) -> TrackedSolution {
    solution.is_real = solution.max_imaginary() < tol.real;
    solution.is_positive_feasible = false;
    solution.objective = None;
    if !solution.is_real {
        return solution;
    }
    let eta = embed_eta(pomdp, system, &solution.point);
    let reward = pomdp.reward_vector();
    solution.objective = Some(eta.iter().zip(&reward).map(|(e, r)| e * r).sum());
    if eta.iter().any(|&e| e < -tol.positive) {
        return solution;
    }
    let freq = StateActionFrequency::new(pomdp.n_states, pomdp.n_actions, eta);
    solution.is_positive_feasible = freq
        .and_then(|f| feasibility_residual(pomdp, &f, &Anchors::default_for(pomdp)))
        .map(|r| r.max_equality() < tol.feasibility)
        .unwrap_or(false);
    solution
}

/// Outcome of the α-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub certified: bool,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// A unique root lies within this distance of the point when certified.
    pub radius: f64,
}

/// Certification threshold for `α = β γ`.
pub const ALPHA_THRESHOLD: f64 = 0.1307;

/// α-test for systems of degree at most two.
///
/// `β = ‖J⁻¹F‖₂`; since `D²F` is constant, `γ = ½ ‖J⁻¹‖₂ ‖D²F‖` with
/// `‖J⁻¹‖₂ = 1/σ_min(J)` and `‖D²F‖` bounded by `(Σ_i ‖H_i‖_F²)^{1/2}`, where
/// `H_i` is the Hessian of equation `i`. The root lies within `2β`.
pub fn alpha_certify(system: &PolySystem, point: &[Complex64]) -> Result<Certificate> {
    if let Some(i) = system.degrees().iter().position(|&d| d > 2) {
        return Err(Error::Unsupported(format!("alpha test needs degree ≤ 2, equation {i} is higher")));
    }
    let n = system.n_vars();
    let f = system.evaluate(point)?;
    let j = system.jacobian(point)?;
    let not_certified = Certificate { certified: false, alpha: f64::INFINITY, beta: f64::INFINITY, gamma: f64::INFINITY, radius: f64::INFINITY };
    if !system.is_square() {
        return Ok(not_certified);
    }
    let (_, smin) = singular_extremes(&j);
    let Some(beta) = j
        .clone()
        .lu()
        .solve(&nalgebra::DVector::from_vec(f))
        .map(|d| d.norm())
        .filter(|b| b.is_finite() && smin > 0.0)
    else {
        return Ok(not_certified);
    };
    let mut hess_sq = 0.0;
    let zero = vec![Complex64::new(0.0, 0.0); n];
    for p in &system.equations {
        for a in 0..n {
            let da = p.derivative(a);
            if da.is_zero() {
                continue;
            }
            for b in 0..n {
                hess_sq += da.derivative(b).eval(&zero).norm_sqr();
            }
        }
    }
    let gamma = 0.5 * hess_sq.sqrt() / smin;
    let alpha = beta * gamma;
    Ok(Certificate { certified: alpha < ALPHA_THRESHOLD, alpha, beta, gamma, radius: 2.0 * beta })
}
