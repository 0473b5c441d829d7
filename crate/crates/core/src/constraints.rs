//! Defining equations of the feasible set of state-action frequencies.
//!
//! For deterministic observations the feasible frequencies are the
//! nonnegative points of the simplex that satisfy
//!
//! * the linear stationarity constraints `ℓ_s(η) = 0`, one per state, and
//! * rank-one conditions on each fiber block `(η_{sa})_{s ∈ S_o, a ∈ A}`,
//!   given either by all 2×2 minors or, more economically, by the reduced
//!   quadratics `p^o_{sa}` relative to an anchor state and action per fiber.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::polysys::{polynomial_to_json, Polynomial};
use crate::pomdp::{Pomdp, StateActionFrequency};

/// Default tolerance of [`is_feasible`].
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-7;

/// `ℓ_s(η) = Σ_a η_{sa} - γ Σ_{s',a'} α(s|s',a') η_{s'a'} - (1-γ) μ_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub state: usize,
    /// Coefficients flattened by `(s, a)`.
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl LinearConstraint {
    pub fn eval(&self, eta: &[f64]) -> f64 {
        self.coeffs.iter().zip(eta).map(|(c, x)| c * x).sum::<f64>() + self.constant
    }

    /// The constraint as a polynomial in the `η` coordinates.
    pub fn to_polynomial(&self) -> Polynomial {
        let terms: Vec<(usize, f64)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (i, c))
            .collect();
        Polynomial::linear(self.coeffs.len(), &terms, self.constant)
    }
}

/// 2×2 minor `η_{sa} η_{s'a'} - η_{sa'} η_{s'a}` of a fiber block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MinorConstraint {
    pub states: (usize, usize),
    pub actions: (usize, usize),
}

impl MinorConstraint {
    pub fn eval(&self, eta: &[f64], n_actions: usize) -> f64 {
        let at = |s: usize, a: usize| eta[s * n_actions + a];
        let (s, t) = self.states;
        let (a, b) = self.actions;
        at(s, a) * at(t, b) - at(s, b) * at(t, a)
    }

    pub fn to_polynomial(&self, n_states: usize, n_actions: usize) -> Polynomial {
        let n = n_states * n_actions;
        let v = |s: usize, a: usize| Polynomial::var(n, s * n_actions + a);
        let (s, t) = self.states;
        let (a, b) = self.actions;
        &(&v(s, a) * &v(t, b)) - &(&v(s, b) * &v(t, a))
    }
}

/// `p^o_{sa}(η) = η_{sa} Σ_{a'} η_{s_o a'} - η_{s_o a} Σ_{a'} η_{sa'}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReducedQuadratic {
    pub observation: usize,
    pub anchor_action: usize,
    pub anchor_state: usize,
    pub state: usize,
    pub action: usize,
}

impl ReducedQuadratic {
    pub fn eval(&self, eta: &[f64], n_actions: usize) -> f64 {
        let row = |s: usize| &eta[s * n_actions..(s + 1) * n_actions];
        let anchor = row(self.anchor_state);
        let target = row(self.state);
        target[self.action] * anchor.iter().sum::<f64>()
            - anchor[self.action] * target.iter().sum::<f64>()
    }

    /// Polynomial form over an arbitrary subset of actions; `free` lists the
    /// actions whose coordinates are not fixed to zero.
    pub fn to_polynomial_over(&self, n_states: usize, n_actions: usize, free: &[usize]) -> Polynomial {
        let n = n_states * n_actions;
        let v = |s: usize, a: usize| Polynomial::var(n, s * n_actions + a);
        let row_sum = |s: usize| {
            free.iter().fold(Polynomial::zero(n), |acc, &a| &acc + &v(s, a))
        };
        &(&v(self.state, self.action) * &row_sum(self.anchor_state))
            - &(&v(self.anchor_state, self.action) * &row_sum(self.state))
    }

    pub fn to_polynomial(&self, n_states: usize, n_actions: usize) -> Polynomial {
        let all: Vec<usize> = (0..n_actions).collect();
        self.to_polynomial_over(n_states, n_actions, &all)
    }
}

/// Anchor action `a_o` and anchor state `s_o ∈ S_o` for every observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Anchors {
    pub actions: Vec<usize>,
    pub states: Vec<usize>,
}

impl Anchors {
    /// Action 0 and the smallest state of each fiber.
    pub fn default_for(pomdp: &Pomdp) -> Self {
        let states = pomdp
            .fibers()
            .iter()
            .map(|f| f.first().copied().unwrap_or(0))
            .collect();
        Self { actions: vec![0; pomdp.n_observations], states }
    }

    pub fn check(&self, pomdp: &Pomdp) -> Result<()> {
        let no = pomdp.n_observations;
        if self.actions.len() != no || self.states.len() != no {
            return Err(Error::InvalidInput(format!(
                "anchors cover {} / {} observations, expected {no}",
                self.actions.len(),
                self.states.len()
            )));
        }
        for o in 0..no {
            if self.actions[o] >= pomdp.n_actions {
                return Err(Error::InvalidInput(format!(
                    "anchor action {} of observation {o} out of range",
                    self.actions[o]
                )));
            }
            let s = self.states[o];
            if s >= pomdp.n_states || pomdp.g_beta[s] != o {
                return Err(Error::InvalidInput(format!(
                    "anchor state {s} is not in the fiber of observation {o}"
                )));
            }
        }
        Ok(())
    }
}

pub fn linear_constraints(pomdp: &Pomdp) -> Vec<LinearConstraint> {
    let (ns, na, gamma) = (pomdp.n_states, pomdp.n_actions, pomdp.gamma);
    (0..ns)
        .map(|s| {
            let mut coeffs = vec![0.0; ns * na];
            for from in 0..ns {
                for a in 0..na {
                    let i = from * na + a;
                    coeffs[i] -= gamma * pomdp.transition(s, from, a);
                    if from == s {
                        coeffs[i] += 1.0;
                    }
                }
            }
            LinearConstraint { state: s, coeffs, constant: -(1.0 - gamma) * pomdp.mu[s] }
        })
        .collect()
}

/// All 2×2 minors of every fiber block, one per unordered state pair and
/// unordered action pair.
pub fn minor_constraints(pomdp: &Pomdp) -> Vec<MinorConstraint> {
    let na = pomdp.n_actions;
    let mut out = Vec::new();
    for fiber in pomdp.fibers() {
        for (i, &s) in fiber.iter().enumerate() {
            for &t in &fiber[i + 1..] {
                for a in 0..na {
                    for b in a + 1..na {
                        out.push(MinorConstraint { states: (s, t), actions: (a, b) });
                    }
                }
            }
        }
    }
    out
}

/// The `(n_A - 1)(n_S - n_O)` reduced quadratics for the given anchors.
pub fn reduced_quadratics(pomdp: &Pomdp, anchors: &Anchors) -> Result<Vec<ReducedQuadratic>> {
    anchors.check(pomdp)?;
    let mut out = Vec::new();
    for (o, fiber) in pomdp.fibers().into_iter().enumerate() {
        let (a_o, s_o) = (anchors.actions[o], anchors.states[o]);
        for &s in fiber.iter().filter(|&&s| s != s_o) {
            for a in (0..pomdp.n_actions).filter(|&a| a != a_o) {
                out.push(ReducedQuadratic {
                    observation: o,
                    anchor_action: a_o,
                    anchor_state: s_o,
                    state: s,
                    action: a,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityResidual {
    pub max_linear: f64,
    pub max_quadratic: f64,
    pub min_entry: f64,
    pub sum_gap: f64,
}

impl FeasibilityResidual {
    /// Largest equality violation.
    pub fn max_equality(&self) -> f64 {
        self.max_linear.max(self.max_quadratic).max(self.sum_gap)
    }
}

/// Residuals of `eta` against the defining equalities (reduced quadratics
/// with the given anchors) and the nonnegativity constraints.
pub fn feasibility_residual(
    pomdp: &Pomdp,
    eta: &StateActionFrequency,
    anchors: &Anchors,
) -> Result<FeasibilityResidual> {
    let x = eta.as_slice();
    if x.len() != pomdp.n_pairs() {
        return Err(Error::DimensionMismatch { expected: pomdp.n_pairs(), actual: x.len() });
    }
    let max_linear = linear_constraints(pomdp)
        .iter()
        .map(|l| l.eval(x).abs())
        .fold(0.0, f64::max);
    let max_quadratic = reduced_quadratics(pomdp, anchors)?
        .iter()
        .map(|p| p.eval(x, pomdp.n_actions).abs())
        .fold(0.0, f64::max);
    Ok(FeasibilityResidual {
        max_linear,
        max_quadratic,
        min_entry: x.iter().copied().fold(f64::INFINITY, f64::min),
        sum_gap: (eta.total() - 1.0).abs(),
    })
}

/// Whether every equality residual is at most `tol` and `η ≥ -tol`.
pub fn is_feasible(
    pomdp: &Pomdp,
    eta: &StateActionFrequency,
    anchors: &Anchors,
    tol: f64,
) -> Result<bool> {
    let r = feasibility_residual(pomdp, eta, anchors)?;
    Ok(r.max_equality() <= tol && r.min_entry >= -tol)
}

/// JSON dump of every constraint: kind, indices and sparse terms.
pub fn constraint_dump(pomdp: &Pomdp, anchors: &Anchors) -> Result<serde_json::Value> {
    let (ns, na) = (pomdp.n_states, pomdp.n_actions);
    let names: Vec<String> = (0..ns)
        .flat_map(|s| (0..na).map(move |a| format!("eta[{s},{a}]")))
        .collect();
    let mut out = Vec::new();
    for l in linear_constraints(pomdp) {
        out.push(json!({
            "kind": "linear",
            "indices": { "state": l.state },
            "terms": polynomial_to_json(&l.to_polynomial(), &names),
        }));
    }
    for m in minor_constraints(pomdp) {
        out.push(json!({
            "kind": "minor",
            "indices": { "states": [m.states.0, m.states.1], "actions": [m.actions.0, m.actions.1] },
            "terms": polynomial_to_json(&m.to_polynomial(ns, na), &names),
        }));
    }
    for p in reduced_quadratics(pomdp, anchors)? {
        out.push(json!({
            "kind": "reduced_quadratic",
            "indices": p,
            "terms": polynomial_to_json(&p.to_polynomial(ns, na), &names),
        }));
    }
    Ok(serde_json::Value::Array(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{phi, random_policy, random_pomdp, three_state_aliased, Policy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn minor_counts() {
        let full = random_pomdp(3, 2, &[1, 1, 1], 0).unwrap();
        assert!(minor_constraints(&full).is_empty());
        let blind = random_pomdp(3, 2, &[3], 0).unwrap();
        assert_eq!(minor_constraints(&blind).len(), 3);
        let p = random_pomdp(5, 3, &[2, 2, 1], 0).unwrap();
        assert_eq!(minor_constraints(&p).len(), 2 * 3);
    }

    #[test]
    fn reduced_quadratic_counts() {
        let p = random_pomdp(3, 2, &[2, 1], 0).unwrap();
        assert_eq!(reduced_quadratics(&p, &Anchors::default_for(&p)).unwrap().len(), 1);
        let p = random_pomdp(4, 3, &[4], 0).unwrap();
        assert_eq!(reduced_quadratics(&p, &Anchors::default_for(&p)).unwrap().len(), 6);
    }

    #[test]
    fn anchor_outside_fiber_is_rejected() {
        let p = random_pomdp(3, 2, &[2, 1], 0).unwrap();
        let anchors = Anchors { actions: vec![0, 0], states: vec![2, 2] };
        assert!(reduced_quadratics(&p, &anchors).is_err());
    }

    #[test]
    fn reduced_quadratic_is_signed_minor_sum() {
        let p = random_pomdp(4, 3, &[3, 1], 0).unwrap();
        let (ns, na) = (4, 3);
        for q in reduced_quadratics(&p, &Anchors::default_for(&p)).unwrap() {
            let n = ns * na;
            let v = |s: usize, a: usize| Polynomial::var(n, s * na + a);
            let mut sum = Polynomial::zero(n);
            for b in (0..na).filter(|&b| b != q.action) {
                let m = &(&v(q.state, q.action) * &v(q.anchor_state, b))
                    - &(&v(q.anchor_state, q.action) * &v(q.state, b));
                sum = &sum + &m;
            }
            assert!((&q.to_polynomial(ns, na) - &sum).is_zero());
        }
    }

    #[test]
    fn phi_points_satisfy_all_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_pomdp(3, 2, &[2, 1], 17).unwrap();
        let anchors = Anchors::default_for(&p);
        for _ in 0..100 {
            let eta = phi(&p, &random_policy(2, 2, &mut rng)).unwrap();
            let r = feasibility_residual(&p, &eta, &anchors).unwrap();
            assert!(r.max_linear < 1e-10 && r.max_quadratic < 1e-10, "{r:?}");
            assert!(r.min_entry >= -1e-12 && r.sum_gap < 1e-10);
            for m in minor_constraints(&p) {
                assert!(m.eval(eta.as_slice(), 2).abs() < 1e-10);
            }
            assert!(is_feasible(&p, &eta, &anchors, DEFAULT_FEASIBILITY_TOL).unwrap());
        }
    }

    #[test]
    fn uniform_point_is_not_stationary() {
        let p = three_state_aliased();
        let anchors = Anchors::default_for(&p);
        let eta = StateActionFrequency::uniform(3, 2);
        let r = feasibility_residual(&p, &eta, &anchors).unwrap();
        // ℓ_{s1}(uniform) = (3 + 6 - 3)/36 - 1/6 scaled by 1/6
        assert!(r.max_linear > 1e-3);
        assert!(!is_feasible(&p, &eta, &anchors, DEFAULT_FEASIBILITY_TOL).unwrap());
    }

    #[test]
    fn doubling_opens_the_sum_gap() {
        let p = three_state_aliased();
        let anchors = Anchors::default_for(&p);
        let eta = phi(&p, &Policy::uniform(2, 2)).unwrap();
        let doubled =
            StateActionFrequency::new(3, 2, eta.as_slice().iter().map(|x| 2.0 * x).collect()).unwrap();
        let r = feasibility_residual(&p, &doubled, &anchors).unwrap();
        assert!((r.sum_gap - 1.0).abs() < 1e-12);
        assert!(!is_feasible(&p, &doubled, &anchors, DEFAULT_FEASIBILITY_TOL).unwrap());
    }

    #[test]
    fn dump_lists_every_constraint() {
        let p = three_state_aliased();
        let dump = constraint_dump(&p, &Anchors::default_for(&p)).unwrap();
        let kinds: Vec<&str> =
            dump.as_array().unwrap().iter().map(|c| c["kind"].as_str().unwrap()).collect();
        assert_eq!(kinds, ["linear", "linear", "linear", "minor", "reduced_quadratic"]);
    }
}
