//! POMDP data model with deterministic observations (state aggregation).
//!
//! A policy `π` maps observations to action distributions. Composing it with
//! the observation map gives a state policy `τ = π∘β`, which together with the
//! transition kernel determines the discounted state-action frequency
//!
//! ```text
//! η = (1-γ) (I - γ P_τ)^{-1} (μ * τ),    P_τ(s',a'|s,a) = α(s'|s,a) τ(a'|s')
//! ```
//!
//! The reward of a policy is the inner product `⟨r, η⟩`.
//!
//! All arrays over state-action pairs are flattened row-major by `(s, a)`,
//! i.e. index `s * n_actions + a`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on stochasticity invariants of problem data.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// State frequencies at or below this value are treated as zero.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Discount used by [`random_pomdp`].
pub const DEFAULT_DISCOUNT: f64 = 0.5;

/// A finite POMDP with a deterministic observation map.
///
/// The JSON layout of this struct is the on-disk instance format:
/// `alpha[s * n_actions + a][s']` is the probability of moving to `s'` after
/// taking `a` in `s`, and `reward[s][a]` is the instantaneous reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pomdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_observations: usize,
    pub gamma: f64,
    pub mu: Vec<f64>,
    pub g_beta: Vec<usize>,
    pub alpha: Vec<Vec<f64>>,
    pub reward: Vec<Vec<f64>>,
}

/// One broken invariant of a [`Pomdp`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Shape { field: &'static str, expected: usize, actual: usize },
    EmptySpace { field: &'static str },
    AlphaNegative { state: usize, action: usize, next: usize, value: f64 },
    AlphaColumnSum { state: usize, action: usize, sum: f64 },
    MuNegative { state: usize, value: f64 },
    MuSum { sum: f64 },
    ObservationOutOfRange { state: usize, observation: usize },
    ObservationUnused { observation: usize },
    Discount { gamma: f64 },
    NonFinite { field: &'static str, index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { field, expected, actual } => {
                write!(f, "{field}: expected length {expected}, found {actual}")
            }
            Violation::EmptySpace { field } => write!(f, "{field} must be positive"),
            Violation::AlphaNegative { state, action, next, value } => write!(
                f,
                "alpha({next}|{state},{action}) = {value:e} is negative"
            ),
            Violation::AlphaColumnSum { state, action, sum } => write!(
                f,
                "alpha(.|{state},{action}) sums to {sum} (off by {:e})",
                sum - 1.0
            ),
            Violation::MuNegative { state, value } => {
                write!(f, "mu[{state}] = {value:e} is negative")
            }
            Violation::MuSum { sum } => write!(f, "mu sums to {sum} (off by {:e})", sum - 1.0),
            Violation::ObservationOutOfRange { state, observation } => {
                write!(f, "g_beta[{state}] = {observation} is not a valid observation")
            }
            Violation::ObservationUnused { observation } => {
                write!(f, "observation {observation} has an empty fiber (g_beta not surjective)")
            }
            Violation::Discount { gamma } => write!(f, "gamma = {gamma} is outside (0, 1)"),
            Violation::NonFinite { field, index } => {
                write!(f, "{field} has a non-finite entry at index {index}")
            }
        }
    }
}

impl Pomdp {
    /// Parses an instance from JSON and checks array shapes.
    ///
    /// Stochasticity invariants are not enforced here; use [`validate`].
    pub fn from_json(text: &str) -> Result<Pomdp> {
        let pomdp: Pomdp = serde_json::from_str(text)?;
        let shape: Vec<_> = validate(&pomdp)
            .into_iter()
            .filter(|v| matches!(v, Violation::Shape { .. } | Violation::EmptySpace { .. }))
            .collect();
        if let Some(v) = shape.first() {
            return Err(Error::InvalidInput(v.to_string()));
        }
        Ok(pomdp)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("POMDP serialization cannot fail")
    }

    /// Number of state-action pairs.
    #[inline]
    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    /// Flat index of the pair `(s, a)`.
    #[inline]
    pub fn idx(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// `α(next | s, a)`.
    #[inline]
    pub fn transition(&self, next: usize, s: usize, a: usize) -> f64 {
        self.alpha[self.idx(s, a)][next]
    }

    /// Reward flattened by `(s, a)`.
    pub fn reward_vector(&self) -> Vec<f64> {
        self.reward.iter().flatten().copied().collect()
    }

    /// States grouped by observation.
    pub fn fibers(&self) -> Vec<Vec<usize>> {
        let mut fibers = vec![Vec::new(); self.n_observations];
        for (s, &o) in self.g_beta.iter().enumerate() {
            if o < self.n_observations {
                fibers[o].push(s);
            }
        }
        fibers
    }

    /// Fiber cardinalities `d_o`.
    pub fn fiber_sizes(&self) -> Vec<usize> {
        self.fibers().iter().map(Vec::len).collect()
    }
}

/// Lists every violated invariant of `pomdp`; empty iff the instance is valid.
pub fn validate(pomdp: &Pomdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let (ns, na, no) = (pomdp.n_states, pomdp.n_actions, pomdp.n_observations);
    for (field, n) in [("n_states", ns), ("n_actions", na), ("n_observations", no)] {
        if n == 0 {
            out.push(Violation::EmptySpace { field });
        }
    }
    let mut shape = |field, expected, actual| {
        if expected != actual {
            out.push(Violation::Shape { field, expected, actual });
        }
    };
    shape("mu", ns, pomdp.mu.len());
    shape("g_beta", ns, pomdp.g_beta.len());
    shape("alpha", ns * na, pomdp.alpha.len());
    shape("reward", ns, pomdp.reward.len());
    for col in &pomdp.alpha {
        shape("alpha[*]", ns, col.len());
    }
    for row in &pomdp.reward {
        shape("reward[*]", na, row.len());
    }
    if !out.is_empty() {
        return out;
    }

    if !(pomdp.gamma > 0.0 && pomdp.gamma < 1.0) {
        out.push(Violation::Discount { gamma: pomdp.gamma });
    }
    for s in 0..ns {
        for a in 0..na {
            let col = &pomdp.alpha[s * na + a];
            for (next, &p) in col.iter().enumerate() {
                if !p.is_finite() {
                    out.push(Violation::NonFinite { field: "alpha", index: s * na + a });
                } else if p < -STOCHASTIC_TOL {
                    out.push(Violation::AlphaNegative { state: s, action: a, next, value: p });
                }
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                out.push(Violation::AlphaColumnSum { state: s, action: a, sum });
            }
        }
        for (a, r) in pomdp.reward[s].iter().enumerate() {
            if !r.is_finite() {
                out.push(Violation::NonFinite { field: "reward", index: s * na + a });
            }
        }
    }
    for (s, &m) in pomdp.mu.iter().enumerate() {
        if m < -STOCHASTIC_TOL {
            out.push(Violation::MuNegative { state: s, value: m });
        }
    }
    let mu_sum: f64 = pomdp.mu.iter().sum();
    if (mu_sum - 1.0).abs() > STOCHASTIC_TOL {
        out.push(Violation::MuSum { sum: mu_sum });
    }
    let mut used = vec![false; no];
    for (s, &o) in pomdp.g_beta.iter().enumerate() {
        if o >= no {
            out.push(Violation::ObservationOutOfRange { state: s, observation: o });
        } else {
            used[o] = true;
        }
    }
    for (o, u) in used.into_iter().enumerate() {
        if !u {
            out.push(Violation::ObservationUnused { observation: o });
        }
    }
    out
}

fn sample_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Random instance with [`DEFAULT_DISCOUNT`]; see [`random_pomdp_with_discount`].
pub fn random_pomdp(
    n_states: usize,
    n_actions: usize,
    fiber_sizes: &[usize],
    seed: u64,
) -> Result<Pomdp> {
    random_pomdp_with_discount(n_states, n_actions, fiber_sizes, seed, DEFAULT_DISCOUNT)
}

/// Samples `μ` and every `α(·|s,a)` uniformly from the simplex and the reward
/// from a standard normal. States are assigned to observations in blocks of
/// `fiber_sizes`. The result depends only on the arguments.
pub fn random_pomdp_with_discount(
    n_states: usize,
    n_actions: usize,
    fiber_sizes: &[usize],
    seed: u64,
    gamma: f64,
) -> Result<Pomdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidInput("n_states and n_actions must be positive".into()));
    }
    if fiber_sizes.is_empty() || fiber_sizes.contains(&0) {
        return Err(Error::InvalidInput("fiber sizes must be positive".into()));
    }
    let total: usize = fiber_sizes.iter().sum();
    if total != n_states {
        return Err(Error::InvalidInput(format!(
            "fiber sizes {fiber_sizes:?} sum to {total}, expected {n_states}"
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidInput(format!("discount {gamma} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = sample_simplex(&mut rng, n_states);
    let alpha = (0..n_states * n_actions)
        .map(|_| sample_simplex(&mut rng, n_states))
        .collect();
    let reward = (0..n_states)
        .map(|_| (0..n_actions).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let g_beta = fiber_sizes
        .iter()
        .enumerate()
        .flat_map(|(o, &d)| std::iter::repeat_n(o, d))
        .collect();
    Ok(Pomdp {
        n_states,
        n_actions,
        n_observations: fiber_sizes.len(),
        gamma,
        mu,
        g_beta,
        alpha,
        reward,
    })
}

/// Column-stochastic matrix of action probabilities given a conditioning
/// variable, stored column by column.
macro_rules! kernel_type {
    ($(#[$meta:meta])* $name:ident, $cols:ident, $col_name:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            n_actions: usize,
            $cols: usize,
            probs: Vec<f64>,
        }

        impl $name {
            /// Builds from column-major probabilities; `probs[c * n_actions + a]`.
            pub fn new(n_actions: usize, $cols: usize, probs: Vec<f64>) -> Result<Self> {
                if probs.len() != n_actions * $cols {
                    return Err(Error::DimensionMismatch {
                        expected: n_actions * $cols,
                        actual: probs.len(),
                    });
                }
                Ok(Self { n_actions, $cols, probs })
            }

            /// Builds from one probability vector per column.
            pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
                let n_actions = columns.first().map_or(0, Vec::len);
                if columns.iter().any(|c| c.len() != n_actions) {
                    return Err(Error::InvalidInput(concat!("ragged ", $col_name, " columns").into()));
                }
                Self::new(n_actions, columns.len(), columns.concat())
            }

            pub fn uniform(n_actions: usize, $cols: usize) -> Self {
                let p = 1.0 / n_actions as f64;
                Self { n_actions, $cols, probs: vec![p; n_actions * $cols] }
            }

            /// Puts all mass on `actions[c]` in column `c`.
            pub fn deterministic(n_actions: usize, actions: &[usize]) -> Self {
                let mut probs = vec![0.0; n_actions * actions.len()];
                for (c, &a) in actions.iter().enumerate() {
                    probs[c * n_actions + a] = 1.0;
                }
                Self { n_actions, $cols: actions.len(), probs }
            }

            #[inline]
            pub fn n_actions(&self) -> usize {
                self.n_actions
            }

            #[inline]
            pub fn $cols(&self) -> usize {
                self.$cols
            }

            #[inline]
            pub fn get(&self, a: usize, c: usize) -> f64 {
                self.probs[c * self.n_actions + a]
            }

            #[inline]
            pub fn column(&self, c: usize) -> &[f64] {
                &self.probs[c * self.n_actions..(c + 1) * self.n_actions]
            }

            pub fn columns(&self) -> Vec<Vec<f64>> {
                self.probs.chunks(self.n_actions.max(1)).map(<[f64]>::to_vec).collect()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.probs
            }

            /// Largest deviation from column-stochasticity (negative mass or column sum).
            pub fn stochasticity_gap(&self) -> f64 {
                let mut gap = 0.0f64;
                for c in 0..self.$cols {
                    let col = self.column(c);
                    gap = gap.max((col.iter().sum::<f64>() - 1.0).abs());
                    for &p in col {
                        gap = gap.max(-p);
                    }
                }
                gap
            }
        }
    };
}

kernel_type!(
    /// Memoryless stochastic policy `π(a|o)`.
    Policy,
    n_observations,
    "policy"
);

kernel_type!(
    /// State policy `τ(a|s)`.
    StatePolicy,
    n_states,
    "state policy"
);

/// Discounted state-action frequency `η`, flattened by `(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateActionFrequency {
    n_states: usize,
    n_actions: usize,
    eta: Vec<f64>,
}

impl StateActionFrequency {
    pub fn new(n_states: usize, n_actions: usize, eta: Vec<f64>) -> Result<Self> {
        if eta.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch {
                expected: n_states * n_actions,
                actual: eta.len(),
            });
        }
        Ok(Self { n_states, n_actions, eta })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let n = n_states * n_actions;
        Self { n_states, n_actions, eta: vec![1.0 / n as f64; n] }
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.eta[s * self.n_actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.eta
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.eta
    }

    /// State marginal `ρ_s = Σ_a η(s,a)`.
    pub fn rho(&self) -> Vec<f64> {
        self.eta.chunks(self.n_actions).map(|row| row.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.eta.iter().sum()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.eta.iter().zip(v).map(|(x, y)| x * y).sum()
    }
}

fn check_policy_shape(pomdp: &Pomdp, policy: &Policy) -> Result<()> {
    if policy.n_actions() != pomdp.n_actions || policy.n_observations() != pomdp.n_observations {
        return Err(Error::InvalidInput(format!(
            "policy is {}x{}, instance needs {}x{}",
            policy.n_actions(),
            policy.n_observations(),
            pomdp.n_actions,
            pomdp.n_observations
        )));
    }
    Ok(())
}

/// `τ(a|s) = π(a|g_β(s))`.
pub fn state_policy(pomdp: &Pomdp, policy: &Policy) -> StatePolicy {
    let probs = pomdp
        .g_beta
        .iter()
        .flat_map(|&o| policy.column(o).iter().copied())
        .collect();
    StatePolicy::new(pomdp.n_actions, pomdp.n_states, probs).expect("shape follows from pomdp")
}

/// State-action transition kernel `P(s',a'|s,a) = α(s'|s,a) τ(a'|s')` with
/// rows indexed by `(s',a')` and columns by `(s,a)`.
pub fn state_action_kernel(pomdp: &Pomdp, tau: &StatePolicy) -> DMatrix<f64> {
    let n = pomdp.n_pairs();
    let na = pomdp.n_actions;
    DMatrix::from_fn(n, n, |row, col| {
        let (next, next_a) = (row / na, row % na);
        let (s, a) = (col / na, col % na);
        pomdp.transition(next, s, a) * tau.get(next_a, next)
    })
}

struct Occupancy {
    eta: DVector<f64>,
    matrix: DMatrix<f64>,
}

fn occupancy(pomdp: &Pomdp, tau: &StatePolicy) -> Result<Occupancy> {
    let n = pomdp.n_pairs();
    let p = state_action_kernel(pomdp, tau);
    let m = DMatrix::<f64>::identity(n, n) - p * pomdp.gamma;
    let b = DVector::from_fn(n, |i, _| {
        let (s, a) = (i / pomdp.n_actions, i % pomdp.n_actions);
        pomdp.mu[s] * tau.get(a, s)
    });
    let x = m.clone().lu().solve(&b).ok_or(Error::Singular("state-action frequency system"))?;
    Ok(Occupancy { eta: x * (1.0 - pomdp.gamma), matrix: m })
}

/// State-action frequency of a state policy.
pub fn frequency_of_state_policy(pomdp: &Pomdp, tau: &StatePolicy) -> Result<StateActionFrequency> {
    let occ = occupancy(pomdp, tau)?;
    StateActionFrequency::new(pomdp.n_states, pomdp.n_actions, occ.eta.as_slice().to_vec())
}

/// The frequency map `Φ(π)`.
pub fn phi(pomdp: &Pomdp, policy: &Policy) -> Result<StateActionFrequency> {
    check_policy_shape(pomdp, policy)?;
    frequency_of_state_policy(pomdp, &state_policy(pomdp, policy))
}

/// Discounted reward `R(π) = ⟨r, Φ(π)⟩`.
pub fn reward_value(pomdp: &Pomdp, policy: &Policy) -> Result<f64> {
    Ok(phi(pomdp, policy)?.dot(&pomdp.reward_vector()))
}

/// Partial derivatives of the reward with respect to every entry `π(a|o)`,
/// treating the entries as independent coordinates (the rational formula for
/// `Φ` extends off the simplex).
pub fn reward_partials(pomdp: &Pomdp, policy: &Policy) -> Result<Policy> {
    check_policy_shape(pomdp, policy)?;
    let tau = state_policy(pomdp, policy);
    let occ = occupancy(pomdp, &tau)?;
    let na = pomdp.n_actions;
    let gamma = pomdp.gamma;
    // adjoint: (I - γP)^T v = r
    let r = DVector::from_vec(pomdp.reward_vector());
    let v = occ
        .matrix
        .transpose()
        .lu()
        .solve(&r)
        .ok_or(Error::Singular("adjoint reward system"))?;
    // d η = M^{-1} (γ dP η + (1-γ) d(μ*τ)), and both perturbations only act
    // through the discounted inflow into each state
    let mut grad = vec![0.0; na * pomdp.n_observations];
    for next in 0..pomdp.n_states {
        let mut inflow = (1.0 - gamma) * pomdp.mu[next];
        for (col, &e) in occ.eta.iter().enumerate() {
            inflow += gamma * pomdp.transition(next, col / na, col % na) * e;
        }
        let o = pomdp.g_beta[next];
        for a in 0..na {
            grad[o * na + a] += v[next * na + a] * inflow;
        }
    }
    Policy::new(na, pomdp.n_observations, grad)
}

/// Gradient of the reward on the policy polytope: the partial derivatives
/// projected onto the tangent space of each column simplex (columns sum to
/// zero). With a single action the gradient vanishes identically.
pub fn reward_gradient(pomdp: &Pomdp, policy: &Policy) -> Result<Policy> {
    let partials = reward_partials(pomdp, policy)?;
    let na = pomdp.n_actions;
    let mut g = partials.as_slice().to_vec();
    for col in g.chunks_mut(na) {
        let mean = col.iter().sum::<f64>() / na as f64;
        col.iter_mut().for_each(|x| *x -= mean);
    }
    Policy::new(na, pomdp.n_observations, g)
}

/// Conditioning map `Γ`: `τ(a|s) = η(s,a) / ρ_s`.
pub fn condition(eta: &StateActionFrequency) -> Result<StatePolicy> {
    condition_with_tol(eta, POSITIVITY_TOL)
}

pub fn condition_with_tol(eta: &StateActionFrequency, tol: f64) -> Result<StatePolicy> {
    let rho = eta.rho();
    let bad: Vec<usize> = (0..rho.len()).filter(|&s| rho[s] <= tol).collect();
    if !bad.is_empty() {
        return Err(Error::ConditioningUndefined(bad));
    }
    let na = eta.n_actions();
    let probs = (0..eta.n_states())
        .flat_map(|s| (0..na).map(move |a| (s, a)))
        .map(|(s, a)| eta.get(s, a) / rho[s])
        .collect();
    StatePolicy::new(na, eta.n_states(), probs)
}

/// Recovers an observation policy from a (near-)feasible frequency by the
/// `ρ`-weighted average over each fiber, skipping states with `ρ_s` at or
/// below [`POSITIVITY_TOL`]. Negative round-off is clipped and columns are
/// renormalized.
pub fn recover_policy(
    eta: &StateActionFrequency,
    g_beta: &[usize],
    n_observations: usize,
) -> Result<Policy> {
    if g_beta.len() != eta.n_states() {
        return Err(Error::DimensionMismatch { expected: eta.n_states(), actual: g_beta.len() });
    }
    let na = eta.n_actions();
    let rho = eta.rho();
    let mut probs = vec![0.0; na * n_observations];
    let mut mass = vec![0.0; n_observations];
    for (s, &o) in g_beta.iter().enumerate() {
        if o >= n_observations {
            return Err(Error::InvalidInput(format!("g_beta[{s}] = {o} out of range")));
        }
        if rho[s] <= POSITIVITY_TOL {
            continue;
        }
        mass[o] += rho[s];
        for a in 0..na {
            probs[o * na + a] += eta.get(s, a);
        }
    }
    let undefined: Vec<usize> = (0..n_observations).filter(|&o| mass[o] <= 0.0).collect();
    if !undefined.is_empty() {
        return Err(Error::RecoveryUndefined(undefined));
    }
    for col in probs.chunks_mut(na) {
        col.iter_mut().for_each(|p| *p = p.max(0.0));
        let total: f64 = col.iter().sum();
        if total > 0.0 {
            col.iter_mut().for_each(|p| *p /= total);
        } else {
            col.iter_mut().for_each(|p| *p = 1.0 / na as f64);
        }
    }
    Policy::new(na, n_observations, probs)
}

/// Uniformly random policy (each column uniform on the simplex).
pub fn random_policy(n_actions: usize, n_observations: usize, rng: &mut impl Rng) -> Policy {
    let mut probs = Vec::with_capacity(n_actions * n_observations);
    for _ in 0..n_observations {
        let draws: Vec<f64> = (0..n_actions).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        probs.extend(draws.into_iter().map(|x| x / total));
    }
    Policy::new(n_actions, n_observations, probs).expect("shape by construction")
}

/// Checks that every state has positive frequency under every policy.
///
/// A full-support initial distribution is sufficient; otherwise `n_probe`
/// random policies (plus all deterministic ones when few) are tested.
pub fn check_positivity(pomdp: &Pomdp, n_probe: usize, seed: u64) -> bool {
    if pomdp.mu.iter().all(|&m| m > 0.0) {
        return true;
    }
    let na = pomdp.n_actions;
    let no = pomdp.n_observations;
    let probe = |policy: &Policy| match phi(pomdp, policy) {
        Ok(eta) => eta.rho().iter().all(|&r| r >= POSITIVITY_TOL),
        Err(_) => false,
    };
    let vertices = (na as u64).checked_pow(no as u32).unwrap_or(u64::MAX);
    if vertices <= 256 {
        for code in 0..vertices {
            let mut c = code;
            let actions: Vec<usize> = (0..no)
                .map(|_| {
                    let a = (c % na as u64) as usize;
                    c /= na as u64;
                    a
                })
                .collect();
            if !probe(&Policy::deterministic(na, &actions)) {
                return false;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_probe).all(|_| probe(&random_policy(na, no, &mut rng)))
}

/// Three-state instance whose first two states are indistinguishable: two
/// actions, deterministic transitions, `γ = 1/2`, uniform `μ`, and reward 1
/// in the first state.
pub fn three_state_aliased() -> Pomdp {
    // columns (s,a): (s1,a1) (s1,a2) (s2,a1) (s2,a2) (s3,a1) (s3,a2)
    let next = [0usize, 2, 2, 0, 2, 1];
    let alpha = next
        .iter()
        .map(|&n| (0..3).map(|s| if s == n { 1.0 } else { 0.0 }).collect())
        .collect();
    Pomdp {
        n_states: 3,
        n_actions: 2,
        n_observations: 2,
        gamma: 0.5,
        mu: vec![1.0 / 3.0; 3],
        g_beta: vec![0, 0, 1],
        alpha,
        reward: vec![vec![1.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Truncated Neumann series `(1-γ) Σ_{t≤T} γ^t P^t (μ*τ)`.
    fn neumann_oracle(pomdp: &Pomdp, policy: &Policy, terms: usize) -> Vec<f64> {
        let tau = state_policy(pomdp, policy);
        let p = state_action_kernel(pomdp, &tau);
        let n = pomdp.n_pairs();
        let mut term = DVector::from_fn(n, |i, _| {
            let (s, a) = (i / pomdp.n_actions, i % pomdp.n_actions);
            pomdp.mu[s] * tau.get(a, s)
        });
        let mut acc = term.clone();
        for _ in 0..terms {
            term = &p * term * pomdp.gamma;
            acc += &term;
        }
        (acc * (1.0 - pomdp.gamma)).as_slice().to_vec()
    }

    #[test]
    fn aliased_instance_is_valid() {
        assert!(validate(&three_state_aliased()).is_empty());
    }

    #[test]
    fn alpha_column_violation_names_the_pair() {
        let mut p = three_state_aliased();
        p.alpha[3] = vec![0.9, 0.0, 0.0];
        let v = validate(&p);
        assert_eq!(v, vec![Violation::AlphaColumnSum { state: 1, action: 1, sum: 0.9 }]);
    }

    #[test]
    fn missing_observation_is_reported() {
        let mut p = three_state_aliased();
        p.g_beta = vec![0, 0, 0];
        assert_eq!(validate(&p), vec![Violation::ObservationUnused { observation: 1 }]);
    }

    #[test]
    fn random_instances_are_valid_and_reproducible() {
        let a = random_pomdp(3, 2, &[3], 7).unwrap();
        assert!(validate(&a).is_empty());
        let b = random_pomdp(3, 2, &[3], 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(random_pomdp(3, 2, &[2, 2], 1).is_err());
    }

    #[test]
    fn state_policy_repeats_within_fibers() {
        let p = three_state_aliased();
        let pi = Policy::deterministic(2, &[0, 1]);
        let tau = state_policy(&p, &pi);
        assert_eq!(tau.column(0), tau.column(1));
        assert_eq!(tau.column(2), &[0.0, 1.0]);

        let one = Pomdp { n_actions: 1, ..random_pomdp(2, 1, &[2], 3).unwrap() };
        let tau = state_policy(&one, &Policy::uniform(1, 1));
        assert_eq!(tau.as_slice(), &[1.0, 1.0]);

        let tau = state_policy(&p, &Policy::uniform(2, 2));
        assert!(tau.as_slice().iter().all(|&x| x == 0.5));
    }

    #[test]
    fn kernel_columns_are_stochastic() {
        let p = random_pomdp(4, 3, &[2, 2], 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tau = state_policy(&p, &random_policy(3, 2, &mut rng));
        let k = state_action_kernel(&p, &tau);
        for c in 0..k.ncols() {
            assert!((k.column(c).sum() - 1.0).abs() < 1e-12);
        }
        let single = random_pomdp(1, 1, &[1], 0).unwrap();
        let k = state_action_kernel(&single, &StatePolicy::uniform(1, 1));
        assert_eq!(k, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn deterministic_kernel_is_zero_one() {
        let p = three_state_aliased();
        let tau = state_policy(&p, &Policy::deterministic(2, &[0, 1]));
        let k = state_action_kernel(&p, &tau);
        for c in 0..6 {
            let col = k.column(c);
            assert_eq!(col.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|&&x| x == 0.0).count(), 5);
        }
    }

    #[test]
    fn phi_matches_neumann_series() {
        let p = three_state_aliased();
        let pi = Policy::uniform(2, 2);
        let eta = phi(&p, &pi).unwrap();
        let oracle = neumann_oracle(&p, &pi, 200);
        for (x, y) in eta.as_slice().iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn phi_single_state_is_the_policy() {
        let p = random_pomdp(1, 3, &[1], 5).unwrap();
        let pi = Policy::new(3, 1, vec![0.2, 0.3, 0.5]).unwrap();
        let eta = phi(&p, &pi).unwrap();
        for a in 0..3 {
            assert!((eta.get(0, a) - pi.get(a, 0)).abs() < 1e-14);
        }
        let value = reward_value(&p, &pi).unwrap();
        let closed: f64 = (0..3).map(|a| p.reward[0][a] * pi.get(a, 0)).sum();
        assert!((value - closed).abs() < 1e-14);
    }

    #[test]
    fn reward_of_deterministic_policy_matches_series() {
        let p = three_state_aliased();
        let pi = Policy::deterministic(2, &[0, 0]);
        let oracle: f64 = neumann_oracle(&p, &pi, 200)
            .iter()
            .zip(p.reward_vector())
            .map(|(e, r)| e * r)
            .sum();
        assert!((reward_value(&p, &pi).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn constant_reward_gives_constant_value() {
        let mut p = random_pomdp(3, 2, &[2, 1], 9).unwrap();
        p.reward = vec![vec![-1.25; 2]; 3];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let v = reward_value(&p, &random_policy(2, 2, &mut rng)).unwrap();
            assert!((v + 1.25).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-6;
        for seed in 0..20 {
            let p = random_pomdp(3, 2, &[2, 1], 100 + seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pi = random_policy(2, 2, &mut rng);
            let partials = reward_partials(&p, &pi).unwrap();
            for i in 0..pi.as_slice().len() {
                let bump = |d: f64| {
                    let mut probs = pi.as_slice().to_vec();
                    probs[i] += d;
                    reward_value(&p, &Policy::new(2, 2, probs).unwrap()).unwrap()
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                let exact = partials.as_slice()[i];
                let rel = (fd - exact).abs() / exact.abs().max(1e-3);
                assert!(rel < 1e-5, "seed {seed} entry {i}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn gradient_degenerate_cases() {
        let mut p = random_pomdp(3, 2, &[3], 4).unwrap();
        p.reward = vec![vec![0.0; 2]; 3];
        let g = reward_gradient(&p, &Policy::uniform(2, 1)).unwrap();
        assert!(g.as_slice().iter().all(|&x| x == 0.0));

        let p = random_pomdp(3, 1, &[2, 1], 4).unwrap();
        let g = reward_gradient(&p, &Policy::uniform(1, 2)).unwrap();
        assert!(g.as_slice().iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn conditioning_inverts_phi() {
        let p = random_pomdp(4, 3, &[2, 2], 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pi = random_policy(3, 2, &mut rng);
        let tau = condition(&phi(&p, &pi).unwrap()).unwrap();
        let expected = state_policy(&p, &pi);
        for (x, y) in tau.as_slice().iter().zip(expected.as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
        let uniform = condition(&StateActionFrequency::uniform(3, 2)).unwrap();
        assert!(uniform.as_slice().iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn conditioning_rejects_zero_rows() {
        let eta = StateActionFrequency::new(2, 2, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        match condition(&eta) {
            Err(Error::ConditioningUndefined(states)) => assert_eq!(states, vec![1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn recovery_round_trips() {
        let p = random_pomdp(4, 3, &[3, 1], 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pi = random_policy(3, 2, &mut rng);
        let back = recover_policy(&phi(&p, &pi).unwrap(), &p.g_beta, 2).unwrap();
        for (x, y) in back.as_slice().iter().zip(pi.as_slice()) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn recovery_for_blind_controller_sums_rows() {
        let eta = StateActionFrequency::new(2, 2, vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let pi = recover_policy(&eta, &[0, 0], 1).unwrap();
        assert!((pi.get(0, 0) - 0.3).abs() < 1e-15);
        assert!((pi.get(1, 0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn recovery_tolerates_infeasible_input() {
        // rank-one minor violated by 0.1
        let eta = StateActionFrequency::new(2, 2, vec![0.3, 0.2, 0.1, 0.4]).unwrap();
        let pi = recover_policy(&eta, &[0, 0], 1).unwrap();
        assert!(pi.stochasticity_gap() < 1e-15);
    }

    #[test]
    fn positivity_checks() {
        assert!(check_positivity(&three_state_aliased(), 10, 0));
        let mut p = random_pomdp(2, 2, &[1, 1], 0).unwrap();
        p.mu = vec![1.0, 0.0];
        // state 0 is absorbing, state 1 is never reached
        p.alpha = vec![vec![1.0, 0.0]; 4];
        assert!(!check_positivity(&p, 10, 0));
    }

    #[test]
    fn json_round_trip_and_shape_errors() {
        let p = random_pomdp(3, 2, &[2, 1], 1).unwrap();
        assert_eq!(Pomdp::from_json(&p.to_json()).unwrap(), p);
        let mut bad = p.clone();
        bad.mu.pop();
        assert!(matches!(Pomdp::from_json(&bad.to_json()), Err(Error::InvalidInput(_))));
        assert!(matches!(Pomdp::from_json("{\"n_states\": 3,"), Err(Error::Json(_))));
    }
}
