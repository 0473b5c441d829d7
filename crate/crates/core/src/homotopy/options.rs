use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of start paths.
pub const DEFAULT_BUDGET: u128 = 100_000;

/// Path-tracking and post-processing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerOptions {
    pub initial_step: f64,
    pub min_step: f64,
    /// Largest step in `t` outside the endgame zone.
    pub max_step: f64,
    pub corrector_tol: f64,
    pub max_corrector_iters: usize,
    pub endpoint_tol: f64,
    pub max_path_steps: usize,
    /// Paths with `1 - t` below this run with steps capped at `endgame_step`.
    pub endgame_zone: f64,
    pub endgame_step: f64,
    /// Coordinates beyond this magnitude mark a path as diverging.
    pub divergence_norm: f64,
    /// Endpoints whose equilibrated jacobian condition number exceeds this
    /// are singular.
    pub singular_cond: f64,
    /// Residual an endpoint needs to count as converged.
    pub residual_tol: f64,
    pub dedupe_radius: f64,
    pub gamma_seed: u64,
    /// Largest admissible Bézout number.
    pub budget: u128,
    /// Retrack paths that land on an already-found nonsingular endpoint.
    pub retrack_duplicates: bool,
    /// Worker threads for path tracking; `None` uses the ambient pool.
    pub threads: Option<usize>,
}

impl Default for TrackerOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            min_step: 1e-10,
            max_step: 0.1,
            corrector_tol: 1e-10,
            max_corrector_iters: 5,
            endpoint_tol: 1e-12,
            max_path_steps: 10_000,
            endgame_zone: 0.05,
            endgame_step: 0.005,
            divergence_norm: 1e8,
            singular_cond: 1e10,
            residual_tol: 1e-8,
            dedupe_radius: 1e-6,
            gamma_seed: 0,
            budget: DEFAULT_BUDGET,
            retrack_duplicates: true,
            threads: None,
        }
    }
}

impl TrackerOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("tracker options: {what}")));
        if !(self.min_step > 0.0 && self.min_step < self.initial_step && self.initial_step < 1.0) {
            return bad("need 0 < min_step < initial_step < 1");
        }
        if self.max_step < self.initial_step {
            return bad("max_step below initial_step");
        }
        let tols = [
            self.corrector_tol,
            self.endpoint_tol,
            self.residual_tol,
            self.dedupe_radius,
            self.endgame_step,
            self.divergence_norm,
            self.singular_cond,
        ];
        if tols.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return bad("tolerances must be positive and finite");
        }
        if self.max_corrector_iters == 0 || self.max_path_steps == 0 {
            return bad("iteration limits must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        Ok(())
    }

    /// Budget from `SAROP_BUDGET` when set and parseable.
    pub fn with_env_budget(mut self) -> Self {
        if let Some(b) = std::env::var("SAROP_BUDGET").ok().and_then(|v| v.trim().parse().ok()) {
            self.budget = b;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        TrackerOptions::default().validate().unwrap();
    }

    #[test]
    fn inverted_steps_are_rejected() {
        let o = TrackerOptions { min_step: 0.1, initial_step: 0.05, ..Default::default() };
        assert!(o.validate().is_err());
        let o = TrackerOptions { corrector_tol: 0.0, ..Default::default() };
        assert!(o.validate().is_err());
    }
}
