use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::homotopy::{ClassifyTolerances, PathStats, TrackerOptions};
use crate::pomdp::{Policy, StateActionFrequency};

/// Solution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kkt,
    LagrangeAll,
    LagrangeRelevant,
    ProjectedGradient,
    BruteForce,
}

impl Method {
    pub const CRITICAL_POINT: [Method; 3] = [Method::Kkt, Method::LagrangeAll, Method::LagrangeRelevant];

    pub fn name(self) -> &'static str {
        match self {
            Method::Kkt => "kkt",
            Method::LagrangeAll => "lagrange_all",
            Method::LagrangeRelevant => "lagrange_relevant",
            Method::ProjectedGradient => "pgd",
            Method::BruteForce => "brute",
        }
    }

    /// Whether the method enumerates critical points (and so reports counts).
    pub fn is_algebraic(self) -> bool {
        matches!(self, Method::Kkt | Method::LagrangeAll | Method::LagrangeRelevant)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.replace('-', "_").as_str() {
            "kkt" => Ok(Method::Kkt),
            "lagrange_all" => Ok(Method::LagrangeAll),
            "lagrange_relevant" => Ok(Method::LagrangeRelevant),
            "pgd" | "projected_gradient" => Ok(Method::ProjectedGradient),
            "brute" | "brute_force" => Ok(Method::BruteForce),
            other => Err(Error::InvalidInput(format!("unknown method {other}"))),
        }
    }
}

/// Knobs shared by the critical-point solvers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOptions {
    pub tracker: TrackerOptions,
    pub classify: ClassifyTolerances,
    /// Re-solve the winning system with a fresh `γ` and compare values.
    pub verify: bool,
    /// Required agreement of the verification run.
    pub verify_tol: f64,
    /// Run the α-test on every converged endpoint.
    pub certify: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tracker: TrackerOptions::default(),
            classify: ClassifyTolerances::default(),
            verify: true,
            verify_tol: 1e-8,
            certify: false,
        }
    }
}

/// Complex / real / positive solution counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolutionCounts {
    pub complex: usize,
    pub real: usize,
    pub positive: usize,
    /// Positive KKT solutions whose sign multipliers are also nonnegative.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_feasible: Option<usize>,
    /// Converged endpoints passing the α-test, when certification ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified: Option<usize>,
}

impl std::ops::AddAssign for SolutionCounts {
    fn add_assign(&mut self, o: Self) {
        let add = |a: Option<usize>, b: Option<usize>| match (a, b) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
        };
        self.complex += o.complex;
        self.real += o.real;
        self.positive += o.positive;
        self.dual_feasible = add(self.dual_feasible, o.dual_feasible);
        self.certified = add(self.certified, o.certified);
    }
}

/// Result of solving one system (a boundary component or the KKT system).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    /// `A_o` per observation, or `kkt`.
    pub component: String,
    pub n_variables: usize,
    pub bezout_number: u128,
    pub n_complex: usize,
    pub n_real: usize,
    pub n_positive: usize,
    pub best_local_objective: Option<f64>,
    /// Singular endpoints from which a real positive point of the same
    /// solution set was reached; these do not enter the counts.
    pub n_recovered: usize,
    pub counts: SolutionCounts,
    pub paths: PathStats,
}

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: Method,
    pub per_component: Vec<ComponentReport>,
    pub counts: SolutionCounts,
    pub best_eta: StateActionFrequency,
    pub best_policy: Policy,
    pub best_value: f64,
    /// Whether the verification re-run agreed.
    pub verified: bool,
    /// Absolute value gap of the verification re-run.
    pub verification_gap: Option<f64>,
    /// Seconds; excluded from reproducibility comparisons.
    pub wall_time: f64,
}

impl SolveReport {
    /// JSON with the timing field removed.
    pub fn to_json_without_timing(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serialization cannot fail");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_time");
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Kkt, Method::LagrangeAll, Method::LagrangeRelevant, Method::ProjectedGradient, Method::BruteForce] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("lagrange-relevant".parse::<Method>().unwrap(), Method::LagrangeRelevant);
        assert!("simplex".parse::<Method>().is_err());
    }

    #[test]
    fn counts_accumulate() {
        let mut a = SolutionCounts { complex: 2, real: 1, positive: 1, dual_feasible: None, certified: Some(2) };
        a += SolutionCounts { complex: 3, real: 3, positive: 0, dual_feasible: None, certified: None };
        assert_eq!(a.complex, 5);
        assert_eq!(a.certified, Some(2));
        assert_eq!(a.dual_feasible, None);
    }
}
