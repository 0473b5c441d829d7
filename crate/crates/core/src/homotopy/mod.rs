//! Total-degree homotopy continuation for square polynomial systems.

mod compiled;
mod linalg;
mod options;
mod realify;
mod solution;
mod tracker;

pub use options::{TrackerOptions, DEFAULT_BUDGET};
pub use solution::{
    alpha_certify, canonical_cmp, classify, dedupe, embed_eta, Certificate, ClassifyTolerances,
    PathStatus, TrackedSolution, ALPHA_THRESHOLD,
};
pub use realify::real_point_near;
pub use tracker::{newton_refine, solve_system, track_path, PathStats, SolutionSet, StartSystem};
