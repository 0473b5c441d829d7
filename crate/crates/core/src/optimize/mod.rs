//! End-to-end solvers built on the critical-point systems, plus the
//! gradient and grid baselines.

mod baselines;
mod batch;
mod report;
mod sweep;

pub use baselines::{brute_force, project_simplex, projected_gradient, BRUTE_FORCE_MAX_DIM};
pub use batch::{batch_experiment, BatchConfig, BatchResult, BatchRow, Stat, TrialOutcome, CSV_HEADER};
pub use report::{ComponentReport, Method, SolutionCounts, SolveOptions, SolveReport};
pub use sweep::{planned_paths, run_critical_points, solve_boundary_sweep, solve_kkt, CriticalPointRun};
