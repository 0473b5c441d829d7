//! Real points on positive-dimensional solution sets.
//!
//! A singular endpoint with a small residual usually lies on a curve or
//! surface of solutions, and the tracker only reaches a generic complex
//! point of it. Starting from its real part, we alternate a minimum-norm
//! Gauss-Newton projection onto the real solution set with clipping of the
//! sign-constrained coordinates at zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::polysys::PolySystem;

const OUTER_ITERS: usize = 200;
const NEWTON_ITERS: usize = 30;
const RANK_TOL: f64 = 1e-10;

fn residual_at(system: &PolySystem, x: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let f = system.evaluate(&z).ok()?;
    let j = system.jacobian(&z).ok()?;
    Some((DVector::from_iterator(f.len(), f.iter().map(|c| c.re)), j.map(|c| c.re)))
}

/// Projects `x` onto `{F = 0}` by Gauss-Newton with pseudo-inverse steps.
/// Returns the final residual norm.
fn project(system: &PolySystem, x: &mut [f64], tol: f64) -> Option<f64> {
    let mut res = f64::INFINITY;
    for _ in 0..NEWTON_ITERS {
        let (f, j) = residual_at(system, x)?;
        res = f.norm();
        if !res.is_finite() {
            return None;
        }
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if res <= tol * scale {
            return Some(res);
        }
        let svd = j.svd(true, true);
        let cut = RANK_TOL * svd.singular_values.max();
        let dx = svd.solve(&f, cut).ok()?;
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi -= d;
        }
    }
    let (f, _) = residual_at(system, x)?;
    res = res.min(f.norm());
    Some(res)
}

/// Looks for a real solution of `system` near `point` whose coordinates in
/// `nonnegative` are `≥ -sign_tol`. The returned point satisfies
/// `‖F‖ ≤ tol · (1 + ‖x‖_∞)`.
pub fn real_point_near(
    system: &PolySystem,
    point: &[Complex64],
    nonnegative: &[usize],
    tol: f64,
    sign_tol: f64,
) -> Option<Vec<f64>> {
    let mut x: Vec<f64> = point.iter().map(|c| c.re).collect();
    for _ in 0..OUTER_ITERS {
        let res = project(system, &mut x, tol)?;
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let worst = nonnegative.iter().map(|&i| x[i]).fold(f64::INFINITY, f64::min);
        if res <= tol * scale && worst >= -sign_tol {
            return Some(x);
        }
        for &i in nonnegative {
            x[i] = x[i].max(0.0);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::{Polynomial, Variable, VariableRegistry};

    /// `x + y = 1` twice: a square system whose solutions form a line.
    fn line() -> PolySystem {
        let reg = VariableRegistry::new(vec![
            Variable::Eta { state: 0, action: 0 },
            Variable::Eta { state: 0, action: 1 },
        ])
        .unwrap();
        let p = Polynomial::linear(2, &[(0, 1.0), (1, 1.0)], -1.0);
        PolySystem::new(reg, vec![p.clone(), p]).unwrap()
    }

    #[test]
    fn finds_a_nonnegative_point_on_a_line() {
        let start = [Complex64::new(-0.5, 0.3), Complex64::new(1.5, -0.3)];
        let x = real_point_near(&line(), &start, &[0, 1], 1e-13, 1e-12).unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!(x.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn unconstrained_projection_stays_close() {
        let start = [Complex64::new(-2.0, 0.0), Complex64::new(3.0, 0.0)];
        let x = real_point_near(&line(), &start, &[], 1e-13, 1e-12).unwrap();
        assert!((x[0] + 2.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_signs_give_none() {
        // x + y = 1 and x - y = 3 force y = -1
        let reg = VariableRegistry::new(vec![
            Variable::Eta { state: 0, action: 0 },
            Variable::Eta { state: 0, action: 1 },
        ])
        .unwrap();
        let sys = PolySystem::new(
            reg,
            vec![
                Polynomial::linear(2, &[(0, 1.0), (1, 1.0)], -1.0),
                Polynomial::linear(2, &[(0, 1.0), (1, -1.0)], -3.0),
            ],
        )
        .unwrap();
        let start = [Complex64::new(2.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert!(real_point_near(&sys, &start, &[0, 1], 1e-13, 1e-12).is_none());
    }
}
