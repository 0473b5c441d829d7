//! Assembly of the critical-point systems.
//!
//! Both systems are built from the Lagrangian
//! `L = ⟨r, η⟩ + Σ_s λ_s ℓ_s(η) + Σ ν^o_{sa} p^o_{sa}(η)` by symbolic
//! differentiation, so every stationarity equation is exactly `∂L/∂η_{sa}`
//! (plus the sign multiplier in the KKT case).

use num_complex::Complex64;

use super::polynomial::Polynomial;
use super::system::{PolySystem, Variable, VariableRegistry};
use crate::constraints::{linear_constraints, Anchors, ReducedQuadratic};
use crate::error::{Error, Result};
use crate::geometry::BoundaryComponent;
use crate::pomdp::Pomdp;

/// Where the sign multiplier `κ_{o,a}` enters the stationarity block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KappaPlacement {
    /// Only in `∂L/∂η_{s_o a}` at the anchor state.
    AnchorState,
    /// In `∂L/∂η_{sa}` for every state of the fiber.
    #[default]
    WholeFiber,
}

/// Component anchors: the given anchor state per fiber and the smallest
/// action outside the zero set.
pub fn component_anchors(pomdp: &Pomdp, component: &BoundaryComponent) -> Anchors {
    let mut anchors = Anchors::default_for(pomdp);
    for o in 0..pomdp.n_observations {
        anchors.actions[o] = component.free_actions(o)[0];
    }
    anchors
}

struct Layout {
    /// `(s, a)` pairs carrying a free `η` variable, in registry order.
    free: Vec<(usize, usize)>,
    quadratics: Vec<ReducedQuadratic>,
}

fn check_component(pomdp: &Pomdp, component: &BoundaryComponent, anchors: &Anchors) -> Result<()> {
    anchors.check(pomdp)?;
    if component.zero_masks.len() != pomdp.n_observations || component.n_actions != pomdp.n_actions {
        return Err(Error::InvalidInput("component does not match the instance".into()));
    }
    for o in 0..pomdp.n_observations {
        if component.is_zero(o, anchors.actions[o]) {
            return Err(Error::InvalidInput(format!(
                "anchor action {} of observation {o} lies in the zero set",
                anchors.actions[o]
            )));
        }
    }
    Ok(())
}

fn layout(pomdp: &Pomdp, component: &BoundaryComponent, anchors: &Anchors) -> Layout {
    let free = (0..pomdp.n_states)
        .flat_map(|s| (0..pomdp.n_actions).map(move |a| (s, a)))
        .filter(|&(s, a)| !component.is_zero(pomdp.g_beta[s], a))
        .collect();
    let mut quadratics = Vec::new();
    for (o, fiber) in pomdp.fibers().into_iter().enumerate() {
        let (a_o, s_o) = (anchors.actions[o], anchors.states[o]);
        for &s in fiber.iter().filter(|&&s| s != s_o) {
            for a in component.free_actions(o).into_iter().filter(|&a| a != a_o) {
                quadratics.push(ReducedQuadratic {
                    observation: o,
                    anchor_action: a_o,
                    anchor_state: s_o,
                    state: s,
                    action: a,
                });
            }
        }
    }
    Layout { free, quadratics }
}

/// Lagrange system of the linear objective over one boundary component.
///
/// Variables: the free `η` coordinates, `λ_s` for every state and one `ν`
/// per non-redundant reduced quadratic. Equations: `ℓ̂_s`, `p̂^o_{sa}`, then
/// `∂L/∂η̂` for every free coordinate.
pub fn build_lagrange_system(
    pomdp: &Pomdp,
    component: &BoundaryComponent,
    anchors: &Anchors,
) -> Result<PolySystem> {
    check_component(pomdp, component, anchors)?;
    let (ns, na) = (pomdp.n_states, pomdp.n_actions);
    let Layout { free, quadratics } = layout(pomdp, component, anchors);

    let mut vars: Vec<Variable> =
        free.iter().map(|&(state, action)| Variable::Eta { state, action }).collect();
    vars.extend((0..ns).map(|state| Variable::Lambda { state }));
    vars.extend(quadratics.iter().map(|q| Variable::Nu {
        observation: q.observation,
        state: q.state,
        action: q.action,
    }));
    let registry = VariableRegistry::new(vars)?;
    let n = registry.len();
    let n_free = free.len();

    // full η coordinates -> registry index (None = fixed to zero)
    let mut map = vec![None; ns * na];
    for (i, &(s, a)) in free.iter().enumerate() {
        map[s * na + a] = Some(i);
    }
    let lambda = |s: usize| Polynomial::var(n, n_free + s);
    let nu = |k: usize| Polynomial::var(n, n_free + ns + k);

    let linear: Vec<Polynomial> = linear_constraints(pomdp)
        .iter()
        .map(|l| l.to_polynomial().remap(n, &map))
        .collect();
    let quads: Vec<Polynomial> = quadratics
        .iter()
        .map(|q| {
            q.to_polynomial_over(ns, na, &component.free_actions(q.observation))
                .remap(n, &map)
        })
        .collect();

    let reward = pomdp.reward_vector();
    let mut lagrangian = Polynomial::zero(n);
    for (i, &(s, a)) in free.iter().enumerate() {
        lagrangian = &lagrangian + &Polynomial::var(n, i).scale(reward[s * na + a]);
    }
    for (s, l) in linear.iter().enumerate() {
        lagrangian = &lagrangian + &(&lambda(s) * l);
    }
    for (k, q) in quads.iter().enumerate() {
        lagrangian = &lagrangian + &(&nu(k) * q);
    }

    let mut equations = linear;
    equations.extend(quads);
    equations.extend((0..n_free).map(|i| lagrangian.derivative(i)));
    PolySystem::new(registry, equations)
}

/// Square KKT system of dimension `2 n_S n_A + n_O` with the default
/// placement of the sign multipliers.
pub fn build_kkt_system(pomdp: &Pomdp, anchors: &Anchors) -> Result<PolySystem> {
    build_kkt_system_with(pomdp, anchors, KappaPlacement::default())
}

/// KKT system: primal feasibility `ℓ_s`, `p^o_{sa}`; complementary
/// slackness `κ_{o,a} η_{s_o a}`; stationarity `∂L/∂η_{sa} + κ` where `κ_{o,a}`
/// is attached according to `placement`. Sign conditions are not part of the
/// system.
pub fn build_kkt_system_with(
    pomdp: &Pomdp,
    anchors: &Anchors,
    placement: KappaPlacement,
) -> Result<PolySystem> {
    anchors.check(pomdp)?;
    let (ns, na, no) = (pomdp.n_states, pomdp.n_actions, pomdp.n_observations);
    let all_free = BoundaryComponent::new(vec![0; no], na, &pomdp.fiber_sizes())?;
    let Layout { free, quadratics } = layout(pomdp, &all_free, anchors);
    let n_eta = free.len();

    let mut vars: Vec<Variable> =
        free.iter().map(|&(state, action)| Variable::Eta { state, action }).collect();
    vars.extend((0..ns).map(|state| Variable::Lambda { state }));
    vars.extend(quadratics.iter().map(|q| Variable::Nu {
        observation: q.observation,
        state: q.state,
        action: q.action,
    }));
    vars.extend(
        (0..no).flat_map(|o| (0..na).map(move |a| (o, a))).map(|(o, a)| Variable::Kappa {
            state: anchors.states[o],
            action: a,
        }),
    );
    let registry = VariableRegistry::new(vars)?;
    let n = registry.len();
    let kappa_base = n_eta + ns + quadratics.len();
    let map: Vec<Option<usize>> = (0..ns * na).map(Some).collect();

    let linear: Vec<Polynomial> = linear_constraints(pomdp)
        .iter()
        .map(|l| l.to_polynomial().remap(n, &map))
        .collect();
    let quads: Vec<Polynomial> = quadratics
        .iter()
        .map(|q| q.to_polynomial(ns, na).remap(n, &map))
        .collect();

    let reward = pomdp.reward_vector();
    let mut lagrangian = Polynomial::zero(n);
    for (i, &r) in reward.iter().enumerate() {
        lagrangian = &lagrangian + &Polynomial::var(n, i).scale(r);
    }
    for (s, l) in linear.iter().enumerate() {
        lagrangian = &lagrangian + &(&Polynomial::var(n, n_eta + s) * l);
    }
    for (k, q) in quads.iter().enumerate() {
        lagrangian = &lagrangian + &(&Polynomial::var(n, n_eta + ns + k) * q);
    }

    let kappa = |o: usize, a: usize| Polynomial::var(n, kappa_base + o * na + a);
    let mut equations = linear;
    equations.extend(quads);
    for o in 0..no {
        for a in 0..na {
            let eta = Polynomial::var(n, anchors.states[o] * na + a);
            equations.push(&kappa(o, a) * &eta);
        }
    }
    for s in 0..ns {
        let o = pomdp.g_beta[s];
        for a in 0..na {
            let mut eq = lagrangian.derivative(s * na + a);
            let attach = match placement {
                KappaPlacement::AnchorState => s == anchors.states[o],
                KappaPlacement::WholeFiber => true,
            };
            if attach {
                eq = &eq + &kappa(o, a);
            }
            equations.push(eq);
        }
    }
    PolySystem::new(registry, equations)
}

/// Objective value `⟨r, η⟩` of a system point (real parts of the `η` block).
pub fn objective_of_point(pomdp: &Pomdp, system: &PolySystem, point: &[Complex64]) -> f64 {
    let reward = pomdp.reward_vector();
    system
        .registry
        .eta_map(pomdp.n_states, pomdp.n_actions)
        .iter()
        .zip(&reward)
        .filter_map(|(idx, r)| idx.map(|i| r * point[i].re))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::enumerate_components;
    use crate::pomdp::random_pomdp;

    #[test]
    fn lagrange_dimension_formula() {
        for (na, part) in [(2usize, vec![3usize]), (2, vec![2, 1]), (3, vec![2, 2]), (3, vec![3, 1])] {
            let ns: usize = part.iter().sum();
            let p = random_pomdp(ns, na, &part, 1).unwrap();
            for c in enumerate_components(na, &part).unwrap() {
                let sys = build_lagrange_system(&p, &c, &component_anchors(&p, &c)).unwrap();
                let zeros: usize = part
                    .iter()
                    .zip(&c.zero_masks)
                    .map(|(d, m)| (2 * d - 1) * m.count_ones() as usize)
                    .sum();
                let expected = 2 * ns * na - (na - 1) * part.len() - zeros;
                assert_eq!(sys.n_vars(), expected);
                assert!(sys.is_square());
                let nus = sys.registry.count(|v| matches!(v, Variable::Nu { .. }));
                assert_eq!(nus, c.n_quadratics);
            }
        }
    }

    #[test]
    fn blind_interior_system_has_eleven_variables() {
        let p = random_pomdp(3, 2, &[3], 2).unwrap();
        let c = BoundaryComponent::new(vec![0], 2, &[3]).unwrap();
        let sys = build_lagrange_system(&p, &c, &component_anchors(&p, &c)).unwrap();
        assert_eq!(sys.n_vars(), 11);
        assert_eq!(sys.bezout_number().unwrap(), 256);
    }

    #[test]
    fn anchor_in_zero_set_is_rejected() {
        let p = random_pomdp(3, 2, &[3], 2).unwrap();
        let c = BoundaryComponent::new(vec![1], 2, &[3]).unwrap();
        assert!(build_lagrange_system(&p, &c, &Anchors::default_for(&p)).is_err());
    }

    #[test]
    fn kkt_dimensions() {
        for (ns, na, part, dim) in [(3, 2, vec![3], 13), (4, 3, vec![2, 2], 26), (3, 2, vec![1, 1, 1], 15)] {
            let p = random_pomdp(ns, na, &part, 3).unwrap();
            let sys = build_kkt_system(&p, &Anchors::default_for(&p)).unwrap();
            assert_eq!(sys.n_vars(), dim);
            assert!(sys.is_square());
        }
    }

    #[test]
    fn stationarity_has_degree_at_most_two() {
        let p = random_pomdp(4, 3, &[3, 1], 3).unwrap();
        let sys = build_kkt_system(&p, &Anchors::default_for(&p)).unwrap();
        assert!(sys.degrees().iter().all(|&d| d <= 2));
    }
}
