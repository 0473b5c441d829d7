use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sarop::constraints::{feasibility_residual, Anchors};
use sarop::geometry::{bound_summary, enumerate_components, enumerate_relevant};
use sarop::homotopy::{
    classify, dedupe, embed_eta, solve_system, ClassifyTolerances, PathStatus, StartSystem, TrackedSolution,
    TrackerOptions,
};
use sarop::optimize::project_simplex;
use sarop::polysys::build_kkt_system;
use sarop::pomdp::{phi, random_policy, random_pomdp, reward_value, Policy, Pomdp};

const SHAPES: [(usize, usize, &[usize]); 6] =
    [(2, 2, &[2]), (3, 2, &[3]), (3, 2, &[2, 1]), (3, 3, &[1, 1, 1]), (4, 3, &[2, 2]), (4, 2, &[3, 1])];

fn instance(shape: usize, seed: u64) -> Pomdp {
    let (ns, na, fibers) = SHAPES[shape % SHAPES.len()];
    random_pomdp(ns, na, fibers, seed).unwrap()
}

fn anchors_from(p: &Pomdp, picks: &[usize]) -> Anchors {
    let fibers = p.fibers();
    Anchors {
        actions: (0..p.n_observations).map(|o| picks[o] % p.n_actions).collect(),
        states: fibers.iter().enumerate().map(|(o, f)| f[picks[o] / 7 % f.len()]).collect(),
    }
}

/// Value by power iteration on the state chain, without state-action frequencies.
fn series_value(p: &Pomdp, pi: &Policy) -> f64 {
    let na = p.n_actions;
    let mut dist = p.mu.clone();
    let (mut total, mut w) = (0.0, 1.0 - p.gamma);
    for _ in 0..300 {
        let mut next = vec![0.0; p.n_states];
        for s in 0..p.n_states {
            let col = pi.column(p.g_beta[s]);
            for a in 0..na {
                total += w * dist[s] * col[a] * p.reward[s][a];
                for (t, x) in next.iter_mut().enumerate() {
                    *x += dist[s] * col[a] * p.transition(t, s, a);
                }
            }
        }
        dist = next;
        w *= p.gamma;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frequencies_are_feasible_for_any_anchors(shape in 0usize..6, seed in any::<u64>(), picks in prop::collection::vec(0usize..100, 4)) {
        let p = instance(shape, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
        let pi = random_policy(p.n_actions, p.n_observations, &mut rng);
        let eta = phi(&p, &pi).unwrap();
        let r = feasibility_residual(&p, &eta, &anchors_from(&p, &picks)).unwrap();
        prop_assert!(r.max_equality() < 1e-10);
        prop_assert!(r.min_entry >= 0.0);
        prop_assert!((eta.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reward_matches_the_series(shape in 0usize..6, seed in any::<u64>()) {
        let p = instance(shape, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
        let pi = random_policy(p.n_actions, p.n_observations, &mut rng);
        prop_assert!((reward_value(&p, &pi).unwrap() - series_value(&p, &pi)).abs() < 1e-12);
    }

    #[test]
    fn instance_json_round_trip(shape in 0usize..6, seed in any::<u64>()) {
        let p = instance(shape, seed);
        prop_assert_eq!(Pomdp::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn simplex_projection_lands_on_the_simplex(v in prop::collection::vec(-5.0f64..5.0, 1..7)) {
        let p = project_simplex(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let q = project_simplex(&p);
        prop_assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn relevant_components_are_a_subset(na in 1usize..4, fibers in prop::collection::vec(1usize..3, 1..4)) {
        let ns = fibers.iter().sum();
        let all = enumerate_components(na, &fibers).unwrap();
        let rel = enumerate_relevant(na, &fibers).unwrap();
        prop_assert!(rel.iter().all(|c| all.contains(c)));
        let b = bound_summary(ns, na, &fibers).unwrap();
        prop_assert_eq!(b.total_components, all.len() as u128);
        prop_assert_eq!(b.relevant_components, rel.len() as u128);
        prop_assert!(b.relevant_bound <= b.total_bound);
    }

    #[test]
    fn start_roots_solve_the_start_system(degrees in prop::collection::vec(1u32..4, 1..4), seed in any::<u64>(), k in any::<u64>()) {
        let start = StartSystem::new(degrees, seed);
        let root = start.root(k as u128 % start.n_roots());
        prop_assert!(start.eval(&root).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn dedupe_ignores_input_order(
        pts in prop::collection::vec((-2i32..3, -2i32..3, 0u8..3), 1..12),
        perm_seed in any::<u64>(),
    ) {
        let sols: Vec<TrackedSolution> = pts
            .iter()
            .map(|&(a, b, jitter)| {
                let eps = jitter as f64 * 1e-9;
                TrackedSolution::new(
                    vec![Complex64::new(a as f64 + eps, b as f64), Complex64::new(b as f64, -eps)],
                    1e-14 * (1.0 + jitter as f64),
                    1.0,
                    PathStatus::Converged,
                )
            })
            .collect();
        let mut shuffled = sols.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let a = dedupe(sols, 1e-6);
        let b = dedupe(shuffled, 1e-6);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.point, &y.point);
        }
    }
}

fn best_kkt_value(p: &Pomdp, anchors: &Anchors) -> Option<f64> {
    let sys = build_kkt_system(p, anchors).unwrap();
    let set = solve_system(&sys, &TrackerOptions::default()).unwrap();
    set.converged()
        .map(|s| classify(s.clone(), p, &sys, &ClassifyTolerances::default()))
        .filter(|s| s.is_positive_feasible)
        .map(|s| {
            let eta = embed_eta(p, &sys, &s.point);
            eta.iter().zip(p.reward_vector()).map(|(e, r)| e * r).sum::<f64>()
        })
        .reduce(f64::max)
}

#[test]
fn kkt_optimum_does_not_depend_on_anchors() {
    let p = random_pomdp(3, 2, &[2, 1], 11).unwrap();
    let base = best_kkt_value(&p, &Anchors::default_for(&p)).unwrap();
    let other = Anchors { actions: vec![1, 1], states: vec![1, 2] };
    let moved = best_kkt_value(&p, &other).unwrap();
    assert!((base - moved).abs() < 1e-9, "{base} vs {moved}");
}
