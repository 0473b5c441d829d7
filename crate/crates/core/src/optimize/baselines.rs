use crate::error::{Error, Result};
use crate::pomdp::{reward_gradient, reward_value, Pomdp, Policy};

/// Largest `(n_A - 1) n_O` accepted by [`brute_force`].
pub const BRUTE_FORCE_MAX_DIM: usize = 4;

/// Euclidean projection onto the probability simplex (sort based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn project_policy(pi: &[f64], n_actions: usize) -> Vec<f64> {
    pi.chunks(n_actions).flat_map(project_simplex).collect()
}

/// Reward of a policy through the state-level discounted chain; an
/// evaluation path independent of the state-action machinery.
struct StateChain<'a> {
    pomdp: &'a Pomdp,
    m: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
}

impl<'a> StateChain<'a> {
    fn new(pomdp: &'a Pomdp) -> Self {
        let n = pomdp.n_states;
        Self { pomdp, m: vec![0.0; n * n], b: vec![0.0; n], r: vec![0.0; n] }
    }

    /// `(1-γ) r_τᵀ (I - γ P_τ)^{-1} μ`, with `P_τ(s'|s) = Σ_a α(s'|s,a) τ(a|s)`.
    fn value(&mut self, probs: &[f64]) -> Option<f64> {
        let p = self.pomdp;
        let (n, na, g) = (p.n_states, p.n_actions, p.gamma);
        for s in 0..n {
            let col = &probs[p.g_beta[s] * na..(p.g_beta[s] + 1) * na];
            self.r[s] = (0..na).map(|a| col[a] * p.reward[s][a]).sum();
            for next in 0..n {
                let pt: f64 = (0..na).map(|a| col[a] * p.transition(next, s, a)).sum();
                self.m[next * n + s] = if next == s { 1.0 } else { 0.0 } - g * pt;
            }
            self.b[s] = p.mu[s];
        }
        // Gaussian elimination with partial pivoting
        let (m, b) = (&mut self.m, &mut self.b);
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))?;
            if m[piv * n + k] == 0.0 {
                return None;
            }
            if piv != k {
                for c in 0..n {
                    m.swap(k * n + c, piv * n + c);
                }
                b.swap(k, piv);
            }
            for i in k + 1..n {
                let f = m[i * n + k] / m[k * n + k];
                for c in k..n {
                    m[i * n + c] -= f * m[k * n + c];
                }
                b[i] -= f * b[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for c in i + 1..n {
                s -= m[i * n + c] * b[c];
            }
            b[i] = s / m[i * n + i];
        }
        Some((1.0 - g) * self.r.iter().zip(b.iter()).map(|(r, x)| r * x).sum::<f64>())
    }
}

/// All points of the simplex grid `{k / h : Σ k = h}` in `n` coordinates.
fn simplex_grid(n: usize, h: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, h: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / h as f64).collect());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(n, left - k, h, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, h, h, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive search over the product of simplex grids with spacing
/// `grid_step` (faces included). Returns the best grid policy and its reward.
pub fn brute_force(pomdp: &Pomdp, grid_step: f64) -> Result<(Policy, f64)> {
    let (na, no) = (pomdp.n_actions, pomdp.n_observations);
    if (na - 1) * no > BRUTE_FORCE_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "grid search over {} free coordinates (limit {BRUTE_FORCE_MAX_DIM})",
            (na - 1) * no
        )));
    }
    let h = (1.0 / grid_step).round();
    if !(grid_step > 0.0 && grid_step <= 1.0) || (h * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("grid step {grid_step} must be 1/h for an integer h")));
    }
    let grid = simplex_grid(na, h as usize);
    let mut chain = StateChain::new(pomdp);
    let mut idx = vec![0usize; no];
    let mut probs = vec![0.0; na * no];
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        for (o, &i) in idx.iter().enumerate() {
            probs[o * na..(o + 1) * na].copy_from_slice(&grid[i]);
        }
        let v = chain.value(&probs).ok_or(Error::Singular("discounted state chain"))?;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((probs.clone(), v));
        }
        // odometer over observations
        let mut o = 0;
        while o < no {
            idx[o] += 1;
            if idx[o] < grid.len() {
                break;
            }
            idx[o] = 0;
            o += 1;
        }
        if o == no {
            break;
        }
    }
    let (probs, _) = best.expect("grid is never empty");
    let policy = Policy::new(na, no, probs)?;
    let value = reward_value(pomdp, &policy)?;
    Ok((policy, value))
}

/// Projected gradient ascent on the policy polytope with backtracking: a
/// step that lowers the reward is retried with half the rate, at most 20
/// times; the iteration stops when no step improves.
pub fn projected_gradient(pomdp: &Pomdp, init: &Policy, steps: usize, learning_rate: f64) -> Result<(Policy, f64)> {
    if !(learning_rate > 0.0) {
        return Err(Error::InvalidInput("learning rate must be positive".into()));
    }
    let (na, no) = (pomdp.n_actions, pomdp.n_observations);
    let mut pi = Policy::new(na, no, project_policy(init.as_slice(), na))?;
    let mut value = reward_value(pomdp, &pi)?;
    for _ in 0..steps {
        let grad = reward_gradient(pomdp, &pi)?;
        let mut rate = learning_rate;
        let mut next = None;
        for _ in 0..=20 {
            let moved: Vec<f64> = pi.as_slice().iter().zip(grad.as_slice()).map(|(p, g)| p + rate * g).collect();
            let cand = Policy::new(na, no, project_policy(&moved, na))?;
            let v = reward_value(pomdp, &cand)?;
            if v >= value {
                next = Some((cand, v));
                break;
            }
            rate *= 0.5;
        }
        let Some((cand, v)) = next else { break };
        let shift = cand
            .as_slice()
            .iter()
            .zip(pi.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pi = cand;
        value = v;
        if shift < 1e-13 {
            break;
        }
    }
    Ok((pi, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{random_pomdp, random_policy};
    use rand::SeedableRng;

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_simplex(&[0.4, 0.4, 0.4]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn grid_points_cover_the_simplex() {
        let g = simplex_grid(3, 4);
        assert_eq!(g.len(), 15);
        assert!(g.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn chain_value_matches_reward_value() {
        let p = random_pomdp(4, 3, &[2, 2], 9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut chain = StateChain::new(&p);
        for _ in 0..10 {
            let pi = random_policy(3, 2, &mut rng);
            let v = chain.value(pi.as_slice()).unwrap();
            assert!((v - reward_value(&p, &pi).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_state_picks_the_best_action() {
        let mut p = random_pomdp(1, 3, &[1], 4).unwrap();
        p.reward = vec![vec![0.3, -1.0, 0.7]];
        let (pi, v) = brute_force(&p, 0.1).unwrap();
        assert!((v - 0.7).abs() < 1e-12);
        assert_eq!(pi.column(0), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_reward_has_zero_value() {
        let mut p = random_pomdp(3, 2, &[2, 1], 4).unwrap();
        p.reward = vec![vec![0.0; 2]; 3];
        assert_eq!(brute_force(&p, 0.25).unwrap().1, 0.0);
    }

    #[test]
    fn large_grids_are_refused() {
        let p = random_pomdp(3, 3, &[1, 1, 1], 4).unwrap();
        assert!(matches!(brute_force(&p, 0.1), Err(Error::Unsupported(_))));
        let p = random_pomdp(3, 2, &[3], 4).unwrap();
        assert!(brute_force(&p, 0.3).is_err());
    }

    #[test]
    fn gradient_ascent_never_decreases() {
        let p = random_pomdp(3, 2, &[3], 2).unwrap();
        let init = Policy::uniform(2, 1);
        let v0 = reward_value(&p, &init).unwrap();
        let (pi, v) = projected_gradient(&p, &init, 200, 1.0).unwrap();
        assert!(v >= v0);
        let (pi2, v2) = projected_gradient(&p, &pi, 50, 1.0).unwrap();
        assert!(v2 >= v);
        let shift = pi.as_slice().iter().zip(pi2.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(shift < 1e-6);
    }
}
