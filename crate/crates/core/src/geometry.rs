//! Boundary components of the feasible set and bounds on the number of
//! critical points of a linear objective over them.
//!
//! A boundary component is fixed by a proper subset `A_o ⊊ A` of actions per
//! observation whose frequencies vanish on every state of the fiber. On such
//! a component the feasible points live in an affine space of dimension
//! `n = n_S n_A - n_S - Σ_o d_o |A_o|` and are cut out by
//! `m = Σ_o (d_o - 1)(|A_o^c| - 1)` non-redundant quadratics; a generic linear
//! objective then has at most `2^m C(n-1, m-1)` complex critical points.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `n_S · n_A` accepted by the counting routines.
pub const MAX_PAIRS: usize = 64;

/// Proper action subsets `A_o` (as bit masks) for each observation together
/// with the derived dimension counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BoundaryComponent {
    /// Bit `a` of `zero_masks[o]` is set iff `a ∈ A_o`.
    pub zero_masks: Vec<u64>,
    pub n_actions: usize,
    /// Ambient affine dimension `n`.
    pub dim: usize,
    /// Number of non-redundant quadratics `m`.
    pub n_quadratics: usize,
    pub bound: u128,
    pub relevant: bool,
}

impl BoundaryComponent {
    pub fn new(zero_masks: Vec<u64>, n_actions: usize, fiber_sizes: &[usize]) -> Result<Self> {
        if zero_masks.len() != fiber_sizes.len() {
            return Err(Error::DimensionMismatch {
                expected: fiber_sizes.len(),
                actual: zero_masks.len(),
            });
        }
        if n_actions == 0 || n_actions > 63 {
            return Err(Error::InvalidInput(format!("unsupported action count {n_actions}")));
        }
        let full = (1u64 << n_actions) - 1;
        if zero_masks.iter().any(|&m| m & !full != 0 || m == full) {
            return Err(Error::InvalidInput("zero sets must be proper subsets of the actions".into()));
        }
        let n_states: usize = fiber_sizes.iter().sum();
        let zeros: usize = zero_masks
            .iter()
            .zip(fiber_sizes)
            .map(|(m, d)| d * m.count_ones() as usize)
            .sum();
        let dim = n_states * n_actions - n_states - zeros;
        let n_quadratics = zero_masks
            .iter()
            .zip(fiber_sizes)
            .map(|(m, d)| (d - 1) * (n_actions - m.count_ones() as usize - 1))
            .sum();
        let relevant = zero_masks
            .iter()
            .zip(fiber_sizes)
            .all(|(m, &d)| n_actions - m.count_ones() as usize <= d);
        Ok(Self {
            zero_masks,
            n_actions,
            dim,
            n_quadratics,
            bound: bound_from_dims(dim, n_quadratics),
            relevant,
        })
    }

    /// Whether action `a` is forced to zero on observation `o`.
    #[inline]
    pub fn is_zero(&self, o: usize, a: usize) -> bool {
        self.zero_masks[o] >> a & 1 == 1
    }

    pub fn zero_set(&self, o: usize) -> Vec<usize> {
        (0..self.n_actions).filter(|&a| self.is_zero(o, a)).collect()
    }

    /// Actions with unconstrained frequency on observation `o` (`A_o^c`).
    pub fn free_actions(&self, o: usize) -> Vec<usize> {
        (0..self.n_actions).filter(|&a| !self.is_zero(o, a)).collect()
    }

    /// The all-free component (interior of the feasible set).
    pub fn is_interior(&self) -> bool {
        self.zero_masks.iter().all(|&m| m == 0)
    }

    /// Human-readable form such as `{1}|{}`.
    pub fn label(&self) -> String {
        (0..self.zero_masks.len())
            .map(|o| {
                let set: Vec<String> = self.zero_set(o).iter().map(usize::to_string).collect();
                format!("{{{}}}", set.join(","))
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// `1` for a point (`n = 0`), `0` for a positive-dimensional affine piece
/// without quadratics, otherwise `2^m C(n-1, m-1)`.
fn bound_from_dims(n: usize, m: usize) -> u128 {
    match (n, m) {
        (0, _) => 1,
        (_, 0) => 0,
        _ => (1u128 << m) * binomial(n as u128 - 1, m as u128 - 1),
    }
}

/// Bound on critical points of a linear objective over `component`.
pub fn degree_bound(component: &BoundaryComponent) -> u128 {
    bound_from_dims(component.dim, component.n_quadratics)
}

fn check_sizes(n_actions: usize, fiber_sizes: &[usize]) -> Result<()> {
    if n_actions == 0 {
        return Err(Error::InvalidInput("n_actions must be positive".into()));
    }
    if fiber_sizes.is_empty() || fiber_sizes.contains(&0) {
        return Err(Error::InvalidInput(format!("invalid partition {fiber_sizes:?}")));
    }
    let n_states: usize = fiber_sizes.iter().sum();
    if n_states * n_actions > MAX_PAIRS {
        return Err(Error::InvalidInput(format!(
            "n_S * n_A = {} exceeds the supported maximum {MAX_PAIRS}",
            n_states * n_actions
        )));
    }
    Ok(())
}

/// Proper subsets of the actions, largest first, ties by ascending bitmask.
fn proper_subsets(n_actions: usize) -> Vec<u64> {
    let mut masks: Vec<u64> = (0..(1u64 << n_actions) - 1).collect();
    masks.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
    masks
}

/// Iterates the product of per-observation mask lists in lexicographic order.
fn for_each_product(lists: &[Vec<u64>], mut f: impl FnMut(&[u64])) {
    if lists.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; lists.len()];
    let mut current: Vec<u64> = lists.iter().map(|l| l[0]).collect();
    loop {
        f(&current);
        let mut pos = lists.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < lists[pos].len() {
                current[pos] = lists[pos][idx[pos]];
                break;
            }
            idx[pos] = 0;
            current[pos] = lists[pos][0];
        }
    }
}

fn enumerate_filtered(
    n_actions: usize,
    fiber_sizes: &[usize],
    relevant_only: bool,
) -> Result<Vec<BoundaryComponent>> {
    check_sizes(n_actions, fiber_sizes)?;
    let subsets = proper_subsets(n_actions);
    let lists: Vec<Vec<u64>> = fiber_sizes
        .iter()
        .map(|&d| {
            subsets
                .iter()
                .copied()
                .filter(|m| !relevant_only || n_actions - m.count_ones() as usize <= d)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for_each_product(&lists, |masks| {
        out.push(
            BoundaryComponent::new(masks.to_vec(), n_actions, fiber_sizes)
                .expect("masks are proper subsets"),
        );
    });
    Ok(out)
}

/// All `(2^{n_A} - 1)^{n_O}` boundary components.
pub fn enumerate_components(n_actions: usize, fiber_sizes: &[usize]) -> Result<Vec<BoundaryComponent>> {
    enumerate_filtered(n_actions, fiber_sizes, false)
}

/// Components with `|A_o^c| ≤ d_o` for every observation; one of them
/// contains a global maximizer.
pub fn enumerate_relevant(n_actions: usize, fiber_sizes: &[usize]) -> Result<Vec<BoundaryComponent>> {
    enumerate_filtered(n_actions, fiber_sizes, true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundSummary {
    pub total_components: u128,
    pub relevant_components: u128,
    pub total_bound: u128,
    pub relevant_bound: u128,
}

/// Component counts and summed degree bounds, computed per observation
/// without materializing the product of components.
pub fn bound_summary(n_states: usize, n_actions: usize, fiber_sizes: &[usize]) -> Result<BoundSummary> {
    check_sizes(n_actions, fiber_sizes)?;
    let total: usize = fiber_sizes.iter().sum();
    if total != n_states {
        return Err(Error::InvalidInput(format!(
            "partition {fiber_sizes:?} does not sum to {n_states}"
        )));
    }
    let total_components = ((1u128 << n_actions) - 1).pow(fiber_sizes.len() as u32);
    let relevant_components = fiber_sizes
        .iter()
        .map(|&d| {
            let lo = n_actions.saturating_sub(d);
            (lo..n_actions).map(|l| binomial(n_actions as u128, l as u128)).sum::<u128>()
        })
        .product();
    // The bound depends on the component only through (n, m); aggregate the
    // distribution of (Σ d_o|A_o|, m) across observations by dynamic programming.
    let bounds = |relevant_only: bool| -> u128 {
        use std::collections::BTreeMap;
        let mut dist: BTreeMap<(usize, usize), u128> = BTreeMap::new();
        dist.insert((0, 0), 1);
        for &d in fiber_sizes {
            let mut next = BTreeMap::new();
            for k in 0..n_actions {
                let free = n_actions - k;
                if relevant_only && free > d {
                    continue;
                }
                let ways = binomial(n_actions as u128, k as u128);
                for (&(z, m), &count) in &dist {
                    *next.entry((z + d * k, m + (d - 1) * (free - 1))).or_insert(0) += count * ways;
                }
            }
            dist = next;
        }
        dist.into_iter()
            .map(|((z, m), count)| count * bound_from_dims(n_states * n_actions - n_states - z, m))
            .sum()
    };
    Ok(BoundSummary {
        total_components,
        relevant_components,
        total_bound: bounds(false),
        relevant_bound: bounds(true),
    })
}
