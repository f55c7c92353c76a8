//! Exact integer combinatorics behind the LP coefficients.
//!
//! A resource is summarised by its [`Label`]: how many players touch it only
//! in the equilibrium allocation, in both allocations, and only in the
//! optimal allocation. [`coalition_coefficient`] counts the ordered coalitions
//! that shift such a resource's load by a given amount.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::CombinatoricsError;

/// `x!/(x-y)!` for `x >= y`, zero when `y > x`.
pub fn falling_factorial(x: u64, y: u64) -> BigUint {
    if y > x {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for factor in (x - y + 1)..=x {
        acc *= factor;
    }
    acc
}

pub fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Per-resource usage counts for an (equilibrium, optimum) pair of allocations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    /// Players using the resource only in their equilibrium action.
    pub eq_only: usize,
    /// Players using the resource in both actions.
    pub both: usize,
    /// Players using the resource only in their optimal action.
    pub opt_only: usize,
}

impl Label {
    pub const fn new(eq_only: usize, both: usize, opt_only: usize) -> Self {
        Self {
            eq_only,
            both,
            opt_only,
        }
    }

    pub fn total(&self) -> usize {
        self.eq_only + self.both + self.opt_only
    }

    /// Load on the resource under the equilibrium allocation.
    pub fn eq_load(&self) -> usize {
        self.eq_only + self.both
    }

    /// Load on the resource under the optimal allocation.
    pub fn opt_load(&self) -> usize {
        self.opt_only + self.both
    }

    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.eq_only, self.both, self.opt_only)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.eq_only, self.both, self.opt_only)
    }
}

/// Every label with `1 <= e+x+o <= n`, in lexicographic `(e,x,o)` order.
#[derive(Clone, Debug)]
pub struct IndexSet {
    n: usize,
    labels: Vec<Label>,
    positions: HashMap<Label, usize>,
}

impl IndexSet {
    pub fn new(n: usize) -> Result<Self, CombinatoricsError> {
        if n == 0 {
            return Err(CombinatoricsError::ZeroPlayers);
        }
        let mut labels = Vec::with_capacity(Self::expected_len(n));
        for e in 0..=n {
            for x in 0..=(n - e) {
                for o in 0..=(n - e - x) {
                    if e + x + o >= 1 {
                        labels.push(Label::new(e, x, o));
                    }
                }
            }
        }
        let positions = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        Ok(Self {
            n,
            labels,
            positions,
        })
    }

    /// `C(n+3,3) - 1`.
    pub fn expected_len(n: usize) -> usize {
        (n + 3) * (n + 2) * (n + 1) / 6 - 1
    }

    pub fn players(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, label: &Label) -> Option<usize> {
        self.positions.get(label).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Label> {
        self.labels.iter()
    }
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for IndexSet {}

pub fn index_set(n: usize) -> Result<IndexSet, CombinatoricsError> {
    IndexSet::new(n)
}

/// Number of ordered `zeta`-player coalitions in which `alpha` members use the
/// resource only in equilibrium and `beta` members use it only in the optimum.
///
/// `C(ζ,α)·C(ζ-α,β)·e^(α)·o^(β)·(n-e-o)^(ζ-α-β)` with falling powers.
pub fn coalition_coefficient(
    label: Label,
    zeta: usize,
    n: usize,
    alpha: usize,
    beta: usize,
) -> Result<BigUint, CombinatoricsError> {
    if zeta == 0 || zeta > n {
        return Err(CombinatoricsError::CoalitionSize { zeta, n });
    }
    if alpha > zeta || beta > zeta - alpha {
        return Err(CombinatoricsError::DeviatorCounts { alpha, beta, zeta });
    }
    if label.total() > n {
        return Err(CombinatoricsError::LabelTooLarge { label, n });
    }
    Ok(coefficient_unchecked(label, zeta, n, alpha, beta))
}

/// Same as [`coalition_coefficient`] without argument validation.
pub(crate) fn coefficient_unchecked(
    label: Label,
    zeta: usize,
    n: usize,
    alpha: usize,
    beta: usize,
) -> BigUint {
    let others = n - label.eq_only - label.opt_only;
    let rest = zeta - alpha - beta;
    let ways = falling_factorial(label.eq_only as u64, alpha as u64)
        * falling_factorial(label.opt_only as u64, beta as u64)
        * falling_factorial(others as u64, rest as u64);
    if ways.is_zero() {
        return ways;
    }
    ways * binomial(zeta as u64, alpha as u64) * binomial((zeta - alpha) as u64, beta as u64)
}

/// Non-zero coefficients for one label and coalition size, as
/// `(load after deviation, count)` pairs. Zero terms are dropped before the
/// load is formed, so the load always lies in `0..=n`.
pub fn deviation_terms(label: Label, zeta: usize, n: usize) -> Vec<(usize, BigUint)> {
    let mut terms = Vec::new();
    for alpha in 0..=zeta {
        for beta in 0..=(zeta - alpha) {
            let count = coefficient_unchecked(label, zeta, n, alpha, beta);
            if count.is_zero() {
                continue;
            }
            let load = label.eq_load() + beta - alpha;
            terms.push((load, count));
        }
    }
    terms
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factorial(x: u64) -> BigUint {
        (1..=x).fold(BigUint::one(), |acc, f| acc * f)
    }

    #[test]
    fn falling_factorial_examples() {
        assert_eq!(falling_factorial(3, 2), BigUint::from(6u32));
        assert_eq!(falling_factorial(2, 3), BigUint::zero());
        assert_eq!(falling_factorial(5, 0), BigUint::one());
        assert_eq!(falling_factorial(0, 0), BigUint::one());
        assert_eq!(
            falling_factorial(20, 20),
            BigUint::from(2_432_902_008_176_640_000u64)
        );
        assert_eq!(falling_factorial(25, 25), factorial(25));
    }

    #[test]
    fn index_set_sizes() {
        let one = index_set(1).unwrap();
        assert_eq!(
            one.labels(),
            &[
                Label::new(0, 0, 1),
                Label::new(0, 1, 0),
                Label::new(1, 0, 0)
            ]
        );
        assert_eq!(index_set(2).unwrap().len(), 9);
        let twenty = index_set(20).unwrap();
        assert_eq!(twenty.len(), 1770);
        // direct enumeration cross-check
        let brute = (0..=20usize)
            .flat_map(|e| (0..=20usize).flat_map(move |x| (0..=20usize).map(move |o| (e, x, o))))
            .filter(|(e, x, o)| (1..=20).contains(&(e + x + o)))
            .count();
        assert_eq!(brute, 1770);
        assert!(matches!(index_set(0), Err(CombinatoricsError::ZeroPlayers)));
    }

    #[test]
    fn index_set_is_sorted_and_addressable() {
        let set = index_set(6).unwrap();
        assert!(set.labels().windows(2).all(|w| w[0] < w[1]));
        for (i, label) in set.iter().enumerate() {
            assert_eq!(set.position(label), Some(i));
        }
        assert_eq!(set.position(&Label::new(0, 0, 0)), None);
        assert_eq!(set.position(&Label::new(3, 3, 1)), None);
    }

    /// Counts ordered coalitions directly: players `0..e` are equilibrium-only
    /// users, the next `o` are optimum-only users, the rest are neither/both.
    fn enumerate_coefficients(label: Label, zeta: usize, n: usize) -> HashMap<(usize, usize), u64> {
        let mut counts = HashMap::new();
        let kind = |p: usize| {
            if p < label.eq_only {
                0
            } else if p < label.eq_only + label.opt_only {
                1
            } else {
                2
            }
        };
        fn walk(
            n: usize,
            zeta: usize,
            used: &mut Vec<bool>,
            depth: usize,
            ab: (usize, usize),
            kind: &dyn Fn(usize) -> u8,
            counts: &mut HashMap<(usize, usize), u64>,
        ) {
            if depth == zeta {
                *counts.entry(ab).or_default() += 1;
                return;
            }
            for p in 0..n {
                if used[p] {
                    continue;
                }
                used[p] = true;
                let next = match kind(p) {
                    0 => (ab.0 + 1, ab.1),
                    1 => (ab.0, ab.1 + 1),
                    _ => ab,
                };
                walk(n, zeta, used, depth + 1, next, kind, counts);
                used[p] = false;
            }
        }
        walk(n, zeta, &mut vec![false; n], 0, (0, 0), &kind, &mut counts);
        counts
    }

    #[test]
    fn coefficient_examples() {
        let l = Label::new(2, 1, 1);
        assert_eq!(
            coalition_coefficient(l, 1, 4, 1, 0).unwrap(),
            BigUint::from(2u32)
        );
        assert_eq!(
            coalition_coefficient(l, 1, 4, 0, 0).unwrap(),
            BigUint::from(1u32)
        );
        assert_eq!(
            coalition_coefficient(Label::new(1, 0, 1), 1, 2, 0, 0).unwrap(),
            BigUint::zero()
        );
        let oracle = enumerate_coefficients(l, 1, 4);
        assert_eq!(oracle[&(1, 0)], 2);
        assert_eq!(oracle[&(0, 0)], 1);
        assert_eq!(oracle[&(0, 1)], 1);
    }

    #[test]
    fn coefficient_rejects_bad_arguments() {
        let l = Label::new(1, 0, 0);
        assert!(coalition_coefficient(l, 0, 3, 0, 0).is_err());
        assert!(coalition_coefficient(l, 4, 3, 0, 0).is_err());
        assert!(coalition_coefficient(l, 2, 3, 3, 0).is_err());
        assert!(coalition_coefficient(l, 2, 3, 1, 2).is_err());
        assert!(coalition_coefficient(Label::new(2, 2, 0), 1, 3, 0, 0).is_err());
    }

    #[test]
    fn coefficient_matches_enumeration() {
        for n in 1..=5 {
            for label in index_set(n).unwrap().iter() {
                for zeta in 1..=n {
                    let oracle = enumerate_coefficients(*label, zeta, n);
                    for alpha in 0..=zeta {
                        for beta in 0..=(zeta - alpha) {
                            let expected = oracle.get(&(alpha, beta)).copied().unwrap_or(0);
                            assert_eq!(
                                coalition_coefficient(*label, zeta, n, alpha, beta).unwrap(),
                                BigUint::from(expected),
                                "label {label} zeta {zeta} n {n} alpha {alpha} beta {beta}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_count_identity() {
        for n in 1..=8 {
            for label in index_set(n).unwrap().iter() {
                for zeta in 1..=n {
                    let total: BigUint = deviation_terms(*label, zeta, n)
                        .into_iter()
                        .map(|(_, c)| c)
                        .sum();
                    assert_eq!(total, falling_factorial(n as u64, zeta as u64));
                }
            }
        }
    }

    #[test]
    fn deviation_loads_stay_in_range() {
        for n in 1..=8 {
            for label in index_set(n).unwrap().iter() {
                for zeta in 1..=n {
                    for alpha in 0..=zeta {
                        for beta in 0..=(zeta - alpha) {
                            if !coalition_coefficient(*label, zeta, n, alpha, beta)
                                .unwrap()
                                .is_zero()
                            {
                                let load = (label.eq_load() + beta) as i64 - alpha as i64;
                                assert!((0..=n as i64).contains(&load));
                            }
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn falling_factorial_edges(x in 0u64..40) {
            prop_assert_eq!(falling_factorial(x, 1), BigUint::from(x));
            prop_assert_eq!(falling_factorial(x, x), factorial(x));
            prop_assert_eq!(falling_factorial(x, x + 1), BigUint::zero());
        }

        #[test]
        fn binomial_matches_factorials(n in 0u64..30, r in 0u64..30) {
            let expected = if r > n {
                BigUint::zero()
            } else {
                factorial(n) / (factorial(r) * factorial(n - r))
            };
            prop_assert_eq!(binomial(n, r), expected);
        }
    }
}
