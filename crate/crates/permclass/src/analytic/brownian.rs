//! Exact finite marginals `ρ_k` of the biased Brownian separable permuton.

use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::perm::Permutation;

/// Largest `k` for which the marginal is enumerated.
pub const MAX_MARGINAL_SIZE: usize = 8;

/// Law of the permutation read from a uniform binary plane tree with `k`
/// leaves whose internal vertices are `⊕` with probability `p`, else `⊖`.
pub fn brownian_marginal(k: usize, p: f64) -> Result<BTreeMap<Permutation, f64>> {
    if k == 0 || k > MAX_MARGINAL_SIZE {
        return invalid(format!("marginal size must be in 1..={MAX_MARGINAL_SIZE}"));
    }
    if !(0.0..=1.0).contains(&p) {
        return invalid("bias must lie in [0, 1]");
    }
    // catalan[m] counts binary plane trees with m+1 leaves
    let mut catalan = vec![1.0f64; k];
    for m in 1..k {
        catalan[m] = (0..m).map(|i| catalan[i] * catalan[m - 1 - i]).sum();
    }
    let mut dist: Vec<BTreeMap<Permutation, f64>> = vec![BTreeMap::new()];
    dist.push(BTreeMap::from([(Permutation::identity(1), 1.0)]));
    for m in 2..=k {
        let mut out = BTreeMap::new();
        for i in 1..m {
            let shape = catalan[i - 1] * catalan[m - i - 1] / catalan[m - 1];
            for (left, wl) in &dist[i] {
                for (right, wr) in &dist[m - i] {
                    let w = shape * wl * wr;
                    let parts = [left.clone(), right.clone()];
                    *out.entry(Permutation::plus_sum(&parts)).or_insert(0.0) += w * p;
                    *out.entry(Permutation::minus_sum(&parts)).or_insert(0.0) += w * (1.0 - p);
                }
            }
        }
        out.retain(|_, w| *w > 0.0);
        dist.push(out);
    }
    Ok(dist.swap_remove(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn small_sizes() {
        let d2 = brownian_marginal(2, 0.3).unwrap();
        assert!((d2[&perm("12")] - 0.3).abs() < 1e-15);
        assert!((d2[&perm("21")] - 0.7).abs() < 1e-15);
        let d3 = brownian_marginal(3, 0.5).unwrap();
        assert_eq!(d3.len(), 6);
        assert_eq!(d3[&perm("123")], 0.25);
        assert_eq!(d3[&perm("321")], 0.25);
        for s in ["132", "213", "231", "312"] {
            assert_eq!(d3[&perm(s)], 0.125);
        }
    }

    #[test]
    fn sums_to_one_and_only_separable() {
        for k in 1..=7 {
            for p in [0.0, 0.2, 0.5, 0.9] {
                let d = brownian_marginal(k, p).unwrap();
                assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-12);
                for nu in d.keys() {
                    assert_eq!(nu.count_occurrences(&perm("2413")).unwrap(), 0);
                    assert_eq!(nu.count_occurrences(&perm("3142")).unwrap(), 0);
                }
            }
        }
        assert!(brownian_marginal(9, 0.5).is_err());
    }

    #[test]
    fn consistent_family() {
        for k in 2..=6 {
            let p = 0.37;
            let big = brownian_marginal(k + 1, p).unwrap();
            let small = brownian_marginal(k, p).unwrap();
            let mut pushed: BTreeMap<Permutation, f64> = BTreeMap::new();
            for (nu, w) in &big {
                for drop in 1..=k + 1 {
                    let idx: Vec<usize> = (1..=k + 1).filter(|&i| i != drop).collect();
                    *pushed.entry(nu.pattern_at(&idx).unwrap()).or_insert(0.0) += w / (k + 1) as f64;
                }
            }
            for (nu, w) in &small {
                assert!((pushed[nu] - w).abs() < 1e-12, "{nu:?}");
            }
            assert_eq!(pushed.len(), small.len());
        }
    }
}
