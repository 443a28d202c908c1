//! The recursive method: exact uniform sampling from big-integer counts.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::analytic::SeriesTable;
use crate::class::ClassSpec;
use crate::error::{Error, Result};
use crate::tree::PlaneTree;

/// Uniform integer in `0..bound` by rejection on `bits(bound)` random bits.
pub fn random_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(!bound.is_zero(), "empty range");
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask = if bits % 32 == 0 { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
        *digits.last_mut().expect("bound is positive") &= top_mask;
        let x = BigUint::from_slice(&digits);
        if &x < bound {
            return x;
        }
    }
}

/// Index `i` drawn with probability `weight(i) / total`, scanning `range`.
fn pick<R: Rng + ?Sized>(
    total: &BigUint,
    range: impl Iterator<Item = usize>,
    mut weight: impl FnMut(usize) -> BigUint,
    rng: &mut R,
) -> usize {
    let mut x = random_below(total, rng);
    for i in range {
        let w = weight(i);
        if x < w {
            return i;
        }
        x -= w;
    }
    unreachable!("weights sum to the total")
}

/// `p_k`, `q_k`, the sequence counts `f_m` and `[z^k] P^d` for `d, k <= order`.
#[derive(Clone, Debug)]
pub struct ExactTables {
    order: usize,
    p: Vec<BigUint>,
    q: Vec<BigUint>,
    f: Vec<BigUint>,
    pow: Vec<Vec<BigUint>>,
}

impl ExactTables {
    pub fn new(spec: &ClassSpec, order: usize) -> Result<Self> {
        Self::from_series(&SeriesTable::compute(spec, order)?, order)
    }

    pub fn from_series(series: &SeriesTable, order: usize) -> Result<Self> {
        if order > series.exact_order {
            return Err(Error::Resource(format!(
                "exact tables of order {order} need a series of that order (have {})",
                series.exact_order
            )));
        }
        let p: Vec<BigUint> = (0..=order).map(|k| if k == 0 { BigUint::zero() } else { series.p(k).clone() }).collect();
        let q: Vec<BigUint> = (0..=order).map(|k| series.q(k).clone()).collect();
        let f: Vec<BigUint> = (0..=order).map(|k| if k == 0 { BigUint::one() } else { series.c(k).clone() }).collect();
        let mut pow = vec![vec![BigUint::zero(); order + 1]];
        pow[0][0] = BigUint::one();
        for d in 1..=order {
            let prev = &pow[d - 1];
            let mut row = vec![BigUint::zero(); order + 1];
            for (k, slot) in row.iter_mut().enumerate().skip(d) {
                let mut acc = BigUint::zero();
                for j in 1..=k + 1 - d {
                    if !prev[k - j].is_zero() {
                        acc += &p[j] * &prev[k - j];
                    }
                }
                *slot = acc;
            }
            pow.push(row);
        }
        Ok(ExactTables { order, p, q, f, pow })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.order {
            return Err(Error::Resource(format!(
                "size {n} outside exact tables of order {}; use the gw method for large sizes",
                self.order
            )));
        }
        Ok(())
    }

    /// Uniform shape among packed trees with `n` leaves, each shape weighted by `∏ q_d`.
    pub fn sample_shape<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PlaneTree<()>> {
        self.check(n)?;
        let mut tree = PlaneTree::leaf();
        let mut stack = vec![(0, n)];
        while let Some((v, k)) = stack.pop() {
            if k == 1 {
                continue;
            }
            let d = pick(&self.p[k], 2..=k, |d| &self.q[d] * &self.pow[d][k], rng);
            let mut sizes = Vec::with_capacity(d);
            let mut m = k;
            for r in (1..=d).rev() {
                let j = pick(&self.pow[r][m], 1..=m + 1 - r, |j| &self.p[j] * &self.pow[r - 1][m - j], rng);
                sizes.push(j);
                m -= j;
            }
            let ids: Vec<_> = sizes.iter().map(|_| tree.add_child(v, None)).collect();
            stack.extend(ids.into_iter().zip(sizes).rev());
        }
        Ok(tree)
    }

    /// Sizes of the ⊕-components of a uniform class member of size `n`.
    pub fn sample_composition<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        self.check(n)?;
        let mut out = Vec::new();
        let mut m = n;
        while m > 0 {
            let j = pick(&self.f[m], 1..=m, |j| &self.p[j] * &self.f[m - j], rng);
            out.push(j);
            m -= j;
        }
        Ok(out)
    }
}
