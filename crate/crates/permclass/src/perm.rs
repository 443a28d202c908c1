//! Permutations in one-line notation, patterns, occurrences and substitution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Largest pattern size `count_occurrences` accepts without being forced.
pub const OCCURRENCE_LIMIT: usize = 6;

/// A permutation of `1..=n` in one-line notation. Indices at the interface are 1-based.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn new(values: Vec<u32>) -> Result<Self> {
        if values.is_empty() {
            return invalid("empty permutation");
        }
        let n = values.len();
        let mut seen = vec![false; n + 1];
        for &v in &values {
            let v = v as usize;
            if v == 0 || v > n || seen[v] {
                return invalid(format!("{values:?} is not a permutation of 1..{n}"));
            }
            seen[v] = true;
        }
        Ok(Permutation(values))
    }

    /// Caller guarantees `values` is a permutation of `1..=n`.
    pub(crate) fn from_vec_unchecked(values: Vec<u32>) -> Self {
        debug_assert!(Permutation::new(values.clone()).is_ok());
        Permutation(values)
    }

    pub fn identity(n: usize) -> Self {
        Permutation((1..=n as u32).collect())
    }

    pub fn decreasing(n: usize) -> Self {
        Permutation((1..=n as u32).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    /// Value at 1-based position `i`.
    pub fn at(&self, i: usize) -> u32 {
        self.0[i - 1]
    }

    pub fn complement(&self) -> Self {
        let n = self.len() as u32 + 1;
        Permutation(self.0.iter().map(|&v| n - v).collect())
    }

    pub fn reverse(&self) -> Self {
        Permutation(self.0.iter().rev().copied().collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v as usize - 1] = i as u32 + 1;
        }
        Permutation(inv)
    }

    /// All permutations of size `n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        let mut cur: Option<Vec<u32>> = Some((1..=n as u32).collect());
        std::iter::from_fn(move || {
            let out = cur.clone()?;
            let mut next = out.clone();
            cur = if next_permutation(&mut next) { Some(next) } else { None };
            Some(Permutation(out))
        })
    }

    /// `pat_I(self)` for a 1-based index set, given in increasing order.
    pub fn pattern_at(&self, indices: &[usize]) -> Result<Permutation> {
        if indices.is_empty() {
            return invalid("empty index set");
        }
        let mut prev = 0;
        for &i in indices {
            if i == 0 || i > self.len() {
                return invalid(format!("index {i} out of range 1..{}", self.len()));
            }
            if i <= prev {
                return invalid("indices must be strictly increasing");
            }
            prev = i;
        }
        let xs: Vec<u32> = indices.iter().map(|&i| self.0[i - 1]).collect();
        standardize(&xs)
    }

    /// Pattern of the contiguous 1-based window `[a, b]`.
    pub fn window(&self, a: usize, b: usize) -> Permutation {
        standardize_distinct(&self.0[a - 1..b])
    }

    /// Number of index sets `I` with `pat_I(self) = pi`. Refuses `|pi| > 6`;
    /// see [`Permutation::count_occurrences_forced`].
    pub fn count_occurrences(&self, pi: &Permutation) -> Result<u64> {
        if pi.len() > OCCURRENCE_LIMIT {
            return invalid(format!(
                "brute-force occurrence counting refused for |pi| = {} > {OCCURRENCE_LIMIT}",
                pi.len()
            ));
        }
        Ok(self.count_occurrences_forced(pi))
    }

    /// Brute force over all `C(n, k)` subsets.
    pub fn count_occurrences_forced(&self, pi: &Permutation) -> u64 {
        let (n, k) = (self.len(), pi.len());
        if k > n {
            return 0;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        let mut count = 0;
        loop {
            if matches_at(&self.0, &idx, &pi.0) {
                count += 1;
            }
            // next combination
            let mut j = k;
            loop {
                if j == 0 {
                    return count;
                }
                j -= 1;
                if idx[j] < n - k + j {
                    idx[j] += 1;
                    for l in j + 1..k {
                        idx[l] = idx[l - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Number of windows of `|pi|` adjacent entries order-isomorphic to `pi`.
    pub fn count_consecutive(&self, pi: &Permutation) -> u64 {
        let k = pi.len();
        if k > self.len() {
            return 0;
        }
        let idx_base: Vec<usize> = (0..k).collect();
        let mut idx = idx_base.clone();
        let mut count = 0;
        for start in 0..=self.len() - k {
            for (slot, b) in idx.iter_mut().zip(&idx_base) {
                *slot = start + b;
            }
            if matches_at(&self.0, &idx, &pi.0) {
                count += 1;
            }
        }
        count
    }

    /// `theta[parts]`: position `i` of `theta` is inflated by `parts[i]`.
    pub fn substitute(theta: &Permutation, parts: &[Permutation]) -> Result<Permutation> {
        if theta.len() != parts.len() {
            return invalid(format!("substitution needs {} parts, got {}", theta.len(), parts.len()));
        }
        // offset[v] = total size of parts whose theta-value is below v
        let mut size_by_value = vec![0u32; theta.len() + 1];
        for (i, &v) in theta.0.iter().enumerate() {
            size_by_value[v as usize] = parts[i].len() as u32;
        }
        let mut offset = vec![0u32; theta.len() + 1];
        for v in 2..=theta.len() {
            offset[v] = offset[v - 1] + size_by_value[v - 1];
        }
        let mut out = Vec::with_capacity(parts.iter().map(Permutation::len).sum());
        for (i, part) in parts.iter().enumerate() {
            let off = offset[theta.0[i] as usize];
            out.extend(part.0.iter().map(|&x| x + off));
        }
        Ok(Permutation(out))
    }

    /// Direct sum `⊕[parts]`.
    pub fn plus_sum(parts: &[Permutation]) -> Permutation {
        Self::substitute(&Self::identity(parts.len()), parts).expect("sizes match")
    }

    /// Skew sum `⊖[parts]`.
    pub fn minus_sum(parts: &[Permutation]) -> Permutation {
        Self::substitute(&Self::decreasing(parts.len()), parts).expect("sizes match")
    }

    /// Simple iff `n > 2` and no interval of length `2..n-1` maps onto an interval.
    pub fn is_simple(&self) -> bool {
        let n = self.len();
        if n <= 2 {
            return false;
        }
        for i in 0..n {
            let (mut lo, mut hi) = (self.0[i], self.0[i]);
            for j in i + 1..n {
                lo = lo.min(self.0[j]);
                hi = hi.max(self.0[j]);
                let len = j - i + 1;
                if len < n && (hi - lo) as usize == j - i {
                    return false;
                }
            }
        }
        true
    }

    /// Finest ⊕-decomposition; a prefix of length `i` is a summand iff its maximum is `i`.
    pub fn plus_components(&self) -> Vec<Permutation> {
        split_prefixes(&self.0, |len, _, max| max as usize == len)
    }

    /// Finest ⊖-decomposition; a prefix of length `i` is a summand iff its minimum is `n - i + 1`.
    pub fn minus_components(&self) -> Vec<Permutation> {
        let n = self.len();
        split_prefixes(&self.0, |len, min, _| min as usize == n - len + 1)
    }

    /// Sizes of the ⊕-components, in order.
    pub fn plus_component_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        let (mut max, mut start) = (0u32, 0usize);
        for (i, &v) in self.0.iter().enumerate() {
            max = max.max(v);
            if max as usize == i + 1 {
                sizes.push(i + 1 - start);
                start = i + 1;
            }
        }
        sizes
    }

    /// Number of non-inversions (occurrences of 12), in O(n log n).
    pub fn non_inversion_count(&self) -> u64 {
        // Fenwick tree over values
        let n = self.len();
        let mut fen = vec![0u32; n + 1];
        let mut count = 0u64;
        for &v in &self.0 {
            let mut i = v as usize - 1;
            while i > 0 {
                count += fen[i] as u64;
                i -= i & i.wrapping_neg();
            }
            let mut i = v as usize;
            while i <= n {
                fen[i] += 1;
                i += i & i.wrapping_neg();
            }
        }
        count
    }

    /// Space-separated text form.
    pub fn to_spaced(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        parts.join(" ")
    }

    /// Compact digit form, only for `n <= 9`.
    pub fn to_compact(&self) -> Option<String> {
        (self.len() <= 9).then(|| self.0.iter().map(u32::to_string).collect())
    }
}

fn split_prefixes(values: &[u32], is_cut: impl Fn(usize, u32, u32) -> bool) -> Vec<Permutation> {
    let mut out = Vec::new();
    let (mut start, mut lo, mut hi) = (0usize, u32::MAX, 0u32);
    for (i, &v) in values.iter().enumerate() {
        lo = lo.min(v);
        hi = hi.max(v);
        if is_cut(i + 1, lo, hi) {
            out.push(standardize_distinct(&values[start..=i]));
            start = i + 1;
        }
    }
    out
}

fn matches_at(values: &[u32], idx: &[usize], pi: &[u32]) -> bool {
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            if (values[idx[a]] < values[idx[b]]) != (pi[a] < pi[b]) {
                return false;
            }
        }
    }
    true
}

fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `std(xs)`: the permutation in the same relative order as `xs`.
pub fn standardize<T: PartialOrd + Copy>(xs: &[T]) -> Result<Permutation> {
    if xs.is_empty() {
        return invalid("cannot standardize an empty sequence");
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut incomparable = false;
    order.sort_by(|&a, &b| {
        xs[a].partial_cmp(&xs[b]).unwrap_or_else(|| {
            incomparable = true;
            std::cmp::Ordering::Equal
        })
    });
    if incomparable {
        return invalid("entries are not comparable");
    }
    if order.windows(2).any(|w| xs[w[0]] == xs[w[1]]) {
        return invalid("entries must be pairwise distinct");
    }
    let mut out = vec![0u32; xs.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank as u32 + 1;
    }
    Ok(Permutation(out))
}

pub(crate) fn standardize_distinct(xs: &[u32]) -> Permutation {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_unstable_by_key(|&i| xs[i]);
    let mut out = vec![0u32; xs.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank as u32 + 1;
    }
    Permutation(out)
}

impl FromStr for Permutation {
    type Err = Error;

    /// Accepts `"4 2 1 3"` (also comma separated) or the compact `"4213"` for `n <= 9`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let tokens: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        let values: Vec<u32> = if tokens.len() == 1 && tokens[0].len() > 1 {
            let digits = tokens[0];
            if digits.len() > 9 {
                return invalid(format!("compact form only allowed for n <= 9: {digits:?}"));
            }
            digits
                .chars()
                .map(|c| c.to_digit(10).ok_or_else(|| Error::InvalidInput(format!("bad digit {c:?}"))))
                .collect::<Result<_>>()?
        } else {
            tokens
                .iter()
                .map(|t| t.parse::<u32>().map_err(|_| Error::InvalidInput(format!("bad entry {t:?}"))))
                .collect::<Result<_>>()?
        };
        Permutation::new(values)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_spaced())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_compact() {
            Some(c) => write!(f, "Permutation({c})"),
            None => write!(f, "Permutation({})", self.to_spaced()),
        }
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_compact().unwrap_or_else(|| self.to_spaced()))
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
