//! Galton–Watson trees conditioned on their number of leaves.
//!
//! A plane tree with `n` leaves has conditioned probability proportional to
//! `∏ q_{d(v)}` over internal vertices: the tilt `t₀` only enters through the
//! constant `t₀^{n-1} a^n`. Both methods below target that law exactly (up to
//! binary64 weights).

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::Rng;
use statrs::function::factorial::ln_binomial;

use super::gadget::decorate;
use super::SamplerConfig;
use crate::analytic::{gadget_count_f64, OffspringModel};
use crate::class::ClassSpec;
use crate::decomposition::PackedTree;
use crate::error::{Error, Result};
use crate::tree::PlaneTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeMethod {
    /// Plain Galton–Watson draws, rejected unless they have exactly `n` leaves.
    Rejection,
    /// Degree multiset by a renewal, placed uniformly and rotated by the cycle lemma.
    CycleLemma,
}

/// Precomputed weights for trees with exactly `n` leaves.
#[derive(Clone, Debug)]
pub struct LeafConditioned {
    n: usize,
    /// Outdegree law of one Galton–Watson vertex restricted to `0..=n`, plus
    /// a final "more than n" bucket that forces rejection.
    vertex: WeightedIndex<f64>,
    /// Internal outdegrees `2..=n` with weights `q_e t₀^{e-1}`.
    internal: Option<WeightedIndex<f64>>,
    /// `log g(I) - max log g` for the number `I` of internal vertices.
    log_accept: Vec<f64>,
}

impl LeafConditioned {
    pub fn new(spec: &ClassSpec, t0: f64, a: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return crate::error::invalid("trees have at least one leaf");
        }
        let w: Vec<f64> = (2..=n.max(2)).map(|e| gadget_count_f64(spec, e) * t0.powi(e as i32 - 1)).collect();
        let w = &w[..n.saturating_sub(1)];
        let z: f64 = w.iter().sum();
        let mut vertex = vec![a, 0.0];
        vertex.extend_from_slice(w);
        vertex.push((1.0 - a - z).max(0.0));
        let vertex = WeightedIndex::new(vertex).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let internal = (n >= 2).then(|| WeightedIndex::new(w.to_vec()).expect("positive weights"));
        // acceptance for I internal vertices: C(n+I, I) Z^I / (n+I), normalised
        let mut log_accept: Vec<f64> = (0..n)
            .map(|i| {
                if i == 0 {
                    f64::NEG_INFINITY
                } else {
                    ln_binomial((n + i) as u64, i as u64) + i as f64 * z.ln() - ((n + i) as f64).ln()
                }
            })
            .collect();
        let max = log_accept.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for x in &mut log_accept {
            *x -= max;
        }
        Ok(LeafConditioned { n, vertex, internal, log_accept })
    }

    pub fn from_model(spec: &ClassSpec, model: &OffspringModel, n: usize) -> Result<Self> {
        Self::new(spec, model.t0, model.a, n)
    }

    pub fn leaves(&self) -> usize {
        self.n
    }

    /// One Galton–Watson attempt; `None` when it cannot end with `n` leaves.
    fn attempt<R: Rng + ?Sized>(&self, cap: usize, rng: &mut R) -> Option<Vec<u32>> {
        let n = self.n;
        let beyond = n + 1;
        let mut seq = Vec::new();
        let (mut open, mut leaves) = (1usize, 0usize);
        while open > 0 {
            let d = self.vertex.sample(rng);
            if d == beyond || d == 1 {
                return None;
            }
            seq.push(d as u32);
            open = open - 1 + d;
            if d == 0 {
                leaves += 1;
            }
            // every open slot still produces at least one leaf
            if leaves + open > n || seq.len() > cap {
                return None;
            }
        }
        (leaves == n).then_some(seq)
    }

    /// Preorder outdegree sequence of a conditioned tree.
    pub fn sample_degrees<R: Rng + ?Sized>(
        &self,
        method: TreeMethod,
        cfg: &SamplerConfig,
        rng: &mut R,
    ) -> Result<Vec<u32>> {
        if self.n == 1 {
            return Ok(vec![0]);
        }
        match method {
            TreeMethod::Rejection => {
                let cap = cfg.vertex_cap_factor.saturating_mul(self.n);
                for _ in 0..cfg.max_attempts {
                    if let Some(seq) = self.attempt(cap, rng) {
                        return Ok(seq);
                    }
                }
                Err(Error::RetryLimit {
                    attempts: cfg.max_attempts,
                    detail: format!("no Galton–Watson tree with {} leaves", self.n),
                })
            }
            TreeMethod::CycleLemma => {
                let internal = self.internal.as_ref().expect("n >= 2");
                let target = self.n - 1;
                for _ in 0..cfg.max_attempts {
                    let mut degrees = Vec::new();
                    let mut sum = 0;
                    while sum < target {
                        let e = internal.sample(rng) + 2;
                        sum += e - 1;
                        degrees.push(e as u32);
                    }
                    if sum != target {
                        continue;
                    }
                    if rng.gen::<f64>().ln() >= self.log_accept[degrees.len()] {
                        continue;
                    }
                    return Ok(cycle_lemma(self.n, &degrees, rng));
                }
                Err(Error::RetryLimit {
                    attempts: cfg.max_attempts,
                    detail: format!("renewal never hit {} leaves", self.n),
                })
            }
        }
    }
}

/// Spreads the internal degrees (in order) over uniform positions among
/// `n + I` slots, leaves elsewhere, and rotates to the unique Łukasiewicz word.
fn cycle_lemma<R: Rng + ?Sized>(n: usize, internal: &[u32], rng: &mut R) -> Vec<u32> {
    let total = n + internal.len();
    let mut pos: Vec<usize> = index::sample(rng, total, internal.len()).into_vec();
    pos.sort_unstable();
    let mut seq = vec![0u32; total];
    for (&p, &d) in pos.iter().zip(internal) {
        seq[p] = d;
    }
    let (mut sum, mut min, mut arg) = (0i64, i64::MAX, 0);
    for (i, &d) in seq.iter().enumerate() {
        sum += d as i64 - 1;
        if sum < min {
            min = sum;
            arg = i;
        }
    }
    seq.rotate_left((arg + 1) % total);
    seq
}

pub fn sample_conditioned_shape<R: Rng + ?Sized>(
    lc: &LeafConditioned,
    method: TreeMethod,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<PlaneTree<()>> {
    let seq = lc.sample_degrees(method, cfg, rng)?;
    Ok(PlaneTree::from_degree_sequence(&seq).expect("valid Łukasiewicz word"))
}

/// A uniform packed tree with `n` leaves: rejection up to
/// `cfg.rejection_max_n` leaves, the cycle-lemma method beyond.
pub fn sample_conditioned_packed_tree<R: Rng + ?Sized>(
    model: &OffspringModel,
    spec: &ClassSpec,
    n: usize,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<PackedTree> {
    cfg.validate()?;
    let lc = LeafConditioned::from_model(spec, model, n)?;
    let method = if n <= cfg.rejection_max_n { TreeMethod::Rejection } else { TreeMethod::CycleLemma };
    let shape = sample_conditioned_shape(&lc, method, cfg, rng)?;
    Ok(decorate(&shape, spec, rng))
}

/// An unconditioned `ξ`-Galton–Watson shape, or `None` past `cap` vertices.
pub fn gw_unconditioned<R: Rng + ?Sized>(model: &OffspringModel, cap: usize, rng: &mut R) -> Option<PlaneTree<()>> {
    let mut seq = Vec::new();
    let mut open = 1usize;
    while open > 0 {
        let d = model.sample_xi(rng);
        seq.push(d as u32);
        open = open - 1 + d;
        if seq.len() > cap {
            return None;
        }
    }
    Some(PlaneTree::from_degree_sequence(&seq).expect("valid Łukasiewicz word"))
}
