//! The offspring law `ξ` of the leaf-conditioned packed tree and its size-biased
//! versions `ξ̂` and `ξ*`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::Serialize;

use super::limits::{criticality_classify, sigma2_at, solve_kappa, Criticality};
use super::series::gadget_count_f64;
use crate::class::ClassSpec;
use crate::error::{Error, Result};

/// Largest residual tail mass accepted at the support cutoff.
pub const TAIL_TOLERANCE: f64 = 1e-9;

/// `P(ξ=0) = a`, `P(ξ=1) = 0`, `P(ξ=k) = q_k t₀^{k-1}`; tail beyond the cutoff
/// is folded into the largest retained degree.
#[derive(Clone, Debug, Serialize)]
pub struct OffspringModel {
    pub kappa: f64,
    pub t0: f64,
    pub a: f64,
    pub cutoff: usize,
    /// Mass beyond `cutoff` before folding.
    pub tail_mass: f64,
    /// `P(ξ=k)` for `k = 0..=cutoff`.
    pub pmf: Vec<f64>,
    /// `E[ξ] = Q'(t₀)`, from the table before folding plus the tail.
    pub mean: f64,
    /// Closed form `κ(1+κ)³S''(κ) + 4κ`.
    pub sigma2: f64,
    /// `Var ξ` from the (folded) table.
    pub sigma2_numeric: f64,
    pub xi_hat: Vec<f64>,
    pub xi_star: Vec<f64>,
    pub criticality: Criticality,
    #[serde(skip)]
    samplers: Samplers,
}

#[derive(Clone, Debug)]
struct Samplers {
    xi: WeightedIndex<f64>,
    xi_hat: WeightedIndex<f64>,
    xi_star: WeightedIndex<f64>,
}

impl OffspringModel {
    pub fn new(spec: &ClassSpec, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::InvalidInput("offspring cutoff must be at least 2".into()));
        }
        let kappa = solve_kappa(spec)?.kappa;
        let t0 = kappa / (1.0 + kappa);
        let a = 1.0 - kappa - spec.s_series(kappa) * (1.0 + kappa) / kappa;
        let term = |k: usize| gadget_count_f64(spec, k) * t0.powi(k as i32 - 1);

        let mut pmf = vec![0.0; cutoff + 1];
        pmf[0] = a;
        let mut mean = 0.0;
        for (k, w) in pmf.iter_mut().enumerate().skip(2) {
            *w = term(k);
            mean += k as f64 * *w;
        }
        let (mut tail_mass, mut tail_mean) = (0.0, 0.0);
        for k in cutoff + 1.. {
            let w = term(k);
            tail_mass += w;
            tail_mean += k as f64 * w;
            if k as f64 * w < 1e-20 * (1.0 + tail_mean) || k > cutoff + 1_000_000 {
                break;
            }
        }
        if tail_mass > TAIL_TOLERANCE {
            return Err(Error::NeedsLargerCutoff { cutoff, tail: tail_mass });
        }
        mean += tail_mean;
        pmf[cutoff] += tail_mass;

        let total: f64 = pmf.iter().sum();
        let m1: f64 = pmf.iter().enumerate().map(|(k, w)| k as f64 * w).sum();
        let m2: f64 = pmf.iter().enumerate().map(|(k, w)| (k * k) as f64 * w).sum();
        let sigma2_numeric = m2 / total - (m1 / total).powi(2);

        let xi_hat: Vec<f64> = pmf.iter().enumerate().map(|(k, w)| k as f64 * w / m1).collect();
        let fact2: f64 = pmf.iter().enumerate().map(|(k, w)| (k * k.saturating_sub(1)) as f64 * w).sum();
        let xi_star: Vec<f64> =
            pmf.iter().enumerate().map(|(k, w)| (k * k.saturating_sub(1)) as f64 * w / fact2).collect();

        let weights = |v: &[f64]| WeightedIndex::new(v.to_vec()).map_err(|e| Error::InvalidInput(e.to_string()));
        let samplers = Samplers { xi: weights(&pmf)?, xi_hat: weights(&xi_hat)?, xi_star: weights(&xi_star)? };
        Ok(OffspringModel {
            kappa,
            t0,
            a,
            cutoff,
            tail_mass,
            pmf,
            mean,
            sigma2: sigma2_at(spec, kappa),
            sigma2_numeric,
            xi_hat,
            xi_star,
            criticality: criticality_classify(spec),
            samplers,
        })
    }

    /// Smallest power-of-two cutoff (from 64) whose tail is below the tolerance.
    pub fn auto(spec: &ClassSpec) -> Result<Self> {
        let mut cutoff = 64;
        loop {
            match Self::new(spec, cutoff) {
                Err(Error::NeedsLargerCutoff { .. }) if cutoff < 1 << 20 => cutoff *= 2,
                other => return other,
            }
        }
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn sample_xi<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.samplers.xi.sample(rng)
    }

    pub fn sample_xi_hat<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.samplers.xi_hat.sample(rng)
    }

    pub fn sample_xi_star<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.samplers.xi_star.sample(rng)
    }

    pub fn mean_xi_hat(&self) -> f64 {
        self.xi_hat.iter().enumerate().map(|(k, w)| k as f64 * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s4() -> ClassSpec {
        ClassSpec::from_simples("s4", vec!["2413".parse().unwrap(), "3142".parse().unwrap()]).unwrap()
    }

    #[test]
    fn separable_law() {
        let m = OffspringModel::new(&ClassSpec::separable(), 64).unwrap();
        let t0 = 1.0 - 1.0 / 2f64.sqrt();
        assert!((m.t0 - t0).abs() < 1e-12);
        assert!((m.a - (2.0 - 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(m.prob(1), 0.0);
        for k in 2..20 {
            assert!((m.prob(k) - t0.powi(k as i32 - 1)).abs() < 1e-14);
        }
        assert!((m.sigma2 - 4.0 * (2f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn critical_moments() {
        for spec in [ClassSpec::separable(), s4()] {
            let m = OffspringModel::auto(&spec).unwrap();
            assert!((m.mean - 1.0).abs() < 1e-9, "{}", m.mean);
            assert!((m.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((m.sigma2_numeric - m.sigma2).abs() < 1e-6, "{} {}", m.sigma2_numeric, m.sigma2);
            assert!((m.mean_xi_hat() - 1.0 - m.sigma2).abs() < 1e-6);
            assert!(m.pmf[2..].iter().all(|&w| w > 0.0));
            assert!((m.xi_star.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_cutoff_is_refused() {
        match OffspringModel::new(&s4(), 8) {
            Err(Error::NeedsLargerCutoff { cutoff: 8, tail }) => assert!(tail > TAIL_TOLERANCE),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampled_mean() {
        let m = OffspringModel::auto(&s4()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mean = (0..n).map(|_| m.sample_xi(&mut rng) as f64).sum::<f64>() / n as f64;
        let se = (m.sigma2 / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 4.0 * se, "{mean}");
    }
}
