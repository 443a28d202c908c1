//! Small statistical toolkit: means with standard errors, chi-square and
//! Kolmogorov–Smirnov tests, total variation.

use std::collections::BTreeMap;
use std::hash::Hash;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub sd: f64,
    pub count: usize,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe::default();
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    MeanSe { mean, se: (var / n as f64).sqrt(), sd: var.sqrt(), count: n }
}

/// Mean of 0/1 outcomes with the binomial standard error.
pub fn proportion(hits: u64, n: u64) -> MeanSe {
    let p = hits as f64 / n as f64;
    let sd = (p * (1.0 - p)).sqrt();
    MeanSe { mean: p, se: sd / (n as f64).sqrt(), sd, count: n as usize }
}

fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").sf(stat)
}

/// Goodness of fit against `probs` (same order as `observed`); returns `(statistic, p-value)`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> (f64, f64) {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&o, &p)| {
            let e = n as f64 * p;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let cells = probs.iter().filter(|&&p| p > 0.0).count();
    (stat, chi_square_sf(stat, cells.saturating_sub(1)))
}

/// Goodness of fit against the uniform law on the observed cells.
pub fn chi_square_uniform(observed: &[u64]) -> (f64, f64) {
    let k = observed.len();
    chi_square_gof(observed, &vec![1.0 / k as f64; k])
}

/// Two-sample homogeneity test over categories; categories whose pooled
/// count is below `min_pooled` are merged into one cell.
pub fn chi_square_two_sample<K: Eq + Hash + Ord + Clone>(
    a: &BTreeMap<K, u64>,
    b: &BTreeMap<K, u64>,
    min_pooled: u64,
) -> (f64, f64) {
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut rare = (0u64, 0u64);
    for k in keys {
        let (x, y) = (a.get(k).copied().unwrap_or(0), b.get(k).copied().unwrap_or(0));
        if x + y < min_pooled {
            rare.0 += x;
            rare.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if rare.0 + rare.1 > 0 {
        cells.push(rare);
    }
    let (na, nb) = (cells.iter().map(|c| c.0).sum::<u64>() as f64, cells.iter().map(|c| c.1).sum::<u64>() as f64);
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| {
            let tot = (x + y) as f64;
            let (ea, eb) = (tot * na / (na + nb), tot * nb / (na + nb));
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    (stat, chi_square_sf(stat, cells.len().saturating_sub(1)))
}

/// `sup |F_n - F|` against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value with the usual small-sample correction.
pub fn ks_p_value(stat: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let x = (sn + 0.12 + 0.11 / sn) * stat;
    if x < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-2.0 * (k * k) as f64 * x * x).exp();
        p += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Half the `ℓ¹` distance between two mass vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    (0..n).map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs()).sum::<f64>() / 2.0
}

/// Chi distribution with `dof` degrees of freedom: CDF of `sqrt(χ²_dof)`.
pub fn chi_cdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        ChiSquared::new(dof as f64).expect("positive dof").cdf(x * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((m.se - m.sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_values() {
        let (s, p) = chi_square_uniform(&[10, 10, 10, 10]);
        assert_eq!(s, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        // one degree of freedom, statistic 3.841 is the 5% point
        let (s, p) = chi_square_gof(&[60, 40], &[0.5, 0.5]);
        assert!((s - 4.0).abs() < 1e-12);
        assert!((p - 0.0455).abs() < 1e-3);
    }

    #[test]
    fn two_sample_identical_is_perfect() {
        let a: BTreeMap<u32, u64> = [(1, 50), (2, 30), (3, 1)].into();
        let (s, p) = chi_square_two_sample(&a, &a.clone(), 5);
        assert_eq!(s, 0.0);
        assert!(p > 0.99);
    }

    #[test]
    fn ks_against_uniform() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.0005).abs() < 1e-12);
        assert!(ks_p_value(d, 1000) > 0.99);
        assert!(ks_p_value(0.1, 1000) < 1e-6);
    }

    #[test]
    fn chi_cdf_rayleigh() {
        for x in [0.3, 1.0, 2.0] {
            assert!((chi_cdf(x, 2) - (1.0 - (-x * x / 2.0f64).exp())).abs() < 1e-12);
        }
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0]), 0.5);
    }
}
