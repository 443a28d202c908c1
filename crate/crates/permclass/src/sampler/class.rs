use rand::Rng;

use super::conditioned::{sample_conditioned_shape, LeafConditioned, TreeMethod};
use super::exact::ExactTables;
use super::gadget::decorate;
use super::{Method, SamplerConfig};
use crate::analytic::{OffspringModel, SeriesTable};
use crate::class::ClassSpec;
use crate::decomposition::{forest_decode, DecoratedForest, PackedTree};
use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Reusable sampler of uniform class members of size up to `max_n`.
#[derive(Clone, Debug)]
pub struct ClassSampler {
    spec: ClassSpec,
    cfg: SamplerConfig,
    max_n: usize,
    exact: Option<ExactTables>,
    series: Option<SeriesTable>,
    model: Option<OffspringModel>,
}

impl ClassSampler {
    pub fn new(spec: &ClassSpec, cfg: SamplerConfig, max_n: usize) -> Result<Self> {
        cfg.validate()?;
        if max_n == 0 {
            return crate::error::invalid("sizes start at 1");
        }
        match cfg.method {
            Method::Exact => {
                if max_n > cfg.exact_order {
                    return Err(Error::Resource(format!(
                        "size {max_n} beyond exact order {}; use the gw method for large sizes",
                        cfg.exact_order
                    )));
                }
                let exact = ExactTables::new(spec, cfg.exact_order)?;
                Ok(ClassSampler { spec: spec.clone(), cfg, max_n, exact: Some(exact), series: None, model: None })
            }
            Method::GwRejection => {
                let series = SeriesTable::scaled(spec, max_n)?;
                Self::with_series(spec, series, cfg, max_n)
            }
        }
    }

    /// Reuses an existing series table (exact for `Method::Exact`).
    pub fn with_series(spec: &ClassSpec, series: SeriesTable, cfg: SamplerConfig, max_n: usize) -> Result<Self> {
        cfg.validate()?;
        if series.order < max_n {
            return Err(Error::Resource(format!("series of order {} below size {max_n}", series.order)));
        }
        match cfg.method {
            Method::Exact => {
                let order = cfg.exact_order.min(series.exact_order);
                if max_n > order {
                    return Err(Error::Resource(format!(
                        "size {max_n} beyond exact order {order}; use the gw method for large sizes"
                    )));
                }
                let exact = ExactTables::from_series(&series, order)?;
                Ok(ClassSampler { spec: spec.clone(), cfg, max_n, exact: Some(exact), series: None, model: None })
            }
            Method::GwRejection => {
                let model = OffspringModel::auto(spec)?;
                Ok(ClassSampler {
                    spec: spec.clone(),
                    cfg,
                    max_n,
                    exact: None,
                    series: Some(series),
                    model: Some(model),
                })
            }
        }
    }

    pub fn spec(&self) -> &ClassSpec {
        &self.spec
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.max_n {
            return Err(Error::Resource(format!("size {n} outside 1..={}", self.max_n)));
        }
        Ok(())
    }

    /// ⊕-component sizes, left to right.
    pub fn sample_composition<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        self.check(n)?;
        if let Some(exact) = &self.exact {
            return exact.sample_composition(n, rng);
        }
        let series = self.series.as_ref().expect("gw sampler has a series");
        let f = |m: usize| if m == 0 { 1.0 } else { series.c_scaled(m) };
        let mut out = Vec::new();
        let mut m = n;
        while m > 0 {
            let weights: Vec<f64> = (1..=m).map(|j| series.p_scaled(j) * f(m - j)).collect();
            let total: f64 = weights.iter().sum();
            let mut x = rng.gen::<f64>() * total;
            let mut j = m;
            for (i, w) in weights.iter().enumerate() {
                if x < *w {
                    j = i + 1;
                    break;
                }
                x -= w;
            }
            out.push(j);
            m -= j;
        }
        Ok(out)
    }

    /// A uniform packed tree with `k` leaves.
    pub fn sample_tree<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<PackedTree> {
        self.check(k)?;
        let shape = match &self.exact {
            Some(exact) => exact.sample_shape(k, rng)?,
            None => {
                let model = self.model.as_ref().expect("gw sampler has a model");
                let lc = LeafConditioned::from_model(&self.spec, model, k)?;
                let method = if k <= self.cfg.rejection_max_n { TreeMethod::Rejection } else { TreeMethod::CycleLemma };
                sample_conditioned_shape(&lc, method, &self.cfg, rng)?
            }
        };
        Ok(decorate(&shape, &self.spec, rng))
    }

    pub fn sample_forest<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DecoratedForest> {
        let sizes = self.sample_composition(n, rng)?;
        let trees = sizes.into_iter().map(|k| self.sample_tree(k, rng)).collect::<Result<Vec<_>>>()?;
        DecoratedForest::new(trees)
    }

    pub fn sample_permutation<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Permutation> {
        Ok(forest_decode(&self.sample_forest(n, rng)?))
    }
}

/// One uniform member of size `n`; build a [`ClassSampler`] to draw many.
pub fn sample_uniform_class_permutation<R: Rng + ?Sized>(
    spec: &ClassSpec,
    series: &SeriesTable,
    n: usize,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Permutation> {
    ClassSampler::with_series(spec, series.clone(), cfg.clone(), n)?.sample_permutation(n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::class_membership;
    use crate::sampler::stream_rng;
    use crate::stats::{chi_square_two_sample, chi_square_uniform};
    use std::collections::{BTreeMap, HashMap};

    #[test]
    fn size_one() {
        let sep = ClassSpec::separable();
        for cfg in [SamplerConfig::exact(1, 8), SamplerConfig::gw(1)] {
            let s = ClassSampler::new(&sep, cfg, 8).unwrap();
            assert_eq!(s.sample_permutation(1, &mut stream_rng(1, 0)).unwrap(), Permutation::identity(1));
        }
    }

    #[test]
    fn exact_uniform_over_separables_of_five() {
        let sep = ClassSpec::separable();
        let s = ClassSampler::new(&sep, SamplerConfig::exact(2, 16), 16).unwrap();
        let mut rng = stream_rng(2, 0);
        let mut counts: HashMap<Permutation, u64> = HashMap::new();
        for _ in 0..18_000 {
            let nu = s.sample_permutation(5, &mut rng).unwrap();
            *counts.entry(nu).or_default() += 1;
        }
        assert_eq!(counts.len(), 90);
        assert!(counts.keys().all(|nu| class_membership(nu, &sep)));
        assert!(chi_square_uniform(&counts.into_values().collect::<Vec<_>>()).1 > 1e-3);
    }

    #[test]
    fn gw_matches_exact_in_law() {
        let s4 = ClassSpec::from_simples("s4", vec!["2413".parse().unwrap(), "3142".parse().unwrap()]).unwrap();
        let ex = ClassSampler::new(&s4, SamplerConfig::exact(3, 16), 16).unwrap();
        let gw = ClassSampler::new(&s4, SamplerConfig::gw(3), 16).unwrap();
        let (mut a, mut b) = (BTreeMap::new(), BTreeMap::new());
        let (mut r1, mut r2) = (stream_rng(3, 0), stream_rng(3, 1));
        for _ in 0..20_000 {
            *a.entry(ex.sample_permutation(5, &mut r1).unwrap()).or_insert(0u64) += 1;
            *b.entry(gw.sample_permutation(5, &mut r2).unwrap()).or_insert(0u64) += 1;
        }
        assert!(chi_square_two_sample(&a, &b, 10).1 > 1e-3);
    }

    #[test]
    fn large_exact_is_refused() {
        let sep = ClassSpec::separable();
        assert!(matches!(ClassSampler::new(&sep, SamplerConfig::exact(0, 16), 32), Err(Error::Resource(_))));
    }
}
