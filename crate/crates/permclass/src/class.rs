//! Substitution-closed classes, given by their simple permutations.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::perm::Permutation;

/// A substitution-closed class `C`, described by the set `S` of simple
/// permutations it contains.
///
/// Without `truncation` the list is the complete (finite) set `S`. With
/// `truncation: K` the list is complete only up to size `K`; `S` may be
/// infinite beyond it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: String,
    #[serde(default)]
    simples: BTreeMap<usize, Vec<Permutation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Declared radius of convergence of `S(z)` (truncated families only).
    #[serde(rename = "rho_S", default, skip_serializing_if = "Option::is_none")]
    pub rho_s: Option<f64>,
    /// Declared `S'(rho_S)` of the full family, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_prime_at_rho: Option<f64>,
    /// Declared `S''(rho_S)` of the full family, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_second_at_rho: Option<f64>,
    #[serde(skip)]
    lookup: HashSet<Permutation>,
}

impl ClassSpec {
    /// Separable permutations: `S = ∅`.
    pub fn separable() -> Self {
        Self::from_simples("separable", Vec::new()).expect("empty list is valid")
    }

    /// Complete finite list of simple permutations.
    pub fn from_simples(name: &str, simples: Vec<Permutation>) -> Result<Self> {
        let mut by_size: BTreeMap<usize, Vec<Permutation>> = BTreeMap::new();
        for alpha in simples {
            by_size.entry(alpha.len()).or_default().push(alpha);
        }
        let mut spec = ClassSpec {
            name: name.to_string(),
            simples: by_size,
            truncation: None,
            rho_s: None,
            s_prime_at_rho: None,
            s_second_at_rho: None,
            lookup: HashSet::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut spec: ClassSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// `"separable"` or a path to a JSON class file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if name_or_path == "separable" {
            return Ok(Self::separable());
        }
        let text = std::fs::read_to_string(Path::new(name_or_path))?;
        Self::from_json_str(&text)
    }

    fn validate(&mut self) -> Result<()> {
        self.lookup.clear();
        for (&k, list) in &mut self.simples {
            list.sort();
            for alpha in list.iter() {
                if alpha.len() != k {
                    return invalid(format!("{alpha} listed under size {k}"));
                }
                if k < 4 || !alpha.is_simple() {
                    return invalid(format!("{alpha} is not a simple permutation"));
                }
                if !self.lookup.insert(alpha.clone()) {
                    return invalid(format!("{alpha} listed twice"));
                }
            }
            if let Some(kmax) = self.truncation {
                if k > kmax {
                    return invalid(format!("simple of size {k} beyond truncation {kmax}"));
                }
            }
        }
        self.simples.retain(|_, l| !l.is_empty());
        if let Some(rho) = self.rho_s {
            if !(rho > 0.0) {
                return invalid("rho_S must be positive");
            }
        }
        Ok(())
    }

    pub fn contains_simple(&self, alpha: &Permutation) -> bool {
        self.lookup.contains(alpha)
    }

    /// Simple permutations of size `k`.
    pub fn simples_of_size(&self, k: usize) -> &[Permutation] {
        self.simples.get(&k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn simples(&self) -> impl Iterator<Item = &Permutation> {
        self.simples.values().flatten()
    }

    /// Sizes `a` with `s_a > 0`.
    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.simples.keys().copied()
    }

    /// `s_k`.
    pub fn s(&self, k: usize) -> u64 {
        self.simples_of_size(k).len() as u64
    }

    /// `Σ_{|α| = k} socc(12, α)`.
    pub fn socc12(&self, k: usize) -> u64 {
        let twelve = Permutation::identity(2);
        self.simples_of_size(k).iter().map(|a| a.count_occurrences_forced(&twelve)).sum()
    }

    pub fn max_size(&self) -> usize {
        self.simples.keys().next_back().copied().unwrap_or(0)
    }

    /// The list is the whole of `S`.
    pub fn is_complete(&self) -> bool {
        self.truncation.is_none()
    }

    /// Largest size up to which counts derived from the list are exact.
    pub fn exact_up_to(&self) -> usize {
        self.truncation.unwrap_or(usize::MAX)
    }

    /// `S(z)` from the listed simples.
    pub fn s_series(&self, z: f64) -> f64 {
        self.sizes().map(|k| self.s(k) as f64 * z.powi(k as i32)).sum()
    }

    /// `S'(z)`.
    pub fn s_prime(&self, z: f64) -> f64 {
        self.sizes().map(|k| (k * self.s(k) as usize) as f64 * z.powi(k as i32 - 1)).sum()
    }

    /// `S''(z)`.
    pub fn s_second(&self, z: f64) -> f64 {
        self.sizes().map(|k| (k * (k - 1)) as f64 * self.s(k) as f64 * z.powi(k as i32 - 2)).sum()
    }

    /// `Occ₁₂(z) = Σ_α socc(12, α) z^{|α| - 2}`.
    pub fn occ12(&self, z: f64) -> f64 {
        self.sizes().map(|k| self.socc12(k) as f64 * z.powi(k as i32 - 2)).sum()
    }

    /// Simple patterns of listed simples that are themselves missing from the
    /// list; a nonempty answer means the list does not describe a class.
    pub fn missing_simple_patterns(&self) -> Vec<Permutation> {
        let mut missing = HashSet::new();
        for alpha in self.simples() {
            let n = alpha.len();
            for mask in 0u32..(1 << n) {
                let k = mask.count_ones() as usize;
                if k < 4 || k == n || k > self.exact_up_to() {
                    continue;
                }
                let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
                let pat = alpha.pattern_at(&idx).expect("valid indices");
                if pat.is_simple() && !self.contains_simple(&pat) {
                    missing.insert(pat);
                }
            }
        }
        let mut out: Vec<_> = missing.into_iter().collect();
        out.sort();
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(Error::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn parse_json_spec() {
        let spec = ClassSpec::from_json_str(r#"{"name":"x","simples":{"4":["2413","3142"]}}"#).unwrap();
        assert_eq!(spec.s(4), 2);
        assert_eq!(spec.socc12(4), 6);
        assert!(spec.contains_simple(&p("2413")));
        assert!(!spec.contains_simple(&p("24153")));
        assert!(spec.is_complete());
        assert!(spec.missing_simple_patterns().is_empty());
        assert!((spec.occ12(0.5) - 6.0 * 0.25).abs() < 1e-15);
        assert!((spec.s_prime(0.5) - 8.0 * 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_simple_or_misfiled() {
        assert!(ClassSpec::from_json_str(r#"{"name":"x","simples":{"4":["1234"]}}"#).is_err());
        assert!(ClassSpec::from_json_str(r#"{"name":"x","simples":{"5":["2413"]}}"#).is_err());
        assert!(ClassSpec::from_json_str(r#"{"name":"x","simples":{"4":["2413","2413"]}}"#).is_err());
        assert!(ClassSpec::from_json_str(r#"{"name":"x","simples":{"5":["24153"]},"truncation":4}"#).is_err());
    }

    #[test]
    fn closure_check() {
        let spec = ClassSpec::from_simples("y", vec![p("24153")]).unwrap();
        assert_eq!(spec.missing_simple_patterns(), vec![p("2413"), p("3142")]);
    }

    #[test]
    fn separable_is_empty() {
        let s = ClassSpec::separable();
        assert_eq!(s.max_size(), 0);
        assert_eq!(s.s_series(0.3), 0.0);
        assert_eq!(s.occ12(0.3), 0.0);
    }
}
