//! Criticality, `κ`, `t₀`, `σ²` and the Brownian bias parameter `p`.

use serde::Serialize;

use crate::class::ClassSpec;
use crate::error::{Error, Result};

/// Tolerance for deciding `S'(ρ_S) = 2/(1+ρ_S)² - 1` from declared values.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    /// `S'(ρ_S) > 2/(1+ρ_S)² - 1`: critical with exponential moments.
    CriticalGeneric,
    /// Equality with `S''(ρ_S) < ∞`: critical, finite variance.
    CriticalBoundary,
    Subcritical,
    Undetermined,
}

impl Criticality {
    pub fn is_critical(self) -> bool {
        matches!(self, Criticality::CriticalGeneric | Criticality::CriticalBoundary)
    }
}

fn kappa_rhs(x: f64) -> f64 {
    2.0 / ((1.0 + x) * (1.0 + x)) - 1.0
}

/// A finite list is a polynomial `S` and always generic. Truncated lists need
/// declared data about `ρ_S`; the listed part only bounds `S'(ρ_S)` from below.
pub fn criticality_classify(spec: &ClassSpec) -> Criticality {
    if spec.is_complete() {
        return Criticality::CriticalGeneric;
    }
    let Some(rho) = spec.rho_s else {
        return Criticality::Undetermined;
    };
    let rhs = kappa_rhs(rho);
    if let Some(sp) = spec.s_prime_at_rho {
        let gap = sp - rhs;
        return if gap > BOUNDARY_TOL {
            Criticality::CriticalGeneric
        } else if gap < -BOUNDARY_TOL {
            Criticality::Subcritical
        } else if spec.s_second_at_rho.is_some_and(f64::is_finite) {
            Criticality::CriticalBoundary
        } else {
            Criticality::Undetermined
        };
    }
    if spec.s_prime(rho) > rhs {
        Criticality::CriticalGeneric
    } else {
        Criticality::Undetermined
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KappaSolution {
    pub kappa: f64,
    /// `|S'(κ) - (2/(1+κ)² - 1)|`.
    pub residual: f64,
}

/// Unique root in `(0, ρ_S]` of `S'(κ) = 2/(1+κ)² - 1`, by bisection.
pub fn solve_kappa(spec: &ClassSpec) -> Result<KappaSolution> {
    let crit = criticality_classify(spec);
    if !crit.is_critical() {
        return Err(Error::Criticality(format!("class {} is {crit:?}", spec.name)));
    }
    let f = |x: f64| spec.s_prime(x) - kappa_rhs(x);
    if crit == Criticality::CriticalBoundary {
        let rho = spec.rho_s.expect("boundary needs rho_S");
        return Ok(KappaSolution {
            kappa: rho,
            residual: (spec.s_prime_at_rho.unwrap_or(f64::NAN) - kappa_rhs(rho)).abs(),
        });
    }
    // f is increasing on (0, ∞) with f(0) = -1; f(1) = S'(1) + 1/2 > 0
    let hi0 = spec.rho_s.unwrap_or(1.0).min(1.0);
    if !(f(hi0) > 0.0) {
        return Err(Error::Criticality(format!(
            "no sign change on (0, {hi0}] from the listed simples of {}",
            spec.name
        )));
    }
    let (mut lo, mut hi) = (0.0f64, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let kappa = if f(hi).abs() < f(lo).abs() { hi } else { lo };
    let residual = f(kappa).abs();
    if residual >= 1e-12 {
        return Err(Error::Criticality(format!("bisection residual {residual:e} too large")));
    }
    Ok(KappaSolution { kappa, residual })
}

/// `κ`, `t₀`, `a = P(ξ=0)`, `σ²` and `p` in closed form.
#[derive(Clone, Debug, Serialize)]
pub struct LimitParameters {
    pub class: String,
    pub kappa: f64,
    pub kappa_residual: f64,
    pub t0: f64,
    pub a: f64,
    pub sigma2: f64,
    pub p: f64,
    pub criticality: Criticality,
}

impl LimitParameters {
    pub fn compute(spec: &ClassSpec) -> Result<Self> {
        let sol = solve_kappa(spec)?;
        let k = sol.kappa;
        Ok(LimitParameters {
            class: spec.name.clone(),
            kappa: k,
            kappa_residual: sol.residual,
            t0: k / (1.0 + k),
            a: 1.0 - k - spec.s_series(k) * (1.0 + k) / k,
            sigma2: sigma2_at(spec, k),
            p: p_at(spec, k),
            criticality: criticality_classify(spec),
        })
    }
}

/// `σ² = κ(1+κ)³ S''(κ) + 4κ`.
pub fn sigma2_at(spec: &ClassSpec, kappa: f64) -> f64 {
    kappa * (1.0 + kappa).powi(3) * spec.s_second(kappa) + 4.0 * kappa
}

/// `p = (2/σ²)(κ(1+κ)³ Occ₁₂(κ) + κ)`.
pub fn p_at(spec: &ClassSpec, kappa: f64) -> f64 {
    2.0 * (kappa * (1.0 + kappa).powi(3) * spec.occ12(kappa) + kappa) / sigma2_at(spec, kappa)
}

pub fn limit_parameter_p(spec: &ClassSpec) -> Result<f64> {
    Ok(p_at(spec, solve_kappa(spec)?.kappa))
}

/// The three contributions to `p`, by the kind of closest common ancestor of two
/// uniform leaves in the limit tree.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KeyTerms {
    /// `⊛` ancestor at even positive distance from its nearest gadget ancestor: `(2/σ²)κ²(κ+2)`.
    pub star_even: f64,
    /// Gadget ancestor, both leaves in one Plus slot: `(2/σ²)(κ - κ²(κ+2))`.
    pub same_slot: f64,
    /// Gadget ancestor, distinct slots forming a `12`: `(2/σ²)κ(1+κ)³ Occ₁₂(κ)`.
    pub gadget_pattern: f64,
}

impl KeyTerms {
    pub fn compute(spec: &ClassSpec) -> Result<Self> {
        let k = solve_kappa(spec)?.kappa;
        let f = 2.0 / sigma2_at(spec, k);
        Ok(KeyTerms {
            star_even: f * k * k * (k + 2.0),
            same_slot: f * (k - k * k * (k + 2.0)),
            gadget_pattern: f * k * (1.0 + k).powi(3) * spec.occ12(k),
        })
    }

    pub fn total(&self) -> f64 {
        self.star_even + self.same_slot + self.gadget_pattern
    }
}

/// `η = 1 - κ(κ+2)`: probability that a `ξ̂`-vertex carries a gadget.
pub fn gadget_probability_size_biased(kappa: f64) -> f64 {
    1.0 - kappa * (kappa + 2.0)
}

/// `2/(a+1) · (k-a)/(k-1)` as an exact fraction `(num, den)`.
pub fn same_part_probability(k: u64, a: u64) -> (u128, u128) {
    assert!(k >= 2 && (1..=k).contains(&a));
    (2 * (k - a) as u128, ((a + 1) * (k - 1)) as u128)
}

/// Same probability by enumerating every composition of `k` into `a` parts.
pub fn same_part_probability_enumerated(k: u64, a: u64) -> (u128, u128) {
    fn walk(left: u64, parts: u64, acc: u128, total: &mut u128, count: &mut u128) {
        if parts == 1 {
            *total += acc + (left as u128) * (left as u128 - 1);
            *count += 1;
            return;
        }
        for m in 1..=left - (parts - 1) {
            walk(left - m, parts - 1, acc + (m as u128) * (m as u128 - 1), total, count);
        }
    }
    let (mut total, mut count) = (0u128, 0u128);
    walk(k, a, 0, &mut total, &mut count);
    (total, count * (k as u128) * (k as u128 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Permutation;

    fn s4() -> ClassSpec {
        ClassSpec::from_simples("s4", vec!["2413".parse().unwrap(), "3142".parse().unwrap()]).unwrap()
    }

    /// Independent oracle: bisection on `8κ³ - 2/(1+κ)² + 1`.
    fn s4_kappa_oracle() -> f64 {
        let g = |x: f64| 8.0 * x * x * x - 2.0 / ((1.0 + x) * (1.0 + x)) + 1.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-15 {
            let m = (lo + hi) / 2.0;
            if g(m) > 0.0 {
                hi = m
            } else {
                lo = m
            }
        }
        (lo + hi) / 2.0
    }

    #[test]
    fn separable_closed_forms() {
        let lp = LimitParameters::compute(&ClassSpec::separable()).unwrap();
        let r2 = 2f64.sqrt();
        assert!((lp.kappa - (r2 - 1.0)).abs() < 1e-12);
        assert!((lp.t0 - (1.0 - 1.0 / r2)).abs() < 1e-12);
        assert!((lp.a - (2.0 - r2)).abs() < 1e-12);
        assert!((lp.sigma2 - 4.0 * (r2 - 1.0)).abs() < 1e-12);
        assert_eq!(lp.p, 0.5);
        assert_eq!(lp.criticality, Criticality::CriticalGeneric);
    }

    #[test]
    fn s4_against_oracle() {
        let spec = s4();
        let k = s4_kappa_oracle();
        let lp = LimitParameters::compute(&spec).unwrap();
        assert!((lp.kappa - k).abs() < 1e-12);
        assert!(lp.kappa_residual < 1e-12);
        assert!((lp.t0 - lp.kappa / (1.0 + lp.kappa)).abs() < 1e-15);
        let sigma2 = k * (1.0 + k).powi(3) * 24.0 * k * k + 4.0 * k;
        let p = 2.0 / sigma2 * (k * (1.0 + k).powi(3) * 6.0 * k * k + k);
        assert!((lp.p - p).abs() < 1e-10);
        // the class is closed under complement, so p is one half
        assert!((lp.p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_class_has_biased_p() {
        let spec = ClassSpec::from_simples(
            "s5",
            vec!["2413".parse().unwrap(), "3142".parse().unwrap(), "24153".parse().unwrap()],
        )
        .unwrap();
        let p = limit_parameter_p(&spec).unwrap();
        assert!(p > 0.5 && p < 1.0, "{p}");
    }

    #[test]
    fn key_terms_sum_to_p() {
        for spec in [ClassSpec::separable(), s4()] {
            let terms = KeyTerms::compute(&spec).unwrap();
            assert!((terms.total() - limit_parameter_p(&spec).unwrap()).abs() < 1e-14);
            assert!(terms.same_slot >= -1e-15);
        }
        let sep = KeyTerms::compute(&ClassSpec::separable()).unwrap();
        assert!((sep.star_even - 0.5).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        assert_eq!(criticality_classify(&ClassSpec::separable()), Criticality::CriticalGeneric);
        assert_eq!(criticality_classify(&s4()), Criticality::CriticalGeneric);
        let mut t = ClassSpec::from_json_str(r#"{"name":"t","simples":{"4":["2413","3142"]},"truncation":6}"#).unwrap();
        assert_eq!(criticality_classify(&t), Criticality::Undetermined);
        assert!(solve_kappa(&t).is_err());
        t.rho_s = Some(0.5);
        assert_eq!(criticality_classify(&t), Criticality::CriticalGeneric);
        t.rho_s = Some(0.1);
        assert_eq!(criticality_classify(&t), Criticality::Undetermined);
        t.s_prime_at_rho = Some(kappa_rhs(0.1) - 0.01);
        assert_eq!(criticality_classify(&t), Criticality::Subcritical);
        t.s_prime_at_rho = Some(kappa_rhs(0.1));
        assert_eq!(criticality_classify(&t), Criticality::Undetermined);
        t.s_second_at_rho = Some(3.0);
        assert_eq!(criticality_classify(&t), Criticality::CriticalBoundary);
        assert_eq!(solve_kappa(&t).unwrap().kappa, 0.1);
    }

    #[test]
    fn composition_formula_exact() {
        for k in 2..=12u64 {
            for a in 1..=k {
                let (n1, d1) = same_part_probability(k, a);
                let (n2, d2) = same_part_probability_enumerated(k, a);
                assert_eq!(n1 * d2, n2 * d1, "k={k} a={a}");
            }
        }
    }

    #[test]
    fn socc_of_size_four_simples() {
        let twelve = Permutation::identity(2);
        for a in ["2413", "3142"] {
            let a: Permutation = a.parse().unwrap();
            assert_eq!(a.count_occurrences(&twelve).unwrap(), 3);
        }
    }
}
