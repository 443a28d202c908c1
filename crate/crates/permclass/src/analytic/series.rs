//! Counting series `S`, `Q`, `P`, `C` of a substitution-closed class.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::class::ClassSpec;
use crate::error::{invalid, Error, Result};

/// Largest order for which exact big-integer tables are built.
pub const MAX_EXACT_ORDER: usize = 4000;

/// Coefficients of `S`, `Q`, `P = z + Q(P)` and `C = P/(1-P)` up to order `N`.
///
/// Exact tables (index `0..=exact_order`) sit next to float tables that are
/// rescaled by `scale^n` so that large orders stay in range: `p_float[n] = p_n * scale^n`.
#[derive(Clone, Debug)]
pub struct SeriesTable {
    pub order: usize,
    pub exact_order: usize,
    s: Vec<BigUint>,
    q: Vec<BigUint>,
    p: Vec<BigUint>,
    c: Vec<BigUint>,
    pub scale: f64,
    q_float: Vec<f64>,
    p_float: Vec<f64>,
    c_float: Vec<f64>,
}

/// `q_k = [z^k] (z²/(1-z) + S(z/(1-z)))`, i.e. `1 + Σ_a s_a C(k-1, a-1)` for `k >= 2`.
pub fn gadget_count(spec: &ClassSpec, k: usize) -> BigUint {
    if k < 2 {
        return BigUint::zero();
    }
    let mut q = BigUint::one();
    for a in spec.sizes().filter(|&a| a <= k) {
        q += binomial(k - 1, a - 1) * BigUint::from(spec.s(a));
    }
    q
}

/// Float `q_k`, for sampling weights at large `k`.
pub fn gadget_count_f64(spec: &ClassSpec, k: usize) -> f64 {
    if k < 2 {
        return 0.0;
    }
    1.0 + spec.sizes().filter(|&a| a <= k).map(|a| spec.s(a) as f64 * binomial_f64(k - 1, a - 1)).sum::<f64>()
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Arithmetic needed by the coefficient recurrence, shared by exact and float tables.
trait Coeff: Clone + Zero + for<'a> std::ops::AddAssign<&'a Self> {
    fn mul(&self, other: &Self) -> Self;
    fn from_u64(x: u64) -> Self;
}

impl Coeff for BigUint {
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn from_u64(x: u64) -> Self {
        BigUint::from(x)
    }
}

impl Coeff for f64 {
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn from_u64(x: u64) -> Self {
        x as f64
    }
}

/// Degree-by-degree solution of `P = z·p1 + P·C + S(C)` with `C = P/(1-P)`
/// (that is `Q(P) = P²/(1-P) + S(P/(1-P))`). `p1` is the rescaled `z` coefficient.
fn solve<T: Coeff>(spec: &ClassSpec, order: usize, p1: T) -> (Vec<T>, Vec<T>) {
    let sizes: Vec<(usize, T)> = spec.sizes().map(|a| (a, T::from_u64(spec.s(a)))).collect();
    let max_a = sizes.iter().map(|&(a, _)| a).max().unwrap_or(1);
    let mut p = vec![T::zero(); order + 1];
    let mut c = vec![T::zero(); order + 1];
    // pow[j][n] = [z^n] C^(j+1), for j + 1 in 2..=max_a
    let mut pow: Vec<Vec<T>> = vec![vec![T::zero(); order + 1]; max_a.max(1)];
    for n in 1..=order {
        for j in 1..max_a {
            let a = j + 1;
            if n < a {
                continue;
            }
            let mut acc = T::zero();
            for i in 1..=n - j {
                let prev = if j == 1 { &c[n - i] } else { &pow[j - 1][n - i] };
                acc += &c[i].mul(prev);
            }
            pow[j][n] = acc;
        }
        let mut pn = if n == 1 { p1.clone() } else { T::zero() };
        for i in 1..n {
            pn += &p[i].mul(&c[n - i]);
        }
        for (a, s) in &sizes {
            if *a <= n {
                pn += &s.mul(&pow[a - 1][n]);
            }
        }
        let mut cn = pn.clone();
        for i in 1..n {
            cn += &p[i].mul(&c[n - i]);
        }
        p[n] = pn;
        c[n] = cn;
    }
    (p, c)
}

impl SeriesTable {
    /// Exact tables up to `order` plus unscaled floats computed by an independent float recurrence.
    pub fn compute(spec: &ClassSpec, order: usize) -> Result<Self> {
        if order == 0 {
            return invalid("series order must be at least 1");
        }
        if order > spec.exact_up_to() {
            return invalid(format!(
                "class {} is only known up to size {}; cannot count to {order}",
                spec.name,
                spec.exact_up_to()
            ));
        }
        if order > MAX_EXACT_ORDER {
            return Err(Error::Resource(format!(
                "exact tables limited to order {MAX_EXACT_ORDER}; use SeriesTable::scaled"
            )));
        }
        let s = (0..=order).map(|k| BigUint::from(spec.s(k))).collect();
        let q: Vec<BigUint> = (0..=order).map(|k| gadget_count(spec, k)).collect();
        let (p, c) = solve(spec, order, BigUint::one());
        let (p_float, c_float) = solve(spec, order, 1.0f64);
        let q_float = (0..=order).map(|k| gadget_count_f64(spec, k)).collect();
        Ok(SeriesTable { order, exact_order: order, s, q, p, c, scale: 1.0, q_float, p_float, c_float })
    }

    /// Float-only tables rescaled so that `p_n scale^n` stays of order one;
    /// `scale` is chosen from a preliminary ratio estimate.
    pub fn scaled(spec: &ClassSpec, order: usize) -> Result<Self> {
        if order == 0 {
            return invalid("series order must be at least 1");
        }
        if order > spec.exact_up_to() {
            return invalid(format!("class {} is only known up to size {}", spec.name, spec.exact_up_to()));
        }
        let probe = order.min(120);
        let (p0, _) = solve(spec, probe, 1.0f64);
        let scale = if probe >= 2 { p0[probe - 1] / p0[probe] } else { 1.0 };
        let (p_float, c_float) = solve(spec, order, scale);
        let q_float = (0..=order).map(|k| gadget_count_f64(spec, k)).collect();
        Ok(SeriesTable {
            order,
            exact_order: 0,
            s: vec![],
            q: vec![],
            p: vec![],
            c: vec![],
            scale,
            q_float,
            p_float,
            c_float,
        })
    }

    fn exact<'a>(&self, v: &'a [BigUint], n: usize) -> &'a BigUint {
        assert!(n <= self.exact_order, "exact coefficient {n} beyond exact order {}", self.exact_order);
        &v[n]
    }

    pub fn s(&self, n: usize) -> &BigUint {
        self.exact(&self.s, n)
    }

    pub fn q(&self, n: usize) -> &BigUint {
        self.exact(&self.q, n)
    }

    /// Number of ⊕-indecomposable class members of size `n`.
    pub fn p(&self, n: usize) -> &BigUint {
        self.exact(&self.p, n)
    }

    /// Number of class members of size `n`.
    pub fn c(&self, n: usize) -> &BigUint {
        self.exact(&self.c, n)
    }

    pub fn q_f64(&self, n: usize) -> f64 {
        self.q_float[n]
    }

    /// `p_n scale^n`.
    pub fn p_scaled(&self, n: usize) -> f64 {
        self.p_float[n]
    }

    /// `c_n scale^n`.
    pub fn c_scaled(&self, n: usize) -> f64 {
        self.c_float[n]
    }

    /// Unscaled float `p_n` (may overflow for large `n`).
    pub fn p_f64(&self, n: usize) -> f64 {
        self.p_float[n] / self.scale.powi(n as i32)
    }

    pub fn c_f64(&self, n: usize) -> f64 {
        self.c_float[n] / self.scale.powi(n as i32)
    }
}

/// Ratio estimate of the radius of `P` and the value `P(ρ_P)`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RadiusEstimate {
    pub rho: f64,
    /// Difference between the last two extrapolated ratios.
    pub delta: f64,
    /// Estimated exponent `α` in `p_n ≈ K ρ^{-n} n^α`.
    pub exponent: f64,
    pub p_at_rho: f64,
    pub undetermined: bool,
}

/// Ratio method with linear extrapolation in `1/n`; `P(ρ_P)` by partial sum plus
/// a power-law tail correction using the fitted exponent.
pub fn estimate_radius(series: &SeriesTable) -> Result<RadiusEstimate> {
    let n = series.order;
    if n < 8 {
        return invalid("need at least 8 coefficients to estimate the radius");
    }
    let ratio = |k: usize| series.scale * series.p_float[k] / series.p_float[k + 1];
    let extrapolated = |k: usize| k as f64 * ratio(k) - (k - 1) as f64 * ratio(k - 1);
    let last = n - 1;
    let rho = extrapolated(last);
    let delta = (rho - extrapolated(last - 1)).abs();
    // stability over the last stretch of extrapolants
    let window = (last / 4).max(2);
    let spread = (last - window..=last)
        .map(extrapolated)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let undetermined = !(rho > 0.0) || (spread.1 - spread.0) > 1e-3 * rho;
    let exponent = last as f64 * (1.0 - ratio(last) / rho);
    // p_n ρ^n = p_scaled[n] (ρ/scale)^n
    let x = rho / series.scale;
    let mut term = 0.0;
    let mut partial = 0.0;
    for k in 1..=n {
        term = series.p_float[k] * x.powi(k as i32);
        partial += term;
    }
    let tail = if exponent < -1.0 { term * n as f64 / (-exponent - 1.0) } else { f64::INFINITY };
    let p_at_rho = partial + tail;
    Ok(RadiusEstimate { rho, delta, exponent, p_at_rho, undetermined: undetermined || !(p_at_rho < 1.0) })
}
