use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use super::{par_samples, ExperimentReport, Tolerances};
use crate::analytic::{brownian_marginal, limit_parameter_p, same_part_probability, same_part_probability_enumerated};
use crate::analytic::{KeyTerms, OffspringModel};
use crate::class::ClassSpec;
use crate::decomposition::{class_membership, PackedNode};
use crate::error::{invalid, Error, Result};
use crate::perm::Permutation;
use crate::sampler::{
    sample_conditioned_shape, sample_limit_skeleton_tree, sample_limit_window, ClassSampler, LeafConditioned,
    LimitTreeOptions, SamplerConfig, TreeMethod,
};
use crate::skeleton::{
    as_proper_tree, essential_parities, extract_skeleton, proper_k_trees, proper_tree_key, realize_signed,
    realize_window, reduced_tree, Omega,
};
use crate::stats::{
    chi_cdf, chi_square_gof, chi_square_two_sample, ks_statistic, mean_se, proportion, total_variation, MeanSe,
};

/// Random index subsets per permutation for patterns of size three or more.
const SUBSETS: usize = 2000;

/// Compact name of a pattern for report keys.
fn tag(pi: &Permutation) -> String {
    pi.to_compact().unwrap_or_else(|| pi.to_spaced())
}

fn is_separable(spec: &ClassSpec) -> bool {
    spec.simples().next().is_none()
}

/// Frequencies of the size-`k` patterns of `nu`: exact for `k ≤ 2`, otherwise
/// over `subsets` uniform index sets.
fn pattern_frequencies<R: Rng + ?Sized>(
    nu: &Permutation,
    k: usize,
    subsets: usize,
    rng: &mut R,
) -> BTreeMap<Permutation, f64> {
    let n = nu.len();
    let mut out = BTreeMap::new();
    if k > n || k == 0 {
        return out;
    }
    if k == 1 {
        out.insert(Permutation::identity(1), 1.0);
        return out;
    }
    if k == 2 {
        let pairs = (n * (n - 1) / 2) as f64;
        let up = nu.non_inversion_count() as f64 / pairs;
        out.insert(Permutation::identity(2), up);
        out.insert(Permutation::decreasing(2), 1.0 - up);
        return out;
    }
    let mut hits: BTreeMap<Permutation, usize> = BTreeMap::new();
    for _ in 0..subsets {
        let mut idx: Vec<usize> = index::sample(rng, n, k).into_iter().map(|i| i + 1).collect();
        idx.sort_unstable();
        *hits.entry(nu.pattern_at(&idx).expect("valid indices")).or_insert(0) += 1;
    }
    hits.into_iter().map(|(pi, c)| (pi, c as f64 / subsets as f64)).collect()
}

/// Density of `pi` in `nu` (exact for `|π| ≤ 2`, Monte Carlo over index subsets beyond).
pub fn pattern_density_of<R: Rng + ?Sized>(nu: &Permutation, pi: &Permutation, subsets: usize, rng: &mut R) -> f64 {
    pattern_frequencies(nu, pi.len(), subsets, rng).get(pi).copied().unwrap_or(0.0)
}

/// Mean density of `pi` in uniform members of size `n`.
pub fn estimate_pattern_density(
    sampler: &ClassSampler,
    n: usize,
    samples: usize,
    pi: &Permutation,
    seed: u64,
) -> Result<MeanSe> {
    if pi.len() > 4 {
        return invalid("pattern densities are estimated for |π| ≤ 4");
    }
    let xs = par_samples(seed, samples, |rng, _| {
        let nu = sampler.sample_permutation(n, rng)?;
        Ok(pattern_density_of(&nu, pi, SUBSETS, rng))
    })?;
    Ok(mean_se(&xs))
}

/// Mean densities of every pattern of size `k`.
pub fn pattern_profile(
    sampler: &ClassSampler,
    n: usize,
    samples: usize,
    k: usize,
    seed: u64,
) -> Result<BTreeMap<Permutation, MeanSe>> {
    let per = par_samples(seed, samples, |rng, _| {
        let nu = sampler.sample_permutation(n, rng)?;
        Ok(pattern_frequencies(&nu, k, SUBSETS, rng))
    })?;
    Ok(Permutation::all(k)
        .map(|pi| {
            let xs: Vec<f64> = per.iter().map(|f| f.get(&pi).copied().unwrap_or(0.0)).collect();
            (pi, mean_se(&xs))
        })
        .collect())
}

/// 12-density against `p` and size-3 densities against the Brownian marginal.
pub fn pattern_report(
    sampler: &ClassSampler,
    n: usize,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let spec = sampler.spec();
    let p = limit_parameter_p(spec)?;
    let mut r = ExperimentReport::new("pattern", &spec.name, Some(n), samples, seed);
    r.param("p", p);
    let twelve = pattern_profile(sampler, n, samples, 2, seed)?;
    r.estimate("density_12", twelve[&Permutation::identity(2)], Some(p), tol.se_band);
    let marginal = brownian_marginal(3, p)?;
    let three = pattern_profile(sampler, n, samples, 3, seed ^ 0x3)?;
    for (pi, est) in three {
        let target = marginal.get(&pi).copied().unwrap_or(0.0);
        r.estimate(&format!("density_{}", tag(&pi)), est, Some(target), tol.se_band);
    }
    Ok(r)
}

pub fn consecutive_density(nu: &Permutation, pi: &Permutation) -> f64 {
    nu.count_consecutive(pi) as f64 / nu.len() as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsecutiveProfile {
    pub pattern: Permutation,
    pub n: usize,
    pub densities: Vec<f64>,
    pub summary: MeanSe,
}

/// Per-sample `c-occ(π, ν)/n` for uniform members of size `n`.
pub fn consecutive_profile(
    sampler: &ClassSampler,
    n: usize,
    samples: usize,
    pi: &Permutation,
    seed: u64,
) -> Result<ConsecutiveProfile> {
    let densities =
        par_samples(seed, samples, |rng, _| Ok(consecutive_density(&sampler.sample_permutation(n, rng)?, pi)))?;
    let summary = mean_se(&densities);
    Ok(ConsecutiveProfile { pattern: pi.clone(), n, densities, summary })
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaEstimate {
    pub pattern: Permutation,
    pub estimate: MeanSe,
    /// Realizations redrawn with a taller spine.
    pub deepened: u64,
}

/// `γ_π`: probability that the limit rooted permutation reads `π` on `[0, |π|-1]`.
pub fn estimate_gamma(
    spec: &ClassSpec,
    model: &OffspringModel,
    pi: &Permutation,
    max_height: usize,
    samples: usize,
    seed: u64,
) -> Result<GammaEstimate> {
    let windows = limit_windows(spec, model, pi.len(), max_height, samples, seed)?;
    let hits: u64 = windows.iter().filter(|(w, _)| w == pi).count() as u64;
    Ok(GammaEstimate {
        pattern: pi.clone(),
        estimate: proportion(hits, samples as u64),
        deepened: windows.iter().map(|(_, d)| d).sum(),
    })
}

/// Window patterns on `[0, k-1]` of independent limit realizations.
fn limit_windows(
    spec: &ClassSpec,
    model: &OffspringModel,
    k: usize,
    max_height: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<(Permutation, u64)>> {
    if !model.criticality.is_critical() {
        return Err(Error::Criticality("local limits are simulated for critical classes".into()));
    }
    if k == 0 {
        return invalid("empty pattern");
    }
    par_samples(seed, samples, |rng, _| {
        let mut height = max_height;
        for deepened in 0..4u64 {
            match sample_limit_window(model, spec, 0, k - 1, height, rng) {
                Ok(pt) => {
                    let rp = if is_separable(spec) {
                        realize_signed(&pt, rng.gen(), 0, k - 1)?
                    } else {
                        realize_window(&pt, spec, 0, k - 1)?
                    };
                    return Ok((rp.perm, deepened));
                }
                Err(Error::InsufficientRealization(_)) => height *= 4,
                Err(e) => return Err(e),
            }
        }
        Err(Error::RetryLimit { attempts: 4, detail: "window never certified".into() })
    })
}

/// All `γ_π` with `|π| = k`; they sum to one, and the fair sign makes `γ_π = γ_{π^c}`
/// for the separable class.
pub fn gamma_report(
    spec: &ClassSpec,
    model: &OffspringModel,
    k: usize,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let windows = limit_windows(spec, model, k, 10_000, samples, seed)?;
    let mut r = ExperimentReport::new("gamma", &spec.name, None, samples, seed);
    r.param("k", k).param("deepened", windows.iter().map(|(_, d)| d).sum::<u64>());
    let mut total = 0.0;
    let mut est: BTreeMap<Permutation, MeanSe> = BTreeMap::new();
    for pi in Permutation::all(k) {
        let hits = windows.iter().filter(|(w, _)| *w == pi).count() as u64;
        let e = proportion(hits, samples as u64);
        total += e.mean;
        r.estimate(&format!("gamma_{}", tag(&pi)), e, None, tol.se_band);
        est.insert(pi, e);
    }
    r.test("gamma_sum", total, None, "sum = 1".into(), samples, (total - 1.0).abs() < 1e-9);
    if is_separable(spec) {
        for (pi, e) in &est {
            let c = pi.complement();
            if *pi < c {
                let diff = MeanSe {
                    mean: e.mean - est[&c].mean,
                    se: (e.se.powi(2) + est[&c].se.powi(2)).sqrt(),
                    sd: 0.0,
                    count: samples,
                };
                r.estimate(&format!("gamma_{}-gamma_{}", tag(pi), tag(&c)), diff, Some(0.0), tol.se_band);
            }
        }
    }
    Ok(r)
}

/// Concentration of `c-occ(π)/n` (SD shrinking from `n_small` to `n_large`) and
/// agreement of the finite-size mean with `γ_π` from the limit object.
#[allow(clippy::too_many_arguments)]
pub fn concentration_report(
    sampler: &ClassSampler,
    model: &OffspringModel,
    pi: &Permutation,
    n_small: usize,
    n_large: usize,
    samples: usize,
    gamma_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let spec = sampler.spec();
    let small = consecutive_profile(sampler, n_small, samples, pi, seed)?;
    let large = consecutive_profile(sampler, n_large, samples, pi, seed ^ 0x5eed)?;
    let gamma = estimate_gamma(spec, model, pi, 10_000, gamma_samples, seed ^ 0x9a)?;
    let mut r = ExperimentReport::new("consecutive", &spec.name, Some(n_large), samples, seed);
    r.param("pattern", pi).param("n_small", n_small).param("gamma_deepened", gamma.deepened);
    r.estimate(&format!("cocc_{}_n{n_small}", tag(pi)), small.summary, None, tol.se_band);
    r.estimate(&format!("cocc_{}_n{n_large}", tag(pi)), large.summary, None, tol.se_band);
    r.estimate(&format!("gamma_{}", tag(pi)), gamma.estimate, None, tol.se_band);
    let ratio = small.summary.sd / large.summary.sd;
    r.test("sd_ratio", ratio, None, format!("ratio >= {}", tol.sd_ratio_min), samples, ratio >= tol.sd_ratio_min);
    let diff = MeanSe {
        mean: large.summary.mean - gamma.estimate.mean,
        se: (large.summary.se.powi(2) + gamma.estimate.se.powi(2)).sqrt(),
        sd: 0.0,
        count: samples,
    };
    r.estimate("finite_minus_gamma", diff, Some(0.0), tol.se_band);
    Ok(r)
}

#[derive(Clone, Debug)]
struct SkeletonSample {
    key: Option<String>,
    p_g: f64,
    label_sum: f64,
    span: f64,
    parities: Option<Vec<bool>>,
    genealogy: Option<String>,
}

/// Skeletons of uniform packed trees with `n` leaves and `k` uniform marked leaves
/// against the limit tree: shape law `p_G`, label-sum law `χ_{2k}` after rescaling
/// by `c_Ω σ n^{-1/2}`, fair height parities and uniform genealogies.
#[allow(clippy::too_many_arguments)]
pub fn skeleton_experiment(
    spec: &ClassSpec,
    model: &OffspringModel,
    n: usize,
    k: usize,
    t: usize,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    if k == 0 {
        return invalid("at least one mark");
    }
    let omega = Omega::leaves();
    let lc = LeafConditioned::from_model(spec, model, n)?;
    let cfg = SamplerConfig::default();
    let method = if n <= cfg.rejection_max_n { TreeMethod::Rejection } else { TreeMethod::CycleLemma };
    let scale = omega.probability(model).sqrt() * model.sigma2.sqrt() / (n as f64).sqrt();

    let runs = par_samples(seed, samples, |rng, _| {
        let shape = sample_conditioned_shape(&lc, method, &cfg, rng)?;
        let leaves = shape.leaves();
        let marks: Vec<usize> = (0..k).map(|_| leaves[rng.gen_range(0..leaves.len())]).collect();
        let view = extract_skeleton(&shape, &marks, t, scale);
        let genealogy = as_proper_tree(&reduced_tree(&shape, &marks)).map(|g| proper_tree_key(&g));
        Ok(SkeletonSample {
            key: view.generic.then(|| view.shape_key()),
            p_g: view.shape_probability(model, &omega),
            label_sum: view.label_sum(),
            span: spanned_length(&shape, &marks) as f64 * scale,
            parities: view.generic.then(|| essential_parities(&view)),
            genealogy,
        })
    })?;

    let mut r = ExperimentReport::new("skeleton", &spec.name, Some(n), samples, seed);
    r.param("k", k).param("t", t).param("scale", scale).param("omega", &omega);

    // (i) shape frequencies of the likely shapes
    let mut counts: BTreeMap<&str, (u64, f64)> = BTreeMap::new();
    for s in &runs {
        if let Some(key) = &s.key {
            let e = counts.entry(key.as_str()).or_insert((0, s.p_g));
            e.0 += 1;
        }
    }
    let frequent: Vec<(u64, f64)> =
        counts.values().copied().filter(|&(_, p)| p * samples as f64 >= tol.min_expected).collect();
    let generic = runs.iter().filter(|s| s.key.is_some()).count();
    r.estimate("generic_fraction", proportion(generic as u64, samples as u64), None, tol.se_band);
    r.param("frequent_shapes", frequent.len());
    if !frequent.is_empty() {
        let mut obs: Vec<u64> = frequent.iter().map(|c| c.0).collect();
        let mut probs: Vec<f64> = frequent.iter().map(|c| c.1).collect();
        let rest_p = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        obs.push(samples as u64 - obs.iter().sum::<u64>());
        probs.push(rest_p);
        let (stat, p) = chi_square_gof(&obs, &probs);
        r.test("shape_law", stat, Some(p), format!("p > {}", tol.chi_p_min), samples, p > tol.chi_p_min);
    }

    // (ii) rescaled label sums. Each contracted path of length L carries L - 2t - 1
    // deleted vertices, which biases the sum by O(n^{-1/2}); the test uses the
    // rescaled length of the spanned subtree, which has the same limit law.
    let spans: Vec<f64> = runs.iter().map(|s| s.span).collect();
    let d = ks_statistic(&spans, |x| chi_cdf(x, 2 * k));
    r.test("label_sum_ks", d, None, format!("D < {}", tol.ks_max), samples, d < tol.ks_max);
    r.estimate("span_mean", mean_se(&spans), None, tol.se_band);
    let sums: Vec<f64> = runs.iter().map(|s| s.label_sum).collect();
    r.param("raw_label_sum_ks", ks_statistic(&sums, |x| chi_cdf(x, 2 * k)));
    r.estimate("label_sum_mean", mean_se(&sums), None, tol.se_band);

    // (iii) height parities of the non-root essential vertices
    let parities: Vec<&Vec<bool>> = runs.iter().filter_map(|s| s.parities.as_ref()).collect();
    for j in 0..2 * k - 1 {
        let odd = parities.iter().filter(|p| p[j]).count() as u64;
        r.estimate(&format!("parity_odd_{j}"), proportion(odd, parities.len() as u64), Some(0.5), tol.se_band);
    }

    // genealogies: uniform over proper k-trees
    if k >= 2 {
        let proper: Vec<&String> = runs.iter().filter_map(|s| s.genealogy.as_ref()).collect();
        let all = proper_k_trees(k);
        let target = 1.0 / all.len() as f64;
        for g in all.iter().map(proper_tree_key) {
            let hits = proper.iter().filter(|&&x| *x == g).count() as u64;
            r.estimate(&format!("genealogy_{g}"), proportion(hits, proper.len() as u64), Some(target), tol.se_band);
        }
    }
    Ok(r)
}

/// Edges of the subtree spanned by the root and `marks`.
fn spanned_length<D>(tree: &crate::tree::PlaneTree<D>, marks: &[usize]) -> usize {
    let mut seen = std::collections::HashSet::new();
    for &m in marks {
        let mut v = m;
        while seen.insert(v) {
            match tree.parent(v) {
                Some(p) => v = p,
                None => break,
            }
        }
    }
    seen.len() - 1
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GiantSample {
    pub left: usize,
    pub right: usize,
    pub deficit: usize,
}

/// Components left and right of the largest ⊕-component, and its size deficit.
pub fn giant_samples(sampler: &ClassSampler, n: usize, samples: usize, seed: u64) -> Result<Vec<GiantSample>> {
    par_samples(seed, samples, |rng, _| {
        let sizes = sampler.sample_composition(n, rng)?;
        let (i, &big) = sizes.iter().enumerate().max_by_key(|&(i, &s)| (s, std::cmp::Reverse(i))).expect("nonempty");
        Ok(GiantSample { left: i, right: sizes.len() - 1 - i, deficit: n - big })
    })
}

/// Side-component counts against the geometric law `P(G = k) = P(ρ)^k (1 - P(ρ))`.
pub fn giant_component_stats(
    sampler: &ClassSampler,
    n: usize,
    samples: usize,
    seed: u64,
    p_rho: f64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let runs = giant_samples(sampler, n, samples, seed)?;
    let mut r = ExperimentReport::new("giant", &sampler.spec().name, Some(n), samples, seed);
    r.param("p_rho", p_rho);
    let geo: Vec<f64> = (0..=4).map(|k| p_rho.powi(k) * (1.0 - p_rho)).collect();
    let mut hist = [BTreeMap::new(), BTreeMap::new()];
    for (side, h) in hist.iter_mut().enumerate() {
        let counts: Vec<usize> = runs.iter().map(|g| if side == 0 { g.left } else { g.right }).collect();
        for &c in &counts {
            *h.entry(c).or_insert(0u64) += 1;
        }
        let name = if side == 0 { "left" } else { "right" };
        let emp: Vec<f64> = (0..=4).map(|k| h.get(&k).copied().unwrap_or(0) as f64 / samples as f64).collect();
        let tv = total_variation(&emp, &geo);
        r.test(&format!("{name}_tv_0to4"), tv, None, format!("TV < {}", tol.tv_max), samples, tv < tol.tv_max);
        let zeros = h.get(&0).copied().unwrap_or(0);
        r.estimate(&format!("{name}_p0"), proportion(zeros, samples as u64), Some(1.0 - p_rho), tol.se_band);
        r.estimate(
            &format!("{name}_mean"),
            mean_se(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>()),
            Some(p_rho / (1.0 - p_rho)),
            tol.se_band,
        );
    }
    let (stat, p) = chi_square_two_sample(&hist[0], &hist[1], 10);
    r.test("left_right_agree", stat, Some(p), format!("p > {}", tol.chi_p_min), samples, p > tol.chi_p_min);
    let mut deficits: Vec<usize> = runs.iter().map(|g| g.deficit).collect();
    deficits.sort_unstable();
    r.param("deficit_median", deficits[deficits.len() / 2]);
    r.estimate("deficit_mean", mean_se(&deficits.iter().map(|&d| d as f64).collect::<Vec<_>>()), None, tol.se_band);
    Ok(r)
}

/// The giant component has size `n - O_p(1)`: deficit medians at two sizes agree within one.
pub fn deficit_stability(
    sampler: &ClassSampler,
    n_small: usize,
    n_large: usize,
    samples: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let median = |n: usize, seed: u64| -> Result<usize> {
        let mut d: Vec<usize> = giant_samples(sampler, n, samples, seed)?.iter().map(|g| g.deficit).collect();
        d.sort_unstable();
        Ok(d[d.len() / 2])
    };
    let (a, b) = (median(n_small, seed)?, median(n_large, seed ^ 0xd)?);
    let mut r = ExperimentReport::new("giant_deficit", &sampler.spec().name, Some(n_large), samples, seed);
    r.param("n_small", n_small).param("median_small", a).param("median_large", b);
    r.test("median_shift", a.abs_diff(b) as f64, None, "|shift| <= 1".into(), samples, a.abs_diff(b) <= 1);
    Ok(r)
}

/// On limit trees with two marks: the closest common ancestor is `⊛` at even
/// positive distance from its nearest gadget ancestor with probability
/// `(2/σ²)κ²(κ+2)`.
pub fn ancestor_parity_check(
    spec: &ClassSpec,
    model: &OffspringModel,
    t: usize,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let omega = Omega::leaves();
    let opts = LimitTreeOptions { graft_cap: None };
    let outcomes = par_samples(seed, samples, |rng, _| {
        let lt = sample_limit_skeleton_tree(2, t, model, spec, &omega, &opts, rng)?;
        let u = lt.tree.lca(lt.marks[0], lt.marks[1]);
        let star = matches!(lt.tree.dec(u), Some(PackedNode::Star(_)));
        Ok(match lt.tree.gadget_ancestor(u) {
            Some((_, d)) => (star && d % 2 == 0, false),
            None => (false, star),
        })
    })?;
    let hits = outcomes.iter().filter(|o| o.0).count() as u64;
    let unresolved = outcomes.iter().filter(|o| o.1).count();
    let target = KeyTerms::compute(spec)?.star_even;
    let mut r = ExperimentReport::new("ancestor_parity", &spec.name, None, samples, seed);
    r.param("t", t).param("unresolved", unresolved);
    r.estimate("star_even_probability", proportion(hits, samples as u64), Some(target), tol.se_band);
    Ok(r)
}

/// Same-part probability of two uniform elements of a uniform composition of `k`
/// into `a` parts, closed form against enumeration for `k ≤ kmax`.
pub fn composition_check(kmax: u64) -> ExperimentReport {
    let mut r = ExperimentReport::new("composition", "-", None, 0, 0);
    let mut failures = 0;
    let mut cases = 0;
    for k in 2..=kmax {
        for a in 1..=k {
            let (x, y) = same_part_probability(k, a);
            let (u, v) = same_part_probability_enumerated(k, a);
            cases += 1;
            failures += (x * v != u * y) as usize;
        }
    }
    r.param("kmax", kmax);
    r.test("exact_mismatches", failures as f64, None, "0 mismatches".into(), cases, failures == 0);
    r
}

fn members(spec: &ClassSpec, n: usize) -> Vec<Permutation> {
    Permutation::all(n).filter(|nu| class_membership(nu, spec)).collect()
}

/// Exact sampler at size `n` against the uniform law on all members.
pub fn exact_uniformity(
    spec: &ClassSpec,
    n: usize,
    draws: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let sampler = ClassSampler::new(spec, SamplerConfig::exact(seed, n.max(2)), n)?;
    let all = members(spec, n);
    let drawn = par_samples(seed, draws, |rng, _| sampler.sample_permutation(n, rng))?;
    let mut counts: BTreeMap<&Permutation, u64> = all.iter().map(|p| (p, 0)).collect();
    let mut outside = 0;
    for nu in &drawn {
        match counts.get_mut(nu) {
            Some(c) => *c += 1,
            None => outside += 1,
        }
    }
    let obs: Vec<u64> = counts.values().copied().collect();
    let (stat, p) = chi_square_gof(&obs, &vec![1.0 / all.len() as f64; all.len()]);
    let mut r = ExperimentReport::new("uniformity", &spec.name, Some(n), draws, seed);
    r.param("members", all.len());
    r.test("outside_class", outside as f64, None, "0 draws".into(), draws, outside == 0);
    r.test("uniform_chi_square", stat, Some(p), format!("p > {}", tol.chi_p_min), draws, p > tol.chi_p_min);
    Ok(r)
}

/// Galton–Watson and exact samplers at size `n` agree on forest shapes.
pub fn gw_exact_agreement(
    spec: &ClassSpec,
    n: usize,
    draws: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let exact = ClassSampler::new(spec, SamplerConfig::exact(seed, n.max(2)), n)?;
    let gw = ClassSampler::new(spec, SamplerConfig::gw(seed), n)?;
    let key = |f: &crate::decomposition::DecoratedForest| {
        f.trees().iter().map(|t| format!("{:?}", t.degree_sequence())).collect::<Vec<_>>().join("|")
    };
    let tally = |s: &ClassSampler, stream: u64| -> Result<BTreeMap<String, u64>> {
        let keys = par_samples(stream, draws, |rng, _| Ok(key(&s.sample_forest(n, rng)?)))?;
        let mut m = BTreeMap::new();
        for k in keys {
            *m.entry(k).or_insert(0) += 1;
        }
        Ok(m)
    };
    let a = tally(&exact, seed)?;
    let b = tally(&gw, seed ^ 0x6a)?;
    let (stat, p) = chi_square_two_sample(&a, &b, 10);
    let mut r = ExperimentReport::new("gw_vs_exact", &spec.name, Some(n), draws, seed);
    r.param("shapes", a.len().max(b.len()));
    r.test("shape_two_sample", stat, Some(p), format!("p > {}", tol.chi_p_min), draws, p > tol.chi_p_min);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::stream_rng;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn densities_on_fixed_permutations() {
        let mut rng = stream_rng(1, 0);
        assert_eq!(pattern_density_of(&Permutation::identity(50), &p("12"), 10, &mut rng), 1.0);
        assert_eq!(pattern_density_of(&Permutation::identity(50), &p("123"), 10, &mut rng), 1.0);
        assert_eq!(consecutive_density(&Permutation::identity(40), &p("21")), 0.0);
        assert_eq!(consecutive_density(&Permutation::decreasing(40), &p("21")), 39.0 / 40.0);
    }

    #[test]
    fn giant_deficit_is_stable() {
        let spec = ClassSpec::separable();
        let s = ClassSampler::new(&spec, SamplerConfig::gw(1), 1000).unwrap();
        assert!(deficit_stability(&s, 500, 1000, 1000, 8).unwrap().passed());
    }

    #[test]
    fn composition_formula() {
        assert!(composition_check(12).passed());
    }

    #[test]
    fn gamma_sums_to_one_and_is_symmetric() {
        let spec = ClassSpec::separable();
        let model = OffspringModel::auto(&spec).unwrap();
        let r = gamma_report(&spec, &model, 2, 4000, 3, &Tolerances::default()).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
    }

    #[test]
    fn small_skeleton_run() {
        let spec = ClassSpec::separable();
        let model = OffspringModel::auto(&spec).unwrap();
        let r = skeleton_experiment(&spec, &model, 300, 2, 0, 300, 4, &Tolerances::default()).unwrap();
        assert!(r.estimates.iter().any(|e| e.parameter.starts_with("genealogy_")));
        assert!(r.tests.iter().any(|t| t.name == "label_sum_ks"));
    }

    #[test]
    fn exact_uniformity_small() {
        let r = exact_uniformity(&ClassSpec::separable(), 4, 2200, 5, &Tolerances::default()).unwrap();
        assert_eq!(r.parameters["members"], 22);
        assert!(r.passed());
    }
}
