//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigUint;
use rand::seq::index;
use rand::Rng;

use permclass::analytic::{estimate_radius, LimitParameters, OffspringModel, SeriesTable};
use permclass::decomposition::{
    canonical_tree, class_membership, eval_tree, forest_decode, forest_encode, read_pattern_forest,
};
use permclass::harness::{
    ancestor_parity_check, composition_check, concentration_report, deficit_stability, exact_uniformity,
    giant_component_stats, gw_exact_agreement, pattern_report, skeleton_experiment, ExperimentReport, Tolerances,
};
use permclass::sampler::{stream_rng, ClassSampler, SamplerConfig};
use permclass::{ClassSpec, Permutation};

// Pinned tolerances.
const SE_BAND: f64 = 3.0;
const KS_MAX: f64 = 0.05;
const CHI_P_MIN: f64 = 0.001;
const TV_MAX: f64 = 0.05;
const SD_RATIO_MIN: f64 = 1.7;
const MEAN_XI_TOL: f64 = 1e-9;
const CLOSED_FORM_TOL: f64 = 1e-12;
const ORACLE_P_TOL: f64 = 1e-10;

const SEED: u64 = 20_240_601;

fn tolerances() -> Tolerances {
    Tolerances {
        se_band: SE_BAND,
        ks_max: KS_MAX,
        chi_p_min: CHI_P_MIN,
        tv_max: TV_MAX,
        sd_ratio_min: SD_RATIO_MIN,
        ..Tolerances::default()
    }
}

fn s4() -> ClassSpec {
    ClassSpec::from_simples("S={2413,3142}", vec!["2413".parse().unwrap(), "3142".parse().unwrap()]).unwrap()
}

fn classes() -> [ClassSpec; 2] {
    [ClassSpec::separable(), s4()]
}

type Outcome = Result<(bool, String), String>;

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn summarize(reports: &[ExperimentReport]) -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in reports {
        let fails = r.failures();
        ok &= fails.is_empty();
        notes.push(if fails.is_empty() {
            format!("{}[{}] ok", r.experiment, r.class)
        } else {
            format!("{}[{}] failed: {}", r.experiment, r.class, fails.join(", "))
        });
    }
    (ok, notes.join("; "))
}

fn criterion_1() -> Outcome {
    let mut failures = 0usize;
    let mut checked = 0usize;
    for n in 1..=8 {
        for nu in Permutation::all(n) {
            checked += 1;
            if eval_tree(&canonical_tree(&nu).into_inner()).map_err(e)? != nu {
                failures += 1;
            }
            for spec in classes() {
                if class_membership(&nu, &spec) {
                    checked += 1;
                    let f = forest_encode(&nu, &spec).map_err(e)?;
                    if forest_decode(&f) != nu {
                        failures += 1;
                    }
                }
            }
        }
    }
    Ok((failures == 0, format!("{checked} round trips, {failures} failures")))
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    for spec in classes() {
        let table = SeriesTable::compute(&spec, 8).map_err(e)?;
        for n in 1..=8 {
            let members: Vec<Permutation> = Permutation::all(n).filter(|nu| class_membership(nu, &spec)).collect();
            let indecomposable = members.iter().filter(|nu| nu.plus_components().len() == 1).count();
            ok &= *table.c(n) == BigUint::from(members.len());
            ok &= *table.p(n) == BigUint::from(indecomposable);
        }
    }
    let sep = SeriesTable::compute(&ClassSpec::separable(), 6).map_err(e)?;
    let first: Vec<String> = (1..=6).map(|n| sep.c(n).to_string()).collect();
    ok &= first == ["1", "2", "6", "22", "90", "394"];
    Ok((ok, format!("separable c_1..c_6 = {}", first.join(","))))
}

fn criterion_3() -> Outcome {
    let tol = tolerances();
    let spec = ClassSpec::separable();
    let uni = exact_uniformity(&spec, 6, 100_000, SEED, &tol).map_err(e)?;
    let agree: Vec<ExperimentReport> = classes()
        .iter()
        .map(|s| gw_exact_agreement(s, 8, 20_000, SEED + 1, &tol))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let mut all = vec![uni];
    all.extend(agree);
    Ok(summarize(&all))
}

/// Independent oracle for the class with simples {2413, 3142}:
/// `S(z) = 2z⁴`, `S'' = 24z²`, `Occ₁₂(z) = 6z²`.
fn s4_oracle() -> (f64, f64, f64) {
    let g = |k: f64| 8.0 * k.powi(3) + 1.0 - 2.0 / (1.0 + k).powi(2);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid
        } else {
            lo = mid
        }
    }
    let k = 0.5 * (lo + hi);
    let sigma2 = k * (1.0 + k).powi(3) * 24.0 * k * k + 4.0 * k;
    (k, sigma2, 2.0 * (k * (1.0 + k).powi(3) * 6.0 * k * k + k) / sigma2)
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for spec in classes() {
        let m = OffspringModel::auto(&spec).map_err(e)?;
        ok &= (m.mean - 1.0).abs() < MEAN_XI_TOL;
        notes.push(format!("E[xi]-1={:.1e}", m.mean - 1.0));
    }
    let sep = LimitParameters::compute(&ClassSpec::separable()).map_err(e)?;
    let t0 = 1.0 - 1.0 / 2f64.sqrt();
    let sigma2 = 4.0 * (2f64.sqrt() - 1.0);
    ok &= (sep.t0 - t0).abs() < CLOSED_FORM_TOL && (sep.sigma2 - sigma2).abs() < CLOSED_FORM_TOL;
    ok &= sep.p == 0.5;
    let s = LimitParameters::compute(&s4()).map_err(e)?;
    // p is 1/2 by complement symmetry here, so kappa and sigma2 are compared too
    let (kappa, sig2, oracle) = s4_oracle();
    ok &= (s.p - oracle).abs() < ORACLE_P_TOL;
    ok &= (s.kappa - kappa).abs() < ORACLE_P_TOL && (s.sigma2 - sig2).abs() < ORACLE_P_TOL;
    notes.push(format!("separable p={} t0 err={:.1e} sigma2 err={:.1e}", sep.p, sep.t0 - t0, sep.sigma2 - sigma2));
    notes.push(format!(
        "S4 p={:.12} oracle={oracle:.12}, kappa err={:.1e}, sigma2 err={:.1e}",
        s.p,
        s.kappa - kappa,
        s.sigma2 - sig2
    ));
    Ok((ok, notes.join("; ")))
}

fn gw_sampler(spec: &ClassSpec, n: usize, seed: u64) -> Result<ClassSampler, String> {
    ClassSampler::new(spec, SamplerConfig::gw(seed), n).map_err(e)
}

fn criterion_5() -> Outcome {
    let tol = tolerances();
    let mut reports = Vec::new();
    for spec in classes() {
        let s = gw_sampler(&spec, 1000, SEED)?;
        reports.push(pattern_report(&s, 1000, 200, SEED + 5, &tol).map_err(e)?);
    }
    Ok(summarize(&reports))
}

fn criterion_6() -> Outcome {
    let tol = tolerances();
    let spec = ClassSpec::separable();
    let model = OffspringModel::auto(&spec).map_err(e)?;
    let reports: Vec<ExperimentReport> = [1, 2]
        .iter()
        .map(|&k| skeleton_experiment(&spec, &model, 2000, k, 0, 2000, SEED + 60 + k as u64, &tol))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    Ok(summarize(&reports))
}

fn criterion_7() -> Outcome {
    let tol = tolerances();
    let mut reports = Vec::new();
    for spec in classes() {
        let rho = estimate_radius(&SeriesTable::scaled(&spec, 2000).map_err(e)?).map_err(e)?;
        let s = gw_sampler(&spec, 1000, SEED)?;
        reports.push(giant_component_stats(&s, 1000, 2000, SEED + 7, rho.p_at_rho, &tol).map_err(e)?);
        reports.push(deficit_stability(&s, 500, 1000, 2000, SEED + 70).map_err(e)?);
    }
    Ok(summarize(&reports))
}

fn criterion_8() -> Outcome {
    let tol = tolerances();
    let pi: Permutation = "21".parse().unwrap();
    let mut reports = Vec::new();
    for spec in classes() {
        let model = OffspringModel::auto(&spec).map_err(e)?;
        let s = gw_sampler(&spec, 2000, SEED)?;
        reports.push(concentration_report(&s, &model, &pi, 500, 2000, 100, 40_000, SEED + 8, &tol).map_err(e)?);
    }
    Ok(summarize(&reports))
}

fn criterion_9() -> Outcome {
    let tol = tolerances();
    let spec = s4();
    let model = OffspringModel::auto(&spec).map_err(e)?;
    let key = ancestor_parity_check(&spec, &model, 40, 20_000, SEED + 9, &tol).map_err(e)?;
    Ok(summarize(&[key, composition_check(12)]))
}

fn criterion_10() -> Outcome {
    let mut failures = 0;
    let cases = 10_000;
    for (c, spec) in classes().iter().enumerate() {
        let sampler = ClassSampler::new(spec, SamplerConfig::exact(SEED, 12), 12).map_err(e)?;
        let mut rng = stream_rng(SEED + 10, c as u64);
        for _ in 0..cases / 2 {
            let n = rng.gen_range(1..=12);
            let forest = sampler.sample_forest(n, &mut rng).map_err(e)?;
            let nu = forest_decode(&forest);
            let k = rng.gen_range(1..=n);
            let mut idx: Vec<usize> = index::sample(&mut rng, n, k).into_iter().map(|i| i + 1).collect();
            idx.sort_unstable();
            if read_pattern_forest(&forest, &idx).map_err(e)? != nu.pattern_at(&idx).map_err(e)? {
                failures += 1;
            }
        }
    }
    Ok((failures == 0, format!("{cases} cases, {failures} failures")))
}

fn main() -> ExitCode {
    permclass::harness::configure_threads();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("bijection round trips", criterion_1),
        ("counting oracle", criterion_2),
        ("sampler uniformity", criterion_3),
        ("offspring and limit parameters", criterion_4),
        ("pattern densities", criterion_5),
        ("skeleton laws", criterion_6),
        ("giant component", criterion_7),
        ("quenched concentration", criterion_8),
        ("internal formula checks", criterion_9),
        ("pattern reading", criterion_10),
    ];
    let mut failed = BTreeMap::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(x) => x,
            Err(err) => (false, format!("error: {err}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {:>2} {name} ({secs:.1}s): {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        if !ok {
            failed.insert(i + 1, name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {:?}", failed.keys().collect::<Vec<_>>());
        ExitCode::FAILURE
    }
}
