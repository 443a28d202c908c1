use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use permclass::analytic::{estimate_radius, LimitParameters, OffspringModel, SeriesTable};
use permclass::decomposition::{canonical_tree, forest_decode, pack, DecoratedForest};
use permclass::harness::{
    concentration_report, configure_threads, deficit_stability, gamma_report, giant_component_stats, pattern_report,
    skeleton_experiment, ExperimentReport, Tolerances,
};
use permclass::sampler::{stream_rng, ClassSampler, SamplerConfig};
use permclass::{ClassSpec, Permutation, Result};

#[derive(Parser)]
#[command(name = "permclass", about = "Uniform permutations in substitution-closed classes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Gw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Pattern,
    Consecutive,
    Gamma,
    Skeleton,
    Giant,
}

#[derive(Subcommand)]
enum Cmd {
    /// Offspring law and limit parameters of a class.
    Limits {
        #[arg(long, default_value = "separable")]
        class: String,
    },
    /// Uniform class members of size n, one per line.
    Sample {
        #[arg(long, default_value = "separable")]
        class: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value = "gw")]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the packed forest next to each permutation.
        #[arg(long)]
        emit_trees: bool,
    },
    /// Canonical decomposition tree of a permutation.
    Decompose { perm: Permutation },
    /// Packed tree of a permutation.
    Pack { perm: Permutation },
    /// Run a statistical experiment and report its checks.
    Stats {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long, default_value = "separable")]
        class: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Marks (skeleton) or pattern size (gamma).
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        t: usize,
        /// Consecutive pattern.
        #[arg(long, default_value = "21")]
        pattern: Permutation,
        /// Limit realizations for the gamma estimate of the consecutive experiment.
        #[arg(long, default_value_t = 20_000)]
        gamma_samples: usize,
        #[arg(long)]
        se_band: Option<f64>,
        #[arg(long)]
        ks_max: Option<f64>,
        #[arg(long)]
        chi_p_min: Option<f64>,
        #[arg(long)]
        tv_max: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Limits { class } => {
            let spec = ClassSpec::load(&class)?;
            let limits = LimitParameters::compute(&spec)?;
            let model = OffspringModel::auto(&spec)?;
            let radius = estimate_radius(&SeriesTable::scaled(&spec, 2000)?)?;
            let out = json!({
                "limits": limits,
                "offspring": { "mean": model.mean, "sigma2_numeric": model.sigma2_numeric,
                               "cutoff": model.cutoff, "tail_mass": model.tail_mass,
                               "pmf_head": &model.pmf[..model.pmf.len().min(8)] },
                "radius": radius,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Cmd::Sample { class, n, count, method, seed, emit_trees } => {
            let spec = ClassSpec::load(&class)?;
            let cfg = match method {
                MethodArg::Exact => SamplerConfig::exact(seed, n.max(2)),
                MethodArg::Gw => SamplerConfig::gw(seed),
            };
            let sampler = ClassSampler::new(&spec, cfg, n)?;
            for i in 0..count {
                let mut rng = stream_rng(seed, i as u64);
                let forest = sampler.sample_forest(n, &mut rng)?;
                let nu = forest_decode(&forest);
                if emit_trees {
                    println!("{}\t{forest}", nu.to_spaced());
                } else {
                    println!("{}", nu.to_spaced());
                }
            }
        }
        Cmd::Decompose { perm } => println!("{}", canonical_tree(&perm)),
        Cmd::Pack { perm } => {
            // a ⊕-decomposable permutation packs into a forest, one tree per component
            let trees = perm.plus_components().iter().map(|c| pack(&canonical_tree(c))).collect::<Result<Vec<_>>>()?;
            if trees.len() == 1 {
                println!("{}", trees[0]);
            } else {
                println!("{}", DecoratedForest::new(trees)?);
            }
        }
        Cmd::Stats {
            experiment,
            class,
            n,
            samples,
            seed,
            k,
            t,
            pattern,
            gamma_samples,
            se_band,
            ks_max,
            chi_p_min,
            tv_max,
            out,
            csv,
        } => {
            let spec = ClassSpec::load(&class)?;
            let d = Tolerances::default();
            let tol = Tolerances {
                se_band: se_band.unwrap_or(d.se_band),
                ks_max: ks_max.unwrap_or(d.ks_max),
                chi_p_min: chi_p_min.unwrap_or(d.chi_p_min),
                tv_max: tv_max.unwrap_or(d.tv_max),
                ..d
            };
            let reports = match experiment {
                Experiment::Pattern => vec![pattern_report(
                    &ClassSampler::new(&spec, SamplerConfig::gw(seed), n)?,
                    n,
                    samples,
                    seed,
                    &tol,
                )?],
                Experiment::Consecutive => {
                    let model = OffspringModel::auto(&spec)?;
                    let sampler = ClassSampler::new(&spec, SamplerConfig::gw(seed), n)?;
                    vec![concentration_report(
                        &sampler,
                        &model,
                        &pattern,
                        (n / 4).max(1),
                        n,
                        samples,
                        gamma_samples,
                        seed,
                        &tol,
                    )?]
                }
                Experiment::Gamma => vec![gamma_report(&spec, &OffspringModel::auto(&spec)?, k, samples, seed, &tol)?],
                Experiment::Skeleton => {
                    vec![skeleton_experiment(&spec, &OffspringModel::auto(&spec)?, n, k, t, samples, seed, &tol)?]
                }
                Experiment::Giant => {
                    let rho = estimate_radius(&SeriesTable::scaled(&spec, 2000)?)?;
                    let sampler = ClassSampler::new(&spec, SamplerConfig::gw(seed), n)?;
                    let r = giant_component_stats(&sampler, n, samples, seed, rho.p_at_rho, &tol)?;
                    vec![r, deficit_stability(&sampler, (n / 2).max(1), n, samples, seed)?]
                }
            };
            let text = if reports.len() == 1 { reports[0].to_json()? } else { serde_json::to_string_pretty(&reports)? };
            match &out {
                Some(path) => std::fs::write(path, &text)?,
                None => println!("{text}"),
            }
            if let Some(path) = &csv {
                ExperimentReport::save_csv(&reports, path)?;
            }
            for f in reports.iter().flat_map(|r| r.failures()) {
                eprintln!("check failed: {f}");
            }
            return Ok(reports.iter().all(|r| r.passed()));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    configure_threads();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
