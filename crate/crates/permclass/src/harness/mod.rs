//! Statistical experiments on sampled permutations and limit objects, with
//! plot-ready reports.

mod experiments;
mod report;

use rayon::prelude::*;

use crate::error::Result;
use crate::sampler::{stream_rng, Rng};

pub use experiments::{
    ancestor_parity_check, composition_check, concentration_report, consecutive_density, consecutive_profile,
    deficit_stability, estimate_gamma, estimate_pattern_density, exact_uniformity, gamma_report, giant_component_stats,
    giant_samples, gw_exact_agreement, pattern_density_of, pattern_profile, pattern_report, skeleton_experiment,
    ConsecutiveProfile, GammaEstimate, GiantSample,
};
pub use report::{within_band, Estimate, ExperimentReport, TestResult, Tolerances};

/// Environment variable fixing the worker count.
pub const THREADS_ENV: &str = "PERMCLASS_THREADS";

/// Installs the global worker pool sized by `PERMCLASS_THREADS` (if set). Results
/// never depend on the worker count: every sample has its own seed-derived stream.
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // a pool may already exist (e.g. in tests); keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs `f` on samples `0..count`, sample `i` drawing from stream `i` of `seed`.
pub fn par_samples<T, F>(seed: u64, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Rng, usize) -> Result<T> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            f(&mut rng, i)
        })
        .collect()
}
