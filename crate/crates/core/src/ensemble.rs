//! Seed derivation and order-preserving parallel ensembles.
//!
//! Every trajectory draws from its own ChaCha stream whose seed depends only
//! on the master seed and the trajectory index, and results are reduced in
//! index order. Ensemble output is therefore independent of the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub type TrajectoryRng = ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` in the ensemble rooted at `master`.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    mix(mix(master) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn rng_from_seed(seed: u64) -> TrajectoryRng {
    TrajectoryRng::seed_from_u64(seed)
}

/// Runs `n` independent jobs in parallel on the current rayon pool and
/// returns their results in index order.
pub fn run_ensemble<T, F>(n: usize, master: u64, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| job(i, trajectory_seed(master, i as u64)))
        .collect()
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Sequential two-pass estimate; `samples` must be non-empty.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n > 0, "empty sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, stderr, n }
    }
}
