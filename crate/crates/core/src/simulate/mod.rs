//! Reference engines for the closed forms: Monte Carlo protocol rounds, an
//! exact density-matrix computation for small `N`, the sampling-without-
//! replacement tail experiment and a toy error-correction run.
//!
//! Every randomised routine splits its work into fixed-size batches, each
//! driven by its own ChaCha stream, so results do not depend on how rayon
//! schedules the batches.

mod ec_toy;
mod exact;
mod rounds;
mod sampling;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use ec_toy::{ec_toy_run, ECToyReport};
pub use exact::{exact_marginals, MAX_EXACT_PARTIES};
pub use rounds::{simulate_rounds, simulate_statistics, SimulationReport};
pub use sampling::{sampling_lemma_experiment, SamplingReport};

const BATCH: u64 = 1 << 14;

/// Generator for batch `batch` of the experiment labelled `label`.
fn batch_rng(seed: u64, label: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((label << 48) | batch);
    rng
}

/// Splits `total` items into `(batch index, size)` pairs.
fn batches(total: u64) -> Vec<(u64, u64)> {
    (0..total.div_ceil(BATCH))
        .map(|b| (b, BATCH.min(total - b * BATCH)))
        .collect()
}

/// Standard deviation of a frequency estimated from `trials` Bernoulli draws.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}
