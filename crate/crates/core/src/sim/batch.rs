use rayon::prelude::*;

use super::config::SimConfig;
use super::run::{run_prepared, SimOptions};
use super::trace::SimTrace;
use super::SimError;

#[derive(Debug)]
pub struct BatchItem {
    pub seed: u64,
    pub result: Result<SimTrace, SimError>,
}

/// Runs `count` copies of `config` with seeds `seed_base, seed_base + 1, …`
/// on the current rayon pool. Results come back in seed order and do not
/// depend on the number of worker threads.
pub fn run_batch(
    config: &SimConfig,
    count: usize,
    seed_base: u64,
    opts: &SimOptions,
) -> Vec<BatchItem> {
    (0..count)
        .into_par_iter()
        .map(|idx| {
            let seed = seed_base.wrapping_add(idx as u64);
            let mut cfg = config.clone();
            cfg.seed = seed;
            let result = cfg.prepare().and_then(|prep| run_prepared(&prep, opts));
            BatchItem { seed, result }
        })
        .collect()
}
