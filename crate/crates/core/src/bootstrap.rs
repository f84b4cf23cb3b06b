//! Subject-level bootstrap for the WMD estimate.
//!
//! Each resample draws `n` subjects with replacement; a complete pair is
//! drawn as a pair, so both the within-pair correlation and the block
//! structure carry over. Weights are re-derived inside every replicate.
//! Replicate `b` uses its own ChaCha stream `(seed, b)`, so the result does
//! not depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sample::{group_means, BlockSums, PartiallyPairedSample};
use crate::stats::sample_sd;
use crate::weights::WeightStrategy;
use crate::wmd::estimate_from_stats;

/// Draws per replicate before the replicate is declared failed.
const MAX_ATTEMPTS_PER_REPLICATE: usize = 10;

/// Replicate estimates and how many degenerate draws were discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    pub estimates: Vec<f64>,
    pub degenerate: usize,
}

/// Bootstrap standard error of the WMD estimate under `strategy`.
pub fn bootstrap_se(
    sample: &PartiallyPairedSample,
    strategy: &WeightStrategy,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    let draws = bootstrap_estimates(sample, strategy, replicates, seed)?;
    Ok(sample_sd(&draws.estimates))
}

/// Replicate estimates in replicate order.
///
/// Degenerate resamples (fewer than two complete pairs, a constant group,
/// weights needing an empty block) are redrawn. More than 10% degenerate
/// draws overall is a [`Error::BootstrapFailure`].
pub fn bootstrap_estimates(
    sample: &PartiallyPairedSample,
    strategy: &WeightStrategy,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapDraws> {
    if replicates < 2 {
        return Err(Error::InvalidParams(format!(
            "bootstrap needs at least 2 replicates, got {replicates}"
        )));
    }
    let n = sample.n();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let resampler = Resampler::new(sample);
    let outcomes: Vec<(Option<f64>, usize)> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(seed, b as u64);
            let mut wasted = 0;
            for _ in 0..MAX_ATTEMPTS_PER_REPLICATE {
                match resampler.draw(&mut rng, strategy) {
                    Ok(d) => return (Some(d), wasted),
                    Err(_) => wasted += 1,
                }
            }
            (None, wasted)
        })
        .collect();

    let degenerate: usize = outcomes.iter().map(|o| o.1).sum();
    let exhausted = outcomes.iter().any(|o| o.0.is_none());
    if exhausted || degenerate * 10 > replicates {
        return Err(Error::BootstrapFailure {
            degenerate,
            replicates,
        });
    }
    Ok(BootstrapDraws {
        estimates: outcomes.into_iter().filter_map(|o| o.0).collect(),
        degenerate,
    })
}

pub(crate) fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Resampler<'a> {
    sample: &'a PartiallyPairedSample,
    shift: (f64, f64),
}

impl<'a> Resampler<'a> {
    fn new(sample: &'a PartiallyPairedSample) -> Self {
        Self {
            sample,
            shift: group_means(sample),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R, strategy: &WeightStrategy) -> Result<f64> {
        let s = self.sample;
        let (n0, n1, n) = (s.n0(), s.n1(), s.n());
        let mut sums = BlockSums::with_shift(self.shift.0, self.shift.1);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            if i < n0 {
                sums.push_pair(s.y1_complete()[i], s.y2_complete()[i]);
            } else if i < n0 + n1 {
                sums.push_y1(s.y1_only()[i - n0]);
            } else {
                sums.push_y2(s.y2_only()[i - n0 - n1]);
            }
        }
        let st = sums.summary()?;
        let w = strategy.resolve(&st)?;
        estimate_from_stats(&st, &w)
    }
}
