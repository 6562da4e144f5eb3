//! Seeded Monte Carlo estimate of a threshold rule's win probability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};
use crate::policy::{play, ThresholdPolicy};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    /// Number of contiguous trial ranges processed in parallel. Does not
    /// affect the result.
    pub parallel_chunks: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 0,
            parallel_chunks: 16,
        }
    }
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("trials must be >= 1".into()));
        }
        if self.parallel_chunks == 0 {
            return Err(Error::Validation("parallel_chunks must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub estimate: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub trials: u64,
    pub seed: u64,
    pub wins: u64,
}

impl SimReport {
    pub fn from_counts(wins: u64, trials: u64, seed: u64) -> Self {
        let estimate = wins as f64 / trials as f64;
        let stderr = (estimate * (1.0 - estimate) / trials as f64).sqrt();
        let half = 1.96 * stderr;
        Self {
            estimate,
            stderr,
            ci95: ((estimate - half).max(0.0), (estimate + half).min(1.0)),
            trials,
            seed,
            wins,
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci95.0 <= value && value <= self.ci95.1
    }
}

/// Win indicator for trial `trial`: observation `j` is draw `j` of stream `(seed, trial)`.
fn run_trial(instance: &ProblemInstance, thresholds: &[f64], seed: u64, trial: u64, path: &mut Vec<f64>) -> bool {
    let mut stream = RandomStream::new(seed, trial);
    path.clear();
    path.extend(instance.distributions().iter().map(|d| d.sample(&mut stream)));
    play(thresholds, path).won
}

pub fn simulate_win_probability(
    instance: &ProblemInstance,
    policy: &ThresholdPolicy,
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    if policy.horizon() != instance.len() {
        return Err(Error::Domain(format!(
            "policy is for n = {} but the instance has n = {}",
            policy.horizon(),
            instance.len()
        )));
    }
    let chunks = cfg.parallel_chunks as u64;
    let per_chunk = cfg.trials.div_ceil(chunks);
    let wins: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * per_chunk;
            let end = ((c + 1) * per_chunk).min(cfg.trials);
            let mut path = Vec::with_capacity(instance.len());
            (start..end)
                .filter(|&t| run_trial(instance, &policy.thresholds, cfg.seed, t, &mut path))
                .count() as u64
        })
        .sum();
    Ok(SimReport::from_counts(wins, cfg.trials, cfg.seed))
}
