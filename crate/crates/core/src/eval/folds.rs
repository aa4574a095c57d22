//! Repeated k-fold plans and percentile confidence intervals.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A repeated k-fold partition: `assignments[rep][fold]` holds item indices.
/// Within each repetition every item appears in exactly one fold and fold
/// sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_items: usize,
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub assignments: Vec<Vec<Vec<usize>>>,
}

impl FoldPlan {
    /// Total number of folds across repetitions.
    pub fn fold_count(&self) -> usize {
        self.k * self.repetitions
    }
}

/// Build a shuffled repeated k-fold plan, deterministic in `seed`.
pub fn repeated_kfold(n_items: usize, k: usize, repetitions: usize, seed: u64) -> Result<FoldPlan> {
    if k == 0 || repetitions == 0 {
        return Err(Error::Config("k and repetitions must be at least 1".into()));
    }
    if k > n_items {
        return Err(Error::Config(format!("cannot make {k} folds from {n_items} items")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let mut indices: Vec<usize> = (0..n_items).collect();
        indices.shuffle(&mut rng);
        let base = n_items / k;
        let extra = n_items % k;
        let mut folds = Vec::with_capacity(k);
        let mut cursor = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            folds.push(indices[cursor..cursor + size].to_vec());
            cursor += size;
        }
        assignments.push(folds);
    }
    Ok(FoldPlan { n_items, k, repetitions, seed, assignments })
}

/// Mean and 95% interval of a set of fold scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ci95 {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    /// Number of scores; a single score collapses the interval (the caller
    /// should warn).
    pub n: usize,
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Mean plus the 2.5th/97.5th percentiles of `scores`.
pub fn ci95(scores: &[f64]) -> Result<Ci95> {
    if scores.is_empty() {
        return Err(Error::Config("ci95 needs at least one score".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores must not be NaN"));
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(Ci95 {
        mean,
        lo: percentile(&sorted, 0.025),
        hi: percentile(&sorted, 0.975),
        n: sorted.len(),
    })
}
