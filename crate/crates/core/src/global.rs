//! Global dimension estimation: spread `c` centres over the sample, run the
//! local estimator at each, optionally drop the most curved ones, and take
//! the median.

use std::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationCache;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::local::{LocalConfig, LocalEstimate, LocalEstimator};
use crate::rng::{task_rng, DEFAULT_SEED};

/// Per-rank weight used by the centrality score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterWeight {
    /// `w(x) = 1/2 − |1/2 − (x−1)/n|`, largest for ranks near `n/2`.
    #[default]
    Middle,
    /// `f(x) = |1/2 − (x−1)/n|`, largest for extreme ranks.
    Printed,
}

impl CenterWeight {
    fn weight(self, rank: usize, n: usize) -> f64 {
        let f = (0.5 - 2.0 * (rank as f64 - 1.0) / (2.0 * n as f64)).abs();
        match self {
            Self::Middle => 0.5 - f,
            Self::Printed => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalConfig {
    /// Number of centres; `None` means [`default_c`] of the sample size.
    pub c: Option<usize>,
    /// Fraction of centres to drop by `|θ̄ − π/2|`, in `[0, 1)`.
    pub discard_fraction: f64,
    pub local: LocalConfig,
    pub weight: CenterWeight,
    /// Seed of the shuffle that partitions the sample.
    pub seed: u64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            c: None,
            discard_fraction: 0.0,
            local: LocalConfig::default(),
            weight: CenterWeight::Middle,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscardedCenter {
    pub center_index: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalEstimate {
    pub d_hat: u32,
    pub k: usize,
    pub c: usize,
    /// Every local estimate, in partition order.
    pub per_center: Vec<LocalEstimate>,
    pub discarded: Vec<DiscardedCenter>,
}

/// `round(2·ln n)`, at least 1.
pub fn default_c(n: usize) -> usize {
    let c = (2.0 * (n.max(1) as f64).ln()).round() as usize;
    c.max(1)
}

/// Centrality score of every point of `subsample`: the sum over coordinates
/// of the weight of the point's rank in that coordinate. Ranks run `1..=n`
/// and ties go to the lower point index.
pub fn centrality_scores(subsample: &PointCloud, weight: CenterWeight) -> Vec<f64> {
    let n = subsample.len();
    let mut scores = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for coord in 0..subsample.dim() {
        order.sort_by(|&a, &b| {
            subsample.point(a)[coord]
                .total_cmp(&subsample.point(b)[coord])
                .then(a.cmp(&b))
        });
        for (pos, &j) in order.iter().enumerate() {
            scores[j] += weight.weight(pos + 1, n);
        }
    }
    scores
}

/// Splits `0..n` into `c` groups after a seeded shuffle. Group sizes differ
/// by at most one, the larger groups first; each group is sorted.
pub fn partition(n: usize, c: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if c == 0 {
        return Err(Error::Config("the number of centres must be positive".into()));
    }
    if n < c {
        return Err(Error::Config(format!(
            "cannot pick {c} centres from {n} points"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut task_rng(seed, &[]));
    let base = n / c;
    let extra = n % c;
    let mut groups = Vec::with_capacity(c);
    let mut start = 0;
    for g in 0..c {
        let len = base + usize::from(g < extra);
        let mut group = indices[start..start + len].to_vec();
        group.sort_unstable();
        groups.push(group);
        start += len;
    }
    Ok(groups)
}

/// Index (into the full cloud) of the most central point of each subsample.
pub fn pick_centers(
    cloud: &PointCloud,
    c: usize,
    weight: CenterWeight,
    seed: u64,
) -> Result<Vec<usize>> {
    partition(cloud.len(), c, seed)?
        .into_iter()
        .map(|group| {
            let scores = centrality_scores(&cloud.select(&group)?, weight);
            // First maximum wins, i.e. the lowest point index on ties.
            let best = scores
                .iter()
                .enumerate()
                .fold(0, |best, (i, &s)| if s > scores[best] { i } else { best });
            Ok(group[best])
        })
        .collect()
}

fn deviation(est: &LocalEstimate) -> f64 {
    (est.mean_angle - FRAC_PI_2).abs()
}

/// Drops `ceil(fraction·count)` estimates with the largest `|θ̄ − π/2|`.
/// Among equal deviations the higher position is dropped first. Returns
/// the survivors in their original order and the dropped positions.
pub fn mean_angle_discard(
    estimates: &[LocalEstimate],
    fraction: f64,
) -> Result<(Vec<LocalEstimate>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "discard fraction {fraction} is outside [0, 1)"
        )));
    }
    let drop = (fraction * estimates.len() as f64).ceil() as usize;
    if drop >= estimates.len() && !estimates.is_empty() {
        return Err(Error::Config(format!(
            "discarding {drop} of {} centres leaves none",
            estimates.len()
        )));
    }
    let mut order: Vec<usize> = (0..estimates.len()).collect();
    order.sort_by(|&a, &b| {
        deviation(&estimates[b])
            .total_cmp(&deviation(&estimates[a]))
            .then(b.cmp(&a))
    });
    let mut dropped: Vec<usize> = order[..drop].to_vec();
    dropped.sort_unstable();
    let survivors = estimates
        .iter()
        .enumerate()
        .filter(|(i, _)| dropped.binary_search(i).is_err())
        .map(|(_, e)| *e)
        .collect();
    Ok((survivors, dropped))
}

/// Median of integer estimates; for an even count the mean of the two middle
/// values rounded down.
pub fn median_dimension(values: &[u32]) -> Option<u32> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2
    })
}

pub fn estimate_global(
    cloud: &PointCloud,
    cfg: &GlobalConfig,
    cache: Option<&CalibrationCache>,
) -> Result<GlobalEstimate> {
    let n = cloud.len();
    let c = cfg.c.unwrap_or_else(|| default_c(n));
    let local = LocalEstimator::new(&cfg.local, n, cloud.dim(), cache)?;
    let centers = pick_centers(cloud, c, cfg.weight, cfg.seed)?;
    // Neighbours are searched in the full cloud, not the subsample.
    let per_center = centers
        .par_iter()
        .map(|&i| local.estimate_at_index(cloud, i))
        .collect::<Result<Vec<_>>>()?;
    let (survivors, dropped) = mean_angle_discard(&per_center, cfg.discard_fraction)?;
    let d_hat = median_dimension(&survivors.iter().map(|e| e.d_hat).collect::<Vec<_>>())
        .expect("at least one centre survives");
    let discarded = dropped
        .into_iter()
        .map(|pos| DiscardedCenter {
            center_index: per_center[pos].center_index.expect("sample centre"),
            deviation: deviation(&per_center[pos]),
        })
        .collect();
    Ok(GlobalEstimate {
        d_hat,
        k: local.k(),
        c,
        per_center,
        discarded,
    })
}
