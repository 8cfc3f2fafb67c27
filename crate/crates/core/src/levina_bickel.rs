//! Levina–Bickel maximum-likelihood dimension estimator, used as a baseline.
//!
//! ```text
//! m̂_k(X_i) = [ (k−2)⁻¹ Σ_{j=1}^{k−1} log(L_k(X_i)/L_j(X_i)) ]⁻¹
//! m̄_k      = n⁻¹ Σ_i m̂_k(X_i)
//! ```
//!
//! and the reported estimate is the mean of `m̄_k` over `k ∈ [k1, k2]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle_kernel::k_smallest;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LbConfig {
    pub k1: usize,
    pub k2: usize,
}

impl Default for LbConfig {
    fn default() -> Self {
        Self { k1: 10, k2: 20 }
    }
}

impl LbConfig {
    fn validate(&self) -> Result<()> {
        if self.k1 < 3 || self.k1 > self.k2 {
            return Err(Error::Config(format!(
                "need 3 <= k1 <= k2, got k1 = {}, k2 = {}",
                self.k1, self.k2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbEstimate {
    /// Mean of `m̄_k` over `k1..=k2`.
    pub estimate: f64,
    /// `estimate` rounded to the nearest integer, halves rounded down.
    pub d_hat: u32,
    pub k1: usize,
    pub k2: usize,
}

/// Sorted distances from point `i` to its `k` nearest other points. Only the
/// point itself is skipped; duplicates elsewhere surface as zero distances.
fn neighbor_distances(cloud: &PointCloud, i: usize, k: usize) -> Result<Vec<f64>> {
    let p = cloud.point(i);
    let candidates: Vec<(f64, usize)> = cloud
        .points()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, q)| {
            let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2.sqrt(), j)
        })
        .collect();
    if candidates.len() < k {
        return Err(Error::InsufficientSample {
            needed: k,
            available: candidates.len(),
        });
    }
    let distances: Vec<f64> = k_smallest(candidates, k).into_iter().map(|(d, _)| d).collect();
    if distances[0] == 0.0 {
        return Err(Error::DegenerateData(format!(
            "point {i} has a duplicate at distance 0"
        )));
    }
    Ok(distances)
}

/// `m̂_k` from the sorted neighbour distances `L_1..L_k` (at least `k` of them).
fn mle_from_distances(distances: &[f64], k: usize) -> f64 {
    let lk = distances[k - 1].ln();
    let sum: f64 = distances[..k - 1].iter().map(|l| lk - l.ln()).sum();
    (k as f64 - 2.0) / sum
}

/// `m̂_k(X_i)` for point `i`.
pub fn lb_local(cloud: &PointCloud, i: usize, k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::Config(format!("k must be at least 3, got {k}")));
    }
    if i >= cloud.len() {
        return Err(Error::Config(format!("point {i} is out of range")));
    }
    let distances = neighbor_distances(cloud, i, k)?;
    Ok(mle_from_distances(&distances, k))
}

pub fn lb_global(cloud: &PointCloud, cfg: &LbConfig) -> Result<LbEstimate> {
    cfg.validate()?;
    let n = cloud.len();
    if n <= cfg.k2 {
        return Err(Error::InsufficientSample {
            needed: cfg.k2 + 1,
            available: n,
        });
    }
    let per_point: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let distances = neighbor_distances(cloud, i, cfg.k2)?;
            Ok((cfg.k1..=cfg.k2)
                .map(|k| mle_from_distances(&distances, k))
                .collect())
        })
        .collect::<Result<_>>()?;
    let ks = cfg.k2 - cfg.k1 + 1;
    let estimate = (0..ks)
        .map(|col| per_point.iter().map(|row| row[col]).sum::<f64>() / n as f64)
        .sum::<f64>()
        / ks as f64;
    Ok(LbEstimate {
        estimate,
        d_hat: round_half_down(estimate),
        k1: cfg.k1,
        k2: cfg.k2,
    })
}

/// Nearest non-negative integer, with `x.5` going to `x`.
pub(crate) fn round_half_down(x: f64) -> u32 {
    let r = (x - 0.5).ceil();
    if r < 0.0 {
        0
    } else {
        r as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_computed_line() {
        let cloud = PointCloud::from_flat(1, vec![0.0, 1.0, 3.0, 7.0]).unwrap();
        let expected = 1.0 / ((7.0f64).ln() + (7.0f64 / 3.0).ln());
        assert_abs_diff_eq!(lb_local(&cloud, 0, 3).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.3581, epsilon = 1e-4);
    }

    #[test]
    fn geometric_spacing_closed_form() {
        let r: f64 = 1.7;
        let k = 6;
        let xs: Vec<f64> = std::iter::once(0.0).chain((1..=k).map(|j| r.powi(j as i32))).collect();
        let cloud = PointCloud::from_flat(1, xs).unwrap();
        let sum: f64 = (1..k).map(|j| (k - j) as f64 * r.ln()).sum();
        let expected = 1.0 / (sum / (k as f64 - 2.0));
        assert_abs_diff_eq!(lb_local(&cloud, 0, k).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn duplicated_cloud_is_degenerate() {
        let base = [0.0, 1.0, 2.5, 4.0, 7.0, 8.0];
        let doubled: Vec<f64> = base.iter().chain(base.iter()).copied().collect();
        let cloud = PointCloud::from_flat(1, doubled).unwrap();
        assert!(matches!(lb_local(&cloud, 0, 3), Err(Error::DegenerateData(_))));
        let cfg = LbConfig { k1: 3, k2: 4 };
        assert!(matches!(lb_global(&cloud, &cfg), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn config_validation() {
        let cloud = PointCloud::from_flat(1, (0..30).map(f64::from).collect()).unwrap();
        assert!(lb_global(&cloud, &LbConfig { k1: 2, k2: 5 }).is_err());
        assert!(lb_global(&cloud, &LbConfig { k1: 6, k2: 5 }).is_err());
        assert!(lb_global(&cloud, &LbConfig { k1: 10, k2: 30 }).is_err());
        assert!(lb_local(&cloud, 0, 2).is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_down(2.5), 2);
        assert_eq!(round_half_down(2.51), 3);
        assert_eq!(round_half_down(2.49), 2);
        assert_eq!(round_half_down(0.2), 0);
    }
}
