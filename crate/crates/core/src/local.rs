//! Local dimension estimation at a single centre: find the `k` nearest
//! neighbours, compute `U_{k,n}`, and map it to a dimension.

use serde::{Deserialize, Serialize};

use crate::angle_kernel::{knn, u_statistic};
use crate::calibration::{kde_eval, CalibrationCache};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::moments::{self, MomentTable};

/// Rule turning `U_{k,n}` into a dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Nearest `β_d`.
    Basic,
    /// Variance-weighted thresholds between neighbouring `β_d`.
    Discriminant,
    /// Maximum of per-dimension kernel densities of `k(E_n − β_d)`.
    Kernel,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Self::Basic),
            "disc" | "discriminant" => Ok(Self::Discriminant),
            "kernel" => Ok(Self::Kernel),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalConfig {
    /// Neighbour count; `None` means [`default_k`] of the sample size.
    pub k: Option<usize>,
    /// Largest candidate dimension; `None` means the ambient dimension.
    pub d_max: Option<u32>,
    pub method: Method,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            k: None,
            d_max: None,
            method: Method::Basic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEstimate {
    pub d_hat: u32,
    pub u_value: f64,
    pub mean_angle: f64,
    pub k: usize,
    /// Index of the centre in the cloud; `None` for an external centre.
    pub center_index: Option<usize>,
}

/// `round(10·log₁₀ n)`, half-up, floored at 2.
pub fn default_k(n: usize) -> usize {
    let k = (10.0 * (n.max(1) as f64).log10() + 0.5).floor() as usize;
    k.max(2)
}

/// `argmin_d |β_d − u|` over `1..=table.d_max()`, ties to the smaller `d`.
pub fn estimate_basic(u_value: f64, table: &MomentTable) -> u32 {
    let mut best = 1;
    let mut best_gap = f64::INFINITY;
    for d in 1..=table.d_max() {
        let gap = (table.beta(d) - u_value).abs();
        if gap < best_gap {
            best = d;
            best_gap = gap;
        }
    }
    best
}

/// Threshold `η_d = β_d + σ_d/(σ_d + σ_{d+1})·(β_{d−1} − β_d)` for `d ≥ 2`.
/// It lies between `β_d` and `β_{d−1}` and is the upper edge of class `d`.
pub fn discriminant_threshold(d: u32, table: &MomentTable) -> f64 {
    assert!(d >= 2, "thresholds start at d = 2");
    let sigma = |r: u32| {
        if r <= table.d_max() {
            table.sigma_sq(r).sqrt()
        } else {
            moments::sigma_sq_unchecked(r).sqrt()
        }
    };
    let (s_d, s_next) = (sigma(d), sigma(d + 1));
    let b_d = table.beta(d);
    b_d + s_d / (s_d + s_next) * (table.beta(d - 1) - b_d)
}

/// Classifies `u` into the partition of `[0, π²/4]` cut at `η_2 > η_3 > …`:
/// class `d` is `[η_{d+1}, η_d)`, class 1 is everything at or above `η_2`
/// and class `d_max` everything below `η_{d_max}`.
pub fn estimate_discriminant(u_value: f64, table: &MomentTable) -> u32 {
    for d in 1..table.d_max() {
        if u_value >= discriminant_threshold(d + 1, table) {
            return d;
        }
    }
    table.d_max()
}

/// `argmax_d f̂_d(k(u − β_d))` with `f̂_d` the kernel density of the cached
/// samples for dimension `d`. Ties go to the smaller `d`.
pub fn estimate_kernel(
    u_value: f64,
    k: usize,
    cache: &CalibrationCache,
    table: &MomentTable,
) -> Result<u32> {
    cache.check_compatible(k, table.d_max())?;
    let mut best = 1;
    let mut best_density = f64::NEG_INFINITY;
    for d in 1..=table.d_max() {
        let entry = cache.entry(d).expect("checked above");
        let y = k as f64 * (u_value - table.beta(d));
        let density = kde_eval(&entry.samples, y)?;
        if density > best_density {
            best = d;
            best_density = density;
        }
    }
    Ok(best)
}

/// A local estimator with its defaults resolved against a particular cloud.
#[derive(Debug, Clone)]
pub struct LocalEstimator<'a> {
    k: usize,
    method: Method,
    table: MomentTable,
    cache: Option<&'a CalibrationCache>,
}

impl<'a> LocalEstimator<'a> {
    /// Resolves `cfg` for a cloud with `n` points in `ℝ^m`. The kernel method
    /// requires a cache generated with the resolved `k` covering `d_max`.
    pub fn new(
        cfg: &LocalConfig,
        n: usize,
        m: usize,
        cache: Option<&'a CalibrationCache>,
    ) -> Result<Self> {
        let k = cfg.k.unwrap_or_else(|| default_k(n));
        if k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {k}")));
        }
        let d_max = cfg.d_max.unwrap_or(m as u32);
        let table = MomentTable::new(d_max)
            .map_err(|_| Error::Config("d_max must be at least 1".into()))?;
        if cfg.method == Method::Kernel {
            cache
                .ok_or_else(|| {
                    Error::CalibrationMismatch("the kernel method needs a calibration cache".into())
                })?
                .check_compatible(k, d_max)?;
        }
        Ok(Self {
            k,
            method: cfg.method,
            table,
            cache,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_max(&self) -> u32 {
        self.table.d_max()
    }

    pub fn table(&self) -> &MomentTable {
        &self.table
    }

    /// Maps a statistic to a dimension with the configured rule.
    pub fn classify(&self, u_value: f64) -> Result<u32> {
        match self.method {
            Method::Basic => Ok(estimate_basic(u_value, &self.table)),
            Method::Discriminant => Ok(estimate_discriminant(u_value, &self.table)),
            Method::Kernel => estimate_kernel(
                u_value,
                self.k,
                self.cache.expect("checked in new"),
                &self.table,
            ),
        }
    }

    pub fn estimate_at(&self, cloud: &PointCloud, center: &[f64]) -> Result<LocalEstimate> {
        let neighbors = knn(cloud, center, self.k)?;
        let stat = u_statistic(&neighbors)?;
        Ok(LocalEstimate {
            d_hat: self.classify(stat.u_value)?,
            u_value: stat.u_value,
            mean_angle: stat.mean_angle,
            k: stat.k,
            center_index: None,
        })
    }

    pub fn estimate_at_index(&self, cloud: &PointCloud, index: usize) -> Result<LocalEstimate> {
        if index >= cloud.len() {
            return Err(Error::Config(format!(
                "centre row {index} is out of range for {} points",
                cloud.len()
            )));
        }
        let mut est = self.estimate_at(cloud, cloud.point(index))?;
        est.center_index = Some(index);
        Ok(est)
    }
}

/// One-shot local estimate at an arbitrary centre.
pub fn estimate_local(
    cloud: &PointCloud,
    center: &[f64],
    cfg: &LocalConfig,
    cache: Option<&CalibrationCache>,
) -> Result<LocalEstimate> {
    LocalEstimator::new(cfg, cloud.len(), cloud.dim(), cache)?.estimate_at(cloud, center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{CacheEntry, CACHE_FORMAT_VERSION};
    use proptest::prelude::*;

    fn table(d: u32) -> MomentTable {
        MomentTable::new(d).unwrap()
    }

    fn point_cache(k: usize, d_max: u32, value: f64) -> CalibrationCache {
        CalibrationCache {
            format_version: CACHE_FORMAT_VERSION,
            k,
            entries: (1..=d_max)
                .map(|d| CacheEntry {
                    d,
                    m: 1,
                    seed: 0,
                    samples: vec![value],
                })
                .collect(),
        }
    }

    #[test]
    fn default_k_values() {
        assert_eq!(default_k(2500), 34);
        assert_eq!(default_k(10), 10);
        assert_eq!(default_k(100_000), 50);
        assert_eq!(default_k(2), 3);
        assert_eq!(default_k(1), 2);
    }

    #[test]
    fn basic_rule_examples() {
        let t = table(20);
        assert_eq!(estimate_basic(t.beta(9), &t), 9);
        assert_eq!(estimate_basic(0.82, &t), 2);
        assert_eq!(estimate_basic(0.10, &t), 11);
        assert_eq!(estimate_basic(0.112, &t), 10);
        assert_eq!(estimate_basic(0.0, &t), 20);
        for d in 1..=20 {
            assert_eq!(estimate_basic(t.beta(d), &t), d);
        }
    }

    #[test]
    fn basic_rule_breaks_ties_downward() {
        let t = table(5);
        let mid = 0.5 * (t.beta(3) + t.beta(4));
        assert_eq!(estimate_basic(mid, &t), 3);
    }

    #[test]
    fn discriminant_rule_examples() {
        let t = table(20);
        assert_eq!(estimate_discriminant(t.beta(1), &t), 1);
        assert_eq!(estimate_discriminant(t.beta(5), &t), 5);
        assert_eq!(estimate_discriminant(0.0, &t), 20);
        for d in 2..=20 {
            let eta = discriminant_threshold(d, &t);
            assert!(t.beta(d) < eta && eta < t.beta(d - 1));
            assert_eq!(estimate_discriminant(t.beta(d), &t), d);
        }
        assert_eq!(estimate_discriminant(discriminant_threshold(6, &t), &t), 5);
    }

    #[test]
    fn kernel_rule_with_point_caches() {
        let t = table(12);
        let cache = point_cache(30, 12, 0.0);
        assert_eq!(estimate_kernel(t.beta(7), 30, &cache, &t).unwrap(), 7);
        for u in [0.0, 0.05, 0.13, 0.3, 0.7, 1.0, 2.0, 2.4] {
            assert_eq!(
                estimate_kernel(u, 30, &cache, &t).unwrap(),
                estimate_basic(u, &t),
                "u = {u}"
            );
        }
    }

    #[test]
    fn kernel_rule_rejects_mismatched_cache() {
        let t = table(6);
        let cache = point_cache(30, 5, 0.0);
        assert!(matches!(
            estimate_kernel(0.2, 30, &cache, &t),
            Err(Error::CalibrationMismatch(_))
        ));
        let cache = point_cache(31, 6, 0.0);
        assert!(matches!(
            estimate_kernel(0.2, 30, &cache, &t),
            Err(Error::CalibrationMismatch(_))
        ));
        let cfg = LocalConfig {
            method: Method::Kernel,
            ..LocalConfig::default()
        };
        assert!(LocalEstimator::new(&cfg, 100, 6, None).is_err());
    }

    #[test]
    fn two_orthogonal_neighbours_give_d_max() {
        let cloud = PointCloud::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let cfg = LocalConfig {
            k: Some(2),
            ..LocalConfig::default()
        };
        let est = estimate_local(&cloud, &[0.0, 0.0, 0.0], &cfg, None).unwrap();
        assert_eq!(est.u_value, 0.0);
        assert_eq!(est.d_hat, 3);
        assert_eq!(est.center_index, None);
    }

    #[test]
    fn method_names() {
        assert_eq!("basic".parse::<Method>().unwrap(), Method::Basic);
        assert_eq!("disc".parse::<Method>().unwrap(), Method::Discriminant);
        assert_eq!("kernel".parse::<Method>().unwrap(), Method::Kernel);
        assert!("lb".parse::<Method>().is_err());
    }

    proptest! {
        #[test]
        fn basic_rule_is_monotone(a in 0.0f64..2.5, b in 0.0f64..2.5) {
            let t = table(30);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(estimate_basic(lo, &t) >= estimate_basic(hi, &t));
        }

        #[test]
        fn discriminant_rule_is_monotone(a in 0.0f64..2.5, b in 0.0f64..2.5) {
            let t = table(30);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(estimate_discriminant(lo, &t) >= estimate_discriminant(hi, &t));
        }
    }
}
