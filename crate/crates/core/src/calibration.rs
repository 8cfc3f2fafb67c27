//! Monte Carlo calibration on exactly uniform sphere data.
//!
//! For `k` i.i.d. uniform points `Z_1..Z_k` on `S^{d−1}` the statistic
//!
//! ```text
//! E_n = C(k,2)⁻¹ Σ_{i<j} (arccos⟨Z_i, Z_j⟩ − π/2)²
//! ```
//!
//! has mean `β_d` exactly and `C(k,2)·Var(E_n) = σ_d²` (the kernel is
//! degenerate). Samples of `k(E_n − β_d)` feed the kernel-density dimension
//! rule and the QQ diagnostics.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::angle_kernel::{pair_statistics, unit_angle};
use crate::error::{Error, Result};
use crate::moments;
use crate::rng::{derive_seed, task_rng};

pub const CACHE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 5000;
pub const MIN_SAMPLES: usize = 100;

/// Samples per RNG stream when building caches or QQ data.
const BATCH: usize = 250;

/// Fills `out` (length `count·d`) with uniform points on `S^{d−1}` by
/// normalising standard Gaussian vectors.
pub(crate) fn fill_uniform_sphere<R: Rng + ?Sized>(d: usize, out: &mut [f64], rng: &mut R) {
    for z in out.chunks_exact_mut(d) {
        loop {
            let mut sq = 0.0;
            for x in z.iter_mut() {
                *x = rng.sample(StandardNormal);
                sq += *x * *x;
            }
            if sq > 0.0 {
                let norm = sq.sqrt();
                z.iter_mut().for_each(|x| *x /= norm);
                break;
            }
        }
    }
}

pub fn sample_uniform_sphere<R: Rng + ?Sized>(
    d: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Err(Error::Domain("sphere dimension must be at least 1".into()));
    }
    let mut flat = vec![0.0; d * count];
    fill_uniform_sphere(d, &mut flat, rng);
    Ok(flat.chunks_exact(d).map(<[f64]>::to_vec).collect())
}

fn en_with_buffer<R: Rng + ?Sized>(d: usize, buf: &mut [f64], rng: &mut R) -> f64 {
    fill_uniform_sphere(d, buf, rng);
    pair_statistics(buf, d).0
}

/// One draw of `E_n` with `k` uniform points on `S^{d−1}`.
pub fn sample_en<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("sphere dimension must be at least 1".into()));
    }
    if k < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            available: k,
        });
    }
    let mut buf = vec![0.0; d * k];
    Ok(en_with_buffer(d, &mut buf, rng))
}

/// `count` draws of `k(E_n − β_d)` for one dimension, split into batches
/// with their own derived streams. Output order is fixed by batch index.
fn scaled_en_samples(d: u32, k: usize, count: usize, seed: u64) -> Vec<f64> {
    let beta = moments::beta_unchecked(d);
    let batches = count.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = task_rng(seed, &[b as u64]);
            let len = BATCH.min(count - b * BATCH);
            let mut buf = vec![0.0; d as usize * k];
            (0..len)
                .map(|_| k as f64 * (en_with_buffer(d as usize, &mut buf, &mut rng) - beta))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub d: u32,
    #[serde(rename = "M")]
    pub m: usize,
    /// Seed of this dimension's stream, derived from the cache seed.
    pub seed: u64,
    /// Draws of `k(E_n − β_d)`.
    pub samples: Vec<f64>,
}

/// Per-dimension samples of `k(E_n − β_d)`, all generated with the same `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCache {
    pub format_version: u32,
    pub k: usize,
    pub entries: Vec<CacheEntry>,
}

impl CalibrationCache {
    pub fn entry(&self, d: u32) -> Option<&CacheEntry> {
        self.entries.iter().find(|e| e.d == d)
    }

    /// Largest `D` such that every dimension `1..=D` has an entry.
    pub fn covered_dmax(&self) -> u32 {
        let mut d = 0;
        while self.entry(d + 1).is_some() {
            d += 1;
        }
        d
    }

    /// Checks that the cache was built with `k` and covers `1..=d_max`.
    pub fn check_compatible(&self, k: usize, d_max: u32) -> Result<()> {
        if self.k != k {
            return Err(Error::CalibrationMismatch(format!(
                "cache was generated with k = {}, estimator uses k = {k}",
                self.k
            )));
        }
        for d in 1..=d_max {
            if self.entry(d).is_none() {
                return Err(Error::CalibrationMismatch(format!(
                    "cache has no samples for dimension {d}"
                )));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != CACHE_FORMAT_VERSION {
            return Err(Error::CalibrationMismatch(format!(
                "unsupported cache format version {}",
                self.format_version
            )));
        }
        for e in &self.entries {
            if e.samples.len() != e.m || e.samples.is_empty() {
                return Err(Error::CalibrationMismatch(format!(
                    "entry d = {} declares M = {} but holds {} samples",
                    e.d,
                    e.m,
                    e.samples.len()
                )));
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let cache: Self = serde_json::from_reader(reader)?;
        cache.validate()?;
        Ok(cache)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer(&mut writer, self)?;
        writer.write_all(b"\n")?;
        Ok(())
    }
}

/// Builds `samples` draws of `k(E_n − β_d)` for every `d` in `1..=d_max`.
pub fn build_cache(d_max: u32, k: usize, samples: usize, seed: u64) -> Result<CalibrationCache> {
    if d_max == 0 {
        return Err(Error::Config("d_max must be at least 1".into()));
    }
    if k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::Config(format!(
            "at least {MIN_SAMPLES} samples per dimension are required, got {samples}"
        )));
    }
    let entries = (1..=d_max)
        .map(|d| {
            let d_seed = derive_seed(seed, &[u64::from(d)]);
            CacheEntry {
                d,
                m: samples,
                seed: d_seed,
                samples: scaled_en_samples(d, k, samples, d_seed),
            }
        })
        .collect();
    Ok(CalibrationCache {
        format_version: CACHE_FORMAT_VERSION,
        k,
        entries,
    })
}

/// Rule-of-thumb bandwidth `(4/(3M))^{1/5}`.
pub fn kde_bandwidth(m: usize) -> f64 {
    (4.0 / (3.0 * m as f64)).powf(0.2)
}

/// Gaussian kernel density estimate at `y` with bandwidth [`kde_bandwidth`].
pub fn kde_eval(samples: &[f64], y: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("kernel density needs at least one sample".into()));
    }
    let b = kde_bandwidth(samples.len());
    let norm = 1.0 / ((2.0 * PI).sqrt() * b * samples.len() as f64);
    let sum: f64 = samples
        .iter()
        .map(|s| {
            let z = (y - s) / b;
            (-0.5 * z * z).exp()
        })
        .sum();
    Ok(norm * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub normal_quantile: f64,
    pub sample_quantile: f64,
}

/// QQ data for `k(E_n − β_d)` against the standard normal.
///
/// Samples are standardised with the exact moments of the statistic,
/// mean 0 and standard deviation `k·σ_d/√C(k,2)`, then sorted and paired
/// with normal quantiles at plotting positions `(i − 0.5)/M`.
pub fn qq_data(d: u32, k: usize, samples: usize, seed: u64) -> Result<Vec<QqPoint>> {
    if d < 2 {
        return Err(Error::Domain(
            "k(E_n − β_1) is identically zero; QQ data needs d >= 2".into(),
        ));
    }
    if k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    if samples == 0 {
        return Err(Error::Config("at least one sample is required".into()));
    }
    let pairs = (k * (k - 1) / 2) as f64;
    let sd = k as f64 * moments::sigma_sq_unchecked(d).sqrt() / pairs.sqrt();
    let mut values = scaled_en_samples(d, k, samples, derive_seed(seed, &[u64::from(d)]));
    values.iter_mut().for_each(|v| *v /= sd);
    values.sort_by(f64::total_cmp);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let m = samples as f64;
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(i, v)| QqPoint {
            normal_quantile: normal.inverse_cdf((i as f64 + 0.5) / m),
            sample_quantile: v,
        })
        .collect())
}

pub fn write_qq_csv<W: Write>(points: &[QqPoint], mut writer: W) -> Result<()> {
    writeln!(writer, "normal_quantile,sample_quantile")?;
    for p in points {
        writeln!(writer, "{},{}", p.normal_quantile, p.sample_quantile)?;
    }
    writer.flush()?;
    Ok(())
}

/// Monte Carlo estimate of `E[(h(Z₁,Z₂) − β_d)(h(Z₁,Z₃) − β_d)]` and its
/// standard error over `triples` independent triples.
pub fn degeneracy_covariance(d: u32, triples: usize, seed: u64) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::Domain("sphere dimension must be at least 1".into()));
    }
    if triples < 2 {
        return Err(Error::Config("need at least two triples".into()));
    }
    let beta = moments::beta_unchecked(d);
    let dim = d as usize;
    let mut rng = task_rng(seed, &[u64::from(d)]);
    let mut z = vec![0.0; 3 * dim];
    let products: Vec<f64> = (0..triples)
        .map(|_| {
            fill_uniform_sphere(dim, &mut z, &mut rng);
            let (z1, rest) = z.split_at(dim);
            let (z2, z3) = rest.split_at(dim);
            let h12 = (unit_angle(z1, z2) - FRAC_PI_2).powi(2);
            let h13 = (unit_angle(z1, z3) - FRAC_PI_2).powi(2);
            (h12 - beta) * (h13 - beta)
        })
        .collect();
    let (mean, var) = mean_and_variance(&products);
    Ok((mean, (var / triples as f64).sqrt()))
}

/// `M` draws of `E_n`, for checking `E[E_n] = β_d` and
/// `C(k,2)·Var(E_n) = σ_d²`.
pub fn en_samples(d: u32, k: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::Domain("sphere dimension must be at least 1".into()));
    }
    if k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    let beta = moments::beta_unchecked(d);
    Ok(scaled_en_samples(d, k, samples, derive_seed(seed, &[u64::from(d)]))
        .into_iter()
        .map(|y| y / k as f64 + beta)
        .collect())
}

/// Sample mean and unbiased sample variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
