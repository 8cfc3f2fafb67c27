//! Nearest neighbours around a centre and the angle-variance U-statistic
//!
//! ```text
//! U_{k,n} = C(k,2)⁻¹ Σ_{i<j} (arccos⟨x̂_i, x̂_j⟩ − π/2)²,   x̂_i = (X_i − p)/‖X_i − p‖
//! ```

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Relative tolerance below which a point is treated as coincident with the
/// centre.
pub const COINCIDENT_RTOL: f64 = 1e-12;

const UNIT_TOL: f64 = 1e-9;

/// The `k` nearest non-coincident points of a centre, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub center: Vec<f64>,
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
    /// Unit vectors `(X_i − p)/‖X_i − p‖`, row-major, `k × m`.
    directions: Vec<f64>,
}

impl NeighborSet {
    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn directions(&self) -> &[f64] {
        &self.directions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleStat {
    /// `U_{k,n}`, in `[0, π²/4]`.
    pub u_value: f64,
    /// Mean pairwise angle `θ̄(p)`, in `[0, π]`.
    pub mean_angle: f64,
    pub k: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn is_coincident(distance: f64, center_norm: f64, point_norm: f64) -> bool {
    distance == 0.0 || distance <= COINCIDENT_RTOL * center_norm.max(point_norm)
}

/// Distances from `center` to every point that is not coincident with it,
/// as `(distance, index)` pairs in unspecified order.
pub(crate) fn usable_distances(cloud: &PointCloud, center: &[f64]) -> Vec<(f64, usize)> {
    let center_norm = norm(center);
    cloud
        .points()
        .enumerate()
        .filter_map(|(i, p)| {
            let dist = squared_distance(p, center).sqrt();
            (!is_coincident(dist, center_norm, norm(p))).then_some((dist, i))
        })
        .collect()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Keeps the `k` smallest `(distance, index)` pairs, sorted.
pub(crate) fn k_smallest(mut candidates: Vec<(f64, usize)>, k: usize) -> Vec<(f64, usize)> {
    if k == 0 {
        return Vec::new();
    }
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, by_distance_then_index);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_distance_then_index);
    candidates
}

/// Brute-force `k` nearest neighbours of `center`, skipping points that
/// coincide with it. Distance ties go to the lower point index.
pub fn knn(cloud: &PointCloud, center: &[f64], k: usize) -> Result<NeighborSet> {
    if center.len() != cloud.dim() {
        return Err(Error::Domain(format!(
            "centre has {} coordinates, cloud has {}",
            center.len(),
            cloud.dim()
        )));
    }
    if center.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("centre has non-finite coordinates".into()));
    }
    let usable = usable_distances(cloud, center);
    if usable.len() < k {
        return Err(Error::InsufficientSample {
            needed: k,
            available: usable.len(),
        });
    }
    let nearest = k_smallest(usable, k);
    let m = cloud.dim();
    let mut directions = Vec::with_capacity(k * m);
    for &(dist, i) in &nearest {
        directions.extend(cloud.point(i).iter().zip(center).map(|(x, c)| (x - c) / dist));
    }
    Ok(NeighborSet {
        center: center.to_vec(),
        indices: nearest.iter().map(|&(_, i)| i).collect(),
        distances: nearest.iter().map(|&(d, _)| d).collect(),
        directions,
    })
}

/// Angle between two unit vectors with the cosine clamped into `[-1, 1]`.
#[inline]
pub(crate) fn unit_angle(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    dot.clamp(-1.0, 1.0).acos()
}

/// The kernel `h(u, v) = (arccos⟨u, v⟩ − π/2)²` for unit vectors.
pub fn angle_h(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Domain("vectors have different lengths".into()));
    }
    for w in [u, v] {
        let n = norm(w);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!("vector norm {n} is not 1")));
        }
    }
    let dev = unit_angle(u, v) - FRAC_PI_2;
    Ok(dev * dev)
}

/// Mean of `h` and of the raw angle over all unordered pairs of the `k`
/// unit vectors stored row-major in `directions`.
pub(crate) fn pair_statistics(directions: &[f64], dim: usize) -> (f64, f64) {
    let k = directions.len() / dim;
    let mut h_sum = 0.0;
    let mut angle_sum = 0.0;
    for i in 0..k {
        let zi = &directions[i * dim..(i + 1) * dim];
        let mut h_row = 0.0;
        let mut a_row = 0.0;
        for j in (i + 1)..k {
            let angle = unit_angle(zi, &directions[j * dim..(j + 1) * dim]);
            let dev = angle - FRAC_PI_2;
            h_row += dev * dev;
            a_row += angle;
        }
        h_sum += h_row;
        angle_sum += a_row;
    }
    let pairs = (k * (k - 1) / 2) as f64;
    (h_sum / pairs, angle_sum / pairs)
}

/// `U_{k,n}` and `θ̄(p)` over all pairs of the neighbour directions.
pub fn u_statistic(neighbors: &NeighborSet) -> Result<AngleStat> {
    let k = neighbors.k();
    if k < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            available: k,
        });
    }
    let (u_value, mean_angle) = pair_statistics(&neighbors.directions, neighbors.dim());
    Ok(AngleStat {
        u_value,
        mean_angle,
        k,
    })
}
