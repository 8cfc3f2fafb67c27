//! Seeded generators for the thirteen benchmark manifolds.
//!
//! Points are uniform in each manifold's parameter domain (exact surface
//! uniformity only for the sphere). No noise is added. The formulas are
//! listed in `MANIFOLDS.md` at the repository root.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::fill_uniform_sphere;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::{task_rng, TaskRng};

/// Points per RNG stream.
const BATCH: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ManifoldId {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    M8,
    M9,
    M10,
    M11,
    M12,
    M13,
}

impl ManifoldId {
    pub const ALL: [ManifoldId; 13] = [
        Self::M1,
        Self::M2,
        Self::M3,
        Self::M4,
        Self::M5,
        Self::M6,
        Self::M7,
        Self::M8,
        Self::M9,
        Self::M10,
        Self::M11,
        Self::M12,
        Self::M13,
    ];

    /// 1-based table number.
    pub fn number(self) -> u32 {
        self as u32 + 1
    }

    pub fn spec(self) -> ManifoldSpec {
        let (d, m, description) = match self {
            Self::M1 => (9, 10, "Sphere S^9"),
            Self::M2 => (3, 5, "Affine subspace"),
            Self::M3 => (4, 6, "Nonlinear manifold"),
            Self::M4 => (4, 8, "Nonlinear manifold"),
            Self::M5 => (2, 3, "Helix"),
            Self::M6 => (6, 36, "Nonlinear manifold"),
            Self::M7 => (2, 3, "Swiss roll"),
            Self::M8 => (12, 72, "Highly curved manifold"),
            Self::M9 => (20, 20, "Full-dimensional cube"),
            Self::M10 => (9, 10, "9-dimensional cube"),
            Self::M11 => (2, 3, "Ten-times twisted Mobius band"),
            Self::M12 => (10, 10, "Multivariate Gaussian"),
            Self::M13 => (1, 10, "Curve"),
        };
        ManifoldSpec {
            id: self,
            d,
            m,
            description,
        }
    }
}

impl fmt::Display for ManifoldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.number())
    }
}

impl FromStr for ManifoldId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let number: usize = s
            .trim()
            .strip_prefix(['M', 'm'])
            .and_then(|rest| rest.parse().ok())
            .ok_or_else(|| Error::Config(format!("unknown manifold {s:?}")))?;
        number
            .checked_sub(1)
            .and_then(|i| Self::ALL.get(i).copied())
            .ok_or_else(|| Error::Config(format!("unknown manifold {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ManifoldSpec {
    pub id: ManifoldId,
    /// Intrinsic dimension.
    pub d: u32,
    /// Ambient dimension.
    pub m: usize,
    pub description: &'static str,
}

/// Generates `n` points of manifold `id`, reproducibly under `seed`.
pub fn generate(id: ManifoldId, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Config("at least one point is required".into()));
    }
    let m = id.spec().m;
    let batches = n.div_ceil(BATCH);
    let coords = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = task_rng(seed, &[b as u64]);
            let len = BATCH.min(n - b * BATCH);
            let mut out = vec![0.0; len * m];
            for x in out.chunks_exact_mut(m) {
                sample_point(id, &mut rng, x);
            }
            out
        })
        .collect::<Vec<_>>()
        .concat();
    PointCloud::from_flat(m, coords)
}

fn sample_point(id: ManifoldId, rng: &mut TaskRng, x: &mut [f64]) {
    match id {
        ManifoldId::M1 => fill_uniform_sphere(10, x, rng),
        ManifoldId::M2 => {
            let u: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            x.copy_from_slice(&affine_3to5(u));
        }
        ManifoldId::M3 => {
            let p: [f64; 4] = std::array::from_fn(|_| rng.gen());
            x.copy_from_slice(&nonlinear_4to6(p));
        }
        ManifoldId::M4 => {
            let p: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
            trig_family(&p, 2, x);
        }
        ManifoldId::M5 => {
            let s = rng.gen_range(-1.0..1.0);
            let t = rng.gen_range(0.0..HELIX_TURNS * TAU);
            x.copy_from_slice(&helicoid(s, t));
        }
        ManifoldId::M6 => {
            let p: Vec<f64> = (0..6).map(|_| rng.gen()).collect();
            trig_family(&p, 6, x);
        }
        ManifoldId::M7 => {
            let t = 1.5 * PI * (1.0 + 2.0 * rng.gen::<f64>());
            let h = SWISS_HEIGHT * rng.gen::<f64>();
            x.copy_from_slice(&[t * t.cos(), h, t * t.sin()]);
        }
        ManifoldId::M8 => {
            let p: Vec<f64> = (0..12).map(|_| rng.gen()).collect();
            trig_family(&p, 6, x);
        }
        ManifoldId::M9 => x.iter_mut().for_each(|v| *v = rng.gen()),
        ManifoldId::M10 => {
            x[..9].iter_mut().for_each(|v| *v = rng.gen());
            x[9] = 0.0;
        }
        ManifoldId::M11 => {
            let u = rng.gen_range(0.0..TAU);
            let v = rng.gen_range(-1.0..1.0);
            x.copy_from_slice(&mobius(u, v));
        }
        ManifoldId::M12 => x.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
        ManifoldId::M13 => x.copy_from_slice(&curve(rng.gen())),
    }
}

const AFFINE: [[f64; 3]; 5] = [
    [1.2, -0.5, 0.0],
    [0.5, 0.0, 0.9],
    [-0.5, -0.2, 1.0],
    [0.4, -0.9, -0.1],
    [1.1, 0.0, -0.3],
];
const AFFINE_OFFSET: [f64; 5] = [3.0, -1.0, 0.0, 0.0, 8.0];

fn affine_3to5(u: [f64; 3]) -> [f64; 5] {
    std::array::from_fn(|r| AFFINE[r].iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() + AFFINE_OFFSET[r])
}

fn nonlinear_4to6(p: [f64; 4]) -> [f64; 6] {
    let [p0, p1, p2, p3] = p;
    [
        p1 * p1 * (TAU * p0).cos(),
        p2 * p2 * (TAU * p0).sin(),
        p1 + p2 + (p1 - p3).powi(2),
        p1 - 2.0 * p2 + (p0 - p3).powi(2),
        -p1 - 2.0 * p2 + (p2 - p3).powi(2),
        p0 * p0 - p1 * p1 + p2 * p2 - p3 * p3,
    ]
}

/// `features` coordinates per latent coordinate `p_i`, paired with
/// `p_j`, `j = (i + 1) mod d`.
fn trig_family(p: &[f64], features: usize, x: &mut [f64]) {
    let d = p.len();
    for i in 0..d {
        let (a, b) = (p[i], p[(i + 1) % d]);
        let all = [
            (a * b.cos()).tan(),
            (b * a.cos()).tan(),
            (a * b.sin()).atan(),
            (b * a.sin()).atan(),
            (PI * a).sin() * (PI * b).cos(),
            a * a * b,
        ];
        x[i * features..(i + 1) * features].copy_from_slice(&all[..features]);
    }
}

const HELIX_TURNS: f64 = 2.0;
const HELIX_PITCH: f64 = 0.5;

fn helicoid(s: f64, t: f64) -> [f64; 3] {
    [s * t.cos(), s * t.sin(), HELIX_PITCH * t]
}

const SWISS_HEIGHT: f64 = 21.0;

const MOBIUS_TWIST: f64 = 5.0;

fn mobius(u: f64, v: f64) -> [f64; 3] {
    let w = 1.0 + 0.5 * v * (MOBIUS_TWIST * u).cos();
    [w * u.cos(), w * u.sin(), 0.5 * v * (MOBIUS_TWIST * u).sin()]
}

fn curve(t: f64) -> [f64; 10] {
    let mut x = [0.0; 10];
    x[0] = t;
    for i in 1..=4 {
        let w = TAU * i as f64;
        x[2 * i - 1] = (w * t).sin() / w;
        x[2 * i] = (w * t).cos() / w;
    }
    x[9] = t * t;
    x
}

/// Distance outside the interval `[lo, hi]`.
fn outside(v: f64, lo: f64, hi: f64) -> f64 {
    (lo - v).max(0.0) + (v - hi).max(0.0)
}

/// Solves the top 3×3 block of the affine map for the latent parameters.
fn affine_latent(x: &[f64]) -> [f64; 3] {
    let a = [AFFINE[0], AFFINE[1], AFFINE[2]];
    let rhs: [f64; 3] = std::array::from_fn(|r| x[r] - AFFINE_OFFSET[r]);
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(a);
    std::array::from_fn(|col| {
        let mut m = a;
        for r in 0..3 {
            m[r][col] = rhs[r];
        }
        det3(m) / det
    })
}

/// Residual of `point` against the implicit description of manifold `id`;
/// zero on the manifold.
pub fn membership_residual(id: ManifoldId, point: &[f64]) -> Result<f64> {
    let spec = id.spec();
    if point.len() != spec.m {
        return Err(Error::Domain(format!(
            "{id} points have {} coordinates, got {}",
            spec.m,
            point.len()
        )));
    }
    let residual = match id {
        ManifoldId::M1 => (point.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs(),
        ManifoldId::M2 => {
            let u = affine_latent(point);
            let image = affine_3to5(u);
            let off_plane = point
                .iter()
                .zip(&image)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            off_plane + u.iter().map(|&v| outside(v, -2.0, 2.0)).sum::<f64>()
        }
        ManifoldId::M5 => {
            let t = point[2] / HELIX_PITCH;
            let across = (point[0] * t.sin() - point[1] * t.cos()).abs();
            let s = point[0] * t.cos() + point[1] * t.sin();
            across + outside(s, -1.0, 1.0) + outside(t, 0.0, HELIX_TURNS * TAU)
        }
        ManifoldId::M7 => {
            let r = point[0].hypot(point[2]);
            let phi = point[2].atan2(point[0]);
            let turns = ((r - phi) / TAU).round();
            let t = phi + TAU * turns;
            (r - t).abs() + outside(t, 1.5 * PI, 4.5 * PI) + outside(point[1], 0.0, SWISS_HEIGHT)
        }
        ManifoldId::M9 => point.iter().map(|&v| outside(v, 0.0, 1.0)).sum(),
        ManifoldId::M10 => {
            point[..9].iter().map(|&v| outside(v, 0.0, 1.0)).sum::<f64>() + point[9].abs()
        }
        ManifoldId::M11 => {
            let u = point[1].atan2(point[0]);
            let rho = point[0].hypot(point[1]) - 1.0;
            let (sin, cos) = (MOBIUS_TWIST * u).sin_cos();
            // (rho, z) must be parallel to (cos 5u, sin 5u) with |v| <= 1.
            let across = (rho * sin - point[2] * cos).abs();
            let v = 2.0 * (rho * cos + point[2] * sin);
            across + outside(v, -1.0, 1.0)
        }
        ManifoldId::M13 => {
            let t = point[0];
            let image = curve(t);
            let off = point
                .iter()
                .zip(&image)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            off + outside(t, 0.0, 1.0)
        }
        ManifoldId::M3 | ManifoldId::M4 | ManifoldId::M6 | ManifoldId::M8 | ManifoldId::M12 => {
            return Err(Error::UnsupportedCheck(id.to_string()))
        }
    };
    Ok(residual)
}
