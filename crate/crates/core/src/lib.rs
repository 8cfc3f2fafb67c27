//! Intrinsic dimension estimation from the variance of angles between
//! nearest neighbours.
//!
//! Around a centre `p`, the directions to the `k` nearest sample points
//! behave like uniform points on the unit sphere of the tangent space, and
//! the variance of the angle between two such points, `β_d`, falls off like
//! `1/d`. The crate computes the angle-variance U-statistic, maps it to a
//! dimension (nearest `β_d`, discriminant thresholds, or calibrated kernel
//! densities), and aggregates local estimates into a global one.
//!
//! Also included: a Levina–Bickel baseline, generators for thirteen
//! benchmark manifolds, and a harness reporting MSE/MPE over seeded trials.

pub mod angle_kernel;
pub mod bench;
pub mod calibration;
pub mod cloud;
pub mod error;
pub mod global;
pub mod levina_bickel;
pub mod local;
pub mod manifolds;
pub mod moments;
pub mod quadrature;
pub mod rng;

pub use angle_kernel::{angle_h, knn, u_statistic, AngleStat, NeighborSet};
pub use calibration::{build_cache, kde_eval, qq_data, sample_en, sample_uniform_sphere, CalibrationCache};
pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use global::{default_c, estimate_global, GlobalConfig, GlobalEstimate};
pub use levina_bickel::{lb_global, lb_local, LbConfig, LbEstimate};
pub use local::{
    default_k, estimate_basic, estimate_discriminant, estimate_kernel, estimate_local, LocalConfig,
    LocalEstimate, Method,
};
pub use manifolds::{generate, membership_residual, ManifoldId, ManifoldSpec};
pub use moments::{beta, sigma_sq, theta_cdf, theta_mgf, MomentTable};
