//! Closed-form moments of the angle between two independent uniform points
//! on the unit sphere `S^{d-1}`.
//!
//! With `Θ_d = arccos⟨Z₁, Z₂⟩`:
//!
//! ```text
//! E[Θ_d]                 = π/2
//! Var[Θ_d]               = β_d
//! Var[(Θ_d − π/2)²]      = σ_d²
//! ```
//!
//! Writing `d − 2 = 2s + 1` (odd) or `d − 2 = 2s` (even):
//!
//! ```text
//! β_d  = π²/4  − 2 Σ_{j=0}^{s} 1/(2j+1)²          (odd)
//! β_d  = π²/12 − 2 Σ_{j=1}^{s} 1/(2j)²            (even)
//! σ_d² = −π⁴/8   + 12 Σ_{j=0}^{s} 1/(2j+1)⁴ + 2β_d²   (odd)
//! σ_d² = −π⁴/120 + 12 Σ_{j=1}^{s} 1/(2j)⁴   + 2β_d²   (even)
//! ```
//!
//! `d = 1` is the two-point sphere `{−1, +1}`: the angle is either 0 or π,
//! so `β_1 = π²/4` and `σ_1² = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Absolute tolerance used by [`theta_cdf`].
const CDF_TOLERANCE: f64 = 1e-12;

/// Parity split of `d − 2`: the number of terms in the finite sums and
/// whether the odd-denominator branch applies.
fn split(d: u32) -> (bool, u32) {
    // d = 1 falls in the odd branch with an empty sum.
    if d == 1 {
        return (true, 0);
    }
    let r = d - 2;
    if r % 2 == 1 {
        (true, r / 2 + 1)
    } else {
        (false, r / 2)
    }
}

/// Denominator of the `j`-th term (0-based) in the finite sums.
fn term_base(odd: bool, j: u32) -> f64 {
    if odd {
        f64::from(2 * j + 1)
    } else {
        f64::from(2 * (j + 1))
    }
}

/// `Σ 1/base^power` over the `terms` entries, accumulated smallest-first.
fn power_sum(odd: bool, terms: u32, power: i32) -> f64 {
    (0..terms)
        .rev()
        .map(|j| term_base(odd, j).powi(-power))
        .sum()
}

fn check_dimension(d: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Variance of the angle between two independent uniform points on `S^{d-1}`.
pub fn beta(d: u32) -> Result<f64> {
    check_dimension(d)?;
    Ok(beta_unchecked(d))
}

pub(crate) fn beta_unchecked(d: u32) -> f64 {
    let (odd, terms) = split(d);
    let head = if odd { PI * PI / 4.0 } else { PI * PI / 12.0 };
    head - 2.0 * power_sum(odd, terms, 2)
}

/// Variance of the centred squared angle `(Θ_d − π/2)²`.
pub fn sigma_sq(d: u32) -> Result<f64> {
    check_dimension(d)?;
    Ok(sigma_sq_unchecked(d))
}

pub(crate) fn sigma_sq_unchecked(d: u32) -> f64 {
    if d == 1 {
        return 0.0;
    }
    let (odd, terms) = split(d);
    let pi4 = PI.powi(4);
    let head = if odd { -pi4 / 8.0 } else { -pi4 / 120.0 };
    let b = beta_unchecked(d);
    head + 12.0 * power_sum(odd, terms, 4) + 2.0 * b * b
}

/// `P(Θ_d ≤ alpha)`, the normalised integral of `sin^{d−2}` over `[0, alpha]`.
pub fn theta_cdf(d: u32, alpha: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(
            "the angle density is only defined for d >= 2".into(),
        ));
    }
    if !(0.0..=PI).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, π]")));
    }
    let power = (d - 2) as i32;
    let density = |phi: f64| phi.sin().powi(power);
    // The density is symmetric about π/2; integrating only over [0, π/2]
    // keeps the half-way value exact.
    let half = adaptive_simpson(density, 0.0, PI / 2.0, CDF_TOLERANCE);
    let total = 2.0 * half;
    let mass = if alpha <= PI / 2.0 {
        adaptive_simpson(density, 0.0, alpha, CDF_TOLERANCE)
    } else {
        total - adaptive_simpson(density, 0.0, PI - alpha, CDF_TOLERANCE)
    };
    Ok((mass / total).clamp(0.0, 1.0))
}

/// Moment generating function `E[exp(s Θ_d)]`.
pub fn theta_mgf(d: u32, s: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(
            "the angle MGF is only defined for d >= 2".into(),
        ));
    }
    let (odd, terms) = split(d);
    let s2 = s * s;
    let lead = if odd {
        ((s * PI).exp() + 1.0) / (2.0 * (s2 + 1.0))
    } else if s == 0.0 {
        1.0
    } else {
        (s * PI).exp_m1() / (s * PI)
    };
    // In the odd branch the j = 0 factor is the 1/(s² + 1) already in `lead`.
    let first = usize::from(odd);
    let product: f64 = (first as u32..terms)
        .map(|j| {
            let b2 = term_base(odd, j).powi(2);
            b2 / (b2 + s2)
        })
        .product();
    Ok(lead * product)
}

/// Precomputed `β_d` and `σ_d²` for `d = 1..=d_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    d_max: u32,
    beta: Vec<f64>,
    sigma_sq: Vec<f64>,
}

impl MomentTable {
    pub fn new(d_max: u32) -> Result<Self> {
        if d_max == 0 {
            return Err(Error::Domain("d_max must be at least 1".into()));
        }
        let beta = (1..=d_max).map(beta_unchecked).collect();
        let sigma_sq = (1..=d_max).map(sigma_sq_unchecked).collect();
        Ok(Self {
            d_max,
            beta,
            sigma_sq,
        })
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    /// `β_d`; panics if `d` is outside `1..=d_max`.
    pub fn beta(&self, d: u32) -> f64 {
        self.beta[(d - 1) as usize]
    }

    /// `σ_d²`; panics if `d` is outside `1..=d_max`.
    pub fn sigma_sq(&self, d: u32) -> f64 {
        self.sigma_sq[(d - 1) as usize]
    }

    /// `(d, β_d, σ_d²)` rows in increasing `d`.
    pub fn rows(&self) -> impl Iterator<Item = (u32, f64, f64)> + '_ {
        (1..=self.d_max).map(move |d| (d, self.beta(d), self.sigma_sq(d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_reference_values() {
        assert_abs_diff_eq!(beta(1).unwrap(), PI * PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta(2).unwrap(), PI * PI / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta(3).unwrap(), PI * PI / 4.0 - 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta(4).unwrap(), PI * PI / 12.0 - 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(beta(3).unwrap(), 0.4674011, epsilon = 1e-7);
    }

    #[test]
    fn sigma_reference_values() {
        assert_abs_diff_eq!(sigma_sq(1).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sigma_sq(2).unwrap(), PI.powi(4) / 180.0, epsilon = 1e-14);
        let b3 = PI * PI / 4.0 - 2.0;
        assert_abs_diff_eq!(
            sigma_sq(3).unwrap(),
            -PI.powi(4) / 8.0 + 12.0 + 2.0 * b3 * b3,
            epsilon = 1e-14
        );
        let s10 = sigma_sq(10).unwrap();
        assert!((1.0 / 200.0..=2.0 / 81.0).contains(&s10), "{s10}");
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(matches!(beta(0), Err(Error::Domain(_))));
        assert!(matches!(sigma_sq(0), Err(Error::Domain(_))));
        assert!(MomentTable::new(0).is_err());
    }

    #[test]
    fn cdf_edge_cases() {
        assert_abs_diff_eq!(theta_cdf(2, PI / 4.0).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(theta_cdf(3, PI / 2.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(theta_cdf(3, PI / 3.0).unwrap(), 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(theta_cdf(7, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(theta_cdf(1, 0.5).is_err());
        assert!(theta_cdf(3, -0.1).is_err());
        assert!(theta_cdf(3, PI + 1e-9).is_err());
    }

    #[test]
    fn mgf_reference_values() {
        assert_abs_diff_eq!(theta_mgf(2, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(theta_mgf(2, 1e-12).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            theta_mgf(2, 1.0).unwrap(),
            (PI.exp() - 1.0) / PI,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            theta_mgf(3, 1.0).unwrap(),
            (PI.exp() + 1.0) / 4.0,
            epsilon = 1e-12
        );
        for d in 2..30 {
            assert_abs_diff_eq!(theta_mgf(d, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        }
        assert!(theta_mgf(1, 0.0).is_err());
    }

    #[test]
    fn table_matches_functions() {
        let table = MomentTable::new(12).unwrap();
        assert_eq!(table.rows().count(), 12);
        for (d, b, s) in table.rows() {
            assert_eq!(b, beta(d).unwrap());
            assert_eq!(s, sigma_sq(d).unwrap());
        }
    }

    #[test]
    fn large_dimension_stays_near_one_over_d() {
        for d in [1001_u32, 5000, 20000] {
            let b = beta(d).unwrap();
            let df = f64::from(d);
            assert!(b >= 1.0 / df - 1e-12 && b <= 1.0 / (df - 1.0) + 1e-12);
        }
    }
}
