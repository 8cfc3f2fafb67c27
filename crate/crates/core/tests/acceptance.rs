//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use angledim_core::bench::{run_bench, BenchConfig, BenchReport, Estimator};
use angledim_core::calibration::{degeneracy_covariance, en_samples, mean_and_variance};
use angledim_core::quadrature::adaptive_simpson;
use angledim_core::rng::{derive_seed, task_rng};
use angledim_core::{
    beta, build_cache, estimate_local, qq_data, sample_uniform_sphere, sigma_sq, LbConfig,
    LocalConfig, ManifoldId, Method, PointCloud,
};
use rand::Rng;

const SEED: u64 = 20_190_101;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_time(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn oracle_moments(d: u32) -> (f64, f64) {
    let p = (d - 2) as i32;
    let half = |f: &dyn Fn(f64) -> f64| adaptive_simpson(f, 0.0, FRAC_PI_2, 1e-14);
    let z = half(&|x: f64| x.sin().powi(p));
    let m2 = half(&|x: f64| (x - FRAC_PI_2).powi(2) * x.sin().powi(p)) / z;
    let m4 = half(&|x: f64| (x - FRAC_PI_2).powi(4) * x.sin().powi(p)) / z;
    (m2, m4 - m2 * m2)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_b: f64 = 0.0;
    let mut worst_s: f64 = 0.0;
    for d in 2..=50 {
        let (b, s) = oracle_moments(d);
        worst_b = worst_b.max((beta(d).unwrap() - b).abs());
        worst_s = worst_s.max((sigma_sq(d).unwrap() - s).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst_b <= 1e-9 && worst_s <= 1e-8 && within_time(elapsed, 5),
        format!("max |Δβ| = {worst_b:.2e}, max |Δσ²| = {worst_s:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let beta_ok = (2..=100u32).all(|d| {
        let (b, df) = (beta(d).unwrap(), f64::from(d));
        1.0 / df <= b && b <= 1.0 / (df - 1.0)
    });
    let sigma_ok = (4..=100u32).all(|d| {
        let (s, df) = (sigma_sq(d).unwrap(), f64::from(d));
        1.0 / (2.0 * df * df) <= s && s <= 2.0 / ((df - 1.0) * (df - 1.0))
    });
    outcome(
        beta_ok && sigma_ok,
        format!("β bounds d 2..100: {beta_ok}, σ² bounds d 4..100: {sigma_ok}"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();
    for d in [2, 5, 10] {
        let (mean, se) = degeneracy_covariance(d, 100_000, SEED).unwrap();
        pass &= mean.abs() <= 4.0 * se;
        notes.push(format!("cov d={d}: {:.2} SE", mean / se));
    }
    let k = 100;
    let pairs = (k * (k - 1) / 2) as f64;
    for d in [3, 5, 10] {
        let (_, var) = mean_and_variance(&en_samples(d, k, 5000, SEED).unwrap());
        let ratio = pairs * var / sigma_sq(d).unwrap();
        pass &= (ratio - 1.0).abs() <= 0.1;
        notes.push(format!("C(k,2)Var/σ² d={d}: {ratio:.3}"));
    }
    let elapsed = start.elapsed();
    pass &= within_time(elapsed, 120);
    notes.push(format!("{elapsed:.2?}"));
    outcome(pass, notes.join(", "))
}

fn table_bench(manifolds: &[ManifoldId], estimators: &[Estimator]) -> (BenchReport, Duration) {
    let cfg = BenchConfig {
        manifolds: manifolds.to_vec(),
        trials: 10,
        n: 2500,
        estimators: estimators.to_vec(),
        seed: SEED,
        lb: LbConfig { k1: 10, k2: 20 },
        ..BenchConfig::default()
    };
    let start = Instant::now();
    let report = run_bench(&cfg, None).unwrap();
    (report, start.elapsed())
}

fn criterion_4() -> Outcome {
    use ManifoldId::*;
    let exact = [M2, M5, M7, M10, M11, M13];
    let all: Vec<ManifoldId> = exact.iter().copied().chain([M1, M9]).collect();
    let (report, elapsed) = table_bench(&all, &[Estimator::Basic]);
    let mse = |id| report.cell(id, Estimator::Basic).unwrap().mse;
    let mut pass = exact.iter().all(|&id| mse(id) <= 0.2);
    pass &= mse(M1) <= 2.5;
    pass &= (2.0..=25.0).contains(&mse(M9));
    pass &= within_time(elapsed, 600);
    let cells: Vec<String> = all.iter().map(|&id| format!("{id} {:.2}", mse(id))).collect();
    outcome(pass, format!("MSE {}; {elapsed:.2?}", cells.join(", ")))
}

fn criterion_5() -> Outcome {
    let ids = [ManifoldId::M2, ManifoldId::M13];
    let (report, _) = table_bench(&ids, &[Estimator::LevinaBickel]);
    let mses: Vec<f64> = ids
        .iter()
        .map(|&id| report.cell(id, Estimator::LevinaBickel).unwrap().mse)
        .collect();
    outcome(
        mses.iter().all(|&m| m <= 0.2),
        format!("LB MSE M2 {:.2}, M13 {:.2}", mses[0], mses[1]),
    )
}

/// `n` uniform points in the unit ball of `ℝ^d`.
fn uniform_ball(d: usize, n: usize, seed: u64) -> PointCloud {
    let mut rng = task_rng(seed, &[]);
    let dirs = sample_uniform_sphere(d, n, &mut rng).unwrap();
    let coords = dirs
        .into_iter()
        .flat_map(|v| {
            let r = rng.gen::<f64>().powf(1.0 / d as f64);
            v.into_iter().map(move |x| r * x)
        })
        .collect();
    PointCloud::from_flat(d, coords).unwrap()
}

fn criterion_6() -> Outcome {
    let ks = [50, 100, 200, 400];
    let reps = 200;
    let mut pass = true;
    let mut notes = Vec::new();
    for d in 2..=6usize {
        let mut failures = [0usize; 4];
        for rep in 0..reps {
            let cloud = uniform_ball(d, 5000, derive_seed(SEED, &[d as u64, rep]));
            let centre = vec![0.0; d];
            for (slot, &k) in failures.iter_mut().zip(&ks) {
                let cfg = LocalConfig {
                    k: Some(k),
                    d_max: Some(10),
                    method: Method::Basic,
                };
                let est = estimate_local(&cloud, &centre, &cfg, None).unwrap();
                *slot += usize::from(est.d_hat as usize != d);
            }
        }
        let rates: Vec<f64> = failures.iter().map(|&f| f as f64 / reps as f64).collect();
        let rises: Vec<f64> = rates.windows(2).map(|w| w[1] - w[0]).filter(|&x| x > 0.0).collect();
        pass &= rises.is_empty() || (rises.len() == 1 && rises[0] <= 0.02);
        let shown: Vec<String> = rates.iter().map(|r| format!("{:.1}%", 100.0 * r)).collect();
        notes.push(format!("d={d} [{}]", shown.join(" ")));
    }
    outcome(pass, format!("failure rate by k 50/100/200/400: {}", notes.join(", ")))
}

fn criterion_7() -> Outcome {
    let ids = [ManifoldId::M2, ManifoldId::M7];
    let cache = build_cache(5, 34, 5000, SEED).unwrap();
    let cfg = BenchConfig {
        manifolds: ids.to_vec(),
        trials: 10,
        n: 2500,
        estimators: vec![Estimator::Basic, Estimator::Kernel],
        seed: SEED,
        ..BenchConfig::default()
    };
    let report = run_bench(&cfg, Some(&cache)).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for id in ids {
        let basic = report.cell(id, Estimator::Basic).unwrap().mse;
        let kernel = report.cell(id, Estimator::Kernel).unwrap().mse;
        pass &= (kernel - basic).abs() <= 0.3;
        notes.push(format!("{id} basic {basic:.2} kernel {kernel:.2}"));
    }
    outcome(pass, notes.join(", "))
}

fn criterion_8() -> Outcome {
    let m = 10_000;
    let points = qq_data(50, 500, m, SEED).unwrap();
    let values: Vec<f64> = points.iter().map(|p| p.sample_quantile).collect();
    let (mean, var) = mean_and_variance(&values);
    let pass = mean.abs() <= 4.0 / (m as f64).sqrt() && (var - 1.0).abs() <= 0.1;
    outcome(pass, format!("mean {mean:.4}, variance {var:.4}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 closed forms match quadrature", criterion_1),
        ("2 moment bounds", criterion_2),
        ("3 degeneracy and variance identities", criterion_3),
        ("4 basic estimator on benchmark manifolds", criterion_4),
        ("5 Levina-Bickel baseline", criterion_5),
        ("6 consistency on uniform balls", criterion_6),
        ("7 kernel and basic agree", criterion_7),
        ("8 QQ standardisation", criterion_8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let result = run();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {}", result.detail);
        failed += usize::from(!result.pass);
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
