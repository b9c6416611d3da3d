use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, Normal};

use super::{ecdf_sorted, sorted, StatsError};
use crate::stats::correlation::ranks;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the limiting Kolmogorov distribution, P(K > x).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // Jacobi theta form converges quickly for small x.
        let f = -PI * PI / (8.0 * x * x);
        let cdf: f64 = (1..=20)
            .map(|k| (f * ((2 * k - 1) as f64).powi(2)).exp())
            .sum::<f64>()
            * (2.0 * PI).sqrt()
            / x;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn check_sample(v: &[f64]) -> Result<(), StatsError> {
    if v.len() < 2 {
        return Err(StatsError::EmptyInput);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value at
/// effective size n·m/(n+m).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    check_sample(a)?;
    check_sample(b)?;
    let (sa, sb) = (sorted(a), sorted(b));
    let d = sa
        .iter()
        .chain(&sb)
        .map(|&x| (ecdf_sorted(&sa, x) - ecdf_sorted(&sb, x)).abs())
        .fold(0.0, f64::max);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let lambda = (n * m / (n + m)).sqrt() * d;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    })
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult, StatsError> {
    check_sample(values)?;
    let s = sorted(values);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
    })
}

/// Two-sided Mann–Whitney U test. The statistic is U of the first sample;
/// the p-value uses the normal approximation with tie and continuity
/// corrections.
pub fn mw_u(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    check_sample(a)?;
    check_sample(b)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let combined: Vec<f64> = a.iter().chain(b).copied().collect();
    let r = ranks(&combined);
    let r1: f64 = r[..a.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;

    let s = sorted(&combined);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < s.len() {
        let j = i + s[i..].partition_point(|&x| x == s[i]);
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let n = n1 + n2;
    let mu = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u1 - mu).abs() - 0.5) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.sf(z)).clamp(0.0, 1.0)
    };
    Ok(TestResult {
        statistic: u1,
        p_value,
    })
}
