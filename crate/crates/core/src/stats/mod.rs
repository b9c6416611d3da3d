//! Descriptive statistics, distribution comparison and the repeated
//! subsampling protocol used to compare TOOD and PFET samples.

mod correlation;
mod fit;
mod hypothesis;
mod subsample;

pub use correlation::{correlations, kendall_tau_b, pearson, ranks, spearman, Correlations};
pub use fit::{fit_exponential, ExponentialFit};
pub use hypothesis::{
    kolmogorov_sf, ks_one_sample, ks_two_sample, mw_u, TestResult,
};
pub use subsample::{subsample_protocol, CellStats, StatsConfig, SubsampleCell, TestKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("paired inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input is constant; coefficient undefined")]
    DegenerateInput,
    #[error("only {available} values available, {needed} needed")]
    InsufficientData { available: usize, needed: usize },
    #[error("mean is zero")]
    ZeroMean,
    #[error("negative value in a non-negative sample")]
    Negative,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// A labelled sample of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector {
    pub label: String,
    values: Vec<f64>,
}

impl SampleVector {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(SampleVector {
            label: label.into(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

pub fn describe(values: &[f64]) -> Result<Summary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let stddev = if values.len() > 1 {
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Summary {
        count: values.len(),
        mean,
        stddev,
        min,
        max,
    })
}

pub(crate) fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Step points of the empirical CDF: each distinct value with the fraction of
/// the sample less than or equal to it.
pub fn ecdf_points(values: &[f64]) -> Result<Vec<(f64, f64)>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let s = sorted(values);
    let n = s.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in s.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => out.push((x, frac)),
        }
    }
    Ok(out)
}

/// Fraction of `sorted_values` that is ≤ x.
pub(crate) fn ecdf_sorted(sorted_values: &[f64], x: f64) -> f64 {
    sorted_values.partition_point(|&v| v <= x) as f64 / sorted_values.len() as f64
}

/// Quantile with linear interpolation between order statistics
/// (h = (n − 1)·p).
pub fn quantile_sorted(sorted_values: &[f64], p: f64) -> f64 {
    let n = sorted_values.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted_values[lo] + (h - lo as f64) * (sorted_values[hi] - sorted_values[lo])
}

/// `q` matched quantile pairs at evenly spaced probabilities 0, 1/(q−1), …, 1.
pub fn qq_pairs(a: &[f64], b: &[f64], q: usize) -> Result<Vec<(f64, f64)>, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if q < 2 {
        return Err(StatsError::InvalidConfig("quantile count must be at least 2".into()));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    Ok((0..q)
        .map(|k| {
            let p = k as f64 / (q - 1) as f64;
            (quantile_sorted(&sa, p), quantile_sorted(&sb, p))
        })
        .collect())
}

/// Median of a non-empty slice.
pub(crate) fn median(values: &[f64]) -> f64 {
    let s = sorted(values);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn describe_examples() {
        let s = describe(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((s.mean, s.stddev), (0.0, 0.0));
        let s = describe(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.stddev - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert_eq!((s.min, s.max, s.count), (1.0, 4.0, 4));
        assert_eq!(describe(&[]), Err(StatsError::EmptyInput));
    }

    #[test]
    fn ecdf_example() {
        let pts = ecdf_points(&[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert_eq!(pts, vec![(1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]);
        assert_eq!(ecdf_sorted(&[1.0, 2.0, 2.0, 4.0], 2.0), 0.75);
    }

    #[test]
    fn qq_identity_and_interpolation() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        for (a, b) in qq_pairs(&x, &x, 7).unwrap() {
            assert_eq!(a, b);
        }
        // numpy.quantile([1, 2, 3, 4], [0, 1/3, 2/3, 1]) → 1, 2, 3, 4
        let q = qq_pairs(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0], 4).unwrap();
        assert_eq!(q.iter().map(|p| p.0).collect::<Vec<_>>(), [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert!(qq_pairs(&x, &x, 1).is_err());
    }

    #[test]
    fn sample_vector_rejects_nan() {
        assert_eq!(SampleVector::new("x", vec![1.0, f64::NAN]), Err(StatsError::NonFinite));
    }
}
