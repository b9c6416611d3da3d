use super::{ks_one_sample, StatsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub n: usize,
    /// Maximum-likelihood rate, 1 / mean.
    pub rate: f64,
    pub ks_statistic: f64,
    /// One-sample KS p-value against the fitted distribution. The rate is
    /// estimated from the same data, so this is optimistic and descriptive only.
    pub ks_gof_p: f64,
}

pub fn fit_exponential(values: &[f64]) -> Result<ExponentialFit, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if values.iter().any(|v| *v < 0.0) {
        return Err(StatsError::Negative);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return Err(StatsError::ZeroMean);
    }
    let rate = 1.0 / mean;
    let (ks_statistic, ks_gof_p) = if values.len() >= 2 {
        let r = ks_one_sample(values, |x| 1.0 - (-rate * x).exp())?;
        (r.statistic, r.p_value)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ExponentialFit {
        n: values.len(),
        rate,
        ks_statistic,
        ks_gof_p,
    })
}
