use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{median, ks_two_sample, mw_u, StatsError, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TestKind {
    Ks,
    MannWhitney,
}

impl TestKind {
    pub const ALL: [TestKind; 2] = [TestKind::Ks, TestKind::MannWhitney];

    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Ks => "ks",
            TestKind::MannWhitney => "mw",
        }
    }

    fn run(self, a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
        match self {
            TestKind::Ks => ks_two_sample(a, b),
            TestKind::MannWhitney => mw_u(a, b),
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsConfig {
    pub alpha: f64,
    pub repetitions: usize,
    pub sample_sizes: Vec<usize>,
    /// Upper bounds applied to both samples before drawing. `None` keeps the
    /// whole sample.
    pub max_tood_thresholds: Vec<Option<f64>>,
    pub tests: Vec<TestKind>,
    pub rng_seed: u64,
    pub parallel: bool,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            alpha: 0.05,
            repetitions: 1000,
            sample_sizes: vec![10, 50, 100, 200, 500],
            max_tood_thresholds: vec![None, Some(800.0), Some(1000.0), Some(2000.0), Some(5000.0)],
            tests: TestKind::ALL.to_vec(),
            rng_seed: 0,
            parallel: true,
        }
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(StatsError::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.repetitions == 0 {
            return Err(StatsError::InvalidConfig("repetitions must be positive".into()));
        }
        if self.sample_sizes.iter().any(|&n| n < 2) {
            return Err(StatsError::InvalidConfig("sample sizes must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub median_p: f64,
    /// Share of repetitions with p < alpha.
    pub rejection_fraction: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleCell {
    pub threshold: Option<f64>,
    pub sample_size: usize,
    pub test: TestKind,
    pub outcome: Result<CellStats, StatsError>,
}

/// Seed for one repetition, independent of scheduling.
fn rep_rng(seed: u64, threshold_idx: usize, size: usize, rep: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key
        .chunks_exact_mut(8)
        .zip([seed, threshold_idx as u64, size as u64, rep as u64])
    {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn draw(values: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    sample(rng, values.len(), n).into_iter().map(|i| values[i]).collect()
}

/// For every threshold and sample size, repeatedly draws `n` values without
/// replacement from each sample and runs each test, reporting the median
/// p-value and the rejection fraction. Cells are ordered by threshold, size,
/// then test.
pub fn subsample_protocol(
    tood: &[f64],
    pfet: &[f64],
    cfg: &StatsConfig,
) -> Result<Vec<SubsampleCell>, StatsError> {
    cfg.validate()?;
    if tood.is_empty() || pfet.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut cells = Vec::new();
    for (ti, &threshold) in cfg.max_tood_thresholds.iter().enumerate() {
        let keep = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .copied()
                .filter(|x| threshold.is_none_or(|t| *x <= t))
                .collect()
        };
        let (a, b) = (keep(tood), keep(pfet));
        for &n in &cfg.sample_sizes {
            let available = a.len().min(b.len());
            if available < n {
                for &test in &cfg.tests {
                    cells.push(SubsampleCell {
                        threshold,
                        sample_size: n,
                        test,
                        outcome: Err(StatsError::InsufficientData { available, needed: n }),
                    });
                }
                continue;
            }
            let one_rep = |rep: usize| -> Result<Vec<f64>, StatsError> {
                let mut rng = rep_rng(cfg.rng_seed, ti, n, rep);
                let sa = draw(&a, n, &mut rng);
                let sb = draw(&b, n, &mut rng);
                cfg.tests
                    .iter()
                    .map(|t| t.run(&sa, &sb).map(|r| r.p_value))
                    .collect()
            };
            let reps: Result<Vec<Vec<f64>>, StatsError> = if cfg.parallel {
                (0..cfg.repetitions).into_par_iter().map(one_rep).collect()
            } else {
                (0..cfg.repetitions).map(one_rep).collect()
            };
            let reps = reps?;
            for (k, &test) in cfg.tests.iter().enumerate() {
                let ps: Vec<f64> = reps.iter().map(|r| r[k]).collect();
                let rejected = ps.iter().filter(|&&p| p < cfg.alpha).count();
                cells.push(SubsampleCell {
                    threshold,
                    sample_size: n,
                    test,
                    outcome: Ok(CellStats {
                        median_p: median(&ps),
                        rejection_fraction: rejected as f64 / ps.len() as f64,
                        repetitions: ps.len(),
                    }),
                });
            }
        }
    }
    Ok(cells)
}
