//! Replicated simulate-and-estimate studies.
//!
//! Replication `i` (1-based) draws its path from stream `i` of the base
//! seed, so each replication is reproducible on its own and the batch result
//! does not depend on how replications are scheduled across threads.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{build_design, solve_cls, ThetaVector};
use crate::inference::normality::{histogram, qq_data, HistogramBin, NormalityReport};
use crate::model::ModelParams;
use crate::simulate::{simulate_path, RngStream};

pub const HISTOGRAM_BINS: usize = 30;
pub const MIN_NORMALITY_SAMPLE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub params: ModelParams,
    pub len: usize,
    pub p: usize,
    pub n_experiments: usize,
    pub base_seed: u64,
    pub cap_negatives: bool,
}

impl McConfig {
    pub fn new(
        params: ModelParams,
        len: usize,
        p: usize,
        n_experiments: usize,
        base_seed: u64,
    ) -> Self {
        Self {
            params,
            len,
            p,
            n_experiments,
            base_seed,
            cap_negatives: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.ensure_valid()?;
        if self.n_experiments == 0 {
            return Err(Error::InvalidParameter {
                field: "n_experiments",
                reason: "must be at least 1".into(),
            });
        }
        if self.len == 0 || self.p > self.len - 1 {
            return Err(Error::LagTooLarge {
                p: self.p,
                max: self.len.saturating_sub(1),
            });
        }
        Ok(())
    }

    /// `(nu, alpha_1, ..., alpha_p)`, zero-padded past the kernel support.
    pub fn truth(&self) -> ThetaVector {
        ThetaVector::new(
            self.params.nu,
            (1..=self.p).map(|k| self.params.alpha(k)).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    /// Mean of the raw estimates.
    pub mean_theta: Vec<f64>,
    pub mse: f64,
    pub rel_err_theta: f64,
    pub rel_err_alpha: f64,
    /// Raw estimates of the successful replications, one row each.
    #[serde(skip)]
    pub per_component_samples: Vec<Vec<f64>>,
    /// 1-based replication index of each row of `per_component_samples`.
    #[serde(skip)]
    pub replications: Vec<usize>,
    pub failures: usize,
}

impl McSummary {
    pub fn n_successful(&self) -> usize {
        self.per_component_samples.len()
    }

    /// Column `component` of the raw samples (0 = mu, k = beta_k).
    pub fn component(&self, component: usize) -> Vec<f64> {
        self.per_component_samples
            .iter()
            .map(|row| row[component])
            .collect()
    }
}

/// Simulates and fits replication `index` of `config`.
pub fn replicate(config: &McConfig, index: usize) -> Result<ThetaVector> {
    let mut rng = RngStream::new(config.base_seed, index as u64);
    let path = simulate_path(&config.params, config.len, &mut rng)?;
    solve_cls(&build_design(&path, config.p)?)
}

pub fn run_experiment(config: &McConfig) -> Result<McSummary> {
    config.validate()?;
    let outcomes = collect_replications(config);

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut replications = Vec::with_capacity(outcomes.len());
    let mut failures = 0;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(theta) => {
                rows.push(theta.components());
                replications.push(i + 1);
            }
            Err(Error::SingularDesign { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(Error::AllReplicationsFailed(config.n_experiments));
    }
    if failures > 0 {
        log::warn!(
            "{failures} of {} replications had a singular design",
            config.n_experiments
        );
    }
    let mut summary = summarize(&rows, &config.truth(), config.cap_negatives)?;
    summary.replications = replications;
    summary.failures = failures;
    Ok(summary)
}

#[cfg(feature = "parallel")]
fn collect_replications(config: &McConfig) -> Vec<Result<ThetaVector>> {
    use rayon::prelude::*;
    // indexed collect keeps replication order
    (1..=config.n_experiments)
        .into_par_iter()
        .map(|i| replicate(config, i))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_replications(config: &McConfig) -> Vec<Result<ThetaVector>> {
    (1..=config.n_experiments)
        .map(|i| replicate(config, i))
        .collect()
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Aggregates raw estimates `(mu, beta_1..beta_p)` against the truth.
///
/// With `cap_negatives`, negative `beta` entries are replaced by zero inside
/// the error metrics only: each replication is capped before its squared
/// error enters the MSE, and the mean is capped before the relative errors
/// are taken. `mean_theta` and the stored samples keep the raw values.
pub fn summarize(
    estimates: &[Vec<f64>],
    truth: &ThetaVector,
    cap_negatives: bool,
) -> Result<McSummary> {
    let dim = truth.lag_order() + 1;
    if estimates.is_empty() {
        return Err(Error::AllReplicationsFailed(0));
    }
    if let Some(bad) = estimates.iter().find(|row| row.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let count = estimates.len() as f64;
    let truth_vec = truth.components();

    let cap = |row: &[f64]| -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if cap_negatives && j > 0 {
                    v.max(0.0)
                } else {
                    v
                }
            })
            .collect()
    };

    let mean_theta: Vec<f64> = (0..dim)
        .map(|j| estimates.iter().map(|r| r[j]).sum::<f64>() / count)
        .collect();
    let metric_mean = cap(&mean_theta);

    let mse = estimates
        .iter()
        .map(|row| {
            cap(row)
                .iter()
                .zip(&truth_vec)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum::<f64>()
        / count;

    let relative = |range: std::ops::Range<usize>| -> f64 {
        let err = norm(range.clone().map(|j| metric_mean[j] - truth_vec[j]));
        let scale = norm(range.map(|j| truth_vec[j]));
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    };

    Ok(McSummary {
        mean_theta,
        mse,
        rel_err_theta: relative(0..dim),
        rel_err_alpha: relative(1..dim),
        per_component_samples: estimates.to_vec(),
        replications: (1..=estimates.len()).collect(),
        failures: 0,
    })
}

/// Column label used in sample files and reports.
pub fn component_name(component: usize) -> String {
    if component == 0 {
        "mu_hat".to_string()
    } else {
        format!("beta{component}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentDiagnostics {
    pub report: NormalityReport,
    pub qq: Vec<(f64, f64)>,
    pub histogram: Vec<HistogramBin>,
}

/// Normality tests, Q-Q pairs and a histogram for each requested component
/// of the raw estimates. Failures are reported per component.
pub fn normality_suite(
    summary: &McSummary,
    components: &[usize],
) -> Result<Vec<(usize, Result<ComponentDiagnostics>)>> {
    if summary.n_successful() < MIN_NORMALITY_SAMPLE {
        return Err(Error::SampleSizeOutOfRange {
            n: summary.n_successful(),
            min: MIN_NORMALITY_SAMPLE,
            max: usize::MAX,
        });
    }
    let dim = summary.mean_theta.len();
    Ok(components
        .iter()
        .map(|&c| {
            if c >= dim {
                return (
                    c,
                    Err(Error::DimensionMismatch {
                        expected: dim,
                        found: c + 1,
                    }),
                );
            }
            let sample = summary.component(c);
            let diag = NormalityReport::from_sample(&sample).and_then(|report| {
                Ok(ComponentDiagnostics {
                    report,
                    qq: qq_data(&sample)?,
                    histogram: histogram(&sample, HISTOGRAM_BINS)?,
                })
            });
            (c, diag)
        })
        .collect())
}
