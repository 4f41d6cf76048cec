//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a JSON string; errors surface as a JS `Error` whose
//! message starts with the error kind.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use inar_core::estimate::fit;
use inar_core::inference::{
    confidence_intervals, sandwich_covariance, ConfidenceInterval, HistogramBin, NormalityReport,
};
use inar_core::model::params_from_spec;
use inar_core::montecarlo::{normality_suite, run_experiment, McConfig};
use inar_core::simulate::{simulate_path_traced, RngStream, SimulationOptions};
use inar_core::{CountPath, Error};

/// Upper limits keep a single call responsive in the browser.
pub const MAX_LEN: usize = 20_000;
pub const MAX_EXPERIMENTS: usize = 2_000;

#[derive(Debug, Serialize)]
pub struct SimulatedPath {
    pub counts: Vec<u64>,
    pub intensity: Vec<f64>,
    pub stationary_mean: f64,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub theta: Vec<f64>,
    pub intervals: Vec<ConfidenceInterval>,
    pub rcond: f64,
}

#[derive(Debug, Serialize)]
pub struct StudyReport {
    pub mean_theta: Vec<f64>,
    pub truth: Vec<f64>,
    pub mse: f64,
    pub rel_err_theta: f64,
    pub rel_err_alpha: f64,
    pub failures: usize,
    pub component: usize,
    pub normality: NormalityReport,
    pub qq: Vec<(f64, f64)>,
    pub histogram: Vec<HistogramBin>,
}

fn check_len(len: usize, max: usize, field: &'static str) -> Result<(), Error> {
    if len == 0 || len > max {
        return Err(Error::InvalidParameter {
            field,
            reason: format!("must lie in 1..={max}"),
        });
    }
    Ok(())
}

pub fn simulate_report(
    nu: f64,
    kernel: &str,
    len: usize,
    seed: u64,
) -> Result<SimulatedPath, Error> {
    check_len(len, MAX_LEN, "T")?;
    let params = params_from_spec(nu, kernel)?;
    let (path, intensity) = simulate_path_traced(
        &params,
        len,
        &mut RngStream::new(seed, 0),
        SimulationOptions::default(),
    )?;
    Ok(SimulatedPath {
        counts: path.counts,
        intensity,
        stationary_mean: params.stationary_mean(),
    })
}

pub fn fit_report(counts: &[u32], p: usize, level: f64) -> Result<FitReport, Error> {
    let path = CountPath::from_counts(counts.iter().map(|&c| c as u64).collect())?;
    let result = fit(&path, p)?;
    let theta = result.theta();
    let cov = sandwich_covariance(&path, &theta, p)?;
    Ok(FitReport {
        intervals: confidence_intervals(&theta, &cov, level)?,
        theta: theta.components(),
        rcond: result.rcond,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn study_report(
    nu: f64,
    kernel: &str,
    len: usize,
    p: usize,
    n_experiments: usize,
    seed: u64,
    component: usize,
) -> Result<StudyReport, Error> {
    check_len(len, MAX_LEN, "T")?;
    check_len(n_experiments, MAX_EXPERIMENTS, "n_experiments")?;
    let config = McConfig::new(params_from_spec(nu, kernel)?, len, p, n_experiments, seed);
    let summary = run_experiment(&config)?;
    let (_, diag) = normality_suite(&summary, &[component])?
        .pop()
        .expect("one component requested");
    let diag = diag?;
    Ok(StudyReport {
        mean_theta: summary.mean_theta.clone(),
        truth: config.truth().components(),
        mse: summary.mse,
        rel_err_theta: summary.rel_err_theta,
        rel_err_alpha: summary.rel_err_alpha,
        failures: summary.failures,
        component,
        normality: diag.report,
        qq: diag.qq,
        histogram: diag.histogram,
    })
}

fn to_js<T: Serialize>(result: Result<T, Error>) -> Result<String, JsError> {
    match result {
        Ok(v) => Ok(serde_json::to_string(&v).expect("report serialises")),
        Err(e) => Err(JsError::new(&format!("{}: {e}", e.kind()))),
    }
}

/// One path with its conditional intensities.
#[wasm_bindgen]
pub fn simulate(nu: f64, kernel: &str, len: usize, seed: u64) -> Result<String, JsError> {
    to_js(simulate_report(nu, kernel, len, seed))
}

/// Least-squares fit with sandwich confidence intervals.
#[wasm_bindgen(js_name = fitPath)]
pub fn fit_path(counts: &[u32], p: usize, level: f64) -> Result<String, JsError> {
    to_js(fit_report(counts, p, level))
}

/// Monte Carlo study plus histogram, Q-Q pairs and normality tests for one
/// component (0 = nu, k = alpha_k).
#[wasm_bindgen]
pub fn study(
    nu: f64,
    kernel: &str,
    len: usize,
    p: usize,
    n_experiments: usize,
    seed: u64,
    component: usize,
) -> Result<String, JsError> {
    to_js(study_report(
        nu,
        kernel,
        len,
        p,
        n_experiments,
        seed,
        component,
    ))
}
