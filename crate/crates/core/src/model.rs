//! Model parameters and the analytic utilities built on the renewal sequence
//! of the excitation kernel.
//!
//! Sequences are 1-indexed in the documentation (`A_1`, `x_1`, ...) and stored
//! 0-indexed, so `values[0]` holds `A_1`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Kernel coefficients below this value are dropped when an infinite kernel
/// is materialised.
pub const KERNEL_TRUNCATION: f64 = 1e-12;

/// Closed form of a kernel that was truncated when materialised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelTail {
    /// `alpha_n = ratio^n` for every `n >= 1`.
    Geometric { ratio: f64 },
}

/// Immigration rate and reproduction kernel `(nu, alpha_1, ..., alpha_K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub nu: f64,
    pub kernel: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_tail: Option<KernelTail>,
}

impl ModelParams {
    pub fn new(nu: f64, kernel: Vec<f64>) -> Self {
        Self {
            nu,
            kernel,
            kernel_tail: None,
        }
    }

    /// Geometric kernel `alpha_n = ratio^n`, cut at the first `n` with
    /// `alpha_n < 1e-12`.
    pub fn geometric(nu: f64, ratio: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&ratio) {
            return Err(Error::InvalidParameter {
                field: "ratio",
                reason: format!("geometric ratio {ratio} must lie in [0, 1)"),
            });
        }
        let mut kernel = Vec::new();
        let mut term = ratio;
        while term >= KERNEL_TRUNCATION {
            kernel.push(term);
            term *= ratio;
        }
        Ok(Self {
            nu,
            kernel,
            kernel_tail: Some(KernelTail::Geometric { ratio }),
        })
    }

    pub fn l1_norm(&self) -> f64 {
        self.kernel.iter().sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.kernel.iter().map(|a| a * a).sum()
    }

    /// Whether `||alpha||_2^2 < 1/2`, the condition under which the second
    /// moment bound holds. Violating it is allowed.
    pub fn satisfies_l2_condition(&self) -> bool {
        self.l2_norm_sq() < 0.5
    }

    /// Long-run mean `nu / (1 - ||alpha||_1)`.
    pub fn stationary_mean(&self) -> f64 {
        self.nu / (1.0 - self.l1_norm())
    }

    /// Kernel coefficient `alpha_k` (1-indexed, zero beyond the support).
    pub fn alpha(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.kernel.get(k - 1).copied().unwrap_or(0.0)
    }

    /// Short hex identifier of the parameter values.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.nu.to_le_bytes());
        hasher.update((self.kernel.len() as u64).to_le_bytes());
        for a in &self.kernel {
            hasher.update(a.to_le_bytes());
        }
        hex16(&hasher.finalize())
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let report = validate_params(self);
        if !report.nonnegative {
            return Err(Error::InvalidParameter {
                field: if self.nu.is_finite() && self.nu >= 0.0 {
                    "kernel"
                } else {
                    "nu"
                },
                reason: "must be finite and nonnegative".into(),
            });
        }
        if !report.stationary {
            return Err(Error::NonStationaryKernel {
                l1_norm: report.l1_norm,
            });
        }
        Ok(())
    }
}

/// Parses a kernel specification: `none`, `geometric:<ratio>` (with
/// `alpha_n = ratio^n`) or `lags:[a1, a2, ...]`.
pub fn params_from_spec(nu: f64, spec: &str) -> Result<ModelParams> {
    let spec = spec.trim();
    let bad = |reason: String| Error::InvalidParameter {
        field: "kernel",
        reason,
    };
    let params = if spec == "none" {
        ModelParams::new(nu, Vec::new())
    } else if let Some(ratio) = spec.strip_prefix("geometric:") {
        let ratio: f64 = ratio
            .trim()
            .parse()
            .map_err(|_| bad(format!("ratio `{ratio}` is not a number")))?;
        ModelParams::geometric(nu, ratio)
            .map_err(|_| bad(format!("geometric ratio {ratio} must lie in [0, 1)")))?
    } else if let Some(list) = spec.strip_prefix("lags:") {
        let inner = list
            .trim()
            .strip_prefix('[')
            .and_then(|l| l.strip_suffix(']'))
            .ok_or_else(|| bad(format!("`{list}` is not a bracketed list")))?;
        let lags = inner
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("`{v}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        ModelParams::new(nu, lags)
    } else {
        return Err(bad(format!(
            "`{spec}` is not one of `none`, `geometric:<ratio>`, `lags:[...]`"
        )));
    };
    params.ensure_valid()?;
    Ok(params)
}

pub(crate) fn hex16(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Per-condition outcome of [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `nu >= 0` and every `alpha_k >= 0`, all finite.
    pub nonnegative: bool,
    /// `||alpha||_1 < 1`.
    pub stationary: bool,
    /// `||alpha||_2^2 < 1/2`; advisory only.
    pub l2_condition: bool,
    pub l1_norm: f64,
    pub l2_norm_sq: f64,
}

impl ValidationReport {
    /// Whether the parameters can be simulated and analysed.
    pub fn is_valid(&self) -> bool {
        self.nonnegative && self.stationary
    }
}

pub fn validate_params(params: &ModelParams) -> ValidationReport {
    let nonnegative = params.nu.is_finite()
        && params.nu >= 0.0
        && params.kernel.iter().all(|a| a.is_finite() && *a >= 0.0);
    let l1_norm = params.l1_norm();
    let l2_norm_sq = params.l2_norm_sq();
    ValidationReport {
        nonnegative,
        stationary: l1_norm < 1.0,
        l2_condition: l2_norm_sq < 0.5,
        l1_norm,
        l2_norm_sq,
    }
}

fn check_kernel(kernel: &[f64]) -> Result<()> {
    if kernel.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::InvalidParameter {
            field: "kernel",
            reason: "entries must be finite and nonnegative".into(),
        });
    }
    let l1_norm: f64 = kernel.iter().sum();
    if l1_norm >= 1.0 {
        return Err(Error::NonStationaryKernel { l1_norm });
    }
    Ok(())
}

/// `A_1..A_n` with `A_n = sum_{k>=1} alpha^{*k}_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalSequence {
    pub values: Vec<f64>,
}

impl RenewalSequence {
    /// `A_n`, 1-indexed; zero for `n = 0`.
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.values[n - 1]
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Renewal sequence of `kernel` up to `n_max`, from the recursion
/// `A_n = alpha_n + sum_{s=1}^{n-1} alpha_s A_{n-s}`.
///
/// The recursion is exact for every `n <= n_max`; no series truncation is
/// involved.
pub fn renewal_sequence(kernel: &[f64], n_max: usize) -> Result<RenewalSequence> {
    check_kernel(kernel)?;
    let mut values = vec![0.0; n_max];
    for n in 1..=n_max {
        let mut acc = kernel.get(n - 1).copied().unwrap_or(0.0);
        for (s, alpha) in kernel.iter().enumerate().take(n - 1) {
            // alpha_{s+1} * A_{n-s-1}
            acc += alpha * values[n - s - 2];
        }
        values[n - 1] = acc;
    }
    Ok(RenewalSequence { values })
}

/// Unique solution of `x_n = y_n + sum_{s=1}^{n-1} alpha_s x_{n-s}`,
/// written as `x_n = y_n + sum_{i=1}^{n-1} A_i y_{n-i}`.
pub fn solve_renewal(y: &[f64], kernel: &[f64]) -> Result<Vec<f64>> {
    let renewal = renewal_sequence(kernel, y.len())?;
    let x = (0..y.len())
        .map(|n| {
            // 0-indexed n: x[n] = y[n] + sum_{i=1}^{n} A_i y[n-i]
            y[n] + (1..=n).map(|i| renewal.get(i) * y[n - i]).sum::<f64>()
        })
        .collect();
    Ok(x)
}

/// Moment bounds and norm-equivalence constants for a horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    /// Upper bound on `E[lambda_n]`.
    pub mean_bound: f64,
    /// Upper bound on `E[X_n^2]`, defined only when `||alpha||_2^2 < 1/2`.
    pub second_moment_bound: Option<f64>,
    /// Lower norm-equivalence constant `L^2`.
    pub norm_l2: f64,
    /// Upper norm-equivalence constant `K^2`; infinite when the second
    /// moment bound is unavailable.
    pub norm_k2: f64,
    pub horizon: usize,
}

pub fn moment_bounds(params: &ModelParams, horizon: usize) -> Result<BoundsReport> {
    params.ensure_valid()?;
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            field: "T",
            reason: "horizon must be positive".into(),
        });
    }
    let nu = params.nu;
    let l1 = params.l1_norm();
    let l2 = params.l2_norm_sq();
    let t = horizon as f64;

    let mean_bound = nu / (1.0 - l1);
    let second_moment_bound =
        (l2 < 0.5).then(|| (2.0 * nu * nu * (1.0 - l1) + nu) / ((1.0 - 2.0 * l2) * (1.0 - l1)));

    let spread = (1.0 + l1) * (1.0 + l1);
    let norm_l2 = f64::min(
        1.0 / (1.0 + nu * t * (t - 1.0) * spread),
        nu / (2.0 * t * (1.0 - l1) * spread),
    );
    let norm_k2 = match second_moment_bound {
        Some(m2) => f64::max(
            2.0,
            (t - 1.0) / 2.0 * (2.0 * nu * nu / ((1.0 - l1) * (1.0 - l1)) + m2),
        ),
        None => f64::INFINITY,
    };

    Ok(BoundsReport {
        mean_bound,
        second_moment_bound,
        norm_l2,
        norm_k2,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_specs() {
        assert!(params_from_spec(5.0, "none").unwrap().kernel.is_empty());
        assert_eq!(
            params_from_spec(5.0, "geometric:0.25")
                .unwrap()
                .kernel
                .len(),
            19
        );
        assert_eq!(
            params_from_spec(5.0, " lags: [0.5, 0.25] ").unwrap().kernel,
            vec![0.5, 0.25]
        );
        assert_eq!(
            params_from_spec(5.0, "lags:[]").unwrap().kernel,
            Vec::<f64>::new()
        );
        for bad in [
            "geometric:1",
            "geometric:x",
            "lags:0.8",
            "lags:[0.2,x]",
            "exp:0.2",
            "",
        ] {
            assert!(
                matches!(
                    params_from_spec(5.0, bad),
                    Err(Error::InvalidParameter {
                        field: "kernel",
                        ..
                    })
                ),
                "{bad}"
            );
        }
        assert!(matches!(
            params_from_spec(5.0, "lags:[0.6, 0.5]"),
            Err(Error::NonStationaryKernel { .. })
        ));
        assert!(matches!(
            params_from_spec(-1.0, "none"),
            Err(Error::InvalidParameter { field: "nu", .. })
        ));
    }

    #[test]
    fn geometric_quarter_passes_all_conditions() {
        let params = ModelParams::geometric(100.0, 0.25).unwrap();
        assert_eq!(params.kernel.len(), 19);
        let report = validate_params(&params);
        assert!(report.nonnegative && report.stationary && report.l2_condition);
        assert_relative_eq!(report.l1_norm, 1.0 / 3.0, epsilon = 1e-11);
        assert_relative_eq!(report.l2_norm_sq, 1.0 / 15.0, epsilon = 1e-11);
    }

    #[test]
    fn single_lag_point_eight_is_advisory_failure() {
        let report = validate_params(&ModelParams::new(100.0, vec![0.8]));
        assert!(report.is_valid());
        assert!(!report.l2_condition);
        assert_relative_eq!(report.l2_norm_sq, 0.64, epsilon = 1e-15);
    }

    #[test]
    fn unit_kernel_is_not_stationary() {
        let report = validate_params(&ModelParams::new(1.0, vec![1.0]));
        assert!(!report.stationary);
        assert!(!report.is_valid());
        assert!(matches!(
            renewal_sequence(&[1.0], 4),
            Err(Error::NonStationaryKernel { .. })
        ));
    }

    #[test]
    fn negative_entries_are_reported() {
        assert!(!validate_params(&ModelParams::new(-1.0, vec![])).nonnegative);
        assert!(!validate_params(&ModelParams::new(1.0, vec![0.2, -0.1])).nonnegative);
    }

    #[test]
    fn geometric_rejects_ratio_outside_unit_interval() {
        assert!(ModelParams::geometric(1.0, 1.0).is_err());
        assert!(ModelParams::geometric(1.0, -0.1).is_err());
        assert!(ModelParams::geometric(1.0, 0.0).unwrap().kernel.is_empty());
    }

    #[test]
    fn single_lag_renewal_is_geometric() {
        let seq = renewal_sequence(&[0.5], 12).unwrap();
        for n in 1..=12 {
            assert_relative_eq!(seq.get(n), 0.5f64.powi(n as i32), max_relative = 1e-15);
        }
    }

    #[test]
    fn empty_kernel_renewal_is_zero() {
        let seq = renewal_sequence(&[], 5).unwrap();
        assert!(seq.values.iter().all(|v| *v == 0.0));
        assert_eq!(
            solve_renewal(&[1.0, 2.0, 3.0], &[]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn constant_immigration_solution() {
        let params = ModelParams::geometric(100.0, 0.25).unwrap();
        let x = solve_renewal(&[100.0; 30], &params.kernel).unwrap();
        for (i, xn) in x.iter().enumerate() {
            let n = (i + 1) as i32;
            assert_relative_eq!(*xn, 100.0 * (1.5 - 2f64.powi(-n)), epsilon = 1e-8);
        }
    }

    #[test]
    fn case_one_bounds() {
        let params = ModelParams::geometric(100.0, 0.25).unwrap();
        let bounds = moment_bounds(&params, 1000).unwrap();
        assert_relative_eq!(bounds.mean_bound, 150.0, max_relative = 1e-9);
        assert_relative_eq!(
            bounds.second_moment_bound.unwrap(),
            23250.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn trivial_kernel_norm_constants() {
        let bounds = moment_bounds(&ModelParams::new(1.0, vec![]), 2).unwrap();
        assert_relative_eq!(bounds.norm_l2, 0.25, max_relative = 1e-15);
        assert_relative_eq!(bounds.norm_k2, 2.5, max_relative = 1e-15);
        assert_eq!(bounds.mean_bound, 1.0);
    }

    #[test]
    fn l2_violation_drops_second_moment() {
        let bounds = moment_bounds(&ModelParams::new(100.0, vec![0.8]), 10).unwrap();
        assert!(bounds.second_moment_bound.is_none());
        assert!(bounds.norm_k2.is_infinite());
        assert_relative_eq!(bounds.mean_bound, 500.0, max_relative = 1e-12);
    }
}
