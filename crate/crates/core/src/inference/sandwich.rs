use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{build_design, intensity_series, ThetaVector, RCOND_THRESHOLD};
use crate::inference::normal::normal_quantile;
use crate::linalg::{CompensatedSum, SymmetricFactorization};
use crate::simulate::CountPath;

/// Plug-in sandwich covariance of `sqrt(T) (theta_hat - s)`.
///
/// `j_hat = 2 Y` is the Hessian of the contrast. `k_hat` is the empirical
/// variance of the scaled score, `(4/T) sum_n Z_n Z_n^T e_n^2` with residuals
/// `e_n = X_n - Phi_theta_hat(n)`. `sigma_hat = j_hat^-1 k_hat j_hat^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichCovariance {
    pub j_hat: DMatrix<f64>,
    pub k_hat: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
    pub len: usize,
}

impl SandwichCovariance {
    /// Standard errors `sqrt(sigma_jj / T)` of the estimate itself.
    pub fn standard_errors(&self) -> Vec<f64> {
        let t = self.len as f64;
        self.sigma_hat
            .diagonal()
            .iter()
            .map(|v| (v.max(0.0) / t).sqrt())
            .collect()
    }
}

pub fn sandwich_covariance(
    path: &CountPath,
    theta_hat: &ThetaVector,
    p: usize,
) -> Result<SandwichCovariance> {
    if theta_hat.lag_order() != p {
        return Err(Error::DimensionMismatch {
            expected: p + 1,
            found: theta_hat.lag_order() + 1,
        });
    }
    let sys = build_design(path, p)?;
    let j_hat = 2.0 * &sys.y;
    let factor = SymmetricFactorization::new(&j_hat)?;
    let rcond = factor.rcond();
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(Error::SingularDesign { rcond });
    }

    let phi = intensity_series(path, theta_hat, p)?;
    let x = path.values();
    let dim = p + 1;
    let len = x.len();
    let t = len as f64;

    // upper triangle of sum_n Z_n Z_n^T e_n^2, one compensated sum per entry
    let mut acc = vec![CompensatedSum::default(); dim * dim];
    let mut z = vec![0.0; dim];
    for n in 0..len {
        let resid = x[n] - phi[n];
        let w = resid * resid;
        if w == 0.0 {
            continue;
        }
        z[0] = 1.0;
        for k in 1..dim {
            z[k] = if n >= k { x[n - k] } else { 0.0 };
        }
        for i in 0..dim {
            if z[i] == 0.0 {
                continue;
            }
            let zi_w = z[i] * w;
            for j in i..dim {
                acc[i * dim + j].add(zi_w * z[j]);
            }
        }
    }
    let mut k_hat = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = 4.0 / t * acc[i * dim + j].value();
            k_hat[(i, j)] = v;
            k_hat[(j, i)] = v;
        }
    }

    // J^-1 K, then J^-1 (J^-1 K)^T = J^-1 K J^-1
    let left = factor.solve_matrix(&k_hat)?;
    let mut sigma_hat = factor.solve_matrix(&left.transpose())?;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let v = 0.5 * (sigma_hat[(i, j)] + sigma_hat[(j, i)]);
            sigma_hat[(i, j)] = v;
            sigma_hat[(j, i)] = v;
        }
    }

    Ok(SandwichCovariance {
        j_hat,
        k_hat,
        sigma_hat,
        len,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Wald intervals `theta_j +- z_{(1+level)/2} sqrt(sigma_jj / T)`.
pub fn confidence_intervals(
    theta_hat: &ThetaVector,
    cov: &SandwichCovariance,
    level: f64,
) -> Result<Vec<ConfidenceInterval>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let components = theta_hat.components();
    if components.len() != cov.sigma_hat.nrows() {
        return Err(Error::DimensionMismatch {
            expected: cov.sigma_hat.nrows(),
            found: components.len(),
        });
    }
    let z = normal_quantile(0.5 * (1.0 + level))?;
    Ok(components
        .iter()
        .zip(cov.standard_errors())
        .map(|(&estimate, std_error)| ConfidenceInterval {
            estimate,
            std_error,
            lower: estimate - z * std_error,
            upper: estimate + z * std_error,
        })
        .collect())
}
