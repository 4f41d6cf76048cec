//! Conditional least-squares estimation.
//!
//! For a lag order `p` the regressor at step `n` is
//! `Z_n = (1, X_{n-1}, ..., X_{n-p})` with zeros for nonpositive indices, and
//! the contrast `gamma_T(theta) = -(2/T) sum Phi(n) X_n + (1/T) sum Phi(n)^2`
//! equals `-2 theta^T b + theta^T Y theta` with `Y = (1/T) sum Z_n Z_n^T` and
//! `b = (1/T) sum Z_n X_n`. The minimiser solves `Y theta = b`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, SymmetricFactorization};
use crate::simulate::CountPath;

/// Systems with a smaller reciprocal condition estimate are rejected.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Default lag order.
pub const DEFAULT_LAG_ORDER: usize = 10;

/// The normal equations `Y theta = b` for one path.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSystem {
    pub y: DMatrix<f64>,
    pub b: DVector<f64>,
    pub len: usize,
    pub p: usize,
}

impl DesignSystem {
    pub fn dim(&self) -> usize {
        self.p + 1
    }
}

/// `(mu, beta_1, ..., beta_p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub mu: f64,
    pub betas: Vec<f64>,
}

impl ThetaVector {
    pub fn new(mu: f64, betas: Vec<f64>) -> Self {
        Self { mu, betas }
    }

    pub fn zeros(p: usize) -> Self {
        Self::new(0.0, vec![0.0; p])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self::new(v[0], v.iter().skip(1).copied().collect())
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.betas.len() + 1,
            std::iter::once(self.mu).chain(self.betas.iter().copied()),
        )
    }

    pub fn lag_order(&self) -> usize {
        self.betas.len()
    }

    /// Components as a flat slice-like vector `(mu, beta_1, ...)`.
    pub fn components(&self) -> Vec<f64> {
        std::iter::once(self.mu)
            .chain(self.betas.iter().copied())
            .collect()
    }
}

fn check_lag(len: usize, p: usize) -> Result<()> {
    if len == 0 || p > len - 1 {
        return Err(Error::LagTooLarge {
            p,
            max: len.saturating_sub(1),
        });
    }
    Ok(())
}

/// Builds `(Y, b)` from a path.
///
/// Entries depend on the path only through lagged partial sums:
/// `Y_{0j} = (1/T) sum_{m=1}^{T-j} X_m` and
/// `Y_{ij} = (1/T) sum_{m=1}^{T-j} X_{m+j-i} X_m` for `1 <= i <= j`,
/// `b_0 = N_T / T`, `b_d = (1/T) sum_{m=1}^{T-d} X_{m+d} X_m`.
/// Each lag `d` is a single compensated pass over the path, `O(T p)` total.
pub fn build_design(path: &CountPath, p: usize) -> Result<DesignSystem> {
    let len = path.len();
    check_lag(len, p)?;
    if p + 1 == len && len > 50 {
        log::warn!("lag order p = T - 1 = {p}; the design matrix is likely ill-conditioned");
    }
    let x = path.values();
    let t = len as f64;

    // level[j] = sum_{m=1}^{T-j} X_m
    let mut level = vec![0.0; p + 1];
    let mut acc = CompensatedSum::default();
    let mut next = p as isize;
    for (m, xm) in x.iter().enumerate() {
        acc.add(*xm);
        while next >= 0 && m + 1 == len - next as usize {
            level[next as usize] = acc.value();
            next -= 1;
        }
    }

    // cross[d][j] = sum_{m=1}^{T-j} X_{m+d} X_m for j in d..=p
    let mut cross = vec![vec![0.0; p + 1]; p + 1];
    for (d, row) in cross.iter_mut().enumerate() {
        let mut acc = CompensatedSum::default();
        let mut next = p;
        for m in 0..(len - d) {
            acc.add(x[m + d] * x[m]);
            while m + 1 == len - next {
                row[next] = acc.value();
                if next == d {
                    break;
                }
                next -= 1;
            }
        }
    }

    let dim = p + 1;
    let mut y = DMatrix::zeros(dim, dim);
    y[(0, 0)] = 1.0;
    for j in 1..dim {
        y[(0, j)] = level[j] / t;
        y[(j, 0)] = y[(0, j)];
        for i in 1..=j {
            let v = cross[j - i][j] / t;
            y[(i, j)] = v;
            y[(j, i)] = v;
        }
    }
    let mut b = DVector::zeros(dim);
    b[0] = level[0] / t;
    for d in 1..dim {
        b[d] = cross[d][d] / t;
    }
    Ok(DesignSystem { y, b, len, p })
}

/// Solution of the normal equations with conditioning diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClsSolution {
    pub theta: ThetaVector,
    pub rcond: f64,
    /// `||Y theta - b||_2`.
    pub residual_norm: f64,
}

pub fn solve_cls(sys: &DesignSystem) -> Result<ThetaVector> {
    solve_cls_detailed(sys).map(|s| s.theta)
}

/// Solves `Y theta = b` through a Bunch-Kaufman factorization, with one
/// step of iterative refinement.
pub fn solve_cls_detailed(sys: &DesignSystem) -> Result<ClsSolution> {
    let factor = SymmetricFactorization::new(&sys.y)?;
    let rcond = factor.rcond();
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(Error::SingularDesign { rcond });
    }
    let mut theta = factor.solve(&sys.b)?;
    let residual = &sys.b - &sys.y * &theta;
    theta += factor.solve(&residual)?;
    let residual_norm = (&sys.y * &theta - &sys.b).norm();
    Ok(ClsSolution {
        theta: ThetaVector::from_vector(&theta),
        rcond,
        residual_norm,
    })
}

/// `Phi(1..T)` with `Phi(n) = mu + sum_{k=1}^{min(p, n-1)} beta_k X_{n-k}`.
pub fn intensity_series(path: &CountPath, theta: &ThetaVector, p: usize) -> Result<Vec<f64>> {
    check_lag(path.len(), p)?;
    let lags = p.min(theta.betas.len());
    let x = path.values();
    Ok((0..x.len())
        .map(|n| {
            let mut phi = theta.mu;
            for k in 1..=lags.min(n) {
                phi += theta.betas[k - 1] * x[n - k];
            }
            phi
        })
        .collect())
}

/// `gamma_T(theta)` evaluated from its two-sum definition.
pub fn contrast(path: &CountPath, theta: &ThetaVector, p: usize) -> Result<f64> {
    let phi = intensity_series(path, theta, p)?;
    let t = path.len() as f64;
    let mut cross = CompensatedSum::default();
    let mut square = CompensatedSum::default();
    for (phi_n, &x_n) in phi.iter().zip(&path.counts) {
        cross.add(phi_n * x_n as f64);
        square.add(phi_n * phi_n);
    }
    Ok(-2.0 / t * cross.value() + square.value() / t)
}

/// `grad gamma_T(theta) = 2 (Y theta - b)`.
pub fn contrast_gradient(sys: &DesignSystem, theta: &ThetaVector) -> Result<DVector<f64>> {
    if theta.lag_order() != sys.p {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: theta.lag_order() + 1,
        });
    }
    Ok(2.0 * (&sys.y * theta.to_vector() - &sys.b))
}

/// Point estimate for one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub mu_hat: f64,
    pub beta_hat: Vec<f64>,
    pub p: usize,
    #[serde(rename = "T")]
    pub len: usize,
    pub residual_norm: f64,
    pub rcond: f64,
}

impl EstimateResult {
    pub fn theta(&self) -> ThetaVector {
        ThetaVector::new(self.mu_hat, self.beta_hat.clone())
    }
}

/// Builds the design for `path`, solves it, and packages the diagnostics.
pub fn fit(path: &CountPath, p: usize) -> Result<EstimateResult> {
    let sys = build_design(path, p)?;
    let sol = solve_cls_detailed(&sys)?;
    Ok(EstimateResult {
        mu_hat: sol.theta.mu,
        beta_hat: sol.theta.betas,
        p,
        len: sys.len,
        residual_norm: sol.residual_norm,
        rcond: sol.rcond,
    })
}
