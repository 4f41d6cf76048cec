#![allow(dead_code)]

use inar_core::simulate::{simulate_path, CountPath, RngStream};
use inar_core::ModelParams;
use nalgebra::{DMatrix, DVector};

pub fn case1() -> ModelParams {
    ModelParams::geometric(100.0, 0.25).unwrap()
}

pub fn case2() -> ModelParams {
    ModelParams::new(100.0, vec![0.8])
}

pub fn sim(params: &ModelParams, len: usize, seed: u64) -> CountPath {
    simulate_path(params, len, &mut RngStream::new(seed, 0)).unwrap()
}

/// Regressor `(1, X_{n-1}, ..., X_{n-p})` with zero pre-sample values.
pub fn regressor(x: &[f64], n: usize, p: usize) -> DVector<f64> {
    DVector::from_fn(p + 1, |k, _| {
        if k == 0 {
            1.0
        } else if n >= k {
            x[n - k]
        } else {
            0.0
        }
    })
}

/// `(Y, b)` straight from the outer-product definition, O(T p^2).
pub fn naive_design(path: &CountPath, p: usize) -> (DMatrix<f64>, DVector<f64>) {
    let x = path.values();
    let t = x.len() as f64;
    let mut y = DMatrix::zeros(p + 1, p + 1);
    let mut b = DVector::zeros(p + 1);
    for n in 0..x.len() {
        let z = regressor(&x, n, p);
        y += &z * z.transpose();
        b += &z * x[n];
    }
    (y / t, b / t)
}

/// `sum_k alpha^{*k}` truncated once the newest convolution power drops
/// below `1e-14` everywhere.
pub fn renewal_by_convolution_powers(kernel: &[f64], n_max: usize) -> Vec<f64> {
    let alpha: Vec<f64> = (1..=n_max)
        .map(|n| kernel.get(n - 1).copied().unwrap_or(0.0))
        .collect();
    let mut total = alpha.clone();
    let mut power = alpha.clone();
    for _ in 2..=n_max {
        // power * alpha, both supported on 1..=n_max
        let mut next = vec![0.0; n_max];
        for (i, pi) in power.iter().enumerate() {
            for (j, aj) in alpha.iter().enumerate() {
                let idx = i + j + 1;
                if idx < n_max {
                    next[idx] += pi * aj;
                }
            }
        }
        power = next;
        for (t, p) in total.iter_mut().zip(&power) {
            *t += p;
        }
        if power.iter().all(|v| v.abs() < 1e-14) {
            break;
        }
    }
    total
}
