//! Sample paths of the count process, generated step by step from the
//! conditional Poisson law `X_n | past ~ Poisson(nu + sum_k alpha_k X_{n-k})`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Default ceiling on the conditional intensity.
pub const DEFAULT_LAMBDA_CAP: f64 = 1e9;

/// Rates below this use sequential-search inversion; the rest use PTRS.
const INVERSION_LIMIT: f64 = 10.0;

/// Seeded random source. Each `(seed, stream_id)` pair selects an
/// independent ChaCha8 stream, so replication `i` can use stream `i`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// One exact Poisson(`lambda`) variate.
pub fn poisson_sample(lambda: f64, rng: &mut RngStream) -> Result<u64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidRate(lambda));
    }
    if lambda < INVERSION_LIMIT {
        Ok(poisson_inversion(lambda, rng))
    } else {
        Ok(poisson_ptrs(lambda, rng))
    }
}

fn poisson_inversion(lambda: f64, rng: &mut RngStream) -> u64 {
    let u = rng.uniform();
    let mut k = 0u64;
    let mut mass = (-lambda).exp();
    let mut cdf = mass;
    while u > cdf {
        k += 1;
        mass *= lambda / k as f64;
        if mass == 0.0 {
            // u sits in the rounding gap just below 1
            break;
        }
        cdf += mass;
    }
    k
}

/// Transformed rejection with squeeze (Hörmann, 1993).
fn poisson_ptrs(lambda: f64, rng: &mut RngStream) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);

    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// One realisation `X_1..X_T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountPath {
    pub counts: Vec<u64>,
    pub seed: Option<u64>,
    pub stream_id: Option<u64>,
    pub params_digest: Option<String>,
}

impl CountPath {
    /// Path without provenance, e.g. one read from a file.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter {
                field: "counts",
                reason: "path must contain at least one step".into(),
            });
        }
        Ok(Self {
            counts,
            seed: None,
            stream_id: None,
            params_digest: None,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&x| x as f64).collect()
    }

    /// `N_T`, the cumulative count at the end of the path.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Rolling `nu + sum_{k=1}^K alpha_k X_{n-k}` over a ring buffer of the last
/// `K` counts.
#[derive(Debug, Clone)]
pub struct IntensityFilter<'a> {
    nu: f64,
    kernel: &'a [f64],
    recent: Vec<f64>,
    // slot holding X_{n-1}
    head: usize,
}

impl<'a> IntensityFilter<'a> {
    pub fn new(nu: f64, kernel: &'a [f64]) -> Self {
        Self {
            nu,
            kernel,
            recent: vec![0.0; kernel.len()],
            head: 0,
        }
    }

    pub fn intensity(&self) -> f64 {
        let len = self.recent.len();
        let mut acc = 0.0;
        for (k, alpha) in self.kernel.iter().enumerate() {
            acc += alpha * self.recent[(self.head + len - k) % len];
        }
        self.nu + acc
    }

    pub fn push(&mut self, x: u64) {
        let len = self.recent.len();
        if len == 0 {
            return;
        }
        self.head = (self.head + 1) % len;
        self.recent[self.head] = x as f64;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    pub lambda_cap: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            lambda_cap: DEFAULT_LAMBDA_CAP,
        }
    }
}

pub fn simulate_path(params: &ModelParams, len: usize, rng: &mut RngStream) -> Result<CountPath> {
    simulate_path_traced(params, len, rng, SimulationOptions::default()).map(|(path, _)| path)
}

/// Like [`simulate_path`], also returning the intensities `lambda_1..lambda_T`
/// the counts were drawn from.
pub fn simulate_path_traced(
    params: &ModelParams,
    len: usize,
    rng: &mut RngStream,
    options: SimulationOptions,
) -> Result<(CountPath, Vec<f64>)> {
    params.ensure_valid()?;
    if len == 0 {
        return Err(Error::InvalidParameter {
            field: "T",
            reason: "path length must be positive".into(),
        });
    }
    let mut filter = IntensityFilter::new(params.nu, &params.kernel);
    let mut counts = Vec::with_capacity(len);
    let mut intensities = Vec::with_capacity(len);
    for step in 1..=len {
        let lambda = filter.intensity();
        if lambda > options.lambda_cap {
            return Err(Error::Overflow {
                step,
                lambda,
                cap: options.lambda_cap,
            });
        }
        let x = poisson_sample(lambda, rng)?;
        filter.push(x);
        counts.push(x);
        intensities.push(lambda);
    }
    let path = CountPath {
        counts,
        seed: Some(rng.seed()),
        stream_id: Some(rng.stream_id()),
        params_digest: Some(params.digest()),
    };
    Ok((path, intensities))
}
