//! Normality diagnostics for Monte Carlo estimate samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::normal::{normal_quantile, normal_sf};

pub const JB_MIN_SAMPLE: usize = 8;
pub const SW_MIN_SAMPLE: usize = 3;
pub const SW_MAX_SAMPLE: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub stat: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub jb_stat: f64,
    pub jb_p: f64,
    pub sw_stat: f64,
    pub sw_p: f64,
    pub sample_size: usize,
}

impl NormalityReport {
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        let jb = jarque_bera(sample)?;
        let sw = shapiro_wilk(sample)?;
        Ok(Self {
            jb_stat: jb.stat,
            jb_p: jb.p,
            sw_stat: sw.stat,
            sw_p: sw.p,
            sample_size: sample.len(),
        })
    }
}

fn all_equal(sample: &[f64]) -> bool {
    sample.windows(2).all(|w| w[0] == w[1])
}

/// Jarque-Bera statistic `n/6 (S^2 + (K-3)^2/4)` from moment estimates, with
/// the asymptotic chi-square(2) p-value `exp(-stat/2)`.
pub fn jarque_bera(sample: &[f64]) -> Result<TestOutcome> {
    let n = sample.len();
    if n < JB_MIN_SAMPLE {
        return Err(Error::SampleSizeOutOfRange {
            n,
            min: JB_MIN_SAMPLE,
            max: usize::MAX,
        });
    }
    if n < 20 {
        log::warn!("Jarque-Bera on only {n} observations; the chi-square reference is unreliable");
    }
    if all_equal(sample) {
        return Err(Error::ZeroVariance);
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let stat = nf / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
    Ok(TestOutcome {
        stat,
        p: (-stat / 2.0).exp(),
    })
}

fn poly(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Shapiro-Wilk W with Royston's AS R94 coefficients and p-value
/// approximation, for `3 <= n <= 5000`.
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestOutcome> {
    let n = sample.len();
    if !(SW_MIN_SAMPLE..=SW_MAX_SAMPLE).contains(&n) {
        return Err(Error::SampleSizeOutOfRange {
            n,
            min: SW_MIN_SAMPLE,
            max: SW_MAX_SAMPLE,
        });
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if !(range > 0.0) {
        return Err(Error::ZeroVariance);
    }

    let half = n / 2;
    let an = n as f64;
    // a[i] for i = 0..half, coefficient of the (n-1-i)-th order statistic
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let an25 = an + 0.25;
        let m: Vec<f64> = (1..=half)
            .map(|i| normal_quantile((i as f64 - 0.375) / an25))
            .collect::<Result<_>>()?;
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first_scaled, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        a[0] = a1;
        for i in first_scaled..half {
            a[i] = -m[i] / fac;
        }
    }

    // W as the squared correlation of coefficients and ordered data, kept in
    // the 1 - W form for precision near W = 1.
    let coef = |i: usize| -> f64 {
        let j = n - 1 - i;
        match i.cmp(&j) {
            std::cmp::Ordering::Less => -a[i],
            std::cmp::Ordering::Greater => a[j],
            std::cmp::Ordering::Equal => 0.0,
        }
    };
    let scaled: Vec<f64> = x.iter().map(|v| v / range).collect();
    let sx = scaled.iter().sum::<f64>() / an;
    let sa = (0..n).map(coef).sum::<f64>() / an;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, xi) in scaled.iter().enumerate() {
        let asa = coef(i) - sa;
        let xsx = xi - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    Ok(TestOutcome {
        stat: w,
        p: royston_p_value(w, w1, n),
    })
}

fn royston_p_value(w: f64, w1: f64, n: usize) -> f64 {
    if n == 3 {
        const PI6: f64 = 1.909_859_317_102_74;
        const STQR: f64 = std::f64::consts::FRAC_PI_3;
        return (PI6 * (w.sqrt().asin() - STQR)).clamp(0.0, 1.0);
    }
    if w1 <= 0.0 {
        return 1.0;
    }
    let an = n as f64;
    let y = w1.ln();
    let (y, mean, sd) = if n <= 11 {
        const G: [f64; 2] = [-2.273, 0.459];
        const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
        const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        (-(gamma - y).ln(), poly(&C3, an), poly(&C4, an).exp())
    } else {
        const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
        const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
        let ln_n = an.ln();
        (y, poly(&C5, ln_n), poly(&C6, ln_n).exp())
    };
    normal_sf((y - mean) / sd)
}

/// Normal probability plot pairs `(Phi^-1((i - 0.5)/n), z_(i))` where
/// `z` is the sample standardised with its mean and (n-1) standard
/// deviation. A single observation maps to `(0, 0)`.
pub fn qq_data(sample: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::SampleSizeOutOfRange {
            n,
            min: 1,
            max: usize::MAX,
        });
    }
    if n == 1 {
        return Ok(vec![(0.0, 0.0)]);
    }
    if all_equal(sample) {
        return Err(Error::ZeroVariance);
    }
    let nf = n as f64;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / nf;
    let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| Ok((normal_quantile((i as f64 + 0.5) / nf)?, (x - mean) / sd)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]`; the maximum lands in the last bin.
pub fn histogram(sample: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if sample.is_empty() || bins == 0 {
        return Err(Error::SampleSizeOutOfRange {
            n: sample.len(),
            min: 1,
            max: usize::MAX,
        });
    }
    let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::ZeroVariance);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in sample {
        let idx = (((x - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            left: lo + i as f64 * width,
            right: if i + 1 == bins {
                hi
            } else {
                lo + (i + 1) as f64 * width
            },
            count,
        })
        .collect())
}
