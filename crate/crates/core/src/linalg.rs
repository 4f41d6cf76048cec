//! Dense symmetric solves: Bunch-Kaufman `P A P^T = L D L^T` with 1x1 and
//! 2x2 pivots, a 1-norm reciprocal condition estimate, and compensated sums.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy)]
enum Pivot {
    One(f64),
    // [[d11, d21], [d21, d22]]
    Two { d11: f64, d21: f64, d22: f64 },
}

/// Bunch-Kaufman factorization of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricFactorization {
    n: usize,
    // unit lower factor, row-major; entries on and above the diagonal unused
    lower: Vec<f64>,
    pivots: Vec<(usize, Pivot)>,
    perm: Vec<usize>,
    norm1: f64,
}

const BK_ALPHA: f64 = 0.640_388_203_202_208_4; // (1 + sqrt(17)) / 8

impl SymmetricFactorization {
    /// Factorizes `a`, reading only its lower triangle.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = a[(i, j)];
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| w[i * n + j].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularDesign { rcond: 0.0 });
        }

        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();
        let at = |w: &[f64], i: usize, j: usize| w[i * n + j];

        let mut k = 0;
        while k < n {
            let absakk = at(&w, k, k).abs();
            let (imax, colmax) =
                ((k + 1)..n)
                    .map(|i| (i, at(&w, i, k).abs()))
                    .fold(
                        (k, 0.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if absakk.max(colmax) == 0.0 {
                return Err(Error::SingularDesign { rcond: 0.0 });
            }

            let (kp, step) = if absakk >= BK_ALPHA * colmax {
                (k, 1)
            } else {
                let rowmax = (k..n)
                    .filter(|&j| j != imax)
                    .map(|j| at(&w, imax, j).abs())
                    .fold(0.0, f64::max);
                if absakk * rowmax >= BK_ALPHA * colmax * colmax {
                    (k, 1)
                } else if at(&w, imax, imax).abs() >= BK_ALPHA * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };

            let kk = k + step - 1;
            if kp != kk {
                for j in 0..n {
                    w.swap(kk * n + j, kp * n + j);
                }
                for i in 0..n {
                    w.swap(i * n + kk, i * n + kp);
                }
                perm.swap(kk, kp);
            }

            if step == 1 {
                let d = at(&w, k, k);
                for i in (k + 1)..n {
                    let li = at(&w, i, k) / d;
                    for j in (k + 1)..=i {
                        let v = at(&w, i, j) - li * at(&w, j, k);
                        w[i * n + j] = v;
                        w[j * n + i] = v;
                    }
                }
                for i in (k + 1)..n {
                    w[i * n + k] /= d;
                }
                pivots.push((k, Pivot::One(d)));
            } else {
                let d11 = at(&w, k, k);
                let d21 = at(&w, k + 1, k);
                let d22 = at(&w, k + 1, k + 1);
                let det = d11 * d22 - d21 * d21;
                if det == 0.0 || !det.is_finite() {
                    return Err(Error::SingularDesign { rcond: 0.0 });
                }
                // rows of W = A[i, k..k+2] * D^{-1}
                let mut mult = Vec::with_capacity(n - k - 2);
                for i in (k + 2)..n {
                    let (c1, c2) = (at(&w, i, k), at(&w, i, k + 1));
                    mult.push(((c1 * d22 - c2 * d21) / det, (c2 * d11 - c1 * d21) / det));
                }
                for i in (k + 2)..n {
                    let (w1, w2) = mult[i - k - 2];
                    for j in (k + 2)..=i {
                        let v = at(&w, i, j) - w1 * at(&w, j, k) - w2 * at(&w, j, k + 1);
                        w[i * n + j] = v;
                        w[j * n + i] = v;
                    }
                }
                for i in (k + 2)..n {
                    let (w1, w2) = mult[i - k - 2];
                    w[i * n + k] = w1;
                    w[i * n + k + 1] = w2;
                }
                w[(k + 1) * n + k] = 0.0;
                pivots.push((k, Pivot::Two { d11, d21, d22 }));
            }
            k += step;
        }

        Ok(Self {
            n,
            lower: w,
            pivots,
            perm,
            norm1,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let l = |i: usize, j: usize| self.lower[i * n + j];
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= l(i, j) * y[j];
            }
            y[i] = acc;
        }
        for &(k, pivot) in &self.pivots {
            match pivot {
                Pivot::One(d) => y[k] /= d,
                Pivot::Two { d11, d21, d22 } => {
                    let det = d11 * d22 - d21 * d21;
                    let (z1, z2) = (y[k], y[k + 1]);
                    y[k] = (z1 * d22 - z2 * d21) / det;
                    y[k + 1] = (z2 * d11 - z1 * d21) / det;
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= l(j, i) * y[j];
            }
            y[i] = acc;
        }
        let mut x = DVector::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let col = self.solve(&b.column(j).into_owned())?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    /// Reciprocal 1-norm condition estimate `1 / (||A||_1 ||A^-1||_1)`, with
    /// `||A^-1||_1` from Hager's method refined by Higham's alternating
    /// vector.
    pub fn rcond(&self) -> f64 {
        let n = self.n;
        if n == 0 || self.norm1 == 0.0 {
            return 0.0;
        }
        let inv_norm = self.inverse_norm1_estimate();
        if !inv_norm.is_finite() || inv_norm == 0.0 {
            return 0.0;
        }
        1.0 / (self.norm1 * inv_norm)
    }

    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let solve = |v: &DVector<f64>| self.solve(v).expect("dimension checked");
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = solve(&x);
            estimate = y.lp_norm(1);
            let signs = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            // A is symmetric, so A^-T = A^-1
            let z = solve(&signs);
            let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0), |best, (j, v)| {
                if v.abs() > best.1 {
                    (j, v.abs())
                } else {
                    best
                }
            });
            if zmax <= z.dot(&x) {
                break;
            }
            x = DVector::zeros(n);
            x[jmax] = 1.0;
        }
        let alt = DVector::from_fn(n, |i, _| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        });
        let alt_estimate = 2.0 * solve(&alt).lp_norm(1) / (3.0 * n as f64);
        estimate.max(alt_estimate)
    }
}
