//! Brute-force spectral data of finite truncations, used to check the Jost pipeline.
//! Only the coefficients are shared with the rest of the crate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CoefficientModel, HARD_CAP};
use crate::quadrature::gauss_legendre;
use crate::spectral::{weight_with, SpectralOptions};

/// Eigenvalues and e₀-weights of the N×N truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationOracle {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Squared first components of the normalized eigenvectors.
    pub weights: Vec<f64>,
}

const BATCH: usize = 8;

/// Tridiagonal truncation: diagonal b (length N) and off-diagonal a (length N−1).
struct Tridiagonal {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Tridiagonal {
    fn new(model: &CoefficientModel, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("truncation size N = {n} must be at least 2")));
        }
        if n > HARD_CAP {
            return Err(Error::IndexOutOfRange { index: n as i64, cap: HARD_CAP });
        }
        let mut a = Vec::with_capacity(n - 1);
        let mut b = Vec::with_capacity(n);
        for k in 0..n {
            let (ak, bk) = model.eval_coeffs(k as i64)?;
            b.push(bk);
            if k + 1 < n {
                a.push(ak);
            }
        }
        Ok(Tridiagonal { a, b })
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.b.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..n {
            let r = if k > 0 { self.a[k - 1].abs() } else { 0.0 } + if k + 1 < n { self.a[k].abs() } else { 0.0 };
            lo = lo.min(self.b[k] - r);
            hi = hi.max(self.b[k] + r);
        }
        let pad = 1e-12 * (hi - lo).max(1.0);
        (lo - pad, hi + pad)
    }

    /// Number of eigenvalues below each x, from the signs of the LDLᵀ pivots of J − x.
    /// Independent chains are interleaved so that the divisions overlap.
    fn sturm_counts(&self, x: &[f64; BATCH]) -> [usize; BATCH] {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = [0usize; BATCH];
        let mut d = [1.0f64; BATCH];
        let mut a2 = 0.0;
        for k in 0..self.b.len() {
            let bk = self.b[k];
            for j in 0..BATCH {
                let mut v = bk - x[j] - a2 / d[j];
                if v == 0.0 {
                    v = -tiny;
                }
                count[j] += (v < 0.0) as usize;
                d[j] = v;
            }
            a2 = if k < self.a.len() { self.a[k] * self.a[k] } else { 0.0 };
        }
        count
    }

    fn count_below(&self, x: f64) -> usize {
        self.sturm_counts(&[x; BATCH])[0]
    }

    /// Eigenvalues with the given ascending indices, bisected to adjacent floats.
    fn eigenvalues(&self, indices: &[usize]) -> Vec<f64> {
        use rayon::prelude::*;
        let (lo, hi) = self.gershgorin();
        indices
            .par_chunks(BATCH)
            .flat_map_iter(|chunk| {
                let mut l = [lo; BATCH];
                let mut h = [hi; BATCH];
                let mut k = [usize::MAX; BATCH];
                k[..chunk.len()].copy_from_slice(chunk);
                loop {
                    let mut mid = [0.0; BATCH];
                    let mut active = false;
                    for j in 0..BATCH {
                        mid[j] = 0.5 * (l[j] + h[j]);
                        active |= k[j] != usize::MAX && mid[j] > l[j] && mid[j] < h[j];
                    }
                    if !active {
                        break;
                    }
                    let c = self.sturm_counts(&mid);
                    for j in 0..BATCH {
                        if mid[j] > l[j] && mid[j] < h[j] {
                            if c[j] > k[j] {
                                h[j] = mid[j];
                            } else {
                                l[j] = mid[j];
                            }
                        }
                    }
                }
                (0..chunk.len()).map(move |j| h[j])
            })
            .collect()
    }

    /// v_0² for the unit eigenvector at x. One step of inverse iteration with right-hand
    /// side e_r, where the twist index r minimizes |γ_r| over the two-sided factorization.
    fn e0_weight(&self, x: f64) -> f64 {
        let (a, b) = (&self.a, &self.b);
        let n = b.len();
        let tiny = f64::MIN_POSITIVE.sqrt();
        let guard = |v: f64| if v == 0.0 { tiny } else { v };
        let mut fwd = vec![0.0; n];
        let mut bwd = vec![0.0; n];
        fwd[0] = guard(b[0] - x);
        for k in 1..n {
            fwd[k] = guard(b[k] - x - a[k - 1] * a[k - 1] / fwd[k - 1]);
        }
        bwd[n - 1] = guard(b[n - 1] - x);
        for k in (0..n - 1).rev() {
            bwd[k] = guard(b[k] - x - a[k] * a[k] / bwd[k + 1]);
        }
        let r = (0..n)
            .min_by(|&i, &j| {
                let g = |k: usize| (fwd[k] + bwd[k] - (b[k] - x)).abs();
                g(i).total_cmp(&g(j))
            })
            .unwrap_or(0);
        let mut v = vec![0.0; n];
        v[r] = 1.0;
        for k in (0..r).rev() {
            v[k] = -a[k] * v[k + 1] / fwd[k];
        }
        for k in r + 1..n {
            v[k] = -a[k - 1] * v[k - 1] / bwd[k];
        }
        let norm2: f64 = v.iter().map(|t| t * t).sum();
        v[0] * v[0] / norm2
    }
}

/// All eigenvalues of the N×N truncation by Sturm bisection, with e₀-weights.
pub fn truncation_spectrum(model: &CoefficientModel, n: usize) -> Result<TruncationOracle> {
    let tri = Tridiagonal::new(model, n)?;
    let eigenvalues = tri.eigenvalues(&(0..n).collect::<Vec<_>>());
    for k in 1..n {
        if eigenvalues[k] <= eigenvalues[k - 1] {
            return Err(Error::BisectionFailure(k));
        }
    }
    let weights = {
        use rayon::prelude::*;
        eigenvalues.par_iter().map(|&x| tri.e0_weight(x)).collect()
    };
    Ok(TruncationOracle { n, a: tri.a, b: tri.b, eigenvalues, weights })
}

/// Eigenvalues of the N×N truncation outside [−1−δ, 1+δ], without computing the rest.
pub fn outside_eigenvalues(model: &CoefficientModel, n: usize, delta: f64) -> Result<Vec<f64>> {
    let tri = Tridiagonal::new(model, n)?;
    let below = tri.count_below(-1.0 - delta);
    let above = tri.count_below(1.0 + delta);
    let indices: Vec<usize> = (0..below).chain(above..n).collect();
    let ev = tri.eigenvalues(&indices);
    Ok(ev.into_iter().filter(|x| x.abs() > 1.0 + delta).collect())
}

impl TruncationOracle {
    /// Eigenvalues outside [−1−δ, 1+δ].
    pub fn outside(&self, delta: f64) -> Vec<f64> {
        self.eigenvalues.iter().copied().filter(|x| x.abs() > 1.0 + delta).collect()
    }

    /// Total weight with eigenvalue in [lo, hi).
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.eigenvalues.iter().zip(&self.weights).filter(|(x, _)| **x >= lo && **x < hi).map(|(_, w)| w).sum()
    }
}

/// Outside eigenvalues of the N truncation that reappear within `tol` at size 2N.
pub fn converged_outside(model: &CoefficientModel, n: usize, delta: f64, tol: f64) -> Result<Vec<f64>> {
    let small = outside_eigenvalues(model, n, delta)?;
    let large = outside_eigenvalues(model, 2 * n, delta)?;
    Ok(small.into_iter().filter(|x| large.iter().any(|y| (x - y).abs() <= tol)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRow {
    pub lo: f64,
    pub hi: f64,
    pub truncation: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenMatch {
    pub oracle: f64,
    pub jost: Option<f64>,
    pub difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub trunc_size: usize,
    pub bins: Vec<BinRow>,
    pub max_bin_discrepancy: f64,
    pub eigen: Vec<EigenMatch>,
    /// Jost eigenvalues without a converged truncation counterpart.
    pub unmatched_jost: Vec<f64>,
}

/// Compares truncation weights binned on `count` equal bins of [lo, hi] with ∫w over the
/// same bins, and matches outside eigenvalues converged under doubling to `jost_eigen`.
pub fn oracle_compare(
    model: &CoefficientModel,
    bins: (f64, f64, usize),
    trunc_size: usize,
    jost_eigen: &[f64],
    opts: &SpectralOptions,
) -> Result<OracleReport> {
    let (lo, hi, count) = bins;
    if count == 0 {
        return Ok(OracleReport { trunc_size, bins: Vec::new(), max_bin_discrepancy: 0.0, eigen: Vec::new(), unmatched_jost: Vec::new() });
    }
    let oracle = truncation_spectrum(model, trunc_size)?;
    let (x, w) = gauss_legendre(8);
    let width = (hi - lo) / count as f64;
    let mut rows = Vec::with_capacity(count);
    let coef = crate::jost::Coefficients::new(model);
    for k in 0..count {
        let (l, h) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
        let mut integral = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let lam = 0.5 * (l + h) + 0.5 * (h - l) * xi;
            integral += 0.5 * (h - l) * wi * weight_with(coef, lam, opts)?.w;
        }
        rows.push(BinRow { lo: l, hi: h, truncation: oracle.mass_in(l, h), integral });
    }
    let max_bin_discrepancy = rows.iter().map(|r| (r.truncation - r.integral).abs()).fold(0.0, f64::max);
    let delta = 1e-3;
    let large = outside_eigenvalues(model, 2 * trunc_size, delta)?;
    let converged: Vec<f64> =
        oracle.outside(delta).into_iter().filter(|x| large.iter().any(|y| (x - y).abs() <= 1e-8)).collect();
    let eigen: Vec<EigenMatch> = converged
        .iter()
        .map(|&o| {
            let best = jost_eigen.iter().copied().min_by(|p, q| (p - o).abs().total_cmp(&(q - o).abs()));
            EigenMatch { oracle: o, jost: best, difference: best.map(|j| (j - o).abs()) }
        })
        .collect();
    let unmatched_jost =
        jost_eigen.iter().copied().filter(|j| !converged.iter().any(|o| (o - j).abs() <= 1e-6)).collect();
    Ok(OracleReport { trunc_size, bins: rows, max_bin_discrepancy, eigen, unmatched_jost })
}
