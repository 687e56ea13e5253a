//! Spectral weight, Bernstein–Szegő asymptotics, eigenvalues outside [−1, 1] and the
//! simplified phases available for Hilbert–Schmidt perturbations.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{branch_sqrt, theta_of, zeta, Local, SpectralPoint, C};
use crate::error::{Error, Result};
use crate::jost::{jost_function_with, solve_jost_with, Coefficients, JostOptions, JostValue};
use crate::model::{CoefficientModel, CoefficientTable, HARD_CAP};
use crate::quadrature::composite;
use crate::recurrence::{limit_qnpn, scaled_step, LimitOptions, Resolvent};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Grid points must satisfy |λ| ≤ 1 − margin.
    pub margin: f64,
    pub jost: JostOptions,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { margin: 1e-3, jost: JostOptions::with_tol(1e-10) }
    }
}

fn check_margin(lambda: f64, margin: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda.abs() <= 1.0 - margin) {
        return Err(Error::InvalidPoint(format!("λ = {lambda} is not within (−1 + {margin}, 1 − {margin})")));
    }
    Ok(())
}

/// Weight, amplitude and phase at one point of the cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightPoint {
    pub lambda: f64,
    pub w: f64,
    /// ϰ = 2|𝛀(λ+i0)|.
    pub kappa: f64,
    /// arg(−2𝛀(λ+i0)) in (−π, π].
    pub eta: f64,
    /// Normalized 𝛀(λ+i0).
    pub omega: C,
    pub tail_index: usize,
    pub residual_estimate: f64,
}

impl WeightPoint {
    fn from_omega(lambda: f64, omega: C, value: &JostValue) -> Self {
        let m = -2.0 * omega;
        WeightPoint {
            lambda,
            w: (1.0 - lambda * lambda).sqrt() / (2.0 * PI * omega.norm_sqr()),
            kappa: m.norm(),
            eta: m.arg(),
            omega,
            tail_index: value.tail_index,
            residual_estimate: value.residual_estimate,
        }
    }

    /// ϰ(1−λ²)^{−1/2}.
    pub fn amplitude(&self) -> f64 {
        self.kappa / (1.0 - self.lambda * self.lambda).sqrt()
    }

    /// The same amplitude written through the weight: (2/π)^{1/2}(1−λ²)^{−1/4}w^{−1/2}.
    pub fn amplitude_from_weight(&self) -> f64 {
        (2.0 / PI).sqrt() * (1.0 - self.lambda * self.lambda).powf(-0.25) / self.w.sqrt()
    }

    /// ϰ(1−λ²)^{−1/2} sin(φ_n + η).
    pub fn predict(&self, phi_n: f64) -> f64 {
        self.amplitude() * (phi_n + self.eta).sin()
    }
}

pub fn weight_with(coef: Coefficients, lambda: f64, opts: &SpectralOptions) -> Result<WeightPoint> {
    check_margin(lambda, opts.margin)?;
    let value = jost_function_with(coef, &SpectralPoint::upper(lambda)?, &opts.jost)?;
    Ok(WeightPoint::from_omega(lambda, value.omega_normalized(), &value))
}

/// w(λ) = (2π)^{−1}√(1−λ²)|𝛀(λ+i0)|^{−2} with ϰ and η.
pub fn weight(model: &CoefficientModel, lambda: f64) -> Result<(f64, f64, f64)> {
    let wp = weight_with(Coefficients::new(model), lambda, &SpectralOptions::default())?;
    Ok((wp.w, wp.kappa, wp.eta))
}

/// φ_n = Σ_{m<n} θ_m for n = 0..=n_max.
pub fn phase_sequence(model: &CoefficientModel, lambda: f64, n_max: usize) -> Result<Vec<f64>> {
    if n_max >= HARD_CAP {
        return Err(Error::IndexOutOfRange { index: n_max as i64, cap: HARD_CAP });
    }
    let mut out = Vec::with_capacity(n_max + 1);
    let mut phi = 0.0;
    out.push(phi);
    for n in 0..n_max {
        let (a, b) = model.coeffs(n);
        phi += theta_of((lambda - b) / (2.0 * a));
        out.push(phi);
    }
    Ok(out)
}

/// Predictions ϰ(1−λ²)^{−1/2} sin(φ_n + η) for n = 0..=n_max.
pub fn predict_sequence(model: &CoefficientModel, lambda: f64, n_max: usize, opts: &SpectralOptions) -> Result<Vec<f64>> {
    let wp = weight_with(Coefficients::new(model), lambda, opts)?;
    Ok(phase_sequence(model, lambda, n_max)?.into_iter().map(|phi| wp.predict(phi)).collect())
}

pub fn predict_pn(model: &CoefficientModel, lambda: f64, n: usize) -> Result<f64> {
    let wp = weight_with(Coefficients::new(model), lambda, &SpectralOptions::default())?;
    let phi = phase_sequence(model, lambda, n)?;
    Ok(wp.predict(phi[n]))
}

/// P_n = 2 Im[𝛀(λ−i0)𝐟_n(λ+i0)]/√(1−λ²) from a boundary solution at λ + i0.
pub fn reconstruct_pn(sol_plus: &crate::jost::JostSolution, n: usize) -> Result<f64> {
    let p = sol_plus.point();
    if !p.on_cut() || p.side() != crate::ansatz::Side::Plus {
        return Err(Error::InvalidPoint("reconstruction needs a solution at λ + i0 with |λ| < 1".into()));
    }
    if n > sol_plus.tail_index + 1 {
        return Err(Error::IndexOutOfRange { index: n as i64, cap: sol_plus.tail_index + 1 });
    }
    let lambda = p.z().re;
    // the product is invariant under the common scale k(λ) only once both factors carry it
    let k = if sol_plus.normalized { 1.0 } else { sol_plus.k_lambda.unwrap_or(1.0) };
    let x = sol_plus.omega.conj() * sol_plus.f(n as isize) / (k * k);
    Ok(2.0 * x.im / (1.0 - lambda * lambda).sqrt())
}

/// (2πi)^{−1}[R(λ+i0) − R(λ−i0)]_{nm}.
pub fn resolvent_jump(model: &CoefficientModel, lambda: f64, n: usize, m: usize, tol: f64) -> Result<C> {
    let k = n.max(m);
    let up = Resolvent::new(model, &SpectralPoint::upper(lambda)?, k, tol)?.entry(n, m)?;
    let lo = Resolvent::new(model, &SpectralPoint::lower(lambda)?, k, tol)?.entry(n, m)?;
    Ok((up - lo) / C::new(0.0, 2.0 * PI))
}

/// Total a.c. mass split into the quadrature part and the two edge corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassResult {
    pub mass: f64,
    pub interior: f64,
    pub edges: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassOptions {
    pub h: f64,
    pub panels: usize,
    pub order: usize,
}

impl Default for MassOptions {
    fn default() -> Self {
        MassOptions { h: 1e-3, panels: 24, order: 16 }
    }
}

/// ∫_{x}^{1} √(1−λ²) dλ.
fn envelope_tail(x: f64) -> f64 {
    PI / 4.0 - 0.5 * (x * (1.0 - x * x).sqrt() + x.asin())
}

/// ∫ w dλ over (−1, 1): Gauss–Legendre in t with λ = cos t on [−1+h, 1−h], and the edge
/// pieces from w ≈ c√(1−λ²) matched at ±(1−h).
pub fn mass_with(coef: Coefficients, opts: &SpectralOptions, mopts: &MassOptions) -> Result<MassResult> {
    let h = mopts.h;
    let (t_lo, t_hi) = ((1.0 - h).acos(), (-1.0 + h).acos());
    let (nodes, weights) = composite(t_lo, t_hi, mopts.panels, mopts.order);
    let sopts = SpectralOptions { margin: 0.5 * opts.margin.min(h), ..*opts };
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|&t| weight_with(coef, t.cos(), &sopts).map(|wp| wp.w * t.sin()))
        .collect::<Result<_>>()?;
    let interior: f64 = vals.iter().zip(&weights).map(|(v, w)| v * w).sum();
    let x = 1.0 - h;
    let env = (1.0 - x * x).sqrt();
    let right = weight_with(coef, x, &sopts)?.w / env;
    let left = weight_with(coef, -x, &sopts)?.w / env;
    let edges = (right + left) * envelope_tail(x);
    Ok(MassResult { mass: interior + edges, interior, edges })
}

pub fn mass(model: &CoefficientModel) -> Result<MassResult> {
    mass_with(Coefficients::new(model), &SpectralOptions::default(), &MassOptions::default())
}

/// sup_n(|α_n| + |b_n|) bound: the spectrum lies in [−R, R] with R = 2 + 2·sup.
pub fn search_radius(model: &CoefficientModel) -> f64 {
    2.0 + 2.0 * model.sup_perturbation()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub delta: f64,
    /// Grid points per search interval.
    pub grid: usize,
    /// Final bracket width.
    pub xtol: f64,
    /// Jost tolerance for the sign scan; only signs are needed there.
    pub grid_tol: f64,
    /// Jost options for bisection and eigenvector weights.
    pub jost: JostOptions,
    pub weights: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            delta: 1e-3,
            grid: 400,
            xtol: 1e-12,
            grid_tol: 1e-6,
            jost: JostOptions { residual_tol: None, max_index: 1 << 20, ..JostOptions::with_tol(1e-9) },
            weights: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub lambda: f64,
    /// Point mass |f_0|²/Σ|f_n|² of the spectral measure.
    pub weight: Option<f64>,
    /// Spread of q_n^{−1}P_n on its plateau.
    pub plateau_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSearch {
    pub eigenvalues: Vec<Eigenvalue>,
    pub warnings: Vec<String>,
}

/// Ω(λ+i0)e^{iψ} with ψ = Σ_m(θ_m − θ_∞). Real for real λ outside [−1, 1], continuous in λ.
pub fn real_jost(coef: Coefficients, lambda: f64, opts: &JostOptions) -> Result<f64> {
    let value = jost_function_with(coef, &SpectralPoint::upper(lambda)?, opts)?;
    let theta_inf = theta_of(lambda);
    let mut psi = 0.0;
    for n in 0..=value.tail_index + 1 {
        let (a, b) = coef.get(n);
        psi += theta_of((lambda - b) / (2.0 * a)) - theta_inf;
    }
    Ok((value.omega * C::from_polar(1.0, psi)).re)
}

/// Default search intervals [−R, −1−δ] and [1+δ, R].
pub fn default_intervals(model: &CoefficientModel, delta: f64) -> Vec<(f64, f64)> {
    let r = search_radius(model);
    vec![(-r, -1.0 - delta), (1.0 + delta, r)]
}

/// Shrinks a sign-change bracket to width `xtol`; returns (lo, hi, f(lo)).
fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut lo: f64, mut hi: f64, mut flo: f64, xtol: f64) -> Result<(f64, f64, f64)> {
    let mut it = 0;
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok((mid, mid, fm));
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        it += 1;
        if it > 200 {
            return Err(Error::BisectionFailure(it));
        }
    }
    Ok((lo, hi, flo))
}

/// Bracketed false position with the Illinois weight halving. The bracket always keeps
/// a sign change; stops once it is narrower than `xtol`.
fn illinois<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64) -> Result<f64> {
    let mut side = 0;
    for _ in 0..200 {
        if b - a <= xtol {
            return Ok(0.5 * (a + b));
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        // keep a step of at least xtol/2 inside the bracket so that it keeps shrinking
        let h = 0.5 * xtol;
        x = x.clamp(a + h, b - h);
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == (fa > 0.0) {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::BisectionFailure(200))
}

/// Zeros of Ω(λ+i0) on real intervals outside [−1, 1].
pub fn find_eigenvalues(model: &CoefficientModel, intervals: &[(f64, f64)], opts: &EigenOptions) -> Result<EigenSearch> {
    let r = search_radius(model);
    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    for &(lo, hi) in intervals {
        let inside = |x: f64| x.abs() >= 1.0 + opts.delta && x.abs() <= r;
        if !(lo < hi && inside(lo) && inside(hi) && lo.signum() == hi.signum()) {
            return Err(Error::Config(format!(
                "search interval [{lo}, {hi}] must lie in [−{r}, −1−δ] or [1+δ, {r}] with δ = {}",
                opts.delta
            )));
        }
        let count = opts.grid.max(2);
        let grid: Vec<f64> = (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect();
        let coarse = JostOptions { tol: opts.grid_tol.max(opts.jost.tol), ..opts.jost };
        let reduced = std::cell::Cell::new(false);
        // near the thresholds the fine tolerance may be out of reach; fall back to the scan one
        let f = |x: f64| match reduced.get() {
            true => real_jost(Coefficients::new(model), x, &coarse),
            false => match real_jost(Coefficients::new(model), x, &opts.jost) {
                Err(Error::TailNotConverged { .. }) => {
                    reduced.set(true);
                    real_jost(Coefficients::new(model), x, &coarse)
                }
                other => other,
            },
        };
        let vals: Vec<f64> =
            grid.par_iter().map(|&x| real_jost(Coefficients::new(model), x, &coarse)).collect::<Result<_>>()?;
        let mut cells = Vec::new();
        for i in 0..count {
            if vals[i] == 0.0 {
                roots.push(grid[i]);
                cells.push(i);
            } else if i + 1 < count && vals[i + 1] != 0.0 && (vals[i] > 0.0) != (vals[i + 1] > 0.0) {
                reduced.set(false);
                // cheap narrowing first, then the fine tolerance on a bracket it confirms
                let g = |x: f64| real_jost(Coefficients::new(model), x, &coarse);
                let (a, b, _) = bisect(&g, grid[i], grid[i + 1], vals[i], 1e-5f64.max(opts.xtol))?;
                let (fa, fb) = (f(a)?, f(b)?);
                let root = if (fa > 0.0) != (fb > 0.0) {
                    illinois(&f, a, b, fa, fb, opts.xtol)?
                } else {
                    let (lo_r, hi_r, _) = bisect(&f, grid[i], grid[i + 1], f(grid[i])?, opts.xtol)?;
                    0.5 * (lo_r + hi_r)
                };
                if reduced.get() {
                    warnings.push(format!("root near λ = {root} refined at the reduced tolerance {}", coarse.tol));
                }
                roots.push(root);
                cells.push(i);
            }
        }
        for pair in cells.windows(2) {
            if pair[1] - pair[0] < 2 {
                warnings.push(format!(
                    "sign changes near λ = {} and λ = {} are closer than two grid steps; refine the grid",
                    grid[pair[0]],
                    grid[pair[1]]
                ));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut eigenvalues = Vec::with_capacity(roots.len());
    for lambda in roots {
        if !opts.weights {
            eigenvalues.push(Eigenvalue { lambda, weight: None, plateau_spread: None });
            continue;
        }
        let weight = match eigen_weight(model, lambda, &opts.jost) {
            Ok(w) => Some(w),
            Err(Error::TailNotConverged { .. }) => {
                warnings.push(format!("no point mass for λ = {lambda}: the Jost solution did not converge"));
                None
            }
            Err(e) => return Err(e),
        };
        let lim = limit_qnpn(model, C::new(lambda, 0.0), &LimitOptions { jost: opts.jost, ..Default::default() });
        let plateau_spread = lim.ok().and_then(|l| l.eigen).map(|e| e.plateau_spread);
        eigenvalues.push(Eigenvalue { lambda, weight, plateau_spread });
    }
    Ok(EigenSearch { eigenvalues, warnings })
}

/// |f_0|²/Σ_n|f_n|² at an eigenvalue, with the free geometric tail beyond N added.
pub fn eigen_weight(model: &CoefficientModel, lambda: f64, jost: &JostOptions) -> Result<f64> {
    let p = SpectralPoint::upper(lambda)?;
    let z_free = zeta(&p).norm();
    let n_geo = ((1e-20f64).ln() / (2.0 * z_free.ln())).ceil() as usize;
    let opts = JostOptions { min_index: n_geo.clamp(64, 1 << 20), residual_tol: None, ..*jost };
    let sol = solve_jost_with(model, &p, &opts)?;
    let norm2 = |n: usize| (2.0 * sol.profile.log_q[n].re).exp() * sol.u[n].norm_sqr();
    let last = sol.tail_index + 1;
    let mut total: f64 = (0..=last).map(norm2).sum();
    total += norm2(last) * z_free * z_free / (1.0 - z_free * z_free);
    Ok(norm2(0) / total)
}

/// Continuous phase along a grid: principal value at the first point, 2π jumps removed.
pub fn unwind(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut shift = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = out[i - 1];
            let mut d = p + shift - prev;
            while d > PI {
                shift -= 2.0 * PI;
                d -= 2.0 * PI;
            }
            while d < -PI {
                shift += 2.0 * PI;
                d += 2.0 * PI;
            }
        }
        out.push(p + shift);
    }
    out
}

/// Uniform grid of `count` points on [lo, hi].
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub lambda_grid: Vec<f64>,
    pub w: Vec<f64>,
    pub kappa: Vec<f64>,
    pub eta: Vec<f64>,
    pub eigenvalues: Vec<Eigenvalue>,
    pub mass: Option<MassResult>,
    pub tail_index: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub spectral: SpectralOptions,
    pub eigen: Option<EigenOptions>,
    pub mass: Option<MassOptions>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { spectral: SpectralOptions::default(), eigen: None, mass: None }
    }
}

/// Weight data over a grid, computed in parallel and merged in grid order.
pub fn weight_scan(model: &CoefficientModel, grid: &[f64], opts: &ScanOptions) -> Result<SpectralSummary> {
    let table: CoefficientTable = model.table(opts.spectral.jost.max_index.min(HARD_CAP).saturating_add(2).min(1 << 21));
    let coef = Coefficients::with_table(model, &table);
    let points: Vec<WeightPoint> = grid.par_iter().map(|&l| weight_with(coef, l, &opts.spectral)).collect::<Result<_>>()?;
    let eta = unwind(&points.iter().map(|p| p.eta).collect::<Vec<_>>());
    let (eigenvalues, warnings) = match &opts.eigen {
        Some(eo) => {
            let s = find_eigenvalues(model, &default_intervals(model, eo.delta), eo)?;
            (s.eigenvalues, s.warnings)
        }
        None => (Vec::new(), Vec::new()),
    };
    let mass = opts.mass.map(|mo| mass_with(coef, &opts.spectral, &mo)).transpose()?;
    Ok(SpectralSummary {
        lambda_grid: grid.to_vec(),
        w: points.iter().map(|p| p.w).collect(),
        kappa: points.iter().map(|p| p.kappa).collect(),
        eta,
        eigenvalues,
        mass,
        tail_index: points.iter().map(|p| p.tail_index).collect(),
        warnings,
    })
}

fn require_hs(model: &CoefficientModel) -> Result<()> {
    if model.is_hilbert_schmidt() { Ok(()) } else { Err(Error::NotHilbertSchmidt("Σ(α_n² + b_n²) diverges for this model".into())) }
}

/// Σ_{m<n}(2cos θ·α_m + b_m) with cos θ = λ.
pub fn hs_linear_sum(model: &CoefficientModel, lambda: f64, n: usize) -> f64 {
    (0..n)
        .map(|m| {
            let (a, b) = model.coeffs(m);
            2.0 * lambda * (a - 0.5) + b
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsPhase {
    /// nθ + (sin θ)^{−1}Σ_{m<n}(2cos θ·α_m + b_m) + γ.
    pub phase: f64,
    /// γ_M at the largest index reached.
    pub gamma: f64,
    /// γ_n at the requested index, so that phase − gamma + gamma_n = φ_n.
    pub gamma_n: f64,
    pub gamma_index: usize,
    pub gamma_delta: f64,
    pub gamma_converged: bool,
}

/// Hilbert–Schmidt form of the phase. γ_n = φ_n − nθ − S_n/sin θ is accumulated term by
/// term and doubled in length until successive values differ by less than 1e−8.
pub fn hs_phase(model: &CoefficientModel, lambda: f64, n: usize, max_index: usize) -> Result<HsPhase> {
    require_hs(model)?;
    check_margin(lambda, 1e-3)?;
    let theta = lambda.acos();
    let sin = theta.sin();
    let cap = max_index.min(HARD_CAP);
    if n > cap {
        return Err(Error::IndexOutOfRange { index: n as i64, cap });
    }
    let mut gamma = 0.0;
    let mut linear = 0.0;
    let mut gamma_n = 0.0;
    let mut checkpoint = 1024.max(n.next_power_of_two());
    let mut previous: Option<f64> = None;
    let mut delta = f64::INFINITY;
    let mut m = 0;
    loop {
        if m == n {
            gamma_n = gamma;
        }
        if m == checkpoint {
            if let Some(prev) = previous {
                delta = (gamma - prev).abs();
                if delta < 1e-8 {
                    break;
                }
            }
            previous = Some(gamma);
            if 2 * checkpoint > cap {
                break;
            }
            checkpoint *= 2;
        }
        let (a, b) = model.coeffs(m);
        let t = 2.0 * lambda * (a - 0.5) + b;
        if m < n {
            linear += t;
        }
        gamma += theta_of((lambda - b) / (2.0 * a)) - theta - t / sin;
        m += 1;
    }
    Ok(HsPhase {
        phase: n as f64 * theta + linear / sin + gamma,
        gamma,
        gamma_n,
        gamma_index: m,
        gamma_delta: delta,
        gamma_converged: delta < 1e-8,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsLimit {
    /// lim ζ^n exp((z²−1)^{−1/2}Σ_{m<n}(2zα_m + b_m))P_n.
    pub value: C,
    /// Q = lim q_nζ^{−n}exp(−(z²−1)^{−1/2}Σ_{m<n}(2zα_m + b_m)), so value·Q = lim q_nP_n.
    pub compensation: C,
    pub n: usize,
    pub delta: f64,
    pub converged: bool,
}

/// Evolves the compensated polynomials with doubling checkpoints; reports the last
/// value with `converged = false` when it does not stabilize within `max_index`.
pub fn hs_complex_limit(model: &CoefficientModel, z: C, tol: f64, max_index: usize) -> Result<HsLimit> {
    require_hs(model)?;
    let p = SpectralPoint::off_axis(z)?;
    let omega = jost_function_with(Coefficients::new(model), &p, &JostOptions::with_tol(1e-10))?.omega;
    if omega.norm() < 1e-9 * (1.0 + z.norm()) {
        return Err(Error::AtEigenvalue(omega.norm()));
    }
    let root = branch_sqrt(&p);
    let log_zeta = Local::new(0.5, 0.0, &p).log_zeta(p.side());
    let cap = max_index.min(HARD_CAP);
    let (mut s_prev, mut s) = (C::new(0.0, 0.0), C::new(1.0, 0.0));
    let mut prev_azeta = C::new(0.0, 0.0);
    // e_n = L_n − n log ζ − S_n/√(z²−1), so that h_n = exp(−e_n)s_n
    let mut e = C::new(0.0, 0.0);
    let mut checkpoint = 1024usize;
    let mut previous: Option<C> = None;
    let mut delta = f64::INFINITY;
    let mut n = 0;
    while n < cap {
        let (a, b) = model.coeffs(n);
        let loc = Local::new(a, b, &p);
        let next = scaled_step(z, prev_azeta, s_prev, &loc, s);
        prev_azeta = loc.a * loc.zeta;
        s_prev = s;
        s = next;
        e += loc.log_zeta(p.side()) - log_zeta - (2.0 * z * (a - 0.5) + b) / root;
        n += 1;
        if n == checkpoint {
            let h = (-e).exp() * s;
            if let Some(old) = previous {
                delta = (h - old).norm();
                if delta < tol {
                    return Ok(HsLimit { value: h, compensation: e.exp(), n, delta, converged: true });
                }
            }
            previous = Some(h);
            checkpoint *= 2;
        }
    }
    Ok(HsLimit { value: (-e).exp() * s, compensation: e.exp(), n, delta, converged: false })
}
