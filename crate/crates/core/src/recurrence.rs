//! Orthonormal polynomials, Wronskians, the growing solution and resolvent entries.

use crate::ansatz::{branch_sqrt, build_profile, Local, SpectralPoint, C};
use crate::error::{Error, Result};
use crate::jost::{jost_function, solve_jost_with, JostOptions, JostSolution};
use crate::model::{CoefficientModel, A_MINUS_ONE, HARD_CAP};

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// A solution of the difference equation in log-compensated form:
/// x_n = exp(log_scale_n)·mantissa_n for n = start..=end.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub start: isize,
    pub log_scale: Vec<C>,
    pub mantissa: Vec<C>,
}

impl Solution {
    pub fn end(&self) -> isize {
        self.start + self.mantissa.len() as isize - 1
    }

    fn parts(&self, n: isize) -> Result<(C, C)> {
        if n < self.start || n > self.end() {
            return Err(Error::IndexOutOfRange { index: n as i64, cap: self.end().max(0) as usize });
        }
        let i = (n - self.start) as usize;
        Ok((self.log_scale[i], self.mantissa[i]))
    }

    pub fn value(&self, n: isize) -> Result<C> {
        let (l, m) = self.parts(n)?;
        Ok(if m == ZERO { ZERO } else { l.exp() * m })
    }
}

/// {x, y}(n) = a_n(x_n y_{n+1} − x_{n+1} y_n).
pub fn wronskian(model: &CoefficientModel, x: &Solution, y: &Solution, n: isize) -> Result<C> {
    let (a, _) = model.eval_coeffs(n as i64)?;
    let (lx0, mx0) = x.parts(n)?;
    let (lx1, mx1) = x.parts(n + 1)?;
    let (ly0, my0) = y.parts(n)?;
    let (ly1, my1) = y.parts(n + 1)?;
    let term = |l: C, m: C| if m == ZERO { ZERO } else { l.exp() * m };
    Ok(a * (term(lx0 + ly1, mx0 * my1) - term(lx1 + ly0, mx1 * my0)))
}

/// P_n for n = −1..=N, raw or as s_n = q_n P_n.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySequence {
    pub z: C,
    /// P_n (raw) or s_n (scaled), stored at index n + 1.
    pub values: Vec<C>,
    /// log q_n for n = 0..=N when scaled.
    pub log_q: Option<Vec<C>>,
}

impl PolySequence {
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() <= 1
    }

    /// Stored value at n: P_n, or s_n = q_nP_n when scaled.
    pub fn stored(&self, n: isize) -> C {
        self.values[(n + 1) as usize]
    }

    /// P_n itself (may overflow for a scaled sequence far off the cut).
    pub fn p(&self, n: isize) -> C {
        match &self.log_q {
            None => self.stored(n),
            Some(lq) if n >= 0 => self.stored(n) * (-lq[n as usize]).exp(),
            Some(_) => ZERO,
        }
    }

    pub fn to_solution(&self) -> Solution {
        let log_scale = match &self.log_q {
            None => vec![ZERO; self.values.len()],
            Some(lq) => std::iter::once(ZERO).chain(lq.iter().map(|l| -l)).collect(),
        };
        Solution { start: -1, log_scale, mantissa: self.values.clone() }
    }
}

fn check_index(n: usize) -> Result<()> {
    if n > HARD_CAP {
        return Err(Error::IndexOutOfRange { index: n as i64, cap: HARD_CAP });
    }
    Ok(())
}

/// Forward three-term recurrence P_{n+1} = ((z − b_n)P_n − a_{n−1}P_{n−1})/a_n.
pub fn eval_poly(model: &CoefficientModel, z: C, n_max: usize) -> Result<PolySequence> {
    check_index(n_max)?;
    let mut values = Vec::with_capacity(n_max + 2);
    values.push(ZERO);
    values.push(ONE);
    let mut a_prev = A_MINUS_ONE;
    for n in 0..n_max {
        let (a, b) = model.coeffs(n);
        let next = ((z - b) * values[n + 1] - a_prev * values[n]) / a;
        if !(next.re.is_finite() && next.im.is_finite()) {
            return Err(Error::Overflow(n + 1));
        }
        values.push(next);
        a_prev = a;
    }
    Ok(PolySequence { z, values, log_q: None })
}

/// Real P_n(λ) for n = 0..=N.
pub fn eval_poly_real(model: &CoefficientModel, lambda: f64, n_max: usize) -> Result<Vec<f64>> {
    check_index(n_max)?;
    let mut out = Vec::with_capacity(n_max + 1);
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut a_prev = A_MINUS_ONE;
    out.push(cur);
    for n in 0..n_max {
        let (a, b) = model.coeffs(n);
        let next = ((lambda - b) * cur - a_prev * prev) / a;
        if !next.is_finite() {
            return Err(Error::Overflow(n + 1));
        }
        out.push(next);
        prev = cur;
        cur = next;
        a_prev = a;
    }
    Ok(out)
}

/// One step of s_{n+1} = −(ζ_n/a_n)[a_{n−1}ζ_{n−1}s_{n−1} + (b_n − z)s_n].
#[inline]
pub(crate) fn scaled_step(z: C, prev_azeta: C, s_prev: C, loc: &Local, s: C) -> C {
    -(loc.zeta / loc.a) * (prev_azeta * s_prev + (loc.b - z) * s)
}

/// s_n = q_n P_n from the recurrence multiplied through by q_{n+1}.
pub fn eval_poly_scaled(model: &CoefficientModel, p: &SpectralPoint, n_max: usize) -> Result<PolySequence> {
    let prof = build_profile(model, p, n_max.max(1))?;
    let z = p.z();
    let mut values = Vec::with_capacity(n_max + 2);
    values.push(ZERO);
    values.push(ONE);
    let mut prev_azeta = ZERO;
    for n in 0..n_max {
        let loc = prof.local(n);
        values.push(scaled_step(z, prev_azeta, values[n], &loc, values[n + 1]));
        prev_azeta = loc.a * loc.zeta;
    }
    let mut log_q = prof.log_q;
    log_q.truncate(n_max + 1);
    Ok(PolySequence { z, values, log_q: Some(log_q) })
}

/// Jost solution as a log-compensated sequence on −1..=N+1.
pub fn jost_as_solution(sol: &JostSolution) -> Solution {
    let scale = if sol.normalized { sol.k_lambda.unwrap_or(1.0) } else { 1.0 };
    let mut log_scale = vec![ZERO];
    let mut mantissa = vec![sol.f_minus_one / scale];
    let ls = scale.ln();
    for (lq, u) in sol.profile.log_q.iter().zip(&sol.u) {
        log_scale.push(lq - ls);
        mantissa.push(*u);
    }
    Solution { start: -1, log_scale, mantissa }
}

/// g_n = f_n G_n with G_n = Σ_{m=n0}^{n} (a_{m−1}f_{m−1}f_m)^{−1}.
#[derive(Debug, Clone)]
pub struct GrowingSolution {
    pub n0: usize,
    /// H_n = q_n² G_n for n = n0−1..=N+1 (H_{n0−1} = 0).
    pub h: Vec<C>,
    /// q_n g_n = u_n H_n over the same range.
    pub qg: Vec<C>,
    log_q: Vec<C>,
}

impl GrowingSolution {
    fn offset(&self, n: isize) -> Option<usize> {
        let i = n - (self.n0 as isize - 1);
        (i >= 0 && (i as usize) < self.qg.len()).then_some(i as usize)
    }

    /// q_n g_n, which tends to 1/√(z²−1).
    pub fn scaled(&self, n: usize) -> Option<C> {
        self.offset(n as isize).map(|i| self.qg[i])
    }

    pub fn to_solution(&self) -> Solution {
        let first = self.n0 as isize - 1;
        let log_scale = (0..self.qg.len())
            .map(|i| {
                let n = first + i as isize;
                if n < 0 { ZERO } else { -self.log_q[n as usize] }
            })
            .collect();
        Solution { start: first, log_scale, mantissa: self.qg.clone() }
    }
}

/// Largest start index tried for the growing solution.
pub const N0_SCAN_CAP: usize = 64;

pub fn growing_solution(sol: &JostSolution, model: &CoefficientModel) -> Result<GrowingSolution> {
    if sol.point().on_cut() {
        return Err(Error::InvalidPoint("growing solution needs z off [−1, 1]".into()));
    }
    let _ = model;
    let n_tail = sol.tail_index;
    // magnitudes of f_n/q_n on −1..=N
    let mags: Vec<f64> = std::iter::once(sol.f_minus_one.norm())
        .chain(sol.u[..=n_tail].iter().map(|u| u.norm()))
        .collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    // suffix minima: min over n ≥ n0 − 1
    let mut suffix = mags.clone();
    for i in (0..suffix.len() - 1).rev() {
        suffix[i] = suffix[i].min(suffix[i + 1]);
    }
    let n0 = (0..=N0_SCAN_CAP.min(n_tail))
        .find(|&n0| suffix[n0] > 1e-8 * max)
        .ok_or(Error::NoStartIndex(N0_SCAN_CAP))?;
    let pr = &sol.profile;
    let u = &sol.u;
    let mut h = vec![ZERO];
    let mut qg = vec![ZERO];
    for n in n0..=n_tail + 1 {
        let prev = *h.last().unwrap();
        let hn = if n == 0 {
            ONE / (A_MINUS_ONE * sol.f_minus_one * u[0])
        } else {
            let z = pr.zeta[n - 1];
            z * z * prev + z / (pr.a[n - 1] * u[n - 1] * u[n])
        };
        h.push(hn);
        qg.push(u[n] * hn);
    }
    Ok(GrowingSolution { n0, h, qg, log_q: pr.log_q.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    pub tol: f64,
    /// Index cap for the forward evolution.
    pub max_index: usize,
    pub jost: JostOptions,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { tol: 1e-8, max_index: 1 << 22, jost: JostOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBranch {
    /// {P, g}, from the Wronskian with the growing solution.
    pub wronskian: C,
    /// q_n^{−1}P_n where successive values are closest.
    pub plateau: C,
    pub plateau_index: usize,
    /// Relative change of q_n^{−1}P_n at the plateau.
    pub plateau_spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnPnLimit {
    /// lim q_nP_n (NaN when `eigen` is set).
    pub value: C,
    /// Index at which the sequence was accepted.
    pub n: usize,
    /// |s_n − s_{n/2}| at acceptance.
    pub delta: f64,
    /// −Ω/√(z²−1) from the Jost solution.
    pub jost_route: C,
    pub omega: C,
    pub eigen: Option<EigenBranch>,
}

/// lim q_nP_n, or the eigenvalue branch lim q_n^{−1}P_n = {P, g} when Ω(z) vanishes.
pub fn limit_qnpn(model: &CoefficientModel, z: C, opts: &LimitOptions) -> Result<QnPnLimit> {
    let p = SpectralPoint::off_axis(z)?;
    let value = jost_function(model, &p, &opts.jost)?;
    let omega = value.omega;
    let root = branch_sqrt(&p);
    let jost_route = -omega / root;
    if omega.norm() < 1e-9 * (1.0 + z.norm()) {
        let eigen = eigen_branch(model, &p, opts)?;
        return Ok(QnPnLimit { value: C::new(f64::NAN, f64::NAN), n: 0, delta: 0.0, jost_route, omega, eigen: Some(eigen) });
    }
    let cap = opts.max_index.min(HARD_CAP);
    let mut checkpoint = 1024usize;
    let mut at_checkpoint: Option<C> = None;
    let (mut s_prev, mut s) = (ZERO, ONE);
    let mut prev_azeta = ZERO;
    for n in 0..cap {
        let (a, b) = model.coeffs(n);
        let loc = Local::new(a, b, &p);
        let next = scaled_step(z, prev_azeta, s_prev, &loc, s);
        prev_azeta = loc.a * loc.zeta;
        s_prev = s;
        s = next;
        if n + 1 == checkpoint {
            if let Some(old) = at_checkpoint {
                let delta = (s - old).norm();
                if delta < opts.tol {
                    return Ok(QnPnLimit { value: s, n: n + 1, delta, jost_route, omega, eigen: None });
                }
            }
            at_checkpoint = Some(s);
            checkpoint *= 2;
        }
    }
    let delta = at_checkpoint.map_or(f64::INFINITY, |old| (s - old).norm());
    Err(Error::NotStabilized { n: cap, delta })
}

fn eigen_branch(model: &CoefficientModel, p: &SpectralPoint, opts: &LimitOptions) -> Result<EigenBranch> {
    let jopts = JostOptions { min_index: 128, residual_tol: None, ..opts.jost };
    let sol = solve_jost_with(model, p, &jopts)?;
    let g = growing_solution(&sol, model)?;
    let n_max = 96.min(sol.tail_index);
    let poly = eval_poly_scaled(model, p, n_max)?;
    let at = g.n0 as isize;
    let wr = wronskian(model, &poly.to_solution(), &g.to_solution(), at)?;
    // t_n = P_n/q_n = s_n/q_n²
    let lq = poly.log_q.as_ref().unwrap();
    let t: Vec<C> = (0..=n_max).map(|n| poly.stored(n as isize) * (-2.0 * lq[n]).exp()).collect();
    let (mut best, mut best_n) = (f64::INFINITY, 1);
    for n in 1..n_max {
        let spread = (t[n + 1] - t[n]).norm() / t[n].norm();
        if spread < best {
            best = spread;
            best_n = n;
        }
    }
    Ok(EigenBranch { wronskian: wr, plateau: t[best_n], plateau_index: best_n, plateau_spread: best })
}

/// Jost data and scaled polynomials for resolvent entries R_nm = Ω^{−1}P_min f_max.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub sol: JostSolution,
    pub poly: PolySequence,
}

impl Resolvent {
    pub fn new(model: &CoefficientModel, p: &SpectralPoint, max_index: usize, tol: f64) -> Result<Self> {
        if p.is_boundary() && !p.on_cut() {
            return Err(Error::InvalidPoint("boundary points must lie inside (−1, 1)".into()));
        }
        let opts = JostOptions { tol, min_index: max_index + 1, ..Default::default() };
        let sol = solve_jost_with(model, p, &opts)?;
        if !p.on_cut() && sol.omega.norm() < 1e-9 * (1.0 + p.z().norm()) {
            return Err(Error::AtEigenvalue(sol.omega.norm()));
        }
        let poly = eval_poly_scaled(model, p, max_index)?;
        Ok(Resolvent { sol, poly })
    }

    pub fn max_index(&self) -> usize {
        self.poly.len()
    }

    pub fn entry(&self, n: usize, m: usize) -> Result<C> {
        let (lo, hi) = (n.min(m), n.max(m));
        if hi > self.max_index() {
            return Err(Error::IndexOutOfRange { index: hi as i64, cap: self.max_index() });
        }
        let lq = &self.sol.profile.log_q;
        let s = self.poly.stored(lo as isize);
        let u = self.sol.u[hi];
        Ok((lq[hi] - lq[lo]).exp() * s * u / self.sol.omega)
    }
}

/// (R(z)e_n, e_m) = Ω(z)^{−1}P_min(z) f_max(z).
pub fn resolvent_entry(model: &CoefficientModel, p: &SpectralPoint, n: usize, m: usize) -> Result<C> {
    Resolvent::new(model, p, n.max(m), 1e-10)?.entry(n, m)
}
