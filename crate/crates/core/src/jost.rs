//! Modified Jost solution f_n = q_n u_n by a backward sweep of the Volterra equation.

use serde::Serialize;

use crate::ansatz::{build_profile, remainder, zeta, AnsatzProfile, Local, SpectralPoint, C};
use crate::error::{Error, Result};
use crate::model::{CoefficientModel, CoefficientTable, A_MINUS_ONE, HARD_CAP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostOptions {
    /// Target relative change of (u_0, u_1) between tail indices N and 2N.
    pub tol: f64,
    /// First tail index tried for long-range models.
    pub start_index: usize,
    /// The tail index is never chosen below this (so that u_n exists up to it).
    pub min_index: usize,
    /// Doubling stops with an error beyond this index.
    pub max_index: usize,
    /// Tolerance of the a posteriori equation residual; `None` skips the check.
    pub residual_tol: Option<f64>,
}

impl Default for JostOptions {
    fn default() -> Self {
        JostOptions {
            tol: 1e-10,
            start_index: 512,
            min_index: 0,
            max_index: 1 << 22,
            residual_tol: Some(1e-10),
        }
    }
}

impl JostOptions {
    pub fn with_tol(tol: f64) -> Self {
        JostOptions { tol, ..Default::default() }
    }
}

/// Source of coefficients for the hot loop.
#[derive(Clone, Copy)]
pub struct Coefficients<'a> {
    pub model: &'a CoefficientModel,
    pub table: Option<&'a CoefficientTable>,
}

impl<'a> Coefficients<'a> {
    pub fn new(model: &'a CoefficientModel) -> Self {
        Coefficients { model, table: None }
    }

    pub fn with_table(model: &'a CoefficientModel, table: &'a CoefficientTable) -> Self {
        Coefficients { model, table: Some(table) }
    }

    #[inline]
    pub fn get(&self, n: usize) -> (f64, f64) {
        match self.table {
            Some(t) if n < t.len() => (t.a[n], t.b[n]),
            _ => self.model.coeffs(n),
        }
    }
}

/// Tail-corrected start value c_k ≈ u_k. It is exactly 1 once the coefficients are free,
/// and otherwise removes the first order term of u_k − 1.
#[inline]
fn tail_start(loc: &Local, zeta_inf: C) -> C {
    let w = loc.zeta / (loc.a * (1.0 - loc.zeta * loc.zeta));
    let w_inf = zeta_inf / (A_MINUS_ONE * (1.0 - zeta_inf * zeta_inf));
    let f = loc.a / loc.zeta;
    let f_inf = A_MINUS_ONE / zeta_inf;
    (-0.5 * (w + w_inf) * (f - f_inf)).exp()
}

#[derive(Debug, Clone, Copy)]
struct SweepEnds {
    u0: C,
    u1: C,
    local0: Local,
    log_k: f64,
}

/// Backward sweep T_n = ζ_n²(r_{n+1}u_{n+1} + T_n+1), u_n = u_{n+1} − T_n/(a_nζ_n).
fn sweep<L, S>(local: L, p: &SpectralPoint, n_tail: usize, mut sink: S) -> SweepEnds
where
    L: Fn(usize) -> Local,
    S: FnMut(usize, C),
{
    let zeta_inf = zeta(p);
    let on_cut = p.on_cut();
    let mut log_k = 0.0;
    let mut add_k = |loc: &Local| {
        if on_cut && loc.z.re.abs() >= 1.0 {
            log_k += loc.zeta.norm().ln();
        }
    };
    let top = local(n_tail + 1);
    let mut cur = local(n_tail);
    add_k(&top);
    add_k(&cur);
    let c_top = tail_start(&top, zeta_inf);
    let c_cur = tail_start(&cur, zeta_inf);
    sink(n_tail + 1, c_top);
    sink(n_tail, c_cur);
    let mut t = cur.a * cur.zeta * (c_top - c_cur);
    let mut u_next = c_cur;
    let mut u1 = c_top;
    for n in (0..n_tail).rev() {
        let loc = local(n);
        add_k(&loc);
        let r = remainder(&loc, &cur);
        t = loc.zeta * loc.zeta * (r * u_next + t);
        let u = u_next - t / (loc.a * loc.zeta);
        sink(n, u);
        u1 = u_next;
        u_next = u;
        cur = loc;
    }
    SweepEnds { u0: u_next, u1, local0: cur, log_k }
}

/// f_{−1} from the difference equation at n = 0, with f_0 = u_0 and f_1 = ζ_0 u_1.
fn f_minus_one(p: &SpectralPoint, l0: &Local, u0: C, u1: C) -> C {
    ((p.z() - l0.b) * u0 - l0.a * l0.zeta * u1) / A_MINUS_ONE
}

/// Jost function data at a point, computed in O(1) memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JostValue {
    pub u0: C,
    pub u1: C,
    pub f_minus_one: C,
    /// Ω = −f_{−1}/2 (unnormalized).
    pub omega: C,
    /// k(λ) for points on the cut.
    pub k_lambda: Option<f64>,
    pub tail_index: usize,
    pub residual_estimate: f64,
}

impl JostValue {
    /// 𝛀 = Ω/k on the cut, Ω elsewhere.
    pub fn omega_normalized(&self) -> C {
        self.omega / self.k_lambda.unwrap_or(1.0)
    }
}

fn sweep_value(coef: Coefficients, p: &SpectralPoint, n_tail: usize) -> JostValue {
    let ends = sweep(|n| { let (a, b) = coef.get(n); Local::new(a, b, p) }, p, n_tail, |_, _| {});
    let fm1 = f_minus_one(p, &ends.local0, ends.u0, ends.u1);
    JostValue {
        u0: ends.u0,
        u1: ends.u1,
        f_minus_one: fm1,
        omega: -0.5 * fm1,
        k_lambda: p.on_cut().then(|| ends.log_k.exp()),
        tail_index: n_tail,
        residual_estimate: 0.0,
    }
}

fn relative_change(x: &JostValue, y: &JostValue) -> f64 {
    let d = (x.u0 - y.u0).norm().max((x.u1 - y.u1).norm());
    let s = y.u0.norm().max(y.u1.norm());
    if s > 0.0 { d / s } else { d }
}

/// Chooses the tail index by doubling until (u_0, u_1) changes by less than `tol`.
pub fn jost_function_with(coef: Coefficients, p: &SpectralPoint, opts: &JostOptions) -> Result<JostValue> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tol = {} must be positive", opts.tol)));
    }
    let cap = opts.max_index.min(HARD_CAP - 1);
    if let Some(end) = coef.model.support_end() {
        let n_tail = end.max(opts.min_index).max(64);
        if n_tail > cap {
            return Err(Error::IndexOutOfRange { index: n_tail as i64, cap });
        }
        return Ok(sweep_value(coef, p, n_tail));
    }
    let mut n_tail = opts.start_index.max(opts.min_index).max(2);
    if n_tail > cap {
        return Err(Error::IndexOutOfRange { index: n_tail as i64, cap });
    }
    let mut prev = sweep_value(coef, p, n_tail);
    let mut change = f64::INFINITY;
    loop {
        if n_tail >= cap {
            return Err(Error::TailNotConverged { n: n_tail, estimate: change });
        }
        // the last step lands on the cap itself
        n_tail = (2 * n_tail).min(cap);
        let mut cur = sweep_value(coef, p, n_tail);
        change = relative_change(&prev, &cur);
        cur.residual_estimate = change;
        if change <= opts.tol {
            return Ok(cur);
        }
        prev = cur;
    }
}

pub fn jost_function(model: &CoefficientModel, p: &SpectralPoint, opts: &JostOptions) -> Result<JostValue> {
    jost_function_with(Coefficients::new(model), p, opts)
}

/// Stored Jost solution on n = −1..=N+1.
#[derive(Debug, Clone, Serialize)]
pub struct JostSolution {
    pub profile: AnsatzProfile,
    /// u_n for n = 0..=N+1.
    pub u: Vec<C>,
    pub f_minus_one: C,
    /// Ω = −f_{−1}/2, divided by k(λ) once normalized.
    pub omega: C,
    pub k_lambda: Option<f64>,
    pub normalized: bool,
    pub tail_index: usize,
    pub residual_estimate: f64,
    /// The tail-corrected start value u_N.
    pub tail_start: C,
}

impl JostSolution {
    pub fn point(&self) -> SpectralPoint {
        self.profile.point
    }

    fn scale(&self) -> f64 {
        if self.normalized { self.k_lambda.unwrap_or(1.0) } else { 1.0 }
    }

    /// log f_n = log q_n + log u_n − log(scale), for 0 ≤ n ≤ N+1.
    pub fn log_f(&self, n: usize) -> C {
        self.profile.log_q[n] + self.u[n].ln() - self.scale().ln()
    }

    /// f_n for −1 ≤ n ≤ N+1. May underflow far from the cut; use `log_f` or `u` there.
    pub fn f(&self, n: isize) -> C {
        if n < 0 {
            return self.f_minus_one / self.scale();
        }
        let n = n as usize;
        self.profile.log_q[n].exp() * self.u[n] / self.scale()
    }

    /// max over 0 ≤ n < N of the scaled residual of a_{n−1}f_{n−1} + (b_n − z)f_n + a_n f_{n+1}.
    pub fn equation_residual(&self) -> (f64, usize) {
        let z = self.point().z();
        let pr = &self.profile;
        let mut worst = (0.0, 0);
        for n in 0..self.tail_index {
            let prev = if n == 0 {
                A_MINUS_ONE * self.f_minus_one
            } else {
                pr.a[n - 1] * self.u[n - 1] / pr.zeta[n - 1]
            };
            let next = pr.zeta[n] * self.u[n + 1];
            let res = prev + (pr.b[n] - z) * self.u[n] + pr.a[n] * next;
            let norm = self.u[n].norm() + next.norm();
            let rel = res.norm() / norm;
            if rel > worst.0 {
                worst = (rel, n);
            }
        }
        worst
    }

    /// Empirical envelope max_n |u_n − 1|/ε_n over the stored range (indices with ε_n > 0).
    pub fn envelope(&self) -> f64 {
        (0..=self.tail_index)
            .filter(|&n| self.profile.eps[n] > 0.0)
            .map(|n| (self.u[n] - 1.0).norm() / self.profile.eps[n])
            .fold(0.0, f64::max)
    }
}

/// Sweep with a fixed tail index N; the tail start error is not estimated.
pub fn solve_jost_at(model: &CoefficientModel, p: &SpectralPoint, n_tail: usize) -> Result<JostSolution> {
    let profile = build_profile(model, p, n_tail)?;
    let mut u = vec![C::new(0.0, 0.0); n_tail + 2];
    let ends = sweep(|n| profile.local(n), p, n_tail, |n, v| u[n] = v);
    let fm1 = f_minus_one(p, &ends.local0, ends.u0, ends.u1);
    Ok(JostSolution {
        k_lambda: profile.k_lambda,
        tail_start: u[n_tail],
        residual_estimate: 0.0,
        profile,
        u,
        f_minus_one: fm1,
        omega: -0.5 * fm1,
        normalized: false,
        tail_index: n_tail,
    })
}

pub fn solve_jost_with(model: &CoefficientModel, p: &SpectralPoint, opts: &JostOptions) -> Result<JostSolution> {
    let value = jost_function(model, p, opts)?;
    let mut sol = solve_jost_at(model, p, value.tail_index)?;
    sol.residual_estimate = value.residual_estimate;
    if let Some(tol) = opts.residual_tol {
        let (res, n) = sol.equation_residual();
        if !(res <= tol) {
            return Err(Error::EquationResidual { n, residual: res });
        }
    }
    Ok(sol)
}

pub fn solve_jost(model: &CoefficientModel, p: &SpectralPoint, tol: f64) -> Result<JostSolution> {
    solve_jost_with(model, p, &JostOptions::with_tol(tol))
}

/// Divides f and Ω by k(λ).
pub fn normalize_on_cut(mut sol: JostSolution) -> Result<JostSolution> {
    if !sol.point().on_cut() {
        return Err(Error::InvalidPoint("normalization needs a boundary point inside (−1, 1)".into()));
    }
    if sol.normalized {
        return Ok(sol);
    }
    let k = sol.k_lambda.ok_or_else(|| Error::InvalidPoint("k(λ) unavailable".into()))?;
    sol.omega /= k;
    sol.normalized = true;
    Ok(sol)
}

/// G_{n,m} = Σ_{p=n}^{m−1} (a_pζ_p)^{−1}(q_m/q_p)², evaluated directly.
pub fn kernel(profile: &AnsatzProfile, n: usize, m: usize) -> C {
    (n..m)
        .map(|k| (2.0 * (profile.log_q[m] - profile.log_q[k])).exp() / (profile.a[k] * profile.zeta[k]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeumannStart {
    /// u^{(0)} = 1 and u_N = u_{N+1} = 1.
    Unit,
    /// The same tail start as the production sweep.
    TailCorrected,
}

#[derive(Debug, Clone)]
pub struct NeumannResult {
    /// Σ_{k ≤ k_max} u^{(k)}_n for n = 0..=N.
    pub u: Vec<C>,
    /// sup_n |u^{(k)}_n| for k = 0..=k_max.
    pub term_norms: Vec<f64>,
}

/// Largest tail index accepted by the O(N²) Neumann oracle.
pub const NEUMANN_MAX_INDEX: usize = 4000;

/// Successive approximations of the truncated Volterra equation (test oracle).
pub fn iterate_neumann(model: &CoefficientModel, p: &SpectralPoint, n_tail: usize, k_max: usize) -> Result<NeumannResult> {
    iterate_neumann_with(model, p, n_tail, k_max, NeumannStart::TailCorrected)
}

pub fn iterate_neumann_with(
    model: &CoefficientModel,
    p: &SpectralPoint,
    n_tail: usize,
    k_max: usize,
    start: NeumannStart,
) -> Result<NeumannResult> {
    if k_max < 1 {
        return Err(Error::Config("k_max must be at least 1".into()));
    }
    if n_tail > NEUMANN_MAX_INDEX {
        return Err(Error::IndexOutOfRange { index: n_tail as i64, cap: NEUMANN_MAX_INDEX });
    }
    let prof = build_profile(model, p, n_tail)?;
    let n = n_tail;
    let zero = C::new(0.0, 0.0);
    // rows of K_{i,m} = G_{i,m} r_m for m = i+1..=N
    let row_start: Vec<usize> = (0..=n).scan(0, |acc, i| { let s = *acc; *acc += n - i; Some(s) }).collect();
    let mut kmat = vec![zero; n * (n + 1) / 2];
    let mut g_to_tail = vec![zero; n + 1];
    for m in 1..=n {
        let mut ratio = C::new(1.0, 0.0);
        let mut g = zero;
        for i in (0..m).rev() {
            ratio *= prof.zeta[i] * prof.zeta[i];
            g += ratio / (prof.a[i] * prof.zeta[i]);
            kmat[row_start[i] + (m - i - 1)] = g * prof.r[m];
            if m == n {
                g_to_tail[i] = g;
            }
        }
    }
    let h: Vec<C> = match start {
        NeumannStart::Unit => vec![C::new(1.0, 0.0); n + 1],
        NeumannStart::TailCorrected => {
            let zeta_inf = zeta(p);
            let c_n = tail_start(&prof.local(n), zeta_inf);
            let c_top = tail_start(&prof.local(n + 1), zeta_inf);
            let t_n = prof.a[n] * prof.zeta[n] * (c_top - c_n);
            (0..=n).map(|i| c_n - t_n * g_to_tail[i]).collect()
        }
    };
    let sup = |v: &[C]| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut sum = h.clone();
    let mut term = h;
    let mut norms = vec![sup(&term)];
    for k in 1..=k_max {
        let next: Vec<C> = (0..=n)
            .map(|i| {
                let row = &kmat[row_start[i]..row_start[i] + (n - i)];
                -row.iter().zip(&term[i + 1..]).map(|(kk, v)| kk * v).sum::<C>()
            })
            .collect();
        let norm = sup(&next);
        for (s, t) in sum.iter_mut().zip(&next) {
            *s += t;
        }
        let previous = norms[k - 1];
        norms.push(norm);
        term = next;
        // early terms may grow while k < C·R; only the final third must decrease
        if 3 * k > 2 * k_max && k >= 2 && norm > previous && norm > 1e-14 * sup(&sum) {
            return Err(Error::NeumannDivergence { k, current: norm, previous });
        }
    }
    Ok(NeumannResult { u: sum, term_norms: norms })
}
