//! Branch of √(z²−1), the local quantities z_n, ζ_n, the Ansatz q_n and the remainder r_n.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::dd::{log_zeta_correction, two_sum};
use crate::error::{Error, Result};
use crate::model::{CoefficientModel, HARD_CAP};

pub type C = Complex64;

/// Which boundary value is meant for real z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    None,
    Plus,
    Minus,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::None => Side::None,
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// A point z off [−1, 1], or a boundary point λ ± i0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    z: C,
    side: Side,
}

impl SpectralPoint {
    pub fn new(z: C, side: Side) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite z = {z}")));
        }
        if side != Side::None && z.im != 0.0 {
            return Err(Error::InvalidPoint(format!("boundary side given for non-real z = {z}")));
        }
        if z.im == 0.0 {
            if z.re.abs() == 1.0 {
                return Err(Error::InvalidPoint(format!("z = {} is an excluded edge point", z.re)));
            }
            if side == Side::None && z.re.abs() < 1.0 {
                return Err(Error::InvalidPoint(format!(
                    "z = {} lies on the cut; choose a side",
                    z.re
                )));
            }
        }
        // normalize -0.0 so that conjugation symmetry is exact
        Ok(SpectralPoint { z: C::new(z.re, if z.im == 0.0 { 0.0 } else { z.im }), side })
    }

    pub fn off_axis(z: C) -> Result<Self> {
        Self::new(z, Side::None)
    }

    /// λ + i0.
    pub fn upper(lambda: f64) -> Result<Self> {
        Self::new(C::new(lambda, 0.0), Side::Plus)
    }

    /// λ − i0.
    pub fn lower(lambda: f64) -> Result<Self> {
        Self::new(C::new(lambda, 0.0), Side::Minus)
    }

    pub fn z(&self) -> C {
        self.z
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn is_boundary(&self) -> bool {
        self.side != Side::None
    }

    /// True for λ ± i0 with |λ| < 1.
    pub fn on_cut(&self) -> bool {
        self.is_boundary() && self.z.re.abs() < 1.0
    }

    pub fn lambda(&self) -> Option<f64> {
        self.is_boundary().then_some(self.z.re)
    }

    /// The complex conjugate point (λ+i0 ↔ λ−i0).
    pub fn conj(&self) -> SpectralPoint {
        SpectralPoint { z: C::new(self.z.re, if self.z.im == 0.0 { 0.0 } else { -self.z.im }), side: self.side.flip() }
    }
}

/// √(w²−1) for a local argument. Real arguments inside (−1,1) take the boundary value
/// of `side`; real z off the cut with side None is evaluated as the upper edge.
#[inline]
pub fn sqrt_local(w: C, side: Side) -> C {
    if w.im == 0.0 {
        let x = w.re;
        if x.abs() >= 1.0 {
            let s = ((x - 1.0) * (x + 1.0)).sqrt();
            return C::new(if x > 0.0 { s } else { -s }, 0.0);
        }
        let s = ((1.0 - x) * (1.0 + x)).sqrt();
        return match side {
            Side::Minus => C::new(0.0, -s),
            _ => C::new(0.0, s),
        };
    }
    (w - 1.0).sqrt() * (w + 1.0).sqrt()
}

/// ζ(w) = w − √(w²−1) = 1/(w + √(w²−1)).
#[inline]
pub fn zeta_local(w: C, s: C) -> C {
    (w + s).inv()
}

pub fn branch_sqrt(p: &SpectralPoint) -> C {
    sqrt_local(p.z, p.side)
}

pub fn zeta(p: &SpectralPoint) -> C {
    zeta_local(p.z, branch_sqrt(p))
}

/// Local data at one index: z_n = (z − b_n)/(2a_n), s_n = √(z_n²−1), ζ_n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Local {
    pub a: f64,
    pub b: f64,
    pub z: C,
    pub s: C,
    pub zeta: C,
}

impl Local {
    #[inline]
    pub fn new(a: f64, b: f64, p: &SpectralPoint) -> Local {
        let z = if p.z.im == 0.0 {
            C::new((p.z.re - b) / (2.0 * a), 0.0)
        } else {
            (p.z - b) / (2.0 * a)
        };
        let s = sqrt_local(z, p.side);
        Local { a, b, z, s, zeta: zeta_local(z, s) }
    }

    /// log ζ_n with the argument −θ_n (upper side) or +θ_n (lower side) on the real axis.
    #[inline]
    pub fn log_zeta(&self, side: Side) -> C {
        if self.z.im == 0.0 {
            let theta = theta_of(self.z.re);
            let arg = if side == Side::Minus { theta } else { -theta };
            // |ζ| = 1 exactly inside the cut
            let re = if self.z.re.abs() < 1.0 { 0.0 } else { self.zeta.norm().ln() };
            C::new(re, arg)
        } else {
            self.zeta.ln()
        }
    }
}

/// θ = arccos λ clamped to 0 for λ ≥ 1 and π for λ ≤ −1.
#[inline]
pub fn theta_of(lambda: f64) -> f64 {
    if lambda >= 1.0 {
        0.0
    } else if lambda <= -1.0 {
        PI
    } else {
        lambda.acos()
    }
}

/// r_n = (a_{n−1} − a_n)ζ_{n−1}^{−1} + a_n(ζ_{n−1}^{−1} − ζ_n^{−1}), with the difference of
/// inverse ζ's written as (z_{n−1} − z_n)(1 + (z_{n−1}+z_n)/(s_{n−1}+s_n)).
#[inline]
pub fn remainder(prev: &Local, cur: &Local) -> C {
    let dz = prev.z - cur.z;
    let ssum = prev.s + cur.s;
    let dinv = if ssum.norm_sqr() > 0.0625 * (prev.s.norm_sqr() + cur.s.norm_sqr()) {
        dz * (1.0 + (prev.z + cur.z) / ssum)
    } else {
        // s_{n−1} and s_n are far apart, so nothing cancels
        dz + (prev.s - cur.s)
    };
    (prev.a - cur.a) / prev.zeta + cur.a * dinv
}

/// Per-index Ansatz data for n = 0..=N+1.
#[derive(Debug, Clone, Serialize)]
pub struct AnsatzProfile {
    #[serde(skip)]
    pub point: SpectralPoint,
    pub tail_index: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub z: Vec<C>,
    /// s_n = √(z_n²−1) on the branch of the point.
    pub s: Vec<C>,
    pub zeta: Vec<C>,
    /// log q_n with the argument reduced to (−π, π]; log_q[0] = 0.
    pub log_q: Vec<C>,
    /// r_n, with r_0 = 0.
    pub r: Vec<C>,
    /// θ_n and φ_n = Σ_{m<n} θ_m, boundary points only (empty otherwise).
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Φ_n = φ_n − n·arccos λ, on the cut only.
    pub big_phi: Vec<f64>,
    /// k(λ) = Π |ζ(λ_m ± i0)| over |λ_m| ≥ 1, on the cut only.
    pub k_lambda: Option<f64>,
    pub eps: Vec<f64>,
}

impl AnsatzProfile {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn local(&self, n: usize) -> Local {
        Local { a: self.a[n], b: self.b[n], z: self.z[n], s: self.s[n], zeta: self.zeta[n] }
    }

    pub fn q(&self, n: usize) -> C {
        self.log_q[n].exp()
    }
}

const TAU_HI: f64 = 6.283185307179586;
const TAU_LO: f64 = 2.4492935982947064e-16;

/// Running Σ log ζ_m in double-double, so that rounding does not grow with n.
#[derive(Default)]
struct LogSum {
    re: (f64, f64),
    im: (f64, f64),
}

impl LogSum {
    /// Adds x + lo, where lo is a correction far below the ulp of x.
    fn add(&mut self, x: C, lo: C) {
        let (h, e) = two_sum(self.re.0, x.re);
        self.re = (h, self.re.1 + e + lo.re);
        let (h, e) = two_sum(self.im.0, x.im);
        self.im = (h, self.im.1 + e + lo.im);
    }

    fn value(&self) -> C {
        let (hi, lo) = self.im;
        let k = (hi / TAU_HI).round();
        let arg = (-k).mul_add(TAU_HI, hi) - k * TAU_LO + lo;
        C::new(self.re.0 + self.re.1, arg)
    }
}

/// Builds the profile on 0..=N+1.
pub fn build_profile(model: &CoefficientModel, p: &SpectralPoint, n_tail: usize) -> Result<AnsatzProfile> {
    if n_tail < 1 {
        return Err(Error::Config("profile needs N ≥ 1".into()));
    }
    if n_tail + 1 > HARD_CAP {
        return Err(Error::IndexOutOfRange { index: n_tail as i64 + 1, cap: HARD_CAP });
    }
    let len = n_tail + 2;
    let mut prof = AnsatzProfile {
        point: *p,
        tail_index: n_tail,
        a: Vec::with_capacity(len),
        b: Vec::with_capacity(len),
        z: Vec::with_capacity(len),
        s: Vec::with_capacity(len),
        zeta: Vec::with_capacity(len),
        log_q: Vec::with_capacity(len),
        r: Vec::with_capacity(len),
        theta: Vec::new(),
        phi: Vec::new(),
        big_phi: Vec::new(),
        k_lambda: None,
        eps: vec![0.0; len],
    };
    let boundary = p.is_boundary();
    let mut log_q = LogSum::default();
    let mut phi = 0.0;
    let mut log_k = 0.0;
    let mut prev: Option<Local> = None;
    // on a constant stretch the same rounded log ζ would be added over and over
    let mut correction: Option<C> = None;
    for n in 0..len {
        let (a, b) = model.eval_coeffs(n as i64)?;
        let loc = Local::new(a, b, p);
        prof.a.push(a);
        prof.b.push(b);
        prof.z.push(loc.z);
        prof.s.push(loc.s);
        prof.zeta.push(loc.zeta);
        prof.log_q.push(log_q.value());
        prof.r.push(prev.map_or(C::new(0.0, 0.0), |pr| remainder(&pr, &loc)));
        if boundary {
            let th = theta_of(loc.z.re);
            prof.theta.push(th);
            prof.phi.push(phi);
            phi += th;
            if loc.z.re.abs() >= 1.0 {
                log_k += loc.zeta.norm().ln();
            }
        }
        let l = loc.log_zeta(p.side);
        let lo = if prev.is_some_and(|pr| pr.z == loc.z) {
            *correction.get_or_insert_with(|| log_zeta_correction(loc.z, loc.s, loc.zeta, l))
        } else {
            correction = None;
            C::new(0.0, 0.0)
        };
        log_q.add(l, lo);
        prev = Some(loc);
    }
    if p.on_cut() {
        let theta = p.z.re.acos();
        prof.big_phi = prof.phi.iter().enumerate().map(|(n, &ph)| ph - n as f64 * theta).collect();
        prof.k_lambda = Some(log_k.exp());
    }
    // ε_n backward from the closed-form value at the end
    let mut e = model.eps(len - 1);
    prof.eps[len - 1] = e;
    for n in (0..len - 1).rev() {
        e += (prof.a[n + 1] - prof.a[n]).abs() + (prof.b[n + 1] - prof.b[n]).abs();
        prof.eps[n] = e;
    }
    Ok(prof)
}
