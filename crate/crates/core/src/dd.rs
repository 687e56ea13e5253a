//! Just enough double-double arithmetic to correct the rounding of log ζ on constant stretches.

use crate::ansatz::C;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd(pub f64, pub f64);

const LN2: Dd = Dd(0.6931471805599453, 2.3190468138462996e-17);
const PI_2: Dd = Dd(1.5707963267948966, 6.123233995736766e-17);

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let t = s - a;
    (s, (a - (s - t)) + (b - t))
}

#[inline]
fn renorm(s: f64, e: f64) -> Dd {
    let h = s + e;
    Dd(h, e - (h - s))
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd(x, 0.0)
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.0, o.0);
        renorm(s, e + self.1 + o.1)
    }

    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p);
        renorm(p, e + self.0 * o.1 + self.1 * o.0)
    }

    fn div_f(self, d: f64) -> Dd {
        let q = self.0 / d;
        let r = self.sub(Dd::from(q).mul(Dd::from(d)));
        renorm(q, r.0 / d)
    }

    fn scale(self, f: f64) -> Dd {
        Dd(self.0 * f, self.1 * f)
    }

    fn f(self) -> f64 {
        self.0 + self.1
    }
}

fn exp(x: Dd) -> Dd {
    let k = (x.0 / LN2.0).round();
    let r = x.sub(LN2.mul(Dd::from(k))).scale(1.0 / 1024.0);
    let (mut term, mut e) = (r, r);
    for i in 2..=10 {
        term = term.mul(r).div_f(i as f64);
        e = e.add(term);
    }
    // (1 + e)^1024 kept in the form 1 + e
    for _ in 0..10 {
        e = e.scale(2.0).add(e.mul(e));
    }
    e.add(Dd::from(1.0)).scale(2f64.powi(k as i32))
}

fn sin_cos(x: Dd) -> (Dd, Dd) {
    let j = (x.0 / PI_2.0).round();
    let r = x.sub(PI_2.mul(Dd::from(j)));
    let r2 = r.mul(r);
    let (mut s, mut c) = (r, Dd::from(1.0));
    let (mut ts, mut tc) = (r, Dd::from(1.0));
    for k in 1..=13 {
        let k = k as f64;
        ts = ts.mul(r2).div_f(-(2.0 * k) * (2.0 * k + 1.0));
        tc = tc.mul(r2).div_f(-(2.0 * k - 1.0) * (2.0 * k));
        s = s.add(ts);
        c = c.add(tc);
    }
    match (j as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, s.neg()),
        2 => (s.neg(), c.neg()),
        _ => (c.neg(), s),
    }
}

#[derive(Debug, Clone, Copy)]
struct Cdd(Dd, Dd);

impl Cdd {
    fn from(z: C) -> Cdd {
        Cdd(Dd::from(z.re), Dd::from(z.im))
    }

    fn add(self, o: Cdd) -> Cdd {
        Cdd(self.0.add(o.0), self.1.add(o.1))
    }

    fn sub(self, o: Cdd) -> Cdd {
        Cdd(self.0.sub(o.0), self.1.sub(o.1))
    }

    fn mul(self, o: Cdd) -> Cdd {
        Cdd(self.0.mul(o.0).sub(self.1.mul(o.1)), self.0.mul(o.1).add(self.1.mul(o.0)))
    }

    fn c(self) -> C {
        C::new(self.0.f(), self.1.f())
    }
}

/// δ with log ζ = l + δ to double-double accuracy, where ζ = 1/(z + s), s² = z² − 1,
/// and `s`, `zeta`, `l` are the double values of s, ζ and log ζ.
pub(crate) fn log_zeta_correction(z: C, s: C, zeta: C, l: C) -> C {
    let one = Cdd::from(C::new(1.0, 0.0));
    let zz = Cdd::from(z);
    let w = zz.mul(zz).sub(one);
    let s0 = Cdd::from(s);
    let s = s0.add(Cdd::from(w.sub(s0.mul(s0)).c() / (2.0 * s)));
    let d = zz.add(s);
    let r0 = Cdd::from(zeta);
    let zeta = r0.add(Cdd::from(zeta * one.sub(d.mul(r0)).c()));
    // e^{−l}
    let m = exp(Dd::from(-l.re));
    let (sn, cs) = sin_cos(Dd::from(l.im));
    let e = Cdd(m.mul(cs), m.mul(sn).neg());
    zeta.mul(e).sub(one).c()
}
