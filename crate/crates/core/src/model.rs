//! Jacobi coefficient models and their variation tails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The convention a_{-1} = 1/2.
pub const A_MINUS_ONE: f64 = 0.5;

/// Largest index any computation is allowed to touch.
pub const HARD_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub alpha: f64,
    pub r1: f64,
    pub b: f64,
    pub r2: f64,
}

impl PowerLaw {
    /// α n^{-r1} and b n^{-r2}; both vanish at n = 0.
    #[inline]
    fn terms(&self, n: usize) -> (f64, f64) {
        if n == 0 {
            return (0.0, 0.0);
        }
        let x = n as f64;
        let da = if self.alpha == 0.0 { 0.0 } else { self.alpha * x.powf(-self.r1) };
        let db = if self.b == 0.0 { 0.0 } else { self.b * x.powf(-self.r2) };
        (da, db)
    }

    /// Σ_{m≥n} of the successive differences, using the telescoping identity.
    fn tail(&self, n: usize) -> f64 {
        if n == 0 {
            2.0 * (self.alpha.abs() + self.b.abs())
        } else {
            let x = n as f64;
            self.alpha.abs() * x.powf(-self.r1) + self.b.abs() * x.powf(-self.r2)
        }
    }

    fn is_trivial(&self) -> bool {
        self.alpha == 0.0 && self.b == 0.0
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("r1", self.r1), ("b", self.b), ("r2", self.r2)] {
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!("{name} must be finite")));
            }
        }
        for (name, r) in [("r1", self.r1), ("r2", self.r2)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidModel(format!("{name} = {r} is outside (0, 1]")));
            }
        }
        if self.alpha <= -0.5 {
            return Err(Error::InvalidModel(format!(
                "alpha = {} makes a_1 non-positive",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Free,
    PowerLaw(PowerLaw),
    /// Literal a_n, b_n; the model is free beyond each list.
    ExplicitList { a: Vec<f64>, b: Vec<f64> },
    /// Power law plus additive corrections α̃_n, b̃_n.
    Composite { power: PowerLaw, a_corr: Vec<f64>, b_corr: Vec<f64> },
}

/// Immutable, validated coefficient sequence (a_n, b_n).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    kind: ModelKind,
}

/// JSON representation of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_list: Option<Vec<f64>>,
}

impl CoefficientModel {
    pub fn free() -> Self {
        CoefficientModel { kind: ModelKind::Free }
    }

    pub fn power_law(alpha: f64, r1: f64, b: f64, r2: f64) -> Result<Self> {
        let power = PowerLaw { alpha, r1, b, r2 };
        power.validate()?;
        Ok(CoefficientModel { kind: ModelKind::PowerLaw(power) })
    }

    pub fn explicit(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        for (n, &v) in a.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::NonPositiveCoefficient { index: n as i64, value: v });
            }
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("b_list contains a non-finite value".into()));
        }
        Ok(CoefficientModel { kind: ModelKind::ExplicitList { a, b } })
    }

    pub fn composite(power: PowerLaw, a_corr: Vec<f64>, b_corr: Vec<f64>) -> Result<Self> {
        power.validate()?;
        if a_corr.iter().chain(&b_corr).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("correction lists must be finite".into()));
        }
        let model = CoefficientModel { kind: ModelKind::Composite { power, a_corr, b_corr } };
        // beyond the lists the power law alone keeps a_n > 0
        for n in 0..model.list_len() {
            let (a, _) = model.coeffs(n);
            if a <= 0.0 {
                return Err(Error::NonPositiveCoefficient { index: n as i64, value: a });
            }
        }
        Ok(model)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let has_power = spec.alpha.is_some() || spec.r1.is_some() || spec.b.is_some() || spec.r2.is_some();
        let has_lists = spec.a_list.is_some() || spec.b_list.is_some();
        let power = || -> Result<PowerLaw> {
            let alpha = spec.alpha.ok_or_else(|| Error::InvalidModel("missing alpha".into()))?;
            let r1 = spec.r1.ok_or_else(|| Error::InvalidModel("missing r1".into()))?;
            Ok(PowerLaw { alpha, r1, b: spec.b.unwrap_or(0.0), r2: spec.r2.unwrap_or(1.0) })
        };
        let lists = || (spec.a_list.clone().unwrap_or_default(), spec.b_list.clone().unwrap_or_default());
        match spec.kind.as_str() {
            "free" => {
                if has_power || has_lists {
                    return Err(Error::InvalidModel("free model takes no parameters".into()));
                }
                Ok(Self::free())
            }
            "power_law" => {
                if has_lists {
                    return Err(Error::InvalidModel("power_law takes no lists".into()));
                }
                let p = power()?;
                Self::power_law(p.alpha, p.r1, p.b, p.r2)
            }
            "explicit" => {
                if has_power {
                    return Err(Error::InvalidModel("explicit takes only a_list and b_list".into()));
                }
                let (a, b) = lists();
                Self::explicit(a, b)
            }
            "composite" => {
                let (a, b) = lists();
                Self::composite(power()?, a, b)
            }
            other => Err(Error::InvalidModel(format!("unknown kind '{other}'"))),
        }
    }

    pub fn to_spec(&self) -> ModelSpec {
        let mut spec = ModelSpec {
            kind: String::new(),
            alpha: None,
            r1: None,
            b: None,
            r2: None,
            a_list: None,
            b_list: None,
        };
        let set_power = |spec: &mut ModelSpec, p: &PowerLaw| {
            spec.alpha = Some(p.alpha);
            spec.r1 = Some(p.r1);
            spec.b = Some(p.b);
            spec.r2 = Some(p.r2);
        };
        match &self.kind {
            ModelKind::Free => spec.kind = "free".into(),
            ModelKind::PowerLaw(p) => {
                spec.kind = "power_law".into();
                set_power(&mut spec, p);
            }
            ModelKind::ExplicitList { a, b } => {
                spec.kind = "explicit".into();
                spec.a_list = Some(a.clone());
                spec.b_list = Some(b.clone());
            }
            ModelKind::Composite { power, a_corr, b_corr } => {
                spec.kind = "composite".into();
                set_power(&mut spec, power);
                spec.a_list = Some(a_corr.clone());
                spec.b_list = Some(b_corr.clone());
            }
        }
        spec
    }

    /// Coefficients at n ≥ 0 without validation. Positivity was checked at construction.
    #[inline]
    pub fn coeffs(&self, n: usize) -> (f64, f64) {
        match &self.kind {
            ModelKind::Free => (0.5, 0.0),
            ModelKind::PowerLaw(p) => {
                let (da, db) = p.terms(n);
                (0.5 + da, db)
            }
            ModelKind::ExplicitList { a, b } => {
                (a.get(n).copied().unwrap_or(0.5), b.get(n).copied().unwrap_or(0.0))
            }
            ModelKind::Composite { power, a_corr, b_corr } => {
                let (da, db) = power.terms(n);
                (
                    0.5 + da + a_corr.get(n).copied().unwrap_or(0.0),
                    db + b_corr.get(n).copied().unwrap_or(0.0),
                )
            }
        }
    }

    /// (a_n, b_n) for n ≥ -1. At n = -1 only a is meaningful and equals 1/2.
    pub fn eval_coeffs(&self, n: i64) -> Result<(f64, f64)> {
        if n < -1 || n > HARD_CAP as i64 {
            return Err(Error::IndexOutOfRange { index: n, cap: HARD_CAP });
        }
        if n == -1 {
            return Ok((A_MINUS_ONE, 0.0));
        }
        let (a, b) = self.coeffs(n as usize);
        if a <= 0.0 {
            return Err(Error::NonPositiveCoefficient { index: n, value: a });
        }
        Ok((a, b))
    }

    fn list_len(&self) -> usize {
        match &self.kind {
            ModelKind::ExplicitList { a, b } => a.len().max(b.len()),
            ModelKind::Composite { a_corr, b_corr, .. } => a_corr.len().max(b_corr.len()),
            _ => 0,
        }
    }

    /// Smallest L with a_n = 1/2 and b_n = 0 for all n ≥ L, if the perturbation is finitely supported.
    pub fn support_end(&self) -> Option<usize> {
        let trailing = |n_max: usize| {
            let mut l = n_max;
            while l > 0 && self.coeffs(l - 1) == (0.5, 0.0) {
                l -= 1;
            }
            l
        };
        match &self.kind {
            ModelKind::Free => Some(0),
            ModelKind::PowerLaw(p) => p.is_trivial().then_some(0),
            ModelKind::ExplicitList { .. } => Some(trailing(self.list_len())),
            ModelKind::Composite { power, .. } => power.is_trivial().then(|| trailing(self.list_len())),
        }
    }

    fn power(&self) -> Option<&PowerLaw> {
        match &self.kind {
            ModelKind::PowerLaw(p) | ModelKind::Composite { power: p, .. } => Some(p),
            _ => None,
        }
    }

    /// ε_n = Σ_{m≥n} (|a_{m+1} − a_m| + |b_{m+1} − b_m|), exact for every built-in kind.
    pub fn eps(&self, n: usize) -> f64 {
        let len = self.list_len();
        let tail_at = |k: usize| self.power().map_or(0.0, |p| p.tail(k));
        if n >= len {
            return tail_at(n);
        }
        let mut sum = 0.0;
        let (mut a0, mut b0) = self.coeffs(n);
        for m in n..len {
            let (a1, b1) = self.coeffs(m + 1);
            sum += (a1 - a0).abs() + (b1 - b0).abs();
            a0 = a1;
            b0 = b1;
        }
        // past the lists only the power law varies, monotonically
        sum + tail_at(len)
    }

    /// sup_n (|α_n| + |b_n|).
    pub fn sup_perturbation(&self) -> f64 {
        let len = self.list_len();
        let mut sup: f64 = 0.0;
        for n in 0..=len + 1 {
            let (a, b) = self.coeffs(n);
            sup = sup.max((a - 0.5).abs() + b.abs());
        }
        sup
    }

    /// Σ(α_n² + b_n²) < ∞.
    pub fn is_hilbert_schmidt(&self) -> bool {
        self.power()
            .map_or(true, |p| (p.alpha == 0.0 || p.r1 > 0.5) && (p.b == 0.0 || p.r2 > 0.5))
    }

    /// Coefficients for n in 0..len, computed once for hot loops.
    pub fn table(&self, len: usize) -> CoefficientTable {
        let (a, b) = (0..len).map(|n| self.coeffs(n)).unzip();
        CoefficientTable { a, b }
    }
}

/// Precomputed (a_n, b_n) for a fixed index range.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CoefficientTable {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationTail {
    pub eps: Vec<f64>,
    pub tol: f64,
    /// First n with ε_n < tol, if reached within the table.
    pub n_star: Option<usize>,
}

impl VariationTail {
    pub fn compute(model: &CoefficientModel, tol: f64, max_n: usize) -> Self {
        let eps: Vec<f64> = (0..=max_n).map(|n| model.eps(n)).collect();
        let n_star = eps.iter().position(|&e| e < tol);
        VariationTail { eps, tol, n_star }
    }
}

/// ε_n for n ≤ max_n; fails if ε_{max_n} ≥ tol.
pub fn variation_tail(model: &CoefficientModel, tol: f64, max_n: usize) -> Result<VariationTail> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol = {tol} must be positive")));
    }
    if max_n > HARD_CAP {
        return Err(Error::IndexOutOfRange { index: max_n as i64, cap: HARD_CAP });
    }
    let tail = VariationTail::compute(model, tol, max_n);
    let last = tail.eps[max_n];
    if last >= tol {
        return Err(Error::TailNotReached { n: max_n, eps: last, tol });
    }
    Ok(tail)
}
