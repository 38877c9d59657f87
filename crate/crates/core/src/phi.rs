//! The Orlicz function `φ: (0, ∞) → (0, ∞)`, its log-weighted primitive
//! `ϕ(t) = ∫_1^t φ(s)/s ds`, and the solvability and uniqueness checks on φ.
//!
//! The primitive is based at 1 rather than 0: whenever the solvability
//! condition holds, `φ(s) → liminf > 0` as `s → 0⁺` and `∫_0^t φ(s)/s ds`
//! diverges. Only `ϕ' = φ/t` enters the dissipation identity, so the shift is
//! immaterial to the flow.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

pub type PhiFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Piecewise power-law table: `ln φ` is interpolated linearly in `ln t`;
/// the end segments are extended beyond the table.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    log_t: Vec<f64>,
    log_v: Vec<f64>,
}

impl PhiTable {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidConfig(
                "phi table needs at least two points".into(),
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidConfig(format!(
                    "phi table repeats t = {}",
                    w[0].0
                )));
            }
        }
        for &(t, v) in &points {
            if !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "phi table entries must be positive and finite (t = {t}, value = {v})"
                )));
            }
        }
        Ok(PhiTable {
            log_t: points.iter().map(|p| p.0.ln()).collect(),
            log_v: points.iter().map(|p| p.1.ln()).collect(),
        })
    }

    /// Whitespace-separated `t value` lines; `#` starts a comment.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(t)), Some(Ok(v)), None) => points.push((t, v)),
                _ => return Err(Error::parse(path, lineno + 1, "expected `t value`")),
            }
        }
        Self::new(points)
    }

    fn eval(&self, t: f64) -> f64 {
        let x = t.ln();
        let n = self.log_t.len();
        let seg = match self.log_t.partition_point(|&lt| lt <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let (x0, x1) = (self.log_t[seg], self.log_t[seg + 1]);
        let (y0, y1) = (self.log_v[seg], self.log_v[seg + 1]);
        (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).exp()
    }
}

#[derive(Clone)]
pub enum PhiKind {
    /// `φ(t) = t^p`.
    Power(f64),
    /// `φ(t) = 1/t`.
    Reciprocal,
    /// Any closed form supplied by the caller.
    Custom { name: String, f: PhiFn },
    Tabulated(PhiTable),
}

impl fmt::Debug for PhiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiKind::Power(p) => write!(f, "Power({p})"),
            PhiKind::Reciprocal => write!(f, "Reciprocal"),
            PhiKind::Custom { name, .. } => write!(f, "Custom({name})"),
            PhiKind::Tabulated(t) => write!(f, "Tabulated({} points)", t.log_t.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhiModel {
    kind: PhiKind,
    primitive_base: f64,
}

/// Absolute tolerance of the adaptive Simpson rule behind ϕ for non-closed forms.
pub const PRIMITIVE_TOL: f64 = 1e-10;

impl PhiModel {
    pub fn power(p: f64) -> Self {
        Self::from_kind(PhiKind::Power(p))
    }

    pub fn reciprocal() -> Self {
        Self::from_kind(PhiKind::Reciprocal)
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_kind(PhiKind::Custom {
            name: name.into(),
            f: Arc::new(f),
        })
    }

    pub fn tabulated(table: PhiTable) -> Self {
        Self::from_kind(PhiKind::Tabulated(table))
    }

    pub fn from_kind(kind: PhiKind) -> Self {
        PhiModel {
            kind,
            primitive_base: 1.0,
        }
    }

    /// Move the base point of ϕ (default 1).
    pub fn with_primitive_base(mut self, base: f64) -> Result<Self> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "primitive base must be positive, got {base}"
            )));
        }
        self.primitive_base = base;
        Ok(self)
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn primitive_base(&self) -> f64 {
        self.primitive_base
    }

    pub fn label(&self) -> String {
        match &self.kind {
            PhiKind::Power(p) => format!("t^{p}"),
            PhiKind::Reciprocal => "1/t".into(),
            PhiKind::Custom { name, .. } => name.clone(),
            PhiKind::Tabulated(_) => "tabulated".into(),
        }
    }

    /// Raw value without validation; used inside the per-node kernels.
    #[inline]
    pub(crate) fn value(&self, t: f64) -> f64 {
        match &self.kind {
            PhiKind::Power(p) => t.powf(*p),
            PhiKind::Reciprocal => 1.0 / t,
            PhiKind::Custom { f, .. } => f(t),
            PhiKind::Tabulated(table) => table.eval(t),
        }
    }

    /// `φ(t)`, checked to be positive and finite.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::PhiEvaluation {
                t,
                reason: "argument must be positive and finite".into(),
            });
        }
        let v = self.value(t);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::PhiEvaluation {
                t,
                reason: format!("value {v} is not positive and finite"),
            })
        }
    }

    /// `ϕ(t) = ∫_base^t φ(s)/s ds`.
    pub fn varphi(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::PhiEvaluation {
                t,
                reason: "argument must be positive and finite".into(),
            });
        }
        let b = self.primitive_base;
        match self.kind {
            PhiKind::Power(p) if p == 0.0 => Ok((t / b).ln()),
            PhiKind::Power(p) => Ok((t.powf(p) - b.powf(p)) / p),
            PhiKind::Reciprocal => Ok(1.0 / b - 1.0 / t),
            _ => self.varphi_quadrature(t),
        }
    }

    /// Fast closed-form or quadrature primitive for the per-node kernels.
    #[inline]
    pub(crate) fn varphi_value(&self, t: f64) -> f64 {
        let b = self.primitive_base;
        match self.kind {
            PhiKind::Power(p) if p == 0.0 => (t / b).ln(),
            PhiKind::Power(p) => (t.powf(p) - b.powf(p)) / p,
            PhiKind::Reciprocal => 1.0 / b - 1.0 / t,
            _ => self.varphi_quadrature(t).unwrap_or(f64::NAN),
        }
    }

    /// ϕ by adaptive Simpson quadrature of `φ(e^u)` over `u ∈ [ln base, ln t]`,
    /// regardless of kind.
    pub fn varphi_quadrature(&self, t: f64) -> Result<f64> {
        let a = self.primitive_base.ln();
        let b = t.ln();
        if a == b {
            return Ok(0.0);
        }
        let f = |u: f64| self.value(u.exp());
        adaptive_simpson(&f, a, b, PRIMITIVE_TOL).ok_or(Error::QuadratureFailed { a, b })
    }

    /// Tail estimates `(liminf_{s→0⁺} φ, limsup_{s→∞} φ)`.
    pub fn limits(&self) -> (f64, f64) {
        let at = |e: i32| self.value(10f64.powi(e));
        let zero = tail_limit([at(-4), at(-5), at(-6)], Conservative::Low);
        let inf = tail_limit([at(4), at(5), at(6)], Conservative::High);
        (zero, inf)
    }

    /// Radius `C` with `φ(C) = level`, by bisection in `ln C` over `[1e-6, 1e6]`.
    /// `None` when `φ - level` does not change sign there.
    pub fn level_radius(&self, level: f64) -> Option<f64> {
        let f = |u: f64| self.value(u.exp()) - level;
        let (mut lo, mut hi) = (1e-6f64.ln(), 1e6f64.ln());
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            return Some(lo.exp());
        }
        if fhi == 0.0 {
            return Some(hi.exp());
        }
        if flo.signum() == fhi.signum() {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 {
                return Some(mid.exp());
            }
            if fm.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Some((0.5 * (lo + hi)).exp())
    }
}

#[derive(Clone, Copy)]
enum Conservative {
    High,
    Low,
}

/// Limit of a sequence sampled at three successive decades toward the tail.
/// Monotone runs are extrapolated (Aitken when increments contract, ±∞ when an
/// increasing run does not contract); anything else is bounded conservatively.
fn tail_limit(v: [f64; 3], side: Conservative) -> f64 {
    let d1 = v[1] - v[0];
    let d2 = v[2] - v[1];
    if d1 == 0.0 && d2 == 0.0 {
        return v[2];
    }
    let monotone = (d1 > 0.0 && d2 > 0.0) || (d1 < 0.0 && d2 < 0.0);
    if !monotone {
        return match side {
            Conservative::High => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Conservative::Low => v.iter().copied().fold(f64::INFINITY, f64::min),
        };
    }
    let q = d2 / d1;
    if q >= 1.0 {
        return if d2 > 0.0 {
            f64::INFINITY
        } else {
            match side {
                Conservative::High => v[2],
                Conservative::Low => 0.0,
            }
        };
    }
    (v[2] + d2 * q / (1.0 - q)).max(0.0)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Option<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return None;
        }
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
        )
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolvabilityReport {
    pub passed: bool,
    /// Estimated `liminf_{s→0⁺} φ(s)`.
    pub liminf_at_zero: f64,
    /// Estimated `limsup_{s→∞} φ(s)`.
    pub limsup_at_infinity: f64,
    pub min_g: f64,
    pub max_g: f64,
    /// `min g − limsup_{s→∞} φ`.
    pub margin_upper: f64,
    /// `liminf_{s→0⁺} φ − max g`.
    pub margin_lower: f64,
}

/// `limsup_{s→∞} φ(s) < min g` and `max g < liminf_{s→0⁺} φ(s)`.
pub fn check_solvability(model: &PhiModel, g: &ScalarField) -> Result<SolvabilityReport> {
    let (min_g, max_g) = (g.min(), g.max());
    if min_g <= 0.0 {
        return Err(Error::NonPositiveDensity {
            value: min_g,
            location: "grid node".into(),
        });
    }
    let (zero, inf) = model.limits();
    let margin_upper = min_g - inf;
    let margin_lower = zero - max_g;
    Ok(SolvabilityReport {
        passed: margin_upper > 0.0 && margin_lower > 0.0,
        liminf_at_zero: zero,
        limsup_at_infinity: inf,
        min_g,
        max_g,
        margin_upper,
        margin_lower,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessReport {
    pub holds: bool,
    /// `(c, s)` with `c < 1` and `φ(c/s) ≤ φ(1/s)`.
    pub witness: Option<(f64, f64)>,
}

const UNIQUENESS_C: [f64; 9] = [0.5, 0.75, 0.9, 0.99, 0.999, 0.25, 0.1, 0.01, 0.001];

/// Sweep `c ∈ (0, 1)` and `s > 0`: the condition holds when no sampled pair
/// satisfies `φ(c·s⁻¹) ≤ φ(s⁻¹)`.
pub fn check_uniqueness_condition(model: &PhiModel) -> UniquenessReport {
    let s_grid = std::iter::once(1.0).chain(
        (-24..=24)
            .filter(|&k| k != 0)
            .map(|k| 10f64.powf(k as f64 / 4.0)),
    );
    for s in s_grid {
        let base = model.value(1.0 / s);
        for &c in &UNIQUENESS_C {
            if model.value(c / s) <= base {
                return UniquenessReport {
                    holds: false,
                    witness: Some((c, s)),
                };
            }
        }
    }
    UniquenessReport {
        holds: true,
        witness: None,
    }
}
