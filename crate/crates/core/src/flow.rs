//! Explicit integration of the support-function flow
//!
//! ```text
//! ∂h/∂t = h − g · rⁿ 𝒦 / φ(a),      a = r (radial) or a = 1/h (reciprocal_support)
//! ```
//!
//! together with the functional it decreases, its dissipation, the
//! Monge-Ampère residual, a-priori bound diagnostics and the kinematic /
//! dual-flow consistency checks.
//!
//! Stepping is forward Euler. Each trial step is capped three ways: the
//! relative change `max|dt·speed| ≤ δ·min h`, the explicit diffusion limit of
//! the linearized operator (`cfl`), and `dt_init`. A trial is rolled back and
//! retried with `dt·shrink_factor` when the new support function is not
//! uniformly convex or, in radial mode, when the functional increases by more
//! than `1e-9·(1 + |F|)`. On S² the increment is passed through a longitudinal
//! polar filter so that the stability limit is set by the meridional spacing.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{polar_body, radial_gauss_map, ConvexBody, LocalGeometry, RadialSampler};
use crate::grid::{par_map, quadrature, ScalarField, SphereGrid};
use crate::phi::{check_solvability, PhiModel, SolvabilityReport};
use crate::spectral::{periodic_derivatives, PolarFilter};

/// Relative slack of the discrete Lyapunov test.
pub const LYAPUNOV_SLACK: f64 = 1e-9;

/// Argument of φ in the flow speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhiArgMode {
    /// `φ(r)`: the flow whose functional is non-increasing.
    #[default]
    Radial,
    /// `φ(1/h)`: stationary points solve the Orlicz-Aleksandrov equation literally.
    ReciprocalSupport,
}

impl fmt::Display for PhiArgMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhiArgMode::Radial => "radial",
            PhiArgMode::ReciprocalSupport => "reciprocal_support",
        })
    }
}

impl FromStr for PhiArgMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(PhiArgMode::Radial),
            "reciprocal_support" | "reciprocal" => Ok(PhiArgMode::ReciprocalSupport),
            other => Err(Error::InvalidConfig(format!("unknown flow mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub mode: PhiArgMode,
    /// First and largest trial step.
    pub dt_init: f64,
    pub dt_min: f64,
    pub shrink_factor: f64,
    /// δ: bound on `max|dt·speed| / min h`.
    pub step_cap: f64,
    /// Safety factor on the explicit diffusion limit (`f64::INFINITY` disables it).
    pub cfl: f64,
    pub tol_speed: f64,
    pub tol_residual: f64,
    pub max_steps: usize,
    /// Keep a full-body snapshot every `stride` accepted steps.
    pub stride: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            mode: PhiArgMode::Radial,
            dt_init: 1e-2,
            dt_min: 1e-12,
            shrink_factor: 0.5,
            step_cap: 0.05,
            cfl: 0.8,
            tol_speed: 1e-6,
            tol_residual: 1e-4,
            max_steps: 1_000_000,
            stride: 100,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_init) {
            return bad(format!(
                "need 0 < dt_min < dt_init (dt_min = {}, dt_init = {})",
                self.dt_min, self.dt_init
            ));
        }
        if !(self.step_cap > 0.0 && self.step_cap < 0.5) {
            return bad(format!("step cap must lie in (0, 0.5), got {}", self.step_cap));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return bad(format!("shrink factor must lie in (0, 1), got {}", self.shrink_factor));
        }
        if !(self.tol_speed > 0.0 && self.tol_residual > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.cfl > 0.0) {
            return bad(format!("cfl factor must be positive, got {}", self.cfl));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        Ok(())
    }
}

/// Extremes of the monitored quantities over the nodes of one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bounds {
    pub min_h: f64,
    pub max_h: f64,
    pub max_grad_h: f64,
    pub min_gauss: f64,
    pub max_gauss: f64,
    /// Extremes of `r = |X|`.
    pub min_radius: f64,
    pub max_radius: f64,
    pub min_principal_curvature: f64,
    pub max_principal_curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub body: ConvexBody,
    pub functional: f64,
    pub dissipation: f64,
    pub residual_max: f64,
    pub speed_max: f64,
    pub bounds: Bounds,
}

/// Scalar diagnostics of one accepted state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// Step that produced this state (0 for the initial state).
    pub dt: f64,
    pub functional: f64,
    pub dissipation: f64,
    pub residual_max: f64,
    pub speed_max: f64,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxSteps,
    ConvexityLost,
    DtUnderflow,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxSteps => "max_steps",
            Termination::ConvexityLost => "convexity_lost",
            Termination::DtUnderflow => "dt_underflow",
        })
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    /// Every accepted state, scalars only.
    pub records: Vec<StepRecord>,
    /// Full snapshots: the initial state, every `stride`-th step, and the final state.
    pub states: Vec<FlowState>,
    pub termination: Termination,
    pub solvability: SolvabilityReport,
    pub rollbacks: usize,
}

impl FlowTrace {
    pub fn final_state(&self) -> &FlowState {
        self.states.last().expect("trace always holds the initial state")
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Everything the stepper needs about one body.
#[derive(Debug, Clone)]
struct Evaluation {
    speed: Vec<f64>,
    functional: f64,
    dissipation: f64,
    residual_max: f64,
    speed_max: f64,
    diffusion_max: f64,
    bounds: Bounds,
}

#[derive(Debug, Clone, Copy)]
struct NodeEval {
    speed: f64,
    residual: f64,
    functional: f64,
    dissipation: f64,
    diffusion: f64,
    grad: f64,
    h: f64,
    r: f64,
    gauss: f64,
    curvature: [f64; 2],
}

enum Rejection {
    Convexity,
    Functional,
}

/// The data `(g, φ, mode)` of one flow.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    g: ScalarField,
    phi: PhiModel,
    mode: PhiArgMode,
}

impl FlowProblem {
    pub fn new(g: ScalarField, phi: PhiModel, mode: PhiArgMode) -> Result<Self> {
        if let Some((k, &v)) = g.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveDensity {
                value: v,
                location: format!("node {k}"),
            });
        }
        Ok(FlowProblem { g, phi, mode })
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn phi(&self) -> &PhiModel {
        &self.phi
    }

    pub fn mode(&self) -> PhiArgMode {
        self.mode
    }

    pub fn with_mode(&self, mode: PhiArgMode) -> Self {
        FlowProblem {
            mode,
            ..self.clone()
        }
    }

    fn grid(&self) -> &SphereGrid {
        self.g.grid()
    }

    #[inline]
    fn phi_argument(&self, loc: &LocalGeometry) -> f64 {
        match self.mode {
            PhiArgMode::Radial => loc.r,
            PhiArgMode::ReciprocalSupport => 1.0 / loc.h,
        }
    }

    #[inline]
    fn node(&self, body: &ConvexBody, k: usize) -> NodeEval {
        let dim = body.dim();
        let loc = body.local(k);
        let g = self.g.values()[k];
        let rn = loc.r_pow_n(dim);
        let pa = self.phi.value(self.phi_argument(&loc));
        // w = g rⁿ𝒦/φ(a)
        let w = g * rn / (loc.det_b * pa);
        let eig = loc.b.eigenvalues(dim);
        let lam_min = eig[0];
        let lam_max = if dim == 2 { eig[0] } else { eig[1] };
        NodeEval {
            speed: loc.h - w,
            residual: loc.h * pa * loc.det_b / rn - g,
            functional: loc.h.ln() - self.phi.varphi_value(loc.r) * loc.h * loc.det_b / (rn * g),
            dissipation: -(w - loc.h) * (w - loc.h) / (w * loc.h),
            diffusion: w / lam_min,
            grad: loc.grad[0].hypot(loc.grad[1]),
            h: loc.h,
            r: loc.r,
            gauss: 1.0 / loc.det_b,
            curvature: [1.0 / lam_max, 1.0 / lam_min],
        }
    }

    fn evaluate(&self, body: &ConvexBody) -> Evaluation {
        let grid = body.grid();
        let nodes = par_map(grid.len(), |k| self.node(body, k));
        let weights = grid.weights();
        let mut functional = 0.0;
        let mut dissipation = 0.0;
        let mut residual_max: f64 = 0.0;
        let mut speed_max: f64 = 0.0;
        let mut diffusion_max: f64 = 0.0;
        let mut b = Bounds {
            min_h: f64::INFINITY,
            max_h: f64::NEG_INFINITY,
            max_grad_h: 0.0,
            min_gauss: f64::INFINITY,
            max_gauss: f64::NEG_INFINITY,
            min_radius: f64::INFINITY,
            max_radius: f64::NEG_INFINITY,
            min_principal_curvature: f64::INFINITY,
            max_principal_curvature: f64::NEG_INFINITY,
        };
        for (w, n) in weights.iter().zip(&nodes) {
            functional += w * n.functional;
            dissipation += w * n.dissipation;
            // NaN-propagating maxima: a broken node must not look converged
            residual_max = nan_max(residual_max, n.residual.abs());
            speed_max = nan_max(speed_max, n.speed.abs());
            diffusion_max = nan_max(diffusion_max, n.diffusion);
            b.min_h = b.min_h.min(n.h);
            b.max_h = b.max_h.max(n.h);
            b.max_grad_h = b.max_grad_h.max(n.grad);
            b.min_gauss = b.min_gauss.min(n.gauss);
            b.max_gauss = b.max_gauss.max(n.gauss);
            b.min_radius = b.min_radius.min(n.r);
            b.max_radius = b.max_radius.max(n.r);
            b.min_principal_curvature = b.min_principal_curvature.min(n.curvature[0]);
            b.max_principal_curvature = b.max_principal_curvature.max(n.curvature[1]);
        }
        Evaluation {
            speed: nodes.iter().map(|n| n.speed).collect(),
            functional,
            dissipation,
            residual_max,
            speed_max,
            diffusion_max,
            bounds: b,
        }
    }

    fn check_grid(&self, body: &ConvexBody) -> Result<()> {
        self.grid().check_same(body.grid())
    }

    /// `∂h/∂t = h − g rⁿ𝒦/φ(a)`.
    pub fn flow_speed(&self, body: &ConvexBody) -> Result<ScalarField> {
        self.check_grid(body)?;
        let values = par_map(body.grid().len(), |k| self.node(body, k).speed);
        self.finite_field(body, values)
    }

    /// `h φ(a) det(∇²h + hI)/rⁿ − g`.
    pub fn ma_residual(&self, body: &ConvexBody) -> Result<ScalarField> {
        self.check_grid(body)?;
        let values = par_map(body.grid().len(), |k| self.node(body, k).residual);
        self.finite_field(body, values)
    }

    fn finite_field(&self, body: &ConvexBody, values: Vec<f64>) -> Result<ScalarField> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let loc = body.local(k);
            return Err(Error::PhiEvaluation {
                t: self.phi_argument(&loc),
                reason: "non-finite flow quantity".into(),
            });
        }
        Ok(ScalarField::from_parts_unchecked(body.grid().clone(), values))
    }

    /// `F = ∫ log h dx − ∫ ϕ(r) h det(b)/(rⁿ g) dx`, the x-grid form of
    /// `∫ log h dx − ∫ ϕ(r(ξ))/g(x(ξ)) dξ`.
    pub fn functional(&self, body: &ConvexBody) -> Result<f64> {
        self.check_grid(body)?;
        let values = par_map(body.grid().len(), |k| self.node(body, k).functional);
        Ok(quadrature(body.grid(), &values))
    }

    /// The same functional with the second term integrated directly over a
    /// ξ-grid: `ϕ(ρ(ξ))/g(x(ξ))` with ρ from the radial sampler and `g`
    /// interpolated log-linearly at the reverse-mapped normal.
    pub fn functional_direct(&self, body: &ConvexBody) -> Result<f64> {
        self.check_grid(body)?;
        if body.dim() != 2 {
            return Err(Error::RequiresPlane(body.dim()));
        }
        let grid = body.grid();
        let sampler = RadialSampler::new(body);
        let entropy: Vec<f64> = body.values().iter().map(|h| h.ln()).collect();
        let second = par_map(grid.len(), |k| {
            let m = sampler.maximize(&grid.node(k));
            self.phi.varphi_value(1.0 / m.value) / self.g.interpolate_log(&m.normal)
        });
        Ok(quadrature(grid, &entropy) - quadrature(grid, &second))
    }

    /// `−∫ (w − h)²/(w h) dx` with `w = g rⁿ𝒦/φ(a)`; zero exactly at stationary bodies.
    pub fn dissipation(&self, body: &ConvexBody) -> Result<f64> {
        self.check_grid(body)?;
        let values = par_map(body.grid().len(), |k| self.node(body, k).dissipation);
        Ok(quadrature(body.grid(), &values))
    }

    /// Residual of the continuum operator applied to the trigonometric
    /// interpolant of `h` (circle only). Measures the discretization error of a
    /// converged finite-difference solution.
    pub fn spectral_residual(&self, body: &ConvexBody) -> Result<ScalarField> {
        self.check_grid(body)?;
        if body.dim() != 2 {
            return Err(Error::RequiresPlane(body.dim()));
        }
        let h = body.values();
        let (d1, d2) = periodic_derivatives(h);
        let values = (0..h.len())
            .map(|k| {
                let r = h[k].hypot(d1[k]);
                let det_b = d2[k] + h[k];
                let a = match self.mode {
                    PhiArgMode::Radial => r,
                    PhiArgMode::ReciprocalSupport => 1.0 / h[k],
                };
                h[k] * self.phi.value(a) * det_b / (r * r) - self.g.values()[k]
            })
            .collect();
        self.finite_field(body, values)
    }

    fn state(&self, t: f64, body: ConvexBody, eval: &Evaluation) -> FlowState {
        FlowState {
            t,
            body,
            functional: eval.functional,
            dissipation: eval.dissipation,
            residual_max: eval.residual_max,
            speed_max: eval.speed_max,
            bounds: eval.bounds,
        }
    }

    /// Diagnostics of `body` at time `t`.
    pub fn initial_state(&self, body: &ConvexBody, t: f64) -> Result<FlowState> {
        self.check_grid(body)?;
        let eval = self.evaluate(body);
        Ok(self.state(t, body.clone(), &eval))
    }

    /// One forward-Euler step of exactly `dt`, without step control.
    pub fn euler_step(&self, body: &ConvexBody, dt: f64) -> Result<ConvexBody> {
        self.check_grid(body)?;
        let speed = self.flow_speed(body)?;
        let filter = PolarFilter::new(body.grid());
        let h = advance(body.values(), speed.values(), dt, filter.as_ref());
        ConvexBody::new(ScalarField::new(body.grid().clone(), h)?)
    }

    fn stable_dt(&self, body: &ConvexBody, eval: &Evaluation, cfg: &FlowConfig) -> f64 {
        let grid = body.grid();
        let mut dt = cfg.dt_init;
        if eval.speed_max > 0.0 {
            dt = dt.min(cfg.step_cap * eval.bounds.min_h / eval.speed_max);
        }
        if cfg.cfl.is_finite() && eval.diffusion_max > 0.0 {
            // largest eigenvalue of the fitted second difference is 1/sin²(Δ/2)
            let s = (0.5 * grid.min_spacing()).sin();
            let dims = (grid.dim() - 1) as f64;
            dt = dt.min(cfg.cfl * 2.0 * s * s / (dims * eval.diffusion_max));
        }
        dt
    }

    /// Try steps from `dt` downward until one is accepted.
    fn advance_controlled(
        &self,
        body: &ConvexBody,
        eval: &Evaluation,
        cfg: &FlowConfig,
        filter: Option<&PolarFilter>,
        rollbacks: &mut usize,
    ) -> std::result::Result<(ConvexBody, Evaluation, f64), (Rejection, f64)> {
        let mut dt = self.stable_dt(body, eval, cfg);
        let threshold = eval.functional + LYAPUNOV_SLACK * (1.0 + eval.functional.abs());
        loop {
            if !(dt >= cfg.dt_min) {
                return Err((Rejection::Functional, dt));
            }
            let h = advance(body.values(), &eval.speed, dt, filter);
            let rejection = match ConvexBody::new(ScalarField::from_parts_unchecked(
                body.grid().clone(),
                h,
            )) {
                Ok(next) => {
                    let next_eval = self.evaluate(&next);
                    let increased = !(next_eval.functional <= threshold);
                    if self.mode == PhiArgMode::Radial && increased {
                        Rejection::Functional
                    } else if !next_eval.speed_max.is_finite() {
                        Rejection::Convexity
                    } else {
                        return Ok((next, next_eval, dt));
                    }
                }
                Err(_) => Rejection::Convexity,
            };
            *rollbacks += 1;
            dt *= cfg.shrink_factor;
            if dt < cfg.dt_min {
                return Err((rejection, dt));
            }
        }
    }

    /// One controlled step from `state`.
    pub fn step(&self, state: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
        cfg.validate()?;
        self.check_grid(&state.body)?;
        let eval = self.evaluate(&state.body);
        let filter = PolarFilter::new(state.body.grid());
        let mut rollbacks = 0;
        match self.advance_controlled(&state.body, &eval, cfg, filter.as_ref(), &mut rollbacks) {
            Ok((body, next, dt)) => Ok(self.state(state.t + dt, body, &next)),
            Err((_, dt)) => Err(Error::DtUnderflow {
                dt,
                dt_min: cfg.dt_min,
            }),
        }
    }

    /// Integrate until both `max|speed| ≤ tol_speed` and `max|residual| ≤ tol_residual`,
    /// or until a termination code fires.
    pub fn run(&self, initial: &ConvexBody, cfg: &FlowConfig) -> Result<FlowTrace> {
        cfg.validate()?;
        self.check_grid(initial)?;
        let solvability = check_solvability(&self.phi, &self.g)?;
        let filter = PolarFilter::new(initial.grid());
        let mut body = initial.clone();
        let mut eval = self.evaluate(&body);
        let mut t = 0.0;
        let mut records = vec![record(0, t, 0.0, &eval)];
        let mut states = vec![self.state(t, body.clone(), &eval)];
        let mut rollbacks = 0;
        let mut steps = 0;
        let termination = loop {
            if !eval.speed_max.is_finite() {
                break Termination::ConvexityLost;
            }
            if eval.speed_max <= cfg.tol_speed && eval.residual_max <= cfg.tol_residual {
                break Termination::Converged;
            }
            if steps >= cfg.max_steps {
                break Termination::MaxSteps;
            }
            match self.advance_controlled(&body, &eval, cfg, filter.as_ref(), &mut rollbacks) {
                Ok((next, next_eval, dt)) => {
                    steps += 1;
                    t += dt;
                    body = next;
                    eval = next_eval;
                    records.push(record(steps, t, dt, &eval));
                    if steps % cfg.stride == 0 {
                        states.push(self.state(t, body.clone(), &eval));
                    }
                }
                Err((Rejection::Convexity, _)) => break Termination::ConvexityLost,
                Err((Rejection::Functional, _)) => break Termination::DtUnderflow,
            }
        };
        if states.last().map(|s| s.t) != Some(t) {
            states.push(self.state(t, body, &eval));
        }
        Ok(FlowTrace {
            records,
            states,
            termination,
            solvability,
            rollbacks,
        })
    }

    /// Largest discrepancy between `∂_t log ρ(ξ)` and `(∂_t h/h)(x(ξ))` over the
    /// directions `ξ = α(x_k)`. Both sides are differenced over `dt`; the right
    /// side is averaged over the normals of `ξ` before and after the step,
    /// which brackets `Δ log ρ(ξ)` and cancels the first-order drift of `x(ξ)`.
    pub fn radial_speed_check(before: &ConvexBody, after: &ConvexBody, dt: f64) -> Result<f64> {
        before.grid().check_same(after.grid())?;
        if before.dim() != 2 {
            return Err(Error::RequiresPlane(before.dim()));
        }
        let s0 = RadialSampler::new(before);
        let s1 = RadialSampler::new(after);
        let rate: Vec<f64> = before
            .values()
            .iter()
            .zip(after.values())
            .map(|(h0, h1)| (h1 / h0).ln() / dt)
            .collect();
        let worst = par_map(rate.len(), |k| {
            let xi = radial_gauss_map(before, k);
            let lhs = (s1.radial(&xi).ln() - s0.radial(&xi).ln()) / dt;
            let x1 = s1.maximize(&xi).normal;
            let rhs = 0.5 * (rate[k] + interpolate_circle(&rate, x1[1].atan2(x1[0])));
            (lhs - rhs).abs()
        });
        Ok(worst.into_iter().fold(0.0, f64::max))
    }

    /// Largest discrepancy between the observed rate of the polar support
    /// function and the dual evolution
    /// `∂_t h* = g(x) (h*)²/(φ(a*) (r*)ⁿ 𝒦*) − h*`, evaluated on the polar body
    /// of `before`. `x = p*/|p*|`;
    /// `a* = 1/h*` in radial mode and `a* = r*` in reciprocal mode (the dual
    /// image of each mode's φ argument).
    pub fn dual_flow_residual(&self, before: &ConvexBody, after: &ConvexBody, dt: f64) -> Result<f64> {
        self.check_grid(before)?;
        before.grid().check_same(after.grid())?;
        if before.dim() != 2 {
            return Err(Error::RequiresPlane(before.dim()));
        }
        let p0 = polar_body(before)?;
        let p1 = polar_body(after)?;
        let predicted = self.dual_rate(&p0);
        let worst = predicted.iter().enumerate().map(|(k, rate)| {
            let observed = (p1.values()[k] - p0.values()[k]) / dt;
            (observed - rate).abs()
        });
        Ok(worst.fold(0.0, f64::max))
    }

    fn dual_rate(&self, polar: &ConvexBody) -> Vec<f64> {
        let dim = polar.dim();
        par_map(polar.grid().len(), |k| {
            let loc = polar.local(k);
            let g = self.g.interpolate_log(&radial_gauss_map(polar, k));
            let a = match self.mode {
                PhiArgMode::Radial => 1.0 / loc.h,
                PhiArgMode::ReciprocalSupport => loc.r,
            };
            g * loc.h * loc.h * loc.det_b / (self.phi.value(a) * loc.r_pow_n(dim)) - loc.h
        })
    }

    /// Radii `(C₂, C₁)` with `φ(C₂) = max g`, `φ(C₁) = min g`, when they exist.
    pub fn level_radii(&self) -> (Option<f64>, Option<f64>) {
        (
            self.phi.level_radius(self.g.max()),
            self.phi.level_radius(self.g.min()),
        )
    }

    /// `(lower, upper)` bracket for `h` along a flow from `initial`:
    /// `min(C₂, min h₀) ≤ h ≤ max(C₁, max h₀)`.
    pub fn apriori_support_bounds(&self, initial: &ConvexBody) -> (f64, f64) {
        let (c2, c1) = self.level_radii();
        let h0 = initial.support();
        let lower = c2.map_or(h0.min(), |c| c.min(h0.min()));
        let upper = c1.map_or(h0.max(), |c| c.max(h0.max()));
        (lower, upper)
    }
}

/// Periodic four-point Lagrange interpolation of nodal values on the circle.
fn interpolate_circle(values: &[f64], angle: f64) -> f64 {
    let n = values.len();
    let x = angle.rem_euclid(TAU) * n as f64 / TAU;
    let i = x.floor();
    let u = x - i;
    let at = |j: isize| values[(i as isize + j).rem_euclid(n as isize) as usize];
    let w = [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ];
    w[0] * at(-1) + w[1] * at(0) + w[2] * at(1) + w[3] * at(2)
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn record(step: usize, t: f64, dt: f64, eval: &Evaluation) -> StepRecord {
    StepRecord {
        step,
        t,
        dt,
        functional: eval.functional,
        dissipation: eval.dissipation,
        residual_max: eval.residual_max,
        speed_max: eval.speed_max,
        bounds: eval.bounds,
    }
}

fn advance(h: &[f64], speed: &[f64], dt: f64, filter: Option<&PolarFilter>) -> Vec<f64> {
    let mut inc: Vec<f64> = speed.iter().map(|s| dt * s).collect();
    if let Some(f) = filter {
        f.apply(&mut inc);
    }
    h.iter().zip(&inc).map(|(a, d)| a + d).collect()
}

pub fn flow_speed(body: &ConvexBody, g: &ScalarField, phi: &PhiModel, mode: PhiArgMode) -> Result<ScalarField> {
    FlowProblem::new(g.clone(), phi.clone(), mode)?.flow_speed(body)
}

pub fn functional_f(body: &ConvexBody, g: &ScalarField, phi: &PhiModel) -> Result<f64> {
    FlowProblem::new(g.clone(), phi.clone(), PhiArgMode::Radial)?.functional(body)
}

pub fn functional_f_direct(body: &ConvexBody, g: &ScalarField, phi: &PhiModel) -> Result<f64> {
    FlowProblem::new(g.clone(), phi.clone(), PhiArgMode::Radial)?.functional_direct(body)
}

pub fn dissipation(body: &ConvexBody, g: &ScalarField, phi: &PhiModel, mode: PhiArgMode) -> Result<f64> {
    FlowProblem::new(g.clone(), phi.clone(), mode)?.dissipation(body)
}

pub fn ma_residual(body: &ConvexBody, g: &ScalarField, phi: &PhiModel, mode: PhiArgMode) -> Result<ScalarField> {
    FlowProblem::new(g.clone(), phi.clone(), mode)?.ma_residual(body)
}

pub fn step(state: &FlowState, g: &ScalarField, phi: &PhiModel, cfg: &FlowConfig) -> Result<FlowState> {
    FlowProblem::new(g.clone(), phi.clone(), cfg.mode)?.step(state, cfg)
}

pub fn run(initial: &ConvexBody, g: &ScalarField, phi: &PhiModel, cfg: &FlowConfig) -> Result<FlowTrace> {
    FlowProblem::new(g.clone(), phi.clone(), cfg.mode)?.run(initial, cfg)
}

pub fn radial_speed_check(before: &ConvexBody, after: &ConvexBody, dt: f64) -> Result<f64> {
    FlowProblem::radial_speed_check(before, after, dt)
}

pub fn dual_flow_residual(
    before: &ConvexBody,
    after: &ConvexBody,
    dt: f64,
    g: &ScalarField,
    phi: &PhiModel,
    mode: PhiArgMode,
) -> Result<f64> {
    FlowProblem::new(g.clone(), phi.clone(), mode)?.dual_flow_residual(before, after, dt)
}
