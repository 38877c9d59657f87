//! Command drivers behind the CLI. Each writes a human-readable report to
//! `out` and returns the process exit code:
//! 0 converged / pass, 1 precondition failed, 2 configuration error,
//! 3 flow failure.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{BodySpec, RunConfig};
use crate::curvature::{integral_curvature_density, radial_gauss_image_measure, total_integral_curvature};
use crate::error::Error;
use crate::flow::{FlowProblem, FlowTrace, Termination};
use crate::geometry::{jac_alpha, jac_alpha_star, polar_body, ConvexBody};
use crate::io;
use crate::phi::{check_solvability, check_uniqueness_condition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PRECONDITION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FLOW: i32 = 3;

/// Exit code for an error raised while preparing or running a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotConvex { .. } | Error::NonPositiveSupport { .. } => EXIT_PRECONDITION,
        Error::DtUnderflow { .. } => EXIT_FLOW,
        _ => EXIT_CONFIG,
    }
}

pub fn termination_exit_code(t: Termination) -> i32 {
    match t {
        Termination::Converged => EXIT_OK,
        _ => EXIT_FLOW,
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        // report output is best effort; a closed pipe must not change the verdict
        let _ = writeln!($out, $($arg)*);
    };
}

fn fail(out: &mut dyn Write, err: Error) -> i32 {
    say!(out, "error: {err}");
    exit_code(&err)
}

struct Setup {
    cfg: RunConfig,
    problem: FlowProblem,
}

fn setup(config: &Path) -> Result<Setup, Error> {
    let cfg = RunConfig::from_file(config)?;
    let grid = cfg.grid()?;
    let g = cfg.g_field(&grid)?;
    let phi = cfg.phi_model()?;
    let problem = FlowProblem::new(g, phi, cfg.flow.mode)?;
    Ok(Setup { cfg, problem })
}

fn fmt_bound(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.6e}")
    }
}

/// Solvability margins and the uniqueness-condition verdict; exit 0 iff
/// the solvability condition passes.
pub fn cmd_check(config: &Path, out: &mut dyn Write) -> i32 {
    let s = match setup(config) {
        Ok(s) => s,
        Err(e) => return fail(out, e),
    };
    let phi = s.problem.phi();
    let g = s.problem.g();
    let report = match check_solvability(phi, g) {
        Ok(r) => r,
        Err(e) => return fail(out, e),
    };
    say!(out, "phi: {}", phi.label());
    say!(out, "g: min {:.6e} max {:.6e} on n={} resolution={}", g.min(), g.max(), s.cfg.dim, s.cfg.resolution);
    say!(out, "liminf_(s->0) phi = {}", fmt_bound(report.liminf_at_zero));
    say!(out, "limsup_(s->inf) phi = {}", fmt_bound(report.limsup_at_infinity));
    say!(
        out,
        "solvability: {} (margin_upper = {}, margin_lower = {})",
        if report.passed { "PASS" } else { "FAIL" },
        fmt_bound(report.margin_upper),
        fmt_bound(report.margin_lower)
    );
    let uniq = check_uniqueness_condition(phi);
    match uniq.witness {
        None => {
            say!(out, "uniqueness condition: holds");
        }
        Some((c, sc)) => {
            say!(out, "uniqueness condition: violated (witness c = {c}, s = {sc})");
        }
    }
    let (c2, c1) = s.problem.level_radii();
    let show = |c: Option<f64>| c.map_or("none".to_string(), |v| format!("{v:.6e}"));
    say!(out, "level radii: C2 (phi = max g) = {}, C1 (phi = min g) = {}", show(c2), show(c1));
    if report.passed {
        EXIT_OK
    } else {
        EXIT_PRECONDITION
    }
}

fn write_run(dir: &Path, trace: &FlowTrace, stride: usize) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let last = trace.final_state();
    io::write_body(&dir.join("final_body.txt"), &last.body)?;
    io::write_trace_csv(&dir.join("trace.csv"), trace, stride)?;
    io::write_series(&dir.join("F.dat"), trace.records.iter().map(|r| (r.t, r.functional)))?;
    io::write_series(&dir.join("residual.dat"), trace.records.iter().map(|r| (r.t, r.residual_max)))?;
    io::write_curvature_csv(&dir.join("curvature.csv"), &last.body)?;
    let b = &last.bounds;
    io::write_summary(
        &dir.join("summary.txt"),
        &[
            ("termination", trace.termination.to_string()),
            ("steps", (trace.records.len() - 1).to_string()),
            ("rollbacks", trace.rollbacks.to_string()),
            ("t_final", format!("{:.16e}", last.t)),
            ("F_final", format!("{:.16e}", last.functional)),
            ("residual_max", format!("{:.16e}", last.residual_max)),
            ("speed_max", format!("{:.16e}", last.speed_max)),
            ("dissipation", format!("{:.16e}", last.dissipation)),
            ("min_h", format!("{:.16e}", b.min_h)),
            ("max_h", format!("{:.16e}", b.max_h)),
            ("solvability", if trace.solvability.passed { "pass" } else { "fail" }.to_string()),
        ],
    )
}

/// Runs the flow and writes `final_body.txt`, `trace.csv`, `F.dat`,
/// `residual.dat`, `curvature.csv` and `summary.txt` into `out_dir`.
pub fn cmd_solve(config: &Path, out_dir: &Path, out: &mut dyn Write) -> i32 {
    let s = match setup(config) {
        Ok(s) => s,
        Err(e) => return fail(out, e),
    };
    let body = match s.cfg.grid().and_then(|g| s.cfg.initial_body(&g)) {
        Ok(b) => b,
        Err(e) => return fail(out, e),
    };
    let trace = match s.problem.run(&body, &s.cfg.flow) {
        Ok(t) => t,
        Err(e) => return fail(out, e),
    };
    if !trace.solvability.passed {
        say!(
            out,
            "warning: solvability condition fails for {} (margins {}, {}); the flow may not converge",
            s.problem.phi().label(),
            fmt_bound(trace.solvability.margin_upper),
            fmt_bound(trace.solvability.margin_lower)
        );
    }
    if let Err(e) = write_run(out_dir, &trace, s.cfg.output_stride) {
        return fail(out, e);
    }
    let last = trace.final_state();
    say!(out, "termination: {}", trace.termination);
    say!(out, "steps: {} (rollbacks {})", trace.records.len() - 1, trace.rollbacks);
    say!(out, "t: {:.6}", last.t);
    say!(out, "F: {:.12e}", last.functional);
    say!(out, "residual_max: {:.6e}", last.residual_max);
    say!(out, "speed_max: {:.6e}", last.speed_max);
    say!(out, "h range: [{:.9}, {:.9}]", last.bounds.min_h, last.bounds.max_h);
    say!(out, "output: {}", out_dir.display());
    termination_exit_code(trace.termination)
}

/// Runs the flow from every body in `bodies` (comma-separated presets) and
/// compares the limits pairwise in sup norm.
pub fn cmd_uniqueness(config: &Path, bodies: &str, out: &mut dyn Write) -> i32 {
    let s = match setup(config) {
        Ok(s) => s,
        Err(e) => return fail(out, e),
    };
    let verdict = check_uniqueness_condition(s.problem.phi());
    if let Some((c, sc)) = verdict.witness {
        say!(
            out,
            "uniqueness condition violated for {}: witness c = {c}, s = {sc}; refusing to compare limits",
            s.problem.phi().label()
        );
        return EXIT_PRECONDITION;
    }
    let specs = match BodySpec::parse_list(bodies, Path::new(".")) {
        Ok(v) if v.len() >= 2 => v,
        Ok(_) => return fail(out, Error::InvalidConfig("uniqueness needs at least two bodies".into())),
        Err(e) => return fail(out, e),
    };
    let grid = match s.cfg.grid() {
        Ok(g) => g,
        Err(e) => return fail(out, e),
    };
    let initial = match specs.iter().map(|b| b.build(&grid)).collect::<Result<Vec<ConvexBody>, Error>>() {
        Ok(v) => v,
        Err(e) => return fail(out, e),
    };
    let traces: Vec<_> = initial.par_iter().map(|b| s.problem.run(b, &s.cfg.flow)).collect();
    let mut limits = Vec::new();
    let mut flow_failed = false;
    for (spec, trace) in bodies.split(',').filter(|b| !b.trim().is_empty()).zip(traces) {
        match trace {
            Ok(t) => {
                say!(
                    out,
                    "{}: {} after {} steps, residual_max {:.3e}",
                    spec.trim(),
                    t.termination,
                    t.records.len() - 1,
                    t.final_state().residual_max
                );
                flow_failed |= !t.converged();
                limits.push(t.final_state().body.clone());
            }
            Err(e) => return fail(out, e),
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            let d = limits[i]
                .values()
                .iter()
                .zip(limits[j].values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            say!(out, "distance({i}, {j}) = {d:.6e}");
            worst = worst.max(d);
        }
    }
    let pass = !flow_failed && worst <= s.cfg.uniqueness_tol;
    say!(
        out,
        "uniqueness: {} (max distance {worst:.6e}, tol {:.1e})",
        if pass { "PASS" } else { "FAIL" },
        s.cfg.uniqueness_tol
    );
    if flow_failed {
        EXIT_FLOW
    } else if pass {
        EXIT_OK
    } else {
        EXIT_PRECONDITION
    }
}

struct Check {
    name: &'static str,
    value: f64,
    tol: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tol
    }
}

/// Endpoints of `count` node-aligned arcs `[ξ_i, ξ_j]` spread over the circle.
fn oracle_arcs(n: usize, count: usize) -> Vec<(usize, usize)> {
    (0..count)
        .map(|i| {
            let start = (i * 37 * n / 101 + i * i) % n;
            let len = (n / 16) * (1 + (i * 5) % 7);
            (start, start + len.min(n - 1))
        })
        .collect()
}

fn oracle_checks(problem: &FlowProblem, body: &ConvexBody) -> Result<Vec<Check>, Error> {
    let grid = body.grid();
    let mut checks = Vec::new();
    let recip = jac_alpha(body)
        .values()
        .iter()
        .zip(jac_alpha_star(body).values())
        .map(|(a, b)| (a * b - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check { name: "jacobian reciprocity", value: recip, tol: 1e-10 });
    let total = (total_integral_curvature(body) - grid.total_measure()).abs();
    checks.push(Check { name: "total integral curvature", value: total, tol: 1e-3 });
    let polar = polar_body(body)?;
    let bipolar = polar_body(&polar)?
        .values()
        .iter()
        .zip(body.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(Check { name: "bipolar round trip", value: bipolar, tol: 1e-3 });
    let dissipation = problem.dissipation(body)?;
    checks.push(Check { name: "dissipation sign", value: dissipation.max(0.0), tol: 0.0 });
    if grid.dim() != 2 {
        return Ok(checks);
    }
    let f = problem.functional(body)?;
    let f_direct = problem.functional_direct(body)?;
    checks.push(Check { name: "functional F vs direct quadrature", value: (f - f_direct).abs(), tol: 5e-3 });
    let dt = 1e-4;
    let after = problem.euler_step(body, dt)?;
    checks.push(Check {
        name: "radial speed check",
        value: FlowProblem::radial_speed_check(body, &after, dt)?,
        tol: 5e-3,
    });
    checks.push(Check {
        name: "dual flow residual",
        value: problem.dual_flow_residual(body, &after, dt)?,
        tol: 1e-2,
    });
    // measure of ℜ_K(arc) against the integral-curvature density of K on the arc
    let density = integral_curvature_density(&polar);
    let n = grid.len();
    let step = TAU / n as f64;
    let mut worst: f64 = 0.0;
    for (i, j) in oracle_arcs(n, 8) {
        let d = |k: usize| density.values()[k % n];
        let quad = step * ((i + 1..j).map(d).sum::<f64>() + 0.5 * (d(i) + d(j)));
        let (a, b) = (grid.angles(i).0, grid.angles(i).0 + (j - i) as f64 * step);
        worst = worst.max((radial_gauss_image_measure(body, a, b)? - quad).abs());
    }
    checks.push(Check { name: "patch consistency", value: worst, tol: 5e-3 });
    Ok(checks)
}

/// Runs the cross-check battery on the configured body; exit 0 iff every
/// check passes, 1 when the body is rejected or a check fails.
pub fn cmd_oracle(config: &Path, out: &mut dyn Write) -> i32 {
    let s = match setup(config) {
        Ok(s) => s,
        Err(e) => return fail(out, e),
    };
    let body = match s.cfg.grid().and_then(|g| s.cfg.initial_body(&g)) {
        Ok(b) => b,
        Err(e) => {
            say!(out, "validation rejected the body: {e}");
            return exit_code(&e);
        }
    };
    let checks = match oracle_checks(&s.problem, &body) {
        Ok(c) => c,
        Err(e) => return fail(out, e),
    };
    let mut all = true;
    for c in &checks {
        all &= c.pass();
        say!(
            out,
            "{} {:<36} {:.3e} (tol {:.0e})",
            if c.pass() { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tol
        );
    }
    if all {
        EXIT_OK
    } else {
        EXIT_PRECONDITION
    }
}
