//! Flat `key=value` run configuration.
//!
//! ```text
//! grid.n=2
//! grid.resolution=256
//! phi.kind=reciprocal          # power | reciprocal | custom | tabulated
//! g.kind=harmonic              # constant | harmonic | file
//! g.a0=1.0
//! g.cos=0.2                    # comma-separated coefficients of k = 1, 2, ...
//! body=ellipse:1.5:0.7
//! flow.mode=radial
//! flow.tol_residual=1e-4
//! ```
//!
//! Relative file paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::geometry::ConvexBody;
use crate::grid::{ScalarField, SphereGrid};
use crate::io::{read_body, read_node_values};
use crate::phi::{PhiModel, PhiTable};

const KEYS: &[&str] = &[
    "grid.n",
    "grid.resolution",
    "phi.kind",
    "phi.p",
    "phi.table",
    "phi.base",
    "g.kind",
    "g.value",
    "g.a0",
    "g.cos",
    "g.sin",
    "g.file",
    "body",
    "flow.mode",
    "flow.dt_init",
    "flow.dt_min",
    "flow.shrink_factor",
    "flow.step_cap",
    "flow.cfl",
    "flow.tol_speed",
    "flow.tol_residual",
    "flow.max_steps",
    "flow.snapshot_stride",
    "output.stride",
    "uniqueness.tol",
];

#[derive(Debug, Clone, PartialEq)]
pub enum GSpec {
    Constant(f64),
    /// n = 2: `a0 + Σ cos_k cos kθ + sin_k sin kθ`; n = 3: `a0 + Σ cos_k cosᵏθ`.
    Harmonic { a0: f64, cos: Vec<f64>, sin: Vec<f64> },
    File(PathBuf),
}

impl GSpec {
    fn eval(&self, dim: usize, theta: f64) -> f64 {
        match self {
            GSpec::Constant(v) => *v,
            GSpec::Harmonic { a0, cos, sin } if dim == 2 => {
                let mut g = *a0;
                for (k, c) in cos.iter().enumerate() {
                    g += c * ((k + 1) as f64 * theta).cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    g += s * ((k + 1) as f64 * theta).sin();
                }
                g
            }
            GSpec::Harmonic { a0, cos, .. } => {
                let x = theta.cos();
                cos.iter().rev().fold(0.0, |acc, c| (acc + c) * x) + a0
            }
            GSpec::File(_) => unreachable!("file data is not synthesized"),
        }
    }

    /// Samples `g` on `grid`. Synthesized data must be positive on a grid four
    /// times finer than the target.
    pub fn build(&self, grid: &Arc<SphereGrid>) -> Result<ScalarField> {
        let dim = grid.dim();
        let field = match self {
            GSpec::File(path) => read_node_values(path, grid)?,
            _ => {
                let fine = SphereGrid::new(dim, 4 * grid.resolution())?;
                if let Some(k) = (0..fine.len()).find(|&k| !(self.eval(dim, fine.angles(k).0) > 0.0)) {
                    let (theta, phi) = fine.angles(k);
                    return Err(Error::NonPositiveDensity {
                        value: self.eval(dim, theta),
                        location: format!("theta={theta:.6} phi={phi:.6}"),
                    });
                }
                ScalarField::from_angle_fn(grid.clone(), |t, _| self.eval(dim, t))?
            }
        };
        if let Some((k, &v)) = field.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveDensity {
                value: v,
                location: format!("node {k}"),
            });
        }
        Ok(field)
    }
}

/// Initial-body presets: `ball:c`, `ellipse:a:b`, `offset:c:v1:v2[:v3]`,
/// `ellipsoid:a:b:c`, `file:path`.
#[derive(Debug, Clone, PartialEq)]
pub enum BodySpec {
    Ball(f64),
    Ellipse(f64, f64),
    Offset(f64, [f64; 3]),
    Ellipsoid([f64; 3]),
    File(PathBuf),
}

impl BodySpec {
    pub fn parse(spec: &str, base: &Path) -> Result<Self> {
        let spec = spec.trim();
        let bad = |msg: &str| Error::InvalidConfig(format!("body `{spec}`: {msg}"));
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        if kind == "file" {
            if rest.is_empty() {
                return Err(bad("missing path"));
            }
            return Ok(BodySpec::File(base.join(rest)));
        }
        let args = rest
            .split(':')
            .filter(|s| !s.is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("arguments must be numbers")))
            .collect::<Result<Vec<f64>>>()?;
        match (kind, args.as_slice()) {
            ("ball", [c]) => Ok(BodySpec::Ball(*c)),
            ("ellipse", [a, b]) => Ok(BodySpec::Ellipse(*a, *b)),
            ("offset", [c, x, y]) => Ok(BodySpec::Offset(*c, [*x, *y, 0.0])),
            ("offset", [c, x, y, z]) => Ok(BodySpec::Offset(*c, [*x, *y, *z])),
            ("ellipsoid", [a, b, c]) => Ok(BodySpec::Ellipsoid([*a, *b, *c])),
            ("ball" | "ellipse" | "offset" | "ellipsoid", _) => Err(bad("wrong number of arguments")),
            _ => Err(bad("unknown preset")),
        }
    }

    pub fn build(&self, grid: &Arc<SphereGrid>) -> Result<ConvexBody> {
        let body = match self {
            BodySpec::Ball(c) => ConvexBody::ball(grid.clone(), *c)?,
            BodySpec::Ellipse(a, b) => ConvexBody::ellipse(grid.clone(), *a, *b)?,
            BodySpec::Offset(c, v) => ConvexBody::offset_ball(grid.clone(), *c, *v)?,
            BodySpec::Ellipsoid(axes) => ConvexBody::ellipsoid(grid.clone(), &axes[..grid.dim()])?,
            BodySpec::File(path) => read_body(path)?,
        };
        grid.check_same(body.grid())?;
        Ok(body)
    }

    /// Comma-separated list of presets.
    pub fn parse_list(list: &str, base: &Path) -> Result<Vec<Self>> {
        list.split(',').filter(|s| !s.trim().is_empty()).map(|s| Self::parse(s, base)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec {
    Power(f64),
    Reciprocal,
    /// Tabulated samples read from a file (`custom` is an alias).
    Tabulated(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub resolution: usize,
    pub phi: PhiSpec,
    pub phi_base: f64,
    pub g: GSpec,
    pub body: BodySpec,
    pub flow: FlowConfig,
    /// Write every `output_stride`-th accepted step to the trace CSV.
    pub output_stride: usize,
    pub uniqueness_tol: f64,
    /// Directory relative paths were resolved against.
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 2,
            resolution: 256,
            phi: PhiSpec::Reciprocal,
            phi_base: 1.0,
            g: GSpec::Constant(1.0),
            body: BodySpec::Ball(1.0),
            flow: FlowConfig::default(),
            output_stride: 1,
            uniqueness_tol: 1e-3,
            base_dir: PathBuf::from("."),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::InvalidConfig(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidConfig(format!("line {}: expected key=value", i + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::InvalidConfig(format!("line {}: unknown key `{key}`", i + 1)));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::InvalidConfig(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let mut cfg = RunConfig {
            base_dir: base.to_path_buf(),
            ..RunConfig::default()
        };
        if let Some(v) = get("grid.n") {
            cfg.dim = parse_num("grid.n", v)?;
        }
        if let Some(v) = get("grid.resolution") {
            cfg.resolution = parse_num("grid.resolution", v)?;
        }
        SphereGrid::new(cfg.dim, cfg.resolution.max(1)).map_err(|e| Error::InvalidConfig(e.to_string()))?;

        cfg.phi = match get("phi.kind").unwrap_or("reciprocal") {
            "reciprocal" => PhiSpec::Reciprocal,
            "power" => {
                let p = get("phi.p").ok_or_else(|| Error::InvalidConfig("phi.kind=power needs phi.p".into()))?;
                PhiSpec::Power(parse_num("phi.p", p)?)
            }
            "custom" | "tabulated" => {
                let table = get("phi.table")
                    .ok_or_else(|| Error::InvalidConfig("tabulated phi needs phi.table".into()))?;
                PhiSpec::Tabulated(base.join(table))
            }
            other => return Err(Error::InvalidConfig(format!("unknown phi.kind `{other}`"))),
        };
        if let Some(v) = get("phi.base") {
            cfg.phi_base = parse_num("phi.base", v)?;
        }

        cfg.g = match get("g.kind").unwrap_or("constant") {
            "constant" => GSpec::Constant(parse_num("g.value", get("g.value").unwrap_or("1"))?),
            "harmonic" => {
                let sin = parse_list("g.sin", get("g.sin").unwrap_or(""))?;
                if cfg.dim == 3 && !sin.is_empty() {
                    return Err(Error::InvalidConfig("g.sin is not available on S^2 (axisymmetric series)".into()));
                }
                GSpec::Harmonic {
                    a0: parse_num("g.a0", get("g.a0").unwrap_or("1"))?,
                    cos: parse_list("g.cos", get("g.cos").unwrap_or(""))?,
                    sin,
                }
            }
            "file" => {
                let f = get("g.file").ok_or_else(|| Error::InvalidConfig("g.kind=file needs g.file".into()))?;
                GSpec::File(base.join(f))
            }
            other => return Err(Error::InvalidConfig(format!("unknown g.kind `{other}`"))),
        };

        if let Some(v) = get("body") {
            cfg.body = BodySpec::parse(v, base)?;
        }

        let f = &mut cfg.flow;
        if let Some(v) = get("flow.mode") {
            f.mode = v.parse()?;
        }
        for (key, slot) in [
            ("flow.dt_init", &mut f.dt_init),
            ("flow.dt_min", &mut f.dt_min),
            ("flow.shrink_factor", &mut f.shrink_factor),
            ("flow.step_cap", &mut f.step_cap),
            ("flow.cfl", &mut f.cfl),
            ("flow.tol_speed", &mut f.tol_speed),
            ("flow.tol_residual", &mut f.tol_residual),
        ] {
            if let Some(v) = get(key) {
                *slot = parse_num(key, v)?;
            }
        }
        if let Some(v) = get("flow.max_steps") {
            f.max_steps = parse_num("flow.max_steps", v)?;
        }
        if let Some(v) = get("flow.snapshot_stride") {
            f.stride = parse_num("flow.snapshot_stride", v)?;
        }
        f.validate()?;
        if let Some(v) = get("output.stride") {
            cfg.output_stride = parse_num("output.stride", v)?;
            if cfg.output_stride == 0 {
                return Err(Error::InvalidConfig("output.stride must be at least 1".into()));
            }
        }
        if let Some(v) = get("uniqueness.tol") {
            cfg.uniqueness_tol = parse_num("uniqueness.tol", v)?;
            if !(cfg.uniqueness_tol > 0.0) {
                return Err(Error::InvalidConfig("uniqueness.tol must be positive".into()));
            }
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Arc<SphereGrid>> {
        SphereGrid::shared(self.dim, self.resolution)
    }

    pub fn phi_model(&self) -> Result<PhiModel> {
        let model = match &self.phi {
            PhiSpec::Power(p) => PhiModel::power(*p),
            PhiSpec::Reciprocal => PhiModel::reciprocal(),
            PhiSpec::Tabulated(path) => PhiModel::tabulated(PhiTable::read(path)?),
        };
        model.with_primitive_base(self.phi_base)
    }

    pub fn g_field(&self, grid: &Arc<SphereGrid>) -> Result<ScalarField> {
        self.g.build(grid)
    }

    pub fn initial_body(&self, grid: &Arc<SphereGrid>) -> Result<ConvexBody> {
        self.body.build(grid)
    }
}
