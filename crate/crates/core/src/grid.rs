//! Discretizations of S^1 and S^2 with finite-difference covariant derivatives
//! and positive product quadrature.
//!
//! * `n = 2`: the periodic grid `θ_k = 2πk/N`, one node per angle.
//! * `n = 3`: a latitude-longitude grid with `M = resolution` cell-centred
//!   colatitudes `θ_j = (j + 1/2)π/M` and `2M` longitudes `φ_i = πi/M`.
//!   Node `k = j·2M + i`. No node sits on a pole; stencils that step across a
//!   pole read the ghost row from the same latitude, half a turn away in
//!   longitude.
//!
//! Derivatives are expressed in the orthonormal frame `(e_θ)` for `n = 2` and
//! `(e_θ, e_φ)` for `n = 3`. The centred stencils use trigonometrically fitted
//! denominators (`2 sin Δ` for first, `4 sin²(Δ/2)` for second differences):
//! they stay second-order accurate and are exact on constants and on the
//! first spherical harmonics, so `∇²h + hI` of a translated body is unchanged.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Point in R^3; for `n = 2` the third component is zero.
pub type Point = [f64; 3];

/// Node loops above this size fan out over the rayon pool.
const PAR_THRESHOLD: usize = 2048;

pub(crate) fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if len >= PAR_THRESHOLD {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

/// Symmetric 2×2 matrix in frame components. For `n = 2` only `a11` is used.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub fn shifted(self, dim: usize, s: f64) -> Self {
        match dim {
            2 => Sym2 {
                a11: self.a11 + s,
                ..Sym2::default()
            },
            _ => Sym2 {
                a11: self.a11 + s,
                a12: self.a12,
                a22: self.a22 + s,
            },
        }
    }

    pub fn det(&self, dim: usize) -> f64 {
        match dim {
            2 => self.a11,
            _ => self.a11 * self.a22 - self.a12 * self.a12,
        }
    }

    /// Eigenvalues in ascending order; the second slot is unused for `n = 2`.
    pub fn eigenvalues(&self, dim: usize) -> [f64; 2] {
        match dim {
            2 => [self.a11, self.a11],
            _ => {
                let mean = 0.5 * (self.a11 + self.a22);
                let half_diff = 0.5 * (self.a11 - self.a22);
                let rad = half_diff.hypot(self.a12);
                [mean - rad, mean + rad]
            }
        }
    }

    pub fn min_eigenvalue(&self, dim: usize) -> f64 {
        self.eigenvalues(dim)[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    dim: usize,
    resolution: usize,
    n_lat: usize,
    n_lon: usize,
    d_theta: f64,
    d_phi: f64,
    angles: Vec<(f64, f64)>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    // Fitted finite-difference coefficients.
    c1_theta: f64,
    c2_theta: f64,
    c1_phi: f64,
    c2_phi: f64,
}

impl SphereGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if resolution < 16 || resolution % 2 != 0 {
            return Err(Error::ResolutionTooSmall(resolution));
        }
        let (n_lat, n_lon, d_theta, d_phi) = if dim == 2 {
            (1, resolution, TAU / resolution as f64, 0.0)
        } else {
            let m = resolution;
            (m, 2 * m, PI / m as f64, PI / m as f64)
        };
        let count = n_lat * n_lon;
        let mut angles = Vec::with_capacity(count);
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        if dim == 2 {
            let w = TAU / resolution as f64;
            for k in 0..resolution {
                let theta = d_theta * k as f64;
                angles.push((theta, 0.0));
                nodes.push([theta.cos(), theta.sin(), 0.0]);
                weights.push(w);
            }
        } else {
            for j in 0..n_lat {
                let theta = (j as f64 + 0.5) * d_theta;
                // Exact cell area between the bounding parallels.
                let band = (theta - 0.5 * d_theta).cos() - (theta + 0.5 * d_theta).cos();
                let w = d_phi * band;
                let (st, ct) = theta.sin_cos();
                for i in 0..n_lon {
                    let phi = d_phi * i as f64;
                    let (sp, cp) = phi.sin_cos();
                    angles.push((theta, phi));
                    nodes.push([st * cp, st * sp, ct]);
                    weights.push(w);
                }
            }
        }
        let (c1_phi, c2_phi) = if dim == 3 {
            fitted_coefficients(d_phi)
        } else {
            (0.0, 0.0)
        };
        let (c1_theta, c2_theta) = fitted_coefficients(d_theta);
        Ok(SphereGrid {
            dim,
            resolution,
            n_lat,
            n_lon,
            d_theta,
            d_phi,
            angles,
            nodes,
            weights,
            c1_theta,
            c2_theta,
            c1_phi,
            c2_phi,
        })
    }

    pub fn shared(dim: usize, resolution: usize) -> Result<Arc<Self>> {
        Self::new(dim, resolution).map(Arc::new)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_lat(&self) -> usize {
        self.n_lat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    /// Angular steps `(Δθ, Δφ)`; `Δφ = 0` for `n = 2`.
    pub fn spacing(&self) -> (f64, f64) {
        (self.d_theta, self.d_phi)
    }

    /// Smallest angular step of the stencil.
    pub fn min_spacing(&self) -> f64 {
        if self.dim == 2 {
            self.d_theta
        } else {
            self.d_theta.min(self.d_phi)
        }
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> Point {
        self.nodes[k]
    }

    /// `(θ, φ)` of node `k`; `φ = 0` for `n = 2`.
    pub fn angles(&self, k: usize) -> (f64, f64) {
        self.angles[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// 2π for the circle, 4π for the sphere.
    pub fn total_measure(&self) -> f64 {
        if self.dim == 2 {
            TAU
        } else {
            2.0 * TAU
        }
    }

    pub fn same_as(&self, other: &SphereGrid) -> bool {
        self.dim == other.dim && self.resolution == other.resolution
    }

    pub(crate) fn check_same(&self, other: &SphereGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected_dim: self.dim,
                expected_res: self.resolution,
                got_dim: other.dim,
                got_res: other.resolution,
            })
        }
    }

    /// Orthonormal tangent frame at node `k`: `e_θ` and (for `n = 3`) `e_φ`.
    pub fn frame(&self, k: usize) -> [Point; 2] {
        let (theta, phi) = self.angles[k];
        if self.dim == 2 {
            [[-theta.sin(), theta.cos(), 0.0], [0.0; 3]]
        } else {
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            [[ct * cp, ct * sp, -st], [-sp, cp, 0.0]]
        }
    }

    /// Lift frame components to an ambient tangent vector at node `k`.
    pub fn lift_tangent(&self, k: usize, comps: [f64; 2]) -> Point {
        let [e1, e2] = self.frame(k);
        [
            comps[0] * e1[0] + comps[1] * e2[0],
            comps[0] * e1[1] + comps[1] * e2[1],
            comps[0] * e1[2] + comps[1] * e2[2],
        ]
    }

    /// Flat index of `(latitude j, longitude i)` with pole ghosts:
    /// row `-1` and row `M` reflect onto rows `0` and `M-1` shifted by half a turn.
    #[inline]
    fn index3(&self, j: isize, i: isize) -> usize {
        let m = self.n_lat as isize;
        let l = self.n_lon as isize;
        let (jj, ii) = if j < 0 {
            (-1 - j, i + l / 2)
        } else if j >= m {
            (2 * m - 1 - j, i + l / 2)
        } else {
            (j, i)
        };
        (jj * l + ii.rem_euclid(l)) as usize
    }

    /// Frame gradient and covariant Hessian of `values` at node `k`.
    #[inline]
    pub(crate) fn derivatives_at(&self, values: &[f64], k: usize) -> ([f64; 2], Sym2) {
        if self.dim == 2 {
            let n = self.n_lon;
            let f0 = values[k];
            let fp = values[(k + 1) % n];
            let fm = values[(k + n - 1) % n];
            let d1 = (fp - fm) * self.c1_theta;
            let d2 = (fp - 2.0 * f0 + fm) * self.c2_theta;
            return (
                [d1, 0.0],
                Sym2 {
                    a11: d2,
                    ..Sym2::default()
                },
            );
        }
        let l = self.n_lon;
        let j = (k / l) as isize;
        let i = (k % l) as isize;
        let f0 = values[k];
        let at = |dj: isize, di: isize| values[self.index3(j + dj, i + di)];
        let (n_, s_) = (at(-1, 0), at(1, 0));
        let (w_, e_) = (at(0, -1), at(0, 1));
        let f_t = (s_ - n_) * self.c1_theta;
        let f_tt = (s_ - 2.0 * f0 + n_) * self.c2_theta;
        let f_p = (e_ - w_) * self.c1_phi;
        let f_pp = (e_ - 2.0 * f0 + w_) * self.c2_phi;
        let f_tp = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) * self.c1_theta * self.c1_phi;
        let (theta, _) = self.angles[k];
        let (st, ct) = theta.sin_cos();
        let cot = ct / st;
        (
            [f_t, f_p / st],
            Sym2 {
                a11: f_tt,
                a12: (f_tp - cot * f_p) / st,
                a22: f_pp / (st * st) + cot * f_t,
            },
        )
    }

    /// Angles of an arbitrary unit direction: `(θ, φ)` with `θ ∈ [0, 2π)` for the
    /// circle and colatitude/longitude for the sphere.
    pub fn direction_angles(&self, dir: &Point) -> (f64, f64) {
        if self.dim == 2 {
            (dir[1].atan2(dir[0]).rem_euclid(TAU), 0.0)
        } else {
            let z = dir[2].clamp(-1.0, 1.0);
            (z.acos(), dir[1].atan2(dir[0]).rem_euclid(TAU))
        }
    }

    /// Unit direction for the given angles.
    pub fn direction(&self, theta: f64, phi: f64) -> Point {
        if self.dim == 2 {
            [theta.cos(), theta.sin(), 0.0]
        } else {
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            [st * cp, st * sp, ct]
        }
    }

    /// Node whose direction is nearest to `dir`.
    pub fn nearest_node(&self, dir: &Point) -> usize {
        let (theta, phi) = self.direction_angles(dir);
        if self.dim == 2 {
            ((theta / self.d_theta).round() as usize) % self.n_lon
        } else {
            let j = ((theta / self.d_theta - 0.5).round().max(0.0) as usize).min(self.n_lat - 1);
            let i = ((phi / self.d_phi).round() as usize) % self.n_lon;
            j * self.n_lon + i
        }
    }

    /// Flat index of the node `(dj, di)` steps away from `k` (with pole ghosts).
    /// For `n = 2` only `di` is used.
    pub(crate) fn offset(&self, k: usize, dj: isize, di: isize) -> usize {
        if self.dim == 2 {
            let n = self.n_lon as isize;
            (k as isize + di).rem_euclid(n) as usize
        } else {
            let l = self.n_lon;
            self.index3((k / l) as isize + dj, (k % l) as isize + di)
        }
    }
}

fn fitted_coefficients(step: f64) -> (f64, f64) {
    let s = (0.5 * step).sin();
    (1.0 / (2.0 * step.sin()), 1.0 / (4.0 * s * s))
}

/// Real values sampled at the nodes of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<SphereGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: Arc<SphereGrid>, value: f64) -> Self {
        let values = vec![value; grid.len()];
        ScalarField { grid, values }
    }

    /// Sample a function of the unit direction.
    pub fn from_direction_fn(grid: Arc<SphereGrid>, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(f).collect();
        Self::new(grid, values)
    }

    /// Sample a function of the node angles `(θ, φ)`.
    pub fn from_angle_fn(grid: Arc<SphereGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let (t, p) = grid.angles(k);
                f(t, p)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Grid-aligned rotation: node `k` of the result holds the value of node
    /// `k - shift` (in θ for the circle, in longitude for the sphere).
    pub fn rotated(&self, shift: isize) -> Self {
        let values = (0..self.len())
            .map(|k| self.values[self.grid.offset(k, 0, -shift)])
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Log-linear interpolation at an arbitrary direction (values must be positive).
    pub fn interpolate_log(&self, dir: &Point) -> f64 {
        let g = &*self.grid;
        let (theta, phi) = g.direction_angles(dir);
        let lv = |k: usize| self.values[k].ln();
        if g.dim() == 2 {
            let (dt, _) = g.spacing();
            let s = theta / dt;
            let k0 = s.floor();
            let frac = s - k0;
            let k0 = (k0 as usize) % g.len();
            let k1 = g.offset(k0, 0, 1);
            return ((1.0 - frac) * lv(k0) + frac * lv(k1)).exp();
        }
        let (dt, dp) = g.spacing();
        let s = theta / dt - 0.5;
        let j0 = s.floor();
        let ft = s - j0;
        let j0 = j0 as isize;
        let u = phi / dp;
        let i0 = u.floor();
        let fp = u - i0;
        let i0 = i0 as isize;
        let at = |j: isize, i: isize| lv(g.index3(j, i));
        let lower = (1.0 - fp) * at(j0, i0) + fp * at(j0, i0 + 1);
        let upper = (1.0 - fp) * at(j0 + 1, i0) + fp * at(j0 + 1, i0 + 1);
        ((1.0 - ft) * lower + ft * upper).exp()
    }
}

/// Build the discretization of `S^{n-1}`.
pub fn build_grid(n: usize, resolution: usize) -> Result<Arc<SphereGrid>> {
    SphereGrid::shared(n, resolution)
}

/// Frame components of the gradient at every node.
pub fn spherical_gradient(grid: &SphereGrid, f: &ScalarField) -> Result<Vec<[f64; 2]>> {
    grid.check_same(f.grid())?;
    Ok(par_map(grid.len(), |k| grid.derivatives_at(f.values(), k).0))
}

/// Frame components of the covariant Hessian at every node.
pub fn spherical_hessian(grid: &SphereGrid, f: &ScalarField) -> Result<Vec<Sym2>> {
    grid.check_same(f.grid())?;
    Ok(par_map(grid.len(), |k| grid.derivatives_at(f.values(), k).1))
}

/// `Σ_k w_k f_k`.
pub fn integrate(grid: &SphereGrid, f: &ScalarField) -> Result<f64> {
    grid.check_same(f.grid())?;
    Ok(quadrature(grid, f.values()))
}

pub(crate) fn quadrature(grid: &SphereGrid, values: &[f64]) -> f64 {
    grid.weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}
