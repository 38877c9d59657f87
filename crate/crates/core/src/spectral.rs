//! FFT helpers: the longitudinal polar filter used by the n = 3 stepper and
//! trigonometric-interpolant derivatives on the circle.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::SphereGrid;

/// Slows longitudinal modes that the latitude rings resolve more finely than
/// the meridians: on ring `θ_j` mode `m` is scaled by
/// `min(1, (s_j / sin(mΔφ/2))²)` with `s_j = sin θ_j · sin(Δφ/2)/sin(Δθ/2)`,
/// which brings its diffusion rate down to the meridional one. Applied to
/// flow increments, it lets the explicit step run at the meridional stability
/// limit. The scaling is invertible, so stationary points are unchanged.
pub(crate) struct PolarFilter {
    n_lon: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Gain per FFT bin for each latitude ring; `None` when the ring is untouched.
    gains: Vec<Option<Vec<f64>>>,
}

impl PolarFilter {
    pub(crate) fn new(grid: &SphereGrid) -> Option<Self> {
        if grid.dim() != 3 {
            return None;
        }
        let n_lon = grid.n_lon();
        let (dt, dp) = grid.spacing();
        let ratio = (0.5 * dp).sin() / (0.5 * dt).sin();
        let gains = (0..grid.n_lat())
            .map(|j| {
                let (theta, _) = grid.angles(j * n_lon);
                let limit = theta.sin() * ratio;
                let gain: Vec<f64> = (0..n_lon)
                    .map(|bin| {
                        let m = bin.min(n_lon - bin);
                        let s = (0.5 * m as f64 * dp).sin();
                        if s <= limit + 1e-12 {
                            1.0
                        } else {
                            (limit / s).powi(2)
                        }
                    })
                    .collect();
                gain.iter().any(|&x| x < 1.0).then_some(gain)
            })
            .collect();
        let mut planner = FftPlanner::new();
        Some(PolarFilter {
            n_lon,
            forward: planner.plan_fft_forward(n_lon),
            inverse: planner.plan_fft_inverse(n_lon),
            gains,
        })
    }

    pub(crate) fn apply(&self, values: &mut [f64]) {
        let l = self.n_lon;
        let mut buf = vec![Complex64::new(0.0, 0.0); l];
        for (j, gain) in self.gains.iter().enumerate() {
            let Some(gain) = gain else { continue };
            let ring = &mut values[j * l..(j + 1) * l];
            for (b, v) in buf.iter_mut().zip(ring.iter()) {
                *b = Complex64::new(*v, 0.0);
            }
            self.forward.process(&mut buf);
            for (b, g) in buf.iter_mut().zip(gain) {
                *b *= *g;
            }
            self.inverse.process(&mut buf);
            let scale = 1.0 / l as f64;
            for (v, b) in ring.iter_mut().zip(&buf) {
                *v = b.re * scale;
            }
        }
    }
}

/// First and second θ-derivatives of the trigonometric interpolant of
/// periodic samples on `θ_k = 2πk/N`.
pub fn periodic_derivatives(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spec: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut spec);
    let mut d1 = spec.clone();
    let mut d2 = spec;
    for m in 0..n {
        let freq = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        // the Nyquist mode has no well-defined odd derivative
        let odd = if 2 * m == n { 0.0 } else { freq };
        d1[m] *= Complex64::new(0.0, odd);
        d2[m] *= -freq * freq;
    }
    inverse.process(&mut d1);
    inverse.process(&mut d2);
    let scale = 1.0 / n as f64;
    (
        d1.iter().map(|c| c.re * scale).collect(),
        d2.iter().map(|c| c.re * scale).collect(),
    )
}
