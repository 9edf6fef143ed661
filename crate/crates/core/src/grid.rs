//! Periodic sampling grids and their spectral transforms.
//!
//! A [`GridSpec`] describes the torus `[0, L)^m` sampled at `n` points per
//! axis. Point indices are row-major with the first axis slowest, so for
//! `m = 2` the point `(i₁, i₂)` lives at `i₁·n + i₂`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Ambient dimension, 1 or 2.
    pub m: usize,
    /// Points per axis, a power of two, at least 8.
    pub n: usize,
    /// Side length of the torus.
    #[serde(rename = "length")]
    pub length: f64,
}

impl GridSpec {
    pub fn new(m: usize, n: usize, length: f64) -> Result<Self> {
        let g = GridSpec { m, n, length };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m == 1 || self.m == 2) {
            return Err(Error::Grid(format!("ambient dimension {} not in {{1, 2}}", self.m)));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(Error::Grid(format!(
                "points per axis {} must be a power of two >= 8",
                self.n
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Grid(format!("side length {} must be positive", self.length)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Number of grid points, `n^m`.
    pub fn count(&self) -> usize {
        self.n.pow(self.m as u32)
    }

    /// Quadrature weight of one cell, `h^m`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.m as i32)
    }

    /// Multi-index of point `p`.
    pub fn index(&self, p: usize) -> [usize; 2] {
        if self.m == 1 {
            [p, 0]
        } else {
            [p / self.n, p % self.n]
        }
    }

    pub fn coords(&self, p: usize) -> [f64; 2] {
        let h = self.spacing();
        let idx = self.index(p);
        if self.m == 1 {
            [idx[0] as f64 * h, 0.0]
        } else {
            [idx[0] as f64 * h, idx[1] as f64 * h]
        }
    }

    /// Signed integer frequency for FFT bin `k` (Nyquist reported as `+n/2`).
    pub fn signed_bin(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if k <= n / 2 {
            k
        } else {
            k - n
        }
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.n / 2
    }

    /// Angular frequency `2πk/L` of FFT bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        2.0 * PI * self.signed_bin(k) as f64 / self.length
    }

    /// Dual-lattice frequency vector of spectral index `q` (same layout as
    /// point indices).
    pub fn wavevector(&self, q: usize) -> [f64; 2] {
        let idx = self.index(q);
        if self.m == 1 {
            [self.frequency(idx[0]), 0.0]
        } else {
            [self.frequency(idx[0]), self.frequency(idx[1])]
        }
    }

    pub fn wavevector_norm_sqr(&self, q: usize) -> f64 {
        let xi = self.wavevector(q);
        xi[0] * xi[0] + xi[1] * xi[1]
    }

    /// Whether spectral index `q` sits on the Nyquist line of `axis`.
    pub fn on_nyquist(&self, q: usize, axis: usize) -> bool {
        self.is_nyquist(self.index(q)[axis])
    }

    /// Smallest non-zero `|ξ|`.
    pub fn min_frequency(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// The same torus at twice the resolution.
    pub fn doubled(&self) -> Self {
        GridSpec {
            n: self.n * 2,
            ..*self
        }
    }
}

/// Forward/inverse FFT of scalar arrays laid out on a [`GridSpec`].
///
/// The forward transform is unnormalized; the inverse divides by `n^m`, so
/// `inverse(forward(u)) = u`.
#[derive(Clone)]
pub struct Spectral {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            grid,
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.grid.count() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        debug_assert_eq!(data.len(), self.grid.count());
        // rows (contiguous)
        fft.process(data);
        if self.grid.m == 2 {
            let mut column = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    column[i] = data[i * n + j];
                }
                fft.process(&mut column);
                for i in 0..n {
                    data[i * n + j] = column[i];
                }
            }
        }
    }

    /// Multiplies the spectrum of `data` by `symbol(q)` and transforms back.
    pub fn apply_symbol(&self, data: &mut [Complex64], symbol: impl Fn(usize) -> Complex64) {
        self.forward(data);
        for (q, z) in data.iter_mut().enumerate() {
            *z *= symbol(q);
        }
        self.inverse(data);
    }

    /// Evaluates the trigonometric interpolant with spectrum `spectrum`
    /// (unnormalized forward transform) at the continuous point `x`, after
    /// multiplying each mode by `damping(q)`. Nyquist modes are split evenly
    /// between `±n/2` so that real data interpolate to real values.
    pub fn evaluate(&self, spectrum: &[Complex64], x: [f64; 2], damping: impl Fn(usize) -> f64) -> Complex64 {
        let g = &self.grid;
        let n = g.n;
        let phase_axis = |k: usize, xa: f64| -> Complex64 {
            let w = g.frequency(k);
            if g.is_nyquist(k) {
                Complex64::new((w * xa).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, w * xa)
            }
        };
        let ph0: Vec<Complex64> = (0..n).map(|k| phase_axis(k, x[0])).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        if g.m == 1 {
            for (q, s) in spectrum.iter().enumerate() {
                acc += s * ph0[q] * damping(q);
            }
        } else {
            let ph1: Vec<Complex64> = (0..n).map(|k| phase_axis(k, x[1])).collect();
            for (q, s) in spectrum.iter().enumerate() {
                acc += s * ph0[q / n] * ph1[q % n] * damping(q);
            }
        }
        acc / g.count() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 16, 1.0).is_err());
        assert!(GridSpec::new(1, 4, 1.0).is_err());
        assert!(GridSpec::new(1, 24, 1.0).is_err());
        assert!(GridSpec::new(2, 16, 0.0).is_err());
        assert!(GridSpec::new(2, 16, 2.0).is_ok());
    }

    #[test]
    fn round_trip_two_dimensional() {
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        let sp = Spectral::new(g);
        let orig: Vec<Complex64> = (0..g.count())
            .map(|p| Complex64::new((p as f64 * 0.37).sin(), (p as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        sp.forward(&mut data);
        sp.inverse(&mut data);
        for (a, b) in data.iter().zip(orig.iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_its_bin() {
        let g = GridSpec::new(2, 8, 2.0).unwrap();
        let sp = Spectral::new(g);
        let mut data: Vec<Complex64> = (0..g.count())
            .map(|p| {
                let x = g.coords(p);
                Complex64::from_polar(1.0, 2.0 * PI * (1.0 * x[0] - 2.0 * x[1]) / g.length)
            })
            .collect();
        sp.forward(&mut data);
        let target = 1 * 8 + (8 - 2);
        for (q, z) in data.iter().enumerate() {
            let expect = if q == target { g.count() as f64 } else { 0.0 };
            assert!((z.norm() - expect).abs() < 1e-10, "bin {q}");
        }
        assert_eq!(g.wavevector(target), [2.0 * PI / 2.0, -2.0 * 2.0 * PI / 2.0]);
    }

    #[test]
    fn evaluate_reproduces_grid_values() {
        let g = GridSpec::new(1, 16, 1.0).unwrap();
        let sp = Spectral::new(g);
        let vals: Vec<Complex64> = (0..16)
            .map(|p| Complex64::new((2.0 * PI * g.coords(p)[0]).sin() + 0.3, 0.0))
            .collect();
        let mut spec = vals.clone();
        sp.forward(&mut spec);
        for p in 0..16 {
            let v = sp.evaluate(&spec, g.coords(p), |_| 1.0);
            assert!((v - vals[p]).norm() < 1e-13);
        }
        let mid = sp.evaluate(&spec, [0.03, 0.0], |_| 1.0);
        assert!((mid.re - ((2.0 * PI * 0.03).sin() + 0.3)).abs() < 1e-13);
    }
}
