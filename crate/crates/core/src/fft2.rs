//! Two-dimensional complex FFT on row-major buffers.

use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::linalg::C64;

/// Planned forward/inverse 2D transforms for an `nx` x `ny` grid.
///
/// Plans are shared and immutable; scratch is allocated per call so one
/// instance can be used from several threads.
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform in place, scaled by `1/(nx·ny)`.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let s = 1.0 / (self.nx * self.ny) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn run(&self, data: &mut [C64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.nx * self.ny, "buffer does not match the planned grid");
        rows.process(data);
        let mut t = vec![C64::new(0.0, 0.0); data.len()];
        transpose::transpose(data, &mut t, self.nx, self.ny);
        cols.process(&mut t);
        transpose::transpose(&t, data, self.ny, self.nx);
    }
}

/// Angular frequency `2π·f` of FFT bin `j` out of `n` at sample spacing `pitch`.
#[inline]
pub fn angular_frequency(j: usize, n: usize, pitch: f64) -> f64 {
    let s = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
    2.0 * std::f64::consts::PI * s / (n as f64 * pitch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_single_mode() {
        let (nx, ny) = (12, 8);
        let fft = Fft2::new(nx, ny);
        let orig: Vec<C64> = (0..nx * ny)
            .map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut d = orig.clone();
        fft.forward(&mut d);
        fft.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
        // plane wave with 3 cycles along x and 2 along y lands in one bin
        let mut p: Vec<C64> = (0..ny)
            .flat_map(|i| {
                (0..nx).map(move |j| {
                    let ph = 2.0 * std::f64::consts::PI * (3.0 * j as f64 / nx as f64 + 2.0 * i as f64 / ny as f64);
                    C64::new(ph.cos(), ph.sin())
                })
            })
            .collect();
        fft.forward(&mut p);
        assert!((p[2 * nx + 3].norm() - (nx * ny) as f64).abs() < 1e-9);
        assert!(p.iter().enumerate().filter(|(k, _)| *k != 2 * nx + 3).all(|(_, z)| z.norm() < 1e-9));
    }

    #[test]
    fn frequency_layout() {
        assert_eq!(angular_frequency(0, 8, 1.0), 0.0);
        assert!(angular_frequency(3, 8, 1.0) > 0.0);
        assert!(angular_frequency(5, 8, 1.0) < 0.0);
    }
}
