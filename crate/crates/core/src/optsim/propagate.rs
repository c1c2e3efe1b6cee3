use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft2::{angular_frequency, Fft2};
use crate::linalg::{cis, C64};
use crate::modes::{GridSpec, SampledField};

/// Spectral power allowed to walk farther than one window width.
pub const MAX_ALIASED_POWER: f64 = 1e-3;

/// What to do with spectral components that walk farther than the window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BandLimit {
    /// Fail with [`Error::Aliasing`] above this fraction of the power.
    Reject(f64),
    /// Remove them: they end up outside the simulated aperture whatever their
    /// starting point, so they are lost light, not light that may wrap back.
    Absorb,
    Ignore,
}

/// Paraxial (Fresnel) transfer-function propagator for one grid.
///
/// The kernel `exp(+i z (κx² + κy²)/(2k))` is separable, so nothing but the
/// FFT plans is cached.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: GridSpec,
    wavelength: f64,
    fft: Fft2,
    kx: Vec<f64>,
    ky: Vec<f64>,
    band: BandLimit,
}

impl Propagator {
    pub fn new(grid: GridSpec, wavelength: f64) -> Self {
        Self {
            grid,
            wavelength,
            fft: Fft2::new(grid.nx, grid.ny),
            kx: (0..grid.nx).map(|j| angular_frequency(j, grid.nx, grid.pitch)).collect(),
            ky: (0..grid.ny).map(|i| angular_frequency(i, grid.ny, grid.pitch)).collect(),
            band: BandLimit::Reject(MAX_ALIASED_POWER),
        }
    }

    pub fn with_band_limit(mut self, band: BandLimit) -> Self {
        self.band = band;
        self
    }

    pub fn band_limit(&self) -> BandLimit {
        self.band
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn angular_frequencies(&self) -> (&[f64], &[f64]) {
        (&self.kx, &self.ky)
    }

    /// Pitch at which the transfer function is critically sampled for `distance`.
    pub fn required_pitch(&self, distance: f64) -> f64 {
        (self.wavelength * distance.abs() / self.grid.nx.max(self.grid.ny) as f64).sqrt()
    }

    /// Advance `data` (row-major on this grid) by `distance` metres in place.
    pub fn propagate_in_place(&self, data: &mut [C64], distance: f64) -> Result<()> {
        if distance == 0.0 {
            return Ok(());
        }
        self.fft.forward(data);
        if let BandLimit::Reject(max) = self.band {
            self.check_band(data, distance, max)?;
        }
        let k = 2.0 * PI / self.wavelength;
        let a = distance / (2.0 * k);
        let hx: Vec<C64> = self.kx.iter().map(|q| cis(a * q * q)).collect();
        let hy: Vec<C64> = self.ky.iter().map(|q| cis(a * q * q)).collect();
        let limit2 = self.walk_limit(distance).powi(2);
        let absorb = self.band == BandLimit::Absorb;
        for (row, (y, qy)) in data.chunks_exact_mut(self.grid.nx).zip(hy.iter().zip(&self.ky)) {
            for (z, (x, qx)) in row.iter_mut().zip(hx.iter().zip(&self.kx)) {
                if absorb && qx * qx + qy * qy > limit2 {
                    *z = C64::new(0.0, 0.0);
                } else {
                    *z *= x * y;
                }
            }
        }
        self.fft.inverse(data);
        Ok(())
    }

    /// Spatial frequency whose lateral walk over `distance` equals the window width.
    pub fn walk_limit(&self, distance: f64) -> f64 {
        let k = 2.0 * PI / self.wavelength;
        let width = (self.grid.nx.min(self.grid.ny)) as f64 * self.grid.pitch;
        k * width / distance.abs()
    }

    fn check_band(&self, spectrum: &[C64], distance: f64, max: f64) -> Result<()> {
        let limit2 = self.walk_limit(distance).powi(2);
        let (mut total, mut outside) = (0.0, 0.0);
        for (row, ky) in spectrum.chunks_exact(self.grid.nx).zip(&self.ky) {
            for (z, kx) in row.iter().zip(&self.kx) {
                let p = z.norm_sqr();
                total += p;
                if kx * kx + ky * ky > limit2 {
                    outside += p;
                }
            }
        }
        if total > 0.0 && outside / total > max {
            return Err(Error::Aliasing {
                distance,
                fraction: outside / total,
                required_pitch: self.required_pitch(distance),
            });
        }
        Ok(())
    }

    pub fn propagate(&self, field: &SampledField, distance: f64) -> Result<SampledField> {
        if field.grid != self.grid {
            return Err(Error::Dimension("field grid differs from the propagator grid".into()));
        }
        let mut out = field.clone();
        self.propagate_in_place(&mut out.data, distance)?;
        Ok(out)
    }
}

/// Paraxial free-space propagation of `field` over `distance`.
///
/// Total power is conserved to rounding. Fails with [`Error::Aliasing`] when
/// more than [`MAX_ALIASED_POWER`] of the spectrum would shift by more than a
/// window width.
pub fn fresnel_propagate(field: &SampledField, distance: f64, wavelength: f64) -> Result<SampledField> {
    Propagator::new(field.grid, wavelength).propagate(field, distance)
}
