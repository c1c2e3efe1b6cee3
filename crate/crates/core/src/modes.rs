//! Discrete spatial-mode basis: Gaussian spots at arbitrary transverse positions.
//!
//! A [`ModeLayout`] fixes the spot centres `R_n`, the waist `w0` and the optics
//! (focal length, wavelength) that turn centre offsets into grating wave vectors.
//! Fields live on a [`GridSpec`], a uniform row-major grid whose sample `(i, j)`
//! sits at `origin + ((j - nx/2)·pitch, (i - ny/2)·pitch)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

/// Largest analytic overlap tolerated between two distinct modes.
pub const MAX_MODE_OVERLAP: f64 = 1e-4;
/// Power a mode may lose to the grid edge before it is rejected.
pub const MAX_LEAKAGE: f64 = 1e-6;
/// Minimum samples per waist.
pub const MIN_SAMPLES_PER_WAIST: f64 = 4.0;

pub type StateVector = CVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub pitch: f64,
    #[serde(default)]
    pub origin: [f64; 2],
}

impl GridSpec {
    pub fn square(n: usize, pitch: f64) -> Self {
        Self {
            nx: n,
            ny: n,
            pitch,
            origin: [0.0, 0.0],
        }
    }

    /// 1024 x 1024 at the 8 µm SLM pixel pitch.
    pub fn desk_scale() -> Self {
        Self::square(1024, 8e-6)
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        self
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.origin[0] + (j as f64 - (self.nx / 2) as f64) * self.pitch
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.origin[1] + (i as f64 - (self.ny / 2) as f64) * self.pitch
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    /// Physical half-extent of the sampled window along x and y.
    pub fn half_extent(&self) -> [f64; 2] {
        [
            0.5 * self.nx as f64 * self.pitch,
            0.5 * self.ny as f64 * self.pitch,
        ]
    }

    /// Fractional (column, row) index of a physical point.
    pub fn fractional_index(&self, p: [f64; 2]) -> (f64, f64) {
        (
            (p[0] - self.origin[0]) / self.pitch + (self.nx / 2) as f64,
            (p[1] - self.origin[1]) / self.pitch + (self.ny / 2) as f64,
        )
    }

    /// True when every sample within `radius` of `center` lies inside the grid.
    pub fn contains_disc(&self, center: [f64; 2], radius: f64) -> bool {
        let (cj, ci) = self.fractional_index(center);
        let r = radius / self.pitch;
        cj - r >= 0.0 && ci - r >= 0.0 && cj + r <= (self.nx - 1) as f64 && ci + r <= (self.ny - 1) as f64
    }
}

/// Complex amplitude sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub grid: GridSpec,
    pub data: Vec<C64>,
}

impl SampledField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> C64) -> Self {
        let xs = grid.xs();
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.ny {
            let y = grid.y(i);
            data.extend(xs.iter().map(|&x| f(x, y)));
        }
        Self { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.grid.nx + j]
    }

    /// Σ|u|²·pitch².
    pub fn power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.pitch * self.grid.pitch
    }

    /// Discrete inner product ⟨self|other⟩ including the area element.
    pub fn inner(&self, other: &SampledField) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        let s: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.pitch * self.grid.pitch)
    }

    pub fn scale(&mut self, c: C64) {
        self.data.iter_mut().for_each(|z| *z *= c);
    }

    /// Point-wise product with another field on the same grid.
    pub fn multiply(&mut self, other: &SampledField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a *= b);
        Ok(())
    }
}

/// Spot centres, waist and optics defining the encoding basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeLayout {
    coords: Vec<[f64; 2]>,
    waist: f64,
    focal: f64,
    wavelength: f64,
    aperture_radius: f64,
}

/// Serialized form of a layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub radius_m: f64,
    pub waist_m: f64,
    pub focal_m: f64,
    pub wavelength_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_m: Option<f64>,
    pub coords: Vec<[f64; 2]>,
}

impl ModeLayout {
    /// Validates separation, orthogonality and aperture constraints.
    ///
    /// `aperture_radius` defaults to 0.4 of the smallest spot separation, or to
    /// four waists for a single mode.
    pub fn new(
        coords: Vec<[f64; 2]>,
        waist: f64,
        focal: f64,
        wavelength: f64,
        aperture_radius: Option<f64>,
    ) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Layout("at least one mode is required".into()));
        }
        for (name, v) in [("waist", waist), ("focal", focal), ("wavelength", wavelength)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Layout(format!("{name} must be positive, got {v}")));
            }
        }
        let mut layout = Self {
            coords,
            waist,
            focal,
            wavelength,
            aperture_radius: 0.0,
        };
        let sep = layout.min_separation();
        if layout.len() > 1 {
            if sep <= 0.0 {
                return Err(Error::Layout("two modes share a centre".into()));
            }
            let overlap = layout.max_overlap();
            if overlap >= MAX_MODE_OVERLAP {
                return Err(Error::Layout(format!(
                    "waist {waist:.3e} m too large for spot separation {sep:.3e} m (overlap {overlap:.2e})"
                )));
            }
        }
        let radius = aperture_radius.unwrap_or(if layout.len() > 1 { 0.4 * sep } else { 4.0 * waist });
        layout.set_aperture(radius)?;
        Ok(layout)
    }

    pub fn with_aperture_radius(mut self, radius: f64) -> Result<Self> {
        self.set_aperture(radius)?;
        Ok(self)
    }

    fn set_aperture(&mut self, radius: f64) -> Result<()> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Layout(format!("aperture radius must be positive, got {radius}")));
        }
        if self.len() > 1 && radius >= 0.5 * self.min_separation() {
            return Err(Error::OverlappingApertures {
                radius,
                separation: self.min_separation(),
            });
        }
        self.aperture_radius = radius;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn coord(&self, n: usize) -> [f64; 2] {
        self.coords[n]
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn aperture_radius(&self) -> f64 {
        self.aperture_radius
    }

    pub fn distance(&self, m: usize, n: usize) -> f64 {
        let (a, b) = (self.coords[m], self.coords[n]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }

    /// Smallest centre-to-centre distance (0 for a single mode).
    pub fn min_separation(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        self.pairs().map(|(i, j)| self.distance(i, j)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_pairwise_distance(&self) -> f64 {
        self.pairs().map(|(i, j)| self.distance(i, j)).fold(0.0, f64::max)
    }

    pub fn mean_pairwise_distance(&self) -> f64 {
        let (sum, count) = self
            .pairs()
            .fold((0.0, 0usize), |(s, c), (i, j)| (s + self.distance(i, j), c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Continuous overlap |⟨φ_m|φ_n⟩| = exp(-d²/(2 w0²)).
    pub fn analytic_overlap(&self, m: usize, n: usize) -> f64 {
        let d = self.distance(m, n);
        (-d * d / (2.0 * self.waist * self.waist)).exp()
    }

    pub fn max_overlap(&self) -> f64 {
        self.pairs().map(|(i, j)| self.analytic_overlap(i, j)).fold(0.0, f64::max)
    }

    /// Grating wave vector k_mn = k (R_n − R_m) / 2f coupling input n to output m.
    pub fn k_mn(&self, m: usize, n: usize) -> [f64; 2] {
        let s = self.wavenumber() / (2.0 * self.focal);
        let (rm, rn) = (self.coords[m], self.coords[n]);
        [s * (rn[0] - rm[0]), s * (rn[1] - rm[1])]
    }

    /// Launch tilt k_n = k R_n / 2f.
    pub fn launch_tilt(&self, n: usize) -> [f64; 2] {
        let s = self.wavenumber() / (2.0 * self.focal);
        [s * self.coords[n][0], s * self.coords[n][1]]
    }

    pub fn to_record(&self) -> LayoutRecord {
        LayoutRecord {
            n: self.len(),
            radius_m: self.coords.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max),
            waist_m: self.waist,
            focal_m: self.focal,
            wavelength_m: self.wavelength,
            aperture_m: Some(self.aperture_radius),
            coords: self.coords.clone(),
        }
    }

    pub fn from_record(rec: &LayoutRecord) -> Result<Self> {
        if rec.coords.len() != rec.n {
            return Err(Error::Layout(format!(
                "record declares N = {} but lists {} coordinates",
                rec.n,
                rec.coords.len()
            )));
        }
        Self::new(
            rec.coords.clone(),
            rec.waist_m,
            rec.focal_m,
            rec.wavelength_m,
            rec.aperture_m,
        )
    }
}

/// N spots equally spaced on a circle, `R_n = radius·(cos 2πn/N, sin 2πn/N)`.
pub fn circle_layout(n: usize, radius: f64, waist: f64, focal: f64, wavelength: f64) -> Result<ModeLayout> {
    if n == 0 {
        return Err(Error::Layout("N must be at least 1".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Layout(format!("radius must be positive, got {radius}")));
    }
    let coords = (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    ModeLayout::new(coords, waist, focal, wavelength, None)
}

/// Separable samples of `exp(-|r - c|²/w² + i·chirp·|r - c|²)` along both axes.
pub(crate) fn gaussian_axes(grid: &GridSpec, center: [f64; 2], waist: f64, chirp: f64) -> (Vec<C64>, Vec<C64>) {
    let axis = |coords: Vec<f64>, c: f64| -> Vec<C64> {
        coords
            .into_iter()
            .map(|x| {
                let d2 = (x - c) * (x - c);
                let amp = (-d2 / (waist * waist)).exp();
                if amp < 1e-30 {
                    C64::new(0.0, 0.0)
                } else {
                    crate::linalg::cis(chirp * d2) * amp
                }
            })
            .collect()
    };
    (axis(grid.xs(), center[0]), axis(grid.ys(), center[1]))
}

/// Normalized Gaussian `exp(-|r-c|²/w²)·exp(i·chirp·|r-c|²)` on `grid`.
///
/// Fails if the grid undersamples the waist or truncates more than
/// [`MAX_LEAKAGE`] of the power.
pub(crate) fn gaussian_field(grid: &GridSpec, center: [f64; 2], waist: f64, chirp: f64, index: usize) -> Result<SampledField> {
    if waist / grid.pitch < MIN_SAMPLES_PER_WAIST {
        return Err(Error::Undersampled(format!(
            "waist {waist:.3e} m spans {:.2} samples, need at least {MIN_SAMPLES_PER_WAIST}",
            waist / grid.pitch
        )));
    }
    let (gx, gy) = gaussian_axes(grid, center, waist, chirp);
    let sx: f64 = gx.iter().map(|z| z.norm_sqr()).sum();
    let sy: f64 = gy.iter().map(|z| z.norm_sqr()).sum();
    let discrete = sx * sy * grid.pitch * grid.pitch;
    let continuous = PI * waist * waist / 2.0;
    let leak = 1.0 - discrete / continuous;
    if leak > MAX_LEAKAGE {
        return Err(Error::GridTooSmall { index, leak });
    }
    let norm = 1.0 / discrete.sqrt();
    let mut data = Vec::with_capacity(grid.len());
    for y in &gy {
        data.extend(gx.iter().map(|x| x * y * norm));
    }
    Ok(SampledField { grid: *grid, data })
}

/// Unit-norm sampled Gaussian for mode `n` (0-based).
pub fn mode_field(layout: &ModeLayout, n: usize, grid: &GridSpec) -> Result<SampledField> {
    if n >= layout.len() {
        return Err(Error::InvalidArgument(format!("mode index {n} out of range 0..{}", layout.len())));
    }
    gaussian_field(grid, layout.coord(n), layout.waist(), 0.0, n)
}

/// Field Σ a_n φ_n encoding a state vector.
pub fn encode(state: &StateVector, layout: &ModeLayout, grid: &GridSpec) -> Result<SampledField> {
    if state.len() != layout.len() {
        return Err(Error::Dimension(format!(
            "state has {} amplitudes, layout has {} modes",
            state.len(),
            layout.len()
        )));
    }
    let mut out = SampledField::zeros(*grid);
    for (n, a) in state.iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        let phi = mode_field(layout, n, grid)?;
        out.data.iter_mut().zip(&phi.data).for_each(|(o, p)| *o += a * p);
    }
    Ok(out)
}

/// Amplitudes a_n = ⟨φ_n|field⟩.
pub fn project_onto_modes(field: &SampledField, layout: &ModeLayout) -> Result<StateVector> {
    let grid = field.grid;
    let mut out = StateVector::zeros(layout.len());
    for n in 0..layout.len() {
        let phi = mode_field(layout, n, &grid)?;
        out[n] = phi.inner(field)?;
    }
    Ok(out)
}
