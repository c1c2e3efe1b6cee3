//! Scalar paraxial model of the two-SLM optical train.
//!
//! SLM0 prepares the input spots, a 2f relay carries them to SLM1 where each
//! aperture splits its spot, a second 2f relay recombines the beams on SLM2,
//! and a pinhole in the following Fourier plane keeps only the coherent sum.
//! Fields use the `exp(i(ωt − kz))` convention: free space multiplies the
//! spectrum by `exp(+iz κ²/2k)`, a lens by `exp(+ik|r − c|²/2f)`.

mod masks;
mod propagate;
mod simulator;

pub use masks::{slm0_mask, slm1_mask, slm2_mask, SparseMask};
pub use propagate::{fresnel_propagate, BandLimit, Propagator, MAX_ALIASED_POWER};
pub use simulator::{extract_transfer_matrix, refine_design, run_setup, RefineReport, Simulator, TracePlane};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::modes::{circle_layout, GridSpec, LayoutRecord, ModeLayout, StateVector};

/// Ring radius of the desk-scale layout.
pub const DESK_RADIUS: f64 = 2.5e-3;
/// Telecom wavelength used throughout.
pub const DESK_WAVELENGTH: f64 = 1.55e-6;
/// Largest neighbour spacing; keeps the clipped-grating side orders of small-N
/// layouts inside a 1024² window.
pub const DESK_MAX_CHORD: f64 = 1.5e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetupRecord", into = "SetupRecord")]
pub struct SetupConfig {
    pub layout: ModeLayout,
    pub grid: GridSpec,
    /// Blazed-carrier period in pixels.
    pub grating_period: f64,
    pub use_blazed_carrier: bool,
    /// SLM1 → SLM2 distance; `2f` for the confocal relay.
    pub slm_separation: f64,
    pub pinhole_radius: f64,
    /// Fraction of the incident power each SLM puts into the modulated beam.
    pub modulation_efficiency: f64,
    /// Radius of the SLM0 aperture around the optical axis.
    pub slm0_aperture: f64,
    /// Apply the θ_mn and δ_n path-length compensations on SLM1.
    pub path_compensation: bool,
    /// Quantize mask phases to this many levels (8-bit SLMs use 256).
    pub phase_levels: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SetupRecord {
    layout: LayoutRecord,
    grid: GridSpec,
    #[serde(default = "default_period")]
    grating_period: f64,
    #[serde(default)]
    use_blazed_carrier: bool,
    #[serde(default)]
    slm_separation: Option<f64>,
    #[serde(default)]
    pinhole_radius: Option<f64>,
    #[serde(default = "one")]
    modulation_efficiency: f64,
    #[serde(default)]
    slm0_aperture: Option<f64>,
    #[serde(default = "yes")]
    path_compensation: bool,
    #[serde(default)]
    phase_levels: Option<u32>,
}

fn default_period() -> f64 {
    4.0
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

impl TryFrom<SetupRecord> for SetupConfig {
    type Error = Error;

    fn try_from(r: SetupRecord) -> Result<Self> {
        let layout = ModeLayout::from_record(&r.layout)?;
        let mut c = SetupConfig::new(layout, r.grid);
        c.grating_period = r.grating_period;
        c.use_blazed_carrier = r.use_blazed_carrier;
        if let Some(s) = r.slm_separation {
            c.slm_separation = s;
        }
        if let Some(p) = r.pinhole_radius {
            c.pinhole_radius = p;
        }
        c.modulation_efficiency = r.modulation_efficiency;
        if let Some(a) = r.slm0_aperture {
            c.slm0_aperture = a;
        }
        c.path_compensation = r.path_compensation;
        c.phase_levels = r.phase_levels;
        c.validate()?;
        Ok(c)
    }
}

impl From<SetupConfig> for SetupRecord {
    fn from(c: SetupConfig) -> Self {
        SetupRecord {
            layout: c.layout.to_record(),
            grid: c.grid,
            grating_period: c.grating_period,
            use_blazed_carrier: c.use_blazed_carrier,
            slm_separation: Some(c.slm_separation),
            pinhole_radius: Some(c.pinhole_radius),
            modulation_efficiency: c.modulation_efficiency,
            slm0_aperture: Some(c.slm0_aperture),
            path_compensation: c.path_compensation,
            phase_levels: c.phase_levels,
        }
    }
}

/// Desk-scale ring for `n` modes.
///
/// The ring radius is 2.5 mm unless that makes neighbouring spots more than
/// [`DESK_MAX_CHORD`] apart, in which case the ring shrinks. The waist is a
/// fifth of the chord, the focal length confocal, and the aperture
/// 0.4·chord (= 2·w0).
pub fn desk_layout(n: usize) -> Result<ModeLayout> {
    if n == 0 {
        return Err(Error::Layout("N must be at least 1".into()));
    }
    let (radius, chord) = if n == 1 {
        (0.5 * DESK_MAX_CHORD, DESK_MAX_CHORD)
    } else {
        let s = (PI / n as f64).sin();
        let radius = DESK_RADIUS.min(0.5 * DESK_MAX_CHORD / s);
        (radius, 2.0 * radius * s)
    };
    let waist = chord / 5.0;
    // f = z_R/2 images a waist-w0 spot onto a waist-w0 spot through a 2f relay
    let focal = PI * waist * waist / (2.0 * DESK_WAVELENGTH);
    circle_layout(n, radius, waist, focal, DESK_WAVELENGTH)?.with_aperture_radius(0.4 * chord)
}

impl SetupConfig {
    /// Confocal defaults for a layout: separation 2f, pinhole equal to the
    /// grating aperture, SLM0 aperture three waists, ideal modulation.
    pub fn new(layout: ModeLayout, grid: GridSpec) -> Self {
        Self {
            grid,
            grating_period: default_period(),
            use_blazed_carrier: false,
            slm_separation: 2.0 * layout.focal(),
            pinhole_radius: layout.aperture_radius(),
            modulation_efficiency: 1.0,
            slm0_aperture: 3.0 * layout.waist(),
            path_compensation: true,
            phase_levels: None,
            layout,
        }
    }

    /// Ring of radius 2.5 mm on a 1024² grid of 8 µm pixels.
    pub fn desk_scale(n: usize) -> Result<Self> {
        let c = Self::new(desk_layout(n)?, GridSpec::desk_scale());
        c.validate()?;
        Ok(c)
    }

    pub fn focal(&self) -> f64 {
        self.layout.focal()
    }

    pub fn wavenumber(&self) -> f64 {
        self.layout.wavenumber()
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// Carrier spatial frequency in rad/m.
    pub fn carrier_frequency(&self) -> f64 {
        2.0 * PI / (self.grating_period * self.grid.pitch)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("slm_separation", self.slm_separation),
            ("pinhole_radius", self.pinhole_radius),
            ("slm0_aperture", self.slm0_aperture),
            ("grid pitch", self.grid.pitch),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.modulation_efficiency > 0.0 && self.modulation_efficiency <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "modulation_efficiency must lie in (0, 1], got {}",
                self.modulation_efficiency
            )));
        }
        if self.grating_period < 2.0 {
            return Err(Error::InvalidArgument(format!(
                "grating period of {} px is below the 2 px Nyquist limit",
                self.grating_period
            )));
        }
        if self.phase_levels == Some(0) || self.phase_levels == Some(1) {
            return Err(Error::InvalidArgument("phase quantization needs at least 2 levels".into()));
        }
        let a = self.layout.aperture_radius();
        for c in self.layout.coords() {
            if !self.grid.contains_disc(*c, a) {
                return Err(Error::ApertureOutsideGrid { x: c[0], y: c[1] });
            }
        }
        for r in [self.slm0_aperture, self.pinhole_radius] {
            if !self.grid.contains_disc([0.0, 0.0], r) {
                return Err(Error::ApertureOutsideGrid { x: 0.0, y: 0.0 });
            }
        }
        if self.layout.waist() / self.grid.pitch < crate::modes::MIN_SAMPLES_PER_WAIST {
            return Err(Error::Undersampled(format!(
                "waist {:.3e} m is under {} pixels",
                self.layout.waist(),
                crate::modes::MIN_SAMPLES_PER_WAIST
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Input state and SLM0 weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PrepSpec {
    pub target_state: StateVector,
    /// Real weights ξ_n equalizing the spots launched by SLM0.
    pub xi: Vec<f64>,
}

impl PrepSpec {
    pub fn new(state: StateVector) -> Self {
        let n = state.len();
        Self {
            target_state: state,
            xi: vec![1.0; n],
        }
    }

    pub fn basis(n: usize, dim: usize) -> Self {
        let mut s = StateVector::zeros(dim);
        s[n] = C64::new(1.0, 0.0);
        Self::new(s)
    }

    pub fn with_xi(mut self, xi: Vec<f64>) -> Self {
        self.xi = xi;
        self
    }

    /// Launch tilts k_n = k R_n / 2f.
    pub fn tilts(&self, layout: &ModeLayout) -> Vec<[f64; 2]> {
        (0..layout.len()).map(|n| layout.launch_tilt(n)).collect()
    }
}
