use std::f64::consts::PI;

use super::{PrepSpec, SetupConfig};
use crate::error::{Error, Result};
use crate::linalg::{cis, C64};
use crate::modes::{GridSpec, SampledField};
use crate::synthesis::grating::{clip, disc_cells};
use crate::synthesis::{GratingBasis, GratingDesign};

/// Unimodular mask values on the transmitting pixels of a grid; zero elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMask {
    pub grid: GridSpec,
    pub cells: Vec<usize>,
    pub values: Vec<C64>,
}

impl SparseMask {
    fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            cells: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn to_field(&self) -> SampledField {
        let mut f = SampledField::zeros(self.grid);
        for (&c, v) in self.cells.iter().zip(&self.values) {
            f.data[c] = *v;
        }
        f
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn lens(k: f64, f: f64, d: [f64; 2]) -> C64 {
    cis(k * (d[0] * d[0] + d[1] * d[1]) / (2.0 * f))
}

/// Carrier and phase quantization shared by all SLMs.
fn displayed(config: &SetupConfig, x: f64, z: C64) -> C64 {
    let mut v = z;
    if config.use_blazed_carrier {
        v *= cis(config.carrier_frequency() * x);
    }
    if let Some(levels) = config.phase_levels {
        let step = 2.0 * PI / levels as f64;
        v = cis((v.arg() / step).round() * step);
    }
    v
}

fn check_layout(design: &GratingDesign, config: &SetupConfig) -> Result<()> {
    if design.layout != config.layout {
        return Err(Error::Dimension("design and setup use different mode layouts".into()));
    }
    config.validate()
}

pub(crate) fn slm0_sparse(prep: &PrepSpec, config: &SetupConfig) -> Result<SparseMask> {
    let layout = &config.layout;
    let n = layout.len();
    if prep.target_state.len() != n || prep.xi.len() != n {
        return Err(Error::Dimension(format!(
            "state of length {} with {} weights for {n} modes",
            prep.target_state.len(),
            prep.xi.len()
        )));
    }
    if prep.target_state.iter().all(|a| a.norm() == 0.0) {
        return Err(Error::ZeroState);
    }
    let grid = config.grid;
    let (cells, offsets) = disc_cells(&grid, [0.0, 0.0], config.slm0_aperture)?;
    let tilts: Vec<[f64; 2]> = prep.tilts(layout).iter().map(|t| [-t[0], -t[1]]).collect();
    let coeffs: Vec<C64> = prep.target_state.iter().zip(&prep.xi).map(|(a, x)| a * *x).collect();
    let basis = GratingBasis::new(&offsets, &tilts);
    let phase = clip(&basis.synthesize(&coeffs));
    let (k, f) = (config.wavenumber(), config.focal());
    let mut mask = SparseMask::new(grid);
    for ((c, d), p) in cells.into_iter().zip(offsets).zip(phase) {
        mask.cells.push(c);
        mask.values.push(displayed(config, d[0], p * lens(k, f, d)));
    }
    Ok(mask)
}

/// SLM0 phase: `exp{i arg Σ ξ_n a_n e^{−ik_n·r}}` times the launch lens on a central aperture.
pub fn slm0_mask(prep: &PrepSpec, config: &SetupConfig) -> Result<SampledField> {
    config.validate()?;
    Ok(slm0_sparse(prep, config)?.to_field())
}

pub(crate) fn slm1_sparse(design: &GratingDesign, config: &SetupConfig) -> Result<SparseMask> {
    check_layout(design, config)?;
    let layout = &config.layout;
    let n = layout.len();
    let (k, f) = (config.wavenumber(), config.focal());
    let terms = design.splitter_terms();
    let mut mask = SparseMask::new(config.grid);
    for col in 0..n {
        let center = layout.coord(col);
        let kn = layout.launch_tilt(col);
        let vectors: Vec<[f64; 2]> = (0..n)
            .map(|m| {
                let q = layout.k_mn(m, col);
                [q[0] + kn[0], q[1] + kn[1]]
            })
            .collect();
        let coeffs: Vec<C64> = (0..n)
            .map(|m| {
                let theta = if config.path_compensation {
                    k * layout.distance(m, col).powi(2) / (4.0 * f)
                } else {
                    0.0
                };
                terms[(m, col)] * cis(theta)
            })
            .collect();
        if coeffs.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::EmptyGrating { index: col });
        }
        let delta = if config.path_compensation {
            k * (center[0] * center[0] + center[1] * center[1]) / (4.0 * f)
        } else {
            0.0
        };
        let (cells, offsets) = disc_cells(&config.grid, center, layout.aperture_radius())?;
        let basis = GratingBasis::new(&offsets, &vectors);
        let phase = clip(&basis.synthesize(&coeffs));
        let d0 = cis(delta);
        for ((c, d), p) in cells.into_iter().zip(offsets).zip(phase) {
            mask.cells.push(c);
            mask.values.push(displayed(config, center[0] + d[0], p * d0 * lens(k, f, d)));
        }
    }
    Ok(mask)
}

/// SLM1 phase: per-aperture splitting gratings with retro-tilt, path
/// compensation θ_mn, δ_n and a local lens.
pub fn slm1_mask(design: &GratingDesign, config: &SetupConfig) -> Result<SampledField> {
    Ok(slm1_sparse(design, config)?.to_field())
}

pub(crate) fn slm2_sparse(design: &GratingDesign, config: &SetupConfig) -> Result<SparseMask> {
    check_layout(design, config)?;
    let layout = &config.layout;
    let n = layout.len();
    let (k, f) = (config.wavenumber(), config.focal());
    let terms = design.combiner_terms();
    let mut mask = SparseMask::new(config.grid);
    for row in 0..n {
        let center = layout.coord(row);
        let vectors: Vec<[f64; 2]> = (0..n)
            .map(|col| {
                let q = layout.k_mn(row, col);
                [-q[0], -q[1]]
            })
            .collect();
        let coeffs: Vec<C64> = terms.row(row).iter().copied().collect();
        if coeffs.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::EmptyGrating { index: row });
        }
        let (cells, offsets) = disc_cells(&config.grid, center, layout.aperture_radius())?;
        let basis = GratingBasis::new(&offsets, &vectors);
        let phase = clip(&basis.synthesize(&coeffs));
        for ((c, d), p) in cells.into_iter().zip(offsets).zip(phase) {
            let r = [center[0] + d[0], center[1] + d[1]];
            mask.cells.push(c);
            mask.values.push(displayed(config, r[0], p * lens(k, f, d) * lens(k, f, r)));
        }
    }
    Ok(mask)
}

/// SLM2 phase: per-aperture recombining gratings, local lenses and the global
/// lens that feeds the pinhole.
pub fn slm2_mask(design: &GratingDesign, config: &SetupConfig) -> Result<SampledField> {
    Ok(slm2_sparse(design, config)?.to_field())
}
