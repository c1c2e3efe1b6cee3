//! File formats: complex arrays as JSON re/im pairs, CSV tables and 8-bit
//! phase/intensity images.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::modes::{GridSpec, SampledField};

/// Row-major complex array stored as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexArray {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl ComplexArray {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn from_vector(v: &CVector) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.rows * self.cols != self.data.len() {
            return Err(Error::Dimension(format!(
                "array declares {}x{} but holds {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.check()?;
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            C64::new(re, im)
        }))
    }

    pub fn to_vector(&self) -> Result<CVector> {
        self.check()?;
        Ok(CVector::from_iterator(self.data.len(), self.data.iter().map(|[re, im]| C64::new(*re, *im))))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Write a CSV table with a header row.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

/// 8-bit gray level of a phase: 0 ↔ 0 rad, 256 levels per 2π, wrapping.
pub fn phase_to_level(phase: f64) -> u8 {
    let t = phase.rem_euclid(2.0 * PI) / (2.0 * PI);
    ((t * 256.0).round() as u32 % 256) as u8
}

pub fn level_to_phase(level: u8) -> f64 {
    2.0 * PI * level as f64 / 256.0
}

/// Save the phase of a mask as an 8-bit image (PGM or PNG by extension).
/// Opaque pixels (zero amplitude) are written as level 0.
pub fn write_phase_image(path: &Path, field: &SampledField) -> Result<()> {
    let g = field.grid;
    let pixels: Vec<u8> = field
        .data
        .iter()
        .map(|z| if z.norm() == 0.0 { 0 } else { phase_to_level(z.arg()) })
        .collect();
    save_gray(path, g, pixels)
}

/// Read an 8-bit phase image back as a unimodular field on `grid`.
pub fn read_phase_image(path: &Path, grid: GridSpec) -> Result<SampledField> {
    let img = image::open(path)?.to_luma8();
    if img.width() as usize != grid.nx || img.height() as usize != grid.ny {
        return Err(Error::Dimension(format!(
            "image is {}x{}, grid is {}x{}",
            img.width(),
            img.height(),
            grid.nx,
            grid.ny
        )));
    }
    let data = img.pixels().map(|p| crate::linalg::cis(level_to_phase(p.0[0]))).collect();
    Ok(SampledField { grid, data })
}

/// Linear-scaled intensity image; returns the intensity mapped to level 255.
pub fn write_intensity_image(path: &Path, field: &SampledField) -> Result<f64> {
    let peak = field.data.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let pixels = field.data.iter().map(|z| (z.norm_sqr() * scale).round() as u8).collect();
    save_gray(path, field.grid, pixels)?;
    Ok(peak)
}

fn save_gray(path: &Path, g: GridSpec, pixels: Vec<u8>) -> Result<()> {
    ensure_parent(path)?;
    let img = image::GrayImage::from_raw(g.nx as u32, g.ny as u32, pixels)
        .ok_or_else(|| Error::Dimension("pixel buffer does not match the grid".into()))?;
    img.save(path)?;
    Ok(())
}
