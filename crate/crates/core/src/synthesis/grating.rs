use serde::{Deserialize, Serialize};

use super::GratingDesign;
use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, C64};
use crate::modes::{GridSpec, ModeLayout, SampledField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Column gratings on SLM1 realizing `A`.
    Splitter,
    /// Row gratings on SLM2 realizing `B`.
    Combiner,
}

/// Flat indices and centre offsets of the samples of `grid` inside a disc.
pub(crate) fn disc_cells(grid: &GridSpec, center: [f64; 2], radius: f64) -> Result<(Vec<usize>, Vec<[f64; 2]>)> {
    if !grid.contains_disc(center, radius) {
        return Err(Error::ApertureOutsideGrid {
            x: center[0],
            y: center[1],
        });
    }
    let (cj, ci) = grid.fractional_index(center);
    let r = radius / grid.pitch;
    let (i0, i1) = ((ci - r).floor().max(0.0) as usize, ((ci + r).ceil() as usize).min(grid.ny - 1));
    let (j0, j1) = ((cj - r).floor().max(0.0) as usize, ((cj + r).ceil() as usize).min(grid.nx - 1));
    let r2 = radius * radius;
    let mut cells = Vec::new();
    let mut offsets = Vec::new();
    for i in i0..=i1 {
        let dy = grid.y(i) - center[1];
        for j in j0..=j1 {
            let dx = grid.x(j) - center[0];
            if dx * dx + dy * dy < r2 {
                cells.push(i * grid.nx + j);
                offsets.push([dx, dy]);
            }
        }
    }
    Ok((cells, offsets))
}

/// A circular aperture sampled on the pixel lattice of a reference grid.
///
/// `patch` is the smallest lattice-aligned square window holding the disc;
/// `cells` index into it.
#[derive(Clone, Debug)]
pub struct Aperture {
    pub center: [f64; 2],
    pub radius: f64,
    pub patch: GridSpec,
    pub cells: Vec<usize>,
    pub offsets: Vec<[f64; 2]>,
}

impl Aperture {
    pub fn on_lattice(center: [f64; 2], radius: f64, lattice: &GridSpec) -> Self {
        let (cj, ci) = lattice.fractional_index(center);
        let h = (radius / lattice.pitch).ceil() as usize + 1;
        let snap = |c: f64, o: f64, n: usize| o + (c.round() - (n / 2) as f64) * lattice.pitch;
        let patch = GridSpec {
            nx: 2 * h + 1,
            ny: 2 * h + 1,
            pitch: lattice.pitch,
            origin: [
                snap(cj, lattice.origin[0], lattice.nx),
                snap(ci, lattice.origin[1], lattice.ny),
            ],
        };
        let (cells, offsets) = disc_cells(&patch, center, radius).expect("patch always contains its disc");
        Self {
            center,
            radius,
            patch,
            cells,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Scatter per-cell values into a zero patch field.
    pub fn to_field(&self, values: &[C64]) -> SampledField {
        let mut f = SampledField::zeros(self.patch);
        for (&c, v) in self.cells.iter().zip(values) {
            f.data[c] = *v;
        }
        f
    }
}

/// Plane waves `exp(i q_t·(r − c))` tabulated on the cells of one aperture.
#[derive(Clone, Debug)]
pub struct GratingBasis {
    waves: Vec<C64>,
    terms: usize,
    pixels: usize,
}

impl GratingBasis {
    pub fn new(offsets: &[[f64; 2]], vectors: &[[f64; 2]]) -> Self {
        let terms = vectors.len();
        let mut waves = Vec::with_capacity(offsets.len() * terms);
        for d in offsets {
            waves.extend(vectors.iter().map(|q| cis(q[0] * d[0] + q[1] * d[1])));
        }
        Self {
            waves,
            terms,
            pixels: offsets.len(),
        }
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    #[inline]
    pub fn row(&self, p: usize) -> &[C64] {
        &self.waves[p * self.terms..(p + 1) * self.terms]
    }

    /// S(r) = Σ_t c_t exp(i q_t·r).
    pub fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        (0..self.pixels)
            .map(|p| self.row(p).iter().zip(coeffs).map(|(w, c)| w * c).sum())
            .collect()
    }

    /// Riemann-sum Fourier coefficients (1/P) Σ_r h(r) exp(−i q_t·r).
    pub fn project(&self, h: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.terms];
        for (p, hv) in h.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.row(p)) {
                *o += hv * w.conj();
            }
        }
        let s = 1.0 / self.pixels.max(1) as f64;
        out.iter_mut().for_each(|z| *z *= s);
        out
    }
}

/// Unit-modulus clip `S/|S|`; zeros map to 1.
pub(crate) fn clip(s: &[C64]) -> Vec<C64> {
    s.iter()
        .map(|z| {
            let n = z.norm();
            if n > 0.0 {
                z / n
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect()
}

/// Wave vectors of grating `index`: `k_mn` over m for splitter n, `−k_mn` over n for combiner m.
pub(crate) fn grating_vectors(layout: &ModeLayout, side: Side, index: usize) -> Vec<[f64; 2]> {
    (0..layout.len())
        .map(|t| match side {
            Side::Splitter => layout.k_mn(t, index),
            Side::Combiner => {
                let k = layout.k_mn(index, t);
                [-k[0], -k[1]]
            }
        })
        .collect()
}

/// Weighted coefficients entering grating `index`.
pub(crate) fn grating_coefficients(design: &GratingDesign, side: Side, index: usize) -> Vec<C64> {
    match side {
        Side::Splitter => design.splitter_terms().column(index).iter().copied().collect(),
        Side::Combiner => design.combiner_terms().row(index).iter().copied().collect(),
    }
}

fn check_index(design: &GratingDesign, index: usize) -> Result<()> {
    if index >= design.dim() {
        return Err(Error::InvalidArgument(format!(
            "grating index {index} out of range 0..{}",
            design.dim()
        )));
    }
    Ok(())
}

/// Unclipped splitting grating `G_1n(r) = Σ_m A_mn exp[i k_mn·(r − R_n)]` on its aperture.
pub fn ideal_splitting_grating(design: &GratingDesign, n: usize, grid: &GridSpec) -> Result<SampledField> {
    check_index(design, n)?;
    let layout = &design.layout;
    let ap = Aperture::on_lattice(layout.coord(n), layout.aperture_radius(), grid);
    let basis = GratingBasis::new(&ap.offsets, &grating_vectors(layout, Side::Splitter, n));
    let coeffs: Vec<C64> = design.a.column(n).iter().copied().collect();
    Ok(ap.to_field(&basis.synthesize(&coeffs)))
}

/// Phase-only grating `exp{i arg Σ μ A exp[i k·(r − R)]}` (or its combiner analogue) on its aperture.
pub fn phase_only_grating(design: &GratingDesign, side: Side, index: usize, grid: &GridSpec) -> Result<SampledField> {
    check_index(design, index)?;
    let coeffs = grating_coefficients(design, side, index);
    if coeffs.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::EmptyGrating { index });
    }
    let layout = &design.layout;
    let ap = Aperture::on_lattice(layout.coord(index), layout.aperture_radius(), grid);
    let basis = GratingBasis::new(&ap.offsets, &grating_vectors(layout, side, index));
    Ok(ap.to_field(&clip(&basis.synthesize(&coeffs))))
}

/// Fourier coefficients of a set of gratings, one per column (splitter) or row (combiner).
pub fn extract_matrix(gratings: &[SampledField], side: Side, layout: &ModeLayout) -> Result<CMatrix> {
    let n = layout.len();
    if gratings.len() != n {
        return Err(Error::Dimension(format!("{} gratings for {n} modes", gratings.len())));
    }
    let mut out = CMatrix::zeros(n, n);
    for (idx, g) in gratings.iter().enumerate() {
        let (cells, offsets) = disc_cells(&g.grid, layout.coord(idx), layout.aperture_radius())?;
        let basis = GratingBasis::new(&offsets, &grating_vectors(layout, side, idx));
        let h: Vec<C64> = cells.iter().map(|&c| g.data[c]).collect();
        for (t, c) in basis.project(&h).into_iter().enumerate() {
            match side {
                Side::Splitter => out[(t, idx)] = c,
                Side::Combiner => out[(idx, t)] = c,
            }
        }
    }
    Ok(out)
}
