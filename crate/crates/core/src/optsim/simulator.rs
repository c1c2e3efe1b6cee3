use std::f64::consts::PI;
use std::sync::OnceLock;

use super::masks::{slm0_sparse, slm1_sparse, slm2_sparse, SparseMask};
use super::{BandLimit, PrepSpec, Propagator, SetupConfig};
use crate::error::{Error, Result};
use crate::linalg::{cis, frobenius_inner, frobenius_norm_sqr, CMatrix, C64};
use crate::modes::{gaussian_axes, gaussian_field, SampledField, StateVector};
use crate::synthesis::grating::disc_cells;
use crate::synthesis::{decompose_with, matrix_fidelity, Decomposition, GratingDesign};

/// A named intermediate field, recorded on request.
#[derive(Clone, Debug)]
pub struct TracePlane {
    pub name: &'static str,
    pub field: SampledField,
}

/// Per-design-independent data for fast transfer-matrix extraction.
struct Probe {
    slm1_cells: Vec<usize>,
    slm2_cells: Vec<usize>,
    /// Field reaching SLM1 for each basis input, on the SLM1 apertures.
    inputs: Vec<Vec<C64>>,
    /// Back-propagated detection modes on the SLM2 apertures, conjugated and
    /// scaled by the area element.
    outputs: Vec<Vec<C64>>,
}

/// Reusable simulator for one setup.
pub struct Simulator {
    config: SetupConfig,
    prop: Propagator,
    back: Propagator,
    source: Vec<C64>,
    detectors: Vec<(Vec<C64>, Vec<C64>)>,
    pinhole: Vec<usize>,
    probe: OnceLock<Probe>,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Simulator {
    pub fn new(config: SetupConfig) -> Result<Self> {
        config.validate()?;
        check_bandwidth(&config)?;
        let grid = config.grid;
        let layout = &config.layout;
        let (k, f, w) = (config.wavenumber(), config.focal(), layout.waist());
        let source = gaussian_field(&grid, [0.0, 0.0], w, -k / (4.0 * f), 0)?.data;
        let mut detectors = Vec::with_capacity(layout.len());
        for m in 0..layout.len() {
            let c = layout.coord(m);
            // the output relay images SLM2 with inversion
            gaussian_field(&grid, [-c[0], -c[1]], w, 0.0, m)?;
            let (mut gx, gy) = gaussian_axes(&grid, [-c[0], -c[1]], w, k / (4.0 * f));
            let sx: f64 = gx.iter().map(|z| z.norm_sqr()).sum();
            let sy: f64 = gy.iter().map(|z| z.norm_sqr()).sum();
            let norm = 1.0 / (sx * sy * grid.pitch * grid.pitch).sqrt();
            gx.iter_mut().for_each(|z| *z *= norm);
            detectors.push((gx, gy));
        }
        let (pinhole, _) = disc_cells(&grid, [0.0, 0.0], config.pinhole_radius)?;
        Ok(Self {
            prop: Propagator::new(grid, layout.wavelength()).with_band_limit(BandLimit::Absorb),
            back: Propagator::new(grid, layout.wavelength()).with_band_limit(BandLimit::Absorb),
            source,
            detectors,
            pinhole,
            probe: OnceLock::new(),
            config,
        })
    }

    pub fn config(&self) -> &SetupConfig {
        &self.config
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    /// Unit-power illumination of SLM0.
    pub fn source_field(&self) -> SampledField {
        SampledField {
            grid: self.config.grid,
            data: self.source.clone(),
        }
    }

    fn field(&self, data: Vec<C64>) -> SampledField {
        SampledField {
            grid: self.config.grid,
            data,
        }
    }

    /// Multiply by an SLM mask, including efficiency loss and first-order selection.
    fn apply_slm(&self, data: &mut Vec<C64>, mask: &SparseMask) {
        let eta = self.config.modulation_efficiency;
        let mut out = if self.config.use_blazed_carrier {
            let leak = (1.0 - eta).sqrt();
            data.iter().map(|z| z * leak).collect()
        } else {
            vec![C64::new(0.0, 0.0); data.len()]
        };
        let s = eta.sqrt();
        for (&c, v) in mask.cells.iter().zip(&mask.values) {
            out[c] += data[c] * v * s;
        }
        if self.config.use_blazed_carrier {
            self.first_order(&mut out);
        }
        *data = out;
    }

    /// Keep the band around the carrier and shift it back to baseband.
    fn first_order(&self, data: &mut [C64]) {
        let g = self.config.grid;
        let kc = self.config.carrier_frequency();
        let fft = self.prop.fft();
        let (kx, ky) = self.prop.angular_frequencies();
        fft.forward(data);
        let r2 = 0.25 * kc * kc;
        for (row, qy) in data.chunks_exact_mut(g.nx).zip(ky) {
            for (z, qx) in row.iter_mut().zip(kx) {
                if (qx - kc).powi(2) + qy * qy > r2 {
                    *z = C64::new(0.0, 0.0);
                }
            }
        }
        fft.inverse(data);
        let xs = g.xs();
        for row in data.chunks_exact_mut(g.nx) {
            for (z, x) in row.iter_mut().zip(&xs) {
                *z *= cis(-kc * x);
            }
        }
    }

    fn project(&self, data: &[C64]) -> StateVector {
        let g = self.config.grid;
        let area = g.pitch * g.pitch;
        StateVector::from_iterator(
            self.detectors.len(),
            self.detectors.iter().map(|(gx, gy)| {
                let mut acc = C64::new(0.0, 0.0);
                for (row, y) in data.chunks_exact(g.nx).zip(gy) {
                    if y.norm_sqr() == 0.0 {
                        continue;
                    }
                    let s: C64 = row.iter().zip(gx).map(|(e, x)| x.conj() * e).sum();
                    acc += y.conj() * s;
                }
                acc * area
            }),
        )
    }

    fn global_lens(&self, data: &mut [C64], conjugate: bool) {
        let g = self.config.grid;
        let a = self.config.wavenumber() / (2.0 * self.config.focal()) * if conjugate { -1.0 } else { 1.0 };
        let lx: Vec<C64> = g.xs().iter().map(|x| cis(a * x * x)).collect();
        let ly: Vec<C64> = g.ys().iter().map(|y| cis(a * y * y)).collect();
        for (row, y) in data.chunks_exact_mut(g.nx).zip(&ly) {
            for (z, x) in row.iter_mut().zip(&lx) {
                *z *= x * y;
            }
        }
    }

    fn pinhole_filter(&self, data: &mut [C64]) {
        let mut out = vec![C64::new(0.0, 0.0); data.len()];
        for &c in &self.pinhole {
            out[c] = data[c];
        }
        data.copy_from_slice(&out);
    }

    /// Field leaving SLM0 for a prepared state.
    pub fn prepare(&self, prep: &PrepSpec) -> Result<SampledField> {
        let mask = slm0_sparse(prep, &self.config)?;
        let mut data = self.source.clone();
        self.apply_slm(&mut data, &mask);
        Ok(self.field(data))
    }

    /// Linear superposition Σ a_n (SLM0 output for e_n): the state injected
    /// directly as a field, bypassing the nonlinear arg-clipping of SLM0.
    pub fn inject(&self, state: &StateVector) -> Result<SampledField> {
        let n = self.config.dim();
        if state.len() != n {
            return Err(Error::Dimension(format!("state has {} amplitudes for {n} modes", state.len())));
        }
        let mut acc = vec![C64::new(0.0, 0.0); self.config.grid.len()];
        for (idx, a) in state.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            let f = self.prepare(&PrepSpec::basis(idx, n))?;
            acc.iter_mut().zip(&f.data).for_each(|(o, v)| *o += a * v);
        }
        Ok(self.field(acc))
    }

    /// Propagate a field leaving SLM0 through the rest of the train and project on the output modes.
    pub fn propagate_from_slm0(
        &self,
        design: &GratingDesign,
        after_slm0: &SampledField,
        mut trace: Option<&mut Vec<TracePlane>>,
    ) -> Result<StateVector> {
        if after_slm0.grid != self.config.grid {
            return Err(Error::Dimension("input field is not on the setup grid".into()));
        }
        let m1 = slm1_sparse(design, &self.config)?;
        let m2 = slm2_sparse(design, &self.config)?;
        let f = self.config.focal();
        let mut data = after_slm0.data.clone();
        let mut record = |name: &'static str, d: &[C64]| {
            if let Some(t) = trace.as_deref_mut() {
                t.push(TracePlane {
                    name,
                    field: self.field(d.to_vec()),
                });
            }
        };
        record("after_slm0", &data);
        self.prop.propagate_in_place(&mut data, 2.0 * f)?;
        record("slm1_in", &data);
        self.apply_slm(&mut data, &m1);
        self.prop.propagate_in_place(&mut data, self.config.slm_separation)?;
        record("slm2_in", &data);
        self.apply_slm(&mut data, &m2);
        self.prop.propagate_in_place(&mut data, f)?;
        record("pinhole_in", &data);
        self.pinhole_filter(&mut data);
        self.prop.propagate_in_place(&mut data, f)?;
        self.global_lens(&mut data, false);
        self.prop.propagate_in_place(&mut data, 2.0 * f)?;
        record("output", &data);
        Ok(self.project(&data))
    }

    pub fn run(&self, design: &GratingDesign, prep: &PrepSpec) -> Result<StateVector> {
        let input = self.prepare(prep)?;
        self.propagate_from_slm0(design, &input, None)
    }

    /// As [`run`](Self::run), also returning the intermediate planes.
    pub fn run_traced(&self, design: &GratingDesign, prep: &PrepSpec) -> Result<(StateVector, Vec<TracePlane>)> {
        let input = self.prepare(prep)?;
        let mut planes = vec![TracePlane {
            name: "source",
            field: self.source_field(),
        }];
        let out = self.propagate_from_slm0(design, &input, Some(&mut planes))?;
        Ok((out, planes))
    }

    /// Transfer matrix by probing every basis input through the full train.
    pub fn transfer_matrix_direct(&self, design: &GratingDesign) -> Result<CMatrix> {
        let n = self.config.dim();
        let mut t = CMatrix::zeros(n, n);
        for col in 0..n {
            let out = self.run(design, &PrepSpec::basis(col, n))?;
            t.set_column(col, &out);
        }
        Ok(t)
    }

    /// Transfer matrix, column n = output for input e_n.
    ///
    /// Without the blazed carrier every element after SLM0 is linear and the
    /// fields before SLM1 and the adjoint detection modes behind SLM2 do not
    /// depend on the design; they are computed once, leaving one propagation
    /// per column.
    pub fn transfer_matrix(&self, design: &GratingDesign) -> Result<CMatrix> {
        if self.config.use_blazed_carrier {
            return self.transfer_matrix_direct(design);
        }
        let probe = match self.probe.get() {
            Some(p) => p,
            None => {
                let p = self.build_probe()?;
                self.probe.get_or_init(|| p)
            }
        };
        let m1 = slm1_sparse(design, &self.config)?;
        let m2 = slm2_sparse(design, &self.config)?;
        debug_assert_eq!(m1.cells, probe.slm1_cells);
        debug_assert_eq!(m2.cells, probe.slm2_cells);
        let n = self.config.dim();
        let eta = self.config.modulation_efficiency;
        let mut t = CMatrix::zeros(n, n);
        let mut data = vec![C64::new(0.0, 0.0); self.config.grid.len()];
        for col in 0..n {
            data.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for ((&c, v), fin) in probe.slm1_cells.iter().zip(&m1.values).zip(&probe.inputs[col]) {
                data[c] = fin * v;
            }
            self.prop.propagate_in_place(&mut data, self.config.slm_separation)?;
            let w: Vec<C64> = probe.slm2_cells.iter().zip(&m2.values).map(|(&c, v)| data[c] * v).collect();
            for (row, g) in probe.outputs.iter().enumerate() {
                t[(row, col)] = g.iter().zip(&w).map(|(a, b)| a * b).sum::<C64>() * eta;
            }
        }
        Ok(t)
    }

    fn build_probe(&self) -> Result<Probe> {
        let layout = &self.config.layout;
        let n = layout.len();
        let grid = self.config.grid;
        let f = self.config.focal();
        let mut slm1_cells = Vec::new();
        for c in layout.coords() {
            slm1_cells.extend(disc_cells(&grid, *c, layout.aperture_radius())?.0);
        }
        let slm2_cells = slm1_cells.clone();
        let mut inputs = Vec::with_capacity(n);
        for col in 0..n {
            let mut d = self.prepare(&PrepSpec::basis(col, n))?.data;
            self.prop.propagate_in_place(&mut d, 2.0 * f)?;
            inputs.push(slm1_cells.iter().map(|&c| d[c]).collect());
        }
        let area = grid.pitch * grid.pitch;
        let mut outputs = Vec::with_capacity(n);
        for (gx, gy) in &self.detectors {
            let mut d: Vec<C64> = gy.iter().flat_map(|y| gx.iter().map(move |x| x * y)).collect();
            self.back.propagate_in_place(&mut d, -2.0 * f)?;
            self.global_lens(&mut d, true);
            self.back.propagate_in_place(&mut d, -f)?;
            self.pinhole_filter(&mut d);
            self.back.propagate_in_place(&mut d, -f)?;
            outputs.push(slm2_cells.iter().map(|&c| d[c].conj() * area).collect());
        }
        Ok(Probe {
            slm1_cells,
            slm2_cells,
            inputs,
            outputs,
        })
    }
}

/// Highest spatial frequency of the beams the design routes, against what the
/// grid (or the carrier band) can hold.
///
/// Cross terms that a grating throws away may exceed it; a pixelated SLM
/// aliases those the same way the sampled mask does, and the pinhole rejects them.
fn check_bandwidth(config: &SetupConfig) -> Result<()> {
    let l = &config.layout;
    let n = l.len();
    let (k, f) = (config.wavenumber(), config.focal());
    let a = l.aperture_radius();
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let tilt0 = (0..n).map(|i| norm(l.launch_tilt(i))).fold(0.0, f64::max);
    let mut split: f64 = 0.0;
    for m in 0..n {
        for j in 0..n {
            let q = l.k_mn(m, j);
            let t = l.launch_tilt(j);
            split = split.max(norm([q[0] + t[0], q[1] + t[1]]));
        }
    }
    let rmax = l.coords().iter().map(|c| norm(*c)).fold(0.0, f64::max);
    let need = [
        tilt0 + k * config.slm0_aperture / f,
        split + k * a / f,
        // the combiner cancels the arriving tilt; both lenses remain
        k * (rmax + 2.0 * a) / f,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let nyquist = PI / config.grid.pitch;
    let (limit, what) = if config.use_blazed_carrier {
        (0.5 * config.carrier_frequency(), "half the blazed-carrier frequency")
    } else {
        (nyquist, "the grid Nyquist frequency")
    };
    if need > limit {
        return Err(Error::Undersampled(format!(
            "masks need spatial frequencies up to {need:.4e} rad/m but {what} is {limit:.4e} rad/m"
        )));
    }
    Ok(())
}

/// Output amplitudes for one prepared input.
pub fn run_setup(design: &GratingDesign, prep: &PrepSpec, config: &SetupConfig) -> Result<StateVector> {
    Simulator::new(config.clone())?.run(design, prep)
}

/// End-to-end transfer matrix, one column per basis input.
pub fn extract_transfer_matrix(design: &GratingDesign, config: &SetupConfig) -> Result<CMatrix> {
    Simulator::new(config.clone())?.transfer_matrix(design)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RefineReport {
    /// Fidelity of the simulated transfer matrix before each pass and after the last.
    pub fidelities: Vec<f64>,
    /// Simulated transfer matrix efficiency Tr(T_exp†T_exp)/Tr(T†T) at the end.
    pub efficiency: f64,
}

/// Closed-loop pre-distortion against the simulated setup.
///
/// Each pass measures `T_exp`, removes its best-fit scale `c`, and adds the
/// residual `T − T_exp/c` to the matrix the gratings are designed for. The
/// correction is stored in complex `mu`/`nu` so `A ∘ B = T` is untouched.
/// Entries where `T` vanishes are not corrected.
pub fn refine_design(sim: &Simulator, design: &GratingDesign, passes: usize) -> Result<(GratingDesign, RefineReport)> {
    let target = design.target();
    let tn = frobenius_norm_sqr(&target);
    if tn == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let mut current = design.clone();
    let mut programmed = crate::linalg::hadamard(&current.splitter_terms(), &current.combiner_terms());
    let mut fidelities = Vec::with_capacity(passes + 1);
    let mut t_exp = sim.transfer_matrix(&current)?;
    fidelities.push(matrix_fidelity(&t_exp, &target)?);
    for _ in 0..passes {
        let c = frobenius_inner(&target, &t_exp) / tn;
        if c.norm() == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        for (idx, p) in programmed.iter_mut().enumerate() {
            if target[idx].norm() > 0.0 {
                *p += target[idx] - t_exp[idx] / c;
            }
        }
        let (a2, b2) = decompose_with(&programmed, Decomposition::Balanced);
        current.mu = ratio(&a2, &current.a);
        current.nu = ratio(&b2, &current.b);
        t_exp = sim.transfer_matrix(&current)?;
        fidelities.push(matrix_fidelity(&t_exp, &target)?);
    }
    let efficiency = frobenius_norm_sqr(&t_exp) / tn;
    Ok((current, RefineReport { fidelities, efficiency }))
}

fn ratio(num: &CMatrix, den: &CMatrix) -> CMatrix {
    num.zip_map(den, |a, b| if b.norm() > 0.0 { a / b } else { C64::new(0.0, 0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sim(n: usize) -> Simulator {
        Simulator::new(SetupConfig::desk_scale(n).unwrap()).unwrap()
    }

    #[test]
    fn identity_routes_each_input_to_its_port() {
        let s = sim(5);
        let d = GratingDesign::new(&CMatrix::identity(5, 5), s.config().layout.clone()).unwrap();
        let t = s.transfer_matrix(&d).unwrap();
        for col in 0..5 {
            let p: Vec<f64> = t.column(col).iter().map(|z| z.norm_sqr()).collect();
            let total: f64 = p.iter().sum();
            assert!(p[col] / total > 0.999, "column {col}: {p:?}");
            let cross = p.iter().enumerate().filter(|(m, _)| *m != col).map(|(_, x)| x).sum::<f64>();
            assert!(cross / total < 1e-3);
        }
    }

    #[test]
    fn fast_path_matches_direct_simulation() {
        let s = sim(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(3, &mut rng);
        let d = GratingDesign::with_decomposition(&u, s.config().layout.clone(), Decomposition::Balanced).unwrap();
        let fast = s.transfer_matrix(&d).unwrap();
        let direct = s.transfer_matrix_direct(&d).unwrap();
        let scale = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max_abs_diff(&fast, &direct) < 1e-9 * scale.max(1.0));
    }

    #[test]
    fn zero_input_is_an_error_and_power_never_grows() {
        let s = sim(3);
        let d = GratingDesign::new(&CMatrix::identity(3, 3), s.config().layout.clone()).unwrap();
        let zero = StateVector::zeros(3);
        assert!(matches!(s.run(&d, &PrepSpec::new(zero.clone())), Err(Error::ZeroState)));
        let out = s.propagate_from_slm0(&d, &s.inject(&zero).unwrap(), None).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
        let prep = PrepSpec::new(StateVector::from_element(3, C64::new(1.0, 0.0)));
        let (_, planes) = s.run_traced(&d, &prep).unwrap();
        let powers: Vec<f64> = planes.iter().map(|p| p.field.power()).collect();
        assert!(powers.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{powers:?}");
    }

    #[test]
    fn refinement_raises_fidelity() {
        let s = sim(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(5, &mut rng);
        let d = GratingDesign::with_decomposition(&u, s.config().layout.clone(), Decomposition::Balanced).unwrap();
        let (refined, report) = refine_design(&s, &d, 2).unwrap();
        assert!(max_abs_diff(&refined.target(), &u) < 1e-12);
        assert!(report.fidelities[2] > report.fidelities[0]);
        assert!(report.fidelities[2] > 0.9999, "{report:?}");
    }

    #[test]
    fn carrier_needs_bandwidth() {
        let mut c = SetupConfig::desk_scale(15).unwrap();
        c.use_blazed_carrier = true;
        assert!(matches!(Simulator::new(c), Err(Error::Undersampled(_))));
    }
}
