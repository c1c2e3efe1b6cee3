//! End-to-end experiments on the simulated setup, shared by the command-line
//! driver, the examples and the acceptance suite.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::calib::{self, PhaseErrorMap};
use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, C64};
use crate::optsim::{refine_design, RefineReport, Simulator};
use crate::qops::{fourier_basis, qft_matrix};
use crate::synthesis::{matrix_fidelity, Decomposition, GratingDesign};
use crate::tomo::NoiseModel;

/// Balanced design for `target`, refined `passes` times against `sim`.
pub fn refined_design(sim: &Simulator, target: &CMatrix, passes: usize) -> Result<(GratingDesign, RefineReport)> {
    let design = GratingDesign::with_decomposition(target, sim.config().layout.clone(), Decomposition::Balanced)?;
    refine_design(sim, &design, passes)
}

/// Matrix fidelity of a real table against the identity.
pub fn identity_fidelity(p: &DMatrix<f64>) -> Result<f64> {
    matrix_fidelity(&p.map(|v| C64::new(v, 0.0)), &CMatrix::identity(p.nrows(), p.ncols()))
}

/// Divide every column by its sum; all-zero columns stay zero.
pub fn column_normalize(p: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = p.clone();
    for mut c in out.column_iter_mut() {
        let s = c.sum();
        if s > 0.0 {
            c /= s;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct QftTest {
    pub n: usize,
    /// |⟨φ_m|F_exp|ω_n⟩|², column-normalized.
    pub intensities: Vec<Vec<f64>>,
    /// Recorded coincidences per (m, n); empty without noise.
    pub counts: Vec<Vec<u64>>,
    /// Dark-subtracted, column-normalized estimate of `intensities`.
    pub estimated: Vec<Vec<f64>>,
    /// Matrix fidelity of the complex F_exp Ω against I.
    pub fidelity_noiseless: f64,
    /// Matrix fidelity of the estimated intensity table against I.
    pub fidelity: f64,
    pub refine: RefineReport,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// QFT tested in the conjugate Fourier basis. The inputs ω_n are taken as
/// precisely prepared, so F_exp Ω = T_exp Ω. With noise every (m, n) cell is
/// counted for `noise.duration` seconds.
pub fn qft_fourier_test<R: Rng + ?Sized>(
    sim: &Simulator,
    refine_passes: usize,
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> Result<QftTest> {
    let n = sim.config().dim();
    let (design, refine) = refined_design(sim, &qft_matrix(n)?, refine_passes)?;
    let t_exp = sim.transfer_matrix(&design)?;
    qft_from_transfer(&t_exp, refine, noise, rng)
}

/// Noise and scoring part of [`qft_fourier_test`] for a known transfer matrix.
pub fn qft_from_transfer<R: Rng + ?Sized>(
    t_exp: &CMatrix,
    refine: RefineReport,
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> Result<QftTest> {
    let n = t_exp.nrows();
    let f_omega = t_exp * fourier_basis(n)?;
    let fidelity_noiseless = matrix_fidelity(&f_omega, &CMatrix::identity(n, n))?;
    let intensities = column_normalize(&f_omega.map(|z| z.norm_sqr()));
    let (counts, estimated) = match noise {
        None => (Vec::new(), intensities.clone()),
        Some(nm) => {
            nm.validate()?;
            let mut c = DMatrix::<u64>::zeros(n, n);
            for j in 0..n {
                for i in 0..n {
                    let lambda = intensities[(i, j)] * nm.signal_counts() + nm.dark_counts();
                    c[(i, j)] = if lambda > 0.0 {
                        Poisson::new(lambda)
                            .map_err(|e| Error::InvalidArgument(e.to_string()))?
                            .sample(rng) as u64
                    } else {
                        0
                    };
                }
            }
            let est = column_normalize(&c.map(|v| (v as f64 - nm.dark_counts()).max(0.0)));
            (c.row_iter().map(|r| r.iter().copied().collect()).collect(), est)
        }
    };
    Ok(QftTest {
        n,
        intensities: rows(&intensities),
        counts,
        fidelity: identity_fidelity(&estimated)?,
        estimated: rows(&estimated),
        fidelity_noiseless,
        refine,
    })
}

/// Constant phase errors ε_mn on the implemented matrix: the phase of every
/// grating term μ_mn is shifted by ε_mn.
pub fn with_phase_errors(design: &GratingDesign, err: &PhaseErrorMap) -> Result<GratingDesign> {
    let mut d = design.clone();
    if err.dim() != d.dim() {
        return Err(Error::Dimension(format!("phase map is {0}x{0}, design is {1}x{1}", err.dim(), d.dim())));
    }
    for i in 0..d.dim() {
        for j in 0..d.dim() {
            d.mu[(i, j)] *= cis(err.eps[(i, j)]);
        }
    }
    Ok(d)
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationRun {
    pub injected: PhaseErrorMap,
    pub recovered: PhaseErrorMap,
    /// RMS of the wrapped difference between recovered and injected maps
    /// (rows aligned on their first column).
    pub rms_error: f64,
    /// Row-phase-quotiented fidelity to the target before and after.
    pub fidelity_before: f64,
    pub fidelity_after: f64,
    /// Share of detected power in the designated port for each ω_n input.
    pub port_fraction_before: Vec<f64>,
    pub port_fraction_after: Vec<f64>,
}

fn port_fractions(t: &CMatrix) -> Result<Vec<f64>> {
    let n = t.nrows();
    let out = t * fourier_basis(n)?;
    Ok((0..n)
        .map(|j| {
            let total: f64 = out.column(j).iter().map(|z| z.norm_sqr()).sum();
            if total > 0.0 {
                out[(j, j)].norm_sqr() / total
            } else {
                0.0
            }
        })
        .collect())
}

/// Calibrate a simulated device that adds `injected` to whatever it is
/// programmed with, then program the compensated QFT.
///
/// The designer refines gratings against the ideal simulator; the phase
/// errors are a property of the device and are invisible to that step.
pub fn calibrate_qft(sim: &Simulator, injected: &PhaseErrorMap, refine_passes: usize) -> Result<CalibrationRun> {
    let n = sim.config().dim();
    let target = qft_matrix(n)?;
    let device = |programmed: &CMatrix| -> Result<CMatrix> {
        let (d, _) = refined_design(sim, programmed, refine_passes)?;
        sim.transfer_matrix(&with_phase_errors(&d, injected)?)
    };
    let t_real = device(&target)?;
    let magnitudes = t_real.map(|z| z.norm());
    let recovered = calib::calibrate(&target, &calib::probe_intensities(&t_real)?, &magnitudes)?;
    let fixed = device(&calib::compensate(&target, &recovered)?)?;

    let truth = injected.row_normalized();
    let sq: f64 = recovered
        .eps
        .iter()
        .zip(truth.eps.iter())
        .map(|(a, b)| calib::wrap(a - b).powi(2))
        .sum();
    Ok(CalibrationRun {
        rms_error: (sq / (n * n) as f64).sqrt(),
        fidelity_before: calib::row_quotient_fidelity(&t_real, &target)?,
        fidelity_after: calib::row_quotient_fidelity(&fixed, &target)?,
        port_fraction_before: port_fractions(&t_real)?,
        port_fraction_after: port_fractions(&fixed)?,
        injected: injected.clone(),
        recovered,
    })
}
