//! Photon-counting noise, compressed-sensing state reconstruction and the
//! state/distribution metrics used to score it.

mod budget;
mod counts;
mod cs;
mod sweep;

pub use budget::{intrinsic_loss_db, loss_budget, nominal_components, LossBudget, LossItem};
pub use counts::{estimate_probabilities, expected_counts, simulate_counts, CountRecord, NoiseModel};
pub use cs::{cs_reconstruct, CsOptions, PsdProjection};
pub use sweep::{
    loglog_slope, run_tomography, sampling_sweep, spearman, subset_estimate, SweepOptions, SweepRow, SweepTable,
    TomographyRun,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ComplexArray;
use crate::linalg::{check_square, frobenius_norm_sqr, hermitian_eigen, psd_sqrt, CMatrix, CVector, C64};

pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const EIGENVALUE_TOLERANCE: f64 = 1e-8;
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// A validated density matrix: Hermitian, PSD and of unit trace within the
/// module tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexArray", into = "ComplexArray")]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl TryFrom<ComplexArray> for DensityMatrix {
    type Error = Error;

    fn try_from(a: ComplexArray) -> Result<Self> {
        Self::new(a.to_matrix()?)
    }
}

impl From<DensityMatrix> for ComplexArray {
    fn from(r: DensityMatrix) -> Self {
        ComplexArray::from_matrix(&r.mat)
    }
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let d = check_square(&mat, "density matrix")?;
        if d == 0 {
            return Err(Error::InvalidState("empty matrix".into()));
        }
        let herm = crate::linalg::max_abs_diff(&mat, &mat.adjoint());
        if herm > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.2e})")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOLERANCE || tr.im.abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let (vals, _) = hermitian_eigen(&mat);
        if vals[0] < -EIGENVALUE_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.2e}", vals[0])));
        }
        Ok(Self { mat })
    }

    /// |ψ⟩⟨ψ| for a normalized copy of ψ.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi / C64::new(n, 0.0);
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        }
    }

    pub fn d(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn purity(&self) -> f64 {
        frobenius_norm_sqr(&self.mat)
    }

    /// Tr(A ρ) for a Hermitian observable A.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        a.iter().zip(self.mat.transpose().iter()).map(|(x, y)| x * y).sum::<C64>().re
    }

    /// Eigenvector of the largest eigenvalue.
    pub fn dominant_vector(&self) -> CVector {
        let (_, vecs) = hermitian_eigen(&self.mat);
        vecs.column(self.d() - 1).into_owned()
    }
}

fn normalized(p: &[f64], what: &str) -> Result<Vec<f64>> {
    if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("{what} has an invalid entry {v}")));
    }
    let s: f64 = p.iter().sum();
    if s <= 0.0 {
        return Err(Error::InvalidArgument(format!("{what} sums to zero")));
    }
    Ok(p.iter().map(|v| v / s).collect())
}

/// F_s = Σ √(p_exp·p) after normalizing both distributions.
pub fn statistical_fidelity(p_exp: &[f64], p: &[f64]) -> Result<f64> {
    if p_exp.len() != p.len() {
        return Err(Error::Dimension(format!("{} vs {} outcomes", p_exp.len(), p.len())));
    }
    let a = normalized(p_exp, "experimental distribution")?;
    let b = normalized(p, "reference distribution")?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x * y).sqrt()).sum::<f64>().min(1.0))
}

/// |Tr √(√ρ ρ_exp √ρ)|², using ⟨ψ|ρ_exp|ψ⟩ when either state is pure.
pub fn dm_fidelity(rho_exp: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    if rho_exp.d() != rho.d() {
        return Err(Error::Dimension(format!("dimensions {} and {}", rho_exp.d(), rho.d())));
    }
    let pure = 1.0 - 1e-8;
    let f = if rho.purity() > pure {
        rho_exp.expectation(&pure_projector(rho))
    } else if rho_exp.purity() > pure {
        rho.expectation(&pure_projector(rho_exp))
    } else {
        let s = psd_sqrt(rho.matrix());
        let (vals, _) = hermitian_eigen(&(&s * rho_exp.matrix() * &s));
        // round-off eigenvalues near zero would otherwise contribute √1e-17
        let floor = 1e-14 * vals.last().copied().unwrap_or(0.0).max(0.0);
        vals.iter().filter(|&&v| v > floor).map(|v| v.sqrt()).sum::<f64>().powi(2)
    };
    Ok(f.clamp(0.0, 1.0))
}

fn pure_projector(rho: &DensityMatrix) -> CMatrix {
    let v = rho.dominant_vector();
    &v * v.adjoint()
}

/// Half the trace norm of ρ_exp − ρ.
pub fn trace_distance(rho_exp: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    if rho_exp.d() != rho.d() {
        return Err(Error::Dimension(format!("dimensions {} and {}", rho_exp.d(), rho.d())));
    }
    let (vals, _) = hermitian_eigen(&(rho_exp.matrix() - rho.matrix()));
    Ok((0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()).clamp(0.0, 1.0))
}
