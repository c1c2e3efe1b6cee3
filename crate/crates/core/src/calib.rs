//! Constant phase errors on an implemented matrix, their tomographic
//! recovery from 2(N−1) two-port probes, and compensation.
//!
//! Every row of a recovered map carries an undetermined phase; the first
//! column of each row is fixed to zero.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{check_same_shape, check_square, cis, CMatrix, C64, I};
use crate::modes::StateVector;
use crate::synthesis::matrix_fidelity;

/// Phases ε_mn in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PhaseErrorMap {
    pub eps: DMatrix<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for PhaseErrorMap {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("phase error map must be square".into()));
        }
        Ok(Self {
            eps: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        })
    }
}

impl From<PhaseErrorMap> for Vec<Vec<f64>> {
    fn from(m: PhaseErrorMap) -> Self {
        m.eps.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl PhaseErrorMap {
    pub fn zeros(n: usize) -> Self {
        Self { eps: DMatrix::zeros(n, n) }
    }

    /// Independent phases uniform in [−π, π).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            eps: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-PI..PI)),
        }
    }

    pub fn dim(&self) -> usize {
        self.eps.nrows()
    }

    /// Shift every row so its first entry is zero, wrapping into (−π, π].
    pub fn row_normalized(&self) -> Self {
        Self {
            eps: DMatrix::from_fn(self.dim(), self.dim(), |i, j| wrap(self.eps[(i, j)] - self.eps[(i, 0)])),
        }
    }

    fn check(&self, t: &CMatrix) -> Result<()> {
        if t.shape() != self.eps.shape() {
            return Err(Error::Dimension(format!(
                "matrix is {:?}, phase map is {:?}",
                t.shape(),
                self.eps.shape()
            )));
        }
        Ok(())
    }
}

/// Wrap an angle into (−π, π].
pub fn wrap(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// T^real_mn = T_mn e^{iε_mn}.
pub fn apply_phase_error(t: &CMatrix, err: &PhaseErrorMap) -> Result<CMatrix> {
    err.check(t)?;
    Ok(CMatrix::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)] * cis(err.eps[(i, j)])))
}

/// Matrix to program so that the device realizes T: T_mn e^{−iε_mn}.
pub fn compensate(t: &CMatrix, err: &PhaseErrorMap) -> Result<CMatrix> {
    err.check(t)?;
    Ok(CMatrix::from_fn(t.nrows(), t.ncols(), |i, j| t[(i, j)] * cis(-err.eps[(i, j)])))
}

/// The 2(N−1) probe inputs: e₁ + e_j for j = 2..N, then i·e₁ + e_j.
pub fn probe_vectors(n: usize) -> Result<Vec<StateVector>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("calibration needs N ≥ 2, got {n}")));
    }
    let mut out = Vec::with_capacity(2 * (n - 1));
    for reference in [C64::new(1.0, 0.0), I] {
        for j in 1..n {
            let mut v = StateVector::zeros(n);
            v[0] = reference;
            v[j] = C64::new(1.0, 0.0);
            out.push(v);
        }
    }
    Ok(out)
}

/// Output intensities |T x|² for every probe; column k belongs to probe k.
pub fn probe_intensities(t_real: &CMatrix) -> Result<DMatrix<f64>> {
    let n = check_square(t_real, "implemented matrix")?;
    let probes = probe_vectors(n)?;
    let mut out = DMatrix::zeros(n, probes.len());
    for (k, p) in probes.iter().enumerate() {
        let y = t_real * p;
        for m in 0..n {
            out[(m, k)] = y[m].norm_sqr();
        }
    }
    Ok(out)
}

/// |T| from the output intensities of the N basis inputs (column j for e_j).
pub fn estimate_magnitudes(basis_intensities: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if basis_intensities.iter().any(|&v| v < 0.0) {
        return Err(Error::Calibration("negative intensity".into()));
    }
    Ok(basis_intensities.map(f64::sqrt))
}

/// Phases of T^real relative to the first column of each row.
///
/// With a = T_m1 and b = T_mj, I^cos = |a + b|² and I^sin = |ia + b|² give
/// ā·b = (I^cos − S)/2 + i(I^sin − S)/2 with S = |a|² + |b|², which fixes
/// the relative phase without sign ambiguity.
pub fn recover_phases(intensities: &DMatrix<f64>, magnitudes: &DMatrix<f64>) -> Result<PhaseErrorMap> {
    let n = magnitudes.nrows();
    if magnitudes.ncols() != n || n < 2 {
        return Err(Error::Dimension(format!("magnitudes must be N x N with N ≥ 2, got {:?}", magnitudes.shape())));
    }
    if intensities.shape() != (n, 2 * (n - 1)) {
        return Err(Error::Dimension(format!(
            "expected {}x{} probe intensities, got {:?}",
            n,
            2 * (n - 1),
            intensities.shape()
        )));
    }
    if intensities.iter().any(|&v| v < 0.0) {
        return Err(Error::Calibration("negative intensity".into()));
    }
    if let Some(m) = (0..n).find(|&m| magnitudes[(m, 0)] <= 0.0) {
        return Err(Error::Calibration(format!(
            "row {m} has a zero first-column element; permute the columns so the reference column has no zeros"
        )));
    }
    let mut eps = DMatrix::zeros(n, n);
    for m in 0..n {
        let a = magnitudes[(m, 0)];
        for j in 1..n {
            let s = a * a + magnitudes[(m, j)].powi(2);
            let c = intensities[(m, j - 1)] - s;
            let si = intensities[(m, n - 1 + j - 1)] - s;
            eps[(m, j)] = si.atan2(c);
        }
    }
    Ok(PhaseErrorMap { eps })
}

/// Phase errors from the measured relative phases of T^real and the target
/// T, in the row gauge of [`recover_phases`].
pub fn error_from_phases(target: &CMatrix, relative: &PhaseErrorMap) -> Result<PhaseErrorMap> {
    relative.check(target)?;
    let n = target.nrows();
    Ok(PhaseErrorMap {
        eps: DMatrix::from_fn(n, n, |m, j| {
            let nominal = (target[(m, j)] * target[(m, 0)].conj()).arg();
            wrap(relative.eps[(m, j)] - nominal)
        }),
    })
}

/// Recover ε from probe intensities of the implemented matrix.
pub fn calibrate(target: &CMatrix, intensities: &DMatrix<f64>, magnitudes: &DMatrix<f64>) -> Result<PhaseErrorMap> {
    error_from_phases(target, &recover_phases(intensities, magnitudes)?)
}

/// Multiply each row of `x_exp` by the phase that best aligns it with the
/// same row of `x` (the per-row least-squares solution).
pub fn align_rows(x_exp: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    check_same_shape(x_exp, x)?;
    let mut out = x_exp.clone();
    for m in 0..x.nrows() {
        let s: C64 = x_exp.row(m).iter().zip(x.row(m).iter()).map(|(a, b)| a.conj() * b).sum();
        if s.norm() > 0.0 {
            let ph = s / s.norm();
            out.row_mut(m).iter_mut().for_each(|z| *z *= ph);
        }
    }
    Ok(out)
}

/// Matrix fidelity after quotienting out per-row phases.
pub fn row_quotient_fidelity(x_exp: &CMatrix, x: &CMatrix) -> Result<f64> {
    matrix_fidelity(&align_rows(x_exp, x)?, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::qft_matrix;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn apply_basics() {
        let t = qft_matrix(4).unwrap();
        assert_eq!(apply_phase_error(&t, &PhaseErrorMap::zeros(4)).unwrap(), t);
        let pi = PhaseErrorMap {
            eps: DMatrix::from_element(4, 4, PI),
        };
        let flipped = apply_phase_error(&t, &pi).unwrap();
        assert!(crate::linalg::max_abs_diff(&flipped, &(-&t)) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = PhaseErrorMap::random(4, &mut rng);
        let r = apply_phase_error(&t, &e).unwrap();
        for (a, b) in r.iter().zip(t.iter()) {
            assert_abs_diff_eq!(a.norm(), b.norm(), epsilon = 1e-15);
        }
        assert!(matrix_fidelity(&r, &t).unwrap() < 0.99);
        assert!(apply_phase_error(&t, &PhaseErrorMap::zeros(3)).is_err());
    }

    #[test]
    fn probes_match_the_three_mode_example() {
        let p = probe_vectors(3).unwrap();
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        let columns = [[o, o, z], [o, z, o], [I, o, z], [I, z, o]];
        for (v, c) in p.iter().zip(columns) {
            assert_eq!(v.as_slice(), &c);
        }
        assert_eq!(probe_vectors(15).unwrap().len(), 28);
        assert_eq!(probe_vectors(2).unwrap().len(), 2);
        assert!(probe_vectors(1).is_err());
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = qft_matrix(15).unwrap();
        let e = PhaseErrorMap::random(15, &mut rng);
        let real = apply_phase_error(&t, &e).unwrap();
        let mags = real.map(|z| z.norm());
        let got = calibrate(&t, &probe_intensities(&real).unwrap(), &mags).unwrap();
        let want = e.row_normalized();
        for (a, b) in got.eps.iter().zip(want.eps.iter()) {
            assert!(wrap(a - b).abs() < 1e-6);
        }
        let fixed = apply_phase_error(&compensate(&t, &got).unwrap(), &e).unwrap();
        assert_abs_diff_eq!(row_quotient_fidelity(&fixed, &t).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_error_recovers_zero() {
        let t = qft_matrix(5).unwrap();
        let got = calibrate(&t, &probe_intensities(&t).unwrap(), &t.map(|z| z.norm())).unwrap();
        assert!(got.eps.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn one_percent_intensity_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let t = qft_matrix(15).unwrap();
        let (mut sum, mut count) = (0.0, 0);
        for _ in 0..20 {
            let e = PhaseErrorMap::random(15, &mut rng);
            let real = apply_phase_error(&t, &e).unwrap();
            let noisy = probe_intensities(&real).unwrap().map(|v| v * (1.0 + noise.sample(&mut rng)));
            let got = calibrate(&t, &noisy, &real.map(|z| z.norm())).unwrap();
            for (a, b) in got.eps.iter().zip(e.row_normalized().eps.iter()) {
                sum += wrap(a - b).powi(2);
                count += 1;
            }
        }
        assert!((sum / count as f64).sqrt() < 0.05);
    }

    #[test]
    fn reference_column_must_be_nonzero() {
        let mut t = qft_matrix(3).unwrap();
        t[(1, 0)] = C64::new(0.0, 0.0);
        let r = recover_phases(&probe_intensities(&t).unwrap(), &t.map(|z| z.norm()));
        assert!(matches!(r, Err(Error::Calibration(_))));
        let mut neg = probe_intensities(&qft_matrix(3).unwrap()).unwrap();
        neg[(0, 0)] = -1.0;
        assert!(recover_phases(&neg, &qft_matrix(3).unwrap().map(|z| z.norm())).is_err());
    }

    #[test]
    fn map_serializes_as_nested_array() {
        let e = PhaseErrorMap {
            eps: DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -1.0, 3.0]),
        };
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, "[[0.0,0.5],[-1.0,3.0]]");
        assert_eq!(serde_json::from_str::<PhaseErrorMap>(&s).unwrap(), e);
        assert!(serde_json::from_str::<PhaseErrorMap>("[[0.0],[1.0, 2.0]]").is_err());
    }
}
