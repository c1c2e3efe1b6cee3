use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector, C64};

/// Pure state Σ c_xy |x⟩|y⟩ of two qudits.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    pub d: usize,
    /// c_xy, rows indexing the first qudit.
    pub amps: CMatrix,
}

impl BipartiteState {
    pub fn new(amps: CMatrix) -> Result<Self> {
        if amps.nrows() != amps.ncols() || amps.nrows() == 0 {
            return Err(Error::Dimension(format!("amplitudes must be d x d, got {:?}", amps.shape())));
        }
        Ok(Self { d: amps.nrows(), amps })
    }

    /// Amplitudes in the product basis, index x·d + y.
    pub fn to_vector(&self) -> CVector {
        CVector::from_iterator(self.d * self.d, self.amps.transpose().iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// (A ⊗ B)|ψ⟩, i.e. c → A c Bᵀ.
    pub fn apply_local(&self, a: &CMatrix, b: &CMatrix) -> Result<Self> {
        if a.shape() != (self.d, self.d) || b.shape() != (self.d, self.d) {
            return Err(Error::Dimension("local operators must be d x d".into()));
        }
        Ok(Self {
            d: self.d,
            amps: a * &self.amps * b.transpose(),
        })
    }
}

/// |ψ⟩_mn = (1/√N) Σ_x e^{2πi·x·n/N} |x⟩|x + m mod N⟩.
pub fn bell_state(n: usize, m: usize, k: usize) -> Result<BipartiteState> {
    if n == 0 || m >= n || k >= n {
        return Err(Error::InvalidArgument(format!("Bell index ({m}, {k}) invalid for N = {n}")));
    }
    let s = 1.0 / (n as f64).sqrt();
    let mut amps = CMatrix::zeros(n, n);
    for x in 0..n {
        amps[(x, (x + m) % n)] = cis(2.0 * PI * ((x * k) % n) as f64 / n as f64) * s;
    }
    BipartiteState::new(amps)
}

/// All N² Bell states, ordered by (m, n) with n fastest.
pub fn bell_basis(n: usize) -> Result<Vec<BipartiteState>> {
    let mut out = Vec::with_capacity(n * n);
    for m in 0..n {
        for k in 0..n {
            out.push(bell_state(n, m, k)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{clock_matrix, shift_matrix};
    use approx::assert_abs_diff_eq;

    #[test]
    fn root_state_is_diagonal() {
        let b = bell_state(4, 0, 0).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let expected = if x == y { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(b.amps[(x, y)].re, expected, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_is_orthonormal() {
        let basis = bell_basis(6).unwrap();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b) - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn local_shift_clock_reaches_every_state() {
        let n = 5;
        let root = bell_state(n, 0, 0).unwrap();
        let id = CMatrix::identity(n, n);
        for m in 0..n {
            for k in 0..n {
                let u = shift_matrix(n, m).unwrap() * clock_matrix(n, k).unwrap();
                let moved = root.apply_local(&id, &u).unwrap();
                let target = bell_state(n, m, k).unwrap();
                assert!((target.inner(&moved) - C64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn vector_layout() {
        let b = bell_state(3, 1, 0).unwrap();
        let v = b.to_vector();
        // |0⟩|1⟩ sits at index 0·3 + 1
        assert_abs_diff_eq!(v[1].re, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert!(bell_state(3, 3, 0).is_err());
    }
}
