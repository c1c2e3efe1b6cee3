//! Quantum objects used in the experiments: the QFT and its conjugate
//! Fourier basis, shift/clock and displacement operators, qudit Bell states,
//! SIC-POVMs and the compiled order-finding demonstration.

mod bell;
mod order;
mod sic;

pub use bell::{bell_basis, bell_state, BipartiteState};
pub use order::{order_finding_demo, OrderFinding};
pub use sic::{
    builtin_fiducial, find_sic_fiducial, load_fiducial, save_fiducial, sic_deviation, sic_fiducial, sic_povm,
    PovmSet, SicOptions, SIC_TOLERANCE,
};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, C64};

/// Conjugate Fourier basis Ω: column n is ω_n with entries e^{−2πi·j·n/N}/√N.
pub fn fourier_basis(n: usize) -> Result<CMatrix> {
    check_dim(n)?;
    let s = 1.0 / (n as f64).sqrt();
    Ok(CMatrix::from_fn(n, n, |j, k| cis(-2.0 * PI * ((j * k) % n) as f64 / n as f64) * s))
}

/// Quantum Fourier transform F = Ω†, so that F·ω_n = e_n.
pub fn qft_matrix(n: usize) -> Result<CMatrix> {
    Ok(fourier_basis(n)?.adjoint())
}

/// Unitary shift X^m: |x⟩ → |x + m mod N⟩.
pub fn shift_matrix(n: usize, m: usize) -> Result<CMatrix> {
    check_dim(n)?;
    check_index(n, m, "shift")?;
    let mut t = CMatrix::zeros(n, n);
    for x in 0..n {
        t[((x + m) % n, x)] = C64::new(1.0, 0.0);
    }
    Ok(t)
}

/// Unitary clock Z^k: |x⟩ → e^{2πi·x·k/N}|x⟩.
pub fn clock_matrix(n: usize, k: usize) -> Result<CMatrix> {
    check_dim(n)?;
    check_index(n, k, "clock")?;
    let mut t = CMatrix::zeros(n, n);
    for x in 0..n {
        t[(x, x)] = cis(2.0 * PI * ((x * k) % n) as f64 / n as f64);
    }
    Ok(t)
}

/// Phase τ^{mn} of the displacement operator, τ = −e^{iπ/d}.
fn displacement_phase(d: usize, m: usize, n: usize) -> C64 {
    let mn = m * n;
    // τ^{mn} = (−1)^{mn} e^{iπ·mn/d}; reduce mn mod 2d to keep the angle small
    let sign = if mn % 2 == 0 { 1.0 } else { -1.0 };
    cis(PI * (mn % (2 * d)) as f64 / d as f64) * sign
}

/// Weyl–Heisenberg displacement D_mn = τ^{mn} X^m Z^n.
pub fn displacement_operator(d: usize, m: usize, n: usize) -> Result<CMatrix> {
    let mut x = shift_matrix(d, m)?;
    let z = clock_matrix(d, n)?;
    x *= displacement_phase(d, m, n);
    Ok(x * z)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_index(n: usize, i: usize, what: &str) -> Result<()> {
    if i >= n {
        return Err(Error::InvalidArgument(format!("{what} index {i} out of range for dimension {n}")));
    }
    Ok(())
}
