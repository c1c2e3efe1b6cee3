//! Splitter/combiner factorization of a target matrix and phase-only grating synthesis.
//!
//! A target `T` is written as the element-wise product `T = A ∘ B`. Column `n`
//! of `A` becomes a splitting grating on the aperture around `R_n`, row `m` of
//! `B` a recombining grating around `R_m`. Each grating is a superposition of
//! plane waves with wave vectors `±k_mn`, clipped to unit modulus.

pub(crate) mod grating;
mod optimize;

pub use grating::{
    extract_matrix, ideal_splitting_grating, phase_only_grating, Aperture, GratingBasis, Side,
};
pub use optimize::{
    evaluate_design, implemented_matrix, optimize_coefficients, optimize_grating, synthesize, GradientMethod,
    GratingFit, OptimizeOptions, SynthesisReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_same_shape, check_square, frobenius_inner, frobenius_norm_sqr, hadamard, CMatrix, C64};
use crate::modes::ModeLayout;

/// How the magnitude of `T` is shared between the two factors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decomposition {
    /// |A| = |B| = √|T|.
    #[default]
    Symmetric,
    /// √|T| rescaled so every column of A and every row of B carries the same
    /// power. Phase-only gratings normalize per column and per row, so this is
    /// the split they reproduce without distorting relative row/column weights.
    Balanced,
}

/// Symmetric split: `|A| = |B| = √|T|`, phase of `T` carried by `A`.
pub fn hadamard_decompose(t: &CMatrix) -> (CMatrix, CMatrix) {
    decompose_with(t, Decomposition::Symmetric)
}

pub fn decompose_with(t: &CMatrix, strategy: Decomposition) -> (CMatrix, CMatrix) {
    let (rows, cols) = t.shape();
    let (r, c) = match strategy {
        Decomposition::Symmetric => (vec![1.0; rows], vec![1.0; cols]),
        Decomposition::Balanced => balancing_scales(t),
    };
    let mut a = CMatrix::zeros(rows, cols);
    let mut b = CMatrix::zeros(rows, cols);
    for m in 0..rows {
        for n in 0..cols {
            let z = t[(m, n)];
            let mag = z.norm();
            if mag == 0.0 {
                continue;
            }
            let s = mag.sqrt();
            let scale = r[m] * c[n];
            a[(m, n)] = C64::from_polar(s * scale, z.arg());
            b[(m, n)] = C64::new(s / scale, 0.0);
        }
    }
    (a, b)
}

/// Row and column scales `r_m`, `c_n` for the balanced split.
///
/// With K = |T| and u = r², equal column norms of A and equal row norms of B
/// require K Kᵀ u ∝ u and c² = 1/(Kᵀ u). The Perron vector is found by power
/// iteration separately on every connected block of the sparsity pattern.
fn balancing_scales(t: &CMatrix) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols) = t.shape();
    let k = t.map(|z| z.norm());
    let mut u = vec![1.0; rows];
    for block in row_blocks(&k) {
        let mut v: Vec<f64> = vec![1.0; block.len()];
        for _ in 0..2000 {
            // w = K Kᵀ v restricted to the block
            let mut kt = vec![0.0; cols];
            for (bi, &m) in block.iter().enumerate() {
                for n in 0..cols {
                    kt[n] += k[(m, n)] * v[bi];
                }
            }
            let w: Vec<f64> = block
                .iter()
                .map(|&m| (0..cols).map(|n| k[(m, n)] * kt[n]).sum())
                .collect();
            let norm = w.iter().cloned().fold(0.0, f64::max);
            if norm == 0.0 {
                break;
            }
            let w: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let delta = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = w;
            if delta < 1e-15 {
                break;
            }
        }
        for (bi, &m) in block.iter().enumerate() {
            u[m] = v[bi];
        }
    }
    let r: Vec<f64> = u.iter().map(|x| if *x > 0.0 { x.sqrt() } else { 1.0 }).collect();
    let c = (0..cols)
        .map(|n| {
            let s: f64 = (0..rows).map(|m| k[(m, n)] * u[m]).sum();
            if s > 0.0 {
                (1.0 / s).sqrt()
            } else {
                1.0
            }
        })
        .collect();
    (r, c)
}

/// Groups of rows connected through shared nonzero columns.
fn row_blocks(k: &nalgebra::DMatrix<f64>) -> Vec<Vec<usize>> {
    let (rows, cols) = k.shape();
    let mut label = vec![usize::MAX; rows];
    let mut blocks = Vec::new();
    for start in 0..rows {
        if label[start] != usize::MAX || (0..cols).all(|n| k[(start, n)] == 0.0) {
            continue;
        }
        let id = blocks.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        label[start] = id;
        while let Some(m) = stack.pop() {
            members.push(m);
            for n in (0..cols).filter(|&n| k[(m, n)] != 0.0) {
                for m2 in 0..rows {
                    if label[m2] == usize::MAX && k[(m2, n)] != 0.0 {
                        label[m2] = id;
                        stack.push(m2);
                    }
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}

/// Factors, coefficients and layout of one synthesized operator.
///
/// `mu[(m, n)]` scales term `m` of splitting grating `n`; `nu[(m, n)]` scales
/// term `n` of recombining grating `m`. Gradient optimization keeps them real
/// and non-negative; closed-loop refinement against a simulated setup may give
/// them a phase. Entries where `T` vanishes stay zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GratingDesign {
    pub a: CMatrix,
    pub b: CMatrix,
    pub mu: CMatrix,
    pub nu: CMatrix,
    pub layout: ModeLayout,
}

impl GratingDesign {
    pub fn new(t: &CMatrix, layout: ModeLayout) -> Result<Self> {
        Self::with_decomposition(t, layout, Decomposition::Symmetric)
    }

    pub fn with_decomposition(t: &CMatrix, layout: ModeLayout, strategy: Decomposition) -> Result<Self> {
        let n = check_square(t, "target")?;
        if n != layout.len() {
            return Err(Error::Dimension(format!(
                "target is {n}x{n} but the layout has {} modes",
                layout.len()
            )));
        }
        if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("target has non-finite entries".into()));
        }
        let (a, b) = decompose_with(t, strategy);
        let ones = t.map(|z| if z.norm() > 0.0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        Ok(Self {
            a,
            b,
            mu: ones.clone(),
            nu: ones,
            layout,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// The target reproduced by the factors, `A ∘ B`.
    pub fn target(&self) -> CMatrix {
        hadamard(&self.a, &self.b)
    }

    /// Weighted splitter coefficients `μ_mn A_mn`.
    pub fn splitter_terms(&self) -> CMatrix {
        hadamard(&self.mu, &self.a)
    }

    /// Weighted combiner coefficients `ν_mn B_mn`.
    pub fn combiner_terms(&self) -> CMatrix {
        hadamard(&self.nu, &self.b)
    }
}

/// Energy-normalized overlap |Tr(X†X_exp)|² / (Tr(X_exp†X_exp)·Tr(X†X)).
pub fn matrix_fidelity(x_exp: &CMatrix, x: &CMatrix) -> Result<f64> {
    check_same_shape(x_exp, x)?;
    let ne = frobenius_norm_sqr(x_exp);
    let nx = frobenius_norm_sqr(x);
    if ne == 0.0 || nx == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok((frobenius_inner(x, x_exp).norm_sqr() / (ne * nx)).min(1.0))
}

/// Power ratio Tr(X_exp†X_exp) / Tr(X†X).
pub fn matrix_efficiency(x_exp: &CMatrix, x: &CMatrix) -> Result<f64> {
    check_same_shape(x_exp, x)?;
    let nx = frobenius_norm_sqr(x);
    if nx == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(frobenius_norm_sqr(x_exp) / nx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal, max_abs_diff, random_unitary};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_splits_into_identities() {
        let t = CMatrix::identity(4, 4);
        let (a, b) = hadamard_decompose(&t);
        assert_eq!(a, t);
        assert_eq!(b, t);
    }

    #[test]
    fn scalar_split_puts_phase_on_a() {
        let t = CMatrix::from_element(1, 1, C64::from_polar(4.0, std::f64::consts::FRAC_PI_3));
        let (a, b) = hadamard_decompose(&t);
        assert_abs_diff_eq!((a[(0, 0)] - C64::from_polar(2.0, std::f64::consts::FRAC_PI_3)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(b[(0, 0)], C64::new(2.0, 0.0));
    }

    #[test]
    fn random_roundtrip_both_strategies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = CMatrix::from_fn(5, 5, |_, _| complex_normal(&mut rng));
        t[(2, 3)] = C64::new(0.0, 0.0);
        for s in [Decomposition::Symmetric, Decomposition::Balanced] {
            let (a, b) = decompose_with(&t, s);
            assert!(max_abs_diff(&hadamard(&a, &b), &t) < 1e-12);
            assert!(b.iter().all(|z| z.im == 0.0 && z.re >= 0.0));
            assert_eq!(a[(2, 3)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn balanced_split_equalizes_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = random_unitary(7, &mut rng);
        let (a, b) = decompose_with(&t, Decomposition::Balanced);
        let cols: Vec<f64> = (0..7).map(|n| a.column(n).norm()).collect();
        let rows: Vec<f64> = (0..7).map(|m| b.row(m).norm()).collect();
        for w in cols.windows(2).chain(rows.windows(2)) {
            assert_abs_diff_eq!(w[0], w[1], epsilon = 1e-9);
        }
    }

    #[test]
    fn balanced_handles_block_structure() {
        let mut t = CMatrix::zeros(3, 3);
        t[(0, 1)] = C64::new(3.0, 0.0);
        t[(1, 0)] = C64::new(0.5, 0.0);
        t[(2, 2)] = C64::new(0.0, 2.0);
        let (a, b) = decompose_with(&t, Decomposition::Balanced);
        assert!(max_abs_diff(&hadamard(&a, &b), &t) < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let x = CMatrix::identity(2, 2);
        assert_abs_diff_eq!(matrix_fidelity(&x, &x).unwrap(), 1.0, epsilon = 1e-15);
        let scaled = &x * C64::from_polar(3.0, 0.7);
        assert_abs_diff_eq!(matrix_fidelity(&scaled, &x).unwrap(), 1.0, epsilon = 1e-14);
        let mut d = x.clone();
        d[(1, 1)] = C64::new(0.0, 1.0);
        assert_abs_diff_eq!(matrix_fidelity(&d, &x).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(matrix_fidelity(&CMatrix::zeros(2, 2), &x), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn efficiency_examples() {
        let x = CMatrix::identity(3, 3);
        assert_abs_diff_eq!(matrix_efficiency(&x, &x).unwrap(), 1.0);
        assert_abs_diff_eq!(matrix_efficiency(&(&x * C64::new(0.5, 0.0)), &x).unwrap(), 0.25);
        assert!(matches!(matrix_efficiency(&x, &CMatrix::zeros(3, 3)), Err(Error::ZeroMatrix)));
    }
}
