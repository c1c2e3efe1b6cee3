use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{check_square, from_eigen, hermitian_eigen, CMatrix, C64};

/// Map from a Hermitian iterate back onto the density matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdProjection {
    /// Euclidean projection: eigenvalues shifted by a common constant and
    /// clipped at zero so that they sum to one.
    #[default]
    Simplex,
    /// Clip negative eigenvalues, then rescale to unit trace.
    ClipRenormalize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsOptions {
    pub max_iterations: usize,
    /// Stop when an iterate moves less than this in Frobenius norm.
    pub tolerance: f64,
    pub projection: PsdProjection,
    /// Nesterov momentum with adaptive restart.
    pub accelerated: bool,
}

impl Default for CsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-10,
            projection: PsdProjection::Simplex,
            accelerated: true,
        }
    }
}

fn project(h: &CMatrix, mode: PsdProjection) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let d = vals.len();
    let clipped: Vec<f64> = match mode {
        PsdProjection::ClipRenormalize => {
            let c: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
            let s: f64 = c.iter().sum();
            if s > 0.0 {
                c.iter().map(|v| v / s).collect()
            } else {
                vec![1.0 / d as f64; d]
            }
        }
        PsdProjection::Simplex => {
            // vals ascending; find the shift θ with Σ max(λ − θ, 0) = 1
            let mut cumulative = 0.0;
            let mut theta = 0.0;
            for (k, v) in vals.iter().rev().enumerate() {
                cumulative += v;
                let t = (cumulative - 1.0) / (k + 1) as f64;
                if v - t > 0.0 {
                    theta = t;
                }
            }
            vals.iter().map(|v| (v - theta).max(0.0)).collect()
        }
    };
    let m = from_eigen(&clipped, &vecs);
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Least-squares fit of Tr(Π_i ρ) to p_i over unit-trace PSD ρ by projected
/// gradient descent with step 1/L, L the largest eigenvalue of the Gram
/// matrix ⟨Π_i, Π_j⟩.
pub fn cs_reconstruct(projectors: &[CMatrix], probabilities: &[f64], opts: &CsOptions) -> Result<DensityMatrix> {
    let m = projectors.len();
    if m == 0 || m != probabilities.len() {
        return Err(Error::InvalidArgument(format!(
            "{m} projectors but {} probabilities",
            probabilities.len()
        )));
    }
    let d = check_square(&projectors[0], "projector")?;
    if projectors.iter().any(|p| p.shape() != (d, d)) {
        return Err(Error::Dimension("projectors differ in size".into()));
    }
    if m < d {
        return Err(Error::InvalidArgument(format!("{m} measurements cannot fix a {d}-dimensional state")));
    }
    if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }

    let conj: Vec<Vec<C64>> = projectors.iter().map(|p| p.iter().map(|z| z.conj()).collect()).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| {
        conj[i].iter().zip(projectors[j].iter()).map(|(a, b)| a * b).sum::<C64>().re
    });
    let lipschitz = gram.symmetric_eigenvalues().max();
    if lipschitz <= 0.0 {
        return Err(Error::InvalidArgument("all projectors vanish".into()));
    }
    let step = C64::new(1.0 / lipschitz, 0.0);

    let gradient = |rho: &CMatrix| {
        let mut g = CMatrix::zeros(d, d);
        for (i, c) in conj.iter().enumerate() {
            let tr: f64 = c.iter().zip(rho.iter()).map(|(a, b)| a * b).sum::<C64>().re;
            g += &projectors[i] * C64::new(tr - probabilities[i], 0.0);
        }
        g
    };

    let mut x = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut moved = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let next = project(&(&y - gradient(&y) * step), opts.projection);
        let delta = &next - &x;
        moved = delta.norm();
        if opts.accelerated {
            // restart the momentum when it points uphill
            if (&y - &next).iter().zip(delta.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>() > 0.0 {
                t = 1.0;
                y = next.clone();
            } else {
                let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                y = &next + &delta * C64::new((t - 1.0) / tn, 0.0);
                t = tn;
            }
        } else {
            y = next.clone();
        }
        x = next;
        if moved < opts.tolerance {
            return DensityMatrix::new(x);
        }
    }
    Err(Error::NoConvergence {
        residual: moved,
        iterations: opts.max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_state;
    use crate::qops::{sic_fiducial, sic_povm, SicOptions};
    use crate::tomo::dm_fidelity;
    use proptest::prelude::*;
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn povm(d: usize) -> crate::qops::PovmSet {
        sic_povm(d, &sic_fiducial(d, &SicOptions::default(), None).unwrap()).unwrap()
    }

    #[test]
    fn simplex_projection_is_euclidean() {
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.9, 0.0),
            C64::new(0.6, 0.0),
            C64::new(-0.2, 0.0),
        ]));
        let p = project(&h, PsdProjection::Simplex);
        // shift by 0.25 gives (0.65, 0.35, 0)
        assert!((p[(0, 0)].re - 0.65).abs() < 1e-12);
        assert!((p[(1, 1)].re - 0.35).abs() < 1e-12);
        assert!(p[(2, 2)].re.abs() < 1e-12);
        let c = project(&h, PsdProjection::ClipRenormalize);
        assert!((c[(0, 0)].re - 0.6).abs() < 1e-12);
    }

    #[test]
    fn full_sic_noiseless_d15() {
        let set = povm(15);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rho = DensityMatrix::pure(&random_state(15, &mut rng)).unwrap();
        let p = set.probabilities(rho.matrix());
        let est = cs_reconstruct(&set.elements, &p, &CsOptions::default()).unwrap();
        assert!(dm_fidelity(&est, &rho).unwrap() > 0.999);
    }

    #[test]
    fn hundred_of_225_noiseless() {
        let set = povm(15);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..3 {
            let rho = DensityMatrix::pure(&random_state(15, &mut rng)).unwrap();
            let idx = sample(&mut rng, 225, 100).into_vec();
            let proj: Vec<CMatrix> = idx.iter().map(|&i| set.elements[i].clone()).collect();
            let p: Vec<f64> = proj.iter().map(|e| rho.expectation(e)).collect();
            let est = cs_reconstruct(&proj, &p, &CsOptions::default()).unwrap();
            assert!(dm_fidelity(&est, &rho).unwrap() > 0.99);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let set = povm(3);
        let opts = CsOptions::default();
        assert!(cs_reconstruct(&set.elements[..2], &[0.1, 0.1], &opts).is_err());
        assert!(cs_reconstruct(&set.elements[..3], &[0.1, 0.1], &opts).is_err());
        assert!(cs_reconstruct(&set.elements[..3], &[0.1, 1.5, 0.1], &opts).is_err());
        let tight = CsOptions {
            max_iterations: 2,
            tolerance: 0.0,
            ..opts
        };
        let p = set.probabilities(DensityMatrix::maximally_mixed(3).matrix());
        assert!(matches!(
            cs_reconstruct(&set.elements, &p, &tight),
            Err(Error::NoConvergence { iterations: 2, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn output_is_always_a_density_matrix(seed: u64, m in 4usize..16, clip: bool) {
            let set = povm(4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx = sample(&mut rng, 16, m).into_vec();
            let proj: Vec<CMatrix> = idx.iter().map(|&i| set.elements[i].clone()).collect();
            // arbitrary data, not necessarily consistent with any state
            let p: Vec<f64> = (0..m).map(|_| rand::Rng::gen_range(&mut rng, 0.0..0.3)).collect();
            let opts = CsOptions {
                projection: if clip { PsdProjection::ClipRenormalize } else { PsdProjection::Simplex },
                tolerance: 1e-9,
                ..CsOptions::default()
            };
            let est = cs_reconstruct(&proj, &p, &opts).unwrap();
            prop_assert!(DensityMatrix::new(est.matrix().clone()).is_ok());
        }
    }
}
