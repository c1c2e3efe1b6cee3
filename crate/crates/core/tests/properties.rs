//! Randomized checks of the module-level invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spatial_qops::calib::{apply_phase_error, calibrate, compensate, probe_intensities, row_quotient_fidelity, PhaseErrorMap};
use spatial_qops::linalg::{complex_normal, random_state, random_unitary, unitarity_defect};
use spatial_qops::modes::{encode, mode_field, project_onto_modes, GridSpec};
use spatial_qops::optsim::{desk_layout, PrepSpec, SetupConfig, Simulator};
use spatial_qops::qops::{
    bell_basis, clock_matrix, displacement_operator, fourier_basis, order_finding_demo, qft_matrix, shift_matrix,
};
use spatial_qops::synthesis::{
    hadamard_decompose, implemented_matrix, matrix_fidelity, phase_only_grating, synthesize, GratingDesign,
    OptimizeOptions, Side,
};
use spatial_qops::tomo::{simulate_counts, DensityMatrix, NoiseModel};
use spatial_qops::{CMatrix, C64};

fn gaussian_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| complex_normal(rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn encode_then_project_is_identity(n in 2usize..9, seed: u64) {
        let layout = desk_layout(n).unwrap();
        let psi = random_state(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = project_onto_modes(&encode(&psi, &layout, &GridSpec::desk_scale()).unwrap(), &layout).unwrap();
        prop_assert!((back - psi).camax() < 1e-4);
    }

    #[test]
    fn mode_gram_matrix_is_identity(n in 2usize..16) {
        let layout = desk_layout(n).unwrap();
        let grid = GridSpec::desk_scale();
        let fields: Vec<_> = (0..n).map(|k| mode_field(&layout, k, &grid).unwrap()).collect();
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((fields[a].inner(&fields[b]).unwrap() - C64::new(want, 0.0)).norm() < 1e-4);
            }
        }
    }

    #[test]
    fn mode_field_follows_the_grid_origin(n in 2usize..8, k in 0usize..8, shift in -20i64..20, sub in -4e-6f64..4e-6) {
        let k = k % n;
        let layout = desk_layout(n).unwrap();
        let grid = GridSpec::desk_scale();
        let a = mode_field(&layout, k, &grid).unwrap();
        // whole-pixel translation: the same samples, relabeled
        let b = mode_field(&layout, k, &grid.with_origin([shift as f64 * grid.pitch, 0.0])).unwrap();
        let mut overlap = C64::new(0.0, 0.0);
        for i in 0..grid.ny {
            for j in 0..grid.nx {
                let js = j as i64 + shift;
                if (0..grid.nx as i64).contains(&js) {
                    overlap += a.at(i, js as usize).conj() * b.at(i, j);
                }
            }
        }
        let norm: f64 = a.data.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((overlap.norm() / norm - 1.0).abs() < 1e-6);
        // sub-pixel translation keeps the discrete normalization
        let c = mode_field(&layout, k, &grid.with_origin([sub, -sub])).unwrap();
        prop_assert!((c.power() / a.power() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hadamard_contract_survives_synthesis(n in 2usize..6, seed: u64) {
        let t = gaussian_matrix(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = hadamard_decompose(&t);
        prop_assert!((a.component_mul(&b) - &t).camax() < 1e-12);
        let (design, report) = synthesize(&t, desk_layout(n).unwrap(), &OptimizeOptions::default()).unwrap();
        prop_assert!((design.a.component_mul(&design.b) - &t).camax() < 1e-12 * t.camax().max(1.0));
        for h in &report.histories {
            prop_assert!(h.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        }
    }

    #[test]
    fn fidelity_ignores_global_scale(n in 1usize..8, seed: u64, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.hypot(im) > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_matrix(n, &mut rng);
        let y = gaussian_matrix(n, &mut rng);
        let f = matrix_fidelity(&y, &x).unwrap();
        let g = matrix_fidelity(&(&y * C64::new(re, im)), &x).unwrap();
        prop_assert!((f - g).abs() < 1e-12);
    }

    #[test]
    fn phase_only_gratings_are_unimodular_and_lossless(n in 2usize..8, seed: u64, col in 0usize..8) {
        let col = col % n;
        let layout = desk_layout(n).unwrap();
        let t = gaussian_matrix(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let design = GratingDesign::new(&t, layout).unwrap();
        let lattice = GridSpec::desk_scale();
        let g = phase_only_grating(&design, Side::Splitter, col, &lattice).unwrap();
        prop_assert!(g.data.iter().filter(|z| z.norm() > 0.0).all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let a = implemented_matrix(&design, Side::Splitter, &lattice).unwrap();
        for c in a.column_iter() {
            prop_assert!(c.iter().map(|z| z.norm_sqr()).sum::<f64>() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn phase_errors_keep_magnitudes_and_calibration_closes(n in 2usize..12, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = gaussian_matrix(n, &mut rng);
        for i in 0..n {
            if t[(i, 0)].norm() < 1e-3 {
                t[(i, 0)] = C64::new(1.0, 0.0);
            }
        }
        let eps = PhaseErrorMap::random(n, &mut rng);
        let real = apply_phase_error(&t, &eps).unwrap();
        prop_assert!(real.iter().zip(t.iter()).all(|(a, b)| (a.norm() - b.norm()).abs() <= 1e-14 * b.norm()));
        // exact compensation closes
        let fixed = apply_phase_error(&compensate(&t, &eps).unwrap(), &eps).unwrap();
        prop_assert!((row_quotient_fidelity(&fixed, &t).unwrap() - 1.0).abs() < 1e-10);
        // and 2(N−1) probes are enough to find it
        let est = calibrate(&t, &probe_intensities(&real).unwrap(), &real.map(|z| z.norm())).unwrap();
        let fixed = apply_phase_error(&compensate(&t, &est).unwrap(), &eps).unwrap();
        prop_assert!((row_quotient_fidelity(&fixed, &t).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gates_are_unitary(d in 1usize..20, m in 0usize..40, k in 0usize..40) {
        let (m, k) = (m % d, k % d);
        for u in [qft_matrix(d).unwrap(), shift_matrix(d, m).unwrap(), clock_matrix(d, k).unwrap(),
                  displacement_operator(d, m, k).unwrap(), fourier_basis(d).unwrap()] {
            prop_assert!(unitarity_defect(&u) < 1e-10);
        }
        let product = qft_matrix(d).unwrap() * fourier_basis(d).unwrap();
        prop_assert!((product - CMatrix::identity(d, d)).camax() < 1e-12);
    }

    #[test]
    fn bell_states_form_an_orthonormal_basis(n in 2usize..7) {
        let basis = bell_basis(n).unwrap();
        prop_assert_eq!(basis.len(), n * n);
        let m = CMatrix::from_fn(n * n, n * n, |i, j| basis[j].to_vector()[i]);
        prop_assert!(unitarity_defect(&m) < 1e-10);
    }

    #[test]
    fn order_finding_marginal_is_uniform_on_multiples(bits in 2u32..7, modulus in 3u64..40, base in 2u64..40) {
        let n = 1usize << bits;
        prop_assume!((n as u64) >= modulus);
        let base = base % modulus;
        prop_assume!(base > 1 && gcd(base, modulus) == 1);
        let r = (1..=modulus).find(|&k| (0..k).fold(1u64, |acc, _| acc * base % modulus) == 1).unwrap() as usize;
        prop_assume!(n % r == 0);
        let out = order_finding_demo(n, modulus, base).unwrap();
        for (y, p) in out.register1.iter().enumerate() {
            let want = if y % (n / r) == 0 { 1.0 / r as f64 } else { 0.0 };
            prop_assert!((p - want).abs() < 1e-12);
        }
        prop_assert_eq!(out.period as usize, r);
    }

    #[test]
    fn seeded_counts_are_reproducible(seed: u64, d in 2usize..6) {
        let rho = DensityMatrix::pure(&random_state(d, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let proj: Vec<CMatrix> = (0..d).map(|i| {
            let mut e = CMatrix::zeros(d, d);
            e[(i, i)] = C64::new(1.0, 0.0);
            e
        }).collect();
        let noise = NoiseModel::nominal(60.0);
        let a = simulate_counts(&rho, &proj, &noise, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = simulate_counts(&rho, &proj, &noise, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(
            a.iter().map(|r| r.counts).collect::<Vec<_>>(),
            b.iter().map(|r| r.counts).collect::<Vec<_>>()
        );
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn optical_train_never_adds_power(seed: u64) {
        let sim = Simulator::new(SetupConfig::desk_scale(3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(3, &mut rng);
        let design = GratingDesign::new(&u, sim.config().layout.clone()).unwrap();
        let prep = PrepSpec::new(random_state(3, &mut rng));
        let (_, planes) = sim.run_traced(&design, &prep).unwrap();
        let powers: Vec<f64> = planes.iter().map(|p| p.field.power()).collect();
        prop_assert!(powers.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{:?}", powers);
    }

    #[test]
    fn optical_train_is_linear_after_slm0(seed: u64) {
        let sim = Simulator::new(SetupConfig::desk_scale(3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let design = GratingDesign::new(&random_unitary(3, &mut rng), sim.config().layout.clone()).unwrap();
        let a1 = random_state(3, &mut rng);
        let a2 = random_state(3, &mut rng) * C64::new(0.3, -0.7);
        let run = |s: &spatial_qops::CVector| sim.propagate_from_slm0(&design, &sim.inject(s).unwrap(), None).unwrap();
        let sum = run(&(&a1 + &a2));
        let parts = run(&a1) + run(&a2);
        prop_assert!((&sum - &parts).norm() <= 1e-6 * sum.norm().max(1e-12));
    }
}

#[test]
fn shift_and_clock_run_at_unit_efficiency() {
    let sim = Simulator::new(SetupConfig::desk_scale(5).unwrap()).unwrap();
    for u in [shift_matrix(5, 2).unwrap(), clock_matrix(5, 1).unwrap()] {
        let design = GratingDesign::new(&u, sim.config().layout.clone()).unwrap();
        let t = sim.transfer_matrix(&design).unwrap();
        let eff = spatial_qops::synthesis::matrix_efficiency(&t, &u).unwrap();
        assert!(eff > 0.95, "{eff}");
    }
}

#[test]
fn pinhole_costs_a_factor_n_on_uniform_rows() {
    let n = 5;
    let sim = Simulator::new(SetupConfig::desk_scale(n).unwrap()).unwrap();
    let f = qft_matrix(n).unwrap();
    let design = GratingDesign::new(&f, sim.config().layout.clone()).unwrap();
    let t = sim.transfer_matrix(&design).unwrap();
    let end_to_end = spatial_qops::synthesis::matrix_efficiency(&t, &f).unwrap();
    let a = implemented_matrix(&design, Side::Splitter, &GridSpec::desk_scale()).unwrap();
    let splitting = a.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    assert!(end_to_end <= splitting / n as f64 * (1.0 + 1e-6), "{end_to_end} vs {splitting}/{n}");
}
