//! Recover a random phase-error map from probe intensities and compensate it,
//! first on the bare matrix and then through the optical simulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatial_qops::calib::{apply_phase_error, calibrate, compensate, probe_intensities, row_quotient_fidelity, PhaseErrorMap};
use spatial_qops::experiments::calibrate_qft;
use spatial_qops::optsim::{SetupConfig, Simulator};
use spatial_qops::qops::qft_matrix;

fn main() -> spatial_qops::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let target = qft_matrix(15)?;
    let eps = PhaseErrorMap::random(15, &mut rng);
    let real = apply_phase_error(&target, &eps)?;
    let est = calibrate(&target, &probe_intensities(&real)?, &real.map(|z| z.norm()))?;
    let fixed = apply_phase_error(&compensate(&target, &est)?, &eps)?;
    println!(
        "matrix level: fidelity {:.4} -> {:.10}",
        row_quotient_fidelity(&real, &target)?,
        row_quotient_fidelity(&fixed, &target)?
    );

    let sim = Simulator::new(SetupConfig::desk_scale(15)?)?;
    let run = calibrate_qft(&sim, &eps, 1)?;
    let worst = |v: &[f64]| v.iter().copied().fold(1.0, f64::min);
    println!(
        "optical: fidelity {:.4} -> {:.5}, worst port share {:.3} -> {:.3}, phase RMS error {:.2e}",
        run.fidelity_before,
        run.fidelity_after,
        worst(&run.port_fraction_before),
        worst(&run.port_fraction_after),
        run.rms_error
    );
    Ok(())
}
