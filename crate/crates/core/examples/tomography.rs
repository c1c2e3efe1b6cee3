//! Compressed-sensing reconstruction of a 15-dimensional state from 100 of
//! the 225 SIC projectors, at several loss levels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatial_qops::qops::{fourier_basis, sic_fiducial, sic_povm, SicOptions};
use spatial_qops::tomo::{run_tomography, CsOptions, DensityMatrix, NoiseModel};

fn main() -> spatial_qops::Result<()> {
    let povm = sic_povm(15, &sic_fiducial(15, &SicOptions::default(), None)?)?;
    let rho = DensityMatrix::pure(&fourier_basis(15)?.column(2).into_owned())?;
    let opts = CsOptions::default();
    let clean = run_tomography(&rho, &povm, None, 100, &mut ChaCha8Rng::seed_from_u64(0), &opts)?;
    println!("noiseless: fidelity {:.5}", clean.fidelity);
    for loss in [32.0, 25.0, 21.2] {
        let noise = NoiseModel {
            loss_db: loss,
            ..NoiseModel::nominal(60.0)
        };
        let r = run_tomography(&rho, &povm, Some(&noise), 100, &mut ChaCha8Rng::seed_from_u64(0), &opts)?;
        println!(
            "{loss:>4} dB: {:.1} signal counts per unit projector, statistical fidelity {:.3}, fidelity {:.3}, trace distance {:.3}",
            noise.signal_counts(),
            r.statistical_fidelity,
            r.fidelity,
            r.trace_distance
        );
    }
    Ok(())
}
