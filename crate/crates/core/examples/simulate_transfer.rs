//! Run a random unitary through the simulated two-SLM train, before and after
//! closed-loop refinement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatial_qops::linalg::random_unitary;
use spatial_qops::optsim::{refine_design, SetupConfig, Simulator};
use spatial_qops::synthesis::{matrix_efficiency, matrix_fidelity, Decomposition, GratingDesign};

fn main() -> spatial_qops::Result<()> {
    let sim = Simulator::new(SetupConfig::desk_scale(15)?)?;
    let u = random_unitary(15, &mut ChaCha8Rng::seed_from_u64(4));
    let design = GratingDesign::with_decomposition(&u, sim.config().layout.clone(), Decomposition::Balanced)?;
    let t = sim.transfer_matrix(&design)?;
    println!("unrefined: fidelity {:.6}, efficiency {:.4}", matrix_fidelity(&t, &u)?, matrix_efficiency(&t, &u)?);
    let (refined, report) = refine_design(&sim, &design, 2)?;
    let t = sim.transfer_matrix(&refined)?;
    println!("refinement passes {:?}", report.fidelities);
    println!("refined:   fidelity {:.6}, efficiency {:.4}", matrix_fidelity(&t, &u)?, matrix_efficiency(&t, &u)?);
    Ok(())
}
