//! Split a 7-mode QFT into splitter and combiner gratings, optimize the
//! grating weights and write the three SLM masks.

use std::path::Path;

use spatial_qops::io::write_phase_image;
use spatial_qops::optsim::{slm0_mask, slm1_mask, slm2_mask, PrepSpec, SetupConfig};
use spatial_qops::qops::qft_matrix;
use spatial_qops::synthesis::{synthesize, OptimizeOptions};

fn main() -> spatial_qops::Result<()> {
    let n = 7;
    let setup = SetupConfig::desk_scale(n)?;
    let (design, report) = synthesize(&qft_matrix(n)?, setup.layout.clone(), &OptimizeOptions::default())?;
    println!(
        "fidelity A {:.6}, B {:.6}, T {:.6}; efficiency T {:.4}; {} iterations",
        report.fidelity_a, report.fidelity_b, report.fidelity_t, report.efficiency_t, report.iterations
    );
    let out = Path::new("out/examples/synthesize_qft");
    write_phase_image(&out.join("slm0.png"), &slm0_mask(&PrepSpec::basis(0, n), &setup)?)?;
    write_phase_image(&out.join("slm1.png"), &slm1_mask(&design, &setup)?)?;
    write_phase_image(&out.join("slm2.png"), &slm2_mask(&design, &setup)?)?;
    println!("masks written to {}", out.display());
    Ok(())
}
