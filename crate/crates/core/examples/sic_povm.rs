//! SIC fiducials: searched for small dimensions, built in for d = 15.

use spatial_qops::qops::{find_sic_fiducial, sic_deviation, sic_fiducial, sic_povm, SicOptions};

fn main() -> spatial_qops::Result<()> {
    for d in 2..=6 {
        let f = find_sic_fiducial(d, &SicOptions::default())?;
        let povm = sic_povm(d, &f)?;
        println!(
            "d={d}: {} elements, deviation {:.1e}, completeness {:.1e}",
            povm.len(),
            sic_deviation(&f),
            povm.completeness_residual()
        );
    }
    let f = sic_fiducial(15, &SicOptions::default(), None)?;
    println!("d=15: deviation {:.1e}", sic_deviation(&f));
    Ok(())
}
