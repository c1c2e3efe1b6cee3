//! Desk-scale ring layouts: spot geometry, crosstalk and the round trip of a
//! state through a sampled field.

use spatial_qops::modes::{encode, project_onto_modes, GridSpec};
use spatial_qops::optsim::desk_layout;
use spatial_qops::qops::fourier_basis;

fn main() -> spatial_qops::Result<()> {
    for n in [3, 5, 15] {
        let l = desk_layout(n)?;
        println!(
            "N={n:>2}: waist {:.3} mm, focal {:.4} m, min separation {:.3} mm, max overlap {:.1e}",
            l.waist() * 1e3,
            l.focal(),
            l.min_separation() * 1e3,
            l.max_overlap()
        );
    }
    let l = desk_layout(15)?;
    let psi = fourier_basis(15)?.column(2).into_owned();
    let field = encode(&psi, &l, &GridSpec::desk_scale())?;
    let back = project_onto_modes(&field, &l)?;
    println!("|<psi|decoded>| = {:.6}", psi.dotc(&back).norm() / back.norm());
    Ok(())
}
