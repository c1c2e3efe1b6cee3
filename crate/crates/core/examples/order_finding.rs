//! Order finding for 15 with a 16-level first register.

use spatial_qops::qops::order_finding_demo;

fn main() -> spatial_qops::Result<()> {
    for a in [2, 7, 11, 13] {
        let r = order_finding_demo(16, 15, a)?;
        println!("a={a:>2}: peaks {:?}, r = {}, factors {:?}", r.peaks, r.period, r.factors);
    }
    Ok(())
}
