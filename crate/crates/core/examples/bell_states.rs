//! Generalized Bell states reached from |ψ00⟩ by local shift·clock operations.

use spatial_qops::qops::{bell_basis, bell_state, clock_matrix, shift_matrix};
use spatial_qops::CMatrix;

fn main() -> spatial_qops::Result<()> {
    let n = 5;
    let basis = bell_basis(n)?;
    let root = bell_state(n, 0, 0)?;
    let id = CMatrix::identity(n, n);
    println!("{} Bell states for N = {n}", basis.len());
    for (m, k) in [(0, 1), (1, 0), (2, 3)] {
        let u = shift_matrix(n, m)? * clock_matrix(n, k)?;
        let image = root.apply_local(&id, &u)?;
        println!("|<psi_{m}{k}| (I x X^{m} Z^{k}) |psi_00>| = {:.12}", bell_state(n, m, k)?.inner(&image).norm());
    }
    println!("<psi_01|psi_10> = {:.1e}", bell_state(n, 0, 1)?.inner(&bell_state(n, 1, 0)?).norm());
    Ok(())
}
