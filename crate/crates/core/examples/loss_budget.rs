//! Itemized insertion loss and the count rates it implies.

use spatial_qops::tomo::{loss_budget, nominal_components, NoiseModel};

fn main() {
    let b = loss_budget(15, &nominal_components());
    for item in &b.items {
        println!("{:<58} {:>6.2} dB", item.name, item.db);
    }
    println!("{:<58} {:>6.2} dB", "total", b.total_db);
    let noise = NoiseModel::nominal(60.0);
    println!(
        "at {} dB: {:.2} Hz detected, {:.1} signal and {:.1} accidental counts per minute",
        noise.loss_db,
        noise.effective_rate(),
        noise.signal_counts(),
        noise.dark_counts()
    );
}
