//! Reconstruction quality against the fraction of SIC projectors measured.

use spatial_qops::qops::{fourier_basis, sic_fiducial, sic_povm, SicOptions};
use spatial_qops::tomo::{loglog_slope, sampling_sweep, spearman, DensityMatrix, NoiseModel, SweepOptions};

fn main() -> spatial_qops::Result<()> {
    let povm = sic_povm(15, &sic_fiducial(15, &SicOptions::default(), None)?)?;
    let rho = DensityMatrix::pure(&fourier_basis(15)?.column(2).into_owned())?;
    let ratios: Vec<f64> = (2..=10).map(|k| k as f64 / 10.0).collect();
    let noise = NoiseModel {
        loss_db: 21.2,
        ..NoiseModel::nominal(60.0)
    };
    let table = sampling_sweep(&rho, &povm, Some(&noise), &ratios, &SweepOptions::default())?;
    println!("ratio    m  fidelity  trace dist  rel. error");
    for r in &table.rows {
        println!(
            "{:>5.2} {:>4}  {:.3}±{:.3}  {:.3}       {:.3}",
            r.ratio, r.m, r.fidelity_mean, r.fidelity_std, r.trace_distance_mean, r.dm_error_mean
        );
    }
    let m: Vec<f64> = table.rows.iter().map(|r| r.m as f64).collect();
    let f: Vec<f64> = table.rows.iter().map(|r| r.fidelity_mean).collect();
    let e: Vec<f64> = table.rows.iter().map(|r| r.dm_error_mean).collect();
    println!("Spearman {:.3}, log-log slope {:.3}", spearman(&m, &f), loglog_slope(&m, &e));
    Ok(())
}
