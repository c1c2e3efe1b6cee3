use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spatial_qops::cli::{run, Command, RunConfig, OUT_ENV};

#[derive(Parser)]
#[command(name = "spatial-qops", version, about = "Grating synthesis, optical simulation and spatial-mode experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of modes (overrides the manifest).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design gratings for a target and write the SLM masks.
    Synth(Common),
    /// Run the optical train and extract the transfer matrix.
    Simulate(Common),
    /// QFT probed with the conjugate Fourier basis.
    QftTest(Common),
    /// Recover injected phase errors and program the compensated QFT.
    Calibrate(Common),
    /// Build a SIC fiducial and check it.
    Sic(Common),
    /// Count, reconstruct and score one state.
    Tomo(Common),
    /// Reconstruction quality against the sampling ratio.
    Sweep(Common),
    /// Order finding for 15.
    Shor(Common),
    /// Generalized Bell basis checks.
    Bell(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Synth(c) => (Command::Synth, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::QftTest(c) => (Command::QftTest, c),
        Cmd::Calibrate(c) => (Command::Calibrate, c),
        Cmd::Sic(c) => (Command::Sic, c),
        Cmd::Tomo(c) => (Command::Tomo, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Shor(c) => (Command::Shor, c),
        Cmd::Bell(c) => (Command::Bell, c),
    };
    match execute(cmd, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cmd: Command, common: Common) -> spatial_qops::Result<bool> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = common.n {
        cfg.n = n;
    }
    // clap already folded the env var into `out`; the manifest only wins
    // over the env var when no flag was given
    let flag = std::env::args().any(|a| a == "--out" || a.starts_with("--out="));
    let out = if flag { common.out.clone() } else { None };
    let out = match (out, &cfg.out, common.out) {
        (Some(o), _, _) => o,
        (None, Some(o), _) => o.clone(),
        (None, None, env) => env.unwrap_or_else(|| PathBuf::from("out")),
    };
    let outcome = run(cmd, &cfg, &out)?;
    for c in &outcome.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {} artifacts to {}", outcome.artifacts.len(), out.display());
    Ok(outcome.passed())
}
