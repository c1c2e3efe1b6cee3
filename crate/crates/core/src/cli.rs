//! Configuration and command implementations behind the `spatial-qops`
//! binary. Every command writes its artifacts under an output directory and
//! returns the invariant checks it ran; the binary exits non-zero if any
//! failed.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::calib::PhaseErrorMap;
use crate::error::{Error, Result};
use crate::experiments::{calibrate_qft, qft_fourier_test, refined_design};
use crate::io::{read_json, write_csv, write_intensity_image, write_json, write_phase_image, ComplexArray};
use crate::linalg::{random_state, CMatrix, C64};
use crate::modes::{SampledField, StateVector};
use crate::optsim::{slm0_mask, slm1_mask, slm2_mask, PrepSpec, SetupConfig, Simulator};
use crate::qops::{
    bell_basis, bell_state, clock_matrix, fourier_basis, order_finding_demo, qft_matrix, shift_matrix, sic_deviation,
    sic_fiducial, sic_povm, SicOptions, SIC_TOLERANCE,
};
use crate::synthesis::{
    extract_matrix, implemented_matrix, matrix_fidelity, phase_only_grating, synthesize, OptimizeOptions, Side,
};
use crate::tomo::{
    loglog_slope, run_tomography, sampling_sweep, spearman, CsOptions, DensityMatrix, NoiseModel, SweepOptions,
};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SPATIAL_QOPS_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Synth,
    Simulate,
    QftTest,
    Calibrate,
    Sic,
    Tomo,
    Sweep,
    Shor,
    Bell,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Simulate => "simulate",
            Command::QftTest => "qft-test",
            Command::Calibrate => "calibrate",
            Command::Sic => "sic",
            Command::Tomo => "tomo",
            Command::Sweep => "sweep",
            Command::Shor => "shor",
            Command::Bell => "bell",
        }
    }
}

/// Named target operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    Qft,
    Shift {
        #[serde(default = "one")]
        m: usize,
    },
    Clock {
        #[serde(default = "one")]
        k: usize,
    },
    Identity,
    /// JSON complex array (`rows`, `cols`, `data` of [re, im]).
    File { path: PathBuf },
}

/// Named states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    /// Computational mode |φ_index⟩ (0-based).
    Basis { index: usize },
    /// Conjugate Fourier mode |ω_index⟩.
    Fourier { index: usize },
    /// Haar-random pure state.
    Random { seed: u64 },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    /// 270 Hz, 32 dB, 2 accidentals/min, with the experiment's own
    /// integration time (120 s per QFT point, 60 s per projector).
    Nominal,
    None,
    Custom(NoiseModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskFormat {
    Png,
    Pgm,
    /// Unquantized phases as JSON.
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Injected phase-error map (N×N JSON array); random when absent.
    pub errors: Option<PathBuf>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { errors: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SicConfig {
    /// Dimension; defaults to `n`.
    pub d: Option<usize>,
    pub options: SicOptions,
    /// Fiducial cache file consulted before searching.
    pub cache: Option<PathBuf>,
}

impl Default for SicConfig {
    fn default() -> Self {
        Self {
            d: None,
            options: SicOptions::default(),
            cache: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    pub state: StateSpec,
    /// POVM elements used for the reconstruction; 100/225 of the d² SIC
    /// elements when absent.
    pub measurements: Option<usize>,
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub cs: CsOptions,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            state: StateSpec::Basis { index: 3 },
            measurements: None,
            ratios: (2..=10).map(|k| k as f64 / 10.0).collect(),
            trials: 5,
            cs: CsOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShorConfig {
    pub register: usize,
    pub modulus: u64,
    pub base: u64,
}

impl Default for ShorConfig {
    fn default() -> Self {
        Self {
            register: 16,
            modulus: 15,
            base: 2,
        }
    }
}

fn one() -> usize {
    1
}

/// One experiment manifest. Sections mirror the library types; command-line
/// flags override `seed`, `out` and `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// If set, the manifest may only be run by this command.
    pub experiment: Option<Command>,
    pub n: usize,
    pub target: TargetSpec,
    /// Full optical setup; the desk-scale setup for `n` when absent.
    pub setup: Option<SetupConfig>,
    pub optimize: OptimizeOptions,
    /// Closed-loop refinement passes against the simulator.
    pub refine_passes: usize,
    /// State launched by SLM0 for `synth` and `simulate`.
    pub input: StateSpec,
    pub noise: NoiseSpec,
    pub mask_format: MaskFormat,
    pub calibration: CalibrationConfig,
    pub sic: SicConfig,
    pub tomography: TomographyConfig,
    pub shor: ShorConfig,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            n: 15,
            target: TargetSpec::Qft,
            setup: None,
            optimize: OptimizeOptions::default(),
            refine_passes: 1,
            input: StateSpec::Basis { index: 0 },
            noise: NoiseSpec::Nominal,
            mask_format: MaskFormat::Png,
            calibration: CalibrationConfig::default(),
            sic: SicConfig::default(),
            tomography: TomographyConfig::default(),
            shor: ShorConfig::default(),
            out: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::InvalidArgument(format!("config {} does not exist", path.display())));
        }
        read_json(path)
    }

    /// Referenced files exist and dimensions agree across sections.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let mut files = Vec::new();
        if let TargetSpec::File { path } = &self.target {
            files.push(path);
        }
        for s in [&self.input, &self.tomography.state] {
            if let StateSpec::File { path } = s {
                files.push(path);
            }
        }
        files.extend(self.calibration.errors.iter());
        if let Some(p) = files.iter().find(|p| !p.exists()) {
            return Err(Error::InvalidArgument(format!("referenced file {} does not exist", p.display())));
        }
        if let Some(s) = &self.setup {
            if s.dim() != self.n {
                return Err(Error::Dimension(format!("setup has {} modes but n = {}", s.dim(), self.n)));
            }
        }
        if let NoiseSpec::Custom(m) = &self.noise {
            m.validate()?;
        }
        Ok(())
    }

    pub fn setup_config(&self) -> Result<SetupConfig> {
        match &self.setup {
            Some(s) => Ok(s.clone()),
            None => SetupConfig::desk_scale(self.n),
        }
    }

    pub fn target_matrix(&self) -> Result<CMatrix> {
        let n = self.n;
        let t = match &self.target {
            TargetSpec::Qft => qft_matrix(n)?,
            TargetSpec::Shift { m } => shift_matrix(n, *m)?,
            TargetSpec::Clock { k } => clock_matrix(n, *k)?,
            TargetSpec::Identity => CMatrix::identity(n, n),
            TargetSpec::File { path } => read_json::<ComplexArray>(path)?.to_matrix()?,
        };
        if t.shape() != (n, n) {
            return Err(Error::Dimension(format!("target is {:?}, n = {n}", t.shape())));
        }
        Ok(t)
    }

    pub fn state(&self, spec: &StateSpec, d: usize) -> Result<StateVector> {
        let v = match spec {
            StateSpec::Basis { index } | StateSpec::Fourier { index } if *index >= d => {
                return Err(Error::InvalidArgument(format!("state index {index} out of range for d = {d}")));
            }
            StateSpec::Basis { index } => {
                let mut v = StateVector::zeros(d);
                v[*index] = C64::new(1.0, 0.0);
                v
            }
            StateSpec::Fourier { index } => fourier_basis(d)?.column(*index).into_owned(),
            StateSpec::Random { seed } => random_state(d, &mut ChaCha8Rng::seed_from_u64(*seed)),
            StateSpec::File { path } => read_json::<ComplexArray>(path)?.to_vector()?,
        };
        if v.len() != d {
            return Err(Error::Dimension(format!("state has {} entries, expected {d}", v.len())));
        }
        Ok(v)
    }

    /// Noise for an experiment with nominal integration time `duration`.
    pub fn noise_model(&self, duration: f64) -> Option<NoiseModel> {
        match &self.noise {
            NoiseSpec::Nominal => Some(NoiseModel::nominal(duration).with_seed(self.seed)),
            NoiseSpec::None => None,
            NoiseSpec::Custom(m) => Some(m.clone()),
        }
    }

    /// Flag, then manifest, then `$SPATIAL_QOPS_OUT`, then `./out`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.out.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Artifacts written and checks performed by one command.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    fn wrote(&mut self, p: PathBuf) {
        self.artifacts.push(p);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Run `cmd` with `cfg`, writing under `out`.
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    if let Some(e) = cfg.experiment {
        if e != cmd {
            return Err(Error::InvalidArgument(format!(
                "manifest is for `{}`, not `{}`",
                e.name(),
                cmd.name()
            )));
        }
    }
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let mut o = Outcome::default();
    match cmd {
        Command::Synth => cmd_synth(cfg, out, &mut o)?,
        Command::Simulate => cmd_simulate(cfg, out, &mut o)?,
        Command::QftTest => cmd_qft_test(cfg, out, &mut o)?,
        Command::Calibrate => cmd_calibrate(cfg, out, &mut o)?,
        Command::Sic => cmd_sic(cfg, out, &mut o)?,
        Command::Tomo => cmd_tomo(cfg, out, &mut o)?,
        Command::Sweep => cmd_sweep(cfg, out, &mut o)?,
        Command::Shor => cmd_shor(cfg, out, &mut o)?,
        Command::Bell => cmd_bell(cfg, out, &mut o)?,
    }
    let summary = out.join("checks.json");
    write_json(&summary, &o.checks)?;
    o.wrote(summary);
    Ok(o)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn save_mask(cfg: &RunConfig, dir: &Path, name: &str, field: &SampledField, o: &mut Outcome) -> Result<()> {
    let path = match cfg.mask_format {
        MaskFormat::Png => dir.join(format!("{name}.png")),
        MaskFormat::Pgm => dir.join(format!("{name}.pgm")),
        MaskFormat::Json => dir.join(format!("{name}.json")),
    };
    match cfg.mask_format {
        MaskFormat::Json => {
            let phases: Vec<f64> = field.data.iter().map(|z| z.arg()).collect();
            write_json(
                &path,
                &serde_json::json!({ "grid": field.grid, "phase": phases }),
            )?;
        }
        _ => write_phase_image(&path, field)?,
    }
    o.wrote(path);
    Ok(())
}

fn matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = std::iter::once("row".to_string())
        .chain((0..m.ncols()).map(|j| format!("col{j}")))
        .collect();
    let rows: Vec<Vec<String>> = m
        .row_iter()
        .enumerate()
        .map(|(i, r)| std::iter::once(i.to_string()).chain(r.iter().map(|v| fmt(*v))).collect())
        .collect();
    write_csv(path, &header, &rows)
}

fn cmd_synth(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let setup = cfg.setup_config()?;
    let target = cfg.target_matrix()?;
    let (design, report) = synthesize(&target, setup.layout.clone(), &cfg.optimize)?;
    let masks = out.join("masks");
    let input = cfg.state(&cfg.input, cfg.n)?;
    save_mask(cfg, &masks, "slm0", &slm0_mask(&PrepSpec::new(input), &setup)?, o)?;
    save_mask(cfg, &masks, "slm1", &slm1_mask(&design, &setup)?, o)?;
    save_mask(cfg, &masks, "slm2", &slm2_mask(&design, &setup)?, o)?;

    // per-aperture gratings as 8-bit images, read back and re-extracted
    let lattice = &cfg.optimize.lattice;
    let mut reextracted = Vec::new();
    for (side, name) in [(Side::Splitter, "splitter"), (Side::Combiner, "combiner")] {
        let mut fields = Vec::with_capacity(cfg.n);
        for i in 0..cfg.n {
            let g = phase_only_grating(&design, side, i, lattice)?;
            let p = masks.join("gratings").join(format!("{name}_{i:02}.png"));
            write_phase_image(&p, &g)?;
            fields.push(crate::io::read_phase_image(&p, g.grid)?);
        }
        let got = extract_matrix(&fields, side, &design.layout)?;
        let want = implemented_matrix(&design, side, lattice)?;
        reextracted.push(matrix_fidelity(&got, &want)?);
    }
    o.wrote(masks.join("gratings"));
    let path = out.join("synthesis_report.json");
    write_json(
        &path,
        &serde_json::json!({
            "n": cfg.n,
            "report": report,
            "reextracted_fidelity_splitter": reextracted[0],
            "reextracted_fidelity_combiner": reextracted[1],
        }),
    )?;
    o.wrote(path);
    let worst = reextracted.iter().copied().fold(1.0, f64::min);
    o.check("masks re-extract to the implemented factors", worst > 0.999, format!("worst fidelity {worst:.6}"));
    o.check(
        "report fidelities lie in [0, 1]",
        [report.fidelity_a, report.fidelity_b, report.fidelity_t].iter().all(|f| (0.0..=1.0 + 1e-12).contains(f)),
        format!("fidelity_t {:.6}", report.fidelity_t),
    );
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let sim = Simulator::new(cfg.setup_config()?)?;
    let target = cfg.target_matrix()?;
    let (design, refine) = refined_design(&sim, &target, cfg.refine_passes)?;
    let t_exp = sim.transfer_matrix(&design)?;
    let fidelity = matrix_fidelity(&t_exp, &target)?;
    let p = out.join("transfer_matrix.json");
    write_json(&p, &ComplexArray::from_matrix(&t_exp))?;
    o.wrote(p);
    let p = out.join("transfer_intensity.csv");
    matrix_csv(&p, &t_exp.map(|z| z.norm_sqr()))?;
    o.wrote(p);

    let input = cfg.state(&cfg.input, cfg.n)?;
    let (state, planes) = sim.run_traced(&design, &PrepSpec::new(input.clone()))?;
    for plane in &planes {
        let p = out.join("planes").join(format!("{}.png", plane.name));
        write_intensity_image(&p, &plane.field)?;
        o.wrote(p);
    }
    let p = out.join("simulation_report.json");
    write_json(
        &p,
        &serde_json::json!({
            "n": cfg.n,
            "fidelity": fidelity,
            "refine": refine,
            "output_state": ComplexArray::from_vector(&state),
        }),
    )?;
    o.wrote(p);
    o.check("fidelity lies in [0, 1]", (0.0..=1.0 + 1e-12).contains(&fidelity), format!("{fidelity:.6}"));
    Ok(())
}

fn cmd_qft_test(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let sim = Simulator::new(cfg.setup_config()?)?;
    let noise = cfg.noise_model(120.0);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.as_ref().map_or(cfg.seed, |n| n.seed));
    let r = qft_fourier_test(&sim, cfg.refine_passes, noise.as_ref(), &mut rng)?;
    let n = r.n;
    let mut rows = Vec::with_capacity(n * n);
    for m in 0..n {
        for k in 0..n {
            rows.push(vec![
                m.to_string(),
                k.to_string(),
                fmt(r.intensities[m][k]),
                r.counts.get(m).map_or(String::new(), |c| c[k].to_string()),
                fmt(r.estimated[m][k]),
            ]);
        }
    }
    let p = out.join("qft_fourier_basis.csv");
    write_csv(&p, &["output_m", "input_n", "simulated_probability", "counts", "estimated_probability"], &rows)?;
    o.wrote(p);
    let p = out.join("qft_report.json");
    write_json(
        &p,
        &serde_json::json!({
            "n": n,
            "fidelity_noiseless": r.fidelity_noiseless,
            "fidelity": r.fidelity,
            "noise": noise,
            "refine": r.refine,
        }),
    )?;
    o.wrote(p);
    o.check("fidelity lies in [0, 1]", (0.0..=1.0 + 1e-12).contains(&r.fidelity), format!("{:.4}", r.fidelity));
    Ok(())
}

fn cmd_calibrate(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let sim = Simulator::new(cfg.setup_config()?)?;
    let injected = match &cfg.calibration.errors {
        Some(p) => read_json::<PhaseErrorMap>(p)?,
        None => PhaseErrorMap::random(cfg.n, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
    };
    let r = calibrate_qft(&sim, &injected, cfg.refine_passes)?;
    for (name, map) in [("injected_errors.json", &r.injected), ("recovered_errors.json", &r.recovered)] {
        let p = out.join(name);
        write_json(&p, map)?;
        o.wrote(p);
    }
    let rows: Vec<Vec<String>> = (0..cfg.n)
        .map(|j| vec![j.to_string(), fmt(r.port_fraction_before[j]), fmt(r.port_fraction_after[j])])
        .collect();
    let p = out.join("port_fractions.csv");
    write_csv(&p, &["input_n", "before", "after"], &rows)?;
    o.wrote(p);
    let p = out.join("calibration_report.json");
    write_json(
        &p,
        &serde_json::json!({
            "rms_error": r.rms_error,
            "fidelity_before": r.fidelity_before,
            "fidelity_after": r.fidelity_after,
        }),
    )?;
    o.wrote(p);
    let worst = r.port_fraction_after.iter().copied().fold(1.0, f64::min);
    o.check("every Fourier input lands in its own port", worst > 0.9, format!("worst share {worst:.4}"));
    Ok(())
}

fn cmd_sic(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let d = cfg.sic.d.unwrap_or(cfg.n);
    let opts = SicOptions {
        seed: cfg.seed,
        ..cfg.sic.options.clone()
    };
    let fid = sic_fiducial(d, &opts, cfg.sic.cache.as_deref())?;
    let povm = sic_povm(d, &fid)?;
    let deviation = sic_deviation(&fid);
    let completeness = povm.completeness_residual();
    let p = out.join("fiducial.json");
    write_json(&p, &ComplexArray::from_vector(&fid))?;
    o.wrote(p);
    let p = out.join("sic_report.json");
    write_json(
        &p,
        &serde_json::json!({ "d": d, "elements": povm.len(), "deviation": deviation, "completeness_residual": completeness }),
    )?;
    o.wrote(p);
    o.check("SIC deviation", deviation < SIC_TOLERANCE, format!("{deviation:.3e}"));
    o.check("POVM completeness", completeness < 1e-10, format!("{completeness:.3e}"));
    Ok(())
}

fn tomo_setup(cfg: &RunConfig) -> Result<(crate::qops::PovmSet, DensityMatrix)> {
    let d = cfg.n;
    let fid = sic_fiducial(d, &cfg.sic.options, cfg.sic.cache.as_deref())?;
    let povm = sic_povm(d, &fid)?;
    let state = DensityMatrix::pure(&cfg.state(&cfg.tomography.state, d)?)?;
    Ok((povm, state))
}

fn cmd_tomo(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let (povm, state) = tomo_setup(cfg)?;
    let noise = cfg.noise_model(60.0);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.as_ref().map_or(cfg.seed, |n| n.seed));
    let d2 = povm.len();
    let m = cfg.tomography.measurements.unwrap_or_else(|| ((d2 * 100 + 112) / 225).max(povm.d));
    if m < povm.d || m > povm.len() {
        return Err(Error::InvalidArgument(format!("{m} measurements outside [{}, {}]", povm.d, povm.len())));
    }
    let r = run_tomography(&state, &povm, noise.as_ref(), m, &mut rng, &cfg.tomography.cs)?;
    let used: std::collections::HashSet<usize> = r.subset.iter().copied().collect();
    let rows: Vec<Vec<String>> = (0..povm.len())
        .map(|i| {
            vec![
                i.to_string(),
                r.counts.get(i).map_or(String::new(), |c| c.counts.to_string()),
                fmt(r.reference[i]),
                fmt(r.measured[i]),
                (used.contains(&i) as u8).to_string(),
            ]
        })
        .collect();
    let p = out.join("tomography_counts.csv");
    write_csv(&p, &["projector_id", "counts", "reference_probability", "measured_probability", "used"], &rows)?;
    o.wrote(p);
    let p = out.join("density_matrix.json");
    write_json(&p, &r.estimate)?;
    o.wrote(p);
    let p = out.join("tomography_report.json");
    write_json(
        &p,
        &serde_json::json!({
            "d": povm.d,
            "measurements": m,
            "noise": noise,
            "statistical_fidelity": r.statistical_fidelity,
            "fidelity": r.fidelity,
            "trace_distance": r.trace_distance,
            "dm_error": r.dm_error,
            "projection_error": r.projection_error,
        }),
    )?;
    o.wrote(p);
    let bound = (1.0 - r.fidelity).sqrt();
    o.check(
        "trace distance within the fidelity bound",
        r.trace_distance <= bound + 1e-9,
        format!("T {:.4} ≤ √(1−F) {:.4}", r.trace_distance, bound),
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let (povm, state) = tomo_setup(cfg)?;
    let noise = cfg.noise_model(60.0);
    let opts = SweepOptions {
        trials: cfg.tomography.trials,
        seed: noise.as_ref().map_or(cfg.seed, |n| n.seed),
        cs: cfg.tomography.cs.clone(),
    };
    let table = sampling_sweep(&state, &povm, noise.as_ref(), &cfg.tomography.ratios, &opts)?;
    for r in &table.skipped {
        eprintln!("warning: ratio {r} gives fewer than d measurements; skipped");
    }
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.ratio),
                r.m.to_string(),
                fmt(r.fidelity_mean),
                fmt(r.fidelity_std),
                fmt(r.trace_distance_mean),
                fmt(r.trace_distance_std),
                fmt(r.dm_error_mean),
                fmt(r.projection_error_mean),
            ]
        })
        .collect();
    let p = out.join("sampling_sweep.csv");
    write_csv(
        &p,
        &[
            "ratio",
            "m",
            "fidelity_mean",
            "fidelity_std",
            "trace_distance_mean",
            "trace_distance_std",
            "dm_error_mean",
            "projection_error_mean",
        ],
        &rows,
    )?;
    o.wrote(p);
    let ms: Vec<f64> = table.rows.iter().map(|r| r.m as f64).collect();
    let fid: Vec<f64> = table.rows.iter().map(|r| r.fidelity_mean).collect();
    let err: Vec<f64> = table.rows.iter().map(|r| r.dm_error_mean).collect();
    let (rho, slope) = if ms.len() >= 2 {
        (spearman(&ms, &fid), loglog_slope(&ms, &err))
    } else {
        (f64::NAN, f64::NAN)
    };
    let p = out.join("sweep_report.json");
    write_json(
        &p,
        &serde_json::json!({ "spearman_fidelity_vs_m": rho, "loglog_slope_error_vs_m": slope, "skipped": table.skipped, "noise": noise }),
    )?;
    o.wrote(p);
    let worst = table
        .rows
        .iter()
        .flat_map(|r| r.fidelities.iter().zip(&r.trace_distances).map(|(f, t)| t - (1.0 - f).sqrt()))
        .fold(f64::NEG_INFINITY, f64::max);
    o.check("trace distance within the fidelity bound", worst <= 1e-9, format!("max excess {worst:.3e}"));
    Ok(())
}

fn cmd_shor(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let s = &cfg.shor;
    let r = order_finding_demo(s.register, s.modulus, s.base)?;
    let rows: Vec<Vec<String>> = r.register1.iter().enumerate().map(|(y, p)| vec![y.to_string(), fmt(*p)]).collect();
    let p = out.join("register1.csv");
    write_csv(&p, &["y", "probability"], &rows)?;
    o.wrote(p);
    let p = out.join("joint_distribution.csv");
    matrix_csv(&p, &r.joint)?;
    o.wrote(p);
    let p = out.join("shor_report.json");
    write_json(
        &p,
        &serde_json::json!({
            "register": s.register, "modulus": s.modulus, "base": s.base,
            "peaks": r.peaks, "period": r.period, "factors": r.factors,
        }),
    )?;
    o.wrote(p);
    let brute = (1..=s.modulus).find(|&k| {
        let mut acc = 1u128;
        for _ in 0..k {
            acc = acc * s.base as u128 % s.modulus as u128;
        }
        acc == 1
    });
    o.check("period matches brute force", brute == Some(r.period), format!("{} vs {brute:?}", r.period));
    Ok(())
}

fn cmd_bell(cfg: &RunConfig, out: &Path, o: &mut Outcome) -> Result<()> {
    let n = cfg.n;
    let basis = bell_basis(n)?;
    let mut gram_defect: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let want = if i == j { 1.0 } else { 0.0 };
            gram_defect = gram_defect.max((a.inner(b) - C64::new(want, 0.0)).norm());
        }
    }
    let root = bell_state(n, 0, 0)?;
    let id = CMatrix::identity(n, n);
    let mut rows = Vec::with_capacity(n * n);
    let mut worst: f64 = 0.0;
    for m in 0..n {
        for k in 0..n {
            let u = shift_matrix(n, m)? * clock_matrix(n, k)?;
            let overlap = bell_state(n, m, k)?.inner(&root.apply_local(&id, &u)?).norm();
            worst = worst.max((overlap - 1.0).abs());
            rows.push(vec![m.to_string(), k.to_string(), fmt(overlap)]);
        }
    }
    let p = out.join("bell_reachability.csv");
    write_csv(&p, &["m", "n", "overlap_with_shift_clock_image"], &rows)?;
    o.wrote(p);
    let p = out.join("bell_report.json");
    write_json(
        &p,
        &serde_json::json!({ "n": n, "states": basis.len(), "gram_defect": gram_defect, "reachability_defect": worst }),
    )?;
    o.wrote(p);
    o.check("pairwise orthonormal", gram_defect < 1e-10, format!("{gram_defect:.2e}"));
    o.check("reachable by local shift·clock", worst < 1e-10, format!("{worst:.2e}"));
    Ok(())
}
