use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    cs_reconstruct, dm_fidelity, estimate_probabilities, simulate_counts, statistical_fidelity, trace_distance,
    CountRecord, CsOptions, DensityMatrix, NoiseModel,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qops::PovmSet;

/// Reconstruct from subset probabilities known only up to a common factor.
///
/// `shares` are normalized over the subset. The factor starts at the mass a
/// maximally mixed state would put on the subset and is then refreshed from
/// the current estimate until it settles.
pub fn subset_estimate(elements: &[CMatrix], shares: &[f64], opts: &CsOptions) -> Result<DensityMatrix> {
    let d = elements.first().map_or(1, |e| e.nrows());
    let mut scale: f64 = elements.iter().map(|e| e.trace().re).sum::<f64>() / d as f64;
    let mut est = None;
    for _ in 0..20 {
        let p: Vec<f64> = shares.iter().map(|q| (q * scale).clamp(0.0, 1.0)).collect();
        let rho = cs_reconstruct(elements, &p, opts)?;
        let next: f64 = elements.iter().map(|e| rho.expectation(e)).sum();
        est = Some(rho);
        let settled = (next - scale).abs() <= 1e-6 * scale;
        scale = next;
        if settled {
            break;
        }
    }
    Ok(est.expect("at least one pass"))
}

/// One simulated tomography experiment.
#[derive(Clone, Debug, Serialize)]
pub struct TomographyRun {
    /// Empty for noiseless runs.
    pub counts: Vec<CountRecord>,
    /// |⟨v_i|ψ⟩|² over the full POVM, normalized.
    pub reference: Vec<f64>,
    /// Estimated distribution over the full POVM.
    pub measured: Vec<f64>,
    pub statistical_fidelity: f64,
    /// Measured POVM indices used for the reconstruction.
    pub subset: Vec<usize>,
    pub estimate: DensityMatrix,
    pub fidelity: f64,
    pub trace_distance: f64,
    /// ‖ρ̂ − ρ‖_F / ‖ρ‖_F.
    pub dm_error: f64,
    /// ‖p̂ − p‖ / ‖p‖ over the subset probabilities fed to the reconstruction.
    pub projection_error: f64,
}

/// Measure every POVM element as a projective measurement |v⟩⟨v|, pick `m`
/// of them at random and reconstruct. `noise: None` feeds exact
/// probabilities.
pub fn run_tomography(
    state: &DensityMatrix,
    povm: &PovmSet,
    noise: Option<&NoiseModel>,
    m: usize,
    rng: &mut ChaCha8Rng,
    opts: &CsOptions,
) -> Result<TomographyRun> {
    let projectors: Vec<CMatrix> = (0..povm.len()).map(|i| povm.projector(i)).collect();
    let counts = match noise {
        Some(n) => simulate_counts(state, &projectors, n, rng)?,
        None => Vec::new(),
    };
    let subset = sample(rng, povm.len(), m.min(povm.len())).into_vec();
    finish(state, povm, counts, subset, opts)
}

fn finish(
    state: &DensityMatrix,
    povm: &PovmSet,
    counts: Vec<CountRecord>,
    subset: Vec<usize>,
    opts: &CsOptions,
) -> Result<TomographyRun> {
    let exact = povm.probabilities(state.matrix());
    let reference = normalize(&exact);
    let elements: Vec<CMatrix> = subset.iter().map(|&i| povm.elements[i].clone()).collect();
    let truth: Vec<f64> = subset.iter().map(|&i| exact[i]).collect();

    let (measured, estimate, fed) = if counts.is_empty() {
        let rho = cs_reconstruct(&elements, &truth, opts)?;
        (reference.clone(), rho, truth.clone())
    } else {
        let measured = estimate_probabilities(&counts)?;
        let picked: Vec<CountRecord> = subset.iter().map(|&i| counts[i].clone()).collect();
        let shares = estimate_probabilities(&picked)?;
        let rho = subset_estimate(&elements, &shares, opts)?;
        let mass: f64 = elements.iter().map(|e| rho.expectation(e)).sum();
        let fed = shares.iter().map(|q| q * mass).collect();
        (measured, rho, fed)
    };
    let projection_error = truth.iter().zip(&fed).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        / truth.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(TomographyRun {
        statistical_fidelity: statistical_fidelity(&measured, &reference)?,
        fidelity: dm_fidelity(&estimate, state)?,
        trace_distance: trace_distance(&estimate, state)?,
        dm_error: (estimate.matrix() - state.matrix()).norm() / state.matrix().norm(),
        projection_error,
        counts,
        reference,
        measured,
        subset,
        estimate,
    })
}

fn normalize(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter().map(|v| v / s).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    /// Independent data sets per ratio.
    pub trials: usize,
    pub seed: u64,
    pub cs: CsOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            trials: 5,
            seed: 0,
            cs: CsOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub m: usize,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub trace_distance_mean: f64,
    pub trace_distance_std: f64,
    pub dm_error_mean: f64,
    pub projection_error_mean: f64,
    pub fidelities: Vec<f64>,
    pub trace_distances: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Ratios dropped because they give fewer than d measurements.
    pub skipped: Vec<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Reconstruction quality against the number of measured POVM elements.
///
/// Each trial records one full data set and reuses it for every ratio, so
/// the ratios differ only in the subset drawn. Trial t draws its counts from
/// stream t of the master seed and its subsets from separate streams, so
/// the table does not depend on evaluation order.
pub fn sampling_sweep(
    state: &DensityMatrix,
    povm: &PovmSet,
    noise: Option<&NoiseModel>,
    ratios: &[f64],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    if opts.trials == 0 {
        return Err(Error::InvalidArgument("a sweep needs at least one trial".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(Error::InvalidArgument(format!("sampling ratio {r} outside (0, 1]")));
    }
    let total = povm.len();
    let projectors: Vec<CMatrix> = (0..total).map(|i| povm.projector(i)).collect();
    let mut data = Vec::with_capacity(opts.trials);
    for t in 0..opts.trials {
        let mut rng = stream(opts.seed, t as u64);
        data.push(match noise {
            Some(n) => simulate_counts(state, &projectors, n, &mut rng)?,
            None => Vec::new(),
        });
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (k, &ratio) in ratios.iter().enumerate() {
        let m = (ratio * total as f64).round() as usize;
        if m < povm.d {
            skipped.push(ratio);
            continue;
        }
        let mut runs = Vec::with_capacity(opts.trials);
        for (t, counts) in data.iter().enumerate() {
            let mut rng = stream(opts.seed, ((k as u64 + 1) << 32) | t as u64);
            let subset = sample(&mut rng, total, m).into_vec();
            runs.push(finish(state, povm, counts.clone(), subset, &opts.cs)?);
        }
        let fidelities: Vec<f64> = runs.iter().map(|r| r.fidelity).collect();
        let trace_distances: Vec<f64> = runs.iter().map(|r| r.trace_distance).collect();
        let (fidelity_mean, fidelity_std) = mean_std(&fidelities);
        let (trace_distance_mean, trace_distance_std) = mean_std(&trace_distances);
        rows.push(SweepRow {
            ratio,
            m,
            fidelity_mean,
            fidelity_std,
            trace_distance_mean,
            trace_distance_std,
            dm_error_mean: mean_std(&runs.iter().map(|r| r.dm_error).collect::<Vec<_>>()).0,
            projection_error_mean: mean_std(&runs.iter().map(|r| r.projection_error).collect::<Vec<_>>()).0,
            fidelities,
            trace_distances,
        });
    }
    Ok(SweepTable { rows, skipped })
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, _) = mean_std(x);
    let (my, _) = mean_std(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation (ties get average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, _) = mean_std(&lx);
    let (my, _) = mean_std(&ly);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
