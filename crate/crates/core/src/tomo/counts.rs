use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Heralded single-photon source, insertion loss and accidental coincidences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Heralded pair rate before any loss, Hz.
    pub raw_rate: f64,
    /// Total insertion loss, dB.
    pub loss_db: f64,
    /// Accidental coincidences per minute.
    pub dark_coincidence_rate: f64,
    /// Integration time per measurement, s.
    pub duration: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::nominal(60.0)
    }
}

impl NoiseModel {
    /// 270 Hz raw, 32 dB loss, 2 accidentals per minute.
    pub fn nominal(duration: f64) -> Self {
        Self {
            raw_rate: 270.0,
            loss_db: 32.0,
            dark_coincidence_rate: 2.0,
            duration,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.raw_rate) && ok(self.loss_db) && ok(self.dark_coincidence_rate) && ok(self.duration)) {
            return Err(Error::InvalidArgument(format!("noise parameters must be finite and non-negative: {self:?}")));
        }
        Ok(())
    }

    /// R_eff = raw_rate·10^(−loss/10).
    pub fn effective_rate(&self) -> f64 {
        self.raw_rate * 10f64.powf(-self.loss_db / 10.0)
    }

    pub fn dark_rate_hz(&self) -> f64 {
        self.dark_coincidence_rate / 60.0
    }

    /// Mean accidental counts in one integration window.
    pub fn dark_counts(&self) -> f64 {
        self.dark_rate_hz() * self.duration
    }

    /// Mean signal counts for unit projection probability.
    pub fn signal_counts(&self) -> f64 {
        self.effective_rate() * self.duration
    }
}

/// Coincidences recorded for one projector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub projector_id: usize,
    pub counts: u64,
    /// Integration time, s.
    pub duration: f64,
    /// Effective source rate reaching the detector, Hz.
    pub source_rate: f64,
    /// Accidental coincidence rate, Hz.
    pub dark_rate: f64,
}

/// Poisson means Tr(Π_i ρ)·R_eff·t + dark·t.
pub fn expected_counts(state: &DensityMatrix, projectors: &[CMatrix], noise: &NoiseModel) -> Result<Vec<f64>> {
    noise.validate()?;
    let d = state.d();
    if let Some(p) = projectors.iter().find(|p| p.shape() != (d, d)) {
        return Err(Error::Dimension(format!("projector is {:?}, state is {d}x{d}", p.shape())));
    }
    Ok(projectors
        .iter()
        .map(|p| state.expectation(p).max(0.0) * noise.signal_counts() + noise.dark_counts())
        .collect())
}

/// Draw one count record per projector. Identical inputs and RNG state give
/// identical records.
pub fn simulate_counts<R: Rng + ?Sized>(
    state: &DensityMatrix,
    projectors: &[CMatrix],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<CountRecord>> {
    let means = expected_counts(state, projectors, noise)?;
    means
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let counts = if lambda > 0.0 {
                Poisson::new(lambda)
                    .map_err(|e| Error::InvalidArgument(format!("Poisson mean {lambda}: {e}")))?
                    .sample(rng) as u64
            } else {
                0
            };
            Ok(CountRecord {
                projector_id: i,
                counts,
                duration: noise.duration,
                source_rate: noise.effective_rate(),
                dark_rate: noise.dark_rate_hz(),
            })
        })
        .collect()
}

/// max(counts − dark·t, 0), normalized to unit sum over the given records.
pub fn estimate_probabilities(records: &[CountRecord]) -> Result<Vec<f64>> {
    let raw: Vec<f64> = records
        .iter()
        .map(|r| (r.counts as f64 - r.dark_rate * r.duration).max(0.0))
        .collect();
    let s: f64 = raw.iter().sum();
    if s <= 0.0 {
        return Err(Error::InvalidArgument(
            "no counts above the accidental level; nothing to normalize".into(),
        ));
    }
    Ok(raw.iter().map(|v| v / s).collect())
}
