use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use super::displacement_operator;
use crate::error::{Error, Result};
use crate::io::ComplexArray;
use crate::linalg::{cis, complex_normal, CMatrix, CVector, C64};

/// Largest accepted deviation of |⟨ψ|D_mn|ψ⟩|² from 1/(d+1).
pub const SIC_TOLERANCE: f64 = 1e-6;

const BUILTIN: &str = include_str!("../../data/sic_fiducials.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SicOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Acceptance threshold on the largest overlap deviation.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SicOptions {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_iterations: 5_000,
            tolerance: SIC_TOLERANCE,
            seed: 0,
        }
    }
}

/// Rank-one SIC-POVM generated by the Weyl–Heisenberg orbit of a fiducial.
#[derive(Clone, Debug)]
pub struct PovmSet {
    pub d: usize,
    pub fiducial: CVector,
    /// D_mn|ψ⟩, index m·d + n.
    pub vectors: Vec<CVector>,
    /// Π_mn = D_mn|ψ⟩⟨ψ|D_mn†/d.
    pub elements: Vec<CMatrix>,
}

impl PovmSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The rank-one projector |v_i⟩⟨v_i| measured in a projective setting.
    pub fn projector(&self, i: usize) -> CMatrix {
        let v = &self.vectors[i];
        v * v.adjoint()
    }

    /// ‖Σ Π − I‖ in the largest-element norm.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.d, self.d);
        for e in &self.elements {
            sum += e;
        }
        crate::linalg::max_abs_diff(&sum, &CMatrix::identity(self.d, self.d))
    }

    /// Outcome probabilities Tr(Π_i ρ).
    pub fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| (v.adjoint() * rho * v)[(0, 0)].re / self.d as f64)
            .collect()
    }
}

/// Overlaps ⟨ψ|X^m Z^n|ψ⟩ without the τ phase, index m·d + n.
fn overlaps(psi: &[C64], omega: &[C64]) -> Vec<C64> {
    let d = psi.len();
    let mut c = vec![C64::new(0.0, 0.0); d * d];
    for m in 0..d {
        for x in 0..d {
            let p = psi[(x + m) % d].conj() * psi[x];
            for n in 0..d {
                c[m * d + n] += p * omega[(n * x) % d];
            }
        }
    }
    c
}

/// Largest |  |⟨ψ|D_mn|ψ⟩|²/‖ψ‖⁴ − 1/(d+1) | over (m, n) ≠ (0, 0).
pub fn sic_deviation(psi: &CVector) -> f64 {
    let d = psi.len();
    let omega = roots(d);
    let v: Vec<C64> = psi.iter().copied().collect();
    let c = overlaps(&v, &omega);
    let n4 = psi.norm_squared().powi(2);
    let target = 1.0 / (d as f64 + 1.0);
    c.iter().skip(1).map(|z| (z.norm_sqr() / n4 - target).abs()).fold(0.0, f64::max)
}

fn roots(d: usize) -> Vec<C64> {
    (0..d).map(|k| cis(2.0 * PI * k as f64 / d as f64)).collect()
}

/// Σ_{(m,n)≠0} (|c_mn|² − 1/(d+1))² and its Wirtinger gradient ∂/∂ψ̄.
fn objective(psi: &[C64], omega: &[C64]) -> (f64, Vec<C64>) {
    let d = psi.len();
    let c = overlaps(psi, omega);
    let target = 1.0 / (d as f64 + 1.0);
    let mut f = 0.0;
    let mut g = vec![C64::new(0.0, 0.0); d];
    for m in 0..d {
        for n in 0..d {
            if m == 0 && n == 0 {
                continue;
            }
            let z = c[m * d + n];
            let e = z.norm_sqr() - target;
            f += e * e;
            let w = 2.0 * e;
            for (y, gy) in g.iter_mut().enumerate() {
                let ym = (y + d - m) % d;
                let a = z.conj() * omega[(n * ym) % d] * psi[ym];
                let b = z * omega[(d - (n * y) % d) % d] * psi[(y + m) % d];
                *gy += (a + b) * w;
            }
        }
    }
    (f, g)
}

fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
}

/// Tangent component g − ψ·Re⟨ψ, g⟩ on the unit sphere.
fn tangent(psi: &[C64], g: &[C64]) -> Vec<C64> {
    let r: f64 = psi.iter().zip(g).map(|(p, q)| (p.conj() * q).re).sum();
    g.iter().zip(psi).map(|(q, p)| q - p * r).collect()
}

fn dot_re(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Riemannian gradient descent with Barzilai–Borwein steps and Armijo
/// backtracking from one starting vector. Returns the final vector.
fn descend(mut psi: Vec<C64>, omega: &[C64], max_iterations: usize) -> Vec<C64> {
    normalize(&mut psi);
    let (mut f, g) = objective(&psi, omega);
    let mut gt = tangent(&psi, &g);
    let mut alpha = 0.1;
    for _ in 0..max_iterations {
        let gg = dot_re(&gt, &gt);
        if f < 1e-30 || gg < 1e-32 {
            break;
        }
        let mut accepted = None;
        let mut a = alpha;
        for _ in 0..60 {
            let mut trial: Vec<C64> = psi.iter().zip(&gt).map(|(p, q)| p - q * a).collect();
            normalize(&mut trial);
            let (ft, g2) = objective(&trial, omega);
            if ft <= f - 1e-4 * a * gg {
                accepted = Some((trial, ft, g2));
                break;
            }
            a *= 0.5;
        }
        let Some((next, fn_, g2)) = accepted else { break };
        let gt2 = tangent(&next, &g2);
        let s: Vec<C64> = next.iter().zip(&psi).map(|(x, y)| x - y).collect();
        let yv: Vec<C64> = gt2.iter().zip(&gt).map(|(x, y)| x - y).collect();
        let sy = dot_re(&s, &yv);
        alpha = if sy > 0.0 { (dot_re(&s, &s) / sy).clamp(1e-6, 1e3) } else { 1.0 };
        psi = next;
        f = fn_;
        gt = gt2;
    }
    psi
}

/// Residuals |c_mn|² − 1/(d+1) and their Jacobian in (Re ψ, Im ψ).
fn residuals(psi: &[C64], omega: &[C64]) -> (DVector<f64>, DMatrix<f64>) {
    let d = psi.len();
    let c = overlaps(psi, omega);
    let target = 1.0 / (d as f64 + 1.0);
    let rows = d * d - 1;
    let mut r = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(rows, 2 * d);
    for (row, idx) in (1..d * d).enumerate() {
        let (m, n) = (idx / d, idx % d);
        let z = c[idx];
        r[row] = z.norm_sqr() - target;
        for y in 0..d {
            let ym = (y + d - m) % d;
            let h = z.conj() * omega[(n * ym) % d] * psi[ym] + z * omega[(d - (n * y) % d) % d] * psi[(y + m) % d];
            jac[(row, y)] = 2.0 * h.re;
            jac[(row, d + y)] = 2.0 * h.im;
        }
    }
    (r, jac)
}

/// Gauss–Newton refinement of a nearly converged fiducial. The SIC set can
/// be a continuous family (d = 3), where plain descent crawls; the
/// minimum-norm step handles the rank deficiency.
fn polish(mut psi: Vec<C64>, omega: &[C64]) -> Vec<C64> {
    let d = psi.len();
    let mut best = sic_deviation(&CVector::from_vec(psi.clone()));
    for _ in 0..30 {
        let (r, jac) = residuals(&psi, omega);
        let Ok(step) = jac.svd(true, true).solve(&r, 1e-10) else { break };
        let mut next: Vec<C64> = (0..d).map(|y| psi[y] - C64::new(step[y], step[d + y])).collect();
        normalize(&mut next);
        let dev = sic_deviation(&CVector::from_vec(next.clone()));
        if dev >= best {
            break;
        }
        best = dev;
        psi = next;
        if dev < 1e-14 {
            break;
        }
    }
    psi
}

/// Search for a SIC fiducial by minimizing Σ (|⟨ψ|D_mn|ψ⟩|² − 1/(d+1))² on
/// the unit sphere from seeded random starts.
pub fn find_sic_fiducial(d: usize, opts: &SicOptions) -> Result<CVector> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("SIC search needs d ≥ 2, got {d}")));
    }
    let omega = roots(d);
    let mut best = f64::INFINITY;
    for restart in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(restart as u64);
        let start: Vec<C64> = (0..d).map(|_| complex_normal(&mut rng)).collect();
        let mut psi = descend(start, &omega, opts.max_iterations);
        if sic_deviation(&CVector::from_vec(psi.clone())) < 1e-2 {
            psi = polish(psi, &omega);
        }
        let v = CVector::from_vec(psi);
        let dev = sic_deviation(&v);
        if dev < opts.tolerance {
            return Ok(v);
        }
        best = best.min(dev);
    }
    Err(Error::SicSearch {
        d,
        restarts: opts.restarts,
        best,
    })
}

/// Build the POVM from a validated fiducial.
pub fn sic_povm(d: usize, fiducial: &CVector) -> Result<PovmSet> {
    if fiducial.len() != d {
        return Err(Error::InvalidFiducial(format!("length {} for d = {d}", fiducial.len())));
    }
    let norm = fiducial.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidFiducial(format!("norm {norm} is not 1")));
    }
    let dev = sic_deviation(fiducial);
    if dev > SIC_TOLERANCE {
        return Err(Error::InvalidFiducial(format!("SIC overlap deviation {dev:.3e}")));
    }
    let mut vectors = Vec::with_capacity(d * d);
    let mut elements = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            let v = displacement_operator(d, m, n)? * fiducial;
            elements.push(&v * v.adjoint() / C64::new(d as f64, 0.0));
            vectors.push(v);
        }
    }
    Ok(PovmSet {
        d,
        fiducial: fiducial.clone(),
        vectors,
        elements,
    })
}

type CacheFile = BTreeMap<String, ComplexArray>;

fn parse_cache(text: &str) -> Result<CacheFile> {
    Ok(serde_json::from_str(text)?)
}

fn lookup(cache: &CacheFile, d: usize) -> Result<Option<CVector>> {
    match cache.get(&d.to_string()) {
        Some(a) => {
            let v = a.to_vector()?;
            Ok((v.len() == d && sic_deviation(&v) <= SIC_TOLERANCE).then_some(v))
        }
        None => Ok(None),
    }
}

/// Fiducial shipped with the crate, if any.
pub fn builtin_fiducial(d: usize) -> Option<CVector> {
    parse_cache(BUILTIN).ok().and_then(|c| lookup(&c, d).ok().flatten())
}

/// Fiducial stored in a cache file; `None` if the file or entry is missing or invalid.
pub fn load_fiducial(path: &Path, d: usize) -> Result<Option<CVector>> {
    if !path.exists() {
        return Ok(None);
    }
    lookup(&parse_cache(&std::fs::read_to_string(path)?)?, d)
}

pub fn save_fiducial(path: &Path, fiducial: &CVector) -> Result<()> {
    let mut cache = if path.exists() {
        parse_cache(&std::fs::read_to_string(path)?)?
    } else {
        CacheFile::new()
    };
    cache.insert(fiducial.len().to_string(), ComplexArray::from_vector(fiducial));
    crate::io::write_json(path, &cache)
}

/// Built-in fiducial, then the cache file, then a fresh search (saved to the cache).
pub fn sic_fiducial(d: usize, opts: &SicOptions, cache: Option<&Path>) -> Result<CVector> {
    if let Some(v) = builtin_fiducial(d) {
        return Ok(v);
    }
    if let Some(p) = cache {
        if let Some(v) = load_fiducial(p, d)? {
            return Ok(v);
        }
    }
    let v = find_sic_fiducial(d, opts)?;
    if let Some(p) = cache {
        save_fiducial(p, &v)?;
    }
    Ok(v)
}
