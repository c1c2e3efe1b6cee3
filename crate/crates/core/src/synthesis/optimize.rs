use serde::{Deserialize, Serialize};

use super::grating::{clip, grating_coefficients, grating_vectors, Aperture, GratingBasis, Side};
use super::{matrix_efficiency, matrix_fidelity, Decomposition, GratingDesign};
use crate::error::{Error, Result};
use crate::linalg::{hadamard, CMatrix, C64};
use crate::modes::{GridSpec, ModeLayout};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Exact derivative of the clipped-grating fidelity.
    #[default]
    Analytic,
    /// Central differences with a relative step.
    CentralDifference { relative_step_millis: u32 },
}

impl GradientMethod {
    /// Central differences with step 10⁻³·μ.
    pub const fn central() -> Self {
        GradientMethod::CentralDifference { relative_step_millis: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeOptions {
    /// Initial step length, measured in the max-norm of the normalized gradient.
    pub step: f64,
    pub max_iterations: usize,
    /// Stop once an accepted step improves fidelity by less than this.
    pub tolerance: f64,
    pub gradient: GradientMethod,
    pub decomposition: Decomposition,
    /// Pixel lattice the apertures are sampled on.
    pub lattice: GridSpec,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            step: 0.05,
            max_iterations: 500,
            tolerance: 1e-8,
            gradient: GradientMethod::Analytic,
            decomposition: Decomposition::Balanced,
            lattice: GridSpec::desk_scale(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub fidelity_a: f64,
    pub fidelity_b: f64,
    pub fidelity_t: f64,
    /// Power of the implemented factor relative to a column-normalized `A`.
    pub efficiency_a: f64,
    /// Power of the implemented factor relative to a row-normalized `B`.
    pub efficiency_b: f64,
    pub efficiency_t: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-grating fidelity after every accepted step, starting point first.
    pub histories: Vec<Vec<f64>>,
}

/// Result of optimizing a single grating.
#[derive(Clone, Debug, PartialEq)]
pub struct GratingFit {
    pub mu: Vec<f64>,
    pub initial_fidelity: f64,
    pub fidelity: f64,
    /// Σ|c_m|² of the clipped grating, at most 1.
    pub efficiency: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Column fidelity |⟨v,c⟩|² / (‖v‖²‖c‖²) and its helpers for one grating.
struct Objective<'a> {
    basis: &'a GratingBasis,
    target: &'a [C64],
    vnorm: f64,
}

struct Eval {
    fidelity: f64,
    coeffs: Vec<C64>,
    field: Vec<C64>,
}

impl<'a> Objective<'a> {
    fn new(basis: &'a GratingBasis, target: &'a [C64]) -> Self {
        let vnorm = target.iter().map(|z| z.norm_sqr()).sum();
        Self { basis, target, vnorm }
    }

    fn eval(&self, mu: &[f64]) -> Eval {
        let weighted: Vec<C64> = self.target.iter().zip(mu).map(|(v, m)| v * m).collect();
        let field = self.basis.synthesize(&weighted);
        let coeffs = self.basis.project(&clip(&field));
        Eval {
            fidelity: column_fidelity(&coeffs, self.target, self.vnorm),
            coeffs,
            field,
        }
    }

    fn analytic_gradient(&self, e: &Eval) -> Vec<f64> {
        let b = self.basis;
        let n = b.terms();
        let cn: f64 = e.coeffs.iter().map(|z| z.norm_sqr()).sum();
        if cn == 0.0 {
            return vec![0.0; n];
        }
        let s: C64 = self.target.iter().zip(&e.coeffs).map(|(v, c)| v.conj() * c).sum();
        let denom = cn * cn * self.vnorm;
        let gamma: Vec<C64> = (0..n)
            .map(|m| (s.conj() * self.target[m].conj() * cn - e.coeffs[m].conj() * s.norm_sqr()) / denom)
            .collect();
        let inv_p = 1.0 / b.pixels() as f64;
        let mut z = vec![C64::new(0.0, 0.0); n];
        for (p, sv) in e.field.iter().enumerate() {
            let mag = sv.norm();
            if mag == 0.0 {
                continue;
            }
            let hph = sv / mag;
            let w = b.row(p);
            let h: C64 = gamma.iter().zip(w).map(|(g, w)| g * w.conj()).sum::<C64>() * inv_p;
            let rho = -2.0 * (h * hph).im / mag;
            let a = hph.conj() * rho;
            for (zj, wj) in z.iter_mut().zip(w) {
                *zj += a * wj;
            }
        }
        z.iter().zip(self.target).map(|(z, v)| (v * z).im).collect()
    }

    fn difference_gradient(&self, mu: &[f64], rel: f64, active: &[bool]) -> Vec<f64> {
        let mut g = vec![0.0; mu.len()];
        let mut x = mu.to_vec();
        for j in (0..mu.len()).filter(|&j| active[j]) {
            let h = rel * mu[j].abs().max(1e-3);
            let lo = (mu[j] - h).max(0.0);
            x[j] = mu[j] + h;
            let fp = self.eval(&x).fidelity;
            x[j] = lo;
            let fm = self.eval(&x).fidelity;
            x[j] = mu[j];
            g[j] = (fp - fm) / (mu[j] + h - lo);
        }
        g
    }
}

fn column_fidelity(c: &[C64], v: &[C64], vnorm: f64) -> f64 {
    let cn: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if cn == 0.0 || vnorm == 0.0 {
        return 0.0;
    }
    let s: C64 = v.iter().zip(c).map(|(v, c)| v.conj() * c).sum();
    (s.norm_sqr() / (cn * vnorm)).min(1.0)
}

/// Maximize the fidelity of one clipped grating over real, non-negative weights.
///
/// `target` are the desired Fourier coefficients on the plane waves of `basis`,
/// `mu0` the starting weights. Entries with a zero target stay at zero.
pub fn optimize_grating(basis: &GratingBasis, target: &[C64], mu0: &[f64], opts: &OptimizeOptions) -> Result<GratingFit> {
    let n = basis.terms();
    if target.len() != n || mu0.len() != n {
        return Err(Error::Dimension(format!(
            "{} target terms and {} weights for a {n}-wave basis",
            target.len(),
            mu0.len()
        )));
    }
    let active: Vec<bool> = target.iter().map(|z| z.norm() > 0.0).collect();
    let count = active.iter().filter(|a| **a).count();
    if count == 0 {
        return Err(Error::EmptyGrating { index: 0 });
    }
    let obj = Objective::new(basis, target);
    let mut mu: Vec<f64> = mu0.iter().zip(&active).map(|(m, a)| if *a { m.max(0.0) } else { 0.0 }).collect();
    let mut cur = obj.eval(&mu);
    let initial = cur.fidelity;
    let mut history = vec![initial];
    let mut iterations = 0;
    let mut converged = count == 1 || initial >= 1.0 - 1e-15;
    let mut eta = opts.step;
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let mut g = match opts.gradient {
            GradientMethod::Analytic => obj.analytic_gradient(&cur),
            GradientMethod::CentralDifference { relative_step_millis } => {
                obj.difference_gradient(&mu, relative_step_millis as f64 * 1e-3, &active)
            }
        };
        g.iter_mut().zip(&active).for_each(|(x, a)| {
            if !a {
                *x = 0.0
            }
        });
        let gmax = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if gmax == 0.0 {
            converged = true;
            break;
        }
        let scale = mu.iter().cloned().fold(0.0_f64, f64::max).max(1e-12);
        let mut accepted = None;
        while eta > 1e-10 {
            let trial: Vec<f64> = mu
                .iter()
                .zip(&g)
                .map(|(m, d)| (m + eta * scale * d / gmax).max(0.0))
                .collect();
            let e = obj.eval(&trial);
            if e.fidelity > cur.fidelity {
                accepted = Some((trial, e));
                break;
            }
            eta *= 0.5;
        }
        let Some((trial, e)) = accepted else {
            converged = true;
            break;
        };
        let gain = e.fidelity - cur.fidelity;
        mu = trial;
        cur = e;
        history.push(cur.fidelity);
        eta = (eta * 1.5).min(opts.step);
        if gain < opts.tolerance {
            converged = true;
        }
    }
    Ok(GratingFit {
        mu,
        initial_fidelity: initial,
        fidelity: cur.fidelity,
        efficiency: cur.coeffs.iter().map(|z| z.norm_sqr()).sum(),
        iterations,
        converged,
        history,
    })
}

fn grating_basis(layout: &ModeLayout, side: Side, index: usize, lattice: &GridSpec) -> GratingBasis {
    let ap = Aperture::on_lattice(layout.coord(index), layout.aperture_radius(), lattice);
    GratingBasis::new(&ap.offsets, &grating_vectors(layout, side, index))
}

/// Matrix realized by the phase-only gratings of one side, evaluated on local aperture patches.
pub fn implemented_matrix(design: &GratingDesign, side: Side, lattice: &GridSpec) -> Result<CMatrix> {
    let n = design.dim();
    let mut out = CMatrix::zeros(n, n);
    for idx in 0..n {
        let coeffs = grating_coefficients(design, side, idx);
        if coeffs.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::EmptyGrating { index: idx });
        }
        let basis = grating_basis(&design.layout, side, idx, lattice);
        let c = basis.project(&clip(&basis.synthesize(&coeffs)));
        for (t, z) in c.into_iter().enumerate() {
            match side {
                Side::Splitter => out[(t, idx)] = z,
                Side::Combiner => out[(idx, t)] = z,
            }
        }
    }
    Ok(out)
}

fn normalized(m: &CMatrix, side: Side) -> CMatrix {
    let mut out = m.clone();
    match side {
        Side::Splitter => out.column_iter_mut().for_each(|mut c| {
            let n = c.norm();
            if n > 0.0 {
                c /= C64::new(n, 0.0)
            }
        }),
        Side::Combiner => out.row_iter_mut().for_each(|mut r| {
            let n = r.norm();
            if n > 0.0 {
                r /= C64::new(n, 0.0)
            }
        }),
    }
    out
}

/// Fidelity and efficiency of both sides and of the full product for the current coefficients.
pub fn evaluate_design(design: &GratingDesign, lattice: &GridSpec) -> Result<SynthesisReport> {
    let a_exp = implemented_matrix(design, Side::Splitter, lattice)?;
    let b_exp = implemented_matrix(design, Side::Combiner, lattice)?;
    let efficiency_a = matrix_efficiency(&a_exp, &normalized(&design.a, Side::Splitter))?.min(1.0);
    let efficiency_b = matrix_efficiency(&b_exp, &normalized(&design.b, Side::Combiner))?.min(1.0);
    Ok(SynthesisReport {
        fidelity_a: matrix_fidelity(&a_exp, &design.a)?,
        fidelity_b: matrix_fidelity(&b_exp, &design.b)?,
        fidelity_t: matrix_fidelity(&hadamard(&a_exp, &b_exp), &design.target())?,
        efficiency_a,
        efficiency_b,
        efficiency_t: efficiency_a * efficiency_b,
        iterations: 0,
        converged: true,
        histories: Vec::new(),
    })
}

/// Optimize the real weights of every grating on one side.
///
/// Returns the new weight matrix (`mu` for the splitter, `nu` for the combiner)
/// and a report evaluated with it. `A` and `B` are never modified.
pub fn optimize_coefficients(design: &GratingDesign, side: Side, opts: &OptimizeOptions) -> Result<(CMatrix, SynthesisReport)> {
    let n = design.dim();
    let (factor, weights) = match side {
        Side::Splitter => (&design.a, &design.mu),
        Side::Combiner => (&design.b, &design.nu),
    };
    let mut out = weights.clone();
    let mut iterations = 0;
    let mut converged = true;
    let mut histories = Vec::with_capacity(n);
    for idx in 0..n {
        let (target, mu0): (Vec<C64>, Vec<f64>) = match side {
            Side::Splitter => (factor.column(idx).iter().copied().collect(), weights.column(idx).iter().map(|z| z.norm()).collect()),
            Side::Combiner => (factor.row(idx).iter().copied().collect(), weights.row(idx).iter().map(|z| z.norm()).collect()),
        };
        let basis = grating_basis(&design.layout, side, idx, &opts.lattice);
        let fit = optimize_grating(&basis, &target, &mu0, opts).map_err(|e| match e {
            Error::EmptyGrating { .. } => Error::EmptyGrating { index: idx },
            e => e,
        })?;
        for (t, m) in fit.mu.iter().enumerate() {
            let z = C64::new(*m, 0.0);
            match side {
                Side::Splitter => out[(t, idx)] = z,
                Side::Combiner => out[(idx, t)] = z,
            }
        }
        iterations += fit.iterations;
        converged &= fit.converged;
        histories.push(fit.history);
    }
    let mut updated = design.clone();
    match side {
        Side::Splitter => updated.mu = out.clone(),
        Side::Combiner => updated.nu = out.clone(),
    }
    let mut report = evaluate_design(&updated, &opts.lattice)?;
    report.iterations = iterations;
    report.converged = converged;
    report.histories = histories;
    Ok((out, report))
}

/// Decompose `t`, then optimize splitter and combiner weights.
pub fn synthesize(t: &CMatrix, layout: ModeLayout, opts: &OptimizeOptions) -> Result<(GratingDesign, SynthesisReport)> {
    let mut design = GratingDesign::with_decomposition(t, layout, opts.decomposition)?;
    let (mu, ra) = optimize_coefficients(&design, Side::Splitter, opts)?;
    design.mu = mu;
    let (nu, mut report) = optimize_coefficients(&design, Side::Combiner, opts)?;
    design.nu = nu;
    report.iterations += ra.iterations;
    report.converged &= ra.converged;
    let mut histories = ra.histories;
    histories.extend(report.histories);
    report.histories = histories;
    Ok((design, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cis, random_unitary};
    use crate::modes::circle_layout;
    use crate::synthesis::{extract_matrix, phase_only_grating};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn layout(n: usize) -> ModeLayout {
        let chord = 2.0 * 2.5e-3 * (PI / n as f64).sin();
        let w = (chord / 5.0).min(3e-4);
        circle_layout(n, 2.5e-3, w, 0.0438, 1.55e-6).unwrap()
    }

    fn column_setup(n: usize, seed: u64) -> (GratingBasis, Vec<C64>) {
        let l = layout(n);
        let basis = grating_basis(&l, Side::Splitter, 0, &GridSpec::desk_scale());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<C64> = (0..n).map(|_| cis(rng.gen::<f64>() * 2.0 * PI) * rng.gen_range(0.5..1.0)).collect();
        (basis, v)
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let (basis, v) = column_setup(6, 1);
        let obj = Objective::new(&basis, &v);
        let mu: Vec<f64> = (0..6).map(|j| 0.8 + 0.07 * j as f64).collect();
        let e = obj.eval(&mu);
        let ga = obj.analytic_gradient(&e);
        let gd = obj.difference_gradient(&mu, 1e-4, &[true; 6]);
        let scale = gd.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for (a, d) in ga.iter().zip(&gd) {
            assert!((a - d).abs() < 1e-3 * scale + 1e-9, "analytic {a} vs difference {d}");
        }
    }

    #[test]
    fn single_wave_is_already_optimal() {
        let (basis, _) = column_setup(4, 2);
        let v = vec![C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let fit = optimize_grating(&basis, &v, &[1.0; 4], &OptimizeOptions::default()).unwrap();
        assert_eq!(fit.iterations, 0);
        // residual is the Riemann-sum overlap of plane waves on a finite disc
        assert_abs_diff_eq!(fit.fidelity, 1.0, epsilon = 1e-5);
        assert_eq!(fit.mu, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn equal_three_way_split_improves() {
        let (basis, _) = column_setup(3, 3);
        let v = vec![C64::new(1.0, 0.0); 3];
        let fit = optimize_grating(&basis, &v, &[1.0; 3], &OptimizeOptions::default()).unwrap();
        assert!(fit.fidelity > fit.initial_fidelity, "{} vs {}", fit.fidelity, fit.initial_fidelity);
        assert!(fit.fidelity > 0.999);
    }

    #[test]
    fn history_is_monotone_and_methods_agree() {
        let (basis, v) = column_setup(7, 4);
        let a = optimize_grating(&basis, &v, &[1.0; 7], &OptimizeOptions::default()).unwrap();
        assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
        let opts = OptimizeOptions {
            gradient: GradientMethod::central(),
            max_iterations: 60,
            ..Default::default()
        };
        let d = optimize_grating(&basis, &v, &[1.0; 7], &opts).unwrap();
        assert!(d.history.windows(2).all(|w| w[1] >= w[0]));
        assert!(a.fidelity >= a.initial_fidelity && d.fidelity >= d.initial_fidelity);
        assert!(a.fidelity > 0.999 && d.fidelity > 0.999);
    }

    #[test]
    fn fast_evaluation_matches_full_extraction() {
        let l = layout(5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_unitary(5, &mut rng);
        let d = GratingDesign::with_decomposition(&t, l.clone(), Decomposition::Balanced).unwrap();
        let grid = GridSpec::desk_scale();
        let gs: Vec<_> = (0..5).map(|n| phase_only_grating(&d, Side::Combiner, n, &grid).unwrap()).collect();
        let full = extract_matrix(&gs, Side::Combiner, &l).unwrap();
        let fast = implemented_matrix(&d, Side::Combiner, &grid).unwrap();
        assert!(crate::linalg::max_abs_diff(&full, &fast) < 1e-12);
    }

    #[test]
    fn synthesis_keeps_factors_and_improves() {
        let l = layout(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = random_unitary(5, &mut rng);
        let opts = OptimizeOptions::default();
        let start = GratingDesign::with_decomposition(&t, l.clone(), opts.decomposition).unwrap();
        let r0 = evaluate_design(&start, &opts.lattice).unwrap();
        let (d, r) = synthesize(&t, l, &opts).unwrap();
        assert!(crate::linalg::max_abs_diff(&d.target(), &t) < 1e-12);
        assert!(d.mu.iter().chain(d.nu.iter()).all(|z| z.im == 0.0 && z.re >= 0.0));
        assert!(r.fidelity_a >= r0.fidelity_a - 1e-9 && r.fidelity_b >= r0.fidelity_b - 1e-9);
        assert!(r.fidelity_t > 0.999, "{r:?}");
        for x in [r.fidelity_a, r.fidelity_b, r.fidelity_t, r.efficiency_a, r.efficiency_b, r.efficiency_t] {
            assert!((0.0..=1.0).contains(&x));
        }
        assert_eq!(r.histories.len(), 10);
    }
}
