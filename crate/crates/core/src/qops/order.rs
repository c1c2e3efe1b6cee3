use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{cis, C64};

/// Outcome of the compiled order-finding circuit.
#[derive(Clone, Debug)]
pub struct OrderFinding {
    /// p(y, f): rows are register-1 outcomes y ∈ [0, N), columns f ∈ [0, M).
    pub joint: DMatrix<f64>,
    /// Marginal distribution of register 1.
    pub register1: Vec<f64>,
    /// Register-1 outcomes above the uniform level 1/N.
    pub peaks: Vec<usize>,
    pub period: u64,
    /// gcd(a^{r/2} ± 1, M) when r is even and a^{r/2} ≢ −1.
    pub factors: Option<(u64, u64)>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Denominators of the continued-fraction convergents of p/q.
fn convergent_denominators(mut p: u64, mut q: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let (mut k0, mut k1) = (1u64, 0u64);
    while q != 0 {
        let a = p / q;
        (p, q) = (q, p % q);
        let k = a.saturating_mul(k1).saturating_add(k0);
        (k0, k1) = (k1, k);
        out.push(k);
    }
    out
}

/// Joint output distribution of QFT-based order finding and the period read
/// off it by continued fractions.
///
/// Register 1 starts in a uniform superposition over `n` values, register 2
/// holds a^x mod m, and the QFT acts on register 1.
pub fn order_finding_demo(n: usize, m: u64, a: u64) -> Result<OrderFinding> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("modulus {m} must be at least 2")));
    }
    if !n.is_power_of_two() || (n as u64) < m {
        return Err(Error::InvalidArgument(format!("register size {n} must be a power of two ≥ {m}")));
    }
    if gcd(a, m) != 1 {
        return Err(Error::InvalidArgument(format!("gcd({a}, {m}) ≠ 1")));
    }
    let values: Vec<usize> = (0..n as u64).map(|x| pow_mod(a, x, m) as usize).collect();
    let mut joint = DMatrix::zeros(n, m as usize);
    let norm = (n * n) as f64;
    for y in 0..n {
        let mut acc = vec![C64::new(0.0, 0.0); m as usize];
        for (x, &f) in values.iter().enumerate() {
            acc[f] += cis(2.0 * PI * ((x * y) % n) as f64 / n as f64);
        }
        for (f, z) in acc.iter().enumerate() {
            joint[(y, f)] = z.norm_sqr() / norm;
        }
    }
    let register1: Vec<f64> = (0..n).map(|y| joint.row(y).sum()).collect();
    let uniform = 1.0 / n as f64;
    let peaks: Vec<usize> = (0..n).filter(|&y| register1[y] > uniform * (1.0 + 1e-9)).collect();

    let mut best: Option<u64> = None;
    for &y in peaks.iter().filter(|&&y| y != 0) {
        for q in convergent_denominators(y as u64, n as u64) {
            if q == 0 || q > m {
                continue;
            }
            // a convergent may give a divisor of r; try its small multiples
            let mut r = q;
            while r <= m {
                if pow_mod(a, r, m) == 1 {
                    best = Some(best.map_or(r, |b| b.min(r)));
                    break;
                }
                r += q;
            }
        }
    }
    // a = 1 has period 1 and only the y = 0 peak
    if a % m == 1 {
        best = Some(1);
    }
    let period = best.ok_or_else(|| {
        Error::OrderFinding(format!(
            "no convergent of the peaks {peaks:?} gives a period of {a} mod {m}; register-1 distribution {register1:?}"
        ))
    })?;
    let factors = if period % 2 == 0 {
        let h = pow_mod(a, period / 2, m);
        if h != m - 1 {
            let p = gcd(h + 1, m);
            let q = gcd((h + m - 1) % m, m);
            let (lo, hi) = if p < q { (p, q) } else { (q, p) };
            (lo > 1 && hi < m).then_some((lo, hi))
        } else {
            None
        }
    } else {
        None
    };
    Ok(OrderFinding {
        joint,
        register1,
        peaks,
        period,
        factors,
    })
}
