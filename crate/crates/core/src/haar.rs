//! Closed-form Haar quantities: frame potentials of the Haar ensemble on A,
//! the exact projected-ensemble frame potential of a Haar-random global
//! state at finite L_B, and a Haar state sampler.

use num_complex::Complex64 as C64;
use num_rational::Ratio;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest k for which k! is computed by exact integer multiplication.
pub const EXACT_FACTORIAL_MAX: usize = 20;

/// x(x+1)…(x+m−1); the empty product is 1.
pub fn ascending_factorial(x: f64, m: usize) -> f64 {
    (0..m).map(|j| x + j as f64).product()
}

pub fn ln_ascending_factorial(x: f64, m: usize) -> f64 {
    (0..m).map(|j| (x + j as f64).ln()).sum()
}

/// ln 𝒩_m(q^L) without forming q^L, which may overflow.
pub fn ln_ascending_factorial_pow(q: usize, len: usize, m: usize) -> f64 {
    let ln_x = len as f64 * (q as f64).ln();
    let inv_x = (-ln_x).exp();
    (0..m).map(|j| ln_x + (j as f64 * inv_x).ln_1p()).sum()
}

pub fn factorial(k: usize) -> f64 {
    if k <= EXACT_FACTORIAL_MAX {
        (1..=k as u64).product::<u64>() as f64
    } else {
        ln_factorial(k).exp()
    }
}

pub fn ln_factorial(k: usize) -> f64 {
    if k <= EXACT_FACTORIAL_MAX {
        ((1..=k as u64).product::<u64>() as f64).ln()
    } else {
        (2..=k).map(|j| (j as f64).ln()).sum()
    }
}

/// F_H^(k) = k!/𝒩_k(N_A) for the Haar ensemble on an N_A-dimensional space.
pub fn haar_frame_potential(dim_a: f64, k: usize) -> f64 {
    ln_haar_frame_potential(dim_a, k).exp()
}

pub fn ln_haar_frame_potential(dim_a: f64, k: usize) -> f64 {
    ln_factorial(k) - ln_ascending_factorial(dim_a, k)
}

/// F_H^(k) for N_A = q^{L_A}, evaluated in the log domain.
pub fn haar_frame_potential_f64(q: usize, len_a: usize, k: usize) -> f64 {
    ln_haar_frame_potential_pow(q, len_a, k).exp()
}

pub fn ln_haar_frame_potential_pow(q: usize, len_a: usize, k: usize) -> f64 {
    ln_factorial(k) - ln_ascending_factorial_pow(q, len_a, k)
}

/// F_H^(k) as an exact fraction. Fails when an intermediate overflows i128.
pub fn haar_frame_potential_exact(dim_a: u64, k: usize) -> Result<Ratio<i128>> {
    let overflow = || Error::OutOfRange(format!("k!/N_k({dim_a}) overflows exact arithmetic at k={k}"));
    let mut num: i128 = 1;
    let mut den: i128 = 1;
    for j in 0..k as i128 {
        num = num.checked_mul(j + 1).ok_or_else(overflow)?;
        den = den.checked_mul(dim_a as i128 + j).ok_or_else(overflow)?;
    }
    if den == 0 {
        return Err(Error::InvalidArgument("N_A must be >= 1".into()));
    }
    Ok(Ratio::new(num, den))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HaarParams {
    pub q: usize,
    pub len_a: usize,
    pub len_b: usize,
    pub k: usize,
    /// Spectator replica count; only read by the pre-limit expression.
    pub n: usize,
}

impl HaarParams {
    pub fn new(q: usize, len_a: usize, len_b: usize, k: usize) -> Result<Self> {
        if q < 2 || k < 1 {
            return Err(Error::InvalidArgument(format!("need q >= 2 and k >= 1, got q={q}, k={k}")));
        }
        Ok(Self { q, len_a, len_b, k, n: 0 })
    }

    pub fn with_spectators(self, n: usize) -> Self {
        Self { n, ..self }
    }
}

/// Exact F^(k) of the projected ensemble of a Haar-random state on L_A + L_B
/// sites. Rewritten as
/// (1 + q^{−L_A}) q^{−L_B}/(1 + q^{−L}) + (1 − q^{−L_B}) F_H^(k)/(1 + q^{−L})
/// so nothing overflows.
pub fn haar_state_projected_fp(p: &HaarParams) -> f64 {
    let q = p.q as f64;
    let inv_a = q.powi(-(p.len_a as i32));
    let inv_b = q.powi(-(p.len_b as i32));
    let inv_l = inv_a * inv_b;
    let direct = (1.0 + inv_a) * inv_b / (1.0 + inv_l);
    let spread = (1.0 - inv_b) * haar_frame_potential_f64(p.q, p.len_a, p.k) / (1.0 + inv_l);
    direct + spread
}

/// F^(n,k) for integer n ≥ 0, before the replica limit n → 1−k.
pub fn haar_state_projected_fp_pre_limit(p: &HaarParams) -> f64 {
    ln_haar_state_projected_fp_pre_limit(p).exp()
}

pub fn ln_haar_state_projected_fp_pre_limit(p: &HaarParams) -> f64 {
    let (q, la, lb, k, n) = (p.q, p.len_a, p.len_b, p.k, p.n);
    let m = 2 * n + 2 * k;
    let ln_q = (q as f64).ln();
    let ln_norm = ln_ascending_factorial_pow(q, la + lb, m);
    let first = lb as f64 * ln_q + ln_ascending_factorial_pow(q, la, m) - ln_norm;
    if lb == 0 {
        return first;
    }
    let second = 2.0 * lb as f64 * ln_q
        + (-(q as f64).powi(-(lb as i32))).ln_1p()
        + ln_factorial(k)
        + 2.0 * ln_ascending_factorial_pow(q, la, n + k)
        - ln_ascending_factorial_pow(q, la, k)
        - ln_norm;
    let hi = first.max(second);
    hi + ((first - hi).exp() + (second - hi).exp()).ln()
}

/// Uniformly random unit vector: a normalized standard complex Gaussian.
pub fn sample_haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vec<C64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("state dimension must be >= 1".into()));
    }
    let mut v: Vec<C64> = (0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}
