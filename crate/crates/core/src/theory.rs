//! Closed-form predictions: purity speed, large-q and membrane frame
//! potentials, rounded saturation, the non-interacting Δ², design times,
//! obc/pbc bulk forms and the permutation-space correlation length.
//!
//! Time counts double-layer steps and is real-valued so that crossing times
//! can be found by root-finding; the physical grid is integer t. Every rate
//! defaults to the purity speed ṽ₂; the dressed v₂ is not computable in closed
//! form and can be supplied through [`Speed::Override`].

use crate::error::{Error, Result};
use crate::haar;
use crate::statevector::{Boundary, Placement};

/// Fitted finite-q slope corrections v^(k) = kṽ₂ − δv^(k) at q = 2, kept
/// as reference values only.
pub const REFERENCE_DELTA_V2: f64 = 0.7;
pub const REFERENCE_DELTA_V3: f64 = 0.4;

pub fn reference_delta_v(k: usize) -> Option<f64> {
    match k {
        2 => Some(REFERENCE_DELTA_V2),
        3 => Some(REFERENCE_DELTA_V3),
        _ => None,
    }
}

/// Entropy density of the infinite-temperature state, ln q.
pub fn s_eq(q: usize) -> f64 {
    (q as f64).ln()
}

/// ṽ₂ = 2 ln((q² + 1)/(2q)) / ln q.
pub fn purity_speed(q: usize) -> f64 {
    let q = q as f64;
    2.0 * ((q * q + 1.0) / (2.0 * q)).ln() / q.ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Speed {
    /// ṽ₂ at the given q.
    Purity,
    /// The q → ∞ value 2.
    LargeQ,
    Override(f64),
}

impl Speed {
    pub fn value(self, q: usize) -> f64 {
        match self {
            Speed::Purity => purity_speed(q),
            Speed::LargeQ => 2.0,
            Speed::Override(v) => v,
        }
    }
}

/// Circuit-averaged purity before saturation, (2q/(1 + q²))^{2t}.
pub fn mean_purity(q: usize, t: f64) -> f64 {
    let q = q as f64;
    (2.0 * q / (1.0 + q * q)).powf(2.0 * t)
}

/// Leading large-q form: k! 4^{kt} q^{−2kt} for t ≤ L_A/2, else k! q^{−k L_A}.
pub fn large_q_frame_potential(q: usize, len_a: usize, t: f64, k: usize) -> f64 {
    haar::factorial(k) * large_q_purity_moment(q, len_a, t, k)
}

fn large_q_purity_moment(q: usize, len_a: usize, t: f64, k: usize) -> f64 {
    let (q, k) = (q as f64, k as f64);
    if t <= len_a as f64 / 2.0 {
        4f64.powf(k * t) * q.powf(-2.0 * k * t)
    } else {
        q.powf(-k * len_a as f64)
    }
}

/// Ratio of the two large-q branches at t = L_A/2, i.e. the size of the
/// jump in the piecewise form: 2^{k L_A}.
pub fn large_q_branch_jump(len_a: usize, k: usize) -> f64 {
    2f64.powi((k * len_a) as i32)
}

/// Large-q F^(k,n) = k! q^{−2(n+k−1)L_B} 𝒫^k. `n` is real so that the formal
/// replica value n = 1 − k can be passed.
pub fn large_q_fp_with_spectators(q: usize, len_a: usize, len_b: usize, t: f64, k: usize, n: f64) -> f64 {
    let exponent = 2.0 * (n + k as f64 - 1.0) * len_b as f64;
    large_q_frame_potential(q, len_a, t, k) * (q as f64).powf(-exponent)
}

/// Membrane picture with non-interacting walls, v^(k) = k·speed:
/// k! e^{−v^(k) s_eq t} until t = L_A/speed, then F_H^(k).
pub fn membrane_frame_potential(q: usize, len_a: usize, t: f64, k: usize, speed: Speed) -> f64 {
    let v = speed.value(q);
    if t < len_a as f64 / v {
        haar::factorial(k) * (-(k as f64) * v * s_eq(q) * t).exp()
    } else {
        haar::haar_frame_potential_f64(q, len_a, k)
    }
}

/// Two-path rounding of k = 1 saturation: e^{−s_eq L_A} + e^{−ṽ₂ s_eq t}.
pub fn rounded_fp1(q: usize, len_a: usize, t: f64, speed: Speed) -> f64 {
    let s = s_eq(q);
    (-s * len_a as f64).exp() + (-speed.value(q) * s * t).exp()
}

/// (1 + exp[(L_A − ṽ₂ t) s_eq])^k − 1.
pub fn delta2_nonint(q: usize, len_a: usize, t: f64, k: usize, speed: Speed) -> f64 {
    let x = ((len_a as f64 - speed.value(q) * t) * s_eq(q)).exp();
    // (1 + x)^k − 1 without cancellation for small x
    (k as f64 * x.ln_1p()).exp_m1()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// t_k ≈ L_A/v + 2 ln(1/ε)/(v s_eq) + ln(k)/(v s_eq).
pub fn design_time(q: usize, len_a: usize, k: usize, epsilon: f64, speed: Speed) -> Result<f64> {
    check_epsilon(epsilon)?;
    if k == 0 {
        return Err(Error::InvalidArgument("design order k must be >= 1".into()));
    }
    let v = speed.value(q);
    let vs = v * s_eq(q);
    Ok(len_a as f64 / v + 2.0 * (1.0 / epsilon).ln() / vs + (k as f64).ln() / vs)
}

/// Time at which delta2_nonint falls to ε², by bisection. Exact counterpart
/// of [`design_time`], which keeps only the leading term of the expansion.
pub fn delta2_nonint_crossing(q: usize, len_a: usize, k: usize, epsilon: f64, speed: Speed) -> Result<f64> {
    check_epsilon(epsilon)?;
    let target = epsilon * epsilon;
    let f = |t: f64| delta2_nonint(q, len_a, t, k, speed) - target;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::OutOfRange("no crossing below t = 1e9".into()));
        }
    }
    if f(lo) <= 0.0 {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bulk A at q → ∞ before saturation: (k!)² e^{−2vkt} with obc, k! e^{−2vkt}
/// with pbc.
pub fn bulk_fp_large_q(q: usize, t: f64, k: usize, boundary: Boundary, speed: Speed) -> f64 {
    let decay = (-2.0 * speed.value(q) * k as f64 * t).exp();
    let kf = haar::factorial(k);
    match boundary {
        Boundary::Open => kf * kf * decay,
        Boundary::Periodic => kf * decay,
    }
}

/// ξ_{n,k}(t) = e^{ṽ₂ s_eq t}/[(n + k)(n + k − 1)]. The formal replica value
/// n + k = 1 returns +∞; other n + k < 2 are rejected.
pub fn correlation_length(q: usize, t: f64, n: f64, k: usize, speed: Speed) -> Result<f64> {
    let r = n + k as f64;
    if r == 1.0 {
        return Ok(f64::INFINITY);
    }
    if r < 2.0 {
        return Err(Error::InvalidArgument(format!("n + k = {r} admits no elementary domain wall")));
    }
    Ok((speed.value(q) * s_eq(q) * t).exp() / (r * (r - 1.0)))
}

/// Parameters of one prediction point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryParams {
    pub q: usize,
    pub len_a: usize,
    pub t: f64,
    pub k: usize,
    pub n: f64,
    pub epsilon: f64,
    pub placement: Placement,
    pub boundary: Boundary,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        if self.q < 2 || self.len_a < 1 || self.k < 1 {
            return Err(Error::InvalidArgument(format!(
                "need q >= 2, L_A >= 1, k >= 1; got q={}, L_A={}, k={}",
                self.q, self.len_a, self.k
            )));
        }
        check_epsilon(self.epsilon)
    }
}
