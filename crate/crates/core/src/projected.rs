//! Projected ensembles: measuring B in the computational basis leaves one
//! unnormalized pure state on A per outcome. Frame potentials are sums over
//! pairs of outcomes of the Gram matrix G_{aa'} = ⟨Ψ̃(a)|Ψ̃(a')⟩:
//!
//! F^(k) = Σ_{a,a'} p(a)^{1−k} p(a')^{1−k} |G_{aa'}|^{2k},  p(a) = G_{aa}.
//!
//! The blocked path never materializes G. Each term is evaluated as
//! p p′ · c^k with c = |G|²/(p p′) ∈ [0, 1], which stays finite for any k.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::haar;
use crate::stats::{NeumaierSum, SampleMean};
use crate::statevector::{Geometry, Statevector};

/// Outcomes with Born weight below this are dropped from frame-potential
/// sums; their total weight is reported as `excluded_mass`.
pub const NULL_OUTCOME_THRESHOLD: f64 = 1e-14;

/// Largest Gram matrix (in entries) the dense path will allocate.
pub const DENSE_GRAM_LIMIT: usize = 1 << 22;

pub const DEFAULT_BLOCK: usize = 512;

/// The q^{L_A} × q^{L_B} matrix whose column `a` is Π_B(a)|Ψ⟩ restricted to A.
/// Stored outcome-major: the N_A amplitudes of each outcome are contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedMatrix {
    q: usize,
    len_a: usize,
    len_b: usize,
    dim_a: usize,
    dim_b: usize,
    data: Vec<C64>,
}

impl ProjectedMatrix {
    /// Splits `state` according to `geometry`. For bulk placement the outcome
    /// index concatenates the left B digits (more significant) and the right
    /// B digits.
    pub fn from_state(state: &Statevector, geometry: &Geometry) -> Result<Self> {
        if geometry.sites() != state.sites() {
            return Err(Error::InvalidArgument(format!(
                "geometry has {} sites, state has {}",
                geometry.sites(),
                state.sites()
            )));
        }
        let q = state.q();
        let dim_a = q.pow(geometry.len_a as u32);
        let dim_b = q.pow(geometry.len_b as u32);
        let dim_right = q.pow(geometry.b_right() as u32);
        let dim_left = dim_b / dim_right;
        let amps = state.amplitudes();
        let mut data = vec![C64::new(0.0, 0.0); dim_a * dim_b];
        for left in 0..dim_left {
            for i in 0..dim_a {
                let src = (left * dim_a + i) * dim_right;
                for right in 0..dim_right {
                    let outcome = left * dim_right + right;
                    data[outcome * dim_a + i] = amps[src + right];
                }
            }
        }
        Ok(Self { q, len_a: geometry.len_a, len_b: geometry.len_b, dim_a, dim_b, data })
    }

    /// Builds from outcome-major columns; `data.len()` must be q^{L_A} q^{L_B}.
    pub fn from_columns(q: usize, len_a: usize, len_b: usize, data: Vec<C64>) -> Result<Self> {
        let dim_a = q.pow(len_a as u32);
        let dim_b = q.pow(len_b as u32);
        if data.len() != dim_a * dim_b {
            return Err(Error::InvalidArgument(format!(
                "{} entries do not match {dim_a} x {dim_b}",
                data.len()
            )));
        }
        Ok(Self { q, len_a, len_b, dim_a, dim_b, data })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len_a(&self) -> usize {
        self.len_a
    }

    pub fn len_b(&self) -> usize {
        self.len_b
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Unnormalized projected state for outcome `a`.
    pub fn column(&self, a: usize) -> &[C64] {
        &self.data[a * self.dim_a..(a + 1) * self.dim_a]
    }

    /// Born weights p(a) = ‖Ψ̃(a)‖².
    pub fn born_weights(&self) -> Vec<f64> {
        self.data.chunks_exact(self.dim_a).map(|c| c.iter().map(|x| x.norm_sqr()).sum()).collect()
    }

    /// The full Gram matrix, row-major, by direct inner products.
    pub fn gram_dense(&self) -> Result<Vec<C64>> {
        let n = self.dim_b;
        if n.saturating_mul(n) > DENSE_GRAM_LIMIT {
            return Err(Error::OverBudget {
                what: "dense Gram matrix".into(),
                required: (n as u128) * (n as u128),
                limit: DENSE_GRAM_LIMIT as u128,
            });
        }
        let mut g = vec![C64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in a..n {
                let v = inner(self.column(a), self.column(b));
                g[a * n + b] = v;
                g[b * n + a] = v.conj();
            }
        }
        Ok(g)
    }

    /// Purity of the reduced state on A, Tr[(M M†)²] = Σ|G|².
    pub fn purity(&self) -> f64 {
        let n = self.dim_a;
        // ρ_A = Σ_a Ψ̃(a) Ψ̃(a)†, upper triangle only
        let mut rho = vec![C64::new(0.0, 0.0); n * n];
        for col in self.data.chunks_exact(n) {
            for i in 0..n {
                let ci = col[i];
                if ci == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in i..n {
                    rho[i * n + j] += ci * col[j].conj();
                }
            }
        }
        let mut s = NeumaierSum::new();
        for i in 0..n {
            s += rho[i * n + i].norm_sqr();
            for j in i + 1..n {
                s += 2.0 * rho[i * n + j].norm_sqr();
            }
        }
        s.value()
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameResult {
    pub k: usize,
    pub value: f64,
    pub ln_value: f64,
    /// Born weight of outcomes dropped as numerically null.
    pub excluded_mass: f64,
    pub q: usize,
    pub len_a: usize,
    pub len_b: usize,
}

impl FrameResult {
    /// Haar value F_H^(k) for the same region A.
    pub fn haar_value(&self) -> f64 {
        haar::haar_frame_potential_f64(self.q, self.len_a, self.k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramStrategy {
    /// Blocked for anything but tiny ensembles.
    Auto,
    /// Materialize G with direct inner products.
    Dense,
    /// Stream column blocks through matrix products; G is never stored.
    Blocked { block: usize },
}

/// F^(k) for a single k.
pub fn frame_potential(proj: &ProjectedMatrix, k: usize) -> Result<FrameResult> {
    Ok(frame_potentials(proj, &[k])?.remove(0))
}

/// F^(k) for every k in `ks`, sharing one pass over the Gram matrix.
pub fn frame_potentials(proj: &ProjectedMatrix, ks: &[usize]) -> Result<Vec<FrameResult>> {
    frame_potentials_with(proj, ks, GramStrategy::Auto)
}

pub fn frame_potentials_with(proj: &ProjectedMatrix, ks: &[usize], strategy: GramStrategy) -> Result<Vec<FrameResult>> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidArgument("frame potential order k must be >= 1".into()));
    }
    let probs = proj.born_weights();
    let mut kept = Vec::new();
    let mut excluded = NeumaierSum::new();
    for (a, &p) in probs.iter().enumerate() {
        if p >= NULL_OUTCOME_THRESHOLD {
            kept.push(a);
        } else {
            excluded += p;
        }
    }
    let kmax = *ks.iter().max().unwrap();
    let sums = match strategy {
        GramStrategy::Dense => dense_sums(proj, &kept, &probs, kmax)?,
        GramStrategy::Blocked { block } => blocked_sums(proj, &kept, &probs, kmax, block.max(1)),
        GramStrategy::Auto if kept.len() <= 64 => dense_sums(proj, &kept, &probs, kmax)?,
        GramStrategy::Auto => blocked_sums(proj, &kept, &probs, kmax, DEFAULT_BLOCK),
    };
    Ok(ks
        .iter()
        .map(|&k| {
            let value = sums[k - 1].value();
            FrameResult {
                k,
                value,
                ln_value: value.ln(),
                excluded_mass: excluded.value(),
                q: proj.q,
                len_a: proj.len_a,
                len_b: proj.len_b,
            }
        })
        .collect())
}

/// Accumulates p_r Σ_s p_s c^k for k = 1..=kmax into `acc`, where `c` yields
/// the normalized squared overlaps of row r.
#[inline]
fn accumulate_row(acc: &mut [NeumaierSum], weight_r: f64, row: impl Iterator<Item = (f64, f64)>, scale: f64) {
    let kmax = acc.len();
    let mut partial = [0.0f64; 16];
    let mut partial_vec;
    let partial: &mut [f64] = if kmax <= 16 {
        &mut partial[..kmax]
    } else {
        partial_vec = vec![0.0; kmax];
        &mut partial_vec
    };
    for (p_s, c) in row {
        let mut pw = c;
        for slot in partial.iter_mut() {
            *slot += p_s * pw;
            pw *= c;
        }
    }
    for (a, x) in acc.iter_mut().zip(partial.iter()) {
        a.add(scale * weight_r * x);
    }
}

fn dense_sums(proj: &ProjectedMatrix, kept: &[usize], probs: &[f64], kmax: usize) -> Result<Vec<NeumaierSum>> {
    let n = kept.len();
    if n.saturating_mul(n) > DENSE_GRAM_LIMIT {
        return Err(Error::OverBudget {
            what: "dense Gram matrix".into(),
            required: (n as u128) * (n as u128),
            limit: DENSE_GRAM_LIMIT as u128,
        });
    }
    let mut g2 = vec![0.0f64; n * n];
    for r in 0..n {
        for s in r..n {
            let v = inner(proj.column(kept[r]), proj.column(kept[s])).norm_sqr();
            g2[r * n + s] = v;
            g2[s * n + r] = v;
        }
    }
    let mut acc = vec![NeumaierSum::new(); kmax];
    for r in 0..n {
        let pr = probs[kept[r]];
        let row = (0..n).map(|s| {
            let ps = probs[kept[s]];
            (ps, g2[r * n + s] / (pr * ps))
        });
        accumulate_row(&mut acc, pr, row, 1.0);
    }
    Ok(acc)
}

fn blocked_sums(proj: &ProjectedMatrix, kept: &[usize], probs: &[f64], kmax: usize, block: usize) -> Vec<NeumaierSum> {
    let n = kept.len();
    let da = proj.dim_a;
    let width = 2 * da;
    // real embedding: row r = [Re ψ_r, Im ψ_r], rotated row = [Im ψ_r, −Re ψ_r]
    let mut z = vec![0.0f64; n * width];
    let mut zr = vec![0.0f64; n * width];
    for (r, &a) in kept.iter().enumerate() {
        let col = proj.column(a);
        for i in 0..da {
            z[r * width + i] = col[i].re;
            z[r * width + da + i] = col[i].im;
            zr[r * width + i] = col[i].im;
            zr[r * width + da + i] = -col[i].re;
        }
    }
    let p: Vec<f64> = kept.iter().map(|&a| probs[a]).collect();
    let inv_p: Vec<f64> = p.iter().map(|x| 1.0 / x).collect();
    let mut acc = vec![NeumaierSum::new(); kmax];
    let mut re = vec![0.0f64; block * block];
    let mut im = vec![0.0f64; block * block];
    for i0 in (0..n).step_by(block) {
        let bi = block.min(n - i0);
        for j0 in (i0..n).step_by(block) {
            let bj = block.min(n - j0);
            // Re G = Z_i Z_jᵀ, Im G = Z_i Z'_jᵀ
            // SAFETY: all pointers address live buffers and the given
            // shapes/strides stay inside them.
            unsafe {
                matrixmultiply::dgemm(
                    bi, width, bj, 1.0,
                    z.as_ptr().add(i0 * width), width as isize, 1,
                    z.as_ptr().add(j0 * width), 1, width as isize,
                    0.0, re.as_mut_ptr(), bj as isize, 1,
                );
                matrixmultiply::dgemm(
                    bi, width, bj, 1.0,
                    z.as_ptr().add(i0 * width), width as isize, 1,
                    zr.as_ptr().add(j0 * width), 1, width as isize,
                    0.0, im.as_mut_ptr(), bj as isize, 1,
                );
            }
            let scale = if i0 == j0 { 1.0 } else { 2.0 };
            for r in 0..bi {
                let row_re = &re[r * bj..(r + 1) * bj];
                let row_im = &im[r * bj..(r + 1) * bj];
                let ir = inv_p[i0 + r];
                let row = (0..bj).map(|s| {
                    let g2 = row_re[s] * row_re[s] + row_im[s] * row_im[s];
                    (p[j0 + s], (g2 * ir * inv_p[j0 + s]).min(1.0))
                });
                accumulate_row(&mut acc, p[i0 + r], row, scale);
            }
        }
    }
    acc
}

/// Σ_{a,a'} p(a)^n p(a')^n |G_{aa'}|^{2k} for integer n ≥ 0: the
/// quantity whose circuit average the replica transfer matrix computes.
pub fn replica_moment(proj: &ProjectedMatrix, k: usize, n: usize) -> Result<f64> {
    let g = proj.gram_dense()?;
    let p = proj.born_weights();
    let nb = proj.dim_b();
    let mut s = NeumaierSum::new();
    for a in 0..nb {
        for b in 0..nb {
            s += (p[a] * p[b]).powi(n as i32) * g[a * nb + b].norm_sqr().powi(k as i32);
        }
    }
    Ok(s.value())
}

/// Squared distance to a k-design, F^(k)/F_H^(k) − 1. Values in
/// [−1e−12, 0) are clipped to 0; larger violations are returned unchanged.
pub fn delta_squared(f: &FrameResult) -> f64 {
    delta_squared_from(f.value, f.haar_value())
}

pub fn delta_squared_from(value: f64, haar_value: f64) -> f64 {
    let d = value / haar_value - 1.0;
    if (-1e-12..0.0).contains(&d) {
        0.0
    } else {
        d
    }
}

/// Mean and standard error of 𝒫^k over a set of realization purities.
pub fn purity_moment(purities: &[f64], k: usize) -> Result<SampleMean> {
    if k == 0 {
        return Err(Error::InvalidArgument("purity moment order must be >= 1".into()));
    }
    let powered: Vec<f64> = purities.iter().map(|p| p.powi(k as i32)).collect();
    Ok(SampleMean::from_values(&powered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use crate::statevector::{evolve_brick_wall, Boundary, Placement};
    use nalgebra::DMatrix;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn evolved(len_a: usize, len_b: usize, placement: Placement, steps: u64, s: u64) -> (Statevector, Geometry) {
        let g = Geometry::new(Boundary::Open, placement, len_a, len_b).unwrap();
        let mut st = Statevector::product_state(len_a + len_b, 2).unwrap();
        evolve_brick_wall(&mut st, steps, &g, s).unwrap();
        (st, g)
    }

    /// F^(k) from explicitly normalized projected states by a double loop.
    fn brute_force_fp(proj: &ProjectedMatrix, k: usize) -> f64 {
        let p = proj.born_weights();
        let states: Vec<Option<Vec<C64>>> = (0..proj.dim_b())
            .map(|a| (p[a] >= NULL_OUTCOME_THRESHOLD).then(|| proj.column(a).iter().map(|x| x / p[a].sqrt()).collect()))
            .collect();
        let mut total = 0.0;
        for a in 0..proj.dim_b() {
            for b in 0..proj.dim_b() {
                if let (Some(x), Some(y)) = (&states[a], &states[b]) {
                    total += p[a] * p[b] * inner(x, y).norm_sqr().powi(k as i32);
                }
            }
        }
        total
    }

    #[test]
    fn product_state_has_one_outcome() {
        let g = Geometry::edge_obc(2, 3).unwrap();
        let s = Statevector::product_state(5, 2).unwrap();
        let proj = ProjectedMatrix::from_state(&s, &g).unwrap();
        let p = proj.born_weights();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&x| x == 0.0));
        assert_eq!(proj.column(0)[0], c(1.0));
        for k in 1..=4 {
            let f = frame_potential(&proj, k).unwrap();
            assert!((f.value - 1.0).abs() < 1e-15);
            assert_eq!(f.excluded_mass, 0.0);
        }
    }

    #[test]
    fn bell_pair_columns() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = Statevector::from_amplitudes(2, 2, vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        let proj = ProjectedMatrix::from_state(&s, &Geometry::edge_obc(1, 1).unwrap()).unwrap();
        assert!(inner(proj.column(0), proj.column(1)).norm() < 1e-15);
        for a in 0..2 {
            assert!((proj.born_weights()[a] - 0.5).abs() < 1e-15);
        }
        let f1 = frame_potential(&proj, 1).unwrap().value;
        assert!((f1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn completeness_and_purity_match() {
        for placement in [Placement::Edge, Placement::Bulk] {
            let (s, g) = evolved(3, 5, placement, 3, 21);
            let proj = ProjectedMatrix::from_state(&s, &g).unwrap();
            let total: f64 = proj.born_weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            let f1 = frame_potential(&proj, 1).unwrap().value;
            assert!((f1 - s.reduced_purity(&g).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn bulk_outcome_order_left_digits_first() {
        // L_A = 1 in the middle of 3 qubits, state |1 0 0>: outcome (left=1, right=0) = 2
        let mut amps = vec![c(0.0); 8];
        amps[4] = c(1.0);
        let s = Statevector::from_amplitudes(2, 3, amps).unwrap();
        let g = Geometry::new(Boundary::Open, Placement::Bulk, 1, 2).unwrap();
        let proj = ProjectedMatrix::from_state(&s, &g).unwrap();
        assert_eq!(proj.born_weights(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn matches_brute_force_oracle() {
        for (la, lb, steps, placement) in [(2, 4, 2, Placement::Edge), (1, 5, 4, Placement::Bulk), (3, 3, 1, Placement::Edge)] {
            let (s, g) = evolved(la, lb, placement, steps, 5);
            let proj = ProjectedMatrix::from_state(&s, &g).unwrap();
            for k in 1..=4 {
                let oracle = brute_force_fp(&proj, k);
                let got = frame_potential(&proj, k).unwrap().value;
                assert!((got - oracle).abs() < 1e-10, "k={k}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn blocked_equals_dense() {
        let (s, g) = evolved(3, 7, Placement::Edge, 3, 8);
        let proj = ProjectedMatrix::from_state(&s, &g).unwrap();
        let ks = [1, 2, 3, 5];
        let dense = frame_potentials_with(&proj, &ks, GramStrategy::Dense).unwrap();
        for block in [1, 7, 64, 1000] {
            let blocked = frame_potentials_with(&proj, &ks, GramStrategy::Blocked { block }).unwrap();
            for (d, b) in dense.iter().zip(&blocked) {
                assert!((d.value - b.value).abs() < 1e-12 * d.value.max(1.0), "block {block}");
            }
        }
    }

    #[test]
    fn global_phase_on_column_is_invisible() {
        let (s, g) = evolved(2, 4, Placement::Edge, 2, 13);
        let proj = ProjectedMatrix::from_state(&s, &g).unwrap();
        let mut data = proj.data.clone();
        let phase = C64::from_polar(1.0, 0.7);
        for x in &mut data[3 * proj.dim_a()..4 * proj.dim_a()] {
            *x *= phase;
        }
        let rotated = ProjectedMatrix::from_columns(2, 2, 4, data).unwrap();
        for k in 1..=3 {
            let a = frame_potential(&proj, k).unwrap().value;
            let b = frame_potential(&rotated, k).unwrap().value;
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn gram_is_hermitian_psd_and_bounded() {
        let (s, g) = evolved(2, 4, Placement::Edge, 2, 17);
        let proj = ProjectedMatrix::from_state(&s, &g).unwrap();
        let n = proj.dim_b();
        let gram = proj.gram_dense().unwrap();
        let p = proj.born_weights();
        for a in 0..n {
            for b in 0..n {
                assert_eq!(gram[a * n + b], gram[b * n + a].conj());
                assert!(gram[a * n + b].norm_sqr() <= p[a] * p[b] * (1.0 + 1e-12) + 1e-300);
            }
        }
        let m = DMatrix::from_row_slice(n, n, &gram);
        let eig = m.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= -1e-10));
        let rank = eig.iter().filter(|&&e| e > 1e-10).count();
        assert!(rank <= proj.dim_a());
    }

    #[test]
    fn frame_potential_bounded_below_by_haar() {
        for seed_ in 0..5 {
            let (s, g) = evolved(2, 6, Placement::Edge, 6, seed_);
            let proj = ProjectedMatrix::from_state(&s, &g).unwrap();
            for f in frame_potentials(&proj, &[1, 2, 3]).unwrap() {
                assert!(f.value >= f.haar_value() - 1e-12);
                assert!(f.excluded_mass < 1e-8);
                assert!((f.ln_value - f.value.ln()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_k_zero() {
        let s = Statevector::product_state(2, 2).unwrap();
        let proj = ProjectedMatrix::from_state(&s, &Geometry::edge_obc(1, 1).unwrap()).unwrap();
        assert!(frame_potential(&proj, 0).is_err());
        assert!(frame_potentials(&proj, &[]).is_err());
    }

    #[test]
    fn delta_squared_examples() {
        let f = FrameResult { k: 1, value: 0.5, ln_value: 0.5f64.ln(), excluded_mass: 0.0, q: 2, len_a: 1, len_b: 1 };
        assert_eq!(delta_squared(&f), 0.0);
        let single = FrameResult { value: 1.0, ln_value: 0.0, ..f };
        assert!((delta_squared(&single) - 1.0).abs() < 1e-15);
        assert_eq!(delta_squared_from(1.0 - 1e-13, 1.0), 0.0);
        assert!(delta_squared_from(0.9, 1.0) < 0.0);
    }

    #[test]
    fn purity_moment_examples() {
        let m = purity_moment(&[1.0; 10], 3).unwrap();
        assert_eq!((m.mean, m.sem), (1.0, Some(0.0)));
        let lone = purity_moment(&[0.5], 2).unwrap();
        assert_eq!(lone.sem, None);
        assert!(purity_moment(&[0.5, 0.5], 0).is_err());
        let rs = seed::realization_seed(1, 2);
        assert_ne!(rs, 0);
    }
}
