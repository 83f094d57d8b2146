//! Dense pure-state simulation of the brick-wall random circuit on a chain
//! of `L` q-dits.
//!
//! Amplitudes are stored contiguously; the index is the base-q digit string
//! of the site orbitals with site 0 the most significant digit. One time step
//! is two brick layers: layer 0 acts on pairs (0,1),(2,3),…, layer 1 on
//! (1,2),(3,4),… and, under periodic boundaries, on the wrap pair (L−1, 0).

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::projected::ProjectedMatrix;
use crate::seed;

/// Default cap on the number of stored amplitudes (2²⁶, 1 GiB of state).
pub const DEFAULT_MAX_AMPLITUDES: u128 = 1 << 26;

const DUMP_MAGIC: &[u8; 4] = b"DTSV";
const DUMP_VERSION: u32 = 1;

/// Below this many amplitudes a gate is applied on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 15;
const MIN_CHUNK: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Where region A sits in the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placement {
    /// A occupies sites `0..L_A`.
    Edge,
    /// A occupies `⌊L_B/2⌋..⌊L_B/2⌋ + L_A`; for odd L_B the extra B site is on
    /// the right.
    Bulk,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "obc",
            Boundary::Periodic => "pbc",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obc" => Ok(Boundary::Open),
            "pbc" => Ok(Boundary::Periodic),
            _ => Err(Error::InvalidArgument(format!("boundary must be obc or pbc, got {s:?}"))),
        }
    }
}

impl Placement {
    pub fn as_str(self) -> &'static str {
        match self {
            Placement::Edge => "edge",
            Placement::Bulk => "bulk",
        }
    }
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge" => Ok(Placement::Edge),
            "bulk" => Ok(Placement::Bulk),
            _ => Err(Error::InvalidArgument(format!("geometry must be edge or bulk, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Geometry {
    pub boundary: Boundary,
    pub placement: Placement,
    pub len_a: usize,
    pub len_b: usize,
}

impl Geometry {
    pub fn new(boundary: Boundary, placement: Placement, len_a: usize, len_b: usize) -> Result<Self> {
        if len_a == 0 {
            return Err(Error::InvalidArgument("region A needs at least one site".into()));
        }
        let l = len_a + len_b;
        if boundary == Boundary::Periodic && !l.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "periodic brick layers need an even chain length, got L = {l}"
            )));
        }
        Ok(Self { boundary, placement, len_a, len_b })
    }

    pub fn edge_obc(len_a: usize, len_b: usize) -> Result<Self> {
        Self::new(Boundary::Open, Placement::Edge, len_a, len_b)
    }

    pub fn sites(&self) -> usize {
        self.len_a + self.len_b
    }

    /// First site of region A.
    pub fn a_offset(&self) -> usize {
        match self.placement {
            Placement::Edge => 0,
            Placement::Bulk => self.len_b / 2,
        }
    }

    /// Sites of B to the left of A.
    pub fn b_left(&self) -> usize {
        self.a_offset()
    }

    /// Sites of B to the right of A.
    pub fn b_right(&self) -> usize {
        self.len_b - self.a_offset()
    }

    /// Left sites and wrap flags of the gates in `layer` (0 or 1).
    pub fn layer_pairs(&self, layer: usize) -> Vec<(usize, bool)> {
        let l = self.sites();
        let mut pairs: Vec<(usize, bool)> = (layer % 2..l.saturating_sub(1)).step_by(2).map(|j| (j, false)).collect();
        if layer % 2 == 1 && self.boundary == Boundary::Periodic && l >= 2 {
            pairs.push((l - 1, true));
        }
        pairs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    q: usize,
    sites: usize,
    amps: Vec<C64>,
}

/// q^n as u128, saturating.
fn pow_u128(q: usize, n: usize) -> u128 {
    (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

impl Statevector {
    /// |0⟩^⊗L with the default memory cap.
    pub fn product_state(sites: usize, q: usize) -> Result<Self> {
        Self::product_state_with_budget(sites, q, DEFAULT_MAX_AMPLITUDES)
    }

    pub fn product_state_with_budget(sites: usize, q: usize, max_amplitudes: u128) -> Result<Self> {
        if sites == 0 || q < 2 {
            return Err(Error::InvalidArgument(format!("need L >= 1 and q >= 2, got L = {sites}, q = {q}")));
        }
        let dim = pow_u128(q, sites);
        if dim > max_amplitudes {
            return Err(Error::OverBudget {
                what: format!(
                    "statevector q = {q}, L = {sites} ({} bytes)",
                    dim.saturating_mul(std::mem::size_of::<C64>() as u128)
                ),
                required: dim,
                limit: max_amplitudes,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim as usize];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { q, sites, amps })
    }

    /// Wraps an existing amplitude vector; its length must be q^L.
    pub fn from_amplitudes(q: usize, sites: usize, amps: Vec<C64>) -> Result<Self> {
        if q < 2 || sites == 0 || pow_u128(q, sites) != amps.len() as u128 {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes do not match q = {q}, L = {sites}",
                amps.len()
            )));
        }
        Ok(Self { q, sites, amps })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn stride(&self, site: usize) -> usize {
        self.q.pow((self.sites - 1 - site) as u32)
    }

    /// Applies a q²×q² row-major `gate` to the pair (j, j+1), or to the wrap
    /// pair (L−1, 0) when `wrap` is set. The first gate index is site j.
    pub fn apply_two_site_gate(&mut self, gate: &[C64], j: usize, wrap: bool) -> Result<()> {
        let l = self.sites;
        let d = self.q * self.q;
        if gate.len() != d * d {
            return Err(Error::InvalidArgument(format!("gate has {} entries, expected {}", gate.len(), d * d)));
        }
        let second = if wrap {
            if j != l - 1 || l < 2 {
                return Err(Error::InvalidArgument(format!("wrap gate must act on ({}, 0), got j = {j}", l - 1)));
            }
            0
        } else {
            if j + 1 >= l {
                return Err(Error::InvalidArgument(format!("gate site {j} out of range for L = {l}")));
            }
            j + 1
        };
        let (s1, s2) = (self.stride(j), self.stride(second));
        let (hi, lo) = (s1.max(s2), s1.min(s2));
        let q = self.q;
        let offsets: Vec<usize> = (0..d).map(|x| (x / q) * s1 + (x % q) * s2).collect();
        // chunks must be whole multiples of the outer period hi * q
        let period = hi * q;
        let chunk = period * (MIN_CHUNK / period).max(1);
        let kernel = |block: &mut [C64]| {
            let mut buf = vec![C64::new(0.0, 0.0); d];
            for a in (0..block.len()).step_by(hi * q) {
                for b in (a..a + hi).step_by(lo * q) {
                    for c in b..b + lo {
                        for (x, o) in offsets.iter().enumerate() {
                            buf[x] = block[c + o];
                        }
                        for (row, o) in gate.chunks_exact(d).zip(&offsets) {
                            block[c + o] = row.iter().zip(&buf).map(|(g, v)| g * v).sum();
                        }
                    }
                }
            }
        };
        if self.amps.len() >= PARALLEL_THRESHOLD && self.amps.len() > chunk {
            self.amps.par_chunks_mut(chunk).for_each(kernel);
        } else {
            kernel(&mut self.amps);
        }
        Ok(())
    }

    /// Tr_A[(Tr_B ρ)²] for the bipartition described by `geometry`.
    pub fn reduced_purity(&self, geometry: &Geometry) -> Result<f64> {
        Ok(ProjectedMatrix::from_state(self, geometry)?.purity())
    }

    /// Writes the debug dump: magic, version, q, L, seed, then interleaved
    /// little-endian (re, im) doubles.
    pub fn write_dump<W: Write>(&self, mut w: W, seed: u64) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.q as u32).to_le_bytes())?;
        w.write_all(&(self.sites as u32).to_le_bytes())?;
        w.write_all(&seed.to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump written by [`Statevector::write_dump`]; returns the state
    /// and the recorded seed.
    pub fn read_dump<R: Read>(mut r: R) -> Result<(Self, u64)> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::InvalidArgument("not a statevector dump".into()));
        }
        let mut word = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word))
        };
        let version = read_u32(&mut r)?;
        if version != DUMP_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported dump version {version}")));
        }
        let q = read_u32(&mut r)? as usize;
        let sites = read_u32(&mut r)? as usize;
        let mut long = [0u8; 8];
        r.read_exact(&mut long)?;
        let seed = u64::from_le_bytes(long);
        let dim = pow_u128(q, sites);
        if q < 2 || sites == 0 || dim > DEFAULT_MAX_AMPLITUDES {
            return Err(Error::InvalidArgument(format!("bad dump header q = {q}, L = {sites}")));
        }
        let mut amps = Vec::with_capacity(dim as usize);
        let mut pair = [0u8; 16];
        for _ in 0..dim {
            r.read_exact(&mut pair)?;
            let re = f64::from_le_bytes(pair[..8].try_into().unwrap());
            let im = f64::from_le_bytes(pair[8..].try_into().unwrap());
            amps.push(C64::new(re, im));
        }
        Ok((Self { q, sites, amps }, seed))
    }
}

/// A Haar-random q²×q² unitary, row-major: QR of a complex Ginibre matrix
/// with the phases of diag(R) divided out of Q.
pub fn sample_haar_gate<R: Rng + ?Sized>(q: usize, rng: &mut R) -> Vec<C64> {
    sample_haar_unitary(q * q, rng)
}

/// A Haar-random d×d unitary, row-major.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::<C64>::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        let phase = if norm > 0.0 { rjj / norm } else { C64::new(1.0, 0.0) };
        col *= phase;
    }
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(q[(i, j)]);
        }
    }
    out
}

/// Max-norm of U†U − 𝟙 for a row-major d×d matrix.
pub fn unitarity_defect(u: &[C64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let s: C64 = (0..d).map(|r| u[r * d + i].conj() * u[r * d + j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

/// Provenance of one applied gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateRecord {
    pub tau: u64,
    pub layer: u8,
    pub site: usize,
    pub wrap: bool,
    pub seed: u64,
}

/// Applies time step `tau` (two brick layers) with gates drawn from seeds
/// derived from `realization_seed`.
pub fn apply_time_step(
    state: &mut Statevector,
    tau: u64,
    geometry: &Geometry,
    realization_seed: u64,
) -> Result<Vec<GateRecord>> {
    if geometry.sites() != state.sites() {
        return Err(Error::InvalidArgument(format!(
            "geometry has {} sites, state has {}",
            geometry.sites(),
            state.sites()
        )));
    }
    let mut log = Vec::new();
    for layer in 0..2u8 {
        for (site, wrap) in geometry.layer_pairs(layer as usize) {
            let gseed = seed::gate_seed(realization_seed, tau, layer as u64, site as u64);
            let gate = sample_haar_gate(state.q(), &mut seed::rng_from_seed(gseed));
            state.apply_two_site_gate(&gate, site, wrap)?;
            log.push(GateRecord { tau, layer, site, wrap, seed: gseed });
        }
    }
    Ok(log)
}

/// Applies `steps` time steps τ = 1..=steps in place and returns the gate log.
pub fn evolve_brick_wall(
    state: &mut Statevector,
    steps: u64,
    geometry: &Geometry,
    realization_seed: u64,
) -> Result<Vec<GateRecord>> {
    let mut log = Vec::new();
    for tau in 1..=steps {
        log.extend(apply_time_step(state, tau, geometry, realization_seed)?);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn identity_gate(d: usize) -> Vec<C64> {
        (0..d * d).map(|x| if x / d == x % d { c(1.0) } else { c(0.0) }).collect()
    }

    fn swap_gate(q: usize) -> Vec<C64> {
        let d = q * q;
        let mut g = vec![c(0.0); d * d];
        for a in 0..q {
            for b in 0..q {
                g[(b * q + a) * d + (a * q + b)] = c(1.0);
            }
        }
        g
    }

    fn dagger(u: &[C64], d: usize) -> Vec<C64> {
        let mut out = vec![c(0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                out[j * d + i] = u[i * d + j].conj();
            }
        }
        out
    }

    fn random_state(q: usize, sites: usize, seed: u64) -> Statevector {
        let mut s = Statevector::product_state(sites, q).unwrap();
        let g = Geometry::new(Boundary::Open, Placement::Edge, 1, sites - 1).unwrap();
        evolve_brick_wall(&mut s, 3, &g, seed).unwrap();
        s
    }

    #[test]
    fn product_state_examples() {
        let s = Statevector::product_state(1, 2).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0)]);
        let s = Statevector::product_state(2, 3).unwrap();
        assert_eq!(s.amplitudes().len(), 9);
        assert_eq!(s.amplitudes()[0], c(1.0));
        for (l, q) in [(1, 2), (5, 2), (3, 3), (2, 5)] {
            assert_eq!(Statevector::product_state(l, q).unwrap().norm_sqr(), 1.0);
        }
        let err = Statevector::product_state(30, 2).unwrap_err();
        assert!(matches!(err, Error::OverBudget { required, .. } if required == 1 << 30));
        assert!(Statevector::product_state(0, 2).is_err());
        assert!(Statevector::product_state(3, 1).is_err());
    }

    #[test]
    fn haar_gate_is_unitary() {
        let mut rng = seed::rng_from_seed(1);
        for q in [2, 3] {
            for _ in 0..50 {
                let u = sample_haar_gate(q, &mut rng);
                assert!(unitarity_defect(&u, q * q) < 1e-12);
            }
        }
    }

    #[test]
    fn identity_gate_is_exact_noop() {
        let mut s = random_state(2, 5, 3);
        let before = s.clone();
        s.apply_two_site_gate(&identity_gate(4), 2, false).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn swap_moves_excitation() {
        // |01> -> |10>
        let mut s = Statevector::from_amplitudes(2, 2, vec![c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        s.apply_two_site_gate(&swap_gate(2), 0, false).unwrap();
        assert_eq!(s.amplitudes(), &[c(0.0), c(0.0), c(1.0), c(0.0)]);
        // wrap pair on a 3-qutrit chain: site 2 holds 1, after swap site 0 does
        let mut amps = vec![c(0.0); 27];
        amps[1] = c(1.0);
        let mut s = Statevector::from_amplitudes(3, 3, amps).unwrap();
        s.apply_two_site_gate(&swap_gate(3), 2, true).unwrap();
        assert_eq!(s.amplitudes()[9], c(1.0));
    }

    #[test]
    fn gate_then_inverse_round_trips() {
        let mut rng = seed::rng_from_seed(9);
        for (q, sites) in [(2, 6), (3, 4)] {
            let mut s = random_state(q, sites, 11);
            let before = s.clone();
            let u = sample_haar_gate(q, &mut rng);
            for (j, wrap) in [(1, false), (sites - 1, true)] {
                s.apply_two_site_gate(&u, j, wrap).unwrap();
                s.apply_two_site_gate(&dagger(&u, q * q), j, wrap).unwrap();
            }
            for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gate_site_errors() {
        let mut s = Statevector::product_state(4, 2).unwrap();
        let g = identity_gate(4);
        assert!(s.apply_two_site_gate(&g, 3, false).is_err());
        assert!(s.apply_two_site_gate(&g, 1, true).is_err());
        assert!(s.apply_two_site_gate(&g[..4], 0, false).is_err());
    }

    #[test]
    fn disjoint_gates_commute() {
        let geometry = Geometry::edge_obc(4, 4).unwrap();
        let base = random_state(2, 8, 5);
        let mut rng = seed::rng_from_seed(77);
        let pairs = geometry.layer_pairs(0);
        let gates: Vec<Vec<C64>> = pairs.iter().map(|_| sample_haar_gate(2, &mut rng)).collect();
        let mut forward = base.clone();
        for ((j, w), g) in pairs.iter().zip(&gates) {
            forward.apply_two_site_gate(g, *j, *w).unwrap();
        }
        let mut backward = base.clone();
        for ((j, w), g) in pairs.iter().zip(&gates).rev() {
            backward.apply_two_site_gate(g, *j, *w).unwrap();
        }
        for (a, b) in forward.amplitudes().iter().zip(backward.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn layer_layout() {
        let g = Geometry::edge_obc(3, 2).unwrap();
        assert_eq!(g.layer_pairs(0), vec![(0, false), (2, false)]);
        assert_eq!(g.layer_pairs(1), vec![(1, false), (3, false)]);
        let g = Geometry::new(Boundary::Periodic, Placement::Bulk, 2, 4).unwrap();
        assert_eq!(g.layer_pairs(0), vec![(0, false), (2, false), (4, false)]);
        assert_eq!(g.layer_pairs(1), vec![(1, false), (3, false), (5, true)]);
        assert!(Geometry::new(Boundary::Periodic, Placement::Bulk, 2, 3).is_err());
        assert!(Geometry::new(Boundary::Open, Placement::Bulk, 0, 3).is_err());
    }

    #[test]
    fn bulk_offsets() {
        let g = Geometry::new(Boundary::Open, Placement::Bulk, 5, 11).unwrap();
        assert_eq!((g.a_offset(), g.b_left(), g.b_right()), (5, 5, 6));
        let g = Geometry::new(Boundary::Open, Placement::Bulk, 2, 4).unwrap();
        assert_eq!((g.b_left(), g.b_right()), (2, 2));
    }

    #[test]
    fn evolution_preserves_norm_and_is_deterministic() {
        let g = Geometry::edge_obc(4, 4).unwrap();
        let mut a = Statevector::product_state(8, 2).unwrap();
        let untouched = a.clone();
        assert!(evolve_brick_wall(&mut a, 0, &g, 1).unwrap().is_empty());
        assert_eq!(a, untouched);
        let log = evolve_brick_wall(&mut a, 10, &g, 1).unwrap();
        assert_eq!(log.len(), 10 * 7);
        assert!((a.norm_sqr() - 1.0).abs() < 1e-10);
        let mut b = Statevector::product_state(8, 2).unwrap();
        evolve_brick_wall(&mut b, 10, &g, 1).unwrap();
        assert_eq!(a, b);
        let pbc = Geometry::new(Boundary::Periodic, Placement::Bulk, 4, 4).unwrap();
        let mut p = Statevector::product_state(8, 2).unwrap();
        let log = evolve_brick_wall(&mut p, 10, &pbc, 1).unwrap();
        assert_eq!(log.len(), 10 * 8);
        assert!((p.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn purity_examples() {
        let g = Geometry::edge_obc(3, 3).unwrap();
        assert!((Statevector::product_state(6, 2).unwrap().reduced_purity(&g).unwrap() - 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = Statevector::from_amplitudes(2, 2, vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        let g = Geometry::edge_obc(1, 1).unwrap();
        assert!((bell.reduced_purity(&g).unwrap() - 0.5).abs() < 1e-15);
        // A = whole chain
        let s = random_state(2, 6, 2);
        for placement in [Placement::Edge, Placement::Bulk] {
            let g = Geometry::new(Boundary::Open, placement, 6, 0).unwrap();
            assert!((s.reduced_purity(&g).unwrap() - 1.0).abs() < 1e-12);
        }
        let g = Geometry::new(Boundary::Periodic, Placement::Bulk, 6, 0).unwrap();
        assert!((s.reduced_purity(&g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let s = random_state(3, 3, 4);
        let mut buf = Vec::new();
        s.write_dump(&mut buf, 1234).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 4 + 8 + 27 * 16);
        let (back, seed) = Statevector::read_dump(buf.as_slice()).unwrap();
        assert_eq!(seed, 1234);
        assert_eq!(back, s);
        buf[0] = b'X';
        assert!(Statevector::read_dump(buf.as_slice()).is_err());
    }
}
