//! The symmetric group S_m in one-line notation, plus the replica-space
//! constructions used for projected-ensemble frame potentials: boundary
//! permutations, factorization tests, overlaps and the α ↔ α′ pairing.
//!
//! Permutations are 0-indexed: entry `i` of the image sequence is σ(i).

use std::fmt;

use crate::error::{Error, Result};

/// Largest degree for which [`all_permutations`] will enumerate S_m.
pub const MAX_ENUMERATION_DEGREE: usize = 8;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        assert!(m >= 1, "permutation degree must be positive");
        Self { images: (0..m).collect() }
    }

    /// Checked constructor from an image sequence.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let m = images.len();
        if m == 0 {
            return Err(Error::InvalidPermutation("degree must be at least 1".into()));
        }
        let mut seen = vec![false; m];
        for &x in &images {
            if x >= m {
                return Err(Error::InvalidPermutation(format!("image {x} out of range 0..{m}")));
            }
            if std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidPermutation(format!("image {x} repeated")));
            }
        }
        Ok(Self { images })
    }

    /// The reversal ι_m: i ↦ m − 1 − i.
    pub fn reversal(m: usize) -> Self {
        assert!(m >= 1, "permutation degree must be positive");
        Self { images: (0..m).rev().collect() }
    }

    /// The cyclic translation τ_m: 0 ↦ m − 1 and i ↦ i − 1 otherwise.
    pub fn translation(m: usize) -> Self {
        assert!(m >= 1, "permutation degree must be positive");
        Self { images: (0..m).map(|i| if i == 0 { m - 1 } else { i - 1 }).collect() }
    }

    /// The transposition exchanging `i` and `j` in S_m.
    pub fn transposition(m: usize, i: usize, j: usize) -> Result<Self> {
        if i >= m || j >= m {
            return Err(Error::InvalidArgument(format!(
                "transposition ({i} {j}) outside degree {m}"
            )));
        }
        let mut p = Self::identity(m);
        p.images.swap(i, j);
        Ok(p)
    }

    /// Group degree m.
    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `self ∘ other`, i.e. i ↦ self(other(i)).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_degree(other)?;
        Ok(self.compose_unchecked(other))
    }

    pub(crate) fn compose_unchecked(&self, other: &Self) -> Self {
        Self { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x] = i;
        }
        Self { images: inv }
    }

    /// Disjoint cycles, fixed points included, each starting at its smallest
    /// element; cycles are ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let m = self.degree();
        let mut seen = vec![false; m];
        let mut out = Vec::new();
        for start in 0..m {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i);
                i = self.images[i];
            }
            out.push(cycle);
        }
        out
    }

    /// Number of disjoint cycles N_c, counting fixed points.
    pub fn cycle_count(&self) -> usize {
        let m = self.degree();
        let mut seen = vec![false; m];
        let mut count = 0;
        for start in 0..m {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
            }
        }
        count
    }

    /// Cycle lengths sorted in decreasing order (the conjugacy class label).
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut lens: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }

    /// If the permutation is a product of disjoint transpositions without
    /// fixed points, returns them as `(smaller, larger)` pairs.
    pub fn as_disjoint_transpositions(&self) -> Option<Vec<(usize, usize)>> {
        self.cycles()
            .into_iter()
            .map(|c| if c.len() == 2 { Some((c[0].min(c[1]), c[0].max(c[1]))) } else { None })
            .collect()
    }

    /// Lexicographic rank in S_m (Lehmer code), so that
    /// `all_permutations(m)?[p.rank()] == p`.
    pub fn rank(&self) -> usize {
        let m = self.degree();
        let mut rank = 0;
        for i in 0..m {
            let smaller_after = self.images[i + 1..].iter().filter(|&&x| x < self.images[i]).count();
            rank = rank * (m - i) + smaller_after;
        }
        rank
    }

    fn check_degree(&self, other: &Self) -> Result<()> {
        if self.degree() != other.degree() {
            return Err(Error::DegreeMismatch { expected: self.degree(), got: other.degree() });
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.images)
    }
}

/// Cycle notation, fixed points included: `(0 3)(1 2)`.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for cycle in self.cycles() {
            write!(f, "(")?;
            for (n, i) in cycle.iter().enumerate() {
                if n > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{i}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Number of disjoint cycles of `s`.
pub fn cycle_count(s: &Permutation) -> usize {
    s.cycle_count()
}

/// Transposition distance d(a, b) = m − N_c(a b⁻¹).
pub fn transposition_distance(a: &Permutation, b: &Permutation) -> Result<usize> {
    a.check_degree(b)?;
    Ok(a.degree() - a.compose_unchecked(&b.inverse()).cycle_count())
}

/// Block-diagonal embedding (a, b) ∈ S_{m_a + m_b}; `b` acts on the last
/// m_b points.
pub fn embed(a: &Permutation, b: &Permutation) -> Permutation {
    let shift = a.degree();
    let images = a.images.iter().copied().chain(b.images.iter().map(|&x| x + shift)).collect();
    Permutation { images }
}

/// Iterated embedding (p₁, (p₂, (…))).
pub fn embed_all<'a, I>(parts: I) -> Option<Permutation>
where
    I: IntoIterator<Item = &'a Permutation>,
{
    parts.into_iter().fold(None, |acc, p| match acc {
        None => Some(p.clone()),
        Some(acc) => Some(embed(&acc, p)),
    })
}

/// Replica bookkeeping: `n` spectator replicas per side and `k` overlap
/// replicas, for a total degree of 2(n + k).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReplicaSplit {
    pub n: usize,
    pub k: usize,
}

impl ReplicaSplit {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("replica split needs k >= 1".into()));
        }
        Ok(Self { n, k })
    }

    /// Size of each half, n + k.
    pub fn half(&self) -> usize {
        self.n + self.k
    }

    /// Boundary degree 2(n + k).
    pub fn degree(&self) -> usize {
        2 * self.half()
    }
}

/// Top boundary permutation of region A: (𝟙_n, ι_{2k}, 𝟙_n).
pub fn mu_a(split: ReplicaSplit) -> Permutation {
    let middle = Permutation::reversal(2 * split.k);
    if split.n == 0 {
        return middle;
    }
    let spectators = Permutation::identity(split.n);
    embed(&embed(&spectators, &middle), &spectators)
}

/// True iff `s` maps the first n + k points onto themselves, i.e.
/// s = (σ₁, σ₂) with σ₁, σ₂ ∈ S_{n+k}.
pub fn is_factorized(s: &Permutation, split: ReplicaSplit) -> Result<bool> {
    if s.degree() != split.degree() {
        return Err(Error::DegreeMismatch { expected: split.degree(), got: s.degree() });
    }
    let h = split.half();
    Ok(s.images[..h].iter().all(|&x| x < h))
}

/// ⟨⟨a‖b⟩⟩ = q^{N_c(a b⁻¹)} as an exact integer.
pub fn permutation_overlap(a: &Permutation, b: &Permutation, q: u64) -> Result<u128> {
    a.check_degree(b)?;
    let cycles = a.compose_unchecked(&b.inverse()).cycle_count();
    (q as u128)
        .checked_pow(cycles as u32)
        .ok_or_else(|| Error::OutOfRange(format!("{q}^{cycles} overflows u128")))
}

/// Natural log of [`permutation_overlap`].
pub fn log_permutation_overlap(a: &Permutation, b: &Permutation, q: f64) -> Result<f64> {
    a.check_degree(b)?;
    Ok(a.compose_unchecked(&b.inverse()).cycle_count() as f64 * q.ln())
}

/// Overlap of a permutation with the measured-site boundary state:
/// q² for factorized permutations, q otherwise.
pub fn b_boundary_overlap(s: &Permutation, split: ReplicaSplit, q: u64) -> Result<u64> {
    Ok(if is_factorized(s, split)? { q * q } else { q })
}

/// The α′ ∈ S_k fixed by (𝟙_k, α′) = ι_{2k} (α⁻¹, 𝟙_k) ι_{2k}; it is the
/// unique partner minimizing d(ι_{2k}, (α, α′)), which then equals k.
pub fn partner_alpha(alpha: &Permutation) -> Permutation {
    let k = alpha.degree();
    let iota = Permutation::reversal(2 * k);
    let conj = iota.compose_unchecked(&embed(&alpha.inverse(), &Permutation::identity(k))).compose_unchecked(&iota);
    debug_assert!(conj.images[..k].iter().enumerate().all(|(i, &x)| i == x));
    Permutation { images: conj.images[k..].iter().map(|&x| x - k).collect() }
}

/// All of S_m in lexicographic order of image sequences.
pub fn all_permutations(m: usize) -> Result<Vec<Permutation>> {
    if m == 0 || m > MAX_ENUMERATION_DEGREE {
        return Err(Error::OverBudget {
            what: format!("enumeration of S_{m}"),
            required: m as u128,
            limit: MAX_ENUMERATION_DEGREE as u128,
        });
    }
    let mut current: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity((1..=m).product());
    loop {
        out.push(Permutation { images: current.clone() });
        // next lexicographic permutation
        let Some(i) = (0..m - 1).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    Ok(out)
}
