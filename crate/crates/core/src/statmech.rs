//! Exact circuit averages through the permutation statistical-mechanics
//! mapping. Averaging m copies of each Haar gate, (u ⊗ u*)^{⊗m}, projects
//! the gate's two sites onto aligned permutation states Σ_σ c_σ ‖σ⟩⟩‖σ⟩⟩
//! with Weingarten weights. The field lives on (m! + 1)^L configurations:
//! each site carries a permutation or the untouched initial label `zero`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::perm::{self, Permutation, ReplicaSplit};
use crate::statevector::Geometry;

/// Largest number of field configurations the contraction will allocate.
pub const MAX_ORACLE_CONFIGS: u128 = 1 << 20;

/// Largest replica count accepted by the oracle.
pub const MAX_ORACLE_DEGREE: usize = 6;

/// Gram matrices with a larger condition number are treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e10;

/// Wg(σ; d) for every σ ∈ S_m, indexed by lexicographic rank.
#[derive(Clone, Debug)]
pub struct WeingartenTable {
    m: usize,
    d: f64,
    values: Vec<f64>,
    /// Full inverse Gram matrix, entry (σ, τ) = Wg(στ⁻¹; d).
    inverse: DMatrix<f64>,
}

impl WeingartenTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn value(&self, sigma: &Permutation) -> Result<f64> {
        if sigma.degree() != self.m {
            return Err(Error::DegreeMismatch { expected: self.m, got: sigma.degree() });
        }
        Ok(self.values[sigma.rank()])
    }

    /// One (cycle type, Wg) entry per conjugacy class, sorted by cycle type.
    pub fn by_cycle_type(&self) -> Result<Vec<(Vec<usize>, f64)>> {
        let mut classes: Vec<(Vec<usize>, f64)> = Vec::new();
        for p in perm::all_permutations(self.m)? {
            let ct = p.cycle_type();
            if !classes.iter().any(|(c, _)| *c == ct) {
                classes.push((ct, self.values[p.rank()]));
            }
        }
        classes.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(classes)
    }

    /// max_{σ,π} |Σ_τ Wg(στ⁻¹) d^{N_c(τπ⁻¹)} − δ_{σπ}|.
    pub fn defining_relation_residual(&self) -> Result<f64> {
        let gram = gram_matrix(self.m, self.d)?;
        let product = &self.inverse * gram;
        let n = product.nrows();
        Ok((0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (product[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max))
    }
}

fn gram_matrix(m: usize, d: f64) -> Result<DMatrix<f64>> {
    let perms = perm::all_permutations(m)?;
    let n = perms.len();
    Ok(DMatrix::from_fn(n, n, |i, j| d.powi(perms[i].compose_unchecked(&perms[j].inverse()).cycle_count() as i32)))
}

/// Inverts the m! × m! matrix [d^{N_c(στ⁻¹)}].
pub fn weingarten_table(m: usize, d: f64) -> Result<WeingartenTable> {
    if m == 0 || m > MAX_ORACLE_DEGREE {
        return Err(Error::OutOfRange(format!("Weingarten table needs 1 <= m <= {MAX_ORACLE_DEGREE}, got {m}")));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("dimension must be positive, got {d}")));
    }
    let gram = gram_matrix(m, d)?;
    let sv = gram.clone().singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::SingularGram { m, d, condition });
    }
    let inverse = gram.try_inverse().ok_or(Error::SingularGram { m, d, condition })?;
    // identity has rank 0
    let values = (0..inverse.nrows()).map(|i| inverse[(i, 0)]).collect();
    Ok(WeingartenTable { m, d, values, inverse })
}

/// Site label: a permutation (by lexicographic rank) or the initial state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Perm(usize),
    Zero,
}

/// One label per site, decoded from a configuration index whose base is
/// m! + 1 with site 0 the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationField {
    pub m: usize,
    pub labels: Vec<Label>,
}

impl PermutationField {
    pub fn from_index(m: usize, sites: usize, mut index: usize) -> Result<Self> {
        let nperm: usize = (1..=m).product();
        let base = nperm + 1;
        let mut labels = vec![Label::Zero; sites];
        for s in (0..sites).rev() {
            let digit = index % base;
            labels[s] = if digit == nperm { Label::Zero } else { Label::Perm(digit) };
            index /= base;
        }
        if index != 0 {
            return Err(Error::OutOfRange(format!("configuration index exceeds {base}^{sites}")));
        }
        Ok(Self { m, labels })
    }

    pub fn index(&self) -> usize {
        let nperm: usize = (1..=self.m).product();
        self.labels.iter().fold(0, |acc, l| {
            acc * (nperm + 1)
                + match l {
                    Label::Perm(r) => *r,
                    Label::Zero => nperm,
                }
        })
    }
}

/// Averaged two-site gate in the permutation basis.
#[derive(Clone, Debug)]
pub struct GateSuperoperator {
    m: usize,
    q: usize,
    /// ⟨⟨τ|x⟩⟩ for τ ∈ S_m (rows) and x ∈ S_m ∪ {zero} (columns).
    overlaps: DMatrix<f64>,
    wg: WeingartenTable,
}

pub fn gate_superoperator(m: usize, q: usize) -> Result<GateSuperoperator> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("local dimension must be >= 2, got {q}")));
    }
    let wg = weingarten_table(m, (q * q) as f64)?;
    let perms = perm::all_permutations(m)?;
    let n = perms.len();
    let overlaps = DMatrix::from_fn(n, n + 1, |t, x| {
        if x == n {
            1.0
        } else {
            (q as f64).powi(perms[t].compose_unchecked(&perms[x].inverse()).cycle_count() as i32)
        }
    });
    Ok(GateSuperoperator { m, q, overlaps, wg })
}

impl GateSuperoperator {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of labels per site, m! + 1.
    pub fn labels(&self) -> usize {
        self.overlaps.ncols()
    }

    pub fn weingarten(&self) -> &WeingartenTable {
        &self.wg
    }

    /// Maps a pair state with coefficients `input[(x, y)]` on ‖x⟩⟩‖y⟩⟩ to
    /// the coefficients of ‖σ⟩⟩‖σ⟩⟩, σ by rank.
    pub fn apply(&self, input: &DMatrix<f64>) -> Vec<f64> {
        // v(τ) = Σ_{x,y} c(x,y) ⟨⟨τ|x⟩⟩⟨⟨τ|y⟩⟩, out = Wg v
        let w = input * self.overlaps.transpose();
        let n = self.overlaps.nrows();
        let v = nalgebra::DVector::from_fn(n, |t, _| (0..self.labels()).map(|x| self.overlaps[(t, x)] * w[(x, t)]).sum());
        (&self.wg.inverse * v).iter().copied().collect()
    }

    /// Coefficient of ‖σσ⟩⟩ produced from the single input ‖x⟩⟩‖y⟩⟩.
    pub fn matrix_element(&self, sigma: usize, x: Label, y: Label) -> f64 {
        let col = |l: Label| match l {
            Label::Perm(r) => r,
            Label::Zero => self.labels() - 1,
        };
        let (cx, cy) = (col(x), col(y));
        (0..self.overlaps.nrows())
            .map(|t| self.wg.inverse[(sigma, t)] * self.overlaps[(t, cx)] * self.overlaps[(t, cy)])
            .sum()
    }
}

/// Field weights after `t` averaged brick-wall steps from the product state.
fn evolve_field(gate: &GateSuperoperator, geometry: &Geometry, t: u64) -> Result<Vec<f64>> {
    let sites = geometry.sites();
    let base = gate.labels();
    let configs = (base as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
    if configs > MAX_ORACLE_CONFIGS {
        return Err(Error::OverBudget {
            what: format!("permutation field with {base} labels on {sites} sites"),
            required: configs,
            limit: MAX_ORACLE_CONFIGS,
        });
    }
    let configs = configs as usize;
    let mut state = vec![0.0; configs];
    state[configs - 1] = 1.0; // all sites zero
    let stride = |s: usize| base.pow((sites - 1 - s) as u32);
    let nperm = base - 1;
    let mut block = DMatrix::<f64>::zeros(base, base);
    for _ in 0..t {
        for layer in 0..2 {
            for (j, wrap) in geometry.layer_pairs(layer) {
                let (s1, s2) = if wrap { (stride(sites - 1), stride(0)) } else { (stride(j), stride(j + 1)) };
                for idx in 0..configs {
                    if (idx / s1) % base != 0 || (idx / s2) % base != 0 {
                        continue;
                    }
                    let mut any = false;
                    for x in 0..base {
                        for y in 0..base {
                            let c = state[idx + x * s1 + y * s2];
                            block[(x, y)] = c;
                            any |= c != 0.0;
                        }
                    }
                    if !any {
                        continue;
                    }
                    let out = gate.apply(&block);
                    for x in 0..base {
                        for y in 0..base {
                            state[idx + x * s1 + y * s2] = 0.0;
                        }
                    }
                    for (sigma, v) in out.into_iter().enumerate().take(nperm) {
                        state[idx + sigma * (s1 + s2)] = v;
                    }
                }
            }
        }
    }
    Ok(state)
}

/// Contracts the field with a product top boundary, one vector per site.
fn contract_top(state: &[f64], boundary: &[Vec<f64>]) -> f64 {
    let mut cur = state.to_vec();
    for b in boundary.iter().rev() {
        let base = b.len();
        cur = cur.chunks_exact(base).map(|c| c.iter().zip(b).map(|(x, w)| x * w).sum()).collect();
    }
    cur[0]
}

fn check_q(q: usize) -> Result<()> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("local dimension must be >= 2, got {q}")));
    }
    Ok(())
}

/// Exact circuit average of Σ_{a,a'} p(a)^n p(a')^n |G_{aa'}|^{2k} after `t`
/// brick-wall steps, for integer n ≥ 0. Replicas are ordered as n
/// spectators, 2k active copies, n spectators.
pub fn contract_frame_potential(q: usize, geometry: &Geometry, t: u64, k: usize, n: usize) -> Result<f64> {
    check_q(q)?;
    let split = ReplicaSplit::new(n, k)?;
    let m = split.degree();
    if m > MAX_ORACLE_DEGREE {
        return Err(Error::OutOfRange(format!("2n + 2k = {m} exceeds {MAX_ORACLE_DEGREE}")));
    }
    let gate = gate_superoperator(m, q)?;
    let perms = perm::all_permutations(m)?;
    let mu = perm::mu_a(split);
    let mut on_a: Vec<f64> = perms.iter().map(|p| (q as f64).powi(mu.compose_unchecked(&p.inverse()).cycle_count() as i32)).collect();
    on_a.push(1.0);
    let mut on_b = perms
        .iter()
        .map(|p| perm::b_boundary_overlap(p, split, q as u64).map(|v| v as f64))
        .collect::<Result<Vec<f64>>>()?;
    on_b.push(1.0);
    let boundary = site_boundaries(geometry, &on_a, &on_b);
    let state = evolve_field(&gate, geometry, t)?;
    Ok(contract_top(&state, &boundary))
}

/// Exact circuit average of 𝒫^k = (Tr ρ_A²)^k, with k swaps on A and the
/// identity on B as top boundary.
pub fn contract_purity_moment(q: usize, geometry: &Geometry, t: u64, k: usize) -> Result<f64> {
    check_q(q)?;
    if k == 0 {
        return Err(Error::InvalidArgument("purity moment order must be >= 1".into()));
    }
    let m = 2 * k;
    if m > MAX_ORACLE_DEGREE {
        return Err(Error::OutOfRange(format!("2k = {m} exceeds {MAX_ORACLE_DEGREE}")));
    }
    let gate = gate_superoperator(m, q)?;
    let perms = perm::all_permutations(m)?;
    let swaps = Permutation::from_images((0..m).map(|i| i ^ 1).collect())?;
    let overlap_with = |target: &Permutation| -> Vec<f64> {
        let mut v: Vec<f64> =
            perms.iter().map(|p| (q as f64).powi(target.compose_unchecked(&p.inverse()).cycle_count() as i32)).collect();
        v.push(1.0);
        v
    };
    let on_a = overlap_with(&swaps);
    let on_b = overlap_with(&Permutation::identity(m));
    let boundary = site_boundaries(geometry, &on_a, &on_b);
    let state = evolve_field(&gate, geometry, t)?;
    Ok(contract_top(&state, &boundary))
}

fn site_boundaries(geometry: &Geometry, on_a: &[f64], on_b: &[f64]) -> Vec<Vec<f64>> {
    let a = geometry.a_offset()..geometry.a_offset() + geometry.len_a;
    (0..geometry.sites()).map(|s| if a.contains(&s) { on_a.to_vec() } else { on_b.to_vec() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{Boundary, Placement};
    use approx::assert_relative_eq;

    #[test]
    fn weingarten_small_cases() {
        let w1 = weingarten_table(1, 7.0).unwrap();
        assert_relative_eq!(w1.value(&Permutation::identity(1)).unwrap(), 1.0 / 7.0, max_relative = 1e-14);
        for d in [2.0, 4.0, 9.0, 16.0] {
            let w2 = weingarten_table(2, d).unwrap();
            assert_relative_eq!(w2.value(&Permutation::identity(2)).unwrap(), 1.0 / (d * d - 1.0), max_relative = 1e-12);
            let swap = Permutation::transposition(2, 0, 1).unwrap();
            assert_relative_eq!(w2.value(&swap).unwrap(), -1.0 / (d * (d * d - 1.0)), max_relative = 1e-12);
        }
    }

    #[test]
    fn weingarten_defining_relation() {
        for m in 2..=4 {
            for d in [4.0, 9.0, 16.0] {
                assert!(weingarten_table(m, d).unwrap().defining_relation_residual().unwrap() <= 1e-10);
            }
        }
        assert!(weingarten_table(3, 4.0).unwrap().defining_relation_residual().unwrap() <= 1e-12);
    }

    #[test]
    fn weingarten_is_a_class_function() {
        let w = weingarten_table(4, 9.0).unwrap();
        let classes = w.by_cycle_type().unwrap();
        assert_eq!(classes.len(), 5);
        for p in perm::all_permutations(4).unwrap() {
            let (_, v) = classes.iter().find(|(ct, _)| *ct == p.cycle_type()).unwrap();
            assert_relative_eq!(w.value(&p).unwrap(), *v, max_relative = 1e-10);
        }
    }

    #[test]
    fn singular_gram_rejected() {
        match weingarten_table(3, 2.0) {
            Err(Error::SingularGram { m: 3, condition, .. }) => assert!(condition > MAX_GRAM_CONDITION),
            other => panic!("expected singular Gram, got {other:?}"),
        }
        assert!(matches!(weingarten_table(7, 64.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn aligned_pairs_are_fixed() {
        let g = gate_superoperator(2, 2).unwrap();
        let base = g.labels();
        for sigma in 0..2 {
            let mut input = DMatrix::zeros(base, base);
            input[(sigma, sigma)] = 1.0;
            let out = g.apply(&input);
            for (tau, v) in out.iter().enumerate() {
                assert!((v - if tau == sigma { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        // the untouched product state goes to Σ_σ Wg-weighted aligned pairs summing to one
        let mut zero = DMatrix::zeros(base, base);
        zero[(base - 1, base - 1)] = 1.0;
        let out = g.apply(&zero);
        assert_relative_eq!(out[0], 1.0 / (16.0 - 1.0) * (1.0 - 1.0 / 4.0), max_relative = 1e-12);
        assert_relative_eq!(out[0], out[1], max_relative = 1e-12);
        assert_relative_eq!(g.matrix_element(0, Label::Zero, Label::Zero), out[0], max_relative = 1e-12);
    }

    #[test]
    fn large_q_weingarten_scaling() {
        for m in [2, 3] {
            let q = 512.0f64;
            let w = weingarten_table(m, q * q).unwrap();
            let lead = w.value(&Permutation::identity(m)).unwrap() * q.powi(2 * m as i32);
            assert!((lead - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn field_index_round_trip() {
        let f = PermutationField { m: 3, labels: vec![Label::Perm(5), Label::Zero, Label::Perm(0)] };
        assert_eq!(PermutationField::from_index(3, 3, f.index()).unwrap(), f);
        assert!(PermutationField::from_index(2, 2, 9).is_err());
    }

    #[test]
    fn zero_steps_gives_product_state_values() {
        let g = Geometry::edge_obc(2, 2).unwrap();
        assert_relative_eq!(contract_frame_potential(2, &g, 0, 1, 0).unwrap(), 1.0);
        assert_relative_eq!(contract_purity_moment(2, &g, 0, 1).unwrap(), 1.0);
        assert_relative_eq!(contract_purity_moment(3, &g, 0, 2).unwrap(), 1.0);
    }

    #[test]
    fn purity_and_frame_potential_agree_at_k1_n0() {
        for placement in [Placement::Edge, Placement::Bulk] {
            let g = Geometry::new(Boundary::Open, placement, 2, 3).unwrap();
            for t in 0..4 {
                let a = contract_frame_potential(2, &g, t, 1, 0).unwrap();
                let b = contract_purity_moment(2, &g, t, 1).unwrap();
                assert!((a - b).abs() < 1e-12, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn purity_speed_before_the_light_cone_closes() {
        for q in [2usize, 3] {
            let g = Geometry::edge_obc(4, 4).unwrap();
            let speed = 2.0 * q as f64 / (1.0 + (q * q) as f64);
            for t in 1..=2 {
                let exact = contract_purity_moment(q, &g, t, 1).unwrap();
                assert_relative_eq!(exact, speed.powi(2 * t as i32), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let g = Geometry::edge_obc(3, 3).unwrap();
        match contract_frame_potential(2, &g, 1, 2, 0) {
            Err(Error::OverBudget { required, .. }) => assert_eq!(required, 25u128.pow(6)),
            other => panic!("expected budget error, got {other:?}"),
        }
        assert!(contract_frame_potential(2, &g, 1, 2, 1).is_err());
    }
}
