//! Decoding a Clifford-encoded register after a coherent Z-rotation layer.
//!
//! With `P_j = C^dag Z_j C` the circuit `C^dag V C` equals
//! `prod_j (c - i s P_j)`, `c = cos(alpha/2)`, `s = sin(alpha/2)`. Expanding the
//! product, a subset `A` of error locations contributes
//! `(-i s)^|A| c^(N-|A|) P_A |0>` where `P_A|0> = i^e |x_A>`. Its ancilla bits
//! `y_A` fix the syndrome, so the branch for syndrome `s` is the affine set of
//! subsets with `y_A = s`.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::clifford::CliffordTableau;
use crate::error::{Error, Result};
use crate::gf2::{gray_flip, XorBasis};
use crate::pauli::{i_pow, Pauli64, PauliString};

/// Branches with a smaller Born weight are reported as zero-probability.
pub const ZERO_PROB: f64 = 1e-28;

/// Uniform Z rotation `exp(-i alpha Z / 2)` on every qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorModel {
    alpha: f64,
}

impl ErrorModel {
    pub fn new(alpha: f64) -> Self {
        ErrorModel { alpha }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cos_half(&self) -> f64 {
        (self.alpha / 2.0).cos()
    }

    pub fn sin_half(&self) -> f64 {
        (self.alpha / 2.0).sin()
    }

    /// `w[l][e] = s^l c^(n-l) i^(e - l)`: weight of a subset of size `l` whose product has phase `i^e`.
    pub(crate) fn weights(&self, n: usize) -> Vec<[Complex64; 4]> {
        let (c, s) = (self.cos_half(), self.sin_half());
        (0..=n)
            .map(|l| {
                let mag = s.powi(l as i32) * c.powi((n - l) as i32);
                let mut row = [Complex64::new(0.0, 0.0); 4];
                for (e, slot) in row.iter_mut().enumerate() {
                    *slot = i_pow((e + 3 * l) as u8) * mag;
                }
                row
            })
            .collect()
    }
}

/// Logical state left after measuring syndrome `syndrome`.
#[derive(Clone, Debug)]
pub struct DecodedState {
    pub n: usize,
    pub k: usize,
    pub syndrome: u64,
    /// Probability of the syndrome outcome.
    pub born_prob: f64,
    /// Normalized logical amplitudes; all zero on a zero-probability branch.
    pub amplitudes: Vec<Complex64>,
}

impl DecodedState {
    pub(crate) fn from_unnormalized(n: usize, k: usize, syndrome: u64, mut amps: Vec<Complex64>) -> Self {
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if p > ZERO_PROB {
            let inv = 1.0 / p.sqrt();
            amps.iter_mut().for_each(|a| *a *= inv);
            DecodedState { n, k, syndrome, born_prob: p, amplitudes: amps }
        } else {
            amps.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
            DecodedState { n, k, syndrome, born_prob: 0.0, amplitudes: amps }
        }
    }

    pub fn is_zero_branch(&self) -> bool {
        self.born_prob == 0.0
    }

    /// `|<target|psi>|^2`, undefined on a zero-probability branch.
    pub fn fidelity(&self, target: usize) -> Option<f64> {
        (!self.is_zero_branch()).then(|| self.amplitudes[target].norm_sqr())
    }

    /// Unnormalized overlap `p * F`.
    pub fn numerator(&self, target: usize) -> f64 {
        self.born_prob * self.amplitudes[target].norm_sqr()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub x: u32,
    pub weight: u8,
    pub phase: u8,
}

/// Every subset consistent with one syndrome, without the alpha-dependent weights.
#[derive(Clone, Debug)]
pub struct SolutionSet {
    n: usize,
    k: usize,
    syndrome: u64,
    terms: Vec<Term>,
}

impl SolutionSet {
    pub fn syndrome(&self) -> u64 {
        self.syndrome
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn unnormalized(&self, em: &ErrorModel) -> Vec<Complex64> {
        let w = em.weights(self.n);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << self.k];
        for t in &self.terms {
            amps[t.x as usize] += w[t.weight as usize][t.phase as usize];
        }
        amps
    }

    pub fn state(&self, em: &ErrorModel) -> DecodedState {
        DecodedState::from_unnormalized(self.n, self.k, self.syndrome, self.unnormalized(em))
    }

    /// Smallest subset size and the distinct logical indices reached at that size.
    pub fn min_weight_targets(&self) -> (usize, Vec<u32>) {
        let wmin = self.terms.iter().map(|t| t.weight).min().unwrap_or(0);
        let set: BTreeSet<u32> = self.terms.iter().filter(|t| t.weight == wmin).map(|t| t.x).collect();
        (wmin as usize, set.into_iter().collect())
    }
}

/// Pick among tied candidates the one with the largest decoded amplitude.
pub fn resolve_target(amps: &[Complex64], candidates: &[u32]) -> u32 {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if amps[c as usize].norm_sqr() > amps[best as usize].norm_sqr() {
            best = c;
        }
    }
    best
}

/// A syndrome of a given class with its leading logical index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSyndrome {
    pub syndrome: u64,
    pub candidates: Vec<u32>,
    pub target: u32,
    pub ambiguous: bool,
}

/// Full outcome table from enumerating all `2^N` subsets.
#[derive(Clone, Debug)]
pub struct BornTable {
    pub n: usize,
    pub k: usize,
    /// `probs[s]` for each syndrome value `s`.
    pub probs: Vec<f64>,
    /// Unnormalized output amplitudes indexed by `x | s << k`.
    pub amplitudes: Vec<Complex64>,
}

impl BornTable {
    pub fn state(&self, syndrome: u64) -> DecodedState {
        let d = 1usize << self.k;
        let lo = syndrome as usize * d;
        DecodedState::from_unnormalized(self.n, self.k, syndrome, self.amplitudes[lo..lo + d].to_vec())
    }
}

#[derive(Clone, Debug)]
pub struct SweepCandidate {
    pub x: u32,
    /// `(size, phase)` of every subset landing on `x` within the syndrome.
    pub terms: Vec<(u8, u8)>,
}

#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub syndrome: u64,
    pub class: u8,
    pub candidates: Vec<SweepCandidate>,
}

/// Alpha-independent record of every reachable syndrome, its class and the
/// amplitude terms of its leading logical indices.
#[derive(Clone, Debug)]
pub struct BornSweep {
    pub n: usize,
    pub k: usize,
    pub entries: Vec<SweepEntry>,
}

impl BornSweep {
    /// Born-weighted fidelity `sum_s p(s) F(s)` against each syndrome's leading index.
    pub fn fidelity(&self, em: &ErrorModel) -> f64 {
        let w = em.weights(self.n);
        let mut total = 0.0;
        for e in &self.entries {
            let mut best = 0.0f64;
            for c in &e.candidates {
                let amp: Complex64 = c.terms.iter().map(|&(l, ph)| w[l as usize][ph as usize]).sum();
                best = best.max(amp.norm_sqr());
            }
            total += best;
        }
        total
    }

    pub fn ambiguous_count(&self) -> usize {
        self.entries.iter().filter(|e| e.candidates.len() > 1).count()
    }
}

/// Syndrome-space data of one Clifford encoder.
#[derive(Clone, Debug)]
pub struct Decoder {
    n: usize,
    k: usize,
    gens: Vec<Pauli64>,
    basis: XorBasis,
    null_masks: Vec<u64>,
    null_gens: Vec<Pauli64>,
    kernel_masks: Vec<u64>,
    kernel_gens: Vec<Pauli64>,
    enum_limit_log2: u32,
}

fn product(gens: &[Pauli64], mask: u64) -> Pauli64 {
    let mut p = Pauli64::default();
    for (j, g) in gens.iter().enumerate() {
        if mask >> j & 1 == 1 {
            p.mul_assign(g);
        }
    }
    p
}

impl Decoder {
    pub fn new(tableau: &CliffordTableau, k: usize) -> Result<Self> {
        Self::from_generators(tableau.z_images(), k)
    }

    /// Generators must commute pairwise and be Hermitian; qubits `0..k` are logical.
    pub fn from_generators(gens: &[PauliString], k: usize) -> Result<Self> {
        let n = gens.len();
        if n == 0 || n > 64 {
            return Err(Error::InvalidArgument(format!("decoder supports 1..=64 qubits, got {n}")));
        }
        if k > n || k > 32 {
            return Err(Error::InvalidArgument(format!("k = {k} with N = {n}")));
        }
        for g in gens {
            if g.n() != n {
                return Err(Error::LengthMismatch(g.n(), n));
            }
        }
        let gens: Vec<Pauli64> = gens.iter().map(|g| g.to_compact()).collect();
        let basis = XorBasis::from_columns(&gens.iter().map(|g| g.x >> k).collect::<Vec<_>>());
        let null_masks = basis.null_space().to_vec();
        let null_gens = null_masks.iter().map(|&m| product(&gens, m)).collect();
        let full = XorBasis::from_columns(&gens.iter().map(|g| g.x).collect::<Vec<_>>());
        let kernel_masks = full.null_space().to_vec();
        let kernel_gens = kernel_masks.iter().map(|&m| product(&gens, m)).collect();
        Ok(Decoder { n, k, gens, basis, null_masks, null_gens, kernel_masks, kernel_gens, enum_limit_log2: 30 })
    }

    /// Refuse enumerations larger than `2^limit` subsets.
    pub fn with_enum_limit(mut self, limit_log2: u32) -> Self {
        self.enum_limit_log2 = limit_log2.min(40);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Rank of the ancilla part of the error generators.
    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn solution_dim(&self) -> usize {
        self.null_masks.len()
    }

    /// Syndrome and logical index produced by the subset `mask`.
    pub fn image(&self, mask: u64) -> (u64, u32) {
        let p = product(&self.gens, mask);
        (p.x >> self.k, (p.x & ((1u64 << self.k) - 1)) as u32)
    }

    fn check_budget(&self, log2: usize) -> Result<()> {
        if log2 as u32 > self.enum_limit_log2 {
            return Err(Error::Budget(format!("2^{log2} subsets exceeds limit 2^{}", self.enum_limit_log2)));
        }
        Ok(())
    }

    /// All subsets with syndrome `s`, or `None` if `s` is unreachable.
    pub fn solutions(&self, s: u64) -> Result<Option<SolutionSet>> {
        if self.n - self.k < 64 && s >> (self.n - self.k) != 0 {
            return Err(Error::InvalidArgument(format!("syndrome {s:#x} wider than {} bits", self.n - self.k)));
        }
        let Some(a0) = self.basis.solve(s) else { return Ok(None) };
        let d = self.null_masks.len();
        self.check_budget(d)?;
        let kmask = (1u64 << self.k) - 1;
        let mut terms = Vec::with_capacity(1 << d);
        let mut p = product(&self.gens, a0);
        let mut a = a0;
        terms.push(Term { x: (p.x & kmask) as u32, weight: a.count_ones() as u8, phase: p.e });
        for i in 1..(1u64 << d) {
            let t = gray_flip(i);
            a ^= self.null_masks[t];
            p.mul_assign(&self.null_gens[t]);
            terms.push(Term { x: (p.x & kmask) as u32, weight: a.count_ones() as u8, phase: p.e });
        }
        Ok(Some(SolutionSet { n: self.n, k: self.k, syndrome: s, terms }))
    }

    /// Decoded logical state for syndrome `s` by affine enumeration.
    pub fn decode_fast(&self, s: u64, em: &ErrorModel) -> Result<DecodedState> {
        match self.solutions(s)? {
            Some(set) => Ok(set.state(em)),
            None => Ok(DecodedState::from_unnormalized(
                self.n,
                self.k,
                s,
                vec![Complex64::new(0.0, 0.0); 1 << self.k],
            )),
        }
    }

    /// Syndromes of class exactly `ell` with their distinct leading logical indices.
    pub fn class_syndrome_list(&self, ell: usize) -> Vec<(u64, Vec<u32>)> {
        let mut lower = HashSet::new();
        for w in 0..ell {
            for_each_subset(self.n, w, |m| {
                lower.insert(self.image(m).0);
            });
        }
        let mut found: BTreeMap<u64, BTreeSet<u32>> = BTreeMap::new();
        for_each_subset(self.n, ell, |m| {
            let (s, x) = self.image(m);
            if !lower.contains(&s) {
                found.entry(s).or_default().insert(x);
            }
        });
        found.into_iter().map(|(s, xs)| (s, xs.into_iter().collect())).collect()
    }

    /// Class-`ell` syndromes with ties between leading indices broken at `em`.
    pub fn class_syndromes(&self, ell: usize, em: &ErrorModel) -> Result<Vec<ClassSyndrome>> {
        let mut out = Vec::new();
        for (s, candidates) in self.class_syndrome_list(ell) {
            let target = if candidates.len() == 1 {
                candidates[0]
            } else {
                let st = self.decode_fast(s, em)?;
                resolve_target(&st.amplitudes, &candidates)
            };
            let ambiguous = candidates.len() > 1;
            out.push(ClassSyndrome { syndrome: s, candidates, target, ambiguous });
        }
        Ok(out)
    }

    /// Dense amplitudes for every syndrome from one pass over all subsets.
    pub fn born_distribution(&self, em: &ErrorModel) -> Result<BornTable> {
        let n = self.n;
        if n > 26 {
            return Err(Error::Budget(format!("dense Born table on {n} qubits (limit 26)")));
        }
        self.check_budget(n)?;
        let w = em.weights(n);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        let mut p = Pauli64::default();
        let mut a = 0u64;
        amps[0] += w[0][0];
        for i in 1..(1u64 << n) {
            let t = gray_flip(i);
            a ^= 1 << t;
            p.mul_assign(&self.gens[t]);
            amps[p.x as usize] += w[a.count_ones() as usize][p.e as usize];
        }
        let d = 1usize << self.k;
        let probs = amps.chunks(d).map(|c| c.iter().map(|a| a.norm_sqr()).sum()).collect();
        Ok(BornTable { n, k: self.k, probs, amplitudes: amps })
    }

    /// Walks every reachable syndrome and, within it, every consistent subset in Gray order.
    fn sweep<V: SweepVisitor>(&self, v: &mut V) -> Result<()> {
        self.check_budget(self.n)?;
        let pivots: Vec<usize> = self.basis.pivot_columns().to_vec();
        let d = self.null_masks.len();
        let mut base = Pauli64::default();
        let mut base_a = 0u64;
        for si in 0..(1u64 << pivots.len()) {
            if si > 0 {
                let t = gray_flip(si);
                base.mul_assign(&self.gens[pivots[t]]);
                base_a ^= 1 << pivots[t];
            }
            v.begin(base.x >> self.k);
            let mut p = base;
            let mut a = base_a;
            v.step(&p, a);
            for i in 1..(1u64 << d) {
                let t = gray_flip(i);
                a ^= self.null_masks[t];
                p.mul_assign(&self.null_gens[t]);
                v.step(&p, a);
            }
            v.end(self);
        }
        Ok(())
    }

    /// Class and leading-index terms of every reachable syndrome.
    pub fn born_sweep(&self) -> Result<BornSweep> {
        let mut v = ClassVisitor { kmask: (1u64 << self.k) - 1, ..Default::default() };
        self.sweep(&mut v)?;
        v.entries.sort_by_key(|e| e.syndrome);
        Ok(BornSweep { n: self.n, k: self.k, entries: v.entries })
    }

    fn kernel_terms(&self, mut p: Pauli64, mut a: u64) -> Vec<(u8, u8)> {
        let dk = self.kernel_masks.len();
        let mut out = Vec::with_capacity(1 << dk);
        out.push((a.count_ones() as u8, p.e));
        for i in 1..(1u64 << dk) {
            let t = gray_flip(i);
            a ^= self.kernel_masks[t];
            p.mul_assign(&self.kernel_gens[t]);
            out.push((a.count_ones() as u8, p.e));
        }
        out
    }

    /// Born probabilities of all reachable syndromes, sorted by syndrome.
    pub fn born_probabilities(&self, em: &ErrorModel) -> Result<Vec<(u64, f64)>> {
        let mut v = ProbVisitor {
            w: em.weights(self.n),
            kmask: (1u64 << self.k) - 1,
            amps: vec![Complex64::new(0.0, 0.0); 1 << self.k],
            current: 0,
            out: Vec::new(),
        };
        self.sweep(&mut v)?;
        v.out.sort_by_key(|e| e.0);
        Ok(v.out)
    }
}

trait SweepVisitor {
    fn begin(&mut self, syndrome: u64);
    fn step(&mut self, p: &Pauli64, mask: u64);
    fn end(&mut self, dec: &Decoder);
}

#[derive(Default)]
struct ClassVisitor {
    kmask: u64,
    syndrome: u64,
    best: u32,
    cands: Vec<(u32, Pauli64, u64)>,
    entries: Vec<SweepEntry>,
}

impl SweepVisitor for ClassVisitor {
    fn begin(&mut self, syndrome: u64) {
        self.syndrome = syndrome;
        self.best = u32::MAX;
        self.cands.clear();
    }

    #[inline]
    fn step(&mut self, p: &Pauli64, a: u64) {
        let w = a.count_ones();
        if w < self.best {
            self.best = w;
            self.cands.clear();
            self.cands.push(((p.x & self.kmask) as u32, *p, a));
        } else if w == self.best {
            let x = (p.x & self.kmask) as u32;
            if !self.cands.iter().any(|c| c.0 == x) {
                self.cands.push((x, *p, a));
            }
        }
    }

    fn end(&mut self, dec: &Decoder) {
        self.cands.sort_by_key(|c| c.0);
        let candidates = self
            .cands
            .iter()
            .map(|&(x, p, a)| SweepCandidate { x, terms: dec.kernel_terms(p, a) })
            .collect();
        self.entries.push(SweepEntry { syndrome: self.syndrome, class: self.best as u8, candidates });
    }
}

struct ProbVisitor {
    w: Vec<[Complex64; 4]>,
    kmask: u64,
    amps: Vec<Complex64>,
    current: u64,
    out: Vec<(u64, f64)>,
}

impl SweepVisitor for ProbVisitor {
    fn begin(&mut self, syndrome: u64) {
        self.current = syndrome;
    }

    #[inline]
    fn step(&mut self, p: &Pauli64, a: u64) {
        self.amps[(p.x & self.kmask) as usize] += self.w[a.count_ones() as usize][p.e as usize];
    }

    fn end(&mut self, _: &Decoder) {
        let p = self.amps.iter().map(|a| a.norm_sqr()).sum();
        self.amps.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        self.out.push((self.current, p));
    }
}

/// Calls `f` on every `n`-bit mask of popcount `w` in increasing order.
pub fn for_each_subset<F: FnMut(u64)>(n: usize, w: usize, mut f: F) {
    if w > n {
        return;
    }
    if w == 0 {
        f(0);
        return;
    }
    let mut m: u64 = (1u64 << w) - 1;
    loop {
        f(m);
        // Gosper's hack
        let c = m & m.wrapping_neg();
        let r = m.wrapping_add(c);
        if r == 0 {
            break;
        }
        m = (((r ^ m) >> 2) / c) | r;
        if n < 64 && m >> n != 0 || m == 0 {
            break;
        }
    }
}

/// Draws `m` syndromes from a Born distribution.
pub fn sample_born<R: Rng + ?Sized>(probs: &[(u64, f64)], m: usize, rng: &mut R) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(probs.iter().map(|p| p.1))
        .map_err(|e| Error::InvalidArgument(format!("Born distribution: {e}")))?;
    Ok((0..m).map(|_| probs[dist.sample(rng)].0).collect())
}

/// Reference decoder: multiplies `(c - i s P_j)` into a dense `|0...0>`.
pub fn decode_oracle(gens: &[PauliString], k: usize, s: u64, em: &ErrorModel) -> Result<DecodedState> {
    let n = gens.len();
    if n > 20 {
        return Err(Error::Budget(format!("dense oracle on {n} qubits (limit 20)")));
    }
    let (c, sn) = (em.cos_half(), em.sin_half());
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n];
    psi[0] = Complex64::new(1.0, 0.0);
    let mi = Complex64::new(0.0, -sn);
    for g in gens {
        let gp = g.apply(&psi)?;
        for (a, b) in psi.iter_mut().zip(&gp) {
            *a = *a * c + mi * b;
        }
    }
    let d = 1usize << k;
    let lo = s as usize * d;
    Ok(DecodedState::from_unnormalized(n, k, s, psi[lo..lo + d].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gosper_enumerates_combinations() {
        let mut v = Vec::new();
        for_each_subset(5, 2, |m| v.push(m));
        assert_eq!(v.len(), 10);
        assert!(v.windows(2).all(|p| p[0] < p[1]));
        let mut count = 0;
        for_each_subset(64, 1, |_| count += 1);
        assert_eq!(count, 64);
    }

    #[test]
    fn identity_encoder_gives_product_rotation() {
        let t = CliffordTableau::identity(4);
        let dec = Decoder::new(&t, 2).unwrap();
        let em = ErrorModel::new(0.7);
        let st = dec.decode_fast(0, &em).unwrap();
        // all errors act as phases: the output is (c - i s)^N |0>
        assert!((st.born_prob - 1.0).abs() < 1e-14);
        let phase = Complex64::from_polar(1.0, -4.0 * 0.35);
        assert!((st.amplitudes[0] - phase).norm() < 1e-14);
    }

    #[test]
    fn zero_branch_is_explicit() {
        let t = CliffordTableau::identity(3);
        let dec = Decoder::new(&t, 1).unwrap();
        let st = dec.decode_fast(0b11, &ErrorModel::new(0.0)).unwrap();
        assert!(st.is_zero_branch());
        assert_eq!(st.fidelity(0), None);
    }

    #[test]
    fn fast_matches_oracle_and_dense_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 2..9 {
            let k = n / 2;
            let t = CliffordTableau::sample(n, &mut rng);
            let dec = Decoder::new(&t, k).unwrap();
            let em = ErrorModel::new(0.3 + 0.2 * n as f64);
            let table = dec.born_distribution(&em).unwrap();
            assert!((table.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for s in 0..(1u64 << (n - k)) {
                let a = dec.decode_fast(s, &em).unwrap();
                let b = decode_oracle(t.z_images(), k, s, &em).unwrap();
                let c = table.state(s);
                assert!((a.born_prob - b.born_prob).abs() < 1e-12);
                assert!((a.born_prob - c.born_prob).abs() < 1e-12);
                for i in 0..a.amplitudes.len() {
                    assert!((a.amplitudes[i] - b.amplitudes[i]).norm() < 1e-10);
                    assert!((a.amplitudes[i] - c.amplitudes[i]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn born_probabilities_match_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = CliffordTableau::sample(10, &mut rng);
        let dec = Decoder::new(&t, 5).unwrap();
        let em = ErrorModel::new(1.3);
        let table = dec.born_distribution(&em).unwrap();
        let streamed = dec.born_probabilities(&em).unwrap();
        let total: f64 = streamed.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (s, p) in streamed {
            assert!((table.probs[s as usize] - p).abs() < 1e-13);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = CliffordTableau::sample(12, &mut rng);
        let dec = Decoder::new(&t, 6).unwrap().with_enum_limit(3);
        assert!(matches!(dec.solutions(0), Err(Error::Budget(_))));
    }
}
