//! Replica commutants, Weingarten matrices and single-site contractions.
//!
//! Every operator used here factorizes over physical qubits into one
//! `2^n x 2^n` single-site table. For permutations and for the reduced Pauli
//! monomials the table has 0/1 entries supported on an `n`-dimensional
//! subspace `T` of `F_2^(2n)`, with the entry at (row `x`, column `y`)
//! encoded as the vector `(x << n) | y`. The subspace is the canonical key.
//! `T_pi Omega T_sigma` has support `{(pi x, sigma^-1 y)}` and the single-site
//! Hilbert-Schmidt product of two elements is `|T_1 ∩ T_2|`.
//!
//! Replica `r` (0-based) is bit `r` of a single-site index. Even replicas
//! carry `U^dag V U`, odd replicas its adjoint.

use std::collections::HashMap;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::theory::{CodeParams, Ensemble};

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// `n`-dimensional subspace of `F_2^(2n)` in reduced row echelon form, `n <= 8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    n: u8,
    rows: [u16; 8],
}

fn reduce(rows: &mut [u16; 8], len: usize, bits: usize) -> usize {
    let mut rank = 0;
    for bit in (0..bits).rev() {
        let Some(i) = (rank..len).find(|&i| rows[i] >> bit & 1 == 1) else { continue };
        rows.swap(rank, i);
        let p = rows[rank];
        for (j, r) in rows.iter_mut().enumerate().take(len) {
            if j != rank && *r >> bit & 1 == 1 {
                *r ^= p;
            }
        }
        rank += 1;
    }
    rank
}

impl Subspace {
    /// Span of `vecs`; `None` unless the span has dimension exactly `n`.
    pub fn from_vectors(n: usize, vecs: &[u16]) -> Option<Self> {
        assert!(n <= 8);
        let mut basis = [0u16; 8];
        let mut rank = 0;
        for &v in vecs {
            let mut w = v;
            for &r in &basis[..rank] {
                let top = 15 - r.leading_zeros();
                if w >> top & 1 == 1 {
                    w ^= r;
                }
            }
            if w == 0 {
                continue;
            }
            if rank == n {
                return None;
            }
            basis[rank] = w;
            rank = reduce(&mut basis, rank + 1, 2 * n);
        }
        (rank == n).then(|| Subspace { n: n as u8, rows: basis })
    }

    fn from_rows(n: usize, mut rows: [u16; 8]) -> Self {
        let rank = reduce(&mut rows, n, 2 * n);
        debug_assert_eq!(rank, n);
        Subspace { n: n as u8, rows }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn rows(&self) -> &[u16] {
        &self.rows[..self.n as usize]
    }

    pub fn key(&self) -> u128 {
        self.rows().iter().fold(0u128, |acc, &r| acc << 16 | r as u128)
    }

    pub fn from_key(n: usize, key: u128) -> Self {
        let mut rows = [0u16; 8];
        for i in 0..n {
            rows[i] = (key >> (16 * (n - 1 - i))) as u16;
        }
        Subspace { n: n as u8, rows }
    }

    pub fn contains(&self, v: u16) -> bool {
        let mut w = v;
        for &r in self.rows() {
            let top = 15 - r.leading_zeros();
            if w >> top & 1 == 1 {
                w ^= r;
            }
        }
        w == 0
    }

    /// All `2^n` points in Gray-code order.
    pub fn points(&self) -> Vec<u16> {
        let n = self.n();
        let mut out = Vec::with_capacity(1 << n);
        let mut v = 0u16;
        out.push(0);
        for i in 1u32..1 << n {
            v ^= self.rows[i.trailing_zeros() as usize];
            out.push(v);
        }
        out
    }

    /// `|self ∩ other|`.
    pub fn intersection_size(&self, other: &Subspace) -> u64 {
        let n = self.n();
        let mut all = [0u16; 16];
        all[..n].copy_from_slice(self.rows());
        all[n..2 * n].copy_from_slice(other.rows());
        let mut rank = 0;
        for bit in (0..2 * n).rev() {
            let Some(i) = (rank..2 * n).find(|&i| all[i] >> bit & 1 == 1) else { continue };
            all.swap(rank, i);
            let p = all[rank];
            for r in all.iter_mut().take(2 * n).skip(rank + 1) {
                if *r >> bit & 1 == 1 {
                    *r ^= p;
                }
            }
            rank += 1;
        }
        1u64 << (2 * n - rank)
    }

    /// Support of `T_pi Omega T_sigma`, given `pi` and `sigma^-1` as bit tables.
    pub fn act(&self, left: &[u8], right_inv: &[u8]) -> Self {
        let n = self.n();
        let mask = (1u16 << n) - 1;
        let mut rows = [0u16; 8];
        for (o, &r) in rows.iter_mut().zip(self.rows()) {
            let x = left[(r >> n) as usize] as u16;
            let y = right_inv[(r & mask) as usize] as u16;
            *o = x << n | y;
        }
        Subspace::from_rows(n, rows)
    }

    /// Support of the adjoint (transpose) operator.
    pub fn transpose(&self) -> Self {
        let n = self.n();
        let mask = (1u16 << n) - 1;
        let mut rows = [0u16; 8];
        for (o, &r) in rows.iter_mut().zip(self.rows()) {
            *o = (r & mask) << n | r >> n;
        }
        Subspace::from_rows(n, rows)
    }

    /// Dense 0/1 single-site table.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.n();
        let d = 1usize << n;
        let mask = (1u16 << n) - 1;
        let mut m = DMatrix::from_element(d, d, C0);
        for v in self.points() {
            m[((v >> n) as usize, (v & mask) as usize)] = C1;
        }
        m
    }
}

/// Bit table of a permutation: replica `i` moves to `perm[i]`.
pub fn permutation_table(perm: &[usize]) -> Vec<u8> {
    let n = perm.len();
    (0..1usize << n)
        .map(|v| (0..n).filter(|&i| v >> i & 1 == 1).fold(0u8, |acc, i| acc | 1 << perm[i]))
        .collect()
}

pub fn permutation_support(perm: &[usize]) -> Subspace {
    let n = perm.len();
    let t = permutation_table(perm);
    let vecs: Vec<u16> = (0..n).map(|i| (t[1 << i] as u16) << n | 1 << i).collect();
    Subspace::from_vectors(n, &vecs).expect("permutation support has full dimension")
}

/// A generator class: its name and generator bitstrings, character `j` for replica `j`.
#[derive(Clone, Copy, Debug)]
pub struct ClassSpec {
    pub name: &'static str,
    pub generators: &'static [&'static str],
}

const fn cls(name: &'static str, generators: &'static [&'static str]) -> ClassSpec {
    ClassSpec { name, generators }
}

const CLASSES_2: &[ClassSpec] = &[cls("permutations", &[])];
const CLASSES_4: &[ClassSpec] = &[cls("permutations", &[]), cls("omega4", &["1111"])];
const CLASSES_6: &[ClassSpec] = &[
    cls("permutations", &[]),
    cls("omega6", &["111111"]),
    cls("omega4", &["111100"]),
    cls("omega44", &["111100", "001111"]),
];
const CLASSES_8: &[ClassSpec] = &[
    cls("permutations", &[]),
    cls("omega8", &["11111111"]),
    cls("omega6", &["11111100"]),
    cls("omega4", &["11110000"]),
    cls("omega44_disj", &["11110000", "00001111"]),
    cls("omega44_ov1", &["11110000", "00011110"]),
    cls("omega44_ov2", &["11110000", "00111100"]),
    cls("omega46", &["11110000", "00111111"]),
    cls("omega66", &["11111100", "00111111"]),
    cls("omega3_chain", &["11110000", "00001111", "00111100"]),
    cls("omega3_star", &["11110000", "00111100", "01011010"]),
    cls("omega3_cyc", &["11110000", "00111100", "10100011"]),
    cls("hamming", &["11110000", "00111100", "00110011", "10101010"]),
];

pub fn class_table(n: usize) -> Result<&'static [ClassSpec]> {
    match n {
        2 => Ok(CLASSES_2),
        4 => Ok(CLASSES_4),
        6 => Ok(CLASSES_6),
        8 => Ok(CLASSES_8),
        _ => Err(Error::Unsupported(format!("commutant tables exist for n in {{2, 4, 6, 8}}, not {n}"))),
    }
}

/// `prod_{m=0}^{n-2} (2^m + 1)`.
pub fn cardinality_formula(n: usize) -> u128 {
    (0..n.saturating_sub(1)).map(|m| (1u128 << m) + 1).product()
}

fn pauli_entry(p: usize, r: usize, c: usize) -> Complex64 {
    match (p, r, c) {
        (0, r, c) if r == c => C1,
        (1, r, c) if r != c => C1,
        (2, 0, 1) => Complex64::new(0.0, -1.0),
        (2, 1, 0) => Complex64::new(0.0, 1.0),
        (3, 0, 0) => C1,
        (3, 1, 1) => -C1,
        _ => C0,
    }
}

/// Single-site `(1/2) sum_P P^(b)`, `P` on the replicas set in `b`.
fn pauli_factor(n: usize, b: u16) -> DMatrix<Complex64> {
    let d = 1usize << n;
    let mut m = DMatrix::from_element(d, d, C0);
    for r in 0..d {
        for c in 0..d {
            let off = (r ^ c) & !(b as usize);
            if off != 0 {
                continue;
            }
            let mut acc = C0;
            for p in 0..4 {
                let mut v = C1;
                for j in (0..n).filter(|&j| b >> j & 1 == 1) {
                    v *= pauli_entry(p, r >> j & 1, c >> j & 1);
                }
                acc += v;
            }
            m[(r, c)] = acc * 0.5;
        }
    }
    m
}

fn parse_bits(s: &str) -> Result<u16> {
    s.chars().enumerate().try_fold(0u16, |acc, (j, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << j),
        _ => Err(Error::Parse(s.into())),
    })
}

/// Support of the primitive monomial `Omega_V`, checking that its table is 0/1 on a subspace.
pub fn primitive_support(n: usize, generators: &[&str]) -> Result<Subspace> {
    let d = 1usize << n;
    let mut m = DMatrix::<Complex64>::identity(d, d);
    for g in generators {
        if g.len() != n {
            return Err(Error::LengthMismatch(g.len(), n));
        }
        let b = parse_bits(g)?;
        if b.count_ones() % 2 == 1 {
            return Err(Error::InvalidArgument(format!("generator {g} has odd weight")));
        }
        m = m * pauli_factor(n, b);
    }
    let mut pts = Vec::new();
    for r in 0..d {
        for c in 0..d {
            let v = m[(r, c)];
            if v.norm() < 1e-9 {
                continue;
            }
            if (v - C1).norm() > 1e-9 {
                return Err(Error::Unsupported(format!("entry {v} in Omega_V for {generators:?}")));
            }
            pts.push((r << n | c) as u16);
        }
    }
    let s = Subspace::from_vectors(n, &pts)
        .ok_or_else(|| Error::Unsupported(format!("support of {generators:?} is not an n-dimensional subspace")))?;
    if pts.len() != 1 << n {
        return Err(Error::Unsupported(format!("support of {generators:?} is not a subspace")));
    }
    Ok(s)
}

struct PermTables {
    n: usize,
    tables: Vec<Vec<u8>>,
}

impl PermTables {
    fn new(n: usize) -> Self {
        let tables = (0..n).permutations(n).map(|p| permutation_table(&p)).collect();
        PermTables { n, tables }
    }
}

fn orbit_keys(l: &Subspace, perms: &PermTables) -> Vec<u128> {
    let id = &perms.tables[0];
    perms.tables.iter().map(|t| l.act(id, t).key()).collect()
}

/// Per-class outcome of the two-phase generation.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ClassCount {
    pub name: String,
    /// Distinct conjugates `T_pi Omega_V T_pi^dag`.
    pub representatives: usize,
    /// Distinct right orbits first reached from this class.
    pub orbits: usize,
    /// Representatives whose right orbit had already been produced.
    pub collisions: usize,
    pub size: u64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CommutantSummary {
    pub n: usize,
    pub classes: Vec<ClassCount>,
    pub total: u64,
}

/// A distinct right orbit `{L T_sigma}`.
#[derive(Clone, Copy, Debug)]
struct Orbit {
    class: usize,
    rep: Subspace,
    size: u64,
}

fn orbits(n: usize) -> Result<(Vec<Orbit>, CommutantSummary)> {
    let specs = class_table(n)?;
    let perms = PermTables::new(n);
    let nfact = perms.tables.len() as u64;
    let mut seen: HashMap<u128, usize> = HashMap::new();
    let mut out = Vec::new();
    let mut classes = Vec::new();
    for (ci, spec) in specs.iter().enumerate() {
        let prim = primitive_support(n, spec.generators)?;
        // phase 1: conjugation representatives
        let mut reps: Vec<Subspace> = perms.tables.iter().map(|t| prim.act(t, t)).collect();
        reps.sort_unstable();
        reps.dedup();
        // phase 2: right orbits, identified by their smallest key
        let found: Vec<(u128, u64)> = reps
            .par_iter()
            .map(|l| {
                let keys = orbit_keys(l, &perms);
                let own = l.key();
                let stab = keys.iter().filter(|&&k| k == own).count() as u64;
                (*keys.iter().min().expect("nonempty orbit"), nfact / stab)
            })
            .collect();
        let mut count = ClassCount {
            name: spec.name.into(),
            representatives: reps.len(),
            orbits: 0,
            collisions: 0,
            size: 0,
        };
        for ((min, size), rep) in found.into_iter().zip(&reps) {
            if seen.contains_key(&min) {
                count.collisions += 1;
                continue;
            }
            seen.insert(min, ci);
            count.orbits += 1;
            count.size += size;
            out.push(Orbit { class: ci, rep: *rep, size });
        }
        classes.push(count);
    }
    let total = classes.iter().map(|c| c.size).sum();
    Ok((out, CommutantSummary { n, classes, total }))
}

/// Class sizes of the `n`-replica Clifford commutant without storing its elements.
pub fn count_commutant(n: usize) -> Result<CommutantSummary> {
    Ok(orbits(n)?.1)
}

/// One reduced Pauli monomial, identified by its single-site support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommutantElement {
    pub class: usize,
    pub support: Subspace,
}

fn orbit_elements(o: &Orbit, perms: &PermTables) -> Vec<Subspace> {
    let mut keys = orbit_keys(&o.rep, perms);
    keys.sort_unstable();
    keys.dedup();
    debug_assert_eq!(keys.len() as u64, o.size);
    keys.into_iter().map(|k| Subspace::from_key(perms.n, k)).collect()
}

/// All elements of the commutant basis; `n = 8` needs `materialize`.
pub fn generate_commutant(n: usize, materialize: bool) -> Result<Vec<CommutantElement>> {
    if n >= 8 && !materialize {
        return Err(Error::Budget(format!(
            "materializing {} elements for n = {n}; use class counting or opt in",
            cardinality_formula(n)
        )));
    }
    let (orbs, _) = orbits(n)?;
    let perms = PermTables::new(n);
    let mut out = Vec::new();
    for o in &orbs {
        out.extend(orbit_elements(o, &perms).into_iter().map(|support| CommutantElement { class: o.class, support }));
    }
    Ok(out)
}

/// Permutation operators only, the Haar commutant.
pub fn permutation_basis(n: usize) -> Vec<CommutantElement> {
    (0..n).permutations(n).map(|p| CommutantElement { class: 0, support: permutation_support(&p) }).collect()
}

/// Basis for an ensemble: permutations for Haar, reduced Pauli monomials for Clifford.
pub fn basis(n: usize, ens: Ensemble) -> Result<Vec<CommutantElement>> {
    match ens {
        Ensemble::Haar => Ok(permutation_basis(n)),
        Ensemble::Clifford => generate_commutant(n, false),
    }
}

/// Gram matrix `Tr(Omega_i^dag Omega_j)` for `n_qubits` sites and its pseudo-inverse.
///
/// Both are returned divided (gram) or multiplied (wg) by `D^n`, `D = 2^n_qubits`,
/// so entries stay of order one.
pub fn gram_and_weingarten(basis: &[CommutantElement], n_qubits: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = basis.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    if m > 600 {
        return Err(Error::Budget(format!("{m} x {m} Gram matrix (limit 600)")));
    }
    let n = basis[0].support.n();
    let scale = (1u64 << n) as f64;
    let g = DMatrix::from_fn(m, m, |i, j| {
        let s = basis[i].support.intersection_size(&basis[j].support) as f64;
        (s / scale).powi(n_qubits as i32)
    });
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let wg = svd
        .pseudo_inverse(smax * 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("pseudo-inverse failed: {e}")))?;
    Ok((g, wg))
}

/// Row sum of the Weingarten matrix, times `D^n`, when the basis is independent.
pub fn weingarten_marginal(n: usize, n_qubits: usize) -> f64 {
    (0..n.saturating_sub(1)).map(|m| 1.0 / (1.0 + 2f64.powi(m as i32 - n_qubits as i32))).product()
}

/// Single-site boundary table as its nonzero entries `(row, col, value)`.
#[derive(Clone, Debug)]
pub struct SiteTable {
    pub n: usize,
    pub entries: Vec<(u16, u16, Complex64)>,
}

type Op1 = [[Complex64; 2]; 2];

const PROJ0: Op1 = [[C1, C0], [C0, C0]];
const PROJ1: Op1 = [[C0, C0], [C0, C1]];
const ID: Op1 = [[C1, C0], [C0, C1]];

fn pauli_op(p: usize) -> Op1 {
    let mut o = [[C0; 2]; 2];
    for (r, row) in o.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = pauli_entry(p, r, c);
        }
    }
    o
}

impl SiteTable {
    /// `t_sigma (A_0 ⊗ B_0 ⊗ A_1 ⊗ B_1 ...)` summed over `terms`, `sigma` pairing replicas `2i, 2i+1`.
    fn paired(n: usize, terms: &[(Complex64, Vec<Op1>)]) -> Self {
        let d = 1usize << n;
        let swap = |v: usize| ((v & 0x55) << 1) | ((v & 0xAA) >> 1);
        let mut entries = Vec::new();
        for r in 0..d {
            let a = swap(r);
            for c in 0..d {
                let mut acc = C0;
                for (w, ops) in terms {
                    let mut v = *w;
                    for (j, op) in ops.iter().enumerate() {
                        v *= op[a >> j & 1][c >> j & 1];
                        if v == C0 {
                            break;
                        }
                    }
                    acc += v;
                }
                if acc.norm() > 1e-14 {
                    entries.push((r as u16, c as u16, acc));
                }
            }
        }
        SiteTable { n, entries }
    }

    /// Replica pairs `(x, |0><0|)`, the same `x` on every pair.
    fn uniform(n: usize, x: Op1) -> Self {
        let ops: Vec<Op1> = (0..n).map(|r| if r % 2 == 0 { x } else { PROJ0 }).collect();
        Self::paired(n, &[(C1, ops)])
    }

    /// `tr(b omega) = sum b[r][c] omega[c][r]`.
    pub fn trace_with(&self, omega: &Subspace) -> Complex64 {
        let n = self.n;
        self.entries
            .iter()
            .filter(|(r, c, _)| omega.contains(c << n | r))
            .map(|e| e.2)
            .sum()
    }

    fn trace_with_bitmap(&self, bitmap: &[u64]) -> Complex64 {
        let n = self.n;
        self.entries
            .iter()
            .filter(|(r, c, _)| {
                let v = (*c as usize) << n | *r as usize;
                bitmap[v >> 6] >> (v & 63) & 1 == 1
            })
            .map(|e| e.2)
            .sum()
    }
}

/// Replica boundary: logical-site and ancilla-site tables.
#[derive(Clone, Debug)]
pub struct Boundary {
    pub n: usize,
    pub logical: SiteTable,
    pub ancilla: SiteTable,
}

/// Per-realization quantities expressible as `Tr(B A_U)` at syndrome zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moment {
    /// `m_F = |<0|W|0>|^2`.
    Numerator,
    /// `p = <0|W^dag Pi_0 W|0>`.
    Denominator,
    NumeratorSquared,
    DenominatorSquared,
    /// `2^-k sum_P <P ⊗ Pi_0>^(2q)` unnormalized, `n = 4q`.
    SreNumerator(u32),
    /// `p^(2q)`.
    SreDenominator(u32),
    /// `sum_x <x ⊗ Pi_0>^q` unnormalized, `n = 2q`.
    PeNumerator(u32),
    PeDenominator(u32),
}

impl Moment {
    pub fn replicas(&self) -> usize {
        match *self {
            Moment::Numerator | Moment::Denominator => 2,
            Moment::NumeratorSquared | Moment::DenominatorSquared => 4,
            Moment::SreNumerator(q) | Moment::SreDenominator(q) => 4 * q as usize,
            Moment::PeNumerator(q) | Moment::PeDenominator(q) => 2 * q as usize,
        }
    }

    pub fn boundary(&self) -> Boundary {
        let n = self.replicas();
        let ancilla = SiteTable::uniform(n, PROJ0);
        let logical = match *self {
            Moment::Numerator | Moment::NumeratorSquared => SiteTable::uniform(n, PROJ0),
            Moment::Denominator
            | Moment::DenominatorSquared
            | Moment::SreDenominator(_)
            | Moment::PeDenominator(_) => SiteTable::uniform(n, ID),
            Moment::SreNumerator(_) => {
                let terms: Vec<(Complex64, Vec<Op1>)> = (0..4)
                    .map(|p| {
                        let ops = (0..n).map(|r| if r % 2 == 0 { pauli_op(p) } else { PROJ0 }).collect();
                        (Complex64::new(0.5, 0.0), ops)
                    })
                    .collect();
                SiteTable::paired(n, &terms)
            }
            Moment::PeNumerator(_) => {
                let terms: Vec<(Complex64, Vec<Op1>)> = [PROJ0, PROJ1]
                    .iter()
                    .map(|&x| (C1, (0..n).map(|r| if r % 2 == 0 { x } else { PROJ0 }).collect()))
                    .collect();
                SiteTable::paired(n, &terms)
            }
        };
        Boundary { n, logical, ancilla }
    }
}

/// Annealed observables assembled from two moments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Fidelity,
    /// Relative variance of the fidelity numerator.
    NumeratorFluctuation,
    /// Relative variance of the Born probability.
    DenominatorFluctuation,
    Sre(u32),
    Pe(u32),
}

impl std::str::FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fidelity" => Quantity::Fidelity,
            "dm2" => Quantity::NumeratorFluctuation,
            "dp2" => Quantity::DenominatorFluctuation,
            "sre2" => Quantity::Sre(2),
            "sre3" => Quantity::Sre(3),
            "pe2" => Quantity::Pe(2),
            "pe3" => Quantity::Pe(3),
            _ => return Err(Error::Parse(s.into())),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Full Weingarten sum, `n <= 4`.
    Exact,
    /// Leading `D^-n delta` Weingarten term.
    Diagonal,
}

// Per-element data, independent of N, k and alpha.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Signature {
    // diagonal points by w = (even-replica ones) - (odd-replica ones), offset by 4
    hist: [u16; 9],
    traces: [(i64, i64); 4],
}

const TRACE_SCALE: f64 = 1024.0;

fn quantize(z: Complex64) -> (i64, i64) {
    let (a, b) = ((z.re * TRACE_SCALE).round(), (z.im * TRACE_SCALE).round());
    debug_assert!((z.re * TRACE_SCALE - a).abs() < 1e-6 && (z.im * TRACE_SCALE - b).abs() < 1e-6);
    (a as i64, b as i64)
}

fn dequantize(q: (i64, i64)) -> Complex64 {
    Complex64::new(q.0 as f64 / TRACE_SCALE, q.1 as f64 / TRACE_SCALE)
}

fn signature(s: &Subspace, tables: [&SiteTable; 4], bitmap: &mut [u64]) -> Signature {
    let n = s.n();
    let mask = (1u16 << n) - 1;
    let pts = s.points();
    let mut hist = [0u16; 9];
    for &v in &pts {
        bitmap[(v >> 6) as usize] |= 1 << (v & 63);
        let (x, y) = (v >> n, v & mask);
        if x == y {
            let w = (y & 0x55).count_ones() as i32 - (y & 0xAA).count_ones() as i32;
            hist[(w + 4) as usize] += 1;
        }
    }
    let traces = tables.map(|t| quantize(t.trace_with_bitmap(bitmap)));
    for &v in &pts {
        bitmap[(v >> 6) as usize] = 0;
    }
    Signature { hist, traces }
}

/// Per-element single-site data grouped by signature; evaluates an annealed
/// quantity for any `(N, k, alpha)` without revisiting the basis.
#[derive(Clone, Debug)]
pub struct ContractionTable {
    quantity: Quantity,
    n: usize,
    // exact mode keeps elements in basis order
    exact: Option<(Vec<CommutantElement>, Vec<Signature>)>,
    groups: Vec<(Signature, u64)>,
    // first moments for the fluctuation ratios
    first: Option<Box<ContractionTable>>,
}

fn moments_for(q: Quantity) -> (Moment, Moment) {
    match q {
        Quantity::Fidelity => (Moment::Numerator, Moment::Denominator),
        Quantity::NumeratorFluctuation => (Moment::NumeratorSquared, Moment::NumeratorSquared),
        Quantity::DenominatorFluctuation => (Moment::DenominatorSquared, Moment::DenominatorSquared),
        Quantity::Sre(q) => (Moment::SreNumerator(q), Moment::SreDenominator(q)),
        Quantity::Pe(q) => (Moment::PeNumerator(q), Moment::PeDenominator(q)),
    }
}

impl ContractionTable {
    pub fn new(quantity: Quantity, mode: Mode, ens: Ensemble) -> Result<Self> {
        let (num, den) = moments_for(quantity);
        let n = num.replicas();
        if mode == Mode::Exact && n > 4 {
            return Err(Error::Unsupported(format!("exact contraction needs n <= 4, got n = {n}")));
        }
        let (bn, bd) = (num.boundary(), den.boundary());
        let tables = [&bn.logical, &bn.ancilla, &bd.logical, &bd.ancilla];
        let mut bitmap = vec![0u64; (1usize << (2 * n)).div_ceil(64)];
        let first = match quantity {
            Quantity::NumeratorFluctuation | Quantity::DenominatorFluctuation => {
                Some(Box::new(ContractionTable::new(Quantity::Fidelity, mode, ens)?))
            }
            _ => None,
        };
        if mode == Mode::Exact {
            let b = basis(n, ens)?;
            let sigs = b.iter().map(|e| signature(&e.support, tables, &mut bitmap)).collect();
            return Ok(ContractionTable { quantity, n, exact: Some((b, sigs)), groups: Vec::new(), first });
        }
        let groups = match ens {
            Ensemble::Haar => {
                let mut map: HashMap<Signature, u64> = HashMap::new();
                for e in permutation_basis(n) {
                    *map.entry(signature(&e.support, tables, &mut bitmap)).or_default() += 1;
                }
                map.into_iter().collect()
            }
            Ensemble::Clifford => {
                let (orbs, _) = orbits(n)?;
                let perms = PermTables::new(n);
                let map = orbs
                    .par_iter()
                    .fold(
                        || (HashMap::<Signature, u64>::new(), vec![0u64; (1usize << (2 * n)).div_ceil(64)]),
                        |(mut map, mut bm), o| {
                            for s in orbit_elements(o, &perms) {
                                *map.entry(signature(&s, tables, &mut bm)).or_default() += 1;
                            }
                            (map, bm)
                        },
                    )
                    .map(|(m, _)| m)
                    .reduce(HashMap::new, |mut a, b| {
                        for (k, v) in b {
                            *a.entry(k).or_default() += v;
                        }
                        a
                    });
                map.into_iter().collect()
            }
        };
        let mut groups: Vec<(Signature, u64)> = groups;
        groups.sort_unstable();
        Ok(ContractionTable { quantity, n, exact: None, groups, first })
    }

    /// Number of distinct per-element signatures.
    pub fn signature_count(&self) -> usize {
        match &self.exact {
            Some((_, s)) => s.len(),
            None => self.groups.len(),
        }
    }

    fn site_error_trace(sig: &Signature, alpha: f64, n: usize) -> Complex64 {
        let norm = (1u64 << n) as f64;
        sig.hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(w, &c)| Complex64::from_polar(c as f64, alpha * (w as f64 - 4.0)))
            .sum::<Complex64>()
            / norm
    }

    fn boundary_trace(sig: &Signature, which: usize, p: &CodeParams) -> Complex64 {
        let l = dequantize(sig.traces[2 * which]);
        let s = dequantize(sig.traces[2 * which + 1]);
        l.powi(p.k as i32) * s.powi((p.n - p.k) as i32)
    }

    /// `D^n E[Tr(B A_U)]` for the numerator (`which = 0`) and denominator (`1`) boundaries.
    fn moments(&self, p: &CodeParams) -> Result<[f64; 2]> {
        let n = self.n;
        let nq = p.n as i32;
        let mut out = [C0; 2];
        match &self.exact {
            Some((b, sigs)) => {
                let (_, wg) = gram_and_weingarten(b, p.n)?;
                let a: Vec<Complex64> = sigs.iter().map(|s| Self::site_error_trace(s, p.alpha, n).powi(nq)).collect();
                for (which, slot) in out.iter_mut().enumerate() {
                    let t: Vec<Complex64> = sigs.iter().map(|s| Self::boundary_trace(s, which, p)).collect();
                    let mut acc = C0;
                    for i in 0..b.len() {
                        for j in 0..b.len() {
                            acc += a[i] * wg[(i, j)] * t[j];
                        }
                    }
                    *slot = acc;
                }
            }
            None => {
                for (sig, mult) in &self.groups {
                    let a = Self::site_error_trace(sig, p.alpha, n).powi(nq) * *mult as f64;
                    for (which, slot) in out.iter_mut().enumerate() {
                        *slot += a * Self::boundary_trace(sig, which, p);
                    }
                }
            }
        }
        Ok([out[0].re, out[1].re])
    }

    /// Raw annealed moments `E[numerator]`, `E[denominator]`.
    pub fn raw_moments(&self, p: &CodeParams) -> Result<[f64; 2]> {
        // the D^n normalisation of the Weingarten matrix cancels against the
        // per-site 2^-n in the error trace
        self.moments(p)
    }

    pub fn value(&self, p: &CodeParams) -> Result<f64> {
        let [num, den] = self.moments(p)?;
        Ok(match self.quantity {
            Quantity::Fidelity => num / den,
            Quantity::NumeratorFluctuation => {
                let m = self.first.as_ref().expect("first moments").moments(p)?[0];
                num / (m * m) - 1.0
            }
            Quantity::DenominatorFluctuation => {
                let m = self.first.as_ref().expect("first moments").moments(p)?[1];
                den / (m * m) - 1.0
            }
            Quantity::Sre(q) | Quantity::Pe(q) => (num / den).log2() / (1.0 - q as f64),
        })
    }
}

/// One-shot annealed value; build a [`ContractionTable`] to evaluate many points.
pub fn annealed_contract(quantity: Quantity, mode: Mode, ens: Ensemble, p: &CodeParams) -> Result<f64> {
    ContractionTable::new(quantity, mode, ens)?.value(p)
}
