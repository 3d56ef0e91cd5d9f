//! Pauli strings as packed x/z bit masks with a phase stored as a power of `i`.
//!
//! A string with masks `x`, `z` and exponent `e` is the operator
//! `i^e * X^x Z^z`, with `X^x Z^z` acting qubit by qubit. Qubit `q` lives in
//! bit `q % 64` of word `q / 64`, and in bit `q` of a computational basis index.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `i^e` for `e` taken mod 4.
pub fn i_pow(e: u8) -> Complex64 {
    match e & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

fn popcount_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli1 {
    I,
    X,
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, x: vec![0; words(n)], z: vec![0; words(n)], phase: 0 }
    }

    pub fn from_masks(n: usize, x: &[u64], z: &[u64], phase: u8) -> Result<Self> {
        let w = words(n);
        if x.len() != w || z.len() != w {
            return Err(Error::InvalidArgument(format!("{n} qubits need {w} mask words")));
        }
        let mut p = PauliString { n, x: x.to_vec(), z: z.to_vec(), phase: phase & 3 };
        if p.clear_padding() {
            return Err(Error::InvalidArgument("mask bits beyond qubit count".into()));
        }
        Ok(p)
    }

    /// Single-qubit operator on qubit `q`; `Y` is stored as `i * X Z`.
    pub fn single(n: usize, q: usize, p: Pauli1) -> Self {
        assert!(q < n, "qubit {q} out of range for {n} qubits");
        let mut s = Self::identity(n);
        match p {
            Pauli1::I => {}
            Pauli1::X => s.set(q, true, false),
            Pauli1::Z => s.set(q, false, true),
            Pauli1::Y => {
                s.set(q, true, true);
                s.phase = 1;
            }
        }
        s
    }

    fn clear_padding(&mut self) -> bool {
        let r = self.n % 64;
        if r == 0 || self.x.is_empty() {
            return false;
        }
        let mask = (1u64 << r) - 1;
        let last = self.x.len() - 1;
        let dirty = (self.x[last] | self.z[last]) & !mask != 0;
        self.x[last] &= mask;
        self.z[last] &= mask;
        dirty
    }

    fn set(&mut self, q: usize, xb: bool, zb: bool) {
        let (w, b) = (q / 64, 1u64 << (q % 64));
        if xb {
            self.x[w] |= b;
        } else {
            self.x[w] &= !b;
        }
        if zb {
            self.z[w] |= b;
        } else {
            self.z[w] &= !b;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn get(&self, q: usize) -> Pauli1 {
        match (self.x_bit(q), self.z_bit(q)) {
            (false, false) => Pauli1::I,
            (true, false) => Pauli1::X,
            (false, true) => Pauli1::Z,
            (true, true) => Pauli1::Y,
        }
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    fn y_count(&self) -> u32 {
        popcount_and(&self.x, &self.z)
    }

    pub fn is_hermitian(&self) -> bool {
        (self.phase as u32 + self.y_count()) % 2 == 0
    }

    /// Sign of a Hermitian string written with `Y` letters, e.g. `-1` for `-XY`.
    pub fn sign(&self) -> Option<i8> {
        let s = (self.phase as i64 - self.y_count() as i64).rem_euclid(4);
        match s {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) & 3;
    }

    pub fn set_phase(&mut self, phase: u8) {
        self.phase = phase & 3;
    }

    fn check(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::LengthMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check(other)?;
        Ok(!self.anticommutes_unchecked(other))
    }

    pub(crate) fn anticommutes_unchecked(&self, other: &PauliString) -> bool {
        (popcount_and(&self.x, &other.z) + popcount_and(&self.z, &other.x)) % 2 == 1
    }

    /// `self * other`.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        let mut out = self.clone();
        out.mul_assign(other)?;
        Ok(out)
    }

    /// In place `self <- self * other`.
    pub fn mul_assign(&mut self, other: &PauliString) -> Result<()> {
        self.check(other)?;
        self.mul_assign_unchecked(other);
        Ok(())
    }

    pub(crate) fn mul_assign_unchecked(&mut self, other: &PauliString) {
        // Z^a X^b = (-1)^{a.b} X^b Z^a
        let flips = popcount_and(&self.z, &other.x);
        self.phase = ((self.phase as u32 + other.phase as u32 + 2 * flips) & 3) as u8;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
    }

    /// XOR of the symplectic parts, phase untouched.
    pub(crate) fn xor_masks(&mut self, other: &PauliString) {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
    }

    /// `P|0...0> = amp |index>`; the index is returned as mask words.
    pub fn apply_to_zero(&self) -> (Vec<u64>, Complex64) {
        (self.x.clone(), i_pow(self.phase))
    }

    /// Applies the string to a dense state on `n` qubits.
    pub fn apply(&self, state: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.n > 30 || state.len() != 1usize << self.n {
            return Err(Error::InvalidArgument("state length must be 2^n with n <= 30".into()));
        }
        let xm = self.x.first().copied().unwrap_or(0) as usize;
        let zm = self.z.first().copied().unwrap_or(0) as usize;
        let ph = i_pow(self.phase);
        let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
        for (u, a) in state.iter().enumerate() {
            let sgn = if (zm & u).count_ones() % 2 == 1 { -ph } else { ph };
            out[u ^ xm] = sgn * a;
        }
        Ok(out)
    }

    /// Expectation value on a normalized dense state.
    pub fn expectation(&self, state: &[Complex64]) -> Result<Complex64> {
        let applied = self.apply(state)?;
        Ok(state.iter().zip(&applied).map(|(a, b)| a.conj() * b).sum())
    }

    /// Row-major `2^n x 2^n` matrix, for small `n`.
    pub fn to_dense(&self) -> Result<Vec<Complex64>> {
        if self.n > 12 {
            return Err(Error::Budget(format!("dense Pauli matrix on {} qubits", self.n)));
        }
        let d = 1usize << self.n;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        let xm = self.x.first().copied().unwrap_or(0) as usize;
        let zm = self.z.first().copied().unwrap_or(0) as usize;
        let ph = i_pow(self.phase);
        for u in 0..d {
            let sgn = if (zm & u).count_ones() % 2 == 1 { -ph } else { ph };
            m[(u ^ xm) * d + u] = sgn;
        }
        Ok(m)
    }

    pub(crate) fn to_compact(&self) -> Pauli64 {
        debug_assert!(self.n <= 64);
        Pauli64 {
            x: self.x.first().copied().unwrap_or(0),
            z: self.z.first().copied().unwrap_or(0),
            e: self.phase,
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = (self.phase as i64 - self.y_count() as i64).rem_euclid(4);
        f.write_str(["+", "+i", "-", "-i"][s as usize])?;
        for q in 0..self.n {
            let c = match self.get(q) {
                Pauli1::I => 'I',
                Pauli1::X => 'X',
                Pauli1::Y => 'Y',
                Pauli1::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional `+`, `-`, `+i`, `-i` or `i` prefix then letters, qubit 0 first.
    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        let (sign, body) = if let Some(r) = t.strip_prefix("+i").or_else(|| t.strip_prefix('i')) {
            (1u8, r)
        } else if let Some(r) = t.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = t.strip_prefix('-') {
            (2, r)
        } else {
            (0, t.strip_prefix('+').unwrap_or(t))
        };
        let n = body.chars().count();
        let mut p = PauliString::identity(n);
        let mut ys = 0u8;
        for (q, c) in body.chars().enumerate() {
            match c {
                'I' | '_' => {}
                'X' => p.set(q, true, false),
                'Z' => p.set(q, false, true),
                'Y' => {
                    p.set(q, true, true);
                    ys = ys.wrapping_add(1);
                }
                _ => return Err(Error::Parse(text.to_string())),
            }
        }
        p.phase = (sign + (ys & 3)) & 3;
        Ok(p)
    }
}

/// Single-word string for hot loops on at most 64 qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub(crate) struct Pauli64 {
    pub x: u64,
    pub z: u64,
    pub e: u8,
}

impl Pauli64 {
    #[inline(always)]
    pub fn mul_assign(&mut self, o: &Pauli64) {
        let flips = (self.z & o.x).count_ones() as u8;
        self.e = self.e.wrapping_add(o.e).wrapping_add(flips << 1) & 3;
        self.x ^= o.x;
        self.z ^= o.z;
    }
}
