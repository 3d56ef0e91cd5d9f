//! Clifford encoders as tableaux of conjugated generators.
//!
//! `x_image(j)` and `z_image(j)` hold `C^dag X_j C` and `C^dag Z_j C`. The
//! decoder only ever reads the `Z` images.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gf2::XorBasis;
use crate::pauli::PauliString;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordTableau {
    n: usize,
    x_images: Vec<PauliString>,
    z_images: Vec<PauliString>,
}

fn random_masks<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliString {
    let w = n.div_ceil(64);
    let mut x: Vec<u64> = (0..w).map(|_| rng.random()).collect();
    let mut z: Vec<u64> = (0..w).map(|_| rng.random()).collect();
    if n % 64 != 0 {
        let m = (1u64 << (n % 64)) - 1;
        x[w - 1] &= m;
        z[w - 1] &= m;
    }
    PauliString::from_masks(n, &x, &z, 0).expect("masks sized for n")
}

// Projects onto the symplectic complement of the pairs chosen so far.
fn project(u: &mut PauliString, pairs: &[(PauliString, PauliString)]) {
    for (v, w) in pairs {
        let uw = u.anticommutes_unchecked(w);
        let uv = u.anticommutes_unchecked(v);
        if uw {
            u.xor_masks(v);
        }
        if uv {
            u.xor_masks(w);
        }
    }
}

fn hermitian_with_sign(mut p: PauliString, negative: bool) -> PauliString {
    let ys: u32 = p.x_words().iter().zip(p.z_words()).map(|(a, b)| (a & b).count_ones()).sum();
    p.set_phase(((ys + if negative { 2 } else { 0 }) & 3) as u8);
    p
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        use crate::pauli::Pauli1;
        CliffordTableau {
            n,
            x_images: (0..n).map(|q| PauliString::single(n, q, Pauli1::X)).collect(),
            z_images: (0..n).map(|q| PauliString::single(n, q, Pauli1::Z)).collect(),
        }
    }

    /// Uniform sample from the Clifford group modulo global phase.
    ///
    /// Builds a random symplectic basis pair by pair, each vector drawn
    /// uniformly from the complement of the previous pairs, then attaches
    /// independent uniform signs.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut pairs: Vec<(PauliString, PauliString)> = Vec::with_capacity(n);
        for _ in 0..n {
            let v = loop {
                let mut u = random_masks(n, rng);
                project(&mut u, &pairs);
                if !u.is_identity() {
                    break u;
                }
            };
            let w = loop {
                let mut u = random_masks(n, rng);
                project(&mut u, &pairs);
                if v.anticommutes_unchecked(&u) {
                    break u;
                }
            };
            pairs.push((v, w));
        }
        let mut x_images = Vec::with_capacity(n);
        let mut z_images = Vec::with_capacity(n);
        for (v, w) in pairs {
            x_images.push(hermitian_with_sign(v, rng.random()));
            z_images.push(hermitian_with_sign(w, rng.random()));
        }
        CliffordTableau { n, x_images, z_images }
    }

    pub fn from_images(x_images: Vec<PauliString>, z_images: Vec<PauliString>) -> Result<Self> {
        let n = z_images.len();
        let t = CliffordTableau { n, x_images, z_images };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.x_images.len() != n || self.z_images.len() != n {
            return Err(Error::InvalidTableau("need n X images and n Z images".into()));
        }
        for p in self.x_images.iter().chain(&self.z_images) {
            if p.n() != n {
                return Err(Error::LengthMismatch(p.n(), n));
            }
            if !p.is_hermitian() {
                return Err(Error::InvalidTableau(format!("non-Hermitian image {p}")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let bad = self.x_images[i].anticommutes_unchecked(&self.x_images[j])
                    || self.z_images[i].anticommutes_unchecked(&self.z_images[j])
                    || self.x_images[i].anticommutes_unchecked(&self.z_images[j]) != (i == j);
                if bad {
                    return Err(Error::InvalidTableau(format!("commutation broken at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_image(&self, j: usize) -> &PauliString {
        &self.x_images[j]
    }

    /// `P_j = C^dag Z_j C`.
    pub fn z_image(&self, j: usize) -> &PauliString {
        &self.z_images[j]
    }

    pub fn x_images(&self) -> &[PauliString] {
        &self.x_images
    }

    pub fn z_images(&self) -> &[PauliString] {
        &self.z_images
    }

    /// Text form: `n` then one `sign xwords.zwords` row per image, X images first.
    pub fn to_hex(&self) -> String {
        let mut out = format!("{}", self.n);
        for p in self.x_images.iter().chain(&self.z_images) {
            let sign = if p.sign() == Some(-1) { '-' } else { '+' };
            let hx: Vec<String> = p.x_words().iter().map(|w| format!("{w:016x}")).collect();
            let hz: Vec<String> = p.z_words().iter().map(|w| format!("{w:016x}")).collect();
            out.push_str(&format!(" {sign}{}.{}", hx.join(""), hz.join("")));
        }
        out
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let bad = || Error::Parse(text.chars().take(40).collect());
        let mut it = text.split_whitespace();
        let n: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let w = n.div_ceil(64);
        let mut rows = Vec::with_capacity(2 * n);
        for tok in it {
            let (neg, body) = match tok.as_bytes().first() {
                Some(b'-') => (true, &tok[1..]),
                Some(b'+') => (false, &tok[1..]),
                _ => return Err(bad()),
            };
            let (hx, hz) = body.split_once('.').ok_or_else(bad)?;
            let parse = |h: &str| -> Result<Vec<u64>> {
                if h.len() != 16 * w {
                    return Err(bad());
                }
                (0..w).map(|i| u64::from_str_radix(&h[16 * i..16 * i + 16], 16).map_err(|_| bad())).collect()
            };
            let p = PauliString::from_masks(n, &parse(hx)?, &parse(hz)?, 0)?;
            rows.push(hermitian_with_sign(p, neg));
        }
        if rows.len() != 2 * n {
            return Err(bad());
        }
        let z = rows.split_off(n);
        Self::from_images(rows, z)
    }

    /// Dense `C^dag |0...0>`, the joint +1 eigenvector of the `Z` images.
    pub fn stabilizer_state(&self) -> Result<Vec<Complex64>> {
        stabilizer_state(&self.z_images)
    }
}

/// Dense joint +1 eigenstate of `n` independent commuting Hermitian strings.
pub fn stabilizer_state(gens: &[PauliString]) -> Result<Vec<Complex64>> {
    let n = gens.first().map(|g| g.n()).unwrap_or(0);
    if n > 24 {
        return Err(Error::Budget(format!("dense stabilizer state on {n} qubits")));
    }
    // eliminate X parts; leftover rows are Z-type constraints on the support
    let mut rows: Vec<PauliString> = gens.to_vec();
    let mut r = 0;
    for q in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| rows[i].x_bit(q)) else { continue };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.x_bit(q) {
                row.mul_assign_unchecked(&pivot);
            }
        }
        r += 1;
    }
    let zrows = &rows[r..];
    let cols: Vec<u64> = (0..n)
        .map(|q| zrows.iter().enumerate().fold(0u64, |acc, (i, p)| acc | (p.z_bit(q) as u64) << i))
        .collect();
    let rhs = zrows.iter().enumerate().fold(0u64, |acc, (i, p)| acc | (((p.phase() >> 1) & 1) as u64) << i);
    let t = XorBasis::from_columns(&cols)
        .solve(rhs)
        .ok_or_else(|| Error::InvalidTableau("generators contain -I".into()))?;
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n];
    psi[t as usize] = Complex64::new(1.0, 0.0);
    for g in gens {
        let gp = g.apply(&psi)?;
        for (a, b) in psi.iter_mut().zip(&gp) {
            *a = (*a + b) * 0.5;
        }
    }
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::InvalidTableau("empty stabilizer code space".into()));
    }
    psi.iter_mut().for_each(|a| *a /= norm);
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn single_qubit_group_has_24_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let seen: HashSet<String> = (0..4000).map(|_| CliffordTableau::sample(1, &mut rng).to_hex()).collect();
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn samples_validate_and_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2, 5, 17, 64, 70] {
            let t = CliffordTableau::sample(n, &mut rng);
            t.validate().unwrap();
            assert_eq!(CliffordTableau::from_hex(&t.to_hex()).unwrap(), t);
        }
    }

    #[test]
    fn same_seed_same_tableau() {
        let a = CliffordTableau::sample(9, &mut ChaCha8Rng::seed_from_u64(3));
        let b = CliffordTableau::sample(9, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn stabilizer_state_is_fixed_by_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..8 {
            let t = CliffordTableau::sample(n, &mut rng);
            let psi = t.stabilizer_state().unwrap();
            for g in t.z_images() {
                let e = g.expectation(&psi).unwrap();
                assert!((e.re - 1.0).abs() < 1e-12 && e.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn broken_tableau_is_rejected() {
        let t = CliffordTableau::identity(2);
        let mut z = t.z_images().to_vec();
        z[1] = z[0].clone();
        assert!(CliffordTableau::from_images(t.x_images().to_vec(), z).is_err());
    }
}
