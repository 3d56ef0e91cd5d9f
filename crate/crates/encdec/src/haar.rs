//! Dense state-vector encoders: Haar unitaries, Haar isometries, brickwork
//! circuits of two-qubit Haar gates, and Clifford tableaux expanded densely.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::clifford::CliffordTableau;
use crate::decoder::{DecodedState, ErrorModel};
use crate::error::{Error, Result};
use crate::pauli::{i_pow, Pauli64};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const MAX_DENSE_QUBITS: usize = 12;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar unitary of dimension `d`: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar unitary on `n` qubits, `n <= 12`.
pub fn random_haar_dense<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DMatrix<Complex64>> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Budget(format!("dense Haar unitary on {n} qubits (limit {MAX_DENSE_QUBITS})")));
    }
    Ok(haar_unitary(1 << n, rng))
}

/// `m` orthonormal columns distributed as any `m` columns of a Haar unitary.
pub fn haar_isometry<R: Rng + ?Sized>(dim: usize, m: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    assert!(m <= dim);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        // two Gram-Schmidt passes keep the frame orthogonal to rounding
        for _ in 0..2 {
            for c in &cols {
                let ov: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= ov * ci;
                }
            }
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        cols.push(v);
    }
    cols
}

/// Applies the error layer `exp(-i alpha Z / 2)` on every qubit.
pub fn apply_error_layer(state: &mut [Complex64], n: usize, em: &ErrorModel) {
    let a = em.alpha();
    let phases: Vec<Complex64> = (0..=n).map(|w| Complex64::from_polar(1.0, -a * (n as f64 - 2.0 * w as f64) / 2.0)).collect();
    for (y, amp) in state.iter_mut().enumerate() {
        *amp *= phases[y.count_ones() as usize];
    }
}

/// Nearest-neighbour two-qubit Haar gates in alternating layers, open boundary.
#[derive(Clone, Debug)]
pub struct BrickworkCircuit {
    pub n: usize,
    /// Gate on qubits `(q, q + 1)`, row-major 4x4 in the basis `|b_{q+1} b_q>`.
    pub gates: Vec<(usize, [Complex64; 16])>,
}

impl BrickworkCircuit {
    pub fn random<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> Self {
        let mut gates = Vec::new();
        for layer in 0..depth {
            let mut q = layer % 2;
            while q + 1 < n {
                let u = haar_unitary(4, rng);
                let mut g = [ZERO; 16];
                for r in 0..4 {
                    for c in 0..4 {
                        g[r * 4 + c] = u[(r, c)];
                    }
                }
                gates.push((q, g));
                q += 2;
            }
        }
        BrickworkCircuit { n, gates }
    }

    fn apply_gate(state: &mut [Complex64], q: usize, g: &[Complex64; 16], adjoint: bool) {
        let (b0, b1) = (1usize << q, 1usize << (q + 1));
        for base in 0..state.len() {
            if base & (b0 | b1) != 0 {
                continue;
            }
            let idx = [base, base | b0, base | b1, base | b0 | b1];
            let v = idx.map(|i| state[i]);
            for (r, &i) in idx.iter().enumerate() {
                let mut acc = ZERO;
                for c in 0..4 {
                    let m = if adjoint { g[c * 4 + r].conj() } else { g[r * 4 + c] };
                    acc += m * v[c];
                }
                state[i] = acc;
            }
        }
    }

    pub fn apply(&self, state: &mut [Complex64]) {
        for (q, g) in &self.gates {
            Self::apply_gate(state, *q, g, false);
        }
    }

    pub fn apply_adjoint(&self, state: &mut [Complex64]) {
        for (q, g) in self.gates.iter().rev() {
            Self::apply_gate(state, *q, g, true);
        }
    }
}

#[derive(Clone, Debug)]
pub enum DenseEncoder {
    Unitary { n: usize, u: DMatrix<Complex64> },
    /// Selected columns `U|j>` of a unitary; index 0 must be present.
    Columns { n: usize, index: Vec<usize>, cols: Vec<Vec<Complex64>> },
    Brickwork(BrickworkCircuit),
    Clifford(CliffordTableau),
}

impl DenseEncoder {
    pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Ok(DenseEncoder::Unitary { n, u: random_haar_dense(n, rng)? })
    }

    /// Haar columns needed to decode the listed syndrome blocks.
    pub fn haar_columns<R: Rng + ?Sized>(n: usize, k: usize, syndromes: &[u64], rng: &mut R) -> Result<Self> {
        if n > 20 {
            return Err(Error::Budget(format!("Haar columns on {n} qubits (limit 20)")));
        }
        let mut index = vec![0usize];
        for &s in syndromes {
            for x in 0..(1usize << k) {
                let j = x | (s as usize) << k;
                if j != 0 {
                    index.push(j);
                }
            }
        }
        let cols = haar_isometry(1 << n, index.len(), rng);
        Ok(DenseEncoder::Columns { n, index, cols })
    }

    pub fn brickwork<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> Result<Self> {
        if n > 24 {
            return Err(Error::Budget(format!("brickwork state vector on {n} qubits (limit 24)")));
        }
        Ok(DenseEncoder::Brickwork(BrickworkCircuit::random(n, depth, rng)))
    }

    pub fn n(&self) -> usize {
        match self {
            DenseEncoder::Unitary { n, .. } | DenseEncoder::Columns { n, .. } => *n,
            DenseEncoder::Brickwork(c) => c.n,
            DenseEncoder::Clifford(t) => t.n(),
        }
    }
}

/// Decoded logical state for syndrome `s` by dense simulation of `U^dag V U |0>`.
pub fn simulate_dense(enc: &DenseEncoder, k: usize, s: u64, em: &ErrorModel) -> Result<DecodedState> {
    let n = enc.n();
    if k > n || (n - k < 64 && s >> (n - k) != 0) {
        return Err(Error::InvalidArgument(format!("syndrome {s:#x} with N = {n}, k = {k}")));
    }
    let d = 1usize << k;
    let lo = (s as usize) << k;
    let amps = match enc {
        DenseEncoder::Unitary { u, .. } => {
            let mut phi: Vec<Complex64> = u.column(0).iter().copied().collect();
            apply_error_layer(&mut phi, n, em);
            (lo..lo + d)
                .map(|j| u.column(j).iter().zip(&phi).map(|(a, b)| a.conj() * b).sum())
                .collect()
        }
        DenseEncoder::Columns { index, cols, .. } => {
            let mut phi = cols[0].clone();
            apply_error_layer(&mut phi, n, em);
            let mut out = Vec::with_capacity(d);
            for j in lo..lo + d {
                let pos = index
                    .iter()
                    .position(|&i| i == j)
                    .ok_or_else(|| Error::InvalidArgument(format!("column {j} not sampled")))?;
                out.push(cols[pos].iter().zip(&phi).map(|(a, b)| a.conj() * b).sum());
            }
            out
        }
        DenseEncoder::Brickwork(c) => {
            let mut psi = vec![ZERO; 1 << n];
            psi[0] = Complex64::new(1.0, 0.0);
            c.apply(&mut psi);
            apply_error_layer(&mut psi, n, em);
            c.apply_adjoint(&mut psi);
            psi[lo..lo + d].to_vec()
        }
        DenseEncoder::Clifford(t) => clifford_block(t, k, s, em)?,
    };
    Ok(DecodedState::from_unnormalized(n, k, s, amps))
}

// With W = C^dag: W|0> is the stabilizer state of the Z images and
// W|y> = Q^y W|0> for Q the X images, which fixes every column of W.
fn clifford_block(t: &CliffordTableau, k: usize, s: u64, em: &ErrorModel) -> Result<Vec<Complex64>> {
    let n = t.n();
    if n > 16 {
        return Err(Error::Budget(format!("dense Clifford expansion on {n} qubits (limit 16)")));
    }
    let phi0 = t.stabilizer_state()?;
    let q: Vec<Pauli64> = t.x_images().iter().map(|p| p.to_compact()).collect();
    let dim = 1usize << n;
    let mut qy = vec![Pauli64::default(); dim];
    for y in 1..dim {
        let j = y.trailing_zeros() as usize;
        let mut p = qy[y & (y - 1)];
        p.mul_assign(&q[j]);
        qy[y] = p;
    }
    let col_entry = |p: &Pauli64, row: usize| -> Complex64 {
        let src = row ^ p.x as usize;
        let sgn = if (p.z as usize & src).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        i_pow(p.e) * phi0[src] * sgn
    };
    // U|0> = W^dag |0>, entries conj(<0|W|y>)
    let mut psi: Vec<Complex64> = qy.iter().map(|p| col_entry(p, 0).conj()).collect();
    apply_error_layer(&mut psi, n, em);
    let d = 1usize << k;
    let lo = (s as usize) << k;
    Ok((lo..lo + d).map(|row| qy.iter().zip(&psi).map(|(p, a)| a * col_entry(p, row)).sum()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unitarity_error(u: &DMatrix<Complex64>) -> f64 {
        let p = u.adjoint() * u;
        let mut err = 0.0f64;
        for i in 0..u.nrows() {
            for j in 0..u.ncols() {
                let t = if i == j { 1.0 } else { 0.0 };
                err = err.max((p[(i, j)] - Complex64::new(t, 0.0)).norm());
            }
        }
        err
    }

    #[test]
    fn haar_matrix_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_haar_dense(4, &mut rng).unwrap();
        assert!(unitarity_error(&u) < 1e-12);
        assert!(random_haar_dense(13, &mut rng).is_err());
    }

    #[test]
    fn isometry_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cols = haar_isometry(64, 20, &mut rng);
        for i in 0..20 {
            for j in 0..20 {
                let ov: Complex64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((ov - Complex64::new(t, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn brickwork_adjoint_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = BrickworkCircuit::random(5, 6, &mut rng);
        let mut psi: Vec<Complex64> = (0..32).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let orig = psi.clone();
        c.apply(&mut psi);
        c.apply_adjoint(&mut psi);
        for (a, b) in psi.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_error_returns_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let em = ErrorModel::new(0.0);
        let encs = [
            DenseEncoder::haar_unitary(4, &mut rng).unwrap(),
            DenseEncoder::haar_columns(4, 2, &[0], &mut rng).unwrap(),
            DenseEncoder::brickwork(4, 8, &mut rng).unwrap(),
            DenseEncoder::Clifford(CliffordTableau::sample(4, &mut rng)),
        ];
        for e in &encs {
            let st = simulate_dense(e, 2, 0, &em).unwrap();
            assert!((st.born_prob - 1.0).abs() < 1e-10);
            assert!((st.fidelity(0).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
