//! Fidelity, stabilizer Rényi entropy and participation entropy of a logical state.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Largest logical register for the exact SRE transform.
pub const MAX_SRE_QUBITS: usize = 13;

const NORM_TOL: f64 = 1e-10;

pub fn fidelity(amps: &[Complex64], target: usize) -> f64 {
    amps[target].norm_sqr()
}

fn qubits_of(len: usize) -> Result<usize> {
    if !len.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("state length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

fn check_norm(amps: &[Complex64]) -> Result<()> {
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidArgument(format!("state norm {norm} is not 1")));
    }
    Ok(())
}

fn fwht<T>(v: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// `sum_P <P>^(2q)` over all `4^k` unsigned Pauli strings, for each `q` in `qs`.
///
/// For a fixed X part `a`, the expectations over all Z parts `b` are the
/// Walsh-Hadamard transform of `conj(psi(y ^ a)) psi(y)`. Pairing `y` with
/// `y ^ a` halves the transform: with `H` the transform over the half with
/// bit `j` (lowest bit of `a`) clear, the two values sharing the other bits
/// of `b` have moduli `2|Re H|` and `2|Im H|`.
pub fn pauli_moment_sums(amps: &[Complex64], qs: &[u32]) -> Result<Vec<f64>> {
    let k = qubits_of(amps.len())?;
    if k > MAX_SRE_QUBITS {
        return Err(Error::Budget(format!(
            "exact SRE on {k} logical qubits (limit {MAX_SRE_QUBITS}); reduce N or the rate"
        )));
    }
    let d = amps.len();
    let mut sums = vec![0.0; qs.len()];
    let acc = |v: f64, sums: &mut [f64]| {
        let v2 = v * v;
        for (s, &q) in sums.iter_mut().zip(qs) {
            *s += v2.powi(q as i32);
        }
    };
    let mut diag: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    fwht(&mut diag);
    for &v in &diag {
        acc(v, &mut sums);
    }
    if k == 0 {
        return Ok(sums);
    }
    let half = d / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); half];
    for a in 1..d {
        let j = a.trailing_zeros();
        let low = (1usize << j) - 1;
        for (c, slot) in buf.iter_mut().enumerate() {
            let y = (c & low) | ((c & !low) << 1);
            *slot = amps[y ^ a].conj() * amps[y];
        }
        fwht(&mut buf);
        for h in &buf {
            acc(2.0 * h.re, &mut sums);
            acc(2.0 * h.im, &mut sums);
        }
    }
    Ok(sums)
}

/// Stabilizer Rényi entropies `M_q` for each `q >= 2`, in one transform pass.
pub fn sre_many(amps: &[Complex64], qs: &[u32]) -> Result<Vec<f64>> {
    if let Some(&q) = qs.iter().find(|&&q| q < 2) {
        return Err(Error::InvalidArgument(format!("Renyi index {q} < 2")));
    }
    check_norm(amps)?;
    let d = amps.len() as f64;
    let sums = pauli_moment_sums(amps, qs)?;
    Ok(sums
        .iter()
        .zip(qs)
        .map(|(s, &q)| ((s / d).log2() / (1.0 - q as f64)).max(0.0))
        .collect())
}

pub fn sre(amps: &[Complex64], q: u32) -> Result<f64> {
    Ok(sre_many(amps, &[q])?[0])
}

/// Reference `M_q` from one dense expectation value per Pauli string; `k <= 6`.
pub fn sre_naive(amps: &[Complex64], q: u32) -> Result<f64> {
    let k = qubits_of(amps.len())?;
    if k > 6 {
        return Err(Error::Budget(format!("naive SRE on {k} qubits (limit 6)")));
    }
    check_norm(amps)?;
    let d = 1u64 << k;
    let mut sum = 0.0;
    for a in 0..d {
        for b in 0..d {
            let ys = (a & b).count_ones() as u8;
            let p = PauliString::from_masks(k, &[a], &[b], ys & 3)?;
            let e = p.expectation(amps)?;
            sum += e.re.powi(2 * q as i32);
        }
    }
    Ok((sum / d as f64).log2() / (1.0 - q as f64))
}

/// `S_q = log2(sum_x |psi_x|^(2q)) / (1 - q)`.
pub fn participation_entropy(amps: &[Complex64], q: u32) -> f64 {
    let s: f64 = amps.iter().map(|a| a.norm_sqr().powi(q as i32)).sum();
    (s.log2() / (1.0 - q as f64)).max(0.0)
}

/// Upper bound on `M_2` implied by fidelity `f > 1/2`.
pub fn magic_bound(f: f64) -> Option<f64> {
    (f > 0.5).then(|| -4.0 * (2.0 * f - 1.0).log2())
}

/// `None` when `F <= 1/2` and the bound does not apply.
pub fn magic_bound_check(amps: &[Complex64], target: usize) -> Result<Option<bool>> {
    let f = fidelity(amps, target);
    match magic_bound(f) {
        None => Ok(None),
        Some(b) => Ok(Some(sre(amps, 2)? <= b + 1e-9)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordTableau;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(k: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..1 << k).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= n);
        v
    }

    fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        // a on the low qubits
        let mut out = Vec::with_capacity(a.len() * b.len());
        for y in b {
            for x in a {
                out.push(x * y);
            }
        }
        out
    }

    #[test]
    fn t_state_value() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [Complex64::new(h, 0.0), Complex64::from_polar(h, std::f64::consts::FRAC_PI_4)];
        let m2 = sre(&psi, 2).unwrap();
        assert!((m2 + (0.75f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn basis_and_uniform_states() {
        let mut e = vec![Complex64::new(0.0, 0.0); 16];
        e[5] = Complex64::new(0.0, 1.0);
        assert!(sre(&e, 2).unwrap().abs() < 1e-12);
        assert_eq!(participation_entropy(&e, 2), 0.0);
        let u = vec![Complex64::new(0.25, 0.0); 16];
        assert!((participation_entropy(&u, 2) - 4.0).abs() < 1e-12);
        assert!((participation_entropy(&u, 3) - 4.0).abs() < 1e-12);
        assert!((fidelity(&u, 3) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn stabilizer_states_have_no_magic() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for k in 1..=8 {
            for _ in 0..20 {
                let psi = CliffordTableau::sample(k, &mut rng).stabilizer_state().unwrap();
                let m = sre_many(&psi, &[2, 3]).unwrap();
                assert!(m[0].abs() < 1e-9 && m[1].abs() < 1e-9, "k={k} {m:?}");
            }
        }
    }

    #[test]
    fn bound_applicability() {
        let mut psi = vec![Complex64::new(0.0, 0.0); 4];
        psi[0] = Complex64::new(1.0, 0.0);
        assert_eq!(magic_bound_check(&psi, 0).unwrap(), Some(true));
        assert_eq!(magic_bound_check(&psi, 1).unwrap(), None);
        // sqrt(F)|0> + sqrt(1-F)|T> style state at F = 0.9
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = [Complex64::new(h, 0.0), Complex64::from_polar(h, std::f64::consts::FRAC_PI_4)];
        let mut v = [Complex64::new(0.9f64.sqrt(), 0.0), Complex64::new(0.0, 0.0)];
        v[0] += t[0] * 0.1f64.sqrt();
        v[1] += t[1] * 0.1f64.sqrt();
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let v = [v[0] / n, v[1] / n];
        assert_eq!(magic_bound_check(&v, 0).unwrap(), Some(true));
    }

    #[test]
    fn rejects_unnormalized_and_oversized() {
        assert!(sre(&[Complex64::new(2.0, 0.0)], 2).is_err());
        assert!(sre(&[Complex64::new(1.0, 0.0); 3], 2).is_err());
        assert!(matches!(pauli_moment_sums(&vec![Complex64::new(0.0, 0.0); 1 << 14], &[2]), Err(Error::Budget(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn fast_matches_naive(seed in any::<u64>(), k in 1usize..=5, q in 2u32..=4) {
            let psi = random_state(k, &mut ChaCha8Rng::seed_from_u64(seed));
            let fast = sre(&psi, q).unwrap();
            let slow = sre_naive(&psi, q).unwrap();
            prop_assert!((fast - slow).abs() < 1e-10);
        }

        #[test]
        fn additive_and_bounded(seed in any::<u64>(), k1 in 1usize..=3, k2 in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_state(k1, &mut rng);
            let b = random_state(k2, &mut rng);
            let ab = kron(&a, &b);
            let lhs = sre(&ab, 2).unwrap();
            prop_assert!((lhs - sre(&a, 2).unwrap() - sre(&b, 2).unwrap()).abs() < 1e-9);
            let s2 = participation_entropy(&ab, 2);
            let s3 = participation_entropy(&ab, 3);
            prop_assert!(s3 <= s2 + 1e-12 && s2 <= (k1 + k2) as f64 + 1e-12);
        }

        #[test]
        fn clifford_invariant(seed in any::<u64>(), k in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random_state(k, &mut rng);
            let t = CliffordTableau::sample(k, &mut rng);
            // dense action of the Clifford whose columns are Q^y |stab>
            let phi0 = t.stabilizer_state().unwrap();
            let mut out = vec![Complex64::new(0.0, 0.0); 1 << k];
            for (y, amp) in psi.iter().enumerate() {
                let mut col = phi0.clone();
                for j in 0..k {
                    if y >> j & 1 == 1 {
                        col = t.x_image(j).apply(&col).unwrap();
                    }
                }
                for (o, c) in out.iter_mut().zip(&col) {
                    *o += amp * c;
                }
            }
            prop_assert!((sre(&out, 2).unwrap() - sre(&psi, 2).unwrap()).abs() < 1e-9);
        }
    }
}
