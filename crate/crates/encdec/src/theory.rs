//! Closed-form annealed predictions as functions of `(N, k, alpha)`.
//!
//! Powers of `2^N` are divided out before evaluation so that nothing
//! overflows or underflows for the sizes used here.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
}

impl CodeParams {
    pub fn new(n: usize, k: usize, alpha: f64) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument(format!("need 0 < k < N, got N = {n}, k = {k}")));
        }
        if !(0.0..=std::f64::consts::PI + 1e-12).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, pi]")));
        }
        Ok(CodeParams { n, k, alpha })
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `cos^2(alpha / 2)`.
    fn t(&self) -> f64 {
        (self.alpha / 2.0).cos().powi(2)
    }

    /// `gamma = 2^(N-k) cos^(2N)(alpha/2)` and `x = gamma / (1 + gamma)`.
    fn x(&self) -> f64 {
        let ln_g = (self.n - self.k) as f64 * std::f64::consts::LN_2 + self.nf() * self.t().ln();
        // logistic in log space
        1.0 / (1.0 + (-ln_g).exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Ensemble {
    Haar,
    Clifford,
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ensemble::Haar => "haar",
            Ensemble::Clifford => "clifford",
        })
    }
}

impl std::str::FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Ensemble::Haar),
            "clifford" => Ok(Ensemble::Clifford),
            _ => Err(Error::Parse(s.into())),
        }
    }
}

/// `cos(alpha_c / 2) = 2^((r - 1) / 2)`.
pub fn critical_alpha(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("rate {r} outside (0, 1)")));
    }
    Ok(2.0 * (2f64.powf((r - 1.0) / 2.0)).acos())
}

/// Annealed `E[m_F(0)]`.
pub fn mean_numerator(p: &CodeParams) -> f64 {
    let e = 2f64.powi(-(p.n as i32));
    (p.t().powi(p.n as i32) + e) / (1.0 + e)
}

/// Annealed `E[p(0)]`.
pub fn mean_denominator(p: &CodeParams) -> f64 {
    let e = 2f64.powi(-(p.n as i32));
    let ek = 2f64.powi(p.k as i32 - p.n as i32);
    ((1.0 - ek) * p.t().powi(p.n as i32) + ek - e * e) / (1.0 - e * e)
}

/// Exact finite-size annealed fidelity.
pub fn annealed_fidelity(p: &CodeParams) -> f64 {
    mean_numerator(p) / mean_denominator(p)
}

/// `[1 + (cos(alpha/2) / cos(alpha_c/2))^(-2N)]^(-1)`.
pub fn fidelity_leading(p: &CodeParams) -> Result<f64> {
    let ac = critical_alpha(p.rate())?;
    let ratio = (p.alpha / 2.0).cos() / (ac / 2.0).cos();
    Ok(1.0 / (1.0 + ratio.powf(-2.0 * p.nf())))
}

fn logistic_arg(p: &CodeParams) -> Result<f64> {
    let ac = critical_alpha(p.rate())?;
    Ok((ac / 2.0).tan() * p.nf() * (p.alpha - ac))
}

/// Scaling form `[1 + exp(tan(alpha_c/2) N (alpha - alpha_c))]^(-1)`.
pub fn fidelity_scaling(p: &CodeParams) -> Result<f64> {
    Ok(1.0 / (1.0 + logistic_arg(p)?.exp()))
}

/// Leading-order relative variances `([Delta m_F]^2, [Delta p]^2)` at `s = 0`.
pub fn fidelity_fluctuations(p: &CodeParams, ens: Ensemble) -> (f64, f64) {
    let n = p.n as i32;
    let c2n = p.t().powi(n);
    // g = 2^N cos^(2N)(alpha/2)
    let g = (2.0 * p.t()).powi(n);
    let two_k = 2f64.powi(p.k as i32);
    match ens {
        Ensemble::Haar => {
            let dm = (1.0 + 2.0 * g) / (1.0 + g).powi(2);
            let dp = (two_k + 2.0 * g * (1.0 + c2n)) / (two_k + g).powi(2);
            (dm, dp)
        }
        Ensemble::Clifford => {
            let w = 3.0 + (2.0 * p.alpha).cos();
            let dm = (3.0 + 2.0 * g + (w / 2.0).powi(n)) / (1.0 + g).powi(2);
            let dp = 2f64.powi(p.k as i32 - n) * (2f64.powi(n) - g * g + w.powi(n)) / (two_k + g).powi(2);
            (dm, dp)
        }
    }
}

/// Leading-order annealed `M_q(0)` for Haar encoders, `q` in {2, 3}.
pub fn annealed_sre_haar(p: &CodeParams, q: u32) -> Result<f64> {
    let x = p.x();
    let k = p.k as i32;
    match q {
        2 => Ok(-(x.powi(4) + 2f64.powi(2 - k) * (1.0 - x).powi(2) * (1.0 + 2.0 * x + 3.0 * x * x)).log2()),
        3 => Ok(-0.5 * (x.powi(6) + 2f64.powi(-k) * (1.0 - x * x) * (1.0 + x * x + 16.0 * x.powi(4))).log2()),
        _ => Err(Error::Unsupported(format!("closed form for q = {q}"))),
    }
}

/// `c_q log2[1 + exp(tan(alpha_c/2) N (alpha - alpha_c))]` with `c_2 = 4`, `c_3 = 3`.
pub fn sre_scaling(p: &CodeParams, q: u32) -> Result<f64> {
    let pref = match q {
        2 => 4.0,
        3 => 3.0,
        _ => return Err(Error::Unsupported(format!("scaling form for q = {q}"))),
    };
    let z = logistic_arg(p)?;
    // log2(1 + e^z) without overflow
    let sp = if z > 30.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    Ok(pref * sp / std::f64::consts::LN_2)
}

fn cos_ratio(r: f64, alpha: f64) -> Result<f64> {
    Ok((alpha / 2.0).cos() / (critical_alpha(r)? / 2.0).cos())
}

/// Large-N SRE density `M_q / N` for Haar encoders.
pub fn sre_density_haar(r: f64, alpha: f64, q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("Renyi index {q} < 2")));
    }
    let rho = cos_ratio(r, alpha)?;
    let qf = q as f64;
    Ok(if rho > 1.0 {
        0.0
    } else if rho > 2f64.powf(-r / (4.0 * qf)) {
        -4.0 * qf / (qf - 1.0) * rho.log2()
    } else {
        r / (qf - 1.0)
    })
}

fn b_polys(t: f64) -> [f64; 4] {
    [
        16.0 * t.powi(4) - 32.0 * t.powi(3) + 20.0 * t * t - 4.0 * t + 1.0,
        8.0 * t * t - 14.0 * t + 7.0,
        4.0 * t * t - 6.0 * t + 3.0,
        4.0 * t * t - 4.0 * t + 2.0,
    ]
}

/// Leading-order annealed `M_2(0)` for Clifford encoders.
pub fn annealed_sre2_clifford(p: &CodeParams) -> f64 {
    let [b1, b2, b3, b4] = b_polys(p.t());
    let (n, k) = (p.n as i32, p.k as i32);
    let q = 2f64.powi(k + 3 - n) * b2.powi(n) + 16.0 * b3.powi(n) + 7.0 * 2f64.powi(1 - k) * b4.powi(n);
    let x = p.x();
    -(x.powi(4) + x * x * (1.0 - x).powi(2) * q + (1.0 - x).powi(4) * b1.powi(n)).log2()
}

/// `Lambda(alpha) = (1 - sin^2(2 alpha) / 4)^(1/8)`.
pub fn clifford_threshold(alpha: f64) -> f64 {
    (1.0 - (2.0 * alpha).sin().powi(2) / 4.0).powf(0.125)
}

/// Deep-branch Clifford density `-log2[1 - sin^2(2 alpha) / 4]`.
pub fn sre2_density_clifford_deep(alpha: f64) -> f64 {
    -(1.0 - (2.0 * alpha).sin().powi(2) / 4.0).log2()
}

/// Large-N density `M_2 / N` for Clifford encoders.
pub fn sre2_density_clifford(r: f64, alpha: f64) -> Result<f64> {
    let rho = cos_ratio(r, alpha)?;
    Ok(if rho > 1.0 {
        0.0
    } else if rho > clifford_threshold(alpha) {
        -8.0 * rho.log2()
    } else {
        sre2_density_clifford_deep(alpha)
    })
}

/// Leading-order annealed participation entropy `S_q(0)` for Clifford encoders.
pub fn annealed_pe(p: &CodeParams, q: u32) -> Result<f64> {
    let x = p.x();
    let c2 = p.alpha.cos().powi(2);
    let (a, b) = (1.0 + 3.0 * c2, 1.0 + c2);
    let n = p.n as i32;
    let k = p.k as i32;
    match q {
        2 => Ok(-(x * x + (1.0 - x).powi(2) * (b.powi(n) + 2.0) * 2f64.powi(-k)).log2()),
        3 => Ok(-0.5 * (x.powi(3) + (1.0 - x).powi(3) * (a.powi(n) + 9.0 * b.powi(n) + 12.0) * 2f64.powi(-2 * k)).log2()),
        _ => Err(Error::Unsupported(format!("closed form for q = {q}"))),
    }
}

/// Haar encoders at a fixed syndrome `s != 0`: `(E[p], E[m_F])`.
pub fn haar_nontrivial_moments(p: &CodeParams) -> (f64, f64) {
    // (2^N - (1 + cos a)^N) / (2^(2N) - 1), scaled by 2^(-2N)
    let e = 2f64.powi(-(p.n as i32));
    let m = e * (1.0 - p.t().powi(p.n as i32)) / (1.0 - e * e);
    (2f64.powi(p.k as i32) * m, m)
}

/// `E[mu^q] / E[mu]^q` for `mu = |<j|psi>|^2` with `psi` uniform on the sphere in dimension `d`.
pub fn porter_thomas_ratio(q: u32, d: f64) -> f64 {
    (0..q).map(|i| (i as f64 + 1.0) * d / (d + i as f64)).product()
}

pub const FORMULAS: &[&str] = &[
    "alpha_c",
    "fidelity",
    "fidelity_leading",
    "fidelity_scaling",
    "numerator",
    "denominator",
    "dm2_haar",
    "dp2_haar",
    "dm2_clifford",
    "dp2_clifford",
    "sre2_haar",
    "sre3_haar",
    "sre2_scaling",
    "sre3_scaling",
    "sre2_density_haar",
    "sre3_density_haar",
    "sre2_clifford",
    "sre2_density_clifford",
    "pe2",
    "pe3",
    "haar_mean_p",
    "haar_mean_m",
];

/// Evaluates a formula from [`FORMULAS`] by name.
pub fn evaluate(name: &str, p: &CodeParams) -> Result<f64> {
    let r = p.rate();
    Ok(match name {
        "alpha_c" => critical_alpha(r)?,
        "fidelity" => annealed_fidelity(p),
        "fidelity_leading" => fidelity_leading(p)?,
        "fidelity_scaling" => fidelity_scaling(p)?,
        "numerator" => mean_numerator(p),
        "denominator" => mean_denominator(p),
        "dm2_haar" => fidelity_fluctuations(p, Ensemble::Haar).0,
        "dp2_haar" => fidelity_fluctuations(p, Ensemble::Haar).1,
        "dm2_clifford" => fidelity_fluctuations(p, Ensemble::Clifford).0,
        "dp2_clifford" => fidelity_fluctuations(p, Ensemble::Clifford).1,
        "sre2_haar" => annealed_sre_haar(p, 2)?,
        "sre3_haar" => annealed_sre_haar(p, 3)?,
        "sre2_scaling" => sre_scaling(p, 2)?,
        "sre3_scaling" => sre_scaling(p, 3)?,
        "sre2_density_haar" => sre_density_haar(r, p.alpha, 2)?,
        "sre3_density_haar" => sre_density_haar(r, p.alpha, 3)?,
        "sre2_clifford" => annealed_sre2_clifford(p),
        "sre2_density_clifford" => sre2_density_clifford(r, p.alpha)?,
        "pe2" => annealed_pe(p, 2)?,
        "pe3" => annealed_pe(p, 3)?,
        "haar_mean_p" => haar_nontrivial_moments(p).0,
        "haar_mean_m" => haar_nontrivial_moments(p).1,
        _ => return Err(Error::InvalidArgument(format!("unknown formula `{name}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cp(n: usize, k: usize, a: f64) -> CodeParams {
        CodeParams::new(n, k, a).unwrap()
    }

    #[test]
    fn critical_point_values() {
        assert!((critical_alpha(0.5).unwrap() - 2.0 * 2f64.powf(-0.25).acos()).abs() < 1e-15);
        assert!((critical_alpha(0.5).unwrap() - 1.14372).abs() < 1e-5);
        assert!((critical_alpha(1e-12).unwrap() - PI / 2.0).abs() < 1e-9);
        assert!(critical_alpha(1.0 - 1e-12).unwrap() < 1e-5);
        assert!(critical_alpha(1.0).is_err());
    }

    #[test]
    fn fidelity_endpoints() {
        for (n, k) in [(8, 4), (12, 3), (30, 15)] {
            assert!((annealed_fidelity(&cp(n, k, 0.0)) - 1.0).abs() < 1e-14);
            let want = (2f64.powi(n as i32) - 1.0) / (2f64.powi((n + k) as i32) - 1.0);
            assert!((annealed_fidelity(&cp(n, k, PI)) / want - 1.0).abs() < 1e-10);
        }
        let ac = critical_alpha(0.5).unwrap();
        assert!((fidelity_scaling(&cp(20, 10, ac)).unwrap() - 0.5).abs() < 1e-15);
        assert!((sre_scaling(&cp(20, 10, ac), 2).unwrap() - 4.0).abs() < 1e-12);
        assert!((sre_scaling(&cp(20, 10, ac), 3).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn haar_sre_critical_limit() {
        // gamma = 1 exactly at alpha_c when k = rN; large k kills the other term
        let ac = critical_alpha(0.5).unwrap();
        let p = cp(400, 200, ac);
        assert!((annealed_sre_haar(&p, 2).unwrap() - 4.0).abs() < 1e-9);
        assert!((annealed_sre_haar(&p, 3).unwrap() - 3.0).abs() < 1e-9);
        assert!(annealed_sre_haar(&cp(400, 200, 0.0), 2).unwrap().abs() < 1e-9);
    }

    #[test]
    fn haar_fluctuation_at_zero() {
        for n in [4, 10, 20] {
            let (dm, _) = fidelity_fluctuations(&cp(n, n / 2, 0.0), Ensemble::Haar);
            let d = 2f64.powi(n as i32);
            assert!((dm - (1.0 + 2.0 * d) / (1.0 + d).powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn density_branches_are_continuous() {
        let r = 0.5;
        let ac = critical_alpha(r).unwrap();
        let cc = (ac / 2.0).cos();
        for q in [2u32, 3, 5] {
            let rho_b = 2f64.powf(-r / (4.0 * q as f64));
            let ab = 2.0 * (rho_b * cc).acos();
            let lo = sre_density_haar(r, ab - 1e-13, q).unwrap();
            let hi = sre_density_haar(r, ab + 1e-13, q).unwrap();
            assert!((lo - hi).abs() < 1e-11);
            assert!((hi - r / (q as f64 - 1.0)).abs() < 1e-11);
            assert_eq!(sre_density_haar(r, ac - 0.01, q).unwrap(), 0.0);
        }
        assert!((sre_density_haar(0.5, 3.0, 2).unwrap() - 0.5).abs() < 1e-15);
        // Clifford boundary: where rho = Lambda the branches agree by construction
        for a in [1.2, 1.3, 1.45] {
            let rho = (a / 2.0f64).cos() / cc;
            if rho <= 1.0 {
                let mid = -8.0 * rho.log2();
                let lam = clifford_threshold(a);
                if (rho - lam).abs() < 1e-3 {
                    assert!((mid - sre2_density_clifford_deep(a)).abs() < 1e-2);
                }
            }
        }
        assert!((sre2_density_clifford_deep(PI / 4.0) + 0.75f64.log2()).abs() < 1e-15);
        assert_eq!(sre2_density_clifford(0.5, PI / 2.0).unwrap(), 0.0);
    }

    #[test]
    fn clifford_sre_at_zero_error() {
        let [b1, b2, b3, b4] = b_polys(1.0);
        assert_eq!((b1, b2, b3, b4), (1.0, 1.0, 1.0, 2.0));
        assert!(annealed_sre2_clifford(&cp(200, 100, 0.0)).abs() < 1e-9);
        // leading order only: slightly negative at alpha = 0, shrinking like 2^(k-N)
        let small = annealed_sre2_clifford(&cp(8, 4, 0.0));
        let big = annealed_sre2_clifford(&cp(24, 12, 0.0));
        assert!(small < 0.0 && big < 0.0 && big.abs() < small.abs() / 100.0);
    }

    #[test]
    fn nontrivial_syndrome_moments() {
        let (mp, mm) = haar_nontrivial_moments(&cp(10, 5, 0.0));
        assert_eq!((mp, mm), (0.0, 0.0));
        let (mp, _) = haar_nontrivial_moments(&cp(40, 20, 1.0));
        assert!((mp / 2f64.powi(-20) - 1.0).abs() < 1e-4);
        assert!((porter_thomas_ratio(2, 1e12) - 2.0).abs() < 1e-9);
        assert!((porter_thomas_ratio(3, 1e12) - 6.0).abs() < 1e-9);
        assert!((porter_thomas_ratio(2, 4.0) - 8.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn every_formula_evaluates() {
        let p = cp(16, 8, 1.0);
        for name in FORMULAS {
            let v = evaluate(name, &p).unwrap();
            assert!(v.is_finite(), "{name}");
        }
        assert!(evaluate("nope", &p).is_err());
    }

    proptest! {
        #[test]
        fn fidelity_monotone_in_alpha(n in 2usize..60, kf in 0.05f64..0.95, a in 0.0f64..3.0, da in 0.0f64..0.14) {
            let k = ((kf * n as f64).round() as usize).clamp(1, n - 1);
            let f1 = annealed_fidelity(&cp(n, k, a));
            let f2 = annealed_fidelity(&cp(n, k, a + da));
            prop_assert!(f2 <= f1 + 1e-12);
        }

        #[test]
        fn haar_entropies_nonnegative(n in 8usize..60, a in 0.0f64..PI) {
            let p = cp(n, n / 2, a);
            prop_assert!(annealed_sre_haar(&p, 2).unwrap() >= -1e-12);
            prop_assert!(annealed_sre_haar(&p, 3).unwrap() >= -1e-12);
        }
    }
}
