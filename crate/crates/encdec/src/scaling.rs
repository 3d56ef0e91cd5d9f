//! Curve crossings, finite-size scaling collapse and small regression helpers.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// One system size: values `y ± err` on a grid `x`.
#[derive(Clone, Debug, Serialize)]
pub struct Curve {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub err: Vec<f64>,
}

impl Curve {
    pub fn new(n: usize, x: Vec<f64>, y: Vec<f64>, err: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        if x.len() != err.len() {
            return Err(Error::LengthMismatch(x.len(), err.len()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("curve grid must be strictly increasing".into()));
        }
        Ok(Curve { n, x, y, err })
    }

    /// Linear interpolation inside the grid.
    pub fn at(&self, x: f64) -> Option<f64> {
        let i = self.x.partition_point(|&v| v < x);
        if i == 0 {
            return (self.x.first() == Some(&x)).then(|| self.y[0]);
        }
        if i == self.x.len() {
            return None;
        }
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        let t = (x - x0) / (x1 - x0);
        Some(self.y[i - 1] * (1.0 - t) + self.y[i] * t)
    }
}

/// First `x` where the curve passes through `level`.
pub fn level_crossing(c: &Curve, level: f64) -> Option<f64> {
    c.x.windows(2).zip(c.y.windows(2)).find_map(|(x, y)| {
        let (d0, d1) = (y[0] - level, y[1] - level);
        if d0 == 0.0 {
            Some(x[0])
        } else if d0 * d1 < 0.0 {
            Some(x[0] + (x[1] - x[0]) * d0 / (d0 - d1))
        } else {
            None
        }
    })
}

/// First sign change of `a - b` on `a`'s grid, interpolating `b`; `None` when the curves do not cross.
pub fn crossing(a: &Curve, b: &Curve) -> Option<f64> {
    let pts: Vec<(f64, f64)> = a.x.iter().zip(&a.y).filter_map(|(&x, &y)| b.at(x).map(|yb| (x, y - yb))).collect();
    pts.windows(2).find_map(|w| {
        let ((x0, d0), (x1, d1)) = (w[0], w[1]);
        if d0 == 0.0 {
            Some(x0)
        } else if d0 * d1 < 0.0 {
            Some(x0 + (x1 - x0) * d0 / (d0 - d1))
        } else {
            None
        }
    })
}

/// Crossings of each pair of consecutive sizes, curves sorted by `n`.
pub fn adjacent_crossings(curves: &[Curve]) -> Vec<(usize, usize, Option<f64>)> {
    let mut sorted: Vec<&Curve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.n);
    sorted.windows(2).map(|w| (w[0].n, w[1].n, crossing(w[0], w[1]))).collect()
}

/// Mean and standard deviation of the crossing under Gaussian resampling of both curves.
pub fn bootstrap_crossing<R: Rng + ?Sized>(a: &Curve, b: &Curve, reps: usize, rng: &mut R) -> Option<(f64, f64)> {
    let jitter = |c: &Curve, rng: &mut R| -> Curve {
        let y = c.y.iter().zip(&c.err).map(|(y, e)| y + e * rng.sample::<f64, _>(StandardNormal)).collect();
        Curve { n: c.n, x: c.x.clone(), y, err: c.err.clone() }
    };
    let xs: Vec<f64> = (0..reps).filter_map(|_| crossing(&jitter(a, rng), &jitter(b, rng))).collect();
    if xs.len() < 2 {
        return None;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((m, v.sqrt()))
}

/// Spread of all points after rescaling `x -> (x - x_c) n^(1/nu)`.
///
/// Points are binned in the scaling variable over the range covered by every
/// size; each bin with at least two sizes contributes its inverse-error
/// weighted variance. Lower is better; `inf` when the curves do not overlap.
pub fn collapse_quality(curves: &[Curve], x_c: f64, nu: f64, bins: usize) -> f64 {
    let scaled: Vec<Vec<(f64, f64, f64)>> = curves
        .iter()
        .map(|c| {
            let s = (c.n as f64).powf(1.0 / nu);
            c.x.iter().zip(&c.y).zip(&c.err).map(|((&x, &y), &e)| ((x - x_c) * s, y, e)).collect()
        })
        .collect();
    let lo = scaled.iter().map(|v| v.first().map_or(f64::INFINITY, |p| p.0)).fold(f64::NEG_INFINITY, f64::max);
    let hi = scaled.iter().map(|v| v.last().map_or(f64::NEG_INFINITY, |p| p.0)).fold(f64::INFINITY, f64::min);
    if !(hi > lo) || bins == 0 {
        return f64::INFINITY;
    }
    // an error floor keeps exact points from dominating
    let floor = curves.iter().flat_map(|c| c.err.iter().copied()).filter(|&e| e > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1e-12 };
    let width = (hi - lo) / bins as f64;
    let mut acc = vec![(0.0, 0.0, 0.0, 0u64); bins];
    for (ci, v) in scaled.iter().enumerate() {
        for &(u, y, e) in v {
            if u < lo || u > hi {
                continue;
            }
            let b = (((u - lo) / width) as usize).min(bins - 1);
            let w = 1.0 / e.max(floor).powi(2);
            let a = &mut acc[b];
            a.0 += w;
            a.1 += w * y;
            a.2 += w * y * y;
            a.3 |= 1 << (ci % 64);
        }
    }
    let spreads: Vec<f64> = acc
        .iter()
        .filter(|a| a.3.count_ones() >= 2)
        .map(|a| {
            let m = a.1 / a.0;
            (a.2 / a.0 - m * m).max(0.0)
        })
        .collect();
    if spreads.is_empty() {
        return f64::INFINITY;
    }
    spreads.iter().sum::<f64>() / spreads.len() as f64
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CollapseFit {
    pub x_c: f64,
    pub nu: f64,
    pub quality: f64,
}

/// Grid search over `x_c` and `nu` in the given ranges, then two refinements around the best point.
pub fn fit_collapse(curves: &[Curve], xc_range: (f64, f64), nu_range: (f64, f64), bins: usize) -> Result<CollapseFit> {
    if curves.len() < 2 {
        return Err(Error::InvalidArgument(format!("collapse needs at least two sizes, got {}", curves.len())));
    }
    const G: usize = 25;
    let (mut xa, mut xb) = xc_range;
    let (mut na, mut nb) = nu_range;
    let mut best = CollapseFit { x_c: xa, nu: na, quality: f64::INFINITY };
    for _ in 0..3 {
        for i in 0..G {
            let xc = if xb > xa { xa + (xb - xa) * i as f64 / (G - 1) as f64 } else { xa };
            for j in 0..G {
                let nu = if nb > na { na + (nb - na) * j as f64 / (G - 1) as f64 } else { na };
                let q = collapse_quality(curves, xc, nu, bins);
                if q < best.quality {
                    best = CollapseFit { x_c: xc, nu, quality: q };
                }
            }
        }
        let (dx, dn) = ((xb - xa) / (G - 1) as f64 * 2.0, (nb - na) / (G - 1) as f64 * 2.0);
        xa = (best.x_c - dx).max(xc_range.0);
        xb = (best.x_c + dx).min(xc_range.1);
        na = (best.nu - dn).max(nu_range.0);
        nb = (best.nu + dn).min(nu_range.1);
    }
    if !best.quality.is_finite() {
        return Err(Error::InvalidArgument("curves never overlap after rescaling".into()));
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// Fit of `ln y` against `x`; all `y` must be positive.
pub fn log_linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if let Some(v) = y.iter().find(|&&v| v <= 0.0) {
        return Err(Error::InvalidArgument(format!("log fit of nonpositive value {v}")));
    }
    linear_fit(x, &y.iter().map(|v| v.ln()).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn logistic_family(nu: f64, xc: f64, noise: f64, seed: u64) -> Vec<Curve> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        [8usize, 12, 16, 20, 24]
            .iter()
            .map(|&n| {
                let x: Vec<f64> = (0..40).map(|i| 0.6 + 1.1 * i as f64 / 39.0).collect();
                let y = x
                    .iter()
                    .map(|&a| {
                        let z = 0.6 * (n as f64).powf(1.0 / nu) * (a - xc);
                        1.0 / (1.0 + z.exp()) + noise * rng.sample::<f64, _>(StandardNormal)
                    })
                    .collect();
                Curve::new(n, x, y, vec![noise.max(1e-3); 40]).unwrap()
            })
            .collect()
    }

    #[test]
    fn recovers_logistic_exponent() {
        for nu in [1.0, 2.0] {
            let c = logistic_family(nu, 1.14, 0.003, 9);
            let fit = fit_collapse(&c, (0.9, 1.4), (0.5, 3.0), 30).unwrap();
            assert!((fit.nu - nu).abs() < 0.05 * nu, "{fit:?}");
            assert!((fit.x_c - 1.14).abs() < 0.02, "{fit:?}");
        }
    }

    #[test]
    fn crossings_of_logistic_family() {
        let c = logistic_family(1.0, 1.14, 0.0, 1);
        for (_, _, x) in adjacent_crossings(&c) {
            assert!((x.unwrap() - 1.14).abs() < 1e-3);
        }
        assert!((level_crossing(&c[4], 0.5).unwrap() - 1.14).abs() < 2e-3);
        let flat = Curve::new(8, vec![0.0, 1.0], vec![0.2, 0.2], vec![0.0; 2]).unwrap();
        let above = Curve::new(12, vec![0.0, 1.0], vec![0.3, 0.4], vec![0.0; 2]).unwrap();
        assert_eq!(crossing(&flat, &above), None);
        assert_eq!(level_crossing(&flat, 0.5), None);
    }

    #[test]
    fn log_linear() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * (-0.7 * v).exp()).collect();
        let f = log_linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!(log_linear_fit(&x, &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn bootstrap_spread_is_small_for_clean_data() {
        let c = logistic_family(1.0, 1.14, 0.002, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (m, s) = bootstrap_crossing(&c[0], &c[4], 200, &mut rng).unwrap();
        assert!((m - 1.14).abs() < 0.02 && s < 0.02);
    }
}
