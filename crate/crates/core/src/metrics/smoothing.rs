use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::dk::hermite;
use super::tv::{tv_distance, TvOptions};
use super::DistanceEstimate;
use crate::numeric::{normal_pdf, CompensatedSum};
use crate::rng::{stream, Purpose, DRAW_BLOCK};
use crate::{Error, Result};

/// Integration range; the gaussian tail beyond it is below 1e-80.
const REACH: f64 = 20.0;

/// `c_k = (2π)^{−1/2} ∫ |d^k/ds^k e^{−s²/2}| ds = ∫ |He_k(s)| φ(s) ds`,
/// by adaptive Simpson quadrature between the sign changes of `He_k`.
pub fn smoothing_constant(k: u32) -> Result<f64> {
    if k > 10 {
        return Err(Error::range("smoothing order", format!("{k} > 10")));
    }
    if k == 0 {
        // the gaussian density has unit mass
        return Ok(1.0);
    }
    let f = |s: f64| (hermite(k, s) * normal_pdf(s)).abs();
    let mut cuts = vec![-REACH];
    cuts.extend(hermite_roots(k));
    cuts.push(REACH);
    let total: CompensatedSum = cuts
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], 1e-14))
        .collect();
    Ok(total.value())
}

/// `C_k = max(c_0, …, c_k)`.
pub fn smoothing_constant_max(k: u32) -> Result<f64> {
    (0..=k)
        .map(smoothing_constant)
        .try_fold(0.0, |m, c| Ok(f64::max(m, c?)))
}

/// Roots of `He_k` by sign-change scan and bisection.
fn hermite_roots(k: u32) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = 1e-3;
    let mut a = -12.0;
    while a < 12.0 {
        let b = a + step;
        let (fa, fb) = (hermite(k, a), hermite(k, b));
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if hermite(k, lo) * hermite(k, mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
    }
    roots
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Both sides of `TV(x + ηZ, y + ηZ) ≤ C_k·η^{−k}·d_k(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTvCheck {
    pub lhs: DistanceEstimate,
    pub rhs: f64,
    pub eta: f64,
    pub k: u32,
}

/// Adds `ηZ` with one gaussian stream shared by both samples (element `i`
/// of each gets the same `Z_i`) and compares against `C_k·η^{−k}·dk_upper`.
pub fn smoothed_tv_check(
    x: &[f64],
    y: &[f64],
    eta: f64,
    k: u32,
    dk_upper: f64,
    z_seed: u64,
    opts: &TvOptions,
) -> Result<SmoothedTvCheck> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::range("eta", format!("{eta} not in (0, 1)")));
    }
    let z = gaussian_stream(x.len().max(y.len()), z_seed);
    let xs: Vec<f64> = x.iter().zip(&z).map(|(v, z)| v + eta * z).collect();
    let ys: Vec<f64> = y.iter().zip(&z).map(|(v, z)| v + eta * z).collect();
    let lhs = tv_distance(&xs, &ys, opts)?;
    let rhs = smoothing_constant_max(k)? * eta.powi(-(k as i32)) * dk_upper;
    Ok(SmoothedTvCheck { lhs, rhs, eta, k })
}

fn gaussian_stream(count: usize, seed: u64) -> Vec<f64> {
    let parts: Vec<Vec<f64>> = (0..count.div_ceil(DRAW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Purpose::Smoothing, b as u64, 0, 0);
            let len = (count - b * DRAW_BLOCK).min(DRAW_BLOCK);
            (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
        })
        .collect();
    parts.concat()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        assert_eq!(smoothing_constant(0).unwrap(), 1.0);
        assert!((smoothing_constant(1).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-9);
        let c2 = 4.0 * (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((smoothing_constant(2).unwrap() - c2).abs() < 1e-9);
    }

    #[test]
    fn unit_mass_by_quadrature() {
        let q = adaptive_simpson(&normal_pdf, -REACH, REACH, 1e-14);
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_cross_check() {
        // ∫_a^b He_k φ = He_{k−1}(a)φ(a) − He_{k−1}(b)φ(b)
        for k in 1..=10 {
            let mut cuts = vec![-REACH];
            cuts.extend(hermite_roots(k));
            cuts.push(REACH);
            let g = |s: f64| hermite(k - 1, s) * normal_pdf(s);
            let exact: f64 = cuts.windows(2).map(|w| (g(w[0]) - g(w[1])).abs()).sum();
            assert!((smoothing_constant(k).unwrap() - exact).abs() < 1e-9, "k={k}");
            assert_eq!(hermite_roots(k).len(), k as usize);
        }
    }

    #[test]
    fn running_max() {
        assert_eq!(smoothing_constant_max(1).unwrap(), 1.0);
        assert!(smoothing_constant(11).is_err());
    }

    #[test]
    fn eta_range_enforced() {
        let x = [0.0; 10];
        assert!(smoothed_tv_check(&x, &x, 1.0, 1, 0.1, 0, &TvOptions::default()).is_err());
        assert!(smoothed_tv_check(&x, &x, 0.0, 1, 0.1, 0, &TvOptions::default()).is_err());
    }
}
