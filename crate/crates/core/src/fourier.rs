//! Empirical characteristic functions, power-law envelope fits, and margins
//! against the decay bound.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{bound_cf, ConstantsConfig};
use crate::coeffs::CoefficientStats;
use crate::numeric::{fit_line, geomspace};
use crate::{Error, Result};

/// Minimum number of grid points inside a fit window.
pub const MIN_WINDOW_POINTS: usize = 10;

/// `t ↦ E exp(itξ)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfCurve {
    pub t: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `sqrt(Var cos(tξ) + Var sin(tξ))/√count`; zero for exact curves.
    pub stderr: Vec<f64>,
    /// Sample count, or `None` for an exactly known curve.
    pub count: Option<usize>,
}

impl CfCurve {
    /// A noise-free curve, e.g. an analytic characteristic function.
    pub fn exact(t: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::range(
                "cf curve",
                format!("{} t values, {} values", t.len(), values.len()),
            ));
        }
        let stderr = vec![0.0; t.len()];
        Ok(Self {
            t,
            values,
            stderr,
            count: None,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `3/√count`, below which `|value|` is indistinguishable from zero.
    pub fn noise_floor(&self) -> f64 {
        self.count.map_or(0.0, |n| 3.0 / (n as f64).sqrt())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im,abs,stderr\n");
        for i in 0..self.len() {
            let v = self.values[i];
            let _ = writeln!(out, "{},{},{},{},{}", self.t[i], v.re, v.im, v.norm(), self.stderr[i]);
        }
        out
    }
}

/// Geometric grid with 64 points per decade on `[0.1, 1000]`.
pub fn default_t_grid() -> Vec<f64> {
    geomspace(0.1, 1000.0, 4 * 64 + 1)
}

pub fn empirical_cf(samples: &[f64], t_grid: &[f64]) -> Result<CfCurve> {
    if samples.is_empty() {
        return Err(Error::Empty("characteristic function samples"));
    }
    if let Some(t) = t_grid.iter().find(|t| !t.is_finite()) {
        return Err(Error::range("t grid", format!("{t} is not finite")));
    }
    let n = samples.len() as f64;
    let per_t: Vec<(Complex64, f64)> = t_grid
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return (Complex64::new(1.0, 0.0), 0.0);
            }
            let (mut sc, mut ss, mut sc2, mut ss2) = (0.0, 0.0, 0.0, 0.0);
            for &x in samples {
                let (s, c) = (t * x).sin_cos();
                sc += c;
                ss += s;
                sc2 += c * c;
                ss2 += s * s;
            }
            let (mc, ms) = (sc / n, ss / n);
            let var = (sc2 / n - mc * mc).max(0.0) + (ss2 / n - ms * ms).max(0.0);
            (Complex64::new(mc, ms), (var / n).sqrt())
        })
        .collect();
    let (values, stderr) = per_t.into_iter().unzip();
    Ok(CfCurve {
        t: t_grid.to_vec(),
        values,
        stderr,
        count: Some(samples.len()),
    })
}

/// `|value| ≈ K·t^{−β}` over a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Smallest `K` with `|value| ≤ K·t^{−β}` at every fitted point.
    pub k: f64,
    /// Intercept of the least-squares fit, `exp(log K)`.
    pub k_least_squares: f64,
    pub beta: f64,
    /// Whether local maxima were used instead of all points.
    pub peaks: bool,
    pub points_used: usize,
    /// RMS of the log-scale residuals; large values mean the curve is not a
    /// power law on this window.
    pub residual_rms: f64,
    pub r_squared: f64,
}

impl DecayFit {
    /// A residual above 0.1 in log scale rules out a power-law description.
    pub fn is_power_law(&self) -> bool {
        self.residual_rms < 0.1
    }
}

pub fn decay_fit(curve: &CfCurve, t_min: f64, t_max: f64) -> Result<DecayFit> {
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::range("fit window", format!("[{t_min}, {t_max}]")));
    }
    let abs = curve.abs();
    let window: Vec<usize> = (0..curve.len())
        .filter(|&i| curve.t[i] >= t_min && curve.t[i] <= t_max)
        .collect();
    if window.len() < MIN_WINDOW_POINTS {
        return Err(Error::range(
            "fit window",
            format!(
                "{} grid points in [{t_min}, {t_max}], need {MIN_WINDOW_POINTS}",
                window.len()
            ),
        ));
    }
    let w: Vec<f64> = window.iter().map(|&i| abs[i]).collect();
    let interior = 1..w.len() - 1;
    let has_minimum = interior.clone().any(|i| w[i] < w[i - 1] && w[i] < w[i + 1]);
    let candidates: Vec<usize> = if has_minimum {
        interior
            .filter(|&i| w[i] >= w[i - 1] && w[i] >= w[i + 1])
            .map(|i| window[i])
            .collect()
    } else {
        window.clone()
    };
    let floor = curve.noise_floor();
    let used: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| abs[i] > floor && abs[i] > 3.0 * curve.stderr[i])
        .collect();
    if used.len() < 3 || 2 * used.len() < candidates.len() {
        return Err(Error::NoiseDominated(format!(
            "{} of {} fit points above the noise floor {floor:.3e}; use more samples or an earlier window",
            used.len(),
            candidates.len()
        )));
    }
    let lt: Vec<f64> = used.iter().map(|&i| curve.t[i].ln()).collect();
    let lv: Vec<f64> = used.iter().map(|&i| abs[i].ln()).collect();
    let fit = fit_line(&lt, &lv).ok_or_else(|| Error::range("fit window", "degenerate t values"))?;
    let beta = -fit.slope;
    let k = used.iter().map(|&i| abs[i] * curve.t[i].powf(beta)).fold(0.0, f64::max);
    Ok(DecayFit {
        k,
        k_least_squares: fit.intercept.exp(),
        beta,
        peaks: has_minimum,
        points_used: used.len(),
        residual_rms: fit.residual_rms,
        r_squared: fit.r_squared,
    })
}

/// Smallest `C_1` for which the decay term alone covers `|value|` at every
/// point of the window.
pub fn fitted_c1(curve: &CfCurve, k_star: u32, a: &CoefficientStats, t_min: f64, t_max: f64) -> Result<f64> {
    if k_star == 0 {
        return Err(Error::range("k_star", "must be at least 1"));
    }
    let gamma = 1.0 / (a.degree * k_star) as f64;
    let scale = a.top_norm().powf(gamma) / 2.0;
    let c = (0..curve.len())
        .filter(|&i| curve.t[i] >= t_min && curve.t[i] <= t_max && curve.t[i] != 0.0)
        .map(|i| curve.values[i].norm() * curve.t[i].abs().powf(gamma) * scale)
        .fold(0.0, f64::max);
    if c > 0.0 {
        Ok(c)
    } else {
        Err(Error::Empty("fit window"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfMargin {
    pub t: f64,
    pub abs: f64,
    pub stderr: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfBoundCheck {
    pub points: Vec<CfMargin>,
    pub min_margin: f64,
    /// Points where the bound is below 1 and so says something.
    pub informative_points: usize,
}

/// `bound_cf(t) − |value(t)|` at every nonzero grid point.
pub fn cf_bound_check(
    curve: &CfCurve,
    k_star: u32,
    a: &CoefficientStats,
    constants: &ConstantsConfig,
) -> Result<CfBoundCheck> {
    let mut points = Vec::with_capacity(curve.len());
    for i in 0..curve.len() {
        let t = curve.t[i];
        if t == 0.0 {
            continue;
        }
        let bound = bound_cf(t, k_star, a, constants)?;
        let abs = curve.values[i].norm();
        points.push(CfMargin {
            t,
            abs,
            stderr: curve.stderr[i],
            bound,
            margin: bound - abs,
        });
    }
    if points.is_empty() {
        return Err(Error::Empty("cf grid without t = 0"));
    }
    Ok(CfBoundCheck {
        min_margin: points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min),
        informative_points: points.iter().filter(|p| p.bound < 1.0).count(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn uniform(count: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::stream(seed, crate::rng::Purpose::Sample, 0, 0, 0);
        (0..count).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    #[test]
    fn degenerate_samples() {
        let c = empirical_cf(&[0.0; 100], &[0.0, 1.0, 7.5]).unwrap();
        assert!(c.values.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        assert!(empirical_cf(&[], &[1.0]).is_err());
    }

    #[test]
    fn uniform_matches_sinc() {
        let x = uniform(1_000_000, 5);
        let c = empirical_cf(&x, &[1.0, 5.0, 10.0]).unwrap();
        for (i, t) in c.t.iter().enumerate() {
            let want = t.sin() / t;
            assert!((c.values[i].re - want).abs() <= 3.0 * c.stderr[i], "t={t}");
        }
    }

    #[test]
    fn gaussian_matches_closed_form() {
        let mut rng = crate::rng::stream(2, crate::rng::Purpose::Gaussian, 0, 0, 0);
        let x: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c = empirical_cf(&x, &[0.5, 1.0, 2.0]).unwrap();
        for (i, t) in c.t.iter().enumerate() {
            assert!((c.values[i] - Complex64::new((-t * t / 2.0).exp(), 0.0)).norm() < 4.0 * c.stderr[i] + 1e-3);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let x = uniform(10_000, 1);
        let c = empirical_cf(&x, &[-3.0, 3.0]).unwrap();
        assert!((c.values[0] - c.values[1].conj()).norm() < 1e-12);
    }

    #[test]
    fn exact_power_law() {
        let t = geomspace(1.0, 100.0, 40);
        let v = t.iter().map(|t| Complex64::new(2.5 * t.powf(-0.7), 0.0)).collect();
        let f = decay_fit(&CfCurve::exact(t, v).unwrap(), 1.0, 100.0).unwrap();
        assert!((f.beta - 0.7).abs() < 1e-6);
        assert!((f.k - 2.5).abs() < 1e-6);
        assert!(!f.peaks);
        assert!(f.is_power_law());
    }

    #[test]
    fn sinc_envelope_by_peaks() {
        let t = linspace(5.0, 200.0, 8000);
        let v = t.iter().map(|t| Complex64::new(t.sin() / t, 0.0)).collect();
        let f = decay_fit(&CfCurve::exact(t, v).unwrap(), 5.0, 200.0).unwrap();
        assert!(f.peaks);
        assert!((f.beta - 1.0).abs() < 0.1, "{f:?}");
    }

    #[test]
    fn gaussian_is_not_a_power_law() {
        let t = linspace(1.0, 5.0, 50);
        let v = t.iter().map(|t| Complex64::new((-t * t / 2.0).exp(), 0.0)).collect();
        let curve = CfCurve::exact(t, v).unwrap();
        let f = decay_fit(&curve, 1.0, 5.0).unwrap();
        assert!(!f.is_power_law(), "{f:?}");
        let narrow = decay_fit(&curve, 1.0, 2.5).unwrap();
        assert!(f.beta > narrow.beta);
    }

    #[test]
    fn noise_dominated_window() {
        let x = uniform(1_000, 3);
        let c = empirical_cf(&x, &linspace(300.0, 400.0, 200)).unwrap();
        assert!(matches!(decay_fit(&c, 300.0, 400.0), Err(Error::NoiseDominated(_))));
        assert!(decay_fit(&c, 300.0, 300.1).is_err());
    }

    #[test]
    fn uniform_bound_holds_with_unit_constant() {
        let t = linspace(1.0, 50.0, 500);
        let v = t.iter().map(|t| Complex64::new(t.sin() / t, 0.0)).collect();
        let curve = CfCurve::exact(t, v).unwrap();
        let a = CoefficientStats::top_only(1, 1, 1.0, 1.0);
        let check = cf_bound_check(&curve, 1, &a, &ConstantsConfig::default()).unwrap();
        assert!(check.min_margin >= 0.0);
    }

    #[test]
    fn fitted_constant_gives_nonnegative_margins() {
        let x = uniform(100_000, 9);
        let curve = empirical_cf(&x, &linspace(2.0, 40.0, 300)).unwrap();
        let a = CoefficientStats::top_only(1, 1, 1.0, 1e-9);
        let c1 = fitted_c1(&curve, 1, &a, 2.0, 40.0).unwrap();
        let consts = ConstantsConfig {
            c1_cf: Some(c1),
            ..Default::default()
        };
        assert!(cf_bound_check(&curve, 1, &a, &consts).unwrap().min_margin >= 0.0);
    }

    #[test]
    fn csv_layout() {
        let c = CfCurve::exact(
            vec![0.0, 1.0],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, -0.5)],
        )
        .unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("t,re,im,abs,stderr\n0,1,0,1,0\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_t_grid();
        assert_eq!(g.len(), 257);
        assert!((g[64] - 1.0).abs() < 1e-12);
    }
}
