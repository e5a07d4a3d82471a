use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::{shift_modulus_curve, DEFAULT_SHIFT_FRACTIONS};
use crate::numeric::{fit_line, LineFit};
use crate::rng::{stream, Purpose, DRAW_BLOCK};
use crate::{Error, Result};

/// `Var(V^d)` for `V ~ U[−1, 1]`: `1/(2d+1) − (E V^d)²`.
pub fn power_variance(d: u32) -> f64 {
    let mean = if d % 2 == 0 { 1.0 / (d as f64 + 1.0) } else { 0.0 };
    1.0 / (2.0 * d as f64 + 1.0) - mean * mean
}

/// Desk-scale fit of `C(d)` in `D(s) ≤ C(d)·Var(f(V))^{−1/(2d)}·s^{1/d}`,
/// using `f(V) = V^d` with `V ~ U[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftCalibration {
    pub degree: u32,
    pub variance: f64,
    /// `(s, D̂(s), D̂(s)·Var^{1/(2d)}/s^{1/d})`.
    pub points: Vec<(f64, f64, f64)>,
    /// Smallest constant consistent with every point.
    pub value: f64,
    /// Fit of `log D̂` against `log s`; the slope should be near `1/d`.
    pub fit: Option<LineFit>,
}

pub fn calibrate_shift_constant(d: u32, count: usize, seed: u64, s_values: &[f64]) -> Result<ShiftCalibration> {
    if d == 0 {
        return Err(Error::range("degree", "must be at least 1"));
    }
    if s_values.is_empty() {
        return Err(Error::Empty("shift radii"));
    }
    if let Some(s) = s_values.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::range("shift radius", format!("{s} must be positive")));
    }
    let parts: Vec<Vec<f64>> = (0..count.div_ceil(DRAW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Purpose::Sample, b as u64, 0, 0);
            let len = (count - b * DRAW_BLOCK).min(DRAW_BLOCK);
            (0..len)
                .map(|_| rng.random_range(-1.0..=1.0f64).powi(d as i32))
                .collect()
        })
        .collect();
    let x = parts.concat();
    let curve = shift_modulus_curve(&x, s_values, &DEFAULT_SHIFT_FRACTIONS)?;
    let variance = power_variance(d);
    let scale = variance.powf(1.0 / (2.0 * d as f64));
    let points: Vec<(f64, f64, f64)> = s_values
        .iter()
        .zip(&curve)
        .map(|(&s, &v)| (s, v, v * scale / s.powf(1.0 / d as f64)))
        .collect();
    let value = points.iter().map(|p| p.2).fold(0.0, f64::max);
    let (ls, lv): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .unzip();
    Ok(ShiftCalibration {
        degree: d,
        variance,
        points,
        value,
        fit: fit_line(&ls, &lv),
    })
}
