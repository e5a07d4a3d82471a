use rayon::prelude::*;

use super::tv::interval_scan_sorted;
use crate::numeric::sorted_copy;
use crate::{Error, Result};

/// Default relative shift grid `h/s`; `±1` are always included.
pub const DEFAULT_SHIFT_FRACTIONS: [f64; 6] = [-1.0, -0.5, -0.25, 0.25, 0.5, 1.0];

/// `TV(ξ, ξ + h)` estimated from one sample against its own shifted copy,
/// as the largest `|F(t) − F(t − h)|`-rise over a single interval. Using the
/// same draws on both sides cancels most of the sampling noise.
pub fn shift_tv_sorted(sorted: &[f64], h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    let shifted: Vec<f64> = sorted.iter().map(|v| v + h).collect();
    interval_scan_sorted(sorted, &shifted, 1).value
}

/// `D(s) = max_{h ∈ grid} TV(x, x + h)` over a grid in `[−s, s]`; `±s` are
/// added when missing.
pub fn shift_modulus(x: &[f64], s: f64, h_grid: &[f64]) -> Result<f64> {
    if s == 0.0 {
        return if h_grid.is_empty() {
            Err(Error::Empty("shift grid"))
        } else {
            Ok(0.0)
        };
    }
    let fractions: Vec<f64> = h_grid.iter().map(|h| h / s).collect();
    Ok(shift_modulus_curve(x, &[s], &fractions)?[0])
}

/// `D(s)` for every `s` in `s_values`, with shifts `s·fraction`. Each value is
/// the max over all shifts of magnitude `≤ s` evaluated anywhere in the
/// sweep, so the curve is nondecreasing in `s` on a fixed sample.
pub fn shift_modulus_curve(x: &[f64], s_values: &[f64], fractions: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Empty("shift_modulus samples"));
    }
    if fractions.is_empty() {
        return Err(Error::Empty("shift grid"));
    }
    if let Some(f) = fractions.iter().find(|f| !(f.abs() <= 1.0 + 1e-12)) {
        return Err(Error::range(
            "shift grid",
            format!("relative shift {f} outside [−1, 1]"),
        ));
    }
    if let Some(s) = s_values.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::range("shift radius", format!("{s} < 0")));
    }
    let mut fr: Vec<f64> = fractions.to_vec();
    for end in [-1.0, 1.0] {
        if !fr.contains(&end) {
            fr.push(end);
        }
    }
    let sorted = sorted_copy(x);
    let shifts: Vec<f64> = s_values.iter().flat_map(|s| fr.iter().map(move |f| s * f)).collect();
    let tvs: Vec<f64> = shifts.par_iter().map(|&h| shift_tv_sorted(&sorted, h)).collect();
    Ok(s_values
        .iter()
        .map(|&s| {
            shifts
                .iter()
                .zip(&tvs)
                .filter(|(h, _)| h.abs() <= s * (1.0 + 1e-12))
                .map(|(_, v)| *v)
                .fold(0.0, f64::max)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_radius() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(shift_modulus(&x, 0.0, &[0.0]).unwrap(), 0.0);
        assert!(shift_modulus(&x, 1.0, &[]).is_err());
        assert!(shift_modulus(&x, 1.0, &[2.0]).is_err());
    }

    #[test]
    fn evenly_spaced_uniform_shift() {
        // 10⁴ evenly spaced points on [0, 1): shifting by 0.2 moves 20% of mass
        let x: Vec<f64> = (0..10_000).map(|i| (i as f64 + 0.5) / 10_000.0).collect();
        let d = shift_modulus(&x, 0.2, &[-0.2, 0.2]).unwrap();
        assert!((d - 0.2).abs() < 2e-4, "{d}");
    }

    #[test]
    fn curve_is_monotone() {
        let x: Vec<f64> = (0..5000).map(|i| ((i * 7919) % 5003) as f64 / 5003.0).collect();
        let s = [0.001, 0.01, 0.005, 0.1];
        let c = shift_modulus_curve(&x, &s, &DEFAULT_SHIFT_FRACTIONS).unwrap();
        assert!(c[1] >= c[0] && c[1] >= c[2] && c[3] >= c[1]);
    }
}
