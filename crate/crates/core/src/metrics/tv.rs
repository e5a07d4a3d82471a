use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DistanceEstimate;
use crate::numeric::{normal_cdf, quantile_sorted, sorted_copy};
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

/// Below this many samples per side an estimate carries a warning.
pub const MIN_RELIABLE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TvMethod {
    /// Shared Freedman–Diaconis histogram with a multinomial bootstrap.
    Histogram {
        #[serde(default = "default_min_bins")]
        min_bins: usize,
        #[serde(default = "default_max_bins")]
        max_bins: usize,
    },
    /// Largest `|P_x(A) − P_y(A)|` over unions `A` of at most `intervals`
    /// intervals, read off the two empirical CDFs. Rank based, so its noise
    /// floor does not depend on the law.
    IntervalScan { intervals: usize },
}

fn default_min_bins() -> usize {
    100
}

fn default_max_bins() -> usize {
    2000
}

impl Default for TvMethod {
    fn default() -> Self {
        TvMethod::Histogram {
            min_bins: default_min_bins(),
            max_bins: default_max_bins(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvOptions {
    #[serde(default)]
    pub method: TvMethod,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_bootstrap() -> usize {
    200
}

impl Default for TvOptions {
    fn default() -> Self {
        Self {
            method: TvMethod::default(),
            bootstrap: default_bootstrap(),
            seed: 0,
        }
    }
}

impl TvOptions {
    pub fn interval_scan(intervals: usize) -> Self {
        Self {
            method: TvMethod::IntervalScan { intervals },
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// `2Φ(|h|/2) − 1`, the TV distance between `N(0,1)` and `N(h,1)`.
pub fn tv_gaussian_shift(h: f64) -> f64 {
    2.0 * normal_cdf(h.abs() / 2.0) - 1.0
}

pub fn tv_distance(x: &[f64], y: &[f64], opts: &TvOptions) -> Result<DistanceEstimate> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Empty("tv_distance samples"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::range("tv_distance samples", "non-finite value"));
    }
    let mut est = match opts.method {
        TvMethod::Histogram { min_bins, max_bins } => histogram_tv(x, y, min_bins, max_bins, opts),
        TvMethod::IntervalScan { intervals } => {
            if intervals == 0 {
                return Err(Error::range("interval count", "must be ≥ 1"));
            }
            let xs = sorted_copy(x);
            let ys = sorted_copy(y);
            scan_estimate(&xs, &ys, intervals)
        }
    };
    if x.len().min(y.len()) < MIN_RELIABLE_SAMPLES {
        est.warning = Some(format!(
            "fewer than {MIN_RELIABLE_SAMPLES} samples; estimate unreliable"
        ));
    }
    Ok(est)
}

/// Shared binning of two samples.
struct Binned {
    cx: Vec<u64>,
    cy: Vec<u64>,
}

fn histogram_counts(x: &[f64], y: &[f64], min_bins: usize, max_bins: usize) -> (Binned, usize) {
    let pooled_len = x.len() + y.len();
    let (lo, hi) = x
        .iter()
        .chain(y)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let iqr = pooled_iqr(x, y);
    let bins = if hi > lo && iqr > 0.0 {
        let width = 2.0 * iqr / (pooled_len as f64).cbrt();
        (((hi - lo) / width).ceil() as usize).clamp(min_bins, max_bins)
    } else {
        min_bins
    };
    let span = if hi > lo { hi - lo } else { 1.0 };
    let index = |v: f64| (((v - lo) / span * bins as f64) as usize).min(bins - 1);
    let count = |s: &[f64]| {
        s.par_chunks(1 << 16)
            .map(|c| {
                let mut h = vec![0u64; bins];
                for v in c {
                    h[index(*v)] += 1;
                }
                h
            })
            .reduce(
                || vec![0u64; bins],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(p, q)| *p += q);
                    a
                },
            )
    };
    (
        Binned {
            cx: count(x),
            cy: count(y),
        },
        bins,
    )
}

fn pooled_iqr(x: &[f64], y: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let n = pooled.len();
    let q = |v: &mut Vec<f64>, p: f64| {
        let i = ((n - 1) as f64 * p).round() as usize;
        *v.select_nth_unstable_by(i, f64::total_cmp).1
    };
    let q3 = q(&mut pooled, 0.75);
    let q1 = q(&mut pooled, 0.25);
    q3 - q1
}

fn tv_of_counts(cx: &[u64], cy: &[u64], nx: f64, ny: f64) -> f64 {
    0.5 * cx
        .iter()
        .zip(cy)
        .map(|(a, b)| (*a as f64 / nx - *b as f64 / ny).abs())
        .sum::<f64>()
}

/// Multinomial draw of `n` items over the probabilities `counts / n`.
fn multinomial<R: rand::Rng>(counts: &[u64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut left = n;
    let mut mass_left = n as f64;
    counts
        .iter()
        .map(|&c| {
            if left == 0 || c == 0 {
                return 0;
            }
            let p = (c as f64 / mass_left).min(1.0);
            mass_left -= c as f64;
            let k = Binomial::new(left, p).expect("valid binomial").sample(rng);
            left -= k;
            k
        })
        .collect()
}

fn histogram_tv(x: &[f64], y: &[f64], min_bins: usize, max_bins: usize, opts: &TvOptions) -> DistanceEstimate {
    let (b, bins) = histogram_counts(x, y, min_bins, max_bins);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let value = tv_of_counts(&b.cx, &b.cy, nx, ny);
    let mut boot: Vec<f64> = (0..opts.bootstrap)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(opts.seed, Purpose::Bootstrap, r as u64, 0, 0);
            let bx = multinomial(&b.cx, x.len() as u64, &mut rng);
            let by = multinomial(&b.cy, y.len() as u64, &mut rng);
            tv_of_counts(&bx, &by, nx, ny)
        })
        .collect();
    let (stderr, ci_low, ci_high) = if boot.len() >= 2 {
        boot.sort_by(f64::total_cmp);
        let m = boot.iter().sum::<f64>() / boot.len() as f64;
        let sd = (boot.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt();
        (sd, quantile_sorted(&boot, 0.025), quantile_sorted(&boot, 0.975))
    } else {
        (0.0, value, value)
    };
    DistanceEstimate {
        value,
        stderr,
        ci_low: ci_low.min(value),
        ci_high: ci_high.max(value),
        method: "histogram".into(),
        detail: format!("freedman-diaconis bins={bins} bootstrap={}", opts.bootstrap),
        samples_x: x.len(),
        samples_y: y.len(),
        warning: None,
    }
}

/// Best union of `k` intervals found by the scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanResult {
    pub value: f64,
    pub mass_x: f64,
    pub mass_y: f64,
}

#[derive(Clone, Copy)]
struct State {
    val: f64,
    px: f64,
    py: f64,
}

/// Largest `P_x(A) − P_y(A)` (and the reverse) over unions of at most `k`
/// half-open intervals, for sorted samples.
pub fn interval_scan_sorted(xs: &[f64], ys: &[f64], k: usize) -> ScanResult {
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let forward = best_rises(xs, ys, nx, ny, k, 1.0);
    let backward = best_rises(xs, ys, nx, ny, k, -1.0);
    if forward.value >= backward.value {
        forward
    } else {
        backward
    }
}

/// Max total of `k` disjoint rises of `sign·(F_x − F_y)` along the merged
/// sample, carrying the masses of the chosen set.
fn best_rises(xs: &[f64], ys: &[f64], nx: f64, ny: f64, k: usize, sign: f64) -> ScanResult {
    let neg = State {
        val: f64::NEG_INFINITY,
        px: 0.0,
        py: 0.0,
    };
    let zero = State {
        val: 0.0,
        px: 0.0,
        py: 0.0,
    };
    let mut free = vec![zero; k + 1];
    let mut hold = vec![neg; k + 1];
    let (mut i, mut j) = (0usize, 0usize);
    let step = |fx: f64, fy: f64, free: &mut [State], hold: &mut [State]| {
        let g = sign * (fx - fy);
        for t in 1..=k {
            let sell = State {
                val: hold[t].val + g,
                px: hold[t].px + fx,
                py: hold[t].py + fy,
            };
            if sell.val > free[t].val {
                free[t] = sell;
            }
            let buy = State {
                val: free[t - 1].val - g,
                px: free[t - 1].px - fx,
                py: free[t - 1].py - fy,
            };
            if buy.val > hold[t].val {
                hold[t] = buy;
            }
        }
    };
    step(0.0, 0.0, &mut free, &mut hold);
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(a), Some(b)) => a.min(*b),
            (Some(a), None) => *a,
            (None, Some(b)) => *b,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        step(i as f64 / nx, j as f64 / ny, &mut free, &mut hold);
    }
    let best = free[k];
    ScanResult {
        value: best.val.max(0.0),
        mass_x: best.px,
        mass_y: best.py,
    }
}

fn scan_estimate(xs: &[f64], ys: &[f64], k: usize) -> DistanceEstimate {
    let r = interval_scan_sorted(xs, ys, k);
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let stderr = (r.mass_x * (1.0 - r.mass_x) / nx + r.mass_y * (1.0 - r.mass_y) / ny)
        .max(0.0)
        .sqrt();
    DistanceEstimate {
        value: r.value,
        stderr,
        ci_low: (r.value - 1.96 * stderr).max(0.0),
        ci_high: (r.value + 1.96 * stderr).min(1.0).max(r.value),
        method: "interval-scan".into(),
        detail: format!("intervals={k}; selection bias is upward, compare against the noise floor"),
        samples_x: xs.len(),
        samples_y: ys.len(),
        warning: None,
    }
}

/// TV estimate between two independent standard-gaussian samples of the
/// given size: the additive tolerance for inequality checks.
pub fn noise_floor(count: usize, opts: &TvOptions) -> Result<DistanceEstimate> {
    let law = crate::randvec::ScalarLaw::standard_gaussian();
    let draw = |c: u64| -> Vec<f64> {
        let blocks = count.div_ceil(crate::rng::DRAW_BLOCK);
        let parts: Vec<Vec<f64>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream(opts.seed, Purpose::Smoothing, b as u64, c, 7);
                let len = (count - b * crate::rng::DRAW_BLOCK).min(crate::rng::DRAW_BLOCK);
                (0..len).map(|_| law.sample(&mut rng)).collect()
            })
            .collect();
        parts.concat()
    };
    tv_distance(&draw(1), &draw(2), opts)
}
