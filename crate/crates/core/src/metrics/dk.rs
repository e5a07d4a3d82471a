use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::DistanceEstimate;
use crate::numeric::{geomspace, normal_cdf, normal_pdf, quantile_sorted, sorted_copy};
use crate::{Error, Result};

/// Bins used to rank dictionary members before exact evaluation.
const RANKING_BINS: usize = 4096;
/// Members per certified order re-evaluated exactly on the raw samples.
const EXACT_CANDIDATES: usize = 3;

/// Test functions with sup-norm of the function and of its first
/// `order` derivatives at most one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `clamp(t − center, −1, 1)`; 1-Lipschitz, not differentiable twice.
    Ramp { center: f64 },
    /// `scale·(2Φ((t − center)/width) − 1)`.
    SmoothStep { center: f64, width: f64, scale: f64 },
    /// `scale·sin(freq·t + phase)`; the phase is optimized analytically.
    Sinusoid { freq: f64, scale: f64 },
}

impl TestFunction {
    pub fn eval(&self, t: f64, phase: f64) -> f64 {
        match *self {
            TestFunction::Ramp { center } => (t - center).clamp(-1.0, 1.0),
            TestFunction::SmoothStep { center, width, scale } => scale * (2.0 * normal_cdf((t - center) / width) - 1.0),
            TestFunction::Sinusoid { freq, scale } => scale * (freq * t + phase).sin(),
        }
    }

    /// `m`-th derivative where it exists (`m ≤ 1` for ramps).
    pub fn derivative(&self, m: u32, t: f64, phase: f64) -> f64 {
        if m == 0 {
            return self.eval(t, phase);
        }
        match *self {
            TestFunction::Ramp { center } => {
                if m == 1 && (t - center).abs() < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::SmoothStep { center, width, scale } => {
                let u = (t - center) / width;
                let sign = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
                sign * 2.0 * scale * hermite(m - 1, u) * normal_pdf(u) / width.powi(m as i32)
            }
            TestFunction::Sinusoid { freq, scale } => {
                scale * freq.powi(m as i32) * (freq * t + phase + m as f64 * std::f64::consts::FRAC_PI_2).sin()
            }
        }
    }
}

/// Probabilists' Hermite polynomial `He_n(u)`.
pub fn hermite(n: u32, u: f64) -> f64 {
    let (mut a, mut b) = (1.0, u);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = u * b - k as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// `max_u |He_r(u)·φ(u)|` by a dense scan.
fn hermite_peak(r: u32) -> f64 {
    (0..=200_000)
        .map(|i| {
            let u = -10.0 + i as f64 * 1e-4;
            (hermite(r, u) * normal_pdf(u)).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DictionaryMember {
    pub function: TestFunction,
    /// Derivatives `1..=order` are certified bounded by one.
    pub order: u32,
}

/// Dictionary of certified test functions; `members(k)` is the subset of
/// certified order at least `k`, so larger `k` gives a subset.
#[derive(Debug, Clone, Serialize)]
pub struct TestFunctionDictionary {
    pub max_order: u32,
    members: Vec<DictionaryMember>,
}

/// Location and scale grid the dictionary is laid out on.
#[derive(Debug, Clone)]
pub struct DictionaryGrid {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub freqs: Vec<f64>,
}

impl DictionaryGrid {
    /// Grid adapted to the pooled sample: 33 quantile centers, widths and
    /// frequencies relative to the pooled spread.
    pub fn for_samples(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::Empty("dictionary samples"));
        }
        let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
        let sorted = sorted_copy(&pooled);
        let centers: Vec<f64> = (1..=33).map(|i| quantile_sorted(&sorted, i as f64 / 34.0)).collect();
        let spread = (quantile_sorted(&sorted, 0.9) - quantile_sorted(&sorted, 0.1)).max(1e-3);
        let widths = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0].iter().map(|w| w * spread).collect();
        let freqs = geomspace(0.2 / spread, 200.0 / spread, 48);
        Ok(Self { centers, widths, freqs })
    }
}

impl TestFunctionDictionary {
    pub fn new(max_order: u32, grid: &DictionaryGrid) -> Result<Self> {
        if max_order == 0 || max_order > 10 {
            return Err(Error::range("dictionary order", format!("{max_order} not in 1..=10")));
        }
        let peaks: Vec<f64> = (0..max_order).map(|r| hermite_peak(r) * (1.0 + 1e-3)).collect();
        let mut members = Vec::new();
        for &center in &grid.centers {
            members.push(DictionaryMember {
                function: TestFunction::Ramp { center },
                order: 1,
            });
        }
        for order in 1..=max_order {
            for &width in &grid.widths {
                // |φ^(m)| = 2·scale·|He_{m−1}φ|/width^m ≤ 1 for m = 1..order
                let scale = (1..=order)
                    .map(|m| width.powi(m as i32) / (2.0 * peaks[(m - 1) as usize]))
                    .fold(1.0, f64::min);
                for &center in &grid.centers {
                    members.push(DictionaryMember {
                        function: TestFunction::SmoothStep { center, width, scale },
                        order,
                    });
                }
            }
            for &freq in &grid.freqs {
                let scale = (1..=order).map(|m| freq.powi(-(m as i32))).fold(1.0, f64::min);
                members.push(DictionaryMember {
                    function: TestFunction::Sinusoid { freq, scale },
                    order,
                });
            }
        }
        let dict = Self { max_order, members };
        dict.verify()?;
        Ok(dict)
    }

    pub fn for_samples(x: &[f64], y: &[f64], max_order: u32) -> Result<Self> {
        Self::new(max_order, &DictionaryGrid::for_samples(x, y)?)
    }

    /// Dense-grid scan of every certified derivative bound.
    pub fn verify(&self) -> Result<()> {
        for m in &self.members {
            let (center, reach) = match m.function {
                TestFunction::Ramp { center } => (center, 3.0),
                TestFunction::SmoothStep { center, width, .. } => (center, 12.0 * width),
                TestFunction::Sinusoid { freq, .. } => (0.0, 2.0 * std::f64::consts::PI / freq),
            };
            for order in 0..=m.order {
                for i in 0..=2000 {
                    let t = center - reach + 2.0 * reach * i as f64 / 2000.0;
                    let v = m.function.derivative(order, t, 0.3).abs();
                    if v > 1.0 + 1e-12 {
                        return Err(Error::range(
                            "dictionary member",
                            format!("{:?}: |φ^({order})| = {v} at t = {t}", m.function),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn members(&self, k: u32) -> impl Iterator<Item = &DictionaryMember> {
        self.members.iter().filter(move |m| m.order >= k)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Histogram of a sample on a shared range, with bin centers.
struct Ranking {
    lo: f64,
    width: f64,
    px: Vec<f64>,
    py: Vec<f64>,
}

impl Ranking {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let (lo, hi) = x
            .iter()
            .chain(y)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let width = span / RANKING_BINS as f64;
        let hist = |s: &[f64]| {
            let mut h = vec![0.0; RANKING_BINS];
            for v in s {
                h[(((v - lo) / width) as usize).min(RANKING_BINS - 1)] += 1.0;
            }
            let n = s.len() as f64;
            h.iter_mut().for_each(|c| *c /= n);
            h
        };
        Self {
            lo,
            width,
            px: hist(x),
            py: hist(y),
        }
    }

    fn approx(&self, f: &TestFunction) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for b in 0..RANKING_BINS {
            let d = self.px[b] - self.py[b];
            if d == 0.0 {
                continue;
            }
            let t = self.lo + (b as f64 + 0.5) * self.width;
            match *f {
                TestFunction::Sinusoid { freq, .. } => acc += d * Complex64::from_polar(1.0, freq * t),
                _ => acc.re += d * f.eval(t, 0.0),
            }
        }
        match *f {
            TestFunction::Sinusoid { scale, .. } => scale * acc.norm(),
            _ => acc.re.abs(),
        }
    }
}

/// Exact `|mean φ(x) − mean φ(y)|` with its CLT standard error; for
/// sinusoids the phase is set to the maximizing value.
fn exact_gap(f: &TestFunction, x: &[f64], y: &[f64]) -> (f64, f64) {
    let phase = match *f {
        TestFunction::Sinusoid { freq, .. } => {
            let cf = |s: &[f64]| {
                s.iter()
                    .map(|v| Complex64::from_polar(1.0, freq * v))
                    .sum::<Complex64>()
                    / s.len() as f64
            };
            // sin(ωt + φ) averages to Im(e^{iφ}·ψ(ω)); maximize Im(e^{iφ}(ψx − ψy))
            let diff = cf(x) - cf(y);
            std::f64::consts::FRAC_PI_2 - diff.arg()
        }
        _ => 0.0,
    };
    let moments = |s: &[f64]| {
        let n = s.len() as f64;
        let m = s.iter().map(|v| f.eval(*v, phase)).sum::<f64>() / n;
        let var = s.iter().map(|v| (f.eval(*v, phase) - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (m, var / n)
    };
    let (mx, vx) = moments(x);
    let (my, vy) = moments(y);
    ((mx - my).abs(), (vx + vy).sqrt())
}

/// Lower bounds on `d_k(x, y)` for `k = 1..=dict.max_order`. Entry `k − 1`
/// is the best exact gap over members of certified order `≥ k`, so the
/// profile is nonincreasing in `k`.
pub fn dk_lower_profile(x: &[f64], y: &[f64], dict: &TestFunctionDictionary) -> Result<Vec<DistanceEstimate>> {
    if dict.is_empty() {
        return Err(Error::Empty("test-function dictionary"));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::Empty("dk_lower samples"));
    }
    let ranking = Ranking::new(x, y);
    let scores: Vec<f64> = dict.members.par_iter().map(|m| ranking.approx(&m.function)).collect();
    // exact evaluation of the top candidates at each certified order
    let mut per_order: Vec<(f64, f64, usize)> = Vec::new();
    for order in 1..=dict.max_order {
        let mut idx: Vec<usize> = (0..dict.members.len())
            .filter(|&i| dict.members[i].order == order)
            .collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let best = idx
            .iter()
            .take(EXACT_CANDIDATES)
            .map(|&i| {
                let (v, se) = exact_gap(&dict.members[i].function, x, y);
                (v, se, i)
            })
            .fold((0.0, 0.0, usize::MAX), |acc, c| if c.0 > acc.0 { c } else { acc });
        per_order.push(best);
    }
    let mut out = vec![];
    let mut running = (0.0, 0.0, usize::MAX);
    for order in (1..=dict.max_order).rev() {
        let cand = per_order[(order - 1) as usize];
        if cand.0 > running.0 {
            running = cand;
        }
        let (value, stderr, i) = running;
        let detail = if i == usize::MAX {
            format!("order={order} no positive gap")
        } else {
            format!("order={order} argmax={:?}", dict.members[i].function)
        };
        out.push(DistanceEstimate {
            value,
            stderr,
            ci_low: (value - 1.96 * stderr).max(0.0).min(value),
            ci_high: value + 1.96 * stderr,
            method: "dk-dictionary-lower".into(),
            detail,
            samples_x: x.len(),
            samples_y: y.len(),
            warning: None,
        });
    }
    out.reverse();
    Ok(out)
}

/// Lower bound on `d_k(x, y)` from the dictionary.
pub fn dk_lower(x: &[f64], y: &[f64], k: u32, dict: &TestFunctionDictionary) -> Result<DistanceEstimate> {
    if k == 0 || k > dict.max_order {
        return Err(Error::range(
            "dk order",
            format!("{k} outside dictionary orders 1..={}", dict.max_order),
        ));
    }
    Ok(dk_lower_profile(x, y, dict)?.swap_remove((k - 1) as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 2.0), 1.0);
        assert_eq!(hermite(2, 2.0), 3.0);
        assert_eq!(hermite(3, 2.0), 2.0);
        // peak of |u φ(u)| sits at u = 1
        assert!((hermite_peak(1) - normal_pdf(1.0)).abs() < 1e-9);
    }

    #[test]
    fn smooth_step_derivative_matches_finite_difference() {
        let f = TestFunction::SmoothStep {
            center: 0.2,
            width: 0.7,
            scale: 0.3,
        };
        let h = 1e-5;
        for m in 1..=3 {
            for t in [-0.5, 0.1, 0.9] {
                let fd = (f.derivative(m - 1, t + h, 0.0) - f.derivative(m - 1, t - h, 0.0)) / (2.0 * h);
                assert!((fd - f.derivative(m, t, 0.0)).abs() < 1e-6, "m={m} t={t}");
            }
        }
    }

    #[test]
    fn atoms_at_zero_and_half() {
        let x = vec![0.0; 2000];
        let y = vec![0.5; 2000];
        let dict = TestFunctionDictionary::for_samples(&x, &y, 2).unwrap();
        let d1 = dk_lower(&x, &y, 1, &dict).unwrap();
        assert!((d1.value - 0.5).abs() < 1e-12, "{d1:?}");
    }

    #[test]
    fn identical_samples_give_zero() {
        let x: Vec<f64> = (0..4000).map(|i| (i as f64).sin()).collect();
        let dict = TestFunctionDictionary::for_samples(&x, &x, 3).unwrap();
        for e in dk_lower_profile(&x, &x, &dict).unwrap() {
            assert_eq!(e.value, 0.0);
        }
    }

    #[test]
    fn profile_nests() {
        let x: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.3).cos() * 1.3 + 0.2).collect();
        let dict = TestFunctionDictionary::for_samples(&x, &y, 4).unwrap();
        let p = dk_lower_profile(&x, &y, &dict).unwrap();
        assert!(p.windows(2).all(|w| w[1].value <= w[0].value));
        assert!(p[0].value > 0.0);
    }
}
