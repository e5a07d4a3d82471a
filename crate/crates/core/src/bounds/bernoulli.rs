use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::numeric::{wilson_interval, Combinations, CompensatedSum};
use crate::rng::{stream, Purpose, DRAW_BLOCK};
use crate::{Error, Result};

/// Largest `n` handled by exhaustive enumeration.
pub const MAX_EXACT_N: u32 = 24;
/// Bits enumerated by Gray code inside one chunk; `Φ` is recomputed from
/// scratch at every chunk start so rounding drift stays bounded.
const GRAY_BITS: u32 = 16;

/// `Φ(ε) = Σ c(j_1, …, j_d)²·ε_{j_1}···ε_{j_d}` over `d`-subsets of `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernoulliForm {
    n: u32,
    degree: u32,
    /// Zero-based strictly increasing index sets and their coefficients.
    entries: Vec<(Vec<u32>, f64)>,
}

impl BernoulliForm {
    pub fn new(n: u32, degree: u32, entries: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if degree == 0 || degree > n {
            return Err(Error::range("bernoulli form", format!("degree {degree} with n = {n}")));
        }
        for (idx, c) in &entries {
            let ok = idx.len() == degree as usize
                && idx.windows(2).all(|w| w[0] < w[1])
                && idx.iter().all(|&j| j < n)
                && c.is_finite();
            if !ok {
                return Err(Error::range("bernoulli form entry", format!("{idx:?} -> {c}")));
            }
        }
        Ok(Self { n, degree, entries })
    }

    /// Every `d`-subset with the same coefficient.
    pub fn complete(n: u32, degree: u32, value: f64) -> Result<Self> {
        let entries = Combinations::new(n, degree)
            .map(|s| (s.iter().map(|j| j - 1).collect(), value))
            .collect();
        Self::new(n, degree, entries)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn entries(&self) -> &[(Vec<u32>, f64)] {
        &self.entries
    }

    /// `[c]² = Σ c²`.
    pub fn norm_sq(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, c)| c * c)
            .collect::<CompensatedSum>()
            .value()
    }

    /// `δ(c) = max_j Σ_{sets ∋ j} c²`.
    pub fn influence(&self) -> f64 {
        let mut per = vec![0.0; self.n as usize];
        for (idx, c) in &self.entries {
            for &j in idx {
                per[j as usize] += c * c;
            }
        }
        per.into_iter().fold(0.0, f64::max)
    }

    pub fn phi(&self, eps: &[bool]) -> f64 {
        self.entries
            .iter()
            .filter(|(idx, _)| idx.iter().all(|&j| eps[j as usize]))
            .map(|(_, c)| c * c)
            .sum()
    }

    fn phi_mask(&self, state: u32) -> f64 {
        self.entries
            .iter()
            .filter(|(idx, _)| idx.iter().all(|&j| state >> j & 1 == 1))
            .map(|(_, c)| c * c)
            .sum()
    }
}

/// `6d·exp(−θ²/(δ(c)·[c]²))` for `θ ∈ (0, (p/2)^d·[c]²)`.
pub fn bound_bernoulli_tail(c: &BernoulliForm, p: f64, theta: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::range("p", format!("{p} not in (0, 1]")));
    }
    let norm_sq = c.norm_sq();
    if norm_sq <= 0.0 {
        return Err(Error::range("bernoulli form", "[c] must be positive"));
    }
    let upper = (p / 2.0).powi(c.degree as i32) * norm_sq;
    if !(theta > 0.0 && theta < upper) {
        return Err(Error::range(
            "theta",
            format!("{theta} outside the admissible interval (0, {upper})"),
        ));
    }
    Ok(6.0 * c.degree as f64 * (-theta * theta / (c.influence() * norm_sq)).exp())
}

/// `P(Φ(ε) ≤ θ)` for independent `ε_j ~ Bernoulli(p)`, by enumerating all
/// `2^n` states in Gray-code order and counting hits per number of ones.
pub fn exact_bernoulli_tail(c: &BernoulliForm, p: f64, theta: f64) -> Result<f64> {
    if c.n > MAX_EXACT_N {
        return Err(Error::range(
            "exact enumeration",
            format!("n = {} > {MAX_EXACT_N}; use mc_bernoulli_tail", c.n),
        ));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::range("p", format!("{p} not in [0, 1]")));
    }
    let norm_sq = c.norm_sq();
    if theta >= norm_sq {
        return Ok(1.0);
    }
    let tol = 1e-12 * norm_sq.max(1.0);
    let n = c.n;
    // for each index, the sets containing it as (mask of the others, c²)
    let mut partners: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n as usize];
    for (idx, coef) in &c.entries {
        let full: u32 = idx.iter().fold(0, |m, &j| m | 1 << j);
        for &j in idx {
            partners[j as usize].push((full & !(1 << j), coef * coef));
        }
    }
    let low = n.min(GRAY_BITS);
    let top = n - low;
    let counts: Vec<Vec<u64>> = (0..1u32 << top)
        .into_par_iter()
        .map(|h| {
            let mut hits = vec![0u64; n as usize + 1];
            let mut state = h << low;
            let mut phi = c.phi_mask(state);
            let mut ones = state.count_ones();
            if phi <= theta + tol {
                hits[ones as usize] += 1;
            }
            for i in 1..1u32 << low {
                let j = i.trailing_zeros();
                let delta: f64 = partners[j as usize]
                    .iter()
                    .filter(|(m, _)| state & m == *m)
                    .map(|(_, w)| w)
                    .sum();
                if state >> j & 1 == 1 {
                    phi -= delta;
                    ones -= 1;
                } else {
                    phi += delta;
                    ones += 1;
                }
                state ^= 1 << j;
                if phi <= theta + tol {
                    hits[ones as usize] += 1;
                }
            }
            hits
        })
        .collect();
    let mut total = vec![0u64; n as usize + 1];
    for h in counts {
        total.iter_mut().zip(h).for_each(|(t, v)| *t += v);
    }
    let prob: CompensatedSum = total
        .iter()
        .enumerate()
        .map(|(k, &cnt)| cnt as f64 * p.powi(k as i32) * (1.0 - p).powi((n as usize - k) as i32))
        .collect();
    Ok(prob.value().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McTail {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub draws: u64,
}

/// Monte-Carlo frequency of `Φ(ε) ≤ θ` with a 95% Wilson interval.
pub fn mc_bernoulli_tail(c: &BernoulliForm, p: f64, theta: f64, draws: usize, seed: u64) -> Result<McTail> {
    if draws < 10_000 {
        return Err(Error::range("draws", format!("{draws} < 10000")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::range("p", format!("{p} not in [0, 1]")));
    }
    let norm_sq = c.norm_sq();
    if theta >= norm_sq {
        return Ok(McTail {
            estimate: 1.0,
            ci_low: 1.0,
            ci_high: 1.0,
            hits: draws as u64,
            draws: draws as u64,
        });
    }
    let tol = 1e-12 * norm_sq.max(1.0);
    let hits: u64 = (0..draws.div_ceil(DRAW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Purpose::Bernoulli, b as u64, 0, 0);
            let len = (draws - b * DRAW_BLOCK).min(DRAW_BLOCK);
            let mut eps = vec![false; c.n as usize];
            let mut hits = 0u64;
            for _ in 0..len {
                eps.iter_mut().for_each(|e| *e = rng.random::<f64>() < p);
                if c.phi(&eps) <= theta + tol {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let (lo, hi) = wilson_interval(hits, draws as u64, 1.959_963_984_540_054);
    Ok(McTail {
        estimate: hits as f64 / draws as f64,
        ci_low: lo,
        ci_high: hi,
        hits,
        draws: draws as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_pairs() -> BernoulliForm {
        BernoulliForm::complete(4, 2, 1.0).unwrap()
    }

    #[test]
    fn complete_form_stats() {
        let c = four_pairs();
        assert_eq!(c.norm_sq(), 6.0);
        assert_eq!(c.influence(), 3.0);
    }

    #[test]
    fn bound_example() {
        let b = bound_bernoulli_tail(&four_pairs(), 0.5, 0.3).unwrap();
        assert!((b - 12.0 * (-0.09f64 / 18.0).exp()).abs() < 1e-12);
        assert!((b - 11.94).abs() < 0.01);
        assert!(bound_bernoulli_tail(&four_pairs(), 0.5, 0.4).is_err());
        assert!(bound_bernoulli_tail(&four_pairs(), 0.5, 0.0).is_err());
    }

    #[test]
    fn exact_example() {
        // states with at most one 1: (1 + 4)/16
        let e = exact_bernoulli_tail(&four_pairs(), 0.5, 0.3).unwrap();
        assert!((e - 5.0 / 16.0).abs() < 1e-15);
        assert_eq!(exact_bernoulli_tail(&four_pairs(), 1.0, 5.9).unwrap(), 0.0);
        assert_eq!(exact_bernoulli_tail(&four_pairs(), 0.3, 6.0).unwrap(), 1.0);
    }

    #[test]
    fn gray_code_matches_direct_enumeration() {
        let entries = vec![
            (vec![0, 3, 5], 0.7),
            (vec![1, 2, 17], -1.3),
            (vec![4, 5, 16], 0.2),
            (vec![0, 1, 2], 2.0),
        ];
        let c = BernoulliForm::new(18, 3, entries).unwrap();
        for theta in [0.01, 0.1, 1.0, 4.1, 5.0] {
            let p: f64 = 0.37;
            let mut direct = 0.0;
            for s in 0u32..1 << 18 {
                if c.phi_mask(s) <= theta {
                    let k = s.count_ones() as i32;
                    direct += p.powi(k) * (1.0 - p).powi(18 - k);
                }
            }
            let e = exact_bernoulli_tail(&c, p, theta).unwrap();
            assert!((e - direct).abs() < 1e-12, "θ={theta}: {e} vs {direct}");
        }
    }

    #[test]
    fn mc_agrees_with_exact() {
        let m = mc_bernoulli_tail(&four_pairs(), 0.5, 0.3, 100_000, 1).unwrap();
        assert!(m.ci_low <= 0.3125 && 0.3125 <= m.ci_high, "{m:?}");
        assert_eq!(m, mc_bernoulli_tail(&four_pairs(), 0.5, 0.3, 100_000, 1).unwrap());
        assert_eq!(
            mc_bernoulli_tail(&four_pairs(), 0.5, 6.0, 10_000, 1).unwrap().estimate,
            1.0
        );
        assert!(mc_bernoulli_tail(&four_pairs(), 0.5, 0.3, 10, 1).is_err());
    }

    #[test]
    fn too_large_for_enumeration() {
        let c = BernoulliForm::new(30, 1, vec![(vec![0], 1.0)]).unwrap();
        assert!(exact_bernoulli_tail(&c, 0.5, 0.5).is_err());
    }
}
