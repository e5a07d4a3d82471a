//! Finitely supported coefficient collections `a = (a_0, …, a_d)`.
//!
//! A degree-`m` coefficient is keyed by a monomial: an ordered tuple of `m`
//! [`IndexTriple`]s `(n, k, j)` with strictly increasing vector index `n`.
//! The triple selects the centered power `X_{n,j}^k − E X_{n,j}^k`.
//!
//! Norms and influence factors:
//!
//! ```text
//! [a_m]      = ( Σ_{monomials of degree m} a_m² )^{1/2},   [a_0] = |a_0|
//! [a_{l,u}]  = ( Σ_{m=l}^{u} [a_m]² )^{1/2}
//! δ(a_m)     = max_n Σ_{degree-m monomials containing n} a_m²
//! δ(a)       = max_n Σ_{m=1}^{d} Σ_{monomials containing n} a_m²
//! ```
//!
//! Sums are accumulated with compensated summation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::numeric::{binomial_u64, Combinations, CompensatedSum};
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

/// `(n, k, j)`: vector index, power, coordinate. All 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexTriple {
    pub n: u32,
    pub k: u32,
    pub j: u32,
}

impl IndexTriple {
    pub const fn new(n: u32, k: u32, j: u32) -> Self {
        Self { n, k, j }
    }

    /// Shorthand for the multilinear case `k = j = 1`.
    pub const fn linear(n: u32) -> Self {
        Self { n, k: 1, j: 1 }
    }
}

impl fmt::Display for IndexTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n, self.k, self.j)
    }
}

pub type Monomial = Vec<IndexTriple>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCollection {
    degree: u32,
    k_star: u32,
    dim: u32,
    n_max: u32,
    constant: f64,
    /// `layers[m - 1]` holds the degree-`m` entries.
    layers: Vec<BTreeMap<Monomial, f64>>,
}

impl CoefficientCollection {
    /// Empty collection of maximal degree `degree` over `n ≤ n_max`,
    /// powers `k ≤ k_star` and coordinates `j ≤ dim`.
    pub fn new(degree: u32, k_star: u32, dim: u32, n_max: u32) -> Result<Self> {
        if k_star == 0 || dim == 0 {
            return Err(Error::range("collection shape", "k_star and N must be ≥ 1"));
        }
        Ok(Self {
            degree,
            k_star,
            dim,
            n_max,
            constant: 0.0,
            layers: vec![BTreeMap::new(); degree as usize],
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn k_star(&self) -> u32 {
        self.k_star
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn set_constant(&mut self, a0: f64) {
        self.constant = a0;
    }

    /// Insert a coefficient. Rejects unsorted, duplicate or out-of-bounds
    /// monomials instead of canonicalizing them.
    pub fn insert(&mut self, monomial: Monomial, value: f64) -> Result<()> {
        let m = monomial.len() as u32;
        if m == 0 {
            self.constant = value;
            return Ok(());
        }
        if m > self.degree {
            return Err(Error::range(
                "monomial degree",
                format!("{m} exceeds collection degree {}", self.degree),
            ));
        }
        if !value.is_finite() {
            return Err(Error::range("coefficient", format!("{value} is not finite")));
        }
        if monomial.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(Error::UnsortedMonomial(monomial.iter().map(|t| t.n).collect()));
        }
        for &t in &monomial {
            if t.n == 0 || t.n > self.n_max {
                return Err(Error::range(
                    "vector index",
                    format!("n = {} not in [1, {}]", t.n, self.n_max),
                ));
            }
            if t.k == 0 || t.k > self.k_star || t.j == 0 || t.j > self.dim {
                return Err(Error::IndexBounds {
                    triple: t,
                    k_star: self.k_star,
                    dim: self.dim,
                });
            }
        }
        let layer = &mut self.layers[m as usize - 1];
        if layer.contains_key(&monomial) {
            return Err(Error::DuplicateMonomial(monomial));
        }
        layer.insert(monomial, value);
        Ok(())
    }

    pub fn get(&self, monomial: &[IndexTriple]) -> Option<f64> {
        match monomial.len() {
            0 => Some(self.constant),
            m if m as u32 <= self.degree => self.layers[m - 1].get(monomial).copied(),
            _ => None,
        }
    }

    /// Entries of degree `m ≥ 1`, in canonical (lexicographic) order.
    pub fn layer(&self, m: u32) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        let slot = if m >= 1 && m <= self.degree {
            Some(&self.layers[m as usize - 1])
        } else {
            None
        };
        slot.into_iter().flat_map(|l| l.iter().map(|(k, v)| (k, *v)))
    }

    /// All entries of degree ≥ 1.
    pub fn entries(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.layers.iter().flat_map(|l| l.iter().map(|(k, v)| (k, *v)))
    }

    pub fn entry_count(&self) -> usize {
        self.layers.iter().map(BTreeMap::len).sum()
    }

    pub fn layer_len(&self, m: u32) -> usize {
        if m >= 1 && m <= self.degree {
            self.layers[m as usize - 1].len()
        } else {
            0
        }
    }

    /// Largest vector index that actually carries a coefficient.
    pub fn max_index_used(&self) -> u32 {
        self.entries()
            .filter_map(|(mono, _)| mono.last().map(|t| t.n))
            .max()
            .unwrap_or(0)
    }

    fn check_degree(&self, m: u32) -> Result<()> {
        if m > self.degree {
            return Err(Error::range("degree", format!("m = {m} exceeds d = {}", self.degree)));
        }
        Ok(())
    }

    /// `[a_m]`.
    pub fn norm(&self, m: u32) -> Result<f64> {
        self.check_degree(m)?;
        if m == 0 {
            return Ok(self.constant.abs());
        }
        Ok(self.squared_norm(m).sqrt())
    }

    fn squared_norm(&self, m: u32) -> f64 {
        if m == 0 {
            return self.constant * self.constant;
        }
        self.layer(m).map(|(_, v)| v * v).collect::<CompensatedSum>().value()
    }

    /// `[a_{l,u}]`.
    pub fn norm_range(&self, l: u32, u: u32) -> Result<f64> {
        if l > u {
            return Err(Error::range("degree range", format!("l = {l} > u = {u}")));
        }
        self.check_degree(u)?;
        Ok((l..=u)
            .map(|m| self.squared_norm(m))
            .collect::<CompensatedSum>()
            .value()
            .sqrt())
    }

    /// `[a] = [a_{0,d}]`.
    pub fn total_norm(&self) -> f64 {
        self.norm_range(0, self.degree).expect("full range is valid")
    }

    fn influence_profile(&self, degrees: impl Iterator<Item = u32>) -> f64 {
        let mut per_n = vec![CompensatedSum::new(); self.n_max as usize + 1];
        for m in degrees {
            for (mono, v) in self.layer(m) {
                let sq = v * v;
                for t in mono {
                    per_n[t.n as usize].add(sq);
                }
            }
        }
        per_n.iter().map(CompensatedSum::value).fold(0.0, f64::max)
    }

    /// `δ(a_m)`. Undefined for `m = 0`.
    pub fn influence(&self, m: u32) -> Result<f64> {
        if m == 0 {
            return Err(Error::range("degree", "influence needs m ≥ 1"));
        }
        self.check_degree(m)?;
        Ok(self.influence_profile(std::iter::once(m)))
    }

    /// `δ(a)`; zero when only `a_0` is present.
    pub fn influence_total(&self) -> f64 {
        self.influence_profile(1..=self.degree)
    }

    pub fn stats(&self) -> CoefficientStats {
        let norms = (0..=self.degree).map(|m| self.norm(m).expect("m ≤ d")).collect();
        let mut influences = vec![0.0];
        influences.extend((1..=self.degree).map(|m| self.influence(m).expect("1 ≤ m ≤ d")));
        CoefficientStats {
            degree: self.degree,
            k_star: self.k_star,
            norms,
            influences,
            influence_total: self.influence_total(),
        }
    }

    /// Collection with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.constant *= factor;
        for layer in &mut out.layers {
            for v in layer.values_mut() {
                *v *= factor;
            }
        }
        out
    }

    /// Collection where layers of degree `> l` are multiplied by `factor`.
    pub fn scale_layers_above(&self, l: u32, factor: f64) -> Self {
        let mut out = self.clone();
        for (idx, layer) in out.layers.iter_mut().enumerate() {
            if idx as u32 + 1 > l {
                for v in layer.values_mut() {
                    *v *= factor;
                }
            }
        }
        out
    }

    /// `self + factor · other`. Shapes must agree.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        if (self.degree, self.k_star, self.dim) != (other.degree, other.k_star, other.dim) {
            return Err(Error::range("collection shape", "degree, k* and N must agree"));
        }
        let mut out = self.clone();
        out.n_max = self.n_max.max(other.n_max);
        out.constant += factor * other.constant;
        for (dst, src) in out.layers.iter_mut().zip(&other.layers) {
            for (mono, v) in src {
                *dst.entry(mono.clone()).or_insert(0.0) += factor * v;
            }
        }
        Ok(out)
    }

    /// The polynomial truncated to degrees `≤ l` (same declared degree).
    pub fn truncated(&self, l: u32) -> Self {
        let mut out = self.clone();
        for (idx, layer) in out.layers.iter_mut().enumerate() {
            if idx as u32 + 1 > l {
                layer.clear();
            }
        }
        out
    }

    /// All degree-`d` monomials with `k = j = 1` set to a common value so
    /// that `[a_d] = target_norm`. Then `δ(a_d) / [a_d]² = d / n_max`.
    pub fn uniform_spread(n_max: u32, degree: u32, k_star: u32, dim: u32, target_norm: f64) -> Result<Self> {
        if degree == 0 || n_max < degree {
            return Err(Error::range(
                "uniform spread",
                format!("need n_max ≥ d ≥ 1, got n_max = {n_max}, d = {degree}"),
            ));
        }
        let count = binomial_u64(n_max as u64, degree as u64)
            .filter(|&c| c <= 20_000_000)
            .ok_or_else(|| Error::range("uniform spread", "too many monomials"))?;
        let value = target_norm / (count as f64).sqrt();
        let mut out = Self::new(degree, k_star, dim, n_max)?;
        let layer = &mut out.layers[degree as usize - 1];
        for subset in Combinations::new(n_max, degree) {
            layer.insert(subset.into_iter().map(IndexTriple::linear).collect(), value);
        }
        Ok(out)
    }

    /// Random sparse collection: every admissible monomial of every degree
    /// `1..=d` is present independently with probability `density`, with a
    /// standard normal value. `a_0` is also standard normal.
    pub fn sparse_random(n_max: u32, degree: u32, k_star: u32, dim: u32, density: f64, seed: u64) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::range("density", format!("{density} not in (0, 1]")));
        }
        let mut out = Self::new(degree, k_star, dim, n_max)?;
        let mut rng = stream(seed, Purpose::Coefficients, 0, 0, 0);
        out.constant = rng.sample(StandardNormal);
        let choices = (k_star * dim) as u64;
        for m in 1..=degree {
            let mut rng = stream(seed, Purpose::Coefficients, m as u64, 0, 0);
            let subsets = binomial_u64(n_max as u64, m as u64);
            let total = subsets.and_then(|s| s.checked_mul(choices.checked_pow(m)?));
            let layer = &mut out.layers[m as usize - 1];
            match total {
                Some(0) => {}
                Some(t) if t <= 1 << 16 => {
                    for subset in Combinations::new(n_max, m) {
                        for kj in KjAssignments::new(m, k_star, dim) {
                            if rng.random::<f64>() < density {
                                let mono = subset
                                    .iter()
                                    .zip(&kj)
                                    .map(|(&n, &(k, j))| IndexTriple::new(n, k, j))
                                    .collect();
                                layer.insert(mono, rng.sample(StandardNormal));
                            }
                        }
                    }
                }
                _ => {
                    // Too many monomials to enumerate: draw the binomial count,
                    // then that many distinct monomials uniformly. Same law as
                    // independent inclusion.
                    let t = total.unwrap_or(u64::MAX);
                    let count = Binomial::new(t, density)
                        .map_err(|e| Error::range("density", e.to_string()))?
                        .sample(&mut rng);
                    if count > 5_000_000 {
                        return Err(Error::range(
                            "sparse collection",
                            format!("{count} entries requested at degree {m}"),
                        ));
                    }
                    let mut seen = HashSet::with_capacity(count as usize);
                    while (seen.len() as u64) < count {
                        let subset = floyd_subset(&mut rng, n_max, m);
                        let mono: Monomial = subset
                            .into_iter()
                            .map(|n| {
                                let k = rng.random_range(1..=k_star);
                                let j = rng.random_range(1..=dim);
                                IndexTriple::new(n, k, j)
                            })
                            .collect();
                        if seen.insert(mono.clone()) {
                            layer.insert(mono, rng.sample(StandardNormal));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Line-oriented text form: header `d k_star N n_max`, then one line per
    /// entry `m n1 k1 j1 … nm km jm value` (the constant as `0 value`).
    /// Values use Rust's shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {} {}\n", self.degree, self.k_star, self.dim, self.n_max);
        if self.constant != 0.0 {
            s.push_str(&format!("0 {:?}\n", self.constant));
        }
        for (mono, v) in self.entries() {
            s.push_str(&mono.len().to_string());
            for t in mono {
                s.push_str(&format!(" {} {} {}", t.n, t.k, t.j));
            }
            s.push_str(&format!(" {v:?}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let h: Vec<u32> = header
            .split_whitespace()
            .map(|t| t.parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline,
                msg: format!("header: {e}"),
            })?;
        if h.len() != 4 {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be `d k_star N n_max`".into(),
            });
        }
        let mut out = Self::new(h[0], h[1], h[2], h[3])?;
        for (line, body) in lines {
            let perr = |msg: String| Error::Parse { line, msg };
            let toks: Vec<&str> = body.split_whitespace().collect();
            let m: usize = toks[0].parse().map_err(|e| perr(format!("degree: {e}")))?;
            if toks.len() != 3 * m + 2 {
                return Err(perr(format!(
                    "degree {m} entry needs {} fields, found {}",
                    3 * m + 2,
                    toks.len()
                )));
            }
            let mut mono = Vec::with_capacity(m);
            for i in 0..m {
                let f =
                    |o: usize| -> Result<u32> { toks[1 + 3 * i + o].parse().map_err(|e| perr(format!("index: {e}"))) };
                mono.push(IndexTriple::new(f(0)?, f(1)?, f(2)?));
            }
            let value: f64 = toks[3 * m + 1].parse().map_err(|e| perr(format!("value: {e}")))?;
            out.insert(mono, value).map_err(|e| perr(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Odometer over `((k_1, j_1), …, (k_m, j_m))`.
struct KjAssignments {
    k_star: u32,
    dim: u32,
    current: Vec<(u32, u32)>,
    done: bool,
}

impl KjAssignments {
    fn new(m: u32, k_star: u32, dim: u32) -> Self {
        Self {
            k_star,
            dim,
            current: vec![(1, 1); m as usize],
            done: false,
        }
    }
}

impl Iterator for KjAssignments {
    type Item = Vec<(u32, u32)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut i = self.current.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            let (k, j) = &mut self.current[i];
            if *j < self.dim {
                *j += 1;
                break;
            }
            *j = 1;
            if *k < self.k_star {
                *k += 1;
                break;
            }
            *k = 1;
        }
        Some(out)
    }
}

/// Uniform random `m`-subset of `1..=n`, sorted (Floyd's algorithm).
fn floyd_subset<R: Rng>(rng: &mut R, n: u32, m: u32) -> Vec<u32> {
    let mut set = std::collections::BTreeSet::new();
    for j in n - m + 1..=n {
        let t = rng.random_range(1..=j);
        if !set.insert(t) {
            set.insert(j);
        }
    }
    set.into_iter().collect()
}

/// Norms and influence factors of a collection, precomputed for the bound
/// formulas. Fields are public so that bound formulas can be evaluated on
/// hypothetical statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStats {
    pub degree: u32,
    pub k_star: u32,
    /// `[a_m]` for `m = 0..=d`.
    pub norms: Vec<f64>,
    /// `δ(a_m)` for `m = 0..=d`; entry 0 is unused and zero.
    pub influences: Vec<f64>,
    pub influence_total: f64,
}

impl CoefficientStats {
    /// Statistics of a polynomial whose only nonzero layer is the top one.
    pub fn top_only(degree: u32, k_star: u32, top_norm: f64, top_influence: f64) -> Self {
        let mut norms = vec![0.0; degree as usize + 1];
        let mut influences = vec![0.0; degree as usize + 1];
        norms[degree as usize] = top_norm;
        influences[degree as usize] = top_influence;
        Self {
            degree,
            k_star,
            norms,
            influences,
            influence_total: top_influence,
        }
    }

    pub fn norm(&self, m: u32) -> f64 {
        self.norms.get(m as usize).copied().unwrap_or(0.0)
    }

    pub fn influence(&self, m: u32) -> f64 {
        self.influences.get(m as usize).copied().unwrap_or(0.0)
    }

    pub fn norm_range(&self, l: u32, u: u32) -> f64 {
        (l..=u.min(self.degree))
            .map(|m| self.norm(m).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn top_norm(&self) -> f64 {
        self.norm(self.degree)
    }

    pub fn top_influence(&self) -> f64 {
        self.influence(self.degree)
    }

    pub fn total_norm(&self) -> f64 {
        self.norm_range(0, self.degree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(n: u32) -> IndexTriple {
        IndexTriple::linear(n)
    }

    #[test]
    fn single_entry_norm_and_influence() {
        let mut a = CoefficientCollection::new(2, 1, 1, 2).unwrap();
        a.insert(vec![t(1), t(2)], 3.0).unwrap();
        assert_eq!(a.norm(2).unwrap(), 3.0);
        assert_eq!(a.influence(2).unwrap(), 9.0);
        assert_eq!(a.influence_total(), a.influence(2).unwrap());
    }

    #[test]
    fn degree_one_norms() {
        let mut a = CoefficientCollection::new(1, 1, 1, 3).unwrap();
        for (n, v) in [(1, 1.0), (2, 2.0), (3, 2.0)] {
            a.insert(vec![t(n)], v).unwrap();
        }
        assert_eq!(a.norm(1).unwrap(), 3.0);
        assert_eq!(a.influence(1).unwrap(), 4.0);
    }

    #[test]
    fn three_four_five() {
        let mut a = CoefficientCollection::new(2, 1, 1, 4).unwrap();
        a.insert(vec![t(1)], 3.0).unwrap();
        a.insert(vec![t(2), t(3)], 4.0).unwrap();
        assert_eq!(a.norm_range(1, 2).unwrap(), 5.0);
        let only2 = a.truncated(0).add_scaled(&a, 1.0).unwrap();
        assert_eq!(only2.norm_range(1, 2).unwrap(), 5.0);
    }

    #[test]
    fn only_top_layer_range_equals_top_norm() {
        let a = CoefficientCollection::uniform_spread(5, 2, 1, 1, 2.5).unwrap();
        assert!((a.norm_range(0, 2).unwrap() - a.norm(2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn influence_total_collects_all_degrees() {
        let mut a = CoefficientCollection::new(2, 1, 1, 2).unwrap();
        a.insert(vec![t(1)], 1.0).unwrap();
        a.insert(vec![t(1), t(2)], 1.0).unwrap();
        assert_eq!(a.influence_total(), 2.0);
        let zero = CoefficientCollection::new(2, 1, 1, 2).unwrap();
        assert_eq!(zero.influence_total(), 0.0);
    }

    #[test]
    fn uniform_spread_values() {
        let a = CoefficientCollection::uniform_spread(4, 2, 1, 1, 1.0).unwrap();
        assert_eq!(a.layer_len(2), 6);
        for (_, v) in a.layer(2) {
            assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        }
        assert!((a.influence(2).unwrap() - 0.5).abs() < 1e-15);

        let b = CoefficientCollection::uniform_spread(10, 1, 1, 1, 1.0).unwrap();
        assert!((b.influence(1).unwrap() - 0.1).abs() < 1e-15);

        let c = CoefficientCollection::uniform_spread(3, 3, 1, 1, 1.7).unwrap();
        assert_eq!(c.layer_len(3), 1);
        assert!((c.influence(3).unwrap() - 1.7 * 1.7).abs() < 1e-14);
    }

    #[test]
    fn uniform_spread_all_ones_pairs() {
        // six unit pairs over n = 4: [a_2] = √6, δ(a_2) = 3
        let a = CoefficientCollection::uniform_spread(4, 2, 1, 1, 6f64.sqrt()).unwrap();
        assert!((a.norm(2).unwrap() - 6f64.sqrt()).abs() < 1e-14);
        assert!((a.influence(2).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_spread_rejects_small_n() {
        assert!(CoefficientCollection::uniform_spread(1, 2, 1, 1, 1.0).is_err());
    }

    #[test]
    fn range_errors() {
        let a = CoefficientCollection::uniform_spread(4, 2, 1, 1, 1.0).unwrap();
        assert!(matches!(a.norm(3), Err(Error::Range { .. })));
        assert!(matches!(a.norm_range(2, 1), Err(Error::Range { .. })));
        assert!(matches!(a.influence(0), Err(Error::Range { .. })));
    }

    #[test]
    fn insertion_rules() {
        let mut a = CoefficientCollection::new(2, 2, 2, 5).unwrap();
        assert!(matches!(
            a.insert(vec![t(2), t(1)], 1.0),
            Err(Error::UnsortedMonomial(_))
        ));
        assert!(matches!(
            a.insert(vec![t(2), t(2)], 1.0),
            Err(Error::UnsortedMonomial(_))
        ));
        a.insert(vec![t(1), t(2)], 1.0).unwrap();
        assert!(matches!(
            a.insert(vec![t(1), t(2)], 1.0),
            Err(Error::DuplicateMonomial(_))
        ));
        assert!(matches!(
            a.insert(vec![IndexTriple::new(1, 3, 1)], 1.0),
            Err(Error::IndexBounds { .. })
        ));
        assert!(a.insert(vec![t(6)], 1.0).is_err());
        assert!(a.insert(vec![t(1), t(2), t(3)], 1.0).is_err());
    }

    #[test]
    fn sparse_random_full_density() {
        let a = CoefficientCollection::sparse_random(3, 1, 1, 1, 1.0, 5).unwrap();
        assert_eq!(a.layer_len(1), 3);
    }

    #[test]
    fn sparse_random_deterministic() {
        let a = CoefficientCollection::sparse_random(12, 3, 2, 2, 0.05, 9).unwrap();
        let b = CoefficientCollection::sparse_random(12, 3, 2, 2, 0.05, 9).unwrap();
        assert_eq!(a, b);
        let c = CoefficientCollection::sparse_random(12, 3, 2, 2, 0.05, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sparse_random_binomial_band() {
        // 190 admissible pairs, inclusion 1/2: the 99% band of Bin(190, 1/2)
        // is [77, 113] (computed from the exact binomial cdf).
        for seed in 0..20 {
            let a = CoefficientCollection::sparse_random(20, 2, 1, 1, 0.5, seed).unwrap();
            let count = a.layer_len(2);
            assert!((77..=113).contains(&count), "seed {seed}: {count}");
        }
    }

    #[test]
    fn sparse_random_large_space_uses_counted_draws() {
        let a = CoefficientCollection::sparse_random(50, 4, 3, 3, 1e-6, 3).unwrap();
        // C(50,4)·9^4 ≈ 1.51e9 admissible monomials, expected ~1511 at degree 4
        let n4 = a.layer_len(4);
        assert!((1300..1720).contains(&n4), "{n4}");
    }

    #[test]
    fn text_round_trip_exact() {
        let a = CoefficientCollection::sparse_random(8, 3, 2, 2, 0.2, 77).unwrap();
        let back = CoefficientCollection::from_text(&a.to_text()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn text_parse_errors() {
        assert!(CoefficientCollection::from_text("").is_err());
        assert!(CoefficientCollection::from_text("2 1 1").is_err());
        assert!(CoefficientCollection::from_text("2 1 1 4\n2 2 1 1 1 1 1 0.5").is_err());
        assert!(CoefficientCollection::from_text("2 1 1 4\n2 1 1 1 0.5").is_err());
        let ok = CoefficientCollection::from_text("# pairs\n2 1 1 4\n0 1.5\n2 1 1 1 2 1 1 0.5\n").unwrap();
        assert_eq!(ok.constant(), 1.5);
        assert_eq!(ok.get(&[t(1), t(2)]), Some(0.5));
    }

    #[test]
    fn floyd_subsets_are_sorted_and_distinct() {
        let mut rng = stream(1, Purpose::Coefficients, 99, 0, 0);
        for _ in 0..200 {
            let s = floyd_subset(&mut rng, 10, 4);
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&v| (1..=10).contains(&v)));
        }
    }
}
