//! Evaluation of centered stochastic polynomials, uncentered multilinear
//! forms, gaussian chaos counterparts, and the latent statistics used to
//! study the conditional variance given `(ε, U)`.

use rayon::prelude::*;

use crate::coeffs::{CoefficientCollection, IndexTriple};
use crate::numeric::CompensatedSum;
use crate::randvec::{SplitFamily, VectorFamily};
use crate::rng::{stream, Purpose, DRAW_BLOCK};
use crate::{Error, Result};

pub use crate::randvec::SampleMatrix;

/// Rows handled per parallel task when evaluating a matrix.
const ROW_CHUNK: usize = 1024;

/// Expectations `E[X_{n,j}^k]`, injected into every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    n_max: u32,
    dim: u32,
    k_star: u32,
    values: Vec<f64>,
}

impl MomentTable {
    /// Table with every entry missing.
    pub fn new(n_max: u32, dim: u32, k_star: u32) -> Self {
        Self {
            n_max,
            dim,
            k_star,
            values: vec![f64::NAN; (n_max * dim * k_star) as usize],
        }
    }

    /// Analytic moments of a family's catalog laws.
    pub fn from_family(family: &VectorFamily, n_max: u32, k_star: u32) -> Result<Self> {
        let raw = family.moment_table(n_max, k_star)?;
        let mut t = Self::new(n_max, family.dim, k_star);
        for (n, per_n) in raw.iter().enumerate() {
            for (j, per_j) in per_n.iter().enumerate() {
                for (k, v) in per_j.iter().enumerate() {
                    t.set(IndexTriple::new(n as u32 + 1, k as u32 + 1, j as u32 + 1), *v)?;
                }
            }
        }
        Ok(t)
    }

    /// Empirical moments `mean(x_{n,j}^k)` of a sample.
    pub fn from_sample(x: &SampleMatrix, k_star: u32) -> Result<Self> {
        if x.count() == 0 {
            return Err(Error::Empty("sample for empirical moments"));
        }
        let mut t = Self::new(x.n_max(), x.dim(), k_star);
        for n in 1..=x.n_max() {
            for j in 1..=x.dim() {
                let col = x.column(n, j);
                for k in 1..=k_star {
                    let s: CompensatedSum = col.iter().map(|v| v.powi(k as i32)).collect();
                    t.set(IndexTriple::new(n, k, j), s.value() / col.len() as f64)?;
                }
            }
        }
        Ok(t)
    }

    fn offset(&self, t: IndexTriple) -> Option<usize> {
        if t.n == 0 || t.n > self.n_max || t.k == 0 || t.k > self.k_star || t.j == 0 || t.j > self.dim {
            return None;
        }
        Some((((t.n - 1) * self.dim + (t.j - 1)) * self.k_star + (t.k - 1)) as usize)
    }

    pub fn set(&mut self, t: IndexTriple, value: f64) -> Result<()> {
        let i = self.offset(t).ok_or(Error::IndexBounds {
            triple: t,
            k_star: self.k_star,
            dim: self.dim,
        })?;
        self.values[i] = value;
        Ok(())
    }

    pub fn get(&self, t: IndexTriple) -> Result<f64> {
        match self.offset(t).map(|i| self.values[i]) {
            Some(v) if !v.is_nan() => Ok(v),
            _ => Err(Error::MissingMoment(t)),
        }
    }
}

/// Monomials flattened into offsets of a per-draw table of centered powers.
#[derive(Debug, Clone)]
pub struct PolynomialEvaluator {
    constant: f64,
    dim: u32,
    k_star: u32,
    n_used: u32,
    /// `E[X^k]` per table slot.
    means: Vec<f64>,
    coefficients: Vec<f64>,
    starts: Vec<usize>,
    offsets: Vec<usize>,
}

impl PolynomialEvaluator {
    pub fn new(a: &CoefficientCollection, moments: &MomentTable) -> Result<Self> {
        let (dim, k_star) = (a.dim(), a.k_star());
        let n_used = a.max_index_used();
        let slot = |t: &IndexTriple| (((t.n - 1) * dim + (t.j - 1)) * k_star + (t.k - 1)) as usize;
        let mut means = vec![0.0; (n_used * dim * k_star) as usize];
        let mut coefficients = Vec::new();
        let mut starts = vec![0];
        let mut offsets = Vec::new();
        for m in 1..=a.degree() {
            for (mono, c) in a.layer(m) {
                for t in mono {
                    means[slot(t)] = moments.get(*t)?;
                    offsets.push(slot(t));
                }
                coefficients.push(c);
                starts.push(offsets.len());
            }
        }
        Ok(Self {
            constant: a.constant(),
            dim,
            k_star,
            n_used,
            means,
            coefficients,
            starts,
            offsets,
        })
    }

    fn check_shape(&self, x: &SampleMatrix) -> Result<()> {
        if x.dim() != self.dim || x.n_max() < self.n_used {
            return Err(Error::range(
                "sample matrix",
                format!(
                    "needs N={} and n_max ≥ {}, got N={} n_max={}",
                    self.dim,
                    self.n_used,
                    x.dim(),
                    x.n_max()
                ),
            ));
        }
        Ok(())
    }

    /// Fill `buf` with `x_{n,j}^k − E[X_{n,j}^k]` for one draw.
    fn centered_powers(&self, row: &[f64], buf: &mut [f64]) {
        let ks = self.k_star as usize;
        for (c, x) in row[..(self.n_used * self.dim) as usize].iter().enumerate() {
            let mut p = 1.0;
            for k in 0..ks {
                p *= x;
                buf[c * ks + k] = p - self.means[c * ks + k];
            }
        }
    }

    fn sum_terms(&self, buf: &[f64]) -> f64 {
        let mut acc = self.constant;
        for (t, c) in self.coefficients.iter().enumerate() {
            let mut prod = *c;
            for &o in &self.offsets[self.starts[t]..self.starts[t + 1]] {
                prod *= buf[o];
            }
            acc += prod;
        }
        acc
    }

    pub fn eval_row(&self, row: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.means.len()];
        self.centered_powers(row, &mut buf);
        self.sum_terms(&buf)
    }

    /// Sequential evaluation of every draw of `x`.
    pub fn eval_matrix(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        self.check_shape(x)?;
        let mut buf = vec![0.0; self.means.len()];
        Ok(x.rows()
            .map(|row| {
                self.centered_powers(row, &mut buf);
                self.sum_terms(&buf)
            })
            .collect())
    }

    /// Parallel evaluation; output order follows the draws.
    pub fn eval_matrix_par(&self, x: &SampleMatrix) -> Result<Vec<f64>> {
        self.check_shape(x)?;
        let w = x.width();
        if w == 0 || x.count() == 0 {
            return Ok(Vec::new());
        }
        let parts: Vec<Vec<f64>> = x
            .values()
            .par_chunks(w * ROW_CHUNK)
            .map(|chunk| {
                let mut buf = vec![0.0; self.means.len()];
                chunk
                    .chunks_exact(w)
                    .map(|row| {
                        self.centered_powers(row, &mut buf);
                        self.sum_terms(&buf)
                    })
                    .collect()
            })
            .collect();
        Ok(parts.concat())
    }
}

/// `Q(a, x)` for every draw: `a_0 + Σ a_m(t)·Π (x_{n,j}^k − E X_{n,j}^k)`.
pub fn evaluate(a: &CoefficientCollection, x: &SampleMatrix, moments: &MomentTable) -> Result<Vec<f64>> {
    PolynomialEvaluator::new(a, moments)?.eval_matrix_par(x)
}

/// Degree-`d` coefficients over `d`-subsets of indices, for the uncentered
/// multilinear form `Σ a(n_1, …, n_d)·X_{n_1}···X_{n_d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearTable {
    degree: u32,
    entries: Vec<(Vec<u32>, f64)>,
}

impl MultilinearTable {
    pub fn new(degree: u32, entries: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        for (idx, _) in &entries {
            if idx.len() != degree as usize {
                return Err(Error::range(
                    "multilinear tuple",
                    format!("{idx:?} has size {} ≠ {degree}", idx.len()),
                ));
            }
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != idx.len() || sorted.first() == Some(&0) {
                return Err(Error::range(
                    "multilinear tuple",
                    format!("{idx:?} repeats an index or uses 0"),
                ));
            }
        }
        Ok(Self { degree, entries })
    }

    /// Top layer of a collection with `k* = N = 1`.
    pub fn from_collection(a: &CoefficientCollection) -> Result<Self> {
        if a.k_star() != 1 || a.dim() != 1 {
            return Err(Error::range(
                "multilinear form",
                format!("needs k*=N=1, got k*={} N={}", a.k_star(), a.dim()),
            ));
        }
        let d = a.degree();
        let entries = a
            .layer(d)
            .map(|(mono, c)| (mono.iter().map(|t| t.n).collect(), c))
            .collect();
        Self::new(d, entries)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn entries(&self) -> &[(Vec<u32>, f64)] {
        &self.entries
    }

    pub fn max_index(&self) -> u32 {
        self.entries
            .iter()
            .flat_map(|(i, _)| i.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

pub fn evaluate_multilinear(a: &MultilinearTable, x: &SampleMatrix) -> Result<Vec<f64>> {
    if x.dim() != 1 || x.n_max() < a.max_index() {
        return Err(Error::range(
            "sample matrix",
            format!("needs N=1 and n_max ≥ {}", a.max_index()),
        ));
    }
    Ok(x.rows()
        .map(|row| {
            a.entries
                .iter()
                .map(|(idx, c)| idx.iter().fold(*c, |p, &n| p * row[(n - 1) as usize]))
                .sum()
        })
        .collect())
}

/// `S_d(a, G)`: each factor `X^k − E X^k` replaced by the gaussian
/// coordinate `G_{n, (k−1)·N + j}`.
pub fn evaluate_gaussian_chaos(a: &CoefficientCollection, g: &SampleMatrix) -> Result<Vec<f64>> {
    let width = a.dim() * a.k_star();
    if g.dim() != width {
        return Err(Error::range(
            "gaussian sample",
            format!("vector length {} but N·k* = {width}", g.dim()),
        ));
    }
    let coord = |t: &IndexTriple| (t.k - 1) * a.dim() + t.j;
    for (mono, _) in a.entries() {
        for t in mono {
            if t.n > g.n_max() || coord(t) > width {
                return Err(Error::IndexBounds {
                    triple: *t,
                    k_star: a.k_star(),
                    dim: a.dim(),
                });
            }
        }
    }
    let terms: Vec<(f64, Vec<usize>)> = a
        .entries()
        .map(|(mono, c)| {
            let offs = mono
                .iter()
                .map(|t| ((t.n - 1) * width + coord(t) - 1) as usize)
                .collect();
            (c, offs)
        })
        .collect();
    let constant = a.constant();
    Ok(g.rows()
        .map(|row| {
            terms.iter().fold(constant, |acc, (c, offs)| {
                acc + offs.iter().fold(*c, |p, &o| p * row[o])
            })
        })
        .collect())
}

/// `S_0(a, ε) = Σ_top a_d(t)²·Π ε_{n_i}`, with `epsilon[n − 1] = ε_n`.
pub fn s0_statistic(a: &CoefficientCollection, epsilon: &[u8]) -> Result<f64> {
    let need = a
        .layer(a.degree())
        .flat_map(|(m, _)| m.iter().map(|t| t.n))
        .max()
        .unwrap_or(0);
    if (epsilon.len() as u32) < need {
        return Err(Error::range(
            "epsilon",
            format!("covers n ≤ {} but the top layer uses n = {need}", epsilon.len()),
        ));
    }
    let s: CompensatedSum = a
        .layer(a.degree())
        .filter(|(m, _)| m.iter().all(|t| epsilon[(t.n - 1) as usize] != 0))
        .map(|(_, c)| c * c)
        .collect();
    Ok(s.value())
}

/// Frozen `(ε, U)` of one draw, laid out like a sample-matrix row.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub n_max: u32,
    pub dim: u32,
    pub epsilon: Vec<u8>,
    pub u: Vec<f64>,
}

impl LatentState {
    pub fn from_split_sample(s: &crate::randvec::SplitSample, draw: usize) -> Self {
        let w = s.x.width();
        Self {
            n_max: s.x.n_max(),
            dim: s.x.dim(),
            epsilon: s.epsilon[draw * w..(draw + 1) * w].to_vec(),
            u: s.u.row(draw).to_vec(),
        }
    }

    /// Per-vector indicators: `ε_n = 1` iff every coordinate of `X_n` took
    /// its `V` branch.
    pub fn vector_epsilon(&self) -> Vec<u8> {
        self.epsilon
            .chunks_exact(self.dim as usize)
            .map(|c| c.iter().copied().min().unwrap_or(0))
            .collect()
    }
}

/// Monte-Carlo variance over `V` alone with `(ε, U)` frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalVariance {
    pub value: f64,
    pub stderr: f64,
    pub mean: f64,
    pub budget: usize,
}

/// Values of `Q` with `(ε, U)` frozen and `V` redrawn `v_budget` times.
/// The `V` stream depends only on `seed`, so comparisons sharing a seed use
/// common random numbers.
pub fn conditional_values(
    a: &CoefficientCollection,
    family: &SplitFamily,
    latent: &LatentState,
    moments: &MomentTable,
    v_budget: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let eval = PolynomialEvaluator::new(a, moments)?;
    let rows = assemble_v_rows(family, latent, v_budget, seed, a.max_index_used())?;
    Ok(rows.rows().map(|r| eval.eval_row(r)).collect())
}

fn check_latent(latent: &LatentState, family: &SplitFamily, n_need: u32) -> Result<()> {
    if latent.dim != family.dim || latent.n_max < n_need {
        return Err(Error::range(
            "latent state",
            format!(
                "N={} n_max={} but the polynomial needs N={} n_max ≥ {n_need}",
                latent.dim, latent.n_max, family.dim
            ),
        ));
    }
    Ok(())
}

/// Rows `x = ε(αV + x0) + (1 − ε)U` for fresh `V` and frozen `(ε, U)`.
fn assemble_v_rows(
    family: &SplitFamily,
    latent: &LatentState,
    v_budget: usize,
    seed: u64,
    n_need: u32,
) -> Result<SampleMatrix> {
    check_latent(latent, family, n_need)?;
    let dim = latent.dim;
    let n_max = latent.n_max;
    let w = (n_max * dim) as usize;
    let mut values = vec![0.0; v_budget * w];
    for n in 1..=n_max {
        for j in 1..=dim {
            let col = ((n - 1) * dim + (j - 1)) as usize;
            let law = family.law(n, j);
            if latent.epsilon[col] == 0 {
                for t in 0..v_budget {
                    values[t * w + col] = latent.u[col];
                }
                continue;
            }
            for b in 0..v_budget.div_ceil(DRAW_BLOCK) {
                let mut rng = stream(seed, Purpose::SplitV, b as u64, n as u64, j as u64);
                for t in b * DRAW_BLOCK..((b + 1) * DRAW_BLOCK).min(v_budget) {
                    values[t * w + col] = law.alpha * law.v_law.sample(&mut rng) + law.x0;
                }
            }
        }
    }
    Ok(SampleMatrix::from_values(n_max, dim, values))
}

pub fn conditional_variance(
    a: &CoefficientCollection,
    family: &SplitFamily,
    latent: &LatentState,
    moments: &MomentTable,
    v_budget: usize,
    seed: u64,
) -> Result<ConditionalVariance> {
    if v_budget < 2 {
        return Err(Error::range("v_budget", format!("{v_budget} < 2")));
    }
    let q = conditional_values(a, family, latent, moments, v_budget, seed)?;
    Ok(variance_with_stderr(&q))
}

/// Exact `Var_V Q` for a polynomial with `k* = 1` exponents throughout.
/// Each factor is `c + s·W` with `W` the centered `V`; expanding the
/// products over subsets `S` of each monomial gives
/// `Var_V Q = Σ_{S≠∅} b_S²·Π_{i∈S} Var(V_i)`.
pub fn multilinear_conditional_variance(
    a: &CoefficientCollection,
    family: &SplitFamily,
    latent: &LatentState,
    moments: &MomentTable,
) -> Result<f64> {
    check_latent(latent, family, a.max_index_used())?;
    let mut coef: std::collections::HashMap<Vec<usize>, f64> = std::collections::HashMap::new();
    let mut parts: Vec<(usize, f64, f64)> = Vec::new();
    for (mono, value) in a.entries() {
        parts.clear();
        for t in mono {
            if t.k != 1 {
                return Err(Error::range(
                    "exponent",
                    format!("{t:?} has k > 1; polynomial is not multilinear"),
                ));
            }
            let col = ((t.n - 1) * latent.dim + (t.j - 1)) as usize;
            let law = family.law(t.n, t.j);
            let ex = moments.get(*t)?;
            let (c, s) = if latent.epsilon[col] != 0 {
                (law.alpha * law.v_law.raw_moment(1)? + law.x0 - ex, law.alpha)
            } else {
                (latent.u[col] - ex, 0.0)
            };
            parts.push((col, c, s));
        }
        for mask in 1u32..1 << parts.len() {
            let mut b = value;
            let mut key = Vec::with_capacity(parts.len());
            for (i, &(col, c, s)) in parts.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    b *= s;
                    key.push(col);
                } else {
                    b *= c;
                }
            }
            if b != 0.0 {
                key.sort_unstable();
                *coef.entry(key).or_insert(0.0) += b;
            }
        }
    }
    let mut var_v = vec![0.0; latent.epsilon.len()];
    for n in 1..=latent.n_max {
        for j in 1..=latent.dim {
            let v = &family.law(n, j).v_law;
            let m1 = v.raw_moment(1)?;
            var_v[((n - 1) * latent.dim + (j - 1)) as usize] = v.raw_moment(2)? - m1 * m1;
        }
    }
    let mut keys: Vec<_> = coef.into_iter().collect();
    keys.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(keys
        .into_iter()
        .map(|(key, b)| b * b * key.iter().map(|&c| var_v[c]).product::<f64>())
        .collect::<CompensatedSum>()
        .value())
}

/// Sample variance and a delta-method standard error from the fourth
/// central moment.
pub fn variance_with_stderr(q: &[f64]) -> ConditionalVariance {
    let n = q.len() as f64;
    let mean = q.iter().copied().collect::<CompensatedSum>().value() / n;
    let m2 = q.iter().map(|v| (v - mean).powi(2)).collect::<CompensatedSum>().value() / n;
    let m4 = q.iter().map(|v| (v - mean).powi(4)).collect::<CompensatedSum>().value() / n;
    let value = m2 * n / (n - 1.0);
    ConditionalVariance {
        value,
        stderr: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        mean,
        budget: q.len(),
    }
}

/// Per-draw split of `Q` with `(ε, U)` frozen into `S_1` (top-degree
/// products of the `V`-driven centered parts), `S_2 = E_V Q`, and the rest
/// `S_3`, so that `Q = S_1 + S_2 + S_3`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDecomposition {
    pub q: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: f64,
    pub s3: Vec<f64>,
}

pub fn latent_decomposition(
    a: &CoefficientCollection,
    family: &SplitFamily,
    latent: &LatentState,
    moments: &MomentTable,
    v_budget: usize,
    seed: u64,
) -> Result<LatentDecomposition> {
    let eval = PolynomialEvaluator::new(a, moments)?;
    let rows = assemble_v_rows(family, latent, v_budget, seed, a.max_index_used())?;
    // Each factor X^k − E X^k = A + B with
    //   A = ε((αV + x0)^k − E(αV + x0)^k)  (mean zero over V)
    //   B = (1 − ε)U^k + ε·E(αV + x0)^k − E X^k  (free of V).
    let factor_b = |t: &IndexTriple| -> Result<f64> {
        let col = ((t.n - 1) * latent.dim + (t.j - 1)) as usize;
        let ev = family.law(t.n, t.j).shifted_v_moment(t.k)?;
        let ex = moments.get(*t)?;
        Ok(if latent.epsilon[col] != 0 {
            ev - ex
        } else {
            latent.u[col].powi(t.k as i32) - ex
        })
    };
    let mut s2 = a.constant();
    for (mono, c) in a.entries() {
        let mut p = c;
        for t in mono {
            p *= factor_b(t)?;
        }
        s2 += p;
    }
    let d = a.degree();
    let top: Vec<(f64, Vec<(usize, u32, f64)>)> = a
        .layer(d)
        .map(|(mono, c)| {
            let f = mono
                .iter()
                .map(|t| {
                    let col = ((t.n - 1) * latent.dim + (t.j - 1)) as usize;
                    let ev = family.law(t.n, t.j).shifted_v_moment(t.k)?;
                    Ok((col, t.k, ev))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((c, f))
        })
        .collect::<Result<_>>()?;
    let mut q = Vec::with_capacity(v_budget);
    let mut s1 = Vec::with_capacity(v_budget);
    let mut s3 = Vec::with_capacity(v_budget);
    for row in rows.rows() {
        let qv = eval.eval_row(row);
        let mut s1v = 0.0;
        for (c, factors) in &top {
            let mut p = *c;
            for &(col, k, ev) in factors {
                p *= if latent.epsilon[col] != 0 {
                    row[col].powi(k as i32) - ev
                } else {
                    0.0
                };
            }
            s1v += p;
        }
        q.push(qv);
        s1.push(s1v);
        s3.push(qv - s1v - s2);
    }
    Ok(LatentDecomposition { q, s1, s2, s3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randvec::{sample, split, ScalarLaw, SplitLaw};

    fn t(n: u32, k: u32, j: u32) -> IndexTriple {
        IndexTriple::new(n, k, j)
    }

    #[test]
    fn constant_polynomial() {
        let mut a = CoefficientCollection::new(0, 1, 1, 1).unwrap();
        a.set_constant(2.5);
        let x = SampleMatrix::from_values(1, 1, vec![0.1, 0.2, 0.3]);
        let m = MomentTable::new(1, 1, 1);
        assert_eq!(evaluate(&a, &x, &m).unwrap(), vec![2.5; 3]);
    }

    #[test]
    fn single_linear_term() {
        let mut a = CoefficientCollection::new(1, 1, 1, 1).unwrap();
        a.insert(vec![t(1, 1, 1)], 2.0).unwrap();
        let x = SampleMatrix::from_values(1, 1, vec![0.5]);
        let mut m = MomentTable::new(1, 1, 1);
        m.set(t(1, 1, 1), 0.0).unwrap();
        assert_eq!(evaluate(&a, &x, &m).unwrap(), vec![1.0]);
    }

    #[test]
    fn missing_moment_named() {
        let mut a = CoefficientCollection::new(1, 2, 1, 2).unwrap();
        a.insert(vec![t(2, 2, 1)], 1.0).unwrap();
        let x = SampleMatrix::from_values(2, 1, vec![0.5, 0.5]);
        let m = MomentTable::new(2, 1, 2);
        match evaluate(&a, &x, &m) {
            Err(Error::MissingMoment(tr)) => assert_eq!(tr, t(2, 2, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multilinear_examples() {
        let a = MultilinearTable::new(2, vec![(vec![1, 2], 1.0)]).unwrap();
        let x = SampleMatrix::from_values(2, 1, vec![2.0, 3.0]);
        assert_eq!(evaluate_multilinear(&a, &x).unwrap(), vec![6.0]);
        assert!(MultilinearTable::new(2, vec![(vec![1, 1], 1.0)]).is_err());
        let spread = CoefficientCollection::uniform_spread(5, 3, 1, 1, 1.0).unwrap();
        let table = MultilinearTable::from_collection(&spread).unwrap();
        let ones = SampleMatrix::from_values(5, 1, vec![1.0; 5]);
        let w = 1.0 / 10f64.sqrt();
        assert!((evaluate_multilinear(&table, &ones).unwrap()[0] - 10.0 * w).abs() < 1e-12);
    }

    #[test]
    fn gaussian_chaos_layout() {
        // k=2, j=1, N=2 reads coordinate 3 of the length-4 vector
        let mut a = CoefficientCollection::new(1, 2, 2, 1).unwrap();
        a.insert(vec![t(1, 2, 1)], 1.0).unwrap();
        let g = SampleMatrix::from_values(1, 4, vec![10.0, 20.0, 30.0, 40.0]);
        assert_eq!(evaluate_gaussian_chaos(&a, &g).unwrap(), vec![30.0]);
        let bad = SampleMatrix::from_values(1, 2, vec![1.0, 2.0]);
        assert!(evaluate_gaussian_chaos(&a, &bad).is_err());
    }

    #[test]
    fn s0_examples() {
        let a = CoefficientCollection::uniform_spread(4, 2, 1, 1, 6f64.sqrt()).unwrap();
        assert!((s0_statistic(&a, &[1, 1, 0, 0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((s0_statistic(&a, &[1, 1, 1, 1]).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(s0_statistic(&a, &[0, 0, 0, 0]).unwrap(), 0.0);
        assert!(s0_statistic(&a, &[1, 1]).is_err());
    }

    #[test]
    fn conditional_variance_linear() {
        let mut a = CoefficientCollection::new(1, 1, 1, 1).unwrap();
        a.insert(vec![t(1, 1, 1)], 3.0).unwrap();
        let fam = SplitFamily::iid(1, split(&ScalarLaw::standard_uniform()).unwrap()).unwrap();
        let m = MomentTable::from_family(&fam.source_family(), 1, 1).unwrap();
        let on = LatentState {
            n_max: 1,
            dim: 1,
            epsilon: vec![1],
            u: vec![0.0],
        };
        let cv = conditional_variance(&a, &fam, &on, &m, 100_000, 1).unwrap();
        assert!((cv.value - 3.0).abs() < 4.0 * cv.stderr, "{cv:?}");
        let off = LatentState {
            epsilon: vec![0],
            ..on.clone()
        };
        assert_eq!(conditional_variance(&a, &fam, &off, &m, 100, 1).unwrap().value, 0.0);
        assert!(conditional_variance(&a, &fam, &on, &m, 1, 1).is_err());
    }

    #[test]
    fn exact_conditional_variance_matches_monte_carlo() {
        let law = SplitLaw {
            p: 0.5,
            alpha: 0.8,
            x0: 0.1,
            v_law: ScalarLaw::standard_uniform(),
            u_law: ScalarLaw::standard_gaussian(),
        };
        let fam = SplitFamily::iid(1, law).unwrap();
        let mut a = CoefficientCollection::sparse_random(6, 3, 1, 1, 0.7, 11).unwrap();
        a.set_constant(0.0);
        let m = MomentTable::from_family(&fam.source_family(), 6, 1).unwrap();
        let latent = LatentState {
            n_max: 6,
            dim: 1,
            epsilon: vec![1, 0, 1, 1, 0, 1],
            u: vec![0.3, -1.2, 0.4, 2.0, 0.9, -0.5],
        };
        let exact = multilinear_conditional_variance(&a, &fam, &latent, &m).unwrap();
        let mc = conditional_variance(&a, &fam, &latent, &m, 400_000, 2).unwrap();
        assert!((exact - mc.value).abs() < 4.0 * mc.stderr, "{exact} vs {mc:?}");
        let off = LatentState {
            epsilon: vec![0; 6],
            ..latent
        };
        assert_eq!(multilinear_conditional_variance(&a, &fam, &off, &m).unwrap(), 0.0);
    }

    #[test]
    fn decomposition_sums_to_q() {
        let law = SplitLaw {
            p: 0.5,
            alpha: 0.7,
            x0: 0.2,
            v_law: ScalarLaw::standard_uniform(),
            u_law: ScalarLaw::standard_gaussian(),
        };
        let fam = SplitFamily::iid(1, law).unwrap();
        let a = CoefficientCollection::sparse_random(5, 2, 2, 1, 0.8, 3).unwrap();
        let m = MomentTable::from_family(&fam.source_family(), 5, 2).unwrap();
        let latent = LatentState {
            n_max: 5,
            dim: 1,
            epsilon: vec![1, 0, 1, 1, 0],
            u: vec![0.3, -1.2, 0.4, 2.0, 0.9],
        };
        let dec = latent_decomposition(&a, &fam, &latent, &m, 5000, 4).unwrap();
        for i in 0..dec.q.len() {
            assert!((dec.s1[i] + dec.s2 + dec.s3[i] - dec.q[i]).abs() < 1e-10);
        }
        let mean_q = dec.q.iter().sum::<f64>() / dec.q.len() as f64;
        let sd = (crate::numeric::variance(&dec.q) / dec.q.len() as f64).sqrt();
        assert!((mean_q - dec.s2).abs() < 5.0 * sd + 1e-12);
    }

    #[test]
    fn empirical_moments_close_to_analytic() {
        let fam = VectorFamily::iid(1, ScalarLaw::standard_uniform());
        let x = sample(&fam, 2, 50_000, 8);
        let emp = MomentTable::from_sample(&x, 2).unwrap();
        let exact = MomentTable::from_family(&fam, 2, 2).unwrap();
        for n in 1..=2 {
            for k in 1..=2 {
                let tr = t(n, k, 1);
                assert!((emp.get(tr).unwrap() - exact.get(tr).unwrap()).abs() < 0.02);
            }
        }
    }
}
