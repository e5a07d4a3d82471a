use rand::Rng;
use rayon::prelude::*;

use super::family::{SplitFamily, VectorFamily};
use crate::rng::{stream, Purpose, DRAW_BLOCK};

/// Draws of `(X_1, …, X_{n_max})` in `R^N`, stored row-major with one row
/// per draw and column `(n − 1)·N + (j − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    count: usize,
    n_max: u32,
    dim: u32,
    values: Vec<f64>,
}

impl SampleMatrix {
    pub fn from_values(n_max: u32, dim: u32, values: Vec<f64>) -> Self {
        let width = (n_max * dim) as usize;
        assert!(width > 0 && values.len() % width == 0, "ragged sample matrix");
        Self {
            count: values.len() / width,
            n_max,
            dim,
            values,
        }
    }

    pub fn empty(n_max: u32, dim: u32) -> Self {
        Self::from_values(n_max, dim, Vec::new())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn width(&self) -> usize {
        (self.n_max * self.dim) as usize
    }

    pub fn row(&self, draw: usize) -> &[f64] {
        let w = self.width();
        &self.values[draw * w..(draw + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width())
    }

    /// `x_{n,j}` of one draw (1-based `n`, `j`).
    pub fn get(&self, draw: usize, n: u32, j: u32) -> f64 {
        self.values[draw * self.width() + ((n - 1) * self.dim + (j - 1)) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column of `x_{n,j}` across draws.
    pub fn column(&self, n: u32, j: u32) -> Vec<f64> {
        (0..self.count).map(|d| self.get(d, n, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Number of stream blocks needed for `count` draws.
pub fn block_count(count: usize) -> usize {
    count.div_ceil(DRAW_BLOCK)
}

/// Draws of stream block `block`; only the first `len ≤ DRAW_BLOCK` are kept.
pub fn sample_block(family: &VectorFamily, n_max: u32, seed: u64, block: usize, len: usize) -> SampleMatrix {
    let dim = family.dim;
    let width = (n_max * dim) as usize;
    let mut values = vec![0.0; len * width];
    for n in 1..=n_max {
        for j in 1..=dim {
            let law = family.law(n, j);
            let col = ((n - 1) * dim + (j - 1)) as usize;
            let mut rng = stream(seed, Purpose::Sample, block as u64, n as u64, j as u64);
            for d in 0..len {
                values[d * width + col] = law.sample(&mut rng);
            }
        }
    }
    SampleMatrix::from_values(n_max, dim, values)
}

fn block_len(count: usize, block: usize) -> usize {
    (count - block * DRAW_BLOCK).min(DRAW_BLOCK)
}

/// `count` independent draws. Each block of draws comes from its own
/// streams, so the matrix does not depend on how blocks are scheduled.
pub fn sample(family: &VectorFamily, n_max: u32, count: usize, seed: u64) -> SampleMatrix {
    let blocks: Vec<SampleMatrix> = (0..block_count(count))
        .into_par_iter()
        .map(|b| sample_block(family, n_max, seed, b, block_len(count, b)))
        .collect();
    concat(n_max, family.dim, blocks)
}

fn concat(n_max: u32, dim: u32, blocks: Vec<SampleMatrix>) -> SampleMatrix {
    let mut values = Vec::with_capacity(blocks.iter().map(|b| b.values.len()).sum());
    for b in blocks {
        values.extend_from_slice(&b.values);
    }
    SampleMatrix::from_values(n_max, dim, values)
}

/// Evaluate `f` on freshly sampled blocks and concatenate the outputs, so
/// only one block of draws per worker is held in memory.
pub fn sample_map<F>(family: &VectorFamily, n_max: u32, count: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&SampleMatrix) -> Vec<f64> + Sync,
{
    let parts: Vec<Vec<f64>> = (0..block_count(count))
        .into_par_iter()
        .map(|b| f(&sample_block(family, n_max, seed, b, block_len(count, b))))
        .collect();
    parts.concat()
}

/// Assembled draws together with the latent `ε`, `V`, `U` of the split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSample {
    pub x: SampleMatrix,
    pub epsilon: Vec<u8>,
    pub v: SampleMatrix,
    pub u: SampleMatrix,
}

impl SplitSample {
    pub fn epsilon(&self, draw: usize, n: u32, j: u32) -> u8 {
        let x = &self.x;
        self.epsilon[draw * x.width() + ((n - 1) * x.dim() + (j - 1)) as usize]
    }

    /// `1` if every coordinate of vector `n` took its `V` branch.
    pub fn vector_epsilon(&self, draw: usize, n: u32) -> u8 {
        (1..=self.x.dim()).map(|j| self.epsilon(draw, n, j)).min().unwrap_or(0)
    }

    /// Per-vector indicators `(ε_1, …, ε_{n_max})` of one draw.
    pub fn epsilon_row(&self, draw: usize) -> Vec<u8> {
        (1..=self.x.n_max()).map(|n| self.vector_epsilon(draw, n)).collect()
    }
}

/// Latent draws of one block. Degenerate splits (`p = 1`) never draw `U`;
/// their `U` entries hold `x0`.
pub fn sample_split_block(family: &SplitFamily, n_max: u32, seed: u64, block: usize, len: usize) -> SplitSample {
    let dim = family.dim;
    let width = (n_max * dim) as usize;
    let mut x = vec![0.0; len * width];
    let mut eps = vec![0u8; len * width];
    let mut v = vec![0.0; len * width];
    let mut u = vec![0.0; len * width];
    for n in 1..=n_max {
        for j in 1..=dim {
            let law = family.law(n, j);
            let col = ((n - 1) * dim + (j - 1)) as usize;
            let key = (block as u64, n as u64, j as u64);
            let mut re = stream(seed, Purpose::Epsilon, key.0, key.1, key.2);
            let mut rv = stream(seed, Purpose::SplitV, key.0, key.1, key.2);
            let mut ru = stream(seed, Purpose::SplitU, key.0, key.1, key.2);
            for d in 0..len {
                let i = d * width + col;
                let e = law.p >= 1.0 || re.random::<f64>() < law.p;
                let vd = law.v_law.sample(&mut rv);
                let ud = if law.is_degenerate() {
                    law.x0
                } else {
                    law.u_law.sample(&mut ru)
                };
                eps[i] = e as u8;
                v[i] = vd;
                u[i] = ud;
                x[i] = if e { law.alpha * vd + law.x0 } else { ud };
            }
        }
    }
    SplitSample {
        x: SampleMatrix::from_values(n_max, dim, x),
        epsilon: eps,
        v: SampleMatrix::from_values(n_max, dim, v),
        u: SampleMatrix::from_values(n_max, dim, u),
    }
}

pub fn sample_split(family: &SplitFamily, n_max: u32, count: usize, seed: u64) -> SplitSample {
    let blocks: Vec<SplitSample> = (0..block_count(count))
        .into_par_iter()
        .map(|b| sample_split_block(family, n_max, seed, b, block_len(count, b)))
        .collect();
    let mut eps = Vec::new();
    let (mut xs, mut vs, mut us) = (Vec::new(), Vec::new(), Vec::new());
    for b in blocks {
        eps.extend_from_slice(&b.epsilon);
        xs.push(b.x);
        vs.push(b.v);
        us.push(b.u);
    }
    SplitSample {
        x: concat(n_max, family.dim, xs),
        epsilon: eps,
        v: concat(n_max, family.dim, vs),
        u: concat(n_max, family.dim, us),
    }
}

/// Streaming counterpart of [`sample_split`].
pub fn sample_split_map<F>(family: &SplitFamily, n_max: u32, count: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&SplitSample) -> Vec<f64> + Sync,
{
    let parts: Vec<Vec<f64>> = (0..block_count(count))
        .into_par_iter()
        .map(|b| f(&sample_split_block(family, n_max, seed, b, block_len(count, b))))
        .collect();
    parts.concat()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randvec::{ScalarLaw, SplitLaw};

    #[test]
    fn empty_and_deterministic() {
        let f = VectorFamily::iid(2, ScalarLaw::standard_gaussian());
        assert_eq!(sample(&f, 3, 0, 1).count(), 0);
        let a = sample(&f, 3, 5000, 9);
        let b = sample(&f, 3, 5000, 9);
        assert_eq!(a, b);
        assert_eq!(a.count(), 5000);
        assert_ne!(a, sample(&f, 3, 5000, 10));
    }

    #[test]
    fn prefix_stable_across_counts() {
        let f = VectorFamily::iid(1, ScalarLaw::standard_uniform());
        let short = sample(&f, 2, 100, 4);
        let long = sample(&f, 2, 9000, 4);
        assert_eq!(short.values(), &long.values()[..200]);
    }

    #[test]
    fn sample_map_matches_sample() {
        let f = VectorFamily::iid(1, ScalarLaw::standard_gaussian());
        let m = sample(&f, 2, 10_000, 5);
        let firsts: Vec<f64> = sample_map(&f, 2, 10_000, 5, |b| b.column(1, 1));
        assert_eq!(firsts, m.column(1, 1));
    }

    #[test]
    fn degenerate_split_reassembles() {
        let law = SplitLaw {
            p: 1.0,
            alpha: 2.0,
            x0: 1.0,
            v_law: ScalarLaw::standard_uniform(),
            u_law: ScalarLaw::AtomMixture {
                points: vec![1.0],
                weights: vec![1.0],
            },
        };
        let fam = SplitFamily::iid(1, law).unwrap();
        let s = sample_split(&fam, 3, 1000, 2);
        assert!(s.epsilon.iter().all(|&e| e == 1));
        for (x, v) in s.x.values().iter().zip(s.v.values()) {
            assert_eq!(*x, 2.0 * v + 1.0);
        }
    }
}
