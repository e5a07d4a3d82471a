use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::family::VectorFamily;
use super::sample::{block_count, SampleMatrix};
use crate::rng::{stream, Purpose, DRAW_BLOCK};
use crate::{Error, Result};

/// Centered gaussian vectors `G_n` in `R^{N·k*}` with the covariance of
/// `Z_n = (X_{n,j}^k − E X_{n,j}^k)`, coordinate `(k − 1)·N + j`.
#[derive(Debug, Clone)]
pub struct GaussianCounterpart {
    dim: u32,
    k_star: u32,
    n_max: u32,
    covariances: Vec<DMatrix<f64>>,
    factors: Vec<DMatrix<f64>>,
    /// Index into `covariances`/`factors` for each `n`.
    slot: Vec<usize>,
}

impl GaussianCounterpart {
    pub fn new(family: &VectorFamily, n_max: u32, k_star: u32) -> Result<Self> {
        if k_star == 0 || n_max == 0 {
            return Err(Error::range(
                "gaussian counterpart",
                format!("k_star={k_star} n_max={n_max}"),
            ));
        }
        let dim = family.dim;
        let size = (dim * k_star) as usize;
        let mut covariances: Vec<DMatrix<f64>> = Vec::new();
        let mut factors = Vec::new();
        let mut slot = Vec::with_capacity(n_max as usize);
        let mut seen: Vec<Vec<&super::ScalarLaw>> = Vec::new();
        for n in 1..=n_max {
            let laws: Vec<_> = (1..=dim).map(|j| family.law(n, j)).collect();
            if let Some(i) = seen.iter().position(|l| *l == laws) {
                slot.push(i);
                continue;
            }
            let mut cov = DMatrix::zeros(size, size);
            for (jj, law) in laws.iter().enumerate() {
                let m = law.power_moments(2 * k_star)?;
                let raw = |k: u32| m[(k - 1) as usize];
                for k in 1..=k_star {
                    for k2 in 1..=k_star {
                        let r = ((k - 1) * dim) as usize + jj;
                        let c = ((k2 - 1) * dim) as usize + jj;
                        cov[(r, c)] = raw(k + k2) - raw(k) * raw(k2);
                    }
                }
            }
            factors.push(psd_sqrt(&cov));
            covariances.push(cov);
            seen.push(laws);
            slot.push(covariances.len() - 1);
        }
        Ok(Self {
            dim,
            k_star,
            n_max,
            covariances,
            factors,
            slot,
        })
    }

    /// Length of each `G_n`.
    pub fn width(&self) -> u32 {
        self.dim * self.k_star
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn k_star(&self) -> u32 {
        self.k_star
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn covariance(&self, n: u32) -> &DMatrix<f64> {
        &self.covariances[self.slot[(n - 1) as usize]]
    }

    /// Symmetric square root `F` with `F·F = Cov(G_n)`.
    pub fn factor(&self, n: u32) -> &DMatrix<f64> {
        &self.factors[self.slot[(n - 1) as usize]]
    }

    pub fn sample_block(&self, seed: u64, block: usize, len: usize) -> SampleMatrix {
        let w = self.width() as usize;
        let row = self.n_max as usize * w;
        let mut values = vec![0.0; len * row];
        for n in 1..=self.n_max {
            let f = self.factor(n);
            let mut rng = stream(seed, Purpose::Gaussian, block as u64, n as u64, 0);
            let offset = (n - 1) as usize * w;
            for d in 0..len {
                let z = DVector::from_fn(w, |_, _| StandardNormal.sample(&mut rng));
                let g = f * z;
                values[d * row + offset..d * row + offset + w].copy_from_slice(g.as_slice());
            }
        }
        SampleMatrix::from_values(self.n_max, self.width(), values)
    }

    /// `count` independent draws of `(G_1, …, G_{n_max})`, laid out as a
    /// sample matrix whose per-vector dimension is `N·k*`.
    pub fn sample(&self, count: usize, seed: u64) -> SampleMatrix {
        let blocks: Vec<SampleMatrix> = (0..block_count(count))
            .into_par_iter()
            .map(|b| {
                let len = (count - b * DRAW_BLOCK).min(DRAW_BLOCK);
                self.sample_block(seed, b, len)
            })
            .collect();
        let mut values = Vec::new();
        for b in blocks {
            values.extend_from_slice(b.values());
        }
        SampleMatrix::from_values(self.n_max, self.width(), values)
    }

    pub fn sample_map<F>(&self, count: usize, seed: u64, f: F) -> Vec<f64>
    where
        F: Fn(&SampleMatrix) -> Vec<f64> + Sync,
    {
        let parts: Vec<Vec<f64>> = (0..block_count(count))
            .into_par_iter()
            .map(|b| {
                let len = (count - b * DRAW_BLOCK).min(DRAW_BLOCK);
                f(&self.sample_block(seed, b, len))
            })
            .collect();
        parts.concat()
    }
}

/// Symmetric square root of a covariance matrix; negative eigenvalues from
/// rounding are clamped to zero so singular matrices are accepted.
pub fn psd_sqrt(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = cov.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randvec::ScalarLaw;

    #[test]
    fn uniform_second_order_covariance() {
        let f = VectorFamily::iid(1, ScalarLaw::standard_uniform());
        let g = GaussianCounterpart::new(&f, 3, 2).unwrap();
        let c = g.covariance(2);
        assert!((c[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c[(1, 1)] - 4.0 / 45.0).abs() < 1e-15);
        assert_eq!(c[(0, 1)], 0.0);
    }

    #[test]
    fn singular_covariance_factorizes() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = psd_sqrt(&cov);
        let back = &f * &f;
        assert!((back - cov).abs().max() < 1e-12);
    }

    #[test]
    fn coordinates_follow_power_major_layout() {
        let f = VectorFamily::iid(2, ScalarLaw::standard_uniform()).with_override(
            1,
            2,
            ScalarLaw::Uniform { lo: 0.0, hi: 2.0 },
        );
        let g = GaussianCounterpart::new(&f, 1, 2).unwrap();
        let c = g.covariance(1);
        // coordinate (k=1, j=2) is index 1, (k=2, j=2) is index 3
        let x = ScalarLaw::Uniform { lo: 0.0, hi: 2.0 };
        let m: Vec<f64> = x.power_moments(4).unwrap();
        assert!((c[(1, 3)] - (m[2] - m[0] * m[1])).abs() < 1e-14);
        assert_eq!(c[(0, 1)], 0.0);
    }

    #[test]
    fn sampled_variance_matches() {
        let f = VectorFamily::iid(1, ScalarLaw::Laplace { loc: 0.0, scale: 1.0 });
        let g = GaussianCounterpart::new(&f, 1, 1).unwrap();
        let s = g.sample(100_000, 3);
        let var = crate::numeric::variance(&s.column(1, 1));
        // Var(G) = 2; sd of estimator √(2·2²/n)
        assert!((var - 2.0).abs() < 4.0 * (8.0f64 / 1e5).sqrt());
    }
}
