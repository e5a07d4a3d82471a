use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use super::split::{DoeblinWitness, SplitLaw};
use crate::numeric::{binomial, normal_pdf};
use crate::{Error, Result};

/// Catalog of scalar laws for the coordinates `X_{n,j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarLaw {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Laplace {
        loc: f64,
        scale: f64,
    },
    /// Heavy-tailed: moments of order `≥ dof` are infinite.
    StudentT {
        dof: f64,
    },
    /// Purely atomic law: `P(X = points[i]) = weights[i]`.
    AtomMixture {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
    /// `ε(αV + x0) + (1 − ε)U` declared directly.
    ExplicitMixture(Box<SplitLaw>),
    /// Normalized remainder `(f − ω·1_{[c−r, c+r]}) / (1 − 2ωr)` of a
    /// source density `f` after removing a uniform floor.
    Residual {
        source: Box<ScalarLaw>,
        floor: f64,
        center: f64,
        radius: f64,
    },
}

impl ScalarLaw {
    pub fn standard_uniform() -> Self {
        ScalarLaw::Uniform { lo: -1.0, hi: 1.0 }
    }

    pub fn standard_gaussian() -> Self {
        ScalarLaw::Gaussian { mean: 0.0, sd: 1.0 }
    }

    pub fn name(&self) -> String {
        match self {
            ScalarLaw::Uniform { lo, hi } => format!("uniform[{lo}, {hi}]"),
            ScalarLaw::Gaussian { mean, sd } => format!("gaussian({mean}, {sd})"),
            ScalarLaw::Laplace { loc, scale } => format!("laplace({loc}, {scale})"),
            ScalarLaw::StudentT { dof } => format!("student-t({dof})"),
            ScalarLaw::AtomMixture { points, .. } => format!("atoms({} points)", points.len()),
            ScalarLaw::ExplicitMixture(s) => format!(
                "mixture(p={}, alpha={}, x0={}, u={})",
                s.p,
                s.alpha,
                s.x0,
                s.u_law.name()
            ),
            ScalarLaw::Residual { source, .. } => format!("residual of {}", source.name()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLaw(msg));
        match self {
            ScalarLaw::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                bad(format!("uniform needs lo < hi, got [{lo}, {hi}]"))
            }
            ScalarLaw::Gaussian { mean, sd } if !(mean.is_finite() && *sd > 0.0) => {
                bad(format!("gaussian needs sd > 0, got {sd}"))
            }
            ScalarLaw::Laplace { loc, scale } if !(loc.is_finite() && *scale > 0.0) => {
                bad(format!("laplace needs scale > 0, got {scale}"))
            }
            ScalarLaw::StudentT { dof } if *dof <= 0.0 => bad(format!("student-t needs dof > 0, got {dof}")),
            ScalarLaw::AtomMixture { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return bad("atom mixture needs matching nonempty points/weights".into());
                }
                if weights.iter().any(|w| *w < 0.0) {
                    return bad("negative atom weight".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("atom weights sum to {total}"));
                }
                Ok(())
            }
            ScalarLaw::ExplicitMixture(s) => s.validate(),
            ScalarLaw::Residual {
                source, floor, radius, ..
            } => {
                source.validate()?;
                let p = 2.0 * floor * radius;
                if !(p > 0.0 && p < 1.0) {
                    return bad(format!("residual floor mass {p} not in (0, 1)"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether the law is in the log-concave part of the catalog.
    pub fn is_log_concave(&self) -> bool {
        matches!(
            self,
            ScalarLaw::Uniform { .. } | ScalarLaw::Gaussian { .. } | ScalarLaw::Laplace { .. }
        )
    }

    /// Density of the absolutely continuous part (atoms contribute nothing).
    pub fn density(&self, x: f64) -> f64 {
        match self {
            ScalarLaw::Uniform { lo, hi } => {
                if (*lo..=*hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            ScalarLaw::Gaussian { mean, sd } => normal_pdf((x - mean) / sd) / sd,
            ScalarLaw::Laplace { loc, scale } => (-(x - loc).abs() / scale).exp() / (2.0 * scale),
            ScalarLaw::StudentT { dof } => {
                let v = *dof;
                let ln_c =
                    libm::lgamma((v + 1.0) / 2.0) - libm::lgamma(v / 2.0) - 0.5 * (v * std::f64::consts::PI).ln();
                (ln_c - (v + 1.0) / 2.0 * (1.0 + x * x / v).ln()).exp()
            }
            ScalarLaw::AtomMixture { .. } => 0.0,
            ScalarLaw::ExplicitMixture(s) => {
                s.p * s.v_law.density((x - s.x0) / s.alpha) / s.alpha + (1.0 - s.p) * s.u_law.density(x)
            }
            ScalarLaw::Residual {
                source,
                floor,
                center,
                radius,
            } => {
                let inside = (x - center).abs() <= *radius;
                let remaining = source.density(x) - if inside { *floor } else { 0.0 };
                remaining.max(0.0) / (1.0 - 2.0 * floor * radius)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ScalarLaw::Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            ScalarLaw::Laplace { loc, scale } => {
                let u = rng.random::<f64>() - 0.5;
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            ScalarLaw::StudentT { dof } => StudentT::new(*dof).expect("validated dof").sample(rng),
            ScalarLaw::AtomMixture { points, weights } => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                for (x, w) in points.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *x;
                    }
                }
                *points.last().expect("validated nonempty")
            }
            ScalarLaw::ExplicitMixture(s) => {
                if rng.random::<f64>() < s.p {
                    s.alpha * s.v_law.sample(rng) + s.x0
                } else {
                    s.u_law.sample(rng)
                }
            }
            ScalarLaw::Residual {
                source,
                floor,
                center,
                radius,
            } => {
                // Rejection against the source density; acceptance rate is
                // 1 − 2·floor·radius, so the expected cost per draw is its inverse.
                loop {
                    let y = source.sample(rng);
                    if (y - center).abs() > *radius {
                        return y;
                    }
                    let f = source.density(y);
                    if rng.random::<f64>() * f >= *floor {
                        return y;
                    }
                }
            }
        }
    }

    /// Raw moments `E[X^k]` for `k = 1..=k_max`.
    pub fn power_moments(&self, k_max: u32) -> Result<Vec<f64>> {
        (1..=k_max).map(|k| self.raw_moment(k)).collect()
    }

    pub fn raw_moment(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let ki = k as i32;
        Ok(match self {
            ScalarLaw::Uniform { lo, hi } => (hi.powi(ki + 1) - lo.powi(ki + 1)) / ((k + 1) as f64 * (hi - lo)),
            ScalarLaw::Gaussian { mean, sd } => (0..=k)
                .step_by(2)
                .map(|i| {
                    binomial(k as u64, i as u64)
                        * mean.powi(ki - i as i32)
                        * sd.powi(i as i32)
                        * double_factorial_odd(i)
                })
                .sum(),
            ScalarLaw::Laplace { loc, scale } => (0..=k)
                .step_by(2)
                .map(|i| binomial(k as u64, i as u64) * loc.powi(ki - i as i32) * factorial(i) * scale.powi(i as i32))
                .sum(),
            ScalarLaw::StudentT { dof } => {
                if k as f64 >= *dof {
                    return Err(Error::InfiniteMoment {
                        law: self.name(),
                        order: k,
                    });
                }
                if k % 2 == 1 {
                    0.0
                } else {
                    (1..=k / 2)
                        .map(|i| dof * (2 * i - 1) as f64 / (dof - (2 * i) as f64))
                        .product()
                }
            }
            ScalarLaw::AtomMixture { points, weights } => points.iter().zip(weights).map(|(x, w)| w * x.powi(ki)).sum(),
            ScalarLaw::ExplicitMixture(s) => s.p * s.shifted_v_moment(k)? + (1.0 - s.p) * s.u_law.raw_moment(k)?,
            ScalarLaw::Residual {
                source,
                floor,
                center,
                radius,
            } => {
                let (a, b) = (center - radius, center + radius);
                let ball = (b.powi(ki + 1) - a.powi(ki + 1)) / (k + 1) as f64;
                (source.raw_moment(k)? - floor * ball) / (1.0 - 2.0 * floor * radius)
            }
        })
    }

    /// Doeblin witness `(ω, r, R, x)` for the scalar law: the density is at
    /// least `ω` on `[x − r, x + r]`.
    pub fn certify_doeblin(&self) -> Result<DoeblinWitness> {
        self.validate()?;
        let not = |reason: &str| Error::NotCertifiable {
            law: self.name(),
            reason: reason.into(),
        };
        let (omega, radius, center) = match self {
            ScalarLaw::Uniform { lo, hi } => (1.0 / (hi - lo), (hi - lo) / 2.0, (lo + hi) / 2.0),
            ScalarLaw::Gaussian { mean, sd } => (normal_pdf(1.0) / sd, *sd, *mean),
            ScalarLaw::Laplace { loc, scale } => ((-1.0f64).exp() / (2.0 * scale), *scale, *loc),
            ScalarLaw::StudentT { .. } => (self.density(1.0), 1.0, 0.0),
            ScalarLaw::ExplicitMixture(s) => {
                let w = s.v_law.certify_doeblin()?;
                let omega = s.p * w.omega / s.alpha;
                (omega, s.alpha * w.radius, s.x0 + s.alpha * w.center[0])
            }
            ScalarLaw::AtomMixture { .. } => return Err(not("no absolutely continuous part")),
            ScalarLaw::Residual { .. } => return Err(not("residual laws carry no certified floor")),
        };
        DoeblinWitness::new(omega, radius, vec![center])
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `(i − 1)!!` for even `i`, i.e. `E Z^i` of a standard normal.
fn double_factorial_odd(i: u32) -> f64 {
    (1..i).step_by(2).map(f64::from).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn uniform_moments() {
        let m = ScalarLaw::standard_uniform().power_moments(2).unwrap();
        assert_eq!(m[0], 0.0);
        assert!((m[1] - 1.0 / 3.0).abs() < 1e-15);
        let half = ScalarLaw::Uniform { lo: 0.0, hi: 1.0 };
        assert_eq!(half.raw_moment(1).unwrap(), 0.5);
    }

    #[test]
    fn gaussian_moments() {
        let m = ScalarLaw::standard_gaussian().power_moments(4).unwrap();
        assert_eq!(m, vec![0.0, 1.0, 0.0, 3.0]);
        let g = ScalarLaw::Gaussian { mean: 1.0, sd: 2.0 };
        // E X² = μ² + σ², E X³ = μ³ + 3μσ²
        assert!((g.raw_moment(2).unwrap() - 5.0).abs() < 1e-14);
        assert!((g.raw_moment(3).unwrap() - 13.0).abs() < 1e-14);
    }

    #[test]
    fn laplace_moments() {
        let l = ScalarLaw::Laplace { loc: 0.0, scale: 1.0 };
        assert_eq!(l.raw_moment(2).unwrap(), 2.0);
        assert_eq!(l.raw_moment(4).unwrap(), 24.0);
        assert_eq!(l.raw_moment(3).unwrap(), 0.0);
    }

    #[test]
    fn student_t_heavy_tail() {
        let t = ScalarLaw::StudentT { dof: 3.0 };
        assert!((t.raw_moment(2).unwrap() - 3.0).abs() < 1e-14);
        assert!(matches!(t.raw_moment(3), Err(Error::InfiniteMoment { .. })));
        assert!(matches!(t.power_moments(4), Err(Error::InfiniteMoment { .. })));
    }

    #[test]
    fn atom_moments_and_no_witness() {
        let a = ScalarLaw::AtomMixture {
            points: vec![-1.0, 2.0],
            weights: vec![0.5, 0.5],
        };
        assert_eq!(a.raw_moment(1).unwrap(), 0.5);
        assert!(matches!(a.certify_doeblin(), Err(Error::NotCertifiable { .. })));
    }

    #[test]
    fn witnesses_for_catalog() {
        let w = ScalarLaw::standard_uniform().certify_doeblin().unwrap();
        assert_eq!((w.omega, w.radius, w.center_bound), (0.5, 1.0, 0.0));
        let w = ScalarLaw::standard_gaussian().certify_doeblin().unwrap();
        assert!((w.omega - 0.241_970_724_519_143_37).abs() < 1e-15);
        assert_eq!((w.radius, w.center_bound), (1.0, 0.0));
        let w = ScalarLaw::Laplace { loc: 0.0, scale: 1.0 }.certify_doeblin().unwrap();
        assert!((w.omega - 0.183_939_720_585_721_16).abs() < 1e-15);
    }

    #[test]
    fn densities_integrate_to_one() {
        let laws = [
            ScalarLaw::standard_uniform(),
            ScalarLaw::standard_gaussian(),
            ScalarLaw::Laplace { loc: 0.5, scale: 2.0 },
            ScalarLaw::StudentT { dof: 4.0 },
        ];
        for law in laws {
            let h = 1e-3;
            let total: f64 = (-200_000..200_000).map(|i| law.density((i as f64 + 0.5) * h) * h).sum();
            assert!((total - 1.0).abs() < 2e-3, "{}: {total}", law.name());
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ScalarLaw::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(ScalarLaw::Gaussian { mean: 0.0, sd: 0.0 }.validate().is_err());
        assert!(ScalarLaw::AtomMixture {
            points: vec![0.0],
            weights: vec![0.7]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn laplace_sampler_matches_variance() {
        let l = ScalarLaw::Laplace { loc: 0.0, scale: 1.0 };
        let mut rng = stream(3, Purpose::Sample, 0, 0, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| l.sample(&mut rng)).collect();
        let var = crate::numeric::variance(&xs);
        // Var = 2, sd of the estimator ≈ √(E X⁴ − 4)/√n = √20/√n
        assert!((var - 2.0).abs() < 5.0 * (20.0f64).sqrt() / (n as f64).sqrt());
    }
}
