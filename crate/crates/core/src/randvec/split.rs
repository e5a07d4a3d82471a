use serde::{Deserialize, Serialize};

use super::law::ScalarLaw;
use crate::numeric::binomial;
use crate::{Error, Result};

/// Probabilities this close to 1 are treated as exactly 1.
pub const SPLIT_CLAMP_TOL: f64 = 1e-12;

/// Density floor `ω` on the ball of radius `r` around `center`, with
/// `|center| ≤ center_bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoeblinWitness {
    pub omega: f64,
    pub radius: f64,
    pub center_bound: f64,
    pub center: Vec<f64>,
}

impl DoeblinWitness {
    pub fn new(omega: f64, radius: f64, center: Vec<f64>) -> Result<Self> {
        let center_bound = center.iter().map(|c| c * c).sum::<f64>().sqrt();
        let w = Self {
            omega,
            radius,
            center_bound,
            center,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Lebesgue measure of the ball `B_r` in `R^N`.
    pub fn ball_volume(&self) -> f64 {
        let n = self.dim() as f64;
        let ln_unit = n / 2.0 * std::f64::consts::PI.ln() - libm::lgamma(n / 2.0 + 1.0);
        (ln_unit + n * self.radius.ln()).exp()
    }

    /// Mass the floor puts on the ball.
    pub fn floor_mass(&self) -> f64 {
        self.omega * self.ball_volume()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.radius > 0.0) || self.center.is_empty() {
            return Err(Error::range(
                "witness",
                format!("omega={} radius={}", self.omega, self.radius),
            ));
        }
        let mass = self.floor_mass();
        if mass > 1.0 + SPLIT_CLAMP_TOL {
            return Err(Error::range("witness", format!("floor mass {mass} exceeds 1")));
        }
        Ok(())
    }
}

/// `X = ε(αV + x0) + (1 − ε)U` with `ε ~ Bernoulli(p)` independent of `V, U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitLaw {
    pub p: f64,
    pub alpha: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "ScalarLaw::standard_uniform")]
    pub v_law: ScalarLaw,
    pub u_law: ScalarLaw,
}

impl SplitLaw {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidLaw(format!("split p={} not in (0, 1]", self.p)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !self.x0.is_finite() {
            return Err(Error::InvalidLaw(format!("split alpha={} x0={}", self.alpha, self.x0)));
        }
        if !self.v_law.is_log_concave() {
            return Err(Error::InvalidLaw(format!(
                "v_law {} is not log-concave",
                self.v_law.name()
            )));
        }
        self.v_law.validate()?;
        self.u_law.validate()
    }

    /// The law of the assembled variable.
    pub fn source(&self) -> ScalarLaw {
        ScalarLaw::ExplicitMixture(Box::new(self.clone()))
    }

    /// `E[(αV + x0)^k]`.
    pub fn shifted_v_moment(&self, k: u32) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..=k {
            acc += binomial(k as u64, i as u64)
                * self.alpha.powi(i as i32)
                * self.v_law.raw_moment(i)?
                * self.x0.powi((k - i) as i32);
        }
        Ok(acc)
    }

    pub fn is_degenerate(&self) -> bool {
        self.p >= 1.0
    }
}

/// Split a certified scalar law into `ε(αV + x0) + (1 − ε)U` with `V`
/// uniform on `[−1, 1]`, `p = 2ωr`, `α = r`, `x0` the witness center.
pub fn split(law: &ScalarLaw) -> Result<SplitLaw> {
    if let ScalarLaw::ExplicitMixture(s) = law {
        s.validate()?;
        return Ok((**s).clone());
    }
    let w = law.certify_doeblin()?;
    let x0 = w.center[0];
    let mut p = 2.0 * w.omega * w.radius;
    let u_law = if p >= 1.0 - SPLIT_CLAMP_TOL {
        p = 1.0;
        // never drawn, but keeps the moment formulas well defined
        ScalarLaw::AtomMixture {
            points: vec![x0],
            weights: vec![1.0],
        }
    } else {
        ScalarLaw::Residual {
            source: Box::new(law.clone()),
            floor: w.omega,
            center: x0,
            radius: w.radius,
        }
    };
    Ok(SplitLaw {
        p,
        alpha: w.radius,
        x0,
        v_law: ScalarLaw::standard_uniform(),
        u_law,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_splits_exactly() {
        let s = split(&ScalarLaw::standard_uniform()).unwrap();
        assert_eq!((s.p, s.alpha, s.x0), (1.0, 1.0, 0.0));
        assert!(s.is_degenerate());
        let s = split(&ScalarLaw::Uniform { lo: 2.0, hi: 6.0 }).unwrap();
        assert_eq!((s.p, s.alpha, s.x0), (1.0, 2.0, 4.0));
    }

    #[test]
    fn gaussian_split_probability() {
        let s = split(&ScalarLaw::standard_gaussian()).unwrap();
        assert!((s.p - 0.483_941_449_038_286_7).abs() < 1e-14);
        assert!(matches!(s.u_law, ScalarLaw::Residual { .. }));
    }

    #[test]
    fn explicit_mixture_is_identity() {
        let s = SplitLaw {
            p: 0.3,
            alpha: 0.5,
            x0: 1.0,
            v_law: ScalarLaw::standard_uniform(),
            u_law: ScalarLaw::standard_gaussian(),
        };
        assert_eq!(split(&s.source()).unwrap(), s);
    }

    #[test]
    fn atoms_cannot_split() {
        let a = ScalarLaw::AtomMixture {
            points: vec![0.0, 0.5],
            weights: vec![0.5, 0.5],
        };
        assert!(matches!(split(&a), Err(Error::NotCertifiable { .. })));
    }

    #[test]
    fn non_log_concave_v_rejected() {
        let s = SplitLaw {
            p: 0.5,
            alpha: 1.0,
            x0: 0.0,
            v_law: ScalarLaw::StudentT { dof: 3.0 },
            u_law: ScalarLaw::standard_gaussian(),
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn residual_moments_preserve_source_moments() {
        for law in [
            ScalarLaw::standard_gaussian(),
            ScalarLaw::Laplace { loc: 0.3, scale: 2.0 },
            ScalarLaw::Gaussian { mean: -1.0, sd: 0.5 },
        ] {
            let s = split(&law).unwrap();
            for k in 1..=4 {
                let direct = law.raw_moment(k).unwrap();
                let mixed = s.source().raw_moment(k).unwrap();
                assert!((direct - mixed).abs() < 1e-12 * direct.abs().max(1.0), "{k}");
            }
        }
    }

    #[test]
    fn ball_volume_in_two_dims() {
        let w = DoeblinWitness::new(0.1, 1.0, vec![0.0, 0.0]).unwrap();
        assert!((w.ball_volume() - std::f64::consts::PI).abs() < 1e-12);
        assert!(DoeblinWitness::new(1.0, 1.0, vec![0.0]).is_err());
    }
}
