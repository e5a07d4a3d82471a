use serde::{Deserialize, Serialize};

use super::law::ScalarLaw;
use super::split::{split, SplitLaw};
use crate::{Error, Result};

/// Per-coordinate law assignment overriding the family default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawOverride {
    pub n: u32,
    pub j: u32,
    pub law: ScalarLaw,
}

/// Independent vectors `X_1, X_2, …` in `R^N` with independent coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorFamily {
    pub dim: u32,
    pub default: ScalarLaw,
    #[serde(default)]
    pub overrides: Vec<LawOverride>,
}

impl VectorFamily {
    pub fn iid(dim: u32, law: ScalarLaw) -> Self {
        Self {
            dim,
            default: law,
            overrides: Vec::new(),
        }
    }

    pub fn with_override(mut self, n: u32, j: u32, law: ScalarLaw) -> Self {
        self.overrides.retain(|o| (o.n, o.j) != (n, j));
        self.overrides.push(LawOverride { n, j, law });
        self
    }

    /// Law of `X_{n,j}` (1-based).
    pub fn law(&self, n: u32, j: u32) -> &ScalarLaw {
        self.overrides
            .iter()
            .find(|o| o.n == n && o.j == j)
            .map(|o| &o.law)
            .unwrap_or(&self.default)
    }

    /// Every assigned law must be certifiable or an explicit mixture.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::range("family dim", "N must be ≥ 1"));
        }
        for o in &self.overrides {
            if o.n == 0 || o.j == 0 || o.j > self.dim {
                return Err(Error::range(
                    "law override",
                    format!("(n={}, j={}) with N={}", o.n, o.j, self.dim),
                ));
            }
        }
        std::iter::once(&self.default)
            .chain(self.overrides.iter().map(|o| &o.law))
            .try_for_each(|law| match law {
                ScalarLaw::ExplicitMixture(s) => s.validate(),
                other => other.certify_doeblin().map(|_| ()),
            })
    }

    /// `E[X_{n,j}^k]` for `k = 1..=k_max`, indexed `[n-1][j-1][k-1]`.
    pub fn moment_table(&self, n_max: u32, k_max: u32) -> Result<Vec<Vec<Vec<f64>>>> {
        let default = self.default.power_moments(k_max)?;
        (1..=n_max)
            .map(|n| {
                (1..=self.dim)
                    .map(|j| {
                        let law = self.law(n, j);
                        if std::ptr::eq(law, &self.default) {
                            Ok(default.clone())
                        } else {
                            law.power_moments(k_max)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn split(&self) -> Result<SplitFamily> {
        self.validate()?;
        Ok(SplitFamily {
            dim: self.dim,
            default: split(&self.default)?,
            overrides: self
                .overrides
                .iter()
                .map(|o| Ok((o.n, o.j, split(&o.law)?)))
                .collect::<Result<_>>()?,
        })
    }
}

/// A family in which every coordinate carries its split representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFamily {
    pub dim: u32,
    pub default: SplitLaw,
    pub overrides: Vec<(u32, u32, SplitLaw)>,
}

impl SplitFamily {
    pub fn iid(dim: u32, law: SplitLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self {
            dim,
            default: law,
            overrides: Vec::new(),
        })
    }

    pub fn law(&self, n: u32, j: u32) -> &SplitLaw {
        self.overrides
            .iter()
            .find(|o| o.0 == n && o.1 == j)
            .map(|o| &o.2)
            .unwrap_or(&self.default)
    }

    /// The family of assembled laws.
    pub fn source_family(&self) -> VectorFamily {
        VectorFamily {
            dim: self.dim,
            default: self.default.source(),
            overrides: self
                .overrides
                .iter()
                .map(|(n, j, s)| LawOverride {
                    n: *n,
                    j: *j,
                    law: s.source(),
                })
                .collect(),
        }
    }

    /// Smallest success probability across the declared laws.
    pub fn min_p(&self) -> f64 {
        self.overrides.iter().map(|o| o.2.p).fold(self.default.p, f64::min)
    }

    pub fn check_uniform_v(&self) -> Result<()> {
        let all = std::iter::once(&self.default).chain(self.overrides.iter().map(|o| &o.2));
        for s in all {
            if s.v_law != ScalarLaw::standard_uniform() {
                return Err(Error::InvalidLaw(format!(
                    "v_law {} is not uniform on [-1, 1]",
                    s.v_law.name()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_take_precedence() {
        let f = VectorFamily::iid(2, ScalarLaw::standard_uniform()).with_override(3, 2, ScalarLaw::standard_gaussian());
        assert_eq!(f.law(3, 2), &ScalarLaw::standard_gaussian());
        assert_eq!(f.law(3, 1), &ScalarLaw::standard_uniform());
        f.validate().unwrap();
    }

    #[test]
    fn atom_family_rejected() {
        let f = VectorFamily::iid(
            1,
            ScalarLaw::AtomMixture {
                points: vec![1.0],
                weights: vec![1.0],
            },
        );
        assert!(matches!(f.validate(), Err(Error::NotCertifiable { .. })));
    }

    #[test]
    fn moment_table_layout() {
        let f = VectorFamily::iid(1, ScalarLaw::standard_uniform()).with_override(
            2,
            1,
            ScalarLaw::Uniform { lo: 0.0, hi: 1.0 },
        );
        let t = f.moment_table(2, 2).unwrap();
        assert_eq!(t[0][0], vec![0.0, 1.0 / 3.0]);
        assert_eq!(t[1][0][0], 0.5);
    }

    #[test]
    fn family_split_and_back() {
        let f = VectorFamily::iid(1, ScalarLaw::standard_gaussian());
        let s = f.split().unwrap();
        assert!((s.min_p() - 0.483_941_449_038_286_7).abs() < 1e-14);
        let back = s.source_family();
        let m = back.default.raw_moment(2).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }
}
