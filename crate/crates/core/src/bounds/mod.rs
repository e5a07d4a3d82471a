//! Right-hand sides of the distance and small-ball inequalities with every
//! term and constant itemized, plus exact and Monte-Carlo oracles for the
//! Bernoulli small-ball probability.

mod bernoulli;
mod calibrate;
mod formulas;

use serde::{Deserialize, Serialize};

use crate::numeric::CompensatedSum;

pub use bernoulli::{
    bound_bernoulli_tail, exact_bernoulli_tail, mc_bernoulli_tail, BernoulliForm, McTail, MAX_EXACT_N,
};
pub use calibrate::{calibrate_shift_constant, power_variance, ShiftCalibration};
pub use formulas::{
    bound_cf, bound_invariance_shape, bound_l1_tail, bound_t1, bound_t2_shape, bound_t3_shape, cf_report,
    truncated_benchmark_shape, L1Tail, PairStats, TruncatedPairStats,
};

/// Where a constant's value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantSource {
    /// Given in closed form by the inequality itself.
    Explicit,
    /// Fitted from a desk-scale experiment.
    Calibrated,
    /// Computed from other quantities (e.g. a variance of a known law).
    Derived,
    /// Set in the experiment configuration.
    Configured,
    /// Unspecified existence constant left at its default of 1.
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsedConstant {
    pub name: String,
    pub value: f64,
    pub source: ConstantSource,
}

impl UsedConstant {
    pub fn new(name: &str, value: f64, source: ConstantSource) -> Self {
        Self {
            name: name.into(),
            value,
            source,
        }
    }
}

/// Constants whose existence is proven but whose values are not given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    /// Shift-regularity constant `C(d)` of log-concave polynomial images.
    pub c_d: Option<f64>,
    /// Two-degree variant `C(d, d')`.
    pub c_dd: Option<f64>,
    /// Per-factor variance constant `α` of the split.
    pub alpha_override: Option<f64>,
    /// `C_1` of the characteristic-function decay bound.
    pub c1_cf: Option<f64>,
    /// `c` of the characteristic-function decay bound.
    pub c_cf: Option<f64>,
    /// Prefactor `C` of the general-degree distance bounds.
    pub c_shape: Option<f64>,
    /// Exponent constant `c` of their tails.
    pub c_tail: Option<f64>,
    /// Names of constants filled in by calibration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub calibrated: Vec<String>,
}

impl ConstantsConfig {
    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in self.values() {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(crate::Error::Config(format!("constant {name} = {v} must be positive")));
                }
            }
        }
        Ok(())
    }

    fn values(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("C_d", self.c_d),
            ("C_dd", self.c_dd),
            ("alpha", self.alpha_override),
            ("C1_cf", self.c1_cf),
            ("c_cf", self.c_cf),
            ("C_shape", self.c_shape),
            ("c_tail", self.c_tail),
        ]
    }

    /// Value and provenance of a named constant.
    pub fn get(&self, name: &str) -> UsedConstant {
        let value = self
            .values()
            .iter()
            .find(|(n, _)| *n == name)
            .unwrap_or_else(|| panic!("unknown constant {name}"))
            .1;
        let source = match value {
            None => ConstantSource::Default,
            Some(_) if self.calibrated.iter().any(|c| c == name) => ConstantSource::Calibrated,
            Some(_) => ConstantSource::Configured,
        };
        UsedConstant::new(name, value.unwrap_or(1.0), source)
    }

    pub fn with_calibrated_c_d(mut self, value: f64) -> Self {
        self.c_d = Some(value);
        if !self.calibrated.iter().any(|c| c == "C_d") {
            self.calibrated.push("C_d".into());
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerm {
    pub name: String,
    pub formula: String,
    pub value: f64,
}

/// Itemized right-hand side of an inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inequality: String,
    pub terms: Vec<BoundTerm>,
    pub total: f64,
    pub constants: Vec<UsedConstant>,
    /// Named exponents of the dominant terms, for scaling fits.
    pub exponents: Vec<(String, f64)>,
    /// `false` when the total is at least 1 and so says nothing about a
    /// probability or TV distance.
    pub informative: bool,
    /// Computed for comparison only, never asserted.
    pub display_only: bool,
}

impl BoundReport {
    pub fn new(inequality: &str) -> Self {
        Self {
            inequality: inequality.into(),
            terms: Vec::new(),
            total: 0.0,
            constants: Vec::new(),
            exponents: Vec::new(),
            informative: true,
            display_only: false,
        }
    }

    pub fn term(mut self, name: &str, formula: &str, value: f64) -> Self {
        self.terms.push(BoundTerm {
            name: name.into(),
            formula: formula.into(),
            value,
        });
        self
    }

    pub fn constant(mut self, c: UsedConstant) -> Self {
        self.constants.push(c);
        self
    }

    pub fn exponent(mut self, name: &str, value: f64) -> Self {
        self.exponents.push((name.into(), value));
        self
    }

    /// Sum the terms into `total`.
    pub fn finish(mut self) -> Self {
        self.total = Self::sum_terms(&self.terms);
        self.informative = self.total < 1.0;
        self
    }

    pub fn sum_terms(terms: &[BoundTerm]) -> f64 {
        terms.iter().map(|t| t.value).collect::<CompensatedSum>().value()
    }

    /// Whether `total` is exactly the sum of the listed terms.
    pub fn is_consistent(&self) -> bool {
        Self::sum_terms(&self.terms) == self.total
    }

    pub fn term_value(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn exponent_value(&self, name: &str) -> Option<f64> {
        self.exponents.iter().find(|e| e.0 == name).map(|e| e.1)
    }
}
