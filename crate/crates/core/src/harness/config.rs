use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::ConstantsConfig;
use crate::coeffs::CoefficientCollection;
use crate::metrics::MIN_RELIABLE_SAMPLES;
use crate::randvec::ScalarLaw;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    T1Verify,
    T2Scaling,
    T3Scaling,
    Invariance,
    BernoulliTail,
    L1Variance,
    ShiftRegularity,
    CfDecay,
    EstimatorCalibration,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::T1Verify,
        Scenario::T2Scaling,
        Scenario::T3Scaling,
        Scenario::Invariance,
        Scenario::BernoulliTail,
        Scenario::L1Variance,
        Scenario::ShiftRegularity,
        Scenario::CfDecay,
        Scenario::EstimatorCalibration,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::T1Verify => "t1-verify",
            Scenario::T2Scaling => "t2-scaling",
            Scenario::T3Scaling => "t3-scaling",
            Scenario::Invariance => "invariance",
            Scenario::BernoulliTail => "bernoulli-tail",
            Scenario::L1Variance => "l1-variance",
            Scenario::ShiftRegularity => "shift-regularity",
            Scenario::CfDecay => "cf-decay",
            Scenario::EstimatorCalibration => "estimator-calibration",
        }
    }
}

/// Where a coefficient collection comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientSource {
    /// Text file in the coefficient format, relative to the config file.
    File { path: PathBuf },
    /// All top-degree multilinear monomials with equal weight and `[a_d] = norm`.
    UniformSpread { norm: f64 },
    /// Random sparse collection with standard normal values.
    SparseRandom { density: f64, seed: u64 },
}

impl CoefficientSource {
    pub fn load(&self, n_max: u32, degree: u32, k_star: u32, dim: u32) -> Result<CoefficientCollection> {
        match self {
            CoefficientSource::File { path } => {
                let a = CoefficientCollection::read_file(path)?;
                if a.degree() != degree || a.k_star() != k_star || a.dim() != dim || a.n_max() > n_max {
                    return Err(Error::Config(format!(
                        "{}: collection has d={} k*={} N={} n_max={}, scenario needs d={degree} k*={k_star} N={dim} n_max ≤ {n_max}",
                        path.display(),
                        a.degree(),
                        a.k_star(),
                        a.dim(),
                        a.n_max()
                    )));
                }
                Ok(a)
            }
            CoefficientSource::UniformSpread { norm } => {
                CoefficientCollection::uniform_spread(n_max, degree, k_star, dim, *norm)
            }
            CoefficientSource::SparseRandom { density, seed } => {
                CoefficientCollection::sparse_random(n_max, degree, k_star, dim, *density, *seed)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            CoefficientSource::File { path } if !path.is_file() => Err(Error::Config(format!(
                "coefficient file {} does not exist",
                path.display()
            ))),
            CoefficientSource::UniformSpread { norm } if !(*norm > 0.0 && norm.is_finite()) => {
                Err(Error::Config(format!("uniform-spread norm {norm} must be positive")))
            }
            CoefficientSource::SparseRandom { density, .. } if !(*density > 0.0 && *density <= 1.0) => {
                Err(Error::Config(format!("sparse-random density {density} not in (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let CoefficientSource::File { path } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

impl Default for CoefficientSource {
    fn default() -> Self {
        CoefficientSource::UniformSpread { norm: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub cases: usize,
    pub h_max: f64,
    pub tolerance: f64,
    pub floor_max: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            cases: 20,
            h_max: 3.0,
            tolerance: 0.02,
            floor_max: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BernoulliSection {
    /// Random instances; each is checked at `thetas` levels.
    pub instances: usize,
    pub n_max: u32,
    pub max_degree: u32,
    pub p_values: Vec<f64>,
    pub thetas: usize,
    pub density: f64,
    /// Include the four-index complete pair form as a fixed first instance.
    pub fixture: bool,
    /// Monte-Carlo draws for the cross-check on the fixture.
    pub mc_draws: usize,
}

impl Default for BernoulliSection {
    fn default() -> Self {
        Self {
            instances: 60,
            n_max: 12,
            max_degree: 3,
            p_values: vec![0.3, 0.5, 0.8],
            thetas: 20,
            density: 0.6,
            fixture: true,
            mc_draws: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftSection {
    pub degrees: Vec<u32>,
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
    pub tolerance: f64,
}

impl Default for ShiftSection {
    fn default() -> Self {
        Self {
            degrees: vec![1, 2, 3],
            s_min: 1e-3,
            s_max: 1e-1,
            points: 12,
            tolerance: 0.12,
        }
    }
}

/// Split residual used by the mixture families `ε(αV + x0) + (1 − ε)U`.
fn unit_variance_uniform() -> ScalarLaw {
    let h = 3f64.sqrt();
    ScalarLaw::Uniform { lo: -h, hi: h }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L1Section {
    pub degree: u32,
    pub n_values: Vec<u32>,
    /// Latent `(ε, U)` draws per `n`.
    pub draws: usize,
    pub p: f64,
    pub alpha: f64,
    pub residual: ScalarLaw,
    pub coefficients: CoefficientSource,
    /// Draws whose exact conditional variance is compared with Monte Carlo.
    pub crosscheck_draws: usize,
    pub crosscheck_budget: usize,
}

impl Default for L1Section {
    fn default() -> Self {
        Self {
            degree: 2,
            n_values: vec![10, 20],
            draws: 10_000,
            p: 0.5,
            alpha: 1.0,
            residual: ScalarLaw::standard_gaussian(),
            coefficients: CoefficientSource::default(),
            crosscheck_draws: 5,
            crosscheck_budget: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct T1Section {
    pub n: u32,
    pub degree: u32,
    pub k_values: Vec<u32>,
    pub p: f64,
    pub alpha: f64,
    pub x_residual: ScalarLaw,
    pub y_residual: ScalarLaw,
    pub coefficients: CoefficientSource,
    /// Perturbation sizes `ζ` of `b = a + ζe`.
    pub zeta: Vec<f64>,
    pub slope_tolerance: f64,
    /// Draws of `V` for the calibration of `C(d)`.
    pub calibration_samples: usize,
}

impl Default for T1Section {
    fn default() -> Self {
        Self {
            n: 20,
            degree: 2,
            k_values: vec![1, 3],
            p: 0.5,
            alpha: 1.0,
            x_residual: unit_variance_uniform(),
            y_residual: ScalarLaw::standard_gaussian(),
            coefficients: CoefficientSource::default(),
            zeta: vec![0.05, 0.08, 0.12, 0.2, 0.3, 0.5],
            slope_tolerance: 0.15,
            calibration_samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct T2Section {
    pub n: u32,
    pub degree: u32,
    pub k_star: u32,
    pub k: u32,
    pub law: ScalarLaw,
    pub coefficients: CoefficientSource,
    pub zeta: Vec<f64>,
    /// Parameter `θ` of the earlier benchmark bound shown for comparison.
    pub benchmark_theta: f64,
}

impl Default for T2Section {
    fn default() -> Self {
        Self {
            n: 8,
            degree: 2,
            k_star: 2,
            k: 1,
            law: ScalarLaw::standard_uniform(),
            coefficients: CoefficientSource::SparseRandom { density: 0.5, seed: 7 },
            zeta: vec![0.05, 0.08, 0.12, 0.2, 0.3, 0.5],
            benchmark_theta: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct T3Section {
    pub n: u32,
    pub degree: u32,
    pub l: u32,
    pub k_star: u32,
    pub k: u32,
    pub law: ScalarLaw,
    pub coefficients: CoefficientSource,
    /// Scales applied to the layers above `l`.
    pub zeta: Vec<f64>,
}

impl Default for T3Section {
    fn default() -> Self {
        Self {
            n: 8,
            degree: 3,
            l: 1,
            k_star: 1,
            k: 1,
            law: ScalarLaw::standard_uniform(),
            coefficients: CoefficientSource::SparseRandom { density: 0.5, seed: 11 },
            zeta: vec![0.02, 0.04, 0.08, 0.16, 0.32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceSection {
    pub n_values: Vec<u32>,
    pub degree: u32,
    pub k_star: u32,
    pub law: ScalarLaw,
    /// Draws per distribution per rung.
    pub draws: usize,
    /// Interval count of the scan estimator.
    pub intervals: usize,
    pub slope_tolerance: f64,
}

impl Default for InvarianceSection {
    fn default() -> Self {
        Self {
            n_values: vec![8, 16, 32, 64, 128],
            degree: 1,
            k_star: 1,
            law: ScalarLaw::standard_uniform(),
            draws: 10_000_000,
            intervals: 3,
            slope_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfSection {
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
    /// Points `t = 1, …, check_points` compared with the analytic curve.
    pub check_points: usize,
    pub beta_tolerance: f64,
    /// Degree of an extra uniform-spread polynomial fitted for comparison;
    /// 0 disables it.
    pub extra_degree: u32,
    pub extra_n: u32,
}

impl Default for CfSection {
    fn default() -> Self {
        Self {
            samples: 200_000,
            t_min: 5.0,
            t_max: 100.0,
            t_step: 0.05,
            check_points: 10,
            beta_tolerance: 0.1,
            extra_degree: 2,
            extra_n: 2,
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_samples() -> usize {
    1_000_000
}

fn default_bootstrap() -> usize {
    200
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// `report.json` plus CSVs.
    #[default]
    Structured,
    /// CSVs only.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Draws per distribution for TV estimates.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub estimator_calibration: CalibrationSection,
    #[serde(default)]
    pub bernoulli: BernoulliSection,
    #[serde(default)]
    pub shift: ShiftSection,
    #[serde(default)]
    pub l1: L1Section,
    #[serde(default)]
    pub t1: T1Section,
    #[serde(default)]
    pub t2: T2Section,
    #[serde(default)]
    pub t3: T3Section,
    #[serde(default)]
    pub invariance: InvarianceSection,
    #[serde(default)]
    pub cf: CfSection,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn check_ladder(name: &str, values: &[f64], min_len: usize) -> Result<()> {
    check(values.len() >= min_len, || {
        format!("{name} needs at least {min_len} values, got {}", values.len())
    })?;
    check(values.iter().all(|v| *v > 0.0 && v.is_finite()), || {
        format!("{name} values must be positive")
    })?;
    check(values.windows(2).all(|w| w[0] < w[1]), || {
        format!("{name} must be increasing")
    })
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: default_seed(),
            samples: default_samples(),
            bootstrap: default_bootstrap(),
            out_dir: None,
            format: OutputFormat::default(),
            constants: ConstantsConfig::default(),
            estimator_calibration: Default::default(),
            bernoulli: Default::default(),
            shift: Default::default(),
            l1: Default::default(),
            t1: Default::default(),
            t2: Default::default(),
            t3: Default::default(),
            invariance: Default::default(),
            cf: Default::default(),
        }
    }

    /// Parse TOML; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for src in [
            &mut cfg.l1.coefficients,
            &mut cfg.t1.coefficients,
            &mut cfg.t2.coefficients,
            &mut cfg.t3.coefficients,
        ] {
            src.resolve(base);
        }
        if let Some(out) = &cfg.out_dir {
            if out.is_relative() {
                cfg.out_dir = Some(base.join(out));
            }
        }
        Ok(cfg)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Everything the chosen scenario reads must be usable.
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        check(self.samples >= MIN_RELIABLE_SAMPLES, || {
            format!("samples = {} < {MIN_RELIABLE_SAMPLES}", self.samples)
        })?;
        match self.scenario {
            Scenario::EstimatorCalibration => {
                let s = &self.estimator_calibration;
                check(s.cases >= 2, || "estimator_calibration.cases must be ≥ 2".into())?;
                check(s.h_max > 0.0 && s.h_max.is_finite(), || "h_max must be positive".into())?;
                check(s.tolerance > 0.0 && s.floor_max > 0.0, || {
                    "tolerances must be positive".into()
                })
            }
            Scenario::BernoulliTail => {
                let s = &self.bernoulli;
                check(s.instances + usize::from(s.fixture) >= 1, || {
                    "no bernoulli instances".into()
                })?;
                check((2..=crate::bounds::MAX_EXACT_N).contains(&s.n_max), || {
                    format!(
                        "bernoulli.n_max = {} not in 2..={}",
                        s.n_max,
                        crate::bounds::MAX_EXACT_N
                    )
                })?;
                check(s.max_degree >= 1 && s.max_degree <= s.n_max, || {
                    "bernoulli.max_degree".into()
                })?;
                check(
                    !s.p_values.is_empty() && s.p_values.iter().all(|p| *p > 0.0 && *p <= 1.0),
                    || "bernoulli.p_values must be in (0, 1]".into(),
                )?;
                check(s.thetas >= 1, || "bernoulli.thetas must be ≥ 1".into())?;
                check(s.density > 0.0 && s.density <= 1.0, || "bernoulli.density".into())?;
                check(s.mc_draws >= 10_000, || "bernoulli.mc_draws must be ≥ 10000".into())
            }
            Scenario::ShiftRegularity => {
                let s = &self.shift;
                check(
                    !s.degrees.is_empty() && s.degrees.iter().all(|d| (1..=8).contains(d)),
                    || "shift.degrees must be in 1..=8".into(),
                )?;
                check(s.s_min > 0.0 && s.s_max > s.s_min, || {
                    "shift needs 0 < s_min < s_max".into()
                })?;
                check(s.points >= 3, || "shift.points must be ≥ 3".into())
            }
            Scenario::L1Variance => {
                let s = &self.l1;
                check(s.degree >= 1, || "l1.degree must be ≥ 1".into())?;
                check(
                    !s.n_values.is_empty() && s.n_values.iter().all(|&n| n >= s.degree),
                    || "l1.n_values must be ≥ degree".into(),
                )?;
                check(s.draws >= 100, || "l1.draws must be ≥ 100".into())?;
                check(s.p > 0.0 && s.p < 1.0 && s.alpha > 0.0, || {
                    "l1 needs p in (0, 1), alpha > 0".into()
                })?;
                check(s.crosscheck_draws == 0 || s.crosscheck_budget >= 2, || {
                    "l1.crosscheck_budget must be ≥ 2".into()
                })?;
                s.residual.validate()?;
                s.coefficients.validate()
            }
            Scenario::T1Verify => {
                let s = &self.t1;
                check(s.degree >= 1 && s.n >= s.degree, || "t1 needs n ≥ degree ≥ 1".into())?;
                check(
                    !s.k_values.is_empty() && s.k_values.iter().all(|k| (1..=10).contains(k)),
                    || "t1.k_values must be in 1..=10".into(),
                )?;
                check(s.p > 0.0 && s.p < 1.0 && s.alpha > 0.0, || {
                    "t1 needs p in (0, 1), alpha > 0".into()
                })?;
                check_ladder("t1.zeta", &s.zeta, 3)?;
                check(s.calibration_samples >= MIN_RELIABLE_SAMPLES, || {
                    "t1.calibration_samples".into()
                })?;
                s.x_residual.validate()?;
                s.y_residual.validate()?;
                s.coefficients.validate()
            }
            Scenario::T2Scaling => {
                let s = &self.t2;
                check(s.degree >= 1 && s.n >= s.degree && s.k_star >= 1, || "t2 shape".into())?;
                check((1..=10).contains(&s.k), || "t2.k must be in 1..=10".into())?;
                check_ladder("t2.zeta", &s.zeta, 3)?;
                s.law.validate()?;
                s.coefficients.validate()
            }
            Scenario::T3Scaling => {
                let s = &self.t3;
                check(s.l >= 1 && s.l < s.degree && s.n >= s.degree && s.k_star >= 1, || {
                    "t3 needs 1 ≤ l < degree ≤ n".into()
                })?;
                check((1..=10).contains(&s.k), || "t3.k must be in 1..=10".into())?;
                check_ladder("t3.zeta", &s.zeta, 3)?;
                s.law.validate()?;
                s.coefficients.validate()
            }
            Scenario::Invariance => {
                let s = &self.invariance;
                check(s.n_values.len() >= 4, || {
                    format!("invariance ladder has {} rungs, need ≥ 4", s.n_values.len())
                })?;
                check(
                    s.n_values.windows(2).all(|w| w[0] < w[1]) && s.n_values[0] >= s.degree,
                    || "invariance.n_values must increase from ≥ degree".into(),
                )?;
                check(s.degree >= 1 && s.k_star >= 1, || "invariance shape".into())?;
                check(s.draws >= MIN_RELIABLE_SAMPLES && s.intervals >= 1, || {
                    "invariance budget".into()
                })?;
                s.law.validate()
            }
            Scenario::CfDecay => {
                let s = &self.cf;
                check(s.samples >= MIN_RELIABLE_SAMPLES, || "cf.samples".into())?;
                check(s.t_min > 0.0 && s.t_max > s.t_min && s.t_step > 0.0, || {
                    "cf window".into()
                })?;
                check(
                    ((s.t_max - s.t_min) / s.t_step) as usize + 1 >= crate::fourier::MIN_WINDOW_POINTS,
                    || "cf window has too few points".into(),
                )?;
                check(s.check_points >= 1, || "cf.check_points must be ≥ 1".into())?;
                check(s.extra_degree == 0 || s.extra_n >= s.extra_degree, || {
                    "cf.extra_n".into()
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml("scenario = \"bernoulli-tail\"\n", Path::new(".")).unwrap();
        assert_eq!(c.scenario, Scenario::BernoulliTail);
        assert_eq!(c.bernoulli, BernoulliSection::default());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ExperimentConfig::from_toml("scenario = \"cf-decay\"\nsampels = 3\n", Path::new("."));
        assert!(matches!(e, Err(Error::Config(_))));
        let e = ExperimentConfig::from_toml("scenario = \"cf-decay\"\n[cf]\nt_mn = 3\n", Path::new("."));
        assert!(e.is_err());
    }

    #[test]
    fn missing_coefficient_file() {
        let text = "scenario = \"l1-variance\"\n[l1.coefficients]\nkind = \"file\"\npath = \"nope.txt\"\n";
        let c = ExperimentConfig::from_toml(text, Path::new("/nonexistent")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn short_invariance_ladder() {
        let mut c = ExperimentConfig::new(Scenario::Invariance);
        c.invariance.n_values = vec![8, 16, 32];
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        for s in Scenario::ALL {
            let c = ExperimentConfig::new(s);
            c.validate().unwrap();
            let back = ExperimentConfig::from_toml(&c.to_toml().unwrap(), Path::new(".")).unwrap();
            assert_eq!(back, c);
        }
    }
}
