//! Concrete models: the two-sample standardized-effect model, the
//! hierarchical binomial meta-analysis, a one-dimensional toy model used for
//! oracle validation, and the classical pooled two-sample t-test.
//!
//! Each builder returns the [`ModelSpec`] together with a data-informed
//! starting point for the sampler.

use std::io::Read;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::hypothesis::{HypothesisError, IntervalHypothesis, MixturePrior};
use crate::sampler::{ModelSpec, SamplerError, Support};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("group {0:?} must not be empty")]
    EmptyGroup(&'static str),
    #[error("group {group:?} has a non-finite value at index {index}")]
    NonFiniteValue { group: &'static str, index: usize },
    #[error("expected CSV header {expected:?}, got {got:?}")]
    BadHeader { expected: &'static str, got: String },
    #[error("bad CSV record on line {line}: {message}")]
    BadRecord { line: u64, message: String },
    #[error("study {study}: deaths exceed trials")]
    CountsExceedTotal { study: usize },
    #[error("study {study}: each arm needs at least one trial")]
    ZeroTrials { study: usize },
    #[error("no studies in dataset")]
    NoStudies,
    #[error("need at least {need} observations per group, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("pooled variance is zero; t statistic undefined")]
    DegenerateVariance,
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A model spec plus a data-informed initialization point.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub spec: ModelSpec,
    pub init: Vec<f64>,
}

#[inline]
fn normal_lpdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln()) - (x - mean) * (x - mean) / (2.0 * var)
}

/// Inverse-gamma log density with shape `a` and rate `b`.
#[inline]
fn inv_gamma_lpdf(x: f64, a: f64, b: f64, ln_const: f64) -> f64 {
    // ln_const caches a ln b - ln Gamma(a)
    ln_const - (a + 1.0) * x.ln() - b / x
}

/// ln P(X = y) for X ~ Binomial(n, sigmoid(logit)).
#[inline]
fn binomial_logit_lpmf(y: f64, n: f64, logit: f64, ln_choose: f64) -> f64 {
    use crate::sampler::softplus;
    ln_choose - y * softplus(-logit) - (n - y) * softplus(logit)
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

// ---------------------------------------------------------------------------
// two-sample model
// ---------------------------------------------------------------------------

/// Observations for the two-sample model: `group_x` is the control/placebo
/// arm, `group_y` the treatment arm.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleData {
    group_x: Vec<f64>,
    group_y: Vec<f64>,
}

impl TwoSampleData {
    pub fn new(group_x: Vec<f64>, group_y: Vec<f64>) -> Result<Self, ModelError> {
        for (name, g) in [("x", &group_x), ("y", &group_y)] {
            if g.is_empty() {
                return Err(ModelError::EmptyGroup(name));
            }
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteValue { group: name, index: i });
            }
        }
        Ok(Self { group_x, group_y })
    }

    pub fn group_x(&self) -> &[f64] {
        &self.group_x
    }

    pub fn group_y(&self) -> &[f64] {
        &self.group_y
    }

    /// Parse the `group,value` CSV schema (group is `x` or `y`).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, ModelError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let got: Vec<&str> = headers.iter().collect();
        if got != ["group", "value"] {
            return Err(ModelError::BadHeader {
                expected: "group,value",
                got: got.join(","),
            });
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 2 {
                return Err(ModelError::BadRecord {
                    line,
                    message: format!("expected 2 fields, got {}", rec.len()),
                });
            }
            let value: f64 = rec[1].parse().map_err(|e| ModelError::BadRecord {
                line,
                message: format!("value {:?}: {e}", &rec[1]),
            })?;
            match &rec[0] {
                "x" => x.push(value),
                "y" => y.push(value),
                other => {
                    return Err(ModelError::BadRecord {
                        line,
                        message: format!("group must be \"x\" or \"y\", got {other:?}"),
                    })
                }
            }
        }
        Self::new(x, y)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self, ModelError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

/// Blood-pressure-change dataset embedded from `data/calcium.csv`.
pub fn calcium_fixture() -> TwoSampleData {
    TwoSampleData::from_csv_reader(include_str!("../data/calcium.csv").as_bytes())
        .expect("embedded calcium fixture parses")
}

/// Configuration of the two-sample standardized-effect model. The effect
/// size theta = (mu_y - mu_x) / sigma carries the mixture prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleConfig {
    pub delta: f64,
    pub tau: f64,
    pub eta1: f64,
    pub prior_mu_sd: f64,
    pub sigma2_shape: f64,
    pub sigma2_rate: f64,
}

impl TwoSampleConfig {
    pub fn new(delta: f64, tau: f64, eta1: f64) -> Self {
        Self {
            delta,
            tau,
            eta1,
            prior_mu_sd: 100.0,
            sigma2_shape: 0.01,
            sigma2_rate: 0.01,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("prior_mu_sd", self.prior_mu_sd),
            ("sigma2_shape", self.sigma2_shape),
            ("sigma2_rate", self.sigma2_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Build the two-sample model. Parameters: `mu_x` (unbounded), `sigma2`
/// (positive), `theta` (unbounded); the treated mean is derived as
/// `mu_y = mu_x + theta * sigma`. ("mu_x" plays the role sometimes written
/// mu_A; the control-arm mean.)
pub fn two_sample_model(data: &TwoSampleData, cfg: &TwoSampleConfig) -> Result<BuiltModel, ModelError> {
    cfg.validate()?;
    let hypothesis = IntervalHypothesis::new(0.0, cfg.delta)?;
    let mix = MixturePrior::from_parameters(hypothesis, cfg.tau, cfg.eta1)?;

    let m = data.group_x.len() as f64;
    let n = data.group_y.len() as f64;
    let mean_x = data.group_x.iter().sum::<f64>() / m;
    let mean_y = data.group_y.iter().sum::<f64>() / n;
    let ssx: f64 = data.group_x.iter().map(|v| (v - mean_x).powi(2)).sum();
    let ssy: f64 = data.group_y.iter().map(|v| (v - mean_y).powi(2)).sum();

    let mu_var = cfg.prior_mu_sd * cfg.prior_mu_sd;
    let (a, b) = (cfg.sigma2_shape, cfg.sigma2_rate);
    let ig_const = a * b.ln() - ln_gamma(a);

    let spec = ModelSpec::new(
        vec!["mu_x", "sigma2", "theta"],
        vec![Support::Unbounded, Support::Positive, Support::Unbounded],
        move |t: &[f64]| {
            let (mu, s2, theta) = (t[0], t[1], t[2]);
            let s = s2.sqrt();
            let dev_x = ssx + m * (mean_x - mu) * (mean_x - mu);
            let dy = mean_y - mu - theta * s;
            let dev_y = ssy + n * dy * dy;
            -0.5 * (m + n) * (LN_2PI + s2.ln()) - (dev_x + dev_y) / (2.0 * s2)
                + normal_lpdf(mu, 0.0, mu_var)
                + inv_gamma_lpdf(s2, a, b, ig_const)
                + mix.log_density(theta)
        },
    )?;

    let pooled_var = ((ssx + ssy) / (m + n - 2.0)).max(1e-6);
    Ok(BuiltModel {
        spec,
        init: vec![mean_x, pooled_var, 0.0],
    })
}

// ---------------------------------------------------------------------------
// meta-analysis model
// ---------------------------------------------------------------------------

/// One 2x2 study: deaths and totals per arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetaStudy {
    pub y_treat: u64,
    pub n_treat: u64,
    pub y_ctrl: u64,
    pub n_ctrl: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaAnalysisData {
    studies: Vec<MetaStudy>,
}

impl MetaAnalysisData {
    pub fn new(studies: Vec<MetaStudy>) -> Result<Self, ModelError> {
        if studies.is_empty() {
            return Err(ModelError::NoStudies);
        }
        for (i, s) in studies.iter().enumerate() {
            if s.n_treat == 0 || s.n_ctrl == 0 {
                return Err(ModelError::ZeroTrials { study: i + 1 });
            }
            if s.y_treat > s.n_treat || s.y_ctrl > s.n_ctrl {
                return Err(ModelError::CountsExceedTotal { study: i + 1 });
            }
        }
        Ok(Self { studies })
    }

    pub fn studies(&self) -> &[MetaStudy] {
        &self.studies
    }

    pub fn n_studies(&self) -> usize {
        self.studies.len()
    }

    /// Parse the `study,y_treat,n_treat,y_ctrl,n_ctrl` CSV schema.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, ModelError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let got: Vec<&str> = headers.iter().collect();
        if got != ["study", "y_treat", "n_treat", "y_ctrl", "n_ctrl"] {
            return Err(ModelError::BadHeader {
                expected: "study,y_treat,n_treat,y_ctrl,n_ctrl",
                got: got.join(","),
            });
        }
        let mut studies = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 5 {
                return Err(ModelError::BadRecord {
                    line,
                    message: format!("expected 5 fields, got {}", rec.len()),
                });
            }
            let field = |idx: usize| -> Result<u64, ModelError> {
                rec[idx].parse().map_err(|e| ModelError::BadRecord {
                    line,
                    message: format!("field {:?}: {e}", &rec[idx]),
                })
            };
            studies.push(MetaStudy {
                y_treat: field(1)?,
                n_treat: field(2)?,
                y_ctrl: field(3)?,
                n_ctrl: field(4)?,
            });
        }
        Self::new(studies)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self, ModelError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

/// The 22-trial beta-blocker dataset embedded from `data/betablocker.csv`.
pub fn betablocker_fixture() -> MetaAnalysisData {
    MetaAnalysisData::from_csv_reader(include_str!("../data/betablocker.csv").as_bytes())
        .expect("embedded betablocker fixture parses")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaConfig {
    pub delta: f64,
    pub tau: f64,
    pub eta1: f64,
    pub ctrl_logit_prior_sd: f64,
    pub sigma2_shape: f64,
    pub sigma2_rate: f64,
}

impl MetaConfig {
    pub fn new(delta: f64, tau: f64, eta1: f64) -> Self {
        Self {
            delta,
            tau,
            eta1,
            ctrl_logit_prior_sd: 10.0,
            sigma2_shape: 0.01,
            sigma2_rate: 0.01,
        }
    }

    /// The configuration used for the published table: tau = 1.5 delta,
    /// even prior odds.
    pub fn table_run(delta: f64) -> Self {
        Self::new(delta, 1.5 * delta, 0.5)
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("ctrl_logit_prior_sd", self.ctrl_logit_prior_sd),
            ("sigma2_shape", self.sigma2_shape),
            ("sigma2_rate", self.sigma2_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

fn empirical_logit(y: u64, n: u64) -> f64 {
    let p = (y as f64 + 0.5) / (n as f64 + 1.0);
    (p / (1.0 - p)).ln()
}

/// Build the hierarchical meta-analysis model. Parameters, in order:
/// `ctrl_logit_i` (control-arm logits, unbounded), `effect_i` (per-study
/// log odds ratios, unbounded), `theta` (mean effect, mixture prior),
/// `sigma2` (between-study variance, positive).
pub fn meta_model(data: &MetaAnalysisData, cfg: &MetaConfig) -> Result<BuiltModel, ModelError> {
    cfg.validate()?;
    let hypothesis = IntervalHypothesis::new(0.0, cfg.delta)?;
    let mix = MixturePrior::from_parameters(hypothesis, cfg.tau, cfg.eta1)?;
    let k = data.n_studies();

    let mut names: Vec<String> = (1..=k).map(|i| format!("ctrl_logit_{i}")).collect();
    names.extend((1..=k).map(|i| format!("effect_{i}")));
    names.push("theta".into());
    names.push("sigma2".into());
    let mut supports = vec![Support::Unbounded; 2 * k + 1];
    supports.push(Support::Positive);

    let counts: Vec<[f64; 4]> = data
        .studies
        .iter()
        .map(|s| [s.y_treat as f64, s.n_treat as f64, s.y_ctrl as f64, s.n_ctrl as f64])
        .collect();
    let ln_chooses: Vec<[f64; 2]> = counts
        .iter()
        .map(|c| [ln_choose(c[1], c[0]), ln_choose(c[3], c[2])])
        .collect();
    let ctrl_var = cfg.ctrl_logit_prior_sd * cfg.ctrl_logit_prior_sd;
    let (a, b) = (cfg.sigma2_shape, cfg.sigma2_rate);
    let ig_const = a * b.ln() - ln_gamma(a);

    let spec = ModelSpec::new(names, supports, move |t: &[f64]| {
        let theta = t[2 * k];
        let s2 = t[2 * k + 1];
        let mut lp = inv_gamma_lpdf(s2, a, b, ig_const) + mix.log_density(theta);
        for i in 0..k {
            let ctrl = t[i];
            let effect = t[k + i];
            let c = &counts[i];
            lp += binomial_logit_lpmf(c[0], c[1], ctrl + effect, ln_chooses[i][0])
                + binomial_logit_lpmf(c[2], c[3], ctrl, ln_chooses[i][1])
                + normal_lpdf(ctrl, 0.0, ctrl_var)
                + normal_lpdf(effect, theta, s2);
        }
        lp
    })?;

    let mut init = Vec::with_capacity(2 * k + 2);
    let ctrl_logits: Vec<f64> = data.studies.iter().map(|s| empirical_logit(s.y_ctrl, s.n_ctrl)).collect();
    let effects: Vec<f64> = data
        .studies
        .iter()
        .zip(&ctrl_logits)
        .map(|(s, &c)| empirical_logit(s.y_treat, s.n_treat) - c)
        .collect();
    let mean_effect = effects.iter().sum::<f64>() / k as f64;
    let var_effect = effects.iter().map(|e| (e - mean_effect).powi(2)).sum::<f64>() / k as f64;
    init.extend_from_slice(&ctrl_logits);
    init.extend_from_slice(&effects);
    init.push(mean_effect);
    init.push(var_effect.max(0.01));
    Ok(BuiltModel { spec, init })
}

// ---------------------------------------------------------------------------
// toy model
// ---------------------------------------------------------------------------

/// One observation y ~ N(theta, likelihood_sd^2) with the mixture prior on
/// theta. Small enough that its marginal likelihoods are exactly computable
/// by one-dimensional quadrature, which is what makes it a useful oracle
/// target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyModel {
    pub y_obs: f64,
    pub hypothesis: IntervalHypothesis,
    pub tau: f64,
    pub eta1: f64,
    pub likelihood_sd: f64,
}

impl ToyModel {
    pub fn new(y_obs: f64, hypothesis: IntervalHypothesis, tau: f64, eta1: f64) -> Self {
        Self {
            y_obs,
            hypothesis,
            tau,
            eta1,
            likelihood_sd: 1.0,
        }
    }

    /// Variant with a near-flat likelihood (used to check BF -> 1 when the
    /// data carry no information).
    pub fn with_likelihood_sd(mut self, sd: f64) -> Self {
        self.likelihood_sd = sd;
        self
    }

    pub fn mixture(&self) -> Result<MixturePrior, HypothesisError> {
        MixturePrior::from_parameters(self.hypothesis, self.tau, self.eta1)
    }

    pub fn build(&self) -> Result<BuiltModel, ModelError> {
        if !(self.y_obs.is_finite() && self.likelihood_sd.is_finite() && self.likelihood_sd > 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "toy model needs finite y_obs and positive likelihood_sd, got ({}, {})",
                self.y_obs, self.likelihood_sd
            )));
        }
        let mix = self.mixture()?;
        let y = self.y_obs;
        let var = self.likelihood_sd * self.likelihood_sd;
        let spec = ModelSpec::new(vec!["theta"], vec![Support::Unbounded], move |t: &[f64]| {
            normal_lpdf(y, t[0], var) + mix.log_density(t[0])
        })?;
        // shrink toward the prior center for a sane start
        let center = self.hypothesis.center();
        let shrink = self.tau * self.tau / (self.tau * self.tau + var);
        Ok(BuiltModel {
            spec,
            init: vec![center + shrink * (y - center)],
        })
    }
}

// ---------------------------------------------------------------------------
// classical t-test
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub p_value: f64,
    pub df: u64,
}

/// Equal-variance two-sample t-test (pooled variance, df = m + n - 2),
/// two-sided p-value from the t CDF.
pub fn pooled_t_test(data: &TwoSampleData) -> Result<TTestResult, ModelError> {
    let m = data.group_x.len();
    let n = data.group_y.len();
    if m < 2 || n < 2 {
        return Err(ModelError::TooFewObservations { need: 2, got: m.min(n) });
    }
    let mf = m as f64;
    let nf = n as f64;
    let mean_x = data.group_x.iter().sum::<f64>() / mf;
    let mean_y = data.group_y.iter().sum::<f64>() / nf;
    let ssx: f64 = data.group_x.iter().map(|v| (v - mean_x).powi(2)).sum();
    let ssy: f64 = data.group_y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let df = m + n - 2;
    let pooled = (ssx + ssy) / df as f64;
    if pooled <= 0.0 {
        return Err(ModelError::DegenerateVariance);
    }
    let t = (mean_y - mean_x) / (pooled * (1.0 / mf + 1.0 / nf)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 2");
    let p_value = 2.0 * dist.cdf(-t.abs());
    Ok(TTestResult {
        t,
        p_value,
        df: df as u64,
    })
}
