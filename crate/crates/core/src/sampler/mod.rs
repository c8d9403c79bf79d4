//! Component-wise adaptive random-walk Metropolis.
//!
//! Each parameter is proposed in its unconstrained space (see
//! [`transforms::Support`]) with a Gaussian step whose scale adapts by
//! Robbins-Monro toward a target acceptance rate during warmup and is frozen
//! for the sampling phase. Chains draw from independent ChaCha streams keyed
//! by `(seed, chain index)`, so a run is bit-reproducible regardless of how
//! chains are scheduled onto threads.

mod diagnostics;
mod transforms;

pub use diagnostics::{diagnose, ess_per_chain_sum, geyer_ess, split_rhat, Diagnostics, DiagnosticsError};
pub(crate) use transforms::softplus;
pub use transforms::{Support, TransformError};

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("model dimension mismatch: {names} names vs {supports} supports")]
    DimensionMismatch { names: usize, supports: usize },
    #[error("model must have at least one parameter")]
    EmptyModel,
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("init vector has length {got}, model has dimension {want}")]
    InitDimensionMismatch { got: usize, want: usize },
    #[error("init value {value} for parameter {name:?} is outside its support")]
    InitOutOfSupport { name: String, value: f64 },
    #[error("chain {chain}: no finite log-posterior found in {attempts} initialization attempts")]
    InitializationFailed { chain: usize, attempts: usize },
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// An unnormalized log-posterior over a named parameter vector in constrained
/// space. The closure must be pure: it is called concurrently from chain
/// threads.
#[derive(Clone)]
pub struct ModelSpec {
    names: Vec<String>,
    supports: Vec<Support>,
    log_posterior: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("names", &self.names)
            .field("supports", &self.supports)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    pub fn new<S, F>(names: Vec<S>, supports: Vec<Support>, log_posterior: F) -> Result<Self, SamplerError>
    where
        S: Into<String>,
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != supports.len() {
            return Err(SamplerError::DimensionMismatch {
                names: names.len(),
                supports: supports.len(),
            });
        }
        if names.is_empty() {
            return Err(SamplerError::EmptyModel);
        }
        Ok(Self {
            names,
            supports,
            log_posterior: Arc::new(log_posterior),
        })
    }

    pub fn dimension(&self) -> usize {
        self.names.len()
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.names
    }

    pub fn supports(&self) -> &[Support] {
        &self.supports
    }

    pub fn log_posterior(&self, theta: &[f64]) -> f64 {
        (self.log_posterior)(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup_iterations: usize,
    pub sampling_iterations: usize,
    pub seed: u64,
    pub target_acceptance: f64,
    pub initial_step_scale: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup_iterations: 10_000,
            sampling_iterations: 20_000,
            seed: 1,
            target_acceptance: 0.44,
            initial_step_scale: 0.1,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.chains < 1 || self.warmup_iterations < 1 || self.sampling_iterations < 1 {
            return Err(SamplerError::InvalidConfig(
                "chains, warmup_iterations and sampling_iterations must all be >= 1".into(),
            ));
        }
        if !(self.target_acceptance > 0.1 && self.target_acceptance < 0.9) {
            return Err(SamplerError::InvalidConfig(format!(
                "target_acceptance must lie in (0.1, 0.9), got {}",
                self.target_acceptance
            )));
        }
        if !(self.initial_step_scale.is_finite() && self.initial_step_scale > 0.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "initial_step_scale must be positive, got {}",
                self.initial_step_scale
            )));
        }
        Ok(())
    }
}

/// Chain starting point.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Uniform(-2, 2) per coordinate in unconstrained space, retried until
    /// the log-posterior is finite.
    Auto,
    /// A constrained-space point; each chain jitters it with N(0, 0.1^2)
    /// unconstrained noise from its own stream.
    Point(Vec<f64>),
}

const INIT_ATTEMPTS: usize = 100;
const INIT_JITTER_SD: f64 = 0.1;

/// Post-warmup draws in constrained space, `[chain][iteration][parameter]`.
#[derive(Debug, Clone)]
pub struct DrawMatrix {
    values: Vec<f64>,
    names: Vec<String>,
    n_chains: usize,
    n_iterations: usize,
    seed: u64,
    acceptance_rates: Vec<Vec<f64>>,
    step_scales: Vec<Vec<f64>>,
}

impl DrawMatrix {
    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn n_iterations(&self) -> usize {
        self.n_iterations
    }

    pub fn n_total(&self) -> usize {
        self.n_chains * self.n_iterations
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.names
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn value(&self, chain: usize, iteration: usize, parameter: usize) -> f64 {
        let dim = self.names.len();
        self.values[(chain * self.n_iterations + iteration) * dim + parameter]
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Post-warmup acceptance rate for (chain, parameter).
    pub fn acceptance_rate(&self, chain: usize, parameter: usize) -> f64 {
        self.acceptance_rates[chain][parameter]
    }

    /// Proposal scales frozen at the end of warmup, per chain.
    pub fn step_scales(&self, chain: usize) -> &[f64] {
        &self.step_scales[chain]
    }

    /// All draws of one parameter, grouped by chain.
    pub fn parameter_chains(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        let p = self.parameter_index(name)?;
        let dim = self.names.len();
        let mut out = Vec::with_capacity(self.n_chains);
        for c in 0..self.n_chains {
            let mut chain = Vec::with_capacity(self.n_iterations);
            let base = c * self.n_iterations * dim;
            for i in 0..self.n_iterations {
                chain.push(self.values[base + i * dim + p]);
            }
            out.push(chain);
        }
        Some(out)
    }

    /// CSV export with header `chain,iteration,<param names...>` and full
    /// 17-significant-digit rendering.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "chain,iteration")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        let dim = self.names.len();
        for c in 0..self.n_chains {
            for i in 0..self.n_iterations {
                write!(w, "{c},{i}")?;
                let base = (c * self.n_iterations + i) * dim;
                for p in 0..dim {
                    write!(w, ",{:.16e}", self.values[base + p])?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

struct ChainOutput {
    draws: Vec<f64>,
    accepted: Vec<u64>,
    step_scales: Vec<f64>,
}

/// Run all chains, each on its own thread.
pub fn run_chains(model: &ModelSpec, config: &SamplerConfig, init: &Init) -> Result<DrawMatrix, SamplerError> {
    run_chains_capped(model, config, init, usize::MAX)
}

/// Like [`run_chains`] but running at most `max_parallel` chains at a time.
/// The result is identical for any cap.
pub fn run_chains_capped(
    model: &ModelSpec,
    config: &SamplerConfig,
    init: &Init,
    max_parallel: usize,
) -> Result<DrawMatrix, SamplerError> {
    config.validate()?;
    let dim = model.dimension();
    if let Init::Point(p) = init {
        if p.len() != dim {
            return Err(SamplerError::InitDimensionMismatch {
                got: p.len(),
                want: dim,
            });
        }
        for (i, (&v, s)) in p.iter().zip(model.supports()).enumerate() {
            if !s.contains(v) {
                return Err(SamplerError::InitOutOfSupport {
                    name: model.parameter_names()[i].clone(),
                    value: v,
                });
            }
        }
    }
    let init_z = match init {
        Init::Auto => None,
        Init::Point(p) => {
            let mut z = Vec::with_capacity(dim);
            for (&v, s) in p.iter().zip(model.supports()) {
                z.push(s.to_unconstrained(v)?);
            }
            Some(z)
        }
    };

    let cap = max_parallel.max(1);
    let mut outputs: Vec<Option<Result<ChainOutput, SamplerError>>> =
        (0..config.chains).map(|_| None).collect();
    for batch_start in (0..config.chains).step_by(cap) {
        let batch_end = (batch_start + cap).min(config.chains);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chain in batch_start..batch_end {
                let init_z = init_z.clone();
                handles.push((
                    chain,
                    scope.spawn(move || run_chain(model, config, init_z.as_deref(), chain)),
                ));
            }
            for (chain, h) in handles {
                outputs[chain] = Some(h.join().expect("chain thread panicked"));
            }
        });
    }

    let mut values = Vec::with_capacity(config.chains * config.sampling_iterations * dim);
    let mut acceptance_rates = Vec::with_capacity(config.chains);
    let mut step_scales = Vec::with_capacity(config.chains);
    for out in outputs.into_iter().map(Option::unwrap) {
        let out = out?;
        values.extend_from_slice(&out.draws);
        acceptance_rates.push(
            out.accepted
                .iter()
                .map(|&a| a as f64 / config.sampling_iterations as f64)
                .collect(),
        );
        step_scales.push(out.step_scales);
    }
    Ok(DrawMatrix {
        values,
        names: model.parameter_names().to_vec(),
        n_chains: config.chains,
        n_iterations: config.sampling_iterations,
        seed: config.seed,
        acceptance_rates,
        step_scales,
    })
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64 + 1);
    rng
}

fn run_chain(
    model: &ModelSpec,
    config: &SamplerConfig,
    init_z: Option<&[f64]>,
    chain: usize,
) -> Result<ChainOutput, SamplerError> {
    let dim = model.dimension();
    let supports = model.supports();
    let mut rng = chain_rng(config.seed, chain);

    let mut x_buf = vec![0.0; dim];
    let log_post_u = |z: &[f64], x_buf: &mut [f64]| -> f64 {
        let mut jac = 0.0;
        for p in 0..dim {
            x_buf[p] = supports[p].to_constrained(z[p]);
            jac += supports[p].log_jacobian(z[p]);
        }
        let lp = model.log_posterior(x_buf);
        if lp.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp + jac
        }
    };

    // Initialization: jittered point or uniform box, up to INIT_ATTEMPTS.
    let mut z = vec![0.0; dim];
    let mut lp = f64::NEG_INFINITY;
    let mut found = false;
    for _ in 0..INIT_ATTEMPTS {
        for p in 0..dim {
            let noise: f64 = match init_z {
                Some(z0) => z0[p] + INIT_JITTER_SD * rng.sample::<f64, _>(StandardNormal),
                None => rng.random_range(-2.0..2.0),
            };
            z[p] = noise;
        }
        lp = log_post_u(&z, &mut x_buf);
        if lp.is_finite() {
            found = true;
            break;
        }
    }
    if !found {
        return Err(SamplerError::InitializationFailed {
            chain,
            attempts: INIT_ATTEMPTS,
        });
    }

    let mut scales = vec![config.initial_step_scale; dim];
    let mut draws = vec![0.0; config.sampling_iterations * dim];
    let mut accepted = vec![0u64; dim];

    for t in 1..=config.warmup_iterations {
        let gamma = (t as f64).powf(-0.6);
        sweep(
            model, supports, &mut rng, &mut z, &mut lp, &mut scales, &mut x_buf,
            Some((gamma, config.target_acceptance)),
            &mut accepted,
        );
    }
    accepted.iter_mut().for_each(|a| *a = 0);
    for it in 0..config.sampling_iterations {
        sweep(
            model, supports, &mut rng, &mut z, &mut lp, &mut scales, &mut x_buf,
            None,
            &mut accepted,
        );
        let base = it * dim;
        for p in 0..dim {
            draws[base + p] = supports[p].to_constrained(z[p]);
        }
    }

    Ok(ChainOutput {
        draws,
        accepted,
        step_scales: scales,
    })
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn sweep(
    model: &ModelSpec,
    supports: &[Support],
    rng: &mut ChaCha8Rng,
    z: &mut [f64],
    lp: &mut f64,
    scales: &mut [f64],
    x_buf: &mut [f64],
    adapt: Option<(f64, f64)>,
    accepted: &mut [u64],
) {
    let dim = z.len();
    for p in 0..dim {
        let step: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let old = z[p];
        z[p] = old + scales[p] * step;

        let mut jac = 0.0;
        for (q, s) in supports.iter().enumerate() {
            x_buf[q] = s.to_constrained(z[q]);
            jac += s.log_jacobian(z[q]);
        }
        let lp_model = model.log_posterior(x_buf);
        let lp_new = if lp_model.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp_model + jac
        };

        let log_alpha = lp_new - *lp;
        let alpha = if log_alpha.is_nan() {
            0.0
        } else if log_alpha >= 0.0 {
            1.0
        } else {
            log_alpha.exp()
        };
        if u < alpha {
            *lp = lp_new;
            accepted[p] += 1;
        } else {
            z[p] = old;
        }
        if let Some((gamma, target)) = adapt {
            scales[p] = (scales[p] * (gamma * (alpha - target)).exp()).clamp(1e-10, 1e10);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal_model() -> ModelSpec {
        ModelSpec::new(
            vec!["x"],
            vec![Support::Unbounded],
            |t: &[f64]| -0.5 * t[0] * t[0],
        )
        .unwrap()
    }

    fn cfg(chains: usize, warmup: usize, draws: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            chains,
            warmup_iterations: warmup,
            sampling_iterations: draws,
            seed,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn standard_normal_moments_recovered() {
        let dm = run_chains(&std_normal_model(), &cfg(4, 2000, 20_000, 42), &Init::Auto).unwrap();
        let pooled: Vec<f64> = dm.parameter_chains("x").unwrap().concat();
        let n = pooled.len() as f64;
        let mean = pooled.iter().sum::<f64>() / n;
        let sd = (pooled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((0.97..1.03).contains(&sd), "sd {sd}");
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let m = std_normal_model();
        let c = cfg(2, 500, 2000, 7);
        let a = run_chains(&m, &c, &Init::Auto).unwrap();
        let b = run_chains(&m, &c, &Init::Auto).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.acceptance_rates, b.acceptance_rates);
        let c2 = cfg(2, 500, 2000, 8);
        let d = run_chains(&m, &c2, &Init::Auto).unwrap();
        assert_ne!(a.values, d.values);
    }

    #[test]
    fn chain_parallelism_cap_does_not_change_results() {
        let m = std_normal_model();
        let c = cfg(4, 200, 500, 3);
        let a = run_chains_capped(&m, &c, &Init::Auto, 1).unwrap();
        let b = run_chains_capped(&m, &c, &Init::Auto, 4).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn exponential_target_respects_support() {
        // target: exponential(1) on x > 0, log density -x
        let m = ModelSpec::new(vec!["x"], vec![Support::Positive], |t: &[f64]| -t[0]).unwrap();
        let dm = run_chains(&m, &cfg(4, 2000, 20_000, 11), &Init::Auto).unwrap();
        let pooled: Vec<f64> = dm.parameter_chains("x").unwrap().concat();
        assert!(pooled.iter().all(|&x| x > 0.0));
        let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
        assert!((0.97..1.03).contains(&mean), "mean {mean}");
    }

    #[test]
    fn proposal_scales_frozen_after_warmup() {
        // same warmup + seed, different sampling lengths => identical frozen scales
        let m = std_normal_model();
        let short = run_chains(&m, &cfg(2, 1000, 1, 5), &Init::Auto).unwrap();
        let long = run_chains(&m, &cfg(2, 1000, 4000, 5), &Init::Auto).unwrap();
        for c in 0..2 {
            assert_eq!(short.step_scales(c), long.step_scales(c));
        }
    }

    #[test]
    fn init_point_out_of_support_is_rejected() {
        let m = ModelSpec::new(vec!["x"], vec![Support::Positive], |t: &[f64]| -t[0]).unwrap();
        let err = run_chains(&m, &cfg(1, 10, 10, 1), &Init::Point(vec![-1.0])).unwrap_err();
        assert!(matches!(err, SamplerError::InitOutOfSupport { .. }));
    }

    #[test]
    fn unreachable_target_fails_initialization() {
        let m = ModelSpec::new(vec!["x"], vec![Support::Unbounded], |_: &[f64]| {
            f64::NEG_INFINITY
        })
        .unwrap();
        let err = run_chains(&m, &cfg(1, 10, 10, 1), &Init::Auto).unwrap_err();
        assert!(matches!(err, SamplerError::InitializationFailed { .. }));
    }

    #[test]
    fn ks_statistic_below_critical_for_symmetric_target() {
        // detailed-balance smoke check against the analytic normal CDF
        let dm = run_chains(&std_normal_model(), &cfg(4, 2000, 10_000, 99), &Init::Auto).unwrap();
        let chains = dm.parameter_chains("x").unwrap();
        let ess = ess_per_chain_sum(&chains);
        let mut pooled: Vec<f64> = chains.concat();
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = pooled.len() as f64;
        let mut d_stat: f64 = 0.0;
        for (i, &x) in pooled.iter().enumerate() {
            let cdf = crate::testutil::normal_cdf_indep(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            d_stat = d_stat.max((cdf - lo).abs()).max((hi - cdf).abs());
        }
        // critical value at alpha = 0.001 with the ESS-adjusted sample size
        let critical = (2.0_f64 / 0.001).ln().sqrt() / (2.0 * ess).sqrt();
        assert!(
            d_stat < critical,
            "KS statistic {d_stat} >= critical {critical} (ess {ess})"
        );
    }

    #[test]
    fn csv_export_has_17_significant_digits() {
        let m = std_normal_model();
        let dm = run_chains(&m, &cfg(2, 50, 3, 2), &Init::Auto).unwrap();
        let mut buf = Vec::new();
        dm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "chain,iteration,x");
        let row = lines.next().unwrap();
        let value = row.split(',').nth(2).unwrap();
        let reparsed: f64 = value.parse().unwrap();
        assert_eq!(reparsed, dm.value(0, 0, 0));
        assert!(value.contains('e') && value.split('.').nth(1).unwrap().len() >= 16);
        assert_eq!(text.lines().count(), 1 + 2 * 3);
    }
}
