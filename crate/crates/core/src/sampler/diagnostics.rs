//! Convergence diagnostics: rank-normalized split R-hat and Geyer
//! initial-positive-sequence effective sample size.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use super::DrawMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("split R-hat needs at least 2 chains, got {0}")]
    TooFewChains(usize),
    #[error("diagnostics need at least 100 draws per chain, got {0}")]
    TooFewDraws(usize),
}

/// Per-parameter convergence summary for a multi-chain run.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub parameter_names: Vec<String>,
    /// Effective sample size (summed per-chain Geyer estimates).
    pub ess: Vec<f64>,
    /// Rank-normalized split R-hat.
    pub split_rhat: Vec<f64>,
    /// `[parameter][chain]` means.
    pub chain_means: Vec<Vec<f64>>,
    /// `[parameter][chain]` standard deviations.
    pub chain_sds: Vec<Vec<f64>>,
}

impl Diagnostics {
    pub fn max_split_rhat(&self) -> f64 {
        self.split_rhat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.ess.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn diagnose(draws: &DrawMatrix) -> Result<Diagnostics, DiagnosticsError> {
    if draws.n_chains() < 2 {
        return Err(DiagnosticsError::TooFewChains(draws.n_chains()));
    }
    if draws.n_iterations() < 100 {
        return Err(DiagnosticsError::TooFewDraws(draws.n_iterations()));
    }
    let names = draws.parameter_names().to_vec();
    let mut ess = Vec::with_capacity(names.len());
    let mut rhat = Vec::with_capacity(names.len());
    let mut means = Vec::with_capacity(names.len());
    let mut sds = Vec::with_capacity(names.len());
    for name in &names {
        let chains = draws.parameter_chains(name).expect("name from matrix");
        ess.push(ess_per_chain_sum(&chains));
        rhat.push(split_rhat(&chains));
        let mut m_row = Vec::with_capacity(chains.len());
        let mut s_row = Vec::with_capacity(chains.len());
        for c in &chains {
            let (m, s) = mean_sd(c);
            m_row.push(m);
            s_row.push(s);
        }
        means.push(m_row);
        sds.push(s_row);
    }
    Ok(Diagnostics {
        parameter_names: names,
        ess,
        split_rhat: rhat,
        chain_means: means,
        chain_sds: sds,
    })
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Rank-normalized split R-hat across chains. Each chain is halved, the
/// pooled values are rank-transformed to normal scores, and the classic
/// variance-ratio R-hat is computed on the scores. Returns 1.0 for
/// zero-variance inputs.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves = split_halves(chains);
    if halves.len() < 2 {
        return f64::NAN;
    }
    let scores = rank_normal_scores(&halves);
    let m = scores.len() as f64;
    let n = scores[0].len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let stats: Vec<(f64, f64)> = scores.iter().map(|h| mean_sd(h)).collect();
    let grand = stats.iter().map(|(mu, _)| mu).sum::<f64>() / m;
    let b = n / (m - 1.0) * stats.iter().map(|(mu, _)| (mu - grand).powi(2)).sum::<f64>();
    let w = stats.iter().map(|(_, sd)| sd * sd).sum::<f64>() / m;
    if w <= 0.0 {
        return 1.0;
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

fn split_halves(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut halves = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let n = c.len();
        if n < 4 {
            continue;
        }
        let half = n / 2;
        halves.push(&c[..half]);
        // drop the middle element when the length is odd
        halves.push(&c[n - half..]);
    }
    halves
}

/// Average ranks (ties averaged) mapped through the normal quantile with the
/// Blom-style offset (r - 3/8) / (S + 1/4).
fn rank_normal_scores(halves: &[&[f64]]) -> Vec<Vec<f64>> {
    let total: usize = halves.iter().map(|h| h.len()).sum();
    let mut indexed: Vec<(f64, usize)> = Vec::with_capacity(total);
    for (hi, h) in halves.iter().enumerate() {
        for &v in *h {
            indexed.push((v, hi));
        }
    }
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; total];
    let mut pos_of: Vec<Vec<f64>> = halves.iter().map(|h| Vec::with_capacity(h.len())).collect();
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && indexed[j + 1].0 == indexed[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for r in ranks.iter_mut().take(j + 1).skip(i) {
            *r = avg_rank;
        }
        i = j + 1;
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    let s = total as f64;
    for (k, &(_, hi)) in indexed.iter().enumerate() {
        let z = normal.inverse_cdf((ranks[k] - 0.375) / (s + 0.25));
        pos_of[hi].push(z);
    }
    pos_of
}

/// Sum of per-chain Geyer initial-positive-sequence ESS estimates.
/// Zero-variance chains count their full length.
pub fn ess_per_chain_sum(chains: &[Vec<f64>]) -> f64 {
    chains.iter().map(|c| geyer_ess(c)).sum()
}

/// ESS of a single series via the initial positive sequence: pair the
/// autocorrelations (rho_0 + rho_1), (rho_2 + rho_3), ... and truncate at the
/// first negative pair.
pub fn geyer_ess(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return n as f64;
    }
    let nf = n as f64;
    let mean = chain.iter().sum::<f64>() / nf;
    let var0 = chain.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    if var0 <= 0.0 {
        return nf;
    }
    let rho = |lag: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n - lag {
            s += (chain[i] - mean) * (chain[i + lag] - mean);
        }
        s / (nf * var0)
    };
    // tau = -1 + 2 * sum of positive pairs, starting with rho_0 + rho_1
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (nf / tau.max(1.0)).min(nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn iid_chains(n_chains: usize, n: usize, shift: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_chains)
            .map(|c| {
                (0..n)
                    .map(|_| rng.sample::<f64, _>(StandardNormal) + shift * c as f64)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn iid_chains_have_rhat_near_one() {
        let chains = iid_chains(4, 2000, 0.0, 1);
        let r = split_rhat(&chains);
        assert!((0.999..1.01).contains(&r), "rhat {r}");
    }

    #[test]
    fn shifted_chains_have_large_rhat() {
        let chains = iid_chains(2, 1000, 10.0, 2);
        assert!(split_rhat(&chains) > 2.0);
    }

    #[test]
    fn iid_ess_is_near_sample_size() {
        let chains = iid_chains(1, 10_000, 0.0, 3);
        let e = geyer_ess(&chains[0]);
        assert!((8_000.0..=10_000.0).contains(&e), "ess {e}");
    }

    #[test]
    fn correlated_chain_has_small_ess() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = 0.0;
        let chain: Vec<f64> = (0..5000)
            .map(|_| {
                x = 0.98 * x + rng.sample::<f64, _>(StandardNormal) * 0.2;
                x
            })
            .collect();
        assert!(geyer_ess(&chain) < 1000.0);
    }

    #[test]
    fn constant_chain_counts_fully() {
        assert_eq!(geyer_ess(&vec![2.5; 500]), 500.0);
    }

    #[test]
    fn diagnose_rejects_single_chain() {
        let m = crate::sampler::ModelSpec::new(
            vec!["x"],
            vec![crate::sampler::Support::Unbounded],
            |t: &[f64]| -0.5 * t[0] * t[0],
        )
        .unwrap();
        let cfg = crate::sampler::SamplerConfig {
            chains: 1,
            warmup_iterations: 100,
            sampling_iterations: 200,
            ..Default::default()
        };
        let dm = crate::sampler::run_chains(&m, &cfg, &crate::sampler::Init::Auto).unwrap();
        assert!(matches!(
            diagnose(&dm),
            Err(DiagnosticsError::TooFewChains(1))
        ));
    }

    #[test]
    fn rank_normalization_handles_ties() {
        let chains = vec![vec![1.0; 600], {
            let mut v = vec![1.0; 300];
            v.extend(vec![2.0; 300]);
            v
        }];
        let r = split_rhat(&chains);
        assert!(r.is_finite() && r > 1.0);
    }
}
