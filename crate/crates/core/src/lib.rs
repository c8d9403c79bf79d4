//! Bayesian interval null hypothesis testing from posterior draws.
//!
//! For `H0: |theta - theta0| <= delta` versus `H1: |theta - theta0| > delta`,
//! place a mixture prior on theta — uniform inside the null region with
//! weight `1 - eta1`, a truncated normal outside with weight `eta1` — and
//! sample the posterior as usual. Because the component supports are
//! disjoint, the fraction of posterior draws falling outside the null region
//! estimates the posterior probability of the alternative, and
//!
//! ```text
//! BF10 = (1 - eta1) / eta1 * p / (1 - p)
//! ```
//!
//! is a consistent Bayes factor estimator, for any choice of `eta1`. No
//! custom marginal-likelihood code is needed; draws from any sampler work.
//!
//! The crates here provide the mixture-prior algebra ([`hypothesis`]), a
//! self-contained adaptive random-walk Metropolis engine ([`sampler`]), the
//! draw-based estimator with HDI and interval decision rules ([`inference`]),
//! the two worked models plus a classical t-test ([`models`]), an independent
//! quadrature reference ([`oracle`]), JSON reporting ([`report`]), and the
//! command-line front end ([`cli`]).

pub mod cli;
pub mod hypothesis;
pub mod inference;
pub mod models;
pub mod oracle;
pub mod quad;
pub mod report;
pub mod sampler;

#[cfg(test)]
pub(crate) mod testutil;
