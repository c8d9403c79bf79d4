//! Interval hypotheses and the mixture-prior algebra.
//!
//! An interval null hypothesis splits the real line into a closed null region
//! `Theta0 = [theta0 - delta, theta0 + delta]` and its complement `Theta1`.
//! The null prior is uniform on `Theta0`, the alternative prior is a normal
//! centered at `theta0` truncated to `Theta1`, and the two combine into a
//! single mixture prior with weight `eta1` on the alternative. Because the
//! component supports are disjoint, the prior (and posterior) mass of
//! `Theta1` is exactly the mass attributed to the alternative component,
//! which is what makes Bayes factors computable from plain posterior draws.
//!
//! Densities are carried in log form internally; the alternative component
//! would otherwise underflow in the tails for small scales.

use std::sync::Arc;

use statrs::function::erf::erfc;
use thiserror::Error;

use crate::quad::{integrate_1d, Domain, QuadratureConfig};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Standard normal upper tail `1 - Phi(z)`, accurate in the far tail.
pub(crate) fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Error, PartialEq)]
pub enum HypothesisError {
    #[error("hypothesis center must be finite, got {0}")]
    InvalidCenter(f64),
    #[error("hypothesis half-width must be positive and finite, got {0}")]
    InvalidHalfWidth(f64),
    #[error("theta must be finite, got {0}")]
    NonFiniteTheta(f64),
    #[error("prior scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("truncation leaves no representable mass outside the null region (delta/tau = {0})")]
    TruncationUnderflow(f64),
    #[error("eta1 must lie strictly inside (0, 1), got {0}")]
    InvalidEta1(f64),
    #[error("mixture components must share the same hypothesis")]
    MismatchedHypotheses,
    #[error("degenerate decomposition: {region} region mass {mass:e} is not strictly positive")]
    DegenerateDecomposition { region: &'static str, mass: f64 },
    #[error("region-mass quadrature did not converge")]
    MassQuadratureFailed,
}

/// Which side of the partition a point falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Null,
    Alternative,
}

/// The partition `Theta0 = [center - half_width, center + half_width]`
/// versus its complement. Boundary points belong to the null region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalHypothesis {
    center: f64,
    half_width: f64,
}

impl IntervalHypothesis {
    pub fn new(center: f64, half_width: f64) -> Result<Self, HypothesisError> {
        if !center.is_finite() {
            return Err(HypothesisError::InvalidCenter(center));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(HypothesisError::InvalidHalfWidth(half_width));
        }
        Ok(Self { center, half_width })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Endpoints of the null region.
    pub fn null_bounds(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// Classify a point. Boundary points are `Null`.
    pub fn region_of(&self, theta: f64) -> Result<Region, HypothesisError> {
        if !theta.is_finite() {
            return Err(HypothesisError::NonFiniteTheta(theta));
        }
        Ok(if self.in_null(theta) {
            Region::Null
        } else {
            Region::Alternative
        })
    }

    /// Unchecked membership test; `NaN` is never in the null region.
    #[inline]
    pub fn in_null(&self, theta: f64) -> bool {
        (theta - self.center).abs() <= self.half_width
    }
}

/// Uniform prior on the null region, density `1/(2 delta)` inside, 0 outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformNullPrior {
    hypothesis: IntervalHypothesis,
}

impl UniformNullPrior {
    pub fn new(hypothesis: IntervalHypothesis) -> Self {
        Self { hypothesis }
    }

    pub fn hypothesis(&self) -> &IntervalHypothesis {
        &self.hypothesis
    }

    pub fn density(&self, theta: f64) -> f64 {
        if self.hypothesis.in_null(theta) {
            0.5 / self.hypothesis.half_width()
        } else {
            0.0
        }
    }

    pub fn log_density(&self, theta: f64) -> f64 {
        if self.hypothesis.in_null(theta) {
            -(2.0 * self.hypothesis.half_width()).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Density value at the region boundary (approached from inside).
    pub fn boundary_density(&self) -> f64 {
        0.5 / self.hypothesis.half_width()
    }
}

/// Normal prior centered at the hypothesis center with standard deviation
/// `scale`, truncated to the alternative region. Since the truncation is
/// symmetric about the center, the normalizing mass is `2 (1 - Phi(delta/tau))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormalAltPrior {
    hypothesis: IntervalHypothesis,
    scale: f64,
    log_mass: f64,
}

impl TruncatedNormalAltPrior {
    pub fn new(hypothesis: IntervalHypothesis, scale: f64) -> Result<Self, HypothesisError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(HypothesisError::InvalidScale(scale));
        }
        let z = hypothesis.half_width() / scale;
        let mass = 2.0 * normal_sf(z);
        if mass <= 0.0 {
            return Err(HypothesisError::TruncationUnderflow(z));
        }
        Ok(Self {
            hypothesis,
            scale,
            log_mass: mass.ln(),
        })
    }

    pub fn hypothesis(&self) -> &IntervalHypothesis {
        &self.hypothesis
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn density(&self, theta: f64) -> f64 {
        self.log_density(theta).exp()
    }

    pub fn log_density(&self, theta: f64) -> f64 {
        if self.hypothesis.in_null(theta) || !theta.is_finite() {
            return f64::NEG_INFINITY;
        }
        let z = (theta - self.hypothesis.center()) / self.scale;
        -0.5 * z * z - self.scale.ln() - LN_SQRT_2PI - self.log_mass
    }

    /// Density limit as theta approaches the boundary from the alternative side.
    pub fn boundary_density(&self) -> f64 {
        let z = self.hypothesis.half_width() / self.scale;
        (-0.5 * z * z - self.scale.ln() - LN_SQRT_2PI - self.log_mass).exp()
    }
}

/// The combined prior `(1 - eta1) pi0 + eta1 pi1` over the whole line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixturePrior {
    null_prior: UniformNullPrior,
    alt_prior: TruncatedNormalAltPrior,
    eta1: f64,
}

impl MixturePrior {
    pub fn new(
        null_prior: UniformNullPrior,
        alt_prior: TruncatedNormalAltPrior,
        eta1: f64,
    ) -> Result<Self, HypothesisError> {
        if null_prior.hypothesis != alt_prior.hypothesis {
            return Err(HypothesisError::MismatchedHypotheses);
        }
        if !(eta1.is_finite() && 0.0 < eta1 && eta1 < 1.0) {
            return Err(HypothesisError::InvalidEta1(eta1));
        }
        Ok(Self {
            null_prior,
            alt_prior,
            eta1,
        })
    }

    /// Build both components from the hypothesis and the alternative scale.
    pub fn from_parameters(
        hypothesis: IntervalHypothesis,
        scale: f64,
        eta1: f64,
    ) -> Result<Self, HypothesisError> {
        Self::new(
            UniformNullPrior::new(hypothesis),
            TruncatedNormalAltPrior::new(hypothesis, scale)?,
            eta1,
        )
    }

    pub fn hypothesis(&self) -> &IntervalHypothesis {
        self.null_prior.hypothesis()
    }

    pub fn null_prior(&self) -> &UniformNullPrior {
        &self.null_prior
    }

    pub fn alt_prior(&self) -> &TruncatedNormalAltPrior {
        &self.alt_prior
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    /// Mixture density. The component supports are disjoint, so exactly one
    /// term is ever nonzero.
    pub fn density(&self, theta: f64) -> f64 {
        if self.hypothesis().in_null(theta) {
            (1.0 - self.eta1) * self.null_prior.density(theta)
        } else {
            self.eta1 * self.alt_prior.density(theta)
        }
    }

    pub fn log_density(&self, theta: f64) -> f64 {
        if self.hypothesis().in_null(theta) {
            (1.0 - self.eta1).ln() + self.null_prior.log_density(theta)
        } else {
            self.eta1.ln() + self.alt_prior.log_density(theta)
        }
    }
}

/// A prior density truncated to the two regions and renormalized, together
/// with the alternative-region mass. Recombining the parts reproduces the
/// (normalized) input density.
pub struct Decomposition {
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    hypothesis: IntervalHypothesis,
    mass_null: f64,
    mass_alt: f64,
}

impl Decomposition {
    pub fn eta1(&self) -> f64 {
        self.mass_alt / (self.mass_null + self.mass_alt)
    }

    pub fn hypothesis(&self) -> &IntervalHypothesis {
        &self.hypothesis
    }

    /// Input density restricted to the null region, renormalized.
    pub fn null_density(&self, theta: f64) -> f64 {
        if self.hypothesis.in_null(theta) {
            (self.density)(theta) / self.mass_null
        } else {
            0.0
        }
    }

    /// Input density restricted to the alternative region, renormalized.
    pub fn alt_density(&self, theta: f64) -> f64 {
        if self.hypothesis.in_null(theta) {
            0.0
        } else {
            (self.density)(theta) / self.mass_alt
        }
    }

    /// Mixture recombination `(1 - eta1) pi0 + eta1 pi1`.
    pub fn recombined(&self, theta: f64) -> f64 {
        let eta1 = self.eta1();
        (1.0 - eta1) * self.null_density(theta) + eta1 * self.alt_density(theta)
    }
}

/// Split an integrable prior density into null and alternative components by
/// truncation, computing the region masses by adaptive quadrature split
/// exactly at the region boundaries. Accepts unnormalized densities; the
/// recombination then reproduces the normalized input.
pub fn decompose<F>(density: F, hypothesis: IntervalHypothesis) -> Result<Decomposition, HypothesisError>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let cfg = QuadratureConfig::default();
    let (lo, hi) = hypothesis.null_bounds();
    let inside = integrate_1d(&density, Domain::Interval { lower: lo, upper: hi }, &cfg);
    let below = integrate_1d(&density, Domain::Below { upper: lo }, &cfg);
    let above = integrate_1d(&density, Domain::Above { lower: hi }, &cfg);
    if !(inside.converged && below.converged && above.converged) {
        return Err(HypothesisError::MassQuadratureFailed);
    }
    let mass_null = inside.value;
    let mass_alt = below.value + above.value;
    if !(mass_null.is_finite() && mass_null > 0.0) {
        return Err(HypothesisError::DegenerateDecomposition {
            region: "null",
            mass: mass_null,
        });
    }
    if !(mass_alt.is_finite() && mass_alt > 0.0) {
        return Err(HypothesisError::DegenerateDecomposition {
            region: "alternative",
            mass: mass_alt,
        });
    }
    Ok(Decomposition {
        density: Arc::new(density),
        hypothesis,
        mass_null,
        mass_alt,
    })
}
