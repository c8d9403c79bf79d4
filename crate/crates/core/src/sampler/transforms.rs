//! Bijective maps between constrained parameter values and the unconstrained
//! space the sampler random-walks in, with the log-Jacobian of the inverse
//! map for correcting the target density.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("value {value} is on or outside the boundary of its {support:?} support")]
    OutOfSupport { value: f64, support: Support },
}

/// Support descriptor for one scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Unbounded,
    Positive,
    Interval { lower: f64, upper: f64 },
}

impl Support {
    /// Strict-interior membership.
    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            Support::Unbounded => true,
            Support::Positive => x > 0.0,
            Support::Interval { lower, upper } => lower < x && x < upper,
        }
    }

    /// Map a constrained value strictly inside the support to the real line.
    pub fn to_unconstrained(&self, x: f64) -> Result<f64, TransformError> {
        if !self.contains(x) {
            return Err(TransformError::OutOfSupport {
                value: x,
                support: *self,
            });
        }
        Ok(match *self {
            Support::Unbounded => x,
            Support::Positive => x.ln(),
            Support::Interval { lower, upper } => {
                let p = (x - lower) / (upper - lower);
                (p / (1.0 - p)).ln()
            }
        })
    }

    /// Inverse map from the real line back into the support.
    pub fn to_constrained(&self, z: f64) -> f64 {
        match *self {
            Support::Unbounded => z,
            Support::Positive => z.exp(),
            Support::Interval { lower, upper } => lower + (upper - lower) * sigmoid(z),
        }
    }

    /// log |d constrained / d unconstrained| at the unconstrained point `z`.
    pub fn log_jacobian(&self, z: f64) -> f64 {
        match *self {
            Support::Unbounded => 0.0,
            Support::Positive => z,
            Support::Interval { lower, upper } => {
                (upper - lower).ln() - softplus(z) - softplus(-z)
            }
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x), stable in both tails.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
