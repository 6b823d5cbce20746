//! Streaming first and second moments with exact-count pooling.
//!
//! The state is the classic `(count, mean, m2)` triple, where `m2` is the
//! sum of squared deviations from the mean. Population variance is
//! `m2 / n`, sample variance `m2 / (n - 1)`. Two accumulators pool with
//!
//! ```text
//! m2 = m2_a + m2_b + (n_a * n_b / (n_a + n_b)) * (mean_a - mean_b)^2
//! ```
//!
//! which is cancellation-free (all three terms are nonnegative), so shards
//! can be combined in any order without losing the second moment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moment accumulator over a stream of finite `f64` observations.
///
/// Accumulators are small `Copy` values and every operation is a pure
/// function returning a fresh accumulator, so they can be sent between
/// threads and merged freely. Invariants maintained by construction:
/// `m2 >= 0`, the empty accumulator is canonically `(0, 0.0, 0.0)`, and a
/// single observation always has `m2 == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParts")]
pub struct MomentAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

/// Unvalidated mirror of the serialized triple; `Deserialize` funnels
/// through [`MomentAccumulator::from_parts`] so corrupt states (negative
/// `m2`, nonzero moments on an empty count) are rejected at the boundary.
#[derive(Deserialize)]
struct RawParts {
    count: u64,
    mean: f64,
    m2: f64,
}

impl TryFrom<RawParts> for MomentAccumulator {
    type Error = Error;

    fn try_from(raw: RawParts) -> Result<Self> {
        Self::from_parts(raw.count, raw.mean, raw.m2)
    }
}

impl Default for MomentAccumulator {
    fn default() -> Self {
        Self::empty()
    }
}

impl MomentAccumulator {
    /// The identity element for [`merge`](Self::merge): no observations.
    pub fn empty() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    /// Two-pass construction straight from the definitions: the mean first,
    /// then the summed squared deviations. This is the reference the
    /// incremental paths (`push`/`remove`/`merge`) are tested against.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteAt { index, value });
            }
        }
        if values.is_empty() {
            return Ok(Self::empty());
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|&x| (x - mean) * (x - mean)).sum();
        Ok(Self {
            count: values.len() as u64,
            mean,
            m2,
        })
    }

    /// Rebuilds an accumulator from its serialized triple, rejecting states
    /// that violate the invariants.
    pub fn from_parts(count: u64, mean: f64, m2: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::Invalid(format!("non-finite mean: {mean}")));
        }
        if !m2.is_finite() || m2 < 0.0 {
            return Err(Error::Invalid(format!(
                "m2 must be finite and nonnegative, got {m2}"
            )));
        }
        if count == 0 && (mean != 0.0 || m2 != 0.0) {
            return Err(Error::Invalid(
                "empty accumulator must have mean = 0 and m2 = 0".into(),
            ));
        }
        if count == 1 && m2 != 0.0 {
            return Err(Error::Invalid(
                "a single observation must have m2 = 0".into(),
            ));
        }
        Ok(Self { count, mean, m2 })
    }

    /// Adds one observation (Welford update).
    pub fn push(self, x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let count = self.count.checked_add(1).ok_or(Error::CountOverflow)?;
        let delta = x - self.mean;
        let mean = self.mean + delta / count as f64;
        let m2 = self.m2 + delta * (x - mean);
        Ok(Self { count, mean, m2 })
    }

    /// Removes one observation, inverting [`push`](Self::push).
    ///
    /// The caller is trusted that `x` was actually a member; membership is
    /// not recoverable from the moments alone. Rounding residue can drive
    /// the downdated `m2` a hair below zero, so it is clamped back to 0.
    pub fn remove(self, x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        match self.count {
            0 => Err(Error::RemoveFromEmpty),
            1 => Ok(Self::empty()),
            _ => {
                let count = self.count - 1;
                let delta = x - self.mean;
                let mean = self.mean - delta / count as f64;
                let m2 = if count == 1 {
                    0.0
                } else {
                    (self.m2 - delta * (x - mean)).max(0.0)
                };
                Ok(Self { count, mean, m2 })
            }
        }
    }

    /// Pools two accumulators as if their underlying datasets were
    /// concatenated.
    ///
    /// Both the weighted mean and the cross term are evaluated symmetrically
    /// in `(self, other)`, so `a.merge(b)` and `b.merge(a)` round to
    /// bit-identical results. Merging with the empty accumulator returns the
    /// other side unchanged.
    pub fn merge(self, other: Self) -> Result<Self> {
        if other.count == 0 {
            return Ok(self);
        }
        if self.count == 0 {
            return Ok(other);
        }
        let count = self
            .count
            .checked_add(other.count)
            .ok_or(Error::CountOverflow)?;
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let n = count as f64;
        let mean = (n1 * self.mean + n2 * other.mean) / n;
        let delta = self.mean - other.mean;
        let m2 = self.m2 + other.m2 + (n1 * n2 / n) * (delta * delta);
        Ok(Self { count, mean, m2 })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Raw sum of squared deviations. Zero for fewer than two observations.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn mean(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::Empty);
        }
        Ok(self.mean)
    }

    /// `m2 / n`, the 1/n-denominator variance.
    pub fn population_variance(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::Empty);
        }
        Ok(self.m2 / self.count as f64)
    }

    /// `m2 / (n - 1)`, the unbiased-estimator convention.
    pub fn sample_variance(&self) -> Result<f64> {
        if self.count < 2 {
            return Err(Error::TooFew {
                what: "sample variance",
                min: 2,
                got: self.count,
            });
        }
        Ok(self.m2 / (self.count - 1) as f64)
    }
}
