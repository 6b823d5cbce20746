//! Closed-form bounds tying a dataset's variance to its extremes, members,
//! and subset statistics, plus the exact decompositions behind them.
//!
//! Everything here is stated in the population convention: `variance` means
//! the second central moment over `n`, never over `n - 1`. Reports using
//! the sample convention are converted before they reach this module (see
//! [`crate::audit::normalize`]).
//!
//! All of the inequalities are theorems about real data, so on any summary
//! computed from an actual dataset every [`BoundResult`] comes back
//! satisfied; slack below `-tau` is proof that a claimed summary is
//! impossible. That one-sidedness is what the audit layer builds on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentAccumulator;

/// Relative tolerance backing [`BoundResult::satisfied`]: a check passes
/// when `slack >= -DEFAULT_REL_TOL * max(1, |bound|, |observed|)`. Chosen
/// so float noise on adversarially scaled data never flags a true theorem,
/// while real violations (which are macroscopic) always trip it.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Scale used for slack tolerances: `max(1, |bound|, |observed|)`.
pub(crate) fn tol_scale(bound: f64, observed: f64) -> f64 {
    1.0_f64.max(bound.abs()).max(observed.abs())
}

/// Point statistics for one dataset: size, mean, population variance, and
/// optionally the attained extremes.
///
/// The ordering `min <= mean <= max` is deliberately *not* enforced at
/// construction: the audit layer has to represent claimed summaries that
/// violate it, and flags them through its own checks. Operations here
/// validate the preconditions they actually rely on (`n`, finiteness,
/// `variance >= 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub n: u64,
    pub mean: f64,
    /// Population variance, `m2 / n`.
    pub variance: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl DataSummary {
    pub fn new(n: u64, mean: f64, variance: f64) -> Result<Self> {
        let s = Self {
            n,
            mean,
            variance,
            min: None,
            max: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Attaches attained extremes.
    pub fn with_range(mut self, min: f64, max: f64) -> Self {
        self.min = Some(min);
        self.max = Some(max);
        self
    }

    /// Summary of a concrete dataset: two-pass moments plus a min/max scan.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let acc = MomentAccumulator::from_values(values)?;
        if acc.is_empty() {
            return Err(Error::TooFew {
                what: "data summary",
                min: 1,
                got: 0,
            });
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self::from_accumulator(&acc)?.with_range(min, max))
    }

    /// Summary from an accumulator; extremes are unknown there.
    pub fn from_accumulator(acc: &MomentAccumulator) -> Result<Self> {
        Ok(Self {
            n: acc.count(),
            mean: acc.mean()?,
            variance: acc.population_variance()?,
            min: None,
            max: None,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::TooFew {
                what: "data summary",
                min: 1,
                got: 0,
            });
        }
        if !self.mean.is_finite() {
            return Err(Error::Invalid(format!("non-finite mean: {}", self.mean)));
        }
        if !self.variance.is_finite() || self.variance < 0.0 {
            return Err(Error::Invalid(format!(
                "variance must be finite and nonnegative, got {}",
                self.variance
            )));
        }
        for (name, value) in [("min", self.min), ("max", self.max)] {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(Error::Invalid(format!("non-finite {name}: {v}")));
                }
            }
        }
        Ok(())
    }

    fn range(&self) -> Result<(f64, f64)> {
        let min = self.min.ok_or(Error::MissingField("min"))?;
        let max = self.max.ok_or(Error::MissingField("max"))?;
        Ok((min, max))
    }
}

/// Claimed statistics for a subset: its size plus at least one of the
/// subset mean and the subset population variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub size: u64,
    pub mean: Option<f64>,
    /// Population variance of the subset.
    pub variance: Option<f64>,
}

impl SubsetSummary {
    pub fn with_mean(size: u64, mean: f64) -> Self {
        Self {
            size,
            mean: Some(mean),
            variance: None,
        }
    }

    pub fn with_variance(size: u64, variance: f64) -> Self {
        Self {
            size,
            mean: None,
            variance: Some(variance),
        }
    }
}

/// Outcome of checking one inequality.
///
/// `slack` is oriented so nonnegative always means "holds": it is
/// `observed - bound` for lower bounds and `bound - observed` for upper
/// bounds. `satisfied` tolerates slack down to
/// `-DEFAULT_REL_TOL * max(1, |bound|, |observed|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    pub bound: f64,
    pub observed: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl BoundResult {
    fn assess(bound: f64, observed: f64, slack: f64) -> Self {
        Self {
            bound,
            observed,
            slack,
            satisfied: slack >= -DEFAULT_REL_TOL * tol_scale(bound, observed),
        }
    }

    /// `bound` is a floor under `observed`.
    pub fn lower(bound: f64, observed: f64) -> Self {
        Self::assess(bound, observed, observed - bound)
    }

    /// `bound` is a cap over `observed`.
    pub fn upper(bound: f64, observed: f64) -> Self {
        Self::assess(bound, observed, bound - observed)
    }

    /// Re-evaluates satisfaction under a caller-supplied relative tolerance.
    pub fn satisfied_with(&self, rel_tol: f64) -> bool {
        self.slack >= -rel_tol * tol_scale(self.bound, self.observed)
    }
}

/// Both sides of an algebraic identity, each evaluated independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            residual: lhs - rhs,
        }
    }
}

/// Samuelson's interval: every observation of a dataset with this summary
/// lies within `mean +/- sqrt((n-1) * variance)`.
pub fn samuelson_interval(s: &DataSummary) -> Result<(f64, f64)> {
    s.validate()?;
    if s.n < 2 {
        return Err(Error::TooFew {
            what: "Samuelson interval",
            min: 2,
            got: s.n,
        });
    }
    let half_width = ((s.n - 1) as f64 * s.variance).sqrt();
    Ok((s.mean - half_width, s.mean + half_width))
}

/// Checks every point of `values` against the Samuelson cap of the same
/// data: `(x_j - mean)^2 <= (n-1) * variance`. Results come back in input
/// order; the slack is zero exactly when a point sits on an interval
/// endpoint, which happens iff the rest of the data is constant.
pub fn check_samuelson(values: &[f64]) -> Result<Vec<BoundResult>> {
    let acc = MomentAccumulator::from_values(values)?;
    if acc.count() < 2 {
        return Err(Error::TooFew {
            what: "Samuelson check",
            min: 2,
            got: acc.count(),
        });
    }
    let mean = acc.mean()?;
    let cap = (acc.count() - 1) as f64 * acc.population_variance()?;
    Ok(values
        .iter()
        .map(|&x| {
            let dev = x - mean;
            BoundResult::upper(cap, dev * dev)
        })
        .collect())
}

/// Floor under the population variance from any two observations:
/// `(xj - xk)^2 / (2n)`.
pub fn pair_bound(n: u64, xj: f64, xk: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFew {
            what: "pair bound",
            min: 2,
            got: n,
        });
    }
    for v in [xj, xk] {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
    }
    let d = xj - xk;
    Ok(d * d / (2.0 * n as f64))
}

/// Range floor `(max - min)^2 / (2n)`; the extremes must be attained data
/// values. Equality holds exactly at n = 2.
pub fn nagy_bound(s: &DataSummary) -> Result<BoundResult> {
    s.validate()?;
    let (min, max) = s.range()?;
    Ok(BoundResult::lower(pair_bound(s.n, max, min)?, s.variance))
}

/// Range floor plus a mean-versus-midrange term:
/// `(max - min)^2 / (2n) + 2/(n-2) * (mean - (min+max)/2)^2`.
///
/// Strictly tighter than [`nagy_bound`] whenever the mean is off the
/// midrange; identical to it (bit-for-bit) when the mean sits exactly on
/// the midrange.
pub fn refined_range_bound(s: &DataSummary) -> Result<BoundResult> {
    s.validate()?;
    let (min, max) = s.range()?;
    if s.n < 3 {
        return Err(Error::TooFew {
            what: "refined range bound",
            min: 3,
            got: s.n,
        });
    }
    let off_mid = s.mean - 0.5 * (min + max);
    let bound = pair_bound(s.n, max, min)? + 2.0 / (s.n - 2) as f64 * (off_mid * off_mid);
    Ok(BoundResult::lower(bound, s.variance))
}

/// Floor under the variance from the mean of any `r`-subset:
/// `r/(n-r) * (subset_mean - mean)^2`. At `r = 1` this is the Samuelson
/// quantity `(x_j - mean)^2 / (n-1)`.
pub fn mallows_richter_bound(s: &DataSummary, sub: &SubsetSummary) -> Result<BoundResult> {
    s.validate()?;
    let gamma = sub.mean.ok_or(Error::MissingField("subset mean"))?;
    if !gamma.is_finite() {
        return Err(Error::NonFinite(gamma));
    }
    if sub.size == 0 || sub.size >= s.n {
        return Err(Error::SubsetSize {
            size: sub.size,
            n: s.n,
        });
    }
    let d = gamma - s.mean;
    let bound = sub.size as f64 / (s.n - sub.size) as f64 * (d * d);
    Ok(BoundResult::lower(bound, s.variance))
}

/// Between-groups term of a two-way split:
/// `n1*n2*(meanX - meanY)^2 / (n1+n2)^2`, a floor under the pooled
/// population variance. For a disjoint split of one dataset this equals
/// [`mallows_richter_bound`] with `r = n1`.
pub fn split_bound(n1: u64, n2: u64, mean_x: f64, mean_y: f64) -> Result<f64> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Invalid(format!(
            "split bound needs two nonempty groups, got sizes {n1} and {n2}"
        )));
    }
    for v in [mean_x, mean_y] {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
    }
    let n = n1.checked_add(n2).ok_or(Error::CountOverflow)? as f64;
    let d = mean_x - mean_y;
    Ok((n1 as f64) * (n2 as f64) / (n * n) * (d * d))
}

/// Subset-variance floor: a subset of size `m` contributes at least
/// `(m/n) * subset_variance` to the full population variance. With `m = n`
/// the bound equals the variance itself.
pub fn subset_variance_bound(s: &DataSummary, sub: &SubsetSummary) -> Result<BoundResult> {
    s.validate()?;
    let sub_var = sub.variance.ok_or(Error::MissingField("subset variance"))?;
    if !sub_var.is_finite() || sub_var < 0.0 {
        return Err(Error::Invalid(format!(
            "subset variance must be finite and nonnegative, got {sub_var}"
        )));
    }
    if sub.size == 0 || sub.size > s.n {
        return Err(Error::SubsetSize {
            size: sub.size,
            n: s.n,
        });
    }
    let bound = sub.size as f64 / s.n as f64 * sub_var;
    Ok(BoundResult::lower(bound, s.variance))
}

/// Admissible interval for the k-th smallest observation (1-based):
///
/// ```text
/// mean - sqrt((n-k)/k) * sd  <=  x_(k)  <=  mean + sqrt((k-1)/(n-k+1)) * sd
/// ```
///
/// `k = n` reproduces the Samuelson upper endpoint and `k = 1` the lower
/// one; the interior ranks get strictly tighter caps.
pub fn boyd_hawkins_interval(s: &DataSummary, k: u64) -> Result<(f64, f64)> {
    s.validate()?;
    if k == 0 || k > s.n {
        return Err(Error::RankOutOfRange { k, n: s.n });
    }
    let n = s.n as f64;
    let kf = k as f64;
    let sd = s.variance.sqrt();
    let lo = s.mean - ((n - kf) / kf).sqrt() * sd;
    let hi = s.mean + ((kf - 1.0) / (n - kf + 1.0)).sqrt() * sd;
    Ok((lo, hi))
}

/// Evaluates both sides of the leave-one-out decomposition
///
/// ```text
/// var(xs) = (n-1)/n * var(xs \ {x_j}) + (x_j - mean)^2 / (n-1)
/// ```
///
/// with the deleted-sample variance computed by an independent two-pass.
pub fn identity_leave_one_out(values: &[f64], j: usize) -> Result<IdentityCheck> {
    let n = values.len();
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    if n < 2 {
        return Err(Error::TooFew {
            what: "leave-one-out identity",
            min: 2,
            got: n as u64,
        });
    }
    let full = MomentAccumulator::from_values(values)?;
    let rest: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, &x)| x)
        .collect();
    let rest_var = MomentAccumulator::from_values(&rest)?.population_variance()?;
    let nf = n as f64;
    let dev = values[j] - full.mean()?;
    let rhs = (nf - 1.0) / nf * rest_var + dev * dev / (nf - 1.0);
    Ok(IdentityCheck::new(full.population_variance()?, rhs))
}

/// Evaluates both sides of the two-point removal decomposition
///
/// ```text
/// var(xs) = (n-2)/n * var(xs \ {x_j, x_k})
///         + (x_j - x_k)^2 / (2n)
///         + 2/(n-2) * (mean - (x_j + x_k)/2)^2
/// ```
///
/// Each summand is nonnegative, which is where the pair and range floors
/// come from.
pub fn identity_pair_decomposition(values: &[f64], j: usize, k: usize) -> Result<IdentityCheck> {
    let n = values.len();
    for index in [j, k] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
    }
    if j == k {
        return Err(Error::DuplicateIndex(j));
    }
    if n < 3 {
        return Err(Error::TooFew {
            what: "pair decomposition",
            min: 3,
            got: n as u64,
        });
    }
    let full = MomentAccumulator::from_values(values)?;
    let rest: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j && i != k)
        .map(|(_, &x)| x)
        .collect();
    let rest_var = MomentAccumulator::from_values(&rest)?.population_variance()?;
    let nf = n as f64;
    let off_pair = full.mean()? - 0.5 * (values[j] + values[k]);
    let rhs = (nf - 2.0) / nf * rest_var
        + pair_bound(n as u64, values[j], values[k])?
        + 2.0 / (nf - 2.0) * (off_pair * off_pair);
    Ok(IdentityCheck::new(full.population_variance()?, rhs))
}
