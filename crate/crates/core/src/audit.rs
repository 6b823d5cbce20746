//! Feasibility auditing of reported summary statistics.
//!
//! Given a published summary (n, mean, some dispersion figure, maybe a
//! range) this module asks one question: could *any* real dataset have
//! produced these numbers? Each check rests on an inequality from
//! [`crate::bounds`] that every dataset must satisfy, so a violation is a
//! proof of impossibility. The converse does not hold: a feasible verdict
//! only means the numbers passed these necessary conditions, never that
//! the underlying data exists or was honestly reported.
//!
//! Reported values are usually rounded. When [`ReportedSummary::decimals`]
//! is set, every reported figure is treated as an interval of half-width
//! `0.5 * 10^-decimals` around the printed value, and each inequality is
//! evaluated at the point of that box most favorable to the report. That
//! keeps the audit sound in the presence of rounding: coarser reported
//! precision can only widen acceptance, never create a false alarm.

use serde::{Deserialize, Serialize};

use crate::bounds::{tol_scale, BoundResult, DataSummary, SubsetSummary, DEFAULT_REL_TOL};
use crate::error::{Error, Result};

/// How the dispersion figure in a report is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionKind {
    PopulationSd,
    SampleSd,
    PopulationVariance,
    SampleVariance,
}

impl DispersionKind {
    fn is_sample(self) -> bool {
        matches!(self, Self::SampleSd | Self::SampleVariance)
    }

    fn is_sd(self) -> bool {
        matches!(self, Self::PopulationSd | Self::SampleSd)
    }
}

/// Summary statistics as they appear in a report: count, mean, one
/// dispersion figure with its convention, optionally the extremes, and
/// optionally the number of decimals everything was rounded to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportedSummary {
    pub n: u64,
    pub mean: f64,
    pub dispersion: f64,
    pub kind: DispersionKind,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Decimal places the report rounds to; at most 15.
    pub decimals: Option<u32>,
}

impl ReportedSummary {
    pub fn new(n: u64, mean: f64, dispersion: f64, kind: DispersionKind) -> Self {
        Self {
            n,
            mean,
            dispersion,
            kind,
            min: None,
            max: None,
            decimals: None,
        }
    }

    pub fn with_min(mut self, min: f64) -> Self {
        self.min = Some(min);
        self
    }

    pub fn with_max(mut self, max: f64) -> Self {
        self.max = Some(max);
        self
    }

    pub fn with_decimals(mut self, decimals: u32) -> Self {
        self.decimals = Some(decimals);
        self
    }

    /// Half-width of the rounding interval around every reported figure:
    /// `0.5 * 10^-decimals`, or zero when no precision was declared.
    pub fn rounding_delta(&self) -> f64 {
        match self.decimals {
            Some(d) => 0.5 * 10f64.powi(-(d as i32)),
            None => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::TooFew {
                what: "reported summary",
                min: 1,
                got: 0,
            });
        }
        if self.kind.is_sample() && self.n < 2 {
            return Err(Error::TooFew {
                what: "sample dispersion",
                min: 2,
                got: self.n,
            });
        }
        if !self.mean.is_finite() {
            return Err(Error::Invalid(format!(
                "non-finite reported mean: {}",
                self.mean
            )));
        }
        if !self.dispersion.is_finite() || self.dispersion < 0.0 {
            return Err(Error::Invalid(format!(
                "dispersion must be finite and nonnegative, got {}",
                self.dispersion
            )));
        }
        for (name, value) in [("min", self.min), ("max", self.max)] {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(Error::Invalid(format!("non-finite reported {name}: {v}")));
                }
            }
        }
        if let Some(d) = self.decimals {
            if d > 15 {
                return Err(Error::Invalid(format!(
                    "decimals must be at most 15, got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Largest population variance consistent with the reported dispersion
    /// after widening it by the rounding interval.
    fn variance_hi(&self) -> f64 {
        to_population_variance(self.n, self.dispersion + self.rounding_delta(), self.kind)
    }
}

fn to_population_variance(n: u64, dispersion: f64, kind: DispersionKind) -> f64 {
    let var = if kind.is_sd() {
        dispersion * dispersion
    } else {
        dispersion
    };
    if kind.is_sample() {
        var * (n - 1) as f64 / n as f64
    } else {
        var
    }
}

/// Converts a report to the population-variance convention used by every
/// bound. Rounding intervals are not applied here; the audit operations
/// widen each check themselves.
pub fn normalize(r: &ReportedSummary) -> Result<DataSummary> {
    r.validate()?;
    let mut s = DataSummary::new(r.n, r.mean, to_population_variance(r.n, r.dispersion, r.kind))?;
    s.min = r.min;
    s.max = r.max;
    Ok(s)
}

/// Tuning knobs for an audit run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditOptions {
    /// Relative tolerance for each check; slack below
    /// `-rel_tolerance * max(1, |bound|, |observed|)` is a violation.
    pub rel_tolerance: f64,
    /// Whether reported min/max are attained data values. When false, only
    /// their ordering against the mean is checked: the range-based floors
    /// and the extreme-membership checks assume attainment.
    pub range_attained: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            rel_tolerance: DEFAULT_REL_TOL,
            range_attained: true,
        }
    }
}

/// One failed check: the constraint that broke, the bound it compared
/// against, the reported value on the wrong side, and the (negative)
/// slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub bound: f64,
    pub observed: f64,
    pub slack: f64,
}

/// Audit outcome. `feasible` holds exactly when `violations` is empty;
/// every recorded violation has `slack < -tolerance_used`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    /// Smallest absolute tolerance any performed check was granted.
    pub tolerance_used: f64,
}

/// Accumulates check outcomes and the tightest tolerance in effect.
struct Checks {
    rel: f64,
    min_tau: f64,
    violations: Vec<Violation>,
}

impl Checks {
    fn new(rel: f64) -> Self {
        Self {
            rel,
            min_tau: f64::INFINITY,
            violations: Vec::new(),
        }
    }

    fn lower(&mut self, constraint: &'static str, bound: f64, observed: f64) {
        self.record(constraint, BoundResult::lower(bound, observed));
    }

    fn upper(&mut self, constraint: &'static str, bound: f64, observed: f64) {
        self.record(constraint, BoundResult::upper(bound, observed));
    }

    fn record(&mut self, constraint: &'static str, r: BoundResult) {
        let tau = self.rel * tol_scale(r.bound, r.observed);
        self.min_tau = self.min_tau.min(tau);
        if r.slack < -tau {
            self.violations.push(Violation {
                constraint: constraint.to_string(),
                bound: r.bound,
                observed: r.observed,
                slack: r.slack,
            });
        }
    }

    fn verdict(self) -> Verdict {
        Verdict {
            feasible: self.violations.is_empty(),
            // No checks performed leaves min_tau infinite; report the
            // relative knob so the field is always meaningful.
            tolerance_used: if self.min_tau.is_finite() {
                self.min_tau
            } else {
                self.rel
            },
            violations: self.violations,
        }
    }
}

/// Audits a bare summary. Checks, where the needed fields are present:
/// the ordering `min <= mean <= max`; that both extremes fit inside the
/// admissible interval for members; and that the reported variance is no
/// smaller than the range floors (plain for n >= 2, mean-adjusted for
/// n >= 3). All but the ordering checks need the extremes to be attained
/// values; see [`AuditOptions::range_attained`].
pub fn audit_summary(r: &ReportedSummary, opts: &AuditOptions) -> Result<Verdict> {
    let s = normalize(r)?;
    let delta = r.rounding_delta();
    let var_hi = r.variance_hi();
    let mut checks = Checks::new(opts.rel_tolerance);

    if let Some(min) = s.min {
        checks.upper("min_le_mean", s.mean + delta, min - delta);
    }
    if let Some(max) = s.max {
        checks.upper("mean_le_max", max + delta, s.mean - delta);
    }

    if opts.range_attained && s.n >= 2 {
        let half = ((s.n - 1) as f64 * var_hi).sqrt();
        if let Some(min) = s.min {
            checks.lower("samuelson_min", s.mean - delta - half, min + delta);
        }
        if let Some(max) = s.max {
            checks.upper("samuelson_max", s.mean + delta + half, max - delta);
        }
        if let (Some(min), Some(max)) = (s.min, s.max) {
            let width = ((max - delta) - (min + delta)).max(0.0);
            let range_floor = width * width / (2.0 * s.n as f64);
            checks.lower("nagy", range_floor, var_hi);
            if s.n >= 3 {
                let midgap = ((s.mean - 0.5 * (min + max)).abs() - 2.0 * delta).max(0.0);
                let refined = range_floor + 2.0 / (s.n - 2) as f64 * (midgap * midgap);
                checks.lower("refined_range", refined, var_hi);
            }
        }
    }

    Ok(checks.verdict())
}

/// Audits the claim that `x` was one of the observations: `x` must lie in
/// the admissible member interval `mean +/- sqrt((n-1) * variance)`,
/// widened by rounding on both the summary and the claim.
pub fn audit_member(x: f64, r: &ReportedSummary, opts: &AuditOptions) -> Result<Verdict> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let s = normalize(r)?;
    if s.n < 2 {
        return Err(Error::TooFew {
            what: "member audit",
            min: 2,
            got: s.n,
        });
    }
    let delta = r.rounding_delta();
    let half = ((s.n - 1) as f64 * r.variance_hi()).sqrt();
    let mut checks = Checks::new(opts.rel_tolerance);
    checks.lower("samuelson_member_low", s.mean - delta - half, x + delta);
    checks.upper("samuelson_member_high", s.mean + delta + half, x - delta);
    Ok(checks.verdict())
}

/// Audits a claimed subset against the full summary. A claimed subset
/// mean must not force, through the subset-mean floor, a variance above
/// the reported one; a claimed subset variance likewise through the
/// subset-variance floor. Whichever claims are present are checked.
pub fn audit_subset(sub: &SubsetSummary, r: &ReportedSummary, opts: &AuditOptions) -> Result<Verdict> {
    let s = normalize(r)?;
    if sub.mean.is_none() && sub.variance.is_none() {
        return Err(Error::MissingField("subset mean or variance"));
    }
    let delta = r.rounding_delta();
    let var_hi = r.variance_hi();
    let mut checks = Checks::new(opts.rel_tolerance);

    if let Some(gamma) = sub.mean {
        if !gamma.is_finite() {
            return Err(Error::NonFinite(gamma));
        }
        if sub.size == 0 || sub.size >= s.n {
            return Err(Error::SubsetSize {
                size: sub.size,
                n: s.n,
            });
        }
        // The subset-mean floor grows with |gamma - mean|; shrink the gap
        // by both rounding half-widths before applying it.
        let gap = ((gamma - s.mean).abs() - 2.0 * delta).max(0.0);
        let bound = sub.size as f64 / (s.n - sub.size) as f64 * (gap * gap);
        checks.lower("mallows_richter", bound, var_hi);
    }

    if let Some(sub_var) = sub.variance {
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
        let sub_var_lo = (sub_var - delta).max(0.0);
        let bound = sub.size as f64 / s.n as f64 * sub_var_lo;
        checks.lower("subset_variance", bound, var_hi);
    }

    Ok(checks.verdict())
}

/// Audits a claimed k-th smallest value (1-based) against the admissible
/// interval for that rank.
pub fn audit_order_statistic(
    k: u64,
    value: f64,
    r: &ReportedSummary,
    opts: &AuditOptions,
) -> Result<Verdict> {
    if !value.is_finite() {
        return Err(Error::NonFinite(value));
    }
    let s = normalize(r)?;
    if k == 0 || k > s.n {
        return Err(Error::RankOutOfRange { k, n: s.n });
    }
    let delta = r.rounding_delta();
    let sd_hi = r.variance_hi().sqrt();
    let n = s.n as f64;
    let kf = k as f64;
    let lo = s.mean - delta - ((n - kf) / kf).sqrt() * sd_hi;
    let hi = s.mean + delta + ((kf - 1.0) / (n - kf + 1.0)).sqrt() * sd_hi;
    let mut checks = Checks::new(opts.rel_tolerance);
    checks.lower("boyd_hawkins_low", lo, value + delta);
    checks.upper("boyd_hawkins_high", hi, value - delta);
    Ok(checks.verdict())
}
