//! Geometry of the incomplete-sums set `S_φ`: cylinder approximations,
//! nowhere density, Lebesgue measure, dimension and uniqueness of digit
//! representations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::series::{series_verdict_with, SeriesOptions, SeriesVerdict};
use crate::spec::{ConvolutionSpec, DeltaProfile, ScaleSeq, Sign};

/// Default ceiling on the enumeration level.
pub const MAX_LEVEL: u32 = 22;

/// Level-`n` outer approximation of the support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportApprox {
    pub level: u32,
    /// Sorted, pairwise disjoint closed intervals.
    pub intervals: Vec<Interval>,
    pub total_length: Interval,
    pub gap_count: usize,
}

/// A cylinder `[s, s + r_n]` with its start enclosure.
#[derive(Clone, Copy)]
struct Cyl {
    start: Interval,
}

/// Starts `Σ_{k<=n} γ_k a_k` over admissible prefixes, unsorted.
fn cylinder_starts(spec: &ConvolutionSpec, n: u32) -> Result<Vec<Interval>> {
    let mut starts = vec![Interval::ZERO];
    for k in 1..=n as u64 {
        let a = spec.a(k)?;
        let p0 = spec.p0(k);
        let allow0 = p0.hi > 0.0;
        let allow1 = p0.lo < 1.0;
        starts = match (allow0, allow1) {
            (true, true) => {
                let shifted: Vec<Interval> = starts.par_iter().map(|s| s.add(a)).collect();
                starts.extend(shifted);
                starts
            }
            (true, false) => starts,
            (false, true) => starts.par_iter().map(|s| s.add(a)).collect(),
            (false, false) => unreachable!("p0 and p1 cannot both vanish"),
        };
    }
    Ok(starts)
}

pub fn cylinders(spec: &ConvolutionSpec, n: u32) -> Result<SupportApprox> {
    cylinders_with_limit(spec, n, MAX_LEVEL)
}

pub fn cylinders_with_limit(spec: &ConvolutionSpec, n: u32, max_level: u32) -> Result<SupportApprox> {
    if n > max_level {
        return Err(Error::LevelTooLarge { level: n, max: max_level });
    }
    let r = spec.r(n as u64)?;
    let mut cyls: Vec<Cyl> = cylinder_starts(spec, n)?.into_iter().map(|start| Cyl { start }).collect();
    cyls.par_sort_unstable_by(|a, b| a.start.lo.total_cmp(&b.start.lo));

    let mut intervals: Vec<Interval> = Vec::new();
    let mut inner_total = Interval::ZERO;
    let mut seg: Option<(f64, f64)> = None;
    let flush = |seg: &mut Option<(f64, f64)>, total: &mut Interval| {
        if let Some((lo, hi)) = seg.take() {
            if hi > lo {
                *total = total.add(Interval::point(hi).sub(Interval::point(lo)));
            }
        }
    };
    for c in &cyls {
        let end = c.start.add(r);
        match intervals.last_mut() {
            Some(last) if c.start.lo <= last.hi => last.hi = last.hi.max(end.hi),
            _ => intervals.push(Interval::new(c.start.lo, end.hi)),
        }
        // inner segments are certainly covered and pairwise disjoint
        match seg {
            Some((_, ref mut reach)) if c.start.hi <= *reach => *reach = reach.max(end.lo),
            _ => {
                flush(&mut seg, &mut inner_total);
                seg = Some((c.start.hi, end.lo));
            }
        }
    }
    flush(&mut seg, &mut inner_total);
    let outer_total = intervals.iter().fold(Interval::ZERO, |acc, i| acc.add(Interval::point(i.hi).sub(Interval::point(i.lo))));
    let gap_count = intervals.len().saturating_sub(1);
    Ok(SupportApprox {
        level: n,
        intervals,
        total_length: Interval::new(inner_total.lo.min(outer_total.hi), outer_total.hi),
        gap_count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    NowhereDense,
    ContainsInterval,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityReport {
    pub verdict: Density,
    pub reason: String,
}

fn check_density_hypotheses(spec: &ConvolutionSpec) -> Result<Option<String>> {
    match spec.scales().nonincreasing() {
        Some(false) => return Err(Error::HypothesisViolation("scales a_k are not nonincreasing".into())),
        None => return Ok(Some("monotonicity of a_k cannot be certified".into())),
        Some(true) => {}
    }
    match spec.digits().all_nondegenerate() {
        Some(false) => Err(Error::HypothesisViolation("some digit probability p_ik vanishes".into())),
        None => Ok(Some("positivity of every p_ik cannot be certified".into())),
        Some(true) => Ok(None),
    }
}

/// Nowhere dense iff `δ_k > 1` for infinitely many `k`.
pub fn nowhere_dense_verdict(spec: &ConvolutionSpec) -> Result<DensityReport> {
    if let Some(reason) = check_density_hypotheses(spec)? {
        return Ok(DensityReport { verdict: Density::Indeterminate, reason });
    }
    let profile = spec.scales().delta_profile();
    let from = profile.head.len() + 1;
    Ok(match profile.tail {
        Sign::Above => DensityReport {
            verdict: Density::NowhereDense,
            reason: format!("δ_k > 1 for every k >= {from}"),
        },
        Sign::Equal | Sign::Below => DensityReport {
            verdict: Density::ContainsInterval,
            reason: format!("δ_k <= 1 for every k >= {from}"),
        },
        Sign::Unknown => DensityReport {
            verdict: Density::Indeterminate,
            reason: "the tail rule does not decide δ_k against 1".into(),
        },
    })
}

/// Requires `δ_k > 1` for all `k`, certified.
fn require_strict_gaps(profile: &DeltaProfile) -> Result<bool> {
    if profile.all(Sign::Above) {
        return Ok(true);
    }
    for s in [Sign::Below, Sign::Equal] {
        if let Some(k) = profile.first(s) {
            return Err(Error::HypothesisViolation(format!("δ_{k} <= 1, gaps are not strict at every level")));
        }
    }
    Ok(false)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SupportMeasure {
    Zero { criterion: SeriesVerdict },
    Positive { value: Interval, criterion: SeriesVerdict },
    Indeterminate { criterion: Option<SeriesVerdict>, reason: String },
}

pub fn support_measure(spec: &ConvolutionSpec) -> Result<SupportMeasure> {
    support_measure_with(spec, SeriesOptions::default())
}

/// Lebesgue measure of `S_φ` via `Σ(δ_k - 1)` and `lim 2^k r_k`.
pub fn support_measure_with(spec: &ConvolutionSpec, opts: SeriesOptions) -> Result<SupportMeasure> {
    let profile = spec.scales().delta_profile();
    if !require_strict_gaps(&profile)? {
        return Ok(SupportMeasure::Indeterminate {
            criterion: None,
            reason: "δ_k > 1 cannot be certified for every k".into(),
        });
    }
    let terms = spec.scales().gap_excess_terms();
    let criterion = series_verdict_with(&terms, opts);
    match criterion {
        SeriesVerdict::Diverges { .. } => Ok(SupportMeasure::Zero { criterion }),
        SeriesVerdict::Unknown { .. } => Ok(SupportMeasure::Indeterminate {
            criterion: Some(criterion),
            reason: "gap-excess series undecided".into(),
        }),
        SeriesVerdict::Converges { .. } => {
            let value = limit_of_scaled_tails(spec.scales(), &terms)?;
            Ok(SupportMeasure::Positive { value, criterion })
        }
    }
}

/// `L = lim 2^k r_k`. The sequence is nonincreasing, and
/// `L >= 2^n r_n exp(-½ Σ_{k>n} (δ_k - 1))`.
fn limit_of_scaled_tails(scales: &ScaleSeq, terms: &crate::series::TermSeq) -> Result<Interval> {
    let env = terms.envelope().expect("convergent verdict has an envelope");
    let mut best = Interval::new(0.0, f64::INFINITY);
    for n in [16u64, 32, 64, 128, 256, 512, 1000] {
        let scaled = Interval::point(2.0).powi(n).mul(scales.tail_sum(n)?);
        let head_excess = (n + 1..env.start).fold(Interval::ZERO, |acc, k| acc.add(terms.term(k)));
        let tail_excess = head_excess.add(env.upper_tail(n.max(env.start - 1) + 1));
        let factor = tail_excess.scale(-0.5).exp();
        let cand = Interval::new(scaled.lo * factor.lo * (1.0 - 1e-15), scaled.hi);
        best = Interval::new(best.lo.max(cand.lo), best.hi.min(cand.hi));
        if best.width() <= 1e-13 * best.hi {
            break;
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionVariant {
    /// `k ln 2 / Σ (δ_i + 1)`, as printed in the source formula.
    AsPrinted,
    /// `k ln 2 / Σ ln(δ_i + 1)`.
    LogCorrected,
}

impl Default for DimensionVariant {
    fn default() -> Self {
        DimensionVariant::LogCorrected
    }
}

pub const AS_PRINTED_WARNING: &str = "as-printed dimension formula lacks the logarithm on (δ_i + 1) and disagrees with \
     box counting (Cantor set: ln2/3 instead of ln2/ln3); the log-corrected variant is the default";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub variant: DimensionVariant,
    /// Minimum of the sequence over the window `k ∈ [horizon/2, horizon]`.
    pub liminf_value: f64,
    /// Maximum over the same window.
    pub limsup_value: f64,
    pub terms_used: u64,
    /// Closed-form limit for catalog families.
    pub limit: Option<f64>,
    pub warning: Option<String>,
}

fn closed_form_limit(scales: &ScaleSeq, variant: DimensionVariant) -> Option<f64> {
    let ln2 = std::f64::consts::LN_2;
    match variant {
        DimensionVariant::LogCorrected => scales.dimension_limit(),
        DimensionVariant::AsPrinted => match *scales {
            ScaleSeq::Geometric { lambda, .. } if lambda <= 0.5 => Some(ln2 * lambda),
            ScaleSeq::CantorLike { base, .. } => Some(ln2 / base as f64),
            ScaleSeq::TwoTerm { .. } => Some(ln2 / 2.0),
            ScaleSeq::Explicit { tail: crate::spec::TailRule::DeltaExcess { ratio, .. }, .. } if ratio != 1.0 => {
                Some(if ratio < 1.0 { ln2 / 2.0 } else { 0.0 })
            }
            _ => None,
        },
    }
}

pub fn dimension_estimate(spec: &ConvolutionSpec, variant: DimensionVariant, horizon: u64) -> Result<DimensionEstimate> {
    if horizon == 0 {
        return Err(Error::Range("horizon must be positive".into()));
    }
    let scales = spec.scales();
    if !require_strict_gaps(&scales.delta_profile())? {
        return Err(Error::HypothesisViolation("δ_k > 1 cannot be certified for every k".into()));
    }
    let ln2 = Interval::point(2.0).ln();
    let window_start = (horizon / 2).max(1);
    let mut sum = Interval::ZERO;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 1..=horizon {
        let g = match variant {
            DimensionVariant::LogCorrected => scales.ln_delta_plus_one(k)?,
            DimensionVariant::AsPrinted => scales.delta(k)?.add(Interval::ONE),
        };
        sum = sum.add(g);
        if k >= window_start {
            let v = if sum.hi.is_infinite() && sum.lo.is_infinite() {
                Interval::ZERO
            } else {
                ln2.scale(k as f64).div(sum)
            };
            lo = lo.min(v.lo.max(0.0));
            hi = hi.max(v.hi);
        }
    }
    Ok(DimensionEstimate {
        variant,
        liminf_value: lo,
        limsup_value: hi.max(lo),
        terms_used: horizon,
        limit: closed_form_limit(scales, variant),
        warning: (variant == DimensionVariant::AsPrinted).then(|| AS_PRINTED_WARNING.to_string()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    Unique,
    NotUnique,
    Indeterminate,
}

/// Unique iff `δ_k > 1` for all `k`; not unique when `δ_k < 1` eventually.
pub fn unique_representation(spec: &ConvolutionSpec) -> Uniqueness {
    let p = spec.scales().delta_profile();
    if p.all(Sign::Above) {
        Uniqueness::Unique
    } else if p.tail == Sign::Below {
        Uniqueness::NotUnique
    } else {
        Uniqueness::Indeterminate
    }
}
