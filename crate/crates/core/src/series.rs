//! Certified convergence decisions for nonnegative series and for infinite
//! products with factors in `(0, 1]`.
//!
//! A [`TermSeq`] pairs an enclosure-valued term evaluator with an optional
//! analytic [`Envelope`] valid from some index on. Only the envelope can
//! produce `Converges`/`Diverges`; numeric evaluation feeds the sum bound or,
//! when no rule applies, the `Unknown` evidence.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Default number of terms examined when no analytic rule applies.
pub const DEFAULT_HORIZON: u64 = 10_000;

/// Hard cap on explicit summation before an envelope starts.
pub const MAX_PREFIX: u64 = 2_000_000;

const TAIL_TARGET: f64 = 1e-13;

/// Shape `g(k)` of a comparison bound `coef * g(k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Growth {
    Constant,
    Geometric { ratio: f64 },
    Power { exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub coef: f64,
    #[serde(flatten)]
    pub growth: Growth,
}

impl Bound {
    pub fn constant(coef: f64) -> Self {
        Bound { coef, growth: Growth::Constant }
    }

    pub fn geometric(coef: f64, ratio: f64) -> Self {
        Bound { coef, growth: Growth::Geometric { ratio } }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        Bound { coef, growth: Growth::Power { exponent } }
    }

    /// Enclosure of `coef * g(k)`.
    pub fn at(&self, k: u64) -> Interval {
        let g = match self.growth {
            Growth::Constant => Interval::ONE,
            Growth::Geometric { ratio } => Interval::point(ratio).powi(k),
            Growth::Power { exponent } => Interval::pow_neg(k as f64, exponent),
        };
        g.scale(self.coef).clamp_nonneg()
    }

    pub fn summable(&self) -> bool {
        if self.coef == 0.0 {
            return true;
        }
        match self.growth {
            Growth::Constant => false,
            Growth::Geometric { ratio } => ratio < 1.0,
            Growth::Power { exponent } => exponent > 1.0,
        }
    }

    /// Enclosure of `Σ_{k ≥ from} coef * g(k)`; only meaningful when summable.
    pub fn tail_sum(&self, from: u64) -> Interval {
        debug_assert!(from >= 1);
        if self.coef == 0.0 {
            return Interval::ZERO;
        }
        let s = match self.growth {
            Growth::Constant => return Interval::new(0.0, f64::INFINITY),
            Growth::Geometric { ratio } => {
                let r = Interval::point(ratio);
                r.powi(from).div(Interval::ONE.sub(r))
            }
            Growth::Power { exponent } => {
                // integral comparison: ∫_N^∞ ≤ Σ_{k≥N} ≤ N^-e + ∫_N^∞
                let n = from as f64;
                let e1 = Interval::point(exponent).sub(Interval::ONE);
                let integral = Interval::pow_neg(n, exponent - 1.0).div(e1);
                let hi = integral.add(Interval::pow_neg(n, exponent));
                Interval::new(integral.lo, hi.hi)
            }
        };
        s.scale(self.coef).clamp_nonneg()
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.growth {
            Growth::Constant => write!(f, "{}", self.coef),
            Growth::Geometric { ratio } => write!(f, "{}*{}^k", self.coef, ratio),
            Growth::Power { exponent } => write!(f, "{}*k^-{}", self.coef, exponent),
        }
    }
}

/// Comparison bounds valid for every `k >= start`:
/// `lower(k) <= t_k <= Σ upper_j(k)`. An empty `upper` means `t_k = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envelope {
    pub start: u64,
    pub upper: Vec<Bound>,
    pub lower: Option<Bound>,
}

impl Envelope {
    pub fn zero(start: u64) -> Self {
        Envelope { start: start.max(1), upper: Vec::new(), lower: None }
    }

    pub fn exact(start: u64, b: Bound) -> Self {
        if b.coef == 0.0 {
            return Envelope::zero(start);
        }
        Envelope { start: start.max(1), upper: vec![b], lower: Some(b) }
    }

    pub fn bounded(start: u64, upper: Vec<Bound>, lower: Option<Bound>) -> Self {
        let upper = upper.into_iter().filter(|b| b.coef != 0.0).collect();
        let lower = lower.filter(|b| b.coef > 0.0);
        Envelope { start: start.max(1), upper, lower }
    }

    /// Envelope of the shifted sequence `k -> t_{k + shift}`.
    pub fn shifted(&self, shift: u64) -> Self {
        let shift_bound = |b: &Bound, upper: bool| -> Bound {
            match b.growth {
                Growth::Constant => *b,
                Growth::Geometric { ratio } => {
                    let f = Interval::point(ratio).powi(shift).scale(b.coef);
                    Bound::geometric(if upper { f.hi } else { f.lo }, ratio)
                }
                // (k+s)^-e <= k^-e, and (k+s)^-e >= (1+s)^-e * k^-e for k >= 1
                Growth::Power { exponent } => {
                    if upper {
                        *b
                    } else {
                        let f = Interval::pow_neg(1.0 + shift as f64, exponent).scale(b.coef);
                        Bound::power(f.lo, exponent)
                    }
                }
            }
        };
        Envelope::bounded(
            self.start.saturating_sub(shift).max(1),
            self.upper.iter().map(|b| shift_bound(b, true)).collect(),
            self.lower.as_ref().map(|b| shift_bound(b, false)),
        )
    }

    fn upper_summable(&self) -> bool {
        self.upper.iter().all(Bound::summable)
    }

    fn lower_diverges(&self) -> bool {
        self.lower.is_some_and(|b| b.coef > 0.0 && !b.summable())
    }

    fn upper_at(&self, k: u64) -> Interval {
        self.upper.iter().fold(Interval::ZERO, |acc, b| acc.add(b.at(k)))
    }

    pub fn upper_tail(&self, from: u64) -> Interval {
        self.upper.iter().fold(Interval::ZERO, |acc, b| acc.add(b.tail_sum(from)))
    }

    fn lower_tail(&self, from: u64) -> f64 {
        self.lower.map_or(0.0, |b| if b.summable() { b.tail_sum(from).lo } else { 0.0 })
    }
}

type TermFn = Arc<dyn Fn(u64) -> Interval + Send + Sync>;

/// A nonnegative sequence `t_1, t_2, ...` with an optional analytic envelope.
#[derive(Clone)]
pub struct TermSeq {
    label: String,
    term: TermFn,
    envelope: Option<Envelope>,
}

impl fmt::Debug for TermSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TermSeq")
            .field("label", &self.label)
            .field("envelope", &self.envelope)
            .finish()
    }
}

impl TermSeq {
    pub fn new(
        label: impl Into<String>,
        term: impl Fn(u64) -> Interval + Send + Sync + 'static,
        envelope: Option<Envelope>,
    ) -> Self {
        TermSeq { label: label.into(), term: Arc::new(term), envelope }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        self.envelope.as_ref()
    }

    pub fn term(&self, k: u64) -> Interval {
        (self.term)(k).clamp_nonneg()
    }

    fn prefix_sum(&self, from: u64, to: u64) -> Interval {
        (from..=to).fold(Interval::ZERO, |acc, k| acc.add(self.term(k)))
    }
}

/// Which analytic rule settled a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    FinitelySupported,
    Geometric,
    PSeries,
    Comparison,
    ConstantLowerBound,
}

fn classify_rule(env: &Envelope, converging: bool) -> Rule {
    if converging {
        if env.upper.is_empty() {
            return Rule::FinitelySupported;
        }
        let all_geo = env.upper.iter().all(|b| matches!(b.growth, Growth::Geometric { .. }));
        let all_pow = env.upper.iter().all(|b| matches!(b.growth, Growth::Power { .. }));
        let exact = env.upper.len() == 1 && env.lower.is_some_and(|l| l.growth == env.upper[0].growth);
        match (all_geo, all_pow, exact) {
            (true, _, true) => Rule::Geometric,
            (_, true, true) => Rule::PSeries,
            _ => Rule::Comparison,
        }
    } else {
        match env.lower.map(|b| b.growth) {
            Some(Growth::Constant) => Rule::ConstantLowerBound,
            Some(Growth::Geometric { .. }) => Rule::Geometric,
            Some(Growth::Power { .. }) => Rule::PSeries,
            None => Rule::Comparison,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SeriesVerdict {
    Converges { sum_bound: Interval, rule: Rule },
    Diverges { rule: Rule },
    Unknown { partial_sum: f64, terms_examined: u64 },
}

impl SeriesVerdict {
    pub fn is_certified(&self) -> bool {
        !matches!(self, SeriesVerdict::Unknown { .. })
    }

    pub fn converges(&self) -> Option<bool> {
        match self {
            SeriesVerdict::Converges { .. } => Some(true),
            SeriesVerdict::Diverges { .. } => Some(false),
            SeriesVerdict::Unknown { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeriesOptions {
    pub horizon: u64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { horizon: DEFAULT_HORIZON }
    }
}

pub fn series_verdict(terms: &TermSeq) -> SeriesVerdict {
    series_verdict_with(terms, SeriesOptions::default())
}

pub fn series_verdict_with(terms: &TermSeq, opts: SeriesOptions) -> SeriesVerdict {
    let unknown = || {
        let partial = (1..=opts.horizon).map(|k| terms.term(k).mid()).sum();
        SeriesVerdict::Unknown { partial_sum: partial, terms_examined: opts.horizon }
    };
    let Some(env) = terms.envelope() else {
        return unknown();
    };
    if env.start > MAX_PREFIX {
        return unknown();
    }
    if env.upper_summable() {
        // sum explicitly while the envelope tail is still coarse
        let mut n = env.start - 1;
        let cap = n.max(opts.horizon);
        while n < cap && env.upper_tail(n + 1).hi > TAIL_TARGET {
            n = (n * 2).clamp(n + 1, cap).max(64.min(cap));
        }
        let head = terms.prefix_sum(1, n);
        let tail = Interval::new(env.lower_tail(n + 1), env.upper_tail(n + 1).hi);
        return SeriesVerdict::Converges { sum_bound: head.add(tail), rule: classify_rule(env, true) };
    }
    if env.lower_diverges() {
        return SeriesVerdict::Diverges { rule: classify_rule(env, false) };
    }
    unknown()
}

/// Smallest `k >= from` with `pred(k)`, for a predicate that stays true once
/// it holds. `None` when no such index is found below `u64::MAX / 4`.
pub fn first_index_where(from: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    let from = from.max(1);
    if pred(from) {
        return Some(from);
    }
    let mut lo = from;
    let mut step = 1u64;
    let hi = loop {
        let cand = from.checked_add(step)?;
        if cand > u64::MAX / 4 {
            return None;
        }
        if pred(cand) {
            break cand;
        }
        lo = cand;
        step *= 2;
    };
    // pred(lo) false, pred(hi) true
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Factors `t_k ∈ (0, 1]` together with the deficit series `1 - t_k`.
#[derive(Clone)]
pub struct FactorSeq {
    factor: TermFn,
    deficits: TermSeq,
}

impl fmt::Debug for FactorSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FactorSeq").field("deficits", &self.deficits).finish()
    }
}

impl FactorSeq {
    /// `deficit_envelope` bounds `1 - t_k`.
    pub fn new(
        label: impl Into<String>,
        factor: impl Fn(u64) -> Interval + Send + Sync + 'static,
        deficit_envelope: Option<Envelope>,
    ) -> Self {
        let factor: TermFn = Arc::new(factor);
        let f2 = Arc::clone(&factor);
        let deficits = TermSeq::new(
            label,
            move |k| Interval::ONE.sub(f2(k).min(Interval::ONE)),
            deficit_envelope,
        );
        FactorSeq { factor, deficits }
    }

    pub fn factor(&self, k: u64) -> Interval {
        let f = (self.factor)(k);
        Interval::new(f.lo.min(1.0), f.hi.min(1.0))
    }

    pub fn deficits(&self) -> &TermSeq {
        &self.deficits
    }

    pub fn label(&self) -> &str {
        self.deficits.label()
    }

    fn checked_factor(&self, k: u64) -> Result<Interval> {
        let f = (self.factor)(k);
        if f.hi <= 0.0 || f.lo > 1.0 || f.lo.is_nan() {
            return Err(Error::FactorOutOfRange { index: k, value: f.mid() });
        }
        Ok(Interval::new(f.lo.clamp(0.0, 1.0), f.hi.min(1.0)))
    }

    /// Enclosure of `Π_{k ≤ n} t_k`.
    pub fn partial_product(&self, n: u64) -> Result<Interval> {
        let mut p = Interval::ONE;
        for k in 1..=n {
            p = p.mul(self.checked_factor(k)?);
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ProductVerdict {
    /// The limit lies in `[lower_bound, upper_bound]`.
    PositiveLimit { lower_bound: f64, upper_bound: f64, factors_examined: u64 },
    ZeroLimit { rule: Rule },
    Unknown { partial_product: f64, factors_examined: u64 },
}

impl ProductVerdict {
    pub fn is_certified(&self) -> bool {
        !matches!(self, ProductVerdict::Unknown { .. })
    }

    pub fn is_positive(&self) -> Option<bool> {
        match self {
            ProductVerdict::PositiveLimit { .. } => Some(true),
            ProductVerdict::ZeroLimit { .. } => Some(false),
            ProductVerdict::Unknown { .. } => None,
        }
    }
}

pub fn product_verdict(factors: &FactorSeq) -> Result<ProductVerdict> {
    product_verdict_with(factors, SeriesOptions::default())
}

pub fn product_verdict_with(factors: &FactorSeq, opts: SeriesOptions) -> Result<ProductVerdict> {
    let deficit_verdict = series_verdict_with(factors.deficits(), opts);
    match deficit_verdict {
        SeriesVerdict::Converges { .. } => {
            let env = factors.deficits().envelope().expect("converging verdict has an envelope");
            let first = env.start - 1;
            let cap = first.max(opts.horizon);
            let mut n = first.max(64.min(opts.horizon));
            while n < cap && !(env.upper_at(n + 1).hi <= 0.5 && env.upper_tail(n + 1).hi <= TAIL_TARGET) {
                n = (n * 2).min(cap);
            }
            // the log bound needs small deficits; go past the horizon only for that
            while n < MAX_PREFIX && env.upper_at(n + 1).hi > 0.5 {
                n = (n * 2).min(MAX_PREFIX);
            }
            let dmax = env.upper_at(n + 1).hi;
            if dmax >= 1.0 {
                let p = factors.partial_product(opts.horizon)?;
                return Ok(ProductVerdict::Unknown { partial_product: p.mid(), factors_examined: opts.horizon });
            }
            let head = factors.partial_product(n)?;
            // ln(1-d) >= -d/(1-d) for d in [0, 1)
            let tail = env.upper_tail(n + 1);
            let exponent = if tail.hi == 0.0 {
                Interval::ZERO
            } else {
                tail.div(Interval::ONE.sub(Interval::point(dmax))).neg()
            };
            let lower = head.lo * exponent.exp().lo;
            let lower = if lower > 0.0 { lower.next_down().max(f64::MIN_POSITIVE) } else { lower };
            Ok(ProductVerdict::PositiveLimit {
                lower_bound: if tail.hi == 0.0 { head.lo } else { lower },
                upper_bound: head.hi,
                factors_examined: n,
            })
        }
        SeriesVerdict::Diverges { rule } => {
            // still validate the leading factors
            for k in 1..=64u64.min(opts.horizon) {
                factors.checked_factor(k)?;
            }
            Ok(ProductVerdict::ZeroLimit { rule })
        }
        SeriesVerdict::Unknown { .. } => {
            let p = factors.partial_product(opts.horizon)?;
            Ok(ProductVerdict::Unknown { partial_product: p.mid(), factors_examined: opts.horizon })
        }
    }
}
