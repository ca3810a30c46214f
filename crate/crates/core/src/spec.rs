//! Defining data of a generalized Bernoulli convolution
//! `φ = Σ φ_k a_k`, where the `φ_k ∈ {0, 1}` are independent with
//! `P(φ_k = 0) = p_{0k}`.
//!
//! Every generator carries enough analytic structure to bound tail sums
//! `r_n = Σ_{i>n} a_i` and to attach convergence envelopes to the criterion
//! series built from it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::series::{first_index_where, Bound, Envelope, FactorSeq, TermSeq};

/// Terms summed explicitly before the integral bracket of a power-law tail.
const POWER_TAIL_TERMS: u64 = 1024;

fn one() -> f64 {
    1.0
}

fn up(x: f64) -> f64 {
    x * (1.0 + 4.0 * f64::EPSILON)
}

fn down(x: f64) -> f64 {
    x * (1.0 - 4.0 * f64::EPSILON)
}

fn finite_positive(field: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and positive, got {x}")))
    }
}

fn open_unit(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must lie in (0, 1), got {x}")))
    }
}

fn closed_unit(field: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must lie in [0, 1], got {x}")))
    }
}

fn finite(field: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite, got {x}")))
    }
}

/// `a / b` for nonnegative `a` and a nonnegative `b` that may touch zero.
fn ratio_nonneg(a: Interval, b: Interval) -> Interval {
    if b.lo > 0.0 {
        a.div(b)
    } else if b.hi > 0.0 {
        Interval::new(a.div(Interval::point(b.hi)).lo, f64::INFINITY)
    } else {
        Interval::new(0.0, f64::INFINITY)
    }
}

/// How the scale sequence continues after an explicit prefix. Indices are
/// absolute; `start_index` is the first index governed by the rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailRule {
    /// Only `a_k <= scale * ratio^k` is known.
    GeometricBound { ratio: f64, scale: f64, start_index: u64 },
    /// `a_k = scale * ratio^k`.
    ExactGeometric { ratio: f64, scale: f64, start_index: u64 },
    /// `a_k = scale * k^-exponent`.
    PowerLaw { exponent: f64, scale: f64, start_index: u64 },
    /// `δ_k = 1 + scale * ratio^k` for `k >= start_index`, with
    /// `r_{start_index - 1} = mass`.
    DeltaExcess { scale: f64, ratio: f64, mass: f64, start_index: u64 },
}

impl TailRule {
    pub fn start_index(&self) -> u64 {
        match *self {
            TailRule::GeometricBound { start_index, .. }
            | TailRule::ExactGeometric { start_index, .. }
            | TailRule::PowerLaw { start_index, .. }
            | TailRule::DeltaExcess { start_index, .. } => start_index,
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        let f = |name: &str| format!("{field}.{name}");
        match *self {
            TailRule::GeometricBound { ratio, scale, .. } | TailRule::ExactGeometric { ratio, scale, .. } => {
                open_unit(&f("ratio"), ratio)?;
                finite_positive(&f("scale"), scale)
            }
            TailRule::PowerLaw { exponent, scale, .. } => {
                if !(exponent.is_finite() && exponent > 1.0) {
                    return Err(Error::invalid(f("exponent"), format!("must be finite and > 1, got {exponent}")));
                }
                finite_positive(&f("scale"), scale)
            }
            TailRule::DeltaExcess { scale, ratio, mass, .. } => {
                finite_positive(&f("scale"), scale)?;
                finite_positive(&f("ratio"), ratio)?;
                finite_positive(&f("mass"), mass)
            }
        }
    }

    /// `Π_{i=m}^{n} (2 + c ρ^i)` for the delta-excess rule.
    fn excess_product(scale: f64, ratio: f64, m: u64, n: u64) -> Interval {
        let mut p = Interval::ONE;
        for i in m..=n {
            let d = Interval::point(ratio).powi(i).scale(scale).add(Interval::point(2.0));
            p = p.mul(d);
            if p.lo == f64::MAX || p.lo.is_infinite() {
                return Interval::new(f64::MAX, f64::INFINITY);
            }
        }
        p
    }

    /// `r_n` for `n >= start_index - 1`.
    fn tail_sum(&self, n: u64) -> Interval {
        match *self {
            TailRule::ExactGeometric { ratio, scale, .. } | TailRule::GeometricBound { ratio, scale, .. } => {
                let r = Interval::point(ratio);
                let s = r.powi(n + 1).scale(scale).div(Interval::ONE.sub(r));
                if matches!(self, TailRule::GeometricBound { .. }) {
                    Interval::new(0.0, s.hi)
                } else {
                    s
                }
            }
            TailRule::PowerLaw { exponent, scale, .. } => {
                let big_n = n + 1 + POWER_TAIL_TERMS;
                let head = (n + 1..big_n).fold(Interval::ZERO, |acc, k| acc.add(Interval::pow_neg(k as f64, exponent)));
                // convex decreasing f: ∫_N f + f(N)/2 <= Σ_{k>=N} f(k) <= ∫_{N-1/2} f
                let e1 = Interval::point(exponent - 1.0);
                let nf = big_n as f64;
                let lo = Interval::pow_neg(nf, exponent - 1.0)
                    .div(e1)
                    .add(Interval::pow_neg(nf, exponent).scale(0.5));
                let hi = Interval::pow_neg(nf - 0.5, exponent - 1.0).div(e1);
                head.add(Interval::new(lo.lo, hi.hi)).scale(scale)
            }
            TailRule::DeltaExcess { scale, ratio, mass, start_index } => {
                if n + 1 <= start_index {
                    return Interval::point(mass);
                }
                let p = Self::excess_product(scale, ratio, start_index, n);
                Interval::point(mass).div(p)
            }
        }
    }

    /// `a_k` for `k >= start_index`.
    fn term(&self, k: u64) -> Result<Interval> {
        match *self {
            TailRule::GeometricBound { .. } => Err(Error::TailUnbounded {
                index: k,
                reason: "geometric bound rule gives only an upper bound on the terms".into(),
            }),
            TailRule::ExactGeometric { ratio, scale, .. } => Ok(Interval::point(ratio).powi(k).scale(scale)),
            TailRule::PowerLaw { exponent, scale, .. } => Ok(Interval::pow_neg(k as f64, exponent).scale(scale)),
            TailRule::DeltaExcess { .. } => Ok(self.delta(k).unwrap().mul(self.tail_sum(k))),
        }
    }

    /// Closed-form `δ_k` where one exists.
    fn delta(&self, k: u64) -> Option<Interval> {
        match *self {
            TailRule::ExactGeometric { ratio, .. } => {
                let r = Interval::point(ratio);
                Some(Interval::ONE.sub(r).div(r))
            }
            TailRule::DeltaExcess { scale, ratio, .. } => {
                Some(Interval::point(ratio).powi(k).scale(scale).add(Interval::ONE))
            }
            _ => None,
        }
    }
}

/// The scale sequence `a_1, a_2, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleSeq {
    /// `a_k = coef * λ^k`.
    Geometric {
        lambda: f64,
        #[serde(default = "one")]
        coef: f64,
    },
    /// `a_k = coef * base^-k`.
    CantorLike { coef: f64, base: u32 },
    /// `a_k = (1-ε) 2^-k + 3ε 4^-k`.
    TwoTerm { epsilon: f64 },
    /// Listed `a_1..a_m` followed by a tail rule starting at `m + 1`.
    Explicit { prefix: Vec<f64>, tail: TailRule },
}

/// Whether `δ_k` is above, at, or below 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Above,
    Equal,
    Below,
    Unknown,
}

impl Sign {
    fn of(delta: Interval) -> Sign {
        if delta.lo > 1.0 {
            Sign::Above
        } else if delta.hi < 1.0 {
            Sign::Below
        } else if delta.lo == 1.0 && delta.hi == 1.0 {
            Sign::Equal
        } else {
            Sign::Unknown
        }
    }
}

/// Sign of `δ_k - 1` for every `k`: `head[k-1]` for `k <= head.len()`, then
/// `tail` for all later indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaProfile {
    pub head: Vec<Sign>,
    pub tail: Sign,
}

impl DeltaProfile {
    fn uniform(s: Sign) -> Self {
        DeltaProfile { head: Vec::new(), tail: s }
    }

    pub fn all(&self, s: Sign) -> bool {
        self.tail == s && self.head.iter().all(|&h| h == s)
    }

    /// First index whose sign is not certified, if any.
    pub fn first_uncertain(&self) -> Option<u64> {
        self.head
            .iter()
            .position(|&s| s == Sign::Unknown)
            .map(|i| i as u64 + 1)
            .or_else(|| (self.tail == Sign::Unknown).then_some(self.head.len() as u64 + 1))
    }

    /// First index with the given sign.
    pub fn first(&self, s: Sign) -> Option<u64> {
        self.head
            .iter()
            .position(|&h| h == s)
            .map(|i| i as u64 + 1)
            .or_else(|| (self.tail == s).then_some(self.head.len() as u64 + 1))
    }

    /// `δ_k >= 1` for every k.
    pub fn all_at_least_one(&self) -> bool {
        let ok = |s: Sign| matches!(s, Sign::Above | Sign::Equal);
        ok(self.tail) && self.head.iter().all(|&s| ok(s))
    }
}

impl ScaleSeq {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScaleSeq::Geometric { lambda, coef } => {
                open_unit("scales.lambda", lambda)?;
                finite_positive("scales.coef", coef)
            }
            ScaleSeq::CantorLike { coef, base } => {
                finite_positive("scales.coef", coef)?;
                if base < 2 {
                    return Err(Error::invalid("scales.base", format!("must be at least 2, got {base}")));
                }
                Ok(())
            }
            ScaleSeq::TwoTerm { epsilon } => open_unit("scales.epsilon", epsilon),
            ScaleSeq::Explicit { ref prefix, ref tail } => {
                for (i, &a) in prefix.iter().enumerate() {
                    finite_positive(&format!("scales.prefix[{i}]"), a)?;
                }
                let expected = prefix.len() as u64 + 1;
                if tail.start_index() != expected {
                    return Err(Error::invalid(
                        "scales.tail.start_index",
                        format!("must equal prefix length + 1 = {expected}, got {}", tail.start_index()),
                    ));
                }
                tail.validate("scales.tail")
            }
        }
    }

    /// Enclosure of `a_k`, `k >= 1`.
    pub fn term(&self, k: u64) -> Result<Interval> {
        if k == 0 {
            return Err(Error::Range("scale index starts at 1".into()));
        }
        Ok(match *self {
            ScaleSeq::Geometric { lambda, coef } => Interval::point(lambda).powi(k).scale(coef),
            ScaleSeq::CantorLike { coef, base } => Interval::point(coef).div(Interval::point(base as f64).powi(k)),
            ScaleSeq::TwoTerm { epsilon } => {
                let h = Interval::point(0.5).powi(k);
                let q = Interval::point(0.25).powi(k);
                h.mul(Interval::ONE.sub(Interval::point(epsilon)))
                    .add(q.scale(3.0).scale(epsilon))
            }
            ScaleSeq::Explicit { ref prefix, ref tail } => {
                if k <= prefix.len() as u64 {
                    Interval::point(prefix[(k - 1) as usize])
                } else {
                    tail.term(k)?
                }
            }
        })
    }

    /// Enclosure of `r_n = Σ_{i>n} a_i`.
    pub fn tail_sum(&self, n: u64) -> Result<Interval> {
        Ok(match *self {
            ScaleSeq::Geometric { lambda, coef } => {
                let l = Interval::point(lambda);
                l.powi(n + 1).scale(coef).div(Interval::ONE.sub(l))
            }
            ScaleSeq::CantorLike { coef, base } => {
                let b = base as f64;
                Interval::point(coef).div(Interval::point(b).powi(n).mul(Interval::point(b - 1.0)))
            }
            ScaleSeq::TwoTerm { epsilon } => {
                let one_minus = Interval::ONE.sub(Interval::point(epsilon));
                Interval::point(0.5)
                    .powi(n)
                    .mul(one_minus)
                    .add(Interval::point(0.25).powi(n).scale(epsilon))
            }
            ScaleSeq::Explicit { ref prefix, ref tail } => {
                let m = prefix.len() as u64;
                if n >= m {
                    tail.tail_sum(n)
                } else {
                    let head = prefix[n as usize..].iter().fold(Interval::ZERO, |acc, &a| acc.add(Interval::point(a)));
                    head.add(tail.tail_sum(m))
                }
            }
        })
    }

    /// `r_0`, the total mass of the scale sequence.
    pub fn total(&self) -> Result<Interval> {
        self.tail_sum(0)
    }

    /// Enclosure of `δ_k = a_k / r_k`.
    pub fn delta(&self, k: u64) -> Result<Interval> {
        if k == 0 {
            return Err(Error::Range("scale index starts at 1".into()));
        }
        Ok(match *self {
            ScaleSeq::Geometric { lambda, .. } => {
                let l = Interval::point(lambda);
                Interval::ONE.sub(l).div(l)
            }
            ScaleSeq::CantorLike { base, .. } => Interval::point(base as f64 - 1.0),
            ScaleSeq::TwoTerm { .. } => self.delta_excess_two_term(k).add(Interval::ONE),
            ScaleSeq::Explicit { ref prefix, ref tail } => {
                if k >= tail.start_index() {
                    if let Some(d) = tail.delta(k) {
                        return Ok(d);
                    }
                }
                if k <= prefix.len() as u64 {
                    ratio_nonneg(self.term(k)?, self.tail_sum(k)?)
                } else {
                    ratio_nonneg(tail.term(k)?, tail.tail_sum(k))
                }
            }
        })
    }

    /// `δ_k - 1 = 2ε 2^-k / ((1-ε) + ε 2^-k)` for the two-term family.
    fn delta_excess_two_term(&self, k: u64) -> Interval {
        let ScaleSeq::TwoTerm { epsilon } = *self else { unreachable!() };
        let h = Interval::point(0.5).powi(k);
        let e = Interval::point(epsilon);
        h.mul(e).scale(2.0).div(Interval::ONE.sub(e).add(h.mul(e)))
    }

    /// Enclosure of `δ_k - 1`.
    pub fn delta_excess(&self, k: u64) -> Result<Interval> {
        match *self {
            ScaleSeq::TwoTerm { .. } => Ok(self.delta_excess_two_term(k)),
            ScaleSeq::Explicit { ref tail, .. } if k >= tail.start_index() => match *tail {
                TailRule::DeltaExcess { scale, ratio, .. } => Ok(Interval::point(ratio).powi(k).scale(scale)),
                _ => Ok(self.delta(k)?.sub(Interval::ONE)),
            },
            _ => Ok(self.delta(k)?.sub(Interval::ONE)),
        }
    }

    /// Enclosure of `ln(δ_k + 1)`, stable when `δ_k` overflows.
    pub fn ln_delta_plus_one(&self, k: u64) -> Result<Interval> {
        if let ScaleSeq::Explicit { tail: TailRule::DeltaExcess { scale, ratio, start_index, .. }, .. } = *self {
            if k >= start_index && ratio > 1.0 {
                // ln(2 + c ρ^k) = ln c + k ln ρ + ln(1 + 2/(c ρ^k))
                let log_part = Interval::point(scale)
                    .ln()
                    .add(Interval::point(ratio).ln().scale(k as f64));
                if log_part.lo > 40.0 {
                    let corr = log_part.neg().exp().scale(2.0);
                    return Ok(log_part.add(Interval::new(0.0, corr.hi)));
                }
            }
        }
        Ok(self.delta(k)?.add(Interval::ONE).ln())
    }

    /// Where `δ_k` sits relative to 1, for every `k`.
    pub fn delta_profile(&self) -> DeltaProfile {
        match *self {
            ScaleSeq::Geometric { lambda, .. } => DeltaProfile::uniform(if lambda < 0.5 {
                Sign::Above
            } else if lambda == 0.5 {
                Sign::Equal
            } else {
                Sign::Below
            }),
            ScaleSeq::CantorLike { base, .. } => {
                DeltaProfile::uniform(if base >= 3 { Sign::Above } else { Sign::Equal })
            }
            ScaleSeq::TwoTerm { .. } => DeltaProfile::uniform(Sign::Above),
            ScaleSeq::Explicit { ref tail, .. } => {
                let m = tail.start_index();
                let (head_len, tail_sign) = match *tail {
                    TailRule::ExactGeometric { ratio, .. } => (
                        m - 1,
                        if ratio < 0.5 {
                            Sign::Above
                        } else if ratio == 0.5 {
                            Sign::Equal
                        } else {
                            Sign::Below
                        },
                    ),
                    TailRule::DeltaExcess { .. } => (m - 1, Sign::Above),
                    TailRule::GeometricBound { .. } => (m - 1, Sign::Unknown),
                    TailRule::PowerLaw { exponent, .. } => {
                        // r_k >= (k+1)^{1-e}/(e-1) gives δ_k <= (e-1)/k * (1+1/k)^{e-1}
                        let e1 = Interval::point(exponent - 1.0);
                        let k0 = first_index_where(m, |k| {
                            let kf = Interval::point(k as f64);
                            let ratio = Interval::ONE.add(kf.recip());
                            let growth = ratio.ln().mul(e1).exp();
                            e1.div(kf).mul(growth).hi < 1.0
                        })
                        .unwrap_or(m);
                        (k0 - 1, Sign::Below)
                    }
                };
                let head = (1..=head_len)
                    .map(|k| self.delta(k).map(Sign::of).unwrap_or(Sign::Unknown))
                    .collect();
                DeltaProfile { head, tail: tail_sign }
            }
        }
    }

    /// `Some(true)` when `a_k` is certified nonincreasing, `Some(false)` when
    /// an increase is found, `None` when undecidable from the generator.
    pub fn nonincreasing(&self) -> Option<bool> {
        match *self {
            ScaleSeq::Geometric { .. } | ScaleSeq::CantorLike { .. } | ScaleSeq::TwoTerm { .. } => Some(true),
            ScaleSeq::Explicit { ref tail, .. } => {
                let m = tail.start_index();
                let mut prev: Option<Interval> = None;
                for k in 1..=m {
                    let Ok(a) = self.term(k) else {
                        return None;
                    };
                    if let Some(p) = prev {
                        if a.lo > p.hi {
                            return Some(false);
                        }
                        if a.hi > p.lo {
                            return None;
                        }
                    }
                    prev = Some(a);
                }
                match tail {
                    TailRule::GeometricBound { .. } => None,
                    // geometric and power tails decrease; for the excess rule
                    // a_{k+1} = δ_{k+1}/(1+δ_{k+1}) r_k < r_k < a_k since δ_k > 1
                    TailRule::ExactGeometric { .. } | TailRule::PowerLaw { .. } | TailRule::DeltaExcess { .. } => {
                        Some(true)
                    }
                }
            }
        }
    }

    /// The nonnegative series `Σ (δ_k - 1)`, meaningful when `δ_k >= 1`.
    pub fn gap_excess_terms(&self) -> TermSeq {
        let this = self.clone();
        let term = move |k: u64| this.delta_excess(k).unwrap_or(Interval::new(0.0, f64::INFINITY));
        let envelope = match *self {
            ScaleSeq::Geometric { lambda, .. } => {
                let d = Interval::ONE.sub(Interval::point(lambda)).div(Interval::point(lambda)).sub(Interval::ONE);
                if lambda == 0.5 {
                    Some(Envelope::zero(1))
                } else if d.lo > 0.0 {
                    Some(Envelope::bounded(1, vec![Bound::constant(d.hi)], Some(Bound::constant(d.lo))))
                } else {
                    None
                }
            }
            ScaleSeq::CantorLike { base, .. } => {
                Some(Envelope::exact(1, Bound::constant(base as f64 - 2.0)))
            }
            ScaleSeq::TwoTerm { epsilon } => {
                let hi = Interval::point(2.0 * epsilon).div(Interval::ONE.sub(Interval::point(epsilon)));
                Some(Envelope::bounded(
                    1,
                    vec![Bound::geometric(up(hi.hi), 0.5)],
                    Some(Bound::geometric(2.0 * epsilon, 0.5)),
                ))
            }
            ScaleSeq::Explicit { ref tail, .. } => {
                let m = tail.start_index();
                match *tail {
                    TailRule::DeltaExcess { scale, ratio, .. } => Some(Envelope::exact(m, Bound::geometric(scale, ratio))),
                    TailRule::ExactGeometric { ratio, .. } => {
                        let r = Interval::point(ratio);
                        let d = Interval::ONE.sub(r).div(r).sub(Interval::ONE);
                        if ratio == 0.5 {
                            Some(Envelope::zero(m))
                        } else if d.lo > 0.0 {
                            Some(Envelope::bounded(m, vec![Bound::constant(d.hi)], Some(Bound::constant(d.lo))))
                        } else {
                            None
                        }
                    }
                    TailRule::GeometricBound { .. } | TailRule::PowerLaw { .. } => None,
                }
            }
        };
        TermSeq::new("gap excess δ_k - 1", term, envelope)
    }

    /// Closed-form limit of `k ln 2 / Σ_{i<=k} ln(δ_i + 1)` when known.
    pub fn dimension_limit(&self) -> Option<f64> {
        let ln2 = std::f64::consts::LN_2;
        match *self {
            ScaleSeq::Geometric { lambda, .. } if lambda <= 0.5 => Some(ln2 / (1.0 / lambda).ln()),
            ScaleSeq::CantorLike { base, .. } => Some(ln2 / (base as f64).ln()),
            ScaleSeq::TwoTerm { .. } => Some(1.0),
            ScaleSeq::Explicit { tail: TailRule::DeltaExcess { ratio, .. }, .. } => {
                if ratio < 1.0 {
                    Some(1.0)
                } else if ratio > 1.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            ScaleSeq::Explicit { tail: TailRule::ExactGeometric { ratio, .. }, .. } if ratio <= 0.5 => {
                Some(ln2 / (1.0 / ratio).ln())
            }
            _ => None,
        }
    }
}

/// A signed vanishing correction `d(k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Decay {
    Zero,
    /// `c k^-s`, `s > 0`.
    Power { c: f64, s: f64 },
    /// `c ρ^k`, `ρ ∈ (0, 1)`.
    Geometric { c: f64, ratio: f64 },
}

impl Decay {
    pub fn at(&self, k: u64) -> Interval {
        match *self {
            Decay::Zero => Interval::ZERO,
            Decay::Power { c, s } => Interval::pow_neg(k as f64, s).scale(c),
            Decay::Geometric { c, ratio } => Interval::point(ratio).powi(k).scale(c),
        }
    }

    /// Upper bound on `|d(k)|`; nonincreasing in `k`.
    pub fn magnitude(&self, k: u64) -> f64 {
        let v = self.at(k);
        v.lo.abs().max(v.hi.abs())
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Decay::Zero => true,
            Decay::Power { c, .. } | Decay::Geometric { c, .. } => c == 0.0,
        }
    }

    pub fn coef(&self) -> f64 {
        match *self {
            Decay::Zero => 0.0,
            Decay::Power { c, .. } | Decay::Geometric { c, .. } => c,
        }
    }

    /// Bound on `mult * |d(k)|^power`; `round_up` picks the rounding side of
    /// the coefficient.
    pub fn bound(&self, mult: f64, power: i32, round_up: bool) -> Option<Bound> {
        let adj = |x: f64| if round_up { up(x) } else { down(x) };
        match *self {
            Decay::Zero => None,
            Decay::Power { c, s } => Some(Bound::power(adj(mult * c.abs().powi(power)), s * power as f64)),
            Decay::Geometric { c, ratio } => {
                Some(Bound::geometric(adj(mult * c.abs().powi(power)), ratio.powi(power)))
            }
        }
    }

    /// Same shape and rate, so the two differ only by a constant factor.
    pub fn same_rate(&self, other: &Decay) -> bool {
        match (*self, *other) {
            (Decay::Power { s: a, .. }, Decay::Power { s: b, .. }) => a == b,
            (Decay::Geometric { ratio: a, .. }, Decay::Geometric { ratio: b, .. }) => a == b,
            _ => false,
        }
    }

    /// `self` eventually dominates `other` by any fixed factor.
    pub fn slower_than(&self, other: &Decay) -> bool {
        if self.is_zero() {
            return false;
        }
        match (*self, *other) {
            (_, Decay::Zero) => true,
            (Decay::Power { s: a, .. }, Decay::Power { s: b, .. }) => a < b,
            (Decay::Power { .. }, Decay::Geometric { .. }) => true,
            (Decay::Geometric { .. }, Decay::Power { .. }) => false,
            (Decay::Geometric { ratio: a, .. }, Decay::Geometric { ratio: b, .. }) => a > b,
            (Decay::Zero, _) => false,
        }
    }
}

/// For `k >= start`: `p_{0k} = limit + decay(k)` exactly, with no clamping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DigitAsymptotics {
    pub start: u64,
    pub limit: Interval,
    pub decay: Decay,
}

/// Indices where a perturbed digit law was clamped into `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClampReport {
    pub indices: Vec<u64>,
    /// More clamped indices exist than listed.
    pub truncated: bool,
    /// Clamped at every index from here on.
    pub permanent_from: Option<u64>,
}

const CLAMP_LIST_LIMIT: usize = 1000;

/// Continuation of an explicit digit prefix. Indices are absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DigitTail {
    Constant { p0: f64 },
    /// `clamp(p0 + c k^-s, 0, 1)`.
    Perturbed { p0: f64, c: f64, s: f64 },
    /// `clamp(p0 + c ρ^k, 0, 1)`.
    GeometricPerturbed { p0: f64, c: f64, ratio: f64 },
}

/// The digit law `p_{0k}`; `p_{1k} = 1 - p_{0k}` is always derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DigitLaw {
    Constant { p0: f64 },
    /// `clamp(p0 + c k^-s, 0, 1)`.
    Perturbed { p0: f64, c: f64, s: f64 },
    Explicit { prefix: Vec<f64>, tail: DigitTail },
}

impl DigitTail {
    fn validate(&self, field: &str) -> Result<()> {
        match *self {
            DigitTail::Constant { p0 } => closed_unit(&format!("{field}.p0"), p0),
            DigitTail::Perturbed { p0, c, s } => {
                closed_unit(&format!("{field}.p0"), p0)?;
                finite(&format!("{field}.c"), c)?;
                finite(&format!("{field}.s"), s)
            }
            DigitTail::GeometricPerturbed { p0, c, ratio } => {
                closed_unit(&format!("{field}.p0"), p0)?;
                finite(&format!("{field}.c"), c)?;
                open_unit(&format!("{field}.ratio"), ratio)
            }
        }
    }

    fn raw(&self, k: u64) -> Interval {
        match *self {
            DigitTail::Constant { p0 } => Interval::point(p0),
            DigitTail::Perturbed { p0, c, s } => Interval::point(p0).add(Interval::pow_neg(k as f64, s).scale(c)),
            DigitTail::GeometricPerturbed { p0, c, ratio } => {
                Interval::point(p0).add(Interval::point(ratio).powi(k).scale(c))
            }
        }
    }

    fn p0(&self, k: u64) -> Interval {
        self.raw(k).clamp_unit()
    }

    fn asymptotics(&self) -> DigitAsymptotics {
        let (p0, c, decay) = match *self {
            DigitTail::Constant { p0 } => {
                return DigitAsymptotics { start: 1, limit: Interval::point(p0), decay: Decay::Zero }
            }
            DigitTail::Perturbed { p0, c, s } => {
                if c == 0.0 {
                    return DigitAsymptotics { start: 1, limit: Interval::point(p0), decay: Decay::Zero };
                }
                if s == 0.0 {
                    let v = Interval::point(p0).add(Interval::point(c)).clamp_unit();
                    return DigitAsymptotics { start: 1, limit: v, decay: Decay::Zero };
                }
                if s < 0.0 {
                    // grows without bound, so eventually pinned at 0 or 1
                    let target = if c > 0.0 { 1.0 } else { 0.0 };
                    let start = first_index_where(1, |k| {
                        let v = self.raw(k);
                        if c > 0.0 { v.lo >= 1.0 } else { v.hi <= 0.0 }
                    })
                    .unwrap_or(u64::MAX / 4);
                    return DigitAsymptotics { start, limit: Interval::point(target), decay: Decay::Zero };
                }
                (p0, c, Decay::Power { c, s })
            }
            DigitTail::GeometricPerturbed { p0, c, ratio } => {
                if c == 0.0 {
                    return DigitAsymptotics { start: 1, limit: Interval::point(p0), decay: Decay::Zero };
                }
                (p0, c, Decay::Geometric { c, ratio })
            }
        };
        let room = if c > 0.0 { 1.0 - p0 } else { p0 };
        if room == 0.0 {
            return DigitAsymptotics { start: 1, limit: Interval::point(p0), decay: Decay::Zero };
        }
        let start = first_index_where(1, |k| {
            let v = self.raw(k);
            v.lo >= 0.0 && v.hi <= 1.0
        })
        .unwrap_or(u64::MAX / 4);
        DigitAsymptotics { start, limit: Interval::point(p0), decay }
    }
}

impl DigitLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DigitLaw::Constant { p0 } => DigitTail::Constant { p0 }.validate("digits"),
            DigitLaw::Perturbed { p0, c, s } => DigitTail::Perturbed { p0, c, s }.validate("digits"),
            DigitLaw::Explicit { ref prefix, ref tail } => {
                for (i, &p) in prefix.iter().enumerate() {
                    closed_unit(&format!("digits.prefix[{i}]"), p)?;
                }
                tail.validate("digits.tail")
            }
        }
    }

    fn as_tail(&self) -> Option<DigitTail> {
        match *self {
            DigitLaw::Constant { p0 } => Some(DigitTail::Constant { p0 }),
            DigitLaw::Perturbed { p0, c, s } => Some(DigitTail::Perturbed { p0, c, s }),
            DigitLaw::Explicit { .. } => None,
        }
    }

    /// Enclosure of `p_{0k}`, `k >= 1`.
    pub fn p0(&self, k: u64) -> Interval {
        match self {
            DigitLaw::Explicit { prefix, tail } => {
                if k >= 1 && k <= prefix.len() as u64 {
                    Interval::point(prefix[(k - 1) as usize])
                } else {
                    tail.p0(k)
                }
            }
            law => law.as_tail().unwrap().p0(k),
        }
    }

    pub fn p1(&self, k: u64) -> Interval {
        Interval::ONE.sub(self.p0(k)).clamp_unit()
    }

    /// `P(φ_k = digit)`.
    pub fn p(&self, digit: u8, k: u64) -> Interval {
        if digit == 0 {
            self.p0(k)
        } else {
            self.p1(k)
        }
    }

    pub fn asymptotics(&self) -> DigitAsymptotics {
        match self {
            DigitLaw::Explicit { prefix, tail } => {
                let mut a = tail.asymptotics();
                a.start = a.start.max(prefix.len() as u64 + 1);
                a
            }
            law => law.as_tail().unwrap().asymptotics(),
        }
    }

    pub fn clamp_report(&self) -> ClampReport {
        let (tail, offset) = match self {
            DigitLaw::Explicit { prefix, tail } => (tail.clone(), prefix.len() as u64),
            law => (law.as_tail().unwrap(), 0),
        };
        if matches!(tail, DigitTail::Constant { .. }) {
            return ClampReport::default();
        }
        let asym = self.asymptotics();
        let clamped_forever = match tail {
            DigitTail::Perturbed { p0, c, s } => c != 0.0 && (s < 0.0 || (s > 0.0 && (if c > 0.0 { p0 == 1.0 } else { p0 == 0.0 }))),
            DigitTail::GeometricPerturbed { p0, c, .. } => c != 0.0 && (if c > 0.0 { p0 == 1.0 } else { p0 == 0.0 }),
            DigitTail::Constant { .. } => false,
        };
        let mut report = ClampReport::default();
        let scan_end = if clamped_forever && asym.decay.is_zero() && asym.start <= offset + 1 {
            report.permanent_from = Some(offset + 1);
            offset
        } else {
            if clamped_forever {
                report.permanent_from = Some(asym.start);
            }
            asym.start.saturating_sub(1)
        };
        let mut k = offset + 1;
        while k <= scan_end {
            let v = tail.raw(k);
            if v.lo < 0.0 || v.hi > 1.0 {
                if report.indices.len() == CLAMP_LIST_LIMIT {
                    report.truncated = true;
                    break;
                }
                report.indices.push(k);
            }
            k += 1;
        }
        report
    }

    /// `Some(true)` when `0 < p_{0k} < 1` for all k is certified.
    pub fn all_nondegenerate(&self) -> Option<bool> {
        let asym = self.asymptotics();
        let check = |k: u64| -> Option<bool> {
            let p = self.p0(k);
            if p.lo > 0.0 && p.hi < 1.0 {
                Some(true)
            } else if p.hi <= 0.0 || p.lo >= 1.0 {
                Some(false)
            } else {
                None
            }
        };
        if asym.start > 1_000_000 {
            return None;
        }
        let mut unsure = false;
        for k in 1..=asym.start {
            match check(k) {
                Some(false) => return Some(false),
                None => unsure = true,
                Some(true) => {}
            }
        }
        let l = asym.limit;
        let tail_ok = if asym.decay.is_zero() {
            check(asym.start)
        } else if l.lo > 0.0 && l.hi < 1.0 {
            // monotone decay: the worst index is the first
            let m = asym.decay.magnitude(asym.start);
            if l.lo - m > 0.0 && l.hi + m < 1.0 {
                Some(true)
            } else {
                None
            }
        } else if l.is_point() && (l.lo == 0.0 || l.lo == 1.0) {
            // decay pushes strictly inward and never vanishes
            Some(true)
        } else {
            None
        };
        match tail_ok {
            Some(false) => Some(false),
            Some(true) if !unsure => Some(true),
            _ => None,
        }
    }

    /// The series `Σ (target - p_{0k})^2`.
    pub fn deviation_terms(&self, target: f64) -> TermSeq {
        let this = self.clone();
        let t = Interval::point(target);
        let term = move |k: u64| {
            let d = t.sub(this.p0(k));
            d.mul(d)
        };
        let asym = self.asymptotics();
        let l = asym.limit;
        let envelope = if l.is_point() && l.lo == target {
            Some(match asym.decay.bound(1.0, 2, true) {
                None => Envelope::zero(asym.start),
                Some(hi) => Envelope::bounded(asym.start, vec![hi], asym.decay.bound(1.0, 2, false)),
            })
        } else if !l.contains(target) {
            let gap = if l.lo > target { l.lo - target } else { target - l.hi };
            let half = gap / 2.0;
            first_index_where(asym.start, |k| asym.decay.magnitude(k) <= half).map(|from| {
                Envelope::bounded(from, vec![Bound::constant(1.0)], Some(Bound::constant(down(half * half))))
            })
        } else {
            None
        };
        TermSeq::new(format!("squared deviation from {target}"), term, envelope)
    }

    /// Factors `p_{0,from}, p_{0,from+1}, ...` reindexed from 1.
    pub fn zero_run_factors(&self, from: u64) -> FactorSeq {
        let this = self.clone();
        let shift = from.saturating_sub(1);
        let asym = self.asymptotics();
        let l = asym.limit;
        // deficit p_{1k} = (1 - limit) - decay(k)
        let envelope = if l.is_point() && l.lo == 1.0 {
            Some(match asym.decay.bound(1.0, 1, true) {
                None => Envelope::zero(asym.start),
                Some(hi) => Envelope::bounded(asym.start, vec![hi], asym.decay.bound(1.0, 1, false)),
            })
        } else if l.hi < 1.0 {
            let gap = 1.0 - l.hi;
            first_index_where(asym.start, |k| asym.decay.magnitude(k) <= gap / 2.0)
                .map(|from| Envelope::bounded(from, vec![Bound::constant(1.0)], Some(Bound::constant(down(gap / 2.0)))))
        } else {
            None
        };
        FactorSeq::new(
            format!("p0 from index {from}"),
            move |k| this.p0(k + shift),
            envelope.map(|e| e.shifted(shift)),
        )
    }
}

/// Scale sequence plus digit law, validated at construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecParts")]
pub struct ConvolutionSpec {
    scales: ScaleSeq,
    digits: DigitLaw,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecParts {
    scales: ScaleSeq,
    digits: DigitLaw,
}

impl TryFrom<SpecParts> for ConvolutionSpec {
    type Error = Error;

    fn try_from(p: SpecParts) -> Result<Self> {
        ConvolutionSpec::new(p.scales, p.digits)
    }
}

impl ConvolutionSpec {
    pub fn new(scales: ScaleSeq, digits: DigitLaw) -> Result<Self> {
        scales.validate()?;
        digits.validate()?;
        Ok(ConvolutionSpec { scales, digits })
    }

    pub fn scales(&self) -> &ScaleSeq {
        &self.scales
    }

    pub fn digits(&self) -> &DigitLaw {
        &self.digits
    }

    pub fn a(&self, k: u64) -> Result<Interval> {
        self.scales.term(k)
    }

    pub fn r(&self, n: u64) -> Result<Interval> {
        self.scales.tail_sum(n)
    }

    pub fn p0(&self, k: u64) -> Interval {
        self.digits.p0(k)
    }

    /// Same scales, digit law replaced.
    pub fn with_digits(&self, digits: DigitLaw) -> Result<Self> {
        ConvolutionSpec::new(self.scales.clone(), digits)
    }
}

impl fmt::Display for ConvolutionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} with {:?}", self.scales, self.digits)
    }
}

/// `tail_sum` as a free function on the scale sequence.
pub fn tail_sum(scales: &ScaleSeq, n: u64) -> Result<Interval> {
    scales.tail_sum(n)
}

/// `delta` as a free function on the scale sequence.
pub fn delta(scales: &ScaleSeq, k: u64) -> Result<Interval> {
    scales.delta(k)
}

/// Frequently used specifications.
pub mod catalog {
    use super::*;
    use rand::Rng;

    /// A random valid digit law from the catalog families, for seeded suites.
    pub fn random_digit_law<R: Rng + ?Sized>(rng: &mut R) -> DigitLaw {
        let p = |rng: &mut R| rng.random_range(0.05..0.95);
        let tail = |rng: &mut R| match rng.random_range(0..3) {
            0 => DigitTail::Constant { p0: p(rng) },
            1 => DigitTail::Perturbed {
                p0: rng.random_range(0.3..0.7),
                c: rng.random_range(-0.25..0.25),
                s: rng.random_range(0.5..2.5),
            },
            _ => DigitTail::GeometricPerturbed {
                p0: rng.random_range(0.3..0.7),
                c: rng.random_range(-0.25..0.25),
                ratio: rng.random_range(0.1..0.9),
            },
        };
        match rng.random_range(0..3) {
            0 => DigitLaw::Constant { p0: p(rng) },
            1 => DigitLaw::Perturbed { p0: rng.random_range(0.3..0.7), c: rng.random_range(-0.25..0.25), s: rng.random_range(0.5..2.5) },
            _ => {
                let len = rng.random_range(0..6);
                let prefix = (0..len).map(|_| p(rng)).collect();
                DigitLaw::Explicit { prefix, tail: tail(rng) }
            }
        }
    }

    pub fn fair() -> DigitLaw {
        DigitLaw::Constant { p0: 0.5 }
    }

    /// `a_k = 2 * 3^-k` with fair digits: the Cantor measure.
    pub fn cantor() -> ConvolutionSpec {
        ConvolutionSpec::new(ScaleSeq::CantorLike { coef: 2.0, base: 3 }, fair()).unwrap()
    }

    /// `a_k = 2^-k` with fair digits: Lebesgue measure on `[0, 1]`.
    pub fn uniform() -> ConvolutionSpec {
        ConvolutionSpec::new(ScaleSeq::Geometric { lambda: 0.5, coef: 1.0 }, fair()).unwrap()
    }

    pub fn two_term(epsilon: f64) -> Result<ConvolutionSpec> {
        ConvolutionSpec::new(ScaleSeq::TwoTerm { epsilon }, fair())
    }

    /// `p_{0k} = 1 - 2^-k`.
    pub fn vanishing_ones() -> DigitLaw {
        DigitLaw::Explicit { prefix: Vec::new(), tail: DigitTail::GeometricPerturbed { p0: 1.0, c: -1.0, ratio: 0.5 } }
    }

    /// Cantor scales with `p_{0k} = 1 - 2^-k`.
    pub fn cantor_discrete() -> ConvolutionSpec {
        ConvolutionSpec::new(ScaleSeq::CantorLike { coef: 2.0, base: 3 }, vanishing_ones()).unwrap()
    }

    /// Cantor scales with `p_{0k} = 1/2 + 1/(4k)`.
    pub fn cantor_perturbed() -> ConvolutionSpec {
        ConvolutionSpec::new(ScaleSeq::CantorLike { coef: 2.0, base: 3 }, DigitLaw::Perturbed { p0: 0.5, c: 0.25, s: 1.0 })
            .unwrap()
    }

    /// `δ_k = 1 + 2^-k` with `r_0 = 1`.
    pub fn summable_gaps() -> ConvolutionSpec {
        ConvolutionSpec::new(
            ScaleSeq::Explicit {
                prefix: Vec::new(),
                tail: TailRule::DeltaExcess { scale: 1.0, ratio: 0.5, mass: 1.0, start_index: 1 },
            },
            fair(),
        )
        .unwrap()
    }

    /// `δ_k = 1 + 2 * 4^k`, decaying like `2^{-k^2}`.
    pub fn superexponential() -> ConvolutionSpec {
        ConvolutionSpec::new(
            ScaleSeq::Explicit {
                prefix: Vec::new(),
                tail: TailRule::DeltaExcess { scale: 2.0, ratio: 4.0, mass: 1.0, start_index: 1 },
            },
            fair(),
        )
        .unwrap()
    }
}
