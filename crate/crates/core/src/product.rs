//! Infinite products of finite-alphabet coordinate laws: the discreteness
//! criterion `Π_k max_ω μ_k(ω) > 0` and the Kakutani dichotomy driven by
//! Hellinger affinities `ρ(μ_k, ν_k) = Σ_ω √(μ_k(ω) ν_k(ω))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{self, Interval};
use crate::series::{
    first_index_where, product_verdict_with, Bound, Envelope, FactorSeq, ProductVerdict, SeriesOptions,
};
use crate::spec::{Decay, DigitLaw};

const PROB_TOL: f64 = 1e-12;
/// Indices scanned one by one before the asymptotic form takes over.
const MAX_SCAN: u64 = 100_000;

/// Weight `w_k ∈ [0, 1]` of a mixture law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weights {
    /// `c k^-s`
    Power { c: f64, s: f64 },
    /// `c ρ^k`
    Geometric { c: f64, ratio: f64 },
}

impl Weights {
    fn decay(&self) -> Decay {
        match *self {
            Weights::Power { c, s } => Decay::Power { c, s },
            Weights::Geometric { c, ratio } => Decay::Geometric { c, ratio },
        }
    }
}

/// A sequence of probability vectors `μ_1, μ_2, ...` over `{0, .., s-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoordinateLawSeq {
    /// `(p_{0k}, p_{1k})` from a digit law.
    Binary { digits: DigitLaw },
    Constant { law: Vec<f64> },
    /// `(1 - w_k) base + w_k target`.
    Mixture { base: Vec<f64>, target: Vec<f64>, weights: Weights },
    /// Listed laws for `k = 1..m`, then `tail` (absolute indices).
    Explicit { prefix: Vec<Vec<f64>>, tail: Box<CoordinateLawSeq> },
}

/// For `k >= start`: `μ_k = limit + decay(k) * direction`.
#[derive(Clone, Debug, PartialEq)]
pub struct LawAsymptotics {
    pub start: u64,
    pub limit: Vec<Interval>,
    pub direction: Vec<Interval>,
    pub decay: Decay,
}

impl LawAsymptotics {
    fn moving(&self) -> bool {
        !self.decay.is_zero() && self.direction.iter().any(|d| *d != Interval::ZERO)
    }

    /// Upper bound on `‖direction‖₁`.
    fn l1_hi(&self) -> f64 {
        (0..self.direction.len()).map(|i| self.dir_abs_hi(i)).sum::<f64>() * (1.0 + 1e-15)
    }

    fn dir_abs_hi(&self, i: usize) -> f64 {
        self.direction[i].lo.abs().max(self.direction[i].hi.abs())
    }

    /// Lower bound on `|d_i|`, zero when the interval straddles zero.
    fn dir_abs_lo(&self, i: usize) -> f64 {
        let d = self.direction[i];
        if d.lo > 0.0 {
            d.lo
        } else if d.hi < 0.0 {
            -d.hi
        } else {
            0.0
        }
    }

    fn l1_lo(&self) -> f64 {
        (0..self.direction.len()).map(|i| self.dir_abs_lo(i)).sum::<f64>() * (1.0 - 1e-15)
    }
}

fn check_prob(field: &str, v: &[f64]) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::invalid(field, "alphabet needs at least two symbols"));
    }
    if let Some(i) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invalid(format!("{field}[{i}]"), format!("must be finite and nonnegative, got {}", v[i])));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::invalid(field, format!("entries sum to {total}, not 1")));
    }
    Ok(())
}

impl CoordinateLawSeq {
    pub fn binary(digits: DigitLaw) -> Self {
        CoordinateLawSeq::Binary { digits }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            CoordinateLawSeq::Binary { .. } => 2,
            CoordinateLawSeq::Constant { law } => law.len(),
            CoordinateLawSeq::Mixture { base, .. } => base.len(),
            CoordinateLawSeq::Explicit { tail, .. } => tail.alphabet_size(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_at("law")
    }

    fn validate_at(&self, field: &str) -> Result<()> {
        match self {
            CoordinateLawSeq::Binary { digits } => digits.validate(),
            CoordinateLawSeq::Constant { law } => check_prob(&format!("{field}.law"), law),
            CoordinateLawSeq::Mixture { base, target, weights } => {
                check_prob(&format!("{field}.base"), base)?;
                check_prob(&format!("{field}.target"), target)?;
                if base.len() != target.len() {
                    return Err(Error::DimensionMismatch { left: base.len(), right: target.len() });
                }
                let (c, ok, what) = match *weights {
                    Weights::Power { c, s } => (c, s.is_finite() && s > 0.0, "s must be finite and positive"),
                    Weights::Geometric { c, ratio } => (c, ratio > 0.0 && ratio < 1.0, "ratio must lie in (0, 1)"),
                };
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::invalid(format!("{field}.weights.c"), format!("must lie in [0, 1], got {c}")));
                }
                if !ok {
                    return Err(Error::invalid(format!("{field}.weights"), what));
                }
                Ok(())
            }
            CoordinateLawSeq::Explicit { prefix, tail } => {
                tail.validate_at(&format!("{field}.tail"))?;
                let s = tail.alphabet_size();
                for (i, v) in prefix.iter().enumerate() {
                    if v.len() != s {
                        return Err(Error::DimensionMismatch { left: v.len(), right: s });
                    }
                    check_prob(&format!("{field}.prefix[{i}]"), v)?;
                }
                Ok(())
            }
        }
    }

    /// Enclosure of the law at index `k >= 1`.
    pub fn law(&self, k: u64) -> Vec<Interval> {
        match self {
            CoordinateLawSeq::Binary { digits } => vec![digits.p0(k), digits.p1(k)],
            CoordinateLawSeq::Constant { law } => law.iter().map(|&x| Interval::point(x)).collect(),
            CoordinateLawSeq::Mixture { base, target, weights } => {
                let w = weights.decay().at(k);
                base.iter()
                    .zip(target)
                    .map(|(&b, &t)| {
                        let d = Interval::point(t).sub(Interval::point(b));
                        Interval::point(b).add(w.mul(d)).clamp_unit()
                    })
                    .collect()
            }
            CoordinateLawSeq::Explicit { prefix, tail } => {
                if k >= 1 && k <= prefix.len() as u64 {
                    prefix[(k - 1) as usize].iter().map(|&x| Interval::point(x)).collect()
                } else {
                    tail.law(k)
                }
            }
        }
    }

    pub fn asymptotics(&self) -> LawAsymptotics {
        match self {
            CoordinateLawSeq::Binary { digits } => {
                let a = digits.asymptotics();
                LawAsymptotics {
                    start: a.start,
                    limit: vec![a.limit, Interval::ONE.sub(a.limit)],
                    direction: vec![Interval::ONE, Interval::point(-1.0)],
                    decay: a.decay,
                }
            }
            CoordinateLawSeq::Constant { law } => LawAsymptotics {
                start: 1,
                limit: law.iter().map(|&x| Interval::point(x)).collect(),
                direction: vec![Interval::ZERO; law.len()],
                decay: Decay::Zero,
            },
            CoordinateLawSeq::Mixture { base, target, weights } => LawAsymptotics {
                start: 1,
                limit: base.iter().map(|&x| Interval::point(x)).collect(),
                direction: base.iter().zip(target).map(|(&b, &t)| Interval::point(t).sub(Interval::point(b))).collect(),
                decay: weights.decay(),
            },
            CoordinateLawSeq::Explicit { prefix, tail } => {
                let mut a = tail.asymptotics();
                a.start = a.start.max(prefix.len() as u64 + 1);
                a
            }
        }
    }
}

/// `ρ(μ, ν) = Σ √(μ(ω) ν(ω))`.
pub fn hellinger_factor(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch { left: mu.len(), right: nu.len() });
    }
    if let Some(x) = mu.iter().chain(nu).find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Range(format!("probability entry {x} is negative or not finite")));
    }
    Ok(mu.iter().zip(nu).map(|(a, b)| (a * b).sqrt()).sum::<f64>().min(1.0))
}

fn affinity(mu: &[Interval], nu: &[Interval]) -> Interval {
    interval::sum(mu.iter().zip(nu).map(|(a, b)| a.mul(*b).sqrt()))
}

/// Deficit envelope for `1 - ρ(μ_k, ν_k) = H²(μ_k, ν_k)`.
fn hellinger_deficit_envelope(mu: &LawAsymptotics, nu: &LawAsymptotics) -> Option<Envelope> {
    let start = mu.start.max(nu.start);
    let h2_limit = Interval::ONE.sub(affinity(&mu.limit, &nu.limit));
    let same_limit = mu.limit.iter().zip(&nu.limit).all(|(a, b)| a.is_point() && a == b);

    if !same_limit {
        if h2_limit.lo <= 0.0 {
            return None;
        }
        // H(μ_k,ν_k) >= H(L_μ,L_ν) - H(μ_k,L_μ) - H(ν_k,L_ν) and H² <= TV
        let h_limit = h2_limit.lo.sqrt() * (1.0 - 1e-15);
        let tv = |a: &LawAsymptotics, k: u64| 0.5 * a.decay.magnitude(k) * a.l1_hi();
        let from = first_index_where(start, |k| tv(mu, k).sqrt() + tv(nu, k).sqrt() <= h_limit / 2.0)?;
        let floor = h_limit * h_limit / 4.0 * (1.0 - 1e-15);
        return Some(Envelope::bounded(from, vec![Bound::constant(1.0)], Some(Bound::constant(floor))));
    }

    let (a, b) = (mu.decay, nu.decay);
    let (mu_moves, nu_moves) = (mu.moving(), nu.moving());
    if !mu_moves && !nu_moves {
        return Some(Envelope::zero(start));
    }

    // upper: ½(√μ-√ν)² <= (μ-ν)²/(2L) once μ,ν >= L/2, and <= ½(μ+ν) where L = 0
    let mut from = start;
    let mut upper = Vec::new();
    for (i, l) in mu.limit.iter().enumerate() {
        let (dm, dn) = (mu.dir_abs_hi(i), nu.dir_abs_hi(i));
        if l.lo > 0.0 {
            let half = l.lo / 2.0;
            from = from.max(first_index_where(start, |k| {
                a.magnitude(k) * dm <= half && b.magnitude(k) * dn <= half
            })?);
            let inv = 1.0 / l.lo * (1.0 + 1e-15);
            upper.extend(a.bound(dm * dm * inv, 2, true).filter(|_| mu_moves));
            upper.extend(b.bound(dn * dn * inv, 2, true).filter(|_| nu_moves));
        } else {
            upper.extend(a.bound(0.5 * dm, 1, true).filter(|_| mu_moves));
            upper.extend(b.bound(0.5 * dn, 1, true).filter(|_| nu_moves));
        }
    }

    // lower: H² >= TV²/2 = ‖μ_k - ν_k‖₁² / 8
    let lower = if !nu_moves {
        a.bound(mu.l1_lo().powi(2) / 8.0, 2, false)
    } else if !mu_moves {
        b.bound(nu.l1_lo().powi(2) / 8.0, 2, false)
    } else if a.same_rate(&b) {
        let diff: Vec<Interval> = mu
            .direction
            .iter()
            .zip(&nu.direction)
            .map(|(dm, dn)| dm.scale(a.coef()).sub(dn.scale(b.coef())))
            .collect();
        if diff.iter().all(|d| *d == Interval::ZERO) {
            return Some(Envelope::zero(start));
        }
        let n1: f64 = diff
            .iter()
            .map(|d| if d.lo > 0.0 { d.lo } else if d.hi < 0.0 { -d.hi } else { 0.0 })
            .sum::<f64>()
            * (1.0 - 1e-15);
        let unit = match a {
            Decay::Power { s, .. } => Decay::Power { c: 1.0, s },
            Decay::Geometric { ratio, .. } => Decay::Geometric { c: 1.0, ratio },
            Decay::Zero => Decay::Zero,
        };
        unit.bound(n1 * n1 / 8.0, 2, false)
    } else {
        let (fast, slow, slow_l1, fast_l1) = if a.slower_than(&b) {
            (b, a, mu.l1_lo(), nu.l1_hi())
        } else if b.slower_than(&a) {
            (a, b, nu.l1_lo(), mu.l1_hi())
        } else {
            (Decay::Zero, Decay::Zero, 0.0, 0.0)
        };
        if slow_l1 > 0.0 {
            // the fast/slow ratio is monotone only past its turning point
            let turn = match (slow, fast) {
                (Decay::Power { s, .. }, Decay::Geometric { ratio, .. }) => (s / (1.0 / ratio).ln()).ceil() as u64 + 1,
                _ => 1,
            };
            let k = first_index_where(start.max(turn), |k| {
                fast.magnitude(k) * fast_l1 <= 0.5 * slow.at(k).lo.abs().min(slow.at(k).hi.abs()) * slow_l1
            });
            match k {
                Some(k) => {
                    from = from.max(k);
                    slow.bound(slow_l1 * slow_l1 / 32.0, 2, false)
                }
                None => None,
            }
        } else {
            None
        }
    };
    Some(Envelope::bounded(from, upper, lower))
}

/// Hellinger affinity factors `ρ(μ_k, ν_k)` as a product sequence.
pub fn hellinger_factors(mu: &CoordinateLawSeq, nu: &CoordinateLawSeq) -> FactorSeq {
    let envelope = hellinger_deficit_envelope(&mu.asymptotics(), &nu.asymptotics());
    let (m, n) = (mu.clone(), nu.clone());
    FactorSeq::new("Hellinger affinity deficit", move |k| affinity(&m.law(k), &n.law(k)).clamp_unit(), envelope)
}

fn support_stable_from(a: &LawAsymptotics) -> Option<u64> {
    first_index_where(a.start, |k| {
        let m = a.decay.magnitude(k);
        a.limit
            .iter()
            .enumerate()
            .all(|(i, l)| l.lo <= 0.0 || l.lo - m * a.dir_abs_hi(i) > 0.0)
    })
}

/// Sign pattern of the eventual support: `Some(true)` certainly positive,
/// `Some(false)` certainly zero.
fn eventual_support(a: &LawAsymptotics, i: usize) -> Option<bool> {
    let l = a.limit[i];
    if l.lo > 0.0 {
        return Some(true);
    }
    if l != Interval::ZERO {
        return None;
    }
    let d = a.direction[i];
    if a.decay.is_zero() || d == Interval::ZERO {
        Some(false)
    } else if d.lo > 0.0 || d.hi < 0.0 {
        Some(true)
    } else {
        None
    }
}

/// Checks `ν_k ≪ μ_k` for every `k`. `Ok(false)` when it cannot be decided.
pub fn check_domination(mu: &CoordinateLawSeq, nu: &CoordinateLawSeq) -> Result<bool> {
    if mu.alphabet_size() != nu.alphabet_size() {
        return Err(Error::DimensionMismatch { left: mu.alphabet_size(), right: nu.alphabet_size() });
    }
    let (am, an) = (mu.asymptotics(), nu.asymptotics());
    let (Some(km), Some(kn)) = (support_stable_from(&am), support_stable_from(&an)) else {
        return Ok(false);
    };
    let stable = km.max(kn);
    if stable > MAX_SCAN {
        return Ok(false);
    }
    let mut certain = true;
    for k in 1..=stable {
        for (i, (m, n)) in mu.law(k).iter().zip(nu.law(k)).enumerate() {
            if m.hi <= 0.0 && n.lo > 0.0 {
                return Err(Error::DominationViolation { index: k, symbol: i });
            }
            if m.lo <= 0.0 && n.hi > 0.0 {
                certain = false;
            }
        }
    }
    for i in 0..mu.alphabet_size() {
        match (eventual_support(&am, i), eventual_support(&an, i)) {
            (Some(true), _) | (_, Some(false)) => {}
            (Some(false), Some(true)) => return Err(Error::DominationViolation { index: stable, symbol: i }),
            _ => certain = false,
        }
    }
    Ok(certain)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dichotomy {
    AbsolutelyContinuous,
    Singular,
    Indeterminate,
}

/// `Π_{k<=n} ρ(μ_k, ν_k)` at a checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartialProduct {
    pub n: u64,
    pub value: Interval,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyVerdict {
    pub outcome: Dichotomy,
    pub hellinger_products: Vec<PartialProduct>,
    pub criterion: ProductVerdict,
}

fn checkpoints(f: &FactorSeq, max_n: u64) -> Vec<PartialProduct> {
    let mut out = Vec::new();
    let mut p = Interval::ONE;
    let mut next = 1u64;
    for k in 1..=max_n {
        p = p.mul(f.factor(k).clamp_unit());
        if k == next {
            out.push(PartialProduct { n: k, value: p });
            next *= 2;
        }
    }
    out
}

pub fn kakutani_dichotomy(mu: &CoordinateLawSeq, nu: &CoordinateLawSeq) -> Result<DichotomyVerdict> {
    kakutani_dichotomy_with(mu, nu, SeriesOptions::default())
}

/// Decides `ν ≪ μ` versus `ν ⊥ μ` for the product measures.
pub fn kakutani_dichotomy_with(
    mu: &CoordinateLawSeq,
    nu: &CoordinateLawSeq,
    opts: SeriesOptions,
) -> Result<DichotomyVerdict> {
    mu.validate()?;
    nu.validate()?;
    let dominated = check_domination(mu, nu)?;
    let factors = hellinger_factors(mu, nu);
    let criterion = match product_verdict_with(&factors, opts) {
        Ok(v) => v,
        // a vanishing affinity means disjoint coordinate supports
        Err(Error::FactorOutOfRange { .. }) => ProductVerdict::ZeroLimit { rule: crate::series::Rule::FinitelySupported },
        Err(e) => return Err(e),
    };
    let outcome = match (&criterion, dominated) {
        (ProductVerdict::PositiveLimit { .. }, true) => Dichotomy::AbsolutelyContinuous,
        (ProductVerdict::ZeroLimit { .. }, true) => Dichotomy::Singular,
        _ => Dichotomy::Indeterminate,
    };
    Ok(DichotomyVerdict { outcome, hellinger_products: checkpoints(&factors, 1024.min(opts.horizon)), criterion })
}

/// The maximizing digit sequence: `prefix[k-1]` for `k <= prefix.len()`,
/// then `eventual` at every later index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AtomDescriptor {
    pub prefix: Vec<usize>,
    pub eventual: usize,
}

impl AtomDescriptor {
    pub fn symbol(&self, k: u64) -> usize {
        if k >= 1 && k <= self.prefix.len() as u64 {
            self.prefix[(k - 1) as usize]
        } else {
            self.eventual
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Discreteness {
    Discrete { atom: AtomDescriptor, mass_lower_bound: f64 },
    NotDiscrete,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscretenessReport {
    pub verdict: Discreteness,
    pub criterion: ProductVerdict,
}

/// Lowest index among the maximal entries.
fn argmax(law: &[Interval]) -> usize {
    let mids: Vec<f64> = law.iter().map(|x| x.mid()).collect();
    let best = mids.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mids.iter().position(|&m| m == best).unwrap_or(0)
}

fn max_entry(law: &[Interval]) -> Interval {
    law.iter().fold(Interval::ZERO, |acc, x| acc.max(*x))
}

fn max_deficit_envelope(a: &LawAsymptotics) -> Option<(Envelope, Option<usize>)> {
    let top = a.limit.iter().fold(Interval::ZERO, |acc, x| acc.max(*x));
    let sup_dir = (0..a.direction.len()).map(|i| a.dir_abs_hi(i)).fold(0.0, f64::max);
    if top.hi < 1.0 {
        let gap = 1.0 - top.hi;
        let from = first_index_where(a.start, |k| a.decay.magnitude(k) * sup_dir <= gap / 2.0)?;
        return Some((
            Envelope::bounded(from, vec![Bound::constant(1.0)], Some(Bound::constant(gap / 2.0 * (1.0 - 1e-15)))),
            None,
        ));
    }
    let j = a.limit.iter().position(|l| *l == Interval::ONE)?;
    if !a.limit.iter().enumerate().all(|(i, l)| i == j || *l == Interval::ZERO) {
        return None;
    }
    if !a.moving() {
        return Some((Envelope::zero(a.start), Some(j)));
    }
    // 1 - μ_k(j) = |d(k) D_j| once μ_k(j) >= 1/2 is the maximum
    let dj_hi = a.dir_abs_hi(j);
    let from = first_index_where(a.start, |k| a.decay.magnitude(k) * dj_hi <= 0.5)?;
    let upper = a.decay.bound(dj_hi, 1, true);
    let lower = a.decay.bound(a.dir_abs_lo(j), 1, false);
    Some((Envelope::bounded(from, upper.into_iter().collect(), lower), Some(j)))
}

pub fn discreteness_test(mu: &CoordinateLawSeq) -> Result<DiscretenessReport> {
    discreteness_test_with(mu, SeriesOptions::default())
}

/// Tests `Π_k max_ω μ_k(ω) > 0` and names the maximizing atom.
pub fn discreteness_test_with(mu: &CoordinateLawSeq, opts: SeriesOptions) -> Result<DiscretenessReport> {
    mu.validate()?;
    let asym = mu.asymptotics();
    let env = max_deficit_envelope(&asym);
    let eventual = env.as_ref().and_then(|(_, j)| *j);
    let from = env.as_ref().map(|(e, _)| e.start);
    let m = mu.clone();
    let factors = FactorSeq::new("max coordinate mass", move |k| max_entry(&m.law(k)), env.map(|(e, _)| e));
    let criterion = product_verdict_with(&factors, opts)?;
    let verdict = match (&criterion, eventual, from) {
        (ProductVerdict::PositiveLimit { lower_bound, .. }, Some(eventual), Some(from)) if from <= MAX_SCAN => {
            let prefix = (1..from).map(|k| argmax(&mu.law(k))).collect();
            Discreteness::Discrete { atom: AtomDescriptor { prefix, eventual }, mass_lower_bound: *lower_bound }
        }
        (ProductVerdict::ZeroLimit { .. }, _, _) => Discreteness::NotDiscrete,
        _ => Discreteness::Indeterminate,
    };
    Ok(DiscretenessReport { verdict, criterion })
}
