//! Numerical evaluation of the law of `φ = Σ φ_k a_k`: digit expansions,
//! certified CDF enclosures, the characteristic function, moments, seeded
//! sampling and the exact law of a partial sum.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::series::{first_index_where, product_verdict, ProductVerdict};
use crate::spec::{ConvolutionSpec, Decay, DigitLaw};

/// Enumeration ceiling for [`truncated_distribution`].
pub const MAX_ENUM_LEVEL: u32 = 24;

/// Atoms closer than this are merged.
pub const MERGE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    /// All `horizon` digits were extracted.
    Exhausted { horizon: u64 },
    /// `x` lies in the gap `(r_k, a_k)` opened at this index.
    GapHit { index: u64 },
    /// The remainder vanished after this index; every later digit is 0.
    Exact { index: u64 },
    /// Rounding could not separate `x` from a cylinder boundary at this index.
    Unresolved { index: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DigitExpansion {
    pub digits: Vec<u8>,
    pub terminal: Terminal,
}

fn check_domain(spec: &ConvolutionSpec, x: f64) -> Result<()> {
    let total = spec.r(0)?;
    if !(x >= 0.0 && x <= total.hi) {
        return Err(Error::Domain { x, upper: total.hi });
    }
    let profile = spec.scales().delta_profile();
    if !profile.all_at_least_one() {
        return Err(Error::HypothesisViolation(
            "digit expansions need δ_k >= 1 certified for every k".into(),
        ));
    }
    Ok(())
}

enum Step {
    One,
    Zero,
    Gap,
    Ambiguous,
}

fn step(rem: Interval, a: Interval, r: Interval) -> Step {
    if rem.lo >= a.hi {
        Step::One
    } else if rem.hi <= r.lo {
        Step::Zero
    } else if rem.hi < a.lo && rem.lo > r.hi {
        Step::Gap
    } else if rem.hi < a.lo {
        // between the 0-cylinder's right edge and the gap: following the
        // 0-branch keeps the cumulative mass exact in both cases
        Step::Zero
    } else if r.hi < rem.lo {
        // between the gap and the 1-cylinder's left edge
        Step::One
    } else {
        Step::Ambiguous
    }
}

struct Walk {
    expansion: DigitExpansion,
    /// Mass of the cylinders entirely to the left of `x`.
    acc: Interval,
    /// Mass of the current cylinder.
    mass: Interval,
}

fn walk(spec: &ConvolutionSpec, x: f64, horizon: u64, with_mass: bool) -> Result<Walk> {
    check_domain(spec, x)?;
    let mut rem = Interval::point(x);
    let mut digits = Vec::new();
    let mut acc = Interval::ZERO;
    let mut mass = Interval::ONE;
    let mut terminal = Terminal::Exhausted { horizon };
    if rem == Interval::ZERO {
        terminal = Terminal::Exact { index: 0 };
    }
    let mut k = 0u64;
    while matches!(terminal, Terminal::Exhausted { .. }) && k < horizon {
        k += 1;
        let a = spec.a(k)?;
        let r = spec.r(k)?;
        let p0 = if with_mass { spec.p0(k) } else { Interval::ZERO };
        match step(rem, a, r) {
            Step::One => {
                digits.push(1);
                rem = rem.sub(a).clamp_nonneg();
                if with_mass {
                    acc = acc.add(mass.mul(p0));
                    mass = mass.mul(Interval::ONE.sub(p0).clamp_unit());
                }
                if rem == Interval::ZERO {
                    terminal = Terminal::Exact { index: k };
                }
            }
            Step::Zero => {
                digits.push(0);
                mass = mass.mul(p0);
            }
            Step::Gap => {
                if with_mass {
                    acc = acc.add(mass.mul(p0));
                    mass = Interval::ZERO;
                }
                terminal = Terminal::GapHit { index: k };
            }
            Step::Ambiguous => terminal = Terminal::Unresolved { index: k },
        }
    }
    Ok(Walk { expansion: DigitExpansion { digits, terminal }, acc, mass })
}

/// Greedy digit extraction: `γ_k = 1` when the remainder reaches `a_k`,
/// `γ_k = 0` when it fits under `r_k`, otherwise `x` sits in a gap.
pub fn digits_of(spec: &ConvolutionSpec, x: f64, horizon: u64) -> Result<DigitExpansion> {
    Ok(walk(spec, x, horizon, false)?.expansion)
}

/// Enclosure of `P(φ <= x)`.
pub fn cdf(spec: &ConvolutionSpec, x: f64, horizon: u64) -> Result<Interval> {
    if x >= spec.r(0)?.hi && x.is_finite() {
        check_domain(spec, x)?;
        return Ok(Interval::ONE);
    }
    let w = walk(spec, x, horizon, true)?;
    let v = match w.expansion.terminal {
        Terminal::GapHit { .. } => w.acc,
        Terminal::Exhausted { .. } | Terminal::Unresolved { .. } => w.acc.add(Interval::new(0.0, w.mass.hi)),
        Terminal::Exact { index } => {
            // x is the left end of its cylinder: add the all-zeros atom
            let run = match product_verdict(&spec.digits().zero_run_factors(index + 1))? {
                ProductVerdict::PositiveLimit { lower_bound, upper_bound, .. } => Interval::new(lower_bound, upper_bound),
                ProductVerdict::ZeroLimit { .. } => Interval::ZERO,
                ProductVerdict::Unknown { partial_product, .. } => Interval::new(0.0, partial_product),
            };
            w.acc.add(w.mass.mul(run))
        }
    };
    Ok(v.clamp_unit())
}

/// CDF enclosures on `points` evenly spaced values of `[from, to]`.
pub fn cdf_grid(spec: &ConvolutionSpec, from: f64, to: f64, points: usize, horizon: u64) -> Result<Vec<(f64, Interval)>> {
    grid(from, to, points)
        .into_par_iter()
        .map(|x| cdf(spec, x, horizon).map(|v| (x, v)))
        .collect()
}

/// `points` evenly spaced values from `from` to `to`, both ends included.
pub fn grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n).map(|i| if i + 1 == n { to } else { from + (to - from) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// `f(t)` with a certified error radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharFnValue {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    /// `|f(t) - (re + i im)| <= radius`.
    pub radius: f64,
    /// Number of factors multiplied.
    pub level: u64,
}

impl CharFnValue {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Truncation cap for the characteristic function product.
const CHARFN_MAX_LEVEL: u64 = 1 << 20;

/// `Π_k (p_{0k} + p_{1k} e^{i t a_k})`, truncated where `|t| r_n <= tol / 2`.
pub fn char_fn(spec: &ConvolutionSpec, t: f64, tol: f64) -> Result<CharFnValue> {
    if !(tol > 0.0) {
        return Err(Error::Range(format!("tol must be positive, got {tol}")));
    }
    if t == 0.0 {
        return Ok(CharFnValue { t, re: 1.0, im: 0.0, radius: 0.0, level: 0 });
    }
    let budget = tol / 2.0;
    let fits = |n: u64| spec.r(n).map(|r| r.hi * t.abs() <= budget).unwrap_or(false);
    let level = first_index_where(0, fits).unwrap_or(CHARFN_MAX_LEVEL).min(CHARFN_MAX_LEVEL);
    let mut z = Complex64::new(1.0, 0.0);
    for k in 1..=level {
        let a = spec.a(k)?.mid();
        let p0 = spec.p0(k).mid();
        z *= Complex64::new(p0, 0.0) + Complex64::from_polar(1.0 - p0, t * a);
    }
    let trunc = t.abs() * spec.r(level)?.hi;
    // each factor has relative error below 8 ulps
    let rounding = level as f64 * 8.0 * f64::EPSILON;
    Ok(CharFnValue { t, re: z.re, im: z.im, radius: trunc + rounding, level })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub mean: Interval,
    pub variance: Interval,
    pub terms: u64,
}

const MOMENT_MAX_TERMS: u64 = 200_000;

/// Enclosure of `p_{1k}` over all `k >= from`.
fn p1_tail_range(digits: &DigitLaw, from: u64) -> Interval {
    let asym = digits.asymptotics();
    if from < asym.start {
        return Interval::new(0.0, 1.0);
    }
    let monotone = match asym.decay {
        Decay::Zero => true,
        Decay::Power { s, .. } => s > 0.0,
        Decay::Geometric { ratio, .. } => ratio > 0.0 && ratio < 1.0,
    };
    if !monotone {
        return Interval::new(0.0, 1.0);
    }
    let m = asym.decay.magnitude(from);
    let p0 = Interval::new(asym.limit.lo - m, asym.limit.hi + m).clamp_unit();
    Interval::ONE.sub(p0).clamp_unit()
}

/// Mean `Σ p_{1k} a_k` and variance `Σ p_{0k} p_{1k} a_k^2`.
pub fn moments(spec: &ConvolutionSpec) -> Result<Moments> {
    let total = spec.r(0)?;
    let target = total.hi * 1e-15;
    let mut mean = Interval::ZERO;
    let mut var = Interval::ZERO;
    let mut n = 0u64;
    loop {
        if n >= MOMENT_MAX_TERMS || spec.r(n)?.hi <= target {
            break;
        }
        n += 1;
        let a = spec.a(n)?;
        let p0 = spec.p0(n);
        let p1 = Interval::ONE.sub(p0).clamp_unit();
        mean = mean.add(p1.mul(a));
        var = var.add(p0.mul(p1).mul(a).mul(a));
    }
    let r = spec.r(n)?;
    let p1 = p1_tail_range(spec.digits(), n + 1);
    let pq_hi = (p1.hi * (1.0 - p1.lo)).min(0.25).max(0.0);
    // every later a_k is at most r_n, so Σ_{k>n} a_k^2 <= r_n^2
    let mean = mean.add(Interval::new(p1.lo * r.lo, p1.hi * r.hi).mul(Interval::new(1.0 - 1e-15, 1.0 + 1e-15)));
    let variance = var.add(Interval::new(0.0, r.hi * r.hi * pq_hi * (1.0 + 1e-15)));
    Ok(Moments { mean, variance, terms: n })
}

/// Seeded draws of `Σ_{k<=horizon} γ_k a_k`. Sample `i` uses stream `i` of
/// the generator, so results do not depend on the thread count.
pub fn sample(spec: &ConvolutionSpec, count: usize, seed: u64, horizon: u64) -> Result<Vec<f64>> {
    let mut a = Vec::with_capacity(horizon as usize);
    let mut p1 = Vec::with_capacity(horizon as usize);
    for k in 1..=horizon {
        a.push(spec.a(k)?.mid());
        p1.push(1.0 - spec.p0(k).mid());
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            a.iter().zip(&p1).fold(0.0, |s, (&ak, &pk)| if rng.random::<f64>() < pk { s + ak } else { s })
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// Exact law of `Σ_{k<=n} φ_k a_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedDistribution {
    pub level: u32,
    pub atoms: Vec<Atom>,
    /// Upper bound of `r_n`.
    pub tail_radius: f64,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl TruncatedDistribution {
    /// `F_n(x) = P(S_n <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let i = self.atoms.partition_point(|a| a.value <= x);
        if i == 0 {
            0.0
        } else {
            self.cumulative[i - 1]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob).fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.value * a.prob).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|a| (a.value - m).powi(2) * a.prob).sum()
    }

    /// Masses on `cells` equal cells starting at `from` with width `width`;
    /// atoms beyond the last cell are counted in it.
    pub fn histogram(&self, from: f64, width: f64, cells: usize) -> Vec<f64> {
        let mut h = vec![0.0; cells];
        for a in &self.atoms {
            let i = (((a.value - from) / width).floor().max(0.0) as usize).min(cells - 1);
            h[i] += a.prob;
        }
        h
    }
}

pub fn truncated_distribution(spec: &ConvolutionSpec, n: u32) -> Result<TruncatedDistribution> {
    if n > MAX_ENUM_LEVEL {
        return Err(Error::LevelTooLarge { level: n, max: MAX_ENUM_LEVEL });
    }
    let mut atoms = vec![(0.0f64, 1.0f64)];
    for k in 1..=n as u64 {
        let a = spec.a(k)?.mid();
        let p0 = spec.p0(k).mid();
        let p1 = 1.0 - p0;
        let ones: Vec<(f64, f64)> = if p1 > 0.0 { atoms.par_iter().map(|&(v, p)| (v + a, p * p1)).collect() } else { Vec::new() };
        if p0 > 0.0 {
            if p0 != 1.0 {
                atoms.par_iter_mut().for_each(|e| e.1 *= p0);
            }
            atoms.extend(ones);
        } else {
            atoms = ones;
        }
    }
    atoms.par_sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<Atom> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for (v, p) in atoms {
        match merged.last_mut() {
            Some(last) if v - anchor <= MERGE_TOL => last.prob += p,
            _ => {
                anchor = v;
                merged.push(Atom { value: v, prob: p });
            }
        }
    }
    let cumulative = merged
        .iter()
        .scan(0.0, |s, a| {
            *s += a.prob;
            Some(*s)
        })
        .collect();
    Ok(TruncatedDistribution { level: n, atoms: merged, tail_radius: spec.r(n as u64)?.hi, cumulative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::catalog;

    #[test]
    fn cantor_digits() {
        let c = catalog::cantor();
        assert_eq!(digits_of(&c, 0.0, 10).unwrap().terminal, Terminal::Exact { index: 0 });
        let third = digits_of(&c, 1.0 / 3.0, 12).unwrap();
        assert_eq!(third.digits[0], 0);
        assert!(third.digits[1..].iter().all(|&d| d == 1), "{third:?}");
        assert_eq!(digits_of(&c, 0.6, 10).unwrap().terminal, Terminal::GapHit { index: 1 });
        assert!(matches!(digits_of(&c, 1.5, 10), Err(Error::Domain { .. })));
    }

    #[test]
    fn cantor_cdf_values() {
        let c = catalog::cantor();
        let v = cdf(&c, 1.0 / 3.0, 30).unwrap();
        assert!((v.lo - 0.5).abs() < 1e-8 && (v.hi - 0.5).abs() < 1e-8, "{v}");
        let q = cdf(&c, 0.25, 16).unwrap();
        assert!((q.lo - 1.0 / 3.0).abs() < 1e-4 && (q.hi - 1.0 / 3.0).abs() < 1e-4, "{q}");
        let q = cdf(&c, 0.25, 40).unwrap();
        assert!((q.lo - 1.0 / 3.0).abs() < 1e-9 && (q.hi - 1.0 / 3.0).abs() < 1e-9, "{q}");
        assert_eq!(cdf(&c, 1.0, 40).unwrap(), Interval::ONE);
    }

    #[test]
    fn uniform_cdf_is_identity() {
        let u = catalog::uniform();
        for i in 1..10 {
            let x = i as f64 / 10.0;
            let v = cdf(&u, x, 40).unwrap();
            assert!(v.contains(x) || (v.mid() - x).abs() < 1e-12, "{x}: {v}");
            assert!(v.width() < 1e-9);
        }
    }

    #[test]
    fn charfn_examples() {
        let u = catalog::uniform();
        let one = char_fn(&u, 0.0, 1e-6).unwrap();
        assert_eq!((one.re, one.im), (1.0, 0.0));
        let z = char_fn(&u, 2.0 * std::f64::consts::PI, 1e-6).unwrap();
        assert!(z.modulus() <= 1e-6, "{z:?}");
        let t = 1.7;
        let f = char_fn(&catalog::cantor(), t, 1e-9).unwrap();
        let g = char_fn(&catalog::cantor(), -t, 1e-9).unwrap();
        assert!((f.re - g.re).abs() < 1e-12 && (f.im + g.im).abs() < 1e-12);
    }

    #[test]
    fn moment_examples() {
        let m = moments(&catalog::cantor()).unwrap();
        assert!(m.mean.contains(0.5) || (m.mean.mid() - 0.5).abs() < 1e-12);
        assert!((m.variance.mid() - 0.125).abs() < 1e-10, "{:?}", m.variance);
        let u = moments(&catalog::uniform()).unwrap();
        assert!((u.mean.mid() - 0.5).abs() < 1e-10 && (u.variance.mid() - 1.0 / 12.0).abs() < 1e-10);
        let pinned = catalog::uniform().with_digits(DigitLaw::Constant { p0: 1.0 }).unwrap();
        let z = moments(&pinned).unwrap();
        assert_eq!(z.mean.lo, 0.0);
        assert!(z.mean.hi < 1e-14 && z.variance.hi < 1e-14);
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = catalog::cantor();
        assert!(sample(&c, 0, 1, 30).unwrap().is_empty());
        let a = sample(&c, 1000, 7, 30).unwrap();
        assert_eq!(a, sample(&c, 1000, 7, 30).unwrap());
        assert_ne!(a, sample(&c, 1000, 8, 30).unwrap());
    }

    #[test]
    fn truncated_examples() {
        let t = truncated_distribution(&catalog::cantor(), 1).unwrap();
        assert_eq!(t.atoms.len(), 2);
        assert_eq!((t.atoms[0].value, t.atoms[0].prob), (0.0, 0.5));
        assert!((t.atoms[1].value - 2.0 / 3.0).abs() < 1e-15);
        let u = truncated_distribution(&catalog::uniform(), 2).unwrap();
        let v: Vec<f64> = u.atoms.iter().map(|a| a.value).collect();
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75]);
        assert!(u.atoms.iter().all(|a| a.prob == 0.25));
        assert!(matches!(truncated_distribution(&catalog::uniform(), 25), Err(Error::LevelTooLarge { .. })));
        let p = truncated_distribution(&catalog::cantor_perturbed(), 12).unwrap();
        assert!((p.total_mass() - 1.0).abs() < 1e-12);
    }
}
