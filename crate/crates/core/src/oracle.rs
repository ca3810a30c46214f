//! Brute-force cross-checks. Each routine enumerates digit prefixes with
//! plain `f64` arithmetic of its own and shares no code with the modules it
//! validates beyond reading `a_k`, `r_k` and the coordinate laws.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluator::cdf;
use crate::product::CoordinateLawSeq;
use crate::spec::ConvolutionSpec;

pub const MAX_BOX_LEVEL: u32 = 22;
pub const MAX_HELLINGER_LEVEL: u32 = 20;
pub const MAX_CDF_LEVEL: u32 = 24;
/// Largest number of enumerated states for non-binary alphabets.
const MAX_STATES: f64 = (1u64 << 24) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxCountResult {
    pub level: u32,
    pub box_size: f64,
    pub occupied: u64,
    /// `ln(occupied) / ln(1 / box_size)`.
    pub dim_estimate: f64,
}

fn prefix_sums(spec: &ConvolutionSpec, n: u32, skip_null: bool) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(0.0f64, 1.0f64)];
    for k in 1..=n as u64 {
        let a = spec.a(k)?.mid();
        let p0 = spec.p0(k).mid();
        let p1 = 1.0 - p0;
        let mut next = Vec::with_capacity(out.len() * 2);
        for &(s, p) in &out {
            if !skip_null || p0 > 0.0 {
                next.push((s, p * p0));
            }
            if !skip_null || p1 > 0.0 {
                next.push((s + a, p * p1));
            }
        }
        out = next;
    }
    Ok(out)
}

/// Counts boxes `[j b, (j + 1) b)` meeting the interior of some level-`n`
/// cylinder `[s, s + r_n]` with nonzero mass.
pub fn box_count(spec: &ConvolutionSpec, level: u32, box_size: f64) -> Result<BoxCountResult> {
    if level > MAX_BOX_LEVEL {
        return Err(Error::LevelTooLarge { level, max: MAX_BOX_LEVEL });
    }
    let tail = spec.r(level as u64)?.hi;
    if !(box_size > 0.0) || box_size < tail * (1.0 - 1e-12) {
        return Err(Error::Resolution { box_size, tail });
    }
    const SLACK: f64 = 1e-9;
    let mut boxes: Vec<u64> = prefix_sums(spec, level, true)?
        .par_iter()
        .flat_map_iter(|&(s, _)| {
            let first = (s / box_size + SLACK).floor().max(0.0) as u64;
            let last = (((s + tail) / box_size - SLACK).ceil() as u64).max(first + 1);
            first..last
        })
        .collect();
    boxes.par_sort_unstable();
    boxes.dedup();
    let occupied = boxes.len() as u64;
    let dim_estimate = if box_size >= 1.0 { 0.0 } else { (occupied as f64).ln() / (1.0 / box_size).ln() };
    Ok(BoxCountResult { level, box_size, occupied, dim_estimate: dim_estimate.max(0.0) })
}

/// `Σ_{x ∈ A^n} sqrt(μ(x) ν(x))` over all words of length `n`.
pub fn truncated_hellinger(mu: &CoordinateLawSeq, nu: &CoordinateLawSeq, n: u32) -> Result<f64> {
    if n > MAX_HELLINGER_LEVEL {
        return Err(Error::LevelTooLarge { level: n, max: MAX_HELLINGER_LEVEL });
    }
    let s = mu.alphabet_size();
    if s != nu.alphabet_size() {
        return Err(Error::DimensionMismatch { left: s, right: nu.alphabet_size() });
    }
    if (s as f64).powi(n as i32) > MAX_STATES {
        let max = (MAX_STATES.ln() / (s as f64).ln()).floor() as u32;
        return Err(Error::LevelTooLarge { level: n, max });
    }
    let mut words = vec![(1.0f64, 1.0f64)];
    for k in 1..=n as u64 {
        let m: Vec<f64> = mu.law(k).iter().map(|x| x.mid()).collect();
        let v: Vec<f64> = nu.law(k).iter().map(|x| x.mid()).collect();
        let (m, v) = (&m, &v);
        words = words
            .par_iter()
            .flat_map_iter(|&(pm, pv)| (0..s).map(move |i| (pm * m[i], pv * v[i])))
            .collect();
    }
    Ok(words.par_iter().map(|&(a, b)| (a * b).sqrt()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CdfComparison {
    pub level: u32,
    pub grid: usize,
    pub horizon: u64,
    pub tail_radius: f64,
    /// Largest amount by which `cdf` leaves `[F_n(x - r_n), F_n(x)]`.
    pub max_violation: f64,
    pub worst_x: f64,
    /// Largest `|cdf(x) - F_n(x)|`, for reference.
    pub max_gap: f64,
}

/// Default digit horizon of the evaluator under test.
pub const COMPARE_HORIZON: u64 = 40;

pub fn compare_cdf(spec: &ConvolutionSpec, n: u32, grid: usize) -> Result<CdfComparison> {
    compare_cdf_with(spec, n, grid, COMPARE_HORIZON)
}

/// Checks the sandwich `F_n(x - r_n) <= F(x) <= F_n(x)` on an even grid of
/// `[0, r_0]`, where `F_n` is the enumerated law of the level-`n` partial sum.
pub fn compare_cdf_with(spec: &ConvolutionSpec, n: u32, grid: usize, horizon: u64) -> Result<CdfComparison> {
    if n > MAX_CDF_LEVEL {
        return Err(Error::LevelTooLarge { level: n, max: MAX_CDF_LEVEL });
    }
    let mut atoms = prefix_sums(spec, n, true)?;
    atoms.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let cum: Vec<f64> = atoms
        .iter()
        .scan(0.0, |s, a| {
            *s += a.1;
            Some(*s)
        })
        .collect();
    let f_n = |x: f64| {
        let i = values.partition_point(|&v| v <= x);
        if i == 0 { 0.0 } else { cum[i - 1] }
    };
    let total = spec.r(0)?.lo;
    let rn = spec.r(n as u64)?.hi;
    // absorbs the last-bit disagreement between enumerated sums and exact values
    let eps = 1e-13 * total.max(1.0);
    let xs: Vec<f64> = (0..grid)
        .map(|i| if grid <= 1 { 0.0 } else { total * i as f64 / (grid - 1) as f64 })
        .collect();
    let rows: Vec<(f64, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let v = cdf(spec, x, horizon)?;
            let lower = f_n(x - rn - eps);
            let upper = f_n(x + eps);
            let violation = (lower - v.hi).max(v.lo - upper).max(0.0);
            Ok((x, violation, (v.mid() - f_n(x)).abs()))
        })
        .collect::<Result<_>>()?;
    let (worst_x, max_violation) = rows.iter().fold((0.0, 0.0), |acc, r| if r.1 > acc.1 { (r.0, r.1) } else { acc });
    let max_gap = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(CdfComparison { level: n, grid, horizon, tail_radius: rn, max_violation, worst_x, max_gap })
}

/// Largest single atom of the level-`n` partial sum, after merging values
/// closer than `1e-14`.
pub fn max_atom_mass(spec: &ConvolutionSpec, n: u32) -> Result<f64> {
    if n > MAX_CDF_LEVEL {
        return Err(Error::LevelTooLarge { level: n, max: MAX_CDF_LEVEL });
    }
    let mut atoms = prefix_sums(spec, n, true)?;
    atoms.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = 0.0f64;
    let mut run = (f64::NEG_INFINITY, 0.0);
    for (v, p) in atoms {
        if v - run.0 <= 1e-14 {
            run.1 += p;
        } else {
            run = (v, p);
        }
        best = best.max(run.1);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{catalog, DigitLaw};

    #[test]
    fn cantor_boxes() {
        let b = box_count(&catalog::cantor(), 12, 3f64.powi(-8)).unwrap();
        assert_eq!(b.occupied, 256);
        assert!((b.dim_estimate - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        assert!(matches!(box_count(&catalog::cantor(), 12, 1e-7), Err(Error::Resolution { .. })));
    }

    #[test]
    fn uniform_boxes() {
        let b = box_count(&catalog::uniform(), 10, 0.125).unwrap();
        assert_eq!(b.occupied, 8);
        let z = box_count(&catalog::cantor(), 0, 1.0).unwrap();
        assert_eq!(z.occupied, 1);
        assert!(matches!(box_count(&catalog::cantor(), 0, 0.3), Err(Error::Resolution { .. })));
    }

    #[test]
    fn hellinger_enumeration() {
        let fair = CoordinateLawSeq::binary(catalog::fair());
        let tilt = CoordinateLawSeq::binary(DigitLaw::Constant { p0: 0.6 });
        assert!((truncated_hellinger(&fair, &fair, 8).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(truncated_hellinger(&fair, &tilt, 0).unwrap(), 1.0);
        let two = truncated_hellinger(&fair, &tilt, 2).unwrap();
        assert!((two - 0.989_897_948_556_635_6).abs() < 1e-12, "{two}");
        assert!(matches!(truncated_hellinger(&fair, &tilt, 21), Err(Error::LevelTooLarge { .. })));
    }

    #[test]
    fn sandwich_examples() {
        let c = compare_cdf(&catalog::cantor(), 12, 101).unwrap();
        assert!(c.max_violation <= 1e-10, "{c:?}");
        let u = compare_cdf(&catalog::uniform(), 14, 101).unwrap();
        assert!(u.max_violation <= 1e-10 && u.max_gap <= 2f64.powi(-14) + 1e-10, "{u:?}");
        let pinned = catalog::uniform().with_digits(DigitLaw::Constant { p0: 1.0 }).unwrap();
        let p = compare_cdf(&pinned, 10, 50).unwrap();
        assert_eq!(p.max_violation, 0.0);
        assert_eq!(p.max_gap, 0.0);
    }
}
