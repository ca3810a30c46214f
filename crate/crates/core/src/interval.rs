//! Closed real intervals with outward rounding.
//!
//! Rounding direction is recovered from error-free transformations (two-sum,
//! fused multiply-add residuals) instead of switching the FPU rounding mode,
//! so an operation whose result is exactly representable yields a point
//! interval. Results in the subnormal range are widened by one ulp on both
//! sides because the residual is not exact there.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Below this magnitude the fma residual may be inexact.
const RESIDUAL_FLOOR: f64 = 2.004_168_360_008_973e-292; // 2^-969

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

fn fragile(x: f64) -> bool {
    x.abs() < RESIDUAL_FLOOR
}

fn add_dir(a: f64, b: f64, up: bool) -> f64 {
    let s = a + b;
    if s.is_infinite() {
        if a.is_infinite() || b.is_infinite() {
            return s;
        }
        // overflow
        return if up { s } else if s > 0.0 { f64::MAX } else { s };
    }
    if s.is_nan() {
        return s;
    }
    let e = two_sum_err(a, b, s);
    if up && e > 0.0 {
        s.next_up()
    } else if !up && e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn mul_dir(a: f64, b: f64, up: bool) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p.is_infinite() {
        if a.is_infinite() || b.is_infinite() {
            return p;
        }
        return if up {
            if p > 0.0 { p } else { f64::MIN }
        } else if p > 0.0 {
            f64::MAX
        } else {
            p
        };
    }
    if fragile(p) {
        return if up { p.next_up() } else { p.next_down() };
    }
    let e = a.mul_add(b, -p);
    if up && e > 0.0 {
        p.next_up()
    } else if !up && e < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn div_dir(a: f64, b: f64, up: bool) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_infinite() {
        return if up {
            if q > 0.0 { q } else { f64::MIN }
        } else if q > 0.0 {
            f64::MAX
        } else {
            q
        };
    }
    if b.is_infinite() || fragile(q) {
        return if up { q.next_up() } else { q.next_down() };
    }
    // a - q*b, exact when q is not tiny
    let r = (-q).mul_add(b, a);
    let sign = r * b.signum();
    if up && sign > 0.0 {
        q.next_up()
    } else if !up && sign < 0.0 {
        q.next_down()
    } else {
        q
    }
}

fn sqrt_dir(x: f64, up: bool) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    if fragile(x) {
        return if up { s.next_up() } else { s.next_down().max(0.0) };
    }
    let r = (-s).mul_add(s, x);
    if up && r > 0.0 {
        s.next_up()
    } else if !up && r < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn widen_ulps(x: f64, n: usize, up: bool) -> f64 {
    let mut y = x;
    for _ in 0..n {
        y = if up { y.next_up() } else { y.next_down() };
    }
    y
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Smallest interval containing both.
    pub fn hull(self, other: Interval) -> Self {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(self) -> f64 {
        if self.hi.is_infinite() {
            return self.hi;
        }
        self.lo + 0.5 * (self.hi - self.lo)
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Certainly strictly greater than `x`.
    pub fn gt(self, x: f64) -> bool {
        self.lo > x
    }

    /// Certainly strictly less than `x`.
    pub fn lt(self, x: f64) -> bool {
        self.hi < x
    }

    pub fn clamp_nonneg(self) -> Self {
        Interval::new(self.lo.max(0.0), self.hi.max(0.0))
    }

    pub fn clamp_unit(self) -> Self {
        Interval::new(self.lo.clamp(0.0, 1.0), self.hi.clamp(0.0, 1.0))
    }

    pub fn add(self, o: Interval) -> Self {
        Interval::new(add_dir(self.lo, o.lo, false), add_dir(self.hi, o.hi, true))
    }

    pub fn sub(self, o: Interval) -> Self {
        Interval::new(add_dir(self.lo, -o.hi, false), add_dir(self.hi, -o.lo, true))
    }

    pub fn neg(self) -> Self {
        Interval::new(-self.hi, -self.lo)
    }

    pub fn mul(self, o: Interval) -> Self {
        if self.lo >= 0.0 && o.lo >= 0.0 {
            return Interval::new(mul_dir(self.lo, o.lo, false), mul_dir(self.hi, o.hi, true));
        }
        let cands = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let lo = cands
            .iter()
            .map(|&(a, b)| mul_dir(a, b, false))
            .fold(f64::INFINITY, f64::min);
        let hi = cands
            .iter()
            .map(|&(a, b)| mul_dir(a, b, true))
            .fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    pub fn scale(self, c: f64) -> Self {
        self.mul(Interval::point(c))
    }

    /// Division by an interval that does not contain zero.
    pub fn div(self, o: Interval) -> Self {
        assert!(o.lo > 0.0 || o.hi < 0.0, "interval division by [{}, {}]", o.lo, o.hi);
        if self.lo >= 0.0 && o.lo > 0.0 {
            return Interval::new(div_dir(self.lo, o.hi, false), div_dir(self.hi, o.lo, true));
        }
        let cands = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let lo = cands
            .iter()
            .map(|&(a, b)| div_dir(a, b, false))
            .fold(f64::INFINITY, f64::min);
        let hi = cands
            .iter()
            .map(|&(a, b)| div_dir(a, b, true))
            .fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    pub fn recip(self) -> Self {
        Interval::ONE.div(self)
    }

    pub fn sqrt(self) -> Self {
        Interval::new(sqrt_dir(self.lo, false), sqrt_dir(self.hi, true))
    }

    /// Integer power of a nonnegative interval by repeated squaring.
    pub fn powi(self, mut n: u64) -> Self {
        assert!(self.lo >= 0.0, "powi on interval with negative part");
        let mut acc = Interval::ONE;
        let mut base = self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(base);
            }
        }
        acc
    }

    pub fn min(self, o: Interval) -> Self {
        Interval::new(self.lo.min(o.lo), self.hi.min(o.hi))
    }

    pub fn max(self, o: Interval) -> Self {
        Interval::new(self.lo.max(o.lo), self.hi.max(o.hi))
    }

    // libm transcendental functions are assumed accurate to within one ulp;
    // two ulps of widening on each side covers that.

    pub fn exp(self) -> Self {
        if self == Interval::ZERO {
            return Interval::ONE;
        }
        Interval::new(
            widen_ulps(self.lo.exp(), 2, false).max(0.0),
            widen_ulps(self.hi.exp(), 2, true),
        )
    }

    pub fn ln(self) -> Self {
        assert!(self.lo > 0.0, "ln of nonpositive interval");
        Interval::new(widen_ulps(self.lo.ln(), 2, false), widen_ulps(self.hi.ln(), 2, true))
    }

    /// `x^(-s)` for positive `x` and real `s`. Integer exponents go through
    /// exact repeated squaring.
    pub fn pow_neg(x: f64, s: f64) -> Self {
        debug_assert!(x > 0.0);
        if s.fract() == 0.0 && s.abs() <= 4096.0 {
            let p = Interval::point(x).powi(s.abs() as u64);
            return if s >= 0.0 { p.recip().clamp_nonneg() } else { p };
        }
        let v = x.powf(-s);
        if v == 0.0 {
            return Interval::new(0.0, f64::MIN_POSITIVE);
        }
        Interval::new(widen_ulps(v, 3, false).max(0.0), widen_ulps(v, 3, true))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Sum of nonnegative terms as an enclosure.
pub fn sum<I: IntoIterator<Item = Interval>>(it: I) -> Interval {
    it.into_iter().fold(Interval::ZERO, Interval::add)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_operations_stay_points() {
        let half = Interval::point(0.5);
        assert_eq!(Interval::ONE.sub(half).div(half), Interval::ONE);
        assert_eq!(Interval::point(3.0).powi(5), Interval::point(243.0));
        assert_eq!(Interval::point(4.0).sqrt(), Interval::point(2.0));
        assert_eq!(half.powi(10), Interval::point(1.0 / 1024.0));
    }

    #[test]
    fn inexact_operations_bracket() {
        let third = Interval::ONE.div(Interval::point(3.0));
        assert!(third.lo < third.hi);
        assert_eq!(third.hi, third.lo.next_up());
        let back = third.mul(Interval::point(3.0));
        assert!(back.contains(1.0));
        let s = Interval::point(0.1).add(Interval::point(0.2));
        // 0.1 + 0.2 in exact decimal arithmetic of the binary inputs
        assert!(s.lo <= 0.30000000000000004 && s.hi >= 0.30000000000000004);
        let r2 = Interval::point(2.0).sqrt();
        assert!(r2.mul(r2).contains(2.0));
    }

    #[test]
    fn underflow_and_overflow_are_bracketed() {
        let tiny = Interval::point(0.5).powi(1100);
        assert!(tiny.lo <= 0.0 && tiny.hi > 0.0);
        let huge = Interval::point(2.0).powi(1100);
        assert_eq!(huge.hi, f64::INFINITY);
        assert_eq!(huge.lo, f64::MAX);
        let q = Interval::ONE.div(huge);
        assert!(q.lo <= 0.0 && q.hi > 0.0 && q.hi < 1e-300);
    }

    #[test]
    fn mixed_sign_multiplication() {
        let a = Interval::new(-1.0, 2.0);
        let b = Interval::new(-3.0, 0.5);
        let p = a.mul(b);
        assert_eq!(p, Interval::new(-6.0, 3.0));
    }
}
