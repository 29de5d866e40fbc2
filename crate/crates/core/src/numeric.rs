//! Order-independent summation and outward-rounded interval arithmetic.

use std::ops::{Add, Mul, Sub};

/// Correctly rounded floating-point sum (Shewchuk's partials, as in Python's
/// `math.fsum`). The result depends only on the multiset of inputs, never on
/// their order.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum { partials: Vec::with_capacity(4) }
    }

    pub fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // round-half-even correction when the tail sits exactly on a tie
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<ExactSum>().value()
}

pub fn exact_mean(values: &[f64]) -> f64 {
    exact_sum(values.iter().copied()) / values.len() as f64
}

/// Closed interval `[lo, hi]` whose operations round outward by one ulp, so the
/// result encloses both the exact and the round-to-nearest value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "[{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// `[c - r, c + r]`, rounded outward.
    pub fn centered(c: f64, r: f64) -> Self {
        if r == 0.0 {
            Interval::point(c)
        } else {
            Interval { lo: (c - r).next_down(), hi: (c + r).next_up() }
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn square(self) -> Self {
        let a = self.lo * self.lo;
        let b = self.hi * self.hi;
        if self.contains_zero() {
            Interval { lo: 0.0, hi: a.max(b).next_up() }
        } else {
            Interval { lo: a.min(b).next_down().max(0.0), hi: a.max(b).next_up() }
        }
    }

    pub fn scale(self, c: f64) -> Self {
        let a = self.lo * c;
        let b = self.hi * c;
        Interval { lo: a.min(b).next_down(), hi: a.max(b).next_up() }
    }

    /// Division by a strictly positive interval.
    pub fn div_positive(self, den: Interval) -> Self {
        debug_assert!(den.lo > 0.0);
        let c = [self.lo / den.lo, self.lo / den.hi, self.hi / den.lo, self.hi / den.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: lo.next_down(), hi: hi.next_up() }
    }

    pub fn hull(self, other: Interval) -> Self {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: (self.lo + rhs.lo).next_down(), hi: (self.hi + rhs.hi).next_up() }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval { lo: (self.lo - rhs.hi).next_down(), hi: (self.hi - rhs.lo).next_up() }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: lo.next_down(), hi: hi.next_up() }
    }
}

/// Accumulates interval endpoints with [`ExactSum`] and rounds the final sum outward.
#[derive(Debug, Clone, Default)]
pub struct IntervalSum {
    lo: ExactSum,
    hi: ExactSum,
}

impl IntervalSum {
    pub fn new() -> Self {
        IntervalSum::default()
    }

    pub fn add(&mut self, x: Interval) {
        self.lo.add(x.lo);
        self.hi.add(x.hi);
    }

    pub fn total(&self) -> Interval {
        Interval { lo: self.lo.value().next_down(), hi: self.hi.value().next_up() }
    }

    /// Mean over `n` terms, rounded outward.
    pub fn mean(&self, n: usize) -> Interval {
        let t = self.total();
        let n = n as f64;
        Interval { lo: (t.lo / n).next_down(), hi: (t.hi / n).next_up() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_sum_handles_cancellation() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.1; 10]), 1.0);
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
        assert_eq!(exact_sum([1e16, 1.0, 1e-16]), 1.0000000000000002e16);
    }

    #[test]
    fn interval_square_straddling_zero() {
        let s = Interval::new(-1.0, 2.0).square();
        assert_eq!(s.lo, 0.0);
        assert!(s.hi >= 4.0);
    }

    proptest! {
        #[test]
        fn exact_sum_is_order_independent(mut v in proptest::collection::vec(-1e6f64..1e6, 0..50), seed in 0u64..1000) {
            let a = exact_sum(v.iter().copied());
            // deterministic shuffle
            let n = v.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                v.swap(i, j);
            }
            prop_assert_eq!(a, exact_sum(v.iter().copied()));
        }

        #[test]
        fn interval_ops_enclose_point_results(
            a in -10.0f64..10.0, ra in 0.0f64..1.0, b in -10.0f64..10.0, rb in 0.0f64..1.0,
            ta in 0.0f64..=1.0, tb in 0.0f64..=1.0,
        ) {
            let ia = Interval::centered(a, ra);
            let ib = Interval::centered(b, rb);
            let x = a - ra + 2.0 * ra * ta;
            let y = b - rb + 2.0 * rb * tb;
            prop_assume!(ia.contains(x) && ib.contains(y));
            prop_assert!((ia + ib).contains(x + y));
            prop_assert!((ia - ib).contains(x - y));
            prop_assert!((ia * ib).contains(x * y));
            prop_assert!(ia.square().contains(x * x));
            let den = Interval::centered(b.abs() + 2.0, rb);
            prop_assert!(ia.div_positive(den).contains(x / (b.abs() + 2.0 - rb + 2.0 * rb * tb)));
        }
    }
}
