//! Intervals over exact rationals with infinite endpoints.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::Rational;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bound {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl Bound {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Bound::Finite(q) => Some(q),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Bound::Finite(q) if q.is_zero())
    }

    fn sign(&self) -> i8 {
        match self {
            Bound::NegInf => -1,
            Bound::PosInf => 1,
            Bound::Finite(q) if q.is_zero() => 0,
            Bound::Finite(q) if q.is_negative() => -1,
            Bound::Finite(_) => 1,
        }
    }

    fn neg(&self) -> Bound {
        match self {
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
            Bound::Finite(q) => Bound::Finite(-q),
        }
    }

    /// Sum of two bounds; `inf + -inf` never arises from well-formed intervals.
    fn add(&self, other: &Bound) -> Bound {
        match (self, other) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(a + b),
            (Bound::NegInf, _) | (_, Bound::NegInf) => Bound::NegInf,
            _ => Bound::PosInf,
        }
    }

    /// Product with the interval-arithmetic convention `0 * inf = 0`.
    fn mul(&self, other: &Bound) -> Bound {
        if self.is_zero() || other.is_zero() {
            return Bound::Finite(Rational::zero());
        }
        match (self, other) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(a * b),
            _ => {
                if self.sign() * other.sign() > 0 {
                    Bound::PosInf
                } else {
                    Bound::NegInf
                }
            }
        }
    }

    fn map_finite(&self, f: impl Fn(&Rational) -> Rational) -> Bound {
        match self {
            Bound::Finite(q) => Bound::Finite(f(q)),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-oo"),
            Bound::PosInf => write!(f, "+oo"),
            Bound::Finite(q) => write!(f, "{q}"),
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A closed interval `[lo, hi]`, or bottom. Bottom has the single canonical
/// representation `[+oo, -oo]`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: Bound,
    hi: Bound,
}

impl Interval {
    pub fn new(lo: Bound, hi: Bound) -> Interval {
        if lo == Bound::PosInf || hi == Bound::NegInf || lo > hi {
            Interval::bottom()
        } else {
            Interval { lo, hi }
        }
    }

    pub fn bottom() -> Interval {
        Interval {
            lo: Bound::PosInf,
            hi: Bound::NegInf,
        }
    }

    pub fn top() -> Interval {
        Interval {
            lo: Bound::NegInf,
            hi: Bound::PosInf,
        }
    }

    pub fn point(q: Rational) -> Interval {
        Interval {
            lo: Bound::Finite(q.clone()),
            hi: Bound::Finite(q),
        }
    }

    pub fn int(v: i64) -> Interval {
        Interval::point(Rational::from_int(v))
    }

    pub fn range(lo: i64, hi: i64) -> Interval {
        Interval::new(
            Bound::Finite(Rational::from_int(lo)),
            Bound::Finite(Rational::from_int(hi)),
        )
    }

    pub fn at_least(lo: Rational) -> Interval {
        Interval::new(Bound::Finite(lo), Bound::PosInf)
    }

    pub fn at_most(hi: Rational) -> Interval {
        Interval::new(Bound::NegInf, Bound::Finite(hi))
    }

    pub fn lo(&self) -> &Bound {
        &self.lo
    }

    pub fn hi(&self) -> &Bound {
        &self.hi
    }

    pub fn is_bottom(&self) -> bool {
        self.lo == Bound::PosInf
    }

    pub fn is_top(&self) -> bool {
        self.lo == Bound::NegInf && self.hi == Bound::PosInf
    }

    pub fn as_point(&self) -> Option<&Rational> {
        match (&self.lo, &self.hi) {
            (Bound::Finite(a), Bound::Finite(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn contains(&self, q: &Rational) -> bool {
        let b = Bound::Finite(q.clone());
        !self.is_bottom() && self.lo <= b && b <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Rational::zero())
    }

    pub fn leq(&self, other: &Interval) -> bool {
        self.is_bottom() || (!other.is_bottom() && other.lo <= self.lo && self.hi <= other.hi)
    }

    pub fn join(&self, other: &Interval) -> Interval {
        if self.is_bottom() {
            return other.clone();
        }
        if other.is_bottom() {
            return self.clone();
        }
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn meet(&self, other: &Interval) -> Interval {
        if self.is_bottom() || other.is_bottom() {
            return Interval::bottom();
        }
        Interval::new(
            self.lo.clone().max(other.lo.clone()),
            self.hi.clone().min(other.hi.clone()),
        )
    }

    /// Standard interval widening: unstable bounds jump to infinity.
    pub fn widen(&self, other: &Interval) -> Interval {
        if self.is_bottom() {
            return other.clone();
        }
        if other.is_bottom() {
            return self.clone();
        }
        let lo = if other.lo < self.lo {
            Bound::NegInf
        } else {
            self.lo.clone()
        };
        let hi = if other.hi > self.hi {
            Bound::PosInf
        } else {
            self.hi.clone()
        };
        Interval { lo, hi }
    }

    /// Restricts to integer-valued bounds: `[ceil lo, floor hi]`.
    pub fn tighten_int(&self) -> Interval {
        if self.is_bottom() {
            return Interval::bottom();
        }
        Interval::new(self.lo.map_finite(|q| q.ceil()), self.hi.map_finite(|q| q.floor()))
    }

    /// Image under truncation toward zero, which is monotone.
    pub fn trunc(&self) -> Interval {
        if self.is_bottom() {
            return Interval::bottom();
        }
        Interval::new(self.lo.map_finite(|q| q.trunc()), self.hi.map_finite(|q| q.trunc()))
    }

    pub fn neg(&self) -> Interval {
        if self.is_bottom() {
            return Interval::bottom();
        }
        Interval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        if self.is_bottom() || other.is_bottom() {
            return Interval::bottom();
        }
        Interval::new(self.lo.add(&other.lo), self.hi.add(&other.hi))
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        if self.is_bottom() || other.is_bottom() {
            return Interval::bottom();
        }
        let products = [
            self.lo.mul(&other.lo),
            self.lo.mul(&other.hi),
            self.hi.mul(&other.lo),
            self.hi.mul(&other.hi),
        ];
        let lo = products.iter().min().cloned().unwrap();
        let hi = products.iter().max().cloned().unwrap();
        Interval::new(lo, hi)
    }

    /// Exact rational division. Returns `None` when the divisor may be zero;
    /// the caller decides how to report that.
    pub fn div(&self, other: &Interval) -> Option<Interval> {
        if self.is_bottom() || other.is_bottom() {
            return Some(Interval::bottom());
        }
        if other.contains_zero() {
            return None;
        }
        // 1/[a,b] with 0 outside [a,b] is [1/b, 1/a].
        let recip = |b: &Bound| match b {
            Bound::Finite(q) => Bound::Finite(q.recip()),
            _ => Bound::Finite(Rational::zero()),
        };
        let inv = Interval::new(recip(&other.hi), recip(&other.lo));
        Some(self.mul(&inv))
    }

    pub fn min(&self, other: &Interval) -> Interval {
        if self.is_bottom() || other.is_bottom() {
            return Interval::bottom();
        }
        Interval::new(
            self.lo.clone().min(other.lo.clone()),
            self.hi.clone().min(other.hi.clone()),
        )
    }

    pub fn max(&self, other: &Interval) -> Interval {
        if self.is_bottom() || other.is_bottom() {
            return Interval::bottom();
        }
        Interval::new(
            self.lo.clone().max(other.lo.clone()),
            self.hi.clone().max(other.hi.clone()),
        )
    }

    /// `self << other` on integers; precise only for non-negative operands.
    pub fn shl(&self, other: &Interval) -> Interval {
        if self.is_bottom() || other.is_bottom() {
            return Interval::bottom();
        }
        let non_neg = |i: &Interval| matches!(&i.lo, Bound::Finite(q) if !q.is_negative());
        if !non_neg(self) || !non_neg(other) {
            return Interval::top();
        }
        let lo_shift = other.lo.finite().and_then(|q| q.ceil().to_i64());
        let lo = match (self.lo.finite(), lo_shift) {
            (Some(a), Some(s)) if s <= 256 => Bound::Finite(a * &pow2(s)),
            _ => return Interval::top(),
        };
        let hi = match (&self.hi, &other.hi) {
            (Bound::Finite(b), Bound::Finite(s)) => match s.floor().to_i64() {
                Some(s) if s <= 256 => Bound::Finite(b * &pow2(s)),
                _ => Bound::PosInf,
            },
            _ => Bound::PosInf,
        };
        Interval::new(lo, hi).tighten_int()
    }

    /// `self >> other`; only handled for point operands.
    pub fn shr(&self, other: &Interval) -> Interval {
        match (self.as_point(), other.as_point()) {
            (Some(a), Some(s)) => match (a.to_i64(), s.to_i64()) {
                (Some(a), Some(s)) if (0..64).contains(&s) => Interval::int(a >> s),
                _ => Interval::top(),
            },
            _ if self.is_bottom() || other.is_bottom() => Interval::bottom(),
            _ => Interval::top(),
        }
    }

    /// C remainder. Precise for points; otherwise bounded by the divisor
    /// magnitude and the sign of the dividend. `None` when the divisor may
    /// be zero.
    pub fn rem(&self, other: &Interval) -> Option<Interval> {
        if self.is_bottom() || other.is_bottom() {
            return Some(Interval::bottom());
        }
        if other.contains_zero() {
            return None;
        }
        if let (Some(a), Some(b)) = (self.as_point(), other.as_point()) {
            if let (Some(a), Some(b)) = (a.to_i64(), b.to_i64()) {
                return Some(Interval::int(a % b));
            }
        }
        let m = match (other.lo.neg().max(other.hi.clone()), ()) {
            (Bound::Finite(q), ()) => Bound::Finite(q - Rational::one()),
            (b, ()) => b,
        };
        let lo = if self.lo.sign() >= 0 {
            Bound::Finite(Rational::zero())
        } else {
            m.neg()
        };
        let hi = if self.hi.sign() <= 0 {
            Bound::Finite(Rational::zero())
        } else {
            m
        };
        Some(Interval::new(lo, hi))
    }

    /// Three-valued truth of an interval as a condition.
    pub fn truth(&self) -> Truth {
        if self.is_bottom() {
            Truth::Unreachable
        } else if self.as_point().is_some_and(|q| q.is_zero()) {
            Truth::False
        } else if !self.contains_zero() {
            Truth::True
        } else {
            Truth::Unknown
        }
    }

    pub fn from_truth(t: Truth) -> Interval {
        match t {
            Truth::True => Interval::int(1),
            Truth::False => Interval::int(0),
            Truth::Unknown => Interval::range(0, 1),
            Truth::Unreachable => Interval::bottom(),
        }
    }

    /// Truth of `self op other` for a comparison operator.
    pub fn compare(&self, op: crate::expr::BinOp, other: &Interval) -> Truth {
        use crate::expr::BinOp::*;
        if self.is_bottom() || other.is_bottom() {
            return Truth::Unreachable;
        }
        let (a, b) = (self, other);
        let always = |p: bool| if p { Some(true) } else { None };
        let never = |p: bool| if p { Some(false) } else { None };
        let verdict = match op {
            Lt => always(a.hi < b.lo).or(never(a.lo >= b.hi)),
            Le => always(a.hi <= b.lo).or(never(a.lo > b.hi)),
            Gt => always(a.lo > b.hi).or(never(a.hi <= b.lo)),
            Ge => always(a.lo >= b.hi).or(never(a.hi < b.lo)),
            Eq => {
                if a.meet(b).is_bottom() {
                    Some(false)
                } else {
                    always(a.as_point().is_some() && a == b)
                }
            }
            Ne => {
                if a.meet(b).is_bottom() {
                    Some(true)
                } else {
                    never(a.as_point().is_some() && a == b)
                }
            }
            _ => None,
        };
        match verdict {
            Some(true) => Truth::True,
            Some(false) => Truth::False,
            None => Truth::Unknown,
        }
    }
}

fn pow2(s: i64) -> Rational {
    let mut r = Rational::one();
    for _ in 0..s {
        r = r * Rational::from_int(2);
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
    Unreachable,
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bottom() {
            write!(f, "_|_")
        } else if let Some(q) = self.as_point() {
            write!(f, "[{q},{q}]")
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn widening_jumps_unstable_bound() {
        let w = Interval::range(0, 1).widen(&Interval::range(0, 2));
        assert_eq!(w, Interval::at_least(Rational::zero()));
    }

    #[test]
    fn meet_of_touching_intervals() {
        assert_eq!(Interval::range(1, 2).meet(&Interval::range(2, 4)), Interval::int(2));
        assert!(Interval::range(1, 2).meet(&Interval::range(3, 4)).is_bottom());
    }

    #[test]
    fn product_uses_endpoint_extremes() {
        // min/max over {1*3, 1*4, 2*3, 2*4}
        assert_eq!(Interval::range(1, 2).mul(&Interval::range(3, 4)), Interval::range(3, 8));
        assert_eq!(Interval::range(-1, 2).mul(&Interval::range(3, 4)), Interval::range(-4, 8));
    }

    #[test]
    fn division_by_possible_zero_is_refused() {
        assert!(Interval::range(1, 2).div(&Interval::range(-1, 1)).is_none());
        assert_eq!(
            Interval::int(1).div(&Interval::int(4)).unwrap(),
            Interval::point(q(1, 4))
        );
        assert_eq!(
            Interval::int(1).div(&Interval::range(2, 4)).unwrap(),
            Interval::new(Bound::Finite(q(1, 4)), Bound::Finite(q(1, 2)))
        );
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        let i = Interval::int(0).mul(&Interval::top());
        assert_eq!(i, Interval::int(0));
    }

    #[test]
    fn shift_left_matches_powers_of_two() {
        assert_eq!(Interval::int(1).shl(&Interval::int(2)), Interval::int(4));
        assert_eq!(Interval::int(1).shl(&Interval::range(1, 3)), Interval::range(2, 8));
        assert_eq!(Interval::int(1).shl(&Interval::at_least(Rational::one())).hi(), &Bound::PosInf);
    }

    #[test]
    fn integer_tightening() {
        let i = Interval::new(Bound::Finite(q(1, 2)), Bound::Finite(q(7, 2)));
        assert_eq!(i.tighten_int(), Interval::range(1, 3));
        let j = Interval::new(Bound::Finite(q(1, 3)), Bound::Finite(q(2, 3)));
        assert!(j.tighten_int().is_bottom());
    }

    #[test]
    fn comparisons() {
        use crate::expr::BinOp;
        assert_eq!(Interval::range(0, 5).compare(BinOp::Gt, &Interval::int(10)), Truth::False);
        assert_eq!(Interval::range(11, 20).compare(BinOp::Gt, &Interval::int(10)), Truth::True);
        assert_eq!(Interval::range(0, 20).compare(BinOp::Gt, &Interval::int(10)), Truth::Unknown);
        assert_eq!(Interval::int(3).compare(BinOp::Ne, &Interval::int(3)), Truth::False);
    }

    #[test]
    fn remainder_bounds() {
        assert_eq!(Interval::int(7).rem(&Interval::int(3)).unwrap(), Interval::int(1));
        assert_eq!(Interval::int(-7).rem(&Interval::int(3)).unwrap(), Interval::int(-1));
        assert_eq!(Interval::range(0, 100).rem(&Interval::int(4)).unwrap(), Interval::range(0, 3));
    }
}
