//! Exact arithmetic over the rational span of `{1, b, 1/b}`.
//!
//! Charges and lattice shifts in the imaginary Toda theory live on the
//! rational span of `{1, b, 1/b}` where `b` is the coupling. All lattice
//! membership questions (is a difference of charges a weight-lattice vector
//! over `b`? is a pairing an integer?) are decided symbolically on the
//! coefficients, never on floats. Componentwise comparison is sound under
//! the standing genericity assumption that `b^2` is irrational; see
//! [`crate::kinematics::TodaParams`] for the runtime warning when `b` is
//! close to violating it.
//!
//! Pairings of two such values produce terms in `b^2` and `1/b^2`, so the
//! quadratic companion type [`BExpr`] carries five coefficients. It is used
//! for exact conformal-weight differences and exponent bookkeeping.

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Exact rational scalar used throughout the lattice layer.
pub type Rat = Rational64;

/// Returns true when `r` is an integer.
pub fn rat_is_integer(r: &Rat) -> bool {
    r.is_integer()
}

/// Convenience constructor for a rational `p/q`.
pub fn rat(p: i64, q: i64) -> Rat {
    Rational64::new(p, q)
}

/// A value `u + v b + w / b` with exact rational coefficients.
///
/// Equality is componentwise: valid for irrational `b^2`, which is the
/// standing assumption of the whole construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoeffB {
    /// Coefficient of 1.
    pub u: Rat,
    /// Coefficient of `b`.
    pub v: Rat,
    /// Coefficient of `1/b`.
    pub w: Rat,
}

impl CoeffB {
    pub const fn new(u: Rat, v: Rat, w: Rat) -> Self {
        CoeffB { u, v, w }
    }

    pub fn zero() -> Self {
        CoeffB::new(Rat::zero(), Rat::zero(), Rat::zero())
    }

    /// Purely rational value `u`.
    pub fn from_rat(u: Rat) -> Self {
        CoeffB::new(u, Rat::zero(), Rat::zero())
    }

    /// Value `v * b`.
    pub fn times_b_unit(v: Rat) -> Self {
        CoeffB::new(Rat::zero(), v, Rat::zero())
    }

    /// Value `w / b`.
    pub fn over_b_unit(w: Rat) -> Self {
        CoeffB::new(Rat::zero(), Rat::zero(), w)
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero() && self.w.is_zero()
    }

    /// True when the value is a plain rational (no `b` content).
    pub fn is_rational(&self) -> bool {
        self.v.is_zero() && self.w.is_zero()
    }

    /// True when the value is an integer.
    pub fn is_integer(&self) -> bool {
        self.is_rational() && self.u.is_integer()
    }

    /// True when the value lies in `Z / b`, i.e. equals `k/b` with `k` integer.
    pub fn in_z_over_b(&self) -> bool {
        self.u.is_zero() && self.v.is_zero() && self.w.is_integer()
    }

    /// True when the value lies in `b Z`.
    pub fn in_b_z(&self) -> bool {
        self.u.is_zero() && self.w.is_zero() && self.v.is_integer()
    }

    /// Numeric value at coupling `b`.
    pub fn eval(&self, b: f64) -> f64 {
        rat_f64(self.u) + rat_f64(self.v) * b + rat_f64(self.w) / b
    }

    /// Multiplication by `b`, exact when no `b` component is present
    /// (otherwise the result would leave the span).
    pub fn try_times_b(&self) -> Option<CoeffB> {
        if self.v.is_zero() {
            Some(CoeffB::new(self.w, self.u, Rat::zero()))
        } else {
            None
        }
    }

    /// Division by `b`, exact when no `1/b` component is present.
    pub fn try_div_b(&self) -> Option<CoeffB> {
        if self.w.is_zero() {
            Some(CoeffB::new(self.v, Rat::zero(), self.u))
        } else {
            None
        }
    }

    pub fn scale(&self, s: Rat) -> CoeffB {
        CoeffB::new(self.u * s, self.v * s, self.w * s)
    }

    /// Exact product of two span values; the result is quadratic in `b`.
    pub fn mul_coeffb(&self, other: &CoeffB) -> BExpr {
        BExpr {
            cm2: self.w * other.w,
            cm1: self.u * other.w + other.u * self.w,
            c0: self.u * other.u + self.v * other.w + self.w * other.v,
            c1: self.u * other.v + other.u * self.v,
            c2: self.v * other.v,
        }
    }
}

impl Add for CoeffB {
    type Output = CoeffB;
    fn add(self, rhs: CoeffB) -> CoeffB {
        CoeffB::new(self.u + rhs.u, self.v + rhs.v, self.w + rhs.w)
    }
}

impl Sub for CoeffB {
    type Output = CoeffB;
    fn sub(self, rhs: CoeffB) -> CoeffB {
        CoeffB::new(self.u - rhs.u, self.v - rhs.v, self.w - rhs.w)
    }
}

impl Neg for CoeffB {
    type Output = CoeffB;
    fn neg(self) -> CoeffB {
        CoeffB::new(-self.u, -self.v, -self.w)
    }
}

impl AddAssign for CoeffB {
    fn add_assign(&mut self, rhs: CoeffB) {
        *self = *self + rhs;
    }
}

impl SubAssign for CoeffB {
    fn sub_assign(&mut self, rhs: CoeffB) {
        *self = *self - rhs;
    }
}

impl Mul<Rat> for CoeffB {
    type Output = CoeffB;
    fn mul(self, rhs: Rat) -> CoeffB {
        self.scale(rhs)
    }
}

impl fmt::Display for CoeffB {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.u.is_zero() {
            parts.push(format!("{}", self.u));
        }
        if !self.v.is_zero() {
            parts.push(format!("{}*b", self.v));
        }
        if !self.w.is_zero() {
            parts.push(format!("{}/b", self.w));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// A value `c2 b^2 + c1 b + c0 + cm1 / b + cm2 / b^2` with rational
/// coefficients: the closure of [`CoeffB`] under one multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BExpr {
    pub cm2: Rat,
    pub cm1: Rat,
    pub c0: Rat,
    pub c1: Rat,
    pub c2: Rat,
}

impl BExpr {
    pub fn zero() -> Self {
        BExpr {
            cm2: Rat::zero(),
            cm1: Rat::zero(),
            c0: Rat::zero(),
            c1: Rat::zero(),
            c2: Rat::zero(),
        }
    }

    pub fn from_rat(c0: Rat) -> Self {
        BExpr { c0, ..BExpr::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.cm2.is_zero()
            && self.cm1.is_zero()
            && self.c0.is_zero()
            && self.c1.is_zero()
            && self.c2.is_zero()
    }

    /// True when the value is a plain rational.
    pub fn is_rational(&self) -> bool {
        self.cm2.is_zero() && self.cm1.is_zero() && self.c1.is_zero() && self.c2.is_zero()
    }

    /// True when the value is an integer.
    pub fn is_integer(&self) -> bool {
        self.is_rational() && self.c0.is_integer()
    }

    /// The rational part, when the value is purely rational.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.is_rational() {
            Some(self.c0)
        } else {
            None
        }
    }

    pub fn eval(&self, b: f64) -> f64 {
        let b2 = b * b;
        rat_f64(self.c2) * b2
            + rat_f64(self.c1) * b
            + rat_f64(self.c0)
            + rat_f64(self.cm1) / b
            + rat_f64(self.cm2) / b2
    }

    pub fn scale(&self, s: Rat) -> BExpr {
        BExpr {
            cm2: self.cm2 * s,
            cm1: self.cm1 * s,
            c0: self.c0 * s,
            c1: self.c1 * s,
            c2: self.c2 * s,
        }
    }
}

impl From<CoeffB> for BExpr {
    fn from(c: CoeffB) -> BExpr {
        BExpr {
            cm2: Rat::zero(),
            cm1: c.w,
            c0: c.u,
            c1: c.v,
            c2: Rat::zero(),
        }
    }
}

impl Add for BExpr {
    type Output = BExpr;
    fn add(self, rhs: BExpr) -> BExpr {
        BExpr {
            cm2: self.cm2 + rhs.cm2,
            cm1: self.cm1 + rhs.cm1,
            c0: self.c0 + rhs.c0,
            c1: self.c1 + rhs.c1,
            c2: self.c2 + rhs.c2,
        }
    }
}

impl Sub for BExpr {
    type Output = BExpr;
    fn sub(self, rhs: BExpr) -> BExpr {
        BExpr {
            cm2: self.cm2 - rhs.cm2,
            cm1: self.cm1 - rhs.cm1,
            c0: self.c0 - rhs.c0,
            c1: self.c1 - rhs.c1,
            c2: self.c2 - rhs.c2,
        }
    }
}

impl Neg for BExpr {
    type Output = BExpr;
    fn neg(self) -> BExpr {
        BExpr::zero() - self
    }
}

impl fmt::Display for BExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.c2.is_zero() {
            parts.push(format!("{}*b^2", self.c2));
        }
        if !self.c1.is_zero() {
            parts.push(format!("{}*b", self.c1));
        }
        if !self.c0.is_zero() {
            parts.push(format!("{}", self.c0));
        }
        if !self.cm1.is_zero() {
            parts.push(format!("{}/b", self.cm1));
        }
        if !self.cm2.is_zero() {
            parts.push(format!("{}/b^2", self.cm2));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Lossless-enough rational-to-float conversion for desk-scale denominators.
pub fn rat_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Fractional part of a rational reduced to `[0, 1)`.
pub fn rat_fract(r: Rat) -> Rat {
    let fl = r.floor();
    r - fl
}

/// True when `x` is within `tol` of some integer (float-side detection).
pub fn f64_near_integer(x: f64, tol: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() < tol && r.abs() < 9.0e15 {
        Some(r as i64)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coeffb_products_cover_quadratic_span() {
        // (1 + 2b + 3/b)(4 + 5b + 6/b)
        let a = CoeffB::new(rat(1, 1), rat(2, 1), rat(3, 1));
        let b = CoeffB::new(rat(4, 1), rat(5, 1), rat(6, 1));
        let p = a.mul_coeffb(&b);
        assert_eq!(p.c2, rat(10, 1));
        assert_eq!(p.c1, rat(13, 1));
        assert_eq!(p.c0, rat(4 + 12 + 15, 1));
        assert_eq!(p.cm1, rat(6 + 12, 1));
        assert_eq!(p.cm2, rat(18, 1));
        for bval in [0.731_f64, 0.9, 1.2] {
            let lhs = a.eval(bval) * b.eval(bval);
            assert!((lhs - p.eval(bval)).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn lattice_membership_predicates() {
        assert!(CoeffB::over_b_unit(rat(-3, 1)).in_z_over_b());
        assert!(!CoeffB::over_b_unit(rat(1, 2)).in_z_over_b());
        assert!(CoeffB::times_b_unit(rat(7, 1)).in_b_z());
        assert!(CoeffB::zero().in_z_over_b() && CoeffB::zero().in_b_z());
        assert!(!CoeffB::from_rat(rat(1, 1)).in_z_over_b());
    }

    #[test]
    fn b_shift_round_trips() {
        let x = CoeffB::new(rat(2, 3), Rat::zero(), rat(5, 7));
        let xb = x.try_times_b().unwrap();
        assert_eq!(xb, CoeffB::new(rat(5, 7), rat(2, 3), Rat::zero()));
        assert_eq!(xb.try_div_b().unwrap(), x);
        assert!(CoeffB::times_b_unit(rat(1, 1)).try_times_b().is_none());
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (-40i64..40, 1i64..8).prop_map(|(p, q)| rat(p, q))
    }

    fn arb_coeffb() -> impl Strategy<Value = CoeffB> {
        (arb_rat(), arb_rat(), arb_rat()).prop_map(|(u, v, w)| CoeffB::new(u, v, w))
    }

    proptest! {
        #[test]
        fn eval_is_linear(a in arb_coeffb(), c in arb_coeffb(), s in arb_rat()) {
            let b = 0.8377;
            let lhs = (a + c.scale(s)).eval(b);
            let rhs = a.eval(b) + rat_f64(s) * c.eval(b);
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn product_eval_matches_symbolic(a in arb_coeffb(), c in arb_coeffb()) {
            let b = 1.1731;
            let sym = a.mul_coeffb(&c).eval(b);
            let num = a.eval(b) * c.eval(b);
            prop_assert!((sym - num).abs() < 1e-8 * (1.0 + num.abs()));
        }
    }
}
