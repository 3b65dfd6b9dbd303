//! Special functions on the real line: signed log-gamma, the ratio
//! `gamma_ratio(x) = Gamma(x)/Gamma(1-x)`, the two-parameter functions
//! `Upsilon_b` and `Gamma_b`, and the leading-order value type that tracks
//! zeros and poles through products and square roots.
//!
//! `Upsilon_b` is computed from its integral representation inside the strip
//! `0 < x < b + 1/b` and extended everywhere by its shift relations
//! `Upsilon(x + b) = gamma_ratio(b x) b^(1 - 2 b x) Upsilon(x)` and the same
//! with `b -> 1/b`. Arguments on the zero lattice `-mb - l/b` and
//! `(m+1)b + (l+1)/b` are recognized exactly when the argument is given as a
//! [`CoeffB`], and the returned [`SpecialValue`] then carries the order of
//! the zero and the leading coefficient instead of a meaningless float.

use crate::error::{Result, TodaError};
use crate::exact::{f64_near_integer, CoeffB};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

/// Signed natural log of the gamma function: returns `(ln|Gamma(x)|, sign)`.
///
/// Errors at the poles `x = 0, -1, -2, ...` (detected within 1e-12).
pub fn ln_gamma_signed(x: f64) -> Result<(f64, i8)> {
    if !x.is_finite() {
        return Err(TodaError::OutsideDomain(x, "gamma argument not finite".into()));
    }
    if x <= 0.5 {
        // Reflection: Gamma(x) = pi / (sin(pi x) Gamma(1 - x)).
        if let Some(_k) = f64_near_integer(x, 1e-12) {
            if x < 0.5 {
                return Err(TodaError::OutsideDomain(x, "gamma pole".into()));
            }
        }
        let (lg, s) = ln_gamma_positive(1.0 - x);
        debug_assert_eq!(s, 1);
        // sin(pi x) via the fractional part for accuracy at large |x|.
        let (ls, ss) = ln_sin_pi(x);
        Ok((PI.ln() - ls - lg, ss))
    } else {
        Ok(ln_gamma_positive(x))
    }
}

/// `ln|sin(pi x)|` and its sign, accurate for large `|x|`.
fn ln_sin_pi(x: f64) -> (f64, i8) {
    let k = x.floor();
    let r = x - k;
    // sin(pi(k + r)) = (-1)^k sin(pi r).
    let sign = if (k as i64).rem_euclid(2) == 0 { 1 } else { -1 };
    let s = (PI * r).sin();
    ((s.abs()).ln(), if s >= 0.0 { sign } else { -sign })
}

/// Lanczos approximation (g = 7, 9 coefficients), valid for `x > 0.5`.
fn ln_gamma_positive(x: f64) -> (f64, i8) {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    let z = x - 1.0;
    let mut sum = C[0];
    for (i, &c) in C.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    let ln = 0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + sum.ln();
    (ln, 1)
}

/// A real quantity known to leading order in a small regulator `eps`:
/// `value = sign * exp(log_abs) * eps^order`. `order > 0` is a zero,
/// `order < 0` a pole, `order = 0` a finite nonzero number.
///
/// The regulator is shared: combining two values assumes their `eps` is the
/// same infinitesimal, which holds when all of them are produced from one
/// perturbed argument (the evaluators here guarantee a unit rate, rescaling
/// internal factors so `eps` always means the displacement of the original
/// argument).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialValue {
    pub log_abs: f64,
    pub sign: i8,
    pub order: i32,
}

impl SpecialValue {
    pub fn from_f64(v: f64) -> Result<SpecialValue> {
        if !v.is_finite() {
            return Err(TodaError::OutsideDomain(v, "not finite".into()));
        }
        if v == 0.0 {
            return Err(TodaError::OutsideDomain(v, "exact zero has no log".into()));
        }
        Ok(SpecialValue { log_abs: v.abs().ln(), sign: if v > 0.0 { 1 } else { -1 }, order: 0 })
    }

    pub fn one() -> SpecialValue {
        SpecialValue { log_abs: 0.0, sign: 1, order: 0 }
    }

    pub fn mul(&self, other: &SpecialValue) -> SpecialValue {
        SpecialValue {
            log_abs: self.log_abs + other.log_abs,
            sign: self.sign * other.sign,
            order: self.order + other.order,
        }
    }

    pub fn div(&self, other: &SpecialValue) -> SpecialValue {
        SpecialValue {
            log_abs: self.log_abs - other.log_abs,
            sign: self.sign * other.sign,
            order: self.order - other.order,
        }
    }

    pub fn recip(&self) -> SpecialValue {
        SpecialValue { log_abs: -self.log_abs, sign: self.sign, order: -self.order }
    }

    /// Multiply by `exp(ln_factor)` (a positive factor given in log form).
    pub fn scale_log(&self, ln_factor: f64) -> SpecialValue {
        SpecialValue { log_abs: self.log_abs + ln_factor, ..*self }
    }

    /// Square root. The order must be even (a branch point otherwise) and a
    /// negative sign is reported as an error carrying the offending value.
    pub fn sqrt(&self) -> Result<SpecialValue> {
        if self.order % 2 != 0 {
            return Err(TodaError::BadSqrt(format!(
                "square root of a value vanishing to odd order {}",
                self.order
            )));
        }
        if self.sign < 0 {
            return Err(TodaError::BadSqrt(format!(
                "square root of a negative value, log|v| = {}",
                self.log_abs
            )));
        }
        Ok(SpecialValue { log_abs: 0.5 * self.log_abs, sign: 1, order: self.order / 2 })
    }

    /// The finite value: 0 for a zero, the number itself at order 0, an
    /// error for a pole.
    pub fn to_f64(&self) -> Result<f64> {
        match self.order {
            o if o > 0 => Ok(0.0),
            0 => Ok(self.sign as f64 * self.log_abs.exp()),
            _ => Err(TodaError::OutsideDomain(
                self.log_abs,
                format!("pole of order {}", -self.order),
            )),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.order > 0
    }

    pub fn is_pole(&self) -> bool {
        self.order < 0
    }
}

/// `gamma_ratio(x) = Gamma(x) / Gamma(1 - x)` for a generic real argument.
///
/// Errors on integers (within 1e-12), where the ratio degenerates; use
/// [`gamma_ratio_at`] with the exact integer to get the leading behavior.
pub fn gamma_ratio(x: f64) -> Result<f64> {
    let sv = gamma_ratio_special(x, None, 1.0)?;
    sv.to_f64()
}

/// `gamma_ratio` as a leading-order value. `exact_integer` asserts that the
/// argument sits exactly on the integer `m` (a zero for `m >= 1`, a pole for
/// `m <= 0`); `rate` is `d(arg)/d(eps)`, the speed at which the argument
/// moves off the integer per unit regulator.
pub fn gamma_ratio_at(exact_integer: i64, rate: f64) -> SpecialValue {
    let m = exact_integer;
    if m >= 1 {
        // gamma_ratio(m + d) ~ (-1)^m Gamma(m)^2 d.
        let (lg, _) = ln_gamma_positive(m as f64);
        let sign = if m % 2 == 0 { 1 } else { -1 };
        let s = SpecialValue { log_abs: 2.0 * lg, sign, order: 1 };
        apply_rate(s, rate)
    } else {
        // gamma_ratio(-k + d) ~ (-1)^k / (k!^2 d), k = -m >= 0.
        let k = -m;
        let (lg, _) = ln_gamma_positive(k as f64 + 1.0);
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let s = SpecialValue { log_abs: -2.0 * lg, sign, order: -1 };
        apply_rate(s, rate)
    }
}

/// Rescale a leading-order value whose regulator runs at `rate` times the
/// reference one: `(rate * eps)^order = rate^order * eps^order`.
fn apply_rate(v: SpecialValue, rate: f64) -> SpecialValue {
    debug_assert!(rate != 0.0);
    let sign = if rate > 0.0 || v.order % 2 == 0 { v.sign } else { -v.sign };
    SpecialValue {
        log_abs: v.log_abs + v.order as f64 * rate.abs().ln(),
        sign,
        order: v.order,
    }
}

fn gamma_ratio_special(x: f64, exact_integer: Option<i64>, rate: f64) -> Result<SpecialValue> {
    if let Some(m) = exact_integer {
        return Ok(gamma_ratio_at(m, rate));
    }
    if f64_near_integer(x, 1e-12).is_some() {
        return Err(TodaError::OutsideDomain(
            x,
            "gamma ratio at an integer needs the exact path".into(),
        ));
    }
    let (ln, sn) = ln_gamma_signed(x)?;
    let (ld, sd) = ln_gamma_signed(1.0 - x)?;
    Ok(SpecialValue { log_abs: ln - ld, sign: sn * sd, order: 0 })
}

/// Truncated power series in `t` up to degree 7, used for the small-`t`
/// expansion of the integral representations.
#[derive(Clone, Copy, Debug)]
pub struct TPoly(pub [f64; 8]);

impl TPoly {
    pub fn zero() -> TPoly {
        TPoly([0.0; 8])
    }

    pub fn constant(c: f64) -> TPoly {
        let mut a = [0.0; 8];
        a[0] = c;
        TPoly(a)
    }

    pub fn mul(&self, other: &TPoly) -> TPoly {
        let mut out = [0.0; 8];
        for i in 0..8 {
            for j in 0..8 - i {
                out[i + j] += self.0[i] * other.0[j];
            }
        }
        TPoly(out)
    }

    /// Division assuming `other` has a nonzero constant term.
    pub fn div(&self, other: &TPoly) -> TPoly {
        let mut out = [0.0; 8];
        for k in 0..8 {
            let mut acc = self.0[k];
            for j in 1..=k {
                acc -= other.0[j] * out[k - j];
            }
            out[k] = acc / other.0[0];
        }
        TPoly(out)
    }

    pub fn sub(&self, other: &TPoly) -> TPoly {
        let mut out = [0.0; 8];
        for ((o, s), t) in out.iter_mut().zip(&self.0).zip(&other.0) {
            *o = s - t;
        }
        TPoly(out)
    }

    pub fn scale(&self, c: f64) -> TPoly {
        let mut out = self.0;
        for v in &mut out {
            *v *= c;
        }
        TPoly(out)
    }

    /// Drop the vanishing constant term and shift down one degree,
    /// i.e. divide by `t`. The top coefficient is lost.
    pub fn shift_down(&self) -> TPoly {
        debug_assert!(self.0[0].abs() < 1e-12, "shift_down needs a vanishing constant term");
        let mut out = [0.0; 8];
        out[..7].copy_from_slice(&self.0[1..8]);
        TPoly(out)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Integral over `[0, upper]`, term by term.
    pub fn integrate(&self, upper: f64) -> f64 {
        let mut acc = 0.0;
        let mut p = upper;
        for (k, &c) in self.0.iter().enumerate() {
            acc += c * p / (k as f64 + 1.0);
            p *= upper;
        }
        acc
    }

    /// Series of `exp(c t)`.
    pub fn exp_series(c: f64) -> TPoly {
        let mut a = [0.0; 8];
        let mut term = 1.0;
        for (k, slot) in a.iter_mut().enumerate() {
            *slot = term;
            term *= c / (k as f64 + 1.0);
        }
        TPoly(a)
    }

    /// Series of `(1 - exp(-c t)) / (c t)`.
    fn em1_over(c: f64) -> TPoly {
        let mut a = [0.0; 8];
        let mut term = 1.0;
        for (k, slot) in a.iter_mut().enumerate() {
            // coefficient of t^k: (-c)^k / (k+1)!
            *slot = term / factorial(k + 1);
            term *= -c;
        }
        TPoly(a)
    }

    /// Series of `sinh(c t) / (c t)` (even powers only).
    fn sinh_over(c: f64) -> TPoly {
        let mut a = [0.0; 8];
        let c2 = c * c;
        let mut term = 1.0;
        let mut k = 0;
        while 2 * k < 8 {
            a[2 * k] = term / factorial(2 * k + 1);
            term *= c2;
            k += 1;
        }
        TPoly(a)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product::<f64>().max(1.0)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Legendre polynomial `P_n(x)` and derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn integrate_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, nodes: &[(f64, f64)]) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Evaluator for `Upsilon_b` and `Gamma_b` at fixed coupling, with a cache
/// of direct integral values.
pub struct UpsilonEvaluator {
    b: f64,
    refine: u32,
    cache: Mutex<HashMap<u64, f64>>,
    gamma_cache: Mutex<HashMap<u64, f64>>,
}

impl UpsilonEvaluator {
    pub fn new(b: f64) -> Result<UpsilonEvaluator> {
        Self::with_refinement(b, 0)
    }

    /// `refine` doubles every quadrature node count that many times; used to
    /// bound quadrature error by comparing levels.
    pub fn with_refinement(b: f64, refine: u32) -> Result<UpsilonEvaluator> {
        if !b.is_finite() || b <= 0.0 {
            return Err(TodaError::BadCoupling(b));
        }
        Ok(UpsilonEvaluator {
            b,
            refine,
            cache: Mutex::new(HashMap::new()),
            gamma_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `b + 1/b`, the width of the strip where the integrals converge.
    pub fn q_width(&self) -> f64 {
        self.b + 1.0 / self.b
    }

    /// Direct integral for `ln Upsilon_b(x)`; the caller must keep `x`
    /// strictly inside `(0, b + 1/b)`. Values are cached.
    pub fn ln_upsilon_integral(&self, x: f64) -> Result<f64> {
        let qw = self.q_width();
        if !(x > 0.0 && x < qw) {
            return Err(TodaError::OutsideDomain(x, "outside the convergence strip".into()));
        }
        if let Some(&v) = self.cache.lock().unwrap().get(&x.to_bits()) {
            return Ok(v);
        }
        let a = 0.5 * qw - x;
        let b = self.b;
        // Small t: integrand/t as a series. The full integrand of ln Upsilon
        // is a^2 e^{-t} - sinh^2(at/2) / (sinh(bt/2) sinh(t/(2b))), and
        // dividing by t after subtracting the (equal) limits at t = 0 is
        // regular.
        let sa = TPoly::sinh_over(0.5 * a);
        let ratio = sa.mul(&sa).div(&TPoly::sinh_over(0.5 * b).mul(&TPoly::sinh_over(0.5 / b)));
        let series = TPoly::exp_series(-1.0).sub(&ratio).scale(a * a).shift_down();
        let exact = |t: f64| -> f64 {
            let sh = (0.5 * a * t).sinh();
            (a * a * (-t).exp() - sh * sh / ((0.5 * b * t).sinh() * (0.5 * t / b).sinh())) / t
        };
        let v = self.integrate_full(&series, &exact);
        self.cache.lock().unwrap().insert(x.to_bits(), v);
        Ok(v)
    }

    /// Direct integral for `ln Gamma_b(x)`, normalized so that
    /// `Gamma_b((b + 1/b)/2) = 1`; requires `0 < x < b + 1/b` for
    /// convergence (accuracy degrades near 0, so the public entry point
    /// recurses first). Values are cached.
    fn ln_gamma_b_integral(&self, x: f64) -> Result<f64> {
        let qw = self.q_width();
        if !(x > 0.0 && x < qw) {
            return Err(TodaError::OutsideDomain(x, "outside the convergence strip".into()));
        }
        if let Some(&v) = self.gamma_cache.lock().unwrap().get(&x.to_bits()) {
            return Ok(v);
        }
        let a = 0.5 * qw - x;
        let b = self.b;
        // Integrand: [ (e^{-xt} - e^{-qw t/2}) / ((1-e^{-bt})(1-e^{-t/b}))
        //              - (a^2/2) e^{-t} - a/t ] / t.
        // Small t: (e^{-xt} - e^{-qw t/2})/t = sum_{k>=1} [(-x)^k - (-qw/2)^k] t^{k-1}/k!
        let mut num = [0.0; 8];
        let mut px = -x;
        let mut pq = -0.5 * qw;
        for (k, slot) in num.iter_mut().enumerate() {
            *slot = (px - pq) / factorial(k + 1);
            px *= -x;
            pq *= -0.5 * qw;
        }
        let denom = TPoly::em1_over(b).mul(&TPoly::em1_over(1.0 / b));
        // (A/t) / (D/t^2) = t * (A/t)/(D/t^2): assemble f(t) = A/D - a/t
        // as ((A/t)/(D/t^2) - a)/t, then subtract the exponential piece and
        // divide by t once more.
        let f_part = TPoly(num).div(&denom);
        debug_assert!((f_part.0[0] - a).abs() < 1e-9 * a.abs().max(1.0));
        let mut shifted = f_part;
        shifted.0[0] -= a;
        let series = shifted
            .shift_down()
            .sub(&TPoly::exp_series(-1.0).scale(0.5 * a * a))
            .shift_down();
        let exact = |t: f64| -> f64 {
            let numt = (-x * t).exp() - (-0.5 * qw * t).exp();
            let dent = (1.0 - (-b * t).exp()) * (1.0 - (-t / b).exp());
            (numt / dent - 0.5 * a * a * (-t).exp() - a / t) / t
        };
        // The -a/t counterterm decays only algebraically; its tail over
        // [1, inf) integrates to -a in closed form, and the remainder decays
        // exponentially, so panel only that part.
        let tail = |t: f64| -> f64 {
            let numt = (-x * t).exp() - (-0.5 * qw * t).exp();
            let dent = (1.0 - (-b * t).exp()) * (1.0 - (-t / b).exp());
            (numt / dent - 0.5 * a * a * (-t).exp()) / t
        };
        let v = self.integrate_full_split(&series, &exact, &tail, -a);
        self.gamma_cache.lock().unwrap().insert(x.to_bits(), v);
        Ok(v)
    }

    /// Quadrature shared by both integrals: series on `[0, 0.05]`, a dense
    /// panel on `[0.05, 1]`, then geometric panels until the tail is
    /// negligible. The tail integrand must decay exponentially.
    fn integrate_full(&self, series: &TPoly, exact: &dyn Fn(f64) -> f64) -> f64 {
        self.integrate_full_split(series, exact, exact, 0.0)
    }

    /// As [`Self::integrate_full`], but with a separate exponentially
    /// decaying tail integrand and a closed-form constant accounting for the
    /// part of the tail removed from it.
    fn integrate_full_split(
        &self,
        series: &TPoly,
        exact: &dyn Fn(f64) -> f64,
        tail: &dyn Fn(f64) -> f64,
        tail_closed_form: f64,
    ) -> f64 {
        const SPLIT: f64 = 0.05;
        let mid_nodes = gauss_legendre(64 << self.refine);
        let tail_nodes = gauss_legendre(16 << self.refine);
        let mut acc = series.integrate(SPLIT);
        acc += integrate_panel(exact, SPLIT, 1.0, &mid_nodes);
        acc += tail_closed_form;
        let mut lo = 1.0;
        let step = std::f64::consts::LN_2;
        for _ in 0..2000 {
            let hi = lo + step;
            let piece = integrate_panel(tail, lo, hi, &tail_nodes);
            acc += piece;
            lo = hi;
            if piece.abs() < 1e-17 * acc.abs().max(1e-3) {
                break;
            }
        }
        acc
    }

    /// `Upsilon_b(x)` for a generic float argument (assumed off the zero
    /// lattice): shift into the strip, then the direct integral.
    pub fn upsilon(&self, x: f64) -> Result<f64> {
        let (steps, x0) = self.reduction_path(x);
        let mut ln_acc = self.ln_upsilon_integral(x0)?;
        let mut sign = 1i8;
        // Replay the recorded factors: each step contributes
        // gamma_ratio(arg) * step^(1 - 2 arg) with arg = base * b or base / b
        // and step the actual shift size.
        for &(up, over_b, base) in &steps {
            let (arg, ln_step) =
                if over_b { (base / self.b, -self.b.ln()) } else { (base * self.b, self.b.ln()) };
            let g = gamma_ratio(arg)?;
            let ln_g = g.abs().ln() + (1.0 - 2.0 * arg) * ln_step;
            if up {
                ln_acc += ln_g;
            } else {
                ln_acc -= ln_g;
            }
            if g < 0.0 {
                sign = -sign;
            }
        }
        Ok(sign as f64 * ln_acc.exp())
    }

    /// The sequence of shift steps taking `x` greedily toward the strip
    /// center, recorded as `(step_was_upward, step_was_1_over_b, base)`
    /// where `base` is the argument the shift relation is anchored at
    /// (`Upsilon(base + step) = gamma_ratio(...) ... Upsilon(base)`), plus
    /// the final strip point.
    fn reduction_path(&self, x: f64) -> (Vec<(bool, bool, f64)>, f64) {
        let center = 0.5 * self.q_width();
        let mut cur = x;
        let mut steps = Vec::new();
        loop {
            let d = cur - center;
            let mut best: Option<(f64, bool, bool)> = None;
            for (step, over_b) in [(self.b, false), (1.0 / self.b, true)] {
                for up in [true, false] {
                    let next = if up { cur + step } else { cur - step };
                    let nd = (next - center).abs();
                    if nd < d.abs() - 1e-14
                        && best.is_none_or(|(bd, _, _)| nd < bd)
                    {
                        best = Some((nd, up, over_b));
                    }
                }
            }
            match best {
                Some((_, up, over_b)) => {
                    let step = if over_b { 1.0 / self.b } else { self.b };
                    if up {
                        // Moving cur -> cur + step uses the relation anchored
                        // at base = cur, and we later DIVIDE by its factor
                        // since Upsilon(cur) = Upsilon(cur+step)/factor.
                        steps.push((false, over_b, cur));
                        cur += step;
                    } else {
                        // cur -> cur - step: Upsilon(cur) = factor *
                        // Upsilon(cur - step), anchored at base = cur - step.
                        steps.push((true, over_b, cur - step));
                        cur -= step;
                    }
                }
                None => break,
            }
        }
        (steps, cur)
    }

    /// `Upsilon_b` at an exact lattice-aware argument. Zeros of the two
    /// families are detected exactly and reported through the order of the
    /// returned value, with the leading coefficient in the unit-rate
    /// convention (regulator = displacement of `x`).
    pub fn upsilon_coeffb(&self, x: &CoeffB) -> Result<SpecialValue> {
        let (steps, x0) = self.reduction_path_exact(x)?;
        let mut acc =
            SpecialValue { log_abs: self.ln_upsilon_integral(x0)?, sign: 1, order: 0 };
        for &(up, over_b, base, singular) in steps.iter().rev() {
            // factor = gamma_ratio(arg) * step^(1 - 2*arg), arg = base*step'
            // where step' is b or 1/b matching the relation used.
            let (arg, rate, ln_step) = if over_b {
                (base / self.b, 1.0 / self.b, -(self.b.ln()))
            } else {
                (base * self.b, self.b, self.b.ln())
            };
            let g = match singular {
                Some(m) => gamma_ratio_at(m, rate),
                None => SpecialValue::from_f64(gamma_ratio(arg)?)?,
            };
            let factor = g.scale_log((1.0 - 2.0 * arg) * ln_step);
            acc = if up { acc.mul(&factor) } else { acc.div(&factor) };
        }
        Ok(acc)
    }

    /// Exact-mirror version of [`Self::reduction_path`]: the numeric steps
    /// are driven by the float value while the argument of every gamma
    /// factor is tracked as a [`CoeffB`] so singular hits are exact.
    /// Steps record `(divide, over_b, base_value, singular_integer)`.
    #[allow(clippy::type_complexity)]
    fn reduction_path_exact(
        &self,
        x: &CoeffB,
    ) -> Result<(Vec<(bool, bool, f64, Option<i64>)>, f64)> {
        let center = 0.5 * self.q_width();
        let one = crate::exact::rat(1, 1);
        let step_b = CoeffB::times_b_unit(one);
        let step_ob = CoeffB::over_b_unit(one);
        let mut cur = *x;
        let mut curv = x.eval(self.b);
        let mut steps = Vec::new();
        for _ in 0..100_000 {
            let d = (curv - center).abs();
            let mut best: Option<(f64, bool, bool)> = None;
            for (step, over_b) in [(self.b, false), (1.0 / self.b, true)] {
                for up in [true, false] {
                    let next = if up { curv + step } else { curv - step };
                    let nd = (next - center).abs();
                    if nd < d - 1e-14 && best.is_none_or(|(bd, _, _)| nd < bd) {
                        best = Some((nd, up, over_b));
                    }
                }
            }
            let Some((_, up, over_b)) = best else { break };
            let (stepc, stepv) =
                if over_b { (step_ob, 1.0 / self.b) } else { (step_b, self.b) };
            if up {
                // Upsilon(cur) = Upsilon(cur + step) / factor(base = cur).
                let singular = self.gamma_singularity(&cur, over_b);
                steps.push((false, over_b, curv, singular));
                cur += stepc;
                curv += stepv;
            } else {
                let base = cur - stepc;
                let basev = curv - stepv;
                let singular = self.gamma_singularity(&base, over_b);
                steps.push((true, over_b, basev, singular));
                cur = base;
                curv = basev;
            }
        }
        Ok((steps, curv))
    }

    /// Whether `gamma_ratio(base * b)` (or `base / b`) sits exactly on an
    /// integer: for `base = u + v b + w/b`, `base * b = w + u b + v b^2` is
    /// an integer iff `u = v = 0` and `w` is one, by irrationality of `b`
    /// and `b^2`; `base / b = v + u/b + w/b^2` likewise needs `u = w = 0`.
    fn gamma_singularity(&self, base: &CoeffB, over_b: bool) -> Option<i64> {
        if over_b {
            (base.u.numer() == &0 && base.w.numer() == &0 && base.v.is_integer())
                .then(|| base.v.to_integer())
        } else {
            (base.u.numer() == &0 && base.v.numer() == &0 && base.w.is_integer())
                .then(|| base.w.to_integer())
        }
    }

    /// `Gamma_b(x)` in log form for a generic positive-side argument,
    /// normalized to `Gamma_b((b + 1/b)/2) = 1`. Errors when a shift lands
    /// a plain gamma on a pole.
    pub fn ln_gamma_b(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || x <= 0.0 {
            return Err(TodaError::OutsideDomain(x, "ln_gamma_b needs x > 0".into()));
        }
        let margin = 0.5 * self.b.min(1.0 / self.b);
        let mut cur = x;
        let mut acc = 0.0;
        // Gamma_b(x) = Gamma_b(x + b) Gamma(b x) b^(1/2 - b x) / sqrt(2 pi)
        let mut guard = 0;
        while cur < margin {
            let arg = self.b * cur;
            let (lg, sign) = ln_gamma_signed(arg)?;
            if sign < 0 {
                return Err(TodaError::OutsideDomain(
                    x,
                    "gamma factor changed sign during reduction".into(),
                ));
            }
            acc += lg + (0.5 - arg) * self.b.ln() - 0.5 * (2.0 * PI).ln();
            cur += self.b;
            guard += 1;
            if guard > 100_000 {
                return Err(TodaError::OutsideDomain(x, "reduction did not terminate".into()));
            }
        }
        // Push down if we are at or beyond the far edge of the strip.
        while cur >= self.q_width() - margin {
            cur -= self.b;
            let arg = self.b * cur;
            let (lg, sign) = ln_gamma_signed(arg)?;
            if sign < 0 {
                return Err(TodaError::OutsideDomain(
                    x,
                    "gamma factor changed sign during reduction".into(),
                ));
            }
            acc -= lg + (0.5 - arg) * self.b.ln() - 0.5 * (2.0 * PI).ln();
        }
        Ok(acc + self.ln_gamma_b_integral(cur)?)
    }
}
