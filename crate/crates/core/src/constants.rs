//! Three-point structure constants assembled from Upsilon factors, the
//! shift relations they satisfy, and the geometric-mean extension to fields
//! with spin.
//!
//! The scalar constant pairs two arbitrary momenta with a third one pinned
//! to a weight-line direction. Its square is a plain ratio of Upsilon
//! products and is always a well-defined element of the log-magnitude
//! algebra ([`SpecialValue`]), with zero and pole orders tracked exactly.
//! The constant itself involves square roots whose branch is a field
//! normalization convention: evaluations report the magnitude, flag any
//! negative radicand, and leave the root out entirely when an odd
//! zero/pole order makes it unrepresentable. Ratios taken at the squared
//! level sidestep both ambiguities, which is how the shift-relation checks
//! are built.

use serde::{Deserialize, Serialize};

use crate::blocks::{two_mu, SemiDegDirection};
use crate::error::{Result, TodaError};
use crate::exact::{rat, CoeffB};
use crate::fields::{
    fuse_nonscalar_degenerate, neutrality, semideg_nonscalar_check, verify_constraints, FieldLabel,
};
use crate::kinematics::{
    classify_charge, delta, semi_degenerate_charge, DegeneracyTag, DegenerateLabel, TodaParams,
};
use crate::lattice::{Bindings, Charge, WeylElement};
use crate::special::{gamma_ratio, SpecialValue, UpsilonEvaluator};

/// The third momentum of a three-point query: a weight-line pair with
/// independent left and right scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiDegData {
    pub direction: SemiDegDirection,
    pub kappa: CoeffB,
    pub kappabar: CoeffB,
}

impl SemiDegData {
    /// A scalar weight-line momentum: equal scales on both chiralities.
    pub fn scalar(direction: SemiDegDirection, kappa: CoeffB) -> Self {
        SemiDegData { direction, kappa, kappabar: kappa }
    }

    /// The field carrying this momentum pair, with trivial twist.
    pub fn field(&self, n: usize) -> Result<FieldLabel> {
        let j = self.direction.index(n);
        let alpha = semi_degenerate_charge(n, j, self.kappa)?;
        let alphabar = semi_degenerate_charge(n, j, self.kappabar)?;
        FieldLabel::new(alpha, alphabar, WeylElement::identity(n))
    }
}

/// A full three-point request: two generic fields and the weight-line one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThreePointQuery {
    pub field1: FieldLabel,
    pub field2: FieldLabel,
    pub semideg: SemiDegData,
}

/// Structure-constant value with its factor-by-factor audit trail.
///
/// `squared` is exact: an integer-order, signed log-magnitude value. The
/// root `value` is present when every radicand along the way had even
/// order; `negative_radicand` then records that at least one radicand was
/// negative, in which case the reported sign is a normalization convention
/// rather than a computed fact. A missing `value` with a finite `squared`
/// is the typical outcome for spinning fields whose momenta sit on the
/// Upsilon zero lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThreePointResult {
    pub value: Option<SpecialValue>,
    pub squared: SpecialValue,
    pub components: Vec<(String, SpecialValue)>,
    pub negative_radicand: bool,
}

/// Which degenerate insertion drives a shift relation: one moves momenta by
/// `b h_i`, the other by `-h_i/b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShiftFamily {
    TimesB,
    OverB,
}

/// Square root in log space. The sign under the root is not trusted: a
/// negative radicand yields the root of the magnitude plus a raised flag.
/// Odd orders remain an error since no leading power can be halved.
fn sqrt_flagged(v: &SpecialValue) -> Result<(SpecialValue, bool)> {
    if v.sign < 0 {
        let positive = SpecialValue { sign: 1, ..*v };
        Ok((positive.sqrt()?, true))
    } else {
        Ok((v.sqrt()?, false))
    }
}

/// Whether a momentum with this classification breaks the n-channel fusion
/// counting behind the scalar constant. Weight-line momenta close on two
/// channels only, which is a restriction exactly when n > 2.
fn restricts_bootstrap(tag: &DegeneracyTag, n: usize) -> bool {
    match tag {
        DegeneracyTag::FullyDegenerate(_) => true,
        DegeneracyTag::SemiDegenerate { .. } => n > 2,
        DegeneracyTag::Generic => false,
    }
}

fn charge_pair_gate(alpha1: &Charge, alpha2: &Charge, n: usize) -> Result<()> {
    // Pairing with the identity is always allowed: that is how the
    // weight-line normalization itself is probed.
    if alpha1.is_zero() || alpha2.is_zero() {
        return Ok(());
    }
    for (slot, alpha) in [("first", alpha1), ("second", alpha2)] {
        if restricts_bootstrap(&classify_charge(alpha)?, n) {
            return Err(TodaError::BadConfig(format!(
                "{slot} momentum is degenerate; the closed form only covers \
                 fusion with the full channel count (identity pairing excepted)"
            )));
        }
    }
    Ok(())
}

/// Every Upsilon factor of one scalar evaluation, kept unsquared and
/// unrooted so both the exact square and the flagged root can be read off.
struct ScalarFactors {
    n: usize,
    /// Product over the n x n grid of pair arguments.
    numerator: SpecialValue,
    /// Self-pairing product of the first momentum over the positive roots.
    selfpair1: SpecialValue,
    /// Same for the second momentum.
    selfpair2: SpecialValue,
    /// Scale-dependent prefactor radicand.
    norm_radicand: SpecialValue,
    /// The value at the plain coupling argument, divided out n times.
    at_b: SpecialValue,
    components: Vec<(String, SpecialValue)>,
}

fn scalar_factors(
    alpha1: &Charge,
    alpha2: &Charge,
    kappa: &CoeffB,
    direction: SemiDegDirection,
    params: &TodaParams,
    ev: &UpsilonEvaluator,
) -> Result<ScalarFactors> {
    let n = params.n();
    if alpha1.rank() != n || alpha2.rank() != n {
        return Err(TodaError::RankMismatch {
            expected: n,
            got: alpha1.rank().max(alpha2.rank()),
        });
    }
    if !alpha1.is_closed() || !alpha2.is_closed() {
        return Err(TodaError::ContinuousCharge);
    }
    charge_pair_gate(alpha1, alpha2, n)?;

    let q = Charge::background(n);
    let d1 = alpha1.sub(&q);
    let d2 = alpha2.sub(&q);
    let tm = two_mu(kappa, direction, n);
    let b_arg = CoeffB::times_b_unit(rat(1, 1));

    let mut components = Vec::with_capacity(n * n + 2 * n * (n - 1) + 4);
    let mut numerator = SpecialValue::one();
    let gaps1: Vec<CoeffB> =
        (1..=n).map(|k| d1.dot_exact_linear(&Charge::h(n, k)?)).collect::<Result<_>>()?;
    let gaps2: Vec<CoeffB> =
        (1..=n).map(|k| d2.dot_exact_linear(&Charge::h(n, k)?)).collect::<Result<_>>()?;
    for (k, x) in gaps1.iter().enumerate() {
        for (l, y) in gaps2.iter().enumerate() {
            let v = ev.upsilon_coeffb(&(b_arg + *x + *y + tm))?;
            components.push((format!("pair[{},{}]", k + 1, l + 1), v));
            numerator = numerator.mul(&v);
        }
    }

    let mut selfpairs = [SpecialValue::one(), SpecialValue::one()];
    for (slot, d) in [(0usize, &d1), (1, &d2)] {
        for i in 1..=n {
            for j in i + 1..=n {
                let root = Charge::h(n, i)?.sub(&Charge::h(n, j)?);
                let x = d.dot_exact_linear(&root)?;
                let plus = ev.upsilon_coeffb(&(b_arg + x))?;
                let minus = ev.upsilon_coeffb(&(b_arg - x))?;
                components.push((format!("self{}[{i},{j}]+", slot + 1), plus));
                components.push((format!("self{}[{i},{j}]-", slot + 1), minus));
                selfpairs[slot] = selfpairs[slot].mul(&plus).mul(&minus);
            }
        }
    }

    let n_i64 = n as i64;
    // n * (1/b - b), the total background along the highest root string.
    let nq = CoeffB::new(rat(0, 1), rat(-n_i64, 1), rat(n_i64, 1));
    let at_b = ev.upsilon_coeffb(&b_arg)?;
    let at_b_nq = ev.upsilon_coeffb(&(b_arg + nq))?;
    let at_b_kappa = ev.upsilon_coeffb(&(b_arg + *kappa))?;
    let at_b_dual = ev.upsilon_coeffb(&(b_arg - *kappa + nq))?;
    components.push(("norm:b".into(), at_b));
    components.push(("norm:b+nq".into(), at_b_nq));
    components.push(("norm:b+kappa".into(), at_b_kappa));
    components.push(("norm:b-kappa+nq".into(), at_b_dual));
    let norm_radicand = at_b.mul(&at_b_nq).div(&at_b_kappa.mul(&at_b_dual));

    let [selfpair1, selfpair2] = selfpairs;
    Ok(ScalarFactors { n, numerator, selfpair1, selfpair2, norm_radicand, at_b, components })
}

impl ScalarFactors {
    /// The exact square of the constant: no roots, integer orders, exact
    /// sign.
    fn squared(&self) -> SpecialValue {
        let mut v = self
            .norm_radicand
            .mul(&self.numerator)
            .mul(&self.numerator)
            .div(&self.selfpair1.mul(&self.selfpair2));
        for _ in 0..2 * self.n {
            v = v.div(&self.at_b);
        }
        v
    }

    /// The constant itself, if every radicand has even order. Each
    /// momentum contributes its own reflection-factor root, so the branch
    /// choice amounts to a per-field normalization; negative radicands are
    /// flagged and their magnitude used.
    fn rooted(&self) -> Option<(SpecialValue, bool)> {
        let (r1, f1) = sqrt_flagged(&self.selfpair1).ok()?;
        let (r2, f2) = sqrt_flagged(&self.selfpair2).ok()?;
        let (m, fm) = sqrt_flagged(&self.norm_radicand).ok()?;
        let mut v = m.mul(&self.numerator).div(&r1.mul(&r2));
        for _ in 0..self.n {
            v = v.div(&self.at_b);
        }
        Some((v, f1 || f2 || fm))
    }
}

/// Scalar three-point constant against the weight-line momentum of scale
/// `kappa` along `direction`.
///
/// Requires closed momenta. Degenerate `alpha1`/`alpha2` are rejected
/// unless the other one vanishes. The result keeps every Upsilon factor in
/// `components`; see [`ThreePointResult`] for how roots and signs are
/// reported.
pub fn scalar_c(
    alpha1: &Charge,
    alpha2: &Charge,
    kappa: &CoeffB,
    direction: SemiDegDirection,
    params: &TodaParams,
    ev: &UpsilonEvaluator,
) -> Result<ThreePointResult> {
    let factors = scalar_factors(alpha1, alpha2, kappa, direction, params, ev)?;
    let squared = factors.squared();
    let (value, negative_radicand) = match factors.rooted() {
        Some((v, flag)) => (Some(v), flag),
        None => (None, false),
    };
    Ok(ThreePointResult { value, squared, components: factors.components, negative_radicand })
}

/// Weight gaps driving a shift relation: for the `b`-family the i-th entry
/// is `Delta(alpha + b h_i) - Delta(alpha) + b mu`, for the `1/b`-family it
/// is `Delta(alpha - h_i/b) - Delta(alpha) - mu/b`.
pub fn shift_exponents(
    alpha: &Charge,
    kappa: &CoeffB,
    direction: SemiDegDirection,
    family: ShiftFamily,
    params: &TodaParams,
) -> Result<Vec<f64>> {
    let n = params.n();
    let b = params.b();
    let bindings = Bindings::empty();
    let mu = 0.5 * two_mu(kappa, direction, n).eval(b);
    let base = delta(alpha, params, &bindings)?;
    let (scale, offset) = match family {
        ShiftFamily::TimesB => (CoeffB::times_b_unit(rat(1, 1)), b * mu),
        ShiftFamily::OverB => (CoeffB::over_b_unit(rat(-1, 1)), -mu / b),
    };
    (1..=n)
        .map(|i| {
            let shifted = alpha.add(&Charge::h(n, i)?.scale_coeffb(scale)?);
            Ok(delta(&shifted, params, &bindings)? - base + offset)
        })
        .collect()
}

fn finite_ratio(num: &SpecialValue, den: &SpecialValue) -> Result<f64> {
    let ratio = num.div(den);
    if ratio.order != 0 {
        return Err(TodaError::BadConfig(format!(
            "shift ratio carries uncancelled order {}",
            ratio.order
        )));
    }
    ratio.to_f64()
}

fn rooted_value(r: &ThreePointResult) -> Result<SpecialValue> {
    r.value.ok_or_else(|| {
        TodaError::BadSqrt(format!(
            "constant has no representable root (squared order {}); compare squares instead",
            r.squared.order
        ))
    })
}

#[allow(clippy::too_many_arguments)]
fn shift_ratio_scalar(
    alpha1: &Charge,
    alpha2: &Charge,
    kappa: &CoeffB,
    direction: SemiDegDirection,
    family: ShiftFamily,
    i: usize,
    j: usize,
    params: &TodaParams,
    ev: &UpsilonEvaluator,
) -> Result<f64> {
    let n = params.n();
    let scale = match family {
        ShiftFamily::TimesB => CoeffB::times_b_unit(rat(1, 1)),
        ShiftFamily::OverB => CoeffB::over_b_unit(rat(-1, 1)),
    };
    let moved_i = alpha1.add(&Charge::h(n, i)?.scale_coeffb(scale)?);
    let moved_j = alpha1.add(&Charge::h(n, j)?.scale_coeffb(scale)?);
    let ci = scalar_c(&moved_i, alpha2, kappa, direction, params, ev)?;
    let cj = scalar_c(&moved_j, alpha2, kappa, direction, params, ev)?;
    let lhs = finite_ratio(&rooted_value(&ci)?, &rooted_value(&cj)?)?;

    let x = shift_exponents(alpha1, kappa, direction, family, params)?;
    let y = shift_exponents(alpha2, kappa, direction, family, params)?;
    let mut rhs = 1.0;
    for yk in &y {
        rhs *= gamma_ratio(x[i - 1] + yk)? / gamma_ratio(x[j - 1] + yk)?;
    }
    Ok(lhs / rhs)
}

/// Factorization residual of the scalar shift relation.
///
/// The ratio of shifted constants divided by the gamma-factor product may
/// depend only on `alpha1`; evaluating it at two distinct spectator momenta
/// and returning the relative difference makes that claim checkable without
/// ever writing the alpha1-dependent normalization down.
#[allow(clippy::too_many_arguments)]
pub fn shift_residual_scalar(
    alpha1: &Charge,
    alpha2_first: &Charge,
    alpha2_second: &Charge,
    kappa: &CoeffB,
    direction: SemiDegDirection,
    family: ShiftFamily,
    i: usize,
    j: usize,
    params: &TodaParams,
    ev: &UpsilonEvaluator,
) -> Result<f64> {
    let n = params.n();
    for idx in [i, j] {
        if idx == 0 || idx > n {
            return Err(TodaError::IndexOutOfRange { index: idx, max: n });
        }
    }
    let ra = shift_ratio_scalar(alpha1, alpha2_first, kappa, direction, family, i, j, params, ev)?;
    let rb = shift_ratio_scalar(alpha1, alpha2_second, kappa, direction, family, i, j, params, ev)?;
    Ok((ra - rb).abs() / ra.abs().max(rb.abs()))
}

/// Geometric-mean constant for one scalar and one spinning field against a
/// weight-line pair.
///
/// Checks, in order: the scalar shape of `f1`, degeneracy of all momenta,
/// the lattice pairing of `(kappa, kappabar)`, and both cyclic-charge
/// neutrality conditions of the triple. `squared` is the product of the
/// two chiral squares and is always exact; `value` is its root when that
/// exists. When the second field is actually scalar and the two scales
/// match, the evaluation reduces to [`scalar_c`], preserving its sign
/// convention.
pub fn nonscalar_c(
    f1: &FieldLabel,
    f2: &FieldLabel,
    semideg: &SemiDegData,
    params: &TodaParams,
    ev: &UpsilonEvaluator,
) -> Result<ThreePointResult> {
    let n = params.n();
    if !f1.is_scalar() {
        return Err(TodaError::BadConfig(
            "the first field must be scalar; swap the arguments or use the shift relations".into(),
        ));
    }
    for (what, alpha) in [
        ("scalar momentum", &f1.alpha),
        ("left momentum", &f2.alpha),
        ("right momentum", &f2.alphabar),
    ] {
        if restricts_bootstrap(&classify_charge(alpha)?, n) {
            return Err(TodaError::BadConfig(format!("{what} is degenerate")));
        }
    }
    if !semideg_nonscalar_check(&semideg.kappa, &semideg.kappabar) {
        return Err(TodaError::ConstraintViolation(
            "weight-line scales do not differ by an integer multiple of 1/b".into(),
        ));
    }
    let f3 = semideg.field(n)?;
    if !verify_constraints(&f3) {
        return Err(TodaError::NeutralityViolated(
            "the weight-line pair has no well-defined twisted monodromy charge; \
             its two scales must match"
                .into(),
        ));
    }
    let (plain, twisted) = neutrality(f1, f2, &f3)?;
    if !(plain && twisted) {
        return Err(TodaError::NeutralityViolated(format!(
            "cyclic charges must sum to integers on both sides, got plain: {plain}, \
             twisted: {twisted}"
        )));
    }

    if f2.is_scalar() && semideg.kappa == semideg.kappabar {
        return scalar_c(&f1.alpha, &f2.alpha, &semideg.kappa, semideg.direction, params, ev);
    }

    let left = scalar_factors(&f1.alpha, &f2.alpha, &semideg.kappa, semideg.direction, params, ev)?;
    let right =
        scalar_factors(&f1.alpha, &f2.alphabar, &semideg.kappabar, semideg.direction, params, ev)?;
    // The two chiral squares multiply to the fourth power of the mean; one
    // rooting recovers its square, which is the exact object reported.
    let fourth = left.squared().mul(&right.squared());
    let (squared, sq_flag) = sqrt_flagged(&fourth)?;
    let (value, negative_radicand) = match sqrt_flagged(&squared) {
        Ok((v, flag)) => (Some(v), flag || sq_flag),
        Err(_) => (None, sq_flag),
    };
    let mut components: Vec<(String, SpecialValue)> = Vec::new();
    components.extend(left.components.into_iter().map(|(k, v)| (format!("L:{k}"), v)));
    components.extend(right.components.into_iter().map(|(k, v)| (format!("R:{k}"), v)));
    Ok(ThreePointResult { value, squared, components, negative_radicand })
}

/// Dispatch a three-point query to the closed form that covers it.
pub fn three_point(
    query: &ThreePointQuery,
    params: &TodaParams,
    ev: &UpsilonEvaluator,
) -> Result<ThreePointResult> {
    if query.field1.is_scalar() {
        nonscalar_c(&query.field1, &query.field2, &query.semideg, params, ev)
    } else if query.field2.is_scalar() {
        nonscalar_c(&query.field2, &query.field1, &query.semideg, params, ev)
    } else {
        Err(TodaError::BadConfig(
            "no closed form when both fields carry spin; only the shift relations \
             constrain that case"
                .into(),
        ))
    }
}

/// Outcome of one spinning shift-relation check: the relative difference of
/// the magnitude ratios at the two spectator fields, plus the radicand
/// signs seen on each side (the relation fixes the magnitude only).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NonscalarShiftCheck {
    pub residual: f64,
    pub signs: (i8, i8),
}

fn degenerate_label(family: ShiftFamily) -> DegenerateLabel {
    match family {
        ShiftFamily::TimesB => DegenerateLabel::BOmega1,
        ShiftFamily::OverB => DegenerateLabel::MinusOmega1OverB,
    }
}

#[allow(clippy::too_many_arguments)]
fn nonscalar_shift_ratio(
    f1: &FieldLabel,
    f2: &FieldLabel,
    semideg: &SemiDegData,
    family: ShiftFamily,
    i: usize,
    j: usize,
    params: &TodaParams,
    ev: &UpsilonEvaluator,
) -> Result<(f64, i8)> {
    let n = params.n();
    let children = fuse_nonscalar_degenerate(f1, degenerate_label(family))?;
    let squared_of = |child: &FieldLabel| -> Result<SpecialValue> {
        let r = if child.is_scalar() {
            nonscalar_c(child, f2, semideg, params, ev)?
        } else if f2.is_scalar() {
            nonscalar_c(f2, child, semideg, params, ev)?
        } else {
            return Err(TodaError::BadConfig(
                "either the moved field or the spectator must be scalar".into(),
            ));
        };
        Ok(r.squared)
    };
    // The relation fixes the squared ratio, where every root ambiguity and
    // every lattice pole of the individual constants cancels.
    let lhs_sq = finite_ratio(&squared_of(&children[i - 1])?, &squared_of(&children[j - 1])?)?;
    let lhs = lhs_sq.abs().sqrt();

    // The moved field's twist reroutes the 1/b shift on the untwisted side,
    // so the gamma factors take their first index through it as well.
    let (hol_i, hol_j) = match family {
        ShiftFamily::TimesB => (i, j),
        ShiftFamily::OverB => (f1.sigma.image(i), f1.sigma.image(j)),
    };
    let x = shift_exponents(&f1.alpha, &semideg.kappa, semideg.direction, family, params)?;
    let xb = shift_exponents(&f1.alphabar, &semideg.kappabar, semideg.direction, family, params)?;
    let y = shift_exponents(&f2.alpha, &semideg.kappa, semideg.direction, family, params)?;
    let yb = shift_exponents(&f2.alphabar, &semideg.kappabar, semideg.direction, family, params)?;
    let mut radicand = 1.0;
    for k in 0..n {
        radicand *= gamma_ratio(x[hol_i - 1] + y[k])? * gamma_ratio(xb[i - 1] + yb[k])?
            / (gamma_ratio(x[hol_j - 1] + y[k])? * gamma_ratio(xb[j - 1] + yb[k])?);
    }
    let sign = if radicand >= 0.0 { 1 } else { -1 };
    Ok((lhs / radicand.abs().sqrt(), sign))
}

/// Factorization residual of the spinning shift relations, checked at two
/// spectator fields like [`shift_residual_scalar`].
///
/// `f1` is the field being moved (by `b h_i` on both chiralities, or by
/// `-h_{sigma(i)}/b` and `-h_i/b` for the `1/b` family); either it or the
/// spectators must be scalar so the geometric-mean form applies.
#[allow(clippy::too_many_arguments)]
pub fn shift_residual_nonscalar(
    f1: &FieldLabel,
    f2_first: &FieldLabel,
    f2_second: &FieldLabel,
    semideg: &SemiDegData,
    family: ShiftFamily,
    i: usize,
    j: usize,
    params: &TodaParams,
    ev: &UpsilonEvaluator,
) -> Result<NonscalarShiftCheck> {
    let n = params.n();
    for idx in [i, j] {
        if idx == 0 || idx > n {
            return Err(TodaError::IndexOutOfRange { index: idx, max: n });
        }
    }
    let (ra, sa) = nonscalar_shift_ratio(f1, f2_first, semideg, family, i, j, params, ev)?;
    let (rb, sb) = nonscalar_shift_ratio(f1, f2_second, semideg, family, i, j, params, ev)?;
    Ok(NonscalarShiftCheck {
        residual: (ra - rb).abs() / ra.abs().max(rb.abs()),
        signs: (sa, sb),
    })
}
