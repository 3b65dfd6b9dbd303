//! W_n kinematics of the imaginary Toda theory: central charge, conformal
//! weights, the W3 charge, degeneracy classification and degenerate fusion.
//!
//! The background charge is `Q = (1/b - b) rho`, the central charge
//! `c = (n-1)(1 - n(n+1)(1/b - b)^2) <= n - 1`, and the conformal weight of
//! the field with momentum `alpha` is `Delta = alpha . (alpha - 2Q) / 2`.
//! Genericity of a momentum is a lattice condition on the pairings
//! `(alpha - Q) . (h_i - h_j)` and is decided exactly on [`CoeffB`]
//! coefficients, never on floats.

use crate::error::{Result, TodaError};
use crate::exact::{BExpr, CoeffB, Rat};
use crate::lattice::{Bindings, Charge};
use serde::{Deserialize, Serialize};

/// Theory parameters: rank label `n` of sl(n) and coupling `b > 0`.
///
/// The exact-arithmetic layer assumes `b^2` irrational; the constructor
/// flags couplings whose square is suspiciously close to a small-denominator
/// rational so callers can reject or log them.
#[derive(Clone, Debug)]
pub struct TodaParams {
    n: usize,
    b: f64,
    rationality_warning: Option<(i64, i64)>,
}

impl TodaParams {
    pub fn new(n: usize, b: f64) -> Result<Self> {
        if n < 2 {
            return Err(TodaError::RankTooSmall(n));
        }
        if !b.is_finite() || b <= 0.0 {
            return Err(TodaError::BadCoupling(b));
        }
        let b2 = b * b;
        let mut warning = None;
        for q in 1..=12i64 {
            let p = (b2 * q as f64).round();
            if p >= 0.0 && (b2 - p / q as f64).abs() < 1e-6 {
                warning = Some((p as i64, q));
                break;
            }
        }
        Ok(TodaParams { n, b, rationality_warning: warning })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Scalar background parameter `q = 1/b - b`.
    pub fn q_scalar(&self) -> f64 {
        1.0 / self.b - self.b
    }

    /// Set when `b^2` is within 1e-6 of `p/q` with `q <= 12`; the exact
    /// lattice layer is unreliable that close to a rational square.
    pub fn rationality_warning(&self) -> Option<(i64, i64)> {
        self.rationality_warning
    }

    /// Background charge vector `Q = (1/b - b) rho`.
    pub fn background(&self) -> Charge {
        Charge::background(self.n)
    }

    /// Central charge `c = (n-1)(1 - n(n+1)(1/b - b)^2)`.
    pub fn central_charge(&self) -> f64 {
        let n = self.n as f64;
        let q = self.q_scalar();
        (n - 1.0) * (1.0 - n * (n + 1.0) * q * q)
    }
}

/// Conformal weight `Delta = alpha . (alpha - 2Q) / 2`, numeric.
pub fn delta(alpha: &Charge, params: &TodaParams, bindings: &Bindings) -> Result<f64> {
    expect_rank(alpha, params)?;
    let two_q = Charge::background(params.n).scale(crate::exact::rat(2, 1));
    let shifted = alpha.sub(&two_q);
    Ok(0.5 * alpha.dot_numeric(&shifted, params.b, bindings)?)
}

/// Conformal weight as an exact quadratic expression in `b`; requires a
/// closed charge.
pub fn delta_exact(alpha: &Charge) -> Result<BExpr> {
    let two_q = Charge::background(alpha.rank()).scale(crate::exact::rat(2, 1));
    let shifted = alpha.sub(&two_q);
    Ok(alpha.dot_exact(&shifted)?.scale(crate::exact::rat(1, 2)))
}

/// Conformal weight and, for sl(3) in the regime where it is real, the
/// W3 charge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightData {
    pub delta: f64,
    pub w3: Option<f64>,
}

/// Weight data for a momentum.
pub fn weight_data(alpha: &Charge, params: &TodaParams, bindings: &Bindings) -> Result<WeightData> {
    let d = delta(alpha, params, bindings)?;
    let w3 = if params.n == 3 {
        w3_charge(alpha, params, bindings).ok()
    } else {
        None
    };
    Ok(WeightData { delta: d, w3 })
}

fn expect_rank(alpha: &Charge, params: &TodaParams) -> Result<()> {
    if alpha.rank() != params.n {
        return Err(TodaError::RankMismatch { expected: params.n, got: alpha.rank() });
    }
    Ok(())
}

fn w3_product(alpha: &Charge, params: &TodaParams, bindings: &Bindings) -> Result<f64> {
    let p = alpha.sub(&params.background());
    let mut prod = 1.0;
    for k in 1..=3 {
        prod *= p.dot_numeric(&Charge::h(3, k)?, params.b, bindings)?;
    }
    Ok(prod)
}

/// Square of the W3 charge, `48 / (22 + 5c) * prod_k ((alpha - Q) . h_k)^2`.
///
/// Real for every coupling (negative when `22 + 5c < 0`, where the charge
/// itself is imaginary), so polynomial identities in `w^2` can be checked
/// across the whole range.
pub fn w3_squared(alpha: &Charge, params: &TodaParams, bindings: &Bindings) -> Result<f64> {
    if params.n != 3 {
        return Err(TodaError::RankMismatch { expected: 3, got: params.n });
    }
    expect_rank(alpha, params)?;
    let denom = 22.0 + 5.0 * params.central_charge();
    if denom.abs() < 1e-12 {
        return Err(TodaError::W3Undefined("normalization pole at c = -22/5".into()));
    }
    let prod = w3_product(alpha, params, bindings)?;
    Ok(48.0 / denom * prod * prod)
}

/// W3 charge `sqrt(48/(22+5c)) * prod_k (alpha - Q) . h_k` (sl(3) only).
///
/// Defined as a real number only while `22 + 5c > 0`; outside that window
/// the charge is imaginary and [`w3_squared`] is the meaningful quantity.
pub fn w3_charge(alpha: &Charge, params: &TodaParams, bindings: &Bindings) -> Result<f64> {
    if params.n != 3 {
        return Err(TodaError::RankMismatch { expected: 3, got: params.n });
    }
    expect_rank(alpha, params)?;
    let denom = 22.0 + 5.0 * params.central_charge();
    if denom.abs() < 1e-12 {
        return Err(TodaError::W3Undefined("normalization pole at c = -22/5".into()));
    }
    if denom < 0.0 {
        return Err(TodaError::W3Undefined(format!(
            "22 + 5c = {denom} < 0: the W charge is imaginary; use w3_squared"
        )));
    }
    Ok((48.0 / denom).sqrt() * w3_product(alpha, params, bindings)?)
}

/// Residual of the semi-degenerate characterization
/// `9 w^2 = 2 Delta^2 (32 Delta + 2 - c) / (22 + 5c)`,
/// which vanishes exactly on the two Wyllard lines `kappa omega_1` and
/// `kappa omega_2`.
pub fn check_semidegenerate_identity(
    alpha: &Charge,
    params: &TodaParams,
    bindings: &Bindings,
) -> Result<f64> {
    let c = params.central_charge();
    let denom = 22.0 + 5.0 * c;
    if denom.abs() < 1e-12 {
        return Err(TodaError::W3Undefined("normalization pole at c = -22/5".into()));
    }
    let d = delta(alpha, params, bindings)?;
    let w2 = w3_squared(alpha, params, bindings)?;
    let rhs = 2.0 * d * d * (32.0 * d + 2.0 - c) / denom;
    Ok((9.0 * w2 - rhs).abs())
}

/// The four fully degenerate momenta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DegenerateLabel {
    /// `b omega_1`
    BOmega1,
    /// `b omega_{n-1}`
    BOmegaLast,
    /// `-omega_1 / b`
    MinusOmega1OverB,
    /// `-omega_{n-1} / b`
    MinusOmegaLastOverB,
}

impl DegenerateLabel {
    pub const ALL: [DegenerateLabel; 4] = [
        DegenerateLabel::BOmega1,
        DegenerateLabel::BOmegaLast,
        DegenerateLabel::MinusOmega1OverB,
        DegenerateLabel::MinusOmegaLastOverB,
    ];

    /// The momentum this label names.
    pub fn charge(&self, n: usize) -> Result<Charge> {
        let (j, coeff) = match self {
            DegenerateLabel::BOmega1 => (1, CoeffB::times_b_unit(Rat::from_integer(1))),
            DegenerateLabel::BOmegaLast => (n - 1, CoeffB::times_b_unit(Rat::from_integer(1))),
            DegenerateLabel::MinusOmega1OverB => (1, CoeffB::over_b_unit(Rat::from_integer(-1))),
            DegenerateLabel::MinusOmegaLastOverB => {
                (n - 1, CoeffB::over_b_unit(Rat::from_integer(-1)))
            }
        };
        Charge::omega(n, j)?.scale_coeffb(coeff)
    }

    /// Momentum shift carried by the j-th fusion channel, `j` in `1..=n`.
    pub fn shift(&self, n: usize, j: usize) -> Result<Charge> {
        let h = Charge::h(n, j)?;
        Ok(match self {
            DegenerateLabel::BOmega1 => h.scale_coeffb(CoeffB::times_b_unit(Rat::from_integer(1)))?,
            DegenerateLabel::BOmegaLast => {
                h.scale_coeffb(CoeffB::times_b_unit(Rat::from_integer(-1)))?
            }
            DegenerateLabel::MinusOmega1OverB => {
                h.scale_coeffb(CoeffB::over_b_unit(Rat::from_integer(-1)))?
            }
            DegenerateLabel::MinusOmegaLastOverB => {
                h.scale_coeffb(CoeffB::over_b_unit(Rat::from_integer(1)))?
            }
        })
    }

    /// The label of the dual momentum: duality exchanges `omega_1` with
    /// `omega_{n-1}` at fixed scale.
    pub fn dual(&self) -> DegenerateLabel {
        match self {
            DegenerateLabel::BOmega1 => DegenerateLabel::BOmegaLast,
            DegenerateLabel::BOmegaLast => DegenerateLabel::BOmega1,
            DegenerateLabel::MinusOmega1OverB => DegenerateLabel::MinusOmegaLastOverB,
            DegenerateLabel::MinusOmegaLastOverB => DegenerateLabel::MinusOmega1OverB,
        }
    }
}

/// Degeneracy classification of a momentum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegeneracyTag {
    FullyDegenerate(DegenerateLabel),
    /// `kappa omega_j` with `j` one of the two end nodes.
    SemiDegenerate { j: usize, kappa: CoeffB },
    Generic,
}

/// Classify a closed momentum by exact pattern match on its coordinates.
pub fn classify_charge(alpha: &Charge) -> Result<DegeneracyTag> {
    if !alpha.is_closed() {
        return Ok(DegeneracyTag::Generic);
    }
    let n = alpha.rank();
    for label in DegenerateLabel::ALL {
        if *alpha == label.charge(n)? {
            return Ok(DegeneracyTag::FullyDegenerate(label));
        }
    }
    let support: Vec<usize> = alpha
        .coords()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, _)| i + 1)
        .collect();
    match support.as_slice() {
        [] => Ok(DegeneracyTag::SemiDegenerate { j: 1, kappa: CoeffB::zero() }),
        [j] if *j == 1 || *j == n - 1 => Ok(DegeneracyTag::SemiDegenerate {
            j: *j,
            kappa: alpha.coords()[j - 1],
        }),
        _ => Ok(DegeneracyTag::Generic),
    }
}

/// The Wyllard momentum `kappa omega_j`, `j` in `{1, n-1}`.
pub fn semi_degenerate_charge(n: usize, j: usize, kappa: CoeffB) -> Result<Charge> {
    if j != 1 && j != n - 1 {
        return Err(TodaError::BadDirection(j));
    }
    Charge::omega(n, j)?.scale_coeffb(kappa)
}

/// Outcome of the exact genericity test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Genericity {
    /// All pairings `(alpha - Q) . (h_i - h_j)` avoid `Z/b` and `bZ`.
    Generic,
    /// A pairing landed on the excluded set; the witness names it.
    NotGeneric { witness: String },
    /// Conditions depend on continuous parameters: generic away from a
    /// measure-zero set of parameter values, listed by pairing.
    GenericallyTrue { exceptional: Vec<String> },
}

impl Genericity {
    pub fn is_generic(&self) -> bool {
        matches!(self, Genericity::Generic)
    }
}

/// Exact genericity of a momentum: for every `i < j` the pairing
/// `(alpha - Q) . (h_i - h_j)` must avoid both `Z/b` and `bZ`.
pub fn is_generic(alpha: &Charge) -> Result<Genericity> {
    let n = alpha.rank();
    let q = Charge::background(n);
    let p = alpha.sub(&q);
    let discrete = Charge::new(n, p.coords().to_vec())?;
    let mut exceptional = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let hij = Charge::h(n, i)?.sub(&Charge::h(n, j)?);
            let x = discrete.dot_exact_linear(&hij)?;
            let mut param_dependent = false;
            for cp in p.cont_params() {
                let dir = Charge::new(n, cp.direction.clone())?;
                if !dir.dot_exact_linear(&hij)?.is_zero() {
                    param_dependent = true;
                }
            }
            if param_dependent {
                exceptional.push(format!(
                    "(alpha-Q).(h_{i}-h_{j}) depends on continuous parameters"
                ));
                continue;
            }
            if x.in_z_over_b() {
                return Ok(Genericity::NotGeneric {
                    witness: format!("(alpha-Q).(h_{i}-h_{j}) = {x} lies in Z/b"),
                });
            }
            if x.in_b_z() {
                return Ok(Genericity::NotGeneric {
                    witness: format!("(alpha-Q).(h_{i}-h_{j}) = {x} lies in bZ"),
                });
            }
        }
    }
    if exceptional.is_empty() {
        Ok(Genericity::Generic)
    } else {
        Ok(Genericity::GenericallyTrue { exceptional })
    }
}

/// Fusion of a fully degenerate field with a generic one: the n momentum
/// shifts of the corresponding label. Refuses non-generic spectators, where
/// channel multiplicities would change.
pub fn fuse_fully_degenerate(
    label: DegenerateLabel,
    alpha: &Charge,
    params: &TodaParams,
) -> Result<Vec<Charge>> {
    expect_rank(alpha, params)?;
    match is_generic(alpha)? {
        Genericity::Generic | Genericity::GenericallyTrue { .. } => {}
        Genericity::NotGeneric { witness } => return Err(TodaError::NonGeneric { witness }),
    }
    (1..=params.n)
        .map(|j| Ok(alpha.add(&label.shift(params.n, j)?)))
        .collect()
}

/// Fusion of `b omega_1` with the Wyllard field `kappa omega_j`: exactly two
/// channels survive.
pub fn fuse_deg_semideg(j: usize, kappa: CoeffB, params: &TodaParams) -> Result<[Charge; 2]> {
    let n = params.n;
    if j != 1 && j != n - 1 {
        return Err(TodaError::BadDirection(j));
    }
    let base = semi_degenerate_charge(n, j, kappa)?;
    let shift = |k: usize| -> Result<Charge> {
        Ok(base.add(&DegenerateLabel::BOmega1.shift(n, k)?))
    };
    if j == 1 {
        Ok([shift(1)?, shift(2)?])
    } else {
        Ok([shift(1)?, shift(n)?])
    }
}

/// W3 charge constraint on the middle field of `<Phi_2| Phi_alpha(1) |Phi_1>`
/// with both outer states semi-degenerate at level one:
/// `w_alpha = 3 w_2 / (2 Delta_2) (Delta_2 + Delta_alpha - Delta_1)
///          - 3 w_1 / (2 Delta_1) (Delta_1 + Delta_alpha - Delta_2)
///          + 2 (w_1 - w_2)`.
///
/// All three w's are eigenvalues of the zero mode on the corresponding
/// states. For the out-state at infinity that is minus the label charge of
/// the inserted field, because the spin-3 current picks up `(dw/dz)^3 < 0`
/// under inversion; callers mapping a three-point function of labeled
/// fields onto this frame must negate the charge of the field at infinity.
pub fn semideg_w_constraint(
    delta1: f64,
    w1: f64,
    delta2: f64,
    w2: f64,
    delta_alpha: f64,
) -> Result<f64> {
    if delta1 == 0.0 || delta2 == 0.0 {
        return Err(TodaError::OutsideDomain(
            0.0,
            "w constraint needs nonzero outer weights".into(),
        ));
    }
    Ok(1.5 * w2 / delta2 * (delta2 + delta_alpha - delta1)
        - 1.5 * w1 / delta1 * (delta1 + delta_alpha - delta2)
        + 2.0 * (w1 - w2))
}
