//! Conformal blocks of the four-point function with one insertion of the
//! first-fundamental degenerate field and one semi-degenerate field.
//!
//! The holomorphic blocks are generalized hypergeometric: around the origin
//! the reduced solutions are `f_i(z) = (-z)^{A_i} pFq({B_k + A_i}; {1 - A_k +
//! A_i}_{k != i}; z)`, around infinity `g_i(z) = (-z)^{-B_i} pFq({A_k + B_i};
//! {1 - B_k + B_i}_{k != i}; 1/z)`, and the two bases are connected by a
//! matrix of gamma-function products. All numeric evaluation is restricted to
//! the negative real axis, where every power has a positive base and the path
//! between the two convergence domains crosses no singular point.

use crate::error::{Result, TodaError};
use crate::exact::{rat, BExpr, CoeffB};
use crate::kinematics::{delta, delta_exact, is_generic, TodaParams};
use crate::lattice::{Bindings, Charge};
use crate::ode::Dopri5;
use crate::pfq::{pfq, pfq_theta_derivs};
use crate::special::ln_gamma_signed;
use serde::{Deserialize, Serialize};

/// Which fundamental-weight line the semi-degenerate field sits on.
///
/// The two choices select different internal shift parameters `mu`, so for
/// rank 1 (where both weights coincide) they are still distinct inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SemiDegDirection {
    /// Charge proportional to `omega_1`.
    Omega1,
    /// Charge proportional to `omega_{n-1}`.
    OmegaLast,
}

impl SemiDegDirection {
    /// The weight index, 1 or n-1.
    pub fn index(&self, n: usize) -> usize {
        match self {
            SemiDegDirection::Omega1 => 1,
            SemiDegDirection::OmegaLast => n - 1,
        }
    }

    pub fn dual(&self) -> SemiDegDirection {
        match self {
            SemiDegDirection::Omega1 => SemiDegDirection::OmegaLast,
            SemiDegDirection::OmegaLast => SemiDegDirection::Omega1,
        }
    }
}

/// `2 mu` as an exact coefficient: `kappa / n` on the `omega_{n-1}` line and
/// `(1/b - b) - kappa / n` on the `omega_1` line.
pub fn two_mu(kappa: &CoeffB, direction: SemiDegDirection, n: usize) -> CoeffB {
    let over_n = kappa.scale(rat(1, n as i64));
    match direction {
        SemiDegDirection::OmegaLast => over_n,
        SemiDegDirection::Omega1 => CoeffB::new(rat(0, 1), rat(-1, 1), rat(1, 1)) - over_n,
    }
}

/// Frobenius exponent data of the rank-n hypergeometric system.
///
/// `a[i] = Delta(alpha1 + b h_{i+1}) - Delta(alpha1) + b mu` and similarly
/// `b_[i]` from `alpha2`. The barred lists hold the antiholomorphic
/// counterparts when the fields carry independent left/right charges. Exact
/// quadratic-in-`b` mirrors are kept whenever the charges have no continuous
/// parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentData {
    pub n: usize,
    pub direction: SemiDegDirection,
    pub kappa: f64,
    pub kappabar: Option<f64>,
    pub mu: f64,
    pub mubar: Option<f64>,
    pub a: Vec<f64>,
    pub b_: Vec<f64>,
    pub abar: Option<Vec<f64>>,
    pub bbar: Option<Vec<f64>>,
    pub a_exact: Option<Vec<BExpr>>,
    pub b_exact: Option<Vec<BExpr>>,
    /// Conformal weight of the degenerate insertion `b omega_1`.
    pub delta_deg: f64,
    /// `2 b mu`, the exponent of the `(1 - z)` prefactor.
    pub two_b_mu: f64,
}

fn shifted_delta_gap(
    alpha: &Charge,
    i: usize,
    params: &TodaParams,
    bindings: &Bindings,
) -> Result<f64> {
    let n = params.n();
    let bh = Charge::h(n, i)?.scale_coeffb(CoeffB::times_b_unit(rat(1, 1)))?;
    Ok(delta(&alpha.add(&bh), params, bindings)? - delta(alpha, params, bindings)?)
}

fn shifted_delta_gap_exact(alpha: &Charge, i: usize, n: usize) -> Result<BExpr> {
    let bh = Charge::h(n, i)?.scale_coeffb(CoeffB::times_b_unit(rat(1, 1)))?;
    Ok(delta_exact(&alpha.add(&bh))? - delta_exact(alpha)?)
}

fn exponent_lists(
    alpha: &Charge,
    b_mu: f64,
    b_mu_exact: &BExpr,
    params: &TodaParams,
    bindings: &Bindings,
) -> Result<(Vec<f64>, Option<Vec<BExpr>>)> {
    let n = params.n();
    let mut num = Vec::with_capacity(n);
    for i in 1..=n {
        num.push(shifted_delta_gap(alpha, i, params, bindings)? + b_mu);
    }
    let exact = if alpha.cont_params().is_empty() {
        let mut list = Vec::with_capacity(n);
        for i in 1..=n {
            list.push(shifted_delta_gap_exact(alpha, i, n)? + *b_mu_exact);
        }
        Some(list)
    } else {
        None
    };
    Ok((num, exact))
}

fn require_generic(alpha: &Charge, role: &str) -> Result<()> {
    match is_generic(alpha)? {
        crate::kinematics::Genericity::NotGeneric { witness } => Err(TodaError::NonGeneric {
            witness: format!("{role}: {witness}"),
        }),
        _ => Ok(()),
    }
}

/// Exponents of the holomorphic system for scalar external charges.
pub fn exponents_from_charges(
    alpha1: &Charge,
    alpha2: &Charge,
    kappa: &CoeffB,
    direction: SemiDegDirection,
    params: &TodaParams,
    bindings: &Bindings,
) -> Result<ExponentData> {
    let n = params.n();
    if alpha1.rank() != n || alpha2.rank() != n {
        return Err(TodaError::RankMismatch { expected: n, got: alpha1.rank().max(alpha2.rank()) });
    }
    require_generic(alpha1, "alpha1")?;
    require_generic(alpha2, "alpha2")?;
    let b = params.b();
    let two_mu_c = two_mu(kappa, direction, n);
    let mu = 0.5 * two_mu_c.eval(b);
    // b mu, exact: multiply the coefficient by b/2.
    let b_mu_exact = two_mu_c.mul_coeffb(&CoeffB::times_b_unit(rat(1, 2)));
    let b_mu = b * mu;
    let (a, a_exact) = exponent_lists(alpha1, b_mu, &b_mu_exact, params, bindings)?;
    let (b_, b_exact) = exponent_lists(alpha2, b_mu, &b_mu_exact, params, bindings)?;
    let deg = Charge::omega(n, 1)?.scale_coeffb(CoeffB::times_b_unit(rat(1, 1)))?;
    Ok(ExponentData {
        n,
        direction,
        kappa: kappa.eval(b),
        kappabar: None,
        mu,
        mubar: None,
        a,
        b_,
        abar: None,
        bbar: None,
        a_exact,
        b_exact,
        delta_deg: delta(&deg, params, &Bindings::empty())?,
        two_b_mu: 2.0 * b_mu,
    })
}

impl ExponentData {
    /// Attach antiholomorphic exponents computed from independent right
    /// charges and a right semi-degenerate coupling.
    pub fn with_bars(
        mut self,
        alpha1bar: &Charge,
        alpha2bar: &Charge,
        kappabar: &CoeffB,
        params: &TodaParams,
        bindings: &Bindings,
    ) -> Result<ExponentData> {
        let bars = exponents_from_charges(
            alpha1bar,
            alpha2bar,
            kappabar,
            self.direction,
            params,
            bindings,
        )?;
        self.kappabar = Some(bars.kappa);
        self.mubar = Some(bars.mu);
        self.abar = Some(bars.a);
        self.bbar = Some(bars.b_);
        Ok(self)
    }

    /// The antiholomorphic system as standalone exponent data, if present.
    pub fn barred(&self) -> Option<ExponentData> {
        let (abar, bbar) = (self.abar.clone()?, self.bbar.clone()?);
        Some(ExponentData {
            n: self.n,
            direction: self.direction,
            kappa: self.kappabar?,
            kappabar: None,
            mu: self.mubar?,
            mubar: None,
            a: abar,
            b_: bbar,
            abar: None,
            bbar: None,
            a_exact: None,
            b_exact: None,
            delta_deg: self.delta_deg,
            two_b_mu: self.two_b_mu_bar_unchecked(),
        })
    }

    fn two_b_mu_bar_unchecked(&self) -> f64 {
        // two_b_mu = 2 b mu; reconstruct for the barred side from mubar.
        match self.mubar {
            Some(mubar) => self.two_b_mu / self.mu * mubar,
            None => self.two_b_mu,
        }
    }

    /// Sum of all Riemann-scheme exponents as an exact expression; the value
    /// is forced to `n(n-1)/2` by the scheme structure, and evaluating it
    /// exercises the bookkeeping.
    pub fn scheme_exponent_sum_exact(&self) -> Option<BExpr> {
        let (a_exact, b_exact) = (self.a_exact.as_ref()?, self.b_exact.as_ref()?);
        let mut total = BExpr::zero();
        for e in a_exact.iter().chain(b_exact.iter()) {
            total = total + *e;
        }
        let ab_sum = total;
        // Exponents at the intermediate singular point: 0, 1, ..., n-2 and
        // n - 1 - sum(A_i + B_i).
        let n = self.n as i64;
        let low = rat((n - 2) * (n - 1) / 2, 1);
        Some(total + BExpr::from_rat(low) + BExpr::from_rat(rat(n - 1, 1)) - ab_sum)
    }
}

/// Connection coefficients between the two solution bases:
/// `M[i][j] = prod_{k != i} Gamma(1 + A_i - A_k) / Gamma(1 - B_j - A_k)
///  * prod_{l != j} Gamma(B_l - B_j) / Gamma(B_l + A_i)`.
///
/// The inverse matrix is the same formula with the roles of the two lists
/// exchanged.
pub fn connection_matrix(a: &[f64], b: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    if b.len() != n || n == 0 {
        return Err(TodaError::RankMismatch { expected: n.max(1), got: b.len() });
    }
    let gamma = |x: f64| -> Result<(f64, i8)> {
        ln_gamma_signed(x).map_err(|_| {
            TodaError::ResonantExponents(format!("gamma pole at connection argument {x}"))
        })
    };
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut ln = 0.0;
            let mut sign = 1i8;
            for k in 0..n {
                if k != i {
                    let (l1, s1) = gamma(1.0 + a[i] - a[k])?;
                    let (l2, s2) = gamma(1.0 - b[j] - a[k])?;
                    ln += l1 - l2;
                    sign *= s1 * s2;
                }
                if k != j {
                    let (l3, s3) = gamma(b[k] - b[j])?;
                    let (l4, s4) = gamma(b[k] + a[i])?;
                    ln += l3 - l4;
                    sign *= s3 * s4;
                }
            }
            m[i][j] = f64::from(sign) * ln.exp();
        }
    }
    Ok(m)
}

/// Elementary symmetric polynomials `e_0 .. e_n` of the given values.
fn elementary_symmetric(vals: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; vals.len() + 1];
    e[0] = 1.0;
    for (count, &v) in vals.iter().enumerate() {
        for k in (1..=count + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}

/// A hypergeometric block system: exponents, series radius guard, and the
/// connection matrix with its inverse. Immutable after construction; all
/// evaluations are pure.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub exp: ExponentData,
    pub radius: f64,
    pub m: Vec<Vec<f64>>,
    pub minv: Vec<Vec<f64>>,
    /// `e_k(A)` and `e_k(B)`, cached for the companion ODE.
    ea: Vec<f64>,
    eb: Vec<f64>,
}

impl BlockSystem {
    pub fn new(exp: ExponentData) -> Result<BlockSystem> {
        let m = connection_matrix(&exp.a, &exp.b_)?;
        let minv = connection_matrix(&exp.b_, &exp.a)?;
        let ea = elementary_symmetric(&exp.a);
        let eb = elementary_symmetric(&exp.b_);
        Ok(BlockSystem { exp, radius: 0.95, m, minv, ea, eb })
    }

    /// The antiholomorphic companion system, when the exponent data carries
    /// barred lists.
    pub fn barred(&self) -> Option<Result<BlockSystem>> {
        self.exp.barred().map(BlockSystem::new)
    }

    pub fn n(&self) -> usize {
        self.exp.n
    }

    fn check_f_domain(&self, z: f64) -> Result<()> {
        if !(z < 0.0 && -z <= self.radius) {
            return Err(TodaError::OutsideDomain(
                z,
                format!("origin-basis blocks need z in [-{}, 0)", self.radius),
            ));
        }
        Ok(())
    }

    fn check_g_domain(&self, z: f64) -> Result<()> {
        if !(z < 0.0 && -z >= 1.0 / self.radius) {
            return Err(TodaError::OutsideDomain(
                z,
                format!("infinity-basis blocks need z <= -{}", 1.0 / self.radius),
            ));
        }
        Ok(())
    }

    fn f_params(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (&self.exp.a, &self.exp.b_);
        let upper: Vec<f64> = b.iter().map(|bk| bk + a[i]).collect();
        let lower: Vec<f64> =
            (0..a.len()).filter(|&k| k != i).map(|k| 1.0 - a[k] + a[i]).collect();
        (upper, lower)
    }

    fn g_params(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (&self.exp.a, &self.exp.b_);
        let upper: Vec<f64> = a.iter().map(|ak| ak + b[i]).collect();
        let lower: Vec<f64> =
            (0..b.len()).filter(|&k| k != i).map(|k| 1.0 - b[k] + b[i]).collect();
        (upper, lower)
    }

    /// Reduced origin-basis solution `f_i(z) = (-z)^{A_i} pFq(z)`.
    pub fn reduced_f(&self, i: usize, z: f64) -> Result<f64> {
        self.check_f_domain(z)?;
        let (upper, lower) = self.f_params(i);
        Ok((-z).powf(self.exp.a[i]) * pfq(&upper, &lower, z, self.radius)?)
    }

    /// Reduced infinity-basis solution `g_i(z) = (-z)^{-B_i} pFq(1/z)`.
    pub fn reduced_g(&self, i: usize, z: f64) -> Result<f64> {
        self.check_g_domain(z)?;
        let (upper, lower) = self.g_params(i);
        Ok((-z).powf(-self.exp.b_[i]) * pfq(&upper, &lower, 1.0 / z, self.radius)?)
    }

    /// Full block around the origin, with the `(1 - z)` dressing and the
    /// fusion exponent `eta_i = A_i - b mu - Delta_deg`.
    pub fn block_f(&self, i: usize, z: f64) -> Result<f64> {
        let e = &self.exp;
        let eta = e.a[i] - 0.5 * e.two_b_mu - e.delta_deg;
        let (upper, lower) = self.f_params(i);
        self.check_f_domain(z)?;
        Ok((1.0 - z).powf(e.two_b_mu) * (-z).powf(eta) * pfq(&upper, &lower, z, self.radius)?)
    }

    /// Full block around infinity, with fusion exponent
    /// `zeta_i = B_i - b mu + Delta_deg`.
    pub fn block_g(&self, i: usize, z: f64) -> Result<f64> {
        let e = &self.exp;
        let zeta = e.b_[i] - 0.5 * e.two_b_mu + e.delta_deg;
        let (upper, lower) = self.g_params(i);
        self.check_g_domain(z)?;
        let w = 1.0 / z;
        Ok((1.0 - w).powf(e.two_b_mu) * (-w).powf(zeta) * pfq(&upper, &lower, w, self.radius)?)
    }

    /// `(z d/dz)^k` of the reduced origin solution, `k = 0 .. count-1`.
    pub fn theta_f(&self, i: usize, z: f64, count: usize) -> Result<Vec<f64>> {
        self.check_f_domain(z)?;
        let (upper, lower) = self.f_params(i);
        pfq_theta_derivs(&upper, &lower, self.exp.a[i], z, count, self.radius)
    }

    /// `(z d/dz)^k` of the reduced infinity solution. In the variable
    /// `w = 1/z` the solution has the origin form with the exponent lists
    /// exchanged, and each application of `z d/dz` flips one sign.
    pub fn theta_g(&self, i: usize, z: f64, count: usize) -> Result<Vec<f64>> {
        self.check_g_domain(z)?;
        let (upper, lower) = self.g_params(i);
        let mut derivs =
            pfq_theta_derivs(&upper, &lower, self.exp.b_[i], 1.0 / z, count, self.radius)?;
        for (k, d) in derivs.iter_mut().enumerate() {
            if k % 2 == 1 {
                *d = -*d;
            }
        }
        Ok(derivs)
    }

    /// Mismatch of the defining relation
    /// `z prod_k (D + B_k) f = prod_k (D - A_k) f`, `D = z d/dz`,
    /// on the truncated series of a solution, relative to term size.
    fn ode_residual_from_thetas(&self, thetas: &[f64], z: f64) -> f64 {
        let n = self.n();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        let mut scale: f64 = 0.0;
        for (m, &th) in thetas.iter().enumerate().take(n + 1) {
            let lt = z * self.eb[n - m] * th;
            let sign = if (n - m).is_multiple_of(2) { 1.0 } else { -1.0 };
            let rt = sign * self.ea[n - m] * th;
            lhs += lt;
            rhs += rt;
            scale = scale.max(lt.abs()).max(rt.abs());
        }
        (lhs - rhs).abs() / scale.max(1e-300)
    }

    pub fn ode_residual_f(&self, i: usize, z: f64) -> Result<f64> {
        let thetas = self.theta_f(i, z, self.n() + 1)?;
        Ok(self.ode_residual_from_thetas(&thetas, z))
    }

    pub fn ode_residual_g(&self, i: usize, z: f64) -> Result<f64> {
        let thetas = self.theta_g(i, z, self.n() + 1)?;
        Ok(self.ode_residual_from_thetas(&thetas, z))
    }

    /// Right-hand side of the companion first-order system in
    /// `g_k = (z d/dz)^k f`.
    fn companion_rhs(&self, z: f64, g: &[f64], dg: &mut [f64]) {
        let n = self.n();
        for k in 0..n - 1 {
            dg[k] = g[k + 1] / z;
        }
        let mut top = 0.0;
        for (m, &gm) in g.iter().enumerate() {
            let sign = if (n - m).is_multiple_of(2) { 1.0 } else { -1.0 };
            top += (z * self.eb[n - m] - sign * self.ea[n - m]) * gm;
        }
        dg[n - 1] = top / (z * (1.0 - z));
    }

    /// Integrate the companion system from `z_from` to `z_to` along the
    /// negative real axis, starting from the given derivative stack; returns
    /// the transported stack.
    pub fn transport(&self, g0: &[f64], z_from: f64, z_to: f64) -> Result<Vec<f64>> {
        if !(z_from < 0.0 && z_to < 0.0) {
            return Err(TodaError::OutsideDomain(
                z_from.max(z_to),
                "transport path must stay on the negative real axis".into(),
            ));
        }
        let solver = Dopri5::default();
        solver.integrate(&|z: f64, g: &[f64], dg: &mut [f64]| self.companion_rhs(z, g, dg), z_from, z_to, g0)
    }

    /// Transport every origin solution from series data at `z_from` into the
    /// infinity domain at `z_to` and compare with the connection-matrix
    /// image of the infinity basis; returns the largest relative mismatch.
    pub fn verify_connection(&self, z_from: f64, z_to: f64) -> Result<f64> {
        if !(-0.9..=-0.1).contains(&z_from) {
            return Err(TodaError::OutsideDomain(z_from, "start must lie in [-0.9, -0.1]".into()));
        }
        if !(-10.0..=-1.1).contains(&z_to) {
            return Err(TodaError::OutsideDomain(z_to, "target must lie in [-10, -1.1]".into()));
        }
        let n = self.n();
        let g_vals: Vec<f64> = (0..n).map(|j| self.reduced_g(j, z_to)).collect::<Result<_>>()?;
        let scale = g_vals.iter().fold(1e-300f64, |acc, v| acc.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..n {
            let seed = self.theta_f(i, z_from, n)?;
            let moved = self.transport(&seed, z_from, z_to)?;
            let glued: f64 = (0..n).map(|j| self.m[i][j] * g_vals[j]).sum();
            worst = worst.max((moved[0] - glued).abs() / scale);
        }
        Ok(worst)
    }

    /// Frobenius exponents of the companion equation at the intermediate
    /// singular point: `0, 1, ..., n-2` and `n - 1 - sum(A_i + B_i)`.
    pub fn indicial_roots_at_one(&self) -> Vec<f64> {
        let n = self.n();
        let mut roots: Vec<f64> = (0..n - 1).map(|k| k as f64).collect();
        roots.push(n as f64 - 1.0 - self.ea[1] - self.eb[1]);
        roots
    }

    /// Indicial polynomial at the intermediate point evaluated at `r`:
    /// the local expansion of the equation gives
    /// `p(r) = -r (r-1) ... (r-n+1) - (e_1(A) + e_1(B)) r (r-1) ... (r-n+2)`.
    pub fn indicial_poly_at_one(&self, r: f64) -> f64 {
        let n = self.n();
        let mut falling = 1.0;
        for k in 0..n - 1 {
            falling *= r - k as f64;
        }
        -falling * (r - (n as f64 - 1.0)) - (self.ea[1] + self.eb[1]) * falling
    }
}
