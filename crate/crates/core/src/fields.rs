//! Non-scalar primary fields: a pair of momenta `(alpha, alphabar)` and a
//! permutation `sigma`, subject to the exact lattice constraints
//! `alpha - alphabar in R*/b` and `alpha - sigma * alphabar in b R*`
//! (star denoting the shifted Weyl action). The permutation matters only
//! through its conjugacy class; the scalar case is `sigma = id`, which
//! forces `alpha = alphabar` for irrational `b^2`.

use crate::error::{Result, TodaError};
use crate::exact::{rat, rat_fract, rat_is_integer, CoeffB, Rat};
use crate::kinematics::{
    classify_charge, delta, is_generic, DegenerateLabel, DegeneracyTag, Genericity, TodaParams,
};
use crate::lattice::{Bindings, Charge, LatticeKind, LatticeScale, LatticeSpec, WeylElement};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// A primary field label. `sigma` is stored as a representative permutation;
/// only its conjugacy class is meaningful.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldLabel {
    pub alpha: Charge,
    pub alphabar: Charge,
    pub sigma: WeylElement,
    pub degeneracy: DegeneracyTag,
}

/// Monodromy exponents of the fusion with the two unit-weight degenerate
/// fields, as exact rationals reduced into `[0, 1)`. Both always lie in
/// `Z/n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonodromyCharge {
    pub eta: Rat,
    pub etahat: Rat,
}

impl FieldLabel {
    pub fn new(alpha: Charge, alphabar: Charge, sigma: WeylElement) -> Result<FieldLabel> {
        if alpha.rank() != alphabar.rank() || alpha.rank() != sigma.rank() {
            return Err(TodaError::RankMismatch {
                expected: alpha.rank(),
                got: alphabar.rank().min(sigma.rank()),
            });
        }
        let degeneracy = classify_charge(&alpha)?;
        Ok(FieldLabel { alpha, alphabar, sigma, degeneracy })
    }

    pub fn rank(&self) -> usize {
        self.alpha.rank()
    }

    pub fn is_scalar(&self) -> bool {
        self.sigma.is_identity()
    }

    /// The dual field: both momenta reflected through `2Q`, same `sigma`.
    pub fn dual(&self) -> Result<FieldLabel> {
        let two_q = Charge::background(self.rank()).scale(rat(2, 1));
        FieldLabel::new(
            two_q.sub(&self.alpha),
            two_q.sub(&self.alphabar),
            self.sigma.clone(),
        )
    }

    /// Relabel by the shifted Weyl action of `mu` on both momenta, which
    /// conjugates `sigma`. All observable data is preserved.
    pub fn conjugate_by(&self, mu: &WeylElement) -> Result<FieldLabel> {
        let sigma = mu.compose(&self.sigma).compose(&mu.inverse());
        FieldLabel::new(mu.star_act(&self.alpha), mu.star_act(&self.alphabar), sigma)
    }

    /// `Delta - Delta_bar`, the conformal spin.
    pub fn spin(&self, params: &TodaParams, bindings: &Bindings) -> Result<f64> {
        Ok(delta(&self.alpha, params, bindings)? - delta(&self.alphabar, params, bindings)?)
    }

    /// Whether both momenta pass the exact genericity test.
    pub fn genericity(&self) -> Result<(Genericity, Genericity)> {
        Ok((is_generic(&self.alpha)?, is_generic(&self.alphabar)?))
    }
}

/// Exact check of the two lattice constraints. Continuous directions must
/// cancel between the momenta for the differences to be testable at all;
/// when they do not, no parameter value can satisfy the constraints.
pub fn verify_constraints(f: &FieldLabel) -> bool {
    let weight_over_b = LatticeSpec::new(LatticeKind::Weight, LatticeScale::OneOverB);
    let weight_times_b = LatticeSpec::new(LatticeKind::Weight, LatticeScale::B);
    let d1 = f.alpha.sub(&f.alphabar);
    let d2 = f.alpha.sub(&f.sigma.star_act(&f.alphabar));
    if !d1.is_closed() || !d2.is_closed() {
        return false;
    }
    matches!(weight_over_b.contains(&d1), Ok(true)) && matches!(weight_times_b.contains(&d2), Ok(true))
}

/// A scalar field: `alpha = alphabar`, trivial permutation.
pub fn make_scalar(alpha: Charge) -> Result<FieldLabel> {
    let n = alpha.rank();
    FieldLabel::new(alpha.clone(), alpha, WeylElement::identity(n))
}

fn half_integer(x: &Rat, what: &str) -> Result<()> {
    if !(x * rat(2, 1)).is_integer() {
        return Err(TodaError::ConstraintViolation(format!(
            "{what} = {x} must be a half-integer"
        )));
    }
    Ok(())
}

fn third_integer(x: &Rat, what: &str) -> Result<()> {
    if !(x * rat(3, 1)).is_integer() {
        return Err(TodaError::ConstraintViolation(format!(
            "{what} = {x} must be a multiple of 1/3"
        )));
    }
    Ok(())
}

/// The rank-1 non-scalar family: momenta from the degenerate table with
/// half-integer indices,
/// `alpha = [(1-r)/b - (1-s)b] omega_1`, `alphabar = [(1+r)/b - (1-s)b] omega_1`,
/// paired with the transposition.
pub fn make_field_sl2(r: Rat, s: Rat) -> Result<FieldLabel> {
    half_integer(&r, "r")?;
    half_integer(&s, "s")?;
    let one = Rat::one();
    let alpha = Charge::new(2, vec![CoeffB::new(Rat::zero(), s - one, one - r)])?;
    let alphabar = Charge::new(2, vec![CoeffB::new(Rat::zero(), s - one, one + r)])?;
    FieldLabel::new(alpha, alphabar, WeylElement::transposition(2, 1, 2)?)
}

/// Momentum from the degenerate table: row `i` contributes
/// `[(1 - n_i)/b - (1 - m_i) b] omega_i`.
pub fn kac_charge(n: usize, rows: &[(Rat, Rat)]) -> Result<Charge> {
    if rows.len() != n - 1 {
        return Err(TodaError::RankMismatch { expected: n - 1, got: rows.len() });
    }
    let one = Rat::one();
    let coords = rows
        .iter()
        .map(|(ni, mi)| CoeffB::new(Rat::zero(), *mi - one, one - ni))
        .collect();
    Charge::new(n, coords)
}

/// Lattice data for the rank-2 constructors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Sl3Data {
    /// Scalar: any momentum, duplicated.
    Identity { alpha: Charge },
    /// Full 3-cycle: both momenta fixed by two third-integer weight rows
    /// `(n_1, n_2)` and `(m_1, m_2)` whose entries differ by integers.
    Cyclic { n1: Rat, n2: Rat, m1: Rat, m2: Rat },
    /// Transposition `(12)`: integer indices `(r, s)` along the `e_1` line
    /// plus an unconstrained coefficient `beta` along the invariant `h_3`.
    Transposition { r: i64, s: i64, beta: Rat },
}

fn integer_difference(x: &Rat, y: &Rat, what: &str) -> Result<()> {
    if !(x - y).is_integer() {
        return Err(TodaError::ConstraintViolation(format!(
            "{what} must differ by an integer, got {x} and {y}"
        )));
    }
    Ok(())
}

pub fn make_field_sl3(data: &Sl3Data) -> Result<FieldLabel> {
    match data {
        Sl3Data::Identity { alpha } => {
            if alpha.rank() != 3 {
                return Err(TodaError::RankMismatch { expected: 3, got: alpha.rank() });
            }
            make_scalar(alpha.clone())
        }
        Sl3Data::Cyclic { n1, n2, m1, m2 } => {
            for (x, name) in [(n1, "n1"), (n2, "n2"), (m1, "m1"), (m2, "m2")] {
                third_integer(x, name)?;
            }
            integer_difference(n1, n2, "n1, n2")?;
            integer_difference(m1, m2, "m1, m2")?;
            let sigma = WeylElement::cycle(3, &[1, 2, 3])?;
            // alphabar = Q + bM - N/b and alpha = Q + bM - sigma(N)/b with
            // N, M the third-integer weight vectors: the two constraint
            // differences are then (1 - sigma)N / b and b (1 - sigma)M,
            // both in the weight lattice.
            let q = Charge::background(3);
            let nvec = Charge::from_rational_coords(3, &[*n1, *n2])?;
            let mvec = Charge::from_rational_coords(3, &[*m1, *m2])?;
            let bm = mvec.scale_coeffb(CoeffB::times_b_unit(Rat::one()))?;
            let alphabar =
                q.add(&bm).sub(&nvec.scale_coeffb(CoeffB::over_b_unit(Rat::one()))?);
            let alpha = q
                .add(&bm)
                .sub(&sigma.act(&nvec).scale_coeffb(CoeffB::over_b_unit(Rat::one()))?);
            FieldLabel::new(alpha, alphabar, sigma)
        }
        Sl3Data::Transposition { r, s, beta } => {
            let sigma = WeylElement::transposition(3, 1, 2)?;
            let q = Charge::background(3);
            let h3 = Charge::h(3, 3)?.scale(*beta);
            let e1 = Charge::simple_root(3, 1)?;
            let half = rat(1, 2);
            // (-r/b + s b) e_1 / 2 on the holomorphic side, (+r/b + s b) / 2
            // on the antiholomorphic side.
            let hol = e1.scale_coeffb(CoeffB::new(
                Rat::zero(),
                half * rat(*s, 1),
                -half * rat(*r, 1),
            ))?;
            let antihol = e1.scale_coeffb(CoeffB::new(
                Rat::zero(),
                half * rat(*s, 1),
                half * rat(*r, 1),
            ))?;
            let alpha = q.add(&h3).add(&hol);
            let alphabar = q.add(&h3).add(&antihol);
            FieldLabel::new(alpha, alphabar, sigma)
        }
    }
}

/// Orbits of the permutation in application order, including fixed points,
/// each starting at its smallest member.
fn orbits(sigma: &WeylElement) -> Vec<Vec<usize>> {
    let n = sigma.rank();
    let mut seen = vec![false; n + 1];
    let mut out = Vec::new();
    for start in 1..=n {
        if seen[start] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            orbit.push(cur);
            cur = sigma.image(cur);
        }
        out.push(orbit);
    }
    out
}

/// General construction for any permutation class: the two constraint
/// lattice vectors are given by integer coefficient vectors `u`, `v` on the
/// `h`-basis (`r = sum u_k h_k`, `s = sum v_k h_k`). A solution of
/// `(1 - sigma)(alphabar - Q) = b s - r/b` exists exactly when every orbit
/// of `sigma` has the same average of `u` and of `v`; it is then unique up
/// to one continuous direction per orbit (the sum of that orbit's `h`
/// vectors), which enters both momenta identically. The continuous
/// directions are attached as named parameters `t1, t2, ...` in orbit order.
pub fn make_field_sln(sigma: &WeylElement, u: &[i64], v: &[i64]) -> Result<FieldLabel> {
    let n = sigma.rank();
    if u.len() != n || v.len() != n {
        return Err(TodaError::RankMismatch { expected: n, got: u.len().min(v.len()) });
    }
    let mean = |w: &[i64]| rat(w.iter().sum::<i64>(), n as i64);
    let (ubar, vbar) = (mean(u), mean(v));
    let orbit_list = orbits(sigma);
    for orbit in &orbit_list {
        let len = rat(orbit.len() as i64, 1);
        let su = rat(orbit.iter().map(|&k| u[k - 1]).sum::<i64>(), 1);
        let sv = rat(orbit.iter().map(|&k| v[k - 1]).sum::<i64>(), 1);
        if su != ubar * len || sv != vbar * len {
            return Err(TodaError::ConstraintViolation(format!(
                "orbit {orbit:?} carries averages ({}, {}); all orbits must match the global ({ubar}, {vbar})",
                su / len,
                sv / len
            )));
        }
    }
    // Telescope y[sigma(k)] = y[k] + w[sigma(k)] around each orbit, where
    // w_k = b (v_k - vbar) - (u_k - ubar)/b has zero orbit sums.
    let w = |k: usize| CoeffB::new(Rat::zero(), rat(v[k - 1], 1) - vbar, ubar - rat(u[k - 1], 1));
    let mut y = vec![CoeffB::zero(); n + 1];
    for orbit in &orbit_list {
        for pair in orbit.windows(2) {
            y[pair[1]] = y[pair[0]] + w(pair[1]);
        }
        debug_assert!((y[*orbit.last().unwrap()] + w(orbit[0]) - y[orbit[0]]).is_zero());
    }
    let abar_coords: Vec<CoeffB> = (1..n).map(|i| y[i] - y[i + 1]).collect();
    let q = Charge::background(n);
    let mut alphabar = q.add(&Charge::new(n, abar_coords)?);
    for (idx, orbit) in orbit_list.iter().enumerate() {
        let mut dir = Charge::zero(n);
        for &k in orbit {
            dir = dir.add(&Charge::h(n, k)?);
        }
        alphabar = alphabar.with_cont(&format!("t{}", idx + 1), dir.coords().to_vec())?;
    }
    // alpha = alphabar + r/b, with identical continuous content.
    let mut r_over_b = Charge::zero(n);
    for k in 1..=n {
        r_over_b = r_over_b.add(&Charge::h(n, k)?.scale_coeffb(CoeffB::over_b_unit(rat(u[k - 1], 1)))?);
    }
    let alpha = alphabar.add(&r_over_b);
    FieldLabel::new(alpha, alphabar, sigma.clone())
}

fn closed_difference(d: Charge, what: &str) -> Result<Charge> {
    if !d.is_closed() {
        return Err(TodaError::ConstraintViolation(format!(
            "{what} retains continuous directions"
        )));
    }
    Ok(d)
}

/// Exact monodromy exponents `eta = b h_1 . (alpha - alphabar)` and
/// `etahat = -(1/b) h_1 . (alpha - sigma * alphabar)`, reduced mod 1.
pub fn monodromy_charges(f: &FieldLabel) -> Result<MonodromyCharge> {
    if !verify_constraints(f) {
        return Err(TodaError::ConstraintViolation(
            "momenta violate the field lattice constraints".into(),
        ));
    }
    let n = f.rank();
    let h1 = Charge::h(n, 1)?;
    let d1 = closed_difference(f.alpha.sub(&f.alphabar), "alpha - alphabar")?;
    let d2 = closed_difference(
        f.alpha.sub(&f.sigma.star_act(&f.alphabar)),
        "alpha - sigma * alphabar",
    )?;
    let p1 = d1.dot_exact_linear(&h1)?;
    let p2 = d2.dot_exact_linear(&h1)?;
    // d1 is pure 1/b and d2 pure b, so multiplying by b (resp. 1/b) leaves
    // a plain rational.
    debug_assert!(p1.u.is_zero() && p1.v.is_zero());
    debug_assert!(p2.u.is_zero() && p2.w.is_zero());
    Ok(MonodromyCharge { eta: rat_fract(p1.w), etahat: rat_fract(-p2.v) })
}

/// Exact integrality tests on the summed monodromy exponents of three
/// fields: the first entry gates OPEs with `b`-shifted degenerate momenta,
/// the second the `1/b`-shifted ones.
pub fn neutrality(f1: &FieldLabel, f2: &FieldLabel, f3: &FieldLabel) -> Result<(bool, bool)> {
    let mut eta = Rat::zero();
    let mut etahat = Rat::zero();
    for f in [f1, f2, f3] {
        let m = monodromy_charges(f)?;
        eta += m.eta;
        etahat += m.etahat;
    }
    Ok((rat_is_integer(&eta), rat_is_integer(&etahat)))
}

/// Fusion with a fully degenerate field: `n` output labels. The holomorphic
/// momentum of channel `j` shifts along `h_{sigma(j)}` for the `1/b`-scaled
/// labels and along `h_j` for the `b`-scaled ones; the antiholomorphic
/// momentum always shifts along `h_j`. The permutation class is inherited.
pub fn fuse_nonscalar_degenerate(
    f: &FieldLabel,
    label: DegenerateLabel,
) -> Result<Vec<FieldLabel>> {
    let n = f.rank();
    for (alpha, side) in [(&f.alpha, "alpha"), (&f.alphabar, "alphabar")] {
        if let Genericity::NotGeneric { witness } = is_generic(alpha)? {
            return Err(TodaError::NonGeneric { witness: format!("{side}: {witness}") });
        }
    }
    let twisted = matches!(
        label,
        DegenerateLabel::MinusOmega1OverB | DegenerateLabel::MinusOmegaLastOverB
    );
    (1..=n)
        .map(|j| {
            let hol_j = if twisted { f.sigma.image(j) } else { j };
            let alpha = f.alpha.add(&label.shift(n, hol_j)?);
            let alphabar = f.alphabar.add(&label.shift(n, j)?);
            FieldLabel::new(alpha, alphabar, f.sigma.clone())
        })
        .collect()
}

/// Exact test of the semi-degenerate pairing constraint
/// `kappa - kappabar in Z/b`.
pub fn semideg_nonscalar_check(kappa: &CoeffB, kappabar: &CoeffB) -> bool {
    (*kappa - *kappabar).in_z_over_b()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Bindings;
    use rand::rngs::StdRng;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn small_rat(rng: &mut StdRng) -> Rat {
        rat(rng.gen_range(-300..300), rng.gen_range(89..199))
    }

    fn random_closed_charge(rng: &mut StdRng, n: usize) -> Charge {
        let coords: Vec<Rat> = (0..n - 1).map(|_| small_rat(rng)).collect();
        Charge::from_rational_coords(n, &coords).unwrap()
    }

    fn random_permutation(rng: &mut StdRng, n: usize) -> WeylElement {
        let mut images: Vec<usize> = (1..=n).collect();
        images.shuffle(rng);
        WeylElement::from_images(&images).unwrap()
    }

    fn random_field(rng: &mut StdRng, n: usize) -> FieldLabel {
        let sigma = random_permutation(rng, n);
        // Integer h-coefficients with equal orbit averages: zero-sum within
        // each orbit plus a global integer shift.
        let mut u = vec![0i64; n];
        let mut v = vec![0i64; n];
        for orbit in orbits(&sigma) {
            let mut su = 0;
            let mut sv = 0;
            for &k in &orbit[1..] {
                u[k - 1] = rng.gen_range(-3..=3);
                v[k - 1] = rng.gen_range(-3..=3);
                su += u[k - 1];
                sv += v[k - 1];
            }
            u[orbit[0] - 1] = -su;
            v[orbit[0] - 1] = -sv;
        }
        let shift = rng.gen_range(-2..=2);
        for x in u.iter_mut().chain(v.iter_mut()) {
            *x += shift;
        }
        make_field_sln(&sigma, &u, &v).unwrap()
    }

    fn bind_all(f: &FieldLabel, rng: &mut StdRng) -> (FieldLabel, Bindings) {
        // Bind every continuous parameter to a random rational so numeric
        // evaluation needs no runtime bindings.
        let mut alpha = f.alpha.clone();
        let mut alphabar = f.alphabar.clone();
        for p in f.alpha.cont_params().to_vec() {
            let val = small_rat(rng);
            alpha = alpha.bind_rational(&p.name, val).unwrap();
            alphabar = alphabar.bind_rational(&p.name, val).unwrap();
        }
        let bound = FieldLabel::new(alpha, alphabar, f.sigma.clone()).unwrap();
        (bound, Bindings::empty())
    }

    #[test]
    fn scalar_fields_satisfy_constraints_trivially() {
        let mut rng = StdRng::seed_from_u64(2);
        for n in [2usize, 3, 4] {
            let f = make_scalar(random_closed_charge(&mut rng, n)).unwrap();
            assert!(f.is_scalar());
            assert!(verify_constraints(&f));
            let m = monodromy_charges(&f).unwrap();
            assert!(m.eta.is_zero() && m.etahat.is_zero());
        }
    }

    #[test]
    fn irrational_mixture_fails_constraints() {
        let alpha = Charge::from_rational_coords(3, &[rat(3, 10), rat(1, 7)]).unwrap();
        let f = FieldLabel::new(
            alpha.clone(),
            alpha.add(&Charge::omega(3, 1).unwrap().scale(rat(3, 10))),
            WeylElement::identity(3),
        )
        .unwrap();
        assert!(!verify_constraints(&f));
        assert!(monodromy_charges(&f).is_err());
    }

    #[test]
    fn rank_one_construction_matches_closed_form() {
        let f = make_field_sl2(rat(1, 2), rat(1, 2)).unwrap();
        // (1 - r)/b - (1 - s) b with r = s = 1/2.
        assert_eq!(f.alpha.coords()[0], CoeffB::new(rat(0, 1), rat(-1, 2), rat(1, 2)));
        assert_eq!(f.alphabar.coords()[0], CoeffB::new(rat(0, 1), rat(-1, 2), rat(3, 2)));
        assert!(verify_constraints(&f));
        let zero = make_field_sl2(rat(0, 1), rat(0, 1)).unwrap();
        assert_eq!(zero.alpha, zero.alphabar);
        assert!(make_field_sl2(rat(1, 3), rat(0, 1)).is_err());
    }

    #[test]
    fn rank_one_spin_follows_the_index_product() {
        // Numeric oracle: the spin Delta - Delta_bar evaluates to -r s.
        let p = TodaParams::new(2, 0.81).unwrap();
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..20 {
            let r = rat(rng.gen_range(-6..=6), 2);
            let s = rat(rng.gen_range(-6..=6), 2);
            let f = make_field_sl2(r, s).unwrap();
            assert!(verify_constraints(&f));
            let spin = f.spin(&p, &Bindings::empty()).unwrap();
            let expect = -crate::exact::rat_f64(r * s);
            assert!((spin - expect).abs() < 1e-12, "(r,s)=({r},{s}): {spin} vs {expect}");
        }
    }

    #[test]
    fn rank_one_monodromy_and_nongeneric_catalogue() {
        let f = make_field_sl2(rat(1, 2), rat(1, 2)).unwrap();
        let m = monodromy_charges(&f).unwrap();
        assert_eq!(m.eta, rat(1, 2));
        // Integer-index rows on either axis are excluded momenta.
        for k in [1i64, 2, 3] {
            let row = make_field_sl2(rat(k, 1), rat(0, 1)).unwrap();
            assert!(matches!(is_generic(&row.alpha).unwrap(), Genericity::NotGeneric { .. }));
            let col = make_field_sl2(rat(0, 1), rat(k, 1)).unwrap();
            assert!(matches!(is_generic(&col.alpha).unwrap(), Genericity::NotGeneric { .. }));
        }
        assert!(is_generic(&f.alpha).unwrap().is_generic());
    }

    #[test]
    fn rank_two_cyclic_family_verifies_exactly() {
        let f = make_field_sl3(&Sl3Data::Cyclic {
            n1: rat(1, 3),
            n2: rat(1, 3),
            m1: rat(2, 3),
            m2: rat(2, 3),
        })
        .unwrap();
        assert!(verify_constraints(&f));
        let m = monodromy_charges(&f).unwrap();
        assert!((m.eta * rat(3, 1)).is_integer());
        assert!((m.etahat * rat(3, 1)).is_integer());
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..20 {
            let n1 = rat(rng.gen_range(-9..9), 3);
            let m1 = rat(rng.gen_range(-9..9), 3);
            let f = make_field_sl3(&Sl3Data::Cyclic {
                n1,
                n2: n1 + rat(rng.gen_range(-2..=2), 1),
                m1,
                m2: m1 + rat(rng.gen_range(-2..=2), 1),
            })
            .unwrap();
            assert!(verify_constraints(&f));
        }
        // broken integrality between the two rows
        assert!(make_field_sl3(&Sl3Data::Cyclic {
            n1: rat(1, 3),
            n2: rat(2, 3),
            m1: rat(0, 1),
            m2: rat(0, 1),
        })
        .is_err());
    }

    #[test]
    fn rank_two_cyclic_agrees_with_general_solver() {
        // The 3-cycle leaves no continuous freedom, so the closed form and
        // the telescoping solver must produce identical momenta when fed
        // the same two lattice vectors.
        let (n1, n2, m1, m2) = (rat(4, 3), rat(1, 3), rat(2, 3), rat(-1, 3));
        let f = make_field_sl3(&Sl3Data::Cyclic { n1, n2, m1, m2 }).unwrap();
        let sigma = WeylElement::cycle(3, &[1, 2, 3]).unwrap();
        let to_h = |c: &Charge| -> Vec<i64> {
            // integer h-coefficients of a weight vector, last entry zero
            let mut y = [Rat::zero(); 3];
            let mut acc = Rat::zero();
            for k in (0..2).rev() {
                acc += c.coords()[k].u;
                y[k] = acc;
            }
            y.iter().map(|r| {
                assert!(r.is_integer());
                r.numer() / r.denom()
            }).collect()
        };
        let nvec = Charge::from_rational_coords(3, &[n1, n2]).unwrap();
        let mvec = Charge::from_rational_coords(3, &[m1, m2]).unwrap();
        let r_lat = nvec.sub(&sigma.act(&nvec));
        let s_lat = mvec.sub(&sigma.act(&mvec));
        let r_exact = Charge::new(3, r_lat.coords().to_vec()).unwrap();
        let s_exact = Charge::new(3, s_lat.coords().to_vec()).unwrap();
        let g = make_field_sln(&sigma, &to_h(&r_exact), &to_h(&s_exact)).unwrap();
        assert!(g.alpha.is_closed(), "full cycle leaves no continuous direction");
        assert_eq!(f.alpha, g.alpha);
        assert_eq!(f.alphabar, g.alphabar);
    }

    #[test]
    fn rank_two_transposition_projects_onto_the_shared_root() {
        let f = make_field_sl3(&Sl3Data::Transposition { r: 1, s: 2, beta: rat(11, 25) })
            .unwrap();
        assert!(verify_constraints(&f));
        // alpha - alphabar = -r e_1 / b exactly
        let d = f.alpha.sub(&f.alphabar);
        let e1_over_b = Charge::simple_root(3, 1)
            .unwrap()
            .scale_coeffb(CoeffB::over_b_unit(rat(-1, 1)))
            .unwrap();
        assert_eq!(d, e1_over_b);
        // half-integer indices do not close on the lattices here
        let probe = |r: Rat, s: Rat| {
            let q = Charge::background(3);
            let e1 = Charge::simple_root(3, 1).unwrap();
            let half = rat(1, 2);
            let hol = e1
                .scale_coeffb(CoeffB::new(Rat::zero(), half * s, -half * r))
                .unwrap();
            let antihol = e1
                .scale_coeffb(CoeffB::new(Rat::zero(), half * s, half * r))
                .unwrap();
            FieldLabel::new(
                q.add(&hol),
                q.add(&antihol),
                WeylElement::transposition(3, 1, 2).unwrap(),
            )
            .unwrap()
        };
        assert!(verify_constraints(&probe(rat(2, 1), rat(4, 1))));
        assert!(
            !verify_constraints(&probe(rat(1, 2), rat(4, 1))),
            "half-index along e_1/2 escapes R*"
        );
        assert!(!verify_constraints(&probe(rat(2, 1), rat(3, 2))));
    }

    #[test]
    fn rank_two_starred_rows_are_nongeneric() {
        let mut rng = StdRng::seed_from_u64(23);
        for k in [1i64, 2] {
            let star = (small_rat(&mut rng), small_rat(&mut rng));
            let patterns = [
                [(rat(0, 1), rat(k, 1)), star],
                [(rat(k, 1), rat(0, 1)), star],
                [star, (rat(0, 1), rat(k, 1))],
                [star, (rat(k, 1), rat(0, 1))],
            ];
            for rows in patterns {
                let alpha = kac_charge(3, &rows).unwrap();
                assert!(
                    matches!(is_generic(&alpha).unwrap(), Genericity::NotGeneric { .. }),
                    "rows {rows:?} should be excluded"
                );
            }
        }
    }

    #[test]
    fn general_solver_covers_fixed_points_and_paired_cycles() {
        // one 2-cycle plus two fixed points: continuous directions remain
        let sigma = WeylElement::transposition(4, 1, 2).unwrap();
        let f = make_field_sln(&sigma, &[1, -1, 0, 0], &[2, -2, 0, 0]).unwrap();
        assert!(verify_constraints(&f));
        assert!(!f.alpha.is_closed());
        assert_eq!(f.alpha.cont_params().len(), 3);
        // two 2-cycles with a half-integer global average: solvable even
        // though no per-orbit zero-sum integer representative exists
        let pair = WeylElement::from_images(&[2, 1, 4, 3]).unwrap();
        let g = make_field_sln(&pair, &[1, 0, 1, 0], &[0, 0, 0, 0]).unwrap();
        assert!(verify_constraints(&g));
        // mismatched orbit averages are rejected
        assert!(make_field_sln(&pair, &[1, 0, 0, 0], &[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn constraints_hold_with_continuous_directions_unbound() {
        let mut rng = StdRng::seed_from_u64(31);
        for n in [2usize, 3, 4] {
            for _ in 0..10 {
                let f = random_field(&mut rng, n);
                assert!(verify_constraints(&f), "n = {n}");
            }
        }
    }

    #[test]
    fn monodromy_lattice_and_conjugation_invariance() {
        let mut rng = StdRng::seed_from_u64(37);
        for n in [2usize, 3, 4] {
            for _ in 0..34 {
                let f = random_field(&mut rng, n);
                let m = monodromy_charges(&f).unwrap();
                assert!((m.eta * rat(n as i64, 1)).is_integer(), "eta = {}", m.eta);
                assert!((m.etahat * rat(n as i64, 1)).is_integer());
                let mu = random_permutation(&mut rng, n);
                let g = f.conjugate_by(&mu).unwrap();
                assert!(verify_constraints(&g));
                assert_eq!(g.sigma.cycle_type(), f.sigma.cycle_type());
                assert_eq!(monodromy_charges(&g).unwrap(), m);
            }
        }
    }

    #[test]
    fn conjugation_preserves_weights() {
        let p = TodaParams::new(3, 0.87).unwrap();
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..10 {
            let raw = random_field(&mut rng, 3);
            let (f, bindings) = bind_all(&raw, &mut rng);
            let mu = random_permutation(&mut rng, 3);
            let g = f.conjugate_by(&mu).unwrap();
            let df = delta(&f.alpha, &p, &bindings).unwrap();
            let dg = delta(&g.alpha, &p, &bindings).unwrap();
            assert!((df - dg).abs() < 1e-12 * df.abs().max(1.0));
            let dbf = delta(&f.alphabar, &p, &bindings).unwrap();
            let dbg = delta(&g.alphabar, &p, &bindings).unwrap();
            assert!((dbf - dbg).abs() < 1e-12 * dbf.abs().max(1.0));
        }
    }

    #[test]
    fn fusion_outputs_stay_on_the_lattices() {
        let f = make_field_sl3(&Sl3Data::Transposition { r: 2, s: 1, beta: rat(3, 7) })
            .unwrap();
        for label in DegenerateLabel::ALL {
            let outs = fuse_nonscalar_degenerate(&f, label).unwrap();
            assert_eq!(outs.len(), 3);
            for out in &outs {
                assert!(verify_constraints(out), "label {label:?}");
                assert_eq!(out.sigma.cycle_type(), f.sigma.cycle_type());
            }
        }
        // holomorphic 1/b shifts land on the permuted direction
        let outs = fuse_nonscalar_degenerate(&f, DegenerateLabel::MinusOmega1OverB).unwrap();
        for (j, out) in outs.iter().enumerate() {
            let expect = Charge::h(3, f.sigma.image(j + 1))
                .unwrap()
                .scale_coeffb(CoeffB::over_b_unit(rat(-1, 1)))
                .unwrap();
            assert_eq!(out.alpha.sub(&f.alpha), expect);
        }
    }

    #[test]
    fn fusion_commutes_with_duality() {
        let f = make_field_sl3(&Sl3Data::Transposition { r: 1, s: 1, beta: rat(5, 9) })
            .unwrap();
        for label in DegenerateLabel::ALL {
            let lhs = fuse_nonscalar_degenerate(&f.dual().unwrap(), label).unwrap();
            let rhs: Vec<FieldLabel> = fuse_nonscalar_degenerate(&f, label.dual())
                .unwrap()
                .iter()
                .map(|g| g.dual().unwrap())
                .collect();
            for item in &lhs {
                assert!(
                    rhs.iter()
                        .any(|g| g.alpha == item.alpha && g.alphabar == item.alphabar),
                    "label {label:?}: output missing from the dual side"
                );
            }
        }
    }

    #[test]
    fn fusion_rejects_excluded_momenta() {
        let f = make_field_sl2(rat(1, 1), rat(0, 1)).unwrap();
        assert!(matches!(
            fuse_nonscalar_degenerate(&f, DegenerateLabel::BOmega1),
            Err(TodaError::NonGeneric { .. })
        ));
    }

    #[test]
    fn neutrality_sums_monodromies() {
        let mut rng = StdRng::seed_from_u64(53);
        let s1 = make_scalar(random_closed_charge(&mut rng, 3)).unwrap();
        let s2 = make_scalar(random_closed_charge(&mut rng, 3)).unwrap();
        let s3 = make_scalar(random_closed_charge(&mut rng, 3)).unwrap();
        assert_eq!(neutrality(&s1, &s2, &s3).unwrap(), (true, true));
        let f = make_field_sl3(&Sl3Data::Cyclic {
            n1: rat(1, 3),
            n2: rat(1, 3),
            m1: rat(2, 3),
            m2: rat(2, 3),
        })
        .unwrap();
        assert_eq!(neutrality(&f, &f.dual().unwrap(), &s1).unwrap(), (true, true));
        let m = monodromy_charges(&f).unwrap();
        if !m.eta.is_zero() {
            let (ok, _) = neutrality(&f, &f, &s1).unwrap();
            assert!(!ok, "two copies of eta = {} cannot cancel", m.eta);
        }
    }

    #[test]
    fn dual_negates_monodromy() {
        let mut rng = StdRng::seed_from_u64(59);
        for n in [2usize, 3, 4] {
            let f = random_field(&mut rng, n);
            let m = monodromy_charges(&f).unwrap();
            let md = monodromy_charges(&f.dual().unwrap()).unwrap();
            assert_eq!(rat_fract(m.eta + md.eta), Rat::zero());
            assert_eq!(rat_fract(m.etahat + md.etahat), Rat::zero());
        }
    }

    #[test]
    fn semidegenerate_pairing_gate() {
        let kappa = CoeffB::new(rat(2, 5), rat(1, 3), rat(1, 2));
        assert!(semideg_nonscalar_check(&kappa, &kappa));
        let shifted = kappa + CoeffB::over_b_unit(rat(2, 1));
        assert!(semideg_nonscalar_check(&shifted, &kappa));
        let wrong = kappa + CoeffB::times_b_unit(rat(1, 1));
        assert!(!semideg_nonscalar_check(&wrong, &kappa));
        let frac = kappa + CoeffB::over_b_unit(rat(1, 2));
        assert!(!semideg_nonscalar_check(&frac, &kappa));
    }
}
