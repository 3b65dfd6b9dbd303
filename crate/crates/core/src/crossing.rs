//! Crossing verification: glue holomorphic and antiholomorphic blocks into
//! a candidate four-point function and measure how well the two channel
//! decompositions agree.
//!
//! With `M` the connection matrix of the holomorphic system and `Mbar` its
//! antiholomorphic counterpart, a diagonal near-channel gluing
//! `sum_i X_i f_i(z) fbar_i(z)` re-expands in the far basis with coefficient
//! matrix `M^T X Mbar`. Single-valuedness around the far point demands that
//! this matrix be diagonal again, which pins `X` up to overall scale: column
//! `l` of the inverse connection matrix gives the candidate
//! `X_j = (M^{-1})_{lj} / Mbar_{jl}`, and all columns must agree. The module
//! solves for `X`, measures the column agreement and the sine-ratio identity
//! behind it, and verifies the gluing numerically by transporting the
//! near-channel sum into the far channel's domain.

use std::f64::consts::PI;

use serde::Serialize;

use crate::blocks::{connection_matrix, exponents_from_charges, BlockSystem, ExponentData};
use crate::constants::SemiDegData;
use crate::error::{Result, TodaError};
use crate::fields::FieldLabel;
use crate::kinematics::TodaParams;
use crate::lattice::Bindings;

/// Outcome of a crossing run on one exponent system.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingReport {
    /// Near-channel gluing coefficients, normalized to `x[0] = 1`.
    pub x: Vec<f64>,
    /// Far-channel gluing coefficients: the diagonal of `M^T X Mbar`.
    pub y: Vec<f64>,
    /// Largest off-diagonal entry of `M^T X Mbar`, relative to the largest
    /// diagonal entry.
    pub offdiag_residual: f64,
    /// Largest deviation of the sine-ratio identity over all index choices.
    pub consistency_residual: f64,
    /// Largest relative mismatch between the transported near gluing and
    /// the far gluing over the sample points.
    pub gluing_residual: f64,
    /// Near-domain points where the two gluings were compared.
    pub sample_points: Vec<f64>,
}

/// The antiholomorphic exponent lists, falling back to the holomorphic ones
/// when no independent right-movers were attached (the scalar case).
fn barred_lists(exp: &ExponentData) -> (&[f64], &[f64]) {
    match (&exp.abar, &exp.bbar) {
        (Some(ab), Some(bb)) => (ab.as_slice(), bb.as_slice()),
        _ => (exp.a.as_slice(), exp.b_.as_slice()),
    }
}

fn nearest_int_dist(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Largest distance of `(A_i - Abar_i) + (B_j - Bbar_j)` from the integers,
/// over all index pairs. Zero is necessary for a single-valued gluing to
/// exist; the quantity doubles as an interpretable diagnostic when the
/// column solve disagrees.
pub fn monodromy_defect(exp: &ExponentData) -> f64 {
    let (abar, bbar) = barred_lists(exp);
    let mut worst = 0.0f64;
    for (ai, abi) in exp.a.iter().zip(abar) {
        for (bj, bbj) in exp.b_.iter().zip(bbar) {
            worst = worst.max(nearest_int_dist((ai - abi) + (bj - bbj)));
        }
    }
    worst
}

/// One candidate coefficient vector per far-basis column, each normalized
/// to a unit first entry.
fn x_columns(exp: &ExponentData) -> Result<Vec<Vec<f64>>> {
    let (abar, bbar) = barred_lists(exp);
    let minv = connection_matrix(&exp.b_, &exp.a)?;
    let mbar = connection_matrix(abar, bbar)?;
    let n = exp.n;
    let mut cols = Vec::with_capacity(n);
    for l in 0..n {
        let mut col: Vec<f64> = (0..n).map(|j| minv[l][j] / mbar[j][l]).collect();
        let head = col[0];
        if head == 0.0 || !head.is_finite() {
            return Err(TodaError::BadConfig(format!(
                "gluing column {l} cannot be normalized, leading entry {head}"
            )));
        }
        for v in col.iter_mut() {
            *v /= head;
        }
        cols.push(col);
    }
    Ok(cols)
}

fn column_spread(cols: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for col in &cols[1..] {
        for (a, b) in col.iter().zip(&cols[0]) {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-300));
        }
    }
    worst
}

/// Relative disagreement between the per-column candidate solutions, without
/// gating on it. Useful for quantifying how badly a detuned system fails.
pub fn x_column_spread(exp: &ExponentData) -> Result<f64> {
    Ok(column_spread(&x_columns(exp)?))
}

/// Solve for the near-channel gluing coefficients.
///
/// Every far-basis column must produce the same vector; disagreement beyond
/// `1e-8` relative (or exponent combinations measurably off the integers)
/// means no single-valued gluing exists for these exponents.
pub fn solve_x(exp: &ExponentData) -> Result<Vec<f64>> {
    let defect = monodromy_defect(exp);
    let mut cols = x_columns(exp)?;
    let spread = column_spread(&cols);
    if defect > 1e-8 || spread > 1e-8 {
        return Err(TodaError::NeutralityViolated(format!(
            "gluing columns disagree by {spread:.3e} (monodromy defect {defect:.3e}); \
             no single-valued combination of these blocks exists"
        )));
    }
    Ok(cols.swap_remove(0))
}

fn sine_ratio(exp: &ExponentData, i: usize, j: usize, l: usize) -> f64 {
    let (abar, bbar) = barred_lists(exp);
    let num = (PI * (abar[i] + bbar[l])).sin() * (PI * (exp.a[j] + exp.b_[l])).sin();
    let den = (PI * (exp.a[i] + exp.b_[l])).sin() * (PI * (abar[j] + bbar[l])).sin();
    num / den
}

/// Deviation of the sine-ratio identity: the double ratio
/// `sin pi(Abar_i + Bbar_l) sin pi(A_j + B_l) /
///  [sin pi(A_i + B_l) sin pi(Abar_j + Bbar_l)]`
/// must not depend on the far index, so the value at `l` is compared with
/// the value at `m`.
pub fn consistency_check(
    exp: &ExponentData,
    i: usize,
    j: usize,
    l: usize,
    m: usize,
) -> Result<f64> {
    for idx in [i, j, l, m] {
        if idx >= exp.n {
            return Err(TodaError::IndexOutOfRange { index: idx, max: exp.n - 1 });
        }
    }
    Ok((sine_ratio(exp, i, j, l) - sine_ratio(exp, i, j, m)).abs())
}

fn max_consistency(exp: &ExponentData) -> f64 {
    let n = exp.n;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                for m in (l + 1)..n {
                    worst =
                        worst.max((sine_ratio(exp, i, j, l) - sine_ratio(exp, i, j, m)).abs());
                }
            }
        }
    }
    worst
}

/// Assemble the four-point gluing for a pair of external fields and a
/// semi-degenerate partner, and verify crossing at the given sample points.
///
/// The near-channel sum `sum_i X_i f_i(z) fbar_i(z)` is evaluated from its
/// series at each `z` and transported along the negative real axis to the
/// mirror point `1/z`, where the far-channel sum `sum_k Y_k g_k gbar_k` is
/// evaluated from its own series; the report carries the worst relative
/// mismatch. Sample points must satisfy `-0.9 < z < 0` so that both series
/// stay well inside their convergence domains.
pub fn crossing_residual(
    f1: &FieldLabel,
    f2: &FieldLabel,
    semideg: &SemiDegData,
    params: &TodaParams,
    z_list: &[f64],
) -> Result<CrossingReport> {
    if z_list.is_empty() {
        return Err(TodaError::BadConfig("no sample points given".into()));
    }
    for &z in z_list {
        if !(z < 0.0 && -z < 0.9) {
            return Err(TodaError::OutsideDomain(
                z,
                "sample points must lie in (-0.9, 0)".into(),
            ));
        }
    }
    let bindings = Bindings::empty();
    let exp = exponents_from_charges(
        &f1.alpha,
        &f2.alpha,
        &semideg.kappa,
        semideg.direction,
        params,
        &bindings,
    )?
    .with_bars(&f1.alphabar, &f2.alphabar, &semideg.kappabar, params, &bindings)?;
    let x = solve_x(&exp)?;
    let consistency_residual = max_consistency(&exp);
    let sys = BlockSystem::new(exp)?;
    let bsys = match sys.barred() {
        Some(b) => b?,
        None => unreachable!("bars were attached above"),
    };
    let n = sys.n();
    let mut y = vec![0.0; n];
    let mut offdiag = 0.0f64;
    let mut diag_scale = 0.0f64;
    for (k, yk) in y.iter_mut().enumerate() {
        for l in 0..n {
            let entry: f64 = (0..n).map(|j| sys.m[j][k] * x[j] * bsys.m[j][l]).sum();
            if k == l {
                *yk = entry;
                diag_scale = diag_scale.max(entry.abs());
            } else {
                offdiag = offdiag.max(entry.abs());
            }
        }
    }
    let offdiag_residual = offdiag / diag_scale.max(1e-300);
    let mut gluing_residual = 0.0f64;
    for &z in z_list {
        let zm = 1.0 / z;
        let mut near = 0.0;
        let mut scale = 0.0f64;
        for (i, xi) in x.iter().enumerate() {
            let f = sys.transport(&sys.theta_f(i, z, n)?, z, zm)?[0];
            let fb = bsys.transport(&bsys.theta_f(i, z, n)?, z, zm)?[0];
            let term = xi * f * fb;
            near += term;
            scale = scale.max(term.abs());
        }
        let mut far = 0.0;
        for (k, yk) in y.iter().enumerate() {
            let term = yk * sys.reduced_g(k, zm)? * bsys.reduced_g(k, zm)?;
            far += term;
            scale = scale.max(term.abs());
        }
        gluing_residual = gluing_residual.max((near - far).abs() / scale.max(1e-300));
    }
    Ok(CrossingReport {
        x,
        y,
        offdiag_residual,
        consistency_residual,
        gluing_residual,
        sample_points: z_list.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::SemiDegDirection;
    use crate::constants::scalar_c;
    use crate::exact::{rat, CoeffB, Rat};
    use crate::fields::{make_field_sl2, make_scalar};
    use crate::lattice::Charge;
    use crate::special::{gamma_ratio, UpsilonEvaluator};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn small_rat(rng: &mut StdRng) -> Rat {
        rat(rng.gen_range(-300..300), rng.gen_range(89..199))
    }

    fn random_charge(rng: &mut StdRng, n: usize) -> Charge {
        let coords = (0..n - 1)
            .map(|_| CoeffB::new(small_rat(rng), small_rat(rng), small_rat(rng)))
            .collect();
        Charge::new(n, coords).unwrap()
    }

    fn random_coeff(rng: &mut StdRng) -> CoeffB {
        CoeffB::new(small_rat(rng), small_rat(rng), small_rat(rng))
    }

    fn scalar_exp(
        a1: &Charge,
        a2: &Charge,
        kappa: &CoeffB,
        direction: SemiDegDirection,
        params: &TodaParams,
    ) -> ExponentData {
        let bindings = Bindings::empty();
        exponents_from_charges(a1, a2, kappa, direction, params, &bindings)
            .unwrap()
            .with_bars(a1, a2, kappa, params, &bindings)
            .unwrap()
    }

    fn rel_diff(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    /// The half-integer rank-one field and a neutral semi-degenerate
    /// pairing for it: shifting the right coupling by one unit of `1/b`
    /// compensates the half-unit monodromy of the left/right split.
    fn neutral_spin_setup(rng: &mut StdRng) -> (FieldLabel, FieldLabel, SemiDegData) {
        let f1 = make_field_sl2(rat(1, 2), rat(1, 2)).unwrap();
        let f2 = make_scalar(random_charge(rng, 2)).unwrap();
        let kappa = CoeffB::new(rat(2, 7), rat(1, 5), rat(1, 3));
        let kappabar = CoeffB::new(rat(2, 7), rat(1, 5), rat(-2, 3));
        let semideg =
            SemiDegData { direction: SemiDegDirection::Omega1, kappa, kappabar };
        (f1, f2, semideg)
    }

    #[test]
    fn scalar_gluing_matches_the_gamma_products() {
        let params = TodaParams::new(3, 0.7410926318471).unwrap();
        let mut rng = StdRng::seed_from_u64(501);
        for _ in 0..4 {
            let a1 = random_charge(&mut rng, 3);
            let a2 = random_charge(&mut rng, 3);
            let kappa = random_coeff(&mut rng);
            let exp = scalar_exp(&a1, &a2, &kappa, SemiDegDirection::Omega1, &params);
            let x = solve_x(&exp).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    let mut expect = 1.0;
                    for k in 0..3 {
                        if k != i {
                            expect *= gamma_ratio(exp.a[k] - exp.a[i]).unwrap();
                        }
                        if k != j {
                            expect /= gamma_ratio(exp.a[k] - exp.a[j]).unwrap();
                        }
                        expect *= gamma_ratio(exp.a[i] + exp.b_[k]).unwrap()
                            / gamma_ratio(exp.a[j] + exp.b_[k]).unwrap();
                    }
                    assert!(
                        rel_diff(x[i] / x[j], expect) < 1e-8,
                        "ratio {i}/{j}: {} vs {expect}",
                        x[i] / x[j]
                    );
                }
            }
        }
    }

    #[test]
    fn column_solutions_agree_and_match_a_dense_solve() {
        let params = TodaParams::new(2, 0.8312570918253).unwrap();
        let mut rng = StdRng::seed_from_u64(502);
        for _ in 0..5 {
            let a1 = random_charge(&mut rng, 2);
            let a2 = random_charge(&mut rng, 2);
            let kappa = random_coeff(&mut rng);
            let exp = scalar_exp(&a1, &a2, &kappa, SemiDegDirection::Omega1, &params);
            assert!(x_column_spread(&exp).unwrap() < 1e-8);
            let x = solve_x(&exp).unwrap();
            assert_eq!(x[0], 1.0);
            // Independent solve: least squares on the two off-diagonal
            // entries of the far-basis coefficient matrix, with x[0] pinned.
            let m = connection_matrix(&exp.a, &exp.b_).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for (k, l) in [(0usize, 1usize), (1, 0)] {
                let c = m[0][k] * m[0][l];
                let d = m[1][k] * m[1][l];
                num += c * d;
                den += d * d;
            }
            let dense = -num / den;
            assert!(rel_diff(x[1], dense) < 1e-8, "{} vs {dense}", x[1]);
        }
    }

    #[test]
    fn detuned_antiholomorphic_exponents_are_rejected() {
        let params = TodaParams::new(2, 0.8312570918253).unwrap();
        let mut rng = StdRng::seed_from_u64(503);
        let a1 = random_charge(&mut rng, 2);
        let a2 = random_charge(&mut rng, 2);
        let kappa = random_coeff(&mut rng);
        let mut exp = scalar_exp(&a1, &a2, &kappa, SemiDegDirection::Omega1, &params);
        exp.abar.as_mut().unwrap()[0] += 0.1;
        assert!(monodromy_defect(&exp) > 1e-3);
        assert!(x_column_spread(&exp).unwrap() > 1e-3);
        match solve_x(&exp) {
            Err(TodaError::NeutralityViolated(_)) => {}
            other => panic!("expected a neutrality failure, got {other:?}"),
        }
    }

    #[test]
    fn sine_ratio_identity_holds_only_for_neutral_data() {
        let params = TodaParams::new(2, 0.8312570918253).unwrap();
        let mut rng = StdRng::seed_from_u64(504);
        let a1 = random_charge(&mut rng, 2);
        let a2 = random_charge(&mut rng, 2);
        let kappa = random_coeff(&mut rng);
        let scalar = scalar_exp(&a1, &a2, &kappa, SemiDegDirection::Omega1, &params);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(consistency_check(&scalar, i, j, 0, 1).unwrap(), 0.0);
            }
        }

        let (f1, f2, semideg) = neutral_spin_setup(&mut rng);
        let bindings = Bindings::empty();
        let spin = exponents_from_charges(
            &f1.alpha,
            &f2.alpha,
            &semideg.kappa,
            semideg.direction,
            &params,
            &bindings,
        )
        .unwrap()
        .with_bars(&f1.alphabar, &f2.alphabar, &semideg.kappabar, &params, &bindings)
        .unwrap();
        assert!(monodromy_defect(&spin) < 1e-10);
        for i in 0..2 {
            for j in 0..2 {
                assert!(consistency_check(&spin, i, j, 0, 1).unwrap() < 1e-10);
            }
        }

        let mut bad = spin.clone();
        bad.abar.as_mut().unwrap()[0] += 0.1;
        let worst = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| consistency_check(&bad, i, j, 0, 1).unwrap())
            .fold(0.0f64, f64::max);
        assert!(worst > 1e-3, "perturbation went unnoticed: {worst}");

        assert!(matches!(
            consistency_check(&scalar, 0, 2, 0, 1),
            Err(TodaError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn transported_near_gluing_meets_the_far_gluing() {
        let mut rng = StdRng::seed_from_u64(505);
        let zs = [-0.2, -0.35, -0.5, -0.65, -0.8];
        for (n, b, direction) in [
            (2usize, 0.8312570918253, SemiDegDirection::Omega1),
            (3, 0.7410926318471, SemiDegDirection::OmegaLast),
        ] {
            let params = TodaParams::new(n, b).unwrap();
            let f1 = make_scalar(random_charge(&mut rng, n)).unwrap();
            let f2 = make_scalar(random_charge(&mut rng, n)).unwrap();
            let semideg = SemiDegData::scalar(direction, random_coeff(&mut rng));
            let rep = crossing_residual(&f1, &f2, &semideg, &params, &zs).unwrap();
            assert_eq!(rep.x[0], 1.0);
            assert_eq!(rep.x.len(), n);
            assert_eq!(rep.y.len(), n);
            assert_eq!(rep.sample_points, zs);
            assert_eq!(rep.consistency_residual, 0.0);
            assert!(rep.offdiag_residual < 1e-8, "offdiag {}", rep.offdiag_residual);
            assert!(rep.gluing_residual < 1e-6, "gluing {}", rep.gluing_residual);
        }
    }

    #[test]
    fn spinning_fields_glue_once_the_couplings_are_detuned_by_a_lattice_unit() {
        let params = TodaParams::new(2, 0.8312570918253).unwrap();
        let mut rng = StdRng::seed_from_u64(506);
        let (f1, f2, semideg) = neutral_spin_setup(&mut rng);
        let zs = [-0.25, -0.45, -0.7];
        let rep = crossing_residual(&f1, &f2, &semideg, &params, &zs).unwrap();
        assert!(rep.offdiag_residual < 1e-8, "offdiag {}", rep.offdiag_residual);
        assert!(rep.consistency_residual < 1e-10, "sine {}", rep.consistency_residual);
        assert!(rep.gluing_residual < 1e-6, "gluing {}", rep.gluing_residual);

        // The same field pair with equal couplings on both sides has
        // half-integer monodromy and no single-valued gluing.
        let equal = SemiDegData { kappabar: semideg.kappa, ..semideg };
        match crossing_residual(&f1, &f2, &equal, &params, &zs) {
            Err(TodaError::NeutralityViolated(_)) => {}
            other => panic!("expected a neutrality failure, got {other:?}"),
        }
    }

    #[test]
    fn sample_points_outside_the_near_domain_are_rejected() {
        let params = TodaParams::new(2, 0.8312570918253).unwrap();
        let mut rng = StdRng::seed_from_u64(507);
        let f1 = make_scalar(random_charge(&mut rng, 2)).unwrap();
        let f2 = make_scalar(random_charge(&mut rng, 2)).unwrap();
        let semideg = SemiDegData::scalar(SemiDegDirection::Omega1, random_coeff(&mut rng));
        for bad in [[-0.95], [0.3]] {
            assert!(matches!(
                crossing_residual(&f1, &f2, &semideg, &params, &bad),
                Err(TodaError::OutsideDomain(..))
            ));
        }
        assert!(matches!(
            crossing_residual(&f1, &f2, &semideg, &params, &[]),
            Err(TodaError::BadConfig(..))
        ));
    }

    #[test]
    fn structure_constant_ratios_reproduce_the_gluing_coefficients() {
        let mut rng = StdRng::seed_from_u64(508);
        for (n, b) in [(2usize, 0.8312570918253), (3, 0.7410926318471)] {
            let params = TodaParams::new(n, b).unwrap();
            let ev = UpsilonEvaluator::new(b).unwrap();
            let a1 = random_charge(&mut rng, n);
            let a2 = random_charge(&mut rng, n);
            let kappa = random_coeff(&mut rng);
            let dir = SemiDegDirection::Omega1;
            let exp = scalar_exp(&a1, &a2, &kappa, dir, &params);
            let x = solve_x(&exp).unwrap();
            let bunit = CoeffB::times_b_unit(rat(1, 1));
            let two_q = Charge::background(n).add(&Charge::background(n));
            let bh = |k: usize| {
                Charge::h(n, k).unwrap().scale_coeffb(bunit).unwrap()
            };
            // Vertex factors of the internal channel k: the degenerate
            // three-point constant that creates the shifted momentum, and
            // the constant that closes it on the remaining pair. Square the
            // ratio so that no square-root branch choices enter.
            let squared_vertex = |k: usize| {
                let beta = two_q.sub(&a1).sub(&bh(k));
                let deg = scalar_c(&a1, &beta, &bunit, SemiDegDirection::Omega1, &params, &ev)
                    .unwrap();
                let close = scalar_c(&a1.add(&bh(k)), &a2, &kappa, dir, &params, &ev).unwrap();
                deg.squared.mul(&close.squared)
            };
            for i in 0..n {
                for j in (i + 1)..n {
                    let pred = squared_vertex(i + 1).div(&squared_vertex(j + 1));
                    assert_eq!(pred.order, 0, "ratio {i}{j} carries a zero or pole");
                    assert_eq!(pred.sign, 1, "squared ratio {i}{j} came out negative");
                    let got = (x[i] / x[j]).powi(2);
                    assert!(
                        (pred.log_abs - got.ln()).abs() < 2e-6,
                        "pair {i}{j}: log {} vs {}",
                        pred.log_abs,
                        got.ln()
                    );
                }
            }
        }
    }
}
