//! Root and weight lattice of sl(n), Weyl group action, exact charges.
//!
//! Conventions: `h_1 .. h_n` are the weights of the fundamental
//! representation with `h_i . h_j = delta_ij - 1/n`, simple roots
//! `e_i = h_i - h_{i+1}`, fundamental weights `omega_i` with
//! `omega_i . e_j = delta_ij`, and `rho` the sum of the fundamental
//! weights. Charges are stored by their coordinates in the omega basis;
//! the Gram matrix in that basis is `omega_i . omega_j = min(i,j) - ij/n`
//! and is the single source of truth for all pairings. `h_k` is recovered
//! as `omega_k - omega_{k-1}` with `omega_0 = omega_n = 0`.
//!
//! The Weyl group is the symmetric group permuting the `h_i`. Actions,
//! pairings and lattice membership are exact over [`CoeffB`] coordinates.

use crate::error::{Result, TodaError};
use crate::exact::{rat, rat_f64, BExpr, CoeffB, Rat};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Gram matrix entry `omega_i . omega_j` for sl(n), 1-indexed.
pub fn gram(n: usize, i: usize, j: usize) -> Rat {
    let m = i.min(j) as i64;
    rat(m, 1) - rat((i * j) as i64, 1) / rat(n as i64, 1)
}

/// Named continuous direction attached to a charge, e.g. the `beta h_3`
/// line of a transposition-class field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContParam {
    pub name: String,
    pub direction: Vec<CoeffB>,
}

/// Numeric values for continuous parameters, bound at evaluation time.
#[derive(Clone, Debug, Default)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn empty() -> Self {
        Bindings(BTreeMap::new())
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// A Toda momentum: exact coordinates in the omega basis plus optional
/// continuous directions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Charge {
    n: usize,
    omega_coeffs: Vec<CoeffB>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    cont: Vec<ContParam>,
}

impl Charge {
    pub fn new(n: usize, omega_coeffs: Vec<CoeffB>) -> Result<Self> {
        if n < 2 {
            return Err(TodaError::RankTooSmall(n));
        }
        if omega_coeffs.len() != n - 1 {
            return Err(TodaError::CoordLength {
                expected: n - 1,
                got: omega_coeffs.len(),
            });
        }
        Ok(Charge { n, omega_coeffs, cont: Vec::new() })
    }

    pub fn from_rational_coords(n: usize, coords: &[Rat]) -> Result<Self> {
        Charge::new(n, coords.iter().map(|&r| CoeffB::from_rat(r)).collect())
    }

    pub fn zero(n: usize) -> Self {
        Charge {
            n,
            omega_coeffs: vec![CoeffB::zero(); n - 1],
            cont: Vec::new(),
        }
    }

    /// Fundamental weight `omega_i`.
    pub fn omega(n: usize, i: usize) -> Result<Self> {
        if i == 0 || i > n - 1 {
            return Err(TodaError::IndexOutOfRange { index: i, max: n - 1 });
        }
        let mut c = Charge::zero(n);
        c.omega_coeffs[i - 1] = CoeffB::from_rat(Rat::one());
        Ok(c)
    }

    /// Weight `h_k` of the fundamental representation, `k` in `1..=n`.
    pub fn h(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(TodaError::IndexOutOfRange { index: k, max: n });
        }
        let mut c = Charge::zero(n);
        if k < n {
            c.omega_coeffs[k - 1] = CoeffB::from_rat(Rat::one());
        }
        if k >= 2 {
            c.omega_coeffs[k - 2] -= CoeffB::from_rat(Rat::one());
        }
        Ok(c)
    }

    /// Simple root `e_i = h_i - h_{i+1}`.
    pub fn simple_root(n: usize, i: usize) -> Result<Self> {
        if i == 0 || i > n - 1 {
            return Err(TodaError::IndexOutOfRange { index: i, max: n - 1 });
        }
        Ok(Charge::h(n, i)?.sub(&Charge::h(n, i + 1)?))
    }

    /// Weyl vector `rho` (all omega coordinates one).
    pub fn rho(n: usize) -> Self {
        Charge {
            n,
            omega_coeffs: vec![CoeffB::from_rat(Rat::one()); n - 1],
            cont: Vec::new(),
        }
    }

    /// Background charge vector `Q = (1/b - b) rho`, exact in the span.
    pub fn background(n: usize) -> Self {
        let q = CoeffB::new(Rat::zero(), -Rat::one(), Rat::one());
        Charge {
            n,
            omega_coeffs: vec![q; n - 1],
            cont: Vec::new(),
        }
    }

    /// All positive roots `h_i - h_j`, `i < j`, in lexicographic order.
    pub fn positive_roots(n: usize) -> Vec<Charge> {
        let mut out = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                let r = Charge::h(n, i).unwrap().sub(&Charge::h(n, j).unwrap());
                out.push(r);
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[CoeffB] {
        &self.omega_coeffs
    }

    pub fn cont_params(&self) -> &[ContParam] {
        &self.cont
    }

    pub fn is_closed(&self) -> bool {
        self.cont.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.omega_coeffs.iter().all(CoeffB::is_zero) && self.cont.is_empty()
    }

    /// Attach a continuous direction under `name`. Directions under an
    /// existing name accumulate.
    pub fn with_cont(mut self, name: &str, direction: Vec<CoeffB>) -> Result<Self> {
        if direction.len() != self.n - 1 {
            return Err(TodaError::CoordLength {
                expected: self.n - 1,
                got: direction.len(),
            });
        }
        self.merge_cont(name, &direction, Rat::one());
        self.prune_cont();
        Ok(self)
    }

    fn merge_cont(&mut self, name: &str, direction: &[CoeffB], sign: Rat) {
        if let Some(p) = self.cont.iter_mut().find(|p| p.name == name) {
            for (d, s) in p.direction.iter_mut().zip(direction) {
                *d += s.scale(sign);
            }
        } else {
            self.cont.push(ContParam {
                name: name.to_string(),
                direction: direction.iter().map(|d| d.scale(sign)).collect(),
            });
            self.cont.sort_by(|a, b| a.name.cmp(&b.name));
        }
    }

    fn prune_cont(&mut self) {
        self.cont.retain(|p| !p.direction.iter().all(CoeffB::is_zero));
    }

    /// Substitute an exact rational value for a continuous parameter.
    pub fn bind_rational(&self, name: &str, value: Rat) -> Result<Charge> {
        let p = self
            .cont
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| TodaError::UnboundParameter(name.to_string()))?
            .clone();
        let mut out = self.clone();
        out.cont.retain(|q| q.name != name);
        for (c, d) in out.omega_coeffs.iter_mut().zip(&p.direction) {
            *c += d.scale(value);
        }
        Ok(out)
    }

    fn check_rank(&self, other: &Charge) -> Result<()> {
        if self.n != other.n {
            return Err(TodaError::RankMismatch { expected: self.n, got: other.n });
        }
        Ok(())
    }

    pub fn add(&self, other: &Charge) -> Charge {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.omega_coeffs.iter_mut().zip(&other.omega_coeffs) {
            *a += *b;
        }
        for p in &other.cont {
            out.merge_cont(&p.name, &p.direction, Rat::one());
        }
        out.prune_cont();
        out
    }

    pub fn sub(&self, other: &Charge) -> Charge {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.omega_coeffs.iter_mut().zip(&other.omega_coeffs) {
            *a -= *b;
        }
        for p in &other.cont {
            out.merge_cont(&p.name, &p.direction, -Rat::one());
        }
        out.prune_cont();
        out
    }

    pub fn neg(&self) -> Charge {
        Charge::zero(self.n).sub(self)
    }

    pub fn scale(&self, s: Rat) -> Charge {
        let mut out = self.clone();
        for c in out.omega_coeffs.iter_mut() {
            *c = c.scale(s);
        }
        for p in out.cont.iter_mut() {
            for d in p.direction.iter_mut() {
                *d = d.scale(s);
            }
        }
        out.prune_cont();
        out
    }

    /// Scale a charge with purely rational coordinates by a span value,
    /// e.g. `kappa * omega_1` with symbolic `kappa`.
    pub fn scale_coeffb(&self, s: CoeffB) -> Result<Charge> {
        if !self.is_closed() {
            return Err(TodaError::ContinuousCharge);
        }
        let coords = self
            .omega_coeffs
            .iter()
            .map(|c| {
                if c.is_rational() {
                    Ok(s.scale(c.u))
                } else {
                    Err(TodaError::BadConfig(
                        "scale_coeffb requires rational coordinates".into(),
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Charge::new(self.n, coords)
    }

    /// Numeric omega coordinates at coupling `b` with bound parameters.
    pub fn eval(&self, b: f64, bindings: &Bindings) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = self.omega_coeffs.iter().map(|c| c.eval(b)).collect();
        for p in &self.cont {
            let v = bindings
                .get(&p.name)
                .ok_or_else(|| TodaError::UnboundParameter(p.name.clone()))?;
            for (o, d) in out.iter_mut().zip(&p.direction) {
                *o += v * d.eval(b);
            }
        }
        Ok(out)
    }

    /// Invariant pairing, numeric.
    pub fn dot_numeric(&self, other: &Charge, b: f64, bindings: &Bindings) -> Result<f64> {
        self.check_rank(other)?;
        let x = self.eval(b, bindings)?;
        let y = other.eval(b, bindings)?;
        let mut acc = 0.0;
        for i in 1..self.n {
            for j in 1..self.n {
                acc += x[i - 1] * y[j - 1] * rat_f64(gram(self.n, i, j));
            }
        }
        Ok(acc)
    }

    /// Invariant pairing, exact. Both charges must be closed.
    pub fn dot_exact(&self, other: &Charge) -> Result<BExpr> {
        self.check_rank(other)?;
        if !self.is_closed() || !other.is_closed() {
            return Err(TodaError::ContinuousCharge);
        }
        let mut acc = BExpr::zero();
        for i in 1..self.n {
            for j in 1..self.n {
                let g = gram(self.n, i, j);
                let term = self.omega_coeffs[i - 1].mul_coeffb(&other.omega_coeffs[j - 1]);
                acc = acc + term.scale(g);
            }
        }
        Ok(acc)
    }

    /// Exact pairing against a charge with rational coordinates; stays in
    /// the linear span, which is what genericity and monodromy tests need.
    pub fn dot_exact_linear(&self, rational_side: &Charge) -> Result<CoeffB> {
        let be = self.dot_exact(rational_side)?;
        if !be.cm2.is_zero() || !be.c2.is_zero() {
            return Err(TodaError::BadConfig(
                "pairing left the linear span: both sides carry b-content".into(),
            ));
        }
        Ok(CoeffB::new(be.c0, be.c1, be.cm1))
    }

    /// Dual charge `alpha^* = -s0(alpha)`; on omega coordinates this is
    /// coordinate reversal.
    pub fn dual(&self) -> Charge {
        let s0 = WeylElement::longest(self.n);
        s0.act(self).neg()
    }
}

impl fmt::Display for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, c) in self.omega_coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "]")?;
        for p in &self.cont {
            write!(f, " + {}*<dir>", p.name)?;
        }
        Ok(())
    }
}

/// Element of the Weyl group of sl(n), i.e. a permutation of `1..=n`
/// acting by `h_i -> h_{sigma(i)}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeylElement {
    n: usize,
    /// `perm[i]` is the 0-indexed image of `i`.
    perm: Vec<usize>,
}

impl WeylElement {
    /// Build from 1-indexed images: `images[i-1] = sigma(i)`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &im in images {
            if im == 0 || im > n || seen[im - 1] {
                return Err(TodaError::BadPermutation(images.to_vec()));
            }
            seen[im - 1] = true;
        }
        Ok(WeylElement {
            n,
            perm: images.iter().map(|&im| im - 1).collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        WeylElement { n, perm: (0..n).collect() }
    }

    pub fn transposition(n: usize, i: usize, j: usize) -> Result<Self> {
        if i == 0 || j == 0 || i > n || j > n || i == j {
            return Err(TodaError::BadPermutation(vec![i, j]));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(i - 1, j - 1);
        Ok(WeylElement { n, perm })
    }

    /// Simple reflection `s_i`, the transposition `(i, i+1)`.
    pub fn simple(n: usize, i: usize) -> Result<Self> {
        WeylElement::transposition(n, i, i + 1)
    }

    /// Cycle through the 1-indexed entries of `indices` in order.
    pub fn cycle(n: usize, indices: &[usize]) -> Result<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for w in indices.windows(2) {
            if w[0] == 0 || w[0] > n || w[1] == 0 || w[1] > n {
                return Err(TodaError::BadPermutation(indices.to_vec()));
            }
        }
        if indices.len() > 1 {
            for k in 0..indices.len() {
                let from = indices[k] - 1;
                let to = indices[(k + 1) % indices.len()] - 1;
                perm[from] = to;
            }
        }
        let images: Vec<usize> = perm.iter().map(|&p| p + 1).collect();
        WeylElement::from_images(&images)
    }

    /// Longest element, `i -> n + 1 - i`.
    pub fn longest(n: usize) -> Self {
        WeylElement { n, perm: (0..n).rev().collect() }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn image(&self, i: usize) -> usize {
        self.perm[i - 1] + 1
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `self . other`: apply `other` first.
    pub fn compose(&self, other: &WeylElement) -> WeylElement {
        debug_assert_eq!(self.n, other.n);
        WeylElement {
            n: self.n,
            perm: (0..self.n).map(|i| self.perm[other.perm[i]]).collect(),
        }
    }

    pub fn inverse(&self) -> WeylElement {
        let mut perm = vec![0; self.n];
        for (i, &p) in self.perm.iter().enumerate() {
            perm[p] = i;
        }
        WeylElement { n: self.n, perm }
    }

    /// Cycle type as a sorted partition of n (largest first).
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut lens = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cur = self.perm[cur];
                len += 1;
            }
            lens.push(len);
        }
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }

    /// Cycles of length > 1, each rotated to start at its smallest index
    /// (1-indexed), sorted by that index.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cyc.push(cur + 1);
                cur = self.perm[cur];
            }
            if cyc.len() > 1 {
                out.push(cyc);
            }
        }
        out
    }

    /// Fixed points, 1-indexed.
    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.perm[i] == i)
            .map(|i| i + 1)
            .collect()
    }

    fn act_coords(&self, coords: &[CoeffB]) -> Vec<CoeffB> {
        let n = self.n;
        // Lift omega coordinates to h coefficients y_k = sum_{i >= k} x_i
        // (a section of the quotient by the all-ones vector), permute, and
        // project back via x_i = y_i - y_{i+1}.
        let mut y = vec![CoeffB::zero(); n];
        let mut acc = CoeffB::zero();
        for k in (0..n - 1).rev() {
            acc += coords[k];
            y[k] = acc;
        }
        let mut yp = vec![CoeffB::zero(); n];
        for (k, item) in y.iter().enumerate() {
            yp[self.perm[k]] = *item;
        }
        (0..n - 1).map(|i| yp[i] - yp[i + 1]).collect()
    }

    /// Linear Weyl action on a charge (continuous directions transform too).
    pub fn act(&self, charge: &Charge) -> Charge {
        debug_assert_eq!(self.n, charge.n);
        let mut out = charge.clone();
        out.omega_coeffs = self.act_coords(&charge.omega_coeffs);
        for p in out.cont.iter_mut() {
            p.direction = self.act_coords(&p.direction);
        }
        out.prune_cont();
        out
    }

    /// Shifted (star) action `sigma * alpha = Q + sigma(alpha - Q)`.
    pub fn star_act(&self, charge: &Charge) -> Charge {
        let q = Charge::background(self.n);
        q.add(&self.act(&charge.sub(&q)))
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "id");
        }
        for c in cycles {
            write!(f, "(")?;
            for (k, i) in c.iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", i)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Which lattice a membership test runs against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeKind {
    /// Root lattice, integer span of the simple roots.
    Root,
    /// Weight lattice, integer span of the fundamental weights.
    Weight,
}

/// Scale factor applied to the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeScale {
    One,
    B,
    OneOverB,
}

/// A scaled lattice, e.g. the weight lattice over `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub scale: LatticeScale,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, scale: LatticeScale) -> Self {
        LatticeSpec { kind, scale }
    }

    /// Exact membership test. The charge must be closed.
    pub fn contains(&self, v: &Charge) -> Result<bool> {
        if !v.is_closed() {
            return Err(TodaError::ContinuousCharge);
        }
        let n = v.rank();
        // Extract the rational coordinate vector at the requested scale;
        // all other components must vanish.
        let mut coords = Vec::with_capacity(n - 1);
        for c in v.coords() {
            let r = match self.scale {
                LatticeScale::One => {
                    if !c.v.is_zero() || !c.w.is_zero() {
                        return Ok(false);
                    }
                    c.u
                }
                LatticeScale::B => {
                    if !c.u.is_zero() || !c.w.is_zero() {
                        return Ok(false);
                    }
                    c.v
                }
                LatticeScale::OneOverB => {
                    if !c.u.is_zero() || !c.v.is_zero() {
                        return Ok(false);
                    }
                    c.w
                }
            };
            coords.push(r);
        }
        Ok(match self.kind {
            // x in R* iff its omega coordinates (= pairings with the h-basis
            // duals e_i) are integers.
            LatticeKind::Weight => coords.iter().all(|r| r.is_integer()),
            // x in R iff x . omega_i is an integer for every i.
            LatticeKind::Root => (1..n).all(|i| {
                let mut acc = Rat::zero();
                for (jm1, r) in coords.iter().enumerate() {
                    acc += *r * gram(n, jm1 + 1, i);
                }
                acc.is_integer()
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rational_charge(n: usize, rng: &mut StdRng) -> Charge {
        let coords: Vec<Rat> = (0..n - 1)
            .map(|_| rat(rng.gen_range(-20..20), rng.gen_range(1..6)))
            .collect();
        Charge::from_rational_coords(n, &coords).unwrap()
    }

    #[test]
    fn gram_reproduces_h_pairings() {
        for n in 2..=6 {
            for i in 1..=n {
                for j in 1..=n {
                    let d = Charge::h(n, i)
                        .unwrap()
                        .dot_exact(&Charge::h(n, j).unwrap())
                        .unwrap();
                    let expect = if i == j {
                        rat(1, 1) - rat(1, n as i64)
                    } else {
                        -rat(1, n as i64)
                    };
                    assert_eq!(d.as_rational().unwrap(), expect, "n={n} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn cartan_matrix_from_simple_roots() {
        for n in 2..=6 {
            for i in 1..n {
                for j in 1..n {
                    let d = Charge::simple_root(n, i)
                        .unwrap()
                        .dot_exact(&Charge::simple_root(n, j).unwrap())
                        .unwrap()
                        .as_rational()
                        .unwrap();
                    let expect = match (i as i64 - j as i64).abs() {
                        0 => rat(2, 1),
                        1 => rat(-1, 1),
                        _ => rat(0, 1),
                    };
                    assert_eq!(d, expect);
                }
            }
        }
    }

    #[test]
    fn omega_dual_to_simple_roots() {
        for n in 2..=5 {
            for i in 1..n {
                for j in 1..n {
                    let d = Charge::omega(n, i)
                        .unwrap()
                        .dot_exact(&Charge::simple_root(n, j).unwrap())
                        .unwrap()
                        .as_rational()
                        .unwrap();
                    assert_eq!(d, if i == j { rat(1, 1) } else { rat(0, 1) });
                }
            }
        }
    }

    #[test]
    fn rho_norm_squared() {
        // rho . rho = n (n^2 - 1) / 12
        for n in 2..=7 {
            let d = Charge::rho(n).dot_exact(&Charge::rho(n)).unwrap();
            let expect = rat((n * (n * n - 1)) as i64, 12);
            assert_eq!(d.as_rational().unwrap(), expect);
        }
    }

    #[test]
    fn rho_pairs_with_h() {
        // rho . h_j = (n+1)/2 - j
        for n in 2..=6 {
            for j in 1..=n {
                let d = Charge::rho(n)
                    .dot_exact(&Charge::h(n, j).unwrap())
                    .unwrap()
                    .as_rational()
                    .unwrap();
                assert_eq!(d, rat(n as i64 + 1, 2) - rat(j as i64, 1));
            }
        }
    }

    #[test]
    fn weyl_act_matches_reflection_formula() {
        // Oracle: the simple reflection s_i acts by
        // v - (v . e_i) e_i. The permutation implementation must agree.
        let mut rng = StdRng::seed_from_u64(41);
        for n in 2..=6 {
            for i in 1..n {
                let s = WeylElement::simple(n, i).unwrap();
                for _ in 0..8 {
                    let v = rational_charge(n, &mut rng);
                    let e = Charge::simple_root(n, i).unwrap();
                    let coeff = v.dot_exact(&e).unwrap().as_rational().unwrap();
                    let reflected = v.sub(&e.scale(coeff));
                    assert_eq!(s.act(&v), reflected, "n={n} i={i}");
                }
            }
        }
    }

    #[test]
    fn weyl_action_is_homomorphism_and_isometric() {
        let mut rng = StdRng::seed_from_u64(42);
        for n in 2..=5 {
            for _ in 0..10 {
                let imgs1: Vec<usize> = {
                    let mut v: Vec<usize> = (1..=n).collect();
                    for k in (1..v.len()).rev() {
                        let j = rng.gen_range(0..=k);
                        v.swap(k, j);
                    }
                    v
                };
                let sigma = WeylElement::from_images(&imgs1).unwrap();
                let tau = WeylElement::longest(n);
                let v = rational_charge(n, &mut rng);
                let w = rational_charge(n, &mut rng);
                assert_eq!(
                    sigma.compose(&tau).act(&v),
                    sigma.act(&tau.act(&v)),
                    "composition"
                );
                assert_eq!(
                    sigma.act(&v).dot_exact(&sigma.act(&w)).unwrap(),
                    v.dot_exact(&w).unwrap(),
                    "isometry"
                );
                assert_eq!(sigma.inverse().act(&sigma.act(&v)), v, "inverse");
            }
        }
    }

    #[test]
    fn longest_element_permutes_h_basis() {
        for n in 2..=6 {
            let s0 = WeylElement::longest(n);
            for k in 1..=n {
                assert_eq!(
                    s0.act(&Charge::h(n, k).unwrap()),
                    Charge::h(n, n + 1 - k).unwrap()
                );
            }
        }
    }

    #[test]
    fn dual_reverses_omega_coords_and_involutes() {
        let mut rng = StdRng::seed_from_u64(43);
        for n in 2..=6 {
            for i in 1..n {
                assert_eq!(
                    Charge::omega(n, i).unwrap().dual(),
                    Charge::omega(n, n - i).unwrap()
                );
            }
            let v = rational_charge(n, &mut rng);
            assert_eq!(v.dual().dual(), v);
        }
    }

    #[test]
    fn star_action_of_longest_element_hits_reflection_point() {
        // s0 * alpha^* = 2Q - alpha.
        let mut rng = StdRng::seed_from_u64(44);
        for n in 2..=5 {
            let v = rational_charge(n, &mut rng);
            let lhs = WeylElement::longest(n).star_act(&v.dual());
            let rhs = Charge::background(n).scale(rat(2, 1)).sub(&v);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn background_charge_is_self_dual() {
        for n in 2..=6 {
            let q = Charge::background(n);
            assert_eq!(q.dual(), q);
        }
    }

    #[test]
    fn lattice_membership_basic_vectors() {
        let weight = LatticeSpec::new(LatticeKind::Weight, LatticeScale::One);
        let root = LatticeSpec::new(LatticeKind::Root, LatticeScale::One);
        for n in 2..=6 {
            for i in 1..n {
                let e = Charge::simple_root(n, i).unwrap();
                assert!(root.contains(&e).unwrap());
                assert!(weight.contains(&e).unwrap());
                let o = Charge::omega(n, i).unwrap();
                assert!(weight.contains(&o).unwrap());
            }
            for k in 1..=n {
                assert!(weight.contains(&Charge::h(n, k).unwrap()).unwrap());
            }
        }
        // omega_1 is not a root-lattice vector for n = 3.
        assert!(!root.contains(&Charge::omega(3, 1).unwrap()).unwrap());
        // rho is in the root lattice for n = 3 but not n = 4.
        assert!(root.contains(&Charge::rho(3)).unwrap());
        assert!(!root.contains(&Charge::rho(4)).unwrap());
        // Half a simple root is not a weight vector in sl(3).
        let half_e1 = Charge::simple_root(3, 1).unwrap().scale(rat(1, 2));
        assert!(!weight.contains(&half_e1).unwrap());
        // ... but it is in sl(2), where e_1/2 = omega_1.
        let half_e1_sl2 = Charge::simple_root(2, 1).unwrap().scale(rat(1, 2));
        assert!(weight.contains(&half_e1_sl2).unwrap());
    }

    #[test]
    fn lattice_membership_respects_scale() {
        let wb = LatticeSpec::new(LatticeKind::Weight, LatticeScale::B);
        let wob = LatticeSpec::new(LatticeKind::Weight, LatticeScale::OneOverB);
        let n = 3;
        let bh2 = Charge::new(
            n,
            vec![
                CoeffB::times_b_unit(rat(-1, 1)),
                CoeffB::times_b_unit(rat(1, 1)),
            ],
        )
        .unwrap();
        assert!(wb.contains(&bh2).unwrap());
        assert!(!wob.contains(&bh2).unwrap());
        assert!(!wb
            .contains(&Charge::from_rational_coords(n, &[rat(1, 1), rat(0, 1)]).unwrap())
            .unwrap());
        // Zero belongs to every lattice.
        assert!(wb.contains(&Charge::zero(n)).unwrap());
        assert!(wob.contains(&Charge::zero(n)).unwrap());
    }

    #[test]
    fn continuous_parts_cancel_in_differences() {
        let n = 3;
        let dir: Vec<CoeffB> = vec![CoeffB::from_rat(rat(1, 1)), CoeffB::from_rat(rat(1, 1))];
        let a = Charge::zero(n).with_cont("beta", dir.clone()).unwrap();
        let b = Charge::omega(n, 1).unwrap().with_cont("beta", dir).unwrap();
        let d = b.sub(&a);
        assert!(d.is_closed());
        assert_eq!(d, Charge::omega(n, 1).unwrap());
    }

    #[test]
    fn binding_a_parameter_is_exact() {
        let n = 3;
        let h3 = Charge::h(n, 3).unwrap();
        let a = Charge::background(n)
            .with_cont("beta", h3.coords().to_vec())
            .unwrap();
        let bound = a.bind_rational("beta", rat(2, 5)).unwrap();
        assert!(bound.is_closed());
        let expect = Charge::background(n).add(&h3.scale(rat(2, 5)));
        assert_eq!(bound, expect);
    }

    #[test]
    fn eval_requires_bindings() {
        let n = 3;
        let a = Charge::zero(n)
            .with_cont("beta", Charge::h(n, 3).unwrap().coords().to_vec())
            .unwrap();
        assert!(matches!(
            a.eval(0.9, &Bindings::empty()),
            Err(TodaError::UnboundParameter(_))
        ));
        let vals = a.eval(0.9, &Bindings::empty().with("beta", 0.44)).unwrap();
        let direct = Charge::h(n, 3).unwrap().eval(0.9, &Bindings::empty()).unwrap();
        for (v, d) in vals.iter().zip(direct) {
            assert!((v - 0.44 * d).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn weyl_act_preserves_weight_lattice(
            seed in 0u64..500,
            n in 2usize..6,
        ) {
            let mut rng = StdRng::seed_from_u64(seed);
            let coords: Vec<Rat> =
                (0..n - 1).map(|_| rat(rng.gen_range(-6..6), 1)).collect();
            let v = Charge::from_rational_coords(n, &coords).unwrap();
            let mut imgs: Vec<usize> = (1..=n).collect();
            for k in (1..imgs.len()).rev() {
                let j = rng.gen_range(0..=k);
                imgs.swap(k, j);
            }
            let sigma = WeylElement::from_images(&imgs).unwrap();
            let spec = LatticeSpec::new(LatticeKind::Weight, LatticeScale::One);
            prop_assert!(spec.contains(&sigma.act(&v)).unwrap());
        }
    }
}
