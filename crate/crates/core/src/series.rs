//! Truncated multivariate power series, Laurent in z.
//!
//! Monomials are truncated by total degree in the named variables; the z
//! exponent is tracked in half-steps so that odd-dimensional factors like
//! (2 pi z)^{n/2} stay inside the ring. Products discard monomials that fall
//! outside the declared truncation, deterministically.

use std::sync::Arc;

use smallvec::SmallVec;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{rat, Scalar};

/// Variable layout shared by compatible series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarSet {
    pub names: Vec<String>,
    /// Total-degree truncation order (inclusive).
    pub order: u32,
    /// Laurent window in half-steps of z (inclusive): z^{h/2} with h in [z_min_h, z_max_h].
    pub z_min_h: i32,
    pub z_max_h: i32,
}

impl VarSet {
    /// Window given in integer powers of z: [z^{-lo}, z^{+hi}].
    pub fn new(names: Vec<String>, order: u32, z_lo: u32, z_hi: u32) -> Arc<Self> {
        Arc::new(VarSet {
            names,
            order,
            z_min_h: -2 * z_lo as i32,
            z_max_h: 2 * z_hi as i32,
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }
}

pub type Exps = SmallVec<[u16; 6]>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono {
    pub exps: Exps,
    /// z exponent in half-steps.
    pub zh: i32,
}

impl Mono {
    pub fn unit(nvars: usize) -> Self {
        Mono {
            exps: std::iter::repeat(0).take(nvars).collect(),
            zh: 0,
        }
    }

    pub fn total_deg(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let exps = self
            .exps
            .iter()
            .zip(other.exps.iter())
            .map(|(a, b)| a + b)
            .collect();
        Mono {
            exps,
            zh: self.zh + other.zh,
        }
    }
}

/// Coefficient objects a series can carry.
pub trait Coeff: Clone {
    fn cadd(&self, other: &Self) -> Self;
    fn cneg(&self) -> Self;
    fn cscale(&self, s: &Scalar) -> Self;
    fn cis_zero(&self) -> bool;
    fn cmax_abs(&self) -> f64;
}

impl Coeff for Scalar {
    fn cadd(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn cneg(&self) -> Self {
        self.neg()
    }
    fn cscale(&self, s: &Scalar) -> Self {
        self.mul(s)
    }
    fn cis_zero(&self) -> bool {
        self.is_zero()
    }
    fn cmax_abs(&self) -> f64 {
        self.abs()
    }
}

impl Coeff for Vec<Scalar> {
    fn cadd(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        self.iter().zip(other.iter()).map(|(a, b)| a.add(b)).collect()
    }
    fn cneg(&self) -> Self {
        self.iter().map(|a| a.neg()).collect()
    }
    fn cscale(&self, s: &Scalar) -> Self {
        self.iter().map(|a| a.mul(s)).collect()
    }
    fn cis_zero(&self) -> bool {
        self.iter().all(|a| a.is_zero())
    }
    fn cmax_abs(&self) -> f64 {
        self.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

impl Coeff for Mat {
    fn cadd(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn cneg(&self) -> Self {
        self.scale(&Scalar::from_int(-1))
    }
    fn cscale(&self, s: &Scalar) -> Self {
        self.scale(s)
    }
    fn cis_zero(&self) -> bool {
        self.is_zero_within(0.0)
    }
    fn cmax_abs(&self) -> f64 {
        self.max_abs()
    }
}

#[derive(Clone, Debug)]
pub struct Series<T: Coeff> {
    pub vars: Arc<VarSet>,
    pub terms: BTreeMap<Mono, T>,
}

pub type SSeries = Series<Scalar>;
pub type VSeries = Series<Vec<Scalar>>;
pub type MSeries = Series<Mat>;

impl<T: Coeff> Series<T> {
    pub fn zero(vars: Arc<VarSet>) -> Self {
        Series {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: Arc<VarSet>, c: T) -> Self {
        let mut s = Series::zero(vars);
        let mono = Mono::unit(s.vars.nvars());
        s.add_term(mono, c);
        s
    }

    fn in_window(&self, m: &Mono) -> bool {
        m.total_deg() <= self.vars.order && m.zh >= self.vars.z_min_h && m.zh <= self.vars.z_max_h
    }

    pub fn add_term(&mut self, mono: Mono, coeff: T) {
        assert_eq!(mono.exps.len(), self.vars.nvars(), "monomial arity");
        if coeff.cis_zero() || !self.in_window(&mono) {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().cadd(&coeff);
                if s.cis_zero() {
                    e.remove();
                } else {
                    e.insert(s);
                }
            }
        }
    }

    pub fn coeff(&self, mono: &Mono) -> Option<&T> {
        self.terms.get(mono)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.vars, other.vars, "incompatible variable sets");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Series {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.cneg())).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        if s.is_zero() {
            return Series::zero(self.vars.clone());
        }
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.cscale(s));
        }
        out
    }

    /// Multiply by z^{h/2} (shifting out-of-window terms away).
    pub fn shift_z(&self, h: i32) -> Self {
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            m2.zh += h;
            out.add_term(m2, c.clone());
        }
        out
    }

    /// Ring map z -> e^{pi i} z with the principal branch: z^{h/2} picks up i^h.
    pub fn rotate_z_pi(&self) -> Self {
        let i = Scalar::i();
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.cscale(&i.pow_i(m.zh as i64)));
        }
        out
    }

    /// Ring map z -> -z (identical to rotate_z_pi under the fixed branch).
    pub fn negate_z(&self) -> Self {
        self.rotate_z_pi()
    }

    /// Split into (strictly negative z-powers, the rest). The sum is exact.
    pub fn laurent_split(&self) -> (Self, Self) {
        let mut minus = Series::zero(self.vars.clone());
        let mut plus = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            if m.zh < 0 {
                minus.add_term(m.clone(), c.clone());
            } else {
                plus.add_term(m.clone(), c.clone());
            }
        }
        (minus, plus)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.cmax_abs()).fold(0.0, f64::max)
    }

    /// Derivative in variable `i` (ordinary d/dt).
    pub fn d_dt(&self, i: usize) -> Self {
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            let e = m.exps[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.exps[i] = e - 1;
            out.add_term(m2, c.cscale(&Scalar::from_int(e as i64)));
        }
        out
    }

    /// Logarithmic derivative q d/dq in variable `i` (exponent weighting).
    pub fn q_d_dq(&self, i: usize) -> Self {
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            let e = m.exps[i];
            if e == 0 {
                continue;
            }
            out.add_term(m.clone(), c.cscale(&Scalar::from_int(e as i64)));
        }
        out
    }

    /// Evaluate all named variables at zero, keeping z content.
    pub fn const_in_vars(&self) -> Self {
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            if m.total_deg() == 0 {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Map coefficients.
    pub fn map<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Series<U> {
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }
}

fn mul_generic<A: Coeff, B: Coeff, C: Coeff>(
    a: &Series<A>,
    b: &Series<B>,
    mul: impl Fn(&A, &B) -> C,
) -> Series<C> {
    assert_eq!(a.vars, b.vars, "incompatible variable sets");
    let mut out = Series::zero(a.vars.clone());
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            let m = ma.mul(mb);
            if !out.in_window(&m) {
                continue;
            }
            out.add_term(m, mul(ca, cb));
        }
    }
    out
}

impl Series<Scalar> {
    pub fn one(vars: Arc<VarSet>) -> Self {
        Series::constant(vars, Scalar::one())
    }

    pub fn var(vars: Arc<VarSet>, name: &str) -> Self {
        let idx = vars.index_of(name).expect("unknown variable");
        let mut m = Mono::unit(vars.nvars());
        m.exps[idx] = 1;
        let mut s = Series::zero(vars);
        s.add_term(m, Scalar::one());
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        mul_generic(self, other, |a, b| a.mul(b))
    }

    pub fn mul_v(&self, other: &VSeries) -> VSeries {
        mul_generic(self, other, |a, b| b.cscale(a))
    }

    /// exp of a series with zero constant term.
    pub fn exp(&self) -> Result<Self> {
        if self.coeff(&Mono::unit(self.vars.nvars())).is_some() {
            return Err(Error::Shape(
                "exp requires a series with zero constant term".into(),
            ));
        }
        let mut out = Series::one(self.vars.clone());
        let mut term = Series::one(self.vars.clone());
        // iterate until the power ladder dies inside the truncation
        let max_iter = (self.vars.order as usize + 1)
            * (((self.vars.z_max_h - self.vars.z_min_h) / 2) as usize + 2);
        for k in 1..=max_iter {
            term = term.mul(self);
            if term.is_zero() {
                break;
            }
            term = term.scale(&Scalar::from_rat(rat(1, k as i64)));
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Multiplicative inverse when the constant term is invertible.
    pub fn inverse(&self) -> Result<Self> {
        let unit = Mono::unit(self.vars.nvars());
        let c0 = self
            .coeff(&unit)
            .cloned()
            .ok_or_else(|| Error::Shape("series inverse requires nonzero constant term".into()))?;
        let c0inv = c0.inv();
        // self = c0 (1 + u) with u having no constant term
        let u = self.scale(&c0inv).sub(&Series::one(self.vars.clone()));
        let mut out = Series::one(self.vars.clone());
        let mut pow = Series::one(self.vars.clone());
        let max_iter = (self.vars.order as usize + 1)
            * (((self.vars.z_max_h - self.vars.z_min_h) / 2) as usize + 2);
        for k in 1..=max_iter {
            pow = pow.mul(&u);
            if pow.is_zero() {
                break;
            }
            out = if k % 2 == 1 { out.sub(&pow) } else { out.add(&pow) };
        }
        Ok(out.scale(&c0inv))
    }
}

impl Series<Mat> {
    pub fn identity(vars: Arc<VarSet>, n: usize) -> Self {
        Series::constant(vars, Mat::identity(n))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        mul_generic(self, other, |a, b| a.matmul(b))
    }

    pub fn apply_v(&self, v: &VSeries) -> VSeries {
        mul_generic(self, v, |a, b| a.apply(b))
    }

    pub fn apply_vec(&self, v: &[Scalar]) -> VSeries {
        self.map(|m| m.apply(v))
    }

    pub fn transpose(&self) -> Self {
        self.map(|m| m.transpose())
    }

    /// exp of a matrix series with vanishing constant term.
    pub fn exp(&self) -> Result<Self> {
        if self.coeff(&Mono::unit(self.vars.nvars())).is_some() {
            return Err(Error::Shape(
                "exp requires a series with zero constant term".into(),
            ));
        }
        let n = self
            .terms
            .values()
            .next()
            .map(|m| m.rows)
            .unwrap_or(0);
        if n == 0 {
            panic!("exp of empty matrix series");
        }
        let mut out = Series::identity(self.vars.clone(), n);
        let mut term = Series::identity(self.vars.clone(), n);
        let max_iter = (self.vars.order as usize + 1)
            * (((self.vars.z_max_h - self.vars.z_min_h) / 2) as usize + 2);
        for k in 1..=max_iter {
            term = term.matmul(self);
            if term.is_zero() {
                break;
            }
            term = term.scale(&Scalar::from_rat(rat(1, k as i64)));
            out = out.add(&term);
        }
        Ok(out)
    }
}

/// Truncated product with a compatibility check on the variable layout.
///
/// The product is commutative and distributes over addition; it is
/// associative whenever no discarded low z-power can re-enter the window
/// through a positive power (always the case for one-sided windows, and for
/// the solver windows used here, which are sized so genuine content never
/// reaches the edge).
pub fn series_mul(a: &SSeries, b: &SSeries) -> Result<SSeries> {
    if a.vars.z_min_h != b.vars.z_min_h || a.vars.z_max_h != b.vars.z_max_h {
        return Err(Error::Shape(format!(
            "incompatible z-windows: [{}, {}] vs [{}, {}] (half-steps)",
            a.vars.z_min_h, a.vars.z_max_h, b.vars.z_min_h, b.vars.z_max_h
        )));
    }
    if a.vars.names != b.vars.names || a.vars.order != b.vars.order {
        return Err(Error::Shape("incompatible variable sets".into()));
    }
    Ok(a.mul(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars1() -> Arc<VarSet> {
        VarSet::new(vec!["t".into()], 6, 4, 2)
    }

    #[test]
    fn one_minus_t_squared() {
        let vs = VarSet::new(vec!["t".into()], 2, 0, 0);
        let t = SSeries::var(vs.clone(), "t");
        let a = SSeries::one(vs.clone()).add(&t);
        let b = SSeries::one(vs.clone()).sub(&t);
        let p = series_mul(&a, &b).unwrap();
        let mut expect = SSeries::one(vs.clone());
        let mut m = Mono::unit(1);
        m.exps[0] = 2;
        expect.add_term(m, Scalar::from_int(-1));
        assert!(p.sub(&expect).is_zero());
    }

    #[test]
    fn z_inverse_times_z() {
        let vs = VarSet::new(vec![], 0, 1, 1);
        let mut zi = SSeries::zero(vs.clone());
        zi.add_term(Mono { exps: Exps::new(), zh: -2 }, Scalar::one());
        let mut z = SSeries::zero(vs.clone());
        z.add_term(Mono { exps: Exps::new(), zh: 2 }, Scalar::one());
        let p = series_mul(&zi, &z).unwrap();
        assert!(p.sub(&SSeries::one(vs)).is_zero());
    }

    #[test]
    fn exp_of_minus_t_over_z_cancels() {
        // e^{-t/z} * e^{t/z} = 1 within the declared window
        let vs = VarSet::new(vec!["t".into()], 3, 3, 0);
        let t = SSeries::var(vs.clone(), "t");
        let toz = t.shift_z(-2);
        let a = toz.neg().exp().unwrap();
        let b = toz.exp().unwrap();
        let p = series_mul(&a, &b).unwrap();
        let diff = p.sub(&SSeries::one(vs));
        assert!(diff.is_zero(), "residual terms: {:?}", diff.terms.keys());
    }

    #[test]
    fn laurent_split_exact() {
        let vs = vars1();
        let t = SSeries::var(vs.clone(), "t");
        let s = t.shift_z(-4).add(&t.shift_z(0)).add(&t.shift_z(2));
        let (m, p) = s.laurent_split();
        assert!(m.add(&p).sub(&s).is_zero());
        assert!(m.terms.keys().all(|k| k.zh < 0));
        assert!(p.terms.keys().all(|k| k.zh >= 0));
        // idempotence
        let (mm, mp) = m.laurent_split();
        assert!(mp.is_zero() && mm.sub(&m).is_zero());
    }

    #[test]
    fn rotate_z_squares_to_monodromy() {
        let vs = vars1();
        let one_z = SSeries::one(vs.clone()).shift_z(-2); // z^{-1}
        let r = one_z.rotate_z_pi();
        // z^{-1} -> i^{-2} z^{-1} = -z^{-1}
        assert!(r.add(&one_z).is_zero());
        // half-power: z^{1/2} -> i z^{1/2}
        let half = SSeries::one(vs.clone()).shift_z(1);
        let rh = half.rotate_z_pi();
        assert!(rh.sub(&half.scale(&Scalar::i())).is_zero());
    }

    #[test]
    fn series_inverse() {
        let vs = VarSet::new(vec!["t".into()], 5, 0, 0);
        let t = SSeries::var(vs.clone(), "t");
        let a = SSeries::one(vs.clone()).sub(&t);
        let inv = a.inverse().unwrap();
        let p = a.mul(&inv);
        assert!(p.sub(&SSeries::one(vs)).is_zero());
    }
}
