//! Scalar tower: exact rationals, exact cyclotomic numbers and
//! double-precision complex numerics, under one arithmetic type.
//!
//! Exact-tagged scalars stay exact under ring operations (and under division
//! when the divisor is exact and nonzero); any operation touching a numeric
//! scalar demotes the result to a numeric value.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

pub type Rat = BigRational;

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rat {
    Rat::from(BigInt::from(p))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    })
}

/// Parse `"p/q"` or `"p"` into an exact rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        Some(Rat::new(p, q))
    } else {
        let p: BigInt = s.parse().ok()?;
        Some(Rat::from(p))
    }
}

// ---------------------------------------------------------------------------
// Cyclotomic numbers
// ---------------------------------------------------------------------------

/// Coefficients of the m-th cyclotomic polynomial, index = degree.
fn cyclotomic_poly(m: u32) -> Arc<Vec<Rat>> {
    static CACHE: Lazy<Mutex<HashMap<u32, Arc<Vec<Rat>>>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    if let Some(p) = CACHE.lock().unwrap().get(&m) {
        return p.clone();
    }
    // Phi_m = (x^m - 1) / prod_{d | m, d < m} Phi_d
    let mut num = vec![Rat::zero(); m as usize + 1];
    num[0] = -Rat::one();
    num[m as usize] = Rat::one();
    let mut poly = num;
    for d in 1..m {
        if m % d == 0 {
            let phi_d = cyclotomic_poly(d);
            poly = poly_div_exact(&poly, &phi_d);
        }
    }
    let arc = Arc::new(poly);
    CACHE.lock().unwrap().insert(m, arc.clone());
    arc
}

fn poly_trim(p: &mut Vec<Rat>) {
    while p.len() > 1 && p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
}

fn poly_div_exact(num: &[Rat], den: &[Rat]) -> Vec<Rat> {
    let (q, r) = poly_divmod(num, den);
    debug_assert!(r.iter().all(|c| c.is_zero()));
    q
}

fn poly_divmod(num: &[Rat], den: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let mut rem: Vec<Rat> = num.to_vec();
    poly_trim(&mut rem);
    let mut den = den.to_vec();
    poly_trim(&mut den);
    let dd = den.len() - 1;
    let lead = den[dd].clone();
    if rem.len() <= dd && !(rem.len() == 1 && dd == 0) {
        return (vec![Rat::zero()], rem);
    }
    let mut quo = vec![Rat::zero(); rem.len().saturating_sub(dd)];
    while rem.len() > dd || (dd == 0 && !rem.iter().all(|c| c.is_zero())) {
        let rd = rem.len() - 1;
        if rd < dd {
            break;
        }
        let c = &rem[rd] / &lead;
        if quo.len() <= rd - dd {
            quo.resize(rd - dd + 1, Rat::zero());
        }
        quo[rd - dd] = c.clone();
        for i in 0..=dd {
            let t = &den[i] * &c;
            rem[rd - dd + i] -= t;
        }
        poly_trim(&mut rem);
        if rem.len() == 1 && rem[0].is_zero() {
            break;
        }
        if rem.len() - 1 < dd {
            break;
        }
    }
    poly_trim(&mut quo);
    (quo, rem)
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            if cb.is_zero() {
                continue;
            }
            out[i + j] += ca * cb;
        }
    }
    poly_trim(&mut out);
    out
}

/// An element of the cyclotomic field Q(zeta_m), stored as a polynomial in
/// zeta_m reduced modulo the m-th cyclotomic polynomial. The representation
/// is canonical for a fixed conductor, so equality and zero tests are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Cyclotomic {
    pub conductor: u32,
    /// Coefficients of powers zeta^0, zeta^1, ...; length < phi(m).
    pub coeffs: Vec<Rat>,
}

impl Cyclotomic {
    pub fn zero() -> Self {
        Cyclotomic {
            conductor: 1,
            coeffs: vec![Rat::zero()],
        }
    }

    pub fn from_rat(r: Rat) -> Self {
        Cyclotomic {
            conductor: 1,
            coeffs: vec![r],
        }
    }

    /// zeta_m^k
    pub fn root_of_unity(k: i64, m: u32) -> Self {
        assert!(m > 0);
        let k = k.rem_euclid(m as i64) as usize;
        let mut coeffs = vec![Rat::zero(); k + 1];
        coeffs[k] = Rat::one();
        let mut c = Cyclotomic {
            conductor: m,
            coeffs,
        };
        c.reduce();
        c
    }

    /// e^{2 pi i f} for rational f.
    pub fn exp_2pii(f: &Rat) -> Self {
        let den = f.denom().to_u32().expect("conductor too large");
        let num = (f.numer() % BigInt::from(den)).to_i64().unwrap();
        Cyclotomic::root_of_unity(num, den)
    }

    fn reduce(&mut self) {
        // exponent folding mod m
        let m = self.conductor as usize;
        if self.coeffs.len() > m {
            let mut folded = vec![Rat::zero(); m];
            for (e, c) in self.coeffs.iter().enumerate() {
                folded[e % m] += c;
            }
            self.coeffs = folded;
        }
        let phi = cyclotomic_poly(self.conductor);
        if self.coeffs.len() >= phi.len() {
            let (_, r) = poly_divmod(&self.coeffs, &phi);
            self.coeffs = r;
        }
        poly_trim(&mut self.coeffs);
    }

    fn lift_to(&self, conductor: u32) -> Cyclotomic {
        assert!(conductor % self.conductor == 0);
        let step = (conductor / self.conductor) as usize;
        let mut coeffs = vec![Rat::zero(); (self.coeffs.len() - 1) * step + 1];
        for (e, c) in self.coeffs.iter().enumerate() {
            coeffs[e * step] = c.clone();
        }
        let mut out = Cyclotomic {
            conductor,
            coeffs,
        };
        out.reduce();
        out
    }

    fn unify(a: &Cyclotomic, b: &Cyclotomic) -> (Cyclotomic, Cyclotomic) {
        let l = num_integer::lcm(a.conductor, b.conductor);
        (a.lift_to(l), b.lift_to(l))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn as_rational(&self) -> Option<Rat> {
        if self.coeffs.len() == 1 {
            Some(self.coeffs[0].clone())
        } else if self.is_zero() {
            Some(Rat::zero())
        } else {
            None
        }
    }

    pub fn add(&self, other: &Cyclotomic) -> Cyclotomic {
        let (mut a, b) = Cyclotomic::unify(self, other);
        if a.coeffs.len() < b.coeffs.len() {
            a.coeffs.resize(b.coeffs.len(), Rat::zero());
        }
        for (i, c) in b.coeffs.iter().enumerate() {
            a.coeffs[i] += c;
        }
        poly_trim(&mut a.coeffs);
        a
    }

    pub fn mul(&self, other: &Cyclotomic) -> Cyclotomic {
        let (a, b) = Cyclotomic::unify(self, other);
        let mut out = Cyclotomic {
            conductor: a.conductor,
            coeffs: poly_mul(&a.coeffs, &b.coeffs),
        };
        out.reduce();
        out
    }

    pub fn neg(&self) -> Cyclotomic {
        Cyclotomic {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    /// Exact inverse via the extended Euclidean algorithm in Q[x] modulo Phi_m.
    pub fn inverse(&self) -> Option<Cyclotomic> {
        if self.is_zero() {
            return None;
        }
        if let Some(r) = self.as_rational() {
            return Some(Cyclotomic::from_rat(Rat::one() / r));
        }
        let phi = cyclotomic_poly(self.conductor);
        // extended gcd of self.coeffs and phi
        let (g, u) = poly_ext_gcd(&self.coeffs, &phi);
        // g must be a nonzero constant
        if g.len() != 1 || g[0].is_zero() {
            return None;
        }
        let ginv = Rat::one() / g[0].clone();
        let mut inv = Cyclotomic {
            conductor: self.conductor,
            coeffs: u.iter().map(|c| c * &ginv).collect(),
        };
        inv.reduce();
        Some(inv)
    }

    /// Complex conjugation zeta -> zeta^{-1}.
    pub fn conj(&self) -> Cyclotomic {
        let m = self.conductor;
        let mut out = Cyclotomic::zero();
        for (e, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut t = Cyclotomic::root_of_unity(-(e as i64), m);
            for x in t.coeffs.iter_mut() {
                *x *= c;
            }
            out = out.add(&t);
        }
        out
    }

    pub fn to_complex(&self) -> Complex64 {
        let m = self.conductor as f64;
        let mut z = Complex64::new(0.0, 0.0);
        for (e, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let theta = 2.0 * std::f64::consts::PI * (e as f64) / m;
            z += rat_to_f64(c) * Complex64::new(theta.cos(), theta.sin());
        }
        z
    }
}

/// Returns (gcd, u) with u*a = gcd mod b.
fn poly_ext_gcd(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let mut r0 = a.to_vec();
    let mut r1 = b.to_vec();
    poly_trim(&mut r0);
    poly_trim(&mut r1);
    let mut u0 = vec![Rat::one()];
    let mut u1 = vec![Rat::zero()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divmod(&r0, &r1);
        let qu1 = poly_mul(&q, &u1);
        let mut u2 = r0_sub(&u0, &qu1);
        poly_trim(&mut u2);
        r0 = std::mem::replace(&mut r1, r);
        u0 = std::mem::replace(&mut u1, u2);
    }
    (r0, u0)
}

fn r0_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let n = a.len().max(b.len());
    let mut out = vec![Rat::zero(); n];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] -= c;
    }
    out
}

// ---------------------------------------------------------------------------
// Scalar
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum Scalar {
    Rat(Rat),
    Cyc(Cyclotomic),
    Num(Complex64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Rat(Rat::zero())
    }

    pub fn one() -> Self {
        Scalar::Rat(Rat::one())
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::Rat(rat_int(n))
    }

    pub fn from_rat(r: Rat) -> Self {
        Scalar::Rat(r)
    }

    pub fn from_f64(x: f64) -> Self {
        Scalar::Num(Complex64::new(x, 0.0))
    }

    pub fn from_complex(z: Complex64) -> Self {
        Scalar::Num(z)
    }

    /// The imaginary unit, exact (zeta_4).
    pub fn i() -> Self {
        Scalar::Cyc(Cyclotomic::root_of_unity(1, 4))
    }

    /// e^{2 pi i f} for rational f, exact.
    pub fn root_of_unity(f: &Rat) -> Self {
        Scalar::Cyc(Cyclotomic::exp_2pii(f)).normalized()
    }

    /// e^{pi i f} for rational f, exact.
    pub fn exp_pi_i(f: &Rat) -> Self {
        Scalar::root_of_unity(&(f / rat_int(2)))
    }

    fn normalized(self) -> Scalar {
        match self {
            Scalar::Cyc(c) => match c.as_rational() {
                Some(r) => Scalar::Rat(r),
                None => Scalar::Cyc(c),
            },
            s => s,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Scalar::Num(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.is_zero(),
            Scalar::Cyc(c) => c.is_zero(),
            Scalar::Num(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        match self {
            Scalar::Rat(r) => Complex64::new(rat_to_f64(r), 0.0),
            Scalar::Cyc(c) => c.to_complex(),
            Scalar::Num(z) => *z,
        }
    }

    pub fn abs(&self) -> f64 {
        self.to_complex().norm()
    }

    pub fn as_rational(&self) -> Option<Rat> {
        match self {
            Scalar::Rat(r) => Some(r.clone()),
            Scalar::Cyc(c) => c.as_rational(),
            Scalar::Num(_) => None,
        }
    }

    pub fn conj(&self) -> Scalar {
        match self {
            Scalar::Rat(r) => Scalar::Rat(r.clone()),
            Scalar::Cyc(c) => Scalar::Cyc(c.conj()).normalized(),
            Scalar::Num(z) => Scalar::Num(z.conj()),
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            (Scalar::Rat(a), Scalar::Cyc(b)) => {
                Scalar::Cyc(Cyclotomic::from_rat(a.clone()).add(b)).normalized()
            }
            (Scalar::Cyc(a), Scalar::Rat(b)) => {
                Scalar::Cyc(a.add(&Cyclotomic::from_rat(b.clone()))).normalized()
            }
            (Scalar::Cyc(a), Scalar::Cyc(b)) => Scalar::Cyc(a.add(b)).normalized(),
            (a, b) => Scalar::Num(a.to_complex() + b.to_complex()),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rat(r) => Scalar::Rat(-r.clone()),
            Scalar::Cyc(c) => Scalar::Cyc(c.neg()),
            Scalar::Num(z) => Scalar::Num(-z),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a * b),
            (Scalar::Rat(a), Scalar::Cyc(b)) | (Scalar::Cyc(b), Scalar::Rat(a)) => {
                let mut c = b.clone();
                for x in c.coeffs.iter_mut() {
                    *x *= a;
                }
                Scalar::Cyc(c).normalized()
            }
            (Scalar::Cyc(a), Scalar::Cyc(b)) => Scalar::Cyc(a.mul(b)).normalized(),
            (a, b) => Scalar::Num(a.to_complex() * b.to_complex()),
        }
    }

    pub fn div(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) if !b.is_zero() => Scalar::Rat(a / b),
            (Scalar::Cyc(a), Scalar::Rat(b)) if !b.is_zero() => {
                let mut c = a.clone();
                let inv = Rat::one() / b.clone();
                for x in c.coeffs.iter_mut() {
                    *x *= &inv;
                }
                Scalar::Cyc(c).normalized()
            }
            (Scalar::Rat(a), Scalar::Cyc(b)) => match b.inverse() {
                Some(inv) => Scalar::Rat(a.clone()).mul(&Scalar::Cyc(inv)),
                None => Scalar::Num(Complex64::new(f64::NAN, f64::NAN)),
            },
            (Scalar::Cyc(a), Scalar::Cyc(b)) => match b.inverse() {
                Some(inv) => Scalar::Cyc(a.mul(&inv)).normalized(),
                None => Scalar::Num(Complex64::new(f64::NAN, f64::NAN)),
            },
            (a, b) => Scalar::Num(a.to_complex() / b.to_complex()),
        }
    }

    pub fn inv(&self) -> Scalar {
        Scalar::one().div(self)
    }

    pub fn pow_i(&self, k: i64) -> Scalar {
        if k == 0 {
            return Scalar::one();
        }
        let base = if k > 0 { self.clone() } else { self.inv() };
        let mut out = Scalar::one();
        for _ in 0..k.abs() {
            out = out.mul(&base);
        }
        out
    }

    /// |self - other| in the numeric embedding.
    pub fn dist(&self, other: &Scalar) -> f64 {
        (self.to_complex() - other.to_complex()).norm()
    }

    pub fn approx_eq(&self, other: &Scalar, tol: f64) -> bool {
        if self.is_exact() && other.is_exact() {
            if self.sub(other).is_zero() {
                return true;
            }
        }
        self.dist(other) <= tol
    }

    /// Render as a full-precision decimal string pair "[re,im]" for reports.
    pub fn to_decimal_pair(&self) -> (String, String) {
        let z = self.to_complex();
        (format!("{:.17e}", z.re), format!("{:.17e}", z.im))
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Num(a), Scalar::Num(b)) => a == b,
            (a, b) if a.is_exact() && b.is_exact() => a.sub(b).is_zero(),
            _ => false,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rat(r) => write!(f, "{}", r),
            Scalar::Cyc(c) => {
                let mut first = true;
                for (e, coeff) in c.coeffs.iter().enumerate() {
                    if coeff.is_zero() {
                        continue;
                    }
                    if !first {
                        write!(f, " + ")?;
                    }
                    first = false;
                    if e == 0 {
                        write!(f, "{}", coeff)?;
                    } else {
                        write!(f, "{}*z{}^{}", coeff, c.conductor, e)?;
                    }
                }
                if first {
                    write!(f, "0")?;
                }
                Ok(())
            }
            Scalar::Num(z) => {
                if z.im == 0.0 {
                    write!(f, "{}", z.re)
                } else {
                    write!(f, "{}{}{}i", z.re, if z.im < 0.0 { "-" } else { "+" }, z.im.abs())
                }
            }
        }
    }
}

/// Effective number of reliable decimal digits of the numeric layer.
pub const EFFECTIVE_DIGITS: u32 = 15;

/// Default numeric tolerance used by every acceptance-level check.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Round a scalar to the nearest integer if it is within `tol`, returning the
/// integer and the distance.
pub fn nearest_integer(s: &Scalar, _tol: f64) -> (BigInt, f64) {
    if let Some(r) = s.as_rational() {
        let rounded = r.round();
        let dist = rat_to_f64(&(&r - &rounded).abs());
        return (rounded.to_integer(), dist);
    }
    let z = s.to_complex();
    let n = z.re.round();
    let dist = ((z.re - n).powi(2) + z.im.powi(2)).sqrt();
    (BigInt::from(n as i64), dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_relations() {
        // 1 + zeta_3 + zeta_3^2 = 0
        let z = Cyclotomic::root_of_unity(1, 3);
        let z2 = Cyclotomic::root_of_unity(2, 3);
        let s = Cyclotomic::from_rat(Rat::one()).add(&z).add(&z2);
        assert!(s.is_zero());
    }

    #[test]
    fn cyclotomic_inverse_exact() {
        // (1 - zeta_3)^{-1} * (1 - zeta_3) = 1
        let one = Cyclotomic::from_rat(Rat::one());
        let z = Cyclotomic::root_of_unity(1, 3);
        let a = one.add(&z.neg());
        let inv = a.inverse().unwrap();
        let p = a.mul(&inv);
        assert_eq!(p.as_rational(), Some(Rat::one()));
    }

    #[test]
    fn mixed_conductors() {
        // zeta_4 * zeta_6 = zeta_12^{3+2} = zeta_12^5
        let a = Cyclotomic::root_of_unity(1, 4);
        let b = Cyclotomic::root_of_unity(1, 6);
        let p = a.mul(&b);
        let expect = Cyclotomic::root_of_unity(5, 12);
        assert!(p.add(&expect.neg()).is_zero());
    }

    #[test]
    fn i_squares_to_minus_one() {
        let i = Scalar::i();
        let m = i.mul(&i);
        assert_eq!(m.as_rational(), Some(rat_int(-1)));
    }

    #[test]
    fn conj_roots() {
        let z = Scalar::root_of_unity(&rat(1, 5));
        let prod = z.mul(&z.conj());
        assert_eq!(prod.as_rational(), Some(Rat::one()));
    }

    #[test]
    fn numeric_roundtrip() {
        let f = rat(1, 3);
        let z = Scalar::root_of_unity(&f).to_complex();
        let theta = 2.0 * std::f64::consts::PI / 3.0;
        assert!((z - Complex64::new(theta.cos(), theta.sin())).norm() < 1e-14);
    }
}
