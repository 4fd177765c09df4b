//! Special-function values at rational arguments: log Gamma, polygamma via
//! Hurwitz zeta with an Euler-Maclaurin tail, Bernoulli numbers, and the
//! Taylor expansion of Gamma(1-f+x) used by the Gamma-class.

use std::sync::Mutex;

use num_traits::{One, Signed, Zero};
use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::scalar::{rat_int, rat_to_f64, Rat, Scalar};

/// Exact Bernoulli numbers, B1 = -1/2 convention.
pub fn bernoulli(n: usize) -> Rat {
    static CACHE: Lazy<Mutex<Vec<Rat>>> = Lazy::new(|| Mutex::new(vec![Rat::one()]));
    let mut cache = CACHE.lock().unwrap();
    while cache.len() <= n {
        let m = cache.len();
        // sum_{j=0}^{m} C(m+1, j) B_j = 0  =>  B_m = -1/(m+1) * sum_{j<m} C(m+1,j) B_j
        let mut acc = Rat::zero();
        let mut binom = Rat::one(); // C(m+1, 0)
        for (j, b) in cache.iter().enumerate() {
            acc += &binom * b;
            // C(m+1, j+1) = C(m+1, j) * (m+1-j)/(j+1)
            binom = binom * rat_int((m + 1 - j) as i64) / rat_int((j + 1) as i64);
        }
        let bm = -acc / rat_int((m + 1) as i64);
        cache.push(bm);
    }
    cache[n].clone()
}

const SHIFT_TARGET: f64 = 24.0;
const TAIL_TERMS: usize = 12;

/// log Gamma(x) for real x > 0.
pub fn lgamma(x: f64) -> f64 {
    assert!(x > 0.0, "lgamma domain");
    let n = (SHIFT_TARGET - x).ceil().max(0.0) as usize;
    let y = x + n as f64;
    let mut s = (y - 0.5) * y.ln() - y + 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut ypow = y;
    for k in 1..=TAIL_TERMS {
        let b = rat_to_f64(&bernoulli(2 * k));
        s += b / ((2 * k) as f64 * (2 * k - 1) as f64 * ypow);
        ypow *= y * y;
    }
    for j in 0..n {
        s -= (x + j as f64).ln();
    }
    s
}

/// Gamma(x) for real x > 0.
pub fn gamma_fn(x: f64) -> f64 {
    lgamma(x).exp()
}

/// digamma(x) for real x > 0.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0);
    let n = (SHIFT_TARGET - x).ceil().max(0.0) as usize;
    let y = x + n as f64;
    let mut s = y.ln() - 0.5 / y;
    let mut ypow = y * y;
    for k in 1..=TAIL_TERMS {
        let b = rat_to_f64(&bernoulli(2 * k));
        s -= b / ((2 * k) as f64 * ypow);
        ypow *= y * y;
    }
    for j in 0..n {
        s -= 1.0 / (x + j as f64);
    }
    s
}

/// Hurwitz zeta(s, a) for integer s >= 2 and real a > 0.
pub fn hurwitz_zeta(s: u32, a: f64) -> f64 {
    assert!(s >= 2 && a > 0.0);
    let n = (SHIFT_TARGET - a).ceil().max(0.0) as usize;
    let y = a + n as f64;
    let sf = s as f64;
    let mut sum = 0.0;
    for j in 0..n {
        sum += (a + j as f64).powi(-(s as i32));
    }
    sum += y.powf(1.0 - sf) / (sf - 1.0);
    sum += 0.5 * y.powi(-(s as i32));
    // Euler-Maclaurin tail: sum_k B_{2k}/(2k)! * (s)_{2k-1} y^{-s-2k+1}
    let mut poch = sf; // (s)_{2k-1} at k=1
    let mut fact = 2.0; // (2k)! at k=1
    let mut ypow = y.powi(-(s as i32) - 1); // y^{-s-2k+1} at k=1
    for k in 1..=TAIL_TERMS {
        let b = rat_to_f64(&bernoulli(2 * k));
        sum += b / fact * poch * ypow;
        poch *= (sf + (2 * k - 1) as f64) * (sf + 2.0 * k as f64);
        fact *= (2 * k + 1) as f64 * (2 * k + 2) as f64;
        ypow /= y * y;
    }
    sum
}

/// polygamma psi^{(m)}(x), m >= 0, x > 0.
pub fn polygamma(m: u32, x: f64) -> f64 {
    if m == 0 {
        return digamma(x);
    }
    // psi^{(m)}(x) = (-1)^{m+1} m! zeta(m+1, x)
    let mut fact = 1.0;
    for k in 2..=m {
        fact *= k as f64;
    }
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    sign * fact * hurwitz_zeta(m + 1, x)
}

pub fn euler_gamma() -> f64 {
    -digamma(1.0)
}

pub fn zeta(n: u32) -> f64 {
    hurwitz_zeta(n, 1.0)
}

pub fn pi() -> f64 {
    std::f64::consts::PI
}

// ---------------------------------------------------------------------------
// Univariate truncated series over Scalar (exact when inputs are exact)
// ---------------------------------------------------------------------------

/// c = a * b truncated to len coefficients.
pub fn umul(a: &[Scalar], b: &[Scalar], len: usize) -> Vec<Scalar> {
    let mut out = vec![Scalar::zero(); len];
    for (i, ca) in a.iter().enumerate().take(len) {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate().take(len - i) {
            if cb.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].add(&ca.mul(cb));
        }
    }
    out
}

/// exp(a) with a[0] = 0, truncated to len coefficients.
pub fn uexp(a: &[Scalar], len: usize) -> Vec<Scalar> {
    debug_assert!(a.first().map(|c| c.is_zero()).unwrap_or(true));
    let mut out = vec![Scalar::zero(); len];
    out[0] = Scalar::one();
    let mut term = out.clone();
    for k in 1..len {
        term = umul(&term, a, len);
        let inv_k = Scalar::from_rat(Rat::one() / rat_int(k as i64));
        for t in term.iter_mut() {
            *t = t.mul(&inv_k);
        }
        for (o, t) in out.iter_mut().zip(term.iter()) {
            *o = o.add(t);
        }
    }
    out
}

/// log(1 + u) with u[0] = 0, truncated to len coefficients.
pub fn ulog1p(u: &[Scalar], len: usize) -> Vec<Scalar> {
    debug_assert!(u.first().map(|c| c.is_zero()).unwrap_or(true));
    let mut out = vec![Scalar::zero(); len];
    let mut upow = vec![Scalar::zero(); len];
    upow[0] = Scalar::one();
    for k in 1..len {
        upow = umul(&upow, u, len);
        let sign = if k % 2 == 1 { 1 } else { -1 };
        let c = Scalar::from_rat(rat_int(sign) / rat_int(k as i64));
        for (o, t) in out.iter_mut().zip(upow.iter()) {
            *o = o.add(&t.mul(&c));
        }
    }
    out
}

/// 1 / a with a[0] invertible, truncated to len coefficients.
pub fn uinv(a: &[Scalar], len: usize) -> Vec<Scalar> {
    let a0 = a[0].inv();
    let mut out = vec![Scalar::zero(); len];
    out[0] = a0.clone();
    for k in 1..len {
        let mut acc = Scalar::zero();
        for j in 1..=k.min(a.len() - 1) {
            acc = acc.add(&a[j].mul(&out[k - j]));
        }
        out[k] = acc.neg().mul(&a0);
    }
    out
}

/// Exact coefficients of log(x / (1 - e^{-x})) up to x^{len-1}.
pub fn todd_log_series(len: usize) -> Vec<Scalar> {
    // (1 - e^{-x})/x = sum_{k>=0} (-1)^k x^k/(k+1)!
    let mut v = vec![Scalar::zero(); len];
    let mut f = Rat::one();
    for (k, slot) in v.iter_mut().enumerate() {
        f *= rat_int((k + 1) as i64); // (k+1)!
        let sign = if k % 2 == 0 { 1 } else { -1 };
        *slot = Scalar::from_rat(rat_int(sign) / f.clone());
    }
    // v = 1 - x/2 + ..., log(x/(1-e^{-x})) = -log(v)
    let mut u = v;
    u[0] = Scalar::zero(); // v = 1 + u
    let l = ulog1p(&u, len);
    l.into_iter().map(|c| c.neg()).collect()
}

/// Taylor coefficients c_0..c_{k_max} of Gamma(1 - f + x).
///
/// Computed through log Gamma(1-f+x) = log Gamma(1-f) + sum_k psi^{(k-1)}(1-f) x^k/k!.
pub fn gamma_taylor(f: &Rat, k_max: usize) -> Result<Vec<Scalar>> {
    if f.is_negative() || *f >= Rat::one() {
        return Err(Error::Domain(format!(
            "gamma_taylor requires f in [0,1), got {}",
            f
        )));
    }
    let a = rat_to_f64(&(Rat::one() - f));
    let mut logser = vec![Scalar::zero(); k_max + 1];
    let mut fact = 1.0;
    for k in 1..=k_max {
        fact *= k as f64;
        logser[k] = Scalar::from_f64(polygamma((k - 1) as u32, a) / fact);
    }
    let e = uexp(&logser, k_max + 1);
    let c0 = Scalar::from_f64(gamma_fn(a));
    Ok(e.into_iter().map(|c| c.mul(&c0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0), Rat::one());
        assert_eq!(bernoulli(1), rat(-1, 2));
        assert_eq!(bernoulli(2), rat(1, 6));
        assert_eq!(bernoulli(4), rat(-1, 30));
        assert_eq!(bernoulli(12), rat(-691, 2730));
    }

    #[test]
    fn gamma_integer_values() {
        assert!((gamma_fn(1.0) - 1.0).abs() < 1e-14);
        assert!((gamma_fn(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma_fn(0.5) - pi().sqrt()).abs() < 1e-13);
    }

    #[test]
    fn digamma_one_is_minus_gamma() {
        let g = euler_gamma();
        assert!((g - 0.5772156649015329).abs() < 1e-13, "gamma = {}", g);
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(2) - pi() * pi() / 6.0).abs() < 1e-13);
        assert!((zeta(3) - 1.2020569031595943).abs() < 1e-13);
    }

    #[test]
    fn reflection_identity() {
        for (p, q) in [(1i64, 6i64), (1, 4), (1, 3), (1, 2)] {
            let f = p as f64 / q as f64;
            let lhs = gamma_fn(1.0 - f) * gamma_fn(f);
            let rhs = pi() / (pi() * f).sin();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs(), "f = {}/{}", p, q);
        }
    }

    #[test]
    fn gamma_taylor_euler() {
        let c = gamma_taylor(&Rat::zero(), 1).unwrap();
        assert!((c[0].to_complex().re - 1.0).abs() < 1e-14);
        assert!((c[1].to_complex().re + euler_gamma()).abs() < 1e-13);
    }

    #[test]
    fn gamma_taylor_zeta3() {
        // log Gamma(1+x) = -gamma x + zeta(2)x^2/2 - zeta(3)x^3/3 + ...
        let c = gamma_taylor(&Rat::zero(), 3).unwrap();
        let g = euler_gamma();
        let c3 = -g.powi(3) / 6.0 - zeta(3) / 3.0 - g * zeta(2) / 2.0;
        assert!((c[3].to_complex().re - c3).abs() < 1e-12);
    }

    #[test]
    fn todd_series_classical() {
        // x/(1-e^{-x}) = 1 + x/2 + x^2/12 - x^4/720 + ...
        let l = todd_log_series(6);
        let e = uexp(&l, 6);
        let expect = [
            rat(1, 1),
            rat(1, 2),
            rat(1, 12),
            rat(0, 1),
            rat(-1, 720),
            rat(0, 1),
        ];
        for (c, want) in e.iter().zip(expect.iter()) {
            assert_eq!(c.as_rational().unwrap(), want.clone());
        }
    }
}
