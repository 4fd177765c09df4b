//! Characteristic classes on the inertia stack (Gamma-class and Todd class),
//! the Kawasaki-Riemann-Roch pairing, the K-group framing Psi, and the Mukai
//! pairing identity.
//!
//! Chern roots are never materialized: each multiplicative class is evaluated
//! through its logarithm, whose degree-k coefficient pairs with the power sum
//! p_k = k! ch_k of the eigen-piece. Todd factors of twisted pieces stay in
//! exact cyclotomic arithmetic, so Euler characteristics of the quotient
//! fixtures come out as exact integers.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graded::{CohElement, GradedSpace, Support};
use crate::kclass::{localize, KClass};
use crate::orbifold::OrbifoldDatum;
use crate::scalar::{rat_int, rat_to_f64, Rat, Scalar};
use crate::special::{polygamma, todd_log_series, ulog1p};

/// A cohomology class framed as the Psi-image of a K-class.
#[derive(Clone, Debug)]
pub struct FramedSection {
    pub label: String,
    pub psi: CohElement,
}

impl FramedSection {
    pub fn support(&self) -> Support {
        self.psi.space.support
    }
}

fn space_of<'a>(datum: &'a OrbifoldDatum, support: Support) -> &'a std::sync::Arc<GradedSpace> {
    match support {
        Support::Ordinary => &datum.ordinary,
        Support::Compact => &datum.csupp,
    }
}

/// exp of a positive-degree (nilpotent) element, within one sector.
fn exp_nilpotent_class(datum: &OrbifoldDatum, x: &CohElement) -> CohElement {
    let mut out = datum.unit_like(&x.space);
    let mut term = out.clone();
    for k in 1..=(datum.dim.max(1) as usize + 1) {
        term = match datum.cup_elements(&term, x) {
            Ok(t) => t,
            Err(_) => break,
        };
        if term.is_zero() {
            break;
        }
        term = term.scale(&Scalar::from_rat(Rat::one() / rat_int(k as i64)));
        out = out.add(&term);
    }
    out
}

impl OrbifoldDatum {
    /// The all-sector unit element of the given space's support (each sector's
    /// degree-0 class with coefficient 1, when present).
    pub fn unit_like(&self, space: &std::sync::Arc<GradedSpace>) -> CohElement {
        let mut e = CohElement::zero(space.clone());
        for (i, c) in space.classes.iter().enumerate() {
            if c.internal_deg == 0 {
                e.coeffs[i] = Scalar::one();
            }
        }
        e
    }
}

/// Evaluate a multiplicative class with the given eigen-piece logarithm.
///
/// `log_data(f, max_k)` returns the constant multiplier per unit rank and the
/// log-series coefficients g_1..g_max (so the class of the piece is
/// const^rank * exp(sum_k g_k k! ch_k)).
fn multiplicative_class(
    kclass: &KClass,
    datum: &OrbifoldDatum,
    log_data: impl Fn(&Rat, usize) -> (Scalar, Vec<Scalar>),
) -> Result<CohElement> {
    let space = space_of(datum, kclass.support).clone();
    let mut out = CohElement::zero(space.clone());
    for (v, pieces) in kclass.pieces.iter().enumerate() {
        let cls = space.classes_of_sector(v);
        let max_k = cls
            .iter()
            .map(|&i| (space.classes[i].internal_deg / 2) as usize)
            .max()
            .unwrap_or(0);
        // product over eigen-pieces of the sector
        let mut sector = datum.unit_like(&space);
        // zero all other sectors in the running product
        for (i, c) in space.classes.iter().enumerate() {
            if c.sector != v {
                sector.coeffs[i] = Scalar::zero();
            }
        }
        if cls.is_empty() {
            continue;
        }
        for p in pieces {
            let (c0, g) = log_data(&p.f, max_k);
            let rank = p.rank.clone();
            if !rank.is_integer() {
                return Err(Error::Data(format!(
                    "eigen-piece rank {} is not an integer",
                    rank
                )));
            }
            let c0_pow = c0.pow_i(rank.to_integer().to_i64().ok_or_else(|| {
                Error::Data("eigen-piece rank overflows".into())
            })?);
            // log contribution: sum_k g_k * k! * ch_k (positive degrees only)
            let mut logel = CohElement::zero(space.clone());
            let mut fact = Rat::one();
            for k in 1..=max_k {
                fact *= rat_int(k as i64);
                if g.len() <= k - 1 || g[k - 1].is_zero() {
                    continue;
                }
                for (local_pos, &gi) in cls.iter().enumerate() {
                    if space.classes[gi].internal_deg == 2 * k as i64 {
                        if let Some(ch) = p.ch.get(local_pos) {
                            let add = g[k - 1].mul(&Scalar::from_rat(fact.clone())).mul(ch);
                            logel.coeffs[gi] = logel.coeffs[gi].add(&add);
                        }
                    }
                }
            }
            let mut factor = exp_nilpotent_class(datum, &logel);
            // restrict the unit part to this sector
            for (i, c) in space.classes.iter().enumerate() {
                if c.sector != v {
                    factor.coeffs[i] = Scalar::zero();
                }
            }
            factor = factor.scale(&c0_pow);
            sector = datum.cup_elements(&sector, &factor)?;
        }
        for &gi in &cls {
            out.coeffs[gi] = sector.coeffs[gi].clone();
        }
    }
    Ok(out)
}

/// The Gamma-class: product of Gamma(1 - f + delta) over Chern roots.
pub fn gamma_class(kclass: &KClass, datum: &OrbifoldDatum) -> Result<CohElement> {
    multiplicative_class(kclass, datum, |f, max_k| {
        let a = rat_to_f64(&(Rat::one() - f));
        let c0 = Scalar::from_f64(crate::special::gamma_fn(a));
        let mut g = Vec::with_capacity(max_k);
        let mut fact = 1.0;
        for k in 1..=max_k {
            fact *= k as f64;
            g.push(Scalar::from_f64(polygamma((k - 1) as u32, a) / fact));
        }
        (c0, g)
    })
}

/// The orbifold Todd class of the displayed Kawasaki-Riemann-Roch product.
pub fn todd_class(kclass: &KClass, datum: &OrbifoldDatum) -> Result<CohElement> {
    multiplicative_class(kclass, datum, |f, max_k| {
        if f.is_zero() {
            // log(x / (1 - e^{-x})): exact rational coefficients
            let l = todd_log_series(max_k + 1);
            (Scalar::one(), l.into_iter().skip(1).collect())
        } else {
            // -log(1 - zetabar e^{-x}) with zetabar = e^{-2 pi i f}, exact
            let zbar = Scalar::root_of_unity(&(-f.clone()));
            let a0 = Scalar::one().sub(&zbar);
            let c0 = a0.inv();
            // w_k = zetabar (-1)^k / (k! (1 - zetabar)), series part -log(1-w)
            let mut w = vec![Scalar::zero(); max_k + 1];
            let mut fact = Rat::one();
            for (k, slot) in w.iter_mut().enumerate().skip(1) {
                fact *= rat_int(k as i64);
                let sign = if k % 2 == 0 { 1 } else { -1 };
                *slot = zbar
                    .mul(&Scalar::from_int(sign))
                    .div(&Scalar::from_rat(fact.clone()))
                    .div(&a0);
            }
            let neg_w: Vec<Scalar> = w.iter().map(|c| c.neg()).collect();
            let logpart = ulog1p(&neg_w, max_k + 1);
            (c0, logpart.into_iter().skip(1).map(|c| c.neg()).collect())
        }
    })
}

/// Kawasaki-Riemann-Roch: chi(V) = int_{IX} tch(V) cup Todd(TX), asserted to
/// land on an integer within `tol`.
pub fn kawasaki_chi(kclass: &KClass, datum: &OrbifoldDatum, tol: f64) -> Result<(BigInt, f64)> {
    if !datum.compact && kclass.support != Support::Compact {
        return Err(Error::UnsupportedPairing(
            "Kawasaki chi on a non-compact orbifold needs a compactly supported class".into(),
        ));
    }
    let tch = kclass.tch(datum)?;
    let todd = todd_class(&datum.tangent, datum)?;
    let prod = datum.cup_elements(&todd, &tch)?;
    let chi = datum.integrate_inertia(&prod)?;
    let (n, dist) = crate::scalar::nearest_integer(&chi, tol);
    if dist > tol {
        return Err(Error::IntegralityViolation {
            value: format!("{}", chi),
            distance: dist,
            tolerance: tol,
        });
    }
    Ok((n, dist))
}

/// Diagonal factors (2 pi i)^{deg/2} on the internal grading.
fn two_pi_i_half_deg(space: &GradedSpace, invert: bool) -> Vec<Scalar> {
    space
        .classes
        .iter()
        .map(|c| {
            let half = c.internal_deg / 2;
            let e = if invert { -half } else { half };
            let tp = Scalar::from_f64((2.0 * crate::special::pi()).powi(e as i32));
            tp.mul(&Scalar::i().pow_i(e))
        })
        .collect()
}

/// The K-group framing Psi(V) = (2 pi)^{-n/2} GammaHat(TX) cup
/// (2 pi i)^{deg/2} inv^* tch(V).
pub fn psi_map(kclass: &KClass, datum: &OrbifoldDatum) -> Result<FramedSection> {
    let tch = kclass.tch(datum)?;
    let pulled = tch.inv_pullback();
    let weighted = pulled.diag_apply(&two_pi_i_half_deg(&pulled.space, false));
    let gamma = gamma_class(&datum.tangent, datum)?;
    let mut psi = datum.cup_elements(&gamma, &weighted)?;
    let norm = Scalar::from_f64((2.0 * crate::special::pi()).powf(-(datum.dim as f64) / 2.0));
    psi = psi.scale(&norm);
    Ok(FramedSection {
        label: format!("Psi({})", kclass.label),
        psi,
    })
}

/// e^{pi i rho} as an operator on the ordinary space.
pub fn exp_pi_i_rho(datum: &OrbifoldDatum) -> crate::linalg::Mat {
    let m = datum.cup_by_ordinary(&datum.c1);
    let pii = Scalar::from_f64(crate::special::pi()).mul(&Scalar::i());
    let mut out = crate::linalg::Mat::identity(m.rows);
    let mut term = crate::linalg::Mat::identity(m.rows);
    for k in 1..=datum.dim.max(1) as usize + 1 {
        term = term.matmul(&m);
        if term.is_zero_within(0.0) {
            break;
        }
        term = term.scale(&pii.mul(&Scalar::from_rat(Rat::one() / rat_int(k as i64))));
        out = out.add(&term);
    }
    out
}

/// e^{pi i mu} diagonal on the given space (exact roots of unity).
pub fn exp_pi_i_mu(datum: &OrbifoldDatum, space: &GradedSpace) -> Vec<Scalar> {
    datum
        .mu_diag(space)
        .iter()
        .map(Scalar::exp_pi_i)
        .collect()
}

#[derive(Clone, Debug)]
pub struct MukaiReport {
    pub lhs: Scalar,
    pub rhs: Scalar,
    pub residual: f64,
    pub pass: bool,
}

/// Prop-style Mukai identity: (e^{pi i rho} Psi(V1), e^{pi i mu} Psi(V2))_orb
/// = chi(V1 (x) V2^dual).
pub fn mukai_pairing_check(
    v1: &KClass,
    v2: &KClass,
    datum: &OrbifoldDatum,
    tol: f64,
) -> Result<MukaiReport> {
    if !datum.compact {
        return Err(Error::UnsupportedPairing(
            "the Mukai identity check needs a compact orbifold".into(),
        ));
    }
    let p1 = psi_map(v1, datum)?.psi;
    let p2 = psi_map(v2, datum)?.psi;
    let rho = exp_pi_i_rho(datum);
    let left = CohElement::from_coeffs(p1.space.clone(), rho.apply(&p1.coeffs));
    let right = p2.diag_apply(&exp_pi_i_mu(datum, &p2.space));
    let lhs = datum.chen_ruan_pairing(&left, &right)?;
    let tensored = v1.tensor(&v2.dual(datum), datum)?;
    let (chi, _) = kawasaki_chi(&tensored, datum, tol)?;
    let rhs = Scalar::from_rat(Rat::from(chi));
    let residual = lhs.dist(&rhs);
    Ok(MukaiReport {
        lhs,
        rhs,
        residual,
        pass: residual <= tol,
    })
}

/// Sector-wise residuals of the Gamma/Todd "square root" identity:
/// [(e^{pi i deg/2} GammaHat(V)) cup inv^* GammaHat(V)]_v cup
/// e^{pi i (c1(pr^*V|_v) + age_v(V))}
///   = (2 pi i)^{sum_{f != 0} l_{v,f}} [(2 pi i)^{deg/2} Todd(V)]_v.
pub fn sqrt_identity_check(
    kclass: &KClass,
    datum: &OrbifoldDatum,
) -> Result<Vec<(String, f64)>> {
    let space = space_of(datum, kclass.support).clone();
    let gamma = gamma_class(kclass, datum)?;
    let todd = todd_class(kclass, datum)?;

    // e^{pi i deg/2} on internal degree p: i^p (exact)
    let half_rot: Vec<Scalar> = space
        .classes
        .iter()
        .map(|c| Scalar::i().pow_i(c.internal_deg))
        .collect();
    let lhs_a = gamma.diag_apply(&half_rot);
    let lhs_b = gamma.inv_pullback();
    let prod = datum.cup_elements(&lhs_a, &lhs_b)?;

    let rhs_full = todd.diag_apply(&two_pi_i_half_deg(&space, false));

    let mut out = Vec::new();
    for v in 0..datum.sectors.len() {
        let cls = space.classes_of_sector(v);
        if cls.is_empty() {
            continue;
        }
        // e^{pi i c1(pr^*V|_v)}: nilpotent exponential of a local degree-2 class
        let c1_local = kclass.c1_on_sector(datum, v);
        let mut c1_global = CohElement::zero(space.clone());
        for (pos, &gi) in cls.iter().enumerate() {
            c1_global.coeffs[gi] = c1_local[pos]
                .mul(&Scalar::from_f64(crate::special::pi()))
                .mul(&Scalar::i());
        }
        let e_c1 = exp_nilpotent_class(datum, &c1_global);
        let age = kclass.age_on_sector(v);
        let e_age = Scalar::exp_pi_i(&age);

        let mut lhs_v = CohElement::zero(space.clone());
        for &gi in &cls {
            lhs_v.coeffs[gi] = prod.coeffs[gi].clone();
        }
        let lhs_v = datum.cup_elements(&lhs_v, &e_c1)?.scale(&e_age);

        let l_tw = kclass.twisted_rank_on_sector(v);
        if !l_tw.is_integer() {
            return Err(Error::Data("twisted rank is not an integer".into()));
        }
        let l_tw = l_tw.to_integer().to_i64().unwrap();
        let tp = Scalar::from_f64((2.0 * crate::special::pi()).powi(l_tw as i32))
            .mul(&Scalar::i().pow_i(l_tw));
        let mut rhs_v = CohElement::zero(space.clone());
        for &gi in &cls {
            rhs_v.coeffs[gi] = rhs_full.coeffs[gi].mul(&tp);
        }
        let residual = lhs_v.dist(&rhs_v);
        out.push((datum.sectors[v].label.clone(), residual));
    }
    Ok(out)
}

/// Outcome of the pi-rationality probe on one coefficient.
#[derive(Clone, Debug, PartialEq)]
pub enum PiRationality {
    /// coefficient = pi^k * (p/q) within tolerance.
    Rational { pi_power: i32, value: Rat },
    /// (coefficient / pi^k)^2 is rational (a quadratic cyclotomic ratio).
    SquareRational { pi_power: i32, square: Rat },
    Unrecognized,
}

fn recognize_rational(x: f64, max_den: i64, tol: f64) -> Option<Rat> {
    // continued-fraction expansion
    let mut a = x;
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, a.round() as i64, 1i64);
    a -= a.round();
    for _ in 0..32 {
        let approx = p1 as f64 / q1 as f64;
        if (approx - x).abs() <= tol * x.abs().max(1.0) {
            return Some(Rat::new(p1.into(), q1.into()));
        }
        if a.abs() < 1e-15 {
            break;
        }
        a = 1.0 / a;
        let digit = a.round() as i64;
        a -= a.round();
        let p2 = digit * p1 + p0;
        let q2 = digit * q1 + q0;
        if q2.abs() > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

/// Probe whether a (real) coefficient lies in the pi-cyclotomic subring:
/// tries coefficient / pi^k for k = 0..n as a small rational, then as a
/// square root of one. The Gamma-class of a holomorphic symplectic orbifold
/// is expected to land here; there is no complete algorithmic criterion, so
/// the probe reports what it recognizes.
pub fn pi_rationality_probe(coeff: &Scalar, max_pi_power: i32, tol: f64) -> PiRationality {
    let z = coeff.to_complex();
    if z.im.abs() > tol * z.norm().max(1.0) {
        return PiRationality::Unrecognized;
    }
    for k in 0..=max_pi_power {
        let reduced = z.re / crate::special::pi().powi(k);
        if let Some(r) = recognize_rational(reduced, 10_000, tol) {
            return PiRationality::Rational {
                pi_power: k,
                value: r,
            };
        }
        if let Some(r) = recognize_rational(reduced * reduced, 10_000, tol) {
            return PiRationality::SquareRational {
                pi_power: k,
                square: r,
            };
        }
    }
    PiRationality::Unrecognized
}

/// Localized view of a class (used in reports).
pub fn sector_components(x: &CohElement, datum: &OrbifoldDatum) -> Vec<(String, Vec<Scalar>)> {
    (0..datum.sectors.len())
        .map(|v| {
            (
                datum.sectors[v].label.clone(),
                localize(&x.space, v, &x.coeffs),
            )
        })
        .collect()
}
