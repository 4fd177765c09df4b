//! Galois (local monodromy) actions on cohomology and on the space of flat
//! sections, the z-monodromy, and validation of externally supplied
//! symplectic transforms between Givental spaces.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::gamma_frame::{exp_pi_i_mu, psi_map};
use crate::graded::{GradedSpace, Support};
use crate::kclass::KClass;
use crate::linalg::Mat;
use crate::orbifold::{LineBundle, OrbifoldDatum};
use crate::scalar::{rat_int, Rat, Scalar};

/// The cohomology-level Galois data of a line bundle xi: the linear part
/// dG and the affine shift of G on the untwisted degree-2 coordinates.
#[derive(Clone, Debug)]
pub struct GaloisAction {
    pub name: String,
    /// Sector scaling diag(e^{2 pi i f_v}) on the ordinary space.
    pub dg: Mat,
    /// Translation part of G: tau_{0,2} -> tau_{0,2} - 2 pi i xi_0.
    pub shift: Vec<Scalar>,
}

pub fn galois_action(datum: &OrbifoldDatum, xi: &LineBundle) -> GaloisAction {
    let n = datum.ordinary.dim();
    let mut dg = Mat::zeros(n, n);
    for (i, c) in datum.ordinary.classes.iter().enumerate() {
        dg[(i, i)] = Scalar::root_of_unity(&xi.f[c.sector]);
    }
    let m2pii = Scalar::from_f64(-2.0 * crate::special::pi()).mul(&Scalar::i());
    let shift = xi.xi0.iter().map(|c| c.mul(&m2pii)).collect();
    GaloisAction {
        name: xi.name.clone(),
        dg,
        shift,
    }
}

fn exp_m2pii_cup(datum: &OrbifoldDatum, xi0: &[Scalar], support: Support) -> Mat {
    let cup = match support {
        Support::Ordinary => datum.cup_by_ordinary(xi0),
        Support::Compact => datum.cup_on_compact(xi0),
    };
    let m2pii = Scalar::from_f64(-2.0 * crate::special::pi()).mul(&Scalar::i());
    let mut out = Mat::identity(cup.rows);
    let mut term = Mat::identity(cup.rows);
    for k in 1..=(datum.dim.max(1) as usize + 1) {
        term = term.matmul(&cup);
        if term.is_zero_within(0.0) {
            break;
        }
        term = term.scale(&m2pii.mul(&Scalar::from_rat(Rat::new(1.into(), (k as i64).into()))));
        out = out.add(&term);
    }
    out
}

/// The Galois action on flat sections in the cohomology framing:
/// alpha -> (+)_v e^{-2 pi i xi_0} e^{2 pi i f_v(xi)} alpha.
pub fn galois_on_sol(datum: &OrbifoldDatum, xi_name: &str) -> Result<Mat> {
    let xi = datum.line_bundle(xi_name)?.clone();
    Ok(galois_on_sol_of(datum, &xi, Support::Ordinary))
}

/// Same action on a chosen support (the compactly supported solution space
/// carries the same formula).
pub fn galois_on_sol_of(datum: &OrbifoldDatum, xi: &LineBundle, support: Support) -> Mat {
    let space = match support {
        Support::Ordinary => &datum.ordinary,
        Support::Compact => &datum.csupp,
    };
    let e = exp_m2pii_cup(datum, &xi.xi0, support);
    let mut diag = Mat::zeros(space.dim(), space.dim());
    for (i, c) in space.classes.iter().enumerate() {
        diag[(i, i)] = Scalar::root_of_unity(&xi.f[c.sector]);
    }
    diag.matmul(&e)
}

/// The Sol-pairing matrix (e^{pi i rho} phi_i, e^{pi i mu} phi_j)_orb; rows
/// run over the compactly supported basis on non-compact data.
pub fn sol_pairing_matrix(datum: &OrbifoldDatum) -> Mat {
    let rho_c = {
        let cup = datum.cup_on_compact(&datum.c1);
        let pii = Scalar::from_f64(crate::special::pi()).mul(&Scalar::i());
        let mut out = Mat::identity(cup.rows);
        let mut term = Mat::identity(cup.rows);
        for k in 1..=(datum.dim.max(1) as usize + 1) {
            term = term.matmul(&cup);
            if term.is_zero_within(0.0) {
                break;
            }
            term = term.scale(&pii.mul(&Scalar::from_rat(Rat::new(1.into(), (k as i64).into()))));
            out = out.add(&term);
        }
        out
    };
    let mu = exp_pi_i_mu(datum, &datum.ordinary);
    let rows = datum.csupp.dim();
    let cols = datum.ordinary.dim();
    let mut s = Mat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            // (e^{pi i rho} phi^c_i, e^{pi i mu} phi_j)
            let mut acc = Scalar::zero();
            for k in 0..rows {
                if rho_c[(k, i)].is_zero() {
                    continue;
                }
                // pairing row k against column j scaled by mu_j
                acc = acc.add(&rho_c[(k, i)].mul(&datum.pairing[(k, j)]));
            }
            s[(i, j)] = acc.mul(&mu[j]);
        }
    }
    s
}

/// The z-monodromy M = (-1)^n e^{-2 pi i rho} (+)_v e^{2 pi i iota_v} acting
/// on the cohomology framing of flat sections.
pub fn z_monodromy(datum: &OrbifoldDatum) -> Mat {
    let e = exp_m2pii_cup(datum, &datum.c1, Support::Ordinary);
    let n = datum.ordinary.dim();
    let mut diag = Mat::zeros(n, n);
    for (i, c) in datum.ordinary.classes.iter().enumerate() {
        diag[(i, i)] = Scalar::root_of_unity(&datum.sectors[c.sector].age);
    }
    let sign = Scalar::from_int(if datum.dim % 2 == 0 { 1 } else { -1 });
    e.matmul(&diag).scale(&sign)
}

/// Verify Psi(L_xi^dual (x) V) = G^Sol(xi) Psi(V) at the cohomology level.
pub fn tensor_line_bundle_check(
    datum: &OrbifoldDatum,
    xi_name: &str,
    v: &KClass,
    tol: f64,
) -> Result<(bool, f64)> {
    let xi = datum.line_bundle(xi_name)?.clone();
    let l = KClass::line_bundle(datum, xi_name)?;
    let twisted = l.dual(datum).tensor(v, datum)?;
    let lhs = psi_map(&twisted, datum)?.psi;
    let psi_v = psi_map(v, datum)?.psi;
    let g = galois_on_sol_of(datum, &xi, psi_v.space.support);
    let rhs = g.apply(&psi_v.coeffs);
    let residual = lhs
        .coeffs
        .iter()
        .zip(rhs.iter())
        .map(|(a, b)| a.dist(b))
        .fold(0.0, f64::max);
    Ok((residual <= tol, residual))
}

/// k0 = lcm of the denominators of the f_v(xi) weights (the order of the
/// Galois action on the graded pieces).
pub fn galois_order(datum: &OrbifoldDatum, xi_name: &str) -> Result<i64> {
    let xi = datum.line_bundle(xi_name)?;
    let mut k0: i64 = 1;
    for f in &xi.f {
        let den = f.denom().to_i64().ok_or_else(|| Error::Data("denominator overflow".into()))?;
        k0 = k0.lcm(&den);
    }
    Ok(k0)
}

// ---------------------------------------------------------------------------
// External symplectic transforms
// ---------------------------------------------------------------------------

/// Matrix with Laurent-polynomial entries in z, mapping the Givental space of
/// datum 1 into that of datum 2.
#[derive(Clone, Debug)]
pub struct ExternalTransform {
    /// z^k -> coefficient matrix (rows over datum-2 basis, cols over datum-1).
    pub terms: BTreeMap<i32, Mat>,
    pub rows: usize,
    pub cols: usize,
}

impl ExternalTransform {
    pub fn identity(n: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(0, Mat::identity(n));
        ExternalTransform {
            terms,
            rows: n,
            cols: n,
        }
    }

    pub fn from_json(json: &crate::io::TransformJson) -> Result<Self> {
        let rows = json.matrix.len();
        let cols = json
            .matrix
            .first()
            .map(|r| r.len())
            .ok_or_else(|| Error::schema("$.matrix", "empty matrix"))?;
        if json.matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::schema("$.matrix", "ragged matrix"));
        }
        let mut terms: BTreeMap<i32, Mat> = BTreeMap::new();
        for (i, row) in json.matrix.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                for t in entry {
                    let path = format!("$.matrix[{}][{}]", i, j);
                    let val = t.1.to_scalar(&path)?;
                    let m = terms
                        .entry(t.0)
                        .or_insert_with(|| Mat::zeros(rows, cols));
                    m[(i, j)] = m[(i, j)].add(&val);
                }
            }
        }
        Ok(ExternalTransform { terms, rows, cols })
    }

    fn negate_z(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, m)| {
                let s = if k.rem_euclid(2) == 0 { 1 } else { -1 };
                (*k, m.scale(&Scalar::from_int(s)))
            })
            .collect();
        ExternalTransform {
            terms,
            rows: self.rows,
            cols: self.cols,
        }
    }

    fn compose_mats(a: &BTreeMap<i32, Mat>, b: &BTreeMap<i32, Mat>) -> BTreeMap<i32, Mat> {
        let mut out: BTreeMap<i32, Mat> = BTreeMap::new();
        for (ka, ma) in a {
            for (kb, mb) in b {
                let prod = ma.matmul(mb);
                match out.entry(ka + kb) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(prod);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let s = e.get().add(&prod);
                        e.insert(s);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct TransformReport {
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl TransformReport {
    fn push(&mut self, name: &str, residual: f64, tol: f64) {
        let pass = residual <= tol;
        self.pass &= pass;
        self.checks.push(CheckResult {
            name: name.into(),
            residual,
            pass,
        });
    }
}

/// Validate the declared properties of an analytic-continuation transform:
/// commutation with c1, preservation of the fractional-age decomposition,
/// degree preservation z^{-mu_2} U_coh z^{mu_1}, pairing preservation, and
/// commutation with supplied pullback pairs.
pub fn validate_transform(
    u: &ExternalTransform,
    d1: &OrbifoldDatum,
    d2: &OrbifoldDatum,
    pullback_pairs: &[(Mat, Mat)],
    tol: f64,
) -> Result<TransformReport> {
    if u.cols != d1.ordinary.dim() || u.rows != d2.ordinary.dim() {
        return Err(Error::Shape(format!(
            "transform is {}x{} but the spaces have dimensions {} and {}",
            u.rows,
            u.cols,
            d2.ordinary.dim(),
            d1.ordinary.dim()
        )));
    }
    let mut report = TransformReport {
        checks: Vec::new(),
        pass: true,
    };

    // (rho) U rho_1 = rho_2 U
    let r1 = d1.cup_by_ordinary(&d1.c1);
    let r2 = d2.cup_by_ordinary(&d2.c1);
    let mut rho_res: f64 = 0.0;
    for m in u.terms.values() {
        let diff = r2.matmul(m).sub(&m.matmul(&r1));
        rho_res = rho_res.max(diff.max_abs());
    }
    report.push("rho_commutation", rho_res, tol);

    // (f-part) entries couple only classes with equal fractional age
    let frac = |space: &GradedSpace, i: usize| -> Rat {
        let half = space.classes[i].cr_deg.clone() / rat_int(2);
        half.clone() - half.floor()
    };
    let mut f_res: f64 = 0.0;
    for m in u.terms.values() {
        for i in 0..u.rows {
            for j in 0..u.cols {
                if m[(i, j)].is_zero() {
                    continue;
                }
                if frac(&d2.ordinary, i) != frac(&d1.ordinary, j) {
                    f_res = f_res.max(m[(i, j)].abs());
                }
            }
        }
    }
    report.push("f_part_preserved", f_res, tol);

    // (degree) z^{mu_2} U z^{-mu_1} must be z-free: every nonzero entry sits
    // at z-power (mu_1(j) - mu_2(i))
    let mu1 = d1.mu_diag(&d1.ordinary);
    let mu2 = d2.mu_diag(&d2.ordinary);
    let mut deg_res: f64 = 0.0;
    for (k, m) in &u.terms {
        for i in 0..u.rows {
            for j in 0..u.cols {
                if m[(i, j)].is_zero() {
                    continue;
                }
                let want = mu1[j].clone() - mu2[i].clone();
                if want != rat_int(*k as i64) {
                    deg_res = deg_res.max(m[(i, j)].abs());
                }
            }
        }
    }
    report.push("degree_preserved", deg_res, tol);

    // (pairing) U(-z)^T P2 U(z) = P1
    let um = u.negate_z();
    let p2 = &d2.pairing;
    let lhs: BTreeMap<i32, Mat> = {
        let mut p2u: BTreeMap<i32, Mat> = BTreeMap::new();
        for (k, m) in &u.terms {
            p2u.insert(*k, p2.matmul(m));
        }
        let umt: BTreeMap<i32, Mat> = um
            .terms
            .iter()
            .map(|(k, m)| (*k, m.transpose()))
            .collect();
        ExternalTransform::compose_mats(&umt, &p2u)
    };
    let mut pair_res: f64 = 0.0;
    for (k, m) in &lhs {
        let diff = if *k == 0 { m.sub(&d1.pairing) } else { m.clone() };
        pair_res = pair_res.max(diff.max_abs());
    }
    report.push("pairing_preserved", pair_res, tol);

    // (pullbacks) U (pi_1^* a) = (pi_2^* a) U for each supplied pair
    let mut pb_res: f64 = 0.0;
    for (a1, a2) in pullback_pairs {
        for m in u.terms.values() {
            let diff = a2.matmul(m).sub(&m.matmul(a1));
            pb_res = pb_res.max(diff.max_abs());
        }
    }
    report.push("pullback_commutation", pb_res, tol);

    Ok(report)
}
