//! The truncated quantum D-module engine: quantum products built from
//! correlator tables, WDVV and flatness diagnostics, the fundamental solution
//! L(tau, z) solved order by order, the J-function, opposite-subspace
//! projection to flat coordinates, and the residual F-manifold product.
//!
//! Series live in the reduced variables: the unit coordinate t^0 and the
//! untwisted degree-2 coordinates enter through the exponential prefactor
//! exp(-(t^0 + tau_{0,2})/z), which multiplies every fundamental solution on
//! the right; the divisor equation turns the degree-2 directions into the
//! q-variables carried explicitly by the series.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graded::{CohElement, Support};
use crate::io::CorrelatorTableJson;
use crate::linalg::Mat;
use crate::orbifold::OrbifoldDatum;
use crate::scalar::{parse_rat, rat_int, Rat, Scalar};
use crate::series::{MSeries, Mono, Series, VSeries, VarSet};

// ---------------------------------------------------------------------------
// Canonical insertion indices
// ---------------------------------------------------------------------------

/// Correlator insertions are indexed over the ordinary basis followed by the
/// compactly supported classes that are not canonically identified with an
/// ordinary class (point sectors carry the identification).
#[derive(Clone, Debug)]
pub struct CanonicalIndex {
    pub ordinary_dim: usize,
    /// csupp index -> canonical index.
    pub of_csupp: Vec<usize>,
    /// extended canonical slots -> csupp index.
    pub extended: Vec<usize>,
}

pub fn canonical_index(datum: &OrbifoldDatum) -> CanonicalIndex {
    let n = datum.ordinary.dim();
    if datum.compact {
        return CanonicalIndex {
            ordinary_dim: n,
            of_csupp: (0..n).collect(),
            extended: Vec::new(),
        };
    }
    let mut of_csupp = Vec::new();
    let mut extended = Vec::new();
    for (c, info) in datum.csupp.classes.iter().enumerate() {
        if datum.sectors[info.sector].dim_v == 0 {
            let o = datum
                .ordinary
                .classes_of_sector(info.sector)
                .into_iter()
                .next()
                .expect("point sector has an ordinary class");
            of_csupp.push(o);
        } else {
            of_csupp.push(n + extended.len());
            extended.push(c);
        }
    }
    CanonicalIndex {
        ordinary_dim: n,
        of_csupp,
        extended,
    }
}

impl CanonicalIndex {
    pub fn count(&self) -> usize {
        self.ordinary_dim + self.extended.len()
    }

    pub fn cr_degree(&self, datum: &OrbifoldDatum, k: usize) -> Rat {
        if k < self.ordinary_dim {
            datum.ordinary.classes[k].cr_deg.clone()
        } else {
            datum.csupp.classes[self.extended[k - self.ordinary_dim]]
                .cr_deg
                .clone()
        }
    }

    /// csupp index a canonical slot refers to, when it names a compactly
    /// supported class (every slot does: ordinary slots of point sectors are
    /// simultaneously the compact unit).
    pub fn csupp_of(&self, k: usize) -> Option<usize> {
        self.of_csupp.iter().position(|&x| x == k)
    }
}

// ---------------------------------------------------------------------------
// Correlator tables
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CorrelatorTable {
    /// (sorted canonical insertions, degree vector) -> value.
    pub entries: HashMap<(Vec<usize>, Vec<i64>), Scalar>,
    pub nef_rank: usize,
    pub tau_complete: u32,
    pub q_complete: u32,
}

impl CorrelatorTable {
    pub fn from_json(json: &CorrelatorTableJson, datum: &OrbifoldDatum) -> Result<Self> {
        if json.nef_basis != datum.h2_untwisted.len() {
            return Err(Error::Data(format!(
                "table declares nef rank {} but the datum has {} untwisted degree-2 classes",
                json.nef_basis,
                datum.h2_untwisted.len()
            )));
        }
        if json.divisor_reduced == Some(false) {
            return Err(Error::Data(
                "only divisor-reduced correlator tables are supported".into(),
            ));
        }
        let canon = canonical_index(datum);
        // c1 in nef coordinates for the homogeneity filter
        let c1_nef: Vec<Rat> = datum
            .h2_untwisted
            .iter()
            .map(|&i| datum.c1[i].as_rational().unwrap_or_else(Rat::zero))
            .collect();
        let mut entries = HashMap::new();
        for (ei, e) in json.entries.iter().enumerate() {
            if e.d.len() != json.nef_basis {
                return Err(Error::schema(
                    format!("$.entries[{}].d", ei),
                    "degree vector length mismatch",
                ));
            }
            if e.d.iter().any(|&x| x < 0) {
                return Err(Error::schema(
                    format!("$.entries[{}].d", ei),
                    "effective degrees must be non-negative in the nef basis",
                ));
            }
            if e.insertions.len() < 3 {
                return Err(Error::schema(
                    format!("$.entries[{}]", ei),
                    "correlators need at least three insertions",
                ));
            }
            let value = parse_rat(&e.value).map(Scalar::from_rat).ok_or_else(|| {
                Error::schema(format!("$.entries[{}].value", ei), "expected a rational")
            })?;
            let mut ins = e.insertions.clone();
            for &i in &ins {
                if i >= canon.count() {
                    return Err(Error::schema(
                        format!("$.entries[{}].insertions", ei),
                        format!("index {} out of range (canonical count {})", i, canon.count()),
                    ));
                }
            }
            ins.sort_unstable();
            // homogeneity: sum deg = 2(n + <c1, d> + m - 3)
            let degsum: Rat = ins.iter().map(|&i| canon.cr_degree(datum, i)).sum();
            let c1d: Rat = c1_nef
                .iter()
                .zip(e.d.iter())
                .map(|(c, &d)| c.clone() * rat_int(d))
                .sum();
            let expect =
                rat_int(2) * (rat_int(datum.dim) + c1d + rat_int(ins.len() as i64) - rat_int(3));
            if !value.is_zero() && degsum != expect {
                return Err(Error::Data(format!(
                    "correlator entry {} violates the degree axiom: degree sum {} but homogeneity demands {}",
                    ei, degsum, expect
                )));
            }
            entries.insert((ins, e.d.clone()), value);
        }
        Ok(CorrelatorTable {
            entries,
            nef_rank: json.nef_basis,
            tau_complete: json.complete_to.tau_order,
            q_complete: json.complete_to.q_order,
        })
    }

    /// Correlator value for an insertion multiset and curve degree (zero when absent).
    pub fn get(&self, ins: &[usize], d: &[i64]) -> Scalar {
        let mut key = ins.to_vec();
        key.sort_unstable();
        self.entries
            .get(&(key, d.to_vec()))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }
}

// ---------------------------------------------------------------------------
// Variable layout
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct QdmVars {
    /// Ordinary class index of the unit coordinate (prefactor direction).
    pub unit_class: usize,
    /// Ordinary class indices of the reduced tau coordinates, aligned with
    /// the leading variables of `vars`.
    pub tau_classes: Vec<usize>,
    /// Ordinary class indices of the q-directions (untwisted degree 2).
    pub q_classes: Vec<usize>,
    pub vars: Arc<VarSet>,
    pub order: u32,
}

impl QdmVars {
    pub fn new(datum: &OrbifoldDatum, order: u32) -> QdmVars {
        let unit_class = datum
            .ordinary
            .classes
            .iter()
            .position(|c| c.sector == 0 && c.internal_deg == 0)
            .expect("unit class");
        let q_classes = datum.h2_untwisted.clone();
        let mut tau_classes = Vec::new();
        let mut names = Vec::new();
        for (i, c) in datum.ordinary.classes.iter().enumerate() {
            if i == unit_class || q_classes.contains(&i) {
                continue;
            }
            tau_classes.push(i);
            let stem = c.name.strip_prefix("1_").unwrap_or(&c.name);
            names.push(format!("t_{}", stem));
        }
        for (a, _) in q_classes.iter().enumerate() {
            names.push(format!("q{}", a + 1));
        }
        // z-window: Lo = D + 2, Hi = 1
        let vars = VarSet::new(names, order, order + 2, 1);
        QdmVars {
            unit_class,
            tau_classes,
            q_classes,
            vars,
            order,
        }
    }

    pub fn tau_var(&self, k: usize) -> usize {
        k
    }

    pub fn q_var(&self, a: usize) -> usize {
        self.tau_classes.len() + a
    }

    pub fn mono_unit(&self) -> Mono {
        Mono::unit(self.vars.nvars())
    }
}

// ---------------------------------------------------------------------------
// Quantum product
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct QuantumProduct {
    pub vars: QdmVars,
    /// mats[i]: the matrix series of phi_i o_tau acting on the ordinary space.
    pub mats: Vec<MSeries>,
}

impl QuantumProduct {
    pub fn matrix_of(&self, x: &[Scalar]) -> MSeries {
        let mut out = Series::zero(self.vars.vars.clone());
        for (i, c) in x.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            out = out.add(&self.mats[i].scale(c));
        }
        out
    }

    /// phi_i o phi_j as a cohomology-valued series.
    pub fn product_basis(&self, i: usize, j: usize) -> VSeries {
        let n = self.mats.len();
        let mut ej = vec![Scalar::zero(); n];
        ej[j] = Scalar::one();
        self.mats[i].apply_vec(&ej)
    }
}

/// Build the quantum product from a correlator table: the structure constants
/// (phi_i o phi_j, gamma) = sum (1/m!) <phi_i, phi_j, gamma, tau', ...>
/// e^{<tau02, d>} Q^d, with indices raised by the Poincare pairing.
pub fn quantum_product(
    table: &CorrelatorTable,
    datum: &OrbifoldDatum,
    order: u32,
) -> Result<QuantumProduct> {
    let vars = QdmVars::new(datum, order);
    table_adequate(table, datum, &vars, order)?;
    let canon = canonical_index(datum);
    let n = datum.ordinary.dim();
    let ncs = datum.csupp.dim();
    let p_inv = datum
        .pairing
        .inverse()
        .map_err(|_| Error::DegeneratePairing("orbifold Poincare pairing".into()))?;

    // tau-class index by canonical slot (for M-leg recognition)
    let tau_pos: HashMap<usize, usize> = vars
        .tau_classes
        .iter()
        .enumerate()
        .map(|(k, &c)| (c, k))
        .collect();

    // accumulate g[i][j] : csupp-row-indexed coefficient series
    let mut g: HashMap<(usize, usize), HashMap<Mono, Vec<Scalar>>> = HashMap::new();

    for ((ins, d), value) in &table.entries {
        if value.is_zero() {
            continue;
        }
        let qdeg: i64 = d.iter().sum();
        if qdeg > order as i64 {
            continue;
        }
        // distinct selections of (i, j, gamma) from the multiset
        let mut distinct = ins.clone();
        distinct.dedup();
        for &i in &distinct {
            if i >= n {
                continue; // i must be ordinary
            }
            let mut rest1 = ins.clone();
            remove_one(&mut rest1, i);
            let mut d1 = rest1.clone();
            d1.dedup();
            for &j in &d1 {
                if j >= n || j < i {
                    continue; // unordered pair, fill (i, j) and mirror below
                }
                let mut rest2 = rest1.clone();
                remove_one(&mut rest2, j);
                let mut d2 = rest2.clone();
                d2.dedup();
                for &gamma in &d2 {
                    let Some(cs_row) = canon.csupp_of(gamma) else {
                        continue; // gamma must name a compactly supported class
                    };
                    let mut legs = rest2.clone();
                    remove_one(&mut legs, gamma);
                    // all legs must be reduced tau-coordinates
                    let mut mono = vars.mono_unit();
                    let mut ok = true;
                    let mut sym = Rat::one();
                    let mut mult_count: HashMap<usize, u64> = HashMap::new();
                    for &l in &legs {
                        match tau_pos.get(&l) {
                            Some(&k) => {
                                mono.exps[vars.tau_var(k)] += 1;
                                let c = mult_count.entry(l).or_insert(0);
                                *c += 1;
                                sym *= rat_int(*c as i64);
                            }
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if !ok {
                        continue;
                    }
                    if mono.total_deg() + qdeg as u32 > order {
                        continue;
                    }
                    for (a, &da) in d.iter().enumerate() {
                        mono.exps[vars.q_var(a)] += da as u16;
                    }
                    let coeff = value.div(&Scalar::from_rat(sym));
                    let slot = g.entry((i, j)).or_default();
                    let vecs = slot
                        .entry(mono.clone())
                        .or_insert_with(|| vec![Scalar::zero(); ncs]);
                    vecs[cs_row] = vecs[cs_row].add(&coeff);
                }
            }
        }
    }

    // raise indices and assemble the matrices A_i
    let mut mats: Vec<MSeries> = (0..n).map(|_| Series::zero(vars.vars.clone())).collect();
    for ((i, j), series) in g {
        for (mono, gv) in series {
            let col = p_inv.apply(&gv);
            for (target_i, target_j) in [(i, j), (j, i)] {
                if target_i == target_j && i != j {
                    continue;
                }
                let slot = &mut mats[target_i];
                let mut m = Mat::zeros(n, n);
                for (r, c) in col.iter().enumerate() {
                    m[(r, target_j)] = c.clone();
                }
                slot.add_term(mono.clone(), m);
                if i == j {
                    break;
                }
            }
        }
    }
    // the unit direction multiplies by the identity (string equation)
    let unit = vars.unit_class;
    mats[unit] = Series::identity(vars.vars.clone(), n);
    let qp = QuantumProduct { vars, mats };
    // the unit must act as the identity at every order
    let id = Series::identity(qp.vars.vars.clone(), n);
    debug_assert!(qp.mats[unit].sub(&id).is_zero());
    Ok(qp)
}

fn remove_one(v: &mut Vec<usize>, x: usize) {
    let pos = v.iter().position(|&y| y == x).expect("element present");
    v.remove(pos);
}

/// Decide whether the declared completeness covers the requested order: an
/// uncovered leg count m / curve degree s pair is tolerable only when the
/// degree axiom already forces every such correlator to vanish (the demanded
/// degree sum exceeds what m+3 insertions can carry).
fn table_adequate(
    table: &CorrelatorTable,
    datum: &OrbifoldDatum,
    vars: &QdmVars,
    order: u32,
) -> Result<()> {
    let canon = canonical_index(datum);
    let max_cr: Rat = (0..canon.count())
        .map(|k| canon.cr_degree(datum, k))
        .max()
        .unwrap_or_else(Rat::zero);
    let min_c1: Rat = datum
        .h2_untwisted
        .iter()
        .map(|&i| datum.c1[i].as_rational().unwrap_or_else(Rat::zero))
        .min()
        .unwrap_or_else(Rat::zero);
    let has_tau = !vars.tau_classes.is_empty();
    let has_q = !vars.q_classes.is_empty();
    for m in 0..=order {
        if m > 0 && !has_tau {
            continue;
        }
        for s in 0..=(order - m) {
            if s > 0 && !has_q {
                continue;
            }
            let covered = m <= table.tau_complete && s <= table.q_complete;
            if covered {
                continue;
            }
            // the degree axiom demands sum deg = 2(n + <c1,d> + m); m+3
            // insertions carry at most max_cr each
            let demanded = rat_int(2)
                * (rat_int(datum.dim) + min_c1.clone() * rat_int(s as i64) + rat_int(m as i64));
            let capacity = max_cr.clone() * rat_int(m as i64 + 3);
            if demanded <= capacity {
                return Err(Error::MissingCorrelators(format!(
                    "order {} needs correlators with {} extra legs at curve degree {}, \
                     beyond the declared completeness (tau {}, q {})",
                    order, m, s, table.tau_complete, table.q_complete
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// WDVV
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct WdvvReport {
    pub max_residual: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub pass: bool,
}

/// Associativity coefficient-wise: the operators phi_i o_tau commute.
pub fn wdvv_check(qp: &QuantumProduct, tol: f64) -> WdvvReport {
    let n = qp.mats.len();
    let mut max_residual: f64 = 0.0;
    let mut worst = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = qp.mats[i]
                .matmul(&qp.mats[j])
                .sub(&qp.mats[j].matmul(&qp.mats[i]));
            let r = c.max_abs();
            if r > max_residual {
                max_residual = r;
                worst = Some((i, j));
            }
        }
    }
    WdvvReport {
        max_residual,
        worst_pair: worst,
        pass: max_residual <= tol,
    }
}

// ---------------------------------------------------------------------------
// Euler field and grading
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EulerField {
    /// c1(TX) over the ordinary basis.
    pub rho: Vec<Scalar>,
    /// Weight (1 - deg/2) of every ordinary coordinate.
    pub weights: Vec<Rat>,
    /// c1 in nef coordinates (pairing with curve degrees).
    pub c1_nef: Vec<Rat>,
}

pub fn euler_field(datum: &OrbifoldDatum) -> EulerField {
    let weights = datum
        .ordinary
        .classes
        .iter()
        .map(|c| Rat::one() - c.cr_deg.clone() / rat_int(2))
        .collect();
    let c1_nef = datum
        .h2_untwisted
        .iter()
        .map(|&i| datum.c1[i].as_rational().unwrap_or_else(Rat::zero))
        .collect();
    EulerField {
        rho: datum.c1.clone(),
        weights,
        c1_nef,
    }
}

impl EulerField {
    /// The derivation E acting on a monomial: sum of coordinate weights plus
    /// the pairing of c1 with the curve degree.
    pub fn monomial_weight(&self, qv: &QdmVars, m: &Mono) -> Rat {
        let mut w = Rat::zero();
        for (k, &cls) in qv.tau_classes.iter().enumerate() {
            let e = m.exps[qv.tau_var(k)];
            if e > 0 {
                w += self.weights[cls].clone() * rat_int(e as i64);
            }
        }
        for (a, c1a) in self.c1_nef.iter().enumerate() {
            let e = m.exps[qv.q_var(a)];
            if e > 0 {
                w += c1a.clone() * rat_int(e as i64);
            }
        }
        w
    }

    pub fn derive<T: crate::series::Coeff>(&self, qv: &QdmVars, s: &Series<T>) -> Series<T> {
        let mut out = Series::zero(s.vars.clone());
        for (m, c) in &s.terms {
            let w = self.monomial_weight(qv, m);
            if w.is_zero() {
                continue;
            }
            out.add_term(m.clone(), c.cscale(&Scalar::from_rat(w)));
        }
        out
    }
}

/// The matrix series of E o_tau (without the t^0-identity part, which the
/// reduced representation keeps in the prefactor).
pub fn euler_matrix(qp: &QuantumProduct, ef: &EulerField) -> MSeries {
    let mut u = qp.matrix_of(&ef.rho);
    for (k, &cls) in qp.vars.tau_classes.iter().enumerate() {
        let w = ef.weights[cls].clone();
        if w.is_zero() {
            continue;
        }
        // t^i * A_i
        let mut shifted = Series::zero(qp.vars.vars.clone());
        for (m, mat) in &qp.mats[cls].terms {
            let mut m2 = m.clone();
            m2.exps[qp.vars.tau_var(k)] += 1;
            shifted.add_term(m2, mat.clone());
        }
        u = u.add(&shifted.scale(&Scalar::from_rat(w)));
    }
    u
}

// ---------------------------------------------------------------------------
// Dubrovin connection and flatness
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct Connection<'a> {
    pub datum: &'a OrbifoldDatum,
    pub qp: QuantumProduct,
    /// Matrices of the dual product (phi_i o)^dagger on the compact side.
    pub dual_mats: Vec<MSeries>,
    pub euler: EulerField,
    pub euler_mat: MSeries,
    /// mu eigenvalues over the ordinary basis.
    pub mu: Vec<Rat>,
}

pub fn connection<'a>(datum: &'a OrbifoldDatum, qp: QuantumProduct) -> Result<Connection<'a>> {
    let p = &datum.pairing;
    let p_inv = p.inverse()?;
    // (A)^dagger = (P A P^{-1})^T on the compact side
    let dual_mats = qp
        .mats
        .iter()
        .map(|s| s.map(|m| p.matmul(m).matmul(&p_inv).transpose()))
        .collect();
    let euler = euler_field(datum);
    let euler_mat = euler_matrix(&qp, &euler);
    let mu = datum.mu_diag(&datum.ordinary);
    Ok(Connection {
        datum,
        qp,
        dual_mats,
        euler,
        euler_mat,
        mu,
    })
}

impl<'a> Connection<'a> {
    fn mu_mat(&self) -> Mat {
        let n = self.mu.len();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::from_rat(self.mu[i].clone());
        }
        m
    }

    /// Partial derivative of a matrix series in the direction of ordinary
    /// class `cls` (tau-coordinates differentiate, q-coordinates apply q d/dq).
    fn derive_dir(&self, s: &MSeries, cls: usize) -> MSeries {
        if let Some(k) = self.qp.vars.tau_classes.iter().position(|&c| c == cls) {
            s.d_dt(self.qp.vars.tau_var(k))
        } else if let Some(a) = self.qp.vars.q_classes.iter().position(|&c| c == cls) {
            s.q_d_dq(self.qp.vars.q_var(a))
        } else {
            Series::zero(s.vars.clone())
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlatnessReport {
    /// max residual of d_i A_j - d_j A_i.
    pub curl: f64,
    /// max residual of [A_i, A_j].
    pub commutators: f64,
    /// max residual of A_i + [A_i, mu] - d_i U at order z^{-1}.
    pub z_order1: f64,
    /// max residual of [U, A_i] at order z^{-2}.
    pub z_order2: f64,
    pub pass: bool,
}

/// Coefficient-wise flatness of the Dubrovin connection within the window.
pub fn connection_flatness(conn: &Connection, tol: f64) -> FlatnessReport {
    let qp = &conn.qp;
    let dirs: Vec<usize> = qp
        .vars
        .tau_classes
        .iter()
        .chain(qp.vars.q_classes.iter())
        .copied()
        .collect();
    let mut curl: f64 = 0.0;
    let mut comms: f64 = 0.0;
    for (x, &i) in dirs.iter().enumerate() {
        for &j in dirs.iter().skip(x + 1) {
            let c1 = conn
                .derive_dir(&qp.mats[j], i)
                .sub(&conn.derive_dir(&qp.mats[i], j));
            curl = curl.max(c1.max_abs());
            let c2 = qp.mats[i].matmul(&qp.mats[j]).sub(&qp.mats[j].matmul(&qp.mats[i]));
            comms = comms.max(c2.max_abs());
        }
    }
    let mu = Series::constant(qp.vars.vars.clone(), conn.mu_mat());
    let mut z1: f64 = 0.0;
    let mut z2: f64 = 0.0;
    for &i in &dirs {
        let a = &qp.mats[i];
        let term = a
            .add(&a.matmul(&mu).sub(&mu.matmul(a)))
            .sub(&conn.derive_dir(&conn.euler_mat, i));
        z1 = z1.max(term.max_abs());
        let term2 = conn.euler_mat.matmul(a).sub(&a.matmul(&conn.euler_mat));
        z2 = z2.max(term2.max_abs());
    }
    FlatnessReport {
        curl,
        commutators: comms,
        z_order1: z1,
        z_order2: z2,
        pass: curl.max(comms).max(z1).max(z2) <= tol,
    }
}

// ---------------------------------------------------------------------------
// Fundamental solution
// ---------------------------------------------------------------------------

/// Reduced fundamental solutions: L(tau,z) = reduced * exp(-(t^0 +
/// tau_{0,2})/z) and likewise for the dual solution on the compact side.
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    pub l: MSeries,
    pub l_dual: MSeries,
}

fn solve_system(
    vars: &QdmVars,
    mats: &[MSeries],
    cup_q: &[Mat],
    dim: usize,
) -> Result<MSeries> {
    let vs = vars.vars.clone();
    let ntau = vars.tau_classes.len();
    let nq = vars.q_classes.len();
    let mut l: HashMap<Mono, Mat> = HashMap::new();
    l.insert(Mono::unit(vs.nvars()), Mat::identity(dim));

    // enumerate monomials by total degree
    let mut frontier: Vec<Vec<Mono>> = vec![vec![Mono::unit(vs.nvars())]];
    for k in 1..=vars.order {
        let mut level = Vec::new();
        enumerate_monomials(vs.nvars(), k as usize, &mut level);
        frontier.push(level);
    }

    for k in 1..=vars.order as usize {
        let level = frontier[k].clone();
        for m in level {
            // choose a resolving direction
            let tau_dir = (0..ntau).find(|&i| m.exps[vars.tau_var(i)] > 0);
            if let Some(i) = tau_dir {
                // d_i L = -z^{-1} A_i L: (M_i) L_m = -z^{-1} [A_i L]_{m - e_i}
                let mut m_prev = m.clone();
                m_prev.exps[vars.tau_var(i)] -= 1;
                let mult = m.exps[vars.tau_var(i)] as i64;
                let rhs = convolve_at(&mats[vars.tau_classes[i]], &l, &m_prev, &vs, dim);
                for (zh, mat) in rhs {
                    let zh_new = zh - 2;
                    if zh_new < vs.z_min_h || zh_new > vs.z_max_h {
                        continue;
                    }
                    let mut key = m.clone();
                    key.zh = zh_new;
                    let scaled = mat.scale(&Scalar::from_rat(rat_int(-1) / rat_int(mult)));
                    merge_mat(&mut l, key, scaled);
                }
            } else {
                // pure q-monomial: d_a L = -z^{-1}(A_a L - L p_a)
                let a = (0..nq)
                    .find(|&a| m.exps[vars.q_var(a)] > 0)
                    .expect("nonzero monomial");
                let da = m.exps[vars.q_var(a)] as i64;
                // R_m = -z^{-1} sum_{m1 != 0} A_a^{(m1)} L^{(m - m1)}
                let mut full = convolve_at(&mats[vars.q_classes[a]], &l, &m, &vs, dim);
                // remove the constant-term part A_a^{(0)} L_m (unknown): L_m
                // unknown not yet inserted, so convolve_at already excludes it;
                // but the constant matrix p_a також multiplies known L-terms of
                // the same monomial only through m1 = 0, which is excluded by
                // the absence of L_m. Known lower terms with m1 = 0 do not
                // exist since their monomial would be m itself.
                // add +z^{-1} L_m-independent part of L p_a: [L p_a]_{m} over
                // known terms equals L_m p_a only; L_m unknown, so nothing to add.
                let _ = &mut full;
                // Solve (da + z^{-1} ad_{p_a}) L_m = -z^{-1} R'_m where R'_m
                // collects the known convolution.
                let pa = &cup_q[a];
                // assemble rhs by z-power: rhs(zh) from full shifted by -2
                let mut rhs: HashMap<i32, Mat> = HashMap::new();
                for (zh, mat) in full {
                    let zh_new = zh - 2;
                    if zh_new < vs.z_min_h - 2 * (dim as i32 + 2) {
                        continue;
                    }
                    rhs.entry(zh_new)
                        .and_modify(|x| *x = x.add(&mat.scale(&Scalar::from_int(-1))))
                        .or_insert_with(|| mat.scale(&Scalar::from_int(-1)));
                }
                // Neumann series: L_m = sum_{j>=0} (-z^{-1} ad_{pa}/da)^j rhs/da
                let inv_da = Scalar::from_rat(Rat::one() / rat_int(da));
                let mut acc: HashMap<i32, Mat> = rhs
                    .iter()
                    .map(|(zh, mat)| (*zh, mat.scale(&inv_da)))
                    .collect();
                let mut current = acc.clone();
                for _ in 0..(2 * dim + 2) {
                    let mut next: HashMap<i32, Mat> = HashMap::new();
                    let mut any = false;
                    for (zh, mat) in &current {
                        let ad = pa.matmul(mat).sub(&mat.matmul(pa));
                        if ad.is_zero_within(0.0) {
                            continue;
                        }
                        any = true;
                        let zh_new = zh - 2;
                        let scaled = ad.scale(&inv_da.mul(&Scalar::from_int(-1)));
                        next.entry(zh_new)
                            .and_modify(|x| *x = x.add(&scaled))
                            .or_insert(scaled);
                    }
                    if !any {
                        break;
                    }
                    for (zh, mat) in &next {
                        acc.entry(*zh)
                            .and_modify(|x| *x = x.add(mat))
                            .or_insert_with(|| mat.clone());
                    }
                    current = next;
                }
                for (zh, mat) in acc {
                    if zh < vs.z_min_h || zh > vs.z_max_h {
                        continue;
                    }
                    let mut key = m.clone();
                    key.zh = zh;
                    merge_mat(&mut l, key, mat);
                }
            }
        }
    }

    let mut out = Series::zero(vs);
    for (m, mat) in l {
        out.add_term(m, mat);
    }
    Ok(out)
}

fn merge_mat(map: &mut HashMap<Mono, Mat>, key: Mono, mat: Mat) {
    if mat.is_zero_within(0.0) {
        return;
    }
    map.entry(key)
        .and_modify(|x| *x = x.add(&mat))
        .or_insert(mat);
}

/// [A * L] at the named variable-exponent monomial, returning z-power slices.
fn convolve_at(
    a: &MSeries,
    l: &HashMap<Mono, Mat>,
    target: &Mono,
    vs: &Arc<VarSet>,
    dim: usize,
) -> Vec<(i32, Mat)> {
    let mut acc: HashMap<i32, Mat> = HashMap::new();
    for (ma, mata) in &a.terms {
        // need ml with ml.exps + ma.exps == target.exps
        let mut ml = Mono::unit(vs.nvars());
        let mut ok = true;
        for (e, (ta, tt)) in ml
            .exps
            .iter_mut()
            .zip(ma.exps.iter().zip(target.exps.iter()))
        {
            if ta > tt {
                ok = false;
                break;
            }
            *e = tt - ta;
        }
        if !ok {
            continue;
        }
        // scan all z-powers of L at this exponent vector
        for (mlk, matl) in l.iter() {
            if mlk.exps != ml.exps {
                continue;
            }
            let zh = ma.zh + mlk.zh;
            let prod = mata.matmul(matl);
            if prod.is_zero_within(0.0) {
                continue;
            }
            acc.entry(zh)
                .and_modify(|x| *x = x.add(&prod))
                .or_insert(prod);
        }
    }
    let _ = dim;
    acc.into_iter().collect()
}

fn enumerate_monomials(nvars: usize, total: usize, out: &mut Vec<Mono>) {
    fn rec(nvars: usize, pos: usize, left: usize, current: &mut Vec<u16>, out: &mut Vec<Mono>) {
        if pos == nvars {
            if left == 0 {
                out.push(Mono {
                    exps: current.iter().copied().collect(),
                    zh: 0,
                });
            }
            return;
        }
        for e in 0..=left {
            current.push(e as u16);
            rec(nvars, pos + 1, left - e, current, out);
            current.pop();
        }
    }
    if nvars == 0 {
        return;
    }
    let mut cur = Vec::new();
    rec(nvars, 0, total, &mut cur, out);
}

/// Solve nabla(L z^{-mu} z^rho phi) = 0 order by order, normalized to the
/// identity at the large-radius limit; also produces the compact-support dual
/// solution. Refuses a non-flat connection.
pub fn fundamental_solution(conn: &Connection, tol: f64) -> Result<FundamentalSolution> {
    let flat = connection_flatness(conn, tol.max(1e-9));
    if !flat.pass {
        return Err(Error::NonFlat(format!(
            "residuals: curl {} commutators {} z {} {}",
            flat.curl, flat.commutators, flat.z_order1, flat.z_order2
        )));
    }
    let datum = conn.datum;
    let n = datum.ordinary.dim();
    let cup_q: Vec<Mat> = conn
        .qp
        .vars
        .q_classes
        .iter()
        .map(|&c| {
            let mut x = vec![Scalar::zero(); n];
            x[c] = Scalar::one();
            datum.cup_by_ordinary(&x)
        })
        .collect();
    let l = solve_system(&conn.qp.vars, &conn.qp.mats, &cup_q, n)?;
    let cup_q_dual: Vec<Mat> = conn
        .qp
        .vars
        .q_classes
        .iter()
        .map(|&c| {
            let mut x = vec![Scalar::zero(); n];
            x[c] = Scalar::one();
            datum.cup_on_compact(&x)
        })
        .collect();
    let l_dual = solve_system(&conn.qp.vars, &conn.dual_mats, &cup_q_dual, datum.csupp.dim())?;
    Ok(FundamentalSolution { l, l_dual })
}

/// Unitarity: (L~(tau,-z) gamma, L(tau,z) phi) = (gamma, phi), as the matrix
/// identity L~(-z)^T P L(z) = P within the window.
pub fn unitarity_residual(fund: &FundamentalSolution, datum: &OrbifoldDatum) -> f64 {
    let lt = fund.l_dual.negate_z().transpose();
    let p = Series::constant(fund.l.vars.clone(), datum.pairing.clone());
    let lhs = lt.matmul(&p).matmul(&fund.l);
    lhs.sub(&p).max_abs()
}

// ---------------------------------------------------------------------------
// J-function and flat coordinates
// ---------------------------------------------------------------------------

/// J(tau, -z) in the reduced representation: the exponential prefactor
/// exp(-(t^0 + tau_{0,2})/z) multiplies the series.
pub fn j_function(fund: &FundamentalSolution, datum: &OrbifoldDatum) -> Result<VSeries> {
    // J = L~(tau,z)^dagger 1 = P^{-1} L~^T P 1
    let p = &datum.pairing;
    let p_inv = p.inverse()?;
    let unit = datum.unit().coeffs;
    let pu = p.apply(&unit);
    let jt = fund.l_dual.transpose().apply_vec(&pu);
    Ok(jt.map(|v| p_inv.apply(v)))
}

/// Flat-coordinate residue: split the J-point against 1 + H_-, demand the
/// plus part be exactly the unit, and return the z^{-1} coefficient of the
/// minus part (the class [psi(tau)] in H_-/z^{-1}H_-).
pub fn opposite_project(v: &VSeries, datum: &OrbifoldDatum, tol: f64) -> Result<VSeries> {
    let (minus, plus) = v.laurent_split();
    // plus part must be the constant unit section
    let unit = datum.unit().coeffs;
    let mut expect = Series::zero(v.vars.clone());
    expect.add_term(Mono::unit(v.vars.nvars()), unit);
    let defect = plus.sub(&expect).max_abs();
    if defect > tol {
        return Err(Error::BigCell(format!(
            "the non-negative z-part differs from the unit section by {}",
            defect
        )));
    }
    // collect the z^{-1} layer
    let mut out = Series::zero(v.vars.clone());
    for (m, c) in &minus.terms {
        if m.zh == -2 {
            let mut m2 = m.clone();
            m2.zh = 0;
            out.add_term(m2, c.clone());
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Residual F-manifold product
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ResidueReport {
    pub product_matches: bool,
    pub miniversal: bool,
    pub euler_residual: f64,
    pub euler_axiom_residual: f64,
    pub pass: bool,
}

/// Check that the z = 0 residue of the connection recovers the quantum
/// product (tautological in this representation, asserted numerically), that
/// the unit gives a miniversal cyclic vector, that U(tau) = A_E(tau, 0), and
/// evaluate the Euler-field axiom residual.
pub fn residue_product(conn: &Connection, tol: f64) -> Result<ResidueReport> {
    let qp = &conn.qp;
    let n = qp.mats.len();
    // A_X(tau, 0) v for v = 1: columns A_{phi_i} 1 must stay invertible at tau=0
    let unit = conn.datum.unit().coeffs;
    let mut at_zero = Mat::zeros(n, n);
    for i in 0..n {
        let col = qp.mats[i]
            .apply_vec(&unit)
            .coeff(&Mono::unit(qp.vars.vars.nvars()))
            .cloned()
            .unwrap_or_else(|| vec![Scalar::zero(); n]);
        for r in 0..n {
            at_zero[(r, i)] = col[r].clone();
        }
    }
    let miniversal = at_zero.inverse().is_ok();
    if !miniversal {
        return Err(Error::Miniversality(
            "the map X -> A_X(tau,0) 1 is singular at the base point".into(),
        ));
    }
    // product at z = 0 equals the quantum product: the matrices carry no z
    let product_matches = qp.mats.iter().all(|s| s.terms.keys().all(|m| m.zh == 0));
    // U(tau) = A_E(tau, 0): recompute from the definition
    let ef = &conn.euler;
    let recomputed = euler_matrix(qp, ef);
    let euler_residual = recomputed.sub(&conn.euler_mat).max_abs();

    // Euler axiom residual on constant fields:
    // E(c_{ij}^k) - (1 - deg_k/2) c + ((1-deg_i/2) + (1-deg_j/2) - 1) c = 0
    let mut axiom: f64 = 0.0;
    for i in 0..n {
        let wi = ef.weights[i].clone();
        let prod_i = &qp.mats[i];
        for (m, mat) in &prod_i.terms {
            let ew = ef.monomial_weight(&qp.vars, m);
            for j in 0..n {
                let wj = ef.weights[j].clone();
                for k in 0..n {
                    if mat[(k, j)].is_zero() {
                        continue;
                    }
                    let wk = ef.weights[k].clone();
                    let factor = ew.clone() - wk + wi.clone() + wj.clone() - Rat::one();
                    let res = mat[(k, j)].abs() * crate::scalar::rat_to_f64(&factor).abs();
                    axiom = axiom.max(res);
                }
            }
        }
    }
    Ok(ResidueReport {
        product_matches,
        miniversal,
        euler_residual,
        euler_axiom_residual: axiom,
        pass: product_matches && miniversal && euler_residual <= tol && axiom <= tol,
    })
}

// ---------------------------------------------------------------------------
// Direct comparison helpers used by tests and the CLI
// ---------------------------------------------------------------------------

/// The quantum product of two constant cohomology classes.
pub fn product_of(qp: &QuantumProduct, a: &CohElement, b: &CohElement) -> VSeries {
    assert_eq!(a.space.support, Support::Ordinary);
    qp.matrix_of(&a.coeffs).apply_vec(&b.coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::rat;

    fn p1_product(order: u32) -> (crate::io::OrbifoldInput, QuantumProduct) {
        let input = fixtures::p1();
        let table =
            CorrelatorTable::from_json(&fixtures::p1_correlators().unwrap(), &input.datum)
                .unwrap();
        let qp = quantum_product(&table, &input.datum, order).unwrap();
        (input, qp)
    }

    #[test]
    fn p1_w_squared_is_q() {
        let (input, qp) = p1_product(4);
        let d = &input.datum;
        let w = CohElement::basis(d.ordinary.clone(), 1);
        let prod = product_of(&qp, &w, &w);
        // w o w = q * 1
        let mut expect = Series::zero(qp.vars.vars.clone());
        let mut m = qp.vars.mono_unit();
        m.exps[qp.vars.q_var(0)] = 1;
        expect.add_term(m, vec![Scalar::one(), Scalar::zero()]);
        assert!(prod.sub(&expect).is_zero(), "{:?}", prod.terms);
    }

    #[test]
    fn unit_acts_as_identity() {
        let (input, qp) = p1_product(4);
        let d = &input.datum;
        let u = d.unit();
        let w = CohElement::basis(d.ordinary.clone(), 1);
        let prod = product_of(&qp, &u, &w);
        let mut expect = Series::zero(qp.vars.vars.clone());
        expect.add_term(qp.vars.mono_unit(), w.coeffs.clone());
        assert!(prod.sub(&expect).is_zero());
    }

    #[test]
    fn c3z3_twisted_square() {
        let input = fixtures::c3z3();
        let d = &input.datum;
        let table =
            CorrelatorTable::from_json(&fixtures::c3z3_correlators().unwrap(), d).unwrap();
        let qp = quantum_product(&table, d, 6).unwrap();
        let t = CohElement::basis(d.ordinary.clone(), 1);
        let prod = product_of(&qp, &t, &t);
        // at order 0: 1_{1/3} o 1_{1/3} = 1_{2/3}
        let c0 = prod.coeff(&qp.vars.mono_unit()).cloned().unwrap();
        assert!(c0[0].is_zero());
        assert!(c0[1].is_zero());
        assert_eq!(c0[2].as_rational().unwrap(), rat(1, 1));
        // the t_g-series of the 1_{2/3} component is 3 F_0'''(t)
        // F_0''' = 1/3 - t^3/27 * 20 ... check the t^3 coefficient:
        // F0 = t^3/18 - t^6/19440 + ...; F''' = t^0/3 - (120/19440) t^3 + ...
        let mut m3 = qp.vars.mono_unit();
        m3.exps[0] = 3;
        let c3 = prod.coeff(&m3).cloned().unwrap();
        assert_eq!(c3[2].as_rational().unwrap(), rat(-3, 1) * rat(120, 19440));
    }

    #[test]
    fn wdvv_on_fixtures() {
        let (_, qp) = p1_product(8);
        assert!(wdvv_check(&qp, 1e-10).pass);
        let input = fixtures::c3z3();
        let table =
            CorrelatorTable::from_json(&fixtures::c3z3_correlators().unwrap(), &input.datum)
                .unwrap();
        let qp = quantum_product(&table, &input.datum, 12).unwrap();
        assert!(wdvv_check(&qp, 1e-10).pass);
    }

    #[test]
    fn p2_wdvv_and_negative_control() {
        let input = crate::io::parse_orbifold(include_str!("../../../fixtures/p2.json")).unwrap();
        let d = &input.datum;
        let json = crate::io::parse_correlators(include_str!(
            "../../../fixtures/p2_correlators.json"
        ))
        .unwrap();
        let table = CorrelatorTable::from_json(&json, d).unwrap();
        let qp = quantum_product(&table, d, 4).unwrap();
        let rep = wdvv_check(&qp, 1e-10);
        assert!(rep.pass, "P2 WDVV residual {}", rep.max_residual);

        // perturb <pt^5>_2 and WDVV must fail
        let mut bad = table.clone();
        let key = (vec![2usize, 2, 2, 2, 2], vec![2i64]);
        bad.entries.insert(key, Scalar::from_rat(rat(3, 2)));
        let qp_bad = quantum_product(&bad, d, 4).unwrap();
        let rep_bad = wdvv_check(&qp_bad, 1e-10);
        assert!(
            !rep_bad.pass && rep_bad.max_residual > 1e-6,
            "perturbed residual {}",
            rep_bad.max_residual
        );
    }

    #[test]
    fn missing_data_errors() {
        let input = crate::io::parse_orbifold(include_str!("../../../fixtures/p2.json")).unwrap();
        let json = crate::io::parse_correlators(include_str!(
            "../../../fixtures/p2_correlators.json"
        ))
        .unwrap();
        let table = CorrelatorTable::from_json(&json, &input.datum).unwrap();
        // order 5 is still covered (higher curve degrees are forced to vanish
        // by the degree axiom); order 6 needs six-leg correlators
        assert!(quantum_product(&table, &input.datum, 5).is_ok());
        match quantum_product(&table, &input.datum, 6) {
            Err(Error::MissingCorrelators(msg)) => {
                assert!(msg.contains("degree"), "{}", msg)
            }
            other => panic!("expected missing-correlator error, got ok={}", other.is_ok()),
        }
    }

    #[test]
    fn degree_axiom_filter() {
        let input = fixtures::p1();
        let mut json = fixtures::p1_correlators().unwrap();
        json.entries.push(crate::io::CorrelatorEntryJson {
            insertions: vec![1, 1, 1],
            d: vec![2],
            value: "7".into(),
        });
        match CorrelatorTable::from_json(&json, &input.datum) {
            Err(Error::Data(msg)) => assert!(msg.contains("degree axiom"), "{}", msg),
            other => panic!("expected degree-axiom rejection, got ok={}", other.is_ok()),
        }
    }

    #[test]
    fn flatness_on_p1_and_c3z3() {
        let (input, qp) = p1_product(4);
        let conn = connection(&input.datum, qp).unwrap();
        let rep = connection_flatness(&conn, 1e-10);
        assert!(rep.pass, "{:?}", rep);

        let input = fixtures::c3z3();
        let table =
            CorrelatorTable::from_json(&fixtures::c3z3_correlators().unwrap(), &input.datum)
                .unwrap();
        let qp = quantum_product(&table, &input.datum, 12).unwrap();
        let conn = connection(&input.datum, qp).unwrap();
        let rep = connection_flatness(&conn, 1e-10);
        assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn broken_mu_fails_z_flatness() {
        let (input, qp) = p1_product(4);
        let mut conn = connection(&input.datum, qp).unwrap();
        // flip a mu sign: z-flatness must fail
        conn.mu[0] = -conn.mu[0].clone();
        let rep = connection_flatness(&conn, 1e-10);
        assert!(rep.z_order1 > 1e-3, "{:?}", rep);
        assert!(!rep.pass);
    }

    #[test]
    fn p1_fundamental_solution_oracle() {
        // independent order-by-order ODE solve in the q-direction for P1:
        // q dL/dq = -z^{-1}(A L - L w cup) with A = w cup + q S, S = raise(<w,w,w>_1)
        let (input, qp) = p1_product(3);
        let d = &input.datum;
        let conn = connection(d, qp).unwrap();
        let fund = fundamental_solution(&conn, 1e-10).unwrap();

        // oracle: L_k matrices for q^k, k = 0..2, z-coefficients tracked as
        // polynomial in 1/z with nilpotent w-cup blocks
        // L_0 = I; for k >= 1: (k + z^{-1} ad_{cup_w}) L_k = -z^{-1} S L_{k-1}
        let cup_w = d.cup_by_ordinary(&{
            let mut v = vec![Scalar::zero(); 2];
            v[1] = Scalar::one();
            v
        });
        let mut s_mat = Mat::zeros(2, 2);
        // <w,w,gamma>_1: gamma = w: value 1: column w gets P^{-1} e_w = 1-dual
        // (w o w)|_{q} = 1 * dual of w against pairing: P^{-1} applied
        let p_inv = d.pairing.inverse().unwrap();
        let mut g = vec![Scalar::zero(); 2];
        g[1] = Scalar::one();
        let col = p_inv.apply(&g);
        for r in 0..2 {
            s_mat[(r, 1)] = col[r].clone();
        }
        // compare against the solver coefficient at q^1, z^{-1} and z^{-2}
        // (k=1): L_1 = (1 + z^{-1} ad)^{-1} (-z^{-1} S L_0)
        //       = -z^{-1} S + z^{-2} ad_{cup_w}(S)
        let ad = cup_w.matmul(&s_mat).sub(&s_mat.matmul(&cup_w));
        let mut m1 = conn.qp.vars.mono_unit();
        m1.exps[conn.qp.vars.q_var(0)] = 1;
        m1.zh = -2;
        let got1 = fund.l.coeff(&m1).cloned().unwrap();
        assert!(got1.sub(&s_mat.scale(&Scalar::from_int(-1))).is_zero_within(1e-12));
        let mut m2 = m1.clone();
        m2.zh = -4;
        let got2 = fund.l.coeff(&m2).cloned().unwrap();
        assert!(got2.sub(&ad).is_zero_within(1e-12), "{:?} vs {:?}", got2, ad);
    }

    #[test]
    fn unitarity_on_fixtures() {
        for (input, tablejson) in [
            (fixtures::p1(), fixtures::p1_correlators().unwrap()),
            (fixtures::c3z3(), fixtures::c3z3_correlators().unwrap()),
        ] {
            let d = &input.datum;
            let table = CorrelatorTable::from_json(&tablejson, d).unwrap();
            let qp = quantum_product(&table, d, 6).unwrap();
            let conn = connection(d, qp).unwrap();
            let fund = fundamental_solution(&conn, 1e-10).unwrap();
            let r = unitarity_residual(&fund, d);
            assert!(r < 1e-10, "{}: unitarity residual {}", d.name, r);
        }
    }

    #[test]
    fn c2g_dual_solution_is_exponential() {
        // [C^2/G]: L~ = exp(-(tau o)^dagger / z)
        let input = fixtures::c2z3();
        let d = &input.datum;
        let table =
            CorrelatorTable::from_json(&fixtures::c2zn_correlators(3).unwrap(), d).unwrap();
        let qp = quantum_product(&table, d, 5).unwrap();
        let conn = connection(d, qp).unwrap();
        let fund = fundamental_solution(&conn, 1e-10).unwrap();
        // exponent: -(1/z) sum_i t^i (phi_i o)^dagger over reduced directions
        let mut expo = Series::zero(conn.qp.vars.vars.clone());
        for (k, &cls) in conn.qp.vars.tau_classes.iter().enumerate() {
            let a_dual = conn.dual_mats[cls]
                .coeff(&conn.qp.vars.mono_unit())
                .cloned()
                .unwrap();
            let mut m = conn.qp.vars.mono_unit();
            m.exps[conn.qp.vars.tau_var(k)] = 1;
            m.zh = -2;
            expo.add_term(m, a_dual.scale(&Scalar::from_int(-1)));
        }
        let expected = expo.exp().unwrap();
        let diff = fund.l_dual.sub(&expected).max_abs();
        assert!(diff < 1e-12, "difference {}", diff);
    }

    #[test]
    fn c3z3_j_function_display() {
        let input = fixtures::c3z3();
        let d = &input.datum;
        let table =
            CorrelatorTable::from_json(&fixtures::c3z3_correlators().unwrap(), d).unwrap();
        let qp = quantum_product(&table, d, 12).unwrap();
        let conn = connection(d, qp).unwrap();
        let fund = fundamental_solution(&conn, 1e-10).unwrap();
        let j = j_function(&fund, d).unwrap();
        // J(tau,-z) = 1 - tau/z + 3 F0'(t_g) 1_{2/3} / z^2 restricted to the
        // degree-2 locus (kill t_g2-monomials)
        let vars = &conn.qp.vars;
        let tg2_var = vars
            .tau_classes
            .iter()
            .position(|&c| c == 2)
            .expect("t_g2 direction");
        let f0 = [
            (3u16, rat(1, 18)),
            (6, rat(-1, 19440)),
            (9, rat(1, 3265920)),
            (12, rat(-1093, 116397388800i64)),
        ];
        for (m, c) in &j.terms {
            if m.exps[vars.tau_var(tg2_var)] > 0 {
                continue;
            }
            let deg = m.total_deg();
            if m.zh == 0 {
                assert_eq!(deg, 0);
                assert!(c[0].sub(&Scalar::one()).is_zero());
            } else if m.zh == -2 {
                // -tau/z
                assert_eq!(deg, 1);
                assert!(c[1].add(&Scalar::one()).is_zero());
            } else if m.zh == -4 {
                // 3 F0'(t) on the 1_{2/3} component
                let k = m.exps[0] as u16;
                let expect = f0
                    .iter()
                    .find(|(e, _)| *e == k + 1)
                    .map(|(e, v)| rat(3, 1) * rat(*e as i64, 1) * v.clone())
                    .unwrap_or_else(|| rat(0, 1));
                assert_eq!(
                    c[2].as_rational().unwrap(),
                    expect,
                    "J z^{{-2}} coefficient at t^{}",
                    k
                );
                assert!(c[0].is_zero() && c[1].is_zero());
            } else {
                assert!(
                    c.iter().all(|x| x.abs() < 1e-10),
                    "unexpected J term at zh = {}",
                    m.zh
                );
            }
        }
    }

    #[test]
    fn p1_j_point_and_flat_coordinates() {
        let (input, qp) = p1_product(3);
        let d = &input.datum;
        let conn = connection(d, qp).unwrap();
        let fund = fundamental_solution(&conn, 1e-10).unwrap();
        let j = j_function(&fund, d).unwrap();
        // (J, [pt]) coefficient of q^1 z^{-2} equals 1
        let mut m = conn.qp.vars.mono_unit();
        m.exps[conn.qp.vars.q_var(0)] = 1;
        m.zh = -4;
        let c = j.coeff(&m).cloned().unwrap();
        let pt = crate::graded::CohElement::basis(d.ordinary.clone(), 1);
        let jc = crate::graded::CohElement::from_coeffs(d.ordinary.clone(), c);
        let pair = d.chen_ruan_pairing(&jc, &pt).unwrap();
        assert!((pair.to_complex().re - 1.0).abs() < 1e-10);

        // flat coordinate: z^{-1} layer of the reduced J vanishes (the full
        // -tau_{0,2} lives in the prefactor), so the reduced [psi] = 0
        let psi = opposite_project(&j, d, 1e-10).unwrap();
        assert!(psi.max_abs() < 1e-10, "reduced psi: {:?}", psi.terms);
    }

    #[test]
    fn c3z3_flat_coordinate_recovers_tau() {
        let input = fixtures::c3z3();
        let d = &input.datum;
        let table =
            CorrelatorTable::from_json(&fixtures::c3z3_correlators().unwrap(), d).unwrap();
        let qp = quantum_product(&table, d, 8).unwrap();
        let conn = connection(d, qp).unwrap();
        let fund = fundamental_solution(&conn, 1e-10).unwrap();
        let j = j_function(&fund, d).unwrap();
        let psi = opposite_project(&j, d, 1e-10).unwrap();
        // [psi] = -tau: the coefficient of t_g is -1_{(g)} and t_g2 is -1_{(g2)}
        for (k, &cls) in conn.qp.vars.tau_classes.iter().enumerate() {
            let mut m = conn.qp.vars.mono_unit();
            m.exps[conn.qp.vars.tau_var(k)] = 1;
            let c = psi.coeff(&m).cloned().unwrap();
            for (idx, x) in c.iter().enumerate() {
                let expect = if idx == cls { -1.0 } else { 0.0 };
                assert!((x.to_complex().re - expect).abs() < 1e-10);
            }
        }
        // tau = 0: [psi] has no constant term
        assert!(psi.coeff(&conn.qp.vars.mono_unit()).is_none());
    }

    #[test]
    fn residue_and_euler_axiom() {
        for (input, tablejson, order) in [
            (fixtures::p1(), fixtures::p1_correlators().unwrap(), 6u32),
            (fixtures::c3z3(), fixtures::c3z3_correlators().unwrap(), 10),
        ] {
            let d = &input.datum;
            let table = CorrelatorTable::from_json(&tablejson, d).unwrap();
            let qp = quantum_product(&table, d, order).unwrap();
            let conn = connection(d, qp).unwrap();
            let rep = residue_product(&conn, 1e-10).unwrap();
            assert!(rep.pass, "{}: {:?}", d.name, rep);
        }
    }

    #[test]
    fn galois_equivariance_of_product() {
        // the symmetry of Lemma-type Galois maps at the matrix level:
        // A_i(G(tau)) = e^{-2 pi i f_i} D A_i(tau) D^{-1}; flatness residuals
        // are then unchanged under conjugation
        for (input, json) in [
            (fixtures::c3z3(), fixtures::c3z3_correlators().unwrap()),
            (fixtures::c2z3(), fixtures::c2zn_correlators(3).unwrap()),
        ] {
            let d = &input.datum;
            let table = CorrelatorTable::from_json(&json, d).unwrap();
            let qp = quantum_product(&table, d, 9).unwrap();
            for lb in &d.line_bundles {
                let n = d.ordinary.dim();
                let mut dmat = Mat::zeros(n, n);
                for (i, c) in d.ordinary.classes.iter().enumerate() {
                    dmat[(i, i)] = Scalar::root_of_unity(&lb.f[c.sector]);
                }
                let dinv = dmat.inverse().unwrap();
                for (i, cls) in d.ordinary.classes.iter().enumerate() {
                    let fi = Scalar::root_of_unity(&lb.f[cls.sector]).inv();
                    for (m, mat) in &qp.mats[i].terms {
                        // e^{2 pi i <f, M>} from substituting scaled coordinates
                        let mut scale = Scalar::one();
                        for (k, &tc) in qp.vars.tau_classes.iter().enumerate() {
                            let e = m.exps[qp.vars.tau_var(k)];
                            if e > 0 {
                                let f = &lb.f[d.ordinary.classes[tc].sector];
                                scale = scale
                                    .mul(&Scalar::root_of_unity(f).pow_i(e as i64));
                            }
                        }
                        let lhs = mat.scale(&scale);
                        let rhs = dmat.matmul(mat).matmul(&dinv).scale(&fi);
                        let diff = lhs.sub(&rhs).max_abs();
                        assert!(
                            diff < 1e-12,
                            "{} / {}: equivariance defect {}",
                            d.name,
                            lb.name,
                            diff
                        );
                    }
                }
            }
            // conjugated connection keeps zero flatness residuals
            let conn = connection(d, qp).unwrap();
            let rep = connection_flatness(&conn, 1e-10);
            assert!(rep.pass);
        }
    }

    #[test]
    fn euler_field_weights() {
        let input = fixtures::p1();
        let ef = euler_field(&input.datum);
        // E = 2w + t^0 1: rho = 2w, unit weight 1, w weight 0
        assert_eq!(ef.rho[1].as_rational().unwrap(), rat(2, 1));
        assert_eq!(ef.weights[0], rat(1, 1));
        assert_eq!(ef.weights[1], rat(0, 1));
        // mu(1) = -n/2
        let mu = input.datum.mu_diag(&input.datum.ordinary);
        assert_eq!(mu[0], rat(-1, 2));
    }
}
