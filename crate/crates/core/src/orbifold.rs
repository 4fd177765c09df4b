//! Inertia-stack data and Chen-Ruan cohomology, for quotient orbifolds
//! [C^n/G] built from group-action specs and for compact orbifolds supplied
//! with explicit sector cohomology.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graded::{ClassInfo, CohElement, CupTable, GradedSpace, Support};
use crate::kclass::{EigenPiece, KClass};
use crate::linalg::Mat;
use crate::scalar::{rat_int, Rat, Scalar};

/// One conjugacy class of the acting group.
#[derive(Clone, Debug)]
pub struct ConjClass {
    pub label: String,
    pub size: u64,
    pub centralizer: u64,
    /// Eigenphases of the action on C^n, each in [0,1).
    pub phases: Vec<Rat>,
    /// Order of the class elements.
    pub order: u32,
}

/// Finite group action on C^n described by classes and characters.
#[derive(Clone, Debug)]
pub struct GroupActionSpec {
    pub name: String,
    pub order: u64,
    pub dim: i64,
    pub classes: Vec<ConjClass>,
    /// Rows: irreducibles, columns: classes; exact cyclotomic entries.
    pub char_table: Vec<Vec<Scalar>>,
    pub irrep_names: Vec<String>,
    /// power_map[c][k] = class index of g^k for g in class c (k < order of g).
    pub power_map: Option<Vec<Vec<usize>>>,
    pub sl: bool,
}

impl GroupActionSpec {
    /// The cyclic quotient [C^n / Z_m] acting with the given integer weights.
    pub fn cyclic(m: u32, weights: &[i64]) -> GroupActionSpec {
        let n = weights.len() as i64;
        let mut classes = Vec::new();
        let mut char_table = vec![Vec::new(); m as usize];
        let mut power_map = Vec::new();
        for k in 0..m {
            let label = match k {
                0 => "e".to_string(),
                1 => "g".to_string(),
                _ => format!("g{}", k),
            };
            let phases = weights
                .iter()
                .map(|w| {
                    let f = Rat::new((w * k as i64).into(), (m as i64).into());
                    f.clone() - f.floor()
                })
                .collect();
            let order = m / num_integer::gcd(m, k.max(1));
            classes.push(ConjClass {
                label,
                size: 1,
                centralizer: m as u64,
                phases,
                order: if k == 0 { 1 } else { order },
            });
            for (l, row) in char_table.iter_mut().enumerate() {
                row.push(Scalar::root_of_unity(&Rat::new(
                    ((l as i64) * (k as i64)).into(),
                    (m as i64).into(),
                )));
            }
            power_map.push((0..m).map(|j| ((k as u64 * j as u64) % m as u64) as usize).collect());
        }
        let weight_sum: i64 = weights.iter().sum();
        GroupActionSpec {
            name: format!("C{}/Z{}", n, m),
            order: m as u64,
            dim: n,
            classes,
            char_table,
            irrep_names: (0..m).map(|l| format!("rho{}", l)).collect(),
            power_map: Some(power_map),
            sl: weight_sum.rem_euclid(m as i64) == 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.classes.iter().map(|c| c.size).sum();
        if total != self.order {
            return Err(Error::Data(format!(
                "class sizes sum to {} but |G| = {}",
                total, self.order
            )));
        }
        for c in &self.classes {
            if c.size * c.centralizer != self.order {
                return Err(Error::Data(format!(
                    "class {}: size * centralizer = {} != |G|",
                    c.label,
                    c.size * c.centralizer
                )));
            }
            if c.phases.len() != self.dim as usize {
                return Err(Error::Data(format!(
                    "class {}: expected {} eigenphases",
                    c.label, self.dim
                )));
            }
            for f in &c.phases {
                if f.is_negative() || *f >= Rat::one() {
                    return Err(Error::Data(format!(
                        "class {}: eigenphase {} outside [0,1)",
                        c.label, f
                    )));
                }
            }
            if self.sl {
                let s: Rat = c.phases.iter().cloned().sum();
                if !s.is_integer() {
                    return Err(Error::Data(format!(
                        "SL flag set but age sum of class {} is {}",
                        c.label, s
                    )));
                }
            }
        }
        if self.char_table.len() != self.classes.len() {
            return Err(Error::Data(
                "character table must be square (one irrep per class)".into(),
            ));
        }
        // orthonormality of character rows under the class-weighted product
        for (i, ri) in self.char_table.iter().enumerate() {
            for (j, rj) in self.char_table.iter().enumerate() {
                let mut acc = Scalar::zero();
                for (c, cls) in self.classes.iter().enumerate() {
                    let term = ri[c].mul(&rj[c].conj()).mul(&Scalar::from_int(cls.size as i64));
                    acc = acc.add(&term);
                }
                let expect = if i == j { self.order as i64 } else { 0 };
                if !acc.sub(&Scalar::from_int(expect)).is_zero() {
                    return Err(Error::Data(format!(
                        "character rows {} and {} are not orthonormal",
                        self.irrep_names[i], self.irrep_names[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn irrep_index(&self, name: &str) -> Result<usize> {
        self.irrep_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Lookup(format!("unknown irreducible {}", name)))
    }

    /// Trace of an element of class `c` in the virtual character `coeffs`
    /// (integer combination of irreducibles).
    pub fn virtual_trace(&self, coeffs: &[(usize, i64)], c: usize) -> Scalar {
        let mut acc = Scalar::zero();
        for (irrep, mult) in coeffs {
            acc = acc.add(&self.char_table[*irrep][c].mul(&Scalar::from_int(*mult)));
        }
        acc
    }
}

/// A connected component of the inertia stack.
#[derive(Clone, Debug)]
pub struct InertiaComponent {
    pub label: String,
    pub age: Rat,
    /// Complex dimension n_v of the component.
    pub dim_v: i64,
    pub centralizer: Option<u64>,
    pub phases: Vec<Rat>,
    pub inv_partner: usize,
}

/// Orbifold line bundle: coarse Chern class plus stabilizer weights.
#[derive(Clone, Debug)]
pub struct LineBundle {
    pub name: String,
    /// Coefficients over the ordinary basis (untwisted degree-2 classes).
    pub xi0: Vec<Scalar>,
    /// f_v in [0,1) per sector.
    pub f: Vec<Rat>,
}

#[derive(Clone, Debug)]
pub struct QuotientInfo {
    pub spec: GroupActionSpec,
}

#[derive(Clone, Debug)]
pub struct OrbifoldDatum {
    pub name: String,
    pub dim: i64,
    pub compact: bool,
    pub sectors: Vec<InertiaComponent>,
    pub ordinary: Arc<GradedSpace>,
    /// Compact-support space; equals `ordinary` (same allocation) for compact data.
    pub csupp: Arc<GradedSpace>,
    /// Pairing matrix, rows over csupp basis, columns over ordinary basis.
    pub pairing: Mat,
    pub cup_oo: CupTable,
    /// Module action ordinary x compact -> compact.
    pub cup_oc: CupTable,
    /// c1(TX) over the ordinary basis.
    pub c1: Vec<Scalar>,
    pub tangent: KClass,
    pub line_bundles: Vec<LineBundle>,
    /// Ordinary index of the normalized point class (integral 1), if present.
    pub point_class: Option<usize>,
    /// Ordinary indices of untwisted degree-2 classes (the nef q-directions).
    pub h2_untwisted: Vec<usize>,
    pub quotient: Option<QuotientInfo>,
}

impl OrbifoldDatum {
    pub fn unit(&self) -> CohElement {
        let idx = self
            .ordinary
            .classes
            .iter()
            .position(|c| c.sector == 0 && c.internal_deg == 0)
            .expect("untwisted unit class");
        CohElement::basis(self.ordinary.clone(), idx)
    }

    /// Sum of the unit classes of all sectors (integration dual over the
    /// whole inertia stack).
    pub fn all_units(&self) -> CohElement {
        let mut e = CohElement::zero(self.ordinary.clone());
        for s in 0..self.sectors.len() {
            if let Some(i) = self
                .ordinary
                .classes
                .iter()
                .position(|c| c.sector == s && c.internal_deg == 0)
            {
                e.coeffs[i] = Scalar::one();
            }
        }
        e
    }

    /// mu eigenvalues (cr_deg/2 - n/2) over the given space.
    pub fn mu_diag(&self, space: &GradedSpace) -> Vec<Rat> {
        space
            .classes
            .iter()
            .map(|c| c.cr_deg.clone() / rat_int(2) - Rat::new(self.dim.into(), 2.into()))
            .collect()
    }

    pub fn c1_element(&self) -> CohElement {
        CohElement::from_coeffs(self.ordinary.clone(), self.c1.clone())
    }

    /// Matrix of cup product by an ordinary element, acting on the ordinary space.
    pub fn cup_by_ordinary(&self, x: &[Scalar]) -> Mat {
        let n = self.ordinary.dim();
        self.cup_oo.cup_matrix(x, n, n)
    }

    /// Matrix of cup product by an ordinary element, acting on the compact space.
    pub fn cup_on_compact(&self, x: &[Scalar]) -> Mat {
        let n = self.csupp.dim();
        if self.compact {
            return self.cup_by_ordinary(x);
        }
        self.cup_oc.cup_matrix(x, n, n)
    }

    pub fn cup_elements(&self, a: &CohElement, b: &CohElement) -> Result<CohElement> {
        use Support::*;
        match (a.space.support, b.space.support) {
            (Ordinary, Ordinary) => Ok(CohElement::from_coeffs(
                self.ordinary.clone(),
                self.cup_oo.cup(&a.coeffs, &b.coeffs, self.ordinary.dim()),
            )),
            (Ordinary, Compact) => Ok(CohElement::from_coeffs(
                self.csupp.clone(),
                self.cup_oc.cup(&a.coeffs, &b.coeffs, self.csupp.dim()),
            )),
            (Compact, Ordinary) => Ok(CohElement::from_coeffs(
                self.csupp.clone(),
                self.cup_oc.cup(&b.coeffs, &a.coeffs, self.csupp.dim()),
            )),
            (Compact, Compact) => Err(Error::UnsupportedPairing(
                "cup of two compactly supported classes is not represented".into(),
            )),
        }
    }

    /// The orbifold Poincare pairing. For non-compact data exactly one side
    /// must be compactly supported.
    pub fn chen_ruan_pairing(&self, a: &CohElement, b: &CohElement) -> Result<Scalar> {
        use Support::*;
        let (c, o) = match (a.space.support, b.space.support) {
            (Ordinary, Ordinary) if self.compact => (a, b),
            (Compact, Compact) if self.compact => (a, b),
            (Ordinary, Compact) if self.compact => (a, b),
            (Compact, Ordinary) if self.compact => (a, b),
            (Compact, Ordinary) => (a, b),
            (Ordinary, Compact) => (b, a),
            (Ordinary, Ordinary) => {
                return Err(Error::UnsupportedPairing(
                    "two ordinary classes on a non-compact orbifold".into(),
                ))
            }
            (Compact, Compact) => {
                return Err(Error::UnsupportedPairing(
                    "two compactly supported classes (use one ordinary argument)".into(),
                ))
            }
        };
        let mut acc = Scalar::zero();
        for i in 0..self.pairing.rows {
            if c.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..self.pairing.cols {
                if o.coeffs[j].is_zero() || self.pairing[(i, j)].is_zero() {
                    continue;
                }
                acc = acc.add(&c.coeffs[i].mul(&o.coeffs[j]).mul(&self.pairing[(i, j)]));
            }
        }
        Ok(acc)
    }

    /// Integral over the whole inertia stack of a class that can be integrated
    /// (compactly supported, or any class on a compact orbifold).
    pub fn integrate_inertia(&self, x: &CohElement) -> Result<Scalar> {
        if !self.compact && x.space.support == Support::Ordinary {
            return Err(Error::UnsupportedPairing(
                "cannot integrate an ordinary class on a non-compact orbifold".into(),
            ));
        }
        self.chen_ruan_pairing(x, &self.all_units())
    }

    /// Integral over the untwisted component only (pairing with the unit).
    pub fn integrate_untwisted(&self, x: &CohElement) -> Result<Scalar> {
        self.chen_ruan_pairing(x, &self.unit())
    }

    /// f_v(xi) table for a registered line bundle.
    pub fn line_bundle(&self, name: &str) -> Result<&LineBundle> {
        self.line_bundles
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::Lookup(format!("unknown line bundle {}", name)))
    }

    pub fn point_class_element(&self) -> Result<CohElement> {
        let idx = self.point_class.ok_or_else(|| {
            Error::Data("datum does not declare a normalized point class".into())
        })?;
        Ok(CohElement::basis(self.ordinary.clone(), idx))
    }

    /// Check the structural invariants of the datum; used by ingestion.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.dim;
        for (v, s) in self.sectors.iter().enumerate() {
            if s.age.is_negative() {
                return Err(Error::Data(format!("sector {} has negative age", s.label)));
            }
            if v == 0 && !s.age.is_zero() {
                return Err(Error::Data("untwisted sector must have age 0".into()));
            }
            let t = &self.sectors[s.inv_partner];
            let sum = s.age.clone() + t.age.clone();
            if sum != rat_int(n - s.dim_v) {
                return Err(Error::Data(format!(
                    "age involution identity fails on sector {}: {} + {} != {}",
                    s.label,
                    s.age,
                    t.age,
                    n - s.dim_v
                )));
            }
        }
        // Chen-Ruan degree of each class = internal + 2 age
        for space in [&self.ordinary, &self.csupp] {
            for c in &space.classes {
                let expect = rat_int(c.internal_deg) + rat_int(2) * self.sectors[c.sector].age.clone();
                if c.cr_deg != expect {
                    return Err(Error::Data(format!(
                        "class {} has CR degree {} but internal degree {} on a sector of age {}",
                        c.name, c.cr_deg, c.internal_deg, self.sectors[c.sector].age
                    )));
                }
            }
        }
        // pairing invertible and degree -2n, coupling v with inv(v)
        self.pairing
            .inverse()
            .map_err(|_| Error::DegeneratePairing("orbifold Poincare pairing".into()))?;
        for i in 0..self.pairing.rows {
            for j in 0..self.pairing.cols {
                if self.pairing[(i, j)].is_zero() {
                    continue;
                }
                let ci = &self.csupp.classes[i];
                let cj = &self.ordinary.classes[j];
                if self.sectors[ci.sector].inv_partner != cj.sector {
                    return Err(Error::Data(format!(
                        "pairing couples sector {} with {} (expected the involution partner)",
                        ci.sector, cj.sector
                    )));
                }
                if ci.cr_deg.clone() + cj.cr_deg.clone() != rat_int(2 * n) {
                    return Err(Error::Data(format!(
                        "pairing couples degrees {} and {} (expected sum {})",
                        ci.cr_deg,
                        cj.cr_deg,
                        2 * n
                    )));
                }
            }
        }
        // tangent eigen-data ranks sum to n on every sector
        for (v, pieces) in self.tangent.pieces.iter().enumerate() {
            let total: Rat = pieces.iter().map(|p| p.rank.clone()).sum();
            if total != rat_int(n) {
                return Err(Error::Data(format!(
                    "tangent ranks on sector {} sum to {} (expected {})",
                    self.sectors[v].label, total, n
                )));
            }
        }
        Ok(())
    }
}

/// Build the inertia datum of [C^n/G] from a group-action spec.
pub fn inertia_of_quotient(spec: &GroupActionSpec) -> Result<OrbifoldDatum> {
    spec.validate()?;
    let n = spec.dim;
    let nclasses = spec.classes.len();

    // the identity class must be first
    if !spec.classes[0].phases.iter().all(|f| f.is_zero()) {
        return Err(Error::Data("first conjugacy class must be the identity".into()));
    }

    // involution via characters: inv(c) has conjugate character column
    let mut inv_sector = vec![usize::MAX; nclasses];
    for c in 0..nclasses {
        let mut found = None;
        'outer: for c2 in 0..nclasses {
            for row in &spec.char_table {
                if !row[c2].sub(&row[c].conj()).is_zero() {
                    continue 'outer;
                }
            }
            found = Some(c2);
            break;
        }
        let c2 = found.ok_or_else(|| {
            Error::Data(format!("no inverse class found for {}", spec.classes[c].label))
        })?;
        inv_sector[c] = c2;
        // eigenphases of the inverse must be the negated phases mod 1
        let mut neg: Vec<Rat> = spec.classes[c]
            .phases
            .iter()
            .map(|f| {
                if f.is_zero() {
                    Rat::zero()
                } else {
                    Rat::one() - f.clone()
                }
            })
            .collect();
        neg.sort();
        let mut have = spec.classes[c2].phases.clone();
        have.sort();
        if neg != have {
            return Err(Error::Data(format!(
                "eigenphases of class {} are inconsistent with class inversion",
                spec.classes[c].label
            )));
        }
    }

    let mut sectors = Vec::new();
    for (c, cls) in spec.classes.iter().enumerate() {
        let age: Rat = cls.phases.iter().cloned().sum();
        let dim_v = cls.phases.iter().filter(|f| f.is_zero()).count() as i64;
        sectors.push(InertiaComponent {
            label: cls.label.clone(),
            age,
            dim_v,
            centralizer: Some(cls.centralizer),
            phases: cls.phases.clone(),
            inv_partner: inv_sector[c],
        });
    }

    // ordinary: one unit class per sector
    let ord_classes: Vec<ClassInfo> = sectors
        .iter()
        .enumerate()
        .map(|(v, s)| ClassInfo {
            name: if v == 0 { "1".into() } else { format!("1_{}", s.label) },
            sector: v,
            internal_deg: 0,
            cr_deg: rat_int(2) * s.age.clone(),
        })
        .collect();
    let ordinary = Arc::new(GradedSpace {
        label: format!("H*_CR({})", spec.name),
        support: Support::Ordinary,
        classes: ord_classes,
        inv_class: (0..nclasses).map(|v| inv_sector[v]).collect(),
    });

    // compact support: one top class per sector
    let cs_classes: Vec<ClassInfo> = sectors
        .iter()
        .enumerate()
        .map(|(v, s)| {
            let name = if v == 0 {
                if n == 3 {
                    "alpha".to_string()
                } else {
                    "beta".to_string()
                }
            } else if s.dim_v > 0 {
                format!("b_{}", s.label)
            } else {
                format!("1c_{}", s.label)
            };
            ClassInfo {
                name,
                sector: v,
                internal_deg: 2 * s.dim_v,
                cr_deg: rat_int(2 * s.dim_v) + rat_int(2) * s.age.clone(),
            }
        })
        .collect();
    let csupp = Arc::new(GradedSpace {
        label: format!("H*_CR_c({})", spec.name),
        support: Support::Compact,
        classes: cs_classes,
        inv_class: (0..nclasses).map(|v| inv_sector[v]).collect(),
    });

    // pairing: (top, 1) = 1/|G|; (c_(g), 1_(g^{-1})) = 1/|C(g)|
    let mut pairing = Mat::zeros(nclasses, nclasses);
    for v in 0..nclasses {
        let w = inv_sector[v];
        let val = if v == 0 {
            Rat::new(1.into(), (spec.order as i64).into())
        } else {
            Rat::new(1.into(), (spec.classes[v].centralizer as i64).into())
        };
        pairing[(v, w)] = Scalar::from_rat(val);
    }

    // componentwise cup: units act as units
    let mut cup_oo = CupTable::default();
    let mut cup_oc = CupTable::default();
    for v in 0..nclasses {
        cup_oo.insert(v, v, v, Scalar::one());
        cup_oc.insert(v, v, v, Scalar::one());
    }

    // tangent bundle eigen-data per sector, grouped by phase
    let mut tangent_pieces = Vec::new();
    for s in &sectors {
        let mut by_f: Vec<(Rat, i64)> = Vec::new();
        for f in &s.phases {
            match by_f.iter_mut().find(|(g, _)| g == f) {
                Some((_, m)) => *m += 1,
                None => by_f.push((f.clone(), 1)),
            }
        }
        by_f.sort_by(|a, b| a.0.cmp(&b.0));
        let pieces = by_f
            .into_iter()
            .map(|(f, mult)| EigenPiece {
                f,
                rank: rat_int(mult),
                // ch of a trivial bundle on the (contractible) sector
                ch: vec![Scalar::from_int(mult)],
            })
            .collect();
        tangent_pieces.push(pieces);
    }
    let tangent = KClass {
        label: "TX".into(),
        support: Support::Ordinary,
        pieces: tangent_pieces,
    };

    // line bundles from one-dimensional characters
    let mut line_bundles = Vec::new();
    for (r, row) in spec.char_table.iter().enumerate() {
        if !row[0].sub(&Scalar::one()).is_zero() {
            continue; // not one-dimensional
        }
        let mut f = Vec::new();
        let mut ok = true;
        for (c, cls) in spec.classes.iter().enumerate() {
            let m = cls.order.max(1);
            let mut found = None;
            for j in 0..m {
                let cand = Rat::new((j as i64).into(), (m as i64).into());
                if row[c].sub(&Scalar::root_of_unity(&cand)).is_zero() {
                    found = Some(cand);
                    break;
                }
            }
            match found {
                Some(v) => f.push(v),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            line_bundles.push(LineBundle {
                name: spec.irrep_names[r].clone(),
                xi0: vec![Scalar::zero(); nclasses],
                f,
            });
        }
    }

    let datum = OrbifoldDatum {
        name: spec.name.clone(),
        dim: n,
        compact: false,
        sectors,
        ordinary,
        csupp,
        pairing,
        cup_oo,
        cup_oc,
        c1: vec![Scalar::zero(); nclasses],
        tangent,
        line_bundles,
        point_class: None,
        h2_untwisted: Vec::new(),
        quotient: Some(QuotientInfo { spec: spec.clone() }),
    };
    datum.check_invariants()?;
    Ok(datum)
}

// ---------------------------------------------------------------------------
// Uniqueness conditions at the cusp
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct AlphaGroup {
    /// The common character tuple (f_v(xi))_xi of the grouped sectors.
    pub key: Vec<Rat>,
    pub sectors: Vec<usize>,
    /// Witness n_alpha when the opposite-uniqueness test passes.
    pub n_alpha: Option<Rat>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub uniqueness_opposite: bool,
    pub uniqueness_dilaton: bool,
    pub groups: Vec<AlphaGroup>,
    /// Age-zero twisted sectors not separated by any line bundle.
    pub dilaton_failures: Vec<usize>,
}

/// Check the two uniqueness conditions for the standard opposite subspace and
/// dilaton shift at the large-radius cusp.
pub fn condition_checks(datum: &OrbifoldDatum) -> ConditionReport {
    // group sectors by the character v -> (f_v(xi))_xi
    let mut groups: Vec<AlphaGroup> = Vec::new();
    for v in 0..datum.sectors.len() {
        let key: Vec<Rat> = datum.line_bundles.iter().map(|l| l.f[v].clone()).collect();
        match groups.iter_mut().find(|g| g.key == key) {
            Some(g) => g.sectors.push(v),
            None => groups.push(AlphaGroup {
                key,
                sectors: vec![v],
                n_alpha: None,
                pass: false,
            }),
        }
    }
    let mut uniqueness_opposite = true;
    for g in groups.iter_mut() {
        let values: Vec<Rat> = g
            .sectors
            .iter()
            .map(|&v| {
                rat_int(datum.sectors[v].dim_v) + rat_int(2) * datum.sectors[v].age.clone()
            })
            .collect();
        let min = values.iter().min().cloned().unwrap();
        let ok = values
            .iter()
            .all(|x| *x == min || *x == min.clone() + Rat::one());
        g.pass = ok;
        g.n_alpha = if ok { Some(min) } else { None };
        uniqueness_opposite &= ok;
    }
    // every age-0 twisted sector must be separated by some line bundle
    let mut dilaton_failures = Vec::new();
    for (v, s) in datum.sectors.iter().enumerate() {
        if v == 0 || !s.age.is_zero() {
            continue;
        }
        let separated = datum.line_bundles.iter().any(|l| !l.f[v].is_zero());
        if !separated {
            dilaton_failures.push(v);
        }
    }
    ConditionReport {
        uniqueness_opposite,
        uniqueness_dilaton: dilaton_failures.is_empty(),
        groups,
        dilaton_failures,
    }
}
