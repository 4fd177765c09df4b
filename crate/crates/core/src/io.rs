//! JSON ingestion for orbifold specs, correlator tables, potentials,
//! Fourier-Mukai assignments and external transforms.
//!
//! Rationals are strings `"p/q"`; complex numbers are two-element arrays of
//! decimal strings `[re, im]`. Schema violations carry a JSON-path-like
//! location in the error.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graded::{ClassInfo, CohElement, CupTable, GradedSpace, Support};
use crate::kclass::{EigenPiece, KClass};
use crate::linalg::Mat;
use crate::orbifold::{
    inertia_of_quotient, ConjClass, GroupActionSpec, InertiaComponent, LineBundle, OrbifoldDatum,
};
use crate::scalar::{parse_rat, rat_int, Rat, Scalar};

pub const ORBIFOLD_SCHEMA: &str = "oqc.orbifold/1";
pub const CORRELATOR_SCHEMA: &str = "oqc.correlators/1";
pub const POTENTIALS_SCHEMA: &str = "oqc.potentials/1";
pub const FM_SCHEMA: &str = "oqc.fm/1";
pub const TRANSFORM_SCHEMA: &str = "oqc.transform/1";
pub const HLPAIR_SCHEMA: &str = "oqc.hlpair/1";

fn rat_at(s: &str, path: &str) -> Result<Rat> {
    parse_rat(s).ok_or_else(|| Error::schema(path, format!("expected a rational \"p/q\", got {:?}", s)))
}

/// A number that is either an exact rational string or a complex [re, im]
/// pair of decimal strings.
#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
pub enum NumJson {
    Rational(String),
    Complex([String; 2]),
}

impl NumJson {
    pub fn to_scalar(&self, path: &str) -> Result<Scalar> {
        match self {
            NumJson::Rational(s) => Ok(Scalar::from_rat(rat_at(s, path)?)),
            NumJson::Complex([re, im]) => {
                let re: f64 = re
                    .parse()
                    .map_err(|_| Error::schema(path, "bad decimal real part"))?;
                let im: f64 = im
                    .parse()
                    .map_err(|_| Error::schema(path, "bad decimal imaginary part"))?;
                Ok(Scalar::from_complex(num_complex::Complex64::new(re, im)))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Orbifold specs
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct OrbifoldSpecJson {
    pub schema: Option<String>,
    pub kind: String,
    pub name: Option<String>,
    // quotient data
    pub group: Option<GroupJson>,
    pub weights: Option<Vec<String>>,
    // compact data
    pub dimension: Option<i64>,
    pub sectors: Option<Vec<SectorJson>>,
    pub pairing: Option<Vec<Vec<NumJson>>>,
    pub inv: Option<BTreeMap<String, String>>,
    pub c1: Option<BTreeMap<String, String>>,
    pub line_bundles: Option<Vec<LineBundleJson>>,
    pub point_class: Option<String>,
    pub kclasses: Option<Vec<KClassJson>>,
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
pub enum GroupJson {
    Cyclic {
        cyclic: u32,
    },
    Explicit {
        order: u64,
        classes: Vec<ClassJson>,
        /// Character table rows (one per irreducible) of cyclotomic entries:
        /// each entry is a list of [power, "p/q"] pairs over zeta_conductor.
        conductor: u32,
        character_table: Vec<Vec<Vec<(i64, String)>>>,
        irreps: Vec<String>,
        sl: Option<bool>,
    },
}

#[derive(Deserialize, Debug)]
pub struct ClassJson {
    pub label: String,
    pub size: u64,
    pub centralizer: u64,
    pub order: u32,
    pub phases: Vec<String>,
    pub powers: Option<Vec<usize>>,
}

#[derive(Deserialize, Debug)]
pub struct SectorJson {
    pub label: String,
    pub age: String,
    pub classes: Vec<ClassEntryJson>,
    pub tangent: Vec<TangentJson>,
    /// Local cup structure constants [i, j, k, "p/q"]; unit products implied.
    pub cup: Option<Vec<(usize, usize, usize, String)>>,
}

#[derive(Deserialize, Debug)]
pub struct ClassEntryJson {
    pub name: String,
    pub degree: i64,
}

#[derive(Deserialize, Debug)]
pub struct TangentJson {
    pub f: String,
    pub rank: i64,
    pub ch: Vec<NumJson>,
}

#[derive(Deserialize, Debug)]
pub struct LineBundleJson {
    pub name: String,
    pub xi0: BTreeMap<String, String>,
    pub f: BTreeMap<String, String>,
}

#[derive(Deserialize, Debug)]
pub struct KClassJson {
    pub name: String,
    pub support: Option<String>,
    pub untwisted_ch: Option<Vec<NumJson>>,
    pub pieces: Option<BTreeMap<String, Vec<PieceJson>>>,
}

#[derive(Deserialize, Debug)]
pub struct PieceJson {
    pub f: String,
    pub rank: String,
    pub ch: Vec<NumJson>,
}

/// Parsed orbifold input: the datum plus any named K-classes it declares.
pub struct OrbifoldInput {
    pub datum: OrbifoldDatum,
    pub named_kclasses: Vec<(String, KClass)>,
}

pub fn parse_orbifold(text: &str) -> Result<OrbifoldInput> {
    let spec: OrbifoldSpecJson = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("$:{}:{}", e.line(), e.column()), e.to_string()))?;
    if let Some(s) = &spec.schema {
        if s != ORBIFOLD_SCHEMA {
            return Err(Error::schema("$.schema", format!("expected {}", ORBIFOLD_SCHEMA)));
        }
    }
    match spec.kind.as_str() {
        "quotient" => parse_quotient(&spec),
        "compact" => parse_compact(&spec),
        k => Err(Error::schema("$.kind", format!("unknown kind {:?}", k))),
    }
}

fn parse_quotient(spec: &OrbifoldSpecJson) -> Result<OrbifoldInput> {
    let group = spec
        .group
        .as_ref()
        .ok_or_else(|| Error::schema("$.group", "quotient kind needs a group"))?;
    let gspec = match group {
        GroupJson::Cyclic { cyclic } => {
            let weights = spec
                .weights
                .as_ref()
                .ok_or_else(|| Error::schema("$.weights", "cyclic group needs weights"))?;
            let w: Vec<i64> = weights
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.parse::<i64>()
                        .map_err(|_| Error::schema(format!("$.weights[{}]", i), "expected integer"))
                })
                .collect::<Result<_>>()?;
            let mut g = GroupActionSpec::cyclic(*cyclic, &w);
            if let Some(name) = &spec.name {
                g.name = name.clone();
            }
            g
        }
        GroupJson::Explicit {
            order,
            classes,
            conductor,
            character_table,
            irreps,
            sl,
        } => {
            let cls: Vec<ConjClass> = classes
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    Ok(ConjClass {
                        label: c.label.clone(),
                        size: c.size,
                        centralizer: c.centralizer,
                        order: c.order,
                        phases: c
                            .phases
                            .iter()
                            .map(|p| rat_at(p, &format!("$.group.classes[{}].phases", i)))
                            .collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<_>>()?;
            let table: Vec<Vec<Scalar>> = character_table
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|entry| {
                            let mut acc = Scalar::zero();
                            for (k, c) in entry {
                                let r = rat_at(c, "$.group.character_table")?;
                                let root = Scalar::Cyc(crate::scalar::Cyclotomic::root_of_unity(
                                    *k,
                                    *conductor,
                                ));
                                acc = acc.add(&root.mul(&Scalar::from_rat(r)));
                            }
                            Ok(acc)
                        })
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            let dim = cls
                .first()
                .map(|c| c.phases.len() as i64)
                .ok_or_else(|| Error::schema("$.group.classes", "no classes"))?;
            GroupActionSpec {
                name: spec.name.clone().unwrap_or_else(|| "quotient".into()),
                order: *order,
                dim,
                classes: cls,
                char_table: table,
                irrep_names: irreps.clone(),
                power_map: {
                    let all: Option<Vec<Vec<usize>>> =
                        classes.iter().map(|c| c.powers.clone()).collect();
                    all
                },
                sl: sl.unwrap_or(false),
            }
        }
    };
    let datum = inertia_of_quotient(&gspec)?;
    Ok(OrbifoldInput {
        datum,
        named_kclasses: Vec::new(),
    })
}

fn parse_compact(spec: &OrbifoldSpecJson) -> Result<OrbifoldInput> {
    let n = spec
        .dimension
        .ok_or_else(|| Error::schema("$.dimension", "compact kind needs a dimension"))?;
    let sectors_json = spec
        .sectors
        .as_ref()
        .ok_or_else(|| Error::schema("$.sectors", "compact kind needs sectors"))?;
    let inv_map = spec.inv.clone().unwrap_or_default();

    let mut sectors = Vec::new();
    let mut classes = Vec::new();
    let mut sector_of_label = BTreeMap::new();
    for (v, s) in sectors_json.iter().enumerate() {
        sector_of_label.insert(s.label.clone(), v);
        let age = rat_at(&s.age, &format!("$.sectors[{}].age", v))?;
        for c in &s.classes {
            classes.push(ClassInfo {
                name: c.name.clone(),
                sector: v,
                internal_deg: c.degree,
                cr_deg: rat_int(c.degree) + rat_int(2) * age.clone(),
            });
        }
        sectors.push(InertiaComponent {
            label: s.label.clone(),
            age,
            dim_v: s
                .classes
                .iter()
                .map(|c| c.degree / 2)
                .max()
                .unwrap_or(0),
            centralizer: None,
            phases: Vec::new(),
            inv_partner: 0,
        });
    }
    // resolve the involution (default: identity)
    for (v, s) in sectors_json.iter().enumerate() {
        let target = inv_map.get(&s.label).cloned().unwrap_or(s.label.clone());
        let w = *sector_of_label
            .get(&target)
            .ok_or_else(|| Error::schema("$.inv", format!("unknown sector {:?}", target)))?;
        sectors[v].inv_partner = w;
    }

    // class-level involution by position within the paired sector
    let mut inv_class = vec![0usize; classes.len()];
    {
        let per_sector: Vec<Vec<usize>> = (0..sectors.len())
            .map(|v| {
                classes
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.sector == v)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        for (i, c) in classes.iter().enumerate() {
            let w = sectors[c.sector].inv_partner;
            let pos = per_sector[c.sector].iter().position(|&x| x == i).unwrap();
            let tgt = per_sector[w].get(pos).copied().ok_or_else(|| {
                Error::schema("$.inv", "paired sectors have different class counts")
            })?;
            if classes[tgt].internal_deg != c.internal_deg {
                return Err(Error::schema(
                    "$.inv",
                    format!("class {} pairs with a class of different degree", c.name),
                ));
            }
            inv_class[i] = tgt;
        }
    }

    let space = Arc::new(GradedSpace {
        label: spec.name.clone().unwrap_or_else(|| "compact".into()),
        support: Support::Ordinary,
        classes,
        inv_class,
    });

    // pairing
    let pairing_json = spec
        .pairing
        .as_ref()
        .ok_or_else(|| Error::schema("$.pairing", "compact kind needs a pairing"))?;
    let dim = space.dim();
    if pairing_json.len() != dim || pairing_json.iter().any(|r| r.len() != dim) {
        return Err(Error::schema("$.pairing", format!("expected a {0}x{0} matrix", dim)));
    }
    let mut pairing = Mat::zeros(dim, dim);
    for (i, row) in pairing_json.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            pairing[(i, j)] = e.to_scalar(&format!("$.pairing[{}][{}]", i, j))?;
        }
    }

    // cup tables: implied unit products plus explicit local triples
    let mut cup = CupTable::default();
    for v in 0..sectors.len() {
        let local = space.classes_of_sector(v);
        let unit = local
            .iter()
            .position(|&i| space.classes[i].internal_deg == 0)
            .ok_or_else(|| Error::schema("$.sectors", "every sector needs a degree-0 class"))?;
        for (pos, &gi) in local.iter().enumerate() {
            if pos == unit {
                cup.insert(local[unit], gi, gi, Scalar::one());
            } else {
                cup.insert_sym(local[unit], gi, gi, Scalar::one());
            }
        }
        if let Some(triples) = &sectors_json[v].cup {
            for (i, j, k, val) in triples {
                let path = format!("$.sectors[{}].cup", v);
                let (gi, gj, gk) = (
                    *local.get(*i).ok_or_else(|| Error::schema(&path, "bad index"))?,
                    *local.get(*j).ok_or_else(|| Error::schema(&path, "bad index"))?,
                    *local.get(*k).ok_or_else(|| Error::schema(&path, "bad index"))?,
                );
                let c = Scalar::from_rat(rat_at(val, &path)?);
                cup.insert_sym(gi, gj, gk, c);
            }
        }
    }

    // reject odd-degree input (the framework is even-parity only)
    if space.classes.iter().any(|c| c.internal_deg % 2 != 0) {
        return Err(Error::schema("$.sectors", "odd-degree classes are not supported"));
    }

    // c1 over named untwisted degree-2 classes
    let mut c1 = vec![Scalar::zero(); dim];
    if let Some(m) = &spec.c1 {
        for (name, val) in m {
            let idx = space
                .index_of(name)
                .ok_or_else(|| Error::schema("$.c1", format!("unknown class {:?}", name)))?;
            c1[idx] = Scalar::from_rat(rat_at(val, "$.c1")?);
        }
    }

    // tangent eigen-pieces
    let mut tangent_pieces = Vec::new();
    for (v, s) in sectors_json.iter().enumerate() {
        let local = space.classes_of_sector(v);
        let mut pieces = Vec::new();
        for (pi, t) in s.tangent.iter().enumerate() {
            let path = format!("$.sectors[{}].tangent[{}]", v, pi);
            if t.ch.len() != local.len() {
                return Err(Error::schema(
                    &path,
                    format!("ch needs {} entries (one per sector class)", local.len()),
                ));
            }
            pieces.push(EigenPiece {
                f: rat_at(&t.f, &path)?,
                rank: rat_int(t.rank),
                ch: t
                    .ch
                    .iter()
                    .map(|x| x.to_scalar(&path))
                    .collect::<Result<_>>()?,
            });
        }
        tangent_pieces.push(pieces);
    }
    let tangent = KClass {
        label: "TX".into(),
        support: Support::Ordinary,
        pieces: tangent_pieces,
    };

    // line bundles
    let mut line_bundles = Vec::new();
    if let Some(lbs) = &spec.line_bundles {
        for (li, lb) in lbs.iter().enumerate() {
            let path = format!("$.line_bundles[{}]", li);
            let mut xi0 = vec![Scalar::zero(); dim];
            for (name, val) in &lb.xi0 {
                let idx = space
                    .index_of(name)
                    .ok_or_else(|| Error::schema(&path, format!("unknown class {:?}", name)))?;
                xi0[idx] = Scalar::from_rat(rat_at(val, &path)?);
            }
            let mut f = vec![Rat::zero(); sectors.len()];
            for (label, val) in &lb.f {
                let v = *sector_of_label
                    .get(label)
                    .ok_or_else(|| Error::schema(&path, format!("unknown sector {:?}", label)))?;
                f[v] = rat_at(val, &path)?;
            }
            line_bundles.push(LineBundle {
                name: lb.name.clone(),
                xi0,
                f,
            });
        }
    }

    let point_class = match &spec.point_class {
        Some(name) => Some(space.index_of(name).ok_or_else(|| {
            Error::schema("$.point_class", format!("unknown class {:?}", name))
        })?),
        None => None,
    };

    let h2_untwisted: Vec<usize> = space
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.sector == 0 && c.internal_deg == 2)
        .map(|(i, _)| i)
        .collect();

    let datum = OrbifoldDatum {
        name: spec.name.clone().unwrap_or_else(|| "compact".into()),
        dim: n,
        compact: true,
        sectors,
        ordinary: space.clone(),
        csupp: space.clone(),
        pairing,
        cup_oo: cup.clone(),
        cup_oc: cup,
        c1,
        tangent,
        line_bundles,
        point_class,
        h2_untwisted,
        quotient: None,
    };
    datum.check_invariants()?;
    datum.tangent.check_involution_consistency(&datum)?;

    // named K-classes
    let mut named = Vec::new();
    if let Some(ks) = &spec.kclasses {
        for (ki, k) in ks.iter().enumerate() {
            let path = format!("$.kclasses[{}]", ki);
            let support = match k.support.as_deref() {
                None | Some("ordinary") => Support::Ordinary,
                Some("compact") => Support::Compact,
                Some(o) => return Err(Error::schema(&path, format!("bad support {:?}", o))),
            };
            let kc = if let Some(ch) = &k.untwisted_ch {
                let vals: Vec<Scalar> = ch
                    .iter()
                    .map(|x| x.to_scalar(&path))
                    .collect::<Result<_>>()?;
                KClass::from_untwisted_ch(&datum, &k.name, vals, support)
            } else if let Some(pieces) = &k.pieces {
                let mut all = vec![Vec::new(); datum.sectors.len()];
                for (label, ps) in pieces {
                    let v = *sector_of_label
                        .get(label)
                        .ok_or_else(|| Error::schema(&path, format!("unknown sector {:?}", label)))?;
                    for p in ps {
                        all[v].push(EigenPiece {
                            f: rat_at(&p.f, &path)?,
                            rank: rat_at(&p.rank, &path)?,
                            ch: p
                                .ch
                                .iter()
                                .map(|x| x.to_scalar(&path))
                                .collect::<Result<_>>()?,
                        });
                    }
                }
                KClass {
                    label: k.name.clone(),
                    support,
                    pieces: all,
                }
            } else {
                return Err(Error::schema(&path, "kclass needs untwisted_ch or pieces"));
            };
            named.push((k.name.clone(), kc));
        }
    }

    Ok(OrbifoldInput {
        datum,
        named_kclasses: named,
    })
}

// ---------------------------------------------------------------------------
// K-class name resolution
// ---------------------------------------------------------------------------

/// Resolve a K-class by CLI-style name: "O", "O(k)", "O_pt", "sky:<char>",
/// "sky:reg", or a name declared in the input file's kclasses list.
pub fn resolve_kclass(
    datum: &OrbifoldDatum,
    named: &[(String, KClass)],
    name: &str,
) -> Result<KClass> {
    if let Some((_, k)) = named.iter().find(|(n, _)| n == name) {
        return Ok(k.clone());
    }
    if name == "O" {
        return Ok(KClass::structure_sheaf(datum));
    }
    if name == "O_pt" {
        let idx = datum.point_class.ok_or_else(|| {
            Error::Lookup("datum has no point class for O_pt".into())
        })?;
        let cls = datum.ordinary.classes_of_sector(0);
        let mut ch = vec![Scalar::zero(); cls.len()];
        let pos = cls.iter().position(|&i| i == idx).unwrap();
        ch[pos] = Scalar::one();
        return Ok(KClass::from_untwisted_ch(datum, "O_pt", ch, Support::Ordinary));
    }
    if let Some(rest) = name.strip_prefix("O(").and_then(|r| r.strip_suffix(")")) {
        let k: i64 = rest
            .parse()
            .map_err(|_| Error::Lookup(format!("bad line-bundle power {:?}", rest)))?;
        let base = KClass::line_bundle(datum, "O(1)")?;
        let mut out = KClass::structure_sheaf(datum);
        let factor = if k >= 0 { base } else { base.dual(datum) };
        for _ in 0..k.abs() {
            out = out.tensor(&factor, datum)?;
        }
        out.label = name.into();
        return Ok(out);
    }
    if let Some(charspec) = name.strip_prefix("sky:") {
        let coeffs = parse_virtual_character(datum, charspec)?;
        return crate::kclass::skyscraper(datum, &coeffs);
    }
    Err(Error::Lookup(format!("unknown K-class {:?}", name)))
}

/// Parse "rho1", "2*rho1+rho2", "reg" into (irrep index, multiplicity) pairs.
pub fn parse_virtual_character(
    datum: &OrbifoldDatum,
    text: &str,
) -> Result<Vec<(usize, i64)>> {
    let q = datum
        .quotient
        .as_ref()
        .ok_or_else(|| Error::Lookup("virtual characters need a quotient datum".into()))?;
    let spec = &q.spec;
    if text == "reg" {
        // regular representation: sum of dim(rho) * rho
        let mut out = Vec::new();
        for (i, row) in spec.char_table.iter().enumerate() {
            let d = row[0]
                .as_rational()
                .and_then(|r| if r.is_integer() { Some(r.to_integer()) } else { None })
                .ok_or_else(|| Error::Data("irrep dimension is not an integer".into()))?;
            let d: i64 = d.try_into().map_err(|_| Error::Data("dimension overflow".into()))?;
            out.push((i, d));
        }
        return Ok(out);
    }
    let mut out: Vec<(usize, i64)> = Vec::new();
    for term in text.split('+') {
        let term = term.trim();
        let (mult, name) = match term.split_once('*') {
            Some((m, n)) => (
                m.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Lookup(format!("bad multiplicity in {:?}", term)))?,
                n.trim(),
            ),
            None => (1, term),
        };
        let idx = spec.irrep_index(name)?;
        match out.iter_mut().find(|(i, _)| *i == idx) {
            Some((_, m)) => *m += mult,
            None => out.push((idx, mult)),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Correlator tables
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorTableJson {
    pub schema: Option<String>,
    pub nef_basis: usize,
    pub divisor_reduced: Option<bool>,
    /// Declared completeness: omitted entries within these orders are zero.
    pub complete_to: CompleteToJson,
    pub entries: Vec<CorrelatorEntryJson>,
}

#[derive(Deserialize, Debug)]
pub struct CompleteToJson {
    pub tau_order: u32,
    pub q_order: u32,
}

#[derive(Deserialize, Debug)]
pub struct CorrelatorEntryJson {
    /// Canonical class indices: ordinary classes first, then compact-support
    /// classes that are not identified with ordinary ones.
    pub insertions: Vec<usize>,
    pub d: Vec<i64>,
    pub value: String,
}

pub fn parse_correlators(text: &str) -> Result<CorrelatorTableJson> {
    let t: CorrelatorTableJson = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("$:{}:{}", e.line(), e.column()), e.to_string()))?;
    if let Some(s) = &t.schema {
        if s != CORRELATOR_SCHEMA {
            return Err(Error::schema("$.schema", format!("expected {}", CORRELATOR_SCHEMA)));
        }
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct PotentialsJson {
    pub schema: Option<String>,
    /// Names of the degree-2 coordinates the potential depends on (sector
    /// labels for twisted coordinates).
    pub variables: Vec<String>,
    /// Genus-zero potential monomials: exponent vector + rational value.
    pub f0: Vec<MonomialJson>,
    /// Optional q-power series part sum N_d q^d (one nef direction).
    pub f0_q: Option<Vec<(Vec<i64>, String)>>,
}

#[derive(Deserialize, Debug)]
pub struct MonomialJson {
    pub exps: Vec<u16>,
    pub value: String,
}

pub fn parse_potentials(text: &str) -> Result<PotentialsJson> {
    let t: PotentialsJson = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("$:{}:{}", e.line(), e.column()), e.to_string()))?;
    if let Some(s) = &t.schema {
        if s != POTENTIALS_SCHEMA {
            return Err(Error::schema("$.schema", format!("expected {}", POTENTIALS_SCHEMA)));
        }
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Fourier-Mukai assignments
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct FmAssignmentJson {
    pub schema: Option<String>,
    pub curves: Vec<FmCurveJson>,
}

#[derive(Deserialize, Debug)]
pub struct FmCurveJson {
    pub label: String,
    /// Virtual character as irrep name -> integer multiplicity.
    pub character: BTreeMap<String, i64>,
    pub dim: Option<i64>,
}

pub fn parse_fm(text: &str) -> Result<FmAssignmentJson> {
    let t: FmAssignmentJson = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("$:{}:{}", e.line(), e.column()), e.to_string()))?;
    if let Some(s) = &t.schema {
        if s != FM_SCHEMA {
            return Err(Error::schema("$.schema", format!("expected {}", FM_SCHEMA)));
        }
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// External transforms
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct TransformJson {
    pub schema: Option<String>,
    /// Matrix of Laurent polynomials in z: entry = list of [z_power, value].
    pub matrix: Vec<Vec<Vec<LaurentTermJson>>>,
}

#[derive(Deserialize, Debug)]
pub struct LaurentTermJson(pub i32, pub NumJson);

pub fn parse_transform(text: &str) -> Result<TransformJson> {
    let t: TransformJson = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("$:{}:{}", e.line(), e.column()), e.to_string()))?;
    if let Some(s) = &t.schema {
        if s != TRANSFORM_SCHEMA {
            return Err(Error::schema("$.schema", format!("expected {}", TRANSFORM_SCHEMA)));
        }
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Hard Lefschetz pairs
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct HlPairJson {
    pub schema: Option<String>,
    pub degrees: Vec<String>,
    pub omega: Vec<Vec<NumJson>>,
}

pub fn parse_hlpair(text: &str) -> Result<HlPairJson> {
    let t: HlPairJson = serde_json::from_str(text)
        .map_err(|e| Error::schema(format!("$:{}:{}", e.line(), e.column()), e.to_string()))?;
    if let Some(s) = &t.schema {
        if s != HLPAIR_SCHEMA {
            return Err(Error::schema("$.schema", format!("expected {}", HLPAIR_SCHEMA)));
        }
    }
    Ok(t)
}

/// CohElement from named coefficients (report/CLI helper).
pub fn element_from_names(
    datum: &OrbifoldDatum,
    support: Support,
    coeffs: &BTreeMap<String, String>,
) -> Result<CohElement> {
    let space = match support {
        Support::Ordinary => datum.ordinary.clone(),
        Support::Compact => datum.csupp.clone(),
    };
    let mut e = CohElement::zero(space.clone());
    for (name, val) in coeffs {
        let idx = space
            .index_of(name)
            .ok_or_else(|| Error::Lookup(format!("unknown class {:?}", name)))?;
        e.coeffs[idx] = Scalar::from_rat(rat_at(val, "$")?);
    }
    Ok(e)
}
