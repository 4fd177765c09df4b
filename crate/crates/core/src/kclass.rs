//! K-theory classes with per-sector eigen-data.
//!
//! A class is stored as its stabilizer eigen-decomposition over every inertia
//! component: pieces (f, rank, ch) where the stabilizer acts on the piece by
//! e^{2 pi i f} and ch is the Chern character of the piece in the sector's
//! cohomology (ordinary or compactly supported). Tensor products convolve the
//! eigenvalues and cup the characters; duals negate the eigenvalues and
//! alternate the character signs.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graded::{CohElement, Support};
use crate::orbifold::OrbifoldDatum;
use crate::scalar::{rat_int, Rat, Scalar};

#[derive(Clone, Debug)]
pub struct EigenPiece {
    /// Stabilizer eigenphase in [0,1).
    pub f: Rat,
    /// Virtual rank of the piece.
    pub rank: Rat,
    /// Chern character, coefficients over the sector's classes of the
    /// carrying space (in class-index order within the sector).
    pub ch: Vec<Scalar>,
}

#[derive(Clone, Debug)]
pub struct KClass {
    pub label: String,
    pub support: Support,
    /// pieces[v] lists the eigen-pieces on sector v.
    pub pieces: Vec<Vec<EigenPiece>>,
}

fn fmod1(f: &Rat) -> Rat {
    let fl = f.floor();
    f - fl
}

impl KClass {
    pub fn zero(datum: &OrbifoldDatum, support: Support) -> KClass {
        KClass {
            label: "0".into(),
            support,
            pieces: vec![Vec::new(); datum.sectors.len()],
        }
    }

    /// The structure sheaf: trivial rank-1 piece with f = 0 on every sector.
    pub fn structure_sheaf(datum: &OrbifoldDatum) -> KClass {
        let mut pieces = Vec::new();
        for v in 0..datum.sectors.len() {
            let cls = datum.ordinary.classes_of_sector(v);
            let mut ch = vec![Scalar::zero(); cls.len()];
            let unit_pos = cls
                .iter()
                .position(|&i| datum.ordinary.classes[i].internal_deg == 0)
                .expect("sector unit class");
            ch[unit_pos] = Scalar::one();
            pieces.push(vec![EigenPiece {
                f: Rat::zero(),
                rank: Rat::one(),
                ch,
            }]);
        }
        KClass {
            label: "O".into(),
            support: Support::Ordinary,
            pieces,
        }
    }

    /// A line bundle registered on the datum: f = f_v(xi) on sector v and
    /// ch = e^{xi0} on the untwisted component.
    pub fn line_bundle(datum: &OrbifoldDatum, name: &str) -> Result<KClass> {
        let lb = datum.line_bundle(name)?.clone();
        let mut pieces = Vec::new();
        for v in 0..datum.sectors.len() {
            let cls = datum.ordinary.classes_of_sector(v);
            let mut ch = vec![Scalar::zero(); cls.len()];
            // exp of the (nilpotent, untwisted) first Chern class restricted
            // to the sector; off the untwisted sector the restriction of xi0
            // is zero for the data supported here.
            let unit_pos = cls
                .iter()
                .position(|&i| datum.ordinary.classes[i].internal_deg == 0)
                .expect("sector unit class");
            ch[unit_pos] = Scalar::one();
            if v == 0 {
                // e^{xi0} = 1 + xi0 + xi0^2/2 + ...
                let mut power = datum.unit();
                let xi0 = CohElement::from_coeffs(datum.ordinary.clone(), lb.xi0.clone());
                let mut fact = Rat::one();
                for k in 1..=datum.dim.max(0) as usize {
                    power = datum.cup_elements(&power, &xi0).expect("cup");
                    if power.is_zero() {
                        break;
                    }
                    fact *= rat_int(k as i64);
                    let term = power.scale(&Scalar::from_rat(Rat::one() / fact.clone()));
                    for (slot, &gi) in ch.iter_mut().zip(cls.iter()) {
                        *slot = slot.add(&term.coeffs[gi]);
                    }
                }
            }
            pieces.push(vec![EigenPiece {
                f: lb.f[v].clone(),
                rank: Rat::one(),
                ch,
            }]);
        }
        Ok(KClass {
            label: format!("L_{}", name),
            support: Support::Ordinary,
            pieces,
        })
    }

    /// A class given by an explicit Chern character on the untwisted sector
    /// only (rank may be zero); used for sheaves like O_pt, O_C, O_S on
    /// manifolds.
    pub fn from_untwisted_ch(
        datum: &OrbifoldDatum,
        label: &str,
        ch: Vec<Scalar>,
        support: Support,
    ) -> KClass {
        let space = match support {
            Support::Ordinary => &datum.ordinary,
            Support::Compact => &datum.csupp,
        };
        let mut pieces = vec![Vec::new(); datum.sectors.len()];
        let cls = space.classes_of_sector(0);
        assert_eq!(cls.len(), ch.len());
        let rank = ch
            .iter()
            .zip(cls.iter())
            .find(|(_, &i)| space.classes[i].internal_deg == 0)
            .and_then(|(c, _)| c.as_rational())
            .unwrap_or_else(Rat::zero);
        pieces[0] = vec![EigenPiece {
            f: Rat::zero(),
            rank,
            ch,
        }];
        KClass {
            label: label.into(),
            support,
            pieces,
        }
    }

    pub fn add(&self, other: &KClass) -> KClass {
        assert_eq!(self.support, other.support);
        let mut out = self.clone();
        out.label = format!("{}+{}", self.label, other.label);
        for (v, ps) in other.pieces.iter().enumerate() {
            for p in ps {
                merge_piece(&mut out.pieces[v], p.clone());
            }
        }
        out
    }

    pub fn scale_int(&self, k: i64) -> KClass {
        let s = Scalar::from_int(k);
        KClass {
            label: format!("{}*{}", k, self.label),
            support: self.support,
            pieces: self
                .pieces
                .iter()
                .map(|ps| {
                    ps.iter()
                        .map(|p| EigenPiece {
                            f: p.f.clone(),
                            rank: p.rank.clone() * rat_int(k),
                            ch: p.ch.iter().map(|c| c.mul(&s)).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Dual class: eigenvalues invert, Chern characters alternate in degree.
    pub fn dual(&self, datum: &OrbifoldDatum) -> KClass {
        let space = match self.support {
            Support::Ordinary => &datum.ordinary,
            Support::Compact => &datum.csupp,
        };
        let mut pieces = Vec::new();
        for (v, ps) in self.pieces.iter().enumerate() {
            let cls = space.classes_of_sector(v);
            let mut out: Vec<EigenPiece> = Vec::new();
            for p in ps {
                let f = if p.f.is_zero() {
                    Rat::zero()
                } else {
                    Rat::one() - p.f.clone()
                };
                let ch = p
                    .ch
                    .iter()
                    .zip(cls.iter())
                    .map(|(c, &gi)| {
                        let half = space.classes[gi].internal_deg / 2;
                        let sign = if half % 2 == 0 { 1 } else { -1 };
                        c.conj().mul(&Scalar::from_int(sign))
                    })
                    .collect();
                merge_piece(
                    &mut out,
                    EigenPiece {
                        f,
                        rank: p.rank.clone(),
                        ch,
                    },
                );
            }
            pieces.push(out);
        }
        KClass {
            label: format!("{}^v", self.label),
            support: self.support,
            pieces,
        }
    }

    /// Tensor product. Supports ordinary x ordinary and mixed
    /// ordinary x compact (result compactly supported).
    pub fn tensor(&self, other: &KClass, datum: &OrbifoldDatum) -> Result<KClass> {
        use Support::*;
        let support = match (self.support, other.support) {
            (Ordinary, Ordinary) => Ordinary,
            (Ordinary, Compact) | (Compact, Ordinary) => Compact,
            (Compact, Compact) => {
                return Err(Error::UnsupportedPairing(
                    "tensor of two compactly supported classes".into(),
                ))
            }
        };
        let mut pieces = Vec::new();
        for v in 0..datum.sectors.len() {
            let mut out: Vec<EigenPiece> = Vec::new();
            for pa in &self.pieces[v] {
                for pb in &other.pieces[v] {
                    let f = fmod1(&(pa.f.clone() + pb.f.clone()));
                    let ch = cup_local(datum, v, self.support, &pa.ch, other.support, &pb.ch)?;
                    merge_piece(
                        &mut out,
                        EigenPiece {
                            f,
                            rank: pa.rank.clone() * pb.rank.clone(),
                            ch,
                        },
                    );
                }
            }
            pieces.push(out);
        }
        Ok(KClass {
            label: format!("{}x{}", self.label, other.label),
            support,
            pieces,
        })
    }

    /// The orbifold Chern character sum_f e^{2 pi i f} ch((pr^* V)_{v,f}).
    pub fn tch(&self, datum: &OrbifoldDatum) -> Result<CohElement> {
        let space = match self.support {
            Support::Ordinary => datum.ordinary.clone(),
            Support::Compact => datum.csupp.clone(),
        };
        let mut out = CohElement::zero(space.clone());
        for (v, ps) in self.pieces.iter().enumerate() {
            let cls = space.classes_of_sector(v);
            for p in ps {
                if p.ch.len() != cls.len() {
                    return Err(Error::Data(format!(
                        "eigen-piece on sector {} has {} character entries, expected {}",
                        datum.sectors[v].label,
                        p.ch.len(),
                        cls.len()
                    )));
                }
                let phase = Scalar::root_of_unity(&p.f);
                for (c, &gi) in p.ch.iter().zip(cls.iter()) {
                    out.coeffs[gi] = out.coeffs[gi].add(&phase.mul(c));
                }
            }
        }
        Ok(out)
    }

    /// age_v(V) = sum_f f * rank_f on sector v.
    pub fn age_on_sector(&self, v: usize) -> Rat {
        self.pieces[v]
            .iter()
            .map(|p| p.f.clone() * p.rank.clone())
            .sum()
    }

    /// Number of twisted eigen-piece dimensions sum_{f != 0} l_{v,f}.
    pub fn twisted_rank_on_sector(&self, v: usize) -> Rat {
        self.pieces[v]
            .iter()
            .filter(|p| !p.f.is_zero())
            .map(|p| p.rank.clone())
            .sum()
    }

    /// c1 of pr^*V restricted to sector v, as a local coefficient vector.
    pub fn c1_on_sector(&self, datum: &OrbifoldDatum, v: usize) -> Vec<Scalar> {
        let space = match self.support {
            Support::Ordinary => &datum.ordinary,
            Support::Compact => &datum.csupp,
        };
        let cls = space.classes_of_sector(v);
        let mut out = vec![Scalar::zero(); cls.len()];
        for p in &self.pieces[v] {
            for ((slot, c), &gi) in out.iter_mut().zip(p.ch.iter()).zip(cls.iter()) {
                if space.classes[gi].internal_deg == 2 {
                    *slot = slot.add(c);
                }
            }
        }
        out
    }

    /// Consistency of eigen-data under the involution: the pieces at
    /// (v, f) must match the pieces at (inv(v), 1-f) in rank.
    pub fn check_involution_consistency(&self, datum: &OrbifoldDatum) -> Result<()> {
        for (v, ps) in self.pieces.iter().enumerate() {
            let w = datum.sectors[v].inv_partner;
            for p in ps {
                let f_dual = if p.f.is_zero() {
                    Rat::zero()
                } else {
                    Rat::one() - p.f.clone()
                };
                let rank_w: Rat = self.pieces[w]
                    .iter()
                    .filter(|q| q.f == f_dual)
                    .map(|q| q.rank.clone())
                    .sum();
                if rank_w != p.rank {
                    return Err(Error::Data(format!(
                        "eigen-data of {} at sector {} (f = {}) has rank {} but \
                         the involution partner carries rank {}",
                        self.label, datum.sectors[v].label, p.f, p.rank, rank_w
                    )));
                }
            }
        }
        Ok(())
    }
}

fn merge_piece(list: &mut Vec<EigenPiece>, p: EigenPiece) {
    if p.rank.is_zero() && p.ch.iter().all(|c| c.is_zero()) {
        return;
    }
    match list.iter_mut().find(|q| q.f == p.f) {
        Some(q) => {
            q.rank += p.rank;
            for (a, b) in q.ch.iter_mut().zip(p.ch.iter()) {
                *a = a.add(b);
            }
        }
        None => {
            list.push(p);
            list.sort_by(|a, b| a.f.cmp(&b.f));
        }
    }
}

/// Cup product of local sector vectors, dispatching on supports.
fn cup_local(
    datum: &OrbifoldDatum,
    v: usize,
    sa: Support,
    a: &[Scalar],
    sb: Support,
    b: &[Scalar],
) -> Result<Vec<Scalar>> {
    let space_of = |s: Support| match s {
        Support::Ordinary => &datum.ordinary,
        Support::Compact => &datum.csupp,
    };
    let ga = globalize(space_of(sa), v, a);
    let gb = globalize(space_of(sb), v, b);
    let ea = CohElement::from_coeffs(space_of(sa).clone(), ga);
    let eb = CohElement::from_coeffs(space_of(sb).clone(), gb);
    let prod = datum.cup_elements(&ea, &eb)?;
    let out_space = prod.space.clone();
    let cls = out_space.classes_of_sector(v);
    Ok(cls.iter().map(|&gi| prod.coeffs[gi].clone()).collect())
}

fn globalize(space: &std::sync::Arc<crate::graded::GradedSpace>, v: usize, local: &[Scalar]) -> Vec<Scalar> {
    let cls = space.classes_of_sector(v);
    let mut out = vec![Scalar::zero(); space.dim()];
    for (c, &gi) in local.iter().zip(cls.iter()) {
        out[gi] = c.clone();
    }
    out
}

/// Localize a global element to the sector's coefficient vector.
pub fn localize(space: &crate::graded::GradedSpace, v: usize, global: &[Scalar]) -> Vec<Scalar> {
    space
        .classes_of_sector(v)
        .iter()
        .map(|&gi| global[gi].clone())
        .collect()
}

/// Twisted skyscraper O_0 tensor a virtual representation, on a quotient
/// orbifold [C^n/G]. The eigen-pieces are computed from the equivariant
/// Koszul resolution transverse to each fixed locus.
pub fn skyscraper(datum: &OrbifoldDatum, char_coeffs: &[(usize, i64)]) -> Result<KClass> {
    let q = datum
        .quotient
        .as_ref()
        .ok_or_else(|| Error::Data("skyscraper classes need a quotient datum".into()))?;
    let spec = &q.spec;
    let powers = spec
        .power_map
        .as_ref()
        .ok_or_else(|| Error::Data("skyscraper classes need class power maps".into()))?;

    let dim_rho = spec.virtual_trace(char_coeffs, 0);
    let mut pieces: Vec<Vec<EigenPiece>> = Vec::new();
    for (v, cls) in spec.classes.iter().enumerate() {
        let local_dim = datum.csupp.classes_of_sector(v).len();
        if v == 0 {
            // (dim rho) times the compactly supported top class
            let mut ch = vec![Scalar::zero(); local_dim];
            ch[0] = dim_rho.clone();
            pieces.push(vec![EigenPiece {
                f: Rat::zero(),
                rank: Rat::zero(),
                ch,
            }]);
            continue;
        }
        // decompose rho (x) Lambda_{-1}(Q_trans^dual) under <g>
        let m = cls.order as i64;
        let mut out: Vec<EigenPiece> = Vec::new();
        for j in 0..m {
            // multiplicity of e^{2 pi i j/m}: (1/m) sum_k Tr(g^k | W) zeta^{-jk}
            let mut acc = Scalar::zero();
            for k in 0..m {
                let ck = powers[v][(k as usize) % powers[v].len()];
                let mut tr = spec.virtual_trace(char_coeffs, ck);
                for f in &cls.phases {
                    if f.is_zero() {
                        continue;
                    }
                    let factor = Scalar::one().sub(&Scalar::root_of_unity(
                        &(-(f.clone() * rat_int(k))),
                    ));
                    tr = tr.mul(&factor);
                }
                acc = acc.add(&tr.mul(&Scalar::root_of_unity(&Rat::new(
                    (-(j * k)).into(),
                    m.into(),
                ))));
            }
            acc = acc.div(&Scalar::from_int(m));
            if acc.is_zero() {
                continue;
            }
            let mult = acc.as_rational().ok_or_else(|| {
                Error::Data(format!(
                    "non-integral eigen-multiplicity on sector {}",
                    cls.label
                ))
            })?;
            if !mult.is_integer() {
                return Err(Error::Data(format!(
                    "non-integral eigen-multiplicity {} on sector {}",
                    mult, cls.label
                )));
            }
            let mut ch = vec![Scalar::zero(); local_dim];
            ch[0] = Scalar::from_rat(mult.clone());
            out.push(EigenPiece {
                f: Rat::new(j.into(), m.into()),
                rank: Rat::zero(),
                ch,
            });
        }
        pieces.push(out);
    }
    let label = char_coeffs
        .iter()
        .map(|(i, m)| format!("{}{}", if *m == 1 { String::new() } else { format!("{}*", m) }, spec.irrep_names[*i]))
        .collect::<Vec<_>>()
        .join("+");
    Ok(KClass {
        label: format!("O_0(x){}", label),
        support: Support::Compact,
        pieces,
    })
}
