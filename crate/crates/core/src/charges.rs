//! Central charges and integral periods: the generic pipeline
//! Z(V) = c(z) (1, L z^{-mu} z^rho Psi(V)) at truncation order, the closed
//! forms for [C^2/G], [C^3/G] and compact CY3 sheaf classes, and the
//! normalized-primitive-section periods.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gamma_frame::{psi_map, FramedSection};
use crate::graded::{CohElement, Support};
use crate::io::PotentialsJson;
use crate::kclass::KClass;
use crate::linalg::Mat;
use crate::orbifold::OrbifoldDatum;
use crate::qdm::{Connection, FundamentalSolution, QdmVars};
use crate::scalar::{parse_rat, rat_int, Rat, Scalar};
use crate::series::{Mono, SSeries, Series, VarSet};
use crate::special::{gamma_fn, pi};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    GenericPipeline,
    ClosedForm,
}

/// A central-charge function as a truncated series: variables are the unit
/// coordinate t0, the reduced tau coordinates, the logarithmic coordinates
/// lt_a of the untwisted degree-2 directions, and the q-variables.
#[derive(Clone, Debug)]
pub struct ChargeFunction {
    pub label: String,
    pub series: SSeries,
    pub provenance: Provenance,
    pub layout: ChargeVars,
}

#[derive(Clone, Debug)]
pub struct ChargeVars {
    pub vars: Arc<VarSet>,
    /// variable slots: t0, then tau classes, then lt (log q) slots, then q.
    pub tau_classes: Vec<usize>,
    pub q_classes: Vec<usize>,
    pub order: u32,
}

impl ChargeVars {
    pub fn new(datum: &OrbifoldDatum, order: u32) -> ChargeVars {
        let qv = QdmVars::new(datum, order);
        let mut names = vec!["t0".to_string()];
        for (k, &cls) in qv.tau_classes.iter().enumerate() {
            let _ = k;
            let c = &datum.ordinary.classes[cls];
            let stem = c.name.strip_prefix("1_").unwrap_or(&c.name);
            names.push(format!("t_{}", stem));
        }
        for a in 0..qv.q_classes.len() {
            names.push(format!("lt{}", a + 1));
        }
        for a in 0..qv.q_classes.len() {
            names.push(format!("q{}", a + 1));
        }
        let hi = (datum.dim.max(1)) as u32;
        let vars = VarSet::new(names, order, order + 2, hi);
        ChargeVars {
            vars,
            tau_classes: qv.tau_classes,
            q_classes: qv.q_classes,
            order,
        }
    }

    pub fn t0_var(&self) -> usize {
        0
    }
    pub fn tau_var(&self, k: usize) -> usize {
        1 + k
    }
    pub fn lt_var(&self, a: usize) -> usize {
        1 + self.tau_classes.len() + a
    }
    pub fn q_var(&self, a: usize) -> usize {
        1 + self.tau_classes.len() + self.q_classes.len() + a
    }

    /// Lift a series in the reduced qdm variables into the charge layout.
    pub fn lift_from_qdm<T: crate::series::Coeff>(
        &self,
        qv: &QdmVars,
        s: &Series<T>,
    ) -> Series<T> {
        let mut out = Series::zero(self.vars.clone());
        for (m, c) in &s.terms {
            let mut m2 = Mono::unit(self.vars.nvars());
            m2.zh = m.zh;
            for k in 0..qv.tau_classes.len() {
                m2.exps[self.tau_var(k)] = m.exps[qv.tau_var(k)];
            }
            for a in 0..qv.q_classes.len() {
                m2.exps[self.q_var(a)] = m.exps[qv.q_var(a)];
            }
            out.add_term(m2, c.clone());
        }
        out
    }

    /// Keep only the small (degree-2) locus: the unit coordinate t0 and every
    /// reduced tau coordinate of Chen-Ruan degree other than 2 are set to zero.
    pub fn restrict_h2(&self, datum: &OrbifoldDatum, s: &SSeries) -> SSeries {
        let mut out = Series::zero(self.vars.clone());
        'terms: for (m, c) in &s.terms {
            if m.exps[self.t0_var()] > 0 {
                continue;
            }
            for (k, &cls) in self.tau_classes.iter().enumerate() {
                if m.exps[self.tau_var(k)] > 0
                    && datum.ordinary.classes[cls].cr_deg != rat_int(2)
                {
                    continue 'terms;
                }
            }
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

/// max |coefficient| difference between two charge functions on the common
/// truncation.
pub fn charge_distance(a: &ChargeFunction, b: &ChargeFunction) -> f64 {
    assert_eq!(a.layout.vars, b.layout.vars, "incomparable charge layouts");
    a.series.sub(&b.series).max_abs()
}

/// Coefficient-wise distance scaled by max(1, |a|, |b|): tolerance checks on
/// series whose coefficients grow large (high-degree instanton sums) read
/// the stated tolerance as a relative one past unit magnitude.
pub fn scaled_series_distance(a: &SSeries, b: &SSeries) -> f64 {
    let diff = a.sub(b);
    let mut worst: f64 = 0.0;
    for (m, c) in &diff.terms {
        let ca = a.coeff(m).map(|x| x.abs()).unwrap_or(0.0);
        let cb = b.coeff(m).map(|x| x.abs()).unwrap_or(0.0);
        let scale = ca.max(cb).max(1.0);
        worst = worst.max(c.abs() / scale);
    }
    worst
}

// ---------------------------------------------------------------------------
// Generic pipeline
// ---------------------------------------------------------------------------

/// The exponential prefactor exp(-(t0 + sum_a lt_a p_a) cup / z) acting on
/// the space carrying `support`.
fn prefactor(
    datum: &OrbifoldDatum,
    layout: &ChargeVars,
    support: Support,
) -> Result<Series<Mat>> {
    let n = match support {
        Support::Ordinary => datum.ordinary.dim(),
        Support::Compact => datum.csupp.dim(),
    };
    let mut expo = Series::zero(layout.vars.clone());
    let mut m0 = Mono::unit(layout.vars.nvars());
    m0.exps[layout.t0_var()] = 1;
    m0.zh = -2;
    expo.add_term(m0, Mat::identity(n).scale(&Scalar::from_int(-1)));
    for (a, &cls) in layout.q_classes.iter().enumerate() {
        let mut x = vec![Scalar::zero(); datum.ordinary.dim()];
        x[cls] = Scalar::one();
        let cup = match support {
            Support::Ordinary => datum.cup_by_ordinary(&x),
            Support::Compact => datum.cup_on_compact(&x),
        };
        let mut m = Mono::unit(layout.vars.nvars());
        m.exps[layout.lt_var(a)] = 1;
        m.zh = -2;
        expo.add_term(m, cup.scale(&Scalar::from_int(-1)));
    }
    expo.exp()
}

/// Z(V) = c(z) (1, L(tau,z) z^{-mu} z^{rho} Psi(V))_orb with
/// c(z) = (2 pi z)^{n/2} / (2 pi i)^n; Calabi-Yau data only (z^rho with
/// rho != 0 would leave the Laurent window).
pub fn central_charge(
    v: &KClass,
    conn: &Connection,
    fund: &FundamentalSolution,
    order: u32,
) -> Result<ChargeFunction> {
    let datum = conn.datum;
    if datum.c1.iter().any(|c| !c.is_zero()) {
        return Err(Error::Domain(
            "the central-charge pipeline requires a Calabi-Yau datum (c1 = 0); \
             z^rho introduces log z terms outside the Laurent ring"
                .into(),
        ));
    }
    if !datum.compact && v.support != Support::Compact {
        return Err(Error::UnsupportedPairing(
            "central charges on non-compact data need compactly supported classes".into(),
        ));
    }
    let layout = ChargeVars::new(datum, order);
    let psi = psi_map(v, datum)?.psi;
    let space = psi.space.clone();

    // y = z^{-mu} Psi(V): zh shift -2 mu per class (mu must be half-integral)
    let mu = datum.mu_diag(&space);
    let mut shifts = Vec::with_capacity(space.dim());
    for m in &mu {
        let two_mu = m.clone() * rat_int(2);
        if !two_mu.is_integer() {
            return Err(Error::Domain(format!(
                "mu eigenvalue {} is not half-integral; the z-window cannot carry z^(-mu)",
                m
            )));
        }
        shifts.push(-two_mu.to_integer().to_i32().unwrap());
    }

    // J(tau,-z) on the carrying side: pair (z^{-mu}Psi, J_full)
    let j_red = crate::qdm::j_function(fund, datum)?;
    let j_lift = layout.lift_from_qdm(&conn.qp.vars, &j_red);
    let pre = prefactor(datum, &layout, Support::Ordinary)?;
    let j_full = pre.apply_v(&j_lift);

    // pairing: sum_{c,o} y_c P[c][o] J_o  (or ordinary/ordinary when compact)
    let mut z = Series::zero(layout.vars.clone());
    for (ci, y) in psi.coeffs.iter().enumerate() {
        if y.is_zero() {
            continue;
        }
        for oj in 0..datum.ordinary.dim() {
            let p = if datum.compact {
                datum.pairing[(ci, oj)].clone()
            } else {
                datum.pairing[(ci, oj)].clone()
            };
            if p.is_zero() {
                continue;
            }
            let w = y.mul(&p);
            // component oj of J, shifted by z^{-2 mu_ci}
            for (m, c) in &j_full.terms {
                if c[oj].is_zero() {
                    continue;
                }
                let mut m2 = m.clone();
                m2.zh += shifts[ci];
                z.add_term(m2, c[oj].mul(&w));
            }
        }
    }
    // c(z): shift z^{n/2} and scale (2 pi)^{n/2} / (2 pi i)^n
    let n = datum.dim;
    let z = z.shift_z(n as i32);
    let cnum = Scalar::from_f64((2.0 * pi()).powf(n as f64 / 2.0))
        .mul(&Scalar::from_f64((2.0 * pi()).powi(-(n as i32))))
        .mul(&Scalar::i().pow_i(-n));
    let series = z.scale(&cnum);
    Ok(ChargeFunction {
        label: format!("Z({})", v.label),
        series,
        provenance: Provenance::GenericPipeline,
        layout,
    })
}

/// Degree-zero residual of a CY charge: every monomial must have vanishing
/// grading weight (tau weights plus half the z-exponent).
pub fn charge_degree_zero_residual(cf: &ChargeFunction, datum: &OrbifoldDatum) -> f64 {
    let mut res: f64 = 0.0;
    for (m, c) in &cf.series.terms {
        let mut w = Rat::zero();
        // t0 has weight 1
        w += rat_int(m.exps[cf.layout.t0_var()] as i64);
        for (k, &cls) in cf.layout.tau_classes.iter().enumerate() {
            let e = m.exps[cf.layout.tau_var(k)];
            if e > 0 {
                let wt = Rat::one() - datum.ordinary.classes[cls].cr_deg.clone() / rat_int(2);
                w += wt * rat_int(e as i64);
            }
        }
        // lt and q weights vanish on CY data; z carries weight 1 per power
        w += Rat::new(m.zh.into(), 2.into());
        if !w.is_zero() {
            res = res.max(c.abs());
        }
    }
    res
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

fn quotient_spec<'a>(datum: &'a OrbifoldDatum) -> Result<&'a crate::orbifold::GroupActionSpec> {
    Ok(&datum
        .quotient
        .as_ref()
        .ok_or_else(|| Error::Domain("closed-form charges need a quotient datum".into()))?
        .spec)
}

fn exp_minus_t0_over_z(layout: &ChargeVars) -> SSeries {
    let mut e = Series::zero(layout.vars.clone());
    let mut m = Mono::unit(layout.vars.nvars());
    m.exps[layout.t0_var()] = 1;
    m.zh = -2;
    e.add_term(m, Scalar::from_int(-1));
    e.exp().expect("no constant term")
}

/// The [C^2/G] closed form: Z(O_0 (x) rho) = e^{-t0/z} (dim rho / |G| +
/// sum_{(g) != 1} Tr(g|rho) sin(pi f_g) / (|C(g)| pi) t^{(g)}).
pub fn charge_c2(
    datum: &OrbifoldDatum,
    char_coeffs: &[(usize, i64)],
    order: u32,
) -> Result<ChargeFunction> {
    let spec = quotient_spec(datum)?;
    if spec.dim != 2 || !spec.sl {
        return Err(Error::Domain(
            "charge_c2 needs a finite subgroup of SL(2, C)".into(),
        ));
    }
    let layout = ChargeVars::new(datum, order);
    let dim_rho = spec.virtual_trace(char_coeffs, 0);
    let mut bracket = Series::zero(layout.vars.clone());
    bracket.add_term(
        Mono::unit(layout.vars.nvars()),
        dim_rho.div(&Scalar::from_int(spec.order as i64)),
    );
    for (k, &cls) in layout.tau_classes.iter().enumerate() {
        let v = datum.ordinary.classes[cls].sector;
        let c = &spec.classes[v];
        let f = c
            .phases
            .iter()
            .find(|f| !f.is_zero())
            .cloned()
            .unwrap_or_else(Rat::zero);
        let s = (pi() * crate::scalar::rat_to_f64(&f)).sin();
        let coeff = spec
            .virtual_trace(char_coeffs, v)
            .mul(&Scalar::from_f64(s / (c.centralizer as f64 * pi())));
        let mut m = Mono::unit(layout.vars.nvars());
        m.exps[layout.tau_var(k)] = 1;
        bracket.add_term(m, coeff);
    }
    let series = exp_minus_t0_over_z(&layout).mul(&bracket);
    Ok(ChargeFunction {
        label: "Z_c2".into(),
        series,
        provenance: Provenance::ClosedForm,
        layout,
    })
}

/// Parsed potential input: the genus-zero potential restricted to the
/// degree-2 coordinates, as a series in the charge layout.
#[derive(Clone, Debug)]
pub struct PotentialInput {
    /// F0 held one order above the charge layout, so that derivatives are
    /// complete at the layout's truncation order.
    pub f0: SSeries,
    /// var slot (within the charge layout) of each potential variable.
    pub var_slots: Vec<usize>,
    pub layout: ChargeVars,
}

impl PotentialInput {
    /// Re-truncate an extended-order series into the charge layout.
    fn embed(&self, s: &SSeries) -> SSeries {
        let mut out = Series::zero(self.layout.vars.clone());
        for (m, c) in &s.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

pub fn potential_input(
    json: &PotentialsJson,
    datum: &OrbifoldDatum,
    layout: &ChargeVars,
) -> Result<PotentialInput> {
    // resolve variables: sector labels (twisted degree-2 coordinates) or
    // untwisted degree-2 class names (lt slots)
    let mut var_slots = Vec::new();
    for name in &json.variables {
        // twisted coordinate: sector label
        let tau_slot = layout.tau_classes.iter().enumerate().find(|(_, &cls)| {
            let c = &datum.ordinary.classes[cls];
            let stem = c.name.strip_prefix("1_").unwrap_or(&c.name);
            stem == name && c.cr_deg == rat_int(2)
        });
        if let Some((k, _)) = tau_slot {
            var_slots.push(layout.tau_var(k));
            continue;
        }
        let q_slot = layout
            .q_classes
            .iter()
            .enumerate()
            .find(|(_, &cls)| datum.ordinary.classes[cls].name == *name);
        if let Some((a, _)) = q_slot {
            var_slots.push(layout.lt_var(a));
            continue;
        }
        return Err(Error::schema(
            "$.variables",
            format!("unknown degree-2 coordinate {:?}", name),
        ));
    }
    // hold F0 one order above the layout: differentiating a series truncated
    // at order D would otherwise lose the degree-D boundary terms
    let ext = VarSet::new(
        layout.vars.names.clone(),
        layout.vars.order + 1,
        (-layout.vars.z_min_h / 2) as u32,
        (layout.vars.z_max_h / 2) as u32,
    );
    let mut f0 = Series::zero(ext.clone());
    for (i, mono) in json.f0.iter().enumerate() {
        if mono.exps.len() != var_slots.len() {
            return Err(Error::schema(
                format!("$.f0[{}]", i),
                "exponent vector length mismatch",
            ));
        }
        let val = parse_rat(&mono.value)
            .ok_or_else(|| Error::schema(format!("$.f0[{}].value", i), "expected rational"))?;
        let mut m = Mono::unit(ext.nvars());
        for (slot, e) in var_slots.iter().zip(mono.exps.iter()) {
            m.exps[*slot] += e;
        }
        f0.add_term(m, Scalar::from_rat(val));
    }
    if let Some(qpart) = &json.f0_q {
        for (d, val) in qpart {
            if d.len() != layout.q_classes.len() {
                return Err(Error::schema("$.f0_q", "degree vector length mismatch"));
            }
            let val = parse_rat(val)
                .ok_or_else(|| Error::schema("$.f0_q", "expected rational"))?;
            let mut m = Mono::unit(ext.nvars());
            for (a, &da) in d.iter().enumerate() {
                m.exps[layout.q_var(a)] = da as u16;
            }
            f0.add_term(m, Scalar::from_rat(val));
        }
    }
    Ok(PotentialInput {
        f0,
        var_slots,
        layout: layout.clone(),
    })
}

impl PotentialInput {
    /// dF0 in the direction of the degree-2 coordinate of the given sector
    /// label (a twisted tau slot), truncated into the charge layout.
    pub fn derivative_in(&self, slot: usize) -> SSeries {
        self.embed(&self.f0.d_dt(slot))
    }

    /// Derivative of F0 along an untwisted degree-2 direction a: classical
    /// part d/d lt_a plus the q-part weighted by the curve degree.
    pub fn derivative_untwisted(&self, a: usize) -> SSeries {
        let lt = self.layout.lt_var(a);
        let qv = self.layout.q_var(a);
        self.embed(&self.f0.d_dt(lt).add(&self.f0.q_d_dq(qv)))
    }

    /// H = 2 F0 - sum_i t^i d_i F0 over the degree-2 coordinates.
    pub fn h_function(&self) -> SSeries {
        let mut h = self.embed(&self.f0.scale(&Scalar::from_int(2)));
        for &slot in &self.var_slots {
            let is_lt = (0..self.layout.q_classes.len()).find(|&a| self.layout.lt_var(a) == slot);
            let d_ext = if let Some(a) = is_lt {
                self.f0
                    .d_dt(self.layout.lt_var(a))
                    .add(&self.f0.q_d_dq(self.layout.q_var(a)))
            } else {
                self.f0.d_dt(slot)
            };
            let mut shifted = Series::zero(self.layout.vars.clone());
            for (m, c) in &d_ext.terms {
                let mut m2 = m.clone();
                m2.exps[slot] += 1;
                shifted.add_term(m2, c.clone());
            }
            h = h.sub(&shifted);
        }
        h
    }
}

/// The [C^3/G] closed form restricted to H^2_CR:
/// Z = dim rho/|G| + sum_{n_g=1} A^rho_g t^{(g)}/|C(g)|
///   + sum_{n_g=0} B^rho_g F_{0,(g^{-1})}(tau).
pub fn charge_c3(
    datum: &OrbifoldDatum,
    char_coeffs: &[(usize, i64)],
    pots: Option<&PotentialInput>,
    order: u32,
) -> Result<ChargeFunction> {
    let spec = quotient_spec(datum)?;
    if spec.dim != 3 || !spec.sl {
        return Err(Error::Domain(
            "charge_c3 needs a finite subgroup of SL(3, C)".into(),
        ));
    }
    let layout = ChargeVars::new(datum, order);
    let dim_rho = spec.virtual_trace(char_coeffs, 0);
    let mut z = Series::zero(layout.vars.clone());
    z.add_term(
        Mono::unit(layout.vars.nvars()),
        dim_rho.div(&Scalar::from_int(spec.order as i64)),
    );
    for (v, cls) in spec.classes.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let n_g = cls.phases.iter().filter(|f| f.is_zero()).count();
        let tr = spec.virtual_trace(char_coeffs, v);
        if n_g == 1 {
            // A^rho_g t^{(g)} / |C(g)| with A = Tr sin(pi f_g)/pi
            let f = cls.phases.iter().find(|f| !f.is_zero()).unwrap();
            let a = tr.mul(&Scalar::from_f64(
                (pi() * crate::scalar::rat_to_f64(f)).sin() / pi(),
            ));
            let k = layout
                .tau_classes
                .iter()
                .position(|&c| datum.ordinary.classes[c].sector == v)
                .ok_or_else(|| Error::Data("missing sector coordinate".into()))?;
            let mut m = Mono::unit(layout.vars.nvars());
            m.exps[layout.tau_var(k)] = 1;
            z.add_term(m, a.div(&Scalar::from_int(cls.centralizer as i64)));
        } else if n_g == 0 {
            // B^rho_g = Tr(g|rho) / prod Gamma(1 - f_j)
            let mut denom = 1.0;
            for f in &cls.phases {
                denom *= gamma_fn(1.0 - crate::scalar::rat_to_f64(f));
            }
            let b = tr.mul(&Scalar::from_f64(1.0 / denom));
            let age: Rat = cls.phases.iter().cloned().sum();
            let w = datum.sectors[v].inv_partner;
            if age == Rat::one() {
                // F_{0,(g^{-1})} = t^{(g)}/|C(g)|
                let k = layout
                    .tau_classes
                    .iter()
                    .position(|&c| datum.ordinary.classes[c].sector == v)
                    .ok_or_else(|| Error::Data("missing sector coordinate".into()))?;
                let mut m = Mono::unit(layout.vars.nvars());
                m.exps[layout.tau_var(k)] = 1;
                z.add_term(m, b.div(&Scalar::from_int(cls.centralizer as i64)));
            } else if age == rat_int(2) {
                // F_{0,(g^{-1})} = dF0/dt^{(g^{-1})}: needs the potential
                let pots = pots.ok_or_else(|| {
                    Error::MissingPotential(format!(
                        "sector {} has age 2; supply F0 in its inverse-sector coordinate",
                        cls.label
                    ))
                })?;
                let k_inv = layout
                    .tau_classes
                    .iter()
                    .position(|&c| datum.ordinary.classes[c].sector == w)
                    .ok_or_else(|| Error::Data("missing inverse-sector coordinate".into()))?;
                let slot = layout.tau_var(k_inv);
                if !pots.var_slots.contains(&slot) {
                    return Err(Error::MissingPotential(format!(
                        "potential input lacks the coordinate of sector {}",
                        spec.classes[w].label
                    )));
                }
                let f = pots.derivative_in(slot);
                z = z.add(&f.scale(&b));
            } else {
                return Err(Error::Data(format!(
                    "sector {} has age {}, outside the SL(3) classification",
                    cls.label, age
                )));
            }
        } else {
            return Err(Error::Data(format!(
                "sector {} has an unexpected fixed-space dimension {}",
                cls.label, n_g
            )));
        }
    }
    Ok(ChargeFunction {
        label: "Z_c3".into(),
        series: z,
        provenance: Provenance::ClosedForm,
        layout,
    })
}

/// CY3 sheaf kinds with the geometric data their closed forms consume.
#[derive(Clone, Debug)]
pub enum Cy3Sheaf {
    Point,
    /// A smooth curve C: its genus and class in H^4.
    Curve { genus: i64, class: CohElement },
    /// A smooth surface S given by its degree-2 class.
    Surface { class: CohElement },
    /// The structure sheaf of X.
    Structure,
}

/// The four closed forms of the CY3 central charges restricted to H^2.
pub fn cy3_sheaf_charges(
    datum: &OrbifoldDatum,
    kind: &Cy3Sheaf,
    pots: Option<&PotentialInput>,
    order: u32,
) -> Result<ChargeFunction> {
    if !datum.compact || datum.dim != 3 || datum.c1.iter().any(|c| !c.is_zero()) {
        return Err(Error::Domain(
            "cy3_sheaf_charges needs a compact Calabi-Yau threefold datum".into(),
        ));
    }
    let layout = ChargeVars::new(datum, order);
    let two_pi_i = Scalar::from_f64(2.0 * pi()).mul(&Scalar::i());
    let int = |x: &CohElement| -> Result<Scalar> { datum.integrate_untwisted(x) };
    let pa_elem = |a: usize| -> CohElement {
        CohElement::basis(datum.ordinary.clone(), layout.q_classes[a])
    };
    let mut z = Series::zero(layout.vars.clone());
    match kind {
        Cy3Sheaf::Point => {
            z.add_term(Mono::unit(layout.vars.nvars()), Scalar::one());
        }
        Cy3Sheaf::Curve { genus, class } => {
            z.add_term(
                Mono::unit(layout.vars.nvars()),
                Scalar::from_int(1 - genus),
            );
            for a in 0..layout.q_classes.len() {
                let v = int(&datum.cup_elements(&pa_elem(a), class)?)?;
                let mut m = Mono::unit(layout.vars.nvars());
                m.exps[layout.lt_var(a)] = 1;
                z.add_term(m, v.div(&two_pi_i).neg());
            }
        }
        Cy3Sheaf::Surface { class } => {
            let s2 = datum.cup_elements(class, class)?;
            let s3 = int(&datum.cup_elements(&s2, class)?)?;
            // chi(S) = int(c2(X) cup S) + int(S^3)
            let c2 = tangent_c2(datum)?;
            let c2s = int(&datum.cup_elements(&c2, class)?)?;
            let chi_s = c2s.add(&s3);
            let c0 = s3
                .div(&Scalar::from_int(8))
                .add(&chi_s.div(&Scalar::from_int(24)));
            z.add_term(Mono::unit(layout.vars.nvars()), c0);
            for a in 0..layout.q_classes.len() {
                let v = int(&datum.cup_elements(&pa_elem(a), &s2)?)?;
                let mut m = Mono::unit(layout.vars.nvars());
                m.exps[layout.lt_var(a)] = 1;
                z.add_term(m, v.div(&Scalar::from_int(2)).div(&two_pi_i));
            }
            let pots = pots.ok_or_else(|| {
                Error::MissingPotential("surface charges need the genus-zero potential".into())
            })?;
            // d_{[S]} F0 = sum_a s_a dF0/dt^a with S = sum s_a p_a
            let mut dsf = Series::zero(layout.vars.clone());
            for (a, &cls) in layout.q_classes.iter().enumerate() {
                let sa = class.coeffs[cls].clone();
                if sa.is_zero() {
                    continue;
                }
                dsf = dsf.add(&pots.derivative_untwisted(a).scale(&sa));
            }
            z = z.add(&dsf.scale(&two_pi_i.mul(&two_pi_i).inv()));
        }
        Cy3Sheaf::Structure => {
            let c2 = tangent_c2(datum)?;
            let c3 = tangent_c3(datum)?;
            let chi_x = int(&c3)?;
            let zeta3 = Scalar::from_f64(crate::special::zeta(3));
            let c0 = zeta3
                .mul(&chi_x)
                .div(&two_pi_i.pow_i(3))
                .neg();
            z.add_term(Mono::unit(layout.vars.nvars()), c0);
            for a in 0..layout.q_classes.len() {
                let v = int(&datum.cup_elements(&pa_elem(a), &c2)?)?;
                let mut m = Mono::unit(layout.vars.nvars());
                m.exps[layout.lt_var(a)] = 1;
                z.add_term(m, v.div(&Scalar::from_int(24)).div(&two_pi_i).neg());
            }
            let pots = pots.ok_or_else(|| {
                Error::MissingPotential("structure-sheaf charges need the potential".into())
            })?;
            z = z.add(&pots.h_function().scale(&two_pi_i.pow_i(3).inv()));
        }
    }
    Ok(ChargeFunction {
        label: "Z_cy3".into(),
        series: z,
        provenance: Provenance::ClosedForm,
        layout,
    })
}

/// Infer the sheaf kind of a CY3 K-class from its Chern character: rank 1 is
/// the structure sheaf, a degree-2 leading term a surface, degree-4 a curve
/// (with genus read off the top component), degree-6 a point.
pub fn infer_cy3_kind(k: &KClass, datum: &OrbifoldDatum) -> Result<Cy3Sheaf> {
    if !datum.compact || datum.dim != 3 {
        return Err(Error::Domain("kind inference needs a compact threefold".into()));
    }
    let tch = k.tch(datum)?;
    let part = |deg: i64| -> CohElement {
        let mut out = CohElement::zero(datum.ordinary.clone());
        for (i, c) in tch.coeffs.iter().enumerate() {
            if datum.ordinary.classes[i].internal_deg == deg {
                out.coeffs[i] = c.clone();
            }
        }
        out
    };
    let (r, s, c2, c3) = (part(0), part(2), part(4), part(6));
    if !r.is_zero() {
        return Ok(Cy3Sheaf::Structure);
    }
    if !s.is_zero() {
        return Ok(Cy3Sheaf::Surface { class: s });
    }
    if !c2.is_zero() {
        // ch3 = (1 - g) [pt]
        let chi = datum.integrate_untwisted(&c3)?;
        let one_minus_g = chi
            .as_rational()
            .filter(|x| x.is_integer())
            .ok_or_else(|| Error::Data("curve class with non-integral ch3".into()))?;
        let g = 1 - one_minus_g.to_integer().to_i64().unwrap();
        return Ok(Cy3Sheaf::Curve { genus: g, class: c2 });
    }
    if !c3.is_zero() {
        return Ok(Cy3Sheaf::Point);
    }
    Err(Error::Data("zero class has no sheaf kind".into()))
}

/// c2(TX) as a cohomology class (from the f = 0 tangent Chern character).
pub fn tangent_c2(datum: &OrbifoldDatum) -> Result<CohElement> {
    // ch2 = (c1^2 - 2 c2)/2; on CY data c2 = -2 ch2 / ... with c1 = 0:
    // c2 = -2 * ch2 / 2 * 2 = -2 ch2? ch2 = -c2 when c1 = 0, so c2 = -ch2.
    let mut out = CohElement::zero(datum.ordinary.clone());
    let cls = datum.ordinary.classes_of_sector(0);
    for p in &datum.tangent.pieces[0] {
        if !p.f.is_zero() {
            continue;
        }
        for (pos, &gi) in cls.iter().enumerate() {
            if datum.ordinary.classes[gi].internal_deg == 4 {
                out.coeffs[gi] = out.coeffs[gi].sub(&p.ch[pos]);
            }
        }
    }
    Ok(out)
}

/// c3(TX) for Calabi-Yau data: c3 = 2 ch3 when c1 = 0.
pub fn tangent_c3(datum: &OrbifoldDatum) -> Result<CohElement> {
    let mut out = CohElement::zero(datum.ordinary.clone());
    let cls = datum.ordinary.classes_of_sector(0);
    for p in &datum.tangent.pieces[0] {
        if !p.f.is_zero() {
            continue;
        }
        for (pos, &gi) in cls.iter().enumerate() {
            if datum.ordinary.classes[gi].internal_deg == 6 {
                out.coeffs[gi] = out.coeffs[gi].add(&p.ch[pos].mul(&Scalar::from_int(2)));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Integral periods and the A0 vector
// ---------------------------------------------------------------------------

/// Pi_A(tau) = (s~_0(tau, e^{pi i} z), A(tau, z))_F with the normalized
/// primitive section s~_0 = (2 pi z)^{n/2} / (-2 pi)^n * 1, restricted to the
/// Euler-vanishing (degree-2) locus.
pub fn integral_period(
    a: &FramedSection,
    conn: &Connection,
    fund: &FundamentalSolution,
    order: u32,
) -> Result<ChargeFunction> {
    let datum = conn.datum;
    if datum.c1.iter().any(|c| !c.is_zero()) {
        return Err(Error::Locus(
            "the Euler field vanishes only on Calabi-Yau degree-2 loci (c1 = 0 required)".into(),
        ));
    }
    let layout = ChargeVars::new(datum, order);
    let n = datum.dim;

    // flat section A(tau, z) = L(tau,z) z^{-mu} psi (dual L on compact support)
    let support = a.support();
    let space = a.psi.space.clone();
    let mu = datum.mu_diag(&space);
    let l = match support {
        Support::Ordinary => &fund.l,
        Support::Compact => &fund.l_dual,
    };
    // z^{-mu} psi: per-class shifts
    let mut sec = Series::zero(conn.qp.vars.vars.clone());
    for (i, c) in a.psi.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let two_mu = mu[i].clone() * rat_int(2);
        if !two_mu.is_integer() {
            return Err(Error::Domain("mu is not half-integral".into()));
        }
        let shift = -two_mu.to_integer().to_i32().unwrap();
        let mut basis = vec![Scalar::zero(); space.dim()];
        basis[i] = c.clone();
        let col = l.apply_vec(&basis).shift_z(shift);
        sec = sec.add(&col);
    }
    let sec = layout.lift_from_qdm(&conn.qp.vars, &sec);
    let pre = prefactor(datum, &layout, support)?;
    let sec = pre.apply_v(&sec);

    // pair with s~_0(e^{pi i} z): the rotation sends z^{n/2} to i^n z^{n/2}
    let unit = datum.unit();
    let mut series = Series::zero(layout.vars.clone());
    for (m, c) in &sec.terms {
        let el = CohElement::from_coeffs(space.clone(), c.clone());
        let p = datum.chen_ruan_pairing(&el, &unit)?;
        if p.is_zero() {
            continue;
        }
        series.add_term(m.clone(), p);
    }
    let series = series.shift_z(n as i32);
    let const_factor = Scalar::from_f64((2.0 * pi()).powf(n as f64 / 2.0))
        .mul(&Scalar::i().pow_i(n))
        .mul(&Scalar::from_f64((-2.0 * pi()).powi(-(n as i32))));
    let series = series.scale(&const_factor);
    let series = layout.restrict_h2(datum, &series);
    Ok(ChargeFunction {
        label: format!("Pi({})", a.label),
        series,
        provenance: Provenance::GenericPipeline,
        layout,
    })
}

#[derive(Clone, Debug)]
pub struct A0Report {
    pub section: FramedSection,
    pub sign_ambiguous: bool,
    pub nilpotency_order: usize,
    pub span_verified: bool,
}

/// The distinguished integral vector A0 = +/- Psi(O_pt): verified to span
/// the image of (Log M)^n for the Galois action M of an ample class.
pub fn a0_vector(datum: &OrbifoldDatum, xi_name: &str, tol: f64) -> Result<A0Report> {
    if !datum.compact {
        return Err(Error::Hypothesis(
            "A0 characterization needs a compact Calabi-Yau datum".into(),
        ));
    }
    let m = crate::galois::galois_on_sol(datum, xi_name)?;
    let log = m
        .log_unipotent()
        .map_err(|_| Error::Hypothesis("the Galois action is not unipotent".into()))?;
    let n = datum.dim as usize;
    let pow = log.pow(n);
    let rank = pow.rank(tol.max(1e-9));
    if rank != 1 {
        return Err(Error::Hypothesis(format!(
            "(Log M)^{} has rank {}; the nilpotency hypothesis fails (non-ample class?)",
            n, rank
        )));
    }
    // column space must contain Psi(O_pt)
    let opt = crate::io::resolve_kclass(datum, &[], "O_pt")?;
    let psi = psi_map(&opt, datum)?;
    let dim = datum.ordinary.dim();
    let mut cols: Vec<Vec<Scalar>> = Vec::new();
    for j in 0..dim {
        let col: Vec<Scalar> = (0..dim).map(|i| pow[(i, j)].clone()).collect();
        if col.iter().any(|c| !c.is_zero() && c.abs() > tol) {
            cols.push(col);
        }
    }
    cols.push(psi.psi.coeffs.clone());
    let rank2 = Mat::from_fn(dim, cols.len(), |i, j| cols[j][i].clone()).rank(tol.max(1e-9));
    let span_verified = rank2 == 1;
    Ok(A0Report {
        section: psi,
        sign_ambiguous: true,
        nilpotency_order: n,
        span_verified,
    })
}

/// Named virtual characters over a quotient datum's irreducibles.
pub fn character_from_map(
    datum: &OrbifoldDatum,
    map: &BTreeMap<String, i64>,
) -> Result<Vec<(usize, i64)>> {
    let spec = quotient_spec(datum)?;
    let mut out = Vec::new();
    for (name, mult) in map {
        out.push((spec.irrep_index(name)?, *mult));
    }
    Ok(out)
}
