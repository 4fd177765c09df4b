//! Fourier-Mukai transport of K-classes through Koszul resolutions and the
//! coordinate-change predictions of the crepant resolution conjecture for
//! quotient singularities: tau_C = -2 pi i Z^X(O_0 (x) rho_C), with the
//! quantum parameter specializing to a root of unity at the large-radius
//! limit of the orbifold.

use num_traits::ToPrimitive;

use crate::charges::{charge_c2, charge_c3, ChargeVars, PotentialInput};
use crate::error::{Error, Result};
use crate::graded::CohElement;
use crate::io::FmAssignmentJson;
use crate::orbifold::OrbifoldDatum;
use crate::scalar::{Rat, Scalar};
use crate::series::{Mono, SSeries};
use crate::special::pi;

/// Curve label -> virtual character, from a Fourier-Mukai transform of the
/// exceptional curves (computed by the Koszul route in dimension two,
/// supplied as input in dimension three).
#[derive(Clone, Debug)]
pub struct FmAssignment {
    pub curves: Vec<FmCurve>,
}

#[derive(Clone, Debug)]
pub struct FmCurve {
    pub label: String,
    pub character: Vec<(usize, i64)>,
    pub dim: i64,
}

pub fn fm_assignment(json: &FmAssignmentJson, datum: &OrbifoldDatum) -> Result<FmAssignment> {
    let spec = &datum
        .quotient
        .as_ref()
        .ok_or_else(|| Error::Data("FM assignments need a quotient datum".into()))?
        .spec;
    let mut curves = Vec::new();
    for (ci, c) in json.curves.iter().enumerate() {
        let mut character = Vec::new();
        for (name, mult) in &c.character {
            character.push((spec.irrep_index(name)?, *mult));
        }
        let dim_tr = spec.virtual_trace(&character, 0);
        let dim = dim_tr
            .as_rational()
            .filter(|r| r.is_integer())
            .map(|r| r.to_integer().to_i64().unwrap())
            .ok_or_else(|| Error::Data("virtual character has non-integer dimension".into()))?;
        if let Some(declared) = c.dim {
            if declared != dim {
                return Err(Error::schema(
                    format!("$.curves[{}].dim", ci),
                    format!("declared dimension {} but the character has {}", declared, dim),
                ));
            }
        }
        curves.push(FmCurve {
            label: c.label.clone(),
            character,
            dim,
        });
    }
    Ok(FmAssignment { curves })
}

/// The compactly supported Chern character of O_0 (x) rho through the
/// equivariant Koszul resolution (automatic for [C^2/G]; the same alternating
/// character sum serves the three-dimensional helper contract).
pub fn koszul_chern(datum: &OrbifoldDatum, character: &[(usize, i64)]) -> Result<CohElement> {
    let k = crate::kclass::skyscraper(datum, character)?;
    k.tch(datum)
}

/// Predicted coordinate change per exceptional curve.
#[derive(Clone, Debug)]
pub struct CurveChange {
    pub label: String,
    pub dim: i64,
    /// tau_C as a series over the degree-2 orbifold coordinates.
    pub tau: SSeries,
    /// exp(tau_C(0)), exact: e^{-2 pi i dim(rho_C)/|G|}.
    pub q_value: Scalar,
    /// numeric check |exp(tau_C(0)) - q_value|.
    pub q_residual: f64,
    pub layout: ChargeVars,
}

#[derive(Clone, Debug)]
pub struct CoordinateChange {
    pub curves: Vec<CurveChange>,
}

/// tau_C = -2 pi i Z^X(O_0 (x) rho_C) restricted to the degree-2 locus;
/// the specialization q_C = exp(tau_C(0)) is a root of unity of order
/// dividing |G|.
pub fn predict_coordinate_change(
    assign: &FmAssignment,
    datum: &OrbifoldDatum,
    pots: Option<&PotentialInput>,
    order: u32,
) -> Result<CoordinateChange> {
    let spec = &datum
        .quotient
        .as_ref()
        .ok_or_else(|| Error::Data("coordinate changes need a quotient datum".into()))?
        .spec;
    let m2pii = Scalar::from_f64(-2.0 * pi()).mul(&Scalar::i());
    let mut curves = Vec::new();
    for c in &assign.curves {
        let cf = match spec.dim {
            2 => charge_c2(datum, &c.character, order)?,
            3 => charge_c3(datum, &c.character, pots, order)?,
            d => {
                return Err(Error::Domain(format!(
                    "coordinate changes are defined for quotient dimensions 2 and 3, not {}",
                    d
                )))
            }
        };
        let restricted = cf.layout.restrict_h2(datum, &cf.series);
        let tau = restricted.scale(&m2pii);
        // specialization at tau = 0
        let c0 = tau
            .coeff(&Mono::unit(cf.layout.vars.nvars()))
            .cloned()
            .unwrap_or_else(Scalar::zero);
        let q_exact = Scalar::root_of_unity(&(-Rat::new(c.dim.into(), (spec.order as i64).into())));
        let q_num = c0.to_complex().exp();
        let q_residual = (q_num - q_exact.to_complex()).norm();
        curves.push(CurveChange {
            label: c.label.clone(),
            dim: c.dim,
            tau,
            q_value: q_exact,
            q_residual,
            layout: cf.layout,
        });
    }
    Ok(CoordinateChange { curves })
}

/// Resolution-side charges the cross-check understands, supplied in closed
/// form by the caller.
#[derive(Clone, Debug)]
pub enum YSideCharge {
    /// Z^Y(O_C(-1)) = -tau_C / (2 pi i) in the exceptional-curve coordinate.
    CurveOMinusOne,
}

#[derive(Clone, Debug)]
pub struct CrossrefCurve {
    pub label: String,
    /// +1 or -1 when the identity holds at some sign; None on failure.
    pub sign: Option<i8>,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct CrossrefReport {
    pub curves: Vec<CrossrefCurve>,
    pub pass: bool,
}

/// Verify Z^Y(V) composed with the predicted coordinate change equals
/// +/- Z^X(U_K^{-1} V) as a series identity: the transported class of the
/// curve under test is taken from `assign`, the reference transform
/// U_K^{-1}(O_C(-1)) = O_0 (x) rho_C from `reference`.
pub fn crossref_central_charges(
    y_charges: &[(String, YSideCharge)],
    assign: &FmAssignment,
    reference: &FmAssignment,
    datum: &OrbifoldDatum,
    pots: Option<&PotentialInput>,
    order: u32,
    tol: f64,
) -> Result<CrossrefReport> {
    let spec = &datum
        .quotient
        .as_ref()
        .ok_or_else(|| Error::Data("cross-reference needs a quotient datum".into()))?
        .spec;
    let cc = predict_coordinate_change(assign, datum, pots, order)?;
    let m2pii_inv = Scalar::from_f64(-2.0 * pi()).mul(&Scalar::i()).inv();
    let mut curves = Vec::new();
    let mut pass = true;
    for (label, y) in y_charges {
        let tested = cc
            .curves
            .iter()
            .find(|c| &c.label == label)
            .ok_or_else(|| Error::Lookup(format!("no curve {:?} in the assignment", label)))?;
        let refc = reference
            .curves
            .iter()
            .find(|c| &c.label == label)
            .ok_or_else(|| Error::Lookup(format!("no curve {:?} in the reference", label)))?;
        let lhs = match y {
            // Z^Y(O_C(-1)) = -tau_C/(2 pi i), composed with tau_C(t)
            YSideCharge::CurveOMinusOne => tested.tau.scale(&m2pii_inv),
        };
        let rhs = {
            let cf = match spec.dim {
                2 => charge_c2(datum, &refc.character, order)?,
                3 => charge_c3(datum, &refc.character, pots, order)?,
                _ => unreachable!("dimension checked by predict_coordinate_change"),
            };
            cf.layout.restrict_h2(datum, &cf.series)
        };
        let plus = lhs.sub(&rhs).max_abs();
        let minus = lhs.add(&rhs).max_abs();
        let (sign, residual) = if plus <= tol {
            (Some(1i8), plus)
        } else if minus <= tol {
            (Some(-1i8), minus)
        } else {
            (None, plus.min(minus))
        };
        pass &= sign.is_some();
        curves.push(CrossrefCurve {
            label: label.clone(),
            sign,
            residual,
        });
    }
    Ok(CrossrefReport { curves, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::rat;
    use crate::special::gamma_fn;
    use num_complex::Complex64;

    #[test]
    fn koszul_c2z2_values() {
        let input = fixtures::c2z2();
        let d = &input.datum;
        // trivial representation: twisted coefficient 2 - (-2) = 4
        let t = koszul_chern(d, &[(0, 1)]).unwrap();
        assert_eq!(t.coeffs[0].as_rational().unwrap(), rat(1, 1));
        assert_eq!(t.coeffs[1].as_rational().unwrap(), rat(4, 1));
        // regular representation: untwisted |G| beta, twisted 0
        let reg = crate::io::parse_virtual_character(d, "reg").unwrap();
        let r = koszul_chern(d, &reg).unwrap();
        assert_eq!(r.coeffs[0].as_rational().unwrap(), rat(2, 1));
        assert!(r.coeffs[1].is_zero());
        // zero virtual character
        let z = koszul_chern(d, &[]).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn a1_coordinate_change() {
        let input = fixtures::c2z2();
        let d = &input.datum;
        let assign = fm_assignment(&fixtures::fm_a1().unwrap(), d).unwrap();
        let cc = predict_coordinate_change(&assign, d, None, 4).unwrap();
        let c = &cc.curves[0];
        // tau_C = -pi i + i t
        let unit = Mono::unit(c.layout.vars.nvars());
        let c0 = c.tau.coeff(&unit).cloned().unwrap();
        assert!((c0.to_complex() - Complex64::new(0.0, -pi())).norm() < 1e-12);
        let mut m = unit.clone();
        m.exps[c.layout.tau_var(0)] = 1;
        let c1 = c.tau.coeff(&m).cloned().unwrap();
        assert!((c1.to_complex() - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        // q_C = e^{-pi i} = -1, exactly
        assert_eq!(c.q_value.as_rational().unwrap(), rat(-1, 1));
        assert!(c.q_residual < 1e-12);
        // Case 1: affine linear (no higher-order terms)
        assert!(c.tau.terms.keys().all(|k| k.total_deg() <= 1));
    }

    #[test]
    fn local_p2_coordinate_change_matches_prediction() {
        let input = fixtures::c3z3();
        let d = &input.datum;
        let order = 12;
        let layout = ChargeVars::new(d, order);
        let pots =
            crate::charges::potential_input(&fixtures::c3z3_potentials().unwrap(), d, &layout)
                .unwrap();
        let assign = fm_assignment(&fixtures::fm_localp2().unwrap(), d).unwrap();
        let cc = predict_coordinate_change(&assign, d, Some(&pots), order).unwrap();
        let c = &cc.curves[0];
        assert_eq!(c.dim, 3);
        // q_C = e^{-2 pi i}: dim 3, |G| 3: exactly 1
        assert_eq!(c.q_value.as_rational().unwrap(), rat(1, 1));

        // tau_C = -2 pi i - (2 pi sqrt3)/(3 Gamma(2/3)^3) a^2 t
        //         + (2 pi sqrt3)/Gamma(1/3)^3 a dF0/dt, a = e^{2 pi i/3}
        let alpha = Complex64::from_polar(1.0, 2.0 * pi() / 3.0);
        let unit = Mono::unit(c.layout.vars.nvars());
        let c0 = c.tau.coeff(&unit).cloned().unwrap();
        assert!(
            (c0.to_complex() - Complex64::new(0.0, -2.0 * pi())).norm() < 1e-10,
            "constant {}",
            c0
        );
        // linear term
        let lin_expect =
            -(2.0 * pi() * 3f64.sqrt()) / (3.0 * gamma_fn(2.0 / 3.0).powi(3)) * alpha * alpha;
        let mut m = unit.clone();
        m.exps[c.layout.tau_var(0)] = 1;
        let c1 = c.tau.coeff(&m).cloned().unwrap();
        assert!(
            (c1.to_complex() - lin_expect).norm() < 1e-10,
            "linear {} vs {}",
            c1,
            lin_expect
        );
        // potential term: coefficient of dF0/dt at each monomial t^k (k >= 2)
        let pot_coeff = (2.0 * pi() * 3f64.sqrt()) / gamma_fn(1.0 / 3.0).powi(3) * alpha;
        let df = pots.derivative_in(c.layout.tau_var(0));
        for (mono, dval) in &df.terms {
            if mono.total_deg() < 2 {
                continue;
            }
            let got = c.tau.coeff(mono).cloned().unwrap_or_else(Scalar::zero);
            let expect = pot_coeff * dval.to_complex();
            assert!(
                (got.to_complex() - expect).norm() < 1e-10,
                "t^{}: {} vs {}",
                mono.total_deg(),
                got,
                expect
            );
        }
    }

    #[test]
    fn crossref_local_p2_and_negative_control() {
        let input = fixtures::c3z3();
        let d = &input.datum;
        let order = 12;
        let layout = ChargeVars::new(d, order);
        let pots =
            crate::charges::potential_input(&fixtures::c3z3_potentials().unwrap(), d, &layout)
                .unwrap();
        let assign = fm_assignment(&fixtures::fm_localp2().unwrap(), d).unwrap();
        let y = vec![("C".to_string(), YSideCharge::CurveOMinusOne)];
        let rep = crossref_central_charges(&y, &assign, &assign, d, Some(&pots), order, 1e-10)
            .unwrap();
        assert!(rep.pass);
        assert_eq!(rep.curves[0].sign, Some(1));

        // deliberately wrong character: failure, not a crash
        let wrong = FmAssignment {
            curves: vec![FmCurve {
                label: "C".into(),
                character: vec![(1, 1), (2, 2)],
                dim: 3,
            }],
        };
        let rep = crossref_central_charges(&y, &wrong, &assign, d, Some(&pots), order, 1e-10)
            .unwrap();
        assert!(!rep.pass);
        assert!(rep.curves[0].sign.is_none());
        assert!(rep.curves[0].residual > 1e-3);
    }

    #[test]
    fn a1_crossref_sign_plus() {
        let input = fixtures::c2z2();
        let d = &input.datum;
        let assign = fm_assignment(&fixtures::fm_a1().unwrap(), d).unwrap();
        let y = vec![("C".to_string(), YSideCharge::CurveOMinusOne)];
        let rep = crossref_central_charges(&y, &assign, &assign, d, None, 4, 1e-10).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.curves[0].sign, Some(1));
    }

    #[test]
    fn q_values_are_roots_of_unity() {
        let input = fixtures::c2z4();
        let d = &input.datum;
        for rho in ["rho1", "rho2", "rho3"] {
            let ch = crate::io::parse_virtual_character(d, rho).unwrap();
            let assign = FmAssignment {
                curves: vec![FmCurve {
                    label: rho.into(),
                    character: ch,
                    dim: 1,
                }],
            };
            let cc = predict_coordinate_change(&assign, d, None, 3).unwrap();
            let q = &cc.curves[0].q_value;
            // q^|G| = 1 exactly
            let pow = q.pow_i(4);
            assert!(pow.sub(&Scalar::one()).is_zero(), "{} not a 4th root", q);
            assert!(cc.curves[0].q_residual < 1e-12);
        }
    }

    #[test]
    fn additive_over_curve_labels() {
        let input = fixtures::c2z3();
        let d = &input.datum;
        let assign = FmAssignment {
            curves: vec![
                FmCurve {
                    label: "C1".into(),
                    character: vec![(1, 1)],
                    dim: 1,
                },
                FmCurve {
                    label: "C2".into(),
                    character: vec![(2, 1)],
                    dim: 1,
                },
            ],
        };
        let cc = predict_coordinate_change(&assign, d, None, 3).unwrap();
        assert_eq!(cc.curves.len(), 2);
        assert_eq!(cc.curves[0].label, "C1");
        // both Case-1 curves are affine linear
        for c in &cc.curves {
            assert!(c.tau.terms.keys().all(|k| k.total_deg() <= 1));
        }
    }
}
