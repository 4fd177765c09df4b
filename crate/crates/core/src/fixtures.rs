//! Canonical worked-example data, parsed from the JSON fixtures shipped at
//! the workspace root. Tests and the CLI share these files.

use crate::error::Result;
use crate::io::{self, OrbifoldInput};

macro_rules! fixture {
    ($name:ident, $file:literal) => {
        pub fn $name() -> OrbifoldInput {
            io::parse_orbifold(include_str!(concat!("../../../fixtures/", $file)))
                .expect(concat!("fixture ", $file))
        }
    };
}

fixture!(p1, "p1.json");
fixture!(cy3_quintic, "cy3_quintic.json");
fixture!(c2z2, "c2z2.json");
fixture!(c2z3, "c2z3.json");
fixture!(c2z4, "c2z4.json");
fixture!(c3z3, "c3z3.json");

pub fn p1_correlators() -> Result<io::CorrelatorTableJson> {
    io::parse_correlators(include_str!("../../../fixtures/p1_correlators.json"))
}

pub fn cy3_quintic_correlators() -> Result<io::CorrelatorTableJson> {
    io::parse_correlators(include_str!("../../../fixtures/cy3_quintic_correlators.json"))
}

pub fn c3z3_correlators() -> Result<io::CorrelatorTableJson> {
    io::parse_correlators(include_str!("../../../fixtures/c3z3_correlators.json"))
}

pub fn c2zn_correlators(n: u32) -> Result<io::CorrelatorTableJson> {
    match n {
        2 => io::parse_correlators(include_str!("../../../fixtures/c2z2_correlators.json")),
        3 => io::parse_correlators(include_str!("../../../fixtures/c2z3_correlators.json")),
        4 => io::parse_correlators(include_str!("../../../fixtures/c2z4_correlators.json")),
        _ => Err(crate::error::Error::Lookup(format!("no C2/Z{} fixture", n))),
    }
}

pub fn c3z3_potentials() -> Result<io::PotentialsJson> {
    io::parse_potentials(include_str!("../../../fixtures/c3z3_potentials.json"))
}

pub fn cy3_quintic_potentials() -> Result<io::PotentialsJson> {
    io::parse_potentials(include_str!("../../../fixtures/cy3_quintic_potentials.json"))
}

pub fn fm_localp2() -> Result<io::FmAssignmentJson> {
    io::parse_fm(include_str!("../../../fixtures/fm_localp2.json"))
}

pub fn fm_a1() -> Result<io::FmAssignmentJson> {
    io::parse_fm(include_str!("../../../fixtures/fm_a1.json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma_frame::{gamma_class, kawasaki_chi, mukai_pairing_check, todd_class};
    use crate::kclass::KClass;
    use crate::scalar::rat;
    use crate::special::euler_gamma;
    use num_bigint::BigInt;

    #[test]
    fn p1_parses_and_validates() {
        let input = p1();
        let d = &input.datum;
        assert_eq!(d.dim, 1);
        assert!(d.compact);
        assert_eq!(d.ordinary.dim(), 2);
        assert_eq!(d.h2_untwisted, vec![1]);
    }

    #[test]
    fn gamma_of_p1_tangent() {
        let input = p1();
        let g = gamma_class(&input.datum.tangent, &input.datum).unwrap();
        // GammaHat(TP1) = 1 - 2 gamma w
        assert!((g.coeffs[0].to_complex().re - 1.0).abs() < 1e-13);
        assert!((g.coeffs[1].to_complex().re + 2.0 * euler_gamma()).abs() < 1e-12);
    }

    #[test]
    fn todd_of_p1_tangent() {
        let input = p1();
        let t = todd_class(&input.datum.tangent, &input.datum).unwrap();
        // Td(TP1) = 1 + w, exactly
        assert_eq!(t.coeffs[0].as_rational().unwrap(), rat(1, 1));
        assert_eq!(t.coeffs[1].as_rational().unwrap(), rat(1, 1));
    }

    #[test]
    fn riemann_roch_on_p1() {
        let input = p1();
        let d = &input.datum;
        for k in -5..=5i64 {
            let v = crate::io::resolve_kclass(d, &input.named_kclasses, &format!("O({})", k))
                .unwrap();
            let (chi, dist) = kawasaki_chi(&v, d, 1e-10).unwrap();
            assert_eq!(chi, BigInt::from(k + 1), "chi(O({}))", k);
            assert_eq!(dist, 0.0, "exact for k = {}", k);
        }
        let z = KClass::zero(d, crate::graded::Support::Ordinary);
        let (chi, _) = kawasaki_chi(&z, d, 1e-10).unwrap();
        assert_eq!(chi, BigInt::from(0));
    }

    #[test]
    fn mukai_identity_on_p1() {
        let input = p1();
        let d = &input.datum;
        for a in -2..=3i64 {
            for b in -2..=3i64 {
                let va = crate::io::resolve_kclass(d, &[], &format!("O({})", a)).unwrap();
                let vb = crate::io::resolve_kclass(d, &[], &format!("O({})", b)).unwrap();
                let rep = mukai_pairing_check(&va, &vb, d, 1e-10).unwrap();
                assert!(rep.pass, "O({}) vs O({}): residual {}", a, b, rep.residual);
            }
        }
    }

    #[test]
    fn quintic_chi_values() {
        let input = cy3_quintic();
        let d = &input.datum;
        let o = KClass::structure_sheaf(d);
        let (chi, _) = kawasaki_chi(&o, d, 1e-10).unwrap();
        assert_eq!(chi, BigInt::from(0), "chi(O) on a CY3");
        let o1 = crate::io::resolve_kclass(d, &input.named_kclasses, "O(1)").unwrap();
        let (chi, _) = kawasaki_chi(&o1, d, 1e-10).unwrap();
        assert_eq!(chi, BigInt::from(5));
        let opt = crate::io::resolve_kclass(d, &input.named_kclasses, "O_pt").unwrap();
        let (chi, _) = kawasaki_chi(&opt, d, 1e-10).unwrap();
        assert_eq!(chi, BigInt::from(1));
        // chi(O_C) = 1 - g = 1 for a line
        let oc = crate::io::resolve_kclass(d, &input.named_kclasses, "O_C").unwrap();
        let (chi, _) = kawasaki_chi(&oc, d, 1e-10).unwrap();
        assert_eq!(chi, BigInt::from(1));
    }

    #[test]
    fn quintic_gamma_class() {
        let input = cy3_quintic();
        let g = gamma_class(&input.datum.tangent, &input.datum).unwrap();
        // GammaHat(TX) = 1 - pi^2/6 c2 - zeta(3) c3 with c2 = 50p, c3 = -200pt
        let pi2_6 = crate::special::zeta(2);
        assert!((g.coeffs[0].to_complex().re - 1.0).abs() < 1e-13);
        assert!(g.coeffs[1].is_zero() || g.coeffs[1].abs() < 1e-13);
        assert!((g.coeffs[2].to_complex().re + 50.0 * pi2_6).abs() < 1e-10);
        assert!((g.coeffs[3].to_complex().re - 200.0 * crate::special::zeta(3)).abs() < 1e-10);
    }

    #[test]
    fn p1_condition_checks() {
        // a manifold: a single sector group with n_alpha = 1, both conditions hold
        let input = p1();
        let r = crate::orbifold::condition_checks(&input.datum);
        assert!(r.uniqueness_opposite && r.uniqueness_dilaton);
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups[0].n_alpha.as_ref().unwrap(), &rat(1, 1));
    }

    #[test]
    fn p1_sqrt_identity() {
        let input = p1();
        let res = crate::gamma_frame::sqrt_identity_check(&input.datum.tangent, &input.datum)
            .unwrap();
        for (label, r) in res {
            assert!(r < 1e-10, "sector {}: {}", label, r);
        }
    }

    #[test]
    fn psi_of_point_on_p1() {
        // Psi(O_pt) = (2 pi)^{-1/2} (2 pi i) [pt]
        let input = p1();
        let d = &input.datum;
        let opt = crate::io::resolve_kclass(d, &[], "O_pt").unwrap();
        let psi = crate::gamma_frame::psi_map(&opt, d).unwrap().psi;
        let tp = 2.0 * crate::special::pi();
        let expect = num_complex::Complex64::new(0.0, tp / tp.sqrt());
        assert!(psi.coeffs[0].abs() < 1e-12);
        assert!((psi.coeffs[1].to_complex() - expect).norm() < 1e-12);
    }
}
