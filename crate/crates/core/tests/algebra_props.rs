//! Property tests for the scalar tower and truncated series arithmetic.

use proptest::prelude::*;

use oqc_core::scalar::{rat, Scalar, EFFECTIVE_DIGITS};
use oqc_core::series::{series_mul, Exps, Mono, SSeries, Series, VarSet};

fn small_rat() -> impl Strategy<Value = (i64, i64)> {
    (-1000i64..1000, 1i64..1000)
}

fn roundtrip_tol() -> f64 {
    10f64.powi(-(EFFECTIVE_DIGITS as i32) + 4)
}

proptest! {
    // numeric(a) * numeric(b) agrees with numeric(a * b)
    #[test]
    fn exact_product_roundtrips((ap, aq) in small_rat(), (bp, bq) in small_rat()) {
        let a = Scalar::from_rat(rat(ap, aq));
        let b = Scalar::from_rat(rat(bp, bq));
        let exact = a.mul(&b);
        let numeric = a.to_complex() * b.to_complex();
        let scale = numeric.norm().max(1.0);
        prop_assert!((exact.to_complex() - numeric).norm() <= roundtrip_tol() * scale);
    }

    // cyclotomic arithmetic stays exact and consistent with the embedding
    #[test]
    fn cyclotomic_products_roundtrip(k1 in 0i64..12, k2 in 0i64..12, (p, q) in small_rat()) {
        let z1 = Scalar::root_of_unity(&rat(k1, 12));
        let z2 = Scalar::root_of_unity(&rat(k2, 12));
        let c = Scalar::from_rat(rat(p, q));
        let prod = z1.mul(&z2).mul(&c);
        prop_assert!(prod.is_exact());
        let numeric = z1.to_complex() * z2.to_complex() * c.to_complex();
        let scale = numeric.norm().max(1.0);
        prop_assert!((prod.to_complex() - numeric).norm() <= roundtrip_tol() * scale);
    }
}

fn arb_series(vars: std::sync::Arc<VarSet>) -> impl Strategy<Value = SSeries> {
    let nvars = vars.nvars();
    let term = (
        proptest::collection::vec(0u16..3, nvars),
        -3i32..=1,
        -20i64..20,
        1i64..6,
    );
    proptest::collection::vec(term, 0..8).prop_map(move |terms| {
        let mut s = Series::zero(vars.clone());
        for (exps, zpow, p, q) in terms {
            let mono = Mono {
                exps: Exps::from_vec(exps),
                zh: 2 * zpow,
            };
            s.add_term(mono, Scalar::from_rat(rat(p, q)));
        }
        s
    })
}

fn vars2() -> std::sync::Arc<VarSet> {
    VarSet::new(vec!["x".into(), "y".into()], 6, 3, 1)
}

fn arb_series_lowz() -> impl Strategy<Value = SSeries> {
    let vars = VarSet::new(vec!["x".into(), "y".into()], 6, 4, 0);
    let nvars = vars.nvars();
    let term = (
        proptest::collection::vec(0u16..3, nvars),
        -2i32..=0,
        -20i64..20,
        1i64..6,
    );
    proptest::collection::vec(term, 0..8).prop_map(move |terms| {
        let mut s = Series::zero(vars.clone());
        for (exps, zpow, p, q) in terms {
            let mono = Mono {
                exps: Exps::from_vec(exps),
                zh: 2 * zpow,
            };
            s.add_term(mono, Scalar::from_rat(rat(p, q)));
        }
        s
    })
}

proptest! {
    // laurent_split is an exact idempotent decomposition
    #[test]
    fn laurent_split_idempotent(s in arb_series(vars2())) {
        let (minus, plus) = s.laurent_split();
        prop_assert!(minus.add(&plus).sub(&s).is_zero());
        let (mm, mp) = minus.laurent_split();
        prop_assert!(mp.is_zero());
        prop_assert!(mm.sub(&minus).is_zero());
        let (pm, pp) = plus.laurent_split();
        prop_assert!(pm.is_zero());
        prop_assert!(pp.sub(&plus).is_zero());
    }

    // series_mul distributes over addition within the truncation
    #[test]
    fn series_mul_distributes(
        a in arb_series(vars2()),
        b in arb_series(vars2()),
        c in arb_series(vars2()),
    ) {
        let lhs = series_mul(&a, &b.add(&c)).unwrap();
        let rhs = series_mul(&a, &b).unwrap().add(&series_mul(&a, &c).unwrap());
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    // products are commutative; with a one-sided z-window (no discarded
    // low term can re-enter by multiplication with a positive power) they
    // are associative as well
    #[test]
    fn series_mul_comm_assoc(
        a in arb_series_lowz(),
        b in arb_series_lowz(),
        c in arb_series_lowz(),
    ) {
        let ab = series_mul(&a, &b).unwrap();
        let ba = series_mul(&b, &a).unwrap();
        prop_assert!(ab.sub(&ba).is_zero());
        let abc1 = series_mul(&ab, &c).unwrap();
        let abc2 = series_mul(&a, &series_mul(&b, &c).unwrap()).unwrap();
        prop_assert!(abc1.sub(&abc2).is_zero());
    }

    // commutativity needs no window restriction
    #[test]
    fn series_mul_commutes(a in arb_series(vars2()), b in arb_series(vars2())) {
        let ab = series_mul(&a, &b).unwrap();
        let ba = series_mul(&b, &a).unwrap();
        prop_assert!(ab.sub(&ba).is_zero());
    }
}

// reflection identity at the standard rational arguments
#[test]
fn gamma_reflection_identity() {
    let tol = 10f64.powi(-(EFFECTIVE_DIGITS as i32) + 8);
    for (p, q) in [(1i64, 6i64), (1, 4), (1, 3), (1, 2)] {
        let f = p as f64 / q as f64;
        let lhs = oqc_core::special::gamma_fn(1.0 - f) * oqc_core::special::gamma_fn(f);
        let rhs = oqc_core::special::pi() / (oqc_core::special::pi() * f).sin();
        assert!(
            (lhs - rhs).abs() <= tol * rhs.abs(),
            "f = {}/{}: {} vs {}",
            p,
            q,
            lhs,
            rhs
        );
    }
}
