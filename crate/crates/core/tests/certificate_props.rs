//! Certificates against their verifiers and against exhaustive oracles.

use ddl_core::constructions::{
    build_g1, build_g_ell, build_g_ell_with, build_lambda, choose_epsilon, hierarchy_slack,
    lift_first_lp, HierarchyOptions,
};
use ddl_core::lp::{classify_general, classify_linear, verify_dual, verify_dual_symmetric, Classification};
use ddl_core::oracle::{max_code_size, max_linear_code_size};
use ddl_core::profile::is_column_symmetric;
use ddl_core::scalar::{int, rat};
use ddl_core::{CubeMatrix, CubePoint, Number};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

/// `ε = 1` needs `ε < d`; distance 1 uses `1/2`.
fn first_lp_eps(d: u32) -> BigRational {
    if d == 1 {
        rat(1, 2)
    } else {
        int(1)
    }
}

fn value_f64(n: &Number) -> f64 {
    n.to_f64()
}

#[test]
fn weak_duality_grid() {
    for n in 2..=8u32 {
        for d in 1..=4u32.min(n - 1) {
            let a = max_code_size(n, d).unwrap();
            let a_lin = max_linear_code_size(n, d).unwrap();
            assert!(a.validate() && a_lin.validate());
            assert!(a_lin.size <= a.size, "A_Lin({n},{d}) > A({n},{d})");

            let g1 = build_g1(n, d, &first_lp_eps(d)).unwrap();
            let r1 = verify_dual(&g1.g, &g1.instance).unwrap();
            assert!(r1.feasible, "g₁ at ({n},{d})");
            let v1 = r1.value.unwrap().as_exact().unwrap().clone();
            assert!(v1 >= int(a.size as i64), "ℓ=1 value {v1} < A({n},{d}) = {}", a.size);

            // level 2: value ≥ A², compared exactly
            let h = build_g_ell(n, d, 2).unwrap();
            let r2 = verify_dual(&h.certificate.g, &h.certificate.instance).unwrap();
            assert!(r2.feasible, "g_2 at ({n},{d})");
            let v2 = r2.value.unwrap().as_exact().unwrap().clone();
            assert!(v2 >= int((a.size * a.size) as i64), "ℓ=2 at ({n},{d})");

            for ell in 1..=2 {
                let lift = lift_first_lp(n, d, ell, &first_lp_eps(d)).unwrap();
                let r = verify_dual(&lift.g, &lift.instance).unwrap();
                assert!(r.feasible, "lift at ({n},{d},{ell})");
                assert!(
                    r.value.unwrap().as_exact().unwrap() >= &int(a_lin.size as i64),
                    "linear-valued at ({n},{d},{ell})"
                );
            }
        }
    }
}

#[test]
fn first_lp_certificates_verify_up_to_14() {
    for n in 2..=14u32 {
        for d in 1..n {
            let eps = first_lp_eps(d);
            let cert = build_g1(n, d, &eps).unwrap();
            let report = verify_dual(&cert.g, &cert.instance).unwrap();
            assert!(report.feasible, "({n},{d})");
            assert_eq!(report.value.as_ref(), Some(&cert.claimed_value));
            // value ≤ (d/ε)·|supp Λ̂|
            let bound = BigRational::from_integer(BigInt::from(d)) / &eps
                * BigRational::from_integer(cert.support_size.clone().into());
            assert!(cert.claimed_value.as_exact().unwrap() <= &bound, "({n},{d})");
        }
    }
}

#[test]
fn level_three_certificates_verify_in_float() {
    for n in 3..=5u32 {
        for d in 2..n {
            let h = build_g_ell(n, d, 3).unwrap();
            let g = h.certificate.g.to_float();
            let report = verify_dual(&g, &h.certificate.instance).unwrap();
            assert!(report.feasible, "({n},{d})");
            let exact = value_f64(&h.certificate.claimed_value);
            let got = value_f64(report.value.as_ref().unwrap());
            assert!((got - exact).abs() <= 1e-9 * exact, "({n},{d}): {got} vs {exact}");
        }
    }
}

#[test]
fn profile_and_dense_verdicts_agree() {
    let mut certs = Vec::new();
    for n in 4..=14u32 {
        for d in [2, 3, n / 2] {
            certs.push(build_g1(n, d, &int(1)).unwrap());
        }
    }
    for (n, d) in [(5, 2), (6, 3), (8, 3)] {
        certs.push(build_g_ell(n, d, 2).unwrap().certificate);
    }
    for n in 3..=5 {
        certs.push(lift_first_lp(n, 2, 2, &int(1)).unwrap());
    }
    for cert in certs {
        let inst = cert.instance;
        assert!(inst.dim() <= 16);
        let dense = verify_dual(&cert.g, &inst).unwrap();
        let sym = verify_dual_symmetric(&cert.g, &inst).unwrap();
        assert_eq!(dense.feasible, sym.feasible, "{inst:?}");
        assert_eq!(dense.value, sym.value, "{inst:?}");
    }
    // and on an infeasible table: the dense verdict is reproduced
    let mut bad = build_g1(8, 3, &int(1)).unwrap();
    let inst = bad.instance;
    let vals = bad.g.exact_mut().unwrap();
    for (x, v) in vals.iter_mut().enumerate() {
        if (x as u64).count_ones() == 5 {
            *v = int(1);
        }
    }
    assert!(!verify_dual(&bad.g, &inst).unwrap().feasible);
    assert!(!verify_dual_symmetric(&bad.g, &inst).unwrap().feasible);
}

#[test]
fn constructed_tables_are_column_symmetric() {
    let tables = vec![
        (build_g1(9, 3, &int(1)).unwrap().g, 1, 9),
        (build_g_ell(6, 3, 2).unwrap().certificate.g, 2, 6),
        (build_g_ell(4, 2, 3).unwrap().certificate.g, 3, 4),
        (lift_first_lp(5, 2, 3, &int(1)).unwrap().g, 3, 5),
    ];
    for (t, ell, n) in tables {
        assert!(is_column_symmetric(&t, ell, n, 24, 17), "ℓ = {ell}, n = {n}");
    }
}

#[test]
fn larger_epsilon_keeps_the_slack() {
    let (n, d, ell) = (5u32, 2u32, 2u32);
    let base = build_g_ell(n, d, ell).unwrap();
    let m = base.certificate.params.m;
    let chosen = base.certificate.params.epsilon.clone();
    assert_eq!(chosen, choose_epsilon(n, d, m, ddl_core::constructions::default_denominator_cap(n, d, m)).unwrap());
    for eps in [&chosen * int(2), &chosen + rat(1, 3), rat(3, 4)] {
        let step = (int((n - d) as i64) + &eps * int(2)).pow(m as i32)
            - int((n - d) as i64).pow(m as i32);
        assert!(step >= BigRational::one(), "ε = {eps}");
        let h = build_g_ell_with(
            n,
            d,
            ell,
            &HierarchyOptions {
                epsilon: Some(eps.clone()),
                ..Default::default()
            },
        )
        .unwrap();
        let slack = hierarchy_slack(&h).unwrap();
        assert!(slack.feasible, "ε = {eps}: {:?}", slack.violations.first());
        let report = verify_dual(&h.certificate.g, &h.certificate.instance).unwrap();
        assert!(report.feasible, "ε = {eps}");
    }
}

#[test]
fn linear_valued_lift_exhaustive() {
    for ell in 1..=3u32 {
        for n in 2..=5u32 {
            for d in 1..n {
                let cert = lift_first_lp(n, d, ell, &first_lp_eps(d)).unwrap();
                let report = verify_dual(&cert.g, &cert.instance).unwrap();
                assert!(report.feasible, "({n},{d},{ell}): {:?}", report.violations);
                assert_eq!(report.value.as_ref(), Some(&cert.claimed_value));
            }
        }
    }
}

fn matrix_strategy() -> impl Strategy<Value = (u32, u32, u64)> {
    (1u32..=4, 1u32..=8).prop_flat_map(|(ell, n)| (Just(ell), Just(n), 0..1u64 << (ell * n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn general_forbidden_implies_linear_forbidden((ell, n, idx) in matrix_strategy(), d in 1u32..=8) {
        let x = CubeMatrix::from_index(ell, n, idx);
        if classify_general(&x, d) == Classification::Forbidden {
            prop_assert_eq!(classify_linear(&x, d), Classification::Forbidden);
        }
    }

    #[test]
    fn rank_one_classifiers_coincide(ell in 1u32..=4, n in 1u32..=8, u in 1u64..16, x in 0u64..256, d in 1u32..=8) {
        let u = CubePoint::new(u % (1 << ell), ell).unwrap();
        prop_assume!(!u.is_zero());
        let x = CubePoint::new(x % (1 << n), n).unwrap();
        let m = CubeMatrix::outer(&u, &x);
        prop_assert_eq!(classify_general(&m, d), classify_linear(&m, d));
    }

    #[test]
    fn lambda_properties(n in 4u32..=40, d_frac in 0.05f64..0.5, eps_num in 1i64..=4) {
        let d = ((n as f64 * d_frac).round() as u32).clamp(1, n / 2);
        let eps = rat(eps_num, 4).min(rat(d as i64, 2));
        let lam = build_lambda(n, d, &eps).unwrap();
        prop_assert!(lam.hat[0].is_one());
        prop_assert!(lam.hat.iter().all(|v| v >= &int(0)));
        // support inside the ball of radius r
        for (w, v) in lam.hat.iter().enumerate() {
            if w as u32 > lam.r {
                prop_assert!(num_traits::Zero::is_zero(v));
            }
        }
        // first-LP value bound (d/ε)|supp Λ̂|
        if n <= 14 {
            let cert = ddl_core::constructions::build_g1_from(&lam).unwrap();
            let bound = (BigRational::from_integer(BigInt::from(d)) / &eps).to_f64().unwrap()
                * cert.support_size.to_f64().unwrap();
            prop_assert!(cert.claimed_value.to_f64() <= bound * (1.0 + 1e-12));
        }
    }
}
