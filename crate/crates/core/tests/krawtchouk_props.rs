//! Krawtchouk tables, roots, the CD kernel and profile-domain operators,
//! checked against direct computations.

use ddl_core::krawtchouk::{
    binomial, cd_kernel_at, default_bracket_width, eval_rational, first_root, KrawtchoukTable,
};
use ddl_core::lp::dense_au_matrix_action;
use ddl_core::profile::{apply_au_symmetric, ProfileFn, ProfileSpace};
use ddl_core::scalar::{int, rat};
use ddl_core::{CubePoint, Side, ValueTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

/// `K_i(j) = Σ_t (-1)^t C(j,t) C(n-j,i-t)`.
fn krawtchouk_direct(n: usize, i: usize, j: usize) -> BigInt {
    (0..=i.min(j))
        .filter(|t| i - t <= n - j)
        .map(|t| {
            let term = binomial(j, t) * binomial(n - j, i - t);
            if t % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .sum()
}

#[test]
fn table_matches_explicit_sum() {
    for n in 1..=16 {
        let table = KrawtchoukTable::build(n).unwrap();
        for i in 0..=n {
            for j in 0..=n {
                assert_eq!(*table.get(i, j), krawtchouk_direct(n, i, j), "K_{i}({j}), n = {n}");
            }
        }
    }
}

#[test]
fn orthogonality_up_to_16() {
    for n in 1..=16 {
        let table = KrawtchoukTable::build(n).unwrap();
        for a in 0..=n {
            for b in 0..=n {
                // Σ_j C(n,j) K_a(j) K_b(j) = 2^n C(n,a) [a = b]
                let s: BigInt = (0..=n)
                    .map(|j| binomial(n, j) * table.get(a, j) * table.get(b, j))
                    .sum();
                let expected = if a == b {
                    binomial(n, a) << n
                } else {
                    BigInt::zero()
                };
                assert_eq!(s, expected, "n = {n}, a = {a}, b = {b}");
            }
        }
    }
}

#[test]
fn brackets_interlace() {
    for n in [4usize, 7, 10, 16, 25] {
        let w = default_bracket_width(n);
        let brackets: Vec<_> = (1..=n / 2).map(|i| first_root(n, i, &w).unwrap()).collect();
        for pair in brackets.windows(2) {
            assert!(pair[1].hi < &pair[0].lo + &w, "n = {n}, i = {}", pair[0].index);
            assert!(eval_rational(n, pair[0].index, &pair[0].lo) > BigRational::zero());
        }
    }
}

#[test]
fn first_root_of_k10_at_length_100() {
    let b = first_root(100, 10, &default_bracket_width(100)).unwrap();
    let mid = b.midpoint().to_f64().unwrap();
    assert!((mid - 20.0).abs() <= 5.0, "midpoint {mid}");
}

fn small_rational() -> impl Strategy<Value = BigRational> {
    (-400i64..400, 1i64..40).prop_map(|(p, q)| rat(p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn christoffel_darboux(s in small_rational(), t in small_rational(), n in 2usize..12, j in 0usize..10) {
        prop_assume!(j < n);
        let k = |i: usize, x: &BigRational| eval_rational(n, i, x);
        let lhs = (k(1, &s) - k(1, &t)) * cd_kernel_at(n, j, &t, &s);
        let coeff = rat(j as i64 + 1, 1) / BigRational::from_integer(binomial(n, j));
        let rhs = coeff * (k(j + 1, &s) * k(j, &t) - k(j, &s) * k(j + 1, &t));
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn christoffel_darboux_at_length_8() {
    let (s, t) = (rat(7, 3), rat(-5, 11));
    let lhs = (eval_rational(8, 1, &s) - eval_rational(8, 1, &t)) * cd_kernel_at(8, 3, &t, &s);
    let rhs = rat(4, 1) / BigRational::from_integer(binomial(8, 3))
        * (eval_rational(8, 4, &s) * eval_rational(8, 3, &t)
            - eval_rational(8, 3, &s) * eval_rational(8, 4, &t));
    assert_eq!(lhs, rhs);
}

/// Deterministic pseudo-random integer values on profiles.
fn scrambled(space: std::sync::Arc<ProfileSpace>, seed: u64) -> ProfileFn<BigRational> {
    ProfileFn::from_fn(space, |alpha| {
        let h = alpha
            .iter()
            .fold(seed, |h, a| h.wrapping_mul(6364136223846793005).wrapping_add(*a as u64 + 1));
        int(((h >> 33) % 41) as i64 - 20)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn profile_au_matches_dense(ell in 1u32..=3, n in 1u32..=6, seed in any::<u64>(), u_raw in 1u32..8) {
        prop_assume!(ell * n <= 15);
        let u = u_raw % (1 << ell);
        prop_assume!(u != 0);
        let space = ProfileSpace::new(ell, n).unwrap();
        let f = scrambled(space, seed);
        let dense = f.lift_to_dense(Side::Primal).unwrap();
        let expected = dense_au_matrix_action(&dense, &CubePoint::new(u as u64, ell).unwrap()).unwrap();
        let got = apply_au_symmetric(&f, u).unwrap().lift_to_dense(Side::Primal).unwrap();
        prop_assert_eq!(got, expected);
    }
}

/// Indicator of the profile class `α`, as an unnormalized (fourier-side)
/// table so that convolution is the plain sum `Σ_Y f(Y) g(X+Y)`.
fn level(space: &std::sync::Arc<ProfileSpace>, alpha: &[u32]) -> ValueTable {
    ProfileFn::<BigRational>::indicator(space.clone(), alpha)
        .lift_to_dense(Side::Fourier)
        .unwrap()
}

/// `Σ_v c(α, v) L_{α-ε_v+ε_{u+v}}`, dropping profiles with a negative entry.
fn level_combination(
    space: &std::sync::Arc<ProfileSpace>,
    alpha: &[u32],
    u: usize,
    coeff: impl Fn(&[u32], usize) -> u32,
) -> ValueTable {
    let mut acc = ValueTable::from_fn_exact(space.ell() * space.n(), Side::Fourier, |_| {
        BigRational::zero()
    })
    .unwrap();
    for v in 0..space.types() {
        if alpha[v] == 0 {
            continue;
        }
        let mut beta = alpha.to_vec();
        beta[v] -= 1;
        beta[v ^ u] += 1;
        let term = level(space, &beta).scale(&int(coeff(alpha, v) as i64));
        acc = acc.add(&term).unwrap();
    }
    acc
}

#[test]
fn level_recurrence_two_rows() {
    let mut printed_fails = false;
    for n in 1..=5u32 {
        let space = ProfileSpace::new(2, n).unwrap();
        for u in 1..4usize {
            let mut eps_u = vec![0u32; 4];
            eps_u[0] = n - 1;
            eps_u[u] = 1;
            let unit = level(&space, &eps_u);
            for alpha in space.iter() {
                let lhs = unit.convolve_direct(&level(&space, alpha)).unwrap();
                let rhs = level_combination(&space, alpha, u, |a, v| a[v ^ u] + 1);
                assert_eq!(lhs, rhs, "n = {n}, u = {u}, α = {alpha:?}");
                let printed = level_combination(&space, alpha, u, |a, v| a[v] + 1);
                printed_fails |= lhs != printed;
            }
        }
    }
    // the coefficient α_v + 1 (indices not shifted by u) is not an identity
    assert!(printed_fails);
}
