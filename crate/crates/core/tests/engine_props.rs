//! Fourier engine identities on random tables, each side computed by direct
//! character sums rather than the fast transform where it matters.

use ddl_core::krawtchouk::KrawtchoukTable;
use ddl_core::scalar::{int, rat};
use ddl_core::{Number, Side, ValueTable};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_exact(dim: u32, seed: u64, side: Side) -> ValueTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<BigRational> = (0..1u64 << dim)
        .map(|_| rat(rng.gen_range(-50..=50), rng.gen_range(1..=9)))
        .collect();
    ValueTable::from_fn_exact(dim, side, |i| vals[i as usize].clone()).unwrap()
}

fn random_float(dim: u32, seed: u64) -> ValueTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..1u64 << dim).map(|_| rng.gen_range(-1e3..1e3)).collect();
    ValueTable::from_fn_float(dim, Side::Primal, |i| vals[i as usize]).unwrap()
}

fn exact(t: &ValueTable) -> &[BigRational] {
    t.exact().unwrap()
}

/// `2^{-N} Σ_y f(y)(-1)^{⟨x,y⟩}` by the definition.
fn character_sum(f: &[BigRational], dim: u32, x: usize) -> BigRational {
    let s = f.iter().enumerate().fold(BigRational::zero(), |acc, (y, v)| {
        if (x & y).count_ones() % 2 == 0 {
            acc + v
        } else {
            acc - v
        }
    });
    s / int(1i64 << dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_matches_definition(dim in 0u32..=7, seed in any::<u64>()) {
        let f = random_exact(dim, seed, Side::Primal);
        let fh = f.fourier();
        prop_assert_eq!(fh.side(), Side::Fourier);
        for x in 0..1usize << dim {
            prop_assert_eq!(&exact(&fh)[x], &character_sum(exact(&f), dim, x));
        }
    }

    #[test]
    fn involution_exact(dim in 0u32..=10, seed in any::<u64>()) {
        let f = random_exact(dim, seed, Side::Primal);
        let back = f.fourier().fourier().mul_pow2(dim as i32).with_side(Side::Primal);
        prop_assert_eq!(back, f);
    }

    #[test]
    fn involution_float(dim in 0u32..=14, seed in any::<u64>()) {
        let f = random_float(dim, seed);
        let back = f.fourier().fourier().mul_pow2(dim as i32);
        let scale = f.max_abs();
        for (a, b) in back.float().unwrap().iter().zip(f.float().unwrap()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn parseval(dim in 0u32..=8, s1 in any::<u64>(), s2 in any::<u64>()) {
        let f = random_exact(dim, s1, Side::Primal);
        let g = random_exact(dim, s2, Side::Primal);
        let primal = f.inner(&g).unwrap();
        let direct: BigRational = exact(&f).iter().zip(exact(&g)).map(|(a, b)| a * b).sum::<BigRational>()
            / int(1i64 << dim);
        prop_assert_eq!(primal.clone(), Number::Exact(direct));
        let (fh, gh) = (f.fourier(), g.fourier());
        let fourier_side: BigRational = exact(&fh).iter().zip(exact(&gh)).map(|(a, b)| a * b).sum();
        prop_assert_eq!(primal, Number::Exact(fourier_side));
    }

    #[test]
    fn convolution_theorem_direct(dim in 0u32..=7, s1 in any::<u64>(), s2 in any::<u64>()) {
        let f = random_exact(dim, s1, Side::Primal);
        let g = random_exact(dim, s2, Side::Primal);
        // F(fg) = f̂ *_F ĝ, right side by the direct sum
        let lhs = f.mul(&g).unwrap().fourier();
        let rhs = f.fourier().convolve_direct(&g.fourier()).unwrap();
        prop_assert_eq!(&lhs, &rhs);
        // F(f * g) = f̂ ĝ with the primal convolution by the direct sum
        let lhs = f.convolve_direct(&g).unwrap().fourier();
        let rhs = f.fourier().mul(&g.fourier()).unwrap();
        prop_assert_eq!(&lhs, &rhs);
        // the transform route agrees with the direct sums
        prop_assert_eq!(f.convolve(&g).unwrap(), f.convolve_direct(&g).unwrap());
    }

    #[test]
    fn tensor_commutes_with_transform(d1 in 0u32..=4, d2 in 0u32..=4, s1 in any::<u64>(), s2 in any::<u64>()) {
        let f = random_exact(d1, s1, Side::Primal);
        let g = random_exact(d2, s2, Side::Primal);
        let t = f.tensor(&g).unwrap();
        prop_assert_eq!(t.fourier(), f.fourier().tensor(&g.fourier()).unwrap());
        for x in 0..1u64 << d1 {
            for y in 0..1u64 << d2 {
                let v = t.get(x | y << d1).as_exact().unwrap().clone();
                prop_assert_eq!(v, &exact(&f)[x as usize] * &exact(&g)[y as usize]);
            }
        }
    }
}

#[test]
fn convolution_theorem_up_to_16() {
    for dim in 0..=16u32 {
        let f = random_exact(dim, 1000 + dim as u64, Side::Primal);
        let g = random_exact(dim, 2000 + dim as u64, Side::Primal);
        let lhs = f.mul(&g).unwrap().fourier();
        let (fh, gh) = (f.fourier(), g.fourier());
        let rhs = fh.convolve(&gh).unwrap();
        assert_eq!(lhs, rhs, "N = {dim}");
        // spot-check entries of f̂ *_F ĝ against the plain sum Σ_y f̂(y) ĝ(x+y)
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        for _ in 0..3 {
            let x = rng.gen_range(0..1usize << dim);
            let direct: BigRational = (0..1usize << dim)
                .map(|y| &exact(&fh)[y] * &exact(&gh)[x ^ y])
                .sum();
            assert_eq!(exact(&rhs)[x], direct, "N = {dim}, x = {x}");
        }
    }
}

#[test]
fn level_sets_transform_to_krawtchouk() {
    for n in 1..=12u32 {
        let table = KrawtchoukTable::build(n as usize).unwrap();
        for i in 0..=n {
            let level =
                ValueTable::from_fn_exact(n, Side::Primal, |x| int((x.count_ones() == i) as i64)).unwrap();
            let fh = level.fourier();
            for x in 0..1u64 << n {
                let k = BigRational::from_integer(table.get(i as usize, x.count_ones() as usize).clone());
                assert_eq!(exact(&fh)[x as usize], k / int(1i64 << n), "n = {n}, i = {i}");
            }
        }
    }
}

#[test]
fn units_of_both_convolutions() {
    let f = random_exact(5, 7, Side::Fourier);
    let delta = ValueTable::delta(5, ddl_core::Mode::Exact, Side::Fourier).unwrap();
    assert_eq!(f.convolve(&delta).unwrap(), f);
    let p = random_exact(5, 8, Side::Primal);
    let unit = ValueTable::delta(5, ddl_core::Mode::Exact, Side::Primal)
        .unwrap()
        .mul_pow2(5);
    assert_eq!(p.convolve(&unit).unwrap(), p);
}
