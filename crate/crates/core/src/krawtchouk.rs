//! Univariate Krawtchouk polynomials, normalized by `K_i(0) = C(n, i)`.
//!
//! Everything here is exact. Values come from the three-term recurrence
//! `(i+1)K_{i+1}(x) = (n-2x)K_i(x) - (n-i+1)K_{i-1}(x)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::{int, rat, rational_serde};

/// `C(n, 0), …, C(n, n)`.
pub fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for i in 0..n {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
        row.push(c.clone());
    }
    row
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |c, i| {
        c * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

/// Integer table `K_i(j)`, `0 ≤ i, j ≤ n`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrawtchoukTable {
    n: usize,
    values: Vec<Vec<BigInt>>,
}

impl KrawtchoukTable {
    pub fn build(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("Krawtchouk table needs n ≥ 1");
        }
        let nn = n as i64;
        let mut values: Vec<Vec<BigInt>> = Vec::with_capacity(n + 1);
        values.push(vec![BigInt::one(); n + 1]);
        values.push((0..=nn).map(|j| BigInt::from(nn - 2 * j)).collect());
        for i in 1..n {
            let next: Vec<BigInt> = (0..=nn)
                .map(|j| {
                    let a = BigInt::from(nn - 2 * j) * &values[i][j as usize];
                    let b = BigInt::from(nn - i as i64 + 1) * &values[i - 1][j as usize];
                    let num = a - b;
                    debug_assert!((&num % BigInt::from(i + 1)).is_zero());
                    num / BigInt::from(i + 1)
                })
                .collect();
            values.push(next);
        }
        Ok(KrawtchoukTable { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `K_i(j)`.
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.values[i][j]
    }

    /// `K_i(0), …, K_i(n)`.
    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.values[i]
    }
}

/// `K_0(s), …, K_{imax}(s)` at a rational point. Indices above `n` follow the
/// same recurrence.
pub fn eval_all(n: usize, s: &BigRational, imax: usize) -> Vec<BigRational> {
    let nq = int(n as i64);
    let lin = &nq - s - s;
    let mut out = Vec::with_capacity(imax + 1);
    out.push(BigRational::one());
    if imax == 0 {
        return out;
    }
    out.push(lin.clone());
    for i in 1..imax {
        let c = int(n as i64 - i as i64 + 1);
        let next = (&lin * &out[i] - c * &out[i - 1]) / int(i as i64 + 1);
        out.push(next);
    }
    out
}

/// `K_i(s)` at a rational point.
pub fn eval_rational(n: usize, i: usize, s: &BigRational) -> BigRational {
    eval_all(n, s, i).pop().unwrap()
}

/// An interval `(lo, hi]` known to contain the first root `z_{1,i}` of `K_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootBracket {
    pub index: usize,
    #[serde(with = "rational_serde")]
    pub lo: BigRational,
    #[serde(with = "rational_serde")]
    pub hi: BigRational,
}

impl RootBracket {
    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

/// `2^{-20} · n`.
pub fn default_bracket_width(n: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::one() << 20usize)
}

/// True when `K_0(s), …, K_i(s)` are all strictly positive. The sequence is a
/// Sturm chain, so this holds exactly on `[0, z_{1,i})`.
fn below_first_root(n: usize, i: usize, s: &BigRational) -> bool {
    eval_all(n, s, i).iter().all(|v| v.is_positive())
}

/// Bisection bracket for the smallest root of `K_i`, using exact sign tests
/// on `[0, n/2]`. `K_i` is strictly positive on `[0, lo]`.
pub fn first_root(n: usize, i: usize, width: &BigRational) -> Result<RootBracket> {
    if i == 0 || i > n {
        return invalid(format!("root index {i} outside 1..={n}"));
    }
    if !width.is_positive() {
        return invalid("bracket width must be positive");
    }
    let mut lo = BigRational::zero();
    let mut hi = rat(n as i64, 2);
    // K_1(n/2) = 0, so hi starts on the failing side.
    while &(&hi - &lo) > width {
        let mid = (&lo + &hi) / int(2);
        if below_first_root(n, i, &mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RootBracket { index: i, lo, hi })
}

/// Christoffel–Darboux kernel `Λ_r(t, s) = Σ_{i≤r} C(n,i)^{-1} K_i(t) K_i(s)`.
pub fn cd_kernel_at(n: usize, r: usize, t: &BigRational, s: &BigRational) -> BigRational {
    let kt = eval_all(n, t, r);
    let ks = eval_all(n, s, r);
    let binom = binomial_row(n);
    (0..=r).fold(BigRational::zero(), |acc, i| {
        acc + &kt[i] * &ks[i] / BigRational::from_integer(binom[i].clone())
    })
}

/// `Λ_r(j, s)` at an integer weight `j`.
pub fn cd_kernel(n: usize, r: usize, s: &BigRational, j: usize) -> Result<BigRational> {
    if r > n || j > n {
        return invalid(format!(
            "cd_kernel needs r, j ≤ n (r = {r}, j = {j}, n = {n})"
        ));
    }
    Ok(cd_kernel_at(n, r, &int(j as i64), s))
}
