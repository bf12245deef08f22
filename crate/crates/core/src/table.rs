//! Dense function tables on `{0,1}^N` and the Fourier/convolution engine.
//!
//! Conventions: `f̂(x) = 2^{-N} Σ_y f(y)(-1)^{⟨x,y⟩}`. Primal-side inner
//! products and convolutions carry the `2^{-N}` factor, fourier-side ones
//! do not. Every table records which side it lives on.

use std::sync::atomic::{AtomicU32, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pow2, Mode, Number, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Primal,
    Fourier,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Primal => Side::Fourier,
            Side::Fourier => Side::Primal,
        }
    }
}

pub const DEFAULT_FLOAT_CAP: u32 = 26;
pub const DEFAULT_EXACT_CAP: u32 = 20;

static FLOAT_CAP: AtomicU32 = AtomicU32::new(DEFAULT_FLOAT_CAP);
static EXACT_CAP: AtomicU32 = AtomicU32::new(DEFAULT_EXACT_CAP);

/// Largest dense dimension accepted per arithmetic mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseCap {
    pub float: u32,
    pub exact: u32,
}

impl Default for DenseCap {
    fn default() -> Self {
        DenseCap {
            float: DEFAULT_FLOAT_CAP,
            exact: DEFAULT_EXACT_CAP,
        }
    }
}

impl DenseCap {
    /// Cap applied to both modes.
    pub fn uniform(cap: u32) -> Self {
        DenseCap {
            float: cap,
            exact: cap,
        }
    }

    /// The process-wide cap currently in force.
    pub fn current() -> Self {
        DenseCap {
            float: FLOAT_CAP.load(Ordering::Relaxed),
            exact: EXACT_CAP.load(Ordering::Relaxed),
        }
    }

    pub fn install(self) {
        FLOAT_CAP.store(self.float, Ordering::Relaxed);
        EXACT_CAP.store(self.exact, Ordering::Relaxed);
    }

    pub fn for_mode(&self, mode: Mode) -> u32 {
        match mode {
            Mode::Exact => self.exact,
            Mode::Float => self.float,
        }
    }

    pub fn check(&self, dim: u32, mode: Mode) -> Result<()> {
        let cap = self.for_mode(mode);
        if dim > cap {
            return Err(Error::DenseCap { dim, cap, mode });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Values {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Exact(v) => v.len(),
            Values::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        match self {
            Values::Exact(_) => Mode::Exact,
            Values::Float(_) => Mode::Float,
        }
    }
}

/// A dense function `{0,1}^N → scalar`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    dim: u32,
    side: Side,
    values: Values,
}

impl ValueTable {
    pub fn from_values(dim: u32, side: Side, values: Values) -> Result<Self> {
        DenseCap::current().check(dim, values.mode())?;
        let expected = 1usize << dim;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(ValueTable { dim, side, values })
    }

    pub fn from_fn_exact<F>(dim: u32, side: Side, f: F) -> Result<Self>
    where
        F: Fn(u64) -> BigRational + Sync,
    {
        DenseCap::current().check(dim, Mode::Exact)?;
        let values = (0..1u64 << dim).into_par_iter().map(&f).collect();
        Ok(ValueTable {
            dim,
            side,
            values: Values::Exact(values),
        })
    }

    pub fn from_fn_float<F>(dim: u32, side: Side, f: F) -> Result<Self>
    where
        F: Fn(u64) -> f64 + Sync,
    {
        DenseCap::current().check(dim, Mode::Float)?;
        let values = (0..1u64 << dim).into_par_iter().map(&f).collect();
        Ok(ValueTable {
            dim,
            side,
            values: Values::Float(values),
        })
    }

    /// Generic constructor dispatching on the scalar type.
    pub fn from_fn<S: Scalar, F>(dim: u32, side: Side, f: F) -> Result<Self>
    where
        F: Fn(u64) -> S + Sync,
    {
        match S::MODE {
            Mode::Exact => Self::from_fn_exact(dim, side, |i| match f(i).to_number() {
                Number::Exact(q) => q,
                Number::Float(_) => unreachable!("exact scalar produced a float"),
            }),
            Mode::Float => Self::from_fn_float(dim, side, |i| f(i).to_f64()),
        }
    }

    /// Indicator of the origin.
    pub fn delta(dim: u32, mode: Mode, side: Side) -> Result<Self> {
        Self::constant_with(dim, mode, side, |i| i == 0)
    }

    pub fn ones(dim: u32, mode: Mode, side: Side) -> Result<Self> {
        Self::constant_with(dim, mode, side, |_| true)
    }

    fn constant_with(
        dim: u32,
        mode: Mode,
        side: Side,
        pick: impl Fn(u64) -> bool + Sync,
    ) -> Result<Self> {
        match mode {
            Mode::Exact => Self::from_fn_exact(dim, side, |i| {
                if pick(i) {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }),
            Mode::Float => Self::from_fn_float(dim, side, |i| if pick(i) { 1.0 } else { 0.0 }),
        }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn mode(&self) -> Mode {
        self.values.mode()
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        match &self.values {
            Values::Exact(v) => Some(v),
            Values::Float(_) => None,
        }
    }

    pub fn float(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Float(v) => Some(v),
            Values::Exact(_) => None,
        }
    }

    pub fn exact_mut(&mut self) -> Option<&mut [BigRational]> {
        match &mut self.values {
            Values::Exact(v) => Some(v),
            Values::Float(_) => None,
        }
    }

    pub fn float_mut(&mut self) -> Option<&mut [f64]> {
        match &mut self.values {
            Values::Float(v) => Some(v),
            Values::Exact(_) => None,
        }
    }

    pub fn get(&self, index: u64) -> Number {
        match &self.values {
            Values::Exact(v) => Number::Exact(v[index as usize].clone()),
            Values::Float(v) => Number::Float(v[index as usize]),
        }
    }

    pub fn get_f64(&self, index: u64) -> f64 {
        self.get(index).to_f64()
    }

    /// Relabel the side without touching values.
    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn to_float(&self) -> ValueTable {
        let values = match &self.values {
            Values::Exact(v) => Values::Float(v.par_iter().map(|q| q.to_f64()).collect()),
            Values::Float(v) => Values::Float(v.clone()),
        };
        ValueTable {
            dim: self.dim,
            side: self.side,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.values {
            Values::Exact(v) => v.iter().map(|q| q.to_f64().abs()).fold(0.0, f64::max),
            Values::Float(v) => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }

    /// Number of nonzero entries.
    pub fn support_size(&self) -> usize {
        match &self.values {
            Values::Exact(v) => v.iter().filter(|q| !q.is_zero()).count(),
            Values::Float(v) => v.iter().filter(|x| **x != 0.0).count(),
        }
    }

    pub fn sum(&self) -> Number {
        match &self.values {
            Values::Exact(v) => Number::Exact(sum_rationals(v)),
            Values::Float(v) => Number::Float(v.iter().sum()),
        }
    }

    fn check_compatible(&self, other: &ValueTable) -> Result<()> {
        if self.mode() != other.mode() {
            return Err(Error::ModeMismatch);
        }
        if self.side != other.side {
            return Err(Error::SideMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &ValueTable,
        exact: impl Fn(&BigRational, &BigRational) -> BigRational + Sync,
        float: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Result<ValueTable> {
        self.check_compatible(other)?;
        let values = match (&self.values, &other.values) {
            (Values::Exact(a), Values::Exact(b)) => Values::Exact(
                a.par_iter()
                    .zip(b.par_iter())
                    .map(|(x, y)| exact(x, y))
                    .collect(),
            ),
            (Values::Float(a), Values::Float(b)) => Values::Float(
                a.par_iter()
                    .zip(b.par_iter())
                    .map(|(x, y)| float(*x, *y))
                    .collect(),
            ),
            _ => unreachable!(),
        };
        Ok(ValueTable {
            dim: self.dim,
            side: self.side,
            values,
        })
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ValueTable) -> Result<ValueTable> {
        self.zip_with(other, |a, b| a * b, |a, b| a * b)
    }

    pub fn add(&self, other: &ValueTable) -> Result<ValueTable> {
        self.zip_with(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &ValueTable) -> Result<ValueTable> {
        self.zip_with(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn scale(&self, c: &BigRational) -> ValueTable {
        let cf = c.to_f64();
        self.map(|q| q * c, |x| x * cf)
    }

    pub fn mul_pow2(&self, k: i32) -> ValueTable {
        self.map(|q| q.mul_pow2(k), |x| x.mul_pow2(k))
    }

    fn map(
        &self,
        exact: impl Fn(&BigRational) -> BigRational + Sync,
        float: impl Fn(f64) -> f64 + Sync,
    ) -> ValueTable {
        let values = match &self.values {
            Values::Exact(v) => Values::Exact(v.par_iter().map(&exact).collect()),
            Values::Float(v) => Values::Float(v.par_iter().map(|x| float(*x)).collect()),
        };
        ValueTable {
            dim: self.dim,
            side: self.side,
            values,
        }
    }

    /// `2^{-N} Σ_y f(y)(-1)^{⟨x,y⟩}`; flips the side tag.
    pub fn fourier(&self) -> ValueTable {
        let values = match &self.values {
            Values::Exact(v) => Values::Exact(exact_walsh(v, self.dim as usize)),
            Values::Float(v) => {
                let mut w = v.clone();
                walsh_hadamard_f64(&mut w);
                let scale = (-(self.dim as f64)).exp2();
                w.par_iter_mut().for_each(|x| *x *= scale);
                Values::Float(w)
            }
        };
        ValueTable {
            dim: self.dim,
            side: self.side.flip(),
            values,
        }
    }

    /// `2^N · fourier(f)`: undoes [`ValueTable::fourier`].
    pub fn inverse_fourier(&self) -> ValueTable {
        self.fourier().mul_pow2(self.dim as i32)
    }

    /// Convolution under the normalization of the tables' side, via the
    /// transform–multiply–inverse route.
    pub fn convolve(&self, other: &ValueTable) -> Result<ValueTable> {
        self.check_compatible(other)?;
        match self.side {
            Side::Fourier => {
                // f̂ *_F ĝ = F(f·g)
                let a = self.inverse_fourier();
                let b = other.inverse_fourier();
                Ok(a.mul(&b)?.fourier())
            }
            Side::Primal => {
                // F(f*g) = f̂·ĝ
                let a = self.fourier();
                let b = other.fourier();
                Ok(a.mul(&b)?.inverse_fourier())
            }
        }
    }

    /// Direct-sum convolution, `O(4^N)`.
    pub fn convolve_direct(&self, other: &ValueTable) -> Result<ValueTable> {
        self.check_compatible(other)?;
        let len = self.len();
        let shift = match self.side {
            Side::Primal => -(self.dim as i32),
            Side::Fourier => 0,
        };
        let values = match (&self.values, &other.values) {
            (Values::Exact(a), Values::Exact(b)) => Values::Exact(
                (0..len)
                    .into_par_iter()
                    .map(|x| {
                        let s = (0..len)
                            .filter(|y| !a[*y].is_zero())
                            .fold(BigRational::zero(), |acc, y| acc + &a[y] * &b[x ^ y]);
                        s.mul_pow2(shift)
                    })
                    .collect(),
            ),
            (Values::Float(a), Values::Float(b)) => Values::Float(
                (0..len)
                    .into_par_iter()
                    .map(|x| {
                        (0..len)
                            .map(|y| a[y] * b[x ^ y])
                            .sum::<f64>()
                            .mul_pow2(shift)
                    })
                    .collect(),
            ),
            _ => unreachable!(),
        };
        Ok(ValueTable {
            dim: self.dim,
            side: self.side,
            values,
        })
    }

    /// `(f⊗g)(x, y) = f(x)g(y)`, with `x` occupying the low `N₁` coordinates.
    pub fn tensor(&self, other: &ValueTable) -> Result<ValueTable> {
        if self.mode() != other.mode() {
            return Err(Error::ModeMismatch);
        }
        if self.side != other.side {
            return Err(Error::SideMismatch);
        }
        let dim = self.dim + other.dim;
        DenseCap::current().check(dim, self.mode())?;
        let lo = self.dim;
        let mask = (1u64 << lo) - 1;
        let values = match (&self.values, &other.values) {
            (Values::Exact(a), Values::Exact(b)) => Values::Exact(
                (0..1u64 << dim)
                    .into_par_iter()
                    .map(|i| &a[(i & mask) as usize] * &b[(i >> lo) as usize])
                    .collect(),
            ),
            (Values::Float(a), Values::Float(b)) => Values::Float(
                (0..1u64 << dim)
                    .into_par_iter()
                    .map(|i| a[(i & mask) as usize] * b[(i >> lo) as usize])
                    .collect(),
            ),
            _ => unreachable!(),
        };
        Ok(ValueTable {
            dim,
            side: self.side,
            values,
        })
    }

    /// Inner product under the side's normalization.
    pub fn inner(&self, other: &ValueTable) -> Result<Number> {
        let prod = self.mul(other)?;
        let shift = match self.side {
            Side::Primal => -(self.dim as i32),
            Side::Fourier => 0,
        };
        Ok(match prod.sum() {
            Number::Exact(q) => Number::Exact(q.mul_pow2(shift)),
            Number::Float(x) => Number::Float(x.mul_pow2(shift)),
        })
    }
}

pub(crate) fn sum_rationals(v: &[BigRational]) -> BigRational {
    if v.is_empty() {
        return BigRational::zero();
    }
    let den = v
        .par_iter()
        .map(|q| q.denom().clone())
        .reduce(BigInt::one, |a, b| a.lcm(&b));
    let num: BigInt = v
        .par_iter()
        .map(|q| q.numer() * (&den / q.denom()))
        .reduce(BigInt::zero, |a, b| a + b);
    BigRational::new(num, den)
}

/// Unnormalized in-place Walsh–Hadamard transform.
pub fn walsh_hadamard_f64(data: &mut [f64]) {
    walsh_hadamard(data, |a, b| {
        let (s, t) = (*a + *b, *a - *b);
        *a = s;
        *b = t;
    });
}

/// Unnormalized in-place Walsh–Hadamard transform over big integers.
pub fn walsh_hadamard_bigint(data: &mut [BigInt]) {
    walsh_hadamard(data, |a, b| {
        let s = &*a + &*b;
        let t = std::mem::take(a) - &*b;
        *a = s;
        *b = t;
    });
}

fn walsh_hadamard<T: Send>(data: &mut [T], butterfly: impl Fn(&mut T, &mut T) + Sync) {
    let len = data.len();
    assert!(len.is_power_of_two(), "table length must be a power of two");
    let mut h = 1;
    while h < len {
        let blocks = len / (2 * h);
        if len < 1 << 12 {
            for chunk in data.chunks_mut(2 * h) {
                let (a, b) = chunk.split_at_mut(h);
                a.iter_mut().zip(b).for_each(|(x, y)| butterfly(x, y));
            }
        } else if blocks >= 64 {
            data.par_chunks_mut(2 * h).for_each(|chunk| {
                let (a, b) = chunk.split_at_mut(h);
                a.iter_mut().zip(b).for_each(|(x, y)| butterfly(x, y));
            });
        } else {
            for chunk in data.chunks_mut(2 * h) {
                let (a, b) = chunk.split_at_mut(h);
                a.par_iter_mut()
                    .zip(b.par_iter_mut())
                    .for_each(|(x, y)| butterfly(x, y));
            }
        }
        h *= 2;
    }
}

/// Exact normalized transform: bring entries to a common denominator,
/// transform the integer numerators, divide once at the end.
fn exact_walsh(values: &[BigRational], dim: usize) -> Vec<BigRational> {
    let den = values
        .par_iter()
        .map(|q| q.denom().clone())
        .reduce(BigInt::one, |a, b| a.lcm(&b));
    let mut nums: Vec<BigInt> = values
        .par_iter()
        .map(|q| {
            if q.is_zero() {
                BigInt::zero()
            } else {
                q.numer() * (&den / q.denom())
            }
        })
        .collect();
    walsh_hadamard_bigint(&mut nums);
    let out_den = den * pow2(dim);
    nums.into_par_iter()
        .map(|x| BigRational::new(x, out_den.clone()))
        .collect()
}

/// Evaluate a character sum at one point: `2^{-N} Σ_y f(y)(-1)^{⟨x,y⟩}`.
pub fn fourier_coefficient(f: &ValueTable, x: u64) -> Number {
    match f.values() {
        Values::Exact(v) => {
            let s = v
                .iter()
                .enumerate()
                .fold(BigRational::zero(), |acc, (y, q)| {
                    if (x & y as u64).count_ones() % 2 == 0 {
                        acc + q
                    } else {
                        acc - q
                    }
                });
            Number::Exact(s.mul_pow2(-(f.dim() as i32)))
        }
        Values::Float(v) => {
            let s: f64 = v
                .iter()
                .enumerate()
                .map(|(y, q)| {
                    if (x & y as u64).count_ones() % 2 == 0 {
                        *q
                    } else {
                        -q
                    }
                })
                .sum();
            Number::Float(s.mul_pow2(-(f.dim() as i32)))
        }
    }
}
