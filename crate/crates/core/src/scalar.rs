//! Scalar arithmetic shared by dense tables and profile-domain functions.
//!
//! Two modes exist: exact arbitrary-precision rationals and 64-bit floats.
//! Certificates are produced and checked exactly; floats are for scans.

use std::fmt::Debug;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Float,
}

/// Numeric type usable as a table entry.
pub trait Scalar: Clone + Debug + PartialOrd + Send + Sync + Zero + One + Signed + 'static {
    const MODE: Mode;

    fn from_rational(q: &BigRational) -> Self;

    fn from_i64(v: i64) -> Self;

    fn from_i128(v: i128) -> Self;

    fn to_f64(&self) -> f64;

    /// Multiply by 2^k (k may be negative).
    fn mul_pow2(&self, k: i32) -> Self;

    fn to_number(&self) -> Number;
}

impl Scalar for BigRational {
    const MODE: Mode = Mode::Exact;

    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_i128(v: i128) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn mul_pow2(&self, k: i32) -> Self {
        if k >= 0 {
            self * BigRational::from_integer(BigInt::one() << k as usize)
        } else {
            self / BigRational::from_integer(BigInt::one() << (-k) as usize)
        }
    }

    fn to_number(&self) -> Number {
        Number::Exact(self.clone())
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_rational(q: &BigRational) -> Self {
        rational_to_f64(q)
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_i128(v: i128) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn mul_pow2(&self, k: i32) -> Self {
        self * 2f64.powi(k)
    }

    fn to_number(&self) -> Number {
        Number::Float(*self)
    }
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn pow2(k: usize) -> BigInt {
    BigInt::one() << k
}

/// Nearest-ish f64, robust to numerators and denominators beyond f64 range.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let (n, d) = (q.numer(), q.denom());
    if let (Some(a), Some(b)) = (n.to_f64(), d.to_f64()) {
        if a.is_finite() && b.is_finite() && b != 0.0 {
            return a / b;
        }
    }
    let l = log2_abs_rational(q);
    let sign = if q.is_negative() { -1.0 } else { 1.0 };
    sign * l.exp2()
}

fn log2_abs_int(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.abs().to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    let top: BigInt = v.abs() >> shift as usize;
    top.to_f64().unwrap().log2() + shift as f64
}

/// log2 |q| for nonzero q.
pub fn log2_abs_rational(q: &BigRational) -> f64 {
    log2_abs_int(q.numer()) - log2_abs_int(q.denom())
}

/// A scalar as it appears in reports: exact rational or float.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(q) => rational_to_f64(q),
            Number::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Number::Exact(q) => Some(q),
            Number::Float(_) => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    num: String,
    den: String,
}

impl RationalRepr {
    fn from_rational(q: &BigRational) -> Self {
        RationalRepr {
            num: q.numer().to_str_radix(10),
            den: q.denom().to_str_radix(10),
        }
    }

    fn into_rational(self) -> Result<BigRational, String> {
        let num = BigInt::parse_bytes(self.num.as_bytes(), 10)
            .ok_or_else(|| format!("bad numerator {:?}", self.num))?;
        let den = BigInt::parse_bytes(self.den.as_bytes(), 10)
            .ok_or_else(|| format!("bad denominator {:?}", self.den))?;
        if den.sign() == Sign::NoSign {
            return Err("zero denominator".into());
        }
        Ok(BigRational::new(num, den))
    }
}

/// Serde adapter writing rationals as `{"num": "...", "den": "..."}`.
pub mod rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        RationalRepr::from_rational(q).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        RationalRepr::deserialize(d)?
            .into_rational()
            .map_err(serde::de::Error::custom)
    }
}

pub mod opt_rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        q.as_ref().map(RationalRepr::from_rational).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        Option::<RationalRepr>::deserialize(d)?
            .map(|r| r.into_rational().map_err(serde::de::Error::custom))
            .transpose()
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Number::Exact(q) => RationalRepr::from_rational(q).serialize(s),
            Number::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Exact(RationalRepr),
            Float(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Exact(r) => r
                .into_rational()
                .map(Number::Exact)
                .map_err(serde::de::Error::custom),
            Repr::Float(x) => Ok(Number::Float(x)),
        }
    }
}

/// Parse `p/q`, a plain integer, or a decimal like `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::parse_bytes(p.trim().as_bytes(), 10)?;
        let q = BigInt::parse_bytes(q.trim().as_bytes(), 10)?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches('-'), frac);
        let num = BigInt::parse_bytes(digits.as_bytes(), 10)?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let q = BigRational::new(num, den);
        return Some(if negative { -q } else { q });
    }
    BigInt::parse_bytes(t.as_bytes(), 10).map(BigRational::from_integer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_rational_roundtrip() {
        let q = rat(-7, 12);
        let s = serde_json::to_string(&Number::Exact(q.clone())).unwrap();
        assert_eq!(s, r#"{"num":"-7","den":"12"}"#);
        let back: Number = serde_json::from_str(&s).unwrap();
        assert_eq!(back, Number::Exact(q));
        let f: Number = serde_json::from_str("0.5").unwrap();
        assert_eq!(f, Number::Float(0.5));
    }

    #[test]
    fn huge_rational_to_f64() {
        let big = BigRational::from_integer(pow2(2000)) / int(3);
        let l = log2_abs_rational(&big);
        assert!((l - (2000.0 - 3f64.log2())).abs() < 1e-9);
        assert!(rational_to_f64(&big).is_infinite());
        let tiny = BigRational::new(pow2(1500), pow2(1502));
        assert_eq!(rational_to_f64(&tiny), 0.25);
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("3/6"), Some(rat(1, 2)));
        assert_eq!(parse_rational("0.05"), Some(rat(1, 20)));
        assert_eq!(parse_rational("-2"), Some(int(-2)));
        assert_eq!(parse_rational("1/0"), None);
    }
}
