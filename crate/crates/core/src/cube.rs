//! Points of the Boolean cube and ℓ×n configurations.
//!
//! A [`CubeMatrix`] with rows `x_1..x_ℓ` is identified with a point of
//! `{0,1}^{ℓn}` by row-major flattening: entry `(i, j)` is coordinate
//! `i·n + j`, stored as bit `i·n + j` of a `u64` index.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Largest supported length of a single packed point.
pub const MAX_BITS: u32 = 64;

#[inline]
pub(crate) fn low_mask(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// A vector in `{0,1}^n`, bit `j` holding coordinate `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubePoint {
    bits: u64,
    len: u32,
}

impl CubePoint {
    pub fn new(bits: u64, len: u32) -> Result<Self> {
        if len == 0 || len > MAX_BITS {
            return invalid(format!("point length {len} outside 1..={MAX_BITS}"));
        }
        if bits & !low_mask(len) != 0 {
            return invalid(format!("bits {bits:#x} exceed length {len}"));
        }
        Ok(CubePoint { bits, len })
    }

    pub fn zero(len: u32) -> Self {
        CubePoint { bits: 0, len }
    }

    pub fn unit(len: u32, i: u32) -> Self {
        assert!(i < len);
        CubePoint { bits: 1 << i, len }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn get(&self, i: u32) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn xor(&self, other: &CubePoint) -> Result<CubePoint> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len as usize,
                found: other.len as usize,
            });
        }
        Ok(CubePoint {
            bits: self.bits ^ other.bits,
            len: self.len,
        })
    }
}

/// Hamming weight.
pub fn weight(x: &CubePoint) -> u32 {
    x.weight()
}

impl fmt::Display for CubePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for CubePoint {
    type Err = Error;

    /// Character `j` is coordinate `j`: `"1011"` has bits 0, 2 and 3 set.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        let len = s.len();
        if len == 0 || len > MAX_BITS as usize {
            return invalid(format!("point string of length {len}"));
        }
        for (j, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << j,
                _ => return invalid(format!("bad bit character {c:?}")),
            }
        }
        CubePoint::new(bits, len as u32)
    }
}

/// An ℓ×n binary matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CubeMatrix {
    rows: Vec<CubePoint>,
    n: u32,
}

impl CubeMatrix {
    pub fn new(rows: Vec<CubePoint>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return invalid("a configuration needs at least one row");
        };
        let n = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n as usize,
                found: bad.len() as usize,
            });
        }
        if rows.len() as u64 * n as u64 > MAX_BITS as u64 {
            return invalid(format!("{}×{n} exceeds {MAX_BITS} bits", rows.len()));
        }
        Ok(CubeMatrix { rows, n })
    }

    pub fn zero(ell: u32, n: u32) -> Self {
        CubeMatrix {
            rows: vec![CubePoint::zero(n); ell as usize],
            n,
        }
    }

    /// Inverse of [`CubeMatrix::index`].
    pub fn from_index(ell: u32, n: u32, index: u64) -> Self {
        let mask = low_mask(n);
        let rows = (0..ell)
            .map(|i| CubePoint {
                bits: (index >> (i * n)) & mask,
                len: n,
            })
            .collect();
        CubeMatrix { rows, n }
    }

    /// The rank-one matrix `u xᵀ`.
    pub fn outer(u: &CubePoint, x: &CubePoint) -> Self {
        let rows = (0..u.len())
            .map(|i| {
                if u.get(i) {
                    *x
                } else {
                    CubePoint::zero(x.len())
                }
            })
            .collect();
        CubeMatrix { rows, n: x.len() }
    }

    pub fn ell(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn rows(&self) -> &[CubePoint] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &CubePoint {
        &self.rows[i]
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(CubePoint::is_zero)
    }

    /// Row-major flattened index into `{0,1}^{ℓn}`.
    pub fn index(&self) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .fold(0, |acc, (i, r)| acc | (r.bits() << (i as u32 * self.n)))
    }

    /// Column `j` as a type in `{0,1}^ℓ` (bit `i` = entry of row `i`).
    pub fn column_type(&self, j: u32) -> u32 {
        self.rows
            .iter()
            .enumerate()
            .fold(0, |acc, (i, r)| acc | ((r.get(j) as u32) << i))
    }

    /// `uᵀX`: XOR of the rows selected by `u`.
    pub fn row_combination(&self, u: &CubePoint) -> Result<CubePoint> {
        if u.len() != self.ell() {
            return Err(Error::LengthMismatch {
                expected: self.rows.len(),
                found: u.len() as usize,
            });
        }
        let bits = self
            .rows
            .iter()
            .enumerate()
            .filter(|(i, _)| u.get(*i as u32))
            .fold(0, |acc, (_, r)| acc ^ r.bits());
        Ok(CubePoint { bits, len: self.n })
    }
}

impl fmt::Display for CubeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.rows.iter().map(|r| r.to_string()).collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

/// Row-combination weight `|uᵀX|` computed straight from a flattened index.
#[inline]
pub(crate) fn combination_weight_index(index: u64, n: u32, ell: u32, u: u32) -> u32 {
    let mask = low_mask(n);
    let mut acc = 0u64;
    for i in 0..ell {
        if (u >> i) & 1 == 1 {
            acc ^= (index >> (i * n)) & mask;
        }
    }
    acc.count_ones()
}

#[inline]
pub(crate) fn row_weight_index(index: u64, n: u32, i: u32) -> u32 {
    ((index >> (i * n)) & low_mask(n)).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> CubePoint {
        s.parse().unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(weight(&CubePoint::zero(4)), 0);
        assert_eq!(weight(&p("1011")), 3);
        assert_eq!(weight(&p("1111111")), 7);
    }

    #[test]
    fn row_combinations() {
        let x = CubeMatrix::new(vec![p("1100"), p("0110")]).unwrap();
        assert!(x.row_combination(&p("00")).unwrap().is_zero());
        assert_eq!(x.row_combination(&p("11")).unwrap(), p("1010"));
        assert_eq!(x.row_combination(&p("10")).unwrap(), p("1100"));
        assert!(matches!(
            x.row_combination(&p("100")),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn flattening_roundtrip() {
        let x = CubeMatrix::new(vec![p("101"), p("011")]).unwrap();
        let idx = x.index();
        assert_eq!(idx, 0b110_101);
        assert_eq!(CubeMatrix::from_index(2, 3, idx), x);
        assert_eq!(x.column_type(0), 0b01);
        assert_eq!(x.column_type(1), 0b10);
        assert_eq!(x.column_type(2), 0b11);
    }

    #[test]
    fn character_layout_identity() {
        // <X, u yᵀ> = <uᵀX, y> under the row-major layout.
        let (ell, n) = (3u32, 4u32);
        for xi in 0..(1u64 << (ell * n)) {
            let x = CubeMatrix::from_index(ell, n, xi);
            for u in 0..(1u64 << ell) {
                let up = CubePoint::new(u, ell).unwrap();
                for y in 0..(1u64 << n) {
                    let yp = CubePoint::new(y, n).unwrap();
                    let lhs = (xi & CubeMatrix::outer(&up, &yp).index()).count_ones() % 2;
                    let rhs = (x.row_combination(&up).unwrap().bits() & y).count_ones() % 2;
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CubeMatrix::new(vec![]).is_err());
        assert!(CubeMatrix::new(vec![p("10"), p("101")]).is_err());
        assert!("10a".parse::<CubePoint>().is_err());
    }
}
