//! On-disk formats: a flat binary table and the certificate JSON sidecar.
//!
//! Table layout (all integers little-endian):
//!
//! ```text
//! "DDLT"  u32 N  u8 mode (0 exact, 1 float)  u8 side (0 primal, 1 fourier)
//! float:  2^N × f64
//! exact:  2^N × (u32 len, len bytes signed numerator,
//!                u32 len, len bytes denominator)
//! ```

use std::io::{Read, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constructions::{Certificate, Construction, Params};
use crate::error::{Error, Result};
use crate::lp::Instance;
use crate::scalar::{Mode, Number};
use crate::table::{DenseCap, Side, ValueTable, Values};

const MAGIC: &[u8; 4] = b"DDLT";

fn put_bytes(out: &mut impl Write, bytes: &[u8]) -> Result<()> {
    out.write_all(&(bytes.len() as u32).to_le_bytes())?;
    out.write_all(bytes)?;
    Ok(())
}

pub fn write_table(table: &ValueTable, out: &mut impl Write) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&table.dim().to_le_bytes())?;
    out.write_all(&[
        match table.mode() {
            Mode::Exact => 0,
            Mode::Float => 1,
        },
        match table.side() {
            Side::Primal => 0,
            Side::Fourier => 1,
        },
    ])?;
    match table.values() {
        Values::Float(v) => {
            for x in v {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Values::Exact(v) => {
            for q in v {
                put_bytes(out, &q.numer().to_signed_bytes_le())?;
                put_bytes(out, &q.denom().to_signed_bytes_le())?;
            }
        }
    }
    Ok(())
}

pub fn table_bytes(table: &ValueTable) -> Vec<u8> {
    let mut buf = Vec::new();
    write_table(table, &mut buf).expect("writing to memory cannot fail");
    buf
}

fn take<const K: usize>(input: &mut impl Read) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated table: {e}")))?;
    Ok(b)
}

fn take_bytes(input: &mut impl Read) -> Result<Vec<u8>> {
    let len = u32::from_le_bytes(take::<4>(input)?) as usize;
    if len > 1 << 28 {
        return Err(Error::Format(format!("implausible integer length {len}")));
    }
    let mut b = vec![0u8; len];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated table: {e}")))?;
    Ok(b)
}

pub fn read_table(input: &mut impl Read) -> Result<ValueTable> {
    if &take::<4>(input)? != MAGIC {
        return Err(Error::Format("missing DDLT magic".into()));
    }
    let dim = u32::from_le_bytes(take::<4>(input)?);
    let [mode, side] = take::<2>(input)?;
    let mode = match mode {
        0 => Mode::Exact,
        1 => Mode::Float,
        m => return Err(Error::Format(format!("unknown mode byte {m}"))),
    };
    let side = match side {
        0 => Side::Primal,
        1 => Side::Fourier,
        s => return Err(Error::Format(format!("unknown side byte {s}"))),
    };
    DenseCap::current().check(dim, mode)?;
    let len = 1usize << dim;
    let values = match mode {
        Mode::Float => Values::Float(
            (0..len)
                .map(|_| take::<8>(input).map(f64::from_le_bytes))
                .collect::<Result<_>>()?,
        ),
        Mode::Exact => Values::Exact(
            (0..len)
                .map(|_| {
                    let num = BigInt::from_signed_bytes_le(&take_bytes(input)?);
                    let den = BigInt::from_signed_bytes_le(&take_bytes(input)?);
                    if den.is_zero() {
                        return Err(Error::Format("zero denominator".into()));
                    }
                    Ok(BigRational::new(num, den))
                })
                .collect::<Result<_>>()?,
        ),
    };
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after table", rest.len())));
    }
    ValueTable::from_values(dim, side, values)
}

/// SHA-256 of the binary encoding, hex.
pub fn table_hash(table: &ValueTable) -> String {
    hex::encode(Sha256::digest(table_bytes(table)))
}

/// JSON sidecar describing a certificate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub construction: Construction,
    pub instance: Instance,
    pub params: Params,
    pub claimed_value: Number,
    pub support_size: u128,
    pub table_hash: String,
}

impl CertificateRecord {
    pub fn of(cert: &Certificate) -> Self {
        CertificateRecord {
            construction: cert.construction,
            instance: cert.instance,
            params: cert.params.clone(),
            claimed_value: cert.claimed_value.clone(),
            support_size: u128::try_from(&cert.support_size).unwrap_or(u128::MAX),
            table_hash: table_hash(&cert.g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn exact_roundtrip() {
        let t = ValueTable::from_fn_exact(4, Side::Fourier, |i| rat(i as i64 - 7, (i % 5 + 1) as i64) * int(1 << 40))
            .unwrap();
        let bytes = table_bytes(&t);
        assert_eq!(&bytes[..4], b"DDLT");
        let back = read_table(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(table_hash(&back), table_hash(&t));
    }

    #[test]
    fn float_roundtrip_and_corruption() {
        let t = ValueTable::from_fn_float(3, Side::Primal, |i| i as f64 * -0.5).unwrap();
        let bytes = table_bytes(&t);
        assert_eq!(bytes.len(), 4 + 4 + 2 + 8 * 8);
        assert_eq!(read_table(&mut bytes.as_slice()).unwrap(), t);
        assert!(read_table(&mut &bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_table(&mut extra.as_slice()).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(read_table(&mut bad.as_slice()), Err(Error::Format(_))));
    }
}
