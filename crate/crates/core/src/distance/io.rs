//! Distance-matrix serialization.
//!
//! CSV is row-major, comma separated, with `inf` for unreachable pairs.
//!
//! The binary `.sgdm` layout is little-endian:
//!
//! | offset | size | field |
//! |--------|------|-------|
//! | 0 | 4 | magic `SGDM` |
//! | 4 | 4 | version (`u32`, currently 1) |
//! | 8 | 4 | `n` (`u32`) |
//! | 12 | 8·n(n−1)/2 | strict lower triangle as `f64`, row by row; NaN = unreachable |

use std::io::{BufRead, Read, Write};

use super::{DistanceKind, DistanceMatrix, UNREACHABLE};
use crate::error::{Error, Result};

pub const SGDM_MAGIC: [u8; 4] = *b"SGDM";
pub const SGDM_VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::validation(format!("i/o error: {e}"))
}

pub fn write_csv<W: Write>(m: &DistanceMatrix, mut out: W) -> Result<()> {
    let n = m.len();
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            if v.is_finite() {
                line.push_str(&format!("{v:?}"));
            } else {
                line.push_str("inf");
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R, kind: DistanceKind) -> Result<DistanceMatrix> {
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, line) in input.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        for (c, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let v = if cell == "inf" {
                UNREACHABLE
            } else {
                cell.parse::<f64>().map_err(|_| {
                    Error::validation(format!("row {}, column {}: cannot parse {cell:?}", r + 1, c + 1))
                })?
            };
            values.push(v);
        }
    }
    DistanceMatrix::from_values(rows, values, kind)
}

pub fn write_sgdm<W: Write>(m: &DistanceMatrix, mut out: W) -> Result<()> {
    let n = u32::try_from(m.len())
        .map_err(|_| Error::validation("matrix too large for the binary format"))?;
    out.write_all(&SGDM_MAGIC).map_err(io_err)?;
    out.write_all(&SGDM_VERSION.to_le_bytes()).map_err(io_err)?;
    out.write_all(&n.to_le_bytes()).map_err(io_err)?;
    let mut buf = Vec::with_capacity(8 * m.len());
    for i in 1..m.len() {
        buf.clear();
        for &v in &m.row(i)[..i] {
            let v = if v.is_finite() { v } else { f64::NAN };
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_sgdm<R: Read>(mut input: R, kind: DistanceKind) -> Result<DistanceMatrix> {
    let mut header = [0u8; 12];
    input.read_exact(&mut header).map_err(io_err)?;
    if header[..4] != SGDM_MAGIC {
        return Err(Error::validation("not an SGDM file (bad magic)"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != SGDM_VERSION {
        return Err(Error::validation(format!("unsupported SGDM version {version}")));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let mut values = vec![0.0; n * n];
    let mut cell = [0u8; 8];
    for i in 1..n {
        for j in 0..i {
            input.read_exact(&mut cell).map_err(io_err)?;
            let v = f64::from_le_bytes(cell);
            let v = if v.is_nan() { UNREACHABLE } else { v };
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    DistanceMatrix::from_values(n, values, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> DistanceMatrix {
        let inf = UNREACHABLE;
        DistanceMatrix::from_values(
            3,
            vec![0.0, 0.1, inf, 0.1, 0.0, 1.0 / 3.0, inf, 1.0 / 3.0, 0.0],
            DistanceKind::GraphSpherical,
        )
        .unwrap()
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_csv(&sample(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "0.0,0.1,inf\n0.1,0.0,0.3333333333333333\ninf,0.3333333333333333,0.0\n"
        );
    }

    #[test]
    fn sgdm_layout() {
        let mut out = Vec::new();
        write_sgdm(&sample(), &mut out).unwrap();
        assert_eq!(&out[..4], b"SGDM");
        assert_eq!(u32::from_le_bytes(out[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(out[8..12].try_into().unwrap()), 3);
        assert_eq!(out.len(), 12 + 3 * 8);
        assert_eq!(f64::from_le_bytes(out[12..20].try_into().unwrap()), 0.1);
        assert!(f64::from_le_bytes(out[20..28].try_into().unwrap()).is_nan());
    }

    #[test]
    fn csv_parse_errors_name_the_cell() {
        let err = read_csv("0,1\nx,0\n".as_bytes(), DistanceKind::GraphEuclidean).unwrap_err();
        assert!(err.to_string().contains("row 2, column 1"));
    }

    #[test]
    fn sgdm_rejects_bad_magic() {
        let bytes = b"XXXX\x01\0\0\0\x00\0\0\0";
        assert!(read_sgdm(&bytes[..], DistanceKind::GraphEuclidean).is_err());
    }

    proptest! {
        #[test]
        fn round_trips(n in 1usize..8, seed in prop::collection::vec(0.0f64..100.0, 28), holes in prop::collection::vec(any::<bool>(), 28)) {
            let mut values = vec![0.0; n * n];
            let mut t = 0;
            for i in 1..n {
                for j in 0..i {
                    let v = if holes[t] { UNREACHABLE } else { seed[t] };
                    values[i * n + j] = v;
                    values[j * n + i] = v;
                    t += 1;
                }
            }
            let m = DistanceMatrix::from_values(n, values, DistanceKind::GraphEuclidean).unwrap();
            let mut bin = Vec::new();
            write_sgdm(&m, &mut bin).unwrap();
            prop_assert_eq!(&read_sgdm(&bin[..], m.kind()).unwrap(), &m);
            let mut text = Vec::new();
            write_csv(&m, &mut text).unwrap();
            prop_assert_eq!(&read_csv(&text[..], m.kind()).unwrap(), &m);
        }
    }
}
