//! `QWTM` binary transmission matrix files.
//!
//! Little-endian layout:
//!
//! | offset | size | field                                  |
//! |-------:|-----:|----------------------------------------|
//! | 0      | 4    | magic `QWTM`                           |
//! | 4      | 4    | u32 version (1)                        |
//! | 8      | 4    | u32 rows                               |
//! | 12     | 4    | u32 cols                               |
//! | 16     | 4    | u32 n_in_h                             |
//! | 20     | 1    | u8 provenance (0 oracle, 1 measured)   |
//! | 21     | 7    | zero padding                           |
//! | 28     | 16·rows·cols | (f64 re, f64 im), row-major    |

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{Basis, Provenance, TransmissionMatrix};
use crate::error::{Error, Result};
use crate::numcore::ComplexMatrix;

pub const QWTM_MAGIC: &[u8; 4] = b"QWTM";
pub const QWTM_VERSION: u32 = 1;
const HEADER_LEN: usize = 28;

pub fn encode(tm: &TransmissionMatrix) -> Vec<u8> {
    let (rows, cols) = (tm.n_out(), tm.n_in());
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * rows * cols);
    out.extend_from_slice(QWTM_MAGIC);
    out.extend_from_slice(&QWTM_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out.extend_from_slice(&(tm.n_in_h() as u32).to_le_bytes());
    out.push(tm.provenance().code());
    out.extend_from_slice(&[0u8; 7]);
    for r in 0..rows {
        for c in 0..cols {
            let z = tm.entry(r, c);
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

fn f64_at(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8-byte slice"))
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<TransmissionMatrix> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != QWTM_MAGIC {
        return Err(bad("missing QWTM magic".into()));
    }
    let version = u32_at(bytes, 4);
    if version != QWTM_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let rows = u32_at(bytes, 8) as usize;
    let cols = u32_at(bytes, 12) as usize;
    let n_in_h = u32_at(bytes, 16) as usize;
    let provenance = Provenance::from_code(bytes[20]).ok_or_else(|| bad(format!("provenance code {}", bytes[20])))?;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| bad("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(bad(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let off = HEADER_LEN + 16 * (r * cols + c);
            m[(r, c)] = Complex64::new(f64_at(bytes, off), f64_at(bytes, off + 8));
        }
    }
    TransmissionMatrix::new(m, n_in_h, Basis::InputMode, provenance).map_err(|e| bad(e.to_string()))
}

pub fn write_qwtm(path: impl AsRef<Path>, tm: &TransmissionMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(tm)).map_err(|e| Error::io(path, e))
}

pub fn read_qwtm(path: impl AsRef<Path>) -> Result<TransmissionMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::haar_unitary;

    fn sample() -> TransmissionMatrix {
        let m = haar_unitary(5, 3)
            .unwrap()
            .into_matrix()
            .view((0, 0), (3, 5))
            .into_owned();
        TransmissionMatrix::new(m, 2, Basis::InputMode, Provenance::Measured).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[0..4], b"QWTM");
        assert_eq!(u32_at(&bytes, 4), 1);
        assert_eq!(u32_at(&bytes, 8), 3);
        assert_eq!(u32_at(&bytes, 12), 5);
        assert_eq!(u32_at(&bytes, 16), 2);
        assert_eq!(bytes[20], 1);
        assert_eq!(&bytes[21..28], &[0u8; 7]);
        assert_eq!(bytes.len(), 28 + 16 * 15);
        assert_eq!(f64_at(&bytes, 28), sample().entry(0, 0).re);
        assert_eq!(f64_at(&bytes, 36), sample().entry(0, 0).im);
        assert_eq!(f64_at(&bytes, 44), sample().entry(0, 1).re);
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.qwtm");
        let tm = sample();
        write_qwtm(&path, &tm).unwrap();
        let back = read_qwtm(&path).unwrap();
        assert_eq!(back, tm);
        assert!(back.has_row_ambiguity());
        write_qwtm(&path, &back).unwrap();
        assert_eq!(fs::read(&path).unwrap(), encode(&tm));
    }

    #[test]
    fn corrupt_files_rejected() {
        let p = Path::new("mem");
        let mut bytes = encode(&sample());
        assert!(decode(&bytes[..20], p).is_err());
        bytes.pop();
        assert!(decode(&bytes, p).is_err());
        let mut bytes = encode(&sample());
        bytes[0] = b'X';
        assert!(decode(&bytes, p).is_err());
        let mut bytes = encode(&sample());
        bytes[4] = 2;
        assert!(decode(&bytes, p).is_err());
        let mut bytes = encode(&sample());
        bytes[20] = 9;
        assert!(decode(&bytes, p).is_err());
    }
}
