//! Binary spectrum files.
//!
//! Layout, little-endian: 16-byte magic, u32 dimension n, u32 component
//! count m, n × u64 points per axis, then for every grid node in row-major
//! order (last axis fastest) m pairs of f64 (re, im).

use std::path::Path;

use num_complex::Complex64;

use crate::output::write_atomic;
use crate::CliError;

pub const MAGIC: [u8; 16] = *b"FRACORDER-SPEC\x00\x01";

pub fn encode(points: &[usize], m: usize, values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * points.len() + 16 * values.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(points.len() as u32).to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    for &p in points {
        out.extend_from_slice(&(p as u64).to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8], String> {
    if bytes.len() < n {
        return Err("truncated".into());
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

pub fn decode(mut bytes: &[u8]) -> Result<(Vec<usize>, usize, Vec<Complex64>), String> {
    if take(&mut bytes, 16)? != MAGIC {
        return Err("not a spectrum file (bad magic)".into());
    }
    let u32_at = |b: &mut &[u8]| take(b, 4).map(|s| u32::from_le_bytes(s.try_into().unwrap()));
    let n = u32_at(&mut bytes)? as usize;
    let m = u32_at(&mut bytes)? as usize;
    if n == 0 || m == 0 {
        return Err("dimension and component count must be positive".into());
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(u64::from_le_bytes(take(&mut bytes, 8)?.try_into().unwrap()) as usize);
    }
    let count = points.iter().try_fold(m, |acc, &p| acc.checked_mul(p)).ok_or("grid too large")?;
    if bytes.len() != 16 * count {
        return Err(format!("expected {} values, found {} bytes of payload", count, bytes.len()));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| Complex64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap())))
        .collect();
    Ok((points, m, values))
}

pub fn read(path: &Path) -> Result<(Vec<usize>, usize, Vec<Complex64>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, points: &[usize], m: usize, values: &[Complex64]) -> Result<(), CliError> {
    write_atomic(path, &encode(points, m, values))
}
