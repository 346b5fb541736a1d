use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid3;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CNS1";
const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 8;

/// Encode a time-stamped field: magic, `n` (u32), `L` (f64), component count
/// (u32), time (f64), then `(re, im)` f64 pairs, all little-endian.
pub fn encode_snapshot(time: f64, field: &SpectralField) -> Vec<u8> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * field.coeffs().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.n() as u32).to_le_bytes());
    buf.extend_from_slice(&g.length().to_le_bytes());
    buf.extend_from_slice(&(field.components() as u32).to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    for c in field.coeffs() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    buf
}

pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<(f64, SpectralField)> {
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("missing CNS1 header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let n = u32_at(4) as usize;
    let length = f64_at(8);
    let components = u32_at(16) as usize;
    let time = f64_at(20);
    let grid = Grid3::new(n, length).map_err(|e| bad(&e.to_string()))?;
    let count = components * grid.points();
    if bytes.len() != HEADER_LEN + 16 * count {
        return Err(bad("payload length does not match header"));
    }
    let coeffs = (0..count)
        .map(|i| {
            let o = HEADER_LEN + 16 * i;
            Complex64::new(f64_at(o), f64_at(o + 8))
        })
        .collect();
    let field = SpectralField::from_coeffs(grid, components, coeffs).map_err(|e| bad(&e.to_string()))?;
    Ok((time, field))
}

pub fn write_snapshot(path: &Path, time: f64, field: &SpectralField) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(&encode_snapshot(time, field)).map_err(io)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(f64, SpectralField)> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_snapshot(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let g = Grid3::new(8, 1.25).unwrap();
        let mut f = SpectralField::zeros(g, 3);
        for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
            *c = Complex64::new((i as f64).sin() / 3.0, (i as f64 * 0.7).cos());
        }
        let bytes = encode_snapshot(0.125, &f);
        let (t, back) = decode_snapshot(&bytes, Path::new("mem")).unwrap();
        assert_eq!(t, 0.125);
        assert_eq!(back, f);
        assert!(decode_snapshot(&bytes[..bytes.len() - 1], Path::new("mem")).is_err());
    }
}
