//! Binary snapshots: the magic `SMAPSNAP`, then little-endian `u32` version,
//! `u32` dimension, `u32` N, `f64` period, `f64` s, `f64` t, a `u8`
//! representation tag (0 physical, 1 spectral), seven zero bytes, and the
//! samples as `(re, im)` `f64` pairs.

use std::io::{Read, Write};

use num_complex::Complex;

use crate::scalar::Real;
use crate::spectral::{ComplexField, Grid, Representation};

use super::SolverError;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"SMAPSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T: Real> {
    pub field: ComplexField<T>,
    pub s: T,
    pub t: T,
}

fn io(e: std::io::Error) -> SolverError {
    SolverError::Snapshot(e.to_string())
}

pub fn write_snapshot<T: Real>(mut w: impl Write, snap: &Snapshot<T>) -> Result<(), SolverError> {
    let g = snap.field.grid();
    let mut buf = Vec::with_capacity(64 + 16 * g.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.n() as u32).to_le_bytes());
    for x in [g.period(), snap.s, snap.t] {
        buf.extend_from_slice(&x.to_f64_lossy().to_le_bytes());
    }
    buf.push(match snap.field.representation() {
        Representation::Physical => 0,
        Representation::Spectral => 1,
    });
    buf.extend_from_slice(&[0u8; 7]);
    for z in snap.field.values() {
        buf.extend_from_slice(&z.re.to_f64_lossy().to_le_bytes());
        buf.extend_from_slice(&z.im.to_f64_lossy().to_le_bytes());
    }
    w.write_all(&buf).map_err(io)
}

pub fn read_snapshot<T: Real>(mut r: impl Read) -> Result<Snapshot<T>, SolverError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    let bad = |m: &str| SolverError::Snapshot(m.to_string());
    if bytes.len() < 52 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(bad("missing magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != SNAPSHOT_VERSION {
        return Err(SolverError::Snapshot(format!("unsupported version {version}")));
    }
    let (dim, n) = (u32_at(12) as usize, u32_at(16) as usize);
    let (period, s, t) = (f64_at(20), f64_at(28), f64_at(36));
    let repr = match bytes[44] {
        0 => Representation::Physical,
        1 => Representation::Spectral,
        other => return Err(SolverError::Snapshot(format!("unknown representation tag {other}"))),
    };
    let grid = Grid::with_period(dim, n, T::from_f64(period).ok_or_else(|| bad("period"))?)?;
    let body = &bytes[52..];
    if body.len() != 16 * grid.len() {
        return Err(SolverError::Snapshot(format!(
            "expected {} samples, found {} bytes",
            grid.len(),
            body.len()
        )));
    }
    let lift = |x: f64| T::from_f64(x).unwrap_or_else(T::nan);
    let values = body
        .chunks_exact(16)
        .map(|ch| {
            Complex::new(
                lift(f64::from_le_bytes(ch[..8].try_into().unwrap())),
                lift(f64::from_le_bytes(ch[8..].try_into().unwrap())),
            )
        })
        .collect();
    Ok(Snapshot {
        field: ComplexField::from_values(&grid, values, repr)?,
        s: lift(s),
        t: lift(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = Grid::<f64>::new(2, 8).unwrap();
        let f = crate::datagen::random_field(&g, 2.0, 0.3, 5).into_spectral();
        let snap = Snapshot {
            field: f,
            s: 0.75,
            t: 0.5,
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &snap).unwrap();
        assert_eq!(buf.len(), 52 + 16 * 64);
        assert_eq!(read_snapshot::<f64>(&buf[..]).unwrap(), snap);
        buf[0] = b'X';
        assert!(read_snapshot::<f64>(&buf[..]).is_err());
    }
}
