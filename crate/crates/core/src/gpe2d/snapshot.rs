//! Binary snapshot files.
//!
//! A snapshot is one line of JSON followed by raw little-endian `f64` data in
//! row-major order: `(Re, Im)` pairs for a field, one value per point for a
//! density image.
//!
//! ```text
//! {"kind":"field","nx":256,"ny":256,"extent_x":24.0,...}\n<payload>
//! ```

use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ComplexField2D, Gpe2dError, Grid2D};
use crate::measurement::DensityImage;

/// Upper bound on the header line; anything longer is rejected unparsed.
const MAX_HEADER_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotKind {
    Field,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub kind: SnapshotKind,
    pub nx: usize,
    pub ny: usize,
    pub extent_x: f64,
    pub extent_y: f64,
    pub time: f64,
    pub g2d: f64,
    #[serde(rename = "R")]
    pub ring_radius: f64,
    pub omega_ext: f64,
}

impl SnapshotHeader {
    pub fn grid(&self) -> Result<Grid2D, Gpe2dError> {
        Grid2D::new(self.nx, self.ny, self.extent_x, self.extent_y)
    }

    fn values_per_point(&self) -> usize {
        match self.kind {
            SnapshotKind::Field => 2,
            SnapshotKind::Density => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Field { header: SnapshotHeader, field: ComplexField2D },
    Density { header: SnapshotHeader, image: DensityImage },
}

impl Snapshot {
    pub fn header(&self) -> &SnapshotHeader {
        match self {
            Snapshot::Field { header, .. } | Snapshot::Density { header, .. } => header,
        }
    }

    /// The density image; computed from |Ψ|² for field snapshots.
    pub fn density(&self) -> DensityImage {
        match self {
            Snapshot::Field { field, .. } => field.density(),
            Snapshot::Density { image, .. } => image.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("missing header line")]
    MissingHeader,
    #[error("header line exceeds {MAX_HEADER_LEN} bytes")]
    HeaderTooLong,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("bad grid in header: {0}")]
    Grid(#[from] Gpe2dError),
    #[error("payload has {actual} bytes, header implies {expected}")]
    PayloadLength { expected: usize, actual: usize },
    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },
    #[error("negative density {value} at point {index}")]
    NegativeDensity { index: usize, value: f64 },
}

/// Trap parameters recorded alongside the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub g2d: f64,
    pub ring_radius: f64,
    pub omega_ext: f64,
}

fn header_for(kind: SnapshotKind, grid: &Grid2D, time: f64, meta: &SnapshotMeta) -> SnapshotHeader {
    SnapshotHeader {
        kind,
        nx: grid.nx,
        ny: grid.ny,
        extent_x: grid.extent_x,
        extent_y: grid.extent_y,
        time,
        g2d: meta.g2d,
        ring_radius: meta.ring_radius,
        omega_ext: meta.omega_ext,
    }
}

fn write_header(w: &mut impl Write, header: &SnapshotHeader) -> io::Result<()> {
    let line = serde_json::to_string(header).map_err(io::Error::other)?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")
}

pub fn write_field(w: &mut impl Write, psi: &ComplexField2D, meta: &SnapshotMeta) -> io::Result<()> {
    write_header(w, &header_for(SnapshotKind::Field, &psi.grid, psi.time, meta))?;
    let mut buf = Vec::with_capacity(psi.values.len() * 16);
    for c in &psi.values {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn write_density(w: &mut impl Write, img: &DensityImage, meta: &SnapshotMeta) -> io::Result<()> {
    write_header(w, &header_for(SnapshotKind::Density, &img.grid, img.time, meta))?;
    let mut buf = Vec::with_capacity(img.values.len() * 8);
    for v in &img.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Parses a snapshot from memory. Every length is checked against the header
/// before anything is allocated.
pub fn read_snapshot(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    let window = &bytes[..bytes.len().min(MAX_HEADER_LEN + 1)];
    let newline = match window.iter().position(|&b| b == b'\n') {
        Some(p) => p,
        None if bytes.len() > MAX_HEADER_LEN => return Err(SnapshotError::HeaderTooLong),
        None => return Err(SnapshotError::MissingHeader),
    };
    let header: SnapshotHeader = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| SnapshotError::Header(e.to_string()))?;
    for (name, v) in [
        ("time", header.time),
        ("g2d", header.g2d),
        ("R", header.ring_radius),
        ("omega_ext", header.omega_ext),
    ] {
        if !v.is_finite() {
            return Err(SnapshotError::Header(format!("{name} is not finite")));
        }
    }
    let grid = header.grid()?;
    let payload = &bytes[newline + 1..];
    let expected = grid
        .nx
        .checked_mul(grid.ny)
        .and_then(|n| n.checked_mul(8 * header.values_per_point()))
        .ok_or(SnapshotError::PayloadLength {
            expected: usize::MAX,
            actual: payload.len(),
        })?;
    if payload.len() != expected {
        return Err(SnapshotError::PayloadLength {
            expected,
            actual: payload.len(),
        });
    }
    let mut doubles = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    match header.kind {
        SnapshotKind::Field => {
            let mut values = Vec::with_capacity(grid.len());
            for index in 0..grid.len() {
                let (re, im) = (doubles.next().unwrap(), doubles.next().unwrap());
                if !(re.is_finite() && im.is_finite()) {
                    return Err(SnapshotError::NonFinite { index });
                }
                values.push(Complex64::new(re, im));
            }
            Ok(Snapshot::Field {
                header,
                field: ComplexField2D { grid, values, time: header.time },
            })
        }
        SnapshotKind::Density => {
            let mut values = Vec::with_capacity(grid.len());
            for (index, value) in doubles.enumerate() {
                if !value.is_finite() {
                    return Err(SnapshotError::NonFinite { index });
                }
                if value < 0.0 {
                    return Err(SnapshotError::NegativeDensity { index, value });
                }
                values.push(value);
            }
            Ok(Snapshot::Density {
                header,
                image: DensityImage { grid, values, time: header.time },
            })
        }
    }
}

pub fn read_snapshot_file(path: impl AsRef<Path>) -> Result<Snapshot, SnapshotError> {
    read_snapshot(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const META: SnapshotMeta = SnapshotMeta { g2d: 1.0, ring_radius: 5.0, omega_ext: 0.01 };

    fn field() -> ComplexField2D {
        let grid = Grid2D::new(16, 18, 24.0, 20.0).unwrap();
        let mut f = ComplexField2D::from_fn(grid, |x, y| Complex64::new(x, -y * 0.5));
        f.time = 12.5;
        f
    }

    #[test]
    fn field_round_trip_is_exact() {
        let f = field();
        let mut buf = Vec::new();
        write_field(&mut buf, &f, &META).unwrap();
        let first = buf.iter().position(|&b| b == b'\n').unwrap();
        let line = std::str::from_utf8(&buf[..first]).unwrap();
        assert!(line.starts_with("{\"kind\":\"field\",\"nx\":16,\"ny\":18"));
        assert!(line.contains("\"R\":5.0"));
        match read_snapshot(&buf).unwrap() {
            Snapshot::Field { header, field } => {
                assert_eq!(field, f);
                assert_eq!(header.omega_ext, 0.01);
            }
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn density_round_trip_is_exact() {
        let img = field().density();
        let mut buf = Vec::new();
        write_density(&mut buf, &img, &META).unwrap();
        assert_eq!(buf.len() - buf.iter().position(|&b| b == b'\n').unwrap() - 1, 16 * 18 * 8);
        let snap = read_snapshot(&buf).unwrap();
        assert_eq!(snap.header().kind, SnapshotKind::Density);
        assert_eq!(snap.density(), img);
    }

    #[test]
    fn malformed_inputs_are_errors() {
        let mut buf = Vec::new();
        write_field(&mut buf, &field(), &META).unwrap();
        assert!(matches!(
            read_snapshot(&buf[..buf.len() - 1]),
            Err(SnapshotError::PayloadLength { .. })
        ));
        assert!(matches!(read_snapshot(b"{}"), Err(SnapshotError::MissingHeader)));
        assert!(matches!(read_snapshot(b"nope\n"), Err(SnapshotError::Header(_))));
        let huge = br#"{"kind":"density","nx":18446744073709551615,"ny":3,"extent_x":1.0,"extent_y":1.0,"time":0.0,"g2d":0.0,"R":0.0,"omega_ext":0.0}
"#;
        assert!(read_snapshot(huge).is_err());
        assert!(matches!(read_snapshot(&[b' '; 5000]), Err(SnapshotError::HeaderTooLong)));
    }

    #[test]
    fn negative_density_rejected() {
        let mut img = field().density();
        img.values[7] = -1.0;
        let mut buf = Vec::new();
        write_density(&mut buf, &img, &META).unwrap();
        assert!(matches!(
            read_snapshot(&buf),
            Err(SnapshotError::NegativeDensity { index: 7, .. })
        ));
    }
}
