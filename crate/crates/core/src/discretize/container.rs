//! Binary pencil container for external cross-checking.
//!
//! Layout: `u64` little-endian header length, UTF-8 JSON header, then `K` and
//! `M` in row-major order as little-endian `f64` pairs `(re, im)`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DiscreteOperatorPencil;
use crate::error::{Error, Result};
use crate::linalg::CMat;

pub const FORMAT: &str = "conespectra-pencil";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerHeader {
    pub format: String,
    pub version: u32,
    pub rows: usize,
    pub cols: usize,
    pub matrices: Vec<String>,
    pub labels: Vec<String>,
    pub mode_k: i64,
    pub nu: f64,
}

pub fn write_pencil(out: &mut impl Write, pencil: &DiscreteOperatorPencil) -> Result<()> {
    let n = pencil.dim();
    let header = ContainerHeader {
        format: FORMAT.into(),
        version: VERSION,
        rows: n,
        cols: n,
        matrices: vec!["K".into(), "M".into()],
        labels: pencil.basis_labels.clone(),
        mode_k: pencil.mode_k,
        nu: pencil.nu,
    };
    let json = serde_json::to_vec(&header)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for m in [&pencil.k, &pencil.m] {
        let mut buf = Vec::with_capacity(16 * n * n);
        for i in 0..n {
            for j in 0..n {
                buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
            }
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_f64(input: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Returns the header and the matrices in header order.
pub fn read_pencil(input: &mut impl Read) -> Result<(ContainerHeader, Vec<CMat>)> {
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 32 {
        return Err(Error::Container(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    input.read_exact(&mut json)?;
    let header: ContainerHeader = serde_json::from_slice(&json)?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Container(format!("unsupported format {} v{}", header.format, header.version)));
    }
    if header.labels.len() != header.cols {
        return Err(Error::Container("label count does not match column count".into()));
    }
    let mut mats = Vec::new();
    for _ in &header.matrices {
        let mut m = CMat::zeros(header.rows, header.cols);
        for i in 0..header.rows {
            for j in 0..header.cols {
                let re = read_f64(input)?;
                let im = read_f64(input)?;
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        mats.push(m);
    }
    Ok((header, mats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble_mode_pencil, Grading, RadialGrid};
    use crate::model::{ConeModelOperator, ExtensionDomain};

    #[test]
    fn round_trip_is_bit_exact() {
        let model = ConeModelOperator::sector_dirichlet_laplacian(1.5 * std::f64::consts::PI);
        let grid = RadialGrid::new(1.0, 12, Grading::Uniform).unwrap();
        let d = ExtensionDomain::from_pair(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)).unwrap();
        let p = assemble_mode_pencil(&model, 1, &grid, &d).unwrap();
        let mut buf = Vec::new();
        write_pencil(&mut buf, &p).unwrap();
        let (h, mats) = read_pencil(&mut buf.as_slice()).unwrap();
        assert_eq!(h.rows, p.dim());
        assert_eq!(h.labels, p.basis_labels);
        assert_eq!(mats[0], p.k);
        assert_eq!(mats[1], p.m);
        // header length prefix + payload size
        let hl = u64::from_le_bytes(buf[..8].try_into().unwrap()) as usize;
        assert_eq!(buf.len(), 8 + hl + 2 * 16 * p.dim() * p.dim());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let model = ConeModelOperator::cone_laplacian();
        let grid = RadialGrid::new(1.0, 8, Grading::Uniform).unwrap();
        let p = assemble_mode_pencil(&model, 0, &grid, &ExtensionDomain::minimal(2)).unwrap();
        let mut buf = Vec::new();
        write_pencil(&mut buf, &p).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_pencil(&mut buf.as_slice()).is_err());
    }
}
