//! Binary containers for occupancy grids (`VXG1`) and scalar fields (`VXF1`).
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic[4] | u32 d | u32 n_1 .. n_d | f64 h | f64 origin_1 .. origin_d | payload
//! ```
//!
//! The `VXG1` payload is the occupancy packed eight voxels per byte in
//! linear order (axis 1 fastest), least significant bit first, with the last
//! byte zero-padded. The `VXF1` payload is one `f64` radius followed by one
//! `f64` per voxel in the same order.

use std::fs;
use std::path::Path;

use super::{GridSpec, VoxelSet};
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"VXG1";
pub const FIELD_MAGIC: &[u8; 4] = b"VXF1";

fn put_header(out: &mut Vec<u8>, magic: &[u8; 4], grid: &GridSpec) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &n in grid.extent() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&grid.spacing().to_le_bytes());
    for &o in grid.origin() {
        out.extend_from_slice(&o.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    kind: &'static str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format {
                kind: self.kind,
                reason: format!("truncated at byte {}", self.pos),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn get_header<'a>(buf: &'a [u8], magic: &[u8; 4], kind: &'static str) -> Result<(GridSpec, Reader<'a>)> {
    let mut r = Reader { buf, pos: 0, kind };
    if r.take(4)? != magic {
        return Err(Error::Format {
            kind,
            reason: format!("bad magic, expected {:?}", std::str::from_utf8(magic).unwrap()),
        });
    }
    let d = r.u32()? as usize;
    if d != 2 && d != 3 {
        return Err(Error::Format {
            kind,
            reason: format!("unsupported dimension {d}"),
        });
    }
    let mut extent = Vec::with_capacity(d);
    for _ in 0..d {
        extent.push(r.u32()? as usize);
    }
    let h = r.f64()?;
    let mut origin = Vec::with_capacity(d);
    for _ in 0..d {
        origin.push(r.f64()?);
    }
    let grid = GridSpec::new(d, &extent, h, &origin)?;
    Ok((grid, r))
}

pub fn encode_grid(vs: &VoxelSet) -> Vec<u8> {
    let mut out = Vec::new();
    put_header(&mut out, GRID_MAGIC, vs.grid());
    let mut packed = vec![0u8; vs.grid().len().div_ceil(8)];
    for (lin, &b) in vs.bits().iter().enumerate() {
        if b {
            packed[lin / 8] |= 1 << (lin % 8);
        }
    }
    out.extend_from_slice(&packed);
    out
}

pub fn decode_grid(buf: &[u8]) -> Result<VoxelSet> {
    let (grid, mut r) = get_header(buf, GRID_MAGIC, "grid")?;
    let packed = r.take(grid.len().div_ceil(8))?;
    if r.pos != buf.len() {
        return Err(Error::Format {
            kind: "grid",
            reason: format!("{} trailing bytes", buf.len() - r.pos),
        });
    }
    let bits = (0..grid.len()).map(|lin| packed[lin / 8] >> (lin % 8) & 1 == 1).collect();
    VoxelSet::from_bits(grid, bits)
}

pub fn write_grid(path: &Path, vs: &VoxelSet) -> Result<()> {
    fs::write(path, encode_grid(vs))?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<VoxelSet> {
    decode_grid(&fs::read(path)?)
}

pub fn encode_field(grid: &GridSpec, radius: f64, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * values.len());
    put_header(&mut out, FIELD_MAGIC, grid);
    out.extend_from_slice(&radius.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Returns the grid, the radius and the per-voxel values.
pub fn decode_field(buf: &[u8]) -> Result<(GridSpec, f64, Vec<f64>)> {
    let (grid, mut r) = get_header(buf, FIELD_MAGIC, "field")?;
    let radius = r.f64()?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(r.f64()?);
    }
    if r.pos != buf.len() {
        return Err(Error::Format {
            kind: "field",
            reason: format!("{} trailing bytes", buf.len() - r.pos),
        });
    }
    Ok((grid, radius, values))
}

/// Serde adapter storing a [`VoxelSet`] as a base64 `VXG1` blob.
pub mod mask_base64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::{decode_grid, encode_grid};
    use crate::grid::VoxelSet;

    pub fn serialize<S: Serializer>(vs: &VoxelSet, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(encode_grid(vs)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<VoxelSet, D::Error> {
        let text = String::deserialize(d)?;
        let bytes = STANDARD.decode(text).map_err(de::Error::custom)?;
        decode_grid(&bytes).map_err(de::Error::custom)
    }
}
