//! `FBMF` binary field container.
//!
//! Layout (all little-endian): magic `FBMF`, `u32` version (1), `u8` dim,
//! `dim` x `u64` points per axis, `dim` x `f64` box length per axis, `u8`
//! domain tag (0 physical, 1 frequency), then `M^dim` complex values as
//! `(re, im)` `f64` pairs in row-major order.

use std::io::{Read, Write};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, GridSpec};

pub const MAGIC: &[u8; 4] = b"FBMF";
pub const VERSION: u32 = 1;

pub fn encode(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(10 + 16 * g.dim() + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(g.dim() as u8);
    for _ in 0..g.dim() {
        out.extend_from_slice(&(g.points() as u64).to_le_bytes());
    }
    for _ in 0..g.dim() {
        out.extend_from_slice(&g.box_length().to_le_bytes());
    }
    out.push(field.domain().tag());
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated input at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        let mut a = [0u8; K];
        a.copy_from_slice(self.take(K)?);
        Ok(a)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Field> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, expected FBMF".into()));
    }
    let version = u32::from_le_bytes(c.array()?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = c.array::<1>()?[0] as usize;
    if dim == 0 || dim > crate::grid::MAX_DIM {
        return Err(Error::Format(format!("unsupported dimension {dim}")));
    }
    let points: Vec<u64> = (0..dim)
        .map(|_| c.array().map(u64::from_le_bytes))
        .collect::<Result<_>>()?;
    let lengths: Vec<f64> = (0..dim)
        .map(|_| c.array().map(f64::from_le_bytes))
        .collect::<Result<_>>()?;
    if points.iter().any(|&m| m != points[0])
        || lengths.iter().any(|&l| l.to_bits() != lengths[0].to_bits())
    {
        return Err(Error::Format("anisotropic grids are not supported".into()));
    }
    let domain = Domain::from_tag(c.array::<1>()?[0])?;
    let m = usize::try_from(points[0]).map_err(|_| Error::Format("axis too large".into()))?;
    let grid = GridSpec::new(dim, lengths[0], m).map_err(|e| Error::Format(e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f64::from_le_bytes(c.array()?);
        let im = f64::from_le_bytes(c.array()?);
        values.push(Complex64::new(re, im));
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after field data",
            bytes.len() - c.pos
        )));
    }
    Field::new(grid, values, domain)
}

pub fn write_to(field: &Field, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(&encode(field))
}

pub fn read_from(mut r: impl Read) -> Result<Field> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::Format(e.to_string()))?;
    decode(&buf)
}
