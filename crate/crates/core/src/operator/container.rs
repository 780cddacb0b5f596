//! Binary container for [`DiscreteOperator`] plus a JSON metadata record.
//!
//! Layout (little endian): magic `GTOP`, `u32` version, `u64` rows, `u64`
//! cols, source grid, target grid (each `u32` dim, `u32` modes, `f64`
//! half-width, `u8` offset), `f64` source index, `f64` target index, `f64`
//! order, then `rows·cols` pairs `(re, im)` in row-major order.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::FourierGrid;
use super::trace::DiscreteOperator;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GTOP";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMetadata {
    pub format_version: u32,
    pub rows: usize,
    pub cols: usize,
    pub source: FourierGrid,
    pub source_index: f64,
    pub target: FourierGrid,
    pub target_index: f64,
    pub order: f64,
    pub frobenius_norm: f64,
}

pub fn metadata(op: &DiscreteOperator) -> OperatorMetadata {
    OperatorMetadata {
        format_version: VERSION,
        rows: op.matrix.nrows(),
        cols: op.matrix.ncols(),
        source: op.source,
        source_index: op.source_index,
        target: op.target,
        target_index: op.target_index,
        order: op.order,
        frobenius_norm: op.matrix.norm(),
    }
}

fn put_grid(w: &mut impl Write, g: &FourierGrid) -> std::io::Result<()> {
    w.write_all(&(g.dim as u32).to_le_bytes())?;
    w.write_all(&(g.modes as u32).to_le_bytes())?;
    w.write_all(&g.half_width.to_le_bytes())?;
    w.write_all(&[g.offset as u8])
}

pub fn write_operator(w: &mut impl Write, op: &DiscreteOperator) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(op.matrix.nrows() as u64).to_le_bytes())?;
    w.write_all(&(op.matrix.ncols() as u64).to_le_bytes())?;
    put_grid(w, &op.source)?;
    put_grid(w, &op.target)?;
    for v in [op.source_index, op.target_index, op.order] {
        w.write_all(&v.to_le_bytes())?;
    }
    for i in 0..op.matrix.nrows() {
        for j in 0..op.matrix.ncols() {
            let c = op.matrix[(i, j)];
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn encode(op: &DiscreteOperator) -> Vec<u8> {
    let mut out = Vec::with_capacity(80 + 16 * op.matrix.len());
    write_operator(&mut out, op).expect("writing to memory");
    out
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Parse(format!("truncated operator container: {e}")))?;
    Ok(b)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(take(r)?))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(take(r)?))
}

fn get_grid(r: &mut impl Read) -> Result<FourierGrid> {
    let dim = get_u32(r)? as usize;
    let modes = get_u32(r)? as usize;
    let half_width = get_f64(r)?;
    let offset = take::<1>(r)?[0] != 0;
    FourierGrid::new(dim, modes, half_width, offset)
}

pub fn read_operator(r: &mut impl Read) -> Result<DiscreteOperator> {
    if &take::<4>(r)? != MAGIC {
        return Err(Error::Parse("not an operator container".into()));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported container version {version}")));
    }
    let rows = get_u64(r)? as usize;
    let cols = get_u64(r)? as usize;
    let source = get_grid(r)?;
    let target = get_grid(r)?;
    let source_index = get_f64(r)?;
    let target_index = get_f64(r)?;
    let order = get_f64(r)?;
    if rows != target.len() || cols != source.len() {
        return Err(Error::Parse("container dimensions disagree with its grids".into()));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re = get_f64(r)?;
        data.push(Complex64::new(re, get_f64(r)?));
    }
    let matrix = DMatrix::from_row_slice(rows, cols, &data);
    Ok(DiscreteOperator { matrix, source, source_index, target, target_index, order })
}

pub fn decode(bytes: &[u8]) -> Result<DiscreteOperator> {
    read_operator(&mut &bytes[..])
}
