//! Binary checkpoint of the ansatz: magic `NSVQECK1`, a `u32` layer count, then
//! per layer four `u16` indices and an `f64` angle, all little-endian.

use std::io::{Read, Write};

use super::pool::PoolOp;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"NSVQECK1";

pub fn write_checkpoint<W: Write>(mut w: W, ops: &[PoolOp], thetas: &[f64]) -> Result<()> {
    if ops.len() != thetas.len() {
        return Err(Error::Validation("operator and angle counts differ".into()));
    }
    w.write_all(MAGIC)?;
    w.write_all(&(ops.len() as u32).to_le_bytes())?;
    for (op, t) in ops.iter().zip(thetas) {
        for i in op.indices() {
            let v = u16::try_from(i).map_err(|_| Error::Validation(format!("index {i} does not fit u16")))?;
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&t.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(Vec<PoolOp>, Vec<f64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(Error::Validation("not a checkpoint file".into()));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = &bytes[12..];
    if body.len() != count * 16 {
        return Err(Error::Validation(format!("checkpoint holds {} bytes for {count} layers", body.len())));
    }
    let mut ops = Vec::with_capacity(count);
    let mut thetas = Vec::with_capacity(count);
    for rec in body.chunks_exact(16) {
        let idx: Vec<usize> = (0..4).map(|k| u16::from_le_bytes([rec[2 * k], rec[2 * k + 1]]) as usize).collect();
        ops.push(PoolOp::new(idx[0], idx[1], idx[2], idx[3]).map_err(|e| Error::Validation(e.to_string()))?);
        let t = f64::from_le_bytes(rec[8..16].try_into().expect("8 bytes"));
        if !t.is_finite() {
            return Err(Error::Validation("non-finite angle in checkpoint".into()));
        }
        thetas.push(t);
    }
    Ok((ops, thetas))
}
