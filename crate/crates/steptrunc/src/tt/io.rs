//! TT checkpoint file format.
//!
//! Layout (all integers little-endian u64 unless noted):
//! magic `"TTCK1"`, byte-order marker u32 = 0x01020304, scalar tag u8
//! (0 = real64, 1 = complex128), `d`, mode sizes (`d` entries), rank vector
//! (`d + 1` entries), then the cores in order as little-endian IEEE 754
//! doubles in the in-memory core layout (complex entries as re, im pairs).

use super::{TtCore, TtTensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 5] = b"TTCK1";
const BYTE_ORDER_MARK: u32 = 0x0102_0304;

pub fn save<T: Scalar>(path: &Path, f: &TtTensor<T>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&BYTE_ORDER_MARK.to_le_bytes())?;
    w.write_all(&[u8::from(T::IS_COMPLEX)])?;
    w.write_all(&(f.order() as u64).to_le_bytes())?;
    for n in f.mode_sizes() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for r in f.rank_vector() {
        w.write_all(&(r as u64).to_le_bytes())?;
    }
    for core in f.cores() {
        for x in &core.data {
            w.write_all(&x.real().to_le_bytes())?;
            if T::IS_COMPLEX {
                w.write_all(&x.imaginary().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn load<T: Scalar>(path: &Path) -> Result<TtTensor<T>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 5];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {:?}", magic)));
    }
    let bom = read_u32(&mut r)?;
    if bom != BYTE_ORDER_MARK {
        return Err(Error::Checkpoint(format!(
            "byte-order marker 0x{bom:08x} does not match 0x{BYTE_ORDER_MARK:08x}; \
             file written on an incompatible-endian machine"
        )));
    }
    let mut tag = [0u8; 1];
    read_exact(&mut r, &mut tag)?;
    if (tag[0] != 0) != T::IS_COMPLEX {
        return Err(Error::Checkpoint(format!(
            "scalar tag {} does not match requested field",
            tag[0]
        )));
    }
    let d = read_u64(&mut r)? as usize;
    if d == 0 || d > 64 {
        return Err(Error::Checkpoint(format!("implausible order d = {d}")));
    }
    let sizes: Vec<usize> = (0..d)
        .map(|_| read_u64(&mut r).map(|v| v as usize))
        .collect::<Result<_>>()?;
    let ranks: Vec<usize> = (0..=d)
        .map(|_| read_u64(&mut r).map(|v| v as usize))
        .collect::<Result<_>>()?;
    if ranks[0] != 1 || ranks[d] != 1 {
        return Err(Error::Checkpoint("boundary ranks must be 1".into()));
    }
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let len = ranks[k] * sizes[k] * ranks[k + 1];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let re = read_f64(&mut r)?;
            let x = if T::IS_COMPLEX {
                let im = read_f64(&mut r)?;
                T::from_real(re) + T::i() * T::from_real(im)
            } else {
                T::from_real(re)
            };
            data.push(x);
        }
        cores.push(TtCore {
            r_left: ranks[k],
            n: sizes[k],
            r_right: ranks[k + 1],
            data,
        });
    }
    // Trailing garbage means the header lied about the shape.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after core data".into()));
    }
    TtTensor::from_cores(cores)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Checkpoint("file truncated".into()))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
