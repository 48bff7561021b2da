//! The `RCT1` on-disk tensor format.
//!
//! Layout: 8-byte magic `RCTNSR1\0`, u8 dtype code (0 = real32,
//! 1 = complex64 stored as interleaved re/im f32 pairs), u8 ndim, one u32
//! little-endian size per dimension, then the raw little-endian payload with
//! the last index fastest. Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex32;

use crate::tensor::Cine;
use crate::{Error, Result};

pub const MAGIC: [u8; 8] = *b"RCTNSR1\0";

const DTYPE_REAL32: u8 = 0;
const DTYPE_COMPLEX64: u8 = 1;

/// A loaded tensor: dims plus real or complex payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Real { dims: Vec<usize>, data: Vec<f32> },
    Complex { dims: Vec<usize>, data: Vec<Complex32> },
}

impl Tensor {
    pub fn dims(&self) -> &[usize] {
        match self {
            Tensor::Real { dims, .. } | Tensor::Complex { dims, .. } => dims,
        }
    }
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() || dims.len() > 255 {
        return Err(Error::Format(format!("unsupported ndim {}", dims.len())));
    }
    let mut n: usize = 1;
    for &d in dims {
        if d == 0 || d > u32::MAX as usize {
            return Err(Error::Format(format!("dimension {} out of range", d)));
        }
        n = n
            .checked_mul(d)
            .ok_or_else(|| Error::Format("dimension product overflow".into()))?;
    }
    if n != len {
        return Err(Error::Shape(format!("payload length {} does not match dims {:?}", len, dims)));
    }
    Ok(())
}

fn write_header(w: &mut impl Write, dtype: u8, dims: &[usize]) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&[dtype, dims.len() as u8])?;
    for &d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<(u8, Vec<usize>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic bytes, not an RCT1 tensor".into()));
    }
    let mut meta = [0u8; 2];
    r.read_exact(&mut meta)?;
    let (dtype, ndim) = (meta[0], meta[1] as usize);
    if dtype > DTYPE_COMPLEX64 {
        return Err(Error::Format(format!("unknown dtype code {}", dtype)));
    }
    if ndim == 0 {
        return Err(Error::Format("zero-dimensional tensor".into()));
    }
    let mut dims = Vec::with_capacity(ndim);
    let mut buf = [0u8; 4];
    for _ in 0..ndim {
        r.read_exact(&mut buf)?;
        dims.push(u32::from_le_bytes(buf) as usize);
    }
    Ok((dtype, dims))
}

pub fn write_real(w: &mut impl Write, dims: &[usize], data: &[f32]) -> Result<()> {
    check_dims(dims, data.len())?;
    write_header(w, DTYPE_REAL32, dims)?;
    let mut buf = Vec::with_capacity(data.len() * 4);
    for &v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_complex(w: &mut impl Write, dims: &[usize], data: &[Complex32]) -> Result<()> {
    check_dims(dims, data.len())?;
    write_header(w, DTYPE_COMPLEX64, dims)?;
    let mut buf = Vec::with_capacity(data.len() * 8);
    for c in data {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor(r: &mut impl Read) -> Result<Tensor> {
    let (dtype, dims) = read_header(r)?;
    let n: usize = dims.iter().product();
    match dtype {
        DTYPE_REAL32 => {
            let mut buf = vec![0u8; n * 4];
            r.read_exact(&mut buf)?;
            let data = buf
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            Ok(Tensor::Real { dims, data })
        }
        DTYPE_COMPLEX64 => {
            let mut buf = vec![0u8; n * 8];
            r.read_exact(&mut buf)?;
            let data = buf
                .chunks_exact(8)
                .map(|b| {
                    Complex32::new(
                        f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
                        f32::from_le_bytes([b[4], b[5], b[6], b[7]]),
                    )
                })
                .collect();
            Ok(Tensor::Complex { dims, data })
        }
        _ => unreachable!(),
    }
}

pub fn save_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match tensor {
        Tensor::Real { dims, data } => write_real(&mut w, dims, data)?,
        Tensor::Complex { dims, data } => write_complex(&mut w, dims, data)?,
    }
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let mut r = BufReader::new(File::open(path)?);
    read_tensor(&mut r)
}

/// Save a cine as a 3D real tensor. The frame interval travels in sidecar
/// metadata, not the tensor file.
pub fn save_cine(path: impl AsRef<Path>, cine: &Cine) -> Result<()> {
    let (t, h, w) = cine.shape();
    let mut out = BufWriter::new(File::create(path)?);
    write_real(&mut out, &[t, h, w], cine.data())?;
    out.flush()?;
    Ok(())
}

pub fn load_cine(path: impl AsRef<Path>, frame_dt_ms: f64) -> Result<Cine> {
    match load_tensor(path)? {
        Tensor::Real { dims, data } if dims.len() == 3 => {
            Cine::from_vec(dims[0], dims[1], dims[2], frame_dt_ms, data)
        }
        Tensor::Real { dims, .. } => {
            Err(Error::Format(format!("expected 3D real tensor, got {}D", dims.len())))
        }
        Tensor::Complex { .. } => Err(Error::Format("expected real tensor, got complex".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip_zero_cine() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.rct");
        let cine = Cine::zeros(2, 3, 4, 1.0);
        save_cine(&path, &cine).unwrap();
        let back = load_cine(&path, 1.0).unwrap();
        assert_eq!(back.data(), cine.data());
        assert_eq!(back.shape(), (2, 3, 4));
    }

    #[test]
    fn round_trip_large_cine() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.rct");
        let data: Vec<f32> = (0..20 * 128 * 128).map(|i| (i as f32).sin()).collect();
        let cine = Cine::from_vec(20, 128, 128, 36.4, data).unwrap();
        save_cine(&path, &cine).unwrap();
        let back = load_cine(&path, 36.4).unwrap();
        assert_eq!(back.data(), cine.data());
    }

    #[test]
    fn wrong_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.rct");
        std::fs::write(&path, b"NOTMAGIC\x00\x01\x01\x00\x00\x00").unwrap();
        match load_tensor(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("magic")),
            other => panic!("expected format error, got {:?}", other),
        }
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.rct");
        let mut bytes = Vec::new();
        write_real(&mut bytes, &[4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_tensor(&path).is_err());
    }

    proptest! {
        #[test]
        fn real_round_trip_bit_exact(dims in prop::collection::vec(1usize..6, 1..4),
                                     seed in any::<u64>()) {
            let n: usize = dims.iter().product();
            let mut state = seed | 1;
            let data: Vec<f32> = (0..n).map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f32::from_bits(((state >> 32) as u32) & 0x7f7f_ffff)
            }).collect();
            let mut bytes = Vec::new();
            write_real(&mut bytes, &dims, &data).unwrap();
            let back = read_tensor(&mut bytes.as_slice()).unwrap();
            match back {
                Tensor::Real { dims: d2, data: data2 } => {
                    prop_assert_eq!(d2, dims);
                    prop_assert_eq!(
                        data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        data2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
                    );
                }
                _ => prop_assert!(false, "dtype changed"),
            }
        }

        #[test]
        fn complex_round_trip_bit_exact(n in 1usize..64, seed in any::<u64>()) {
            let mut state = seed | 1;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as f32) / (1u64 << 31) as f32
            };
            let data: Vec<Complex32> = (0..n).map(|_| Complex32::new(next(), next())).collect();
            let mut bytes = Vec::new();
            write_complex(&mut bytes, &[n], &data).unwrap();
            match read_tensor(&mut bytes.as_slice()).unwrap() {
                Tensor::Complex { data: data2, .. } => {
                    prop_assert_eq!(data, data2);
                }
                _ => prop_assert!(false, "dtype changed"),
            }
        }
    }
}
