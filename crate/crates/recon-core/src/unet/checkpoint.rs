//! Parameter checkpoint file: a JSON header (config, input shape, tensor
//! manifest) followed by one RCT1 tensor blob per parameter in manifest
//! order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ParamSet, ParamTensor, TensorSpec, UNetConfig};
use crate::{Error, Result};

const MAGIC: [u8; 8] = *b"RCKPT1\0\0";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    version: u32,
    config: UNetConfig,
    input_shape: (usize, usize, usize),
    tensors: Vec<TensorSpec>,
}

pub fn save_checkpoint(
    path: &Path,
    config: &UNetConfig,
    input_shape: (usize, usize, usize),
    params: &ParamSet,
) -> Result<()> {
    let header = Header {
        version: 1,
        config: *config,
        input_shape,
        tensors: params
            .tensors
            .iter()
            .map(|t| TensorSpec { name: t.name.clone(), dims: t.dims.clone() })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for t in &params.tensors {
        crate::io::write_real(&mut w, &t.dims, &t.data)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(UNetConfig, (usize, usize, usize), ParamSet)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut header_bytes = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut header_bytes)?;
    let header: Header =
        serde_json::from_slice(&header_bytes).map_err(|e| Error::Format(e.to_string()))?;
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for spec in &header.tensors {
        match crate::io::read_tensor(&mut r)? {
            crate::io::Tensor::Real { dims, data } => {
                if dims != spec.dims {
                    return Err(Error::Format(format!(
                        "checkpoint tensor {} has dims {:?}, manifest says {:?}",
                        spec.name, dims, spec.dims
                    )));
                }
                tensors.push(ParamTensor { name: spec.name.clone(), dims, data });
            }
            _ => return Err(Error::Format("checkpoint tensors must be real".into())),
        }
    }
    Ok((header.config, header.input_shape, ParamSet { tensors }))
}
