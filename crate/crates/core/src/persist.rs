//! Versioned model container shared by the network and SVM ensemble files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes
//! version      u32
//! header_len   u32, then header_len bytes of UTF-8 JSON
//! tensor_count u32
//! per tensor:  ndim u32, ndim x u64 dims, product(dims) x f64
//! ```

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Dense row-major tensor of 64-bit floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Tensor { dims, data }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            dims: vec![data.len()],
            data,
        }
    }
}

pub fn encode<H: Serialize>(magic: &[u8; 8], version: u32, header: &H, tensors: &[Tensor]) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(header).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let payload: usize = tensors.iter().map(|t| 4 + 8 * t.dims.len() + 8 * t.data.len()).sum();
    let mut out = Vec::with_capacity(20 + header.len() + payload);
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&u32::try_from(header.len()).expect("header fits u32").to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for d in &t.dims {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| {
            Error::ModelFormat(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode<H: DeserializeOwned>(magic: &[u8; 8], version: u32, bytes: &[u8]) -> Result<(H, Vec<Tensor>)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != magic {
        return Err(Error::ModelFormat(format!(
            "bad magic, expected {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let found = c.u32()?;
    if found != version {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {found} (expected {version})"
        )));
    }
    let header_len = c.u32()? as usize;
    let header: H = serde_json::from_slice(c.take(header_len)?).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let count = c.u32()? as usize;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let ndim = c.u32()? as usize;
        let mut dims = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            dims.push(usize::try_from(c.u64()?).map_err(|e| Error::ModelFormat(e.to_string()))?);
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(*d))
            .ok_or_else(|| Error::ModelFormat("tensor size overflows".into()))?;
        let raw = c.take(len.checked_mul(8).ok_or_else(|| Error::ModelFormat("tensor size overflows".into()))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Tensor { dims, data });
    }
    if c.pos != bytes.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok((header, tensors))
}

pub fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    fs::read(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MAGIC: &[u8; 8] = b"TESTMDL\0";

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            data in prop::collection::vec(any::<f64>(), 0..40),
            note in "[a-z]{0,12}",
        ) {
            let t = vec![Tensor::vector(data.clone()), Tensor::new(vec![1, data.len()], data)];
            let bytes = encode(MAGIC, 3, &note, &t).unwrap();
            let (h, back): (String, Vec<Tensor>) = decode(MAGIC, 3, &bytes).unwrap();
            prop_assert_eq!(h, note);
            prop_assert_eq!(back.len(), 2);
            for (a, b) in t.iter().zip(&back) {
                prop_assert_eq!(&a.dims, &b.dims);
                let abits: Vec<u64> = a.data.iter().map(|v| v.to_bits()).collect();
                let bbits: Vec<u64> = b.data.iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(abits, bbits);
            }
        }
    }

    #[test]
    fn rejects_wrong_magic_version_and_truncation() {
        let bytes = encode(MAGIC, 1, &"h", &[Tensor::vector(vec![1.0, 2.0])]).unwrap();
        assert!(decode::<String>(b"OTHERMDL", 1, &bytes).is_err());
        assert!(decode::<String>(MAGIC, 2, &bytes).is_err());
        assert!(decode::<String>(MAGIC, 1, &bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode::<String>(MAGIC, 1, &extra).is_err());
    }
}
