//! Flat binary checkpoints.
//!
//! ```text
//! b"TLNN"  u32 version (1)  u32 tensor count
//! per tensor: u32 rank, then rank × u32 dims
//! per tensor, in the same order: its values as f32
//! ```
//! All integers and floats are little-endian; tensors follow declaration
//! order (`conv1.weight`, `conv1.bias`, ..., `fc2.bias`).

use std::path::Path;

use crate::model::ClassifierModel;
use crate::tensor::Tensor;
use crate::NnError;

const MAGIC: &[u8; 4] = b"TLNN";
const VERSION: u32 = 1;

pub fn encode(model: &ClassifierModel<f32>) -> Vec<u8> {
    let params = model.parameters();
    let mut out = Vec::with_capacity(64 + 4 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in &params {
        out.extend_from_slice(&(p.shape().len() as u32).to_le_bytes());
        for &d in p.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for p in &params {
        for v in p.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], NnError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(NnError::Checkpoint(format!("truncated at byte {}, needed {n} more", self.pos)));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses a checkpoint; shapes must match the classifier exactly.
pub fn decode(bytes: &[u8]) -> Result<ClassifierModel<f32>, NnError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut model = ClassifierModel::<f32>::new(0);
    let count = r.u32()? as usize;
    if count != model.parameters().len() {
        return Err(NnError::Checkpoint(format!("expected 8 tensors, found {count}")));
    }
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = r.u32()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        shapes.push(dims);
    }
    for ((p, shape), name) in model.parameters_mut().into_iter().zip(shapes).zip(crate::model::PARAM_NAMES) {
        if p.shape() != shape.as_slice() {
            return Err(NnError::Checkpoint(format!("{name}: shape {shape:?}, expected {:?}", p.shape())));
        }
        let raw = r.take(4 * p.len())?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        *p = Tensor::new(&shape, data)?;
    }
    if r.pos != bytes.len() {
        return Err(NnError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(model)
}

pub fn save(model: &ClassifierModel<f32>, path: &Path) -> Result<(), NnError> {
    std::fs::write(path, encode(model)).map_err(|e| NnError::Io(path.display().to_string(), e))
}

pub fn load(path: &Path) -> Result<ClassifierModel<f32>, NnError> {
    let bytes = std::fs::read(path).map_err(|e| NnError::Io(path.display().to_string(), e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = ClassifierModel::<f32>::new(11);
        let bytes = encode(&m);
        assert_eq!(&bytes[..4], b"TLNN");
        // header: magic, version, count, 2 rank-4 + 2 rank-2 + 4 rank-1 shapes
        let header = 12 + 2 * 20 + 2 * 12 + 4 * 8;
        assert_eq!(bytes.len(), header + 4 * m.parameter_count());
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 32);
        assert_eq!(decode(&bytes).unwrap(), m);
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&ClassifierModel::new(0));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[16] = 31;
        assert!(matches!(decode(&bad), Err(NnError::Checkpoint(msg)) if msg.contains("conv1.weight")));
        let mut long = bytes;
        long.push(0);
        assert!(decode(&long).is_err());
    }
}
