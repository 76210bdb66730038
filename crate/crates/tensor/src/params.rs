use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::{Scalar, Tensor, TensorError};

const MAGIC: &[u8; 4] = b"TFNN";
const VERSION: u32 = 1;

/// Named parameter container with deterministic (sorted) iteration order.
///
/// Serialized as flat binary: magic "TFNN", version u32, then per tensor
/// {name_len u16, name utf-8, rank u8, dims u32 x rank, f32 data},
/// little-endian throughout.
#[derive(Default)]
pub struct ParamSet<T: Scalar> {
    entries: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Registers a parameter; names must be unique.
    pub fn register(&mut self, name: &str, tensor: Tensor<T>) -> Tensor<T> {
        assert!(
            self.entries.insert(name.to_string(), tensor.clone()).is_none(),
            "duplicate parameter name {name}"
        );
        tensor
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.entries.get(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All tensors in name order.
    pub fn tensors(&self) -> Vec<Tensor<T>> {
        self.entries.values().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        self.entries.iter()
    }

    /// Total scalar parameter count.
    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|t| t.len()).sum()
    }

    pub fn zero_grads(&self) {
        for t in self.entries.values() {
            t.zero_grad();
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), TensorError> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        for (name, tensor) in &self.entries {
            let name_bytes = name.as_bytes();
            assert!(name_bytes.len() <= u16::MAX as usize);
            buf.extend_from_slice(&(name_bytes.len() as u16).to_le_bytes());
            buf.extend_from_slice(name_bytes);
            let shape = tensor.shape();
            assert!(shape.len() <= u8::MAX as usize);
            buf.push(shape.len() as u8);
            for &d in shape {
                buf.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in tensor.data().iter() {
                buf.extend_from_slice(&v.as_f32().to_le_bytes());
            }
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Loads values into the already-registered parameters; shapes must
    /// match and every registered name must be present.
    pub fn load(&self, path: &Path) -> Result<(), TensorError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let stored = parse_checkpoint(&bytes)?;
        for (name, tensor) in &self.entries {
            let (shape, data) = stored
                .get(name)
                .ok_or_else(|| TensorError::Checkpoint(format!("missing tensor {name}")))?;
            if shape != tensor.shape() {
                return Err(TensorError::Checkpoint(format!(
                    "shape mismatch for {name}: file {shape:?} vs model {:?}",
                    tensor.shape()
                )));
            }
            let values: Vec<T> = data.iter().map(|&v| T::of_f32(v)).collect();
            tensor.set_data(&values);
        }
        Ok(())
    }
}

type StoredTensors = BTreeMap<String, (Vec<usize>, Vec<f32>)>;

fn parse_checkpoint(bytes: &[u8]) -> Result<StoredTensors, TensorError> {
    let bad = |msg: &str| TensorError::Checkpoint(msg.to_string());
    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(TensorError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut out = BTreeMap::new();
    let mut pos = 8usize;
    while pos < bytes.len() {
        let need = |pos: usize, n: usize| {
            if pos + n > bytes.len() {
                Err(bad("truncated checkpoint"))
            } else {
                Ok(())
            }
        };
        need(pos, 2)?;
        let name_len = u16::from_le_bytes(bytes[pos..pos + 2].try_into().unwrap()) as usize;
        pos += 2;
        need(pos, name_len)?;
        let name = std::str::from_utf8(&bytes[pos..pos + name_len])
            .map_err(|_| bad("name is not utf-8"))?
            .to_string();
        pos += name_len;
        need(pos, 1)?;
        let rank = bytes[pos] as usize;
        pos += 1;
        need(pos, rank * 4)?;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize);
            pos += 4;
        }
        let count: usize = shape.iter().product();
        need(pos, count * 4)?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()));
            pos += 4;
        }
        out.insert(name, (shape, data));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.tfnn");
        let mut params = ParamSet::<f32>::new();
        params.register("fc1.weight", Tensor::param(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        params.register("fc1.bias", Tensor::param(&[2], vec![-1.0, -2.0]));
        params.save(&path).unwrap();

        let mut fresh = ParamSet::<f32>::new();
        let w = fresh.register("fc1.weight", Tensor::param(&[2, 3], vec![0.0; 6]));
        let b = fresh.register("fc1.bias", Tensor::param(&[2], vec![0.0; 2]));
        fresh.load(&path).unwrap();
        assert_eq!(w.to_vec(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(b.to_vec(), vec![-1.0, -2.0]);
    }

    #[test]
    fn load_rejects_shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.tfnn");
        let mut params = ParamSet::<f32>::new();
        params.register("w", Tensor::param(&[4], vec![0.0; 4]));
        params.save(&path).unwrap();

        let mut other = ParamSet::<f32>::new();
        other.register("w", Tensor::param(&[5], vec![0.0; 5]));
        assert!(other.load(&path).is_err());
    }

    #[test]
    fn magic_bytes_lead_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.tfnn");
        ParamSet::<f32>::new().save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"TFNN");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    }
}
