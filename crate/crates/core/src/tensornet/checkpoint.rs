//! Binary container of named `f64` arrays.
//!
//! Layout, all integers little-endian: magic `ACEGANCK`, `u32` version,
//! `u32` entry count, then per entry `u32` name length, UTF-8 name, `u32`
//! rank, `rank` x `u64` dims and the `f64` payload.

use std::path::Path;

use super::{NetError, Tensor};

pub const MAGIC: &[u8; 8] = b"ACEGANCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    entries: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Result<(), NetError> {
        let name = name.into();
        if shape.iter().product::<usize>() != data.len() {
            return Err(NetError::ShapeMismatch {
                expected: shape,
                got: vec![data.len()],
            });
        }
        if self.entries.iter().any(|(n, _, _)| *n == name) {
            return Err(NetError::Checkpoint(format!("duplicate entry {name}")));
        }
        self.entries.push((name, shape, data));
        Ok(())
    }

    pub fn extend(&mut self, items: Vec<(String, Vec<usize>, Vec<f64>)>) -> Result<(), NetError> {
        items.into_iter().try_for_each(|(n, s, d)| self.push(n, s, d))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f64])> {
        self.entries
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, s, d)| (s.as_slice(), d.as_slice()))
    }

    /// Payload of `name`, which must have exactly `shape`.
    pub fn array(&self, name: &str, shape: &[usize]) -> Result<&[f64], NetError> {
        let (s, d) = self.get(name).ok_or_else(|| NetError::MissingEntry(name.to_string()))?;
        if s != shape {
            return Err(NetError::ShapeMismatch {
                expected: shape.to_vec(),
                got: s.to_vec(),
            });
        }
        Ok(d)
    }

    pub fn load_into(&self, name: &str, t: &mut Tensor) -> Result<(), NetError> {
        let d = self.array(name, t.shape())?;
        t.data_mut().copy_from_slice(d);
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (name, shape, data) in &self.entries {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for &d in shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(NetError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(NetError::Checkpoint(format!("unsupported version {version}")));
        }
        let count = r.u32()?;
        let mut ck = Self::new();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| NetError::Checkpoint("entry name is not UTF-8".into()))?
                .to_string();
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                let d = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
                shape.push(usize::try_from(d).map_err(|_| NetError::Checkpoint("dimension overflow".into()))?);
            }
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| NetError::Checkpoint("dimension overflow".into()))?;
            let payload = r.take(n.checked_mul(8).ok_or_else(|| NetError::Checkpoint("dimension overflow".into()))?)?;
            let data = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            ck.push(name, shape, data)?;
        }
        if r.pos != bytes.len() {
            return Err(NetError::Checkpoint("trailing bytes".into()));
        }
        Ok(ck)
    }

    pub fn write(&self, path: &Path) -> Result<(), NetError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| NetError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, NetError> {
        let bytes = std::fs::read(path).map_err(|source| NetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| NetError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, NetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut ck = Checkpoint::new();
        ck.push("a.weight", vec![2, 3], vec![1.0, -2.5, 3.0, 0.0, f64::MIN_POSITIVE, 1e300]).unwrap();
        ck.push("scalar", vec![], vec![7.0]).unwrap();
        ck.push("empty", vec![0], vec![]).unwrap();
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
    }

    #[test]
    fn rejects_corruption() {
        let mut ck = Checkpoint::new();
        ck.push("x", vec![2], vec![1.0, 2.0]).unwrap();
        let bytes = ck.to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut newer = bytes;
        newer[8] = 2;
        assert!(Checkpoint::from_bytes(&newer).is_err());
        assert!(ck.push("x", vec![1], vec![0.0]).is_err());
        assert!(matches!(ck.array("y", &[2]), Err(NetError::MissingEntry(_))));
        assert!(matches!(ck.array("x", &[1, 2]), Err(NetError::ShapeMismatch { .. })));
    }
}
