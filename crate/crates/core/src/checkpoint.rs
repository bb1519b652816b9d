//! Binary checkpoints of trained policies.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "DMAPCKPT" | u32 version | u64 config hash | u32 policy count
//! per policy: u32 tensor count
//!   per tensor: u32 name length | name (utf-8) | u32 rank | u64 dims... | f64 data...
//! 8-byte checksum (leading bytes of SHA-256 over everything before it)
//! ```
//!
//! Tensor names carry a `policy{i}.` prefix. Values are stored as raw f64
//! bits, so a save/load round trip is exact.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::policy::{PolicyConfig, PolicyKind, PolicyNet};

const MAGIC: &[u8; 8] = b"DMAPCKPT";
pub const FORMAT_VERSION: u32 = 1;

/// Stable 64-bit hash of a config's TOML form.
pub fn config_hash<T: Serialize>(config: &T) -> Result<u64> {
    let text = toml::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: u64,
    /// Tensors of each policy, in file order.
    pub policies: Vec<Vec<StoredTensor>>,
}

fn checksum(bytes: &[u8]) -> [u8; 8] {
    Sha256::digest(bytes)[..8].try_into().expect("8 bytes")
}

pub fn encode(policies: &[PolicyNet], config_hash: u64) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&config_hash.to_le_bytes());
    out.extend_from_slice(&(policies.len() as u32).to_le_bytes());
    for (i, policy) in policies.iter().enumerate() {
        let tensors = policy.named_tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, dims, data) in tensors {
            let name = format!("policy{i}.{name}");
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
            for d in dims {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let sum = checksum(&out);
    out.extend_from_slice(&sum);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
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

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let (body, sum) = bytes.split_at(bytes.len() - 8);
    if checksum(body) != sum {
        return Err(Error::Checkpoint("checksum mismatch; file is truncated or corrupt".into()));
    }
    let mut r = Reader { bytes: body, pos: MAGIC.len() };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let config_hash = r.u64()?;
    let count = r.u32()? as usize;
    let mut policies = Vec::new();
    for _ in 0..count {
        let tensors = r.u32()? as usize;
        let mut list = Vec::new();
        for _ in 0..tensors {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Checkpoint("tensor name is not utf-8".into()))?
                .to_string();
            let rank = r.u32()? as usize;
            let dims = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let n = n.ok_or_else(|| Error::Checkpoint(format!("tensor {name} has overflowing shape")))?;
            let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("tensor too large".into()))?)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            list.push(StoredTensor { name, dims, data });
        }
        policies.push(list);
    }
    if r.pos != body.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(Checkpoint { version, config_hash, policies })
}

pub fn save(path: &Path, policies: &[PolicyNet], config_hash: u64) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, encode(policies, config_hash)).map_err(|e| Error::io(path, e))
}

/// Rebuilds policies of the configured architecture from a checkpoint.
/// Any name or shape disagreement is an error; a config hash that differs
/// from `expected_hash` only logs a warning.
pub fn restore(ckpt: &Checkpoint, kind: PolicyKind, config: &PolicyConfig, expected_hash: u64) -> Result<Vec<PolicyNet>> {
    if ckpt.config_hash != expected_hash {
        log::warn!(
            "checkpoint config hash {:016x} differs from current config {:016x}",
            ckpt.config_hash,
            expected_hash
        );
    }
    if ckpt.policies.is_empty() {
        return Err(Error::ShapeMismatch("checkpoint holds no policies".into()));
    }
    let template = PolicyNet::new(kind, config, &mut ChaCha8Rng::seed_from_u64(0));
    let expected: Vec<(String, Vec<usize>)> =
        template.named_tensors().into_iter().map(|(n, d, _)| (n, d)).collect();
    let mut out = Vec::with_capacity(ckpt.policies.len());
    for (i, stored) in ckpt.policies.iter().enumerate() {
        if stored.len() != expected.len() {
            return Err(Error::ShapeMismatch(format!(
                "policy {i}: {} tensors in file, model has {}",
                stored.len(),
                expected.len()
            )));
        }
        for (s, (name, dims)) in stored.iter().zip(&expected) {
            let want = format!("policy{i}.{name}");
            if s.name != want || &s.dims != dims {
                return Err(Error::ShapeMismatch(format!(
                    "expected {want} {dims:?}, found {} {:?}",
                    s.name, s.dims
                )));
            }
        }
        let mut net = template.clone();
        for (dst, s) in net.tensors_mut().into_iter().zip(stored) {
            dst.copy_from_slice(&s.data);
        }
        out.push(net);
    }
    Ok(out)
}

pub fn load(path: &Path, kind: PolicyKind, config: &PolicyConfig, expected_hash: u64) -> Result<Vec<PolicyNet>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    restore(&decode(&bytes)?, kind, config, expected_hash)
}
