//! ANCH1 byte layout shared by hidden-state bundles and unembeddings.
//!
//! ```text
//! "ANCH1"                    5 bytes
//! header_len                 u64 little-endian
//! header                     header_len bytes of UTF-8 JSON
//! payload                    payload_bytes bytes of little-endian f32
//! digest                     u64 little-endian FNV-1a over every byte above
//! ```
//!
//! The header always carries `format_version`, `kind`, `payload_bytes` and a
//! `tensors` table of `{name, offset, rows, cols}` with offsets relative to
//! the payload start.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Matrix, Result, StoreError};
use crate::digest::fnv1a64;

pub const MAGIC: &[u8; 5] = b"ANCH1";
pub const FORMAT_VERSION: u32 = 1;
const PREFIX_LEN: usize = MAGIC.len() + 8;
const DIGEST_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub offset: u64,
    pub rows: u64,
    pub cols: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct Envelope<H> {
    pub format_version: u32,
    pub kind: String,
    pub payload_bytes: u64,
    pub tensors: Vec<TensorEntry>,
    #[serde(flatten)]
    pub body: H,
}

pub(crate) fn encode<H: Serialize>(kind: &str, body: H, tensors: &[(String, &Matrix)]) -> Vec<u8> {
    let mut entries = Vec::with_capacity(tensors.len());
    let mut offset = 0u64;
    for (name, m) in tensors {
        entries.push(TensorEntry {
            name: name.clone(),
            offset,
            rows: m.rows() as u64,
            cols: m.cols() as u64,
        });
        offset += (m.as_slice().len() * 4) as u64;
    }
    let env = Envelope {
        format_version: FORMAT_VERSION,
        kind: kind.to_string(),
        payload_bytes: offset,
        tensors: entries,
        body,
    };
    let header = serde_json::to_vec(&env).expect("header serializes");
    let mut out = Vec::with_capacity(PREFIX_LEN + header.len() + offset as usize + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, m) in tensors {
        for v in m.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = fnv1a64(&out);
    out.extend_from_slice(&digest.to_le_bytes());
    out
}

pub(crate) struct Decoded<'a, H> {
    pub envelope: Envelope<H>,
    pub payload: &'a [u8],
}

fn check_digest(bytes: &[u8]) -> Result<()> {
    let split = bytes.len() - DIGEST_LEN;
    let stored = u64::from_le_bytes(bytes[split..].try_into().expect("8 bytes"));
    let computed = fnv1a64(&bytes[..split]);
    if stored != computed {
        return Err(StoreError::Integrity { stored, computed });
    }
    Ok(())
}

pub(crate) fn decode<'a, H: DeserializeOwned>(bytes: &'a [u8], kind: &str) -> Result<Decoded<'a, H>> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(StoreError::BadMagic);
    }
    if bytes.len() < PREFIX_LEN + DIGEST_LEN {
        return Err(StoreError::Truncated {
            expected: (PREFIX_LEN + DIGEST_LEN) as u64,
            actual: bytes.len() as u64,
        });
    }
    let header_len = u64::from_le_bytes(bytes[MAGIC.len()..PREFIX_LEN].try_into().expect("8 bytes"));
    let min_len = (PREFIX_LEN as u64).saturating_add(header_len).saturating_add(DIGEST_LEN as u64);
    if (bytes.len() as u64) < min_len {
        return Err(StoreError::Truncated {
            expected: min_len,
            actual: bytes.len() as u64,
        });
    }
    let header_end = PREFIX_LEN + header_len as usize;
    let value: serde_json::Value = match serde_json::from_slice(&bytes[PREFIX_LEN..header_end]) {
        Ok(v) => v,
        Err(e) => {
            // A damaged header usually means a damaged file.
            check_digest(bytes)?;
            return Err(StoreError::Header(e.to_string()));
        }
    };
    let payload_bytes = value
        .get("payload_bytes")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| StoreError::Header("missing payload_bytes".into()))?;
    let expected = min_len.saturating_add(payload_bytes);
    if (bytes.len() as u64) < expected {
        return Err(StoreError::Truncated {
            expected,
            actual: bytes.len() as u64,
        });
    }
    check_digest(bytes)?;
    if bytes.len() as u64 > expected {
        return Err(StoreError::Dimension(format!(
            "{} trailing bytes after the digest",
            bytes.len() as u64 - expected
        )));
    }
    let version = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version != FORMAT_VERSION as u64 {
        return Err(StoreError::UnsupportedVersion(version as u32));
    }
    let found = value.get("kind").and_then(|v| v.as_str()).unwrap_or("");
    if found != kind {
        return Err(StoreError::WrongKind {
            expected: kind.to_string(),
            found: found.to_string(),
        });
    }
    let envelope: Envelope<H> =
        serde_json::from_value(value).map_err(|e| StoreError::Header(e.to_string()))?;
    let payload = &bytes[header_end..header_end + envelope.payload_bytes as usize];
    Ok(Decoded { envelope, payload })
}

impl<H> Decoded<'_, H> {
    pub fn tensor(&self, name: &str) -> Result<Matrix> {
        let e = self
            .envelope
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| StoreError::Dimension(format!("missing tensor {name:?}")))?;
        let len = e
            .rows
            .checked_mul(e.cols)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| StoreError::Dimension(format!("tensor {name:?} size overflows")))?;
        let end = e.offset.checked_add(len).filter(|&end| end <= self.payload.len() as u64);
        let Some(end) = end else {
            return Err(StoreError::Dimension(format!(
                "tensor {name:?} extends past the payload"
            )));
        };
        let raw = &self.payload[e.offset as usize..end as usize];
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        Ok(Matrix::new(e.rows as usize, e.cols as usize, data))
    }
}
