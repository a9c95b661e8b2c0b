use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{decode, encode};
use super::{Matrix, Result, StoreError};

pub const UNEMBEDDING_KIND: &str = "unembedding";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `h / sqrt(mean(h^2) + eps) * scale`
    RmsNorm,
    /// `(h - mean) / sqrt(var + eps) * scale + shift`
    LayerNorm,
}

/// The model's last normalization. `scale` is the effective multiplier
/// (for models that store `1 + w`, the exporter writes `1 + w`).
#[derive(Debug, Clone, PartialEq)]
pub struct FinalNorm {
    pub kind: NormKind,
    pub eps: f64,
    pub scale: Vec<f32>,
    pub shift: Option<Vec<f32>>,
}

impl FinalNorm {
    pub fn apply(&self, h: &[f32]) -> Vec<f64> {
        let n = h.len() as f64;
        let centered: Vec<f64> = match self.kind {
            NormKind::RmsNorm => h.iter().map(|&v| v as f64).collect(),
            NormKind::LayerNorm => {
                let mean = h.iter().map(|&v| v as f64).sum::<f64>() / n;
                h.iter().map(|&v| v as f64 - mean).collect()
            }
        };
        let denom = (centered.iter().map(|v| v * v).sum::<f64>() / n + self.eps).sqrt();
        centered
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let y = v / denom * self.scale[i] as f64;
                match &self.shift {
                    Some(s) => y + s[i] as f64,
                    None => y,
                }
            })
            .collect()
    }
}

/// Output projection from hidden states to vocabulary logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Unembedding {
    matrix: Matrix,
    final_norm: Option<FinalNorm>,
    token_strings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct NormHeader {
    kind: NormKind,
    eps: f64,
    has_shift: bool,
}

#[derive(Serialize, Deserialize)]
struct UnembeddingHeader {
    model_id: String,
    vocab_size: usize,
    hidden_dim: usize,
    final_norm: Option<NormHeader>,
    token_strings: Vec<String>,
}

impl Unembedding {
    /// `matrix` is `vocab_size x hidden_dim`.
    pub fn new(matrix: Matrix, final_norm: Option<FinalNorm>, token_strings: Vec<String>) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(StoreError::Dimension("unembedding matrix is empty".into()));
        }
        if token_strings.len() != matrix.rows() {
            return Err(StoreError::Dimension(format!(
                "{} token strings for a vocabulary of {}",
                token_strings.len(),
                matrix.rows()
            )));
        }
        if let Some(norm) = &final_norm {
            let shift_ok = norm.shift.as_ref().is_none_or(|s| s.len() == matrix.cols());
            if norm.scale.len() != matrix.cols() || !shift_ok {
                return Err(StoreError::Dimension(format!(
                    "final norm parameters do not match hidden_dim {}",
                    matrix.cols()
                )));
            }
        }
        Ok(Self {
            matrix,
            final_norm,
            token_strings,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn final_norm(&self) -> Option<&FinalNorm> {
        self.final_norm.as_ref()
    }

    pub fn token_string(&self, id: u32) -> Option<&str> {
        self.token_strings.get(id as usize).map(String::as_str)
    }

    pub fn to_bytes(&self, model_id: &str) -> Vec<u8> {
        let header = UnembeddingHeader {
            model_id: model_id.to_string(),
            vocab_size: self.vocab_size(),
            hidden_dim: self.hidden_dim(),
            final_norm: self.final_norm.as_ref().map(|n| NormHeader {
                kind: n.kind,
                eps: n.eps,
                has_shift: n.shift.is_some(),
            }),
            token_strings: self.token_strings.clone(),
        };
        let mut tensors = vec![("unembedding".to_string(), self.matrix.clone())];
        if let Some(n) = &self.final_norm {
            tensors.push(("norm.scale".into(), Matrix::new(1, n.scale.len(), n.scale.clone())));
            if let Some(s) = &n.shift {
                tensors.push(("norm.shift".into(), Matrix::new(1, s.len(), s.clone())));
            }
        }
        let refs: Vec<(String, &Matrix)> = tensors.iter().map(|(n, m)| (n.clone(), m)).collect();
        encode(UNEMBEDDING_KIND, header, &refs)
    }

    /// Returns the model id recorded in the file alongside the unembedding.
    pub fn from_bytes(bytes: &[u8]) -> Result<(String, Self)> {
        let decoded = decode::<UnembeddingHeader>(bytes, UNEMBEDDING_KIND)?;
        let matrix = decoded.tensor("unembedding")?;
        let h = &decoded.envelope.body;
        if matrix.rows() != h.vocab_size || matrix.cols() != h.hidden_dim {
            return Err(StoreError::Dimension(format!(
                "unembedding tensor is {}x{}, header says {}x{}",
                matrix.rows(),
                matrix.cols(),
                h.vocab_size,
                h.hidden_dim
            )));
        }
        let final_norm = match &h.final_norm {
            None => None,
            Some(nh) => Some(FinalNorm {
                kind: nh.kind,
                eps: nh.eps,
                scale: decoded.tensor("norm.scale")?.as_slice().to_vec(),
                shift: if nh.has_shift {
                    Some(decoded.tensor("norm.shift")?.as_slice().to_vec())
                } else {
                    None
                },
            }),
        };
        let model_id = h.model_id.clone();
        let token_strings = decoded.envelope.body.token_strings;
        Ok((model_id, Self::new(matrix, final_norm, token_strings)?))
    }
}

pub fn write_unembedding(u: &Unembedding, model_id: &str, path: &Path) -> Result<()> {
    std::fs::write(path, u.to_bytes(model_id))?;
    Ok(())
}

pub fn read_unembedding(path: &Path) -> Result<(String, Unembedding)> {
    Unembedding::from_bytes(&std::fs::read(path)?)
}
