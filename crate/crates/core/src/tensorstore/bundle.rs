use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{decode, encode};
use super::{Matrix, Result, StoreError};

pub const BUNDLE_KIND: &str = "hidden_states";

/// How one image was patched into visual tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenGridGeometry {
    pub image_idx: u32,
    pub patch_px: u32,
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub image_w_px: u32,
    pub image_h_px: u32,
}

impl TokenGridGeometry {
    pub fn token_count(&self) -> usize {
        self.grid_rows as usize * self.grid_cols as usize
    }

    fn validate(&self) -> Result<()> {
        if self.patch_px == 0 {
            return Err(StoreError::Dimension(format!(
                "image {}: patch_px must be positive",
                self.image_idx
            )));
        }
        let rows_px = self.grid_rows as u64 * self.patch_px as u64;
        let cols_px = self.grid_cols as u64 * self.patch_px as u64;
        if rows_px < self.image_h_px as u64 || cols_px < self.image_w_px as u64 {
            return Err(StoreError::Dimension(format!(
                "image {}: {}x{} grid of {} px patches does not cover {}x{} px",
                self.image_idx,
                self.grid_rows,
                self.grid_cols,
                self.patch_px,
                self.image_w_px,
                self.image_h_px
            )));
        }
        Ok(())
    }
}

/// One visual token: grid cell and its position in the LM sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualToken {
    pub image_idx: u32,
    pub row: u32,
    pub col: u32,
    pub seq_pos: u64,
}

/// `(image_idx, row, col)`.
pub type Cell = (u32, u32, u32);

/// Per-layer hidden states of the visual tokens of one forward pass.
///
/// Row `i` of every layer matrix belongs to `visual_token_index[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStateBundle {
    model_id: String,
    instance_id: String,
    hidden_dim: usize,
    token_grids: Vec<TokenGridGeometry>,
    visual_token_index: Vec<VisualToken>,
    layers: Vec<Matrix>,
    rows_by_cell: BTreeMap<Cell, usize>,
}

#[derive(Serialize, Deserialize)]
struct BundleHeader {
    model_id: String,
    instance_id: String,
    layer_count: usize,
    hidden_dim: usize,
    token_grids: Vec<TokenGridGeometry>,
    visual_token_index: Vec<VisualToken>,
}

impl HiddenStateBundle {
    pub fn new(
        model_id: impl Into<String>,
        instance_id: impl Into<String>,
        hidden_dim: usize,
        token_grids: Vec<TokenGridGeometry>,
        visual_token_index: Vec<VisualToken>,
        layers: Vec<Matrix>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(StoreError::Dimension("layer_count must be at least 1".into()));
        }
        let mut grids_by_image = BTreeMap::new();
        for g in &token_grids {
            g.validate()?;
            if grids_by_image.insert(g.image_idx, *g).is_some() {
                return Err(StoreError::Dimension(format!(
                    "duplicate token grid for image {}",
                    g.image_idx
                )));
            }
        }
        let expected: usize = token_grids.iter().map(|g| g.token_count()).sum();
        if expected == 0 || visual_token_index.is_empty() {
            return Err(StoreError::Dimension("bundle has no visual tokens".into()));
        }
        if visual_token_index.len() != expected {
            return Err(StoreError::Dimension(format!(
                "token grids imply {expected} visual tokens, index has {}",
                visual_token_index.len()
            )));
        }
        let mut rows_by_cell = BTreeMap::new();
        let mut positions = BTreeSet::new();
        for (i, t) in visual_token_index.iter().enumerate() {
            let g = grids_by_image.get(&t.image_idx).ok_or_else(|| {
                StoreError::Dimension(format!("token {i} refers to unknown image {}", t.image_idx))
            })?;
            if t.row >= g.grid_rows || t.col >= g.grid_cols {
                return Err(StoreError::Dimension(format!(
                    "token {i} cell ({}, {}) outside the {}x{} grid",
                    t.row, t.col, g.grid_rows, g.grid_cols
                )));
            }
            if rows_by_cell.insert((t.image_idx, t.row, t.col), i).is_some() {
                return Err(StoreError::Dimension(format!(
                    "duplicate index entry for cell ({}, {}, {})",
                    t.image_idx, t.row, t.col
                )));
            }
            if !positions.insert(t.seq_pos) {
                return Err(StoreError::Dimension(format!(
                    "duplicate sequence position {}",
                    t.seq_pos
                )));
            }
        }
        for (l, m) in layers.iter().enumerate() {
            if m.rows() != expected || m.cols() != hidden_dim {
                return Err(StoreError::Dimension(format!(
                    "layer {l} is {}x{}, expected {expected}x{hidden_dim}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(Self {
            model_id: model_id.into(),
            instance_id: instance_id.into(),
            hidden_dim,
            token_grids,
            visual_token_index,
            layers,
            rows_by_cell,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn token_grids(&self) -> &[TokenGridGeometry] {
        &self.token_grids
    }

    pub fn grid(&self, image_idx: u32) -> Option<&TokenGridGeometry> {
        self.token_grids.iter().find(|g| g.image_idx == image_idx)
    }

    pub fn visual_token_index(&self) -> &[VisualToken] {
        &self.visual_token_index
    }

    pub fn layer(&self, layer: usize) -> Result<&Matrix> {
        self.layers.get(layer).ok_or(StoreError::LayerOutOfRange {
            layer,
            layer_count: self.layers.len(),
        })
    }

    pub fn row_of(&self, cell: Cell) -> Option<usize> {
        self.rows_by_cell.get(&cell).copied()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = BundleHeader {
            model_id: self.model_id.clone(),
            instance_id: self.instance_id.clone(),
            layer_count: self.layers.len(),
            hidden_dim: self.hidden_dim,
            token_grids: self.token_grids.clone(),
            visual_token_index: self.visual_token_index.clone(),
        };
        let tensors: Vec<(String, &Matrix)> = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("layer.{i}"), m))
            .collect();
        encode(BUNDLE_KIND, header, &tensors)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let decoded = decode::<BundleHeader>(bytes, BUNDLE_KIND)?;
        let h = &decoded.envelope.body;
        if decoded.envelope.tensors.len() != h.layer_count {
            return Err(StoreError::Dimension(format!(
                "header declares {} layers but has {} tensors",
                h.layer_count,
                decoded.envelope.tensors.len()
            )));
        }
        let layers = (0..h.layer_count)
            .map(|i| decoded.tensor(&format!("layer.{i}")))
            .collect::<Result<Vec<_>>>()?;
        let h = decoded.envelope.body;
        Self::new(
            h.model_id,
            h.instance_id,
            h.hidden_dim,
            h.token_grids,
            h.visual_token_index,
            layers,
        )
    }
}

pub fn write_bundle(bundle: &HiddenStateBundle, path: &Path) -> Result<()> {
    std::fs::write(path, bundle.to_bytes())?;
    Ok(())
}

pub fn read_bundle(path: &Path) -> Result<HiddenStateBundle> {
    HiddenStateBundle::from_bytes(&std::fs::read(path)?)
}

/// Stored rows for `cells` at `layer`, ordered by `(image, row, col)`.
pub fn slice_tokens(bundle: &HiddenStateBundle, layer: usize, cells: &BTreeSet<Cell>) -> Result<Matrix> {
    let m = bundle.layer(layer)?;
    let mut out = Matrix::zeros(0, bundle.hidden_dim());
    for &cell in cells {
        let row = bundle.row_of(cell).ok_or(StoreError::MissingCell {
            image_idx: cell.0,
            row: cell.1,
            col: cell.2,
        })?;
        out.push_row(m.row(row));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_bundle() -> HiddenStateBundle {
        let grids = vec![TokenGridGeometry {
            image_idx: 0,
            patch_px: 14,
            grid_rows: 2,
            grid_cols: 2,
            image_w_px: 28,
            image_h_px: 28,
        }];
        // Stored in column-major cell order to exercise the row lookup.
        let index = vec![
            VisualToken { image_idx: 0, row: 0, col: 0, seq_pos: 10 },
            VisualToken { image_idx: 0, row: 1, col: 0, seq_pos: 11 },
            VisualToken { image_idx: 0, row: 0, col: 1, seq_pos: 12 },
            VisualToken { image_idx: 0, row: 1, col: 1, seq_pos: 13 },
        ];
        let layer0 = Matrix::from_rows(3, &[[0.0, 0.1, 0.2], [1.0, 1.1, 1.2], [2.0, 2.1, 2.2], [3.0, 3.1, 3.2]]);
        let layer1 = layer0.map(|v| -v);
        HiddenStateBundle::new("m", "i", 3, grids, index, vec![layer0, layer1]).unwrap()
    }

    #[test]
    fn roundtrip_bytes() {
        let b = tiny_bundle();
        let bytes = b.to_bytes();
        assert_eq!(&bytes[..5], b"ANCH1");
        assert_eq!(HiddenStateBundle::from_bytes(&bytes).unwrap(), b);
    }

    #[test]
    fn corrupted_digest_is_integrity_error() {
        let mut bytes = tiny_bundle().to_bytes();
        let n = bytes.len();
        bytes[n - 1] ^= 0x01;
        assert!(matches!(HiddenStateBundle::from_bytes(&bytes), Err(StoreError::Integrity { .. })));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = tiny_bundle().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(HiddenStateBundle::from_bytes(&bytes), Err(StoreError::BadMagic)));
        let bytes = tiny_bundle().to_bytes();
        let cut = &bytes[..bytes.len() - 20];
        assert!(matches!(HiddenStateBundle::from_bytes(cut), Err(StoreError::Truncated { .. })));
    }

    #[test]
    fn empty_bundle_rejected() {
        let grids = vec![TokenGridGeometry {
            image_idx: 0,
            patch_px: 14,
            grid_rows: 0,
            grid_cols: 0,
            image_w_px: 0,
            image_h_px: 0,
        }];
        let err = HiddenStateBundle::new("m", "i", 4, grids, vec![], vec![Matrix::zeros(0, 4)]);
        assert!(matches!(err, Err(StoreError::Dimension(_))));
    }

    #[test]
    fn duplicate_cells_rejected() {
        let b = tiny_bundle();
        let mut index = b.visual_token_index().to_vec();
        index[3].row = 0;
        index[3].col = 0;
        let err = HiddenStateBundle::new("m", "i", 3, b.token_grids().to_vec(), index, vec![b.layer(0).unwrap().clone()]);
        assert!(matches!(err, Err(StoreError::Dimension(_))));
    }

    #[test]
    fn grid_must_cover_image() {
        let mut g = tiny_bundle().token_grids()[0];
        g.image_w_px = 29;
        assert!(g.validate().is_err());
    }

    #[test]
    fn slicing_orders_cells_canonically() {
        let b = tiny_bundle();
        let empty = slice_tokens(&b, 0, &BTreeSet::new()).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (0, 3));

        let all: BTreeSet<Cell> = [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1)].into();
        let m = slice_tokens(&b, 0, &all).unwrap();
        let firsts: Vec<f32> = m.iter_rows().map(|r| r[0]).collect();
        assert_eq!(firsts, vec![0.0, 2.0, 1.0, 3.0]);

        let one = slice_tokens(&b, 1, &[(0, 1, 0)].into()).unwrap();
        assert_eq!(one.row(0), &[-1.0, -1.1, -1.2]);
    }

    #[test]
    fn slicing_errors() {
        let b = tiny_bundle();
        assert!(matches!(slice_tokens(&b, 2, &BTreeSet::new()), Err(StoreError::LayerOutOfRange { .. })));
        assert!(matches!(slice_tokens(&b, 0, &[(1, 0, 0)].into()), Err(StoreError::MissingCell { .. })));
    }
}
