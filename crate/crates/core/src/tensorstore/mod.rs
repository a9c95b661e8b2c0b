//! ANCH1 container for exported model internals, and the mapping from pixel
//! regions to visual-token grid cells.

mod bundle;
pub mod container;
mod matrix;
mod region;
mod unembed;

use thiserror::Error;

use crate::geom::Rect;

pub use bundle::{
    read_bundle, slice_tokens, write_bundle, Cell, HiddenStateBundle, TokenGridGeometry,
    VisualToken, BUNDLE_KIND,
};
pub use matrix::Matrix;
pub use region::{rect_to_tokens, region_to_tokens, rescale_rect, RegionBox, DEFAULT_REGION_SIDE_PX};
pub use unembed::{
    read_unembedding, write_unembedding, FinalNorm, NormKind, Unembedding, UNEMBEDDING_KIND,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("not an ANCH1 file (bad magic)")]
    BadMagic,
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("payload digest mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Integrity { stored: u64, computed: u64 },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u32),
    #[error("expected a {expected:?} file, found {found:?}")]
    WrongKind { expected: String, found: String },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("region {rect:?} is outside the {width}x{height} image")]
    RegionOutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("layer {layer} out of range (bundle has {layer_count})")]
    LayerOutOfRange { layer: usize, layer_count: usize },
    #[error("no visual token for cell (image {image_idx}, row {row}, col {col})")]
    MissingCell { image_idx: u32, row: u32, col: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, StoreError>;
