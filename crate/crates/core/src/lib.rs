//! Visual-correspondence benchmark generation and hidden-state analysis.
//!
//! - [`shapegen`]: known shapes, squiggles and mazes, plus the scene rasterizer.
//! - [`taskforge`]: multiple-choice correspondence instances, prompts and
//!   name-teaching / task finetune data.
//! - [`tensorstore`]: the ANCH1 container for exported hidden states and
//!   unembeddings, and pixel-region to visual-token mapping.
//! - [`probekit`]: MaxSim representation probing and layer sweeps.
//! - [`lenskit`]: logit-lens decoding and Jaccard-distance curves.
//! - [`scorer`]: answer parsing, accuracy and report tables.

pub mod digest;
pub mod geom;
pub mod lenskit;
pub mod options;
pub mod probekit;
pub mod rng;
pub mod scorer;
pub mod shapegen;
pub mod taskforge;
pub mod tensorstore;
