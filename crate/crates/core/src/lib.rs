//! Object co-segmentation by multi-source saliency fusion.
//!
//! A group of images is split into sub-groups by k-means over global
//! descriptors. Within a sub-group, every member's saliency maps (from
//! several detectors) are warped into the key image's frame and fused by a
//! per-pixel median; the fused key map is then warped back to each member.
//! Each fused map seeds an Otsu trimap that drives a GrabCut segmentation.
//!
//! Module map:
//!
//! - [`raster`], [`io`]: pixel containers and file formats
//! - [`grouping`]: k-means, silhouette selection of K, key images
//! - [`warp`]: backward bilinear warping along dense flow
//! - [`fusion`]: median fusion and propagation to members
//! - [`segment`]: Otsu seeding, GMMs, max-flow and GrabCut
//! - [`eval`]: metrics, dataset loading, score reports, synthetic fixtures
//! - [`pipeline`]: configuration and staged end-to-end runs

pub mod error;
pub mod eval;
pub mod fusion;
pub mod grouping;
pub mod io;
pub mod pipeline;
pub mod raster;
pub mod segment;
pub mod warp;

pub use error::{CosegError, Result};
pub use raster::{BinaryMask, FlowField, RasterPlane};
