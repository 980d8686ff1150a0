//! Fused map to binary mask: Otsu seeding followed by GrabCut.

pub mod gmm;
pub mod grabcut;
pub mod maxflow;
pub mod otsu;
pub mod trimap;

pub use gmm::{fit_gmm, GmmModel};
pub use grabcut::{build_graph, contrast_beta, grabcut, grabcut_energy, GrabCutOutcome, GrabCutParams};
pub use maxflow::{max_flow, FlowNetworkGraph, MinCut};
pub use otsu::{otsu_from_histogram, otsu_threshold, quantize_bin, HISTOGRAM_BINS};
pub use trimap::{seeds_from_otsu, SeedLabel, TrimapSeed};

use crate::error::Result;
use crate::fusion::FusedMap;
use crate::raster::{BinaryMask, RasterPlane};

/// Otsu threshold, seed trimap and GrabCut in one call.
pub fn segment_fused(image: &RasterPlane, fused: &FusedMap, params: &GrabCutParams, seed: u64) -> Result<GrabCutOutcome> {
    let t = otsu_threshold(&fused.values);
    let trimap = seeds_from_otsu(&fused.values, t)?;
    grabcut(image, &trimap, params, seed)
}

/// Convenience wrapper returning only the mask.
pub fn segment_to_mask(image: &RasterPlane, fused: &FusedMap, params: &GrabCutParams, seed: u64) -> Result<BinaryMask> {
    Ok(segment_fused(image, fused, params, seed)?.mask)
}
