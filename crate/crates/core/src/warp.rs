//! Backward warping of single-channel maps along dense flow fields.

use std::collections::HashMap;

use crate::error::{CosegError, Result};
use crate::raster::{FlowField, RasterPlane};

/// A map resampled into a target frame, with per-pixel validity.
///
/// Invalid pixels carry value 0 and must be skipped by consumers.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedMap {
    pub values: RasterPlane,
    pub valid: Vec<bool>,
}

impl WarpedMap {
    /// Wraps an unwarped map: everything valid.
    pub fn unwarped(values: RasterPlane) -> Self {
        let n = values.width() * values.height();
        WarpedMap {
            values,
            valid: vec![true; n],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Samples `source_map` at `p + flow(p)` for every target pixel `p`.
///
/// A pixel is invalid when its displacement is the sentinel or when the
/// sample point leaves `[-0.5, W - 0.5] x [-0.5, H - 0.5]`.
pub fn warp_map(source_map: &RasterPlane, flow: &FlowField) -> Result<WarpedMap> {
    if source_map.channels() != 1 {
        return Err(CosegError::Argument("warp expects a single-channel map".into()));
    }
    let (sw, sh) = source_map.dims();
    if (sw, sh) != (flow.source_width(), flow.source_height()) {
        return Err(CosegError::Argument(format!(
            "map is {sw}x{sh} but flow expects a {}x{} source",
            flow.source_width(),
            flow.source_height()
        )));
    }
    let (w, h) = (flow.width(), flow.height());
    let (max_x, max_y) = (sw as f64 - 0.5, sh as f64 - 0.5);
    let mut values = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (du, dv) = flow.displacement(x, y);
            let sx = x as f64 + du as f64;
            let sy = y as f64 + dv as f64;
            let inside = !flow.is_sentinel(x, y)
                && (-0.5..=max_x).contains(&sx)
                && (-0.5..=max_y).contains(&sy);
            if inside {
                values.push(source_map.sample_bilinear(0, sx, sy));
                valid.push(true);
            } else {
                values.push(0.0);
                valid.push(false);
            }
        }
    }
    Ok(WarpedMap {
        values: RasterPlane::new(w, h, 1, values)?,
        valid,
    })
}

/// Flow fields keyed by ordered `(source, target)` image pair.
#[derive(Clone, Debug, Default)]
pub struct FlowSet {
    flows: HashMap<(String, String), FlowField>,
}

impl FlowSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source: impl Into<String>, target: impl Into<String>, flow: FlowField) {
        self.flows.insert((source.into(), target.into()), flow);
    }

    pub fn contains(&self, source: &str, target: &str) -> bool {
        self.flows.contains_key(&(source.to_string(), target.to_string()))
    }

    /// The flow warping `source` into `target`'s frame.
    pub fn get(&self, source: &str, target: &str) -> Result<&FlowField> {
        self.flows
            .get(&(source.to_string(), target.to_string()))
            .ok_or_else(|| {
                CosegError::Config(format!("no flow for pair {source} -> {target}"))
            })
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }
}

/// Warps every member's L maps into the key frame (centralized alignment).
///
/// `maps` lists `(image_id, sources)` for every sub-group member including
/// the key, whose maps pass through unchanged. Output is ordered by image id,
/// then by source index.
pub fn warp_into_key(
    maps: &[(&str, &[RasterPlane])],
    flows: &FlowSet,
    key_id: &str,
) -> Result<Vec<WarpedMap>> {
    let mut ordered: Vec<&(&str, &[RasterPlane])> = maps.iter().collect();
    ordered.sort_by(|a, b| a.0.cmp(b.0));
    if !ordered.iter().any(|(id, _)| *id == key_id) {
        return Err(CosegError::Argument(format!(
            "key image {key_id} is not among the sub-group maps"
        )));
    }
    let mut out = Vec::new();
    for (id, sources) in ordered {
        if *id == key_id {
            out.extend(sources.iter().cloned().map(WarpedMap::unwarped));
        } else {
            let flow = flows.get(id, key_id)?;
            for map in sources.iter() {
                out.push(warp_map(map, flow)?);
            }
        }
    }
    Ok(out)
}
