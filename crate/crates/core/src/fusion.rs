//! Median fusion of aligned candidates in the key frame, and propagation of
//! the fused key map back to the other members.

use std::collections::BTreeMap;

use crate::error::{CosegError, Result};
use crate::raster::RasterPlane;
use crate::warp::{warp_into_key, warp_map, FlowSet, WarpedMap};

/// All candidate maps aligned to one key image, plus the key's own raw
/// sources (used where no candidate is valid).
#[derive(Clone, Debug)]
pub struct CandidateStack {
    key_id: String,
    candidates: Vec<WarpedMap>,
    own_maps: Vec<RasterPlane>,
}

impl CandidateStack {
    pub fn new(key_id: impl Into<String>, candidates: Vec<WarpedMap>, own_maps: Vec<RasterPlane>) -> Result<Self> {
        let Some(first) = candidates.first() else {
            return Err(CosegError::Argument("candidate stack is empty".into()));
        };
        let dims = first.dims();
        if candidates.iter().any(|c| c.dims() != dims || c.valid.len() != dims.0 * dims.1) {
            return Err(CosegError::Argument("candidates differ in size".into()));
        }
        if own_maps.is_empty() || own_maps.iter().any(|m| m.dims() != dims || m.channels() != 1) {
            return Err(CosegError::Argument(
                "key fallback maps must be single-channel and match the candidates".into(),
            ));
        }
        Ok(CandidateStack {
            key_id: key_id.into(),
            candidates,
            own_maps,
        })
    }

    pub fn key_id(&self) -> &str {
        &self.key_id
    }

    pub fn candidates(&self) -> &[WarpedMap] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.candidates[0].dims()
    }
}

/// A fused saliency map for one image. Not renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedMap {
    pub values: RasterPlane,
}

/// Per-pixel mean of several single-channel maps.
pub fn mean_of_maps(maps: &[RasterPlane]) -> Result<RasterPlane> {
    let Some(first) = maps.first() else {
        return Err(CosegError::Argument("no maps to average".into()));
    };
    let (w, h) = first.dims();
    let data = (0..w * h)
        .map(|i| maps.iter().map(|m| m.data()[i]).sum::<f64>() / maps.len() as f64)
        .collect();
    RasterPlane::new(w, h, 1, data)
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower + upper) / 2.0
    }
}

/// Per-pixel median over the valid candidates. An even count averages the
/// two middle order statistics; a pixel with no valid candidate falls back
/// to the mean of the key's own raw maps.
pub fn median_fuse(stack: &CandidateStack) -> FusedMap {
    let (w, h) = stack.dims();
    let mut scratch = Vec::with_capacity(stack.len());
    let mut data = Vec::with_capacity(w * h);
    for p in 0..w * h {
        scratch.clear();
        scratch.extend(
            stack
                .candidates
                .iter()
                .filter(|c| c.valid[p])
                .map(|c| c.values.data()[p]),
        );
        let v = if scratch.is_empty() {
            stack.own_maps.iter().map(|m| m.data()[p]).sum::<f64>() / stack.own_maps.len() as f64
        } else {
            median_in_place(&mut scratch)
        };
        data.push(v);
    }
    FusedMap {
        values: RasterPlane::new(w, h, 1, data).expect("median of valid values stays in range"),
    }
}

/// Warps the key's fused map into a member frame (decentralized alignment).
/// Pixels without a valid correspondence take the mean of the member's own
/// raw maps.
pub fn propagate_to_member(
    key_fused: &FusedMap,
    flow_key_to_member: &crate::raster::FlowField,
    member_maps: &[RasterPlane],
) -> Result<FusedMap> {
    let warped = warp_map(&key_fused.values, flow_key_to_member)?;
    let fallback = mean_of_maps(member_maps)?;
    if fallback.dims() != warped.dims() {
        return Err(CosegError::Argument(
            "member maps do not match the flow's target frame".into(),
        ));
    }
    let (w, h) = warped.dims();
    let data = (0..w * h)
        .map(|p| {
            if warped.valid[p] {
                warped.values.data()[p]
            } else {
                fallback.data()[p]
            }
        })
        .collect();
    Ok(FusedMap {
        values: RasterPlane::new(w, h, 1, data)?,
    })
}

/// Fuses one sub-group: the key gets the median of all `L * |G|` aligned
/// candidates, every other member gets the propagated key map.
pub fn fuse_sub_group(
    key_id: &str,
    members: &[&str],
    maps: &BTreeMap<String, Vec<RasterPlane>>,
    flows: &FlowSet,
) -> Result<BTreeMap<String, FusedMap>> {
    let lookup = |id: &str| {
        maps.get(id)
            .ok_or_else(|| CosegError::Config(format!("no saliency maps loaded for {id}")))
    };
    let mut group: Vec<(&str, &[RasterPlane])> = Vec::with_capacity(members.len() + 1);
    for &id in members {
        group.push((id, lookup(id)?.as_slice()));
    }
    if !members.contains(&key_id) {
        group.push((key_id, lookup(key_id)?.as_slice()));
    }
    let candidates = warp_into_key(&group, flows, key_id)?;
    let stack = CandidateStack::new(key_id, candidates, lookup(key_id)?.clone())?;
    let key_fused = median_fuse(&stack);

    let mut out = BTreeMap::new();
    for (id, own) in group {
        if id == key_id {
            continue;
        }
        let flow = flows.get(key_id, id)?;
        out.insert(id.to_string(), propagate_to_member(&key_fused, flow, own)?);
    }
    out.insert(key_id.to_string(), key_fused);
    Ok(out)
}
