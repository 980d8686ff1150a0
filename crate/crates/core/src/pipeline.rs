//! End-to-end orchestration: grouping, alignment, fusion and segmentation,
//! either in one pass or as separate stages that exchange files.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! grouping.txt         run manifest (K, key images, membership)
//! required_pairs.txt   `<source> <target>` flows the grouping needs
//! fused/<id>.png       16-bit fused saliency maps
//! <id>.png             binary masks (255 = foreground)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{CosegError, Result};
use crate::fusion::{fuse_sub_group, FusedMap};
use crate::grouping::{
    default_k_range, fallback_features, load_feature_file, select_k, FeatureVector, SubGrouping,
    MIN_GROUP_FOR_CLUSTERING,
};
use crate::io::{
    image_id_of, list_images, load_gray_plane, load_image, load_saliency, quantize16, save_mask,
    save_plane_png16, PairManifest,
};
use crate::raster::{BinaryMask, RasterPlane};
use crate::segment::{segment_fused, GrabCutParams};
use crate::warp::FlowSet;

pub const RUN_MANIFEST: &str = "grouping.txt";
pub const REQUIRED_PAIRS: &str = "required_pairs.txt";
pub const FUSED_DIR: &str = "fused";

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    /// One directory per saliency source; order fixes candidate order.
    pub saliency_dirs: Vec<PathBuf>,
    pub flow_manifest: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub grabcut: GrabCutParams,
    pub seed: u64,
    /// Also write fused maps during a full run.
    pub dump_fused: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_dir: PathBuf::new(),
            saliency_dirs: Vec::new(),
            flow_manifest: None,
            features: None,
            output_dir: PathBuf::new(),
            k_min: None,
            k_max: None,
            grabcut: GrabCutParams::default(),
            seed: 0,
            dump_fused: false,
        }
    }
}

/// Every key accepted in a config file (and as a `--flag`).
pub const CONFIG_KEYS: [&str; 12] = [
    "input_dir",
    "saliency_dirs",
    "flow_manifest",
    "features",
    "output_dir",
    "k_min",
    "k_max",
    "gc_iters",
    "gc_gamma",
    "gc_components",
    "seed",
    "dump_fused",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CosegError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(CosegError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl PipelineConfig {
    /// Sets one key. Relative paths resolve against `base`. Dashes in the
    /// key are treated as underscores.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        match key.as_str() {
            "input_dir" => self.input_dir = path(value),
            "saliency_dirs" => {
                self.saliency_dirs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(path)
                    .collect()
            }
            "flow_manifest" => self.flow_manifest = Some(path(value)),
            "features" => self.features = Some(path(value)),
            "output_dir" => self.output_dir = path(value),
            "k_min" => self.k_min = Some(parse_num(&key, value)?),
            "k_max" => self.k_max = Some(parse_num(&key, value)?),
            "gc_iters" => self.grabcut.iterations = parse_num(&key, value)?,
            "gc_gamma" => self.grabcut.gamma = parse_num(&key, value)?,
            "gc_components" => self.grabcut.components = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "dump_fused" => self.dump_fused = parse_bool(&key, value)?,
            _ => return Err(CosegError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str, base: &Path, origin: &Path) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CosegError::format(origin, format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key, value, base).map_err(|e| match e {
                CosegError::Config(m) => CosegError::format(origin, format!("line {}: {m}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CosegError::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text, path.parent().unwrap_or(Path::new(".")), path)?;
        Ok(cfg)
    }

    fn require_dirs(&self, saliency: bool) -> Result<()> {
        if self.input_dir.as_os_str().is_empty() {
            return Err(CosegError::Config("input_dir is not set".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(CosegError::Config("output_dir is not set".into()));
        }
        if saliency && self.saliency_dirs.is_empty() {
            return Err(CosegError::Config("saliency_dirs lists no source".into()));
        }
        if self.grabcut.components == 0 || self.grabcut.iterations == 0 {
            return Err(CosegError::Config("gc_iters and gc_components must be positive".into()));
        }
        if !(self.grabcut.gamma.is_finite() && self.grabcut.gamma > 0.0) {
            return Err(CosegError::Config("gc_gamma must be a positive number".into()));
        }
        Ok(())
    }
}

/// Sub-groups as written to `grouping.txt`: one `K <k>` line, then per
/// sub-group `SUBGROUP <k> KEY <id>` followed by `MEMBER <k> <id>` lines
/// (the key is listed as a member too). Sub-groups are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunManifest {
    pub subgroups: Vec<SubGroupEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubGroupEntry {
    pub key: String,
    pub members: Vec<String>,
}

impl RunManifest {
    pub fn from_grouping(g: &SubGrouping) -> Self {
        let subgroups = (0..g.k)
            .map(|c| SubGroupEntry {
                key: g.key_images[c].clone(),
                members: g.members(c).into_iter().map(String::from).collect(),
            })
            .collect();
        RunManifest { subgroups }
    }

    pub fn image_ids(&self) -> BTreeSet<&str> {
        self.subgroups
            .iter()
            .flat_map(|s| s.members.iter().map(String::as_str))
            .collect()
    }

    /// Ordered `(source, target)` pairs whose flows fusion needs: each
    /// non-key member to its key and back.
    pub fn required_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for s in &self.subgroups {
            for m in s.members.iter().filter(|m| **m != s.key) {
                out.push((m.clone(), s.key.clone()));
                out.push((s.key.clone(), m.clone()));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("K {}\n", self.subgroups.len());
        for (i, s) in self.subgroups.iter().enumerate() {
            writeln!(out, "SUBGROUP {} KEY {}", i + 1, s.key).unwrap();
            for m in &s.members {
                writeln!(out, "MEMBER {} {m}", i + 1).unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let bad = |lineno: usize, msg: &str| CosegError::format(origin, format!("line {}: {msg}", lineno + 1));
        let mut subgroups: Vec<SubGroupEntry> = Vec::new();
        let mut declared_k = None;
        for (lineno, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                ["K", k] => declared_k = Some(k.parse::<usize>().map_err(|_| bad(lineno, "bad K"))?),
                ["SUBGROUP", k, "KEY", key] => {
                    if k.parse::<usize>().ok() != Some(subgroups.len() + 1) {
                        return Err(bad(lineno, "sub-groups must be numbered 1, 2, ... in order"));
                    }
                    subgroups.push(SubGroupEntry { key: key.to_string(), members: Vec::new() });
                }
                ["MEMBER", k, id] => {
                    let n = subgroups.len();
                    if n == 0 || k.parse::<usize>().ok() != Some(n) {
                        return Err(bad(lineno, "MEMBER does not follow its SUBGROUP line"));
                    }
                    subgroups[n - 1].members.push(id.to_string());
                }
                _ => return Err(bad(lineno, "unrecognized line")),
            }
        }
        if subgroups.is_empty() {
            return Err(CosegError::format(origin, "no sub-groups"));
        }
        if declared_k.is_some_and(|k| k != subgroups.len()) {
            return Err(CosegError::format(origin, "K does not match the sub-group count"));
        }
        let mut seen = BTreeSet::new();
        for s in &subgroups {
            if !s.members.contains(&s.key) {
                return Err(CosegError::format(origin, format!("key {} is not a member", s.key)));
            }
            for m in &s.members {
                if !seen.insert(m.as_str()) {
                    return Err(CosegError::format(origin, format!("{m} appears twice")));
                }
            }
        }
        Ok(RunManifest { subgroups })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CosegError::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub masks: BTreeMap<String, BinaryMask>,
}

type Images = BTreeMap<String, RasterPlane>;

fn load_images(cfg: &PipelineConfig) -> Result<Images> {
    if !cfg.input_dir.is_dir() {
        return Err(CosegError::Config(format!(
            "input directory {} does not exist",
            cfg.input_dir.display()
        )));
    }
    let listed = list_images(&cfg.input_dir)?;
    if listed.is_empty() {
        return Err(CosegError::Config(format!("no images in {}", cfg.input_dir.display())));
    }
    listed
        .into_par_iter()
        .map(|(id, path)| Ok((id, load_image(&path)?)))
        .collect()
}

fn saliency_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.png"))
}

fn load_all_saliency(cfg: &PipelineConfig, images: &Images, ids: &[&str]) -> Result<BTreeMap<String, Vec<RasterPlane>>> {
    let missing: Vec<String> = ids
        .iter()
        .flat_map(|id| cfg.saliency_dirs.iter().map(move |d| saliency_path(d, id)))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CosegError::Config(format!("missing saliency maps: {}", missing.join(", "))));
    }
    ids.par_iter()
        .map(|&id| {
            let (w, h) = images[id].dims();
            let maps = cfg
                .saliency_dirs
                .iter()
                .map(|d| load_saliency(saliency_path(d, id), w, h))
                .collect::<Result<Vec<_>>>()?;
            Ok((id.to_string(), maps))
        })
        .collect()
}

fn load_features(cfg: &PipelineConfig, images: &Images) -> Result<Vec<FeatureVector>> {
    let Some(path) = &cfg.features else {
        return images.par_iter().map(|(id, img)| fallback_features(id, img)).collect();
    };
    let mut by_id = BTreeMap::new();
    for f in load_feature_file(path)? {
        let id = image_id_of(&f.image_id);
        if by_id.insert(id.clone(), f.values).is_some() {
            return Err(CosegError::format(path, format!("duplicate features for {id}")));
        }
    }
    let missing: Vec<&str> = images.keys().filter(|id| !by_id.contains_key(*id)).map(String::as_str).collect();
    if !missing.is_empty() {
        return Err(CosegError::Config(format!(
            "{} has no features for: {}",
            path.display(),
            missing.join(", ")
        )));
    }
    Ok(images
        .keys()
        .map(|id| FeatureVector::new(id.clone(), by_id.remove(id).expect("checked above")))
        .collect())
}

fn cluster_images(cfg: &PipelineConfig, images: &Images) -> Result<RunManifest> {
    let features = load_features(cfg, images)?;
    let m = features.len();
    let (dmin, dmax) = default_k_range(m);
    let k_min = cfg.k_min.unwrap_or(dmin);
    let k_max = cfg.k_max.unwrap_or(dmax.max(k_min));
    let grouping = select_k(&features, k_min, k_max, cfg.seed).map_err(|e| match e {
        CosegError::Argument(m) => CosegError::Config(m),
        other => other,
    })?;
    if m >= MIN_GROUP_FOR_CLUSTERING {
        log::info!("{m} images grouped into K={}", grouping.k);
    }
    Ok(RunManifest::from_grouping(&grouping))
}

fn load_required_flows(cfg: &PipelineConfig, manifest: &RunManifest, images: &Images) -> Result<FlowSet> {
    let required = manifest.required_pairs();
    let mut flows = FlowSet::new();
    if required.is_empty() {
        return Ok(flows);
    }
    let Some(path) = &cfg.flow_manifest else {
        return Err(CosegError::Config(format!(
            "the grouping needs {} flows but no flow_manifest is configured",
            required.len()
        )));
    };
    let pairs = PairManifest::load(path)?;
    let mut by_pair = BTreeMap::new();
    for e in &pairs.entries {
        by_pair.insert((image_id_of(&e.source), image_id_of(&e.target)), e);
    }
    let missing: Vec<String> = required
        .iter()
        .filter(|p| !by_pair.contains_key(*p))
        .map(|(s, t)| format!("{s} -> {t}"))
        .collect();
    if !missing.is_empty() {
        return Err(CosegError::Config(format!(
            "{} lacks flows for: {}",
            path.display(),
            missing.join(", ")
        )));
    }
    let loaded = required
        .par_iter()
        .map(|(s, t)| {
            let entry = by_pair[&(s.clone(), t.clone())];
            let flow = entry.load()?;
            let (sd, td) = (images[s].dims(), images[t].dims());
            if (flow.source_width(), flow.source_height()) != sd || (flow.width(), flow.height()) != td {
                return Err(CosegError::Config(format!(
                    "flow {s} -> {t} maps {}x{} onto {}x{} but the images are {}x{} and {}x{}",
                    flow.source_width(),
                    flow.source_height(),
                    flow.width(),
                    flow.height(),
                    sd.0,
                    sd.1,
                    td.0,
                    td.1
                )));
            }
            Ok((s.clone(), t.clone(), flow))
        })
        .collect::<Result<Vec<_>>>()?;
    for (s, t, flow) in loaded {
        flows.insert(s, t, flow);
    }
    Ok(flows)
}

fn check_manifest_images(manifest: &RunManifest, images: &Images) -> Result<()> {
    let listed = manifest.image_ids();
    let unknown: Vec<&str> = listed.iter().copied().filter(|id| !images.contains_key(*id)).collect();
    if !unknown.is_empty() {
        return Err(CosegError::Config(format!("grouping names unknown images: {}", unknown.join(", "))));
    }
    let absent: Vec<&str> = images.keys().map(String::as_str).filter(|id| !listed.contains(id)).collect();
    if !absent.is_empty() {
        return Err(CosegError::Config(format!("grouping omits images: {}", absent.join(", "))));
    }
    Ok(())
}

/// Rounds to the 16-bit grid used for fused maps on disk.
fn quantize_fused(map: FusedMap) -> FusedMap {
    let (w, h) = map.values.dims();
    let data = map.values.data().iter().map(|&v| quantize16(v) as f64 / 65535.0).collect();
    FusedMap { values: RasterPlane::new(w, h, 1, data).expect("quantized values stay in [0, 1]") }
}

fn fuse_all(
    manifest: &RunManifest,
    maps: &BTreeMap<String, Vec<RasterPlane>>,
    flows: &FlowSet,
) -> Result<BTreeMap<String, FusedMap>> {
    let per_group = manifest
        .subgroups
        .par_iter()
        .map(|s| {
            let members: Vec<&str> = s.members.iter().map(String::as_str).collect();
            fuse_sub_group(&s.key, &members, maps, flows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_group
        .into_iter()
        .flatten()
        .map(|(id, f)| (id, quantize_fused(f)))
        .collect())
}

/// 64-bit FNV-1a, used to derive a per-image seed.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn segment_all(
    cfg: &PipelineConfig,
    images: &Images,
    fused: &BTreeMap<String, FusedMap>,
) -> Result<BTreeMap<String, BinaryMask>> {
    fused
        .par_iter()
        .map(|(id, map)| {
            let outcome = segment_fused(&images[id], map, &cfg.grabcut, cfg.seed ^ fnv1a(id))?;
            if let Some(note) = &outcome.diagnostic {
                log::warn!("{id}: {note}");
            }
            Ok((id.clone(), outcome.mask))
        })
        .collect()
}

fn create_output_dir(cfg: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CosegError::io(&cfg.output_dir, e))
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| CosegError::io(&path, e))
}

fn write_manifest(cfg: &PipelineConfig, manifest: &RunManifest) -> Result<()> {
    write_text(cfg.output_dir.join(RUN_MANIFEST), &manifest.to_text())?;
    let pairs: String = manifest.required_pairs().iter().map(|(s, t)| format!("{s} {t}\n")).collect();
    write_text(cfg.output_dir.join(REQUIRED_PAIRS), &pairs)
}

fn write_fused(cfg: &PipelineConfig, fused: &BTreeMap<String, FusedMap>) -> Result<()> {
    let dir = cfg.output_dir.join(FUSED_DIR);
    fused
        .par_iter()
        .try_for_each(|(id, f)| save_plane_png16(&f.values, dir.join(format!("{id}.png"))))
}

fn write_masks(cfg: &PipelineConfig, masks: &BTreeMap<String, BinaryMask>) -> Result<()> {
    masks
        .par_iter()
        .try_for_each(|(id, m)| save_mask(m, cfg.output_dir.join(format!("{id}.png"))))
}

/// Full pipeline. Everything is validated and loaded before the first
/// file is written.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.require_dirs(true)?;
    let images = load_images(cfg)?;
    let ids: Vec<&str> = images.keys().map(String::as_str).collect();
    let maps = load_all_saliency(cfg, &images, &ids)?;
    let manifest = cluster_images(cfg, &images)?;
    let flows = load_required_flows(cfg, &manifest, &images)?;

    let fused = fuse_all(&manifest, &maps, &flows)?;
    let masks = segment_all(cfg, &images, &fused)?;

    create_output_dir(cfg)?;
    write_manifest(cfg, &manifest)?;
    if cfg.dump_fused {
        write_fused(cfg, &fused)?;
    }
    write_masks(cfg, &masks)?;
    Ok(RunSummary { manifest, masks })
}

/// Grouping stage: writes `grouping.txt` and `required_pairs.txt`.
pub fn run_cluster(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.require_dirs(false)?;
    let images = load_images(cfg)?;
    let manifest = cluster_images(cfg, &images)?;
    create_output_dir(cfg)?;
    write_manifest(cfg, &manifest)?;
    Ok(manifest)
}

/// Fusion stage: reads `grouping.txt` from the output directory and writes
/// fused maps under `fused/`.
pub fn run_fuse(cfg: &PipelineConfig) -> Result<BTreeMap<String, FusedMap>> {
    cfg.require_dirs(true)?;
    let manifest = RunManifest::load(cfg.output_dir.join(RUN_MANIFEST))?;
    let images = load_images(cfg)?;
    check_manifest_images(&manifest, &images)?;
    let ids: Vec<&str> = images.keys().map(String::as_str).collect();
    let maps = load_all_saliency(cfg, &images, &ids)?;
    let flows = load_required_flows(cfg, &manifest, &images)?;
    let fused = fuse_all(&manifest, &maps, &flows)?;
    write_fused(cfg, &fused)?;
    Ok(fused)
}

/// Segmentation stage: reads `fused/<id>.png` and writes masks.
pub fn run_segment(cfg: &PipelineConfig) -> Result<BTreeMap<String, BinaryMask>> {
    cfg.require_dirs(false)?;
    let images = load_images(cfg)?;
    let dir = cfg.output_dir.join(FUSED_DIR);
    let missing: Vec<String> = images
        .keys()
        .map(|id| dir.join(format!("{id}.png")))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CosegError::Config(format!("missing fused maps: {}", missing.join(", "))));
    }
    let fused = images
        .par_iter()
        .map(|(id, img)| {
            let path = dir.join(format!("{id}.png"));
            let values = load_gray_plane(&path)?;
            if values.dims() != img.dims() {
                return Err(CosegError::Config(format!(
                    "{} is {:?} but the image is {:?}",
                    path.display(),
                    values.dims(),
                    img.dims()
                )));
            }
            Ok((id.clone(), FusedMap { values }))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let masks = segment_all(cfg, &images, &fused)?;
    write_masks(cfg, &masks)?;
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{gen_synthetic, SyntheticSpec};
    use tempfile::tempdir;

    fn fixture(dir: &Path, spec: &SyntheticSpec) -> PipelineConfig {
        let g = gen_synthetic(spec, dir.join("data")).unwrap();
        let mut cfg = PipelineConfig::from_file(&g.config).unwrap();
        cfg.output_dir = dir.join("out");
        cfg
    }

    #[test]
    fn config_text_and_overrides() {
        let mut cfg = PipelineConfig::default();
        let text = "# comment\ninput_dir = imgs\nsaliency-dirs = a, b ,c\nseed=7\ngc_gamma = 25.5\ndump_fused = yes\n";
        cfg.apply_text(text, Path::new("/base"), Path::new("x.conf")).unwrap();
        assert_eq!(cfg.input_dir, PathBuf::from("/base/imgs"));
        assert_eq!(cfg.saliency_dirs.len(), 3);
        assert_eq!(cfg.saliency_dirs[1], PathBuf::from("/base/b"));
        assert_eq!((cfg.seed, cfg.grabcut.gamma, cfg.dump_fused), (7, 25.5, true));
        cfg.set("seed", "9", Path::new(".")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert!(cfg.apply_text("colour = red\n", Path::new("."), Path::new("x.conf")).is_err());
        assert!(cfg.apply_text("no equals sign\n", Path::new("."), Path::new("x.conf")).is_err());
        assert!(cfg.set("k_min", "two", Path::new(".")).is_err());
        for key in CONFIG_KEYS {
            let value = match key {
                "dump_fused" => "false",
                "gc_gamma" => "1.5",
                k if k.starts_with('k') || k.starts_with("gc") || k == "seed" => "3",
                _ => "p",
            };
            cfg.set(key, value, Path::new(".")).unwrap();
        }
    }

    #[test]
    fn manifest_round_trip_and_pairs() {
        let m = RunManifest {
            subgroups: vec![
                SubGroupEntry { key: "b".into(), members: vec!["a".into(), "b".into(), "c".into()] },
                SubGroupEntry { key: "d".into(), members: vec!["d".into()] },
            ],
        };
        let text = m.to_text();
        assert!(text.starts_with("K 2\nSUBGROUP 1 KEY b\nMEMBER 1 a\n"));
        assert_eq!(RunManifest::parse(&text, Path::new("g")).unwrap(), m);
        let pairs = m.required_pairs();
        assert_eq!(pairs.len(), 4);
        assert_eq!(pairs[0], ("a".to_string(), "b".to_string()));
        assert_eq!(pairs[1], ("b".to_string(), "a".to_string()));
        assert!(RunManifest::parse("SUBGROUP 1 KEY a\nMEMBER 1 b\n", Path::new("g")).is_err());
        assert!(RunManifest::parse("SUBGROUP 2 KEY a\nMEMBER 2 a\n", Path::new("g")).is_err());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(""), 0xcbf29ce484222325);
        assert_eq!(fnv1a("a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn single_image_single_source_matches_direct_segmentation() {
        let dir = tempdir().unwrap();
        let spec = SyntheticSpec { group_size: 1, sources: 1, seed: 4, ..Default::default() };
        let cfg = fixture(dir.path(), &spec);
        let summary = run_pipeline(&cfg).unwrap();
        let img = load_image(cfg.input_dir.join("img00.png")).unwrap();
        let map = load_saliency(cfg.saliency_dirs[0].join("img00.png"), 64, 64).unwrap();
        let direct = segment_fused(&img, &quantize_fused(FusedMap { values: map }), &cfg.grabcut, cfg.seed ^ fnv1a("img00"))
            .unwrap()
            .mask;
        assert_eq!(summary.masks["img00"], direct);
        assert!(cfg.output_dir.join("img00.png").is_file());
        assert_eq!(fs::read_to_string(cfg.output_dir.join(REQUIRED_PAIRS)).unwrap(), "");
    }

    #[test]
    fn missing_saliency_fails_before_writing() {
        let dir = tempdir().unwrap();
        let cfg = fixture(dir.path(), &SyntheticSpec { group_size: 2, ..Default::default() });
        let victim = cfg.saliency_dirs[2].join("img01.png");
        fs::remove_file(&victim).unwrap();
        match run_pipeline(&cfg) {
            Err(CosegError::Config(msg)) => assert!(msg.contains(&victim.display().to_string())),
            other => panic!("expected a config error, got {other:?}"),
        }
        assert!(!cfg.output_dir.exists());
    }

    #[test]
    fn missing_flow_is_named() {
        let dir = tempdir().unwrap();
        let cfg = fixture(dir.path(), &SyntheticSpec { group_size: 2, ..Default::default() });
        let manifest = cfg.flow_manifest.clone().unwrap();
        let kept: String = fs::read_to_string(&manifest)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("img01 img00"))
            .map(|l| format!("{l}\n"))
            .collect();
        fs::write(&manifest, kept).unwrap();
        match run_pipeline(&cfg) {
            Err(CosegError::Config(msg)) => assert!(msg.contains("img01 -> img00"), "{msg}"),
            other => panic!("expected a config error, got {other:?}"),
        }
        assert!(!cfg.output_dir.exists());
    }

    #[test]
    fn staged_run_matches_monolithic_run() {
        let dir = tempdir().unwrap();
        let spec = SyntheticSpec { group_size: 4, corrupted_source: Some(2), shift: (2, 1), seed: 3, ..Default::default() };
        let mut whole = fixture(dir.path(), &spec);
        whole.dump_fused = true;
        let mut staged = whole.clone();
        staged.output_dir = dir.path().join("staged");
        let summary = run_pipeline(&whole).unwrap();
        run_cluster(&staged).unwrap();
        run_fuse(&staged).unwrap();
        let masks = run_segment(&staged).unwrap();
        assert_eq!(summary.masks, masks);
        for id in summary.masks.keys() {
            for rel in [format!("{id}.png"), format!("fused/{id}.png")] {
                assert_eq!(
                    fs::read(whole.output_dir.join(&rel)).unwrap(),
                    fs::read(staged.output_dir.join(&rel)).unwrap(),
                    "{rel}"
                );
            }
        }
        assert_eq!(
            fs::read(whole.output_dir.join(RUN_MANIFEST)).unwrap(),
            fs::read(staged.output_dir.join(RUN_MANIFEST)).unwrap()
        );
    }
}
