//! Synthetic co-segmentation fixture: one colored ellipse translated across
//! a group of textured images, with exact masks, noisy saliency maps and
//! translation flows.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CosegError, Result};
use crate::io::{save_flow, save_mask, save_plane_png8, PairEntry, PairManifest};
use crate::raster::{BinaryMask, FlowField, RasterPlane};

pub const SALIENCY_BLUR_SIGMA: f64 = 2.0;
pub const SALIENCY_NOISE: f64 = 0.1;
/// Class directory name under `<out>/dataset/`.
pub const SYNTHETIC_CLASS: &str = "synthetic";

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub group_size: usize,
    pub image_size: (usize, usize),
    pub sources: usize,
    /// 1-based index of the source whose maps are inverted.
    pub corrupted_source: Option<usize>,
    /// Translation of the object between consecutive images.
    pub shift: (i32, i32),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            group_size: 4,
            image_size: (64, 64),
            sources: 4,
            corrupted_source: None,
            shift: (3, 0),
            seed: 0,
        }
    }
}

/// Paths of a generated fixture.
#[derive(Clone, Debug)]
pub struct SyntheticGroup {
    pub root: PathBuf,
    pub dataset_dir: PathBuf,
    pub image_dir: PathBuf,
    pub saliency_dirs: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub config: PathBuf,
    pub image_ids: Vec<String>,
    /// Object offset of each image relative to the image center.
    pub offsets: Vec<(i32, i32)>,
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(values: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * values[y * w + clamp(x as i64 + j as i64 - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * tmp[clamp(y as i64 + j as i64 - r, h) * w + x])
                .sum();
        }
    }
    out
}

fn validate(spec: &SyntheticSpec) -> Result<()> {
    let (w, h) = spec.image_size;
    if spec.group_size == 0 || spec.sources == 0 {
        return Err(CosegError::Argument("group size and source count must be at least 1".into()));
    }
    if w < 8 || h < 8 {
        return Err(CosegError::Argument(format!("image size {w}x{h} is below 8x8")));
    }
    if let Some(c) = spec.corrupted_source {
        if c == 0 || c > spec.sources {
            return Err(CosegError::Argument(format!(
                "corrupted source {c} is outside 1..={}",
                spec.sources
            )));
        }
    }
    Ok(())
}

fn offsets(spec: &SyntheticSpec) -> Vec<(i32, i32)> {
    let n = spec.group_size as i32;
    let centre = |s: i32| (n - 1) * s / 2;
    (0..n)
        .map(|i| (i * spec.shift.0 - centre(spec.shift.0), i * spec.shift.1 - centre(spec.shift.1)))
        .collect()
}

struct Scene {
    centre: (f64, f64),
    radii: (f64, f64),
    color: [f64; 3],
}

impl Scene {
    fn random(rng: &mut ChaCha8Rng, (w, h): (usize, usize)) -> Self {
        let warm = [
            0.75 + 0.2 * rng.gen::<f64>(),
            0.25 + 0.3 * rng.gen::<f64>(),
            0.05 + 0.2 * rng.gen::<f64>(),
        ];
        Scene {
            centre: ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0),
            radii: (w as f64 * rng.gen_range(0.16..0.22), h as f64 * rng.gen_range(0.13..0.19)),
            color: warm,
        }
    }

    fn inside(&self, x: usize, y: usize, offset: (i32, i32)) -> bool {
        let dx = (x as f64 - self.centre.0 - offset.0 as f64) / self.radii.0;
        let dy = (y as f64 - self.centre.1 - offset.1 as f64) / self.radii.1;
        dx * dx + dy * dy <= 1.0
    }
}

fn render(scene: &Scene, offset: (i32, i32), size: (usize, usize), rng: &mut ChaCha8Rng) -> (RgbImage, BinaryMask) {
    let (w, h) = size;
    let fx = rng.gen_range(0.15..0.45);
    let fy = rng.gen_range(0.15..0.45);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mask = BinaryMask::from_fn(w, h, |x, y| scene.inside(x, y, offset));
    let mut img = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let rgb = if mask.get(x, y) {
                let n = rng.gen_range(-0.04..0.04);
                scene.color.map(|c| c + n)
            } else {
                let wave = ((x as f64 * fx + phase).sin() * (y as f64 * fy).cos() + 1.0) / 2.0;
                let n = rng.gen_range(-0.08..0.08);
                [0.1 + 0.2 * wave + n, 0.3 + 0.3 * (1.0 - wave) + n, 0.55 + 0.3 * wave + n]
            };
            let px = rgb.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8);
            img.put_pixel(x as u32, y as u32, Rgb(px));
        }
    }
    (img, mask)
}

fn noisy_saliency(gt: &BinaryMask, invert: bool, rng: &mut ChaCha8Rng) -> RasterPlane {
    let (w, h) = gt.dims();
    let hard: Vec<f64> = gt.bits().iter().map(|&b| b as u8 as f64).collect();
    let blurred = gaussian_blur(&hard, w, h, SALIENCY_BLUR_SIGMA);
    let data = blurred
        .into_iter()
        .map(|v| {
            let v = (v + rng.gen_range(-SALIENCY_NOISE..SALIENCY_NOISE)).clamp(0.0, 1.0);
            if invert {
                1.0 - v
            } else {
                v
            }
        })
        .collect();
    RasterPlane::new(w, h, 1, data).expect("values clamped to [0, 1]")
}

fn write_config(group: &SyntheticGroup) -> Result<()> {
    let rel = |p: &Path| p.strip_prefix(&group.root).unwrap_or(p).display().to_string();
    let dirs: Vec<String> = group.saliency_dirs.iter().map(|d| rel(d)).collect();
    let text = format!(
        "input_dir = {}\nsaliency_dirs = {}\nflow_manifest = {}\noutput_dir = out\n",
        rel(&group.image_dir),
        dirs.join(","),
        rel(&group.manifest)
    );
    fs::write(&group.config, text).map_err(|e| CosegError::io(&group.config, e))
}

/// Writes a synthetic group under `out`:
///
/// ```text
/// out/dataset/synthetic/<id>.png      images
/// out/dataset/synthetic/GT/<id>.png   exact masks
/// out/saliency/src<j>/<id>.png        one map per source (j is 1-based)
/// out/flows/<a>_to_<b>.flo            translation flow for every ordered pair
/// out/pairs.txt                       pair manifest
/// out/coseg.conf                      pipeline config pointing at the above
/// ```
pub fn gen_synthetic(spec: &SyntheticSpec, out: impl AsRef<Path>) -> Result<SyntheticGroup> {
    validate(spec)?;
    let root = out.as_ref().to_path_buf();
    let (w, h) = spec.image_size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scene = Scene::random(&mut rng, spec.image_size);
    let offsets = offsets(spec);
    let image_ids: Vec<String> = (0..spec.group_size).map(|i| format!("img{i:02}")).collect();

    let dataset_dir = root.join("dataset");
    let image_dir = dataset_dir.join(SYNTHETIC_CLASS);
    let gt_dir = image_dir.join(super::dataset::GT_DIR);
    let saliency_dirs: Vec<PathBuf> =
        (1..=spec.sources).map(|j| root.join("saliency").join(format!("src{j}"))).collect();
    let flow_dir = root.join("flows");
    for dir in [&gt_dir, &flow_dir].into_iter().chain(&saliency_dirs) {
        fs::create_dir_all(dir).map_err(|e| CosegError::io(dir, e))?;
    }

    for (id, &offset) in image_ids.iter().zip(&offsets) {
        let (img, gt) = render(&scene, offset, spec.image_size, &mut rng);
        let img_path = image_dir.join(format!("{id}.png"));
        img.save(&img_path)
            .map_err(|e| CosegError::io(&img_path, std::io::Error::other(e)))?;
        save_mask(&gt, gt_dir.join(format!("{id}.png")))?;
        for (j, dir) in saliency_dirs.iter().enumerate() {
            let invert = spec.corrupted_source == Some(j + 1);
            save_plane_png8(&noisy_saliency(&gt, invert, &mut rng), dir.join(format!("{id}.png")))?;
        }
    }

    let mut manifest = PairManifest::default();
    for (a, off_a) in image_ids.iter().zip(&offsets) {
        for (b, off_b) in image_ids.iter().zip(&offsets) {
            if a == b {
                continue;
            }
            let name = format!("{a}_to_{b}.flo");
            let flow = FlowField::constant(w, h, (off_a.0 - off_b.0) as f32, (off_a.1 - off_b.1) as f32);
            save_flow(&flow, flow_dir.join(&name))?;
            manifest.entries.push(PairEntry {
                source: a.clone(),
                target: b.clone(),
                flo_path: Path::new("flows").join(name),
                source_width: w,
                source_height: h,
            });
        }
    }
    let manifest_path = root.join("pairs.txt");
    fs::write(&manifest_path, manifest.to_text()).map_err(|e| CosegError::io(&manifest_path, e))?;

    let group = SyntheticGroup {
        config: root.join("coseg.conf"),
        root,
        dataset_dir,
        image_dir,
        saliency_dirs,
        manifest: manifest_path,
        image_ids,
        offsets,
    };
    write_config(&group)?;
    Ok(group)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{load_gray_plane, load_mask};
    use tempfile::tempdir;

    #[test]
    fn blur_preserves_constants_and_mass() {
        let flat = vec![0.7; 100];
        assert!(gaussian_blur(&flat, 10, 10, 2.0).iter().all(|v| (v - 0.7).abs() < 1e-12));
        let k = gaussian_kernel(2.0);
        assert_eq!(k.len(), 13);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_image_saliency_matches_gt_after_threshold() {
        let dir = tempdir().unwrap();
        let spec = SyntheticSpec { group_size: 1, sources: 3, seed: 9, ..Default::default() };
        let g = gen_synthetic(&spec, dir.path()).unwrap();
        let gt = load_mask(g.image_dir.join("GT/img00.png")).unwrap();
        for src in &g.saliency_dirs {
            let map = load_gray_plane(src.join("img00.png")).unwrap();
            let wrong = map
                .data()
                .iter()
                .zip(gt.bits())
                .filter(|(&v, &b)| (v > 0.5) != b)
                .count();
            assert!(wrong as f64 <= 0.02 * gt.bits().len() as f64, "{wrong} pixels disagree");
        }
        assert!(PairManifest::load(&g.manifest).unwrap().entries.is_empty());
    }

    #[test]
    fn flows_are_constant_translations() {
        let dir = tempdir().unwrap();
        let spec = SyntheticSpec { group_size: 3, shift: (3, 0), ..Default::default() };
        let g = gen_synthetic(&spec, dir.path()).unwrap();
        let manifest = PairManifest::load(&g.manifest).unwrap();
        assert_eq!(manifest.entries.len(), 6);
        for e in &manifest.entries {
            let flow = e.load().unwrap();
            let ia = g.image_ids.iter().position(|i| *i == e.source).unwrap() as f32;
            let ib = g.image_ids.iter().position(|i| *i == e.target).unwrap() as f32;
            assert!(flow.du().iter().all(|&d| d == 3.0 * (ia - ib)));
            assert!(flow.dv().iter().all(|&d| d == 0.0));
        }
        let a = load_mask(g.image_dir.join("GT/img00.png")).unwrap();
        let b = load_mask(g.image_dir.join("GT/img01.png")).unwrap();
        assert_eq!(a.count(), b.count());
        for y in 0..64 {
            for x in 0..61 {
                assert_eq!(a.get(x, y), b.get(x + 3, y));
            }
        }
    }

    #[test]
    fn exactly_one_source_is_inverted() {
        let dir = tempdir().unwrap();
        let spec = SyntheticSpec { group_size: 2, corrupted_source: Some(2), ..Default::default() };
        let g = gen_synthetic(&spec, dir.path()).unwrap();
        for id in &g.image_ids {
            let gt = load_mask(g.image_dir.join(format!("GT/{id}.png"))).unwrap();
            let inverted: Vec<bool> = g
                .saliency_dirs
                .iter()
                .map(|d| {
                    let m = load_gray_plane(d.join(format!("{id}.png"))).unwrap();
                    let agree = m.data().iter().zip(gt.bits()).filter(|(&v, &b)| (v > 0.5) == b).count();
                    agree < gt.bits().len() / 2
                })
                .collect();
            assert_eq!(inverted, vec![false, true, false, false]);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
        let spec = SyntheticSpec { group_size: 2, seed: 5, ..Default::default() };
        gen_synthetic(&spec, a.path()).unwrap();
        gen_synthetic(&spec, b.path()).unwrap();
        for rel in ["dataset/synthetic/img01.png", "saliency/src3/img00.png", "pairs.txt"] {
            assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap());
        }
    }

    #[test]
    fn bad_corruption_index_rejected() {
        let dir = tempdir().unwrap();
        let spec = SyntheticSpec { corrupted_source: Some(5), ..Default::default() };
        assert!(matches!(gen_synthetic(&spec, dir.path()), Err(CosegError::Argument(_))));
    }
}
