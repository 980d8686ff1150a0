//! File formats: PNG/JPEG rasters, mask PNGs, Middlebury `.flo` flow
//! files and the pair manifest that ties flows to image pairs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageFormat, Luma};

use crate::error::{CosegError, Result};
use crate::raster::{BinaryMask, FlowField, RasterPlane};

/// Magic number opening every Middlebury `.flo` file.
pub const FLO_MAGIC: f32 = 202021.25;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CosegError::io(path, e))
}

fn decode(path: &Path, allowed: &[ImageFormat]) -> Result<DynamicImage> {
    let bytes = read_bytes(path)?;
    let format = image::guess_format(&bytes)
        .map_err(|_| CosegError::format(path, "unrecognized image format"))?;
    if !allowed.contains(&format) {
        return Err(CosegError::format(
            path,
            format!("unsupported image format {format:?}"),
        ));
    }
    image::load_from_memory_with_format(&bytes, format).map_err(|e| match e {
        image::ImageError::Unsupported(u) => CosegError::format(path, u.to_string()),
        image::ImageError::IoError(io) => CosegError::io(path, io),
        other => CosegError::io(path, io::Error::new(io::ErrorKind::InvalidData, other)),
    })
}

fn is_sixteen_bit(img: &DynamicImage) -> bool {
    matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    )
}

/// Loads a PNG or JPEG as a 3-channel plane with values in `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterPlane> {
    let path = path.as_ref();
    let img = decode(path, &[ImageFormat::Png, ImageFormat::Jpeg])?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = if is_sixteen_bit(&img) {
        img.to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect()
    } else {
        img.to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 255.0)
            .collect()
    };
    RasterPlane::new(w, h, 3, data)
}

/// Loads a single-channel saliency PNG (8- or 16-bit) and resamples it
/// to `target_w` x `target_h`.
pub fn load_saliency(
    path: impl AsRef<Path>,
    target_w: usize,
    target_h: usize,
) -> Result<RasterPlane> {
    let path = path.as_ref();
    let plane = load_gray_plane(path)?;
    plane.resample_bilinear(target_w, target_h)
}

/// Loads a single-channel PNG at native resolution.
pub fn load_gray_plane(path: impl AsRef<Path>) -> Result<RasterPlane> {
    let path = path.as_ref();
    let img = decode(path, &[ImageFormat::Png])?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
        other => {
            return Err(CosegError::format(
                path,
                format!("expected a single-channel map, got {:?}", other.color()),
            ))
        }
    };
    RasterPlane::new(w, h, 1, data)
}

/// Loads a mask; any non-zero color channel counts as foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = decode(path, &[ImageFormat::Png])?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let bits = img
        .to_rgb16()
        .pixels()
        .map(|p| p.0.iter().any(|&c| c != 0))
        .collect();
    BinaryMask::new(w, h, bits)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CosegError::io(parent, e))?;
        }
    }
    Ok(())
}

fn save_image(img: &DynamicImage, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    img.save_with_format(path, ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => CosegError::io(path, io),
        other => CosegError::io(path, io::Error::other(other)),
    })
}

/// Writes an 8-bit gray PNG with foreground 255 and background 0.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let raw = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("mask buffer matches dimensions");
    save_image(&DynamicImage::ImageLuma8(buf), path.as_ref())
}

/// Quantizes channel 0 of `plane` to 8 bits and writes it as a gray PNG.
pub fn save_plane_png8(plane: &RasterPlane, path: impl AsRef<Path>) -> Result<()> {
    let raw = (0..plane.width() * plane.height())
        .map(|i| (plane.data()[i * plane.channels()] * 255.0).round() as u8)
        .collect();
    let buf = GrayImage::from_raw(plane.width() as u32, plane.height() as u32, raw)
        .expect("buffer matches dimensions");
    save_image(&DynamicImage::ImageLuma8(buf), path.as_ref())
}

/// Writes channel 0 of `plane` as a 16-bit gray PNG.
pub fn save_plane_png16(plane: &RasterPlane, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = image::ImageBuffer::<Luma<u16>, Vec<u16>>::new(
        plane.width() as u32,
        plane.height() as u32,
    );
    for (i, px) in buf.pixels_mut().enumerate() {
        px.0[0] = quantize16(plane.data()[i * plane.channels()]);
    }
    save_image(&DynamicImage::ImageLuma16(buf), path.as_ref())
}

pub(crate) fn quantize16(v: f64) -> u16 {
    (v * 65535.0).round() as u16
}

/// Reads a Middlebury `.flo` file. Source dimensions default to the target
/// dimensions; the pair manifest overrides them.
pub fn load_flow(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    if bytes.len() < 12 {
        return Err(CosegError::format(path, "flow file shorter than its header"));
    }
    let magic = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(CosegError::format(path, format!("bad flow magic {magic}")));
    }
    let w = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let h = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if w <= 0 || h <= 0 {
        return Err(CosegError::format(path, format!("bad flow size {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = 12 + 8 * w * h;
    if bytes.len() != expected {
        return Err(CosegError::format(
            path,
            format!("flow payload is {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let mut du = Vec::with_capacity(w * h);
    let mut dv = Vec::with_capacity(w * h);
    for pair in bytes[12..].chunks_exact(8) {
        du.push(f32::from_le_bytes(pair[0..4].try_into().unwrap()));
        dv.push(f32::from_le_bytes(pair[4..8].try_into().unwrap()));
    }
    FlowField::new(w, h, du, dv).map_err(|e| CosegError::format(path, e.to_string()))
}

pub fn save_flow(flow: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(12 + 8 * flow.du().len());
    bytes.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    bytes.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    bytes.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for (u, v) in flow.du().iter().zip(flow.dv()) {
        bytes.extend_from_slice(&u.to_le_bytes());
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    ensure_parent(path)?;
    fs::write(path, bytes).map_err(|e| CosegError::io(path, e))
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Image files directly inside `dir` as `(image_id, path)`, sorted by id.
/// The image id is the file stem.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| CosegError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CosegError::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        out.push((stem.to_string(), path));
    }
    out.sort();
    for pair in out.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(CosegError::Config(format!(
                "images {} and {} share the id {}",
                pair[0].1.display(),
                pair[1].1.display(),
                pair[0].0
            )));
        }
    }
    Ok(out)
}

/// Maps a file name or stem written in a manifest to an image id.
pub fn image_id_of(name: &str) -> String {
    let p = Path::new(name);
    match p.extension().and_then(|e| e.to_str()) {
        Some(ext) if IMAGE_EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) => p
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(name)
            .to_string(),
        _ => name.to_string(),
    }
}

/// One ordered image pair and the flow that warps `source` into `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairEntry {
    pub source: String,
    pub target: String,
    pub flo_path: PathBuf,
    pub source_width: usize,
    pub source_height: usize,
}

impl PairEntry {
    /// Loads the flow and stamps the manifest's source dimensions on it.
    pub fn load(&self) -> Result<FlowField> {
        Ok(load_flow(&self.flo_path)?.with_source_dims(self.source_width, self.source_height))
    }
}

/// Text manifest: `<source_image> <target_image> <flo_path> <source_w> <source_h>`
/// per line. Relative flow paths resolve against the manifest's directory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairManifest {
    pub entries: Vec<PairEntry>,
}

impl PairManifest {
    pub fn parse(text: &str, base_dir: &Path, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(CosegError::format(
                    origin,
                    format!("line {}: expected 5 fields, got {}", lineno + 1, fields.len()),
                ));
            }
            let dim = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    CosegError::format(origin, format!("line {}: bad dimension {s:?}", lineno + 1))
                })
            };
            let flo = PathBuf::from(fields[2]);
            entries.push(PairEntry {
                source: fields[0].to_string(),
                target: fields[1].to_string(),
                flo_path: if flo.is_absolute() { flo } else { base_dir.join(flo) },
                source_width: dim(fields[3])?,
                source_height: dim(fields[4])?,
            });
        }
        Ok(PairManifest { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CosegError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, path)
    }

    /// Serializes with flow paths as given (callers choose relative or absolute).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                e.source,
                e.target,
                e.flo_path.display(),
                e.source_width,
                e.source_height
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};
    use tempfile::tempdir;

    #[test]
    fn red_png_loads_as_unit_red() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("red.png");
        RgbImage::from_pixel(2, 2, Rgb([255, 0, 0])).save(&path).unwrap();
        let plane = load_image(&path).unwrap();
        assert_eq!(plane.dims(), (2, 2));
        for i in 0..4 {
            assert_eq!(plane.color(i), [1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn gray_png_replicates_into_three_channels() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gray.png");
        GrayImage::from_pixel(3, 1, Luma([128])).save(&path).unwrap();
        let plane = load_image(&path).unwrap();
        assert_eq!(plane.channels(), 3);
        for v in plane.data() {
            assert!((v - 0.50196).abs() < 1e-5);
            assert_eq!(*v, 128.0 / 255.0);
        }
    }

    #[test]
    fn truncated_png_is_io_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.png");
        RgbImage::from_pixel(16, 16, Rgb([10, 20, 30])).save(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_image(&path), Err(CosegError::Io { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_image("/nonexistent/x.png"),
            Err(CosegError::Io { .. })
        ));
    }

    #[test]
    fn non_png_jpeg_is_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.gif");
        fs::write(&path, b"GIF89a\x01\x00\x01\x00\x00\x00\x00;").unwrap();
        assert!(matches!(load_image(&path), Err(CosegError::Format { .. })));
    }

    #[test]
    fn saliency_rejects_rgb() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        RgbImage::from_pixel(4, 4, Rgb([1, 2, 3])).save(&path).unwrap();
        assert!(matches!(
            load_saliency(&path, 4, 4),
            Err(CosegError::Format { .. })
        ));
    }

    #[test]
    fn saliency_16bit_scaling_and_resample() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s16.png");
        let buf = image::ImageBuffer::<Luma<u16>, Vec<u16>>::from_pixel(10, 10, Luma([65535]));
        DynamicImage::ImageLuma16(buf).save(&path).unwrap();
        let plane = load_saliency(&path, 20, 20).unwrap();
        assert_eq!(plane.dims(), (20, 20));
        assert!(plane.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn saliency_same_size_within_one_level() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.png");
        let img = GrayImage::from_fn(6, 5, |x, y| Luma([(x * 40 + y * 3) as u8]));
        img.save(&path).unwrap();
        let plane = load_saliency(&path, 6, 5).unwrap();
        for (i, p) in img.pixels().enumerate() {
            assert!((plane.data()[i] - p.0[0] as f64 / 255.0).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn mask_files_are_byte_stable() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        let mask = BinaryMask::from_fn(7, 5, |x, y| (x * y) % 3 == 1);
        save_mask(&mask, &a).unwrap();
        let back = load_mask(&a).unwrap();
        assert_eq!(back, mask);
        save_mask(&back, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn all_true_mask_writes_255() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.png");
        save_mask(&BinaryMask::from_fn(2, 2, |_, _| true), &path).unwrap();
        let img = image::open(&path).unwrap().into_luma8();
        assert!(img.pixels().all(|p| p.0[0] == 255));
        save_mask(&BinaryMask::empty(2, 2), &path).unwrap();
        let img = image::open(&path).unwrap().into_luma8();
        assert!(img.pixels().all(|p| p.0[0] == 0));
    }

    #[test]
    fn mask_with_mid_gray_is_foreground() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gt.png");
        GrayImage::from_raw(3, 1, vec![0, 128, 255]).unwrap().save(&path).unwrap();
        assert_eq!(load_mask(&path).unwrap().bits(), &[false, true, true]);
    }

    #[test]
    fn unwritable_mask_path_is_io_error() {
        let dir = tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = save_mask(&BinaryMask::empty(1, 1), blocker.join("m.png"));
        assert!(matches!(err, Err(CosegError::Io { .. })));
    }

    fn raw_flo(magic: f32, w: i32, h: i32, pairs: &[(f32, f32)]) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&magic.to_le_bytes());
        b.extend_from_slice(&w.to_le_bytes());
        b.extend_from_slice(&h.to_le_bytes());
        for (u, v) in pairs {
            b.extend_from_slice(&u.to_le_bytes());
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    #[test]
    fn zero_flow_file_is_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("id.flo");
        fs::write(&path, raw_flo(FLO_MAGIC, 2, 1, &[(0.0, 0.0), (0.0, 0.0)])).unwrap();
        let flow = load_flow(&path).unwrap();
        assert_eq!(flow, FlowField::identity(2, 1));
    }

    #[test]
    fn flow_format_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.flo");
        fs::write(&path, raw_flo(0.0, 2, 1, &[(0.0, 0.0), (0.0, 0.0)])).unwrap();
        assert!(matches!(load_flow(&path), Err(CosegError::Format { .. })));
        fs::write(&path, raw_flo(FLO_MAGIC, 2, 2, &[(0.0, 0.0)])).unwrap();
        assert!(matches!(load_flow(&path), Err(CosegError::Format { .. })));
        fs::write(&path, raw_flo(FLO_MAGIC, 1, 1, &[(f32::NAN, 0.0)])).unwrap();
        assert!(matches!(load_flow(&path), Err(CosegError::Format { .. })));
    }

    #[test]
    fn constant_flow_round_trips_through_bytes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.flo");
        let flow = FlowField::constant(3, 3, 1.5, -0.5);
        save_flow(&flow, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 12 + 8 * 9);
        let back = load_flow(&path).unwrap();
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(back.displacement(x, y), (1.5, -0.5));
            }
        }
    }

    #[test]
    fn image_listing_uses_stems() {
        let dir = tempdir().unwrap();
        for name in ["b.jpg", "a.png", "notes.txt"] {
            fs::write(dir.path().join(name), b"").unwrap();
        }
        fs::create_dir(dir.path().join("GT")).unwrap();
        let ids: Vec<String> = list_images(dir.path()).unwrap().into_iter().map(|(id, _)| id).collect();
        assert_eq!(ids, vec!["a", "b"]);
        assert_eq!(image_id_of("img_01.png"), "img_01");
        assert_eq!(image_id_of("img.v2"), "img.v2");
    }

    #[test]
    fn manifest_resolves_relative_paths() {
        let text = "# comment\na.png b.png flows/ab.flo 64 48\n\n";
        let m = PairManifest::parse(text, Path::new("/data"), Path::new("/data/pairs.txt")).unwrap();
        assert_eq!(m.entries.len(), 1);
        assert_eq!(m.entries[0].flo_path, PathBuf::from("/data/flows/ab.flo"));
        assert_eq!((m.entries[0].source_width, m.entries[0].source_height), (64, 48));
        assert!(PairManifest::parse("a b c 1", Path::new("."), Path::new("p")).is_err());
    }
}
