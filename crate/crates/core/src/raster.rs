//! Core pixel containers shared by every stage of the pipeline.

use crate::error::{CosegError, Result};

/// Displacements whose magnitude exceeds this mark "no correspondence".
pub const FLOW_SENTINEL_THRESHOLD: f32 = 1e9;

/// Row-major grid of values in `[0, 1]`, one or three channels per pixel.
///
/// Used for input images (3 channels) as well as saliency and fused maps
/// (1 channel). Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterPlane {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl RasterPlane {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(CosegError::Argument(format!(
                "raster must have 1 or 3 channels, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(CosegError::Argument("raster dimensions must be non-zero".into()));
        }
        if data.len() != width * height * channels {
            return Err(CosegError::Argument(format!(
                "raster data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CosegError::Argument(format!(
                "raster value {bad} outside [0, 1]"
            )));
        }
        Ok(RasterPlane {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a single-channel plane from a per-pixel function.
    ///
    /// Panics if the function yields a value outside `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data).expect("from_fn produced an invalid raster")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// RGB triple of pixel `i` in row-major order. Single-channel planes
    /// replicate their value.
    pub fn color(&self, i: usize) -> [f64; 3] {
        if self.channels == 3 {
            [self.data[3 * i], self.data[3 * i + 1], self.data[3 * i + 2]]
        } else {
            let v = self.data[i];
            [v, v, v]
        }
    }

    /// Bilinear sample of channel `c` at continuous coordinates. Neighbor
    /// fetches are clamped to the grid.
    pub fn sample_bilinear(&self, c: usize, sx: f64, sy: f64) -> f64 {
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = sx - x0;
        let fy = sy - y0;
        let clamp_x = |v: f64| v.clamp(0.0, (self.width - 1) as f64) as usize;
        let clamp_y = |v: f64| v.clamp(0.0, (self.height - 1) as f64) as usize;
        let (xa, xb) = (clamp_x(x0), clamp_x(x0 + 1.0));
        let (ya, yb) = (clamp_y(y0), clamp_y(y0 + 1.0));

        let v00 = self.get(xa, ya, c);
        let v10 = self.get(xb, ya, c);
        let v01 = self.get(xa, yb, c);
        let v11 = self.get(xb, yb, c);

        let top = v00 + fx * (v10 - v00);
        let bottom = v01 + fx * (v11 - v01);
        let out = top + fy * (bottom - top);

        // keep the result inside the hull of the four taps despite rounding
        let lo = v00.min(v10).min(v01).min(v11);
        let hi = v00.max(v10).max(v01).max(v11);
        out.clamp(lo, hi)
    }

    /// Corner-aligned bilinear resampling: output corners land exactly on
    /// input corners. A one-pixel output axis samples the input center.
    pub fn resample_bilinear(&self, width: usize, height: usize) -> Result<RasterPlane> {
        if width == 0 || height == 0 {
            return Err(CosegError::Argument("resample target must be non-zero".into()));
        }
        if (width, height) == (self.width, self.height) {
            return Ok(self.clone());
        }
        let xs = corner_aligned_coords(self.width, width);
        let ys = corner_aligned_coords(self.height, height);
        let mut data = Vec::with_capacity(width * height * self.channels);
        for &sy in &ys {
            for &sx in &xs {
                for c in 0..self.channels {
                    data.push(self.sample_bilinear(c, sx, sy));
                }
            }
        }
        RasterPlane::new(width, height, self.channels, data)
    }

    /// Extracts one channel as a single-channel plane.
    pub fn channel(&self, c: usize) -> RasterPlane {
        assert!(c < self.channels);
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        RasterPlane {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }
}

/// Source coordinates for corner-aligned resampling of an axis of length
/// `src` onto `dst` samples.
pub(crate) fn corner_aligned_coords(src: usize, dst: usize) -> Vec<f64> {
    if dst == 1 {
        return vec![(src - 1) as f64 / 2.0];
    }
    let scale = (src - 1) as f64;
    let denom = (dst - 1) as f64;
    (0..dst).map(|i| i as f64 * scale / denom).collect()
}

/// Row-major boolean foreground mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(CosegError::Argument(format!(
                "mask has {} bits, expected {width}x{height}",
                bits.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Dense backward correspondence from a target frame into a source frame.
///
/// Target pixel `(x, y)` corresponds to source location
/// `(x + du, y + dv)`. Displacements beyond [`FLOW_SENTINEL_THRESHOLD`]
/// mean "no correspondence".
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    du: Vec<f32>,
    dv: Vec<f32>,
    source_width: usize,
    source_height: usize,
}

impl FlowField {
    /// Builds a flow whose source frame has the same size as the target.
    pub fn new(width: usize, height: usize, du: Vec<f32>, dv: Vec<f32>) -> Result<Self> {
        if du.len() != width * height || dv.len() != width * height {
            return Err(CosegError::Argument(format!(
                "flow component length does not match {width}x{height}"
            )));
        }
        if du.iter().chain(dv.iter()).any(|v| !v.is_finite()) {
            return Err(CosegError::Argument("flow displacements must be finite".into()));
        }
        Ok(FlowField {
            width,
            height,
            du,
            dv,
            source_width: width,
            source_height: height,
        })
    }

    pub fn identity(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, du: f32, dv: f32) -> Self {
        FlowField::new(width, height, vec![du; width * height], vec![dv; width * height])
            .expect("constant flow is well-formed")
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f32, f32),
    ) -> Result<Self> {
        let mut du = Vec::with_capacity(width * height);
        let mut dv = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                du.push(a);
                dv.push(b);
            }
        }
        FlowField::new(width, height, du, dv)
    }

    pub fn with_source_dims(mut self, source_width: usize, source_height: usize) -> Self {
        self.source_width = source_width;
        self.source_height = source_height;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn source_width(&self) -> usize {
        self.source_width
    }

    pub fn source_height(&self) -> usize {
        self.source_height
    }

    pub fn du(&self) -> &[f32] {
        &self.du
    }

    pub fn dv(&self) -> &[f32] {
        &self.dv
    }

    pub fn displacement(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.du[i], self.dv[i])
    }

    pub fn is_sentinel(&self, x: usize, y: usize) -> bool {
        let (u, v) = self.displacement(x, y);
        u.abs() > FLOW_SENTINEL_THRESHOLD || v.abs() > FLOW_SENTINEL_THRESHOLD
    }
}
