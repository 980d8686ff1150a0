use crate::error::{CosegError, Result};
use crate::raster::RasterPlane;

/// Initial GrabCut label of one pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeedLabel {
    HardFg,
    ProbFg,
    ProbBg,
    HardBg,
}

impl SeedLabel {
    pub fn is_foreground(self) -> bool {
        matches!(self, SeedLabel::HardFg | SeedLabel::ProbFg)
    }

    pub fn is_hard(self) -> bool {
        matches!(self, SeedLabel::HardFg | SeedLabel::HardBg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrimapSeed {
    width: usize,
    height: usize,
    labels: Vec<SeedLabel>,
}

impl TrimapSeed {
    pub fn new(width: usize, height: usize, labels: Vec<SeedLabel>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(CosegError::Argument(format!(
                "trimap has {} labels, expected {width}x{height}",
                labels.len()
            )));
        }
        Ok(TrimapSeed {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[SeedLabel] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> SeedLabel {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: SeedLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Confidence band above the Otsu threshold that becomes hard foreground.
pub const HARD_FG_MARGIN: f64 = 0.35;
/// Values at or above this are hard foreground regardless of the margin.
pub const HARD_FG_CEILING: f64 = 0.9;

/// Seeds from a thresholded map: above `t` is probable foreground, the
/// confident band `>= min(0.9, t + 0.35)` is hard foreground, and
/// below-threshold pixels on the one-pixel image border are hard background.
pub fn seeds_from_otsu(map: &RasterPlane, t: f64) -> Result<TrimapSeed> {
    if map.channels() != 1 {
        return Err(CosegError::Argument("seeding expects a single-channel map".into()));
    }
    let (w, h) = map.dims();
    let hard_level = HARD_FG_CEILING.min(t + HARD_FG_MARGIN);
    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = map.get(x, y, 0);
            let border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            labels.push(if v > t {
                if v >= hard_level {
                    SeedLabel::HardFg
                } else {
                    SeedLabel::ProbFg
                }
            } else if border {
                SeedLabel::HardBg
            } else {
                SeedLabel::ProbBg
            });
        }
    }
    TrimapSeed::new(w, h, labels)
}
