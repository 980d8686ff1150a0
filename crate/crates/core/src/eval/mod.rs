//! Scoring predicted masks against ground truth.
//!
//! Two metrics are reported: Jaccard (intersection over union) and
//! "precision", which here is pixel accuracy (fraction of pixels whose
//! label matches). Reports macro-average: per-class means first, then the
//! mean of those.

pub mod dataset;
pub mod synthetic;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CosegError, Result};
use crate::io::load_mask;
use crate::raster::BinaryMask;

pub use dataset::{load_dataset, ClassGroup, DatasetImage};
pub use synthetic::{gen_synthetic, SyntheticGroup, SyntheticSpec};

fn check_dims(pred: &BinaryMask, gt: &BinaryMask) -> Result<()> {
    if pred.dims() != gt.dims() {
        return Err(CosegError::Argument(format!(
            "mask is {:?} but ground truth is {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    Ok(())
}

/// `|pred & gt| / |pred | gt|`; two empty masks score 1.
pub fn jaccard(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred, gt)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        inter += (p && g) as usize;
        union += (p || g) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Fraction of pixels where `pred` and `gt` agree.
pub fn precision(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred, gt)?;
    let agree = pred.bits().iter().zip(gt.bits()).filter(|(p, g)| p == g).count();
    Ok(agree as f64 / pred.bits().len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageScore {
    pub class: String,
    pub image: String,
    pub jaccard: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassScore {
    pub class: String,
    pub images: usize,
    pub jaccard: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreReport {
    pub per_image: Vec<ImageScore>,
    pub per_class: Vec<ClassScore>,
    /// Mean of per-class means.
    pub overall: (f64, f64),
    /// Flat mean over all scored images.
    pub micro: (f64, f64),
    /// `(class, image)` pairs whose prediction was missing or unreadable.
    pub missing: Vec<(String, String)>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl ScoreReport {
    /// Aggregates per-image scores (in the given order) into class and
    /// overall means.
    pub fn from_scores(per_image: Vec<ImageScore>, missing: Vec<(String, String)>) -> Self {
        let mut classes: BTreeMap<&str, Vec<&ImageScore>> = BTreeMap::new();
        for s in &per_image {
            classes.entry(s.class.as_str()).or_default().push(s);
        }
        let per_class: Vec<ClassScore> = classes
            .iter()
            .map(|(class, scores)| ClassScore {
                class: class.to_string(),
                images: scores.len(),
                jaccard: mean(scores.iter().map(|s| s.jaccard)),
                precision: mean(scores.iter().map(|s| s.precision)),
            })
            .collect();
        let overall = (
            mean(per_class.iter().map(|c| c.jaccard)),
            mean(per_class.iter().map(|c| c.precision)),
        );
        let micro = (
            mean(per_image.iter().map(|s| s.jaccard)),
            mean(per_image.iter().map(|s| s.precision)),
        );
        ScoreReport {
            per_image,
            per_class,
            overall,
            micro,
            missing,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    /// Machine-readable lines: `<class> <image> <J> <P>` per image, then
    /// `MISSING <class> <image>`, `MICRO <J> <P>` and `OVERALL <J> <P>`.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.per_image {
            writeln!(out, "{} {} {:.6} {:.6}", s.class, s.image, s.jaccard, s.precision).unwrap();
        }
        for (class, image) in &self.missing {
            writeln!(out, "MISSING {class} {image}").unwrap();
        }
        writeln!(out, "MICRO {:.6} {:.6}", self.micro.0, self.micro.1).unwrap();
        writeln!(out, "OVERALL {:.6} {:.6}", self.overall.0, self.overall.1).unwrap();
        out
    }

    /// Human-readable per-class table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<20} {:>6} {:>8} {:>8}", "class", "images", "J", "P").unwrap();
        writeln!(out, "{}", "-".repeat(45)).unwrap();
        for c in &self.per_class {
            writeln!(
                out,
                "{:<20} {:>6} {:>8.4} {:>8.4}",
                c.class, c.images, c.jaccard, c.precision
            )
            .unwrap();
        }
        writeln!(out, "{}", "-".repeat(45)).unwrap();
        writeln!(
            out,
            "{:<20} {:>6} {:>8.4} {:>8.4}",
            "overall (macro)",
            self.per_image.len(),
            self.overall.0,
            self.overall.1
        )
        .unwrap();
        writeln!(
            out,
            "{:<20} {:>6} {:>8.4} {:>8.4}",
            "overall (micro)",
            self.per_image.len(),
            self.micro.0,
            self.micro.1
        )
        .unwrap();
        if !self.missing.is_empty() {
            writeln!(out, "{} prediction(s) missing", self.missing.len()).unwrap();
        }
        out
    }
}

/// Where a prediction for `image` of `class` is expected: under
/// `<preds>/<class>/` when that directory exists, else directly in `preds`.
pub fn prediction_path(preds: &Path, class: &str, image_id: &str) -> PathBuf {
    let class_dir = preds.join(class);
    let dir = if class_dir.is_dir() { class_dir } else { preds.to_path_buf() };
    dir.join(format!("{image_id}.png"))
}

/// Scores every labeled image of `dataset` against masks under `preds`.
/// Unlabeled images are skipped; missing or unreadable predictions are
/// listed in the report and excluded from the means.
pub fn score(preds: &Path, dataset: &[ClassGroup]) -> Result<ScoreReport> {
    let mut per_image = Vec::new();
    let mut missing = Vec::new();
    for group in dataset {
        for img in &group.images {
            let Some(gt) = &img.ground_truth else { continue };
            let path = prediction_path(preds, &group.name, &img.id);
            let pred = match load_mask(&path) {
                Ok(m) => m,
                Err(e) => {
                    log::warn!("no usable prediction for {}/{}: {e}", group.name, img.id);
                    missing.push((group.name.clone(), img.id.clone()));
                    continue;
                }
            };
            per_image.push(ImageScore {
                class: group.name.clone(),
                image: img.id.clone(),
                jaccard: jaccard(&pred, gt)?,
                precision: precision(&pred, gt)?,
            });
        }
    }
    Ok(ScoreReport::from_scores(per_image, missing))
}
