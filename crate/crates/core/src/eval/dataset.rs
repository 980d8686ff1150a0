//! Dataset directory layout: one subdirectory per class, each holding
//! images and a `GT/` subdirectory of same-stem masks.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CosegError, Result};
use crate::io::{list_images, load_mask};
use crate::raster::BinaryMask;

/// Name of the per-class ground-truth subdirectory.
pub const GT_DIR: &str = "GT";

#[derive(Clone, Debug)]
pub struct DatasetImage {
    pub id: String,
    pub path: PathBuf,
    /// `None` for unlabeled images; they are skipped when scoring.
    pub ground_truth: Option<BinaryMask>,
}

#[derive(Clone, Debug)]
pub struct ClassGroup {
    pub name: String,
    pub images: Vec<DatasetImage>,
}

impl ClassGroup {
    pub fn labeled_count(&self) -> usize {
        self.images.iter().filter(|i| i.ground_truth.is_some()).count()
    }
}

fn load_ground_truth(class_dir: &Path, id: &str, image_path: &Path) -> Option<BinaryMask> {
    let gt_path = class_dir.join(GT_DIR).join(format!("{id}.png"));
    if !gt_path.is_file() {
        return None;
    }
    let mask = match load_mask(&gt_path) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("treating {} as unlabeled: {e}", image_path.display());
            return None;
        }
    };
    match image::image_dimensions(image_path) {
        Ok((w, h)) if (w as usize, h as usize) == mask.dims() => Some(mask),
        Ok((w, h)) => {
            log::warn!(
                "treating {} as unlabeled: ground truth is {:?}, image is {w}x{h}",
                image_path.display(),
                mask.dims()
            );
            None
        }
        Err(e) => {
            log::warn!("cannot read {}: {e}", image_path.display());
            None
        }
    }
}

/// Loads a single class directory.
pub fn load_class(dir: impl AsRef<Path>) -> Result<ClassGroup> {
    let dir = dir.as_ref();
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CosegError::Argument(format!("bad class directory {}", dir.display())))?
        .to_string();
    let images = list_images(dir)?
        .into_iter()
        .map(|(id, path)| {
            let ground_truth = load_ground_truth(dir, &id, &path);
            DatasetImage { id, path, ground_truth }
        })
        .collect();
    Ok(ClassGroup { name, images })
}

/// Loads every class subdirectory of `root`, sorted by class name.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Vec<ClassGroup>> {
    let root = root.as_ref();
    let entries = fs::read_dir(root).map_err(|e| CosegError::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CosegError::io(root, e))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    let mut groups = Vec::new();
    for dir in dirs {
        let group = load_class(&dir)?;
        if !group.images.is_empty() {
            groups.push(group);
        }
    }
    if groups.is_empty() {
        return Err(CosegError::Argument(format!(
            "no class directories with images under {}",
            root.display()
        )));
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::save_mask;
    use image::{Rgb, RgbImage};
    use tempfile::tempdir;

    fn write_image(path: &Path, w: u32, h: u32) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        RgbImage::from_pixel(w, h, Rgb([10, 20, 30])).save(path).unwrap();
    }

    #[test]
    fn classes_with_and_without_gt() {
        let root = tempdir().unwrap();
        for class in ["cat", "dog"] {
            for i in 0..3 {
                write_image(&root.path().join(class).join(format!("{class}{i}.png")), 4, 3);
            }
        }
        let gt = BinaryMask::from_fn(4, 3, |x, _| x < 2);
        for i in 0..3 {
            save_mask(&gt, root.path().join("cat/GT").join(format!("cat{i}.png"))).unwrap();
        }
        let groups = load_dataset(root.path()).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].name, "cat");
        assert_eq!(groups[0].labeled_count(), 3);
        assert_eq!(groups[0].images[1].ground_truth.as_ref().unwrap(), &gt);
        assert_eq!(groups[1].images.len(), 3);
        assert_eq!(groups[1].labeled_count(), 0);
    }

    #[test]
    fn corrupt_or_mismatched_gt_is_unlabeled() {
        let root = tempdir().unwrap();
        write_image(&root.path().join("c/a.png"), 4, 4);
        write_image(&root.path().join("c/b.png"), 4, 4);
        fs::create_dir_all(root.path().join("c/GT")).unwrap();
        fs::write(root.path().join("c/GT/a.png"), b"not a png").unwrap();
        save_mask(&BinaryMask::empty(3, 3), root.path().join("c/GT/b.png")).unwrap();
        let groups = load_dataset(root.path()).unwrap();
        assert_eq!(groups[0].images.len(), 2);
        assert_eq!(groups[0].labeled_count(), 0);
    }

    #[test]
    fn empty_root_is_argument_error() {
        let root = tempdir().unwrap();
        assert!(matches!(load_dataset(root.path()), Err(CosegError::Argument(_))));
    }
}
