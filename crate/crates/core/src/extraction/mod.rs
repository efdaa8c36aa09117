//! Classical minutia candidate extraction and oriented patch cropping:
//! normalize → smooth → binarize → thin → crossing numbers → orientation → patch.

mod enhance;
mod minutiae;
mod orientation;
mod patch;
mod thin;

pub use enhance::{binarize, normalize, standardize};
pub use minutiae::{crossing_number, detect_minutiae, prune_small_components};
pub use orientation::{branch_direction, estimate_orientation, minutia_orientation};
pub use patch::{crop_patch, PatchSpec};
pub use thin::{connected_components, thin};

use crate::domain::{FingerprintTemplate, GrayImage, Minutia};
use crate::error::Result;
use crate::imgproc;

/// Row-major binary image, 1 = ridge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![0; width * height] }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Self {
        assert_eq!(bits.len(), width * height, "bit count mismatch");
        Self { width, height, bits: bits.into_iter().map(|b| u8::from(b != 0)).collect() }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut b = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                b.set(x, y, f(x, y));
            }
        }
        b
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    /// Out-of-bounds reads are background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = u8::from(v);
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b != 0).count()
    }
}

/// Tunables of the extraction pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig {
    /// Pre-binarization smoothing.
    pub smooth_sigma: f64,
    pub binarize_window: usize,
    pub orient_block: usize,
    pub border_margin: usize,
    pub min_separation: f64,
    /// Skeleton components with fewer pixels are discarded before detection.
    pub min_component: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            smooth_sigma: 1.0,
            binarize_window: 15,
            orient_block: 17,
            border_margin: 12,
            min_separation: 8.0,
            min_component: 12,
        }
    }
}

/// Skeleton of an image as used by detection.
pub fn skeletonize(image: &GrayImage, cfg: &ExtractionConfig) -> BinaryImage {
    let smoothed = imgproc::gaussian_blur(&normalize(image), cfg.smooth_sigma);
    let skeleton = thin(&binarize(&smoothed, cfg.binarize_window));
    prune_small_components(&skeleton, cfg.min_component)
}

/// Full candidate extraction: positions, types, and orientations.
pub fn extract_minutiae(image: &GrayImage, cfg: &ExtractionConfig) -> Result<Vec<Minutia>> {
    let skeleton = skeletonize(image, cfg);
    let margin = cfg.border_margin.max(cfg.orient_block / 2 + 1);
    let mut found = detect_minutiae(&skeleton, margin, cfg.min_separation);
    for m in &mut found {
        m.theta = minutia_orientation(image, &skeleton, m.x as usize, m.y as usize, m.kind, cfg.orient_block)?;
    }
    Ok(found)
}

/// Extracts a template for `(finger, impression)` from an image.
pub fn extract_template(
    image: &GrayImage,
    finger: &str,
    impression: &str,
    cfg: &ExtractionConfig,
) -> Result<FingerprintTemplate> {
    Ok(FingerprintTemplate::new(finger, impression, extract_minutiae(image, cfg)?))
}
