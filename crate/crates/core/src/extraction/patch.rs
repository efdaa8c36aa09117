use crate::domain::{GrayImage, Minutia};
use crate::error::{Error, Result};

/// Classifier input patch geometry. Sampling is always bilinear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchSpec {
    pub side: usize,
    pub align_to_orientation: bool,
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self { side: 32, align_to_orientation: true }
    }
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.side < 8 || !self.side.is_multiple_of(2) {
            return Err(Error::Contract(format!("patch side {} must be even and at least 8", self.side)));
        }
        Ok(())
    }
}

/// Crops a `side x side` patch centred on the minutia. Patch cell `(u, v)` samples
/// the image at `centre + R(theta) (u - side/2, v - side/2)`, i.e. the patch is
/// the image rotated by `-theta` so the minutia direction runs along +u. Returns
/// `Ok(None)` when the sampling footprint leaves the image.
pub fn crop_patch(image: &GrayImage, minutia: &Minutia, spec: &PatchSpec) -> Result<Option<GrayImage>> {
    spec.validate()?;
    let (s, c) = if spec.align_to_orientation { minutia.theta.sin_cos() } else { (0.0, 1.0) };
    let half = (spec.side / 2) as f64;
    let mut pixels = Vec::with_capacity(spec.side * spec.side);
    for v in 0..spec.side {
        let dv = v as f64 - half;
        for u in 0..spec.side {
            let du = u as f64 - half;
            let x = minutia.x + c * du - s * dv;
            let y = minutia.y + s * du + c * dv;
            match image.sample_bilinear(x, y) {
                Some(val) => pixels.push(val),
                None => return Ok(None),
            }
        }
    }
    Ok(Some(GrayImage::from_clamped(spec.side, spec.side, pixels)))
}
