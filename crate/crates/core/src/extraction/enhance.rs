use super::BinaryImage;
use crate::domain::GrayImage;
use crate::imgproc;

/// Zero-mean, unit-variance values (population statistics); `None` for a
/// constant image.
pub fn standardize(image: &GrayImage) -> Option<Vec<f64>> {
    let px = image.pixels();
    let n = px.len() as f64;
    let mean = px.iter().sum::<f64>() / n;
    let var = px.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var <= f64::EPSILON * f64::EPSILON {
        return None;
    }
    let sd = var.sqrt();
    Some(px.iter().map(|v| (v - mean) / sd).collect())
}

/// Standardizes, then remaps affinely onto `[0, 1]`. Constant images become 0.5.
pub fn normalize(image: &GrayImage) -> GrayImage {
    let (w, h) = (image.width(), image.height());
    let Some(z) = standardize(image) else {
        return GrayImage::filled(w, h, 0.5);
    };
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    GrayImage::from_clamped(w, h, z.into_iter().map(|v| (v - lo) / (hi - lo)).collect())
}

/// Slack absorbing rounding in the window sums, so a uniform window never
/// compares its centre as strictly darker than itself.
const MEAN_EPS: f64 = 1e-9;

/// 1 where a pixel is darker than the mean of its `window x window`
/// neighbourhood (clipped at the borders).
pub fn binarize(image: &GrayImage, window: usize) -> BinaryImage {
    assert!(window % 2 == 1, "binarization window must be odd");
    let (w, h) = (image.width(), image.height());
    let table = imgproc::integral(image.pixels(), w, h);
    let r = window / 2;
    BinaryImage::from_fn(w, h, |x, y| {
        let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
        let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
        let count = ((x1 - x0) * (y1 - y0)) as f64;
        let mean = imgproc::box_sum(&table, w, x0, y0, x1, y1) / count;
        image.get(x, y) < mean - MEAN_EPS
    })
}
