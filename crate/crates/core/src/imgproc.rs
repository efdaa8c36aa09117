//! Small image filters shared by extraction and synthesis.

use crate::domain::GrayImage;

/// Normalized 1-D Gaussian kernel of radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian blur with clamped borders on a raw buffer.
pub fn blur_buffer(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    if k.len() == 1 {
        return data.to_vec();
    }
    let r = (k.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = k.iter().enumerate().map(|(i, w)| w * row[clamp(x as isize + i as isize - r, width)]).sum();
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] =
                k.iter().enumerate().map(|(i, w)| w * tmp[clamp(y as isize + i as isize - r, height) * width + x]).sum();
        }
    }
    out
}

pub fn gaussian_blur(image: &GrayImage, sigma: f64) -> GrayImage {
    GrayImage::from_clamped(image.width(), image.height(), blur_buffer(image.pixels(), image.width(), image.height(), sigma))
}

/// Sobel gradients `(gx, gy)` at an interior pixel; x grows rightwards, y downwards.
#[inline]
pub fn sobel(data: &[f64], width: usize, x: usize, y: usize) -> (f64, f64) {
    let p = |dx: isize, dy: isize| data[(y as isize + dy) as usize * width + (x as isize + dx) as usize];
    let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
    let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
    (gx, gy)
}

/// Summed-area table with a zero first row and column: `(w + 1) x (h + 1)`.
pub fn integral(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let w1 = width + 1;
    let mut s = vec![0.0; w1 * (height + 1)];
    for y in 0..height {
        let mut row = 0.0;
        for x in 0..width {
            row += data[y * width + x];
            s[(y + 1) * w1 + x + 1] = s[y * w1 + x + 1] + row;
        }
    }
    s
}

/// Sum over the half-open box `[x0, x1) x [y0, y1)` from an integral table.
#[inline]
pub fn box_sum(table: &[f64], width: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    let w1 = width + 1;
    table[y1 * w1 + x1] - table[y0 * w1 + x1] - table[y1 * w1 + x0] + table[y0 * w1 + x0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(1.5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(k.len(), 11);
        assert!((k[0] - k[10]).abs() < 1e-15);
    }

    #[test]
    fn blur_preserves_constants() {
        let out = blur_buffer(&[0.3; 50], 10, 5, 2.0);
        assert!(out.iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn box_sum_matches_loop() {
        let data: Vec<f64> = (0..35).map(|i| i as f64 * 0.1).collect();
        let t = integral(&data, 7, 5);
        let brute: f64 = (1..4).flat_map(|y| (2..6).map(move |x| (x, y))).map(|(x, y)| data[y * 7 + x]).sum();
        assert!((box_sum(&t, 7, 2, 1, 6, 4) - brute).abs() < 1e-12);
    }

    #[test]
    fn sobel_sees_horizontal_ramp() {
        let data: Vec<f64> = (0..9).map(|i| (i % 3) as f64).collect();
        let (gx, gy) = sobel(&data, 3, 1, 1);
        assert_eq!((gx, gy), (8.0, 0.0));
    }
}
