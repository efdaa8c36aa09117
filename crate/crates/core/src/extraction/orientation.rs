use std::f64::consts::PI;

use super::thin::{ring, RING};
use super::BinaryImage;
use crate::domain::{normalize_angle, GrayImage, MinutiaKind};
use crate::error::{Error, Result};
use crate::imgproc::sobel;

/// Ridge direction at `(x, y)` from the Sobel structure tensor over a
/// `block x block` window, `½ atan2(Σ 2 gx gy, Σ (gx² - gy²)) + π/2`, reduced to
/// `[0, π)`. Angles are measured in pixel coordinates (x right, y down).
pub fn estimate_orientation(image: &GrayImage, x: usize, y: usize, block: usize) -> Result<f64> {
    let r = block / 2;
    let (w, h) = (image.width(), image.height());
    // Sobel needs one extra pixel around the block.
    if x < r + 1 || y < r + 1 || x + r + 1 >= w || y + r + 1 >= h {
        return Err(Error::Contract(format!("orientation block {block} at ({x}, {y}) leaves the {w}x{h} image")));
    }
    let data = image.pixels();
    let (mut sxy, mut sdiff) = (0.0, 0.0);
    for yy in y - r..=y + r {
        for xx in x - r..=x + r {
            let (gx, gy) = sobel(data, w, xx, yy);
            sxy += 2.0 * gx * gy;
            sdiff += gx * gx - gy * gy;
        }
    }
    let theta = 0.5 * sxy.atan2(sdiff) + PI / 2.0;
    Ok(normalize_angle(theta) % PI)
}

/// Walks up to `steps` pixels along the skeleton from `start`, never revisiting
/// `origin` or earlier pixels; returns the final pixel.
fn walk(skeleton: &BinaryImage, origin: (isize, isize), start: (isize, isize), steps: usize) -> (isize, isize) {
    let mut visited = vec![origin, start];
    let mut cur = start;
    for _ in 1..steps {
        // Prefer edge neighbours, then diagonal ones.
        let next = [0usize, 2, 4, 6, 1, 3, 5, 7].into_iter().map(|k| (cur.0 + RING[k].0, cur.1 + RING[k].1)).find(|p| {
            skeleton.get_signed(p.0, p.1) && !visited.contains(p) && visited.iter().all(|v| (v.0 - p.0).abs().max((v.1 - p.1).abs()) > 1 || *v == cur)
        });
        match next {
            Some(p) => {
                visited.push(p);
                cur = p;
            }
            None => break,
        }
    }
    cur
}

/// Mean unit vector of the skeleton branches leaving `(x, y)`, each traced for
/// up to `steps` pixels. `None` if the pixel has no skeleton neighbours.
pub fn branch_direction(skeleton: &BinaryImage, x: usize, y: usize, steps: usize) -> Option<(f64, f64)> {
    let p = ring(skeleton, x, y);
    let origin = (x as isize, y as isize);
    // One start pixel per run of set ring cells.
    let starts: Vec<usize> = (0..8).filter(|&k| p[k] && !p[(k + 7) % 8]).collect();
    let starts = if starts.is_empty() && p.iter().all(|v| *v) { vec![0] } else { starts };
    let (mut sx, mut sy) = (0.0, 0.0);
    for k in starts {
        let s = (origin.0 + RING[k].0, origin.1 + RING[k].1);
        let end = walk(skeleton, origin, s, steps);
        let (dx, dy) = ((end.0 - origin.0) as f64, (end.1 - origin.1) as f64);
        let n = dx.hypot(dy);
        if n > 0.0 {
            sx += dx / n;
            sy += dy / n;
        }
    }
    (sx != 0.0 || sy != 0.0).then_some((sx, sy))
}

/// Minutia direction in `[0, 2π)`: the structure-tensor ridge angle, turned to
/// point along the skeleton branches leaving the minutia (for a bifurcation the
/// sum of its three branch directions, which points into the fork).
pub fn minutia_orientation(
    image: &GrayImage,
    skeleton: &BinaryImage,
    x: usize,
    y: usize,
    _kind: MinutiaKind,
    block: usize,
) -> Result<f64> {
    let theta = estimate_orientation(image, x, y, block)?;
    Ok(match branch_direction(skeleton, x, y, 10) {
        Some((dx, dy)) if theta.cos() * dx + theta.sin() * dy < 0.0 => normalize_angle(theta + PI),
        _ => theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sinusoidal ridges running along direction `phi`.
    fn ridges(phi: f64, period: f64) -> GrayImage {
        let (nx, ny) = (-phi.sin(), phi.cos());
        GrayImage::from_fn(64, 64, |x, y| {
            let t = (x as f64 - 32.0) * nx + (y as f64 - 32.0) * ny;
            0.5 + 0.5 * (2.0 * PI * t / period).cos()
        })
    }

    fn circ_pi(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(PI);
        d.min(PI - d)
    }

    #[test]
    fn horizontal_ridges() {
        let t = estimate_orientation(&ridges(0.0, 9.0), 32, 32, 17).unwrap();
        assert!(circ_pi(t, 0.0) < 0.05, "{t}");
    }

    #[test]
    fn diagonal_ridges() {
        let t = estimate_orientation(&ridges(PI / 4.0, 9.0), 32, 32, 17).unwrap();
        assert!(circ_pi(t, PI / 4.0) < 0.05, "{t}");
        let flipped = estimate_orientation(&ridges(PI / 4.0 + PI, 9.0), 32, 32, 17).unwrap();
        assert!((t - flipped).abs() < 1e-9);
    }

    #[test]
    fn rotation_equivariance() {
        let base = estimate_orientation(&ridges(0.3, 9.0), 32, 32, 17).unwrap();
        for phi in [0.2, 0.7, 1.3, 2.0, 2.9] {
            let t = estimate_orientation(&ridges(0.3 + phi, 9.0), 32, 32, 17).unwrap();
            assert!(circ_pi(t, base + phi) < 0.05, "phi {phi}: {t} vs {}", base + phi);
        }
    }

    #[test]
    fn block_outside_is_contract_violation() {
        assert!(estimate_orientation(&ridges(0.0, 9.0), 5, 32, 17).is_err());
    }

    #[test]
    fn ending_points_along_its_ridge() {
        let img = ridges(0.0, 9.0);
        // Ridge ending at (20, 32) continuing to the right.
        let skel = BinaryImage::from_fn(64, 64, |x, y| y == 32 && (20..50).contains(&x));
        let t = minutia_orientation(&img, &skel, 20, 32, MinutiaKind::Ending, 17).unwrap();
        assert!(t.cos() > 0.99, "{t}");
        let skel = BinaryImage::from_fn(64, 64, |x, y| y == 32 && (5..=40).contains(&x));
        let t = minutia_orientation(&img, &skel, 40, 32, MinutiaKind::Ending, 17).unwrap();
        assert!(t.cos() < -0.99, "{t}");
    }
}
