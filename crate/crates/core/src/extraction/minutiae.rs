use super::thin::{ring, RING};
use super::BinaryImage;
use crate::domain::{Minutia, MinutiaKind};
use crate::error::{Error, Result};

/// Crossing number: half the number of value changes around the 8-neighbour
/// cycle. 1 is a ridge ending, 2 a ridge interior, 3 a bifurcation.
pub fn crossing_number(skeleton: &BinaryImage, x: usize, y: usize) -> Result<u8> {
    if x == 0 || y == 0 || x + 1 >= skeleton.width() || y + 1 >= skeleton.height() {
        return Err(Error::Contract(format!("crossing number needs an interior pixel, got ({x}, {y})")));
    }
    let p = ring(skeleton, x, y);
    let changes = (0..8).filter(|&k| p[k] != p[(k + 1) % 8]).count();
    Ok((changes / 2) as u8)
}

/// Removes 8-connected components with fewer than `min_pixels` pixels.
pub fn prune_small_components(b: &BinaryImage, min_pixels: usize) -> BinaryImage {
    let (w, h) = (b.width(), b.height());
    let mut out = b.clone();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    for start in 0..w * h {
        if b.bits()[start] == 0 || seen[start] {
            continue;
        }
        let mut component = vec![start];
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in RING {
                if b.get_signed(x + dx, y + dy) {
                    let j = (y + dy) as usize * w + (x + dx) as usize;
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                        component.push(j);
                    }
                }
            }
        }
        if component.len() < min_pixels {
            for i in component {
                out.set(i % w, i / w, false);
            }
        }
    }
    out
}

/// Every ending (CN 1) and bifurcation (CN 3) at least `border_margin` pixels
/// from each edge. Candidates closer than `min_separation` are merged, keeping
/// the one farther from the border (ties by row, then column). Orientation is
/// left at 0.
pub fn detect_minutiae(skeleton: &BinaryImage, border_margin: usize, min_separation: f64) -> Vec<Minutia> {
    let (w, h) = (skeleton.width(), skeleton.height());
    let margin = border_margin.max(1);
    if w <= 2 * margin || h <= 2 * margin {
        return Vec::new();
    }
    let mut candidates = Vec::new();
    for y in margin..h - margin {
        for x in margin..w - margin {
            if !skeleton.get(x, y) {
                continue;
            }
            let kind = match crossing_number(skeleton, x, y).expect("interior pixel") {
                1 => MinutiaKind::Ending,
                3 => MinutiaKind::Bifurcation,
                _ => continue,
            };
            let border = x.min(y).min(w - 1 - x).min(h - 1 - y);
            candidates.push((border, x, y, kind));
        }
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
    let mut kept: Vec<Minutia> = Vec::new();
    for (_, x, y, kind) in candidates {
        let m = Minutia::new(x as f64, y as f64, 0.0, kind);
        if kept.iter().all(|k| k.distance(&m) >= min_separation) {
            kept.push(m);
        }
    }
    kept.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&str]) -> BinaryImage {
        let h = rows.len();
        let w = rows[0].len();
        BinaryImage::from_fn(w, h, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn crossing_number_definitions() {
        let end = from_rows(&[".....", ".....", ".###.", ".....", "....."]);
        assert_eq!(crossing_number(&end, 1, 2).unwrap(), 1);
        assert_eq!(crossing_number(&end, 2, 2).unwrap(), 2);
        let y = from_rows(&["#...#", ".#.#.", "..#..", "..#..", "..#.."]);
        assert_eq!(crossing_number(&y, 2, 2).unwrap(), 3);
        assert!(crossing_number(&y, 0, 2).is_err());
    }

    #[test]
    fn crossing_number_is_rotation_invariant() {
        for mask in 0u16..256 {
            let bits: [bool; 8] = std::array::from_fn(|k| mask >> k & 1 == 1);
            let cn = |r: &[bool; 8]| (0..8).filter(|&k| r[k] != r[(k + 1) % 8]).count() / 2;
            let base = cn(&bits);
            for s in 1..8 {
                let rotated: [bool; 8] = std::array::from_fn(|k| bits[(k + s) % 8]);
                assert_eq!(cn(&rotated), base);
            }
            let mut img = BinaryImage::new(3, 3);
            img.set(1, 1, true);
            for (k, (dx, dy)) in RING.iter().enumerate() {
                img.set((1 + dx) as usize, (1 + dy) as usize, bits[k]);
            }
            assert_eq!(crossing_number(&img, 1, 1).unwrap() as usize, base);
        }
    }

    #[test]
    fn blank_has_no_minutiae() {
        assert!(detect_minutiae(&BinaryImage::new(64, 64), 12, 8.0).is_empty());
    }

    #[test]
    fn straight_ridge_has_two_endings() {
        let line = BinaryImage::from_fn(64, 64, |x, y| y == 30 && (15..50).contains(&x));
        let m = detect_minutiae(&line, 12, 8.0);
        assert_eq!(m.len(), 2);
        assert!(m.iter().all(|m| m.kind == MinutiaKind::Ending));
        assert_eq!((m[0].x, m[1].x), (15.0, 49.0));
    }

    #[test]
    fn planted_y_junction_is_one_bifurcation() {
        // Stem from (32, 58) up to (32, 32); arms to the upper left and right,
        // extending past the margin so only the junction is inside.
        let mut b = BinaryImage::new(64, 64);
        for y in 32..64 {
            b.set(32, y, true);
        }
        for d in 1..32 {
            b.set(32 - d, 32 - d, true);
            b.set(32 + d, 32 - d, true);
        }
        let t = super::super::thin(&b);
        let m = detect_minutiae(&t, 12, 8.0);
        assert_eq!(m.len(), 1, "{m:?}");
        assert_eq!(m[0].kind, MinutiaKind::Bifurcation);
        assert!((m[0].x - 32.0).abs() <= 1.0 && (m[0].y - 32.0).abs() <= 1.0);
    }

    #[test]
    fn close_pairs_are_merged_and_margin_respected() {
        let short = BinaryImage::from_fn(64, 64, |x, y| y == 30 && (28..33).contains(&x));
        let m = detect_minutiae(&short, 12, 8.0);
        assert_eq!(m.len(), 1);
        let near_edge = BinaryImage::from_fn(64, 64, |x, y| y == 30 && (5..40).contains(&x));
        let m = detect_minutiae(&near_edge, 12, 8.0);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].x, 39.0);
    }

    #[test]
    fn small_components_pruned() {
        let b = BinaryImage::from_fn(30, 30, |x, y| (y == 5 && (2..20).contains(&x)) || (y == 20 && (3..6).contains(&x)));
        let p = prune_small_components(&b, 10);
        assert_eq!(p.count_ones(), 18);
    }
}
