use super::BinaryImage;

/// Neighbour offsets in ring order P2..P9: N, NE, E, SE, S, SW, W, NW.
pub(crate) const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

#[inline]
pub(crate) fn ring(b: &BinaryImage, x: usize, y: usize) -> [bool; 8] {
    let mut r = [false; 8];
    for (k, (dx, dy)) in RING.iter().enumerate() {
        r[k] = b.get_signed(x as isize + dx, y as isize + dy);
    }
    r
}

/// Zhang-Suen skeletonization followed by removal of staircase pixels, repeated
/// to a fixed point. The result is an 8-connected skeleton of unit width and
/// `thin` is idempotent.
pub fn thin(input: &BinaryImage) -> BinaryImage {
    let mut img = input.clone();
    loop {
        let a = zhang_suen(&mut img);
        let b = remove_staircases(&mut img);
        if !a && !b {
            return img;
        }
    }
}

fn zhang_suen(img: &mut BinaryImage) -> bool {
    let mut changed_any = false;
    loop {
        let mut changed = false;
        for step in 0..2 {
            let mut remove = Vec::new();
            for y in 0..img.height() {
                for x in 0..img.width() {
                    if !img.get(x, y) {
                        continue;
                    }
                    let p = ring(img, x, y);
                    let count = p.iter().filter(|v| **v).count();
                    if !(2..=6).contains(&count) {
                        continue;
                    }
                    let transitions = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
                    if transitions != 1 {
                        continue;
                    }
                    // p[0]=N p[2]=E p[4]=S p[6]=W
                    let ok = if step == 0 {
                        !(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6])
                    } else {
                        !(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6])
                    };
                    if ok {
                        remove.push((x, y));
                    }
                }
            }
            for &(x, y) in &remove {
                img.set(x, y, false);
            }
            changed |= !remove.is_empty();
        }
        if !changed {
            return changed_any;
        }
        changed_any = true;
    }
}

/// True when the set ring neighbours form one 8-connected group without the
/// centre pixel.
fn neighbours_connected(p: &[bool; 8]) -> bool {
    let members: Vec<usize> = (0..8).filter(|&k| p[k]).collect();
    if members.is_empty() {
        return false;
    }
    let adjacent = |a: usize, b: usize| {
        let d = (a + 8 - b) % 8;
        let d = d.min(8 - d);
        // Consecutive ring cells touch; edge cells two apart touch diagonally.
        d == 1 || (d == 2 && a.is_multiple_of(2) && b.is_multiple_of(2))
    };
    let mut seen = vec![members[0]];
    let mut frontier = vec![members[0]];
    while let Some(a) = frontier.pop() {
        for &b in &members {
            if !seen.contains(&b) && adjacent(a, b) {
                seen.push(b);
                frontier.push(b);
            }
        }
    }
    seen.len() == members.len()
}

/// Sequentially deletes pixels with at least two neighbours whose neighbours
/// stay connected without them.
fn remove_staircases(img: &mut BinaryImage) -> bool {
    let mut changed = false;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !img.get(x, y) {
                continue;
            }
            let p = ring(img, x, y);
            if p.iter().filter(|v| **v).count() >= 2 && neighbours_connected(&p) {
                img.set(x, y, false);
                changed = true;
            }
        }
    }
    changed
}

/// Number of 8-connected components of set pixels.
pub fn connected_components(b: &BinaryImage) -> usize {
    let (w, h) = (b.width(), b.height());
    let mut label = vec![false; w * h];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if b.bits()[start] == 0 || label[start] {
            continue;
        }
        count += 1;
        label[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in RING {
                if b.get_signed(x + dx, y + dy) {
                    let j = (y + dy) as usize * w + (x + dx) as usize;
                    if !label[j] {
                        label[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    count
}
