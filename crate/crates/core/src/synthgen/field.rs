use std::f64::consts::PI;

use rand::Rng;

use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityKind {
    Core,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub x: f64,
    pub y: f64,
    pub kind: SingularityKind,
}

/// Smooth ridge-orientation model: a base angle, the zero-pole terms of the
/// singularities (`+½ arg(p - c)` per core, `-½ arg(p - d)` per delta), and a
/// few seeded low-frequency waves. Angles are ridge directions modulo π.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    pub width: usize,
    pub height: usize,
    pub singularities: Vec<Singularity>,
    base: f64,
    /// `(amplitude, kx, ky, phase)` per wave.
    waves: Vec<(f64, f64, f64, f64)>,
}

impl OrientationField {
    /// Ridge angle in `[0, π)` at a point.
    pub fn angle_at(&self, x: f64, y: f64) -> f64 {
        let mut a = self.base;
        for s in &self.singularities {
            let arg = (y - s.y).atan2(x - s.x);
            match s.kind {
                SingularityKind::Core => a += 0.5 * arg,
                SingularityKind::Delta => a -= 0.5 * arg,
            }
        }
        for (amp, kx, ky, ph) in &self.waves {
            a += amp * (kx * x + ky * y + ph).sin();
        }
        a.rem_euclid(PI)
    }

    /// Angles sampled at block centres, row-major over
    /// `ceil(width / block) x ceil(height / block)` blocks.
    pub fn blocks(&self, block: usize) -> (usize, usize, Vec<f64>) {
        let cols = self.width.div_ceil(block);
        let rows = self.height.div_ceil(block);
        let mut v = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                let cx = (c * block) as f64 + block as f64 / 2.0;
                let cy = (r * block) as f64 + block as f64 / 2.0;
                v.push(self.angle_at(cx, cy));
            }
        }
        (cols, rows, v)
    }
}

/// Seeded orientation field over a `width x height` canvas with the given
/// singularities (at most two). The low-frequency waves have wavelengths of at
/// least the canvas diagonal and a total amplitude of at most 0.35 rad.
pub fn gen_orientation_field(seed: u64, width: usize, height: usize, singularities: &[Singularity]) -> OrientationField {
    assert!(singularities.len() <= 2, "at most two singularities are supported");
    let mut g = rng::chacha(rng::derive_seed(seed, "orientation"));
    let diag = (width as f64).hypot(height as f64);
    let waves = (0..3)
        .map(|_| {
            let amp = g.random_range(0.03..0.12);
            let dir = g.random_range(0.0..2.0 * PI);
            let k = 2.0 * PI / (diag * g.random_range(1.0..2.5));
            (amp, k * dir.cos(), k * dir.sin(), g.random_range(0.0..2.0 * PI))
        })
        .collect();
    OrientationField {
        width,
        height,
        singularities: singularities.to_vec(),
        base: g.random_range(0.0..PI),
        waves,
    }
}

/// Difference of two ridge angles on the π-periodic circle, in `[0, π/2]`.
pub fn angle_diff_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singularity_free_field_is_smooth() {
        for seed in 0..20 {
            let f = gen_orientation_field(seed, 352, 384, &[]);
            let (cols, rows, a) = f.blocks(16);
            let mut worst: f64 = 0.0;
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        worst = worst.max(angle_diff_pi(a[r * cols + c], a[r * cols + c + 1]));
                    }
                    if r + 1 < rows {
                        worst = worst.max(angle_diff_pi(a[r * cols + c], a[(r + 1) * cols + c]));
                    }
                }
            }
            assert!(worst <= 0.3, "seed {seed}: {worst}");
        }
    }

    #[test]
    fn core_winds_half_a_turn() {
        let core = Singularity { x: 100.0, y: 120.0, kind: SingularityKind::Core };
        let f = gen_orientation_field(3, 256, 288, &[core]);
        // Unwrap the π-periodic angle along a small circle around the core.
        let steps = 720;
        let mut total = 0.0;
        let mut prev = f.angle_at(core.x + 10.0, core.y);
        for i in 1..=steps {
            let t = 2.0 * PI * i as f64 / steps as f64;
            let cur = f.angle_at(core.x + 10.0 * t.cos(), core.y + 10.0 * t.sin());
            let mut d = cur - prev;
            while d > PI / 2.0 {
                d -= PI;
            }
            while d < -PI / 2.0 {
                d += PI;
            }
            total += d;
            prev = cur;
        }
        assert!((total - PI).abs() < 1e-6, "winding {total}");
    }

    #[test]
    fn same_seed_same_field() {
        let s = [Singularity { x: 10.0, y: 10.0, kind: SingularityKind::Delta }];
        assert_eq!(gen_orientation_field(9, 64, 64, &s), gen_orientation_field(9, 64, 64, &s));
        assert_ne!(gen_orientation_field(9, 64, 64, &s), gen_orientation_field(10, 64, 64, &s));
    }
}
