use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::master::MasterPrint;
use crate::domain::{GrayImage, Minutia};
use crate::imgproc;
use crate::rng;

/// Upper bound on blotches; draws for all of them are always consumed so that
/// raising the level only adds blotches.
const MAX_BLOTCHES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeParams {
    pub level: f64,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    /// Largest fractional contrast loss of the low-frequency field.
    pub contrast_drop: f64,
    pub blotch_count: usize,
    pub max_rotation: f64,
    pub max_translation: f64,
}

impl DegradeParams {
    /// Every component grows linearly with `level` in `[0, 1]`.
    pub fn from_level(level: f64) -> Self {
        let level = level.clamp(0.0, 1.0);
        Self {
            level,
            blur_sigma: 2.5 * level,
            noise_sigma: 0.3 * level,
            contrast_drop: 0.9 * level,
            blotch_count: (MAX_BLOTCHES as f64 * level).round() as usize,
            max_rotation: 0.25 * level,
            max_translation: 20.0 * level,
        }
    }
}

/// Rigid pose of an impression relative to the master frame: a point `q` of the
/// master maps to `R(rotation) (q - c) + c + (tx, ty)`, `c` the frame centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { rotation: 0.0, tx: 0.0, ty: 0.0 };

    pub fn apply(&self, m: &Minutia, width: usize, height: usize) -> Minutia {
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        let (s, c) = self.rotation.sin_cos();
        let (dx, dy) = (m.x - cx, m.y - cy);
        Minutia {
            x: c * dx - s * dy + cx + self.tx,
            y: s * dx + c * dy + cy + self.ty,
            theta: crate::domain::normalize_angle(m.theta + self.rotation),
            ..*m
        }
    }
}

#[derive(Debug, Clone)]
pub struct Impression {
    pub image: GrayImage,
    pub pose: Pose,
}

/// The clean master seen under `pose` (bilinear, edge-clamped on the canvas).
pub fn posed_master(master: &MasterPrint, pose: Pose) -> GrayImage {
    let (w, h) = (master.image.width(), master.image.height());
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let (s, c) = pose.rotation.sin_cos();
    let canvas = &master.canvas;
    let (mx, my) = ((canvas.width() - 1) as f64, (canvas.height() - 1) as f64);
    let pad = master.pad as f64;
    GrayImage::from_fn(w, h, |x, y| {
        // Inverse pose.
        let (px, py) = (x as f64 - cx - pose.tx, y as f64 - cy - pose.ty);
        let qx = c * px + s * py + cx + pad;
        let qy = -s * px + c * py + cy + pad;
        canvas.sample_bilinear(qx.clamp(0.0, mx), qy.clamp(0.0, my)).unwrap_or(0.5)
    })
}

/// Produces one impression image; see [`degrade_impression`].
pub fn degrade(master: &MasterPrint, params: &DegradeParams, seed: u64) -> GrayImage {
    degrade_impression(master, params, seed).image
}

/// Produces one impression: rigid motion, Gaussian blur, additive Gaussian
/// noise, a multiplicative low-frequency contrast field, then blotches.
/// All random draws are taken from `seed` independently of the parameters, so a
/// fixed seed with a higher level degrades the same impression further.
pub fn degrade_impression(master: &MasterPrint, params: &DegradeParams, seed: u64) -> Impression {
    let (w, h) = (master.image.width(), master.image.height());
    let mut g = rng::chacha(rng::derive_seed(seed, "degrade"));
    let u_rot: f64 = g.random_range(-1.0..1.0);
    let u_tx: f64 = g.random_range(-1.0..1.0);
    let u_ty: f64 = g.random_range(-1.0..1.0);
    let pose = Pose {
        rotation: u_rot * params.max_rotation,
        tx: u_tx * params.max_translation,
        ty: u_ty * params.max_translation,
    };

    let posed = posed_master(master, pose);
    let mut px = imgproc::blur_buffer(posed.pixels(), w, h, params.blur_sigma);

    let noise: Vec<f64> = (0..w * h).map(|_| g.sample::<f64, _>(StandardNormal)).collect();
    for (p, n) in px.iter_mut().zip(&noise) {
        *p += params.noise_sigma * n;
    }

    // Smooth field in [0, 1] from a few random long waves.
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let dir = g.random_range(0.0..2.0 * PI);
            let k = 2.0 * PI / g.random_range(150.0..400.0);
            (k * dir.cos(), k * dir.sin(), g.random_range(0.0..2.0 * PI))
        })
        .collect();
    for y in 0..h {
        for x in 0..w {
            let s: f64 = waves.iter().map(|(kx, ky, ph)| (kx * x as f64 + ky * y as f64 + ph).sin()).sum::<f64>() / 3.0;
            let gain = 1.0 - params.contrast_drop * (0.5 + 0.5 * s);
            let p = &mut px[y * w + x];
            *p = 0.5 + (*p - 0.5) * gain;
        }
    }

    let blotches: Vec<(f64, f64, f64, f64)> = (0..MAX_BLOTCHES)
        .map(|_| {
            (
                g.random_range(0.0..w as f64),
                g.random_range(0.0..h as f64),
                g.random_range(10.0..28.0),
                g.random_range(0.6..0.95),
            )
        })
        .collect();
    for &(bx, by, r, value) in blotches.iter().take(params.blotch_count) {
        let reach = (2.0 * r) as isize;
        for y in (by as isize - reach).max(0)..(by as isize + reach).min(h as isize) {
            for x in (bx as isize - reach).max(0)..(bx as isize + reach).min(w as isize) {
                let d = ((x as f64 - bx).powi(2) + (y as f64 - by).powi(2)).sqrt() / r;
                let weight = (-d.powi(4)).exp();
                let p = &mut px[y as usize * w + x as usize];
                *p = *p * (1.0 - weight) + value * weight;
            }
        }
    }

    Impression { image: GrayImage::from_clamped(w, h, px), pose }
}
