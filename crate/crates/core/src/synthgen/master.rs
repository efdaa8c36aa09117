use std::f64::consts::PI;

use rand::Rng;

use super::field::{gen_orientation_field, OrientationField, Singularity, SingularityKind};
use crate::domain::{GrayImage, Minutia};
use crate::error::{Error, Result};
use crate::extraction::{extract_minutiae, ExtractionConfig};
use crate::rng;

const ORIENTATION_BINS: usize = 32;
const MAX_RESEEDS: u64 = 5;
const RADIUS_F: f64 = 1.2;
const SIGMA_F: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterParams {
    pub width: usize,
    pub height: usize,
    /// Ridge period in pixels, within `[6, 14]`.
    pub ridge_period: f64,
    /// Extra pattern generated around the frame so rigid motion of an
    /// impression never exposes empty canvas.
    pub pad: usize,
    pub iterations: usize,
    /// Accepted range of extracted minutiae on the clean frame.
    pub min_minutiae: usize,
    pub max_minutiae: usize,
}

impl Default for MasterParams {
    fn default() -> Self {
        Self { width: 256, height: 288, ridge_period: 9.0, pad: 64, iterations: 6, min_minutiae: 20, max_minutiae: 120 }
    }
}

/// A clean synthetic finger: the framed image, the padded canvas it was cut
/// from, and the minutiae the extractor finds on the clean canvas.
#[derive(Debug, Clone)]
pub struct MasterPrint {
    pub finger_id: String,
    pub image: GrayImage,
    pub canvas: GrayImage,
    pub pad: usize,
    /// Orientation model in canvas coordinates.
    pub field: OrientationField,
    pub ridge_period: f64,
    /// Extractor output on the clean canvas, in frame coordinates (may lie
    /// outside the frame).
    pub minutiae: Vec<Minutia>,
    /// Extractor output on the clean frame alone.
    pub frame_minutiae: Vec<Minutia>,
}

/// Generates a master print, reseeding (with `derive_indexed(seed, attempt)`) up
/// to five times until the clean frame yields an acceptable minutia count.
pub fn gen_master(seed: u64, finger_id: &str, params: &MasterParams, extraction: &ExtractionConfig) -> Result<MasterPrint> {
    if !(6.0..=14.0).contains(&params.ridge_period) {
        return Err(Error::Generation(format!("ridge period {} outside [6, 14]", params.ridge_period)));
    }
    let mut last = 0;
    for attempt in 0..=MAX_RESEEDS {
        let s = if attempt == 0 { seed } else { rng::derive_indexed(seed, attempt) };
        let master = render(s, finger_id, params, extraction)?;
        last = master.frame_minutiae.len();
        if (params.min_minutiae..=params.max_minutiae).contains(&last) {
            return Ok(master);
        }
        log::debug!("finger {finger_id}: {last} minutiae on attempt {attempt}, reseeding");
    }
    Err(Error::Generation(format!(
        "finger {finger_id}: minutia count {last} outside [{}, {}] after {MAX_RESEEDS} reseeds",
        params.min_minutiae, params.max_minutiae
    )))
}

fn pick_singularities(g: &mut impl Rng, cw: f64, ch: f64) -> Vec<Singularity> {
    let (cx, cy) = (cw / 2.0, ch / 2.0);
    let core = Singularity {
        x: cx + g.random_range(-0.12..0.12) * cw,
        y: cy - g.random_range(0.0..0.15) * ch,
        kind: SingularityKind::Core,
    };
    let roll: f64 = g.random();
    if roll < 0.2 {
        Vec::new()
    } else if roll < 0.45 {
        vec![core]
    } else {
        let side = if g.random::<bool>() { 1.0 } else { -1.0 };
        let delta = Singularity {
            x: core.x + side * g.random_range(0.15..0.3) * cw,
            y: core.y + g.random_range(0.3..0.42) * ch,
            kind: SingularityKind::Delta,
        };
        vec![core, delta]
    }
}

/// Zero-mean Gabor kernels for `ORIENTATION_BINS` ridge directions.
fn gabor_bank(period: f64) -> (usize, Vec<Vec<f64>>) {
    let radius = (RADIUS_F * period).ceil() as usize;
    let sigma = period * SIGMA_F;
    let side = 2 * radius + 1;
    let bank = (0..ORIENTATION_BINS)
        .map(|b| {
            let theta = PI * b as f64 / ORIENTATION_BINS as f64;
            let (nx, ny) = (-theta.sin(), theta.cos());
            let mut k = Vec::with_capacity(side * side);
            for dy in 0..side {
                for dx in 0..side {
                    let (fx, fy) = (dx as f64 - radius as f64, dy as f64 - radius as f64);
                    let env = (-(fx * fx + fy * fy) / (2.0 * sigma * sigma)).exp();
                    k.push(env * (2.0 * PI * (fx * nx + fy * ny) / period).cos());
                }
            }
            let mean = k.iter().sum::<f64>() / k.len() as f64;
            let env_sum: f64 = k.iter().map(|v| v.abs()).sum();
            k.iter().map(|v| (v - mean) / env_sum).collect()
        })
        .collect();
    (radius, bank)
}

/// Orientation-adaptive bandpass filtering with reflected borders.
fn filter(src: &[f64], w: usize, h: usize, bins: &[u8], radius: usize, bank: &[Vec<f64>]) -> Vec<f64> {
    let pw = w + 2 * radius;
    let reflect = |v: isize, n: usize| -> usize {
        let n = n as isize;
        let mut v = v;
        if v < 0 {
            v = -v - 1;
        }
        if v >= n {
            v = 2 * n - v - 1;
        }
        v.clamp(0, n - 1) as usize
    };
    let mut padded = vec![0.0; pw * (h + 2 * radius)];
    for py in 0..h + 2 * radius {
        let sy = reflect(py as isize - radius as isize, h);
        for px in 0..pw {
            padded[py * pw + px] = src[sy * w + reflect(px as isize - radius as isize, w)];
        }
    }
    let side = 2 * radius + 1;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let k = &bank[bins[y * w + x] as usize];
            let mut acc = 0.0;
            for dy in 0..side {
                let row = &padded[(y + dy) * pw + x..(y + dy) * pw + x + side];
                let krow = &k[dy * side..(dy + 1) * side];
                for (a, b) in row.iter().zip(krow) {
                    acc += a * b;
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn standardize_in_place(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt().max(1e-12);
    v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
}

fn render(seed: u64, finger_id: &str, params: &MasterParams, extraction: &ExtractionConfig) -> Result<MasterPrint> {
    let (cw, ch) = (params.width + 2 * params.pad, params.height + 2 * params.pad);
    let mut g = rng::chacha(rng::derive_seed(seed, "master"));
    let singularities = pick_singularities(&mut g, cw as f64, ch as f64);
    let field = gen_orientation_field(seed, cw, ch, &singularities);

    let mut bins = Vec::with_capacity(cw * ch);
    for y in 0..ch {
        for x in 0..cw {
            let a = field.angle_at(x as f64, y as f64);
            bins.push(((a / PI * ORIENTATION_BINS as f64).round() as usize % ORIENTATION_BINS) as u8);
        }
    }
    let (radius, bank) = gabor_bank(params.ridge_period);
    let mut state: Vec<f64> = (0..cw * ch).map(|_| g.random_range(-1.0..1.0)).collect();
    for _ in 0..params.iterations {
        state = filter(&state, cw, ch, &bins, radius, &bank);
        standardize_in_place(&mut state);
        state.iter_mut().for_each(|v| *v = (2.0 * *v).tanh());
    }
    // Ridges (positive response) are dark.
    let canvas_px: Vec<f64> = state.iter().map(|v| 0.5 - 0.4 * v).collect();
    let canvas = GrayImage::from_clamped(cw, ch, crate::imgproc::blur_buffer(&canvas_px, cw, ch, 0.6));
    let image = GrayImage::from_fn(params.width, params.height, |x, y| canvas.get(x + params.pad, y + params.pad));

    let pad = params.pad as f64;
    let minutiae = extract_minutiae(&canvas, extraction)?
        .into_iter()
        .map(|m| Minutia { x: m.x - pad, y: m.y - pad, ..m })
        .collect();
    let frame_minutiae = extract_minutiae(&image, extraction)?;
    Ok(MasterPrint {
        finger_id: finger_id.to_string(),
        image,
        canvas,
        pad: params.pad,
        field,
        ridge_period: params.ridge_period,
        minutiae,
        frame_minutiae,
    })
}
