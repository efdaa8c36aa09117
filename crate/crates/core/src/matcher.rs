//! Minutia template comparison with local neighbourhood descriptors and a
//! pose-histogram consistency check.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use crate::domain::{wrap_angle, FingerprintTemplate, Minutia};
use crate::error::{Error, Result};

const ROTATION_BINS: i64 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    pub k: usize,
    pub tol_d: f64,
    pub tol_a: f64,
    pub top_pairs: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self { k: 6, tol_d: 12.0, tol_a: PI / 8.0, top_pairs: 12 }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.top_pairs == 0 || self.tol_d.is_nan() || self.tol_d <= 0.0 || self.tol_a.is_nan() || self.tol_a <= 0.0 {
            return Err(Error::Config(format!("match parameters must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Relation of a neighbour to its owner minutia.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborTuple {
    pub distance: f64,
    /// Direction to the neighbour relative to the owner's orientation.
    pub direction: f64,
    pub orientation_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalDescriptor {
    pub owner: usize,
    pub tuples: Vec<NeighborTuple>,
}

pub fn build_descriptors(t: &FingerprintTemplate, k: usize) -> Vec<LocalDescriptor> {
    let ms = &t.minutiae;
    ms.iter()
        .enumerate()
        .map(|(i, a)| {
            let mut near: Vec<(f64, usize)> =
                ms.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, b)| (a.distance(b), j)).collect();
            near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let tuples = near
                .into_iter()
                .take(k)
                .map(|(d, j)| {
                    let b = &ms[j];
                    NeighborTuple {
                        distance: d,
                        direction: wrap_angle((b.y - a.y).atan2(b.x - a.x) - a.theta),
                        orientation_delta: wrap_angle(b.theta - a.theta),
                    }
                })
                .collect();
            LocalDescriptor { owner: i, tuples }
        })
        .collect()
}

/// Absolute angular difference of two angles in `(-π, π]`.
fn circular_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Fraction of tuples that pair up one-to-one within tolerance. Candidate
/// tuple pairs are taken greedily by increasing normalized deviation.
pub fn local_similarity(a: &LocalDescriptor, b: &LocalDescriptor, p: &MatchParams) -> f64 {
    local_similarity_with(a, b, p, &mut Scratch::default())
}

#[derive(Default)]
struct Scratch {
    cands: Vec<(f64, usize, usize)>,
    used_a: Vec<bool>,
    used_b: Vec<bool>,
}

fn local_similarity_with(a: &LocalDescriptor, b: &LocalDescriptor, p: &MatchParams, scratch: &mut Scratch) -> f64 {
    if a.tuples.is_empty() || b.tuples.is_empty() {
        return 0.0;
    }
    let Scratch { cands, used_a, used_b } = scratch;
    cands.clear();
    for (i, ta) in a.tuples.iter().enumerate() {
        for (j, tb) in b.tuples.iter().enumerate() {
            let dd = (ta.distance - tb.distance).abs();
            if dd > p.tol_d {
                continue;
            }
            let da = circular_diff(ta.direction, tb.direction);
            let dori = circular_diff(ta.orientation_delta, tb.orientation_delta);
            if da <= p.tol_a && dori <= p.tol_a {
                cands.push((dd / p.tol_d + da / p.tol_a + dori / p.tol_a, i, j));
            }
        }
    }
    if cands.is_empty() {
        return 0.0;
    }
    cands.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    used_a.clear();
    used_a.resize(a.tuples.len(), false);
    used_b.clear();
    used_b.resize(b.tuples.len(), false);
    let mut matched = 0usize;
    for &(_, i, j) in cands.iter() {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matched += 1;
        }
    }
    matched as f64 / a.tuples.len().min(b.tuples.len()).max(1) as f64
}

fn floor_bin(v: f64, width: f64) -> i64 {
    (v / width).floor() as i64
}

/// One direction of the comparison: aligns `a` onto `b`. `sim(i, j)` is the
/// local similarity of `a[i]` and `b[j]`.
fn directed_score(a: &[Minutia], b: &[Minutia], sim: impl Fn(usize, usize) -> f64, p: &MatchParams) -> f64 {
    // (similarity, i, j, rotation bin, x bin, y bin)
    let mut pairs = Vec::new();
    for (i, ma) in a.iter().enumerate() {
        for (j, mb) in b.iter().enumerate() {
            let s = sim(i, j);
            if s <= 0.0 {
                continue;
            }
            let rot = wrap_angle(mb.theta - ma.theta);
            let (sn, cs) = rot.sin_cos();
            let tx = mb.x - (cs * ma.x - sn * ma.y);
            let ty = mb.y - (sn * ma.x + cs * ma.y);
            let rb = floor_bin(rot + PI, TAU / ROTATION_BINS as f64).rem_euclid(ROTATION_BINS);
            pairs.push((s, i, j, rb, floor_bin(tx, p.tol_d), floor_bin(ty, p.tol_d)));
        }
    }
    if pairs.is_empty() {
        return 0.0;
    }
    let mut votes: HashMap<(i64, i64, i64), f64> = HashMap::new();
    for &(s, _, _, rb, xb, yb) in &pairs {
        *votes.entry((rb, xb, yb)).or_default() += s;
    }
    let (&(rb0, xb0, yb0), _) = votes
        .iter()
        .max_by(|x, y| x.1.total_cmp(y.1).then_with(|| y.0.cmp(x.0)))
        .expect("non-empty");

    let near_rot = |rb: i64| {
        let d = (rb - rb0).rem_euclid(ROTATION_BINS);
        d <= 1 || d == ROTATION_BINS - 1
    };
    let mut kept: Vec<(f64, usize, usize)> = pairs
        .into_iter()
        .filter(|&(_, _, _, rb, xb, yb)| near_rot(rb) && (xb - xb0).abs() <= 1 && (yb - yb0).abs() <= 1)
        .map(|(s, i, j, ..)| (s, i, j))
        .collect();
    kept.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut total = 0.0;
    let mut taken = 0;
    for (s, i, j) in kept {
        if taken == p.top_pairs {
            break;
        }
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            total += s;
            taken += 1;
        }
    }
    (total / p.top_pairs as f64).clamp(0.0, 1.0)
}

/// Template plus its descriptors, for repeated comparisons.
#[derive(Debug, Clone)]
pub struct PreparedTemplate {
    pub minutiae: Vec<Minutia>,
    pub descriptors: Vec<LocalDescriptor>,
}

impl PreparedTemplate {
    pub fn new(t: &FingerprintTemplate, p: &MatchParams) -> Self {
        Self { minutiae: t.minutiae.clone(), descriptors: build_descriptors(t, p.k) }
    }
}

/// Local similarities are computed once, in the `a`-to-`b` direction, and
/// shared by both alignments.
pub fn match_prepared(a: &PreparedTemplate, b: &PreparedTemplate, p: &MatchParams) -> f64 {
    let nb = b.minutiae.len();
    let mut scratch = Scratch::default();
    let mut sims = Vec::with_capacity(a.minutiae.len() * nb);
    for da in &a.descriptors {
        for db in &b.descriptors {
            sims.push(local_similarity_with(da, db, p, &mut scratch));
        }
    }
    let ab = directed_score(&a.minutiae, &b.minutiae, |i, j| sims[i * nb + j], p);
    let ba = directed_score(&b.minutiae, &a.minutiae, |i, j| sims[j * nb + i], p);
    (ab + ba) / 2.0
}

/// Symmetric similarity in `[0, 1]`.
pub fn match_templates(t1: &FingerprintTemplate, t2: &FingerprintTemplate, p: &MatchParams) -> f64 {
    match_prepared(&PreparedTemplate::new(t1, p), &PreparedTemplate::new(t2, p), p)
}

fn selection_order(a: &Minutia, b: &Minutia) -> Ordering {
    let (ra, rb) = (a.reliability.unwrap_or(f64::NEG_INFINITY), b.reliability.unwrap_or(f64::NEG_INFINITY));
    rb.total_cmp(&ra)
        .then(a.y.total_cmp(&b.y))
        .then(a.x.total_cmp(&b.x))
        .then(a.kind.cmp(&b.kind))
        .then(a.theta.total_cmp(&b.theta))
}

/// Keeps the `k` most reliable minutiae, most reliable first.
pub fn filter_best_k(t: &FingerprintTemplate, k: usize) -> Result<FingerprintTemplate> {
    filter_by(t, k, selection_order)
}

/// Keeps the `k` least reliable minutiae (a baseline for the best-k protocol).
pub fn filter_worst_k(t: &FingerprintTemplate, k: usize) -> Result<FingerprintTemplate> {
    filter_by(t, k, |a, b| selection_order(b, a))
}

fn filter_by(t: &FingerprintTemplate, k: usize, order: impl Fn(&Minutia, &Minutia) -> Ordering) -> Result<FingerprintTemplate> {
    if let Some(i) = t.minutiae.iter().position(|m| m.reliability.is_none()) {
        return Err(Error::Contract(format!(
            "template f{}_i{}: minutia {i} has no reliability",
            t.finger_id, t.impression_id
        )));
    }
    let mut ms = t.minutiae.clone();
    ms.sort_by(order);
    ms.truncate(k);
    Ok(FingerprintTemplate { minutiae: ms, ..t.clone() })
}
