use std::collections::{BTreeMap, BTreeSet};

use super::metrics::fnmr_at_fmr;
use super::scores::ScoreSet;
use crate::domain::SampleId;
use crate::error::{Error, Result};

/// Default rejection grid: 0 to 0.30 in steps of 0.05.
pub fn default_reject_grid() -> Vec<f64> {
    (0..=6).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErcPoint {
    pub reject_fraction: f64,
    /// `None` once every genuine comparison has been discarded.
    pub fnmr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErcCurve {
    pub fmr_target: f64,
    pub threshold: f64,
    pub points: Vec<ErcPoint>,
}

impl ErcCurve {
    pub fn fnmr_at(&self, reject_fraction: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.reject_fraction - reject_fraction).abs() < 1e-12).and_then(|p| p.fnmr)
    }
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|r| !(0.0..1.0).contains(r)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("reject grid {grid:?} must be strictly increasing within [0, 1)")));
    }
    Ok(())
}

/// Samples ordered from lowest to highest quality, ties by sample id.
pub fn rejection_order(samples: &[SampleId], qualities: &BTreeMap<SampleId, f64>) -> Result<Vec<SampleId>> {
    let mut ranked = Vec::with_capacity(samples.len());
    for s in samples {
        let q = *qualities.get(s).ok_or_else(|| Error::Contract(format!("no quality for sample {s}")))?;
        ranked.push((q, s.clone()));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(ranked.into_iter().map(|(_, s)| s).collect())
}

/// Error-versus-reject curve with the threshold fixed at zero rejection. A
/// comparison is dropped when either of its samples is rejected.
pub fn erc(s: &ScoreSet, qualities: &BTreeMap<SampleId, f64>, fmr_target: f64, grid: &[f64]) -> Result<ErcCurve> {
    check_grid(grid)?;
    let op = fnmr_at_fmr(&s.genuine_scores(), &s.impostor_scores(), fmr_target)?;
    let order = rejection_order(&s.samples(), qualities)?;
    let n = order.len();
    let points = grid
        .iter()
        .map(|&rho| {
            let cut = (rho * n as f64 + 1e-9).floor() as usize;
            if rho == 0.0 {
                return ErcPoint { reject_fraction: rho, fnmr: Some(op.fnmr) };
            }
            let rejected: BTreeSet<&SampleId> = order[..cut.min(n)].iter().collect();
            let kept: Vec<f64> = s
                .genuine
                .iter()
                .filter(|g| {
                    let (a, b) = g.samples();
                    !rejected.contains(&a) && !rejected.contains(&b)
                })
                .map(|g| g.score)
                .collect();
            let fnmr = if kept.is_empty() {
                None
            } else {
                Some(kept.iter().filter(|&&v| v < op.threshold).count() as f64 / kept.len() as f64)
            };
            ErcPoint { reject_fraction: rho, fnmr }
        })
        .collect();
    Ok(ErcCurve { fmr_target, threshold: op.threshold, points })
}
