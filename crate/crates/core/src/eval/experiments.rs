use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::erc::erc;
use super::metrics::fnmr_at_fmr;
use super::report::{BestKRow, BestKTable, LabeledCurve};
use super::scores::{compute_scores_from, Protocol, ScoreSet};
use crate::domain::{FingerprintTemplate, SampleId};
use crate::error::{Error, Result};
use crate::matcher::{filter_best_k, filter_worst_k, MatchParams};
use crate::reliability::{apply_reliabilities, CombineMode, ReliabilityConfig, StochasticPrediction};
use crate::rng;

/// A sample's template and the stochastic outputs per minutia (`None` where
/// no patch fits).
pub type SamplePredictions = (FingerprintTemplate, Vec<Option<StochasticPrediction<f64>>>);

/// Stochastic predictions of every extracted minutia, per sample. Reliabilities
/// and qualities for any combination mode or `n` derive from these without
/// rerunning the network.
#[derive(Debug, Clone, Default)]
pub struct PredictionSet {
    pub samples: BTreeMap<SampleId, SamplePredictions>,
}

impl PredictionSet {
    pub fn scored(&self, cfg: &ReliabilityConfig) -> Result<BTreeMap<SampleId, FingerprintTemplate>> {
        self.samples.iter().map(|(id, (t, p))| Ok((id.clone(), apply_reliabilities(t, p, cfg)?))).collect()
    }

    pub fn qualities(&self, cfg: &ReliabilityConfig) -> Result<BTreeMap<SampleId, f64>> {
        Ok(qualities_of(&self.scored(cfg)?))
    }

    /// Templates without reliabilities, as matched by the ERC experiments.
    pub fn templates(&self) -> BTreeMap<SampleId, FingerprintTemplate> {
        self.samples.iter().map(|(id, (t, _))| (id.clone(), t.clone())).collect()
    }
}

/// Fingerprint qualities of scored templates; an unscored template counts as 0.
pub fn qualities_of(templates: &BTreeMap<SampleId, FingerprintTemplate>) -> BTreeMap<SampleId, f64> {
    templates.iter().map(|(id, t)| (id.clone(), t.quality.unwrap_or(0.0))).collect()
}

/// Uniform random qualities, the uninformed rejection baseline.
pub fn random_qualities(samples: &[SampleId], seed: u64) -> BTreeMap<SampleId, f64> {
    let mut g = rng::chacha(rng::derive_seed(seed, "random_quality"));
    samples.iter().map(|s| (s.clone(), g.random::<f64>())).collect()
}

/// Which minutiae survive the best-k filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualitySource {
    /// Highest network reliabilities.
    Midecon,
    /// Seeded random reliabilities.
    BaselineRandom(u64),
    /// Lowest network reliabilities.
    BaselineInverse,
}

impl QualitySource {
    pub fn name(self) -> &'static str {
        match self {
            QualitySource::Midecon => "midecon",
            QualitySource::BaselineRandom(_) => "baseline_random",
            QualitySource::BaselineInverse => "baseline_inverse",
        }
    }
}

impl fmt::Display for QualitySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `midecon`, `baseline_inverse` or `baseline_random`; the random
/// baseline takes `seed`.
impl FromStr for QualitySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midecon" => Ok(QualitySource::Midecon),
            "baseline_inverse" => Ok(QualitySource::BaselineInverse),
            "baseline_random" => Ok(QualitySource::BaselineRandom(0)),
            _ => Err(Error::Validation(format!("unknown quality source {s:?}"))),
        }
    }
}

fn filtered(
    templates: &BTreeMap<SampleId, FingerprintTemplate>,
    k: usize,
    source: QualitySource,
) -> Result<BTreeMap<SampleId, FingerprintTemplate>> {
    let mut out = BTreeMap::new();
    for (id, t) in templates {
        let f = match source {
            QualitySource::Midecon => filter_best_k(t, k)?,
            QualitySource::BaselineInverse => filter_worst_k(t, k)?,
            QualitySource::BaselineRandom(seed) => {
                let mut g = rng::chacha(rng::derive_seed(seed, &format!("random_reliability/{id}")));
                let mut r = t.clone();
                r.minutiae.iter_mut().for_each(|m| m.reliability = Some(g.random::<f64>()));
                filter_best_k(&r, k)?
            }
        };
        out.insert(id.clone(), f);
    }
    Ok(out)
}

/// FNMR at each FMR target after keeping `k` minutiae per template.
pub fn best_k_experiment(
    templates: &BTreeMap<SampleId, FingerprintTemplate>,
    k_list: &[usize],
    fmr_list: &[f64],
    source: QualitySource,
    params: &MatchParams,
    protocol: &Protocol,
) -> Result<BestKTable> {
    let mut seen = k_list.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != k_list.len() {
        return Err(Error::Config(format!("k values must be distinct: {k_list:?}")));
    }
    let mut table = BestKTable::default();
    for &k in k_list {
        let scores = compute_scores_from(&filtered(templates, k, source)?, params, protocol)?;
        for &fmr in fmr_list {
            let op = fnmr_at_fmr(&scores.genuine_scores(), &scores.impostor_scores(), fmr)?;
            table.rows.push(BestKRow { k, fmr_target: fmr, fnmr: op.fnmr, quality_source: source.name().into() });
        }
    }
    Ok(table)
}

/// ERCs for each quality variant at each FMR target, in that nesting order.
pub fn erc_family(
    scores: &ScoreSet,
    variants: &[(String, BTreeMap<SampleId, f64>)],
    fmr_list: &[f64],
    grid: &[f64],
) -> Result<Vec<LabeledCurve>> {
    let mut out = Vec::new();
    for (mode, q) in variants {
        for &fmr in fmr_list {
            out.push(LabeledCurve { mode: mode.clone(), curve: erc(scores, q, fmr, grid)? });
        }
    }
    Ok(out)
}

/// ERCs with qualities from each combination mode. Match scores do not depend
/// on the mode, so they are shared.
pub fn ablation_run(
    predictions: &PredictionSet,
    scores: &ScoreSet,
    base: &ReliabilityConfig,
    modes: &[CombineMode],
    fmr_list: &[f64],
    grid: &[f64],
) -> Result<Vec<LabeledCurve>> {
    let variants = modes
        .iter()
        .map(|&mode| Ok((mode.name().to_string(), predictions.qualities(&ReliabilityConfig { combine_mode: mode, ..*base })?)))
        .collect::<Result<Vec<_>>>()?;
    erc_family(scores, &variants, fmr_list, grid)
}

/// ERCs with fingerprint qualities averaged over the best `n` reliabilities,
/// labelled `n<value>`.
pub fn n_sweep(
    predictions: &PredictionSet,
    scores: &ScoreSet,
    base: &ReliabilityConfig,
    n_list: &[usize],
    fmr_list: &[f64],
    grid: &[f64],
) -> Result<Vec<LabeledCurve>> {
    let variants = n_list
        .iter()
        .map(|&n| Ok((format!("n{n}"), predictions.qualities(&ReliabilityConfig { n, ..*base })?)))
        .collect::<Result<Vec<_>>>()?;
    erc_family(scores, &variants, fmr_list, grid)
}
