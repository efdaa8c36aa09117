//! Minutia detection reliability from the agreement of stochastic network
//! variants, and fingerprint quality as the mean of the best reliabilities.
//!
//! For a set of `m` dropout-pass probabilities `x` of the class "minutia":
//!
//! * centrality `moc(x)` is the arithmetic mean;
//! * dispersion is either the mean absolute difference over unordered pairs
//!   ([`mod_pairwise`]) or the population variance ([`mod_variance`]);
//! * the reliability combines both with unit weights according to
//!   [`CombineMode`]. The default subtracts the pairwise dispersion, so that
//!   stronger agreement between passes gives a higher reliability.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::domain::{FingerprintTemplate, GrayImage, Minutia};
use crate::error::{Error, Result};
use crate::extraction::{crop_patch, PatchSpec};
use crate::neuralnet::{DropoutPlan, Masks, NetworkParams};
use crate::scalar::Scalar;

/// The `m` per-pass probabilities of class "minutia" for one minutia.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPrediction<T> {
    values: Vec<T>,
}

impl<T: Scalar> StochasticPrediction<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Contract(format!("need at least 2 stochastic outputs, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::Contract(format!("stochastic output {v} outside [0, 1]")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CombineMode {
    /// `moc - mod`
    #[default]
    MocMinusMod,
    /// `moc + variance`, the displayed formula taken literally.
    PaperLiteralMocPlusVar,
    MocOnly,
    /// `-mod`
    ModOnly,
}

impl CombineMode {
    pub const ALL: [CombineMode; 4] =
        [CombineMode::MocMinusMod, CombineMode::PaperLiteralMocPlusVar, CombineMode::MocOnly, CombineMode::ModOnly];

    pub fn name(self) -> &'static str {
        match self {
            CombineMode::MocMinusMod => "moc_minus_mod",
            CombineMode::PaperLiteralMocPlusVar => "paper_literal_moc_plus_var",
            CombineMode::MocOnly => "moc_only",
            CombineMode::ModOnly => "mod_only",
        }
    }
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown combine_mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModKind {
    #[default]
    PairwiseAbs,
    Variance,
}

impl ModKind {
    pub fn name(self) -> &'static str {
        match self {
            ModKind::PairwiseAbs => "pairwise_abs",
            ModKind::Variance => "variance",
        }
    }
}

impl fmt::Display for ModKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairwise_abs" => Ok(ModKind::PairwiseAbs),
            "variance" => Ok(ModKind::Variance),
            _ => Err(Error::Validation(format!("unknown mod_kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReliabilityConfig {
    /// Stochastic passes per minutia.
    pub m: usize,
    pub combine_mode: CombineMode,
    pub mod_kind: ModKind,
    /// Reliabilities averaged into the fingerprint quality.
    pub n: usize,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        Self { m: 100, combine_mode: CombineMode::default(), mod_kind: ModKind::default(), n: 20 }
    }
}

impl ReliabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Contract(format!("m = {} must be at least 2", self.m)));
        }
        if self.n < 1 {
            return Err(Error::Contract("n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Measure of centrality: the mean.
pub fn moc<T: Scalar>(x: &StochasticPrediction<T>) -> T {
    let v = x.values();
    v.iter().copied().sum::<T>() / T::lit(v.len() as f64)
}

/// Mean absolute difference over unordered distinct pairs,
/// `2 / (m (m - 1)) * sum_{i<j} |x_i - x_j|`.
///
/// Evaluated in `O(m log m)`: after sorting ascending, element `k` (0-based)
/// contributes `x_(k) * (2k - m + 1)` to the pair sum.
pub fn mod_pairwise<T: Scalar>(x: &StochasticPrediction<T>) -> T {
    let mut v = x.values().to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("validated values are not NaN"));
    let m = v.len();
    // The weights sum to zero, so shifting by the minimum changes nothing but
    // keeps constant inputs exactly at 0.
    let lo = v[0];
    let sum: T = v.iter().enumerate().map(|(k, xi)| (*xi - lo) * T::lit(2.0 * k as f64 + 1.0 - m as f64)).sum();
    (sum * T::lit(2.0 / (m as f64 * (m as f64 - 1.0)))).max(T::zero())
}

/// Population variance, `E((x - E(x))^2)`.
pub fn mod_variance<T: Scalar>(x: &StochasticPrediction<T>) -> T {
    let mean = moc(x);
    let v = x.values();
    v.iter().map(|xi| (*xi - mean) * (*xi - mean)).sum::<T>() / T::lit(v.len() as f64)
}

fn dispersion<T: Scalar>(x: &StochasticPrediction<T>, kind: ModKind) -> T {
    match kind {
        ModKind::PairwiseAbs => mod_pairwise(x),
        ModKind::Variance => mod_variance(x),
    }
}

/// Minutia reliability (its quality) under the configured combination.
pub fn detection_reliability<T: Scalar>(x: &StochasticPrediction<T>, cfg: &ReliabilityConfig) -> T {
    match cfg.combine_mode {
        CombineMode::MocMinusMod => moc(x) - dispersion(x, cfg.mod_kind),
        CombineMode::PaperLiteralMocPlusVar => moc(x) + mod_variance(x),
        CombineMode::MocOnly => moc(x),
        CombineMode::ModOnly => -dispersion(x, cfg.mod_kind),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerprintQuality<T> {
    pub value: T,
    /// Set when there were no reliabilities to average; `value` is then 0.
    pub no_minutiae: bool,
}

/// Mean of the `min(n, len)` largest reliabilities.
pub fn fingerprint_quality<T: Scalar>(reliabilities: &[T], n: usize) -> Result<FingerprintQuality<T>> {
    if n < 1 {
        return Err(Error::Contract("n must be at least 1".into()));
    }
    if reliabilities.is_empty() {
        return Ok(FingerprintQuality { value: T::zero(), no_minutiae: true });
    }
    let mut v = reliabilities.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let take = n.min(v.len());
    let value = v[..take].iter().copied().sum::<T>() / T::lit(take as f64);
    Ok(FingerprintQuality { value, no_minutiae: false })
}

/// Canonical rank of every minutia: position after sorting by
/// `(y, x, kind, theta)`, ties kept in input order.
fn canonical_ranks(minutiae: &[Minutia]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..minutiae.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&minutiae[a], &minutiae[b]);
        p.y.total_cmp(&q.y)
            .then(p.x.total_cmp(&q.x))
            .then(p.kind.cmp(&q.kind))
            .then(p.theta.total_cmp(&q.theta))
    });
    let mut rank = vec![0; minutiae.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Runs `m` dropout-active passes over every minutia's patch.
///
/// Pass `j` of the minutia with canonical rank `i` uses the plan
/// `(master_seed, i * m + j)`, so predictions do not depend on the order in which
/// minutiae are listed. `None` marks a minutia whose patch leaves the image.
pub fn predict_minutiae<T: Scalar>(
    net: &NetworkParams<T>,
    template: &FingerprintTemplate,
    image: &GrayImage,
    m: usize,
    master_seed: u64,
    patch: &PatchSpec,
) -> Result<Vec<Option<StochasticPrediction<T>>>> {
    if m < 2 {
        return Err(Error::Contract(format!("m = {m} must be at least 2")));
    }
    let ranks = canonical_ranks(&template.minutiae);
    template
        .minutiae
        .par_iter()
        .zip(ranks)
        .map(|(minutia, rank)| {
            let Some(p) = crop_patch(image, minutia, patch)? else {
                return Ok(None);
            };
            let prefix = net.prefix(&net.input_from_patch(&p)?)?;
            let values = (0..m)
                .map(|j| {
                    let plan = DropoutPlan::new(master_seed, (rank * m + j) as u64);
                    net.tail(&prefix, &Masks::Plan(plan))[0]
                })
                .collect();
            StochasticPrediction::new(values).map(Some)
        })
        .collect()
}

/// Writes reliabilities derived from `predictions` into a copy of `template`
/// (unscorable minutiae get `-inf`) and sets its fingerprint quality.
pub fn apply_reliabilities<T: Scalar>(
    template: &FingerprintTemplate,
    predictions: &[Option<StochasticPrediction<T>>],
    cfg: &ReliabilityConfig,
) -> Result<FingerprintTemplate> {
    cfg.validate()?;
    if predictions.len() != template.minutiae.len() {
        return Err(Error::Contract("one prediction slot per minutia required".into()));
    }
    let mut out = template.clone();
    for (m, p) in out.minutiae.iter_mut().zip(predictions) {
        m.reliability = Some(match p {
            Some(p) => detection_reliability(p, cfg).as_f64(),
            None => f64::NEG_INFINITY,
        });
    }
    let finite: Vec<f64> = out.minutiae.iter().filter_map(|m| m.reliability).filter(|r| r.is_finite()).collect();
    out.quality = Some(fingerprint_quality(&finite, cfg.n)?.value);
    Ok(out)
}

/// Scores every minutia of `template` and the template itself.
pub fn score_minutiae<T: Scalar>(
    net: &NetworkParams<T>,
    template: &FingerprintTemplate,
    image: &GrayImage,
    cfg: &ReliabilityConfig,
    master_seed: u64,
    patch: &PatchSpec,
) -> Result<FingerprintTemplate> {
    cfg.validate()?;
    let predictions = predict_minutiae(net, template, image, cfg.m, master_seed, patch)?;
    apply_reliabilities(template, &predictions, cfg)
}
