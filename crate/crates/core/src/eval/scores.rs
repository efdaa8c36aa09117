use std::collections::BTreeMap;

use rand::seq::index;
use rayon::prelude::*;

use crate::domain::{load_template, DatasetManifest, FingerprintTemplate, SampleId};
use crate::error::{Error, Result};
use crate::matcher::{match_prepared, MatchParams, PreparedTemplate};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GenuineScore {
    pub finger: String,
    pub imp_a: String,
    pub imp_b: String,
    pub score: f64,
}

impl GenuineScore {
    pub fn samples(&self) -> (SampleId, SampleId) {
        (SampleId::new(&*self.finger, &*self.imp_a), SampleId::new(&*self.finger, &*self.imp_b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpostorScore {
    pub finger_a: String,
    pub finger_b: String,
    pub imp_a: String,
    pub imp_b: String,
    pub score: f64,
}

impl ImpostorScore {
    pub fn samples(&self) -> (SampleId, SampleId) {
        (SampleId::new(&*self.finger_a, &*self.imp_a), SampleId::new(&*self.finger_b, &*self.imp_b))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    pub genuine: Vec<GenuineScore>,
    pub impostor: Vec<ImpostorScore>,
}

impl ScoreSet {
    pub fn genuine_scores(&self) -> Vec<f64> {
        self.genuine.iter().map(|g| g.score).collect()
    }

    pub fn impostor_scores(&self) -> Vec<f64> {
        self.impostor.iter().map(|g| g.score).collect()
    }

    /// Every sample taking part in at least one comparison, sorted.
    pub fn samples(&self) -> Vec<SampleId> {
        let mut all: Vec<SampleId> = self
            .genuine
            .iter()
            .map(GenuineScore::samples)
            .chain(self.impostor.iter().map(ImpostorScore::samples))
            .flat_map(|(a, b)| [a, b])
            .collect();
        all.sort();
        all.dedup();
        all
    }
}

/// Genuine comparisons are all impression pairs of a finger; impostors are a
/// seeded uniform sample without replacement of cross-finger pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    /// Impostor count as a multiple of the genuine count.
    pub impostor_factor: f64,
    pub seed: u64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self { impostor_factor: 10.0, seed: 0 }
    }
}

pub type IndexPairs = Vec<(usize, usize)>;

/// Comparison pairs as indices into `ids` (sorted), split into genuine and
/// sampled impostor lists.
pub fn comparison_pairs(ids: &[SampleId], protocol: &Protocol) -> (IndexPairs, IndexPairs) {
    let mut genuine = Vec::new();
    let mut pool = Vec::new();
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            if ids[a].finger == ids[b].finger {
                genuine.push((a, b));
            } else {
                pool.push((a, b));
            }
        }
    }
    let want = ((genuine.len() as f64 * protocol.impostor_factor).round() as usize).min(pool.len());
    let mut g = rng::chacha(rng::derive_seed(protocol.seed, "impostors"));
    let mut picked = index::sample(&mut g, pool.len(), want).into_vec();
    picked.sort_unstable();
    let impostor = picked.into_iter().map(|i| pool[i]).collect();
    (genuine, impostor)
}

/// Scores a set of templates keyed by sample. Comparisons run in parallel;
/// results keep the sequential order.
pub fn compute_scores_from(
    templates: &BTreeMap<SampleId, FingerprintTemplate>,
    params: &MatchParams,
    protocol: &Protocol,
) -> Result<ScoreSet> {
    params.validate()?;
    let ids: Vec<SampleId> = templates.keys().cloned().collect();
    let prepared: Vec<PreparedTemplate> =
        templates.values().collect::<Vec<_>>().par_iter().map(|t| PreparedTemplate::new(t, params)).collect();
    let (gen_pairs, imp_pairs) = comparison_pairs(&ids, protocol);
    let score = |&(a, b): &(usize, usize)| match_prepared(&prepared[a], &prepared[b], params);
    let gen_scores: Vec<f64> = gen_pairs.par_iter().map(score).collect();
    let imp_scores: Vec<f64> = imp_pairs.par_iter().map(score).collect();
    Ok(ScoreSet {
        genuine: gen_pairs
            .iter()
            .zip(gen_scores)
            .map(|(&(a, b), score)| GenuineScore {
                finger: ids[a].finger.clone(),
                imp_a: ids[a].impression.clone(),
                imp_b: ids[b].impression.clone(),
                score,
            })
            .collect(),
        impostor: imp_pairs
            .iter()
            .zip(imp_scores)
            .map(|(&(a, b), score)| ImpostorScore {
                finger_a: ids[a].finger.clone(),
                finger_b: ids[b].finger.clone(),
                imp_a: ids[a].impression.clone(),
                imp_b: ids[b].impression.clone(),
                score,
            })
            .collect(),
    })
}

pub fn load_templates(manifest: &DatasetManifest) -> Result<BTreeMap<SampleId, FingerprintTemplate>> {
    let mut out = BTreeMap::new();
    for e in &manifest.entries {
        let t = load_template(manifest.template_path(e))?;
        if out.insert(e.id.clone(), t).is_some() {
            return Err(Error::Validation(format!("duplicate sample {}", e.id)));
        }
    }
    Ok(out)
}

pub fn compute_scores(manifest: &DatasetManifest, params: &MatchParams, protocol: &Protocol) -> Result<ScoreSet> {
    compute_scores_from(&load_templates(manifest)?, params, protocol)
}
