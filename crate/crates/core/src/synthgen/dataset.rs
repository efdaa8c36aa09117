use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::degrade::{degrade_impression, DegradeParams};
use super::master::{gen_master, MasterParams, MasterPrint};
use crate::domain::{save_manifest, save_pgm, save_template, DatasetManifest, FingerprintTemplate, ManifestEntry, SampleId};
use crate::error::{Error, Result};
use crate::extraction::ExtractionConfig;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetParams {
    pub fingers: usize,
    pub impressions: usize,
    /// Degradation level per impression; impression `i` uses
    /// `levels[i % levels.len()]`.
    pub levels: Vec<f64>,
    pub master: MasterParams,
    pub extraction: ExtractionConfig,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            fingers: 20,
            impressions: 4,
            levels: vec![0.1, 0.3, 0.5, 0.7],
            master: MasterParams::default(),
            extraction: ExtractionConfig::default(),
        }
    }
}

impl DatasetParams {
    pub fn level(&self, impression: usize) -> f64 {
        self.levels[impression % self.levels.len()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.fingers == 0 || self.impressions == 0 {
            return Err(Error::Config("fingers and impressions must be positive".into()));
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::Config("levels must be a non-empty list of values in [0, 1]".into()));
        }
        Ok(())
    }

    /// Parameters echoed into the manifest header.
    pub fn describe(&self) -> BTreeMap<String, String> {
        let levels: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        [
            ("fingers", self.fingers.to_string()),
            ("impressions", self.impressions.to_string()),
            ("levels", levels.join(";")),
            ("width", self.master.width.to_string()),
            ("height", self.master.height.to_string()),
            ("ridge_period", self.master.ridge_period.to_string()),
            ("pad", self.master.pad.to_string()),
            ("iterations", self.master.iterations.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

pub fn finger_id(index: usize) -> String {
    format!("{:03}", index + 1)
}

pub fn impression_id(index: usize) -> String {
    (index + 1).to_string()
}

pub fn finger_seed(seed: u64, finger: usize) -> u64 {
    rng::derive_indexed(rng::derive_seed(seed, "finger"), finger as u64)
}

pub fn impression_seed(seed: u64, finger: usize, impression: usize) -> u64 {
    rng::derive_indexed(rng::derive_seed(finger_seed(seed, finger), "impression"), impression as u64)
}

/// Ground truth for an impression: the clean-canvas minutiae moved by the
/// impression's pose, restricted to the extractor's usable frame.
pub fn ground_truth(master: &MasterPrint, pose: super::Pose, margin: usize) -> Vec<crate::domain::Minutia> {
    let (w, h) = (master.image.width(), master.image.height());
    let m = margin as f64;
    master
        .minutiae
        .iter()
        .map(|mi| pose.apply(mi, w, h))
        .filter(|mi| mi.x >= m && mi.y >= m && mi.x < w as f64 - m && mi.y < h as f64 - m)
        .collect()
}

struct Generated {
    finger: usize,
    impressions: Vec<(crate::domain::GrayImage, FingerprintTemplate)>,
}

fn generate_finger(params: &DatasetParams, seed: u64, finger: usize) -> Result<Generated> {
    let fid = finger_id(finger);
    let master = gen_master(finger_seed(seed, finger), &fid, &params.master, &params.extraction)?;
    let impressions = (0..params.impressions)
        .map(|i| {
            let dp = DegradeParams::from_level(params.level(i));
            let imp = degrade_impression(&master, &dp, impression_seed(seed, finger, i));
            let gt = ground_truth(&master, imp.pose, params.extraction.border_margin);
            (imp.image, FingerprintTemplate::new(fid.clone(), impression_id(i), gt))
        })
        .collect();
    Ok(Generated { finger, impressions })
}

/// Writes `images/`, `templates/` and `manifest.csv` under `out_dir`.
/// Fingers are generated in parallel; output bytes do not depend on scheduling.
pub fn gen_dataset(params: &DatasetParams, seed: u64, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    params.validate()?;
    let out = out_dir.as_ref();
    for sub in ["images", "templates"] {
        let d = out.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let generated: Vec<Generated> =
        (0..params.fingers).into_par_iter().map(|f| generate_finger(params, seed, f)).collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(params.fingers * params.impressions);
    for g in &generated {
        for (image, tpl) in &g.impressions {
            let id = SampleId::new(finger_id(g.finger), tpl.impression_id.clone());
            let image_rel = PathBuf::from("images").join(format!("{id}.pgm"));
            let template_rel = PathBuf::from("templates").join(format!("{id}.tpl"));
            save_pgm(image, out.join(&image_rel))?;
            save_template(tpl, out.join(&template_rel))?;
            entries.push(ManifestEntry { id, image: image_rel, template: template_rel });
        }
    }
    let manifest =
        DatasetManifest { entries, seed, generator_params: params.describe(), root: out.to_path_buf() };
    save_manifest(&manifest, out.join("manifest.csv"))?;
    Ok(manifest)
}
