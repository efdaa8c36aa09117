use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("master_seed", "7", "master seed every component stream derives from"),
    ("out", "out", "output directory"),
    ("data", "", "dataset directory or manifest.csv"),
    ("model", "", "model file"),
    ("threads", "0", "worker threads, 0 for all cores"),
    ("fingers", "20", "fingers to synthesize"),
    ("impressions", "4", "impressions per finger"),
    ("synth.levels", "0.1,0.3,0.5,0.7", "degradation level per impression"),
    ("synth.width", "256", "image width"),
    ("synth.height", "288", "image height"),
    ("synth.ridge_period", "9", "ridge period in pixels"),
    ("synth.pad", "64", "canvas padding around the frame"),
    ("synth.iterations", "6", "ridge filtering iterations"),
    ("smooth.sigma", "1", "smoothing before binarization"),
    ("binarize.window", "15", "local mean window"),
    ("orient.block", "17", "orientation block size"),
    ("detect.border_margin", "12", "minutiae closer to the border are ignored"),
    ("detect.min_separation", "8", "minimum distance between minutiae"),
    ("detect.min_component", "12", "smallest skeleton component kept"),
    ("patch.side", "32", "classifier patch side"),
    ("patch.align", "true", "rotate patches to the minutia orientation"),
    ("net.dropout", "0.3", "dropout rate before the last dense layer"),
    ("train.epochs", "30", "training epochs"),
    ("train.lr", "0.01", "learning rate"),
    ("train.batch", "32", "mini-batch size"),
    ("train.momentum", "0.9", "momentum"),
    ("train.val_fraction", "0.2", "held-out fraction"),
    ("train.max_per_class", "2500", "cap on patches per class"),
    ("train.neg_distance", "16", "minimum distance of negatives from any minutia"),
    ("m", "100", "stochastic passes per minutia"),
    ("n", "20", "reliabilities averaged into fingerprint quality"),
    ("combine_mode", "moc_minus_mod", "moc_minus_mod, paper_literal_moc_plus_var, moc_only or mod_only"),
    ("mod_kind", "pairwise_abs", "pairwise_abs or variance"),
    ("match.K", "6", "neighbours per descriptor"),
    ("match.tol_d", "12", "distance tolerance in pixels"),
    ("match.tol_a", "0.39269908169872414", "angle tolerance in radians"),
    ("match.top_pairs", "12", "pairs summed into the score"),
    ("eval.fmr", "0.1,0.01,0.001", "FMR targets"),
    ("eval.reject_grid", "0,0.05,0.1,0.15,0.2,0.25,0.3", "rejected fractions"),
    ("eval.impostor_factor", "10", "impostor comparisons per genuine comparison"),
    ("bestk.k", "20,25,30,35,40", "minutiae kept per template"),
    ("bestk.sources", "midecon,baseline_random,baseline_inverse", "minutia selection rules"),
    ("ablate.modes", "moc_minus_mod,moc_only,mod_only", "combination modes compared"),
    ("nsweep.n", "5,10,20,40,80", "values of n compared"),
];

/// Effective configuration: defaults, then a `key=value` file, then flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect() }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.into();
                Ok(())
            }
            None => Err(Error::Config(format!("unknown config key {key:?}"))),
        }
    }

    /// Builder-style [`RunConfig::set`] for tests and scripts.
    pub fn with(mut self, key: &str, value: impl ToString) -> Result<Self> {
        self.set(key, value.to_string())?;
        Ok(self)
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn merge_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(origin, i + 1, "expected key=value"))?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.merge_text(&text, path)
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("config key {key} is not declared"))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key);
        v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let v = self.get(key);
        if v.trim().is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse item {s:?}"))))
            .collect()
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        let v = self.get(key);
        if v.is_empty() {
            return Err(Error::Config(format!("{key} is required")));
        }
        Ok(PathBuf::from(v))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Echoes the effective configuration as `run_config.txt` in `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("run_config.txt");
        fs::write(&path, self.render()).map_err(|e| Error::io(&path, e))
    }
}
