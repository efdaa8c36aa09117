use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const HEADER: &str = "MIDECON-DS 1";

/// `(finger_id, impression_id)`; ordering is the tie-break order used by rejection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleId {
    pub finger: String,
    pub impression: String,
}

impl SampleId {
    pub fn new(finger: impl Into<String>, impression: impl Into<String>) -> Self {
        Self { finger: finger.into(), impression: impression.into() }
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}_i{}", self.finger, self.impression)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: SampleId,
    /// Paths are stored relative to the manifest's directory when possible.
    pub image: PathBuf,
    pub template: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub seed: u64,
    pub generator_params: BTreeMap<String, String>,
    /// Directory relative entry paths are resolved against.
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn image_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.image)
    }

    pub fn template_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.template)
    }

    pub fn check_unique(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(&e.id) {
                return Err(Error::Validation(format!(
                    "duplicate entry finger={} impression={}",
                    e.id.finger, e.id.impression
                )));
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = format!("{HEADER}\n# seed={}\n", self.seed);
        for (k, v) in &self.generator_params {
            let _ = writeln!(s, "# param {k}={v}");
        }
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                e.id.finger,
                e.id.impression,
                e.image.display(),
                e.template.display()
            );
        }
        s
    }
}

pub fn save_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    m.check_unique()?;
    let path = path.as_ref();
    fs::write(path, m.render()).map_err(|e| Error::io(path, e))
}

/// Loads and validates a manifest; every referenced file must exist.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut m = DatasetManifest { root, ..Default::default() };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => return Err(Error::parse(path, n, format!("expected {HEADER:?}, found {other:?}"))),
        None => return Err(Error::parse(path, 1, "empty manifest")),
    }
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(seed) = comment.strip_prefix("seed=") {
                m.seed = seed.parse().map_err(|_| Error::parse(path, n, format!("bad seed {seed:?}")))?;
            } else if let Some((k, v)) = comment.strip_prefix("param ").and_then(|p| p.split_once('=')) {
                m.generator_params.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 || cols.iter().any(|c| c.is_empty()) {
            return Err(Error::parse(path, n, "expected finger,impression,image_path,template_path"));
        }
        m.entries.push(ManifestEntry {
            id: SampleId::new(cols[0], cols[1]),
            image: PathBuf::from(cols[2]),
            template: PathBuf::from(cols[3]),
        });
    }
    m.check_unique()?;
    for e in &m.entries {
        for p in [m.image_path(e), m.template_path(e)] {
            if !p.exists() {
                return Err(Error::Validation(format!("{}: referenced file {} not found", path.display(), p.display())));
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        for f in ["a.pgm", "a.tpl", "b.pgm", "b.tpl"] {
            fs::write(dir.join(f), "").unwrap();
        }
        let p = dir.join("manifest.csv");
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_rows_and_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "MIDECON-DS 1\n# seed=7\n# param levels=0.1;0.3\n# a comment\n1,1,a.pgm,a.tpl\n1,2,b.pgm,b.tpl\n");
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.seed, 7);
        assert_eq!(m.generator_params["levels"], "0.1;0.3");
        assert_eq!(m.entries[1].id, SampleId::new("1", "2"));
        assert_eq!(load_manifest(&p).unwrap().render(), m.render());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "MIDECON-DS 1\n1,1,a.pgm,a.tpl\n1,1,b.pgm,b.tpl\n");
        assert!(matches!(load_manifest(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "MIDECON-DS 1\n1,1,a.pgm,zzz.tpl\n");
        assert!(matches!(load_manifest(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn bad_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "MIDECON-DS 1\n1,1,a.pgm\n");
        assert!(matches!(load_manifest(&p), Err(Error::Parse { line: 2, .. })));
    }
}
