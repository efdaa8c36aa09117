use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::minutia::{Minutia, MinutiaKind};
use crate::error::{Error, Result};

const HEADER: &str = "MIDECON-TPL 1";

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintTemplate {
    pub finger_id: String,
    pub impression_id: String,
    pub minutiae: Vec<Minutia>,
    /// Fingerprint quality; set by scoring.
    pub quality: Option<f64>,
    /// Not serialized; filled from the manifest by callers that know it.
    pub source_image: Option<PathBuf>,
}

impl FingerprintTemplate {
    pub fn new(finger_id: impl Into<String>, impression_id: impl Into<String>, minutiae: Vec<Minutia>) -> Self {
        Self {
            finger_id: finger_id.into(),
            impression_id: impression_id.into(),
            minutiae,
            quality: None,
            source_image: None,
        }
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }

    pub fn reliabilities(&self) -> Option<Vec<f64>> {
        self.minutiae.iter().map(|m| m.reliability).collect()
    }

    pub fn validate(&self) -> Result<()> {
        check_id(&self.finger_id)?;
        check_id(&self.impression_id)?;
        for (i, m) in self.minutiae.iter().enumerate() {
            check_minutia(m).map_err(|msg| Error::Validation(format!("minutia {i}: {msg}")))?;
        }
        if let Some(q) = self.quality {
            if !q.is_finite() {
                return Err(Error::Validation(format!("quality {q} is not finite")));
            }
        }
        Ok(())
    }

    /// Checks that every minutia lies inside a `width x height` image.
    pub fn validate_within(&self, width: usize, height: usize) -> Result<()> {
        for (i, m) in self.minutiae.iter().enumerate() {
            if m.x >= width as f64 || m.y >= height as f64 {
                return Err(Error::Validation(format!(
                    "minutia {i} at ({}, {}) outside {width}x{height} image",
                    m.x, m.y
                )));
            }
        }
        Ok(())
    }
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == ',' || c == '=') {
        return Err(Error::Validation(format!("invalid identifier {id:?}")));
    }
    Ok(())
}

fn check_minutia(m: &Minutia) -> std::result::Result<(), String> {
    if !(m.x.is_finite() && m.y.is_finite() && m.x >= 0.0 && m.y >= 0.0) {
        return Err(format!("coordinate ({}, {}) out of range", m.x, m.y));
    }
    if !m.theta.is_finite() {
        return Err(format!("theta {} not finite", m.theta));
    }
    match m.reliability {
        Some(r) if r.is_nan() || r == f64::INFINITY => Err(format!("reliability {r} not allowed")),
        _ => Ok(()),
    }
}

/// Renders a template in the line-oriented text format.
pub fn write_template(t: &FingerprintTemplate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "finger={} impression={}", t.finger_id, t.impression_id);
    for m in &t.minutiae {
        let _ = write!(s, "{} {} {} {}", m.x, m.y, m.theta, m.kind);
        if let Some(r) = m.reliability {
            let _ = write!(s, " {}", fmt_real(r));
        }
        s.push('\n');
    }
    if let Some(q) = t.quality {
        let _ = writeln!(s, "quality={}", fmt_real(q));
    }
    s
}

/// Thirteen significant digits; `-inf` for unscorable minutiae.
fn fmt_real(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.12e}")
    }
}

pub fn save_template(t: &FingerprintTemplate, path: impl AsRef<Path>) -> Result<()> {
    t.validate()?;
    let path = path.as_ref();
    fs::write(path, write_template(t)).map_err(|e| Error::io(path, e))
}

pub fn load_template(path: impl AsRef<Path>) -> Result<FingerprintTemplate> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_template(&text, path)
}

/// Parses template text; `origin` only labels error messages.
pub fn parse_template(text: &str, origin: impl AsRef<Path>) -> Result<FingerprintTemplate> {
    let origin = origin.as_ref();
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("expected {HEADER:?}, found {other:?}"))),
        None => return Err(err(1, "empty file".into())),
    }
    let (n, ids) = lines.next().ok_or_else(|| err(2, "missing identifier line".into()))?;
    let mut finger = None;
    let mut impression = None;
    for tok in ids.split_whitespace() {
        match tok.split_once('=') {
            Some(("finger", v)) => finger = Some(v.to_string()),
            Some(("impression", v)) => impression = Some(v.to_string()),
            _ => return Err(err(n, format!("unexpected token {tok:?}"))),
        }
    }
    let (Some(finger), Some(impression)) = (finger, impression) else {
        return Err(err(n, "expected finger=<id> impression=<id>".into()));
    };

    let mut t = FingerprintTemplate::new(finger, impression, Vec::new());
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if t.quality.is_some() {
            return Err(err(n, "content after quality line".into()));
        }
        if let Some(q) = line.strip_prefix("quality=") {
            t.quality = Some(parse_real(q).ok_or_else(|| err(n, format!("bad quality {q:?}")))?);
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !(4..=5).contains(&toks.len()) {
            return Err(err(n, format!("expected 4 or 5 fields, found {}", toks.len())));
        }
        let num = |i: usize| parse_real(toks[i]).ok_or_else(|| err(n, format!("bad number {:?}", toks[i])));
        let kind = MinutiaKind::from_code(toks[3]).ok_or_else(|| err(n, format!("bad minutia type {:?}", toks[3])))?;
        let mut m = Minutia::new(num(0)?, num(1)?, num(2)?, kind);
        if toks.len() == 5 {
            m.reliability = Some(num(4)?);
        }
        check_minutia(&m).map_err(|msg| Error::Validation(format!("{}:{n}: {msg}", origin.display())))?;
        t.minutiae.push(m);
    }
    t.validate()?;
    Ok(t)
}

fn parse_real(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}
