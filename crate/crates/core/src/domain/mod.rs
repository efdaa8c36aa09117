//! Core data types and the plain-text file formats shared by every module.

mod image;
mod manifest;
mod minutia;
mod template;

pub use image::{load_pgm, save_pgm, GrayImage};
pub use manifest::{load_manifest, save_manifest, DatasetManifest, ManifestEntry, SampleId};
pub use minutia::{normalize_angle, wrap_angle, Minutia, MinutiaKind};
pub use template::{load_template, parse_template, save_template, write_template, FingerprintTemplate};
