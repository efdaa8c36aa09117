//! Deterministic synthetic fingerprints: orientation fields, clean master
//! prints, degraded impressions and whole datasets on disk.

mod dataset;
mod degrade;
mod field;
mod master;

pub use dataset::{
    finger_id, finger_seed, gen_dataset, ground_truth, impression_id, impression_seed, DatasetParams,
};
pub use degrade::{degrade, degrade_impression, posed_master, DegradeParams, Impression, Pose};
pub use field::{angle_diff_pi, gen_orientation_field, OrientationField, Singularity, SingularityKind};
pub use master::{gen_master, MasterParams, MasterPrint};
