//! Verification experiments: genuine and impostor scores, FNMR at a target
//! FMR, error-versus-reject curves, the best-k minutiae protocol, and reports.

mod erc;
mod experiments;
mod metrics;
mod report;
mod scores;

pub use erc::{check_grid, default_reject_grid, erc, rejection_order, ErcCurve, ErcPoint};
pub use experiments::{
    ablation_run, best_k_experiment, erc_family, n_sweep, qualities_of, random_qualities, PredictionSet, QualitySource,
};
pub use metrics::{fnmr_at_fmr, OperatingPoint};
pub use report::{
    bestk_csv, emit_report, erc_csv, parse_bestk_csv, parse_erc_csv, BestKRow, BestKTable, LabeledCurve, Report,
    BESTK_HEADER, ERC_HEADER,
};
pub use scores::{
    comparison_pairs, compute_scores, compute_scores_from, load_templates, GenuineScore, ImpostorScore, Protocol,
    ScoreSet,
};
