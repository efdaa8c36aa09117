use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use super::config::RunConfig;
use crate::domain::{
    load_manifest, load_pgm, load_template, save_manifest, save_template, DatasetManifest, ManifestEntry, Minutia,
};
use crate::error::{Error, Result};
use crate::eval::{
    ablation_run, best_k_experiment, compute_scores_from, emit_report, erc_family, n_sweep, random_qualities,
    BestKTable, LabeledCurve, PredictionSet, Protocol, QualitySource, Report, ScoreSet,
};
use crate::extraction::{crop_patch, estimate_orientation, extract_template, ExtractionConfig, PatchSpec};
use crate::matcher::{match_templates, MatchParams};
use crate::neuralnet::{accuracy, load_model, save_model, train, EpochStats, Label, NetworkParams, TrainConfig, TrainingExample};
use crate::reliability::{predict_minutiae, CombineMode, ReliabilityConfig};
use crate::rng;
use crate::synthgen::{gen_dataset, DatasetParams, MasterParams};

pub const MODEL_FILE: &str = "model.net";

pub fn master_seed(cfg: &RunConfig) -> Result<u64> {
    cfg.parse("master_seed")
}

/// Seed of a named component stream.
pub fn component_seed(cfg: &RunConfig, component: &str) -> Result<u64> {
    Ok(rng::derive_seed(master_seed(cfg)?, component))
}

pub fn dataset_params(cfg: &RunConfig) -> Result<DatasetParams> {
    Ok(DatasetParams {
        fingers: cfg.parse("fingers")?,
        impressions: cfg.parse("impressions")?,
        levels: cfg.list("synth.levels")?,
        master: MasterParams {
            width: cfg.parse("synth.width")?,
            height: cfg.parse("synth.height")?,
            ridge_period: cfg.parse("synth.ridge_period")?,
            pad: cfg.parse("synth.pad")?,
            iterations: cfg.parse("synth.iterations")?,
            ..MasterParams::default()
        },
        extraction: extraction_config(cfg)?,
    })
}

pub fn extraction_config(cfg: &RunConfig) -> Result<ExtractionConfig> {
    Ok(ExtractionConfig {
        smooth_sigma: cfg.parse("smooth.sigma")?,
        binarize_window: cfg.parse("binarize.window")?,
        orient_block: cfg.parse("orient.block")?,
        border_margin: cfg.parse("detect.border_margin")?,
        min_separation: cfg.parse("detect.min_separation")?,
        min_component: cfg.parse("detect.min_component")?,
    })
}

pub fn patch_spec(cfg: &RunConfig) -> Result<PatchSpec> {
    let spec = PatchSpec { side: cfg.parse("patch.side")?, align_to_orientation: cfg.parse("patch.align")? };
    spec.validate()?;
    Ok(spec)
}

pub fn reliability_config(cfg: &RunConfig) -> Result<ReliabilityConfig> {
    let r = ReliabilityConfig {
        m: cfg.parse("m")?,
        n: cfg.parse("n")?,
        combine_mode: cfg.get("combine_mode").parse()?,
        mod_kind: cfg.get("mod_kind").parse()?,
    };
    r.validate()?;
    Ok(r)
}

pub fn match_params(cfg: &RunConfig) -> Result<MatchParams> {
    let p = MatchParams {
        k: cfg.parse("match.K")?,
        tol_d: cfg.parse("match.tol_d")?,
        tol_a: cfg.parse("match.tol_a")?,
        top_pairs: cfg.parse("match.top_pairs")?,
    };
    p.validate()?;
    Ok(p)
}

pub fn train_config(cfg: &RunConfig) -> Result<TrainConfig> {
    Ok(TrainConfig {
        epochs: cfg.parse("train.epochs")?,
        learning_rate: cfg.parse("train.lr")?,
        batch_size: cfg.parse("train.batch")?,
        momentum: cfg.parse("train.momentum")?,
        seed: component_seed(cfg, "train")?,
        trainable_from: 0,
    })
}

pub fn protocol(cfg: &RunConfig) -> Result<Protocol> {
    Ok(Protocol { impostor_factor: cfg.parse("eval.impostor_factor")?, seed: component_seed(cfg, "impostors")? })
}

/// `data` may name a dataset directory or its manifest file.
pub fn load_dataset(cfg: &RunConfig) -> Result<DatasetManifest> {
    let data = cfg.path("data")?;
    let path = if data.is_dir() { data.join("manifest.csv") } else { data };
    load_manifest(path)
}

pub fn load_network(cfg: &RunConfig) -> Result<NetworkParams<f64>> {
    let net: NetworkParams<f64> = load_model(cfg.path("model")?)?;
    let side = patch_spec(cfg)?.side;
    let s = net.input_shape();
    if s.channels != 1 || s.width != side || s.height != side {
        return Err(Error::Config(format!("model input {s} does not match patch.side {side}")));
    }
    Ok(net)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.path("out")?;
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    cfg.write_to(&out)?;
    Ok(out)
}

/// Synthesizes a dataset into `out`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<DatasetManifest> {
    let out = out_dir(cfg)?;
    gen_dataset(&dataset_params(cfg)?, master_seed(cfg)?, &out)
}

/// Labelled patches from ground-truth templates: positives at every minutia,
/// negatives at random points at least `train.neg_distance` from any minutia
/// (oriented along the local ridge flow with a random sense), one negative per
/// positive for each image, then both classes capped at `train.max_per_class`.
pub fn build_patch_set(manifest: &DatasetManifest, cfg: &RunConfig) -> Result<(Vec<TrainingExample>, Vec<TrainingExample>)> {
    let spec = patch_spec(cfg)?;
    let ex = extraction_config(cfg)?;
    let neg_distance: f64 = cfg.parse("train.neg_distance")?;
    let cap: usize = cfg.parse("train.max_per_class")?;
    let seed = component_seed(cfg, "patches")?;

    let per_image: Vec<(Vec<TrainingExample>, Vec<TrainingExample>)> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let image = load_pgm(manifest.image_path(e))?;
            let truth = load_template(manifest.template_path(e))?;
            let mut pos = Vec::new();
            for m in &truth.minutiae {
                if let Some(patch) = crop_patch(&image, m, &spec)? {
                    pos.push(TrainingExample { patch, label: Label::Minutia });
                }
            }
            let mut g = rng::chacha(rng::derive_seed(seed, &e.id.to_string()));
            let margin = (spec.side as f64 * 0.75).ceil() as usize + ex.orient_block / 2 + 2;
            let (w, h) = (image.width(), image.height());
            let mut neg = Vec::new();
            if w > 2 * margin && h > 2 * margin {
                let mut attempts = 0;
                while neg.len() < pos.len() && attempts < 50 * pos.len().max(1) {
                    attempts += 1;
                    let (x, y) = (g.random_range(margin..w - margin), g.random_range(margin..h - margin));
                    let flip = g.random::<bool>();
                    let probe = Minutia::new(x as f64, y as f64, 0.0, crate::domain::MinutiaKind::Ending);
                    if truth.minutiae.iter().any(|m| m.distance(&probe) < neg_distance) {
                        continue;
                    }
                    let theta = estimate_orientation(&image, x, y, ex.orient_block)?
                        + if flip { std::f64::consts::PI } else { 0.0 };
                    let at = Minutia::new(x as f64, y as f64, theta, probe.kind);
                    if let Some(patch) = crop_patch(&image, &at, &spec)? {
                        neg.push(TrainingExample { patch, label: Label::NonMinutia });
                    }
                }
            }
            Ok((pos, neg))
        })
        .collect::<Result<_>>()?;

    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (p, n) in per_image {
        pos.extend(p);
        neg.extend(n);
    }
    let keep = pos.len().min(neg.len()).min(cap);
    let mut g = rng::chacha(rng::derive_seed(seed, "cap"));
    let mut subsample = |v: Vec<TrainingExample>| -> Vec<TrainingExample> {
        let mut idx = index::sample(&mut g, v.len(), keep).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| v[i].clone()).collect()
    };
    let (pos, neg) = (subsample(pos), subsample(neg));
    Ok((pos, neg))
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub model_path: PathBuf,
    pub positives: usize,
    pub negatives: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub val_accuracy: f64,
    pub history: Vec<EpochStats>,
}

/// Trains the default architecture on patches from `data` and writes
/// `model.net` and `training.csv` into `out`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let manifest = load_dataset(cfg)?;
    let out = out_dir(cfg)?;
    let (pos, neg) = build_patch_set(&manifest, cfg)?;
    let (positives, negatives) = (pos.len(), neg.len());
    let mut all: Vec<TrainingExample> = pos.into_iter().chain(neg).collect();
    all.shuffle(&mut rng::chacha(component_seed(cfg, "split")?));
    let val_fraction: f64 = cfg.parse("train.val_fraction")?;
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::Config(format!("train.val_fraction {val_fraction} outside [0, 1)")));
    }
    let n_val = (all.len() as f64 * val_fraction).round() as usize;
    let train_set = all.split_off(n_val);
    let val_set = all;

    let init = NetworkParams::<f64>::default_architecture(
        patch_spec(cfg)?.side,
        cfg.parse("net.dropout")?,
        component_seed(cfg, "network")?,
    )?;
    let (net, history) = train(&init, &train_set, &train_config(cfg)?)?;
    let val_accuracy = accuracy(&net, &val_set)?;
    log::info!("validation accuracy {val_accuracy:.4} on {} patches", val_set.len());

    let model_path = out.join(MODEL_FILE);
    save_model(&net, &model_path)?;
    let mut log_csv = String::from("epoch,mean_loss,accuracy\n");
    for s in &history {
        let _ = writeln!(log_csv, "{},{},{}", s.epoch, s.mean_loss, s.accuracy);
    }
    let _ = writeln!(log_csv, "# validation_accuracy={val_accuracy}");
    let p = out.join("training.csv");
    fs::write(&p, log_csv).map_err(|e| Error::io(&p, e))?;
    Ok(TrainSummary {
        model_path,
        positives,
        negatives,
        train_size: train_set.len(),
        val_size: val_set.len(),
        val_accuracy,
        history,
    })
}

/// Extracts every image's minutiae and runs the stochastic passes on them.
pub fn predict_dataset(manifest: &DatasetManifest, net: &NetworkParams<f64>, cfg: &RunConfig) -> Result<PredictionSet> {
    let ex = extraction_config(cfg)?;
    let spec = patch_spec(cfg)?;
    let m: usize = cfg.parse("m")?;
    let seed = component_seed(cfg, "mc_dropout")?;
    let samples = manifest
        .entries
        .par_iter()
        .map(|e| {
            let image = load_pgm(manifest.image_path(e))?;
            let mut t = extract_template(&image, &e.id.finger, &e.id.impression, &ex)?;
            t.source_image = Some(manifest.image_path(e));
            let p = predict_minutiae(net, &t, &image, m, seed, &spec)?;
            Ok((e.id.clone(), (t, p)))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(PredictionSet { samples })
}

/// Writes scored templates, a manifest pointing at them and `qualities.csv`.
pub fn cmd_score(cfg: &RunConfig) -> Result<DatasetManifest> {
    let manifest = load_dataset(cfg)?;
    let net = load_network(cfg)?;
    let out = out_dir(cfg)?;
    let scored = predict_dataset(&manifest, &net, cfg)?.scored(&reliability_config(cfg)?)?;
    let tdir = out.join("templates");
    fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
    let mut entries = Vec::new();
    let mut qualities = String::from("finger,impression,quality\n");
    for e in &manifest.entries {
        let t = &scored[&e.id];
        let rel = PathBuf::from("templates").join(format!("{}.tpl", e.id));
        save_template(t, out.join(&rel))?;
        let image = manifest.image_path(e);
        let image = fs::canonicalize(&image).map_err(|err| Error::io(&image, err))?;
        entries.push(ManifestEntry { id: e.id.clone(), image, template: rel });
        let _ = writeln!(qualities, "{},{},{:.12e}", e.id.finger, e.id.impression, t.quality.unwrap_or(0.0));
    }
    let scored_manifest = DatasetManifest {
        entries,
        seed: manifest.seed,
        generator_params: manifest.generator_params.clone(),
        root: out.clone(),
    };
    save_manifest(&scored_manifest, out.join("manifest.csv"))?;
    let q = out.join("qualities.csv");
    fs::write(&q, qualities).map_err(|e| Error::io(&q, e))?;
    Ok(scored_manifest)
}

pub fn cmd_match(a: &Path, b: &Path, cfg: &RunConfig) -> Result<f64> {
    Ok(match_templates(&load_template(a)?, &load_template(b)?, &match_params(cfg)?))
}

/// Predictions plus the full-template score set every experiment starts from.
pub struct EvalInputs {
    pub predictions: PredictionSet,
    pub scores: ScoreSet,
}

pub fn prepare_eval(cfg: &RunConfig) -> Result<EvalInputs> {
    let manifest = load_dataset(cfg)?;
    let net = load_network(cfg)?;
    let predictions = predict_dataset(&manifest, &net, cfg)?;
    let scores = compute_scores_from(&predictions.templates(), &match_params(cfg)?, &protocol(cfg)?)?;
    Ok(EvalInputs { predictions, scores })
}

fn emit(cfg: &RunConfig, out: &Path, report: Report) -> Result<()> {
    emit_report(&report, out)?;
    cfg.write_to(out)
}

/// ERCs of the configured quality and of random qualities, per FMR target.
pub fn cmd_erc(cfg: &RunConfig) -> Result<Vec<LabeledCurve>> {
    let inputs = prepare_eval(cfg)?;
    let out = out_dir(cfg)?;
    let rel = reliability_config(cfg)?;
    let variants = vec![
        (rel.combine_mode.name().to_string(), inputs.predictions.qualities(&rel)?),
        ("random".to_string(), random_qualities(&inputs.scores.samples(), component_seed(cfg, "random_quality")?)),
    ];
    let curves = erc_family(&inputs.scores, &variants, &cfg.list("eval.fmr")?, &cfg.list("eval.reject_grid")?)?;
    emit(cfg, &out, Report { curves: Some(curves.clone()), best_k: None })?;
    Ok(curves)
}

pub fn cmd_bestk(cfg: &RunConfig) -> Result<BestKTable> {
    let inputs = prepare_eval(cfg)?;
    let out = out_dir(cfg)?;
    let scored = inputs.predictions.scored(&reliability_config(cfg)?)?;
    let (params, proto) = (match_params(cfg)?, protocol(cfg)?);
    let mut table = BestKTable::default();
    for name in cfg.list::<String>("bestk.sources")? {
        let source = match name.parse()? {
            QualitySource::BaselineRandom(_) => QualitySource::BaselineRandom(component_seed(cfg, "random_reliability")?),
            s => s,
        };
        let t = best_k_experiment(&scored, &cfg.list("bestk.k")?, &cfg.list("eval.fmr")?, source, &params, &proto)?;
        table.rows.extend(t.rows);
    }
    emit(cfg, &out, Report { curves: None, best_k: Some(table.clone()) })?;
    Ok(table)
}

pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<LabeledCurve>> {
    let inputs = prepare_eval(cfg)?;
    let out = out_dir(cfg)?;
    let modes = cfg.list::<String>("ablate.modes")?.iter().map(|m| m.parse()).collect::<Result<Vec<CombineMode>>>()?;
    let curves = ablation_run(
        &inputs.predictions,
        &inputs.scores,
        &reliability_config(cfg)?,
        &modes,
        &cfg.list("eval.fmr")?,
        &cfg.list("eval.reject_grid")?,
    )?;
    emit(cfg, &out, Report { curves: Some(curves.clone()), best_k: None })?;
    Ok(curves)
}

pub fn cmd_nsweep(cfg: &RunConfig) -> Result<Vec<LabeledCurve>> {
    let inputs = prepare_eval(cfg)?;
    let out = out_dir(cfg)?;
    let curves = n_sweep(
        &inputs.predictions,
        &inputs.scores,
        &reliability_config(cfg)?,
        &cfg.list("nsweep.n")?,
        &cfg.list("eval.fmr")?,
        &cfg.list("eval.reject_grid")?,
    )?;
    emit(cfg, &out, Report { curves: Some(curves.clone()), best_k: None })?;
    Ok(curves)
}
