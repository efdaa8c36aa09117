//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Set `MIDECON_ACCEPT_DIR` to keep the work
//! directory.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use midecon::domain::{FingerprintTemplate, SampleId};
use midecon::eval::*;
use midecon::pipeline::*;
use midecon::reliability::{mod_pairwise, mod_variance, moc, CombineMode, StochasticPrediction};
use midecon::rng::{derive_indexed, derive_seed, SplitMix64};

const ORACLE_TOL: f64 = 1e-12;
const ORACLE_BUDGET_S: f64 = 5.0;
const GRAD_H: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-4;
const GRAD_BUDGET_S: f64 = 60.0;
const TRAIN_MIN_PER_CLASS: usize = 2000;
const TRAIN_MIN_ACCURACY: f64 = 0.90;
const TRAIN_BUDGET_S: f64 = 600.0;
const ERC_BUDGET_S: f64 = 900.0;
const EVAL_FINGERS: usize = 100;
const EVAL_DATA_SEED: u64 = 11;
const SEEDS: u64 = 10;
const RANDOM_MIN_WINS: usize = 8;
const BESTK_MIN_WINS: usize = 9;
const BESTK_SLACK: f64 = 0.05;
const ABLATION_SLACK: f64 = 0.02;
const NSWEEP_TOL: f64 = 0.05;
const MAIN_FMR: f64 = 1e-2;
const FMRS: [f64; 3] = [1e-1, 1e-2, 1e-3];
const RHO_MAX: f64 = 0.3;

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn report(id: u32, title: &str, pass: bool, detail: String) -> Outcome {
    println!("criterion {id} {} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { id, pass, detail }
}

fn c1_reliability_oracles() -> Outcome {
    let t = Instant::now();
    let mut g = SplitMix64::new(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let v: Vec<f64> = (0..100).map(|_| g.next_f64()).collect();
        let x = StochasticPrediction::new(v.clone()).unwrap();
        let var = mod_variance(&x);
        for err in [
            moc(&x) - mean_oracle(&v),
            mod_pairwise(&x) - pairwise_oracle(&v),
            var - variance_oracle(&v),
            var - 0.5 * ordered_pair_sq_oracle(&v),
        ] {
            worst = worst.max(err.abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    report(
        1,
        "reliability math oracle",
        worst <= ORACLE_TOL && secs < ORACLE_BUDGET_S,
        format!("1000 predictions m=100, max abs error {worst:.2e} (tol {ORACLE_TOL:e}), {secs:.2} s (limit {ORACLE_BUDGET_S} s)"),
    )
}

fn c2_gradient_check() -> Outcome {
    let t = Instant::now();
    let mut per_kind: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut checked = 0;
    for seed in 0..10 {
        let r = grad_check(&random_network(1000 + seed), seed, GRAD_H, 1);
        checked += r.checked;
        for (k, e) in r.worst {
            let w = per_kind.entry(k).or_insert(0.0);
            *w = w.max(e);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let kinds = ["conv", "relu", "maxpool", "dense", "dropout"];
    let all_seen = kinds.iter().all(|k| per_kind.contains_key(k));
    let worst = per_kind.values().copied().fold(0.0, f64::max);
    let listing: Vec<String> = per_kind.iter().map(|(k, e)| format!("{k} {e:.1e}")).collect();
    report(
        2,
        "gradient check",
        all_seen && worst <= GRAD_TOL && secs < GRAD_BUDGET_S,
        format!(
            "10 networks, {checked} parameters, h={GRAD_H:e}, max relative error per kind [{}] (tol {GRAD_TOL:e}), {secs:.2} s (limit {GRAD_BUDGET_S} s)",
            listing.join(", ")
        ),
    )
}

fn config(pairs: &[(&str, String)]) -> RunConfig {
    let mut c = RunConfig::default();
    for (k, v) in pairs {
        c.set(k, v.clone()).unwrap();
    }
    c
}

fn p(path: &Path) -> String {
    path.display().to_string()
}

/// Returns the model path when training succeeded.
fn c3_training(work: &Path) -> (Outcome, Option<PathBuf>) {
    let t = Instant::now();
    let data = work.join("train_data");
    let run = || -> midecon::Result<TrainSummary> {
        cmd_synth(&config(&[("master_seed", "7".into()), ("out", p(&data))]))?;
        cmd_train(&config(&[("master_seed", "7".into()), ("data", p(&data)), ("out", p(&work.join("model")))]))
    };
    let epochs: usize = RunConfig::default().parse("train.epochs").unwrap();
    match run() {
        Ok(s) => {
            let secs = t.elapsed().as_secs_f64();
            let pass = s.positives >= TRAIN_MIN_PER_CLASS
                && s.negatives >= TRAIN_MIN_PER_CLASS
                && s.val_accuracy >= TRAIN_MIN_ACCURACY
                && epochs <= 30
                && secs < TRAIN_BUDGET_S;
            let o = report(
                3,
                "training",
                pass,
                format!(
                    "{} positives + {} negatives, {epochs} epochs, held-out accuracy {:.4} on {} patches (min {TRAIN_MIN_ACCURACY}), {secs:.0} s incl. synthesis (limit {TRAIN_BUDGET_S} s)",
                    s.positives, s.negatives, s.val_accuracy, s.val_size
                ),
            );
            (o, Some(s.model_path))
        }
        Err(e) => (report(3, "training", false, format!("pipeline error: {e}")), None),
    }
}

/// A reduced-size pipeline: the sizes only bound the runtime, determinism
/// does not depend on them.
fn pipeline_run(dir: &Path) -> midecon::Result<BTreeMap<String, Vec<u8>>> {
    let base = [
        ("master_seed", "7".to_string()),
        ("fingers", "8".into()),
        ("train.epochs", "3".into()),
        ("train.max_per_class", "400".into()),
        ("m", "30".into()),
    ];
    let with = |extra: &[(&str, String)]| {
        let mut v: Vec<(&str, String)> = base.to_vec();
        v.extend_from_slice(extra);
        config(&v)
    };
    let (data, model, scored, erc) = (dir.join("data"), dir.join("model"), dir.join("scored"), dir.join("erc"));
    cmd_synth(&with(&[("out", p(&data))]))?;
    let s = cmd_train(&with(&[("data", p(&data)), ("out", p(&model))]))?;
    cmd_score(&with(&[("data", p(&data)), ("model", p(&s.model_path)), ("out", p(&scored))]))?;
    cmd_erc(&with(&[("data", p(&data)), ("model", p(&s.model_path)), ("out", p(&erc))]))?;
    let mut out = BTreeMap::new();
    for (d, name) in [(&model, "training.csv"), (&scored, "qualities.csv"), (&erc, "erc.csv")] {
        let f = d.join(name);
        out.insert(name.to_string(), fs::read(&f).map_err(|e| midecon::Error::Config(format!("{}: {e}", f.display())))?);
    }
    Ok(out)
}

fn c4_determinism(work: &Path) -> Outcome {
    let t = Instant::now();
    match (pipeline_run(&work.join("det_a")), pipeline_run(&work.join("det_b"))) {
        (Ok(a), Ok(b)) => {
            let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
            let erc_rows = String::from_utf8_lossy(&a["erc.csv"]).lines().count().saturating_sub(1);
            report(
                4,
                "determinism",
                differing.is_empty() && erc_rows > 0,
                format!(
                    "synth, train, score, erc twice with master seed 7: {} report files compared, {} differ, erc.csv has {erc_rows} rows, {:.0} s",
                    a.len(),
                    differing.len(),
                    t.elapsed().as_secs_f64()
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => report(4, "determinism", false, format!("pipeline error: {e}")),
    }
}

fn fnmr_at(curve: &ErcCurve, rho: f64) -> f64 {
    curve.fnmr_at(rho).unwrap_or(f64::NAN)
}

fn c5_erc(inputs: &EvalInputs, elapsed_before: f64) -> Outcome {
    let t = Instant::now();
    let grid = default_reject_grid();
    let rel = RunConfig::default();
    let q = inputs.predictions.qualities(&reliability_config(&rel).unwrap()).unwrap();
    let run = || -> midecon::Result<(f64, f64, Vec<f64>)> {
        let c = erc(&inputs.scores, &q, MAIN_FMR, &grid)?;
        let mut randoms = Vec::new();
        for s in 0..SEEDS {
            let rq = random_qualities(&inputs.scores.samples(), derive_indexed(derive_seed(7, "acceptance_random"), s));
            randoms.push(fnmr_at(&erc(&inputs.scores, &rq, MAIN_FMR, &grid)?, RHO_MAX));
        }
        Ok((fnmr_at(&c, 0.0), fnmr_at(&c, RHO_MAX), randoms))
    };
    match run() {
        Ok((f0, f3, randoms)) => {
            let wins = randoms.iter().filter(|r| f3 < **r).count();
            let mean = randoms.iter().sum::<f64>() / randoms.len() as f64;
            let secs = elapsed_before + t.elapsed().as_secs_f64();
            report(
                5,
                "quality rejection helps",
                f3 <= f0 && wins >= RANDOM_MIN_WINS && secs < ERC_BUDGET_S,
                format!(
                    "{EVAL_FINGERS}x4 dataset, FMR {MAIN_FMR}: FNMR {f0:.4} at rho 0, {f3:.4} at rho {RHO_MAX}; random-quality mean {mean:.4}, beaten in {wins}/{SEEDS} seeds (min {RANDOM_MIN_WINS}); {secs:.0} s (limit {ERC_BUDGET_S} s)"
                ),
            )
        }
        Err(e) => report(5, "quality rejection helps", false, format!("error: {e}")),
    }
}

fn c6_best_k(data: &Path, model: &Path) -> Outcome {
    let t = Instant::now();
    let ks = [20, 25, 30, 35, 40];
    let run = |seed: u64| -> midecon::Result<(Vec<f64>, f64)> {
        // Each seed re-draws the stochastic passes and the impostor sample.
        let cfg = config(&[("master_seed", seed.to_string()), ("data", p(data)), ("model", p(model))]);
        let manifest = load_dataset(&cfg)?;
        let net = load_network(&cfg)?;
        let scored: BTreeMap<SampleId, FingerprintTemplate> =
            predict_dataset(&manifest, &net, &cfg)?.scored(&reliability_config(&cfg)?)?;
        let (mp, proto) = (match_params(&cfg)?, protocol(&cfg)?);
        let best = best_k_experiment(&scored, &ks, &[MAIN_FMR], QualitySource::Midecon, &mp, &proto)?;
        let worst = best_k_experiment(&scored, &[20], &[MAIN_FMR], QualitySource::BaselineInverse, &mp, &proto)?;
        let name = QualitySource::Midecon.name();
        let curve = ks.iter().map(|k| best.fnmr(*k, MAIN_FMR, name).unwrap()).collect();
        Ok((curve, worst.rows[0].fnmr))
    };
    let mut wins = 0;
    let mut monotone = 0;
    let mut lines = Vec::new();
    for s in 0..SEEDS {
        match run(1000 + s) {
            Ok((curve, low20)) => {
                if curve[0] < low20 {
                    wins += 1;
                }
                if curve.windows(2).all(|w| w[1] <= w[0] + BESTK_SLACK) {
                    monotone += 1;
                }
                lines.push(format!("{:.3}/{:.3}->{:.3}", curve[0], low20, curve[4]));
            }
            Err(e) => return report(6, "minutia-level quality", false, format!("error: {e}")),
        }
    }
    report(
        6,
        "minutia-level quality",
        wins >= BESTK_MIN_WINS && monotone == SEEDS as usize,
        format!(
            "FMR {MAIN_FMR}, best-20 below lowest-20 in {wins}/{SEEDS} seeds (min {BESTK_MIN_WINS}); non-increasing within {BESTK_SLACK} from k=20 to 40 in {monotone}/{SEEDS}; per seed best20/lowest20->best40 [{}]; {:.0} s",
            lines.join(" "),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn c7_ablation(inputs: &EvalInputs) -> Outcome {
    let modes = [CombineMode::MocMinusMod, CombineMode::MocOnly, CombineMode::ModOnly];
    let rel = reliability_config(&RunConfig::default()).unwrap();
    let curves = match ablation_run(&inputs.predictions, &inputs.scores, &rel, &modes, &FMRS, &default_reject_grid()) {
        Ok(c) => c,
        Err(e) => return report(7, "ablation shape", false, format!("error: {e}")),
    };
    let at = |mode: CombineMode, fmr: f64| {
        curves.iter().find(|c| c.mode == mode.name() && c.curve.fmr_target == fmr).map(|c| fnmr_at(&c.curve, RHO_MAX)).unwrap()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for fmr in FMRS {
        let (both, moc, md) = (at(CombineMode::MocMinusMod, fmr), at(CombineMode::MocOnly, fmr), at(CombineMode::ModOnly, fmr));
        pass &= both <= moc.max(md) + ABLATION_SLACK;
        parts.push(format!("FMR {fmr}: combined {both:.4} vs MOC {moc:.4} / MOD {md:.4}"));
    }
    report(7, "ablation shape", pass, format!("rho {RHO_MAX}, slack {ABLATION_SLACK}; {}", parts.join("; ")))
}

fn c8_n_stability(inputs: &EvalInputs) -> Outcome {
    let rel = reliability_config(&RunConfig::default()).unwrap();
    let curves = match n_sweep(&inputs.predictions, &inputs.scores, &rel, &[10, 20, 40], &FMRS, &default_reject_grid()) {
        Ok(c) => c,
        Err(e) => return report(8, "n-stability", false, format!("error: {e}")),
    };
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    let mut mismatched = 0;
    for fmr in FMRS {
        let fam: Vec<&LabeledCurve> = curves.iter().filter(|c| c.curve.fmr_target == fmr).collect();
        for a in &fam {
            for b in &fam {
                for (pa, pb) in a.curve.points.iter().zip(&b.curve.points) {
                    match (pa.fnmr, pb.fnmr) {
                        (Some(x), Some(y)) if (x - y).abs() > worst => {
                            worst = (x - y).abs();
                            where_ = format!("{} vs {} at FMR {fmr}, rho {:.2}", a.mode, b.mode, pa.reject_fraction);
                        }
                        (Some(_), None) | (None, Some(_)) => mismatched += 1,
                        _ => {}
                    }
                }
            }
        }
    }
    report(
        8,
        "n-stability",
        worst <= NSWEEP_TOL && mismatched == 0,
        format!("n in {{10, 20, 40}}, all FMR targets and reject fractions: max pointwise difference {worst:.4} ({where_}), tol {NSWEEP_TOL}"),
    )
}

fn c9_metrics() -> Outcome {
    let op = fnmr_at_fmr(&[0.9, 0.8, 0.7, 0.2], &[0.6, 0.3, 0.1, 0.05], 0.25).unwrap();
    let worked = op.threshold == 0.6 && op.fnmr == 0.25;
    let mut g = SplitMix64::new(99);
    let mut agree = 0;
    for _ in 0..100 {
        let ng = 1 + (g.next_u64() % 40) as usize;
        let ni = 1 + (g.next_u64() % 200) as usize;
        let mut draw = |n: usize| (0..n).map(|_| (g.next_u64() % 50) as f64 / 50.0).collect::<Vec<f64>>();
        let (gen, imp) = (draw(ng), draw(ni));
        let fmr = [0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0][(g.next_u64() % 7) as usize];
        let op = fnmr_at_fmr(&gen, &imp, fmr).unwrap();
        let (t, f) = threshold_oracle(&gen, &imp, fmr);
        if op.threshold == t && op.fnmr == f && op.fnmr == best_fnmr_oracle(&gen, &imp, fmr) {
            agree += 1;
        }
    }
    report(
        9,
        "metric unit tests",
        worked && agree == 100,
        format!("worked example t={} fnmr={}; brute-force threshold optimality {agree}/100 exact", op.threshold, op.fnmr),
    )
}

fn main() -> ExitCode {
    let kept = std::env::var_os("MIDECON_ACCEPT_DIR").map(PathBuf::from);
    let tmp = tempfile::tempdir().unwrap();
    let work = kept.clone().unwrap_or_else(|| tmp.path().to_path_buf());
    fs::create_dir_all(&work).unwrap();

    let mut out = vec![c9_metrics(), c1_reliability_oracles(), c2_gradient_check()];
    let (c3, model) = c3_training(&work);
    out.push(c3);
    out.push(c4_determinism(&work));

    match model {
        Some(model) => {
            let t = Instant::now();
            let data = work.join("eval_data");
            let inputs = cmd_synth(&config(&[
                ("master_seed", EVAL_DATA_SEED.to_string()),
                ("fingers", EVAL_FINGERS.to_string()),
                ("out", p(&data)),
            ]))
            .and_then(|_| prepare_eval(&config(&[("master_seed", "7".into()), ("data", p(&data)), ("model", p(&model))])));
            match inputs {
                Ok(inputs) => {
                    out.push(c5_erc(&inputs, t.elapsed().as_secs_f64()));
                    out.push(c6_best_k(&data, &model));
                    out.push(c7_ablation(&inputs));
                    out.push(c8_n_stability(&inputs));
                }
                Err(e) => {
                    for (id, title) in [(5, "quality rejection helps"), (6, "minutia-level quality"), (7, "ablation shape"), (8, "n-stability")] {
                        out.push(report(id, title, false, format!("evaluation data error: {e}")));
                    }
                }
            }
        }
        None => {
            for (id, title) in [(5, "quality rejection helps"), (6, "minutia-level quality"), (7, "ablation shape"), (8, "n-stability")] {
                out.push(report(id, title, false, "no trained model".into()));
            }
        }
    }

    out.sort_by_key(|o| o.id);
    let failed: Vec<String> = out.iter().filter(|o| !o.pass).map(|o| format!("{} ({})", o.id, o.detail)).collect();
    println!("acceptance: {}/{} criteria passed", out.len() - failed.len(), out.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
