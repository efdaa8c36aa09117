use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Arg, ArgMatches, Command};
use midecon::pipeline::{self, RunConfig, KEYS};

const NEEDS_MODEL: &[&str] = &["score", "erc", "bestk", "ablate", "nsweep"];
const NEEDS_DATA: &[&str] = &["train", "score", "erc", "bestk", "ablate", "nsweep"];

fn cli() -> Command {
    let mut cmd = Command::new("midecon")
        .about("Minutia detection reliability and fingerprint quality experiments")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("config").long("config").global(true).value_name("FILE").help("key=value configuration file"))
        .arg(Arg::new("seed").long("seed").global(true).value_name("N").help("alias for --master_seed"));
    for (key, default, help) in KEYS {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(*key)
                .global(true)
                .value_name("VALUE")
                .help(format!("{help} [default: {default}]")),
        );
    }
    cmd.subcommand(Command::new("synth").about("Generate a synthetic dataset"))
        .subcommand(Command::new("train").about("Train the minutia classifier on a dataset"))
        .subcommand(Command::new("score").about("Extract and score minutiae, writing templates with reliabilities"))
        .subcommand(
            Command::new("match")
                .about("Compare two templates and print the score")
                .arg(Arg::new("a").required(true).value_name("A.tpl"))
                .arg(Arg::new("b").required(true).value_name("B.tpl")),
        )
        .subcommand(Command::new("erc").about("Error-versus-reject curves"))
        .subcommand(Command::new("bestk").about("FNMR when keeping the k most reliable minutiae"))
        .subcommand(Command::new("ablate").about("Error-versus-reject curves per reliability combination"))
        .subcommand(Command::new("nsweep").about("Error-versus-reject curves per quality averaging size"))
}

fn usage_error(name: &str, msg: String) -> ! {
    let mut root = cli();
    let mut sub = root.find_subcommand_mut(name).expect("known subcommand").clone().bin_name(format!("midecon {name}"));
    sub.error(ErrorKind::MissingRequiredArgument, msg).exit()
}

fn build_config(m: &ArgMatches) -> midecon::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = m.get_one::<String>("config") {
        cfg.merge_file(path)?;
    }
    if std::env::var_os("MIDECON_THREADS").is_some() && m.get_one::<String>("threads").is_none() {
        cfg.set("threads", std::env::var("MIDECON_THREADS").unwrap_or_default())?;
    }
    if let Some(seed) = m.get_one::<String>("seed") {
        cfg.set("master_seed", seed.clone())?;
    }
    for (key, _, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v.clone())?;
        }
    }
    Ok(cfg)
}

fn run(name: &str, m: &ArgMatches, cfg: &RunConfig) -> midecon::Result<()> {
    let threads: usize = cfg.parse("threads")?;
    if threads > 0 {
        // Only fails if a global pool already exists.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match name {
        "synth" => {
            let manifest = pipeline::cmd_synth(cfg)?;
            println!("wrote {} samples to {}", manifest.entries.len(), manifest.root.display());
        }
        "train" => {
            let s = pipeline::cmd_train(cfg)?;
            println!(
                "trained on {} patches, validation accuracy {:.4} on {}; model {}",
                s.train_size,
                s.val_accuracy,
                s.val_size,
                s.model_path.display()
            );
        }
        "score" => {
            let manifest = pipeline::cmd_score(cfg)?;
            println!("scored {} templates into {}", manifest.entries.len(), manifest.root.display());
        }
        "match" => {
            let a = PathBuf::from(m.get_one::<String>("a").expect("required"));
            let b = PathBuf::from(m.get_one::<String>("b").expect("required"));
            println!("{:.6}", pipeline::cmd_match(&a, &b, cfg)?);
        }
        "erc" | "ablate" | "nsweep" => {
            let curves = match name {
                "erc" => pipeline::cmd_erc(cfg)?,
                "ablate" => pipeline::cmd_ablate(cfg)?,
                _ => pipeline::cmd_nsweep(cfg)?,
            };
            for c in &curves {
                let pts: Vec<String> = c
                    .curve
                    .points
                    .iter()
                    .map(|p| p.fnmr.map(|f| format!("{f:.4}")).unwrap_or_else(|| "-".into()))
                    .collect();
                println!("{} fmr={} fnmr=[{}]", c.mode, c.curve.fmr_target, pts.join(" "));
            }
        }
        "bestk" => {
            for r in pipeline::cmd_bestk(cfg)?.rows {
                println!("{} k={} fmr={} fnmr={:.4}", r.quality_source, r.k, r.fmr_target, r.fnmr);
            }
        }
        _ => unreachable!("clap rejects unknown subcommands"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");

    let cfg = match build_config(sub) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("midecon: error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            return ExitCode::from(2);
        }
    };
    if NEEDS_MODEL.contains(&name) && cfg.get("model").is_empty() {
        usage_error(name, format!("`{name}` requires --model <FILE>"));
    }
    if NEEDS_DATA.contains(&name) && cfg.get("data").is_empty() {
        usage_error(name, format!("`{name}` requires --data <DIR>"));
    }
    match run(name, sub, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("midecon: error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
