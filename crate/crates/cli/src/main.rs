#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cli;

use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use boxel::config::ConfigOverrides;
use boxel::eval::{
    check_soundness, concept_candidates, individual_candidates, known_links, known_subsumptions,
    link_queries, rank_links, rank_subsumptions, subsumption_queries, RankingResult,
};
use boxel::kb::{Axiom, ConceptExpr};
use boxel::normalize::abox_to_tbox;
use boxel::train::{train_model, TrainError, TrainEvent};
use boxel::viz::render_svg;
use boxel::{normalize, parse_kb, EmbeddingModel, EntityMode, KnowledgeBase, NormalizedKb};
use clap::Parser;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cli::{Cli, Command, EvalArgs, SplitArgs, TrainArgs};

/// Bad input: unreadable or malformed files, bad flags, unsupported models.
#[derive(Debug)]
struct Invalid(String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl fmt::Display) -> anyhow::Error {
    Invalid(msg.to_string()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<Invalid>()) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Normalize { input, output } => {
            let nkb = normalize_file(&input, EntityMode::Point)?;
            write(&output, nkb.serialize())?;
            println!(
                "{} normalized axioms, {} fresh names",
                nkb.axioms.len(),
                nkb.fresh_count
            );
        }
        Command::Train(args) => cmd_train(&args)?,
        Command::EvalSubsumption(args) => cmd_eval(&args, false)?,
        Command::EvalLinks(args) => cmd_eval(&args, true)?,
        Command::Check {
            checkpoint,
            kb,
            tol,
        } => return cmd_check(&checkpoint, &kb, tol),
        Command::Viz { checkpoint, output } => {
            let model = load_model(&checkpoint)?;
            let svg = render_svg(&model).map_err(invalid)?;
            write(&output, svg)?;
        }
        Command::Split(args) => cmd_split(&args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    parse_kb(&read(path)?).map_err(|e| invalid(format!("{}:{e}", path.display())))
}

fn load_model(path: &Path) -> Result<EmbeddingModel> {
    EmbeddingModel::load_checkpoint(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn normalize_file(path: &Path, mode: EntityMode) -> Result<NormalizedKb> {
    let mut kb = load_kb(path)?;
    if mode == EntityMode::Box {
        kb = abox_to_tbox(&kb);
    }
    normalize(&kb).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("BOXEL_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| invalid(format!("BOXEL_SEED={s:?}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => ConfigOverrides::parse(&read(path)?)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?,
        None => ConfigOverrides::default(),
    };
    let mut overrides = file.merge(args.overrides.to_config());
    if overrides.seed.is_none() {
        overrides.seed = env_seed()?;
    }
    let (model_cfg, train_cfg) = overrides.resolve();
    model_cfg.validate().map_err(invalid)?;
    train_cfg.validate().map_err(invalid)?;

    let nkb = normalize_file(&args.kb, model_cfg.entity_mode)?;
    let mut model = EmbeddingModel::init(&nkb.symbols, &model_cfg).map_err(invalid)?;

    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| with_suffix(&args.output, ".log.jsonl"));
    let mut log = BufWriter::new(
        File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?,
    );
    let report = train_model(&mut model, &nkb, &train_cfg, |event| {
        match event {
            TrainEvent::Epoch(record) => {
                let line = serde_json::to_string(record).expect("log record serializes");
                writeln!(log, "{line}")?;
            }
            TrainEvent::Checkpoint { epoch, model } => {
                model.save_checkpoint(&with_suffix(&args.output, &format!(".epoch{epoch}")))?;
            }
        }
        Ok::<(), TrainError>(())
    })?;
    log.flush()?;
    model
        .save_checkpoint(&args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let last = report.history.last().copied().unwrap_or_default();
    println!("epochs={}", report.final_epoch);
    println!("wall_ms={:.0}", report.wall_ms);
    for (key, value) in last.fields() {
        println!("{key}={value:.6e}");
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs, links: bool) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let train = normalize_file(&args.train, model.config.entity_mode)?
        .rebind(&model.symbols)
        .context("training KB does not match the checkpoint")?;
    let test = load_kb(&args.test)?;
    let extra = args
        .known
        .iter()
        .map(|p| load_kb(p))
        .collect::<Result<Vec<_>>>()?;

    let result: RankingResult = if links {
        let queries = link_queries(&model, &test)?;
        let mut known = known_links(&train);
        known.extend(queries.iter().copied());
        for kb in &extra {
            known.extend(link_queries(&model, &only(kb, Axiom::is_link))?);
        }
        rank_links(&model, &queries, &individual_candidates(&model), &known)?
    } else {
        let queries = subsumption_queries(&model, &test)?;
        let mut known: HashSet<_> = known_subsumptions(&train);
        known.extend(queries.iter().copied());
        for kb in &extra {
            known.extend(subsumption_queries(&model, &only(kb, Axiom::is_subclass))?);
        }
        rank_subsumptions(
            &model,
            &queries,
            &concept_candidates(&model),
            &known,
            args.volume.into(),
        )?
    };
    print!("{}", result.to_report());
    if let Some(path) = &args.output {
        write(path, result.to_json())?;
    }
    Ok(())
}

trait Selectable {
    fn is_subclass(&self) -> bool;
    fn is_link(&self) -> bool;
}

impl Selectable for Axiom {
    fn is_subclass(&self) -> bool {
        matches!(
            self,
            Axiom::Inclusion {
                sub: ConceptExpr::Atomic(_),
                sup: ConceptExpr::Atomic(_),
            }
        )
    }

    fn is_link(&self) -> bool {
        matches!(self, Axiom::RoleAssertion { .. })
    }
}

fn only(kb: &KnowledgeBase, keep: fn(&Axiom) -> bool) -> KnowledgeBase {
    KnowledgeBase {
        symbols: kb.symbols.clone(),
        axioms: kb.axioms.iter().filter(|a| keep(a)).cloned().collect(),
    }
}

fn cmd_check(checkpoint: &Path, kb: &Path, tol: f64) -> Result<ExitCode> {
    if !(tol >= 0.0) {
        return Err(invalid(format!("--tol must be non-negative, got {tol}")));
    }
    let model = load_model(checkpoint)?;
    let nkb = normalize_file(kb, model.config.entity_mode)?
        .rebind(&model.symbols)
        .with_context(|| {
            format!(
                "{} does not match the symbols of {}",
                kb.display(),
                checkpoint.display()
            )
        })?;
    let report = check_soundness(&model, &nkb, tol);
    print!("{}", report.to_text());
    Ok(if report.all_satisfied() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Sizes of the three parts; valid and test are rounded, train takes the rest.
fn split_sizes(n: usize, ratios: &[f64]) -> Result<[usize; 3]> {
    let ok = ratios.len() == 3
        && ratios.iter().all(|r| (0.0..=1.0).contains(r))
        && (ratios.iter().sum::<f64>() - 1.0).abs() < 1e-9;
    if !ok {
        return Err(invalid(format!(
            "--ratios must be three fractions in [0, 1] summing to 1, got {ratios:?}"
        )));
    }
    let valid = (n as f64 * ratios[1]).round() as usize;
    let test = ((n as f64 * ratios[2]).round() as usize).min(n - valid);
    Ok([n - valid - test, valid, test])
}

fn cmd_split(args: &SplitArgs) -> Result<()> {
    let kb = load_kb(&args.kb)?;
    let keep: fn(&Axiom) -> bool = if args.links {
        Axiom::is_link
    } else {
        Axiom::is_subclass
    };
    let mut selected: Vec<usize> = (0..kb.axioms.len())
        .filter(|&i| keep(&kb.axioms[i]))
        .collect();
    let [n_train, n_valid, _] = split_sizes(selected.len(), &args.ratios)?;
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    selected.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut part = vec![0u8; kb.axioms.len()];
    for (k, &i) in selected.iter().enumerate() {
        part[i] = if k < n_train {
            0
        } else if k < n_train + n_valid {
            1
        } else {
            2
        };
    }

    let stem = args
        .kb
        .file_stem()
        .map_or_else(|| "kb".into(), |s| s.to_string_lossy().into_owned());
    let mut texts = [String::new(), String::new(), String::new()];
    for (i, axiom) in kb.axioms.iter().enumerate() {
        let line = kb.fmt_axiom(axiom) + "\n";
        texts[usize::from(part[i])].push_str(&line);
    }
    fs::create_dir_all(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    for (name, text) in ["train", "valid", "test"].iter().zip(&texts) {
        let path = args.output.join(format!("{stem}.{name}.kb"));
        write(&path, text)?;
        println!("{}\t{}", path.display(), text.lines().count());
    }
    Ok(())
}
