use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use medsim_core::corpus::{
    compute_stats, load_pairs, load_qa_corpus, load_released_pairs_csv, pair_stats, split_by_seed, whitespace_count,
    write_pairs_jsonl, CorpusStats, PairFormat,
};
use medsim_core::eval::{
    attach_comparisons, probe_with_edits, render_table, run_splits, train_dev_split, Alternative, EvalReport,
    ProbeRow,
};
use medsim_core::model::{
    checkpoint, dataset_accuracy, desk_classifier, double_finetune, finetune, DeskEncoder, ModelError,
    PairClassifier,
};
use medsim_core::taskgen::{build_aa_pairs, build_qa_pairs, build_qc_pairs, passthrough_qq};
use medsim_core::text::PunctuationSplitter;
use medsim_core::{EncoderConfig, Label, LabeledPair, PairKind, Schedule, TaskGenConfig, TrainConfig, TrainReport};
use medsim_service::{ModelSource, ServiceConfig, ServiceError};
use serde::Serialize;
use serde_json::json;

use crate::{
    AlternativeArg, BuildTasksArgs, CliError, Command, EvalArgs, InputFormat, Manifest, ProbeArgs, ServeArgs,
    StatsArgs, TaskKind, TrainArgs, TrainOpts,
};

type Result<T> = std::result::Result<T, CliError>;

fn invalid(e: impl Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn failed(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Config(_)
        | ModelError::EmptyTrainSet
        | ModelError::EmptyIntermediate
        | ModelError::MissingDev
        | ModelError::IntermediateNeedsEpochs
        | ModelError::EmptyText(_) => invalid(e),
        _ => failed(e),
    }
}

fn print_config(command: &str, args: &impl Serialize) {
    eprintln!("resolved config: {}", json!({ "command": command, "args": args }));
}

pub(crate) fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::BuildTasks(a) => build_tasks(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Probe(a) => probe(&a),
        Command::Stats(a) => stats(&a),
        Command::Serve(a) => serve(&a),
    }
}

fn read_pairs(path: &Path, format: InputFormat) -> Result<Vec<LabeledPair>> {
    let pairs = match format {
        InputFormat::Jsonl => load_pairs(path, PairFormat::Jsonl),
        InputFormat::Csv => load_pairs(path, PairFormat::Csv),
        InputFormat::Released => load_released_pairs_csv(path),
        InputFormat::Qa => return Err(invalid(format!("{}: expected a pair file, not a QA corpus", path.display()))),
    };
    pairs.map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn write_pairs(path: &Path, pairs: &[LabeledPair]) -> Result<()> {
    let mut buf = Vec::new();
    write_pairs_jsonl(&mut buf, pairs).map_err(failed)?;
    fs::write(path, buf).map_err(|e| failed(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| failed(format!("{}: {e}", path.display())))
}

fn build_tasks(a: &BuildTasksArgs) -> Result<()> {
    print_config("build-tasks", a);
    let mut manifest = Manifest::new("build-tasks", a);
    let mut cfg = TaskGenConfig::with_seed(a.seed);
    cfg.negatives_per_positive = a.negatives;
    cfg.min_sentences_for_aa = a.min_sentences;
    if let Some(p) = &a.exclude {
        cfg.exclude = read_lines(p)?.into_iter().collect();
        manifest.input(p)?;
    }
    manifest.input(&a.input)?;
    let load_qa = || load_qa_corpus(&a.input).map_err(|e| invalid(format!("{}: {e}", a.input.display())));
    let output = match a.task {
        TaskKind::Qa => build_qa_pairs(&load_qa()?, &cfg),
        TaskKind::Aa => {
            let answers: Vec<_> = load_qa()?
                .into_iter()
                .map(|(q, mut ans)| {
                    // answers inherit their question's category when they have none
                    if ans.category.is_none() {
                        ans.category = q.category;
                    }
                    ans
                })
                .collect();
            build_aa_pairs(&answers, &PunctuationSplitter, &cfg)
        }
        TaskKind::Qc => {
            let questions: Vec<_> = load_qa()?.into_iter().map(|(q, _)| q).collect();
            build_qc_pairs(&questions, &cfg)
        }
        TaskKind::Qq => Ok(passthrough_qq(&read_pairs(&a.input, a.format)?, &cfg)),
    }
    .map_err(invalid)?;
    write_pairs(&a.out, &output.pairs)?;
    let positives = output.pairs.iter().filter(|p| p.label == Label::Positive).count();
    let summary = json!({
        "pairs": output.pairs.len(),
        "positives": positives,
        "negatives": output.pairs.len() - positives,
        "negatives_with_replacement": output.with_replacement.iter().filter(|&&r| r).count(),
        "skipped_records": output.skipped,
    });
    manifest.finish(&a.out, summary.clone())?;
    println!("{summary}");
    Ok(())
}

fn encoder_config(o: &TrainOpts, seed: u64) -> EncoderConfig {
    EncoderConfig {
        width: o.width,
        layers: o.layers,
        ff_width: o.ff_width,
        init_seed: seed,
        ..EncoderConfig::default()
    }
}

/// Intermediate and final stage configurations.
fn train_configs(o: &TrainOpts, seed: u64) -> Result<(TrainConfig, TrainConfig)> {
    let fin = TrainConfig {
        max_tokens: o.max_tokens,
        learning_rate: o.lr,
        batch_size: o.batch_size,
        schedule: match o.epochs {
            Some(n) => Schedule::Epochs(n),
            None => Schedule::EarlyStop {
                patience: o.patience,
                max_epochs: o.max_epochs,
            },
        },
        rng_seed: seed,
        max_grad_norm: (!o.no_clip).then_some(o.max_grad_norm),
    };
    let mid = TrainConfig {
        learning_rate: o.mid_lr.unwrap_or(o.lr),
        schedule: Schedule::Epochs(o.mid_epochs),
        ..fin.clone()
    };
    mid.validate().map_err(model_error)?;
    fin.validate().map_err(model_error)?;
    if o.width == 0 || o.layers == 0 || o.ff_width == 0 {
        return Err(invalid("--width, --layers and --ff-width must be at least 1"));
    }
    Ok((mid, fin))
}

fn texts<'a>(sets: &[&'a [LabeledPair]]) -> Vec<&'a str> {
    sets.iter().flat_map(|s| s.iter()).flat_map(|p| [p.text_a.as_str(), p.text_b.as_str()]).collect()
}

/// Runs one or two fine-tuning stages and returns the per-stage reports.
fn fit(
    model: PairClassifier<DeskEncoder>,
    intermediate: Option<&[LabeledPair]>,
    train: &[LabeledPair],
    dev: Option<&[LabeledPair]>,
    cfgs: &(TrainConfig, TrainConfig),
) -> std::result::Result<(PairClassifier<DeskEncoder>, Vec<TrainReport>), ModelError> {
    match intermediate {
        Some(mid) => double_finetune(model, mid, train, dev, &cfgs.0, &cfgs.1).map(|(m, r)| (m, r.to_vec())),
        None => finetune(model, train, dev, &cfgs.1).map(|(m, r)| (m, vec![r])),
    }
}

fn train(a: &TrainArgs) -> Result<()> {
    print_config("train", a);
    let mut manifest = Manifest::new("train", a);
    let cfgs = train_configs(&a.opts, a.seed)?;
    let final_pairs = read_pairs(&a.final_train, InputFormat::Jsonl)?;
    manifest.input(&a.final_train)?;
    let intermediate = match &a.intermediate {
        Some(p) => {
            manifest.input(p)?;
            Some(read_pairs(p, InputFormat::Jsonl)?)
        }
        None => None,
    };
    let (train_set, dev) = match (&a.dev, a.opts.epochs) {
        (Some(p), _) => {
            manifest.input(p)?;
            (final_pairs, Some(read_pairs(p, InputFormat::Jsonl)?))
        }
        (None, Some(_)) => (final_pairs, None),
        (None, None) => {
            let (t, d) = train_dev_split(&final_pairs, a.dev_fraction, a.seed);
            if d.is_empty() {
                return Err(invalid("dev split is empty; pass --dev or raise --dev-fraction"));
            }
            (t, Some(d))
        }
    };
    let mut model = match &a.init {
        Some(p) => {
            manifest.input(p)?;
            checkpoint::load(p).map_err(invalid)?
        }
        None => {
            let mut sets: Vec<&[LabeledPair]> = vec![&train_set];
            sets.extend(dev.as_deref());
            sets.extend(intermediate.as_deref());
            desk_classifier(encoder_config(&a.opts, a.seed), texts(&sets))
        }
    };
    model.max_tokens = a.opts.max_tokens;
    let (model, reports) =
        fit(model, intermediate.as_deref(), &train_set, dev.as_deref(), &cfgs).map_err(model_error)?;
    checkpoint::save(&model, &a.out).map_err(failed)?;
    let dev_accuracy = dev.as_deref().map(|d| dataset_accuracy(&model, d, a.opts.max_tokens));
    let summary = json!({
        "fingerprint": checkpoint::fingerprint(&model),
        "regime": if intermediate.is_some() { "double" } else { "single" },
        "train_pairs": train_set.len(),
        "dev_pairs": dev.as_ref().map(Vec::len),
        "intermediate_pairs": intermediate.as_ref().map(Vec::len),
        "dev_accuracy": dev_accuracy,
        "stages": reports,
    });
    manifest.finish(&a.out, summary.clone())?;
    println!(
        "{}",
        json!({ "checkpoint": a.out, "fingerprint": summary["fingerprint"], "dev_accuracy": dev_accuracy })
    );
    Ok(())
}

/// `TAG` or `TAG=PATH`.
fn parse_model_spec(spec: &str) -> Result<(String, Option<PathBuf>)> {
    let (tag, path) = match spec.split_once('=') {
        Some((t, p)) if !p.is_empty() => (t, Some(PathBuf::from(p))),
        Some(_) => return Err(invalid(format!("model spec `{spec}` has an empty path"))),
        None => (spec, None),
    };
    if tag.trim().is_empty() {
        return Err(invalid(format!("model spec `{spec}` has an empty tag")));
    }
    Ok((tag.to_string(), path))
}

fn eval(a: &EvalArgs) -> Result<()> {
    print_config("eval", a);
    let mut manifest = Manifest::new("eval", a);
    let cfgs = train_configs(&a.opts, 0)?;
    if a.seeds.is_empty() {
        return Err(invalid("--seeds must name at least one seed"));
    }
    let mut specs = Vec::new();
    let mut tags = BTreeSet::new();
    for s in &a.models {
        let (tag, path) = parse_model_spec(s)?;
        if !tags.insert(tag.clone()) {
            return Err(invalid(format!("model tag `{tag}` given twice")));
        }
        let mid = match path {
            Some(p) => {
                manifest.input(&p)?;
                Some(read_pairs(&p, InputFormat::Jsonl)?)
            }
            None => None,
        };
        specs.push((tag, mid));
    }

    let data = read_pairs(&a.dataset, InputFormat::Jsonl)?;
    manifest.input(&a.dataset)?;
    let (pool, test) = match &a.test {
        Some(p) => {
            manifest.input(p)?;
            (data, read_pairs(p, InputFormat::Jsonl)?)
        }
        None => {
            let split = split_by_seed(&data, 0.0, a.test_fraction, a.test_seed);
            (split.train.into_iter().chain(split.dev).collect(), split.test)
        }
    };
    if test.is_empty() || pool.is_empty() {
        return Err(invalid(format!("need non-empty pool and test sets, got {} and {}", pool.len(), test.len())));
    }

    // one vocabulary for every regime, so only the training differs
    let mut sets: Vec<&[LabeledPair]> = vec![&pool];
    sets.extend(specs.iter().filter_map(|(_, m)| m.as_deref()));
    let vocab_texts = texts(&sets);

    let mut reports: Vec<EvalReport> = Vec::new();
    for (tag, mid) in &specs {
        let report = run_splits(tag, &pool, a.seeds.len(), &a.seeds, a.dev_fraction, |split| {
            let mut model = desk_classifier(encoder_config(&a.opts, split.seed), vocab_texts.iter().copied());
            model.max_tokens = a.opts.max_tokens;
            let mut seeded = cfgs.clone();
            seeded.0.rng_seed = split.seed;
            seeded.1.rng_seed = split.seed;
            let dev = (!split.dev.is_empty()).then_some(split.dev.as_slice());
            let (model, _) = fit(model, mid.as_deref(), &split.train, dev, &seeded)?;
            let acc = dataset_accuracy(&model, &test, a.opts.max_tokens);
            eprintln!("{tag}: split {} (seed {}) test accuracy {acc:.4}", split.index, split.seed);
            Ok::<_, ModelError>(acc)
        })
        .map_err(failed)?;
        reports.push(report);
    }
    let alternative = match a.alternative {
        AlternativeArg::TwoSided => Alternative::TwoSided,
        AlternativeArg::Greater => Alternative::Greater,
        AlternativeArg::Less => Alternative::Less,
    };
    if a.seeds.len() >= 2 {
        attach_comparisons(&mut reports, alternative).map_err(failed)?;
    }
    print!("{}", render_table(&reports));
    let document = json!({ "pool_pairs": pool.len(), "test_pairs": test.len(), "reports": reports });
    match &a.out {
        Some(out) => {
            write_json(out, &document)?;
            manifest.finish(out, json!({ "models": reports.len(), "splits": a.seeds.len() }))?;
        }
        None => println!("{}", serde_json::to_string_pretty(&document).expect("report serializes")),
    }
    Ok(())
}

fn probe(a: &ProbeArgs) -> Result<()> {
    print_config("probe", a);
    let mut manifest = Manifest::new("probe", a);
    if a.models.len() < 4 {
        return Err(invalid(format!("--models needs at least 4 checkpoints, got {}", a.models.len())));
    }
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(invalid("--threshold must be in [0, 1]"));
    }
    let mut edits = a.edits.clone();
    if let Some(p) = &a.edits_file {
        edits.extend(read_lines(p)?);
        manifest.input(p)?;
    }
    if edits.is_empty() {
        return Err(invalid("give at least one --edit or an --edits-file"));
    }
    let mut models = Vec::with_capacity(a.models.len());
    for p in &a.models {
        models.push(checkpoint::load(p).map_err(invalid)?);
        manifest.input(p)?;
    }
    let label = Label::from_u8(a.label).expect("clap restricts the range");
    let base = LabeledPair::new(a.text_a.as_str(), a.text_b.as_str(), label, PairKind::QQ).map_err(invalid)?;
    let report = probe_with_edits(&models, &base, &edits, a.threshold).map_err(failed)?;

    let row = |name: &str, r: &ProbeRow| match (&r.verdict, &r.error) {
        (Some(v), _) => {
            let verdict = serde_json::to_value(v.verdict).expect("verdict serializes");
            println!("{name:<8} {:<22} {}/{}  {}", verdict.as_str().unwrap_or("?"), v.votes, v.models, r.text_b);
        }
        (None, e) => println!("{name:<8} {:<22} -    {}", format!("error: {}", e.as_deref().unwrap_or("?")), r.text_b),
    };
    println!("question 1: {}  (label {})", report.text_a, a.label);
    row("base", &report.base);
    for (i, r) in report.edits.iter().enumerate() {
        row(&format!("edit {}", i + 1), r);
    }
    match &a.out {
        Some(out) => {
            write_json(out, &report)?;
            manifest.finish(out, json!({ "edits": report.edits.len() }))?;
        }
        None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
    }
    Ok(())
}

fn stats(a: &StatsArgs) -> Result<()> {
    print_config("stats", a);
    let stats: CorpusStats = match a.format {
        InputFormat::Qa => {
            let corpus = load_qa_corpus(&a.input).map_err(|e| invalid(format!("{}: {e}", a.input.display())))?;
            let questions: Vec<_> = corpus.into_iter().map(|(q, _)| q).collect();
            compute_stats(&questions, whitespace_count)
        }
        f => pair_stats(&read_pairs(&a.input, f)?),
    }
    .map_err(invalid)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    } else {
        println!("pairs             {}", stats.pair_count);
        println!("unique questions  {}", stats.unique_question_count);
        println!("tokens min        {}", stats.token_min);
        println!("tokens max        {}", stats.token_max);
        println!("tokens median     {}", stats.token_median);
        println!("tokens mean       {:.2}", stats.token_mean);
    }
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<()> {
    print_config("serve", a);
    let config = ServiceConfig {
        listen: SocketAddr::new(a.host, a.port),
        model: a.model.as_deref().map(ModelSource::parse),
        faq_store: a.faqs.clone(),
        replacement_map: a.replacement_map.clone(),
        filter_threshold: a.filter_threshold,
        decision_threshold: a.decision_threshold,
        max_results: a.max_results,
    };
    config.validate().map_err(invalid)?;
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt().json().with_env_filter(filter).try_init();
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(failed)?;
    runtime.block_on(medsim_service::serve(config)).map_err(|e| match e {
        ServiceError::Config(_) | ServiceError::Store { .. } => invalid(e),
        _ => failed(e),
    })
}
