use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;
use serde::{Deserialize, Serialize};

use crisis_triage::actionability::{
    grid_search, keyword_baseline, train_ensemble, ActionSet, ActionabilityType, Ensemble, DEFAULT_C_GRID,
    DEFAULT_GAMMA_GRID,
};
use crisis_triage::config::PipelineConfig;
use crisis_triage::corpus::{
    self, build_split, dedupe, is_retweet, load_crisislex_csv, load_judgments, load_message_records, BinaryInformativeness,
    GoldAnswer, GoldQuestion, InformativenessLabel, LabelMap, LabeledMessage, Loaded, Message, MessageRecord,
    RecordError, Source, WorkerAnswer, DEFAULT_GOLD_THRESHOLD,
};
use crisis_triage::evaluation::{confusion, metrics, report_table, CategoryRow};
use crisis_triage::features::{
    default_keyword_lists, format_keyword_lists, induce_keywords, load_keyword_lists, vectorize, KeywordList,
    DEFAULT_KEYWORD_COUNT, DEFAULT_MIN_COUNT,
};
use crisis_triage::informativeness::{self, init_model, CnnConfig, CnnModel, ConvLayer};
use crisis_triage::pipeline::Pipeline;
use crisis_triage::profile::{build_profile, render_chart};
use crisis_triage::text::{load_embeddings, tokenize, EmbeddingTable, TokenSequence};
use crisis_triage::Error;

#[derive(Parser)]
#[command(name = "crisis-triage", version, about = "Informativeness filtering and actionability tagging of crisis messages")]
struct Cli {
    /// Key-value configuration file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Treat solver non-convergence as a failure (exit status 3).
    #[arg(long, global = true)]
    strict: bool,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load CrisisLex CSV and message files into one labeled message file.
    Ingest(IngestArgs),
    /// Majority-vote crowd judgments, optionally screening workers on gold questions.
    Adjudicate(AdjudicateArgs),
    /// Build the training/validation split for the informativeness network.
    Split(SplitArgs),
    /// Derive per-category keyword lists from action-labeled messages.
    InduceKeywords(InduceArgs),
    /// Train the informativeness network.
    TrainInf(TrainInfArgs),
    /// Train the nine actionability classifiers.
    TrainAct(TrainActArgs),
    /// Grid-search C and gamma for one category.
    Tune(TuneArgs),
    /// Gate then tag a stream of messages.
    Classify(ClassifyArgs),
    /// Score the actionability ensemble (and optionally the gate) on labeled data.
    Evaluate(EvaluateArgs),
    /// Bucket tagged messages over time and draw the stacked bar chart.
    Profile(ProfileArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// CrisisLex-style CSV files (tweet_id, tweet_text, label).
    #[arg(long)]
    crisislex: Vec<PathBuf>,
    /// Line-delimited JSON message files.
    #[arg(long)]
    messages: Vec<PathBuf>,
    /// Extra `label text = informative|not` mappings.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Source tag for messages that carry none.
    #[arg(long)]
    source: Option<String>,
    /// Drop retweets and near duplicates.
    #[arg(long)]
    dedupe: bool,
    /// Drop retweets only.
    #[arg(long)]
    drop_retweets: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdjudicateArgs {
    #[arg(long)]
    judgments: PathBuf,
    /// Gold answers: `{message_id, label}` per line.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GOLD_THRESHOLD)]
    gold_threshold: f64,
    /// Messages to attach labels to; without it only `{id, label}` is written.
    #[arg(long)]
    messages: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// Crowd-labeled messages.
    #[arg(long)]
    ccsid: PathBuf,
    /// CrisisLex messages.
    #[arg(long)]
    crisislex: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InduceArgs {
    /// Messages with `actions` codes.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_KEYWORD_COUNT)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    min_count: usize,
    /// Keep the shipped lists for the categories that have them.
    #[arg(long)]
    keep_defaults: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainInfArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    validation: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Per-epoch losses as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Convolution layers as `filters:width:pool`, comma separated.
    #[arg(long)]
    conv: Option<String>,
    /// Hidden layer sizes, comma separated.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    ccsid_weight: Option<f64>,
}

#[derive(Args)]
struct Resources {
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    embedding_dimension: Option<usize>,
    #[arg(long)]
    keywords: Option<PathBuf>,
}

#[derive(Args)]
struct TrainActArgs {
    /// Messages with `actions` codes.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    resources: Resources,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    data: PathBuf,
    /// Category code or name.
    #[arg(long)]
    category: String,
    #[command(flatten)]
    resources: Resources,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Comma-separated C values.
    #[arg(long)]
    c_grid: Option<String>,
    /// Comma-separated gamma values.
    #[arg(long)]
    gamma_grid: Option<String>,
    /// Balance classes by downsampling negatives before searching.
    #[arg(long)]
    balance: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Messages to classify; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    inf_model: Option<PathBuf>,
    #[arg(long)]
    act_model: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    embedding_dimension: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Messages with gold `actions` (and optionally `label`).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    act_model: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    embedding_dimension: Option<usize>,
    /// Also score the informativeness gate against `label`.
    #[arg(long)]
    inf_model: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    /// CSV twin of the report table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Messages with timestamps (and `actions` unless --classified is given).
    #[arg(long)]
    messages: PathBuf,
    /// Output of `classify`, joined to --messages by id.
    #[arg(long)]
    classified: Option<PathBuf>,
    /// Bucket width in seconds.
    #[arg(long)]
    width: Option<i64>,
    #[arg(long)]
    svg: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Adjudicate(a) => adjudicate(a),
        Command::Split(a) => split(a, &config),
        Command::InduceKeywords(a) => induce(a),
        Command::TrainInf(a) => train_inf(a, &config),
        Command::TrainAct(a) => train_act(a, config, cli.strict),
        Command::Tune(a) => tune(a, config),
        Command::Classify(a) => classify(a, config),
        Command::Evaluate(a) => evaluate(a, config),
        Command::Profile(a) => profile(a, config),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.into(),
            source: e,
        })?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| {
        Failure::Data(Error::Io {
            path: path.into(),
            source: e,
        })
    })
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_all(w: &mut dyn Write, text: &str, path: Option<&Path>) -> CliResult {
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| {
            Failure::Data(Error::Io {
                path: path.map_or_else(|| "<stdout>".into(), Path::to_path_buf),
                source: e,
            })
        })
}

fn write_file(path: &Path, text: &str) -> CliResult {
    let mut w = create(path)?;
    write_all(&mut w, text, Some(path))
}

fn report_errors(path: &Path, errors: &[RecordError]) {
    for e in errors.iter().take(5) {
        warn!("{}: skipped {e}", path.display());
    }
    if errors.len() > 5 {
        warn!("{}: {} more malformed records skipped", path.display(), errors.len() - 5);
    }
}

fn records(path: &Path) -> CliResult<Vec<MessageRecord>> {
    let Loaded { records, errors } = load_message_records(path)?;
    report_errors(path, &errors);
    Ok(records)
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("records serialize"));
        out.push('\n');
    }
    out
}

fn labeled(path: &Path, force_source: Option<Source>) -> CliResult<Vec<LabeledMessage>> {
    let mut out = Vec::new();
    for r in records(path)? {
        let Some(label) = r.binary_label() else {
            return Err(Failure::Data(Error::Config(format!(
                "{}: message {:?} has no label",
                path.display(),
                r.id
            ))));
        };
        let mut message = r.to_message()?;
        if let Some(s) = force_source {
            message = message.with_source(s);
        }
        out.push(LabeledMessage {
            message,
            label: label?,
        });
    }
    Ok(out)
}

fn action_corpus(path: &Path) -> CliResult<Vec<(TokenSequence, ActionSet)>> {
    records(path)?
        .into_iter()
        .map(|r| {
            let actions = r.action_set().ok_or_else(|| {
                Failure::Data(Error::Config(format!("{}: message {:?} has no actions", path.display(), r.id)))
            })??;
            Ok((tokenize(&r.text), actions))
        })
        .collect()
}

fn record_for(m: &Message, label: Option<BinaryInformativeness>) -> MessageRecord {
    let mut r = MessageRecord::from_message(m);
    r.label = label.map(|l| l.as_str().to_string());
    r
}

fn ingest(a: IngestArgs) -> CliResult {
    if a.crisislex.is_empty() && a.messages.is_empty() {
        return Err(Failure::Usage("ingest needs --crisislex or --messages".into()));
    }
    let mut labels = LabelMap::default();
    if let Some(p) = &a.labels {
        labels = LabelMap::from_file(p)?;
    }
    let default_source: Option<Source> = a.source.as_deref().map(str::parse).transpose()?;
    let mut items: Vec<(Message, Option<BinaryInformativeness>)> = Vec::new();
    for p in &a.crisislex {
        let Loaded { records, errors } = load_crisislex_csv(p, &labels)?;
        report_errors(p, &errors);
        items.extend(records.into_iter().map(|lm| (lm.message, Some(lm.label))));
    }
    for p in &a.messages {
        for r in records(p)? {
            let label = r.binary_label().transpose()?;
            let mut m = r.to_message()?;
            if r.source.is_none() {
                if let Some(s) = default_source {
                    m = m.with_source(s);
                }
            }
            items.push((m, label));
        }
    }
    let mut seen = BTreeSet::new();
    items.retain(|(m, _)| seen.insert(m.id().to_string()));
    if a.dedupe {
        let labels: HashMap<String, Option<BinaryInformativeness>> =
            items.iter().map(|(m, l)| (m.id().to_string(), *l)).collect();
        let kept = dedupe(&items.iter().map(|(m, _)| m.clone()).collect::<Vec<_>>());
        items = kept.into_iter().map(|m| {
            let l = labels[m.id()];
            (m, l)
        }).collect();
    } else if a.drop_retweets {
        items.retain(|(m, _)| !is_retweet(m.text()));
    }
    eprintln!("{} messages", items.len());
    let text = jsonl(items.iter().map(|(m, l)| record_for(m, *l)));
    write_all(&mut *output(a.out.as_deref())?, &text, a.out.as_deref())
}

#[derive(Deserialize)]
struct GoldRecord {
    message_id: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    actions: Option<Vec<String>>,
}

#[derive(Serialize)]
struct AdjudicatedLabel<'a> {
    id: &'a str,
    label: &'a str,
}

fn adjudicate(a: AdjudicateArgs) -> CliResult {
    let Loaded { records: judgments, errors } = load_judgments(&a.judgments)?;
    report_errors(&a.judgments, &errors);
    let mut excluded = BTreeSet::new();
    let mut gold_ids = BTreeSet::new();
    if let Some(gold_path) = &a.gold {
        let text = fs::read_to_string(gold_path).map_err(|e| Error::Io {
            path: gold_path.clone(),
            source: e,
        })?;
        let mut gold = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parse_err = |message: String| Error::Parse {
                context: gold_path.display().to_string(),
                line: i + 1,
                message,
            };
            let r: GoldRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let correct = match (r.label, r.actions) {
                (Some(l), None) => GoldAnswer::Informativeness(l.parse().map_err(|e: Error| parse_err(e.to_string()))?),
                (None, Some(codes)) => GoldAnswer::Actions(
                    ActionSet::from_codes(codes.iter().map(String::as_str)).map_err(|e| parse_err(e.to_string()))?,
                ),
                _ => return Err(Failure::Data(parse_err("expected exactly one of label or actions".into()))),
            };
            gold.push(GoldQuestion {
                message_id: r.message_id,
                correct,
            });
        }
        let answers: Vec<WorkerAnswer> = judgments.iter().map(WorkerAnswer::from).collect();
        let screen = corpus::screen_workers(&gold, &answers, a.gold_threshold);
        for (w, s) in &screen.scores {
            eprintln!("worker {w}: gold accuracy {s:.3}{}", if screen.flagged.contains(w) { " (excluded)" } else { "" });
        }
        excluded = screen.flagged;
        gold_ids = gold.into_iter().map(|g| g.message_id).collect();
    }
    // Gold items only screen workers; they are not part of the labeled output.
    let labels = corpus::adjudicate_all(&judgments, &excluded)
        .into_iter()
        .filter(|(id, _)| !gold_ids.contains(id))
        .collect();
    finish_adjudication(&a, &judgments, &excluded, labels)
}

fn finish_adjudication(
    a: &AdjudicateArgs,
    judgments: &[corpus::Judgment],
    excluded: &BTreeSet<String>,
    labels: BTreeMap<String, InformativenessLabel>,
) -> CliResult {
    let grouped = corpus::group_judgments(judgments, excluded);
    let multi: Vec<&Vec<InformativenessLabel>> = grouped
        .iter()
        .filter(|(id, js)| js.len() >= 2 && labels.contains_key(**id))
        .map(|(_, js)| js)
        .collect();
    if let Ok(report) = corpus::agreement(&multi) {
        eprintln!("agreement {:.2}%", report.overall * 100.0);
        for (label, v) in &report.per_category {
            eprintln!("  {}: {:.2}%", label.as_str(), v * 100.0);
        }
    }
    let text = match &a.messages {
        Some(p) => jsonl(records(p)?.into_iter().filter_map(|mut r| {
            let label = labels.get(&r.id)?;
            r.label = Some(label.as_str().to_string());
            Some(r)
        })),
        None => jsonl(labels.iter().map(|(id, l)| AdjudicatedLabel { id, label: l.as_str() })),
    };
    write_all(&mut *output(a.out.as_deref())?, &text, a.out.as_deref())
}

fn split(a: SplitArgs, config: &PipelineConfig) -> CliResult {
    let ccsid = labeled(&a.ccsid, Some(Source::Ccsid))?;
    let crisislex = labeled(&a.crisislex, Some(Source::CrisisLex))?;
    let s = build_split(&ccsid, &crisislex, config.seed)?;
    let write = |name: &str, set: &[LabeledMessage]| {
        write_file(&a.out_dir.join(name), &jsonl(set.iter().map(|lm| record_for(&lm.message, Some(lm.label)))))
    };
    write("train.jsonl", &s.train)?;
    write("validation.jsonl", &s.validation)?;
    eprintln!("{} training, {} validation", s.train.len(), s.validation.len());
    Ok(())
}

fn induce(a: InduceArgs) -> CliResult {
    let corpus = action_corpus(&a.data)?;
    let defaults = default_keyword_lists();
    let mut lists = Vec::new();
    for t in ActionabilityType::ALL {
        if a.keep_defaults {
            if let Some(l) = defaults.iter().find(|l| l.category() == t) {
                lists.push(l.clone());
                continue;
            }
        }
        let induced = induce_keywords(&corpus, t, a.k, a.min_count)?;
        if induced.short {
            warn!("{t}: only {} eligible keywords", induced.list.len());
        }
        lists.push(induced.list);
    }
    let text = format_keyword_lists(&lists);
    write_all(&mut *output(a.out.as_deref())?, &text, a.out.as_deref())
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| Failure::Usage(format!("--{flag}: cannot parse {v:?}"))))
        .collect()
}

fn train_inf(a: TrainInfArgs, config: &PipelineConfig) -> CliResult {
    let mut cnn = CnnConfig {
        seed: config.seed,
        ..CnnConfig::default()
    };
    if let Some(v) = a.max_epochs {
        cnn.max_epochs = v;
    }
    if let Some(v) = a.learning_rate {
        cnn.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        cnn.batch_size = v;
    }
    if let Some(v) = a.max_len {
        cnn.max_len = v;
    }
    if let Some(v) = a.ccsid_weight {
        cnn.ccsid_weight = v;
    }
    if let Some(s) = &a.conv {
        cnn.conv = s
            .split(',')
            .map(|layer| {
                let parts = parse_list::<usize>("conv", &layer.replace(':', ","))?;
                match parts[..] {
                    [filters, width, pool] => Ok(ConvLayer { filters, width, pool }),
                    _ => Err(Failure::Usage(format!("--conv: expected filters:width:pool, got {layer:?}"))),
                }
            })
            .collect::<CliResult<_>>()?;
    }
    if let Some(s) = &a.hidden {
        cnn.hidden = if s.trim().is_empty() { Vec::new() } else { parse_list("hidden", s)? };
    }
    let model = init_model(&cnn)?;
    let train = labeled(&a.train, None)?;
    let validation = labeled(&a.validation, None)?;
    let split = corpus::Split { train, validation };
    let (model, trace) = informativeness::train_split(&model, &split)?;
    model.save(&a.out)?;
    if let Some(p) = &a.trace {
        let mut csv = String::from("epoch,training_loss,validation_loss\n");
        for e in &trace.epochs {
            csv.push_str(&format!("{},{:.9},{:.9}\n", e.epoch, e.training_loss, e.validation_loss));
        }
        write_file(p, &csv)?;
    }
    match trace.crossover_epoch {
        Some(c) => eprintln!("loss crossover at epoch {c}; selected epoch {}", trace.selected_epoch),
        None => eprintln!("no crossover; selected epoch {}", trace.selected_epoch),
    }
    Ok(())
}

fn embeddings(config: &PipelineConfig) -> CliResult<EmbeddingTable> {
    let path = config
        .embeddings
        .as_ref()
        .ok_or_else(|| Failure::Usage("an embeddings file is required (--embeddings or config)".into()))?;
    Ok(load_embeddings(path, config.embedding_dimension)?)
}

fn apply_resources(r: &Resources, config: &mut PipelineConfig) {
    if let Some(p) = &r.embeddings {
        config.embeddings = Some(p.clone());
    }
    if let Some(d) = r.embedding_dimension {
        config.embedding_dimension = d;
    }
    if let Some(p) = &r.keywords {
        config.keywords = Some(p.clone());
    }
}

fn keyword_lists(config: &PipelineConfig) -> CliResult<Vec<KeywordList>> {
    match &config.keywords {
        Some(p) => Ok(load_keyword_lists(p)?),
        None => Err(Failure::Usage(
            "keyword lists are required (--keywords or config); run induce-keywords first".into(),
        )),
    }
}

fn train_act(a: TrainActArgs, mut config: PipelineConfig, strict: bool) -> CliResult {
    apply_resources(&a.resources, &mut config);
    if let Some(c) = a.c {
        config.svm.c = c;
    }
    if let Some(g) = a.gamma {
        config.svm.gamma = g;
    }
    if let Some(c) = a.cutoff {
        config.features.cutoff = c;
    }
    config.validate()?;
    let table = embeddings(&config)?;
    let lists = keyword_lists(&config)?;
    let corpus = action_corpus(&a.data)?;
    let (ensemble, reports) = train_ensemble(&corpus, &lists, &table, &config.features, &config.svm, config.seed)?;
    ensemble.save(&a.out)?;
    let mut unconverged = Vec::new();
    for r in &reports {
        eprintln!(
            "{} {}: {} positives, {} negatives, {} support vectors{}",
            r.category.code(),
            r.category.name(),
            r.positives,
            r.negatives_used,
            r.support_vectors,
            if r.converged { "" } else { ", not converged" }
        );
        if !r.missing_keywords.is_empty() {
            warn!("{}: keywords missing from embeddings: {}", r.category, r.missing_keywords.join(" "));
        }
        if !r.converged {
            unconverged.push(r.category.code().to_string());
        }
    }
    if strict && !unconverged.is_empty() {
        return Err(Failure::NotConverged(format!(
            "SMO did not converge for {}",
            unconverged.join(", ")
        )));
    }
    Ok(())
}

fn tune(a: TuneArgs, mut config: PipelineConfig) -> CliResult {
    apply_resources(&a.resources, &mut config);
    let category: ActionabilityType = a.category.parse()?;
    let c_grid = match &a.c_grid {
        Some(s) => parse_list("c-grid", s)?,
        None => DEFAULT_C_GRID.to_vec(),
    };
    let gamma_grid = match &a.gamma_grid {
        Some(s) => parse_list("gamma-grid", s)?,
        None => DEFAULT_GAMMA_GRID.to_vec(),
    };
    let table = embeddings(&config)?;
    let lists = keyword_lists(&config)?;
    let list = lists
        .iter()
        .find(|l| l.category() == category)
        .ok_or_else(|| Error::MissingCategory(format!("{category} has no keyword list")))?;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (tokens, actions) in action_corpus(&a.data)? {
        if tokens.is_empty() {
            continue;
        }
        let v = vectorize(&tokens, list, &table, &config.features)?.features.values;
        if actions.contains(category) {
            pos.push(v);
        } else {
            neg.push(v);
        }
    }
    if a.balance {
        let b = crisis_triage::actionability::downsample_negatives(
            &pos,
            &neg,
            crisis_triage::seed::derive_seed(config.seed, &format!("downsample/{}", category.code())),
        )?;
        neg = b.negatives;
    }
    let y: Vec<f64> = pos.iter().map(|_| 1.0).chain(neg.iter().map(|_| -1.0)).collect();
    let x: Vec<Vec<f64>> = pos.into_iter().chain(neg).collect();
    let result = grid_search(&x, &y, &c_grid, &gamma_grid, a.folds, config.seed)?;
    eprintln!(
        "best C={} gamma={} mean F1 {:.4}",
        result.best.c, result.best.gamma, result.best.mean_f1
    );
    write_all(&mut *output(a.out.as_deref())?, &result.heatmap_csv(), a.out.as_deref())
}

fn load_pipeline(
    config: &PipelineConfig,
    inf: Option<&PathBuf>,
    act: Option<&PathBuf>,
) -> CliResult<(CnnModel, Ensemble, EmbeddingTable)> {
    let inf = inf
        .or(config.informativeness_model.as_ref())
        .ok_or_else(|| Failure::Usage("--inf-model is required".into()))?;
    let act = act
        .or(config.actionability_model.as_ref())
        .ok_or_else(|| Failure::Usage("--act-model is required".into()))?;
    Ok((CnnModel::load(inf)?, Ensemble::load(act)?, embeddings(config)?))
}

fn classify(a: ClassifyArgs, mut config: PipelineConfig) -> CliResult {
    if let Some(p) = a.embeddings.clone() {
        config.embeddings = Some(p);
    }
    if let Some(d) = a.embedding_dimension {
        config.embedding_dimension = d;
    }
    if let Some(t) = a.threshold {
        config.threshold = t;
    }
    config.validate()?;
    let (gate, ensemble, table) = load_pipeline(&config, a.inf_model.as_ref(), a.act_model.as_ref())?;
    let pipeline = Pipeline::new(gate, ensemble, table, config.threshold)?;
    let out = output(a.out.as_deref())?;
    let n = match &a.input {
        Some(p) => {
            let f = File::open(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            pipeline.classify_stream(BufReader::new(f), out)?
        }
        None => pipeline.classify_stream(io::stdin().lock(), out)?,
    };
    eprintln!(
        "{n} messages, {} passed the informativeness gate",
        pipeline.actionability_calls()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs, mut config: PipelineConfig) -> CliResult {
    if let Some(p) = a.embeddings.clone() {
        config.embeddings = Some(p);
    }
    if let Some(d) = a.embedding_dimension {
        config.embedding_dimension = d;
    }
    if let Some(t) = a.threshold {
        config.threshold = t;
    }
    let recs = records(&a.data)?;
    if let Some(p) = a.inf_model.as_ref().or(config.informativeness_model.as_ref()) {
        let model = CnnModel::load(p)?;
        let (mut preds, mut golds) = (Vec::new(), Vec::new());
        for r in &recs {
            if let Some(label) = r.binary_label() {
                let d = informativeness::classify(&model, &r.text, config.threshold)?;
                preds.push(if d.decision.is_informative() { 1 } else { -1 });
                golds.push(if label?.is_informative() { 1 } else { -1 });
            }
        }
        if !preds.is_empty() {
            let m = metrics(&confusion(&preds, &golds)?);
            println!(
                "Informativeness: accuracy {:.2}%, F1 {:.2}%, recall {:.2}%, precision {:.2}% ({} messages)",
                m.accuracy * 100.0,
                m.f1 * 100.0,
                m.recall * 100.0,
                m.precision * 100.0,
                preds.len()
            );
        }
    }
    let act = a
        .act_model
        .as_ref()
        .or(config.actionability_model.as_ref())
        .ok_or_else(|| Failure::Usage("--act-model is required".into()))?;
    let ensemble = Ensemble::load(act)?;
    let table = embeddings(&config)?;
    let mut corpus = Vec::new();
    for r in &recs {
        if let Some(actions) = r.action_set() {
            corpus.push((tokenize(&r.text), actions?));
        }
    }
    if corpus.is_empty() {
        return Err(Failure::Data(Error::Empty(format!("{} has no action-labeled messages", a.data.display()))));
    }
    let mut per = vec![(Vec::new(), Vec::new(), Vec::new()); 9];
    for (tokens, gold) in &corpus {
        let predicted = ensemble.classify_tokens(tokens, &table)?;
        for t in ActionabilityType::ALL {
            let (p, b, g) = &mut per[t.index()];
            p.push(if predicted.contains(t) { 1i8 } else { -1 });
            b.push(keyword_baseline(tokens, ensemble.keywords(t)));
            g.push(if gold.contains(t) { 1i8 } else { -1 });
        }
    }
    let rows = ActionabilityType::ALL
        .iter()
        .map(|&t| {
            let (p, b, g) = &per[t.index()];
            Ok(CategoryRow {
                category: t,
                metrics: metrics(&confusion(p, g)?),
                baseline_f1: metrics(&confusion(b, g)?).f1,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let table = report_table(&rows)?;
    print!("{}", table.text);
    println!("(single held-out set, {} messages)", corpus.len());
    if let Some(p) = &a.csv {
        write_file(p, &table.csv)?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct ClassifiedLine {
    id: String,
    actions: Vec<String>,
}

fn profile(a: ProfileArgs, config: PipelineConfig) -> CliResult {
    let recs = records(&a.messages)?;
    let classified: Option<HashMap<String, ActionSet>> = match &a.classified {
        Some(p) => {
            let f = File::open(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            let mut map = HashMap::new();
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let c: ClassifiedLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    context: p.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                map.insert(c.id, ActionSet::from_codes(c.actions.iter().map(String::as_str))?);
            }
            Some(map)
        }
        None => None,
    };
    let mut tagged = Vec::new();
    for r in recs {
        let actions = match &classified {
            Some(map) => match map.get(&r.id) {
                Some(s) => s.clone(),
                None => continue,
            },
            None => r.action_set().transpose()?.unwrap_or_default(),
        };
        tagged.push((r.to_message()?, actions));
    }
    let width = a.width.unwrap_or(config.bucket_width);
    let profile = build_profile(&tagged, width)?;
    let chart = render_chart(&profile)?;
    write_file(&a.svg, &chart.svg)?;
    if let Some(p) = &a.csv {
        write_file(p, &chart.csv)?;
    }
    eprintln!("{} buckets", profile.buckets.len());
    Ok(())
}
