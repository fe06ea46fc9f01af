//! The `currikit` command line.
//!
//! Every invocation ends by writing one JSON run log line to standard error.
//! Exit codes: 0 on success, 1 when input data fails validation, 2 on usage
//! errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use currikit_core::corpus::{load_captions, load_tagged_corpus, load_text_corpus, DocSeparator};
use currikit_core::curriculum::{
    build_histogram, distribution_csv, distribution_svg, quantile_boundaries, BoundariesFile,
};
use currikit_core::fingerprint::fingerprint_bytes;
use currikit_core::pipeline::{run_pipeline, PipelineConfig, SplitFile};
use currikit_core::schedule::{
    build_curriculum_schedule, build_iid_schedule, build_text_pretrain_schedule, compose_t_plus_c,
    holdout_split, plan_stats, schedule_stats, train_samples, BatchManifest, ManifestSource, Mode,
    Ordering, Plan, ScheduleConfig, CAPTION_BATCH_SIZE, CAPTION_EPOCHS, EPOCHS_PER_PHASE,
    FORMAT_VERSION, HOLDOUT_FRACTION, TEXT_BATCH_SIZE, TEXT_EPOCHS,
};
use currikit_core::scorer::{load_scores, read_scores, write_scores, NounSet, Scorer, DEFAULT_NOUN_TAGS};
use currikit_core::tagger::{evaluate_tagger, train_tagger, PerceptronTagger, TrainOptions};
use currikit_core::wordpiece::{
    train_wordpiece, EncodeOptions, Vocabulary, WordPieceConfig, DEFAULT_MAX_LEN,
    DEFAULT_MIN_PAIR_FREQ, DEFAULT_VOCAB_SIZE,
};
use currikit_core::Tagset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "currikit", version, about = "Curriculum data scheduling for image-caption training")]
pub struct Cli {
    /// Seed for every random stream; overrides CURRIKIT_SEED.
    #[arg(long, global = true, env = "CURRIKIT_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for caption scoring.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Suppress the human-readable summary line.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Train the part-of-speech tagger on a two-column tagged corpus.
    TrainTagger(TrainTaggerArgs),
    /// Report tagging accuracy of a model on a tagged corpus.
    EvalTagger(EvalTaggerArgs),
    /// Induce a WordPiece vocabulary from text and caption corpora.
    TrainTokenizer(TrainTokenizerArgs),
    /// Encode lines of text into WordPiece ids, one JSON object per line.
    Encode(EncodeArgs),
    /// Score caption records by noun count.
    Score(ScoreArgs),
    /// Compute phase boundaries from a scores file.
    Quartiles(QuartilesArgs),
    /// Materialize a caption or text batch manifest.
    Schedule(ScheduleArgs),
    /// Sequence a text manifest before a caption manifest.
    Compose(ComposeArgs),
    /// Summarize a manifest or plan.
    Stats(StatsArgs),
    /// Emit the cumulative difficulty distribution with phase boundaries.
    PlotDistribution(PlotArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TrainTaggerArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub epochs: u32,
    #[arg(long, default_value_t = 0.1)]
    pub heldout: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the held-out evaluation report (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalTaggerArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocSep {
    Line,
    BlankLine,
}

impl From<DocSep> for DocSeparator {
    fn from(d: DocSep) -> Self {
        match d {
            DocSep::Line => DocSeparator::Line,
            DocSep::BlankLine => DocSeparator::BlankLine,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainTokenizerArgs {
    /// Plain-text corpus, or captions when the file ends in `.jsonl`. Repeatable.
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_PAIR_FREQ)]
    pub min_pair_freq: u64,
    #[arg(long)]
    pub no_lowercase: bool,
    #[arg(long, value_enum, default_value_t = DocSep::Line)]
    pub doc_sep: DocSep,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EncodeArgs {
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
    /// Do not add [CLS] and [SEP].
    #[arg(long)]
    pub no_wrap: bool,
    #[arg(long)]
    pub no_lowercase: bool,
    /// Text to encode, one item per line (stdin when omitted).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub captions: PathBuf,
    #[arg(long)]
    pub tagger: PathBuf,
    /// Tags counted as nouns.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_NOUN_TAGS.map(String::from))]
    pub noun_tags: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct QuartilesArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub phases: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Curriculum,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingArg {
    Ascending,
    Descending,
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["scores", "text"]))]
pub struct ScheduleArgs {
    /// Scores JSONL; selects a caption schedule.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Boundaries JSON, required for curriculum mode.
    #[arg(long, requires = "scores")]
    pub boundaries: Option<PathBuf>,
    /// Plain-text corpus; selects a text pretraining schedule.
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Curriculum)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = OrderingArg::Ascending)]
    pub ordering: OrderingArg,
    /// Defaults to 32 for captions and 256 for text.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, default_value_t = EPOCHS_PER_PHASE)]
    pub epochs_per_phase: u32,
    #[arg(long, default_value_t = CAPTION_EPOCHS)]
    pub iid_epochs: u32,
    #[arg(long, default_value_t = HOLDOUT_FRACTION)]
    pub holdout: f64,
    /// Write the holdout split here.
    #[arg(long, requires = "scores")]
    pub split_out: Option<PathBuf>,
    /// Text pretraining epochs.
    #[arg(long, default_value_t = TEXT_EPOCHS, requires = "text")]
    pub epochs: u32,
    #[arg(long, value_enum, default_value_t = DocSep::Line)]
    pub doc_sep: DocSep,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ComposeArgs {
    /// Text pretraining manifest; omit for a caption-only plan.
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[arg(long)]
    pub caption: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reference manifests by path instead of embedding them.
    #[arg(long)]
    pub by_reference: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["manifest", "plan"]))]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotFormat {
    Csv,
    Svg,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub phases: u32,
    #[arg(long, value_enum, default_value_t = PlotFormat::Csv)]
    pub format: PlotFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// TOML config, or JSON when the name ends in `.json`.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<currikit_core::Error> for Failure {
    fn from(e: currikit_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

#[derive(Debug, Serialize)]
struct OutputEntry {
    path: String,
    fingerprint: String,
}

#[derive(Debug, Serialize)]
struct RunLog {
    command: String,
    flags: serde_json::Value,
    seed: Option<u64>,
    jobs: Option<usize>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<OutputEntry>,
    wall_time_s: f64,
    warnings: Vec<String>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

struct Ctx {
    seed: Option<u64>,
    jobs: Option<usize>,
    quiet: bool,
    inputs: BTreeMap<String, String>,
    outputs: Vec<OutputEntry>,
    warnings: Vec<String>,
    summary: Option<String>,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn jobs(&self) -> Outcome<usize> {
        match self.jobs {
            Some(0) => Err(Failure::Usage("--jobs must be positive".into())),
            Some(n) => Ok(n),
            None => Ok(1),
        }
    }

    fn read(&mut self, path: &Path) -> Outcome<Vec<u8>> {
        let bytes = std::fs::read(path)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        self.note_input(path, &bytes);
        Ok(bytes)
    }

    fn note_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs
            .insert(path.display().to_string(), fingerprint_bytes(bytes));
    }

    fn fingerprint_input(&mut self, path: &Path) -> Outcome {
        self.read(path).map(|_| ())
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Outcome {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(path, bytes).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        self.outputs.push(OutputEntry {
            path: path.display().to_string(),
            fingerprint: fingerprint_bytes(bytes),
        });
        Ok(())
    }

    /// Write to `path`, or to stdout when absent.
    fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> Outcome {
        match path {
            Some(p) => self.write(p, bytes),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|e| Failure::Data(format!("stdout: {e}")))
            }
        }
    }

    fn summary(&mut self, s: impl Into<String>) {
        self.summary = Some(s.into());
    }
}

fn pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::TrainTagger(_) => "train-tagger",
        Command::EvalTagger(_) => "eval-tagger",
        Command::TrainTokenizer(_) => "train-tokenizer",
        Command::Encode(_) => "encode",
        Command::Score(_) => "score",
        Command::Quartiles(_) => "quartiles",
        Command::Schedule(_) => "schedule",
        Command::Compose(_) => "compose",
        Command::Stats(_) => "stats",
        Command::PlotDistribution(_) => "plot-distribution",
        Command::Pipeline(_) => "pipeline",
    }
}

/// Parse `argv` (including the program name), execute, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let mut ctx = Ctx {
        seed: cli.seed,
        jobs: cli.jobs,
        quiet: cli.quiet,
        inputs: BTreeMap::new(),
        outputs: Vec::new(),
        warnings: Vec::new(),
        summary: None,
    };
    let result = dispatch(&cli.command, &mut ctx);
    let (code, status, error) = match result {
        Ok(()) => (EXIT_OK, "ok", None),
        Err(Failure::Data(m)) => (EXIT_DATA, "data-error", Some(m)),
        Err(Failure::Usage(m)) => (EXIT_USAGE, "usage-error", Some(m)),
    };
    let flags = serde_json::to_value(&cli.command)
        .ok()
        .and_then(|v| v.as_object().and_then(|o| o.values().next().cloned()))
        .unwrap_or(serde_json::Value::Null);
    let log = RunLog {
        command: command_name(&cli.command).into(),
        flags,
        seed: ctx.seed,
        jobs: ctx.jobs,
        inputs: ctx.inputs,
        outputs: ctx.outputs,
        wall_time_s: started.elapsed().as_secs_f64(),
        warnings: ctx.warnings,
        status,
        error: error.clone(),
    };
    let mut err = std::io::stderr().lock();
    if let Some(e) = &error {
        let _ = writeln!(err, "currikit: error: {e}");
    } else if let (false, Some(s)) = (ctx.quiet, &ctx.summary) {
        let _ = writeln!(err, "currikit: {s}");
    }
    let _ = writeln!(err, "{}", serde_json::to_string(&log).expect("run log serializes"));
    code
}

fn dispatch(command: &Command, ctx: &mut Ctx) -> Outcome {
    match command {
        Command::TrainTagger(a) => cmd_train_tagger(a, ctx),
        Command::EvalTagger(a) => cmd_eval_tagger(a, ctx),
        Command::TrainTokenizer(a) => cmd_train_tokenizer(a, ctx),
        Command::Encode(a) => cmd_encode(a, ctx),
        Command::Score(a) => cmd_score(a, ctx),
        Command::Quartiles(a) => cmd_quartiles(a, ctx),
        Command::Schedule(a) => cmd_schedule(a, ctx),
        Command::Compose(a) => cmd_compose(a, ctx),
        Command::Stats(a) => cmd_stats(a, ctx),
        Command::PlotDistribution(a) => cmd_plot(a, ctx),
        Command::Pipeline(a) => cmd_pipeline(a, ctx),
    }
}

fn cmd_train_tagger(a: &TrainTaggerArgs, ctx: &mut Ctx) -> Outcome {
    ctx.fingerprint_input(&a.corpus)?;
    let corpus = load_tagged_corpus(&a.corpus, &Tagset::penn_treebank())?;
    if corpus.skipped_empty > 0 {
        ctx.warnings
            .push(format!("skipped {} empty sentences", corpus.skipped_empty));
    }
    let opts = TrainOptions {
        epochs: a.epochs,
        seed: ctx.seed(),
        heldout_fraction: a.heldout,
    };
    let (model, report) = train_tagger(&corpus.sentences, opts)?;
    if report.resubstitution {
        ctx.warnings
            .push("no holdout requested; accuracy is measured on the training sentences".into());
    }
    let mut bytes = Vec::new();
    model.write_to(&mut bytes)?;
    ctx.write(&a.out, &bytes)?;
    ctx.emit(a.report.as_deref(), &pretty_json(&report))?;
    ctx.summary(format!(
        "trained on {} sentences, held-out token accuracy {:.4}",
        corpus.sentences.len(),
        report.token_accuracy
    ));
    Ok(())
}

fn cmd_eval_tagger(a: &EvalTaggerArgs, ctx: &mut Ctx) -> Outcome {
    let model = load_model(&a.model, ctx)?;
    ctx.fingerprint_input(&a.corpus)?;
    let corpus = load_tagged_corpus(&a.corpus, &Tagset::penn_treebank())?;
    let report = evaluate_tagger(&model, &corpus.sentences)?;
    ctx.emit(a.out.as_deref(), &pretty_json(&report))?;
    ctx.summary(format!("token accuracy {:.4}", report.token_accuracy));
    Ok(())
}

fn load_model(path: &Path, ctx: &mut Ctx) -> Outcome<PerceptronTagger> {
    let bytes = ctx.read(path)?;
    PerceptronTagger::read_from(bytes.as_slice())
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn cmd_train_tokenizer(a: &TrainTokenizerArgs, ctx: &mut Ctx) -> Outcome {
    let mut texts: Vec<String> = Vec::new();
    for path in &a.corpus {
        ctx.fingerprint_input(path)?;
        if path.extension().is_some_and(|e| e == "jsonl") {
            for r in load_captions(path)? {
                texts.extend(r.captions);
            }
        } else {
            let corpus = load_text_corpus(path, a.doc_sep.into())?;
            texts.extend(corpus.documents.into_iter().map(|d| d.text));
        }
    }
    let config = WordPieceConfig {
        target_size: a.vocab_size,
        min_pair_freq: a.min_pair_freq,
        lowercase: !a.no_lowercase,
    };
    let vocab = train_wordpiece(texts.iter().map(String::as_str), config)?;
    if vocab.len() < a.vocab_size {
        ctx.warnings.push(format!(
            "no pair reaches frequency {} after {} tokens; vocabulary is smaller than {}",
            a.min_pair_freq,
            vocab.len(),
            a.vocab_size
        ));
    }
    let mut bytes = Vec::new();
    vocab
        .write_to(&mut bytes)
        .map_err(|e| Failure::Data(e.to_string()))?;
    ctx.write(&a.out, &bytes)?;
    ctx.summary(format!("vocabulary of {} tokens", vocab.len()));
    Ok(())
}

fn cmd_encode(a: &EncodeArgs, ctx: &mut Ctx) -> Outcome {
    let opts = EncodeOptions::new(a.max_len, !a.no_wrap).map_err(|e| Failure::Usage(e.to_string()))?;
    let vocab_bytes = ctx.read(&a.vocab)?;
    let vocab = Vocabulary::read_from(vocab_bytes.as_slice(), !a.no_lowercase)?;
    let input = match &a.input {
        Some(p) => ctx.read(p)?,
        None => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Failure::Data(format!("stdin: {e}")))?;
            buf
        }
    };
    let mut out = Vec::new();
    let mut truncated = 0usize;
    for (i, line) in BufReader::new(input.as_slice()).lines().enumerate() {
        let line = line.map_err(|e| Failure::Data(format!("input line {}: {e}", i + 1)))?;
        let enc = vocab.encode(&line, opts);
        truncated += usize::from(enc.truncated);
        serde_json::to_writer(&mut out, &enc).expect("encoding serializes");
        out.push(b'\n');
    }
    if truncated > 0 {
        ctx.warnings
            .push(format!("{truncated} inputs truncated to {} tokens", a.max_len));
    }
    ctx.emit(a.out.as_deref(), &out)?;
    Ok(())
}

fn cmd_score(a: &ScoreArgs, ctx: &mut Ctx) -> Outcome {
    let jobs = ctx.jobs()?;
    if a.noun_tags.is_empty() {
        return Err(Failure::Usage("--noun-tags must name at least one tag".into()));
    }
    let model = load_model(&a.tagger, ctx)?;
    if let Some(t) = a.noun_tags.iter().find(|t| !model.tagset().contains(t)) {
        ctx.warnings
            .push(format!("noun tag {t} is not in the model's tagset"));
    }
    ctx.fingerprint_input(&a.captions)?;
    let records = load_captions(&a.captions)?;
    let scorer = Scorer::with_nouns(&model, NounSet::new(a.noun_tags.iter().cloned()));
    let scores = scorer.score_dataset(&records, jobs)?;
    let mut bytes = Vec::new();
    write_scores(&mut bytes, &scores).map_err(|e| Failure::Data(e.to_string()))?;
    ctx.write(&a.out, &bytes)?;
    ctx.summary(format!("scored {} records", scores.len()));
    Ok(())
}

fn cmd_quartiles(a: &QuartilesArgs, ctx: &mut Ctx) -> Outcome {
    if a.phases == 0 {
        return Err(Failure::Usage("--phases must be positive".into()));
    }
    let bytes = ctx.read(&a.scores)?;
    let scores = parse_scores(&a.scores, &bytes)?;
    let hist = build_histogram(&scores)?;
    let boundaries = quantile_boundaries(&hist, a.phases)?;
    let mut file = BoundariesFile::new(&hist, &boundaries);
    file.scores_fingerprint = Some(fingerprint_bytes(&bytes));
    ctx.write(&a.out, &pretty_json(&file))?;
    ctx.summary(format!("phases: {}", boundaries.describe().join(", ")));
    Ok(())
}

fn parse_scores(path: &Path, bytes: &[u8]) -> Outcome<Vec<currikit_core::ScoredSample>> {
    read_scores(bytes).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn cmd_plot(a: &PlotArgs, ctx: &mut Ctx) -> Outcome {
    if a.phases == 0 {
        return Err(Failure::Usage("--phases must be positive".into()));
    }
    ctx.fingerprint_input(&a.scores)?;
    let scores = load_scores(&a.scores)?;
    let hist = build_histogram(&scores)?;
    let boundaries = quantile_boundaries(&hist, a.phases)?;
    let body = match a.format {
        PlotFormat::Csv => distribution_csv(&hist, &boundaries),
        PlotFormat::Svg => distribution_svg(&hist, &boundaries),
    };
    ctx.write(&a.out, body.as_bytes())
}

fn load_boundaries(path: &Path, ctx: &mut Ctx) -> Outcome<BoundariesFile> {
    let bytes = ctx.read(path)?;
    let file: BoundariesFile = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    file.histogram()?;
    file.to_boundaries()?;
    Ok(file)
}

fn cmd_schedule(a: &ScheduleArgs, ctx: &mut Ctx) -> Outcome {
    if a.batch_size == Some(0) {
        return Err(Failure::Usage("--batch-size must be positive".into()));
    }
    match (&a.scores, &a.text) {
        (Some(scores), None) => schedule_captions(a, scores, ctx),
        (None, Some(text)) => schedule_text(a, text, ctx),
        _ => Err(Failure::Usage("give exactly one of --scores or --text".into())),
    }
}

fn schedule_captions(a: &ScheduleArgs, scores_path: &Path, ctx: &mut Ctx) -> Outcome {
    let mode = match a.mode {
        ModeArg::Curriculum => Mode::Curriculum,
        ModeArg::Iid => Mode::Iid,
    };
    let boundaries = match (mode, &a.boundaries) {
        (Mode::Curriculum, None) => {
            return Err(Failure::Usage("--mode curriculum requires --boundaries".into()))
        }
        (_, Some(p)) => Some(load_boundaries(p, ctx)?),
        (Mode::Iid, None) => None,
    };
    let score_bytes = ctx.read(scores_path)?;
    let scores = parse_scores(scores_path, &score_bytes)?;
    if let Some(fp) = boundaries.as_ref().and_then(|b| b.scores_fingerprint.as_ref()) {
        if *fp != fingerprint_bytes(&score_bytes) {
            ctx.warnings.push(format!(
                "boundaries were computed from a different scores file (fingerprint {fp})"
            ));
        }
    }
    let config = ScheduleConfig {
        ordering: match a.ordering {
            OrderingArg::Ascending => Ordering::Ascending,
            OrderingArg::Descending => Ordering::Descending,
        },
        phases: boundaries
            .as_ref()
            .map_or(currikit_core::curriculum::DEFAULT_PHASES, |b| b.phases),
        epochs_per_phase: a.epochs_per_phase,
        iid_epochs: a.iid_epochs,
        batch_size: a.batch_size.unwrap_or(CAPTION_BATCH_SIZE),
        seed: ctx.seed(),
        holdout_fraction: a.holdout,
        ..ScheduleConfig::captions(mode)
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(w) = config.budget_warning() {
        ctx.warnings.push(w);
    }
    let ids: Vec<&str> = scores.iter().map(|s| s.sample_id.as_str()).collect();
    let split = holdout_split(&ids, a.holdout, ctx.seed())?;
    let train = train_samples(&scores, &split);
    let manifest = match &boundaries {
        Some(b) if mode == Mode::Curriculum => {
            build_curriculum_schedule(&train, &b.to_boundaries()?, &config)?
        }
        _ => {
            let train_ids: Vec<&str> = train.iter().map(|s| s.sample_id.as_str()).collect();
            build_iid_schedule(&train_ids, &config)?
        }
    };
    ctx.write(&a.out, &manifest.to_jsonl())?;
    if let Some(p) = &a.split_out {
        let file = SplitFile {
            kind: "split".into(),
            version: FORMAT_VERSION,
            seed: ctx.seed(),
            fraction: a.holdout,
            split,
        };
        ctx.write(p, &pretty_json(&file))?;
    }
    ctx.summary(format!(
        "{} batches over {} training samples",
        manifest.batches.len(),
        train.len()
    ));
    Ok(())
}

fn schedule_text(a: &ScheduleArgs, text: &Path, ctx: &mut Ctx) -> Outcome {
    if a.epochs == 0 {
        return Err(Failure::Usage("--epochs must be positive".into()));
    }
    ctx.fingerprint_input(text)?;
    let corpus = load_text_corpus(text, a.doc_sep.into())?;
    if corpus.skipped_blank > 0 {
        ctx.warnings
            .push(format!("dropped {} blank documents", corpus.skipped_blank));
    }
    let ids: Vec<&str> = corpus.documents.iter().map(|d| d.doc_id.as_str()).collect();
    let manifest = build_text_pretrain_schedule(
        &ids,
        a.epochs,
        a.batch_size.unwrap_or(TEXT_BATCH_SIZE),
        ctx.seed(),
    )?;
    ctx.write(&a.out, &manifest.to_jsonl())?;
    ctx.summary(format!(
        "{} batches over {} documents",
        manifest.batches.len(),
        ids.len()
    ));
    Ok(())
}

fn load_manifest(path: &Path, ctx: &mut Ctx) -> Outcome<BatchManifest> {
    let bytes = ctx.read(path)?;
    BatchManifest::read_jsonl(bytes.as_slice())
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Path to record in a plan at `plan_path` so that it resolves to `target`.
fn reference_from(plan_path: &Path, target: &Path) -> String {
    let plan_dir = plan_path.parent().unwrap_or(Path::new(""));
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let (dir, target_abs) = (abs(plan_dir), abs(target));
    match target_abs.strip_prefix(&dir) {
        Ok(rel) => rel.display().to_string(),
        Err(_) => target_abs.display().to_string(),
    }
}

fn cmd_compose(a: &ComposeArgs, ctx: &mut Ctx) -> Outcome {
    let text = a.text.as_deref().map(|p| load_manifest(p, ctx)).transpose()?;
    let caption = load_manifest(&a.caption, ctx)?;
    if let Some(t) = &text {
        if t.header.config.mode != Mode::Iid {
            return Err(Failure::Data(format!(
                "{} is not an i.i.d. text manifest",
                a.text.as_ref().expect("text given").display()
            )));
        }
    }
    let mut plan: Plan = compose_t_plus_c(text, caption);
    if a.by_reference {
        let paths = a.text.iter().chain([&a.caption]);
        for (stage, path) in plan.stages.iter_mut().zip(paths) {
            stage.manifest = ManifestSource::Path(reference_from(&a.out, path));
        }
    }
    ctx.write(&a.out, &plan.to_json())?;
    ctx.summary(format!(
        "plan with {} stages, {} batches",
        plan.stages.len(),
        plan.total_batches()
    ));
    Ok(())
}

fn cmd_stats(a: &StatsArgs, ctx: &mut Ctx) -> Outcome {
    let body = match (&a.manifest, &a.plan) {
        (Some(m), None) => pretty_json(&schedule_stats(&load_manifest(m, ctx)?)),
        (None, Some(p)) => {
            let plan = Plan::from_json(&ctx.read(p)?)?;
            let base = p.parent().unwrap_or(Path::new(""));
            pretty_json(&plan_stats(&plan, base)?)
        }
        _ => return Err(Failure::Usage("give exactly one of --manifest or --plan".into())),
    };
    ctx.emit(a.out.as_deref(), &body)
}

fn cmd_pipeline(a: &PipelineArgs, ctx: &mut Ctx) -> Outcome {
    ctx.fingerprint_input(&a.config)?;
    let mut config = PipelineConfig::load(&a.config)?;
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    if ctx.jobs.is_some() {
        config.jobs = ctx.jobs()?;
    }
    for p in [&config.tagged, &config.captions, &config.text] {
        ctx.fingerprint_input(p)?;
    }
    let out = run_pipeline(&config, &a.out_dir)?;
    for path in &out.files {
        let bytes = std::fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        ctx.outputs.push(OutputEntry {
            path: path.display().to_string(),
            fingerprint: fingerprint_bytes(&bytes),
        });
    }
    ctx.warnings.extend(out.warnings);
    ctx.summary(format!(
        "wrote {} artifacts to {}",
        out.files.len(),
        a.out_dir.display()
    ));
    Ok(())
}
