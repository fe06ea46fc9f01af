//! One-shot materialization of every artifact from a config file: tagger,
//! scores, phase boundaries, distribution data, the holdout split, the
//! manifests and the four training plans (`C`/`T+C` x i.i.d./curriculum).
//!
//! Outputs depend only on the inputs and the seed; the scoring thread count
//! does not affect them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{load_captions, load_tagged_corpus, load_text_corpus, DocSeparator, Tagset};
use crate::curriculum::{
    build_histogram, distribution_csv, distribution_svg, quantile_boundaries, BoundariesFile,
    DEFAULT_PHASES,
};
use crate::error::{Error, Result};
use crate::fingerprint::fingerprint_bytes;
use crate::schedule::{
    build_curriculum_schedule, build_iid_schedule, build_text_pretrain_schedule, holdout_split,
    schedule_stats, train_samples, BatchManifest, ManifestSource, Mode, Ordering, Plan,
    ScheduleConfig, SplitAssignment, Stage, CAPTION_BATCH_SIZE, CAPTION_EPOCHS, EPOCHS_PER_PHASE,
    FORMAT_VERSION, HOLDOUT_FRACTION, PLAN_KIND, TEXT_BATCH_SIZE, TEXT_EPOCHS,
};
use crate::scorer::{write_scores, NounSet, Scorer, DEFAULT_NOUN_TAGS};
use crate::tagger::{train_tagger, TrainOptions};
use crate::wordpiece::{train_wordpiece, WordPieceConfig, DEFAULT_MIN_PAIR_FREQ, DEFAULT_VOCAB_SIZE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Captions JSONL.
    pub captions: PathBuf,
    /// Plain-text pretraining corpus.
    pub text: PathBuf,
    /// Two-column tagged corpus for the tagger.
    pub tagged: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub jobs: usize,
    #[serde(default)]
    pub tagger: TaggerSection,
    #[serde(default)]
    pub scoring: ScoringSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub text_schedule: TextScheduleSection,
    /// WordPiece training is skipped when absent.
    #[serde(default)]
    pub tokenizer: Option<TokenizerSection>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggerSection {
    pub epochs: u32,
    pub heldout: f64,
}

impl Default for TaggerSection {
    fn default() -> Self {
        Self {
            epochs: 5,
            heldout: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub noun_tags: Vec<String>,
}

impl Default for ScoringSection {
    fn default() -> Self {
        Self {
            noun_tags: DEFAULT_NOUN_TAGS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub phases: u32,
    pub epochs_per_phase: u32,
    pub iid_epochs: u32,
    pub batch_size: usize,
    pub holdout: f64,
    pub ordering: Ordering,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            phases: DEFAULT_PHASES,
            epochs_per_phase: EPOCHS_PER_PHASE,
            iid_epochs: CAPTION_EPOCHS,
            batch_size: CAPTION_BATCH_SIZE,
            holdout: HOLDOUT_FRACTION,
            ordering: Ordering::Ascending,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextScheduleSection {
    pub epochs: u32,
    pub batch_size: usize,
    pub blank_line_documents: bool,
}

impl Default for TextScheduleSection {
    fn default() -> Self {
        Self {
            epochs: TEXT_EPOCHS,
            batch_size: TEXT_BATCH_SIZE,
            blank_line_documents: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerSection {
    pub vocab_size: usize,
    pub min_pair_freq: u64,
    pub lowercase: bool,
}

impl Default for TokenizerSection {
    fn default() -> Self {
        Self {
            vocab_size: DEFAULT_VOCAB_SIZE,
            min_pair_freq: DEFAULT_MIN_PAIR_FREQ,
            lowercase: true,
        }
    }
}

impl PipelineConfig {
    /// Parse TOML (or JSON for `.json` files). Relative corpus paths are
    /// resolved against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.captions, &mut cfg.text, &mut cfg.tagged] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// File names written into the output directory.
pub mod files {
    pub const TAGGER: &str = "tagger.model";
    pub const TAGGER_EVAL: &str = "tagger-eval.json";
    pub const SCORES: &str = "scores.jsonl";
    pub const BOUNDARIES: &str = "boundaries.json";
    pub const DISTRIBUTION_CSV: &str = "distribution.csv";
    pub const DISTRIBUTION_SVG: &str = "distribution.svg";
    pub const SPLIT: &str = "split.json";
    pub const MANIFEST_TEXT: &str = "manifest-text.jsonl";
    pub const MANIFEST_CAPTION_IID: &str = "manifest-caption-iid.jsonl";
    pub const MANIFEST_CAPTION_CL: &str = "manifest-caption-cl.jsonl";
    pub const PLAN_C_IID: &str = "plan-c-iid.json";
    pub const PLAN_C_CL: &str = "plan-c-cl.json";
    pub const PLAN_TC_IID: &str = "plan-tc-iid.json";
    pub const PLAN_TC_CL: &str = "plan-tc-cl.json";
    pub const STATS: &str = "stats.json";
    pub const VOCAB: &str = "vocab.txt";
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitFile {
    pub kind: String,
    pub version: u32,
    pub seed: u64,
    pub fraction: f64,
    #[serde(flatten)]
    pub split: SplitAssignment,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Invalid(format!("{name}: {e}")))
}

struct Writer<'a> {
    dir: &'a Path,
    out: PipelineOutput,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.out.files.push(path);
        Ok(())
    }

    fn put_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        self.put(name, bytes)
    }
}

fn plan_by_reference(stages: &[(&str, &str, &BatchManifest)]) -> Plan {
    let mut start = 0;
    let stages = stages
        .iter()
        .map(|(name, file, m)| {
            let s = Stage {
                name: name.to_string(),
                start_batch: start,
                batch_count: m.batches.len(),
                manifest: ManifestSource::Path(file.to_string()),
            };
            start += m.batches.len();
            s
        })
        .collect();
    Plan {
        kind: PLAN_KIND.into(),
        version: FORMAT_VERSION,
        stages,
    }
}

/// Run every stage, writing artifacts into `out_dir` (created if missing).
pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<PipelineOutput> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut w = Writer {
        dir: out_dir,
        out: PipelineOutput::default(),
    };

    // Tagger.
    let tagged = stage("tagged corpus", load_tagged_corpus(&cfg.tagged, &Tagset::penn_treebank()))?;
    if tagged.skipped_empty > 0 {
        w.out
            .warnings
            .push(format!("skipped {} empty sentences in tagged corpus", tagged.skipped_empty));
    }
    let (model, report) = stage(
        "tagger",
        train_tagger(
            &tagged.sentences,
            TrainOptions {
                epochs: cfg.tagger.epochs,
                seed: cfg.seed,
                heldout_fraction: cfg.tagger.heldout,
            },
        ),
    )?;
    let mut model_bytes = Vec::new();
    model.write_to(&mut model_bytes)?;
    w.put(files::TAGGER, &model_bytes)?;
    w.put_json(files::TAGGER_EVAL, &report)?;

    // Scores.
    let records = stage("captions", load_captions(&cfg.captions))?;
    let scorer = Scorer::with_nouns(&model, NounSet::new(cfg.scoring.noun_tags.iter().cloned()));
    let scores = stage("score", scorer.score_dataset(&records, cfg.jobs))?;
    let mut score_bytes = Vec::new();
    write_scores(&mut score_bytes, &scores).expect("writing to memory");
    let scores_fp = fingerprint_bytes(&score_bytes);
    w.put(files::SCORES, &score_bytes)?;

    // Distribution and phase boundaries over the full caption set.
    let hist = stage("quartiles", build_histogram(&scores))?;
    let boundaries = stage("quartiles", quantile_boundaries(&hist, cfg.schedule.phases))?;
    let mut bfile = BoundariesFile::new(&hist, &boundaries);
    bfile.scores_fingerprint = Some(scores_fp);
    w.put_json(files::BOUNDARIES, &bfile)?;
    w.put(files::DISTRIBUTION_CSV, distribution_csv(&hist, &boundaries))?;
    w.put(files::DISTRIBUTION_SVG, distribution_svg(&hist, &boundaries))?;

    // Holdout split; both caption regimes train on the same side.
    let ids: Vec<&str> = scores.iter().map(|s| s.sample_id.as_str()).collect();
    let split = stage("split", holdout_split(&ids, cfg.schedule.holdout, cfg.seed))?;
    let train = train_samples(&scores, &split);
    w.put_json(
        files::SPLIT,
        &SplitFile {
            kind: "split".into(),
            version: FORMAT_VERSION,
            seed: cfg.seed,
            fraction: cfg.schedule.holdout,
            split: split.clone(),
        },
    )?;

    let base = ScheduleConfig {
        ordering: cfg.schedule.ordering,
        phases: cfg.schedule.phases,
        epochs_per_phase: cfg.schedule.epochs_per_phase,
        iid_epochs: cfg.schedule.iid_epochs,
        batch_size: cfg.schedule.batch_size,
        seed: cfg.seed,
        holdout_fraction: cfg.schedule.holdout,
        ..ScheduleConfig::captions(Mode::Curriculum)
    };
    if let Some(warning) = base.budget_warning() {
        w.out.warnings.push(warning);
    }
    let cl = stage("schedule", build_curriculum_schedule(&train, &boundaries, &base))?;
    let iid_cfg = ScheduleConfig {
        mode: Mode::Iid,
        ..base.clone()
    };
    let train_ids: Vec<&str> = train.iter().map(|s| s.sample_id.as_str()).collect();
    let iid = stage("schedule", build_iid_schedule(&train_ids, &iid_cfg))?;

    let sep = if cfg.text_schedule.blank_line_documents {
        DocSeparator::BlankLine
    } else {
        DocSeparator::Line
    };
    let text = stage("text corpus", load_text_corpus(&cfg.text, sep))?;
    if text.skipped_blank > 0 {
        w.out
            .warnings
            .push(format!("dropped {} blank documents in text corpus", text.skipped_blank));
    }
    let doc_ids: Vec<&str> = text.documents.iter().map(|d| d.doc_id.as_str()).collect();
    let text_manifest = stage(
        "schedule",
        build_text_pretrain_schedule(
            &doc_ids,
            cfg.text_schedule.epochs,
            cfg.text_schedule.batch_size,
            cfg.seed,
        ),
    )?;

    w.put(files::MANIFEST_TEXT, text_manifest.to_jsonl())?;
    w.put(files::MANIFEST_CAPTION_IID, iid.to_jsonl())?;
    w.put(files::MANIFEST_CAPTION_CL, cl.to_jsonl())?;

    let plans = [
        (files::PLAN_C_IID, vec![("caption", files::MANIFEST_CAPTION_IID, &iid)]),
        (files::PLAN_C_CL, vec![("caption", files::MANIFEST_CAPTION_CL, &cl)]),
        (
            files::PLAN_TC_IID,
            vec![
                ("text", files::MANIFEST_TEXT, &text_manifest),
                ("caption", files::MANIFEST_CAPTION_IID, &iid),
            ],
        ),
        (
            files::PLAN_TC_CL,
            vec![
                ("text", files::MANIFEST_TEXT, &text_manifest),
                ("caption", files::MANIFEST_CAPTION_CL, &cl),
            ],
        ),
    ];
    for (name, stages) in &plans {
        w.put(name, plan_by_reference(stages).to_json())?;
    }

    let stats = serde_json::json!({
        "kind": "stats",
        "version": FORMAT_VERSION,
        "text": schedule_stats(&text_manifest),
        "caption_iid": schedule_stats(&iid),
        "caption_curriculum": schedule_stats(&cl),
    });
    w.put_json(files::STATS, &stats)?;

    if let Some(tok) = &cfg.tokenizer {
        let texts = text
            .documents
            .iter()
            .map(|d| d.text.as_str())
            .chain(records.iter().flat_map(|r| r.captions.iter().map(String::as_str)));
        let vocab = stage(
            "tokenizer",
            train_wordpiece(
                texts,
                WordPieceConfig {
                    target_size: tok.vocab_size,
                    min_pair_freq: tok.min_pair_freq,
                    lowercase: tok.lowercase,
                },
            ),
        )?;
        let mut buf = Vec::new();
        vocab.write_to(&mut buf).expect("writing to memory");
        w.put(files::VOCAB, buf)?;
    }

    Ok(w.out)
}
