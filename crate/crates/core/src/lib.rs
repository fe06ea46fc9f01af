//! Curriculum data scheduling for image-caption training.
//!
//! The pipeline runs in stages that communicate through files:
//!
//! 1. [`tagger`] learns a part-of-speech model from a tagged corpus.
//! 2. [`scorer`] counts nouns per caption and keeps the maximum per image.
//! 3. [`curriculum`] turns the difficulty distribution into nested phase pools
//!    bounded by its quantiles.
//! 4. [`schedule`] materializes seeded batch manifests for curriculum and
//!    i.i.d. training, the text pretraining leg and the composed plans.
//!
//! [`wordpiece`] induces a subword vocabulary from the same corpora, and
//! [`pipeline`] runs every stage from one config file.

pub mod corpus;
pub mod curriculum;
pub mod error;
pub mod fingerprint;
pub mod pipeline;
pub mod rng;
pub mod schedule;
pub mod scorer;
pub mod synthetic;
pub mod tagger;
pub mod wordpiece;

pub use corpus::{word_tokenize, CaptionRecord, TaggedSentence, Tagset, TextDocument};
pub use curriculum::{
    build_histogram, phase_pool, quantile_boundaries, quartile_boundaries, DifficultyHistogram,
    PhaseBoundaries,
};
pub use error::{Error, Result};
pub use schedule::{
    build_curriculum_schedule, build_iid_schedule, build_text_pretrain_schedule, compose_t_plus_c,
    holdout_split, schedule_stats, BatchManifest, Mode, Ordering, Plan, ScheduleConfig,
    SplitAssignment,
};
pub use scorer::{noun_count, NounSet, ScoredSample, Scorer};
pub use tagger::{evaluate_tagger, train_tagger, PerceptronTagger, TaggerEvalReport, TrainOptions};
pub use wordpiece::{train_wordpiece, EncodeOptions, Encoding, Vocabulary, WordPieceConfig};
