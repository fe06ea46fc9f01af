//! Difficulty scoring: noun tokens per caption, maximum over an image's
//! captions.

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{word_tokenize, CaptionRecord};
use crate::error::{Error, Result};
use crate::tagger::PerceptronTagger;

pub const DEFAULT_NOUN_TAGS: [&str; 4] = ["NN", "NNS", "NNP", "NNPS"];

/// Tags counted as nouns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounSet(BTreeSet<String>);

impl NounSet {
    pub fn new<S: Into<String>>(tags: impl IntoIterator<Item = S>) -> Self {
        Self(tags.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.0.contains(tag)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for NounSet {
    fn default() -> Self {
        Self::new(DEFAULT_NOUN_TAGS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub sample_id: String,
    pub difficulty: u32,
    pub caption_scores: Vec<u32>,
}

impl ScoredSample {
    /// Build from per-caption scores; `difficulty` is their maximum.
    pub fn from_caption_scores(sample_id: impl Into<String>, caption_scores: Vec<u32>) -> Self {
        Self {
            sample_id: sample_id.into(),
            difficulty: caption_scores.iter().copied().max().unwrap_or(0),
            caption_scores,
        }
    }

    /// A sample with a single known difficulty.
    pub fn with_difficulty(sample_id: impl Into<String>, difficulty: u32) -> Self {
        Self::from_caption_scores(sample_id, vec![difficulty])
    }
}

pub fn noun_count<S: AsRef<str>>(tags: &[S], nouns: &NounSet) -> u32 {
    tags.iter().filter(|t| nouns.contains(t.as_ref())).count() as u32
}

pub struct Scorer<'a> {
    model: &'a PerceptronTagger,
    nouns: NounSet,
}

impl<'a> Scorer<'a> {
    pub fn new(model: &'a PerceptronTagger) -> Self {
        Self {
            model,
            nouns: NounSet::default(),
        }
    }

    pub fn with_nouns(model: &'a PerceptronTagger, nouns: NounSet) -> Self {
        Self { model, nouns }
    }

    pub fn score_caption(&self, caption: &str) -> u32 {
        let words = word_tokenize(caption);
        noun_count(&self.model.tag(&words), &self.nouns)
    }

    pub fn score_record(&self, record: &CaptionRecord) -> ScoredSample {
        let scores = record
            .captions
            .iter()
            .map(|c| self.score_caption(c))
            .collect();
        ScoredSample::from_caption_scores(record.sample_id.clone(), scores)
    }

    /// Score every record on `parallelism` threads. Output order matches input
    /// order whatever the thread count.
    pub fn score_dataset(
        &self,
        records: &[CaptionRecord],
        parallelism: usize,
    ) -> Result<Vec<ScoredSample>> {
        if parallelism == 0 {
            return Err(Error::invalid("parallelism must be positive"));
        }
        if parallelism == 1 {
            return Ok(records.iter().map(|r| self.score_record(r)).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        Ok(pool.install(|| records.par_iter().map(|r| self.score_record(r)).collect()))
    }
}

pub fn write_scores(mut out: impl Write, samples: &[ScoredSample]) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse scores JSONL, checking that each difficulty is the maximum of its
/// caption scores and that ids are unique.
pub fn read_scores(reader: impl BufRead) -> Result<Vec<ScoredSample>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::malformed(n, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let s: ScoredSample = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(n, format!("invalid score record: {e}")))?;
        if s.caption_scores.iter().copied().max() != Some(s.difficulty) {
            return Err(Error::malformed(
                n,
                format!("difficulty of {:?} is not the maximum caption score", s.sample_id),
            ));
        }
        if !seen.insert(s.sample_id.clone()) {
            return Err(Error::DuplicateId {
                line: n,
                id: s.sample_id,
            });
        }
        out.push(s);
    }
    Ok(out)
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<ScoredSample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TaggedSentence;
    use crate::tagger::{train_tagger, TrainOptions};

    fn toy_model() -> PerceptronTagger {
        let a = TaggedSentence::from_slash_notation("the/DT dog/NN runs/VBZ").unwrap();
        let b = TaggedSentence::from_slash_notation("the/DT cat/NN sleeps/VBZ").unwrap();
        let corpus: Vec<_> = (0..10).flat_map(|_| [a.clone(), b.clone()]).collect();
        train_tagger(&corpus, TrainOptions::default()).unwrap().0
    }

    fn toy_model_with_preposition() -> PerceptronTagger {
        let a = TaggedSentence::from_slash_notation("the/DT dog/NN runs/VBZ").unwrap();
        let b = TaggedSentence::from_slash_notation("the/DT cat/NN sleeps/VBZ").unwrap();
        let c = TaggedSentence::from_slash_notation("the/DT dog/NN near/IN the/DT cat/NN").unwrap();
        let corpus: Vec<_> = (0..10).flat_map(|_| [a.clone(), b.clone(), c.clone()]).collect();
        train_tagger(&corpus, TrainOptions::default()).unwrap().0
    }

    fn record(id: &str, captions: &[&str]) -> CaptionRecord {
        CaptionRecord {
            sample_id: id.into(),
            image_ref: format!("{id}.jpg"),
            captions: captions.iter().map(|c| c.to_string()).collect(),
        }
    }

    #[test]
    fn noun_count_examples() {
        let nouns = NounSet::default();
        assert_eq!(noun_count(&["DT", "NN", "VBZ", "IN", "DT", "NN"], &nouns), 2);
        assert_eq!(noun_count(&["DT", "JJ", "VBZ"], &nouns), 0);
        assert_eq!(noun_count(&["NNP", "NNS", "NN", "NNPS"], &nouns), 4);
        assert_eq!(noun_count(&["NNP", "NN"], &NounSet::new(["NN"])), 1);
    }

    #[test]
    fn caption_scores_under_toy_model() {
        let model = toy_model();
        let scorer = Scorer::new(&model);
        assert_eq!(scorer.score_caption(""), 0);
        assert_eq!(scorer.score_caption("the dog"), 1);
        assert_eq!(scorer.score_caption("the the the"), 0);
    }

    #[test]
    fn record_takes_maximum() {
        let model = toy_model_with_preposition();
        let scorer = Scorer::new(&model);
        let s = scorer.score_record(&record("x", &["the dog", "the dog near the cat"]));
        assert_eq!(s.caption_scores, [1, 2]);
        assert_eq!(s.difficulty, 2);
        assert_eq!(ScoredSample::from_caption_scores("y", vec![1, 2]).difficulty, 2);
        assert_eq!(ScoredSample::from_caption_scores("z", vec![3]).difficulty, 3);
    }

    #[test]
    fn two_sentence_model_misses_sentence_final_noun() {
        let model = toy_model();
        let words = ["the", "dog", "near", "the", "cat"];
        assert_eq!(model.tag(&words), ["DT", "NN", "VBZ", "DT", "VBZ"]);
        let s = Scorer::new(&model).score_record(&record("x", &["the dog", "the dog near the cat"]));
        assert_eq!(s.caption_scores, [1, 1]);
    }

    #[test]
    fn dataset_order_and_parallel_determinism() {
        let model = toy_model();
        let scorer = Scorer::new(&model);
        assert!(scorer.score_dataset(&[], 4).unwrap().is_empty());
        let records = vec![
            record("a", &["the"]),
            record("b", &["the dog near the cat"]),
            record("c", &["the dog", "dog cat dog cat dog"]),
        ];
        let serial = scorer.score_dataset(&records, 1).unwrap();
        let difficulties: Vec<u32> = serial.iter().map(|s| s.difficulty).collect();
        let independent: Vec<u32> = records.iter().map(|r| scorer.score_record(r).difficulty).collect();
        assert_eq!(difficulties, independent);
        assert_eq!(serial.iter().map(|s| s.sample_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(scorer.score_dataset(&records, 8).unwrap(), serial);
        assert!(scorer.score_dataset(&records, 0).is_err());
    }

    #[test]
    fn scores_file_validation() {
        let good = "{\"sample_id\":\"a\",\"difficulty\":2,\"caption_scores\":[1,2]}\n";
        assert_eq!(read_scores(good.as_bytes()).unwrap().len(), 1);
        let wrong_max = "{\"sample_id\":\"a\",\"difficulty\":1,\"caption_scores\":[1,2]}\n";
        assert!(read_scores(wrong_max.as_bytes()).is_err());
        let bad = format!("{good}not json\n");
        match read_scores(bad.as_bytes()).unwrap_err() {
            Error::Malformed { line, .. } => assert_eq!(line, 2),
            e => panic!("{e:?}"),
        }
        let dup = format!("{good}{good}");
        assert!(read_scores(dup.as_bytes()).is_err());
    }
}
