//! Greedy averaged-perceptron part-of-speech tagger.
//!
//! Tokens are tagged left to right. Each token activates a small set of
//! string features (the lowercased word, its 1-3 character suffixes,
//! word-shape flags, the neighbouring words and the previously predicted
//! tag); every feature carries one weight per tag and the highest total wins,
//! ties going to the tag that sorts first.
//!
//! Training runs the same greedy decoder. On a mistake the active features
//! gain +1 on the gold tag and -1 on the predicted one. The stored model holds
//! weights averaged over every token step, which is what makes the perceptron
//! usable after only a handful of epochs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::TaggedSentence;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprinter;
use crate::rng::{epoch_stream, Xoshiro256StarStar, HOLDOUT_STREAM};
use crate::schedule::holdout_count;

pub const MODEL_HEADER: &str = "currikit-tagger v1";

const START: &str = "-START-";
const END: &str = "-END-";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerMetadata {
    pub epochs: u32,
    pub seed: u64,
    pub corpus_fingerprint: String,
}

/// A trained tagger. Immutable once built; `tag` is safe to call from many
/// threads at once.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronTagger {
    tags: Vec<String>,
    weights: HashMap<String, Vec<(u16, f64)>>,
    metadata: TaggerMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerEvalReport {
    pub token_accuracy: f64,
    pub correct: usize,
    pub sentence_count: usize,
    pub token_count: usize,
    /// Most frequent `(gold, predicted, count)` confusions.
    pub confusion_top: Vec<(String, String, usize)>,
    /// Set when the report was computed on the training sentences.
    pub resubstitution: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: u32,
    pub seed: u64,
    pub heldout_fraction: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 5,
            seed: 0,
            heldout_fraction: 0.1,
        }
    }
}

const CONFUSION_TOP: usize = 10;

/// Feature strings for token `i`, given lowercased context and the previous
/// predicted tag.
fn features(raw: &str, context: &[String], i: usize, prev_tag: &str) -> Vec<String> {
    let word = &context[i + 1];
    let mut f = Vec::with_capacity(12);
    f.push("bias".to_string());
    f.push(format!("w={word}"));
    let chars: Vec<char> = word.chars().collect();
    for n in 1..=3 {
        if chars.len() >= n {
            let suffix: String = chars[chars.len() - n..].iter().collect();
            f.push(format!("s{n}={suffix}"));
        }
    }
    let mut first = raw.chars();
    if first.next().is_some_and(char::is_uppercase) {
        f.push("shape=cap".to_string());
        if raw.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase) {
            f.push("shape=allcaps".to_string());
        }
    }
    if raw.chars().any(|c| c.is_ascii_digit()) {
        f.push("shape=digit".to_string());
    }
    if raw.contains('-') {
        f.push("shape=hyphen".to_string());
    }
    f.push(format!("pt={prev_tag}"));
    f.push(format!("pw={}", context[i]));
    f.push(format!("nw={}", context[i + 2]));
    f
}

fn lowered_context<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    let mut ctx = Vec::with_capacity(words.len() + 2);
    ctx.push(START.to_string());
    ctx.extend(words.iter().map(|w| w.as_ref().to_lowercase()));
    ctx.push(END.to_string());
    ctx
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl PerceptronTagger {
    pub fn tagset(&self) -> &[String] {
        &self.tags
    }

    pub fn metadata(&self) -> &TaggerMetadata {
        &self.metadata
    }

    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    /// Tag a tokenized sentence. Output length always equals input length.
    pub fn tag<S: AsRef<str>>(&self, words: &[S]) -> Vec<&str> {
        if self.tags.is_empty() {
            return Vec::new();
        }
        let context = lowered_context(words);
        let mut out: Vec<&str> = Vec::with_capacity(words.len());
        let mut scores = vec![0.0; self.tags.len()];
        let mut prev = START;
        for (i, w) in words.iter().enumerate() {
            scores.iter_mut().for_each(|s| *s = 0.0);
            for feat in features(w.as_ref(), &context, i, prev) {
                if let Some(ws) = self.weights.get(&feat) {
                    for &(t, v) in ws {
                        scores[t as usize] += v;
                    }
                }
            }
            let best = self.tags[argmax(&scores)].as_str();
            out.push(best);
            prev = best;
        }
        out
    }

    /// Serialize to the line-oriented model format.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "{MODEL_HEADER}");
        let _ = writeln!(text, "#tags\t{}", self.tags.join("\t"));
        let _ = writeln!(text, "#epochs\t{}", self.metadata.epochs);
        let _ = writeln!(text, "#seed\t{}", self.metadata.seed);
        let _ = writeln!(text, "#corpus\t{}", self.metadata.corpus_fingerprint);
        let mut lines: Vec<(&str, &str, f64)> = Vec::new();
        for (feat, ws) in &self.weights {
            if feat.contains(['\t', '\n', '\r']) {
                return Err(Error::invalid(format!(
                    "feature {feat:?} contains a field separator"
                )));
            }
            for &(t, v) in ws {
                lines.push((feat, &self.tags[t as usize], v));
            }
        }
        lines.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (feat, tag, v) in lines {
            let _ = writeln!(text, "{feat}\t{tag}\t{v:.16e}");
        }
        out.write_all(text.as_bytes())
            .map_err(|e| Error::io("<model output>", e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut next_line = |expect: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((i, Err(e))) => Err(Error::malformed(i + 1, e.to_string())),
                None => Err(Error::malformed(0, format!("missing {expect}"))),
            }
        };
        let (_, header) = next_line("header")?;
        if header != MODEL_HEADER {
            return Err(Error::malformed(1, format!("expected header {MODEL_HEADER:?}")));
        }
        let mut meta_field = |name: &str| -> Result<(usize, Vec<String>)> {
            let (n, l) = next_line(name)?;
            let mut parts = l.split('\t');
            if parts.next() != Some(name) {
                return Err(Error::malformed(n, format!("expected {name} line")));
            }
            Ok((n, parts.map(str::to_string).collect()))
        };
        let (_, tags) = meta_field("#tags")?;
        let scalar = |(n, v): (usize, Vec<String>)| -> Result<(usize, String)> {
            match v.as_slice() {
                [x] => Ok((n, x.clone())),
                _ => Err(Error::malformed(n, "expected one value")),
            }
        };
        let (n, epochs) = scalar(meta_field("#epochs")?)?;
        let epochs = epochs
            .parse()
            .map_err(|_| Error::malformed(n, "bad epoch count"))?;
        let (n, seed) = scalar(meta_field("#seed")?)?;
        let seed = seed.parse().map_err(|_| Error::malformed(n, "bad seed"))?;
        let (_, corpus_fingerprint) = scalar(meta_field("#corpus")?)?;

        let index: HashMap<&str, u16> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u16))
            .collect();
        if index.len() != tags.len() {
            return Err(Error::malformed(2, "duplicate tag in tagset"));
        }
        let mut weights: HashMap<String, Vec<(u16, f64)>> = HashMap::new();
        for (i, line) in lines {
            let n = i + 1;
            let line = line.map_err(|e| Error::malformed(n, e.to_string()))?;
            let mut parts = line.split('\t');
            let (Some(feat), Some(tag), Some(v), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::malformed(n, "expected feature<TAB>tag<TAB>weight"));
            };
            let &t = index
                .get(tag)
                .ok_or_else(|| Error::malformed(n, format!("tag {tag} not in tagset")))?;
            let v: f64 = v.parse().map_err(|_| Error::malformed(n, "bad weight"))?;
            if !v.is_finite() {
                return Err(Error::malformed(n, "non-finite weight"));
            }
            weights.entry(feat.to_string()).or_default().push((t, v));
        }
        for ws in weights.values_mut() {
            ws.sort_by_key(|&(t, _)| t);
        }
        Ok(Self {
            tags,
            weights,
            metadata: TaggerMetadata {
                epochs,
                seed,
                corpus_fingerprint,
            },
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Param {
    weight: f64,
    total: f64,
    stamp: u64,
}

/// Weight table under training, with the bookkeeping for lazy averaging.
struct Trainer {
    n_tags: usize,
    params: HashMap<String, Vec<(u16, Param)>>,
    step: u64,
}

impl Trainer {
    fn new(n_tags: usize) -> Self {
        Self {
            n_tags,
            params: HashMap::new(),
            step: 0,
        }
    }

    fn predict(&self, feats: &[String], scores: &mut [f64]) -> usize {
        scores.iter_mut().for_each(|s| *s = 0.0);
        for f in feats {
            if let Some(ps) = self.params.get(f) {
                for (t, p) in ps {
                    scores[*t as usize] += p.weight;
                }
            }
        }
        argmax(scores)
    }

    fn bump(&mut self, feat: &str, tag: u16, delta: f64) {
        let step = self.step;
        let slot = match self.params.get_mut(feat) {
            Some(s) => s,
            None => self.params.entry(feat.to_string()).or_default(),
        };
        let p = match slot.iter().position(|(t, _)| *t == tag) {
            Some(i) => &mut slot[i].1,
            None => {
                slot.push((tag, Param::default()));
                &mut slot.last_mut().unwrap().1
            }
        };
        p.total += (step - p.stamp) as f64 * p.weight;
        p.stamp = step;
        p.weight += delta;
    }

    fn update(&mut self, feats: &[String], gold: u16, guess: u16) {
        if gold != guess {
            for f in feats {
                self.bump(f, gold, 1.0);
                self.bump(f, guess, -1.0);
            }
        }
        self.step += 1;
    }

    fn averaged(self) -> HashMap<String, Vec<(u16, f64)>> {
        let step = self.step.max(1);
        let mut out = HashMap::with_capacity(self.params.len());
        for (feat, ps) in self.params {
            let mut ws: Vec<(u16, f64)> = ps
                .into_iter()
                .map(|(t, p)| {
                    let total = p.total + (self.step - p.stamp) as f64 * p.weight;
                    (t, total / step as f64)
                })
                .filter(|&(_, v)| v != 0.0)
                .collect();
            if !ws.is_empty() {
                ws.sort_by_key(|&(t, _)| t);
                out.insert(feat, ws);
            }
        }
        debug_assert!(out.values().flatten().all(|&(t, _)| (t as usize) < self.n_tags));
        out
    }
}

fn corpus_fingerprint(sentences: &[&TaggedSentence]) -> String {
    let mut f = Fingerprinter::new();
    for s in sentences {
        for t in &s.tokens {
            f.field(&t.word).field(&t.tag);
        }
        f.field("");
    }
    f.finish()
}

/// Train on `corpus`, holding out a seeded fraction of sentences for the
/// returned report.
pub fn train_tagger(
    corpus: &[TaggedSentence],
    opts: TrainOptions,
) -> Result<(PerceptronTagger, TaggerEvalReport)> {
    if opts.epochs == 0 {
        return Err(Error::invalid("epochs must be positive"));
    }
    if !(0.0..1.0).contains(&opts.heldout_fraction) {
        return Err(Error::invalid(format!(
            "heldout fraction {} outside [0, 1)",
            opts.heldout_fraction
        )));
    }
    if corpus.iter().all(TaggedSentence::is_empty) {
        return Err(Error::invalid("tagger training corpus is empty"));
    }
    let (train_idx, held_idx) = if opts.heldout_fraction > 0.0 {
        if corpus.len() < 2 {
            return Err(Error::invalid(
                "a held-out split needs at least 2 sentences",
            ));
        }
        let held = holdout_count(opts.heldout_fraction, corpus.len()).clamp(1, corpus.len() - 1);
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        Xoshiro256StarStar::for_stream(opts.seed, HOLDOUT_STREAM).shuffle(&mut order);
        let (h, t) = order.split_at(held);
        let (mut h, mut t) = (h.to_vec(), t.to_vec());
        h.sort_unstable();
        t.sort_unstable();
        (t, h)
    } else {
        ((0..corpus.len()).collect(), Vec::new())
    };

    let train: Vec<&TaggedSentence> = train_idx.iter().map(|&i| &corpus[i]).collect();
    let model = fit(&train, opts.epochs, opts.seed);

    let report = if held_idx.is_empty() {
        let mut r = evaluate_refs(&model, &train)?;
        r.resubstitution = true;
        r
    } else {
        let held: Vec<&TaggedSentence> = held_idx.iter().map(|&i| &corpus[i]).collect();
        evaluate_refs(&model, &held)?
    };
    Ok((model, report))
}

fn fit(train: &[&TaggedSentence], epochs: u32, seed: u64) -> PerceptronTagger {
    let tags: Vec<String> = train
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.tag.clone()))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let tag_index: HashMap<&str, u16> = tags
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u16))
        .collect();

    let mut trainer = Trainer::new(tags.len());
    let mut scores = vec![0.0; tags.len()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=epochs {
        Xoshiro256StarStar::for_stream(seed, epoch_stream(0, epoch)).shuffle(&mut order);
        for &si in &order {
            let sentence = train[si];
            let words = sentence.words();
            let context = lowered_context(&words);
            let mut prev = START;
            for (i, tok) in sentence.tokens.iter().enumerate() {
                let feats = features(&tok.word, &context, i, prev);
                let guess = trainer.predict(&feats, &mut scores) as u16;
                trainer.update(&feats, tag_index[tok.tag.as_str()], guess);
                prev = &tags[guess as usize];
            }
        }
    }

    PerceptronTagger {
        weights: trainer.averaged(),
        metadata: TaggerMetadata {
            epochs,
            seed,
            corpus_fingerprint: corpus_fingerprint(train),
        },
        tags,
    }
}

/// Token-level accuracy of `model` against gold tags.
pub fn evaluate_tagger(
    model: &PerceptronTagger,
    corpus: &[TaggedSentence],
) -> Result<TaggerEvalReport> {
    let refs: Vec<&TaggedSentence> = corpus.iter().collect();
    evaluate_refs(model, &refs)
}

fn evaluate_refs(model: &PerceptronTagger, corpus: &[&TaggedSentence]) -> Result<TaggerEvalReport> {
    let token_count: usize = corpus.iter().map(|s| s.len()).sum();
    if token_count == 0 {
        return Err(Error::invalid("evaluation corpus is empty"));
    }
    let mut correct = 0;
    let mut confusion: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for s in corpus {
        let predicted = model.tag(&s.words());
        for (gold, pred) in s.tokens.iter().zip(predicted) {
            if gold.tag == pred {
                correct += 1;
            } else {
                *confusion.entry((gold.tag.as_str(), pred)).or_default() += 1;
            }
        }
    }
    let mut confusion_top: Vec<(String, String, usize)> = confusion
        .into_iter()
        .map(|((g, p), c)| (g.to_string(), p.to_string(), c))
        .collect();
    confusion_top.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| (&a.0, &a.1).cmp(&(&b.0, &b.1))));
    confusion_top.truncate(CONFUSION_TOP);
    Ok(TaggerEvalReport {
        token_accuracy: correct as f64 / token_count as f64,
        correct,
        sentence_count: corpus.len(),
        token_count,
        confusion_top,
        resubstitution: false,
    })
}
