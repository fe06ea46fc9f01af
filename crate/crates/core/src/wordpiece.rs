//! WordPiece vocabulary induction and greedy longest-match encoding.
//!
//! Training starts from single characters (continuations carry `##`) and
//! repeatedly merges the adjacent pair with the highest
//! `freq(pair) / (freq(left) * freq(right))`. Scores are compared exactly by
//! cross-multiplication; equal scores go to the lexicographically smallest
//! `(left, right)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::word_tokenize;
use crate::error::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";
pub const SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;

pub const CONTINUATION: &str = "##";
pub const DEFAULT_VOCAB_SIZE: usize = 30522;
pub const DEFAULT_MIN_PAIR_FREQ: u64 = 2;
pub const DEFAULT_MAX_LEN: usize = 50;
/// Words longer than this (in chars) encode as `[UNK]`.
pub const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordPieceConfig {
    pub target_size: usize,
    pub min_pair_freq: u64,
    pub lowercase: bool,
}

impl Default for WordPieceConfig {
    fn default() -> Self {
        Self {
            target_size: DEFAULT_VOCAB_SIZE,
            min_pair_freq: DEFAULT_MIN_PAIR_FREQ,
            lowercase: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    lowercase: bool,
}

/// Word frequencies after normalization and word tokenization.
pub fn count_words<I, S>(texts: I, lowercase: bool) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = BTreeMap::new();
    for text in texts {
        let text = text.as_ref();
        let normalized;
        let text = if lowercase {
            normalized = text.to_lowercase();
            normalized.as_str()
        } else {
            text
        };
        for w in word_tokenize(text) {
            *counts.entry(w.to_string()).or_insert(0) += 1;
        }
    }
    counts
}

/// One step of induction, exposed for inspection and testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Merge {
    pub left: String,
    pub right: String,
    pub merged: String,
    pub pair_freq: u64,
}

struct Induction {
    symbols: Vec<String>,
    lookup: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    sym_freq: Vec<u64>,
    pair_freq: HashMap<(u32, u32), u64>,
    pair_words: HashMap<(u32, u32), Vec<usize>>,
}

impl Induction {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.lookup.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.lookup.insert(s.to_string(), id);
        self.sym_freq.push(0);
        id
    }

    fn new(words: &BTreeMap<String, u64>) -> Self {
        let mut ind = Induction {
            symbols: Vec::new(),
            lookup: HashMap::new(),
            words: Vec::with_capacity(words.len()),
            sym_freq: Vec::new(),
            pair_freq: HashMap::new(),
            pair_words: HashMap::new(),
        };
        for (w, &c) in words {
            let syms: Vec<u32> = w
                .chars()
                .enumerate()
                .map(|(i, ch)| {
                    if i == 0 {
                        ind.intern(&ch.to_string())
                    } else {
                        ind.intern(&format!("{CONTINUATION}{ch}"))
                    }
                })
                .collect();
            ind.words.push((syms, c));
        }
        for wi in 0..ind.words.len() {
            ind.account(wi, true);
        }
        ind
    }

    /// Add (or remove) word `wi`'s symbol and pair counts.
    fn account(&mut self, wi: usize, add: bool) {
        let (syms, c) = &self.words[wi];
        let c = *c;
        for &s in syms {
            let f = &mut self.sym_freq[s as usize];
            *f = if add { *f + c } else { *f - c };
        }
        for w in syms.windows(2) {
            let key = (w[0], w[1]);
            if add {
                *self.pair_freq.entry(key).or_insert(0) += c;
                self.pair_words.entry(key).or_default().push(wi);
            } else if let Some(f) = self.pair_freq.get_mut(&key) {
                *f -= c;
                if *f == 0 {
                    self.pair_freq.remove(&key);
                }
            }
        }
    }

    fn best_pair(&self, min_freq: u64) -> Option<(u32, u32)> {
        let mut best: Option<((u32, u32), u64, u128)> = None;
        for (&(l, r), &pf) in &self.pair_freq {
            if pf < min_freq {
                continue;
            }
            let denom = u128::from(self.sym_freq[l as usize]) * u128::from(self.sym_freq[r as usize]);
            let better = match best {
                None => true,
                Some(((bl, br), bpf, bdenom)) => {
                    // pf / denom vs bpf / bdenom
                    let lhs = u128::from(pf) * bdenom;
                    let rhs = u128::from(bpf) * denom;
                    lhs > rhs
                        || (lhs == rhs
                            && (&self.symbols[l as usize], &self.symbols[r as usize])
                                < (&self.symbols[bl as usize], &self.symbols[br as usize]))
                }
            };
            if better {
                best = Some(((l, r), pf, denom));
            }
        }
        best.map(|(p, _, _)| p)
    }

    fn apply(&mut self, (l, r): (u32, u32)) -> Merge {
        let pair_freq = self.pair_freq[&(l, r)];
        let left = self.symbols[l as usize].clone();
        let right = self.symbols[r as usize].clone();
        let merged = format!(
            "{left}{}",
            right.strip_prefix(CONTINUATION).unwrap_or(&right)
        );
        let m = self.intern(&merged);
        let mut affected = self.pair_words.remove(&(l, r)).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        for wi in affected {
            if !self.words[wi].0.windows(2).any(|w| w == [l, r]) {
                continue;
            }
            self.account(wi, false);
            let old = std::mem::take(&mut self.words[wi].0);
            let mut new = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if i + 1 < old.len() && old[i] == l && old[i + 1] == r {
                    new.push(m);
                    i += 2;
                } else {
                    new.push(old[i]);
                    i += 1;
                }
            }
            self.words[wi].0 = new;
            self.account(wi, true);
        }
        Merge {
            left,
            right,
            merged,
            pair_freq,
        }
    }
}

/// Induce a vocabulary, returning it with the merge sequence that built it.
pub fn train_wordpiece_with_merges<I, S>(texts: I, config: WordPieceConfig) -> Result<(Vocabulary, Vec<Merge>)>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let words = count_words(texts, config.lowercase);
    if words.is_empty() {
        return Err(Error::invalid("wordpiece training corpus is empty"));
    }
    if config.min_pair_freq == 0 {
        return Err(Error::invalid("min_pair_freq must be positive"));
    }
    let chars: BTreeSet<char> = words.keys().flat_map(|w| w.chars()).collect();
    let minimum = SPECIALS.len() + 2 * chars.len();
    if config.target_size < minimum {
        return Err(Error::invalid(format!(
            "vocabulary size {} is too small; the specials and alphabet need at least {minimum}",
            config.target_size
        )));
    }

    let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    for &c in &chars {
        tokens.push(c.to_string());
    }
    for &c in &chars {
        tokens.push(format!("{CONTINUATION}{c}"));
    }
    let mut vocab = Vocabulary::from_tokens(tokens, config.lowercase)?;

    let mut induction = Induction::new(&words);
    let mut merges = Vec::new();
    while vocab.len() < config.target_size {
        let Some(pair) = induction.best_pair(config.min_pair_freq) else {
            break;
        };
        let merge = induction.apply(pair);
        vocab.push(&merge.merged);
        merges.push(merge);
    }
    Ok((vocab, merges))
}

pub fn train_wordpiece<I, S>(texts: I, config: WordPieceConfig) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    train_wordpiece_with_merges(texts, config).map(|(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    max_len: usize,
    wrap: bool,
}

impl EncodeOptions {
    pub fn new(max_len: usize, wrap: bool) -> Result<Self> {
        let min = if wrap { 2 } else { 1 };
        if max_len < min {
            return Err(Error::invalid(format!(
                "max_len must be at least {min} {} wrapping",
                if wrap { "with" } else { "without" }
            )));
        }
        Ok(Self { max_len, wrap })
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn wrap(&self) -> bool {
        self.wrap
    }
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_LEN,
            wrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub ids: Vec<u32>,
    pub tokens: Vec<String>,
    pub truncated: bool,
}

impl Vocabulary {
    /// Build from an ordered token list; the specials must come first.
    pub fn from_tokens(tokens: Vec<String>, lowercase: bool) -> Result<Self> {
        if tokens.len() < SPECIALS.len() || tokens[..SPECIALS.len()] != SPECIALS {
            return Err(Error::invalid(format!(
                "vocabulary must start with {}",
                SPECIALS.join(" ")
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::malformed(i + 1, format!("invalid token {t:?}")));
            }
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::malformed(i + 1, format!("duplicate token {t:?}")));
            }
        }
        Ok(Self {
            tokens,
            index,
            lowercase,
        })
    }

    fn push(&mut self, token: &str) {
        if !self.index.contains_key(token) {
            self.index.insert(token.to_string(), self.tokens.len() as u32);
            self.tokens.push(token.to_string());
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Greedy longest-match-first pieces of one word, or `None` when some
    /// position has no matching piece.
    pub fn segment_word(&self, word: &str) -> Option<Vec<u32>> {
        let chars: Vec<(usize, char)> = word.char_indices().collect();
        if chars.is_empty() || chars.len() > MAX_WORD_CHARS {
            return None;
        }
        let byte_at = |ci: usize| chars.get(ci).map_or(word.len(), |&(b, _)| b);
        let mut pieces = Vec::new();
        let mut start = 0;
        let mut candidate = String::with_capacity(word.len() + 2);
        while start < chars.len() {
            let mut found = None;
            for end in (start + 1..=chars.len()).rev() {
                candidate.clear();
                if start > 0 {
                    candidate.push_str(CONTINUATION);
                }
                candidate.push_str(&word[byte_at(start)..byte_at(end)]);
                if let Some(id) = self.id(&candidate) {
                    found = Some((id, end));
                    break;
                }
            }
            let (id, end) = found?;
            pieces.push(id);
            start = end;
        }
        Some(pieces)
    }

    pub fn encode(&self, text: &str, opts: EncodeOptions) -> Encoding {
        let normalized;
        let text = if self.lowercase {
            normalized = text.to_lowercase();
            normalized.as_str()
        } else {
            text
        };
        let mut ids = Vec::new();
        if opts.wrap {
            ids.push(CLS_ID);
        }
        let body_max = if opts.wrap { opts.max_len - 2 } else { opts.max_len };
        let mut truncated = false;
        for word in word_tokenize(text) {
            let pieces = self.segment_word(word).unwrap_or_else(|| vec![UNK_ID]);
            let room = body_max + usize::from(opts.wrap) - ids.len();
            if pieces.len() > room {
                ids.extend_from_slice(&pieces[..room]);
                truncated = true;
                break;
            }
            ids.extend(pieces);
        }
        if opts.wrap {
            ids.push(SEP_ID);
        }
        let tokens = ids.iter().map(|&i| self.tokens[i as usize].clone()).collect();
        Encoding {
            ids,
            tokens,
            truncated,
        }
    }

    /// Join pieces back into words: `##` pieces attach to the previous piece,
    /// other pieces start a new space-separated word. Specials are dropped.
    pub fn detokenize<S: AsRef<str>>(&self, tokens: &[S]) -> String {
        let mut out = String::new();
        for t in tokens {
            let t = t.as_ref();
            if SPECIALS.contains(&t) && t != UNK {
                continue;
            }
            match t.strip_prefix(CONTINUATION) {
                Some(rest) if !out.is_empty() => out.push_str(rest),
                _ => {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(t);
                }
            }
        }
        out
    }

    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        for t in &self.tokens {
            out.write_all(t.as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(reader: impl BufRead, lowercase: bool) -> Result<Self> {
        let tokens = reader
            .lines()
            .enumerate()
            .map(|(i, l)| l.map_err(|e| Error::malformed(i + 1, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_tokens(tokens, lowercase)
    }

    pub fn load(path: impl AsRef<Path>, lowercase: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file), lowercase)
    }
}
