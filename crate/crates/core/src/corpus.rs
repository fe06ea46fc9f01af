//! Corpus ingestion: caption records, plain-text documents and
//! tag-annotated sentences, plus the word tokenizer every stage shares.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One image, its captions and an opaque reference to the pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub sample_id: String,
    #[serde(rename = "image")]
    pub image_ref: String,
    pub captions: Vec<String>,
}

impl CaptionRecord {
    fn validate(&self, line: usize) -> Result<()> {
        if self.sample_id.is_empty() {
            return Err(Error::malformed(line, "empty sample_id"));
        }
        if self.captions.is_empty() {
            return Err(Error::malformed(
                line,
                format!("sample {:?} has no captions", self.sample_id),
            ));
        }
        if let Some(i) = self.captions.iter().position(|c| c.trim().is_empty()) {
            return Err(Error::malformed(
                line,
                format!("sample {:?} caption {} is blank", self.sample_id, i),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextDocument {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub word: String,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<TaggedToken>,
}

impl TaggedSentence {
    pub fn from_pairs<W: Into<String>, T: Into<String>>(
        pairs: impl IntoIterator<Item = (W, T)>,
    ) -> Self {
        Self {
            tokens: pairs
                .into_iter()
                .map(|(w, t)| TaggedToken {
                    word: w.into(),
                    tag: t.into(),
                })
                .collect(),
        }
    }

    /// Parse the `word/TAG word/TAG` shorthand. The tag follows the last `/`.
    pub fn from_slash_notation(text: &str) -> Option<Self> {
        let mut tokens = Vec::new();
        for item in text.split_whitespace() {
            let (word, tag) = item.rsplit_once('/')?;
            if word.is_empty() || tag.is_empty() {
                return None;
            }
            tokens.push(TaggedToken {
                word: word.to_string(),
                tag: tag.to_string(),
            });
        }
        (!tokens.is_empty()).then_some(Self { tokens })
    }

    pub fn words(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.word.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The set of part-of-speech symbols an annotated corpus may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tagset {
    tags: BTreeSet<String>,
}

const PTB_TAGS: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP",
    "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB",
    "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB", "#", "$", "''", "``", "(",
    ")", ",", ".", ":", "-LRB-", "-RRB-", "-NONE-", "--",
];

impl Tagset {
    /// Penn Treebank symbols, including the punctuation tags NLTK emits.
    pub fn penn_treebank() -> Self {
        Self::new(PTB_TAGS.iter().copied())
    }

    pub fn new<S: Into<String>>(tags: impl IntoIterator<Item = S>) -> Self {
        Self {
            tags: tags.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(String::as_str)
    }
}

impl Default for Tagset {
    fn default() -> Self {
        Self::penn_treebank()
    }
}

/// Split text into word tokens.
///
/// Letters, digits and apostrophes form maximal runs; any other
/// non-whitespace character is a token on its own. Case is preserved.
pub fn word_tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            start.get_or_insert(i);
            continue;
        }
        if let Some(s) = start.take() {
            tokens.push(&text[s..i]);
        }
        if !c.is_whitespace() {
            tokens.push(&text[i..i + c.len_utf8()]);
        }
    }
    if let Some(s) = start {
        tokens.push(&text[s..]);
    }
    tokens
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

/// Streaming reader over a captions JSONL source.
///
/// Records are validated as they are read; sample ids are tracked so a
/// duplicate is reported at the line where it reappears.
pub struct CaptionReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
}

impl<R: BufRead> CaptionReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
        }
    }
}

impl<R: BufRead> Iterator for CaptionReader<R> {
    type Item = Result<CaptionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::malformed(self.line_no, e.to_string()))),
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse(&line));
        }
    }
}

impl<R: BufRead> CaptionReader<R> {
    fn parse(&mut self, line: &str) -> Result<CaptionRecord> {
        let record: CaptionRecord = serde_json::from_str(line)
            .map_err(|e| Error::malformed(self.line_no, format!("invalid caption record: {e}")))?;
        record.validate(self.line_no)?;
        if !self.seen.insert(record.sample_id.clone()) {
            return Err(Error::DuplicateId {
                line: self.line_no,
                id: record.sample_id,
            });
        }
        Ok(record)
    }
}

pub fn read_captions(reader: impl BufRead) -> Result<Vec<CaptionRecord>> {
    CaptionReader::new(reader).collect()
}

/// Load and validate a captions JSONL file, preserving file order.
pub fn load_captions(path: impl AsRef<Path>) -> Result<Vec<CaptionRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_captions(BufReader::new(file))
}

pub fn write_captions(mut out: impl Write, records: &[CaptionRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaggedCorpus {
    pub sentences: Vec<TaggedSentence>,
    /// Empty sentences (runs of extra blank lines) that were skipped.
    pub skipped_empty: usize,
}

/// Parse a two-column `word<TAB>tag` corpus with blank-line sentence breaks.
pub fn read_tagged_corpus(reader: impl BufRead, tagset: &Tagset) -> Result<TaggedCorpus> {
    let mut corpus = TaggedCorpus::default();
    let mut current = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::malformed(line_no, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            if current.is_empty() {
                corpus.skipped_empty += 1;
            } else {
                corpus.sentences.push(TaggedSentence {
                    tokens: std::mem::take(&mut current),
                });
            }
            continue;
        }
        let (word, tag) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(line_no, "expected word<TAB>tag"))?;
        if word.is_empty() {
            return Err(Error::malformed(line_no, "empty word"));
        }
        if tag.contains('\t') {
            return Err(Error::malformed(line_no, "more than two columns"));
        }
        if !tagset.contains(tag) {
            return Err(Error::UnknownTag {
                line: line_no,
                tag: tag.to_string(),
            });
        }
        current.push(TaggedToken {
            word: word.to_string(),
            tag: tag.to_string(),
        });
    }
    if !current.is_empty() {
        corpus.sentences.push(TaggedSentence { tokens: current });
    }
    Ok(corpus)
}

pub fn load_tagged_corpus(path: impl AsRef<Path>, tagset: &Tagset) -> Result<TaggedCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_tagged_corpus(BufReader::new(file), tagset)
}

pub fn write_tagged_corpus(mut out: impl Write, sentences: &[TaggedSentence]) -> std::io::Result<()> {
    for s in sentences {
        for t in &s.tokens {
            writeln!(out, "{}\t{}", t.word, t.tag)?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// How a plain-text corpus is cut into documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DocSeparator {
    #[default]
    Line,
    BlankLine,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextCorpus {
    pub documents: Vec<TextDocument>,
    /// Whitespace-only lines or blocks that were dropped.
    pub skipped_blank: usize,
}

/// Split UTF-8 bytes into documents. Ids are `line-<n>`, where `n` is the
/// 1-based line on which the document starts.
pub fn parse_text_corpus(bytes: &[u8], sep: DocSeparator) -> Result<TextCorpus> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    let mut corpus = TextCorpus::default();
    match sep {
        DocSeparator::Line => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    corpus.skipped_blank += 1;
                    continue;
                }
                corpus.documents.push(TextDocument {
                    doc_id: format!("line-{}", i + 1),
                    text: line.to_string(),
                });
            }
        }
        DocSeparator::BlankLine => {
            let mut block: Vec<&str> = Vec::new();
            let mut start = 0;
            let flush = |block: &mut Vec<&str>, start: usize, corpus: &mut TextCorpus| {
                if !block.is_empty() {
                    corpus.documents.push(TextDocument {
                        doc_id: format!("line-{start}"),
                        text: block.join("\n"),
                    });
                    block.clear();
                }
            };
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    flush(&mut block, start, &mut corpus);
                    continue;
                }
                if block.is_empty() {
                    start = i + 1;
                }
                block.push(line);
            }
            flush(&mut block, start, &mut corpus);
        }
    }
    Ok(corpus)
}

pub fn load_text_corpus(path: impl AsRef<Path>, sep: DocSeparator) -> Result<TextCorpus> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    parse_text_corpus(&bytes, sep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            word_tokenize("It's a fire truck."),
            ["It's", "a", "fire", "truck", "."]
        );
        assert!(word_tokenize("").is_empty());
        assert_eq!(
            word_tokenize("a brown cat, sitting"),
            ["a", "brown", "cat", ",", "sitting"]
        );
        assert_eq!(word_tokenize("x--y"), ["x", "-", "-", "y"]);
        assert_eq!(word_tokenize("  \t\n"), Vec::<&str>::new());
        assert_eq!(word_tokenize("café 42km"), ["café", "42km"]);
    }

    #[test]
    fn load_single_caption() {
        let src = r#"{"sample_id":"a","image":"img/a.jpg","captions":["a dog"]}"#;
        let recs = read_captions(src.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].captions, ["a dog"]);
        assert_eq!(recs[0].image_ref, "img/a.jpg");
    }

    #[test]
    fn duplicate_sample_id_is_reported_with_line() {
        let src = concat!(
            r#"{"sample_id":"a","image":"x","captions":["a dog"]}"#,
            "\n",
            r#"{"sample_id":"a","image":"y","captions":["a cat"]}"#,
            "\n"
        );
        let err = read_captions(src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate sample_id at line 2"), "{err}");
        assert!(err.to_string().contains("\"a\""));
    }

    #[test]
    fn caption_validation_errors() {
        let empty = r#"{"sample_id":"a","image":"x","captions":[]}"#;
        assert!(read_captions(empty.as_bytes()).is_err());
        let blank = r#"{"sample_id":"a","image":"x","captions":["ok","   "]}"#;
        assert!(read_captions(blank.as_bytes()).is_err());
        let bad = "{\"sample_id\":\"a\",\"image\":\"x\",\"captions\":[\"ok\"]}\n{oops\n";
        match read_captions(bad.as_bytes()).unwrap_err() {
            Error::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let wrong_key = r#"{"id":"a","image":"x","captions":["ok"]}"#;
        assert!(read_captions(wrong_key.as_bytes()).is_err());
    }

    #[test]
    fn tagged_corpus_parsing() {
        let ts = Tagset::penn_treebank();
        let c = read_tagged_corpus("the\tDT\ndog\tNN\n\n".as_bytes(), &ts).unwrap();
        assert_eq!(c.sentences, [TaggedSentence::from_pairs([("the", "DT"), ("dog", "NN")])]);
        assert_eq!(c.skipped_empty, 0);

        let err = read_tagged_corpus("dog\tZZ\n\n".as_bytes(), &ts).unwrap_err();
        assert!(err.to_string().contains("unknown tag ZZ"), "{err}");

        let two = read_tagged_corpus("a\tDT\n\ndog\tNN\n".as_bytes(), &ts).unwrap();
        assert_eq!(two.sentences.len(), 2);

        let gaps = read_tagged_corpus("a\tDT\n\n\n\ndog\tNN\n\n".as_bytes(), &ts).unwrap();
        assert_eq!(gaps.sentences.len(), 2);
        assert_eq!(gaps.skipped_empty, 2);

        assert!(read_tagged_corpus("nodelimiter\n".as_bytes(), &ts).is_err());
    }

    #[test]
    fn text_corpus_modes() {
        let c = parse_text_corpus(b"one\ntwo\nthree\n", DocSeparator::Line).unwrap();
        assert_eq!(c.documents.len(), 3);
        assert_eq!(c.documents[2].doc_id, "line-3");

        let c = parse_text_corpus(b"one\n   \nthree", DocSeparator::Line).unwrap();
        assert_eq!(c.documents.len(), 2);
        assert_eq!(c.skipped_blank, 1);

        let c = parse_text_corpus(b"", DocSeparator::Line).unwrap();
        assert!(c.documents.is_empty());

        let c = parse_text_corpus(b"a\nb\n\n\nc\n", DocSeparator::BlankLine).unwrap();
        assert_eq!(c.documents.len(), 2);
        assert_eq!(c.documents[0].text, "a\nb");
        assert_eq!(c.documents[1].doc_id, "line-5");

        match parse_text_corpus(b"ok\n\xffbad", DocSeparator::Line).unwrap_err() {
            Error::InvalidUtf8 { offset } => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slash_notation() {
        let s = TaggedSentence::from_slash_notation("the/DT dog/NN").unwrap();
        assert_eq!(s.words(), ["the", "dog"]);
        assert!(TaggedSentence::from_slash_notation("bad").is_none());
    }

    fn record() -> impl Strategy<Value = CaptionRecord> {
        (
            "[a-z0-9]{1,8}",
            "[ -~]{0,12}",
            prop::collection::vec("[a-zA-Z]{1,6}( [a-zA-Z\"\\\\]{1,6}){0,4}", 1..4),
        )
            .prop_map(|(sample_id, image_ref, captions)| CaptionRecord {
                sample_id,
                image_ref,
                captions,
            })
    }

    proptest! {
        #[test]
        fn caption_jsonl_round_trip(records in prop::collection::vec(record(), 0..20)) {
            let mut seen = HashSet::new();
            let records: Vec<_> = records.into_iter().filter(|r| seen.insert(r.sample_id.clone())).collect();
            let mut buf = Vec::new();
            write_captions(&mut buf, &records).unwrap();
            prop_assert_eq!(read_captions(buf.as_slice()).unwrap(), records);
        }

        #[test]
        fn tokenize_concatenation(a in "\\PC{0,30}", b in "\\PC{0,30}") {
            let joined = format!("{a} {b}");
            let mut expected = word_tokenize(&a);
            expected.extend(word_tokenize(&b));
            prop_assert_eq!(word_tokenize(&joined), expected);
        }

        #[test]
        fn tokens_are_never_empty_or_spaced(s in "\\PC{0,60}") {
            for t in word_tokenize(&s) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
        }
    }
}
