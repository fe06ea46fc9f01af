//! Seeded synthetic corpora for demos, benchmarks and tests.
//!
//! Tagged sentences come from a small English-like grammar over Penn Treebank
//! tags. The lexicon mixes a fixed core (including words whose tag depends
//! on context, such as "walks", "that" or "light") with generated open-class
//! words, sampled with a Zipf-like skew so that held-out text contains words
//! never seen in training. Caption records are built to an exact noun count
//! from unambiguous caption nouns.

use crate::corpus::{CaptionRecord, TaggedSentence};
use crate::rng::Xoshiro256StarStar;

type Tagged = Vec<(String, &'static str)>;

struct Lexicon {
    nouns: Vec<String>,
    plurals: Vec<String>,
    adjectives: Vec<String>,
    verb_stems: Vec<String>,
}

const CAPTION_NOUNS: &[(&str, &str)] = &[
    ("dog", "dogs"),
    ("cat", "cats"),
    ("man", "men"),
    ("woman", "women"),
    ("table", "tables"),
    ("ball", "balls"),
    ("tree", "trees"),
    ("car", "cars"),
    ("street", "streets"),
    ("child", "children"),
    ("bird", "birds"),
    ("horse", "horses"),
    ("kitchen", "kitchens"),
    ("plate", "plates"),
    ("window", "windows"),
    ("road", "roads"),
    ("field", "fields"),
    ("train", "trains"),
    ("bus", "buses"),
    ("boat", "boats"),
    ("girl", "girls"),
    ("boy", "boys"),
    ("bench", "benches"),
    ("pizza", "pizzas"),
    ("umbrella", "umbrellas"),
];

const CAPTION_ADJECTIVES: &[&str] = &[
    "big", "small", "red", "brown", "young", "old", "happy", "tall", "green", "wooden", "white",
    "black", "large", "little",
];

const AMBIGUOUS_NOUNS: &[(&str, &str)] = &[
    ("light", "lights"),
    ("run", "runs"),
    ("walk", "walks"),
    ("play", "plays"),
    ("watch", "watches"),
    ("book", "books"),
    ("saw", "saws"),
    ("back", "backs"),
];

const PROPER: &[&str] = &["John", "Mary", "London", "Paris", "Smith", "Anna", "Tokyo", "Peter"];
const DETERMINERS: &[&str] = &["the", "a", "this", "every", "some", "that"];
const PLURAL_DETERMINERS: &[&str] = &["the", "some", "these", "those", "many"];
const PREPOSITIONS: &[&str] = &["on", "in", "near", "with", "under", "behind", "by", "at", "of"];
const ADVERBS: &[&str] = &["quickly", "slowly", "very", "also", "outside", "back", "often"];
const MODALS: &[&str] = &["can", "will", "may", "must"];
const PRONOUNS_SG: &[&str] = &["he", "she", "it"];
const PRONOUNS_PL: &[&str] = &["they", "we"];
const POSSESSIVES: &[&str] = &["his", "her", "their", "its"];
const NUMBERS: &[&str] = &["two", "three", "four", "5", "12", "100"];

/// (stem, 3sg, past, gerund, participle) for the core verbs.
const VERBS: &[(&str, &str, &str, &str, &str)] = &[
    ("run", "runs", "ran", "running", "run"),
    ("sit", "sits", "sat", "sitting", "sat"),
    ("hold", "holds", "held", "holding", "held"),
    ("walk", "walks", "walked", "walking", "walked"),
    ("play", "plays", "played", "playing", "played"),
    ("watch", "watches", "watched", "watching", "watched"),
    ("eat", "eats", "ate", "eating", "eaten"),
    ("see", "sees", "saw", "seeing", "seen"),
    ("look", "looks", "looked", "looking", "looked"),
    ("stand", "stands", "stood", "standing", "stood"),
    ("carry", "carries", "carried", "carrying", "carried"),
    ("ride", "rides", "rode", "riding", "ridden"),
];

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "gr", "pl", "st", "tr"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];

struct Gen {
    rng: Xoshiro256StarStar,
    lex: Lexicon,
}

impl Gen {
    fn new(seed: u64) -> Self {
        // The lexicon depends only on a fixed stream so that corpora drawn
        // with different seeds share vocabulary.
        let mut lex_rng = Xoshiro256StarStar::seed_from_u64(0x5eed_1e71_c0de);
        let stem = |rng: &mut Xoshiro256StarStar| {
            let syllables = 1 + rng.below(2) as usize;
            let mut s = String::new();
            for _ in 0..=syllables {
                s.push_str(ONSETS[rng.below(ONSETS.len() as u64) as usize]);
                s.push_str(VOWELS[rng.below(VOWELS.len() as u64) as usize]);
            }
            s
        };
        let noun_suffixes = ["tion", "ment", "er", "ness", "ity", "ist"];
        let adj_suffixes = ["ous", "ful", "ive", "al", "ish", "less"];
        let mut nouns = Vec::new();
        let mut plurals = Vec::new();
        for i in 0..400 {
            let n = format!("{}{}", stem(&mut lex_rng), noun_suffixes[i % noun_suffixes.len()]);
            plurals.push(format!("{n}s"));
            nouns.push(n);
        }
        let adjectives = (0..200)
            .map(|i| format!("{}{}", stem(&mut lex_rng), adj_suffixes[i % adj_suffixes.len()]))
            .collect();
        let verb_stems = (0..150).map(|_| format!("{}ize", stem(&mut lex_rng))).collect();
        Self {
            rng: Xoshiro256StarStar::seed_from_u64(seed),
            lex: Lexicon {
                nouns,
                plurals,
                adjectives,
                verb_stems,
            },
        }
    }

    fn chance(&mut self, percent: u64) -> bool {
        self.rng.below(100) < percent
    }

    fn pick<'a>(&mut self, items: &'a [&'a str]) -> &'a str {
        items[self.rng.below(items.len() as u64) as usize]
    }

    /// Zipf-like index: small indices are much more frequent.
    fn skewed(&mut self, len: usize) -> usize {
        let u = (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        ((len as f64).powf(u) - 1.0).floor() as usize % len
    }

    /// (singular, plural) noun; common caption nouns dominate.
    fn noun(&mut self) -> (String, String) {
        match self.rng.below(10) {
            0..=4 => {
                let (s, p) = CAPTION_NOUNS[self.skewed(CAPTION_NOUNS.len())];
                (s.into(), p.into())
            }
            5 => {
                let (s, p) = AMBIGUOUS_NOUNS[self.rng.below(AMBIGUOUS_NOUNS.len() as u64) as usize];
                (s.into(), p.into())
            }
            _ => {
                let i = self.skewed(self.lex.nouns.len());
                (self.lex.nouns[i].clone(), self.lex.plurals[i].clone())
            }
        }
    }

    fn adjective(&mut self) -> String {
        match self.rng.below(10) {
            0..=5 => self.pick(CAPTION_ADJECTIVES).into(),
            6 => "light".into(),
            _ => {
                let i = self.skewed(self.lex.adjectives.len());
                self.lex.adjectives[i].clone()
            }
        }
    }

    /// (stem, 3sg, past, gerund, participle)
    fn verb(&mut self) -> [String; 5] {
        if self.chance(70) {
            let v = VERBS[self.skewed(VERBS.len())];
            [v.0, v.1, v.2, v.3, v.4].map(String::from)
        } else {
            let i = self.skewed(self.lex.verb_stems.len());
            let s = &self.lex.verb_stems[i];
            let base = s.trim_end_matches('e');
            [
                s.clone(),
                format!("{s}s"),
                format!("{s}d"),
                format!("{base}ing"),
                format!("{s}d"),
            ]
        }
    }

    fn noun_phrase(&mut self, plural: bool, depth: u32) -> Tagged {
        let mut out: Tagged = Vec::new();
        let r = self.rng.below(100);
        if !plural && r < 8 {
            out.push((self.pick(PROPER).into(), "NNP"));
            return out;
        }
        if plural {
            if r < 15 {
                out.push((self.pick(NUMBERS).into(), "CD"));
            } else if r < 75 {
                out.push((self.pick(PLURAL_DETERMINERS).into(), "DT"));
            }
        } else if r < 20 {
            out.push((self.pick(POSSESSIVES).into(), "PRP$"));
        } else {
            out.push((self.pick(DETERMINERS).into(), "DT"));
        }
        while self.chance(30) && out.len() < 4 {
            if self.chance(15) {
                out.push(("very".into(), "RB"));
            }
            out.push((self.adjective(), "JJ"));
        }
        let (s, p) = self.noun();
        out.push(if plural { (p, "NNS") } else { (s, "NN") });
        if depth < 2 && self.chance(25) {
            out.push((self.pick(PREPOSITIONS).into(), "IN"));
            let pl = self.chance(30);
            out.extend(self.noun_phrase(pl, depth + 1));
        } else if depth == 0 && self.chance(6) {
            let wh = if self.chance(50) { "that" } else { "which" };
            out.push((wh.into(), "WDT"));
            let v = self.verb();
            if plural {
                out.push((v[0].clone(), "VBP"));
            } else {
                out.push((v[1].clone(), "VBZ"));
            }
            let pl = self.chance(30);
            out.extend(self.noun_phrase(pl, depth + 1));
        }
        out
    }

    fn subject(&mut self) -> (Tagged, bool) {
        let plural = self.chance(35);
        if self.chance(20) {
            let p = if plural { self.pick(PRONOUNS_PL) } else { self.pick(PRONOUNS_SG) };
            (vec![(capitalize(p), "PRP")], plural)
        } else {
            let mut np = self.noun_phrase(plural, 0);
            if let Some(first) = np.first_mut() {
                if first.1 != "NNP" {
                    first.0 = capitalize(&first.0);
                }
            }
            (np, plural)
        }
    }

    fn object(&mut self) -> Tagged {
        if self.chance(10) {
            let p = self.pick(&["him", "her", "them", "it"]);
            return vec![(p.into(), "PRP")];
        }
        let pl = self.chance(35);
        self.noun_phrase(pl, 1)
    }

    fn verb_phrase(&mut self, plural: bool) -> Tagged {
        let v = self.verb();
        let mut out: Tagged = Vec::new();
        match self.rng.below(100) {
            0..=29 => out.push(if plural { (v[0].clone(), "VBP") } else { (v[1].clone(), "VBZ") }),
            30..=54 => out.push((v[2].clone(), "VBD")),
            55..=69 => {
                out.push((self.pick(MODALS).into(), "MD"));
                out.push((v[0].clone(), "VB"));
            }
            70..=84 => {
                out.push(if plural { ("are".into(), "VBP") } else { ("is".into(), "VBZ") });
                out.push((v[3].clone(), "VBG"));
            }
            85..=91 => {
                out.push(if plural { ("have".into(), "VBP") } else { ("has".into(), "VBZ") });
                out.push((v[4].clone(), "VBN"));
            }
            _ => {
                out.push(if plural { ("want".into(), "VBP") } else { ("wants".into(), "VBZ") });
                out.push(("to".into(), "TO"));
                out.push((v[0].clone(), "VB"));
            }
        }
        if self.chance(75) {
            out.extend(self.object());
        }
        if self.chance(30) {
            out.push((self.pick(PREPOSITIONS).into(), "IN"));
            out.extend(self.object());
        }
        if self.chance(15) {
            out.push((self.pick(ADVERBS).into(), "RB"));
        }
        out
    }

    fn copular(&mut self, plural: bool) -> Tagged {
        let mut out: Tagged = vec![if plural { ("are".into(), "VBP") } else { ("is".into(), "VBZ") }];
        if self.chance(30) {
            out.push(("very".into(), "RB"));
        }
        out.push((self.adjective(), "JJ"));
        out
    }

    fn clause(&mut self) -> Tagged {
        let (mut s, plural) = self.subject();
        if self.chance(20) {
            s.extend(self.copular(plural));
        } else {
            s.extend(self.verb_phrase(plural));
        }
        s
    }

    fn sentence(&mut self) -> TaggedSentence {
        let mut words = if self.chance(15) {
            self.caption_fragment()
        } else {
            let mut c = self.clause();
            if self.chance(12) {
                c.push((",".into(), ","));
                c.push((self.pick(&["and", "but"]).into(), "CC"));
                let mut more = self.clause();
                if let Some(first) = more.first_mut() {
                    if first.1 != "NNP" {
                        first.0 = first.0.to_lowercase();
                    }
                }
                c.extend(more);
            }
            c
        };
        words.push((".".into(), "."));
        TaggedSentence::from_pairs(words)
    }

    /// Caption-style noun phrase: `a red dog near a tree`.
    fn caption_fragment(&mut self) -> Tagged {
        let n = 1 + self.rng.below(4) as usize;
        let mut out = self.caption_np();
        if self.chance(40) {
            let v = VERBS[self.rng.below(VERBS.len() as u64) as usize];
            out.push((v.3.into(), "VBG"));
        }
        for _ in 1..n {
            if self.chance(25) {
                out.push(("and".into(), "CC"));
            } else {
                out.push((self.pick(PREPOSITIONS).into(), "IN"));
            }
            out.extend(self.caption_np());
        }
        out
    }

    fn caption_np(&mut self) -> Tagged {
        let mut out: Tagged = Vec::new();
        let plural = self.chance(25);
        let (s, p) = CAPTION_NOUNS[self.rng.below(CAPTION_NOUNS.len() as u64) as usize];
        if plural {
            if self.chance(50) {
                out.push((self.pick(NUMBERS).into(), "CD"));
            } else {
                out.push((self.pick(&["the", "some"]).into(), "DT"));
            }
        } else {
            out.push((self.pick(&["a", "the"]).into(), "DT"));
        }
        if self.chance(40) {
            out.push((self.pick(CAPTION_ADJECTIVES).into(), "JJ"));
        }
        out.push(if plural { (p.into(), "NNS") } else { (s.into(), "NN") });
        out
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// `n` tagged sentences drawn from the grammar.
pub fn tagged_corpus(n: usize, seed: u64) -> Vec<TaggedSentence> {
    let mut g = Gen::new(seed);
    (0..n).map(|_| g.sentence()).collect()
}

/// `n` untagged documents (one sentence each, tokens joined by spaces).
pub fn text_documents(n: usize, seed: u64) -> Vec<String> {
    tagged_corpus(n, seed)
        .into_iter()
        .map(|s| s.words().join(" "))
        .collect()
}

/// A caption with exactly `nouns` noun tokens (0 gives a noun-free caption).
fn caption_with_nouns(g: &mut Gen, nouns: u32) -> String {
    if nouns == 0 {
        let subject = g.pick(&["it", "they", "he", "she"]);
        let verb = match subject {
            "they" => "are",
            _ => "is",
        };
        let adj = g.pick(CAPTION_ADJECTIVES);
        return format!("{subject} {verb} very {adj} .");
    }
    let mut words: Vec<String> = Vec::new();
    for i in 0..nouns {
        if i > 0 {
            if g.chance(25) {
                words.push("and".into());
            } else {
                words.push(g.pick(PREPOSITIONS).into());
            }
        }
        words.extend(g.caption_np().into_iter().map(|(w, _)| w));
        if i == 0 && g.chance(40) {
            let v = VERBS[g.rng.below(VERBS.len() as u64) as usize];
            words.push(v.3.into());
        }
    }
    words.push(".".into());
    words.join(" ")
}

/// One caption record per entry of `difficulties`. Each record gets 1-5
/// captions; one has exactly that many nouns and the rest have no more.
pub fn caption_records(difficulties: &[u32], seed: u64) -> Vec<CaptionRecord> {
    let mut g = Gen::new(seed);
    difficulties
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let n = 1 + g.rng.below(5) as usize;
            let hardest = g.rng.below(n as u64) as usize;
            let captions = (0..n)
                .map(|c| {
                    let k = if c == hardest { d } else { g.rng.below(u64::from(d) + 1) as u32 };
                    caption_with_nouns(&mut g, k)
                })
                .collect();
            CaptionRecord {
                sample_id: format!("img-{i:06}"),
                image_ref: format!("images/{i:06}.jpg"),
                captions,
            }
        })
        .collect()
}
