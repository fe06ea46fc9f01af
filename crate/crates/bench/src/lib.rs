//! Fixed-seed inputs shared by the benchmarks.

use currikit_core::synthetic;
use currikit_core::{CaptionRecord, PerceptronTagger, ScoredSample, TaggedSentence, TrainOptions};

pub fn tagged(n: usize) -> Vec<TaggedSentence> {
    synthetic::tagged_corpus(n, 42)
}

pub fn model(sentences: usize) -> PerceptronTagger {
    currikit_core::train_tagger(&tagged(sentences), TrainOptions::default())
        .expect("synthetic corpus trains")
        .0
}

pub fn captions(n: usize) -> Vec<CaptionRecord> {
    let difficulties: Vec<u32> = (0..n).map(|i| (i * 2_654_435_761 % 9) as u32).collect();
    synthetic::caption_records(&difficulties, 42)
}

pub fn scored(n: usize, max_difficulty: u32) -> Vec<ScoredSample> {
    (0..n)
        .map(|i| {
            let d = (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) % u64::from(max_difficulty + 1);
            ScoredSample::with_difficulty(format!("s{i:07}"), d as u32)
        })
        .collect()
}

pub fn text(n: usize) -> Vec<String> {
    synthetic::text_documents(n, 42)
}
