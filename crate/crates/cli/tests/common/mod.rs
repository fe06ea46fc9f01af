#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use currikit_core::corpus::{write_captions, write_tagged_corpus};
use currikit_core::synthetic;

pub fn currikit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_currikit"))
        .args(args)
        .env_remove("CURRIKIT_SEED")
        .output()
        .expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// Last stderr line, which is the JSON run log.
pub fn run_log(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("run log present");
    serde_json::from_str(line).expect("run log is JSON")
}

pub fn assert_ok(out: &Output) {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

pub struct Fixture {
    pub tagged: PathBuf,
    pub captions: PathBuf,
    pub text: PathBuf,
    pub config: PathBuf,
}

/// Difficulty counts whose quartiles fall at 2, 3, 5 and 8.
pub fn quartile_fixture_difficulties() -> Vec<u32> {
    let counts = [(1, 10), (2, 20), (3, 25), (4, 15), (5, 10), (6, 10), (8, 10)];
    counts
        .iter()
        .flat_map(|&(d, c)| std::iter::repeat_n(d, c))
        .collect()
}

/// Write a tagged corpus, captions built to `difficulties`, a text corpus and
/// a pipeline config into `dir`.
pub fn write_fixture(dir: &Path, difficulties: &[u32], text_docs: usize) -> Fixture {
    let tagged = dir.join("tagged.conll");
    let captions = dir.join("captions.jsonl");
    let text = dir.join("text.txt");
    let config = dir.join("pipeline.toml");

    let mut buf = Vec::new();
    write_tagged_corpus(&mut buf, &synthetic::tagged_corpus(2_000, 11)).unwrap();
    std::fs::write(&tagged, buf).unwrap();

    let mut buf = Vec::new();
    write_captions(&mut buf, &synthetic::caption_records(difficulties, 12)).unwrap();
    std::fs::write(&captions, buf).unwrap();

    let docs = synthetic::text_documents(text_docs, 13).join("\n");
    std::fs::write(&text, docs + "\n").unwrap();

    std::fs::write(
        &config,
        "captions = \"captions.jsonl\"\n\
         text = \"text.txt\"\n\
         tagged = \"tagged.conll\"\n\
         seed = 0\n\
         \n\
         [tokenizer]\n\
         vocab_size = 400\n",
    )
    .unwrap();

    Fixture {
        tagged,
        captions,
        text,
        config,
    }
}

/// Every file in `dir`, sorted by name, with its bytes.
pub fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}
