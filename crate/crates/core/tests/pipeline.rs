use std::path::Path;

use currikit_core::corpus::{write_captions, write_tagged_corpus};
use currikit_core::pipeline::{files, run_pipeline, PipelineConfig};
use currikit_core::schedule::{BatchManifest, Mode, Ordering, Plan};
use currikit_core::scorer::load_scores;
use currikit_core::synthetic;

fn fixture(dir: &Path, difficulties: &[u32]) {
    let mut buf = Vec::new();
    write_tagged_corpus(&mut buf, &synthetic::tagged_corpus(800, 1)).unwrap();
    std::fs::write(dir.join("tagged.conll"), buf).unwrap();
    let mut buf = Vec::new();
    write_captions(&mut buf, &synthetic::caption_records(difficulties, 2)).unwrap();
    std::fs::write(dir.join("captions.jsonl"), buf).unwrap();
    std::fs::write(dir.join("text.txt"), synthetic::text_documents(300, 3).join("\n")).unwrap();
}

fn difficulties() -> Vec<u32> {
    (0..200).map(|i| (i * 7 % 9) as u32).collect()
}

#[test]
fn config_defaults_and_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "captions = \"c.jsonl\"\ntext = \"/abs/t.txt\"\ntagged = \"sub/t.conll\"\n").unwrap();
    let cfg = PipelineConfig::load(&path).unwrap();
    assert_eq!(cfg.captions, dir.path().join("c.jsonl"));
    assert_eq!(cfg.text, Path::new("/abs/t.txt"));
    assert_eq!(cfg.tagged, dir.path().join("sub/t.conll"));
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.jobs, 1);
    assert_eq!(cfg.tagger.epochs, 5);
    assert_eq!(cfg.schedule.phases, 4);
    assert_eq!(cfg.schedule.epochs_per_phase, 2);
    assert_eq!(cfg.schedule.iid_epochs, 8);
    assert_eq!(cfg.schedule.batch_size, 32);
    assert_eq!(cfg.schedule.holdout, 0.05);
    assert_eq!(cfg.text_schedule.epochs, 20);
    assert_eq!(cfg.text_schedule.batch_size, 256);
    assert!(cfg.tokenizer.is_none());
}

#[test]
fn json_config_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"captions":"c.jsonl","text":"t.txt","tagged":"t.conll","seed":9,"schedule":{"ordering":"descending"}}"#,
    )
    .unwrap();
    let cfg = PipelineConfig::load(&path).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.schedule.ordering, Ordering::Descending);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "captions = \"c\"\ntext = \"t\"\ntagged = \"g\"\n[schedule]\nphase = 3\n").unwrap();
    assert!(PipelineConfig::load(&bad).is_err());
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), &difficulties());
    let cfg_path = dir.path().join("c.toml");
    std::fs::write(
        &cfg_path,
        "captions = \"captions.jsonl\"\ntext = \"text.txt\"\ntagged = \"tagged.conll\"\n[schedule]\nholdout = 0.1\n",
    )
    .unwrap();
    let cfg = PipelineConfig::load(&cfg_path).unwrap();
    let out = dir.path().join("out");
    let result = run_pipeline(&cfg, &out).unwrap();
    assert!(result.warnings.is_empty(), "{:?}", result.warnings);
    for name in [
        files::TAGGER, files::TAGGER_EVAL, files::SCORES, files::BOUNDARIES, files::DISTRIBUTION_CSV,
        files::DISTRIBUTION_SVG, files::SPLIT, files::MANIFEST_TEXT, files::MANIFEST_CAPTION_IID,
        files::MANIFEST_CAPTION_CL, files::PLAN_C_IID, files::PLAN_C_CL, files::PLAN_TC_IID,
        files::PLAN_TC_CL, files::STATS,
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    assert!(!out.join(files::VOCAB).exists());

    let scores = load_scores(out.join(files::SCORES)).unwrap();
    assert_eq!(scores.len(), 200);
    let split: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join(files::SPLIT)).unwrap()).unwrap();
    assert_eq!(split["validation_ids"].as_array().unwrap().len(), 20);

    let cl = BatchManifest::load(out.join(files::MANIFEST_CAPTION_CL)).unwrap();
    let iid = BatchManifest::load(out.join(files::MANIFEST_CAPTION_IID)).unwrap();
    assert_eq!(cl.header.config.mode, Mode::Curriculum);
    assert_eq!(iid.header.config.mode, Mode::Iid);
    let validation: Vec<&str> = split["validation_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for m in [&cl, &iid] {
        assert!(m
            .batches
            .iter()
            .flat_map(|b| &b.samples)
            .all(|s| !validation.contains(&s.as_str())));
    }

    let plan = Plan::from_json(&std::fs::read(out.join(files::PLAN_TC_CL)).unwrap()).unwrap();
    let resolved = plan.resolve(&out).unwrap();
    assert_eq!(resolved[0].1, BatchManifest::load(out.join(files::MANIFEST_TEXT)).unwrap());
    assert_eq!(resolved[1].1, cl);
}

#[test]
fn stage_errors_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), &difficulties());
    std::fs::write(dir.path().join("captions.jsonl"), "{\"sample_id\":\"a\"}\n").unwrap();
    let cfg = PipelineConfig::load({
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "captions = \"captions.jsonl\"\ntext = \"text.txt\"\ntagged = \"tagged.conll\"\n").unwrap();
        p
    })
    .unwrap();
    let err = run_pipeline(&cfg, &dir.path().join("out")).unwrap_err().to_string();
    assert!(err.starts_with("captions: line 1"), "{err}");
}

#[test]
fn budget_mismatch_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), &difficulties());
    let p = dir.path().join("c.toml");
    std::fs::write(
        &p,
        "captions = \"captions.jsonl\"\ntext = \"text.txt\"\ntagged = \"tagged.conll\"\n[schedule]\niid_epochs = 6\n",
    )
    .unwrap();
    let cfg = PipelineConfig::load(&p).unwrap();
    let result = run_pipeline(&cfg, &dir.path().join("out")).unwrap();
    assert_eq!(result.warnings.len(), 1);
    assert!(result.warnings[0].contains("budget"));
}
