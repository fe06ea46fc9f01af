//! Batch manifests: the fully materialized order in which a trainer visits
//! samples.
//!
//! A curriculum manifest walks the nested phase pools, spending a fixed
//! number of epochs on each; every epoch is one seeded Fisher–Yates pass over
//! the current pool, cut into batches with the short batch kept. An i.i.d.
//! manifest does the same over the whole dataset with phase 0. Each epoch
//! draws from its own PRNG stream (see [`crate::rng`]), so epochs can be
//! generated independently and the result does not depend on thread count.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curriculum::PhaseBoundaries;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprinter;
use crate::rng::{epoch_stream, Xoshiro256StarStar, HOLDOUT_STREAM};
use crate::scorer::ScoredSample;

pub const FORMAT_VERSION: u32 = 1;
pub const CAPTION_BATCH_SIZE: usize = 32;
pub const TEXT_BATCH_SIZE: usize = 256;
pub const CAPTION_EPOCHS: u32 = 8;
pub const TEXT_EPOCHS: u32 = 20;
pub const EPOCHS_PER_PHASE: u32 = 2;
pub const HOLDOUT_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Curriculum,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub mode: Mode,
    #[serde(default)]
    pub ordering: Ordering,
    pub phases: u32,
    pub epochs_per_phase: u32,
    pub iid_epochs: u32,
    pub batch_size: usize,
    pub seed: u64,
    pub holdout_fraction: f64,
    /// Trainer settings carried through untouched.
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

fn default_metadata() -> BTreeMap<String, serde_json::Value> {
    use serde_json::json;
    BTreeMap::from([
        ("learning_rate".to_string(), json!(1e-5)),
        ("max_token_length".to_string(), json!(50)),
        (
            "optimizer".to_string(),
            json!("adam beta1=0.9 beta2=0.999 eps=1e-8 weight_decay=0"),
        ),
    ])
}

impl ScheduleConfig {
    /// Caption-stage defaults: 4 phases x 2 epochs, 8 i.i.d. epochs,
    /// batch 32, 5% holdout, seed 0.
    pub fn captions(mode: Mode) -> Self {
        Self {
            mode,
            ordering: Ordering::Ascending,
            phases: crate::curriculum::DEFAULT_PHASES,
            epochs_per_phase: EPOCHS_PER_PHASE,
            iid_epochs: CAPTION_EPOCHS,
            batch_size: CAPTION_BATCH_SIZE,
            seed: 0,
            holdout_fraction: HOLDOUT_FRACTION,
            metadata: default_metadata(),
        }
    }

    /// Text pretraining defaults: i.i.d., 20 epochs, batch 256, no holdout.
    pub fn text() -> Self {
        Self {
            mode: Mode::Iid,
            iid_epochs: TEXT_EPOCHS,
            batch_size: TEXT_BATCH_SIZE,
            holdout_fraction: 0.0,
            ..Self::captions(Mode::Iid)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("phases", self.phases as usize),
            ("epochs_per_phase", self.epochs_per_phase as usize),
            ("iid_epochs", self.iid_epochs as usize),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::invalid(format!(
                "holdout fraction {} outside [0, 1)",
                self.holdout_fraction
            )));
        }
        Ok(())
    }

    /// Warning when curriculum and i.i.d. regimes would not see the same
    /// number of epochs.
    pub fn budget_warning(&self) -> Option<String> {
        let cl = self.phases * self.epochs_per_phase;
        (cl != self.iid_epochs).then(|| {
            format!(
                "phases x epochs_per_phase = {cl} differs from iid_epochs = {}; regimes are not budget-matched",
                self.iid_epochs
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub kind: String,
    pub version: u32,
    pub config: ScheduleConfig,
    pub fingerprint: String,
    /// Size of the pool each phase draws from, in training order.
    pub pool_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub phase: u32,
    pub epoch: u32,
    pub batch: u32,
    pub samples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub header: ManifestHeader,
    pub batches: Vec<Batch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
}

/// `round(fraction * n)` with halves rounded up.
pub fn holdout_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 0.5).floor() as usize
}

/// Seeded train/validation split. Each side keeps the input order.
pub fn holdout_split<S: AsRef<str>>(ids: &[S], fraction: f64, seed: u64) -> Result<SplitAssignment> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("holdout fraction {fraction} outside [0, 1)")));
    }
    let held = holdout_count(fraction, ids.len()).min(ids.len());
    let mut order: Vec<usize> = (0..ids.len()).collect();
    Xoshiro256StarStar::for_stream(seed, HOLDOUT_STREAM).shuffle(&mut order);
    let mut is_validation = vec![false; ids.len()];
    for &i in &order[..held] {
        is_validation[i] = true;
    }
    let mut split = SplitAssignment {
        train_ids: Vec::with_capacity(ids.len() - held),
        validation_ids: Vec::with_capacity(held),
    };
    for (id, v) in ids.iter().zip(is_validation) {
        let id = id.as_ref().to_string();
        if v {
            split.validation_ids.push(id);
        } else {
            split.train_ids.push(id);
        }
    }
    Ok(split)
}

/// Keep only samples whose ids are in the split's training side.
pub fn train_samples(samples: &[ScoredSample], split: &SplitAssignment) -> Vec<ScoredSample> {
    let train: HashSet<&str> = split.train_ids.iter().map(String::as_str).collect();
    samples
        .iter()
        .filter(|s| train.contains(s.sample_id.as_str()))
        .cloned()
        .collect()
}

fn samples_fingerprint(samples: &[ScoredSample], boundaries: Option<&PhaseBoundaries>) -> String {
    let mut f = Fingerprinter::new();
    for s in samples {
        f.field(&s.sample_id).field(s.difficulty.to_le_bytes());
    }
    if let Some(b) = boundaries {
        for v in b.as_slice() {
            f.field(v.to_le_bytes());
        }
    }
    f.finish()
}

fn ids_fingerprint<S: AsRef<str>>(ids: &[S]) -> String {
    let mut f = Fingerprinter::new();
    for id in ids {
        f.field(id.as_ref());
    }
    f.finish()
}

/// Shuffle `pool` with the stream of `(phase, epoch)` and cut it into batches.
fn epoch_batches(pool: &[&str], phase: u32, epoch: u32, seed: u64, batch_size: usize) -> Vec<Batch> {
    let mut order: Vec<&str> = pool.to_vec();
    Xoshiro256StarStar::for_stream(seed, epoch_stream(phase, epoch)).shuffle(&mut order);
    order
        .chunks(batch_size)
        .enumerate()
        .map(|(i, chunk)| Batch {
            phase,
            epoch,
            batch: i as u32,
            samples: chunk.iter().map(|s| s.to_string()).collect(),
        })
        .collect()
}

/// Generate `(phase, epoch, pool)` jobs in parallel and merge in order.
fn materialize(jobs: Vec<(u32, u32, &[&str])>, seed: u64, batch_size: usize) -> Vec<Batch> {
    jobs.into_par_iter()
        .map(|(p, e, pool)| epoch_batches(pool, p, e, seed, batch_size))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn build_curriculum_schedule(
    samples: &[ScoredSample],
    boundaries: &PhaseBoundaries,
    config: &ScheduleConfig,
) -> Result<BatchManifest> {
    config.validate()?;
    if config.mode != Mode::Curriculum {
        return Err(Error::invalid("curriculum schedule requires mode = curriculum"));
    }
    if boundaries.phases() != config.phases {
        return Err(Error::invalid(format!(
            "boundaries define {} phases but the config asks for {}",
            boundaries.phases(),
            config.phases
        )));
    }
    let mut pools: Vec<Vec<&str>> = boundaries
        .as_slice()
        .iter()
        .map(|&b| {
            samples
                .iter()
                .filter(|s| s.difficulty <= b)
                .map(|s| s.sample_id.as_str())
                .collect()
        })
        .collect();
    if pools[0].is_empty() {
        return Err(Error::invalid("first phase empty"));
    }
    if config.ordering == Ordering::Descending {
        pools.reverse();
    }

    let mut jobs = Vec::new();
    for (i, pool) in pools.iter().enumerate() {
        for e in 1..=config.epochs_per_phase {
            jobs.push((i as u32 + 1, e, pool.as_slice()));
        }
    }
    let batches = materialize(jobs, config.seed, config.batch_size);
    Ok(BatchManifest {
        header: ManifestHeader {
            kind: "manifest".into(),
            version: FORMAT_VERSION,
            config: config.clone(),
            fingerprint: samples_fingerprint(samples, Some(boundaries)),
            pool_sizes: pools.iter().map(Vec::len).collect(),
        },
        batches,
    })
}

pub fn build_iid_schedule<S: AsRef<str> + Sync>(ids: &[S], config: &ScheduleConfig) -> Result<BatchManifest> {
    config.validate()?;
    if config.mode != Mode::Iid {
        return Err(Error::invalid("i.i.d. schedule requires mode = iid"));
    }
    if ids.is_empty() {
        return Err(Error::invalid("cannot schedule an empty id list"));
    }
    let pool: Vec<&str> = ids.iter().map(AsRef::as_ref).collect();
    let jobs = (1..=config.iid_epochs).map(|e| (0, e, pool.as_slice())).collect();
    let batches = materialize(jobs, config.seed, config.batch_size);
    Ok(BatchManifest {
        header: ManifestHeader {
            kind: "manifest".into(),
            version: FORMAT_VERSION,
            config: config.clone(),
            fingerprint: ids_fingerprint(ids),
            pool_sizes: vec![ids.len()],
        },
        batches,
    })
}

pub fn build_text_pretrain_schedule<S: AsRef<str> + Sync>(
    doc_ids: &[S],
    epochs: u32,
    batch_size: usize,
    seed: u64,
) -> Result<BatchManifest> {
    let config = ScheduleConfig {
        iid_epochs: epochs,
        batch_size,
        seed,
        ..ScheduleConfig::text()
    };
    build_iid_schedule(doc_ids, &config)
}

impl BatchManifest {
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for b in &self.batches {
            serde_json::to_writer(&mut out, b)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        buf
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::malformed(1, "missing manifest header"))?
            .map_err(|e| Error::malformed(1, e.to_string()))?;
        let header: ManifestHeader = serde_json::from_str(&header_line)
            .map_err(|e| Error::malformed(1, format!("invalid manifest header: {e}")))?;
        if header.kind != "manifest" {
            return Err(Error::malformed(1, format!("expected kind \"manifest\", got {:?}", header.kind)));
        }
        let mut batches = Vec::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let line = line.map_err(|e| Error::malformed(n, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            batches.push(
                serde_json::from_str(&line)
                    .map_err(|e| Error::malformed(n, format!("invalid batch: {e}")))?,
            );
        }
        let manifest = Self { header, batches };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }

    /// Batches grouped by `(phase, epoch)` in manifest order.
    pub fn epochs(&self) -> Vec<((u32, u32), &[Batch])> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.batches.len() {
            let key = |b: &Batch| (b.phase, b.epoch);
            if i == self.batches.len() || key(&self.batches[i]) != key(&self.batches[start]) {
                if start < i {
                    out.push((key(&self.batches[start]), &self.batches[start..i]));
                }
                start = i;
            }
        }
        out
    }

    /// Check ordering, batch-size and per-epoch permutation invariants.
    pub fn validate(&self) -> Result<()> {
        let size = self.header.config.batch_size;
        let mut prev: Option<(u32, u32, u32)> = None;
        for b in &self.batches {
            let key = (b.phase, b.epoch, b.batch);
            if prev.is_some_and(|p| p >= key) {
                return Err(Error::invalid(format!(
                    "batches out of order at phase {} epoch {} batch {}",
                    b.phase, b.epoch, b.batch
                )));
            }
            prev = Some(key);
        }
        for ((p, e), batches) in self.epochs() {
            let last = batches.len() - 1;
            for (i, b) in batches.iter().enumerate() {
                if b.batch as usize != i {
                    return Err(Error::invalid(format!("phase {p} epoch {e}: batch indices not contiguous")));
                }
                if b.samples.is_empty() || b.samples.len() > size || (i < last && b.samples.len() != size) {
                    return Err(Error::invalid(format!(
                        "phase {p} epoch {e} batch {i}: {} samples with batch size {size}",
                        b.samples.len()
                    )));
                }
            }
            let mut seen = HashSet::new();
            for id in batches.iter().flat_map(|b| &b.samples) {
                if !seen.insert(id.as_str()) {
                    return Err(Error::invalid(format!("phase {p} epoch {e}: {id:?} repeated within the epoch")));
                }
            }
        }
        Ok(())
    }
}

pub const PLAN_KIND: &str = "plan";

/// A stage's manifest, either embedded or referenced by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestSource {
    Path(String),
    Inline(Box<BatchManifest>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    /// Index of this stage's first batch within the whole plan.
    pub start_batch: usize,
    pub batch_count: usize,
    pub manifest: ManifestSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub kind: String,
    pub version: u32,
    pub stages: Vec<Stage>,
}

/// Sequence an optional text-pretraining manifest before a caption
/// manifest. Without text this is the caption-only plan.
pub fn compose_t_plus_c(text: Option<BatchManifest>, caption: BatchManifest) -> Plan {
    let mut stages = Vec::new();
    let mut start = 0;
    for (name, m) in text.map(|t| ("text", t)).into_iter().chain([("caption", caption)]) {
        let count = m.batches.len();
        stages.push(Stage {
            name: name.to_string(),
            start_batch: start,
            batch_count: count,
            manifest: ManifestSource::Inline(Box::new(m)),
        });
        start += count;
    }
    Plan {
        kind: PLAN_KIND.into(),
        version: FORMAT_VERSION,
        stages,
    }
}

impl Plan {
    pub fn total_batches(&self) -> usize {
        self.stages.iter().map(|s| s.batch_count).sum()
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut buf = serde_json::to_vec(self).expect("plan serializes");
        buf.push(b'\n');
        buf
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let plan: Plan = serde_json::from_slice(bytes)
            .map_err(|e| Error::invalid(format!("invalid plan: {e}")))?;
        if plan.kind != PLAN_KIND {
            return Err(Error::invalid(format!("expected kind \"plan\", got {:?}", plan.kind)));
        }
        Ok(plan)
    }

    /// Resolve every stage to an in-memory manifest; relative paths are taken
    /// from `base`.
    pub fn resolve(&self, base: &Path) -> Result<Vec<(&str, BatchManifest)>> {
        self.stages
            .iter()
            .map(|s| {
                let m = match &s.manifest {
                    ManifestSource::Inline(m) => (**m).clone(),
                    ManifestSource::Path(p) => BatchManifest::load(base.join(p))?,
                };
                Ok((s.name.as_str(), m))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub phase: u32,
    pub pool_size: usize,
    pub epochs: u32,
    pub batches_per_epoch: Vec<usize>,
    pub samples_processed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestStats {
    pub mode: Mode,
    pub phases: Vec<PhaseStats>,
    pub epochs: u32,
    pub batches: usize,
    pub samples_processed: usize,
    pub distinct_samples: usize,
    /// Samples an i.i.d. run over every distinct sample would process in the
    /// same number of epochs.
    pub iid_equivalent_samples: usize,
    pub cost_ratio: f64,
}

pub fn schedule_stats(manifest: &BatchManifest) -> ManifestStats {
    let mut phases: Vec<PhaseStats> = Vec::new();
    let mut all: HashSet<&str> = HashSet::new();
    let mut epochs = 0u32;
    for ((p, _), batches) in manifest.epochs() {
        epochs += 1;
        let ids: Vec<&str> = batches.iter().flat_map(|b| b.samples.iter().map(String::as_str)).collect();
        all.extend(ids.iter().copied());
        if phases.last().map(|s| s.phase) != Some(p) {
            phases.push(PhaseStats {
                phase: p,
                pool_size: ids.len(),
                epochs: 0,
                batches_per_epoch: Vec::new(),
                samples_processed: 0,
            });
        }
        let s = phases.last_mut().expect("just pushed");
        s.epochs += 1;
        s.pool_size = s.pool_size.max(ids.len());
        s.batches_per_epoch.push(batches.len());
        s.samples_processed += ids.len();
    }
    let samples_processed = phases.iter().map(|p| p.samples_processed).sum();
    let iid_equivalent_samples = epochs as usize * all.len();
    ManifestStats {
        mode: manifest.header.config.mode,
        phases,
        epochs,
        batches: manifest.batches.len(),
        samples_processed,
        distinct_samples: all.len(),
        iid_equivalent_samples,
        cost_ratio: if iid_equivalent_samples == 0 {
            1.0
        } else {
            samples_processed as f64 / iid_equivalent_samples as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub name: String,
    pub start_batch: usize,
    pub stats: ManifestStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub stages: Vec<StageStats>,
    pub batches: usize,
    pub samples_processed: usize,
}

pub fn plan_stats(plan: &Plan, base: &Path) -> Result<PlanStats> {
    let mut stages = Vec::new();
    for (stage, (name, m)) in plan.stages.iter().zip(plan.resolve(base)?) {
        stages.push(StageStats {
            name: name.to_string(),
            start_batch: stage.start_batch,
            stats: schedule_stats(&m),
        });
    }
    Ok(PlanStats {
        batches: stages.iter().map(|s| s.stats.batches).sum(),
        samples_processed: stages.iter().map(|s| s.stats.samples_processed).sum(),
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::{build_histogram, quartile_boundaries};
    use proptest::prelude::*;

    fn toy_samples() -> Vec<ScoredSample> {
        [0, 1, 1, 2, 3, 3, 4, 7]
            .iter()
            .enumerate()
            .map(|(i, &d)| ScoredSample::with_difficulty(format!("s{i}"), d))
            .collect()
    }

    fn toy_config(batch: usize) -> ScheduleConfig {
        ScheduleConfig {
            batch_size: batch,
            ..ScheduleConfig::captions(Mode::Curriculum)
        }
    }

    fn toy_manifest() -> BatchManifest {
        let samples = toy_samples();
        let b = quartile_boundaries(&build_histogram(&samples).unwrap());
        build_curriculum_schedule(&samples, &b, &toy_config(2)).unwrap()
    }

    #[test]
    fn holdout_examples() {
        let ids: Vec<String> = (0..100).map(|i| format!("id{i}")).collect();
        let s = holdout_split(&ids, 0.05, 0).unwrap();
        assert_eq!(s.validation_ids.len(), 5);
        assert_eq!(s.train_ids.len(), 95);
        let v: HashSet<_> = s.validation_ids.iter().collect();
        assert!(s.train_ids.iter().all(|t| !v.contains(t)));

        let none = holdout_split(&ids, 0.0, 0).unwrap();
        assert!(none.validation_ids.is_empty());
        assert_eq!(none.train_ids, ids);

        assert_eq!(holdout_split(&ids, 0.05, 9).unwrap(), holdout_split(&ids, 0.05, 9).unwrap());
        assert!(holdout_split(&ids, 1.0, 0).is_err());
        assert!(holdout_split(&ids, -0.1, 0).is_err());
    }

    #[test]
    fn holdout_preserves_relative_order() {
        let ids: Vec<String> = (0..50).map(|i| format!("{i:03}")).collect();
        let s = holdout_split(&ids, 0.3, 4).unwrap();
        assert!(s.train_ids.windows(2).all(|w| w[0] < w[1]));
        assert!(s.validation_ids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn holdout_count_rounds_half_up() {
        for n in 1..=1000usize {
            assert_eq!(holdout_count(0.05, n), (n + 10) / 20, "n = {n}");
        }
        assert_eq!(holdout_count(0.1, 20), 2);
        assert_eq!(holdout_count(0.5, 3), 2);
    }

    #[test]
    fn curriculum_toy_batch_counts() {
        let m = toy_manifest();
        // ceil(pool / 2) per epoch for pools 3, 4, 6, 8, two epochs each.
        let per_epoch: Vec<usize> = m.epochs().iter().map(|(_, b)| b.len()).collect();
        assert_eq!(per_epoch, [2, 2, 2, 2, 3, 3, 4, 4]);
        assert_eq!(m.batches.len(), 22);
        assert_eq!(m.header.pool_sizes, [3, 4, 6, 8]);
        m.validate().unwrap();
    }

    #[test]
    fn pool_membership_per_epoch() {
        let m = toy_manifest();
        let epochs = m.epochs();
        assert_eq!(epochs.len(), 8);
        let appears = |id: &str| {
            epochs
                .iter()
                .filter(|(_, bs)| bs.iter().any(|b| b.samples.iter().any(|s| s == id)))
                .count()
        };
        // difficulties 0 and 1 are under b1 = 1.
        for id in ["s0", "s1", "s2"] {
            assert_eq!(appears(id), 8);
        }
        // difficulty 7 = b4 > b3 only enters the last phase.
        assert_eq!(appears("s7"), 2);
    }

    #[test]
    fn manifest_bytes_are_reproducible() {
        assert_eq!(toy_manifest().to_jsonl(), toy_manifest().to_jsonl());
        let samples = toy_samples();
        let b = quartile_boundaries(&build_histogram(&samples).unwrap());
        let other = ScheduleConfig { seed: 1, ..toy_config(2) };
        let m1 = build_curriculum_schedule(&samples, &b, &other).unwrap();
        assert_ne!(m1.to_jsonl(), toy_manifest().to_jsonl());
    }

    #[test]
    fn manifest_jsonl_layout_and_round_trip() {
        let m = toy_manifest();
        let bytes = m.to_jsonl();
        let text = String::from_utf8(bytes.clone()).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with(r#"{"kind":"manifest","version":1,"config":{"mode":"curriculum""#));
        assert!(first.contains(r#""fingerprint":""#));
        let second = text.lines().nth(1).unwrap();
        assert!(second.starts_with(r#"{"phase":1,"epoch":1,"batch":0,"samples":["#));
        let back = BatchManifest::read_jsonl(bytes.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn corrupt_manifests_fail_validation() {
        let mut m = toy_manifest();
        m.batches.swap(0, 1);
        assert!(m.validate().is_err());
        let mut m = toy_manifest();
        m.batches[1].samples[0] = m.batches[0].samples[0].clone();
        assert!(m.validate().is_err());
        let mut m = toy_manifest();
        m.batches[0].samples.pop();
        assert!(m.validate().is_err());
    }

    #[test]
    fn first_phase_empty_and_config_errors() {
        let samples = toy_samples();
        let b = PhaseBoundaries::new(vec![0, 0, 0, 7]).unwrap();
        let only_high: Vec<_> = samples.iter().filter(|s| s.difficulty > 0).cloned().collect();
        let err = build_curriculum_schedule(&only_high, &b, &toy_config(2)).unwrap_err();
        assert!(err.to_string().contains("first phase empty"));
        let three = PhaseBoundaries::new(vec![1, 2, 7]).unwrap();
        assert!(build_curriculum_schedule(&samples, &three, &toy_config(2)).is_err());
        let zero = ScheduleConfig { batch_size: 0, ..toy_config(2) };
        assert!(build_curriculum_schedule(&samples, &b, &zero).is_err());
        let iid = ScheduleConfig::captions(Mode::Iid);
        assert!(build_curriculum_schedule(&samples, &b, &iid).is_err());
    }

    #[test]
    fn descending_reverses_pool_sequence() {
        let samples = toy_samples();
        let b = quartile_boundaries(&build_histogram(&samples).unwrap());
        let cfg = ScheduleConfig {
            ordering: Ordering::Descending,
            ..toy_config(2)
        };
        let m = build_curriculum_schedule(&samples, &b, &cfg).unwrap();
        assert_eq!(m.header.pool_sizes, [8, 6, 4, 3]);
        m.validate().unwrap();
    }

    #[test]
    fn iid_examples() {
        let ids: Vec<String> = (0..8).map(|i| i.to_string()).collect();
        let cfg = ScheduleConfig {
            batch_size: 2,
            ..ScheduleConfig::captions(Mode::Iid)
        };
        let m = build_iid_schedule(&ids, &cfg).unwrap();
        assert_eq!(m.batches.len(), 32);
        assert!(m.batches.iter().all(|b| b.phase == 0));
        for (_, bs) in m.epochs() {
            let mut got: Vec<&String> = bs.iter().flat_map(|b| &b.samples).collect();
            got.sort();
            assert_eq!(got, ids.iter().collect::<Vec<_>>());
        }
        let one = build_iid_schedule(&["x"], &cfg).unwrap();
        assert_eq!(one.batches.len(), 8);
        assert!(one.batches.iter().all(|b| b.samples == ["x"]));
        assert!(build_iid_schedule::<&str>(&[], &cfg).is_err());
    }

    #[test]
    fn text_pretrain_examples() {
        let docs: Vec<String> = (0..512).map(|i| format!("line-{i}")).collect();
        let m = build_text_pretrain_schedule(&docs, 20, 256, 0).unwrap();
        assert_eq!(m.batches.len(), 40);
        let small = build_text_pretrain_schedule(&docs[..100], 20, 256, 0).unwrap();
        assert_eq!(small.batches.len(), 20);
        assert!(small.batches.iter().all(|b| b.samples.len() == 100));
        assert_eq!(m, build_text_pretrain_schedule(&docs, 20, 256, 0).unwrap());
        assert!(build_text_pretrain_schedule::<&str>(&[], 20, 256, 0).is_err());
    }

    #[test]
    fn compose_examples() {
        let docs: Vec<String> = (0..512).map(|i| format!("line-{i}")).collect();
        let text = build_text_pretrain_schedule(&docs, 20, 256, 0).unwrap();
        let plan = compose_t_plus_c(Some(text), toy_manifest());
        assert_eq!(plan.total_batches(), 62);
        assert_eq!(plan.stages[0].name, "text");
        assert_eq!(plan.stages[1].name, "caption");
        assert_eq!(plan.stages[1].start_batch, 40);

        let c_only = compose_t_plus_c(None, toy_manifest());
        assert_eq!(c_only.stages.len(), 1);
        assert_eq!(c_only.stages[0].name, "caption");

        let back = Plan::from_json(&plan.to_json()).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn stats_of_toy_schedules() {
        let s = schedule_stats(&toy_manifest());
        assert_eq!(s.samples_processed, 42);
        assert_eq!(s.iid_equivalent_samples, 64);
        assert_eq!(s.cost_ratio, 0.65625);
        let pools: Vec<usize> = s.phases.iter().map(|p| p.pool_size).collect();
        assert_eq!(pools, [3, 4, 6, 8]);

        let ids: Vec<String> = (0..8).map(|i| i.to_string()).collect();
        let cfg = ScheduleConfig { batch_size: 2, ..ScheduleConfig::captions(Mode::Iid) };
        let iid = schedule_stats(&build_iid_schedule(&ids, &cfg).unwrap());
        assert_eq!(iid.samples_processed, 64);
        assert_eq!(iid.cost_ratio, 1.0);
    }

    #[test]
    fn budget_warning_only_when_mismatched() {
        assert!(ScheduleConfig::captions(Mode::Curriculum).budget_warning().is_none());
        let cfg = ScheduleConfig { iid_epochs: 10, ..ScheduleConfig::captions(Mode::Curriculum) };
        assert!(cfg.budget_warning().is_some());
    }

    proptest! {
        #[test]
        fn curriculum_invariants(
            ds in prop::collection::vec(0u32..12, 1..120),
            batch in 1usize..20,
            seed in any::<u64>(),
        ) {
            let samples: Vec<_> = ds.iter().enumerate().map(|(i, &d)| ScoredSample::with_difficulty(format!("x{i}"), d)).collect();
            let b = quartile_boundaries(&build_histogram(&samples).unwrap());
            let cfg = ScheduleConfig { batch_size: batch, seed, ..ScheduleConfig::captions(Mode::Curriculum) };
            let m = build_curriculum_schedule(&samples, &b, &cfg).unwrap();
            m.validate().unwrap();
            let per_epoch: Vec<usize> = m.epochs().iter().map(|(_, bs)| bs.len()).collect();
            prop_assert!(per_epoch.windows(2).all(|w| w[0] <= w[1]));
            let stats = schedule_stats(&m);
            let pools = crate::curriculum::pool_sizes(&samples, &b);
            prop_assert_eq!(stats.samples_processed, 2 * pools.iter().sum::<usize>());
            prop_assert!(stats.cost_ratio <= 1.0);
            let all_tied = ds.iter().all(|&d| d == ds[0]);
            prop_assert_eq!(stats.cost_ratio == 1.0, all_tied || pools.iter().all(|&p| p == ds.len()));
        }
    }
}
