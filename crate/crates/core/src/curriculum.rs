//! Difficulty distribution and phase construction.
//!
//! Phase `p` of `q` admits every sample whose difficulty is at most `b_p`,
//! the smallest difficulty whose cumulative fraction reaches `p/q`. Pools are
//! therefore nested and the last one holds the whole dataset. Samples tied at
//! a boundary all enter the earlier phase.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorer::ScoredSample;

pub const DEFAULT_PHASES: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifficultyHistogram {
    counts: BTreeMap<u32, u64>,
    total: u64,
}

impl DifficultyHistogram {
    pub fn from_difficulties(difficulties: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for d in difficulties {
            *counts.entry(d).or_insert(0) += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::invalid("cannot build a histogram from zero samples"));
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &BTreeMap<u32, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn max_difficulty(&self) -> u32 {
        *self.counts.keys().next_back().expect("histogram is never empty")
    }

    pub fn min_difficulty(&self) -> u32 {
        *self.counts.keys().next().expect("histogram is never empty")
    }

    /// Number of samples with difficulty `<= k`.
    pub fn count_at_most(&self, k: i64) -> u64 {
        if k < 0 {
            return 0;
        }
        let k = u32::try_from(k).unwrap_or(u32::MAX);
        self.counts.range(..=k).map(|(_, c)| c).sum()
    }

    /// `F(k)`, the fraction of samples with difficulty `<= k`.
    pub fn cumulative_fraction(&self, k: i64) -> f64 {
        self.count_at_most(k) as f64 / self.total as f64
    }
}

pub fn build_histogram(samples: &[ScoredSample]) -> Result<DifficultyHistogram> {
    DifficultyHistogram::from_difficulties(samples.iter().map(|s| s.difficulty))
}

/// Inclusive difficulty thresholds, one per phase, non-decreasing; the last
/// equals the maximum difficulty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseBoundaries(Vec<u32>);

impl PhaseBoundaries {
    pub fn new(boundaries: Vec<u32>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::invalid("at least one phase boundary is required"));
        }
        if boundaries.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid(format!(
                "phase boundaries {boundaries:?} are not non-decreasing"
            )));
        }
        Ok(Self(boundaries))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn phases(&self) -> u32 {
        self.0.len() as u32
    }

    /// Threshold of 1-based phase `p`.
    pub fn boundary(&self, p: u32) -> Result<u32> {
        p.checked_sub(1)
            .and_then(|i| self.0.get(i as usize))
            .copied()
            .ok_or_else(|| {
                Error::invalid(format!("phase {p} outside 1..={}", self.0.len()))
            })
    }

    /// Human-readable admission rule per phase: `k ≤ b` and finally `all`.
    pub fn describe(&self) -> Vec<String> {
        let last = self.0.len() - 1;
        self.0
            .iter()
            .enumerate()
            .map(|(i, b)| if i == last { "all".to_string() } else { format!("k ≤ {b}") })
            .collect()
    }
}

/// `b_p` = smallest `k` with `F(k) >= p / phases`, for `p = 1..=phases`.
pub fn quantile_boundaries(hist: &DifficultyHistogram, phases: u32) -> Result<PhaseBoundaries> {
    if phases == 0 {
        return Err(Error::invalid("phases must be positive"));
    }
    let n = u128::from(hist.total);
    let q = u128::from(phases);
    let mut out = Vec::with_capacity(phases as usize);
    let mut iter = hist.counts.iter().peekable();
    let mut cum: u128 = 0;
    let mut current = hist.min_difficulty();
    for p in 1..=u128::from(phases) {
        // cum / n >= p / q, kept in integers.
        while cum * q < p * n {
            let (&d, &c) = iter.next().expect("cumulative mass reaches the total");
            cum += u128::from(c);
            current = d;
        }
        out.push(current);
    }
    PhaseBoundaries::new(out)
}

pub fn quartile_boundaries(hist: &DifficultyHistogram) -> PhaseBoundaries {
    quantile_boundaries(hist, DEFAULT_PHASES).expect("four phases is valid")
}

/// Ids of samples admitted by phase `p`, in input order.
pub fn phase_pool<'a>(
    samples: &'a [ScoredSample],
    boundaries: &PhaseBoundaries,
    p: u32,
) -> Result<Vec<&'a str>> {
    let b = boundaries.boundary(p)?;
    Ok(samples
        .iter()
        .filter(|s| s.difficulty <= b)
        .map(|s| s.sample_id.as_str())
        .collect())
}

/// Pool sizes for every phase.
pub fn pool_sizes(samples: &[ScoredSample], boundaries: &PhaseBoundaries) -> Vec<usize> {
    boundaries
        .as_slice()
        .iter()
        .map(|&b| samples.iter().filter(|s| s.difficulty <= b).count())
        .collect()
}

pub const BOUNDARIES_KIND: &str = "boundaries";

/// On-disk form of the phase boundaries together with the histogram they
/// were computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundariesFile {
    #[serde(default = "boundaries_kind")]
    pub kind: String,
    #[serde(default = "format_version")]
    pub version: u32,
    pub phases: u32,
    pub boundaries: Vec<u32>,
    pub histogram: BTreeMap<u32, u64>,
    pub total: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores_fingerprint: Option<String>,
}

fn boundaries_kind() -> String {
    BOUNDARIES_KIND.to_string()
}

fn format_version() -> u32 {
    1
}

impl BoundariesFile {
    pub fn new(hist: &DifficultyHistogram, boundaries: &PhaseBoundaries) -> Self {
        Self {
            kind: boundaries_kind(),
            version: format_version(),
            phases: boundaries.phases(),
            boundaries: boundaries.as_slice().to_vec(),
            histogram: hist.counts.clone(),
            total: hist.total,
            rules: boundaries.describe(),
            scores_fingerprint: None,
        }
    }

    pub fn to_boundaries(&self) -> Result<PhaseBoundaries> {
        if self.kind != BOUNDARIES_KIND {
            return Err(Error::invalid(format!("expected kind {BOUNDARIES_KIND:?}, got {:?}", self.kind)));
        }
        if self.boundaries.len() != self.phases as usize {
            return Err(Error::invalid(format!(
                "{} boundaries listed for {} phases",
                self.boundaries.len(),
                self.phases
            )));
        }
        PhaseBoundaries::new(self.boundaries.clone())
    }

    pub fn histogram(&self) -> Result<DifficultyHistogram> {
        if self.histogram.values().any(|&c| c == 0) {
            return Err(Error::invalid("histogram has zero-count entries"));
        }
        let total: u64 = self.histogram.values().sum();
        if total != self.total || total == 0 {
            return Err(Error::invalid(format!(
                "histogram sums to {total} but total is {}",
                self.total
            )));
        }
        Ok(DifficultyHistogram {
            counts: self.histogram.clone(),
            total,
        })
    }
}

/// CSV of the cumulative distribution for every integer difficulty from 0 to
/// the maximum, followed by one row per phase boundary.
///
/// Columns: `kind,difficulty,value`; `value` is `F(k)` on `cdf` rows and the
/// 1-based phase number on `boundary` rows.
pub fn distribution_csv(hist: &DifficultyHistogram, boundaries: &PhaseBoundaries) -> String {
    let mut out = String::from("kind,difficulty,value\n");
    for k in 0..=hist.max_difficulty() {
        let _ = writeln!(out, "cdf,{k},{}", hist.cumulative_fraction(i64::from(k)));
    }
    for (i, b) in boundaries.as_slice().iter().enumerate() {
        let _ = writeln!(out, "boundary,{b},{}", i + 1);
    }
    out
}

/// Static SVG of the cumulative step curve with dashed boundary markers.
pub fn distribution_svg(hist: &DifficultyHistogram, boundaries: &PhaseBoundaries) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let max = f64::from(hist.max_difficulty().max(1));
    let x = |k: f64| M + k / max * (W - 2.0 * M);
    let y = |f: f64| H - M - f * (H - 2.0 * M);

    let mut pts = Vec::new();
    let mut prev = 0.0;
    for k in 0..=hist.max_difficulty() {
        let f = hist.cumulative_fraction(i64::from(k));
        let xk = x(f64::from(k));
        pts.push(format!("{xk:.2},{:.2}", y(prev)));
        pts.push(format!("{xk:.2},{:.2}", y(f)));
        prev = f;
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{M}" y1="{M}" x2="{M}" y2="{b}" stroke="black"/>"#,
        b = H - M,
        r = W - M
    );
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        pts.join(" ")
    );
    for (i, &b) in boundaries.as_slice().iter().enumerate() {
        let xb = x(f64::from(b));
        let _ = writeln!(
            svg,
            r#"<line x1="{xb:.2}" y1="{M}" x2="{xb:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6,4"/><text x="{xb:.2}" y="{:.2}" font-size="12" text-anchor="middle">p{}</text>"#,
            H - M,
            M - 8.0,
            i + 1
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">difficulty (nouns)</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" font-size="13" transform="rotate(-90 14 {:.2})" text-anchor="middle">cumulative fraction</text>"#,
        H / 2.0,
        H / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}
