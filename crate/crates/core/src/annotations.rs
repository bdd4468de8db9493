//! Raw per-annotator ratings: rogue filtering, aggregation to per-pair
//! means, rounding/binarization rules, and the class transition matrix
//! between conditions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AptnessClass, Condition};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("annotator {annotator_id:?}, pair {pair_id:?}: score {score} not in 1-4")]
    ScoreOutOfRange {
        annotator_id: String,
        pair_id: String,
        score: u8,
    },
    #[error("duplicate rating by {annotator_id:?} for pair {pair_id:?} under {condition}")]
    DuplicateRating {
        annotator_id: String,
        pair_id: String,
        condition: Condition,
    },
    #[error("trap pair {pair_id:?} does not occur in the ratings")]
    UnknownTrapPair { pair_id: String },
    #[error("invalid trap set: {detail}")]
    BadTrapSet { detail: String },
    #[error("pair {pair_id:?} has no ratings under {condition}")]
    NoRatings { pair_id: String, condition: Condition },
    #[error("mean {value} outside [1,4]")]
    MeanOutOfRange { value: f64 },
    #[error("condition key sets differ: {detail}")]
    KeySetMismatch { detail: String },
}

/// One annotator's score for one pair under one condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub annotator_id: String,
    pub pair_id: String,
    pub condition: Condition,
    pub score: u8,
}

impl RatingRecord {
    pub fn new(
        annotator_id: impl Into<String>,
        pair_id: impl Into<String>,
        condition: Condition,
        score: u8,
    ) -> Result<RatingRecord, AnnotationError> {
        let rec = RatingRecord {
            annotator_id: annotator_id.into(),
            pair_id: pair_id.into(),
            condition,
            score,
        };
        if !(1..=4).contains(&rec.score) {
            return Err(AnnotationError::ScoreOutOfRange {
                annotator_id: rec.annotator_id,
                pair_id: rec.pair_id,
                score,
            });
        }
        Ok(rec)
    }
}

/// Acceptable score band for a trap pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectedBand {
    /// Scores 1-2 acceptable.
    Low,
    /// Scores 3-4 acceptable.
    High,
}

impl ExpectedBand {
    pub fn accepts(self, score: u8) -> bool {
        match self {
            ExpectedBand::Low => score <= 2,
            ExpectedBand::High => score >= 3,
        }
    }
}

/// A control pair with a known acceptable rating band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapSpec {
    pub pair_id: String,
    pub expected_band: ExpectedBand,
}

/// The trap pairs of one annotation batch: exactly one Low and one High.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrapSet {
    traps: Vec<TrapSpec>,
}

impl TrapSet {
    pub fn new(traps: Vec<TrapSpec>) -> Result<TrapSet, AnnotationError> {
        let lows = traps
            .iter()
            .filter(|t| t.expected_band == ExpectedBand::Low)
            .count();
        let highs = traps.len() - lows;
        if traps.len() != 2 || lows != 1 || highs != 1 {
            return Err(AnnotationError::BadTrapSet {
                detail: format!(
                    "need exactly one low and one high trap, got {lows} low / {highs} high"
                ),
            });
        }
        if traps[0].pair_id == traps[1].pair_id {
            return Err(AnnotationError::BadTrapSet {
                detail: format!("both traps reference pair {:?}", traps[0].pair_id),
            });
        }
        Ok(TrapSet { traps })
    }

    pub fn traps(&self) -> &[TrapSpec] {
        &self.traps
    }
}

/// Thresholds for the extreme-scoring rogue rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoguePolicy {
    /// Flag when at least this fraction of an annotator's scores is 1 or 4.
    pub extreme_fraction_threshold: f64,
    /// The extreme rule only applies from this many ratings.
    pub min_ratings_for_extreme_rule: usize,
}

impl Default for RoguePolicy {
    fn default() -> Self {
        RoguePolicy {
            extreme_fraction_threshold: 0.8,
            min_ratings_for_extreme_rule: 10,
        }
    }
}

/// Why an annotator was excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RogueReason {
    ExtremeScoring { fraction: f64, ratings: usize },
    TrapViolation { pair_id: String, score: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedAnnotator {
    pub annotator_id: String,
    pub reason: RogueReason,
}

/// Drop every record from annotators that score overwhelmingly at the
/// extremes or miss a trap band; returns the kept records and the flagged
/// annotators with reasons.
pub fn filter_rogues(
    records: &[RatingRecord],
    traps: &TrapSet,
    policy: &RoguePolicy,
) -> Result<(Vec<RatingRecord>, Vec<FlaggedAnnotator>), AnnotationError> {
    if records.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let pair_ids: BTreeSet<&str> = records.iter().map(|r| r.pair_id.as_str()).collect();
    for trap in traps.traps() {
        if !pair_ids.contains(trap.pair_id.as_str()) {
            return Err(AnnotationError::UnknownTrapPair {
                pair_id: trap.pair_id.clone(),
            });
        }
    }
    let band_of: BTreeMap<&str, ExpectedBand> = traps
        .traps()
        .iter()
        .map(|t| (t.pair_id.as_str(), t.expected_band))
        .collect();

    let mut per_annotator: BTreeMap<&str, Vec<&RatingRecord>> = BTreeMap::new();
    for r in records {
        per_annotator.entry(r.annotator_id.as_str()).or_default().push(r);
    }

    let mut flagged = Vec::new();
    let mut rogues: BTreeSet<&str> = BTreeSet::new();
    for (annotator, recs) in &per_annotator {
        let trap_violation = recs.iter().find_map(|r| {
            band_of.get(r.pair_id.as_str()).and_then(|band| {
                (!band.accepts(r.score)).then(|| RogueReason::TrapViolation {
                    pair_id: r.pair_id.clone(),
                    score: r.score,
                })
            })
        });
        if let Some(reason) = trap_violation {
            flagged.push(FlaggedAnnotator {
                annotator_id: annotator.to_string(),
                reason,
            });
            rogues.insert(annotator);
            continue;
        }
        let total = recs.len();
        let extreme = recs.iter().filter(|r| r.score == 1 || r.score == 4).count();
        let fraction = extreme as f64 / total as f64;
        if total >= policy.min_ratings_for_extreme_rule
            && fraction >= policy.extreme_fraction_threshold
        {
            flagged.push(FlaggedAnnotator {
                annotator_id: annotator.to_string(),
                reason: RogueReason::ExtremeScoring {
                    fraction,
                    ratings: total,
                },
            });
            rogues.insert(annotator);
        }
    }
    let kept = records
        .iter()
        .filter(|r| !rogues.contains(r.annotator_id.as_str()))
        .cloned()
        .collect();
    Ok((kept, flagged))
}

/// Per-pair aggregation output: mean scores and annotator counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub means: BTreeMap<String, f64>,
    pub annotator_counts: BTreeMap<String, usize>,
}

impl AggregateResult {
    /// Average number of annotators per pair.
    pub fn mean_annotators(&self) -> f64 {
        if self.annotator_counts.is_empty() {
            return 0.0;
        }
        self.annotator_counts.values().sum::<usize>() as f64 / self.annotator_counts.len() as f64
    }
}

/// Arithmetic mean score per pair under one condition. Every pair mentioned
/// anywhere in `records` must have at least one rating under `condition`.
pub fn aggregate_means(
    records: &[RatingRecord],
    condition: Condition,
) -> Result<AggregateResult, AnnotationError> {
    let mut seen: BTreeSet<(&str, &str, Condition)> = BTreeSet::new();
    for r in records {
        if !seen.insert((r.annotator_id.as_str(), r.pair_id.as_str(), r.condition)) {
            return Err(AnnotationError::DuplicateRating {
                annotator_id: r.annotator_id.clone(),
                pair_id: r.pair_id.clone(),
                condition: r.condition,
            });
        }
    }
    let universe: BTreeSet<&str> = records.iter().map(|r| r.pair_id.as_str()).collect();
    let mut sums: BTreeMap<&str, (u64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.condition == condition) {
        let entry = sums.entry(r.pair_id.as_str()).or_insert((0, 0));
        entry.0 += r.score as u64;
        entry.1 += 1;
    }
    let mut means = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for pair_id in universe {
        let (sum, n) = sums.get(pair_id).copied().unwrap_or((0, 0));
        if n == 0 {
            return Err(AnnotationError::NoRatings {
                pair_id: pair_id.to_string(),
                condition,
            });
        }
        means.insert(pair_id.to_string(), sum as f64 / n as f64);
        counts.insert(pair_id.to_string(), n);
    }
    Ok(AggregateResult {
        means,
        annotator_counts: counts,
    })
}

/// Round a mean rating to its aptness class; ties at .5 round up, so 2.5
/// lands in class 3 on the paraphrase side of the boundary.
pub fn round_to_class(mean: f64) -> Result<AptnessClass, AnnotationError> {
    if !(1.0..=4.0).contains(&mean) || !mean.is_finite() {
        return Err(AnnotationError::MeanOutOfRange { value: mean });
    }
    let rounded = (mean + 0.5).floor() as u8;
    let rounded = rounded.min(4);
    Ok(AptnessClass::from_value(rounded).expect("rounded mean stays in 1-4"))
}

/// True iff the mean crosses the 2.5 paraphrase threshold.
pub fn binarize(mean: f64) -> Result<bool, AnnotationError> {
    if !(1.0..=4.0).contains(&mean) || !mean.is_finite() {
        return Err(AnnotationError::MeanOutOfRange { value: mean });
    }
    Ok(mean >= 2.5)
}

/// Class transitions from out-of-context to in-context means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    /// `counts[i][j]`: pairs rounded to class `i+1` out of context and class
    /// `j+1` in context.
    pub counts: [[usize; 4]; 4],
    /// Row-normalized counts; all-zero rows stay zero.
    pub proportions: [[f64; 4]; 4],
}

impl TransitionMatrix {
    pub fn count(&self, ooc: AptnessClass, ic: AptnessClass) -> usize {
        self.counts[(ooc.value() - 1) as usize][(ic.value() - 1) as usize]
    }

    pub fn proportion(&self, ooc: AptnessClass, ic: AptnessClass) -> f64 {
        self.proportions[(ooc.value() - 1) as usize][(ic.value() - 1) as usize]
    }
}

/// Tabulate rounded-class transitions between two mean maps with identical
/// keys.
pub fn transition_matrix(
    ooc_means: &BTreeMap<String, f64>,
    ic_means: &BTreeMap<String, f64>,
) -> Result<TransitionMatrix, AnnotationError> {
    check_same_keys(ooc_means, ic_means)?;
    let mut counts = [[0usize; 4]; 4];
    for (pair_id, ooc) in ooc_means {
        let ic = ic_means[pair_id];
        let i = (round_to_class(*ooc)?.value() - 1) as usize;
        let j = (round_to_class(ic)?.value() - 1) as usize;
        counts[i][j] += 1;
    }
    let mut proportions = [[0.0f64; 4]; 4];
    for i in 0..4 {
        let row_total: usize = counts[i].iter().sum();
        if row_total > 0 {
            for j in 0..4 {
                proportions[i][j] = counts[i][j] as f64 / row_total as f64;
            }
        }
    }
    Ok(TransitionMatrix {
        counts,
        proportions,
    })
}

pub(crate) fn check_same_keys(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> Result<(), AnnotationError> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        let only_a: Vec<&String> = a.keys().filter(|k| !b.contains_key(*k)).take(3).collect();
        let only_b: Vec<&String> = b.keys().filter(|k| !a.contains_key(*k)).take(3).collect();
        return Err(AnnotationError::KeySetMismatch {
            detail: format!("first-only {only_a:?}, second-only {only_b:?}"),
        });
    }
    Ok(())
}

/// Read ratings from the CSV interchange format
/// (`annotator_id,pair_id,condition,score` with condition `ooc`/`ic`).
pub fn read_ratings_csv(path: &Path) -> Result<Vec<RatingRecord>, AnnotationError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut records = Vec::new();
    for row in reader.deserialize::<RatingRecord>() {
        let raw = row.map_err(csv_error)?;
        records.push(RatingRecord::new(
            raw.annotator_id,
            raw.pair_id,
            raw.condition,
            raw.score,
        )?);
    }
    Ok(records)
}

/// Write ratings in the CSV interchange format.
pub fn write_ratings_csv(path: &Path, records: &[RatingRecord]) -> Result<(), AnnotationError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a trap file: a JSON list of `{pair_id, expected_band}`.
pub fn read_traps_json(path: &Path) -> Result<TrapSet, AnnotationError> {
    let text = std::fs::read_to_string(path)?;
    let traps: Vec<TrapSpec> = serde_json::from_str(&text).map_err(|e| AnnotationError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    TrapSet::new(traps)
}

fn csv_error(e: csv::Error) -> AnnotationError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AnnotationError::Io(io),
        other => AnnotationError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}
