//! Data model, serialization, and sampling for metaphor-paraphrase pairs
//! with and without document contexts.
//!
//! The canonical storage format is JSON Lines, one pair per line; a CSV
//! adapter accepts the same fields with a header row. Each stored row may
//! carry means for both conditions (`mean_ooc`, `mean_ic`), and loading
//! selects the view: [`Corpus::load`] derives each pair's condition from its
//! contexts, while [`Corpus::load_condition`] forces one condition for the
//! whole file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::round_to_class;

/// Presentation condition of a pair: bare sentences or embedded in a
/// one-sentence-each-side document context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "ooc")]
    OutOfContext,
    #[serde(rename = "ic")]
    InContext,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Condition::OutOfContext => write!(f, "ooc"),
            Condition::InContext => write!(f, "ic"),
        }
    }
}

/// Rounded aptness class on the 1-4 scale; 1-2 are non-paraphrases, 3-4
/// paraphrases.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(into = "u8", try_from = "u8")]
pub enum AptnessClass {
    One,
    Two,
    Three,
    Four,
}

impl AptnessClass {
    pub const ALL: [AptnessClass; 4] = [
        AptnessClass::One,
        AptnessClass::Two,
        AptnessClass::Three,
        AptnessClass::Four,
    ];

    pub fn value(self) -> u8 {
        match self {
            AptnessClass::One => 1,
            AptnessClass::Two => 2,
            AptnessClass::Three => 3,
            AptnessClass::Four => 4,
        }
    }

    pub fn from_value(v: u8) -> Option<AptnessClass> {
        match v {
            1 => Some(AptnessClass::One),
            2 => Some(AptnessClass::Two),
            3 => Some(AptnessClass::Three),
            4 => Some(AptnessClass::Four),
            _ => None,
        }
    }

    /// Classes 3 and 4 count as paraphrases.
    pub fn is_paraphrase(self) -> bool {
        self.value() >= 3
    }
}

impl From<AptnessClass> for u8 {
    fn from(c: AptnessClass) -> u8 {
        c.value()
    }
}

impl TryFrom<u8> for AptnessClass {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        AptnessClass::from_value(v).ok_or_else(|| format!("aptness class must be 1-4, got {v}"))
    }
}

impl std::fmt::Display for AptnessClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate pair_id {pair_id:?}")]
    DuplicatePairId { pair_id: String, line: usize },
    #[error("pair {pair_id:?}: rating {value} out of range [1,4]")]
    RatingOutOfRange { pair_id: String, value: f64 },
    #[error("pair {pair_id:?}: {field} is empty")]
    EmptyText {
        pair_id: String,
        field: &'static str,
    },
    #[error("pair {pair_id:?} is already contextualized")]
    AlreadyContextualized { pair_id: String },
    #[error("pair {pair_id:?}: both context strings are empty")]
    EmptyContext { pair_id: String },
    #[error("pair {pair_id:?} has no context but an in-context view was requested")]
    MissingContext { pair_id: String },
    #[error("pair {pair_id:?} has no mean rating")]
    MissingMean { pair_id: String },
    #[error("mean rating references unknown pair {pair_id:?}")]
    UnknownPair { pair_id: String },
    #[error("test fraction {fraction} leaves an empty side on {size} pairs")]
    DegenerateSplit { fraction: f64, size: usize },
    #[error("cannot make {k} folds from {size} pairs")]
    BadFoldCount { k: usize, size: usize },
    #[error("corpus is empty")]
    Empty,
}

/// One metaphor sentence paired with one literal paraphrase candidate,
/// optionally embedded in a document context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub pair_id: String,
    pub group_id: String,
    pub metaphor_text: String,
    pub candidate_text: String,
    pub context_before: Option<String>,
    pub context_after: Option<String>,
}

impl PairRecord {
    /// Construct with invariant checks; empty context strings normalize to
    /// absent.
    pub fn new(
        pair_id: impl Into<String>,
        group_id: impl Into<String>,
        metaphor_text: impl Into<String>,
        candidate_text: impl Into<String>,
        context_before: Option<String>,
        context_after: Option<String>,
    ) -> Result<PairRecord, CorpusError> {
        let rec = PairRecord {
            pair_id: pair_id.into(),
            group_id: group_id.into(),
            metaphor_text: metaphor_text.into(),
            candidate_text: candidate_text.into(),
            context_before: context_before.filter(|s| !s.is_empty()),
            context_after: context_after.filter(|s| !s.is_empty()),
        };
        if rec.metaphor_text.is_empty() {
            return Err(CorpusError::EmptyText {
                pair_id: rec.pair_id,
                field: "metaphor",
            });
        }
        if rec.candidate_text.is_empty() {
            return Err(CorpusError::EmptyText {
                pair_id: rec.pair_id,
                field: "candidate",
            });
        }
        Ok(rec)
    }

    /// In context iff at least one surrounding sentence is present.
    pub fn condition(&self) -> Condition {
        if self.context_before.is_some() || self.context_after.is_some() {
            Condition::InContext
        } else {
            Condition::OutOfContext
        }
    }

    /// Copy of this pair with the document context attached.
    pub fn contextualize(&self, before: &str, after: &str) -> Result<PairRecord, CorpusError> {
        if self.condition() == Condition::InContext {
            return Err(CorpusError::AlreadyContextualized {
                pair_id: self.pair_id.clone(),
            });
        }
        if before.is_empty() && after.is_empty() {
            return Err(CorpusError::EmptyContext {
                pair_id: self.pair_id.clone(),
            });
        }
        let mut rec = self.clone();
        rec.context_before = Some(before.to_string()).filter(|s| !s.is_empty());
        rec.context_after = Some(after.to_string()).filter(|s| !s.is_empty());
        Ok(rec)
    }

    /// The metaphor side as presented to readers: context, target, context.
    pub fn rendered_metaphor(&self) -> String {
        render(
            self.context_before.as_deref(),
            &self.metaphor_text,
            self.context_after.as_deref(),
        )
    }

    /// The candidate side as presented to readers.
    pub fn rendered_candidate(&self) -> String {
        render(
            self.context_before.as_deref(),
            &self.candidate_text,
            self.context_after.as_deref(),
        )
    }

    fn strip_context(&self) -> PairRecord {
        let mut rec = self.clone();
        rec.context_before = None;
        rec.context_after = None;
        rec
    }
}

fn render(before: Option<&str>, target: &str, after: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(b) = before {
        out.push_str(b);
        out.push(' ');
    }
    out.push_str(target);
    if let Some(a) = after {
        out.push(' ');
        out.push_str(a);
    }
    out
}

/// Storage format for corpus files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    JsonLines,
    Csv,
}

impl CorpusFormat {
    /// Infer from a file extension: `.csv` means CSV, everything else JSON
    /// Lines.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::JsonLines,
        }
    }
}

/// On-disk row shape shared by both formats.
#[derive(Debug, Serialize, Deserialize)]
struct PairRow {
    pair_id: String,
    group_id: String,
    metaphor: String,
    candidate: String,
    context_before: Option<String>,
    context_after: Option<String>,
    mean_ooc: Option<f64>,
    mean_ic: Option<f64>,
}

/// An ordered collection of pairs with optional per-pair mean ratings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pairs: Vec<PairRecord>,
    mean_ratings: BTreeMap<String, f64>,
}

impl Corpus {
    pub fn empty() -> Corpus {
        Corpus::default()
    }

    /// Build a corpus, enforcing unique pair ids, known mean keys and the
    /// [1,4] rating range.
    pub fn new(
        pairs: Vec<PairRecord>,
        mean_ratings: BTreeMap<String, f64>,
    ) -> Result<Corpus, CorpusError> {
        let mut seen = BTreeSet::new();
        for (idx, p) in pairs.iter().enumerate() {
            if !seen.insert(p.pair_id.clone()) {
                return Err(CorpusError::DuplicatePairId {
                    pair_id: p.pair_id.clone(),
                    line: idx + 1,
                });
            }
        }
        for (pair_id, mean) in &mean_ratings {
            if !seen.contains(pair_id) {
                return Err(CorpusError::UnknownPair {
                    pair_id: pair_id.clone(),
                });
            }
            check_mean(pair_id, *mean)?;
        }
        Ok(Corpus {
            pairs,
            mean_ratings,
        })
    }

    pub fn pairs(&self) -> &[PairRecord] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn mean(&self, pair_id: &str) -> Option<f64> {
        self.mean_ratings.get(pair_id).copied()
    }

    pub fn means(&self) -> &BTreeMap<String, f64> {
        &self.mean_ratings
    }

    /// Mean rating or an error naming the pair without one.
    pub fn require_mean(&self, pair_id: &str) -> Result<f64, CorpusError> {
        self.mean(pair_id).ok_or_else(|| CorpusError::MissingMean {
            pair_id: pair_id.to_string(),
        })
    }

    /// Load with each pair's condition derived from its stored contexts;
    /// the matching mean slot (`mean_ic` for contextualized rows, `mean_ooc`
    /// otherwise) feeds the mean map.
    pub fn load(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
        Corpus::load_rows(path, format, None)
    }

    /// Load a forced single-condition view. Out-of-context strips any stored
    /// contexts and reads `mean_ooc`; in-context requires a context on every
    /// pair and reads `mean_ic`.
    pub fn load_condition(
        path: &Path,
        format: CorpusFormat,
        condition: Condition,
    ) -> Result<Corpus, CorpusError> {
        Corpus::load_rows(path, format, Some(condition))
    }

    fn load_rows(
        path: &Path,
        format: CorpusFormat,
        condition: Option<Condition>,
    ) -> Result<Corpus, CorpusError> {
        let rows = match format {
            CorpusFormat::JsonLines => read_jsonl(path)?,
            CorpusFormat::Csv => read_csv(path)?,
        };
        let mut pairs = Vec::with_capacity(rows.len());
        let mut means = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (line, row) in rows {
            if !seen.insert(row.pair_id.clone()) {
                return Err(CorpusError::DuplicatePairId {
                    pair_id: row.pair_id,
                    line,
                });
            }
            for m in [row.mean_ooc, row.mean_ic].into_iter().flatten() {
                check_mean(&row.pair_id, m)?;
            }
            let rec = PairRecord::new(
                row.pair_id,
                row.group_id,
                row.metaphor,
                row.candidate,
                row.context_before,
                row.context_after,
            )?;
            let (rec, mean) = match condition {
                None => {
                    let mean = match rec.condition() {
                        Condition::InContext => row.mean_ic,
                        Condition::OutOfContext => row.mean_ooc,
                    };
                    (rec, mean)
                }
                Some(Condition::OutOfContext) => (rec.strip_context(), row.mean_ooc),
                Some(Condition::InContext) => {
                    if rec.condition() == Condition::OutOfContext {
                        return Err(CorpusError::MissingContext {
                            pair_id: rec.pair_id,
                        });
                    }
                    (rec, row.mean_ic)
                }
            };
            if let Some(m) = mean {
                means.insert(rec.pair_id.clone(), m);
            }
            pairs.push(rec);
        }
        Ok(Corpus {
            pairs,
            mean_ratings: means,
        })
    }

    /// Write the corpus; each pair's mean lands in the slot matching its
    /// condition, so a load of the output reproduces this corpus exactly.
    pub fn save(&self, path: &Path, format: CorpusFormat) -> Result<(), CorpusError> {
        let rows: Vec<PairRow> = self
            .pairs
            .iter()
            .map(|p| {
                let mean = self.mean(&p.pair_id);
                let (mean_ooc, mean_ic) = match p.condition() {
                    Condition::OutOfContext => (mean, None),
                    Condition::InContext => (None, mean),
                };
                PairRow {
                    pair_id: p.pair_id.clone(),
                    group_id: p.group_id.clone(),
                    metaphor: p.metaphor_text.clone(),
                    candidate: p.candidate_text.clone(),
                    context_before: p.context_before.clone(),
                    context_after: p.context_after.clone(),
                    mean_ooc,
                    mean_ic,
                }
            })
            .collect();
        match format {
            CorpusFormat::JsonLines => write_jsonl(path, &rows),
            CorpusFormat::Csv => write_csv(path, &rows),
        }
    }

    /// Counts of pairs per rounded aptness class. Every pair must carry a
    /// mean rating.
    pub fn class_distribution(&self) -> Result<BTreeMap<AptnessClass, usize>, CorpusError> {
        let mut counts: BTreeMap<AptnessClass, usize> =
            AptnessClass::ALL.iter().map(|c| (*c, 0)).collect();
        for p in &self.pairs {
            let mean = self.require_mean(&p.pair_id)?;
            let class = round_to_class(mean).map_err(|_| CorpusError::RatingOutOfRange {
                pair_id: p.pair_id.clone(),
                value: mean,
            })?;
            *counts.get_mut(&class).expect("all classes present") += 1;
        }
        Ok(counts)
    }

    /// Deterministic stratified train/test split. The overall test size is
    /// `round(len * test_fraction)`, apportioned across rounded classes by
    /// largest remainder.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
        if self.is_empty() {
            return Err(CorpusError::Empty);
        }
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(CorpusError::DegenerateSplit {
                fraction: test_fraction,
                size: self.len(),
            });
        }
        let n = self.len();
        let target_total = (n as f64 * test_fraction).round() as usize;
        if target_total == 0 || target_total >= n {
            return Err(CorpusError::DegenerateSplit {
                fraction: test_fraction,
                size: n,
            });
        }
        let by_class = self.indices_by_class()?;
        let quotas = largest_remainder_quotas(&by_class, test_fraction, target_total);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut test_idx = BTreeSet::new();
        for (members, quota) in by_class.iter().zip(quotas) {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            test_idx.extend(shuffled.into_iter().take(quota));
        }
        let test = self.subset(|i| test_idx.contains(&i));
        let train = self.subset(|i| !test_idx.contains(&i));
        Ok((train, test))
    }

    /// Deterministic stratified k-fold partition; returns `(train, test)` per
    /// fold. Test folds are disjoint and cover the corpus exactly once.
    pub fn kfold(&self, k: usize, seed: u64) -> Result<Vec<(Corpus, Corpus)>, CorpusError> {
        if k < 2 || k > self.len() {
            return Err(CorpusError::BadFoldCount {
                k,
                size: self.len(),
            });
        }
        let by_class = self.indices_by_class()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fold_of = vec![0usize; self.len()];
        let mut counter = 0usize;
        for members in &by_class {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            for idx in shuffled {
                fold_of[idx] = counter % k;
                counter += 1;
            }
        }
        let mut folds = Vec::with_capacity(k);
        for f in 0..k {
            let test = self.subset(|i| fold_of[i] == f);
            let train = self.subset(|i| fold_of[i] != f);
            folds.push((train, test));
        }
        Ok(folds)
    }

    fn indices_by_class(&self) -> Result<[Vec<usize>; 4], CorpusError> {
        let mut by_class: [Vec<usize>; 4] = Default::default();
        for (i, p) in self.pairs.iter().enumerate() {
            let mean = self.require_mean(&p.pair_id)?;
            let class = round_to_class(mean).map_err(|_| CorpusError::RatingOutOfRange {
                pair_id: p.pair_id.clone(),
                value: mean,
            })?;
            by_class[(class.value() - 1) as usize].push(i);
        }
        Ok(by_class)
    }

    fn subset(&self, keep: impl Fn(usize) -> bool) -> Corpus {
        let mut pairs = Vec::new();
        let mut means = BTreeMap::new();
        for (i, p) in self.pairs.iter().enumerate() {
            if keep(i) {
                if let Some(m) = self.mean(&p.pair_id) {
                    means.insert(p.pair_id.clone(), m);
                }
                pairs.push(p.clone());
            }
        }
        Corpus {
            pairs,
            mean_ratings: means,
        }
    }
}

fn check_mean(pair_id: &str, value: f64) -> Result<(), CorpusError> {
    if !(1.0..=4.0).contains(&value) || !value.is_finite() {
        return Err(CorpusError::RatingOutOfRange {
            pair_id: pair_id.to_string(),
            value,
        });
    }
    Ok(())
}

/// Test-set quota per class: floor of the ideal share, with the leftover
/// seats going to the largest fractional remainders (ties favor lower
/// classes).
fn largest_remainder_quotas(
    by_class: &[Vec<usize>; 4],
    fraction: f64,
    target_total: usize,
) -> [usize; 4] {
    let mut quotas = [0usize; 4];
    let mut remainders: Vec<(usize, f64)> = Vec::new();
    let mut assigned = 0usize;
    for (c, members) in by_class.iter().enumerate() {
        let ideal = members.len() as f64 * fraction;
        let floor = ideal.floor() as usize;
        let floor = floor.min(members.len());
        quotas[c] = floor;
        assigned += floor;
        remainders.push((c, ideal - floor as f64));
    }
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut leftover = target_total.saturating_sub(assigned);
    for (c, _) in remainders.iter().cycle() {
        if leftover == 0 {
            break;
        }
        if quotas[*c] < by_class[*c].len() {
            quotas[*c] += 1;
            leftover -= 1;
        }
    }
    quotas
}

fn read_jsonl(path: &Path) -> Result<Vec<(usize, PairRow)>, CorpusError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: PairRow = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        rows.push((lineno, row));
    }
    Ok(rows)
}

fn write_jsonl(path: &Path, rows: &[PairRow]) -> Result<(), CorpusError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let json = serde_json::to_string(row).expect("row serialization cannot fail");
        writeln!(w, "{json}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv(path: &Path) -> Result<Vec<(usize, PairRow)>, CorpusError> {
    let file = File::open(path)?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for result in reader.deserialize::<PairRow>() {
        match result {
            Ok(row) => {
                // +1 for the header, +1 for one-based numbering
                rows.push((rows.len() + 2, row));
            }
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or(rows.len() + 2);
                return Err(CorpusError::Parse {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(rows)
}

fn write_csv(path: &Path, rows: &[PairRow]) -> Result<(), CorpusError> {
    let file = File::create(path)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row).map_err(|e| CorpusError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}
