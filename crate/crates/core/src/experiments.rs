//! Evaluation metrics, the supervised training loop, the four train/test
//! regimens, and k-fold cross-validation.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{binarize, AnnotationError};
use crate::corpus::{Condition, Corpus, CorpusError};
use crate::embeddings::{encode, tokenize, EmbeddingError, EmbeddingTable, EncodedSentence};
use crate::model::{
    classify, render_input, EncoderConfig, InputMode, ModelError, MpatModel,
};
use crate::nn::{adam_step, AdamHyper, AdamState, Checkpoint, NnError, ParamSet, Tensor};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("group {index} has {size} members; groups need at least 2")]
    BadGroup { index: usize, size: usize },
    #[error("every group was skipped for zero variance")]
    AllGroupsSkipped,
    #[error("corpus has no pairs")]
    EmptyCorpus,
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// F1 of the positive class; 0 by convention when precision and recall are
/// both zero.
pub fn f_score(predictions: &[bool], golds: &[bool]) -> Result<f64, ExperimentError> {
    if predictions.len() != golds.len() {
        return Err(ExperimentError::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(ExperimentError::TooFewPoints { need: 1, got: 0 });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &g) in predictions.iter().zip(golds) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Product-moment correlation; `None` marks the undefined zero-variance case.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, ExperimentError> {
    if xs.len() != ys.len() {
        return Err(ExperimentError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(ExperimentError::TooFewPoints {
            need: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Ok(None);
    }
    Ok(Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0)))
}

/// Mean of per-group correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupedPearson {
    pub mean_r: f64,
    pub groups_used: usize,
    pub groups_skipped: usize,
}

/// Average the within-group correlation over groups, skipping (and counting)
/// groups where either side has zero variance.
pub fn grouped_pearson(groups: &[(Vec<f64>, Vec<f64>)]) -> Result<GroupedPearson, ExperimentError> {
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (index, (xs, ys)) in groups.iter().enumerate() {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(ExperimentError::BadGroup {
                index,
                size: xs.len().min(ys.len()),
            });
        }
        match pearson(xs, ys)? {
            Some(r) => {
                sum += r;
                used += 1;
            }
            None => skipped += 1,
        }
    }
    if used == 0 {
        return Err(ExperimentError::AllGroupsSkipped);
    }
    Ok(GroupedPearson {
        mean_r: sum / used as f64,
        groups_used: used,
        groups_skipped: skipped,
    })
}

// ---------------------------------------------------------------------------
// Encoding corpora for the model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct EncodedPair {
    pair_id: String,
    group_id: String,
    sentence_a: EncodedSentence,
    sentence_b: EncodedSentence,
    gold_mean: f64,
    label: bool,
}

fn encode_corpus(
    corpus: &Corpus,
    table: &EmbeddingTable,
    input_mode: InputMode,
    max_len: usize,
) -> Result<Vec<EncodedPair>, ExperimentError> {
    let mut out = Vec::with_capacity(corpus.len());
    for pair in corpus.pairs() {
        let gold_mean = corpus.require_mean(&pair.pair_id)?;
        let label = binarize(gold_mean)?;
        let (text_a, text_b) = render_input(pair, input_mode)?;
        let sentence_a = encode(&tokenize(&text_a), table, max_len)?;
        let sentence_b = encode(&tokenize(&text_b), table, max_len)?;
        out.push(EncodedPair {
            pair_id: pair.pair_id.clone(),
            group_id: pair.group_id.clone(),
            sentence_a,
            sentence_b,
            gold_mean,
            label,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Training-loop settings. `patience = 0` disables early stopping (the final
/// epoch's parameters are kept rather than the best-validation snapshot);
/// `validation_fraction = 0` scores early stopping on the training set
/// itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: usize,
    pub validation_fraction: f64,
    pub hyper: AdamHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 16,
            seed: 0,
            patience: 10,
            validation_fraction: 0.15,
            hyper: AdamHyper::default(),
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub val_f: f64,
}

/// Result of a training run; the trained model itself is updated in place.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_f: f64,
    pub epochs_run: usize,
}

/// Write the training log as CSV (`epoch,loss,val_f`).
pub fn write_training_log(path: &Path, log: &[EpochLog]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => ExperimentError::Io(io),
        other => ExperimentError::Io(std::io::Error::other(format!("{other:?}"))),
    })?;
    w.write_record(["epoch", "loss", "val_f"])
        .map_err(|e| ExperimentError::Io(std::io::Error::other(e)))?;
    for entry in log {
        w.write_record([
            entry.epoch.to_string(),
            format!("{:.17}", entry.loss),
            format!("{:.17}", entry.val_f),
        ])
        .map_err(|e| ExperimentError::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

struct Snapshot {
    params: Vec<(String, Tensor)>,
    adam: AdamState,
    epoch: usize,
    val_f: f64,
}

fn snapshot_of(model: &MpatModel, adam: &AdamState, epoch: usize, val_f: f64) -> Snapshot {
    Snapshot {
        params: model
            .params()
            .into_iter()
            .map(|(n, t)| (n, t.clone()))
            .collect(),
        adam: adam.clone(),
        epoch,
        val_f,
    }
}

fn restore_snapshot(model: &mut MpatModel, snapshot: &Snapshot) {
    for ((_, param), (_, stored)) in model.params_mut().into_iter().zip(&snapshot.params) {
        param.data_mut().copy_from_slice(stored.data());
    }
}

/// Supervised training with mini-batch Adam and early stopping on validation
/// F; the model is left at its best-validation parameters. Deterministic for
/// a fixed seed.
pub fn train(
    model: &mut MpatModel,
    corpus: &Corpus,
    table: &EmbeddingTable,
    config: &TrainConfig,
) -> Result<TrainOutcome, ExperimentError> {
    if corpus.is_empty() {
        return Err(ExperimentError::EmptyCorpus);
    }
    let (train_corpus, val_corpus) = if config.validation_fraction > 0.0 {
        match corpus.split(config.validation_fraction, config.seed) {
            Ok((t, v)) => (t, Some(v)),
            // Too small to carve out a validation side: validate on train.
            Err(CorpusError::DegenerateSplit { .. }) => (corpus.clone(), None),
            Err(e) => return Err(e.into()),
        }
    } else {
        (corpus.clone(), None)
    };

    let max_len = model.config.max_len;
    let train_pairs = encode_corpus(&train_corpus, table, model.input_mode, max_len)?;
    let val_pairs = match &val_corpus {
        Some(v) => encode_corpus(v, table, model.input_mode, max_len)?,
        None => train_pairs.clone(),
    };

    let mut adam = AdamState::new(model, config.hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch_size = config.batch_size.max(1);

    let mut log = Vec::new();
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut best: Option<Snapshot> = None;
    let mut since_best = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 1..=config.epochs.max(1) {
        epochs_run = epoch;
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(batch_size) {
            let mut grads = model.zero_grads();
            for &idx in batch {
                let p = &train_pairs[idx];
                let (loss, _, g) =
                    model.loss_and_grads(&p.sentence_a, &p.sentence_b, p.label)?;
                loss_sum += loss;
                grads.accumulate(&g);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(model, &grads.into_named(), &mut adam)?;
        }
        let loss = loss_sum / train_pairs.len() as f64;
        if !loss.is_finite() {
            return Err(ExperimentError::NonFiniteLoss { epoch });
        }
        let val_f = f_of_pairs(model, &val_pairs)?;
        log.push(EpochLog {
            epoch,
            loss,
            val_f,
        });
        if config.patience > 0 {
            let improved = best.as_ref().map_or(true, |b| val_f > b.val_f);
            if improved {
                best = Some(snapshot_of(model, &adam, epoch, val_f));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    break;
                }
            }
        }
    }

    let best = match best {
        Some(b) => b,
        None => {
            let last = log.last().expect("at least one epoch ran");
            snapshot_of(model, &adam, last.epoch, last.val_f)
        }
    };
    restore_snapshot(model, &best);
    let checkpoint = model.to_checkpoint(config.seed, Some(&best.adam));
    Ok(TrainOutcome {
        checkpoint,
        log,
        best_epoch: best.epoch,
        best_val_f: best.val_f,
        epochs_run,
    })
}

fn f_of_pairs(model: &MpatModel, pairs: &[EncodedPair]) -> Result<f64, ExperimentError> {
    let mut predictions = Vec::with_capacity(pairs.len());
    let mut golds = Vec::with_capacity(pairs.len());
    for p in pairs {
        let score = model.score_pair(&p.sentence_a, &p.sentence_b)?;
        predictions.push(classify(score) == 1);
        golds.push(p.label);
    }
    f_score(&predictions, &golds)
}

// ---------------------------------------------------------------------------
// Evaluation and reports
// ---------------------------------------------------------------------------

/// Per-pair evaluation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEval {
    pub score: f64,
    pub prediction: u8,
    pub gold_mean: f64,
    pub gold_binary: bool,
}

/// Metrics over one evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub f_score: f64,
    pub pearson: Option<f64>,
    pub grouped_pearson: Option<f64>,
    pub grouped_pearson_used: usize,
    pub grouped_pearson_skipped: usize,
    pub per_pair: BTreeMap<String, PairEval>,
}

/// Score every pair of `corpus` with `model` and compute the metric suite.
pub fn evaluate(
    model: &MpatModel,
    corpus: &Corpus,
    table: &EmbeddingTable,
) -> Result<Evaluation, ExperimentError> {
    if corpus.is_empty() {
        return Err(ExperimentError::EmptyCorpus);
    }
    let pairs = encode_corpus(corpus, table, model.input_mode, model.config.max_len)?;
    let mut per_pair = BTreeMap::new();
    let mut predictions = Vec::with_capacity(pairs.len());
    let mut golds = Vec::with_capacity(pairs.len());
    let mut scores = Vec::with_capacity(pairs.len());
    let mut means = Vec::with_capacity(pairs.len());
    let mut by_group: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in &pairs {
        let score = model.score_pair(&p.sentence_a, &p.sentence_b)?;
        let prediction = classify(score);
        per_pair.insert(
            p.pair_id.clone(),
            PairEval {
                score,
                prediction,
                gold_mean: p.gold_mean,
                gold_binary: p.label,
            },
        );
        predictions.push(prediction == 1);
        golds.push(p.label);
        scores.push(score);
        means.push(p.gold_mean);
        let slot = by_group.entry(p.group_id.clone()).or_default();
        slot.0.push(score);
        slot.1.push(p.gold_mean);
    }
    let f = f_score(&predictions, &golds)?;
    let r = if scores.len() >= 2 {
        pearson(&scores, &means)?
    } else {
        None
    };
    let groups: Vec<(Vec<f64>, Vec<f64>)> = by_group
        .into_values()
        .filter(|(xs, _)| xs.len() >= 2)
        .collect();
    let (grouped, used, skipped) = if groups.is_empty() {
        (None, 0, 0)
    } else {
        match grouped_pearson(&groups) {
            Ok(g) => (Some(g.mean_r), g.groups_used, g.groups_skipped),
            Err(ExperimentError::AllGroupsSkipped) => (None, 0, groups.len()),
            Err(e) => return Err(e),
        }
    };
    Ok(Evaluation {
        f_score: f,
        pearson: r,
        grouped_pearson: grouped,
        grouped_pearson_used: used,
        grouped_pearson_skipped: skipped,
        per_pair,
    })
}

/// One of the four train/test combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regimen {
    pub train_set: Condition,
    pub test_set: Condition,
}

impl Regimen {
    pub const ALL: [Regimen; 4] = [
        Regimen {
            train_set: Condition::InContext,
            test_set: Condition::InContext,
        },
        Regimen {
            train_set: Condition::OutOfContext,
            test_set: Condition::InContext,
        },
        Regimen {
            train_set: Condition::InContext,
            test_set: Condition::OutOfContext,
        },
        Regimen {
            train_set: Condition::OutOfContext,
            test_set: Condition::OutOfContext,
        },
    ];

    /// Parse names like `ooc-ic` (train set first).
    pub fn parse(s: &str) -> Option<Regimen> {
        let (train, test) = s.split_once('-')?;
        let of = |t: &str| match t {
            "ooc" => Some(Condition::OutOfContext),
            "ic" => Some(Condition::InContext),
            _ => None,
        };
        Some(Regimen {
            train_set: of(train)?,
            test_set: of(test)?,
        })
    }

    /// Context text is fed to the encoders only when both sides of the
    /// regimen present contexts; a forced input mode overrides this.
    pub fn default_input_mode(&self) -> InputMode {
        if self.train_set == Condition::InContext && self.test_set == Condition::InContext {
            InputMode::WithContext
        } else {
            InputMode::TargetOnly
        }
    }
}

impl std::fmt::Display for Regimen {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.train_set, self.test_set)
    }
}

/// Everything a regimen run needs besides the corpora.
#[derive(Debug, Clone)]
pub struct RegimenOptions {
    pub encoder: Option<EncoderConfig>,
    pub train: TrainConfig,
    /// `None` selects [`Regimen::default_input_mode`].
    pub input_mode: Option<InputMode>,
    pub test_fraction: f64,
    pub embedding_hash: Option<String>,
}

impl Default for RegimenOptions {
    fn default() -> Self {
        RegimenOptions {
            encoder: None,
            train: TrainConfig::default(),
            input_mode: None,
            test_fraction: 0.2,
            embedding_hash: None,
        }
    }
}

/// Snapshot of everything that determined a run, embedded in each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub regimen: String,
    pub input_mode: InputMode,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub test_fraction: f64,
}

/// Full per-run evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f_score: f64,
    pub pearson: Option<f64>,
    pub grouped_pearson: Option<f64>,
    pub grouped_pearson_used: usize,
    pub grouped_pearson_skipped: usize,
    pub per_pair: BTreeMap<String, PairEval>,
    pub config: ConfigSnapshot,
    pub seed: u64,
    pub embedding_hash: Option<String>,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Train under a regimen and evaluate. Same-corpus regimens use a stratified
/// 80/20 split (general `test_fraction`); cross-corpus regimens train on the
/// full train corpus and test on the full test corpus. Returns the report,
/// the trained model, and the full training outcome (checkpoint with
/// optimizer state, training log).
pub fn run_regimen(
    regimen: Regimen,
    ooc_corpus: &Corpus,
    ic_corpus: &Corpus,
    table: &EmbeddingTable,
    options: &RegimenOptions,
) -> Result<(EvalReport, MpatModel, TrainOutcome), ExperimentError> {
    let source = |c: Condition| match c {
        Condition::OutOfContext => ooc_corpus,
        Condition::InContext => ic_corpus,
    };
    let input_mode = options
        .input_mode
        .unwrap_or_else(|| regimen.default_input_mode());
    let encoder = options
        .encoder
        .clone()
        .unwrap_or_else(|| EncoderConfig::default_for(input_mode, table.dimension()));

    let (train_corpus, test_corpus) = if regimen.train_set == regimen.test_set {
        let (train, test) = source(regimen.train_set).split(options.test_fraction, options.train.seed)?;
        let train_ids: std::collections::BTreeSet<&str> =
            train.pairs().iter().map(|p| p.pair_id.as_str()).collect();
        assert!(
            test.pairs().iter().all(|p| !train_ids.contains(p.pair_id.as_str())),
            "same-corpus split must keep train and test disjoint"
        );
        (train, test)
    } else {
        (source(regimen.train_set).clone(), source(regimen.test_set).clone())
    };

    let mut model = MpatModel::new(encoder.clone(), input_mode, options.train.seed)?;
    let outcome = train(&mut model, &train_corpus, table, &options.train)?;
    let evaluation = evaluate(&model, &test_corpus, table)?;
    let report = EvalReport {
        f_score: evaluation.f_score,
        pearson: evaluation.pearson,
        grouped_pearson: evaluation.grouped_pearson,
        grouped_pearson_used: evaluation.grouped_pearson_used,
        grouped_pearson_skipped: evaluation.grouped_pearson_skipped,
        per_pair: evaluation.per_pair,
        config: ConfigSnapshot {
            regimen: regimen.to_string(),
            input_mode,
            encoder,
            train: options.train.clone(),
            test_fraction: options.test_fraction,
        },
        seed: options.train.seed,
        embedding_hash: options.embedding_hash.clone(),
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.epochs_run,
    };
    Ok((report, model, outcome))
}

/// Aggregate of a cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub folds: Vec<EvalReport>,
    pub mean_f: f64,
    pub std_f: f64,
    /// Mean/std over folds with a defined correlation.
    pub mean_pearson: Option<f64>,
    pub std_pearson: Option<f64>,
    pub pearson_undefined_folds: usize,
}

/// Stratified k-fold cross-validation; fold `i` trains with seed
/// `seed + i`.
pub fn crossval(
    corpus: &Corpus,
    k: usize,
    condition: Condition,
    table: &EmbeddingTable,
    options: &RegimenOptions,
) -> Result<CrossvalReport, ExperimentError> {
    let folds = corpus.kfold(k, options.train.seed)?;
    let input_mode = options.input_mode.unwrap_or_else(|| {
        Regimen {
            train_set: condition,
            test_set: condition,
        }
        .default_input_mode()
    });
    let encoder = options
        .encoder
        .clone()
        .unwrap_or_else(|| EncoderConfig::default_for(input_mode, table.dimension()));

    let mut reports = Vec::with_capacity(k);
    for (i, (train_part, test_part)) in folds.iter().enumerate() {
        let mut fold_train = options.train.clone();
        fold_train.seed = options.train.seed.wrapping_add(i as u64);
        let mut model = MpatModel::new(encoder.clone(), input_mode, fold_train.seed)?;
        let outcome = train(&mut model, train_part, table, &fold_train)?;
        let evaluation = evaluate(&model, test_part, table)?;
        reports.push(EvalReport {
            f_score: evaluation.f_score,
            pearson: evaluation.pearson,
            grouped_pearson: evaluation.grouped_pearson,
            grouped_pearson_used: evaluation.grouped_pearson_used,
            grouped_pearson_skipped: evaluation.grouped_pearson_skipped,
            per_pair: evaluation.per_pair,
            config: ConfigSnapshot {
                regimen: format!("{condition}-{condition}"),
                input_mode,
                encoder: encoder.clone(),
                train: fold_train.clone(),
                test_fraction: 1.0 / k as f64,
            },
            seed: fold_train.seed,
            embedding_hash: options.embedding_hash.clone(),
            best_epoch: outcome.best_epoch,
            epochs_run: outcome.epochs_run,
        });
    }

    let fs: Vec<f64> = reports.iter().map(|r| r.f_score).collect();
    let (mean_f, std_f) = mean_std(&fs);
    let rs: Vec<f64> = reports.iter().filter_map(|r| r.pearson).collect();
    let undefined = reports.len() - rs.len();
    let (mean_pearson, std_pearson) = if rs.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&rs);
        (Some(m), Some(s))
    };
    Ok(CrossvalReport {
        folds: reports,
        mean_f,
        std_f,
        mean_pearson,
        std_pearson,
        pearson_undefined_folds: undefined,
    })
}

/// Mean and population standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
