//! `mpat`: command-line laboratory for metaphor paraphrase aptness
//! experiments: corpus handling, annotation aggregation, model training,
//! evaluation, cross-validation, compression analysis, and plotting.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mpat_core::analysis::{linreg, render_scatter, summarize, ScatterOptions};
use mpat_core::annotations::{
    aggregate_means, filter_rogues, read_ratings_csv, read_traps_json, transition_matrix,
    FlaggedAnnotator, RoguePolicy,
};
use mpat_core::corpus::{Condition, Corpus, CorpusFormat};
use mpat_core::embeddings::{EmbeddingFormat, EmbeddingTable};
use mpat_core::experiments::{
    crossval, evaluate, pearson, run_regimen, write_training_log, Regimen,
    RegimenOptions, TrainConfig,
};
use mpat_core::model::{CnnConfig, EncoderConfig, InputMode, MpatModel};
use mpat_core::nn::{grad_check, load_checkpoint, save_checkpoint};

#[derive(Parser)]
#[command(
    name = "mpat",
    version,
    about = "Metaphor paraphrase aptness laboratory",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Corpus file utilities
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Crowd-rating utilities
    #[command(subcommand)]
    Annotations(AnnotationsCmd),
    /// Word-embedding file utilities
    #[command(subcommand)]
    Embeddings(EmbeddingsCmd),
    /// Train a model under a regimen and evaluate it
    Train(TrainArgs),
    /// Evaluate a checkpoint on a corpus
    Eval(EvalArgs),
    /// Stratified k-fold cross-validation
    Crossval(CrossvalArgs),
    /// Context-effect analyses
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Render a scatter chart of paired scores
    Plot(PlotArgs),
    /// Finite-difference check of the model gradients
    Gradcheck(GradcheckArgs),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Parse a corpus file and report whether it is valid
    Validate(CorpusIoArgs),
    /// Print summary statistics for a corpus file
    Stats(CorpusIoArgs),
}

#[derive(Args)]
struct CorpusIoArgs {
    /// Corpus file (.jsonl or .csv)
    #[arg(long)]
    input: PathBuf,
    /// Force the out-of-context or in-context view (ooc|ic)
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
}

#[derive(Subcommand)]
enum AnnotationsCmd {
    /// Filter rogue annotators and aggregate ratings into per-pair means
    Aggregate(AggregateArgs),
    /// Compare two aggregated mean files (transition matrix and correlation)
    Compare(CompareArgs),
}

#[derive(Args)]
struct AggregateArgs {
    /// Ratings CSV (annotator_id,pair_id,condition,score)
    #[arg(long)]
    ratings: PathBuf,
    /// Trap-pair specification JSON
    #[arg(long)]
    traps: PathBuf,
    /// Condition to aggregate (ooc|ic)
    #[arg(long, value_parser = parse_condition)]
    condition: Condition,
    /// Output means file (JSON lines); a rogue report is written alongside
    #[arg(long, env = "MPAT_OUT_DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Out-of-context means file (as written by `annotations aggregate`)
    #[arg(long)]
    ooc: PathBuf,
    /// In-context means file
    #[arg(long)]
    ic: PathBuf,
    /// Output JSON file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EmbeddingsCmd {
    /// Print dimension, vocabulary size, and sample tokens
    Inspect(InspectArgs),
}

#[derive(Args)]
struct InspectArgs {
    /// Embedding file (binary word2vec, or text with --text)
    #[arg(long)]
    input: PathBuf,
    /// Treat the file as whitespace-separated text
    #[arg(long)]
    text: bool,
    /// Number of sample tokens to show
    #[arg(long, default_value_t = 8)]
    limit: usize,
}

#[derive(Args)]
struct TrainArgs {
    /// Train/test regimen: ooc-ooc, ooc-ic, ic-ooc, or ic-ic
    #[arg(long)]
    regimen: Option<String>,
    /// Out-of-context corpus file
    #[arg(long)]
    ooc: Option<PathBuf>,
    /// In-context corpus file
    #[arg(long)]
    ic: Option<PathBuf>,
    /// Embedding file
    #[arg(long)]
    embeddings: PathBuf,
    /// Treat the embedding file as text rather than binary
    #[arg(long)]
    text_embeddings: bool,
    /// Run-configuration file (TOML); flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed (mandatory here or in the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, env = "MPAT_OUT_DIR")]
    out: PathBuf,
    #[command(flatten)]
    overrides: TrainOverrides,
}

/// Flag-level overrides shared by `train` and `crossval`.
#[derive(Args)]
struct TrainOverrides {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Force the encoder input (target_only|with_context)
    #[arg(long, value_parser = parse_input_mode)]
    input_mode: Option<InputMode>,
}

#[derive(Args)]
struct EvalArgs {
    /// Model checkpoint file
    #[arg(long)]
    checkpoint: PathBuf,
    /// Corpus file to score
    #[arg(long)]
    corpus: PathBuf,
    /// Force the out-of-context or in-context view (ooc|ic)
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
    /// Override the checkpoint's encoder input (target_only|with_context)
    #[arg(long, value_parser = parse_input_mode)]
    input_mode: Option<InputMode>,
    /// Embedding file
    #[arg(long)]
    embeddings: PathBuf,
    /// Treat the embedding file as text rather than binary
    #[arg(long)]
    text_embeddings: bool,
    /// Output report path (JSON)
    #[arg(long, env = "MPAT_OUT_DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct CrossvalArgs {
    /// Corpus file
    #[arg(long)]
    corpus: PathBuf,
    /// Condition view of the corpus (ooc|ic)
    #[arg(long, value_parser = parse_condition)]
    condition: Condition,
    /// Number of folds
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Embedding file
    #[arg(long)]
    embeddings: PathBuf,
    /// Treat the embedding file as text rather than binary
    #[arg(long)]
    text_embeddings: bool,
    /// Run-configuration file (TOML); flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed (mandatory here or in the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, env = "MPAT_OUT_DIR")]
    out: PathBuf,
    #[command(flatten)]
    overrides: TrainOverrides,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Quantify the context-induced compression effect
    Compression(CompressionArgs),
}

#[derive(Args)]
struct CompressionArgs {
    /// Out-of-context scores (evaluation report JSON or a pair-to-score map)
    #[arg(long)]
    ooc_scores: PathBuf,
    /// In-context scores (same formats)
    #[arg(long)]
    ic_scores: PathBuf,
    /// Score scale as `lo,hi`
    #[arg(long, default_value = "0,1", value_parser = parse_scale)]
    scale: (f64, f64),
    /// Bin boundary on the out-of-context score
    #[arg(long, default_value_t = 0.5)]
    boundary: f64,
    /// Output directory (summary JSON + scatter chart)
    #[arg(long, env = "MPAT_OUT_DIR")]
    out: PathBuf,
    /// Omit the timestamp comment from the chart
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Out-of-context scores (evaluation report JSON or a pair-to-score map)
    #[arg(long)]
    ooc_scores: PathBuf,
    /// In-context scores (same formats)
    #[arg(long)]
    ic_scores: PathBuf,
    /// Score scale as `lo,hi`
    #[arg(long, default_value = "0,1", value_parser = parse_scale)]
    scale: (f64, f64),
    /// Output SVG path
    #[arg(long, env = "MPAT_OUT_DIR")]
    out: PathBuf,
    /// Omit the timestamp comment from the chart
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Random seed for the reduced model and probe sentences
    #[arg(long)]
    seed: u64,
    /// Finite-difference step
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Acceptance threshold on the max relative error
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    match s {
        "ooc" => Ok(Condition::OutOfContext),
        "ic" => Ok(Condition::InContext),
        other => Err(format!("unknown condition `{other}` (expected ooc or ic)")),
    }
}

fn parse_input_mode(s: &str) -> Result<InputMode, String> {
    match s {
        "target_only" => Ok(InputMode::TargetOnly),
        "with_context" => Ok(InputMode::WithContext),
        other => Err(format!(
            "unknown input mode `{other}` (expected target_only or with_context)"
        )),
    }
}

fn parse_scale(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("scale `{s}` must look like `0,1`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad scale low: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad scale high: {e}"))?;
    if !(lo < hi) {
        return Err(format!("scale ({lo}, {hi}) is not an increasing interval"));
    }
    Ok((lo, hi))
}

// ---------------------------------------------------------------------------
// Run configuration file
// ---------------------------------------------------------------------------

/// On-disk run configuration; every command-line flag overrides its
/// corresponding field.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    model: ModelSection,
    train: TrainSection,
    run: RunSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ModelSection {
    max_len: Option<usize>,
    filters: Option<usize>,
    width: Option<usize>,
    dilation: Option<usize>,
    layers: Option<usize>,
    lstm_hidden: Option<usize>,
    fc_hidden: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainSection {
    epochs: Option<usize>,
    batch_size: Option<usize>,
    patience: Option<usize>,
    validation_fraction: Option<f64>,
    learning_rate: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    regimen: Option<String>,
    input_mode: Option<String>,
    test_fraction: Option<f64>,
}

impl RunConfig {
    fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    fn encoder(&self, input_mode: InputMode, dim: usize, flags: &TrainOverrides) -> EncoderConfig {
        let mut cfg = EncoderConfig::default_for(input_mode, dim);
        let m = &self.model;
        if let Some(v) = m.max_len {
            cfg.max_len = v;
        }
        if let Some(v) = m.filters {
            cfg.cnn.filters = v;
        }
        if let Some(v) = m.width {
            cfg.cnn.width = v;
        }
        if let Some(v) = m.dilation {
            cfg.cnn.dilation = v;
        }
        if let Some(v) = m.layers {
            cfg.cnn.layers = v;
        }
        if let Some(v) = m.lstm_hidden {
            cfg.lstm_hidden = v;
        }
        if let Some(v) = m.fc_hidden {
            cfg.fc_sizes[0] = v;
        }
        if let Some(v) = flags.max_len {
            cfg.max_len = v;
        }
        cfg
    }

    fn train_config(&self, seed: u64, flags: &TrainOverrides) -> TrainConfig {
        let mut cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let t = &self.train;
        if let Some(v) = t.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = t.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = t.patience {
            cfg.patience = v;
        }
        if let Some(v) = t.validation_fraction {
            cfg.validation_fraction = v;
        }
        if let Some(v) = t.learning_rate {
            cfg.hyper.learning_rate = v;
        }
        if let Some(v) = flags.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = flags.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = flags.patience {
            cfg.patience = v;
        }
        if let Some(v) = flags.learning_rate {
            cfg.hyper.learning_rate = v;
        }
        cfg
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64> {
        flag.or(self.train.seed)
            .ok_or_else(|| anyhow!("a seed is required: pass --seed or set train.seed in the config file"))
    }

    fn input_mode(&self, flag: Option<InputMode>) -> Result<Option<InputMode>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.run
            .input_mode
            .as_deref()
            .map(|s| parse_input_mode(s).map_err(|e| anyhow!(e)))
            .transpose()
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Write a file atomically: to a temporary sibling first, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn load_corpus(path: &Path, condition: Option<Condition>) -> Result<Corpus> {
    let format = CorpusFormat::from_path(path);
    let corpus = match condition {
        Some(c) => Corpus::load_condition(path, format, c),
        None => Corpus::load(path, format),
    }
    .with_context(|| format!("loading corpus {}", path.display()))?;
    Ok(corpus)
}

fn load_embeddings(path: &Path, text: bool) -> Result<(EmbeddingTable, String)> {
    let format = if text {
        EmbeddingFormat::Text
    } else {
        EmbeddingFormat::Binary
    };
    let table = EmbeddingTable::load(path, format)
        .with_context(|| format!("loading embeddings {}", path.display()))?;
    let bytes = fs::read(path)?;
    let hash = format!("sha256:{:x}", Sha256::digest(&bytes));
    Ok((table, hash))
}

fn timestamp_comment(deterministic: bool) -> Option<String> {
    if deterministic {
        return None;
    }
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Some(format!("generated at unix time {secs}"))
}

/// Per-pair scores: any report carrying a `per_pair` map of scored entries
/// (training and evaluation reports both qualify) or a bare pair-to-score
/// map.
#[derive(Deserialize)]
#[serde(untagged)]
enum ScoresFile {
    Report { per_pair: BTreeMap<String, ScoredPair> },
    Map(BTreeMap<String, f64>),
}

#[derive(Deserialize)]
struct ScoredPair {
    score: f64,
}

fn load_scores(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading scores {}", path.display()))?;
    if let Ok(parsed) = serde_json::from_str::<ScoresFile>(&text) {
        return Ok(match parsed {
            ScoresFile::Report { per_pair } => {
                per_pair.into_iter().map(|(id, p)| (id, p.score)).collect()
            }
            ScoresFile::Map(map) => map,
        });
    }
    // aggregated means written by `annotations aggregate` (JSON lines)
    read_means_file(path).with_context(|| {
        format!(
            "parsing scores {}: expected a report with per-pair scores, a pair-to-score map, or aggregated mean lines",
            path.display()
        )
    })
}

/// Align two score maps on their shared pair ids, sorted by id.
fn paired_scores(
    ooc: &BTreeMap<String, f64>,
    ic: &BTreeMap<String, f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (id, o) in ooc {
        if let Some(i) = ic.get(id) {
            xs.push(*o);
            ys.push(*i);
        }
    }
    if xs.is_empty() {
        bail!("the two score files share no pair ids");
    }
    Ok((xs, ys))
}

#[derive(Serialize, Deserialize)]
struct MeanLine {
    pair_id: String,
    mean: f64,
    annotators: usize,
}

fn read_means_file(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading means {}", path.display()))?;
    let mut means = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: MeanLine = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        means.insert(parsed.pair_id, parsed.mean);
    }
    if means.is_empty() {
        bail!("{} holds no mean records", path.display());
    }
    Ok(means)
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn cmd_corpus_validate(args: &CorpusIoArgs) -> Result<()> {
    let corpus = load_corpus(&args.input, args.condition)?;
    let with_context = corpus
        .pairs()
        .iter()
        .filter(|p| p.condition() == Condition::InContext)
        .count();
    println!(
        "ok: {} pairs ({} in context, {} out of context)",
        corpus.len(),
        with_context,
        corpus.len() - with_context
    );
    match corpus.class_distribution() {
        Ok(dist) => {
            let parts: Vec<String> = dist.iter().map(|(c, n)| format!("{c}: {n}")).collect();
            println!("class distribution: {}", parts.join(", "));
        }
        Err(_) => {
            let missing = corpus
                .pairs()
                .iter()
                .filter(|p| corpus.mean(&p.pair_id).is_none())
                .count();
            println!("note: {missing} pairs lack a mean rating");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CorpusStats {
    pairs: usize,
    groups: usize,
    in_context: usize,
    out_of_context: usize,
    pairs_with_means: usize,
    class_distribution: Option<BTreeMap<String, usize>>,
    mean_of_means: Option<f64>,
}

fn cmd_corpus_stats(args: &CorpusIoArgs) -> Result<()> {
    let corpus = load_corpus(&args.input, args.condition)?;
    let groups: std::collections::BTreeSet<&str> = corpus
        .pairs()
        .iter()
        .map(|p| p.group_id.as_str())
        .collect();
    let in_context = corpus
        .pairs()
        .iter()
        .filter(|p| p.condition() == Condition::InContext)
        .count();
    let with_means = corpus
        .pairs()
        .iter()
        .filter(|p| corpus.mean(&p.pair_id).is_some())
        .count();
    let class_distribution = corpus.class_distribution().ok().map(|dist| {
        dist.into_iter()
            .map(|(c, n)| (c.value().to_string(), n))
            .collect()
    });
    let mean_of_means = (with_means == corpus.len() && !corpus.is_empty()).then(|| {
        corpus.means().values().sum::<f64>() / corpus.len() as f64
    });
    let stats = CorpusStats {
        pairs: corpus.len(),
        groups: groups.len(),
        in_context,
        out_of_context: corpus.len() - in_context,
        pairs_with_means: with_means,
        class_distribution,
        mean_of_means,
    };
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

#[derive(Serialize)]
struct RogueReport {
    total_annotators: usize,
    flagged: Vec<FlaggedAnnotator>,
}

fn cmd_aggregate(args: &AggregateArgs) -> Result<()> {
    let records = read_ratings_csv(&args.ratings)
        .with_context(|| format!("reading ratings {}", args.ratings.display()))?;
    let traps = read_traps_json(&args.traps)
        .with_context(|| format!("reading traps {}", args.traps.display()))?;
    let total_annotators = records
        .iter()
        .map(|r| r.annotator_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let (kept, flagged) = filter_rogues(&records, &traps, &RoguePolicy::default())?;
    let condition_records: Vec<_> = kept
        .iter()
        .filter(|r| r.condition == args.condition)
        .cloned()
        .collect();
    if condition_records.is_empty() {
        bail!("no {} ratings survive rogue filtering", args.condition);
    }
    let aggregate = aggregate_means(&condition_records, args.condition)?;

    let mut lines = String::new();
    for (pair_id, mean) in &aggregate.means {
        let line = MeanLine {
            pair_id: pair_id.clone(),
            mean: *mean,
            annotators: aggregate.annotator_counts[pair_id],
        };
        lines.push_str(&serde_json::to_string(&line)?);
        lines.push('\n');
    }
    write_atomic(&args.out, lines.as_bytes())?;
    let rogue_path = args.out.with_extension("rogues.json");
    write_json(
        &rogue_path,
        &RogueReport {
            total_annotators,
            flagged: flagged.clone(),
        },
    )?;
    log::info!(
        "flagged {} of {} annotators; kept {} of {} ratings",
        flagged.len(),
        total_annotators,
        kept.len(),
        records.len()
    );
    println!(
        "wrote {} pair means to {} (rogue report: {})",
        aggregate.means.len(),
        args.out.display(),
        rogue_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct CompareReport {
    pairs: usize,
    pearson: Option<f64>,
    counts: [[usize; 4]; 4],
    proportions: [[f64; 4]; 4],
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let ooc = read_means_file(&args.ooc)?;
    let ic = read_means_file(&args.ic)?;
    let matrix = transition_matrix(&ooc, &ic)?;
    let xs: Vec<f64> = ooc.values().copied().collect();
    let ys: Vec<f64> = ic.values().copied().collect();
    let r = pearson(&xs, &ys)?;
    let report = CompareReport {
        pairs: ooc.len(),
        pearson: r,
        counts: matrix.counts,
        proportions: matrix.proportions,
    };
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

#[derive(Serialize)]
struct EmbeddingInfo {
    dimension: usize,
    vocabulary: usize,
    sample: Vec<String>,
}

fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let (table, hash) = load_embeddings(&args.input, args.text)?;
    let info = EmbeddingInfo {
        dimension: table.dimension(),
        vocabulary: table.len(),
        sample: table.tokens().take(args.limit).map(String::from).collect(),
    };
    println!("{}", serde_json::to_string_pretty(&info)?);
    log::info!("embedding file hash {hash}");
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let config = RunConfig::load(args.config.as_deref())?;
    let regimen_name = args
        .regimen
        .clone()
        .or_else(|| config.run.regimen.clone())
        .ok_or_else(|| anyhow!("a regimen is required: pass --regimen or set run.regimen"))?;
    let regimen = Regimen::parse(&regimen_name)
        .ok_or_else(|| anyhow!("unknown regimen `{regimen_name}` (expected e.g. ooc-ic)"))?;
    let seed = config.seed(args.seed)?;

    let needs = |c: Condition| regimen.train_set == c || regimen.test_set == c;
    let load_side = |path: &Option<PathBuf>, c: Condition| -> Result<Corpus> {
        match (path, needs(c)) {
            (Some(p), _) => load_corpus(p, Some(c)),
            (None, false) => Ok(Corpus::empty()),
            (None, true) => bail!("regimen {regimen} needs --{c} <corpus>"),
        }
    };
    let ooc = load_side(&args.ooc, Condition::OutOfContext)?;
    let ic = load_side(&args.ic, Condition::InContext)?;
    let (table, hash) = load_embeddings(&args.embeddings, args.text_embeddings)?;

    let input_mode = config
        .input_mode(args.overrides.input_mode)?
        .unwrap_or_else(|| regimen.default_input_mode());
    let options = RegimenOptions {
        encoder: Some(config.encoder(input_mode, table.dimension(), &args.overrides)),
        train: config.train_config(seed, &args.overrides),
        input_mode: Some(input_mode),
        test_fraction: config.run.test_fraction.unwrap_or(0.2),
        embedding_hash: Some(hash),
    };

    log::info!("training regimen {regimen} with seed {seed}");
    let (report, _model, outcome) = run_regimen(regimen, &ooc, &ic, &table, &options)?;

    fs::create_dir_all(&args.out)?;
    let ckpt_path = args.out.join("checkpoint.bin");
    let tmp = tempfile::NamedTempFile::new_in(&args.out)?;
    save_checkpoint(tmp.path(), &outcome.checkpoint)?;
    tmp.persist(&ckpt_path)
        .with_context(|| format!("writing {}", ckpt_path.display()))?;

    let report_path = args.out.join("report.json");
    write_json(&report_path, &report)?;
    let log_path = args.out.join("training_log.csv");
    let log_tmp = tempfile::NamedTempFile::new_in(&args.out)?;
    write_training_log(log_tmp.path(), &outcome.log)?;
    log_tmp
        .persist(&log_path)
        .with_context(|| format!("writing {}", log_path.display()))?;

    println!(
        "regimen {}: F = {:.4}, Pearson = {}, best epoch {} of {}",
        regimen,
        report.f_score,
        report
            .pearson
            .map_or("undefined".to_string(), |r| format!("{r:.4}")),
        report.best_epoch,
        report.epochs_run
    );
    println!(
        "wrote {}, {}, {}",
        ckpt_path.display(),
        report_path.display(),
        log_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    f_score: f64,
    pearson: Option<f64>,
    grouped_pearson: Option<f64>,
    grouped_pearson_used: usize,
    grouped_pearson_skipped: usize,
    per_pair: BTreeMap<String, mpat_core::experiments::PairEval>,
    checkpoint_seed: u64,
    embedding_hash: String,
    model: serde_json::Value,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let ckpt = load_checkpoint(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let mut model = MpatModel::from_checkpoint(&ckpt)?;
    if let Some(mode) = args.input_mode {
        model.input_mode = mode;
    }
    let corpus = load_corpus(&args.corpus, args.condition)?;
    let (table, hash) = load_embeddings(&args.embeddings, args.text_embeddings)?;
    let evaluation = evaluate(&model, &corpus, &table)?;
    let output = EvalOutput {
        f_score: evaluation.f_score,
        pearson: evaluation.pearson,
        grouped_pearson: evaluation.grouped_pearson,
        grouped_pearson_used: evaluation.grouped_pearson_used,
        grouped_pearson_skipped: evaluation.grouped_pearson_skipped,
        per_pair: evaluation.per_pair,
        checkpoint_seed: ckpt.seed,
        embedding_hash: hash,
        model: serde_json::to_value(model.descriptor())?,
    };
    write_json(&args.out, &output)?;
    println!(
        "evaluated {} pairs: F = {:.4}, Pearson = {}",
        output.per_pair.len(),
        output.f_score,
        output
            .pearson
            .map_or("undefined".to_string(), |r| format!("{r:.4}"))
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_crossval(args: &CrossvalArgs) -> Result<()> {
    let config = RunConfig::load(args.config.as_deref())?;
    let seed = config.seed(args.seed)?;
    let corpus = load_corpus(&args.corpus, Some(args.condition))?;
    let (table, hash) = load_embeddings(&args.embeddings, args.text_embeddings)?;
    let input_mode = config.input_mode(args.overrides.input_mode)?;
    let resolved_mode = input_mode.unwrap_or_else(|| {
        Regimen {
            train_set: args.condition,
            test_set: args.condition,
        }
        .default_input_mode()
    });
    let options = RegimenOptions {
        encoder: Some(config.encoder(resolved_mode, table.dimension(), &args.overrides)),
        train: config.train_config(seed, &args.overrides),
        input_mode: Some(resolved_mode),
        test_fraction: config.run.test_fraction.unwrap_or(0.2),
        embedding_hash: Some(hash),
    };
    log::info!(
        "cross-validating {} folds on {} pairs with seed {seed}",
        args.k,
        corpus.len()
    );
    let report = crossval(&corpus, args.k, args.condition, &table, &options)?;

    fs::create_dir_all(&args.out)?;
    for (i, fold) in report.folds.iter().enumerate() {
        write_json(&args.out.join(format!("fold_{i:02}.json")), fold)?;
    }
    write_json(&args.out.join("crossval.json"), &report)?;
    println!(
        "{}-fold: F = {:.4} ± {:.4}, Pearson = {}",
        args.k,
        report.mean_f,
        report.std_f,
        match (report.mean_pearson, report.std_pearson) {
            (Some(m), Some(s)) => format!("{m:.4} ± {s:.4}"),
            _ => "undefined".to_string(),
        }
    );
    println!("wrote {}", args.out.join("crossval.json").display());
    Ok(())
}

fn cmd_analyze_compression(args: &CompressionArgs) -> Result<()> {
    let ooc = load_scores(&args.ooc_scores)?;
    let ic = load_scores(&args.ic_scores)?;
    let (xs, ys) = paired_scores(&ooc, &ic)?;
    let summary = summarize(&xs, &ys, args.boundary, args.scale)?;
    let fit = linreg(&xs, &ys)?;

    fs::create_dir_all(&args.out)?;
    let summary_path = args.out.join("summary.json");
    write_json(&summary_path, &summary)?;
    let chart = render_scatter(
        &xs,
        &ys,
        &fit,
        &ScatterOptions {
            scale: args.scale,
            comment: timestamp_comment(args.deterministic),
            ..ScatterOptions::default()
        },
    )?;
    let chart_path = args.out.join("scatter.svg");
    write_atomic(&chart_path, chart.as_bytes())?;

    println!(
        "slope {:.4}, intercept {:.4}, fixed point {}, compressive: {}",
        summary.slope,
        summary.intercept,
        summary
            .verdict
            .fixed_point
            .map_or("none".to_string(), |fp| format!("{fp:.4}")),
        summary.verdict.compressive
    );
    println!(
        "wrote {} and {}",
        summary_path.display(),
        chart_path.display()
    );
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let ooc = load_scores(&args.ooc_scores)?;
    let ic = load_scores(&args.ic_scores)?;
    let (xs, ys) = paired_scores(&ooc, &ic)?;
    let fit = linreg(&xs, &ys)?;
    let chart = render_scatter(
        &xs,
        &ys,
        &fit,
        &ScatterOptions {
            scale: args.scale,
            comment: timestamp_comment(args.deterministic),
            ..ScatterOptions::default()
        },
    )?;
    write_atomic(&args.out, chart.as_bytes())?;
    println!("wrote {} ({} points)", args.out.display(), xs.len());
    Ok(())
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<()> {
    use rand::{Rng, SeedableRng};

    // reduced composite model with smooth activations, so finite differences
    // are meaningful everywhere
    let config = EncoderConfig {
        max_len: 12,
        embedding_dim: 8,
        cnn: CnnConfig {
            filters: 4,
            width: 3,
            dilation: 1,
            layers: 2,
        },
        lstm_hidden: 8,
        fc_sizes: [8, 10],
        hidden_activation: mpat_core::nn::Activation::Tanh,
    };
    let mut model = MpatModel::new(config, InputMode::TargetOnly, args.seed)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed ^ 0x9e3779b97f4a7c15);
    let mut sentence = |len: usize| {
        let mut matrix = mpat_core::nn::Tensor::zeros(&[12, 8]);
        for v in matrix.data_mut().iter_mut().take(len * 8) {
            *v = rng.gen_range(-0.8..0.8);
        }
        mpat_core::embeddings::EncodedSentence {
            matrix,
            valid_length: len,
        }
    };
    let a = sentence(9);
    let b = sentence(7);

    let (_, _, grads) = model.loss_and_grads(&a, &b, true)?;
    let analytic = grads.into_named();
    let err = grad_check(
        &mut model,
        &analytic,
        move |m: &MpatModel| Ok::<_, mpat_core::model::ModelError>(m.loss_and_grads(&a, &b, true)?.0),
        args.step,
    )?;
    println!("max relative error: {err:.3e} (tolerance {:.1e})", args.tolerance);
    if err >= args.tolerance {
        bail!("gradient check failed: {err:.3e} >= {:.1e}", args.tolerance);
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Corpus(CorpusCmd::Validate(args)) => cmd_corpus_validate(args),
        Cmd::Corpus(CorpusCmd::Stats(args)) => cmd_corpus_stats(args),
        Cmd::Annotations(AnnotationsCmd::Aggregate(args)) => cmd_aggregate(args),
        Cmd::Annotations(AnnotationsCmd::Compare(args)) => cmd_compare(args),
        Cmd::Embeddings(EmbeddingsCmd::Inspect(args)) => cmd_inspect(args),
        Cmd::Train(args) => cmd_train(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Crossval(args) => cmd_crossval(args),
        Cmd::Analyze(AnalyzeCmd::Compression(args)) => cmd_analyze_compression(args),
        Cmd::Plot(args) => cmd_plot(args),
        Cmd::Gradcheck(args) => cmd_gradcheck(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
