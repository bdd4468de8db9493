//! End-to-end tests that drive the `mpat` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mpat_core::corpus::{Corpus, CorpusFormat, PairRecord};
use mpat_core::embeddings::{EmbeddingFormat, EmbeddingTable};

fn mpat() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mpat"));
    cmd.env_remove("MPAT_OUT_DIR");
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Separable corpus: positive candidates carry `same`, negatives `other`.
fn write_corpus(path: &Path, n: usize) {
    let mut pairs = Vec::new();
    let mut means = BTreeMap::new();
    for i in 0..n {
        let positive = i % 2 == 0;
        let marker = if positive { "same" } else { "other" };
        let id = format!("s{i}");
        let w = |k: usize| format!("w{}", k % 8);
        pairs.push(
            PairRecord::new(
                &id,
                format!("g{}", i / 5),
                format!("{} {} {}", w(i), w(i + 1), w(i + 2)),
                format!("{} {marker} {} {}", w(i + 1), w(i + 3), w(i + 4)),
                None,
                None,
            )
            .unwrap(),
        );
        means.insert(id, if positive { 3.6 } else { 1.4 });
    }
    Corpus::new(pairs, means)
        .unwrap()
        .save(path, CorpusFormat::JsonLines)
        .unwrap();
}

fn write_embeddings(path: &Path) {
    let mut entries = Vec::new();
    for i in 0..8 {
        let mut v = vec![0.0f32; 8];
        v[i] = 1.0;
        entries.push((format!("w{i}"), v));
    }
    let mut same = vec![0.0f32; 8];
    same[0] = 1.5;
    same[7] = 1.5;
    entries.push(("same".to_string(), same));
    let mut other = vec![0.0f32; 8];
    other[0] = -1.5;
    other[7] = -1.5;
    entries.push(("other".to_string(), other));
    EmbeddingTable::from_entries(8, entries)
        .unwrap()
        .write(path, EmbeddingFormat::Binary)
        .unwrap();
}

fn write_run_config(path: &Path) {
    fs::write(
        path,
        "[model]\n\
         max_len = 10\n\
         filters = 6\n\
         width = 3\n\
         dilation = 1\n\
         layers = 1\n\
         lstm_hidden = 8\n\
         fc_hidden = 8\n\
         \n\
         [train]\n\
         epochs = 12\n\
         batch_size = 4\n\
         patience = 0\n\
         validation_fraction = 0.0\n\
         learning_rate = 0.01\n",
    )
    .unwrap();
}

#[test]
fn help_lists_every_subcommand() {
    let out = mpat().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    for name in [
        "corpus",
        "annotations",
        "embeddings",
        "train",
        "eval",
        "crossval",
        "analyze",
        "plot",
        "gradcheck",
    ] {
        assert!(text.contains(name), "--help is missing `{name}`:\n{text}");
    }
}

#[test]
fn unknown_subcommand_exits_with_code_two() {
    let out = mpat().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn corpus_validate_accepts_good_and_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.jsonl");
    write_corpus(&good, 6);
    let out = mpat().args(["corpus", "validate", "--input"]).arg(&good).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("ok: 6 pairs"));
    assert!(stdout(&out).contains("class distribution"));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"pair_id\": \"x\"}\n").unwrap();
    let out = mpat().args(["corpus", "validate", "--input"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error:"));
}

#[test]
fn corpus_stats_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    write_corpus(&path, 10);
    let out = mpat().args(["corpus", "stats", "--input"]).arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let stats: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["pairs"], 10);
    assert_eq!(stats["groups"], 2);
    assert_eq!(stats["pairs_with_means"], 10);
}

#[test]
fn embeddings_inspect_reports_dimension_and_vocab() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.bin");
    write_embeddings(&path);
    let out = mpat()
        .args(["embeddings", "inspect", "--limit", "3", "--input"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let info: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(info["dimension"], 8);
    assert_eq!(info["vocabulary"], 10);
    assert_eq!(info["sample"].as_array().unwrap().len(), 3);
}

#[test]
fn train_writes_checkpoint_report_and_log_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("ooc.jsonl");
    let emb = dir.path().join("emb.bin");
    let cfg = dir.path().join("cfg.toml");
    write_corpus(&corpus, 20);
    write_embeddings(&emb);
    write_run_config(&cfg);

    let run = |out_dir: &Path| {
        let out = mpat()
            .args(["train", "--regimen", "ooc-ooc"])
            .arg("--ooc")
            .arg(&corpus)
            .arg("--embeddings")
            .arg(&emb)
            .arg("--config")
            .arg(&cfg)
            .args(["--seed", "5"])
            .arg("--out")
            .arg(out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        out
    };
    let out_a = dir.path().join("run_a");
    let out_b = dir.path().join("run_b");
    run(&out_a);
    run(&out_b);

    for name in ["checkpoint.bin", "report.json", "training_log.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["per_pair"].as_object().unwrap().len(), 4);
    assert!(report["embedding_hash"].as_str().unwrap().starts_with("sha256:"));
    let log = fs::read_to_string(out_a.join("training_log.csv")).unwrap();
    assert!(log.starts_with("epoch,loss,val_f"));
    assert_eq!(log.lines().count(), 13);
}

#[test]
fn eval_scores_a_corpus_with_a_trained_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("ooc.jsonl");
    let emb = dir.path().join("emb.bin");
    let cfg = dir.path().join("cfg.toml");
    write_corpus(&corpus, 16);
    write_embeddings(&emb);
    write_run_config(&cfg);
    let run_dir = dir.path().join("run");
    let out = mpat()
        .args(["train", "--regimen", "ooc-ooc"])
        .arg("--ooc")
        .arg(&corpus)
        .arg("--embeddings")
        .arg(&emb)
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "9"])
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let report_path = dir.path().join("eval.json");
    let out = mpat()
        .arg("eval")
        .arg("--checkpoint")
        .arg(run_dir.join("checkpoint.bin"))
        .arg("--corpus")
        .arg(&corpus)
        .args(["--condition", "ooc"])
        .arg("--embeddings")
        .arg(&emb)
        .arg("--out")
        .arg(&report_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["per_pair"].as_object().unwrap().len(), 16);
    assert_eq!(report["checkpoint_seed"], 9);
}

#[test]
fn train_requires_a_seed_somewhere() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("ooc.jsonl");
    let emb = dir.path().join("emb.bin");
    write_corpus(&corpus, 8);
    write_embeddings(&emb);
    let out = mpat()
        .args(["train", "--regimen", "ooc-ooc"])
        .arg("--ooc")
        .arg(&corpus)
        .arg("--embeddings")
        .arg(&emb)
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));
}

#[test]
fn out_dir_defaults_to_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("ooc.jsonl");
    let emb = dir.path().join("emb.bin");
    let cfg = dir.path().join("cfg.toml");
    write_corpus(&corpus, 12);
    write_embeddings(&emb);
    write_run_config(&cfg);
    let out_dir = dir.path().join("from_env");
    let out = mpat()
        .env("MPAT_OUT_DIR", &out_dir)
        .args(["train", "--regimen", "ooc-ooc"])
        .arg("--ooc")
        .arg(&corpus)
        .arg("--embeddings")
        .arg(&emb)
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("report.json").exists());
}

#[test]
fn crossval_writes_per_fold_and_aggregate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("ooc.jsonl");
    let emb = dir.path().join("emb.bin");
    let cfg = dir.path().join("cfg.toml");
    write_corpus(&corpus, 12);
    write_embeddings(&emb);
    write_run_config(&cfg);
    let out_dir = dir.path().join("cv");
    let out = mpat()
        .arg("crossval")
        .arg("--corpus")
        .arg(&corpus)
        .args(["--condition", "ooc", "--k", "3", "--seed", "4"])
        .arg("--embeddings")
        .arg(&emb)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    for i in 0..3 {
        assert!(out_dir.join(format!("fold_{i:02}.json")).exists());
    }
    let agg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("crossval.json")).unwrap()).unwrap();
    assert_eq!(agg["folds"].as_array().unwrap().len(), 3);
    assert!(agg["mean_f"].is_number());
}

#[test]
fn aggregate_and_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("ratings.csv");
    let traps = dir.path().join("traps.json");
    let mut csv = String::from("annotator_id,pair_id,condition,score\n");
    // three honest annotators, one rogue who misses the low trap
    for (ann, base) in [("a1", 2), ("a2", 3), ("a3", 2)] {
        for (i, pair) in ["p1", "p2", "p3", "p4"].iter().enumerate() {
            for cond in ["ooc", "ic"] {
                csv.push_str(&format!(
                    "{ann},{pair},{cond},{}\n",
                    1 + (base + i) % 4
                ));
            }
        }
        for cond in ["ooc", "ic"] {
            csv.push_str(&format!("{ann},trap-low,{cond},1\n{ann},trap-high,{cond},4\n"));
        }
    }
    for pair in ["p1", "p2", "p3", "p4", "trap-low", "trap-high"] {
        for cond in ["ooc", "ic"] {
            csv.push_str(&format!("rogue,{pair},{cond},4\n"));
        }
    }
    fs::write(&ratings, csv).unwrap();
    fs::write(
        &traps,
        r#"[{"pair_id": "trap-low", "expected_band": "low"},
           {"pair_id": "trap-high", "expected_band": "high"}]"#,
    )
    .unwrap();

    let run_aggregate = |cond: &str, out: &Path| {
        let output = mpat()
            .args(["annotations", "aggregate", "--condition", cond])
            .arg("--ratings")
            .arg(&ratings)
            .arg("--traps")
            .arg(&traps)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr(&output));
    };
    let means_ooc = dir.path().join("means_ooc.jsonl");
    let means_ic = dir.path().join("means_ic.jsonl");
    run_aggregate("ooc", &means_ooc);
    run_aggregate("ic", &means_ic);

    let rogues: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("means_ooc.rogues.json")).unwrap())
            .unwrap();
    assert_eq!(rogues["total_annotators"], 4);
    assert_eq!(rogues["flagged"].as_array().unwrap().len(), 1);
    assert_eq!(rogues["flagged"][0]["annotator_id"], "rogue");

    let out = mpat()
        .args(["annotations", "compare"])
        .arg("--ooc")
        .arg(&means_ooc)
        .arg("--ic")
        .arg(&means_ic)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["pairs"], 6);
    assert!(report["counts"].as_array().unwrap().len() == 4);
}

#[test]
fn analyze_compression_emits_summary_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let mut ooc = BTreeMap::new();
    let mut ic = BTreeMap::new();
    for i in 0..60 {
        let o = 0.05 + 0.015 * i as f64;
        ooc.insert(format!("p{i}"), o);
        ic.insert(format!("p{i}"), 0.25 + 0.5 * o);
    }
    let ooc_path = dir.path().join("ooc.json");
    let ic_path = dir.path().join("ic.json");
    fs::write(&ooc_path, serde_json::to_string(&ooc).unwrap()).unwrap();
    fs::write(&ic_path, serde_json::to_string(&ic).unwrap()).unwrap();

    let out_dir = dir.path().join("analysis");
    let run = || {
        let out = mpat()
            .args(["analyze", "compression", "--deterministic"])
            .arg("--ooc-scores")
            .arg(&ooc_path)
            .arg("--ic-scores")
            .arg(&ic_path)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        out
    };
    let first = run();
    assert!(stdout(&first).contains("compressive: true"));
    let summary_a = fs::read(out_dir.join("summary.json")).unwrap();
    let chart_a = fs::read(out_dir.join("scatter.svg")).unwrap();
    run();
    assert_eq!(summary_a, fs::read(out_dir.join("summary.json")).unwrap());
    assert_eq!(chart_a, fs::read(out_dir.join("scatter.svg")).unwrap());

    let summary: serde_json::Value = serde_json::from_slice(&summary_a).unwrap();
    assert!((summary["slope"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(summary["verdict"]["compressive"], true);
    let chart = String::from_utf8(chart_a).unwrap();
    assert_eq!(chart.matches("<circle").count(), 60);
    assert!(!chart.contains("<!--"));
}

#[test]
fn plot_includes_timestamp_comment_unless_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scores: BTreeMap<String, f64> =
        (0..5).map(|i| (format!("p{i}"), 0.1 + 0.2 * i as f64)).collect();
    let path = dir.path().join("scores.json");
    fs::write(&path, serde_json::to_string(&scores).unwrap()).unwrap();
    let svg_path = dir.path().join("chart.svg");
    let out = mpat()
        .arg("plot")
        .arg("--ooc-scores")
        .arg(&path)
        .arg("--ic-scores")
        .arg(&path)
        .arg("--out")
        .arg(&svg_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(svg.contains("<!-- generated at unix time"));
}

#[test]
fn gradcheck_passes_within_tolerance() {
    let out = mpat().args(["gradcheck", "--seed", "3"]).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("max relative error"));
}

#[test]
fn analyze_accepts_eval_output_and_aggregated_means() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("ooc.jsonl");
    let emb = dir.path().join("emb.bin");
    let cfg = dir.path().join("cfg.toml");
    write_corpus(&corpus, 16);
    write_embeddings(&emb);
    write_run_config(&cfg);
    let run_dir = dir.path().join("run");
    let out = mpat()
        .args(["train", "--regimen", "ooc-ooc"])
        .arg("--ooc")
        .arg(&corpus)
        .arg("--embeddings")
        .arg(&emb)
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "9"])
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let eval_path = dir.path().join("eval.json");
    let out = mpat()
        .arg("eval")
        .arg("--checkpoint")
        .arg(run_dir.join("checkpoint.bin"))
        .arg("--corpus")
        .arg(&corpus)
        .args(["--condition", "ooc"])
        .arg("--embeddings")
        .arg(&emb)
        .arg("--out")
        .arg(&eval_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    // training report and evaluation output are both valid score sources
    let analysis = dir.path().join("analysis");
    let out = mpat()
        .args(["analyze", "compression", "--deterministic"])
        .arg("--ooc-scores")
        .arg(run_dir.join("report.json"))
        .arg("--ic-scores")
        .arg(&eval_path)
        .arg("--out")
        .arg(&analysis)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(analysis.join("summary.json").exists());

    // aggregated mean lines work directly, on the 1-4 scale
    let means_a = dir.path().join("a.jsonl");
    let means_b = dir.path().join("b.jsonl");
    let line = |id: usize, mean: f64| {
        format!("{{\"pair_id\":\"m{id}\",\"mean\":{mean},\"annotators\":5}}\n")
    };
    let a: String = (0..8).map(|i| line(i, 1.2 + 0.35 * i as f64)).collect();
    let b: String = (0..8).map(|i| line(i, 1.9 + 0.2 * i as f64)).collect();
    fs::write(&means_a, a).unwrap();
    fs::write(&means_b, b).unwrap();
    let analysis2 = dir.path().join("analysis2");
    let out = mpat()
        .args(["analyze", "compression", "--deterministic"])
        .arg("--ooc-scores")
        .arg(&means_a)
        .arg("--ic-scores")
        .arg(&means_b)
        .args(["--scale", "1,4", "--boundary", "2.5"])
        .arg("--out")
        .arg(&analysis2)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = fs::read_to_string(analysis2.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(parsed["n"], 8);

    // anything else is rejected with a format hint
    let bogus = dir.path().join("bogus.txt");
    fs::write(&bogus, "not scores at all").unwrap();
    let out = mpat()
        .args(["analyze", "compression"])
        .arg("--ooc-scores")
        .arg(&bogus)
        .arg("--ic-scores")
        .arg(&eval_path)
        .arg("--out")
        .arg(dir.path().join("analysis3"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("pair-to-score map"), "{}", stderr(&out));
}

/// Contextualized corpus whose contexts flip the marker the model keys on.
fn write_ic_corpus(path: &Path, n: usize) {
    let mut pairs = Vec::new();
    let mut means = BTreeMap::new();
    for i in 0..n {
        let positive = i % 2 == 0;
        let marker = if positive { "same" } else { "other" };
        let opposite = if positive { "other" } else { "same" };
        let id = format!("c{i}");
        let w = |k: usize| format!("w{}", k % 8);
        pairs.push(
            PairRecord::new(
                &id,
                format!("g{}", i / 5),
                format!("{} {} {}", w(i), w(i + 1), w(i + 2)),
                format!("{} {marker} {} {}", w(i + 1), w(i + 3), w(i + 4)),
                Some(format!("{} {opposite}", w(i + 5))),
                Some(format!("{opposite} {}", w(i + 6))),
            )
            .unwrap(),
        );
        means.insert(id, if positive { 3.6 } else { 1.4 });
    }
    Corpus::new(pairs, means)
        .unwrap()
        .save(path, CorpusFormat::JsonLines)
        .unwrap();
}

#[test]
fn eval_input_mode_overrides_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let ooc = dir.path().join("ooc.jsonl");
    let ic = dir.path().join("ic.jsonl");
    let emb = dir.path().join("emb.bin");
    let cfg = dir.path().join("cfg.toml");
    write_corpus(&ooc, 16);
    write_ic_corpus(&ic, 16);
    write_embeddings(&emb);
    write_run_config(&cfg);
    let run_dir = dir.path().join("run");
    let out = mpat()
        .args(["train", "--regimen", "ooc-ooc"])
        .arg("--ooc")
        .arg(&ooc)
        .arg("--embeddings")
        .arg(&emb)
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "9"])
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let eval = |extra: &[&str], path: &Path| {
        let out = mpat()
            .arg("eval")
            .arg("--checkpoint")
            .arg(run_dir.join("checkpoint.bin"))
            .arg("--corpus")
            .arg(&ic)
            .args(["--condition", "ic"])
            .arg("--embeddings")
            .arg(&emb)
            .args(extra)
            .arg("--out")
            .arg(path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    };
    let plain_path = dir.path().join("plain.json");
    let forced_path = dir.path().join("forced.json");
    eval(&[], &plain_path);
    eval(&["--input-mode", "with_context"], &forced_path);

    let plain: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&plain_path).unwrap()).unwrap();
    let forced: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&forced_path).unwrap()).unwrap();
    assert_eq!(plain["model"]["input_mode"], "target_only");
    assert_eq!(forced["model"]["input_mode"], "with_context");
    // renderings differ, so at least one pair must score differently
    assert_ne!(plain["per_pair"], forced["per_pair"]);

    // forcing contexts on a corpus without any is a hard error
    let out = mpat()
        .arg("eval")
        .arg("--checkpoint")
        .arg(run_dir.join("checkpoint.bin"))
        .arg("--corpus")
        .arg(&ooc)
        .args(["--condition", "ooc", "--input-mode", "with_context"])
        .arg("--embeddings")
        .arg(&emb)
        .arg("--out")
        .arg(dir.path().join("bad.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no context"), "{}", stderr(&out));

    // unknown mode is a usage error
    let out = mpat()
        .arg("eval")
        .arg("--checkpoint")
        .arg(run_dir.join("checkpoint.bin"))
        .arg("--corpus")
        .arg(&ic)
        .args(["--condition", "ic", "--input-mode", "sideways"])
        .arg("--embeddings")
        .arg(&emb)
        .arg("--out")
        .arg(dir.path().join("bad2.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
