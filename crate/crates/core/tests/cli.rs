mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::ScorerProfile;
use tempfile::{tempdir, TempDir};
use tweetfuse::corpus::write_corpus;
use tweetfuse::fusion::read_fused;
use tweetfuse::scores::{read_scores, write_scores, ScoreSet};

fn tweetfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tweetfuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PROFILE: ScorerProfile = ScorerProfile {
    accuracy: 0.9,
    right: (0.55, 0.95),
    wrong: (0.1, 0.45),
};

/// A labeled corpus plus three score files over it.
struct Fixture {
    dir: TempDir,
    corpus: PathBuf,
    scores: Vec<PathBuf>,
}

fn fixture(n: usize) -> Fixture {
    let dir = tempdir().unwrap();
    let corpus = common::plain_corpus(n, 5);
    let corpus_path = dir.path().join("dev.tsv");
    write_corpus(&corpus, &corpus_path).unwrap();
    let scores = ["bert", "roberta", "xlnet"]
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let p = dir.path().join(format!("{name}.scores"));
            write_scores(&common::synthetic_scores(&corpus, name, PROFILE, i as u64), &p).unwrap();
            p
        })
        .collect();
    Fixture {
        dir,
        corpus: corpus_path,
        scores,
    }
}

#[test]
fn preprocess_writes_one_line_per_tweet() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("in.tsv");
    fs::write(&input, "# header\na\t@anna Flood warning in Venice!! http://t.co/ab 😭\t1\nb\thttp://x.y\n").unwrap();
    let out = dir.path().join("norm.tsv");
    let o = tweetfuse(&["preprocess", "--input", s(&input), "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), "a\tflood warning venice\nb\t\n");
}

#[test]
fn preprocess_missing_input_names_path() {
    let dir = tempdir().unwrap();
    let missing = dir.path().join("nope.tsv");
    let o = tweetfuse(&["preprocess", "--input", s(&missing), "--output", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.tsv"), "{}", stderr(&o));
}

#[test]
fn preprocess_malformed_line_reports_number() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("in.tsv");
    let mut text: String = (1..17).map(|i| format!("id{i}\ttext {i}\t0\n")).collect();
    text.push_str("id17\tbroken\t7\n");
    fs::write(&input, text).unwrap();
    let o = tweetfuse(&["preprocess", "--input", s(&input), "--output", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("17"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(tweetfuse(&[]).status.code(), Some(2));
    assert_eq!(tweetfuse(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tweetfuse(&["preprocess", "--input"]).status.code(), Some(2));
    assert_eq!(tweetfuse(&["evaluate", "--predictions", "p", "--corpus", "c", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn train_score_fuse_evaluate() {
    let dir = tempdir().unwrap();
    let corpus = common::planted_corpus(400, 0.0, 1);
    let train = dir.path().join("train.tsv");
    write_corpus(&corpus, &train).unwrap();
    let model = dir.path().join("nb.json");
    let scores = dir.path().join("nb.scores");
    let fused = dir.path().join("fused.tsv");

    let o = tweetfuse(&["train-baseline", "--corpus", s(&train), "--output", s(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tweetfuse(&["score", "--model", s(&model), "--corpus", s(&train), "--output", s(&scores), "--name", "nb"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let set = read_scores(&scores).unwrap();
    assert_eq!(set.model_name(), "nb");
    assert_eq!(set.len(), corpus.len());
    assert!(corpus.ids().iter().all(|id| set.get(id).is_some()));

    let o = tweetfuse(&["fuse", "--corpus", s(&train), "--scores", s(&scores), "--output", s(&fused)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (name, rows) = read_fused(&fused).unwrap();
    assert_eq!(name, "nb");
    assert_eq!(rows.len(), corpus.len());

    let o = tweetfuse(&["evaluate", "--predictions", s(&fused), "--corpus", s(&train), "--format", "delimited"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("ensemble\tprecision\trecall\tf1\n"));
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn training_on_one_class_fails() {
    let dir = tempdir().unwrap();
    let train = dir.path().join("train.tsv");
    fs::write(&train, "a\tflood\t1\nb\train\t1\n").unwrap();
    let o = tweetfuse(&["train-baseline", "--corpus", s(&train), "--output", s(&dir.path().join("m.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn experiment_grid_sizes() {
    let fx = fixture(60);
    for (min, rows) in [("2", 4), ("1", 7), ("3", 1)] {
        let out_dir = fx.dir.path().join(format!("runs{min}"));
        let mut args = vec!["experiment", "--eval", s(&fx.corpus), "--out-dir", s(&out_dir)];
        args.extend(["--min-ensemble-size", min, "--format", "delimited"]);
        for p in &fx.scores {
            args.extend(["--scores", s(p)]);
        }
        let o = tweetfuse(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), rows + 1, "{}", stdout(&o));
    }
}

#[test]
fn experiment_is_deterministic() {
    let fx = fixture(80);
    let run = |out: &str| {
        let out_dir = fx.dir.path().join(out);
        let mut args = vec!["experiment", "--eval", s(&fx.corpus), "--out-dir", s(&out_dir)];
        for p in &fx.scores {
            args.extend(["--scores", s(p)]);
        }
        let o = tweetfuse(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        let run_dir = fs::read_dir(&out_dir).unwrap().next().unwrap().unwrap().path();
        let mut files: Vec<(String, Vec<u8>)> = walk(&run_dir)
            .into_iter()
            .map(|p| (p.strip_prefix(&run_dir).unwrap().display().to_string(), fs::read(&p).unwrap()))
            .collect();
        files.sort();
        (run_dir.file_name().unwrap().to_owned(), stdout(&o), files)
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    assert_eq!(a.2.len(), 3 + 4, "config, two reports, four prediction files");
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn experiment_refuses_to_overwrite() {
    let fx = fixture(20);
    let out_dir = fx.dir.path().join("runs");
    let mut args = vec!["experiment", "--eval", s(&fx.corpus), "--out-dir", s(&out_dir)];
    for p in &fx.scores {
        args.extend(["--scores", s(p)]);
    }
    assert!(tweetfuse(&args).status.success());
    assert_eq!(tweetfuse(&args).status.code(), Some(1));
    args.push("--overwrite");
    assert!(tweetfuse(&args).status.success());
}

#[test]
fn experiment_missing_score_names_model_and_id() {
    let fx = fixture(20);
    let roberta = read_scores(&fx.scores[1]).unwrap();
    let trimmed = ScoreSet::from_scores(
        "roberta",
        roberta.iter().filter(|v| v.tweet_id != "p00007").cloned(),
    )
    .unwrap();
    write_scores(&trimmed, &fx.scores[1]).unwrap();
    let mut args = vec!["experiment", "--eval", s(&fx.corpus)];
    let out_dir = fx.dir.path().join("runs");
    args.extend(["--out-dir", s(&out_dir)]);
    for p in &fx.scores {
        args.extend(["--scores", s(p)]);
    }
    let o = tweetfuse(&args);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("roberta") && err.contains("p00007"), "{err}");
}

#[test]
fn experiment_from_config_file_with_flag_override() {
    let fx = fixture(40);
    let cfg = fx.dir.path().join("exp.conf");
    let mut text = String::from("# grid over all three\neval = dev.tsv\nmin_ensemble_size = 1\nout_dir = runs\n");
    for p in &fx.scores {
        text.push_str(&format!("scores = {}\n", p.file_name().unwrap().to_str().unwrap()));
    }
    fs::write(&cfg, text).unwrap();

    let o = tweetfuse(&["experiment", "--config", s(&cfg), "--format", "delimited"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 8);
    assert!(fx.dir.path().join("runs").is_dir());

    let o = tweetfuse(&["experiment", "--config", s(&cfg), "--min-ensemble-size", "3", "--format", "delimited"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn experiment_with_baseline_on_dev_split() {
    let dir = tempdir().unwrap();
    let corpus = common::planted_corpus(2000, 0.0, 11);
    let train = dir.path().join("all.tsv");
    write_corpus(&corpus, &train).unwrap();
    let out_dir = dir.path().join("runs");
    let o = tweetfuse(&[
        "experiment", "--train", s(&train), "--dev-fraction", "0.2", "--seed", "11",
        "--min-ensemble-size", "1", "--format", "delimited", "--out-dir", s(&out_dir),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "ensemble\tprecision\trecall\tf1\nbaseline\t1.0000\t1.0000\t1.0000\n");
}

#[test]
fn split_subcommand() {
    let dir = tempdir().unwrap();
    let corpus = common::plain_corpus(10, 2);
    let input = dir.path().join("all.tsv");
    write_corpus(&corpus, &input).unwrap();
    let (tr, dv) = (dir.path().join("train.tsv"), dir.path().join("dev.tsv"));
    let o = tweetfuse(&["split", "--input", s(&input), "--train-out", s(&tr), "--dev-out", s(&dv), "--dev-fraction", "0.2", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&dv).unwrap().lines().count(), 2);
    assert_eq!(fs::read_to_string(&tr).unwrap().lines().count(), 8);
}
