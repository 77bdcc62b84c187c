use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tashkil::corpus::{compute_stats, load_corpus, Encoding};
use tempfile::TempDir;

fn tashkil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tashkil"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL_SYNTH: &str = r#"
[synth]
vocab_size = 60
verse_count = 40
mean_verse_len = 5.0
"#;

const TINY_DNN: &str = r#"
[neural]
embedding_dim = 6
lstm_state = 6
num_bilstm_layers = 1
max_epochs = 2
"#;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn stats_single_verse_histogram() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("one.txt");
    fs::write(&corpus, "v1\tkataba haA*aA kataba\n").unwrap();
    let out = dir.path().join("stats");
    let o = tashkil(&["stats", p(&corpus), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("stats_one.tsv")).unwrap();
    assert!(report.contains("forms_1_pct\t100.0000"), "{report}");
    assert!(report.contains("most_freq_accuracy\t100.0000"), "{report}");
}

#[test]
fn stats_reports_line_and_column_of_bad_input() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("bad.txt");
    fs::write(&corpus, "v1\tkataba\nv2\tka ~ab\n").unwrap();
    let o = tashkil(&["stats", p(&corpus)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2, column 7"), "{err}");
}

#[test]
fn stats_of_a_pair_includes_overlap() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_SYNTH);
    let data = dir.path().join("data");
    assert!(tashkil(&["synth", "--config", p(&cfg), "--out", p(&data)]).status.success());
    let a = data.join("SYN-A.txt");
    let b = data.join("SYN-B.txt");
    let out = dir.path().join("stats");
    let o = tashkil(&["stats", p(&a), p(&b), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let overlap = fs::read_to_string(out.join("overlap_SYN-A_SYN-B.tsv")).unwrap();
    assert!(overlap.contains("SYN-A\tSYN-B\tvocab_overlap_pct"));
    let report = fs::read_to_string(out.join("stats_SYN-A.tsv")).unwrap();
    assert!(report.contains("test_seen_pct"));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\nlearning_rat = 0.1\n");
    let o = tashkil(&["train", "--config", p(&cfg), "--out", p(&dir.path().join("m"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning_rat"), "{}", stderr(&o));
}

#[test]
fn dnn_training_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("seed = 4\nmodel = \"dnn\"\n{SMALL_SYNTH}{TINY_DNN}"));
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = tashkil(&["train", "--config", p(&cfg), "--out", p(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["model.json", "history.json", "lookup.tsv", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let history = fs::read_to_string(a.join("history.json")).unwrap();
    assert!(history.contains("best_epoch"));
    let copied = fs::read_to_string(a.join("config.toml")).unwrap();
    assert!(copied.contains("seed = 4"), "{copied}");
}

#[test]
fn numerical_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("model = \"dnn\"\n{SMALL_SYNTH}{TINY_DNN}learning_rate = 1e305\n"),
    );
    let o = tashkil(&["train", "--config", p(&cfg), "--out", p(&dir.path().join("m"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

fn train_crf(dir: &Path) -> (PathBuf, PathBuf) {
    let cfg = write_config(
        dir,
        &format!("model = \"crf\"\nbrown_clusters = 8\n{SMALL_SYNTH}\n[crf]\nmax_iter = 40\n"),
    );
    let out = dir.join("crf");
    let o = tashkil(&["train", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let data = dir.join("data");
    assert!(tashkil(&["synth", "--config", p(&cfg), "--out", p(&data)]).status.success());
    (out, data.join("SYN-A.txt"))
}

#[test]
fn hybrid_prediction_matches_lookup_self_accuracy() {
    let dir = TempDir::new().unwrap();
    let (model_dir, corpus_path) = train_crf(dir.path());
    let corpus = load_corpus(&corpus_path, Encoding::Buckwalter, "A").unwrap();
    let stripped: String = corpus
        .verses()
        .iter()
        .map(|v| {
            let bases: Vec<&str> = v.tokens.iter().map(|t| t.base()).collect();
            format!("{}\t{}\n", v.id, bases.join(" "))
        })
        .collect();
    let input = dir.path().join("bare.txt");
    fs::write(&input, stripped).unwrap();
    let output = dir.path().join("pred.txt");
    let o = tashkil(&[
        "predict",
        "--model",
        p(&model_dir.join("model.json")),
        "--hybrid",
        p(&model_dir.join("lookup.tsv")),
        "--input",
        p(&input),
        "--out",
        p(&output),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let predicted = load_corpus(&output, Encoding::Buckwalter, "P").unwrap();
    let (mut n, mut right) = (0, 0);
    for (g, q) in corpus.words().zip(predicted.words()) {
        n += 1;
        right += usize::from(g == q);
    }
    let accuracy = 100.0 * right as f64 / n as f64;
    let self_acc = compute_stats(corpus.words()).unwrap().most_freq_accuracy;
    assert!(accuracy >= self_acc - 1e-9, "{accuracy} < {self_acc}");
}

#[test]
fn empty_input_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    let (model_dir, _) = train_crf(dir.path());
    let input = dir.path().join("empty.txt");
    fs::write(&input, "").unwrap();
    let output = dir.path().join("out.txt");
    let o = tashkil(&[
        "predict",
        "--model",
        p(&model_dir.join("model.json")),
        "--input",
        p(&input),
        "--out",
        p(&output),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(output).unwrap(), "");
}

#[test]
fn unknown_characters_warn_and_still_predict() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("model = \"dnn\"\n{SMALL_SYNTH}{TINY_DNN}"));
    let model = dir.path().join("m");
    assert!(tashkil(&["train", "--config", p(&cfg), "--out", p(&model)]).status.success());
    let input = dir.path().join("in.txt");
    fs::write(&input, "ktb bXt\n").unwrap();
    let o = tashkil(&["predict", "--model", p(&model.join("model.json")), "--input", p(&input)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("warning: line 1") && err.contains("'X'"), "{err}");
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.split_whitespace().count(), 2);
    assert!(out.contains('X'));
}

#[test]
fn diacritized_prediction_input_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (model_dir, _) = train_crf(dir.path());
    let input = dir.path().join("in.txt");
    fs::write(&input, "kataba\n").unwrap();
    let o = tashkil(&["predict", "--model", p(&model_dir.join("model.json")), "--input", p(&input)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_reruns_are_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "k = 2\nmodels = [\"lookup\", \"crf\"]\nbrown_clusters = 8\n{SMALL_SYNTH}\n[crf]\nmax_iter = 30\n"
        ),
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = tashkil(&["experiment", "--config", p(&cfg), "--out", p(&out), "--jobs", "2"]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let mut files: Vec<PathBuf> = Vec::new();
    for sub in ["", "confusion", "errors"] {
        for e in fs::read_dir(a.join(sub)).unwrap() {
            let path = e.unwrap().path();
            if path.is_file() {
                files.push(path.strip_prefix(&a).unwrap().to_path_buf());
            }
        }
    }
    files.sort();
    assert!(files.iter().any(|f| f.ends_with("summary.tsv")));
    assert!(files.iter().any(|f| f.ends_with("crf_joint_SYN-A+SYN-B_SYN-B_fold1.png")));
    assert!(files.iter().any(|f| f.ends_with("lookup_cross_SYN-A_SYN-B_fold0.tsv")));
    for f in &files {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{}", f.display());
    }
    let summary = fs::read_to_string(a.join("summary.tsv")).unwrap();
    assert!(summary.starts_with("model\tregime\ttrain\ttest\tfolds\tcer_error_rate\twer_error_rate\n"));
    assert_eq!(summary.lines().count(), 1 + 2 * 6);
}
