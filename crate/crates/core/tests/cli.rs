use std::path::Path;
use std::process::{Command, Output};

use sentcap::cli::{parse_generated, RunConfig};

fn sentcap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentcap"))
        .args(args)
        .current_dir(dir)
        .env("SENTI_ATTEND_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

#[test]
fn synth_train_generate_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(sentcap(dir, &["synth", "--out", "toy"]));
    let cfg = RunConfig::load(&dir.join("toy/config.toml")).unwrap();
    assert_eq!(cfg.paths.output_dir(), dir.join("toy/run"));

    let trained = ok(sentcap(
        dir,
        &["train", "--config", "toy/config.toml", "--epochs", "4", "--lr", "0.01"],
    ));
    assert!(stdout(&trained).starts_with("trained 4 epochs"));
    assert!(stderr(&trained).contains("# resolved configuration"));
    let run = dir.join("toy/run");
    for f in ["best.ckpt", "last.ckpt", "vocab.txt", "config.toml", "train_log.jsonl"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let log = std::fs::read_to_string(run.join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 4);
    let echoed = RunConfig::load(&run.join("config.toml")).unwrap();
    assert_eq!(echoed.train.epochs, 4);

    let generate = |extra: &[&str]| {
        let mut args = vec!["generate", "--config", "toy/config.toml"];
        args.extend_from_slice(extra);
        ok(sentcap(dir, &args))
    };
    let greedy = stdout(&generate(&[]));
    let beam1 = stdout(&generate(&["--beam", "1"]));
    assert_eq!(greedy, beam1);
    generate(&["--beam", "1", "-o", "gen.tsv"]);
    assert_eq!(std::fs::read_to_string(dir.join("gen.tsv")).unwrap(), greedy);

    let rows = parse_generated(&greedy, "stdout").unwrap();
    let test_images = sentcap::corpus::read_captions(&dir.join("toy/test.tsv")).unwrap();
    let mut ids: Vec<&str> = test_images.iter().map(|c| c.image_id.as_str()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(rows.len(), 2 * ids.len());
    assert!(rows.iter().all(|r| r.log_prob.is_some_and(|lp| lp <= 0.0)));

    let contrastive = parse_generated(&stdout(&generate(&["--contrastive"])), "stdout").unwrap();
    assert_eq!(contrastive.len(), 3 * ids.len());
    let neg = parse_generated(&stdout(&generate(&["--sentiment", "neg", "--beam", "3"])), "stdout").unwrap();
    assert_eq!(neg.len(), ids.len());

    let table = stdout(&ok(sentcap(
        dir,
        &["evaluate", "gen.tsv", "--config", "toy/config.toml"],
    )));
    for label in ["Pos", "Neg", "Avg", "CIDEr"] {
        assert!(table.contains(label), "{label} missing from\n{table}");
    }
    let raw = stdout(&ok(sentcap(
        dir,
        &["evaluate", "gen.tsv", "--config", "toy/config.toml", "--raw"],
    )));
    assert_ne!(raw, table);

    let mismatch = sentcap(dir, &["generate", "--config", "toy/config.toml", "--variant", "attend"]);
    assert_eq!(code(&mismatch), 2);
    assert!(stderr(&mismatch).contains("attend"));

    std::fs::write(dir.join("broken.tsv"), "only-one-field\n").unwrap();
    let broken = sentcap(dir, &["evaluate", "broken.tsv", "--config", "toy/config.toml"]);
    assert_eq!(code(&broken), 3, "{}", stderr(&broken));
    assert!(stderr(&broken).contains("line 1"));

    std::fs::write(dir.join("stranger.tsv"), "nobody\tpos\ta dog\n").unwrap();
    let missing_refs = sentcap(dir, &["evaluate", "stranger.tsv", "--config", "toy/config.toml"]);
    assert_eq!(code(&missing_refs), 3);
    assert!(stderr(&missing_refs).contains("nobody"));
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let missing = sentcap(dir, &["train", "--config", "nope.toml"]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("nope.toml"));

    std::fs::write(dir.join("typo.toml"), "[train]\nlearning_rat = 0.1\n").unwrap();
    let typo = sentcap(dir, &["train", "--config", "typo.toml"]);
    assert_eq!(code(&typo), 2);
    assert!(stderr(&typo).contains("learning_rat"));

    let no_paths = sentcap(dir, &["train"]);
    assert_eq!(code(&no_paths), 2);
    assert!(stderr(&no_paths).contains("paths.features"));

    std::fs::write(
        dir.join("gone.toml"),
        "[paths]\nfeatures = \"missing.saft\"\ntrain = \"t.tsv\"\n",
    )
    .unwrap();
    let gone = sentcap(dir, &["train", "--config", "gone.toml"]);
    assert_eq!(code(&gone), 2);
    assert!(stderr(&gone).contains("missing.saft"));

    assert_eq!(code(&sentcap(dir, &["frobnicate"])), 2);
    assert_eq!(
        code(&sentcap(dir, &["generate", "--sentiment", "pos", "--contrastive"])),
        2
    );
    assert_eq!(code(&sentcap(dir, &["--version"])), 0);
}

#[test]
fn corrupt_features_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(sentcap(dir, &["synth", "--out", "toy"]));
    let f = dir.join("toy/features.saft");
    let bytes = std::fs::read(&f).unwrap();
    std::fs::write(&f, &bytes[..bytes.len() - 3]).unwrap();
    let o = sentcap(dir, &["train", "--config", "toy/config.toml", "--epochs", "1"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn gradcheck_passes_and_refuses_dropout() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let o = ok(sentcap(dir, &["gradcheck", "--variant", "minus-e2l2"]));
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("PASS max_rel_error"), "{out}");
    assert!(out.lines().count() > 10);

    std::fs::write(dir.join("drop.toml"), "[gradcheck]\ndropout_rate = 0.5\n").unwrap();
    let refused = sentcap(dir, &["gradcheck", "--config", "drop.toml"]);
    assert_eq!(code(&refused), 2);
    assert!(stderr(&refused).contains("dropout"));
    assert!(stdout(&refused).is_empty());
}

#[test]
fn reruns_are_byte_identical_and_attend_has_no_sentiment_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(sentcap(dir, &["synth", "--out", "toy"]));
    let train = |out: &str, variant: &str| {
        let cfg = format!("toy/{out}.toml");
        let mut c = RunConfig::load(&dir.join("toy/config.toml")).unwrap();
        c.paths.output_dir = Some(dir.join(out));
        c.save(&dir.join(&cfg)).unwrap();
        ok(sentcap(
            dir,
            &["train", "--config", &cfg, "--epochs", "2", "--variant", variant],
        ));
        let read = |f: &str| std::fs::read(dir.join(out).join(f)).unwrap();
        (read("train_log.jsonl"), read("best.ckpt"), read("last.ckpt"))
    };
    assert_eq!(train("a", "full"), train("b", "full"));

    train("c", "attend");
    let params = sentcap::model::checkpoint::load(&dir.join("c/best.ckpt")).unwrap();
    assert!(
        params.iter().all(|(name, _)| !name.contains("sentiment")),
        "attend checkpoint has sentiment tensors"
    );
}

#[test]
fn ablate_prints_five_rows_in_table_order() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(sentcap(dir, &["synth", "--out", "toy"]));
    let mut cfg = RunConfig::load(&dir.join("toy/config.toml")).unwrap();
    cfg.train.batch_size = 20;
    cfg.save(&dir.join("toy/ablate.toml")).unwrap();
    let table = stdout(&ok(sentcap(
        dir,
        &[
            "ablate",
            "--config",
            "toy/ablate.toml",
            "--epochs",
            "15",
            "--lr",
            "0.01",
            "--seed",
            "7",
        ],
    )));
    let rows: Vec<&str> = table.lines().skip(1).collect();
    let labels: Vec<&str> = rows.iter().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(labels, ["attend", "minus-e1e2l2", "minus-e2l2", "minus-l2", "full"]);
    let column = |name: &str| {
        let idx = table
            .lines()
            .next()
            .unwrap()
            .split_whitespace()
            .position(|h| h == name)
            .unwrap()
            + 1;
        rows.iter()
            .map(|l| l.split_whitespace().nth(idx).unwrap().parse::<f64>().unwrap())
            .collect::<Vec<_>>()
    };
    let entropy = column("Entropy");
    assert!(entropy[1..].iter().all(|&e| entropy[0] < e), "{table}");
    let consistency = column("Consist");
    assert!(consistency[4] >= consistency[0], "{table}");
}
