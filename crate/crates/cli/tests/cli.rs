use std::path::Path;
use std::process::Command;

use wordtutor_cli::pipeline::run_pipeline;
use wordtutor_cli::ExperimentConfig;

const BIN: &str = env!("CARGO_BIN_EXE_wordtutor");

fn small_config(dir: &Path) -> String {
    format!(
        r#"
seed = 7
output_dir = "{}"

[synth]
dialogues = 80

[rl]
folds = 3

[rl.train]
episodes = 60

[rl.run]
instances = 40
"#,
        dir.join("out").display()
    )
}

fn wordtutor(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, small_config(dir.path())).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    let a = run_pipeline(&cfg).unwrap();
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(a, b);
    for f in [
        "corpus/corpus.json",
        "sim/model.json",
        "rl/summary.json",
        "rl/folds.csv",
    ] {
        assert!(a.get(f).is_some(), "missing {f}");
    }
    let seg: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/corpus/segmentation.json")).unwrap()).unwrap();
    assert_eq!(seg["matches_generator"], true);

    let other = ExperimentConfig {
        seed: 8,
        output_dir: dir.path().join("other"),
        ..cfg
    };
    let c = run_pipeline(&other).unwrap();
    assert_ne!(a.get("corpus/corpus.json"), c.get("corpus/corpus.json"));
}

#[test]
fn missing_lexicon_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(
        &path,
        format!("lexicon = \"nowhere.json\"\n{}", small_config(dir.path())),
    )
    .unwrap();
    let out = wordtutor(&["run", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lexicon"), "{err}");
    assert!(!dir.path().join("out/manifest.json").exists());
}

#[test]
fn unknown_config_field_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, "sede = 3\n").unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
}

#[test]
fn synth_segment_and_ingest_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let out = wordtutor(&[
        "corpus",
        "synth",
        "--seed",
        "3",
        "--dialogues",
        "25",
        "--log",
        &p("log.jsonl"),
        &p("gen.json"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("dialogues 25"), "{stdout}");

    assert!(wordtutor(&["corpus", "segment", &p("log.jsonl"), &p("seg.json")])
        .status
        .success());
    assert!(
        wordtutor(&["ingest", "--format", "chatlog", &p("log.jsonl"), &p("ing.json")])
            .status
            .success()
    );
    let seg = std::fs::read(p("seg.json")).unwrap();
    assert_eq!(seg, std::fs::read(p("ing.json")).unwrap());

    let ingest_json = wordtutor(&["ingest", "--format", "json", &p("gen.json"), &p("again.json")]);
    assert!(ingest_json.status.success());
    assert_eq!(String::from_utf8_lossy(&ingest_json.stdout), stdout);
}

#[test]
fn sim_and_rl_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    assert!(
        wordtutor(&["corpus", "synth", "--seed", "4", "--dialogues", "60", &p("c.json")])
            .status
            .success()
    );
    let train = wordtutor(&["sim", "train", "--corpus", &p("c.json"), "--level", "act", &p("m.json")]);
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    let eval = wordtutor(&[
        "sim",
        "eval",
        "--model",
        &p("m.json"),
        "--corpus",
        &p("c.json"),
        "--json",
        &p("e.json"),
    ]);
    let stdout = String::from_utf8_lossy(&eval.stdout);
    assert!(stdout.contains("accuracy 1.0000 mean_kld 0.000000"), "{stdout}");

    let rl = wordtutor(&["rl", "train", "--sim", &p("m.json"), "--episodes", "50", &p("q.json")]);
    assert!(rl.status.success(), "{}", String::from_utf8_lossy(&rl.stderr));
    let ev = wordtutor(&[
        "rl",
        "eval",
        "--sim",
        &p("m.json"),
        "--policy",
        &p("q.json"),
        "--folds",
        "2",
        "--instances",
        "30",
        "--out-dir",
        &p("rl"),
    ]);
    assert!(ev.status.success(), "{}", String::from_utf8_lossy(&ev.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("rl/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["folds"], 2);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    let out = wordtutor(&[
        "corpus",
        "segment",
        bad.to_str().unwrap(),
        dir.path().join("o.json").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cfg = ExperimentConfig::load(&root.join("experiment.toml")).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.rl.folds, 20);
    assert!(cfg.session_config.as_ref().unwrap().is_file());
}
