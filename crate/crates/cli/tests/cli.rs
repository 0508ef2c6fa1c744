use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::io::Write;
use std::sync::OnceLock;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_causex");

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut c = Command::new(BIN);
    for a in args {
        c.arg(a);
    }
    c.output().expect("spawn causex")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "causex failed: {}\n{}",
        String::from_utf8_lossy(&out.stderr),
        String::from_utf8_lossy(&out.stdout)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn train_into(fx: &Fixture, output: &Path, extra: &[&str]) -> Output {
    let mut c = Command::new(BIN);
    c.arg("train")
        .arg("--train")
        .arg(fx.path("train.jsonl"))
        .arg("--validation")
        .arg(fx.path("validation.jsonl"))
        .arg("--embeddings")
        .arg(fx.path("embeddings.txt"))
        .arg("--output")
        .arg(output)
        .args(["--epochs", "6", "--hidden-dim", "10"])
        .args(extra);
    c.output().unwrap()
}

fn fixture() -> &'static Fixture {
    static FX: OnceLock<Fixture> = OnceLock::new();
    FX.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        ok(run(&[&"generate", &"--output-dir", &root, &"--messages", &"500", &"--seed", &"7"]));
        let fx = Fixture { _dir: dir, root };
        ok(train_into(&fx, &fx.path("model.cxm"), &[]));
        fx
    })
}

fn jsonl(text: &str) -> Vec<Value> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn predict(fx: &Fixture, input: &Path, threads: Option<&str>, extra: &[&str]) -> String {
    let mut c = Command::new(BIN);
    c.arg("predict")
        .arg("--model")
        .arg(fx.path("model.cxm"))
        .arg("--embeddings")
        .arg(fx.path("embeddings.txt"))
        .arg("--input")
        .arg(input)
        .args(extra);
    if let Some(t) = threads {
        c.env("CAUSE_PIPELINE_THREADS", t);
    }
    ok(c.output().unwrap())
}

#[test]
fn generate_writes_all_files() {
    let fx = fixture();
    for f in ["train.jsonl", "validation.jsonl", "test.jsonl", "all.jsonl", "embeddings.txt", "demographics.csv"] {
        assert!(fx.path(f).exists(), "{f} missing");
    }
    let test = jsonl(&std::fs::read_to_string(fx.path("test.jsonl")).unwrap());
    assert!(!test.is_empty());
    for m in &test {
        for t in m["tokens"].as_array().unwrap() {
            assert!(t.get("pos").is_none_or(|p| p.is_null()));
        }
    }
}

#[test]
fn training_is_byte_deterministic() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let again = dir.path().join("again.cxm");
    ok(train_into(fx, &again, &[]));
    assert_eq!(std::fs::read(fx.path("model.cxm")).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn different_seed_changes_model() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other.cxm");
    ok(train_into(fx, &other, &["--seed", "99"]));
    assert_ne!(std::fs::read(fx.path("model.cxm")).unwrap(), std::fs::read(&other).unwrap());
}

#[test]
fn predict_keeps_input_keys_and_reparses() {
    let fx = fixture();
    let input = std::fs::read_to_string(fx.path("test.jsonl")).unwrap();
    let out = predict(fx, &fx.path("test.jsonl"), None, &[]);
    let (ins, outs) = (jsonl(&input), jsonl(&out));
    assert_eq!(ins.len(), outs.len());
    for (i, o) in ins.iter().zip(&outs) {
        assert_eq!(i["id"], o["id"]);
        for k in i.as_object().unwrap().keys() {
            assert!(o.get(k).is_some(), "key {k} dropped");
        }
        if !i["causality"].is_null() {
            assert_eq!(i["causality"], o["gold_causality"]);
        }
        assert!(o["causality"].is_boolean());
        let explanations = o["explanations"].as_array().unwrap();
        if o["causality"] == Value::Bool(false) {
            assert!(explanations.is_empty());
            assert!(o["explanation_span"].is_null());
        }
        let n_args = o["arguments"].as_array().unwrap().len();
        assert!(explanations.iter().all(|e| (e.as_u64().unwrap() as usize) < n_args));
    }

    // The annotated file is itself a valid corpus.
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pred.jsonl");
    std::fs::write(&p, &out).unwrap();
    let loaded = causex::corpus::load_jsonl(&p).unwrap();
    assert_eq!(loaded.len(), outs.len());
}

#[test]
fn predict_order_independent_of_threads() {
    let fx = fixture();
    // Enough lines to span several batches.
    let all = std::fs::read_to_string(fx.path("all.jsonl")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("many.jsonl");
    std::fs::write(&p, &all).unwrap();
    let one = predict(fx, &p, Some("1"), &[]);
    let four = predict(fx, &p, Some("4"), &[]);
    assert_eq!(one, four);
    let ids_in: Vec<Value> = jsonl(&all).into_iter().map(|v| v["id"].clone()).collect();
    let ids_out: Vec<Value> = jsonl(&one).into_iter().map(|v| v["id"].clone()).collect();
    assert_eq!(ids_in, ids_out);
}

#[test]
fn bad_thread_count_fails() {
    let fx = fixture();
    let out = Command::new(BIN)
        .args(["predict", "--model"])
        .arg(fx.path("model.cxm"))
        .arg("--embeddings")
        .arg(fx.path("embeddings.txt"))
        .arg("--input")
        .arg(fx.path("test.jsonl"))
        .env("CAUSE_PIPELINE_THREADS", "many")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn cei_only_mode_invokes_cei_everywhere() {
    let fx = fixture();
    let out = ok(Command::new(BIN)
        .args(["eval", "--json", "--mode", "cei_only", "--model"])
        .arg(fx.path("model.cxm"))
        .arg("--embeddings")
        .arg(fx.path("embeddings.txt"))
        .arg("--input")
        .arg(fx.path("test.jsonl"))
        .output()
        .unwrap());
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["messages"], v["cei_invocations"]);
}

#[test]
fn eval_reports_high_f1() {
    let fx = fixture();
    let out = ok(Command::new(BIN)
        .args(["eval", "--json", "--model"])
        .arg(fx.path("model.cxm"))
        .arg("--embeddings")
        .arg(fx.path("embeddings.txt"))
        .arg("--input")
        .arg(fx.path("test.jsonl"))
        .output()
        .unwrap());
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["cp"]["weighted_f1"].as_f64().unwrap() > 0.9, "{out}");
    assert!(v["cei"]["weighted_f1"].as_f64().unwrap() > 0.9, "{out}");
}

#[test]
fn segment_from_stdin_with_model_tagger() {
    let fx = fixture();
    let mut child = Command::new(BIN)
        .args(["segment", "--input", "-", "--model"])
        .arg(fx.path("model.cxm"))
        .arg("--embeddings")
        .arg(fx.path("embeddings.txt"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"{\"id\":\"x\",\"text\":\"i missed the bus because the car was broken\"}\n")
        .unwrap();
    let out = ok(child.wait_with_output().unwrap());
    let v = &jsonl(&out)[0];
    assert_eq!(v["arguments"], serde_json::json!([[0, 3], [4, 8]]));
    assert_eq!(v["argument_details"][1]["text"], "because the car was broken");
    assert_eq!(v["argument_details"][1]["connective"], "because");
}

#[test]
fn segment_untagged_without_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("in.jsonl");
    std::fs::write(&p, "{\"id\":\"x\",\"text\":\"i missed the bus\"}\n").unwrap();
    let out = run(&[&"segment", &"--input", &p]);
    assert!(!out.status.success());
}

#[test]
fn missing_input_fails() {
    let fx = fixture();
    let out = run(&[
        &"predict",
        &"--model",
        &fx.path("model.cxm"),
        &"--embeddings",
        &fx.path("embeddings.txt"),
        &"--input",
        &"/nonexistent/in.jsonl",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn unknown_config_key_fails() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\nhiden_dim = 4\n").unwrap();
    let out = train_into(fx, &dir.path().join("m.cxm"), &["--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hiden_dim"));
}

#[test]
fn config_file_seed_is_reported() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 21\nepochs = 2\n").unwrap();
    let out = train_into(fx, &dir.path().join("m.cxm"), &["--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 21"));
}

#[test]
fn future_model_version_rejected() {
    let fx = fixture();
    let mut bytes = std::fs::read(fx.path("model.cxm")).unwrap();
    // Version follows the 8-byte magic as a little-endian u32.
    bytes[8..12].copy_from_slice(&99u32.to_le_bytes());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("future.cxm");
    std::fs::write(&p, bytes).unwrap();
    let out = run(&[
        &"eval",
        &"--model",
        &p,
        &"--embeddings",
        &fx.path("embeddings.txt"),
        &"--input",
        &fx.path("test.jsonl"),
    ]);
    assert!(!out.status.success());
}

#[test]
fn wrong_embeddings_rejected() {
    let fx = fixture();
    let text = std::fs::read_to_string(fx.path("embeddings.txt")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[0].split(' ').map(String::from).collect();
    fields[1] = "0.123456".into();
    lines[0] = fields.join(" ");
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("emb.txt");
    std::fs::write(&p, lines.join("\n") + "\n").unwrap();
    let out = run(&[
        &"eval",
        &"--model",
        &fx.path("model.cxm"),
        &"--embeddings",
        &p,
        &"--input",
        &fx.path("test.jsonl"),
    ]);
    assert!(!out.status.success());
}

#[test]
fn mcnemar_between_modes() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    std::fs::write(&a, predict(fx, &fx.path("test.jsonl"), None, &[])).unwrap();
    std::fs::write(&b, predict(fx, &fx.path("test.jsonl"), None, &["--mode", "cei_only"])).unwrap();
    let out = ok(run(&[&"mcnemar", &"--a", &a, &"--b", &b, &"--gold", &fx.path("test.jsonl")]));
    assert!(out.contains("chi2"));
    let same = ok(run(&[&"mcnemar", &"--a", &a, &"--b", &a, &"--gold", &fx.path("test.jsonl")]));
    assert!(same.contains("b (A right, B wrong) 0"));
}

#[test]
fn mcnemar_counts_matches_closed_form() {
    let out = ok(run(&[&"mcnemar", &"--counts", &"10,3"]));
    // (|10-3|-1)^2 / 13
    assert!(out.contains("chi2 2.769231"), "{out}");
}

#[test]
fn demographics_gold() {
    let fx = fixture();
    let out = ok(run(&[
        &"analyze-demographics",
        &"--input",
        &fx.path("all.jsonl"),
        &"--demographics",
        &fx.path("demographics.csv"),
        &"--gold",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let r = v["age_pearson_r"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&r));
    assert!(v["group_cohens_d"]["d"].is_number());
    for u in v["users"].as_array().unwrap() {
        let c = u["cp_ratio"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&c));
    }
}

#[test]
fn logodds_tsv() {
    let fx = fixture();
    let out = ok(run(&[
        &"analyze-logodds",
        &"--input",
        &fx.path("all.jsonl"),
        &"--model",
        &fx.path("model.cxm"),
        &"--embeddings",
        &fx.path("embeddings.txt"),
        &"--top-k",
        &"3",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "list\trank\tterm\tz\tdelta\tcount_negative\tcount_positive");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("ce\t1\t"));
    assert!(lines[4].starts_with("non_ce\t1\t"));
}

#[test]
fn gradcheck_passes() {
    let out = ok(run(&[&"gradcheck", &"--instances", &"3"]));
    assert!(out.starts_with("seed: 13"));
    assert_eq!(out.matches(" ok").count(), 6);
}

#[test]
fn gradcheck_impossible_tolerance_fails() {
    let out = run(&[&"gradcheck", &"--instances", &"2", &"--tolerance", &"0"]);
    assert!(!out.status.success());
}
