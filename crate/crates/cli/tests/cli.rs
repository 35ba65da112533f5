use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sensegap::annotation::read_instances;
use sensegap::corpus::{LowercaseLemmatizer, Usage};
use sensegap::pipeline::{predict_usages, Context};
use sensegap::representation::{Language, MockProvider, ModelConfig, SenseMode, Similarity, UsageMode, VectorStore};
use sensegap::SenseInventory;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensegap"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(args: &[&str]) -> Output {
    let o = run(args);
    assert_eq!(code(&o), 0, "{args:?}\n{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// ingest + sample into `dir`; returns (inventory, usages) paths.
fn prepare(dir: &Path) -> (PathBuf, PathBuf) {
    let out = p(dir);
    ok(&["ingest", "--inventory", p(&fixture("wordnet10.jsonl")), "--schema", "wordnet", "--out", out]);
    let modern = format!("modern={}", p(&fixture("modern.txt")));
    let historical = format!("historical={}", p(&fixture("historical.txt")));
    ok(&["sample", "--inventory", p(&dir.join("inventory.jsonl")), "--corpus", &modern, "--corpus", &historical, "--out", out]);
    (dir.join("inventory.jsonl"), dir.join("usages.jsonl"))
}

fn read_usages(path: &Path) -> Vec<Usage> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn jsonl_len(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn bad_schema_flag_is_usage_error() {
    let t = TempDir::new().unwrap();
    let o = run(&["ingest", "--inventory", p(&fixture("unable.json")), "--schema", "xml", "--out", p(t.path())]);
    assert_eq!(code(&o), 2);
    let o = run(&["ingest", "--inventory", p(&fixture("unable.json")), "--out", p(t.path())]);
    assert_eq!(code(&o), 2, "missing schema");
    let o = run(&["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn single_headword_dump_reports_one_headword() {
    let t = TempDir::new().unwrap();
    let o = ok(&["ingest", "--inventory", p(&fixture("unable.json")), "--schema", "wordnet", "--out", p(t.path())]);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("headwords=1\n"), "{stdout}");
    assert!(stdout.contains("senses=2\n"));
    let stats = fs::read_to_string(t.path().join("stats.txt")).unwrap();
    assert_eq!(stats, stdout);
    let inv = SenseInventory::from_canonical(&fs::read_to_string(t.path().join("inventory.jsonl")).unwrap()).unwrap();
    assert_eq!(inv.len(), 1);
    // stats on the canonical file agree
    let again = ok(&["stats", "--inventory", p(&t.path().join("inventory.jsonl"))]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), stats);
}

#[test]
fn so_dump_ingests_with_warnings() {
    let t = TempDir::new().unwrap();
    ok(&["ingest", "--inventory", p(&fixture("so3.json")), "--schema", "so", "--out", p(t.path())]);
    let warnings = fs::read_to_string(t.path().join("ingest-warnings.txt")).unwrap();
    assert!(warnings.contains("tom"), "{warnings}");
}

#[test]
fn parse_error_is_runtime_failure() {
    let t = TempDir::new().unwrap();
    let bad = t.path().join("bad.json");
    fs::write(&bad, "{\"headword\": \"x\", \"entries\": [").unwrap();
    let o = run(&["ingest", "--inventory", p(&bad), "--schema", "wordnet", "--out", p(t.path())]);
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_input_and_bad_provider_are_usage_errors() {
    let t = TempDir::new().unwrap();
    let (inv, usages) = prepare(t.path());
    let o = run(&["stats", "--inventory", "/nonexistent/inventory.jsonl"]);
    assert_eq!(code(&o), 2);
    let base = ["predict", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G3_COS", "--threshold", "0.5"];
    let o = run(&[&base[..], &["--provider", "gpu:0", "--out", p(t.path())]].concat());
    assert_eq!(code(&o), 2);
    let o = run(&[&base[..], &["--provider", "mock:1", "--out", p(t.path())]].concat());
    assert_eq!(code(&o), 2);
    let o = run(&["predict", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G3_COS", "--provider", "mock:8", "--out", p(t.path())]);
    assert_eq!(code(&o), 2, "no threshold");
    let o = run(&[&base[..], &["--provider", "mock:8"]].concat());
    assert_eq!(code(&o), 2, "no output dir");
}

#[test]
fn missing_vectors_are_retriable_runtime_failure() {
    let t = TempDir::new().unwrap();
    let (inv, usages) = prepare(t.path());
    let empty = t.path().join("empty.store");
    VectorStore::new(8).write(&empty).unwrap();
    let provider = format!("store:{}", p(&empty));
    let o = run(&["predict", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G3_COS", "--threshold", "0.5", "--provider", &provider, "--out", p(t.path())]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("retriable"));
}

#[test]
fn embed_writes_store_readable_by_the_library() {
    let t = TempDir::new().unwrap();
    let (inv, usages) = prepare(t.path());
    ok(&["embed", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G3_COS", "--model", "E0_SUB_SPR", "--provider", "mock:8", "--out", p(t.path())]);
    let requests = jsonl_len(&t.path().join("requests.jsonl"));
    assert_eq!(jsonl_len(&t.path().join("vectors.manifest.jsonl")), requests);
    let store = VectorStore::read(&t.path().join("vectors.store")).unwrap();
    assert_eq!(store.dim(), 8);
    assert!(!store.is_empty() && store.len() <= requests);

    // the store then serves every request without the mock
    let provider = format!("store:{}", p(&t.path().join("vectors.store")));
    let other = TempDir::new().unwrap();
    ok(&["embed", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G3_COS", "--provider", &provider, "--out", p(other.path())]);
    assert_eq!(fs::read_to_string(other.path().join("missing.jsonl")).unwrap(), "");
    ok(&["predict", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G3_COS", "--threshold", "0.7", "--provider", &provider, "--out", p(other.path())]);
    let mocked = TempDir::new().unwrap();
    ok(&["predict", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G3_COS", "--threshold", "0.7", "--provider", "mock:8", "--out", p(mocked.path())]);
    assert_eq!(
        fs::read(other.path().join("predictions.jsonl")).unwrap(),
        fs::read(mocked.path().join("predictions.jsonl")).unwrap()
    );
}

#[test]
fn predict_equals_chained_library_calls() {
    let t = TempDir::new().unwrap();
    let (inv_path, usages_path) = prepare(t.path());
    ok(&["predict", "--inventory", p(&inv_path), "--usages", p(&usages_path), "--model", "E1_SUB_COS", "--threshold", "0.6", "--provider", "mock:16", "--out", p(t.path())]);

    let inv = SenseInventory::from_canonical(&fs::read_to_string(&inv_path).unwrap()).unwrap();
    let usages = read_usages(&usages_path);
    let ctx = Context {
        inventory: &inv,
        lemmatizer: &LowercaseLemmatizer,
        language: Language::English,
        primary_only: false,
        batch_size: 32,
    };
    let mut cfg = ModelConfig::new(UsageMode::Sub, SenseMode::E1, Similarity::Cos);
    cfg.threshold = 0.6;
    let preds = predict_usages(&ctx, &usages, &cfg, &MockProvider::new(16).unwrap()).unwrap();
    let expect: String = preds.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    assert_eq!(fs::read_to_string(t.path().join("predictions.jsonl")).unwrap(), expect);
}

#[test]
fn threshold_extremes_bound_the_candidate_list() {
    let t = TempDir::new().unwrap();
    let (inv, usages) = prepare(t.path());
    let n_usages = jsonl_len(&usages);
    let args = |th: &'static str, cap: &'static str, out: &Path| {
        ok(&["predict", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G3_COS", "--threshold", th, "--max-per-headword", cap, "--provider", "mock:16", "--out", p(out)]);
        jsonl_len(&out.join("candidates.jsonl"))
    };
    let all = TempDir::new().unwrap();
    assert_eq!(args("1.0", "100", all.path()), n_usages);
    let capped = TempDir::new().unwrap();
    let headwords: std::collections::BTreeSet<String> = read_usages(&usages).into_iter().map(|u| u.headword).collect();
    assert_eq!(args("1.0", "1", capped.path()), headwords.len());
    let none = TempDir::new().unwrap();
    assert_eq!(args("0.0", "8", none.path()), 0);
    assert_eq!(fs::read_to_string(none.path().join("instances.tsv")).unwrap().lines().count(), 1, "header only");
}

#[test]
fn reruns_are_idempotent() {
    let t = TempDir::new().unwrap();
    let pipeline = |dir: &Path| {
        let (inv, usages) = prepare(dir);
        ok(&["embed", "--inventory", p(&inv), "--usages", p(&usages), "--model", "all", "--provider", "mock:8", "--out", p(dir)]);
        ok(&["predict", "--inventory", p(&inv), "--usages", p(&usages), "--model", "G2_SPR", "--threshold", "0.8", "--provider", "mock:8", "--out", p(dir)]);
        ok(&["candidates", "--inventory", p(&inv), "--usages", p(&usages), "--predictions", p(&dir.join("predictions.jsonl")), "--model", "G2_SPR", "--threshold", "0.8", "--out", p(dir)]);
        snapshot(dir)
    };
    let first = pipeline(t.path());
    let second = pipeline(t.path());
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (k, v) in &first {
        assert!(second[k] == *v, "{k} differs between runs");
    }
    // candidates recomputed from stored predictions agree with predict's own
    assert!(first.contains_key("candidates.manifest.json"));
}

fn write_judgments(path: &Path, rows: &[(&str, &str, &str)]) {
    let mut s = String::from("instance_id\tannotator_id\tlabel\tcomment\n");
    for (i, a, l) in rows {
        s.push_str(&format!("{i}\t{a}\t{l}\t\n"));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn aggregate_empty_judgment_file() {
    let t = TempDir::new().unwrap();
    let (inv, usages) = prepare(t.path());
    ok(&["instances", "--inventory", p(&inv), "--usages", p(&usages), "--out", p(t.path())]);
    let empty = t.path().join("judgments.tsv");
    fs::write(&empty, "").unwrap();
    ok(&["aggregate", "--instances", p(&t.path().join("instances.tsv")), "--judgments", p(&empty), "--out", p(t.path())]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(t.path().join("aggregate.json")).unwrap()).unwrap();
    let all = &report["summary"]["all"];
    assert_eq!(all["judgments_fits"], 0);
    assert_eq!(all["assigned"], 0);
    assert_eq!(all["unassigned"], 0);
    assert_eq!(all["usages"], all["excluded_usages"]);
    assert!(report["agreement"]["all"].is_null());
    assert_eq!(fs::read_to_string(t.path().join("gold.jsonl")).unwrap(), "");
}

#[test]
fn aggregate_worked_example_and_unknown_instances() {
    let t = TempDir::new().unwrap();
    let (inv, usages) = prepare(t.path());
    ok(&["instances", "--inventory", p(&inv), "--usages", p(&usages), "--out", p(t.path())]);
    let instances = read_instances(fs::File::open(t.path().join("instances.tsv")).unwrap()).unwrap();
    let target = &instances[0];
    // one-instance file
    let one = t.path().join("one.tsv");
    let mut buf = Vec::new();
    sensegap::annotation::write_instances(&mut buf, std::slice::from_ref(target)).unwrap();
    fs::write(&one, buf).unwrap();
    let judgments = t.path().join("j.tsv");
    let id = target.instance_id.as_str();
    write_judgments(&judgments, &[(id, "A1", "1"), (id, "A2", "1"), (id, "A3", "-"), ("nope#0", "A1", "0")]);
    let out = t.path().join("agg");
    ok(&["aggregate", "--instances", p(&one), "--judgments", p(&judgments), "--out", p(&out)]);
    assert_eq!(
        fs::read_to_string(out.join("majorities.tsv")).unwrap(),
        format!("instance_id\tmajority\n{id}\t1\n")
    );
    assert_eq!(
        fs::read_to_string(out.join("usage_status.tsv")).unwrap(),
        format!("usage_id\tstatus\n{}\tassigned\n", target.usage_id)
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    assert_eq!(report["unknown_instances"], serde_json::json!(["nope#0"]));
    assert_eq!(report["summary"]["all"]["judgments_does_not_fit"], 0, "unknown judgment ignored");
    let gold = fs::read_to_string(out.join("gold.jsonl")).unwrap();
    assert!(gold.contains(target.sense_id.as_str()));
}

/// Judges every instance with three annotators so that a fixed share of
/// usages ends up unassigned; returns the gold file written by `aggregate`.
fn annotate(dir: &Path, inv: &Path, usages: &Path) -> PathBuf {
    ok(&["instances", "--inventory", p(inv), "--usages", p(usages), "--out", p(dir)]);
    let instances = read_instances(fs::File::open(dir.join("instances.tsv")).unwrap()).unwrap();
    let mut first_sense: BTreeMap<&str, &str> = BTreeMap::new();
    let mut rows = Vec::new();
    for (n, i) in instances.iter().enumerate() {
        let first = *first_sense.entry(i.usage_id.as_str()).or_insert(i.sense_id.as_str());
        let fits = first == i.sense_id.as_str() && i.usage_id.len() % 3 != 0;
        for a in ["A1", "A2", "A3"] {
            let label = if fits || (a == "A3" && n % 4 == 0) { "1" } else { "0" };
            rows.push((i.instance_id.as_str(), a, label));
        }
    }
    let judgments = dir.join("judgments.tsv");
    write_judgments(&judgments, &rows);
    ok(&["aggregate", "--instances", p(&dir.join("instances.tsv")), "--judgments", p(&judgments), "--out", p(dir)]);
    dir.join("gold.jsonl")
}

#[test]
fn select_is_deterministic_and_names_the_best() {
    let t = TempDir::new().unwrap();
    let (inv, usages) = prepare(t.path());
    let gold = annotate(t.path(), &inv, &usages);
    let select = |out: &Path, models: &[&str]| {
        let mut args = vec!["select", "--inventory", p(&inv), "--usages", p(&usages), "--gold", p(&gold), "--provider", "mock:16", "--seed", "7", "--out", p(out)];
        for m in models {
            args.extend(["--model", m]);
        }
        ok(&args);
        serde_json::from_str::<serde_json::Value>(&fs::read_to_string(out.join("selection.json")).unwrap()).unwrap()
    };
    let a = t.path().join("a");
    let b = t.path().join("b");
    let sa = select(&a, &["G3_COS", "E0_SPR"]);
    select(&b, &["G3_COS", "E0_SPR"]);
    for f in ["selection.json", "grid.tsv", "summary.tsv", "cv/G3_COS.json", "cv/E0_SPR.tsv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let scores = sa["models"].as_array().unwrap();
    assert_eq!(scores.len(), 2);
    let best = scores.iter().max_by(|x, y| x["test_f"].as_f64().partial_cmp(&y["test_f"].as_f64()).unwrap()).unwrap();
    assert_eq!(sa["best"], best["model"]);

    // single config → single-cell grid
    let c = t.path().join("c");
    select(&c, &["G1_SUB_COS"]);
    let grid = fs::read_to_string(c.join("grid.tsv")).unwrap();
    let rows: Vec<&str> = grid.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].split('\t').filter(|c| !c.is_empty()).count(), 2, "{grid}");

    // predict picks model and threshold from the selection
    ok(&["predict", "--inventory", p(&inv), "--usages", p(&usages), "--from-selection", p(&a.join("selection.json")), "--provider", "mock:16", "--out", p(&a)]);
    let echoed = fs::read_to_string(a.join("predict.config.toml")).unwrap();
    assert!(echoed.contains(sa["best"].as_str().unwrap()), "{echoed}");
}

#[test]
fn select_without_gold_file_fails_with_message() {
    let t = TempDir::new().unwrap();
    let (inv, usages) = prepare(t.path());
    let o = run(&["select", "--inventory", p(&inv), "--usages", p(&usages), "--gold", "/nonexistent/gold.jsonl", "--model", "G3_COS", "--provider", "mock:8", "--out", p(t.path())]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gold file not found"));
}

#[test]
fn config_file_is_overridden_by_flags_and_echoed() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("run.toml");
    fs::write(&cfg, format!("seed = 3\nschema = \"wordnet\"\noutput = \"{}\"\n", p(&t.path().join("from-config")))).unwrap();
    ok(&["ingest", "--config", p(&cfg), "--inventory", p(&fixture("unable.json")), "--seed", "11"]);
    let dir = t.path().join("from-config");
    let echoed = fs::read_to_string(dir.join("ingest.config.toml")).unwrap();
    assert!(echoed.contains("seed = 11"), "{echoed}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("ingest.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 1);

    fs::write(&cfg, "sede = 3\n").unwrap();
    let o = run(&["ingest", "--config", p(&cfg), "--inventory", p(&fixture("unable.json")), "--schema", "wordnet", "--out", p(&dir)]);
    assert_eq!(code(&o), 2, "unknown config key");
}
