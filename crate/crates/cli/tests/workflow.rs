use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

const NAMES: [&str; 8] = ["Alda", "Borin", "Cato", "Dena", "Ewan", "Faye", "Gunnar", "Hilde"];

fn factsearch(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_factsearch"))
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "factsearch {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_lines(path: &Path, rows: &[Value]) {
    let body: Vec<String> = rows.iter().map(Value::to_string).collect();
    fs::write(path, body.join("\n") + "\n").unwrap();
}

fn write_dump(dir: &Path) {
    fs::create_dir_all(dir.join("dump")).unwrap();
    let mut pages = Vec::new();
    for i in 0..12 {
        let paragraphs: Vec<String> = (0..4)
            .map(|j| {
                let a = NAMES[(i + j) % 8];
                let b = NAMES[(i + j + 1) % 8];
                let c = NAMES[(i + j + 3) % 8];
                format!("the envoy {a} met {b} near the harbor while {c} waited for the ship to leave the port at dawn")
            })
            .collect();
        pages.push(json!({"id": format!("{i}"), "title": format!("harbor town {i}"), "text": paragraphs.join("\n\n")}));
    }
    write_lines(&dir.join("dump/pages.jsonl"), &pages);
}

#[test]
fn batch_workflow_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write_dump(d);

    factsearch(d, &["ingest", "--dump", "dump", "--out", "corpus.jsonl", "--merge-threshold", "80"]);
    let corpus = lines(&d.join("corpus.jsonl"));
    assert_eq!(corpus.len(), 48);

    factsearch(d, &["index", "build", "--corpus", "corpus.jsonl", "--out", "index"]);
    let hits = factsearch(d, &["index", "search", "--index", "index", "--query", "Alda Borin", "--k", "3"]);
    assert_eq!(hits.lines().count(), 3);

    let gen = |out: &str, seed: &str| {
        factsearch(
            d,
            &[
                "generate", "--corpus", "corpus.jsonl", "--index", "index", "--stub-seed", "1", "--out", out,
                "--seed", seed, "--train", "24", "--dev", "8", "--test", "8",
            ],
        );
    };
    gen("a.jsonl", "1");
    gen("b.jsonl", "2");
    let a = lines(&d.join("a.jsonl"));
    assert!(a.len() > 40);
    let labels: std::collections::HashSet<&str> = a.iter().map(|c| c["label"].as_str().unwrap()).collect();
    assert_eq!(labels.len(), 3);

    factsearch(d, &["dedup", "--input", "a.jsonl", "--out", "a_dedup.jsonl"]);
    factsearch(d, &["dedup", "--input", "b.jsonl", "--out", "b_dedup.jsonl"]);
    factsearch(d, &["balance", "--input", "a_dedup.jsonl", "--out", "a_bal.jsonl", "--seed", "3"]);
    factsearch(d, &["balance", "--input", "b_dedup.jsonl", "--out", "b_bal.jsonl", "--seed", "3"]);
    factsearch(d, &["sum", "--inputs", "a_bal.jsonl", "b_bal.jsonl", "--out", "sum.jsonl"]);
    factsearch(d, &["mix", "--inputs", "a_bal.jsonl", "b_bal.jsonl", "--out", "mix.jsonl"]);
    let bal_a = lines(&d.join("a_bal.jsonl")).len();
    let bal_b = lines(&d.join("b_bal.jsonl")).len();
    assert_eq!(lines(&d.join("sum.jsonl")).len(), bal_a + bal_b);
    assert_eq!(lines(&d.join("mix.jsonl")).len(), bal_a);

    factsearch(
        d,
        &["tuples", "--dataset", "a_bal.jsonl", "--corpus", "corpus.jsonl", "--split", "train", "--n", "8", "--out", "tuples.jsonl"],
    );
    for t in lines(&d.join("tuples.jsonl")) {
        let negs = t["negatives"].as_array().unwrap();
        assert_eq!(negs.len(), 7);
        assert!(!negs.contains(&t["positive"]));
    }

    factsearch(
        d,
        &["retrieve", "--corpus", "corpus.jsonl", "--stub-seed", "1", "--claims", "a_bal.jsonl", "--mode", "dense_ans", "--out", "runs.jsonl"],
    );
    let runs = lines(&d.join("runs.jsonl"));
    assert_eq!(runs.len(), bal_a);
    let gold: Vec<Value> = lines(&d.join("a_bal.jsonl"))
        .iter()
        .map(|c| json!({"claim_id": c["claim_id"], "gold_ids": [c["source_para_id"]]}))
        .collect();
    write_lines(&d.join("gold.jsonl"), &gold);
    let report: Value = serde_json::from_str(&factsearch(
        d,
        &["eval", "retrieval", "--runs", "runs.jsonl", "--gold", "gold.jsonl", "--ks", "1,5"],
    ))
    .unwrap();
    let (m1, m5) = (report["mrr"]["1"].as_f64().unwrap(), report["mrr"]["5"].as_f64().unwrap());
    assert!(0.0 < m1 && m1 <= m5 && m5 <= 1.0, "{report}");

    // logits of a confident model, twice too sharp
    let test: Vec<Value> = lines(&d.join("a_bal.jsonl")).into_iter().filter(|c| c["split"] == "test").collect();
    let mut cond = Vec::new();
    let mut null = Vec::new();
    for (i, c) in test.iter().enumerate() {
        let label = c["label"].as_str().unwrap();
        let gold = ["SUPPORTS", "REFUTES", "NEI"].iter().position(|l| *l == label).unwrap();
        let mut z = [0.0; 3];
        z[if i % 4 == 0 { (gold + 1) % 3 } else { gold }] = 6.0;
        cond.push(json!({"id": c["claim_id"], "logits": z, "label": label}));
        null.push(json!({"id": c["claim_id"], "logits": [0.0, 0.0, 0.0]}));
    }
    write_lines(&d.join("cond.jsonl"), &cond);
    write_lines(&d.join("null.jsonl"), &null);
    factsearch(d, &["calibrate", "--logits", "cond.jsonl", "--out", "scaler.json"]);
    let scaler: Value = serde_json::from_str(&fs::read_to_string(d.join("scaler.json")).unwrap()).unwrap();
    assert!(scaler["T"].as_f64().unwrap() > 1.0);

    factsearch(
        d,
        &[
            "pvi", "--dataset", "a_bal.jsonl", "--null-logits", "null.jsonl", "--cond-logits", "cond.jsonl",
            "--scaler", "scaler.json", "--report", "pvi.json",
        ],
    );
    let pvi: Value = serde_json::from_str(&fs::read_to_string(d.join("pvi.json")).unwrap()).unwrap();
    assert_eq!(pvi["total"]["n"].as_u64().unwrap() as usize, test.len());

    let preds: Vec<Value> = test.iter().map(|c| json!({"id": c["claim_id"], "label": c["label"]})).collect();
    write_lines(&d.join("preds.jsonl"), &preds);
    let nli: Value =
        serde_json::from_str(&factsearch(d, &["eval", "nli", "--preds", "preds.jsonl", "--targets", "preds.jsonl"])).unwrap();
    assert_eq!(nli["f1_macro"].as_f64(), Some(1.0));

    let spans: Value = serde_json::from_str(&factsearch(
        d,
        &["highlight", "--claim", "the wreck was found", "--paragraph", "a wreck was found"],
    ))
    .unwrap();
    assert_eq!(spans.as_array().unwrap().len(), 2);
}

#[test]
fn missing_backends_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_factsearch"))
        .args(["retrieve", "--corpus", "x.jsonl", "--claim", "c"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
