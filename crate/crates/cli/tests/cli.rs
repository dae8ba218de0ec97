use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use survgp::commands::run::Manifest;
use survgp::model::ModelFile;

fn survgp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_survgp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn survgp")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_config(dir: &Path, depth: usize, repetitions: usize) -> PathBuf {
    let path = dir.join("cfg.json");
    fs::write(
        &path,
        format!(
            r#"{{
  "dataset": {{"csv": {{"path": "xor.csv", "ignore": ["group"]}}}},
  "external": {{"xor": {{"n": 300, "seed": 99}}}},
  "xor_mode": true,
  "trees": 3, "depth": {depth}, "template_depth": 2,
  "population_size": 16, "max_generations": 3,
  "repetitions": {repetitions}, "bootstrap": 20, "seed": 5,
  "output": "out"
}}"#
        ),
    )
    .unwrap();
    path
}

fn synth_small(dir: &Path) {
    ok(&survgp(
        dir,
        &["synth", "--n", "400", "--seed", "3", "--out", "xor.csv"],
    ));
}

#[test]
fn synth_is_deterministic_and_records_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&survgp(
        d,
        &[
            "synth",
            "--n",
            "200",
            "--seed",
            "7",
            "--out",
            "a.csv",
            "--censor-rates",
            "0.2,0.1",
        ],
    ));
    ok(&survgp(
        d,
        &[
            "synth",
            "--n",
            "200",
            "--seed",
            "7",
            "--out",
            "b.csv",
            "--censor-rates",
            "0.2,0.1",
        ],
    ));
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("x0,x1,time,event,group\n"));
    assert_eq!(text.lines().count(), 201);
    let sidecar: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("a.csv.json")).unwrap()).unwrap();
    assert_eq!(
        sidecar["params"]["censor_rates"],
        serde_json::json!([0.2, 0.1])
    );
    assert_eq!(sidecar["seed"], 7);
    assert_eq!(sidecar["toolkit"], "survgp");
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(survgp(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        survgp(d, &["synth", "--n", "1", "--out", "x.csv"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        survgp(d, &["render", "m.json", "--format", "svg"])
            .status
            .code(),
        Some(1)
    );
    synth_small(d);
    let cfg = small_config(d, 3, 2);
    let out = survgp(d, &["run", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("K = 7"));
    assert!(survgp(d, &["--help"]).status.success());
}

#[test]
fn runs_evaluate_render_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_small(d);
    let cfg = small_config(d, 2, 2);
    ok(&survgp(d, &["run", cfg.to_str().unwrap(), "--jobs", "1"]));
    let manifest: Manifest =
        serde_json::from_slice(&fs::read(d.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.repetitions.len(), 2);
    assert_ne!(manifest.repetitions[0].dir, manifest.repetitions[1].dir);
    assert_ne!(manifest.repetitions[0].seeds, manifest.repetitions[1].seeds);
    assert!(manifest.repetitions.iter().all(|e| e.status == "ok"));
    for name in [
        "result.json",
        "model.json",
        "hypervolume.csv",
        "evaluation.csv",
    ] {
        assert!(d.join("out/rep-000").join(name).is_file(), "{name}");
    }
    let hv = fs::read_to_string(d.join("out/rep-000/hypervolume.csv")).unwrap();
    assert!(hv.starts_with("generation,hypervolume,archive_size,evaluations\n0,"));

    // rerunning reproduces every repetition file byte for byte
    ok(&survgp(
        d,
        &[
            "run",
            cfg.to_str().unwrap(),
            "--jobs",
            "1",
            "--out",
            "again",
        ],
    ));
    for name in [
        "result.json",
        "model.json",
        "hypervolume.csv",
        "evaluation.csv",
    ] {
        assert_eq!(
            fs::read(d.join("out/rep-001").join(name)).unwrap(),
            fs::read(d.join("again/rep-001").join(name)).unwrap(),
            "{name}"
        );
    }

    ok(&survgp(
        d,
        &["synth", "--n", "250", "--seed", "11", "--out", "ext.csv"],
    ));
    let model = "out/rep-000/model.json";
    let eval = |out: &str, b: &str| {
        ok(&survgp(
            d,
            &[
                "evaluate",
                "--model",
                model,
                "--data",
                "ext.csv",
                "--bootstrap",
                b,
                "--out",
                out,
            ],
        ));
        fs::read_to_string(d.join(out)).unwrap()
    };
    let first = eval("e1.csv", "30");
    assert_eq!(first, eval("e2.csv", "30"));
    assert!(first
        .starts_with("member,complexity,ibs_mean,ibs_lo,ibs_hi,cindex_mean,cindex_lo,cindex_hi\n"));
    let single = eval("e3.csv", "1");
    for line in single.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[2], f[3]);
        assert_eq!(f[3], f[4]);
        assert_eq!(f[5], f[6]);
        assert_eq!(f[6], f[7]);
    }

    let text = survgp(d, &["render", model]);
    ok(&text);
    let text = String::from_utf8(text.stdout).unwrap();
    let m: ModelFile = serde_json::from_slice(&fs::read(d.join(model)).unwrap()).unwrap();
    let headers: Vec<&str> = text.lines().filter(|l| l.starts_with("# member")).collect();
    assert_eq!(headers.len(), m.members.len());
    let complexities: Vec<u32> = headers
        .iter()
        .map(|h| h.split(' ').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(complexities.windows(2).all(|w| w[0] <= w[1]));
    let dot = survgp(
        d,
        &["render", model, "--format", "dot", "--out", "tree.dot"],
    );
    ok(&dot);
    let dot = fs::read_to_string(d.join("tree.dot")).unwrap();
    assert_eq!(
        dot.matches("digraph survival_tree {").count(),
        m.members.len()
    );

    ok(&survgp(d, &["aggregate", "out", "--out", "agg"]));
    let surface = fs::read_to_string(d.join("agg/attainment.csv")).unwrap();
    assert!(surface.starts_with("complexity,ibs\n"));
    let stats: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("agg/hypervolume.json")).unwrap()).unwrap();
    assert_eq!(stats["runs"].as_array().unwrap().len(), 2);
    let best = fs::read_to_string(d.join("agg/best_models.csv")).unwrap();
    assert!(best.lines().skip(1).all(|l| l.ends_with(",external")));
    assert_eq!(
        survgp(d, &["aggregate", "nowhere", "--out", "agg2"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn failed_repetitions_leave_a_marker() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // one censored patient: the validation split cannot stratify
    let mut csv = String::from("x0,time,event\n");
    for i in 0..30 {
        csv.push_str(&format!("{},{},{}\n", i % 5, 1 + i, u8::from(i != 0)));
    }
    fs::write(d.join("one.csv"), csv).unwrap();
    fs::write(
        d.join("cfg.json"),
        r#"{"dataset": {"csv": {"path": "one.csv"}}, "trees": 3, "depth": 2,
            "population_size": 8, "max_generations": 1, "repetitions": 1, "output": "out"}"#,
    )
    .unwrap();
    let out = survgp(d, &["run", "cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(d.join("out/rep-000/FAILED").is_file());
    let manifest: Manifest =
        serde_json::from_slice(&fs::read(d.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.repetitions[0].status, "failed");
    assert!(manifest.repetitions[0]
        .error
        .as_deref()
        .unwrap()
        .contains("stratum"));
}

#[test]
fn evaluate_rejects_mismatched_covariates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_small(d);
    small_config(d, 2, 1);
    ok(&survgp(d, &["run", "cfg.json"]));
    fs::write(d.join("other.csv"), "age,time,event\n1,2,1\n2,3,0\n3,1,1\n").unwrap();
    let out = survgp(
        d,
        &[
            "evaluate",
            "--model",
            "out/rep-000/model.json",
            "--data",
            "other.csv",
            "--out",
            "e.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column 'x0'"));
}
