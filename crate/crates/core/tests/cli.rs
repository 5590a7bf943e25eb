//! End-to-end tests of the `pimo` binary: exit-code classes, report
//! envelope shape, CSV projections, sampling round trips, and byte-level
//! determinism across runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pimo::ensemble::{load_ensemble, save_ensemble, MatrixEnsemble};
use pimo::nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pimo")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn pimo")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

fn stdout_json(out: &Output) -> Value {
    assert_eq!(
        code(out),
        0,
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is not valid JSON")
}

/// A deterministic 30-word, D=4 ensemble with a pair file covering all five
/// relations, plus a degenerate pair file with a single-synonym class.
struct Fixture {
    _tmp: TempDir,
    ensemble: PathBuf,
    pairs: PathBuf,
    tiny: PathBuf,
    root: PathBuf,
}

fn fixture() -> Fixture {
    let tmp = TempDir::new().expect("tempdir");
    let root = tmp.path().to_path_buf();
    // Every word is a shared center plus a small pair-specific direction,
    // so deviation-vector cosines are controlled per relation: synonym and
    // co-hyponym pairs share their direction (cosine near +1), antonym
    // pairs oppose it (near -1), unrelated and hyper/hyponym pairs use
    // independent directions (near 0). Hypernyms get the larger step so
    // their deviation norms dominate. This keeps every classification mode
    // well-posed (ordered class means) on a tiny ensemble.
    let d = 4usize;
    let eps = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut random = |scale: f64| -> DMatrix<f64> {
        DMatrix::from_fn(d, d, |_, _| rng.gen_range(-scale..scale))
    };
    let center = random(1.0);
    let mut words: Vec<String> = Vec::new();
    let mut mats: Vec<DMatrix<f64>> = Vec::new();
    let mut tsv = String::from("word1\tword2\trelation\tscore\thyper_direction\n");
    let specs = [
        ("SYNONYMS", "-", 1.0, 1.0, true),
        ("ANTONYMS", "-", 1.0, -1.0, true),
        ("NONE", "-", 1.0, 1.0, false),
        ("HYPER_HYPONYMS", "1", 2.0, 0.4, false),
        ("COHYPONYMS", "-", 1.0, 1.0, true),
    ];
    let mut idx = 0usize;
    for (relation, direction, first_scale, second_scale, shared) in specs {
        for k in 0..3 {
            let w1 = format!("w{idx:03}");
            let w2 = format!("w{:03}", idx + 1);
            idx += 2;
            let dir = random(1.0);
            let second_dir = if shared { dir.clone() } else { random(1.0) };
            mats.push(&center + eps * first_scale * &dir + 0.002 * random(1.0));
            mats.push(&center + eps * second_scale * second_dir + 0.002 * random(1.0));
            words.push(w1.clone());
            words.push(w2.clone());
            tsv.push_str(&format!("{w1}\t{w2}\t{relation}\t{}.0\t{direction}\n", 5 + k));
        }
    }
    let ens = MatrixEnsemble::new(words, mats, "fixture".into()).expect("valid ensemble");
    let ensemble = root.join("ens");
    save_ensemble(&ens, &ensemble).expect("save fixture ensemble");
    let pairs = root.join("pairs.tsv");
    std::fs::write(&pairs, tsv).expect("write pairs.tsv");

    let tiny = root.join("tiny.tsv");
    std::fs::write(
        &tiny,
        "word1\tword2\trelation\tscore\thyper_direction\n\
         w000\tw001\tSYNONYMS\t8.0\t-\n\
         w002\tw003\tANTONYMS\t8.0\t-\n\
         w004\tw005\tANTONYMS\t7.0\t-\n",
    )
    .expect("write tiny.tsv");

    Fixture { _tmp: tmp, ensemble, pairs, tiny, root }
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn gaussianity_report_envelope() {
    let fx = fixture();
    let out = run(&["gaussianity", "--ensemble", path_str(&fx.ensemble)]);
    let v = stdout_json(&out);
    assert_eq!(v["tool"], "pimo");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["command"], "gaussianity");
    assert_eq!(v["config"]["set"], "15");
    assert_eq!(v["config"]["input"]["ensemble"], path_str(&fx.ensemble));
    let rows = v["result"]["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 15);
    for row in rows {
        assert!(row["norm_diff"].is_number(), "norm_diff defined per row");
    }
}

#[test]
fn exit_codes_separate_error_families() {
    let fx = fixture();
    // Success.
    let out = run(&["dump-observables"]);
    assert_eq!(code(&out), 0);
    // Unknown flag: rejected by the parser.
    let out = run(&["dump-observables", "--no-such-flag"]);
    assert_eq!(code(&out), 2);
    // Mixing weight outside [0, 1]: flag-validation error.
    let out = run(&[
        "gaussianity",
        "--mo",
        path_str(&fx.ensemble),
        "--ms",
        path_str(&fx.ensemble),
        "--a",
        "1.5",
    ]);
    assert_eq!(code(&out), 2);
    // Unreadable pairs file: ingestion error, message names the path.
    let missing = fx.root.join("nope.tsv");
    let out = run(&[
        "relation-means",
        "--ensemble",
        path_str(&fx.ensemble),
        "--pairs",
        path_str(&missing),
    ]);
    assert_eq!(code(&out), 3);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("nope.tsv"),
        "stderr should name the missing file"
    );
    // Degenerate data: a class too small to split.
    let out = run(&[
        "classify",
        "--ensemble",
        path_str(&fx.ensemble),
        "--pairs",
        path_str(&fx.tiny),
        "--mode",
        "syn-ant",
        "--protocol",
        "split",
    ]);
    assert_eq!(code(&out), 5);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let fx = fixture();
    let args = [
        "classify",
        "--ensemble",
        path_str(&fx.ensemble),
        "--pairs",
        path_str(&fx.pairs),
        "--mode",
        "syn-ant",
        "--protocol",
        "split",
        "--frac",
        "0.65",
        "--reps",
        "8",
        "--seed",
        "3",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, second.stdout, "same seed must give identical bytes");
    // The report embeds the protocol configuration.
    let v: Value = serde_json::from_slice(&first.stdout).expect("json");
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["config"]["protocol"], "split");
    assert!(v["result"]["balanced_accuracy"].is_number());
    // Writing to --out produces exactly the stdout bytes.
    let out_path = fx.root.join("report.json");
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", path_str(&out_path)]);
    let third = run(&with_out);
    assert_eq!(code(&third), 0);
    assert!(third.stdout.is_empty(), "no stdout when --out is given");
    let written = std::fs::read(&out_path).expect("read report file");
    assert_eq!(written, first.stdout);
}

#[test]
fn relation_means_csv_projection() {
    let fx = fixture();
    let out = run(&[
        "relation-means",
        "--ensemble",
        path_str(&fx.ensemble),
        "--pairs",
        path_str(&fx.pairs),
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).expect("utf-8 csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("relation,count,mean,std,stderr"));
    // One row per relation present in the pair file, display order.
    let names: Vec<&str> = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        names,
        ["ANTONYMS", "NONE", "SYNONYMS", "HYPER_HYPONYMS", "COHYPONYMS"]
    );
}

#[test]
fn sample_round_trip_and_determinism() {
    let fx = fixture();
    let sampled = fx.root.join("sampled");
    let moments = fx.root.join("pm.json");
    let out = run(&[
        "sample",
        "--ensemble",
        path_str(&fx.ensemble),
        "--count",
        "8",
        "--seed",
        "5",
        "--out-dir",
        path_str(&sampled),
        "--moments-out",
        path_str(&moments),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let ens = load_ensemble(&sampled).expect("sampled ensemble loads");
    assert_eq!(ens.len(), 8);
    assert_eq!(ens.dim(), 4);
    assert!(moments.exists(), "moments JSON written");
    // Sampling from the saved moments with the same seed reproduces the
    // ensemble byte for byte.
    let sampled2 = fx.root.join("sampled2");
    let out = run(&[
        "sample",
        "--moments",
        path_str(&moments),
        "--count",
        "8",
        "--seed",
        "5",
        "--out-dir",
        path_str(&sampled2),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["manifest.json", "sample_0000001.csv", "sample_0000008.csv"] {
        let a = std::fs::read(sampled.join(name)).expect("first sample file");
        let b = std::fs::read(sampled2.join(name)).expect("second sample file");
        assert_eq!(a, b, "{name} differs between equivalent sampling runs");
    }
    // The sampled ensemble feeds back into analysis commands.
    let out = run(&["gaussianity", "--ensemble", path_str(&sampled)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn dump_observables_table_sizes_and_custom_sets() {
    let fx = fixture();
    for (set, want) in [("28", 28), ("13", 13), ("10", 10), ("15", 15), ("23", 23)] {
        let out = run(&["dump-observables", "--set", set]);
        let v = stdout_json(&out);
        let rows = v["result"]["observables"].as_array().expect("rows");
        assert_eq!(rows.len(), want, "set {set}");
    }
    // A custom set given as a JSON file: a trace and a two-step cycle.
    let custom = fx.root.join("set.json");
    std::fs::write(
        &custom,
        r#"[{"nodes":1,"edges":[[0,0]]},{"nodes":2,"edges":[[0,1],[1,0]]}]"#,
    )
    .expect("write custom set");
    let out = run(&[
        "features",
        "--ensemble",
        path_str(&fx.ensemble),
        "--set",
        path_str(&custom),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["config"]["set"], "custom");
    let labels = v["result"]["features"]["labels"].as_array().expect("labels");
    assert_eq!(labels.len(), 2);
    // Unknown named set that is not a file either: flag error.
    let out = run(&["dump-observables", "--set", "12"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn classify_modes_and_stratify_toggle() {
    let fx = fixture();
    for mode in ["syn-ant", "syn-ant-none", "syn-vs-rest", "hyper-cohypo"] {
        let out = run(&[
            "classify",
            "--ensemble",
            path_str(&fx.ensemble),
            "--pairs",
            path_str(&fx.pairs),
            "--mode",
            mode,
        ]);
        let v = stdout_json(&out);
        assert_eq!(v["config"]["mode"], mode);
        assert!(
            v["result"]["balanced_accuracy"].is_number(),
            "defined BA for mode {mode}"
        );
    }
    let out = run(&[
        "classify",
        "--ensemble",
        path_str(&fx.ensemble),
        "--pairs",
        path_str(&fx.pairs),
        "--mode",
        "syn-ant",
        "--protocol",
        "split",
        "--reps",
        "6",
        "--stratify",
        "false",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["config"]["stratify"], false);
}

#[test]
fn hyper_length_and_baselines_run() {
    let fx = fixture();
    let out = run(&[
        "hyper-length",
        "--ensemble",
        path_str(&fx.ensemble),
        "--pairs",
        path_str(&fx.pairs),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["result"]["total"], 3);
    let out = run(&[
        "baselines",
        "--ensemble",
        path_str(&fx.ensemble),
        "--pairs",
        path_str(&fx.pairs),
    ]);
    let v = stdout_json(&out);
    let tables = v["result"].as_array().expect("baseline tables");
    // Without --vectors only the two flat matrix baselines run.
    assert_eq!(tables.len(), 2);
}
