use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const EXPERIMENTS: [(&str, &str); 8] = [
    ("compress-classical", "trial,x,y,bits,correct,aborted"),
    ("compress-quantum", "trial,x,y,bits,correct,aborted"),
    ("compress-multiround", "trial,x,y,bits,correct,aborted"),
    ("privacy", "round,leak_about_x,leak_about_y"),
    ("ersp", "trial,x,j,bits,fidelity"),
    ("eq-entangled", "prior,x,x_prime,accept"),
    ("direct-sum", "copies,message_bits,min_error"),
    (
        "corrector-audit",
        "x,label,prior,good,divergence,weight,success,residual",
    ),
];

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("samples")
        .join(format!("{name}.json"))
}

fn commlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_commlab"))
        .args(args)
        .output()
        .unwrap()
}

fn run_to(
    dir: &Path,
    experiment: &str,
    input: &Path,
    seed: &str,
    trials: &str,
    extra: &[&str],
) -> Output {
    let mut args = vec![
        "--experiment",
        experiment,
        "--input",
        input.to_str().unwrap(),
        "--seed",
        seed,
        "--trials",
        trials,
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    commlab(&args)
}

fn summary(dir: &Path, experiment: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{experiment}.json"))).unwrap())
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_variant(dir: &Path, name: &str, base: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(sample(base)).unwrap()).unwrap();
    edit(&mut v);
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string(&v).unwrap()).unwrap();
    p
}

#[test]
fn every_sample_validates_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (name, header) in EXPERIMENTS {
        let v = commlab(&["validate", sample(name).to_str().unwrap()]);
        assert!(v.status.success(), "{name}: {}", stderr(&v));
        assert_eq!(String::from_utf8_lossy(&v.stdout), "ok\n");

        let o = run_to(dir.path(), name, &sample(name), "11", "500", &[]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let csv = fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some(header), "{name}");
        assert!(csv.lines().count() > 1, "{name}");
        let s = summary(dir.path(), name);
        assert_eq!(s["parameters"]["experiment"], name);
        assert_eq!(s["parameters"]["seed"], 11);
        assert_eq!(s["parameters"]["trials"], 500);
    }
}

#[test]
fn stdout_mode_splits_csv_and_summary() {
    let o = commlab(&[
        "--experiment",
        "privacy",
        "--input",
        sample("privacy").to_str().unwrap(),
        "--seed",
        "1",
        "--trials",
        "1",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("round,leak_about_x,leak_about_y\n"));
    let s: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(s["parameters"]["kind"], "quantum-two-way");
}

#[test]
fn output_is_identical_across_thread_counts() {
    let runs = ["1", "2", "4"].map(|threads| {
        let dir = tempfile::tempdir().unwrap();
        let mut files = Vec::new();
        for name in [
            "compress-classical",
            "compress-quantum",
            "compress-multiround",
            "ersp",
            "corrector-audit",
        ] {
            let o = run_to(
                dir.path(),
                name,
                &sample(name),
                "99",
                "3000",
                &["--threads", threads],
            );
            assert!(o.status.success(), "{name}: {}", stderr(&o));
            for ext in ["csv", "json"] {
                files.push(fs::read(dir.path().join(format!("{name}.{ext}"))).unwrap());
            }
        }
        files
    });
    assert!(runs[0] == runs[1] && runs[1] == runs[2]);
}

#[test]
fn zero_information_ensemble_audits_clean() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_to(
        dir.path(),
        "corrector-audit",
        &sample("corrector-audit"),
        "3",
        "1000",
        &[]
    )
    .status
    .success());
    let r = &summary(dir.path(), "corrector-audit")["results"];
    assert_eq!(r["alpha"], 1.0);
    assert_eq!(r["information"], 0.0);
    assert!(r["residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["success_deviation"], 0.0);
    assert_eq!(r["pass"], true);
}

#[test]
fn ersp_on_maximally_mixed_qubit_needs_two_copies_on_average() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        run_to(dir.path(), "ersp", &sample("ersp"), "5", "10000", &[])
            .status
            .success()
    );
    let zero = &summary(dir.path(), "ersp")["results"]["states"][0];
    assert_eq!(zero["label"], "zero");
    // σ = I/2 and ρ = |0⟩⟨0| give a geometric count with p = 1/2
    assert_eq!(zero["success_probability"], 0.5);
    let j = &zero["j"];
    let (mean, sigma) = (j["mean"].as_f64().unwrap(), j["sigma"].as_f64().unwrap());
    assert!((mean - 2.0).abs() <= 3.0 * sigma, "{mean} ± {sigma}");
    assert_eq!(zero["aborts"], 0);
}

#[test]
fn direct_sum_of_equality_doubles_the_message() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_to(
        dir.path(),
        "direct-sum",
        &sample("direct-sum"),
        "0",
        "1",
        &[]
    )
    .status
    .success());
    let r = &summary(dir.path(), "direct-sum")["results"]["optima"];
    // one copy: 1 bit errs on 3/16 > 1/8, 2 bits are exact
    assert_eq!(r[0]["bits"], 2);
    assert_eq!(r[1]["bits"], 4);
    assert_eq!(r[1]["ratio_to_first"], 2.0);
    let csv = fs::read_to_string(dir.path().join("direct-sum.csv")).unwrap();
    assert!(csv.contains("\n1,1,0.1875\n"));
}

#[test]
fn povm_not_summing_to_identity_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_variant(dir.path(), "bad.json", "compress-quantum", |v| {
        v["povms"][1][0] = serde_json::json!([[0.45, 0.45], [0.45, 0.45]]);
    });
    let o = commlab(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr(&o);
    assert!(e.contains("povms[1]") && e.contains("identity"), "{e}");
}

#[test]
fn kernel_row_off_by_two_percent_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_variant(dir.path(), "bad.json", "compress-classical", |v| {
        v["rounds"][0]["kernel"][1][0][1] = Value::from(0.93);
    });
    let o = commlab(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr(&o);
    assert!(e.contains("round 1") && e.contains("sums to 0.98"), "{e}");
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.json");
    fs::write(&p, "{\n  \"kind\": \"ensemble\",\n  \"dim_r\": [\n}").unwrap();
    let o = commlab(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    fs::write(&p, r#"{"kind": "tree"}"#).unwrap();
    let o = commlab(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("unknown variant"), "{}", stderr(&o));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let s = sample("ersp");
    let missing = dir.path().join("nope.json");

    assert_eq!(
        run_to(dir.path(), "ersp", &missing, "1", "1", &[])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        commlab(&["validate", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    assert_eq!(
        run_to(dir.path(), "teleport", &s, "1", "1", &[])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_to(dir.path(), "ersp", &s, "1", "0", &[]).status.code(),
        Some(2)
    );
    assert_eq!(
        run_to(dir.path(), "ersp", &s, "1", "1", &["--delta", "1.5"])
            .status
            .code(),
        Some(2)
    );
    let no_seed = commlab(&[
        "--experiment",
        "ersp",
        "--input",
        s.to_str().unwrap(),
        "--trials",
        "1",
    ]);
    assert_eq!(no_seed.status.code(), Some(2));

    let wrong = run_to(dir.path(), "compress-quantum", &s, "1", "1", &[]);
    assert_eq!(wrong.status.code(), Some(3));
    assert!(stderr(&wrong).contains("quantum-one-way"));

    let over = Command::new(env!("CARGO_BIN_EXE_commlab"))
        .env("COMMLAB_DIM_BUDGET", "4")
        .args([
            "--experiment",
            "compress-multiround",
            "--input",
            sample("compress-multiround").to_str().unwrap(),
        ])
        .args([
            "--seed",
            "1",
            "--trials",
            "10",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(over.status.code(), Some(4), "{}", stderr(&over));
    assert!(stderr(&over).contains("budget"));
}
