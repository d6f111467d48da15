//! End-to-end tests of the command-line surface: subcommand dispatch,
//! config validation, output files, and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bubblelab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubblelab"))
        .args(args)
        .current_dir(dir)
        .env_remove("BUBBLELAB_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

#[test]
fn payoff_prints_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = bubblelab(
        &[
            "payoff", "--b0", "100", "--s0", "100", "--return", "1.1", "--years", "10",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("125.94"), "{text}");
    assert!(text.contains("359.37"), "{text}");
    assert!(text.contains("0.00"), "{text}");
    assert!(text.contains("100.00"), "{text}");
}

#[test]
fn run_is_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--seed", "42", "--periods", "200", "--out", "a"];
    let out = bubblelab(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let args2 = ["run", "--seed", "42", "--periods", "200", "--out", "b"];
    let out2 = bubblelab(&args2, dir.path());
    assert!(out2.status.success(), "{}", stderr(&out2));

    let a = fs::read(dir.path().join("a/run/trace.csv")).unwrap();
    let b = fs::read(dir.path().join("b/run/trace.csv")).unwrap();
    assert_eq!(a, b);

    let differently_seeded = ["run", "--seed", "43", "--periods", "200", "--out", "c"];
    let out3 = bubblelab(&differently_seeded, dir.path());
    assert!(out3.status.success());
    let c = fs::read(dir.path().join("c/run/trace.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn experiment_writes_files_and_exits_zero_on_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = bubblelab(&["experiment", "fig1-top", "--out", "exp"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("pass"));
    assert!(dir.path().join("exp/fig1-top/returns.csv").exists());
    let report = fs::read_to_string(dir.path().join("exp/fig1-top/report.json")).unwrap();
    assert!(report.contains("\"passed\": true"));
    assert!(report.contains("\"seed\": 42"));
}

#[test]
fn unknown_experiment_name_lists_the_valid_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = bubblelab(&["experiment", "fig9"], dir.path());
    assert!(!out.status.success());
    let text = stderr(&out);
    assert!(text.contains("fig9"), "{text}");
    assert!(
        text.contains("fig1-top") && text.contains("table2"),
        "{text}"
    );
}

#[test]
fn invalid_config_fails_naming_the_fields() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "[model]\nn_agents = 500\nactive = { fixed = 600 }\n",
    )
    .unwrap();
    let out = bubblelab(&["run", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let text = stderr(&out);
    assert!(text.contains("600") && text.contains("500"), "{text}");

    fs::write(dir.path().join("typo.toml"), "[model]\nalpa = 3.0\n").unwrap();
    let out = bubblelab(&["run", "--config", "typo.toml"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("alpa"));
}

#[test]
fn env_var_overrides_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bubblelab"))
        .args(["run", "--seed", "1", "--periods", "50"])
        .current_dir(dir.path())
        .env("BUBBLELAB_OUT", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("from_env/run/trace.csv").exists());
}

#[test]
fn ingest_handles_good_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("date,close\n");
    let mut price = 100.0f64;
    for i in 0..260 {
        price *= 1.0 + 0.001 * ((i % 7) as f64 - 3.0);
        let year = 1990 + i / 250;
        let month = 1 + (i % 250) / 21;
        let day = 1 + (i % 250) % 21;
        text.push_str(&format!("{year:04}-{month:02}-{day:02},{price}\n"));
    }
    fs::write(dir.path().join("prices.csv"), &text).unwrap();
    let out = bubblelab(&["ingest", "prices.csv", "--out", "ing"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("semi-annual windows"));
    assert!(dir.path().join("ing/ingest/windows.csv").exists());
    assert!(dir.path().join("ing/ingest/report.json").exists());

    fs::write(
        dir.path().join("unsorted.csv"),
        "1990-01-02,10\n1990-01-01,11\n",
    )
    .unwrap();
    let out = bubblelab(&["ingest", "unsorted.csv"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
}

#[test]
fn failed_experiment_exits_nonzero_but_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    // Half a year is far too short for the ten-year wealth checks.
    fs::write(
        dir.path().join("short.toml"),
        "[model]\nhorizon_periods = 50\n",
    )
    .unwrap();
    let out = bubblelab(
        &[
            "experiment",
            "fig4",
            "--config",
            "short.toml",
            "--out",
            "exp",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stdout(&out).contains("FAIL"));
    let report = fs::read_to_string(dir.path().join("exp/fig4/report.json")).unwrap();
    assert!(report.contains("\"passed\": false"));
    assert!(dir.path().join("exp/fig4/scatter.csv").exists());
}

#[test]
fn sweep_writes_cells_and_correlations() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("tiny.toml"),
        "[model]\nn_agents = 50\n\n[sweep]\ncells = 12\ncell_periods = 150\nactive_counts = [5]\n",
    )
    .unwrap();
    let out = bubblelab(
        &[
            "sweep",
            "--config",
            "tiny.toml",
            "--seed",
            "7",
            "--out",
            "sw",
            "--threads",
            "2",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let cells = fs::read_to_string(dir.path().join("sw/sweep/cells_m5.csv")).unwrap();
    assert_eq!(cells.lines().count(), 13); // header + 12 cells
    let report = fs::read_to_string(dir.path().join("sw/sweep/report.json")).unwrap();
    assert!(report.contains("\"active_count\": 5"));
}
