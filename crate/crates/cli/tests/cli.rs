//! Binary-level tests: exit codes, output artifacts, rerunnability, and
//! error hygiene.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexcite"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: stdout={} stderr={}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let docs = [
            r#"{"id":"D1","role":"candidate","title":"One","abstract":"legal citation"}"#,
            r#"{"id":"D2","role":"candidate","title":"Two","abstract":"legal legal law"}"#,
            r#"{"id":"D3","role":"candidate","title":"Three","abstract":"court opinion"}"#,
            r#"{"id":"Q1","role":"query","title":"Q1","abstract":"legal"}"#,
            r#"{"id":"Q2","role":"query","title":"Q2","abstract":"court legal"}"#,
            r#"{"id":"Q3","role":"query","title":"Q3","abstract":"law citation"}"#,
        ]
        .join("\n");
        let cites = [
            r#"{"citing_id":"Q1","cited_id":"D1"}"#,
            r#"{"citing_id":"Q2","cited_id":"D3"}"#,
            r#"{"citing_id":"Q3","cited_id":"D2"}"#,
        ]
        .join("\n");
        fs::write(dir.path().join("docs.jsonl"), docs).unwrap();
        fs::write(dir.path().join("cites.jsonl"), cites).unwrap();
        Self { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn file(&self, name: &str) -> PathBuf {
        self.path().join(name)
    }

    fn ingest(&self) -> String {
        assert_success(&run_in(
            self.path(),
            &[
                "ingest",
                "--documents",
                "docs.jsonl",
                "--citations",
                "cites.jsonl",
                "--output",
                "corpus.json",
            ],
        ))
    }

    fn prepare(&self) {
        self.ingest();
        assert_success(&run_in(
            self.path(),
            &[
                "split",
                "--corpus",
                "corpus.json",
                "--output",
                "split.json",
                "--ratio",
                "0.5",
                "--seed",
                "42",
            ],
        ));
        assert_success(&run_in(
            self.path(),
            &["index", "--corpus", "corpus.json", "--output", "index.json"],
        ));
    }
}

#[test]
fn help_exits_zero_for_every_command() {
    for command in [
        "ingest",
        "split",
        "index",
        "embed",
        "query",
        "run",
        "evaluate",
        "export-triplets",
    ] {
        let output = bin().args([command, "--help"]).output().unwrap();
        assert!(output.status.success(), "{command} --help failed");
        let text = String::from_utf8_lossy(&output.stdout);
        assert!(text.contains("--"), "{command} --help lists no flags");
    }
    assert!(bin().arg("--help").output().unwrap().status.success());
}

#[test]
fn usage_errors_exit_two() {
    let fixture = Fixture::new();
    // Unknown flag.
    let output = run_in(fixture.path(), &["split", "--bogus"]);
    assert_eq!(output.status.code(), Some(2));
    // Out-of-range ratio.
    let output = run_in(
        fixture.path(),
        &["split", "--corpus", "c", "--output", "o", "--ratio", "1.5"],
    );
    assert_eq!(output.status.code(), Some(2));
    // Dense mode without any embedding source.
    let output = run_in(
        fixture.path(),
        &[
            "run",
            "--corpus",
            "c",
            "--split",
            "s",
            "--index",
            "i",
            "--mode",
            "dense_full",
            "--output",
            "o",
        ],
    );
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn ingest_prints_the_summary_line() {
    let fixture = Fixture::new();
    let stdout = fixture.ingest();
    assert_eq!(
        stdout.lines().next().unwrap(),
        "documents=6 candidates=3 queries=3 edges=3"
    );
    assert!(fixture.file("corpus.json").exists());
}

#[test]
fn operational_errors_exit_one_and_leave_no_partial_output() {
    let fixture = Fixture::new();
    fixture.prepare();
    let report = "missing-dir/report.json";
    let output = run_in(
        fixture.path(),
        &[
            "evaluate",
            "--corpus",
            "corpus.json",
            "--mode",
            "bm25_only",
            "--split",
            "split.json",
            "--index",
            "index.json",
            "--output",
            report,
        ],
    );
    assert_eq!(output.status.code(), Some(1));
    assert!(!fixture.file(report).exists());
    assert!(!fixture.path().join("missing-dir").exists());

    // Corrupt input: a run file that is not JSON.
    fs::write(fixture.file("bad_run.json"), "not json").unwrap();
    let output = run_in(
        fixture.path(),
        &[
            "evaluate",
            "--corpus",
            "corpus.json",
            "--run",
            "bad_run.json",
            "--output",
            "report.json",
        ],
    );
    assert_eq!(output.status.code(), Some(1));
    assert!(!fixture.file("report.json").exists());
    assert!(!fixture.file("report.json.tmp").exists());
}

#[test]
fn dangling_edges_fail_unless_skipped() {
    let fixture = Fixture::new();
    let cites = fixture.file("cites.jsonl");
    let mut content = fs::read_to_string(&cites).unwrap();
    content.push_str("\n{\"citing_id\":\"Q1\",\"cited_id\":\"GHOST\"}");
    fs::write(&cites, content).unwrap();

    let output = run_in(
        fixture.path(),
        &[
            "ingest",
            "--documents",
            "docs.jsonl",
            "--citations",
            "cites.jsonl",
            "--output",
            "corpus.json",
        ],
    );
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("GHOST"));
    assert!(!fixture.file("corpus.json").exists());

    let output = run_in(
        fixture.path(),
        &[
            "ingest",
            "--documents",
            "docs.jsonl",
            "--citations",
            "cites.jsonl",
            "--output",
            "corpus.json",
            "--skip-dangling",
        ],
    );
    let stdout = assert_success(&output);
    assert!(stdout.contains("edges=3"));
    assert!(stdout.contains("dropped_edges=1"));
}

#[test]
fn every_command_is_rerunnable_with_identical_bytes() {
    let fixture = Fixture::new();
    fixture.prepare();
    let steps: Vec<Vec<&str>> = vec![
        vec![
            "embed",
            "--corpus",
            "corpus.json",
            "--index",
            "index.json",
            "--dim",
            "32",
            "--seed",
            "9",
            "--output-documents",
            "demb.jsonl",
            "--output-queries",
            "qemb.jsonl",
        ],
        vec![
            "run",
            "--corpus",
            "corpus.json",
            "--split",
            "split.json",
            "--index",
            "index.json",
            "--mode",
            "prefetch_rerank",
            "--document-embeddings",
            "demb.jsonl",
            "--query-embeddings",
            "qemb.jsonl",
            "--output",
            "run.json",
        ],
        vec![
            "evaluate",
            "--corpus",
            "corpus.json",
            "--run",
            "run.json",
            "--output",
            "report.json",
        ],
        vec![
            "export-triplets",
            "--corpus",
            "corpus.json",
            "--split",
            "split.json",
            "--strategy",
            "bm25_hard",
            "--index",
            "index.json",
            "--seed",
            "3",
            "--output",
            "triplets.jsonl",
        ],
    ];
    let artifacts = [
        "demb.jsonl",
        "qemb.jsonl",
        "run.json",
        "report.json",
        "triplets.jsonl",
    ];
    for step in &steps {
        assert_success(&run_in(fixture.path(), step));
    }
    let first: Vec<Vec<u8>> = artifacts
        .iter()
        .map(|name| fs::read(fixture.file(name)).unwrap())
        .collect();
    for step in &steps {
        assert_success(&run_in(fixture.path(), step));
    }
    for (name, bytes) in artifacts.iter().zip(&first) {
        let again = fs::read(fixture.file(name)).unwrap();
        assert_eq!(&again, bytes, "{name} changed across reruns");
    }
}

#[test]
fn evaluate_report_echoes_the_run_config() {
    let fixture = Fixture::new();
    fixture.prepare();
    assert_success(&run_in(
        fixture.path(),
        &[
            "run",
            "--corpus",
            "corpus.json",
            "--split",
            "split.json",
            "--index",
            "index.json",
            "--mode",
            "bm25_only",
            "--k",
            "2",
            "--output",
            "run.json",
        ],
    ));
    let stdout = assert_success(&run_in(
        fixture.path(),
        &[
            "evaluate",
            "--corpus",
            "corpus.json",
            "--run",
            "run.json",
            "--k",
            "2",
            "--output",
            "report.json",
        ],
    ));
    assert!(stdout.starts_with("map="), "summary line missing: {stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixture.file("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["mode"], "bm25_only");
    assert_eq!(report["config"]["k"], 2);
    assert_eq!(report["k"], 2);
    assert_eq!(report["ap_norm"], "min_rel_k");
}

#[test]
fn query_prints_ranked_lines() {
    let fixture = Fixture::new();
    fixture.prepare();
    let stdout = assert_success(&run_in(
        fixture.path(),
        &[
            "query",
            "--corpus",
            "corpus.json",
            "--index",
            "index.json",
            "--text",
            "LEGAL law!",
            "--k",
            "2",
        ],
    ));
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("1\tD2\t"), "got {:?}", lines[0]);
}
