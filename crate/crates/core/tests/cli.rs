use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const GOLDEN_ROW: &str = "1,red,10,0,100.000000,2,0,0,0.350000,0.000000,2,0,0,1.000000";

const PAIR_CONFIG: &str = r#"{"seed":7,"topic":"t","init":{
    "opinion":{"kind":"constant","value":0.5},
    "susceptibility":{"kind":"constant","value":1.0},
    "confidence_bound":{"kind":"constant","value":0.6}}}"#;

fn infowar(args: &[&str], dir: &Path, stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_infowar"))
        .args(args)
        .current_dir(dir)
        .env_remove("SIM_LLM_API_KEY_RED")
        .env_remove("SIM_LLM_API_KEY_BLUE")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn infowar");
    let mut pipe = child.stdin.take().unwrap();
    if let Some(text) = stdin {
        pipe.write_all(text.as_bytes()).ok();
    }
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn pair_fixture(dir: &Path) {
    std::fs::write(dir.join("cfg.json"), PAIR_CONFIG).unwrap();
    std::fs::write(dir.join("red.jsonl"), "{\"message\":\"hi\",\"potency\":10}\n").unwrap();
    std::fs::write(dir.join("pair.txt"), "0,1\n").unwrap();
}

#[test]
fn two_node_run_writes_the_expected_row() {
    let tmp = tempfile::tempdir().unwrap();
    pair_fixture(tmp.path());
    let o = infowar(
        &["run", "--config", "cfg.json", "--graph", "pair.txt", "--red", "scripted:red.jsonl", "--out", "run", "--yes"],
        tmp.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("outcome=RedMajority round=1"));
    let rounds = std::fs::read_to_string(tmp.path().join("run/rounds.csv")).unwrap();
    assert_eq!(rounds.lines().nth(1), Some(GOLDEN_ROW));
    for file in ["messages.jsonl", "states.csv", "run.json"] {
        assert!(tmp.path().join("run").join(file).exists(), "{file} missing");
    }

    let o = infowar(&["analyze", "run"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let metrics = std::fs::read_to_string(tmp.path().join("run/metrics.csv")).unwrap();
    assert!(metrics.contains("resource_efficiency,network,0.000000"), "{metrics}");
    assert!(tmp.path().join("run/polarization.csv").exists());
}

#[test]
fn analyze_is_pure_and_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    pair_fixture(tmp.path());
    let o = infowar(&["run", "--config", "cfg.json", "--graph", "pair.txt", "--out", "run", "--yes"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = tmp.path().join("run");
    let before: Vec<Vec<u8>> =
        ["rounds.csv", "states.csv", "messages.jsonl", "run.json"].iter().map(|f| std::fs::read(run.join(f)).unwrap()).collect();
    let first = infowar(&["analyze", "run"], tmp.path(), None);
    let metrics = std::fs::read(run.join("metrics.csv")).unwrap();
    let second = infowar(&["analyze", "run"], tmp.path(), None);
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(metrics, std::fs::read(run.join("metrics.csv")).unwrap());
    let after: Vec<Vec<u8>> =
        ["rounds.csv", "states.csv", "messages.jsonl", "run.json"].iter().map(|f| std::fs::read(run.join(f)).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn generated_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "run", "--kind", "erdos_renyi", "--n", "30", "--p", "0.2", "--seed", "9", "--topic", "x", "--out", out, "--yes",
        ]
    };
    for out in ["a", "b"] {
        let o = infowar(&args(out), tmp.path(), None);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["rounds.csv", "states.csv", "messages.jsonl"] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(file)).unwrap(),
            std::fs::read(tmp.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn generate_graph_writes_a_loadable_edge_list() {
    let tmp = tempfile::tempdir().unwrap();
    let o = infowar(
        &["generate-graph", "--kind", "watts_strogatz", "--n", "20", "--k", "4", "--beta", "0.2", "--seed", "3", "--out", "g.txt"],
        tmp.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "edges=80");
    let o = infowar(&["run", "--graph", "g.txt", "--topic", "t", "--out", "run", "--yes"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("20 nodes, 80 edges"));
}

#[test]
fn invalid_generator_flags_exit_2_naming_the_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let o = infowar(&["generate-graph", "--kind", "erdos_renyi", "--n", "10", "--p", "1.5", "--out", "g.txt"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--p"), "{}", stderr(&o));
    assert!(!tmp.path().join("g.txt").exists());
}

#[test]
fn invalid_config_exits_2_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    pair_fixture(tmp.path());
    std::fs::write(tmp.path().join("bad.json"), r#"{"dynamics":{"mu":0.9}}"#).unwrap();
    let o = infowar(&["run", "--config", "bad.json", "--graph", "pair.txt", "--topic", "t", "--out", "run", "--yes"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dynamics.mu"), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn yes_without_topic_exits_2_without_reading_stdin() {
    let tmp = tempfile::tempdir().unwrap();
    pair_fixture(tmp.path());
    let o = infowar(&["run", "--graph", "pair.txt", "--out", "run", "--yes"], tmp.path(), Some("topic from stdin\ny\n"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--topic"));
}

#[test]
fn prompt_reads_topic_and_confirmation() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("pair.txt"), "0,1\n").unwrap();
    let o = infowar(&["run", "--graph", "pair.txt", "--out", "run"], tmp.path(), Some("school vaccines\ny\n"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = std::fs::read_to_string(tmp.path().join("run/run.json")).unwrap();
    assert!(meta.contains("school vaccines"));
}

#[test]
fn declined_prompt_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    pair_fixture(tmp.path());
    let o = infowar(&["run", "--config", "cfg.json", "--graph", "pair.txt", "--out", "run"], tmp.path(), Some("n\n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn missing_credentials_exit_3_before_any_round() {
    let tmp = tempfile::tempdir().unwrap();
    pair_fixture(tmp.path());
    std::fs::write(tmp.path().join("llm.json"), r#"{"endpoint_url":"http://127.0.0.1:9","model_name":"m"}"#).unwrap();
    let o = infowar(
        &["run", "--config", "cfg.json", "--graph", "pair.txt", "--blue", "llm:llm.json", "--out", "run", "--yes"],
        tmp.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("SIM_LLM_API_KEY_BLUE"), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn analyze_rejects_truncated_states_with_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = infowar(
        &["run", "--kind", "erdos_renyi", "--n", "12", "--p", "0.3", "--topic", "t", "--out", "run", "--yes"],
        tmp.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let states = tmp.path().join("run/states.csv");
    let text = std::fs::read_to_string(&states).unwrap();
    let keep = text.lines().count() - 3;
    let truncated: String = text.lines().take(keep).map(|l| format!("{l}\n")).collect();
    std::fs::write(&states, truncated).unwrap();
    let o = infowar(&["analyze", "run"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("states.csv"), "{}", stderr(&o));
}

#[test]
fn analyze_rejects_edited_energy_with_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    pair_fixture(tmp.path());
    let o = infowar(&["run", "--config", "cfg.json", "--graph", "pair.txt", "--out", "run", "--yes"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let rounds = tmp.path().join("run/rounds.csv");
    let text = std::fs::read_to_string(&rounds).unwrap().replace(",100.000000,", ",99.000000,");
    std::fs::write(&rounds, text).unwrap();
    let o = infowar(&["analyze", "run"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("rounds.csv"), "{}", stderr(&o));
}

#[test]
fn remapped_labels_are_written() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("labels.txt"), "alice,bob\nbob,carol\ncarol,alice\n").unwrap();
    let o = infowar(&["run", "--graph", "labels.txt", "--remap-ids", "--topic", "t", "--out", "run", "--yes"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let labels = std::fs::read_to_string(tmp.path().join("run/node_labels.csv")).unwrap();
    assert!(labels.starts_with("node_id,label\n0,"), "{labels}");
    assert_eq!(labels.lines().count(), 4);
}
