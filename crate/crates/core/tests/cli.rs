use std::process::{Command, Output};

fn drsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drsq")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = drsq(&["run", "--preset", "scenario1", "--reps", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,approach,param,value,rep,response_time_s,msgs_total,msgs_flood,msgs_reply,msgs_update,accessed_objects,precision,recall"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("scenario1,centralized,-,-,0,"));
    assert!(rows[1].starts_with("scenario1,drsq,-,-,0,"));
    // The summary table goes to stderr.
    assert!(String::from_utf8_lossy(&o.stderr).contains("centralized"));
}

#[test]
fn run_to_stdout_single_rep_has_na_interval() {
    let o = drsq(&["run", "--preset", "scenario2", "--reps", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n/a"));
}

#[test]
fn sweep_orders_rows_by_value_then_rep() {
    let o = drsq(&["sweep", "--preset", "scenario1", "--param", "node_count", "--values", "50,80", "--reps", "2"]);
    assert!(o.status.success());
    let keys: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(5).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        vec![
            "scenario1,centralized,node_count,50,0",
            "scenario1,drsq,node_count,50,0",
            "scenario1,centralized,node_count,50,1",
            "scenario1,drsq,node_count,50,1",
            "scenario1,centralized,node_count,80,0",
            "scenario1,drsq,node_count,80,0",
            "scenario1,centralized,node_count,80,1",
            "scenario1,drsq,node_count,80,1",
        ]
    );
}

#[test]
fn oracle_check_exact_match() {
    let o = drsq(&["oracle-check", "--preset", "scenario2", "--seed", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "EXACT MATCH");
}

#[test]
fn cost_table() {
    let o = drsq(&["cost", "--preset", "scenario1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("N_R           12"));
    assert!(s.contains("N_r           11"));
    assert!(s.contains("derived TTL   2"));
    assert!(s.contains("spread        132.000"));
    let o = drsq(&["cost", "--preset", "scenario1", "--indexing", "cumulative"]);
    assert!(o.status.success());
}

#[test]
fn scenario_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("ok.conf");
    std::fs::write(&good, "name = tiny\nnode_count = 30\nreplications = 1\n").unwrap();
    let o = drsq(&["run", "--scenario", good.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("tiny,"));

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "nodes = 30\n").unwrap();
    let o = drsq(&["run", "--scenario", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key 'nodes'"));

    let o = drsq(&["run", "--preset", "scenario9"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown preset"));

    let o = drsq(&["sweep", "--preset", "scenario1", "--param", "delivery_prob", "--values", "1.5"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("delivery_prob"));
}

#[test]
fn trace_lines_are_tab_separated() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    let o = drsq(&["run", "--preset", "scenario1", "--reps", "1", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(trace).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(!lines.is_empty());
    for l in &lines {
        assert_eq!(l.split('\t').count(), 8, "{l}");
    }
    assert!(lines.iter().any(|l| l.contains("\tRSQ\t")));
    assert!(lines.iter().any(|l| l.contains("\tRSQ_REPLY\t")));
}
