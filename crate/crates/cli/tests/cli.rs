use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracmem_cli::{parse_config, serialize_config, RunConfig};
use fracmem_core::{FieldGrid, MemoryStrategy, PointSource, SimConfig};
use proptest::prelude::*;

fn fracmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmem"))
        .args(args)
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn weights_table() {
    let o = fracmem(&["weights", "--gamma", "0.5", "--n", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("m,psi\n"));
    let rows = parse_rows(&text);
    assert_eq!(
        rows,
        vec![vec![0.0, 1.0], vec![1.0, -0.5], vec![2.0, -0.125], vec![3.0, -0.0625]]
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(fracmem(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fracmem(&[]).status.code(), Some(1));
    let o = fracmem(&["weights", "--gamma", "2.5", "--n", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma"));
    assert_eq!(fracmem(&["run", "/nonexistent/file.cfg"]).status.code(), Some(1));
    assert_eq!(fracmem(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_name_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    let text = std::fs::read_to_string(fixture("benchmark.cfg"))
        .unwrap()
        .replace("strategy = full", "strategy = short");
    std::fs::write(&path, text).unwrap();
    let o = fracmem(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("L: missing required key"), "{}", stderr(&o));

    std::fs::write(&path, "gamma = 0.9\nfoo = 1\n").unwrap();
    let o = fracmem(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2: foo: unknown key"), "{}", stderr(&o));
}

#[test]
fn unstable_run_warns_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmem(&["run", &fixture("unstable.cfg"), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("exceeds the heuristic limit"), "{err}");
    assert!(err.contains("non-finite at step"), "{err}");
}

#[test]
fn run_writes_snapshots_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmem(&["run", &fixture("short_decay.cfg"), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.starts_with("steps=500 wall_time_s="), "{line}");
    let checksum = line.trim().rsplit("checksum=").next().unwrap();
    assert_eq!(checksum.len(), 64);
    assert!(checksum.chars().all(|c| c.is_ascii_hexdigit()));

    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let want: Vec<String> = (0..=500).step_by(100).map(fracmem_cli::snapshot_name).collect();
    assert_eq!(names, want);

    // the final snapshot is the field the checksum was taken over
    let text = std::fs::read_to_string(dir.path().join(fracmem_cli::snapshot_name(500))).unwrap();
    let field = FieldGrid::from_csv(&text, 1.0).unwrap();
    assert_eq!(fracmem_cli::checksum(&field), checksum);
    let initial = std::fs::read_to_string(dir.path().join(fracmem_cli::snapshot_name(0))).unwrap();
    assert_eq!(FieldGrid::from_csv(&initial, 1.0).unwrap().get(15, 0), 2.0);
}

#[test]
fn final_field_written_without_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmem(&["run", &fixture("unstable.cfg").replace("unstable", "benchmark"), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 4);
}

#[test]
fn psi_fit_output() {
    let o = fracmem(&["psi-fit", "--gamma", "1.5", "--alpha-order", "0", "--beta-order", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<(String, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (format!("{}{}", c[0], c[1]), c[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows[0], ("p0".to_string(), 1.0));
    assert_eq!(rows[1], ("q0".to_string(), 1.0));
    assert_eq!(rows[2].0, "q1");
    assert!((rows[2].1 - 1.0).abs() < 1e-15);
    assert!(rows[3..].iter().all(|(k, v)| k.starts_with("residual") && v.abs() <= 1e-8));

    let rejected = fracmem(&["psi-fit", "--gamma", "0.5", "--alpha-order", "0", "--beta-order", "1"]);
    assert_eq!(rejected.status.code(), Some(1));
    assert!(stderr(&rejected).contains("root"), "{}", stderr(&rejected));
}

#[test]
fn psi_eval_methods_agree_at_integers() {
    let mut tables = Vec::new();
    for method in ["linear", "gamma", "rational"] {
        let o = fracmem(&[
            "psi-eval", "--method", method, "--gamma", "1.5", "--r-max", "3", "--r-step", "0.25",
        ]);
        assert!(o.status.success(), "{method}: {}", stderr(&o));
        let rows = parse_rows(&stdout(&o));
        assert_eq!(rows.len(), 13);
        tables.push(rows);
    }
    for i in (0..13).step_by(4) {
        let lin = tables[0][i][1];
        assert!((tables[1][i][1] - lin).abs() < 1e-12);
        assert!((tables[2][i][1] - lin).abs() < 1e-8);
    }
    assert_eq!(fracmem(&["psi-eval", "--method", "cubic", "--gamma", "0.8"]).status.code(), Some(1));
}

#[test]
fn memory_trace_for_powerlaw() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmem(&["memory-trace", &fixture("powerlaw_1d.cfg"), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("memory_trace.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["k", "nodes", "sum_weights", "weights_json"]);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let k: u64 = rec[0].parse().unwrap();
        let nodes: usize = rec[1].parse().unwrap();
        assert_eq!(rec[2].parse::<u64>().unwrap(), k + 1);
        let hist: std::collections::BTreeMap<String, usize> = serde_json::from_str(&rec[3]).unwrap();
        assert_eq!(hist.values().sum::<usize>(), nodes);
        assert!(hist.values().all(|&c| c <= 3));
        rows += 1;
    }
    assert_eq!(rows, 4096);
}

#[test]
fn bench_writes_sorted_csv_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmem(&[
        "bench", &fixture("short_decay.cfg"), "--sweep", "arithmetic:4;short:20,2;full",
        "--gammas", "1.3,0.6", "--workers", "2", "--plot-data", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("bench.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["strategy", "param", "gamma", "steps", "wall_time_s", "rel_error_pct", "nodes_stored"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let keys: Vec<(String, String, String)> = rows
        .iter()
        .map(|r| (r[0].to_string(), r[1].to_string(), r[2].to_string()))
        .collect();
    let want = [
        ("full", "", "0.6"),
        ("full", "", "1.3"),
        ("short", "2", "0.6"),
        ("short", "2", "1.3"),
        ("short", "20", "0.6"),
        ("short", "20", "1.3"),
        ("arithmetic", "4", "0.6"),
        ("arithmetic", "4", "1.3"),
    ];
    assert_eq!(
        keys,
        want.iter().map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string())).collect::<Vec<_>>()
    );
    for r in &rows {
        let err: f64 = r[5].parse().unwrap();
        assert!(err >= 0.0);
        if &r[0] == "full" {
            assert_eq!(err, 0.0);
        }
    }
    let plot = std::fs::read_to_string(dir.path().join("plot_data.csv")).unwrap();
    assert!(plot.starts_with("strategy,gamma,wall_time_s,rel_error_pct\n"));
    assert_eq!(plot.lines().count(), 9);

    let bad = fracmem(&["bench", &fixture("short_decay.cfg"), "--sweep", "short"]);
    assert_eq!(bad.status.code(), Some(1));
}

fn strategy() -> impl Strategy<Value = MemoryStrategy> {
    prop_oneof![
        Just(MemoryStrategy::Full),
        (0.5f64..1e4).prop_map(|length| MemoryStrategy::Short { length }),
        (2usize..10_000).prop_map(|base| MemoryStrategy::Arithmetic { base }),
        (2usize..64).prop_map(|reset_interval| MemoryStrategy::PowerLaw { reset_interval }),
        (0.0f64..1.0).prop_map(|threshold| MemoryStrategy::Smart { threshold }),
    ]
}

proptest! {
    #[test]
    fn config_text_round_trips(
        gamma in 0.01f64..=2.0,
        alpha in 0.0f64..100.0,
        beta in 0.0f64..10.0,
        dt in 1e-3f64..1.0,
        dx in 1e-2f64..100.0,
        nx in 3usize..200,
        ny in prop_oneof![Just(1usize), 3usize..50],
        steps in 0usize..100_000,
        strategy in strategy(),
        snapshot_every in 0usize..1000,
        sources in prop::collection::vec((1usize..199, 1usize..49, -1e3f64..1e3), 0..4),
    ) {
        let initial = sources
            .into_iter()
            .map(|(j, l, v)| PointSource::new(1 + j % (nx - 2), if ny == 1 { 0 } else { 1 + l % (ny - 2) }, v))
            .collect();
        // short windows must cover at least one step
        let strategy = match strategy {
            MemoryStrategy::Short { length } => MemoryStrategy::Short { length: length.max(dt) },
            s => s,
        };
        let cfg = RunConfig {
            sim: SimConfig { gamma, alpha, beta, dt, dx, nx, ny, steps, initial, strategy, snapshot_every },
            out_dir: PathBuf::from("out/run 1"),
        };
        let text = serialize_config(&cfg);
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
