use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn twrelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twrelay"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = twrelay(args);
    assert!(
        out.status.success(),
        "twrelay {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let out = dir.join("ch");
    ok(&[
        "gen-channels",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]);
    out.join("channel_0000.txt")
}

fn field(summary: &str, key: &str) -> f64 {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(key)?.trim_start().strip_prefix('=')?.trim().parse().ok())
        .unwrap_or_else(|| panic!("no `{key}` in\n{summary}"))
}

fn read_pa(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (_, values) = l.split_once(':').unwrap();
            values.split_whitespace().map(|t| t.parse().unwrap()).collect()
        })
        .collect()
}

#[test]
fn channel_generation_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = fixture(&dir.path().join("a"), 16, 3);
    let b = fixture(&dir.path().join("b"), 16, 3);
    let c = fixture(&dir.path().join("c"), 16, 4);
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ch = fixture(dir.path(), 16, 11);
    let pa_a = dir.path().join("a.txt");
    let pa_b = dir.path().join("b.txt");
    let args = |out: &Path| {
        vec![
            "solve".to_string(),
            ch.to_str().unwrap().to_string(),
            "--p-max".into(),
            "50".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let run = |out: &Path| {
        let a = args(out);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    assert_eq!(run(&pa_a), run(&pa_b));
    assert_eq!(std::fs::read(&pa_a).unwrap(), std::fs::read(&pa_b).unwrap());
}

#[test]
fn uniform_allocation_is_flat_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let ch = fixture(dir.path(), 12, 5);
    let pa = dir.path().join("pa.txt");
    ok(&[
        "solve",
        ch.to_str().unwrap(),
        "--scheme",
        "type1-uniform",
        "--p1-max",
        "6",
        "--p2-max",
        "12",
        "--pr-max",
        "24",
        "--out",
        pa.to_str().unwrap(),
    ]);
    let rows = read_pa(&pa);
    assert_eq!(rows.len(), 3);
    for (row, total) in rows.iter().zip([6.0, 12.0, 24.0]) {
        assert_eq!(row.len(), 12);
        assert!(row.iter().all(|&p| p == row[0]));
        assert!((row.iter().sum::<f64>() - total).abs() < 1e-12);
    }
}

#[test]
fn optimal_type1_dominates_other_schemes() {
    let dir = tempfile::tempdir().unwrap();
    for seed in [1u64, 2, 3] {
        let ch = fixture(&dir.path().join(seed.to_string()), 32, seed);
        let rate = |scheme: &str| {
            field(
                &ok(&["solve", ch.to_str().unwrap(), "--scheme", scheme, "--snr-db", "5"]),
                "r_exchange",
            )
        };
        let opt = rate("type1-opt");
        assert!(opt >= rate("type1-uniform") - 1e-9);
        assert!(opt >= rate("type2-opt") - 1e-9);
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let ch = fixture(dir.path(), 8, 9);
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# budgets\np1_max = 1\np2_max = 1\npr_max = 1\nmu = 0.5\n").unwrap();
    let from_file = field(
        &ok(&["solve", ch.to_str().unwrap(), "--config", cfg.to_str().unwrap()]),
        "r_exchange",
    );
    let overridden = field(
        &ok(&[
            "solve",
            ch.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--p-max",
            "100",
        ]),
        "r_exchange",
    );
    assert!(overridden > from_file);
}

#[test]
fn invalid_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "N=2 taps=1 seed=0\ng1: 1 2\n").unwrap();
    let out = twrelay(&["solve", bad.to_str().unwrap(), "--p-max", "1"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());

    let ch = fixture(dir.path(), 8, 1);
    assert!(!twrelay(&["solve", ch.to_str().unwrap(), "--p-max", "-1"]).status.success());
    assert!(!twrelay(&["solve", ch.to_str().unwrap(), "--p-max", "1", "--mu", "1.5"]).status.success());
    assert!(!twrelay(&["solve", ch.to_str().unwrap(), "--scheme", "type3", "--p-max", "1"]).status.success());
}

#[test]
fn sweep_at_very_low_snr_is_near_zero() {
    let csv = ok(&["sweep", "--snr-db=-30", "--realizations", "20", "--seed", "2"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "snr_db,scheme,mean_rate_bps_hz,stderr,n,failures");
    let mut seen = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[1] == "af" {
            assert_eq!(cols[2], "");
            continue;
        }
        let mean: f64 = cols[2].parse().unwrap();
        assert!(mean <= 0.01, "{line}");
        seen += 1;
    }
    assert_eq!(seen, 3);
}

#[test]
fn sweep_rerun_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        ok(&[
            "sweep",
            "--snr-db",
            "0,10",
            "--realizations",
            "1",
            "--seed",
            "42",
            "--n",
            "16",
            "--out",
            path.to_str().unwrap(),
        ]);
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert_eq!(a.lines().count(), 1 + 2 * 4);
}

#[test]
fn sweep_rows_are_sorted_by_snr_then_scheme() {
    let csv = ok(&[
        "sweep",
        "--snr-db=10,-5",
        "--realizations",
        "2",
        "--schemes",
        "type2-opt,type1-opt",
        "--n",
        "8",
    ]);
    let keys: Vec<(String, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].to_string(), cols[1].to_string())
        })
        .collect();
    let expect = [("-5", "type1-opt"), ("-5", "type2-opt"), ("10", "type1-opt"), ("10", "type2-opt")];
    assert_eq!(keys.len(), expect.len());
    for ((s, k), (es, ek)) in keys.iter().zip(expect) {
        assert_eq!((s.as_str(), k.as_str()), (es, ek));
    }
}
