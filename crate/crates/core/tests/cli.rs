use std::process::{Command, Output};

fn qdecide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdecide"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = qdecide(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn cost_all_methods_agree() {
    let csv = stdout(&[
        "cost", "--xi", "0.5", "--delta", "0.7", "--n", "3", "--method", "all",
    ]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# qdecide-csv v1"));
    assert_eq!(lines.next(), Some("xi,delta_rad,n,strategy,method,cost"));
    let rows = data_rows(&csv);
    let methods: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(methods, ["closed", "eigen", "tree"]);
    let costs: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(
        costs.iter().all(|c| (c - costs[0]).abs() < 1e-10),
        "{costs:?}"
    );
}

#[test]
fn orthogonal_states_cost_nothing() {
    let csv = stdout(&[
        "cost",
        "--xi",
        "0.5",
        "--delta",
        "90",
        "--degrees",
        "--n",
        "1",
    ]);
    assert_eq!(data_rows(&csv)[0][5], "0");
}

#[test]
fn json_mirrors_record_fields() {
    let json = stdout(&[
        "cost", "--xi", "0.3", "--theta1", "0", "--theta2", "1", "--n", "2", "--format", "json",
    ]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let record = &value[0];
    for key in ["xi", "delta_rad", "n", "strategy", "cost", "method"] {
        assert!(record.get(key).is_some(), "missing {key}");
    }
    assert!((record["delta_rad"].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn sweep_rows_are_ordered_and_decreasing_in_n() {
    let csv = stdout(&[
        "sweep",
        "--xi",
        "0.2,0.5",
        "--delta",
        "0.3:0.5:0.1",
        "--n",
        "1:4",
    ]);
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2 * 3 * 4);
    for cell in rows.chunks(4) {
        let costs: Vec<f64> = cell.iter().map(|r| r[5].parse().unwrap()).collect();
        assert!(costs.windows(2).all(|w| w[1] < w[0]), "{costs:?}");
    }
    assert_eq!(rows[0][0], "0.2");
    assert_eq!(rows.last().unwrap()[0], "0.5");
}

#[test]
fn compare_reports_gaps_for_every_partition() {
    let csv = stdout(&["compare", "--xi", "0.3", "--delta", "0.5", "--n", "4"]);
    assert!(csv.lines().nth(1).unwrap().ends_with(",cost,gap"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 8);
    for row in rows {
        assert!(row[6].parse::<f64>().unwrap() >= -1e-9, "{row:?}");
    }
}

#[test]
fn tree_lists_every_branch() {
    let csv = stdout(&["tree", "--xi", "0.3", "--delta", "0.5", "--n", "2"]);
    assert_eq!(
        csv.lines().nth(1),
        Some("depth,outcomes,weight,posterior,phi_sequence_hash")
    );
    let rows = data_rows(&csv);
    let outcomes: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(outcomes, ["++", "+-", "-+", "--"]);
    let total: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(csv.contains("# depth=2 distinct_posteriors=2"));
}

#[test]
fn verify_exit_codes() {
    let ok = qdecide(&["verify", "--xi", "0.3", "--delta", "0.5", "--n", "2"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("verdict optimal"));
    let bad = qdecide(&[
        "verify",
        "--xi",
        "0.3",
        "--delta",
        "0.5",
        "--n",
        "2",
        "--pom",
        "always-first",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["cost", "--xi", "1.5", "--delta", "0.3", "--n", "1"][..],
        &["cost", "--xi", "0.5", "--delta", "2", "--n", "1"],
        &["cost", "--xi", "0.5", "--delta", "0.3", "--n", "0"],
        &["cost", "--xi", "0.5", "--n", "1"],
        &["sweep", "--xi", "0.5:0.1:0.1", "--delta", "0.3", "--n", "1"],
        &[
            "simulate",
            "--xi",
            "0.5",
            "--delta",
            "0.3",
            "--n",
            "2",
            "--partition",
            "1+2+3",
        ],
        &["frobnicate"],
    ] {
        let out = qdecide(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate", "--xi", "0.4", "--delta", "0.6", "--n", "3", "--trials", "20000", "--seed",
        "17",
    ];
    let first = qdecide(&args);
    let single = Command::new(env!("CARGO_BIN_EXE_qdecide"))
        .args(args)
        .env("QDECIDE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(first.stdout, qdecide(&args).stdout);
    assert_eq!(first.stdout, single.stdout);
    let csv = String::from_utf8(first.stdout).unwrap();
    assert_eq!(
        csv.lines().nth(1),
        Some("xi,delta_rad,n,strategy,method,error_rate,standard_error,analytic_cost,z_score,trials,seed")
    );
    let z: f64 = data_rows(&csv)[0][8].parse().unwrap();
    assert!(z.abs() <= 4.0, "z = {z}");
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = std::env::temp_dir().join(format!("qdecide-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("problem.conf");
    std::fs::write(
        &path,
        "# shared problem\nxi = 0.25\ndelta = 0.4\nn = 3\nmethod = eigen\n",
    )
    .unwrap();
    let path = path.to_str().unwrap();

    let from_file = data_rows(&stdout(&["cost", "--config", path]));
    assert_eq!(
        &from_file[0][..5],
        ["0.25", "0.4", "3", "combined", "eigen"]
    );

    let overridden = data_rows(&stdout(&[
        "cost", "--config", path, "--n", "5", "--method", "closed",
    ]));
    assert_eq!(
        &overridden[0][..5],
        ["0.25", "0.4", "5", "combined", "closed"]
    );

    std::fs::write(dir.join("bad.conf"), "xi 0.3\n").unwrap();
    let bad = qdecide(&["cost", "--config", dir.join("bad.conf").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
