use std::path::PathBuf;
use std::process::{Command, Output};

fn degt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("degt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

fn last_row(csv: &str) -> Vec<String> {
    csv.lines()
        .last()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect()
}

#[test]
fn rps_reaches_target() {
    let out = degt(&[
        "run",
        "--game",
        "matrix",
        "--file",
        "rps",
        "--solver",
        "egt",
        "--weights",
        "recurrence:2",
        "--target-eps",
        "1e-3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("iter,traversals,eps_sad,mu1,mu2,wall_ms\n"));
    let eps: f64 = last_row(&csv)[2].parse().unwrap();
    assert!(eps <= 1e-3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps_sad="));
}

#[test]
fn cfrplus_leduc_traversals() {
    let path = scratch("cfrplus.csv");
    let out = degt(&[
        "run",
        "--game",
        "leduc",
        "--cards",
        "3",
        "--solver",
        "cfrplus",
        "--max-iters",
        "1000",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let row = last_row(&csv);
    assert_eq!(row[0], "1000");
    assert_eq!(row[1], "2000");
    assert!(row[3].is_empty() && row[4].is_empty());
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("traversals=2000"), "{summary}");
}

#[test]
fn usage_errors() {
    let out = degt(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--game"));
    for args in [
        vec!["run", "--game", "matrix"],
        vec!["run", "--game", "leduc", "--weights", "recurrence:1"],
        vec!["run", "--game", "leduc", "--solver", "simplex"],
        vec!["run", "--game", "leduc", "--mu-scale", "0"],
        vec!["run", "--game", "leduc", "--cards", "1"],
        vec!["bogus"],
    ] {
        let out = degt(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let run = |name: &str| {
        let path = scratch(name);
        let out = degt(&[
            "run",
            "--game",
            "leduc",
            "--cards",
            "2",
            "--weights",
            "new",
            "--mu-scale",
            "3e-4",
            "--max-iters",
            "200",
            "--checkpoints-per-doubling",
            "3",
            "--no-timing",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')));
}

#[test]
fn config_files_run() {
    let out = degt(&["run", "--config", &config("rps_egt.toml")]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = degt(&[
        "run",
        "--config",
        &config("rps_egt.toml"),
        "--game",
        "leduc",
    ]);
    assert!(!out.status.success());
}

#[test]
fn compare_merges_and_rejects_mixed_games() {
    let write = |name: &str, body: &str| {
        let p = scratch(name);
        std::fs::write(&p, body).unwrap();
        p.display().to_string()
    };
    let base = "max_iters = 64\ntiming = false\n[game]\nkind = \"leduc\"\ncards = 2\n";
    let a = write(
        "new.toml",
        &format!("name = \"new\"\nsolver = \"egt\"\nweights = \"new\"\nmu_scale = 3e-4\n{base}"),
    );
    let b = write(
        "old.toml",
        &format!("name = \"old\"\nsolver = \"egt\"\nweights = \"old\"\nmu_scale = 1e-4\n{base}"),
    );
    let c = write(
        "rps.toml",
        "solver = \"egt\"\n[game]\nkind = \"matrix\"\nfile = \"rps\"\n",
    );

    let out = degt(&["compare", &a, &b]);
    assert!(out.status.success());
    let merged = String::from_utf8(out.stdout).unwrap();
    assert!(merged.starts_with("traversals,new,old\n"));
    let last = last_row(&merged);
    assert_eq!(last[0], "195");
    assert!(!last[1].is_empty() && !last[2].is_empty());

    let single = degt(&["compare", &a]);
    let single = String::from_utf8(single.stdout).unwrap();
    assert_eq!(single.lines().count(), merged.lines().count());

    let out = degt(&["compare", &a, &c]);
    assert!(!out.status.success());
}

#[test]
fn dumps() {
    let out = degt(&[
        "dump",
        "weights",
        "--game",
        "leduc",
        "--cards",
        "2",
        "--weights",
        "corollary",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("simplex_id,alpha,beta,scheme\n"));
    assert_eq!(text.lines().count(), 67);
    let out = degt(&[
        "dump",
        "treeplex",
        "--game",
        "alternating",
        "--k",
        "2",
        "--d",
        "2",
        "--player",
        "1",
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);
    let out = degt(&["dump", "matrix", "--game", "matrix", "--file", "pennies"]);
    assert!(out.status.success());
    let out = degt(&["dump", "game", "--game", "matrix", "--file", "rps"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("root "));
}
