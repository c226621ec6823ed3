use std::path::Path;

use dilated_egt::dgf::weights::WeightScheme;
use dilated_egt::harness::*;
use dilated_egt::solvers::{ConvergenceRecord, RunOutcome};

fn configs_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn report(label: &str, game: GameSpec, points: &[(u64, f64)]) -> RunReport {
    let records = points
        .iter()
        .enumerate()
        .map(|(i, &(traversals, eps_sad))| ConvergenceRecord {
            iteration: i as u64 + 1,
            traversals,
            eps_sad,
            mu: None,
            wall_ms: None,
        })
        .collect();
    RunReport {
        label: label.into(),
        game,
        target_eps: 0.0,
        outcome: RunOutcome {
            records,
            x: vec![],
            y: vec![],
            eps_sad: 0.0,
            iterations: 0,
            traversals: 0,
            converged: false,
            wall_ms: 0.0,
        },
    }
}

#[test]
fn repository_configs_parse() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
    let new = RunConfig::load(&configs_dir().join("leduc3_egt_new.toml")).unwrap();
    assert_eq!(new.weights, WeightScheme::PracticalNew);
    assert_eq!(new.game, GameSpec::leduc(3));
    assert!(!new.timing);
}

#[test]
fn invalid_configs_are_rejected() {
    for text in [
        "solver = \"egt\"\n",
        "solver = \"egt\"\n[game]\nkind = \"poker\"\n",
        "solver = \"egt\"\ncolor = 1\n[game]\nkind = \"matrix\"\nfile = \"rps\"\n",
        "solver = \"egt\"\nweights = \"recurrence:0.5\"\n[game]\nkind = \"matrix\"\nfile = \"rps\"\n",
        "solver = \"egt\"\nmu_scale = -1\n[game]\nkind = \"matrix\"\nfile = \"rps\"\n",
        "solver = \"egt\"\ntarget_eps = -1\n[game]\nkind = \"matrix\"\nfile = \"rps\"\n",
        "solver = \"egt\"\n[game]\nkind = \"leduc\"\ncards = 3\nfile = \"rps\"\n",
    ] {
        assert!(RunConfig::from_toml(text).is_err(), "accepted {text:?}");
    }
    let cfg = RunConfig::new(
        GameSpec::Matrix {
            file: "/nonexistent/matrix.txt".into(),
        },
        SolverKind::Egt,
    );
    assert!(matches!(run_config(&cfg), Err(HarnessError::Io { .. })));
}

#[test]
fn labels_and_matrix_files() {
    let mut cfg = RunConfig::new(GameSpec::leduc(2), SolverKind::Egt);
    cfg.weights = WeightScheme::Old;
    assert_eq!(cfg.label(), "egt:old");
    cfg.name = Some("tuned".into());
    assert_eq!(cfg.label(), "tuned");
    assert_eq!(
        RunConfig::new(GameSpec::leduc(2), SolverKind::Cfrplus).label(),
        "cfrplus"
    );

    let path = std::env::temp_dir().join(format!("degt-matrix-{}.txt", std::process::id()));
    std::fs::write(&path, "# two by two\n1 -1\n-1 1\n").unwrap();
    assert_eq!(
        load_matrix(path.to_str().unwrap()).unwrap(),
        vec![vec![1.0, -1.0], vec![-1.0, 1.0]]
    );
    std::fs::write(&path, "1 2\n3\n").unwrap();
    assert!(load_matrix(path.to_str().unwrap()).is_err());
    std::fs::remove_file(path).unwrap();
}

#[test]
fn alignment_uses_latest_checkpoint_at_or_below() {
    let game = GameSpec::leduc(3);
    let a = report("a", game.clone(), &[(3, 1.0), (9, 0.5), (30, 0.1)]);
    let b = report("b", game.clone(), &[(4, 2.0), (20, 0.2)]);
    let rows = align_reports(&[a.clone(), b.clone()]).unwrap();
    let expected = vec![
        (3, vec![Some(1.0), None]),
        (4, vec![Some(1.0), Some(2.0)]),
        (9, vec![Some(0.5), Some(2.0)]),
        (20, vec![Some(0.5), Some(0.2)]),
        (30, vec![Some(0.1), Some(0.2)]),
    ];
    assert_eq!(rows, expected);
    let csv = merge_reports(&[a.clone(), b]).unwrap();
    assert_eq!(csv.lines().next(), Some("traversals,a,b"));
    assert_eq!(csv.lines().nth(1), Some("3,1e0,"));

    let single = merge_reports(std::slice::from_ref(&a)).unwrap();
    assert_eq!(single, "traversals,a\n3,1e0\n9,5e-1\n30,1e-1\n");

    let other = report("c", GameSpec::leduc(2), &[(3, 1.0)]);
    assert!(matches!(
        merge_reports(&[a, other]),
        Err(HarnessError::GameMismatch(..))
    ));
}

#[test]
fn compare_rejects_mixed_games_and_seeds() {
    let a = RunConfig::new(GameSpec::Alternating { k: 2, d: 2 }, SolverKind::Egt);
    let mut b = a.clone();
    b.seed = 1;
    assert!(compare(&[a.clone(), b]).is_err());
    let c = RunConfig::new(GameSpec::leduc(2), SolverKind::Egt);
    assert!(compare(&[a.clone(), c]).is_err());
    let mut d = a.clone();
    d.solver = SolverKind::Cfrplus;
    d.max_iters = 30;
    let mut a = a;
    a.max_iters = 20;
    let (reports, merged) = compare(&[a, d]).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].outcome.traversals, 63);
    assert_eq!(reports[1].outcome.traversals, 60);
    assert!(merged.starts_with("traversals,egt:recurrence:2,cfrplus\n"));
}

#[test]
fn seeded_games_are_reproducible() {
    let mut cfg = RunConfig::new(GameSpec::Alternating { k: 3, d: 2 }, SolverKind::Cfr);
    cfg.timing = false;
    cfg.seed = 42;
    let a = run_config(&cfg).unwrap();
    let b = run_config(&cfg).unwrap();
    assert_eq!(a.csv(), b.csv());
    cfg.seed = 43;
    assert_ne!(build_problem(&cfg).unwrap().a.to_csv(), {
        cfg.seed = 42;
        build_problem(&cfg).unwrap().a.to_csv()
    });
}
