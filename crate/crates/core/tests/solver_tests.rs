mod common;

use std::sync::Arc;

use dilated_egt::dgf::DgfContext;
use dilated_egt::efg::game::{matching_pennies, rock_paper_scissors};
use dilated_egt::efg::*;
use dilated_egt::oracle::{lp_equilibrium, random_matrix};
use dilated_egt::solvers::*;
use proptest::prelude::*;

fn leduc(k: usize) -> Arc<SequenceFormProblem> {
    Arc::new(to_sequence_form(&build_leduc(&LeducConfig::new(k)).unwrap()).unwrap())
}

fn matrix(m: &[Vec<f64>]) -> Arc<SequenceFormProblem> {
    Arc::new(SequenceFormProblem::from_matrix(m).unwrap())
}

fn egt(p: &Arc<SequenceFormProblem>, scheme: &str, mu_scale: f64) -> EgtSolver {
    let cx = DgfContext::with_scheme(p.x_plex.clone(), scheme.parse().unwrap(), 1.0).unwrap();
    let cy = DgfContext::with_scheme(p.y_plex.clone(), scheme.parse().unwrap(), 1.0).unwrap();
    EgtSolver::new(p.clone(), cx, cy, EgtParams::new(mu_scale)).unwrap()
}

#[test]
fn egt_traversal_accounting() {
    let p = leduc(3);
    let mut s = egt(&p, "recurrence:2", 1.0);
    assert_eq!(s.traversals(), 3);
    assert_eq!(s.iteration(), 0);
    for _ in 0..10 {
        s.step().unwrap();
    }
    assert_eq!(s.traversals(), 33);
    let (x, y) = s.strategies();
    saddle_residual(&p, &x, &y).unwrap();
    let _ = s.excessive_gap();
    assert_eq!(s.traversals(), 33);
}

#[test]
fn cfr_traversal_accounting() {
    let p = leduc(3);
    for plus in [false, true] {
        let mut s = CfrSolver::new(p.clone(), plus);
        for _ in 0..5 {
            s.step().unwrap();
        }
        assert_eq!(s.traversals(), 10);
        let (x, y) = s.strategies();
        saddle_residual(&p, &x, &y).unwrap();
        assert_eq!(s.traversals(), 10);
    }
}

#[test]
fn egt_smoothing_schedule() {
    let p = leduc(2);
    let mut s = egt(&p, "recurrence:2", 1.0);
    let mut prev = (s.state().mu1, s.state().mu2);
    for t in 0..200u64 {
        s.step().unwrap();
        let cur = (s.state().mu1, s.state().mu2);
        let tau = 2.0 / (t as f64 + 3.0);
        if t % 2 == 0 {
            assert_eq!(cur.1, prev.1);
            assert!((cur.0 - (1.0 - tau) * prev.0).abs() <= 1e-15 * prev.0);
        } else {
            assert_eq!(cur.0, prev.0);
            assert!((cur.1 - (1.0 - tau) * prev.1).abs() <= 1e-15 * prev.1);
        }
        assert!(cur.0 * cur.1 < prev.0 * prev.1);
        let st = s.state();
        assert!(p.x_plex.constraint_residual(&st.x) <= 1e-9);
        assert!(p.y_plex.constraint_residual(&st.y) <= 1e-9);
        prev = cur;
    }
}

#[test]
fn egt_initial_smoothing_respects_norm() {
    let p = leduc(3);
    let s = egt(&p, "recurrence:2", 1.0);
    let (cx, cy) = s.contexts();
    let (mu1, mu2) = (s.state().mu1, s.state().mu2);
    let bound = p.a_norm() * p.a_norm() / (cx.modulus() * cy.modulus());
    assert!((mu1 * mu2 - bound).abs() <= 1e-12 * bound);
    assert!((mu1 - mu2).abs() <= 1e-12 * mu1);
}

#[test]
fn egt_rejects_bad_parameters() {
    let p = leduc(2);
    let cx = DgfContext::with_scheme(p.x_plex.clone(), "new".parse().unwrap(), 1.0).unwrap();
    let cy = DgfContext::with_scheme(p.y_plex.clone(), "new".parse().unwrap(), 1.0).unwrap();
    for mu in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(
            EgtSolver::new(p.clone(), cx.clone(), cy.clone(), EgtParams::new(mu)),
            Err(SolverError::MuScale(_))
        ));
    }
    assert!(
        matches!(
            EgtSolver::new(p.clone(), cy.clone(), cx.clone(), EgtParams::default()),
            Err(_)
        ) || p.x_plex == p.y_plex
    );
    let other = leduc(3);
    assert!(EgtSolver::new(other, cx, cy, EgtParams::default()).is_err());
}

#[test]
fn zero_game_is_solved_immediately() {
    let p = matrix(&[vec![0.0]]);
    let mut s = egt(&p, "recurrence:2", 1.0);
    let (x, y) = s.strategies();
    assert_eq!(saddle_residual(&p, &x, &y).unwrap(), 0.0);
    s.step().unwrap();
    let (x, y) = s.strategies();
    assert_eq!(saddle_residual(&p, &x, &y).unwrap(), 0.0);
}

#[test]
fn egt_converges_on_small_matrix_games() {
    for m in [
        rock_paper_scissors(),
        matching_pennies(),
        vec![vec![1.0, -2.0, 0.5], vec![-1.0, 3.0, 0.0]],
    ] {
        let p = matrix(&m);
        let mut s = egt(&p, "recurrence:2", 0.1);
        let opts = RunOptions {
            target_eps: 1e-4,
            max_iters: 10_000,
            timing: false,
            ..Default::default()
        };
        let out = run(&mut s, &p, &opts).unwrap();
        assert!(out.converged, "{m:?}: {}", out.eps_sad);
        let eq = lp_equilibrium(&m).unwrap();
        assert!((p.objective(&out.x, &out.y) - eq.value).abs() <= 1e-4);
    }
}

#[test]
fn cfr_average_on_rps_is_uniform() {
    let p = matrix(&rock_paper_scissors());
    for plus in [false, true] {
        let mut s = CfrSolver::new(p.clone(), plus);
        for _ in 0..10_000 {
            s.step().unwrap();
        }
        for player in [Player::One, Player::Two] {
            let avg = s.average_strategy(player);
            assert!(avg.iter().all(|v| (v - 1.0 / 3.0).abs() <= 1e-2), "{avg:?}");
        }
    }
}

#[test]
fn cfr_converges_on_biased_matrix() {
    let m = vec![
        vec![0.0, -1.0, 2.0],
        vec![1.0, 0.0, -1.0],
        vec![-2.0, 1.0, 0.0],
    ];
    let eq = lp_equilibrium(&m).unwrap();
    let p = matrix(&m);
    for plus in [false, true] {
        let mut s = CfrSolver::new(p.clone(), plus);
        for _ in 0..20_000 {
            s.step().unwrap();
        }
        let (x, y) = s.strategies();
        assert!(common::linf_dist(&x, &eq.x) <= 2e-2, "{x:?} vs {:?}", eq.x);
        assert!(common::linf_dist(&y, &eq.y) <= 2e-2);
        assert!(saddle_residual(&p, &x, &y).unwrap() <= 2e-2);
    }
}

#[test]
fn cfr_plus_regrets_stay_nonnegative() {
    let p = leduc(2);
    let mut s = CfrSolver::new(p.clone(), true);
    for _ in 0..300 {
        s.step().unwrap();
        for player in [Player::One, Player::Two] {
            assert!(s.regret_table(player).min_regret() >= 0.0);
        }
    }
    let mut vanilla = CfrSolver::new(p, false);
    for _ in 0..50 {
        vanilla.step().unwrap();
    }
    assert!(vanilla.regret_table(Player::One).min_regret() < 0.0);
}

#[test]
fn runs_are_reproducible() {
    let p = leduc(2);
    let opts = RunOptions {
        max_iters: 300,
        timing: false,
        checkpoints: Checkpoints { per_doubling: 2 },
        stop_check_interval: 0,
        ..Default::default()
    };
    let a = run(&mut egt(&p, "new", 3e-4), &p, &opts).unwrap();
    let b = run(&mut egt(&p, "new", 3e-4), &p, &opts).unwrap();
    assert_eq!(telemetry_csv(&a.records), telemetry_csv(&b.records));
    let c = run(&mut CfrSolver::new(p.clone(), true), &p, &opts).unwrap();
    let d = run(&mut CfrSolver::new(p.clone(), true), &p, &opts).unwrap();
    assert_eq!(telemetry_csv(&c.records), telemetry_csv(&d.records));
    assert!(a
        .records
        .iter()
        .chain(&c.records)
        .all(|r| r.eps_sad >= 0.0 && r.wall_ms.is_none()));
}

#[test]
fn checkpoints_and_telemetry_format() {
    let c = Checkpoints { per_doubling: 1 };
    let seq: Vec<u64> = std::iter::successors(Some(0), |&t| Some(c.next_after(t)))
        .take(8)
        .collect();
    assert_eq!(seq, vec![0, 1, 2, 4, 8, 16, 32, 64]);
    let c = Checkpoints { per_doubling: 2 };
    let seq: Vec<u64> = std::iter::successors(Some(0), |&t| Some(c.next_after(t)))
        .take(8)
        .collect();
    assert_eq!(seq, vec![0, 1, 2, 3, 4, 6, 8, 11]);

    let p = matrix(&[vec![1.0, -2.0], vec![-1.0, 0.5]]);
    let opts = RunOptions {
        max_iters: 10,
        timing: false,
        stop_check_interval: 0,
        ..Default::default()
    };
    let out = run(&mut egt(&p, "recurrence:2", 1.0), &p, &opts).unwrap();
    let csv = telemetry_csv(&out.records);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(TELEMETRY_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec!["1", "2", "4", "8", "10"]
    );
    assert!(rows
        .iter()
        .all(|r| r.len() == 6 && r[5].is_empty() && !r[3].is_empty()));
    assert_eq!(rows.last().unwrap()[1], "33");
}

#[test]
fn egt_leduc_residual_decreases() {
    let p = leduc(3);
    let opts = RunOptions {
        max_iters: 2000,
        timing: false,
        stop_check_interval: 0,
        ..Default::default()
    };
    let out = run(&mut egt(&p, "new", 3e-4), &p, &opts).unwrap();
    let first = out.records.first().unwrap().eps_sad;
    let last = out.records.last().unwrap().eps_sad;
    assert!(last < first * 1e-2, "{first} -> {last}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn excessive_gap_and_anytime_bound_on_random_games(seed in any::<u64>(), rows in 1usize..=5, cols in 1usize..=5) {
        let m = random_matrix(&mut common::rng(seed), rows, cols);
        let p = matrix(&m);
        let cx = DgfContext::with_scheme(p.x_plex.clone(), "recurrence:2".parse().unwrap(), 1.0).unwrap();
        let cy = DgfContext::with_scheme(p.y_plex.clone(), "recurrence:2".parse().unwrap(), 1.0).unwrap();
        let params = EgtParams::balanced(1.0, &cx, &cy);
        let degenerate = cx.width() == 0.0 || cy.width() == 0.0;
        for mut s in [egt(&p, "recurrence:2", 1.0), EgtSolver::new(p.clone(), cx, cy, params).unwrap()] {
            for _ in 0..200 {
                prop_assert!(s.excessive_gap().holds(1e-8), "seed {} t {} {:?}", seed, s.iteration(), s.excessive_gap());
                let (x, y) = s.strategies();
                let eps = saddle_residual(&p, &x, &y).unwrap();
                prop_assert!(eps <= s.gap_bound() * (1.0 + 1e-9) + 1e-12, "seed {} t {}", seed, s.iteration());
                s.step().unwrap();
            }
        }
        if !degenerate {
            let cx = DgfContext::with_scheme(p.x_plex.clone(), "recurrence:2".parse().unwrap(), 1.0).unwrap();
            let cy = DgfContext::with_scheme(p.y_plex.clone(), "recurrence:2".parse().unwrap(), 1.0).unwrap();
            let mut s = EgtSolver::new(p.clone(), cx, cy, params).unwrap();
            for _ in 0..200 {
                let (x, y) = s.strategies();
                let eps = saddle_residual(&p, &x, &y).unwrap();
                prop_assert!(eps <= s.anytime_bound() * (1.0 + 1e-9) + 1e-12, "seed {} t {}", seed, s.iteration());
                s.step().unwrap();
            }
        }
    }
}
