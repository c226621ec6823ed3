//! CFR and CFR+ run directly on the sequence form.
//!
//! The counterfactual value of sequence `i` in simplex `j` is
//! `cv_i = u_i + Σ_{k∈D_j^i} V_k` with `V_j = Σ_i σ_j(i) cv_i`, where `u` is
//! the player's utility gradient (`-(A y + a1)` for the minimizer,
//! `Aᵀx + a2` for the maximizer). One gradient product is one tree pass.
//!
//! Vanilla CFR updates both players simultaneously and averages uniformly.
//! CFR+ alternates (player one first), clips regrets at zero after each
//! update, and weights iteration `t` by `t` in the average.

use std::sync::Arc;

use super::{IterativeSolver, SolverError};
use crate::efg::{Player, SequenceFormProblem};
use crate::treeplex::Treeplex;

/// Cumulative regrets (clipped for CFR+) and average-strategy weights, indexed by sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTable {
    pub regrets: Vec<f64>,
    /// Weighted sum of played sequence-form strategies.
    pub strategy_sum: Vec<f64>,
    pub weight_sum: f64,
}

impl RegretTable {
    fn new(n: usize) -> Self {
        Self {
            regrets: vec![0.0; n],
            strategy_sum: vec![0.0; n],
            weight_sum: 0.0,
        }
    }

    /// Regret-matching local distributions, indexed by sequence.
    pub fn local_strategy(&self, t: &Treeplex) -> Vec<f64> {
        let mut local = vec![0.0; self.regrets.len()];
        for s in t.simplexes() {
            let total: f64 = s.vars.iter().map(|&i| self.regrets[i].max(0.0)).sum();
            for &i in &s.vars {
                local[i] = if total > 0.0 {
                    self.regrets[i].max(0.0) / total
                } else {
                    1.0 / s.len() as f64
                };
            }
        }
        local
    }

    pub fn min_regret(&self) -> f64 {
        self.regrets.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Average sequence-form strategy; uniform before any update.
    pub fn average(&self, t: &Treeplex) -> Vec<f64> {
        if self.weight_sum > 0.0 {
            self.strategy_sum
                .iter()
                .map(|v| v / self.weight_sum)
                .collect()
        } else {
            t.uniform_strategy()
        }
    }
}

#[derive(Debug, Clone)]
pub struct CfrSolver {
    problem: Arc<SequenceFormProblem>,
    plus: bool,
    tables: [RegretTable; 2],
    t: u64,
    traversals: u64,
}

impl CfrSolver {
    pub fn new(problem: Arc<SequenceFormProblem>, plus: bool) -> Self {
        let tables = [
            RegretTable::new(problem.x_plex.num_variables()),
            RegretTable::new(problem.y_plex.num_variables()),
        ];
        Self {
            problem,
            plus,
            tables,
            t: 0,
            traversals: 0,
        }
    }

    pub fn is_plus(&self) -> bool {
        self.plus
    }

    pub fn regret_table(&self, player: Player) -> &RegretTable {
        &self.tables[player.index()]
    }

    /// Current (not averaged) sequence-form strategy of `player`.
    pub fn current_strategy(&self, player: Player) -> Vec<f64> {
        let t = self.problem.plex(player);
        sequence(t, &self.tables[player.index()].local_strategy(t))
    }

    pub fn average_strategy(&self, player: Player) -> Vec<f64> {
        self.tables[player.index()].average(self.problem.plex(player))
    }

    fn utility(&mut self, player: Player, opponent_strategy: &[f64]) -> Vec<f64> {
        self.traversals += 1;
        let p = &self.problem;
        match player {
            Player::One => p
                .grad_x(opponent_strategy)
                .into_iter()
                .map(|v| -v)
                .collect(),
            Player::Two => p.grad_y(opponent_strategy),
        }
    }

    fn update(&mut self, player: Player, utility: &[f64], played: &[f64], weight: f64) {
        let plex = self.problem.plex(player);
        let table = &mut self.tables[player.index()];
        let local = table.local_strategy(plex);
        let n = plex.num_simplexes();
        let mut value = vec![0.0; n];
        let mut cv = vec![0.0; utility.len()];
        for j in (0..n).rev() {
            let s = plex.simplex(j);
            let mut v = 0.0;
            for (i, children) in s.branches() {
                cv[i] = utility[i] + children.iter().map(|&k| value[k]).sum::<f64>();
                v += local[i] * cv[i];
            }
            value[j] = v;
            for &i in &s.vars {
                let r = table.regrets[i] + cv[i] - v;
                table.regrets[i] = if self.plus { r.max(0.0) } else { r };
            }
        }
        for (acc, q) in table.strategy_sum.iter_mut().zip(played) {
            *acc += weight * q;
        }
        table.weight_sum += weight;
    }
}

impl IterativeSolver for CfrSolver {
    fn step(&mut self) -> Result<(), SolverError> {
        self.t += 1;
        let weight = if self.plus { self.t as f64 } else { 1.0 };
        let x = self.current_strategy(Player::One);
        if self.plus {
            let y = self.current_strategy(Player::Two);
            let ux = self.utility(Player::One, &y);
            self.update(Player::One, &ux, &x, weight);
            let x_next = self.current_strategy(Player::One);
            let uy = self.utility(Player::Two, &x_next);
            self.update(Player::Two, &uy, &y, weight);
        } else {
            let y = self.current_strategy(Player::Two);
            let ux = self.utility(Player::One, &y);
            let uy = self.utility(Player::Two, &x);
            self.update(Player::One, &ux, &x, weight);
            self.update(Player::Two, &uy, &y, weight);
        }
        if self
            .tables
            .iter()
            .any(|t| t.regrets.iter().any(|r| !r.is_finite()))
        {
            return Err(SolverError::NonFinite {
                iteration: self.t,
                context: "regret update".into(),
            });
        }
        Ok(())
    }

    fn iteration(&self) -> u64 {
        self.t
    }

    fn traversals(&self) -> u64 {
        self.traversals
    }

    fn strategies(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.average_strategy(Player::One),
            self.average_strategy(Player::Two),
        )
    }

    fn smoothing(&self) -> Option<(f64, f64)> {
        None
    }
}

fn sequence(t: &Treeplex, local: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; local.len()];
    for s in t.simplexes() {
        let parent = t.parent_value(s.id, &q);
        for &i in &s.vars {
            q[i] = parent * local[i];
        }
    }
    q
}
