//! Extensive-form games and their sequence-form bilinear saddle-point problem.
//!
//! The saddle-point problem is `min_x max_y  υ + <a1, x> + <a2, y> + <x, A y>`
//! where `x` ranges over player one's treeplex and `y` over player two's.
//! `A` holds payoffs to player two (the maximizer), scaled by the chance
//! probability of reaching each leaf. Leaves reached without any action of
//! one of the players feed the linear terms instead of `A`.

pub mod game;
pub mod leduc;
pub mod sparse;

use thiserror::Error;

pub use game::{
    build_alternating_game, build_matrix_game, GameBuilder, GameTree, InfosetInfo, Node, NodeId,
    Player,
};
pub use leduc::{build_leduc, LeducConfig};
pub use sparse::SparseMatrix;

use crate::treeplex::{Treeplex, TreeplexBuilder, TreeplexError};

#[derive(Debug, Error)]
pub enum EfgError {
    #[error("empty payoff matrix")]
    EmptyMatrix,
    #[error("chance node {node}: outcome probabilities sum to {total}")]
    ChanceProbabilities { node: NodeId, total: f64 },
    #[error("perfect recall violated at {player:?} infoset `{infoset}`")]
    PerfectRecall { player: Player, infoset: String },
    #[error("invalid game: {0}")]
    Structure(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Treeplex(#[from] TreeplexError),
}

/// Sequence-form description of a two-player zero-sum game.
#[derive(Debug, Clone)]
pub struct SequenceFormProblem {
    /// Player one's (minimizer's) treeplex.
    pub x_plex: Treeplex,
    /// Player two's (maximizer's) treeplex.
    pub y_plex: Treeplex,
    /// Rows index player-one sequences, columns player-two sequences.
    pub a: SparseMatrix,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub offset: f64,
    /// Infoset names per player, indexed by simplex id.
    pub simplex_names: [Vec<String>; 2],
}

impl SequenceFormProblem {
    /// Bilinear problem over two plain simplexes with payoff matrix `dense` (to the maximizer).
    pub fn from_matrix(dense: &[Vec<f64>]) -> Result<Self, EfgError> {
        to_sequence_form(&build_matrix_game(dense)?)
    }

    pub fn plex(&self, player: Player) -> &Treeplex {
        match player {
            Player::One => &self.x_plex,
            Player::Two => &self.y_plex,
        }
    }

    /// `max_{i,j} |A_ij|`, the matrix norm for the l1/l∞ pairing.
    pub fn a_norm(&self) -> f64 {
        self.a.max_abs()
    }

    /// Gradient of the objective with respect to `x`: `A y + a1`.
    pub fn grad_x(&self, y: &[f64]) -> Vec<f64> {
        let mut g = self.a.mul_vec(y);
        add_assign(&mut g, &self.a1);
        g
    }

    /// Gradient of the objective with respect to `y`: `Aᵀ x + a2`.
    pub fn grad_y(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.a.mul_t_vec(x);
        add_assign(&mut g, &self.a2);
        g
    }

    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        self.offset + dot(&self.a1, x) + dot(&self.a2, y) + dot(x, &self.a.mul_vec(y))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_assign(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Extracts treeplexes and the payoff matrix. One simplex per information set.
pub fn to_sequence_form(g: &GameTree) -> Result<SequenceFormProblem, EfgError> {
    const UNSEEN: usize = usize::MAX;
    let mut builders = [TreeplexBuilder::new(), TreeplexBuilder::new()];
    let mut simplex_of: [Vec<usize>; 2] = [
        vec![UNSEEN; g.infosets(Player::One).len()],
        vec![UNSEEN; g.infosets(Player::Two).len()],
    ];
    let mut parent_of: [Vec<Option<usize>>; 2] = [
        vec![None; simplex_of[0].len()],
        vec![None; simplex_of[1].len()],
    ];
    let mut names: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    let mut triplets = Vec::new();
    let mut linear: [Vec<(usize, f64)>; 2] = [Vec::new(), Vec::new()];
    let mut offset = 0.0;

    // (node, player-one sequence, player-two sequence, chance reach)
    let mut stack: Vec<(NodeId, Option<usize>, Option<usize>, f64)> =
        vec![(g.root(), None, None, 1.0)];
    while let Some((id, s1, s2, reach)) = stack.pop() {
        match g.node(id) {
            Node::Terminal { payoff } => {
                let v = reach * payoff;
                match (s1, s2) {
                    (Some(r), Some(c)) => triplets.push((r, c, v)),
                    (Some(r), None) => linear[0].push((r, v)),
                    (None, Some(c)) => linear[1].push((c, v)),
                    (None, None) => offset += v,
                }
            }
            Node::Chance { outcomes } => {
                for &(p, child) in outcomes.iter().rev() {
                    stack.push((child, s1, s2, reach * p));
                }
            }
            Node::Decision {
                player,
                infoset,
                children,
            } => {
                let pi = player.index();
                let own = if pi == 0 { s1 } else { s2 };
                if simplex_of[pi][*infoset] == UNSEEN {
                    simplex_of[pi][*infoset] = builders[pi].add_simplex(own, children.len());
                    parent_of[pi][*infoset] = own;
                    names[pi].push(g.infosets(*player)[*infoset].name.clone());
                } else if parent_of[pi][*infoset] != own {
                    return Err(EfgError::PerfectRecall {
                        player: *player,
                        infoset: g.infosets(*player)[*infoset].name.clone(),
                    });
                }
                let vars = builders[pi].vars(simplex_of[pi][*infoset]).to_vec();
                for (a, &child) in children.iter().enumerate().rev() {
                    let (n1, n2) = if pi == 0 {
                        (Some(vars[a]), s2)
                    } else {
                        (s1, Some(vars[a]))
                    };
                    stack.push((child, n1, n2, reach));
                }
            }
        }
    }

    let [b1, b2] = builders;
    if b1.num_variables() == 0 || b2.num_variables() == 0 {
        return Err(EfgError::Structure(
            "both players need at least one decision".into(),
        ));
    }
    let x_plex = b1.build()?;
    let y_plex = b2.build()?;
    let a = SparseMatrix::from_triplets(x_plex.num_variables(), y_plex.num_variables(), &triplets);
    let mut a1 = vec![0.0; x_plex.num_variables()];
    for (r, v) in &linear[0] {
        a1[*r] += v;
    }
    let mut a2 = vec![0.0; y_plex.num_variables()];
    for (c, v) in &linear[1] {
        a2[*c] += v;
    }
    Ok(SequenceFormProblem {
        x_plex,
        y_plex,
        a,
        a1,
        a2,
        offset,
        simplex_names: names,
    })
}

/// Optimal value and vertex of a linear function over a treeplex.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub value: f64,
    pub vertex: Vec<f64>,
}

/// Optimizes `<g, q>` over the treeplex by one bottom-up pass. Ties go to the
/// lowest-indexed action.
pub fn linear_optimum(t: &Treeplex, g: &[f64], maximize: bool) -> BestResponse {
    let n = t.num_simplexes();
    let mut value = vec![0.0; n];
    let mut choice = vec![0usize; n];
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    for j in (0..n).rev() {
        let s = t.simplex(j);
        let mut best = f64::NAN;
        for (a, (var, children)) in s.branches().enumerate() {
            let v = g[var] + children.iter().map(|&k| value[k]).sum::<f64>();
            if a == 0 || better(v, best) {
                best = v;
                choice[j] = a;
            }
        }
        value[j] = best;
    }
    let mut vertex = vec![0.0; t.num_variables()];
    let mut stack: Vec<usize> = t.roots().to_vec();
    while let Some(j) = stack.pop() {
        let s = t.simplex(j);
        let a = choice[j];
        vertex[s.vars[a]] = 1.0;
        stack.extend(&s.children[a]);
    }
    BestResponse {
        value: t.roots().iter().map(|&j| value[j]).sum(),
        vertex,
    }
}

/// Best response of `responder` against the opponent's sequence-form `strategy`.
///
/// For `Player::Two` this is `max_y φ(x, y)`; for `Player::One` it is `min_x φ(x, y)`.
pub fn best_response_value(
    p: &SequenceFormProblem,
    responder: Player,
    strategy: &[f64],
) -> Result<BestResponse, EfgError> {
    let opponent = p.plex(responder.opponent());
    if strategy.len() != opponent.num_variables() {
        return Err(EfgError::Dimension {
            expected: opponent.num_variables(),
            found: strategy.len(),
        });
    }
    let (g, constant, maximize) = match responder {
        Player::Two => (p.grad_y(strategy), p.offset + dot(&p.a1, strategy), true),
        Player::One => (p.grad_x(strategy), p.offset + dot(&p.a2, strategy), false),
    };
    let mut br = linear_optimum(p.plex(responder), &g, maximize);
    br.value += constant;
    Ok(br)
}

/// `max_y φ(x, y) - min_x φ(x, y)`, clamped at zero.
pub fn saddle_residual(p: &SequenceFormProblem, x: &[f64], y: &[f64]) -> Result<f64, EfgError> {
    let upper = best_response_value(p, Player::Two, x)?.value;
    let lower = best_response_value(p, Player::One, y)?.value;
    let gap = upper - lower;
    debug_assert!(
        gap >= -1e-9 * (1.0 + upper.abs().max(lower.abs())),
        "negative saddle residual {gap}"
    );
    Ok(gap.max(0.0))
}
