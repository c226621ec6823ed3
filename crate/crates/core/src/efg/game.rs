//! Extensive-form game trees and their text format.
//!
//! Terminal payoffs are always paid to player two, the maximizer. Player one
//! minimizes the same quantity.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::EfgError;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Player::One => "p1",
            Player::Two => "p2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Chance {
        outcomes: Vec<(f64, NodeId)>,
    },
    Decision {
        player: Player,
        infoset: usize,
        children: Vec<NodeId>,
    },
    /// Payoff to player two.
    Terminal {
        payoff: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfosetInfo {
    pub name: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameTree {
    nodes: Vec<Node>,
    root: NodeId,
    infosets: [Vec<InfosetInfo>; 2],
}

impl GameTree {
    /// Validates and wraps a node arena.
    pub fn new(
        nodes: Vec<Node>,
        root: NodeId,
        infosets: [Vec<InfosetInfo>; 2],
    ) -> Result<Self, EfgError> {
        let g = Self {
            nodes,
            root,
            infosets,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn infosets(&self, player: Player) -> &[InfosetInfo] {
        &self.infosets[player.index()]
    }

    pub fn num_terminals(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Terminal { .. }))
            .count()
    }

    pub fn max_abs_payoff(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Terminal { payoff } => Some(payoff.abs()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<(), EfgError> {
        let n = self.nodes.len();
        if n == 0 || self.root >= n {
            return Err(EfgError::Structure("game has no root node".into()));
        }
        let bad_label = |s: &str| s.is_empty() || s.chars().any(char::is_whitespace);
        for info in self.infosets.iter().flatten() {
            if bad_label(&info.name) || info.actions.iter().any(|a| bad_label(a)) {
                return Err(EfgError::Structure(format!(
                    "infoset `{}`: names must be non-empty without whitespace",
                    info.name
                )));
            }
        }
        let mut parents = vec![0usize; n];
        for (id, node) in self.nodes.iter().enumerate() {
            let children: Vec<NodeId> = match node {
                Node::Chance { outcomes } => {
                    if outcomes.is_empty() {
                        return Err(EfgError::Structure(format!(
                            "chance node {id} has no outcomes"
                        )));
                    }
                    let total: f64 = outcomes.iter().map(|(p, _)| p).sum();
                    if outcomes.iter().any(|(p, _)| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                        return Err(EfgError::ChanceProbabilities { node: id, total });
                    }
                    outcomes.iter().map(|&(_, c)| c).collect()
                }
                Node::Decision {
                    player,
                    infoset,
                    children,
                } => {
                    let info = self.infosets[player.index()].get(*infoset).ok_or_else(|| {
                        EfgError::Structure(format!(
                            "node {id} references unknown infoset {infoset}"
                        ))
                    })?;
                    if children.is_empty() || children.len() != info.actions.len() {
                        return Err(EfgError::Structure(format!(
                            "node {id} has {} children but infoset `{}` has {} actions",
                            children.len(),
                            info.name,
                            info.actions.len()
                        )));
                    }
                    children.clone()
                }
                Node::Terminal { payoff } => {
                    if !payoff.is_finite() {
                        return Err(EfgError::Structure(format!(
                            "terminal {id} has non-finite payoff"
                        )));
                    }
                    Vec::new()
                }
            };
            for c in children {
                if c >= n || c == self.root {
                    return Err(EfgError::Structure(format!(
                        "node {id} has invalid child {c}"
                    )));
                }
                parents[c] += 1;
                if parents[c] > 1 {
                    return Err(EfgError::Structure(format!(
                        "node {c} has more than one parent"
                    )));
                }
            }
        }
        // Every non-root node has exactly one parent; reachability rules out cycles.
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        let mut count = 0;
        while let Some(id) = stack.pop() {
            if seen[id] {
                continue;
            }
            seen[id] = true;
            count += 1;
            stack.extend(self.children(id));
        }
        if count != n {
            return Err(EfgError::Structure(
                "game graph is not a tree rooted at the root node".into(),
            ));
        }
        Ok(())
    }

    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        match &self.nodes[id] {
            Node::Chance { outcomes } => outcomes.iter().map(|&(_, c)| c).collect(),
            Node::Decision { children, .. } => children.clone(),
            Node::Terminal { .. } => Vec::new(),
        }
    }

    /// Writes the line-oriented text format read by [`GameTree::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "root {}", self.root);
        for p in [Player::One, Player::Two] {
            for info in &self.infosets[p.index()] {
                let _ = writeln!(
                    out,
                    "infoset {} {} {}",
                    p.tag(),
                    info.name,
                    info.actions.join(" ")
                );
            }
        }
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Chance { outcomes } => {
                    let _ = write!(out, "{id} chance");
                    for (p, c) in outcomes {
                        let _ = write!(out, " {c}@{p:?}");
                    }
                }
                Node::Decision {
                    player,
                    infoset,
                    children,
                } => {
                    let info = &self.infosets[player.index()][*infoset];
                    let _ = write!(out, "{id} {} {}", player.tag(), info.name);
                    for c in children {
                        let _ = write!(out, " {c}");
                    }
                }
                Node::Terminal { payoff } => {
                    let _ = write!(out, "{id} leaf {payoff:?}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format:
    ///
    /// ```text
    /// # comment
    /// root 0
    /// infoset p1 <name> <action> <action> ...
    /// <id> chance <child>@<prob> ...
    /// <id> p1|p2 <infoset-name> <child> ...
    /// <id> leaf <payoff-to-player-two>
    /// ```
    pub fn from_text(text: &str) -> Result<Self, EfgError> {
        let mut root = 0;
        let mut infosets: [Vec<InfosetInfo>; 2] = [Vec::new(), Vec::new()];
        let mut index: [HashMap<String, usize>; 2] = [HashMap::new(), HashMap::new()];
        let mut nodes: Vec<Option<Node>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| EfgError::Parse {
                line: lineno + 1,
                message: m.to_string(),
            };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let player_of = |tag: &str| match tag {
                "p1" => Some(Player::One),
                "p2" => Some(Player::Two),
                _ => None,
            };
            match tokens[0] {
                "root" => {
                    root = tokens
                        .get(1)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err("bad root"))?;
                }
                "infoset" => {
                    let player = tokens
                        .get(1)
                        .and_then(|t| player_of(t))
                        .ok_or_else(|| err("bad player"))?;
                    let name = tokens
                        .get(2)
                        .ok_or_else(|| err("missing infoset name"))?
                        .to_string();
                    let actions: Vec<String> = tokens[3..].iter().map(|s| s.to_string()).collect();
                    if actions.is_empty() {
                        return Err(err("infoset needs at least one action"));
                    }
                    let id = infosets[player.index()].len();
                    if index[player.index()].insert(name.clone(), id).is_some() {
                        return Err(err("duplicate infoset"));
                    }
                    infosets[player.index()].push(InfosetInfo { name, actions });
                }
                id => {
                    let id: usize = id.parse().map_err(|_| err("expected node id"))?;
                    let kind = tokens.get(1).ok_or_else(|| err("missing node kind"))?;
                    let node = match *kind {
                        "chance" => {
                            let outcomes = tokens[2..]
                                .iter()
                                .map(|t| {
                                    let (c, p) = t
                                        .split_once('@')
                                        .ok_or_else(|| err("expected child@prob"))?;
                                    Ok((
                                        p.parse::<f64>().map_err(|_| err("bad probability"))?,
                                        c.parse::<usize>().map_err(|_| err("bad child"))?,
                                    ))
                                })
                                .collect::<Result<Vec<_>, EfgError>>()?;
                            Node::Chance { outcomes }
                        }
                        "leaf" => Node::Terminal {
                            payoff: tokens
                                .get(2)
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| err("bad payoff"))?,
                        },
                        tag => {
                            let player = player_of(tag).ok_or_else(|| err("unknown node kind"))?;
                            let name = tokens.get(2).ok_or_else(|| err("missing infoset"))?;
                            let infoset = *index[player.index()]
                                .get(*name)
                                .ok_or_else(|| err("undeclared infoset"))?;
                            let children = tokens[3..]
                                .iter()
                                .map(|t| t.parse::<usize>().map_err(|_| err("bad child")))
                                .collect::<Result<Vec<_>, _>>()?;
                            Node::Decision {
                                player,
                                infoset,
                                children,
                            }
                        }
                    };
                    if nodes.len() <= id {
                        nodes.resize(id + 1, None);
                    }
                    if nodes[id].is_some() {
                        return Err(err("duplicate node id"));
                    }
                    nodes[id] = Some(node);
                }
            }
        }
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(i, n)| n.ok_or_else(|| EfgError::Structure(format!("node {i} is missing"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(nodes, root, infosets)
    }
}

/// Incremental construction of game trees; infosets are created on first use.
#[derive(Debug, Default)]
pub struct GameBuilder {
    nodes: Vec<Node>,
    infosets: [Vec<InfosetInfo>; 2],
    index: [HashMap<String, usize>; 2],
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terminal(&mut self, payoff: f64) -> NodeId {
        self.push(Node::Terminal { payoff })
    }

    pub fn chance(&mut self, outcomes: Vec<(f64, NodeId)>) -> NodeId {
        self.push(Node::Chance { outcomes })
    }

    /// Adds a decision node. `actions` names the edges and must match
    /// previous uses of the same infoset.
    pub fn decision(
        &mut self,
        player: Player,
        infoset: &str,
        actions: &[&str],
        children: Vec<NodeId>,
    ) -> NodeId {
        let p = player.index();
        let id = match self.index[p].get(infoset) {
            Some(&id) => id,
            None => {
                let id = self.infosets[p].len();
                self.infosets[p].push(InfosetInfo {
                    name: infoset.to_string(),
                    actions: actions.iter().map(|s| s.to_string()).collect(),
                });
                self.index[p].insert(infoset.to_string(), id);
                id
            }
        };
        self.push(Node::Decision {
            player,
            infoset: id,
            children,
        })
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn build(self, root: NodeId) -> Result<GameTree, EfgError> {
        GameTree::new(self.nodes, root, self.infosets)
    }
}

/// Simultaneous-move matrix game: `payoffs[i][j]` is paid to the column player
/// (the maximizer) when the row player picks `i` and the column player `j`.
pub fn build_matrix_game(payoffs: &[Vec<f64>]) -> Result<GameTree, EfgError> {
    let rows = payoffs.len();
    let cols = payoffs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(EfgError::EmptyMatrix);
    }
    if payoffs.iter().any(|r| r.len() != cols) {
        return Err(EfgError::Structure("ragged payoff matrix".into()));
    }
    let row_actions: Vec<String> = (0..rows).map(|i| format!("r{i}")).collect();
    let col_actions: Vec<String> = (0..cols).map(|j| format!("c{j}")).collect();
    let row_refs: Vec<&str> = row_actions.iter().map(String::as_str).collect();
    let col_refs: Vec<&str> = col_actions.iter().map(String::as_str).collect();
    let mut b = GameBuilder::new();
    let mut row_nodes = Vec::with_capacity(rows);
    for row in payoffs {
        let leaves = row.iter().map(|&v| b.terminal(v)).collect();
        row_nodes.push(b.decision(Player::Two, "col", &col_refs, leaves));
    }
    let root = b.decision(Player::One, "row", &row_refs, row_nodes);
    b.build(root)
}

pub fn rock_paper_scissors() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 1.0, -1.0],
        vec![-1.0, 0.0, 1.0],
        vec![1.0, -1.0, 0.0],
    ]
}

pub fn matching_pennies() -> Vec<Vec<f64>> {
    vec![vec![1.0, -1.0], vec![-1.0, 1.0]]
}

/// Parses a dense matrix: one row per line, entries separated by commas or whitespace.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>, EfgError> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| EfgError::Parse {
                    line: lineno + 1,
                    message: format!("bad number `{t}`"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(EfgError::Parse {
                    line: lineno + 1,
                    message: format!("expected {first} entries, found {}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Deterministic 64-bit mixer used to derive payoffs from a seed.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Perfect-information game where the players alternate, each choosing among
/// `k` actions `d` times, player one first. Leaf payoffs are pseudo-random in
/// `[-1, 1]`, determined by `seed`.
pub fn build_alternating_game(k: usize, d: usize, seed: u64) -> Result<GameTree, EfgError> {
    if k == 0 || d == 0 {
        return Err(EfgError::Structure(
            "alternating game needs k >= 1 and d >= 1".into(),
        ));
    }
    let labels: Vec<String> = (0..k).map(|a| a.to_string()).collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut b = GameBuilder::new();
    let mut counter = seed;
    let root = alternating_node(&mut b, &labels, k, 2 * d, 0, String::new(), &mut counter);
    b.build(root)
}

fn alternating_node(
    b: &mut GameBuilder,
    labels: &[&str],
    k: usize,
    total: usize,
    ply: usize,
    history: String,
    counter: &mut u64,
) -> NodeId {
    if ply == total {
        *counter = counter.wrapping_add(1);
        let u = (splitmix64(*counter) >> 11) as f64 / (1u64 << 53) as f64;
        return b.terminal(2.0 * u - 1.0);
    }
    let children = (0..k)
        .map(|a| {
            alternating_node(
                b,
                labels,
                k,
                total,
                ply + 1,
                format!("{history}{a}."),
                counter,
            )
        })
        .collect();
    let player = if ply % 2 == 0 {
        Player::One
    } else {
        Player::Two
    };
    b.decision(player, &format!("h{history}"), labels, children)
}
