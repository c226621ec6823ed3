//! Treeplexes: trees of simplexes joined by Cartesian products and branching.
//!
//! A treeplex is stored as a list of simplexes in topological order (every
//! simplex appears after the simplex that owns its parent variable). Each
//! simplex owns a set of global variable indices; every variable belongs to
//! exactly one simplex. A simplex either hangs off the implicit root (its
//! parent variable is fixed at 1) or off a single variable of an earlier
//! simplex, in which case all of its entries are scaled by that variable.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

/// Default cap on the number of vertices [`Treeplex::enumerate_vertices`] will produce.
pub const DEFAULT_VERTEX_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeplexError {
    #[error("treeplex has no simplexes")]
    Empty,
    #[error("simplex {simplex} has no variables")]
    EmptySimplex { simplex: usize },
    #[error("duplicate index: variable {var} appears in more than one simplex")]
    DuplicateIndex { var: usize },
    #[error("variable {var} is not owned by any simplex")]
    MissingIndex { var: usize },
    #[error("simplex {simplex}: child map has {found} entries for {expected} variables")]
    ChildMapShape {
        simplex: usize,
        expected: usize,
        found: usize,
    },
    #[error("simplex {simplex} references unknown simplex {child}")]
    UnknownSimplex { simplex: usize, child: usize },
    #[error("simplex {simplex} is listed as a child more than once")]
    MultipleParents { simplex: usize },
    #[error("simplex {simplex} declares parent {declared:?} but is attached to {actual:?}")]
    ParentMismatch {
        simplex: usize,
        declared: Option<usize>,
        actual: Option<usize>,
    },
    #[error("orphan simplex {simplex}: parent variable {parent} does not list it as a child")]
    Orphan { simplex: usize, parent: usize },
    #[error("cyclic child map through simplex {simplex}")]
    Cycle { simplex: usize },
    #[error("simplex {child} appears before its parent simplex {parent}")]
    NotTopological { parent: usize, child: usize },
    #[error("vertex count {count} exceeds limit {limit}")]
    TooManyVertices { count: f64, limit: usize },
    #[error("vector has length {found}, treeplex has {expected} variables")]
    Dimension { expected: usize, found: usize },
    #[error("negative entry {value} at variable {var}")]
    NegativeEntry { var: usize, value: f64 },
    #[error("simplex {simplex} sums to {sum}, parent value is {parent_value}")]
    SimplexSum {
        simplex: usize,
        sum: f64,
        parent_value: f64,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Input description of one simplex, before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexSpec {
    /// Parent branching variable, `None` for root simplexes.
    pub parent: Option<usize>,
    pub vars: Vec<usize>,
    /// `children[a]` lists the simplexes reached by branching on `vars[a]`.
    pub children: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexNode {
    pub id: usize,
    /// Global variable indices of this simplex, in order.
    pub vars: Vec<usize>,
    /// Parent branching variable; `None` means the parent value is the constant 1.
    pub parent: Option<usize>,
    /// Child simplexes per variable, aligned with `vars`.
    pub children: Vec<Vec<usize>>,
    /// Number of branching levels below this simplex (0 for leaves).
    pub depth_below: usize,
    /// Number of branching operations above this simplex (0 for roots).
    pub branchings_above: usize,
}

impl SimplexNode {
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    /// Iterates `(variable, children)` pairs.
    pub fn branches(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.vars
            .iter()
            .copied()
            .zip(self.children.iter().map(Vec::as_slice))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Treeplex {
    simplexes: Vec<SimplexNode>,
    num_variables: usize,
    roots: Vec<usize>,
    owner: Vec<usize>,
}

impl Treeplex {
    /// Validates `specs` and builds the treeplex. Simplex ids are positions in `specs`.
    pub fn new(num_variables: usize, specs: Vec<SimplexSpec>) -> Result<Self, TreeplexError> {
        validate_specs(num_variables, &specs)?;
        let owner = owner_map(num_variables, &specs);
        let n = specs.len();
        let mut simplexes: Vec<SimplexNode> = specs
            .into_iter()
            .enumerate()
            .map(|(id, s)| SimplexNode {
                id,
                vars: s.vars,
                parent: s.parent,
                children: s.children,
                depth_below: 0,
                branchings_above: 0,
            })
            .collect();
        for j in 0..n {
            if let Some(p) = simplexes[j].parent {
                simplexes[j].branchings_above = simplexes[owner[p]].branchings_above + 1;
            }
        }
        for j in (0..n).rev() {
            let d = simplexes[j]
                .children
                .iter()
                .flatten()
                .map(|&k| simplexes[k].depth_below + 1)
                .max()
                .unwrap_or(0);
            simplexes[j].depth_below = d;
        }
        let roots = (0..n).filter(|&j| simplexes[j].parent.is_none()).collect();
        Ok(Self {
            simplexes,
            num_variables,
            roots,
            owner,
        })
    }

    pub fn simplexes(&self) -> &[SimplexNode] {
        &self.simplexes
    }

    pub fn simplex(&self, j: usize) -> &SimplexNode {
        &self.simplexes[j]
    }

    pub fn num_simplexes(&self) -> usize {
        self.simplexes.len()
    }

    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Simplex owning variable `var`.
    pub fn owner(&self, var: usize) -> usize {
        self.owner[var]
    }

    /// Overall depth: the largest `depth_below` over root simplexes.
    pub fn depth(&self) -> usize {
        self.roots
            .iter()
            .map(|&j| self.simplexes[j].depth_below)
            .max()
            .unwrap_or(0)
    }

    /// Dimension of the largest simplex.
    pub fn largest_simplex(&self) -> usize {
        self.simplexes
            .iter()
            .map(SimplexNode::len)
            .max()
            .unwrap_or(0)
    }

    /// Value of the parent variable of simplex `j` in `q` (1 for roots).
    #[inline]
    pub fn parent_value(&self, j: usize, q: &[f64]) -> f64 {
        match self.simplexes[j].parent {
            Some(p) => q[p],
            None => 1.0,
        }
    }

    /// Re-validates the stored structure.
    pub fn validate(&self) -> Result<(), TreeplexError> {
        validate_specs(self.num_variables, &self.specs())
    }

    /// The raw simplex descriptions this treeplex was built from.
    pub fn specs(&self) -> Vec<SimplexSpec> {
        self.simplexes
            .iter()
            .map(|s| SimplexSpec {
                parent: s.parent,
                vars: s.vars.clone(),
                children: s.children.clone(),
            })
            .collect()
    }

    pub fn compute_stats(&self) -> TreeplexStats {
        TreeplexStats::compute(self)
    }

    /// Number of pure strategies (vertices), as a float to survive overflow.
    pub fn vertex_count(&self) -> f64 {
        let mut count = vec![0.0f64; self.simplexes.len()];
        for j in (0..self.simplexes.len()).rev() {
            count[j] = self.simplexes[j]
                .children
                .iter()
                .map(|ch| ch.iter().map(|&k| count[k]).product::<f64>())
                .sum();
        }
        self.roots.iter().map(|&j| count[j]).product()
    }

    /// Lists every vertex exactly once as a 0/1 vector, refusing when there are more than `limit`.
    pub fn enumerate_vertices(&self, limit: usize) -> Result<Vec<Vec<f64>>, TreeplexError> {
        let count = self.vertex_count();
        if count > limit as f64 {
            return Err(TreeplexError::TooManyVertices { count, limit });
        }
        // Active-variable sets per subtree, built bottom-up.
        let mut sets: Vec<Vec<Vec<usize>>> = vec![Vec::new(); self.simplexes.len()];
        for j in (0..self.simplexes.len()).rev() {
            let mut out = Vec::new();
            for (var, children) in self.simplexes[j].branches() {
                let mut partial = vec![vec![var]];
                for &k in children {
                    partial = cartesian(&partial, &sets[k]);
                }
                out.extend(partial);
            }
            sets[j] = out;
        }
        let mut active = vec![Vec::new()];
        for &r in &self.roots {
            active = cartesian(&active, &sets[r]);
        }
        Ok(active
            .into_iter()
            .map(|idx| {
                let mut v = vec![0.0; self.num_variables];
                for i in idx {
                    v[i] = 1.0;
                }
                v
            })
            .collect())
    }

    /// Largest violation of the simplex-sum constraints, or of nonnegativity.
    pub fn constraint_residual(&self, q: &[f64]) -> f64 {
        let mut worst = q.iter().fold(0.0f64, |acc, &v| acc.max(-v));
        for s in &self.simplexes {
            let sum: f64 = s.vars.iter().map(|&i| q[i]).sum();
            worst = worst.max((sum - self.parent_value(s.id, q)).abs());
        }
        worst
    }

    /// Checks `q` lies in the treeplex up to `tol`.
    pub fn check_member(&self, q: &[f64], tol: f64) -> Result<(), TreeplexError> {
        self.check_dim(q)?;
        for (var, &value) in q.iter().enumerate() {
            if value < -tol {
                return Err(TreeplexError::NegativeEntry { var, value });
            }
        }
        for s in &self.simplexes {
            let sum: f64 = s.vars.iter().map(|&i| q[i]).sum();
            let parent_value = self.parent_value(s.id, q);
            if (sum - parent_value).abs() > tol * parent_value.abs().max(1.0) {
                return Err(TreeplexError::SimplexSum {
                    simplex: s.id,
                    sum,
                    parent_value,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, q: &[f64]) -> Result<(), TreeplexError> {
        if q.len() != self.num_variables {
            return Err(TreeplexError::Dimension {
                expected: self.num_variables,
                found: q.len(),
            });
        }
        Ok(())
    }

    /// Local (behavioral) distribution at every simplex: `q_i / q_parent`.
    ///
    /// Simplexes whose parent value is zero get the uniform distribution.
    pub fn behavioral_from_sequence(
        &self,
        q: &[f64],
        tol: f64,
    ) -> Result<Vec<Vec<f64>>, TreeplexError> {
        self.check_member(q, tol)?;
        Ok(self
            .simplexes
            .iter()
            .map(|s| {
                let parent = self.parent_value(s.id, q);
                if parent <= 0.0 {
                    vec![1.0 / s.len() as f64; s.len()]
                } else {
                    s.vars.iter().map(|&i| q[i].max(0.0) / parent).collect()
                }
            })
            .collect())
    }

    /// Sequence-form vector of a behavioral strategy (one distribution per simplex).
    pub fn sequence_from_behavioral(&self, behavioral: &[Vec<f64>]) -> Vec<f64> {
        let mut q = vec![0.0; self.num_variables];
        for s in &self.simplexes {
            let parent = self.parent_value(s.id, &q);
            for (a, &i) in s.vars.iter().enumerate() {
                q[i] = parent * behavioral[s.id][a];
            }
        }
        q
    }

    /// Sequence form of the strategy that plays uniformly at every simplex.
    pub fn uniform_strategy(&self) -> Vec<f64> {
        let behavioral: Vec<Vec<f64>> = self
            .simplexes
            .iter()
            .map(|s| vec![1.0 / s.len() as f64; s.len()])
            .collect();
        self.sequence_from_behavioral(&behavioral)
    }

    /// Serializes to the line format `j | parent | i:k1,k2 ; i: ;`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.simplexes {
            let _ = write!(out, "{} | ", s.id);
            match s.parent {
                Some(p) => {
                    let _ = write!(out, "{p}");
                }
                None => out.push('-'),
            }
            out.push_str(" |");
            for (var, children) in s.branches() {
                let list: Vec<String> = children.iter().map(|k| k.to_string()).collect();
                let _ = write!(out, " {var}:{} ;", list.join(","));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TreeplexError> {
        let mut specs = Vec::new();
        let mut max_var: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| TreeplexError::Parse {
                line: lineno + 1,
                message: message.to_string(),
            };
            let mut fields = line.splitn(3, '|');
            let (Some(id), Some(parent), Some(body)) =
                (fields.next(), fields.next(), fields.next())
            else {
                return Err(err("expected `j | parent | entries`"));
            };
            let id: usize = id.trim().parse().map_err(|_| err("bad simplex id"))?;
            if id != specs.len() {
                return Err(err("simplex ids must be dense and in order"));
            }
            let parent = match parent.trim() {
                "-" => None,
                p => Some(p.parse::<usize>().map_err(|_| err("bad parent index"))?),
            };
            let mut vars = Vec::new();
            let mut children = Vec::new();
            for entry in body.split(';') {
                let entry = entry.trim();
                if entry.is_empty() {
                    continue;
                }
                let (var, kids) = entry
                    .split_once(':')
                    .ok_or_else(|| err("entry needs `i:children`"))?;
                let var: usize = var.trim().parse().map_err(|_| err("bad variable index"))?;
                let kids = kids
                    .split(',')
                    .map(str::trim)
                    .filter(|k| !k.is_empty())
                    .map(|k| k.parse::<usize>().map_err(|_| err("bad child id")))
                    .collect::<Result<Vec<_>, _>>()?;
                max_var = Some(max_var.map_or(var, |m| m.max(var)));
                vars.push(var);
                children.push(kids);
            }
            specs.push(SimplexSpec {
                parent,
                vars,
                children,
            });
        }
        let n = max_var.map_or(0, |m| m + 1);
        Self::new(n, specs)
    }
}

impl fmt::Display for Treeplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn cartesian(left: &[Vec<usize>], right: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in left {
        for r in right {
            let mut v = l.clone();
            v.extend_from_slice(r);
            out.push(v);
        }
    }
    out
}

fn owner_map(num_variables: usize, specs: &[SimplexSpec]) -> Vec<usize> {
    let mut owner = vec![usize::MAX; num_variables];
    for (j, s) in specs.iter().enumerate() {
        for &v in &s.vars {
            owner[v] = j;
        }
    }
    owner
}

fn validate_specs(num_variables: usize, specs: &[SimplexSpec]) -> Result<(), TreeplexError> {
    if specs.is_empty() {
        return Err(TreeplexError::Empty);
    }
    let n = specs.len();
    let mut owner = vec![usize::MAX; num_variables];
    for (j, s) in specs.iter().enumerate() {
        if s.vars.is_empty() {
            return Err(TreeplexError::EmptySimplex { simplex: j });
        }
        if s.children.len() != s.vars.len() {
            return Err(TreeplexError::ChildMapShape {
                simplex: j,
                expected: s.vars.len(),
                found: s.children.len(),
            });
        }
        for &v in &s.vars {
            if v >= num_variables {
                return Err(TreeplexError::MissingIndex { var: v });
            }
            if owner[v] != usize::MAX {
                return Err(TreeplexError::DuplicateIndex { var: v });
            }
            owner[v] = j;
        }
    }
    if let Some(var) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(TreeplexError::MissingIndex { var });
    }

    // Where each simplex is actually attached according to the child maps.
    let mut attached: Vec<Option<usize>> = vec![None; n];
    for (j, s) in specs.iter().enumerate() {
        for (&var, kids) in s.vars.iter().zip(&s.children) {
            for &k in kids {
                if k >= n {
                    return Err(TreeplexError::UnknownSimplex {
                        simplex: j,
                        child: k,
                    });
                }
                if attached[k].is_some() {
                    return Err(TreeplexError::MultipleParents { simplex: k });
                }
                attached[k] = Some(var);
            }
        }
    }
    for (j, s) in specs.iter().enumerate() {
        match (s.parent, attached[j]) {
            (Some(p), None) => {
                if p >= num_variables {
                    return Err(TreeplexError::MissingIndex { var: p });
                }
                return Err(TreeplexError::Orphan {
                    simplex: j,
                    parent: p,
                });
            }
            (declared, actual) if declared != actual => {
                return Err(TreeplexError::ParentMismatch {
                    simplex: j,
                    declared,
                    actual,
                });
            }
            _ => {}
        }
    }

    // Every simplex must be reachable from a root; anything else sits on a cycle.
    let mut reached = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&j| specs[j].parent.is_none()).collect();
    while let Some(j) = stack.pop() {
        if reached[j] {
            continue;
        }
        reached[j] = true;
        stack.extend(specs[j].children.iter().flatten().copied());
    }
    if let Some(j) = reached.iter().position(|r| !r) {
        return Err(TreeplexError::Cycle { simplex: j });
    }
    for (j, s) in specs.iter().enumerate() {
        if let Some(p) = s.parent {
            if owner[p] >= j {
                return Err(TreeplexError::NotTopological {
                    parent: owner[p],
                    child: j,
                });
            }
        }
    }
    Ok(())
}

/// Incrementally builds a treeplex whose variables are allocated contiguously.
#[derive(Debug, Default, Clone)]
pub struct TreeplexBuilder {
    specs: Vec<SimplexSpec>,
    owner: Vec<(usize, usize)>,
}

impl TreeplexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a simplex with `size` fresh variables under `parent` (a variable
    /// allocated earlier, or `None` for a root). Returns the simplex id.
    ///
    /// # Panics
    /// If `parent` has not been allocated or `size` is zero.
    pub fn add_simplex(&mut self, parent: Option<usize>, size: usize) -> usize {
        assert!(size > 0, "simplex must have at least one variable");
        let id = self.specs.len();
        if let Some(p) = parent {
            let (owner, pos) = self.owner[p];
            self.specs[owner].children[pos].push(id);
        }
        let start = self.owner.len();
        self.owner.extend((0..size).map(|pos| (id, pos)));
        self.specs.push(SimplexSpec {
            parent,
            vars: (start..start + size).collect(),
            children: vec![Vec::new(); size],
        });
        id
    }

    /// Variables of simplex `id`.
    pub fn vars(&self, id: usize) -> &[usize] {
        &self.specs[id].vars
    }

    pub fn num_variables(&self) -> usize {
        self.owner.len()
    }

    pub fn build(self) -> Result<Treeplex, TreeplexError> {
        Treeplex::new(self.owner.len(), self.specs)
    }
}

/// Size statistics of a treeplex and of every subtreeplex.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeplexStats {
    /// Maximum l1 norm over the treeplex.
    pub max_l1: f64,
    /// `max_l1_truncated[r]`: maximum l1 norm counting only simplexes within `r` branchings of a root.
    pub max_l1_truncated: Vec<f64>,
    pub depth: usize,
    /// Dimension of the largest simplex.
    pub largest_simplex: usize,
    pub num_simplexes: usize,
    /// Maximum l1 norm of each subtreeplex rooted at simplex `j`.
    pub subtree_max_l1: Vec<f64>,
    /// `subtree_max_l1_truncated[j][r]` for `r = 0..=depth_below(j)`.
    pub subtree_max_l1_truncated: Vec<Vec<f64>>,
}

impl TreeplexStats {
    pub fn compute(t: &Treeplex) -> Self {
        let n = t.num_simplexes();
        let mut sub: Vec<Vec<f64>> = vec![Vec::new(); n];
        for j in (0..n).rev() {
            let s = t.simplex(j);
            let mut row = Vec::with_capacity(s.depth_below + 1);
            row.push(1.0);
            for r in 1..=s.depth_below {
                let best = s
                    .children
                    .iter()
                    .map(|ch| {
                        ch.iter()
                            .map(|&k| truncated_at(&sub[k], r - 1))
                            .sum::<f64>()
                    })
                    .fold(0.0f64, f64::max);
                row.push(1.0 + best);
            }
            sub[j] = row;
        }
        let depth = t.depth();
        let max_l1_truncated: Vec<f64> = (0..=depth)
            .map(|r| t.roots().iter().map(|&j| truncated_at(&sub[j], r)).sum())
            .collect();
        Self {
            max_l1: max_l1_truncated[depth],
            max_l1_truncated,
            depth,
            largest_simplex: t.largest_simplex(),
            num_simplexes: n,
            subtree_max_l1: sub.iter().map(|row| *row.last().unwrap()).collect(),
            subtree_max_l1_truncated: sub,
        }
    }

    /// `M_{Q_j, r}`, saturating at the subtree's full value for large `r`.
    pub fn subtree_truncated(&self, j: usize, r: usize) -> f64 {
        truncated_at(&self.subtree_max_l1_truncated[j], r)
    }
}

fn truncated_at(row: &[f64], r: usize) -> f64 {
    row[r.min(row.len() - 1)]
}

/// Small named treeplexes used throughout the tests and examples.
pub mod shapes {
    use super::{SimplexSpec, Treeplex, TreeplexBuilder};

    /// A single simplex with `m` variables.
    pub fn simplex(m: usize) -> Treeplex {
        let mut b = TreeplexBuilder::new();
        b.add_simplex(None, m);
        b.build().expect("single simplex is valid")
    }

    /// The nine-simplex, twenty-variable example treeplex with two root
    /// simplexes. Indices are zero-based: variable `q_i` is index `i - 1` and
    /// simplex `Δ^j` is id `j - 1`.
    pub fn nine_simplex_example() -> Treeplex {
        let spec = |parent: Option<usize>,
                    vars: std::ops::Range<usize>,
                    children: Vec<Vec<usize>>| SimplexSpec {
            parent,
            vars: vars.collect(),
            children,
        };
        let specs = vec![
            spec(None, 0..2, vec![vec![2], vec![3]]),
            spec(None, 2..5, vec![vec![4], vec![5], vec![6]]),
            spec(Some(0), 5..7, vec![vec![], vec![7, 8]]),
            spec(Some(1), 7..9, vec![vec![], vec![]]),
            spec(Some(2), 9..11, vec![vec![], vec![]]),
            spec(Some(3), 11..13, vec![vec![], vec![]]),
            spec(Some(4), 13..15, vec![vec![], vec![]]),
            spec(Some(6), 15..18, vec![vec![], vec![], vec![]]),
            spec(Some(6), 18..20, vec![vec![], vec![]]),
        ];
        Treeplex::new(20, specs).expect("example treeplex is valid")
    }

    /// Player-one treeplex of the alternating game where both players pick
    /// among `k` actions, `d` times each, starting with player one.
    pub fn alternating(k: usize, d: usize) -> Treeplex {
        assert!(k >= 1 && d >= 1);
        let mut b = TreeplexBuilder::new();
        let mut frontier = vec![b.add_simplex(None, k)];
        for _ in 1..d {
            let mut next = Vec::new();
            for j in frontier {
                let vars = b.vars(j).to_vec();
                for v in vars {
                    // One child simplex per opponent action.
                    for _ in 0..k {
                        next.push(b.add_simplex(Some(v), k));
                    }
                }
            }
            frontier = next;
        }
        b.build().expect("alternating treeplex is valid")
    }
}
