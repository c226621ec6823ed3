//! Per-simplex weights of the dilated entropy.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DgfError;
use crate::treeplex::{Treeplex, TreeplexStats};

/// Named weighting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightScheme {
    /// Bottom-up recurrence with `β_j = c·α_j` below the roots.
    Recurrence { multiplier: f64 },
    /// Recurrence with `β_j = α_j` everywhere; each child contributes `2·α_k`.
    PracticalNew,
    /// Closed form `β_j = 2 + Σ_{r=1}^{d_j} 2^r (M_{Q_j,r} - 1)`.
    Corollary,
    /// Closed form multiplied by `M_Q`.
    CorollaryScaled,
    /// `β_j = 2^{d_j} M_{Q_j}`.
    Old,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Recurrence { multiplier } => write!(f, "recurrence:{multiplier}"),
            WeightScheme::PracticalNew => f.write_str("new"),
            WeightScheme::Corollary => f.write_str("corollary"),
            WeightScheme::CorollaryScaled => f.write_str("corollary-scaled"),
            WeightScheme::Old => f.write_str("old"),
        }
    }
}

impl FromStr for WeightScheme {
    type Err = DgfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(c) = s.strip_prefix("recurrence") {
            let multiplier: f64 = match c.strip_prefix(':') {
                Some(v) => v.parse().map_err(|_| DgfError::Scheme(s.to_string()))?,
                None if c.is_empty() => 2.0,
                None => return Err(DgfError::Scheme(s.to_string())),
            };
            if !(multiplier > 1.0 && multiplier.is_finite()) {
                return Err(DgfError::Multiplier(multiplier));
            }
            return Ok(WeightScheme::Recurrence { multiplier });
        }
        match s {
            "new" | "practical-new" => Ok(WeightScheme::PracticalNew),
            "corollary" => Ok(WeightScheme::Corollary),
            "corollary-scaled" => Ok(WeightScheme::CorollaryScaled),
            "old" => Ok(WeightScheme::Old),
            _ => Err(DgfError::Scheme(s.to_string())),
        }
    }
}

impl TryFrom<String> for WeightScheme {
    type Error = DgfError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<WeightScheme> for String {
    fn from(s: WeightScheme) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgfWeights {
    pub scheme: WeightScheme,
    /// `α_j`. For closed-form schemes this is the recurrence value implied
    /// by `β` (infinite where a child has `β_k ≤ α_k`).
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Strong-convexity modulus w.r.t. the l1 norm that the scheme claims.
    pub ell1_modulus: f64,
    /// Largest `φ` such that `β / φ` satisfies the recurrence, found
    /// numerically. Implies modulus `φ` (l2) and `φ / M_Q` (l1); 0 when no
    /// such `φ` was found.
    pub certificate: f64,
    /// Multiplier already applied to `β` by [`DgfWeights::scaled`].
    pub scale: f64,
}

impl DgfWeights {
    pub fn build(
        scheme: WeightScheme,
        t: &Treeplex,
        stats: &TreeplexStats,
    ) -> Result<Self, DgfError> {
        match scheme {
            WeightScheme::Recurrence { multiplier } => weights_recurrence(t, stats, multiplier),
            WeightScheme::PracticalNew => Ok(weights_practical_new(t, stats)),
            WeightScheme::Corollary => Ok(weights_corollary(t, stats, false)),
            WeightScheme::CorollaryScaled => Ok(weights_corollary(t, stats, true)),
            WeightScheme::Old => Ok(weights_old(t, stats)),
        }
    }

    /// Multiplies every `β` by `factor`; moduli scale along.
    pub fn scaled(mut self, factor: f64) -> Result<Self, DgfError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(DgfError::Scale(factor));
        }
        for b in &mut self.beta {
            *b *= factor;
        }
        self.ell1_modulus *= factor;
        self.certificate *= factor;
        self.scale *= factor;
        Ok(self)
    }

    /// True when the recurrence check backs the claimed l1 modulus.
    pub fn is_certified(&self, stats: &TreeplexStats) -> bool {
        self.certificate / stats.max_l1 >= self.ell1_modulus * (1.0 - 1e-12)
    }

    /// l1 modulus proven by the recurrence check.
    pub fn certified_ell1_modulus(&self, stats: &TreeplexStats) -> f64 {
        self.certificate / stats.max_l1
    }

    /// CSV with header `simplex_id,alpha,beta,scheme`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("simplex_id,alpha,beta,scheme\n");
        for (j, (a, b)) in self.alpha.iter().zip(&self.beta).enumerate() {
            let _ = writeln!(out, "{j},{a:?},{b:?},{}", self.scheme);
        }
        out
    }
}

/// Recurrence weights: `α_j = 1 + max_i Σ_{k∈D_j^i} α_k β_k / (β_k - α_k)`,
/// `β_j = c·α_j` for non-roots and `β_j = α_j` for roots.
pub fn weights_recurrence(
    t: &Treeplex,
    stats: &TreeplexStats,
    c: f64,
) -> Result<DgfWeights, DgfError> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(DgfError::Multiplier(c));
    }
    let n = t.num_simplexes();
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    for j in (0..n).rev() {
        let s = t.simplex(j);
        alpha[j] = 1.0
            + max_branch(s.children.iter(), |k| {
                alpha[k] * beta[k] / (beta[k] - alpha[k])
            });
        beta[j] = if s.is_root() { alpha[j] } else { c * alpha[j] };
    }
    Ok(finish(
        WeightScheme::Recurrence { multiplier: c },
        t,
        stats,
        alpha,
        beta,
        1.0 / stats.max_l1,
    ))
}

/// `β_j = α_j` with each child contributing `2·α_k`. Heuristic: the strict
/// inequality the recurrence needs is violated, so no modulus is proven.
pub fn weights_practical_new(t: &Treeplex, stats: &TreeplexStats) -> DgfWeights {
    let n = t.num_simplexes();
    let mut alpha = vec![0.0; n];
    for j in (0..n).rev() {
        alpha[j] = 1.0 + max_branch(t.simplex(j).children.iter(), |k| 2.0 * alpha[k]);
    }
    let beta = alpha.clone();
    finish(
        WeightScheme::PracticalNew,
        t,
        stats,
        alpha,
        beta,
        1.0 / stats.max_l1,
    )
}

/// Closed-form weights `β_j = 2 + Σ_{r=1}^{d_j} 2^r (M_{Q_j,r} - 1)`,
/// optionally multiplied by `M_Q`.
pub fn weights_corollary(t: &Treeplex, stats: &TreeplexStats, scale_by_mq: bool) -> DgfWeights {
    let factor = if scale_by_mq { stats.max_l1 } else { 1.0 };
    let beta: Vec<f64> = t
        .simplexes()
        .iter()
        .map(|s| {
            let sum: f64 = (1..=s.depth_below)
                .map(|r| 2f64.powi(r as i32) * (stats.subtree_truncated(s.id, r) - 1.0))
                .sum();
            factor * (2.0 + sum)
        })
        .collect();
    let alpha = implied_alpha(t, &beta);
    let (scheme, modulus) = if scale_by_mq {
        (WeightScheme::CorollaryScaled, 1.0)
    } else {
        (WeightScheme::Corollary, 1.0 / stats.max_l1)
    };
    finish(scheme, t, stats, alpha, beta, modulus)
}

/// Prior weights `β_j = 2^{d_j} M_{Q_j}` with claimed l1 modulus `1 / |S_Q|`.
pub fn weights_old(t: &Treeplex, stats: &TreeplexStats) -> DgfWeights {
    let beta: Vec<f64> = t
        .simplexes()
        .iter()
        .map(|s| 2f64.powi(s.depth_below as i32) * stats.subtree_max_l1[s.id])
        .collect();
    let alpha = implied_alpha(t, &beta);
    finish(
        WeightScheme::Old,
        t,
        stats,
        alpha,
        beta,
        1.0 / t.num_simplexes() as f64,
    )
}

fn finish(
    scheme: WeightScheme,
    t: &Treeplex,
    stats: &TreeplexStats,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    ell1_modulus: f64,
) -> DgfWeights {
    let certificate = recurrence_certificate(t, &beta);
    let w = DgfWeights {
        scheme,
        alpha,
        beta,
        ell1_modulus,
        certificate,
        scale: 1.0,
    };
    if !w.is_certified(stats) {
        let level = match scheme {
            WeightScheme::PracticalNew | WeightScheme::Old => log::Level::Info,
            _ => log::Level::Warn,
        };
        log::log!(
            level,
            "{scheme} weights: claimed l1 modulus {ell1_modulus:e} exceeds the recurrence certificate {:e}",
            w.certified_ell1_modulus(stats)
        );
    }
    for v in fact2_violations(t, &w.beta) {
        log::info!(
            "{scheme} weights: simplex {} branch {} has beta {} < 2 + 2*sum(child beta) = {}",
            v.simplex,
            v.branch,
            v.beta,
            v.required
        );
    }
    w
}

fn max_branch<'a>(
    children: impl Iterator<Item = &'a Vec<usize>>,
    term: impl Fn(usize) -> f64,
) -> f64 {
    children
        .map(|ch| ch.iter().map(|&k| term(k)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `α` the recurrence assigns given fixed `β`; infinite below any child with `β_k ≤ α_k`.
pub fn implied_alpha(t: &Treeplex, beta: &[f64]) -> Vec<f64> {
    let n = t.num_simplexes();
    let mut alpha = vec![0.0; n];
    for j in (0..n).rev() {
        alpha[j] = 1.0
            + max_branch(t.simplex(j).children.iter(), |k| {
                if beta[k] > alpha[k] {
                    alpha[k] * beta[k] / (beta[k] - alpha[k])
                } else {
                    f64::INFINITY
                }
            });
    }
    alpha
}

/// Whether `β` satisfies the recurrence: `β_k > α_k` below the roots and
/// `β_j ≥ α_j` at the roots, with `α` implied by `β`.
pub fn satisfies_recurrence(t: &Treeplex, beta: &[f64]) -> bool {
    let alpha = implied_alpha(t, beta);
    t.simplexes().iter().all(|s| {
        let (a, b) = (alpha[s.id], beta[s.id]);
        a.is_finite() && if s.is_root() { b >= a } else { b > a }
    })
}

/// Largest `φ` with `β / φ` satisfying the recurrence (bisection, 0 if none).
pub fn recurrence_certificate(t: &Treeplex, beta: &[f64]) -> f64 {
    let feasible =
        |phi: f64| satisfies_recurrence(t, &beta.iter().map(|b| b / phi).collect::<Vec<_>>());
    if beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return 0.0;
    }
    let (mut lo, mut hi) = if feasible(1.0) {
        (1.0, 2.0)
    } else {
        (0.5, 1.0)
    };
    while feasible(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return lo;
        }
    }
    while !feasible(lo) {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-300 {
            return 0.0;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fact2Violation {
    pub simplex: usize,
    /// Position of the branching variable inside the simplex.
    pub branch: usize,
    pub beta: f64,
    pub required: f64,
}

/// Branches where `β_j < 2 + 2·Σ_{k∈D_j^i} β_k`.
pub fn fact2_violations(t: &Treeplex, beta: &[f64]) -> Vec<Fact2Violation> {
    let mut out = Vec::new();
    for s in t.simplexes() {
        for (branch, ch) in s.children.iter().enumerate() {
            if ch.is_empty() {
                continue;
            }
            let required = 2.0 + 2.0 * ch.iter().map(|&k| beta[k]).sum::<f64>();
            if beta[s.id] < required * (1.0 - 1e-12) {
                out.push(Fact2Violation {
                    simplex: s.id,
                    branch,
                    beta: beta[s.id],
                    required,
                });
            }
        }
    }
    out
}
