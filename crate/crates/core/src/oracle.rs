//! Brute-force reference implementations for tests.
//!
//! Nothing here calls into the DGF or solver code it is used to check: the
//! entropy, its derivatives and the prox objective are re-derived from the
//! per-variable form `ω(q) = Σ_i β_{owner(i)} q_i log(q_i / q_{parent(i)})`.

use rand::Rng;
use thiserror::Error;

use crate::treeplex::{Treeplex, TreeplexBuilder};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("dimension {dim} exceeds the oracle limit {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("point too close to the boundary: entry {var} is {value}")]
    NearBoundary { var: usize, value: f64 },
    #[error("grid would have {points} points, limit is 1e7")]
    GridTooLarge { points: f64 },
    #[error("starts disagree by {spread}")]
    Disagreement { spread: f64 },
    #[error("no equilibrium found by support enumeration")]
    NoEquilibrium,
}

/// Value of the parent variable of variable `i` (1 for root variables).
fn parent_of(t: &Treeplex, i: usize, q: &[f64]) -> f64 {
    t.simplex(t.owner(i)).parent.map_or(1.0, |p| q[p])
}

/// Dilated entropy evaluated variable by variable, on the positive orthant.
pub fn reference_omega(t: &Treeplex, beta: &[f64], q: &[f64]) -> f64 {
    (0..q.len())
        .map(|i| {
            let x = q[i];
            if x == 0.0 {
                0.0
            } else {
                beta[t.owner(i)] * x * (x / parent_of(t, i, q)).ln()
            }
        })
        .sum()
}

/// Exact orthant gradient of [`reference_omega`].
fn reference_gradient(t: &Treeplex, beta: &[f64], q: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; q.len()];
    for i in 0..q.len() {
        let j = t.owner(i);
        let p = parent_of(t, i, q);
        g[i] += beta[j] * ((q[i] / p).ln() + 1.0);
        if let Some(pv) = t.simplex(j).parent {
            g[pv] -= beta[j] * q[i] / p;
        }
    }
    g
}

fn richardson(d: impl Fn(f64) -> f64, s: f64) -> f64 {
    (4.0 * d(s / 2.0) - d(s)) / 3.0
}

fn refuse_near_boundary(q: &[f64]) -> Result<(), OracleError> {
    match q.iter().enumerate().find(|(_, v)| **v < 1e-6) {
        Some((var, &value)) => Err(OracleError::NearBoundary { var, value }),
        None => Ok(()),
    }
}

/// Central-difference gradient with Richardson extrapolation.
pub fn fd_gradient(t: &Treeplex, beta: &[f64], q: &[f64]) -> Result<Vec<f64>, OracleError> {
    refuse_near_boundary(q)?;
    Ok((0..q.len())
        .map(|i| {
            let s = 1e-3 * q[i];
            let d = |h: f64| {
                let mut a = q.to_vec();
                let mut b = q.to_vec();
                a[i] += h;
                b[i] -= h;
                (reference_omega(t, beta, &a) - reference_omega(t, beta, &b)) / (2.0 * h)
            };
            richardson(d, s)
        })
        .collect())
}

/// Directional second difference `hᵀ∇²ω(q)h` with Richardson extrapolation.
///
/// `step` is relative: the largest step keeps every coordinate within a
/// `step` fraction of its value.
pub fn fd_hessian_quadratic(
    t: &Treeplex,
    beta: &[f64],
    q: &[f64],
    h: &[f64],
    step: f64,
) -> Result<f64, OracleError> {
    refuse_near_boundary(q)?;
    let ratio = q
        .iter()
        .zip(h)
        .map(|(a, b)| b.abs() / a)
        .fold(0.0f64, f64::max);
    if ratio == 0.0 {
        return Ok(0.0);
    }
    let s = step / ratio;
    let f0 = reference_omega(t, beta, q);
    let d = |e: f64| {
        let plus: Vec<f64> = q.iter().zip(h).map(|(a, b)| a + e * b).collect();
        let minus: Vec<f64> = q.iter().zip(h).map(|(a, b)| a - e * b).collect();
        (reference_omega(t, beta, &plus) - 2.0 * f0 + reference_omega(t, beta, &minus)) / (e * e)
    };
    Ok(richardson(d, s))
}

/// Resolution and refinement rounds of a behavioral-parameter grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub refinements: usize,
}

/// Maximizes `objective(u)` over the treeplex by grid search on stick-breaking
/// behavioral parameters, shrinking the box around the best point each round.
pub fn grid_argmax(
    t: &Treeplex,
    spec: GridSpec,
    objective: impl Fn(&[f64]) -> f64,
) -> Result<Vec<f64>, OracleError> {
    let dims: usize = t.simplexes().iter().map(|s| s.len() - 1).sum();
    let points = (spec.resolution as f64).powi(dims as i32);
    if points > 1e7 {
        return Err(OracleError::GridTooLarge { points });
    }
    let to_point = |params: &[f64]| {
        let mut it = params.iter();
        let behavioral: Vec<Vec<f64>> = t
            .simplexes()
            .iter()
            .map(|s| {
                let mut rest = 1.0;
                let mut out = Vec::with_capacity(s.len());
                for _ in 1..s.len() {
                    let take = rest * it.next().unwrap();
                    out.push(take);
                    rest -= take;
                }
                out.push(rest);
                out
            })
            .collect();
        t.sequence_from_behavioral(&behavioral)
    };
    let mut lo = vec![0.0; dims];
    let mut hi = vec![1.0; dims];
    let mut best = vec![0.5; dims];
    let r = spec.resolution.max(2);
    for _ in 0..=spec.refinements {
        let mut best_val = f64::NEG_INFINITY;
        let mut idx = vec![0usize; dims];
        let mut current_best = best.clone();
        loop {
            let params: Vec<f64> = (0..dims)
                .map(|d| lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / (r - 1) as f64)
                .collect();
            let v = objective(&to_point(&params));
            if v > best_val {
                best_val = v;
                current_best = params;
            }
            let mut d = 0;
            while d < dims {
                idx[d] += 1;
                if idx[d] < r {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == dims {
                break;
            }
        }
        best = current_best;
        for d in 0..dims {
            let half = (hi[d] - lo[d]) * 2.0 / (r - 1) as f64;
            lo[d] = (best[d] - half).max(0.0);
            hi[d] = (best[d] + half).min(1.0);
        }
    }
    Ok(to_point(&best))
}

/// Minimizes `<ξ, u> + V(u ‖ x)` by gradient descent on per-simplex logits
/// from `starts` random points; returns the best result after checking that
/// all starts agree within `1e-8` in l∞.
pub fn brute_prox<R: Rng>(
    t: &Treeplex,
    beta: &[f64],
    x: &[f64],
    xi: &[f64],
    starts: usize,
    rng: &mut R,
) -> Result<Vec<f64>, OracleError> {
    const LIMIT: usize = 8;
    if t.num_variables() > LIMIT {
        return Err(OracleError::TooLarge {
            dim: t.num_variables(),
            limit: LIMIT,
        });
    }
    let gx = reference_gradient(t, beta, x);
    let objective = |u: &[f64]| {
        reference_omega(t, beta, u)
            + u.iter()
                .zip(xi)
                .zip(&gx)
                .map(|((a, b), c)| a * (b - c))
                .sum::<f64>()
    };
    let grad = |theta: &[f64], u: &[f64]| {
        let du: Vec<f64> = reference_gradient(t, beta, u)
            .iter()
            .zip(xi)
            .zip(&gx)
            .map(|((a, b), c)| a + b - c)
            .collect();
        logit_gradient(t, theta, u, &du)
    };
    let l2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut results: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..starts.max(1) {
        let mut theta: Vec<f64> = (0..t.num_variables())
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect();
        let mut u = logits_to_sequence(t, &theta);
        let mut f = objective(&u);
        let mut lr = 1.0;
        for _ in 0..200_000 {
            let g = grad(&theta, &u);
            let norm = l2(&g);
            if norm < 1e-12 {
                break;
            }
            let mut accepted = false;
            while lr > 1e-20 {
                let cand: Vec<f64> = theta.iter().zip(&g).map(|(a, b)| a - lr * b).collect();
                let cu = logits_to_sequence(t, &cand);
                let cf = objective(&cu);
                // Below rounding level of F, fall back to shrinking the gradient norm.
                let flat = (cf - f).abs() <= 1e-14 * f.abs().max(1.0);
                let ok = if flat {
                    l2(&grad(&cand, &cu)) < norm
                } else {
                    cf <= f - 0.25 * lr * norm * norm
                };
                if ok {
                    theta = cand;
                    u = cu;
                    f = cf;
                    accepted = true;
                    break;
                }
                lr *= 0.5;
            }
            if !accepted {
                break;
            }
            lr *= 2.0;
        }
        results.push((f, u));
    }
    let best = results
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
        .1
        .clone();
    let spread = results
        .iter()
        .map(|(_, u)| {
            u.iter()
                .zip(&best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        })
        .fold(0.0f64, f64::max);
    if spread > 1e-8 {
        return Err(OracleError::Disagreement { spread });
    }
    Ok(best)
}

fn logits_to_sequence(t: &Treeplex, theta: &[f64]) -> Vec<f64> {
    let behavioral: Vec<Vec<f64>> = t
        .simplexes()
        .iter()
        .map(|s| {
            let m = s
                .vars
                .iter()
                .map(|&i| theta[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = s.vars.iter().map(|&i| (theta[i] - m).exp()).collect();
            let z: f64 = e.iter().sum();
            e.into_iter().map(|v| v / z).collect()
        })
        .collect();
    t.sequence_from_behavioral(&behavioral)
}

/// Chain rule from `∂F/∂u` to the logits.
fn logit_gradient(t: &Treeplex, theta: &[f64], u: &[f64], du: &[f64]) -> Vec<f64> {
    let n = t.num_simplexes();
    let mut total = du.to_vec();
    let mut local = vec![0.0; u.len()];
    for s in t.simplexes() {
        let m = s
            .vars
            .iter()
            .map(|&i| theta[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = s.vars.iter().map(|&i| (theta[i] - m).exp()).sum();
        for &i in &s.vars {
            local[i] = (theta[i] - m).exp() / z;
        }
    }
    for j in (0..n).rev() {
        let s = t.simplex(j);
        if let Some(pv) = s.parent {
            let add: f64 = s.vars.iter().map(|&i| local[i] * total[i]).sum();
            total[pv] += add;
        }
    }
    let mut g = vec![0.0; u.len()];
    for s in t.simplexes() {
        let p = t.parent_value(s.id, u);
        let mean: f64 = s.vars.iter().map(|&i| local[i] * total[i]).sum();
        for &i in &s.vars {
            g[i] = p * local[i] * (total[i] - mean);
        }
    }
    g
}

/// Random treeplex with at most `max_depth` branching levels and at most
/// `max_vars` variables; simplex sizes 1..=3, roots 1..=2.
pub fn random_treeplex<R: Rng>(rng: &mut R, max_depth: usize, max_vars: usize) -> Treeplex {
    let mut b = TreeplexBuilder::new();
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    let roots = rng.gen_range(1..=2);
    for _ in 0..roots {
        let size = rng
            .gen_range(1..=3)
            .min(max_vars - b.num_variables())
            .max(1);
        if b.num_variables() + size > max_vars {
            break;
        }
        frontier.push((b.add_simplex(None, size), 0));
    }
    while let Some((j, depth)) = frontier.pop() {
        if depth >= max_depth {
            continue;
        }
        let vars = b.vars(j).to_vec();
        for v in vars {
            let children = rng.gen_range(0..=2);
            for _ in 0..children {
                let size = rng.gen_range(1..=3);
                if b.num_variables() + size > max_vars {
                    continue;
                }
                frontier.insert(0, (b.add_simplex(Some(v), size), depth + 1));
            }
        }
    }
    b.build().expect("generated treeplex is valid")
}

/// Strictly interior point from random behavioral distributions bounded away from 0.
pub fn random_interior<R: Rng>(rng: &mut R, t: &Treeplex) -> Vec<f64> {
    let behavioral: Vec<Vec<f64>> = t
        .simplexes()
        .iter()
        .map(|s| {
            let w: Vec<f64> = (0..s.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|v| v / z).collect()
        })
        .collect();
    t.sequence_from_behavioral(&behavioral)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Exact equilibrium of a small matrix game (`x` minimizes `xᵀAy`, `y` maximizes).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEquilibrium {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
}

/// Support enumeration over square supports. Supports are tried by size,
/// then lexicographically (rows before columns); the first pair passing the
/// optimality checks is returned, which fixes the choice under ties.
pub fn lp_equilibrium(a: &[Vec<f64>]) -> Result<MatrixEquilibrium, OracleError> {
    const LIMIT: usize = 6;
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows > LIMIT || cols > LIMIT {
        return Err(OracleError::TooLarge {
            dim: rows.max(cols),
            limit: LIMIT,
        });
    }
    let tol = 1e-12;
    for k in 1..=rows.min(cols) {
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                // y_J, v from  A_{I,J} y_J = v 1,  1ᵀ y_J = 1.
                let sub: Vec<Vec<f64>> = rs
                    .iter()
                    .map(|&i| cs.iter().map(|&j| a[i][j]).collect())
                    .collect();
                let Some((yj, v)) = bordered_solve(&sub) else {
                    continue;
                };
                let subt: Vec<Vec<f64>> = (0..k)
                    .map(|c| (0..k).map(|r| sub[r][c]).collect())
                    .collect();
                let Some((xi, w)) = bordered_solve(&subt) else {
                    continue;
                };
                if yj.iter().chain(&xi).any(|&p| p < -tol) || (v - w).abs() > 1e-9 {
                    continue;
                }
                let mut x = vec![0.0; rows];
                let mut y = vec![0.0; cols];
                for (pos, &i) in rs.iter().enumerate() {
                    x[i] = xi[pos].max(0.0);
                }
                for (pos, &j) in cs.iter().enumerate() {
                    y[j] = yj[pos].max(0.0);
                }
                let ay_min = (0..rows)
                    .map(|i| (0..cols).map(|j| a[i][j] * y[j]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                let xa_max = (0..cols)
                    .map(|j| (0..rows).map(|i| x[i] * a[i][j]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                if ay_min >= v - 1e-11 && xa_max <= v + 1e-11 {
                    return Ok(MatrixEquilibrium { x, y, value: v });
                }
            }
        }
    }
    Err(OracleError::NoEquilibrium)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Solves `[M -1; 1ᵀ 0] [p; v] = [0; 1]` by Gaussian elimination with partial pivoting.
fn bordered_solve(m: &[Vec<f64>]) -> Option<(Vec<f64>, f64)> {
    let k = m.len();
    let n = k + 1;
    let mut aug: Vec<Vec<f64>> = Vec::with_capacity(n);
    for row in m {
        let mut r = row.clone();
        r.push(-1.0);
        r.push(0.0);
        aug.push(r);
    }
    let mut last = vec![1.0; k];
    last.push(0.0);
    last.push(1.0);
    aug.push(last);
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))?;
        if aug[piv][col].abs() < 1e-13 {
            return None;
        }
        aug.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = aug[r][col] / aug[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    let sol: Vec<f64> = (0..n).map(|r| aug[r][n] / aug[r][r]).collect();
    Some((sol[..k].to_vec(), sol[k]))
}
