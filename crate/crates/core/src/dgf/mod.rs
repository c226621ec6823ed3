//! Dilated entropy distance-generating function over a treeplex.
//!
//! `ω(q) = Σ_j β_j Σ_{i∈I_j} q_i log(q_i / q_{p_j})`, with `q_{p_j} = 1` at the
//! roots and `0·log 0 = 0`. It is nonpositive and vanishes at every vertex.

pub mod weights;

use thiserror::Error;

pub use weights::{
    fact2_violations, implied_alpha, recurrence_certificate, satisfies_recurrence,
    weights_corollary, weights_old, weights_practical_new, weights_recurrence, DgfWeights,
    Fact2Violation, WeightScheme,
};

use crate::treeplex::{Treeplex, TreeplexError, TreeplexStats};

/// Smallest entry produced by the smoothed argmax; logs never see anything smaller.
pub const MIN_ENTRY: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DgfError {
    #[error("recurrence multiplier must be > 1, got {0}")]
    Multiplier(f64),
    #[error("unknown weight scheme `{0}`")]
    Scheme(String),
    #[error("weight scale must be positive and finite, got {0}")]
    Scale(f64),
    #[error("weights cover {found} simplexes, treeplex has {expected}")]
    WeightShape { expected: usize, found: usize },
    #[error("point must be strictly interior: entry {var} is {value}")]
    NotInterior { var: usize, value: f64 },
    #[error("negative entry {value} at variable {var}")]
    NegativeEntry { var: usize, value: f64 },
    #[error("non-finite input at variable {var}")]
    NonFinite { var: usize },
    #[error(transparent)]
    Treeplex(#[from] TreeplexError),
}

/// Maximizer and optimal value of `<g, u> - ω(u)` over the treeplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedResponse {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Set width estimate and the closed-form bound for scaled corollary weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetWidth {
    /// `max ω` over sampled vertices minus `ω(x_ω)`.
    pub empirical: f64,
    /// `M_Q² · 2^{d_Q+2} · log m`.
    pub bound: f64,
}

/// A treeplex together with dilated entropy weights and its ω-center.
#[derive(Debug, Clone)]
pub struct DgfContext {
    treeplex: Treeplex,
    weights: DgfWeights,
    stats: TreeplexStats,
    center: Vec<f64>,
    center_value: f64,
}

impl DgfContext {
    pub fn new(treeplex: Treeplex, weights: DgfWeights) -> Result<Self, DgfError> {
        let stats = treeplex.compute_stats();
        Self::with_stats(treeplex, weights, stats)
    }

    pub fn with_scheme(
        treeplex: Treeplex,
        scheme: WeightScheme,
        scale: f64,
    ) -> Result<Self, DgfError> {
        let stats = treeplex.compute_stats();
        let weights = DgfWeights::build(scheme, &treeplex, &stats)?.scaled(scale)?;
        Self::with_stats(treeplex, weights, stats)
    }

    fn with_stats(
        treeplex: Treeplex,
        weights: DgfWeights,
        stats: TreeplexStats,
    ) -> Result<Self, DgfError> {
        if weights.beta.len() != treeplex.num_simplexes() {
            return Err(DgfError::WeightShape {
                expected: treeplex.num_simplexes(),
                found: weights.beta.len(),
            });
        }
        let mut ctx = Self {
            treeplex,
            weights,
            stats,
            center: Vec::new(),
            center_value: 0.0,
        };
        let zero = vec![0.0; ctx.treeplex.num_variables()];
        let r = ctx.smoothed_argmax_unchecked(&zero);
        ctx.center = r.point;
        ctx.center_value = -r.value;
        Ok(ctx)
    }

    pub fn treeplex(&self) -> &Treeplex {
        &self.treeplex
    }

    pub fn weights(&self) -> &DgfWeights {
        &self.weights
    }

    pub fn stats(&self) -> &TreeplexStats {
        &self.stats
    }

    pub fn dim(&self) -> usize {
        self.treeplex.num_variables()
    }

    /// The minimizer `x_ω` of ω.
    pub fn omega_center(&self) -> &[f64] {
        &self.center
    }

    /// `ω(x_ω)`.
    pub fn omega_min(&self) -> f64 {
        self.center_value
    }

    /// `max ω - min ω = -ω(x_ω)`, the width of the normalized prox function.
    pub fn width(&self) -> f64 {
        -self.center_value
    }

    /// Claimed l1 strong-convexity modulus.
    pub fn modulus(&self) -> f64 {
        self.weights.ell1_modulus
    }

    pub fn omega_value(&self, q: &[f64]) -> Result<f64, DgfError> {
        self.treeplex.check_dim(q)?;
        if let Some((var, &value)) = q.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(DgfError::NegativeEntry { var, value });
        }
        let mut total = 0.0;
        for s in self.treeplex.simplexes() {
            let parent = self.treeplex.parent_value(s.id, q);
            let inner: f64 = s.vars.iter().map(|&i| xlogy_ratio(q[i], parent)).sum();
            total += self.weights.beta[s.id] * inner;
        }
        Ok(total)
    }

    /// `∇ω(q)_i = β_j (log(q_i / q_{p_j}) + 1) - Σ_{k∈D_j^i} β_k`.
    pub fn omega_gradient(&self, q: &[f64]) -> Result<Vec<f64>, DgfError> {
        self.check_interior(q)?;
        Ok(self.gradient_clamped(q))
    }

    fn gradient_clamped(&self, q: &[f64]) -> Vec<f64> {
        let beta = &self.weights.beta;
        let mut g = vec![0.0; q.len()];
        for s in self.treeplex.simplexes() {
            let parent = self.treeplex.parent_value(s.id, q).max(MIN_ENTRY);
            for (i, children) in s.branches() {
                let child_sum: f64 = children.iter().map(|&k| beta[k]).sum();
                g[i] = beta[s.id] * ((q[i].max(MIN_ENTRY) / parent).ln() + 1.0) - child_sum;
            }
        }
        g
    }

    /// `hᵀ ∇²ω(q) h = Σ_j β_j [Σ_i (h_i²/q_i - 2 h_i h_p / q_p) + h_p²/q_p]`
    /// with `h_p = 0`, `q_p = 1` at the roots.
    pub fn hessian_quadratic_form(&self, q: &[f64], h: &[f64]) -> Result<f64, DgfError> {
        self.check_interior(q)?;
        self.treeplex.check_dim(h)?;
        let mut total = 0.0;
        for s in self.treeplex.simplexes() {
            let (hp, qp) = match s.parent {
                Some(p) => (h[p], q[p]),
                None => (0.0, 1.0),
            };
            let mut inner = 0.0;
            for &i in &s.vars {
                inner += h[i] * h[i] / q[i] - 2.0 * h[i] * hp / qp;
            }
            total += self.weights.beta[s.id] * (inner + hp * hp / qp);
        }
        Ok(total)
    }

    /// Maximizes `<g, u> - ω(u)` by one bottom-up and one top-down pass.
    pub fn smoothed_argmax(&self, g: &[f64]) -> Result<SmoothedResponse, DgfError> {
        self.treeplex.check_dim(g)?;
        if let Some(var) = g.iter().position(|v| !v.is_finite()) {
            return Err(DgfError::NonFinite { var });
        }
        Ok(self.smoothed_argmax_unchecked(g))
    }

    pub(crate) fn smoothed_argmax_unchecked(&self, g: &[f64]) -> SmoothedResponse {
        let t = &self.treeplex;
        let beta = &self.weights.beta;
        let n = t.num_simplexes();
        let mut val = vec![0.0; n];
        let mut local = vec![0.0; g.len()];
        for j in (0..n).rev() {
            let s = t.simplex(j);
            let b = beta[j];
            let mut top = f64::NEG_INFINITY;
            for (i, children) in s.branches() {
                let adj = g[i] + children.iter().map(|&k| val[k]).sum::<f64>();
                local[i] = adj;
                top = top.max(adj);
            }
            let mut z = 0.0;
            for &i in &s.vars {
                let e = ((local[i] - top) / b).exp();
                local[i] = e;
                z += e;
            }
            for &i in &s.vars {
                local[i] /= z;
            }
            val[j] = top + b * z.ln();
        }
        let mut point = vec![0.0; g.len()];
        for s in t.simplexes() {
            let parent = t.parent_value(s.id, &point);
            for &i in &s.vars {
                point[i] = (parent * local[i]).max(MIN_ENTRY);
            }
        }
        SmoothedResponse {
            point,
            value: t.roots().iter().map(|&j| val[j]).sum(),
        }
    }

    /// `argmin_u <ξ, u> + V(u ‖ x)` where `V` is the Bregman divergence of ω.
    pub fn prox_map(&self, center: &[f64], xi: &[f64]) -> Result<Vec<f64>, DgfError> {
        self.check_interior(center)?;
        self.treeplex.check_dim(xi)?;
        let mut g = self.gradient_clamped(center);
        for (gi, x) in g.iter_mut().zip(xi) {
            *gi -= x;
        }
        Ok(self.smoothed_argmax(&g)?.point)
    }

    /// Empirical width over up to `samples` vertices, and the analytic bound.
    pub fn set_width_bound(&self, samples: usize) -> SetWidth {
        let t = &self.treeplex;
        let mut max_omega = f64::NEG_INFINITY;
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        for _ in 0..samples.max(1) {
            let behavioral: Vec<Vec<f64>> = t
                .simplexes()
                .iter()
                .map(|s| {
                    state = crate::efg::game::splitmix64(state);
                    let pick = (state % s.len() as u64) as usize;
                    (0..s.len())
                        .map(|a| if a == pick { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect();
            let v = t.sequence_from_behavioral(&behavioral);
            let w = self.omega_value(&v).expect("vertices are nonnegative");
            max_omega = max_omega.max(w);
        }
        let s = &self.stats;
        let bound =
            s.max_l1 * s.max_l1 * 2f64.powi(s.depth as i32 + 2) * (s.largest_simplex as f64).ln();
        SetWidth {
            empirical: max_omega - self.center_value,
            bound,
        }
    }

    fn check_interior(&self, q: &[f64]) -> Result<(), DgfError> {
        self.treeplex.check_dim(q)?;
        match q.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            Some((var, &value)) => Err(DgfError::NotInterior { var, value }),
            None => Ok(()),
        }
    }
}

fn xlogy_ratio(x: f64, parent: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / parent).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeplex::shapes::{nine_simplex_example, simplex};

    fn unit(t: Treeplex) -> DgfContext {
        let n = t.num_simplexes();
        let w = DgfWeights {
            scheme: WeightScheme::PracticalNew,
            alpha: vec![1.0; n],
            beta: vec![1.0; n],
            ell1_modulus: 1.0,
            certificate: 1.0,
            scale: 1.0,
        };
        DgfContext::new(t, w).unwrap()
    }

    #[test]
    fn entropy_of_uniform() {
        let ctx = unit(simplex(4));
        assert!((ctx.omega_value(&[0.25; 4]).unwrap() + 4f64.ln()).abs() < 1e-15);
        assert_eq!(ctx.omega_value(&[0.0, 1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(ctx.omega_value(&[-0.1, 1.1, 0.0, 0.0]).is_err());
        for v in ctx.omega_center() {
            assert!((v - 0.25).abs() < 1e-15);
        }
        assert!((ctx.width() - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn gradient_on_two_simplex() {
        let ctx = unit(simplex(2));
        let g = ctx.omega_gradient(&[0.5, 0.5]).unwrap();
        assert!(g.iter().all(|v| (v - (0.5f64.ln() + 1.0)).abs() < 1e-15));
        assert!(matches!(
            ctx.omega_gradient(&[0.0, 1.0]),
            Err(DgfError::NotInterior { var: 0, .. })
        ));
    }

    #[test]
    fn gradient_subtracts_child_weights() {
        let t = nine_simplex_example();
        let s = t.compute_stats();
        let w = weights_recurrence(&t, &s, 2.0).unwrap();
        let ctx = DgfContext::new(t.clone(), w.clone()).unwrap();
        let q = t.uniform_strategy();
        let g = ctx.omega_gradient(&q).unwrap();
        // Variable q_7 (index 6) branches into simplexes 8 and 9 (ids 7, 8).
        let expected = w.beta[2] * ((q[6] / q[0]).ln() + 1.0) - (w.beta[7] + w.beta[8]);
        assert!((g[6] - expected).abs() < 1e-12);
    }

    #[test]
    fn hessian_form_on_simplex() {
        let ctx = unit(simplex(2));
        assert_eq!(
            ctx.hessian_quadratic_form(&[0.5, 0.5], &[1.0, -1.0])
                .unwrap(),
            4.0
        );
    }

    #[test]
    fn smoothed_argmax_closed_forms() {
        let ctx = unit(simplex(3));
        let r = ctx.smoothed_argmax(&[0.0; 3]).unwrap();
        assert!((r.value - 3f64.ln()).abs() < 1e-15);
        let r = ctx.smoothed_argmax(&[50.0, 0.0, 0.0]).unwrap();
        assert!(r.point[0] > 1.0 - 1e-15);
        assert!((r.value - 50.0).abs() < 1e-12);
        let r = ctx.smoothed_argmax(&[1e6, -1e6, 0.0]).unwrap();
        assert!(r.point.iter().all(|v| v.is_finite()) && r.value.is_finite());
        assert!(ctx.smoothed_argmax(&[f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn prox_is_multiplicative_weights_on_simplex() {
        let ctx = unit(simplex(3));
        let x = [0.2, 0.3, 0.5];
        let xi = [0.4, -1.0, 2.0];
        let u = ctx.prox_map(&x, &xi).unwrap();
        let w: Vec<f64> = x
            .iter()
            .zip(&xi)
            .map(|(a, b)| a * (-b as f64).exp())
            .collect();
        let z: f64 = w.iter().sum();
        for (ui, wi) in u.iter().zip(&w) {
            assert!((ui - wi / z).abs() < 1e-14);
        }
        let same = ctx.prox_map(&x, &[0.0; 3]).unwrap();
        for (a, b) in same.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(ctx.prox_map(&[0.0, 0.5, 0.5], &xi).is_err());
    }

    #[test]
    fn width_on_single_simplex_with_scaled_weights() {
        let ctx = DgfContext::with_scheme(simplex(5), WeightScheme::CorollaryScaled, 1.0).unwrap();
        let w = ctx.set_width_bound(10);
        assert!((w.empirical - 2.0 * 5f64.ln()).abs() < 1e-12);
        assert!((w.bound - 4.0 * 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn center_satisfies_first_order_conditions() {
        let t = nine_simplex_example();
        let ctx =
            DgfContext::with_scheme(t.clone(), WeightScheme::Recurrence { multiplier: 2.0 }, 1.0)
                .unwrap();
        let x = ctx.omega_center().to_vec();
        assert!(t.constraint_residual(&x) < 1e-12);
        // KKT: ∇ω_i = λ_j - Σ_{k∈D_j^i} λ_k for multipliers λ of the simplex constraints.
        let g = ctx.omega_gradient(&x).unwrap();
        let mut lambda = vec![0.0; t.num_simplexes()];
        for j in (0..t.num_simplexes()).rev() {
            let s = t.simplex(j);
            let per_branch: Vec<f64> = s
                .branches()
                .map(|(i, ch)| g[i] + ch.iter().map(|&k| lambda[k]).sum::<f64>())
                .collect();
            for v in &per_branch {
                assert!(
                    (v - per_branch[0]).abs() < 1e-8,
                    "simplex {j}: {per_branch:?}"
                );
            }
            lambda[j] = per_branch[0];
        }
    }
}
