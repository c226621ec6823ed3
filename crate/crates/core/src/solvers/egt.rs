//! Excessive gap technique on the smoothed sequence-form saddle-point problem.
//!
//! Both players use the normalized prox function `d(u) = ω(u) - ω(u_ω)`.
//! Even iterations take the `x` step, odd iterations the mirrored `y` step,
//! each with `τ = 2 / (t + 3)`. The products `Aᵀx` and `A y` of the current
//! iterates are cached and updated by linearity, so every step costs exactly
//! three matrix-vector products.

use std::sync::Arc;

use super::{IterativeSolver, SolverError};
use crate::dgf::DgfContext;
use crate::efg::{dot, SequenceFormProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct EgtState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mu1: f64,
    pub mu2: f64,
    pub t: u64,
}

/// Smoothed values `φ̄_{μ2}(x)` (upper) and `φ̲_{μ1}(y)` (lower).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessiveGap {
    pub upper: f64,
    pub lower: f64,
}

impl ExcessiveGap {
    /// `upper ≤ lower` up to `rel_tol` relative to the magnitudes involved.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.upper <= self.lower + rel_tol * self.upper.abs().max(self.lower.abs()).max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct EgtSolver {
    problem: Arc<SequenceFormProblem>,
    ctx_x: DgfContext,
    ctx_y: DgfContext,
    state: EgtState,
    /// `Aᵀ x` for the current `x`.
    ax: Vec<f64>,
    /// `A y` for the current `y`.
    ay: Vec<f64>,
    traversals: u64,
}

/// Initial smoothing: `μ1 μ2 = (mu_scale·‖A‖)² / (φ_X φ_Y)` split as `μ1 / μ2 = mu_ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgtParams {
    pub mu_scale: f64,
    pub mu_ratio: f64,
}

impl Default for EgtParams {
    fn default() -> Self {
        Self {
            mu_scale: 1.0,
            mu_ratio: 1.0,
        }
    }
}

impl EgtParams {
    pub fn new(mu_scale: f64) -> Self {
        Self {
            mu_scale,
            ..Self::default()
        }
    }

    /// Split with `μ1 / μ2 = Ω_Y / Ω_X`, the one under which the anytime
    /// bound holds; falls back to 1 when either width is zero.
    pub fn balanced(mu_scale: f64, ctx_x: &DgfContext, ctx_y: &DgfContext) -> Self {
        let (wx, wy) = (ctx_x.width(), ctx_y.width());
        let mu_ratio = if wx > 0.0 && wy > 0.0 { wy / wx } else { 1.0 };
        Self { mu_scale, mu_ratio }
    }

    /// `(μ1, μ2)`; with the defaults `μ1 = μ2 = ‖A‖ / √(φ_X φ_Y)`.
    pub fn initial_mu(
        &self,
        problem: &SequenceFormProblem,
        ctx_x: &DgfContext,
        ctx_y: &DgfContext,
    ) -> (f64, f64) {
        let norm = problem.a_norm();
        let base = if norm > 0.0 {
            norm / (ctx_x.modulus() * ctx_y.modulus()).sqrt()
        } else {
            1.0
        };
        let r = self.mu_ratio.sqrt();
        (self.mu_scale * base * r, self.mu_scale * base / r)
    }

    fn validate(&self) -> Result<(), SolverError> {
        for v in [self.mu_scale, self.mu_ratio] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::MuScale(v));
            }
        }
        Ok(())
    }
}

impl EgtSolver {
    pub fn new(
        problem: Arc<SequenceFormProblem>,
        ctx_x: DgfContext,
        ctx_y: DgfContext,
        params: EgtParams,
    ) -> Result<Self, SolverError> {
        params.validate()?;
        check_dims(&problem, &ctx_x, &ctx_y)?;
        let (mu1, mu2) = params.initial_mu(&problem, &ctx_x, &ctx_y);
        let mut traversals = 0;
        let xw = ctx_x.omega_center().to_vec();

        let ax_w = matvec_t(&problem, &xw, &mut traversals);
        let y = ctx_y
            .smoothed_argmax_unchecked(&scaled_sum(&ax_w, &problem.a2, 1.0 / mu2))
            .point;
        let ay = matvec(&problem, &y, &mut traversals);
        // Prox centered at x_ω, whose dual point is 0: x⁰ = Prox_{x_ω}(∇φ̄(x_ω) / μ1).
        let grad = scaled_sum(&ay, &problem.a1, -1.0 / mu1);
        let x = ctx_x.smoothed_argmax_unchecked(&grad).point;
        let ax = matvec_t(&problem, &x, &mut traversals);

        let solver = Self {
            problem,
            ctx_x,
            ctx_y,
            state: EgtState {
                x,
                y,
                mu1,
                mu2,
                t: 0,
            },
            ax,
            ay,
            traversals,
        };
        solver.check_finite("initialization")?;
        Ok(solver)
    }

    pub fn state(&self) -> &EgtState {
        &self.state
    }

    pub fn problem(&self) -> &SequenceFormProblem {
        &self.problem
    }

    pub fn contexts(&self) -> (&DgfContext, &DgfContext) {
        (&self.ctx_x, &self.ctx_y)
    }

    /// Evaluates both smoothed functions at the current iterate (no traversals counted).
    pub fn excessive_gap(&self) -> ExcessiveGap {
        let p = &*self.problem;
        let EgtState { x, y, mu1, mu2, .. } = &self.state;
        let gy = scaled_sum(&self.ax, &p.a2, 1.0 / mu2);
        let upper = p.offset
            + dot(&p.a1, x)
            + mu2 * self.ctx_y.smoothed_argmax_unchecked(&gy).value
            + mu2 * self.ctx_y.omega_min();
        let gx = scaled_sum(&self.ay, &p.a1, -1.0 / mu1);
        let lower = p.offset + dot(&p.a2, y)
            - mu1 * self.ctx_x.smoothed_argmax_unchecked(&gx).value
            - mu1 * self.ctx_x.omega_min();
        ExcessiveGap { upper, lower }
    }

    /// `μ1 Ω_X + μ2 Ω_Y`, which bounds the saddle residual whenever the
    /// excessive gap condition holds.
    pub fn gap_bound(&self) -> f64 {
        self.state.mu1 * self.ctx_x.width() + self.state.mu2 * self.ctx_y.width()
    }

    /// `4‖A‖/(t+1) · √(Ω_X Ω_Y / (φ_X φ_Y))` for the current `t`. Valid for the
    /// [`EgtParams::balanced`] split with `mu_scale = 1`; equal widths make
    /// the default split balanced.
    pub fn anytime_bound(&self) -> f64 {
        let (cx, cy) = (&self.ctx_x, &self.ctx_y);
        4.0 * self.problem.a_norm() / (self.state.t as f64 + 1.0)
            * (cx.width() * cy.width() / (cx.modulus() * cy.modulus())).sqrt()
    }

    fn step_x(&mut self, tau: f64) {
        let p = Arc::clone(&self.problem);
        let mu1 = self.state.mu1;
        let mu2 = self.state.mu2;
        let dual = scaled_sum(&self.ay, &p.a1, -1.0 / mu1);
        let xs = self.ctx_x.smoothed_argmax_unchecked(&dual).point;
        let x_hat = mix(&self.state.x, &xs, tau);
        let ax_hat = matvec_t(&p, &x_hat, &mut self.traversals);
        let ys = self
            .ctx_y
            .smoothed_argmax_unchecked(&scaled_sum(&ax_hat, &p.a2, 1.0 / mu2))
            .point;
        let ay_s = matvec(&p, &ys, &mut self.traversals);
        mix_into(&mut self.state.y, &ys, tau);
        mix_into(&mut self.ay, &ay_s, tau);

        let step = tau / ((1.0 - tau) * mu1);
        let prox_in: Vec<f64> = dual
            .iter()
            .zip(&ay_s)
            .zip(&p.a1)
            .map(|((d, g), a)| d - step * (g + a))
            .collect();
        let x_tilde = self.ctx_x.smoothed_argmax_unchecked(&prox_in).point;
        let ax_tilde = matvec_t(&p, &x_tilde, &mut self.traversals);
        mix_into(&mut self.state.x, &x_tilde, tau);
        mix_into(&mut self.ax, &ax_tilde, tau);
        self.state.mu1 = (1.0 - tau) * mu1;
    }

    fn step_y(&mut self, tau: f64) {
        let p = Arc::clone(&self.problem);
        let mu1 = self.state.mu1;
        let mu2 = self.state.mu2;
        let dual = scaled_sum(&self.ax, &p.a2, 1.0 / mu2);
        let ys = self.ctx_y.smoothed_argmax_unchecked(&dual).point;
        let y_hat = mix(&self.state.y, &ys, tau);
        let ay_hat = matvec(&p, &y_hat, &mut self.traversals);
        let xs = self
            .ctx_x
            .smoothed_argmax_unchecked(&scaled_sum(&ay_hat, &p.a1, -1.0 / mu1))
            .point;
        let ax_s = matvec_t(&p, &xs, &mut self.traversals);
        mix_into(&mut self.state.x, &xs, tau);
        mix_into(&mut self.ax, &ax_s, tau);

        let step = tau / ((1.0 - tau) * mu2);
        let prox_in: Vec<f64> = dual
            .iter()
            .zip(&ax_s)
            .zip(&p.a2)
            .map(|((d, g), a)| d + step * (g + a))
            .collect();
        let y_tilde = self.ctx_y.smoothed_argmax_unchecked(&prox_in).point;
        let ay_tilde = matvec(&p, &y_tilde, &mut self.traversals);
        mix_into(&mut self.state.y, &y_tilde, tau);
        mix_into(&mut self.ay, &ay_tilde, tau);
        self.state.mu2 = (1.0 - tau) * mu2;
    }

    fn check_finite(&self, what: &str) -> Result<(), SolverError> {
        let s = &self.state;
        let ok = s.mu1.is_finite()
            && s.mu2.is_finite()
            && s.mu1 > 0.0
            && s.mu2 > 0.0
            && s.x
                .iter()
                .chain(&s.y)
                .chain(&self.ax)
                .chain(&self.ay)
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SolverError::NonFinite {
                iteration: s.t,
                context: what.to_string(),
            })
        }
    }
}

impl IterativeSolver for EgtSolver {
    fn step(&mut self) -> Result<(), SolverError> {
        let t = self.state.t;
        let tau = 2.0 / (t as f64 + 3.0);
        if t % 2 == 0 {
            self.step_x(tau);
        } else {
            self.step_y(tau);
        }
        self.state.t += 1;
        self.check_finite(if t % 2 == 0 { "x step" } else { "y step" })
    }

    fn iteration(&self) -> u64 {
        self.state.t
    }

    fn traversals(&self) -> u64 {
        self.traversals
    }

    fn strategies(&self) -> (Vec<f64>, Vec<f64>) {
        (self.state.x.clone(), self.state.y.clone())
    }

    fn smoothing(&self) -> Option<(f64, f64)> {
        Some((self.state.mu1, self.state.mu2))
    }
}

fn check_dims(
    p: &SequenceFormProblem,
    cx: &DgfContext,
    cy: &DgfContext,
) -> Result<(), SolverError> {
    if cx.treeplex() != &p.x_plex || cy.treeplex() != &p.y_plex {
        return Err(SolverError::Mismatch(
            "prox contexts do not match the problem's treeplexes".into(),
        ));
    }
    Ok(())
}

fn matvec(p: &SequenceFormProblem, y: &[f64], count: &mut u64) -> Vec<f64> {
    *count += 1;
    p.a.mul_vec(y)
}

fn matvec_t(p: &SequenceFormProblem, x: &[f64], count: &mut u64) -> Vec<f64> {
    *count += 1;
    p.a.mul_t_vec(x)
}

/// `(a + b) * s`.
fn scaled_sum(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| (u + v) * s).collect()
}

/// `(1 - τ) a + τ b`.
fn mix(a: &[f64], b: &[f64], tau: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(u, v)| (1.0 - tau) * u + tau * v)
        .collect()
}

fn mix_into(a: &mut [f64], b: &[f64], tau: f64) {
    for (u, v) in a.iter_mut().zip(b) {
        *u = (1.0 - tau) * *u + tau * v;
    }
}
