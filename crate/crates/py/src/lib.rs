//! Python bindings: treeplexes, sequence-form problems, dilated entropy
//! contexts, and the EGT / CFR solvers.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dilated_egt::dgf::{DgfContext, WeightScheme};
use dilated_egt::efg::{self, Player, SequenceFormProblem};
use dilated_egt::harness::{self, RunConfig};
use dilated_egt::solvers::{CfrSolver, EgtParams, EgtSolver, IterativeSolver};
use dilated_egt::treeplex;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn player(p: u8) -> PyResult<Player> {
    match p {
        1 => Ok(Player::One),
        2 => Ok(Player::Two),
        _ => Err(PyValueError::new_err("player must be 1 or 2")),
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Treeplex {
    inner: treeplex::Treeplex,
}

#[pymethods]
impl Treeplex {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: treeplex::Treeplex::from_text(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn simplex(m: usize) -> Self {
        Self {
            inner: treeplex::shapes::simplex(m),
        }
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn num_variables(&self) -> usize {
        self.inner.num_variables()
    }

    #[getter]
    fn num_simplexes(&self) -> usize {
        self.inner.num_simplexes()
    }

    /// `max_l1`, `max_l1_truncated`, `depth`, `largest_simplex`.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.compute_stats();
        let d = PyDict::new(py);
        d.set_item("max_l1", s.max_l1)?;
        d.set_item("max_l1_truncated", s.max_l1_truncated)?;
        d.set_item("depth", s.depth)?;
        d.set_item("largest_simplex", s.largest_simplex)?;
        Ok(d)
    }

    #[pyo3(signature = (limit = treeplex::DEFAULT_VERTEX_LIMIT))]
    fn enumerate_vertices(&self, limit: usize) -> PyResult<Vec<Vec<f64>>> {
        self.inner.enumerate_vertices(limit).map_err(err)
    }

    fn uniform_strategy(&self) -> Vec<f64> {
        self.inner.uniform_strategy()
    }

    #[pyo3(signature = (q, tol = 1e-9))]
    fn is_member(&self, q: Vec<f64>, tol: f64) -> bool {
        self.inner.check_member(&q, tol).is_ok()
    }
}

/// Sequence-form saddle-point problem of a two-player zero-sum game.
#[pyclass(frozen)]
struct Problem {
    inner: Arc<SequenceFormProblem>,
}

#[pymethods]
impl Problem {
    #[staticmethod]
    fn leduc(cards: usize) -> PyResult<Self> {
        let g = efg::build_leduc(&efg::LeducConfig::new(cards)).map_err(err)?;
        Ok(Self {
            inner: Arc::new(efg::to_sequence_form(&g).map_err(err)?),
        })
    }

    /// Matrix game; entries are payoffs to the column (maximizing) player.
    #[staticmethod]
    fn matrix(payoffs: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(SequenceFormProblem::from_matrix(&payoffs).map_err(err)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (k, d, seed = 0))]
    fn alternating(k: usize, d: usize, seed: u64) -> PyResult<Self> {
        let g = efg::build_alternating_game(k, d, seed).map_err(err)?;
        Ok(Self {
            inner: Arc::new(efg::to_sequence_form(&g).map_err(err)?),
        })
    }

    fn treeplex(&self, player_id: u8) -> PyResult<Treeplex> {
        Ok(Treeplex {
            inner: self.inner.plex(player(player_id)?).clone(),
        })
    }

    #[getter]
    fn a_norm(&self) -> f64 {
        self.inner.a_norm()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.a.rows(), self.inner.a.cols())
    }

    /// Nonzeros of the payoff matrix as `(row, col, value)`.
    fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.inner.a.triplets().collect()
    }

    fn objective(&self, x: Vec<f64>, y: Vec<f64>) -> f64 {
        self.inner.objective(&x, &y)
    }

    /// Best-response value and vertex of `responder` against `strategy`.
    fn best_response(&self, responder: u8, strategy: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        let br =
            efg::best_response_value(&self.inner, player(responder)?, &strategy).map_err(err)?;
        Ok((br.value, br.vertex))
    }

    fn saddle_residual(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        efg::saddle_residual(&self.inner, &x, &y).map_err(err)
    }
}

/// Dilated entropy over a treeplex with a named weight scheme.
#[pyclass(frozen)]
struct Dgf {
    inner: DgfContext,
}

#[pymethods]
impl Dgf {
    #[new]
    #[pyo3(signature = (treeplex, weights = "recurrence:2", scale = 1.0))]
    fn new(treeplex: &Treeplex, weights: &str, scale: f64) -> PyResult<Self> {
        let scheme: WeightScheme = weights.parse().map_err(err)?;
        Ok(Self {
            inner: DgfContext::with_scheme(treeplex.inner.clone(), scheme, scale).map_err(err)?,
        })
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.weights().alpha.clone()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.weights().beta.clone()
    }

    #[getter]
    fn modulus(&self) -> f64 {
        self.inner.modulus()
    }

    #[getter]
    fn center(&self) -> Vec<f64> {
        self.inner.omega_center().to_vec()
    }

    #[getter]
    fn width(&self) -> f64 {
        self.inner.width()
    }

    fn value(&self, q: Vec<f64>) -> PyResult<f64> {
        self.inner.omega_value(&q).map_err(err)
    }

    fn gradient(&self, q: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.omega_gradient(&q).map_err(err)
    }

    fn hessian_form(&self, q: Vec<f64>, h: Vec<f64>) -> PyResult<f64> {
        self.inner.hessian_quadratic_form(&q, &h).map_err(err)
    }

    /// `(argmax, max)` of `<g, u> - ω(u)`.
    fn smoothed_argmax(&self, g: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
        let r = self.inner.smoothed_argmax(&g).map_err(err)?;
        Ok((r.point, r.value))
    }

    fn prox(&self, center: Vec<f64>, xi: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.prox_map(&center, &xi).map_err(err)
    }

    fn weights_csv(&self) -> String {
        self.inner.weights().to_csv()
    }
}

enum AnySolver {
    Egt(EgtSolver),
    Cfr(CfrSolver),
}

impl AnySolver {
    fn as_dyn(&mut self) -> &mut dyn IterativeSolver {
        match self {
            AnySolver::Egt(s) => s,
            AnySolver::Cfr(s) => s,
        }
    }

    fn as_ref(&self) -> &dyn IterativeSolver {
        match self {
            AnySolver::Egt(s) => s,
            AnySolver::Cfr(s) => s,
        }
    }
}

/// Stepwise solver: `egt`, `cfr`, or `cfrplus`.
#[pyclass]
struct Solver {
    problem: Arc<SequenceFormProblem>,
    inner: AnySolver,
}

#[pymethods]
impl Solver {
    #[new]
    #[pyo3(signature = (problem, kind = "egt", weights = "recurrence:2", mu_scale = 1.0, mu_ratio = 1.0, dgf_scale = 1.0))]
    fn new(
        problem: &Problem,
        kind: &str,
        weights: &str,
        mu_scale: f64,
        mu_ratio: f64,
        dgf_scale: f64,
    ) -> PyResult<Self> {
        let p = Arc::clone(&problem.inner);
        let inner = match kind {
            "egt" => {
                let scheme: WeightScheme = weights.parse().map_err(err)?;
                let cx =
                    DgfContext::with_scheme(p.x_plex.clone(), scheme, dgf_scale).map_err(err)?;
                let cy =
                    DgfContext::with_scheme(p.y_plex.clone(), scheme, dgf_scale).map_err(err)?;
                AnySolver::Egt(
                    EgtSolver::new(Arc::clone(&p), cx, cy, EgtParams { mu_scale, mu_ratio })
                        .map_err(err)?,
                )
            }
            "cfr" => AnySolver::Cfr(CfrSolver::new(Arc::clone(&p), false)),
            "cfrplus" => AnySolver::Cfr(CfrSolver::new(Arc::clone(&p), true)),
            other => return Err(PyValueError::new_err(format!("unknown solver `{other}`"))),
        };
        Ok(Self { problem: p, inner })
    }

    #[pyo3(signature = (n = 1))]
    fn step(&mut self, n: u64) -> PyResult<()> {
        for _ in 0..n {
            self.inner.as_dyn().step().map_err(err)?;
        }
        Ok(())
    }

    #[getter]
    fn iteration(&self) -> u64 {
        self.inner.as_ref().iteration()
    }

    #[getter]
    fn traversals(&self) -> u64 {
        self.inner.as_ref().traversals()
    }

    /// Reported strategy pair `(x, y)`: current iterates for EGT, averages for CFR.
    fn strategies(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.as_ref().strategies()
    }

    #[getter]
    fn mu(&self) -> Option<(f64, f64)> {
        self.inner.as_ref().smoothing()
    }

    fn saddle_residual(&self) -> PyResult<f64> {
        let (x, y) = self.strategies();
        efg::saddle_residual(&self.problem, &x, &y).map_err(err)
    }

    /// `(upper, lower)` smoothed values for EGT; `None` for CFR.
    fn excessive_gap(&self) -> Option<(f64, f64)> {
        match &self.inner {
            AnySolver::Egt(s) => {
                let g = s.excessive_gap();
                Some((g.upper, g.lower))
            }
            AnySolver::Cfr(_) => None,
        }
    }
}

/// Runs a TOML run configuration; returns the telemetry CSV and a summary line.
#[pyfunction]
fn run_config(toml_text: &str) -> PyResult<(String, String)> {
    let cfg = RunConfig::from_toml(toml_text).map_err(err)?;
    let report = harness::run_config(&cfg).map_err(err)?;
    Ok((report.csv(), report.summary()))
}

#[pymodule]
pub fn degt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Treeplex>()?;
    m.add_class::<Problem>()?;
    m.add_class::<Dgf>()?;
    m.add_class::<Solver>()?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
