//! Python bindings: games, expected cost, phase constants, the optimal
//! incentive search and the Monte Carlo oracle.

use incentive_core::asymptotics::{self, Regime};
use incentive_core::chain::{self, Direction, IncentiveScheme};
use incentive_core::games::{self, GameSpec, PopulationConfig};
use incentive_core::montecarlo::{self, SimConfig};
use incentive_core::phase::{self, PhaseAnalysis};
use incentive_core::{cost, validation, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Analysis(_) | Error::SingularSystem(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_scheme(s: &str) -> PyResult<IncentiveScheme> {
    s.parse().map_err(to_py)
}

fn pop(n: usize, beta: f64) -> PyResult<PopulationConfig> {
    PopulationConfig::new(n, beta).map_err(to_py)
}

/// A two-strategy social dilemma.
#[pyclass(name = "Game", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGame(GameSpec);

#[pymethods]
impl PyGame {
    /// Donation Game: a cooperator pays `c` to give `b` to the co-player.
    #[staticmethod]
    fn donation(b: f64, c: f64) -> PyResult<Self> {
        GameSpec::donation(b, c).map(PyGame).map_err(to_py)
    }

    /// Public Goods Game in groups of `n` with multiplication factor `r`.
    #[staticmethod]
    fn public_goods(r: f64, n: usize, c: f64) -> PyResult<Self> {
        GameSpec::public_goods(r, n, c).map(PyGame).map_err(to_py)
    }

    /// Constant payoff gap Π_C − Π_D in a population of `pop_size`.
    fn delta(&self, pop_size: usize) -> PyResult<f64> {
        games::delta(&self.0, pop_size).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        match self.0 {
            GameSpec::DonationGame { b, c } => format!("Game.donation(b={b}, c={c})"),
            GameSpec::PublicGoodsGame { r, n, c } => {
                format!("Game.public_goods(r={r}, n={n}, c={c})")
            }
        }
    }
}

/// Expected total incentive cost E(θ).
#[pyfunction]
fn expected_cost(
    game: &PyGame,
    pop_size: usize,
    beta: f64,
    scheme: &str,
    theta: f64,
) -> PyResult<f64> {
    cost::expected_cost(&game.0, &pop(pop_size, beta)?, parse_scheme(scheme)?, theta).map_err(to_py)
}

/// dE/dθ.
#[pyfunction]
fn cost_derivative(
    game: &PyGame,
    pop_size: usize,
    beta: f64,
    scheme: &str,
    theta: f64,
) -> PyResult<f64> {
    cost::cost_derivative(&game.0, &pop(pop_size, beta)?, parse_scheme(scheme)?, theta)
        .map_err(to_py)
}

/// E(θ) over a list of incentives.
#[pyfunction]
fn cost_grid(
    game: &PyGame,
    pop_size: usize,
    beta: f64,
    scheme: &str,
    thetas: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let p = pop(pop_size, beta)?;
    let s = parse_scheme(scheme)?;
    thetas
        .iter()
        .map(|&t| cost::expected_cost(&game.0, &p, s, t).map_err(to_py))
        .collect()
}

/// Fixation probability of a single mutant; `to` is "cooperator" or "defector".
#[pyfunction]
fn fixation_probability(
    game: &PyGame,
    pop_size: usize,
    beta: f64,
    theta: f64,
    to: &str,
) -> PyResult<f64> {
    let direction = match to {
        "cooperator" | "c" => Direction::DefectorToCooperator,
        "defector" | "d" => Direction::CooperatorToDefector,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown direction '{other}'"
            )))
        }
    };
    chain::fixation_probability(&game.0, &pop(pop_size, beta)?, theta, direction).map_err(to_py)
}

/// Smallest θ giving long-run cooperation frequency ≥ ω.
#[pyfunction]
fn theta_min(game: &PyGame, pop_size: usize, beta: f64, omega: f64) -> PyResult<f64> {
    chain::theta_min(&game.0, &pop(pop_size, beta)?, omega).map_err(to_py)
}

#[pyfunction]
fn weak_selection_limit(pop_size: usize, theta: f64) -> PyResult<f64> {
    asymptotics::weak_selection_limit(pop_size, theta).map_err(to_py)
}

/// β → ∞ limit; `regime` is "below", "edge" or "above" the knife edge θ = −δ.
#[pyfunction]
fn large_selection_limit(pop_size: usize, theta: f64, scheme: &str, regime: &str) -> PyResult<f64> {
    let regime = match regime {
        "below" => Regime::BelowEdge,
        "edge" => Regime::Edge,
        "above" => Regime::AboveEdge,
        other => return Err(PyValueError::new_err(format!("unknown regime '{other}'"))),
    };
    asymptotics::large_selection_limit(pop_size, theta, parse_scheme(scheme)?, regime)
        .map_err(to_py)
}

/// (lower, upper) bounds on E(θ) for θ > 0.
#[pyfunction]
fn cost_bounds(pop_size: usize, theta: f64) -> PyResult<(f64, f64)> {
    asymptotics::cost_bounds(pop_size, theta).map_err(to_py)
}

/// Critical constants of the cost profile.
#[pyclass(name = "Phase", frozen, get_all)]
struct PyPhase {
    pop_size: usize,
    scheme: String,
    f_star: f64,
    u_star: f64,
    p_roots: Vec<f64>,
}

#[pymethods]
impl PyPhase {
    #[new]
    fn new(pop_size: usize, scheme: &str) -> PyResult<Self> {
        let a = PhaseAnalysis::new(pop_size, parse_scheme(scheme)?).map_err(to_py)?;
        Ok(PyPhase {
            pop_size,
            scheme: a.scheme.label().to_string(),
            f_star: a.f_star,
            u_star: a.u_star,
            p_roots: a.p_roots,
        })
    }

    /// Selection threshold β* = F*/(−δ) for this game.
    fn beta_star(&self, game: &PyGame) -> PyResult<f64> {
        phase::beta_star(&game.0, self.pop_size, parse_scheme(&self.scheme)?).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Phase(N={}, {}, F*={:.6}, u*={:.6})",
            self.pop_size, self.scheme, self.f_star, self.u_star
        )
    }
}

/// Outcome of the optimal incentive search.
#[pyclass(name = "OptimizationResult", frozen, get_all)]
struct PyOptimization {
    theta_star: f64,
    cost_star: f64,
    branch: String,
    theta0: f64,
    cost_theta0: f64,
    beta_star: f64,
    theta2: Option<f64>,
    cost_theta2: Option<f64>,
    heuristic: bool,
    warnings: Vec<String>,
}

#[pymethods]
impl PyOptimization {
    fn __repr__(&self) -> String {
        format!(
            "OptimizationResult(theta_star={}, cost_star={}, branch={:?})",
            self.theta_star, self.cost_star, self.branch
        )
    }
}

/// Cheapest incentive reaching cooperation frequency `omega`.
#[pyfunction]
fn optimize(
    game: &PyGame,
    pop_size: usize,
    beta: f64,
    scheme: &str,
    omega: f64,
) -> PyResult<PyOptimization> {
    let r = phase::optimize(&game.0, &pop(pop_size, beta)?, parse_scheme(scheme)?, omega)
        .map_err(to_py)?;
    let branch = match r.branch {
        phase::Branch::BelowThreshold => "BelowThreshold",
        phase::Branch::AboveThresholdTheta0 => "AboveThreshold_Theta0",
        phase::Branch::AboveThresholdTheta2 => "AboveThreshold_Theta2",
    };
    Ok(PyOptimization {
        theta_star: r.theta_star,
        cost_star: r.cost_star,
        branch: branch.to_string(),
        theta0: r.diagnostics.theta0,
        cost_theta0: r.diagnostics.cost_theta0,
        beta_star: r.diagnostics.beta_star,
        theta2: r.diagnostics.theta2,
        cost_theta2: r.diagnostics.cost_theta2,
        heuristic: r.heuristic,
        warnings: r.warnings,
    })
}

/// Monte Carlo means and standard errors.
#[pyclass(name = "SimEstimate", frozen, get_all)]
struct PyEstimate {
    runs: u64,
    mean_visits: Vec<f64>,
    visits_standard_error: Vec<f64>,
    mean_total_visits: f64,
    total_visits_standard_error: f64,
    mean_total_cost: f64,
    total_cost_standard_error: f64,
    truncated_runs: u64,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "SimEstimate(runs={}, mean_total_cost={} ± {})",
            self.runs, self.mean_total_cost, self.total_cost_standard_error
        )
    }
}

#[pyfunction]
#[pyo3(signature = (game, pop_size, beta, scheme, theta, runs, seed=0))]
fn simulate(
    game: &PyGame,
    pop_size: usize,
    beta: f64,
    scheme: &str,
    theta: f64,
    runs: u64,
    seed: u64,
) -> PyResult<PyEstimate> {
    let cfg = SimConfig::new(
        game.0,
        pop(pop_size, beta)?,
        parse_scheme(scheme)?,
        theta,
        runs,
        seed,
    )
    .map_err(to_py)?;
    let e = montecarlo::simulate_visits(&cfg).map_err(to_py)?;
    Ok(PyEstimate {
        runs: e.runs,
        mean_visits: e.mean_visits,
        visits_standard_error: e.visits_standard_error,
        mean_total_visits: e.mean_total_visits,
        total_visits_standard_error: e.total_visits_standard_error,
        mean_total_cost: e.mean_total_cost,
        total_cost_standard_error: e.total_cost_standard_error,
        truncated_runs: e.truncated_runs,
    })
}

/// Runs acceptance criteria; returns (id, title, passed, detail) tuples.
#[pyfunction]
#[pyo3(signature = (ids=None))]
fn validate(ids: Option<Vec<u8>>) -> PyResult<Vec<(u8, String, bool, String)>> {
    let ids = ids.unwrap_or_else(validation::criterion_ids);
    ids.iter()
        .map(|&id| {
            validation::run_criterion(id)
                .map(|r| (r.id, r.title, r.passed, r.detail))
                .ok_or_else(|| PyValueError::new_err(format!("no criterion {id}")))
        })
        .collect()
}

#[pymodule]
pub fn incentive(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGame>()?;
    m.add_class::<PyPhase>()?;
    m.add_class::<PyOptimization>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(expected_cost, m)?)?;
    m.add_function(wrap_pyfunction!(cost_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(cost_grid, m)?)?;
    m.add_function(wrap_pyfunction!(fixation_probability, m)?)?;
    m.add_function(wrap_pyfunction!(theta_min, m)?)?;
    m.add_function(wrap_pyfunction!(weak_selection_limit, m)?)?;
    m.add_function(wrap_pyfunction!(large_selection_limit, m)?)?;
    m.add_function(wrap_pyfunction!(cost_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
