//! End-to-end checks of the library against reference values and limit
//! behaviour. Each check is self-contained and timed; the same suite backs the
//! `validate` subcommand and the acceptance test target.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, Regime};
use crate::chain::{self, Direction, IncentiveScheme};
use crate::cost::{self, CostProfile};
use crate::error::Result;
use crate::games::{self, GameSpec, PopulationConfig};
use crate::montecarlo::{self, SimConfig};
use crate::phase::{self, Branch, PhaseAnalysis};

const SCHEMES: [IncentiveScheme; 2] = [IncentiveScheme::Reward, IncentiveScheme::Punishment];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    /// Wall-clock budget, if the criterion has one; exceeding it fails.
    pub budget_secs: Option<f64>,
}

impl CriterionReport {
    /// `PASS [ 3] title (0.012 s): detail`
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {} ({:.3} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed_secs,
            self.detail
        )
    }
}

// Collects failures and the worst observed error for one criterion.
struct Tally {
    failures: Vec<String>,
    worst: f64,
    checks: usize,
}

impl Tally {
    fn new() -> Self {
        Tally {
            failures: Vec::new(),
            worst: 0.0,
            checks: 0,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failures.len() < 5 {
            self.failures.push(what());
        } else if !ok {
            self.failures.push(String::new());
        }
    }

    fn close(&mut self, observed: f64, expected: f64, tol: f64, what: &str) {
        let err = (observed - expected).abs();
        self.check(err <= tol, || {
            format!("{what}: {observed} vs {expected} (tol {tol})")
        });
    }

    fn rel(&mut self, observed: f64, expected: f64, tol: f64, what: impl FnOnce() -> String) {
        let err = (observed - expected).abs() / expected.abs();
        self.worst = self.worst.max(err);
        self.check(err <= tol, || format!("{}: rel err {err:.3e}", what()));
    }

    fn finish(self, summary: String) -> (bool, String) {
        if self.failures.is_empty() {
            (true, summary)
        } else {
            let shown: Vec<&str> = self
                .failures
                .iter()
                .filter(|s| !s.is_empty())
                .map(String::as_str)
                .collect();
            (
                false,
                format!(
                    "{} of {} checks failed; {}",
                    self.failures.len(),
                    self.checks,
                    shown.join("; ")
                ),
            )
        }
    }
}

type Outcome = Result<(bool, String)>;

struct Criterion {
    id: u8,
    title: &'static str,
    budget_secs: Option<f64>,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 12] = [
    Criterion {
        id: 1,
        title: "three-player closed forms",
        budget_secs: Some(1.0),
        run: closed_forms,
    },
    Criterion {
        id: 2,
        title: "phase constants F*, u*",
        budget_secs: Some(1.0),
        run: phase_constants,
    },
    Criterion {
        id: 3,
        title: "selection thresholds beta*",
        budget_secs: Some(10.0),
        run: thresholds,
    },
    Criterion {
        id: 4,
        title: "optimal incentive algorithm",
        budget_secs: None,
        run: algorithm,
    },
    Criterion {
        id: 5,
        title: "weak selection limit",
        budget_secs: None,
        run: weak_selection,
    },
    Criterion {
        id: 6,
        title: "strong selection limit",
        budget_secs: None,
        run: strong_selection,
    },
    Criterion {
        id: 7,
        title: "reward/punishment crossover",
        budget_secs: None,
        run: crossover,
    },
    Criterion {
        id: 8,
        title: "finite population bounds",
        budget_secs: None,
        run: bounds,
    },
    Criterion {
        id: 9,
        title: "fixation ratio identity",
        budget_secs: None,
        run: fixation_identity,
    },
    Criterion {
        id: 10,
        title: "Monte Carlo oracle",
        budget_secs: Some(120.0),
        run: monte_carlo,
    },
    Criterion {
        id: 11,
        title: "large population trend",
        budget_secs: None,
        run: population_trend,
    },
    Criterion {
        id: 12,
        title: "sign changes of E'",
        budget_secs: None,
        run: sign_changes,
    },
];

pub fn criterion_ids() -> Vec<u8> {
    CRITERIA.iter().map(|c| c.id).collect()
}

/// Runs one criterion by id (1–12).
pub fn run_criterion(id: u8) -> Option<CriterionReport> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let outcome = (c.run)();
    let elapsed_secs = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(budget) = c.budget_secs {
        if elapsed_secs > budget {
            passed = false;
            detail = format!("{detail}; exceeded {budget} s budget");
        }
    }
    Some(CriterionReport {
        id: c.id,
        title: c.title.to_string(),
        passed,
        detail,
        elapsed_secs,
        budget_secs: c.budget_secs,
    })
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA
        .iter()
        .filter_map(|c| run_criterion(c.id))
        .collect()
}

fn dg(b: f64, c: f64) -> GameSpec {
    GameSpec::donation(b, c).expect("valid donation game")
}

fn pop(n: usize, beta: f64) -> Result<PopulationConfig> {
    PopulationConfig::new(n, beta)
}

fn closed_forms() -> Outcome {
    let game = dg(2.0, 1.0);
    let delta = games::delta(&game, 3)?;
    let mut t = Tally::new();
    for beta in [0.1, 1.0, 10.0] {
        let p = pop(3, beta)?;
        for k in 1..=50 {
            let theta = k as f64 / 10.0;
            let e = (beta * (theta + delta)).exp();
            let reward = 9.0 * theta / 4.0 * (5.0 + (4.0 * e - 1.0) / (1.0 + e + e * e));
            let punish = 9.0 * theta / 4.0 * (4.0 + (5.0 * e + 1.0) / (1.0 + e + e * e));
            let er = cost::expected_cost(&game, &p, IncentiveScheme::Reward, theta)?;
            let ep = cost::expected_cost(&game, &p, IncentiveScheme::Punishment, theta)?;
            t.rel(er, reward, 1e-10, || format!("E_r β={beta} θ={theta}"));
            t.rel(ep, punish, 1e-10, || format!("E_p β={beta} θ={theta}"));
        }
    }
    let summary = format!("{} points, max rel err {:.2e}", t.checks, t.worst);
    Ok(t.finish(summary))
}

fn phase_constants() -> Outcome {
    let (f_star, u_star) = phase::f_star(3, IncentiveScheme::Reward)?;
    let mut t = Tally::new();
    t.close(f_star, 10.9291, 1e-3, "F*");
    t.close(u_star, 4.29712, 1e-4, "u*");
    Ok(t.finish(format!("F* = {f_star:.6}, u* = {u_star:.6}")))
}

fn thresholds() -> Outcome {
    let game = dg(1.8, 1.0);
    let b3 = phase::beta_star(&game, 3, IncentiveScheme::Reward)?;
    let a50 = PhaseAnalysis::new(50, IncentiveScheme::Reward)?;
    let b50 = a50.beta_star(games::delta(&game, 50)?)?;
    let mut t = Tally::new();
    t.close(b3, 5.752, 1e-3, "beta*(N=3)");
    t.close(a50.f_star, 3.15, 1e-2, "F*(N=50)");
    t.close(b50, 3.039, 2e-3, "beta*(N=50)");
    Ok(t.finish(format!(
        "beta*(3) = {b3:.5}, F*(50) = {:.5}, beta*(50) = {b50:.5}",
        a50.f_star
    )))
}

fn algorithm() -> Outcome {
    let game = dg(1.8, 1.0);
    let p = pop(3, 10.0)?;
    let scheme = IncentiveScheme::Reward;
    let mut t = Tally::new();

    let r = phase::optimize(&game, &p, scheme, 0.25)?;
    t.close(r.theta_star, 1.845, 1e-3, "ω=0.25 θ*");
    t.close(r.cost_star, 23.602, 1e-2, "ω=0.25 E");
    let low = r.theta_star;

    let r = phase::optimize(&game, &p, scheme, 0.7)?;
    t.check(r.branch == Branch::AboveThresholdTheta2, || {
        format!("ω=0.7 branch {:?}", r.branch)
    });
    t.close(r.theta_star, 2.16, 1e-2, "ω=0.7 θ*");
    t.close(r.cost_star, 25.6124, 1e-3, "ω=0.7 E");
    t.close(r.diagnostics.cost_theta0, 26.446, 1e-2, "ω=0.7 E(θ0)");
    let mid = (r.theta_star, r.cost_star);

    let r = phase::optimize(&game, &p, scheme, 0.999_999)?;
    t.close(r.theta_star, 2.59078, 1e-4, "ω=0.999999 θ*");
    Ok(t.finish(format!(
        "θ* = {low:.4} / {:.4} (E = {:.4}) / {:.5}",
        mid.0, mid.1, r.theta_star
    )))
}

fn weak_selection() -> Outcome {
    let game = dg(2.0, 1.0);
    let mut t = Tally::new();
    for n in [3, 10, 50] {
        let p = pop(n, 1e-6)?;
        for scheme in SCHEMES {
            for theta in [0.5, 1.0, 2.0, 5.0] {
                let e = cost::expected_cost(&game, &p, scheme, theta)?;
                let limit = asymptotics::weak_selection_limit(n, theta)?;
                t.rel(e, limit, 1e-4, || {
                    format!("N={n} {} θ={theta}", scheme.label())
                });
            }
        }
    }
    let summary = format!("{} points, max rel err {:.2e}", t.checks, t.worst);
    Ok(t.finish(summary))
}

fn strong_selection() -> Outcome {
    let game = dg(2.0, 1.0);
    let beta = 1e3;
    let mut t = Tally::new();
    for n in [3, 10, 50] {
        let delta = games::delta(&game, n)?;
        let p = pop(n, beta)?;
        for scheme in SCHEMES {
            for theta in [-delta - 0.5, -delta + 0.5] {
                let e = cost::expected_cost(&game, &p, scheme, theta)?;
                let limit = asymptotics::large_selection_limit(
                    n,
                    theta,
                    scheme,
                    Regime::classify(theta, delta),
                )?;
                t.rel(e, limit, 1e-3, || {
                    format!("N={n} {} θ={theta}", scheme.label())
                });
            }
            // Knife edge: the chain at x = 0 exactly.
            let theta = -delta;
            let e = cost::expected_cost_at_gap(n, scheme, theta, 0.0)?;
            let limit = asymptotics::large_selection_limit(n, theta, scheme, Regime::Edge)?;
            t.rel(e, limit, 1e-3, || {
                format!("N={n} {} knife edge", scheme.label())
            });
        }
    }
    let summary = format!("{} points, max rel err {:.2e}", t.checks, t.worst);
    Ok(t.finish(summary))
}

fn crossover() -> Outcome {
    let game = dg(2.0, 1.0);
    let mut t = Tally::new();
    for n in [3, 5, 10, 50] {
        let delta = games::delta(&game, n)?;
        for beta in [0.1, 1.0, 10.0] {
            let p = pop(n, beta)?;
            let mut grid: Vec<f64> = (1..=120).map(|k| k as f64 / 20.0).collect();
            grid.push(-delta);
            for theta in grid {
                let er = cost::expected_cost(&game, &p, IncentiveScheme::Reward, theta)?;
                let ep = cost::expected_cost(&game, &p, IncentiveScheme::Punishment, theta)?;
                let side = theta + delta;
                if side.abs() <= 1e-12 {
                    t.check((er - ep).abs() <= 1e-10 * er, || {
                        format!("N={n} β={beta} edge {er} vs {ep}")
                    });
                } else {
                    t.check((er > ep) == (side > 0.0), || {
                        format!("N={n} β={beta} θ={theta}")
                    });
                }
            }
        }
    }
    let summary = format!("{} grid points", t.checks);
    Ok(t.finish(summary))
}

fn random_game(rng: &mut ChaCha8Rng, n: usize) -> GameSpec {
    if n >= 5 && rng.random_bool(0.5) {
        let group = rng.random_range(2..=5usize);
        let r = 1.0 + (group as f64 - 1.0) * rng.random_range(0.05..0.95);
        GameSpec::public_goods(r, group, rng.random_range(0.2..3.0))
            .expect("valid public goods game")
    } else {
        let c = rng.random_range(0.2..3.0);
        dg(c + rng.random_range(0.05..3.0), c)
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

fn bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b0d);
    let mut t = Tally::new();
    let mut tightest = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(3..=100usize);
        let game = random_game(&mut rng, n);
        let p = pop(n, log_uniform(&mut rng, 1e-3, 1e3))?;
        let theta = 10.0 * (1.0 - rng.random::<f64>()); // (0, 10]
        let scheme = SCHEMES[rng.random_range(0..2)];
        let e = cost::expected_cost(&game, &p, scheme, theta)?;
        let (lo, hi) = asymptotics::cost_bounds(n, theta)?;
        tightest = tightest.min((e - lo) / lo).min((hi - e) / hi);
        // Floating-point slack only: the lower bound is attained in the limit.
        let slack = 1e-12;
        t.check(lo <= e * (1.0 + slack) && e <= hi * (1.0 + slack), || {
            format!("N={n} β={} θ={theta}: {lo} ≤ {e} ≤ {hi}", p.beta)
        });
    }
    Ok(t.finish(format!(
        "1000 samples, smallest relative margin {tightest:.2e}"
    )))
}

fn fixation_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf1c5);
    let mut t = Tally::new();
    for _ in 0..1000 {
        let n = rng.random_range(2..=30usize);
        let game = random_game(&mut rng, n);
        let p = pop(n, log_uniform(&mut rng, 1e-3, 10.0))?;
        let theta = rng.random_range(-5.0..5.0);
        let to_c =
            chain::log_fixation_probability(&game, &p, theta, Direction::DefectorToCooperator)?;
        let to_d =
            chain::log_fixation_probability(&game, &p, theta, Direction::CooperatorToDefector)?;
        let exponent = p.beta * (n - 1) as f64 * (games::delta(&game, n)? + theta);
        // Relative error of the ratio, computed without forming e^{exponent}.
        let err = ((to_c - to_d) - exponent).exp_m1().abs();
        t.worst = t.worst.max(err);
        t.check(err <= 1e-8, || {
            format!("N={n} β={} θ={theta}: rel err {err:.3e}", p.beta)
        });
    }
    let summary = format!("1000 samples, max rel err {:.2e}", t.worst);
    Ok(t.finish(summary))
}

fn monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x03c0_ac1e);
    let mut t = Tally::new();
    let mut worst_z: f64 = 0.0;
    for k in 0..20u64 {
        let n = rng.random_range(2..=20usize);
        let game = random_game(&mut rng, n);
        let p = pop(n, log_uniform(&mut rng, 0.05, 5.0))?;
        let theta = rng.random_range(0.1..5.0);
        let scheme = SCHEMES[rng.random_range(0..2)];
        let cfg = SimConfig::new(game, p, scheme, theta, 100_000, 1000 + k)?;
        let est = montecarlo::simulate_visits(&cfg)?;

        let x = chain::selection_gap(&game, &p, theta)?;
        let nmat = chain::fundamental_matrix(&chain::TransitionMatrix::from_gap(n, x)?)?;
        let visits: f64 = (1..n)
            .map(|i| nmat.expected_visits(i))
            .sum::<Result<f64>>()?;
        let e = cost::expected_cost(&game, &p, scheme, theta)?;
        for (what, sim, se, exact) in [
            (
                "visits",
                est.mean_total_visits,
                est.total_visits_standard_error,
                visits,
            ),
            (
                "cost",
                est.mean_total_cost,
                est.total_cost_standard_error,
                e,
            ),
        ] {
            let z = (sim - exact).abs() / se;
            worst_z = worst_z.max(z);
            t.check(z <= 3.0, || {
                format!("config {k} (N={n}) {what}: {sim} vs {exact}, z = {z:.2}")
            });
        }
        t.check(est.truncated_runs == 0, || {
            format!("config {k}: truncated runs")
        });
    }
    Ok(t.finish(format!("20 configs × 1e5 runs, max |z| = {worst_z:.2}")))
}

fn population_trend() -> Outcome {
    let settings = [
        (dg(2.0, 1.0), 1.0, 2.0),
        (dg(2.0, 1.0), 1.0, 0.5),
        (GameSpec::public_goods(3.0, 5, 1.0)?, 1.0, 0.2),
    ];
    let sizes = [50, 100, 200, 400];
    let mut t = Tally::new();
    let mut last_gap = Vec::new();
    for (game, beta, theta) in settings {
        let limit = asymptotics::infinite_population_ratio(&game, beta, theta)?;
        for scheme in SCHEMES {
            let ratios = sizes
                .iter()
                .map(|&n| asymptotics::normalized_cost(&game, &pop(n, beta)?, scheme, theta))
                .collect::<Result<Vec<f64>>>()?;
            let gaps: Vec<f64> = ratios.iter().map(|r| r - limit).collect();
            let same_side = gaps.iter().all(|g| g.signum() == gaps[0].signum());
            let shrinking = gaps.windows(2).all(|w| w[1].abs() < w[0].abs());
            t.check(same_side && shrinking, || {
                format!(
                    "{} {} θ={theta}: ratios {ratios:?} vs limit {limit}",
                    game.label(),
                    scheme.label()
                )
            });
            last_gap.push(gaps[3].abs());
        }
    }
    let widest = last_gap.iter().cloned().fold(0.0, f64::max);
    Ok(t.finish(format!(
        "6 sequences monotone; largest remaining gap at N=400: {widest:.3}"
    )))
}

fn sign_changes() -> Outcome {
    let game = dg(1.8, 1.0);
    let mut t = Tally::new();
    let mut counts = Vec::new();
    for n in [3, 10, 50, 100] {
        let delta = games::delta(&game, n)?;
        for scheme in SCHEMES {
            let beta_star = PhaseAnalysis::new(n, scheme)?.beta_star(delta)?;
            for (factor, expected) in [(2.0, 2), (0.5, 0)] {
                let p = pop(n, factor * beta_star)?;
                let profile = CostProfile::new(&game, &p, scheme)?;
                // u from 1e-6 to 1e8 covers θ far on both sides of the turning points.
                let changes = phase::derivative_sign_changes(&profile, 1e-6, 1e8, 200_001);
                counts.push(changes);
                t.check(changes == expected, || {
                    format!(
                        "N={n} {} β={factor}β*: {changes} sign changes",
                        scheme.label()
                    )
                });
            }
        }
    }
    Ok(t.finish(format!("counts (2β*, β*/2) per case: {counts:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_one_through_twelve() {
        assert_eq!(criterion_ids(), (1..=12).collect::<Vec<u8>>());
        assert!(run_criterion(13).is_none());
    }

    #[test]
    fn report_line_format() {
        let r = run_criterion(2).unwrap();
        assert!(r.passed, "{}", r.line());
        assert!(r.line().starts_with("PASS [ 2] phase constants"));
    }
}
