use clap::Args;
use incentive_core::asymptotics::{self, Regime};
use incentive_core::chain::{self, IncentiveScheme};
use incentive_core::cost;
use incentive_core::games::{self, GameSpec, PopulationConfig};
use incentive_core::montecarlo::{self, SimConfig};
use incentive_core::phase::{self, PhaseAnalysis, GUARANTEED_MAX_N};
use incentive_core::validation;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{usage, CliError, Result};
use crate::output::{Cell, Format, Payload, Table};
use crate::params::{GameArgs, Grid, Log10Range, Resolver};

/// A subcommand's output plus the format it prefers when none is requested.
pub struct Produced {
    pub payload: Payload,
    pub default_format: Format,
    /// Set by `simulate --check` and `validate`; reported after the output is written.
    pub failure: Option<CliError>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Population size
    #[arg(long = "N")]
    pub pop_size: Option<usize>,
    /// Intensity of selection
    #[arg(long)]
    pub beta: Option<f64>,
    /// Incentive grid start:stop:step, or a single value
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<Grid>,
    /// Sweep over `beta` instead of theta
    #[arg(long)]
    pub sweep: Option<String>,
    /// Exponent range a:b for the beta sweep
    #[arg(long, allow_hyphen_values = true)]
    pub log10: Option<Log10Range>,
    /// Number of beta values (default: ten per decade)
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long = "N")]
    pub pop_size: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// reward or punishment
    #[arg(long)]
    pub scheme: Option<IncentiveScheme>,
    /// Target cooperation frequency, or a grid with `--sweep omega`
    #[arg(long)]
    pub omega: Option<Grid>,
    /// `omega` to emit one row per grid value
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// Optional; needed only for beta*
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long = "N")]
    pub pop_size: Option<usize>,
    #[arg(long)]
    pub scheme: Option<IncentiveScheme>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long = "N")]
    pub pop_size: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub scheme: Option<IncentiveScheme>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "x")]
    pub theta: Option<f64>,
    /// Selection gap β(δ + θ); sets θ = x/β − δ
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long)]
    pub runs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "step-cap")]
    pub step_cap: Option<u64>,
    /// Exit 1 unless simulated totals lie within 3 standard errors of the exact values
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Comma-separated criterion ids (default: all)
    #[arg(long)]
    pub only: Option<String>,
}

fn population(
    res: &mut Resolver,
    flag: Option<usize>,
    beta: Option<f64>,
    game: &GameSpec,
) -> Result<PopulationConfig> {
    let n = res.req("N", flag)?;
    let beta = res.req("beta", beta)?;
    let pop = PopulationConfig::new(n, beta)?;
    pop.validate_for(game)?;
    Ok(pop)
}

fn sweep_kind(res: &mut Resolver, flag: Option<String>, allowed: &str) -> Result<bool> {
    match res.opt("sweep", flag)? {
        None => Ok(false),
        Some(s) if s == allowed => Ok(true),
        Some(s) => Err(usage(format!("unknown sweep '{s}' (expected {allowed})"))),
    }
}

// Ordered parallel map; rows come back in grid order.
fn par_rows<F>(points: &[f64], f: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(f64) -> Result<Vec<Cell>> + Sync,
{
    points.par_iter().map(|&p| f(p)).collect()
}

pub fn cost(args: CostArgs, res: &mut Resolver) -> Result<Produced> {
    let game = args.game.resolve(res, true)?.expect("required game");
    let by_beta = sweep_kind(res, args.sweep, "beta")?;
    let n = res.req("N", args.pop_size)?;
    let theta = res.req("theta", args.theta)?;
    let delta = games::delta(&game, n)?;
    // Reference values: β → 0 and β → ∞ (the latter needs N ≥ 3).
    let limits = |theta: f64| -> Result<Vec<Cell>> {
        let strong = |scheme| -> Result<Option<f64>> {
            if n < 3 {
                return Ok(None);
            }
            Ok(Some(asymptotics::large_selection_limit(
                n,
                theta,
                scheme,
                Regime::classify(theta, delta),
            )?))
        };
        Ok(vec![
            asymptotics::weak_selection_limit(n, theta)?.into(),
            strong(IncentiveScheme::Reward)?.into(),
            strong(IncentiveScheme::Punishment)?.into(),
        ])
    };
    let costs = |pop: &PopulationConfig, theta: f64| -> Result<Vec<Cell>> {
        Ok(vec![
            cost::expected_cost(&game, pop, IncentiveScheme::Reward, theta)?.into(),
            cost::expected_cost(&game, pop, IncentiveScheme::Punishment, theta)?.into(),
        ])
    };

    if by_beta {
        if res.opt("beta", args.beta)?.is_some() {
            return Err(usage("--beta conflicts with --sweep beta"));
        }
        let theta = theta
            .single()
            .ok_or_else(|| usage("--sweep beta takes a single --theta value"))?;
        let range = res.req("log10", args.log10)?;
        let points = res.opt("points", args.points)?;
        if points.is_some_and(|p| p < 2) {
            return Err(usage("--points must be >= 2"));
        }
        let betas = range.points(points);
        let mut table = Table::new(vec![
            "beta",
            "E_reward",
            "E_punishment",
            "weak_limit",
            "strong_limit_reward",
            "strong_limit_punishment",
        ]);
        table.rows = par_rows(&betas, |beta| {
            let pop = PopulationConfig::new(n, beta)?;
            pop.validate_for(&game)?;
            let mut row = vec![beta.into()];
            row.extend(costs(&pop, theta)?);
            row.extend(limits(theta)?);
            Ok(row)
        })?;
        return Ok(Produced::table(table));
    }

    if args.log10.is_some() || args.points.is_some() {
        return Err(usage("--log10/--points need --sweep beta"));
    }
    let beta = res.req("beta", args.beta)?;
    let pop = PopulationConfig::new(n, beta)?;
    pop.validate_for(&game)?;
    let thetas = theta.points();
    let mut table = Table::new(vec![
        "theta",
        "E_reward",
        "E_punishment",
        "lower_bound",
        "upper_bound",
        "weak_limit",
        "strong_limit_reward",
        "strong_limit_punishment",
    ]);
    table.rows = par_rows(&thetas, |theta| {
        let mut row = vec![theta.into()];
        row.extend(costs(&pop, theta)?);
        let (lo, hi) = match asymptotics::cost_bounds(n, theta) {
            Ok((lo, hi)) => (Some(lo), Some(hi)),
            Err(_) => (None, None),
        };
        row.extend([lo.into(), hi.into()]);
        row.extend(limits(theta)?);
        Ok(row)
    })?;
    Ok(Produced::table(table))
}

fn optimize_row(r: &phase::OptimizationResult, omega: f64) -> Vec<Cell> {
    let d = &r.diagnostics;
    vec![
        omega.into(),
        r.theta_star.into(),
        r.cost_star.into(),
        branch_name(r.branch).into(),
        d.theta0.into(),
        d.cost_theta0.into(),
        d.theta2.into(),
        d.cost_theta2.into(),
        d.beta_star.into(),
        r.heuristic.into(),
    ]
}

fn branch_name(b: phase::Branch) -> String {
    serde_json::to_value(b)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

pub fn optimize(args: OptimizeArgs, res: &mut Resolver) -> Result<Produced> {
    let game = args.game.resolve(res, true)?.expect("required game");
    let pop = population(res, args.pop_size, args.beta, &game)?;
    let scheme = res.req("scheme", args.scheme)?;
    let sweep = sweep_kind(res, args.sweep, "omega")?;
    let omega = res.req("omega", args.omega)?;
    for w in omega.points() {
        if !(w > 0.0 && w < 1.0) {
            return Err(usage(format!("omega must lie in (0, 1), got {w}")));
        }
    }
    if !sweep {
        let w = omega
            .single()
            .ok_or_else(|| usage("an omega grid needs --sweep omega"))?;
        let r = phase::optimize(&game, &pop, scheme, w)?;
        return Ok(Produced::single(serde_json::to_value(r)?));
    }
    let mut table = Table::new(vec![
        "omega",
        "theta_star",
        "cost_star",
        "branch",
        "theta0",
        "cost_theta0",
        "theta2",
        "cost_theta2",
        "beta_star",
        "heuristic",
    ]);
    table.rows = par_rows(&omega.points(), |w| {
        Ok(optimize_row(&phase::optimize(&game, &pop, scheme, w)?, w))
    })?;
    Ok(Produced::table(table))
}

pub fn phase(args: PhaseArgs, res: &mut Resolver) -> Result<Value> {
    let game = args.game.resolve(res, false)?;
    let n = res.req("N", args.pop_size)?;
    let scheme = res.req("scheme", args.scheme)?;
    if let Some(g) = &game {
        PopulationConfig::new(n, 1.0)?.validate_for(g)?;
    }
    let a = PhaseAnalysis::new(n, scheme)?;
    let (delta, beta_star) = match &game {
        Some(g) => {
            let delta = games::delta(g, n)?;
            (Some(delta), Some(a.beta_star(delta)?))
        }
        None => (None, None),
    };
    // Only the reward constants at N = 3 and N = 50 have published reference values.
    let derived = !(scheme == IncentiveScheme::Reward && (n == 3 || n == 50));
    Ok(json!({
        "pop_size": n,
        "scheme": scheme,
        "F_star": a.f_star,
        "u_star": a.u_star,
        "F_star_derived": derived,
        "beta_star": beta_star,
        "delta": delta,
        "P_roots": a.p_roots,
        "regions": a.regions,
        "heuristic": n > GUARANTEED_MAX_N,
    }))
}

pub fn simulate(args: SimulateArgs, res: &mut Resolver) -> Result<Produced> {
    let game = args.game.resolve(res, true)?.expect("required game");
    let pop = population(res, args.pop_size, args.beta, &game)?;
    let scheme = res.req("scheme", args.scheme)?;
    let delta = games::delta(&game, pop.size)?;
    let theta = match (res.opt("theta", args.theta)?, res.opt("x", args.x)?) {
        (Some(t), None) => t,
        (None, Some(x)) => {
            if pop.beta == 0.0 {
                return Err(usage("--x needs beta > 0"));
            }
            x / pop.beta - delta
        }
        (Some(_), Some(_)) => return Err(usage("give either --theta or --x, not both")),
        (None, None) => return Err(usage("missing required --theta (or --x)")),
    };
    let runs = res.or("runs", args.runs, 100_000)?;
    let seed = res.or("seed", args.seed, 0)?;
    let step_cap = res.or("step-cap", args.step_cap, montecarlo::DEFAULT_STEP_CAP)?;
    let check = res.flag("check", args.check)?;
    if runs == 0 {
        return Err(usage("--runs must be >= 1"));
    }
    let cfg = SimConfig {
        step_cap,
        ..SimConfig::new(game, pop, scheme, theta, runs, seed)?
    };
    cfg.validate()?;
    let est = montecarlo::simulate_visits(&cfg)?;

    let x = chain::selection_gap(&game, &pop, theta)?;
    let nmat = chain::fundamental_matrix(&chain::TransitionMatrix::from_gap(pop.size, x)?)?;
    let visits = (1..pop.size)
        .map(|i| nmat.expected_visits(i))
        .collect::<incentive_core::Result<Vec<f64>>>()?;
    let total_visits: f64 = visits.iter().sum();
    let total_cost = cost::expected_cost(&game, &pop, scheme, theta)?;
    let z = |sim: f64, se: f64, exact: f64| {
        let diff = (sim - exact).abs();
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let z_visits: Vec<f64> = (0..visits.len())
        .map(|k| z(est.mean_visits[k], est.visits_standard_error[k], visits[k]))
        .collect();
    let z_total = z(
        est.mean_total_visits,
        est.total_visits_standard_error,
        total_visits,
    );
    let z_cost = z(
        est.mean_total_cost,
        est.total_cost_standard_error,
        total_cost,
    );
    let passed = z_total <= 3.0 && z_cost <= 3.0 && est.truncated_runs == 0;

    let value = json!({
        "theta": theta,
        "x": x,
        "estimate": est,
        "exact": { "visits": visits, "total_visits": total_visits, "total_cost": total_cost },
        "z_scores": { "visits": z_visits, "total_visits": z_total, "total_cost": z_cost },
        "check": { "threshold_sigma": 3.0, "passed": passed },
    });
    let failure = (check && !passed).then(|| {
        CliError::CheckFailed(format!(
            "3-sigma check failed: z(total visits) = {z_total:.3}, z(total cost) = {z_cost:.3}, truncated = {}",
            est.truncated_runs
        ))
    });
    Ok(Produced {
        failure,
        ..Produced::single(value)
    })
}

pub fn validate(
    args: ValidateArgs,
    res: &mut Resolver,
) -> Result<(Vec<validation::CriterionReport>, Table)> {
    let ids: Vec<u8> = match res.opt("only", args.only)? {
        None => validation::criterion_ids(),
        Some(list) => list
            .split(',')
            .map(|t| {
                let id = t
                    .trim()
                    .parse::<u8>()
                    .map_err(|_| usage(format!("bad criterion id '{t}'")))?;
                if validation::criterion_ids().contains(&id) {
                    Ok(id)
                } else {
                    Err(usage(format!("no criterion {id}")))
                }
            })
            .collect::<Result<_>>()?,
    };
    let reports: Vec<_> = ids
        .iter()
        .filter_map(|&id| validation::run_criterion(id))
        .collect();
    let mut table = Table::new(vec![
        "id",
        "title",
        "passed",
        "elapsed_secs",
        "budget_secs",
        "detail",
    ]);
    for r in &reports {
        table.rows.push(vec![
            Cell::Num(Some(r.id as f64)),
            r.title.clone().into(),
            r.passed.into(),
            r.elapsed_secs.into(),
            r.budget_secs.into(),
            r.detail.clone().into(),
        ]);
    }
    Ok((reports, table))
}

impl Produced {
    pub fn single(v: Value) -> Self {
        Produced {
            payload: Payload::Single(v),
            default_format: Format::Json,
            failure: None,
        }
    }

    pub fn table(t: Table) -> Self {
        Produced {
            payload: Payload::Table(t),
            default_format: Format::Csv,
            failure: None,
        }
    }
}
