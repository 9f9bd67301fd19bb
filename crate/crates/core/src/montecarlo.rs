//! Direct simulation of the imitation chain, used as an oracle for the
//! fundamental-matrix quantities.
//!
//! Each run starts at `S_1` or `S_{N−1}` with equal probability and is
//! followed to absorption. The time spent in a state is drawn in one go from
//! the geometric holding-time distribution; every step in a state, including
//! self-loops, counts as a visit and accrues that state's incentive cost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{self, fermi, IncentiveScheme};
use crate::error::{Error, Result};
use crate::games::{GameSpec, PopulationConfig};

/// Per-run step budget; longer runs are cut off and reported.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

// Runs are aggregated in fixed blocks so the work split does not depend on
// the thread count.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub game: GameSpec,
    pub pop: PopulationConfig,
    pub scheme: IncentiveScheme,
    pub theta: f64,
    pub runs: u64,
    pub seed: u64,
    pub step_cap: u64,
}

impl SimConfig {
    pub fn new(
        game: GameSpec,
        pop: PopulationConfig,
        scheme: IncentiveScheme,
        theta: f64,
        runs: u64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = SimConfig {
            game,
            pop,
            scheme,
            theta,
            runs,
            seed,
            step_cap: DEFAULT_STEP_CAP,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pop.validate_for(&self.game)?;
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        if self.step_cap == 0 {
            return Err(Error::InvalidParameter("step cap must be >= 1".into()));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "theta must be finite, got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Sample means with their standard errors (`s / √runs`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub runs: u64,
    /// Indexed by `i − 1` for transient state `S_i`.
    pub mean_visits: Vec<f64>,
    pub visits_standard_error: Vec<f64>,
    /// Steps to absorption, i.e. visits summed over all transient states.
    pub mean_total_visits: f64,
    pub total_visits_standard_error: f64,
    pub mean_total_cost: f64,
    pub total_cost_standard_error: f64,
    pub truncated_runs: u64,
}

#[derive(Clone)]
struct Sums {
    visits: Vec<u128>,
    visits_sq: Vec<u128>,
    steps: u128,
    steps_sq: u128,
    paid: u128,
    paid_sq: u128,
    truncated: u64,
}

impl Sums {
    fn new(m: usize) -> Self {
        Sums {
            visits: vec![0; m],
            visits_sq: vec![0; m],
            steps: 0,
            steps_sq: 0,
            paid: 0,
            paid_sq: 0,
            truncated: 0,
        }
    }

    fn merge(mut self, other: Sums) -> Sums {
        for (a, b) in self.visits.iter_mut().zip(&other.visits) {
            *a += b;
        }
        for (a, b) in self.visits_sq.iter_mut().zip(&other.visits_sq) {
            *a += b;
        }
        self.steps += other.steps;
        self.steps_sq += other.steps_sq;
        self.paid += other.paid;
        self.paid_sq += other.paid_sq;
        self.truncated += other.truncated;
        self
    }
}

fn mean_and_se(sum: u128, sum_sq: u128, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    // Exact integer numerator of the sample variance: n Σx² − (Σx)².
    let spread = (n as u128 * sum_sq).saturating_sub(sum * sum) as f64;
    let var = spread / (nf * (nf - 1.0));
    (mean, (var / nf).sqrt())
}

/// Simulates `cfg.runs` independent trajectories. Run `k` draws from the
/// ChaCha8 stream `k` of `cfg.seed`, so results do not depend on scheduling.
pub fn simulate_visits(cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    let n = cfg.pop.size;
    let m = n - 1;
    let x = chain::selection_gap(&cfg.game, &cfg.pop, cfg.theta)?;
    let p_up = fermi(x);
    let n2 = (n * n) as f64;
    // Leaving probability of S_i is u_{i,i+1} + u_{i,i−1} = i(N−i)/N².
    let holding: Vec<Geometric> = (1..n)
        .map(|i| Geometric::new((i * (n - i)) as f64 / n2).expect("leaving probability in (0, 1]"))
        .collect();
    let weights: Vec<u128> = (1..n).map(|i| cfg.scheme.targets(n, i) as u128).collect();

    let chunks = cfg.runs.div_ceil(CHUNK);
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sums = Sums::new(m);
            let mut visits = vec![0u64; m];
            for run in c * CHUNK..((c + 1) * CHUNK).min(cfg.runs) {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(run);
                visits.fill(0);
                let mut state = if rng.random_bool(0.5) { 1 } else { n - 1 };
                let mut steps = 0u64;
                while state != 0 && state != n {
                    let stay = 1 + holding[state - 1].sample(&mut rng);
                    let take = stay.min(cfg.step_cap - steps);
                    visits[state - 1] += take;
                    steps += take;
                    if steps >= cfg.step_cap {
                        sums.truncated += 1;
                        break;
                    }
                    state = if rng.random_bool(p_up) {
                        state + 1
                    } else {
                        state - 1
                    };
                }
                let mut paid = 0u128;
                for k in 0..m {
                    let v = visits[k] as u128;
                    sums.visits[k] += v;
                    sums.visits_sq[k] += v * v;
                    paid += weights[k] * v;
                }
                let s = steps as u128;
                sums.steps += s;
                sums.steps_sq += s * s;
                sums.paid += paid;
                sums.paid_sq += paid * paid;
            }
            sums
        })
        .reduce(|| Sums::new(m), Sums::merge);

    let (mean_visits, visits_standard_error) = (0..m)
        .map(|k| mean_and_se(sums.visits[k], sums.visits_sq[k], cfg.runs))
        .unzip();
    let (mean_total_visits, total_visits_standard_error) =
        mean_and_se(sums.steps, sums.steps_sq, cfg.runs);
    let (mean_paid, paid_se) = mean_and_se(sums.paid, sums.paid_sq, cfg.runs);
    Ok(SimEstimate {
        runs: cfg.runs,
        mean_visits,
        visits_standard_error,
        mean_total_visits,
        total_visits_standard_error,
        mean_total_cost: cfg.theta * mean_paid,
        total_cost_standard_error: cfg.theta.abs() * paid_se,
        truncated_runs: sums.truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_transition_matrix, fundamental_matrix};
    use crate::cost::expected_cost;
    use crate::games;

    fn dg() -> GameSpec {
        GameSpec::donation(2.0, 1.0).unwrap()
    }

    fn edge_config(n: usize, runs: u64, seed: u64) -> SimConfig {
        let theta = -games::delta(&dg(), n).unwrap();
        SimConfig::new(
            dg(),
            PopulationConfig::new(n, 1.0).unwrap(),
            IncentiveScheme::Reward,
            theta,
            runs,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn two_state_chain_visits() {
        let est = simulate_visits(&edge_config(2, 100_000, 7)).unwrap();
        assert_eq!(est.mean_visits.len(), 1);
        assert!((est.mean_visits[0] - 4.0).abs() <= 3.0 * est.visits_standard_error[0]);
        assert_eq!(est.mean_visits[0], est.mean_total_visits);
    }

    #[test]
    fn three_state_cost_at_knife_edge() {
        let cfg = edge_config(3, 100_000, 11);
        let est = simulate_visits(&cfg).unwrap();
        let per_theta = est.mean_total_cost / cfg.theta;
        let se = est.total_cost_standard_error / cfg.theta;
        assert!((per_theta - 13.5).abs() <= 3.0 * se, "{per_theta} ± {se}");
    }

    #[test]
    fn visits_match_fundamental_matrix() {
        let game = dg();
        let pop = PopulationConfig::new(5, 0.5).unwrap();
        let cfg = SimConfig::new(game, pop, IncentiveScheme::Punishment, 0.5, 100_000, 3).unwrap();
        let est = simulate_visits(&cfg).unwrap();
        let nmat = fundamental_matrix(&build_transition_matrix(&game, &pop, 0.5).unwrap()).unwrap();
        for i in 1..5 {
            let exact = nmat.expected_visits(i).unwrap();
            assert!(
                (est.mean_visits[i - 1] - exact).abs() <= 3.0 * est.visits_standard_error[i - 1]
            );
        }
        let e = expected_cost(&game, &pop, IncentiveScheme::Punishment, 0.5).unwrap();
        assert!((est.mean_total_cost - e).abs() <= 3.0 * est.total_cost_standard_error);
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let cfg = edge_config(6, 5_000, 42);
        let a = simulate_visits(&cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_visits(&cfg).unwrap());
        assert_eq!(a, b);
        let c = simulate_visits(&SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn standard_error_shrinks_with_runs() {
        let small = simulate_visits(&edge_config(8, 40_000, 5)).unwrap();
        let large = simulate_visits(&edge_config(8, 80_000, 6)).unwrap();
        let ratio = large.total_cost_standard_error / small.total_cost_standard_error;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn step_cap_truncates() {
        let cfg = SimConfig {
            step_cap: 3,
            ..edge_config(10, 200, 1)
        };
        let est = simulate_visits(&cfg).unwrap();
        assert!(est.truncated_runs > 0);
        assert!(est.mean_total_visits <= 3.0);
    }

    #[test]
    fn rejects_invalid_configs() {
        let pop = PopulationConfig::new(4, 1.0).unwrap();
        assert!(SimConfig::new(dg(), pop, IncentiveScheme::Reward, 1.0, 0, 1).is_err());
        assert!(SimConfig::new(dg(), pop, IncentiveScheme::Reward, f64::NAN, 10, 1).is_err());
    }
}
