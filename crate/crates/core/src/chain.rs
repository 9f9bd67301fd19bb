//! The birth–death imitation chain on `{S_0, …, S_N}` (state = number of
//! cooperators) under the pairwise-comparison (Fermi) rule.
//!
//! Only the transient states `S_1..S_{N-1}` carry matrix entries. Index `i`
//! in every public method is the cooperator count, i.e. 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{self, GameSpec, PopulationConfig};

/// Which institutional incentive is paid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncentiveScheme {
    /// Each cooperator receives `θ` per time step.
    Reward,
    /// Each defector is fined `θ` per time step.
    Punishment,
}

impl IncentiveScheme {
    /// Number of individuals the institution pays for in state `S_i`.
    pub fn targets(self, pop_size: usize, i: usize) -> usize {
        match self {
            IncentiveScheme::Reward => i,
            IncentiveScheme::Punishment => pop_size - i,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            IncentiveScheme::Reward => "reward",
            IncentiveScheme::Punishment => "punishment",
        }
    }
}

impl std::str::FromStr for IncentiveScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reward" | "r" => Ok(IncentiveScheme::Reward),
            "punishment" | "punish" | "p" => Ok(IncentiveScheme::Punishment),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Fermi imitation probability `1 / (1 + e^{-x})`, evaluated without overflow.
pub fn fermi(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// The selection-weighted payoff gap `x = β(δ + θ)` that drives the chain.
pub fn selection_gap(game: &GameSpec, pop: &PopulationConfig, theta: f64) -> Result<f64> {
    pop.validate_for(game)?;
    if !theta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "theta must be finite, got {theta}"
        )));
    }
    Ok(pop.beta * (games::delta(game, pop.size)? + theta))
}

/// Tridiagonal transition matrix between the transient states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    up: Vec<f64>,
    down: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds the chain for a population of `pop_size` at gap `x = β(δ+θ)`.
    pub fn from_gap(pop_size: usize, x: f64) -> Result<Self> {
        if pop_size < 2 {
            return Err(Error::InvalidPopulation(format!("N = {pop_size} < 2")));
        }
        if x.is_nan() {
            return Err(Error::InvalidParameter("selection gap is NaN".into()));
        }
        let p_up = fermi(x);
        let p_down = fermi(-x);
        let n2 = (pop_size * pop_size) as f64;
        let (up, down) = (1..pop_size)
            .map(|i| {
                let mix = (i * (pop_size - i)) as f64 / n2;
                (mix * p_up, mix * p_down)
            })
            .unzip();
        Ok(TransitionMatrix {
            size: pop_size,
            up,
            down,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn check(&self, i: usize) -> Result<usize> {
        if i == 0 || i >= self.size {
            return Err(Error::IndexOutOfRange {
                index: i,
                lo: 1,
                hi: self.size - 1,
            });
        }
        Ok(i - 1)
    }

    /// `u_{i,i+1}`.
    pub fn up(&self, i: usize) -> Result<f64> {
        Ok(self.up[self.check(i)?])
    }

    /// `u_{i,i-1}`.
    pub fn down(&self, i: usize) -> Result<f64> {
        Ok(self.down[self.check(i)?])
    }

    /// `u_{i,i}`.
    pub fn stay(&self, i: usize) -> Result<f64> {
        let k = self.check(i)?;
        Ok(1.0 - self.up[k] - self.down[k])
    }

    /// Entry `u_{i,j}` for transient states `i, j`.
    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        self.check(j)?;
        match j as isize - i as isize {
            0 => self.stay(i),
            1 => self.up(i),
            -1 => self.down(i),
            _ => {
                self.check(i)?;
                Ok(0.0)
            }
        }
    }

    /// Solves `(I − U) z = rhs`, i.e. returns `𝒩 · rhs`.
    ///
    /// `I − U` has diagonal `u_{i,i+1} + u_{i,i-1}` and off-diagonals
    /// `−u_{i,i±1}`; it is weakly diagonally dominant with strict dominance in
    /// the first and last rows, so elimination without pivoting is stable.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.size - 1;
        if rhs.len() != m {
            return Err(Error::InvalidParameter(format!(
                "right-hand side has length {}, expected {m}",
                rhs.len()
            )));
        }
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        for k in 0..m {
            let diag = self.up[k] + self.down[k];
            let sub = if k > 0 { -self.down[k] } else { 0.0 };
            let denom = if k > 0 { diag - sub * c[k - 1] } else { diag };
            if !(denom.is_finite() && denom > 0.0) {
                return Err(Error::SingularSystem(k + 1));
            }
            c[k] = -self.up[k] / denom;
            d[k] = if k > 0 {
                (rhs[k] - sub * d[k - 1]) / denom
            } else {
                rhs[k] / denom
            };
        }
        for k in (0..m.saturating_sub(1)).rev() {
            d[k] -= c[k] * d[k + 1];
        }
        Ok(d)
    }
}

/// Chain for a concrete game, population and incentive `θ`.
pub fn build_transition_matrix(
    game: &GameSpec,
    pop: &PopulationConfig,
    theta: f64,
) -> Result<TransitionMatrix> {
    TransitionMatrix::from_gap(pop.size, selection_gap(game, pop, theta)?)
}

/// `𝒩 = (I − U)^{-1}`, dense, row-major over transient states.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl FundamentalMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    /// `n_{ij}`: expected time steps spent in `S_j` starting from `S_i`.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        let m = self.size - 1;
        for idx in [i, j] {
            if idx == 0 || idx > m {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    lo: 1,
                    hi: m,
                });
            }
        }
        Ok(self.entries[(i - 1) * m + (j - 1)])
    }

    /// Expected visits to `S_i` when the mutant starts at `S_1` or `S_{N-1}`
    /// with equal probability.
    pub fn expected_visits(&self, i: usize) -> Result<f64> {
        Ok(0.5 * (self.get(1, i)? + self.get(self.size - 1, i)?))
    }
}

/// Inverts `I − U` one column at a time with the tridiagonal solver.
pub fn fundamental_matrix(u: &TransitionMatrix) -> Result<FundamentalMatrix> {
    let m = u.size - 1;
    let mut entries = vec![0.0; m * m];
    let mut e = vec![0.0; m];
    for j in 0..m {
        e.fill(0.0);
        e[j] = 1.0;
        let col = u.solve(&e)?;
        for (i, v) in col.into_iter().enumerate() {
            entries[i * m + j] = v;
        }
    }
    Ok(FundamentalMatrix {
        size: u.size,
        entries,
    })
}

/// Expected visits to `S_i`; see [`FundamentalMatrix::expected_visits`].
pub fn expected_visits(nmat: &FundamentalMatrix, i: usize) -> Result<f64> {
    nmat.expected_visits(i)
}

/// Direction of a fixation event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// A single cooperator takes over a population of defectors (`ρ_{D,C}`).
    DefectorToCooperator,
    /// A single defector takes over a population of cooperators (`ρ_{C,D}`).
    CooperatorToDefector,
}

/// `ln ρ` via the product–sum formula `ρ = (1 + Σ_i Π_{k≤i} T⁻(k)/T⁺(k))^{-1}`,
/// where `T±` count the mutant type. Products are accumulated as log sums.
pub fn log_fixation_probability(
    game: &GameSpec,
    pop: &PopulationConfig,
    theta: f64,
    direction: Direction,
) -> Result<f64> {
    pop.validate_for(game)?;
    if !theta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "theta must be finite, got {theta}"
        )));
    }
    let n = pop.size;
    let beta = pop.beta;
    // Running log-sum-exp over {0, L_1, …, L_{N-1}}.
    let mut acc_max = 0.0f64;
    let mut acc_sum = 1.0f64;
    let mut log_prod = 0.0f64;
    for k in 1..n {
        // Cooperator payoff advantage with the incentive applied at k cooperators.
        let gap = match direction {
            Direction::DefectorToCooperator => {
                games::payoff_c(game, n, k)? - games::payoff_d(game, n, k)? + theta
            }
            Direction::CooperatorToDefector => {
                // k defectors, N - k cooperators; mutant type is D.
                games::payoff_d(game, n, n - k)? - games::payoff_c(game, n, n - k)? - theta
            }
        };
        let g = beta * gap;
        // T⁻/T⁺ = (1 + e^{-g}) / (1 + e^{g}).
        log_prod += softplus(-g) - softplus(g);
        if log_prod > acc_max {
            acc_sum = acc_sum * (acc_max - log_prod).exp() + 1.0;
            acc_max = log_prod;
        } else {
            acc_sum += (log_prod - acc_max).exp();
        }
    }
    Ok(-(acc_max + acc_sum.ln()))
}

pub fn fixation_probability(
    game: &GameSpec,
    pop: &PopulationConfig,
    theta: f64,
    direction: Direction,
) -> Result<f64> {
    Ok(log_fixation_probability(game, pop, theta, direction)?.exp())
}

/// Long-run frequency of cooperation in the small-mutation limit,
/// `1 / (1 + e^{-β(N-1)(δ+θ)})`.
pub fn cooperation_frequency(game: &GameSpec, pop: &PopulationConfig, theta: f64) -> Result<f64> {
    let x = selection_gap(game, pop, theta)?;
    Ok(fermi((pop.size - 1) as f64 * x))
}

/// Cooperation frequency `ρ_{D,C} / (ρ_{D,C} + ρ_{C,D})` from the two
/// fixation probabilities.
pub fn cooperation_frequency_from_fixation(
    game: &GameSpec,
    pop: &PopulationConfig,
    theta: f64,
) -> Result<f64> {
    let to_c = log_fixation_probability(game, pop, theta, Direction::DefectorToCooperator)?;
    let to_d = log_fixation_probability(game, pop, theta, Direction::CooperatorToDefector)?;
    Ok(fermi(to_c - to_d))
}

/// Minimum incentive `θ₀(ω)` guaranteeing a cooperation frequency of at
/// least `omega`.
pub fn theta_min(game: &GameSpec, pop: &PopulationConfig, omega: f64) -> Result<f64> {
    pop.validate_for(game)?;
    pop.require_selection()?;
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::InvalidOmega(omega));
    }
    let delta = games::delta(game, pop.size)?;
    let logit = omega.ln() - (-omega).ln_1p();
    Ok(logit / ((pop.size - 1) as f64 * pop.beta) - delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dg(b: f64, c: f64) -> GameSpec {
        GameSpec::donation(b, c).unwrap()
    }

    fn pop(n: usize, beta: f64) -> PopulationConfig {
        PopulationConfig::new(n, beta).unwrap()
    }

    // Dense Gauss–Jordan inverse, used only as an oracle for small N.
    fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = a.len();
        let mut aug: Vec<Vec<f64>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..m).map(|j| if i == j { 1.0 } else { 0.0 }));
                r
            })
            .collect();
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
                .unwrap();
            aug.swap(col, piv);
            let p = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= p;
            }
            for r in 0..m {
                if r != col {
                    let f = aug[r][col];
                    let pivot_row = aug[col].clone();
                    for (v, pv) in aug[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        aug.into_iter().map(|r| r[m..].to_vec()).collect()
    }

    #[test]
    fn zero_gap_splits_moves_evenly() {
        let u = TransitionMatrix::from_gap(7, 0.0).unwrap();
        for i in 1..7 {
            let half = (i * (7 - i)) as f64 / 98.0;
            assert_eq!(u.up(i).unwrap(), half);
            assert_eq!(u.down(i).unwrap(), half);
        }
    }

    #[test]
    fn deterministic_limit_saturates() {
        let u = TransitionMatrix::from_gap(3, 1e4).unwrap();
        assert_eq!(u.up(1).unwrap(), 2.0 / 9.0);
        assert_eq!(u.down(1).unwrap(), 0.0);
        let u = TransitionMatrix::from_gap(3, -1e4).unwrap();
        assert_eq!(u.up(2).unwrap(), 0.0);
    }

    #[test]
    fn transition_entry_reference() {
        // DG(2,1), N=3 has δ = -2, so θ = 0 at β = 1 gives x = -2.
        let g = dg(2.0, 1.0);
        let u = build_transition_matrix(&g, &pop(3, 1.0), 0.0).unwrap();
        let expect = (2.0 / 9.0) / (1.0 + 2f64.exp());
        assert!((u.up(1).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.026_490).abs() < 1e-6);
    }

    #[test]
    fn rows_are_stochastic_and_tridiagonal() {
        for &x in &[-30.0, -1.0, 0.0, 0.3, 12.0] {
            let u = TransitionMatrix::from_gap(9, x).unwrap();
            for i in 1..9 {
                let row: f64 = (1..9).map(|j| u.entry(i, j).unwrap()).sum::<f64>()
                    + if i == 1 { u.down(1).unwrap() } else { 0.0 }
                    + if i == 8 { u.up(8).unwrap() } else { 0.0 };
                assert!((row - 1.0).abs() < 1e-15);
                for j in 1..9 {
                    let e = u.entry(i, j).unwrap();
                    assert!((0.0..=1.0).contains(&e));
                    if (i as isize - j as isize).abs() >= 2 {
                        assert_eq!(e, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn mirror_symmetry_is_exact() {
        for n in [2usize, 3, 10, 57] {
            for &x in &[0.1, 1.7, 40.0] {
                let fwd = TransitionMatrix::from_gap(n, x).unwrap();
                let rev = TransitionMatrix::from_gap(n, -x).unwrap();
                for i in 1..n {
                    assert_eq!(fwd.up(i).unwrap(), rev.down(n - i).unwrap());
                }
            }
        }
    }

    #[test]
    fn single_transient_state() {
        let u = TransitionMatrix::from_gap(2, 0.0).unwrap();
        assert_eq!(u.stay(1).unwrap(), 0.75);
        let nm = fundamental_matrix(&u).unwrap();
        assert!((nm.get(1, 1).unwrap() - 4.0).abs() < 1e-14);
        assert!((expected_visits(&nm, 1).unwrap() - 4.0).abs() < 1e-14);
        // Any gap: the escape rate stays 1/4.
        let nm = fundamental_matrix(&TransitionMatrix::from_gap(2, 3.3).unwrap()).unwrap();
        assert!((nm.get(1, 1).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn three_state_exact_inverse() {
        // I − U = [[2/9, -1/9], [-1/9, 2/9]] → inverse [[6, 3], [3, 6]].
        let nm = fundamental_matrix(&TransitionMatrix::from_gap(3, 0.0).unwrap()).unwrap();
        let expect = [[6.0, 3.0], [3.0, 6.0]];
        for i in 1..3 {
            for j in 1..3 {
                assert!((nm.get(i, j).unwrap() - expect[i - 1][j - 1]).abs() < 1e-13);
            }
        }
        assert_eq!(
            expected_visits(&nm, 1).unwrap(),
            expected_visits(&nm, 2).unwrap()
        );
    }

    #[test]
    fn matches_dense_inverse_and_residual() {
        for (n, x) in [(5usize, 0.7), (12, -2.5), (20, 0.01)] {
            let u = TransitionMatrix::from_gap(n, x).unwrap();
            let m = n - 1;
            let a: Vec<Vec<f64>> = (1..n)
                .map(|i| {
                    (1..n)
                        .map(|j| (if i == j { 1.0 } else { 0.0 }) - u.entry(i, j).unwrap())
                        .collect()
                })
                .collect();
            let oracle = dense_inverse(&a);
            let nm = fundamental_matrix(&u).unwrap();
            for i in 0..m {
                for j in 0..m {
                    let v = nm.get(i + 1, j + 1).unwrap();
                    assert!(v > 0.0);
                    assert!((v - oracle[i][j]).abs() <= 1e-9 * oracle[i][j].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn residual_small_up_to_two_hundred() {
        for n in [50usize, 200] {
            for &x in &[-3.0, 0.0, 0.5] {
                let u = TransitionMatrix::from_gap(n, x).unwrap();
                let nm = fundamental_matrix(&u).unwrap();
                let m = n - 1;
                let mut worst = 0.0f64;
                for i in 1..=m {
                    for j in 1..=m {
                        // Row i of (I − U) times column j of 𝒩.
                        let mut s = (1.0 - u.stay(i).unwrap()) * nm.get(i, j).unwrap();
                        if i > 1 {
                            s -= u.down(i).unwrap() * nm.get(i - 1, j).unwrap();
                        }
                        if i < m {
                            s -= u.up(i).unwrap() * nm.get(i + 1, j).unwrap();
                        }
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((s - target).abs());
                        assert!(nm.get(i, j).unwrap() > 0.0);
                    }
                }
                assert!(worst <= 1e-10, "N={n} x={x} residual {worst}");
            }
        }
    }

    #[test]
    fn neutral_fixation_is_one_over_n() {
        let g = dg(2.0, 1.0);
        for dir in [
            Direction::DefectorToCooperator,
            Direction::CooperatorToDefector,
        ] {
            let rho = fixation_probability(&g, &pop(10, 0.0), 1.3, dir).unwrap();
            assert!((rho - 0.1).abs() < 1e-14);
            // θ = -δ makes every ratio term one.
            let rho = fixation_probability(&g, &pop(10, 2.0), 1.0 + 2.0 / 9.0, dir).unwrap();
            assert!((rho - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn fixation_ratio_reference() {
        let g = dg(2.0, 1.0);
        let p = pop(3, 1.0);
        let a = log_fixation_probability(&g, &p, 3.0, Direction::DefectorToCooperator).unwrap();
        let b = log_fixation_probability(&g, &p, 3.0, Direction::CooperatorToDefector).unwrap();
        assert!(((a - b) - 2.0).abs() < 1e-12);
        // Direct product–sum for N=3: ρ_DC = 1/(1 + e^{-1} + e^{-2}).
        let direct = 1.0 / (1.0 + (-1f64).exp() + (-2f64).exp());
        assert!((a.exp() - direct).abs() < 1e-15);
    }

    #[test]
    fn theta_min_reference_values() {
        let g = dg(1.8, 1.0);
        let t = theta_min(&g, &pop(3, 1.0), 0.7).unwrap();
        assert!((t - 2.323_649).abs() < 1e-6);
        assert!((cooperation_frequency(&g, &pop(3, 1.0), t).unwrap() - 0.7).abs() < 1e-12);
        assert!((theta_min(&g, &pop(3, 10.0), 0.25).unwrap() - 1.845).abs() < 1e-4);
        assert!((theta_min(&g, &pop(3, 10.0), 0.999_999).unwrap() - 2.59078).abs() < 1e-5);
        assert!((theta_min(&g, &pop(3, 10.0), 0.5).unwrap() - 1.9).abs() < 1e-15);
        assert!(matches!(
            theta_min(&g, &pop(3, 10.0), 1.0),
            Err(Error::InvalidOmega(_))
        ));
        assert!(matches!(
            theta_min(&g, &pop(3, 10.0), 0.0),
            Err(Error::InvalidOmega(_))
        ));
        assert!(matches!(
            theta_min(&g, &pop(3, 0.0), 0.5),
            Err(Error::NeutralSelection)
        ));
    }

    #[test]
    fn cooperation_frequency_limits() {
        let g = dg(1.8, 1.0);
        let p = pop(3, 1.0);
        assert!((cooperation_frequency(&g, &p, 1.9).unwrap() - 0.5).abs() < 1e-15);
        assert!(cooperation_frequency(&g, &p, 1e3).unwrap() > 1.0 - 1e-15);
        assert!(cooperation_frequency(&g, &p, -1e3).unwrap() < 1e-300);
    }

    proptest! {
        #[test]
        fn frequency_paths_agree(
            n in 3usize..30, beta in 1e-3f64..10.0, theta in -5.0f64..5.0, extra in 0.05f64..3.0,
        ) {
            let g = dg(1.0 + extra, 1.0);
            let p = pop(n, beta);
            let a = cooperation_frequency(&g, &p, theta).unwrap();
            let b = cooperation_frequency_from_fixation(&g, &p, theta).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }

        #[test]
        fn theta_min_round_trip(n in 3usize..60, beta in 0.01f64..20.0, omega in 0.001f64..0.999) {
            let g = if n >= 5 { GameSpec::public_goods(3.0, 5, 1.0).unwrap() } else { dg(2.0, 1.0) };
            let p = pop(n, beta);
            let t = theta_min(&g, &p, omega).unwrap();
            prop_assert!((cooperation_frequency(&g, &p, t).unwrap() - omega).abs() <= 1e-10);
        }

        #[test]
        fn fixation_ratio_identity(
            n in 2usize..40, beta in 1e-3f64..10.0, theta in -5.0f64..5.0, extra in 0.05f64..3.0,
        ) {
            let g = dg(1.0 + extra, 1.0);
            let p = pop(n, beta);
            let to_c = log_fixation_probability(&g, &p, theta, Direction::DefectorToCooperator).unwrap();
            let to_d = log_fixation_probability(&g, &p, theta, Direction::CooperatorToDefector).unwrap();
            let expected = beta * (n - 1) as f64 * (games::delta(&g, n).unwrap() + theta);
            prop_assert!(((to_c - to_d) - expected).exp_m1().abs() <= 1e-8);
        }
    }
}
