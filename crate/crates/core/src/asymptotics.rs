//! Closed-form reference values for the expected cost: finite-population
//! bounds and the weak-selection, strong-selection and large-population
//! limits.

use serde::{Deserialize, Serialize};

use crate::chain::IncentiveScheme;
use crate::cost;
use crate::error::{Error, Result};
use crate::games::{GameSpec, PopulationConfig};

/// Euler–Mascheroni constant, to the ten decimals used by the normalizer.
pub const EULER_GAMMA: f64 = 0.577_215_664_9;

/// `H_N = Σ_{j=1}^{N−1} 1/j` (note the upper limit `N − 1`).
pub fn harmonic(pop_size: usize) -> Result<f64> {
    if pop_size < 2 {
        return Err(Error::InvalidPopulation(format!(
            "harmonic number needs N >= 2, got {pop_size}"
        )));
    }
    // Smallest terms first.
    Ok((1..pop_size).rev().map(|j| 1.0 / j as f64).sum())
}

/// `lim_{β→0} E(θ) = N² θ H_N`.
pub fn weak_selection_limit(pop_size: usize, theta: f64) -> Result<f64> {
    let n = pop_size as f64;
    Ok(n * n * theta * harmonic(pop_size)?)
}

/// Position of `θ` relative to the knife edge `θ = −δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `θ < −δ`: defectors still win under strong selection.
    BelowEdge,
    /// `θ = −δ`: the neutral chain.
    Edge,
    /// `θ > −δ`: cooperators win under strong selection.
    AboveEdge,
}

impl Regime {
    pub fn classify(theta: f64, delta: f64) -> Regime {
        let side = theta + delta;
        if side < 0.0 {
            Regime::BelowEdge
        } else if side > 0.0 {
            Regime::AboveEdge
        } else {
            Regime::Edge
        }
    }
}

/// `lim_{β→∞} E(θ)` in the given regime.
pub fn large_selection_limit(
    pop_size: usize,
    theta: f64,
    scheme: IncentiveScheme,
    regime: Regime,
) -> Result<f64> {
    if pop_size < 3 {
        return Err(Error::InvalidPopulation(format!("N = {pop_size} < 3")));
    }
    let n = pop_size as f64;
    let h = harmonic(pop_size)?;
    let low = n * n * theta / 2.0 * (h + 1.0 / (n - 1.0));
    let high = n * n * theta / 2.0 * (1.0 + h);
    Ok(match (scheme, regime) {
        (_, Regime::Edge) => n * n * theta * h,
        (IncentiveScheme::Reward, Regime::BelowEdge)
        | (IncentiveScheme::Punishment, Regime::AboveEdge) => low,
        (IncentiveScheme::Reward, Regime::AboveEdge)
        | (IncentiveScheme::Punishment, Regime::BelowEdge) => high,
    })
}

/// Limit of `E / ((N²θ/2)(ln N + γ))` as `N → ∞`.
///
/// For the PGG the exponent `−β|θ − c| + βcr/n` equals `−β|θ + δ_∞|`, with
/// `δ_∞ = −c(1 − r/n)`, only while `θ < c(1 − r/n)`; beyond that it
/// overstates the limit.
pub fn infinite_population_ratio(game: &GameSpec, beta: f64, theta: f64) -> Result<f64> {
    game.validate()?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be > 0, got {beta}"
        )));
    }
    Ok(match *game {
        GameSpec::DonationGame { c, .. } => 1.0 + (-beta * (theta - c).abs()).exp(),
        GameSpec::PublicGoodsGame { r, n, c } => {
            1.0 + (-beta * (theta - c).abs() + beta * c * r / n as f64).exp()
        }
    })
}

/// The finite-`N` quantity whose limit is [`infinite_population_ratio`].
pub fn normalized_cost(
    game: &GameSpec,
    pop: &PopulationConfig,
    scheme: IncentiveScheme,
    theta: f64,
) -> Result<f64> {
    let n = pop.size as f64;
    let e = cost::expected_cost(game, pop, scheme, theta)?;
    Ok(e / (n * n * theta / 2.0 * (n.ln() + EULER_GAMMA)))
}

/// `(N²θ/2)(H_N + 1/(N−1)) ≤ E(θ) ≤ N(N−1)θ(H_N + 1)` for `θ > 0`.
pub fn cost_bounds(pop_size: usize, theta: f64) -> Result<(f64, f64)> {
    if pop_size < 3 {
        return Err(Error::InvalidPopulation(format!("N = {pop_size} < 3")));
    }
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bounds need theta > 0, got {theta}"
        )));
    }
    let n = pop_size as f64;
    let h = harmonic(pop_size)?;
    Ok((
        n * n * theta / 2.0 * (h + 1.0 / (n - 1.0)),
        n * (n - 1.0) * theta * (h + 1.0),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    WeakSelection,
    LargeSelection,
    InfinitePopulation,
    Bounds,
}

/// A theoretical value next to the one actually computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub kind: LimitKind,
    pub theoretical: f64,
    pub observed: f64,
    pub relative_error: f64,
}

impl LimitReport {
    pub fn new(kind: LimitKind, theoretical: f64, observed: f64) -> Self {
        LimitReport {
            kind,
            theoretical,
            observed,
            relative_error: (observed - theoretical).abs() / theoretical.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(2).unwrap(), 1.0);
        assert_eq!(harmonic(3).unwrap(), 1.5);
        let direct: f64 = (1..50).map(|j| 1.0 / j as f64).sum();
        assert!((harmonic(50).unwrap() - direct).abs() < 1e-14);
        assert!((harmonic(50).unwrap() - 4.479_205_338).abs() < 1e-8);
        assert!(harmonic(1).is_err());
    }

    #[test]
    fn weak_selection_values() {
        assert_eq!(weak_selection_limit(3, 1.0).unwrap(), 13.5);
        assert_eq!(weak_selection_limit(3, 0.0).unwrap(), 0.0);
        assert!((weak_selection_limit(50, 2.0).unwrap() - 22_396.026_69).abs() < 1e-2);
    }

    #[test]
    fn large_selection_values() {
        let r = large_selection_limit(3, 1.0, IncentiveScheme::Reward, Regime::AboveEdge).unwrap();
        assert_eq!(r, 11.25);
        for s in [IncentiveScheme::Reward, IncentiveScheme::Punishment] {
            assert_eq!(
                large_selection_limit(3, 2.0, s, Regime::Edge).unwrap(),
                27.0
            );
        }
        let a = large_selection_limit(10, 1.5, IncentiveScheme::Reward, Regime::BelowEdge).unwrap();
        let b =
            large_selection_limit(10, 1.5, IncentiveScheme::Punishment, Regime::AboveEdge).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, cost_bounds(10, 1.5).unwrap().0);
    }

    #[test]
    fn strong_selection_matches_three_player_closed_form() {
        // ψ(u) → (9/4)·5 as u → ∞ for reward.
        let game = GameSpec::donation(2.0, 1.0).unwrap();
        let pop = PopulationConfig::new(3, 1e3).unwrap();
        let e = cost::expected_cost(&game, &pop, IncentiveScheme::Reward, 3.0).unwrap();
        assert!((e - 3.0 * 45.0 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn infinite_population_values() {
        let dg = GameSpec::donation(2.0, 1.0).unwrap();
        assert_eq!(infinite_population_ratio(&dg, 3.0, 1.0).unwrap(), 2.0);
        assert_eq!(infinite_population_ratio(&dg, 1e6, 2.0).unwrap(), 1.0);
        let pgg = GameSpec::public_goods(3.0, 5, 1.0).unwrap();
        let v = infinite_population_ratio(&pgg, 1.0, 2.0).unwrap();
        assert!((v - (1.0 + (-0.4f64).exp())).abs() < 1e-15);
        assert!((v - 1.6703).abs() < 1e-4);
        assert!(infinite_population_ratio(&dg, 0.0, 1.0).is_err());
    }

    #[test]
    fn bounds_values() {
        assert_eq!(cost_bounds(3, 1.0).unwrap(), (9.0, 15.0));
        let (lo, hi) = cost_bounds(50, 1.0).unwrap();
        assert!((lo - 1250.0 * (4.479_205_338 + 1.0 / 49.0)).abs() < 1e-5);
        assert!((hi - 2450.0 * 5.479_205_338).abs() < 1e-5);
        assert!(cost_bounds(2, 1.0).is_err());
        assert!(cost_bounds(5, 0.0).is_err());
    }

    #[test]
    fn regime_classification() {
        let delta = games::delta(&GameSpec::donation(2.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(Regime::classify(1.0, delta), Regime::BelowEdge);
        assert_eq!(Regime::classify(2.0, delta), Regime::Edge);
        assert_eq!(Regime::classify(2.5, delta), Regime::AboveEdge);
    }

    #[test]
    fn limit_report_error() {
        let r = LimitReport::new(LimitKind::Bounds, 4.0, 5.0);
        assert_eq!(r.relative_error, 0.25);
    }
}
