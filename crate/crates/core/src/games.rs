//! Cooperation dilemmas and their average payoffs in a well-mixed population.
//!
//! Both games share one structural fact the rest of the crate relies on: the
//! payoff gap `Π_C(i) − Π_D(i)` does not depend on the number of cooperators
//! `i`, so it collapses to a single negative constant [`delta`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A two-strategy cooperation dilemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "snake_case")]
pub enum GameSpec {
    /// Pairwise donation game: a cooperator pays `c` so the co-player gets `b`.
    DonationGame { b: f64, c: f64 },
    /// Public goods game in groups of `n`, contributions multiplied by `r`.
    PublicGoodsGame { r: f64, n: usize, c: f64 },
}

impl GameSpec {
    pub fn donation(b: f64, c: f64) -> Result<Self> {
        let g = GameSpec::DonationGame { b, c };
        g.validate()?;
        Ok(g)
    }

    pub fn public_goods(r: f64, n: usize, c: f64) -> Result<Self> {
        let g = GameSpec::PublicGoodsGame { r, n, c };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GameSpec::DonationGame { b, c } => {
                if !(b.is_finite() && c.is_finite() && c > 0.0 && b > c) {
                    return Err(Error::InvalidGame(format!(
                        "donation game needs b > c > 0, got b = {b}, c = {c}"
                    )));
                }
            }
            GameSpec::PublicGoodsGame { r, n, c } => {
                if n < 2 {
                    return Err(Error::InvalidGame(format!("group size n = {n} < 2")));
                }
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidGame(format!("cost c = {c} must be > 0")));
                }
                if !(r.is_finite() && r > 1.0 && r < n as f64) {
                    return Err(Error::InvalidGame(format!(
                        "public goods game needs 1 < r < n, got r = {r}, n = {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Short label used in tabular output.
    pub fn label(&self) -> &'static str {
        match self {
            GameSpec::DonationGame { .. } => "dg",
            GameSpec::PublicGoodsGame { .. } => "pgg",
        }
    }

    /// Cost of cooperating, `c`, for either game.
    pub fn cost(&self) -> f64 {
        match *self {
            GameSpec::DonationGame { c, .. } | GameSpec::PublicGoodsGame { c, .. } => c,
        }
    }

    fn check_population(&self, pop_size: usize) -> Result<()> {
        self.validate()?;
        if pop_size < 2 {
            return Err(Error::InvalidPopulation(format!("N = {pop_size} < 2")));
        }
        if let GameSpec::PublicGoodsGame { n, .. } = *self {
            if n > pop_size {
                return Err(Error::InvalidPopulation(format!(
                    "group size n = {n} exceeds population N = {pop_size}"
                )));
            }
        }
        Ok(())
    }
}

/// Population size and intensity of selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub size: usize,
    pub beta: f64,
}

impl PopulationConfig {
    pub fn new(size: usize, beta: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidPopulation(format!("N = {size} < 2")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidPopulation(format!(
                "beta must be finite and >= 0, got {beta}"
            )));
        }
        Ok(PopulationConfig { size, beta })
    }

    /// Checks the population against a game (PGG needs `N >= n`).
    pub fn validate_for(&self, game: &GameSpec) -> Result<()> {
        PopulationConfig::new(self.size, self.beta)?;
        game.check_population(self.size)
    }

    pub fn require_selection(&self) -> Result<()> {
        if self.beta > 0.0 {
            Ok(())
        } else {
            Err(Error::NeutralSelection)
        }
    }
}

/// Average payoff of a cooperator when the population holds `i` cooperators.
pub fn payoff_c(game: &GameSpec, pop_size: usize, i: usize) -> Result<f64> {
    game.check_population(pop_size)?;
    if i < 1 || i > pop_size {
        return Err(Error::IndexOutOfRange {
            index: i,
            lo: 1,
            hi: pop_size,
        });
    }
    let big_n = pop_size as f64;
    let i = i as f64;
    Ok(match *game {
        GameSpec::DonationGame { b, c } => ((i - 1.0) * (b - c) - (big_n - i) * c) / (big_n - 1.0),
        GameSpec::PublicGoodsGame { r, n, c } => {
            let n = n as f64;
            r * c / n * (1.0 + (i - 1.0) * (n - 1.0) / (big_n - 1.0)) - c
        }
    })
}

/// Average payoff of a defector when the population holds `i` cooperators.
pub fn payoff_d(game: &GameSpec, pop_size: usize, i: usize) -> Result<f64> {
    game.check_population(pop_size)?;
    if i + 1 > pop_size {
        return Err(Error::IndexOutOfRange {
            index: i,
            lo: 0,
            hi: pop_size - 1,
        });
    }
    let big_n = pop_size as f64;
    let i = i as f64;
    Ok(match *game {
        GameSpec::DonationGame { b, .. } => i * b / (big_n - 1.0),
        GameSpec::PublicGoodsGame { r, n, c } => {
            let n = n as f64;
            r * c * (n - 1.0) / (n * (big_n - 1.0)) * i
        }
    })
}

/// The constant payoff gap `Π_C(i) − Π_D(i)`; always negative.
pub fn delta(game: &GameSpec, pop_size: usize) -> Result<f64> {
    game.check_population(pop_size)?;
    let big_n = pop_size as f64;
    Ok(match *game {
        GameSpec::DonationGame { b, c } => -(c + b / (big_n - 1.0)),
        GameSpec::PublicGoodsGame { r, n, c } => {
            let n = n as f64;
            -c * (1.0 - r * (big_n - n) / (n * (big_n - 1.0)))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binom(n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
    }

    // Group-composition average: sample n-1 co-players without replacement.
    fn pgg_c_hypergeometric(r: f64, n: usize, c: f64, pop: usize, i: usize) -> f64 {
        let total = binom(pop - 1, n - 1);
        (0..n)
            .map(|j| {
                binom(i - 1, j) * binom(pop - i, n - 1 - j) / total
                    * ((j + 1) as f64 * r * c / n as f64 - c)
            })
            .sum()
    }

    fn pgg_d_hypergeometric(r: f64, n: usize, c: f64, pop: usize, i: usize) -> f64 {
        let total = binom(pop - 1, n - 1);
        (0..n)
            .map(|j| {
                binom(i, j) * binom(pop - 1 - i, n - 1 - j) / total * (j as f64 * r * c / n as f64)
            })
            .sum()
    }

    #[test]
    fn donation_payoffs() {
        let g = GameSpec::donation(2.0, 1.0).unwrap();
        assert_eq!(payoff_c(&g, 3, 3).unwrap(), 1.0);
        assert_eq!(payoff_c(&g, 3, 1).unwrap(), -1.0);
        assert_eq!(payoff_d(&g, 3, 0).unwrap(), 0.0);
        assert_eq!(payoff_d(&g, 3, 2).unwrap(), 2.0);
    }

    #[test]
    fn public_goods_payoffs() {
        let g = GameSpec::public_goods(3.0, 5, 1.0).unwrap();
        assert!((payoff_c(&g, 50, 1).unwrap() + 0.4).abs() < 1e-15);
        assert!((payoff_d(&g, 50, 10).unwrap() - 24.0 / 49.0).abs() < 1e-15);
        assert!((delta(&g, 50).unwrap() + 22.0 / 49.0).abs() < 1e-15);
    }

    #[test]
    fn public_goods_closed_form_matches_group_sampling() {
        let (r, n, c, pop) = (3.0, 5, 1.0, 12);
        let g = GameSpec::public_goods(r, n, c).unwrap();
        for i in 1..=pop {
            let oracle = pgg_c_hypergeometric(r, n, c, pop, i);
            assert!(
                (payoff_c(&g, pop, i).unwrap() - oracle).abs() < 1e-12,
                "C at i={i}"
            );
        }
        for i in 0..pop {
            let oracle = pgg_d_hypergeometric(r, n, c, pop, i);
            assert!(
                (payoff_d(&g, pop, i).unwrap() - oracle).abs() < 1e-12,
                "D at i={i}"
            );
        }
        // Reference point, N = 50.
        let oracle = pgg_d_hypergeometric(r, n, c, 50, 10);
        assert!((oracle - 24.0 / 49.0).abs() < 1e-12);
    }

    #[test]
    fn delta_reference_values() {
        let g = GameSpec::donation(1.8, 1.0).unwrap();
        assert!((delta(&g, 3).unwrap() + 1.9).abs() < 1e-15);
        assert!((delta(&g, 50).unwrap() + 1.036_734_693_877_551).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GameSpec::donation(1.0, 1.0).is_err());
        assert!(GameSpec::donation(2.0, 0.0).is_err());
        assert!(GameSpec::public_goods(5.0, 5, 1.0).is_err());
        assert!(GameSpec::public_goods(0.9, 5, 1.0).is_err());
        assert!(GameSpec::public_goods(1.5, 1, 1.0).is_err());
        let g = GameSpec::donation(2.0, 1.0).unwrap();
        assert!(matches!(
            payoff_c(&g, 3, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            payoff_c(&g, 3, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            payoff_d(&g, 3, 3),
            Err(Error::IndexOutOfRange { .. })
        ));
        let p = GameSpec::public_goods(3.0, 5, 1.0).unwrap();
        assert!(matches!(
            payoff_c(&p, 4, 1),
            Err(Error::InvalidPopulation(_))
        ));
        assert!(PopulationConfig::new(1, 1.0).is_err());
        assert!(PopulationConfig::new(3, -1.0).is_err());
        assert!(PopulationConfig::new(3, f64::NAN).is_err());
    }

    fn any_game() -> impl Strategy<Value = (GameSpec, usize)> {
        prop_oneof![
            (0.1f64..5.0, 0.01f64..5.0, 2usize..200)
                .prop_map(|(c, extra, pop)| { (GameSpec::donation(c + extra, c).unwrap(), pop) }),
            (2usize..12, 0.0f64..1.0, 0.1f64..5.0, 0usize..100).prop_map(|(n, t, c, extra)| {
                let r = 1.0 + t * (n as f64 - 1.0) * 0.999 + 1e-3;
                (
                    GameSpec::public_goods(r.min(n as f64 - 1e-3), n, c).unwrap(),
                    n + extra.max(1),
                )
            }),
        ]
    }

    proptest! {
        #[test]
        fn gap_is_constant_and_negative((game, pop) in any_game()) {
            let d = delta(&game, pop).unwrap();
            prop_assert!(d < 0.0);
            for i in 1..pop {
                let gap = payoff_c(&game, pop, i).unwrap() - payoff_d(&game, pop, i).unwrap();
                prop_assert!((gap - d).abs() <= 1e-12);
            }
        }
    }
}
