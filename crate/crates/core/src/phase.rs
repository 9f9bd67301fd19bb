//! Phase transition of the cost landscape in the selection intensity and the
//! optimal-incentive algorithm built on it.
//!
//! `E′(θ)` changes sign exactly where `F(u) = −βδ` on the region `P(u) > 0`.
//! With `F* = min{F : P > 0}` and `β* = −F*/δ`, the cost is non-decreasing
//! for `β ≤ β*`; above the threshold it rises, falls between `θ₁` and `θ₂`,
//! and rises again.

use serde::{Deserialize, Serialize};

use crate::chain::{self, IncentiveScheme};
use crate::cost::{self, CostProfile, CriticalFunctions};
use crate::error::{Error, Result};
use crate::games::{self, GameSpec, PopulationConfig};
use crate::roots::{brent_min, brent_root};

/// Largest `N` for which exactly two sign changes of `E′` are established.
pub const GUARANTEED_MAX_N: usize = 100;

const MAX_DOUBLINGS: u32 = 200;
const THRESHOLD_RTOL: f64 = 1e-12;

/// A maximal open interval of `u > 0` on which `P > 0`, with the minimum of
/// `F` over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: f64,
    /// `None` for an unbounded region.
    pub hi: Option<f64>,
    pub u_min: f64,
    pub f_min: f64,
}

impl Region {
    // Maps the whole real line onto the region, so searches never touch the
    // poles of F at the endpoints.
    fn to_u(&self, s: f64) -> f64 {
        match self.hi {
            None => self.lo + self.lo.max(1.0) * s.exp(),
            Some(hi) => self.lo + (hi - self.lo) * chain::fermi(s),
        }
    }
}

/// `F*`, `u*` and the structure of `{P > 0}` for one `(N, scheme)`.
#[derive(Debug, Clone)]
pub struct PhaseAnalysis {
    pub scheme: IncentiveScheme,
    pub pop_size: usize,
    pub f_star: f64,
    pub u_star: f64,
    /// Positive roots of `P`, ascending.
    pub p_roots: Vec<f64>,
    pub regions: Vec<Region>,
    critical: CriticalFunctions,
}

impl PhaseAnalysis {
    pub fn new(pop_size: usize, scheme: IncentiveScheme) -> Result<Self> {
        let psi = cost::derive_psi(pop_size, scheme)?;
        let critical = cost::critical_functions(&psi)?;
        let p_roots = critical.p.squarefree_part().positive_roots();

        let mut edges = vec![0.0];
        edges.extend(&p_roots);
        let mut regions = Vec::new();
        for (k, &lo) in edges.iter().enumerate() {
            let hi = edges.get(k + 1).copied();
            let probe = match hi {
                Some(hi) => 0.5 * (lo + hi),
                None => lo + lo.max(1.0),
            };
            if !critical.admissible(probe) {
                continue;
            }
            let mut region = Region {
                lo,
                hi,
                u_min: f64::NAN,
                f_min: f64::INFINITY,
            };
            let (u_min, f_min) = minimize_on(&critical, &region);
            region.u_min = u_min;
            region.f_min = f_min;
            regions.push(region);
        }
        let best = regions
            .iter()
            .min_by(|a, b| a.f_min.total_cmp(&b.f_min))
            .ok_or_else(|| {
                Error::Analysis(format!("P has no positive region for N = {pop_size}"))
            })?;
        if !(best.f_min.is_finite() && best.f_min > 0.0) {
            return Err(Error::Analysis(format!(
                "F* = {} is not positive",
                best.f_min
            )));
        }
        Ok(PhaseAnalysis {
            scheme,
            pop_size,
            f_star: best.f_min,
            u_star: best.u_min,
            p_roots,
            regions,
            critical,
        })
    }

    pub fn critical(&self) -> &CriticalFunctions {
        &self.critical
    }

    pub fn f(&self, u: f64) -> f64 {
        self.critical.f(u)
    }

    /// `β* = −F*/δ`.
    pub fn beta_star(&self, delta: f64) -> Result<f64> {
        if !(delta < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be negative, got {delta}"
            )));
        }
        Ok(-self.f_star / delta)
    }

    fn at_threshold(&self, beta: f64, delta: f64) -> Result<Option<f64>> {
        let beta_star = self.beta_star(delta)?;
        if (beta - beta_star).abs() <= THRESHOLD_RTOL * beta_star {
            return Ok(Some(self.u_star));
        }
        if beta < beta_star {
            return Err(Error::BelowThreshold { beta, beta_star });
        }
        Ok(None)
    }

    // The last region (in u) whose minimum lies below the target level.
    fn active_region(&self, target: f64) -> Result<&Region> {
        self.regions
            .iter()
            .rev()
            .find(|r| r.f_min < target)
            .ok_or_else(|| Error::Analysis(format!("F never drops below {target}")))
    }

    /// Largest root of `F(u) = −βδ`; requires `β ≥ β*`.
    pub fn find_u2(&self, beta: f64, delta: f64) -> Result<f64> {
        if let Some(u) = self.at_threshold(beta, delta)? {
            return Ok(u);
        }
        let target = -beta * delta;
        let region = self.active_region(target)?;
        let g = |u: f64| self.f(u) - target;
        let a = region.u_min;
        let mut step = 1.0;
        let mut b = match region.hi {
            None => a + step,
            Some(hi) => a + 0.5 * (hi - a),
        };
        let mut k = 0;
        while !(g(b) > 0.0) {
            k += 1;
            if k > MAX_DOUBLINGS {
                return Err(Error::Analysis(format!(
                    "no bracket for u2 after {MAX_DOUBLINGS} doublings"
                )));
            }
            step *= 2.0;
            b = match region.hi {
                None => a + step,
                Some(hi) => hi - (hi - a) / step / 2.0,
            };
        }
        brent_root(g, a, b, 0.0)
    }

    /// Smallest root of `F(u) = −βδ` in the region holding `u₂`.
    pub fn find_u1(&self, beta: f64, delta: f64) -> Result<f64> {
        if let Some(u) = self.at_threshold(beta, delta)? {
            return Ok(u);
        }
        let target = -beta * delta;
        let region = self.active_region(target)?;
        let g = |u: f64| self.f(u) - target;
        let b = region.u_min;
        let mut k = 1;
        let mut a = region.lo + (b - region.lo) / 2.0;
        while !(g(a) > 0.0) {
            k += 1;
            if k > MAX_DOUBLINGS as i32 {
                return Err(Error::Analysis(format!(
                    "no bracket for u1 after {MAX_DOUBLINGS} halvings"
                )));
            }
            a = region.lo + (b - region.lo) * 0.5f64.powi(k);
        }
        brent_root(g, a, b, 0.0)
    }
}

// Coarse scan in the mapped variable, then Brent around the best sample.
fn minimize_on(critical: &CriticalFunctions, region: &Region) -> (f64, f64) {
    const LO: f64 = -40.0;
    const STEP: f64 = 0.125;
    const COUNT: usize = 641;
    // Rounding can push u onto a pole or just outside the region near its
    // endpoints; such samples are discarded.
    let h = |s: f64| {
        let u = region.to_u(s);
        let inside = u > region.lo && region.hi.is_none_or(|hi| u < hi) && critical.admissible(u);
        let v = critical.f(u);
        if inside && !v.is_nan() {
            v
        } else {
            f64::INFINITY
        }
    };
    let samples: Vec<f64> = (0..COUNT).map(|k| h(LO + STEP * k as f64)).collect();
    let k = (0..COUNT)
        .min_by(|&a, &b| samples[a].total_cmp(&samples[b]))
        .unwrap();
    let a = LO + STEP * k.saturating_sub(1) as f64;
    let b = LO + STEP * (k + 1).min(COUNT - 1) as f64;
    let (s, _) = brent_min(h, a, b, 1e-13);
    let u = region.to_u(s);
    (u, critical.f(u))
}

/// `(F*, u*)`.
pub fn f_star(pop_size: usize, scheme: IncentiveScheme) -> Result<(f64, f64)> {
    let a = PhaseAnalysis::new(pop_size, scheme)?;
    Ok((a.f_star, a.u_star))
}

/// `β* = −F*/δ` for a concrete game.
pub fn beta_star(game: &GameSpec, pop_size: usize, scheme: IncentiveScheme) -> Result<f64> {
    let delta = games::delta(game, pop_size)?;
    PhaseAnalysis::new(pop_size, scheme)?.beta_star(delta)
}

/// See [`PhaseAnalysis::find_u2`].
pub fn find_u2(pop_size: usize, scheme: IncentiveScheme, beta: f64, delta: f64) -> Result<f64> {
    PhaseAnalysis::new(pop_size, scheme)?.find_u2(beta, delta)
}

/// `θ = ln(u)/β − δ`, the incentive at which the chain sits at `u = e^x`.
pub fn theta_of_u(u: f64, beta: f64, delta: f64) -> f64 {
    u.ln() / beta - delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    BelowThreshold,
    #[serde(rename = "AboveThreshold_Theta0")]
    AboveThresholdTheta0,
    #[serde(rename = "AboveThreshold_Theta2")]
    AboveThresholdTheta2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub delta: f64,
    pub theta0: f64,
    pub cost_theta0: f64,
    pub f_star: f64,
    pub u_star: f64,
    pub beta_star: f64,
    pub u2: Option<f64>,
    pub theta2: Option<f64>,
    pub cost_theta2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub theta_star: f64,
    pub cost_star: f64,
    pub branch: Branch,
    pub diagnostics: Diagnostics,
    /// Set when `N` exceeds [`GUARANTEED_MAX_N`].
    pub heuristic: bool,
    pub warnings: Vec<String>,
}

/// Cheapest incentive `θ* ≥ θ₀(ω)`.
///
/// Below the threshold the cost is non-decreasing, so `θ₀` wins. Above it
/// the only interior candidate is the local minimum `θ₂`; ties go to `θ₀`.
pub fn optimize(
    game: &GameSpec,
    pop: &PopulationConfig,
    scheme: IncentiveScheme,
    omega: f64,
) -> Result<OptimizationResult> {
    let theta0 = chain::theta_min(game, pop, omega)?;
    let delta = games::delta(game, pop.size)?;
    let analysis = PhaseAnalysis::new(pop.size, scheme)?;
    let beta_star = analysis.beta_star(delta)?;
    let cost_theta0 = cost::expected_cost(game, pop, scheme, theta0)?;

    let mut warnings = Vec::new();
    if omega < 0.5 {
        warnings.push(format!("omega = {omega} < 0.5: theta0 decreases with beta; low cooperation targets are outside the studied range"));
    }
    let heuristic = pop.size > GUARANTEED_MAX_N;
    if heuristic {
        warnings.push(format!(
            "N = {} > {GUARANTEED_MAX_N}: two turning points are conjectured, not established",
            pop.size
        ));
        match monotonicity_profile(game, pop, scheme) {
            Ok(_) => {}
            Err(e) => warnings.push(format!("monotonicity guard failed: {e}")),
        }
    }

    let mut diagnostics = Diagnostics {
        delta,
        theta0,
        cost_theta0,
        f_star: analysis.f_star,
        u_star: analysis.u_star,
        beta_star,
        u2: None,
        theta2: None,
        cost_theta2: None,
    };
    let below = pop.beta <= beta_star * (1.0 + THRESHOLD_RTOL);
    let (theta_star, branch) = if below {
        (theta0, Branch::BelowThreshold)
    } else {
        let u2 = analysis.find_u2(pop.beta, delta)?;
        let theta2 = theta_of_u(u2, pop.beta, delta);
        diagnostics.u2 = Some(u2);
        diagnostics.theta2 = Some(theta2);
        if theta2 <= theta0 {
            (theta0, Branch::AboveThresholdTheta0)
        } else {
            let cost_theta2 = cost::expected_cost(game, pop, scheme, theta2)?;
            diagnostics.cost_theta2 = Some(cost_theta2);
            if cost_theta0 <= cost_theta2 {
                (theta0, Branch::AboveThresholdTheta0)
            } else {
                (theta2, Branch::AboveThresholdTheta2)
            }
        }
    };
    let cost_star = if theta_star == theta0 {
        cost_theta0
    } else {
        diagnostics.cost_theta2.expect("set on the theta2 branch")
    };
    Ok(OptimizationResult {
        theta_star,
        cost_star,
        branch,
        diagnostics,
        heuristic,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Monotonicity {
    Monotone,
    TwoTurningPoints { theta1: f64, theta2: f64 },
}

/// Number of sign changes of `E′` over `points` log-spaced values of `u` in
/// `[u_lo, u_hi]`, i.e. over the corresponding `θ` grid.
pub fn derivative_sign_changes(
    profile: &CostProfile,
    u_lo: f64,
    u_hi: f64,
    points: usize,
) -> usize {
    let beta = profile.pop.beta;
    let (a, b) = (u_lo.ln(), u_hi.ln());
    let mut prev: Option<bool> = None;
    let mut changes = 0;
    for k in 0..points {
        let ln_u = a + (b - a) * k as f64 / (points - 1) as f64;
        let d = profile.derivative(ln_u / beta - profile.delta);
        if d == 0.0 || d.is_nan() {
            continue;
        }
        let sign = d > 0.0;
        if prev.is_some_and(|p| p != sign) {
            changes += 1;
        }
        prev = Some(sign);
    }
    changes
}

/// Classifies `θ ↦ E(θ)` and cross-checks the classification by sampling the
/// sign of `E′` on a grid spanning both turning points.
pub fn monotonicity_profile(
    game: &GameSpec,
    pop: &PopulationConfig,
    scheme: IncentiveScheme,
) -> Result<Monotonicity> {
    pop.require_selection()?;
    let profile = CostProfile::new(game, pop, scheme)?;
    let analysis = PhaseAnalysis::new(pop.size, scheme)?;
    let delta = profile.delta;
    let beta_star = analysis.beta_star(delta)?;
    let (class, u_lo, u_hi, expected) = if pop.beta <= beta_star * (1.0 + THRESHOLD_RTOL) {
        let u = analysis.u_star;
        (Monotonicity::Monotone, u * 1e-4, u * 1e4, 0)
    } else {
        let u1 = analysis.find_u1(pop.beta, delta)?;
        let u2 = analysis.find_u2(pop.beta, delta)?;
        let class = Monotonicity::TwoTurningPoints {
            theta1: theta_of_u(u1, pop.beta, delta),
            theta2: theta_of_u(u2, pop.beta, delta),
        };
        (class, u1 * 1e-4, u2 * 1e4, 2)
    };
    let observed = derivative_sign_changes(&profile, u_lo, u_hi, 20_001);
    if observed != expected {
        return Err(Error::Analysis(format!(
            "E' changes sign {observed} times on the sampled grid, expected {expected}"
        )));
    }
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dg18() -> GameSpec {
        GameSpec::donation(1.8, 1.0).unwrap()
    }

    #[test]
    fn three_player_constants() {
        let a = PhaseAnalysis::new(3, IncentiveScheme::Reward).unwrap();
        assert!((a.f_star - 10.9291).abs() < 1e-3);
        assert!((a.u_star - 4.29712).abs() < 1e-4);
        assert_eq!(a.p_roots.len(), 1);
        assert!((a.p_roots[0] - (1.0 + 21f64.sqrt()) / 4.0).abs() < 1e-14);
        let beta_star = beta_star(&dg18(), 3, IncentiveScheme::Reward).unwrap();
        assert!((beta_star - 5.752).abs() < 1e-3);

        let p = PhaseAnalysis::new(3, IncentiveScheme::Punishment).unwrap();
        assert!((p.p_roots[0] - (21f64.sqrt() - 1.0) / 5.0).abs() < 1e-14);
        assert!(p.u_star > p.p_roots[0]);
        // Cross-check with a brute-force scan of the printed-form F̂.
        let fhat = |u: f64| {
            (4.0 * u + 5.0) * (u + 1.0) * (u * u + u + 1.0) / (u * (5.0 * u * u + 2.0 * u - 4.0))
                - u.ln()
        };
        let brute = (1..200_000)
            .map(|k| p.p_roots[0] + k as f64 * 1e-4)
            .map(fhat)
            .fold(f64::INFINITY, f64::min);
        assert!((p.f_star - brute).abs() < 1e-6);
    }

    #[test]
    fn threshold_scales_with_delta() {
        let a = PhaseAnalysis::new(5, IncentiveScheme::Reward).unwrap();
        let b1 = a.beta_star(-1.0).unwrap();
        let b2 = a.beta_star(-2.0).unwrap();
        assert!((b1 - 2.0 * b2).abs() < 1e-12);
        assert!(a.beta_star(0.5).is_err());
    }

    #[test]
    fn roots_of_stationarity_equation() {
        let a = PhaseAnalysis::new(3, IncentiveScheme::Reward).unwrap();
        let delta = -1.9;
        let u1 = a.find_u1(10.0, delta).unwrap();
        let u2 = a.find_u2(10.0, delta).unwrap();
        assert!(u1 < a.u_star && a.u_star < u2);
        assert!((a.f(u1) - 19.0).abs() < 1e-10);
        assert!((a.f(u2) - 19.0).abs() < 1e-10);
        assert!((theta_of_u(u2, 10.0, delta) - 2.16).abs() < 1e-2);

        let beta_star = a.beta_star(delta).unwrap();
        assert_eq!(a.find_u2(beta_star, delta).unwrap(), a.u_star);
        assert!(matches!(
            a.find_u2(beta_star / 2.0, delta),
            Err(Error::BelowThreshold { .. })
        ));
    }

    #[test]
    fn algorithm_on_three_player_examples() {
        let pop = PopulationConfig::new(3, 10.0).unwrap();
        let r = optimize(&dg18(), &pop, IncentiveScheme::Reward, 0.25).unwrap();
        assert_eq!(r.branch, Branch::AboveThresholdTheta0);
        assert!((r.theta_star - 1.845).abs() < 1e-3);
        assert!((r.cost_star - 23.602).abs() < 1e-2);
        assert!((r.diagnostics.cost_theta2.unwrap() - 25.6124).abs() < 1e-3);
        assert!(!r.warnings.is_empty());

        let r = optimize(&dg18(), &pop, IncentiveScheme::Reward, 0.7).unwrap();
        assert_eq!(r.branch, Branch::AboveThresholdTheta2);
        assert!((r.theta_star - 2.16).abs() < 1e-2);
        assert!((r.cost_star - 25.6124).abs() < 1e-3);
        assert!((r.diagnostics.cost_theta0 - 26.446).abs() < 1e-2);

        let r = optimize(&dg18(), &pop, IncentiveScheme::Reward, 0.999_999).unwrap();
        assert_eq!(r.branch, Branch::AboveThresholdTheta0);
        assert!(r.diagnostics.theta2.unwrap() < r.diagnostics.theta0);
        assert!((r.theta_star - 2.59078).abs() < 1e-4);

        let pop = PopulationConfig::new(3, 1.0).unwrap();
        let r = optimize(&dg18(), &pop, IncentiveScheme::Reward, 0.7).unwrap();
        assert_eq!(r.branch, Branch::BelowThreshold);
        assert!((r.theta_star - 2.3236).abs() < 1e-4);
        assert!(r.diagnostics.u2.is_none());
    }

    #[test]
    fn optimize_rejects_bad_inputs() {
        let pop = PopulationConfig::new(3, 10.0).unwrap();
        for omega in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(optimize(&dg18(), &pop, IncentiveScheme::Reward, omega).is_err());
        }
        let neutral = PopulationConfig::new(3, 0.0).unwrap();
        assert!(optimize(&dg18(), &neutral, IncentiveScheme::Reward, 0.5).is_err());
    }

    #[test]
    fn theta2_is_a_local_minimum() {
        for (n, scheme) in [
            (3, IncentiveScheme::Reward),
            (10, IncentiveScheme::Punishment),
        ] {
            let beta = 2.0 * beta_star(&dg18(), n, scheme).unwrap();
            let pop = PopulationConfig::new(n, beta).unwrap();
            let delta = games::delta(&dg18(), n).unwrap();
            let u2 = find_u2(n, scheme, beta, delta).unwrap();
            let t2 = theta_of_u(u2, beta, delta);
            let h = 1e-4 * t2.max(1.0);
            let e = |t: f64| cost::expected_cost(&dg18(), &pop, scheme, t).unwrap();
            assert!(e(t2 - h) > e(t2) && e(t2 + h) > e(t2));
        }
    }

    #[test]
    fn monotonicity_classification() {
        let game = dg18();
        let beta_star = beta_star(&game, 3, IncentiveScheme::Reward).unwrap();
        let low = PopulationConfig::new(3, 0.5 * beta_star).unwrap();
        assert_eq!(
            monotonicity_profile(&game, &low, IncentiveScheme::Reward).unwrap(),
            Monotonicity::Monotone
        );
        let at = PopulationConfig::new(3, beta_star).unwrap();
        assert_eq!(
            monotonicity_profile(&game, &at, IncentiveScheme::Reward).unwrap(),
            Monotonicity::Monotone
        );
        let high = PopulationConfig::new(3, 10.0).unwrap();
        match monotonicity_profile(&game, &high, IncentiveScheme::Reward).unwrap() {
            Monotonicity::TwoTurningPoints { theta1, theta2 } => {
                let prof = CostProfile::new(&game, &high, IncentiveScheme::Reward).unwrap();
                assert!(theta1 < theta2);
                assert!(prof.derivative(theta1 - 0.01) > 0.0);
                assert!(prof.derivative(0.5 * (theta1 + theta2)) < 0.0);
                assert!(prof.derivative(theta2 + 0.01) > 0.0);
            }
            other => panic!("expected two turning points, got {other:?}"),
        }
    }

    #[test]
    fn large_population_is_flagged() {
        let pop = PopulationConfig::new(101, 10.0).unwrap();
        let r = optimize(&dg18(), &pop, IncentiveScheme::Reward, 0.9).unwrap();
        assert!(r.heuristic);
        let pop = PopulationConfig::new(100, 10.0).unwrap();
        assert!(
            !optimize(&dg18(), &pop, IncentiveScheme::Reward, 0.9)
                .unwrap()
                .heuristic
        );
    }
}
