//! Expected total incentive cost and its exact reduction to one variable.
//!
//! With `x = β(δ + θ)` the chain depends on `θ` only through `u = e^x`, and
//! the cost factors as `E(θ) = θ · ψ(u)` for a rational function `ψ` that
//! depends on `N` and the scheme alone. Stationary points of `E` are then the
//! solutions of `F(u) = −βδ` on the region where `ψ` decreases.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::chain::{self, fermi, IncentiveScheme, TransitionMatrix};
use crate::error::{Error, Result};
use crate::games::{self, GameSpec, PopulationConfig};
use crate::poly::Poly;
use crate::ratfn::RationalFn;

/// Largest population for which `ψ` is built symbolically by default.
pub const SYMBOLIC_CAP: usize = 200;

/// `(θ/2) · (z_1 + z_{N−1})` where `(I − U) z = c` and `c_i` counts the
/// individuals paid in `S_i`.
pub fn expected_cost(
    game: &GameSpec,
    pop: &PopulationConfig,
    scheme: IncentiveScheme,
    theta: f64,
) -> Result<f64> {
    let x = chain::selection_gap(game, pop, theta)?;
    expected_cost_at_gap(pop.size, scheme, theta, x)
}

/// Matrix-path cost for a chain given directly by its gap `x`.
pub fn expected_cost_at_gap(
    pop_size: usize,
    scheme: IncentiveScheme,
    theta: f64,
    x: f64,
) -> Result<f64> {
    let z = paid_visits(pop_size, scheme, x)?;
    Ok(0.5 * theta * (z[0] + z[pop_size - 2]))
}

fn paid_visits(pop_size: usize, scheme: IncentiveScheme, x: f64) -> Result<Vec<f64>> {
    let u = TransitionMatrix::from_gap(pop_size, x)?;
    let rhs: Vec<f64> = (1..pop_size)
        .map(|i| scheme.targets(pop_size, i) as f64)
        .collect();
    u.solve(&rhs)
}

/// `dE/dθ` on the matrix path, via the tangent system
/// `(I − U) ∂z/∂x = (∂U/∂x) z`.
pub fn cost_slope_at_gap(
    pop_size: usize,
    scheme: IncentiveScheme,
    beta: f64,
    theta: f64,
    x: f64,
) -> Result<f64> {
    let u = TransitionMatrix::from_gap(pop_size, x)?;
    let rhs: Vec<f64> = (1..pop_size)
        .map(|i| scheme.targets(pop_size, i) as f64)
        .collect();
    let z = u.solve(&rhs)?;
    let w = fermi(x) * fermi(-x);
    let n2 = (pop_size * pop_size) as f64;
    let m = pop_size - 1;
    let tangent_rhs: Vec<f64> = (0..m)
        .map(|k| {
            let i = k + 1;
            let next = if k + 1 < m { z[k + 1] } else { 0.0 };
            let prev = if k > 0 { z[k - 1] } else { 0.0 };
            (i * (pop_size - i)) as f64 / n2 * w * (next - prev)
        })
        .collect();
    let dz = u.solve(&tangent_rhs)?;
    Ok(0.5 * (z[0] + z[m - 1]) + 0.5 * theta * beta * (dz[0] + dz[m - 1]))
}

/// `ψ_N(u)` in closed form.
///
/// Dividing row `i` of `(I − U) z = c` by `u_{i,i+1} + u_{i,i−1}` leaves the
/// constant-coefficient recurrence `(1+u) z_i − u z_{i+1} − z_{i−1} =
/// (1+u) g_i`, with `g_i = N²/(N−i)` (reward) or `N²/i` (punishment). Its
/// Green's function gives
///
/// `ψ(u) = (1+u) [G · S_{N−1}(u) + Σ_j g_j u^{j−1}] / (2 S_N(u))`,
///
/// where `S_k = 1 + u + … + u^{k−1}` and `G = Σ_j g_j = N² H_N`. The result
/// is reduced by cancelling the cyclotomic factors of `S_N`, which are the
/// only candidates for a common factor.
pub fn derive_psi(pop_size: usize, scheme: IncentiveScheme) -> Result<RationalFn> {
    derive_psi_capped(pop_size, scheme, SYMBOLIC_CAP)
}

pub fn derive_psi_capped(
    pop_size: usize,
    scheme: IncentiveScheme,
    cap: usize,
) -> Result<RationalFn> {
    if pop_size < 3 {
        return Err(Error::InvalidPopulation(format!(
            "symbolic cost needs N >= 3, got {pop_size}"
        )));
    }
    if pop_size > cap {
        return Err(Error::SymbolicCapExceeded { n: pop_size, cap });
    }
    let n = pop_size;
    let lcm = (1..n).fold(BigInt::one(), |acc, k| acc.lcm(&BigInt::from(k)));
    let n2 = BigInt::from(n * n);
    // L · g_j, integers because L is divisible by every j < N.
    let scaled_g: Vec<BigInt> = (1..n)
        .map(|j| {
            let d = match scheme {
                IncentiveScheme::Reward => n - j,
                IncentiveScheme::Punishment => j,
            };
            &n2 * (&lcm / BigInt::from(d))
        })
        .collect();
    let total: BigInt = scaled_g.iter().sum();
    let inner = &Poly::geometric(n - 1).scale(&total) + &Poly::new(scaled_g);
    let mut num = &Poly::geometric(2) * &inner;
    let mut den = Poly::geometric(n).scale(&(BigInt::from(2) * &lcm));
    for d in (2..=n).filter(|d| n.is_multiple_of(*d)) {
        let phi = Poly::cyclotomic(d);
        if let Some(q) = num.exact_div(&phi) {
            num = q;
            den = den.exact_div(&phi).expect("Φ_d divides S_N for d | N");
        }
    }
    Ok(RationalFn::from_coprime(num, den))
}

/// `F(u) = −ψ(u)/(u ψ′(u)) − ln u` and the sign polynomial `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalFunctions {
    /// Positive on exactly the `u > 0` where `ψ` is strictly decreasing.
    pub p: Poly,
    /// The algebraic part `−ψ/(u ψ′)` of `F`.
    pub ratio: RationalFn,
}

impl CriticalFunctions {
    pub fn f(&self, u: f64) -> f64 {
        self.ratio.eval(u) - u.ln()
    }

    pub fn admissible(&self, u: f64) -> bool {
        self.p.eval(u) > 0.0
    }
}

/// With `ψ = A/B` and `D = A B′ − A′ B` we have `−u ψ′ = u D / B²`, so `P` is
/// `D` up to a positive constant and `F = A B / (u D) − ln u`.
pub fn critical_functions(psi: &RationalFn) -> Result<CriticalFunctions> {
    let (a, b) = (psi.numerator(), psi.denominator());
    let d = &(a * &b.derivative()) - &(&a.derivative() * b);
    if d.is_zero() {
        return Err(Error::Analysis("ψ is constant; F is undefined".into()));
    }
    let (_, stripped) = d.split_zero_root();
    let p = stripped.positive_primitive_part();
    let ratio = RationalFn::new(a * b, &Poly::monomial(BigInt::one(), 1) * &d)?;
    Ok(CriticalFunctions { p, ratio })
}

/// Everything needed to evaluate `E`, `E′`, `F` for fixed `(game, N, β, scheme)`.
#[derive(Debug, Clone)]
pub struct CostProfile {
    pub game: GameSpec,
    pub pop: PopulationConfig,
    pub scheme: IncentiveScheme,
    pub delta: f64,
    pub psi: RationalFn,
    pub psi_prime: RationalFn,
    u_psi_prime: RationalFn,
}

impl CostProfile {
    pub fn new(game: &GameSpec, pop: &PopulationConfig, scheme: IncentiveScheme) -> Result<Self> {
        pop.validate_for(game)?;
        let psi = derive_psi(pop.size, scheme)?;
        let psi_prime = psi.derivative();
        let u_psi_prime = &RationalFn::from_poly(Poly::monomial(BigInt::one(), 1)) * &psi_prime;
        Ok(CostProfile {
            game: *game,
            pop: *pop,
            scheme,
            delta: games::delta(game, pop.size)?,
            psi,
            psi_prime,
            u_psi_prime,
        })
    }

    pub fn gap(&self, theta: f64) -> f64 {
        self.pop.beta * (self.delta + theta)
    }

    /// `E(θ) = θ ψ(e^x)`.
    pub fn cost(&self, theta: f64) -> f64 {
        theta * self.psi.eval(self.gap(theta).exp())
    }

    /// `E′(θ) = ψ(u) + (ln u − βδ) u ψ′(u)`, with `ln u − βδ = βθ`.
    pub fn derivative(&self, theta: f64) -> f64 {
        let u = self.gap(theta).exp();
        self.psi.eval(u) + self.pop.beta * theta * self.u_psi_prime.eval(u)
    }

    pub fn critical_functions(&self) -> Result<CriticalFunctions> {
        critical_functions(&self.psi)
    }
}

/// `E′(θ)`: exact through `ψ` when `3 ≤ N ≤` [`SYMBOLIC_CAP`], otherwise from
/// the tangent linear system on the matrix path.
pub fn cost_derivative(
    game: &GameSpec,
    pop: &PopulationConfig,
    scheme: IncentiveScheme,
    theta: f64,
) -> Result<f64> {
    let x = chain::selection_gap(game, pop, theta)?;
    if (3..=SYMBOLIC_CAP).contains(&pop.size) {
        Ok(CostProfile::new(game, pop, scheme)?.derivative(theta))
    } else {
        cost_slope_at_gap(pop.size, scheme, pop.beta, theta, x)
    }
}
