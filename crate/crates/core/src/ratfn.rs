//! Exact rational functions in one variable.
//!
//! Coefficients are kept as integers: a ratio of polynomials with rational
//! coefficients can always be rescaled to one with integer coefficients, and
//! integer arithmetic keeps gcd computations fraction-free.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::poly::Poly;

/// `num(u) / den(u)` in lowest terms, with integer coefficients, no common
/// integer content, and a positive leading denominator coefficient.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalFn {
    num: Poly,
    den: Poly,
}

impl fmt::Debug for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl RationalFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidParameter(
                "rational function with zero denominator".into(),
            ));
        }
        if num.is_zero() {
            return Ok(RationalFn::zero());
        }
        let g = num.gcd(&den);
        let (num, den) = if g.degree() == Some(0) {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        Ok(RationalFn::normalized(num, den))
    }

    /// Builds from parts already known to share no polynomial factor.
    pub(crate) fn from_coprime(num: Poly, den: Poly) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return RationalFn::zero();
        }
        RationalFn::normalized(num, den)
    }

    fn normalized(num: Poly, den: Poly) -> Self {
        let mut g = num.content().abs().gcd(&den.content().abs());
        if den.leading().is_some_and(Signed::is_negative) {
            g = -g;
        }
        if g.is_one() {
            return RationalFn { num, den };
        }
        let div = |p: &Poly| Poly::new(p.coeffs().iter().map(|c| c / &g).collect());
        RationalFn {
            num: div(&num),
            den: div(&den),
        }
    }

    pub fn zero() -> Self {
        RationalFn {
            num: Poly::zero(),
            den: Poly::constant(BigInt::one()),
        }
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFn::from_coprime(p, Poly::constant(BigInt::one()))
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Floating-point value at `u`. Large `|u|` is handled through the
    /// reversed polynomials so neither part overflows on its own.
    pub fn eval(&self, u: f64) -> f64 {
        let (Some(dn), Some(dd)) = (self.num.degree(), self.den.degree()) else {
            return 0.0;
        };
        if u.abs() <= 1.0 {
            return self.num.eval(u) / self.den.eval(u);
        }
        let v = 1.0 / u;
        let ratio = self.num.eval_reversed(v) / self.den.eval_reversed(v);
        let k = dn as i64 - dd as i64;
        if k == 0 {
            ratio
        } else if let Ok(k) = i32::try_from(k) {
            ratio * u.powi(k)
        } else {
            ratio * (k as f64 * u.abs().ln()).exp() * if u < 0.0 && k % 2 != 0 { -1.0 } else { 1.0 }
        }
    }

    pub fn derivative(&self) -> RationalFn {
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        let den = &self.den * &self.den;
        RationalFn::new(num, den).expect("square of a nonzero denominator")
    }

    pub fn recip(&self) -> Result<RationalFn> {
        if self.is_zero() {
            return Err(Error::InvalidParameter(
                "reciprocal of the zero function".into(),
            ));
        }
        Ok(RationalFn::from_coprime(self.den.clone(), self.num.clone()))
    }
}

impl Add for &RationalFn {
    type Output = RationalFn;
    fn add(self, rhs: &RationalFn) -> RationalFn {
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalFn::new(num, &self.den * &rhs.den).expect("nonzero denominators")
    }
}

impl Sub for &RationalFn {
    type Output = RationalFn;
    fn sub(self, rhs: &RationalFn) -> RationalFn {
        self + &(-rhs)
    }
}

impl Mul for &RationalFn {
    type Output = RationalFn;
    fn mul(self, rhs: &RationalFn) -> RationalFn {
        RationalFn::new(&self.num * &rhs.num, &self.den * &rhs.den).expect("nonzero denominators")
    }
}

impl Div for &RationalFn {
    type Output = RationalFn;
    /// Panics on division by the zero function.
    fn div(self, rhs: &RationalFn) -> RationalFn {
        assert!(!rhs.is_zero(), "division by the zero rational function");
        RationalFn::new(&self.num * &rhs.den, &self.den * &rhs.num).expect("nonzero denominators")
    }
}

impl Neg for &RationalFn {
    type Output = RationalFn;
    fn neg(self) -> RationalFn {
        RationalFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Poly {
        Poly::from_i64(c)
    }

    fn r(n: &[i64], d: &[i64]) -> RationalFn {
        RationalFn::new(p(n), p(d)).unwrap()
    }

    #[test]
    fn reduces_common_factors() {
        // (u² − 1) / (2u − 2) = (u + 1) / 2
        let f = r(&[-1, 0, 1], &[-2, 2]);
        assert_eq!(f.numerator(), &p(&[1, 1]));
        assert_eq!(f.denominator(), &p(&[2]));
        let g = r(&[3], &[0, -6]);
        assert_eq!(g.numerator(), &p(&[-1]));
        assert_eq!(g.denominator(), &p(&[0, 2]));
    }

    #[test]
    fn field_operations() {
        let a = r(&[1], &[1, 1]);
        let b = r(&[1], &[-1, 1]);
        // 1/(u+1) + 1/(u−1) = 2u/(u²−1)
        assert_eq!(&a + &b, r(&[0, 2], &[-1, 0, 1]));
        assert_eq!(&(&a * &b) / &b, a);
        assert_eq!(&(&a - &a), &RationalFn::zero());
        assert_eq!(a.recip().unwrap(), RationalFn::from_poly(p(&[1, 1])));
    }

    #[test]
    fn derivative_quotient_rule() {
        // d/du u/(u+1) = 1/(u+1)²
        assert_eq!(r(&[0, 1], &[1, 1]).derivative(), r(&[1], &[1, 2, 1]));
    }

    #[test]
    fn evaluation_is_stable_for_large_arguments() {
        let f = r(&[1, 0, 0, 3], &[2, 0, 1]);
        for &u in &[0.3, 1.0, 2.5, 1e3] {
            let direct = (1.0 + 3.0 * u * u * u) / (2.0 + u * u);
            assert!((f.eval(u) - direct).abs() <= 1e-14 * direct.abs());
        }
        // Degree-400 parts overflow f64 individually at u = 1e3.
        let big = RationalFn::from_coprime(Poly::geometric(401), Poly::geometric(400));
        assert!((big.eval(1e3) - 1000.0).abs() < 1e-9);
    }
}
