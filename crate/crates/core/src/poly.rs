//! Dense univariate polynomials over ℤ.
//!
//! This is the exact substrate for the cost reduction `E(θ) = θ·ψ(u)`:
//! polynomials with rational coefficients are always stored with the
//! denominators cleared, so every coefficient is a [`BigInt`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Polynomial `Σ c_k u^k`, coefficients in ascending order, no trailing zeros.
#[derive(Clone)]
pub struct Poly {
    coeffs: Vec<BigInt>,
    // f64 image of `coeffs`, so evaluation does not convert on every call.
    approx: Vec<f64>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Eq for Poly {}

impl std::hash::Hash for Poly {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let mag = c.abs();
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "u")?;
                    } else {
                        write!(f, "u^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        let approx = coeffs.iter().map(big_to_f64).collect();
        Poly { coeffs, approx }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Poly {
            coeffs: Vec::new(),
            approx: Vec::new(),
        }
    }

    pub fn constant(c: BigInt) -> Self {
        Poly::new(vec![c])
    }

    /// `c · u^k`.
    pub fn monomial(c: BigInt, k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k];
        coeffs.push(c);
        Poly::new(coeffs)
    }

    /// `1 + u + … + u^{len-1}`.
    pub fn geometric(len: usize) -> Self {
        Poly::new(vec![BigInt::one(); len])
    }

    /// The cyclotomic polynomial `Φ_d`, from `u^d − 1 = Π_{e | d} Φ_e`.
    pub fn cyclotomic(d: usize) -> Poly {
        assert!(d >= 1, "cyclotomic index must be positive");
        let mut p = &Poly::monomial(BigInt::one(), d) - &Poly::constant(BigInt::one());
        for e in (1..d).filter(|e| d.is_multiple_of(*e)) {
            p = p
                .exact_div(&Poly::cyclotomic(e))
                .expect("Φ_e divides u^d − 1");
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial has none.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigInt::from(k))
                .collect(),
        )
    }

    /// Multiplicity of the root at zero together with the quotient by `u^k`.
    pub fn split_zero_root(&self) -> (usize, Poly) {
        let k = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        (k, Poly::new(self.coeffs[k..].to_vec()))
    }

    /// Gcd of the coefficients, signed like the leading coefficient.
    pub fn content(&self) -> BigInt {
        let g = self.coeffs.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        match self.leading() {
            Some(l) if l.is_negative() => -g,
            _ => g,
        }
    }

    /// `self / content(self)`: integer coefficients with gcd one and a
    /// positive leading coefficient.
    pub fn primitive_part(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let c = self.content();
        Poly::new(self.coeffs.iter().map(|a| a / &c).collect())
    }

    /// Divides by a positive constant factor only, keeping the sign pattern.
    pub fn positive_primitive_part(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let c = self.content().abs();
        Poly::new(self.coeffs.iter().map(|a| a / &c).collect())
    }

    /// Pseudo-remainder `lc(b)^{deg a − deg b + 1} · a mod b`.
    pub fn pseudo_rem(&self, b: &Poly) -> Poly {
        let db = b.degree().expect("pseudo-remainder by zero polynomial");
        let Some(da) = self.degree() else {
            return Poly::zero();
        };
        if da < db {
            return self.clone();
        }
        let lb = b.leading().unwrap().clone();
        let mut r = self.coeffs.clone();
        let mut e = da - db + 1;
        while r.len() > db && !r.is_empty() {
            let dr = r.len() - 1;
            let lr = r[dr].clone();
            for c in r.iter_mut() {
                *c *= &lb;
            }
            let shift = dr - db;
            for (k, bc) in b.coeffs.iter().enumerate() {
                r[k + shift] -= &lr * bc;
            }
            e -= 1;
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        let scale = num_traits::pow(lb, e);
        Poly::new(r.into_iter().map(|c| c * &scale).collect())
    }

    /// Exact quotient in ℤ[u], if `divisor` divides `self`.
    pub fn exact_div(&self, divisor: &Poly) -> Option<Poly> {
        let dd = divisor.degree()?;
        let Some(da) = self.degree() else {
            return Some(Poly::zero());
        };
        if da < dd {
            return None;
        }
        let lead = divisor.leading().unwrap();
        let mut r = self.coeffs.clone();
        let mut q = vec![BigInt::zero(); da - dd + 1];
        for k in (0..=da - dd).rev() {
            let top = &r[k + dd];
            if top.is_zero() {
                continue;
            }
            let (qk, rem) = top.div_rem(lead);
            if !rem.is_zero() {
                return None;
            }
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                r[k + j] -= &qk * dc;
            }
            q[k] = qk;
        }
        if r.iter().all(Zero::is_zero) {
            Some(Poly::new(q))
        } else {
            None
        }
    }

    /// Greatest common divisor, primitive with positive leading coefficient.
    pub fn gcd(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.primitive_part();
        }
        if other.is_zero() {
            return self.primitive_part();
        }
        if modular::coprime(self, other) {
            return Poly::one_poly();
        }
        subresultant_gcd(self, other)
    }

    fn one_poly() -> Poly {
        Poly::constant(BigInt::one())
    }

    /// Removes repeated factors.
    pub fn squarefree_part(&self) -> Poly {
        let d = self.derivative();
        if d.is_zero() {
            return self.primitive_part();
        }
        let g = self.gcd(&d);
        if g.degree() == Some(0) {
            self.primitive_part()
        } else {
            self.primitive_part()
                .exact_div(&g)
                .expect("gcd divides its argument")
                .primitive_part()
        }
    }

    /// Horner evaluation in floating point. For `|u| > 1` the reversed
    /// polynomial is evaluated at `1/u` to keep the partial sums bounded.
    pub fn eval(&self, u: f64) -> f64 {
        match self.degree() {
            None => 0.0,
            Some(d) if u.abs() > 1.0 => self.eval_reversed(1.0 / u) * u.powi(d as i32),
            Some(_) => self.horner(u),
        }
    }

    fn horner(&self, u: f64) -> f64 {
        self.approx.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// `u^d · p(1/u)` evaluated at `v = 1/u`.
    pub(crate) fn eval_reversed(&self, v: f64) -> f64 {
        self.approx.iter().fold(0.0, |acc, &c| acc * v + c)
    }

    /// Exact sign of `p(m · 2^{-s})`.
    pub fn sign_at_dyadic(&self, m: &BigInt, s: u64) -> Ordering {
        match self.eval_dyadic_scaled(m, s).sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }

    /// `2^{s·d} · p(m / 2^s)` as an exact integer.
    fn eval_dyadic_scaled(&self, m: &BigInt, s: u64) -> BigInt {
        let Some(d) = self.degree() else {
            return BigInt::zero();
        };
        let mut acc = self.coeffs[d].clone();
        for (i, c) in self.coeffs.iter().enumerate().take(d).rev() {
            acc = acc * m + (c << (s * (d - i) as u64));
        }
        acc
    }

    /// `p(u + 1)`.
    fn taylor_shift_one(coeffs: &mut [BigInt]) {
        let n = coeffs.len();
        for i in 0..n.saturating_sub(1) {
            for j in (i..n - 1).rev() {
                let next = coeffs[j + 1].clone();
                coeffs[j] += next;
            }
        }
    }

    /// Sign changes in the coefficients of `(x+1)^d p(1/(x+1))`, an upper
    /// bound (with equal parity) for the roots of `p` in `(0, 1)`.
    fn unit_interval_variations(coeffs: &[BigInt]) -> usize {
        let mut rev: Vec<BigInt> = coeffs.iter().rev().cloned().collect();
        Poly::taylor_shift_one(&mut rev);
        sign_variations(&rev)
    }

    /// Isolates and refines all positive real roots (multiplicities dropped).
    ///
    /// Uses Descartes' rule of signs with dyadic bisection on exact integer
    /// coefficients, then bisects each isolating interval with exact sign
    /// evaluation until it is narrower than double precision.
    pub fn positive_roots(&self) -> Vec<f64> {
        if self.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let (_, p) = self.split_zero_root();
        let p = p.squarefree_part();
        let Some(d) = p.degree() else {
            return Vec::new();
        };
        if d == 0 {
            return Vec::new();
        }
        // Cauchy bound 1 + max|a_i / a_d| < 2^b.
        let lead_bits = p.leading().unwrap().bits() as i64;
        let max_bits = p.coeffs.iter().map(|c| c.bits() as i64).max().unwrap();
        let b = (max_bits - lead_bits + 2).max(1) as u64;
        // q(y) = p(2^b y), roots in (0, 1).
        let q: Vec<BigInt> = p
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c << (b * i as u64))
            .collect();

        let mut isolated: Vec<(BigInt, u64)> = Vec::new();
        let mut exact: Vec<(BigInt, u64)> = Vec::new();
        let mut stack = vec![(q, BigInt::zero(), 0u64)];
        while let Some((coeffs, c, k)) = stack.pop() {
            let v = Poly::unit_interval_variations(&coeffs);
            if v == 0 {
                continue;
            }
            if v == 1 {
                isolated.push((c, k));
                continue;
            }
            let n = coeffs.len() - 1;
            let left: Vec<BigInt> = coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| a << (n - i) as u64)
                .collect();
            let mut right = left.clone();
            Poly::taylor_shift_one(&mut right);
            let c2: BigInt = &c << 1u32;
            if right[0].is_zero() {
                exact.push((&c2 + 1, k + 1));
                right.remove(0);
            }
            stack.push((left, c2.clone(), k + 1));
            stack.push((right, c2 + 1, k + 1));
        }

        // Convert from y-intervals to u-dyadics: u = y · 2^b.
        let mut roots: Vec<f64> = exact
            .iter()
            .map(|(m, k)| dyadic_to_f64(m, *k as i64 - b as i64))
            .collect();
        for (c, k) in isolated {
            roots.push(p.refine_root(c, k as i64 - b as i64));
        }
        roots.sort_by(f64::total_cmp);
        roots
    }

    /// Bisects the root in `(c, c+1) · 2^{-s}` down to below f64 resolution.
    fn refine_root(&self, c: BigInt, s: i64) -> f64 {
        let mut lo = c;
        let mut s = s;
        // Sign of p just right of lo; an endpoint may itself be an exact root
        // found earlier as a bisection midpoint.
        let sign_lo = match self.sign_at(&lo, s) {
            Ordering::Equal => match self.sign_at(&(&lo + 1), s) {
                Ordering::Equal => self.derivative().sign_at(&lo, s),
                hi => hi.reverse(),
            },
            sign => sign,
        };
        // Width 2^{-s} is below one ulp once lo has more than 55 bits.
        for _ in 0..4000 {
            if lo.bits() > 55 {
                break;
            }
            let left = &lo << 1u32;
            let mid = &left + 1;
            s += 1;
            match self.sign_at(&mid, s) {
                Ordering::Equal => return dyadic_to_f64(&mid, s),
                sm if sm == sign_lo => lo = mid,
                _ => lo = left,
            }
        }
        dyadic_to_f64(&((&lo << 1u32) + 1), s + 1)
    }

    fn sign_at(&self, m: &BigInt, s: i64) -> Ordering {
        if s >= 0 {
            self.sign_at_dyadic(m, s as u64)
        } else {
            self.sign_at_dyadic(&(m << (-s) as u64), 0)
        }
    }
}

fn sign_variations(coeffs: &[BigInt]) -> usize {
    let mut last = Sign::NoSign;
    let mut count = 0;
    for c in coeffs {
        let s = c.sign();
        if s == Sign::NoSign {
            continue;
        }
        if last != Sign::NoSign && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Correctly rounded-ish conversion that never overflows for huge integers.
pub(crate) fn big_to_f64(c: &BigInt) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        if c.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `m · 2^{-s}` as a double.
fn dyadic_to_f64(m: &BigInt, s: i64) -> f64 {
    let bits = m.bits() as i64;
    let shift = (bits - 64).max(0);
    let top = big_to_f64(&(m >> shift as u64));
    ldexp(top, shift - s)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Subresultant PRS gcd.
fn subresultant_gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut a, mut b) = if a.degree() >= b.degree() {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    a = a.primitive_part();
    b = b.primitive_part();
    let mut g = BigInt::one();
    let mut h = BigInt::one();
    loop {
        let delta = a.degree().unwrap() - b.degree().unwrap();
        let r = a.pseudo_rem(&b);
        if r.is_zero() {
            return b.primitive_part();
        }
        if r.degree() == Some(0) {
            return Poly::one_poly();
        }
        a = b;
        let divisor = &g * num_traits::pow(h.clone(), delta);
        b = Poly::new(r.coeffs.iter().map(|c| c / &divisor).collect());
        g = a.leading().unwrap().clone();
        h = match delta {
            0 => h,
            1 => g.clone(),
            _ => num_traits::pow(g.clone(), delta) / num_traits::pow(h, delta - 1),
        };
    }
}

mod modular {
    //! Gcd degree over 𝔽_p, used to certify coprimality without the PRS.
    use super::Poly;
    use num_bigint::BigInt;
    use num_traits::{ToPrimitive, Zero};

    const PRIMES: [u64; 3] = [4_294_967_291, 4_294_967_279, 4_294_967_231];

    fn reduce(p: &Poly, m: u64) -> Vec<u64> {
        let mb = BigInt::from(m);
        let mut v: Vec<u64> = p
            .coeffs()
            .iter()
            .map(|c| {
                let r = c % &mb;
                let r = if r < BigInt::zero() { r + &mb } else { r };
                r.to_u64().unwrap()
            })
            .collect();
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    fn mulmod(a: u64, b: u64, m: u64) -> u64 {
        ((a as u128 * b as u128) % m as u128) as u64
    }

    fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, a, m);
            }
            a = mulmod(a, a, m);
            e >>= 1;
        }
        r
    }

    fn rem(a: &mut Vec<u64>, b: &[u64], m: u64) {
        let db = b.len() - 1;
        let inv = powmod(b[db], m - 2, m);
        while a.len() > db {
            let da = a.len() - 1;
            let f = mulmod(a[da], inv, m);
            let shift = da - db;
            for (k, &bc) in b.iter().enumerate() {
                let t = mulmod(f, bc, m);
                a[k + shift] = (a[k + shift] + m - t) % m;
            }
            while a.last() == Some(&0) {
                a.pop();
            }
        }
    }

    fn gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>, m: u64) -> usize {
        while !b.is_empty() {
            rem(&mut a, &b, m);
            std::mem::swap(&mut a, &mut b);
        }
        a.len().saturating_sub(1)
    }

    /// True only when the inputs are certainly coprime over ℚ.
    pub(super) fn coprime(a: &Poly, b: &Poly) -> bool {
        let (Some(da), Some(db)) = (a.degree(), b.degree()) else {
            return false;
        };
        for &m in &PRIMES {
            let ra = reduce(a, m);
            let rb = reduce(b, m);
            // Leading coefficients must survive the reduction.
            if ra.len() != da + 1 || rb.len() != db + 1 {
                continue;
            }
            return gcd_degree(ra, rb, m) == 0;
        }
        false
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn detects_coprime_and_shared_factor() {
            let a = Poly::from_i64(&[1, 1]);
            let b = Poly::from_i64(&[1, 0, 1]);
            assert!(coprime(&a, &b));
            let c = Poly::from_i64(&[1, 0, -1]);
            assert!(!coprime(&a, &c));
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}
