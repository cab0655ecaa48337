//! Exact dyadic rationals and the small number-theory helpers used by the
//! congruence test.
//!
//! A [`Dyadic`] is a value `num / 2^exp` kept in canonical form: either
//! `exp == 0` or `num` is odd. Every droplet concentration produced by a
//! mixing graph is dyadic, so this is the only value type the crate needs.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("invalid dyadic literal `{0}`")]
    Syntax(String),
    #[error("denominator in `{0}` is not a power of two")]
    NonDyadicDenominator(String),
    #[error("decimal `{0}` has no finite binary representation")]
    NonDyadicDecimal(String),
    #[error("greatest common odd divisor is undefined for an all-zero input")]
    AllZero,
}

/// Exact binary rational `num / 2^exp` in canonical form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u32,
}

fn trailing_zeros(x: &BigInt) -> u32 {
    x.trailing_zeros().map(|t| t as u32).unwrap_or(0)
}

impl Dyadic {
    /// Builds `num / 2^exp` and canonicalizes it.
    pub fn new(num: impl Into<BigInt>, exp: u32) -> Self {
        let num = num.into();
        if num.is_zero() {
            return Dyadic { num, exp: 0 };
        }
        let shift = trailing_zeros(&num).min(exp);
        Dyadic {
            num: num >> shift,
            exp: exp - shift,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Dyadic {
            num: v.into(),
            exp: 0,
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    /// Number of fractional bits (the canonical exponent).
    pub fn precision(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.exp == 0
    }

    pub fn to_integer(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.num.clone())
    }

    /// `true` for even integers, `false` for odd ones, `None` for fractions.
    pub fn is_even(&self) -> Option<bool> {
        self.is_integer().then(|| self.num.is_even())
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    /// Multiplies by `2^shift`; negative shifts divide.
    pub fn mul_pow2(&self, shift: i64) -> Dyadic {
        if shift >= 0 {
            let s = shift as u64;
            if s >= self.exp as u64 {
                Dyadic::new(&self.num << (s - self.exp as u64), 0)
            } else {
                Dyadic::new(self.num.clone(), self.exp - s as u32)
            }
        } else {
            Dyadic::new(self.num.clone(), self.exp + (-shift) as u32)
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> Dyadic {
        Dyadic::new(&self.num * k, self.exp)
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &other.num, self.exp + other.exp)
    }

    /// Exact division by a nonzero integer, if the quotient is dyadic.
    pub fn div_int(&self, k: &BigInt) -> Option<Dyadic> {
        assert!(!k.is_zero(), "division by zero");
        let tz = trailing_zeros(k);
        let odd = k >> tz;
        let (q, r) = self.num.div_rem(&odd);
        if !r.is_zero() {
            return None;
        }
        Some(Dyadic::new(q, self.exp + tz))
    }

    /// Exact midpoint `(x + y) / 2`.
    pub fn mid(&self, other: &Dyadic) -> Dyadic {
        (self + other).mul_pow2(-1)
    }

    /// Rescales to a common exponent and returns the two numerators.
    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, u32) {
        let e = self.exp.max(other.exp);
        (
            &self.num << (e - self.exp),
            &other.num << (e - other.exp),
            e,
        )
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.num.to_f64().unwrap_or(f64::NAN);
        n / 2f64.powi(self.exp as i32)
    }
}

/// Midpoint of two concentrations.
pub fn mid(x: &Dyadic, y: &Dyadic) -> Dyadic {
    x.mid(y)
}

/// Canonical precision of a concentration.
pub fn precision(x: &Dyadic) -> u32 {
    x.precision()
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Dyadic::from_int(v)
    }
}

impl From<BigInt> for Dyadic {
    fn from(v: BigInt) -> Self {
        Dyadic::from_int(v)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a + b, e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a - b, e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -&self.num,
            exp: self.exp,
        }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, BigInt::one() << self.exp)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Dyadic {
    type Err = NumericError;

    /// Accepts `7`, `-3`, `5/16` and finite binary decimals such as `0.375`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let syntax = || NumericError::Syntax(s.to_string());
        if t.is_empty() {
            return Err(syntax());
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = parse_int(p.trim()).ok_or_else(syntax)?;
            let q: BigInt = parse_int(q.trim()).ok_or_else(syntax)?;
            if !q.is_positive() {
                return Err(NumericError::NonDyadicDenominator(s.to_string()));
            }
            let tz = trailing_zeros(&q);
            if !(&q >> tz).is_one() {
                return Err(NumericError::NonDyadicDenominator(s.to_string()));
            }
            return Ok(Dyadic::new(p, tz));
        }
        if let Some((ip, fp)) = t.split_once('.') {
            let neg = ip.starts_with('-');
            let digits_ok = |x: &str| x.chars().all(|c| c.is_ascii_digit());
            let ip_digits = ip.trim_start_matches(['-', '+']);
            if fp.is_empty() || !digits_ok(fp) || !digits_ok(ip_digits) {
                return Err(syntax());
            }
            let whole: BigInt = format!("{}{}", if ip_digits.is_empty() { "0" } else { ip_digits }, fp)
                .parse()
                .map_err(|_| syntax())?;
            let j = fp.len() as u32;
            // whole / 10^j = whole / (2^j 5^j)
            let five = BigInt::from(5u32).pow(j);
            let (q, r) = whole.div_rem(&five);
            if !r.is_zero() {
                return Err(NumericError::NonDyadicDecimal(s.to_string()));
            }
            let v = Dyadic::new(q, j);
            return Ok(if neg { -v } else { v });
        }
        parse_int(t).map(Dyadic::from_int).ok_or_else(syntax)
    }
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl serde::Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Dyadic {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Distinct odd primes dividing `n`, ascending, by trial division.
pub fn odd_prime_factors(n: u64) -> Vec<u64> {
    let mut n = n;
    while n > 0 && n.is_multiple_of(2) {
        n /= 2;
    }
    let mut out = Vec::new();
    let mut p = 3u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 2;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Largest odd divisor of `n`.
pub fn odd_part(n: u64) -> u64 {
    if n == 0 {
        0
    } else {
        n >> n.trailing_zeros()
    }
}

pub fn is_power_of_two(n: u64) -> bool {
    n.is_power_of_two()
}

/// Every `p^k <= cap` with `p` an odd prime factor of `n` and `k >= 1`,
/// sorted ascending.
pub fn odd_prime_power_candidates(n: u64, cap: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    for p in odd_prime_factors(n) {
        let p = BigInt::from(p);
        let mut b = p.clone();
        while &b <= cap {
            out.push(b.clone());
            b *= &p;
        }
    }
    out.sort();
    out
}

/// Largest odd integer dividing every value: the gcd with its factors of two
/// removed.
pub fn greatest_common_odd_divisor(values: &[BigInt]) -> Result<BigInt, NumericError> {
    let g = values
        .iter()
        .fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g.is_zero() {
        return Err(NumericError::AllZero);
    }
    let tz = trailing_zeros(&g);
    Ok(g >> tz)
}
