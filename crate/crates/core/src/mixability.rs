//! Perfect-mixability decision: Condition (MC) for `n >= 4` and the direct
//! rules for `n <= 3`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use serde::Serialize;

use crate::config::{all_congruent, normalize_integral, ConfigError, Configuration};
use crate::numeric::odd_prime_power_candidates;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "modulus")]
pub enum Reason {
    AllEqual,
    ConditionMC,
    SmallNRule,
    NonDyadicMean,
    /// `C` is `b`-congruent while `C + {mu}` is not.
    MCViolation(#[serde(serialize_with = "ser_bigint")] BigInt),
    N3Violation,
    N2Trivial,
}

fn ser_bigint<S: serde::Serializer>(b: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixabilityVerdict {
    pub mixable: bool,
    pub reason: Reason,
}

impl MixabilityVerdict {
    fn yes(reason: Reason) -> Self {
        MixabilityVerdict {
            mixable: true,
            reason,
        }
    }

    fn no(reason: Reason) -> Self {
        MixabilityVerdict {
            mixable: false,
            reason,
        }
    }

    /// The violating modulus, if the verdict is an MC violation.
    pub fn witness(&self) -> Option<&BigInt> {
        match &self.reason {
            Reason::MCViolation(b) => Some(b),
            _ => None,
        }
    }
}

impl fmt::Display for MixabilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = if self.mixable {
            "perfectly mixable"
        } else {
            "not perfectly mixable"
        };
        match &self.reason {
            Reason::AllEqual => write!(f, "{head}: all concentrations are equal"),
            Reason::ConditionMC => write!(f, "{head}: Condition (MC) holds"),
            Reason::SmallNRule => write!(f, "{head}: middle value is the midpoint of the outer two"),
            Reason::NonDyadicMean => {
                write!(f, "{head}: average has no finite binary representation")
            }
            Reason::MCViolation(b) => write!(
                f,
                "{head}: Condition (MC) fails for b={b} (configuration is {b}-congruent, its average is not)"
            ),
            Reason::N3Violation => {
                write!(f, "{head}: middle value is not the midpoint of the outer two")
            }
            Reason::N2Trivial => write!(f, "{head}: at most two droplets"),
        }
    }
}

/// `true` iff every value of an integral configuration lies in one residue
/// class modulo `b`.
pub fn is_b_congruent(a: &Configuration, b: &BigInt) -> Result<bool, ConfigError> {
    assert!(b.is_positive(), "modulus must be positive");
    Ok(all_congruent(&a.integer_values()?, b))
}

/// Condition (MC) on a configuration whose values and average are integers.
pub fn check_mc(c_int: &Configuration) -> Result<MixabilityVerdict, ConfigError> {
    if c_int.is_empty() {
        return Err(ConfigError::Empty);
    }
    let values = c_int.integer_values()?;
    let mu = c_int.mean().ok_or(ConfigError::NonDyadicMean)?;
    let mu = mu.to_integer().ok_or(ConfigError::NonIntegral(mu))?;
    // A b-congruent configuration has b | diam, so with negative values the
    // diameter may exceed c_max.
    let c_max = c_int.c_max().to_integer().expect("integral");
    let diam = c_int.diam().to_integer().expect("integral");
    let cap = c_max.max(diam);
    for b in odd_prime_power_candidates(c_int.n() as u64, &cap) {
        if all_congruent(&values, &b) && values[0].mod_floor(&b) != mu.mod_floor(&b) {
            return Ok(MixabilityVerdict::no(Reason::MCViolation(b)));
        }
    }
    Ok(MixabilityVerdict::yes(Reason::ConditionMC))
}

pub fn is_perfectly_mixable(c: &Configuration) -> Result<MixabilityVerdict, ConfigError> {
    if c.is_empty() {
        return Err(ConfigError::Empty);
    }
    if c.mean().is_none() {
        return Ok(MixabilityVerdict::no(Reason::NonDyadicMean));
    }
    if c.m() == 1 {
        return Ok(MixabilityVerdict::yes(Reason::AllEqual));
    }
    match c.n() {
        0 => unreachable!(),
        1 | 2 => Ok(MixabilityVerdict::yes(Reason::N2Trivial)),
        3 => {
            let d = c.droplets();
            if d[1] == d[0].mid(&d[2]) {
                Ok(MixabilityVerdict::yes(Reason::SmallNRule))
            } else {
                Ok(MixabilityVerdict::no(Reason::N3Violation))
            }
        }
        _ => {
            let (c_int, _) = normalize_integral(c)?;
            check_mc(&c_int)
        }
    }
}
