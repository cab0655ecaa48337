//! Droplet configurations: multisets of concentrations, their statistics and
//! the affine normalizations that preserve perfect mixability.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use thiserror::Error;

use crate::numeric::{greatest_common_odd_divisor, Dyadic, NumericError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration is empty")]
    Empty,
    #[error("droplet {0} is not present in the configuration")]
    MissingDroplet(Dyadic),
    #[error("not perfectly mixable: average has no finite binary representation")]
    NonDyadicMean,
    #[error("value {0} is not an integer")]
    NonIntegral(Dyadic),
    #[error("all concentrations are equal; the configuration is already perfectly mixed")]
    AllEqual,
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// A multiset of concentrations, stored as strictly ascending
/// `(value, multiplicity)` entries.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Configuration {
    entries: BTreeMap<Dyadic, usize>,
}

/// Serialized as the ascending list of droplet values.
impl serde::Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.droplets())
    }
}

/// Summary statistics of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigStats {
    pub n: usize,
    pub m: usize,
    /// `None` when the average has an odd denominator factor.
    pub mu: Option<Dyadic>,
    /// Sum of squared deviations from the average; defined when `mu` is.
    pub psi: Option<Dyadic>,
    pub diam: Dyadic,
    /// `sum log2(|c| + 2)` over droplets.
    pub size_bits: f64,
    pub c_max: Dyadic,
}

/// Affine map `v -> ((v * 2^pow2_shift - offset) / odd_divisor) * (2 if doubled)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationRecord {
    pub offset: Dyadic,
    pub pow2_shift: i64,
    pub odd_divisor: BigInt,
    pub doubled: bool,
}

impl Default for NormalizationRecord {
    fn default() -> Self {
        NormalizationRecord {
            offset: Dyadic::zero(),
            pow2_shift: 0,
            odd_divisor: BigInt::one(),
            doubled: false,
        }
    }
}

impl NormalizationRecord {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn apply(&self, v: &Dyadic) -> Dyadic {
        let shifted = &v.mul_pow2(self.pow2_shift) - &self.offset;
        let reduced = shifted
            .div_int(&self.odd_divisor)
            .expect("odd divisor of a dyadic is exact");
        if self.doubled {
            reduced.mul_pow2(1)
        } else {
            reduced
        }
    }

    pub fn invert(&self, w: &Dyadic) -> Dyadic {
        let halved = if self.doubled { w.mul_pow2(-1) } else { w.clone() };
        (&halved.mul_int(&self.odd_divisor) + &self.offset).mul_pow2(-self.pow2_shift)
    }

    pub fn apply_config(&self, c: &Configuration) -> Configuration {
        c.map_values(|v| self.apply(v))
    }

    /// Composes `self` (applied first) with a map that only offsets, divides
    /// and doubles (`next.pow2_shift == 0`).
    pub fn then(&self, next: &NormalizationRecord) -> NormalizationRecord {
        assert_eq!(next.pow2_shift, 0, "only the first map may rescale by 2^k");
        assert!(!self.doubled, "cannot compose after doubling");
        // ((v 2^s - o1)/t1 - o2)/t2 = (v 2^s - (o1 + o2 t1)) / (t1 t2)
        NormalizationRecord {
            offset: &self.offset + &next.offset.mul_int(&self.odd_divisor),
            pow2_shift: self.pow2_shift,
            odd_divisor: &self.odd_divisor * &next.odd_divisor,
            doubled: next.doubled,
        }
    }
}

fn log2_abs_plus_two(c: &Dyadic) -> f64 {
    let v = c.abs().to_f64() + 2.0;
    if v.is_finite() {
        v.log2()
    } else {
        c.numerator().bits() as f64 - c.precision() as f64
    }
}

impl Configuration {
    pub fn new() -> Self {
        Configuration::default()
    }

    pub fn from_values<I: IntoIterator<Item = Dyadic>>(values: I) -> Self {
        let mut c = Configuration::new();
        for v in values {
            c.add(v, 1);
        }
        c
    }

    pub fn from_entries<I: IntoIterator<Item = (Dyadic, usize)>>(entries: I) -> Self {
        let mut c = Configuration::new();
        for (v, k) in entries {
            c.add(v, k);
        }
        c
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Configuration::from_values(values.iter().map(|&v| Dyadic::from_int(v)))
    }

    /// `k` droplets of concentration `v`.
    pub fn uniform(k: usize, v: Dyadic) -> Self {
        Configuration::from_entries([(v, k)])
    }

    pub fn add(&mut self, v: Dyadic, k: usize) {
        if k > 0 {
            *self.entries.entry(v).or_insert(0) += k;
        }
    }

    /// Removes one droplet of `v`; returns whether it was present.
    pub fn remove(&mut self, v: &Dyadic) -> bool {
        match self.entries.get_mut(v) {
            Some(k) if *k > 1 => {
                *k -= 1;
                true
            }
            Some(_) => {
                self.entries.remove(v);
                true
            }
            None => false,
        }
    }

    pub fn entries(&self) -> impl DoubleEndedIterator<Item = (&Dyadic, usize)> + '_ {
        self.entries.iter().map(|(v, &k)| (v, k))
    }

    pub fn values(&self) -> impl DoubleEndedIterator<Item = &Dyadic> + '_ {
        self.entries.keys()
    }

    /// All droplets, ascending, with repetition.
    pub fn droplets(&self) -> Vec<Dyadic> {
        self.entries
            .iter()
            .flat_map(|(v, &k)| std::iter::repeat_n(v.clone(), k))
            .collect()
    }

    pub fn n(&self) -> usize {
        self.entries.values().sum()
    }

    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn multiplicity(&self, v: &Dyadic) -> usize {
        self.entries.get(v).copied().unwrap_or(0)
    }

    pub fn contains(&self, v: &Dyadic) -> bool {
        self.entries.contains_key(v)
    }

    pub fn min(&self) -> Option<&Dyadic> {
        self.entries.keys().next()
    }

    pub fn max(&self) -> Option<&Dyadic> {
        self.entries.keys().next_back()
    }

    pub fn sum(&self) -> Dyadic {
        self.entries
            .iter()
            .fold(Dyadic::zero(), |acc, (v, &k)| &acc + &v.mul_int(&BigInt::from(k)))
    }

    /// Exact average, or `None` if it is not dyadic (or the multiset is empty).
    pub fn mean(&self) -> Option<Dyadic> {
        let n = self.n();
        if n == 0 {
            return None;
        }
        self.sum().div_int(&BigInt::from(n))
    }

    pub fn psi(&self) -> Option<Dyadic> {
        let mu = self.mean()?;
        Some(self.psi_about(&mu))
    }

    /// `sum (c - x)^2` over droplets.
    pub fn psi_about(&self, x: &Dyadic) -> Dyadic {
        self.entries.iter().fold(Dyadic::zero(), |acc, (v, &k)| {
            let d = v - x;
            &acc + &d.mul(&d).mul_int(&BigInt::from(k))
        })
    }

    pub fn diam(&self) -> Dyadic {
        match (self.min(), self.max()) {
            (Some(a), Some(b)) => b - a,
            _ => Dyadic::zero(),
        }
    }

    pub fn size_bits(&self) -> f64 {
        self.entries
            .iter()
            .map(|(v, &k)| k as f64 * log2_abs_plus_two(v))
            .sum()
    }

    /// Largest absolute concentration.
    pub fn c_max(&self) -> Dyadic {
        self.entries
            .keys()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Dyadic::zero)
    }

    /// Largest precision over all concentrations.
    pub fn precision(&self) -> u32 {
        self.entries.keys().map(|v| v.precision()).max().unwrap_or(0)
    }

    pub fn is_integral(&self) -> bool {
        self.entries.keys().all(|v| v.is_integer())
    }

    pub fn stats(&self) -> ConfigStats {
        let mu = self.mean();
        ConfigStats {
            n: self.n(),
            m: self.m(),
            psi: mu.as_ref().map(|mu| self.psi_about(mu)),
            mu,
            diam: self.diam(),
            size_bits: self.size_bits(),
            c_max: self.c_max(),
        }
    }

    pub fn map_values<F: Fn(&Dyadic) -> Dyadic>(&self, f: F) -> Configuration {
        Configuration::from_entries(self.entries.iter().map(|(v, &k)| (f(v), k)))
    }

    /// Every value shifted by `x`.
    pub fn offset(&self, x: &Dyadic) -> Configuration {
        self.map_values(|v| v + x)
    }

    /// Every value multiplied by `2^delta`.
    pub fn scale_pow2(&self, delta: i64) -> Configuration {
        self.map_values(|v| v.mul_pow2(delta))
    }

    pub fn scale_int(&self, k: &BigInt) -> Configuration {
        self.map_values(|v| v.mul_int(k))
    }

    /// Union of two multisets.
    pub fn union(&self, other: &Configuration) -> Configuration {
        let mut out = self.clone();
        for (v, k) in other.entries() {
            out.add(v.clone(), k);
        }
        out
    }

    /// `true` if `other` is a sub-multiset of `self`.
    pub fn includes(&self, other: &Configuration) -> bool {
        other.entries().all(|(v, k)| self.multiplicity(v) >= k)
    }

    /// Multiset difference `self - other`; `None` unless `other` is included.
    pub fn difference(&self, other: &Configuration) -> Option<Configuration> {
        if !self.includes(other) {
            return None;
        }
        let mut out = self.clone();
        for (v, k) in other.entries() {
            for _ in 0..k {
                out.remove(v);
            }
        }
        Some(out)
    }

    /// Replaces one droplet of `x` and one of `y` by two droplets of their
    /// midpoint.
    pub fn apply_mix(&self, x: &Dyadic, y: &Dyadic) -> Result<Configuration, ConfigError> {
        let mut out = self.clone();
        out.mix_in_place(x, y)?;
        Ok(out)
    }

    pub fn mix_in_place(&mut self, x: &Dyadic, y: &Dyadic) -> Result<(), ConfigError> {
        if x == y {
            return if self.multiplicity(x) >= 2 {
                Ok(())
            } else {
                Err(ConfigError::MissingDroplet(x.clone()))
            };
        }
        if !self.contains(x) {
            return Err(ConfigError::MissingDroplet(x.clone()));
        }
        if !self.contains(y) {
            return Err(ConfigError::MissingDroplet(y.clone()));
        }
        let z = x.mid(y);
        self.remove(x);
        self.remove(y);
        self.add(z, 2);
        Ok(())
    }

    /// Splits an integral configuration into its even and odd parts.
    pub fn parity_split(&self) -> Result<(Configuration, Configuration), ConfigError> {
        let mut even = Configuration::new();
        let mut odd = Configuration::new();
        for (v, k) in self.entries() {
            match v.is_even() {
                Some(true) => even.add(v.clone(), k),
                Some(false) => odd.add(v.clone(), k),
                None => return Err(ConfigError::NonIntegral(v.clone())),
            }
        }
        Ok((even, odd))
    }

    /// Integer values of an integral configuration.
    pub fn integer_values(&self) -> Result<Vec<BigInt>, ConfigError> {
        self.entries
            .keys()
            .map(|v| v.to_integer().ok_or_else(|| ConfigError::NonIntegral(v.clone())))
            .collect()
    }

    /// One line per entry, `<mult>:<value>` or `<value>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (v, k) in self.entries() {
            if k == 1 {
                s.push_str(&format!("{v}\n"));
            } else {
                s.push_str(&format!("{k}:{v}\n"));
            }
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Configuration, ConfigError> {
        let mut c = Configuration::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Parse {
                line: i + 1,
                message,
            };
            let (mult, value) = match line.split_once(':') {
                Some((k, v)) => {
                    let k: usize = k
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("invalid multiplicity `{}`", k.trim())))?;
                    if k == 0 {
                        return Err(err("multiplicity must be positive".into()));
                    }
                    (k, v.trim())
                }
                None => (1, line),
            };
            let v: Dyadic = value.parse().map_err(|e: NumericError| err(e.to_string()))?;
            c.add(v, mult);
        }
        if c.is_empty() {
            return Err(ConfigError::Empty);
        }
        Ok(c)
    }
}

impl FromStr for Configuration {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Configuration::parse_text(s)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, k)) in self.entries().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if k == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{k}:{v}")?;
            }
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Every value shifted by `x`.
pub fn offset(c: &Configuration, x: &Dyadic) -> Configuration {
    c.offset(x)
}

/// Every value multiplied by `2^delta`.
pub fn scale_pow2(c: &Configuration, delta: i64) -> Configuration {
    c.scale_pow2(delta)
}

/// Rescales by `2^delta`, `delta = max(prec(C), prec(mu))`, so the
/// configuration and its average become integral.
pub fn normalize_integral(
    c: &Configuration,
) -> Result<(Configuration, NormalizationRecord), ConfigError> {
    if c.is_empty() {
        return Err(ConfigError::Empty);
    }
    let mu = c.mean().ok_or(ConfigError::NonDyadicMean)?;
    let delta = c.precision().max(mu.precision()) as i64;
    let record = NormalizationRecord {
        pow2_shift: delta,
        ..NormalizationRecord::identity()
    };
    Ok((c.scale_pow2(delta), record))
}

fn reduce_integral(
    c: &Configuration,
    doubled: bool,
) -> Result<(Configuration, NormalizationRecord), ConfigError> {
    if c.is_empty() {
        return Err(ConfigError::Empty);
    }
    let values = c.integer_values()?;
    let mu = c.mean().ok_or(ConfigError::NonDyadicMean)?;
    if !mu.is_integer() {
        return Err(ConfigError::NonIntegral(mu));
    }
    if c.m() == 1 {
        return Err(ConfigError::AllEqual);
    }
    let base = values[0].clone();
    let shifted: Vec<BigInt> = values.iter().map(|v| v - &base).collect();
    let theta = greatest_common_odd_divisor(&shifted)?;
    let record = NormalizationRecord {
        offset: Dyadic::from_int(base),
        pow2_shift: 0,
        odd_divisor: theta,
        doubled,
    };
    Ok((record.apply_config(c), record))
}

/// Offsets by the minimum, divides by the greatest common odd divisor of the
/// offsets and doubles. The result is all even with an integral average.
pub fn normalize_hat(
    c_int: &Configuration,
) -> Result<(Configuration, NormalizationRecord), ConfigError> {
    reduce_integral(c_int, true)
}

/// Same as [`normalize_hat`] without the final doubling.
pub fn normalize_reduced(
    c_int: &Configuration,
) -> Result<(Configuration, NormalizationRecord), ConfigError> {
    reduce_integral(c_int, false)
}

pub fn apply_mix(c: &Configuration, x: &Dyadic, y: &Dyadic) -> Result<Configuration, ConfigError> {
    c.apply_mix(x, y)
}

pub fn parity_split(c: &Configuration) -> Result<(Configuration, Configuration), ConfigError> {
    c.parity_split()
}

/// `true` when every value is congruent modulo `b` (integral input only).
pub(crate) fn all_congruent(values: &[BigInt], b: &BigInt) -> bool {
    if b.is_one() {
        return true;
    }
    let mut it = values.iter();
    let Some(first) = it.next() else { return true };
    let r = first.mod_floor(b);
    it.all(|v| v.mod_floor(b) == r)
}

/// Difference of squares drop for a mix, `(x - y)^2 / 2`.
pub fn mix_potential_drop(x: &Dyadic, y: &Dyadic) -> Dyadic {
    let d = x - y;
    d.mul(&d).mul_pow2(-1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    fn cfg(vals: &[&str]) -> Configuration {
        Configuration::from_values(vals.iter().map(|s| d(s)))
    }

    fn ints(v: &[i64]) -> Configuration {
        Configuration::from_ints(v)
    }

    #[test]
    fn stats_examples() {
        let s = ints(&[0, 0, 0, 3, 7]).stats();
        assert_eq!((s.n, s.m), (5, 3));
        assert_eq!(s.mu, Some(d("2")));
        assert_eq!(s.psi, Some(d("38")));
        let dyadic = cfg(&["1/16", "3/16", "7/32", "11/32", "7/16"]);
        assert_eq!(dyadic.mean(), Some(d("1/4")));
        let u = Configuration::uniform(4, d("3/8")).stats();
        assert_eq!((u.mu, u.psi, u.diam), (Some(d("3/8")), Some(d("0")), d("0")));
        assert_eq!(ints(&[0, 1]).stats().mu, Some(d("1/2")));
        assert_eq!(ints(&[0, 0, 1]).stats().mu, None);
        assert_eq!(ints(&[0, 0, 1]).stats().psi, None);
        let size = ints(&[0, 2]).size_bits();
        assert!((size - 3.0).abs() < 1e-12);
    }

    #[test]
    fn offset_and_scale_examples() {
        assert_eq!(offset(&ints(&[0, 1, 5]), &d("-1")), ints(&[-1, 0, 4]));
        assert_eq!(offset(&ints(&[3, 7]), &d("-3")), ints(&[0, 4]));
        assert_eq!(
            offset(&ints(&[0, 0, 0, 3, 7]), &d("5")).psi(),
            Some(d("38"))
        );
        assert_eq!(scale_pow2(&cfg(&["3/16", "9/16"]), 4), ints(&[3, 9]));
        assert_eq!(scale_pow2(&ints(&[0]), 10), ints(&[0]));
        assert_eq!(scale_pow2(&ints(&[5]), -1), cfg(&["5/2"]));
    }

    #[test]
    fn normalize_integral_examples() {
        let (c, r) = normalize_integral(&cfg(&["1/16", "3/16", "7/32", "11/32", "7/16"])).unwrap();
        assert_eq!(c, ints(&[2, 6, 7, 11, 14]));
        assert_eq!(r.pow2_shift, 5);
        assert_eq!(c.mean(), Some(d("8")));
        let (c, r) = normalize_integral(&ints(&[0, 0, 0, 3, 7])).unwrap();
        assert_eq!((c, r.pow2_shift), (ints(&[0, 0, 0, 3, 7]), 0));
        let (c, r) = normalize_integral(&cfg(&["0", "1/2", "1"])).unwrap();
        assert_eq!((c, r.pow2_shift), (ints(&[0, 1, 2]), 1));
        assert_eq!(
            normalize_integral(&ints(&[0, 0, 1])),
            Err(ConfigError::NonDyadicMean)
        );
    }

    #[test]
    fn normalize_hat_examples() {
        let (h, r) = normalize_hat(&ints(&[0, 0, 0, 3, 7])).unwrap();
        assert_eq!(h, ints(&[0, 0, 0, 6, 14]));
        assert_eq!(h.mean(), Some(d("4")));
        assert!(r.doubled);
        let (h, _) = normalize_hat(&ints(&[2, 6, 7, 11, 14])).unwrap();
        assert_eq!(h, ints(&[0, 8, 10, 18, 24]));
        assert_eq!(h.mean(), Some(d("12")));
        let (h, r) = normalize_hat(&ints(&[0, 6, 18, 30, 36])).unwrap();
        assert_eq!(r.odd_divisor, BigInt::from(3));
        assert_eq!(h, ints(&[0, 4, 12, 20, 24]));
        assert_eq!(normalize_hat(&ints(&[4, 4])), Err(ConfigError::AllEqual));
    }

    #[test]
    fn record_replay_is_exact() {
        let c = cfg(&["1/16", "3/16", "7/32", "11/32", "7/16"]);
        let (ci, r1) = normalize_integral(&c).unwrap();
        let (h, r2) = normalize_hat(&ci).unwrap();
        let full = r1.then(&r2);
        assert_eq!(full.apply_config(&c), h);
        for v in c.values() {
            assert_eq!(&full.invert(&full.apply(v)), v);
        }
    }

    #[test]
    fn apply_mix_examples() {
        let c = ints(&[0, 0, 0, 3, 7]);
        let after = apply_mix(&c, &d("3"), &d("7")).unwrap();
        assert_eq!(after, ints(&[0, 0, 0, 5, 5]));
        assert_eq!(
            apply_mix(&ints(&[0, 1]), &d("0"), &d("1")).unwrap(),
            Configuration::uniform(2, d("1/2"))
        );
        assert_eq!(&c.psi().unwrap() - &after.psi().unwrap(), d("8"));
        assert_eq!(mix_potential_drop(&d("3"), &d("7")), d("8"));
        assert_eq!(
            apply_mix(&c, &d("1"), &d("7")),
            Err(ConfigError::MissingDroplet(d("1")))
        );
        assert!(apply_mix(&c, &d("3"), &d("3")).is_err());
        assert_eq!(apply_mix(&c, &d("0"), &d("0")).unwrap(), c);
    }

    #[test]
    fn parity_split_examples() {
        let (e, o) = parity_split(&ints(&[0, 8, 10, 18, 24])).unwrap();
        assert_eq!((e, o.n()), (ints(&[0, 8, 10, 18, 24]), 0));
        let (e, o) = parity_split(&ints(&[0, 0, 0, 3, 7])).unwrap();
        assert_eq!((e, o), (ints(&[0, 0, 0]), ints(&[3, 7])));
        let (e, o) = parity_split(&ints(&[1])).unwrap();
        assert_eq!((e.n(), o), (0, ints(&[1])));
        assert!(parity_split(&cfg(&["1/2"])).is_err());
    }

    #[test]
    fn text_format() {
        let c = Configuration::parse_text("# header\n3:0\n5/16\n\n2:7/8  # trailing\n").unwrap();
        assert_eq!(c.n(), 6);
        assert_eq!(c.multiplicity(&d("0")), 3);
        assert_eq!(c.multiplicity(&d("7/8")), 2);
        assert_eq!(Configuration::parse_text(&c.to_text()).unwrap(), c);
        assert_eq!(Configuration::parse_text("# nothing\n"), Err(ConfigError::Empty));
        assert!(matches!(
            Configuration::parse_text("1\n1/3\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Configuration::parse_text("0:4\n"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert_eq!(c.to_string(), "{3:0, 5/16, 2:7/8}");
    }

    fn arb_int_config() -> impl Strategy<Value = Configuration> {
        prop::collection::vec(-40i64..40, 1..12).prop_map(|v| Configuration::from_ints(&v))
    }

    proptest! {
        #[test]
        fn mix_preserves_n_sum_and_drops_psi(c in arb_int_config(), i in 0usize..12, j in 0usize..12) {
            let vals: Vec<Dyadic> = c.values().cloned().collect();
            prop_assume!(vals.len() >= 2);
            let x = &vals[i % vals.len()];
            let y = &vals[j % vals.len()];
            prop_assume!(x != y);
            let after = c.apply_mix(x, y).unwrap();
            prop_assert_eq!(after.n(), c.n());
            prop_assert_eq!(after.sum(), c.sum());
            prop_assert_eq!(after.psi_about(&Dyadic::zero()) , c.psi_about(&Dyadic::zero()) - mix_potential_drop(x, y));
            if let (Some(p0), Some(p1)) = (c.psi(), after.psi()) {
                prop_assert_eq!(&p0 - &p1, mix_potential_drop(x, y));
            }
        }

        #[test]
        fn offset_and_scale_affect_psi_as_expected(c in arb_int_config(), x in -50i64..50, delta in -3i64..4) {
            let x = Dyadic::from_int(x);
            let off = c.offset(&x);
            prop_assert_eq!(off.diam(), c.diam());
            if let Some(psi) = c.psi() {
                prop_assert_eq!(off.psi().unwrap(), psi.clone());
                let sc = c.scale_pow2(delta);
                prop_assert_eq!(sc.psi().unwrap(), psi.mul_pow2(2 * delta));
                prop_assert_eq!(sc.diam(), c.diam().mul_pow2(delta));
            }
        }

        #[test]
        fn log_psi_bounded_by_twice_size(c in arb_int_config()) {
            if let Some(psi) = c.psi() {
                if psi > Dyadic::zero() {
                    prop_assert!(psi.to_f64().log2() <= 2.0 * c.size_bits() + 1e-9);
                }
            }
        }

        #[test]
        fn sub_multiset_has_smaller_psi(v in prop::collection::vec(-40i64..40, 2..12), keep in prop::collection::vec(any::<bool>(), 12)) {
            let all = Configuration::from_ints(&v);
            let sub: Vec<i64> = v.iter().zip(&keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
            prop_assume!(!sub.is_empty());
            let sub = Configuration::from_ints(&sub);
            // Psi about the true (possibly non-dyadic) mean: compare n*Psi via sums of squares.
            let n_psi = |c: &Configuration| {
                let n = BigInt::from(c.n());
                let s = c.sum().to_integer().unwrap();
                let sq = c.psi_about(&Dyadic::zero()).to_integer().unwrap();
                // n * Psi = n * sum c^2 - (sum c)^2, compare Psi = that / n
                (n.clone() * sq - &s * &s, n)
            };
            let (a_num, a_den) = n_psi(&sub);
            let (b_num, b_den) = n_psi(&all);
            prop_assert!(a_num * b_den <= b_num * a_den);
        }

        #[test]
        fn hat_is_even_and_incongruent(mut v in prop::collection::vec(-30i64..30, 4..10)) {
            let n = v.len() as i64;
            let s: i64 = v.iter().sum();
            *v.last_mut().unwrap() -= s.rem_euclid(n);
            let c = Configuration::from_ints(&v);
            prop_assume!(c.m() > 1);
            let (h, r) = normalize_hat(&c).unwrap();
            prop_assume!(r.odd_divisor.gcd(&BigInt::from(c.n())).is_one());
            prop_assert_eq!(r.apply_config(&c), h.clone());
            prop_assert!(h.values().all(|v| v.is_even() == Some(true)));
            prop_assert!(h.mean().unwrap().is_integer());
            // the offsets share no odd factor, so no odd prime makes the result congruent
            let vals = h.integer_values().unwrap();
            for p in crate::numeric::odd_prime_factors(c.n() as u64) {
                prop_assert!(!all_congruent(&vals, &BigInt::from(p)));
            }
        }
    }
}
