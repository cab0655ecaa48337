//! Congruence safety of mixing pairs and the invariants maintained while
//! mixing towards a near-final configuration.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::config::Configuration;
use crate::numeric::{is_power_of_two, odd_prime_factors, Dyadic};

use super::SynthesisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InvariantKind {
    /// Two distinct non-singletons, incongruent modulo every odd prime of `n`.
    InvI,
    /// Non-blocking and 5-incongruent.
    InvIPrime5,
    /// Non-blocking and 3-incongruent.
    InvIPrime6,
    PowerOfTwo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SafetyContext {
    pub n: usize,
    pub pbar: Vec<u64>,
    pub invariant_kind: InvariantKind,
}

impl SafetyContext {
    pub fn for_n(n: usize) -> Self {
        let invariant_kind = if is_power_of_two(n as u64) {
            InvariantKind::PowerOfTwo
        } else {
            match n {
                5 => InvariantKind::InvIPrime5,
                6 => InvariantKind::InvIPrime6,
                _ => InvariantKind::InvI,
            }
        };
        SafetyContext {
            n,
            pbar: odd_prime_factors(n as u64),
            invariant_kind,
        }
    }
}

/// `true` for even integers. Panics on non-integral values, which never reach
/// the normalized frame.
pub(crate) fn is_even(v: &Dyadic) -> bool {
    v.is_even().expect("integral concentration")
}

pub(crate) fn residue(v: &Dyadic, p: u64) -> u64 {
    let i = v.to_integer().expect("integral concentration");
    i.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits")
}

pub fn is_p_congruent(e: &Configuration, p: u64) -> bool {
    let mut it = e.values();
    let Some(first) = it.next() else { return true };
    let r = residue(first, p);
    it.all(|v| residue(v, p) == r)
}

pub fn is_pbar_incongruent(e: &Configuration, pbar: &[u64]) -> bool {
    pbar.iter().all(|&p| !is_p_congruent(e, p))
}

fn check_pair(e: &Configuration, x: &Dyadic, y: &Dyadic) -> Result<(), SynthesisError> {
    if x == y {
        return Err(SynthesisError::Precondition(format!(
            "pair ({x}, {y}) mixes equal values"
        )));
    }
    for v in [x, y] {
        if !e.contains(v) {
            return Err(SynthesisError::Precondition(format!(
                "{v} is not in {e}"
            )));
        }
        if v.is_even().is_none() {
            return Err(SynthesisError::Precondition(format!("{v} is not an integer")));
        }
    }
    if is_even(x) != is_even(y) {
        return Err(SynthesisError::Precondition(format!(
            "pair ({x}, {y}) has mixed parity"
        )));
    }
    Ok(())
}

/// Whether mixing `x` and `y` leaves `e` incongruent modulo `p`.
pub fn is_pr_safe(
    e: &Configuration,
    x: &Dyadic,
    y: &Dyadic,
    p: u64,
) -> Result<bool, SynthesisError> {
    check_pair(e, x, y)?;
    if is_p_congruent(e, p) {
        return Err(SynthesisError::Precondition(format!(
            "{e} is already {p}-congruent"
        )));
    }
    Ok(pr_safe_unchecked(e, x, y, p))
}

fn pr_safe_unchecked(e: &Configuration, x: &Dyadic, y: &Dyadic, p: u64) -> bool {
    let mid = residue(&x.mid(y), p);
    // some droplet other than one x and one y must leave the residue class of the midpoint
    e.entries().any(|(v, k)| {
        let left = k - usize::from(v == x) - usize::from(v == y);
        left > 0 && residue(v, p) != mid
    })
}

pub fn is_pbar_safe(e: &Configuration, x: &Dyadic, y: &Dyadic, pbar: &[u64]) -> bool {
    pbar.iter().all(|&p| pr_safe_unchecked(e, x, y, p))
}

pub fn non_singletons(e: &Configuration) -> usize {
    e.entries().filter(|(_, k)| *k >= 2).count()
}

/// `{k:a1, a2, a3}` with `k = n - 2`, `a1` of the other parity than `a2, a3`
/// and `a1` not their midpoint.
pub fn is_blocking(e: &Configuration, kind: InvariantKind) -> bool {
    let big = match kind {
        InvariantKind::InvIPrime5 => 3,
        InvariantKind::InvIPrime6 => 4,
        _ => return false,
    };
    if e.m() != 3 {
        return false;
    }
    let Some((a1, _)) = e.entries().find(|(_, k)| *k == big) else {
        return false;
    };
    let rest: Vec<&Dyadic> = e.values().filter(|v| *v != a1).collect();
    if e.entries().any(|(v, k)| v != a1 && k != 1) {
        return false;
    }
    let (a2, a3) = (rest[0], rest[1]);
    *a1 != a2.mid(a3) && is_even(a2) == is_even(a3) && is_even(a1) != is_even(a2)
}

/// Invariant (I) or (I'), whichever `ctx` selects.
pub fn satisfies_invariant(e: &Configuration, ctx: &SafetyContext) -> bool {
    if !e.is_integral() || !e.mean().is_some_and(|m| m.is_integer()) {
        return false;
    }
    match ctx.invariant_kind {
        InvariantKind::PowerOfTwo => true,
        InvariantKind::InvI => non_singletons(e) >= 2 && is_pbar_incongruent(e, &ctx.pbar),
        k => !is_blocking(e, k) && is_pbar_incongruent(e, &ctx.pbar),
    }
}

/// Distinct same-parity values whose mixing keeps the invariant.
pub fn is_lambda_safe(e: &Configuration, x: &Dyadic, y: &Dyadic, ctx: &SafetyContext) -> bool {
    if x == y || !e.contains(x) || !e.contains(y) || is_even(x) != is_even(y) {
        return false;
    }
    let after = e.apply_mix(x, y).expect("both present");
    satisfies_invariant(&after, ctx)
}

/// All `(lambda)`-safe pairs `(x, y)`, `x < y`, with both values in `values`.
pub fn lambda_safe_pairs<'a, I>(e: &Configuration, values: I, ctx: &SafetyContext) -> Vec<(Dyadic, Dyadic)>
where
    I: IntoIterator<Item = &'a Dyadic>,
{
    let vals: Vec<&Dyadic> = values.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let mut out = Vec::new();
    for (i, x) in vals.iter().enumerate() {
        for y in &vals[i + 1..] {
            if is_lambda_safe(e, x, y, ctx) {
                out.push(((*x).clone(), (*y).clone()));
            }
        }
    }
    out
}

/// Values taking part in some same-parity pair that is unsafe for an odd
/// prime of `n`.
pub fn unsafe_values(e: &Configuration, pbar: &[u64]) -> BTreeSet<Dyadic> {
    let vals: Vec<&Dyadic> = e.values().collect();
    let mut out = BTreeSet::new();
    for (i, x) in vals.iter().enumerate() {
        for y in &vals[i + 1..] {
            if is_even(x) == is_even(y) && !is_pbar_safe(e, x, y, pbar) {
                out.insert((*x).clone());
                out.insert((*y).clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: i64) -> Dyadic {
        Dyadic::from_int(v)
    }

    fn a15() -> Configuration {
        Configuration::from_entries([(d(3), 11), (d(10), 1), (d(16), 1), (d(18), 1), (d(28), 1)])
    }

    #[test]
    fn worked_example_safety() {
        let a = a15();
        assert_eq!(a.n(), 15);
        assert!(!is_pr_safe(&a, &d(10), &d(16), 5).unwrap());
        assert!(is_pr_safe(&a, &d(18), &d(28), 5).unwrap());
        assert!(!is_pbar_safe(&a, &d(10), &d(16), &[3, 5]));
        assert_eq!(unsafe_values(&a, &[3, 5]).len(), 2);
        assert!(is_pr_safe(&a, &d(10), &d(12), 5).is_err());
        assert!(is_pr_safe(&a, &d(3), &d(10), 5).is_err());
    }

    #[test]
    fn blocking_examples() {
        let ctx5 = SafetyContext::for_n(5);
        let e = Configuration::from_ints(&[0, 0, 0, 3, 7]);
        assert!(is_blocking(&e, ctx5.invariant_kind));
        assert!(!satisfies_invariant(&e, &ctx5));
        let e = Configuration::from_ints(&[0, 0, 4, 4, 7]);
        assert!(satisfies_invariant(&e, &SafetyContext::for_n(7)) || e.n() == 5);
        assert!(non_singletons(&e) == 2 && is_pbar_incongruent(&e, &[5]));
        // midpoint case is not blocking
        let e = Configuration::from_ints(&[2, 2, 2, 1, 3]);
        assert!(!is_blocking(&e, ctx5.invariant_kind));
        let ctx6 = SafetyContext::for_n(6);
        let e = Configuration::from_ints(&[0, 0, 0, 0, 3, 7]);
        assert!(is_blocking(&e, ctx6.invariant_kind));
        assert!(satisfies_invariant(
            &Configuration::from_ints(&[0, 0, 4, 4, 10, 12]),
            &ctx6
        ));
    }

    #[test]
    fn contexts() {
        assert_eq!(SafetyContext::for_n(5).invariant_kind, InvariantKind::InvIPrime5);
        assert_eq!(SafetyContext::for_n(6).pbar, vec![3]);
        assert_eq!(SafetyContext::for_n(8).invariant_kind, InvariantKind::PowerOfTwo);
        let c = SafetyContext::for_n(15);
        assert_eq!((c.invariant_kind, c.pbar), (InvariantKind::InvI, vec![3, 5]));
    }

    fn arb_incongruent() -> impl Strategy<Value = (Configuration, u64)> {
        (prop::sample::select(vec![3u64, 5, 7]), prop::collection::vec(0i64..40, 5..12))
            .prop_map(|(p, v)| (Configuration::from_ints(&v), p))
            .prop_filter("p-incongruent", |(c, p)| !is_p_congruent(c, *p))
    }

    proptest! {
        #[test]
        fn at_most_one_unsafe_pair_per_prime((c, p) in arb_incongruent()) {
            let vals: Vec<Dyadic> = c.values().cloned().collect();
            let mut unsafe_pairs = 0;
            for (i, x) in vals.iter().enumerate() {
                for y in &vals[i + 1..] {
                    if is_even(x) == is_even(y) && !is_pr_safe(&c, x, y, p).unwrap() {
                        unsafe_pairs += 1;
                    }
                }
            }
            prop_assert!(unsafe_pairs <= 1);
        }

        #[test]
        fn non_singleton_pairs_are_safe((c, p) in arb_incongruent()) {
            for (a, k) in c.entries() {
                if k < 2 { continue; }
                for b in c.values() {
                    if b != a && is_even(a) == is_even(b) {
                        prop_assert!(is_pr_safe(&c, a, b, p).unwrap());
                    }
                }
            }
        }

        #[test]
        fn safety_matches_definition((c, p) in arb_incongruent()) {
            let vals: Vec<Dyadic> = c.values().cloned().collect();
            for (i, x) in vals.iter().enumerate() {
                for y in &vals[i + 1..] {
                    if is_even(x) != is_even(y) { continue; }
                    let after = c.apply_mix(x, y).unwrap();
                    prop_assert_eq!(is_pr_safe(&c, x, y, p).unwrap(), !is_p_congruent(&after, p));
                }
            }
        }
    }
}
