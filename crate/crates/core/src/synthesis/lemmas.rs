//! Case analyses producing a pair that is safe for the invariant or whose
//! mixing makes the configuration near-final, and the construction of the
//! starting configuration from the normalized input.

use crate::config::Configuration;
use crate::graph::{MixStep, MixingSequence};
use crate::numeric::Dyadic;

use super::near_final::is_structured_near_final;
use super::safety::{is_even, is_pbar_safe, non_singletons, satisfies_invariant, unsafe_values, InvariantKind, SafetyContext};
use super::SynthesisError;

type Pair = (Dyadic, Dyadic);

/// Entries ordered by multiplicity, descending, then by value.
fn by_multiplicity(e: &Configuration) -> Vec<(Dyadic, usize)> {
    let mut v: Vec<(Dyadic, usize)> = e.entries().map(|(x, k)| (x.clone(), k)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

fn gap(lemma: &'static str, e: &Configuration) -> SynthesisError {
    SynthesisError::LemmaGap {
        lemma,
        state: e.to_string(),
    }
}

fn dist(x: &Dyadic, y: &Dyadic) -> Dyadic {
    (x - y).abs()
}

/// Lemma for `e_i, e_j, e_k` of one parity with `f_i, f_j >= 2`: pair `e_k`
/// with the nearer of `e_i, e_j`.
fn three_same_parity(ei: &Dyadic, ej: &Dyadic, ek: &Dyadic) -> Pair {
    if dist(ei, ek) <= dist(ej, ek) {
        (ei.clone(), ek.clone())
    } else {
        (ej.clone(), ek.clone())
    }
}

/// Lemma for `e_i, e_j, e_k` of one parity with `f_i >= 2`, `f_j = f_k = 1`
/// and another non-singleton `e_l`.
fn one_double_two_singles(ei: &Dyadic, ej: &Dyadic, ek: &Dyadic, el: &Dyadic) -> Pair {
    if ei.mid(ej) != *el {
        (ei.clone(), ej.clone())
    } else {
        (ei.clone(), ek.clone())
    }
}

/// Picks `e_i, e_j, e_k` of a common parity in this order and applies the
/// matching three-value lemma.
fn three_values(es: &[(Dyadic, usize)], idx: [usize; 3]) -> Option<Pair> {
    let [i, j, k] = idx;
    let (ei, fi) = &es[i];
    let (ej, fj) = &es[j];
    let (ek, _) = &es[k];
    if *fi >= 2 && *fj >= 2 {
        return Some(three_same_parity(ei, ej, ek));
    }
    if *fi >= 2 {
        let el = es
            .iter()
            .enumerate()
            .find(|(t, (_, f))| *f >= 2 && ![i, j, k].contains(t))
            .map(|(_, (v, _))| v.clone())?;
        return Some(one_double_two_singles(ei, ej, ek, &el));
    }
    None
}

/// Configurations with `n >= 7` satisfying (I).
fn find_invariant_i(e: &Configuration, ctx: &SafetyContext) -> Result<Pair, SynthesisError> {
    let es = by_multiplicity(e);
    let m = es.len();
    let par = |i: usize| is_even(&es[i].0);
    let pi = par(0);
    let f = |i: usize| es[i].1;
    let pick = |i: usize, j: usize| (es[i].0.clone(), es[j].0.clone());
    if m < 3 {
        return Err(gap("m = 2 is near-final", e));
    }
    if m == 3 {
        return Ok(if par(1) == pi {
            pick(0, 1)
        } else if par(2) == pi {
            pick(0, 2)
        } else {
            pick(1, 2)
        });
    }
    if f(0) >= 3 {
        if let Some(j) = (1..4).find(|&j| par(j) == pi) {
            return Ok(pick(0, j));
        }
        // e2, e3, e4 share the other parity; e1 is a non-singleton outside them
        return three_values(&es, [1, 2, 3]).ok_or_else(|| gap("three same-parity values", e));
    }
    if m == 4 {
        let same: Vec<usize> = (1..4).filter(|&j| par(j) == pi).collect();
        return match same.len() {
            0 => three_values(&es, [1, 2, 3]).ok_or_else(|| gap("three same-parity values", e)),
            1 => {
                let partner = (0..3).find(|&j| par(j) == par(3)).expect("unique partner");
                Ok(pick(partner, 3))
            }
            _ => three_values(&es, [0, same[0], same[1]]).ok_or_else(|| gap("three same-parity values", e)),
        };
    }
    // m >= 5 and f1 = f2 = 2
    if f(2) == 2 {
        let first5: Vec<usize> = (0..5).collect();
        let evens: Vec<usize> = first5.iter().copied().filter(|&i| par(i)).collect();
        let odds: Vec<usize> = first5.iter().copied().filter(|&i| !par(i)).collect();
        let class = if evens.len() >= 3 { evens } else { odds };
        return three_values(&es, [class[0], class[1], class[2]])
            .ok_or_else(|| gap("three same-parity values among five", e));
    }
    if par(1) != pi {
        // two of e3, e4, e5 share a parity; pair them through the doubleton of that parity
        for (j, k) in [(2, 3), (2, 4), (3, 4)] {
            if par(j) == par(k) {
                let i = if par(j) == pi { 0 } else { 1 };
                let l = 1 - i;
                return Ok(one_double_two_singles(&es[i].0, &es[j].0, &es[k].0, &es[l].0));
            }
        }
        return Err(gap("two same-parity singletons", e));
    }
    if let Some(k) = (2..m).find(|&k| par(k) == pi) {
        return Ok(three_same_parity(&es[0].0, &es[1].0, &es[k].0));
    }
    // every singleton has the other parity; take one whose pairs are all safe
    let singles: Vec<&Dyadic> = es[2..].iter().map(|(v, _)| v).collect();
    for x in &singles {
        if singles
            .iter()
            .all(|y| y == x || is_pbar_safe(e, x, y, &ctx.pbar))
        {
            let far = singles
                .iter()
                .filter(|y| *y != x)
                .max_by(|a, b| dist(x, a).cmp(&dist(x, b)).then_with(|| b.cmp(a)))
                .expect("at least three singletons");
            return Ok(((*x).clone(), (*far).clone()));
        }
    }
    Err(gap("safe singleton", e))
}

/// Five-droplet analysis. `safe` judges safety modulo the relevant prime on
/// the full configuration, which for `n = 6` is larger than `e`.
fn find_five<F>(e: &Configuration, safe: F) -> Result<Pair, SynthesisError>
where
    F: Fn(&Dyadic, &Dyadic) -> bool,
{
    let es = by_multiplicity(e);
    let m = es.len();
    let par = |i: usize| is_even(&es[i].0);
    let pi = par(0);
    let pick = |i: usize, j: usize| (es[i].0.clone(), es[j].0.clone());
    match m {
        3 if es[0].1 == 2 => Ok(if par(1) == pi {
            pick(0, 1)
        } else if par(2) == pi {
            pick(0, 2)
        } else {
            pick(1, 2)
        }),
        3 => (1..3)
            .find(|&j| par(j) == pi)
            .map(|j| pick(0, j))
            .ok_or_else(|| gap("non-blocking triple", e)),
        4 => {
            let same: Vec<usize> = (1..4).filter(|&j| par(j) == pi).collect();
            match same.len() {
                0 => Ok(if safe(&es[1].0, &es[2].0) { pick(1, 2) } else { pick(1, 3) }),
                1 => Ok(pick(0, same[0])),
                _ => {
                    let other = (1..4).find(|j| *j != same[0] && *j != same[1]).unwrap();
                    if es[0].0.mid(&es[same[0]].0) != es[other].0 {
                        Ok(pick(0, same[0]))
                    } else {
                        Ok(pick(0, same[1]))
                    }
                }
            }
        }
        5 => {
            let vals: Vec<&Dyadic> = e.values().collect();
            let evens: Vec<&Dyadic> = vals.iter().copied().filter(|v| is_even(v)).collect();
            let odds: Vec<&Dyadic> = vals.iter().copied().filter(|v| !is_even(v)).collect();
            let class = if evens.len() >= 3 { evens } else { odds };
            let e1 = class
                .iter()
                .copied()
                .find(|x| class.iter().all(|y| y == x || safe(x, y)))
                .ok_or_else(|| gap("safe value in the majority class", e))?;
            let rest: Vec<&Dyadic> = class.iter().copied().filter(|y| *y != e1).collect();
            let nearest = |c: &[&Dyadic]| {
                (*c.iter()
                    .min_by(|a, b| dist(e1, a).cmp(&dist(e1, b)).then_with(|| a.cmp(b)))
                    .unwrap())
                .clone()
            };
            let partner = match rest.len() {
                4 => nearest(&rest),
                3 => {
                    let odd_one = vals.iter().find(|v| is_even(v) != is_even(e1)).unwrap();
                    if e1.mid(rest[0]) != **odd_one {
                        rest[0].clone()
                    } else {
                        rest[1].clone()
                    }
                }
                _ => nearest(&rest),
            };
            Ok((e1.clone(), partner))
        }
        _ => Err(gap("five-droplet analysis", e)),
    }
}

/// Six droplets through the five-droplet analysis of `e` minus one droplet of
/// highest multiplicity. The reduced pair can fail on `e` itself (its
/// midpoint may land on a value of `e`, which the five-droplet argument
/// excludes by primality of 5); then the first same-parity pair of `e` that
/// works is taken instead.
fn find_six(e: &Configuration, ctx: &SafetyContext) -> Result<Pair, SynthesisError> {
    let es = by_multiplicity(e);
    let mut reduced = e.clone();
    reduced.remove(&es[0].0);
    if let Ok((x, y)) = find_five(&reduced, |x, y| is_pbar_safe(e, x, y, &ctx.pbar)) {
        if keeps_invariant(e, &x, &y, ctx) {
            return Ok((x, y));
        }
    }
    let vals: Vec<&Dyadic> = e.values().collect();
    for (i, x) in vals.iter().enumerate() {
        for y in &vals[i + 1..] {
            if is_even(x) == is_even(y) && keeps_invariant(e, x, y, ctx) {
                return Ok(((*x).clone(), (*y).clone()));
            }
        }
    }
    Err(gap("six-droplet analysis", e))
}

fn keeps_invariant(e: &Configuration, x: &Dyadic, y: &Dyadic, ctx: &SafetyContext) -> bool {
    let after = e.apply_mix(x, y).expect("present");
    satisfies_invariant(&after, ctx) || is_structured_near_final(&after)
}

/// A pair that is safe for the invariant of `ctx` or whose mixing makes `e`
/// near-final. `e` must satisfy the invariant and not be near-final.
pub fn find_safe_or_nearfinal_pair(e: &Configuration, ctx: &SafetyContext) -> Result<Pair, SynthesisError> {
    if is_structured_near_final(e) {
        return Err(SynthesisError::Precondition(format!("{e} is already near-final")));
    }
    if !satisfies_invariant(e, ctx) {
        return Err(SynthesisError::Precondition(format!("{e} violates the invariant")));
    }
    let pair = match ctx.invariant_kind {
        InvariantKind::InvI => find_invariant_i(e, ctx)?,
        InvariantKind::InvIPrime5 => find_five(e, |x, y| is_pbar_safe(e, x, y, &ctx.pbar))?,
        InvariantKind::InvIPrime6 => find_six(e, ctx)?,
        InvariantKind::PowerOfTwo => {
            return Err(SynthesisError::Precondition("power-of-two sizes need no invariant".into()))
        }
    };
    let (x, y) = pair;
    if x == y || is_even(&x) != is_even(&y) {
        return Err(gap("pair selection", e));
    }
    let after = e.apply_mix(&x, &y)?;
    if !satisfies_invariant(&after, ctx) && !is_structured_near_final(&after) {
        return Err(SynthesisError::LemmaGap {
            lemma: "safe or near-final pair",
            state: format!("{e} (chosen pair {x}, {y})"),
        });
    }
    Ok(if x <= y { (x, y) } else { (y, x) })
}

/// Mixes at most two pairs of the all-even normalized input so that it gains
/// a second non-singleton while staying incongruent.
pub fn build_e(c_hat: &Configuration, ctx: &SafetyContext) -> Result<(Configuration, MixingSequence), SynthesisError> {
    if ctx.invariant_kind != InvariantKind::InvI || non_singletons(c_hat) >= 2 {
        return Ok((c_hat.clone(), Vec::new()));
    }
    let mut e = c_hat.clone();
    let mut seq = Vec::new();
    let mut mix = |e: &mut Configuration, x: &Dyadic, y: &Dyadic| {
        e.mix_in_place(x, y).expect("present");
        seq.push(MixStep::new(x.clone(), y.clone()));
    };
    let singletons = |e: &Configuration| -> Vec<Dyadic> {
        e.entries().filter(|(_, k)| *k == 1).map(|(v, _)| v.clone()).collect()
    };
    if non_singletons(&e) == 0 {
        let bad = unsafe_values(&e, &ctx.pbar);
        let singles = singletons(&e);
        let b = singles
            .iter()
            .find(|v| !bad.contains(*v))
            .ok_or_else(|| gap("singleton outside unsafe pairs", &e))?
            .clone();
        let c = singles
            .iter()
            .filter(|v| **v != b)
            .min_by(|x, y| dist(&b, x).cmp(&dist(&b, y)).then_with(|| x.cmp(y)))
            .expect("n >= 7")
            .clone();
        mix(&mut e, &b, &c);
    }
    let (a, f) = e
        .entries()
        .find(|(_, k)| *k >= 2)
        .map(|(v, k)| (v.clone(), k))
        .expect("one non-singleton");
    if non_singletons(&e) < 2 {
        if f >= 3 {
            let b = singletons(&e)[0].clone();
            mix(&mut e, &a, &b);
        } else {
            let bad = unsafe_values(&e, &ctx.pbar);
            let free: Vec<Dyadic> = singletons(&e).into_iter().filter(|v| !bad.contains(v)).collect();
            if free.len() < 3 {
                return Err(gap("three singletons outside unsafe pairs", &e));
            }
            let (b, c, d) = (&free[0], &free[1], &free[2]);
            if b.mid(c) != a {
                mix(&mut e, b, c);
            } else {
                mix(&mut e, b, d);
            }
        }
    }
    Ok((e, seq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Configuration {
        Configuration::from_ints(v)
    }

    #[test]
    fn build_e_reaches_the_invariant() {
        let ctx = SafetyContext::for_n(7);
        for v in [
            vec![0, 2, 4, 6, 8, 10, 12],
            vec![0, 0, 2, 6, 8, 10, 16],
            vec![0, 0, 0, 2, 6, 8, 12],
            vec![0, 0, 4, 4, 6, 8, 20],
        ] {
            let c = ints(&v);
            let (e, seq) = build_e(&c, &ctx).unwrap();
            assert!(seq.len() <= 2);
            assert!(satisfies_invariant(&e, &ctx), "{c} -> {e}");
        }
    }

    #[test]
    fn finder_returns_safe_pairs() {
        let ctx = SafetyContext::for_n(7);
        let e = ints(&[0, 0, 2, 2, 5, 7, 12]);
        let (x, y) = find_safe_or_nearfinal_pair(&e, &ctx).unwrap();
        assert_eq!(is_even(&x), is_even(&y));
        let ctx5 = SafetyContext::for_n(5);
        let e = ints(&[0, 2, 4, 8, 16]);
        find_safe_or_nearfinal_pair(&e, &ctx5).unwrap();
        let ctx6 = SafetyContext::for_n(6);
        let e = ints(&[0, 0, 2, 4, 10, 14]);
        find_safe_or_nearfinal_pair(&e, &ctx6).unwrap();
        // the reduced five-droplet pair (12, 14) would give {12, 4:13, 92}, which is blocking
        let e = ints(&[12, 12, 13, 13, 14, 92]);
        let (x, y) = find_safe_or_nearfinal_pair(&e, &ctx6).unwrap();
        assert_ne!((x, y), (Dyadic::from_int(12), Dyadic::from_int(14)));
    }

    #[test]
    fn finder_rejects_near_final_input() {
        let ctx = SafetyContext::for_n(7);
        assert!(matches!(
            find_safe_or_nearfinal_pair(&ints(&[4, 4, 4, 0, 2, 6, 8]), &ctx),
            Err(SynthesisError::Precondition(_))
        ));
    }
}
