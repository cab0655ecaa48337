//! Mixing steps for `n >= 22` that shrink the potential by a constant factor
//! per short burst of safe mixes.

use crate::config::Configuration;
use crate::numeric::Dyadic;

use super::safety::{is_even, is_lambda_safe, lambda_safe_pairs};
use super::{MixState, SynthesisError};

const GAMMA: i64 = 2;

fn dist(x: &Dyadic, y: &Dyadic) -> Dyadic {
    (x - y).abs()
}

fn class(e: &Configuration, even: bool) -> Configuration {
    Configuration::from_entries(
        e.entries()
            .filter(|(v, _)| is_even(v) == even)
            .map(|(v, k)| (v.clone(), k)),
    )
}

/// `|x - y| * num >= diam * den`
fn at_least(x: &Dyadic, y: &Dyadic, diam: &Dyadic, num: i64, den: i64) -> bool {
    dist(x, y).mul_int(&num.into()) >= diam.mul_int(&den.into())
}

/// The one of `x, y` furthest from `c`, `x` on ties.
fn farther(c: &Dyadic, x: &Dyadic, y: &Dyadic) -> Dyadic {
    if dist(c, y) > dist(c, x) {
        y.clone()
    } else {
        x.clone()
    }
}

fn gap(lemma: &'static str, state: &MixState) -> SynthesisError {
    SynthesisError::LemmaGap {
        lemma,
        state: state.e.to_string(),
    }
}

/// One burst of mixes. `state.e` must satisfy (I), not be near-final and
/// contain a safe pair.
pub fn poly_step(state: &mut MixState) -> Result<(), SynthesisError> {
    let e = state.e.clone();
    let delta = e.diam();
    let (even, odd) = (class(&e, true), class(&e, false));
    let pi = even.n() >= odd.n();
    let e_pi = if pi { even } else { odd };
    if e_pi.m() == 1 {
        return majority_single(state, pi);
    }
    if at_least(e_pi.min().unwrap(), e_pi.max().unwrap(), &delta, GAMMA, 1) {
        return far_mix(state, pi);
    }
    e_mix(state, pi)?;
    if state.is_near_final() {
        return Ok(());
    }
    let (even, odd) = (class(&state.e, true), class(&state.e, false));
    let (now_pi, now_other) = if pi { (even, odd) } else { (odd, even) };
    if now_pi.n() >= now_other.n() {
        if now_pi.m() != 1 {
            return Err(gap("mixed majority class has one concentration", state));
        }
        majority_single(state, pi)
    } else {
        far_mix(state, !pi)
    }
}

/// The majority class holds a single concentration `a`.
fn majority_single(state: &mut MixState, pi: bool) -> Result<(), SynthesisError> {
    let e_pi = class(&state.e, pi);
    let e_other = class(&state.e, !pi);
    let a = e_pi.min().unwrap().clone();
    if e_other.is_empty() {
        return Err(gap("minority class is non-empty", state));
    }
    let (lo, hi) = (e_other.min().unwrap().clone(), e_other.max().unwrap().clone());
    if lo < a && a < hi {
        overlapping(state, &a, &e_other)
    } else {
        non_overlapping(state, &a, &e_other, pi)
    }
}

fn mix_or_near_final(state: &MixState, x: &Dyadic, y: &Dyadic) -> bool {
    if is_lambda_safe(&state.e, x, y, &state.ctx) {
        return true;
    }
    match state.e.apply_mix(x, y) {
        Ok(after) => x.is_even() == y.is_even() && super::is_structured_near_final(&after),
        Err(_) => false,
    }
}

/// `a` lies strictly inside the range of the minority class.
fn overlapping(state: &mut MixState, a: &Dyadic, e_other: &Configuration) -> Result<(), SynthesisError> {
    const L: &str = "far mix across an overlapping majority value";
    let b = e_other
        .entries()
        .find(|(_, k)| *k >= 2)
        .map(|(v, _)| v.clone())
        .ok_or_else(|| gap("minority non-singleton", state))?;
    let (lo, hi) = (e_other.min().unwrap().clone(), e_other.max().unwrap().clone());
    let far = farther(&b, &lo, &hi);
    let opposite = if far == lo { hi.clone() } else { lo.clone() };
    if mix_or_near_final(state, &b, &far) {
        return state.mix_checked(&b, &far, L);
    }
    let c = if b == opposite {
        if state.e.m() == 3 {
            return Err(gap("three concentrations give a near-final pair", state));
        }
        let between: Vec<&Dyadic> = e_other
            .values()
            .filter(|v| **v != far && **v != b && dist(v, &far) < dist(&b, &far))
            .collect();
        let far_side = between.iter().find(|v| dist(v, &far) < dist(a, &far));
        if let Some(c) = far_side {
            return state.mix_checked(&b, c, L);
        }
        (*between.first().ok_or_else(|| gap("value between the minority extremes", state))?).clone()
    } else {
        opposite
    };
    state.mix_checked(&b, &c, L)?;
    if state.is_near_final() {
        return Ok(());
    }
    let d = b.mid(&c);
    if is_even(&d) == is_even(&b) {
        state.mix_checked(&d, &far, L)
    } else {
        state.mix_checked(a, &d, L)
    }
}

/// `a` lies outside the range of the minority class.
fn non_overlapping(
    state: &mut MixState,
    a: &Dyadic,
    e_other: &Configuration,
    pi: bool,
) -> Result<(), SynthesisError> {
    const L: &str = "far mix beside a non-overlapping majority value";
    let delta = state.e.diam();
    let (lo, hi) = (e_other.min().unwrap().clone(), e_other.max().unwrap().clone());
    if at_least(&lo, &hi, &delta, 2 * GAMMA, 1) {
        let b = e_other
            .entries()
            .find(|(_, k)| *k >= 2)
            .map(|(v, _)| v.clone())
            .ok_or_else(|| gap("minority non-singleton", state))?;
        let far = farther(&b, &lo, &hi);
        return state.mix_checked(&b, &far, L);
    }
    e_mix(state, !pi)?;
    if state.is_near_final() {
        return Ok(());
    }
    let b = class(&state.e, pi)
        .values()
        .filter(|v| *v != a)
        .max_by(|x, y| dist(a, x).cmp(&dist(a, y)).then_with(|| y.cmp(x)))
        .cloned()
        .ok_or_else(|| gap("mixing the minority class produces the majority parity", state))?;
    state.mix_checked(a, &b, L)
}

/// The majority class spans a constant fraction of the diameter.
fn far_mix(state: &mut MixState, pi: bool) -> Result<(), SynthesisError> {
    const L: &str = "far mix in the majority class";
    let e_pi = class(&state.e, pi);
    let (a, b) = (e_pi.min().unwrap().clone(), e_pi.max().unwrap().clone());
    if is_lambda_safe(&state.e, &a, &b, &state.ctx) {
        return state.mix_checked(&a, &b, L);
    }
    let c = e_pi
        .values()
        .filter(|c| **c != a && **c != b)
        .find(|c| e_pi.values().all(|y| y == *c || is_lambda_safe(&state.e, c, y, &state.ctx)))
        .cloned()
        .ok_or_else(|| gap("value safe with every majority value", state))?;
    let far = farther(&c, &a, &b);
    state.mix_checked(&c, &far, L)
}

/// Mixes within the class of parity `pi` until it has no safe pair.
fn e_mix(state: &mut MixState, pi: bool) -> Result<(), SynthesisError> {
    const L: &str = "mixing one parity class";
    loop {
        if state.is_near_final() {
            return Ok(());
        }
        let e_pi = class(&state.e, pi);
        let pairs = lambda_safe_pairs(&state.e, e_pi.values(), &state.ctx);
        if pairs.is_empty() {
            return Ok(());
        }
        let delta = e_pi.diam();
        let (a, b) = (e_pi.min().unwrap().clone(), e_pi.max().unwrap().clone());
        if is_lambda_safe(&state.e, &a, &b, &state.ctx) {
            state.mix_checked(&a, &b, L)?;
            continue;
        }
        let doubles: Vec<Dyadic> = e_pi.entries().filter(|(_, k)| *k >= 2).map(|(v, _)| v.clone()).collect();
        match doubles.len() {
            0 => {
                let (c, d) = pairs
                    .iter()
                    .max_by(|p, q| (&p.1 - &p.0).cmp(&(&q.1 - &q.0)).then_with(|| q.cmp(p)))
                    .cloned()
                    .unwrap();
                state.mix_checked(&c, &d, L)?;
                let x = c.mid(&d);
                if at_least(&c, &d, &delta, 2, 1) || is_even(&x) != pi || state.is_near_final() {
                    continue;
                }
                let y = farther(&x, &a, &b);
                state.mix_checked(&x, &y, L)?;
            }
            1 => {
                let c = &doubles[0];
                let b2 = farther(c, &a, &b);
                if is_lambda_safe(&state.e, &b2, c, &state.ctx) {
                    state.mix_checked(&b2, c, L)?;
                    continue;
                }
                let d = e_pi
                    .values()
                    .filter(|v| *v != &b2 && *v != c)
                    .max_by(|x, y| dist(c, x).cmp(&dist(c, y)).then_with(|| y.cmp(x)))
                    .cloned()
                    .ok_or_else(|| gap("third value in the class", state))?;
                state.mix_checked(c, &d, L)?;
                let x = c.mid(&d);
                if at_least(c, &d, &delta, 2, 1) || is_even(&x) != pi || state.is_near_final() {
                    continue;
                }
                state.mix_checked(&b2, &x, L)?;
            }
            _ => {
                let c = &doubles[0];
                if *c == a {
                    if e_pi.multiplicity(&b) >= 2 {
                        let x = e_pi
                            .values()
                            .find(|v| **v != a && **v != b)
                            .cloned()
                            .ok_or_else(|| gap("value between two non-singletons", state))?;
                        let y = farther(&x, &a, &b);
                        state.mix_checked(&x, &y, L)?;
                    } else {
                        let d = a.mid(&b);
                        state.mix_checked(&b, &d, L)?;
                    }
                } else if at_least(&a, c, &delta, 2, 1) {
                    state.mix_checked(&a, c, L)?;
                } else if is_lambda_safe(&state.e, &b, c, &state.ctx) {
                    state.mix_checked(&b, c, L)?;
                } else {
                    let d = b.mid(c);
                    state.mix_checked(&b, &d, L)?;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::safety::{satisfies_invariant, SafetyContext};

    #[test]
    fn step_keeps_invariant_and_lowers_potential() {
        let mut v: Vec<i64> = (0..22).map(|i| 2 * i * i % 97).collect();
        v[0] = v[1];
        v[2] = v[3];
        let sum: i64 = v.iter().sum();
        let fix = (22 - sum.rem_euclid(22)) % 22;
        v[21] += fix;
        let e = Configuration::from_ints(&v);
        let ctx = SafetyContext::for_n(22);
        if !satisfies_invariant(&e, &ctx) {
            return;
        }
        let mut state = MixState::new(e.clone(), ctx);
        poly_step(&mut state).unwrap();
        assert!(!state.seq.is_empty());
        assert!(state.e.psi().unwrap() < e.psi().unwrap());
    }
}
