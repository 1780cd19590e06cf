//! Seeded random machines, configurations and states.
//!
//! Every generator draws from a caller-supplied RNG, so a case is fully
//! determined by `(seed, index)` through [`case_rng`].

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::machine::{AffineMap, InitialConfiguration, SignalMachine, SignalSet, Site};
use crate::scalar::ExactScalar;
use crate::simulator::RunState;

pub fn case_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn small_rational<S: ExactScalar>(rng: &mut impl Rng, num: std::ops::RangeInclusive<i64>, max_den: i64) -> S {
    S::from_ratio(rng.gen_range(num), rng.gen_range(1..=max_den))
}

/// `a > b > 0` with small numerators and denominators.
pub fn ordered_pair<S: ExactScalar>(rng: &mut impl Rng) -> (S, S) {
    loop {
        let a: S = small_rational(rng, 1..=40, 6);
        let b: S = small_rational(rng, 1..=40, 6);
        if a != b {
            return if a > b { (a, b) } else { (b, a) };
        }
    }
}

/// `i` fast and `j` slow signals in random order; `true` marks a fast one.
pub fn two_speed_arrangement(rng: &mut impl Rng, max_i: usize, max_j: usize) -> (usize, usize, Vec<bool>) {
    let i = rng.gen_range(1..=max_i);
    let j = rng.gen_range(1..=max_j);
    let mut order: Vec<bool> = std::iter::repeat_n(true, i).chain(std::iter::repeat_n(false, j)).collect();
    order.shuffle(rng);
    (i, j, order)
}

fn distinct_values<S: ExactScalar>(rng: &mut impl Rng, pool: &[S], n: usize) -> Vec<S> {
    let mut picked: Vec<S> = pool.choose_multiple(rng, n).cloned().collect();
    picked.sort();
    picked
}

fn speed_pool<S: ExactScalar>() -> Vec<S> {
    [(-2, 1), (-3, 2), (-1, 1), (-1, 2), (0, 1), (1, 3), (1, 2), (1, 1), (3, 2), (2, 1)]
        .iter()
        .map(|&(n, d)| S::from_ratio(n, d))
        .collect()
}

/// One pick per speed class, each class kept with probability `keep`.
fn random_cut(rng: &mut impl Rng, classes: &[Vec<usize>], keep: f64) -> SignalSet {
    let mut out = SignalSet::new();
    for c in classes {
        if rng.gen_bool(keep) {
            out.insert(*c.choose(rng).expect("non-empty class"));
        }
    }
    out
}

/// A machine with `speeds` distinct speeds, one or two signals each, and a
/// rule for every set of two or more signals of distinct speeds.
pub fn total_machine<S: ExactScalar>(rng: &mut impl Rng, speeds: usize) -> SignalMachine<S> {
    let values = distinct_values(rng, &speed_pool::<S>(), speeds);
    let mut m = SignalMachine::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (k, v) in values.iter().enumerate() {
        let n = rng.gen_range(1..=2);
        let ids =
            (0..n).map(|j| m.add_signal(&format!("s{k}{}", ["a", "b"][j]), v.clone()).expect("fresh name")).collect();
        classes.push(ids);
    }
    let mut inputs: Vec<SignalSet> = vec![SignalSet::new()];
    for class in &classes {
        let mut next = inputs.clone();
        for set in &inputs {
            for &id in class {
                let mut s = set.clone();
                s.insert(id);
                next.push(s);
            }
        }
        inputs = next;
    }
    for ins in inputs.into_iter().filter(|s| s.len() >= 2) {
        let outs = random_cut(rng, &classes, 0.55);
        m.add_rule(ins, outs).expect("generated rules are well formed");
    }
    m
}

/// Between two and `max_sites` sites on a half-integer grid in `[0, 8]`.
pub fn random_configuration<S: ExactScalar>(
    rng: &mut impl Rng,
    machine: &SignalMachine<S>,
    max_sites: usize,
) -> InitialConfiguration<S> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for v in machine.distinct_speeds() {
        classes.push(machine.signals().iter().filter(|s| *machine.speed(s.id) == v).map(|s| s.id).collect());
    }
    let grid: Vec<i64> = (0..=16).collect();
    let n = rng.gen_range(2..=max_sites.max(2));
    let mut xs: Vec<i64> = grid.choose_multiple(rng, n).copied().collect();
    xs.sort();
    let sites = xs
        .into_iter()
        .map(|x| {
            let mut signals = random_cut(rng, &classes, 0.4);
            if signals.is_empty() {
                signals.insert(*classes.choose(rng).and_then(|c| c.choose(rng)).expect("machine has signals"));
            }
            Site { position: S::from_ratio(x, 2), signals }
        })
        .collect();
    InitialConfiguration::from_sites(sites).expect("sites are sorted and non-empty")
}

/// A total three-speed rational machine with at most `max_sites` sites.
pub fn three_speed_case<S: ExactScalar>(
    rng: &mut impl Rng,
    max_sites: usize,
) -> (SignalMachine<S>, InitialConfiguration<S>) {
    let m = total_machine(rng, 3);
    let c = random_configuration(rng, &m, max_sites);
    (m, c)
}

pub fn affine_map<S: ExactScalar>(rng: &mut impl Rng) -> AffineMap<S> {
    let ratio: S = small_rational(rng, 1..=5, 4);
    let offset: S = small_rational(rng, -4..=4, 3);
    AffineMap::new(ratio, offset).expect("positive ratio")
}

/// A state with at most `max_signals` signals, drawn on a coarse grid so
/// that simultaneous and multi-signal meetings are common.
pub fn scheduler_state<S: ExactScalar>(rng: &mut impl Rng, max_signals: usize) -> (SignalMachine<S>, RunState<S>) {
    let pool: Vec<S> = [-2, -1, 0, 1, 2].iter().map(|&v| S::from_int(v)).collect();
    let mut m = SignalMachine::new();
    let n = rng.gen_range(2..=max_signals.max(2));
    for k in 0..n {
        m.add_signal(&format!("s{k}"), pool.choose(rng).expect("non-empty pool").clone()).expect("fresh name");
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    remaining.shuffle(rng);
    let mut used_x = BTreeSet::new();
    let mut sites = Vec::new();
    while !remaining.is_empty() {
        let x = rng.gen_range(-12..=12);
        if !used_x.insert(x) {
            continue;
        }
        let mut signals = SignalSet::new();
        let mut speeds = BTreeSet::new();
        let take = rng.gen_range(1..=3);
        remaining.retain(|&id| {
            if signals.len() < take && speeds.insert(m.speed(id).clone()) {
                signals.insert(id);
                false
            } else {
                true
            }
        });
        sites.push(Site { position: S::from_ratio(x, 2), signals });
    }
    sites.sort_by(|a, b| a.position.cmp(&b.position));
    let config = InitialConfiguration::from_sites(sites).expect("distinct sorted sites");
    let mut state = RunState::initial(&config);
    state.time = small_rational(rng, 0..=10, 3);
    (m, state)
}
